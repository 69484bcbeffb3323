//! `lsv-smile`: config files in, CSV tables out.
//!
//! Exit codes: 0 on success, 1 on numerical failure, 2 on usage error.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lsv_core::asymptotics::{call_asymptote, smile};
use lsv_core::geometry::{gauss_curvature, solve_line_geodesic};
use lsv_core::heatkernel::kernel_factors;
use lsv_core::model::{audit_assumptions, parse_model, AuditGrid};
use lsv_core::pricing_oracle::{bs_vega, mc_prices, MCConfig, OptionKind};
use lsv_core::{LsvError, ModelSpec};

use output::{Cell, RunManifest, Table};

#[derive(Parser)]
#[command(
    name = "lsv-smile",
    version,
    about = "Small-time smile asymptotics for LSV models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the model assumptions on a grid. Failing checks are reported,
    /// not treated as errors.
    Audit {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Leading-order smile with its O(t) and jump corrections.
    Smile {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        t: f64,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Leading small-time call price asymptote.
    Price {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        t: f64,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo prices and implied vols.
    Mc {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        t: f64,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        mc: McArgs,
        /// Price puts instead of calls.
        #[arg(long)]
        put: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Geodesic from (x0, y0) to the line x = x0 + x1, with curvature.
    Geodesic {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, allow_negative_numbers = true)]
        x1: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Heat kernel factors at the endpoint of the line geodesic.
    Kernel {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, allow_negative_numbers = true)]
        x1: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Asymptotic smile against Monte Carlo implied vols.
    Compare {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        t: f64,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        mc: McArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ModelArgs {
    /// Model config file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Replace the config's default intensity λ.
    #[arg(long)]
    lambda_override: Option<f64>,
}

/// Log-moneyness grid: either an explicit list or min/max/steps.
#[derive(Args)]
struct GridArgs {
    #[arg(long, allow_negative_numbers = true)]
    x_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    x_max: Option<f64>,
    #[arg(long)]
    x_steps: Option<usize>,
    /// Comma-separated log-moneyness values.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    strikes: Vec<f64>,
}

#[derive(Args)]
struct McArgs {
    #[arg(long, default_value_t = 100_000)]
    paths: usize,
    #[arg(long, default_value_t = 200)]
    steps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    antithetic: bool,
}

impl McArgs {
    fn config(&self) -> MCConfig {
        MCConfig {
            paths: self.paths,
            steps: self.steps,
            seed: self.seed,
            antithetic: self.antithetic,
        }
    }
}

enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<LsvError> for Failure {
    fn from(e: LsvError) -> Self {
        match e {
            LsvError::InvalidInput(_)
            | LsvError::UnknownFamily { .. }
            | LsvError::ParameterOutOfRange { .. }
            | LsvError::MissingParameter(_)
            | LsvError::Config(_) => Failure::Usage(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

fn io_failure(path: Option<&Path>, e: std::io::Error) -> Failure {
    let target = path.map_or("stdout".to_string(), |p| p.display().to_string());
    Failure::Numerical(format!("cannot write {target}: {e}"))
}

impl ModelArgs {
    fn load(&self) -> std::result::Result<ModelSpec, Failure> {
        let text = std::fs::read_to_string(&self.config)
            .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", self.config.display())))?;
        let mut model = parse_model(&text)?;
        if let Some(l) = self.lambda_override {
            model = model.with_lambda(l);
            model.validate()?;
        }
        Ok(model)
    }
}

impl GridArgs {
    fn resolve(&self) -> std::result::Result<Vec<f64>, Failure> {
        let xs = match (self.x_min, self.x_max, self.x_steps) {
            (None, None, None) => self.strikes.clone(),
            (Some(a), Some(b), Some(n)) if self.strikes.is_empty() => match n {
                0 => Vec::new(),
                1 => vec![a],
                _ => (0..n)
                    .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
                    .collect(),
            },
            _ => {
                return Err(Failure::Usage(
                    "give either --strikes or all of --x-min, --x-max, --x-steps".into(),
                ))
            }
        };
        if xs.is_empty() {
            return Err(Failure::Usage("empty strike grid".into()));
        }
        if let Some(x) = xs.iter().find(|x| !x.is_finite()) {
            return Err(Failure::Usage(format!("non-finite grid value {x}")));
        }
        Ok(xs)
    }
}

fn manifest(command: &str, model: &ModelSpec, out: &Option<PathBuf>) -> RunManifest {
    let mut m = RunManifest::new(command, out.clone());
    m.config = Some(model.to_config_string());
    m
}

fn emit(table: &Table, m: &RunManifest, comments: &[String]) -> Outcome {
    table
        .emit(m, comments)
        .map_err(|e| io_failure(m.output.as_deref(), e))
}

fn collect<T>(
    results: Vec<lsv_core::Result<T>>,
    xs: &[f64],
) -> std::result::Result<Vec<T>, Failure> {
    results
        .into_iter()
        .zip(xs)
        .map(|(r, x)| {
            r.map_err(|e| match Failure::from(e) {
                Failure::Usage(s) => Failure::Usage(format!("at x = {x}: {s}")),
                Failure::Numerical(s) => Failure::Numerical(format!("at x = {x}: {s}")),
            })
        })
        .collect()
}

fn cmd_audit(model: ModelArgs, out: Option<PathBuf>) -> Outcome {
    let spec = model.load()?;
    let m = manifest("audit", &spec, &out);
    let grid = AuditGrid::default();
    let report = audit_assumptions(&spec, &grid);
    let mut table = Table::new(&["check", "passed", "witness", "value"]);
    for c in &report.checks {
        if c.witness.is_empty() {
            table.push(vec![
                c.name.as_str().into(),
                c.passed.into(),
                "".into(),
                Cell::Invalid,
            ]);
        }
        for (k, v) in &c.witness {
            table.push(vec![
                c.name.as_str().into(),
                c.passed.into(),
                k.as_str().into(),
                (*v).into(),
            ]);
        }
    }
    let mut comments = vec![format!("grid: {grid}")];
    comments.extend(report.warnings.iter().map(|w| format!("warning: {w}")));
    comments.push(format!("all_passed: {}", report.all_passed()));
    emit(&table, &m, &comments)
}

fn cmd_smile(model: ModelArgs, t: f64, grid: GridArgs, out: Option<PathBuf>) -> Outcome {
    let spec = model.load()?;
    let xs = grid.resolve()?;
    let m = manifest("smile", &spec, &out);
    let points = collect(smile(&spec, &xs, t), &xs)?;
    let mut table = Table::new(&[
        "x",
        "sigma0",
        "a",
        "a_jump",
        "sigma_t",
        "sigma_t_jump",
        "d",
        "y1_star",
        "A_SV",
    ]);
    for p in points {
        table.push(vec![
            p.x.into(),
            p.sigma0.into(),
            p.a.into(),
            p.a_jump.into(),
            p.sigma_t.into(),
            p.sigma_t_jump.into(),
            p.d.into(),
            p.y1_star.into(),
            p.a_sv.into(),
        ]);
    }
    emit(&table, &m, &[format!("t: {t}")])
}

fn cmd_price(model: ModelArgs, t: f64, grid: GridArgs, out: Option<PathBuf>) -> Outcome {
    let spec = model.load()?;
    let xs = grid.resolve()?;
    let m = manifest("price", &spec, &out);
    let s0 = spec.s0();
    let results: Vec<_> = {
        use rayon::prelude::*;
        xs.par_iter()
            .map(|&x| call_asymptote(&spec, s0 * x.exp(), t))
            .collect()
    };
    let prices = collect(results, &xs)?;
    let mut table = Table::new(&[
        "x",
        "strike",
        "intrinsic",
        "leading_term",
        "price",
        "A_SV",
        "phi_star",
    ]);
    for (x, c) in xs.iter().zip(prices) {
        table.push(vec![
            (*x).into(),
            c.strike.into(),
            c.intrinsic.into(),
            c.leading_term.into(),
            c.price().into(),
            c.a_sv.into(),
            c.phi_star.into(),
        ]);
    }
    emit(&table, &m, &[format!("t: {t}")])
}

fn cmd_mc(
    model: ModelArgs,
    t: f64,
    grid: GridArgs,
    mc: McArgs,
    put: bool,
    out: Option<PathBuf>,
) -> Outcome {
    let spec = model.load()?;
    let xs = grid.resolve()?;
    let mut m = manifest("mc", &spec, &out);
    m.seed = Some(mc.seed);
    let strikes: Vec<f64> = xs.iter().map(|x| spec.s0() * x.exp()).collect();
    let kind = if put {
        OptionKind::Put
    } else {
        OptionKind::Call
    };
    let est = mc_prices(&spec, &strikes, t, kind, &mc.config())?;
    let mut table = Table::new(&["x", "mc_price", "stderr", "mc_ivol"]);
    for (x, e) in xs.iter().zip(est) {
        table.push(vec![
            (*x).into(),
            e.price.into(),
            e.stderr.into(),
            e.implied_vol.into(),
        ]);
    }
    let comments = vec![
        format!("t: {t}"),
        format!("option: {}", if put { "put" } else { "call" }),
        format!(
            "paths: {} steps: {} antithetic: {}",
            mc.paths, mc.steps, mc.antithetic
        ),
    ];
    emit(&table, &m, &comments)
}

fn cmd_geodesic(model: ModelArgs, x1: f64, out: Option<PathBuf>) -> Outcome {
    let spec = model.load()?;
    let m = manifest("geodesic", &spec, &out);
    let geo = solve_line_geodesic(&spec, x1)?;
    let mut table = Table::new(&["s", "x", "y", "kappa"]);
    for p in &geo.path {
        let k = gauss_curvature(&spec, p.x, p.y)?;
        table.push(vec![p.s.into(), p.x.into(), p.y.into(), k.into()]);
    }
    let comments = vec![
        format!("x1: {x1}"),
        format!("d: {}", geo.d),
        format!("y1_star: {}", geo.y1_star),
    ];
    emit(&table, &m, &comments)
}

fn cmd_kernel(model: ModelArgs, x1: f64, out: Option<PathBuf>) -> Outcome {
    let spec = model.load()?;
    let m = manifest("kernel", &spec, &out);
    let geo = solve_line_geodesic(&spec, x1)?;
    let k = kernel_factors(&spec, &geo)?;
    let mut table = Table::new(&["quantity", "value"]);
    for (name, v) in [
        ("x1", x1),
        ("y1_star", geo.y1_star),
        ("d", geo.d),
        ("u0", k.u0),
        ("work", k.work),
        ("p", k.p),
        ("psi", k.psi),
        ("phi", k.phi),
        ("phi_second", k.phi_second),
    ] {
        table.push(vec![name.into(), v.into()]);
    }
    emit(&table, &m, &[])
}

fn cmd_compare(
    model: ModelArgs,
    t: f64,
    grid: GridArgs,
    mc: McArgs,
    out: Option<PathBuf>,
) -> Outcome {
    let spec = model.load()?;
    let xs = grid.resolve()?;
    let mut m = manifest("compare", &spec, &out);
    m.seed = Some(mc.seed);
    let points = collect(smile(&spec, &xs, t), &xs)?;
    let strikes: Vec<f64> = xs.iter().map(|x| spec.s0() * x.exp()).collect();
    let est = mc_prices(&spec, &strikes, t, OptionKind::Call, &mc.config())?;
    let mut table = Table::new(&[
        "x",
        "sigma0",
        "sigma_corrected",
        "mc_ivol",
        "mc_stderr",
        "rel_err_corrected_vs_mc",
        "a",
        "a_mc_implied",
    ]);
    for (p, e) in points.iter().zip(est) {
        // stderr of the implied vol by the delta method, price stderr / vega
        let iv_stderr = e
            .implied_vol
            .map(|iv| e.stderr / bs_vega(spec.s0(), spec.s0() * p.x.exp(), t, iv));
        let rel = match (p.sigma_t_jump, e.implied_vol) {
            (Some(s), Some(iv)) => Some((s - iv) / iv),
            _ => None,
        };
        let a_mc = e.implied_vol.map(|iv| (iv * iv - p.sigma0 * p.sigma0) / t);
        table.push(vec![
            p.x.into(),
            p.sigma0.into(),
            p.sigma_t_jump.into(),
            e.implied_vol.into(),
            iv_stderr.into(),
            rel.into(),
            p.a_jump.into(),
            a_mc.into(),
        ]);
    }
    let comments = vec![
        format!("t: {t}"),
        format!(
            "paths: {} steps: {} antithetic: {}",
            mc.paths, mc.steps, mc.antithetic
        ),
        "sigma_corrected and a include the jump-to-default adjustment (equal to the diffusive values when lambda = 0)".into(),
    ];
    emit(&table, &m, &comments)
}

fn configure_threads() -> Outcome {
    let Ok(v) = std::env::var("LSV_SMILE_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
        Failure::Usage(format!(
            "LSV_SMILE_THREADS must be a positive integer, got `{v}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Numerical(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Outcome {
    configure_threads()?;
    match cli.command {
        Command::Audit { model, out } => cmd_audit(model, out),
        Command::Smile {
            model,
            t,
            grid,
            out,
        } => cmd_smile(model, t, grid, out),
        Command::Price {
            model,
            t,
            grid,
            out,
        } => cmd_price(model, t, grid, out),
        Command::Mc {
            model,
            t,
            grid,
            mc,
            put,
            out,
        } => cmd_mc(model, t, grid, mc, put, out),
        Command::Geodesic { model, x1, out } => cmd_geodesic(model, x1, out),
        Command::Kernel { model, x1, out } => cmd_kernel(model, x1, out),
        Command::Compare {
            model,
            t,
            grid,
            mc,
            out,
        } => cmd_compare(model, t, grid, mc, out),
    }
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors by itself
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
