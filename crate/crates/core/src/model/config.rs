//! Model config files.
//!
//! A config is a TOML document with one table per coefficient plus a
//! `[model]` table:
//!
//! ```toml
//! [model]
//! rho = 0.0      # optional, default 0
//! lambda = 0.0   # optional, default 0
//! x0 = 0.0       # optional, default 0
//! y0 = 0.2
//!
//! [sigma]
//! family = "constant"   # value
//! value = 1.0
//!
//! [alpha]
//! family = "power"      # nu, p
//! nu = 1.0
//! p = 1.0
//!
//! [mu]
//! family = "zero"       # or "rational" (mu0, kappa) or "prop45" (c)
//! ```
//!
//! The logistic σ family takes bounds `low`/`high` plus `steepness` and `center`.
//! Unknown keys are rejected.

use toml::{Table, Value};

use super::{AlphaFamily, ModelSpec, MuFamily, SigmaFamily};
use crate::error::{LsvError, Result};

/// Parse and validate a model config document.
pub fn parse_model(text: &str) -> Result<ModelSpec> {
    let table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| LsvError::Config(e.to_string()))?;
    build_model(&table)
}

/// Build a validated [`ModelSpec`] from an already parsed config table.
pub fn build_model(config: &Table) -> Result<ModelSpec> {
    for key in config.keys() {
        if !matches!(key.as_str(), "model" | "sigma" | "alpha" | "mu") {
            return Err(LsvError::Config(format!("unknown section `{key}`")));
        }
    }
    let model = Section::new(config, "model")?;
    model.only(&["rho", "lambda", "x0", "y0"])?;

    let sigma = {
        let s = Section::new(config, "sigma")?;
        match s.family()?.as_str() {
            "constant" | "sigma-constant" => {
                s.only(&["family", "value"])?;
                SigmaFamily::Constant {
                    value: s.number("value")?,
                }
            }
            "logistic" | "sigma-logistic" => {
                s.only(&["family", "low", "high", "steepness", "center"])?;
                SigmaFamily::Logistic {
                    low: s.number("low")?,
                    high: s.number("high")?,
                    steepness: s.number("steepness")?,
                    center: s.number("center")?,
                }
            }
            other => return Err(unknown("sigma", other)),
        }
    };

    let alpha = {
        let s = Section::new(config, "alpha")?;
        match s.family()?.as_str() {
            "power" | "alpha-power" => {
                s.only(&["family", "nu", "p"])?;
                AlphaFamily::Power {
                    nu: s.number("nu")?,
                    p: s.number("p")?,
                }
            }
            other => return Err(unknown("alpha", other)),
        }
    };

    let mu = {
        let s = Section::new(config, "mu")?;
        match s.family()?.as_str() {
            "zero" | "mu-zero" => {
                s.only(&["family"])?;
                MuFamily::Zero
            }
            "rational" | "mu-rational" => {
                s.only(&["family", "mu0", "kappa"])?;
                MuFamily::Rational {
                    mu0: s.number("mu0")?,
                    kappa: s.number("kappa")?,
                }
            }
            "prop45" | "mu-prop45" => {
                s.only(&["family", "c"])?;
                MuFamily::Prop45 { c: s.number("c")? }
            }
            other => return Err(unknown("mu", other)),
        }
    };

    let spec = ModelSpec {
        sigma,
        alpha,
        mu,
        rho: model.number_or("rho", 0.0)?,
        lambda: model.number_or("lambda", 0.0)?,
        x0: model.number_or("x0", 0.0)?,
        y0: model.number("y0")?,
    };
    spec.validate()?;
    Ok(spec)
}

impl ModelSpec {
    /// Render the model back into the config format; `parse_model` of the
    /// result reproduces `self` exactly.
    pub fn to_config_string(&self) -> String {
        let mut out = format!(
            "[model]\nrho = {:?}\nlambda = {:?}\nx0 = {:?}\ny0 = {:?}\n\n",
            self.rho, self.lambda, self.x0, self.y0
        );
        match self.sigma {
            SigmaFamily::Constant { value } => {
                out += &format!("[sigma]\nfamily = \"constant\"\nvalue = {value:?}\n\n")
            }
            SigmaFamily::Logistic {
                low,
                high,
                steepness,
                center,
            } => {
                out += &format!(
                    "[sigma]\nfamily = \"logistic\"\nlow = {low:?}\nhigh = {high:?}\nsteepness = {steepness:?}\ncenter = {center:?}\n\n"
                )
            }
        }
        match self.alpha {
            AlphaFamily::Power { nu, p } => {
                out += &format!("[alpha]\nfamily = \"power\"\nnu = {nu:?}\np = {p:?}\n\n")
            }
        }
        match self.mu {
            MuFamily::Zero => out += "[mu]\nfamily = \"zero\"\n",
            MuFamily::Rational { mu0, kappa } => {
                out += &format!("[mu]\nfamily = \"rational\"\nmu0 = {mu0:?}\nkappa = {kappa:?}\n")
            }
            MuFamily::Prop45 { c } => out += &format!("[mu]\nfamily = \"prop45\"\nc = {c:?}\n"),
        }
        out
    }
}

fn unknown(coefficient: &str, family: &str) -> LsvError {
    LsvError::UnknownFamily {
        coefficient: coefficient.into(),
        family: family.into(),
    }
}

struct Section<'a> {
    name: &'static str,
    table: &'a Table,
}

impl<'a> Section<'a> {
    fn new(config: &'a Table, name: &'static str) -> Result<Self> {
        match config.get(name) {
            Some(Value::Table(table)) => Ok(Self { name, table }),
            Some(_) => Err(LsvError::Config(format!("`{name}` must be a table"))),
            None => Err(LsvError::Config(format!("missing section `[{name}]`"))),
        }
    }

    fn only(&self, allowed: &[&str]) -> Result<()> {
        match self.table.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(LsvError::Config(format!(
                "unknown key `{}.{k}` (expected one of {allowed:?})",
                self.name
            ))),
            None => Ok(()),
        }
    }

    fn family(&self) -> Result<String> {
        match self.table.get("family") {
            Some(Value::String(s)) => Ok(s.clone()),
            Some(_) => Err(LsvError::Config(format!(
                "`{}.family` must be a string",
                self.name
            ))),
            None => Err(LsvError::MissingParameter(format!("{}.family", self.name))),
        }
    }

    fn number(&self, key: &str) -> Result<f64> {
        match self.table.get(key) {
            Some(Value::Float(v)) => Ok(*v),
            Some(Value::Integer(v)) => Ok(*v as f64),
            Some(_) => Err(LsvError::Config(format!(
                "`{}.{key}` must be a number",
                self.name
            ))),
            None => Err(LsvError::MissingParameter(format!("{}.{key}", self.name))),
        }
    }

    fn number_or(&self, key: &str, default: f64) -> Result<f64> {
        if self.table.contains_key(key) {
            self.number(key)
        } else {
            Ok(default)
        }
    }
}
