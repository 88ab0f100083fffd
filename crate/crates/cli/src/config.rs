use std::path::PathBuf;
use std::time::Duration;

use flatsteer::{parse_polynomial, Mode, Poly, SteerConfig};
use serde::{Deserialize, Deserializer, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    Moment,
    Nds,
}

impl From<ModeName> for Mode {
    fn from(m: ModeName) -> Mode {
        match m {
            ModeName::Moment => Mode::Moment,
            ModeName::Nds => Mode::Nds,
        }
    }
}

impl std::str::FromStr for ModeName {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "moment" => Ok(ModeName::Moment),
            "nds" => Ok(ModeName::Nds),
            _ => Err(CliError::Config(format!("unknown mode {s:?} (moment|nds)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Table,
}

/// Numerical knobs of the relaxation, steering and extraction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub tau_rank: f64,
    pub tau_flat: f64,
    pub tau_hankel: f64,
    pub tau_val: f64,
    pub tau_grad: f64,
    pub tau_weight: f64,
    pub solver_tol: f64,
    pub solver_max_iters: usize,
    pub accept_tol: f64,
    pub trace_cap: f64,
    pub rescale_limit: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let c = SteerConfig::default();
        Tolerances {
            tau_rank: c.tau_rank,
            tau_flat: c.tau_flat,
            tau_hankel: c.tau_hankel,
            tau_val: c.validate.tau_val,
            tau_grad: c.validate.tau_grad,
            tau_weight: c.extract.tau_weight,
            solver_tol: c.solver.tol,
            solver_max_iters: c.solver.max_iters,
            accept_tol: c.accept_tol,
            trace_cap: c.trace_cap,
            rescale_limit: c.rescale_limit,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub polynomial: String,
    pub mode: ModeName,
    /// Accepts numbers or fractions such as `"1/60"`.
    #[serde(deserialize_with = "lambdas_from_text_or_number")]
    pub lambdas: Vec<f64>,
    pub degree: Option<usize>,
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub max_outer_iters: usize,
    pub budget_s: f64,
    #[serde(default)]
    pub format: Format,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(polynomial: impl Into<String>, mode: ModeName) -> Self {
        let c = SteerConfig::default();
        RunConfig {
            polynomial: polynomial.into(),
            mode,
            lambdas: vec![1.0],
            degree: None,
            seed: 0,
            tolerances: Tolerances::default(),
            max_outer_iters: c.max_outer_iters,
            budget_s: c.budget.as_secs_f64(),
            format: Format::Json,
            out: None,
        }
    }

    /// Parses the polynomial and checks `λ ∈ [0, 1]` and `k ≥ deg f`.
    pub fn validate(&self) -> Result<Poly, CliError> {
        let f: Poly = parse_polynomial(&self.polynomial, None)
            .map_err(|e| CliError::Parse(e.to_string()))?;
        if let Some(&bad) = self.lambdas.iter().find(|l| !(0.0..=1.0).contains(*l)) {
            return Err(CliError::Config(format!("lambda {bad} is outside [0, 1]")));
        }
        if let Some(k) = self.degree {
            if k < f.degree() as usize {
                return Err(CliError::Config(format!(
                    "degree {k} is below the polynomial degree {}",
                    f.degree()
                )));
            }
        }
        if !(self.budget_s >= 0.0) {
            return Err(CliError::Config(format!("budget {} is negative", self.budget_s)));
        }
        Ok(f)
    }

    pub fn steer_config(&self, seed: u64) -> SteerConfig {
        let t = &self.tolerances;
        let mut c = SteerConfig {
            tau_rank: t.tau_rank,
            tau_flat: t.tau_flat,
            tau_hankel: t.tau_hankel,
            max_outer_iters: self.max_outer_iters,
            budget: Duration::from_secs_f64(self.budget_s),
            degree: self.degree,
            seed,
            trace_cap: t.trace_cap,
            rescale_limit: t.rescale_limit,
            accept_tol: t.accept_tol,
            ..SteerConfig::default()
        };
        c.solver.tol = t.solver_tol;
        c.solver.max_iters = t.solver_max_iters;
        c.solver.seed = seed;
        c.extract.seed = seed;
        c.extract.tau_weight = t.tau_weight;
        c.validate.tau_val = t.tau_val;
        c.validate.tau_grad = t.tau_grad;
        c
    }
}

/// `"0.25"`, `"1/60"` or `"1"`.
pub fn parse_lambda(text: &str) -> Result<f64, CliError> {
    let text = text.trim();
    let bad = || CliError::Config(format!("cannot read lambda {text:?}"));
    let value = match text.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().map_err(|_| bad())?;
            let den: f64 = den.trim().parse().map_err(|_| bad())?;
            if den == 0.0 {
                return Err(bad());
            }
            num / den
        }
        None => text.parse().map_err(|_| bad())?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(bad())
    }
}

fn lambdas_from_text_or_number<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Item {
        Number(f64),
        Text(String),
    }
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(Item),
        Many(Vec<Item>),
    }
    let items = match OneOrMany::deserialize(d)? {
        OneOrMany::One(i) => vec![i],
        OneOrMany::Many(v) => v,
    };
    items
        .into_iter()
        .map(|i| match i {
            Item::Number(x) => Ok(x),
            Item::Text(s) => parse_lambda(&s).map_err(serde::de::Error::custom),
        })
        .collect()
}
