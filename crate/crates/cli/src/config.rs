//! The JSON run configuration.

use std::path::PathBuf;

use serde::Deserialize;
use solitary_core::assumptions::ScanParams;
use solitary_core::dsl::symbol_from_str;
use solitary_core::models::{abcd_operators, abcd_violation, reduce_system_unchecked};
use solitary_core::solver::SolveConfig;
use solitary_core::{custom_system, make_abcd, make_builtin, Error, MultiplierSymbol, SystemSpec};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: String,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub c: Option<f64>,
    pub d: Option<f64>,
    #[serde(rename = "M")]
    pub m: Option<String>,
    #[serde(rename = "F")]
    pub f: Option<String>,
    #[serde(rename = "G")]
    pub g: Option<String>,
    #[serde(rename = "H")]
    pub h: Option<String>,
    #[serde(rename = "T_outer")]
    pub t_outer: Option<String>,
    #[serde(rename = "T_inner")]
    pub t_inner: Option<String>,
    /// Coefficient of the trilinear sandwich `P(f Q(gh))`; defaults to 1/2.
    #[serde(rename = "T_coeff")]
    pub t_coeff: Option<f64>,
    #[serde(default)]
    pub grid: GridBlock,
    #[serde(default)]
    pub solve: SolveBlock,
    #[serde(default)]
    pub check: CheckBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    #[serde(rename = "L", default = "default_l")]
    pub l: f64,
    #[serde(rename = "N", default = "default_n")]
    pub n: usize,
}

impl Default for GridBlock {
    fn default() -> Self {
        Self {
            l: default_l(),
            n: default_n(),
        }
    }
}

fn default_l() -> f64 {
    SolveConfig::default().half_length
}

fn default_n() -> usize {
    SolveConfig::default().n
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveBlock {
    #[serde(default = "default_s")]
    pub s: f64,
    pub eps: Option<f64>,
    pub eps_list: Option<Vec<f64>>,
    #[serde(default = "default_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_tail_tol")]
    pub tail_tol: f64,
    /// Independent solves from the KdV seed, run in parallel.
    #[serde(default)]
    pub cold_start: bool,
}

impl Default for SolveBlock {
    fn default() -> Self {
        Self {
            s: default_s(),
            eps: None,
            eps_list: None,
            newton_tol: default_tol(),
            max_iter: default_max_iter(),
            tail_tol: default_tail_tol(),
            cold_start: false,
        }
    }
}

fn default_s() -> f64 {
    SolveConfig::default().s
}

fn default_tol() -> f64 {
    SolveConfig::default().newton_tol
}

fn default_max_iter() -> usize {
    SolveConfig::default().max_iter
}

fn default_tail_tol() -> f64 {
    SolveConfig::default().tail_tol
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckBlock {
    pub xi1: Option<f64>,
    #[serde(default = "default_xi_max")]
    pub xi_max: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

impl Default for CheckBlock {
    fn default() -> Self {
        Self {
            xi1: None,
            xi_max: default_xi_max(),
            samples: default_samples(),
        }
    }
}

fn default_xi_max() -> f64 {
    ScanParams::default().xi_max
}

fn default_samples() -> usize {
    ScanParams::default().samples
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            formats: default_formats(),
        }
    }
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Model built without enforcing the abcd conditions, for `check`.
pub struct CheckedModel {
    pub spec: SystemSpec,
    pub violation: Option<Error>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn solve_config(&self) -> Result<SolveConfig, Error> {
        let cfg = SolveConfig {
            s: self.solve.s,
            half_length: self.grid.l,
            n: self.grid.n,
            newton_tol: self.solve.newton_tol,
            max_iter: self.solve.max_iter,
            tail_tol: self.solve.tail_tol,
        };
        cfg.validate()?;
        cfg.grid()?;
        Ok(cfg)
    }

    pub fn scan(&self) -> ScanParams {
        ScanParams {
            xi_max: self.check.xi_max,
            samples: self.check.samples,
        }
    }

    pub fn wants(&self, f: Format) -> bool {
        self.output.formats.contains(&f)
    }

    fn abcd_params(&self) -> Result<(f64, f64, f64, f64), Error> {
        match (self.a, self.b, self.c, self.d) {
            (Some(a), Some(b), Some(c), Some(d)) => Ok((a, b, c, d)),
            _ => Err(Error::InvalidConfig(
                "abcd model needs a, b, c and d".into(),
            )),
        }
    }

    fn reject_extra_keys(&self) -> Result<(), Error> {
        let abcd = [self.a, self.b, self.c, self.d].iter().any(Option::is_some);
        let custom = [
            &self.m,
            &self.f,
            &self.g,
            &self.h,
            &self.t_outer,
            &self.t_inner,
        ]
        .iter()
        .any(|s| s.is_some())
            || self.t_coeff.is_some();
        let bad = match self.model.as_str() {
            "abcd" => custom,
            "custom" => abcd,
            _ => abcd || custom,
        };
        if bad {
            return Err(Error::InvalidConfig(format!(
                "keys given that do not belong to model `{}`",
                self.model
            )));
        }
        Ok(())
    }

    fn with_xi1(&self, mut spec: SystemSpec) -> Result<SystemSpec, Error> {
        if let Some(xi1) = self.check.xi1 {
            if !(xi1 > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "xi1 must be positive, got {xi1}"
                )));
            }
            spec.xi1 = xi1;
        }
        Ok(spec)
    }

    pub fn build_model(&self) -> Result<SystemSpec, Error> {
        self.reject_extra_keys()?;
        let spec = match self.model.as_str() {
            "abcd" => {
                let (a, b, c, d) = self.abcd_params()?;
                make_abcd(a, b, c, d)?
            }
            "custom" => self.build_custom()?,
            name => make_builtin(name)?,
        };
        self.with_xi1(spec)
    }

    /// Like [`build_model`](Self::build_model), but an abcd parameter set
    /// that breaks one of the conditions is still reduced so it can be scanned.
    pub fn build_model_for_check(&self) -> Result<CheckedModel, Error> {
        if self.model != "abcd" {
            return Ok(CheckedModel {
                spec: self.build_model()?,
                violation: None,
            });
        }
        self.reject_extra_keys()?;
        let (a, b, c, d) = self.abcd_params()?;
        match abcd_violation(a, b, c, d) {
            None => Ok(CheckedModel {
                spec: self.build_model()?,
                violation: None,
            }),
            Some(which) => {
                let ops = abcd_operators(a, b, c, d);
                let spec = reduce_system_unchecked(&ops, &format!("abcd({a}, {b}, {c}, {d})"));
                Ok(CheckedModel {
                    spec: self.with_xi1(spec)?,
                    violation: Some(Error::AbcdConditionViolated { which }),
                })
            }
        }
    }

    fn build_custom(&self) -> Result<SystemSpec, Error> {
        let need = |name: &str, s: &Option<String>| {
            s.as_deref()
                .ok_or_else(|| Error::InvalidConfig(format!("custom model needs `{name}`")))
                .and_then(|t| Ok(symbol_from_str(t)?.with_label(t)))
        };
        let optional = |s: &Option<String>| -> Result<MultiplierSymbol, Error> {
            match s {
                Some(t) => Ok(symbol_from_str(t)?.with_label(t.as_str())),
                None => Ok(MultiplierSymbol::one()),
            }
        };
        let mut spec = custom_system(
            need("M", &self.m)?,
            need("F", &self.f)?,
            need("G", &self.g)?,
            need("H", &self.h)?,
            optional(&self.t_outer)?,
            optional(&self.t_inner)?,
            self.t_coeff.unwrap_or(0.5),
        )?;
        spec.name = "custom".into();
        Ok(spec)
    }
}
