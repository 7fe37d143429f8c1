//! Run configuration: TOML on disk, validated into solver inputs.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use slriesz::bc_model::{CanonicalBc, Family, GeneralBc, Sigma};
use slriesz::potential::{normalize_mean, EndpointRule, Potential, Shape, Smoothness};
use slriesz::C64;

use crate::error::CliError;

/// A complex number written either as a real scalar or as `[re, im]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexValue {
    Real(f64),
    Pair([f64; 2]),
}

impl ComplexValue {
    pub fn value(self) -> C64 {
        match self {
            ComplexValue::Real(r) => C64::new(r, 0.0),
            ComplexValue::Pair([re, im]) => C64::new(re, im),
        }
    }
}

/// Boundary conditions, raw or canonical.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BcBlock {
    /// `a1 y'(0) + b1 y'(1) + a0 y(0) + b0 y(1) = 0`, `c0 y(0) + d0 y(1) = 0`.
    General {
        a1: ComplexValue,
        b1: ComplexValue,
        a0: ComplexValue,
        b0: ComplexValue,
        c0: ComplexValue,
        d0: ComplexValue,
    },
    /// `family` is `"T1"` or `"T2"`, `sigma` is 0 or 1; `p` and `r` are the two
    /// family parameters.
    Canonical {
        family: String,
        sigma: i64,
        p: ComplexValue,
        r: ComplexValue,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialBlock {
    /// `zero`, `cos`, `sin`, `sawtooth`, `smooth_step`, `polynomial` or `samples`.
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    /// `ac` or `l1`; defaults to the natural class of the shape.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothness: Option<String>,
    /// Subtract the mean. Defaults to true for polynomials and samples.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalize_mean: Option<bool>,
}

fn one() -> f64 {
    1.0
}

impl Default for PotentialBlock {
    fn default() -> Self {
        Self {
            kind: "zero".into(),
            k: None,
            amplitude: 1.0,
            center: None,
            width: None,
            coeffs: None,
            values: None,
            smoothness: None,
            normalize_mean: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegimeChoice {
    #[default]
    Auto,
    Unperturbed,
    L1,
    Ac,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleChoice {
    /// `q(0) - q(1)` for both parities.
    #[default]
    Jump,
    /// `q(0) + (-1)^sigma q(1)`.
    Printed,
}

impl From<RuleChoice> for EndpointRule {
    fn from(r: RuleChoice) -> Self {
        match r {
            RuleChoice::Jump => EndpointRule::Jump,
            RuleChoice::Printed => EndpointRule::Printed,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ode: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eig: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigsBlock {
    /// Compute normalized eigenfunctions (needed for BC residuals).
    #[serde(default = "yes")]
    pub eigenfunctions: bool,
    /// Points of the determinant trace along the real axis; 0 disables it.
    #[serde(default)]
    pub trace_points: usize,
}

fn yes() -> bool {
    true
}

impl Default for EigsBlock {
    fn default() -> Self {
        Self {
            eigenfunctions: true,
            trace_points: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleBlock {
    #[serde(default = "default_grid")]
    pub grid: usize,
    /// Largest window index compared.
    #[serde(default = "default_oracle_n")]
    pub n_max: i64,
}

fn default_grid() -> usize {
    2000
}

fn default_oracle_n() -> i64 {
    8
}

impl Default for OracleBlock {
    fn default() -> Self {
        Self {
            grid: default_grid(),
            n_max: default_oracle_n(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Inclusive window range `[n_min, n_max]`.
    #[serde(default = "default_range")]
    pub n_range: [i64; 2],
    #[serde(default)]
    pub regime: RegimeChoice,
    #[serde(default)]
    pub endpoint_rule: RuleChoice,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    pub bc: BcBlock,
    #[serde(default)]
    pub potential: PotentialBlock,
    #[serde(default)]
    pub tolerances: ToleranceBlock,
    #[serde(default)]
    pub eigs: EigsBlock,
    #[serde(default)]
    pub oracle: OracleBlock,
}

fn default_range() -> [i64; 2] {
    [5, 40]
}

fn default_output() -> PathBuf {
    PathBuf::from("slriesz-out")
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let [lo, hi] = self.n_range;
        if lo < 0 || lo > hi {
            return Err(CliError::Config(format!(
                "n_range [{lo}, {hi}] is empty or negative"
            )));
        }
        for (name, v) in [
            ("ode", self.tolerances.ode),
            ("quad", self.tolerances.quad),
            ("eig", self.tolerances.eig),
        ] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(CliError::Config(format!(
                        "tolerance {name} must be positive, got {v}"
                    )));
                }
            }
        }
        if self.oracle.grid < 8 {
            return Err(CliError::Config("oracle grid must be at least 8".into()));
        }
        Ok(())
    }

    pub fn general_bc(&self) -> Result<GeneralBc, CliError> {
        match &self.bc {
            BcBlock::General {
                a1,
                b1,
                a0,
                b0,
                c0,
                d0,
            } => Ok(GeneralBc::new(
                a1.value(),
                b1.value(),
                a0.value(),
                b0.value(),
                c0.value(),
                d0.value(),
            )),
            BcBlock::Canonical { .. } => {
                Ok(self.canonical_bc()?.expect("canonical block").to_general())
            }
        }
    }

    /// The canonical block, if the conditions were given that way.
    pub fn canonical_bc(&self) -> Result<Option<CanonicalBc>, CliError> {
        let BcBlock::Canonical {
            family,
            sigma,
            p,
            r,
        } = &self.bc
        else {
            return Ok(None);
        };
        let family = match family.to_ascii_uppercase().as_str() {
            "T1" => Family::T1,
            "T2" => Family::T2,
            other => {
                return Err(CliError::Config(format!(
                    "unknown family {other:?}; use T1 or T2"
                )))
            }
        };
        let sigma = Sigma::from_int(*sigma)
            .ok_or_else(|| CliError::Config(format!("sigma must be 0 or 1, got {sigma}")))?;
        CanonicalBc::new(family, sigma, p.value(), r.value())
            .map(Some)
            .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn potential(&self) -> Result<Potential, CliError> {
        let b = &self.potential;
        let need =
            |what: &str| CliError::Config(format!("potential kind {:?} needs `{what}`", b.kind));
        let shape = match b.kind.as_str() {
            "zero" => Shape::Zero,
            "cos" => Shape::Cos {
                k: b.k.unwrap_or(1),
            },
            "sin" => Shape::Sin {
                k: b.k.unwrap_or(1),
            },
            "sawtooth" => Shape::Sawtooth,
            "smooth_step" => Shape::SmoothStep {
                center: b.center.unwrap_or(0.5),
                width: b.width.ok_or_else(|| need("width"))?,
            },
            "polynomial" => Shape::Polynomial {
                coeffs: b.coeffs.clone().ok_or_else(|| need("coeffs"))?,
            },
            "samples" => {
                let values = b.values.clone().ok_or_else(|| need("values"))?;
                if values.len() < 2 {
                    return Err(CliError::Config("samples need at least two values".into()));
                }
                Shape::Samples { values }
            }
            other => {
                return Err(CliError::Config(format!(
                    "unknown potential kind {other:?}"
                )))
            }
        };
        if let Shape::SmoothStep { width, .. } = shape {
            if width <= 0.0 {
                return Err(CliError::Config(
                    "smooth_step width must be positive".into(),
                ));
            }
        }
        let default_normalize = matches!(shape, Shape::Polynomial { .. } | Shape::Samples { .. });
        let mut q = Potential::new(shape, b.amplitude);
        match b.smoothness.as_deref() {
            None => {}
            Some("ac") => q = q.with_smoothness(Smoothness::AbsolutelyContinuous),
            Some("l1") => q = q.with_smoothness(Smoothness::L1),
            Some(other) => {
                return Err(CliError::Config(format!(
                    "unknown smoothness {other:?}; use ac or l1"
                )))
            }
        }
        if b.normalize_mean.unwrap_or(default_normalize) {
            q = normalize_mean(&q).0;
        }
        Ok(q)
    }
}
