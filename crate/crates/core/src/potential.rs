//! Potentials on `[0, 1]`, their trigonometric moments and the regime
//! conditions that decide which asymptotic formulas apply.

use std::f64::consts::PI;

use crate::bc_model::{CanonicalBc, Family, Sigma};
use crate::error::{Result, SpectralError};
use crate::quadrature::{composite_gl, composite_gl_real};
use crate::stats::{log_log_slope, median};
use crate::C64;

/// Default number of samples kept alongside the evaluator.
pub const DEFAULT_GRID: usize = 4097;

/// Built-in potential shapes.
#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    Zero,
    /// `cos(2 pi k x)`
    Cos {
        k: u32,
    },
    /// `sin(2 pi k x)`
    Sin {
        k: u32,
    },
    /// `x - 1/2`
    Sawtooth,
    /// `tanh((x - center) / width)`
    SmoothStep {
        center: f64,
        width: f64,
    },
    /// `sum c_k x^k`
    Polynomial {
        coeffs: Vec<f64>,
    },
    /// Uniform samples on `[0, 1]`, linearly interpolated.
    Samples {
        values: Vec<f64>,
    },
}

impl Shape {
    fn eval(&self, x: f64) -> f64 {
        match self {
            Shape::Zero => 0.0,
            Shape::Cos { k } => (2.0 * PI * f64::from(*k) * x).cos(),
            Shape::Sin { k } => (2.0 * PI * f64::from(*k) * x).sin(),
            Shape::Sawtooth => x - 0.5,
            Shape::SmoothStep { center, width } => ((x - center) / width).tanh(),
            Shape::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c),
            Shape::Samples { values } => {
                let m = values.len() - 1;
                let t = (x.clamp(0.0, 1.0) * m as f64).min(m as f64);
                let i = (t.floor() as usize).min(m.saturating_sub(1));
                let f = t - i as f64;
                values[i] * (1.0 - f) + values[(i + 1).min(m)] * f
            }
        }
    }

    fn natural_smoothness(&self) -> Smoothness {
        // Every catalog shape, and linear interpolation of samples, is
        // absolutely continuous.
        Smoothness::AbsolutelyContinuous
    }

    /// Integral over `[0, 1]`, exact where a closed form is trivial.
    fn mean(&self) -> f64 {
        match self {
            Shape::Zero | Shape::Cos { .. } | Shape::Sin { .. } | Shape::Sawtooth => 0.0,
            Shape::Polynomial { coeffs } => coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c / (k as f64 + 1.0))
                .sum(),
            Shape::Samples { values } => {
                let m = values.len() - 1;
                let inner: f64 = values[1..m].iter().sum();
                (inner + 0.5 * (values[0] + values[m])) / m as f64
            }
            Shape::SmoothStep { .. } => composite_gl_real(|x| self.eval(x), 0.0, 1.0, 256),
        }
    }

    /// Panel breakpoints where the integrand is not smooth.
    fn kinks(&self) -> Option<usize> {
        match self {
            Shape::Samples { values } => Some(values.len() - 1),
            _ => None,
        }
    }
}

/// Smoothness class of a potential.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Smoothness {
    L1,
    AbsolutelyContinuous,
}

/// A real potential `amplitude * shape(x) - shift`.
#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    shape: Shape,
    amplitude: f64,
    shift: f64,
    smoothness: Smoothness,
    grid_len: usize,
}

impl Potential {
    pub fn new(shape: Shape, amplitude: f64) -> Self {
        if let Shape::Samples { values } = &shape {
            assert!(
                values.len() >= 2,
                "sampled potential needs at least two values"
            );
        }
        let smoothness = shape.natural_smoothness();
        Self {
            shape,
            amplitude,
            shift: 0.0,
            smoothness,
            grid_len: DEFAULT_GRID,
        }
    }

    pub fn zero() -> Self {
        Self::new(Shape::Zero, 1.0)
    }

    pub fn cos(k: u32) -> Self {
        Self::new(Shape::Cos { k }, 1.0)
    }

    pub fn sin(k: u32) -> Self {
        Self::new(Shape::Sin { k }, 1.0)
    }

    pub fn sawtooth() -> Self {
        Self::new(Shape::Sawtooth, 1.0)
    }

    /// Overrides the smoothness tag (for example to force the L1 regime).
    pub fn with_smoothness(mut self, smoothness: Smoothness) -> Self {
        self.smoothness = smoothness;
        self
    }

    pub fn with_grid(mut self, len: usize) -> Self {
        assert!(len >= 2);
        self.grid_len = len;
        self
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// Constant subtracted by mean normalization.
    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    pub fn is_zero(&self) -> bool {
        (matches!(self.shape, Shape::Zero) || self.amplitude == 0.0) && self.shift == 0.0
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.amplitude * self.shape.eval(x) - self.shift
    }

    /// Values on the uniform grid of `grid_len` nodes.
    pub fn samples(&self) -> Vec<f64> {
        let m = self.grid_len - 1;
        (0..=m).map(|k| self.eval(k as f64 / m as f64)).collect()
    }

    /// `(q(0), q(1))`.
    pub fn endpoint_values(&self) -> (f64, f64) {
        (self.eval(0.0), self.eval(1.0))
    }

    pub fn mean(&self) -> f64 {
        self.amplitude * self.shape.mean() - self.shift
    }

    /// Crude bound on `max |q|`, used to size search regions.
    pub fn sup_estimate(&self) -> f64 {
        (0..=256)
            .map(|k| self.eval(k as f64 / 256.0).abs())
            .fold(0.0, f64::max)
    }

    /// Panel count aligned with sample cells, if any.
    pub(crate) fn cell_count(&self) -> Option<usize> {
        self.shape.kinks()
    }
}

/// Subtracts the mean. Returns the normalized potential and the removed constant.
pub fn normalize_mean(q: &Potential) -> (Potential, f64) {
    let m = q.mean();
    let mut out = q.clone();
    out.shift += m;
    (out, m)
}

/// `c = int cos(2 mu t) q dt`, `s = int sin(2 mu t) q dt`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrigMoment {
    pub mu: C64,
    pub c_mu: C64,
    pub s_mu: C64,
}

fn moment_pass(q: &Potential, mu: C64, panels: usize) -> (C64, C64) {
    let two_i_mu = C64::new(0.0, 2.0) * mu;
    let f = |t: f64| -> (C64, C64) {
        let e = (two_i_mu * t).exp();
        let ei = 1.0 / e;
        let qt = q.eval(t);
        ((e + ei) * 0.5 * qt, (e - ei) * C64::new(0.0, -0.5) * qt)
    };
    let c = composite_gl(|t| f(t).0, 0.0, 1.0, panels);
    let s = composite_gl(|t| f(t).1, 0.0, 1.0, panels);
    (c, s)
}

/// Trigonometric moments by composite Gauss-Legendre with panel doubling.
pub fn trig_moments(q: &Potential, mu: C64) -> Result<TrigMoment> {
    trig_moments_tol(q, mu, 1e-12)
}

pub fn trig_moments_tol(q: &Potential, mu: C64, tol: f64) -> Result<TrigMoment> {
    if mu.im.abs() > 10.0 {
        return Err(SpectralError::OutOfRange(format!(
            "|Im mu| = {} exceeds 10",
            mu.im.abs()
        )));
    }
    if q.is_zero() {
        let z = C64::new(0.0, 0.0);
        return Ok(TrigMoment {
            mu,
            c_mu: z,
            s_mu: z,
        });
    }
    let base = match q.cell_count() {
        Some(cells) => cells,
        None => ((2.0 * mu.norm() / 4.0).ceil() as usize).max(16),
    };
    let scale = q.sup_estimate().max(1.0);
    let target = tol * (2.0 * mu.im.abs()).exp() * scale;
    let mut panels = base;
    let mut prev = moment_pass(q, mu, panels);
    let mut last_err = f64::INFINITY;
    while panels <= base * 64 {
        panels *= 2;
        let cur = moment_pass(q, mu, panels);
        let err = (cur.0 - prev.0).norm() + (cur.1 - prev.1).norm();
        if err <= target {
            return Ok(TrigMoment {
                mu,
                c_mu: cur.0,
                s_mu: cur.1,
            });
        }
        last_err = err;
        prev = cur;
    }
    Err(SpectralError::QuadratureFailure { estimate: last_err })
}

/// Verdict of a finite-range decay test.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecayVerdict {
    Holds,
    Fails,
    Inconclusive,
}

/// Scaled sine coefficients `d_n` and their verdict.
#[derive(Clone, Debug, PartialEq)]
pub struct DecayReport {
    pub sigma: Sigma,
    pub entries: Vec<(i64, f64)>,
    pub tail_median: f64,
    pub tail_slope: Option<f64>,
    pub verdict: DecayVerdict,
}

/// Threshold on the median of the last quartile of `d_n`.
pub const DECAY_THRESHOLD: f64 = 0.02;

/// Applies the decay rule to `(n, d_n)` pairs.
pub fn decay_verdict(entries: &[(i64, f64)]) -> (f64, Option<f64>, DecayVerdict) {
    if entries.is_empty() {
        return (f64::NAN, None, DecayVerdict::Inconclusive);
    }
    let q = (entries.len() / 4).max(1);
    let tail = &entries[entries.len() - q..];
    let m = median(&tail.iter().map(|e| e.1).collect::<Vec<_>>()).unwrap_or(f64::NAN);
    let half = &entries[entries.len() / 2..];
    let ns: Vec<f64> = half.iter().map(|e| e.0 as f64).collect();
    let ds: Vec<f64> = half.iter().map(|e| e.1).collect();
    let slope = log_log_slope(&ns, &ds);
    let verdict = if m < DECAY_THRESHOLD {
        DecayVerdict::Holds
    } else if m > 10.0 * DECAY_THRESHOLD || slope.is_none_or(|s| s > -0.2) {
        DecayVerdict::Fails
    } else {
        DecayVerdict::Inconclusive
    };
    (m, slope, verdict)
}

/// Decay test of `n |int sin(2 pi n t) q|` (sigma = 1) or
/// `n |int sin((2n+1) pi t) q|` (sigma = 0) over `ns`.
/// Real frequency at which the sine moment of index `n` is sampled.
pub fn decay_frequency(sigma: Sigma, n: i64) -> f64 {
    match sigma {
        Sigma::One => PI * n as f64,
        Sigma::Zero => PI * (2 * n + 1) as f64 / 2.0,
    }
}

pub fn sine_coefficient_decay(
    q: &Potential,
    sigma: Sigma,
    ns: impl IntoIterator<Item = i64>,
) -> Result<DecayReport> {
    sine_coefficient_decay_tol(q, sigma, ns, 1e-12)
}

/// Decay test on `n |s_mu|` with quadrature tolerance `tol`.
pub fn sine_coefficient_decay_tol(
    q: &Potential,
    sigma: Sigma,
    ns: impl IntoIterator<Item = i64>,
    tol: f64,
) -> Result<DecayReport> {
    let mut entries = Vec::new();
    for n in ns {
        let m = trig_moments_tol(q, C64::new(decay_frequency(sigma, n), 0.0), tol)?;
        entries.push((n, n as f64 * m.s_mu.norm()));
    }
    let (tail_median, tail_slope, verdict) = decay_verdict(&entries);
    Ok(DecayReport {
        sigma,
        entries,
        tail_median,
        tail_slope,
        verdict,
    })
}

/// Which endpoint combination enters the absolutely continuous regime.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum EndpointRule {
    /// `q(0) - q(1)` for both parities (what the integration-by-parts
    /// expansion of the determinant produces).
    #[default]
    Jump,
    /// `q(0) + (-1)^sigma q(1)`.
    Printed,
}

/// Endpoint combination of `q` under `rule`.
pub fn endpoint_combination(q: &Potential, sigma: Sigma, rule: EndpointRule) -> f64 {
    let (q0, q1) = q.endpoint_values();
    match rule {
        EndpointRule::Jump => q0 - q1,
        EndpointRule::Printed => q0 + sigma.sign() * q1,
    }
}

/// Endpoint inequality of the absolutely continuous regime.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EndpointCondition {
    pub holds: bool,
    pub lhs: C64,
    pub rhs: C64,
}

pub fn endpoint_condition(
    q: &Potential,
    cbc: &CanonicalBc,
    rule: EndpointRule,
) -> Result<EndpointCondition> {
    if q.smoothness() != Smoothness::AbsolutelyContinuous {
        return Err(SpectralError::ConditionViolated(
            "endpoint condition needs an absolutely continuous potential".into(),
        ));
    }
    let one = C64::new(1.0, 0.0);
    let denom = match cbc.family {
        Family::T1 => one - cbc.p * cbc.p,
        Family::T2 => cbc.p * cbc.p - one,
    };
    if denom.norm() <= 1e-10 {
        return Err(SpectralError::UndefinedCondition(format!(
            "{} has squared leading parameter equal to one",
            cbc.family
        )));
    }
    let rhs = 2.0 * cbc.r * cbc.r / denom;
    let lhs = C64::from(endpoint_combination(q, cbc.sigma, rule));
    let holds = (lhs - rhs).norm() > 1e-10 * (1.0 + rhs.norm());
    Ok(EndpointCondition { holds, lhs, rhs })
}
