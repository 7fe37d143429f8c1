//! Asymptotic eigenvalue formulas of the four families and residual tables
//! comparing them with computed eigenvalues.

use std::f64::consts::PI;
use std::fmt;

use crate::bc_model::{CanonicalBc, Family, Sigma};
use crate::eig_solver::{window_center, Eigenpair, Problem};
use crate::error::{Result, SpectralError};
use crate::potential::{
    endpoint_combination, endpoint_condition, DecayReport, DecayVerdict, EndpointRule, Potential,
    Smoothness,
};
use crate::stats::log_log_slope;
use crate::C64;

const I: C64 = C64::new(0.0, 1.0);

/// Which set of formulas applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// `q = 0`: both roots to `O(1/n^2)`.
    Unperturbed,
    /// Sine coefficients of `q` decay faster than `1/n`: same formulas, `o(1/n)`.
    L1,
    /// Absolutely continuous `q` with the endpoint inequality: split by a discriminant.
    Ac,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Unperturbed => "Unperturbed",
            Regime::L1 => "L1",
            Regime::Ac => "AC",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiscriminantName {
    /// T1, sigma = 1.
    D,
    /// T1, sigma = 0.
    D2,
    /// T2, sigma = 1.
    D3,
    /// T2, sigma = 0.
    D4,
}

impl fmt::Display for DiscriminantName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DiscriminantName::D => "D",
            DiscriminantName::D2 => "D2",
            DiscriminantName::D3 => "D3",
            DiscriminantName::D4 => "D4",
        })
    }
}

/// Discriminant with its principal square root (`Re >= 0`, and `Im >= 0` on the
/// imaginary axis).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Discriminant {
    pub name: DiscriminantName,
    pub value: C64,
    pub sqrt_value: C64,
}

pub fn principal_sqrt(v: C64) -> C64 {
    let s = C64::new(v.re, if v.im == 0.0 { 0.0 } else { v.im }).sqrt();
    if s.re == 0.0 && s.im < 0.0 {
        -s
    } else {
        s
    }
}

impl Discriminant {
    /// Discriminant for canonical conditions and endpoint combination `jump`.
    pub fn new(bc: &CanonicalBc, jump: f64) -> Self {
        let (p, r) = (bc.p, bc.r);
        let one = C64::new(1.0, 0.0);
        let (name, value) = match (bc.family, bc.sigma) {
            (Family::T1, Sigma::One) => (
                DiscriminantName::D,
                2.0 * (one - p * p) * jump - 4.0 * r * r,
            ),
            (Family::T1, Sigma::Zero) => (
                DiscriminantName::D2,
                2.0 * (one - p * p) * jump - 4.0 * r * r,
            ),
            (Family::T2, Sigma::One) => (
                DiscriminantName::D3,
                2.0 * (p * p - one) * jump - 4.0 * r * r,
            ),
            (Family::T2, Sigma::Zero) => (
                DiscriminantName::D4,
                2.0 * (p * p - one) * jump - 4.0 * r * r,
            ),
        };
        Self {
            name,
            value,
            sqrt_value: principal_sqrt(value),
        }
    }
}

/// A predicted eigenvalue.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AsymptoticPrediction {
    pub family: Family,
    pub sigma: Sigma,
    pub regime: Regime,
    pub n: i64,
    pub j: usize,
    pub mu_pred: C64,
    /// Size of the first neglected term: `1/n^2` (Unperturbed) or `1/n` marking `o(1/n)`.
    pub order_term: f64,
}

/// Formulas for one problem in one regime.
#[derive(Clone, Debug, PartialEq)]
pub struct AsymptoticModel {
    pub bc: CanonicalBc,
    pub regime: Regime,
    pub discriminant: Option<Discriminant>,
    /// Endpoint combination used in the discriminant.
    pub jump: Option<f64>,
    /// Predictions are conjugated (user problem is the adjoint of `bc`).
    pub conjugate: bool,
}

impl AsymptoticModel {
    pub fn unperturbed(bc: &CanonicalBc) -> Self {
        Self {
            bc: *bc,
            regime: Regime::Unperturbed,
            discriminant: None,
            jump: None,
            conjugate: false,
        }
    }

    /// Requires the sine-coefficient decay test to hold.
    pub fn l1(bc: &CanonicalBc, decay: &DecayReport) -> Result<Self> {
        if decay.sigma != bc.sigma {
            return Err(SpectralError::ConditionViolated(
                "decay report computed for the other parity".into(),
            ));
        }
        if decay.verdict != DecayVerdict::Holds {
            return Err(SpectralError::ConditionViolated(format!(
                "sine coefficients do not decay (verdict {:?})",
                decay.verdict
            )));
        }
        Ok(Self {
            regime: Regime::L1,
            ..Self::unperturbed(bc)
        })
    }

    /// Requires an absolutely continuous `q` satisfying the endpoint inequality.
    pub fn ac(bc: &CanonicalBc, q: &Potential, rule: EndpointRule) -> Result<Self> {
        let cond = endpoint_condition(q, bc, rule)?;
        if !cond.holds {
            return Err(SpectralError::ConditionViolated(format!(
                "endpoint combination {} equals {}",
                cond.lhs, cond.rhs
            )));
        }
        let jump = endpoint_combination(q, bc.sigma, rule);
        Ok(Self {
            bc: *bc,
            regime: Regime::Ac,
            discriminant: Some(Discriminant::new(bc, jump)),
            jump: Some(jump),
            conjugate: false,
        })
    }

    /// Model for the user problem of `problem` (conjugated for adjoint forms).
    pub fn for_problem(mut self, problem: &Problem) -> Self {
        self.conjugate = problem.adjoint.is_some();
        self
    }

    fn offsets(&self, n: i64) -> [C64; 2] {
        let (p, r) = (self.bc.p, self.bc.r);
        let nf = n as f64;
        let odd = (2 * n + 1) as f64 * PI;
        match (self.regime, self.discriminant) {
            (Regime::Ac, Some(d)) => {
                let (num, den) = match (self.bc.family, self.bc.sigma) {
                    (Family::T1, Sigma::One) => (2.0 * r, 4.0 * (p - 1.0) * PI * nf),
                    (Family::T1, Sigma::Zero) => (2.0 * r, 2.0 * (p + 1.0) * odd),
                    (Family::T2, Sigma::One) => (-2.0 * r, 4.0 * (p - 1.0) * PI * nf),
                    (Family::T2, Sigma::Zero) => (2.0 * r, 2.0 * (p + 1.0) * odd),
                };
                let s = I * d.sqrt_value;
                [(num - s) / den, (num + s) / den]
            }
            _ => {
                let shift = match (self.bc.family, self.bc.sigma) {
                    (Family::T1, Sigma::One) => r / ((p - 1.0) * PI * nf),
                    (Family::T1, Sigma::Zero) => 2.0 * r / ((p + 1.0) * odd),
                    (Family::T2, Sigma::One) => r / ((1.0 - p) * PI * nf),
                    (Family::T2, Sigma::Zero) => 2.0 * r / ((p + 1.0) * odd),
                };
                [C64::new(0.0, 0.0), shift]
            }
        }
    }

    pub fn predict(&self, n: i64, j: usize) -> AsymptoticPrediction {
        assert!(j == 1 || j == 2, "branch index must be 1 or 2");
        let c = window_center(self.bc.sigma, n);
        let mut mu = c + self.offsets(n)[j - 1];
        if self.conjugate {
            mu = mu.conj();
        }
        AsymptoticPrediction {
            family: self.bc.family,
            sigma: self.bc.sigma,
            regime: self.regime,
            n,
            j,
            mu_pred: mu,
            order_term: match self.regime {
                Regime::Unperturbed => 1.0 / (n as f64 * n as f64),
                _ => 1.0 / n as f64,
            },
        }
    }

    pub fn predict_pair(&self, n: i64) -> [C64; 2] {
        [self.predict(n, 1).mu_pred, self.predict(n, 2).mu_pred]
    }
}

/// Regime choice: AC when `q` is absolutely continuous and the endpoint
/// inequality holds, else L1 when the decay test holds, else Unperturbed.
/// Returns the model and warnings.
pub fn select_regime(
    bc: &CanonicalBc,
    q: &Potential,
    decay: &DecayReport,
    rule: EndpointRule,
) -> (AsymptoticModel, Vec<String>) {
    let mut warnings = Vec::new();
    if q.is_zero() {
        return (AsymptoticModel::unperturbed(bc), warnings);
    }
    if q.smoothness() == Smoothness::AbsolutelyContinuous {
        match AsymptoticModel::ac(bc, q, rule) {
            Ok(m) => return (m, warnings),
            Err(e) => warnings.push(format!("AC regime unavailable: {e}")),
        }
    }
    match AsymptoticModel::l1(bc, decay) {
        Ok(m) => (m, warnings),
        Err(e) => {
            warnings.push(format!("L1 regime unavailable: {e}"));
            warnings.push("falling back to unperturbed formulas; residuals need not decay".into());
            (AsymptoticModel::unperturbed(bc), warnings)
        }
    }
}

/// One row of a residual table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualRow {
    pub n: i64,
    pub j: usize,
    pub regime: Regime,
    pub mu: C64,
    pub mu_pred: C64,
    pub r: f64,
    pub n_r: f64,
    pub n2_r: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResidualTable {
    pub rows: Vec<ResidualRow>,
    /// Least-squares slope of `ln(n r)` against `ln n`, per branch.
    pub slopes: [Option<f64>; 2],
}

pub fn residual_table(eigs: &[Eigenpair], model: &AsymptoticModel) -> ResidualTable {
    let mut rows = Vec::new();
    for e in eigs.iter().filter(|e| e.j <= 2) {
        let p = model.predict(e.n, e.j);
        let r = (e.mu - p.mu_pred).norm();
        let nf = e.n as f64;
        rows.push(ResidualRow {
            n: e.n,
            j: e.j,
            regime: model.regime,
            mu: e.mu,
            mu_pred: p.mu_pred,
            r,
            n_r: nf * r,
            n2_r: nf * nf * r,
        });
    }
    let slope = |j: usize| {
        let (ns, vs): (Vec<f64>, Vec<f64>) = rows
            .iter()
            .filter(|r| r.j == j && r.n > 0)
            .map(|r| (r.n as f64, r.n_r))
            .unzip();
        log_log_slope(&ns, &vs)
    };
    let slopes = [slope(1), slope(2)];
    ResidualTable { rows, slopes }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SimplicityVerdict {
    Simple,
    NotSimple,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimplicityRow {
    pub n: i64,
    pub gap: f64,
    pub predicted_gap: f64,
    pub verdict: SimplicityVerdict,
}

/// Per-window gap between the two branches and the simplicity verdict.
pub fn simplicity_report(
    eigs: &[Eigenpair],
    model: &AsymptoticModel,
    tau_mult: f64,
) -> Vec<SimplicityRow> {
    let mut ns: Vec<i64> = eigs.iter().map(|e| e.n).collect();
    ns.dedup();
    ns.into_iter()
        .map(|n| {
            let here: Vec<&Eigenpair> = eigs.iter().filter(|e| e.n == n).collect();
            let pred = model.predict_pair(n);
            let predicted_gap = (pred[1] - pred[0]).norm();
            let total: usize = here.iter().map(|e| e.multiplicity).sum();
            let (gap, simple) = if here.len() == 2 {
                let gap = (here[0].mu - here[1].mu).norm();
                (
                    gap,
                    here.iter().all(|e| e.multiplicity == 1) && gap > tau_mult,
                )
            } else {
                (0.0, false)
            };
            let verdict = if simple && total == 2 {
                SimplicityVerdict::Simple
            } else {
                SimplicityVerdict::NotSimple
            };
            SimplicityRow {
                n,
                gap,
                predicted_gap,
                verdict,
            }
        })
        .collect()
}
