//! Riesz-basis failure diagnostics: angles between the two normalized
//! eigenfunctions of each window and the combined verdict.

use std::fmt;

use crate::bc_model::CanonicalBc;
use crate::eig_solver::Eigenpair;
use crate::error::{Result, SpectralError};
use crate::potential::{
    decay_verdict, endpoint_condition, DecayReport, DecayVerdict, EndpointRule, Potential,
    Smoothness,
};
use crate::sampled::SampledFunction;
use crate::stats::log_log_slope;
use crate::C64;

/// Largest tolerated deviation of an input norm from one.
pub const NORM_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairAngleRecord {
    pub n: i64,
    /// In `[0, pi/2]`.
    pub angle: f64,
    /// `<phi_1, phi_2>` in L2.
    pub inner: C64,
}

/// Angle between two unit-norm sampled functions.
pub fn pair_angle(
    n: i64,
    phi1: &SampledFunction,
    phi2: &SampledFunction,
) -> Result<PairAngleRecord> {
    for phi in [phi1, phi2] {
        let norm = phi.norm();
        // Written so that a NaN norm is rejected too.
        let unit = (norm - 1.0).abs() <= NORM_TOLERANCE;
        if !unit {
            return Err(SpectralError::NormViolation { norm });
        }
    }
    let inner = phi1.inner(phi2);
    Ok(PairAngleRecord {
        n,
        angle: inner.norm().min(1.0).acos(),
        inner,
    })
}

/// Angle records for every window holding two simple eigenpairs with
/// eigenfunctions. Returns the records and the skipped window indices.
pub fn pair_angles(eigs: &[Eigenpair]) -> Result<(Vec<PairAngleRecord>, Vec<i64>)> {
    let mut ns: Vec<i64> = eigs.iter().map(|e| e.n).collect();
    ns.sort_unstable();
    ns.dedup();
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for n in ns {
        let here: Vec<&Eigenpair> = eigs.iter().filter(|e| e.n == n).collect();
        match here.as_slice() {
            [a, b] if a.multiplicity == 1 && b.multiplicity == 1 => match (&a.phi, &b.phi) {
                (Some(p1), Some(p2)) => records.push(pair_angle(n, p1, p2)?),
                _ => skipped.push(n),
            },
            _ => skipped.push(n),
        }
    }
    Ok((records, skipped))
}

/// Summary of whether the angles tend to zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AngleTrend {
    /// Least-squares slope of `ln angle` against `ln n`.
    pub slope: Option<f64>,
    pub angle_first: f64,
    pub angle_last: f64,
    pub n_first: i64,
    pub n_last: i64,
    pub tends_to_zero: bool,
}

/// Slope at most this counts as decay.
pub const ANGLE_SLOPE_MAX: f64 = -0.5;

pub fn angle_trend(records: &[PairAngleRecord]) -> AngleTrend {
    let mut sorted = records.to_vec();
    sorted.sort_by_key(|r| r.n);
    let ns: Vec<f64> = sorted.iter().map(|r| r.n as f64).collect();
    let angles: Vec<f64> = sorted.iter().map(|r| r.angle).collect();
    let slope = log_log_slope(&ns, &angles);
    let (first, last) = match (sorted.first(), sorted.last()) {
        (Some(f), Some(l)) => (*f, *l),
        _ => {
            return AngleTrend {
                slope: None,
                angle_first: f64::NAN,
                angle_last: f64::NAN,
                n_first: 0,
                n_last: 0,
                tends_to_zero: false,
            }
        }
    };
    let tends_to_zero = sorted.len() >= 3
        && slope.is_some_and(|s| s <= ANGLE_SLOPE_MAX)
        && last.angle < first.angle / 2.0;
    AngleTrend {
        slope,
        angle_first: first.angle,
        angle_last: last.angle,
        n_first: first.n,
        n_last: last.n,
        tends_to_zero,
    }
}

/// Potential hypothesis that triggered a failure verdict.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Trigger {
    /// Sine coefficients decay along the indices `offset + k * stride`.
    SineDecay { stride: i64, offset: i64 },
    /// Absolutely continuous potential with the endpoint inequality.
    EndpointCondition,
}

impl fmt::Display for Trigger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Trigger::SineDecay { stride: 1, .. } => {
                f.write_str("L1 regime: sine-coefficient decay")
            }
            Trigger::SineDecay { stride, offset } => write!(
                f,
                "L1 regime: sine-coefficient decay along n = {offset} mod {stride}"
            ),
            Trigger::EndpointCondition => f.write_str("AC regime: endpoint inequality"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RieszVerdict {
    FailsRieszBasis,
    Inconclusive,
}

impl fmt::Display for RieszVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RieszVerdict::FailsRieszBasis => "FailsRieszBasis",
            RieszVerdict::Inconclusive => "Inconclusive",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RieszReport {
    pub verdict: RieszVerdict,
    pub triggers: Vec<Trigger>,
    pub trend: AngleTrend,
    /// Human-readable reasons, one per line.
    pub notes: Vec<String>,
}

/// Largest stride tried when searching for a decaying subsequence.
pub const MAX_STRIDE: i64 = 4;

/// Arithmetic subsequences of `decay` along which the decay test holds.
pub fn decaying_subsequences(decay: &DecayReport) -> Vec<Trigger> {
    let mut found = Vec::new();
    for stride in 1..=MAX_STRIDE {
        for offset in 0..stride {
            let sub: Vec<(i64, f64)> = decay
                .entries
                .iter()
                .copied()
                .filter(|(n, _)| n.rem_euclid(stride) == offset)
                .collect();
            if sub.len() < 4 {
                continue;
            }
            if decay_verdict(&sub).2 == DecayVerdict::Holds {
                found.push(Trigger::SineDecay { stride, offset });
            }
        }
        if !found.is_empty() {
            break;
        }
    }
    found
}

/// Failure is reported when a potential hypothesis holds and the pair angles
/// tend to zero; otherwise the result is inconclusive.
pub fn riesz_verdict(
    cbc: &CanonicalBc,
    q: &Potential,
    records: &[PairAngleRecord],
    decay: Option<&DecayReport>,
    rule: EndpointRule,
) -> RieszReport {
    let mut notes = Vec::new();
    let mut triggers = Vec::new();
    match decay {
        Some(d) if d.sigma == cbc.sigma => {
            let subs = decaying_subsequences(d);
            if subs.is_empty() {
                notes.push(format!(
                    "sine-coefficient decay not established (tail median {:.3e})",
                    d.tail_median
                ));
            }
            triggers.extend(subs);
        }
        Some(_) => notes.push("decay report has the wrong parity; ignored".into()),
        None => notes.push("no sine-coefficient data".into()),
    }
    if q.smoothness() == Smoothness::AbsolutelyContinuous {
        match endpoint_condition(q, cbc, rule) {
            Ok(c) if c.holds => triggers.push(Trigger::EndpointCondition),
            Ok(c) => notes.push(format!(
                "endpoint inequality fails: {:.6e} vs {:.6e}",
                c.lhs, c.rhs
            )),
            Err(e) => notes.push(format!("endpoint inequality unavailable: {e}")),
        }
    }
    let trend = angle_trend(records);
    if !trend.tends_to_zero {
        notes.push(format!(
            "angles do not tend to zero (slope {}, {:.3e} -> {:.3e})",
            trend.slope.map_or("n/a".to_string(), |s| format!("{s:.3}")),
            trend.angle_first,
            trend.angle_last
        ));
    }
    let verdict = if !triggers.is_empty() && trend.tends_to_zero {
        RieszVerdict::FailsRieszBasis
    } else {
        RieszVerdict::Inconclusive
    };
    RieszReport {
        verdict,
        triggers,
        trend,
        notes,
    }
}
