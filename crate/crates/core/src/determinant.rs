//! Characteristic determinant from numerically integrated solutions, and the
//! closed-form unperturbed and leading-order determinants of the four families.

use std::fmt;

use crate::bc_model::{BoundaryForm, CanonicalBc, EndpointValues, Family, Sigma};
use crate::error::{Result, SpectralError};
use crate::ode::{propagate, propagate_to, InitialData, OdeOptions, PairState};
use crate::potential::{trig_moments, Potential, TrigMoment};
use crate::C64;

const I: C64 = C64::new(0.0, 1.0);

/// Number of output nodes used for sampled solutions at `mu`:
/// at least 257 and at least 64 per unit of `|mu|`, always `2^k + 1`.
pub fn output_nodes(mu: C64) -> usize {
    let need = (64.0 * mu.norm()).ceil() as usize;
    let mut m = 256usize;
    while m < need {
        m *= 2;
    }
    m + 1
}

fn check_mu(mu: C64) -> Result<()> {
    if mu.norm() == 0.0 {
        return Err(SpectralError::OutOfRange("mu must be nonzero".into()));
    }
    if mu.im.abs() > 10.0 {
        return Err(SpectralError::OutOfRange(format!(
            "|Im mu| = {} exceeds 10",
            mu.im.abs()
        )));
    }
    Ok(())
}

/// Solutions `y_1 ~ e^{i mu x}`, `y_2 ~ e^{-i mu x}` sampled on a uniform grid.
#[derive(Clone, Debug)]
pub struct FundamentalPair {
    pub mu: C64,
    pub x: Vec<f64>,
    pub states: Vec<PairState>,
}

impl FundamentalPair {
    pub fn y1(&self) -> Vec<C64> {
        self.states.iter().map(|s| s.y[0]).collect()
    }

    pub fn y2(&self) -> Vec<C64> {
        self.states.iter().map(|s| s.y[1]).collect()
    }

    /// Maximum relative deviation of the Wronskian from its value at `x = 0`.
    pub fn wronskian_drift(&self) -> f64 {
        let w0 = self.states[0].wronskian();
        self.states
            .iter()
            .map(|s| (s.wronskian() - w0).norm() / w0.norm())
            .fold(0.0, f64::max)
    }

    /// Boundary values of `y_1` and `y_2`.
    pub fn endpoints(&self) -> [EndpointValues; 2] {
        endpoint_values(&self.states[0], self.states.last().unwrap())
    }
}

fn endpoint_values(at0: &PairState, at1: &PairState) -> [EndpointValues; 2] {
    [0, 1].map(|j| EndpointValues {
        y0: at0.y[j],
        dy0: at0.dy[j],
        y1: at1.y[j],
        dy1: at1.dy[j],
    })
}

pub fn fundamental_pair(q: &Potential, mu: C64, opts: &OdeOptions) -> Result<FundamentalPair> {
    fundamental_pair_on(q, mu, output_nodes(mu), opts)
}

/// Fundamental pair sampled on `len` uniform nodes.
pub fn fundamental_pair_on(
    q: &Potential,
    mu: C64,
    len: usize,
    opts: &OdeOptions,
) -> Result<FundamentalPair> {
    check_mu(mu)?;
    let x: Vec<f64> = (0..len).map(|k| k as f64 / (len - 1) as f64).collect();
    let states = propagate_to(q, mu, InitialData::Exponential, &x, opts)?;
    Ok(FundamentalPair { mu, x, states })
}

/// `U_1(y_1) U_2(y_2) - U_1(y_2) U_2(y_1)` for given boundary values.
pub fn bc_determinant(form: &BoundaryForm, ends: &[EndpointValues; 2]) -> C64 {
    form.apply(0, &ends[0]) * form.apply(1, &ends[1])
        - form.apply(0, &ends[1]) * form.apply(1, &ends[0])
}

/// Characteristic determinant for arbitrary boundary functionals.
pub fn delta_form(q: &Potential, form: &BoundaryForm, mu: C64, opts: &OdeOptions) -> Result<C64> {
    check_mu(mu)?;
    let start = PairState {
        y: [C64::new(1.0, 0.0); 2],
        dy: [I * mu, -I * mu],
    };
    let end = propagate(q, mu, InitialData::Exponential, opts)?;
    Ok(bc_determinant(form, &endpoint_values(&start, &end)))
}

/// Characteristic determinant of the canonical problem; its zeros are the
/// square roots of the eigenvalues.
pub fn delta_exact(q: &Potential, cbc: &CanonicalBc, mu: C64, opts: &OdeOptions) -> Result<C64> {
    delta_form(q, &cbc.form(), mu, opts)
}

/// Determinant in the spectral parameter `lambda`, built from the solutions
/// `c(0)=1, c'(0)=0` and `s(0)=0, s'(0)=1`. It is entire in `lambda` and
/// equals `delta_form / (-2 i mu)`.
pub fn delta_lambda(
    q: &Potential,
    form: &BoundaryForm,
    lambda: C64,
    opts: &OdeOptions,
) -> Result<C64> {
    let mu = lambda.sqrt();
    let start = PairState {
        y: [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        dy: [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
    };
    let end = propagate(q, mu, InitialData::CosineSine, opts)?;
    Ok(bc_determinant(form, &endpoint_values(&start, &end)))
}

/// Which closed-form determinant to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KindTag {
    Exact,
    Unperturbed,
    Leading,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DeterminantKind {
    pub tag: KindTag,
    pub family: Family,
    pub sigma: Sigma,
}

impl DeterminantKind {
    pub fn new(tag: KindTag, cbc: &CanonicalBc) -> Self {
        Self {
            tag,
            family: cbc.family,
            sigma: cbc.sigma,
        }
    }
}

impl fmt::Display for DeterminantKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}({}, sigma={})", self.tag, self.family, self.sigma)
    }
}

/// Evaluates the closed-form determinant. `Leading` needs the moments at `mu`.
pub fn delta_closed(
    kind: DeterminantKind,
    cbc: &CanonicalBc,
    mu: C64,
    moments: Option<&TrigMoment>,
) -> Result<C64> {
    if kind.family != cbc.family || kind.sigma != cbc.sigma || kind.tag == KindTag::Exact {
        return Err(SpectralError::KindMismatch {
            kind: kind.to_string(),
        });
    }
    let c = match kind.tag {
        KindTag::Leading => {
            moments
                .ok_or_else(|| SpectralError::KindMismatch {
                    kind: format!("{kind} without moments"),
                })?
                .c_mu
        }
        _ => C64::new(0.0, 0.0),
    };
    let (p, r) = (cbc.p, cbc.r);
    let e = (I * mu).exp();
    let ei = 1.0 / e;
    let one = C64::new(1.0, 0.0);
    let v = match (cbc.family, cbc.sigma) {
        (Family::T1, Sigma::One) => {
            let rr = r - (p + 1.0) / 2.0 * c;
            (one - ei) * (I * mu * (p - 1.0) * (e - 1.0) + rr * (e + 1.0))
        }
        (Family::T1, Sigma::Zero) => {
            let rr = r + (1.0 - p) / 2.0 * c;
            (one + ei) * (I * mu * (p + 1.0) * (e + 1.0) + rr * (e - 1.0))
        }
        (Family::T2, Sigma::One) => {
            let rr = r - (p + 1.0) / 2.0 * c;
            (one - ei) * (I * mu * (1.0 - p) * (e - 1.0) + rr * (e + 1.0))
        }
        (Family::T2, Sigma::Zero) => {
            let rr = r + (p - 1.0) / 2.0 * c;
            (one + ei) * (I * mu * (1.0 + p) * (e + 1.0) + rr * (e - 1.0))
        }
    };
    Ok(v)
}

/// Coefficient of `s_mu cos mu` in the two-term model of the determinant.
pub fn sine_term_coefficient(cbc: &CanonicalBc) -> C64 {
    let p = cbc.p;
    I * match (cbc.family, cbc.sigma) {
        (Family::T1, Sigma::One) => p + 1.0,
        (Family::T1, Sigma::Zero) => p - 1.0,
        (Family::T2, Sigma::One) => p + 1.0,
        (Family::T2, Sigma::Zero) => 1.0 - p,
    }
}

/// Two-term asymptotic model `leading + coef * s_mu * cos mu` (diagnostic only).
pub fn delta_perturbation(q: &Potential, cbc: &CanonicalBc, mu: C64) -> Result<C64> {
    let m = trig_moments(q, mu)?;
    let lead = delta_closed(
        DeterminantKind::new(KindTag::Leading, cbc),
        cbc,
        mu,
        Some(&m),
    )?;
    Ok(lead + sine_term_coefficient(cbc) * m.s_mu * mu.cos())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn t1() -> CanonicalBc {
        CanonicalBc::real(Family::T1, Sigma::One, 3.0, 2.0).unwrap()
    }

    #[test]
    fn node_counts() {
        assert_eq!(output_nodes(C64::new(1.0, 0.0)), 257);
        assert_eq!(output_nodes(C64::new(20.0 * PI, 0.0)), 4097);
    }

    #[test]
    fn free_pair_matches_exponentials() {
        let mu = C64::new(20.0 * PI, 0.0);
        let fp = fundamental_pair(&Potential::zero(), mu, &OdeOptions::default()).unwrap();
        let err =
            fp.x.iter()
                .zip(fp.y1())
                .map(|(x, y)| (y - (I * mu * *x).exp()).norm())
                .fold(0.0, f64::max);
        assert!(err <= 1e-9, "{err}");
        assert!(fp.wronskian_drift() < 1e-9);
    }

    #[test]
    fn free_wronskian_value() {
        let mu = C64::new(2.0 * PI, 0.0);
        let fp = fundamental_pair(&Potential::zero(), mu, &OdeOptions::default()).unwrap();
        for s in &fp.states {
            assert!((s.wronskian() - C64::new(0.0, -4.0 * PI)).norm() < 1e-9);
        }
    }

    #[test]
    fn cosine_potential_wronskian() {
        let fp = fundamental_pair(
            &Potential::cos(1),
            C64::new(20.0 * PI, 0.0),
            &OdeOptions::default(),
        )
        .unwrap();
        assert!(fp.wronskian_drift() <= 1e-8, "{}", fp.wronskian_drift());
    }

    #[test]
    fn unperturbed_roots_of_exact_determinant() {
        let opts = OdeOptions::default();
        for n in [1, 5, 10] {
            let mu = C64::new(2.0 * PI * n as f64, 0.0);
            let d = delta_exact(&Potential::zero(), &t1(), mu, &opts).unwrap();
            assert!(d.norm() < 1e-8, "{n}: {d}");
        }
        // Sign change across the second root.
        let n = 10.0;
        let m2 = 2.0 * PI * n + 2.0 / (2.0 * PI * n);
        let eval = |x: f64| {
            delta_closed(
                DeterminantKind::new(KindTag::Unperturbed, &t1()),
                &t1(),
                C64::new(x, 0.0),
                None,
            )
            .unwrap()
        };
        // On the real axis the closed form is i * real; compare imaginary parts.
        let a = eval(m2 - 5e-3).im;
        let b = eval(m2 + 5e-3).im;
        assert!(a * b < 0.0);
    }

    #[test]
    fn exact_matches_closed_form_for_zero_potential() {
        let cbc = t1();
        let opts = OdeOptions::default();
        let kind = DeterminantKind::new(KindTag::Unperturbed, &cbc);
        for i in -3..=3 {
            for j in -2..=2 {
                let mu = C64::new(20.0 * PI + 0.4 * i as f64, 0.5 * j as f64);
                let a = delta_exact(&Potential::zero(), &cbc, mu, &opts).unwrap();
                let b = delta_closed(kind, &cbc, mu, None).unwrap();
                assert!((a - b).norm() <= 1e-8 * (1.0 + b.norm()), "{mu}: {a} {b}");
            }
        }
    }

    #[test]
    fn closed_form_root_patterns() {
        for (fam, sig) in [
            (Family::T1, Sigma::One),
            (Family::T1, Sigma::Zero),
            (Family::T2, Sigma::One),
            (Family::T2, Sigma::Zero),
        ] {
            let cbc = CanonicalBc::real(fam, sig, 3.0, 2.0).unwrap();
            let kind = DeterminantKind::new(KindTag::Unperturbed, &cbc);
            for n in 1..6 {
                let mu = match sig {
                    Sigma::One => 2.0 * PI * n as f64,
                    Sigma::Zero => (2 * n + 1) as f64 * PI,
                };
                let d = delta_closed(kind, &cbc, C64::new(mu, 0.0), None).unwrap();
                assert!(d.norm() < 1e-12 * mu, "{fam} {sig} {n}: {d}");
            }
        }
    }

    #[test]
    fn leading_with_zero_moment_is_unperturbed() {
        let cbc = t1();
        let mu = C64::new(13.1, 0.2);
        let m = TrigMoment {
            mu,
            c_mu: C64::new(0.0, 0.0),
            s_mu: C64::new(0.0, 0.0),
        };
        let a = delta_closed(
            DeterminantKind::new(KindTag::Leading, &cbc),
            &cbc,
            mu,
            Some(&m),
        )
        .unwrap();
        let b = delta_closed(
            DeterminantKind::new(KindTag::Unperturbed, &cbc),
            &cbc,
            mu,
            None,
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn kind_mismatch() {
        let cbc = t1();
        let other = CanonicalBc::real(Family::T2, Sigma::One, 3.0, 2.0).unwrap();
        let k = DeterminantKind::new(KindTag::Unperturbed, &other);
        assert!(matches!(
            delta_closed(k, &cbc, C64::new(1.0, 0.0), None),
            Err(SpectralError::KindMismatch { .. })
        ));
        let k = DeterminantKind::new(KindTag::Leading, &cbc);
        assert!(delta_closed(k, &cbc, C64::new(1.0, 0.0), None).is_err());
    }

    #[test]
    fn perturbation_for_zero_potential() {
        let cbc = t1();
        let mu = C64::new(30.0, 0.1);
        let a = delta_perturbation(&Potential::zero(), &cbc, mu).unwrap();
        let b = delta_closed(
            DeterminantKind::new(KindTag::Unperturbed, &cbc),
            &cbc,
            mu,
            None,
        )
        .unwrap();
        assert!((a - b).norm() < 1e-14 * b.norm());
    }

    #[test]
    fn sawtooth_perturbation_term() {
        // s_mu at mu = 2 pi n equals (q(0) - q(1)) / (2 mu) for q = x - 1/2.
        let cbc = CanonicalBc::real(Family::T1, Sigma::One, 2.0, 1.0).unwrap();
        for n in [5, 10, 20] {
            let mu = C64::new(2.0 * PI * n as f64, 0.0);
            let m = trig_moments(&Potential::sawtooth(), mu).unwrap();
            let term = sine_term_coefficient(&cbc) * m.s_mu * mu.cos();
            let want = C64::new(0.0, 3.0) * (-1.0) / (2.0 * mu);
            assert!((term - want).norm() < 1e-12);
        }
    }

    #[test]
    fn perturbation_model_error_decays() {
        let q = Potential::cos(1);
        let cbc = t1();
        let opts = OdeOptions::default();
        let err = |n: f64| {
            let mu = C64::new(2.0 * PI * n + 0.3, 0.0);
            let a = delta_exact(&q, &cbc, mu, &opts).unwrap();
            let b = delta_perturbation(&q, &cbc, mu).unwrap();
            (a - b).norm() * n
        };
        // n * |remainder| must shrink: the remainder is o(1/n).
        assert!(err(40.0) < err(10.0));
    }

    #[test]
    fn lambda_determinant_relation() {
        let q = Potential::cos(1);
        let cbc = t1();
        let opts = OdeOptions::default();
        let mu = C64::new(7.3, 0.4);
        let a = delta_exact(&q, &cbc, mu, &opts).unwrap();
        let b = delta_lambda(&q, &cbc.form(), mu * mu, &opts).unwrap();
        assert!((a - C64::new(0.0, -2.0) * mu * b).norm() < 1e-8 * a.norm());
    }

    #[test]
    fn guards() {
        let opts = OdeOptions::default();
        assert!(fundamental_pair(&Potential::zero(), C64::new(0.0, 0.0), &opts).is_err());
        assert!(delta_exact(&Potential::zero(), &t1(), C64::new(1.0, 12.0), &opts).is_err());
    }
}
