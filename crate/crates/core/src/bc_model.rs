//! Two-point boundary conditions: validation, reduction to canonical families,
//! case classification and adjoints.
//!
//! General conditions are
//! `a1 y'(0) + b1 y'(1) + a0 y(0) + b0 y(1) = 0`, `c0 y(0) + d0 y(1) = 0`.

use std::fmt;

use crate::error::{Result, SpectralError};
use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Boundary values `(y(0), y'(0), y(1), y'(1))` of a function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EndpointValues {
    pub y0: C64,
    pub dy0: C64,
    pub y1: C64,
    pub dy1: C64,
}

impl EndpointValues {
    pub fn as_array(&self) -> [C64; 4] {
        [self.y0, self.dy0, self.y1, self.dy1]
    }
}

/// Two linear functionals over `(y(0), y'(0), y(1), y'(1))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryForm {
    pub rows: [[C64; 4]; 2],
}

impl BoundaryForm {
    pub fn apply(&self, row: usize, v: &EndpointValues) -> C64 {
        self.rows[row]
            .iter()
            .zip(v.as_array())
            .map(|(c, x)| c * x)
            .sum()
    }

    /// Dirichlet conditions `y(0) = y(1) = 0`.
    pub fn dirichlet() -> Self {
        Self {
            rows: [[ONE, ZERO, ZERO, ZERO], [ZERO, ZERO, ONE, ZERO]],
        }
    }
}

/// Raw six-coefficient boundary conditions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneralBc {
    pub a1: C64,
    pub b1: C64,
    pub a0: C64,
    pub b0: C64,
    pub c0: C64,
    pub d0: C64,
}

impl GeneralBc {
    pub fn new(a1: C64, b1: C64, a0: C64, b0: C64, c0: C64, d0: C64) -> Self {
        Self {
            a1,
            b1,
            a0,
            b0,
            c0,
            d0,
        }
    }

    /// Real-coefficient convenience constructor.
    pub fn real(a1: f64, b1: f64, a0: f64, b0: f64, c0: f64, d0: f64) -> Self {
        Self::new(
            a1.into(),
            b1.into(),
            a0.into(),
            b0.into(),
            c0.into(),
            d0.into(),
        )
    }

    pub fn form(&self) -> BoundaryForm {
        BoundaryForm {
            rows: [
                [self.a0, self.a1, self.b0, self.b1],
                [self.c0, ZERO, self.d0, ZERO],
            ],
        }
    }

    /// Multiplies the first row by `s` and the second by `t`.
    pub fn scaled(&self, s: C64, t: C64) -> Self {
        Self {
            a1: self.a1 * s,
            b1: self.b1 * s,
            a0: self.a0 * s,
            b0: self.b0 * s,
            c0: self.c0 * t,
            d0: self.d0 * t,
        }
    }
}

/// The theta coefficients with the overall normalization constant set to one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaTriple {
    pub theta_minus1: C64,
    pub theta_0: C64,
    pub theta_1: C64,
}

impl ThetaTriple {
    /// `theta_0^2 - 4 theta_1 theta_{-1}`; vanishes exactly for regular but not
    /// strongly regular conditions.
    pub fn discriminant(&self) -> C64 {
        self.theta_0 * self.theta_0 - 4.0 * self.theta_1 * self.theta_minus1
    }
}

/// Canonical operator family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    /// `y'(0) + p y'(1) + r y(1) = 0`, `y(0) + (-1)^sigma y(1) = 0`.
    T1,
    /// `p y'(0) + y'(1) + r y(1) = 0`, `y(0) + (-1)^sigma y(1) = 0`.
    T2,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::T1 => write!(f, "T1"),
            Family::T2 => write!(f, "T2"),
        }
    }
}

/// Parity `sigma`; `One` gives windows at `2 pi n`, `Zero` at `(2n+1) pi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sigma {
    Zero,
    One,
}

impl Sigma {
    /// `(-1)^sigma`.
    pub fn sign(self) -> f64 {
        match self {
            Sigma::Zero => 1.0,
            Sigma::One => -1.0,
        }
    }

    pub fn from_int(v: i64) -> Option<Self> {
        match v {
            0 => Some(Sigma::Zero),
            1 => Some(Sigma::One),
            _ => None,
        }
    }

    pub fn as_int(self) -> u8 {
        match self {
            Sigma::Zero => 0,
            Sigma::One => 1,
        }
    }
}

impl fmt::Display for Sigma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_int())
    }
}

/// Canonical boundary conditions with parameters `p` (beta1 or beta3) and
/// `r` (beta2 or beta4).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CanonicalBc {
    pub family: Family,
    pub sigma: Sigma,
    pub p: C64,
    pub r: C64,
}

impl CanonicalBc {
    /// Validates the regularity guard `p != -(-1)^sigma`.
    pub fn new(family: Family, sigma: Sigma, p: C64, r: C64) -> Result<Self> {
        let forbidden = -sigma.sign();
        if (p - forbidden).norm() <= 1e-10 * (1.0 + p.norm()) {
            return Err(SpectralError::ViolatesRegularity { p });
        }
        Ok(Self {
            family,
            sigma,
            p,
            r,
        })
    }

    pub fn real(family: Family, sigma: Sigma, p: f64, r: f64) -> Result<Self> {
        Self::new(family, sigma, p.into(), r.into())
    }

    pub fn eps(&self) -> f64 {
        self.sigma.sign()
    }

    pub fn form(&self) -> BoundaryForm {
        let eps = C64::from(self.eps());
        let first = match self.family {
            Family::T1 => [ZERO, ONE, self.r, self.p],
            Family::T2 => [ZERO, self.p, self.r, ONE],
        };
        BoundaryForm {
            rows: [first, [ONE, ZERO, eps, ZERO]],
        }
    }

    pub fn to_general(&self) -> GeneralBc {
        let [r0, r1] = self.form().rows;
        GeneralBc::new(r0[1], r0[3], r0[0], r0[2], r1[0], r1[2])
    }
}

impl fmt::Display for CanonicalBc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (pn, rn) = match self.family {
            Family::T1 => ("beta1", "beta2"),
            Family::T2 => ("beta3", "beta4"),
        };
        write!(
            f,
            "{} sigma={} {}={} {}={}",
            self.family, self.sigma, pn, self.p, rn, self.r
        )
    }
}

/// Conditions whose derivative row is `y'(0) + (-1)^sigma y'(1)`; these are the
/// adjoints of the canonical families.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AlphaForm {
    /// `y'(0) + e y'(1) + alpha1 y(1) = 0`, `y(0) + alpha2 y(1) = 0`.
    RightTerm {
        sigma: Sigma,
        alpha1: C64,
        alpha2: C64,
    },
    /// `y'(0) + e y'(1) + alpha3 y(0) = 0`, `alpha4 y(0) + y(1) = 0`.
    LeftTerm {
        sigma: Sigma,
        alpha3: C64,
        alpha4: C64,
    },
}

impl AlphaForm {
    pub fn sigma(&self) -> Sigma {
        match *self {
            AlphaForm::RightTerm { sigma, .. } | AlphaForm::LeftTerm { sigma, .. } => sigma,
        }
    }

    pub fn form(&self) -> BoundaryForm {
        let eps = C64::from(self.sigma().sign());
        match *self {
            AlphaForm::RightTerm { alpha1, alpha2, .. } => BoundaryForm {
                rows: [[ZERO, ONE, alpha1, eps], [ONE, ZERO, alpha2, ZERO]],
            },
            AlphaForm::LeftTerm { alpha3, alpha4, .. } => BoundaryForm {
                rows: [[alpha3, ONE, ZERO, eps], [alpha4, ZERO, ONE, ZERO]],
            },
        }
    }

    /// Canonical parameters of the adjoint operator.
    pub fn adjoint_canonical(&self) -> Result<CanonicalBc> {
        match *self {
            AlphaForm::LeftTerm {
                sigma,
                alpha3,
                alpha4,
            } => CanonicalBc::new(
                Family::T1,
                sigma,
                alpha4.conj(),
                -sigma.sign() * alpha3.conj(),
            ),
            AlphaForm::RightTerm {
                sigma,
                alpha1,
                alpha2,
            } => CanonicalBc::new(
                Family::T2,
                sigma,
                alpha2.conj(),
                sigma.sign() * alpha1.conj(),
            ),
        }
    }
}

/// Boundary conditions of the adjoint operator, expressed in alpha form.
pub fn adjoint_of(cbc: &CanonicalBc) -> AlphaForm {
    let e = cbc.eps();
    match cbc.family {
        Family::T1 => AlphaForm::LeftTerm {
            sigma: cbc.sigma,
            alpha3: -e * cbc.r.conj(),
            alpha4: cbc.p.conj(),
        },
        Family::T2 => AlphaForm::RightTerm {
            sigma: cbc.sigma,
            alpha1: e * cbc.r.conj(),
            alpha2: cbc.p.conj(),
        },
    }
}

/// Result of reducing general conditions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Reduction {
    /// Canonical conditions of the operator that is actually solved.
    pub canonical: CanonicalBc,
    /// Set when the input itself is in alpha form; `canonical` then describes
    /// the adjoint and eigenvalues of the input are the conjugates.
    pub adjoint_form: Option<AlphaForm>,
}

impl Reduction {
    pub fn is_adjoint_form(&self) -> bool {
        self.adjoint_form.is_some()
    }

    /// Boundary functionals of the input problem (up to row equivalence).
    pub fn original_form(&self) -> BoundaryForm {
        match &self.adjoint_form {
            Some(a) => a.form(),
            None => self.canonical.form(),
        }
    }
}

/// Case tag of boundary conditions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BcCase {
    StronglyRegular,
    /// Periodic or antiperiodic.
    CaseA,
    CaseB,
    CaseC,
    General,
    NotRegular,
}

impl fmt::Display for BcCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BcCase::StronglyRegular => "StronglyRegular",
            BcCase::CaseA => "CaseA",
            BcCase::CaseB => "CaseB",
            BcCase::CaseC => "CaseC",
            BcCase::General => "General",
            BcCase::NotRegular => "NotRegular",
        };
        f.write_str(s)
    }
}

fn near(x: C64, y: C64, tol: f64) -> bool {
    (x - y).norm() <= tol * x.norm().max(y.norm())
}

pub fn compute_theta(bc: &GeneralBc) -> ThetaTriple {
    let t1 = bc.b1 * bc.c0 + bc.a1 * bc.d0;
    ThetaTriple {
        theta_minus1: t1,
        theta_0: 2.0 * (bc.a1 * bc.c0 + bc.b1 * bc.d0),
        theta_1: t1,
    }
}

fn check_degenerate(bc: &GeneralBc) -> Result<()> {
    let row1 = [bc.a1, bc.b1, bc.a0, bc.b0];
    if row1.iter().all(|c| c.norm() == 0.0) {
        return Err(SpectralError::DegenerateBc("first row is zero".into()));
    }
    if bc.c0.norm() == 0.0 && bc.d0.norm() == 0.0 {
        return Err(SpectralError::DegenerateBc("second row is zero".into()));
    }
    let scale1 = row1.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let scale2 = bc.c0.norm().max(bc.d0.norm());
    let tiny = 1e-10 * scale1;
    if bc.a1.norm() <= tiny && bc.b1.norm() <= tiny {
        let minor = bc.a0 * bc.d0 - bc.b0 * bc.c0;
        if minor.norm() <= 1e-10 * scale1 * scale2 {
            return Err(SpectralError::DegenerateBc("rows are proportional".into()));
        }
    }
    Ok(())
}

/// Regularity guard `b1 c0 + a1 d0 != 0` (relative to coefficient scale).
pub fn is_regular(bc: &GeneralBc, tol: f64) -> bool {
    let t = bc.b1 * bc.c0 + bc.a1 * bc.d0;
    let scale = (bc.a1.norm() + bc.b1.norm()) * (bc.c0.norm() + bc.d0.norm());
    t.norm() > tol * scale
}

fn derivative_row_sign(bc: &GeneralBc, tol: f64) -> Option<Sigma> {
    if bc.a1.norm() == 0.0 || bc.b1.norm() == 0.0 {
        return None;
    }
    [Sigma::Zero, Sigma::One]
        .into_iter()
        .find(|s| near(bc.a1, s.sign() * bc.b1, tol))
}

fn value_row_sign(bc: &GeneralBc, tol: f64) -> Option<Sigma> {
    if bc.c0.norm() == 0.0 || bc.d0.norm() == 0.0 {
        return None;
    }
    [Sigma::Zero, Sigma::One]
        .into_iter()
        .find(|s| near(bc.d0, s.sign() * bc.c0, tol))
}

/// True for regular conditions whose theta discriminant vanishes.
pub fn is_regular_not_strongly(bc: &GeneralBc) -> Result<bool> {
    is_regular_not_strongly_tol(bc, 1e-10)
}

pub fn is_regular_not_strongly_tol(bc: &GeneralBc, tol: f64) -> Result<bool> {
    check_degenerate(bc)?;
    if !is_regular(bc, tol) {
        return Ok(false);
    }
    Ok(derivative_row_sign(bc, tol).is_some() || value_row_sign(bc, tol).is_some())
}

/// Reduces general conditions to canonical form. Conditions in alpha form are
/// returned as the canonical form of their adjoint with the flag set.
pub fn reduce_to_canonical(bc: &GeneralBc) -> Result<Reduction> {
    reduce_to_canonical_tol(bc, 1e-10)
}

pub fn reduce_to_canonical_tol(bc: &GeneralBc, tol: f64) -> Result<Reduction> {
    check_degenerate(bc)?;
    if !is_regular(bc, tol) {
        return Err(SpectralError::NotReducible(
            "conditions are not regular".into(),
        ));
    }
    if let Some(sigma) = value_row_sign(bc, tol) {
        // Normalize the second row to y(0) + e y(1) and eliminate y(0).
        let e = sigma.sign();
        let y1_coef = bc.b0 - e * bc.a0;
        let canonical = if bc.a1.norm() > 0.0 {
            CanonicalBc::new(Family::T1, sigma, bc.b1 / bc.a1, y1_coef / bc.a1)?
        } else {
            CanonicalBc::new(Family::T2, sigma, bc.a1 / bc.b1, y1_coef / bc.b1)?
        };
        return Ok(Reduction {
            canonical,
            adjoint_form: None,
        });
    }
    if let Some(sigma) = derivative_row_sign(bc, tol) {
        let alpha = if bc.c0.norm() >= bc.d0.norm() {
            let ratio = bc.d0 / bc.c0;
            AlphaForm::RightTerm {
                sigma,
                alpha1: (bc.b0 - bc.a0 * ratio) / bc.a1,
                alpha2: ratio,
            }
        } else {
            let ratio = bc.c0 / bc.d0;
            AlphaForm::LeftTerm {
                sigma,
                alpha3: (bc.a0 - bc.b0 * ratio) / bc.a1,
                alpha4: ratio,
            }
        };
        let canonical = alpha.adjoint_canonical()?;
        return Ok(Reduction {
            canonical,
            adjoint_form: Some(alpha),
        });
    }
    Err(SpectralError::NotReducible(
        "neither the derivative row nor the value row has the form u(0) +/- u(1)".into(),
    ))
}

pub fn classify_case(cbc: &CanonicalBc) -> BcCase {
    classify_case_tol(cbc, 1e-10)
}

pub fn classify_case_tol(cbc: &CanonicalBc, tol: f64) -> BcCase {
    let r_zero = cbc.r.norm() <= tol;
    let e = C64::from(cbc.eps());
    let p_matches = (cbc.p - e).norm() <= tol * (1.0 + cbc.p.norm());
    match (r_zero, p_matches) {
        (true, true) => BcCase::CaseA,
        (false, true) => BcCase::CaseB,
        (true, false) => BcCase::CaseC,
        (false, false) => BcCase::General,
    }
}

/// Full taxonomy of raw conditions.
pub fn classify_general(bc: &GeneralBc) -> Result<BcCase> {
    check_degenerate(bc)?;
    if !is_regular(bc, 1e-10) {
        return Ok(BcCase::NotRegular);
    }
    if !is_regular_not_strongly(bc)? {
        return Ok(BcCase::StronglyRegular);
    }
    let red = reduce_to_canonical(bc)?;
    Ok(classify_case(&red.canonical))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn theta_examples() {
        let t = compute_theta(&GeneralBc::real(1.0, 1.0, 5.0, -3.0, 1.0, 1.0));
        assert_eq!(
            (t.theta_minus1, t.theta_0, t.theta_1),
            (c(2., 0.), c(4., 0.), c(2., 0.))
        );
        assert_eq!(t.discriminant(), c(0.0, 0.0));
        let t = compute_theta(&GeneralBc::real(1.0, 0.0, 0.0, 0.0, 0.0, 1.0));
        assert_eq!(
            (t.theta_minus1, t.theta_0, t.theta_1),
            (c(1., 0.), c(0., 0.), c(1., 0.))
        );
        assert_ne!(t.discriminant(), c(0.0, 0.0));
        let t = compute_theta(&GeneralBc::real(2.0, 1.0, 0.0, 0.0, 1.0, 3.0));
        assert_eq!(
            (t.theta_minus1, t.theta_0, t.theta_1),
            (c(7., 0.), c(10., 0.), c(7., 0.))
        );
        assert_eq!(t.discriminant(), c(100.0 - 196.0, 0.0));
    }

    #[test]
    fn regularity_examples() {
        assert!(is_regular_not_strongly(&GeneralBc::real(1.0, -1.0, 0.0, 0.0, 1.0, -1.0)).unwrap());
        assert!(!is_regular_not_strongly(&GeneralBc::real(1.0, 0.0, 0.0, 0.0, 0.0, 1.0)).unwrap());
        assert!(is_regular_not_strongly(&GeneralBc::real(1.0, 1.0, 0.0, 0.0, 1.0, 0.0)).unwrap());
    }

    #[test]
    fn degenerate_inputs() {
        let zero_row = GeneralBc::real(0.0, 0.0, 0.0, 0.0, 1.0, 1.0);
        assert!(matches!(
            is_regular_not_strongly(&zero_row),
            Err(SpectralError::DegenerateBc(_))
        ));
        let prop = GeneralBc::real(0.0, 0.0, 2.0, 2.0, 1.0, 1.0);
        assert!(matches!(
            is_regular_not_strongly(&prop),
            Err(SpectralError::DegenerateBc(_))
        ));
        let empty_second = GeneralBc::real(1.0, 1.0, 0.0, 0.0, 0.0, 0.0);
        assert!(matches!(
            reduce_to_canonical(&empty_second),
            Err(SpectralError::DegenerateBc(_))
        ));
    }

    #[test]
    fn reduction_examples() {
        let r = reduce_to_canonical(&GeneralBc::real(1.0, 2.0, 0.0, 3.0, 1.0, -1.0)).unwrap();
        assert!(!r.is_adjoint_form());
        assert_eq!(r.canonical.family, Family::T1);
        assert_eq!(r.canonical.sigma, Sigma::One);
        assert_eq!((r.canonical.p, r.canonical.r), (c(2., 0.), c(3., 0.)));

        let r = reduce_to_canonical(&GeneralBc::real(1.0, -1.0, 0.0, 0.0, 1.0, -1.0)).unwrap();
        assert_eq!((r.canonical.p, r.canonical.r), (c(-1., 0.), c(0., 0.)));
        assert_eq!(classify_case(&r.canonical), BcCase::CaseA);

        let r = reduce_to_canonical(&GeneralBc::real(0.0, 1.0, 0.0, 1.0, 1.0, -1.0)).unwrap();
        assert_eq!(r.canonical.family, Family::T2);
        assert_eq!(r.canonical.sigma, Sigma::One);
        assert_eq!((r.canonical.p, r.canonical.r), (c(0., 0.), c(1., 0.)));
    }

    #[test]
    fn alpha_form_reduction() {
        // y'(0) + y'(1) = 0, y(0) = 0.
        let r = reduce_to_canonical(&GeneralBc::real(1.0, 1.0, 0.0, 0.0, 1.0, 0.0)).unwrap();
        assert!(r.is_adjoint_form());
        assert_eq!(r.canonical.family, Family::T2);
        assert_eq!(r.canonical.sigma, Sigma::Zero);
        assert_eq!((r.canonical.p, r.canonical.r), (c(0., 0.), c(0., 0.)));
    }

    #[test]
    fn regularity_guard() {
        assert!(matches!(
            CanonicalBc::real(Family::T1, Sigma::One, 1.0, 0.0),
            Err(SpectralError::ViolatesRegularity { .. })
        ));
        assert!(CanonicalBc::real(Family::T1, Sigma::One, -1.0, 0.0).is_ok());
        assert!(matches!(
            reduce_to_canonical(&GeneralBc::real(1.0, 1.0, 0.0, 0.0, 1.0, -1.0)),
            Err(SpectralError::NotReducible(_)) | Err(SpectralError::ViolatesRegularity { .. })
        ));
    }

    #[test]
    fn case_examples() {
        let t = |p: f64, r: f64| CanonicalBc::real(Family::T1, Sigma::One, p, r).unwrap();
        assert_eq!(classify_case(&t(-1.0, 0.0)), BcCase::CaseA);
        assert_eq!(classify_case(&t(-1.0, 5.0)), BcCase::CaseB);
        assert_eq!(classify_case(&t(2.0, 0.0)), BcCase::CaseC);
        assert_eq!(classify_case(&t(2.0, 1.0)), BcCase::General);
    }

    #[test]
    fn adjoint_examples() {
        let a = adjoint_of(&CanonicalBc::real(Family::T1, Sigma::One, 3.0, 0.0).unwrap());
        assert_eq!(
            a,
            AlphaForm::LeftTerm {
                sigma: Sigma::One,
                alpha3: c(0., 0.),
                alpha4: c(3., 0.)
            }
        );
        let cbc = CanonicalBc::new(Family::T1, Sigma::Zero, c(0., 1.), c(1., 1.)).unwrap();
        match adjoint_of(&cbc) {
            AlphaForm::LeftTerm { alpha3, alpha4, .. } => {
                assert_eq!(alpha3, c(-1.0, 1.0));
                assert_eq!(alpha4, c(0.0, -1.0));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(adjoint_of(&cbc).adjoint_canonical().unwrap(), cbc);
    }

    #[test]
    fn strongly_regular_and_not_regular_tags() {
        assert_eq!(
            classify_general(&GeneralBc::real(1.0, 0.0, 0.0, 0.0, 0.0, 1.0)).unwrap(),
            BcCase::StronglyRegular
        );
        // b1 c0 + a1 d0 = 0.
        assert_eq!(
            classify_general(&GeneralBc::real(1.0, 1.0, 0.0, 0.0, 1.0, -1.0)).unwrap(),
            BcCase::NotRegular
        );
    }
}
