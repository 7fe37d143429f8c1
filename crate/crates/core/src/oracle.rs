//! Finite-difference eigenvalue oracle. The operator is discretized on a
//! uniform grid with second-order central differences; the two boundary
//! functionals become matrix rows with one-sided three-point derivative
//! stencils. Eigenvalues are zeros of `det(A - lambda B)`.
//!
//! The boundary rows couple both ends of the grid. Folding the unknowns
//! (`0, N, 1, N-1, 2, ...`) turns that coupling into a narrow band, so each
//! determinant costs `O(N)`.

use std::f64::consts::PI;

use crate::bc_model::{BoundaryForm, EndpointValues, Sigma};
use crate::contour::{locate_zeros, ContourOptions, NewtonOptions, Rect};
use crate::determinant::bc_determinant;
use crate::eig_solver::window_center;
use crate::error::{Result, SpectralError};
use crate::potential::Potential;
use crate::C64;

/// Band half-widths of the folded matrix.
const KL: usize = 5;
const KU: usize = 5;

/// Default multiplier applied to the calibrated error constant.
pub const ERROR_SAFETY: f64 = 4.0;

/// Discretized pencil `(A, B)`. `B` selects the interior rows.
#[derive(Clone, Debug, PartialEq)]
pub struct PencilProblem {
    grid: usize,
    q: Vec<f64>,
    form: BoundaryForm,
    error_constant: Option<f64>,
}

impl PencilProblem {
    /// `grid` intervals of width `1/grid`.
    pub fn new(q: &Potential, form: BoundaryForm, grid: usize) -> Result<Self> {
        if grid < 8 {
            return Err(SpectralError::OutOfRange(format!(
                "grid of {grid} intervals is too coarse"
            )));
        }
        let h = 1.0 / grid as f64;
        Ok(Self {
            grid,
            q: (0..=grid).map(|k| q.eval(k as f64 * h)).collect(),
            form,
            error_constant: None,
        })
    }

    /// Same operator with Dirichlet conditions.
    pub fn dirichlet(q: &Potential, grid: usize) -> Result<Self> {
        Self::new(q, BoundaryForm::dirichlet(), grid)
    }

    pub fn with_error_constant(mut self, c: f64) -> Self {
        self.error_constant = Some(c);
        self
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn step(&self) -> f64 {
        1.0 / self.grid as f64
    }

    pub fn form(&self) -> &BoundaryForm {
        &self.form
    }

    pub fn error_constant(&self) -> Option<f64> {
        self.error_constant
    }

    /// Discretization error bar at `lambda`: `C h^2 (1 + |lambda|^2)`.
    pub fn error_bar(&self, lambda: C64) -> Option<f64> {
        let h = self.step();
        self.error_constant
            .map(|c| c * h * h * (1.0 + lambda.norm_sqr()))
    }

    /// Folded position of grid node `k`.
    fn position(&self, k: usize) -> usize {
        let n = self.grid;
        if k <= n / 2 {
            2 * k
        } else {
            2 * (n - k) + 1
        }
    }

    fn assemble(&self, lambda: C64) -> Band {
        let n = self.grid;
        let h = self.step();
        let mut band = Band::zeros(n + 1);
        let inv_h2 = 1.0 / (h * h);
        for k in 1..n {
            let row = self.position(k);
            band.add(row, self.position(k - 1), C64::new(-inv_h2, 0.0));
            band.add(row, self.position(k + 1), C64::new(-inv_h2, 0.0));
            band.add(row, row, C64::new(2.0 * inv_h2 + self.q[k], 0.0) - lambda);
        }
        let d = 1.0 / (2.0 * h);
        for (i, node) in [(0, 0), (1, n)] {
            let [a, b, c, e] = self.form.rows[i];
            let row = self.position(node);
            let mut put = |k: usize, v: C64| band.add(row, self.position(k), v);
            put(0, a - 3.0 * d * b);
            put(1, 4.0 * d * b);
            put(2, -d * b);
            put(n, c + 3.0 * d * e);
            put(n - 1, -4.0 * d * e);
            put(n - 2, d * e);
        }
        band
    }
}

/// Row-wise band storage with room for pivoting fill-in.
struct Band {
    n: usize,
    width: usize,
    data: Vec<C64>,
}

impl Band {
    fn zeros(n: usize) -> Self {
        let width = 2 * KL + KU + 1;
        Self {
            n,
            width,
            data: vec![C64::new(0.0, 0.0); n * width],
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + KL >= i && j <= i + KL + KU);
        i * self.width + (j + KL - i)
    }

    fn add(&mut self, i: usize, j: usize, v: C64) {
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    /// `ln det` by Gaussian elimination with partial pivoting.
    fn log_det(mut self, at: C64) -> Result<C64> {
        let n = self.n;
        let mut acc = C64::new(0.0, 0.0);
        let mut swaps = 0usize;
        for k in 0..n {
            let last_row = (k + KL).min(n - 1);
            let last_col = (k + KL + KU).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.idx(k, k)].norm();
            for r in k + 1..=last_row {
                let v = self.data[self.idx(r, k)].norm();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == 0.0 {
                return Err(SpectralError::SingularFactorization { at });
            }
            if p != k {
                swaps += 1;
                for j in k..=last_col {
                    let (a, b) = (self.idx(k, j), self.idx(p, j));
                    self.data.swap(a, b);
                }
            }
            let piv = self.data[self.idx(k, k)];
            acc += piv.ln();
            for r in k + 1..=last_row {
                let f = self.data[self.idx(r, k)] / piv;
                if f == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in k + 1..=last_col {
                    let src = self.data[self.idx(k, j)];
                    let dst = self.idx(r, j);
                    self.data[dst] -= f * src;
                }
            }
        }
        if !(acc.re.is_finite() && acc.im.is_finite()) {
            // A pivot underflowed and the fill-in overflowed: numerically singular.
            return Err(SpectralError::SingularFactorization { at });
        }
        if swaps % 2 == 1 {
            acc += C64::new(0.0, PI);
        }
        Ok(acc)
    }
}

/// `ln det(A - lambda B)`; an exactly singular factorization is reported as
/// `SingularFactorization`.
pub fn pencil_det(prob: &PencilProblem, lambda: C64) -> Result<C64> {
    prob.assemble(lambda).log_det(lambda)
}

/// Contour settings suited to pencil determinants.
pub fn oracle_contour_options(scale: f64) -> ContourOptions {
    ContourOptions {
        near_zero: 1e-12,
        mult_radius: 1e-4 * (1.0 + scale),
        max_depth: 12,
        newton: NewtonOptions {
            max_iter: 80,
            rel_step: 1e-7,
            // Roundoff in the factorization limits roots to about 1e-9 relative.
            tol: 1e-8,
        },
        ..ContourOptions::default()
    }
}

/// Rectangle in the `lambda` plane covering the `mu` window of index `n`.
/// Window 0 is extended to `Re lambda = -neg` and widened by `neg`.
pub fn lambda_window(sigma: Sigma, n: i64, half_width: f64, neg: f64) -> Rect {
    let c = window_center(sigma, n);
    let hi = (c + half_width).powi(2);
    let im = 2.0 * (c + half_width) * half_width;
    if n == 0 {
        Rect::new(-neg, hi, -(im + neg), im + neg)
    } else {
        Rect::new((c - half_width).powi(2), hi, -im, im)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleEigenvalue {
    pub lambda: C64,
    pub multiplicity: usize,
    /// `None` when the problem carries no calibrated constant.
    pub error_bar: Option<f64>,
}

/// Zeros of the pencil determinant in `region`, sorted by real part.
/// With `count_hint`, a different zero count is an error.
pub fn oracle_eigs(
    prob: &PencilProblem,
    region: Rect,
    count_hint: Option<usize>,
) -> Result<Vec<OracleEigenvalue>> {
    let scale = region.re_max.abs().max(region.re_min.abs()).sqrt();
    let opts = oracle_contour_options(scale);
    let f = |lambda: C64| pencil_det(prob, lambda);
    let (zeros, _) = locate_zeros(&f, region, &[], &opts)?;
    let total: usize = zeros.iter().map(|z| z.multiplicity).sum();
    if let Some(expected) = count_hint {
        if expected != total {
            return Err(SpectralError::NonConvergence(format!(
                "expected {expected} pencil eigenvalues in region, found {total}"
            )));
        }
    }
    Ok(zeros
        .into_iter()
        .map(|z| OracleEigenvalue {
            lambda: z.z,
            multiplicity: z.multiplicity,
            error_bar: prob.error_bar(z.z),
        })
        .collect())
}

/// `ln` of the characteristic determinant for `q = 0`, built from `cos(mu x)`
/// and `sin(mu x)/mu`; entire in `lambda = mu^2`.
pub fn free_log_delta(form: &BoundaryForm, lambda: C64) -> C64 {
    let mu = lambda.sqrt();
    let (c, s) = if mu.norm() < 1e-4 {
        (
            C64::new(1.0, 0.0) - lambda / 2.0,
            C64::new(1.0, 0.0) - lambda / 6.0,
        )
    } else {
        (mu.cos(), mu.sin() / mu)
    };
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let yc = EndpointValues {
        y0: one,
        dy0: zero,
        y1: c,
        dy1: -lambda * s,
    };
    let ys = EndpointValues {
        y0: zero,
        dy0: one,
        y1: s,
        dy1: c,
    };
    bc_determinant(form, &[yc, ys]).ln()
}

/// Exact `q = 0` eigenvalues in `region`.
pub fn free_eigs(form: &BoundaryForm, region: Rect) -> Result<Vec<C64>> {
    let scale = region.re_max.abs().max(region.re_min.abs()).sqrt();
    let opts = ContourOptions {
        newton: NewtonOptions::default(),
        ..oracle_contour_options(scale)
    };
    let f = |lambda: C64| Ok(free_log_delta(form, lambda));
    let (zeros, _) = locate_zeros(&f, region, &[], &opts)?;
    Ok(zeros
        .iter()
        .flat_map(|z| std::iter::repeat_n(z.z, z.multiplicity))
        .collect())
}

/// Pairs each `a` with the nearest unused `b`.
pub fn match_nearest(a: &[C64], b: &[C64]) -> Vec<(C64, Option<C64>)> {
    let mut used = vec![false; b.len()];
    a.iter()
        .map(|&x| {
            let best = (0..b.len())
                .filter(|&k| !used[k])
                .min_by(|&i, &j| (b[i] - x).norm().partial_cmp(&(b[j] - x).norm()).unwrap());
            match best {
                Some(k) => {
                    used[k] = true;
                    (x, Some(b[k]))
                }
                None => (x, None),
            }
        })
        .collect()
}

/// Error constant `C` from `q = 0`: the largest `|lambda_h - lambda| / (h^2 (1 + |lambda|^2))`
/// over windows `0..=n_max`.
pub fn calibrate_error_constant(
    form: &BoundaryForm,
    sigma: Sigma,
    grid: usize,
    n_max: i64,
    half_width: f64,
    neg: f64,
) -> Result<f64> {
    let prob = PencilProblem::new(&Potential::zero(), *form, grid)?;
    let h = prob.step();
    let mut c: f64 = 0.0;
    for n in 0..=n_max {
        let region = lambda_window(sigma, n, half_width, neg);
        let exact = free_eigs(form, region)?;
        let approx: Vec<C64> = oracle_eigs(&prob, region, Some(exact.len()))?
            .iter()
            .flat_map(|e| std::iter::repeat_n(e.lambda, e.multiplicity))
            .collect();
        for (x, y) in match_nearest(&exact, &approx) {
            let y = y.ok_or_else(|| {
                SpectralError::NonConvergence("unmatched pencil eigenvalue".into())
            })?;
            c = c.max((y - x).norm() / (h * h * (1.0 + x.norm_sqr())));
        }
    }
    Ok(c)
}

/// Second-order convergence check: `|lambda(N) - lambda(2N)| / |lambda(2N) - lambda|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RichardsonRecord {
    pub exact: C64,
    pub coarse: C64,
    pub fine: C64,
    pub ratio: f64,
}

/// Richardson records for the `q = 0` eigenvalues in `regions`.
pub fn richardson(
    form: &BoundaryForm,
    grid: usize,
    regions: &[Rect],
) -> Result<Vec<RichardsonRecord>> {
    let coarse = PencilProblem::new(&Potential::zero(), *form, grid)?;
    let fine = PencilProblem::new(&Potential::zero(), *form, 2 * grid)?;
    let mut out = Vec::new();
    for region in regions {
        let exact = free_eigs(form, *region)?;
        let get = |p: &PencilProblem| -> Result<Vec<C64>> {
            Ok(oracle_eigs(p, *region, Some(exact.len()))?
                .iter()
                .map(|e| e.lambda)
                .collect())
        };
        let (lc, lf) = (get(&coarse)?, get(&fine)?);
        for ((x, c), (_, f)) in match_nearest(&exact, &lc)
            .into_iter()
            .zip(match_nearest(&exact, &lf))
        {
            if let (Some(c), Some(f)) = (c, f) {
                out.push(RichardsonRecord {
                    exact: x,
                    coarse: c,
                    fine: f,
                    ratio: (c - f).norm() / (f - x).norm(),
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bc_model::{CanonicalBc, Family};

    fn t1() -> CanonicalBc {
        CanonicalBc::real(Family::T1, Sigma::One, 3.0, 2.0).unwrap()
    }

    #[test]
    fn folding_is_a_permutation() {
        for n in [8, 9, 10, 2000] {
            let p = PencilProblem::dirichlet(&Potential::zero(), n).unwrap();
            let mut pos: Vec<usize> = (0..=n).map(|k| p.position(k)).collect();
            pos.sort_unstable();
            assert_eq!(pos, (0..=n).collect::<Vec<_>>());
        }
    }

    #[test]
    fn small_determinant_matches_dense() {
        // Dirichlet with N = 8: det(A - lambda B) = det of the 7x7 tridiagonal block.
        let p = PencilProblem::dirichlet(&Potential::zero(), 8).unwrap();
        let lambda = C64::new(3.0, 1.0);
        let h2inv = 64.0;
        let (mut d0, mut d1) = (C64::new(1.0, 0.0), C64::new(2.0 * h2inv, 0.0) - lambda);
        for _ in 1..7 {
            let d2 = (C64::new(2.0 * h2inv, 0.0) - lambda) * d1 - h2inv * h2inv * d0;
            d0 = d1;
            d1 = d2;
        }
        let got = pencil_det(&p, lambda).unwrap().exp();
        assert!((got - d1).norm() / d1.norm() < 1e-12);
    }

    #[test]
    fn dirichlet_self_test() {
        let p = PencilProblem::dirichlet(&Potential::zero(), 2000).unwrap();
        let region = Rect::new(1.0, 300.0, -5.0, 5.0);
        let eigs = oracle_eigs(&p, region, Some(5)).unwrap();
        for (k, e) in eigs.iter().enumerate() {
            let exact = ((k + 1) as f64 * PI).powi(2);
            assert!((e.lambda - exact).norm() / exact < 1e-3);
        }
    }

    #[test]
    fn nonvanishing_away_from_spectrum() {
        let p = PencilProblem::new(&Potential::zero(), t1().form(), 500).unwrap();
        let vals: Vec<f64> = (0..40)
            .map(|k| pencil_det(&p, C64::new(k as f64 * 20.0, 30.0)).unwrap().re)
            .collect();
        let max = vals.iter().cloned().fold(f64::MIN, f64::max);
        assert!(vals.iter().all(|v| v.is_finite() && *v > max - 20.0));
    }

    #[test]
    fn free_determinant_roots() {
        let form = t1().form();
        let region = lambda_window(Sigma::One, 3, PI / 2.0, 0.0);
        let roots = free_eigs(&form, region).unwrap();
        assert_eq!(roots.len(), 2);
        let c = 6.0 * PI;
        assert!((roots[0].sqrt() - c).norm() < 1e-10);
        assert!((roots[1].sqrt() - c - 2.0 / (2.0 * 3.0 * PI)).norm() < 1e-3);
    }

    #[test]
    fn empty_region() {
        let p = PencilProblem::new(&Potential::zero(), t1().form(), 400).unwrap();
        let region = Rect::new(500.0, 600.0, -10.0, 10.0);
        assert!(oracle_eigs(&p, region, None).unwrap().is_empty());
    }

    #[test]
    fn window_three_matches_closed_form() {
        let form = t1().form();
        let region = lambda_window(Sigma::One, 3, PI / 2.0, 0.0);
        let exact = free_eigs(&form, region).unwrap();
        let p = PencilProblem::new(&Potential::zero(), form, 2000).unwrap();
        let got = oracle_eigs(&p, region, Some(2)).unwrap();
        for (x, y) in exact.iter().zip(&got) {
            assert!((x - y.lambda).norm() / x.norm() < 1e-3);
        }
    }

    #[test]
    fn singular_factorization_reported() {
        // A zero pivot with nothing below it in the column.
        let mut band = Band::zeros(3);
        band.add(1, 1, C64::new(1.0, 0.0));
        band.add(2, 2, C64::new(1.0, 0.0));
        assert!(matches!(
            band.log_det(C64::new(0.0, 0.0)),
            Err(SpectralError::SingularFactorization { .. })
        ));
    }
}
