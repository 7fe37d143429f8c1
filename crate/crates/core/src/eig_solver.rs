//! Eigenvalues as zeros of the characteristic determinant: window counting,
//! Newton refinement, branch labeling and eigenfunction construction.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::bc_model::{
    AlphaForm, BoundaryForm, CanonicalBc, EndpointValues, Family, Reduction, Sigma,
};
use crate::contour::{locate_zeros, ContourOptions, Rect};
use crate::determinant::{bc_determinant, output_nodes};
use crate::error::{Result, SpectralError};
use crate::ode::{propagate, propagate_to, InitialData, OdeOptions, PairState};
use crate::potential::Potential;
use crate::sampled::SampledFunction;
use crate::C64;

const I: C64 = C64::new(0.0, 1.0);

/// Solver settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub ode: OdeOptions,
    pub contour: ContourOptions,
    /// First index handled by windows; lower eigenvalues come from the sweep.
    pub n0: i64,
    pub half_width: f64,
    /// Base of the determinant residual bound `eig_tol * (1 + |mu|^2)`.
    pub eig_tol: f64,
    pub eigenfunctions: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            ode: OdeOptions::default(),
            contour: ContourOptions::default(),
            n0: 5,
            half_width: PI / 2.0,
            eig_tol: 1e-8,
            eigenfunctions: true,
        }
    }
}

/// Evaluation context shared by all workers.
#[derive(Clone, Debug)]
pub struct Problem {
    pub q: Potential,
    /// Canonical conditions of the operator whose determinant is solved.
    pub bc: CanonicalBc,
    /// Set when the user problem is the adjoint of `bc`.
    pub adjoint: Option<AlphaForm>,
}

impl Problem {
    pub fn new(q: Potential, bc: CanonicalBc) -> Self {
        Self {
            q,
            bc,
            adjoint: None,
        }
    }

    pub fn from_reduction(q: Potential, red: &Reduction) -> Self {
        Self {
            q,
            bc: red.canonical,
            adjoint: red.adjoint_form,
        }
    }

    pub fn sigma(&self) -> Sigma {
        self.bc.sigma
    }

    /// Boundary functionals of the user problem.
    pub fn original_form(&self) -> BoundaryForm {
        match &self.adjoint {
            Some(a) => a.form(),
            None => self.bc.form(),
        }
    }

    /// `ln` of the determinant of the solved canonical problem at `mu`.
    fn log_delta(&self, mu: C64, ode: &OdeOptions) -> Result<C64> {
        let end = propagate(&self.q, mu, InitialData::Exponential, ode)?;
        let start = PairState {
            y: [C64::new(1.0, 0.0); 2],
            dy: [I * mu, -I * mu],
        };
        Ok(bc_determinant(&self.bc.form(), &ends(&start, &end)).ln())
    }

    /// Determinant of the user problem at `mu` (solved at `conj(mu)` for the
    /// adjoint form, where the spectra are conjugate).
    pub fn delta(&self, mu: C64, ode: &OdeOptions) -> Result<C64> {
        let m = if self.adjoint.is_some() {
            mu.conj()
        } else {
            mu
        };
        Ok(self.log_delta(m, ode)?.exp())
    }
}

fn ends(at0: &PairState, at1: &PairState) -> [EndpointValues; 2] {
    [0, 1].map(|j| EndpointValues {
        y0: at0.y[j],
        dy0: at0.dy[j],
        y1: at1.y[j],
        dy1: at1.dy[j],
    })
}

/// Window center: `2 pi n` for sigma = 1, `(2n+1) pi` for sigma = 0.
pub fn window_center(sigma: Sigma, n: i64) -> f64 {
    match sigma {
        Sigma::One => 2.0 * PI * n as f64,
        Sigma::Zero => (2 * n + 1) as f64 * PI,
    }
}

/// Reference function `sqrt(2) cos(center * x)` used for phase fixing and
/// distance measurements.
pub fn reference_cosine(sigma: Sigma, n: i64, len: usize) -> SampledFunction {
    let w = window_center(sigma, n);
    SampledFunction::from_fn(len, |x| C64::new(2f64.sqrt() * (w * x).cos(), 0.0))
}

/// Square window around a cluster of two eigenvalues.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchWindow {
    pub n: i64,
    pub center: C64,
    pub half_width: f64,
}

impl SearchWindow {
    pub fn for_index(sigma: Sigma, n: i64, half_width: f64) -> Self {
        Self {
            n,
            center: C64::new(window_center(sigma, n), 0.0),
            half_width,
        }
    }

    pub fn rect(&self) -> Rect {
        Rect::centered(self.center, self.half_width)
    }

    pub fn contains(&self, mu: C64) -> bool {
        (mu.re - self.center.re).abs() < self.half_width
            && (mu.im - self.center.im).abs() < self.half_width
    }
}

/// A computed eigenvalue with its branch label and eigenfunction.
#[derive(Clone, Debug)]
pub struct Eigenpair {
    pub n: i64,
    pub j: usize,
    pub mu: C64,
    pub lambda: C64,
    pub phi: Option<SampledFunction>,
    pub multiplicity: usize,
    pub det_residual: f64,
    pub bc_residual: f64,
    /// Set when the branch label could not be decided from the predictions.
    pub ambiguous: bool,
}

/// Number of zeros of the determinant in `window`.
pub fn count_zeros(
    problem: &Problem,
    window: &SearchWindow,
    opts: &SolverOptions,
) -> Result<usize> {
    let f = |mu: C64| problem.log_delta(mu, &opts.ode);
    Ok(crate::contour::winding_number(&f, window.rect(), &opts.contour)?.0)
}

/// Assigns branch labels. Returns `(index into roots, j, ambiguous)`.
fn label(roots: &[C64], predictions: Option<[C64; 2]>) -> Vec<(usize, usize, bool)> {
    let mut order: Vec<usize> = (0..roots.len()).collect();
    order.sort_by(|&a, &b| {
        roots[a]
            .re
            .partial_cmp(&roots[b].re)
            .unwrap()
            .then(roots[a].im.partial_cmp(&roots[b].im).unwrap())
    });
    let Some(pred) = predictions else {
        return order
            .iter()
            .enumerate()
            .map(|(k, &i)| (i, k + 1, false))
            .collect();
    };
    if roots.len() < 2 {
        return order.iter().map(|&i| (i, 1, false)).collect();
    }
    let mut by_dist = order.clone();
    by_dist.sort_by(|&a, &b| {
        (roots[a] - pred[0])
            .norm()
            .partial_cmp(&(roots[b] - pred[0]).norm())
            .unwrap()
    });
    let d0 = (roots[by_dist[0]] - pred[0]).norm();
    let d1 = (roots[by_dist[1]] - pred[0]).norm();
    let ratio = if d1 > 0.0 { d0 / d1 } else { 1.0 };
    let ambiguous = (0.9..=1.1).contains(&ratio);
    let first = if ambiguous { order[0] } else { by_dist[0] };
    let mut rest: Vec<usize> = order.iter().copied().filter(|&i| i != first).collect();
    rest.sort_by(|&a, &b| {
        (roots[a] - pred[1])
            .norm()
            .partial_cmp(&(roots[b] - pred[1]).norm())
            .unwrap()
    });
    let second = if ambiguous {
        order.iter().copied().find(|&i| i != first).unwrap()
    } else {
        rest[0]
    };
    let mut out = vec![(first, 1, ambiguous), (second, 2, ambiguous)];
    let mut j = 3;
    for &i in &order {
        if i != first && i != second {
            out.push((i, j, false));
            j += 1;
        }
    }
    out
}

/// All eigenvalues in `window`, labeled by proximity to `predictions`
/// (values for the user problem).
pub fn solve_window(
    problem: &Problem,
    window: &SearchWindow,
    predictions: Option<[C64; 2]>,
    opts: &SolverOptions,
) -> Result<Vec<Eigenpair>> {
    let adj = problem.adjoint.is_some();
    let flip = |z: C64| if adj { z.conj() } else { z };
    let f = |mu: C64| problem.log_delta(mu, &opts.ode);
    let seeds: Vec<C64> = predictions
        .map(|p| p.iter().map(|z| flip(*z)).collect())
        .unwrap_or_default();
    let (zeros, _) = locate_zeros(&f, window.rect(), &seeds, &opts.contour)?;
    let roots: Vec<C64> = zeros.iter().map(|z| flip(z.z)).collect();
    let mut out = Vec::with_capacity(roots.len());
    for (idx, j, ambiguous) in label(&roots, predictions) {
        let mu = roots[idx];
        out.push(finish_pair(
            problem,
            window.n,
            j,
            mu,
            zeros[idx].multiplicity,
            ambiguous,
            opts,
        )?);
    }
    out.sort_by_key(|e| e.j);
    Ok(out)
}

fn finish_pair(
    problem: &Problem,
    n: i64,
    j: usize,
    mu: C64,
    multiplicity: usize,
    ambiguous: bool,
    opts: &SolverOptions,
) -> Result<Eigenpair> {
    let mu = if mu.re < 0.0 { -mu } else { mu };
    let det_residual = if mu.norm() > 0.0 {
        problem.delta(mu, &opts.ode)?.norm()
    } else {
        0.0
    };
    let (phi, bc_residual) = if opts.eigenfunctions && multiplicity == 1 {
        let ef = eigenfunction(
            &problem.q,
            &problem.original_form(),
            mu,
            problem.sigma(),
            n,
            &opts.ode,
        )?;
        (Some(ef.phi), ef.bc_residual)
    } else {
        (None, f64::NAN)
    };
    Ok(Eigenpair {
        n,
        j,
        mu,
        lambda: mu * mu,
        phi,
        multiplicity,
        det_residual,
        bc_residual,
        ambiguous,
    })
}

/// Normalized eigenfunction and its boundary residual.
#[derive(Clone, Debug)]
pub struct Eigenfunction {
    pub phi: SampledFunction,
    pub bc_residual: f64,
}

/// Builds the eigenfunction at `mu` from a solution pair and one boundary row,
/// normalizes it, and fixes its phase against `sqrt(2) cos(center x)` of window `n`.
pub fn eigenfunction(
    q: &Potential,
    form: &BoundaryForm,
    mu: C64,
    sigma: Sigma,
    n: i64,
    ode: &OdeOptions,
) -> Result<Eigenfunction> {
    let len = output_nodes(mu);
    let x: Vec<f64> = (0..len).map(|k| k as f64 / (len - 1) as f64).collect();
    let init = if mu.norm() >= 1.0 {
        InitialData::Exponential
    } else {
        InitialData::CosineSine
    };
    let states = propagate_to(q, mu, init, &x, ode)?;
    let e = ends(&states[0], &states[len - 1]);
    let row_scale = |r: usize| {
        form.rows[r]
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
            .max(1e-300)
    };
    let cof = |r: usize| [form.apply(r, &e[0]), form.apply(r, &e[1])];
    let c0 = cof(0);
    let c1 = cof(1);
    let w0 = (c0[0].norm() + c0[1].norm()) / (row_scale(0) * (1.0 + mu.norm()));
    let w1 = (c1[0].norm() + c1[1].norm()) / row_scale(1);
    let c = if w0 >= 1e-3 * w1 { c0 } else { c1 };
    // y = y_1 U(y_2) - y_2 U(y_1)
    let (a, b) = (c[1], -c[0]);
    let mut phi = SampledFunction::new(states.iter().map(|s| a * s.y[0] + b * s.y[1]).collect());
    let mut ep = EndpointValues {
        y0: a * e[0].y0 + b * e[1].y0,
        dy0: a * e[0].dy0 + b * e[1].dy0,
        y1: a * e[0].y1 + b * e[1].y1,
        dy1: a * e[0].dy1 + b * e[1].dy1,
    };
    let norm = phi.norm();
    let scale_ref = (a.norm() + b.norm()).max(1e-300);
    if norm < 1e-8 * scale_ref || norm == 0.0 {
        return Err(SpectralError::DegenerateEigenfunction { mu });
    }
    let reference = reference_cosine(sigma, n, len);
    let inner = phi.inner(&reference);
    let rot = if inner.norm() > 1e-14 * norm {
        inner.conj() / inner.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    let s = rot / norm;
    phi.scale(s);
    ep = EndpointValues {
        y0: ep.y0 * s,
        dy0: ep.dy0 * s,
        y1: ep.y1 * s,
        dy1: ep.dy1 * s,
    };
    let bc_residual = form.apply(0, &ep).norm() + form.apply(1, &ep).norm();
    Ok(Eigenfunction { phi, bc_residual })
}

/// Coefficient bound used to size the low-index sweep on the negative axis.
pub fn negative_extent(problem: &Problem) -> f64 {
    let bc = &problem.bc;
    let e = bc.eps();
    let lead = match bc.family {
        Family::T1 => bc.p + e,
        Family::T2 => 1.0 + e * bc.p,
    };
    let k = bc.r.norm() / lead.norm().max(1e-12);
    1.0 + problem.q.sup_estimate() + 4.0 * (1.0 + k).powi(2)
}

/// Index of the window nearest to `mu`.
pub fn nearest_index(sigma: Sigma, mu: C64) -> i64 {
    match sigma {
        Sigma::One => (mu.re / (2.0 * PI)).round().max(0.0) as i64,
        Sigma::Zero => ((mu.re / PI - 1.0) / 2.0).round().max(0.0) as i64,
    }
}

/// Eigenvalues below the first window, from a sweep of the lambda plane with
/// the entire determinant built from the cosine and sine solutions.
pub fn solve_low_index(problem: &Problem, opts: &SolverOptions) -> Result<Vec<Eigenpair>> {
    let x = window_center(problem.sigma(), opts.n0) - opts.half_width;
    let neg = negative_extent(problem);
    let im = 2.0 * x * opts.half_width + neg;
    let rect = Rect::new(-neg, x * x, -im, im);
    let form = problem.bc.form();
    let f = |lambda: C64| -> Result<C64> {
        let end = propagate(
            &problem.q,
            lambda.sqrt(),
            InitialData::CosineSine,
            &opts.ode,
        )?;
        let start = PairState {
            y: [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            dy: [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        };
        Ok(bc_determinant(&form, &ends(&start, &end)).ln())
    };
    let copts = ContourOptions {
        near_zero: 1e-12,
        mult_radius: opts.contour.mult_radius * (1.0 + x),
        max_depth: opts.contour.max_depth + 4,
        ..opts.contour
    };
    let (zeros, _) = locate_zeros(&f, rect, &[], &copts)?;
    let adj = problem.adjoint.is_some();
    let mut tagged: Vec<(i64, C64, usize)> = zeros
        .iter()
        .map(|z| {
            let lam = if adj { z.z.conj() } else { z.z };
            let mu = lam.sqrt();
            (nearest_index(problem.sigma(), mu), mu, z.multiplicity)
        })
        .filter(|t| t.0 < opts.n0)
        .collect();
    tagged.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then(a.1.re.partial_cmp(&b.1.re).unwrap())
            .then(a.1.im.partial_cmp(&b.1.im).unwrap())
    });
    let mut out = Vec::with_capacity(tagged.len());
    let mut prev_n = i64::MIN;
    let mut j = 0;
    for (n, mu, m) in tagged {
        if n != prev_n {
            j = 0;
            prev_n = n;
        }
        j += 1;
        let pair = match finish_pair(problem, n, j, mu, m, false, opts) {
            Ok(p) => p,
            Err(SpectralError::DegenerateEigenfunction { .. }) => finish_pair(
                problem,
                n,
                j,
                mu,
                m,
                false,
                &SolverOptions {
                    eigenfunctions: false,
                    ..*opts
                },
            )?,
            Err(e) => return Err(e),
        };
        out.push(pair);
    }
    Ok(out)
}

/// Eigenpairs for indices `n_min..=n_max`: windows for `n >= n0` (in parallel)
/// and the low-index sweep below. `predict(n)` supplies branch predictions.
pub fn solve_range<P>(
    problem: &Problem,
    n_min: i64,
    n_max: i64,
    predict: P,
    opts: &SolverOptions,
) -> Result<Vec<Eigenpair>>
where
    P: Fn(i64) -> Option<[C64; 2]> + Sync,
{
    let first_window = n_min.max(opts.n0);
    let windows: Vec<i64> = (first_window..=n_max).collect();
    let per: Vec<Result<Vec<Eigenpair>>> = windows
        .par_iter()
        .map(|&n| {
            let w = SearchWindow::for_index(problem.sigma(), n, opts.half_width);
            solve_window(problem, &w, predict(n), opts)
        })
        .collect();
    let mut out = Vec::new();
    if n_min < opts.n0 {
        out.extend(
            solve_low_index(problem, opts)?
                .into_iter()
                .filter(|e| e.n >= n_min && e.n <= n_max),
        );
    }
    for r in per {
        out.extend(r?);
    }
    out.sort_by(|a, b| a.n.cmp(&b.n).then(a.j.cmp(&b.j)));
    Ok(out)
}
