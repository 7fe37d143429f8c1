//! Argument-principle zero counting and Newton refinement for analytic
//! functions given through their logarithm.
//!
//! Functions are supplied as `z -> ln f(z)` so that determinants with huge or
//! tiny moduli (banded LU products, for instance) can be handled uniformly.

use rayon::prelude::*;

use crate::error::{Result, SpectralError};
use crate::C64;

/// Axis-aligned rectangle in the complex plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rect {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Self {
        assert!(re_min < re_max && im_min < im_max, "empty rectangle");
        Self {
            re_min,
            re_max,
            im_min,
            im_max,
        }
    }

    /// Square `center +/- half` in both directions.
    pub fn centered(center: C64, half: f64) -> Self {
        Self::new(
            center.re - half,
            center.re + half,
            center.im - half,
            center.im + half,
        )
    }

    pub fn center(&self) -> C64 {
        C64::new(
            0.5 * (self.re_min + self.re_max),
            0.5 * (self.im_min + self.im_max),
        )
    }

    pub fn width(&self) -> f64 {
        self.re_max - self.re_min
    }

    pub fn height(&self) -> f64 {
        self.im_max - self.im_min
    }

    pub fn contains(&self, z: C64) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }

    /// Grows both half-widths by `factor` about the center.
    pub fn inflate(&self, factor: f64) -> Self {
        let c = self.center();
        let hw = 0.5 * self.width() * factor;
        let hh = 0.5 * self.height() * factor;
        Self::new(c.re - hw, c.re + hw, c.im - hh, c.im + hh)
    }

    /// Splits at the fractional position `(fx, fy)` into four parts.
    pub fn split(&self, fx: f64, fy: f64) -> [Rect; 4] {
        let xm = self.re_min + fx * self.width();
        let ym = self.im_min + fy * self.height();
        [
            Rect::new(self.re_min, xm, self.im_min, ym),
            Rect::new(xm, self.re_max, self.im_min, ym),
            Rect::new(self.re_min, xm, ym, self.im_max),
            Rect::new(xm, self.re_max, ym, self.im_max),
        ]
    }

    /// Counter-clockwise boundary points (closed: the first point is not repeated).
    fn boundary(&self, samples: usize) -> Vec<C64> {
        let per = self.width() + self.height();
        let nx = ((samples as f64 * 0.5 * self.width() / per).ceil() as usize).max(8);
        let ny = ((samples as f64 * 0.5 * self.height() / per).ceil() as usize).max(8);
        let mut pts = Vec::with_capacity(2 * (nx + ny));
        for k in 0..nx {
            pts.push(C64::new(
                self.re_min + self.width() * k as f64 / nx as f64,
                self.im_min,
            ));
        }
        for k in 0..ny {
            pts.push(C64::new(
                self.re_max,
                self.im_min + self.height() * k as f64 / ny as f64,
            ));
        }
        for k in 0..nx {
            pts.push(C64::new(
                self.re_max - self.width() * k as f64 / nx as f64,
                self.im_max,
            ));
        }
        for k in 0..ny {
            pts.push(C64::new(
                self.re_min,
                self.im_max - self.height() * k as f64 / ny as f64,
            ));
        }
        pts
    }
}

/// Settings for counting and locating zeros.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContourOptions {
    /// Initial number of boundary samples.
    pub boundary_samples: usize,
    /// Maximum bisection depth of a boundary segment.
    pub max_refine_depth: usize,
    /// A boundary value with `|f| < near_zero * max |f|` counts as a zero hit.
    pub near_zero: f64,
    pub max_inflations: usize,
    pub inflate_factor: f64,
    /// Maximum quadrant subdivision depth.
    pub max_depth: usize,
    /// Radius for multiplicity detection and root merging.
    pub mult_radius: f64,
    pub newton: NewtonOptions,
}

impl Default for ContourOptions {
    fn default() -> Self {
        Self {
            boundary_samples: 512,
            max_refine_depth: 20,
            near_zero: 1e-6,
            max_inflations: 5,
            inflate_factor: 1.03,
            max_depth: 8,
            mult_radius: 1e-4,
            newton: NewtonOptions::default(),
        }
    }
}

/// Newton iteration settings (central-difference derivative).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonOptions {
    pub max_iter: usize,
    /// Difference step relative to `1 + |z|`.
    pub rel_step: f64,
    /// Stop when the update is below `tol * (1 + |z|)`.
    pub tol: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            max_iter: 60,
            rel_step: 1e-6,
            tol: 1e-13,
        }
    }
}

/// Outcome of a log-evaluation: a value, or an exact zero hit.
enum Sample {
    Value(C64),
    Zero,
}

fn sample<F>(f: &F, z: C64) -> Result<Sample>
where
    F: Fn(C64) -> Result<C64> + Sync,
{
    match f(z) {
        Ok(v) if v.re.is_finite() && v.im.is_finite() => Ok(Sample::Value(v)),
        Ok(v) if v.re == f64::NEG_INFINITY => Ok(Sample::Zero),
        Ok(v) => Err(SpectralError::NonConvergence(format!(
            "non-finite value {v} at {z}"
        ))),
        Err(SpectralError::SingularFactorization { .. }) => Ok(Sample::Zero),
        Err(e) => Err(e),
    }
}

fn wrap(d: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    d - tau * ((d + std::f64::consts::PI) / tau).floor()
}

/// Why a contour could not be evaluated cleanly.
enum Trouble {
    NearZero,
}

/// Total phase change along a closed polyline, or `Trouble` when a zero of `f`
/// is too close to it.
fn phase_change<F>(
    f: &F,
    pts: &[C64],
    opts: &ContourOptions,
) -> Result<std::result::Result<f64, Trouble>>
where
    F: Fn(C64) -> Result<C64> + Sync,
{
    let vals: Vec<Result<Sample>> = pts.par_iter().map(|&z| sample(f, z)).collect();
    let mut logs = Vec::with_capacity(vals.len());
    for v in vals {
        match v? {
            Sample::Value(l) => logs.push(l),
            Sample::Zero => return Ok(Err(Trouble::NearZero)),
        }
    }
    let max_re = logs.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    let floor = max_re + opts.near_zero.ln();
    if logs.iter().any(|l| l.re < floor) {
        return Ok(Err(Trouble::NearZero));
    }
    let n = pts.len();
    let mut total = 0.0;
    for k in 0..n {
        let (za, zb) = (pts[k], pts[(k + 1) % n]);
        let (la, lb) = (logs[k], logs[(k + 1) % n]);
        match segment(f, za, zb, la, lb, 0, floor, opts)? {
            Ok(d) => total += d,
            Err(t) => return Ok(Err(t)),
        }
    }
    Ok(Ok(total))
}

#[allow(clippy::too_many_arguments)]
fn segment<F>(
    f: &F,
    za: C64,
    zb: C64,
    la: C64,
    lb: C64,
    depth: usize,
    floor: f64,
    opts: &ContourOptions,
) -> Result<std::result::Result<f64, Trouble>>
where
    F: Fn(C64) -> Result<C64> + Sync,
{
    let d = wrap(lb.im - la.im);
    if d.abs() < std::f64::consts::FRAC_PI_2 {
        return Ok(Ok(d));
    }
    if depth >= opts.max_refine_depth {
        return Ok(Err(Trouble::NearZero));
    }
    let zm = 0.5 * (za + zb);
    let lm = match sample(f, zm)? {
        Sample::Value(v) if v.re >= floor => v,
        _ => return Ok(Err(Trouble::NearZero)),
    };
    let left = match segment(f, za, zm, la, lm, depth + 1, floor, opts)? {
        Ok(v) => v,
        Err(t) => return Ok(Err(t)),
    };
    let right = match segment(f, zm, zb, lm, lb, depth + 1, floor, opts)? {
        Ok(v) => v,
        Err(t) => return Ok(Err(t)),
    };
    Ok(Ok(left + right))
}

fn rounded_winding(total: f64) -> Option<i64> {
    let w = total / std::f64::consts::TAU;
    let r = w.round();
    if (w - r).abs() < 0.1 {
        Some(r as i64)
    } else {
        None
    }
}

/// Number of zeros inside `rect`, inflating the rectangle when a zero sits on
/// or near its boundary. Returns the count and the rectangle actually used.
pub fn winding_number<F>(f: &F, rect: Rect, opts: &ContourOptions) -> Result<(usize, Rect)>
where
    F: Fn(C64) -> Result<C64> + Sync,
{
    let mut r = rect;
    for _ in 0..=opts.max_inflations {
        if let Some(count) = try_winding(f, &r, opts)? {
            return Ok((count, r));
        }
        r = r.inflate(opts.inflate_factor);
    }
    Err(SpectralError::BoundaryZero {
        attempts: opts.max_inflations,
    })
}

/// Winding count over `rect` without inflation; `None` if the boundary is
/// too close to a zero.
pub fn try_winding<F>(f: &F, rect: &Rect, opts: &ContourOptions) -> Result<Option<usize>>
where
    F: Fn(C64) -> Result<C64> + Sync,
{
    let pts = rect.boundary(opts.boundary_samples);
    match phase_change(f, &pts, opts)? {
        Ok(total) => Ok(rounded_winding(total).map(|w| w.max(0) as usize)),
        Err(Trouble::NearZero) => Ok(None),
    }
}

/// Winding count on a circle; `None` if a zero lies too close to it.
pub fn winding_on_circle<F>(
    f: &F,
    center: C64,
    radius: f64,
    opts: &ContourOptions,
) -> Result<Option<usize>>
where
    F: Fn(C64) -> Result<C64> + Sync,
{
    let m = 64;
    let pts: Vec<C64> = (0..m)
        .map(|k| center + C64::from_polar(radius, std::f64::consts::TAU * k as f64 / m as f64))
        .collect();
    // Near a zero |f| scales with the radius, so the relative floor is loose here.
    let local = ContourOptions {
        near_zero: 1e-3,
        ..*opts
    };
    match phase_change(f, &pts, &local)? {
        Ok(total) => Ok(rounded_winding(total).map(|w| w.max(0) as usize)),
        Err(_) => Ok(None),
    }
}

/// Multiplicity of the zero at `z`, trying shrinking radii if needed.
pub fn multiplicity<F>(f: &F, z: C64, opts: &ContourOptions) -> Result<usize>
where
    F: Fn(C64) -> Result<C64> + Sync,
{
    let mut radius = opts.mult_radius;
    for _ in 0..6 {
        if let Some(m) = winding_on_circle(f, z, radius, opts)? {
            return Ok(m);
        }
        radius *= 0.7;
    }
    Err(SpectralError::NonConvergence(format!(
        "multiplicity circle around {z} keeps touching zeros"
    )))
}

/// Newton iteration on `exp(L(z))` with a central-difference derivative.
/// Returns `None` if the iteration does not settle.
pub fn newton<F>(f: &F, z0: C64, opts: &NewtonOptions) -> Result<Option<C64>>
where
    F: Fn(C64) -> Result<C64> + Sync,
{
    let mut z = z0;
    for _ in 0..opts.max_iter {
        let l0 = match sample(f, z)? {
            Sample::Value(v) => v,
            Sample::Zero => return Ok(Some(z)),
        };
        let h = opts.rel_step * (1.0 + z.norm());
        let lp = sample(f, z + h)?;
        let lm = sample(f, z - h)?;
        let (lp, lm) = match (lp, lm) {
            (Sample::Value(a), Sample::Value(b)) => (a, b),
            _ => return Ok(Some(z)),
        };
        // f'(z)/f(z) from ratios, which never overflow.
        let ratio = ((lp - l0).exp() - (lm - l0).exp()) / (2.0 * h);
        if !ratio.re.is_finite() || !ratio.im.is_finite() || ratio.norm() == 0.0 {
            return Ok(None);
        }
        let step = -1.0 / ratio;
        // Damp huge steps: Newton far from a root can fly off.
        let step = if step.norm() > 1.0 + 0.1 * z.norm() {
            step * ((1.0 + 0.1 * z.norm()) / step.norm())
        } else {
            step
        };
        z += step;
        if !z.re.is_finite() || !z.im.is_finite() {
            return Ok(None);
        }
        if step.norm() <= opts.tol * (1.0 + z.norm()) {
            return Ok(Some(z));
        }
    }
    Ok(None)
}

/// A located zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Zero {
    pub z: C64,
    pub multiplicity: usize,
}

/// Finds all zeros in `rect` (as many as its winding number) using Newton from
/// `seeds` and the rectangle center, subdividing into quadrants as needed.
/// The returned zeros are sorted by real then imaginary part.
pub fn locate_zeros<F>(
    f: &F,
    rect: Rect,
    seeds: &[C64],
    opts: &ContourOptions,
) -> Result<(Vec<Zero>, Rect)>
where
    F: Fn(C64) -> Result<C64> + Sync,
{
    let (count, used) = winding_number(f, rect, opts)?;
    let mut found = Vec::new();
    locate_in(f, used, count, seeds, 0, opts, &mut found)?;
    found.sort_by(|a, b| {
        a.z.re
            .partial_cmp(&b.z.re)
            .unwrap()
            .then(a.z.im.partial_cmp(&b.z.im).unwrap())
    });
    Ok((found, used))
}

fn merge_push(list: &mut Vec<Zero>, z: Zero, radius: f64) -> bool {
    if list.iter().any(|w| (w.z - z.z).norm() < radius) {
        false
    } else {
        list.push(z);
        true
    }
}

fn locate_in<F>(
    f: &F,
    rect: Rect,
    count: usize,
    seeds: &[C64],
    depth: usize,
    opts: &ContourOptions,
    found: &mut Vec<Zero>,
) -> Result<()>
where
    F: Fn(C64) -> Result<C64> + Sync,
{
    if count == 0 {
        return Ok(());
    }
    let mut starts: Vec<C64> = seeds
        .iter()
        .copied()
        .filter(|s| rect.contains(*s))
        .collect();
    starts.push(rect.center());
    let mut local: Vec<Zero> = Vec::new();
    for s in starts {
        if local.iter().map(|z| z.multiplicity).sum::<usize>() >= count {
            break;
        }
        if let Some(z) = newton(f, s, &opts.newton)? {
            if rect.contains(z) && !local.iter().any(|w| (w.z - z).norm() < opts.mult_radius) {
                let m = multiplicity(f, z, opts)?;
                if m > 0 {
                    local.push(Zero { z, multiplicity: m });
                }
            }
        }
    }
    // Deflation: divide out the zeros already found and restart Newton near them.
    let mut tries = 0;
    while !local.is_empty()
        && local.iter().map(|z| z.multiplicity).sum::<usize>() < count
        && tries < 4
    {
        tries += 1;
        let known = local.clone();
        let g = |z: C64| -> Result<C64> {
            let mut v = f(z)?;
            for k in &known {
                v -= k.multiplicity as f64 * (z - k.z).ln();
            }
            Ok(v)
        };
        let scale = 0.05 * rect.width().min(rect.height());
        let mut starts: Vec<C64> = seeds
            .iter()
            .copied()
            .filter(|s| rect.contains(*s))
            .collect();
        starts.push(rect.center());
        for k in &known {
            for d in [
                C64::new(scale, 0.0),
                C64::new(-scale, 0.0),
                C64::new(0.0, scale),
                C64::new(0.0, -scale),
            ] {
                starts.push(k.z + d);
            }
        }
        let mut progress = false;
        for s in starts {
            // A deflated iterate landing on a known zero is just a failed start.
            let Ok(Some(zd)) = newton(&g, s, &opts.newton) else {
                continue;
            };
            let Some(z) = newton(f, zd, &opts.newton)? else {
                continue;
            };
            if rect.contains(z) && !local.iter().any(|w| (w.z - z).norm() < opts.mult_radius) {
                let m = multiplicity(f, z, opts)?;
                if m > 0 {
                    local.push(Zero { z, multiplicity: m });
                    progress = true;
                    break;
                }
            }
        }
        if !progress {
            break;
        }
    }
    if local.iter().map(|z| z.multiplicity).sum::<usize>() == count {
        for z in local {
            merge_push(found, z, opts.mult_radius);
        }
        return Ok(());
    }
    if depth >= opts.max_depth {
        return Err(SpectralError::NonConvergence(format!(
            "found {} of {} zeros after {} subdivisions",
            local.iter().map(|z| z.multiplicity).sum::<usize>(),
            count,
            depth
        )));
    }
    let mut next_seeds: Vec<C64> = seeds.to_vec();
    next_seeds.extend(local.iter().map(|z| z.z));
    for (fx, fy) in [
        (0.5, 0.5),
        (0.53, 0.47),
        (0.46, 0.55),
        (0.58, 0.41),
        (0.39, 0.6),
    ] {
        let parts = rect.split(fx, fy);
        let mut counts = Vec::with_capacity(4);
        for p in &parts {
            match try_winding(f, p, opts)? {
                Some(c) => counts.push(c),
                None => break,
            }
        }
        if counts.len() < 4 {
            continue;
        }
        if counts.iter().sum::<usize>() != count {
            continue;
        }
        for (p, c) in parts.iter().zip(counts) {
            locate_in(f, *p, c, &next_seeds, depth + 1, opts, found)?;
        }
        return Ok(());
    }
    Err(SpectralError::NonConvergence(format!(
        "could not split {rect:?} away from its zeros"
    )))
}
