//! The five subcommands. Each turns a validated [`RunConfig`] into
//! [`Artifacts`] without touching the filesystem.

use std::fmt::Write as _;

use rayon::prelude::*;
use slriesz::asymptotics::{
    residual_table, select_regime, simplicity_report, AsymptoticModel, SimplicityVerdict,
};
use slriesz::bc_model::{
    adjoint_of, classify_case, classify_general, compute_theta, is_regular, AlphaForm, BcCase,
    GeneralBc, Reduction, Sigma,
};
use slriesz::eig_solver::{
    negative_extent, solve_range, window_center, Eigenpair, Problem, SolverOptions,
};
use slriesz::oracle::{
    calibrate_error_constant, lambda_window, match_nearest, oracle_eigs, PencilProblem,
    ERROR_SAFETY,
};
use slriesz::potential::{
    decay_frequency, endpoint_combination, sine_coefficient_decay_tol, trig_moments_tol,
    DecayReport, EndpointRule, Potential,
};
use slriesz::riesz_diag::{pair_angles, riesz_verdict};
use slriesz::{Tolerances, C64};

use crate::config::{RegimeChoice, RunConfig};
use crate::error::CliError;
use crate::output::{complex, num, Artifacts, Table};

/// Short human-readable complex number for the report.
fn cx(z: C64) -> String {
    format!("{:.6}{:+.6}i", z.re + 0.0, z.im + 0.0)
}

/// Reduced problem plus the numerical settings of a run.
struct Setup {
    reduction: Reduction,
    problem: Problem,
    opts: SolverOptions,
    quad_tol: f64,
    rule: EndpointRule,
    n_min: i64,
    n_max: i64,
}

impl Setup {
    fn new(cfg: &RunConfig) -> Result<Self, CliError> {
        let general = cfg.general_bc()?;
        let q = cfg.potential()?;
        let reduction = slriesz::bc_model::reduce_to_canonical(&general)?;
        let mut opts = SolverOptions::default();
        if let Some(t) = cfg.tolerances.ode {
            opts.ode.tol = t;
        }
        if let Some(t) = cfg.tolerances.eig {
            opts.eig_tol = t;
        }
        Ok(Self {
            problem: Problem::from_reduction(q, &reduction),
            reduction,
            opts,
            quad_tol: cfg.tolerances.quad.unwrap_or(Tolerances::default().quad),
            rule: cfg.endpoint_rule.into(),
            n_min: cfg.n_range[0],
            n_max: cfg.n_range[1],
        })
    }

    fn q(&self) -> &Potential {
        &self.problem.q
    }

    fn sigma(&self) -> Sigma {
        self.problem.sigma()
    }

    /// Decay test over the run range, extended to at least `n = 40` so the
    /// regime choice does not hinge on a short range.
    fn decay(&self) -> Result<DecayReport, CliError> {
        let lo = self.n_min.max(1);
        let hi = self.n_max.max(40);
        Ok(sine_coefficient_decay_tol(
            self.q(),
            self.sigma(),
            lo..=hi,
            self.quad_tol,
        )?)
    }

    /// Asymptotic model for the configured regime, in user-problem coordinates.
    fn model(
        &self,
        choice: RegimeChoice,
        decay: &DecayReport,
    ) -> Result<(AsymptoticModel, Vec<String>), CliError> {
        let bc = &self.problem.bc;
        let (model, warnings) = match choice {
            RegimeChoice::Auto => select_regime(bc, self.q(), decay, self.rule),
            RegimeChoice::Unperturbed => (AsymptoticModel::unperturbed(bc), Vec::new()),
            RegimeChoice::L1 => (AsymptoticModel::l1(bc, decay)?, Vec::new()),
            RegimeChoice::Ac => (AsymptoticModel::ac(bc, self.q(), self.rule)?, Vec::new()),
        };
        Ok((model.for_problem(&self.problem), warnings))
    }

    fn solve(
        &self,
        model: &AsymptoticModel,
        eigenfunctions: bool,
    ) -> Result<Vec<Eigenpair>, CliError> {
        let opts = SolverOptions {
            eigenfunctions,
            ..self.opts
        };
        let sigma = self.sigma();
        let predict = |n: i64| (n >= 1 || sigma == Sigma::Zero).then(|| model.predict_pair(n));
        Ok(solve_range(
            &self.problem,
            self.n_min,
            self.n_max,
            predict,
            &opts,
        )?)
    }

    fn describe(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "canonical conditions: {}", self.problem.bc);
        if self.reduction.is_adjoint_form() {
            let _ = writeln!(
                s,
                "input is in alpha form; the canonical conditions above are those of its adjoint and eigenvalues are conjugated"
            );
        }
        let _ = writeln!(s, "case: {}", classify_case(&self.problem.bc));
        let _ = writeln!(
            s,
            "potential: {:?} x {}",
            self.q().shape(),
            self.q().amplitude()
        );
        let _ = writeln!(s, "index range: {}..={}", self.n_min, self.n_max);
        s
    }
}

fn describe_alpha(a: &AlphaForm) -> String {
    match a {
        AlphaForm::RightTerm {
            sigma,
            alpha1,
            alpha2,
        } => format!(
            "y'(0) + ({}) y'(1) + ({}) y(1) = 0, y(0) + ({}) y(1) = 0  [sigma={sigma}, alpha1, alpha2]",
            sigma.sign(),
            cx(*alpha1),
            cx(*alpha2)
        ),
        AlphaForm::LeftTerm {
            sigma,
            alpha3,
            alpha4,
        } => format!(
            "y'(0) + ({}) y'(1) + ({}) y(0) = 0, ({}) y(0) + y(1) = 0  [sigma={sigma}, alpha3, alpha4]",
            sigma.sign(),
            cx(*alpha3),
            cx(*alpha4)
        ),
    }
}

/// Theta coefficients, regularity, case tag, canonical and adjoint forms.
pub fn classify(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let bc: GeneralBc = cfg.general_bc()?;
    let mut art = Artifacts::default();
    art.section(
        "input conditions",
        &format!(
            "({}) y'(0) + ({}) y'(1) + ({}) y(0) + ({}) y(1) = 0\n({}) y(0) + ({}) y(1) = 0",
            cx(bc.a1),
            cx(bc.b1),
            cx(bc.a0),
            cx(bc.b0),
            cx(bc.c0),
            cx(bc.d0)
        ),
    );
    let theta = compute_theta(&bc);
    art.section(
        "theta coefficients",
        &format!(
            "theta_-1 = {}\ntheta_0 = {}\ntheta_1 = {}\ntheta_0^2 - 4 theta_1 theta_-1 = {}",
            cx(theta.theta_minus1),
            cx(theta.theta_0),
            cx(theta.theta_1),
            cx(theta.discriminant())
        ),
    );
    let case = classify_general(&bc)?;
    let regular = is_regular(&bc, Tolerances::default().alg);
    art.section(
        "regularity",
        &format!(
            "regular: {}\nstrongly regular: {}\ncase: {case}",
            if regular { "yes" } else { "no" },
            if case == BcCase::StronglyRegular {
                "yes"
            } else {
                "no"
            },
        ),
    );
    if matches!(case, BcCase::NotRegular | BcCase::StronglyRegular) {
        art.section(
            "canonical form",
            "not applicable: only regular but not strongly regular conditions reduce to T1/T2",
        );
        return Ok(art);
    }
    let red = slriesz::bc_model::reduce_to_canonical(&bc)?;
    let mut body = format!("{}\n", red.canonical);
    if let Some(a) = &red.adjoint_form {
        let _ = writeln!(body, "input is in alpha form: {}", describe_alpha(a));
        let _ = writeln!(
            body,
            "the line above gives the canonical conditions of its adjoint; the input spectrum is their conjugate"
        );
    }
    art.section("canonical form", &body);
    let adj = adjoint_of(&red.canonical);
    art.section("adjoint of the canonical problem", &describe_alpha(&adj));
    Ok(art)
}

const EIG_HEADER: &[&str] = &[
    "n",
    "j",
    "re_mu",
    "im_mu",
    "re_lambda",
    "im_lambda",
    "multiplicity",
    "det_residual",
    "bc_residual",
];

/// Eigenvalue table over the index range, plus an optional determinant trace.
pub fn eigs(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let setup = Setup::new(cfg)?;
    let decay = setup.decay()?;
    let (model, warnings) = setup.model(cfg.regime, &decay)?;
    let eigs = setup.solve(&model, cfg.eigs.eigenfunctions)?;

    let mut table = Table::new("eigenvalues.csv", EIG_HEADER);
    for e in &eigs {
        table.push(vec![
            e.n.to_string(),
            e.j.to_string(),
            num(e.mu.re),
            num(e.mu.im),
            num(e.lambda.re),
            num(e.lambda.im),
            e.multiplicity.to_string(),
            num(e.det_residual),
            num(e.bc_residual),
        ]);
    }
    let mut art = Artifacts::default();
    art.section("problem", &setup.describe());

    let mut body = format!(
        "{} eigenvalues (labels from the {} formulas)\n",
        eigs.len(),
        model.regime
    );
    let max_of = |f: fn(&Eigenpair) -> f64| {
        eigs.iter()
            .map(f)
            .filter(|v| v.is_finite())
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
    };
    if let Some(d) = max_of(|e| e.det_residual) {
        let _ = writeln!(body, "max |Delta| at roots: {d:.3e}");
    }
    if let Some(b) = max_of(|e| e.bc_residual) {
        let _ = writeln!(body, "max boundary residual of eigenfunctions: {b:.3e}");
    }
    let multiple: Vec<String> = eigs
        .iter()
        .filter(|e| e.multiplicity > 1)
        .map(|e| format!("n={} mu={} (x{})", e.n, cx(e.mu), e.multiplicity))
        .collect();
    if !multiple.is_empty() {
        let _ = writeln!(body, "multiple roots: {}", multiple.join(", "));
    }
    let ambiguous: Vec<String> = eigs
        .iter()
        .filter(|e| e.ambiguous)
        .map(|e| format!("({}, {})", e.n, e.j))
        .collect();
    if !ambiguous.is_empty() {
        let _ = writeln!(body, "ambiguous branch labels: {}", ambiguous.join(" "));
    }
    for w in &warnings {
        let _ = writeln!(body, "warning: {w}");
    }
    art.section("eigenvalues", &body);
    art.tables.push(table);

    if cfg.eigs.trace_points > 0 {
        art.tables.push(trace(&setup, cfg.eigs.trace_points)?);
        art.section(
            "determinant trace",
            &format!(
                "{} samples of Delta on the real mu axis",
                cfg.eigs.trace_points
            ),
        );
    }
    Ok(art)
}

fn trace(setup: &Setup, points: usize) -> Result<Table, CliError> {
    let hw = setup.opts.half_width;
    let a = (window_center(setup.sigma(), setup.n_min) - hw).max(0.0);
    let b = window_center(setup.sigma(), setup.n_max) + hw;
    let step = if points > 1 {
        (b - a) / (points - 1) as f64
    } else {
        0.0
    };
    let values: Vec<(C64, C64)> = (0..points)
        .into_par_iter()
        .map(|k| {
            let mu = C64::new(a + step * k as f64, 0.0);
            setup.problem.delta(mu, &setup.opts.ode).map(|d| (mu, d))
        })
        .collect::<Result<_, _>>()?;
    let mut t = Table::new(
        "delta_trace.csv",
        &["re_mu", "im_mu", "re_delta", "im_delta"],
    );
    for (mu, d) in values {
        t.push(vec![num(mu.re), num(mu.im), num(d.re), num(d.im)]);
    }
    Ok(t)
}

/// Residuals against the asymptotic formulas, moments and simplicity.
pub fn asym(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let setup = Setup::new(cfg)?;
    let decay = setup.decay()?;
    let (model, warnings) = setup.model(cfg.regime, &decay)?;
    let eigs: Vec<Eigenpair> = setup
        .solve(&model, false)?
        .into_iter()
        .filter(|e| e.n >= 1)
        .collect();
    let table = residual_table(&eigs, &model);
    let windows: Vec<Eigenpair> = eigs
        .iter()
        .filter(|e| e.n >= setup.opts.n0)
        .cloned()
        .collect();
    let simplicity = simplicity_report(&windows, &model, setup.opts.contour.mult_radius);

    let mut res = Table::new(
        "residuals.csv",
        &[
            "n",
            "j",
            "regime",
            "re_mu",
            "re_mu_pred",
            "abs_r",
            "n_abs_r",
            "n2_abs_r",
        ],
    );
    for r in &table.rows {
        res.push(vec![
            r.n.to_string(),
            r.j.to_string(),
            r.regime.to_string(),
            num(r.mu.re),
            num(r.mu_pred.re),
            num(r.r),
            num(r.n_r),
            num(r.n2_r),
        ]);
    }
    let mut mom = Table::new("moments.csv", &["n", "c", "s", "n_s"]);
    for n in setup.n_min..=setup.n_max {
        let mu = C64::new(decay_frequency(setup.sigma(), n), 0.0);
        let m = trig_moments_tol(setup.q(), mu, setup.quad_tol)?;
        mom.push(vec![
            n.to_string(),
            num(m.c_mu.re),
            num(m.s_mu.re),
            num(n as f64 * m.s_mu.norm()),
        ]);
    }

    let mut art = Artifacts::default();
    art.section("problem", &setup.describe());

    let mut body = format!("regime: {}\n", model.regime);
    if let Some(j) = model.jump {
        let _ = writeln!(
            body,
            "endpoint combination ({:?} rule): {j:.6e}",
            setup.rule
        );
    }
    if let Some(d) = model.discriminant {
        let _ = writeln!(
            body,
            "discriminant {} = {}, principal root {}",
            d.name,
            cx(d.value),
            cx(d.sqrt_value)
        );
    }
    let _ = writeln!(
        body,
        "sine-coefficient decay: tail median {:.3e}, verdict {:?}",
        decay.tail_median, decay.verdict
    );
    if model.regime == slriesz::asymptotics::Regime::Ac {
        let (q0, q1) = setup.q().endpoint_values();
        let _ = writeln!(
            body,
            "q(0) = {q0:.6e}, q(1) = {q1:.6e}, other rule gives {:.6e}",
            endpoint_combination(
                setup.q(),
                setup.sigma(),
                match setup.rule {
                    EndpointRule::Jump => EndpointRule::Printed,
                    EndpointRule::Printed => EndpointRule::Jump,
                }
            )
        );
    }
    for w in &warnings {
        let _ = writeln!(body, "warning: {w}");
    }
    art.section("asymptotic regime", &body);

    let mut body = String::new();
    for (k, s) in table.slopes.iter().enumerate() {
        let _ = writeln!(
            body,
            "branch j={}: log-log slope of n|r| = {}",
            k + 1,
            s.map_or("n/a".into(), |s| format!("{s:.3}"))
        );
    }
    for j in [1, 2] {
        let rows: Vec<_> = table.rows.iter().filter(|r| r.j == j).collect();
        if let (Some(f), Some(l)) = (rows.first(), rows.last()) {
            let _ = writeln!(
                body,
                "branch j={j}: n|r| = {:.3e} at n={}, {:.3e} at n={}",
                f.n_r, f.n, l.n_r, l.n
            );
        }
    }
    art.section("residuals", &body);

    let simple = simplicity
        .iter()
        .filter(|r| r.verdict == SimplicityVerdict::Simple)
        .count();
    let mut body = format!(
        "{simple} of {} windows hold two simple roots\n",
        simplicity.len()
    );
    for r in simplicity
        .iter()
        .filter(|r| r.verdict != SimplicityVerdict::Simple)
    {
        let _ = writeln!(
            body,
            "n={}: gap {:.3e} (predicted {:.3e}) not simple",
            r.n, r.gap, r.predicted_gap
        );
    }
    art.section("simplicity", &body);
    art.tables.push(res);
    art.tables.push(mom);
    Ok(art)
}

/// Pair angles and the Riesz-basis verdict.
pub fn riesz(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let setup = Setup::new(cfg)?;
    let decay = setup.decay()?;
    let (model, warnings) = setup.model(cfg.regime, &decay)?;
    let eigs = setup.solve(&model, true)?;
    let (records, skipped) = pair_angles(&eigs)?;
    let report = riesz_verdict(
        &setup.problem.bc,
        setup.q(),
        &records,
        Some(&decay),
        setup.rule,
    );

    let mut t = Table::new("angles.csv", &["n", "angle", "n_angle"]);
    for r in &records {
        t.push(vec![
            r.n.to_string(),
            num(r.angle),
            num(r.n as f64 * r.angle),
        ]);
    }

    let mut art = Artifacts::default();
    art.section("problem", &setup.describe());
    let tr = &report.trend;
    let mut body = format!("{} windows with two simple eigenfunctions\n", records.len());
    if !skipped.is_empty() {
        let list: Vec<String> = skipped.iter().map(|n| n.to_string()).collect();
        let _ = writeln!(body, "skipped windows: {}", list.join(" "));
    }
    let _ = writeln!(
        body,
        "angle {:.3e} at n={} -> {:.3e} at n={}, log-log slope {}",
        tr.angle_first,
        tr.n_first,
        tr.angle_last,
        tr.n_last,
        tr.slope.map_or("n/a".into(), |s| format!("{s:.3}"))
    );
    let _ = writeln!(
        body,
        "angles tend to zero: {}",
        if tr.tends_to_zero { "yes" } else { "no" }
    );
    art.section("pair angles", &body);

    let mut body = format!("verdict: {}\n", report.verdict);
    if report.triggers.is_empty() {
        let _ = writeln!(body, "no potential hypothesis holds");
    }
    for t in &report.triggers {
        let _ = writeln!(body, "established by: {t}");
    }
    for n in &report.notes {
        let _ = writeln!(body, "note: {n}");
    }
    for w in &warnings {
        let _ = writeln!(body, "warning: {w}");
    }
    art.section("Riesz basis", &body);
    art.tables.push(t);
    Ok(art)
}

/// Solver eigenvalues against the finite-difference pencil.
pub fn oracle(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let setup = Setup::new(cfg)?;
    let lo = setup.n_min.max(0);
    let hi = setup.n_max.min(cfg.oracle.n_max);
    if lo > hi {
        return Err(CliError::Config(format!(
            "index range {}..={} has no windows at or below oracle.n_max = {}",
            setup.n_min, setup.n_max, cfg.oracle.n_max
        )));
    }
    let decay = setup.decay()?;
    let (model, _) = setup.model(cfg.regime, &decay)?;
    let opts = SolverOptions {
        eigenfunctions: false,
        ..setup.opts
    };
    let sigma = setup.sigma();
    let predict = |n: i64| (n >= 1 || sigma == Sigma::Zero).then(|| model.predict_pair(n));
    let solved = solve_range(&setup.problem, lo, hi, predict, &opts)?;

    let form = setup.problem.original_form();
    let hw = opts.half_width;
    let neg = negative_extent(&setup.problem);
    let c = calibrate_error_constant(&form, sigma, cfg.oracle.grid, hi, hw, neg)?;
    let pencil =
        PencilProblem::new(setup.q(), form, cfg.oracle.grid)?.with_error_constant(ERROR_SAFETY * c);

    let mut t = Table::new(
        "oracle.csv",
        &[
            "n",
            "j",
            "lambda_solver",
            "lambda_oracle",
            "abs_diff",
            "error_bar",
        ],
    );
    let (mut compared, mut within, mut worst) = (0usize, 0usize, 0.0f64);
    let mut mismatches = Vec::new();
    for n in lo..=hi {
        let oracle: Vec<C64> = oracle_eigs(&pencil, lambda_window(sigma, n, hw, neg), None)?
            .iter()
            .flat_map(|e| std::iter::repeat_n(e.lambda, e.multiplicity))
            .collect();
        let mine: Vec<&Eigenpair> = solved
            .iter()
            .filter(|e| e.n == n)
            .flat_map(|e| std::iter::repeat_n(e, e.multiplicity))
            .collect();
        if mine.len() != oracle.len() {
            mismatches.push(format!(
                "n={n}: solver {} vs oracle {}",
                mine.len(),
                oracle.len()
            ));
        }
        let lambdas: Vec<C64> = mine.iter().map(|e| e.lambda).collect();
        for (e, (x, y)) in mine.iter().zip(match_nearest(&lambdas, &oracle)) {
            let row = match y {
                Some(y) => {
                    let d = (x - y).norm();
                    let bar = pencil.error_bar(y).unwrap_or(f64::NAN);
                    compared += 1;
                    if d <= bar {
                        within += 1;
                    }
                    worst = worst.max(d / bar);
                    vec![complex(y), num(d), num(bar)]
                }
                None => vec![String::new(), num(f64::NAN), num(f64::NAN)],
            };
            let mut full = vec![n.to_string(), e.j.to_string(), complex(x)];
            full.extend(row);
            t.push(full);
        }
    }

    let mut art = Artifacts::default();
    art.section("problem", &setup.describe());
    let mut body = format!(
        "grid {} (h = {:.3e}), windows {lo}..={hi}\n",
        cfg.oracle.grid,
        pencil.step()
    );
    let _ = writeln!(
        body,
        "error constant calibrated on q = 0: {c:.3e} (bar = {ERROR_SAFETY} C h^2 (1 + |lambda|^2))"
    );
    let _ = writeln!(
        body,
        "{within} of {compared} eigenvalues within their error bar; max |diff|/bar = {worst:.3}"
    );
    for m in &mismatches {
        let _ = writeln!(body, "count mismatch: {m}");
    }
    art.section("finite-difference oracle", &body);
    art.tables.push(t);
    Ok(art)
}
