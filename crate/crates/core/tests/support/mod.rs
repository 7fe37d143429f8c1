//! Randomized invariants shared by the property tests and the acceptance run.

use std::f64::consts::PI;

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use slriesz::bc_model::{
    adjoint_of, classify_general, compute_theta, is_regular_not_strongly, reduce_to_canonical,
    AlphaForm, BoundaryForm, CanonicalBc, EndpointValues, Family, GeneralBc, Sigma,
};
use slriesz::determinant::{delta_closed, delta_exact, fundamental_pair, DeterminantKind, KindTag};
use slriesz::ode::OdeOptions;
use slriesz::potential::{trig_moments, Potential, Shape};
use slriesz::C64;

/// Instances per suite.
pub const CASES: u32 = 100;

fn complex(bound: f64) -> impl Strategy<Value = C64> {
    (-bound..bound, -bound..bound).prop_map(|(a, b)| C64::new(a, b))
}

fn nonzero() -> impl Strategy<Value = C64> {
    (0.2f64..5.0, -PI..PI).prop_map(|(m, t)| C64::from_polar(m, t))
}

fn sigma() -> impl Strategy<Value = Sigma> {
    prop_oneof![Just(Sigma::Zero), Just(Sigma::One)]
}

fn family() -> impl Strategy<Value = Family> {
    prop_oneof![Just(Family::T1), Just(Family::T2)]
}

fn canonical() -> impl Strategy<Value = CanonicalBc> {
    (family(), sigma(), complex(3.0), complex(3.0))
        .prop_filter("regularity guard", |(_, s, p, _)| {
            (p + s.sign()).norm() > 0.1
        })
        .prop_map(|(f, s, p, r)| CanonicalBc::new(f, s, p, r).unwrap())
}

fn real_canonical() -> impl Strategy<Value = CanonicalBc> {
    (family(), sigma(), -3.0f64..3.0, -3.0f64..3.0)
        .prop_filter("regularity guard", |(_, s, p, _)| {
            (p + s.sign()).abs() > 0.1
        })
        .prop_map(|(f, s, p, r)| CanonicalBc::real(f, s, p, r).unwrap())
}

/// Canonical conditions disguised by an invertible row mixing that keeps the
/// second row free of derivatives.
fn disguise(cbc: &CanonicalBc, s: C64, t: C64, m: C64) -> GeneralBc {
    let g = cbc.to_general();
    GeneralBc::new(
        s * g.a1,
        s * g.b1,
        s * g.a0 + m * g.c0,
        s * g.b0 + m * g.d0,
        t * g.c0,
        t * g.d0,
    )
}

fn alpha_general(a: &AlphaForm) -> GeneralBc {
    let [r0, r1] = a.form().rows;
    GeneralBc::new(r0[1], r0[3], r0[0], r0[2], r1[0], r1[2])
}

fn regular_not_strongly() -> impl Strategy<Value = GeneralBc> {
    prop_oneof![
        (canonical(), nonzero(), nonzero(), complex(2.0))
            .prop_map(|(c, s, t, m)| disguise(&c, s, t, m)),
        (canonical(), nonzero(), nonzero())
            .prop_map(|(c, s, t)| alpha_general(&adjoint_of(&c)).scaled(s, t)),
    ]
}

fn arbitrary_general() -> impl Strategy<Value = GeneralBc> {
    (
        complex(2.0),
        complex(2.0),
        complex(2.0),
        complex(2.0),
        complex(2.0),
        complex(2.0),
    )
        .prop_map(|(a1, b1, a0, b0, c0, d0)| GeneralBc::new(a1, b1, a0, b0, c0, d0))
}

/// Endpoint values of the test functions `1, x, e^{ix}, e^{-ix}`.
fn test_functions() -> [EndpointValues; 4] {
    let i = C64::new(0.0, 1.0);
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let e = i.exp();
    [
        EndpointValues {
            y0: one,
            dy0: zero,
            y1: one,
            dy1: zero,
        },
        EndpointValues {
            y0: zero,
            dy0: one,
            y1: one,
            dy1: one,
        },
        EndpointValues {
            y0: one,
            dy0: i,
            y1: e,
            dy1: i * e,
        },
        EndpointValues {
            y0: one,
            dy0: -i,
            y1: 1.0 / e,
            dy1: -i / e,
        },
    ]
}

/// Whether `a = K b` on the test functions for some invertible 2x2 `K`.
fn row_equivalent(a: &BoundaryForm, b: &BoundaryForm) -> bool {
    let tf = test_functions();
    let ma: Vec<[C64; 2]> = tf.iter().map(|v| [a.apply(0, v), a.apply(1, v)]).collect();
    let mb: Vec<[C64; 2]> = tf.iter().map(|v| [b.apply(0, v), b.apply(1, v)]).collect();
    // Pick the best-conditioned pair of columns of `b` to solve for K.
    let mut best = (0, 1, C64::new(0.0, 0.0));
    for j in 0..4 {
        for k in j + 1..4 {
            let d = mb[j][0] * mb[k][1] - mb[k][0] * mb[j][1];
            if d.norm() > best.2.norm() {
                best = (j, k, d);
            }
        }
    }
    let (j, k, d) = best;
    if d.norm() < 1e-12 {
        return false;
    }
    // K rows: a_row = K_row . [b0, b1] on columns j, k.
    let mut kmat = [[C64::new(0.0, 0.0); 2]; 2];
    for row in 0..2 {
        kmat[row][0] = (ma[j][row] * mb[k][1] - ma[k][row] * mb[j][1]) / d;
        kmat[row][1] = (mb[j][0] * ma[k][row] - mb[k][0] * ma[j][row]) / d;
    }
    let kdet = kmat[0][0] * kmat[1][1] - kmat[0][1] * kmat[1][0];
    let scale = ma
        .iter()
        .flat_map(|c| c.iter())
        .map(|v| v.norm())
        .fold(1.0, f64::max);
    if kdet.norm() < 1e-10 * scale * scale {
        return false;
    }
    (0..4).all(|c| {
        (0..2).all(|row| {
            let pred = kmat[row][0] * mb[c][0] + kmat[row][1] * mb[c][1];
            (pred - ma[c][row]).norm() <= 1e-9 * scale
        })
    })
}

/// Null space of a boundary form in `(y0, y0', y1, y1')`, two vectors.
fn null_space(form: &BoundaryForm) -> Vec<[C64; 4]> {
    let [r0, r1] = form.rows;
    let mut best = (0, 1, C64::new(0.0, 0.0));
    for j in 0..4 {
        for k in j + 1..4 {
            let d = r0[j] * r1[k] - r0[k] * r1[j];
            if d.norm() > best.2.norm() {
                best = (j, k, d);
            }
        }
    }
    let (j, k, d) = best;
    (0..4)
        .filter(|&f| f != j && f != k)
        .map(|f| {
            let mut v = [C64::new(0.0, 0.0); 4];
            v[f] = C64::new(1.0, 0.0);
            // Solve r0[j] vj + r0[k] vk = -r0[f], same for r1.
            v[j] = (-r0[f] * r1[k] + r1[f] * r0[k]) / d;
            v[k] = (-r0[j] * r1[f] + r1[j] * r0[f]) / d;
            v
        })
        .collect()
}

fn catalog_potential() -> impl Strategy<Value = Potential> {
    prop_oneof![
        (1u32..4, -3.0f64..3.0).prop_map(|(k, a)| Potential::new(Shape::Cos { k }, a)),
        (1u32..4, -3.0f64..3.0).prop_map(|(k, a)| Potential::new(Shape::Sin { k }, a)),
        (-3.0f64..3.0).prop_map(|a| Potential::new(Shape::Sawtooth, a)),
        prop::collection::vec(-2.0f64..2.0, 1..5)
            .prop_map(|c| Potential::new(Shape::Polynomial { coeffs: c }, 1.0)),
    ]
}

fn window_mu(sigma: Sigma, max_n: i64) -> impl Strategy<Value = C64> {
    (1..=max_n, -PI / 2.0..PI / 2.0, -1.5f64..1.5).prop_map(move |(n, d, im)| {
        let c = match sigma {
            Sigma::One => 2.0 * PI * n as f64,
            Sigma::Zero => (2 * n + 1) as f64 * PI,
        };
        C64::new(c + d, im)
    })
}

fn cbc_and_mu() -> impl Strategy<Value = (CanonicalBc, C64)> {
    canonical().prop_flat_map(|c| (Just(c), window_mu(c.sigma, 40)))
}

fn theta_discriminant_vanishes(runner: &mut TestRunner) -> Result<(), String> {
    runner
        .run(&regular_not_strongly(), |bc| {
            prop_assert!(is_regular_not_strongly(&bc).unwrap());
            let th = compute_theta(&bc);
            let disc = th.theta_0 * th.theta_0 - 4.0 * th.theta_1 * th.theta_minus1;
            prop_assert!(disc.norm() <= 1e-10 * th.theta_0.norm_sqr().max(1.0));
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn reduction_is_row_equivalent(runner: &mut TestRunner) -> Result<(), String> {
    runner
        .run(&regular_not_strongly(), |bc| {
            let red = reduce_to_canonical(&bc).unwrap();
            prop_assert!(row_equivalent(&bc.form(), &red.original_form()));
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn classification_ignores_row_scaling(runner: &mut TestRunner) -> Result<(), String> {
    runner
        .run(
            &(
                prop_oneof![regular_not_strongly(), arbitrary_general()],
                nonzero(),
                nonzero(),
            ),
            |(bc, s, t)| {
                let a = classify_general(&bc);
                let b = classify_general(&bc.scaled(s, t));
                match (a, b) {
                    (Ok(x), Ok(y)) => prop_assert_eq!(x, y),
                    (Err(_), Err(_)) => {}
                    (x, y) => prop_assert!(false, "{:?} vs {:?}", x, y),
                }
                Ok(())
            },
        )
        .map_err(|e| e.to_string())
}

fn adjoint_is_an_involution(runner: &mut TestRunner) -> Result<(), String> {
    runner
        .run(&canonical(), |cbc| {
            let back = adjoint_of(&cbc).adjoint_canonical().unwrap();
            prop_assert_eq!(back.family, cbc.family);
            prop_assert_eq!(back.sigma, cbc.sigma);
            prop_assert!((back.p - cbc.p).norm() < 1e-14);
            prop_assert!((back.r - cbc.r).norm() < 1e-14);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn adjoint_satisfies_green_identity(runner: &mut TestRunner) -> Result<(), String> {
    runner
        .run(&canonical(), |cbc| {
            // [y, z] = (y' conj z - y conj z')|_0^1 vanishes for y in the domain, z in the adjoint domain.
            let ys = null_space(&cbc.form());
            let zs = null_space(&adjoint_of(&cbc).form());
            for y in &ys {
                for z in &zs {
                    let at1 = y[3] * z[2].conj() - y[2] * z[3].conj();
                    let at0 = y[1] * z[0].conj() - y[0] * z[1].conj();
                    let scale = y
                        .iter()
                        .chain(z.iter())
                        .map(|v| v.norm())
                        .fold(1.0, f64::max);
                    prop_assert!((at1 - at0).norm() < 1e-12 * scale * scale);
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn wronskian_is_constant(runner: &mut TestRunner) -> Result<(), String> {
    runner
        .run(
            &(catalog_potential(), window_mu(Sigma::One, 40)),
            |(q, mu)| {
                let pair = fundamental_pair(&q, mu, &OdeOptions::default()).unwrap();
                prop_assert!(
                    pair.wronskian_drift() < 1e-8,
                    "drift {}",
                    pair.wronskian_drift()
                );
                Ok(())
            },
        )
        .map_err(|e| e.to_string())
}

fn free_determinant_matches_closed_form(runner: &mut TestRunner) -> Result<(), String> {
    runner
        .run(&cbc_and_mu(), |(cbc, mu)| {
            let exact = delta_exact(&Potential::zero(), &cbc, mu, &OdeOptions::default()).unwrap();
            let kind = DeterminantKind::new(KindTag::Unperturbed, &cbc);
            let closed = delta_closed(kind, &cbc, mu, None).unwrap();
            let scale = closed.norm().max(exact.norm()).max(1e-300);
            prop_assert!(
                (exact - closed).norm() <= 1e-8 * scale,
                "{} vs {}",
                exact,
                closed
            );
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn determinant_is_analytic(runner: &mut TestRunner) -> Result<(), String> {
    runner
        .run(
            &(
                catalog_potential(),
                real_canonical(),
                (1i64..=30, -1.5f64..1.5, -1.0f64..1.0),
            ),
            |(q, cbc, (n, d, im))| {
                let c = match cbc.sigma {
                    Sigma::One => 2.0 * PI * n as f64,
                    Sigma::Zero => (2 * n + 1) as f64 * PI,
                };
                let mu = C64::new(c + d, im);
                let opts = OdeOptions::default();
                let f = |z: C64| delta_exact(&q, &cbc, z, &opts).unwrap();
                let h = 1e-4;
                let dx = (f(mu + h) - f(mu - h)) / (2.0 * h);
                let dy =
                    (f(mu + C64::new(0.0, h)) - f(mu - C64::new(0.0, h))) / C64::new(0.0, 2.0 * h);
                let scale = dx.norm().max(f(mu).norm());
                prop_assert!(
                    (dx - dy).norm() <= 1e-6 * scale,
                    "mismatch {} scale {}",
                    (dx - dy).norm(),
                    scale
                );
                Ok(())
            },
        )
        .map_err(|e| e.to_string())
}

fn moments_are_linear(runner: &mut TestRunner) -> Result<(), String> {
    runner
        .run(
            &(
                prop::collection::vec(-2.0f64..2.0, 33),
                prop::collection::vec(-2.0f64..2.0, 33),
                -3.0f64..3.0,
                (0.5f64..200.0, -3.0f64..3.0).prop_map(|(a, b)| C64::new(a, b)),
            ),
            |(v1, v2, alpha, mu)| {
                let sum: Vec<f64> = v1.iter().zip(&v2).map(|(a, b)| alpha * a + b).collect();
                let q1 = Potential::new(Shape::Samples { values: v1 }, alpha);
                let q2 = Potential::new(Shape::Samples { values: v2 }, 1.0);
                let q = Potential::new(Shape::Samples { values: sum }, 1.0);
                let (m1, m2, m) = (
                    trig_moments(&q1, mu).unwrap(),
                    trig_moments(&q2, mu).unwrap(),
                    trig_moments(&q, mu).unwrap(),
                );
                let tol = 1e-12 * 10.0 * (2.0 * mu.im.abs()).exp();
                prop_assert!((m.c_mu - m1.c_mu - m2.c_mu).norm() <= tol);
                prop_assert!((m.s_mu - m1.s_mu - m2.s_mu).norm() <= tol);
                Ok(())
            },
        )
        .map_err(|e| e.to_string())
}

fn sine_moments_approach_endpoint_jump(runner: &mut TestRunner) -> Result<(), String> {
    runner
        .run(&prop::collection::vec(-2.0f64..2.0, 1..5), |coeffs| {
            let q = Potential::new(
                Shape::Polynomial {
                    coeffs: coeffs.clone(),
                },
                1.0,
            );
            let (q0, q1) = q.endpoint_values();
            let bound = 10.0 * (1.0 + coeffs.iter().map(|c| c.abs()).sum::<f64>());
            let mut errs = Vec::new();
            for n in [10i64, 40, 100] {
                let mu = 2.0 * PI * n as f64;
                let m = trig_moments(&q, C64::new(mu, 0.0)).unwrap();
                let es = (2.0 * mu * m.s_mu - (q0 - q1)).norm();
                let ec = (2.0 * mu * m.c_mu).norm();
                prop_assert!(
                    es <= bound / mu && ec <= bound / mu,
                    "n={} es={} ec={}",
                    n,
                    es,
                    ec
                );
                errs.push(es + ec);
            }
            prop_assert!(errs[2] <= errs[0] + 1e-9);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

pub type Suite = fn(&mut TestRunner) -> Result<(), String>;

/// Property suites by name.
pub const SUITES: &[(&str, Suite)] = &[
    ("theta_discriminant_vanishes", theta_discriminant_vanishes),
    ("reduction_is_row_equivalent", reduction_is_row_equivalent),
    (
        "classification_ignores_row_scaling",
        classification_ignores_row_scaling,
    ),
    ("adjoint_is_an_involution", adjoint_is_an_involution),
    (
        "adjoint_satisfies_green_identity",
        adjoint_satisfies_green_identity,
    ),
    ("wronskian_is_constant", wronskian_is_constant),
    (
        "free_determinant_matches_closed_form",
        free_determinant_matches_closed_form,
    ),
    ("determinant_is_analytic", determinant_is_analytic),
    ("moments_are_linear", moments_are_linear),
    (
        "sine_moments_approach_endpoint_jump",
        sine_moments_approach_endpoint_jump,
    ),
];

/// Runs one suite on `cases` instances; a fixed seed makes the run repeatable.
pub fn run_suite(name: &str, cases: u32, fixed_seed: bool) -> Result<(), String> {
    let (_, suite) = SUITES
        .iter()
        .find(|(n, _)| *n == name)
        .unwrap_or_else(|| panic!("unknown suite {name}"));
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner = if fixed_seed {
        TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
    } else {
        TestRunner::new(config)
    };
    suite(&mut runner)
}
