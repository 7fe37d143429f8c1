//! Integration of `-y'' + q y = mu^2 y` for two solutions at once, using an
//! adaptive Dormand-Prince 8(5,3) scheme.
//!
//! Above a threshold on `|mu|` the slowly varying amplitudes of
//! `y = a e^{i mu x} + b e^{-i mu x}` are integrated instead of `y`; they are
//! constant for `q = 0` and carry `O(1/mu)` variation otherwise.

use crate::error::{Result, SpectralError};
use crate::potential::Potential;
use crate::C64;

type State = [C64; 4];

const C: [f64; 12] = [
    0.0,
    0.052_600_151_958_767_73,
    0.078_900_227_938_151_6,
    0.118_350_341_907_227_4,
    0.281_649_658_092_772_6,
    0.333_333_333_333_333_3,
    0.25,
    0.307_692_307_692_307_7,
    0.651_282_051_282_051_3,
    0.6,
    0.857_142_857_142_857_1,
    1.0,
];

const A: [[f64; 11]; 12] = [
    [0.0; 11],
    [
        0.052_600_151_958_767_73,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        0.019_725_056_984_537_9,
        0.059_175_170_953_613_7,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        0.029_587_585_476_806_85,
        0.0,
        0.088_762_756_430_420_54,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        0.241_365_134_159_266_7,
        0.0,
        -0.884_549_479_328_286_1,
        0.924_834_003_261_792,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        0.037_037_037_037_037_035,
        0.0,
        0.0,
        0.170_828_608_729_473_86,
        0.125_467_687_566_822_42,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        0.037_109_375,
        0.0,
        0.0,
        0.170_252_211_019_544_05,
        0.060_216_538_980_455_96,
        -0.017_578_125,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        0.037_092_000_118_504_79,
        0.0,
        0.0,
        0.170_383_925_712_239_98,
        0.107_262_030_446_373_28,
        -0.015_319_437_748_624_402,
        0.008_273_789_163_814_023,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        0.624_110_958_716_075_7,
        0.0,
        0.0,
        -3.360_892_629_446_941_4,
        -0.868_219_346_841_726,
        27.592_099_699_446_71,
        20.154_067_550_477_894,
        -43.489_884_181_069_96,
        0.0,
        0.0,
        0.0,
    ],
    [
        0.477_662_536_438_264_34,
        0.0,
        0.0,
        -2.488_114_619_971_667_7,
        -0.590_290_826_836_843,
        21.230_051_448_181_193,
        15.279_233_632_882_423,
        -33.288_210_968_984_86,
        -0.020_331_201_708_508_627,
        0.0,
        0.0,
    ],
    [
        -0.937_142_430_085_987_3,
        0.0,
        0.0,
        5.186_372_428_844_064,
        1.091_437_348_996_729_5,
        -8.149_787_010_746_927,
        -18.520_065_659_996_96,
        22.739_487_099_350_505,
        2.493_605_552_679_652_3,
        -3.046_764_471_898_219_6,
        0.0,
    ],
    [
        2.273_310_147_516_538,
        0.0,
        0.0,
        -10.534_495_466_737_25,
        -2.000_872_058_224_862_5,
        -17.958_931_863_118_8,
        27.948_884_529_419_96,
        -2.858_998_277_135_023_5,
        -8.872_856_933_530_63,
        12.360_567_175_794_303,
        0.643_392_746_015_763_6,
    ],
];

const B: [f64; 12] = [
    0.054_293_734_116_568_765,
    0.0,
    0.0,
    0.0,
    0.0,
    4.450_312_892_752_409,
    1.891_517_899_314_500_3,
    -5.801_203_960_010_585,
    0.311_164_366_957_819_9,
    -0.152_160_949_662_516_1,
    0.201_365_400_804_030_34,
    0.044_710_615_727_772_59,
];

const E3: [f64; 13] = [
    -0.189_800_754_072_407_62,
    0.0,
    0.0,
    0.0,
    0.0,
    4.450_312_892_752_409,
    1.891_517_899_314_500_3,
    -5.801_203_960_010_585,
    -0.422_682_321_323_791_9,
    -0.152_160_949_662_516_1,
    0.201_365_400_804_030_34,
    0.022_651_792_198_360_82,
    0.0,
];

const E5: [f64; 13] = [
    0.013_120_044_994_194_88,
    0.0,
    0.0,
    0.0,
    0.0,
    -1.225_156_446_376_204_4,
    -0.495_758_949_657_250_2,
    1.664_377_182_454_986_4,
    -0.350_328_848_749_973_66,
    0.334_179_118_713_017_5,
    0.081_923_206_485_115_71,
    -0.022_355_307_863_886_294,
    0.0,
];

/// Integrator settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeOptions {
    /// Relative and absolute local error tolerance.
    pub tol: f64,
    pub max_steps: usize,
    /// `|mu|` above which the amplitude formulation is used.
    pub envelope_above: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            max_steps: 2_000_000,
            envelope_above: 10.0,
        }
    }
}

/// Values and derivatives of two solutions at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairState {
    pub y: [C64; 2],
    pub dy: [C64; 2],
}

impl PairState {
    /// `y_1 y_2' - y_1' y_2`.
    pub fn wronskian(&self) -> C64 {
        self.y[0] * self.dy[1] - self.dy[0] * self.y[1]
    }
}

/// Initial data of the solution pair at `x = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitialData {
    /// `y_1 = 1, y_1' = i mu`; `y_2 = 1, y_2' = -i mu`.
    Exponential,
    /// `c = 1, c' = 0`; `s = 0, s' = 1`.
    CosineSine,
}

fn initial_state(mu: C64, init: InitialData) -> PairState {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let imu = C64::new(0.0, 1.0) * mu;
    match init {
        InitialData::Exponential => PairState {
            y: [one, one],
            dy: [imu, -imu],
        },
        InitialData::CosineSine => PairState {
            y: [one, zero],
            dy: [zero, one],
        },
    }
}

/// Integrates the pair and returns its state at `x = 1`.
pub fn propagate(
    q: &Potential,
    mu: C64,
    init: InitialData,
    opts: &OdeOptions,
) -> Result<PairState> {
    Ok(propagate_to(q, mu, init, &[1.0], opts)?[0])
}

/// Integrates the pair and returns its state at each of `nodes`, which must
/// be increasing and lie in `(0, 1]`. A leading `0.0` is allowed.
pub fn propagate_to(
    q: &Potential,
    mu: C64,
    init: InitialData,
    nodes: &[f64],
    opts: &OdeOptions,
) -> Result<Vec<PairState>> {
    let start = initial_state(mu, init);
    let use_envelope = mu.norm() > opts.envelope_above;
    let mut out = Vec::with_capacity(nodes.len());
    if use_envelope {
        let imu = C64::new(0.0, 1.0) * mu;
        let inv = 1.0 / (2.0 * imu);
        // y = a e^{i mu x} + b e^{-i mu x}, y' = i mu (a e - b / e).
        let amp = |y: C64, dy: C64| ((y + dy / imu) * 0.5, (y - dy / imu) * 0.5);
        let (a1, b1) = amp(start.y[0], start.dy[0]);
        let (a2, b2) = amp(start.y[1], start.dy[1]);
        let rhs = |x: f64, z: &State| -> State {
            let e = (imu * x).exp();
            let ei = 1.0 / e;
            let qx = q.eval(x);
            let y1 = z[0] * e + z[1] * ei;
            let y2 = z[2] * e + z[3] * ei;
            let f1 = qx * y1 * inv;
            let f2 = qx * y2 * inv;
            [f1 * ei, -f1 * e, f2 * ei, -f2 * e]
        };
        let h0 = 0.05;
        integrate(rhs, [a1, b1, a2, b2], nodes, h0, opts, mu, |x, z| {
            let e = (imu * x).exp();
            let ei = 1.0 / e;
            out.push(PairState {
                y: [z[0] * e + z[1] * ei, z[2] * e + z[3] * ei],
                dy: [imu * (z[0] * e - z[1] * ei), imu * (z[2] * e - z[3] * ei)],
            });
        })?;
    } else {
        let mu2 = mu * mu;
        let rhs = |x: f64, z: &State| -> State {
            let k = q.eval(x) - mu2;
            [z[1], k * z[0], z[3], k * z[2]]
        };
        let h0 = 0.1 / (1.0 + mu.norm());
        integrate(
            rhs,
            [start.y[0], start.dy[0], start.y[1], start.dy[1]],
            nodes,
            h0,
            opts,
            mu,
            |_, z| {
                out.push(PairState {
                    y: [z[0], z[2]],
                    dy: [z[1], z[3]],
                })
            },
        )?;
    }
    Ok(out)
}

#[inline]
fn axpy(y: &State, h: f64, k: &[State], coef: &[f64]) -> State {
    let mut r = *y;
    for (kj, &cj) in k.iter().zip(coef) {
        if cj != 0.0 {
            let s = h * cj;
            for i in 0..4 {
                r[i] += kj[i] * s;
            }
        }
    }
    r
}

fn integrate<F, G>(
    f: F,
    y0: State,
    nodes: &[f64],
    h0: f64,
    opts: &OdeOptions,
    mu: C64,
    mut emit: G,
) -> Result<()>
where
    F: Fn(f64, &State) -> State,
    G: FnMut(f64, &State),
{
    let tol = opts.tol;
    let mut t = 0.0;
    let mut y = y0;
    let mut h = h0.min(1.0);
    let mut k = [[C64::new(0.0, 0.0); 4]; 13];
    k[0] = f(t, &y);
    let mut steps = 0usize;
    let mut rejected_last = false;
    for &node in nodes {
        if node <= t {
            emit(t, &y);
            continue;
        }
        while t < node {
            if steps >= opts.max_steps {
                return Err(SpectralError::StiffnessFailure { x: t, mu });
            }
            let remaining = node - t;
            let clamped = h >= remaining;
            let h_try = if clamped { remaining } else { h };
            if h_try < 1e-14 * (1.0 + t.abs()) && !clamped {
                return Err(SpectralError::StiffnessFailure { x: t, mu });
            }
            for s in 1..12 {
                let ys = axpy(&y, h_try, &k[..s], &A[s][..s]);
                k[s] = f(t + C[s] * h_try, &ys);
            }
            let y_new = axpy(&y, h_try, &k[..12], &B);
            let t_new = if clamped { node } else { t + h_try };
            k[12] = f(t_new, &y_new);

            let mut e5 = 0.0;
            let mut e3 = 0.0;
            for i in 0..4 {
                let scale = tol + tol * y[i].norm().max(y_new[i].norm());
                let mut s5 = C64::new(0.0, 0.0);
                let mut s3 = C64::new(0.0, 0.0);
                for j in 0..13 {
                    if E5[j] != 0.0 {
                        s5 += k[j][i] * E5[j];
                    }
                    if E3[j] != 0.0 {
                        s3 += k[j][i] * E3[j];
                    }
                }
                e5 += (s5 / scale).norm_sqr();
                e3 += (s3 / scale).norm_sqr();
            }
            let err = if e5 == 0.0 && e3 == 0.0 {
                0.0
            } else {
                h_try * e5 / (e5 + 0.01 * e3).sqrt() / 2.0
            };
            steps += 1;
            if err < 1.0 {
                let factor = if err == 0.0 {
                    10.0
                } else {
                    (0.9 * err.powf(-1.0 / 8.0)).min(10.0)
                };
                let factor = if rejected_last {
                    factor.min(1.0)
                } else {
                    factor
                };
                let proposal = h_try * factor;
                h = if clamped { h.max(proposal) } else { proposal };
                t = t_new;
                y = y_new;
                k[0] = k[12];
                rejected_last = false;
            } else {
                h = h_try * (0.9 * err.powf(-1.0 / 8.0)).max(0.2);
                rejected_last = true;
            }
        }
        emit(t, &y);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn free_exponentials_direct() {
        let opts = OdeOptions {
            envelope_above: f64::INFINITY,
            ..Default::default()
        };
        let mu = C64::new(20.0 * PI, 0.0);
        let nodes: Vec<f64> = (0..=64).map(|k| k as f64 / 64.0).collect();
        let st = propagate_to(
            &Potential::zero(),
            mu,
            InitialData::Exponential,
            &nodes,
            &opts,
        )
        .unwrap();
        let i = C64::new(0.0, 1.0);
        for (x, s) in nodes.iter().zip(&st) {
            assert!(close(s.y[0], (i * mu * *x).exp(), 1e-9), "{x}");
            assert!(close(s.y[1], (-i * mu * *x).exp(), 1e-9));
        }
    }

    #[test]
    fn free_exponentials_envelope() {
        let opts = OdeOptions {
            envelope_above: 0.0,
            ..Default::default()
        };
        let mu = C64::new(37.0, 0.3);
        let s = propagate(&Potential::zero(), mu, InitialData::Exponential, &opts).unwrap();
        let i = C64::new(0.0, 1.0);
        assert!(close(s.y[0], (i * mu).exp(), 1e-13));
        assert!(close(s.dy[1], -i * mu * (-i * mu).exp(), 1e-11));
    }

    #[test]
    fn direct_mode_wronskian() {
        let opts = OdeOptions {
            envelope_above: f64::INFINITY,
            ..Default::default()
        };
        let mu = C64::new(40.0, 0.0);
        let s = propagate(&Potential::cos(1), mu, InitialData::Exponential, &opts).unwrap();
        let w = C64::new(0.0, -80.0);
        assert!((s.wronskian() - w).norm() < 1e-8 * w.norm());
    }

    #[test]
    fn wronskian_of_free_pair() {
        let mu = C64::new(2.0 * PI, 0.0);
        let s = propagate(
            &Potential::zero(),
            mu,
            InitialData::Exponential,
            &OdeOptions::default(),
        )
        .unwrap();
        assert!(close(s.wronskian(), C64::new(0.0, -4.0 * PI), 1e-9));
    }

    #[test]
    fn direct_and_envelope_agree_with_potential() {
        let q = Potential::cos(1);
        let mu = C64::new(25.0, 0.1);
        let d = propagate(
            &q,
            mu,
            InitialData::Exponential,
            &OdeOptions {
                envelope_above: f64::INFINITY,
                ..Default::default()
            },
        )
        .unwrap();
        let e = propagate(
            &q,
            mu,
            InitialData::Exponential,
            &OdeOptions {
                envelope_above: 0.0,
                ..Default::default()
            },
        )
        .unwrap();
        for j in 0..2 {
            assert!(close(d.y[j], e.y[j], 1e-9), "{} {}", d.y[j], e.y[j]);
            assert!(close(d.dy[j], e.dy[j], 1e-7));
        }
    }

    #[test]
    fn cosine_sine_pair_free() {
        let mu = C64::new(3.0, 0.0);
        let s = propagate(
            &Potential::zero(),
            mu,
            InitialData::CosineSine,
            &OdeOptions::default(),
        )
        .unwrap();
        assert!(close(s.y[0], C64::new(3f64.cos(), 0.0), 1e-10));
        assert!(close(s.y[1], C64::new(3f64.sin() / 3.0, 0.0), 1e-10));
    }

    #[test]
    fn cosine_sine_pair_at_zero_mu() {
        // mu = 0, q = 0: c = 1, s = x.
        let s = propagate(
            &Potential::zero(),
            C64::new(0.0, 0.0),
            InitialData::CosineSine,
            &OdeOptions::default(),
        )
        .unwrap();
        assert!(close(s.y[0], C64::new(1.0, 0.0), 1e-12));
        assert!(close(s.y[1], C64::new(1.0, 0.0), 1e-12));
    }
}
