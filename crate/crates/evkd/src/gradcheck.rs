//! Numerical gradient verification.
//!
//! Central finite differences over a scalar function of a flat parameter
//! vector, plus the randomized check suites behind `evkd kd-check`. The
//! differencing path only ever evaluates loss *values*, so it stays an
//! independent oracle for the analytic gradients.

use ndarray::{Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fourier::{dft2d, softmax2d, tft_kd_loss, ScoreMap};
use crate::inference::consistency_loss_from_logits;
use crate::losses::{
    feat_kd_loss, gaussian_heatmap, gwf_loss, response_kd_loss, sim_kd_loss, FeatureBlock, Heatmap,
    SimMatrix, RESPONSE_KD_TAU,
};

/// Central finite differences `(f(x + h e_i) - f(x - h e_i)) / 2h`.
pub fn central_diff_grad<F>(f: F, point: &[f64], step: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut grads = Vec::with_capacity(point.len());
    let mut probe = point.to_vec();
    for i in 0..point.len() {
        probe[i] = point[i] + step;
        let plus = f(&probe);
        probe[i] = point[i] - step;
        let minus = f(&probe);
        probe[i] = point[i];
        grads.push((plus - minus) / (2.0 * step));
    }
    grads
}

/// Worst relative disagreement between two gradient vectors, with an
/// absolute floor of `1e-6` on the denominator so near-zero entries are
/// compared absolutely rather than amplifying finite-difference noise.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-6))
        .fold(0.0, f64::max)
}

/// Finite-difference step used by the standard check suites.
pub const CHECK_STEP: f64 = 1e-5;
/// Pass threshold on the relative error.
pub const CHECK_TOLERANCE: f64 = 1e-4;

/// Outcome of one loss-kernel check suite.
#[derive(Debug, Clone)]
pub struct LossCheck {
    pub name: &'static str,
    pub trials: usize,
    pub max_rel_error: f64,
    pub tolerance: f64,
}

impl LossCheck {
    pub fn passed(&self) -> bool {
        self.max_rel_error < self.tolerance
    }
}

fn randn(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller keeps the dependency surface small.
    let u1: f64 = rng.random_range(1e-12..1.0);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn check_loss<F, G>(
    name: &'static str,
    trials: usize,
    rng: &mut ChaCha8Rng,
    mut make: F,
) -> LossCheck
where
    F: FnMut(&mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>, G),
    G: Fn(&[f64]) -> f64,
{
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let (point, analytic, value_fn) = make(rng);
        let numeric = central_diff_grad(&value_fn, &point, CHECK_STEP);
        worst = worst.max(max_relative_error(&analytic, &numeric));
    }
    LossCheck {
        name,
        trials,
        max_rel_error: worst,
        tolerance: CHECK_TOLERANCE,
    }
}

/// Runs the finite-difference suite for every loss kernel: similarity KD,
/// feature KD, GWF, response KD, temporal-Fourier KD, and the consistency
/// constraint. Deterministic for a fixed seed.
pub fn check_all_losses(seed: u64, trials: usize) -> Vec<LossCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut results = Vec::new();

    results.push(check_loss("sim_kd", trials, &mut rng, |rng| {
        let point: Vec<f64> = (0..64).map(|_| rng.random_range(-1.0..1.0)).collect();
        let teacher =
            SimMatrix::new(Array2::from_shape_fn((16, 16), |_| rng.random_range(-1.0..1.0)))
                .unwrap();
        let student =
            SimMatrix::new(Array2::from_shape_vec((8, 8), point.clone()).unwrap()).unwrap();
        let analytic: Vec<f64> = sim_kd_loss(&student, &teacher)
            .unwrap()
            .grad
            .into_iter()
            .collect();
        let value_fn = move |v: &[f64]| {
            let s = SimMatrix::new(Array2::from_shape_vec((8, 8), v.to_vec()).unwrap()).unwrap();
            sim_kd_loss(&s, &teacher).unwrap().value
        };
        (point, analytic, value_fn)
    }));

    results.push(check_loss("feat_kd", trials, &mut rng, |rng| {
        let point: Vec<f64> = (0..32).map(|_| rng.random_range(-1.0..1.0)).collect();
        let teacher = FeatureBlock::new(Array3::from_shape_fn((1, 16, 4), |_| {
            rng.random_range(-1.0..1.0)
        }))
        .unwrap();
        let student =
            FeatureBlock::new(Array3::from_shape_vec((1, 8, 4), point.clone()).unwrap()).unwrap();
        let analytic: Vec<f64> = feat_kd_loss(&student, &teacher)
            .unwrap()
            .grad
            .into_iter()
            .collect();
        let value_fn = move |v: &[f64]| {
            let s =
                FeatureBlock::new(Array3::from_shape_vec((1, 8, 4), v.to_vec()).unwrap()).unwrap();
            feat_kd_loss(&s, &teacher).unwrap().value
        };
        (point, analytic, value_fn)
    }));

    results.push(check_loss("gwf", trials, &mut rng, |rng| {
        let cx: f64 = rng.random_range(1.0..7.0);
        let cy: f64 = rng.random_range(1.0..7.0);
        let target = gaussian_heatmap((cx.round(), cy.round()), 1.5, (8, 8)).unwrap();
        let point: Vec<f64> = (0..64).map(|_| rng.random_range(0.05..0.95)).collect();
        let pred = Heatmap::new(Array2::from_shape_vec((8, 8), point.clone()).unwrap()).unwrap();
        let analytic: Vec<f64> = gwf_loss(&pred, &target).unwrap().grad.into_iter().collect();
        let value_fn = move |v: &[f64]| {
            let p = Heatmap::new(Array2::from_shape_vec((8, 8), v.to_vec()).unwrap()).unwrap();
            gwf_loss(&p, &target).unwrap().value
        };
        (point, analytic, value_fn)
    }));

    results.push(check_loss("response_kd", trials, &mut rng, |rng| {
        let teacher =
            Heatmap::new(Array2::from_shape_fn((4, 4), |_| rng.random_range(0.05..0.95)))
                .unwrap();
        let point: Vec<f64> = (0..16).map(|_| rng.random_range(0.05..0.95)).collect();
        let student =
            Heatmap::new(Array2::from_shape_vec((4, 4), point.clone()).unwrap()).unwrap();
        let analytic: Vec<f64> = response_kd_loss(&student, &teacher, RESPONSE_KD_TAU)
            .unwrap()
            .grad
            .into_iter()
            .collect();
        let value_fn = move |v: &[f64]| {
            let s = Heatmap::new(Array2::from_shape_vec((4, 4), v.to_vec()).unwrap()).unwrap();
            response_kd_loss(&s, &teacher, RESPONSE_KD_TAU).unwrap().value
        };
        (point, analytic, value_fn)
    }));

    results.push(check_loss("tft_kd", trials, &mut rng, |rng| {
        let frames = 3;
        let dims = (4, 4);
        let point: Vec<f64> = (0..frames * dims.0 * dims.1).map(|_| randn(rng)).collect();
        let teacher: Vec<ScoreMap> = (0..frames)
            .map(|_| ScoreMap::new(Array2::from_shape_fn(dims, |_| randn(rng))).unwrap())
            .collect();
        let to_maps = move |v: &[f64]| -> Vec<ScoreMap> {
            v.chunks(dims.0 * dims.1)
                .map(|chunk| {
                    ScoreMap::new(Array2::from_shape_vec(dims, chunk.to_vec()).unwrap()).unwrap()
                })
                .collect()
        };
        let student = to_maps(&point);
        let report = tft_kd_loss(&student, &teacher).unwrap();
        let analytic: Vec<f64> = report.grad.iter().flat_map(|g| g.iter().copied()).collect();
        let value_fn = move |v: &[f64]| {
            let maps = to_maps(v);
            tft_kd_loss(&maps, &teacher).unwrap().value
        };
        (point, analytic, value_fn)
    }));

    results.push(check_loss("consistency", trials, &mut rng, |rng| {
        let maps = 3;
        let dims = (4, 4);
        let point: Vec<f64> = (0..maps * dims.0 * dims.1).map(|_| randn(rng)).collect();
        let to_maps = move |v: &[f64]| -> Vec<ScoreMap> {
            v.chunks(dims.0 * dims.1)
                .map(|chunk| {
                    ScoreMap::new(Array2::from_shape_vec(dims, chunk.to_vec()).unwrap()).unwrap()
                })
                .collect()
        };
        let report = consistency_loss_from_logits(&to_maps(&point)).unwrap();
        let analytic: Vec<f64> = report.grad.iter().flat_map(|g| g.iter().copied()).collect();
        let value_fn = move |v: &[f64]| consistency_loss_from_logits(&to_maps(v)).unwrap().value;
        (point, analytic, value_fn)
    }));

    results
}

/// Outcome of a value-oracle comparison (independent evaluation route vs
/// the shipped implementation).
#[derive(Debug, Clone)]
pub struct OracleCheck {
    pub name: &'static str,
    pub max_abs_error: f64,
    pub tolerance: f64,
}

impl OracleCheck {
    pub fn passed(&self) -> bool {
        self.max_abs_error < self.tolerance
    }
}

/// Compares the separable DFT against a literal quadruple loop and the
/// softmax against direct exp-normalization on randomized grids.
pub fn check_value_oracles(seed: u64, trials: usize) -> Vec<OracleCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dft_worst = 0.0f64;
    let mut softmax_worst = 0.0f64;

    for _ in 0..trials {
        let rows = rng.random_range(1..=8);
        let cols = rng.random_range(1..=8);
        let grid = Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..1.0));

        let fast = dft2d(&grid);
        let (m, n) = (rows as f64, cols as f64);
        for mm in 0..rows {
            for nn in 0..cols {
                let mut re = 0.0;
                let mut im = 0.0;
                for k in 0..rows {
                    for l in 0..cols {
                        let phase = std::f64::consts::TAU
                            * (k as f64 * mm as f64 / m + l as f64 * nn as f64 / n);
                        re += grid[[k, l]] * phase.cos();
                        im += grid[[k, l]] * phase.sin();
                    }
                }
                re /= m * n;
                im /= m * n;
                dft_worst = dft_worst
                    .max((fast.real[[mm, nn]] - re).abs())
                    .max((fast.imag[[mm, nn]] - im).abs());
            }
        }

        let map = ScoreMap::new(grid.clone()).unwrap();
        let probs = softmax2d(&map);
        let total: f64 = grid.iter().map(|v| v.exp()).sum();
        for (p, v) in probs.iter().zip(grid.iter()) {
            softmax_worst = softmax_worst.max((p - v.exp() / total).abs());
        }
    }

    vec![
        OracleCheck {
            name: "dft2d_vs_quadruple_loop",
            max_abs_error: dft_worst,
            tolerance: 1e-10,
        },
        OracleCheck {
            name: "softmax2d_vs_exp_normalize",
            max_abs_error: softmax_worst,
            tolerance: 1e-12,
        },
    ]
}
