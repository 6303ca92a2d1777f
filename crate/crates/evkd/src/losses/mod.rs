//! Spatial knowledge-distillation losses.
//!
//! Three kernels transfer teacher signals to a student network: a squared
//! distance between self-attention similarity matrices, a mean-squared
//! error between token features, and a Gaussian-weighted focal (GWF) loss
//! between response heatmaps (optionally temperature-scaled). Student
//! tensors are half the teacher's token count and are aligned by tiling
//! before the distance is taken.
//!
//! Every loss returns a [`LossReport`]: the scalar value together with the
//! analytic gradient with respect to the *pre-alignment* student input.
//! Reductions run in fixed row-major order so results are bit-identical
//! across runs.

use ndarray::{Array2, Array3};
use thiserror::Error;

pub mod fixtures;

/// Clamp applied to GWF predictions before logarithms.
pub const GWF_EPS: f64 = 1e-7;
/// Focal exponent on the prediction, as used by center-point trackers.
pub const GWF_ALPHA: f64 = 2.0;
/// Focal exponent on the Gaussian target weight.
pub const GWF_BETA: f64 = 4.0;
/// Default temperature for response-map distillation.
pub const RESPONSE_KD_TAU: f64 = 2.0;

/// Scalar loss value plus the gradient w.r.t. the student input.
#[derive(Debug, Clone, PartialEq)]
pub struct LossReport<G> {
    pub value: f64,
    pub grad: G,
}

/// Head-averaged token-affinity matrix of one transformer layer.
#[derive(Debug, Clone, PartialEq)]
pub struct SimMatrix(Array2<f64>);

impl SimMatrix {
    pub fn new(values: Array2<f64>) -> Result<Self, LossError> {
        let (r, c) = values.dim();
        if r != c {
            return Err(LossError::NotSquare { rows: r, cols: c });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LossError::NonFinite);
        }
        Ok(SimMatrix(values))
    }

    pub fn side(&self) -> usize {
        self.0.nrows()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }
}

/// Output token features of shape `(batch, tokens, channels)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBlock(Array3<f64>);

impl FeatureBlock {
    pub fn new(values: Array3<f64>) -> Result<Self, LossError> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LossError::NonFinite);
        }
        Ok(FeatureBlock(values))
    }

    pub fn tokens(&self) -> usize {
        self.0.dim().1
    }

    pub fn values(&self) -> &Array3<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Array3<f64> {
        self.0
    }
}

/// Dense response map or Gaussian target with entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap(Array2<f64>);

impl Heatmap {
    pub fn new(values: Array2<f64>) -> Result<Self, LossError> {
        if values.iter().any(|v| !v.is_finite() || !(0.0..=1.0).contains(v)) {
            return Err(LossError::OutOfUnitRange);
        }
        Ok(Heatmap(values))
    }

    pub fn dims(&self) -> (usize, usize) {
        self.0.dim()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }
}

/// Weight coefficients of the three main tracking losses and the four
/// distillation losses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub focal: f64,
    pub l1: f64,
    pub giou: f64,
    pub sim: f64,
    pub feat: f64,
    pub response: f64,
    pub tft: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            focal: 1.0,
            l1: 5.0,
            giou: 2.0,
            sim: 1.0,
            feat: 1.0,
            response: 1.0,
            tft: 1.0,
        }
    }
}

/// Values of the main (ground-truth supervised) tracking losses.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MainLosses {
    pub focal: f64,
    pub l1: f64,
    pub giou: f64,
}

/// Values of the four distillation losses.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KdLosses {
    pub sim: f64,
    pub feat: f64,
    pub response: f64,
    pub tft: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum LossError {
    #[error("similarity matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("input contains non-finite entries")]
    NonFinite,
    #[error("heatmap entries must lie in [0, 1]")]
    OutOfUnitRange,
    #[error("target size {target} is not a multiple of input size {input}")]
    NonMultiple { input: usize, target: usize },
    #[error("shape mismatch: student {student:?} vs teacher {teacher:?}")]
    ShapeMismatch {
        student: Vec<usize>,
        teacher: Vec<usize>,
    },
    #[error("sigma must be positive, got {0}")]
    BadSigma(f64),
    #[error("temperature must be positive, got {0}")]
    BadTemperature(f64),
}

/// How a student tensor is upsampled to the teacher's token count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AlignMode {
    /// Whole-block repetition: `out[i] = in[i mod n]`.
    #[default]
    Tile,
    /// Nearest-neighbor block upsampling: `out[i] = in[i / f]`.
    BlockNearest,
}

impl AlignMode {
    /// Source index feeding output position `i` for `n -> n * factor`.
    fn source(self, i: usize, n: usize, factor: usize) -> usize {
        match self {
            AlignMode::Tile => i % n,
            AlignMode::BlockNearest => i / factor,
        }
    }
}

fn alignment_factor(input: usize, target: usize) -> Result<usize, LossError> {
    if input == 0 || target % input != 0 {
        return Err(LossError::NonMultiple { input, target });
    }
    Ok(target / input)
}

/// Upsamples a similarity matrix to `target_tokens` per side.
pub fn repeat_align_matrix(
    input: &SimMatrix,
    target_tokens: usize,
    mode: AlignMode,
) -> Result<SimMatrix, LossError> {
    let n = input.side();
    let f = alignment_factor(n, target_tokens)?;
    let src = input.values();
    let out = Array2::from_shape_fn((target_tokens, target_tokens), |(i, j)| {
        src[[mode.source(i, n, f), mode.source(j, n, f)]]
    });
    Ok(SimMatrix(out))
}

/// Upsamples a feature block along the token axis to `target_tokens`.
pub fn repeat_align_features(
    input: &FeatureBlock,
    target_tokens: usize,
    mode: AlignMode,
) -> Result<FeatureBlock, LossError> {
    let (b, n, c) = input.values().dim();
    let f = alignment_factor(n, target_tokens)?;
    let src = input.values();
    let out = Array3::from_shape_fn((b, target_tokens, c), |(bi, i, ci)| {
        src[[bi, mode.source(i, n, f), ci]]
    });
    Ok(FeatureBlock(out))
}

/// Whether the similarity loss is reported as a raw sum (as written) or
/// normalized by the matrix size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SimNormalization {
    #[default]
    Sum,
    Mean,
}

/// Sum of squared differences between the tiled student similarity matrix
/// and the teacher's. The gradient accumulates `2 (S_s - S_t)` over every
/// tiled position back onto the pre-alignment student entries.
pub fn sim_kd_loss(
    student: &SimMatrix,
    teacher: &SimMatrix,
) -> Result<LossReport<Array2<f64>>, LossError> {
    sim_kd_loss_with(student, teacher, AlignMode::Tile, SimNormalization::Sum)
}

pub fn sim_kd_loss_with(
    student: &SimMatrix,
    teacher: &SimMatrix,
    mode: AlignMode,
    norm: SimNormalization,
) -> Result<LossReport<Array2<f64>>, LossError> {
    let n = student.side();
    let t = teacher.side();
    let f = alignment_factor(n, t).map_err(|_| LossError::ShapeMismatch {
        student: vec![n, n],
        teacher: vec![t, t],
    })?;
    let s = student.values();
    let tv = teacher.values();
    let scale = match norm {
        SimNormalization::Sum => 1.0,
        SimNormalization::Mean => 1.0 / (t * t) as f64,
    };
    let mut value = 0.0;
    let mut grad = Array2::<f64>::zeros((n, n));
    for i in 0..t {
        let si = mode.source(i, n, f);
        for j in 0..t {
            let sj = mode.source(j, n, f);
            let d = s[[si, sj]] - tv[[i, j]];
            value += d * d;
            grad[[si, sj]] += 2.0 * d * scale;
        }
    }
    Ok(LossReport {
        value: value * scale,
        grad,
    })
}

/// Mean squared error between tiled student features and teacher features,
/// normalized by the total element count of the aligned block.
pub fn feat_kd_loss(
    student: &FeatureBlock,
    teacher: &FeatureBlock,
) -> Result<LossReport<Array3<f64>>, LossError> {
    feat_kd_loss_with(student, teacher, AlignMode::Tile)
}

pub fn feat_kd_loss_with(
    student: &FeatureBlock,
    teacher: &FeatureBlock,
    mode: AlignMode,
) -> Result<LossReport<Array3<f64>>, LossError> {
    let (sb, sn, sc) = student.values().dim();
    let (tb, tn, tc) = teacher.values().dim();
    let mismatch = || LossError::ShapeMismatch {
        student: vec![sb, sn, sc],
        teacher: vec![tb, tn, tc],
    };
    if sb != tb || sc != tc {
        return Err(mismatch());
    }
    let f = alignment_factor(sn, tn).map_err(|_| mismatch())?;
    let s = student.values();
    let tv = teacher.values();
    let count = (tb * tn * tc) as f64;
    let mut value = 0.0;
    let mut grad = Array3::<f64>::zeros((sb, sn, sc));
    for b in 0..tb {
        for i in 0..tn {
            let si = mode.source(i, sn, f);
            for c in 0..tc {
                let d = s[[b, si, c]] - tv[[b, i, c]];
                value += d * d;
                grad[[b, si, c]] += 2.0 * d / count;
            }
        }
    }
    Ok(LossReport {
        value: value / count,
        grad,
    })
}

/// Isotropic Gaussian target heatmap peaking at `center = (x, y)` in cell
/// coordinates (column, row) with standard deviation `sigma`.
pub fn gaussian_heatmap(
    center: (f64, f64),
    sigma: f64,
    dims: (usize, usize),
) -> Result<Heatmap, LossError> {
    if !(sigma > 0.0) {
        return Err(LossError::BadSigma(sigma));
    }
    let (rows, cols) = dims;
    let (px, py) = center;
    let denom = 2.0 * sigma * sigma;
    let values = Array2::from_shape_fn((rows, cols), |(r, c)| {
        let dx = c as f64 - px;
        let dy = r as f64 - py;
        (-(dx * dx + dy * dy) / denom).exp()
    });
    Ok(Heatmap(values))
}

/// Largest corner-perturbation radius keeping the IoU of a `width x height`
/// box with its perturbed copies at or above `min_overlap`.
///
/// The bound is the minimum over the three worst-case perturbations (both
/// corners outward, both inward, both shifted the same way), each solved in
/// closed form.
pub fn gaussian_radius(width: f64, height: f64, min_overlap: f64) -> f64 {
    assert!(
        (0.0..1.0).contains(&min_overlap) && width > 0.0 && height > 0.0,
        "need 0 <= min_overlap < 1 and positive extent"
    );
    let (w, h) = (width, height);
    let o = min_overlap;

    // Outward growth: wh / ((w + 2r)(h + 2r)) = o.
    let a1 = 4.0;
    let b1 = 2.0 * (w + h);
    let c1 = w * h * (o - 1.0) / o;
    let r1 = (-b1 + (b1 * b1 - 4.0 * a1 * c1).sqrt()) / (2.0 * a1);

    // Inward shrink: (w - 2r)(h - 2r) = o * wh; first (smaller) root.
    let a2 = 4.0;
    let b2 = -2.0 * (w + h);
    let c2 = w * h * (1.0 - o);
    let r2 = (-b2 - (b2 * b2 - 4.0 * a2 * c2).sqrt()) / (2.0 * a2);

    // Diagonal shift: (w - r)(h - r) = o (2wh - (w - r)(h - r)).
    let a3 = 1.0;
    let b3 = -(w + h);
    let c3 = w * h * (1.0 - o) / (1.0 + o);
    let r3 = (-b3 - (b3 * b3 - 4.0 * a3 * c3).sqrt()) / (2.0 * a3);

    r1.min(r2).min(r3)
}

/// Size-adaptive Gaussian standard deviation for an object of the given
/// cell extent: `(2r + 1) / 6` with `r` from [`gaussian_radius`].
pub fn adaptive_sigma(width: f64, height: f64, min_overlap: f64) -> f64 {
    (2.0 * gaussian_radius(width, height, min_overlap) + 1.0) / 6.0
}

/// GWF value and gradient on raw arrays; shared by the public entry points.
pub(crate) fn gwf_core(
    pred: &Array2<f64>,
    target: &Array2<f64>,
    alpha: f64,
    beta: f64,
) -> (f64, Array2<f64>) {
    let mut value = 0.0;
    let mut grad = Array2::<f64>::zeros(pred.dim());
    for ((idx, &p_raw), &t) in pred.indexed_iter().zip(target.iter()) {
        let p = p_raw.clamp(GWF_EPS, 1.0 - GWF_EPS);
        let clamped = p_raw < GWF_EPS || p_raw > 1.0 - GWF_EPS;
        if t == 1.0 {
            let one_p = 1.0 - p;
            value -= one_p.powf(alpha) * p.ln();
            if !clamped {
                grad[idx] = alpha * one_p.powf(alpha - 1.0) * p.ln() - one_p.powf(alpha) / p;
            }
        } else {
            let wt = (1.0 - t).powf(beta);
            value -= wt * p.powf(alpha) * (1.0 - p).ln();
            if !clamped {
                grad[idx] =
                    -wt * (alpha * p.powf(alpha - 1.0) * (1.0 - p).ln() - p.powf(alpha) / (1.0 - p));
            }
        }
    }
    (value, grad)
}

/// Gaussian-weighted focal loss between a predicted heatmap and a target.
///
/// Cells where the target equals one use the positive branch
/// `-(1 - P)^alpha log P`; every other cell uses
/// `-(1 - T)^beta P^alpha log(1 - P)`. Predictions are clamped to
/// `[GWF_EPS, 1 - GWF_EPS]` before logarithms and the gradient is zero at
/// clamped cells.
pub fn gwf_loss(pred: &Heatmap, target: &Heatmap) -> Result<LossReport<Array2<f64>>, LossError> {
    gwf_loss_with(pred, target, GWF_ALPHA, GWF_BETA)
}

pub fn gwf_loss_with(
    pred: &Heatmap,
    target: &Heatmap,
    alpha: f64,
    beta: f64,
) -> Result<LossReport<Array2<f64>>, LossError> {
    if pred.dims() != target.dims() {
        return Err(LossError::ShapeMismatch {
            student: vec![pred.dims().0, pred.dims().1],
            teacher: vec![target.dims().0, target.dims().1],
        });
    }
    let (value, grad) = gwf_core(pred.values(), target.values(), alpha, beta);
    Ok(LossReport { value, grad })
}

/// Response-map distillation: GWF between the two maps after dividing both
/// by the temperature `tau`. The gradient w.r.t. the raw student map picks
/// up a `1 / tau` factor through the chain rule.
pub fn response_kd_loss(
    student_map: &Heatmap,
    teacher_map: &Heatmap,
    tau: f64,
) -> Result<LossReport<Array2<f64>>, LossError> {
    if !(tau > 0.0) {
        return Err(LossError::BadTemperature(tau));
    }
    if student_map.dims() != teacher_map.dims() {
        return Err(LossError::ShapeMismatch {
            student: vec![student_map.dims().0, student_map.dims().1],
            teacher: vec![teacher_map.dims().0, teacher_map.dims().1],
        });
    }
    let scaled_student = student_map.values().mapv(|v| v / tau);
    let scaled_teacher = teacher_map.values().mapv(|v| v / tau);
    let (value, grad) = gwf_core(&scaled_student, &scaled_teacher, GWF_ALPHA, GWF_BETA);
    Ok(LossReport {
        value,
        grad: grad.mapv(|g| g / tau),
    })
}

/// Weighted sum of the main tracking losses and the distillation losses.
pub fn total_loss(main: &MainLosses, kd: &KdLosses, w: &LossWeights) -> f64 {
    w.focal * main.focal
        + w.l1 * main.l1
        + w.giou * main.giou
        + w.sim * kd.sim
        + w.feat * kd.feat
        + w.response * kd.response
        + w.tft * kd.tft
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::{central_diff_grad, max_relative_error};
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn repeat_align_tiles_matrix() {
        let m = SimMatrix::new(array![[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let out = repeat_align_matrix(&m, 4, AlignMode::Tile).unwrap();
        let expected = array![
            [1.0, 2.0, 1.0, 2.0],
            [3.0, 4.0, 3.0, 4.0],
            [1.0, 2.0, 1.0, 2.0],
            [3.0, 4.0, 3.0, 4.0]
        ];
        assert_eq!(out.values(), &expected);
    }

    #[test]
    fn repeat_align_identity_and_errors() {
        let m = SimMatrix::new(array![[1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert_eq!(repeat_align_matrix(&m, 2, AlignMode::Tile).unwrap(), m);
        assert!(matches!(
            repeat_align_matrix(&m, 5, AlignMode::Tile).unwrap_err(),
            LossError::NonMultiple { .. }
        ));
    }

    #[test]
    fn repeat_align_features_repeats_rows() {
        let block =
            FeatureBlock::new(Array3::from_shape_fn((1, 320, 8), |(_, i, c)| {
                (i * 8 + c) as f64
            }))
            .unwrap();
        let out = repeat_align_features(&block, 640, AlignMode::Tile).unwrap();
        for i in 0..640 {
            for c in 0..8 {
                assert_eq!(out.values()[[0, i, c]], block.values()[[0, i % 320, c]]);
            }
        }
    }

    #[test]
    fn repeat_align_block_nearest() {
        let m = SimMatrix::new(array![[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let out = repeat_align_matrix(&m, 4, AlignMode::BlockNearest).unwrap();
        let expected = array![
            [1.0, 1.0, 2.0, 2.0],
            [1.0, 1.0, 2.0, 2.0],
            [3.0, 3.0, 4.0, 4.0],
            [3.0, 3.0, 4.0, 4.0]
        ];
        assert_eq!(out.values(), &expected);
    }

    #[test]
    fn sim_loss_zero_when_equal() {
        let m = SimMatrix::new(array![[0.5, -1.0], [2.0, 0.0]]).unwrap();
        let report = sim_kd_loss(&m, &m).unwrap();
        assert_eq!(report.value, 0.0);
        assert!(report.grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn sim_loss_counts_every_cell() {
        let student = SimMatrix::new(Array2::zeros((320, 320))).unwrap();
        let teacher = SimMatrix::new(Array2::ones((640, 640))).unwrap();
        let report = sim_kd_loss(&student, &teacher).unwrap();
        assert_abs_diff_eq!(report.value, 640.0 * 640.0, epsilon = 1e-9);
        // Every student entry backs 4 tiled positions: grad = 4 * 2 * (0 - 1).
        assert_abs_diff_eq!(report.grad[[0, 0]], -8.0);
    }

    #[test]
    fn sim_loss_mean_mode_scales() {
        let student = SimMatrix::new(Array2::zeros((4, 4))).unwrap();
        let teacher = SimMatrix::new(Array2::ones((8, 8))).unwrap();
        let sum = sim_kd_loss(&student, &teacher).unwrap();
        let mean =
            sim_kd_loss_with(&student, &teacher, AlignMode::Tile, SimNormalization::Mean).unwrap();
        assert_abs_diff_eq!(mean.value, sum.value / 64.0, epsilon = 1e-12);
    }

    #[test]
    fn sim_loss_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let student_vals: Vec<f64> = (0..64).map(|_| rng.random_range(-1.0..1.0)).collect();
        let teacher = SimMatrix::new(Array2::from_shape_fn((16, 16), |_| {
            rng.random_range(-1.0..1.0)
        }))
        .unwrap();
        let student =
            SimMatrix::new(Array2::from_shape_vec((8, 8), student_vals.clone()).unwrap()).unwrap();
        let report = sim_kd_loss(&student, &teacher).unwrap();
        let numeric = central_diff_grad(
            |v| {
                let s = SimMatrix::new(Array2::from_shape_vec((8, 8), v.to_vec()).unwrap()).unwrap();
                sim_kd_loss(&s, &teacher).unwrap().value
            },
            &student_vals,
            1e-5,
        );
        let analytic: Vec<f64> = report.grad.iter().copied().collect();
        assert!(max_relative_error(&analytic, &numeric) < 1e-6);
    }

    #[test]
    fn feat_loss_mean_of_ones() {
        let student = FeatureBlock::new(Array3::zeros((1, 4, 8))).unwrap();
        let teacher = FeatureBlock::new(Array3::ones((1, 8, 8))).unwrap();
        let report = feat_kd_loss(&student, &teacher).unwrap();
        assert_abs_diff_eq!(report.value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn feat_loss_zero_when_equal() {
        let block = FeatureBlock::new(Array3::from_elem((2, 4, 4), 0.3)).unwrap();
        assert_eq!(feat_kd_loss(&block, &block).unwrap().value, 0.0);
    }

    #[test]
    fn feat_loss_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let student_vals: Vec<f64> = (0..32).map(|_| rng.random_range(-1.0..1.0)).collect();
        let teacher = FeatureBlock::new(Array3::from_shape_fn((1, 16, 4), |_| {
            rng.random_range(-1.0..1.0)
        }))
        .unwrap();
        let student = FeatureBlock::new(
            Array3::from_shape_vec((1, 8, 4), student_vals.clone()).unwrap(),
        )
        .unwrap();
        let report = feat_kd_loss(&student, &teacher).unwrap();
        let numeric = central_diff_grad(
            |v| {
                let s = FeatureBlock::new(Array3::from_shape_vec((1, 8, 4), v.to_vec()).unwrap())
                    .unwrap();
                feat_kd_loss(&s, &teacher).unwrap().value
            },
            &student_vals,
            1e-5,
        );
        let analytic: Vec<f64> = report.grad.iter().copied().collect();
        assert!(max_relative_error(&analytic, &numeric) < 1e-6);
    }

    #[test]
    fn gaussian_heatmap_peak_and_decay() {
        let hm = gaussian_heatmap((8.0, 8.0), 2.0, (16, 16)).unwrap();
        assert_abs_diff_eq!(hm.values()[[8, 8]], 1.0);
        // A cell at distance exactly sigma decays to exp(-1/2).
        assert_abs_diff_eq!(hm.values()[[8, 10]], (-0.5f64).exp(), epsilon = 1e-12);
        assert!(matches!(
            gaussian_heatmap((0.0, 0.0), 0.0, (4, 4)).unwrap_err(),
            LossError::BadSigma(_)
        ));
    }

    /// Brute-force check of the radius rule: scan radii and verify the
    /// analytic value is the largest keeping all three perturbed boxes at
    /// IoU >= min_overlap, using the box-arithmetic IoU as the oracle.
    #[test]
    fn gaussian_radius_matches_brute_force_search() {
        use crate::geometry::{iou, BoundingBox};
        let (w, h, o) = (24.0, 24.0, 0.7);
        let gt = BoundingBox::new(0.0, 0.0, w, h).unwrap();
        let worst_iou = |r: f64| -> f64 {
            let grown = BoundingBox::new(-r, -r, w + 2.0 * r, h + 2.0 * r).unwrap();
            let shifted = BoundingBox::new(r, r, w, h).unwrap();
            let mut worst = iou(&gt, &grown).min(iou(&gt, &shifted));
            if w > 2.0 * r && h > 2.0 * r {
                let shrunk = BoundingBox::new(r, r, w - 2.0 * r, h - 2.0 * r).unwrap();
                worst = worst.min(iou(&gt, &shrunk));
            }
            worst
        };
        let step = 1e-4;
        let mut best = 0.0;
        let mut r = 0.0;
        while r < w {
            if worst_iou(r) >= o {
                best = r;
            } else {
                break;
            }
            r += step;
        }
        let analytic = gaussian_radius(w, h, o);
        assert!(
            (analytic - best).abs() <= 2.0 * step,
            "analytic {analytic} vs brute-force {best}"
        );
        let sigma = adaptive_sigma(w, h, o);
        assert_abs_diff_eq!(sigma, (2.0 * analytic + 1.0) / 6.0);
    }

    #[test]
    fn gwf_perfect_prediction_is_zero() {
        let ones = Heatmap::new(Array2::ones((4, 4))).unwrap();
        let report = gwf_loss(&ones, &ones).unwrap();
        assert_abs_diff_eq!(report.value, 0.0, epsilon = 1e-12);
    }

    /// Direct per-cell summation oracle for the two-branch focal value.
    #[test]
    fn gwf_matches_direct_summation() {
        let pred = Heatmap::new(array![[0.5, 0.5]]).unwrap();
        let target = Heatmap::new(array![[1.0, 0.0]]).unwrap();
        let report = gwf_loss(&pred, &target).unwrap();
        let expected = -((0.5f64).powi(2) * (0.5f64).ln() + (0.5f64).powi(2) * (0.5f64).ln());
        assert_abs_diff_eq!(report.value, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(report.value, 0.346_573_590_279_972_6, epsilon = 1e-12);
    }

    #[test]
    fn gwf_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let target = gaussian_heatmap((3.0, 4.0), 1.2, (8, 8)).unwrap();
        let pred_vals: Vec<f64> = (0..64).map(|_| rng.random_range(0.05..0.95)).collect();
        let pred =
            Heatmap::new(Array2::from_shape_vec((8, 8), pred_vals.clone()).unwrap()).unwrap();
        let report = gwf_loss(&pred, &target).unwrap();
        let numeric = central_diff_grad(
            |v| {
                let p = Heatmap::new(Array2::from_shape_vec((8, 8), v.to_vec()).unwrap()).unwrap();
                gwf_loss(&p, &target).unwrap().value
            },
            &pred_vals,
            1e-5,
        );
        let analytic: Vec<f64> = report.grad.iter().copied().collect();
        assert!(max_relative_error(&analytic, &numeric) < 1e-5);
    }

    #[test]
    fn response_kd_is_scaled_gwf() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let s_vals = Array2::from_shape_fn((4, 4), |_| rng.random_range(0.1..0.9));
        let t_vals = Array2::from_shape_fn((4, 4), |_| rng.random_range(0.1..0.9));
        let s = Heatmap::new(s_vals.clone()).unwrap();
        let t = Heatmap::new(t_vals.clone()).unwrap();

        // tau = 1 is plain GWF.
        let at_one = response_kd_loss(&s, &t, 1.0).unwrap();
        let plain = gwf_loss(&s, &t).unwrap();
        assert_abs_diff_eq!(at_one.value, plain.value, epsilon = 1e-12);

        // tau = 2 equals GWF on the halved maps.
        let at_two = response_kd_loss(&s, &t, 2.0).unwrap();
        let halved = gwf_core(
            &s_vals.mapv(|v| v / 2.0),
            &t_vals.mapv(|v| v / 2.0),
            GWF_ALPHA,
            GWF_BETA,
        );
        assert_abs_diff_eq!(at_two.value, halved.0, epsilon = 1e-12);

        assert!(matches!(
            response_kd_loss(&s, &t, 0.0).unwrap_err(),
            LossError::BadTemperature(_)
        ));
    }

    #[test]
    fn response_kd_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let teacher = Heatmap::new(Array2::from_shape_fn((4, 4), |_| {
            rng.random_range(0.1..0.9)
        }))
        .unwrap();
        let s_vals: Vec<f64> = (0..16).map(|_| rng.random_range(0.1..0.9)).collect();
        let student =
            Heatmap::new(Array2::from_shape_vec((4, 4), s_vals.clone()).unwrap()).unwrap();
        let report = response_kd_loss(&student, &teacher, RESPONSE_KD_TAU).unwrap();
        let numeric = central_diff_grad(
            |v| {
                let s = Heatmap::new(Array2::from_shape_vec((4, 4), v.to_vec()).unwrap()).unwrap();
                response_kd_loss(&s, &teacher, RESPONSE_KD_TAU).unwrap().value
            },
            &s_vals,
            1e-5,
        );
        let analytic: Vec<f64> = report.grad.iter().copied().collect();
        assert!(max_relative_error(&analytic, &numeric) < 1e-5);
    }

    #[test]
    fn total_loss_weighted_sum() {
        let main = MainLosses {
            focal: 1.0,
            l1: 2.0,
            giou: 3.0,
        };
        let kd = KdLosses {
            sim: 4.0,
            feat: 5.0,
            response: 6.0,
            tft: 7.0,
        };
        let unit = LossWeights {
            focal: 1.0,
            l1: 1.0,
            giou: 1.0,
            sim: 1.0,
            feat: 1.0,
            response: 1.0,
            tft: 1.0,
        };
        assert_abs_diff_eq!(total_loss(&main, &kd, &unit), 28.0);

        // Dropping distillation weights leaves the weighted main sum.
        let mains_only = LossWeights {
            sim: 0.0,
            feat: 0.0,
            response: 0.0,
            tft: 0.0,
            ..LossWeights::default()
        };
        assert_abs_diff_eq!(
            total_loss(&main, &kd, &mains_only),
            1.0 * 1.0 + 5.0 * 2.0 + 2.0 * 3.0
        );

        // Homogeneity: doubling every weight doubles the total.
        let doubled = LossWeights {
            focal: 2.0,
            l1: 2.0,
            giou: 2.0,
            sim: 2.0,
            feat: 2.0,
            response: 2.0,
            tft: 2.0,
        };
        assert_abs_diff_eq!(
            total_loss(&main, &kd, &doubled),
            2.0 * total_loss(&main, &kd, &unit)
        );
    }

    #[test]
    fn heatmap_rejects_out_of_range() {
        assert!(Heatmap::new(array![[0.0, 1.1]]).is_err());
        assert!(Heatmap::new(array![[-0.1, 0.5]]).is_err());
        assert!(Heatmap::new(array![[f64::NAN]]).is_err());
    }
}
