//! Temporal-Fourier distillation.
//!
//! Per-frame score maps are softmax-normalized into probability grids, run
//! through a 2-D discrete Fourier evaluation, and reduced to their real
//! part. The resulting "temporal signature" is min-max normalized into
//! `[eps, 1 - eps]` so it can feed the GWF loss, and the cross-network
//! loss averages GWF over a window of consecutive frames. The whole chain
//! is differentiable and ships its analytic gradient.
//!
//! The transform is
//! `out[m][n] = (1/MN) * sum_k sum_l in[k][l] * exp(+i 2 pi (km/M + ln/N))`
//! for an `M x N` grid (positive exponent, `1/MN` in front). A legacy
//! variant that divides both phase terms by the row count is kept behind
//! [`PhaseConvention::SharedRowCount`]; it is not a separable 2-D transform
//! when `M != N` and exists only for comparison.

use ndarray::Array2;
use num_complex::Complex64;
use thiserror::Error;

use crate::losses::{gwf_core, LossReport, GWF_ALPHA, GWF_BETA};

/// Floor/ceiling applied when normalizing signatures for GWF.
pub const SIGNATURE_EPS: f64 = 1e-7;

/// Per-frame grid of tracking confidence logits.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMap(Array2<f64>);

impl ScoreMap {
    pub fn new(values: Array2<f64>) -> Result<Self, FourierError> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FourierError::NonFinite);
        }
        Ok(ScoreMap(values))
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

/// Real and imaginary planes of a 2-D spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMap {
    pub real: Array2<f64>,
    pub imag: Array2<f64>,
}

#[derive(Debug, Error, PartialEq)]
pub enum FourierError {
    #[error("input contains non-finite entries")]
    NonFinite,
    #[error("student has {student} maps but teacher has {teacher}")]
    LengthMismatch { student: usize, teacher: usize },
    #[error("map dims differ: {a:?} vs {b:?}")]
    ShapeMismatch { a: (usize, usize), b: (usize, usize) },
    #[error("need at least one map")]
    Empty,
}

/// Numerically stable softmax over all cells: positive entries summing
/// to one, invariant to adding a constant to the whole map.
pub fn softmax2d(map: &ScoreMap) -> Array2<f64> {
    let vals = map.values();
    let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps = vals.mapv(|v| (v - max).exp());
    let total: f64 = exps.iter().sum();
    exps.mapv(|e| e / total)
}

/// Backward pass of [`softmax2d`]: given the probabilities `p` and the
/// upstream gradient `g` w.r.t. them, returns the gradient w.r.t. the
/// logits, `p .* (g - <p, g>)`.
pub fn softmax2d_backward(probs: &Array2<f64>, grad_probs: &Array2<f64>) -> Array2<f64> {
    let inner: f64 = probs
        .iter()
        .zip(grad_probs.iter())
        .map(|(&p, &g)| p * g)
        .sum();
    Array2::from_shape_fn(probs.dim(), |idx| probs[idx] * (grad_probs[idx] - inner))
}

/// Which denominators the phase terms use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhaseConvention {
    /// `km / M + ln / N`: the standard two-dimensional form.
    #[default]
    PerAxis,
    /// `(km + ln) / M`: both products over the row count.
    SharedRowCount,
}

/// Roots of unity `exp(+i 2 pi j / d)` for `j` in `0..d`.
fn twiddles(d: usize) -> Vec<Complex64> {
    (0..d)
        .map(|j| Complex64::from_polar(1.0, std::f64::consts::TAU * j as f64 / d as f64))
        .collect()
}

/// 2-D discrete Fourier evaluation with the positive exponent and `1/MN`
/// normalization, computed separably in `O(MN(M + N))`.
pub fn dft2d(grid: &Array2<f64>) -> SpectralMap {
    dft2d_with(grid, PhaseConvention::PerAxis)
}

pub fn dft2d_with(grid: &Array2<f64>, convention: PhaseConvention) -> SpectralMap {
    let (rows, cols) = grid.dim();
    let col_denom = match convention {
        PhaseConvention::PerAxis => cols,
        PhaseConvention::SharedRowCount => rows,
    };
    let col_tw = twiddles(col_denom);
    let row_tw = twiddles(rows);

    // Stage 1: transform along columns for each row k.
    let mut stage = vec![Complex64::new(0.0, 0.0); rows * cols];
    for k in 0..rows {
        for n in 0..cols {
            let mut acc = Complex64::new(0.0, 0.0);
            for l in 0..cols {
                acc += grid[[k, l]] * col_tw[(l * n) % col_denom];
            }
            stage[k * cols + n] = acc;
        }
    }

    // Stage 2: transform along rows, then normalize.
    let scale = 1.0 / (rows * cols) as f64;
    let mut real = Array2::<f64>::zeros((rows, cols));
    let mut imag = Array2::<f64>::zeros((rows, cols));
    for m in 0..rows {
        for n in 0..cols {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..rows {
                acc += stage[k * cols + n] * row_tw[(k * m) % rows];
            }
            real[[m, n]] = acc.re * scale;
            imag[[m, n]] = acc.im * scale;
        }
    }
    SpectralMap { real, imag }
}

/// Adjoint of `X -> Re(dft2d(X))`. The phase `2 pi (km/M + ln/N)` is
/// symmetric under swapping `(k, l)` with `(m, n)`, so the adjoint is the
/// real part of the same transform applied to the upstream gradient.
pub fn dft2d_real_adjoint(grad_real: &Array2<f64>, convention: PhaseConvention) -> Array2<f64> {
    dft2d_with(grad_real, convention).real
}

#[derive(Debug, Clone, Copy)]
struct MinMaxInfo {
    min: f64,
    max: f64,
    argmin: (usize, usize),
    argmax: (usize, usize),
}

/// Intermediates of the signature chain, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct SignatureTrace {
    probs: Array2<f64>,
    signature: Array2<f64>,
    minmax: Option<MinMaxInfo>,
    convention: PhaseConvention,
}

impl SignatureTrace {
    pub fn signature(&self) -> &Array2<f64> {
        &self.signature
    }

    /// Gradient w.r.t. the score-map logits given the gradient w.r.t. the
    /// normalized signature.
    pub fn backward(&self, grad_signature: &Array2<f64>) -> Array2<f64> {
        let Some(mm) = self.minmax else {
            // Degenerate spectrum: the output is a constant half grid.
            return Array2::zeros(self.probs.dim());
        };
        let range = mm.max - mm.min;
        let s = (1.0 - 2.0 * SIGNATURE_EPS) / range;

        // y_i = eps + s (x_i - min); min/max are themselves entries of x.
        let g_sum: f64 = grad_signature.iter().sum();
        let weighted: f64 = grad_signature
            .iter()
            .zip(self.signature.iter())
            .map(|(&g, &y)| g * (y - SIGNATURE_EPS) / s)
            .sum();
        let mut grad_spec = grad_signature.mapv(|g| g * s);
        grad_spec[mm.argmin] += -s * g_sum + s / range * weighted;
        grad_spec[mm.argmax] += -s / range * weighted;

        let grad_probs = dft2d_real_adjoint(&grad_spec, self.convention);
        softmax2d_backward(&self.probs, &grad_probs)
    }
}

/// Forward pass of the signature chain, retaining intermediates.
pub fn signature_forward(map: &ScoreMap, convention: PhaseConvention) -> SignatureTrace {
    let probs = softmax2d(map);
    let spectrum = dft2d_with(&probs, convention).real;

    let mut mm: Option<MinMaxInfo> = None;
    for (idx, &v) in spectrum.indexed_iter() {
        let entry = mm.get_or_insert(MinMaxInfo {
            min: v,
            max: v,
            argmin: idx,
            argmax: idx,
        });
        if v < entry.min {
            entry.min = v;
            entry.argmin = idx;
        }
        if v > entry.max {
            entry.max = v;
            entry.argmax = idx;
        }
    }
    let mm = mm.expect("score maps are non-empty");

    if mm.max == mm.min {
        // Degenerate range: every spectral cell identical.
        return SignatureTrace {
            probs,
            signature: Array2::from_elem(spectrum.dim(), 0.5),
            minmax: None,
            convention,
        };
    }

    let range = mm.max - mm.min;
    let signature = spectrum
        .mapv(|v| SIGNATURE_EPS + (1.0 - 2.0 * SIGNATURE_EPS) * (v - mm.min) / range);
    SignatureTrace {
        probs,
        signature,
        minmax: Some(mm),
        convention,
    }
}

/// Real-part Fourier signature of a score map, min-max normalized into
/// `[SIGNATURE_EPS, 1 - SIGNATURE_EPS]` (a constant 1/2 grid when the
/// spectrum is flat).
pub fn temporal_signature(map: &ScoreMap) -> Array2<f64> {
    signature_forward(map, PhaseConvention::PerAxis)
        .signature
}

/// Temporal-Fourier distillation over `n` consecutive frames: the GWF loss
/// between per-frame student and teacher signatures, averaged over frames.
/// The gradient flows through normalization, the (linear) real DFT, and
/// the softmax back to each student score map.
pub fn tft_kd_loss(
    student_maps: &[ScoreMap],
    teacher_maps: &[ScoreMap],
) -> Result<LossReport<Vec<Array2<f64>>>, FourierError> {
    if student_maps.is_empty() {
        return Err(FourierError::Empty);
    }
    if student_maps.len() != teacher_maps.len() {
        return Err(FourierError::LengthMismatch {
            student: student_maps.len(),
            teacher: teacher_maps.len(),
        });
    }
    let n = student_maps.len() as f64;
    let mut value = 0.0;
    let mut grads = Vec::with_capacity(student_maps.len());
    for (s_map, t_map) in student_maps.iter().zip(teacher_maps) {
        if s_map.dims() != t_map.dims() {
            return Err(FourierError::ShapeMismatch {
                a: s_map.dims(),
                b: t_map.dims(),
            });
        }
        let s_trace = signature_forward(s_map, PhaseConvention::PerAxis);
        let t_trace = signature_forward(t_map, PhaseConvention::PerAxis);
        let (frame_value, grad_pred) =
            gwf_core(s_trace.signature(), t_trace.signature(), GWF_ALPHA, GWF_BETA);
        value += frame_value / n;
        grads.push(s_trace.backward(&grad_pred.mapv(|g| g / n)));
    }
    Ok(LossReport { value, grad: grads })
}
