//! Inference-time strategies.
//!
//! Everything the tracker does after offline training lives here: the
//! adaptive-search-region controller that widens the crop after repeated
//! low-IoU frames, low-rank adapters applied to frozen base weights,
//! sparsity-based template augmentation, the consistency constraint over
//! augmented response maps, and the video-level test-time tuning schedule
//! that optimizes only adapter parameters against early-frame pseudo-labels.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::event::{EventError, EventFrame, EventStream};
use crate::fourier::{softmax2d, softmax2d_backward, FourierError, ScoreMap};
use crate::geometry::BoundingBox;
use crate::losses::{
    adaptive_sigma, gaussian_heatmap, gwf_core, Heatmap, LossError, LossReport, GWF_ALPHA,
    GWF_BETA,
};
use crate::toy::{featurize_frame, toy_forward, ToyError, ToyParams};

/// Adaptive-search-region parameters: IoU threshold, consecutive-failure
/// patience, and the crop expansion applied once tracking is deemed lost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsrConfig {
    pub iou_threshold: f64,
    pub patience: usize,
    pub expansion: f64,
}

impl Default for AsrConfig {
    fn default() -> Self {
        AsrConfig {
            iou_threshold: 0.5,
            patience: 7,
            expansion: 1.5,
        }
    }
}

/// Controller state: failures observed in a row, and whether the search
/// region is currently expanded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AsrState {
    pub consecutive_failures: usize,
    pub expanded: bool,
}

/// One controller step. An IoU below the threshold counts a failure; at
/// `patience` consecutive failures the crop multiplier switches to the
/// expansion factor and stays there until an IoU at or above the threshold
/// resets the state. Returns the new state and the multiplier to apply to
/// the next frame's crop.
pub fn asr_step(state: AsrState, iou_prev: f64, cfg: &AsrConfig) -> (AsrState, f64) {
    let mut next = state;
    if iou_prev < cfg.iou_threshold {
        next.consecutive_failures += 1;
        if next.consecutive_failures >= cfg.patience {
            next.expanded = true;
        }
    } else {
        next.consecutive_failures = 0;
        next.expanded = false;
    }
    let multiplier = if next.expanded { cfg.expansion } else { 1.0 };
    (next, multiplier)
}

/// Layer group a LoRA adapter attaches to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoraTarget {
    Mlp,
    AttnProj,
    AttnQkv,
}

/// Low-rank additive correction `(alpha / r) * B (A x)` over a frozen
/// linear layer. `B` starts at zero so a fresh adapter is an exact
/// identity on the output.
#[derive(Debug, Clone, PartialEq)]
pub struct LoraAdapter {
    /// Down-projection `A`, shape `(rank, d_in)`.
    pub down: Array2<f64>,
    /// Up-projection `B`, shape `(d_out, rank)`.
    pub up: Array2<f64>,
    pub rank: usize,
    pub alpha: f64,
    pub target: LoraTarget,
}

impl LoraAdapter {
    /// Random `A`, zero `B`.
    pub fn zero_init(
        d_in: usize,
        d_out: usize,
        rank: usize,
        alpha: f64,
        target: LoraTarget,
        seed: u64,
    ) -> Self {
        assert!(rank >= 1, "rank must be at least 1");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1.0 / (d_in as f64).sqrt();
        let down = Array2::from_shape_fn((rank, d_in), |_| rng.random_range(-scale..scale));
        LoraAdapter {
            down,
            up: Array2::zeros((d_out, rank)),
            rank,
            alpha,
            target,
        }
    }

    pub fn scaling(&self) -> f64 {
        self.alpha / self.rank as f64
    }

    /// The additive correction `(alpha / r) * B (A x)`.
    pub fn correction(&self, x: &Array1<f64>) -> Result<Array1<f64>, InferenceError> {
        if x.len() != self.down.ncols() || self.up.ncols() != self.down.nrows() {
            return Err(InferenceError::LoraShape {
                d_in: self.down.ncols(),
                rank: self.down.nrows(),
                up: (self.up.nrows(), self.up.ncols()),
                input: x.len(),
            });
        }
        Ok(self.up.dot(&self.down.dot(x)) * self.scaling())
    }
}

/// Adapted layer output `base_output + (alpha / r) * B (A x)`.
pub fn lora_apply(
    base_output: &Array1<f64>,
    adapter: &LoraAdapter,
    x: &Array1<f64>,
) -> Result<Array1<f64>, InferenceError> {
    let correction = adapter.correction(x)?;
    if correction.len() != base_output.len() {
        return Err(InferenceError::LoraShape {
            d_in: adapter.down.ncols(),
            rank: adapter.rank,
            up: (adapter.up.nrows(), adapter.up.ncols()),
            input: base_output.len(),
        });
    }
    Ok(base_output + &correction)
}

/// Gradients of a loss w.r.t. the adapter factors, given the upstream
/// gradient on the adapted output: `dB = s u (A x)^T`, `dA = s (B^T u) x^T`.
pub fn lora_grads(
    adapter: &LoraAdapter,
    x: &Array1<f64>,
    upstream: &Array1<f64>,
) -> Result<(Array2<f64>, Array2<f64>), InferenceError> {
    if x.len() != adapter.down.ncols() || upstream.len() != adapter.up.nrows() {
        return Err(InferenceError::LoraShape {
            d_in: adapter.down.ncols(),
            rank: adapter.rank,
            up: (adapter.up.nrows(), adapter.up.ncols()),
            input: x.len(),
        });
    }
    let s = adapter.scaling();
    let ax = adapter.down.dot(x);
    let btu = adapter.up.t().dot(upstream);
    let grad_up = upstream
        .view()
        .insert_axis(ndarray::Axis(1))
        .dot(&ax.view().insert_axis(ndarray::Axis(0)))
        * s;
    let grad_down = btu
        .view()
        .insert_axis(ndarray::Axis(1))
        .dot(&x.view().insert_axis(ndarray::Axis(0)))
        * s;
    Ok((grad_down, grad_up))
}

/// Re-divides an initial event window into `n` templates of decreasing
/// density: template `i` keeps each event independently with probability
/// `1 - i/n`. The draw for event `j` is a pure function of `(seed, j)`, so
/// templates are nested and the whole operation is reproducible.
pub fn template_augment(
    window: &EventStream,
    n: usize,
    seed: u64,
) -> Result<Vec<EventStream>, InferenceError> {
    assert!(n >= 1, "need at least one template");
    if window.is_empty() {
        return Err(InferenceError::EmptyWindow);
    }
    let draws: Vec<f64> = (0..window.len())
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(j as u64);
            rng.random::<f64>()
        })
        .collect();
    let mut templates = Vec::with_capacity(n);
    for i in 0..n {
        let keep = 1.0 - i as f64 / n as f64;
        let events: Vec<_> = window
            .events()
            .iter()
            .zip(&draws)
            .filter(|(_, &u)| u < keep)
            .map(|(ev, _)| *ev)
            .collect();
        templates.push(
            EventStream::new(window.geometry(), events)
                .expect("filtered subset of a valid stream stays valid"),
        );
    }
    Ok(templates)
}

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("template window contains no events")]
    EmptyWindow,
    #[error("need at least {required} maps, got {got}")]
    LengthMismatch { required: usize, got: usize },
    #[error("map dims differ: {a:?} vs {b:?}")]
    ShapeMismatch { a: (usize, usize), b: (usize, usize) },
    #[error(
        "LoRA shapes inconsistent: A is {rank}x{d_in}, B is {up:?}, operand length {input}"
    )]
    LoraShape {
        d_in: usize,
        rank: usize,
        up: (usize, usize),
        input: usize,
    },
    #[error("video has {frames} frames; test-time tuning needs more than {required}")]
    VideoTooShort { frames: usize, required: usize },
    #[error(transparent)]
    Event(#[from] EventError),
    #[error(transparent)]
    Toy(#[from] ToyError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Fourier(#[from] FourierError),
}

/// Mean pairwise MSE between probability grids, with the gradient w.r.t.
/// each grid. Zero iff all grids are equal; invariant under permutation.
pub fn consistency_loss(
    prob_maps: &[Array2<f64>],
) -> Result<LossReport<Vec<Array2<f64>>>, InferenceError> {
    if prob_maps.len() < 2 {
        return Err(InferenceError::LengthMismatch {
            required: 2,
            got: prob_maps.len(),
        });
    }
    let dims = prob_maps[0].dim();
    for m in prob_maps {
        if m.dim() != dims {
            return Err(InferenceError::ShapeMismatch { a: dims, b: m.dim() });
        }
    }
    let n = prob_maps.len();
    let pairs = (n * (n - 1) / 2) as f64;
    let cells = (dims.0 * dims.1) as f64;
    let mut value = 0.0;
    let mut grads = vec![Array2::<f64>::zeros(dims); n];
    for i in 0..n {
        for j in (i + 1)..n {
            let diff = &prob_maps[i] - &prob_maps[j];
            value += diff.mapv(|d| d * d).sum() / cells;
            let g = diff.mapv(|d| 2.0 * d / (cells * pairs));
            grads[i] += &g;
            grads[j] -= &g;
        }
    }
    Ok(LossReport {
        value: value / pairs,
        grad: grads,
    })
}

/// Consistency constraint on raw score maps: each map is softmax-normalized
/// first and the gradient is reported w.r.t. the logits.
pub fn consistency_loss_from_logits(
    maps: &[ScoreMap],
) -> Result<LossReport<Vec<Array2<f64>>>, InferenceError> {
    let probs: Vec<Array2<f64>> = maps.iter().map(softmax2d).collect();
    let report = consistency_loss(&probs)?;
    let grad = probs
        .iter()
        .zip(&report.grad)
        .map(|(p, g)| softmax2d_backward(p, g))
        .collect();
    Ok(LossReport {
        value: report.value,
        grad,
    })
}

/// Test-time tuning hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TttConfig {
    /// Initial frames whose base-tracker outputs become pseudo-labels.
    pub n_frames: usize,
    pub epochs: usize,
    pub lr: f64,
    pub weight_decay: f64,
    /// Number of sparsity levels for template augmentation.
    pub n_templates: usize,
}

impl Default for TttConfig {
    fn default() -> Self {
        TttConfig {
            n_frames: 5,
            epochs: 5,
            lr: 0.01,
            weight_decay: 0.1,
            n_templates: 4,
        }
    }
}

/// A desk-scale video for the toy tracker: the initial template window
/// plus per-frame search features.
#[derive(Debug, Clone)]
pub struct TttVideo {
    template_window: EventStream,
    frames: Vec<Array1<f64>>,
}

impl TttVideo {
    /// Stacks a recording into `video_frames` frames; the first frame's
    /// events form the template window and every frame is block-pooled
    /// into an `in_features` vector.
    pub fn from_stream(
        stream: &EventStream,
        video_frames: usize,
        in_features: usize,
    ) -> Result<Self, InferenceError> {
        let frames = crate::event::stack_to_frames(stream, video_frames)?;
        let template_window = EventStream::new(
            stream.geometry(),
            frames[0].events().to_vec(),
        )?;
        if template_window.is_empty() {
            return Err(InferenceError::EmptyWindow);
        }
        let features = frames
            .iter()
            .map(|f| featurize_frame(f, in_features))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(TttVideo {
            template_window,
            frames: features,
        })
    }

    pub fn template_window(&self) -> &EventStream {
        &self.template_window
    }

    pub fn frames(&self) -> &[Array1<f64>] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Losses observed at the start of one tuning epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TttEpochLog {
    pub epoch: usize,
    pub tracking_loss: f64,
    pub consistency_loss: f64,
    pub total: f64,
}

/// Result of a tuning run: the tuned adapter, per-epoch losses (epoch 0 is
/// the pre-tuning baseline, the final row the post-tuning state), and the
/// pseudo-label cells recorded from the base tracker.
#[derive(Debug, Clone)]
pub struct TttOutcome {
    pub adapter: LoraAdapter,
    pub log: Vec<TttEpochLog>,
    pub pseudo_labels: Vec<(usize, usize)>,
}

fn fuse(search: &Array1<f64>, template: &Array1<f64>) -> Array1<f64> {
    search * template
}

fn adapted_forward(
    params: &ToyParams,
    adapter: &LoraAdapter,
    x: &Array1<f64>,
) -> Result<Array2<f64>, InferenceError> {
    let base = toy_forward(params, x)?;
    let corrected = lora_apply(
        &Array1::from_iter(base.values().iter().copied()),
        adapter,
        x,
    )?;
    Ok(Array2::from_shape_vec(params.map_dims, corrected.to_vec()).unwrap())
}

fn argmax_cell(grid: &Array2<f64>) -> (usize, usize) {
    let mut best = (0, 0);
    let mut best_val = f64::NEG_INFINITY;
    for (idx, &v) in grid.indexed_iter() {
        if v > best_val {
            best_val = v;
            best = idx;
        }
    }
    best
}

/// Predicted box for every frame: the argmax cell of the (optionally
/// adapted) response map, mapped back to sensor coordinates at one map
/// cell per box.
pub fn predict_boxes(
    video: &TttVideo,
    params: &ToyParams,
    adapter: Option<&LoraAdapter>,
) -> Result<Vec<BoundingBox>, InferenceError> {
    let geom = video.template_window().geometry();
    let template = featurize_frame(
        &EventFrame::spanning(video.template_window()),
        params.in_features(),
    )?;
    let (rows, cols) = params.map_dims;
    let cell_w = geom.width() as f64 / cols as f64;
    let cell_h = geom.height() as f64 / rows as f64;
    let mut boxes = Vec::with_capacity(video.len());
    for feat in video.frames() {
        let x = fuse(feat, &template);
        let map = match adapter {
            Some(ad) => adapted_forward(params, ad, &x)?,
            None => toy_forward(params, &x)?.into_inner(),
        };
        let (r, c) = argmax_cell(&map);
        boxes.push(
            BoundingBox::new(c as f64 * cell_w, r as f64 * cell_h, cell_w, cell_h)
                .expect("cell extents are positive"),
        );
    }
    Ok(boxes)
}

/// Video-level test-time tuning.
///
/// The base tracker first runs on the initial `cfg.n_frames` frames and its
/// argmax cells become pseudo-labels. Each epoch then evaluates, per frame,
/// the GWF tracking loss of the canonical-template response against a
/// Gaussian target at the pseudo-label, plus the consistency constraint
/// across the `cfg.n_templates` augmented-template responses, and applies
/// one gradient-descent step with decoupled weight decay to the adapter
/// factors only. Base parameters are never touched.
pub fn ttt_schedule(
    video: &TttVideo,
    params: &ToyParams,
    mut adapter: LoraAdapter,
    cfg: &TttConfig,
    seed: u64,
) -> Result<TttOutcome, InferenceError> {
    if video.len() <= cfg.n_frames {
        return Err(InferenceError::VideoTooShort {
            frames: video.len(),
            required: cfg.n_frames,
        });
    }
    let templates = template_augment(video.template_window(), cfg.n_templates, seed)?;
    let template_feats: Vec<Array1<f64>> = templates
        .iter()
        .map(|t| featurize_frame(&EventFrame::spanning(t), params.in_features()))
        .collect::<Result<_, _>>()?;

    let (rows, cols) = params.map_dims;
    let sigma = adaptive_sigma(cols as f64 / 4.0, rows as f64 / 4.0, 0.7);

    // Pseudo-labels from the frozen base tracker on the initial frames.
    let mut pseudo_labels = Vec::with_capacity(cfg.n_frames);
    let mut targets = Vec::with_capacity(cfg.n_frames);
    for feat in &video.frames()[..cfg.n_frames] {
        let x = fuse(feat, &template_feats[0]);
        let map = toy_forward(params, &x)?;
        let probs = softmax2d(&map);
        let (r, c) = argmax_cell(&probs);
        pseudo_labels.push((r, c));
        targets.push(gaussian_heatmap((c as f64, r as f64), sigma, (rows, cols))?);
    }

    let n_frames = cfg.n_frames as f64;
    let mut log = Vec::with_capacity(cfg.epochs + 1);

    for epoch in 0..=cfg.epochs {
        let mut tracking_total = 0.0;
        let mut consistency_total = 0.0;
        let mut grad_down = Array2::<f64>::zeros(adapter.down.dim());
        let mut grad_up = Array2::<f64>::zeros(adapter.up.dim());

        for (feat, target) in video.frames()[..cfg.n_frames].iter().zip(&targets) {
            let inputs: Vec<Array1<f64>> =
                template_feats.iter().map(|t| fuse(feat, t)).collect();
            let maps: Vec<Array2<f64>> = inputs
                .iter()
                .map(|x| adapted_forward(params, &adapter, x))
                .collect::<Result<_, _>>()?;

            // Tracking loss on the canonical template's response.
            let probs = softmax2d(&ScoreMap::new(maps[0].clone())?);
            let pred = Heatmap::new(probs.clone())?;
            let (track_value, grad_pred) =
                gwf_core(pred.values(), target.values(), GWF_ALPHA, GWF_BETA);
            tracking_total += track_value / n_frames;
            let grad_logits0 = softmax2d_backward(&probs, &grad_pred.mapv(|g| g / n_frames));

            // Consistency constraint across all template responses.
            let score_maps: Vec<ScoreMap> = maps
                .iter()
                .map(|m| ScoreMap::new(m.clone()))
                .collect::<Result<_, _>>()?;
            let consistency = consistency_loss_from_logits(&score_maps)?;
            consistency_total += consistency.value / n_frames;

            for (v, x) in inputs.iter().enumerate() {
                let mut upstream = consistency.grad[v].mapv(|g| g / n_frames);
                if v == 0 {
                    upstream += &grad_logits0;
                }
                let flat = Array1::from_iter(upstream.iter().copied());
                let (g_down, g_up) = lora_grads(&adapter, x, &flat)?;
                grad_down += &g_down;
                grad_up += &g_up;
            }
        }

        log.push(TttEpochLog {
            epoch,
            tracking_loss: tracking_total,
            consistency_loss: consistency_total,
            total: tracking_total + consistency_total,
        });

        if epoch < cfg.epochs {
            let shrink = 1.0 - cfg.lr * cfg.weight_decay;
            adapter.down = adapter.down.mapv(|w| w * shrink) - grad_down.mapv(|g| g * cfg.lr);
            adapter.up = adapter.up.mapv(|w| w * shrink) - grad_up.mapv(|g| g * cfg.lr);
        }
    }

    Ok(TttOutcome {
        adapter,
        log,
        pseudo_labels,
    })
}
