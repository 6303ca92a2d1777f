//! A minimal differentiable tracker stand-in.
//!
//! One linear layer maps a flattened search-feature vector to score-map
//! logits: `logits = W x + b`, reshaped to `(rows, cols)`. Its gradients
//! are hand-derived (`dW = upstream (x)^T`, `db = upstream`), which is all
//! the distillation and test-time-tuning pipelines need to run end to end
//! at desk scale.

use std::io::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event::EventFrame;
use crate::fourier::ScoreMap;

/// Default feature-vector length.
pub const DEFAULT_IN_FEATURES: usize = 64;
/// Default score-map dimensions.
pub const DEFAULT_MAP_DIMS: (usize, usize) = (16, 16);

/// Weights of the linear score-map producer.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyParams {
    /// `(rows * cols, in_features)`.
    pub weight: Array2<f64>,
    /// `(rows * cols)`.
    pub bias: Array1<f64>,
    pub map_dims: (usize, usize),
}

#[derive(Debug, Error)]
pub enum ToyError {
    #[error("patch has {got} features but the model expects {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("upstream gradient dims {got:?} do not match map dims {expected:?}")]
    UpstreamMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("feature count {0} is not a perfect square")]
    NotSquare(usize),
    #[error("snapshot descriptor does not match payload: {0}")]
    BadSnapshot(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Serialize, Deserialize)]
struct SnapshotShape {
    out_cells: usize,
    in_features: usize,
    map_rows: usize,
    map_cols: usize,
}

impl ToyParams {
    pub fn new(weight: Array2<f64>, bias: Array1<f64>, map_dims: (usize, usize)) -> Self {
        assert_eq!(weight.nrows(), map_dims.0 * map_dims.1);
        assert_eq!(bias.len(), weight.nrows());
        ToyParams {
            weight,
            bias,
            map_dims,
        }
    }

    /// Deterministic random initialization, weights uniform in
    /// `[-1/sqrt(in), 1/sqrt(in)]`, zero bias.
    pub fn random(in_features: usize, map_dims: (usize, usize), seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let out = map_dims.0 * map_dims.1;
        let scale = 1.0 / (in_features as f64).sqrt();
        let weight =
            Array2::from_shape_fn((out, in_features), |_| rng.random_range(-scale..scale));
        ToyParams::new(weight, Array1::zeros(out), map_dims)
    }

    pub fn in_features(&self) -> usize {
        self.weight.ncols()
    }

    pub fn out_cells(&self) -> usize {
        self.weight.nrows()
    }

    /// Flat little-endian f64 payload: weight row-major, then bias.
    pub fn snapshot_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity((self.weight.len() + self.bias.len()) * 8);
        for v in self.weight.iter().chain(self.bias.iter()) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    /// Writes `params.bin` (flat f64 LE) and `params.json` (shape
    /// descriptor) into `dir`.
    pub fn save(&self, dir: &Path) -> Result<(), ToyError> {
        let shape = SnapshotShape {
            out_cells: self.out_cells(),
            in_features: self.in_features(),
            map_rows: self.map_dims.0,
            map_cols: self.map_dims.1,
        };
        std::fs::create_dir_all(dir)?;
        let mut bin = std::fs::File::create(dir.join("params.bin"))?;
        bin.write_all(&self.snapshot_bytes())?;
        std::fs::write(dir.join("params.json"), serde_json::to_string_pretty(&shape)?)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, ToyError> {
        let shape: SnapshotShape =
            serde_json::from_str(&std::fs::read_to_string(dir.join("params.json"))?)?;
        if shape.out_cells != shape.map_rows * shape.map_cols {
            return Err(ToyError::BadSnapshot(format!(
                "out_cells {} != {}x{}",
                shape.out_cells, shape.map_rows, shape.map_cols
            )));
        }
        let bytes = std::fs::read(dir.join("params.bin"))?;
        let expected = (shape.out_cells * shape.in_features + shape.out_cells) * 8;
        if bytes.len() != expected {
            return Err(ToyError::BadSnapshot(format!(
                "payload is {} bytes, descriptor implies {expected}",
                bytes.len()
            )));
        }
        let floats: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let split = shape.out_cells * shape.in_features;
        let weight =
            Array2::from_shape_vec((shape.out_cells, shape.in_features), floats[..split].to_vec())
                .unwrap();
        let bias = Array1::from_vec(floats[split..].to_vec());
        Ok(ToyParams::new(weight, bias, (shape.map_rows, shape.map_cols)))
    }
}

/// `W x + b` reshaped to the score-map dimensions.
pub fn toy_forward(params: &ToyParams, patch: &Array1<f64>) -> Result<ScoreMap, ToyError> {
    if patch.len() != params.in_features() {
        return Err(ToyError::ShapeMismatch {
            expected: params.in_features(),
            got: patch.len(),
        });
    }
    let logits = params.weight.dot(patch) + &params.bias;
    let grid = Array2::from_shape_vec(params.map_dims, logits.to_vec()).unwrap();
    Ok(ScoreMap::new(grid).expect("finite params and patch yield finite logits"))
}

/// Parameter gradients for an upstream `dL/dlogits` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyGrads {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

pub fn toy_grad(
    params: &ToyParams,
    patch: &Array1<f64>,
    upstream: &Array2<f64>,
) -> Result<ToyGrads, ToyError> {
    if patch.len() != params.in_features() {
        return Err(ToyError::ShapeMismatch {
            expected: params.in_features(),
            got: patch.len(),
        });
    }
    if upstream.dim() != params.map_dims {
        return Err(ToyError::UpstreamMismatch {
            expected: params.map_dims,
            got: upstream.dim(),
        });
    }
    let flat = Array1::from_iter(upstream.iter().copied());
    let weight = flat
        .view()
        .insert_axis(ndarray::Axis(1))
        .dot(&patch.view().insert_axis(ndarray::Axis(0)));
    Ok(ToyGrads { weight, bias: flat })
}

/// Pools a frame's event counts into a `g x g` block grid (`features`
/// must be a perfect square) and scales so the densest block is 1.
pub fn featurize_frame(frame: &EventFrame, features: usize) -> Result<Array1<f64>, ToyError> {
    let g = (features as f64).sqrt().round() as usize;
    if g * g != features {
        return Err(ToyError::NotSquare(features));
    }
    let geom = frame.geometry();
    let (w, h) = (geom.width() as usize, geom.height() as usize);
    let mut blocks = vec![0.0f64; features];
    for ev in frame.events() {
        let bx = (ev.x as usize * g) / w;
        let by = (ev.y as usize * g) / h;
        blocks[by * g + bx] += 1.0;
    }
    let max = blocks.iter().copied().fold(0.0f64, f64::max);
    if max > 0.0 {
        for b in &mut blocks {
            *b /= max;
        }
    }
    Ok(Array1::from_vec(blocks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::{stack_to_frames, EventPoint, EventStream, Polarity, SensorGeometry};
    use crate::gradcheck::{central_diff_grad, max_relative_error};
    use approx::assert_abs_diff_eq;

    #[test]
    fn forward_zero_params_zero_map() {
        let params = ToyParams::new(Array2::zeros((16, 4)), Array1::zeros(16), (4, 4));
        let map = toy_forward(&params, &Array1::from_vec(vec![1.0, 2.0, 3.0, 4.0])).unwrap();
        assert!(map.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn forward_identity_slice_one_hot() {
        // W = identity: patch e_k produces a one-hot logit at cell k.
        let params = ToyParams::new(Array2::eye(16), Array1::zeros(16), (4, 4));
        let mut patch = Array1::zeros(16);
        patch[5] = 1.0;
        let map = toy_forward(&params, &patch).unwrap();
        for (i, &v) in map.values().iter().enumerate() {
            assert_eq!(v, if i == 5 { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn forward_matches_matvec_oracle() {
        let params = ToyParams::random(8, (2, 3), 42);
        let patch = Array1::from_vec((0..8).map(|i| 0.1 * i as f64 - 0.3).collect());
        let map = toy_forward(&params, &patch).unwrap();
        for r in 0..2 {
            for c in 0..3 {
                let row = r * 3 + c;
                let expected: f64 = (0..8)
                    .map(|k| params.weight[[row, k]] * patch[k])
                    .sum::<f64>()
                    + params.bias[row];
                assert_abs_diff_eq!(map.values()[[r, c]], expected, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn grad_outer_product_structure() {
        let params = ToyParams::new(Array2::zeros((4, 3)), Array1::zeros(4), (2, 2));
        let mut upstream = Array2::zeros((2, 2));
        upstream[[1, 0]] = 1.0; // cell j = 2
        let mut patch = Array1::zeros(3);
        patch[1] = 1.0; // e_k with k = 1
        let grads = toy_grad(&params, &patch, &upstream).unwrap();
        assert_eq!(grads.weight[[2, 1]], 1.0);
        assert_eq!(grads.weight.iter().filter(|&&v| v != 0.0).count(), 1);
        assert_eq!(grads.bias[2], 1.0);

        let zero = toy_grad(&params, &patch, &Array2::zeros((2, 2))).unwrap();
        assert!(zero.weight.iter().all(|&v| v == 0.0));
        assert!(zero.bias.iter().all(|&v| v == 0.0));
    }

    /// Finite differences of a quadratic loss through the forward pass
    /// validate the hand-derived parameter gradients.
    #[test]
    fn grad_matches_finite_differences_through_loss() {
        let params = ToyParams::random(6, (2, 2), 7);
        let patch = Array1::from_vec(vec![0.4, -0.2, 0.9, 0.1, -0.5, 0.3]);
        let target = Array2::from_shape_fn((2, 2), |(r, c)| 0.2 * r as f64 - 0.1 * c as f64);

        // L = sum((logits - target)^2); dL/dlogits = 2 (logits - target).
        let map = toy_forward(&params, &patch).unwrap();
        let upstream = (map.values() - &target).mapv(|d| 2.0 * d);
        let grads = toy_grad(&params, &patch, &upstream).unwrap();

        let flat: Vec<f64> = params
            .weight
            .iter()
            .chain(params.bias.iter())
            .copied()
            .collect();
        let loss_at = |v: &[f64]| {
            let w = Array2::from_shape_vec((4, 6), v[..24].to_vec()).unwrap();
            let b = Array1::from_vec(v[24..].to_vec());
            let p = ToyParams::new(w, b, (2, 2));
            let m = toy_forward(&p, &patch).unwrap();
            (m.values() - &target).mapv(|d| d * d).sum()
        };
        let numeric = central_diff_grad(loss_at, &flat, 1e-5);
        let analytic: Vec<f64> = grads.weight.iter().chain(grads.bias.iter()).copied().collect();
        assert!(max_relative_error(&analytic, &numeric) < 1e-6);
    }

    #[test]
    fn snapshot_round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let params = ToyParams::random(64, (16, 16), 3);
        params.save(dir.path()).unwrap();
        let back = ToyParams::load(dir.path()).unwrap();
        assert_eq!(back.snapshot_bytes(), params.snapshot_bytes());
        assert_eq!(back.map_dims, params.map_dims);
    }

    #[test]
    fn featurize_pools_blocks() {
        let geom = SensorGeometry::new(16, 16).unwrap();
        let events = vec![
            EventPoint { t: 0, x: 0, y: 0, polarity: Polarity::On },
            EventPoint { t: 1, x: 1, y: 1, polarity: Polarity::Off },
            EventPoint { t: 2, x: 15, y: 15, polarity: Polarity::On },
        ];
        let stream = EventStream::new(geom, events).unwrap();
        let frames = stack_to_frames(&stream, 1).unwrap();
        let feats = featurize_frame(&frames[0], 4).unwrap();
        // Two events in the top-left 8x8 block, one in the bottom-right.
        assert_abs_diff_eq!(feats[0], 1.0);
        assert_abs_diff_eq!(feats[3], 0.5);
        assert_abs_diff_eq!(feats[1], 0.0);
        assert!(matches!(featurize_frame(&frames[0], 5), Err(ToyError::NotSquare(5))));
    }
}
