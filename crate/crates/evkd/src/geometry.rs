//! Box arithmetic and template/search-region geometry.
//!
//! Crops follow the Siamese-tracker convention: a square window of side
//! `context_factor * expansion * sqrt(w * h)` centered on the target box,
//! zero-padded outside the image and resampled to a fixed output size with
//! bilinear interpolation over half-pixel sample centers. That sampling
//! convention makes an integer-aligned crop of matching side an exact
//! pixel copy, and makes chained expansions compose multiplicatively.

use ndarray::Array2;
use thiserror::Error;

/// Axis-aligned box: real-valued top-left corner plus positive extent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self, GeometryError> {
        if !(w > 0.0 && h > 0.0 && x.is_finite() && y.is_finite() && w.is_finite() && h.is_finite())
        {
            return Err(GeometryError::DegenerateBox { w, h });
        }
        Ok(BoundingBox { x, y, w, h })
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }
}

/// Parameters of a square context crop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CropSpec {
    /// Window side relative to sqrt of the box area.
    pub context_factor: f64,
    /// Output resolution in pixels.
    pub out_size: usize,
    /// Extra multiplier applied on top of the context factor, used by the
    /// adaptive search region strategy (>= 1).
    pub expansion: f64,
}

impl CropSpec {
    pub fn new(context_factor: f64, out_size: usize, expansion: f64) -> Result<Self, GeometryError> {
        if !(context_factor > 0.0) || out_size == 0 || !(expansion >= 1.0) {
            return Err(GeometryError::BadCropSpec {
                context_factor,
                out_size,
                expansion,
            });
        }
        Ok(CropSpec {
            context_factor,
            out_size,
            expansion,
        })
    }

    /// 128x128 template crop at context factor 2.
    pub fn template() -> Self {
        CropSpec {
            context_factor: 2.0,
            out_size: 128,
            expansion: 1.0,
        }
    }

    /// 256x256 search crop at context factor 4.
    pub fn search() -> Self {
        CropSpec {
            context_factor: 4.0,
            out_size: 256,
            expansion: 1.0,
        }
    }

    pub fn with_expansion(self, expansion: f64) -> Self {
        CropSpec { expansion, ..self }
    }

    /// Side of the crop window in source pixels for a given box.
    pub fn side_for(&self, bbox: &BoundingBox) -> f64 {
        self.context_factor * self.expansion * bbox.area().sqrt()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("degenerate box with extent {w}x{h}")]
    DegenerateBox { w: f64, h: f64 },
    #[error("invalid crop spec (context {context_factor}, out {out_size}, expansion {expansion})")]
    BadCropSpec {
        context_factor: f64,
        out_size: usize,
        expansion: f64,
    },
    #[error("cannot crop an empty image")]
    EmptyImage,
    #[error("patch size {patch} does not divide side {side}")]
    NonDivisible { side: usize, patch: usize },
}

/// Intersection over union of two boxes, in `[0, 1]`.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let ix = (a.right().min(b.right()) - a.x.max(b.x)).max(0.0);
    let iy = (a.bottom().min(b.bottom()) - a.y.max(b.y)).max(0.0);
    let inter = ix * iy;
    let union = a.area() + b.area() - inter;
    if union > 0.0 {
        inter / union
    } else {
        0.0
    }
}

/// Euclidean distance between box centers, in pixels.
pub fn center_error(pred: &BoundingBox, gt: &BoundingBox) -> f64 {
    let (px, py) = pred.center();
    let (gx, gy) = gt.center();
    ((px - gx).powi(2) + (py - gy).powi(2)).sqrt()
}

/// Center distance with each axis divided by the ground-truth extent
/// before the norm, making the measure invariant to joint rescaling.
pub fn normalized_center_error(pred: &BoundingBox, gt: &BoundingBox) -> f64 {
    let (px, py) = pred.center();
    let (gx, gy) = gt.center();
    (((px - gx) / gt.w).powi(2) + ((py - gy) / gt.h).powi(2)).sqrt()
}

fn sample_bilinear(image: &Array2<f64>, sx: f64, sy: f64) -> f64 {
    let (h, w) = image.dim();
    let x0 = sx.floor();
    let y0 = sy.floor();
    let fx = sx - x0;
    let fy = sy - y0;
    let at = |yy: f64, xx: f64| -> f64 {
        if yy < 0.0 || xx < 0.0 {
            return 0.0;
        }
        let (yy, xx) = (yy as usize, xx as usize);
        if yy >= h || xx >= w {
            0.0
        } else {
            image[[yy, xx]]
        }
    };
    at(y0, x0) * (1.0 - fy) * (1.0 - fx)
        + at(y0, x0 + 1.0) * (1.0 - fy) * fx
        + at(y0 + 1.0, x0) * fy * (1.0 - fx)
        + at(y0 + 1.0, x0 + 1.0) * fy * fx
}

/// Crops the square context window around `bbox` and resamples it to
/// `spec.out_size` squared. Samples outside the image read as zero.
///
/// Coordinates are area-based: pixel `(i, j)` covers `[j, j+1) x [i, i+1)`,
/// so a box `(x, y, w, h)` with integer fields covers whole pixels. Output
/// pixel centers are placed at half-pixel offsets inside the window, which
/// is what makes integer-aligned unit-scale crops exact copies.
pub fn crop_region(
    image: &Array2<f64>,
    bbox: &BoundingBox,
    spec: &CropSpec,
) -> Result<Array2<f64>, GeometryError> {
    if image.is_empty() {
        return Err(GeometryError::EmptyImage);
    }
    if !(bbox.w > 0.0 && bbox.h > 0.0) {
        return Err(GeometryError::DegenerateBox {
            w: bbox.w,
            h: bbox.h,
        });
    }
    let side = spec.side_for(bbox);
    let (cx, cy) = bbox.center();
    let out = spec.out_size;
    let step = side / out as f64;
    let mut patch = Array2::<f64>::zeros((out, out));
    for i in 0..out {
        let sy = cy - side / 2.0 + (i as f64 + 0.5) * step;
        for j in 0..out {
            let sx = cx - side / 2.0 + (j as f64 + 0.5) * step;
            // Shift from area coordinates to pixel-center space.
            patch[[i, j]] = sample_bilinear(image, sx - 0.5, sy - 0.5);
        }
    }
    Ok(patch)
}

/// Token grid produced by splitting a square input into `patch`-sized tiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TokenLayout {
    pub per_axis: usize,
    pub total: usize,
}

pub fn patch_token_layout(side: usize, patch: usize) -> Result<TokenLayout, GeometryError> {
    if patch == 0 || side % patch != 0 {
        return Err(GeometryError::NonDivisible { side, patch });
    }
    let per_axis = side / patch;
    Ok(TokenLayout {
        per_axis,
        total: per_axis * per_axis,
    })
}
