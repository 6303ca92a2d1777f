//! Toolkit for event-camera object tracking experiments: event stream
//! representations (stacked frames, voxel grids), knowledge-distillation
//! loss kernels with verified analytic gradients, temporal Fourier
//! signatures, inference-time strategies (LoRA adapters, test-time tuning,
//! adaptive search regions), and a one-pass tracking evaluation harness.
//!
//! The crate is organized around pure, deterministic kernels: identical
//! inputs produce bit-identical outputs regardless of thread count, and
//! every loss returns both its value and the gradient with respect to the
//! student-side inputs. See the `book/` guide at the repository root for
//! worked examples of each subsystem.

pub mod dataset;
pub mod event;
pub mod fourier;
pub mod geometry;
pub mod gradcheck;
pub mod inference;
pub mod losses;
pub mod metrics;
pub mod toy;

pub use event::{EventFrame, EventPoint, EventStream, Polarity, SensorGeometry, VoxelGrid};
pub use geometry::{BoundingBox, CropSpec};
pub use losses::{Heatmap, LossReport, LossWeights};

// Guide chapters double as doc-tests so the book's snippets cannot drift
// from the library (`cargo test --doc` runs every fenced Rust block).
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            #[allow(dead_code)]
            struct $name;
        };
    }

    chapter!(Introduction, "../../../book/src/introduction.md");
    chapter!(EventRepresentations, "../../../book/src/event-representations.md");
    chapter!(BoxesAndCrops, "../../../book/src/boxes-and-crops.md");
    chapter!(DistillationLosses, "../../../book/src/distillation-losses.md");
    chapter!(TemporalFourier, "../../../book/src/temporal-fourier.md");
    chapter!(TestTimeTuning, "../../../book/src/test-time-tuning.md");
    chapter!(Evaluation, "../../../book/src/evaluation.md");
    chapter!(DatasetLayout, "../../../book/src/dataset-layout.md");
}
