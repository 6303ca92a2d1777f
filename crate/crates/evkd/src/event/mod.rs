//! Event streams and their dense representations.
//!
//! An event camera emits an asynchronous sequence of points `(t, x, y, p)`.
//! This module parses the two canonical serializations (see [`format`]),
//! stacks a stream into a fixed number of time-windowed frames, and bins it
//! into spatio-temporal voxel grids. All operations are pure and conserve
//! the total event count exactly.

use ndarray::{Array2, Array3};
use thiserror::Error;

pub mod format;

pub use format::{
    detect_format, parse_bin, parse_csv, parse_event_stream, write_bin, write_csv,
    write_event_stream, EventFormat,
};

/// Sign of the brightness change that produced an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    /// Brightness decrease; serialized as `0`.
    Off,
    /// Brightness increase; serialized as `1`.
    On,
}

impl Polarity {
    pub fn from_flag(flag: u8) -> Option<Self> {
        match flag {
            0 => Some(Polarity::Off),
            1 => Some(Polarity::On),
            _ => None,
        }
    }

    pub fn flag(self) -> u8 {
        match self {
            Polarity::Off => 0,
            Polarity::On => 1,
        }
    }
}

/// A single event point. Timestamps are microseconds; coordinates are
/// pixel column `x` and pixel row `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EventPoint {
    pub t: u64,
    pub x: u16,
    pub y: u16,
    pub polarity: Polarity,
}

/// Pixel dimensions of the emitting sensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SensorGeometry {
    width: u16,
    height: u16,
}

impl SensorGeometry {
    /// The 1280x720 geometry of the EVK4-HD class of sensors.
    pub const EVENTVOT: SensorGeometry = SensorGeometry {
        width: 1280,
        height: 720,
    };

    pub fn new(width: u16, height: u16) -> Result<Self, EventError> {
        if width == 0 || height == 0 {
            return Err(EventError::InvalidGeometry { width, height });
        }
        Ok(SensorGeometry { width, height })
    }

    pub fn width(&self) -> u16 {
        self.width
    }

    pub fn height(&self) -> u16 {
        self.height
    }

    pub fn contains(&self, x: u16, y: u16) -> bool {
        x < self.width && y < self.height
    }
}

/// An ordered event sequence from a sensor of known geometry.
///
/// Events are sorted non-decreasing by timestamp (unsorted input is
/// stably sorted on construction, preserving the relative order of
/// equal-timestamp events) and every coordinate lies inside the geometry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventStream {
    geometry: SensorGeometry,
    events: Vec<EventPoint>,
}

impl EventStream {
    pub fn new(geometry: SensorGeometry, mut events: Vec<EventPoint>) -> Result<Self, EventError> {
        for (index, ev) in events.iter().enumerate() {
            if !geometry.contains(ev.x, ev.y) {
                return Err(EventError::OutOfRange {
                    index,
                    x: ev.x,
                    y: ev.y,
                    width: geometry.width,
                    height: geometry.height,
                });
            }
        }
        if !events.is_sorted_by_key(|e| e.t) {
            events.sort_by_key(|e| e.t);
        }
        Ok(EventStream { geometry, events })
    }

    pub fn empty(geometry: SensorGeometry) -> Self {
        EventStream {
            geometry,
            events: Vec::new(),
        }
    }

    pub fn geometry(&self) -> SensorGeometry {
        self.geometry
    }

    pub fn events(&self) -> &[EventPoint] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Inclusive `(t_min, t_max)` of the stream, `None` when empty.
    pub fn time_span(&self) -> Option<(u64, u64)> {
        match (self.events.first(), self.events.last()) {
            (Some(first), Some(last)) => Some((first.t, last.t)),
            _ => None,
        }
    }

    /// The events with `t < t_end`, as an owned stream. Used to carve the
    /// initial template window off a recording.
    pub fn prefix_window(&self, t_end: u64) -> EventStream {
        let cut = self.events.partition_point(|e| e.t < t_end);
        EventStream {
            geometry: self.geometry,
            events: self.events[..cut].to_vec(),
        }
    }
}

/// Events accumulated in one half-open time window `[t_start, t_end)`.
///
/// The dense per-polarity count grids are materialized on demand; the
/// frame itself keeps the events so that arbitrarily fine geometries do
/// not force `num_frames` full-resolution grids into memory at once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventFrame {
    window: (u64, u64),
    geometry: SensorGeometry,
    events: Vec<EventPoint>,
}

impl EventFrame {
    /// A single frame covering the whole stream (an empty stream yields an
    /// empty zero-width window).
    pub fn spanning(stream: &EventStream) -> EventFrame {
        let window = stream
            .time_span()
            .map(|(lo, hi)| (lo, hi + 1))
            .unwrap_or((0, 0));
        EventFrame {
            window,
            geometry: stream.geometry(),
            events: stream.events().to_vec(),
        }
    }

    pub fn window(&self) -> (u64, u64) {
        self.window
    }

    pub fn geometry(&self) -> SensorGeometry {
        self.geometry
    }

    pub fn events(&self) -> &[EventPoint] {
        &self.events
    }

    pub fn total_events(&self) -> usize {
        self.events.len()
    }

    pub fn on_count(&self) -> usize {
        self.events
            .iter()
            .filter(|e| e.polarity == Polarity::On)
            .count()
    }

    pub fn off_count(&self) -> usize {
        self.total_events() - self.on_count()
    }

    /// Dense `(counts_on, counts_off)` grids of shape `(H, W)`.
    pub fn counts(&self) -> (Array2<u32>, Array2<u32>) {
        let (h, w) = (
            self.geometry.height as usize,
            self.geometry.width as usize,
        );
        let mut on = Array2::<u32>::zeros((h, w));
        let mut off = Array2::<u32>::zeros((h, w));
        for ev in &self.events {
            let cell = [ev.y as usize, ev.x as usize];
            match ev.polarity {
                Polarity::On => on[cell] += 1,
                Polarity::Off => off[cell] += 1,
            }
        }
        (on, off)
    }
}

/// Dense spatio-temporal event counts over cells of size `(a, b, c)`
/// pixels x pixels x microseconds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoxelGrid {
    cell_size: (u16, u16, u64),
    /// `(x_cells, y_cells, t_cells)`.
    dims: (usize, usize, usize),
    t_origin: u64,
    /// Layout `(t, y, x)`: time slices are contiguous.
    counts: Array3<u32>,
}

impl VoxelGrid {
    pub fn cell_size(&self) -> (u16, u16, u64) {
        self.cell_size
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    pub fn t_origin(&self) -> u64 {
        self.t_origin
    }

    pub fn counts(&self) -> &Array3<u32> {
        &self.counts
    }

    pub fn count_at(&self, x_cell: usize, y_cell: usize, t_cell: usize) -> u32 {
        self.counts[[t_cell, y_cell, x_cell]]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EventError {
    #[error("malformed record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("event {index} at ({x}, {y}) outside {width}x{height} sensor")]
    OutOfRange {
        index: usize,
        x: u16,
        y: u16,
        width: u16,
        height: u16,
    },
    #[error("invalid sensor geometry {width}x{height}")]
    InvalidGeometry { width: u16, height: u16 },
    #[error("bad header: {0}")]
    BadHeader(String),
    #[error("operation requires a non-empty stream")]
    EmptyStream,
    #[error("{axis} cell size {cell} does not divide extent {extent}")]
    NonDivisible {
        axis: &'static str,
        cell: u64,
        extent: u64,
    },
}

/// Splits a stream into `num_frames` equal time windows over
/// `[t_min, t_max + 1)`.
///
/// Every event lands in exactly one frame, so per-frame totals sum to the
/// stream length. Window boundaries follow proportional binning: the event
/// at `t` goes to frame `(t - t_min) * num_frames / span`, which keeps the
/// windows disjoint and covering even when the span does not divide evenly.
pub fn stack_to_frames(stream: &EventStream, num_frames: usize) -> Result<Vec<EventFrame>, EventError> {
    assert!(num_frames >= 1, "num_frames must be at least 1");
    let (t_min, t_max) = stream.time_span().ok_or(EventError::EmptyStream)?;
    let span = t_max - t_min + 1;
    let n = num_frames as u128;

    // Earliest timestamp mapping to frame index i: ceil(i * span / n).
    let window_start = |i: usize| -> u64 {
        let i = i as u128;
        let span = span as u128;
        t_min + (i * span).div_ceil(n) as u64
    };

    let mut frames: Vec<EventFrame> = (0..num_frames)
        .map(|i| {
            let end = if i + 1 == num_frames {
                t_max + 1
            } else {
                window_start(i + 1)
            };
            EventFrame {
                window: (window_start(i), end),
                geometry: stream.geometry(),
                events: Vec::new(),
            }
        })
        .collect();

    for ev in stream.events() {
        let delta = (ev.t - t_min) as u128;
        let idx = (delta * n / span as u128) as usize;
        frames[idx].events.push(*ev);
    }
    Ok(frames)
}

/// Bins a stream into voxel cells of `(a, b, c)` pixels x pixels x
/// microseconds, yielding `W/a x H/b x ceil(T/c)` cells.
///
/// `a` and `b` must divide the sensor width and height. The time span
/// `T = t_max - t_min + 1` is padded up to the next multiple of `c`, so the
/// final temporal slice may cover less than `c` microseconds of data.
pub fn build_voxel_grid(
    stream: &EventStream,
    a: u16,
    b: u16,
    c: u64,
) -> Result<VoxelGrid, EventError> {
    assert!(a >= 1 && b >= 1 && c >= 1, "cell sizes must be positive");
    let geom = stream.geometry();
    if geom.width % a != 0 {
        return Err(EventError::NonDivisible {
            axis: "x",
            cell: a as u64,
            extent: geom.width as u64,
        });
    }
    if geom.height % b != 0 {
        return Err(EventError::NonDivisible {
            axis: "y",
            cell: b as u64,
            extent: geom.height as u64,
        });
    }
    let (t_min, t_max) = stream.time_span().ok_or(EventError::EmptyStream)?;
    let span = t_max - t_min + 1;

    let nx = (geom.width / a) as usize;
    let ny = (geom.height / b) as usize;
    let nt = span.div_ceil(c) as usize;

    let mut counts = Array3::<u32>::zeros((nt, ny, nx));
    for ev in stream.events() {
        let cx = (ev.x / a) as usize;
        let cy = (ev.y / b) as usize;
        let ct = ((ev.t - t_min) / c) as usize;
        counts[[ct, cy, cx]] += 1;
    }
    Ok(VoxelGrid {
        cell_size: (a, b, c),
        dims: (nx, ny, nt),
        t_origin: t_min,
        counts,
    })
}

/// RGB used for pixels whose window counts are dominated by ON events.
pub const ON_COLOR: [u8; 3] = [220, 50, 47];
/// RGB used for pixels dominated by OFF events.
pub const OFF_COLOR: [u8; 3] = [38, 139, 210];
/// RGB for empty pixels and exact ON/OFF ties.
pub const BACKGROUND_COLOR: [u8; 3] = [0, 0, 0];

/// Renders a frame as an `(H, W, 3)` RGB image: each pixel takes the color
/// of its dominant polarity, with zero-count and tied pixels left as
/// background.
pub fn render_event_image(frame: &EventFrame) -> Array3<u8> {
    let (on, off) = frame.counts();
    let (h, w) = on.dim();
    let mut img = Array3::<u8>::zeros((h, w, 3));
    for y in 0..h {
        for x in 0..w {
            let color = match on[[y, x]].cmp(&off[[y, x]]) {
                std::cmp::Ordering::Greater => ON_COLOR,
                std::cmp::Ordering::Less => OFF_COLOR,
                std::cmp::Ordering::Equal => BACKGROUND_COLOR,
            };
            for ch in 0..3 {
                img[[y, x, ch]] = color[ch];
            }
        }
    }
    img
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom(w: u16, h: u16) -> SensorGeometry {
        SensorGeometry::new(w, h).unwrap()
    }

    fn ev(t: u64, x: u16, y: u16, on: bool) -> EventPoint {
        EventPoint {
            t,
            x,
            y,
            polarity: if on { Polarity::On } else { Polarity::Off },
        }
    }

    #[test]
    fn stream_rejects_out_of_range() {
        let err = EventStream::new(geom(4, 4), vec![ev(0, 4, 0, true)]).unwrap_err();
        assert!(matches!(err, EventError::OutOfRange { x: 4, .. }));
    }

    #[test]
    fn stream_sorts_stably() {
        let events = vec![ev(5, 1, 1, true), ev(3, 2, 2, false), ev(5, 0, 0, false)];
        let stream = EventStream::new(geom(4, 4), events).unwrap();
        let ts: Vec<u64> = stream.events().iter().map(|e| e.t).collect();
        assert_eq!(ts, vec![3, 5, 5]);
        // Stable: the two t=5 events keep their input order.
        assert_eq!(stream.events()[1].x, 1);
        assert_eq!(stream.events()[2].x, 0);
    }

    #[test]
    fn stack_equal_partition() {
        let events = (0..499).map(|t| ev(t, 0, 0, true)).collect();
        let stream = EventStream::new(geom(4, 4), events).unwrap();
        let frames = stack_to_frames(&stream, 499).unwrap();
        assert_eq!(frames.len(), 499);
        assert!(frames.iter().all(|f| f.total_events() == 1));
    }

    #[test]
    fn stack_degenerate_span() {
        let events = vec![ev(77, 0, 0, true), ev(77, 1, 1, false), ev(77, 2, 2, true)];
        let stream = EventStream::new(geom(4, 4), events).unwrap();
        let frames = stack_to_frames(&stream, 10).unwrap();
        assert_eq!(frames[0].total_events(), 3);
        assert!(frames[1..].iter().all(|f| f.total_events() == 0));
    }

    #[test]
    fn stack_empty_stream_errors() {
        let stream = EventStream::empty(geom(4, 4));
        assert_eq!(stack_to_frames(&stream, 5).unwrap_err(), EventError::EmptyStream);
    }

    #[test]
    fn stack_windows_disjoint_and_cover() {
        // Span 10 over 3 frames does not divide evenly.
        let events = (0..10).map(|t| ev(t, 0, 0, true)).collect();
        let stream = EventStream::new(geom(4, 4), events).unwrap();
        let frames = stack_to_frames(&stream, 3).unwrap();
        assert_eq!(frames[0].window().0, 0);
        assert_eq!(frames.last().unwrap().window().1, 10);
        for pair in frames.windows(2) {
            assert_eq!(pair[0].window().1, pair[1].window().0);
        }
        let total: usize = frames.iter().map(|f| f.total_events()).sum();
        assert_eq!(total, 10);
        // Every event sits inside its frame's window.
        for f in &frames {
            for e in f.events() {
                assert!(e.t >= f.window().0 && e.t < f.window().1);
            }
        }
    }

    #[test]
    fn voxel_dims_follow_formula() {
        let events = vec![ev(0, 0, 0, true), ev(9999, 1279, 719, false)];
        let stream = EventStream::new(SensorGeometry::EVENTVOT, events).unwrap();
        let grid = build_voxel_grid(&stream, 16, 16, 2000).unwrap();
        assert_eq!(grid.dims(), (80, 45, 5));
        assert_eq!(grid.total(), 2);
    }

    #[test]
    fn voxel_single_event_lands_at_origin_cell() {
        let stream = EventStream::new(geom(8, 8), vec![ev(123, 0, 0, true)]).unwrap();
        let grid = build_voxel_grid(&stream, 2, 2, 10).unwrap();
        assert_eq!(grid.count_at(0, 0, 0), 1);
        assert_eq!(grid.total(), 1);
    }

    #[test]
    fn voxel_rejects_non_divisible() {
        let stream =
            EventStream::new(SensorGeometry::EVENTVOT, vec![ev(0, 0, 0, true)]).unwrap();
        let err = build_voxel_grid(&stream, 17, 16, 100).unwrap_err();
        assert!(matches!(err, EventError::NonDivisible { axis: "x", .. }));
    }

    #[test]
    fn voxel_pads_partial_final_slice() {
        // Span of 11 us with c = 4 pads to 12: three temporal slices.
        let events = vec![ev(0, 0, 0, true), ev(10, 0, 0, true)];
        let stream = EventStream::new(geom(4, 4), events).unwrap();
        let grid = build_voxel_grid(&stream, 4, 4, 4).unwrap();
        assert_eq!(grid.dims(), (1, 1, 3));
        assert_eq!(grid.count_at(0, 0, 0), 1);
        assert_eq!(grid.count_at(0, 0, 2), 1);
    }

    #[test]
    fn render_marks_dominant_polarity() {
        let events = vec![ev(0, 3, 2, true)];
        let stream = EventStream::new(geom(8, 8), events).unwrap();
        let frames = stack_to_frames(&stream, 1).unwrap();
        let img = render_event_image(&frames[0]);
        assert_eq!([img[[2, 3, 0]], img[[2, 3, 1]], img[[2, 3, 2]]], ON_COLOR);
        assert_eq!(
            [img[[0, 0, 0]], img[[0, 0, 1]], img[[0, 0, 2]]],
            BACKGROUND_COLOR
        );
    }

    #[test]
    fn render_ties_are_background() {
        let events = vec![
            ev(0, 1, 1, true),
            ev(1, 1, 1, false),
            ev(2, 1, 1, true),
            ev(3, 1, 1, false),
        ];
        let stream = EventStream::new(geom(4, 4), events).unwrap();
        let frames = stack_to_frames(&stream, 1).unwrap();
        let img = render_event_image(&frames[0]);
        assert_eq!(
            [img[[1, 1, 0]], img[[1, 1, 1]], img[[1, 1, 2]]],
            BACKGROUND_COLOR
        );
    }

    #[test]
    fn prefix_window_cuts_before_timestamp() {
        let events = vec![ev(0, 0, 0, true), ev(5, 1, 1, true), ev(9, 2, 2, true)];
        let stream = EventStream::new(geom(4, 4), events).unwrap();
        assert_eq!(stream.prefix_window(6).len(), 2);
        assert_eq!(stream.prefix_window(0).len(), 0);
        assert_eq!(stream.prefix_window(100).len(), 3);
    }
}
