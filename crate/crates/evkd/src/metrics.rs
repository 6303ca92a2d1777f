//! One-pass tracking evaluation.
//!
//! Success is the fraction of frames whose predicted/ground-truth IoU
//! strictly exceeds a threshold, swept over 21 points in `[0, 1]`; SR is
//! the curve mean. Precision is the fraction of frames whose center error
//! is at or below a pixel threshold, reported at 20 px. Normalized
//! precision divides the center offset by the ground-truth extent and
//! integrates the curve over `[0, 0.5]` by trapezoid. Frames flagged
//! absent never enter a numerator or denominator, and per-video metrics
//! are averaged with equal weight in fixed video-id order.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{center_error, iou, normalized_center_error, BoundingBox};

/// The 14 challenge attributes a video can be tagged with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Attribute {
    /// Abrupt camera motion.
    Cm,
    /// Mild occlusion.
    Moc,
    /// Heavy occlusion.
    Hoc,
    /// Full occlusion.
    Foc,
    /// Deformable target.
    Def,
    /// Low illumination.
    Li,
    /// Target fully out of view.
    Ov,
    /// Scale variation.
    Sv,
    /// Background clutter.
    Bc,
    /// Fast motion.
    Fm,
    /// No motion.
    Nmo,
    /// Background object motion.
    Bom,
    /// Similar interfering object.
    Sio,
    /// Small target.
    St,
}

impl Attribute {
    pub const ALL: [Attribute; 14] = [
        Attribute::Cm,
        Attribute::Moc,
        Attribute::Hoc,
        Attribute::Foc,
        Attribute::Def,
        Attribute::Li,
        Attribute::Ov,
        Attribute::Sv,
        Attribute::Bc,
        Attribute::Fm,
        Attribute::Nmo,
        Attribute::Bom,
        Attribute::Sio,
        Attribute::St,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            Attribute::Cm => "CM",
            Attribute::Moc => "MOC",
            Attribute::Hoc => "HOC",
            Attribute::Foc => "FOC",
            Attribute::Def => "DEF",
            Attribute::Li => "LI",
            Attribute::Ov => "OV",
            Attribute::Sv => "SV",
            Attribute::Bc => "BC",
            Attribute::Fm => "FM",
            Attribute::Nmo => "NMO",
            Attribute::Bom => "BOM",
            Attribute::Sio => "SIO",
            Attribute::St => "ST",
        }
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Attribute {
    type Err = MetricsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Attribute::ALL
            .iter()
            .find(|a| a.tag() == s)
            .copied()
            .ok_or_else(|| MetricsError::UnknownAttribute(s.to_string()))
    }
}

/// One video's tracking outcome: per-frame predictions, ground truth, and
/// absence flags, plus the video's attribute tags.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackRun {
    video_id: String,
    predicted: Vec<BoundingBox>,
    ground_truth: Vec<Option<BoundingBox>>,
    absent: Vec<bool>,
    attributes: BTreeSet<Attribute>,
}

impl TrackRun {
    pub fn new(
        video_id: impl Into<String>,
        predicted: Vec<BoundingBox>,
        ground_truth: Vec<Option<BoundingBox>>,
        absent: Vec<bool>,
        attributes: BTreeSet<Attribute>,
    ) -> Result<Self, MetricsError> {
        let video_id = video_id.into();
        if predicted.len() != ground_truth.len() || predicted.len() != absent.len() {
            return Err(MetricsError::LengthMismatch {
                video_id,
                predicted: predicted.len(),
                ground_truth: ground_truth.len(),
                absent: absent.len(),
            });
        }
        for (i, (gt, &abs)) in ground_truth.iter().zip(&absent).enumerate() {
            if !abs && gt.is_none() {
                return Err(MetricsError::MissingGroundTruth {
                    video_id: video_id.clone(),
                    frame: i,
                });
            }
        }
        Ok(TrackRun {
            video_id,
            predicted,
            ground_truth,
            absent,
            attributes,
        })
    }

    pub fn video_id(&self) -> &str {
        &self.video_id
    }

    pub fn frames(&self) -> usize {
        self.predicted.len()
    }

    pub fn attributes(&self) -> &BTreeSet<Attribute> {
        &self.attributes
    }

    /// `(pred, gt)` for frames that count toward metrics.
    fn scored_frames(&self) -> impl Iterator<Item = (&BoundingBox, &BoundingBox)> {
        self.predicted
            .iter()
            .zip(&self.ground_truth)
            .zip(&self.absent)
            .filter(|(_, &abs)| !abs)
            .map(|((p, g), _)| (p, g.as_ref().expect("validated at construction")))
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("run `{video_id}` has inconsistent lengths: {predicted} predictions, {ground_truth} ground-truth boxes, {absent} absence flags")]
    LengthMismatch {
        video_id: String,
        predicted: usize,
        ground_truth: usize,
        absent: usize,
    },
    #[error("run `{video_id}` frame {frame} is present but has no ground-truth box")]
    MissingGroundTruth { video_id: String, frame: usize },
    #[error("run `{0}` has no frames")]
    EmptyRun(String),
    #[error("run `{0}` has no present frames to score")]
    AllAbsent(String),
    #[error("unknown attribute tag `{0}`")]
    UnknownAttribute(String),
    #[error("aggregate needs at least one run")]
    NoRuns,
}

/// A metric curve: threshold grid plus the value at each threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub thresholds: Vec<f64>,
    pub values: Vec<f64>,
}

impl Curve {
    fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Trapezoidal area under the curve over the threshold grid.
    fn auc(&self) -> f64 {
        self.thresholds
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(t, v)| (v[0] + v[1]) / 2.0 * (t[1] - t[0]))
            .sum()
    }
}

/// 21 IoU thresholds: 0, 0.05, ..., 1.
pub fn success_thresholds() -> Vec<f64> {
    (0..=20).map(|i| i as f64 / 20.0).collect()
}

/// 51 center-error thresholds: 0, 1, ..., 50 px.
pub fn precision_thresholds() -> Vec<f64> {
    (0..=50).map(|i| i as f64).collect()
}

/// 101 normalized thresholds: 0, 0.005, ..., 0.5.
pub fn normalized_precision_thresholds() -> Vec<f64> {
    (0..=100).map(|i| i as f64 / 200.0).collect()
}

/// Pixel threshold at which PR is reported.
pub const PRECISION_REPORT_PX: f64 = 20.0;

fn scored<'a>(
    run: &'a TrackRun,
) -> Result<Vec<(&'a BoundingBox, &'a BoundingBox)>, MetricsError> {
    if run.frames() == 0 {
        return Err(MetricsError::EmptyRun(run.video_id.clone()));
    }
    let frames: Vec<_> = run.scored_frames().collect();
    if frames.is_empty() {
        return Err(MetricsError::AllAbsent(run.video_id.clone()));
    }
    Ok(frames)
}

fn fraction_over(values: &[f64], thresholds: &[f64], strict_greater: bool) -> Curve {
    let n = values.len() as f64;
    let curve_values = thresholds
        .iter()
        .map(|&t| {
            let hits = values
                .iter()
                .filter(|&&v| if strict_greater { v > t } else { v <= t })
                .count();
            hits as f64 / n
        })
        .collect();
    Curve {
        thresholds: thresholds.to_vec(),
        values: curve_values,
    }
}

/// Success curve over the 21-point IoU grid (strict `>`).
pub fn success_curve(run: &TrackRun) -> Result<Curve, MetricsError> {
    let frames = scored(run)?;
    let ious: Vec<f64> = frames.iter().map(|(p, g)| iou(p, g)).collect();
    Ok(fraction_over(&ious, &success_thresholds(), true))
}

/// Precision curve over integer pixel thresholds 0..=50 (`<=`).
pub fn precision_curve(run: &TrackRun) -> Result<Curve, MetricsError> {
    let frames = scored(run)?;
    let errors: Vec<f64> = frames.iter().map(|(p, g)| center_error(p, g)).collect();
    Ok(fraction_over(&errors, &precision_thresholds(), false))
}

/// Normalized-precision curve over `[0, 0.5]` (`<=`).
pub fn normalized_precision_curve(run: &TrackRun) -> Result<Curve, MetricsError> {
    let frames = scored(run)?;
    let errors: Vec<f64> = frames
        .iter()
        .map(|(p, g)| normalized_center_error(p, g))
        .collect();
    Ok(fraction_over(&errors, &normalized_precision_thresholds(), false))
}

/// SR, PR, and NPR (all x100) with their underlying curves.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub sr: f64,
    pub pr: f64,
    pub npr: f64,
    pub success: Curve,
    pub precision: Curve,
    pub normalized_precision: Curve,
    pub videos: usize,
}

/// Metrics of a single run.
pub fn evaluate_run(run: &TrackRun) -> Result<MetricReport, MetricsError> {
    let success = success_curve(run)?;
    let precision = precision_curve(run)?;
    let normalized = normalized_precision_curve(run)?;
    let pr_index = PRECISION_REPORT_PX as usize;
    Ok(MetricReport {
        sr: success.mean() * 100.0,
        pr: precision.values[pr_index] * 100.0,
        npr: normalized.auc() / 0.5 * 100.0,
        success,
        precision,
        normalized_precision: normalized,
        videos: 1,
    })
}

/// Per-video metrics averaged with equal video weight. Runs are reduced in
/// sorted video-id order so the floating-point result is independent of
/// input order and thread count.
pub fn aggregate(runs: &[TrackRun]) -> Result<MetricReport, MetricsError> {
    if runs.is_empty() {
        return Err(MetricsError::NoRuns);
    }
    let mut reports: Vec<(&str, MetricReport)> = runs
        .par_iter()
        .map(|run| evaluate_run(run).map(|rep| (run.video_id(), rep)))
        .collect::<Result<_, _>>()?;
    reports.sort_by(|a, b| a.0.cmp(b.0));

    let n = reports.len() as f64;
    let mean_curve = |pick: fn(&MetricReport) -> &Curve| -> Curve {
        let thresholds = pick(&reports[0].1).thresholds.clone();
        let mut values = vec![0.0; thresholds.len()];
        for (_, rep) in &reports {
            for (acc, v) in values.iter_mut().zip(&pick(rep).values) {
                *acc += v / n;
            }
        }
        Curve { thresholds, values }
    };
    let success = mean_curve(|r| &r.success);
    let precision = mean_curve(|r| &r.precision);
    let normalized = mean_curve(|r| &r.normalized_precision);

    Ok(MetricReport {
        sr: reports.iter().map(|(_, r)| r.sr).sum::<f64>() / n,
        pr: reports.iter().map(|(_, r)| r.pr).sum::<f64>() / n,
        npr: reports.iter().map(|(_, r)| r.npr).sum::<f64>() / n,
        success,
        precision,
        normalized_precision: normalized,
        videos: reports.len(),
    })
}

/// SR restricted to the runs carrying each attribute tag; tags with no
/// tagged runs are simply absent from the map.
pub fn attribute_breakdown(
    runs: &[TrackRun],
) -> Result<BTreeMap<Attribute, f64>, MetricsError> {
    let mut out = BTreeMap::new();
    for attr in Attribute::ALL {
        let tagged: Vec<TrackRun> = runs
            .iter()
            .filter(|r| r.attributes().contains(&attr))
            .cloned()
            .collect();
        if !tagged.is_empty() {
            out.insert(attr, aggregate(&tagged)?.sr);
        }
    }
    Ok(out)
}

pub mod report {
    //! Deterministic exports: metric CSV, per-curve CSVs, and a plain SVG
    //! plot of the three curves. All numbers use four fractional digits.

    use std::fmt::Write as _;

    use super::{Curve, MetricReport};

    pub fn metrics_csv(report: &MetricReport) -> String {
        let mut out = String::from("metric,value\n");
        writeln!(out, "SR,{:.4}", report.sr).unwrap();
        writeln!(out, "PR,{:.4}", report.pr).unwrap();
        writeln!(out, "NPR,{:.4}", report.npr).unwrap();
        writeln!(out, "videos,{}", report.videos).unwrap();
        out
    }

    pub fn curve_csv(curve: &Curve) -> String {
        let mut out = String::from("threshold,value\n");
        for (t, v) in curve.thresholds.iter().zip(&curve.values) {
            writeln!(out, "{t:.4},{v:.4}").unwrap();
        }
        out
    }

    const PANEL_W: f64 = 320.0;
    const PANEL_H: f64 = 240.0;
    const MARGIN: f64 = 40.0;

    fn polyline(curve: &Curve, offset_x: f64) -> String {
        let t_max = *curve.thresholds.last().unwrap();
        let points: Vec<String> = curve
            .thresholds
            .iter()
            .zip(&curve.values)
            .map(|(&t, &v)| {
                let x = offset_x + MARGIN + t / t_max * (PANEL_W - 2.0 * MARGIN);
                let y = PANEL_H - MARGIN - v * (PANEL_H - 2.0 * MARGIN);
                format!("{x:.4},{y:.4}")
            })
            .collect();
        points.join(" ")
    }

    fn panel(out: &mut String, curve: &Curve, title: &str, index: usize) {
        let offset = index as f64 * PANEL_W;
        writeln!(
            out,
            r##"<rect x="{:.4}" y="{:.4}" width="{:.4}" height="{:.4}" fill="none" stroke="#888"/>"##,
            offset + MARGIN,
            MARGIN,
            PANEL_W - 2.0 * MARGIN,
            PANEL_H - 2.0 * MARGIN
        )
        .unwrap();
        writeln!(
            out,
            r#"<text x="{:.4}" y="{:.4}" font-size="14" text-anchor="middle">{title}</text>"#,
            offset + PANEL_W / 2.0,
            MARGIN - 10.0
        )
        .unwrap();
        writeln!(
            out,
            r##"<polyline points="{}" fill="none" stroke="#268bd2" stroke-width="2"/>"##,
            polyline(curve, offset)
        )
        .unwrap();
    }

    /// One SVG with the success, precision, and normalized-precision
    /// panels side by side.
    pub fn curves_svg(report: &MetricReport) -> String {
        let mut out = format!(
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {:.0} {:.0}">"#,
            3.0 * PANEL_W,
            PANEL_H,
            3.0 * PANEL_W,
            PANEL_H
        );
        out.push('\n');
        panel(&mut out, &report.success, "Success", 0);
        panel(&mut out, &report.precision, "Precision", 1);
        panel(&mut out, &report.normalized_precision, "Normalized precision", 2);
        out.push_str("</svg>\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn bb(x: f64, y: f64, w: f64, h: f64) -> BoundingBox {
        BoundingBox::new(x, y, w, h).unwrap()
    }

    fn simple_run(id: &str, frames: Vec<(BoundingBox, BoundingBox)>) -> TrackRun {
        let n = frames.len();
        let (pred, gt): (Vec<_>, Vec<_>) = frames.into_iter().unzip();
        TrackRun::new(
            id,
            pred,
            gt.into_iter().map(Some).collect(),
            vec![false; n],
            BTreeSet::new(),
        )
        .unwrap()
    }

    #[test]
    fn perfect_prediction_forces_strict_inequality_sr() {
        let b = bb(10.0, 10.0, 20.0, 20.0);
        let run = simple_run("v", vec![(b, b); 3]);
        let report = evaluate_run(&run).unwrap();
        assert_abs_diff_eq!(report.sr, 20.0 / 21.0 * 100.0, epsilon = 1e-9);
        assert_abs_diff_eq!(report.pr, 100.0);
        assert_abs_diff_eq!(report.npr, 100.0);
    }

    #[test]
    fn disjoint_predictions_score_zero() {
        let run = simple_run(
            "v",
            vec![(bb(0.0, 0.0, 5.0, 5.0), bb(500.0, 500.0, 5.0, 5.0)); 2],
        );
        let report = evaluate_run(&run).unwrap();
        assert_abs_diff_eq!(report.sr, 0.0);
        assert_abs_diff_eq!(report.pr, 0.0);
        assert_abs_diff_eq!(report.npr, 0.0);
    }

    #[test]
    fn success_curve_direct_enumeration() {
        // One frame with IoU 0.6 (areas 10x10 overlapped 75 vs union 125)
        // and one with IoU 0.2.
        let a_pred = bb(0.0, 0.0, 10.0, 10.0);
        let a_gt = bb(0.0, 2.5, 10.0, 10.0); // inter 75, union 125 -> 0.6
        let b_pred = bb(0.0, 0.0, 10.0, 5.0);
        let b_gt = bb(0.0, 0.0, 10.0, 25.0); // inter 50, union 250 -> 0.2
        assert_abs_diff_eq!(iou(&a_pred, &a_gt), 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(iou(&b_pred, &b_gt), 0.2, epsilon = 1e-12);

        let run = simple_run("v", vec![(a_pred, a_gt), (b_pred, b_gt)]);
        let curve = success_curve(&run).unwrap();
        let at = |t: f64| {
            curve
                .values
                .iter()
                .zip(&curve.thresholds)
                .find(|(_, &th)| (th - t).abs() < 1e-12)
                .map(|(&v, _)| v)
                .unwrap()
        };
        assert_abs_diff_eq!(at(0.5), 0.5);
        assert_abs_diff_eq!(at(0.1), 1.0);
        // Hand summation: both count for t in {0,...,0.15}, one for
        // {0.2,...,0.55}, none above.
        let expected_sr = (4.0 * 1.0 + 8.0 * 0.5) / 21.0 * 100.0;
        assert_abs_diff_eq!(evaluate_run(&run).unwrap().sr, expected_sr, epsilon = 1e-9);
    }

    #[test]
    fn precision_direct_count() {
        // Errors of 5 px and 25 px.
        let run = simple_run(
            "v",
            vec![
                (bb(5.0, 0.0, 10.0, 10.0), bb(0.0, 0.0, 10.0, 10.0)),
                (bb(25.0, 0.0, 10.0, 10.0), bb(0.0, 0.0, 10.0, 10.0)),
            ],
        );
        let report = evaluate_run(&run).unwrap();
        assert_abs_diff_eq!(report.pr, 50.0);
    }

    #[test]
    fn normalized_precision_step_trapezoid() {
        // Single frame with normalized error exactly 0.25.
        let gt = bb(0.0, 0.0, 10.0, 10.0);
        let pred = bb(2.5, 0.0, 10.0, 10.0);
        assert_abs_diff_eq!(normalized_center_error(&pred, &gt), 0.25, epsilon = 1e-12);
        let run = simple_run("v", vec![(pred, gt)]);
        let report = evaluate_run(&run).unwrap();
        // Curve steps from 0 to 1 at t = 0.25: the transition segment
        // contributes 0.005/2 and the 50 full segments after it 0.25.
        let expected = (0.005 / 2.0 + 0.25) / 0.5 * 100.0;
        assert_abs_diff_eq!(report.npr, expected, epsilon = 1e-9);
    }

    #[test]
    fn absent_frames_do_not_count() {
        let good = bb(0.0, 0.0, 10.0, 10.0);
        let run = TrackRun::new(
            "v",
            vec![good, bb(900.0, 900.0, 1.0, 1.0)],
            vec![Some(good), None],
            vec![false, true],
            BTreeSet::new(),
        )
        .unwrap();
        let report = evaluate_run(&run).unwrap();
        assert_abs_diff_eq!(report.pr, 100.0);

        let all_absent = TrackRun::new(
            "v",
            vec![good],
            vec![None],
            vec![true],
            BTreeSet::new(),
        )
        .unwrap();
        assert!(matches!(
            evaluate_run(&all_absent).unwrap_err(),
            MetricsError::AllAbsent(_)
        ));
    }

    #[test]
    fn aggregate_means_videos_equally() {
        let perfect = simple_run("a", vec![(bb(0.0, 0.0, 10.0, 10.0), bb(0.0, 0.0, 10.0, 10.0))]);
        let awful = simple_run(
            "b",
            vec![(bb(0.0, 0.0, 5.0, 5.0), bb(500.0, 500.0, 5.0, 5.0))],
        );
        let one = aggregate(std::slice::from_ref(&perfect)).unwrap();
        let single = evaluate_run(&perfect).unwrap();
        assert_abs_diff_eq!(one.sr, single.sr);

        let both = aggregate(&[perfect.clone(), awful.clone()]).unwrap();
        assert_abs_diff_eq!(both.sr, single.sr / 2.0, epsilon = 1e-12);
        // Permutation invariance.
        let swapped = aggregate(&[awful, perfect]).unwrap();
        assert_eq!(both, swapped);
    }

    #[test]
    fn curves_are_monotone() {
        let run = simple_run(
            "v",
            vec![
                (bb(0.0, 0.0, 10.0, 10.0), bb(3.0, 1.0, 10.0, 10.0)),
                (bb(0.0, 0.0, 10.0, 10.0), bb(8.0, 6.0, 12.0, 9.0)),
                (bb(0.0, 0.0, 10.0, 10.0), bb(0.5, 0.5, 10.0, 10.0)),
            ],
        );
        let success = success_curve(&run).unwrap();
        assert!(success.values.windows(2).all(|w| w[0] >= w[1]));
        let precision = precision_curve(&run).unwrap();
        assert!(precision.values.windows(2).all(|w| w[0] <= w[1]));
        let normalized = normalized_precision_curve(&run).unwrap();
        assert!(normalized.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn scaling_leaves_sr_npr_but_moves_pr() {
        let frames = vec![
            (bb(0.0, 0.0, 10.0, 10.0), bb(3.0, 1.0, 11.0, 10.0)),
            (bb(5.0, 2.0, 8.0, 12.0), bb(6.0, 1.0, 9.0, 11.0)),
        ];
        let scaled: Vec<_> = frames
            .iter()
            .map(|(p, g)| {
                (
                    bb(p.x * 7.0, p.y * 7.0, p.w * 7.0, p.h * 7.0),
                    bb(g.x * 7.0, g.y * 7.0, g.w * 7.0, g.h * 7.0),
                )
            })
            .collect();
        let base = evaluate_run(&simple_run("v", frames)).unwrap();
        let big = evaluate_run(&simple_run("v", scaled)).unwrap();
        assert_abs_diff_eq!(base.sr, big.sr, epsilon = 1e-12);
        assert_abs_diff_eq!(base.npr, big.npr, epsilon = 1e-12);
        assert!(
            (base.pr - big.pr).abs() > 1.0,
            "pixel precision must move under scaling: {} vs {}",
            base.pr,
            big.pr
        );
    }

    #[test]
    fn attribute_breakdown_regroups() {
        let mk = |id: &str, good: bool, attrs: &[Attribute]| {
            let gt = bb(0.0, 0.0, 10.0, 10.0);
            let pred = if good { gt } else { bb(500.0, 0.0, 10.0, 10.0) };
            TrackRun::new(
                id,
                vec![pred],
                vec![Some(gt)],
                vec![false],
                attrs.iter().copied().collect(),
            )
            .unwrap()
        };
        let runs = vec![
            mk("a", true, &[Attribute::Fm]),
            mk("b", false, &[Attribute::Fm, Attribute::Bc]),
            mk("c", true, &[Attribute::Bc]),
        ];
        let breakdown = attribute_breakdown(&runs).unwrap();
        let perfect_sr = 20.0 / 21.0 * 100.0;
        assert_abs_diff_eq!(breakdown[&Attribute::Fm], perfect_sr / 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(breakdown[&Attribute::Bc], perfect_sr / 2.0, epsilon = 1e-9);
        assert!(!breakdown.contains_key(&Attribute::Ov));
        // All runs tagged with one attribute: the row equals overall SR.
        let overall = aggregate(&runs).unwrap().sr;
        let fm_only: Vec<TrackRun> = runs
            .iter()
            .map(|r| {
                TrackRun::new(
                    r.video_id(),
                    r.predicted.clone(),
                    r.ground_truth.clone(),
                    r.absent.clone(),
                    [Attribute::Fm].into_iter().collect(),
                )
                .unwrap()
            })
            .collect();
        let only = attribute_breakdown(&fm_only).unwrap();
        assert_abs_diff_eq!(only[&Attribute::Fm], overall, epsilon = 1e-9);
        assert_eq!(only.len(), 1);
    }

    #[test]
    fn report_exports_are_stable() {
        let run = simple_run(
            "v",
            vec![(bb(0.0, 0.0, 10.0, 10.0), bb(1.0, 1.0, 10.0, 10.0))],
        );
        let rep = evaluate_run(&run).unwrap();
        let csv = report::metrics_csv(&rep);
        assert!(csv.starts_with("metric,value\nSR,"));
        assert_eq!(csv, report::metrics_csv(&rep));
        let svg = report::curves_svg(&rep);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("polyline"));
        let curve = report::curve_csv(&rep.success);
        assert_eq!(curve.lines().count(), 22);
    }
}
