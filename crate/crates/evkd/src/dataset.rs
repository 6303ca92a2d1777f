//! Dataset ingestion and validation.
//!
//! The canonical on-disk layout is
//!
//! ```text
//! root/
//!   train.txt  val.txt  test.txt      one video id per line
//!   attributes.csv                    video_id,TAG,TAG,...
//!   classes.csv                       video_id,class        (optional)
//!   annotations/<video_id>.txt        per-frame annotations
//! ```
//!
//! Annotation lines are `x,y,w,h,absent` with `absent` in `{0,1}`; a
//! leading frame-index column (`frame,x,y,w,h,absent`) is also accepted
//! since released layouts commonly carry one — the index is implied by
//! line order either way. Zero-size boxes are only legal on absent frames.
//!
//! Loading reports missing per-video files exhaustively instead of failing
//! fast; only a missing split list or a duplicated video id aborts.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::event::SensorGeometry;
use crate::geometry::BoundingBox;
use crate::metrics::{Attribute, MetricsError, TrackRun};

/// Dataset split a video belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn list_file(&self) -> &'static str {
        match self {
            Split::Train => "train.txt",
            Split::Val => "val.txt",
            Split::Test => "test.txt",
        }
    }
}

/// One video's metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoRecord {
    pub id: String,
    pub class_tag: Option<String>,
    pub attributes: BTreeSet<Attribute>,
    /// Tags from attributes.csv that are not in the 14-tag vocabulary;
    /// surfaced by validation.
    pub unknown_tags: Vec<String>,
    pub frame_count: usize,
    pub geometry: SensorGeometry,
}

/// Fully resolved dataset description.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub root: PathBuf,
    pub videos: Vec<VideoRecord>,
    pub splits: BTreeMap<String, Split>,
}

impl DatasetManifest {
    pub fn split_ids(&self, split: Split) -> Vec<&str> {
        self.videos
            .iter()
            .filter(|v| self.splits.get(&v.id) == Some(&split))
            .map(|v| v.id.as_str())
            .collect()
    }

    pub fn video(&self, id: &str) -> Option<&VideoRecord> {
        self.videos.iter().find(|v| v.id == id)
    }
}

/// Per-frame annotation: the box (when one exists) and the absence flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Annotation {
    pub bbox: Option<BoundingBox>,
    pub absent: bool,
}

/// Manifest plus everything read along the way.
#[derive(Debug, Clone)]
pub struct LoadedManifest {
    pub manifest: DatasetManifest,
    pub annotations: BTreeMap<String, Vec<Annotation>>,
    /// Non-fatal problems found while loading (missing or unparsable
    /// per-video files, orphan metadata rows).
    pub issues: Vec<Finding>,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("missing split file {0}")]
    MissingSplitFile(PathBuf),
    #[error("video id `{0}` appears in more than one split entry")]
    DuplicateVideoId(String),
    #[error("{file}:{line}: {reason}")]
    MalformedLine {
        file: String,
        line: usize,
        reason: String,
    },
    #[error("{file}:{line}: box {w}x{h} is invalid for a present frame")]
    InvalidBox {
        file: String,
        line: usize,
        w: f64,
        h: f64,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Kinds of validation findings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FindingKind {
    BoundsExceeded,
    FrameCountMismatch,
    BadAttributeTag,
    SplitTotalsMismatch,
    MissingAnnotationFile,
    MalformedAnnotation,
    MissingAttributesFile,
    OrphanEntry,
}

/// One validation finding, machine-readable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Finding {
    pub kind: FindingKind,
    pub video_id: Option<String>,
    pub frame: Option<usize>,
    pub message: String,
}

impl Finding {
    fn new(kind: FindingKind, video_id: Option<&str>, frame: Option<usize>, message: String) -> Self {
        Finding {
            kind,
            video_id: video_id.map(str::to_string),
            frame,
            message,
        }
    }
}

/// Validation output; serializes to JSON for machine consumption.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Expected split sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitProfile {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl SplitProfile {
    pub fn total(&self) -> usize {
        self.train + self.val + self.test
    }
}

/// What a dataset is expected to look like; all checks are optional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetProfile {
    pub splits: Option<SplitProfile>,
    pub frames_per_video: Option<usize>,
    pub geometry: SensorGeometry,
}

impl DatasetProfile {
    /// Full EventVOT: 841/18/282 videos of 499 frames at 1280x720.
    pub fn eventvot() -> Self {
        DatasetProfile {
            splits: Some(SplitProfile {
                train: 841,
                val: 18,
                test: 282,
            }),
            frames_per_video: Some(499),
            geometry: SensorGeometry::EVENTVOT,
        }
    }

    /// Geometry-only checks, for small fixtures.
    pub fn lenient() -> Self {
        DatasetProfile {
            splits: None,
            frames_per_video: None,
            geometry: SensorGeometry::EVENTVOT,
        }
    }
}

fn parse_box_fields(
    file: &str,
    lineno: usize,
    fields: &[&str],
) -> Result<Annotation, DatasetError> {
    let malformed = |reason: String| DatasetError::MalformedLine {
        file: file.to_string(),
        line: lineno,
        reason,
    };
    let nums: Vec<f64> = fields
        .iter()
        .map(|f| f.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| malformed("non-numeric field".into()))?;
    let [x, y, w, h, absent] = nums[..] else {
        return Err(malformed(format!("expected 5 or 6 fields, got {}", fields.len())));
    };
    let absent = match absent {
        a if a == 0.0 => false,
        a if a == 1.0 => true,
        other => return Err(malformed(format!("absent flag {other} not in {{0,1}}"))),
    };
    if w > 0.0 && h > 0.0 {
        Ok(Annotation {
            bbox: Some(BoundingBox::new(x, y, w, h).expect("positive extent")),
            absent,
        })
    } else if absent {
        // Zero-size boxes are how absent frames are commonly written.
        Ok(Annotation { bbox: None, absent: true })
    } else {
        Err(DatasetError::InvalidBox {
            file: file.to_string(),
            line: lineno,
            w,
            h,
        })
    }
}

/// Parses `x,y,w,h,absent` lines (optionally with a leading frame index).
pub fn parse_annotations(text: &str, file_label: &str) -> Result<Vec<Annotation>, DatasetError> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let fields = match fields.len() {
            5 => &fields[..],
            6 => &fields[1..],
            n => {
                return Err(DatasetError::MalformedLine {
                    file: file_label.to_string(),
                    line: idx + 1,
                    reason: format!("expected 5 or 6 fields, got {n}"),
                })
            }
        };
        out.push(parse_box_fields(file_label, idx + 1, fields)?);
    }
    Ok(out)
}

pub fn load_annotations(path: &Path) -> Result<Vec<Annotation>, DatasetError> {
    let text = std::fs::read_to_string(path)?;
    parse_annotations(&text, &path.display().to_string())
}

/// Parses tracker result lines: `x,y,w,h` reals, one frame per line.
pub fn parse_result_lines(text: &str, file_label: &str) -> Result<Vec<BoundingBox>, DatasetError> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let malformed = |reason: String| DatasetError::MalformedLine {
            file: file_label.to_string(),
            line: idx + 1,
            reason,
        };
        let nums: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| malformed("non-numeric field".into()))?;
        let [x, y, w, h] = nums[..] else {
            return Err(malformed(format!("expected 4 fields, got {}", nums.len())));
        };
        let bbox = BoundingBox::new(x, y, w, h).map_err(|_| DatasetError::InvalidBox {
            file: file_label.to_string(),
            line: idx + 1,
            w,
            h,
        })?;
        out.push(bbox);
    }
    Ok(out)
}

pub fn load_result_file(path: &Path) -> Result<Vec<BoundingBox>, DatasetError> {
    let text = std::fs::read_to_string(path)?;
    parse_result_lines(&text, &path.display().to_string())
}

fn read_id_list(path: &Path) -> Result<Vec<String>, DatasetError> {
    if !path.exists() {
        return Err(DatasetError::MissingSplitFile(path.to_path_buf()));
    }
    Ok(std::fs::read_to_string(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

/// Loads split lists, attribute/class metadata, and every per-video
/// annotation file under `root`.
pub fn load_manifest(root: &Path) -> Result<LoadedManifest, DatasetError> {
    let mut splits: BTreeMap<String, Split> = BTreeMap::new();
    for split in Split::ALL {
        for id in read_id_list(&root.join(split.list_file()))? {
            if splits.insert(id.clone(), split).is_some() {
                return Err(DatasetError::DuplicateVideoId(id));
            }
        }
    }

    let mut issues = Vec::new();

    let mut attributes: BTreeMap<String, (BTreeSet<Attribute>, Vec<String>)> = BTreeMap::new();
    let attr_path = root.join("attributes.csv");
    if attr_path.exists() {
        for (idx, line) in std::fs::read_to_string(&attr_path)?.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(',').map(str::trim);
            let id = match fields.next() {
                Some(id) if !id.is_empty() => id.to_string(),
                _ => {
                    return Err(DatasetError::MalformedLine {
                        file: attr_path.display().to_string(),
                        line: idx + 1,
                        reason: "missing video id".into(),
                    })
                }
            };
            let mut tags = BTreeSet::new();
            let mut unknown = Vec::new();
            for tag in fields.filter(|t| !t.is_empty()) {
                match tag.parse::<Attribute>() {
                    Ok(a) => {
                        tags.insert(a);
                    }
                    Err(_) => unknown.push(tag.to_string()),
                }
            }
            if !splits.contains_key(&id) {
                issues.push(Finding::new(
                    FindingKind::OrphanEntry,
                    Some(&id),
                    None,
                    format!("attributes.csv row {} names a video absent from every split", idx + 1),
                ));
            }
            attributes.insert(id, (tags, unknown));
        }
    } else {
        issues.push(Finding::new(
            FindingKind::MissingAttributesFile,
            None,
            None,
            "attributes.csv not found; all videos treated as untagged".into(),
        ));
    }

    let mut classes: BTreeMap<String, String> = BTreeMap::new();
    let class_path = root.join("classes.csv");
    if class_path.exists() {
        for line in std::fs::read_to_string(&class_path)?.lines() {
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            if let Some((id, class)) = line.split_once(',') {
                classes.insert(id.trim().to_string(), class.trim().to_string());
            }
        }
    }

    let mut videos = Vec::new();
    let mut annotations = BTreeMap::new();
    for id in splits.keys() {
        let (attrs, unknown) = attributes.get(id).cloned().unwrap_or_default();
        let ann_path = root.join("annotations").join(format!("{id}.txt"));
        let frame_count = if ann_path.exists() {
            match load_annotations(&ann_path) {
                Ok(ann) => {
                    let count = ann.len();
                    annotations.insert(id.clone(), ann);
                    count
                }
                Err(err) => {
                    issues.push(Finding::new(
                        FindingKind::MalformedAnnotation,
                        Some(id),
                        None,
                        err.to_string(),
                    ));
                    0
                }
            }
        } else {
            issues.push(Finding::new(
                FindingKind::MissingAnnotationFile,
                Some(id),
                None,
                format!("no annotation file at {}", ann_path.display()),
            ));
            0
        };
        videos.push(VideoRecord {
            id: id.clone(),
            class_tag: classes.get(id).cloned(),
            attributes: attrs,
            unknown_tags: unknown,
            frame_count,
            geometry: SensorGeometry::EVENTVOT,
        });
    }

    Ok(LoadedManifest {
        manifest: DatasetManifest {
            root: root.to_path_buf(),
            videos,
            splits,
        },
        annotations,
        issues,
    })
}

/// Integrity checks over a loaded dataset. Pure: repeated runs yield the
/// identical report. Load-time issues are folded into the findings.
pub fn validate_dataset(loaded: &LoadedManifest, profile: &DatasetProfile) -> ValidationReport {
    let mut findings = loaded.issues.clone();
    let manifest = &loaded.manifest;
    let (width, height) = (
        profile.geometry.width() as f64,
        profile.geometry.height() as f64,
    );

    for video in &manifest.videos {
        for tag in &video.unknown_tags {
            findings.push(Finding::new(
                FindingKind::BadAttributeTag,
                Some(&video.id),
                None,
                format!("tag `{tag}` is not one of the 14 attributes"),
            ));
        }
        if let Some(expected) = profile.frames_per_video {
            if video.frame_count != expected && loaded.annotations.contains_key(&video.id) {
                findings.push(Finding::new(
                    FindingKind::FrameCountMismatch,
                    Some(&video.id),
                    None,
                    format!("{} annotation lines, expected {expected}", video.frame_count),
                ));
            }
        }
        if let Some(ann) = loaded.annotations.get(&video.id) {
            for (frame, a) in ann.iter().enumerate() {
                let Some(bbox) = a.bbox else { continue };
                if a.absent {
                    continue;
                }
                if bbox.x < 0.0
                    || bbox.y < 0.0
                    || bbox.right() > width
                    || bbox.bottom() > height
                {
                    findings.push(Finding::new(
                        FindingKind::BoundsExceeded,
                        Some(&video.id),
                        Some(frame),
                        format!(
                            "box ({}, {}, {}, {}) exceeds {width}x{height}",
                            bbox.x, bbox.y, bbox.w, bbox.h
                        ),
                    ));
                }
            }
        }
    }

    if let Some(expected) = profile.splits {
        let count = |s: Split| manifest.splits.values().filter(|&&v| v == s).count();
        let got = (count(Split::Train), count(Split::Val), count(Split::Test));
        if got != (expected.train, expected.val, expected.test) {
            findings.push(Finding::new(
                FindingKind::SplitTotalsMismatch,
                None,
                None,
                format!(
                    "split sizes {}/{}/{} (total {}), expected {}/{}/{} (total {})",
                    got.0,
                    got.1,
                    got.2,
                    got.0 + got.1 + got.2,
                    expected.train,
                    expected.val,
                    expected.test,
                    expected.total()
                ),
            ));
        }
    }

    ValidationReport { findings }
}

/// Writes a loaded dataset back out in the canonical layout: split lists,
/// attributes.csv, classes.csv (when any class is known), and per-video
/// annotation files. Loading the written tree reproduces an equal
/// manifest and equal annotations.
pub fn save_layout(loaded: &LoadedManifest, root: &Path) -> Result<(), DatasetError> {
    use std::fmt::Write as _;

    std::fs::create_dir_all(root.join("annotations"))?;
    for split in Split::ALL {
        let mut text = String::new();
        for (id, s) in &loaded.manifest.splits {
            if *s == split {
                writeln!(text, "{id}").unwrap();
            }
        }
        std::fs::write(root.join(split.list_file()), text)?;
    }

    let mut attrs = String::new();
    let mut classes = String::new();
    for video in &loaded.manifest.videos {
        write!(attrs, "{}", video.id).unwrap();
        for tag in &video.attributes {
            write!(attrs, ",{tag}").unwrap();
        }
        for tag in &video.unknown_tags {
            write!(attrs, ",{tag}").unwrap();
        }
        attrs.push('\n');
        if let Some(class) = &video.class_tag {
            writeln!(classes, "{},{class}", video.id).unwrap();
        }
    }
    std::fs::write(root.join("attributes.csv"), attrs)?;
    if !classes.is_empty() {
        std::fs::write(root.join("classes.csv"), classes)?;
    }

    for (id, annotations) in &loaded.annotations {
        let mut text = String::new();
        for a in annotations {
            let (x, y, w, h) = match a.bbox {
                Some(b) => (b.x, b.y, b.w, b.h),
                None => (0.0, 0.0, 0.0, 0.0),
            };
            writeln!(text, "{x},{y},{w},{h},{}", if a.absent { 1 } else { 0 }).unwrap();
        }
        std::fs::write(root.join("annotations").join(format!("{id}.txt")), text)?;
    }
    Ok(())
}

/// Pairs tracker result boxes with a video's annotations into a scoring
/// run. Lengths must agree frame for frame.
pub fn build_track_run(
    video_id: &str,
    predicted: Vec<BoundingBox>,
    annotations: &[Annotation],
    attributes: BTreeSet<Attribute>,
) -> Result<TrackRun, DatasetError> {
    let ground_truth = annotations.iter().map(|a| a.bbox).collect();
    let absent = annotations.iter().map(|a| a.absent).collect();
    Ok(TrackRun::new(
        video_id,
        predicted,
        ground_truth,
        absent,
        attributes,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write(root: &Path, rel: &str, content: &str) {
        let path = root.join(rel);
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(path, content).unwrap();
    }

    fn two_video_fixture(root: &Path) {
        write(root, "train.txt", "vid_a\n");
        write(root, "val.txt", "");
        write(root, "test.txt", "vid_b\n");
        write(root, "attributes.csv", "vid_a,FM,BC\nvid_b,ST\n");
        write(root, "classes.csv", "vid_a,uav\nvid_b,pedestrian\n");
        write(
            root,
            "annotations/vid_a.txt",
            "100,200,50,40,0\n110,210,50,40,0\n",
        );
        write(
            root,
            "annotations/vid_b.txt",
            "0,300,400,20,30,0\n1,0,0,0,0,1\n",
        );
    }

    #[test]
    fn loads_two_video_fixture() {
        let dir = tempfile::tempdir().unwrap();
        two_video_fixture(dir.path());
        let loaded = load_manifest(dir.path()).unwrap();
        assert!(loaded.issues.is_empty(), "{:?}", loaded.issues);
        assert_eq!(loaded.manifest.videos.len(), 2);
        let a = loaded.manifest.video("vid_a").unwrap();
        assert_eq!(a.frame_count, 2);
        assert_eq!(a.class_tag.as_deref(), Some("uav"));
        assert!(a.attributes.contains(&Attribute::Fm));
        assert_eq!(loaded.manifest.splits["vid_b"], Split::Test);
        // vid_b uses the 6-field form; absent frame has no box.
        let ann = &loaded.annotations["vid_b"];
        assert_eq!(ann.len(), 2);
        assert!(ann[1].absent);
        assert!(ann[1].bbox.is_none());
        assert!(!ann[0].absent);

        let report = validate_dataset(&loaded, &DatasetProfile::lenient());
        assert!(report.is_clean(), "{}", report.to_json());
    }

    #[test]
    fn duplicate_id_is_fatal() {
        let dir = tempfile::tempdir().unwrap();
        two_video_fixture(dir.path());
        write(dir.path(), "val.txt", "vid_a\n");
        assert!(matches!(
            load_manifest(dir.path()).unwrap_err(),
            DatasetError::DuplicateVideoId(id) if id == "vid_a"
        ));
    }

    #[test]
    fn missing_split_file_is_fatal() {
        let dir = tempfile::tempdir().unwrap();
        two_video_fixture(dir.path());
        fs::remove_file(dir.path().join("val.txt")).unwrap();
        assert!(matches!(
            load_manifest(dir.path()).unwrap_err(),
            DatasetError::MissingSplitFile(_)
        ));
    }

    #[test]
    fn missing_annotations_reported_not_fatal() {
        let dir = tempfile::tempdir().unwrap();
        two_video_fixture(dir.path());
        fs::remove_file(dir.path().join("annotations/vid_b.txt")).unwrap();
        let loaded = load_manifest(dir.path()).unwrap();
        assert_eq!(loaded.issues.len(), 1);
        assert_eq!(loaded.issues[0].kind, FindingKind::MissingAnnotationFile);
        assert_eq!(loaded.issues[0].video_id.as_deref(), Some("vid_b"));
    }

    #[test]
    fn annotation_parsing_edge_cases() {
        // 6-field present line.
        let ann = parse_annotations("0,100,200,50,40,0\n", "t").unwrap();
        let bbox = ann[0].bbox.unwrap();
        assert_eq!((bbox.x, bbox.y, bbox.w, bbox.h), (100.0, 200.0, 50.0, 40.0));
        // Zero-size absent frame accepted.
        let ann = parse_annotations("0,0,0,0,1\n", "t").unwrap();
        assert!(ann[0].absent && ann[0].bbox.is_none());
        // Negative extent on a present frame rejected.
        assert!(matches!(
            parse_annotations("100,200,-5,40,0\n", "t").unwrap_err(),
            DatasetError::InvalidBox { .. }
        ));
        // Bad absent flag and bad field counts.
        assert!(parse_annotations("1,2,3,4,7\n", "t").is_err());
        assert!(parse_annotations("1,2,3\n", "t").is_err());
    }

    #[test]
    fn validation_flags_each_defect_class() {
        let dir = tempfile::tempdir().unwrap();
        two_video_fixture(dir.path());
        // Bounds defect: box sticks out past 1280 wide.
        write(
            dir.path(),
            "annotations/vid_a.txt",
            "1270,200,50,40,0\n110,210,50,40,0\n",
        );
        // Bad tag defect.
        write(dir.path(), "attributes.csv", "vid_a,FM,WOBBLE\nvid_b,ST\n");
        let loaded = load_manifest(dir.path()).unwrap();

        let profile = DatasetProfile {
            frames_per_video: Some(3),
            ..DatasetProfile::lenient()
        };
        let report = validate_dataset(&loaded, &profile);
        let kinds: Vec<FindingKind> = report.findings.iter().map(|f| f.kind).collect();
        assert!(kinds.contains(&FindingKind::BoundsExceeded));
        assert!(kinds.contains(&FindingKind::BadAttributeTag));
        assert!(kinds.contains(&FindingKind::FrameCountMismatch));
        let bounds = report
            .findings
            .iter()
            .find(|f| f.kind == FindingKind::BoundsExceeded)
            .unwrap();
        assert_eq!(bounds.video_id.as_deref(), Some("vid_a"));
        assert_eq!(bounds.frame, Some(0));
        // Pure: a second run yields the identical report.
        assert_eq!(report, validate_dataset(&loaded, &profile));
    }

    #[test]
    fn split_totals_enforced_against_profile() {
        let dir = tempfile::tempdir().unwrap();
        two_video_fixture(dir.path());
        let loaded = load_manifest(dir.path()).unwrap();
        let report = validate_dataset(
            &loaded,
            &DatasetProfile {
                splits: Some(SplitProfile { train: 841, val: 18, test: 282 }),
                ..DatasetProfile::lenient()
            },
        );
        assert!(report
            .findings
            .iter()
            .any(|f| f.kind == FindingKind::SplitTotalsMismatch));
    }

    #[test]
    fn layout_round_trips_to_equal_manifest() {
        let dir = tempfile::tempdir().unwrap();
        two_video_fixture(dir.path());
        let loaded = load_manifest(dir.path()).unwrap();

        let copy = tempfile::tempdir().unwrap();
        save_layout(&loaded, copy.path()).unwrap();
        let reloaded = load_manifest(copy.path()).unwrap();

        assert_eq!(reloaded.manifest.videos, loaded.manifest.videos);
        assert_eq!(reloaded.manifest.splits, loaded.manifest.splits);
        assert_eq!(reloaded.annotations, loaded.annotations);
        assert!(reloaded.issues.is_empty());
    }

    #[test]
    fn result_files_parse_and_pair() {
        let text = "1.5,2.25,10,20\n3,4,5,6\n";
        let boxes = parse_result_lines(text, "r").unwrap();
        assert_eq!(boxes.len(), 2);
        assert_eq!(boxes[0].x, 1.5);
        assert!(parse_result_lines("1,2,3\n", "r").is_err());
        assert!(parse_result_lines("1,2,0,4\n", "r").is_err());

        let annotations = parse_annotations("0,0,10,10,0\n0,0,10,10,0\n", "a").unwrap();
        let run = build_track_run("v", boxes, &annotations, BTreeSet::new()).unwrap();
        assert_eq!(run.frames(), 2);
        // Frame-count mismatch surfaces as an error.
        let short = parse_annotations("0,0,10,10,0\n", "a").unwrap();
        let boxes = parse_result_lines(text, "r").unwrap();
        assert!(build_track_run("v", boxes, &short, BTreeSet::new()).is_err());
    }
}
