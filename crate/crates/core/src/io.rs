//! File formats and run manifests.
//!
//! All files are comma-separated with a single `#`-prefixed header line.
//! Detection files declare their covariance arity in the header
//! (`# cov=none|diag4|full10`); results files follow the common MOT challenge
//! column layout `frame,id,x,y,w,h,score,label,-1,-1`. Floats are written in
//! shortest round-trip form, so write-load-write is byte-stable. All writes
//! go through a temp file and an atomic rename.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BoxTlbr;
use crate::probdet::GaussianBox;
use crate::sequence::{DetectionSequence, FrameDetections, GtBox, GtFrame, GtSequence};
use crate::tracker::{FrameResult, TrackOutput};

/// How detection covariances are serialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovArity {
    None,
    Diag4,
    Full10,
}

impl CovArity {
    fn as_str(&self) -> &'static str {
        match self {
            CovArity::None => "none",
            CovArity::Diag4 => "diag4",
            CovArity::Full10 => "full10",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "none" => Some(CovArity::None),
            "diag4" => Some(CovArity::Diag4),
            "full10" => Some(CovArity::Full10),
            _ => None,
        }
    }
}

/// Row-major upper-triangle positions of a symmetric 4x4 matrix.
const UPPER_TRI: [(usize, usize); 10] = [
    (0, 0),
    (0, 1),
    (0, 2),
    (0, 3),
    (1, 1),
    (1, 2),
    (1, 3),
    (2, 2),
    (2, 3),
    (3, 3),
];

/// Eigenvalues below this are an error; within `[-PSD_TOL, 0)` they are clamped.
const PSD_TOL: f64 = 1e-9;

pub fn atomic_write(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    if !dir.as_os_str().is_empty() {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

fn parse_field<T: std::str::FromStr>(
    path: &Path,
    line: usize,
    field: &str,
    raw: &str,
) -> Result<T> {
    raw.trim()
        .parse::<T>()
        .map_err(|_| parse_err(path, line, format!("cannot parse {field} from {raw:?}")))
}

/// Validate and, if needed, repair a covariance matrix loaded from file.
fn validate_cov(path: &Path, line: usize, m: Matrix4<f64>) -> Result<Matrix4<f64>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(parse_err(path, line, "covariance has non-finite entries"));
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::new(sym);
    let min = eig.eigenvalues.min();
    if min < -PSD_TOL {
        return Err(parse_err(
            path,
            line,
            format!("covariance is not positive semi-definite (min eigenvalue {min:.3e})"),
        ));
    }
    if min < 0.0 {
        let clamped = eig.eigenvalues.map(|v| v.max(0.0));
        let rebuilt = eig.eigenvectors
            * Matrix4::from_diagonal(&clamped)
            * eig.eigenvectors.transpose();
        return Ok((rebuilt + rebuilt.transpose()) * 0.5);
    }
    Ok(sym)
}

/// Load a detection file into per-frame sets, sorted by frame.
pub fn load_detections(path: &Path) -> Result<DetectionSequence> {
    let text = fs::read_to_string(path)?;
    let mut arity: Option<CovArity> = None;
    let mut rows: Vec<(u32, GaussianBox)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(decl) = comment.strip_prefix("cov=") {
                let parsed = CovArity::parse(decl.trim())
                    .ok_or_else(|| parse_err(path, line_no, format!("unknown covariance arity {decl:?}")))?;
                if arity.is_some() {
                    return Err(parse_err(path, line_no, "duplicate cov= header"));
                }
                arity = Some(parsed);
            }
            continue;
        }
        let Some(arity) = arity else {
            return Err(parse_err(
                path,
                line_no,
                "data before the `# cov=none|diag4|full10` header",
            ));
        };
        let fields: Vec<&str> = line.split(',').collect();
        let expected = 7 + match arity {
            CovArity::None => 0,
            CovArity::Diag4 => 4,
            CovArity::Full10 => 10,
        };
        if fields.len() != expected {
            return Err(parse_err(
                path,
                line_no,
                format!("expected {expected} fields, found {}", fields.len()),
            ));
        }
        let frame: u32 = parse_field(path, line_no, "frame", fields[0])?;
        if frame < 1 {
            return Err(parse_err(path, line_no, "frame indices start at 1"));
        }
        let x1: f64 = parse_field(path, line_no, "x1", fields[1])?;
        let y1: f64 = parse_field(path, line_no, "y1", fields[2])?;
        let x2: f64 = parse_field(path, line_no, "x2", fields[3])?;
        let y2: f64 = parse_field(path, line_no, "y2", fields[4])?;
        let score: f64 = parse_field(path, line_no, "score", fields[5])?;
        let label: u32 = parse_field(path, line_no, "label", fields[6])?;
        let mean = BoxTlbr::new(x1, y1, x2, y2)
            .map_err(|e| parse_err(path, line_no, e.to_string()))?;
        if !(0.0..=1.0).contains(&score) {
            return Err(parse_err(path, line_no, format!("score {score} outside [0, 1]")));
        }
        let cov = match arity {
            CovArity::None => None,
            CovArity::Diag4 => {
                let mut m = Matrix4::zeros();
                for k in 0..4 {
                    m[(k, k)] = parse_field(path, line_no, "covariance", fields[7 + k])?;
                }
                Some(validate_cov(path, line_no, m)?)
            }
            CovArity::Full10 => {
                let mut m = Matrix4::zeros();
                for (k, &(i, j)) in UPPER_TRI.iter().enumerate() {
                    let v: f64 = parse_field(path, line_no, "covariance", fields[7 + k])?;
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
                Some(validate_cov(path, line_no, m)?)
            }
        };
        rows.push((
            frame,
            GaussianBox {
                mean,
                cov,
                score,
                label,
            },
        ));
    }
    if arity.is_none() {
        return Err(parse_err(path, 1, "missing `# cov=...` header"));
    }

    rows.sort_by_key(|(frame, _)| *frame);
    let mut seq: DetectionSequence = Vec::new();
    for (frame, det) in rows {
        match seq.last_mut() {
            Some(f) if f.frame == frame => f.dets.push(det),
            _ => seq.push(FrameDetections {
                frame,
                dets: vec![det],
            }),
        }
    }
    Ok(seq)
}

/// Write detections, serializing covariances at the requested arity.
///
/// `Diag4` keeps only the diagonal; `Full10` stores the upper triangle
/// verbatim. Detections without covariance are written as zero covariance
/// unless the arity is `None`.
pub fn write_detections(path: &Path, seq: &[FrameDetections], arity: CovArity) -> Result<()> {
    let mut out = String::new();
    writeln!(out, "# cov={}", arity.as_str()).unwrap();
    for frame in seq {
        for d in &frame.dets {
            write!(
                out,
                "{},{},{},{},{},{},{}",
                frame.frame, d.mean.x1, d.mean.y1, d.mean.x2, d.mean.y2, d.score, d.label
            )
            .unwrap();
            let cov = d.cov_or_zero();
            match arity {
                CovArity::None => {}
                CovArity::Diag4 => {
                    for k in 0..4 {
                        write!(out, ",{}", cov[(k, k)]).unwrap();
                    }
                }
                CovArity::Full10 => {
                    for &(i, j) in &UPPER_TRI {
                        write!(out, ",{}", cov[(i, j)]).unwrap();
                    }
                }
            }
            out.push('\n');
        }
    }
    atomic_write(path, &out)
}

/// Load ground truth rows: `frame,id,x,y,w,h,label,visible`.
pub fn load_gt(path: &Path) -> Result<GtSequence> {
    let text = fs::read_to_string(path)?;
    let mut rows: Vec<(u32, GtBox)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(parse_err(
                path,
                line_no,
                format!("expected 8 fields, found {}", fields.len()),
            ));
        }
        let frame: u32 = parse_field(path, line_no, "frame", fields[0])?;
        let id: u64 = parse_field(path, line_no, "id", fields[1])?;
        if frame < 1 || id < 1 {
            return Err(parse_err(path, line_no, "frame and id start at 1"));
        }
        let x: f64 = parse_field(path, line_no, "x", fields[2])?;
        let y: f64 = parse_field(path, line_no, "y", fields[3])?;
        let w: f64 = parse_field(path, line_no, "w", fields[4])?;
        let h: f64 = parse_field(path, line_no, "h", fields[5])?;
        if !(w > 0.0 && h > 0.0) || !(x.is_finite() && y.is_finite()) {
            return Err(parse_err(path, line_no, "need finite x, y and positive w, h"));
        }
        let label: u32 = parse_field(path, line_no, "label", fields[6])?;
        let visible: u8 = parse_field(path, line_no, "visible", fields[7])?;
        rows.push((
            frame,
            GtBox {
                id,
                bbox: BoxTlbr::from_xywh(x, y, w, h),
                label,
                visible: visible != 0,
            },
        ));
    }
    rows.sort_by_key(|(frame, _)| *frame);
    let mut seq: GtSequence = Vec::new();
    for (frame, b) in rows {
        match seq.last_mut() {
            Some(f) if f.frame == frame => f.boxes.push(b),
            _ => seq.push(GtFrame {
                frame,
                boxes: vec![b],
            }),
        }
    }
    Ok(seq)
}

pub fn write_gt(path: &Path, gt: &[GtFrame]) -> Result<()> {
    let mut out = String::from("# gt frame,id,x,y,w,h,label,visible\n");
    for frame in gt {
        for b in &frame.boxes {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                frame.frame,
                b.id,
                b.bbox.x1,
                b.bbox.y1,
                b.bbox.width(),
                b.bbox.height(),
                b.label,
                u8::from(b.visible)
            )
            .unwrap();
        }
    }
    atomic_write(path, &out)
}

/// Write tracker output in MOT-challenge column order, sorted (frame, id).
pub fn write_results(path: &Path, results: &[FrameResult]) -> Result<()> {
    let mut out = String::from("# results frame,id,x,y,w,h,score,label,-1,-1\n");
    let mut rows: Vec<(u32, &TrackOutput)> = results
        .iter()
        .flat_map(|f| f.outputs.iter().map(move |o| (f.frame, o)))
        .collect();
    rows.sort_by_key(|a| (a.0, a.1.id));
    for (frame, o) in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},-1,-1",
            frame,
            o.id,
            o.bbox.x1,
            o.bbox.y1,
            o.bbox.width(),
            o.bbox.height(),
            o.score,
            o.label
        )
        .unwrap();
    }
    atomic_write(path, &out)
}

pub fn load_results(path: &Path) -> Result<Vec<FrameResult>> {
    let text = fs::read_to_string(path)?;
    let mut rows: Vec<(u32, TrackOutput)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(parse_err(
                path,
                line_no,
                format!("expected 10 fields, found {}", fields.len()),
            ));
        }
        let frame: u32 = parse_field(path, line_no, "frame", fields[0])?;
        let id: u64 = parse_field(path, line_no, "id", fields[1])?;
        let x: f64 = parse_field(path, line_no, "x", fields[2])?;
        let y: f64 = parse_field(path, line_no, "y", fields[3])?;
        let w: f64 = parse_field(path, line_no, "w", fields[4])?;
        let h: f64 = parse_field(path, line_no, "h", fields[5])?;
        let score: f64 = parse_field(path, line_no, "score", fields[6])?;
        let label: u32 = parse_field(path, line_no, "label", fields[7])?;
        if w < 0.0 || h < 0.0 {
            return Err(parse_err(path, line_no, "negative box size"));
        }
        rows.push((
            frame,
            TrackOutput {
                id,
                bbox: BoxTlbr::from_xywh(x, y, w, h),
                score,
                label,
            },
        ));
    }
    rows.sort_by_key(|a| (a.0, a.1.id));
    let mut seq: Vec<FrameResult> = Vec::new();
    for (frame, o) in rows {
        match seq.last_mut() {
            Some(f) if f.frame == frame => f.outputs.push(o),
            _ => seq.push(FrameResult {
                frame,
                outputs: vec![o],
            }),
        }
    }
    Ok(seq)
}

/// Everything needed to reproduce a run byte-for-byte.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub params: serde_json::Value,
    #[serde(default)]
    pub stats: BTreeMap<String, serde_json::Value>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        Self {
            tool: "covtrack".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            params: serde_json::Value::Null,
            stats: BTreeMap::new(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Config(format!("manifest serialization: {e}")))?;
        text.push('\n');
        atomic_write(path, &text)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| parse_err(path, e.line(), e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn det(frame_x: f64, cov: Option<Matrix4<f64>>) -> GaussianBox {
        GaussianBox {
            mean: BoxTlbr::from_xywh(frame_x, 20.0, 30.0, 40.0),
            cov,
            score: 0.9,
            label: 2,
        }
    }

    #[test]
    fn empty_file_with_header_loads_empty() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("dets.csv");
        fs::write(&path, "# cov=diag4\n").unwrap();
        assert!(load_detections(&path).unwrap().is_empty());
    }

    #[test]
    fn diag4_roundtrip_bit_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("dets.csv");
        let mut cov = Matrix4::zeros();
        for k in 0..4 {
            cov[(k, k)] = 0.1 + k as f64 * std::f64::consts::PI;
        }
        let seq = vec![FrameDetections {
            frame: 3,
            dets: vec![det(10.123456789012345, Some(cov))],
        }];
        write_detections(&path, &seq, CovArity::Diag4).unwrap();
        let loaded = load_detections(&path).unwrap();
        assert_eq!(loaded, seq);
        // idempotent bytes
        let bytes1 = fs::read(&path).unwrap();
        write_detections(&path, &loaded, CovArity::Diag4).unwrap();
        assert_eq!(bytes1, fs::read(&path).unwrap());
    }

    #[test]
    fn full10_reconstructs_symmetric_source() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("dets.csv");
        let mut cov = Matrix4::new(
            4.0, 1.0, 0.5, 0.0, //
            1.0, 3.0, 0.2, 0.1, //
            0.5, 0.2, 2.0, 0.3, //
            0.0, 0.1, 0.3, 1.5,
        );
        cov *= 1.000000001; // exercise non-trivial decimals
        let seq = vec![FrameDetections {
            frame: 1,
            dets: vec![det(0.0, Some(cov))],
        }];
        write_detections(&path, &seq, CovArity::Full10).unwrap();
        let loaded = load_detections(&path).unwrap();
        assert_eq!(loaded[0].dets[0].cov.unwrap(), cov);
    }

    #[test]
    fn cov_none_loads_absent() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("dets.csv");
        fs::write(&path, "# cov=none\n1,0,0,30,40,0.5,0\n").unwrap();
        let loaded = load_detections(&path).unwrap();
        assert_eq!(loaded[0].dets[0].cov, None);
    }

    #[test]
    fn rows_sorted_by_frame_on_load() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("dets.csv");
        fs::write(
            &path,
            "# cov=none\n5,0,0,30,40,0.5,0\n2,0,0,30,40,0.5,0\n5,50,0,80,40,0.5,0\n",
        )
        .unwrap();
        let loaded = load_detections(&path).unwrap();
        assert_eq!(loaded.len(), 2);
        assert_eq!(loaded[0].frame, 2);
        assert_eq!(loaded[1].frame, 5);
        assert_eq!(loaded[1].dets.len(), 2);
    }

    #[test]
    fn malformed_rows_error_with_line_numbers() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("dets.csv");
        for (body, needle) in [
            ("1,0,0,30,40,0.5,0\n", "header"),
            ("# cov=weird\n", "arity"),
            ("# cov=none\n1,0,0,30\n", "expected 7 fields"),
            ("# cov=none\nx,0,0,30,40,0.5,0\n", "frame"),
            ("# cov=none\n1,0,0,30,40,1.5,0\n", "score"),
            ("# cov=none\n1,30,0,0,40,0.5,0\n", "box"),
            ("# cov=diag4\n1,0,0,30,40,0.5,0,1,1,1,-5\n", "positive semi-definite"),
        ] {
            fs::write(&path, body).unwrap();
            let err = load_detections(&path).unwrap_err().to_string();
            assert!(
                err.to_lowercase().contains(&needle.to_lowercase()),
                "body {body:?}: error {err:?} should mention {needle:?}"
            );
            if body.starts_with("# cov") && body.lines().count() > 1 {
                assert!(err.contains(":2:"), "line number missing in {err:?}");
            }
        }
    }

    #[test]
    fn tiny_negative_eigenvalue_is_clamped() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("dets.csv");
        fs::write(
            &path,
            format!("# cov=diag4\n1,0,0,30,40,0.5,0,1,1,1,{}\n", -1e-12),
        )
        .unwrap();
        let loaded = load_detections(&path).unwrap();
        let cov = loaded[0].dets[0].cov.unwrap();
        assert!(cov[(3, 3)] >= 0.0);
    }

    #[test]
    fn results_roundtrip_and_header_only() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("results.csv");
        write_results(&path, &[]).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with('#'));
        assert!(load_results(&path).unwrap().is_empty());

        let results = vec![
            FrameResult {
                frame: 1,
                outputs: vec![
                    TrackOutput {
                        id: 2,
                        bbox: BoxTlbr::from_xywh(1.5, 2.25, 30.0, 40.0),
                        score: 0.875,
                        label: 1,
                    },
                    TrackOutput {
                        id: 1,
                        bbox: BoxTlbr::from_xywh(100.0, 50.0, 20.0, 20.0),
                        score: 0.625,
                        label: 0,
                    },
                ],
            },
            FrameResult {
                frame: 2,
                outputs: vec![TrackOutput {
                    id: 1,
                    bbox: BoxTlbr::from_xywh(101.0, 50.0, 20.0, 20.0),
                    score: 0.625,
                    label: 0,
                }],
            },
        ];
        write_results(&path, &results).unwrap();
        let bytes1 = fs::read(&path).unwrap();
        let loaded = load_results(&path).unwrap();
        write_results(&path, &loaded).unwrap();
        assert_eq!(bytes1, fs::read(&path).unwrap());
        // outputs come back sorted by id within the frame
        assert_eq!(loaded[0].outputs[0].id, 1);
        assert_eq!(loaded[0].outputs[1].id, 2);
    }

    #[test]
    fn gt_roundtrip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("gt.csv");
        let gt = vec![GtFrame {
            frame: 1,
            boxes: vec![GtBox {
                id: 1,
                bbox: BoxTlbr::from_xywh(10.0, 20.0, 30.0, 40.0),
                label: 3,
                visible: false,
            }],
        }];
        write_gt(&path, &gt).unwrap();
        assert_eq!(load_gt(&path).unwrap(), gt);
    }

    #[test]
    fn random_bytes_never_panic() {
        use rand::{Rng, SeedableRng};
        let dir = tempdir().unwrap();
        let path = dir.path().join("fuzz.csv");
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..200 {
            let len = rng.gen_range(0..200);
            let bytes: Vec<u8> = (0..len).map(|_| rng.gen::<u8>()).collect();
            fs::write(&path, &bytes).unwrap();
            let _ = load_detections(&path);
            let _ = load_gt(&path);
            let _ = load_results(&path);
        }
    }

    #[test]
    fn manifest_roundtrip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("run.manifest.json");
        let mut m = Manifest::new("track");
        m.inputs.insert("detections".into(), "d.csv".into());
        m.outputs.insert("results".into(), "r.csv".into());
        m.params = serde_json::json!({"seed": 7});
        m.save(&path).unwrap();
        assert_eq!(Manifest::load(&path).unwrap(), m);
    }
}
