//! Uncertainty-aware multi-object tracking over Gaussian bounding-box detections.
//!
//! Detections arrive as 4-D Gaussians over `[x1, y1, x2, y2]` corner coordinates.
//! On top of a two-stage score-split tracking-by-detection baseline, four
//! independently toggleable extensions consume the covariance information:
//!
//! * measurement covariance injected into the Kalman filter update,
//! * confidence-ellipse filtering of high-uncertainty detections,
//! * box relaxation (ellipse-extremity enlargement) with GIoU re-matching,
//! * entropy-ordered greedy matching in the relaxed stage.
//!
//! The crate also ships the fusion (covariance intersection NMS), proper
//! scoring rules (NLL, energy score, sample-IoU), CLEAR MOT / IDF1 evaluation,
//! a deterministic synthetic scenario generator, and the file formats used by
//! the `covtrack` CLI.

pub mod assignment;
pub mod error;
pub mod geometry;
pub mod io;
pub mod kalman;
pub(crate) mod linalg;
pub mod motmetrics;
pub mod probdet;
pub mod scoring;
pub mod sequence;
pub mod svg;
pub mod synth;
pub mod tracker;

pub use assignment::{greedy_by_priority, giou_cost, hungarian, iou_cost, Assignment, CostMatrix};
pub use error::{Error, Result};
pub use geometry::{giou, iou, tlbr_to_cah_with_cov, BoxCah, BoxTlbr};
pub use kalman::{kf_init, kf_predict, kf_project, kf_update, KfParams, KfState};
pub use motmetrics::{clear_mot, idf1, multiclass_mean, MotTally};
pub use probdet::{
    corner_ellipses_95, ellipse_filter, fuse_ifci, gaussian_entropy, prob_nms, relax_box,
    sample_stats, CornerEllipse, GaussianBox,
};
pub use scoring::{energy_score, nll, sample_iou_score, ScoreReport};
pub use sequence::{DetectionSequence, FrameDetections, GtBox, GtFrame, GtSequence};
pub use synth::{generate, scenario_low_overlap_crossing, ObjectSpec, ScenarioSpec};
pub use tracker::{run_sequence, FrameResult, TrackOutput, Tracker, TrackerConfig};
