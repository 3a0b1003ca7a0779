//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid box: {0}")]
    InvalidBox(String),

    #[error("box extent {got} px is below the {min} px minimum")]
    DegenerateBox { got: f64, min: f64 },

    #[error("need at least {min} samples, got {got}")]
    InsufficientSamples { got: usize, min: usize },

    #[error("matched lists differ in length: {gts} ground-truth boxes vs {dets} detections")]
    LengthMismatch { gts: usize, dets: usize },

    #[error("frame {frame} arrived out of order (previous frame was {last})")]
    OutOfOrderFrame { frame: u32, last: u32 },

    #[error("prediction frames [{pred_min}, {pred_max}] fall outside ground-truth range [{gt_min}, {gt_max}]")]
    FrameRangeMismatch {
        gt_min: u32,
        gt_max: u32,
        pred_min: u32,
        pred_max: u32,
    },

    #[error("fusion requires at least one member")]
    EmptyFusion,

    #[error("fusion members must share a single class label")]
    MixedLabels,

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
