//! Per-frame detection and ground-truth containers.

use std::collections::BTreeMap;

use crate::geometry::BoxTlbr;
use crate::probdet::GaussianBox;

/// Detections of one frame, in detector output order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameDetections {
    pub frame: u32,
    pub dets: Vec<GaussianBox>,
}

/// Ordered per-frame detection sets.
pub type DetectionSequence = Vec<FrameDetections>;

/// One annotated ground-truth object in one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct GtBox {
    pub id: u64,
    pub bbox: BoxTlbr,
    pub label: u32,
    pub visible: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GtFrame {
    pub frame: u32,
    pub boxes: Vec<GtBox>,
}

/// Ordered per-frame ground-truth annotations.
pub type GtSequence = Vec<GtFrame>;

/// Expand a sparse sequence to cover every frame of `1..=last`, inserting
/// empty frames where nothing was recorded.
pub fn densify_detections(seq: &[FrameDetections], last: u32) -> DetectionSequence {
    let by_frame: BTreeMap<u32, &FrameDetections> = seq.iter().map(|f| (f.frame, f)).collect();
    (1..=last)
        .map(|frame| {
            by_frame
                .get(&frame)
                .map(|f| (*f).clone())
                .unwrap_or(FrameDetections {
                    frame,
                    dets: Vec::new(),
                })
        })
        .collect()
}

pub fn max_frame_of_gt(gt: &[GtFrame]) -> Option<u32> {
    gt.iter().map(|f| f.frame).max()
}

pub fn max_frame_of_detections(seq: &[FrameDetections]) -> Option<u32> {
    seq.iter().map(|f| f.frame).max()
}
