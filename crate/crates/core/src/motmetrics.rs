//! CLEAR MOT accumulation (MOTA, FP, FN, ID switches) and trajectory-level
//! IDF1 against ground truth.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::assignment::{hungarian, CostMatrix, FORBIDDEN};
use crate::error::{Error, Result};
use crate::geometry::iou;
use crate::sequence::GtFrame;
use crate::tracker::FrameResult;

/// Accumulated CLEAR MOT counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MotTally {
    pub fp: u64,
    pub misses: u64,
    pub switches: u64,
    pub matches: u64,
    pub gt_count: u64,
}

impl MotTally {
    pub fn mota(&self) -> f64 {
        if self.gt_count == 0 {
            return 0.0;
        }
        1.0 - (self.fp + self.misses + self.switches) as f64 / self.gt_count as f64
    }
}

/// Per-frame correspondence events, used by the renderer.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrameEvents {
    pub frame: u32,
    /// matched (gt id, track id); `switched` marks pairs counted as ID switches
    pub matches: Vec<(u64, u64)>,
    pub switched: Vec<(u64, u64)>,
    /// unmatched track ids (false positives)
    pub false_positives: Vec<u64>,
    /// unmatched gt ids (false negatives)
    pub false_negatives: Vec<u64>,
}

fn check_frame_ranges(gt: &[GtFrame], pred: &[FrameResult]) -> Result<()> {
    let (Some(gt_min), Some(gt_max)) = (
        gt.iter().map(|f| f.frame).min(),
        gt.iter().map(|f| f.frame).max(),
    ) else {
        return Ok(());
    };
    let bad = pred
        .iter()
        .map(|f| f.frame)
        .filter(|&f| f < gt_min || f > gt_max)
        .collect::<Vec<_>>();
    if let (Some(&pmin), Some(&pmax)) = (bad.iter().min(), bad.iter().max()) {
        return Err(Error::FrameRangeMismatch {
            gt_min,
            gt_max,
            pred_min: pmin,
            pred_max: pmax,
        });
    }
    Ok(())
}

/// Frame-by-frame CLEAR MOT accumulation.
///
/// Correspondences from the previous frame persist while they still overlap at
/// `iou_thr`; the remainder is re-matched by minimum-cost assignment. An ID
/// switch is counted when a ground-truth object's matched track differs from
/// its most recent prior match (gaps included).
pub fn accumulate_events(
    gt: &[GtFrame],
    pred: &[FrameResult],
    iou_thr: f64,
) -> Result<(MotTally, Vec<FrameEvents>)> {
    check_frame_ranges(gt, pred)?;
    let pred_by_frame: BTreeMap<u32, &FrameResult> = pred.iter().map(|f| (f.frame, f)).collect();
    let gt_by_frame: BTreeMap<u32, &GtFrame> = gt.iter().map(|f| (f.frame, f)).collect();

    // iterate the full frame axis: sparse ground truth (frames with no
    // objects absent from the file) must still charge predictions there as FPs
    let first = gt.iter().map(|f| f.frame).min().unwrap_or(u32::MAX);
    let last = gt.iter().map(|f| f.frame).max().unwrap_or(0);
    let frames: Vec<u32> = if first <= last {
        (first..=last).collect()
    } else {
        pred.iter().map(|f| f.frame).collect()
    };

    let mut tally = MotTally::default();
    let mut events = Vec::with_capacity(frames.len());
    // correspondence carried frame to frame, and the last track ever matched per gt
    let mut current: BTreeMap<u64, u64> = BTreeMap::new();
    let mut last_matched: BTreeMap<u64, u64> = BTreeMap::new();

    let empty_gt = GtFrame::default();
    for frame in frames {
        let gt_frame = gt_by_frame.get(&frame).copied().unwrap_or(&empty_gt);
        let mut ev = FrameEvents {
            frame,
            ..FrameEvents::default()
        };
        let empty: &[crate::tracker::TrackOutput] = &[];
        let outputs = pred_by_frame
            .get(&frame)
            .map(|f| f.outputs.as_slice())
            .unwrap_or(empty);

        tally.gt_count += gt_frame.boxes.len() as u64;

        let mut gt_free: Vec<usize> = (0..gt_frame.boxes.len()).collect();
        let mut pred_free: Vec<usize> = (0..outputs.len()).collect();

        // keep still-valid correspondences
        let mut kept: Vec<(usize, usize)> = Vec::new();
        for (&gid, &tid) in current.iter() {
            let Some(gi) = gt_free
                .iter()
                .position(|&g| gt_frame.boxes[g].id == gid)
            else {
                continue;
            };
            let Some(pi) = pred_free.iter().position(|&p| outputs[p].id == tid) else {
                continue;
            };
            let g = gt_free[gi];
            let p = pred_free[pi];
            if iou(&gt_frame.boxes[g].bbox, &outputs[p].bbox) >= iou_thr {
                kept.push((g, p));
                gt_free.remove(gi);
                pred_free.remove(pi);
            }
        }

        // re-match the rest
        let cost = CostMatrix::from_fn(gt_free.len(), pred_free.len(), |r, c| {
            let v = iou(&gt_frame.boxes[gt_free[r]].bbox, &outputs[pred_free[c]].bbox);
            if v < iou_thr {
                FORBIDDEN
            } else {
                1.0 - v
            }
        });
        let assign = hungarian(&cost, 1.0 - iou_thr);
        let fresh: Vec<(usize, usize)> = assign
            .pairs
            .iter()
            .map(|&(r, c)| (gt_free[r], pred_free[c]))
            .collect();

        let mut next: BTreeMap<u64, u64> = BTreeMap::new();
        for &(g, p) in kept.iter().chain(&fresh) {
            let gid = gt_frame.boxes[g].id;
            let tid = outputs[p].id;
            if let Some(&prev) = last_matched.get(&gid) {
                if prev != tid {
                    tally.switches += 1;
                    ev.switched.push((gid, tid));
                }
            }
            last_matched.insert(gid, tid);
            next.insert(gid, tid);
            ev.matches.push((gid, tid));
            tally.matches += 1;
        }
        current = next;

        let matched_gt: BTreeSet<u64> = ev.matches.iter().map(|m| m.0).collect();
        let matched_tr: BTreeSet<u64> = ev.matches.iter().map(|m| m.1).collect();
        for b in &gt_frame.boxes {
            if !matched_gt.contains(&b.id) {
                ev.false_negatives.push(b.id);
                tally.misses += 1;
            }
        }
        for o in outputs {
            if !matched_tr.contains(&o.id) {
                ev.false_positives.push(o.id);
                tally.fp += 1;
            }
        }
        events.push(ev);
    }
    Ok((tally, events))
}

/// MOTA with its error counts; `iou_thr` defaults to 0.5 in the CLI.
pub fn clear_mot(gt: &[GtFrame], pred: &[FrameResult], iou_thr: f64) -> Result<(f64, MotTally)> {
    let (tally, _) = accumulate_events(gt, pred, iou_thr)?;
    Ok((tally.mota(), tally))
}

/// IDF1: global min-cost matching between ground-truth and predicted
/// trajectories, then 2 IDTP / (2 IDTP + IDFP + IDFN).
pub fn idf1(gt: &[GtFrame], pred: &[FrameResult], iou_thr: f64) -> Result<f64> {
    check_frame_ranges(gt, pred)?;
    let mut gt_ids: Vec<u64> = gt.iter().flat_map(|f| f.boxes.iter().map(|b| b.id)).collect();
    gt_ids.sort_unstable();
    gt_ids.dedup();
    let mut tr_ids: Vec<u64> = pred
        .iter()
        .flat_map(|f| f.outputs.iter().map(|o| o.id))
        .collect();
    tr_ids.sort_unstable();
    tr_ids.dedup();

    let gt_index: BTreeMap<u64, usize> = gt_ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let tr_index: BTreeMap<u64, usize> = tr_ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();

    let mut gt_total = 0u64;
    let mut tr_total = 0u64;
    let mut overlap = vec![vec![0u64; tr_ids.len()]; gt_ids.len()];
    let pred_by_frame: BTreeMap<u32, &FrameResult> = pred.iter().map(|f| (f.frame, f)).collect();
    for gt_frame in gt {
        gt_total += gt_frame.boxes.len() as u64;
        let Some(outputs) = pred_by_frame.get(&gt_frame.frame) else {
            continue;
        };
        for b in &gt_frame.boxes {
            for o in &outputs.outputs {
                if iou(&b.bbox, &o.bbox) >= iou_thr {
                    overlap[gt_index[&b.id]][tr_index[&o.id]] += 1;
                }
            }
        }
    }
    for f in pred {
        tr_total += f.outputs.len() as u64;
    }

    if gt_total + tr_total == 0 {
        return Ok(1.0);
    }
    if gt_ids.is_empty() || tr_ids.is_empty() {
        return Ok(0.0);
    }

    // maximize total overlap == minimize negated overlap
    let cost = CostMatrix::from_fn(gt_ids.len(), tr_ids.len(), |r, c| -(overlap[r][c] as f64));
    let assign = hungarian(&cost, f64::INFINITY);
    let idtp: u64 = assign.pairs.iter().map(|&(r, c)| overlap[r][c]).sum();
    let idfn = gt_total - idtp;
    let idfp = tr_total - idtp;
    Ok(2.0 * idtp as f64 / (2.0 * idtp as f64 + idfp as f64 + idfn as f64))
}

/// Unweighted mean across per-class metric values.
pub fn multiclass_mean(per_class: &[f64]) -> f64 {
    if per_class.is_empty() {
        return 0.0;
    }
    per_class.iter().sum::<f64>() / per_class.len() as f64
}

/// Per-class and class-averaged metrics for a tracked sequence.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: u32,
    pub mota: f64,
    pub idf1: f64,
    pub fp: u64,
    pub misses: u64,
    pub switches: u64,
    pub gt_count: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_class: Vec<ClassMetrics>,
    pub m_mota: f64,
    pub m_idf1: f64,
    pub overall: ClassMetricsTotals,
    pub iou_thr: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassMetricsTotals {
    pub mota: f64,
    pub idf1: f64,
    pub fp: u64,
    pub misses: u64,
    pub switches: u64,
    pub gt_count: u64,
}

fn filter_gt_by_label(gt: &[GtFrame], label: u32) -> Vec<GtFrame> {
    gt.iter()
        .map(|f| GtFrame {
            frame: f.frame,
            boxes: f.boxes.iter().filter(|b| b.label == label).cloned().collect(),
        })
        .collect()
}

fn filter_pred_by_label(pred: &[FrameResult], label: u32) -> Vec<FrameResult> {
    pred.iter()
        .map(|f| FrameResult {
            frame: f.frame,
            outputs: f
                .outputs
                .iter()
                .filter(|o| o.label == label)
                .cloned()
                .collect(),
        })
        .collect()
}

/// Evaluate class by class (classes present in the ground truth) and average.
pub fn evaluate(gt: &[GtFrame], pred: &[FrameResult], iou_thr: f64) -> Result<EvalReport> {
    let mut labels: Vec<u32> = gt
        .iter()
        .flat_map(|f| f.boxes.iter().map(|b| b.label))
        .collect();
    labels.sort_unstable();
    labels.dedup();

    let mut per_class = Vec::new();
    for &label in &labels {
        let g = filter_gt_by_label(gt, label);
        let p = filter_pred_by_label(pred, label);
        let (mota, tally) = clear_mot(&g, &p, iou_thr)?;
        per_class.push(ClassMetrics {
            label,
            mota,
            idf1: idf1(&g, &p, iou_thr)?,
            fp: tally.fp,
            misses: tally.misses,
            switches: tally.switches,
            gt_count: tally.gt_count,
        });
    }
    let (mota, tally) = clear_mot(gt, pred, iou_thr)?;
    let overall = ClassMetricsTotals {
        mota,
        idf1: idf1(gt, pred, iou_thr)?,
        fp: tally.fp,
        misses: tally.misses,
        switches: tally.switches,
        gt_count: tally.gt_count,
    };
    let motas: Vec<f64> = per_class.iter().map(|c| c.mota).collect();
    let idf1s: Vec<f64> = per_class.iter().map(|c| c.idf1).collect();
    Ok(EvalReport {
        m_mota: multiclass_mean(&motas),
        m_idf1: multiclass_mean(&idf1s),
        per_class,
        overall,
        iou_thr,
    })
}
