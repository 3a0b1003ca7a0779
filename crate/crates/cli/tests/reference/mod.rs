//! Independent re-implementation of the two-stage baseline contract, written
//! against the documented pipeline rather than the tracker source. Used as
//! the equivalence oracle for the all-extensions-off configuration.

use covtrack::assignment::{hungarian, CostMatrix, FORBIDDEN};
use covtrack::geometry::{iou, tlbr_to_cah_with_cov, BoxTlbr, MIN_BOX_EXTENT};
use covtrack::kalman::{kf_init, kf_predict, kf_project, kf_update, KfState};
use covtrack::probdet::GaussianBox;
use covtrack::sequence::FrameDetections;
use covtrack::tracker::{FrameResult, TrackOutput, TrackerConfig};

#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    Fresh,     // spawned, not yet confirmed
    Confirmed, // emitted while updated
    Coasting,  // missed at least one frame
}

struct RefTrack {
    id: u64,
    kf: KfState,
    det: GaussianBox,
    phase: Phase,
    missed: u32,
    streak: u32,
}

fn current_box(kf: &KfState) -> BoxTlbr {
    let (mut c, _) = kf_project(kf);
    c.a = c.a.max(MIN_BOX_EXTENT);
    c.h = c.h.max(MIN_BOX_EXTENT);
    c.to_tlbr()
}

fn assign(
    tracks: &[RefTrack],
    pool: &[usize],
    dets: &[GaussianBox],
    gate: f64,
) -> (Vec<(usize, usize)>, Vec<usize>, Vec<usize>) {
    let cost = CostMatrix::from_fn(pool.len(), dets.len(), |r, c| {
        let t = &tracks[pool[r]];
        let overlap = iou(&current_box(&t.kf), &dets[c].mean);
        if t.det.label != dets[c].label || overlap <= 0.0 {
            FORBIDDEN
        } else {
            1.0 - overlap
        }
    });
    let a = hungarian(&cost, gate);
    (
        a.pairs.iter().map(|&(r, c)| (pool[r], c)).collect(),
        a.unmatched_rows.iter().map(|&r| pool[r]).collect(),
        a.unmatched_cols,
    )
}

/// Run the baseline (all extensions disabled) over a detection sequence.
pub fn run_baseline(frames: &[FrameDetections], cfg: &TrackerConfig) -> Vec<FrameResult> {
    assert!(
        !cfg.enable_kfcov && !cfg.enable_ellipse && !cfg.enable_relax && !cfg.enable_greedy,
        "reference covers the baseline configuration only"
    );
    let mut tracks: Vec<RefTrack> = Vec::new();
    let mut next_id = 1u64;
    let mut results = Vec::new();

    for (step, frame) in frames.iter().enumerate() {
        let usable: Vec<GaussianBox> = frame
            .dets
            .iter()
            .filter(|d| d.mean.width() > MIN_BOX_EXTENT && d.mean.height() > MIN_BOX_EXTENT)
            .cloned()
            .collect();
        let high: Vec<GaussianBox> = usable
            .iter()
            .filter(|d| d.score >= cfg.score_high)
            .cloned()
            .collect();
        let low: Vec<GaussianBox> = usable
            .iter()
            .filter(|d| d.score >= cfg.score_low && d.score < cfg.score_high)
            .cloned()
            .collect();

        for t in tracks.iter_mut() {
            t.kf = kf_predict(&t.kf, &cfg.kf);
        }

        let everyone: Vec<usize> = (0..tracks.len()).collect();
        let (matches1, unmatched1, spawn_candidates) =
            assign(&tracks, &everyone, &high, cfg.match_thr_1);
        let second_pool: Vec<usize> = unmatched1
            .iter()
            .copied()
            .filter(|&t| tracks[t].phase != Phase::Coasting)
            .collect();
        let (matches2, _, _) = assign(&tracks, &second_pool, &low, cfg.match_thr_2);

        let mut assigned: Vec<(usize, GaussianBox)> = Vec::new();
        assigned.extend(matches1.iter().map(|&(t, c)| (t, high[c].clone())));
        assigned.extend(matches2.iter().map(|&(t, c)| (t, low[c].clone())));

        for (idx, det) in &assigned {
            let (z, _) = tlbr_to_cah_with_cov(&det.mean, &det.cov_or_zero()).unwrap();
            let t = &mut tracks[*idx];
            t.kf = kf_update(&t.kf, &z, None, &cfg.kf);
            t.det = det.clone();
            t.streak += 1;
            t.missed = 0;
            t.phase = if t.phase == Phase::Fresh && t.streak < 2 {
                Phase::Fresh
            } else {
                Phase::Confirmed
            };
        }

        let aged = tracks.len();
        for &c in &spawn_candidates {
            let det = high[c].clone();
            let (z, _) = tlbr_to_cah_with_cov(&det.mean, &det.cov_or_zero()).unwrap();
            tracks.push(RefTrack {
                id: next_id,
                kf: kf_init(&z, None, &cfg.kf),
                det,
                phase: if step == 0 { Phase::Confirmed } else { Phase::Fresh },
                missed: 0,
                streak: 1,
            });
            next_id += 1;
        }

        let updated: Vec<usize> = assigned.iter().map(|a| a.0).collect();
        let mut keep = vec![true; tracks.len()];
        for (i, slot) in keep.iter_mut().enumerate().take(aged) {
            if updated.contains(&i) {
                continue;
            }
            let t = &mut tracks[i];
            t.missed += 1;
            match t.phase {
                Phase::Fresh => *slot = false,
                Phase::Confirmed => t.phase = Phase::Coasting,
                Phase::Coasting => {
                    if t.missed > cfg.max_lost {
                        *slot = false;
                    }
                }
            }
        }
        let mut alive = keep.iter();
        tracks.retain(|_| *alive.next().unwrap());

        let mut outputs: Vec<TrackOutput> = tracks
            .iter()
            .filter(|t| t.phase == Phase::Confirmed && t.missed == 0)
            .map(|t| TrackOutput {
                id: t.id,
                bbox: current_box(&t.kf),
                score: t.det.score,
                label: t.det.label,
            })
            .collect();
        outputs.sort_by_key(|o| o.id);
        results.push(FrameResult {
            frame: frame.frame,
            outputs,
        });
    }
    results
}
