//! Probabilistic detections: entropy, corner error ellipses, ellipse-based
//! filtering, box relaxation, sample statistics, NMS clustering and
//! covariance-intersection fusion.

use nalgebra::{Matrix2, Matrix4, Vector4};

use crate::error::{Error, Result};
use crate::geometry::{iou, BoxTlbr};
use crate::linalg::{invert_spd, symmetrize, EPS_DET, EPS_REG};

/// A detection whose corner coordinates follow a 4-D Gaussian.
///
/// `cov` is over `(x1, y1, x2, y2)` in px^2. `None` means the producing
/// detector reported no covariance; distribution-level operations treat that
/// as a point mass (zero covariance).
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBox {
    pub mean: BoxTlbr,
    pub cov: Option<Matrix4<f64>>,
    pub score: f64,
    pub label: u32,
}

impl GaussianBox {
    pub fn new(mean: BoxTlbr, cov: Matrix4<f64>, score: f64, label: u32) -> Self {
        Self {
            mean,
            cov: Some(cov),
            score,
            label,
        }
    }

    /// A detection with no covariance information.
    pub fn deterministic(mean: BoxTlbr, score: f64, label: u32) -> Self {
        Self {
            mean,
            cov: None,
            score,
            label,
        }
    }

    pub fn cov_or_zero(&self) -> Matrix4<f64> {
        self.cov.unwrap_or_else(Matrix4::zeros)
    }

    /// Marginal 2x2 covariance of the top-left corner.
    pub fn corner_cov_tl(&self) -> Matrix2<f64> {
        let c = self.cov_or_zero();
        c.fixed_view::<2, 2>(0, 0).into_owned()
    }

    /// Marginal 2x2 covariance of the bottom-right corner.
    pub fn corner_cov_br(&self) -> Matrix2<f64> {
        let c = self.cov_or_zero();
        c.fixed_view::<2, 2>(2, 2).into_owned()
    }
}

/// 95% error ellipse of a 2-D marginal: full major/minor axis lengths (px)
/// and the major-axis orientation in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CornerEllipse {
    pub a: f64,
    pub b: f64,
    pub orientation: f64,
}

/// Chi-square(2 dof) 0.95 quantile. For two degrees of freedom the CDF is
/// 1 - exp(-q/2), so the quantile has the closed form -2 ln(0.05).
pub fn chi2_quantile_95() -> f64 {
    -2.0 * 0.05f64.ln()
}

/// Differential entropy of the detection's 4-D Gaussian, in nats.
///
/// H = 1/2 ln((2 pi e)^4 det Sigma); the determinant is floored at a small
/// constant so point-mass detections stay comparable.
pub fn gaussian_entropy(d: &GaussianBox) -> f64 {
    let det = d.cov_or_zero().determinant().max(EPS_DET);
    2.0 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln() + 0.5 * det.ln()
}

fn ellipse_from_block(m: &Matrix2<f64>) -> CornerEllipse {
    let a = m[(0, 0)];
    let c = m[(1, 1)];
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    let half_tr = 0.5 * (a + c);
    let disc = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let l1 = (half_tr + disc).max(0.0);
    let l2 = (half_tr - disc).max(0.0);
    let q = chi2_quantile_95();
    let orientation = if disc <= 0.0 || (b == 0.0 && a >= c) {
        0.0
    } else {
        0.5 * (2.0 * b).atan2(a - c)
    };
    CornerEllipse {
        a: 2.0 * (q * l1).sqrt(),
        b: 2.0 * (q * l2).sqrt(),
        orientation,
    }
}

/// 95% error ellipses of the top-left and bottom-right corner marginals.
pub fn corner_ellipses_95(d: &GaussianBox) -> (CornerEllipse, CornerEllipse) {
    (
        ellipse_from_block(&d.corner_cov_tl()),
        ellipse_from_block(&d.corner_cov_br()),
    )
}

/// The per-detection condition behind [`ellipse_filter`]. Boxes without
/// positive extent cannot pass.
pub fn passes_ellipse_filter(d: &GaussianBox, tau: f64) -> bool {
    if d.mean.width() <= 0.0 || d.mean.height() <= 0.0 {
        return false;
    }
    let (tl, br) = corner_ellipses_95(d);
    tl.a.max(br.a) <= tau * d.mean.width() && tl.b.max(br.b) <= tau * d.mean.height()
}

/// Keep detections whose corner error ellipses are small relative to the box:
/// max major axis <= tau * width and max minor axis <= tau * height.
/// Input order is preserved.
pub fn ellipse_filter(dets: &[GaussianBox], tau: f64) -> Vec<GaussianBox> {
    dets.iter()
        .filter(|d| passes_ellipse_filter(d, tau))
        .cloned()
        .collect()
}

/// Enlarge the mean box out to the axis-aligned extremities of its corner
/// error ellipses. The extent of the 95% ellipse along axis k is
/// sqrt(q * Sigma_corner[k, k]), which is exact for the true ellipse.
pub fn relax_box(d: &GaussianBox) -> BoxTlbr {
    let c = d.cov_or_zero();
    let q = chi2_quantile_95();
    let ext = |k: usize| (q * c[(k, k)].max(0.0)).sqrt();
    BoxTlbr {
        x1: d.mean.x1 - ext(0),
        y1: d.mean.y1 - ext(1),
        x2: d.mean.x2 + ext(2),
        y2: d.mean.y2 + ext(3),
    }
}

/// Unbiased sample mean and covariance of a set of 4-vectors.
pub fn sample_stats(samples: &[Vector4<f64>]) -> Result<(Vector4<f64>, Matrix4<f64>)> {
    if samples.len() < 2 {
        return Err(Error::InsufficientSamples {
            got: samples.len(),
            min: 2,
        });
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<Vector4<f64>>() / n;
    let mut cov = Matrix4::zeros();
    for s in samples {
        let d = s - mean;
        cov += d * d.transpose();
    }
    Ok((mean, cov / (n - 1.0)))
}

/// Non-iterative covariance-intersection weights from the member covariances.
///
/// With information matrices I_i = Sigma_i^-1 and I = sum of all I_i, the
/// weight of member i is proportional to det(I) - det(I - I_i) + det(I_i).
/// Weights are non-negative and normalized to sum to 1.
pub fn ifci_weights(covs: &[Matrix4<f64>]) -> Vec<f64> {
    let infos: Vec<Matrix4<f64>> = covs.iter().map(invert_spd).collect();
    let total: Matrix4<f64> = infos.iter().sum();
    let det_total = total.determinant();
    let nums: Vec<f64> = infos
        .iter()
        .map(|i| (det_total - (total - i).determinant() + i.determinant()).max(0.0))
        .collect();
    let sum: f64 = nums.iter().sum();
    if sum <= 0.0 || !sum.is_finite() {
        return vec![1.0 / covs.len() as f64; covs.len()];
    }
    nums.iter().map(|n| n / sum).collect()
}

/// Fuse same-label Gaussian boxes by improved fast covariance intersection.
///
/// The fused information matrix is the weighted sum of member information
/// matrices; the fused mean the corresponding combination of information
/// vectors. Singular member covariances are regularized before inversion.
/// A single member is returned unchanged; the fused score is the maximum
/// member score.
pub fn fuse_ifci(members: &[GaussianBox]) -> Result<GaussianBox> {
    let first = members.first().ok_or(Error::EmptyFusion)?;
    if members.iter().any(|m| m.label != first.label) {
        return Err(Error::MixedLabels);
    }
    if members.len() == 1 {
        return Ok(first.clone());
    }

    let covs: Vec<Matrix4<f64>> = members
        .iter()
        .map(|m| {
            let c = m.cov_or_zero();
            // Point masses enter fusion as tightly concentrated Gaussians.
            if c.determinant() <= 0.0 {
                c + Matrix4::identity() * EPS_REG
            } else {
                c
            }
        })
        .collect();
    let weights = ifci_weights(&covs);

    let mut fused_info = Matrix4::zeros();
    let mut info_mean = Vector4::zeros();
    for ((m, c), w) in members.iter().zip(&covs).zip(&weights) {
        let info = invert_spd(c);
        fused_info += info * *w;
        info_mean += info * m.mean.as_vector() * *w;
    }
    let fused_cov = symmetrize(&invert_spd(&fused_info));
    let fused_mean = fused_cov * info_mean;
    let score = members.iter().map(|m| m.score).fold(f64::MIN, f64::max);

    Ok(GaussianBox {
        mean: BoxTlbr::from_vector(&fused_mean).corner_sorted(),
        cov: Some(fused_cov),
        score,
        label: first.label,
    })
}

/// Greedy score-descending NMS clustering followed by covariance-intersection
/// fusion of each cluster instead of discarding the redundant members.
///
/// The highest-score unclaimed detection becomes a cluster center; every
/// unclaimed same-label detection with IoU >= `iou_thr` against the center
/// joins. Output is ordered by center score descending.
pub fn prob_nms(dets: &[GaussianBox], iou_thr: f64) -> Vec<GaussianBox> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| {
        dets[b]
            .score
            .partial_cmp(&dets[a].score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });

    let mut claimed = vec![false; dets.len()];
    let mut fused = Vec::new();
    for &center in &order {
        if claimed[center] {
            continue;
        }
        claimed[center] = true;
        let mut cluster = vec![dets[center].clone()];
        for j in 0..dets.len() {
            if claimed[j] || dets[j].label != dets[center].label {
                continue;
            }
            if iou(&dets[center].mean, &dets[j].mean) >= iou_thr {
                claimed[j] = true;
                cluster.push(dets[j].clone());
            }
        }
        // Clusters are non-empty and single-label by construction.
        fused.push(fuse_ifci(&cluster).expect("cluster fusion"));
    }
    fused
}
