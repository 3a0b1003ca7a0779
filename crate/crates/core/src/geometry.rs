//! Axis-aligned box arithmetic, overlap measures, and coordinate conversion
//! with first-order covariance propagation.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::symmetrize;

/// Boxes thinner than this (px) are rejected by the tlbr -> cah conversion
/// instead of producing an exploding aspect-ratio variance.
pub const MIN_BOX_EXTENT: f64 = 1e-3;

/// Box as top-left and bottom-right corner pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxTlbr {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl BoxTlbr {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self> {
        let b = Self { x1, y1, x2, y2 };
        if !b.is_valid() {
            return Err(Error::InvalidBox(format!(
                "[{x1}, {y1}, {x2}, {y2}] must be finite with x2 >= x1, y2 >= y1"
            )));
        }
        Ok(b)
    }

    /// Construct without validation; intended for literals known to be valid.
    pub fn from_xywh(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self {
            x1: x,
            y1: y,
            x2: x + w,
            y2: y + h,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.x1.is_finite()
            && self.y1.is_finite()
            && self.x2.is_finite()
            && self.y2.is_finite()
            && self.x2 >= self.x1
            && self.y2 >= self.y1
    }

    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn as_vector(&self) -> Vector4<f64> {
        Vector4::new(self.x1, self.y1, self.x2, self.y2)
    }

    pub fn from_vector(v: &Vector4<f64>) -> Self {
        Self {
            x1: v[0],
            y1: v[1],
            x2: v[2],
            y2: v[3],
        }
    }

    /// Swap inverted corners so the box becomes valid.
    pub fn corner_sorted(&self) -> Self {
        Self {
            x1: self.x1.min(self.x2),
            y1: self.y1.min(self.y2),
            x2: self.x1.max(self.x2),
            y2: self.y1.max(self.y2),
        }
    }
}

/// Box as center position, aspect ratio (w/h) and height.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxCah {
    pub cx: f64,
    pub cy: f64,
    pub a: f64,
    pub h: f64,
}

impl BoxCah {
    pub fn to_tlbr(&self) -> BoxTlbr {
        let w = self.a * self.h;
        BoxTlbr {
            x1: self.cx - w / 2.0,
            y1: self.cy - self.h / 2.0,
            x2: self.cx + w / 2.0,
            y2: self.cy + self.h / 2.0,
        }
    }
}

/// Intersection over union. Zero for disjoint or fully degenerate inputs.
pub fn iou(b1: &BoxTlbr, b2: &BoxTlbr) -> f64 {
    let iw = (b1.x2.min(b2.x2) - b1.x1.max(b2.x1)).max(0.0);
    let ih = (b1.y2.min(b2.y2) - b1.y1.max(b2.y1)).max(0.0);
    let inter = iw * ih;
    let union = b1.area() + b2.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Generalized IoU: IoU minus the fraction of the enclosing hull not covered
/// by the union. Ranges over [-1, 1]; equals IoU when one box contains the other.
pub fn giou(b1: &BoxTlbr, b2: &BoxTlbr) -> f64 {
    let iw = (b1.x2.min(b2.x2) - b1.x1.max(b2.x1)).max(0.0);
    let ih = (b1.y2.min(b2.y2) - b1.y1.max(b2.y1)).max(0.0);
    let inter = iw * ih;
    let union = b1.area() + b2.area() - inter;
    let hull_w = b1.x2.max(b2.x2) - b1.x1.min(b2.x1);
    let hull_h = b1.y2.max(b2.y2) - b1.y1.min(b2.y1);
    let hull = hull_w * hull_h;
    if hull <= 0.0 {
        return 0.0;
    }
    let iou_term = if union <= 0.0 { 0.0 } else { inter / union };
    iou_term - (hull - union) / hull
}

/// Jacobian of (x1,y1,x2,y2) -> (cx,cy,a,h) evaluated at a box of size w x h.
fn cah_jacobian(w: f64, h: f64) -> Matrix4<f64> {
    Matrix4::new(
        0.5,
        0.0,
        0.5,
        0.0, //
        0.0,
        0.5,
        0.0,
        0.5, //
        -1.0 / h,
        w / (h * h),
        1.0 / h,
        -w / (h * h), //
        0.0,
        -1.0,
        0.0,
        1.0,
    )
}

/// Convert a corner-parameterized box and its covariance to the
/// center/aspect/height parameterization.
///
/// The mean transforms exactly; the covariance is propagated through the
/// nonlinear aspect-ratio map by first-order linearization Sigma' = J Sigma J^T
/// (symmetrized afterwards). Boxes with height or width below
/// [`MIN_BOX_EXTENT`] are rejected.
pub fn tlbr_to_cah_with_cov(
    mean: &BoxTlbr,
    cov: &Matrix4<f64>,
) -> Result<(BoxCah, Matrix4<f64>)> {
    let w = mean.width();
    let h = mean.height();
    if h <= MIN_BOX_EXTENT || w <= MIN_BOX_EXTENT {
        return Err(Error::DegenerateBox {
            got: h.min(w),
            min: MIN_BOX_EXTENT,
        });
    }
    let cah = BoxCah {
        cx: (mean.x1 + mean.x2) / 2.0,
        cy: (mean.y1 + mean.y2) / 2.0,
        a: w / h,
        h,
    };
    let j = cah_jacobian(w, h);
    let propagated = symmetrize(&(j * cov * j.transpose()));
    Ok((cah, propagated))
}
