//! SVG rendering of a single frame: boxes color-coded by evaluation outcome
//! plus 95% corner error ellipses for probabilistic detections.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::geometry::BoxTlbr;
use crate::io::atomic_write;
use crate::motmetrics::FrameEvents;
use crate::probdet::{corner_ellipses_95, GaussianBox};
use crate::sequence::GtFrame;
use crate::tracker::FrameResult;

/// Evaluation outcome of one rendered box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoxKind {
    /// matched, same identity as before
    Correct,
    FalsePositive,
    FalseNegative,
    /// matched but counted as an identity switch
    Switch,
    /// no ground truth available
    Plain,
}

impl BoxKind {
    fn color(&self) -> &'static str {
        match self {
            BoxKind::Correct => "#2e9e4f",
            BoxKind::FalsePositive => "#d42a2a",
            BoxKind::FalseNegative => "#f08c00",
            BoxKind::Switch => "#1f5fd0",
            BoxKind::Plain => "#888888",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SceneBox {
    pub bbox: BoxTlbr,
    pub kind: BoxKind,
    pub tag: Option<String>,
}

/// An ellipse with full axis lengths `a >= b` and orientation in radians.
#[derive(Debug, Clone, Copy)]
pub struct SceneEllipse {
    pub cx: f64,
    pub cy: f64,
    pub a: f64,
    pub b: f64,
    pub orientation: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Scene {
    pub width: f64,
    pub height: f64,
    pub boxes: Vec<SceneBox>,
    pub ellipses: Vec<SceneEllipse>,
}

impl Scene {
    pub fn new(width: f64, height: f64) -> Self {
        Self {
            width,
            height,
            boxes: Vec::new(),
            ellipses: Vec::new(),
        }
    }

    pub fn push_detection(&mut self, d: &GaussianBox, kind: BoxKind) {
        self.boxes.push(SceneBox {
            bbox: d.mean,
            kind,
            tag: None,
        });
        let (tl, br) = corner_ellipses_95(d);
        self.ellipses.push(SceneEllipse {
            cx: d.mean.x1,
            cy: d.mean.y1,
            a: tl.a,
            b: tl.b,
            orientation: tl.orientation,
        });
        self.ellipses.push(SceneEllipse {
            cx: d.mean.x2,
            cy: d.mean.y2,
            a: br.a,
            b: br.b,
            orientation: br.orientation,
        });
    }

    pub fn to_svg(&self) -> String {
        let mut s = String::new();
        writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {:.0} {:.0}">"#,
            self.width, self.height, self.width, self.height
        )
        .unwrap();
        writeln!(
            s,
            r##"<rect x="0" y="0" width="{:.0}" height="{:.0}" fill="#181818"/>"##,
            self.width, self.height
        )
        .unwrap();
        for b in &self.boxes {
            writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="{}" stroke-width="2"/>"#,
                b.bbox.x1,
                b.bbox.y1,
                b.bbox.width(),
                b.bbox.height(),
                b.kind.color()
            )
            .unwrap();
            if let Some(tag) = &b.tag {
                writeln!(
                    s,
                    r#"<text x="{:.2}" y="{:.2}" font-size="11" fill="{}">{}</text>"#,
                    b.bbox.x1 + 2.0,
                    (b.bbox.y1 - 3.0).max(10.0),
                    b.kind.color(),
                    tag
                )
                .unwrap();
            }
        }
        for e in &self.ellipses {
            writeln!(
                s,
                r##"<ellipse cx="{:.3}" cy="{:.3}" rx="{:.3}" ry="{:.3}" transform="rotate({:.3} {:.3} {:.3})" fill="none" stroke="#e8d44d" stroke-width="1"/>"##,
                e.cx,
                e.cy,
                e.a / 2.0,
                e.b / 2.0,
                e.orientation.to_degrees(),
                e.cx,
                e.cy
            )
            .unwrap();
        }
        s.push_str("</svg>\n");
        s
    }
}

/// Scene for one frame of raw detections (no evaluation available).
pub fn detections_scene(
    width: f64,
    height: f64,
    dets: &[GaussianBox],
) -> Scene {
    let mut scene = Scene::new(width, height);
    for d in dets {
        scene.push_detection(d, BoxKind::Plain);
    }
    scene
}

/// Scene for one frame of tracker results against ground truth, color-coded
/// from the CLEAR MOT events of that frame: red false positives, orange false
/// negatives, blue identity switches, green correct matches.
pub fn results_scene(
    width: f64,
    height: f64,
    results: &FrameResult,
    gt: Option<(&GtFrame, &FrameEvents)>,
) -> Scene {
    let mut scene = Scene::new(width, height);
    match gt {
        None => {
            for o in &results.outputs {
                scene.boxes.push(SceneBox {
                    bbox: o.bbox,
                    kind: BoxKind::Plain,
                    tag: Some(format!("id {}", o.id)),
                });
            }
        }
        Some((gt_frame, events)) => {
            for o in &results.outputs {
                let kind = if events.false_positives.contains(&o.id) {
                    BoxKind::FalsePositive
                } else if events.switched.iter().any(|&(_, t)| t == o.id) {
                    BoxKind::Switch
                } else {
                    BoxKind::Correct
                };
                scene.boxes.push(SceneBox {
                    bbox: o.bbox,
                    kind,
                    tag: Some(format!("id {}", o.id)),
                });
            }
            for b in &gt_frame.boxes {
                if events.false_negatives.contains(&b.id) {
                    scene.boxes.push(SceneBox {
                        bbox: b.bbox,
                        kind: BoxKind::FalseNegative,
                        tag: Some(format!("gt {}", b.id)),
                    });
                }
            }
        }
    }
    scene
}

pub fn render_svg(path: &Path, scene: &Scene) -> Result<()> {
    atomic_write(path, &scene.to_svg())
}
