use serde::{Deserialize, Serialize};

use crate::geometry::{closest_point_on_segment, FieldModel, Pose2D, Vec2};

use super::Observation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LandmarkKind {
    LineSegment,
    GoalPost,
    TJunction,
    CenterCircle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Landmark {
    Point { kind: LandmarkKind, at: Vec2 },
    Line { from: Vec2, to: Vec2 },
}

impl Landmark {
    pub fn kind(&self) -> LandmarkKind {
        match self {
            Landmark::Point { kind, .. } => *kind,
            Landmark::Line { .. } => LandmarkKind::LineSegment,
        }
    }

    /// The point a robot at `from` would measure: the landmark itself, or the
    /// foot of the perpendicular for a line.
    pub fn seen_from(&self, from: Vec2) -> Vec2 {
        match *self {
            Landmark::Point { at, .. } => at,
            Landmark::Line { from: a, to: b } => closest_point_on_segment(from, a, b),
        }
    }
}

/// Static landmarks of the field in the team frame. Order is fixed: goal
/// posts, T-junctions, center mark, lines.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkMap {
    pub landmarks: Vec<Landmark>,
}

impl LandmarkMap {
    pub fn new(field: &FieldModel) -> Self {
        let hl = field.half_length();
        let hw = field.half_width();
        let gw = field.goal_width / 2.0;
        let aw = field.goal_area_width / 2.0;
        let ad = field.goal_area_depth;
        let point = |kind, x, y| Landmark::Point {
            kind,
            at: Vec2::new(x, y),
        };
        let line = |x0, y0, x1, y1| Landmark::Line {
            from: Vec2::new(x0, y0),
            to: Vec2::new(x1, y1),
        };
        let mut landmarks = Vec::with_capacity(22);
        for (x, y) in [(-hl, gw), (-hl, -gw), (hl, gw), (hl, -gw)] {
            landmarks.push(point(LandmarkKind::GoalPost, x, y));
        }
        for (x, y) in [(0.0, hw), (0.0, -hw), (-hl, aw), (-hl, -aw), (hl, aw), (hl, -aw)] {
            landmarks.push(point(LandmarkKind::TJunction, x, y));
        }
        landmarks.push(point(LandmarkKind::CenterCircle, 0.0, 0.0));
        landmarks.extend([
            line(-hl, hw, hl, hw),
            line(-hl, -hw, hl, -hw),
            line(-hl, -hw, -hl, hw),
            line(hl, -hw, hl, hw),
            line(0.0, -hw, 0.0, hw),
            line(-hl + ad, -aw, -hl + ad, aw),
            line(-hl, aw, -hl + ad, aw),
            line(-hl, -aw, -hl + ad, -aw),
            line(hl - ad, -aw, hl - ad, aw),
            line(hl, aw, hl - ad, aw),
            line(hl, -aw, hl - ad, -aw),
        ]);
        Self { landmarks }
    }

    /// Same map shifted by `offset`.
    pub fn translated(&self, offset: Vec2) -> Self {
        let landmarks = self
            .landmarks
            .iter()
            .map(|l| match *l {
                Landmark::Point { kind, at } => Landmark::Point {
                    kind,
                    at: at + offset,
                },
                Landmark::Line { from, to } => Landmark::Line {
                    from: from + offset,
                    to: to + offset,
                },
            })
            .collect();
        Self { landmarks }
    }

    /// Landmark of the observed kind whose predicted position under `pose` is
    /// nearest the observation. Ties go to the lowest index.
    pub fn associate(&self, pose: Pose2D, obs: &Observation) -> Option<(usize, Vec2)> {
        let seen = obs.local_point();
        let mut best: Option<(usize, Vec2, f64)> = None;
        for (i, lm) in self.landmarks.iter().enumerate() {
            if lm.kind() != obs.kind {
                continue;
            }
            let world = lm.seen_from(pose.position());
            let d = pose.inverse_transform_point(world).distance(seen);
            if best.is_none_or(|(_, _, bd)| d < bd) {
                best = Some((i, world, d));
            }
        }
        best.map(|(i, w, _)| (i, w))
    }
}
