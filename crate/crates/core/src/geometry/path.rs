//! Polyline paths that walk around circular obstacles.
//!
//! An intersecting disc is passed on the shorter side: tangent from the
//! start, an arc approximated by a polygon circumscribing the disc, tangent
//! into the goal. Each polygon edge touches the disc only at its midpoint,
//! so the polyline never enters it.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{distance_to_segment, Vec2};

/// Maximum angle covered by one detour edge.
const MAX_ARC_STEP: f64 = PI / 8.0;
/// Relative radial slack added to every detour vertex.
const RADIAL_SLACK: f64 = 1e-6;
/// Discs closer than this factor of their radii sum are merged.
const MERGE_FACTOR: f64 = 1.1;
const MAX_DETOURS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disc {
    pub center: Vec2,
    pub radius: f64,
}

impl Disc {
    pub fn new(center: Vec2, radius: f64) -> Self {
        Self { center, radius }
    }

    fn contains(&self, p: Vec2) -> bool {
        p.distance(self.center) < self.radius
    }

    fn blocks(&self, a: Vec2, b: Vec2) -> bool {
        distance_to_segment(self.center, a, b) < self.radius
    }

    /// Smallest disc enclosing both.
    fn enclose(&self, other: &Disc) -> Disc {
        let d = self.center.distance(other.center);
        if d + other.radius <= self.radius {
            return *self;
        }
        if d + self.radius <= other.radius {
            return *other;
        }
        let radius = (d + self.radius + other.radius) / 2.0;
        let dir = (other.center - self.center)
            .normalized()
            .unwrap_or(Vec2::new(1.0, 0.0));
        Disc::new(self.center + dir * (radius - self.radius), radius)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedPath {
    pub points: Vec<Vec2>,
    /// The goal was inside an obstacle and was moved onto its boundary.
    pub truncated: bool,
}

impl PlannedPath {
    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| w[0].distance(w[1])).sum()
    }

    /// First vertex after the start, or the start itself for a degenerate path.
    pub fn next_waypoint(&self) -> Vec2 {
        self.points.get(1).copied().unwrap_or(self.points[0])
    }

    pub fn end(&self) -> Vec2 {
        *self.points.last().expect("path has at least one point")
    }
}

/// Plans a polyline from `start` to `goal` that stays outside every disc.
///
/// Discs that contain `start` are ignored since no path can leave them
/// collision-free. Overlapping discs are merged into an enclosing disc.
pub fn surround_path(start: Vec2, goal: Vec2, obstacles: &[Disc]) -> PlannedPath {
    let mut discs: Vec<Disc> = obstacles
        .iter()
        .copied()
        .filter(|d| d.radius > 0.0 && !d.contains(start))
        .collect();
    merge_overlapping(&mut discs);
    discs.retain(|d| !d.contains(start));

    let mut goal = goal;
    let mut truncated = false;
    // Merging can swallow the goal into a bigger disc, so repeat until free.
    for _ in 0..=discs.len() {
        let Some(blocking) = discs.iter().find(|d| d.contains(goal)) else {
            break;
        };
        let dir = (goal - blocking.center)
            .normalized()
            .or_else(|| (start - blocking.center).normalized())
            .unwrap_or(Vec2::new(1.0, 0.0));
        goal = blocking.center + dir * (blocking.radius * (1.0 + RADIAL_SLACK));
        truncated = true;
    }

    match route(start, goal, &discs) {
        Some(points) => PlannedPath { points, truncated },
        None => {
            // Interacting detours: retry around a single enclosing disc.
            let all = discs
                .iter()
                .skip(1)
                .fold(discs[0], |acc, d| acc.enclose(d));
            if all.contains(start) {
                return PlannedPath {
                    points: vec![start, goal],
                    truncated,
                };
            }
            let goal = if all.contains(goal) {
                let dir = (goal - all.center)
                    .normalized()
                    .unwrap_or(Vec2::new(1.0, 0.0));
                truncated = true;
                all.center + dir * (all.radius * (1.0 + RADIAL_SLACK))
            } else {
                goal
            };
            let points = route(start, goal, &[all]).unwrap_or_else(|| vec![start, goal]);
            PlannedPath { points, truncated }
        }
    }
}

fn merge_overlapping(discs: &mut Vec<Disc>) {
    'outer: loop {
        for i in 0..discs.len() {
            for j in (i + 1)..discs.len() {
                let (a, b) = (discs[i], discs[j]);
                if a.center.distance(b.center) < (a.radius + b.radius) * MERGE_FACTOR {
                    discs[i] = a.enclose(&b);
                    discs.remove(j);
                    continue 'outer;
                }
            }
        }
        return;
    }
}

/// Repeatedly detours around the first blocking disc of the first blocked
/// segment. `None` if the detour budget runs out.
fn route(start: Vec2, goal: Vec2, discs: &[Disc]) -> Option<Vec<Vec2>> {
    let mut points = vec![start, goal];
    for _ in 0..MAX_DETOURS {
        let mut blocked = None;
        'segments: for i in 0..points.len() - 1 {
            let (a, b) = (points[i], points[i + 1]);
            let mut first: Option<(f64, &Disc)> = None;
            for disc in discs.iter().filter(|d| d.blocks(a, b)) {
                let along = (disc.center - a).dot(b - a);
                if first.is_none_or(|(best, _)| along < best) {
                    first = Some((along, disc));
                }
            }
            if let Some((_, disc)) = first {
                blocked = Some((i, *disc));
                break 'segments;
            }
        }
        let Some((i, disc)) = blocked else {
            return Some(points);
        };
        let detour = detour(points[i], points[i + 1], &disc);
        points.splice(i + 1..i + 1, detour);
    }
    None
}

/// Detour vertices (exclusive of `a` and `b`) around `disc` on the shorter side.
fn detour(a: Vec2, b: Vec2, disc: &Disc) -> Vec<Vec2> {
    let left = side_detour(a, b, disc, 1.0);
    let right = side_detour(a, b, disc, -1.0);
    let length = |pts: &[Vec2]| {
        let mut total = 0.0;
        let mut prev = a;
        for &p in pts.iter().chain(std::iter::once(&b)) {
            total += prev.distance(p);
            prev = p;
        }
        total
    };
    if length(&right) < length(&left) {
        right
    } else {
        left
    }
}

/// `sign = 1` walks counter-clockwise around the disc center.
fn side_detour(a: Vec2, b: Vec2, disc: &Disc, sign: f64) -> Vec<Vec2> {
    let c = disc.center;
    let r = disc.radius;
    let tangent_offset = |p: Vec2| (r / p.distance(c).max(r)).min(1.0).acos();
    let phi_a = (a - c).angle();
    let phi_b = (b - c).angle();
    let start = phi_a + sign * tangent_offset(a);
    let end = phi_b - sign * tangent_offset(b);
    let sweep = (sign * (end - start)).rem_euclid(2.0 * PI);
    let steps = (sweep / MAX_ARC_STEP).ceil().max(1.0) as usize;
    let step = sweep / steps as f64;
    // Vertices sit on the tangent rays, so the first and last edges stay on
    // the far side of the tangent lines through `a` and `b`.
    let radius = r * (1.0 + RADIAL_SLACK) / (step / 2.0).cos();
    (0..=steps)
        .map(|k| c + Vec2::from_polar(radius, start + sign * step * k as f64))
        .collect()
}
