//! Field snapshots reconstructed from a trace.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::geometry::{classify_ball_region, FieldModel, Pose2D, Region, Vec2};
use crate::sim::{GamePhase, RobotId, Role, Team};
use crate::teamplay::Task;
use crate::trace::{RecordBody, Trace};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReplayError {
    #[error("time {at} s is outside the trace span [{start}, {end}] s")]
    OutOfRange { at: f64, start: f64, end: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotSnapshot {
    pub id: RobotId,
    pub team: Team,
    pub role: Role,
    pub pose: Pose2D,
    pub task: Option<Task>,
    pub base_task: Option<Task>,
    pub active: bool,
    pub fallen: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    /// Requested time.
    pub at: f64,
    /// Time of the tick record the poses come from.
    pub tick_time: f64,
    pub phase: GamePhase,
    pub score: [u32; 2],
    pub ball: Vec2,
    pub region: Region,
    pub robots: Vec<RobotSnapshot>,
}

/// State at `at`: poses from the last tick at or before `at`, with task
/// changes logged after that tick applied on top.
pub fn snapshot_at(trace: &Trace, at: f64) -> Result<Snapshot, ReplayError> {
    const EPS: f64 = 1e-9;
    let start = trace.records.first().map_or(0.0, |r| r.t);
    let end = trace.end_time();
    if !(at >= start - EPS && at <= end + EPS) {
        return Err(ReplayError::OutOfRange { at, start, end });
    }
    let roles: BTreeMap<RobotId, (Team, Role)> =
        trace.header.robots.iter().map(|r| (r.id, (r.team, r.role))).collect();
    let mut snap: Option<Snapshot> = None;
    for rec in trace.records.iter().take_while(|r| r.t <= at + EPS) {
        match &rec.body {
            RecordBody::Tick {
                phase,
                ball,
                score,
                robots,
                ..
            } => {
                snap = Some(Snapshot {
                    at,
                    tick_time: rec.t,
                    phase: *phase,
                    score: *score,
                    ball: *ball,
                    region: classify_ball_region(*ball, &trace.header.field),
                    robots: robots
                        .iter()
                        .map(|r| {
                            let (team, role) = roles.get(&r.id).copied().unwrap_or((Team::Home, Role::FieldPlayer));
                            RobotSnapshot {
                                id: r.id,
                                team,
                                role,
                                pose: r.pose,
                                task: r.task,
                                base_task: r.base_task,
                                active: r.active,
                                fallen: r.fallen,
                            }
                        })
                        .collect(),
                });
            }
            RecordBody::TaskChange {
                robot,
                to,
                base_to,
                ..
            } => {
                if let Some(r) = snap
                    .as_mut()
                    .and_then(|s| s.robots.iter_mut().find(|r| r.id == *robot))
                {
                    r.task = Some(*to);
                    r.base_task = Some(*base_to);
                }
            }
            _ => {}
        }
    }
    snap.ok_or(ReplayError::OutOfRange { at, start, end })
}

pub fn render_text(s: &Snapshot) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "t = {:.2} s (tick {:.2} s)  phase {:?}  score {}:{}",
        s.at, s.tick_time, s.phase, s.score[0], s.score[1]
    );
    let _ = writeln!(out, "ball ({:.2}, {:.2})  {:?}", s.ball.x, s.ball.y, s.region);
    for r in &s.robots {
        let task = match (r.task, r.base_task) {
            (Some(t), Some(b)) if t != b => format!("{t:?} (base {b:?})"),
            (Some(t), _) => format!("{t:?}"),
            _ => "-".into(),
        };
        let mut flags = String::new();
        if !r.active {
            flags.push_str(" penalized");
        }
        if r.fallen {
            flags.push_str(" fallen");
        }
        let _ = writeln!(
            out,
            "robot {:>2} {:<4} {:<11} ({:6.2}, {:6.2}, {:5.2})  {task}{flags}",
            r.id,
            format!("{:?}", r.team).to_lowercase(),
            format!("{:?}", r.role).to_lowercase(),
            r.pose.x,
            r.pose.y,
            r.pose.theta,
        );
    }
    out
}

/// Static top-down field diagram. One metre is 60 px.
pub fn render_svg(s: &Snapshot, field: &FieldModel) -> String {
    const PX: f64 = 60.0;
    const MARGIN: f64 = 0.7;
    let hl = field.half_length();
    let hw = field.half_width();
    let w = (2.0 * (hl + MARGIN)) * PX;
    let h = (2.0 * (hw + MARGIN)) * PX;
    let sx = |x: f64| (x + hl + MARGIN) * PX;
    let sy = |y: f64| (hw + MARGIN - y) * PX;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#
    );
    let _ = writeln!(out, r##"<rect width="100%" height="100%" fill="#2e7d32"/>"##);
    let line = r#"fill="none" stroke="white" stroke-width="3""#;
    let _ = writeln!(
        out,
        r#"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" {line}/>"#,
        sx(-hl),
        sy(hw),
        2.0 * hl * PX,
        2.0 * hw * PX
    );
    let _ = writeln!(out, r#"<line x1="{0:.1}" y1="{1:.1}" x2="{0:.1}" y2="{2:.1}" {line}/>"#, sx(0.0), sy(hw), sy(-hw));
    let _ = writeln!(
        out,
        r#"<circle cx="{:.1}" cy="{:.1}" r="{:.1}" {line}/>"#,
        sx(0.0),
        sy(0.0),
        field.center_circle_radius * PX
    );
    for sign in [-1.0, 1.0] {
        let front = sign * (hl - field.goal_area_depth);
        let half = field.goal_area_width / 2.0;
        let x0 = sx(front.min(sign * hl));
        let _ = writeln!(
            out,
            r#"<rect x="{x0:.1}" y="{:.1}" width="{:.1}" height="{:.1}" {line}/>"#,
            sy(half),
            field.goal_area_depth * PX,
            2.0 * half * PX
        );
        let gx = sx(sign * hl);
        let _ = writeln!(
            out,
            r#"<line x1="{gx:.1}" y1="{:.1}" x2="{gx:.1}" y2="{:.1}" stroke="yellow" stroke-width="6"/>"#,
            sy(field.goal_width / 2.0),
            sy(-field.goal_width / 2.0)
        );
    }
    for r in &s.robots {
        let colour = match r.team {
            Team::Home => "#1565c0",
            Team::Away => "#c62828",
        };
        let (cx, cy) = (sx(r.pose.x), sy(r.pose.y));
        let tip = r.pose.transform_point(Vec2::new(0.3, 0.0));
        let opacity = if r.active { 1.0 } else { 0.4 };
        let _ = writeln!(
            out,
            r#"<circle cx="{cx:.1}" cy="{cy:.1}" r="12" fill="{colour}" opacity="{opacity}"/><line x1="{cx:.1}" y1="{cy:.1}" x2="{:.1}" y2="{:.1}" stroke="white" stroke-width="2"/>"#,
            sx(tip.x),
            sy(tip.y)
        );
        let label = r.task.map_or(String::new(), |t| format!(" {t:?}"));
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" fill="white" font-size="13" font-family="sans-serif">{}{label}</text>"#,
            cx + 14.0,
            cy - 10.0,
            r.id
        );
    }
    let _ = writeln!(
        out,
        r#"<circle cx="{:.1}" cy="{:.1}" r="6" fill="orange" stroke="black"/>"#,
        sx(s.ball.x),
        sy(s.ball.y)
    );
    let _ = writeln!(
        out,
        r#"<text x="10" y="20" fill="white" font-size="14" font-family="sans-serif">t={:.2}s {:?} {}:{}</text>"#,
        s.at, s.phase, s.score[0], s.score[1]
    );
    out.push_str("</svg>\n");
    out
}
