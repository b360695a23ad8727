//! Browser bindings. Every export returns a JSON string that the page draws
//! on a canvas.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

use soccer_coord::checker::check_trace;
use soccer_coord::geometry::{
    classify_ball_region, defender_target_pose, presence_line_clear, wait_clearout_targets, DefenderParams,
    FieldModel, Pose2D, Region, Vec2, WaitClearOutParams,
};
use soccer_coord::localization::{init_hypotheses, observe, odometry_between, LocalizationParams, Localizer};
use soccer_coord::runner::{Metrics, Simulation};
use soccer_coord::scenario::Scenario;
use soccer_coord::teamplay::{clearout_decision, ClearOutDecision, Task};
use soccer_coord::trace::{RecordBody, Trace, TraceRecord};

const SCENARIOS: [(&str, &str); 3] = [
    ("kickoff_3v3", include_str!("../../../scenarios/kickoff_3v3.toml")),
    ("ball_in_goal_area", include_str!("../../../scenarios/ball_in_goal_area.toml")),
    ("striker_egress", include_str!("../../../scenarios/striker_egress.toml")),
];

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).unwrap_or_else(|e| format!(r#"{{"error":"{e}"}}"#))
}

fn error(msg: impl std::fmt::Display) -> String {
    json(&serde_json::json!({ "error": msg.to_string() }))
}

#[wasm_bindgen]
pub fn field() -> String {
    json(&FieldModel::default())
}

#[wasm_bindgen]
pub fn scenario_names() -> String {
    json(&SCENARIOS.iter().map(|(n, _)| *n).collect::<Vec<_>>())
}

#[derive(Serialize)]
struct BallView {
    region: Region,
    decision: ClearOutDecision,
    presence_clear: bool,
    defender: Option<Pose2D>,
    /// Staging targets of two field players, only while the keeper clears.
    waiters: Vec<Pose2D>,
    waiter_starts: Vec<Pose2D>,
    goalie: Pose2D,
}

/// Team-play geometry for a ball placed at `(x, y)`. `defender_x` is where the
/// second field player stands; behind the presence line it blocks Region-2
/// clear-outs.
#[wasm_bindgen]
pub fn inspect_ball(x: f64, y: f64, defender_x: f64) -> String {
    let field = FieldModel::default();
    let ball = Vec2::new(x, y);
    let goalie = Pose2D::new(-field.half_length() + 0.25, 0.0, 0.0);
    let players = [Vec2::new(0.5, 1.0), Vec2::new(defender_x, -1.0)];
    let decision = clearout_decision(Some(ball), &players, &field);
    let starts: Vec<Pose2D> = players.iter().map(|p| Pose2D::looking_at(*p, ball)).collect();
    let waiters = if decision == ClearOutDecision::ClearOut {
        wait_clearout_targets(&starts, ball, goalie, &field, &WaitClearOutParams::default())
            .map(|ts| ts.into_iter().map(|t| t.pose).collect())
            .unwrap_or_default()
    } else {
        Vec::new()
    };
    json(&BallView {
        region: classify_ball_region(ball, &field),
        decision,
        presence_clear: presence_line_clear(&players, &field),
        defender: defender_target_pose(Some(ball), None, &field, &DefenderParams::default()),
        waiters,
        waiter_starts: starts,
        goalie,
    })
}

#[derive(Serialize)]
struct LocalizationStep {
    truth: Pose2D,
    hypotheses: Vec<(Pose2D, f64)>,
    error: f64,
}

/// Seeded 60 s circular walk from the center-circle placement with the
/// four-hypothesis bank; `sigma_range` sets the range noise of all landmarks.
#[wasm_bindgen]
pub fn localization_walk(seed: u64, sigma_range: f64) -> String {
    let field = FieldModel::default();
    let mut params = LocalizationParams::default();
    params.point_sigma_range = sigma_range.max(1e-6);
    params.line_sigma_range = sigma_range.max(1e-6);
    if let Err(e) = params.validate() {
        return error(e);
    }
    let dt = 0.12;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut loc = Localizer::new(&field, params.clone());
    let mut truth = init_hypotheses(&field)[2].pose;
    let mut steps = Vec::new();
    for _ in 0..500 {
        let next = truth.compose(0.15 * dt, 0.0, 0.1 * dt);
        let odo = odometry_between(truth, next, dt, &params, &mut rng);
        let obs = observe(next, loc.map(), &params, 1.0, &mut rng);
        let est = loc.step(&odo, &obs);
        truth = next;
        steps.push(LocalizationStep {
            truth,
            hypotheses: loc.bank.hypotheses.iter().map(|h| (h.pose, h.weight)).collect(),
            error: est.position().distance(truth.position()),
        });
    }
    json(&steps)
}

#[derive(Serialize)]
struct Frame {
    t: f64,
    ball: Vec2,
    score: [u32; 2],
    robots: Vec<(u8, bool, Pose2D, Option<Task>, bool)>,
}

#[derive(Serialize)]
struct Match {
    frames: Vec<Frame>,
    metrics: Metrics,
    violations: usize,
    events: Vec<(f64, String)>,
}

/// Runs a bundled scenario and returns every control tick for playback.
#[wasm_bindgen]
pub fn run_scenario(name: &str, seed: u64, teamplay: bool) -> String {
    let Some((_, text)) = SCENARIOS.iter().find(|(n, _)| *n == name) else {
        return error(format!("unknown scenario {name}"));
    };
    let mut sc = match Scenario::from_toml_str(text) {
        Ok(s) => s,
        Err(e) => return error(e),
    };
    sc.seed = seed;
    sc.teamplay.enabled = teamplay;
    let sim = Simulation::new(&sc);
    let header = sim.header().clone();
    let mut records: Vec<TraceRecord> = Vec::new();
    let metrics = match sim.run(&mut records) {
        Ok(m) => m,
        Err(e) => return error(e),
    };
    let mut frames = Vec::new();
    let mut events = Vec::new();
    for r in &records {
        match &r.body {
            RecordBody::Tick { ball, score, robots, .. } => frames.push(Frame {
                t: r.t,
                ball: *ball,
                score: *score,
                robots: robots
                    .iter()
                    .map(|x| (x.id, x.task.is_some(), x.pose, x.task, x.active))
                    .collect(),
            }),
            RecordBody::Event(ev) => events.push((r.t, format!("{ev:?}"))),
            RecordBody::TaskChange { robot, to, cause, .. } => {
                events.push((r.t, format!("robot {robot} -> {to:?} ({cause:?})")))
            }
            _ => {}
        }
    }
    let violations = check_trace(&Trace { header, records }).len();
    json(&Match {
        frames,
        metrics,
        violations,
        events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inspect_ball_in_goal_area_clears_out() {
        let v: serde_json::Value = serde_json::from_str(&inspect_ball(-4.0, 0.5, 0.0)).unwrap();
        assert_eq!(v["decision"], "ClearOut");
        assert_eq!(v["waiters"].as_array().unwrap().len(), 2);
        let v: serde_json::Value = serde_json::from_str(&inspect_ball(2.0, 0.0, 0.0)).unwrap();
        assert_eq!(v["decision"], "PassiveGaze");
        assert!(v["waiters"].as_array().unwrap().is_empty());
    }

    #[test]
    fn walk_has_one_survivor() {
        let v: serde_json::Value = serde_json::from_str(&localization_walk(1, 0.1)).unwrap();
        let steps = v.as_array().unwrap();
        assert_eq!(steps.len(), 500);
        assert_eq!(steps[0]["hypotheses"].as_array().unwrap().len(), 4);
        assert_eq!(steps[499]["hypotheses"].as_array().unwrap().len(), 1);
    }

    #[test]
    fn scenarios_run() {
        let v: serde_json::Value = serde_json::from_str(&run_scenario("striker_egress", 5, true)).unwrap();
        assert_eq!(v["violations"], 0);
        assert!(!v["frames"].as_array().unwrap().is_empty());
        assert!(serde_json::from_str::<serde_json::Value>(&run_scenario("nope", 1, true)).unwrap()["error"].is_string());
    }
}
