//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use soccer_coord::comms::{Bus, BusConfig, TeamMessage};
use soccer_coord::geometry::{defender_target_pose, normalize_angle, DefenderParams, FieldModel, Pose2D, Vec2};
use soccer_coord::localization::{init_hypotheses, observe, odometry_between, LocalizationParams, Localizer};
use soccer_coord::runner::Simulation;
use soccer_coord::scenario::{Fault, Scenario};
use soccer_coord::sim::{Event, GamePhase, RobotId, Role, Team};
use soccer_coord::teamplay::{
    ManagerContext, NegotiationKind, PlayerView, Task, TaskManager, TeamplayParams, TickInput,
};
use soccer_coord::trace::{JsonlWriter, MessageKind, RecordBody, SendCause, TraceRecord, TraceSink};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn scenario(name: &str) -> Scenario {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "scenarios", name].iter().collect();
    Scenario::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

// ---------------------------------------------------------------------------
// 1. Striker uniqueness

const GOALIE: RobotId = 1;
const A: RobotId = 2;
const B: RobotId = 3;

fn roster() -> Vec<(RobotId, Role)> {
    vec![(GOALIE, Role::Goalkeeper), (A, Role::FieldPlayer), (B, Role::FieldPlayer)]
}

fn ctx() -> ManagerContext {
    ManagerContext {
        params: TeamplayParams::default(),
        field: FieldModel::default(),
        staleness_horizon: 5.0,
        keeper_reach: 0.2,
    }
}

fn view(id: RobotId, x: f64) -> PlayerView {
    PlayerView {
        id,
        pose: Pose2D::new(x, 0.0, 0.0),
        ball: Some(Vec2::new(0.0, 0.0)),
        ball_distance: None,
        active: true,
        fallen: false,
    }
}

fn status(m: &TaskManager, v: &PlayerView, t: f64) -> TeamMessage {
    TeamMessage {
        sender: m.id(),
        send_time: t,
        task: m.task(),
        base_task: m.base_task(),
        ball_distance: None,
        ball_visible: false,
        ball_possession: false,
        ball_location: v.ball,
        robot_pose: v.pose,
        active: m.is_active() && v.active,
        fallen: v.fallen,
        clearing_out: m.clearing_out(),
        negotiation: None,
    }
}

fn input<'a>(now: f64, me: PlayerView, inbox: &'a [TeamMessage], neg: &'a [TeamMessage]) -> TickInput<'a> {
    TickInput {
        now,
        phase: GamePhase::Playing,
        me,
        ball_velocity: None,
        inbox,
        negotiation: neg,
        kicked: false,
    }
}

/// One handshake between striker A (far from the ball) and defender B (close
/// to it). Bits of `mask` drop the first Request, Accept, Confirm and all
/// status messages after the first cycle. Returns the base tasks per cycle.
fn exchange(mask: u8, cycles: usize) -> Vec<(Task, Task)> {
    let mut a = TaskManager::new(A, &roster(), ctx(), 0.0);
    let mut b = TaskManager::new(B, &roster(), ctx(), 0.0);
    let (va, vb) = (view(A, -3.0), view(B, -1.0));
    let (mut to_a, mut to_b) = (Vec::new(), Vec::new());
    let (mut inbox_a, mut inbox_b) = (Vec::new(), Vec::new());
    let mut sent = [0usize; 3];
    let mut seen = Vec::new();
    for k in 0..cycles {
        let now = k as f64 * 0.125;
        let neg_a: Vec<TeamMessage> = std::mem::take(&mut to_a);
        let neg_b: Vec<TeamMessage> = std::mem::take(&mut to_b);
        let out_a = a.tick(&input(now, va, &inbox_a, &neg_a));
        let out_b = b.tick(&input(now, vb, &inbox_b, &neg_b));
        for (out, from, fv, queue) in [(&out_a, &a, &va, &mut to_b), (&out_b, &b, &vb, &mut to_a)] {
            for p in &out.outgoing {
                let slot = match p.kind {
                    NegotiationKind::Request => 0,
                    NegotiationKind::Accept => 1,
                    NegotiationKind::Confirm => 2,
                    NegotiationKind::Reject => 3,
                };
                if slot < 3 {
                    sent[slot] += 1;
                    if mask & (1 << slot) != 0 && sent[slot] == 1 {
                        continue;
                    }
                }
                let mut msg = status(from, fv, now);
                msg.negotiation = Some(*p);
                queue.push(msg);
            }
        }
        if mask & 8 == 0 || k == 0 {
            inbox_a = vec![status(&b, &vb, now)];
            inbox_b = vec![status(&a, &va, now)];
        }
        seen.push((a.base_task(), b.base_task()));
    }
    seen
}

/// Independent bookkeeping over the record stream: effective and base task
/// per home robot, and the oldest inbox entry ever seen.
#[derive(Default)]
struct Audit {
    tasks: BTreeMap<RobotId, (Task, Task)>,
    double_attack: u64,
    max_inbox_age: f64,
    beats: BTreeMap<RobotId, Vec<f64>>,
}

impl Audit {
    fn count_attack(&mut self) {
        let n = self
            .tasks
            .values()
            .filter(|(e, b)| *e == Task::Attack || *b == Task::Attack)
            .count();
        if n > 1 {
            self.double_attack += 1;
        }
    }
}

impl TraceSink for Audit {
    fn record(&mut self, rec: &TraceRecord) -> std::io::Result<()> {
        match &rec.body {
            RecordBody::Tick { robots, .. } => {
                for r in robots {
                    if let (Some(t), Some(b)) = (r.task, r.base_task) {
                        self.tasks.insert(r.id, (t, b));
                    }
                    for m in &r.inbox {
                        self.max_inbox_age = self.max_inbox_age.max(rec.t - m.send_time);
                    }
                }
                self.count_attack();
            }
            RecordBody::TaskChange { robot, to, base_to, .. } => {
                self.tasks.insert(*robot, (*to, *base_to));
                self.count_attack();
            }
            RecordBody::Message {
                from,
                msg: MessageKind::Status,
                cause: SendCause::Beat,
                ..
            } => self.beats.entry(*from).or_default().push(rec.t),
            _ => {}
        }
        Ok(())
    }
}

struct SimSummary {
    violations: u64,
    double_attack: u64,
    max_inbox_age: f64,
}

fn randomized_sims() -> Vec<(f64, SimSummary)> {
    let base = scenario("kickoff_3v3.toml");
    let mut rng = ChaCha8Rng::seed_from_u64(2017);
    let mut jobs = Vec::new();
    for (i, loss) in [0.0, 0.1, 0.3, 0.6].iter().enumerate() {
        for _ in 0..25 {
            let mut sc = base.clone();
            sc.seed = rng.random();
            sc.duration = 600.0;
            sc.bus.loss_probability = *loss;
            // Vary the scripted penalty so the egress path is exercised at
            // different moments.
            for f in sc.faults.iter_mut() {
                if let Fault::Penalize { at, .. } = f {
                    *at = rng.random_range(10.0..500.0);
                }
            }
            jobs.push((i, *loss, sc));
        }
    }
    let threads = std::thread::available_parallelism().map_or(4, |n| n.get());
    let chunks: Vec<Vec<(usize, f64, Scenario)>> = (0..threads)
        .map(|t| jobs.iter().skip(t).step_by(threads).cloned().collect())
        .collect();
    std::thread::scope(|s| {
        let handles: Vec<_> = chunks
            .into_iter()
            .map(|chunk| {
                s.spawn(move || {
                    chunk
                        .into_iter()
                        .map(|(_, loss, sc)| {
                            let mut audit = Audit::default();
                            let m = Simulation::new(&sc).run(&mut audit).expect("simulation runs");
                            (
                                loss,
                                SimSummary {
                                    violations: m.violation_count(),
                                    double_attack: audit.double_attack,
                                    max_inbox_age: audit.max_inbox_age,
                                },
                            )
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker")).collect()
    })
}

fn criterion_1(sims: &[(f64, SimSummary)], sim_time: Duration) -> Outcome {
    let start = Instant::now();
    let mut bad_masks = Vec::new();
    for mask in 0..16u8 {
        let seen = exchange(mask, 40);
        if seen.iter().any(|(a, b)| *a == Task::Attack && *b == Task::Attack) {
            bad_masks.push(mask);
        }
    }
    let elapsed = start.elapsed() + sim_time;
    let violations: u64 = sims.iter().map(|(_, s)| s.violations).sum();
    let doubles: u64 = sims.iter().map(|(_, s)| s.double_attack).sum();
    let pass = bad_masks.is_empty() && violations == 0 && doubles == 0 && sims.len() == 100 && elapsed.as_secs_f64() < 120.0;
    outcome(
        pass,
        format!(
            "16 drop masks, double-Attack masks {bad_masks:?}; {} sims x 600 s, {violations} violations, {doubles} double-Attack states; {:.1} s",
            sims.len(),
            elapsed.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------------------
// 2. Illegal-defense avoidance

fn illegal_defense_events(sc: &Scenario) -> Vec<f64> {
    let mut records: Vec<TraceRecord> = Vec::new();
    Simulation::new(sc).run(&mut records).expect("simulation runs");
    records
        .iter()
        .filter_map(|r| match r.body {
            RecordBody::Event(Event::IllegalDefense { team: Team::Home, occupied_for, .. }) => Some(occupied_for),
            _ => None,
        })
        .collect()
}

fn criterion_2() -> Outcome {
    let sc = scenario("ball_in_goal_area.toml");
    let with = illegal_defense_events(&sc);
    let mut off = sc.clone();
    off.teamplay.enabled = false;
    let without = illegal_defense_events(&off);
    let tick = 0.02;
    let timed = !without.is_empty() && without.iter().all(|d| (d - 10.0).abs() <= tick + 1e-9);
    outcome(
        with.is_empty() && timed,
        format!("team play on: {} events; off: occupied_for {without:.3?}", with.len()),
    )
}

// ---------------------------------------------------------------------------
// 3. Comms semantics

fn probe(sender: RobotId) -> TeamMessage {
    TeamMessage {
        sender,
        send_time: 0.0,
        task: Task::Defend,
        base_task: Task::Defend,
        ball_distance: None,
        ball_visible: false,
        ball_possession: false,
        ball_location: None,
        robot_pose: Pose2D::default(),
        active: true,
        fallen: false,
        clearing_out: false,
        negotiation: None,
    }
}

fn criterion_3(sims: &[(f64, SimSummary)]) -> Outcome {
    let sc = scenario("kickoff_3v3.toml");
    let mut audit = Audit::default();
    Simulation::new(&sc).run(&mut audit).expect("simulation runs");
    let mut intervals = Vec::new();
    for times in audit.beats.values() {
        intervals.extend(times.windows(2).map(|w| w[1] - w[0]));
    }
    let mean = intervals.iter().sum::<f64>() / intervals.len().max(1) as f64;
    let (lo, hi) = intervals
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), d| (lo.min(*d), hi.max(*d)));
    let period_ok = !intervals.is_empty() && (mean - 0.125).abs() <= 0.02 && lo >= 0.105 - 1e-9 && hi <= 0.145 + 1e-9;

    let max_age = sims
        .iter()
        .map(|(_, s)| s.max_inbox_age)
        .fold(audit.max_inbox_age, f64::max);
    let fresh = max_age <= 5.0 + 1e-9;

    let config = BusConfig {
        loss_probability: 0.3,
        ..BusConfig::default()
    };
    let mut bus = Bus::new(config, &[1, 2], 99);
    let sends = 10_000;
    let mut delivered = 0usize;
    for k in 0..sends {
        let report = bus.send_event(probe(1), k as f64 * 0.001).expect("member sender");
        delivered += report.scheduled.len();
    }
    let fraction = delivered as f64 / sends as f64;
    let loss_ok = (fraction - 0.70).abs() <= 0.02;
    outcome(
        period_ok && fresh && loss_ok,
        format!(
            "beat period mean {mean:.4} s (min {lo:.2}, max {hi:.2}); oldest inbox entry {max_age:.3} s; delivery fraction {fraction:.4}"
        ),
    )
}

// ---------------------------------------------------------------------------
// 4. Debounce

fn criterion_4() -> Outcome {
    let a = TaskManager::new(A, &roster(), ctx(), 0.0);
    let mut b = TaskManager::new(B, &roster(), ctx(), 0.0);
    let inbox = [status(&a, &view(A, -2.0), 0.0)];
    let mut oscillating_requests = 0;
    // 60 s at 8 Hz.
    for k in 0..480 {
        let x = if k % 2 == 0 { -1.0 } else { -3.0 };
        let out = b.tick(&input(k as f64 * 0.125, view(B, x), &inbox, &[]));
        oscillating_requests += out
            .outgoing
            .iter()
            .filter(|p| p.kind == NegotiationKind::Request)
            .count();
    }

    let a = TaskManager::new(A, &roster(), ctx(), 0.0);
    let mut b = TaskManager::new(B, &roster(), ctx(), 0.0);
    let inbox = [status(&a, &view(A, -3.0), 0.0)];
    let mut first_request = None;
    for k in 0..12 {
        let out = b.tick(&input(k as f64 * 0.125, view(B, -1.0), &inbox, &[]));
        if first_request.is_none() && out.outgoing.iter().any(|p| p.kind == NegotiationKind::Request) {
            first_request = Some(k + 1);
        }
    }
    outcome(
        oscillating_requests == 0 && first_request == Some(4),
        format!("oscillating: {oscillating_requests} requests in 480 cycles; steady: request on cycle {first_request:?}"),
    )
}

// ---------------------------------------------------------------------------
// 5. Localization

/// Circular walk of radius 1.5 m starting at the center-circle placement.
fn walk(steps: usize, dt: f64) -> Vec<Pose2D> {
    let (v, omega) = (0.15, 0.1);
    let mut pose = init_hypotheses(&FieldModel::default())[2].pose;
    let mut out = vec![pose];
    for _ in 0..steps {
        pose = pose.compose(v * dt, 0.0, omega * dt);
        out.push(pose);
    }
    out
}

/// Runs a localizer along `truth`; returns per-step position errors and the
/// final bank size.
fn track(truth: &[Pose2D], params: &LocalizationParams, noise: f64, seed: u64) -> (Vec<f64>, usize) {
    let field = FieldModel::default();
    let mut loc = Localizer::new(&field, params.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut errors = Vec::new();
    for w in truth.windows(2) {
        let odo = odometry_between(w[0], w[1], 0.12, params, &mut rng);
        let obs = observe(w[1], loc.map(), params, noise, &mut rng);
        let est = loc.step(&odo, &obs);
        errors.push(est.position().distance(w[1].position()));
    }
    (errors, loc.bank.hypotheses.len())
}

fn criterion_5() -> Outcome {
    let field = FieldModel::default();
    let bank = init_hypotheses(&field);
    let q = -field.length / 4.0;
    let hw = field.half_width();
    let expected = [
        Pose2D::new(q, hw, -std::f64::consts::FRAC_PI_2),
        Pose2D::new(q, -hw, std::f64::consts::FRAC_PI_2),
        Pose2D::new(-field.center_circle_radius, 0.0, 0.0),
        Pose2D::new(-field.half_length() + field.goal_area_depth, 0.0, 0.0),
    ];
    let placements_ok = bank.len() == 4
        && bank.iter().all(|h| h.weight == 0.25)
        && bank.iter().zip(expected).all(|(h, e)| h.pose == e);

    // 60 s walk at the 0.12 s control period.
    let truth = walk(500, 0.12);

    let mut exact = LocalizationParams::default();
    exact.odometry_sigma = 0.0;
    exact.gyro_sigma = 0.0;
    exact.detection_probability = 1.0;
    let (errors, _) = track(&truth, &exact, 0.0, 1);
    let zero_noise = errors.iter().copied().fold(0.0, f64::max);

    let mut noisy = LocalizationParams::default();
    noisy.point_sigma_range = 0.1;
    noisy.line_sigma_range = 0.1;
    let (mut errors, survivors) = track(&truth, &noisy, 1.0, 2017);
    errors.sort_by(f64::total_cmp);
    let median = errors[errors.len() / 2];

    outcome(
        placements_ok && zero_noise < 1e-6 && median < 0.3 && survivors == 1,
        format!(
            "placements ok {placements_ok}; zero-noise max error {zero_noise:.2e} m; sigma_range 0.1 median error {median:.3} m; {survivors} hypothesis left"
        ),
    )
}

// ---------------------------------------------------------------------------
// 6. Defender geometry

fn criterion_6() -> Outcome {
    let field = FieldModel::default();
    let params = DefenderParams::default();
    let goal = Vec2::new(-field.length / 2.0, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut worst_dist, mut worst_angle) = (0.0f64, 0.0f64);
    let mut mirror_breaks = 0;
    for _ in 0..10_000 {
        let ball = Vec2::new(
            rng.random_range(-field.length / 2.0..field.length / 2.0),
            rng.random_range(-field.width / 2.0..field.width / 2.0),
        );
        let target = defender_target_pose(Some(ball), None, &field, &params).expect("anchor given");
        let dx = ball.x - goal.x;
        let dy = ball.y - goal.y;
        let d = (dx * dx + dy * dy).sqrt();
        let lo = params.magnitude_min;
        let hi = lo.max(d - params.teammate_separation);
        let want = (params.gain_k * d).max(lo).min(hi);
        let got = ((target.x - goal.x).powi(2) + (target.y - goal.y).powi(2)).sqrt();
        worst_dist = worst_dist.max((got - want).abs());
        let facing = (ball.y - target.y).atan2(ball.x - target.x);
        worst_angle = worst_angle.max(normalize_angle(target.theta - facing).abs());
        let mirrored = defender_target_pose(Some(Vec2::new(ball.x, -ball.y)), None, &field, &params).expect("anchor");
        if mirrored != Pose2D::new(target.x, -target.y, -target.theta) {
            mirror_breaks += 1;
        }
    }
    outcome(
        worst_dist <= 1e-9 && worst_angle <= 1e-9 && mirror_breaks == 0,
        format!("10000 balls: distance error {worst_dist:.1e} m, facing error {worst_angle:.1e} rad, {mirror_breaks} mirror mismatches"),
    )
}

// ---------------------------------------------------------------------------
// 7. Egress handover

/// Seconds from the striker's penalty to a teammate adopting Attack.
fn adoption_delay(sc: &Scenario) -> Option<f64> {
    let mut records: Vec<TraceRecord> = Vec::new();
    Simulation::new(sc).run(&mut records).expect("simulation runs");
    let penalized = records.iter().find_map(|r| match r.body {
        RecordBody::Event(Event::Penalized { robot: A, .. }) => Some(r.t),
        _ => None,
    })?;
    records.iter().find_map(|r| match r.body {
        RecordBody::TaskChange { robot, base_to: Task::Attack, .. } if robot != A && r.t >= penalized => {
            Some(r.t - penalized)
        }
        _ => None,
    })
}

fn criterion_7() -> Outcome {
    let beat = 0.125;
    let sc = scenario("striker_egress.toml");
    let lossless = adoption_delay(&sc);
    let mut lossy = sc.clone();
    for to in [GOALIE, B] {
        lossy.faults.push(Fault::LinkLoss {
            at: 5.0,
            from: A,
            to,
            probability: 1.0,
        });
    }
    let lost = adoption_delay(&lossy);
    let pass = lossless.is_some_and(|d| d <= 2.0 * beat + 1e-9) && lost.is_some_and(|d| d <= 5.0 + beat + 1e-9);
    outcome(
        pass,
        format!("adoption after {lossless:.3?} s lossless, {lost:.3?} s with the egress message lost"),
    )
}

// ---------------------------------------------------------------------------
// 8. Determinism

fn trace_bytes(sc: &Scenario) -> Vec<u8> {
    let sim = Simulation::new(sc);
    let mut w = JsonlWriter::new(Vec::new(), sim.header()).expect("header");
    sim.run(&mut w).expect("simulation runs");
    w.into_inner().expect("flush")
}

fn criterion_8(suite_start: Instant) -> Outcome {
    let mut identical = true;
    let mut bytes = 0;
    for name in ["kickoff_3v3.toml", "ball_in_goal_area.toml", "striker_egress.toml"] {
        let sc = scenario(name);
        let first = trace_bytes(&sc);
        let second = trace_bytes(&sc);
        identical &= !first.is_empty() && first == second;
        bytes += first.len();
    }
    let elapsed = suite_start.elapsed().as_secs_f64();
    outcome(
        identical && elapsed < 600.0,
        format!("identical traces {identical} ({bytes} bytes per run set); suite {elapsed:.1} s"),
    )
}

fn main() -> ExitCode {
    let suite_start = Instant::now();
    let sims_start = Instant::now();
    let sims = randomized_sims();
    let sim_time = sims_start.elapsed();

    let results = [
        ("1 striker uniqueness", criterion_1(&sims, sim_time)),
        ("2 illegal-defense avoidance", criterion_2()),
        ("3 comms semantics", criterion_3(&sims)),
        ("4 debounce", criterion_4()),
        ("5 localization", criterion_5()),
        ("6 defender geometry", criterion_6()),
        ("7 egress handover", criterion_7()),
        ("8 determinism", criterion_8(suite_start)),
    ];
    let mut failed = 0;
    for (name, o) in &results {
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("{verdict} criterion {name}: {}", o.detail);
        failed += usize::from(!o.pass);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
