//! Line-delimited JSON trace. The first line is a [`TraceHeader`], every
//! following line one [`TraceRecord`] tagged by `kind`.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::behavior::{BehaviorLog, BehaviorState, GameState};
use crate::geometry::{FieldModel, Pose2D, Vec2};
use crate::scenario::Fault;
use crate::sim::{Event, GamePhase, RobotId, Role, Team};
use crate::teamplay::{Cause, ClearOutView, NegotiationKind, Task, TeamplayLog};

pub const SCHEMA: &str = "soccer-trace/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RosterEntry {
    pub id: RobotId,
    pub team: Team,
    pub role: Role,
    /// Initial task of home robots.
    pub task: Option<Task>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub schema: String,
    pub seed: u64,
    pub dt: f64,
    pub duration: f64,
    pub teamplay: bool,
    pub staleness_horizon: f64,
    pub illegal_defense_limit: f64,
    pub field: FieldModel,
    pub robots: Vec<RosterEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InboxEntry {
    pub sender: RobotId,
    pub send_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotTick {
    pub id: RobotId,
    pub pose: Pose2D,
    pub active: bool,
    pub fallen: bool,
    /// Home robots only from here on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<Task>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_task: Option<Task>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub belief: Option<Pose2D>,
    /// Hypothesis weights, empty with ideal localization.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ball_est: Option<Vec2>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inbox: Vec<InboxEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub game_state: Option<GameState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub behavior: Option<BehaviorState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalieTick {
    pub robot: RobotId,
    pub view: ClearOutView,
    pub clearing_out: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    Status,
    Request,
    Accept,
    Reject,
    Confirm,
}

impl From<NegotiationKind> for MessageKind {
    fn from(k: NegotiationKind) -> Self {
        match k {
            NegotiationKind::Request => MessageKind::Request,
            NegotiationKind::Accept => MessageKind::Accept,
            NegotiationKind::Reject => MessageKind::Reject,
            NegotiationKind::Confirm => MessageKind::Confirm,
        }
    }
}

/// Why a message went out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SendCause {
    Beat,
    Negotiation,
    Egress,
    Return,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Invariant {
    StrikerUniqueness,
    GoalkeeperConstancy,
    Staleness,
    RegionConsistency,
    IllegalDefenseTiming,
    InitiationDirection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RecordBody {
    Tick {
        phase: GamePhase,
        ball: Vec2,
        score: [u32; 2],
        robots: Vec<RobotTick>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        goalie: Option<GoalieTick>,
    },
    /// Simulation event, flattened.
    Event(Event),
    Message {
        from: RobotId,
        msg: MessageKind,
        cause: SendCause,
        /// Sender's base task when sending.
        sender_task: Task,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        to: Option<RobotId>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        nonce: Option<u32>,
        /// `(receiver, delivery time)`.
        delivered: Vec<(RobotId, f64)>,
        dropped: Vec<RobotId>,
    },
    TaskChange {
        robot: RobotId,
        from: Task,
        to: Task,
        base_from: Task,
        base_to: Task,
        cause: Cause,
    },
    /// Team-play decisions other than task changes.
    Teamplay { robot: RobotId, log: TeamplayLog },
    Behavior { robot: RobotId, log: BehaviorLog },
    Fault { fault: Fault },
    Violation {
        invariant: Invariant,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        robot: Option<RobotId>,
        detail: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub seq: u64,
    pub t: f64,
    #[serde(flatten)]
    pub body: RecordBody,
}

/// Destination of trace records.
pub trait TraceSink {
    fn record(&mut self, record: &TraceRecord) -> std::io::Result<()>;
}

/// Discards everything.
pub struct NullSink;

impl TraceSink for NullSink {
    fn record(&mut self, _: &TraceRecord) -> std::io::Result<()> {
        Ok(())
    }
}

impl TraceSink for Vec<TraceRecord> {
    fn record(&mut self, record: &TraceRecord) -> std::io::Result<()> {
        self.push(record.clone());
        Ok(())
    }
}

pub struct JsonlWriter<W: Write> {
    out: W,
}

impl<W: Write> JsonlWriter<W> {
    pub fn new(mut out: W, header: &TraceHeader) -> std::io::Result<Self> {
        serde_json::to_writer(&mut out, header)?;
        out.write_all(b"\n")?;
        Ok(Self { out })
    }

    pub fn into_inner(mut self) -> std::io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

impl<W: Write> TraceSink for JsonlWriter<W> {
    fn record(&mut self, record: &TraceRecord) -> std::io::Result<()> {
        serde_json::to_writer(&mut self.out, record)?;
        self.out.write_all(b"\n")
    }
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("cannot read trace: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Corrupt { line: usize, message: String },
}

pub struct Trace {
    pub header: TraceHeader,
    pub records: Vec<TraceRecord>,
}

impl Trace {
    /// Parses a whole trace. The first malformed line is reported, as is any
    /// break in the sequence numbering or time order.
    pub fn read<R: BufRead>(input: R) -> Result<Self, TraceError> {
        let mut lines = input.lines();
        let corrupt = |line: usize, message: String| TraceError::Corrupt { line, message };
        let first = lines
            .next()
            .ok_or_else(|| corrupt(1, "empty trace".into()))??;
        let header: TraceHeader =
            serde_json::from_str(&first).map_err(|e| corrupt(1, format!("bad header: {e}")))?;
        if header.schema != SCHEMA {
            return Err(corrupt(1, format!("unsupported schema {:?}", header.schema)));
        }
        let mut records: Vec<TraceRecord> = Vec::new();
        for (i, line) in lines.enumerate() {
            let n = i + 2;
            let line = line?;
            let rec: TraceRecord =
                serde_json::from_str(&line).map_err(|e| corrupt(n, e.to_string()))?;
            if let Some(prev) = records.last() {
                if rec.seq != prev.seq + 1 {
                    return Err(corrupt(n, format!("expected seq {}, found {}", prev.seq + 1, rec.seq)));
                }
                if rec.t < prev.t {
                    return Err(corrupt(n, "record goes back in time".into()));
                }
            }
            records.push(rec);
        }
        Ok(Self { header, records })
    }

    pub fn write<W: Write>(&self, out: W) -> std::io::Result<W> {
        let mut w = JsonlWriter::new(out, &self.header)?;
        for r in &self.records {
            w.record(r)?;
        }
        w.into_inner()
    }

    /// Time of the last record, or 0 for an empty trace.
    pub fn end_time(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.t)
    }
}
