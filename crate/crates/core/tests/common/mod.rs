#![allow(dead_code)]

use std::path::PathBuf;

use soccer_coord::runner::Simulation;
use soccer_coord::scenario::Scenario;
use soccer_coord::trace::{Trace, TraceRecord};

pub fn scenario_path(name: &str) -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "..", "..", "scenarios", name].iter().collect()
}

pub fn scenario(name: &str) -> Scenario {
    Scenario::load(&scenario_path(name)).expect("bundled scenario loads")
}

pub fn record(sc: &Scenario) -> Trace {
    let sim = Simulation::new(sc);
    let header = sim.header().clone();
    let mut records: Vec<TraceRecord> = Vec::new();
    sim.run(&mut records).expect("simulation runs");
    Trace { header, records }
}

pub fn to_bytes(trace: &Trace) -> Vec<u8> {
    trace.write(Vec::new()).expect("in-memory write")
}

/// Renumbers `seq` after records were inserted or removed.
pub fn renumber(records: &mut [TraceRecord]) {
    for (i, r) in records.iter_mut().enumerate() {
        r.seq = i as u64;
    }
}
