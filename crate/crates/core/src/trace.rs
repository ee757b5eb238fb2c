//! Line-delimited JSON traces.
//!
//! A trace is a header line followed by one record per line. Within a
//! cycle the records appear in evaluation order: `bus` (the external inputs
//! and switch settings), `world`, then one `unit` record per PEM (AS before
//! AM). A `reset` record sits between cycles. Keys are emitted in the
//! declaration order of the structs below and reals use the shortest
//! decimal that round-trips, so a trace parses back to bit-identical
//! values.
//!
//! Replay rebuilds the session from the header, feeds it every `bus` and
//! `reset` record, and compares what it produces with the recorded
//! `world`/`unit` records.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::RNG_ALGORITHM;
use crate::session::{Session, SessionConfig, SessionError};

pub const TRACE_FORMAT: &str = "emachine-trace";
pub const TRACE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("trace line 1: not an {TRACE_FORMAT} header")]
    NotATrace,
    #[error("trace version {found} is not supported (expected {TRACE_VERSION})")]
    Version { found: u32 },
    #[error("trace uses rng `{0}`, this build implements {RNG_ALGORITHM}")]
    Rng(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Session(#[from] SessionError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub format: String,
    pub version: u32,
    pub rng: String,
    pub seed: u64,
    pub config: SessionConfig,
}

impl TraceHeader {
    pub fn new(seed: u64, config: SessionConfig) -> Self {
        Self {
            format: TRACE_FORMAT.to_string(),
            version: TRACE_VERSION,
            rng: RNG_ALGORITHM.to_string(),
            seed,
            config,
        }
    }
}

/// External inputs and switch settings of one cycle. Symbols are written
/// by name, ε as `_`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BusRecord {
    pub nu: u64,
    pub addr: Option<String>,
    pub din: Option<String>,
    pub aud: Option<String>,
    pub screen: Vec<String>,
    pub teach: Option<Vec<String>>,
    pub fb: Option<String>,
    pub ns_sel: bool,
    pub nm_sel: bool,
    pub wen_as: bool,
    pub wen_am: bool,
    pub feedback: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldRecord {
    pub nu: u64,
    pub addr: String,
    pub din: String,
    pub dout: String,
    pub mem: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitRecord {
    pub nu: u64,
    pub unit: String,
    pub x: Vec<String>,
    pub xy: Vec<String>,
    pub wen: bool,
    pub s: Vec<f64>,
    pub se: Vec<f64>,
    pub e: Vec<f64>,
    /// 1-based winner.
    pub iwin: Option<usize>,
    pub y: Vec<String>,
    /// 1-based write pointer after the cycle.
    pub wptr: usize,
    pub e_next: Vec<f64>,
    /// World output of the same cycle, when a world is attached.
    pub oracle: Option<String>,
    pub refresh_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TraceRecord {
    Bus(BusRecord),
    World(WorldRecord),
    Unit(UnitRecord),
    Reset { nu: u64 },
}

impl TraceRecord {
    pub fn nu(&self) -> u64 {
        match self {
            TraceRecord::Bus(r) => r.nu,
            TraceRecord::World(r) => r.nu,
            TraceRecord::Unit(r) => r.nu,
            TraceRecord::Reset { nu } => *nu,
        }
    }
}

/// A trace held in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub header: TraceHeader,
    pub records: Vec<TraceRecord>,
}

impl Trace {
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        serde_json::to_writer(&mut out, &self.header)?;
        out.write_all(b"\n")?;
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        out.flush()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }

    /// Parses a trace. An input with no lines yields `None`.
    pub fn read_from<R: BufRead>(input: R) -> Result<Option<Trace>, TraceError> {
        let mut lines = input.lines().enumerate().filter(|(_, l)| match l {
            Ok(l) => !l.trim().is_empty(),
            Err(_) => true,
        });
        let Some((_, first)) = lines.next() else {
            return Ok(None);
        };
        let first = first?;
        let value: serde_json::Value =
            serde_json::from_str(&first).map_err(|source| TraceError::Json { line: 1, source })?;
        if value.get("format").and_then(|f| f.as_str()) != Some(TRACE_FORMAT) {
            return Err(TraceError::NotATrace);
        }
        let found = value.get("version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if found != TRACE_VERSION {
            return Err(TraceError::Version { found });
        }
        let header: TraceHeader = serde_json::from_value(value).map_err(|source| TraceError::Json { line: 1, source })?;
        if header.rng != RNG_ALGORITHM {
            return Err(TraceError::Rng(header.rng));
        }
        let mut records = Vec::new();
        for (i, line) in lines {
            let line = line?;
            let r = serde_json::from_str(&line).map_err(|source| TraceError::Json { line: i + 1, source })?;
            records.push(r);
        }
        Ok(Some(Trace { header, records }))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReplayOutcome {
    Match { cycles: u64 },
    Diverges { nu: u64, detail: String },
}

/// Re-executes a trace's inputs and compares every produced record.
pub fn replay_trace(trace: &Trace) -> Result<ReplayOutcome, TraceError> {
    let mut session = Session::new(trace.header.config.clone(), trace.header.seed)?;
    let mut pending: std::collections::VecDeque<TraceRecord> = Default::default();
    let mut cycles = 0;
    for rec in &trace.records {
        match rec {
            TraceRecord::Bus(bus) => {
                if let Some(missing) = pending.pop_front() {
                    return Ok(ReplayOutcome::Diverges {
                        nu: missing.nu(),
                        detail: "trace is missing a record produced by replay".into(),
                    });
                }
                if bus.nu != session.nu() {
                    return Ok(ReplayOutcome::Diverges {
                        nu: bus.nu,
                        detail: format!("expected cycle {}, trace has {}", session.nu(), bus.nu),
                    });
                }
                let produced = match session.step_bus(bus) {
                    Ok(out) => out.records,
                    Err(e) => {
                        return Ok(ReplayOutcome::Diverges {
                            nu: bus.nu,
                            detail: format!("replay failed: {e}"),
                        })
                    }
                };
                // the first produced record is the bus record itself
                let mut produced = produced.into_iter();
                if produced.next().as_ref() != Some(rec) {
                    return Ok(ReplayOutcome::Diverges {
                        nu: bus.nu,
                        detail: "bus record does not re-serialize identically".into(),
                    });
                }
                pending.extend(produced);
                cycles += 1;
            }
            TraceRecord::Reset { nu } => {
                if let Some(missing) = pending.pop_front() {
                    return Ok(ReplayOutcome::Diverges {
                        nu: missing.nu(),
                        detail: "trace is missing a record produced by replay".into(),
                    });
                }
                if *nu != session.nu() {
                    return Ok(ReplayOutcome::Diverges {
                        nu: *nu,
                        detail: "reset recorded at the wrong cycle".into(),
                    });
                }
                session.reset();
            }
            other => match pending.pop_front() {
                Some(expected) if &expected == other => {}
                Some(expected) => {
                    return Ok(ReplayOutcome::Diverges {
                        nu: other.nu(),
                        detail: format!(
                            "recorded {} differs from replayed {}",
                            serde_json::to_string(other).unwrap_or_default(),
                            serde_json::to_string(&expected).unwrap_or_default()
                        ),
                    })
                }
                None => {
                    return Ok(ReplayOutcome::Diverges {
                        nu: other.nu(),
                        detail: "record without a preceding bus record".into(),
                    })
                }
            },
        }
    }
    if let Some(missing) = pending.pop_front() {
        return Ok(ReplayOutcome::Diverges {
            nu: missing.nu(),
            detail: "trace ends before the last cycle's records".into(),
        });
    }
    Ok(ReplayOutcome::Match { cycles })
}

/// Replays a trace file. An empty input is a vacuous match.
pub fn replay<R: BufRead>(input: R) -> Result<ReplayOutcome, TraceError> {
    match Trace::read_from(input)? {
        Some(trace) => replay_trace(&trace),
        None => Ok(ReplayOutcome::Match { cycles: 0 }),
    }
}
