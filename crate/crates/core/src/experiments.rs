//! Training/examination protocols: GRAM simulation by AS, combinational
//! learning by AM, and the context-dependent mental set.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::report::ExperimentReport;
use crate::rng::SessionRng;
use crate::session::{AlphabetDecl, LayoutDecl, Session, SessionConfig, SessionError, UnitDecl, WorldDecl};
use crate::trace::BusRecord;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("training schedule never teaches fixed rule ({addr},{din})")]
    Uncovered { addr: String, din: String },
    #[error("truth table: {0}")]
    Table(String),
    #[error(transparent)]
    Session(#[from] SessionError),
}

type Result<T> = std::result::Result<T, ExperimentError>;

/// Cycles until excitation decays from `emax` to `eloss` with no input.
pub fn t_decay(emax: f64, eloss: f64, tau: f64) -> Result<f64> {
    if !(eloss > 0.0 && eloss < emax) {
        return Err(ExperimentError::Param(format!("need 0 < eloss < emax, got eloss={eloss}, emax={emax}")));
    }
    if !(tau > 1.0) {
        return Err(ExperimentError::Param(format!("need tau > 1, got {tau}")));
    }
    Ok((eloss / emax).ln() / (1.0 - 1.0 / tau).ln())
}

/// Smallest τ keeping a fully charged location above half charge for the
/// whole span.
pub fn tau_min(exam_span: f64) -> Result<f64> {
    if !(exam_span >= 0.0) {
        return Err(ExperimentError::Param(format!("negative span {exam_span}")));
    }
    Ok(exam_span / std::f64::consts::LN_2)
}

fn alphabet(name: &str, members: &[String]) -> AlphabetDecl {
    AlphabetDecl {
        name: name.to_string(),
        members: members.to_vec(),
    }
}

fn named(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

// ---------------------------------------------------------------------------
// GRAM simulation

#[derive(Debug, Clone, PartialEq)]
pub struct GramSpec {
    pub addr: Vec<String>,
    pub data: Vec<String>,
}

impl GramSpec {
    /// Address symbols `1..=n`, data symbols `a, b, ...`.
    pub fn small(n: usize, m: usize) -> Self {
        Self {
            addr: (1..=n).map(|i| i.to_string()).collect(),
            data: (0..m).map(|j| ((b'a' + j as u8) as char).to_string()).collect(),
        }
    }

    /// Fixed rules in address-major order.
    pub fn fixed_rules(&self) -> Vec<GramStep> {
        self.addr
            .iter()
            .flat_map(|a| self.data.iter().map(move |d| GramStep::new(a, d)))
            .collect()
    }
}

/// One world input; `din = "_"` reads.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GramStep {
    pub addr: String,
    pub din: String,
}

impl GramStep {
    pub fn new(addr: &str, din: &str) -> Self {
        Self {
            addr: addr.to_string(),
            din: din.to_string(),
        }
    }
}

/// The `n·m` fixed rules in a random order, with `extra` random steps
/// interleaved.
pub fn random_covering_schedule(spec: &GramSpec, extra: usize, rng: &mut SessionRng) -> Vec<GramStep> {
    let mut steps = spec.fixed_rules();
    for _ in 0..extra {
        let pos = rng.below(steps.len() as u64 + 1) as usize;
        steps.insert(pos, random_step(spec, 2, rng));
    }
    for i in (1..steps.len()).rev() {
        let j = rng.below(i as u64 + 1) as usize;
        steps.swap(i, j);
    }
    steps
}

/// Uniform address; reads with probability `1 − 1/read_odds`, otherwise a
/// write of a uniform data symbol.
fn random_step(spec: &GramSpec, read_odds: u64, rng: &mut SessionRng) -> GramStep {
    let addr = &spec.addr[rng.below(spec.addr.len() as u64) as usize];
    if rng.below(read_odds) == 0 {
        GramStep::new(addr, &spec.data[rng.below(spec.data.len() as u64) as usize])
    } else {
        GramStep::new(addr, "_")
    }
}

/// Examination probes: three reads for every write on average, so written
/// values must be held in working memory for many cycles.
pub fn random_probes(spec: &GramSpec, count: usize, rng: &mut SessionRng) -> Vec<GramStep> {
    (0..count).map(|_| random_step(spec, 4, rng)).collect()
}

/// AS parameters used for GRAM simulation.
pub const AS_MODULATION: f64 = 0.4;

fn theorem3_config(spec: &GramSpec, tau: f64, capacity: usize) -> SessionConfig {
    SessionConfig {
        alphabets: vec![alphabet("A", &spec.addr), alphabet("D", &spec.data)],
        world: Some(WorldDecl {
            addr: "A".into(),
            data: "D".into(),
        }),
        as_unit: Some(UnitDecl {
            inputs: vec!["A".into(), "D".into()],
            outputs: vec!["D".into()],
            capacity,
            a: AS_MODULATION,
            tau,
            wx: vec![1.0, 1.0],
        }),
        am_unit: None,
        layout: LayoutDecl::Sensorimotor,
        eloss: Some(1.0),
    }
}

fn gram_bus(step: &GramStep) -> BusRecord {
    BusRecord {
        addr: Some(step.addr.clone()),
        din: Some(step.din.clone()),
        ..Default::default()
    }
}

/// Trains AS on `schedule` (NS from the world, writing on), then examines
/// it on `probes` (NS from AS, writing off) while the world keeps running
/// as the oracle. Every probe compares NS.y with the world's output.
pub fn run_theorem3(
    spec: &GramSpec,
    tau: f64,
    schedule: &[GramStep],
    probes: &[GramStep],
    seed: u64,
) -> Result<ExperimentReport> {
    let taught: BTreeSet<&GramStep> = schedule.iter().collect();
    if let Some(missing) = spec.fixed_rules().into_iter().find(|r| !taught.contains(r)) {
        return Err(ExperimentError::Uncovered {
            addr: missing.addr,
            din: missing.din,
        });
    }
    let mut session = Session::new(theorem3_config(spec, tau, schedule.len()), seed)?;
    let mut report = ExperimentReport::new("theorem3", Some(seed));
    report.param("tau", tau);
    report.param("a", AS_MODULATION);
    report.param("n", spec.addr.len());
    report.param("m", spec.data.len());

    session.phase(true);
    for step in schedule {
        let stim = session.resolve(&gram_bus(step))?;
        session.step(&stim)?;
    }
    report.training_len = session.nu();
    session.phase(false);
    for step in probes {
        let stim = session.resolve(&gram_bus(step))?;
        let out = session.step(&stim)?;
        let expected = out.dout.map(|d| session.name(d)).unwrap_or_default();
        let actual = out.step.ns_y.map(|d| session.name(d)).unwrap_or_default();
        report.probe(Some(out.nu), format!("({},{})", step.addr, step.din), expected, actual);
    }
    report.span = Some((0, session.nu().saturating_sub(1)));
    Ok(report)
}

/// Exam span `ν2 − ν0` of a run with the given training and probe counts.
pub fn theorem3_span(training: usize, probes: usize) -> f64 {
    (training + probes).saturating_sub(1) as f64
}

// ---------------------------------------------------------------------------
// Combinational machine with two inputs and three outputs

/// A table from `(x1, x2)` to `(y1, y2, y3)`. The second input is the
/// delayed feedback of the third output, so it shares that alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct Table2x3 {
    pub x1: Vec<String>,
    pub y1: Vec<String>,
    pub y2: Vec<String>,
    pub y3: Vec<String>,
    pub rows: Vec<([String; 2], [String; 3])>,
}

impl Table2x3 {
    /// A random total table over 3-symbol alphabets.
    pub fn random(rng: &mut SessionRng) -> Self {
        let (x1, y1, y2, y3) = (named("u", 3), named("r", 3), named("v", 3), named("q", 3));
        let pick = |alpha: &[String], rng: &mut SessionRng| alpha[rng.below(alpha.len() as u64) as usize].clone();
        let mut rows = Vec::new();
        for u in &x1 {
            for q in &y3 {
                let out = [pick(&y1, rng), pick(&y2, rng), pick(&y3, rng)];
                rows.push(([u.clone(), q.clone()], out));
            }
        }
        Self { x1, y1, y2, y3, rows }
    }

    /// Outputs echo inputs: `(u_i, q_j) → (r_i, v_j, q_i)`.
    pub fn echo() -> Self {
        let (x1, y1, y2, y3) = (named("u", 3), named("r", 3), named("v", 3), named("q", 3));
        let mut rows = Vec::new();
        for i in 0..3 {
            for j in 0..3 {
                rows.push(([x1[i].clone(), y3[j].clone()], [y1[i].clone(), y2[j].clone(), y3[i].clone()]));
            }
        }
        Self { x1, y1, y2, y3, rows }
    }

    /// Distinct rows; contradictory duplicates are an error.
    fn distinct_rows(&self) -> Result<Vec<([String; 2], [String; 3])>> {
        let mut seen: BTreeMap<&[String; 2], &[String; 3]> = BTreeMap::new();
        let mut rows = Vec::new();
        for (x, y) in &self.rows {
            match seen.get(x) {
                Some(prev) if *prev != y => {
                    return Err(ExperimentError::Table(format!(
                        "input ({},{}) maps to both ({}) and ({})",
                        x[0],
                        x[1],
                        prev.join(","),
                        y.join(",")
                    )))
                }
                Some(_) => {}
                None => {
                    seen.insert(x, y);
                    rows.push((x.clone(), y.clone()));
                }
            }
        }
        Ok(rows)
    }
}

/// Teaches each row once through NM (teacher on, writing on), then replays
/// every input with NM taken from AM. The first input arrives via the
/// world and NS, the second through the delayed feedback register, which
/// is loaded with the row's value before each cycle.
///
/// With `a = 0` excitation cannot influence the choice; the report's
/// `se_equals_s` parameter records whether `se ≡ s` held on every exam
/// cycle and a violation counts as a mismatch.
pub fn run_theorem4(table: &Table2x3, seed: u64) -> Result<ExperimentReport> {
    let rows = table.distinct_rows()?;
    let config = SessionConfig {
        alphabets: vec![
            alphabet("C", &["0".to_string()]),
            alphabet("U", &table.x1),
            alphabet("Y1", &table.y1),
            alphabet("Y2", &table.y2),
            alphabet("Y3", &table.y3),
        ],
        world: Some(WorldDecl {
            addr: "C".into(),
            data: "U".into(),
        }),
        as_unit: None,
        am_unit: Some(UnitDecl {
            inputs: vec!["U".into(), "Y3".into()],
            outputs: vec!["Y1".into(), "Y2".into(), "Y3".into()],
            capacity: rows.len().max(1),
            a: 0.0,
            tau: 100.0,
            wx: vec![1.0, 1.0],
        }),
        layout: LayoutDecl::Sensorimotor,
        eloss: None,
    };
    let mut session = Session::new(config, seed)?;
    session.set("feedback", "delayed")?;
    session.brain_mut().ns_sel = true;
    let bus = |x: &[String; 2], teach: Option<&[String; 3]>| BusRecord {
        addr: Some("0".into()),
        din: Some(x[0].clone()),
        fb: Some(x[1].clone()),
        teach: teach.map(|t| t.to_vec()),
        ..Default::default()
    };

    let mut report = ExperimentReport::new("theorem4", Some(seed));
    report.param("a", 0.0);
    session.brain_mut().nm_sel = true;
    session.wen_am = true;
    for (x, y) in &rows {
        let stim = session.resolve(&bus(x, Some(y)))?;
        session.step(&stim)?;
    }
    report.training_len = session.nu();

    session.brain_mut().nm_sel = false;
    session.wen_am = false;
    let mut se_equals_s = true;
    for (x, y) in &rows {
        let stim = session.resolve(&bus(x, None))?;
        let out = session.step(&stim)?;
        let io = out.step.am_io.as_ref().expect("AM is configured");
        let modulation_free = io.se == io.s;
        se_equals_s &= modulation_free;
        let mut actual = out.step.motor.iter().map(|s| session.name(*s)).collect::<Vec<_>>().join(",");
        if !modulation_free {
            actual.push_str(" (se≠s)");
        }
        report.probe(Some(out.nu), format!("({},{})", x[0], x[1]), y.join(","), actual);
    }
    report.param("se_equals_s", se_equals_s);
    report.span = Some((0, session.nu().saturating_sub(1)));
    Ok(report)
}

// ---------------------------------------------------------------------------
// Mental set

#[derive(Debug, Clone, PartialEq)]
pub struct MentalSetSpec {
    /// Number of visual squares.
    pub k: usize,
    /// `2^(k+1)` auditory names; production `(v, o)` is named
    /// `names[2·v + o]` where `v` reads the screen as a binary number.
    pub names: Vec<String>,
    /// Target Boolean function: one output per screen row (`true` = s1).
    pub truth_table: Vec<bool>,
    pub refresh_on: bool,
    pub tau: f64,
    /// Visual presentations during examination, cycling through the
    /// screen rows; `None` presents each row once.
    pub exam_len: Option<usize>,
}

impl MentalSetSpec {
    pub fn new(k: usize, truth_table: Vec<bool>) -> Self {
        Self {
            k,
            names: named("a", 2 << k),
            truth_table,
            refresh_on: false,
            tau: 1000.0,
            exam_len: None,
        }
    }

    /// Stored associations `n = 2^(k+1)`.
    pub fn n(&self) -> usize {
        2 << self.k
    }

    /// Auditory weight; must exceed `k + 1`.
    pub fn aud_weight(&self) -> f64 {
        self.k as f64 + 2.0
    }

    pub fn emax(&self) -> f64 {
        self.aud_weight() + self.k as f64 + 1.0
    }

    /// Small enough that a full visual match beats any partial one
    /// whatever the excitation.
    pub fn modulation(&self) -> f64 {
        0.5 / (self.emax() * self.k.max(1) as f64)
    }

    /// Loss level: the excitation a full visual match alone can produce.
    pub fn eloss(&self) -> f64 {
        self.k as f64
    }

    pub fn rows(&self) -> usize {
        1 << self.k
    }

    /// Screen symbols of row `v`, most significant square first.
    pub fn screen(&self, v: usize) -> Vec<String> {
        (0..self.k).rev().map(|b| ((v >> b) & 1).to_string()).collect()
    }

    /// Boolean function with index `f`: bit `v` of `f` is the output on
    /// row `v`.
    pub fn function(k: usize, f: u64) -> Vec<bool> {
        (0..1usize << k).map(|v| (f >> v) & 1 == 1).collect()
    }
}

fn spoken(o: bool) -> &'static str {
    if o {
        "s1"
    } else {
        "s0"
    }
}

/// Names of the productions realizing `truth_table`, one per row.
pub fn pretune_names(truth_table: &[bool], naming: &[String]) -> Result<Vec<String>> {
    truth_table
        .iter()
        .enumerate()
        .map(|(v, &o)| {
            naming
                .get(2 * v + o as usize)
                .cloned()
                .ok_or_else(|| ExperimentError::Table(format!("row {v} has no named production")))
        })
        .collect()
}

pub fn mental_set_config(spec: &MentalSetSpec) -> SessionConfig {
    let mut inputs = vec!["X1".to_string()];
    inputs.extend((0..spec.k).map(|_| "V".to_string()));
    inputs.push("Y".into());
    let mut wx = vec![spec.aud_weight()];
    wx.extend(std::iter::repeat(1.0).take(spec.k + 1));
    SessionConfig {
        alphabets: vec![
            alphabet("X1", &spec.names),
            alphabet("V", &["0".to_string(), "1".to_string()]),
            alphabet("Y", &["s0".to_string(), "s1".to_string()]),
        ],
        world: None,
        as_unit: None,
        am_unit: Some(UnitDecl {
            inputs,
            outputs: vec!["Y".into()],
            capacity: spec.n(),
            a: spec.modulation(),
            tau: spec.tau,
            wx,
        }),
        layout: LayoutDecl::Mentalset,
        eloss: Some(spec.eloss()),
    }
}

/// Builds the session and teaches all `2^(k+1)` named productions.
pub fn train_mental_set(spec: &MentalSetSpec, seed: u64) -> Result<Session> {
    if spec.names.len() != spec.n() {
        return Err(ExperimentError::Param(format!(
            "need {} auditory names, got {}",
            spec.n(),
            spec.names.len()
        )));
    }
    let mut session = Session::new(mental_set_config(spec), seed)?;
    session.set("feedback", if spec.refresh_on { "refresh" } else { "off" })?;
    session.phase(true);
    for v in 0..spec.rows() {
        for o in [false, true] {
            let bus = BusRecord {
                aud: Some(spec.names[2 * v + o as usize].clone()),
                screen: spec.screen(v),
                teach: Some(vec![spoken(o).to_string()]),
                ..Default::default()
            };
            let stim = session.resolve(&bus)?;
            session.step(&stim)?;
        }
    }
    Ok(session)
}

/// Trains, resets, pre-tunes the productions of the target function by
/// name, then shows the screen rows with no auditory input. Each probe
/// checks both the spoken output and that the winner is the pre-tuned
/// production for that row.
pub fn run_mental_set(spec: &MentalSetSpec, seed: u64) -> Result<ExperimentReport> {
    if spec.truth_table.len() != spec.rows() {
        return Err(ExperimentError::Table(format!(
            "expected {} rows for k={}, got {}",
            spec.rows(),
            spec.k,
            spec.truth_table.len()
        )));
    }
    let names = pretune_names(&spec.truth_table, &spec.names)?;
    let mut session = train_mental_set(spec, seed)?;
    let mut report = ExperimentReport::new("mentalset", Some(seed));
    report.training_len = session.nu();
    report.param("k", spec.k);
    report.param("n", spec.n());
    report.param("tau", spec.tau);
    report.param("a", spec.modulation());
    report.param("refresh", spec.refresh_on);
    report.param("pretuned", names.clone());

    session.phase(false);
    session.reset();
    for name in &names {
        let bus = BusRecord {
            aud: Some(name.clone()),
            ..Default::default()
        };
        let stim = session.resolve(&bus)?;
        session.step(&stim)?;
    }
    let exam_len = spec.exam_len.unwrap_or(spec.rows());
    for t in 0..exam_len {
        let v = t % spec.rows();
        let screen = spec.screen(v);
        let stim = session.resolve(&BusRecord {
            screen: screen.clone(),
            ..Default::default()
        })?;
        let out = session.step(&stim)?;
        let io = out.step.am_io.as_ref().expect("AM is configured");
        let said = out.step.motor.first().map(|s| session.name(*s)).unwrap_or_default();
        let via = io
            .iwin
            .map(|i| session.name(session.brain().am_unit().expect("AM").ltm().gx(i)[0]))
            .unwrap_or_else(|| "-".into());
        report.probe(
            Some(out.nu),
            format!("screen={}", screen.join(",")),
            format!("{} via {}", spoken(spec.truth_table[v]), names[v]),
            format!("{said} via {via}"),
        );
    }
    report.span = Some((0, session.nu().saturating_sub(1)));
    Ok(report)
}
