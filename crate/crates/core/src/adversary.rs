//! Distinguishing sequence pairs for GRAM learners, and the learners they
//! defeat.
//!
//! Inputs are `(addr, din)` pairs over `A = {1, 2}`, `D = {a, b}` with `_`
//! for ε. A pair of input sequences ends in the same read but must produce
//! different outputs; a learner that cannot tell the two apart fails one
//! of them.

use std::collections::BTreeMap;

use serde_json::json;
use thiserror::Error;

use crate::experiments::{tau_min, GramStep, AS_MODULATION};
use crate::gram::GramState;
use crate::pem::{Pem, PemParams};
use crate::report::ExperimentReport;
use crate::rng::SessionRng;
use crate::symbols::{make_alphabet, Alphabet, Symbol};

#[derive(Debug, Error)]
pub enum AdversaryError {
    #[error("invalid pair parameters: {0}")]
    Param(String),
    #[error("generated pair does not distinguish: both oracles are `{0}`")]
    NotDistinguishing(String),
}

type Result<T> = std::result::Result<T, AdversaryError>;

pub const ADDRESSES: [&str; 2] = ["1", "2"];
pub const DATA: [&str; 2] = ["a", "b"];
/// Filler data symbols, ε included.
pub const FILLERS: [&str; 3] = ["a", "b", "_"];

/// One input/output sample.
pub type Sample = (GramStep, String);

#[derive(Debug, Clone)]
struct Gram {
    addr: Alphabet,
    data: Alphabet,
}

impl Gram {
    fn new() -> Self {
        Self {
            addr: make_alphabet("A", &ADDRESSES).expect("static alphabet"),
            data: make_alphabet("D", &DATA).expect("static alphabet"),
        }
    }

    fn fresh(&self) -> GramState {
        GramState::new(self.addr.clone(), self.data.clone()).expect("static alphabets")
    }

    fn symbols(&self, step: &GramStep) -> (Symbol, Symbol) {
        (
            self.addr.parse(&step.addr).expect("address from the fixed alphabet"),
            self.data.parse(&step.din).expect("data from the fixed alphabet"),
        )
    }

    /// Runs `inputs` on an empty GRAM.
    fn transcript(&self, inputs: &[GramStep]) -> Vec<Sample> {
        let mut g = self.fresh();
        inputs
            .iter()
            .map(|s| {
                let (a, d) = self.symbols(s);
                let out = g.apply(a, d).expect("symbols are checked");
                (s.clone(), self.data.print(out).to_string())
            })
            .collect()
    }
}

/// GRAM output of the last step of `inputs`, starting from empty memory.
pub fn gram_oracle(inputs: &[GramStep]) -> String {
    Gram::new()
        .transcript(inputs)
        .pop()
        .map(|(_, out)| out)
        .unwrap_or_else(|| "_".into())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequencePair {
    pub seq1: Vec<GramStep>,
    pub seq2: Vec<GramStep>,
    pub oracle1: String,
    pub oracle2: String,
}

impl SequencePair {
    fn from_sequences(seq1: Vec<GramStep>, seq2: Vec<GramStep>) -> Result<Self> {
        let oracle1 = gram_oracle(&seq1);
        let oracle2 = gram_oracle(&seq2);
        if oracle1 == oracle2 {
            return Err(AdversaryError::NotDistinguishing(oracle1));
        }
        Ok(Self {
            seq1,
            seq2,
            oracle1,
            oracle2,
        })
    }
}

fn check_filler(d: &str) -> Result<()> {
    if FILLERS.contains(&d) {
        Ok(())
    } else {
        Err(AdversaryError::Param(format!("filler `{d}` is not in D ∪ {{ε}}")))
    }
}

/// `(1,a), (2,d)×(m−1), (1,ε)` against the same with `(1,b)` first: the
/// last `m` inputs agree, the outputs are `a` and `b`.
pub fn gen_theorem1_pair(m: usize, filler: &str) -> Result<SequencePair> {
    if m == 0 {
        return Err(AdversaryError::Param("m must be at least 1".into()));
    }
    check_filler(filler)?;
    let build = |first: &str| {
        let mut s = vec![GramStep::new("1", first)];
        s.extend((1..m).map(|_| GramStep::new("2", filler)));
        s.push(GramStep::new("1", "_"));
        s
    };
    SequencePair::from_sequences(build("a"), build("b"))
}

/// Writes `a` at position `m1` and `b` at `m2` (1-based) then reads;
/// the second sequence swaps the two writes. Same multiset of inputs,
/// outputs `b` and `a`.
pub fn gen_theorem2_pair(m: usize, m1: usize, m2: usize, filler: &str) -> Result<SequencePair> {
    if !(1 <= m1 && m1 < m2 && m2 <= m) {
        return Err(AdversaryError::Param(format!("need 1 ≤ m1 < m2 ≤ m, got m={m}, m1={m1}, m2={m2}")));
    }
    check_filler(filler)?;
    let build = |at1: &str, at2: &str| {
        let mut s: Vec<GramStep> = (1..=m)
            .map(|i| match i {
                i if i == m1 => GramStep::new("1", at1),
                i if i == m2 => GramStep::new("1", at2),
                _ => GramStep::new("2", filler),
            })
            .collect();
        s.push(GramStep::new("1", "_"));
        s
    };
    SequencePair::from_sequences(build("a", "b"), build("b", "a"))
}

/// A sequence learner. `predict` returns the output expected for the last
/// input of an episode.
pub trait LearnerPort {
    fn name(&self) -> String;
    fn train(&mut self, episodes: &[Vec<Sample>]);
    fn predict(&self, inputs: &[GramStep]) -> String;
}

/// Rank of an output token for tie-breaking: alphabet order, ε last.
fn token_rank(s: &str) -> usize {
    DATA.iter().position(|d| *d == s).unwrap_or(DATA.len())
}

fn most_frequent(counts: Option<&BTreeMap<String, usize>>) -> String {
    counts
        .and_then(|c| {
            c.iter()
                .max_by(|(ka, va), (kb, vb)| va.cmp(vb).then(token_rank(kb).cmp(&token_rank(ka))))
                .map(|(k, _)| k.clone())
        })
        .unwrap_or_else(|| "_".into())
}

/// Predicts from the last `m` inputs only.
#[derive(Debug, Clone)]
pub struct WindowLearner {
    m: usize,
    table: BTreeMap<Vec<GramStep>, BTreeMap<String, usize>>,
}

pub fn baseline_window_learner(m: usize) -> WindowLearner {
    WindowLearner {
        m,
        table: BTreeMap::new(),
    }
}

impl WindowLearner {
    fn key(&self, inputs: &[GramStep]) -> Vec<GramStep> {
        inputs[inputs.len().saturating_sub(self.m)..].to_vec()
    }
}

impl LearnerPort for WindowLearner {
    fn name(&self) -> String {
        "window".into()
    }

    fn train(&mut self, episodes: &[Vec<Sample>]) {
        for ep in episodes {
            let inputs: Vec<GramStep> = ep.iter().map(|(x, _)| x.clone()).collect();
            for (t, (_, out)) in ep.iter().enumerate() {
                let key = self.key(&inputs[..=t]);
                *self.table.entry(key).or_default().entry(out.clone()).or_default() += 1;
            }
        }
    }

    fn predict(&self, inputs: &[GramStep]) -> String {
        most_frequent(self.table.get(&self.key(inputs)))
    }
}

/// Predicts from the current input and the unordered multiset of all
/// earlier inputs of the episode.
#[derive(Debug, Clone, Default)]
pub struct BagLearner {
    table: BTreeMap<(Vec<GramStep>, GramStep), BTreeMap<String, usize>>,
}

pub fn baseline_bag_learner() -> BagLearner {
    BagLearner::default()
}

fn bag_key(inputs: &[GramStep]) -> (Vec<GramStep>, GramStep) {
    let (last, prior) = inputs.split_last().expect("non-empty input");
    let mut bag = prior.to_vec();
    bag.sort();
    (bag, last.clone())
}

impl LearnerPort for BagLearner {
    fn name(&self) -> String {
        "bag".into()
    }

    fn train(&mut self, episodes: &[Vec<Sample>]) {
        for ep in episodes {
            let inputs: Vec<GramStep> = ep.iter().map(|(x, _)| x.clone()).collect();
            for (t, (_, out)) in ep.iter().enumerate() {
                *self
                    .table
                    .entry(bag_key(&inputs[..=t]))
                    .or_default()
                    .entry(out.clone())
                    .or_default() += 1;
            }
        }
    }

    fn predict(&self, inputs: &[GramStep]) -> String {
        if inputs.is_empty() {
            return "_".into();
        }
        most_frequent(self.table.get(&bag_key(inputs)))
    }
}

/// AS configured for GRAM simulation: trained by writing every sample,
/// predicting by running the episode from rest with writing off.
#[derive(Debug, Clone)]
pub struct PemLearner {
    gram: Gram,
    tau: f64,
    unit: Option<Pem>,
}

impl PemLearner {
    pub fn new(tau: f64) -> Self {
        Self {
            gram: Gram::new(),
            tau,
            unit: None,
        }
    }

    fn x(&self, step: &GramStep) -> Vec<Symbol> {
        let (a, d) = self.gram.symbols(step);
        vec![a, d]
    }
}

impl LearnerPort for PemLearner {
    fn name(&self) -> String {
        "pem-as".into()
    }

    fn train(&mut self, episodes: &[Vec<Sample>]) {
        let total: usize = episodes.iter().map(Vec::len).sum();
        let params = PemParams::new(
            vec![self.gram.addr.clone(), self.gram.data.clone()],
            vec![self.gram.data.clone()],
            total.max(1),
            AS_MODULATION,
            self.tau,
        );
        let mut unit = Pem::new(params).expect("valid AS parameters");
        let mut rng = SessionRng::new(0);
        for (step, out) in episodes.iter().flatten() {
            let x = self.x(step);
            let y = vec![self.gram.data.parse(out).expect("fixed alphabet")];
            unit.cycle(&x, &y, true, &mut rng).expect("capacity sized to the transcript");
        }
        self.unit = Some(unit);
    }

    fn predict(&self, inputs: &[GramStep]) -> String {
        let Some(unit) = &self.unit else {
            return "_".into();
        };
        let mut unit = unit.clone();
        unit.reset_e();
        let mut rng = SessionRng::new(0);
        let xy = unit.empty_output();
        let mut last = "_".to_string();
        for step in inputs {
            let io = unit.cycle(&self.x(step), &xy, false, &mut rng).expect("writing is off");
            last = self.gram.data.print(io.y[0]).to_string();
        }
        last
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Distinguishes,
    Fails,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Distinguishes => "Distinguishes",
            Verdict::Fails => "Fails",
        }
    }
}

/// Random GRAM episodes of the given length totalling about `budget`
/// steps, followed by both sequences of `pair`.
pub fn training_episodes(pair: &SequencePair, budget: usize, seed: u64) -> Vec<Vec<Sample>> {
    let g = Gram::new();
    let mut rng = SessionRng::new(seed);
    let len = pair.seq1.len();
    let mut episodes = Vec::new();
    let mut used = 0;
    while used + len <= budget {
        let inputs: Vec<GramStep> = (0..len)
            .map(|_| {
                let addr = ADDRESSES[rng.below(2) as usize];
                GramStep::new(addr, FILLERS[rng.below(3) as usize])
            })
            .collect();
        episodes.push(g.transcript(&inputs));
        used += len;
    }
    episodes.push(g.transcript(&pair.seq1));
    episodes.push(g.transcript(&pair.seq2));
    episodes
}

/// Trains `learner` and checks both predictions against the oracles.
pub fn evaluate_learner(learner: &mut dyn LearnerPort, pair: &SequencePair, budget: usize, seed: u64) -> Verdict {
    learner.train(&training_episodes(pair, budget, seed));
    if learner.predict(&pair.seq1) == pair.oracle1 && learner.predict(&pair.seq2) == pair.oracle2 {
        Verdict::Distinguishes
    } else {
        Verdict::Fails
    }
}

/// Every pair of the given theorem for window length `m`.
pub fn all_pairs(theorem: u8, m: usize) -> Vec<(String, SequencePair)> {
    let mut out = Vec::new();
    for d in FILLERS {
        match theorem {
            1 => out.push((format!("d={d}"), gen_theorem1_pair(m, d).expect("valid parameters"))),
            _ => {
                for m2 in 2..=m {
                    for m1 in 1..m2 {
                        out.push((
                            format!("m1={m1} m2={m2} d={d}"),
                            gen_theorem2_pair(m, m1, m2, d).expect("valid parameters"),
                        ));
                    }
                }
            }
        }
    }
    out
}

/// The expected verdict of a learner on a theorem's pairs, where the
/// theorem makes a claim about it.
fn expected_verdict(learner: &str, theorem: u8) -> Option<Verdict> {
    match (learner, theorem) {
        ("window", 1) | ("bag", 2) => Some(Verdict::Fails),
        ("pem-as", _) => Some(Verdict::Distinguishes),
        _ => None,
    }
}

/// Learner × theorem × m matrix. Cells the theorems make claims about are
/// probes; the remaining cells are reported in `params.matrix` only.
pub fn run_adversary(max_m: usize, budget: usize, seed: u64) -> ExperimentReport {
    let mut report = ExperimentReport::new("adversary", Some(seed));
    report.param("budget", budget);
    let mut matrix = serde_json::Map::new();
    for m in 1..=max_m {
        let tau = tau_min((m + 1) as f64).expect("non-negative").max(2.0);
        for theorem in [1u8, 2] {
            let pairs = all_pairs(theorem, m);
            let mut learners: Vec<Box<dyn Fn() -> Box<dyn LearnerPort>>> = vec![
                Box::new(move || Box::new(baseline_window_learner(m))),
                Box::new(|| Box::new(baseline_bag_learner())),
                Box::new(move || Box::new(PemLearner::new(tau))),
            ];
            for make in learners.drain(..) {
                let name = make().name();
                let mut distinguished = 0;
                for (label, pair) in &pairs {
                    let verdict = evaluate_learner(make().as_mut(), pair, budget, seed);
                    if verdict == Verdict::Distinguishes {
                        distinguished += 1;
                    }
                    if let Some(expected) = expected_verdict(&name, theorem) {
                        report.probe(
                            None,
                            format!("{name} theorem{theorem} m={m} {label}"),
                            expected.as_str().into(),
                            verdict.as_str().into(),
                        );
                    }
                }
                let cell = matrix
                    .entry(name)
                    .or_insert_with(|| json!({}))
                    .as_object_mut()
                    .expect("object");
                let row = cell
                    .entry(format!("theorem{theorem}"))
                    .or_insert_with(|| json!({}))
                    .as_object_mut()
                    .expect("object");
                row.insert(
                    m.to_string(),
                    json!({ "pairs": pairs.len(), "distinguishes": distinguished }),
                );
            }
        }
    }
    report.param("matrix", serde_json::Value::Object(matrix));
    report
}
