//! A world plus a brain assembly driven one cycle at a time, with every
//! cycle rendered as trace records.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::brain::{AmLayout, BrainAssembly, BrainError, BrainInput, BrainStep, FeedbackMode};
use crate::gram::{GramError, GramState};
use crate::pem::{CycleIO, Pem, PemError, PemParams};
use crate::rng::SessionRng;
use crate::symbols::{make_alphabet, Alphabet, AlphabetId, Symbol, SymbolError};
use crate::trace::{BusRecord, Trace, TraceHeader, TraceRecord, UnitRecord, WorldRecord};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("unknown signal `{0}` (expected ns_sel, nm_sel, wen_as, wen_am or feedback)")]
    UnknownSignal(String),
    #[error("bad value `{value}` for {signal}")]
    BadValue { signal: String, value: String },
    #[error("cycle {nu}: {msg}")]
    Input { nu: u64, msg: String },
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error(transparent)]
    Gram(#[from] GramError),
    #[error(transparent)]
    Pem(#[from] PemError),
    #[error(transparent)]
    Brain(#[from] BrainError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphabetDecl {
    pub name: String,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldDecl {
    pub addr: String,
    pub data: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitDecl {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub capacity: usize,
    pub a: f64,
    pub tau: f64,
    pub wx: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LayoutDecl {
    #[default]
    Sensorimotor,
    Mentalset,
}

/// Everything needed to rebuild a session. Stored verbatim in trace headers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct SessionConfig {
    pub alphabets: Vec<AlphabetDecl>,
    pub world: Option<WorldDecl>,
    #[serde(rename = "as")]
    pub as_unit: Option<UnitDecl>,
    #[serde(rename = "am")]
    pub am_unit: Option<UnitDecl>,
    pub layout: LayoutDecl,
    /// Loss threshold shown by viewers; no effect on the simulation.
    pub eloss: Option<f64>,
}

/// Typed external inputs of one cycle.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Stimulus {
    pub addr: Option<Symbol>,
    pub din: Option<Symbol>,
    pub aud: Option<Symbol>,
    pub screen: Vec<Symbol>,
    pub teach: Option<Vec<Symbol>>,
    /// Loads the feedback delay register before the cycle.
    pub fb: Option<Symbol>,
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub nu: u64,
    pub dout: Option<Symbol>,
    pub step: BrainStep,
    pub records: Vec<TraceRecord>,
}

#[derive(Debug, Clone)]
pub struct Session {
    config: SessionConfig,
    alphabets: HashMap<String, Alphabet>,
    by_id: HashMap<AlphabetId, Alphabet>,
    world: Option<GramState>,
    brain: BrainAssembly,
    rng: SessionRng,
    seed: u64,
    nu: u64,
    pub wen_as: bool,
    pub wen_am: bool,
    trace: Option<Vec<TraceRecord>>,
}

fn build_unit(decl: &UnitDecl, alphabets: &HashMap<String, Alphabet>) -> Result<Pem, SessionError> {
    let lookup = |names: &[String]| {
        names
            .iter()
            .map(|n| {
                alphabets
                    .get(n)
                    .cloned()
                    .ok_or_else(|| SessionError::Config(format!("unknown alphabet `{n}`")))
            })
            .collect::<Result<Vec<_>, _>>()
    };
    let params = PemParams::new(lookup(&decl.inputs)?, lookup(&decl.outputs)?, decl.capacity, decl.a, decl.tau)
        .with_weights(decl.wx.clone());
    Ok(Pem::new(params)?)
}

impl Session {
    pub fn new(config: SessionConfig, seed: u64) -> Result<Self, SessionError> {
        let mut alphabets = HashMap::new();
        let mut by_id = HashMap::new();
        for decl in &config.alphabets {
            let a = make_alphabet(&decl.name, &decl.members)?;
            by_id.insert(a.id(), a.clone());
            if alphabets.insert(decl.name.clone(), a).is_some() {
                return Err(SessionError::Config(format!("alphabet `{}` declared twice", decl.name)));
            }
        }
        let get = |n: &str| {
            alphabets
                .get(n)
                .cloned()
                .ok_or_else(|| SessionError::Config(format!("unknown alphabet `{n}`")))
        };
        let world = match &config.world {
            Some(w) => Some(GramState::new(get(&w.addr)?, get(&w.data)?)?),
            None => None,
        };
        let sensory = world.as_ref().map(|w| w.output_alphabet().clone());
        let as_unit = match &config.as_unit {
            Some(d) => {
                let w = world
                    .as_ref()
                    .ok_or_else(|| SessionError::Config("AS needs a world".into()))?;
                if d.inputs.len() != 2
                    || get(&d.inputs[0])?.id() != w.addr_alphabet().id()
                    || get(&d.inputs[1])?.id() != w.data_alphabet().id()
                {
                    return Err(SessionError::Config("AS inputs must be the world's address and data alphabets".into()));
                }
                Some(build_unit(d, &alphabets)?)
            }
            None => None,
        };
        let am_unit = match &config.am_unit {
            Some(d) => Some(build_unit(d, &alphabets)?),
            None => None,
        };
        let layout = match config.layout {
            LayoutDecl::Sensorimotor => AmLayout::Sensorimotor,
            LayoutDecl::Mentalset => {
                let m = config.am_unit.as_ref().map_or(0, |u| u.inputs.len());
                if m < 3 {
                    return Err(SessionError::Config("mental-set layout needs an AM with at least 3 inputs".into()));
                }
                AmLayout::MentalSet { k: m - 2 }
            }
        };
        let brain = BrainAssembly::new(sensory, as_unit, am_unit, layout)?;
        Ok(Self {
            config,
            alphabets,
            by_id,
            world,
            brain,
            rng: SessionRng::new(seed),
            seed,
            nu: 0,
            wen_as: false,
            wen_am: false,
            trace: None,
        })
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Index of the next cycle.
    pub fn nu(&self) -> u64 {
        self.nu
    }

    pub fn world(&self) -> Option<&GramState> {
        self.world.as_ref()
    }

    pub fn brain(&self) -> &BrainAssembly {
        &self.brain
    }

    pub fn brain_mut(&mut self) -> &mut BrainAssembly {
        &mut self.brain
    }

    pub fn alphabet(&self, name: &str) -> Result<&Alphabet, SessionError> {
        self.alphabets
            .get(name)
            .ok_or_else(|| SessionError::Config(format!("unknown alphabet `{name}`")))
    }

    /// Starts collecting trace records.
    pub fn record_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn take_trace(&mut self) -> Option<Trace> {
        self.trace.take().map(|records| Trace {
            header: TraceHeader::new(self.seed, self.config.clone()),
            records,
        })
    }

    pub fn name(&self, s: Symbol) -> String {
        self.by_id
            .get(&s.alphabet_id())
            .map(|a| a.print(s).to_string())
            .unwrap_or_else(|| format!("?{}", s.token()))
    }

    fn names(&self, v: &[Symbol]) -> Vec<String> {
        v.iter().map(|s| self.name(*s)).collect()
    }

    pub fn set(&mut self, signal: &str, value: &str) -> Result<(), SessionError> {
        let flag = || match value {
            "1" | "on" | "true" => Ok(true),
            "0" | "off" | "false" => Ok(false),
            _ => Err(SessionError::BadValue {
                signal: signal.to_string(),
                value: value.to_string(),
            }),
        };
        match signal {
            "ns_sel" => self.brain.ns_sel = flag()?,
            "nm_sel" => self.brain.nm_sel = flag()?,
            "wen_as" => self.wen_as = flag()?,
            "wen_am" => self.wen_am = flag()?,
            "wen" => {
                let v = flag()?;
                self.wen_as = v;
                self.wen_am = v;
            }
            "feedback" => {
                self.brain.feedback = FeedbackMode::parse(value).ok_or_else(|| SessionError::BadValue {
                    signal: signal.to_string(),
                    value: value.to_string(),
                })?
            }
            other => return Err(SessionError::UnknownSignal(other.to_string())),
        }
        Ok(())
    }

    /// Training switches everything to the teacher side with writing on;
    /// examination switches to the learned side with writing off.
    pub fn phase(&mut self, train: bool) {
        self.brain.ns_sel = train;
        self.brain.nm_sel = train;
        self.wen_as = train;
        self.wen_am = train;
    }

    pub fn reset(&mut self) {
        self.brain.reset();
        if let Some(t) = self.trace.as_mut() {
            t.push(TraceRecord::Reset { nu: self.nu });
        }
    }

    fn am_params(&self) -> Option<&PemParams> {
        self.brain.am_unit().map(|u| u.params())
    }

    fn aud_alphabet(&self) -> Option<&Alphabet> {
        let p = self.am_params()?;
        match self.brain.layout() {
            AmLayout::Sensorimotor => (p.m() == 3).then(|| &p.input_alphabets[2]),
            AmLayout::MentalSet { .. } => Some(&p.input_alphabets[0]),
        }
    }

    fn input_err(&self, msg: impl Into<String>) -> SessionError {
        SessionError::Input {
            nu: self.nu,
            msg: msg.into(),
        }
    }

    /// Resolves the symbolic inputs of a bus record.
    pub fn resolve(&self, bus: &BusRecord) -> Result<Stimulus, SessionError> {
        let mut stim = Stimulus::default();
        if let Some(addr) = &bus.addr {
            let w = self.world.as_ref().ok_or_else(|| self.input_err("addr given but no world"))?;
            stim.addr = Some(w.addr_alphabet().parse(addr)?);
        }
        if let Some(din) = &bus.din {
            let w = self.world.as_ref().ok_or_else(|| self.input_err("din given but no world"))?;
            stim.din = Some(w.data_alphabet().parse(din)?);
        }
        if let Some(aud) = &bus.aud {
            let a = self.aud_alphabet().ok_or_else(|| self.input_err("this AM has no auditory input"))?;
            stim.aud = Some(a.parse(aud)?);
        }
        if !bus.screen.is_empty() {
            let (p, k) = match (self.am_params(), self.brain.layout()) {
                (Some(p), AmLayout::MentalSet { k }) => (p, k),
                _ => return Err(self.input_err("screen input needs the mental-set layout")),
            };
            if bus.screen.len() != k {
                return Err(self.input_err(format!("screen has {} squares, expected {k}", bus.screen.len())));
            }
            stim.screen = bus
                .screen
                .iter()
                .enumerate()
                .map(|(j, s)| p.input_alphabets[j + 1].parse(s))
                .collect::<Result<_, _>>()?;
        }
        if let Some(teach) = &bus.teach {
            let p = self.am_params().ok_or_else(|| self.input_err("teacher output given but no AM"))?;
            if teach.len() != p.p() {
                return Err(self.input_err(format!("teacher gave {} symbols, AM has {} outputs", teach.len(), p.p())));
            }
            stim.teach = Some(
                teach
                    .iter()
                    .zip(&p.output_alphabets)
                    .map(|(s, a)| a.parse(s))
                    .collect::<Result<_, _>>()?,
            );
        }
        if let Some(fb) = &bus.fb {
            let p = self.am_params().ok_or_else(|| self.input_err("feedback preset given but no AM"))?;
            stim.fb = Some(p.output_alphabets[p.p() - 1].parse(fb)?);
        }
        Ok(stim)
    }

    /// Applies the switch settings of a bus record and runs its cycle.
    pub fn step_bus(&mut self, bus: &BusRecord) -> Result<StepOutcome, SessionError> {
        self.brain.ns_sel = bus.ns_sel;
        self.brain.nm_sel = bus.nm_sel;
        self.wen_as = bus.wen_as;
        self.wen_am = bus.wen_am;
        self.brain.feedback = FeedbackMode::parse(&bus.feedback).ok_or_else(|| SessionError::BadValue {
            signal: "feedback".into(),
            value: bus.feedback.clone(),
        })?;
        let stim = self.resolve(bus)?;
        self.step(&stim)
    }

    fn bus_record(&self, stim: &Stimulus) -> BusRecord {
        BusRecord {
            nu: self.nu,
            addr: stim.addr.map(|s| self.name(s)),
            din: stim.din.map(|s| self.name(s)),
            aud: stim.aud.map(|s| self.name(s)),
            screen: self.names(&stim.screen),
            teach: stim.teach.as_ref().map(|t| self.names(t)),
            fb: stim.fb.map(|s| self.name(s)),
            ns_sel: self.brain.ns_sel,
            nm_sel: self.brain.nm_sel,
            wen_as: self.wen_as,
            wen_am: self.wen_am,
            feedback: self.brain.feedback.as_str().to_string(),
        }
    }

    fn unit_record(&self, unit: &str, io: &CycleIO, oracle: Option<Symbol>, refresh_s: Option<f64>) -> UnitRecord {
        UnitRecord {
            nu: self.nu,
            unit: unit.to_string(),
            x: self.names(&io.x),
            xy: self.names(&io.xy),
            wen: io.wen,
            s: io.s.clone(),
            se: io.se.clone(),
            e: io.e.clone(),
            iwin: io.iwin.map(|i| i + 1),
            y: self.names(&io.y),
            wptr: io.wptr,
            e_next: io.e_next.clone(),
            oracle: oracle.map(|s| self.name(s)),
            refresh_s,
        }
    }

    /// Runs one cycle with the current switch settings.
    pub fn step(&mut self, stim: &Stimulus) -> Result<StepOutcome, SessionError> {
        let bus = self.bus_record(stim);
        let mut records = vec![TraceRecord::Bus(bus)];

        let mut dout = None;
        if let Some(addr) = stim.addr {
            let world = self.world.as_mut().ok_or_else(|| SessionError::Input {
                nu: self.nu,
                msg: "addr given but no world".into(),
            })?;
            let din = stim.din.unwrap_or(world.data_alphabet().epsilon());
            let out = world.apply(addr, din)?;
            dout = Some(out);
            let world = self.world.as_ref().expect("checked above");
            records.push(TraceRecord::World(WorldRecord {
                nu: self.nu,
                addr: self.name(addr),
                din: self.name(din),
                dout: self.name(out),
                mem: self.names(world.mem()),
            }));
        } else if stim.din.is_some() {
            return Err(self.input_err("din given without addr"));
        }

        let motor_in = match (stim.addr, self.brain.as_unit()) {
            (Some(addr), Some(unit)) => Some((addr, stim.din.unwrap_or(unit.params().input_alphabets[1].epsilon()))),
            _ => None,
        };
        let input = BrainInput {
            motor_in,
            dout,
            aud: stim.aud,
            screen: stim.screen.clone(),
            teacher_y: stim.teach.clone(),
            wen_as: self.wen_as,
            wen_am: self.wen_am,
            preset_feedback: stim.fb,
        };
        let step = self.brain.cycle(&input, &mut self.rng)?;
        if let Some(io) = &step.as_io {
            records.push(TraceRecord::Unit(self.unit_record("AS", io, dout, None)));
        }
        if let Some(io) = &step.am_io {
            records.push(TraceRecord::Unit(self.unit_record("AM", io, None, step.refresh_s)));
        }
        if let Some(t) = self.trace.as_mut() {
            t.extend(records.iter().cloned());
        }
        let nu = self.nu;
        self.nu += 1;
        Ok(StepOutcome {
            nu,
            dout,
            step,
            records,
        })
    }

    fn unit_snapshot(&self, unit: &Pem) -> Value {
        let ltm = unit.ltm();
        let gx: Vec<Vec<String>> = (0..ltm.written()).map(|i| self.names(ltm.gx(i))).collect();
        let gy: Vec<Vec<String>> = (0..ltm.written()).map(|i| self.names(ltm.gy(i))).collect();
        json!({
            "capacity": ltm.capacity(),
            "wptr": ltm.wptr(),
            "e": unit.e(),
            "gx": gx,
            "gy": gy,
            "emax": unit.params().emax(),
        })
    }

    /// Full observable state: switches, world memory, excitation and LTM of
    /// every unit.
    pub fn snapshot(&self) -> Value {
        let mut units = serde_json::Map::new();
        if let Some(w) = &self.world {
            units.insert("world".into(), json!({ "mem": self.names(w.mem()) }));
        }
        if let Some(u) = self.brain.as_unit() {
            units.insert("AS".into(), self.unit_snapshot(u));
        }
        if let Some(u) = self.brain.am_unit() {
            let mut v = self.unit_snapshot(u);
            v["feedback_reg"] = json!(self.brain.feedback_reg().map(|s| self.name(s)));
            units.insert("AM".into(), v);
        }
        json!({
            "nu": self.nu,
            "switches": {
                "ns_sel": self.brain.ns_sel,
                "nm_sel": self.brain.nm_sel,
                "wen_as": self.wen_as,
                "wen_am": self.wen_am,
                "feedback": self.brain.feedback.as_str(),
            },
            "eloss": self.config.eloss,
            "units": Value::Object(units),
        })
    }
}
