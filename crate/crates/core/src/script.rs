//! Teacher scripts.
//!
//! A script is plain text, one statement per line, `#` starts a comment.
//! Header statements come first:
//!
//! ```text
//! ALPHABET A 1 2                 # members; ε is implicit and written `_`
//! WORLD A D                      # GRAM with address and data alphabets
//! UNIT AS in=A,D out=D capacity=8 a=0.4 tau=100 [wx=1,1]
//! UNIT AM in=D,Q out=Q,Q,Q capacity=8 a=0 tau=100
//! LAYOUT sensorimotor|mentalset
//! ELOSS 2
//! SEED 42
//! ```
//!
//! followed by commands:
//!
//! ```text
//! PHASE train|exam
//! SET ns_sel|nm_sel|wen_as|wen_am|wen 0|1
//! SET feedback off|delayed|refresh
//! CYCLE [addr=1] [din=a] [aud=a3] [screen=0,1] [fb=q] [teach y1=k y2=e y3=s]
//! RESET
//! ASSERT dout=a | ASSERT y=s0 | ASSERT ns=a | ASSERT mem=a,a
//! ```

use thiserror::Error;

use crate::report::ExperimentReport;
use crate::session::{AlphabetDecl, LayoutDecl, Session, SessionConfig, SessionError, UnitDecl, WorldDecl};
use crate::trace::{BusRecord, Trace};

#[derive(Debug, Error)]
pub enum ScriptError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: {source}")]
    Run {
        line: usize,
        #[source]
        source: SessionError,
    },
}

impl ScriptError {
    pub fn line(&self) -> usize {
        match self {
            ScriptError::Parse { line, .. } | ScriptError::Run { line, .. } => *line,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Assertion {
    Dout(String),
    Y(Vec<String>),
    Ns(String),
    Mem(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Set { signal: String, value: String },
    Phase { train: bool },
    /// Inputs of one cycle; the switch fields of the record are ignored.
    Cycle(BusRecord),
    Reset,
    Assert(Assertion),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TeacherScript {
    pub config: SessionConfig,
    pub seed: Option<u64>,
    /// Commands with their 1-based source line.
    pub commands: Vec<(usize, Command)>,
}

fn perr(line: usize, msg: impl Into<String>) -> ScriptError {
    ScriptError::Parse { line, msg: msg.into() }
}

fn list(s: &str) -> Vec<String> {
    s.split(',').map(|t| t.trim().to_string()).collect()
}

fn key_values<'a>(line: usize, tokens: &[&'a str]) -> Result<Vec<(&'a str, &'a str)>, ScriptError> {
    tokens
        .iter()
        .map(|t| t.split_once('=').ok_or_else(|| perr(line, format!("expected key=value, got `{t}`"))))
        .collect()
}

fn parse_unit(line: usize, tokens: &[&str]) -> Result<UnitDecl, ScriptError> {
    let mut inputs = None;
    let mut outputs = None;
    let mut capacity = None;
    let mut a = None;
    let mut tau = None;
    let mut wx = None;
    let num = |k: &str, v: &str| v.parse::<f64>().map_err(|_| perr(line, format!("{k}: `{v}` is not a number")));
    for (k, v) in key_values(line, tokens)? {
        match k {
            "in" => inputs = Some(list(v)),
            "out" => outputs = Some(list(v)),
            "capacity" => {
                capacity = Some(
                    v.parse::<usize>()
                        .map_err(|_| perr(line, format!("capacity: `{v}` is not a count")))?,
                )
            }
            "a" => a = Some(num(k, v)?),
            "tau" => tau = Some(num(k, v)?),
            "wx" => wx = Some(list(v).iter().map(|w| num(k, w)).collect::<Result<Vec<_>, _>>()?),
            other => return Err(perr(line, format!("unknown unit parameter `{other}`"))),
        }
    }
    let inputs = inputs.ok_or_else(|| perr(line, "missing in="))?;
    let wx = wx.unwrap_or_else(|| vec![1.0; inputs.len()]);
    Ok(UnitDecl {
        inputs,
        outputs: outputs.ok_or_else(|| perr(line, "missing out="))?,
        capacity: capacity.ok_or_else(|| perr(line, "missing capacity="))?,
        a: a.ok_or_else(|| perr(line, "missing a="))?,
        tau: tau.ok_or_else(|| perr(line, "missing tau="))?,
        wx,
    })
}

fn parse_cycle(line: usize, tokens: &[&str]) -> Result<BusRecord, ScriptError> {
    let mut bus = BusRecord {
        feedback: "off".into(),
        ..Default::default()
    };
    let mut teach: Option<Vec<(usize, String)>> = None;
    for tok in tokens {
        if *tok == "teach" {
            teach = Some(Vec::new());
            continue;
        }
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| perr(line, format!("expected key=value, got `{tok}`")))?;
        if let Some(t) = teach.as_mut() {
            let idx = k
                .strip_prefix('y')
                .and_then(|i| i.parse::<usize>().ok())
                .filter(|i| *i >= 1)
                .ok_or_else(|| perr(line, format!("teacher output must be y1, y2, ..., got `{k}`")))?;
            t.push((idx, v.to_string()));
            continue;
        }
        match k {
            "addr" => bus.addr = Some(v.to_string()),
            "din" => bus.din = Some(v.to_string()),
            "aud" => bus.aud = Some(v.to_string()),
            "screen" => bus.screen = list(v),
            "fb" => bus.fb = Some(v.to_string()),
            other => return Err(perr(line, format!("unknown cycle field `{other}`"))),
        }
    }
    if let Some(t) = teach {
        let width = t.iter().map(|(i, _)| *i).max().unwrap_or(0);
        let mut y = vec!["_".to_string(); width];
        for (i, v) in t {
            y[i - 1] = v;
        }
        bus.teach = Some(y);
    }
    Ok(bus)
}

impl TeacherScript {
    pub fn parse(text: &str) -> Result<Self, ScriptError> {
        let mut config = SessionConfig::default();
        let mut seed = None;
        let mut commands = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = body.split_whitespace().collect();
            let (head, rest) = (tokens[0].to_ascii_uppercase(), &tokens[1..]);
            let in_header = commands.is_empty();
            let header_only = |what: &str| {
                if in_header {
                    Ok(())
                } else {
                    Err(perr(line, format!("{what} must precede all commands")))
                }
            };
            match head.as_str() {
                "ALPHABET" => {
                    header_only("ALPHABET")?;
                    let (name, members) = rest.split_first().ok_or_else(|| perr(line, "ALPHABET needs a name"))?;
                    config.alphabets.push(AlphabetDecl {
                        name: name.to_string(),
                        members: members.iter().map(|m| m.to_string()).collect(),
                    });
                }
                "WORLD" => {
                    header_only("WORLD")?;
                    match rest {
                        [addr, data] => {
                            config.world = Some(WorldDecl {
                                addr: addr.to_string(),
                                data: data.to_string(),
                            })
                        }
                        _ => return Err(perr(line, "WORLD <addr-alphabet> <data-alphabet>")),
                    }
                }
                "UNIT" => {
                    header_only("UNIT")?;
                    let (name, params) = rest.split_first().ok_or_else(|| perr(line, "UNIT needs AS or AM"))?;
                    let decl = parse_unit(line, params)?;
                    match name.to_ascii_uppercase().as_str() {
                        "AS" => config.as_unit = Some(decl),
                        "AM" => config.am_unit = Some(decl),
                        other => return Err(perr(line, format!("unknown unit `{other}`"))),
                    }
                }
                "LAYOUT" => {
                    header_only("LAYOUT")?;
                    config.layout = match rest {
                        ["sensorimotor"] => LayoutDecl::Sensorimotor,
                        ["mentalset"] => LayoutDecl::Mentalset,
                        _ => return Err(perr(line, "LAYOUT sensorimotor|mentalset")),
                    };
                }
                "ELOSS" => {
                    header_only("ELOSS")?;
                    config.eloss = Some(
                        rest.first()
                            .and_then(|v| v.parse().ok())
                            .ok_or_else(|| perr(line, "ELOSS <real>"))?,
                    );
                }
                "SEED" => {
                    header_only("SEED")?;
                    seed = Some(
                        rest.first()
                            .and_then(|v| v.parse().ok())
                            .ok_or_else(|| perr(line, "SEED <u64>"))?,
                    );
                }
                "SET" => match rest {
                    [signal, value] => commands.push((
                        line,
                        Command::Set {
                            signal: signal.to_string(),
                            value: value.to_string(),
                        },
                    )),
                    _ => return Err(perr(line, "SET <signal> <value>")),
                },
                "PHASE" => {
                    let train = match rest {
                        ["train"] => true,
                        ["exam"] => false,
                        _ => return Err(perr(line, "PHASE train|exam")),
                    };
                    commands.push((line, Command::Phase { train }));
                }
                "CYCLE" => commands.push((line, Command::Cycle(parse_cycle(line, rest)?))),
                "RESET" => commands.push((line, Command::Reset)),
                "ASSERT" => {
                    let [kv] = rest else {
                        return Err(perr(line, "ASSERT <field>=<value>"));
                    };
                    let (k, v) = kv.split_once('=').ok_or_else(|| perr(line, "ASSERT <field>=<value>"))?;
                    let a = match k {
                        "dout" => Assertion::Dout(v.to_string()),
                        "ns" => Assertion::Ns(v.to_string()),
                        "y" => Assertion::Y(list(v)),
                        "mem" => Assertion::Mem(list(v)),
                        other => return Err(perr(line, format!("cannot assert on `{other}`"))),
                    };
                    commands.push((line, Command::Assert(a)));
                }
                other => return Err(perr(line, format!("unknown statement `{other}`"))),
            }
        }
        let script = TeacherScript { config, seed, commands };
        script.check()?;
        Ok(script)
    }

    /// Builds the session once and resolves every symbol the commands
    /// mention, so undeclared symbols are reported with their line.
    fn check(&self) -> Result<(), ScriptError> {
        let first_line = self.commands.first().map_or(1, |(l, _)| *l);
        let session = Session::new(self.config.clone(), 0).map_err(|source| ScriptError::Run {
            line: first_line,
            source,
        })?;
        for (line, cmd) in &self.commands {
            let res = match cmd {
                Command::Cycle(bus) => session.resolve(bus).map(|_| ()),
                Command::Set { signal, value } => session.clone().set(signal, value),
                _ => Ok(()),
            };
            res.map_err(|source| ScriptError::Run { line: *line, source })?;
        }
        Ok(())
    }
}

/// Result of running a script.
#[derive(Debug, Clone)]
pub struct ScriptRun {
    pub report: ExperimentReport,
    pub trace: Option<Trace>,
}

/// Runs a parsed script. `seed` overrides the script's `SEED` (default 0).
pub fn run(script: &TeacherScript, seed: Option<u64>, record_trace: bool) -> Result<ScriptRun, ScriptError> {
    let seed = seed.or(script.seed).unwrap_or(0);
    let (mut session, report) = execute(script, seed, record_trace)?;
    Ok(ScriptRun {
        report,
        trace: session.take_trace(),
    })
}

/// Runs a parsed script and hands back the session in its final state.
pub fn run_into(script: &TeacherScript, seed: u64) -> Result<(Session, ExperimentReport), ScriptError> {
    execute(script, seed, false)
}

fn execute(script: &TeacherScript, seed: u64, record_trace: bool) -> Result<(Session, ExperimentReport), ScriptError> {
    let first_line = script.commands.first().map_or(1, |(l, _)| *l);
    let mut session = Session::new(script.config.clone(), seed).map_err(|source| ScriptError::Run {
        line: first_line,
        source,
    })?;
    if record_trace {
        session.record_trace();
    }
    let mut report = ExperimentReport::new("script", Some(seed));
    let mut last_dout = "_".to_string();
    let mut last_ns = "_".to_string();
    let mut last_y: Vec<String> = Vec::new();
    let mut last_nu = None;
    let mut first_exam = None;
    for (line, cmd) in &script.commands {
        let line = *line;
        let run_err = |source| ScriptError::Run { line, source };
        match cmd {
            Command::Set { signal, value } => session.set(signal, value).map_err(run_err)?,
            Command::Phase { train } => {
                session.phase(*train);
                if !train && first_exam.is_none() {
                    first_exam = Some(session.nu());
                }
            }
            Command::Reset => session.reset(),
            Command::Cycle(bus) => {
                let stim = session.resolve(bus).map_err(run_err)?;
                let out = session.step(&stim).map_err(run_err)?;
                last_dout = out.dout.map_or("_".into(), |d| session.name(d));
                last_ns = out.step.ns_y.map_or("_".into(), |d| session.name(d));
                last_y = out.step.motor.iter().map(|s| session.name(*s)).collect();
                last_nu = Some(out.nu);
            }
            Command::Assert(a) => {
                let (what, expected, actual) = match a {
                    Assertion::Dout(v) => ("dout", v.clone(), last_dout.clone()),
                    Assertion::Ns(v) => ("ns", v.clone(), last_ns.clone()),
                    Assertion::Y(v) => ("y", v.join(","), last_y.join(",")),
                    Assertion::Mem(v) => {
                        let mem = session
                            .world()
                            .map(|w| w.mem().iter().map(|s| session.name(*s)).collect::<Vec<_>>().join(","))
                            .unwrap_or_default();
                        ("mem", v.join(","), mem)
                    }
                };
                let nu_text = last_nu.map_or("before any cycle".to_string(), |n| format!("ν={n}"));
                report.probe(last_nu, format!("line {line}: {what} at {nu_text}"), expected, actual);
            }
        }
    }
    report.training_len = first_exam.unwrap_or(session.nu());
    if session.nu() > 0 {
        report.span = Some((0, session.nu() - 1));
    }
    Ok((session, report))
}

/// Parses and runs script text.
pub fn run_script(text: &str, seed: Option<u64>, record_trace: bool) -> Result<ScriptRun, ScriptError> {
    run(&TeacherScript::parse(text)?, seed, record_trace)
}
