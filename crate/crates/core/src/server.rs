//! Session service for interactive viewers.
//!
//! One JSON object per line in each direction. Every connection owns its
//! own session, built fresh from the server's configuration.
//!
//! Client → server:
//!
//! ```text
//! {"cmd":"step", "addr":"1", "din":"a", "aud":..., "screen":[...], "teach":[...], "fb":...}
//! {"cmd":"cycle", "count":10, ...same inputs as step}
//! {"cmd":"reset"}
//! {"cmd":"set", "signal":"wen", "value":"1"}
//! {"cmd":"load_script", "text":"ALPHABET ...", "seed":7}
//! ```
//!
//! Server → client: `{"event":"snapshot", ...}` on connect, after `set`,
//! `reset` and `load_script`; `{"event":"delta", "records":[...], ...}`
//! after `step`/`cycle`; `{"event":"error", "nu":..., "message":...}` for
//! anything rejected. Snapshots and deltas carry the full state of
//! [`Session::snapshot`] (cycle index, switches, e-arrays, LTM tables).

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::thread;

use serde::Deserialize;
use serde_json::{json, Value};

use crate::script::{self, TeacherScript};
use crate::session::{Session, SessionConfig};
use crate::trace::BusRecord;

#[derive(Debug, Deserialize)]
#[serde(tag = "cmd", rename_all = "snake_case")]
enum Request {
    Step(Inputs),
    Cycle {
        #[serde(default = "one")]
        count: u64,
        #[serde(flatten)]
        inputs: Inputs,
    },
    Reset,
    Set {
        signal: String,
        value: Value,
    },
    LoadScript {
        text: String,
        seed: Option<u64>,
    },
}

fn one() -> u64 {
    1
}

#[derive(Debug, Default, Deserialize)]
struct Inputs {
    addr: Option<String>,
    din: Option<String>,
    aud: Option<String>,
    #[serde(default)]
    screen: Vec<String>,
    teach: Option<Vec<String>>,
    fb: Option<String>,
}

impl Inputs {
    fn bus(self) -> BusRecord {
        BusRecord {
            addr: self.addr,
            din: self.din,
            aud: self.aud,
            screen: self.screen,
            teach: self.teach,
            fb: self.fb,
            ..Default::default()
        }
    }
}

/// Cycles a single `cycle` request may run.
pub const MAX_CYCLES_PER_REQUEST: u64 = 100_000;

/// Protocol state of one connection.
pub struct SessionService {
    session: Session,
}

fn with_event(event: &str, mut body: Value) -> Value {
    body["event"] = json!(event);
    body
}

impl SessionService {
    pub fn new(session: Session) -> Self {
        Self { session }
    }

    pub fn session(&self) -> &Session {
        &self.session
    }

    pub fn snapshot(&self) -> Value {
        with_event("snapshot", self.session.snapshot())
    }

    fn error(&self, message: impl std::fmt::Display) -> Value {
        json!({ "event": "error", "nu": self.session.nu(), "message": message.to_string() })
    }

    /// Handles one request line and returns the reply.
    pub fn handle(&mut self, line: &str) -> Value {
        let req: Request = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => return self.error(format!("bad request: {e}")),
        };
        match req {
            Request::Step(inputs) => self.run(inputs, 1),
            Request::Cycle { count, inputs } => {
                if count > MAX_CYCLES_PER_REQUEST {
                    return self.error(format!("count {count} exceeds {MAX_CYCLES_PER_REQUEST}"));
                }
                self.run(inputs, count)
            }
            Request::Reset => {
                self.session.reset();
                self.snapshot()
            }
            Request::Set { signal, value } => {
                let value = match value {
                    Value::String(s) => s,
                    Value::Bool(b) => (b as u8).to_string(),
                    other => other.to_string(),
                };
                match self.session.set(&signal, &value) {
                    Ok(()) => self.snapshot(),
                    Err(e) => self.error(e),
                }
            }
            Request::LoadScript { text, seed } => match TeacherScript::parse(&text) {
                Err(e) => self.error(e),
                Ok(parsed) => {
                    let seed = seed.or(parsed.seed).unwrap_or(0);
                    match script::run_into(&parsed, seed) {
                        Ok((session, report)) => {
                            self.session = session;
                            let mut snap = self.snapshot();
                            snap["report"] = serde_json::to_value(&report).expect("report serializes");
                            snap
                        }
                        Err(e) => self.error(e),
                    }
                }
            },
        }
    }

    fn run(&mut self, inputs: Inputs, count: u64) -> Value {
        let bus = inputs.bus();
        let stim = match self.session.resolve(&bus) {
            Ok(s) => s,
            Err(e) => return self.error(e),
        };
        let mut records = Vec::new();
        for _ in 0..count {
            match self.session.step(&stim) {
                Ok(out) => records.extend(out.records),
                Err(e) => return self.error(e),
            }
        }
        let mut delta = with_event("delta", self.session.snapshot());
        delta["records"] = serde_json::to_value(&records).expect("records serialize");
        delta
    }
}

fn handle_stream(stream: TcpStream, config: SessionConfig, seed: u64) -> std::io::Result<()> {
    let session = Session::new(config, seed).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, e))?;
    let mut service = SessionService::new(session);
    stream.set_nodelay(true)?;
    let mut out = stream.try_clone()?;
    let send = |out: &mut TcpStream, v: &Value| -> std::io::Result<()> {
        serde_json::to_writer(&mut *out, v)?;
        out.write_all(b"\n")?;
        out.flush()
    };
    send(&mut out, &service.snapshot())?;
    for line in BufReader::new(stream).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = service.handle(&line);
        send(&mut out, &reply)?;
    }
    Ok(())
}

/// Serves connections on `listener` forever, one thread per connection.
/// The configuration is checked before the first connection is accepted.
pub fn serve(listener: TcpListener, config: SessionConfig, seed: u64) -> std::io::Result<()> {
    Session::new(config.clone(), seed).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, e))?;
    for stream in listener.incoming() {
        let stream = stream?;
        let config = config.clone();
        thread::spawn(move || {
            // a dropped connection only ends its own session
            let _ = handle_stream(stream, config, seed);
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{mental_set_config, MentalSetSpec};

    fn service() -> SessionService {
        let spec = MentalSetSpec::new(2, vec![false; 4]);
        SessionService::new(Session::new(mental_set_config(&spec), 0).unwrap())
    }

    #[test]
    fn teaching_step_adds_a_column() {
        let mut s = service();
        assert_eq!(s.handle(r#"{"cmd":"set","signal":"wen","value":true}"#)["event"], "snapshot");
        s.handle(r#"{"cmd":"set","signal":"nm_sel","value":"1"}"#);
        let d = s.handle(r#"{"cmd":"step","aud":"a3","screen":["0","1"],"teach":["s0"]}"#);
        assert_eq!(d["event"], "delta", "{d}");
        assert_eq!(d["nu"], 1);
        assert_eq!(d["units"]["AM"]["gx"][0], json!(["a3", "0", "1", "_"]));
        assert_eq!(d["units"]["AM"]["e"][0], 6.0);
        assert_eq!(d["records"][0]["kind"], "bus");
    }

    #[test]
    fn reset_clears_excitation() {
        let mut s = service();
        s.handle(r#"{"cmd":"set","signal":"wen","value":"1"}"#);
        s.handle(r#"{"cmd":"cycle","count":3,"aud":"a1","screen":["0","0"],"teach":["s0"]}"#);
        let snap = s.handle(r#"{"cmd":"reset"}"#);
        assert!(snap["units"]["AM"]["e"].as_array().unwrap().iter().all(|e| e == 0.0));
        assert_eq!(snap["units"]["AM"]["wptr"], 4);
    }

    #[test]
    fn errors_keep_the_session() {
        let mut s = service();
        assert_eq!(s.handle("not json")["event"], "error");
        assert_eq!(s.handle(r#"{"cmd":"step","aud":"zz"}"#)["event"], "error");
        assert_eq!(s.handle(r#"{"cmd":"set","signal":"bogus","value":"1"}"#)["event"], "error");
        assert_eq!(s.handle(r#"{"cmd":"step"}"#)["nu"], 1);
    }
}
