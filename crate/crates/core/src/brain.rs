//! Brain assembly: sensory unit AS, motor unit AM, the NS and NM
//! multiplexers and the speech feedback from the last motor channel back
//! into AM.
//!
//! A cycle evaluates world → NS → AS → AM → NM → feedback register. Both
//! units compute their outputs from the state at the start of the cycle;
//! the multiplexers are combinational, so NS.y and NM.y are available to
//! the units' learning step within the same cycle.

use thiserror::Error;

use crate::pem::{CycleIO, Pem, PemError};
use crate::rng::SessionRng;
use crate::symbols::{Alphabet, Symbol, SymbolError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BrainError {
    #[error("AM layout: {0}")]
    Layout(String),
    #[error("{what}: expected {expected} components, got {found}")]
    Width {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("unit {unit}: {source}")]
    Unit {
        unit: &'static str,
        #[source]
        source: PemError,
    },
    #[error(transparent)]
    Symbol(#[from] SymbolError),
}

/// How the last motor channel is fed back into AM.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeedbackMode {
    /// The feedback input is always ε.
    Off,
    /// AM sees the previous cycle's motor output.
    Delayed,
    /// Two half-steps per cycle: AM first runs with an empty feedback input,
    /// then the motor output it just produced arrives as proprioceptive
    /// input and re-charges the executed location. Learning records the
    /// second half-step's input.
    Refresh,
}

impl FeedbackMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FeedbackMode::Off => "off",
            FeedbackMode::Delayed => "delayed",
            FeedbackMode::Refresh => "refresh",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "off" | "0" => Some(FeedbackMode::Off),
            "delayed" | "on" | "1" => Some(FeedbackMode::Delayed),
            "refresh" => Some(FeedbackMode::Refresh),
            _ => None,
        }
    }
}

/// Wiring of AM's input vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmLayout {
    /// `(NS.y, feedback)` or `(NS.y, feedback, aud)`.
    Sensorimotor,
    /// `(aud, screen[0..k], feedback)`: the mental-set configuration with a
    /// `k`-square visual field and no AS.
    MentalSet { k: usize },
}

impl AmLayout {
    pub fn feedback_slot(self, m: usize) -> usize {
        match self {
            AmLayout::Sensorimotor => 1,
            AmLayout::MentalSet { .. } => m - 1,
        }
    }
}

pub fn ns_mux(sel: bool, dout: Symbol, as_y: Symbol) -> Symbol {
    if sel {
        dout
    } else {
        as_y
    }
}

pub fn nm_mux(sel: bool, teacher_y: &[Symbol], am_y: &[Symbol]) -> Vec<Symbol> {
    if sel {
        teacher_y.to_vec()
    } else {
        am_y.to_vec()
    }
}

/// External signals for one cycle.
#[derive(Debug, Clone, Default)]
pub struct BrainInput {
    /// Eye position and typed character, as seen by AS.
    pub motor_in: Option<(Symbol, Symbol)>,
    /// Visual output of the world.
    pub dout: Option<Symbol>,
    pub aud: Option<Symbol>,
    pub screen: Vec<Symbol>,
    pub teacher_y: Option<Vec<Symbol>>,
    pub wen_as: bool,
    pub wen_am: bool,
    /// Loads the delay register before the cycle.
    pub preset_feedback: Option<Symbol>,
}

/// What one assembly cycle produced.
#[derive(Debug, Clone, PartialEq)]
pub struct BrainStep {
    pub ns_y: Option<Symbol>,
    /// NM.y.
    pub motor: Vec<Symbol>,
    pub as_io: Option<CycleIO>,
    pub am_io: Option<CycleIO>,
    /// Similarity of the executed location during the refresh half-step.
    pub refresh_s: Option<f64>,
    /// Feedback value AM saw this cycle.
    pub feedback_in: Option<Symbol>,
}

#[derive(Debug, Clone)]
pub struct BrainAssembly {
    as_unit: Option<Pem>,
    am_unit: Option<Pem>,
    sensory: Option<Alphabet>,
    layout: AmLayout,
    pub ns_sel: bool,
    pub nm_sel: bool,
    pub feedback: FeedbackMode,
    feedback_reg: Option<Symbol>,
}

impl BrainAssembly {
    /// `sensory` is the alphabet of the world's visual output (NS.y). AS, if
    /// present, must take `(addr, din)` and emit one symbol of that alphabet.
    pub fn new(
        sensory: Option<Alphabet>,
        as_unit: Option<Pem>,
        am_unit: Option<Pem>,
        layout: AmLayout,
    ) -> Result<Self, BrainError> {
        if let Some(unit) = &as_unit {
            let p = unit.params();
            if p.m() != 2 || p.p() != 1 {
                return Err(BrainError::Layout("AS must have 2 inputs and 1 output".into()));
            }
            match &sensory {
                Some(s) if s.id() == p.output_alphabets[0].id() => {}
                _ => return Err(BrainError::Layout("AS output alphabet must be the sensory alphabet".into())),
            }
        }
        if let Some(unit) = &am_unit {
            let p = unit.params();
            let m = p.m();
            let tap = p.output_alphabets[p.p() - 1].id();
            match layout {
                AmLayout::Sensorimotor => {
                    if !(m == 2 || m == 3) {
                        return Err(BrainError::Layout(format!("sensorimotor AM needs 2 or 3 inputs, got {m}")));
                    }
                    if let Some(s) = &sensory {
                        if p.input_alphabets[0].id() != s.id() {
                            return Err(BrainError::Layout("AM input 1 must use the sensory alphabet".into()));
                        }
                    }
                }
                AmLayout::MentalSet { k } => {
                    if m != k + 2 {
                        return Err(BrainError::Layout(format!("mental-set AM needs k+2 = {} inputs, got {m}", k + 2)));
                    }
                }
            }
            if p.input_alphabets[layout.feedback_slot(m)].id() != tap {
                return Err(BrainError::Layout(
                    "the feedback input must use the alphabet of the last motor channel".into(),
                ));
            }
        }
        Ok(Self {
            as_unit,
            am_unit,
            sensory,
            layout,
            ns_sel: true,
            nm_sel: true,
            feedback: FeedbackMode::Off,
            feedback_reg: None,
        })
    }

    pub fn as_unit(&self) -> Option<&Pem> {
        self.as_unit.as_ref()
    }

    pub fn am_unit(&self) -> Option<&Pem> {
        self.am_unit.as_ref()
    }

    pub fn am_unit_mut(&mut self) -> Option<&mut Pem> {
        self.am_unit.as_mut()
    }

    pub fn as_unit_mut(&mut self) -> Option<&mut Pem> {
        self.as_unit.as_mut()
    }

    pub fn layout(&self) -> AmLayout {
        self.layout
    }

    pub fn sensory_alphabet(&self) -> Option<&Alphabet> {
        self.sensory.as_ref()
    }

    fn feedback_alphabet(&self) -> Option<&Alphabet> {
        self.am_unit.as_ref().map(|u| {
            let p = u.params();
            &p.output_alphabets[p.p() - 1]
        })
    }

    /// Contents of the delay register; ε after a reset.
    pub fn feedback_reg(&self) -> Option<Symbol> {
        self.feedback_reg
            .or_else(|| self.feedback_alphabet().map(|a| a.epsilon()))
    }

    /// Zeroes every E-state and clears the feedback register. LTM is kept.
    pub fn reset(&mut self) {
        if let Some(u) = self.as_unit.as_mut() {
            u.reset_e();
        }
        if let Some(u) = self.am_unit.as_mut() {
            u.reset_e();
        }
        self.feedback_reg = None;
    }

    pub fn cycle(&mut self, input: &BrainInput, rng: &mut SessionRng) -> Result<BrainStep, BrainError> {
        if let Some(fb) = input.preset_feedback {
            let alpha = self
                .feedback_alphabet()
                .ok_or_else(|| BrainError::Layout("no AM to receive feedback".into()))?;
            alpha.check(fb)?;
            self.feedback_reg = Some(fb);
        }

        let dout = match (&self.sensory, input.dout) {
            (Some(a), Some(d)) => Some(a.check(d)?),
            (Some(a), None) => Some(a.epsilon()),
            (None, _) => None,
        };

        // AS and NS
        let mut as_io = None;
        let ns_y = match self.as_unit.as_mut() {
            Some(unit) => {
                let x = match input.motor_in {
                    Some((addr, din)) => vec![addr, din],
                    None => unit.empty_input(),
                };
                let eval = unit
                    .evaluate(&x, rng)
                    .map_err(|source| BrainError::Unit { unit: "AS", source })?;
                let ns = ns_mux(self.ns_sel, dout.expect("AS implies a sensory alphabet"), eval.y[0]);
                let io = unit
                    .advance(&eval, &x, &[ns], input.wen_as)
                    .map_err(|source| BrainError::Unit { unit: "AS", source })?;
                as_io = Some(io);
                Some(ns)
            }
            None => match (&self.sensory, dout) {
                (Some(a), Some(d)) => Some(ns_mux(self.ns_sel, d, a.epsilon())),
                _ => None,
            },
        };

        // AM and NM
        let feedback_reg = self.feedback_reg();
        let Some(unit) = self.am_unit.as_mut() else {
            let motor = match (&input.teacher_y, self.nm_sel) {
                (Some(t), true) => t.clone(),
                _ => Vec::new(),
            };
            return Ok(BrainStep {
                ns_y,
                motor,
                as_io,
                am_io: None,
                refresh_s: None,
                feedback_in: None,
            });
        };
        let params = unit.params();
        let m = params.m();
        let fb_alpha = params.output_alphabets[params.p() - 1].clone();
        let fb_slot = self.layout.feedback_slot(m);
        let feedback_in = match self.feedback {
            FeedbackMode::Delayed => feedback_reg.unwrap_or(fb_alpha.epsilon()),
            FeedbackMode::Off | FeedbackMode::Refresh => fb_alpha.epsilon(),
        };
        let mut x = unit.empty_input();
        let aud_slot = match self.layout {
            AmLayout::Sensorimotor => {
                x[0] = ns_y.unwrap_or(params.input_alphabets[0].epsilon());
                (m == 3).then_some(2)
            }
            AmLayout::MentalSet { k } => {
                if !input.screen.is_empty() {
                    if input.screen.len() != k {
                        return Err(BrainError::Width {
                            what: "screen",
                            expected: k,
                            found: input.screen.len(),
                        });
                    }
                    x[1..=k].copy_from_slice(&input.screen);
                }
                Some(0)
            }
        };
        if let (Some(slot), Some(aud)) = (aud_slot, input.aud) {
            x[slot] = aud;
        }
        x[fb_slot] = feedback_in;

        let eval = unit
            .evaluate(&x, rng)
            .map_err(|source| BrainError::Unit { unit: "AM", source })?;
        let teacher = match &input.teacher_y {
            Some(t) => {
                if t.len() != params.p() {
                    return Err(BrainError::Width {
                        what: "teacher y",
                        expected: params.p(),
                        found: t.len(),
                    });
                }
                t.clone()
            }
            None => unit.empty_output(),
        };
        let motor = nm_mux(self.nm_sel, &teacher, &eval.y);
        let tap = motor[motor.len() - 1];

        let record_x = if self.feedback == FeedbackMode::Refresh {
            let mut x2 = x.clone();
            x2[fb_slot] = tap;
            x2
        } else {
            x.clone()
        };
        let am_io = unit
            .advance(&eval, &record_x, &motor, input.wen_am)
            .map_err(|source| BrainError::Unit { unit: "AM", source })?;
        let mut refresh_s = None;
        if self.feedback == FeedbackMode::Refresh {
            if let Some(i) = eval.iwin {
                let s = unit
                    .recharge(i, &record_x)
                    .map_err(|source| BrainError::Unit { unit: "AM", source })?;
                refresh_s = Some(s);
            }
        }
        let mut am_io = am_io;
        am_io.e_next = unit.e().to_vec();

        self.feedback_reg = match self.feedback {
            FeedbackMode::Delayed => Some(tap),
            FeedbackMode::Off | FeedbackMode::Refresh => None,
        };

        Ok(BrainStep {
            ns_y,
            motor,
            as_io,
            am_io: Some(am_io),
            refresh_s,
            feedback_in: Some(feedback_in),
        })
    }
}
