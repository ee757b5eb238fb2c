//! Generalized RAM: a symbolic memory that writes whenever input data is
//! non-empty and reads otherwise.

use thiserror::Error;

use crate::symbols::{Alphabet, Symbol, SymbolError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GramError {
    #[error("address alphabet {0} has no members")]
    EmptyAddressAlphabet(String),
    #[error("the empty symbol is not a valid address")]
    EpsilonAddress,
    #[error("output map must have one entry per data symbol ({expected}), got {found}")]
    OutputMapSize { expected: usize, found: usize },
    #[error(transparent)]
    Symbol(#[from] SymbolError),
}

/// Rule classes of a GRAM transition table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    /// `din != ε`: the output is `din` itself.
    Fixed,
    /// `din == ε`: the output depends on the most recent write.
    Variable,
}

/// Maps stored data to emitted data. Identity unless configured.
#[derive(Debug, Clone)]
struct OutputMap {
    alphabet: Alphabet,
    /// Indexed by data token; the last entry is the image of ε.
    table: Vec<Symbol>,
}

#[derive(Debug, Clone)]
pub struct GramState {
    addr: Alphabet,
    data: Alphabet,
    mem: Vec<Symbol>,
    output: Option<OutputMap>,
}

impl GramState {
    /// Fresh memory with every cell empty.
    pub fn new(addr: Alphabet, data: Alphabet) -> Result<Self, GramError> {
        if addr.is_empty() {
            return Err(GramError::EmptyAddressAlphabet(addr.name().to_string()));
        }
        let mem = vec![data.epsilon(); addr.len()];
        Ok(Self {
            addr,
            data,
            mem,
            output: None,
        })
    }

    /// Installs a (not necessarily injective) map from input data to a
    /// distinct output alphabet. `table[i]` is the image of the `i`-th data
    /// member; ε always maps to ε.
    pub fn with_output_map(mut self, out: Alphabet, table: Vec<Symbol>) -> Result<Self, GramError> {
        if table.len() != self.data.len() {
            return Err(GramError::OutputMapSize {
                expected: self.data.len(),
                found: table.len(),
            });
        }
        let mut table = table
            .into_iter()
            .map(|s| out.check(s))
            .collect::<Result<Vec<_>, _>>()?;
        table.push(out.epsilon());
        self.output = Some(OutputMap {
            alphabet: out,
            table,
        });
        Ok(self)
    }

    pub fn addr_alphabet(&self) -> &Alphabet {
        &self.addr
    }

    pub fn data_alphabet(&self) -> &Alphabet {
        &self.data
    }

    /// Alphabet of `dout`; the data alphabet unless an output map is set.
    pub fn output_alphabet(&self) -> &Alphabet {
        self.output.as_ref().map_or(&self.data, |o| &o.alphabet)
    }

    pub fn mem(&self) -> &[Symbol] {
        &self.mem
    }

    pub fn read(&self, addr: Symbol) -> Result<Symbol, GramError> {
        Ok(self.mem[self.cell(addr)?])
    }

    fn cell(&self, addr: Symbol) -> Result<usize, GramError> {
        self.addr.check(addr)?;
        if addr == self.addr.epsilon() {
            return Err(GramError::EpsilonAddress);
        }
        Ok(addr.token() as usize)
    }

    fn emit(&self, value: Symbol) -> Symbol {
        match &self.output {
            Some(map) => map.table[value.token() as usize],
            None => value,
        }
    }

    /// One transition, returning the successor state and `dout`.
    pub fn step(&self, addr: Symbol, din: Symbol) -> Result<(GramState, Symbol), GramError> {
        let mut next = self.clone();
        let dout = next.apply(addr, din)?;
        Ok((next, dout))
    }

    /// In-place form of [`GramState::step`].
    pub fn apply(&mut self, addr: Symbol, din: Symbol) -> Result<Symbol, GramError> {
        let cell = self.cell(addr)?;
        self.data.check(din)?;
        if din == self.data.epsilon() {
            Ok(self.emit(self.mem[cell]))
        } else {
            self.mem[cell] = din;
            Ok(self.emit(din))
        }
    }
}

impl PartialEq for GramState {
    fn eq(&self, other: &Self) -> bool {
        self.addr.id() == other.addr.id() && self.data.id() == other.data.id() && self.mem == other.mem
    }
}

pub fn classify_rule(addr: Symbol, din: Symbol, gram: &GramState) -> Result<RuleKind, GramError> {
    gram.cell(addr)?;
    gram.data.check(din)?;
    Ok(if din == gram.data.epsilon() {
        RuleKind::Variable
    } else {
        RuleKind::Fixed
    })
}

/// All fixed rules `(addr, din)` in address-major order; `n·m` of them.
pub fn fixed_rules(addr: &Alphabet, data: &Alphabet) -> Vec<(Symbol, Symbol)> {
    addr.symbols()
        .flat_map(|a| data.symbols().map(move |d| (a, d)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::make_alphabet;
    use proptest::prelude::*;

    fn fig3() -> (Alphabet, Alphabet) {
        (
            make_alphabet("A", &["1", "2"]).unwrap(),
            make_alphabet("D", &["a", "b"]).unwrap(),
        )
    }

    #[test]
    fn new_memory_is_empty() {
        let (a, d) = fig3();
        let g = GramState::new(a.clone(), d.clone()).unwrap();
        assert_eq!(g.mem(), &[d.epsilon(), d.epsilon()]);
        for addr in a.symbols() {
            let (_, dout) = g.step(addr, d.epsilon()).unwrap();
            assert_eq!(dout, d.epsilon());
        }
    }

    #[test]
    fn single_cell_degenerate() {
        let a = make_alphabet("A", &["1"]).unwrap();
        let d = make_alphabet::<&str>("D", &[]).unwrap();
        let g = GramState::new(a, d.clone()).unwrap();
        assert_eq!(g.mem(), &[d.epsilon()]);
    }

    #[test]
    fn empty_address_alphabet_rejected() {
        let a = make_alphabet::<&str>("A", &[]).unwrap();
        let d = make_alphabet("D", &["a"]).unwrap();
        assert!(matches!(GramState::new(a, d), Err(GramError::EmptyAddressAlphabet(_))));
    }

    #[test]
    fn write_then_read_examples() {
        let (a, d) = fig3();
        let p = |s: &str| a.parse(s).unwrap();
        let q = |s: &str| d.parse(s).unwrap();
        let g = GramState::new(a.clone(), d.clone()).unwrap();

        let (g, dout) = g.step(p("1"), q("a")).unwrap();
        assert_eq!(dout, q("a"));
        assert_eq!(g.mem(), &[q("a"), q("_")]);

        let mut g = g;
        g.apply(p("1"), q("b")).unwrap();
        g.apply(p("2"), q("a")).unwrap();
        assert_eq!(g.mem(), &[q("b"), q("a")]);
        let (g, dout) = g.step(p("2"), q("b")).unwrap();
        assert_eq!(dout, q("b"));
        assert_eq!(g.mem(), &[q("b"), q("b")]);

        let mut g = g;
        g.apply(p("1"), q("a")).unwrap();
        g.apply(p("2"), q("a")).unwrap();
        let before = g.clone();
        let (after, dout) = g.step(p("2"), q("_")).unwrap();
        assert_eq!(dout, q("a"));
        assert_eq!(after, before);
    }

    #[test]
    fn epsilon_or_foreign_address_is_an_error() {
        let (a, d) = fig3();
        let g = GramState::new(a.clone(), d.clone()).unwrap();
        assert_eq!(g.step(a.epsilon(), d.epsilon()).unwrap_err(), GramError::EpsilonAddress);
        assert!(matches!(
            g.step(d.parse("a").unwrap(), d.epsilon()),
            Err(GramError::Symbol(_))
        ));
        assert!(matches!(
            g.step(a.parse("1").unwrap(), a.parse("1").unwrap()),
            Err(GramError::Symbol(_))
        ));
    }

    #[test]
    fn rule_classes() {
        let (a, d) = fig3();
        let g = GramState::new(a.clone(), d.clone()).unwrap();
        let one = a.parse("1").unwrap();
        assert_eq!(classify_rule(one, d.parse("a").unwrap(), &g), Ok(RuleKind::Fixed));
        assert_eq!(classify_rule(one, d.epsilon(), &g), Ok(RuleKind::Variable));
        assert_eq!(fixed_rules(&a, &d).len(), 4);
    }

    #[test]
    fn output_map_translates_reads_and_writes() {
        let (a, d) = fig3();
        let out = make_alphabet("O", &["x"]).unwrap();
        let x = out.parse("x").unwrap();
        let mut g = GramState::new(a.clone(), d.clone())
            .unwrap()
            .with_output_map(out.clone(), vec![x, x])
            .unwrap();
        let one = a.parse("1").unwrap();
        assert_eq!(g.apply(one, d.epsilon()).unwrap(), out.epsilon());
        assert_eq!(g.apply(one, d.parse("b").unwrap()).unwrap(), x);
        assert_eq!(g.apply(one, d.epsilon()).unwrap(), x);
        assert_eq!(g.mem()[0], d.parse("b").unwrap());
    }

    proptest! {
        // Reads return the most recent prior write to the same address, or ε.
        #[test]
        fn reads_match_event_log(events in prop::collection::vec((0usize..3, 0usize..4), 0..60)) {
            let a = make_alphabet("A", &["1", "2", "3"]).unwrap();
            let d = make_alphabet("D", &["a", "b", "c"]).unwrap();
            let mut g = GramState::new(a.clone(), d.clone()).unwrap();
            let mut log: Vec<(usize, usize)> = Vec::new();
            for (ai, di) in events {
                let addr = a.symbol(ai).unwrap();
                let din = d.symbol(di).unwrap_or(d.epsilon());
                let before = g.clone();
                let dout = g.apply(addr, din).unwrap();
                if din == d.epsilon() {
                    let expected = log
                        .iter()
                        .rev()
                        .find(|(la, _)| *la == ai)
                        .map(|(_, ld)| d.symbol(*ld).unwrap())
                        .unwrap_or(d.epsilon());
                    prop_assert_eq!(dout, expected);
                    prop_assert_eq!(&g, &before);
                } else {
                    prop_assert_eq!(dout, din);
                    log.push((ai, di));
                }
            }
        }
    }
}
