//! Primitive E-machine.
//!
//! Long-term memory is a tape of `(x, xy)` records. Each cycle the input is
//! compared with every record (decoding), the similarities are biased by the
//! residual excitation of each record (modulation), a winner is drawn
//! uniformly among the records tied at the maximum (choice), and the
//! winner's stored output is emitted (encoding). Excitation then charges to
//! the current similarity or decays geometrically, and, when writing is
//! enabled, the cycle is appended to the tape with its excitation primed as
//! if the input had already been stored there.

use thiserror::Error;

use crate::rng::SessionRng;
use crate::symbols::{Alphabet, Symbol, SymbolError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PemError {
    #[error("{what}: expected {expected} components, got {found}")]
    Width {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("LTM capacity {capacity} exhausted; enlarge the unit")]
    CapacityExhausted { capacity: usize },
    #[error("location {0} is out of range")]
    Location(usize),
    #[error(transparent)]
    Symbol(#[from] SymbolError),
}

#[derive(Debug, Clone)]
pub struct PemParams {
    pub input_alphabets: Vec<Alphabet>,
    pub output_alphabets: Vec<Alphabet>,
    /// Number of LTM locations.
    pub capacity: usize,
    /// Modulation coefficient.
    pub a: f64,
    /// Decay time constant in cycles; the per-cycle factor is `1 - 1/tau`.
    pub tau: f64,
    pub wx: Vec<f64>,
}

impl PemParams {
    /// Unit weights, the configuration used by most protocols.
    pub fn new(
        input_alphabets: Vec<Alphabet>,
        output_alphabets: Vec<Alphabet>,
        capacity: usize,
        a: f64,
        tau: f64,
    ) -> Self {
        let wx = vec![1.0; input_alphabets.len()];
        Self {
            input_alphabets,
            output_alphabets,
            capacity,
            a,
            tau,
            wx,
        }
    }

    pub fn with_weights(mut self, wx: Vec<f64>) -> Self {
        self.wx = wx;
        self
    }

    pub fn m(&self) -> usize {
        self.input_alphabets.len()
    }

    pub fn p(&self) -> usize {
        self.output_alphabets.len()
    }

    pub fn decay_factor(&self) -> f64 {
        1.0 - 1.0 / self.tau
    }

    /// Largest attainable excitation, `Σ wx`.
    pub fn emax(&self) -> f64 {
        self.wx.iter().sum()
    }

    /// `a · emax < 1`, the working-memory condition for two-component
    /// inputs.
    pub fn working_memory_safe(&self) -> bool {
        self.a * self.emax() < 1.0
    }

    /// Whether a full match outvotes every partial match at any excitation:
    /// `(W - w_min)(1 + a·emax) < W` with `W = Σ wx`. For unit weights this
    /// is `a·emax < 1/(m-1)`, which coincides with
    /// [`PemParams::working_memory_safe`] only when `m = 2`.
    pub fn full_match_dominates(&self) -> bool {
        let total = self.emax();
        let w_min = self.wx.iter().copied().fold(f64::INFINITY, f64::min);
        let best_partial = total - w_min;
        best_partial * (1.0 + self.a * total) < total
    }

    pub fn validate(&self) -> Result<(), PemError> {
        if self.m() == 0 || self.p() == 0 {
            return Err(PemError::Param("input and output widths must be at least 1".into()));
        }
        if self.wx.len() != self.m() {
            return Err(PemError::Width {
                what: "wx",
                expected: self.m(),
                found: self.wx.len(),
            });
        }
        if let Some(w) = self.wx.iter().find(|w| !(w.is_finite() && **w >= 1.0)) {
            return Err(PemError::Param(format!("weight {w} must be finite and >= 1.0")));
        }
        if !(self.a.is_finite() && self.a >= 0.0) {
            return Err(PemError::Param(format!("a = {} must be finite and >= 0", self.a)));
        }
        if !(self.tau.is_finite() && self.tau > 1.0) {
            return Err(PemError::Param(format!("tau = {} must be finite and > 1", self.tau)));
        }
        Ok(())
    }
}

/// Symbolic long-term memory: input records `gx`, output records `gy` and
/// the write pointer.
#[derive(Debug, Clone, PartialEq)]
pub struct PemGState {
    gx: Vec<Vec<Symbol>>,
    gy: Vec<Vec<Symbol>>,
    written: usize,
    x_empty: Vec<Symbol>,
}

impl PemGState {
    pub fn new(params: &PemParams) -> Self {
        let x_empty: Vec<Symbol> = params.input_alphabets.iter().map(|a| a.epsilon()).collect();
        let y_empty: Vec<Symbol> = params.output_alphabets.iter().map(|a| a.epsilon()).collect();
        Self {
            gx: vec![x_empty.clone(); params.capacity],
            gy: vec![y_empty; params.capacity],
            written: 0,
            x_empty,
        }
    }

    pub fn capacity(&self) -> usize {
        self.gx.len()
    }

    /// Next free location, 1-based.
    pub fn wptr(&self) -> usize {
        self.written + 1
    }

    /// Number of recorded locations.
    pub fn written(&self) -> usize {
        self.written
    }

    /// Input record of location `i` (0-based).
    pub fn gx(&self, i: usize) -> &[Symbol] {
        &self.gx[i]
    }

    /// Output record of location `i` (0-based).
    pub fn gy(&self, i: usize) -> &[Symbol] {
        &self.gy[i]
    }

    fn matches(&self, j: usize, x: Symbol, stored: Symbol) -> bool {
        x != self.x_empty[j] && x == stored
    }

    /// Similarity of `x` to a single location.
    pub fn similarity(&self, x: &[Symbol], wx: &[f64], i: usize) -> f64 {
        let mut s = 0.0;
        for (j, (&xj, &gj)) in x.iter().zip(&self.gx[i]).enumerate() {
            if self.matches(j, xj, gj) {
                s += wx[j];
            }
        }
        s
    }

    /// Excitation a location would receive if `x` were stored in it.
    pub fn self_similarity(&self, x: &[Symbol], wx: &[f64]) -> f64 {
        let mut s = 0.0;
        for (j, &xj) in x.iter().enumerate() {
            if xj != self.x_empty[j] {
                s += wx[j];
            }
        }
        s
    }
}

/// Similarity of `x` to every location: `s(i) = Σ_j wx(j)·[x(j) = gx(j,i) ≠ ε]`.
pub fn decode(x: &[Symbol], wx: &[f64], g: &PemGState) -> Vec<f64> {
    (0..g.capacity()).map(|i| g.similarity(x, wx, i)).collect()
}

/// Biased similarity `se(i) = s(i)·(1 + a·e(i))`.
pub fn modulate(s: &[f64], e: &[f64], a: f64) -> Vec<f64> {
    debug_assert_eq!(s.len(), e.len());
    s.iter().zip(e).map(|(s, e)| s * (1.0 + a * e)).collect()
}

/// Locations tied at the maximum biased similarity, if that maximum is
/// positive.
pub fn max_set(se: &[f64]) -> Vec<usize> {
    let max = se.iter().copied().fold(0.0_f64, f64::max);
    if max <= 0.0 {
        return Vec::new();
    }
    se.iter()
        .enumerate()
        .filter(|(_, v)| **v == max)
        .map(|(i, _)| i)
        .collect()
}

/// Uniform draw from the maximum set. The generator is only consulted when
/// the set has more than one element.
pub fn choose(se: &[f64], rng: &mut SessionRng) -> Option<usize> {
    let mset = max_set(se);
    match mset.len() {
        0 => None,
        1 => Some(mset[0]),
        n => Some(mset[rng.below(n as u64) as usize]),
    }
}

/// Output record of the winner, or all-ε when there is none.
pub fn encode(g: &PemGState, y_empty: &[Symbol], iwin: Option<usize>) -> Vec<Symbol> {
    match iwin {
        Some(i) => g.gy(i).to_vec(),
        None => y_empty.to_vec(),
    }
}

/// Fast charge, slow discharge: `e' = s` where `s > e`, else `c·e`.
pub fn next_e(s: &[f64], e: &[f64], c: f64) -> Vec<f64> {
    debug_assert_eq!(s.len(), e.len());
    s.iter()
        .zip(e)
        .map(|(&s, &e)| if s > e { s } else { c * e })
        .collect()
}

/// Tape-records `(x, xy)` at the write pointer when `wen` is set. Returns
/// the 0-based location written.
pub fn learn(x: &[Symbol], xy: &[Symbol], wen: bool, g: &mut PemGState) -> Result<Option<usize>, PemError> {
    if !wen {
        return Ok(None);
    }
    if g.written >= g.capacity() {
        return Err(PemError::CapacityExhausted {
            capacity: g.capacity(),
        });
    }
    let slot = g.written;
    g.gx[slot] = x.to_vec();
    g.gy[slot] = xy.to_vec();
    g.written += 1;
    Ok(Some(slot))
}

/// Primes the just-written location with the excitation it would have if
/// `x` were already stored there.
pub fn seed_e_on_write(e: &mut [f64], slot: usize, x: &[Symbol], wx: &[f64], g: &PemGState) {
    e[slot] = g.self_similarity(x, wx);
}

/// Output side of one cycle, computed from the state at the start of the
/// cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub x: Vec<Symbol>,
    pub wx: Vec<f64>,
    pub s: Vec<f64>,
    pub se: Vec<f64>,
    /// 0-based winner.
    pub iwin: Option<usize>,
    pub y: Vec<Symbol>,
}

impl Evaluation {
    pub fn no_winner(&self) -> bool {
        self.iwin.is_none()
    }
}

/// Everything observable about one cycle of one unit.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleIO {
    pub x: Vec<Symbol>,
    pub xy: Vec<Symbol>,
    pub wen: bool,
    pub y: Vec<Symbol>,
    /// 0-based winner.
    pub iwin: Option<usize>,
    pub s: Vec<f64>,
    pub se: Vec<f64>,
    /// Excitation at the start of the cycle.
    pub e: Vec<f64>,
    /// Excitation after the cycle.
    pub e_next: Vec<f64>,
    /// Write pointer after the cycle, 1-based.
    pub wptr: usize,
}

impl CycleIO {
    pub fn no_winner(&self) -> bool {
        self.iwin.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct Pem {
    params: PemParams,
    c: f64,
    g: PemGState,
    e: Vec<f64>,
    y_empty: Vec<Symbol>,
}

impl Pem {
    pub fn new(params: PemParams) -> Result<Self, PemError> {
        params.validate()?;
        let c = params.decay_factor();
        let g = PemGState::new(&params);
        let e = vec![0.0; params.capacity];
        let y_empty = params.output_alphabets.iter().map(|a| a.epsilon()).collect();
        Ok(Self {
            params,
            c,
            g,
            e,
            y_empty,
        })
    }

    pub fn params(&self) -> &PemParams {
        &self.params
    }

    pub fn decay_factor(&self) -> f64 {
        self.c
    }

    pub fn ltm(&self) -> &PemGState {
        &self.g
    }

    pub fn e(&self) -> &[f64] {
        &self.e
    }

    pub fn empty_input(&self) -> Vec<Symbol> {
        self.g.x_empty.clone()
    }

    pub fn empty_output(&self) -> Vec<Symbol> {
        self.y_empty.clone()
    }

    /// Zeroes the excitation; the tape is kept.
    pub fn reset_e(&mut self) {
        self.e.iter_mut().for_each(|e| *e = 0.0);
    }

    /// Overwrites the excitation of a location. Used by tests and
    /// experiment set-up.
    pub fn set_e(&mut self, i: usize, value: f64) -> Result<(), PemError> {
        let slot = self.e.get_mut(i).ok_or(PemError::Location(i))?;
        *slot = value;
        Ok(())
    }

    fn check_vec(what: &'static str, v: &[Symbol], alphabets: &[Alphabet]) -> Result<(), PemError> {
        if v.len() != alphabets.len() {
            return Err(PemError::Width {
                what,
                expected: alphabets.len(),
                found: v.len(),
            });
        }
        for (s, a) in v.iter().zip(alphabets) {
            a.check(*s)?;
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &[Symbol], rng: &mut SessionRng) -> Result<Evaluation, PemError> {
        self.evaluate_weighted(x, &self.params.wx, rng)
    }

    /// [`Pem::evaluate`] with per-cycle weights in place of the configured
    /// ones.
    pub fn evaluate_weighted(&self, x: &[Symbol], wx: &[f64], rng: &mut SessionRng) -> Result<Evaluation, PemError> {
        Self::check_vec("x", x, &self.params.input_alphabets)?;
        if wx.len() != x.len() {
            return Err(PemError::Width {
                what: "wx",
                expected: x.len(),
                found: wx.len(),
            });
        }
        let s = decode(x, wx, &self.g);
        let se = modulate(&s, &self.e, self.params.a);
        let iwin = choose(&se, rng);
        let y = encode(&self.g, &self.y_empty, iwin);
        Ok(Evaluation {
            x: x.to_vec(),
            wx: wx.to_vec(),
            s,
            se,
            iwin,
            y,
        })
    }

    /// State update for an evaluated cycle. `record_x` is what gets written
    /// to the tape (normally `eval.x`).
    pub fn advance(
        &mut self,
        eval: &Evaluation,
        record_x: &[Symbol],
        xy: &[Symbol],
        wen: bool,
    ) -> Result<CycleIO, PemError> {
        Self::check_vec("xy", xy, &self.params.output_alphabets)?;
        Self::check_vec("x", record_x, &self.params.input_alphabets)?;
        if wen && self.g.written >= self.g.capacity() {
            return Err(PemError::CapacityExhausted {
                capacity: self.g.capacity(),
            });
        }
        let e_prev = std::mem::take(&mut self.e);
        let mut e_next = next_e(&eval.s, &e_prev, self.c);
        if let Some(slot) = learn(record_x, xy, wen, &mut self.g)? {
            seed_e_on_write(&mut e_next, slot, record_x, &eval.wx, &self.g);
        }
        self.e = e_next;
        Ok(CycleIO {
            x: eval.x.clone(),
            xy: xy.to_vec(),
            wen,
            y: eval.y.clone(),
            iwin: eval.iwin,
            s: eval.s.clone(),
            se: eval.se.clone(),
            e: e_prev,
            e_next: self.e.clone(),
            wptr: self.g.wptr(),
        })
    }

    /// One full cycle.
    pub fn cycle(&mut self, x: &[Symbol], xy: &[Symbol], wen: bool, rng: &mut SessionRng) -> Result<CycleIO, PemError> {
        let eval = self.evaluate(x, rng)?;
        self.advance(&eval, x, xy, wen)
    }

    /// Charge branch of the excitation update applied to one location with
    /// a freshly computed similarity. Returns the similarity used.
    pub fn recharge(&mut self, i: usize, x: &[Symbol]) -> Result<f64, PemError> {
        Self::check_vec("x", x, &self.params.input_alphabets)?;
        if i >= self.g.capacity() {
            return Err(PemError::Location(i));
        }
        let s = self.g.similarity(x, &self.params.wx, i);
        if s > self.e[i] {
            self.e[i] = s;
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::make_alphabet;
    use proptest::prelude::*;

    struct Fixture {
        a: Alphabet,
        d: Alphabet,
    }

    impl Fixture {
        fn new() -> Self {
            Self {
                a: make_alphabet("A", &["1", "2"]).unwrap(),
                d: make_alphabet("D", &["a", "b"]).unwrap(),
            }
        }
        fn x(&self, addr: &str, din: &str) -> Vec<Symbol> {
            vec![self.a.parse(addr).unwrap(), self.d.parse(din).unwrap()]
        }
        fn y(&self, v: &str) -> Vec<Symbol> {
            vec![self.d.parse(v).unwrap()]
        }
        fn pem(&self, capacity: usize, a: f64, tau: f64) -> Pem {
            Pem::new(PemParams::new(
                vec![self.a.clone(), self.d.clone()],
                vec![self.d.clone()],
                capacity,
                a,
                tau,
            ))
            .unwrap()
        }
    }

    fn ltm_with(f: &Fixture, rows: &[(&str, &str, &str)]) -> PemGState {
        let params = PemParams::new(vec![f.a.clone(), f.d.clone()], vec![f.d.clone()], rows.len() + 1, 0.0, 10.0);
        let mut g = PemGState::new(&params);
        for (addr, din, out) in rows {
            learn(&f.x(addr, din), &f.y(out), true, &mut g).unwrap();
        }
        g
    }

    #[test]
    fn decode_examples() {
        let f = Fixture::new();
        let g = ltm_with(&f, &[("1", "a", "a")]);
        assert_eq!(decode(&f.x("1", "a"), &[1.0, 1.0], &g)[0], 2.0);
        assert_eq!(decode(&f.x("1", "_"), &[1.0, 1.0], &g)[0], 1.0);
        assert_eq!(decode(&f.x("2", "b"), &[1.0, 1.0], &g)[0], 0.0);
        // unwritten location: ε never matches ε
        assert_eq!(decode(&f.x("1", "a"), &[1.0, 1.0], &g)[1], 0.0);
        let mut blank = ltm_with(&f, &[]);
        learn(&f.x("1", "_"), &f.y("a"), true, &mut blank).unwrap();
        assert_eq!(decode(&f.x("1", "_"), &[1.0, 1.0], &blank)[0], 1.0);
    }

    #[test]
    fn modulate_examples() {
        assert_eq!(modulate(&[1.0, 2.0], &[5.0, 7.0], 0.0), vec![1.0, 2.0]);
        let se = modulate(&[2.0], &[2.0], 0.4)[0];
        assert!((se - 3.6).abs() < 1e-12);
        assert_eq!(modulate(&[0.0], &[123.0], 0.4), vec![0.0]);
    }

    #[test]
    fn choose_examples() {
        let mut rng = SessionRng::new(1);
        assert_eq!(choose(&[0.0, 0.0, 0.0], &mut rng), None);
        assert_eq!(choose(&[1.0, 3.0, 2.0], &mut rng), Some(1));
        assert_eq!(choose(&[], &mut rng), None);
    }

    #[test]
    fn choose_two_way_tie_is_fair() {
        let mut rng = SessionRng::new(2024);
        let draws = 10_000;
        let mut hits = [0usize; 3];
        for _ in 0..draws {
            hits[choose(&[2.0, 2.0, 0.0], &mut rng).unwrap()] += 1;
        }
        assert_eq!(hits[2], 0);
        for h in &hits[..2] {
            let freq = *h as f64 / draws as f64;
            assert!((freq - 0.5).abs() <= 0.02, "freq {freq}");
        }
    }

    #[test]
    fn encode_examples() {
        let f = Fixture::new();
        let g = ltm_with(&f, &[("1", "a", "a")]);
        assert_eq!(encode(&g, &f.y("_"), Some(0)), f.y("a"));
        assert_eq!(encode(&g, &f.y("_"), None), f.y("_"));

        let y3 = make_alphabet("Y", &["s0", "s1"]).unwrap();
        let params = PemParams::new(vec![f.a.clone()], vec![y3.clone(); 3], 1, 0.0, 10.0);
        let mut g3 = PemGState::new(&params);
        let out: Vec<Symbol> = ["s0", "s1", "s0"].iter().map(|s| y3.parse(s).unwrap()).collect();
        learn(&[f.a.parse("1").unwrap()], &out, true, &mut g3).unwrap();
        assert_eq!(encode(&g3, &[y3.epsilon(); 3], Some(0)), out);
        assert_eq!(encode(&g3, &[y3.epsilon(); 3], None), vec![y3.epsilon(); 3]);
    }

    #[test]
    fn next_e_examples() {
        assert_eq!(next_e(&[2.0], &[0.5], 0.9), vec![2.0]);
        assert!((next_e(&[0.0], &[2.0], 0.9)[0] - 1.8).abs() < 1e-12);
        // strict inequality: equal values decay
        assert_eq!(next_e(&[1.0], &[1.0], 0.5), vec![0.5]);
    }

    #[test]
    fn learn_examples() {
        let f = Fixture::new();
        let mut g = ltm_with(&f, &[("1", "b", "b"), ("2", "a", "a")]);
        assert_eq!(g.wptr(), 3);
        let before = g.clone();
        assert_eq!(learn(&f.x("2", "b"), &f.y("b"), false, &mut g).unwrap(), None);
        assert_eq!(g, before);
        assert_eq!(learn(&f.x("1", "a"), &f.y("a"), true, &mut g).unwrap(), Some(2));
        assert_eq!(g.gx(2), f.x("1", "a").as_slice());
        assert_eq!(g.gy(2), f.y("a").as_slice());
        assert_eq!(g.wptr(), 4);
        assert!(matches!(
            learn(&f.x("1", "a"), &f.y("a"), true, &mut g),
            Err(PemError::CapacityExhausted { capacity: 3 })
        ));
    }

    #[test]
    fn seed_examples() {
        let f = Fixture::new();
        let g = ltm_with(&f, &[]);
        let mut e = vec![0.0; 1];
        seed_e_on_write(&mut e, 0, &f.x("1", "a"), &[1.0, 1.0], &g);
        assert_eq!(e[0], 2.0);
        seed_e_on_write(&mut e, 0, &f.x("1", "_"), &[1.0, 1.0], &g);
        assert_eq!(e[0], 1.0);
        seed_e_on_write(&mut e, 0, &f.x("_", "_"), &[1.0, 1.0], &g);
        assert_eq!(e[0], 0.0);
    }

    #[test]
    fn empty_ltm_gives_no_winner() {
        let f = Fixture::new();
        let mut pem = f.pem(4, 0.4, 100.0);
        let mut rng = SessionRng::new(0);
        let io = pem.cycle(&f.x("1", "a"), &f.y("_"), false, &mut rng).unwrap();
        assert!(io.no_winner());
        assert_eq!(io.y, f.y("_"));
    }

    #[test]
    fn recorded_rule_is_recalled() {
        let f = Fixture::new();
        let mut pem = f.pem(4, 0.4, 100.0);
        let mut rng = SessionRng::new(0);
        let io = pem.cycle(&f.x("1", "a"), &f.y("a"), true, &mut rng).unwrap();
        assert_eq!(io.wptr, 2);
        assert_eq!(io.e_next[0], 2.0);
        let io = pem.cycle(&f.x("1", "_"), &f.y("_"), false, &mut rng).unwrap();
        assert_eq!(io.s[0], 1.0);
        assert_eq!(io.e[0], 2.0);
        assert!((io.se[0] - 1.8).abs() < 1e-12);
        assert_eq!(io.iwin, Some(0));
        assert_eq!(io.y, f.y("a"));
        // s = 1 < e = 2: decay
        assert!((io.e_next[0] - 2.0 * 0.99).abs() < 1e-12);
    }

    #[test]
    fn most_recent_assignment_wins() {
        let f = Fixture::new();
        let mut pem = f.pem(4, 0.4, 100.0);
        let mut rng = SessionRng::new(0);
        pem.cycle(&f.x("1", "a"), &f.y("a"), true, &mut rng).unwrap();
        pem.cycle(&f.x("1", "b"), &f.y("b"), true, &mut rng).unwrap();
        let io = pem.cycle(&f.x("1", "_"), &f.y("_"), false, &mut rng).unwrap();
        assert!(io.e[1] > io.e[0]);
        assert_eq!(io.iwin, Some(1));
        assert_eq!(io.y, f.y("b"));
    }

    #[test]
    fn seed_overrides_decay_at_write_slot() {
        let f = Fixture::new();
        let mut pem = f.pem(2, 0.0, 10.0);
        let mut rng = SessionRng::new(0);
        let io = pem.cycle(&f.x("2", "_"), &f.y("a"), true, &mut rng).unwrap();
        assert_eq!(io.e_next, vec![1.0, 0.0]);
    }

    #[test]
    fn capacity_error_leaves_state_intact() {
        let f = Fixture::new();
        let mut pem = f.pem(1, 0.0, 10.0);
        let mut rng = SessionRng::new(0);
        pem.cycle(&f.x("1", "a"), &f.y("a"), true, &mut rng).unwrap();
        let e = pem.e().to_vec();
        assert!(pem.cycle(&f.x("1", "b"), &f.y("b"), true, &mut rng).is_err());
        assert_eq!(pem.e(), e.as_slice());
        assert_eq!(pem.ltm().wptr(), 2);
    }

    #[test]
    fn width_and_alphabet_checks() {
        let f = Fixture::new();
        let mut pem = f.pem(2, 0.0, 10.0);
        let mut rng = SessionRng::new(0);
        assert!(matches!(
            pem.cycle(&f.y("a"), &f.y("a"), true, &mut rng),
            Err(PemError::Width { .. })
        ));
        let swapped = vec![f.d.parse("a").unwrap(), f.a.parse("1").unwrap()];
        assert!(matches!(
            pem.cycle(&swapped, &f.y("a"), true, &mut rng),
            Err(PemError::Symbol(_))
        ));
    }

    #[test]
    fn param_validation() {
        let f = Fixture::new();
        let base = PemParams::new(vec![f.a.clone(), f.d.clone()], vec![f.d.clone()], 2, 0.4, 100.0);
        assert!(base.validate().is_ok());
        assert!(base.working_memory_safe());
        let mut p = base.clone();
        p.tau = 1.0;
        assert!(p.validate().is_err());
        let p = base.clone().with_weights(vec![0.5, 1.0]);
        assert!(p.validate().is_err());
        let p = base.clone().with_weights(vec![1.0]);
        assert!(p.validate().is_err());
        let mut p = base.clone();
        p.a = -0.1;
        assert!(p.validate().is_err());
        let mut p = base;
        p.a = 0.5;
        assert!(!p.working_memory_safe());
        assert!(!p.full_match_dominates());
    }

    #[test]
    fn dominance_needs_the_tighter_bound_beyond_two_inputs() {
        let a = make_alphabet("A", &["1"]).unwrap();
        let mut p = PemParams::new(vec![a.clone(); 3], vec![a], 1, 0.3, 10.0);
        // a·emax = 0.9 < 1, yet 2·(1 + 0.9) > 3
        assert!(p.working_memory_safe());
        assert!(!p.full_match_dominates());
        p.a = 0.16;
        assert!(p.full_match_dominates());
    }

    #[test]
    fn per_cycle_weight_override() {
        let f = Fixture::new();
        let mut pem = f.pem(2, 0.0, 10.0);
        let mut rng = SessionRng::new(0);
        pem.cycle(&f.x("1", "a"), &f.y("a"), true, &mut rng).unwrap();
        let eval = pem.evaluate_weighted(&f.x("1", "a"), &[3.0, 1.0], &mut rng).unwrap();
        assert_eq!(eval.s[0], 4.0);
    }

    #[test]
    fn half_life_of_pure_decay() {
        // Compare the first cycle at or below half of the start value with
        // the closed form ln(1/2)/ln(c).
        for tau in [10.0_f64, 100.0, 1000.0] {
            let c = 1.0 - 1.0 / tau;
            let mut e = vec![2.0];
            let mut t = 0;
            while e[0] > 1.0 {
                e = next_e(&[0.0], &e, c);
                t += 1;
            }
            let closed = (0.5_f64).ln() / c.ln();
            assert!((t as f64 - closed).abs() <= 1.0, "tau {tau}: {t} vs {closed}");
            assert_eq!(t, closed.ceil() as usize);
        }
    }

    proptest! {
        #[test]
        fn zero_similarity_masks_excitation(s in prop::collection::vec(0u8..4, 1..8), e in prop::collection::vec(0.0f64..10.0, 8), a in 0.0f64..2.0) {
            let s: Vec<f64> = s.into_iter().map(f64::from).collect();
            let se = modulate(&s, &e[..s.len()], a);
            for (si, sei) in s.iter().zip(&se) {
                if *si == 0.0 { prop_assert_eq!(*sei, 0.0); }
            }
        }

        // Two-component inputs: a·emax < 1 is enough for a full match to
        // outvote a partial one whatever the excitations.
        #[test]
        fn full_match_dominates_two_components(e_full in 0.0f64..2.0, e_part in 0.0f64..2.0, a_frac in 0.0f64..0.999) {
            let a = a_frac / 2.0;
            let se = modulate(&[2.0, 1.0], &[e_full, e_part], a);
            prop_assert!(se[0] > se[1]);
        }

        // General unit-weight case: the bound tightens to a·emax < 1/(m-1).
        #[test]
        fn full_match_dominates_general(m in 2usize..8, partial in 0usize..8, e_full in 0.0f64..1.0, e_part in 0.0f64..1.0, a_frac in 0.0f64..0.999) {
            let partial = partial % m;
            let emax = m as f64;
            let a = a_frac / (emax * (m as f64 - 1.0));
            let se = modulate(&[m as f64, partial as f64], &[e_full * emax, e_part * emax], a);
            prop_assert!(se[0] > se[1]);
        }

        #[test]
        fn excitation_stays_bounded(steps in prop::collection::vec((0usize..3, 0usize..3, any::<bool>()), 1..40)) {
            let f = Fixture::new();
            let mut pem = f.pem(40, 0.3, 7.0);
            let mut rng = SessionRng::new(5);
            let emax = pem.params().emax();
            for (ai, di, wen) in steps {
                let x = vec![f.a.symbol(ai).unwrap_or(f.a.epsilon()), f.d.symbol(di).unwrap_or(f.d.epsilon())];
                let xy = vec![f.d.symbol(di).unwrap_or(f.d.epsilon())];
                let io = pem.cycle(&x, &xy, wen, &mut rng).unwrap();
                for (i, (s, e)) in io.s.iter().zip(&io.e_next).enumerate() {
                    prop_assert!(*s >= 0.0 && *s <= emax);
                    prop_assert!(*e >= 0.0 && *e <= emax);
                    if i + 1 >= io.wptr { prop_assert_eq!(*s, 0.0); }
                }
                let best = io.se.iter().take(io.wptr - 1).copied().fold(0.0, f64::max);
                prop_assert_eq!(io.iwin.is_none(), best == 0.0);
            }
        }

        // Complete memory: with writing always enabled the tape equals the
        // raw input/desired-output sequence.
        #[test]
        fn tape_records_everything(steps in prop::collection::vec((0usize..3, 0usize..3, 0usize..3), 0..30)) {
            let f = Fixture::new();
            let mut pem = f.pem(30, 0.4, 50.0);
            let mut rng = SessionRng::new(11);
            let mut seen = Vec::new();
            for (ai, di, yi) in steps {
                let x = vec![f.a.symbol(ai).unwrap_or(f.a.epsilon()), f.d.symbol(di).unwrap_or(f.d.epsilon())];
                let xy = vec![f.d.symbol(yi).unwrap_or(f.d.epsilon())];
                pem.cycle(&x, &xy, true, &mut rng).unwrap();
                seen.push((x, xy));
            }
            prop_assert_eq!(pem.ltm().written(), seen.len());
            for (i, (x, xy)) in seen.iter().enumerate() {
                prop_assert_eq!(pem.ltm().gx(i), x.as_slice());
                prop_assert_eq!(pem.ltm().gy(i), xy.as_slice());
            }
        }
    }
}
