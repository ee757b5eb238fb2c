//! Interned symbol alphabets.
//!
//! Symbols carry no structure beyond identity: two symbols of the same
//! alphabet are either equal or not. Every alphabet contains the empty
//! symbol ε, which is rendered as `_` in all text formats.

use std::fmt;
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Arc;

use thiserror::Error;

/// Text rendering of ε.
pub const EPSILON_TOKEN: &str = "_";

static NEXT_ALPHABET_ID: AtomicU32 = AtomicU32::new(1);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SymbolError {
    #[error("alphabet {alphabet}: duplicate member `{name}`")]
    DuplicateMember { alphabet: String, name: String },
    #[error("alphabet {alphabet}: `{name}` is reserved for the empty symbol")]
    ReservedName { alphabet: String, name: String },
    #[error("alphabet {alphabet}: invalid member name `{name}`")]
    InvalidName { alphabet: String, name: String },
    #[error("`{token}` is not a member of alphabet {alphabet}")]
    UnknownToken { alphabet: String, token: String },
    #[error("symbol belongs to alphabet {found}, expected {expected}")]
    AlphabetMismatch { expected: String, found: String },
}

/// Process-unique alphabet identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AlphabetId(u32);

/// A finite set of named tokens plus ε.
///
/// Members get token ids `0..len` in declaration order; ε is appended last.
#[derive(Debug)]
pub struct SymbolAlphabet {
    id: AlphabetId,
    name: String,
    members: Vec<String>,
}

/// Shared handle to an alphabet.
pub type Alphabet = Arc<SymbolAlphabet>;

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| !c.is_whitespace() && !matches!(c, '=' | ',' | '#' | '"'))
}

/// Build an alphabet from its non-empty member names. ε is added implicitly.
pub fn make_alphabet<S: AsRef<str>>(name: &str, members: &[S]) -> Result<Alphabet, SymbolError> {
    let mut names: Vec<String> = Vec::with_capacity(members.len());
    for m in members {
        let m = m.as_ref();
        if m == EPSILON_TOKEN || m == "ε" {
            return Err(SymbolError::ReservedName {
                alphabet: name.to_string(),
                name: m.to_string(),
            });
        }
        if !valid_name(m) {
            return Err(SymbolError::InvalidName {
                alphabet: name.to_string(),
                name: m.to_string(),
            });
        }
        if names.iter().any(|n| n == m) {
            return Err(SymbolError::DuplicateMember {
                alphabet: name.to_string(),
                name: m.to_string(),
            });
        }
        names.push(m.to_string());
    }
    Ok(Arc::new(SymbolAlphabet {
        id: AlphabetId(NEXT_ALPHABET_ID.fetch_add(1, Ordering::Relaxed)),
        name: name.to_string(),
        members: names,
    }))
}

impl SymbolAlphabet {
    pub fn id(&self) -> AlphabetId {
        self.id
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of non-empty members.
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn epsilon(&self) -> Symbol {
        Symbol {
            alphabet: self.id,
            token: self.members.len() as u32,
        }
    }

    /// The non-empty members in declaration order.
    pub fn symbols(&self) -> impl Iterator<Item = Symbol> + '_ {
        (0..self.members.len() as u32).map(move |token| Symbol {
            alphabet: self.id,
            token,
        })
    }

    /// The `index`-th non-empty member.
    pub fn symbol(&self, index: usize) -> Option<Symbol> {
        (index < self.members.len()).then(|| Symbol {
            alphabet: self.id,
            token: index as u32,
        })
    }

    pub fn member_names(&self) -> &[String] {
        &self.members
    }

    pub fn contains(&self, s: Symbol) -> bool {
        s.alphabet == self.id
    }

    pub fn parse(&self, token: &str) -> Result<Symbol, SymbolError> {
        if token == EPSILON_TOKEN {
            return Ok(self.epsilon());
        }
        self.members
            .iter()
            .position(|m| m == token)
            .map(|i| Symbol {
                alphabet: self.id,
                token: i as u32,
            })
            .ok_or_else(|| SymbolError::UnknownToken {
                alphabet: self.name.clone(),
                token: token.to_string(),
            })
    }

    /// Text form of a member of this alphabet.
    pub fn print(&self, s: Symbol) -> &str {
        debug_assert!(self.contains(s), "symbol printed with a foreign alphabet");
        self.members
            .get(s.token as usize)
            .map(String::as_str)
            .unwrap_or(EPSILON_TOKEN)
    }

    /// Fails if `s` belongs to another alphabet.
    pub fn check(&self, s: Symbol) -> Result<Symbol, SymbolError> {
        if self.contains(s) {
            Ok(s)
        } else {
            Err(SymbolError::AlphabetMismatch {
                expected: self.name.clone(),
                found: format!("#{}", s.alphabet.0),
            })
        }
    }
}

/// An interned token of some alphabet.
///
/// The derived `PartialEq` is only meaningful between symbols of one
/// alphabet; use [`Symbol::try_eq`] where both sides are not known to share
/// an alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Symbol {
    alphabet: AlphabetId,
    token: u32,
}

impl Symbol {
    pub fn alphabet_id(self) -> AlphabetId {
        self.alphabet
    }

    /// Token id inside its alphabet. ε has the largest id.
    pub fn token(self) -> u32 {
        self.token
    }

    pub fn try_eq(self, other: Symbol) -> Result<bool, SymbolError> {
        if self.alphabet != other.alphabet {
            return Err(SymbolError::AlphabetMismatch {
                expected: format!("#{}", self.alphabet.0),
                found: format!("#{}", other.alphabet.0),
            });
        }
        Ok(self.token == other.token)
    }
}

impl fmt::Display for AlphabetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Renders a symbol vector as a comma-separated list.
pub fn print_vec(alphabets: &[Alphabet], v: &[Symbol]) -> String {
    v.iter()
        .zip(alphabets)
        .map(|(s, a)| a.print(*s))
        .collect::<Vec<_>>()
        .join(",")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn address_alphabet_has_implicit_epsilon() {
        let a = make_alphabet("A", &["1", "2"]).unwrap();
        assert_eq!(a.len(), 2);
        let names: Vec<_> = a.symbols().map(|s| a.print(s).to_string()).collect();
        assert_eq!(names, ["1", "2"]);
        assert_eq!(a.print(a.epsilon()), "_");
    }

    #[test]
    fn data_alphabet_members() {
        let d = make_alphabet("D", &["a", "b"]).unwrap();
        let a = d.parse("a").unwrap();
        let b = d.parse("b").unwrap();
        assert_ne!(a, b);
        assert_ne!(a, d.epsilon());
        assert_ne!(b, d.epsilon());
        assert_eq!(d.parse("_").unwrap(), d.epsilon());
    }

    #[test]
    fn empty_alphabet_holds_only_epsilon() {
        let e = make_alphabet::<&str>("E", &[]).unwrap();
        assert!(e.is_empty());
        assert_eq!(e.symbols().count(), 0);
        assert!(e.contains(e.epsilon()));
    }

    #[test]
    fn rejects_duplicates_and_reserved_names() {
        assert!(matches!(
            make_alphabet("D", &["a", "a"]),
            Err(SymbolError::DuplicateMember { .. })
        ));
        assert!(matches!(
            make_alphabet("D", &["_"]),
            Err(SymbolError::ReservedName { .. })
        ));
        assert!(matches!(
            make_alphabet("D", &["ε"]),
            Err(SymbolError::ReservedName { .. })
        ));
        assert!(matches!(
            make_alphabet("D", &["a b"]),
            Err(SymbolError::InvalidName { .. })
        ));
    }

    #[test]
    fn cross_alphabet_comparison_is_an_error() {
        let a = make_alphabet("A", &["x"]).unwrap();
        let b = make_alphabet("B", &["x"]).unwrap();
        let sa = a.parse("x").unwrap();
        let sb = b.parse("x").unwrap();
        assert!(sa.try_eq(sb).is_err());
        assert!(b.check(sa).is_err());
        assert_eq!(sa.try_eq(sa), Ok(true));
    }

    #[test]
    fn unknown_token() {
        let d = make_alphabet("D", &["a"]).unwrap();
        assert!(matches!(d.parse("z"), Err(SymbolError::UnknownToken { .. })));
    }

    proptest! {
        #[test]
        fn parse_print_round_trip(n in 0usize..12) {
            let names: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
            let alpha = make_alphabet("P", &names).unwrap();
            for s in alpha.symbols().chain(std::iter::once(alpha.epsilon())) {
                prop_assert_eq!(alpha.parse(alpha.print(s)).unwrap(), s);
                prop_assert_eq!(s, s);
                if s != alpha.epsilon() {
                    prop_assert_ne!(s, alpha.epsilon());
                }
            }
        }
    }
}
