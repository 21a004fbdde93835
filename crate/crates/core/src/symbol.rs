//! Basis symbols for the ambient rational vector space.
//!
//! A presented group lives inside a finite-dimensional rational space
//! whose coordinates are named, not numbered: `x.α` directions carry the
//! first divisible part, `y.α.i` and `y_star` the second, and `w.α.i.m`
//! are ladder rungs interpolating the divisibility chains. Symbols are
//! totally ordered by kind and then lexicographically by indices, and the
//! textual form below is the normative serialization.

use crate::Error;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

/// A named coordinate direction.
///
/// Multi-block presentations distinguish blocks by offsetting the first
/// index in steps of the truncation parameter; `YStar` carries its block
/// index explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BasisSymbol {
    /// `x.α` — a basis direction of the first designated part.
    X(u32),
    /// `y.α.i` — a basis direction of the second designated part.
    Y(u32, u32),
    /// `y_star.block` — the mixing direction of the second part.
    YStar(u32),
    /// `w.α.i.m` — rung `m ≥ 1` of the ladder attached to the pair `(α,i)`.
    Ladder(u32, u32, u32),
}

impl BasisSymbol {
    /// Renders the symbol in the canonical grammar. Single-block
    /// presentations write the mixing direction as bare `y_star`; pass the
    /// total block count so the form round-trips.
    pub fn render(&self, blocks: u32) -> String {
        match self {
            BasisSymbol::X(a) => alloc::format!("x.{a}"),
            BasisSymbol::Y(a, i) => alloc::format!("y.{a}.{i}"),
            BasisSymbol::YStar(b) => {
                if blocks <= 1 {
                    "y_star".to_string()
                } else {
                    alloc::format!("y_star.{b}")
                }
            }
            BasisSymbol::Ladder(a, i, m) => alloc::format!("w.{a}.{i}.{m}"),
        }
    }

    /// Parses the canonical textual form. Bare `y_star` means block 0.
    pub fn parse(s: &str) -> Result<Self, Error> {
        let bad = || Error::ForeignSymbol(s.to_string());
        if s == "y_star" {
            return Ok(BasisSymbol::YStar(0));
        }
        let mut parts = s.split('.');
        let kind = parts.next().ok_or_else(bad)?;
        let idx: Vec<u32> = parts
            .map(|p| p.parse::<u32>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad())?;
        match (kind, idx.as_slice()) {
            ("x", [a]) => Ok(BasisSymbol::X(*a)),
            ("y", [a, i]) => Ok(BasisSymbol::Y(*a, *i)),
            ("y_star", [b]) => Ok(BasisSymbol::YStar(*b)),
            ("w", [a, i, m]) => Ok(BasisSymbol::Ladder(*a, *i, *m)),
            _ => Err(bad()),
        }
    }

    /// The row index `α` for symbols attached to a row, if any.
    pub fn row(&self) -> Option<u32> {
        match self {
            BasisSymbol::X(a) | BasisSymbol::Y(a, _) | BasisSymbol::Ladder(a, _, _) => Some(*a),
            BasisSymbol::YStar(_) => None,
        }
    }
}

impl fmt::Display for BasisSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisSymbol::YStar(b) => write!(f, "y_star.{b}"),
            other => write!(f, "{}", other.render(u32::MAX)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_is_kind_then_lex() {
        let mut syms = alloc::vec![
            BasisSymbol::Ladder(0, 0, 1),
            BasisSymbol::YStar(0),
            BasisSymbol::Y(1, 0),
            BasisSymbol::Y(0, 2),
            BasisSymbol::X(1),
            BasisSymbol::X(0),
        ];
        syms.sort();
        assert_eq!(
            syms,
            alloc::vec![
                BasisSymbol::X(0),
                BasisSymbol::X(1),
                BasisSymbol::Y(0, 2),
                BasisSymbol::Y(1, 0),
                BasisSymbol::YStar(0),
                BasisSymbol::Ladder(0, 0, 1),
            ]
        );
    }

    #[test]
    fn render_parse_round_trip() {
        for (sym, blocks, text) in [
            (BasisSymbol::X(3), 1, "x.3"),
            (BasisSymbol::Y(0, 1), 2, "y.0.1"),
            (BasisSymbol::YStar(0), 1, "y_star"),
            (BasisSymbol::YStar(1), 2, "y_star.1"),
            (BasisSymbol::Ladder(0, 1, 2), 1, "w.0.1.2"),
        ] {
            assert_eq!(sym.render(blocks), text);
            assert_eq!(BasisSymbol::parse(text).unwrap(), sym);
        }
    }

    #[test]
    fn parse_rejects_malformed() {
        for bad in ["z.1", "x", "x.1.2", "y.1", "w.1.2", "x.-1", "x.a"] {
            assert!(BasisSymbol::parse(bad).is_err(), "accepted {bad}");
        }
    }
}
