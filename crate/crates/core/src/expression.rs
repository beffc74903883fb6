//! ℚ-linear combinations of terms with eager cancellation.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use crate::rat::Rat;
use crate::term::{Term, TermKey};

/// Terms are stored canonicalized, keyed by [`TermKey`]. The first
/// representative seen for a key keeps its column order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Expression {
    terms: BTreeMap<TermKey, Term>,
}

impl Expression {
    pub fn new() -> Self {
        Expression { terms: BTreeMap::new() }
    }

    pub fn from_term(term: Term) -> Self {
        let mut e = Expression::new();
        e.add_term(term);
        e
    }

    pub fn add_term(&mut self, term: Term) {
        if term.coefficient().is_zero() {
            return;
        }
        let term = term.canonical();
        let key = term.key_of_canonical();
        match self.terms.entry(key) {
            Entry::Occupied(mut e) => {
                let sum = e.get().coefficient() + term.coefficient();
                if sum.is_zero() {
                    e.remove();
                } else {
                    let merged = e.get().with_coefficient(sum);
                    e.insert(merged);
                }
            }
            Entry::Vacant(e) => {
                e.insert(term);
            }
        }
    }

    pub fn add_expression(&mut self, other: &Expression) {
        for t in other.terms.values() {
            self.add_term(t.clone());
        }
    }

    pub fn scaled(&self, factor: &Rat) -> Expression {
        let mut out = Expression::new();
        for t in self.terms.values() {
            out.add_term(t.scaled(factor));
        }
        out
    }

    pub fn terms(&self) -> impl Iterator<Item = &Term> {
        self.terms.values()
    }

    pub fn into_terms(self) -> impl Iterator<Item = Term> {
        self.terms.into_values()
    }

    /// Removes and returns the term with the greatest key (deepest first).
    pub fn pop_last(&mut self) -> Option<Term> {
        self.terms.pop_last().map(|(_, t)| t)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// The common weight, or `None` if empty or mixed.
    pub fn weight(&self) -> Option<u32> {
        let mut it = self.terms.values().map(Term::weight);
        let first = it.next()?;
        it.all(|w| w == first).then_some(first)
    }

    pub fn converges(&self) -> bool {
        self.terms.values().all(Term::converges)
    }
}

impl FromIterator<Term> for Expression {
    fn from_iter<I: IntoIterator<Item = Term>>(iter: I) -> Self {
        let mut e = Expression::new();
        for t in iter {
            e.add_term(t);
        }
        e
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.values().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}
