//! Formal big zeta terms: a basic pattern, one exponent per column, and a
//! rational coefficient.
//!
//! The value of a term is `coefficient · Σ_{n ∈ ℕ^d} ∏_c L_c(n)^{-k_c}` where
//! `L_c(n)` is the sum of the row parameters covering column `c`. An exponent
//! `k_c` stands for column `c` repeated `k_c` times in the plain 0/1 matrix;
//! every homogeneous constant-coefficient operator acting on the kernel
//! lands in this representation after enough column doublings.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{PatternError, TermError};
use crate::expression::Expression;
use crate::linalg::ColumnVector;
use crate::mzv::MzvWord;
use crate::pattern::{Pattern, RowInterval};
use crate::rat::Rat;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Term {
    pattern: Pattern,
    exponents: Vec<u32>,
    coefficient: Rat,
}

/// Order-independent identity of a canonical term: depth plus the sorted
/// multiset of (column vector, exponent). Equal keys mean equal kernels.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TermKey {
    pub depth: usize,
    pub columns: Vec<(u64, u32)>,
}

impl fmt::Display for TermKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "d{}", self.depth)?;
        for (m, k) in &self.columns {
            write!(f, ":{m:x}^{k}")?;
        }
        Ok(())
    }
}

impl Term {
    /// A validated term with all exponents positive.
    pub fn new(pattern: Pattern, exponents: Vec<u32>, coefficient: Rat) -> Result<Self, PatternError> {
        if exponents.len() != pattern.width() {
            return Err(PatternError::ExponentCount {
                expected: pattern.width(),
                got: exponents.len(),
            });
        }
        if let Some(c) = exponents.iter().position(|&k| k == 0) {
            return Err(PatternError::NonPositiveExponent(c + 1));
        }
        Ok(Term {
            pattern,
            exponents,
            coefficient,
        })
    }

    /// Convenience constructor from interval pairs, coefficient one.
    pub fn from_rows(rows: &[(usize, usize)], exponents: &[u32]) -> Result<Self, PatternError> {
        let pattern = Pattern::new(rows.iter().map(|&r| r.into()).collect(), exponents.len())?;
        Term::new(pattern, exponents.to_vec(), Rat::one())
    }

    /// Exponents may be zero here (auxiliary columns inside a move).
    pub(crate) fn from_parts(pattern: Pattern, exponents: Vec<u32>, coefficient: Rat) -> Self {
        debug_assert_eq!(pattern.width(), exponents.len());
        Term {
            pattern,
            exponents,
            coefficient,
        }
    }

    pub fn pattern(&self) -> &Pattern {
        &self.pattern
    }

    pub fn rows(&self) -> &[RowInterval] {
        self.pattern.rows()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn coefficient(&self) -> &Rat {
        &self.coefficient
    }

    pub fn depth(&self) -> usize {
        self.pattern.depth()
    }

    pub fn width(&self) -> usize {
        self.pattern.width()
    }

    pub fn weight(&self) -> u32 {
        self.exponents.iter().sum()
    }

    pub fn with_coefficient(&self, coefficient: Rat) -> Term {
        Term {
            coefficient,
            ..self.clone()
        }
    }

    pub fn scaled(&self, factor: &Rat) -> Term {
        self.with_coefficient(&self.coefficient * factor)
    }

    /// Exponent at a 1-based column position.
    pub fn exponent(&self, position: usize) -> u32 {
        self.exponents[position - 1]
    }

    /// Sum of exponents over the columns a row covers.
    pub fn row_weight(&self, row: usize) -> u32 {
        let r = self.rows()[row];
        (r.start..=r.end).map(|c| self.exponent(c)).sum()
    }

    /// The plain 0/1 matrix: column `c` repeated `k_c` times.
    pub fn expand(&self) -> Vec<Vec<u8>> {
        self.rows()
            .iter()
            .map(|r| {
                (1..=self.width())
                    .flat_map(|c| {
                        let bit = u8::from(r.contains(c));
                        std::iter::repeat_n(bit, self.exponent(c) as usize)
                    })
                    .collect()
            })
            .collect()
    }

    /// The expanded matrix as a pattern with all exponents one.
    pub fn expanded(&self) -> Term {
        let offsets: Vec<usize> = self
            .exponents
            .iter()
            .scan(0usize, |acc, &k| {
                let start = *acc;
                *acc += k as usize;
                Some(start)
            })
            .collect();
        let weight = self.weight() as usize;
        let rows = self
            .rows()
            .iter()
            .map(|r| {
                // columns with exponent zero contribute no expanded positions
                let first = (r.start..=r.end).find(|&c| self.exponent(c) > 0);
                let last = (r.start..=r.end).rev().find(|&c| self.exponent(c) > 0);
                match (first, last) {
                    (Some(f), Some(l)) => {
                        RowInterval::new(offsets[f - 1] + 1, offsets[l - 1] + self.exponent(l) as usize)
                    }
                    _ => panic!("row {r} has no weighted column"),
                }
            })
            .collect();
        Term::from_parts(
            Pattern::from_parts(rows, weight),
            vec![1; weight],
            self.coefficient.clone(),
        )
    }

    /// No expanded row has a single unit. Necessary for convergence, but
    /// not sufficient: see [`Term::converges`].
    pub fn rows_have_two_units(&self) -> bool {
        (0..self.depth()).all(|m| self.row_weight(m) >= 2)
    }

    /// Convergent iff every nonempty set `S` of rows meets columns of total
    /// exponent at least `|S| + 1`.
    ///
    /// On the region where the row variables are ordered, the kernel is
    /// squeezed between constant multiples of `∏_i m_i^{-c_i}` (`m_i` the
    /// `i`-th largest variable, `c_i` the exponent of columns whose largest
    /// variable is `m_i`), and such nested sums converge iff
    /// `c_1 + … + c_r > r` for every `r`. Checked as a b-matching: for each
    /// row `r0`, rows demand one unit (`r0` two) from the columns covering
    /// them, column `c` supplying `k_c`.
    pub fn converges(&self) -> bool {
        let d = self.depth();
        let cover: Vec<Vec<usize>> = (0..d)
            .map(|m| {
                let r = self.rows()[m];
                (r.start..=r.end).filter(|&c| self.exponent(c) > 0).collect()
            })
            .collect();
        (0..d).all(|r0| {
            let units: Vec<usize> = (0..d).chain(std::iter::once(r0)).collect();
            let mut assigned: Vec<Vec<usize>> = vec![Vec::new(); self.width() + 1];
            units.iter().enumerate().all(|(u, _)| {
                let mut seen = vec![false; self.width() + 1];
                self.augment(u, &units, &cover, &mut assigned, &mut seen)
            })
        })
    }

    fn augment(
        &self,
        u: usize,
        units: &[usize],
        cover: &[Vec<usize>],
        assigned: &mut [Vec<usize>],
        seen: &mut [bool],
    ) -> bool {
        for &c in &cover[units[u]] {
            if seen[c] {
                continue;
            }
            seen[c] = true;
            if assigned[c].len() < self.exponent(c) as usize {
                assigned[c].push(u);
                return true;
            }
            for slot in 0..assigned[c].len() {
                let v = assigned[c][slot];
                if self.augment(v, units, cover, assigned, seen) {
                    assigned[c][slot] = u;
                    return true;
                }
            }
        }
        false
    }

    /// Reverses the column order.
    pub fn reflect(&self) -> Term {
        let w = self.width();
        let rows = self
            .rows()
            .iter()
            .map(|r| RowInterval::new(w + 1 - r.end, w + 1 - r.start))
            .collect();
        let mut exps = self.exponents.clone();
        exps.reverse();
        Term::from_parts(Pattern::from_parts(rows, w), exps, self.coefficient.clone())
    }

    /// The same series with its columns reordered: new position `i + 1`
    /// holds old 1-based column `order[i]`. `None` if a row would stop
    /// being contiguous.
    pub fn permute_columns(&self, order: &[usize]) -> Option<Term> {
        let w = self.width();
        if order.len() != w {
            return None;
        }
        let mut new_pos = vec![0; w + 1];
        for (i, &c) in order.iter().enumerate() {
            if c == 0 || c > w || new_pos[c] != 0 {
                return None;
            }
            new_pos[c] = i + 1;
        }
        let mut rows = Vec::with_capacity(self.depth());
        for r in self.rows() {
            let (lo, hi) =
                (r.start..=r.end).fold((usize::MAX, 0), |(lo, hi), c| (lo.min(new_pos[c]), hi.max(new_pos[c])));
            if hi - lo + 1 != r.len() {
                return None;
            }
            rows.push(RowInterval::new(lo, hi));
        }
        let exps = order.iter().map(|&c| self.exponents[c - 1]).collect();
        Some(Term::from_parts(
            Pattern::from_parts(rows, w),
            exps,
            self.coefficient.clone(),
        ))
    }

    /// Column orders (as for [`Term::permute_columns`]) that keep every row
    /// contiguous, in lexicographic order, at most `limit` of them.
    pub fn column_orders(&self, limit: usize) -> Vec<Vec<usize>> {
        // row state: 0 unseen, 1 open, 2 closed
        fn go(t: &Term, order: &mut Vec<usize>, state: &mut Vec<u8>, out: &mut Vec<Vec<usize>>, limit: usize) {
            if out.len() >= limit {
                return;
            }
            let w = t.width();
            if order.len() == w {
                out.push(order.clone());
                return;
            }
            for c in 1..=w {
                if order.contains(&c) {
                    continue;
                }
                let saved = state.clone();
                let mut ok = true;
                for (m, r) in t.rows().iter().enumerate() {
                    if r.contains(c) {
                        ok &= state[m] != 2;
                        state[m] = 1;
                    } else if state[m] == 1 {
                        state[m] = 2;
                    }
                }
                if ok {
                    order.push(c);
                    go(t, order, state, out, limit);
                    order.pop();
                }
                *state = saved;
            }
        }
        let mut out = Vec::new();
        go(self, &mut Vec::new(), &mut vec![0; self.depth()], &mut out, limit);
        out
    }

    /// Block-diagonal sum; the value is the product of the two values.
    pub fn direct_sum(&self, other: &Term) -> Term {
        let shift = self.width();
        let rows = self
            .rows()
            .iter()
            .copied()
            .chain(
                other
                    .rows()
                    .iter()
                    .map(|r| RowInterval::new(r.start + shift, r.end + shift)),
            )
            .collect();
        let exps = self.exponents.iter().chain(&other.exponents).copied().collect();
        Term::from_parts(
            Pattern::from_parts(rows, shift + other.width()),
            exps,
            &self.coefficient * &other.coefficient,
        )
    }

    /// `∂/∂z_row` of the kernel: `Σ_{c ∋ row} (-k_c) · term[k_c + 1]`.
    pub fn apply_derivative(&self, row: usize) -> Result<Expression, TermError> {
        let r = *self.rows().get(row).ok_or(TermError::RowOutOfRange(row))?;
        let mut out = Expression::new();
        for c in r.start..=r.end {
            let k = self.exponent(c);
            if k == 0 {
                continue;
            }
            let mut exps = self.exponents.clone();
            exps[c - 1] += 1;
            let coeff = &self.coefficient * &Rat::from_int(-(k as i64));
            out.add_term(Term::from_parts(self.pattern.clone(), exps, coeff));
        }
        Ok(out)
    }

    /// Drops zero-exponent columns, folds equal columns into the first
    /// occurrence, and sorts rows by `(start, end)`.
    pub fn canonical(&self) -> Term {
        self.canonical_with_rows().0
    }

    /// Like [`Term::canonical`], also returning for each canonical row the
    /// index of the original row it came from.
    pub fn canonical_with_rows(&self) -> (Term, Vec<usize>) {
        let mut pattern = self.pattern.clone();
        let mut exps = self.exponents.clone();
        let mut pos = 1;
        while pos <= pattern.width() {
            if exps[pos - 1] == 0 {
                pattern = pattern
                    .remove_column(pos)
                    .expect("dropping a zero-exponent column emptied a row");
                exps.remove(pos - 1);
                continue;
            }
            let col = pattern.column(pos);
            if let Some(first) = (1..pos).find(|&c| pattern.column(c) == col) {
                exps[first - 1] += exps[pos - 1];
                pattern = pattern
                    .remove_column(pos)
                    .expect("a duplicate column cannot be a row's only column");
                exps.remove(pos - 1);
                continue;
            }
            pos += 1;
        }
        let mut origin: Vec<usize> = (0..pattern.depth()).collect();
        origin.sort_by_key(|&m| pattern.rows()[m]);
        let rows = origin.iter().map(|&m| pattern.rows()[m]).collect();
        (
            Term::from_parts(pattern.with_rows(rows), exps, self.coefficient.clone()),
            origin,
        )
    }

    /// Key of the canonical form.
    pub fn key(&self) -> TermKey {
        let c = self.canonical();
        c.key_of_canonical()
    }

    pub(crate) fn key_of_canonical(&self) -> TermKey {
        let mut columns: Vec<(u64, u32)> = (1..=self.width())
            .map(|p| (self.pattern.column(p).mask(), self.exponent(p)))
            .collect();
        columns.sort();
        TermKey {
            depth: self.depth(),
            columns,
        }
    }

    pub fn columns(&self) -> Vec<ColumnVector> {
        self.pattern.columns()
    }

    /// Row supports, restricted to weighted columns, totally ordered by
    /// strict inclusion.
    pub fn is_chain(&self) -> bool {
        self.chain_order().is_some()
    }

    /// Row indices from largest to smallest support, if they form a chain.
    fn chain_order(&self) -> Option<Vec<usize>> {
        let supports: Vec<Vec<usize>> = self
            .rows()
            .iter()
            .map(|r| (r.start..=r.end).filter(|&c| self.exponent(c) > 0).collect())
            .collect();
        let mut order: Vec<usize> = (0..self.depth()).collect();
        order.sort_by_key(|&m| std::cmp::Reverse(supports[m].len()));
        let nested = order.windows(2).all(|w| {
            let (big, small) = (&supports[w[0]], &supports[w[1]]);
            small.len() < big.len() && small.iter().all(|c| big.contains(c))
        });
        nested.then_some(order)
    }

    /// Reads off the MZV word of a chain term: with supports
    /// `S₁ ⊋ … ⊋ S_δ` and `K_m = Σ_{c ∈ S_m \ S_{m+1}} k_c`, the word is
    /// `(K_δ, …, K₁)`.
    pub fn to_mzv(&self) -> Result<(MzvWord, Rat), TermError> {
        let order = self.chain_order().ok_or(TermError::NotChain)?;
        let mut parts = Vec::with_capacity(order.len());
        for (i, &m) in order.iter().enumerate() {
            let inner = order.get(i + 1).map(|&n| self.rows()[n]);
            let r = self.rows()[m];
            let k: u32 = (r.start..=r.end)
                .filter(|&c| !inner.is_some_and(|s| s.contains(c)))
                .map(|c| self.exponent(c))
                .sum();
            parts.push(k);
        }
        parts.reverse();
        Ok((MzvWord::new(parts), self.coefficient.clone()))
    }

    /// The T_δ term of a word: row m covers columns m..=δ, exponents
    /// `(k_δ, …, k₁)`.
    pub fn from_mzv(word: &MzvWord) -> Term {
        let d = word.depth();
        assert!(d > 0, "empty word has no term");
        assert!(word.parts().iter().all(|&k| k >= 1), "parts must be positive");
        let mut exps = word.parts().to_vec();
        exps.reverse();
        Term::from_parts(Pattern::upper_triangular(d), exps, Rat::one())
    }

    /// Exact kernel `coefficient · ∏ L_c(z)^{-k_c}` at a rational point.
    /// Returns `None` if some form with positive exponent vanishes.
    pub fn kernel_at(&self, z: &[Rat]) -> Option<Rat> {
        assert_eq!(z.len(), self.depth());
        let mut denom = Rat::one();
        for c in 1..=self.width() {
            let k = self.exponent(c);
            if k == 0 {
                continue;
            }
            let l: Rat = self.pattern.rows_covering(c).map(|m| &z[m]).sum();
            if l.is_zero() {
                return None;
            }
            denom *= l.pow(k as i32);
        }
        Some(&self.coefficient / &denom)
    }

    /// Kernel at an integer lattice point, without the coefficient.
    pub fn kernel_at_f64(&self, n: &[f64]) -> f64 {
        let mut prod = 1.0;
        for c in 1..=self.width() {
            let k = self.exponent(c);
            if k == 0 {
                continue;
            }
            let l: f64 = self.pattern.rows_covering(c).map(|m| n[m]).sum();
            prod *= l.powi(k as i32);
        }
        1.0 / prod
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(TermJson::from(self)).expect("serializable")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Term, TermParseError> {
        let raw: TermJson = serde_json::from_value(value.clone()).map_err(|e| TermParseError::Syntax(e.to_string()))?;
        raw.try_into()
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.coefficient.is_one() {
            write!(f, "({})·", self.coefficient)?;
        }
        write!(f, "Z[")?;
        for (i, r) in self.rows().iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{r}")?;
        }
        let exps: Vec<String> = self.exponents.iter().map(|k| k.to_string()).collect();
        write!(f, "; k=({})]", exps.join(","))
    }
}

/// The wire format: 1-based inclusive row intervals, one exponent per
/// column, coefficient as `"p/q"` (defaults to `"1"` on input).
#[derive(Serialize, Deserialize)]
pub struct TermJson {
    pub rows: Vec<(usize, usize)>,
    pub exponents: Vec<u32>,
    #[serde(default = "Rat::one")]
    pub coefficient: Rat,
}

impl From<&Term> for TermJson {
    fn from(t: &Term) -> Self {
        TermJson {
            rows: t.rows().iter().map(|r| (*r).into()).collect(),
            exponents: t.exponents.clone(),
            coefficient: t.coefficient.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TermParseError {
    #[error("parse error: {0}")]
    Syntax(String),
    #[error(transparent)]
    Invalid(#[from] PatternError),
}

impl TryFrom<TermJson> for Term {
    type Error = TermParseError;

    fn try_from(raw: TermJson) -> Result<Term, TermParseError> {
        let width = raw.exponents.len();
        if let Some(&(s, e)) = raw.rows.iter().find(|(s, e)| *s == 0 || s > e || *e > width) {
            return Err(TermParseError::Syntax(format!(
                "row [{s},{e}] out of range for {width} columns"
            )));
        }
        let pattern = Pattern::new(raw.rows.into_iter().map(Into::into).collect(), width)?;
        Ok(Term::new(pattern, raw.exponents, raw.coefficient)?)
    }
}

impl Serialize for Term {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        TermJson::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Term {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = TermJson::deserialize(deserializer)?;
        // trace records may carry zero-exponent auxiliary columns
        let width = raw.exponents.len();
        let rows: Vec<RowInterval> = raw.rows.into_iter().map(Into::into).collect();
        if rows.iter().any(|r| r.start == 0 || r.start > r.end || r.end > width) {
            return Err(serde::de::Error::custom("row out of range"));
        }
        Ok(Term::from_parts(
            Pattern::from_parts(rows, width),
            raw.exponents,
            raw.coefficient,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mzv::compositions;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn term(rows: &[(usize, usize)], k: &[u32]) -> Term {
        Term::from_rows(rows, k).unwrap()
    }

    fn word(p: &[u32]) -> MzvWord {
        MzvWord::new(p.to_vec())
    }

    fn random_point(rng: &mut ChaCha8Rng, d: usize) -> Vec<Rat> {
        (0..d)
            .map(|_| Rat::new(rng.gen_range(1..40), rng.gen_range(1..17)))
            .collect()
    }

    #[test]
    fn expand_examples() {
        assert_eq!(term(&[(1, 1)], &[2]).expand(), vec![vec![1, 1]]);
        assert_eq!(
            term(&[(1, 2), (2, 2)], &[1, 2]).expand(),
            vec![vec![1, 1, 1], vec![0, 1, 1]]
        );
        let t = term(&[(1, 2), (2, 3)], &[1, 1, 1]);
        assert_eq!(t.expand(), vec![vec![1, 1, 0], vec![0, 1, 1]]);
        assert_eq!(t.expanded(), t);
    }

    #[test]
    fn expanded_is_basic_with_width_weight() {
        let t = term(&[(1, 2), (2, 3)], &[2, 1, 3]);
        let e = t.expanded();
        assert_eq!(e.width(), 6);
        assert!(e.pattern().is_basic());
        let rows: Vec<Vec<u8>> = e.expand();
        assert_eq!(rows, t.expand());
    }

    #[test]
    fn convergence_examples() {
        assert!(term(&[(1, 2), (2, 3)], &[1, 1, 1]).converges());
        assert!(!term(&[(1, 1), (2, 2)], &[1, 1]).converges());
        assert!(term(&[(1, 2), (2, 2)], &[1, 2]).converges());
        // every row has two units, yet the three rows share only three
        // units between them: 1/((a+b)(a+c)(b+c)) diverges
        let t = term(&[(1, 2), (1, 3), (2, 3)], &[1, 1, 1]);
        assert!(t.rows_have_two_units());
        assert!(!t.converges());
        assert!(term(&[(1, 2), (1, 3), (2, 3)], &[1, 1, 2]).converges());
    }

    // subset oracle: every set S of rows meets exponent at least |S| + 1
    fn converges_by_subsets(t: &Term) -> bool {
        let d = t.depth();
        (1u32..(1 << d)).all(|s| {
            let met: u32 = (1..=t.width())
                .filter(|&c| (0..d).any(|m| s >> m & 1 == 1 && t.rows()[m].start <= c && c <= t.rows()[m].end))
                .map(|c| t.exponent(c))
                .sum();
            met > s.count_ones()
        })
    }

    #[test]
    fn reflect_tornheim() {
        let t = term(&[(1, 2), (2, 3)], &[1, 2, 3]);
        let r = t.reflect();
        assert_eq!(r.rows(), &[RowInterval::new(2, 3), RowInterval::new(1, 2)]);
        assert_eq!(r.exponents(), &[3, 2, 1]);
        assert_eq!(r.reflect(), t);
        assert!(r.pattern().is_basic());
    }

    #[test]
    fn reflect_zeta21_keeps_kernel() {
        let t = term(&[(1, 2), (2, 2)], &[1, 2]);
        let r = t.reflect();
        assert_eq!(r.to_mzv().unwrap().0, word(&[2, 1]));
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let z = random_point(&mut rng, 2);
            assert_eq!(t.kernel_at(&z), r.kernel_at(&z));
        }
    }

    #[test]
    fn direct_sum_examples() {
        let z2 = Term::from_mzv(&word(&[2]));
        let z3 = Term::from_mzv(&word(&[3]));
        let s = z2.direct_sum(&z2);
        assert_eq!(s.rows(), &[RowInterval::new(1, 1), RowInterval::new(2, 2)]);
        assert_eq!(s.exponents(), &[2, 2]);
        assert_eq!(s.expand(), vec![vec![1, 1, 0, 0], vec![0, 0, 1, 1]]);
        let s = z2.direct_sum(&z3);
        assert_eq!(s.exponents(), &[2, 3]);
        assert_eq!(s.weight(), 5);
        assert!(s.pattern().is_basic());
    }

    #[test]
    fn direct_sum_kernel_factors() {
        let a = term(&[(1, 2), (2, 3)], &[1, 2, 1]);
        let b = term(&[(1, 2), (2, 2)], &[3, 1]);
        let s = a.direct_sum(&b);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let z = random_point(&mut rng, 4);
            let lhs = s.kernel_at(&z).unwrap();
            let rhs = a.kernel_at(&z[..2]).unwrap() * b.kernel_at(&z[2..]).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn chain_to_mzv() {
        assert_eq!(term(&[(1, 2), (2, 2)], &[1, 2]).to_mzv().unwrap().0, word(&[2, 1]));
        assert_eq!(term(&[(1, 1)], &[2]).to_mzv().unwrap().0, word(&[2]));
        assert_eq!(
            term(&[(1, 4), (3, 4)], &[1, 1, 1, 1]).to_mzv().unwrap().0,
            word(&[2, 2])
        );
        assert_eq!(term(&[(1, 2), (1, 1)], &[1, 2]).to_mzv().unwrap().0, word(&[1, 2]));
        assert_eq!(term(&[(1, 2), (2, 3)], &[1, 1, 1]).to_mzv(), Err(TermError::NotChain));
    }

    #[test]
    fn from_mzv_layout() {
        let t = Term::from_mzv(&word(&[3]));
        assert_eq!(t.exponents(), &[3]);
        let t = Term::from_mzv(&word(&[2, 1]));
        assert_eq!(t.rows(), &[RowInterval::new(1, 2), RowInterval::new(2, 2)]);
        assert_eq!(t.exponents(), &[1, 2]);
        let t = Term::from_mzv(&word(&[3, 1, 2]));
        assert_eq!(t.exponents(), &[2, 1, 3]);
    }

    #[test]
    fn mzv_round_trip_all_small_compositions() {
        for n in 1..=9 {
            for w in compositions(n) {
                let t = Term::from_mzv(&w);
                assert_eq!(t.to_mzv().unwrap(), (w.clone(), Rat::one()));
                assert_eq!(t.converges(), w.is_admissible());
                assert_eq!(t.weight(), w.weight());
            }
        }
    }

    #[test]
    fn derivative_examples() {
        let d = term(&[(1, 1)], &[1]).apply_derivative(0).unwrap();
        assert_eq!(d.len(), 1);
        let t = d.terms().next().unwrap();
        assert_eq!((t.exponents(), t.coefficient()), (&[2u32][..], &Rat::from_int(-1)));

        let d = term(&[(1, 1), (2, 2)], &[1, 1]).apply_derivative(0).unwrap();
        let t = d.terms().next().unwrap();
        assert_eq!(t.exponents(), &[2, 1]);
        assert_eq!(t.coefficient(), &Rat::from_int(-1));
    }

    #[test]
    fn derivative_matches_finite_difference_identity() {
        // ∂/∂z₁ of 1/(z₁ (z₁+z₂) z₂) checked through the exact quotient rule
        let t = term(&[(1, 2), (2, 3)], &[1, 1, 1]);
        let d = t.apply_derivative(0).unwrap();
        assert_eq!(d.len(), 2);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let z = random_point(&mut rng, 2);
            let (a, b) = (&z[0], &z[1]);
            let s = a + b;
            // d/da [1/(a b s)] = -(1/(a² b s) + 1/(a b s²))
            let expected = -((a * a * b * &s).recip().unwrap() + (a * b * &s * &s).recip().unwrap());
            let got: Rat = d.terms().map(|t| t.kernel_at(&z).unwrap()).sum();
            assert_eq!(got, expected);
        }
    }

    #[test]
    fn canonical_merges_duplicates() {
        let t = term(&[(1, 3), (2, 2)], &[1, 1, 1]);
        let c = t.canonical();
        assert_eq!(c.rows(), &[RowInterval::new(1, 2), RowInterval::new(2, 2)]);
        assert_eq!(c.exponents(), &[2, 1]);
        assert_eq!(c.to_mzv().unwrap().0, word(&[1, 2]));
        assert_eq!(t.key(), c.key());
    }

    #[test]
    fn json_round_trip_and_errors() {
        let t = term(&[(1, 2), (2, 3)], &[1, 1, 1]);
        let j = t.to_json();
        assert_eq!(
            j.to_string(),
            r#"{"rows":[[1,2],[2,3]],"exponents":[1,1,1],"coefficient":"1"}"#
        );
        assert_eq!(Term::from_json(&j).unwrap(), t);
        let bad = serde_json::json!({"rows": [[1, 4]], "exponents": [1, 1]});
        assert!(matches!(Term::from_json(&bad), Err(TermParseError::Syntax(_))));
        let dep = serde_json::json!({"rows": [[1, 2], [1, 2]], "exponents": [1, 1]});
        assert_eq!(
            Term::from_json(&dep),
            Err(TermParseError::Invalid(PatternError::RankDeficient))
        );
    }

    #[test]
    fn random_terms_weight_and_convergence() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut seen = 0;
        while seen < 200 {
            let w = rng.gen_range(1..=5);
            let d = rng.gen_range(1..=3);
            let rows: Vec<(usize, usize)> = (0..d)
                .map(|_| {
                    let a = rng.gen_range(1..=w);
                    (a, rng.gen_range(a..=w))
                })
                .collect();
            let k: Vec<u32> = (0..w).map(|_| rng.gen_range(1..=3)).collect();
            let Ok(t) = Term::from_rows(&rows, &k) else { continue };
            seen += 1;
            let e = t.expand();
            assert!(e.iter().all(|row| row.len() as u32 == t.weight()));
            let by_units = e.iter().all(|row| row.iter().filter(|&&b| b == 1).count() >= 2);
            assert_eq!(t.rows_have_two_units(), by_units);
            assert_eq!(t.converges(), converges_by_subsets(&t));
            if t.converges() {
                assert!(by_units);
            }
            let (c, origin) = t.canonical_with_rows();
            assert_eq!(c.weight(), t.weight());
            let z = random_point(&mut rng, d);
            let zc: Vec<Rat> = origin.iter().map(|&m| z[m].clone()).collect();
            assert_eq!(c.kernel_at(&zc), t.kernel_at(&z));
            let r = t.reflect();
            assert_eq!(r.kernel_at(&z), t.kernel_at(&z));
        }
    }

    #[test]
    fn permutation_must_keep_rows_contiguous() {
        let t = term(&[(1, 2), (2, 3)], &[1, 2, 3]);
        assert!(t.permute_columns(&[2, 1, 3]).is_none());
        assert!(t.permute_columns(&[1, 2]).is_none());
        let p = t.permute_columns(&[3, 2, 1]).unwrap();
        assert_eq!(p.exponents(), &[3, 2, 1]);
        assert_eq!(t.column_orders(10), vec![vec![1, 2, 3], vec![3, 2, 1]]);
    }

    #[test]
    fn column_orders_keep_the_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for t in crate::corpus::default_corpus().iter().take(40) {
            let orders = t.column_orders(500);
            let identity: Vec<usize> = (1..=t.width()).collect();
            assert_eq!(orders[0], identity);
            let reversed: Vec<usize> = identity.iter().rev().copied().collect();
            assert!(orders.contains(&reversed));
            let z = random_point(&mut rng, t.depth());
            for order in &orders {
                let p = t.permute_columns(order).unwrap();
                assert_eq!(p.kernel_at(&z), t.kernel_at(&z), "{t} {order:?}");
            }
        }
    }
}
