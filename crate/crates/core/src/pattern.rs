//! Basic matrices in merged-column form.
//!
//! Rows are positive roots `e_{ab}`: contiguous runs of ones over an ordered
//! list of column positions. Positions are 1-based and inclusive at the
//! public boundary, matching the JSON format.

use serde::{Deserialize, Serialize};

use crate::error::PatternError;
use crate::linalg::{self, ColumnVector, MAX_DEPTH};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "(usize, usize)", into = "(usize, usize)")]
pub struct RowInterval {
    pub start: usize,
    pub end: usize,
}

impl RowInterval {
    pub fn new(start: usize, end: usize) -> Self {
        RowInterval { start, end }
    }

    pub fn contains(&self, position: usize) -> bool {
        self.start <= position && position <= self.end
    }

    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end < self.start
    }

    /// Strict containment of supports.
    pub fn strictly_contains(&self, other: &RowInterval) -> bool {
        self.start <= other.start && other.end <= self.end && self != other
    }
}

impl From<(usize, usize)> for RowInterval {
    fn from((start, end): (usize, usize)) -> Self {
        RowInterval { start, end }
    }
}

impl From<RowInterval> for (usize, usize) {
    fn from(r: RowInterval) -> Self {
        (r.start, r.end)
    }
}

impl std::fmt::Display for RowInterval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "e{},{}", self.start, self.end)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Pattern {
    width: usize,
    rows: Vec<RowInterval>,
}

impl Pattern {
    /// Validates the three conditions for a basic matrix.
    pub fn new(rows: Vec<RowInterval>, width: usize) -> Result<Self, PatternError> {
        if rows.is_empty() {
            return Err(PatternError::Empty);
        }
        if rows.len() > MAX_DEPTH {
            return Err(PatternError::TooDeep(rows.len()));
        }
        for r in &rows {
            if r.start == 0 || r.start > r.end || r.end > width {
                return Err(PatternError::MalformedInterval {
                    start: r.start,
                    end: r.end,
                    width,
                });
            }
        }
        let p = Pattern { width, rows };
        if let Some(c) = (1..=width).find(|&c| p.column(c).is_zero()) {
            return Err(PatternError::ZeroColumn(c));
        }
        if linalg::rank(&p.columns()) != p.depth() {
            return Err(PatternError::RankDeficient);
        }
        Ok(p)
    }

    /// Builds a pattern without validation; used by moves whose outputs are
    /// basic by construction.
    pub(crate) fn from_parts(rows: Vec<RowInterval>, width: usize) -> Self {
        debug_assert!(rows.iter().all(|r| r.start >= 1 && r.start <= r.end && r.end <= width));
        Pattern { width, rows }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn depth(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[RowInterval] {
        &self.rows
    }

    /// Column at 1-based `position`, as the set of rows covering it.
    pub fn column(&self, position: usize) -> ColumnVector {
        let mask = self
            .rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.contains(position))
            .fold(0u64, |m, (i, _)| m | 1 << i);
        ColumnVector::new(mask, self.depth())
    }

    pub fn columns(&self) -> Vec<ColumnVector> {
        (1..=self.width).map(|c| self.column(c)).collect()
    }

    /// Rows covering the 1-based `position`.
    pub fn rows_covering(&self, position: usize) -> impl Iterator<Item = usize> + '_ {
        self.rows
            .iter()
            .enumerate()
            .filter(move |(_, r)| r.contains(position))
            .map(|(i, _)| i)
    }

    pub fn is_basic(&self) -> bool {
        Pattern::new(self.rows.clone(), self.width).is_ok()
    }

    /// Removes the 1-based column `position`; intervals stay contiguous.
    /// Returns `None` if some row would become empty.
    pub(crate) fn remove_column(&self, position: usize) -> Option<Pattern> {
        let mut rows = Vec::with_capacity(self.rows.len());
        for r in &self.rows {
            let mut r = *r;
            if r.start == position && r.end == position {
                return None;
            }
            if r.start > position {
                r.start -= 1;
                r.end -= 1;
            } else if r.end >= position {
                r.end -= 1;
            }
            rows.push(r);
        }
        Some(Pattern::from_parts(rows, self.width - 1))
    }

    pub(crate) fn with_rows(&self, rows: Vec<RowInterval>) -> Pattern {
        Pattern::from_parts(rows, self.width)
    }

    /// The T_d shape: row m covers columns m..=d.
    pub fn upper_triangular(d: usize) -> Pattern {
        Pattern::from_parts((1..=d).map(|m| RowInterval::new(m, d)).collect(), d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(v: &[(usize, usize)]) -> Vec<RowInterval> {
        v.iter().map(|&r| r.into()).collect()
    }

    #[test]
    fn tornheim_is_basic() {
        let p = Pattern::new(rows(&[(1, 2), (2, 3)]), 3).unwrap();
        assert_eq!(p.depth(), 2);
        assert_eq!(p.column(2).mask(), 0b11);
    }

    #[test]
    fn triangular_is_basic() {
        assert!(Pattern::new(rows(&[(1, 3), (2, 3), (3, 3)]), 3).is_ok());
        assert_eq!(
            Pattern::upper_triangular(3).rows(),
            &rows(&[(1, 3), (2, 3), (3, 3)])[..]
        );
    }

    #[test]
    fn equal_rows_are_rank_deficient() {
        assert_eq!(
            Pattern::new(rows(&[(1, 2), (1, 2)]), 2),
            Err(PatternError::RankDeficient)
        );
    }

    #[test]
    fn uncovered_column() {
        assert_eq!(Pattern::new(rows(&[(1, 1)]), 2), Err(PatternError::ZeroColumn(2)));
    }

    #[test]
    fn malformed_intervals() {
        assert!(matches!(
            Pattern::new(rows(&[(2, 1)]), 2),
            Err(PatternError::MalformedInterval { .. })
        ));
        assert!(matches!(
            Pattern::new(rows(&[(1, 4)]), 3),
            Err(PatternError::MalformedInterval { .. })
        ));
        assert!(matches!(
            Pattern::new(rows(&[(0, 1)]), 3),
            Err(PatternError::MalformedInterval { .. })
        ));
    }

    #[test]
    fn removing_columns_keeps_intervals() {
        let p = Pattern::new(rows(&[(1, 3), (2, 2)]), 3).unwrap();
        let q = p.remove_column(3).unwrap();
        assert_eq!(q.rows(), &rows(&[(1, 2), (2, 2)])[..]);
        assert!(p.remove_column(2).is_none());
        let q = p.remove_column(1).unwrap();
        assert_eq!(q.rows(), &rows(&[(1, 2), (1, 1)])[..]);
    }
}
