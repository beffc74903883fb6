//! Exact linear algebra over ℚ for 0/1 column vectors.
//!
//! Rank uses fraction-free (Bareiss) elimination over big integers. Circuits
//! are found as fundamental circuits: columns are scanned left to right
//! against a growing independent set, and the first column that falls in the
//! span of that set is expressed uniquely in it. A unique expression in an
//! independent set has minimal support, so the result is a circuit.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::rat::Rat;

/// Maximum depth representable by a [`ColumnVector`].
pub const MAX_DEPTH: usize = 64;

/// A 0/1 column, stored as a bitmask: bit `m` set iff row `m` covers it.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ColumnVector {
    mask: u64,
    len: u8,
}

impl ColumnVector {
    pub fn new(mask: u64, len: usize) -> Self {
        assert!(len <= MAX_DEPTH, "column length {len} exceeds {MAX_DEPTH}");
        let keep = if len == 64 { u64::MAX } else { (1u64 << len) - 1 };
        ColumnVector {
            mask: mask & keep,
            len: len as u8,
        }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mask = bits
            .iter()
            .enumerate()
            .fold(0u64, |m, (i, &b)| if b { m | (1 << i) } else { m });
        ColumnVector::new(mask, bits.len())
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, row: usize) -> bool {
        row < self.len() && self.mask >> row & 1 == 1
    }

    pub fn is_zero(&self) -> bool {
        self.mask == 0
    }

    pub fn to_rats(&self) -> Vec<Rat> {
        (0..self.len())
            .map(|m| if self.get(m) { Rat::one() } else { Rat::zero() })
            .collect()
    }
}

/// A minimal linear dependency among columns: `Σ coefficients[t] · column(members[t]) = 0`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitDependency {
    /// Column positions, 0-based, ascending.
    pub members: Vec<usize>,
    pub coefficients: Vec<Rat>,
}

impl CircuitDependency {
    pub fn coefficient_of(&self, position: usize) -> Option<&Rat> {
        self.members
            .iter()
            .position(|&m| m == position)
            .map(|i| &self.coefficients[i])
    }

    /// Checks `Σ α_t v_t = 0` against the given columns.
    pub fn annihilates(&self, columns: &[ColumnVector]) -> bool {
        let Some(depth) = self.members.first().map(|&m| columns[m].len()) else {
            return false;
        };
        (0..depth).all(|row| {
            self.members
                .iter()
                .zip(&self.coefficients)
                .filter(|(&m, _)| columns[m].get(row))
                .map(|(_, a)| a)
                .sum::<Rat>()
                .is_zero()
        })
    }
}

/// Rank over ℚ by Bareiss elimination.
pub fn rank(columns: &[ColumnVector]) -> usize {
    let Some(depth) = columns.first().map(|c| c.len()) else {
        return 0;
    };
    // rows of the working matrix are the columns; rank is transpose-invariant
    let mut m: Vec<Vec<BigInt>> = columns
        .iter()
        .map(|c| {
            (0..depth)
                .map(|r| if c.get(r) { BigInt::one() } else { BigInt::zero() })
                .collect()
        })
        .collect();
    bareiss_rank(&mut m)
}

/// Fraction-free elimination in place; returns the rank.
pub fn bareiss_rank(m: &mut [Vec<BigInt>]) -> usize {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let mut prev = BigInt::one();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        for i in r + 1..rows {
            for j in c + 1..cols {
                let v = &m[r][c] * &m[i][j] - &m[i][c] * &m[r][j];
                m[i][j] = v / &prev;
            }
            m[i][c] = BigInt::zero();
        }
        prev = m[r][c].clone();
        r += 1;
    }
    r
}

/// Incremental echelon basis that remembers how each reduced vector is
/// built from the original column positions.
struct EchelonBasis {
    /// (pivot row, reduced vector, combination over input positions)
    entries: Vec<(usize, Vec<Rat>, Vec<(usize, Rat)>)>,
}

impl EchelonBasis {
    fn new() -> Self {
        EchelonBasis { entries: Vec::new() }
    }

    /// Reduces `v` (the column at `position`). Returns `Ok(())` if it was
    /// independent and got added, or `Err(combination)` with
    /// `column(position) - Σ c_i column(i) = 0` expressed as a sparse list
    /// including `position` itself with coefficient 1.
    fn insert(&mut self, position: usize, mut v: Vec<Rat>) -> Result<(), Vec<(usize, Rat)>> {
        let mut combo: Vec<(usize, Rat)> = vec![(position, Rat::one())];
        for (pivot, basis_vec, basis_combo) in &self.entries {
            if v[*pivot].is_zero() {
                continue;
            }
            let factor = v[*pivot].clone();
            for (x, b) in v.iter_mut().zip(basis_vec) {
                if !b.is_zero() {
                    *x -= &factor * b;
                }
            }
            for (pos, c) in basis_combo {
                let delta = -(&factor * c);
                match combo.iter_mut().find(|(p, _)| p == pos) {
                    Some((_, existing)) => *existing += delta,
                    None => combo.push((*pos, delta)),
                }
            }
        }
        match v.iter().position(|x| !x.is_zero()) {
            Some(pivot) => {
                let inv = v[pivot].recip().expect("nonzero pivot");
                for x in v.iter_mut() {
                    *x *= &inv;
                }
                for (_, c) in combo.iter_mut() {
                    *c *= &inv;
                }
                // keep the basis fully reduced at the new pivot
                for (_, bv, bc) in self.entries.iter_mut() {
                    if bv[pivot].is_zero() {
                        continue;
                    }
                    let f = bv[pivot].clone();
                    for (x, y) in bv.iter_mut().zip(&v) {
                        *x -= &f * y;
                    }
                    for (pos, c) in &combo {
                        let delta = -(&f * c);
                        match bc.iter_mut().find(|(p, _)| p == pos) {
                            Some((_, existing)) => *existing += delta,
                            None => bc.push((*pos, delta)),
                        }
                    }
                }
                self.entries.push((pivot, v, combo));
                Ok(())
            }
            None => Err(combo),
        }
    }
}

fn circuit_from_combo(combo: Vec<(usize, Rat)>) -> CircuitDependency {
    let mut pairs: Vec<(usize, Rat)> = combo.into_iter().filter(|(_, c)| !c.is_zero()).collect();
    pairs.sort_by_key(|(p, _)| *p);
    let (members, coefficients) = pairs.into_iter().unzip();
    CircuitDependency { members, coefficients }
}

/// Finds a circuit among `columns`.
///
/// Without `must_contain`, returns the fundamental circuit of the first
/// column (in position order) that depends on its predecessors; its maximal
/// member is that column and carries coefficient 1. With `must_contain = p`,
/// returns the unique expression of column `p` through a greedily chosen
/// independent subset of the other columns (coefficient 1 on `p`), or `None`
/// if `p` is not in the span of the others.
pub fn find_circuit(columns: &[ColumnVector], must_contain: Option<usize>) -> Option<CircuitDependency> {
    let mut basis = EchelonBasis::new();
    match must_contain {
        None => {
            for (pos, col) in columns.iter().enumerate() {
                if let Err(combo) = basis.insert(pos, col.to_rats()) {
                    return Some(circuit_from_combo(combo));
                }
            }
            None
        }
        Some(target) => {
            assert!(target < columns.len(), "must_contain out of range");
            for (pos, col) in columns.iter().enumerate() {
                if pos != target {
                    // dependent non-target columns are simply skipped
                    let _ = basis.insert(pos, col.to_rats());
                }
            }
            basis
                .insert(target, columns[target].to_rats())
                .err()
                .map(circuit_from_combo)
        }
    }
}

/// A basis of the right kernel `{x : Σ x_c column_c = 0}` from reduced row
/// echelon form over ℚ.
pub fn kernel_basis(columns: &[ColumnVector]) -> Vec<Vec<Rat>> {
    let n = columns.len();
    let Some(depth) = columns.first().map(|c| c.len()) else {
        return Vec::new();
    };
    let mut a: Vec<Vec<Rat>> = (0..depth)
        .map(|r| {
            columns
                .iter()
                .map(|c| if c.get(r) { Rat::one() } else { Rat::zero() })
                .collect()
        })
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..n {
        if r == depth {
            break;
        }
        let Some(p) = (r..depth).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let inv = a[r][c].recip().expect("nonzero pivot");
        for x in a[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..depth {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                let pivot_row = a[r].clone();
                for (x, y) in a[i].iter_mut().zip(&pivot_row) {
                    *x -= &f * y;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    (0..n)
        .filter(|c| !pivots.contains(c))
        .map(|free| {
            let mut x = vec![Rat::zero(); n];
            x[free] = Rat::one();
            for (row, &pc) in pivots.iter().enumerate() {
                x[pc] = -a[row][free].clone();
            }
            x
        })
        .collect()
}
