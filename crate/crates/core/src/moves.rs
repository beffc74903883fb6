//! Value-preserving rewrites of a single term.
//!
//! All moves return their outputs *slot-preserving*: row `m` of an output
//! corresponds to row `m` of the input (the third harmonic output drops one
//! slot), and a partial-fraction output keeps the input's rows and only
//! removes the column whose exponent reached zero. Verification relies on
//! this correspondence; callers canonicalize afterwards.
//!
//! Column indices in circuits are 0-based; row indices are 0-based.

use crate::error::MoveError;
use crate::expression::Expression;
use crate::linalg::{find_circuit, CircuitDependency};
use crate::pattern::{Pattern, RowInterval};
use crate::rat::Rat;
use crate::term::Term;

fn check_weight(input: &Term, outputs: &[Term]) -> Result<(), MoveError> {
    for o in outputs {
        if o.weight() != input.weight() {
            return Err(MoveError::WeightViolation {
                before: input.weight(),
                after: o.weight(),
            });
        }
    }
    Ok(())
}

/// Orlik–Solomon partial-fraction step.
///
/// From `Σ α_t L_t = 0` we get `L_p = -Σ_{t≠p} (α_t/α_p) L_t`, hence
/// `K = Σ_{t≠p} (-α_t/α_p) · K · L_t / L_p`: each output lowers `k_t` by one
/// and raises `k_p` by one. The pivot may carry exponent zero.
pub fn pf_step(term: &Term, circuit: &CircuitDependency, pivot: usize) -> Result<Vec<Term>, MoveError> {
    let alpha_p = circuit
        .coefficient_of(pivot)
        .filter(|a| !a.is_zero())
        .ok_or(MoveError::InvalidPivot(pivot))?
        .clone();
    let exps = term.exponents();
    let mut outputs = Vec::with_capacity(circuit.members.len() - 1);
    for (&t, alpha_t) in circuit.members.iter().zip(&circuit.coefficients) {
        if t == pivot {
            continue;
        }
        if exps[t] == 0 {
            return Err(MoveError::ExponentUnderflow(t));
        }
        let mut new_exps = exps.to_vec();
        new_exps[t] -= 1;
        new_exps[pivot] += 1;
        let coeff = term.coefficient() * &(-(alpha_t / &alpha_p));
        let out = if new_exps[t] == 0 {
            let pattern = term
                .pattern()
                .remove_column(t + 1)
                .expect("a circuit member is never a row's only column");
            new_exps.remove(t);
            Term::from_parts(pattern, new_exps, coeff)
        } else {
            Term::from_parts(term.pattern().clone(), new_exps, coeff)
        };
        outputs.push(out);
    }
    check_weight(term, &outputs)?;
    Ok(outputs)
}

/// The circuit and pivot [`square_reduce`] uses: the fundamental circuit of
/// the first dependent column, pivoted at its maximal member.
pub fn default_circuit(term: &Term) -> Option<(CircuitDependency, usize)> {
    let circuit = find_circuit(&term.columns(), None)?;
    let pivot = *circuit.members.last().expect("circuits are nonempty");
    Some((circuit, pivot))
}

/// Repeated partial fractions until every term's columns are independent
/// (exactly `d` distinct columns, a basis).
pub fn square_reduce(term: &Term) -> Result<Expression, MoveError> {
    const STEP_LIMIT: usize = 100_000;
    let mut pending = Expression::from_term(term.clone());
    let mut done = Expression::new();
    let mut steps = 0;
    while let Some(t) = pending.pop_last() {
        match default_circuit(&t) {
            None => done.add_term(t),
            Some((circuit, pivot)) => {
                steps += 1;
                if steps > STEP_LIMIT {
                    return Err(MoveError::NonTermination(STEP_LIMIT));
                }
                for o in pf_step(&t, &circuit, pivot)? {
                    pending.add_term(o);
                }
            }
        }
    }
    Ok(done)
}

/// Harmonic-product split of adjacent disjoint rows `A = e_{i,j}`,
/// `B = e_{j+1,k}` with parameters `n`, `m`:
///
/// * `n > m`, `(n, m) = (u+v, u)`: slot A becomes `e_{i,k}`, slot B `e_{i,j}`;
/// * `n < m`, `(n, m) = (u, u+v)`: slot A becomes `e_{i,k}`, slot B `e_{j+1,k}`;
/// * `n = m = u`: slot A becomes `e_{i,k}`, slot B is removed.
///
/// Exponents and coefficients are unchanged.
pub fn forward_hp(term: &Term, row_a: usize, row_b: usize) -> Result<Vec<Term>, MoveError> {
    let rows = term.rows();
    let (a, b) = match (rows.get(row_a), rows.get(row_b)) {
        (Some(a), Some(b)) if row_a != row_b && a.end + 1 == b.start => (*a, *b),
        _ => return Err(MoveError::RowsNotAdjacent(row_a, row_b)),
    };
    let merged = RowInterval::new(a.start, b.end);
    let with = |slot_a: RowInterval, slot_b: Option<RowInterval>| {
        let mut new_rows = rows.to_vec();
        new_rows[row_a] = slot_a;
        match slot_b {
            Some(r) => new_rows[row_b] = r,
            None => {
                new_rows.remove(row_b);
            }
        }
        Term::from_parts(
            Pattern::from_parts(new_rows, term.width()),
            term.exponents().to_vec(),
            term.coefficient().clone(),
        )
    };
    let outputs = vec![with(merged, Some(a)), with(merged, Some(b)), with(merged, None)];
    check_weight(term, &outputs)?;
    Ok(outputs)
}

/// The harmonic split solved for its first output. With `A = e_{c,k}` and
/// `B = e_{c,j}`, `j < k`:
/// `Z{A,B} = Z{e_{c,j}, e_{j+1,k}} - Z{e_{c,k}, e_{j+1,k}} - Z{e_{c,k}}`,
/// returned in that order with the signs folded into the coefficients.
pub fn inverse_hp(term: &Term, row_a: usize, row_b: usize) -> Result<Vec<Term>, MoveError> {
    let rows = term.rows();
    let (a, b) = match (rows.get(row_a), rows.get(row_b)) {
        (Some(a), Some(b)) if row_a != row_b && a.start == b.start && b.end < a.end => (*a, *b),
        _ => return Err(MoveError::RowsDontShareStart(row_a, row_b)),
    };
    let tail = RowInterval::new(b.end + 1, a.end);
    let build = |slot_a: RowInterval, slot_b: Option<RowInterval>, sign: i64| {
        let mut new_rows = rows.to_vec();
        new_rows[row_a] = slot_a;
        match slot_b {
            Some(r) => new_rows[row_b] = r,
            None => {
                new_rows.remove(row_b);
            }
        }
        Term::from_parts(
            Pattern::from_parts(new_rows, term.width()),
            term.exponents().to_vec(),
            term.coefficient() * &Rat::from_int(sign),
        )
    };
    let outputs = vec![build(b, Some(tail), 1), build(a, Some(tail), -1), build(a, None, -1)];
    check_weight(term, &outputs)?;
    Ok(outputs)
}

/// Inserts a zero-exponent column immediately before 1-based `position`,
/// covered by the row `extended` (which must start at `position`) and by
/// every row that starts before `position` and reaches it. Returns the new
/// term and the 0-based index of the inserted column.
pub fn insert_aux_column(term: &Term, position: usize, extended: usize) -> Result<(Term, usize), MoveError> {
    let rows = term.rows();
    if rows.get(extended).map(|r| r.start) != Some(position) {
        return Err(MoveError::IntervalBroken);
    }
    let new_rows: Vec<RowInterval> = rows
        .iter()
        .enumerate()
        .map(|(m, r)| {
            if m == extended {
                RowInterval::new(r.start, r.end + 1)
            } else if r.start >= position {
                RowInterval::new(r.start + 1, r.end + 1)
            } else if r.end >= position {
                RowInterval::new(r.start, r.end + 1)
            } else {
                *r
            }
        })
        .collect();
    let mut exps = term.exponents().to_vec();
    exps.insert(position - 1, 0);
    let out = Term::from_parts(
        Pattern::from_parts(new_rows, term.width() + 1),
        exps,
        term.coefficient().clone(),
    );
    if out.weight() != term.weight() {
        return Err(MoveError::WeightViolation {
            before: term.weight(),
            after: out.weight(),
        });
    }
    Ok((out, position - 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mzv::MzvWord;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn term(rows: &[(usize, usize)], k: &[u32]) -> Term {
        Term::from_rows(rows, k).unwrap()
    }

    fn point(rng: &mut ChaCha8Rng, d: usize) -> Vec<Rat> {
        (0..d)
            .map(|_| Rat::new(rng.gen_range(1..50), rng.gen_range(1..13)))
            .collect()
    }

    fn same_kernel(input: &Term, outputs: &[Term], seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..10 {
            let z = point(&mut rng, input.depth());
            let lhs = input.kernel_at(&z).unwrap();
            let rhs: Rat = outputs.iter().map(|o| o.kernel_at(&z).unwrap()).sum();
            assert_eq!(lhs, rhs, "kernel identity failed for {input}");
        }
    }

    #[test]
    fn tornheim_partial_fraction() {
        let t = term(&[(1, 2), (2, 3)], &[1, 1, 1]);
        let (circuit, pivot) = default_circuit(&t).unwrap();
        assert_eq!(circuit.members, vec![0, 1, 2]);
        assert_eq!(pivot, 2);
        let out = pf_step(&t, &circuit, pivot).unwrap();
        assert_eq!(out.len(), 2);
        // 1/(L1 L2 L3) = -1/(L2 L3²) + 1/(L1 L3²)
        assert_eq!(out[0].rows(), &[RowInterval::new(1, 1), RowInterval::new(1, 2)]);
        assert_eq!(out[0].exponents(), &[1, 2]);
        assert_eq!(out[0].coefficient(), &Rat::from_int(-1));
        assert_eq!(out[0].canonical().to_mzv().unwrap().0, MzvWord::new(vec![1, 2]));
        assert_eq!(out[1].rows(), &[RowInterval::new(1, 1), RowInterval::new(2, 2)]);
        assert_eq!(out[1].exponents(), &[1, 2]);
        assert_eq!(out[1].coefficient(), &Rat::one());
        same_kernel(&t, &out, 1);
    }

    #[test]
    fn duplicate_column_pivot_with_zero_exponent() {
        let base = term(&[(1, 2), (2, 2)], &[2, 1]);
        let (with_aux, aux) = insert_aux_column(&base, 1, 0).unwrap();
        // aux column duplicates column 1 of the base (covered by row 0 only)
        let circuit = find_circuit(&with_aux.columns(), Some(aux)).unwrap();
        assert_eq!(circuit.members, vec![0, 1]);
        let out = pf_step(&with_aux, &circuit, aux).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].exponents(), &[1, 1, 1]);
        same_kernel(&with_aux, &out, 2);
    }

    #[test]
    fn invalid_pivot() {
        let t = term(&[(1, 2), (2, 3)], &[1, 1, 1]);
        let circuit = CircuitDependency {
            members: vec![0, 1, 2],
            coefficients: vec![Rat::one(), Rat::zero(), Rat::one()],
        };
        assert_eq!(pf_step(&t, &circuit, 1), Err(MoveError::InvalidPivot(1)));
        assert!(matches!(pf_step(&t, &circuit, 5), Err(MoveError::InvalidPivot(5))));
    }

    #[test]
    fn underflow_is_reported() {
        let base = term(&[(1, 2), (2, 2)], &[2, 1]);
        let (with_aux, aux) = insert_aux_column(&base, 1, 0).unwrap();
        let circuit = find_circuit(&with_aux.columns(), Some(aux)).unwrap();
        // pivoting away from the aux column lowers its zero exponent
        assert_eq!(pf_step(&with_aux, &circuit, 1), Err(MoveError::ExponentUnderflow(0)));
    }

    #[test]
    fn square_reduce_examples() {
        let t = term(&[(1, 2), (2, 3)], &[1, 1, 1]);
        let e = square_reduce(&t).unwrap();
        assert_eq!(e.len(), 2);

        let t = term(&[(1, 2), (2, 2)], &[1, 2]);
        let e = square_reduce(&t).unwrap();
        assert_eq!(e, Expression::from_term(t));

        let t = term(&[(1, 3), (2, 2)], &[1, 1, 1]);
        let e = square_reduce(&t).unwrap();
        for o in e.terms() {
            assert_eq!(o.weight(), 3);
            assert!(find_circuit(&o.columns(), None).is_none());
        }
    }

    /// Exact sum of the kernel over the box `[1, b]^d`; symmetric in the
    /// rows, so insensitive to the row reordering canonical forms apply.
    fn box_sum(t: &Term, b: i64) -> Rat {
        let d = t.depth();
        let mut n = vec![1i64; d];
        let mut total = Rat::zero();
        loop {
            let z: Vec<Rat> = n.iter().map(|&x| Rat::from_int(x)).collect();
            total += t.kernel_at(&z).unwrap();
            let mut i = 0;
            while i < d && n[i] == b {
                n[i] = 1;
                i += 1;
            }
            if i == d {
                return total;
            }
            n[i] += 1;
        }
    }

    #[test]
    fn square_reduce_box_sums() {
        let cases = [
            term(&[(1, 3), (2, 4)], &[1, 2, 1, 1]),
            term(&[(1, 2), (2, 3), (3, 4)], &[1, 1, 1, 2]),
            term(&[(1, 4), (2, 2), (3, 4)], &[1, 1, 2, 1]),
            term(&[(1, 3), (2, 2)], &[1, 1, 1]),
        ];
        for t in cases {
            let e = square_reduce(&t).unwrap();
            let rhs: Rat = e.terms().map(|o| box_sum(o, 4)).sum();
            assert_eq!(box_sum(&t, 4), rhs, "{t}");
        }
    }

    #[test]
    fn forward_split_zeta2_squared() {
        let t = term(&[(1, 1), (2, 2)], &[2, 2]);
        let out = forward_hp(&t, 0, 1).unwrap();
        assert_eq!(out[0].rows(), &[RowInterval::new(1, 2), RowInterval::new(1, 1)]);
        assert_eq!(out[1].rows(), &[RowInterval::new(1, 2), RowInterval::new(2, 2)]);
        assert_eq!(out[2].rows(), &[RowInterval::new(1, 2)]);
        let words: Vec<MzvWord> = out.iter().map(|o| o.to_mzv().unwrap().0).collect();
        assert_eq!(
            words,
            vec![
                MzvWord::new(vec![2, 2]),
                MzvWord::new(vec![2, 2]),
                MzvWord::new(vec![4])
            ]
        );
        for o in &out {
            assert!(o.pattern().is_basic());
        }
    }

    #[test]
    fn forward_split_needs_adjacent_rows() {
        let t = term(&[(1, 2), (2, 3)], &[1, 1, 1]);
        assert_eq!(forward_hp(&t, 0, 1), Err(MoveError::RowsNotAdjacent(0, 1)));
        let t = term(&[(1, 1), (2, 2)], &[1, 2]);
        assert_eq!(forward_hp(&t, 1, 0), Err(MoveError::RowsNotAdjacent(1, 0)));
        assert_eq!(forward_hp(&t, 0, 1).unwrap().len(), 3);
    }

    #[test]
    fn inverse_split_example() {
        let t = term(&[(1, 2), (1, 1)], &[1, 2]);
        let out = inverse_hp(&t, 0, 1).unwrap();
        assert_eq!(out[0].rows(), &[RowInterval::new(1, 1), RowInterval::new(2, 2)]);
        assert_eq!(out[0].coefficient(), &Rat::one());
        assert_eq!(out[1].rows(), &[RowInterval::new(1, 2), RowInterval::new(2, 2)]);
        assert_eq!(out[1].coefficient(), &Rat::from_int(-1));
        assert_eq!(out[2].rows(), &[RowInterval::new(1, 2)]);
        assert_eq!(out[2].coefficient(), &Rat::from_int(-1));
        let start_sum = |t: &Term| t.rows().iter().map(|r| r.start).sum::<usize>();
        assert!(start_sum(&out[0]) > start_sum(&t));
        assert!(start_sum(&out[1]) > start_sum(&t));
        assert_eq!(out[2].depth(), t.depth() - 1);
    }

    #[test]
    fn inverse_split_needs_shared_start() {
        let t = term(&[(1, 1), (2, 2)], &[1, 2]);
        assert_eq!(inverse_hp(&t, 0, 1), Err(MoveError::RowsDontShareStart(0, 1)));
        let t = term(&[(1, 2), (1, 1)], &[1, 2]);
        assert_eq!(inverse_hp(&t, 1, 0), Err(MoveError::RowsDontShareStart(1, 0)));
    }

    #[test]
    fn aux_column_zeta2_squared_branch() {
        let t = term(&[(1, 2), (1, 1)], &[2, 2]);
        let (a, aux) = insert_aux_column(&t, 1, 0).unwrap();
        assert_eq!(aux, 0);
        assert_eq!(a.exponents(), &[0, 2, 2]);
        assert_eq!(a.rows(), &[RowInterval::new(1, 3), RowInterval::new(2, 2)]);
        assert_eq!(a.weight(), t.weight());
        assert_eq!(a.column(1).mask(), 0b01);
    }

    #[test]
    fn aux_column_keeps_intervals() {
        // rows e13 e23 e22-type layout: extended row 1 starts at 2
        let t = term(&[(1, 3), (2, 3), (2, 2)], &[1, 1, 1]);
        let (a, aux) = insert_aux_column(&t, 2, 1).unwrap();
        assert_eq!(aux, 1);
        assert_eq!(
            a.rows(),
            &[RowInterval::new(1, 4), RowInterval::new(2, 4), RowInterval::new(3, 3)]
        );
        assert!(insert_aux_column(&t, 1, 1).is_err());
    }

    impl Term {
        fn column(&self, position: usize) -> crate::linalg::ColumnVector {
            self.pattern().column(position)
        }
    }
}
