//! Reduction that keeps track of truncations.
//!
//! A divergent intermediate term has no value of its own, only a value
//! relative to a truncation, and dropping a column from a divergent term can
//! silently change that truncation. Here every term is read as the sum over
//! `max_c L_c(n) ≤ N`, with `c` ranging over *all* columns, including
//! columns whose exponent is zero. Under that reading:
//!
//! - harmonic splits preserve every column value, so they are exact;
//! - partial fractions keep the summation variables, so they are exact as
//!   long as a column whose exponent reaches zero is kept as a constraint;
//! - a zero-exponent column covering a subset of another column's rows is
//!   implied by it and may go;
//! - reordering the columns changes nothing as long as every row stays an
//!   interval;
//! - a chain has a column covering every row, so its truncated sum is the
//!   usual `ζ_N(w)`.
//!
//! So a derivation that ends in chains gives `Σ c_w ζ_N(w)` exactly, for
//! every `N`. Convergent terms may drop all their constraints, since any
//! exhausting truncation has the same limit. Non-admissible words left at
//! the end are removed with [`stuffle_regularize`].
//!
//! The moves that keep constraints cannot always reach chains, so the
//! derivation is searched for: an AND-OR search over the moves applicable to
//! each term, with successful choices memoized per term shape. A first pass
//! accepts only convergent chains; the second, run if the first fails, also
//! accepts divergent ones and relies on regularization. A worklist
//! then replays the chosen moves with their actual coefficients, recording a
//! trace.

use std::collections::{BTreeMap, HashMap};

use crate::engine::{Method, ReduceConfig, Reducer, Reduction};
use crate::error::ReduceError;
use crate::expression::Expression;
use crate::linalg::{find_circuit, CircuitDependency};
use crate::moves::{forward_hp, insert_aux_column, inverse_hp};
use crate::mzv::{stuffle_regularize, MzvCombination};
use crate::pattern::RowInterval;
use crate::rat::Rat;
use crate::term::Term;
use crate::trace::Move;

fn mask(t: &Term, position: usize) -> u64 {
    t.pattern().column(position).mask()
}

fn every_row_weighted(t: &Term) -> bool {
    t.rows().iter().all(|r| (r.start..=r.end).any(|c| t.exponent(c) > 0))
}

/// Partial fractions on `circuit` pivoted at `pivot`, keeping columns whose
/// exponent drops to zero.
fn pf_keep(t: &Term, circuit: &CircuitDependency, pivot: usize) -> Vec<Term> {
    let alpha = circuit.coefficient_of(pivot).expect("pivot in circuit").clone();
    let mut out = Vec::with_capacity(circuit.members.len() - 1);
    for (&m, a) in circuit.members.iter().zip(&circuit.coefficients) {
        if m == pivot {
            continue;
        }
        let mut e = t.exponents().to_vec();
        e[m] -= 1;
        e[pivot] += 1;
        let c = t.coefficient() * &(-(a / &alpha));
        out.push(Term::from_parts(t.pattern().clone(), e, c));
    }
    out
}

/// Representative of a term up to moves that change neither kernel nor
/// truncation: convergent terms lose all constraints; otherwise repeated
/// columns are merged, implied constraints dropped and rows sorted.
pub fn normalize(t: &Term) -> Term {
    if every_row_weighted(t) && t.canonical().converges() {
        return t.canonical();
    }
    let mut t = t.clone();
    let mut pos = 1;
    while pos <= t.width() {
        let m = mask(&t, pos);
        let dup = (1..pos).find(|&c| mask(&t, c) == m);
        let implied = t.exponent(pos) == 0 && (1..=t.width()).any(|c| c != pos && m & !mask(&t, c) == 0);
        if dup.is_some() || implied {
            let mut e = t.exponents().to_vec();
            if let Some(f) = dup {
                e[f - 1] += e[pos - 1];
            }
            e.remove(pos - 1);
            let p = t.pattern().remove_column(pos).expect("another column covers the row");
            t = Term::from_parts(p, e, t.coefficient().clone());
        } else {
            pos += 1;
        }
    }
    let mut rows = t.rows().to_vec();
    rows.sort();
    Term::from_parts(
        t.pattern().with_rows(rows),
        t.exponents().to_vec(),
        t.coefficient().clone(),
    )
}

fn is_final(t: &Term) -> bool {
    every_row_weighted(t) && t.canonical().is_chain()
}

/// A circuit among the weighted columns, containing `extra` if given.
fn weighted_circuit(t: &Term, extra: Option<usize>) -> Option<CircuitDependency> {
    let pos: Vec<usize> = (0..t.width())
        .filter(|&p| t.exponents()[p] > 0 || Some(p) == extra)
        .collect();
    let cols: Vec<_> = pos.iter().map(|&p| t.pattern().column(p + 1)).collect();
    let target = extra.map(|x| pos.iter().position(|&p| p == x).expect("extra listed"));
    let c = find_circuit(&cols, target)?;
    Some(CircuitDependency {
        members: c.members.iter().map(|&m| pos[m]).collect(),
        coefficients: c.coefficients,
    })
}

#[derive(Clone, Debug)]
struct Rewrite {
    steps: Vec<(Move, Term, Vec<Term>)>,
    outputs: Vec<Term>,
}

impl Rewrite {
    fn single(mv: Move, input: &Term, outputs: Vec<Term>) -> Self {
        Rewrite {
            steps: vec![(mv, input.clone(), outputs.clone())],
            outputs,
        }
    }
}

/// Every rewrite the search may try on a normalized term, in a fixed order.
/// Dependent weighted columns are always resolved first.
fn options(t: &Term) -> Vec<Rewrite> {
    let mut res = Vec::new();
    if let Some(c) = weighted_circuit(t, None) {
        for &p in &c.members {
            let outs = pf_keep(t, &c, p);
            res.push(Rewrite::single(
                Move::PfStep {
                    circuit: c.clone(),
                    pivot: p,
                },
                t,
                outs,
            ));
        }
        return res;
    }
    let d = t.depth();
    for a in 0..d {
        for b in 0..d {
            if let Ok(o) = forward_hp(t, a, b) {
                res.push(Rewrite::single(Move::ForwardHp { row_a: a, row_b: b }, t, o));
            }
        }
    }
    for a in 0..d {
        for b in 0..d {
            if let Ok(o) = inverse_hp(t, a, b) {
                res.push(Rewrite::single(Move::InverseHp { row_a: a, row_b: b }, t, o));
            }
        }
    }
    for g in 0..t.width() {
        if t.exponents()[g] == 0 {
            if let Some(c) = weighted_circuit(t, Some(g)) {
                let outs = pf_keep(t, &c, g);
                res.push(Rewrite::single(Move::PfStep { circuit: c, pivot: g }, t, outs));
            }
        }
    }
    for e in 0..d {
        let position = t.rows()[e].start;
        let Ok((x, aux)) = insert_aux_column(t, position, e) else {
            continue;
        };
        let Some(c) = weighted_circuit(&x, Some(aux)) else {
            continue;
        };
        let outs = pf_keep(&x, &c, aux);
        res.push(Rewrite {
            steps: vec![
                (Move::InsertAux { position, extended: e }, t.clone(), vec![x.clone()]),
                (Move::PfStep { circuit: c, pivot: aux }, x, outs.clone()),
            ],
            outputs: outs,
        });
    }
    // reorderings last: they change no value, only which moves apply
    let own = shape(t).0;
    let mut seen = vec![own];
    for order in t.column_orders(MAX_ORDERS).into_iter().skip(1) {
        let p = t.permute_columns(&order).expect("order keeps rows contiguous");
        let key = shape(&p).0;
        if !seen.contains(&key) {
            seen.push(key);
            res.push(Rewrite::single(Move::PermuteColumns { order }, t, vec![p]));
        }
    }
    res
}

const MAX_ORDERS: usize = 48;

/// Exact identity of a normalized term. Column order matters here: two
/// orders of the same columns have equal kernels but different moves.
type ShapeKey = (Vec<RowInterval>, Vec<u32>);

fn exact_key(n: &Term) -> ShapeKey {
    (n.rows().to_vec(), n.exponents().to_vec())
}

fn shape(t: &Term) -> (ShapeKey, Term) {
    let n = normalize(&t.with_coefficient(Rat::one()));
    (exact_key(&n), n)
}

/// Depth-limited AND-OR search for derivations ending in chains.
///
/// `choice` maps a solved shape to its option and a rank; a shape is only
/// solved after all its outputs, so outputs always rank lower.
#[derive(Debug, Default)]
struct Search {
    choice: HashMap<ShapeKey, (usize, usize)>,
    failed: HashMap<ShapeKey, usize>,
    calls: usize,
    max_calls: usize,
    /// only admissible chains count as solved
    strict: bool,
}

impl Search {
    fn solve(&mut self, t: &Term, depth: usize, stack: &mut Vec<ShapeKey>) -> bool {
        self.calls += 1;
        let (key, n) = shape(t);
        if is_final(&n) {
            return !self.strict || n.canonical().converges();
        }
        if self.choice.contains_key(&key) {
            return true;
        }
        if depth == 0
            || self.calls > self.max_calls
            || stack.contains(&key)
            || self.failed.get(&key).is_some_and(|&d| d >= depth)
        {
            return false;
        }
        stack.push(key.clone());
        let mut found = None;
        for (i, rw) in options(&n).iter().enumerate() {
            if rw.outputs.iter().all(|o| self.solve(o, depth - 1, stack)) {
                found = Some(i);
                break;
            }
        }
        stack.pop();
        match found {
            Some(i) => {
                let rank = self.choice.len() + 1;
                self.choice.insert(key, (i, rank));
                true
            }
            None => {
                self.failed.insert(key, depth);
                false
            }
        }
    }
}

const MAX_DEPTH: usize = 10;

/// Reduces `input` by a derivation that is exact at every truncation.
///
/// Fails with [`ReduceError::NoDerivation`] when the search finds none
/// within depth ten and `20 · cfg.max_terms` search calls.
pub fn reduce_tracked(input: &Expression, cfg: &ReduceConfig) -> Result<Reduction, ReduceError> {
    if !input.is_empty() && input.weight().is_none() {
        return Err(ReduceError::MixedWeights);
    }
    // prefer derivations whose chains all converge; failing that, allow
    // divergent chains and regularize whatever does not cancel
    let mut search = Search::default();
    for strict in [true, false] {
        search = Search {
            max_calls: cfg.max_terms.saturating_mul(20),
            strict,
            ..Search::default()
        };
        let unsolved = input
            .terms()
            .find(|t| !(1..=MAX_DEPTH).any(|depth| search.solve(t, depth, &mut Vec::new())));
        match unsolved {
            None => break,
            Some(t) if !strict => return Err(ReduceError::NoDerivation(t.to_string())),
            Some(_) => {}
        }
    }

    let mut reducer = Reducer::new(cfg);
    // highest rank first, so each shape is expanded once
    let mut work: BTreeMap<(usize, ShapeKey), Term> = BTreeMap::new();
    let add = |work: &mut BTreeMap<(usize, ShapeKey), Term>, t: &Term| {
        let n = normalize(t);
        let shape_key = shape(&n).0;
        let rank = search.choice.get(&shape_key).map_or(0, |c| c.1);
        let key = (rank, shape_key);
        let sum = work.get(&key).map_or(Rat::from_int(0), |x| x.coefficient().clone()) + n.coefficient().clone();
        if sum.is_zero() {
            work.remove(&key);
        } else {
            work.insert(key, n.with_coefficient(sum));
        }
    };
    for t in input.terms() {
        add(&mut work, t);
    }
    let mut combination = MzvCombination::new();
    let mut processed = 0usize;
    let mut max_live = work.len();
    while let Some((_, t)) = work.pop_last() {
        processed += 1;
        if processed > cfg.max_terms {
            return Err(ReduceError::TermBudgetExceeded(cfg.max_terms));
        }
        if is_final(&t) {
            let (word, coeff) = t.canonical().to_mzv().expect("final terms are chains");
            combination.add(word, coeff);
            continue;
        }
        let (key, _) = shape(&t);
        let (i, _) = search.choice[&key];
        let rw = options(&t).swap_remove(i);
        for (mv, from, to) in &rw.steps {
            reducer.record(mv.clone(), from, to)?;
        }
        for o in &rw.outputs {
            add(&mut work, o);
        }
        max_live = max_live.max(work.len());
    }

    let input_converges = input.converges();
    let mut unregularized = None;
    if !combination.non_admissible().is_empty() {
        let poly = stuffle_regularize(&combination);
        unregularized = Some(std::mem::replace(
            &mut combination,
            poly.into_iter().next().unwrap_or_default(),
        ));
    }
    Ok(reducer.finish(
        combination,
        input,
        processed,
        max_live,
        Method::Tracked,
        input_converges,
        unregularized,
    ))
}
