//! The reduction driver.
//!
//! A worklist of canonical terms is processed deepest-first. Each popped term
//! is either emitted (its rows form a chain, so it is an MZV), or rewritten
//! by one move:
//!
//! 1. dependent columns: one partial-fraction step on the fundamental circuit
//!    of the first dependent column;
//! 2. two rows sharing a start column: one inverse harmonic split;
//! 3. otherwise the term is upper triangular with rows starting at `1..=d`,
//!    and [`procedure2_step`] removes its first mismatch against the chain
//!    pattern `T_d`.
//!
//! Outputs are merged back into the worklist with eager cancellation.
//!
//! This procedure drops columns whose exponent reaches zero. For a
//! divergent intermediate term that can change which finite part survives,
//! and the final combination is then wrong by a product of lower-weight
//! values. Each partial-fraction step is therefore checked: a dropped column
//! of a divergent output must be covered by a column that remains. When
//! that holds throughout, the result is certified; otherwise [`reduce`]
//! falls back to [`crate::region::reduce_tracked`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{MoveError, ReduceError};
use crate::expression::Expression;
use crate::linalg::find_circuit;
use crate::moves::{default_circuit, forward_hp, insert_aux_column, inverse_hp, pf_step};
use crate::mzv::MzvCombination;
use crate::numeric::eval_combination;
use crate::rat::Rat;
use crate::region::reduce_tracked;
use crate::term::Term;
use crate::trace::{Move, ReductionTrace, TraceRecord};
use crate::verify::{check_record, DEFAULT_BOX, DEFAULT_POINTS};

#[derive(Clone, Debug)]
pub struct ReduceConfig {
    /// Abort after this many worklist pops.
    pub max_terms: usize,
    /// Check every move as it is recorded.
    pub verify: bool,
    pub seed: u64,
    pub points: usize,
    pub lattice_box: i64,
    /// Keep the full trace (needed for replay and `--trace`).
    pub record_trace: bool,
    /// Retry uncertified results with the truncation-tracking search.
    pub fallback: bool,
}

impl Default for ReduceConfig {
    fn default() -> Self {
        ReduceConfig {
            max_terms: 100_000,
            verify: false,
            seed: 0,
            points: DEFAULT_POINTS,
            lattice_box: DEFAULT_BOX,
            record_trace: true,
            fallback: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ReduceStats {
    pub pf_steps: usize,
    pub forward_splits: usize,
    pub inverse_splits: usize,
    pub aux_columns: usize,
    pub permutations: usize,
    pub verified: usize,
    pub terms_processed: usize,
    pub max_live_terms: usize,
}

impl ReduceStats {
    pub fn moves(&self) -> usize {
        self.pf_steps + self.forward_splits + self.inverse_splits + self.aux_columns + self.permutations
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// The deterministic procedure of this module.
    Procedure,
    /// The searched derivation of [`crate::region`].
    Tracked,
}

#[derive(Clone, Debug)]
pub struct Reduction {
    pub combination: MzvCombination,
    pub trace: ReductionTrace,
    pub stats: ReduceStats,
    pub weight: Option<u32>,
    pub input_converges: bool,
    /// The input converges, intermediate terms did not, and their
    /// divergent words cancelled without regularization.
    pub divergent_cancelled: bool,
    /// The input converges and every step kept the truncation of divergent
    /// terms, so the combination has the input's value.
    pub certified: bool,
    pub method: Method,
    /// The combination before non-admissible words were regularized away,
    /// if there were any.
    pub unregularized: Option<MzvCombination>,
}

/// Position of the first entry (column-major) where a triangular term
/// differs from `T_d`: `(column, row)`, both 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Mismatch {
    pub column: usize,
    pub row: usize,
}

/// For a term whose rows start at `1..=d` (any order), the row index
/// holding each start, 1-based starts mapped to 0-based rows.
fn rows_by_start(term: &Term) -> Option<Vec<usize>> {
    let d = term.depth();
    if term.width() != d {
        return None;
    }
    let mut by_start = vec![usize::MAX; d];
    for (m, r) in term.rows().iter().enumerate() {
        let slot = by_start.get_mut(r.start - 1)?;
        if *slot != usize::MAX {
            return None;
        }
        *slot = m;
    }
    Some(by_start)
}

/// First mismatch of an upper-triangular term against `T_d`, or `None`
/// when it already is `T_d` (or is not triangular).
pub fn first_mismatch(term: &Term) -> Option<Mismatch> {
    let by_start = rows_by_start(term)?;
    let rows = term.rows();
    let d = term.depth();
    for j in 1..=d {
        for i in 1..j {
            if rows[by_start[i - 1]].end < j {
                return Some(Mismatch { column: j, row: i });
            }
        }
    }
    None
}

/// Two rows sharing the smallest repeated start: `(longer, shorter)`,
/// taking the two shortest rows at that start.
fn shared_start_pair(term: &Term) -> Option<(usize, usize)> {
    let rows = term.rows();
    let mut starts: Vec<usize> = rows.iter().map(|r| r.start).collect();
    starts.sort_unstable();
    let c = starts.windows(2).find(|w| w[0] == w[1])?[0];
    let mut at: Vec<usize> = (0..rows.len()).filter(|&m| rows[m].start == c).collect();
    at.sort_by_key(|&m| rows[m].end);
    Some((at[1], at[0]))
}

enum Step {
    Emit,
    Outputs(Vec<Term>),
}

/// Does every column of `input` missing from the divergent `output` lie
/// inside some column that remains?
fn keeps_truncation(input: &Term, output: &Term) -> bool {
    if output.width() >= input.width() || output.canonical().converges() {
        return true;
    }
    let kept: Vec<u64> = output.columns().iter().map(|c| c.mask()).collect();
    input.columns().iter().all(|c| kept.iter().any(|&k| c.mask() & !k == 0))
}

pub(crate) struct Reducer<'a> {
    cfg: &'a ReduceConfig,
    rng: ChaCha8Rng,
    trace: ReductionTrace,
    stats: ReduceStats,
    saw_divergent: bool,
    truncation_kept: bool,
}

impl<'a> Reducer<'a> {
    pub(crate) fn new(cfg: &'a ReduceConfig) -> Self {
        Reducer {
            cfg,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            trace: ReductionTrace::default(),
            stats: ReduceStats::default(),
            saw_divergent: false,
            truncation_kept: true,
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn finish(
        self,
        combination: MzvCombination,
        input: &Expression,
        processed: usize,
        max_live: usize,
        method: Method,
        certified: bool,
        unregularized: Option<MzvCombination>,
    ) -> Reduction {
        let input_converges = input.converges();
        let mut stats = self.stats;
        stats.terms_processed = processed;
        stats.max_live_terms = max_live;
        let mut trace = self.trace;
        trace.terms_processed = processed;
        trace.max_live_terms = max_live;
        Reduction {
            combination,
            trace,
            stats,
            weight: input.weight(),
            input_converges,
            divergent_cancelled: input_converges && self.saw_divergent && unregularized.is_none(),
            certified,
            method,
            unregularized,
        }
    }

    pub(crate) fn record(&mut self, mv: Move, input: &Term, outputs: &[Term]) -> Result<(), ReduceError> {
        match mv {
            Move::PfStep { .. } => self.stats.pf_steps += 1,
            Move::ForwardHp { .. } => self.stats.forward_splits += 1,
            Move::InverseHp { .. } => self.stats.inverse_splits += 1,
            Move::InsertAux { .. } => self.stats.aux_columns += 1,
            Move::PermuteColumns { .. } => self.stats.permutations += 1,
        }
        for o in outputs {
            if o.weight() != input.weight() {
                return Err(MoveError::WeightViolation {
                    before: input.weight(),
                    after: o.weight(),
                }
                .into());
            }
            if !o.canonical().converges() {
                self.saw_divergent = true;
            }
            if matches!(mv, Move::PfStep { .. }) && !keeps_truncation(input, o) {
                self.truncation_kept = false;
            }
        }
        if !self.cfg.verify && !self.cfg.record_trace {
            return Ok(());
        }
        let rec = TraceRecord::new(mv, input.clone(), outputs.to_vec());
        if self.cfg.verify {
            check_record(&rec, &mut self.rng, self.cfg.points, self.cfg.lattice_box)?;
            self.stats.verified += 1;
        }
        if self.cfg.record_trace {
            self.trace.records.push(rec);
        }
        Ok(())
    }

    fn pf(&mut self, t: &Term) -> Result<Option<Vec<Term>>, ReduceError> {
        let Some((circuit, pivot)) = default_circuit(t) else {
            return Ok(None);
        };
        let outputs = pf_step(t, &circuit, pivot)?;
        self.record(Move::PfStep { circuit, pivot }, t, &outputs)?;
        Ok(Some(outputs))
    }

    fn inverse(&mut self, t: &Term) -> Result<Option<Vec<Term>>, ReduceError> {
        let Some((a, b)) = shared_start_pair(t) else {
            return Ok(None);
        };
        let outputs = inverse_hp(t, a, b)?;
        self.record(Move::InverseHp { row_a: a, row_b: b }, t, &outputs)?;
        Ok(Some(outputs))
    }

    /// One driver step on a canonical term.
    fn step(&mut self, t: &Term) -> Result<Step, ReduceError> {
        if t.is_chain() {
            return Ok(Step::Emit);
        }
        if let Some(out) = self.pf(t)? {
            return Ok(Step::Outputs(out));
        }
        if let Some(out) = self.inverse(t)? {
            return Ok(Step::Outputs(out));
        }
        self.procedure2_step(t).map(Step::Outputs)
    }

    /// Removes the first mismatch `(i, j)` of a triangular term: rows
    /// `e_{i,j-1}` and `e_{j,r}` are split; the `n < m` and `n = m` pieces
    /// leave directly. The `n > m` piece has two rows starting at `i`; a
    /// zero-exponent column is inserted in front of them (extending the
    /// longer one) and partial fractions pivoted on that column are applied
    /// until some other circuit column disappears. The results are brought
    /// back to triangular form locally, and every depth-`d` survivor must
    /// have its first mismatch strictly after `(i, j)`.
    fn procedure2_step(&mut self, t: &Term) -> Result<Vec<Term>, ReduceError> {
        let mismatch = first_mismatch(t)
            .ok_or_else(|| ReduceError::ProgressViolation(format!("{t} is neither a chain nor triangular")))?;
        let by_start = rows_by_start(t).expect("triangular");
        let (i, j) = (mismatch.row, mismatch.column);
        let (ri, rj) = (by_start[i - 1], by_start[j - 1]);
        let split = forward_hp(t, ri, rj)?;
        self.record(Move::ForwardHp { row_a: ri, row_b: rj }, t, &split)?;
        let mut split = split.into_iter();
        let first = split.next().expect("three outputs");
        let mut outputs: Vec<Term> = split.collect();

        let d = t.depth();
        for f in self.resolve_first_branch(first, i, ri)? {
            if f.depth() == d && !f.is_chain() {
                if let Some(m) = first_mismatch(&f) {
                    if m <= mismatch {
                        return Err(ReduceError::ProgressViolation(format!(
                            "{f} has mismatch ({}, {}) not after ({i}, {j}) from {t}",
                            m.row, m.column
                        )));
                    }
                }
            }
            outputs.push(f);
        }
        Ok(outputs)
    }

    fn resolve_first_branch(&mut self, first: Term, i: usize, extended: usize) -> Result<Vec<Term>, ReduceError> {
        if first.canonical().is_chain() {
            return Ok(vec![first]);
        }
        let (with_aux, aux) = insert_aux_column(&first, i, extended)?;
        self.record(
            Move::InsertAux { position: i, extended },
            &first,
            std::slice::from_ref(&with_aux),
        )?;
        let circuit = find_circuit(&with_aux.columns(), Some(aux))
            .ok_or_else(|| ReduceError::ProgressViolation(format!("auxiliary column of {with_aux} is a coloop")))?;

        // each pf step lowers the total exponent on the non-auxiliary
        // circuit columns by one, so this stops
        let mut pending = vec![with_aux];
        let mut finished = Vec::new();
        while let Some(x) = pending.pop() {
            let outs = pf_step(&x, &circuit, aux)?;
            self.record(
                Move::PfStep {
                    circuit: circuit.clone(),
                    pivot: aux,
                },
                &x,
                &outs,
            )?;
            for o in outs {
                if o.width() < x.width() {
                    finished.push(o);
                } else {
                    pending.push(o);
                }
            }
        }

        // bring each piece back to triangular form
        let mut local: Expression = finished.into_iter().collect();
        let mut done = Vec::new();
        let mut steps = 0usize;
        while let Some(x) = local.pop_last() {
            steps += 1;
            if steps > self.cfg.max_terms {
                return Err(ReduceError::TermBudgetExceeded(self.cfg.max_terms));
            }
            if x.is_chain() {
                done.push(x);
            } else if let Some(out) = self.pf(&x)? {
                out.into_iter().for_each(|o| local.add_term(o));
            } else if let Some(out) = self.inverse(&x)? {
                out.into_iter().for_each(|o| local.add_term(o));
            } else {
                done.push(x);
            }
        }
        Ok(done)
    }
}

/// Reduces a single term. See [`reduce`].
pub fn reduce_term(term: &Term, cfg: &ReduceConfig) -> Result<Reduction, ReduceError> {
    reduce(&Expression::from_term(term.clone()), cfg)
}

/// Rewrites `input` into a ℚ-combination of MZVs of the same weight.
///
/// The procedure runs first. If its result is not certified (or it fails)
/// and `cfg.fallback` is set, the truncation-tracking search is tried. When
/// both succeed and their combinations agree numerically (the same value
/// written with different words), the procedure's result is kept and marked
/// certified; otherwise the tracked one wins. If the search finds no
/// derivation, the procedure's outcome is returned as is.
pub fn reduce(input: &Expression, cfg: &ReduceConfig) -> Result<Reduction, ReduceError> {
    let first = reduce_procedure(input, cfg);
    let retry = match &first {
        Ok(r) => !r.certified && r.input_converges,
        Err(ReduceError::MixedWeights | ReduceError::CheckFailed(_)) => false,
        Err(_) => input.converges(),
    };
    if !(retry && cfg.fallback) {
        return first;
    }
    match (first, reduce_tracked(input, cfg)) {
        (Ok(mut f), Ok(t)) if same_value(&f.combination, &t.combination) => {
            f.certified = true;
            Ok(f)
        }
        (_, Ok(t)) => Ok(t),
        (first, Err(ReduceError::NoDerivation(_))) => first,
        (_, Err(e)) => Err(e),
    }
}

const AGREEMENT: f64 = 1e-9;

fn same_value(a: &MzvCombination, b: &MzvCombination) -> bool {
    let mut diff = a.clone();
    diff.add_combination(b, &-Rat::one());
    if diff.is_empty() {
        return true;
    }
    match eval_combination(&diff, None) {
        Ok(r) => r.value.abs() <= AGREEMENT + 4.0 * r.error,
        Err(_) => false,
    }
}

/// The deterministic procedure alone, without fallback.
///
/// Fails with [`ReduceError::UncancelledDivergence`] if the input converges
/// and non-admissible words remain, and with
/// [`ReduceError::TermBudgetExceeded`] after `cfg.max_terms` worklist pops.
pub fn reduce_procedure(input: &Expression, cfg: &ReduceConfig) -> Result<Reduction, ReduceError> {
    if !input.is_empty() && input.weight().is_none() {
        return Err(ReduceError::MixedWeights);
    }
    let mut reducer = Reducer::new(cfg);
    let mut work = input.clone();
    let mut combination = MzvCombination::new();
    let mut processed = 0usize;
    let mut max_live = work.len();
    while let Some(t) = work.pop_last() {
        processed += 1;
        if processed > cfg.max_terms {
            return Err(ReduceError::TermBudgetExceeded(cfg.max_terms));
        }
        match reducer.step(&t)? {
            Step::Emit => {
                let (word, coeff) = t.to_mzv().expect("emitted terms are chains");
                combination.add(word, coeff);
            }
            Step::Outputs(outs) => {
                for o in outs {
                    work.add_term(o);
                }
            }
        }
        max_live = max_live.max(work.len());
    }

    let weight = input.weight();
    if let Some(w) = weight {
        if let Some(&bad) = combination.weights().iter().find(|&&x| x != w) {
            return Err(MoveError::WeightViolation { before: w, after: bad }.into());
        }
    }
    let input_converges = input.converges();
    if input_converges {
        let residue = combination.non_admissible();
        if !residue.is_empty() {
            return Err(ReduceError::UncancelledDivergence(residue));
        }
    }
    let certified = input_converges && reducer.truncation_kept;
    Ok(reducer.finish(
        combination,
        input,
        processed,
        max_live,
        Method::Procedure,
        certified,
        None,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mzv::{stuffle_words, MzvWord};
    use crate::rat::Rat;
    use crate::trace::replay;

    fn term(rows: &[(usize, usize)], k: &[u32]) -> Term {
        Term::from_rows(rows, k).unwrap()
    }

    fn w(parts: &[u32]) -> MzvWord {
        MzvWord::new(parts.to_vec())
    }

    fn verified() -> ReduceConfig {
        ReduceConfig {
            verify: true,
            ..ReduceConfig::default()
        }
    }

    #[test]
    fn chain_is_emitted_unchanged() {
        let t = Term::from_mzv(&w(&[3, 1, 2]));
        let r = reduce_term(&t, &verified()).unwrap();
        assert_eq!(r.combination, MzvCombination::single(w(&[3, 1, 2]), Rat::one()));
        assert_eq!(r.stats.moves(), 0);
    }

    #[test]
    fn tornheim_111() {
        let t = term(&[(1, 2), (2, 3)], &[1, 1, 1]);
        let r = reduce_term(&t, &verified()).unwrap();
        let mut expected = MzvCombination::new();
        expected.add(w(&[2, 1]), Rat::one());
        expected.add(w(&[3]), Rat::one());
        assert_eq!(r.combination, expected);
    }

    #[test]
    fn products_match_stuffle() {
        for (a, b) in [(2, 2), (2, 3), (3, 2), (2, 4), (3, 3)] {
            let t = term(&[(1, 1), (2, 2)], &[a, b]);
            let r = reduce_term(&t, &verified()).unwrap();
            assert_eq!(r.combination, stuffle_words(&w(&[a]), &w(&[b])), "ζ({a})ζ({b})");
        }
    }

    #[test]
    fn triple_product_matches_stuffle() {
        let t = term(&[(1, 1), (2, 2), (3, 3)], &[2, 2, 2]);
        let r = reduce_term(&t, &verified()).unwrap();
        let first = stuffle_words(&w(&[2]), &w(&[2]));
        let mut expected = MzvCombination::new();
        for (word, c) in first.iter() {
            expected.add_combination(&stuffle_words(word, &w(&[2])), c);
        }
        assert_eq!(r.combination, expected);
    }

    #[test]
    fn replay_reproduces_result() {
        let t = term(&[(1, 2), (2, 3), (3, 4)], &[1, 2, 1, 2]);
        let r = reduce_term(&t, &verified()).unwrap();
        let replayed = replay(&Expression::from_term(t), &r.trace.records).unwrap();
        // the trace ends before any regularization
        assert_eq!(&replayed, r.unregularized.as_ref().unwrap_or(&r.combination));
    }

    #[test]
    fn budget_is_enforced() {
        let t = term(&[(1, 1), (2, 2), (3, 3)], &[2, 2, 2]);
        let cfg = ReduceConfig {
            max_terms: 3,
            ..ReduceConfig::default()
        };
        assert!(matches!(reduce_term(&t, &cfg), Err(ReduceError::TermBudgetExceeded(3))));
    }

    #[test]
    fn mixed_weights_rejected() {
        let e: Expression = [term(&[(1, 1)], &[2]), term(&[(1, 1)], &[3])].into_iter().collect();
        assert!(matches!(
            reduce(&e, &ReduceConfig::default()),
            Err(ReduceError::MixedWeights)
        ));
    }

    #[test]
    fn mismatch_order() {
        let t = term(&[(1, 1), (2, 2), (3, 3)], &[2, 2, 2]);
        assert_eq!(first_mismatch(&t), Some(Mismatch { column: 2, row: 1 }));
        let t = term(&[(1, 2), (2, 2), (3, 3)], &[2, 2, 2]);
        assert_eq!(first_mismatch(&t), Some(Mismatch { column: 3, row: 1 }));
        let t = term(&[(1, 3), (2, 2), (3, 3)], &[2, 2, 2]);
        assert_eq!(first_mismatch(&t), Some(Mismatch { column: 3, row: 2 }));
        assert_eq!(first_mismatch(&Term::from_mzv(&w(&[2, 1, 1]))), None);
    }
}
