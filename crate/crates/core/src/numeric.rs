//! Floating-point evaluation of big zeta series and MZVs.
//!
//! Both evaluators record partial sums at the cutoffs `N/16, …, N/2, N`.
//! The reported value fits `V + (a + b·ln M + c·ln²M)/M` through the last
//! four; the error estimate is its distance to the five-point fit with an
//! extra `ln³M/M` term, plus a rounding floor.

use std::collections::BTreeMap;

use crate::error::EvalError;
use crate::expression::Expression;
use crate::mzv::{MzvCombination, MzvWord};
use crate::term::Term;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalReport {
    pub value: f64,
    pub cutoff: u64,
    pub extrapolated: bool,
    pub error: f64,
    /// The plain partial sum at `cutoff`.
    pub partial: f64,
}

impl EvalReport {
    fn exact(value: f64) -> Self {
        EvalReport {
            value,
            cutoff: 0,
            extrapolated: false,
            error: 0.0,
            partial: value,
        }
    }
}

pub fn default_cutoff(depth: usize) -> u64 {
    match depth {
        0 | 1 => 1_000_000,
        2 => 3000,
        3 => 300,
        4 => 64,
        _ => 24,
    }
}

pub const DEFAULT_MZV_CUTOFF: u64 = 100_000;

/// Neumaier-compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
struct Compensated {
    sum: f64,
    c: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.c
    }
}

/// Solves the square system `Σ_j f_j(M_i) c_j = S_i` for `c_0`.
fn fit_constant(points: &[(f64, f64)], basis: &[fn(f64) -> f64]) -> f64 {
    let n = points.len();
    debug_assert_eq!(n, basis.len());
    let mut a: Vec<Vec<f64>> = points
        .iter()
        .map(|&(m, s)| {
            let mut row: Vec<f64> = basis.iter().map(|f| f(m)).collect();
            row.push(s);
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=n {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    a[0][n] / a[0][0]
}

fn one(_: f64) -> f64 {
    1.0
}
fn inv(m: f64) -> f64 {
    1.0 / m
}
fn log_inv(m: f64) -> f64 {
    m.ln() / m
}
fn log2_inv(m: f64) -> f64 {
    m.ln().powi(2) / m
}
fn log3_inv(m: f64) -> f64 {
    m.ln().powi(3) / m
}

const MARKS: usize = 5;

/// `sums[k]` is the partial sum at `marks[k]`, marks = `N/16, …, N/2, N`.
fn extrapolate(marks: &[u64; MARKS], sums: &[f64; MARKS]) -> EvalReport {
    let pts: Vec<(f64, f64)> = marks.iter().map(|&m| m as f64).zip(sums.iter().copied()).collect();
    let four = fit_constant(&pts[1..], &[one, inv, log_inv, log2_inv]);
    let five = fit_constant(&pts, &[one, inv, log_inv, log2_inv, log3_inv]);
    let last = sums[MARKS - 1];
    let floor = 1e-13 * last.abs().max(1.0);
    EvalReport {
        value: four,
        cutoff: marks[MARKS - 1],
        extrapolated: true,
        error: (four - five).abs() + floor,
        partial: last,
    }
}

fn marks_for(cutoff: u64) -> [u64; MARKS] {
    let n = (cutoff.max(16) / 16) * 16;
    [n / 16, n / 8, n / 4, n / 2, n]
}

/// Truncated sum over `[1, N]^d` of the term's kernel times its
/// coefficient, extrapolated in `N`. `None` selects the depth default.
pub fn eval_term(term: &Term, cutoff: Option<u64>) -> Result<EvalReport, EvalError> {
    let t = term.canonical();
    if !t.converges() {
        return Err(EvalError::DivergentSeries);
    }
    let d = t.depth();
    let marks = marks_for(cutoff.unwrap_or_else(|| default_cutoff(d)));
    let n = marks[MARKS - 1] as usize;
    // bucket of each possible maximum index
    let bucket: Vec<u8> = (0..=n)
        .map(|m| marks.iter().position(|&b| m as u64 <= b).unwrap() as u8)
        .collect();
    let w = t.width();
    let cover: Vec<Vec<f64>> = t
        .rows()
        .iter()
        .map(|r| (1..=w).map(|c| if r.contains(c) { 1.0 } else { 0.0 }).collect())
        .collect();
    let exps: Vec<i32> = t.exponents().iter().map(|&k| k as i32).collect();
    let mut acc = [Compensated::default(); MARKS];
    let mut partial = vec![0.0f64; w];
    sum_rows(0, 0, n, &cover, &exps, &bucket, &mut partial, &mut acc);

    let mut sums = [0.0; MARKS];
    let mut running = 0.0;
    for k in 0..MARKS {
        running += acc[k].value();
        sums[k] = running;
    }
    let c = t.coefficient().to_f64();
    let mut rep = extrapolate(&marks, &sums);
    rep.value *= c;
    rep.partial *= c;
    rep.error *= c.abs();
    Ok(rep)
}

#[allow(clippy::too_many_arguments)]
fn sum_rows(
    row: usize,
    max_so_far: usize,
    n: usize,
    cover: &[Vec<f64>],
    exps: &[i32],
    bucket: &[u8],
    partial: &mut [f64],
    acc: &mut [Compensated; MARKS],
) {
    let last = row + 1 == cover.len();
    let w = exps.len();
    if last {
        let cov = &cover[row];
        let mut local = [0.0f64; MARKS];
        let mut local_c = [Compensated::default(); MARKS];
        for i in 1..=n {
            let x = i as f64;
            let mut denom = 1.0;
            for c in 0..w {
                denom *= (partial[c] + cov[c] * x).powi(exps[c]);
            }
            let b = bucket[max_so_far.max(i)] as usize;
            local[b] += 1.0 / denom;
            // flush often enough that plain accumulation stays exact-ish
            if i % 64 == 0 {
                for k in 0..MARKS {
                    local_c[k].add(local[k]);
                    local[k] = 0.0;
                }
            }
        }
        for k in 0..MARKS {
            local_c[k].add(local[k]);
            acc[k].add(local_c[k].value());
        }
        return;
    }
    for i in 1..=n {
        let x = i as f64;
        for c in 0..w {
            partial[c] += cover[row][c] * x;
        }
        sum_rows(row + 1, max_so_far.max(i), n, cover, exps, bucket, partial, acc);
        for c in 0..w {
            partial[c] -= cover[row][c] * x;
        }
    }
}

/// `ζ(s_1, …, s_δ) = Σ_{n_1 > … > n_δ ≥ 1} ∏ n_i^{-s_i}` by nested partial
/// sums, with `n_1 ≤ N`, extrapolated in `N`.
pub fn eval_mzv(word: &MzvWord, cutoff: Option<u64>) -> Result<EvalReport, EvalError> {
    if !word.is_admissible() {
        return Err(EvalError::DivergentWord(word.clone()));
    }
    let s = word.parts();
    if s.is_empty() {
        return Ok(EvalReport::exact(1.0));
    }
    let marks = marks_for(cutoff.unwrap_or(DEFAULT_MZV_CUTOFF));
    let n = marks[MARKS - 1] as usize;
    let (&last, outer) = s.split_last().unwrap();
    let mut g: Vec<f64> = (0..=n)
        .map(|i| if i == 0 { 0.0 } else { (i as f64).powi(-(last as i32)) })
        .collect();
    // g(i) = i^{-s_l} · Σ_{m<i} g_{l+1}(m), from the innermost level out
    for &sk in outer.iter().rev() {
        let mut run = Compensated::default();
        let mut next = vec![0.0f64; n + 1];
        for i in 1..=n {
            next[i] = (i as f64).powi(-(sk as i32)) * run.value();
            run.add(g[i]);
        }
        g = next;
    }
    let mut sums = [0.0; MARKS];
    let mut run = Compensated::default();
    let mut k = 0;
    for (i, v) in g.iter().enumerate().skip(1) {
        run.add(*v);
        if i as u64 == marks[k] {
            sums[k] = run.value();
            k += 1;
        }
    }
    Ok(extrapolate(&marks, &sums))
}

/// Σ coefficient · eval_mzv, caching nothing; error estimates add up in
/// absolute value.
pub fn eval_combination(combo: &MzvCombination, cutoff: Option<u64>) -> Result<EvalReport, EvalError> {
    let mut value = 0.0;
    let mut error = 0.0;
    let mut partial = 0.0;
    let mut used = 0;
    for (word, c) in combo.iter() {
        let r = eval_mzv(word, cutoff)?;
        let c = c.to_f64();
        value += c * r.value;
        partial += c * r.partial;
        error += c.abs() * r.error;
        used = used.max(r.cutoff);
    }
    Ok(EvalReport {
        value,
        cutoff: used,
        extrapolated: true,
        error,
        partial,
    })
}

pub fn eval_expression(expr: &Expression, cutoff: Option<u64>) -> Result<EvalReport, EvalError> {
    let mut value = 0.0;
    let mut error = 0.0;
    let mut partial = 0.0;
    let mut used = 0;
    for t in expr.terms() {
        let r = eval_term(t, cutoff)?;
        value += r.value;
        partial += r.partial;
        error += r.error;
        used = used.max(r.cutoff);
    }
    Ok(EvalReport {
        value,
        cutoff: used,
        extrapolated: true,
        error,
        partial,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CheckReport {
    pub series: EvalReport,
    pub mzv: EvalReport,
    pub difference: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Compares the series value of `input` with the MZV combination:
/// passes when `|series − mzv| ≤ tol`.
pub fn check_reduction(
    input: &Expression,
    combo: &MzvCombination,
    tol: f64,
    cutoff: Option<u64>,
) -> Result<CheckReport, EvalError> {
    let series = eval_expression(input, cutoff)?;
    let mzv = eval_combination(combo, None)?;
    let difference = (series.value - mzv.value).abs();
    Ok(CheckReport {
        series,
        mzv,
        difference,
        tolerance: tol,
        passed: difference <= tol,
    })
}

/// Memoized MZV values for repeated evaluation of many combinations.
#[derive(Debug, Default)]
pub struct MzvCache {
    cutoff: Option<u64>,
    values: BTreeMap<MzvWord, EvalReport>,
}

impl MzvCache {
    pub fn new(cutoff: Option<u64>) -> Self {
        MzvCache {
            cutoff,
            values: BTreeMap::new(),
        }
    }

    pub fn get(&mut self, word: &MzvWord) -> Result<EvalReport, EvalError> {
        if let Some(r) = self.values.get(word) {
            return Ok(*r);
        }
        let r = eval_mzv(word, self.cutoff)?;
        self.values.insert(word.clone(), r);
        Ok(r)
    }

    pub fn eval(&mut self, combo: &MzvCombination) -> Result<EvalReport, EvalError> {
        let mut value = 0.0;
        let mut error = 0.0;
        let mut partial = 0.0;
        let mut used = 0;
        for (word, c) in combo.iter() {
            let r = self.get(word)?;
            let c = c.to_f64();
            value += c * r.value;
            partial += c * r.partial;
            error += c.abs() * r.error;
            used = used.max(r.cutoff);
        }
        Ok(EvalReport {
            value,
            cutoff: used,
            extrapolated: true,
            error,
            partial,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::Rat;

    const ZETA2: f64 = 1.644_934_066_848_226_4;
    const ZETA3: f64 = 1.202_056_903_159_594_3;
    const ZETA4: f64 = 1.082_323_233_711_138_2;

    fn w(parts: &[u32]) -> MzvWord {
        MzvWord::new(parts.to_vec())
    }

    #[test]
    fn zeta_two_and_three() {
        let r = eval_mzv(&w(&[2]), Some(10_000)).unwrap();
        assert!((r.value - ZETA2).abs() < 1e-6, "{r:?}");
        assert!((r.value - ZETA2).abs() <= r.error, "{r:?}");
        let r = eval_mzv(&w(&[3]), None).unwrap();
        assert!((r.value - ZETA3).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn euler_identity() {
        let a = eval_mzv(&w(&[2, 1]), None).unwrap();
        assert!((a.value - ZETA3).abs() < 1e-7, "{a:?}");
    }

    #[test]
    fn zeta_22_from_square() {
        // ζ(2)² = 2ζ(2,2) + ζ(4)
        let r = eval_mzv(&w(&[2, 2]), None).unwrap();
        let exact = (ZETA2 * ZETA2 - ZETA4) / 2.0;
        assert!((r.value - exact).abs() < 2e-9, "{r:?}");
        assert!((r.value - exact).abs() <= r.error, "{r:?}");
    }

    #[test]
    fn divergent_inputs_rejected() {
        assert!(matches!(eval_mzv(&w(&[1, 2]), None), Err(EvalError::DivergentWord(_))));
        let t = Term::from_rows(&[(1, 1), (2, 2)], &[1, 1]).unwrap();
        assert_eq!(eval_term(&t, None), Err(EvalError::DivergentSeries));
    }

    #[test]
    fn tornheim_series() {
        let t = Term::from_rows(&[(1, 2), (2, 3)], &[1, 1, 1]).unwrap();
        let r = eval_term(&t, Some(2000)).unwrap();
        assert!((r.value - 2.0 * ZETA3).abs() < 1e-3, "{r:?}");
    }

    #[test]
    fn coefficient_scales_value() {
        let t = Term::from_rows(&[(1, 1)], &[2])
            .unwrap()
            .with_coefficient(Rat::new(-3, 2));
        let r = eval_term(&t, Some(10_000)).unwrap();
        assert!((r.value + 1.5 * ZETA2).abs() < 1e-6);
    }

    #[test]
    fn chain_series_matches_dp() {
        let word = w(&[3, 1, 2]);
        let series = eval_term(&Term::from_mzv(&word), None).unwrap();
        let dp = eval_mzv(&word, None).unwrap();
        assert!(
            (series.value - dp.value).abs() <= 2.0 * (series.error + dp.error),
            "{series:?} {dp:?}"
        );
    }

    #[test]
    fn check_catches_wrong_combination() {
        let t = Term::from_rows(&[(1, 2), (2, 3)], &[1, 1, 1]).unwrap();
        let e = Expression::from_term(t);
        let good = {
            let mut c = MzvCombination::new();
            c.add(w(&[2, 1]), Rat::one());
            c.add(w(&[3]), Rat::one());
            c
        };
        assert!(check_reduction(&e, &good, 1e-3, Some(2000)).unwrap().passed);
        let bad = MzvCombination::single(w(&[3]), Rat::one());
        assert!(!check_reduction(&e, &bad, 1e-3, Some(2000)).unwrap().passed);
    }
}
