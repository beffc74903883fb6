//! Seeded pseudo-random convergent terms for regression runs.

use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::term::Term;

pub const DEFAULT_SEED: u64 = 20_240_611;
pub const DEFAULT_SIZE: usize = 200;

#[derive(Clone, Copy, Debug)]
pub struct CorpusSpec {
    pub size: usize,
    pub max_weight: u32,
    pub max_depth: usize,
    pub seed: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            size: DEFAULT_SIZE,
            max_weight: 6,
            max_depth: 3,
            seed: DEFAULT_SEED,
        }
    }
}

fn random_term<R: Rng>(rng: &mut R, max_weight: u32, max_depth: usize) -> Option<Term> {
    // favour deeper terms; depth 1 is only ever ζ(k)
    let d = match rng.gen_range(0..8) {
        0 => 1,
        1..=3 => 2,
        _ => 3,
    }
    .min(max_depth);
    let max_w = max_weight as usize;
    if d > max_w {
        return None;
    }
    let width = rng.gen_range(d..=max_w);
    let rows: Vec<(usize, usize)> = (0..d)
        .map(|_| {
            let s = rng.gen_range(1..=width);
            let e = rng.gen_range(s..=width);
            (s, e)
        })
        .collect();
    let weight = rng.gen_range(width as u32..=max_weight);
    let mut exps = vec![1u32; width];
    for _ in 0..(weight as usize - width) {
        let c = rng.gen_range(0..width);
        exps[c] += 1;
    }
    let t = Term::from_rows(&rows, &exps).ok()?;
    t.converges().then_some(t)
}

/// Distinct (up to canonical form) convergent basic terms.
pub fn generate(spec: &CorpusSpec) -> Vec<Term> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(spec.size);
    let mut attempts = 0usize;
    while out.len() < spec.size && attempts < 1_000_000 {
        attempts += 1;
        if let Some(t) = random_term(&mut rng, spec.max_weight, spec.max_depth) {
            if seen.insert(t.key()) {
                out.push(t);
            }
        }
    }
    out
}

pub fn default_corpus() -> Vec<Term> {
    generate(&CorpusSpec::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_deterministic_and_valid() {
        let a = default_corpus();
        let b = default_corpus();
        assert_eq!(a, b);
        assert_eq!(a.len(), DEFAULT_SIZE);
        for t in &a {
            assert!(t.converges());
            assert!(t.weight() <= 6);
            assert!(t.depth() <= 3);
        }
        assert!(a.iter().filter(|t| !t.canonical().is_chain()).count() > 100);
    }
}
