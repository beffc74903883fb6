//! Formal multiple zeta values and their quasi-shuffle (stuffle) product.
//!
//! A word `(k₁, …, k_δ)` stands for `Σ_{m₁ > m₂ > … > m_δ ≥ 1} m₁^{-k₁} ⋯ m_δ^{-k_δ}`;
//! `k₁` sits on the largest summation index.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::rat::Rat;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MzvWord(pub Vec<u32>);

impl MzvWord {
    pub fn new(parts: Vec<u32>) -> Self {
        MzvWord(parts)
    }

    pub fn parts(&self) -> &[u32] {
        &self.0
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn weight(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Convergent as a series iff the first part is at least two.
    pub fn is_admissible(&self) -> bool {
        self.0.first().is_some_and(|&k| k >= 2)
    }
}

impl fmt::Display for MzvWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|k| k.to_string()).collect();
        write!(f, "ζ({})", parts.join(","))
    }
}

/// A ℚ-linear combination of formal MZVs; zero coefficients are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MzvCombination(BTreeMap<MzvWord, Rat>);

#[derive(Serialize, Deserialize)]
struct MzvEntry {
    word: MzvWord,
    coeff: Rat,
}

impl MzvCombination {
    pub fn new() -> Self {
        MzvCombination(BTreeMap::new())
    }

    pub fn single(word: MzvWord, coeff: Rat) -> Self {
        let mut c = MzvCombination::new();
        c.add(word, coeff);
        c
    }

    pub fn add(&mut self, word: MzvWord, coeff: Rat) {
        if coeff.is_zero() {
            return;
        }
        match self.0.entry(word) {
            Entry::Occupied(mut e) => {
                *e.get_mut() += coeff;
                if e.get().is_zero() {
                    e.remove();
                }
            }
            Entry::Vacant(e) => {
                e.insert(coeff);
            }
        }
    }

    pub fn add_combination(&mut self, other: &MzvCombination, scale: &Rat) {
        for (w, c) in &other.0 {
            self.add(w.clone(), c * scale);
        }
    }

    pub fn get(&self, word: &MzvWord) -> Rat {
        self.0.get(word).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MzvWord, &Rat)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Words whose coefficient survives but which are not admissible.
    pub fn non_admissible(&self) -> Vec<MzvWord> {
        self.0.keys().filter(|w| !w.is_admissible()).cloned().collect()
    }

    pub fn weights(&self) -> Vec<u32> {
        let mut w: Vec<u32> = self.0.keys().map(|w| w.weight()).collect();
        w.sort_unstable();
        w.dedup();
        w
    }

    pub fn to_json(&self) -> serde_json::Value {
        let entries: Vec<MzvEntry> = self
            .0
            .iter()
            .map(|(w, c)| MzvEntry {
                word: w.clone(),
                coeff: c.clone(),
            })
            .collect();
        serde_json::to_value(entries).expect("serializable")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self, serde_json::Error> {
        let entries: Vec<MzvEntry> = serde_json::from_value(value.clone())?;
        let mut c = MzvCombination::new();
        for e in entries {
            c.add(e.word, e.coeff);
        }
        Ok(c)
    }
}

impl fmt::Display for MzvCombination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "0");
        }
        for (i, (w, c)) in self.0.iter().enumerate() {
            let (sign, mag) = if c.is_negative() {
                ("-", c.abs())
            } else {
                ("+", c.clone())
            };
            match (i, sign) {
                (0, "-") => write!(f, "-")?,
                (0, _) => {}
                _ => write!(f, " {sign} ")?,
            }
            if mag.is_one() {
                write!(f, "{w}")?;
            } else if mag.denom() == &num_bigint::BigInt::from(1) {
                write!(f, "{mag}{w}")?;
            } else {
                write!(f, "({mag}){w}")?;
            }
        }
        Ok(())
    }
}

/// Quasi-shuffle product of two words, by the first-letter recursion
/// `au * bv = a(u * bv) + b(au * v) + (a+b)(u * v)`.
pub fn stuffle_words(w1: &MzvWord, w2: &MzvWord) -> MzvCombination {
    let mut out = MzvCombination::new();
    for (word, count) in stuffle_rec(w1.parts(), w2.parts()) {
        out.add(MzvWord(word), Rat::from_int(count));
    }
    out
}

fn stuffle_rec(u: &[u32], v: &[u32]) -> BTreeMap<Vec<u32>, i64> {
    let mut out = BTreeMap::new();
    if u.is_empty() || v.is_empty() {
        out.insert(if u.is_empty() { v.to_vec() } else { u.to_vec() }, 1);
        return out;
    }
    let mut push = |head: u32, tail: BTreeMap<Vec<u32>, i64>| {
        for (w, c) in tail {
            let mut word = Vec::with_capacity(w.len() + 1);
            word.push(head);
            word.extend(w);
            *out.entry(word).or_insert(0) += c;
        }
    };
    push(u[0], stuffle_rec(&u[1..], v));
    push(v[0], stuffle_rec(u, &v[1..]));
    push(u[0] + v[0], stuffle_rec(&u[1..], &v[1..]));
    out
}

/// Writes `combo` as a polynomial in `T = ζ(1)` with admissible
/// coefficients: entry `j` of the result multiplies `T^j`.
///
/// Every identity used is the stuffle product, which holds exactly for
/// sums truncated at `m₁ ≤ N`; so if `combo` has a finite limit, the limit
/// is the value of entry 0 and the higher entries vanish. The constant
/// word `1` appears as the empty word.
pub fn stuffle_regularize(combo: &MzvCombination) -> Vec<MzvCombination> {
    let mut memo = BTreeMap::new();
    let mut out: Vec<MzvCombination> = Vec::new();
    for (word, c) in combo.iter() {
        add_poly(&mut out, &regularize_word(word, &mut memo), c);
    }
    while out.last().is_some_and(|p| p.is_empty()) {
        out.pop();
    }
    out
}

fn add_poly(acc: &mut Vec<MzvCombination>, poly: &[MzvCombination], scale: &Rat) {
    if acc.len() < poly.len() {
        acc.resize(poly.len(), MzvCombination::new());
    }
    for (a, p) in acc.iter_mut().zip(poly) {
        a.add_combination(p, scale);
    }
}

// ζ(1^m w) with m ≥ 1: stuffling ζ(1) into ζ(1^{m-1} w) gives m ζ(1^m w)
// plus words with fewer leading ones.
fn regularize_word(word: &MzvWord, memo: &mut BTreeMap<MzvWord, Vec<MzvCombination>>) -> Vec<MzvCombination> {
    if word.is_empty() || word.is_admissible() {
        return vec![MzvCombination::single(word.clone(), Rat::one())];
    }
    if let Some(p) = memo.get(word) {
        return p.clone();
    }
    let lead = word.parts().iter().take_while(|&&k| k == 1).count();
    let rest = MzvWord(word.parts()[1..].to_vec());
    let mut poly = vec![MzvCombination::new()];
    poly.extend(regularize_word(&rest, memo));
    for (w, c) in stuffle_words(&MzvWord(vec![1]), &rest).iter() {
        if w != word {
            add_poly(&mut poly, &regularize_word(w, memo), &-(c.clone()));
        }
    }
    let inv = Rat::new(1, lead as i64);
    let poly: Vec<MzvCombination> = poly
        .iter()
        .map(|p| {
            let mut q = MzvCombination::new();
            q.add_combination(p, &inv);
            q
        })
        .collect();
    memo.insert(word.clone(), poly.clone());
    poly
}

/// All compositions of `n` (ordered tuples of positive integers summing to `n`).
pub fn compositions(n: u32) -> Vec<MzvWord> {
    if n == 0 {
        return vec![MzvWord(Vec::new())];
    }
    let mut out = Vec::new();
    for first in 1..=n {
        for rest in compositions(n - first) {
            let mut w = vec![first];
            w.extend(rest.0);
            out.push(MzvWord(w));
        }
    }
    out
}
