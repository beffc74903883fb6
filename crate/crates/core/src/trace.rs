//! Replayable log of every rewrite the engine performs.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::TermError;
use crate::expression::Expression;
use crate::linalg::CircuitDependency;
use crate::mzv::MzvCombination;
use crate::rat::Rat;
use crate::term::Term;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "move", rename_all = "snake_case")]
pub enum Move {
    /// Partial fraction over `circuit` (0-based columns), pivoted at `pivot`.
    PfStep { circuit: CircuitDependency, pivot: usize },
    /// Harmonic split of adjacent rows (0-based).
    ForwardHp { row_a: usize, row_b: usize },
    /// Harmonic split solved for its first output; rows share a start.
    InverseHp { row_a: usize, row_b: usize },
    /// Zero-exponent column inserted before 1-based `position`.
    InsertAux { position: usize, extended: usize },
    /// Columns reordered, keeping rows contiguous; the series is unchanged.
    PermuteColumns { order: Vec<usize> },
}

impl Move {
    pub fn name(&self) -> &'static str {
        match self {
            Move::PfStep { .. } => "pf_step",
            Move::ForwardHp { .. } => "forward_hp",
            Move::InverseHp { .. } => "inverse_hp",
            Move::InsertAux { .. } => "insert_aux_column",
            Move::PermuteColumns { .. } => "permute_columns",
        }
    }
}

/// One move: `input = Σ outputs` as formal values. Terms are stored raw
/// (slot-preserving, absolute coefficients) so each record can be checked
/// on its own.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    #[serde(flatten)]
    pub mv: Move,
    pub input_key: String,
    pub input: Term,
    pub output_keys: Vec<String>,
    pub outputs: Vec<Term>,
}

impl TraceRecord {
    pub fn new(mv: Move, input: Term, outputs: Vec<Term>) -> Self {
        TraceRecord {
            mv,
            input_key: input.key().to_string(),
            output_keys: outputs.iter().map(|o| o.key().to_string()).collect(),
            input,
            outputs,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReductionTrace {
    pub records: Vec<TraceRecord>,
    pub terms_processed: usize,
    pub max_live_terms: usize,
}

impl ReductionTrace {
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl(text: &str) -> Result<Vec<TraceRecord>, serde_json::Error> {
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect()
    }
}

/// Replays `records` against `input`: each record subtracts its input and
/// adds its outputs. Every surviving term must be a chain; the result is
/// their MZV combination.
pub fn replay(input: &Expression, records: &[TraceRecord]) -> Result<MzvCombination, TermError> {
    let mut expr = input.clone();
    for r in records {
        expr.add_term(r.input.scaled(&Rat::from_int(-1)));
        for o in &r.outputs {
            expr.add_term(o.clone());
        }
    }
    let mut combo = MzvCombination::new();
    for t in expr.terms() {
        let (word, coeff) = t.to_mzv()?;
        combo.add(word, coeff);
    }
    Ok(combo)
}
