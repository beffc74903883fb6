//! Command handling for the `bigzeta` binary, kept out of `main` so tests
//! can drive it directly.
//!
//! Every command produces one JSON object on standard output. Failures
//! produce `{"error": {"kind", "message"}}` and a nonzero exit status:
//! 1 when a check fails, 2 for bad input, 3 when a reduction is aborted.

use std::fs;
use std::path::PathBuf;

use bigzeta::corpus::{default_corpus, generate, CorpusSpec};
use bigzeta::engine::{reduce_term, Method, ReduceConfig, Reduction};
use bigzeta::mzv::compositions;
use bigzeta::numeric::{check_reduction, eval_mzv, eval_term, EvalReport};
use bigzeta::periods::{check_forest_identity, forest_expand, integral_eval};
use bigzeta::term::{TermJson, TermParseError};
use bigzeta::trace::replay;
use bigzeta::{stuffle_words, EvalError, Expression, MzvCombination, MzvWord, Rat, ReduceError, Term};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error(transparent)]
    Term(#[from] TermParseError),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Reduce(#[from] ReduceError),
    #[error("{0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) | CliError::Term(_) | CliError::Io { .. } | CliError::Eval(_) => 2,
            CliError::Reduce(ReduceError::CheckFailed(_)) | CliError::CheckFailed(_) => 1,
            CliError::Reduce(ReduceError::MixedWeights) => 2,
            CliError::Reduce(_) => 3,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Parse(_) | CliError::Term(_) => "parse",
            CliError::Io { .. } => "io",
            CliError::Eval(_) => "eval",
            CliError::Reduce(ReduceError::TermBudgetExceeded(_)) => "budget",
            CliError::Reduce(ReduceError::ProgressViolation(_)) => "progress",
            CliError::Reduce(ReduceError::CheckFailed(_)) | CliError::CheckFailed(_) => "check",
            CliError::Reduce(_) => "reduce",
        }
    }

    pub fn to_json(&self) -> Value {
        json!({"error": {"kind": self.kind(), "message": self.to_string()}})
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Command {
    Validate(String),
    Converges(String),
    Reduce(String),
    Eval(String),
    Check(String),
    Mzv(String),
    Stuffle(String, String),
    Reflect(String),
    Integral(String),
    Forest(String),
    Selftest,
}

#[derive(Clone, Debug)]
pub struct JobConfig {
    pub command: Command,
    /// Series cutoff, or nodes per dimension for `integral`.
    pub cutoff: Option<u64>,
    pub tol: f64,
    pub max_terms: usize,
    pub verify: bool,
    pub seed: u64,
    pub trace: Option<PathBuf>,
}

impl JobConfig {
    pub fn new(command: Command) -> Self {
        JobConfig {
            command,
            cutoff: None,
            tol: 1e-3,
            max_terms: 100_000,
            verify: false,
            seed: 0,
            trace: None,
        }
    }

    fn reduce_config(&self, verify: bool) -> ReduceConfig {
        ReduceConfig {
            max_terms: self.max_terms,
            verify,
            seed: self.seed,
            record_trace: self.trace.is_some(),
            ..ReduceConfig::default()
        }
    }
}

pub struct Outcome {
    pub code: u8,
    pub json: Value,
}

/// Reads a term from JSON, from a file holding either format, or from the
/// compact form `e1,2 e2,3; k=(1,1,1)` (optionally wrapped as `Z[…]`).
pub fn parse_term(input: &str) -> Result<Term, CliError> {
    let text = input.trim();
    if text.starts_with('{') {
        let value: Value = serde_json::from_str(text).map_err(|e| CliError::Parse(format!("bad JSON: {e}")))?;
        return Ok(Term::from_json(&value)?);
    }
    if !text.contains(';') {
        let path = PathBuf::from(text);
        if path.is_file() {
            let body = fs::read_to_string(&path).map_err(|e| CliError::Io {
                path: text.to_string(),
                message: e.to_string(),
            })?;
            return parse_term(&body);
        }
    }
    parse_compact(text)
}

fn parse_compact(text: &str) -> Result<Term, CliError> {
    let bad = |why: &str| CliError::Parse(format!("cannot read term {text:?}: {why}"));
    let mut body = text;
    let mut coefficient = Rat::one();
    if let Some((c, rest)) = body.split_once('·') {
        let c = c.trim().trim_start_matches('(').trim_end_matches(')');
        coefficient = c.parse().map_err(|_| bad("bad coefficient"))?;
        body = rest.trim();
    }
    let body = body
        .strip_prefix("Z[")
        .map_or(body, |b| b.strip_suffix(']').unwrap_or(b));
    let (rows_text, k_text) = body.split_once(';').ok_or_else(|| bad("expected `rows; k=(…)`"))?;
    let rows = rows_text
        .split_whitespace()
        .map(|r| {
            let (s, e) = r
                .strip_prefix('e')
                .and_then(|r| r.split_once(','))
                .ok_or_else(|| bad("rows look like e1,2"))?;
            let s = s.parse().map_err(|_| bad("row start"))?;
            let e = e.parse().map_err(|_| bad("row end"))?;
            Ok((s, e))
        })
        .collect::<Result<Vec<(usize, usize)>, CliError>>()?;
    let k_text = k_text.trim();
    let k_text = k_text.strip_prefix("k=").ok_or_else(|| bad("expected k=(…)"))?;
    let exponents = parse_list(k_text).map_err(|_| bad("exponents"))?;
    let raw = TermJson {
        rows,
        exponents,
        coefficient,
    };
    Ok(raw.try_into()?)
}

fn parse_list(text: &str) -> Result<Vec<u32>, std::num::ParseIntError> {
    let inner = text
        .trim()
        .trim_start_matches(['ζ', '(', '['])
        .trim_end_matches([')', ']']);
    inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect()
}

/// Reads a word as `2,1`, `[2,1]`, `(2,1)` or `ζ(2,1)`.
pub fn parse_word(text: &str) -> Result<MzvWord, CliError> {
    let parts = parse_list(text).map_err(|_| CliError::Parse(format!("cannot read word {text:?}")))?;
    if parts.contains(&0) {
        return Err(CliError::Parse(format!("word {text:?} has a zero part")));
    }
    Ok(MzvWord::new(parts))
}

fn report_json(r: &EvalReport) -> Value {
    json!({
        "value": r.value,
        "error": r.error,
        "cutoff": r.cutoff,
        "extrapolated": r.extrapolated,
        "partial": r.partial,
    })
}

fn combination_json(c: &MzvCombination) -> Value {
    c.to_json()
}

fn reduction_json(r: &Reduction) -> Value {
    json!({
        "mzv": combination_json(&r.combination),
        "text": r.combination.to_string(),
        "weight": r.weight,
        "input_converges": r.input_converges,
        "divergent_cancelled": r.divergent_cancelled,
        "certified": r.certified,
        "method": match r.method {
            Method::Procedure => "procedure",
            Method::Tracked => "tracked",
        },
        "regularized": r.unregularized.is_some(),
        "stats": {
            "pf_steps": r.stats.pf_steps,
            "forward_splits": r.stats.forward_splits,
            "inverse_splits": r.stats.inverse_splits,
            "aux_columns": r.stats.aux_columns,
            "permutations": r.stats.permutations,
            "verified": r.stats.verified,
            "terms_processed": r.stats.terms_processed,
            "max_live_terms": r.stats.max_live_terms,
        },
    })
}

fn write_trace(job: &JobConfig, r: &Reduction) -> Result<(), CliError> {
    let Some(path) = &job.trace else {
        return Ok(());
    };
    let io = |e: std::io::Error| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let file = fs::File::create(path).map_err(io)?;
    r.trace.write_jsonl(std::io::BufWriter::new(file)).map_err(io)
}

fn term_json(t: &Term) -> Value {
    json!({"term": t.to_json(), "text": t.to_string()})
}

/// Runs one job.
pub fn run(job: &JobConfig) -> Outcome {
    match execute(job) {
        Ok((code, json)) => Outcome { code, json },
        Err(e) => Outcome {
            code: e.exit_code(),
            json: e.to_json(),
        },
    }
}

fn execute(job: &JobConfig) -> Result<(u8, Value), CliError> {
    let ok = |v: Value| Ok((0, v));
    match &job.command {
        Command::Validate(s) => {
            let t = parse_term(s)?;
            ok(json!({
                "valid": true,
                "term": t.to_json(),
                "text": t.to_string(),
                "depth": t.depth(),
                "width": t.width(),
                "weight": t.weight(),
            }))
        }
        Command::Converges(s) => {
            let t = parse_term(s)?;
            ok(json!({"converges": t.converges()}))
        }
        Command::Reduce(s) => {
            let t = parse_term(s)?;
            let r = reduce_term(&t, &job.reduce_config(job.verify))?;
            write_trace(job, &r)?;
            ok(reduction_json(&r))
        }
        Command::Eval(s) => {
            let t = parse_term(s)?;
            ok(report_json(&eval_term(&t, job.cutoff)?))
        }
        Command::Check(s) => {
            let t = parse_term(s)?;
            // per-step checks are part of the verdict
            let r = reduce_term(&t, &job.reduce_config(true))?;
            write_trace(job, &r)?;
            let input = Expression::from_term(t);
            let c = check_reduction(&input, &r.combination, job.tol, job.cutoff)?;
            let mut out = reduction_json(&r);
            out["series"] = report_json(&c.series);
            out["mzv_value"] = report_json(&c.mzv);
            out["difference"] = json!(c.difference);
            out["tolerance"] = json!(c.tolerance);
            out["passed"] = json!(c.passed);
            Ok((if c.passed { 0 } else { 1 }, out))
        }
        Command::Mzv(s) => {
            let w = parse_word(s)?;
            let mut out = report_json(&eval_mzv(&w, job.cutoff)?);
            out["word"] = json!(w.parts());
            ok(out)
        }
        Command::Stuffle(u, v) => {
            let p = stuffle_words(&parse_word(u)?, &parse_word(v)?);
            ok(json!({"mzv": combination_json(&p), "text": p.to_string()}))
        }
        Command::Reflect(s) => ok(term_json(&parse_term(s)?.reflect())),
        Command::Integral(s) => {
            let t = parse_term(s)?;
            let nodes = job.cutoff.map(|n| n as usize);
            ok(report_json(&integral_eval(&t, nodes)?))
        }
        Command::Forest(s) => {
            let t = parse_term(s)?;
            let monomials = forest_expand(t.pattern()).map_err(|e| CliError::Parse(e.to_string()))?;
            let mut rng = ChaCha8Rng::seed_from_u64(job.seed);
            let identity = check_forest_identity(t.pattern(), &monomials, &mut rng, 20);
            let list: Vec<Value> = monomials
                .iter()
                .map(|m| json!({"coefficient": m.coefficient, "factors": m.factors}))
                .collect();
            Ok((
                if identity { 0 } else { 1 },
                json!({"monomials": list, "identity_checked": identity}),
            ))
        }
        Command::Selftest => {
            let checks = selftest(job);
            let passed = checks.iter().all(|c| c["passed"] == json!(true));
            Ok((if passed { 0 } else { 1 }, json!({"passed": passed, "checks": checks})))
        }
    }
}

fn check_entry(name: &str, passed: bool, detail: String) -> Value {
    json!({"name": name, "passed": passed, "detail": detail})
}

/// A fast pass over the main invariants.
fn selftest(job: &JobConfig) -> Vec<Value> {
    let cfg = ReduceConfig {
        verify: true,
        seed: job.seed,
        ..ReduceConfig::default()
    };
    let mut checks = Vec::new();

    let tornheim = Term::from_rows(&[(1, 2), (2, 3)], &[1, 1, 1]).expect("valid");
    let result = reduce_term(&tornheim, &cfg);
    let mut expected = MzvCombination::new();
    expected.add(MzvWord::new(vec![2, 1]), Rat::one());
    expected.add(MzvWord::new(vec![3]), Rat::one());
    checks.push(match result {
        Ok(r) => check_entry("tornheim", r.combination == expected, r.combination.to_string()),
        Err(e) => check_entry("tornheim", false, e.to_string()),
    });

    let words: Vec<MzvWord> = (2..=5).flat_map(compositions).filter(|w| w.is_admissible()).collect();
    let mut bad = Vec::new();
    for u in &words {
        for v in &words {
            if u.weight() + v.weight() > 6 {
                continue;
            }
            let t = Term::from_mzv(u).direct_sum(&Term::from_mzv(v));
            match reduce_term(&t, &cfg) {
                Ok(r) if r.combination == stuffle_words(u, v) => {}
                _ => bad.push(format!("{u}·{v}")),
            }
        }
    }
    checks.push(check_entry("stuffle", bad.is_empty(), bad.join(", ")));

    let mut bad = Vec::new();
    for w in (1..=6).flat_map(compositions) {
        match reduce_term(&Term::from_mzv(&w), &cfg) {
            Ok(r) if r.combination == MzvCombination::single(w.clone(), Rat::one()) => {}
            _ => bad.push(w.to_string()),
        }
    }
    checks.push(check_entry("chains_fixed", bad.is_empty(), bad.join(", ")));

    let corpus = generate(&CorpusSpec {
        size: 20,
        seed: job.seed,
        ..CorpusSpec::default()
    });
    let mut bad = Vec::new();
    for t in &corpus {
        if t.reflect().reflect() != *t {
            bad.push(format!("reflect {t}"));
        }
        match reduce_term(t, &cfg) {
            Ok(r) => {
                let replayed = replay(&Expression::from_term(t.clone()), &r.trace.records);
                let raw = r.unregularized.as_ref().unwrap_or(&r.combination);
                if replayed.as_ref() != Ok(raw) {
                    bad.push(format!("replay {t}"));
                }
            }
            Err(e) => bad.push(format!("{t}: {e}")),
        }
    }
    checks.push(check_entry("corpus_steps", bad.is_empty(), bad.join(", ")));

    let z2 = eval_mzv(&MzvWord::new(vec![2]), Some(10_000));
    let ok = z2.is_ok_and(|r| (r.value - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-6);
    checks.push(check_entry("zeta2", ok, String::new()));

    let sample = default_corpus().into_iter().next().expect("nonempty corpus");
    let forest = forest_expand(sample.pattern())
        .map(|m| check_forest_identity(sample.pattern(), &m, &mut ChaCha8Rng::seed_from_u64(job.seed), 20));
    checks.push(check_entry("forest", forest == Ok(true), sample.to_string()));
    checks
}
