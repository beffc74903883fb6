//! Exact, independent checks of single trace records.
//!
//! Partial-fraction, auxiliary-column and reordering records keep the row set, so the
//! input kernel must equal the sum of output kernels as rational functions;
//! this is tested at random positive rational points. Harmonic splits change
//! the summation variables, so they are tested by enumerating a lattice box,
//! mapping every summand through the split substitution, and comparing
//! kernels exactly, in both directions.

use rand::Rng;

use crate::error::CheckFailed;
use crate::rat::Rat;
use crate::term::Term;
use crate::trace::{Move, TraceRecord};

pub const DEFAULT_POINTS: usize = 10;
pub const DEFAULT_BOX: i64 = 6;

fn fail(kind: &'static str, record: &TraceRecord, detail: String) -> CheckFailed {
    CheckFailed {
        kind,
        mv: record.mv.name().to_string(),
        detail,
    }
}

fn random_point<R: Rng>(rng: &mut R, d: usize) -> Vec<Rat> {
    (0..d)
        .map(|_| Rat::new(rng.gen_range(1..=97), rng.gen_range(1..=31)))
        .collect()
}

/// Exact kernel identity at `points` random positive rational points.
pub fn step_check_rational<R: Rng>(record: &TraceRecord, rng: &mut R, points: usize) -> Result<(), CheckFailed> {
    let d = record.input.depth();
    if record.outputs.iter().any(|o| o.depth() != d) {
        return Err(fail("rational", record, "outputs change the row set".into()));
    }
    let mut checked = 0;
    let mut attempts = 0;
    while checked < points {
        attempts += 1;
        if attempts > 100 * points.max(1) {
            return Err(fail("rational", record, "could not sample a regular point".into()));
        }
        let z = random_point(rng, d);
        let lhs = record.input.kernel_at(&z);
        let rhs: Option<Rat> = record.outputs.iter().map(|o| o.kernel_at(&z)).sum();
        let (Some(lhs), Some(rhs)) = (lhs, rhs) else {
            // a form vanished; resample
            continue;
        };
        if lhs != rhs {
            let at: Vec<String> = z.iter().map(|x| x.to_string()).collect();
            return Err(fail(
                "rational",
                record,
                format!("at z = ({}): {} != {}", at.join(", "), lhs, rhs),
            ));
        }
        checked += 1;
    }
    Ok(())
}

fn kernel_int(t: &Term, n: &[i64]) -> Rat {
    let z: Vec<Rat> = n.iter().map(|&x| Rat::from_int(x)).collect();
    t.kernel_at(&z).expect("positive lattice points never hit a zero form")
}

fn for_each_tuple(d: usize, b: i64, mut f: impl FnMut(&[i64]) -> Result<(), String>) -> Result<(), String> {
    if d == 0 {
        return f(&[]);
    }
    let mut n = vec![1i64; d];
    loop {
        f(&n)?;
        let mut i = 0;
        while i < d && n[i] == b {
            n[i] = 1;
            i += 1;
        }
        if i == d {
            return Ok(());
        }
        n[i] += 1;
    }
}

/// Checks `source = targets[0] + targets[1] + targets[2]` for the split of
/// adjacent rows `a`, `b` of `source`, summand by summand on `[1, B]^d`.
pub fn check_split(source: &Term, targets: &[Term; 3], a: usize, b: usize, bound: i64) -> Result<(), String> {
    let d = source.depth();
    // forward: classify each source summand and compare with its image
    for_each_tuple(d, bound, |n| {
        let (na, nb) = (n[a], n[b]);
        let (which, image): (usize, Vec<i64>) = if na > nb {
            let mut t = n.to_vec();
            t[a] = nb;
            t[b] = na - nb;
            (0, t)
        } else if na < nb {
            let mut t = n.to_vec();
            t[b] = nb - na;
            (1, t)
        } else {
            let mut t = n.to_vec();
            t.remove(b);
            (2, t)
        };
        let lhs = kernel_int(source, n);
        let rhs = kernel_int(&targets[which], &image);
        if lhs != rhs {
            return Err(format!("summand {n:?} -> output {which} at {image:?}: {lhs} != {rhs}"));
        }
        Ok(())
    })?;
    // backward: every target summand whose preimage lies in the box is hit,
    // and the preimages exhaust the box exactly once
    let mut hits = 0usize;
    for (which, target) in targets.iter().enumerate() {
        for_each_tuple(target.depth(), bound, |t| {
            let mut n = t.to_vec();
            match which {
                0 => {
                    n[a] = t[a] + t[b];
                    n[b] = t[a];
                }
                1 => n[b] = t[a] + t[b],
                _ => {
                    let a_after = if b < a { a - 1 } else { a };
                    n.insert(b, t[a_after]);
                }
            }
            if n.iter().all(|&x| x <= bound) {
                hits += 1;
                let lhs = kernel_int(source, &n);
                let rhs = kernel_int(target, t);
                if lhs != rhs {
                    return Err(format!("output {which} at {t:?} -> summand {n:?}: {rhs} != {lhs}"));
                }
            }
            Ok(())
        })?;
    }
    let expected = (bound as usize).pow(d as u32);
    if hits != expected {
        return Err(format!("box covered {hits} times, expected {expected}"));
    }
    Ok(())
}

/// Lattice bijection check of a harmonic-split record on `[1, bound]^d`.
pub fn step_check_lattice(record: &TraceRecord, bound: i64) -> Result<(), CheckFailed> {
    let err = |detail: String| fail("lattice", record, detail);
    if record.outputs.len() != 3 {
        return Err(err(format!("expected 3 outputs, got {}", record.outputs.len())));
    }
    let o = &record.outputs;
    let result = match record.mv {
        Move::ForwardHp { row_a, row_b } => check_split(
            &record.input,
            &[o[0].clone(), o[1].clone(), o[2].clone()],
            row_a,
            row_b,
            bound,
        ),
        Move::InverseHp { row_a, row_b } => {
            // o0 = input - (-o1) - (-o2) read as the forward split of o0
            let minus = Rat::from_int(-1);
            check_split(
                &o[0],
                &[record.input.clone(), o[1].scaled(&minus), o[2].scaled(&minus)],
                row_a,
                row_b,
                bound,
            )
        }
        _ => return Err(err("not a harmonic split".into())),
    };
    result.map_err(err)
}

/// Dispatches to the check matching the record's move.
pub fn check_record<R: Rng>(record: &TraceRecord, rng: &mut R, points: usize, bound: i64) -> Result<(), CheckFailed> {
    match record.mv {
        Move::PfStep { .. } | Move::InsertAux { .. } | Move::PermuteColumns { .. } => {
            step_check_rational(record, rng, points)
        }
        Move::ForwardHp { .. } | Move::InverseHp { .. } => step_check_lattice(record, bound),
    }
}
