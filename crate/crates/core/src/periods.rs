//! Integral representations of big zeta values.
//!
//! Expanding `1/L = ∫_0^1 y^{L-1} dy` for every (expanded) column and summing
//! the geometric series row by row gives
//!
//! ```text
//! Z = ∫_{[0,1]^w} ∏_j P_j/(1 − P_j) ∏_i dx_i/x_i,   P_j = ∏_{i ∈ row j} x_i,
//! ```
//!
//! which [`integral_eval`] evaluates by tensor tanh-sinh quadrature. In
//! simplicial coordinates `t_i = x_1⋯x_i` the integrand becomes
//! `∏_{rows e_{a,b}} t_b/(t_{a-1} − t_b) ∏ dt_i/t_i`, and [`forest_expand`]
//! rewrites it as a signed sum of wedge products of `ω_{ij} = dlog(t_i − t_j)`
//! (with `t_0 = 1`, `t_{w+1} = 0`).

use rand::Rng;

use crate::error::{EvalError, ForestError};
use crate::numeric::EvalReport;
use crate::pattern::Pattern;
use crate::rat::Rat;
use crate::term::Term;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CubicalIntegrand {
    pub width: usize,
    /// `rows[j][i]` is the exponent of `x_i` in `P_j`.
    pub rows: Vec<Vec<u32>>,
    /// Exponent of each `x_i` in the measure (`-1` for `dx_i/x_i`).
    pub measure: Vec<i32>,
}

impl CubicalIntegrand {
    /// Exponent of each `x_i` in `∏_j P_j / ∏ x_i`.
    pub fn combined_exponents(&self) -> Vec<i32> {
        (0..self.width)
            .map(|i| self.rows.iter().map(|r| r[i] as i32).sum::<i32>() + self.measure[i])
            .collect()
    }

    /// Exact value at a point of the open cube.
    pub fn value_at_rat(&self, x: &[Rat]) -> Option<Rat> {
        let mut v = Rat::one();
        for (xi, &e) in x.iter().zip(&self.measure) {
            v *= xi.pow(e);
        }
        for r in &self.rows {
            let p = x.iter().zip(r).fold(Rat::one(), |acc, (xi, &a)| acc * xi.pow(a as i32));
            let q = Rat::one() - p.clone();
            v *= p * q.recip()?;
        }
        Some(v)
    }
}

pub fn cubical_integrand(term: &Term) -> CubicalIntegrand {
    let m = term.expand();
    let width = m.first().map_or(0, |r| r.len());
    CubicalIntegrand {
        width,
        rows: m.iter().map(|r| r.iter().map(|&b| b as u32).collect()).collect(),
        measure: vec![-1; width],
    }
}

/// Node count per dimension used when none is given.
pub fn default_nodes(weight: u32) -> usize {
    match weight {
        0..=2 => 81,
        3 => 61,
        4 => 41,
        _ => 17,
    }
}

const T_MAX: f64 = 3.0;

struct Node {
    x: f64,
    one_minus_x: f64,
    weight: f64,
}

/// Tanh-sinh nodes on `(0, 1)`: `x = 1/(1 + e^{-π sinh t})`.
fn nodes(n: usize) -> Vec<Node> {
    let h = 2.0 * T_MAX / (n - 1) as f64;
    (0..n)
        .map(|k| {
            let t = -T_MAX + k as f64 * h;
            let u = std::f64::consts::PI * t.sinh();
            let x = 1.0 / (1.0 + (-u).exp());
            let one_minus_x = 1.0 / (1.0 + u.exp());
            Node {
                x,
                one_minus_x,
                weight: h * std::f64::consts::PI * t.cosh() * x * one_minus_x,
            }
        })
        .collect()
}

/// Tensor tanh-sinh quadrature of the cubical integrand with `nodes` points
/// per dimension (made odd). The error estimate is the difference to the
/// same rule on every other node.
pub fn integral_eval(term: &Term, nodes_per_dim: Option<usize>) -> Result<EvalReport, EvalError> {
    if !term.canonical().converges() {
        return Err(EvalError::DivergentSeries);
    }
    let integrand = cubical_integrand(term);
    let w = integrand.width;
    let n = nodes_per_dim.unwrap_or_else(|| default_nodes(term.weight())).max(5) | 1;
    let grid = nodes(n);
    let exps = integrand.combined_exponents();
    let rows: Vec<Vec<usize>> = integrand
        .rows
        .iter()
        .map(|r| (0..w).filter(|&i| r[i] > 0).collect())
        .collect();

    let mut fine = 0.0f64;
    let mut coarse = 0.0f64;
    let mut idx = vec![0usize; w];
    loop {
        let mut wt = 1.0;
        let mut mono = 1.0;
        for (i, &k) in idx.iter().enumerate() {
            wt *= grid[k].weight;
            mono *= grid[k].x.powi(exps[i]);
        }
        let mut denom = 1.0;
        for r in &rows {
            // 1 − ∏ x_i = Σ_k (1 − x_k) ∏_{l<k} x_l, free of cancellation
            let mut prefix = 1.0;
            let mut comp = 0.0;
            for &i in r {
                let node = &grid[idx[i]];
                comp += node.one_minus_x * prefix;
                prefix *= node.x;
            }
            denom *= comp;
        }
        let v = wt * mono / denom;
        if v.is_finite() {
            fine += v;
            if idx.iter().all(|k| k % 2 == 0) {
                coarse += v * (1u64 << w) as f64;
            }
        }
        let mut d = 0;
        while d < w && idx[d] == n - 1 {
            idx[d] = 0;
            d += 1;
        }
        if d == w {
            break;
        }
        idx[d] += 1;
    }
    let c = term.coefficient().to_f64();
    Ok(EvalReport {
        value: c * fine,
        cutoff: n as u64,
        extrapolated: false,
        error: c.abs() * ((fine - coarse).abs() + 1e-12 * fine.abs()),
        partial: c * fine,
    })
}

/// A signed wedge product `coefficient · ω_{f_1} ∧ … ∧ ω_{f_w}`, factors
/// listed in the order of the variable they carry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FormMonomial {
    pub coefficient: Rat,
    /// Pairs `(i, j)`, `i < j`, naming `ω_{ij} = dlog(t_i − t_j)`.
    pub factors: Vec<(usize, usize)>,
}

fn find(parent: &mut [usize], v: usize) -> usize {
    let mut r = v;
    while parent[r] != r {
        r = parent[r];
    }
    let mut v = v;
    while parent[v] != r {
        let next = parent[v];
        parent[v] = r;
        v = next;
    }
    r
}

/// Expands `∏_{rows e_{a,b}} t_b/(t_{a-1} − t_b) ∏ dt_i/t_i` into dlog
/// monomials. Each row is the edge `(a−1, b)` on vertices `0..=w`; the graph
/// is a forest, rooted at the minimal label of each tree. Vertex `v ≥ 1`
/// carries `dt_v`:
///
/// * a root: `dt_v/t_v = ω_{v,w+1}`;
/// * reached from `l < v`: `t_v/(t_l − t_v) · dt_v/t_v`, the `dt_v` part of `−ω_{l,v}`;
/// * reached from `r > v`: `(t_v/(t_v − t_r) − 1) dt_v/t_v`, giving `ω_{v,r} − ω_{v,w+1}`.
///
/// Every factor involves only its own vertex and its parent, so the wedge
/// of full dlog forms equals the wedge of their `dt_v` parts.
pub fn forest_expand(pattern: &Pattern) -> Result<Vec<FormMonomial>, ForestError> {
    let w = pattern.width();
    let mut uf: Vec<usize> = (0..=w).collect();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); w + 1];
    for r in pattern.rows() {
        let (u, v) = (r.start - 1, r.end);
        let (ru, rv) = (find(&mut uf, u), find(&mut uf, v));
        if ru == rv {
            return Err(ForestError::CycleDetected);
        }
        uf[ru] = rv;
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut parent: Vec<Option<usize>> = vec![None; w + 1];
    let mut seen = vec![false; w + 1];
    for root in 0..=w {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut stack = vec![root];
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    parent[v] = Some(u);
                    stack.push(v);
                }
            }
        }
    }

    let sink = w + 1;
    let mut monomials = vec![FormMonomial {
        coefficient: Rat::one(),
        factors: Vec::with_capacity(w),
    }];
    for v in 1..=w {
        let options: Vec<(i64, (usize, usize))> = match parent[v] {
            None => vec![(1, (v, sink))],
            Some(l) if l < v => vec![(-1, (l, v))],
            Some(r) => vec![(1, (v, r)), (-1, (v, sink))],
        };
        monomials = monomials
            .into_iter()
            .flat_map(|m| {
                options.iter().map(move |&(sign, pair)| {
                    let mut factors = m.factors.clone();
                    factors.push(pair);
                    FormMonomial {
                        coefficient: &m.coefficient * &Rat::from_int(sign),
                        factors,
                    }
                })
            })
            .collect();
    }
    Ok(monomials)
}

/// `t_0 = 1, t_1, …, t_w, t_{w+1} = 0` from the interior values.
pub fn full_coordinates(interior: &[Rat]) -> Vec<Rat> {
    let mut t = Vec::with_capacity(interior.len() + 2);
    t.push(Rat::one());
    t.extend_from_slice(interior);
    t.push(Rat::zero());
    t
}

/// Random rationals `1 > t_1 > … > t_w > 0`.
pub fn random_simplex_point<R: Rng>(rng: &mut R, w: usize) -> Vec<Rat> {
    const DEN: i64 = 100_003;
    let mut nums: Vec<i64> = Vec::with_capacity(w);
    while nums.len() < w {
        let x = rng.gen_range(1..DEN);
        if !nums.contains(&x) {
            nums.push(x);
        }
    }
    nums.sort_unstable_by(|a, b| b.cmp(a));
    nums.into_iter().map(|x| Rat::new(x, DEN)).collect()
}

/// Coefficient of `dt_1 ∧ … ∧ dt_w` in `∏_{rows} t_b/(t_{a-1} − t_b) ∏ dt_i/t_i`
/// at the full coordinates `t`.
pub fn simplicial_coefficient(pattern: &Pattern, t: &[Rat]) -> Option<Rat> {
    let w = pattern.width();
    let mut v = Rat::one();
    for r in pattern.rows() {
        let num = t[r.end].clone();
        let den = &t[r.start - 1] - &t[r.end];
        v = v * num * den.recip()?;
    }
    for ti in &t[1..=w] {
        v *= ti.recip()?;
    }
    Some(v)
}

fn det(mut m: Vec<Vec<Rat>>) -> Rat {
    let n = m.len();
    let mut result = Rat::one();
    for col in 0..n {
        let Some(p) = (col..n).find(|&r| !m[r][col].is_zero()) else {
            return Rat::zero();
        };
        if p != col {
            m.swap(p, col);
            result = -result;
        }
        let pivot = m[col][col].clone();
        result *= pivot.clone();
        for r in col + 1..n {
            if m[r][col].is_zero() {
                continue;
            }
            let f = &m[r][col] / &pivot;
            for c in col..n {
                let delta = &f * &m[col][c];
                m[r][c] = &m[r][c] - &delta;
            }
        }
    }
    result
}

/// Coefficients of the wedge `ω_{f_1} ∧ … ∧ ω_{f_m}` on each basis element
/// `dt_{s_1} ∧ … ∧ dt_{s_m}` (`s` ascending, variables `1..=w`), at the full
/// coordinates `t`. Zero entries are omitted.
pub fn wedge_coefficients(factors: &[(usize, usize)], t: &[Rat]) -> Option<Vec<(Vec<usize>, Rat)>> {
    let w = t.len() - 2;
    let m = factors.len();
    let mut scale = Rat::one();
    for &(i, j) in factors {
        scale *= (&t[i] - &t[j]).recip()?;
    }
    // linear form of d(t_i − t_j) on dt_1..dt_w
    let forms: Vec<Vec<Rat>> = factors
        .iter()
        .map(|&(i, j)| {
            (1..=w)
                .map(|v| {
                    if v == i {
                        Rat::one()
                    } else if v == j {
                        Rat::from_int(-1)
                    } else {
                        Rat::zero()
                    }
                })
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    let mut subset: Vec<usize> = (0..m).collect();
    if m > w {
        return Some(out);
    }
    loop {
        let minor: Vec<Vec<Rat>> = forms
            .iter()
            .map(|f| subset.iter().map(|&c| f[c].clone()).collect())
            .collect();
        let d = det(minor);
        if !d.is_zero() {
            out.push((subset.iter().map(|&c| c + 1).collect(), d * scale.clone()));
        }
        // next m-subset of 0..w in lexicographic order
        let mut k = m;
        while k > 0 && subset[k - 1] == w - m + k - 1 {
            k -= 1;
        }
        if k == 0 {
            return Some(out);
        }
        subset[k - 1] += 1;
        for l in k..m {
            subset[l] = subset[l - 1] + 1;
        }
    }
}

/// Top-degree coefficient of a signed sum of monomials at `t`.
pub fn monomials_coefficient(monomials: &[FormMonomial], t: &[Rat]) -> Option<Rat> {
    let mut total = Rat::zero();
    for m in monomials {
        for (_, c) in wedge_coefficients(&m.factors, t)? {
            total += &m.coefficient * &c;
        }
    }
    Some(total)
}

/// Checks the expansion against the simplicial integrand at `points` random
/// points, exactly.
pub fn check_forest_identity<R: Rng>(
    pattern: &Pattern,
    monomials: &[FormMonomial],
    rng: &mut R,
    points: usize,
) -> bool {
    (0..points).all(|_| {
        let t = full_coordinates(&random_simplex_point(rng, pattern.width()));
        simplicial_coefficient(pattern, &t) == monomials_coefficient(monomials, &t)
    })
}
