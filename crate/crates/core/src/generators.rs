//! Generating functions and primitive-invariant specs.
//!
//! `f(i,j)` is the inner product of the coordinate vectors of points `i` and
//! `j`; `g(i1,...,id)` is the determinant of the matrix whose rows are the
//! coordinate vectors of the listed points. A [`PISpec`] is an ordered product
//! of such factors; expanding it yields the coordinate polynomial that the
//! translator turns into a moment or derivative expression.

use crate::algebra::{rat, AlgebraError, CoordMonomial, CoordPolynomial};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SpecError {
    #[error("f takes exactly 2 point indices, got {0}")]
    BadFArity(usize),
    #[error("g takes exactly {dim} point indices in dimension {dim}, got {got}")]
    BadGArity { dim: u32, got: usize },
    #[error("point indices are 1-based")]
    ZeroIndex,
    #[error("spec has no factors")]
    Empty,
    #[error("cannot infer dimension: spec has no g factor; pass the dimension explicitly")]
    UnknownDimension,
    #[error("g factors of different arity in one spec: {0} vs {1}")]
    MixedArity(usize, usize),
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorKind {
    F,
    G,
}

/// One generating-function factor with its point indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GenFactor {
    pub kind: FactorKind,
    pub points: Vec<u32>,
}

impl GenFactor {
    pub fn f(i: u32, j: u32) -> Self {
        Self { kind: FactorKind::F, points: vec![i, j] }
    }

    pub fn g(points: impl Into<Vec<u32>>) -> Self {
        Self { kind: FactorKind::G, points: points.into() }
    }
}

impl fmt::Display for GenFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.kind {
            FactorKind::F => "f",
            FactorKind::G => "g",
        };
        let idx: Vec<String> = self.points.iter().map(|p| p.to_string()).collect();
        write!(f, "{name}({})", idx.join(","))
    }
}

/// A primitive-invariant spec: a dimension and an ordered product of factors.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PISpec {
    pub dim: u32,
    pub factors: Vec<GenFactor>,
}

impl PISpec {
    pub fn new(dim: u32, factors: Vec<GenFactor>) -> Result<Self, SpecError> {
        let spec = Self { dim, factors };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        if self.factors.is_empty() {
            return Err(SpecError::Empty);
        }
        for fac in &self.factors {
            if fac.points.iter().any(|&p| p == 0) {
                return Err(SpecError::ZeroIndex);
            }
            match fac.kind {
                FactorKind::F => {
                    if fac.points.len() != 2 {
                        return Err(SpecError::BadFArity(fac.points.len()));
                    }
                }
                FactorKind::G => {
                    if fac.points.len() != self.dim as usize {
                        return Err(SpecError::BadGArity {
                            dim: self.dim,
                            got: fac.points.len(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Number of distinct points used (the degree of the invariant).
    pub fn point_count(&self) -> u32 {
        let mut pts: Vec<u32> = self.factors.iter().flat_map(|f| f.points.iter().copied()).collect();
        pts.sort_unstable();
        pts.dedup();
        pts.len() as u32
    }

    /// Number of g factors.
    pub fn g_count(&self) -> u32 {
        self.factors.iter().filter(|f| f.kind == FactorKind::G).count() as u32
    }

    /// Number of f factors.
    pub fn f_count(&self) -> u32 {
        self.factors.iter().filter(|f| f.kind == FactorKind::F).count() as u32
    }

    /// Appearance frequency of every point across factors; this is the moment
    /// (or derivative) order contributed by that point.
    pub fn frequencies(&self) -> BTreeMap<u32, u32> {
        let mut freq = BTreeMap::new();
        for fac in &self.factors {
            for &p in &fac.points {
                *freq.entry(p).or_insert(0) += 1;
            }
        }
        freq
    }

    pub fn is_affine(&self) -> bool {
        self.f_count() == 0
    }

    /// Product of all factor polynomials, in canonical form. A zero result is
    /// legal (e.g. a g factor with a repeated point).
    pub fn expand(&self) -> Result<CoordPolynomial, SpecError> {
        self.validate()?;
        let mut out = CoordPolynomial::one(self.dim);
        for fac in &self.factors {
            let p = match fac.kind {
                FactorKind::F => eval_f(fac.points[0], fac.points[1], self.dim)?,
                FactorKind::G => eval_g(&fac.points, self.dim)?,
            };
            out = out.mul(&p)?;
        }
        Ok(out)
    }

    /// Canonical representative of the orbit under point relabeling and factor
    /// reordering: factors normalized (g points sorted, f points sorted), the
    /// factor list sorted, minimized over all relabelings of the used points.
    pub fn canonical(&self) -> PISpec {
        let pts: Vec<u32> = {
            let mut v: Vec<u32> =
                self.factors.iter().flat_map(|f| f.points.iter().copied()).collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        let m = pts.len();
        let mut best: Option<Vec<GenFactor>> = None;
        for perm in permutations(m) {
            // old label pts[i] -> new label perm[i] + 1
            let relabel: BTreeMap<u32, u32> = pts
                .iter()
                .zip(perm.iter())
                .map(|(&old, &new)| (old, new as u32 + 1))
                .collect();
            let mut factors: Vec<GenFactor> = self
                .factors
                .iter()
                .map(|f| {
                    let mut points: Vec<u32> =
                        f.points.iter().map(|p| relabel[p]).collect();
                    points.sort_unstable();
                    GenFactor { kind: f.kind, points }
                })
                .collect();
            factors.sort();
            if best.as_ref().map_or(true, |b| factors < *b) {
                best = Some(factors);
            }
        }
        PISpec { dim: self.dim, factors: best.unwrap_or_default() }
    }

    /// Parse `g(1,2)*g(1,2)` / `f(1,1)` style strings. The dimension is taken
    /// from the g arity when present, otherwise from `dim_hint`.
    pub fn parse(input: &str, dim_hint: Option<u32>) -> Result<Self, SpecError> {
        let bytes = input.as_bytes();
        let mut pos = 0usize;
        let mut factors = Vec::new();
        let skip_ws = |pos: &mut usize| {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
        };
        loop {
            skip_ws(&mut pos);
            if pos >= bytes.len() {
                return Err(SpecError::Parse { pos, msg: "expected factor".into() });
            }
            let kind = match bytes[pos] {
                b'f' | b'F' => FactorKind::F,
                b'g' | b'G' => FactorKind::G,
                c => {
                    return Err(SpecError::Parse {
                        pos,
                        msg: format!("expected `f` or `g`, found `{}`", c as char),
                    })
                }
            };
            pos += 1;
            skip_ws(&mut pos);
            if pos >= bytes.len() || bytes[pos] != b'(' {
                return Err(SpecError::Parse { pos, msg: "expected `(`".into() });
            }
            pos += 1;
            let mut points = Vec::new();
            loop {
                skip_ws(&mut pos);
                let start = pos;
                while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                    pos += 1;
                }
                if pos == start {
                    return Err(SpecError::Parse { pos, msg: "expected point index".into() });
                }
                let idx: u32 = input[start..pos]
                    .parse()
                    .map_err(|_| SpecError::Parse { pos, msg: "bad index".into() })?;
                points.push(idx);
                skip_ws(&mut pos);
                match bytes.get(pos) {
                    Some(b',') => pos += 1,
                    Some(b')') => {
                        pos += 1;
                        break;
                    }
                    _ => {
                        return Err(SpecError::Parse { pos, msg: "expected `,` or `)`".into() })
                    }
                }
            }
            factors.push(GenFactor { kind, points });
            skip_ws(&mut pos);
            match bytes.get(pos) {
                None => break,
                Some(b'*') => pos += 1,
                Some(c) => {
                    return Err(SpecError::Parse {
                        pos,
                        msg: format!("expected `*` or end, found `{}`", *c as char),
                    })
                }
            }
        }
        // Dimension: g arity wins; otherwise the hint.
        let mut g_arity: Option<usize> = None;
        for fac in &factors {
            if fac.kind == FactorKind::G {
                match g_arity {
                    None => g_arity = Some(fac.points.len()),
                    Some(a) if a != fac.points.len() => {
                        return Err(SpecError::MixedArity(a, fac.points.len()))
                    }
                    _ => {}
                }
            }
        }
        let dim = match (g_arity, dim_hint) {
            (Some(a), _) => a as u32,
            (None, Some(d)) => d,
            (None, None) => return Err(SpecError::UnknownDimension),
        };
        Self::new(dim, factors)
    }
}

impl fmt::Display for PISpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.factors.iter().map(|x| x.to_string()).collect();
        write!(f, "{}", parts.join("*"))
    }
}

/// Inner product of the coordinate vectors of points `i` and `j`.
pub fn eval_f(i: u32, j: u32, dim: u32) -> Result<CoordPolynomial, SpecError> {
    if i == 0 || j == 0 {
        return Err(SpecError::ZeroIndex);
    }
    let mut out = CoordPolynomial::zero(dim);
    for axis in 1..=dim {
        let t = CoordPolynomial::var(dim, i, axis)?.mul(&CoordPolynomial::var(dim, j, axis)?)?;
        out = out.add(&t)?;
    }
    Ok(out)
}

/// Determinant of the d-by-d matrix whose rows are the coordinate vectors of
/// the listed points; fully antisymmetric, zero on a repeated point.
pub fn eval_g(points: &[u32], dim: u32) -> Result<CoordPolynomial, SpecError> {
    if points.len() != dim as usize {
        return Err(SpecError::BadGArity { dim, got: points.len() });
    }
    if points.iter().any(|&p| p == 0) {
        return Err(SpecError::ZeroIndex);
    }
    let d = dim as usize;
    let mut out = CoordPolynomial::zero(dim);
    for (perm, sign) in signed_permutations(d) {
        let mono = CoordMonomial::from_exponents(
            (0..d).map(|row| ((points[row], perm[row] as u32 + 1), 1)),
        );
        out = out.add(&CoordPolynomial::from_terms(
            dim,
            [(rat(sign as i64), mono)],
        ))?;
    }
    Ok(out)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    heap_permute(&mut cur, n, &mut out);
    out
}

fn heap_permute(cur: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k <= 1 {
        out.push(cur.clone());
        return;
    }
    for i in 0..k {
        heap_permute(cur, k - 1, out);
        if k % 2 == 0 {
            cur.swap(i, k - 1);
        } else {
            cur.swap(0, k - 1);
        }
    }
}

fn parity(perm: &[usize]) -> i32 {
    let mut inv = 0;
    for i in 0..perm.len() {
        for j in i + 1..perm.len() {
            if perm[i] > perm[j] {
                inv += 1;
            }
        }
    }
    if inv % 2 == 0 {
        1
    } else {
        -1
    }
}

fn signed_permutations(n: usize) -> Vec<(Vec<usize>, i32)> {
    permutations(n)
        .into_iter()
        .map(|p| {
            let s = parity(&p);
            (p, s)
        })
        .collect()
}

/// Enumerate candidate specs with at most `m_max` distinct points and every
/// per-point frequency at most `order_max`, one representative per relabeling
/// orbit, zero expansions excluded. With `affine_only` set, only g factors are
/// used and their count is even.
pub fn enumerate_specs(
    dim: u32,
    m_max: u32,
    order_max: u32,
    affine_only: bool,
) -> Result<Vec<PISpec>, SpecError> {
    if dim == 0 || m_max == 0 || order_max == 0 {
        return Ok(Vec::new());
    }
    // Candidate factors over the label pool 1..=m_max. Repeated points inside a
    // g factor always expand to zero, so only strictly increasing tuples are
    // generated; f is symmetric, so i <= j.
    let mut candidates: Vec<GenFactor> = Vec::new();
    if !affine_only {
        for i in 1..=m_max {
            for j in i..=m_max {
                candidates.push(GenFactor::f(i, j));
            }
        }
    }
    for combo in combinations(m_max, dim) {
        candidates.push(GenFactor::g(combo));
    }

    let mut found: std::collections::BTreeSet<PISpec> = Default::default();
    let mut stack: Vec<GenFactor> = Vec::new();
    let mut freq: BTreeMap<u32, u32> = BTreeMap::new();
    enumerate_rec(
        &candidates,
        0,
        dim,
        order_max,
        affine_only,
        &mut stack,
        &mut freq,
        &mut found,
    )?;
    Ok(found.into_iter().collect())
}

#[allow(clippy::too_many_arguments)]
fn enumerate_rec(
    candidates: &[GenFactor],
    from: usize,
    dim: u32,
    order_max: u32,
    affine_only: bool,
    stack: &mut Vec<GenFactor>,
    freq: &mut BTreeMap<u32, u32>,
    found: &mut std::collections::BTreeSet<PISpec>,
) -> Result<(), SpecError> {
    if !stack.is_empty() {
        let complete = !affine_only || stack.iter().filter(|f| f.kind == FactorKind::G).count() % 2 == 0;
        if complete {
            let spec = PISpec { dim, factors: stack.clone() }.canonical();
            if !found.contains(&spec) && !spec.expand()?.is_zero() {
                found.insert(spec);
            }
        }
    }
    for (i, cand) in candidates.iter().enumerate().skip(from) {
        let fits = cand
            .points
            .iter()
            .all(|p| freq.get(p).copied().unwrap_or(0) < order_max);
        if !fits {
            continue;
        }
        for &p in &cand.points {
            *freq.entry(p).or_insert(0) += 1;
        }
        stack.push(cand.clone());
        enumerate_rec(candidates, i, dim, order_max, affine_only, stack, freq, found)?;
        stack.pop();
        for &p in &cand.points {
            *freq.get_mut(&p).unwrap() -= 1;
        }
    }
    Ok(())
}

/// Strictly increasing k-tuples from 1..=n.
fn combinations(n: u32, k: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: u32, n: u32, k: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == k as usize {
            out.push(cur.clone());
            return;
        }
        for v in start..=n {
            cur.push(v);
            rec(v + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(1, n, k, &mut cur, &mut out);
    out
}
