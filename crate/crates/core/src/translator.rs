//! Translation of expanded coordinate polynomials into moment-symbol
//! expressions, and of moment expressions into derivative expressions.
//!
//! Each monomial maps independently: the exponent vector of point `j` becomes
//! the multiindex of one moment symbol, so `x1^2*y2^2` turns into `mu20*mu02`.
//! The derivative translation swaps every moment symbol for the partial
//! derivative of the same multiindex and replaces the `mu00` denominator by a
//! Jacobian power equal to the g count of the source spec.

use crate::algebra::{
    content_of, format_rational, parse_rational, AlgebraError, CoordPolynomial, Rational,
};
use crate::generators::PISpec;
use num::{One, Zero};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TranslateError {
    #[error("expected a moment-form expression")]
    NotMomentForm,
    #[error("expected a derivative-form expression")]
    NotDerivForm,
    #[error("expansion does not match the spec: {0}")]
    SpecMismatch(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("invalid expression json: {0}")]
    Json(String),
}

/// Multiindex of a moment or derivative symbol, one entry per axis.
pub type MultiIndex = Vec<u32>;

pub fn multiindex_order(idx: &[u32]) -> u32 {
    idx.iter().sum()
}

/// Descending symbol order used for canonical term layout: higher order first,
/// then lexicographically larger multiindex first.
fn symbol_cmp(a: &[u32], b: &[u32]) -> Ordering {
    multiindex_order(b)
        .cmp(&multiindex_order(a))
        .then_with(|| b.cmp(a))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExprForm {
    Moments,
    Derivatives,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    /// Divide by `mu00^power`.
    Mu00,
    /// Divide by `J^power`.
    Jacobian,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Normalization {
    pub kind: NormKind,
    pub power: u32,
}

/// One term: an exact coefficient times a multiset of symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub coeff: Rational,
    /// Sorted descending under `symbol_cmp`.
    pub symbols: Vec<MultiIndex>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct ExprMeta {
    /// Degree: number of distinct points in the source spec.
    pub m: u32,
    /// Number of g factors in the source spec (the Jacobian power of the
    /// derivative form).
    pub k: u32,
    /// Constant factored out during content normalization, as `p` or `p/q`.
    pub constant: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

/// A polynomial in moment or derivative symbols plus a normalization law.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvariantExpr {
    pub dim: u32,
    pub form: ExprForm,
    pub terms: Vec<Term>,
    pub normalization: Normalization,
    pub meta: ExprMeta,
}

impl InvariantExpr {
    /// Build a moment-form expression directly from (coefficient, symbols)
    /// pairs; terms are merged and canonically ordered, nothing is normalized
    /// away.
    pub fn from_terms(
        dim: u32,
        form: ExprForm,
        terms: impl IntoIterator<Item = (Rational, Vec<MultiIndex>)>,
        normalization: Normalization,
        meta: ExprMeta,
    ) -> Self {
        let mut merged: Vec<Term> = Vec::new();
        for (coeff, mut symbols) in terms {
            symbols.sort_by(|a, b| symbol_cmp(a, b));
            match merged.iter_mut().find(|t| t.symbols == symbols) {
                Some(t) => t.coeff += coeff,
                None => merged.push(Term { coeff, symbols }),
            }
        }
        merged.retain(|t| !t.coeff.is_zero());
        merged.sort_by(|a, b| term_cmp(a, b));
        Self { dim, form, terms: merged, normalization, meta }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Highest symbol order appearing anywhere in the expression.
    pub fn max_order(&self) -> u32 {
        self.terms
            .iter()
            .flat_map(|t| t.symbols.iter().map(|s| multiindex_order(s)))
            .max()
            .unwrap_or(0)
    }

    /// True iff any symbol has order one. An expression like
    /// `mu20*mu01^2 - 2*mu11*mu10*mu01 + mu02*mu10^2` vanishes identically
    /// under central moments but its derivative translation does not.
    pub fn contains_first_order(&self) -> bool {
        self.terms
            .iter()
            .any(|t| t.symbols.iter().any(|s| multiindex_order(s) == 1))
    }

    /// Human-readable rendering, e.g. `mu20*mu02 - mu11^2` or
    /// `Hxx*Hyy - Hxy^2`.
    pub fn render(&self) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        for (i, t) in self.terms.iter().enumerate() {
            let neg = t.coeff < Rational::zero();
            let abs = if neg { -t.coeff.clone() } else { t.coeff.clone() };
            if i == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let mut parts: Vec<String> = Vec::new();
            if !abs.is_one() || t.symbols.is_empty() {
                parts.push(format_rational(&abs));
            }
            let mut run: Option<(&MultiIndex, u32)> = None;
            let flush = |run: &mut Option<(&MultiIndex, u32)>, parts: &mut Vec<String>| {
                if let Some((idx, n)) = run.take() {
                    let name = self.symbol_name(idx);
                    if n == 1 {
                        parts.push(name);
                    } else {
                        parts.push(format!("{name}^{n}"));
                    }
                }
            };
            for s in &t.symbols {
                match &mut run {
                    Some((idx, n)) if *idx == s => *n += 1,
                    _ => {
                        flush(&mut run, &mut parts);
                        run = Some((s, 1));
                    }
                }
            }
            flush(&mut run, &mut parts);
            out.push_str(&parts.join("*"));
        }
        match (&self.normalization.kind, self.normalization.power) {
            (_, 0) => out,
            (NormKind::Mu00, w) => format!("({out}) / mu{}^{w}", "0".repeat(self.dim as usize)),
            (NormKind::Jacobian, k) => format!("({out}) / J^{k}"),
        }
    }

    fn symbol_name(&self, idx: &[u32]) -> String {
        match self.form {
            ExprForm::Moments => {
                let digits: Vec<String> = idx.iter().map(|d| d.to_string()).collect();
                format!("mu{}", digits.join(""))
            }
            ExprForm::Derivatives => {
                let axes = ['x', 'y', 'z', 'w'];
                let mut s = String::from("H");
                for (a, &e) in idx.iter().enumerate() {
                    for _ in 0..e {
                        s.push(*axes.get(a).unwrap_or(&'?'));
                    }
                }
                s
            }
        }
    }

    /// Serialize to the canonical JSON interchange form.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&WireExpr::from(self)).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self, TranslateError> {
        let wire: WireExpr =
            serde_json::from_str(s).map_err(|e| TranslateError::Json(e.to_string()))?;
        wire.try_into()
    }
}

fn term_cmp(a: &Term, b: &Term) -> Ordering {
    // Compare symbol lists lexicographically under the descending symbol
    // order; longer products follow shorter ones of equal prefix.
    let mut ia = a.symbols.iter();
    let mut ib = b.symbols.iter();
    loop {
        match (ia.next(), ib.next()) {
            (None, None) => return a.coeff.cmp(&b.coeff),
            (None, Some(_)) => return Ordering::Less,
            (Some(_), None) => return Ordering::Greater,
            (Some(x), Some(y)) => match symbol_cmp(x, y) {
                Ordering::Equal => continue,
                ord => return ord,
            },
        }
    }
}

// ---------------------------------------------------------------------------
// Wire format
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct WireTerm {
    coeff: String,
    symbols: Vec<Vec<u32>>,
}

#[derive(Serialize, Deserialize)]
struct WireExpr {
    dim: u32,
    form: ExprForm,
    terms: Vec<WireTerm>,
    normalization: Normalization,
    meta: ExprMeta,
}

impl From<&InvariantExpr> for WireExpr {
    fn from(e: &InvariantExpr) -> Self {
        WireExpr {
            dim: e.dim,
            form: e.form,
            terms: e
                .terms
                .iter()
                .map(|t| WireTerm {
                    coeff: format_rational(&t.coeff),
                    symbols: t.symbols.clone(),
                })
                .collect(),
            normalization: e.normalization.clone(),
            meta: e.meta.clone(),
        }
    }
}

impl TryFrom<WireExpr> for InvariantExpr {
    type Error = TranslateError;
    fn try_from(w: WireExpr) -> Result<Self, TranslateError> {
        let mut terms = Vec::new();
        for t in w.terms {
            let coeff = parse_rational(&t.coeff)?;
            for s in &t.symbols {
                if s.len() != w.dim as usize {
                    return Err(TranslateError::Json(format!(
                        "symbol {s:?} does not match dimension {}",
                        w.dim
                    )));
                }
            }
            terms.push((coeff, t.symbols));
        }
        Ok(InvariantExpr::from_terms(
            w.dim,
            w.form,
            terms,
            w.normalization,
            w.meta,
        ))
    }
}

// ---------------------------------------------------------------------------
// Translation
// ---------------------------------------------------------------------------

/// Translate an expanded spec polynomial into a moment expression. The result
/// is content-normalized; the extracted constant is recorded in the metadata.
/// Affine (all-g) specs get a `mu00^(m+k)` normalization.
pub fn to_moments(p: &CoordPolynomial, spec: &PISpec) -> Result<InvariantExpr, TranslateError> {
    let dim = spec.dim;
    let freq = spec.frequencies();
    let m = spec.point_count();
    let k = spec.g_count();
    let mut raw_terms: Vec<(Rational, Vec<MultiIndex>)> = Vec::new();
    for (mono, coeff) in p.terms() {
        let mut symbols: Vec<MultiIndex> = Vec::new();
        for &point in mono.points().iter() {
            let idx = mono.point_multiindex(point, dim);
            // Order bookkeeping: each point must appear with its spec
            // frequency in every monomial of the expansion.
            if let Some(&n) = freq.get(&point) {
                if multiindex_order(&idx) != n {
                    return Err(TranslateError::SpecMismatch(format!(
                        "point {point} has degree {} but frequency {n} in `{spec}`",
                        multiindex_order(&idx)
                    )));
                }
            }
            symbols.push(idx);
        }
        raw_terms.push((coeff.clone(), symbols));
    }

    let normalization = Normalization {
        kind: NormKind::Mu00,
        power: if spec.is_affine() && !p.is_zero() { m + k } else { 0 },
    };
    let mut expr = InvariantExpr::from_terms(
        dim,
        ExprForm::Moments,
        raw_terms,
        normalization,
        ExprMeta {
            m,
            k,
            constant: "1".into(),
            source: Some(spec.to_string()),
        },
    );
    if !expr.is_zero() {
        let content = content_of(expr.terms.iter().map(|t| &t.coeff))?;
        for t in &mut expr.terms {
            t.coeff = t.coeff.clone() / content.clone();
        }
        expr.meta.constant = format_rational(&content);
    }
    Ok(expr)
}

/// Expand a spec and translate it in one step.
pub fn spec_to_moments(spec: &PISpec) -> Result<InvariantExpr, TranslateError> {
    let p = spec
        .expand()
        .map_err(|e| TranslateError::SpecMismatch(e.to_string()))?;
    to_moments(&p, spec)
}

/// Substitute same-order derivatives for moments. Terms and coefficients are
/// untouched; the normalization becomes `J^k` with `k` the g count recorded in
/// the metadata.
pub fn to_derivatives(e: &InvariantExpr) -> Result<InvariantExpr, TranslateError> {
    if e.form != ExprForm::Moments {
        return Err(TranslateError::NotMomentForm);
    }
    let mut out = e.clone();
    out.form = ExprForm::Derivatives;
    out.normalization = Normalization { kind: NormKind::Jacobian, power: e.meta.k };
    Ok(out)
}

/// True iff the moment expression contains an order-1 symbol: it vanishes
/// identically under central moments while its derivative translation does
/// not.
pub fn central_shift_note(e: &InvariantExpr) -> Result<bool, TranslateError> {
    if e.form != ExprForm::Moments {
        return Err(TranslateError::NotMomentForm);
    }
    Ok(e.contains_first_order())
}
