//! Exact rational-coefficient polynomial arithmetic over indexed point
//! coordinates.
//!
//! Variables are pairs `(point, axis)` with 1-based indices; in dimensions up
//! to four they render as `x1, y1, z1, w1, x2, ...`. Polynomials are kept in a
//! canonical form: terms sorted by graded lexicographic order on the variable
//! sequence `(point, axis)`, no zero coefficients, no duplicate monomials.
//! Rendering iterates terms from the greatest monomial down, so the printed
//! form is byte-stable.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Exact coefficient type. Always reduced, denominator positive.
pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AlgebraError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(u32, u32),
    #[error("axis {axis} out of range for dimension {dim}")]
    AxisOutOfRange { axis: u32, dim: u32 },
    #[error("point and axis indices are 1-based")]
    ZeroIndex,
    #[error("operation undefined for the zero polynomial")]
    ZeroPolynomial,
    #[error("variable ({0},{1}) has no assigned value")]
    UnboundVariable(u32, u32),
    #[error("parse error: {0}")]
    Parse(String),
}

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Parse `p` or `p/q` into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational, AlgebraError> {
    let s = s.trim();
    let bad = || AlgebraError::Parse(format!("invalid rational `{s}`"));
    match s.split_once('/') {
        None => {
            let n: BigInt = s.parse().map_err(|_| bad())?;
            Ok(Rational::from_integer(n))
        }
        Some((p, q)) => {
            let n: BigInt = p.trim().parse().map_err(|_| bad())?;
            let d: BigInt = q.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(Rational::new(n, d))
        }
    }
}

/// Render a rational as `p` or `p/q`.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    use num::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

/// Exact conversion: every finite f64 is a dyadic rational.
pub fn rational_from_f64(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}

fn axis_letter(axis: u32) -> Option<char> {
    match axis {
        1 => Some('x'),
        2 => Some('y'),
        3 => Some('z'),
        4 => Some('w'),
        _ => None,
    }
}

/// Variable name used in canonical rendering: `x1`, `y2`, ... for axes up to
/// four, `a5_1` style beyond that.
pub fn var_name(point: u32, axis: u32) -> String {
    match axis_letter(axis) {
        Some(c) => format!("{c}{point}"),
        None => format!("a{axis}_{point}"),
    }
}

/// A monomial in the coordinates of indexed points. Maps `(point, axis)` to a
/// positive exponent; zero exponents are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct CoordMonomial {
    exps: BTreeMap<(u32, u32), u32>,
}

impl CoordMonomial {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn var(point: u32, axis: u32) -> Self {
        let mut exps = BTreeMap::new();
        exps.insert((point, axis), 1);
        Self { exps }
    }

    pub fn from_exponents(it: impl IntoIterator<Item = ((u32, u32), u32)>) -> Self {
        let mut exps = BTreeMap::new();
        for ((p, a), e) in it {
            if e > 0 {
                *exps.entry((p, a)).or_insert(0) += e;
            }
        }
        Self { exps }
    }

    pub fn degree(&self) -> u32 {
        self.exps.values().sum()
    }

    pub fn exponent(&self, point: u32, axis: u32) -> u32 {
        self.exps.get(&(point, axis)).copied().unwrap_or(0)
    }

    pub fn exponents(&self) -> impl Iterator<Item = (&(u32, u32), &u32)> {
        self.exps.iter()
    }

    pub fn is_one(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn points(&self) -> BTreeSet<u32> {
        self.exps.keys().map(|&(p, _)| p).collect()
    }

    /// Exponent multiindex of a single point, as a dense vector over axes
    /// `1..=dim`.
    pub fn point_multiindex(&self, point: u32, dim: u32) -> Vec<u32> {
        (1..=dim).map(|a| self.exponent(point, a)).collect()
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut exps = self.exps.clone();
        for (&k, &e) in &other.exps {
            *exps.entry(k).or_insert(0) += e;
        }
        Self { exps }
    }

    pub fn rename_points(&self, map: impl Fn(u32) -> u32) -> Self {
        Self::from_exponents(self.exps.iter().map(|(&(p, a), &e)| ((map(p), a), e)))
    }
}

impl Ord for CoordMonomial {
    // Graded lex: higher total degree is greater; ties broken by the first
    // variable (in (point, axis) order) where the exponents differ, larger
    // exponent winning. Canonical rendering iterates from greatest down.
    fn cmp(&self, other: &Self) -> Ordering {
        match self.degree().cmp(&other.degree()) {
            Ordering::Equal => {}
            ord => return ord,
        }
        let mut a = self.exps.iter().peekable();
        let mut b = other.exps.iter().peekable();
        loop {
            match (a.peek(), b.peek()) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some(&(ka, ea)), Some(&(kb, eb))) => match ka.cmp(kb) {
                    // Earlier variable with a positive exponent wins.
                    Ordering::Less => return Ordering::Greater,
                    Ordering::Greater => return Ordering::Less,
                    Ordering::Equal => match ea.cmp(eb) {
                        Ordering::Equal => {
                            a.next();
                            b.next();
                        }
                        ord => return ord,
                    },
                },
            }
        }
    }
}

impl PartialOrd for CoordMonomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for CoordMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return write!(f, "1");
        }
        // Render variables letter-first (`x2*y1`, not `y1*x2`).
        let mut vars: Vec<(&(u32, u32), &u32)> = self.exps.iter().collect();
        vars.sort_by_key(|(&(p, a), _)| (a, p));
        let mut first = true;
        for (&(p, a), &e) in vars {
            if !first {
                write!(f, "*")?;
            }
            first = false;
            write!(f, "{}", var_name(p, a))?;
            if e > 1 {
                write!(f, "^{e}")?;
            }
        }
        Ok(())
    }
}

/// Canonical multivariate polynomial with exact rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoordPolynomial {
    dim: u32,
    terms: BTreeMap<CoordMonomial, Rational>,
}

impl CoordPolynomial {
    pub fn zero(dim: u32) -> Self {
        Self { dim, terms: BTreeMap::new() }
    }

    pub fn constant(dim: u32, c: Rational) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(CoordMonomial::one(), c);
        p
    }

    pub fn one(dim: u32) -> Self {
        Self::constant(dim, Rational::one())
    }

    pub fn var(dim: u32, point: u32, axis: u32) -> Result<Self, AlgebraError> {
        if point == 0 || axis == 0 {
            return Err(AlgebraError::ZeroIndex);
        }
        if axis > dim {
            return Err(AlgebraError::AxisOutOfRange { axis, dim });
        }
        let mut p = Self::zero(dim);
        p.add_term(CoordMonomial::var(point, axis), Rational::one());
        Ok(p)
    }

    pub fn from_terms(
        dim: u32,
        terms: impl IntoIterator<Item = (Rational, CoordMonomial)>,
    ) -> Self {
        let mut p = Self::zero(dim);
        for (c, m) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    /// Terms in canonical (descending monomial) order.
    pub fn terms(&self) -> impl Iterator<Item = (&CoordMonomial, &Rational)> {
        self.terms.iter().rev()
    }

    /// Coefficient of the greatest monomial under the canonical order.
    pub fn leading_coefficient(&self) -> Option<&Rational> {
        self.terms.iter().next_back().map(|(_, c)| c)
    }

    pub fn coefficient(&self, m: &CoordMonomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn points_used(&self) -> BTreeSet<u32> {
        self.terms.keys().flat_map(|m| m.points()).collect()
    }

    fn add_term(&mut self, m: CoordMonomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get().clone() + c;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    fn check_dim(&self, other: &Self) -> Result<(), AlgebraError> {
        if self.dim != other.dim {
            Err(AlgebraError::DimensionMismatch(self.dim, other.dim))
        } else {
            Ok(())
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        Self {
            dim: self.dim,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect(),
        }
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero(self.dim);
        }
        Self {
            dim: self.dim,
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k.clone() * c)).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.check_dim(other)?;
        let mut out = Self::zero(self.dim);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca.clone() * cb.clone());
            }
        }
        Ok(out)
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut out = Self::one(self.dim);
        for _ in 0..n {
            out = out.mul(self).expect("same dim");
        }
        out
    }

    /// Exact partial derivative with respect to coordinate `(point, axis)`.
    pub fn derivative(&self, point: u32, axis: u32) -> Self {
        let mut out = Self::zero(self.dim);
        for (m, c) in &self.terms {
            let e = m.exponent(point, axis);
            if e == 0 {
                continue;
            }
            let reduced = CoordMonomial::from_exponents(
                m.exponents()
                    .map(|(&k, &v)| (k, if k == (point, axis) { v - 1 } else { v })),
            );
            out.add_term(reduced, c.clone() * rat(e as i64));
        }
        out
    }

    /// Exact evaluation; every variable occurring in the polynomial must be
    /// bound.
    pub fn eval(
        &self,
        assign: &BTreeMap<(u32, u32), Rational>,
    ) -> Result<Rational, AlgebraError> {
        let mut acc = Rational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (&(p, a), &e) in m.exponents() {
                let v = assign
                    .get(&(p, a))
                    .ok_or(AlgebraError::UnboundVariable(p, a))?;
                for _ in 0..e {
                    t *= v.clone();
                }
            }
            acc += t;
        }
        Ok(acc)
    }

    /// Substitute every variable by a polynomial (exact composition).
    pub fn substitute(
        &self,
        dim_out: u32,
        f: impl Fn(u32, u32) -> CoordPolynomial,
    ) -> Result<Self, AlgebraError> {
        let mut out = Self::zero(dim_out);
        for (m, c) in &self.terms {
            let mut t = Self::constant(dim_out, c.clone());
            for (&(p, a), &e) in m.exponents() {
                let sub = f(p, a);
                t = t.mul(&sub.pow(e))?;
            }
            out = out.add(&t)?;
        }
        Ok(out)
    }

    pub fn rename_points(&self, map: impl Fn(u32) -> u32) -> Self {
        Self::from_terms(
            self.dim,
            self.terms
                .iter()
                .map(|(m, c)| (c.clone(), m.rename_points(&map))),
        )
    }

    /// Split a nonzero polynomial as `content * primitive`: the primitive part
    /// has integer coefficients with gcd 1 and a positive leading coefficient.
    pub fn content_normalize(&self) -> Result<(Self, Rational), AlgebraError> {
        let content = content_of(self.terms.values().rev())?;
        Ok((self.scale(&(Rational::one() / content.clone())), content))
    }
}

/// Content of a coefficient list given in leading-first order: the rational
/// `c` such that dividing through by it leaves coprime integers with the
/// leading one positive.
pub(crate) fn content_of<'a>(
    coeffs: impl Iterator<Item = &'a Rational> + Clone,
) -> Result<Rational, AlgebraError> {
    use num::Integer;
    let mut lcm_den = BigInt::one();
    let mut leading_sign = None;
    for c in coeffs.clone() {
        lcm_den = lcm_den.lcm(c.denom());
        if leading_sign.is_none() {
            leading_sign = Some(if c.is_negative() {
                -BigInt::one()
            } else {
                BigInt::one()
            });
        }
    }
    let leading_sign = leading_sign.ok_or(AlgebraError::ZeroPolynomial)?;
    let mut gcd_num = BigInt::zero();
    for c in coeffs {
        let scaled = c.numer() * (&lcm_den / c.denom());
        gcd_num = gcd_num.gcd(&scaled);
    }
    Ok(Rational::new(leading_sign * gcd_num, lcm_den))
}

impl fmt::Display for CoordPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in self.terms() {
            let neg = c.is_negative();
            let abs = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            first = false;
            if m.is_one() {
                write!(f, "{}", format_rational(&abs))?;
            } else if abs.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{}*{}", format_rational(&abs), m)?;
            }
        }
        Ok(())
    }
}
