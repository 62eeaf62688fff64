//! Measurement substrate for the derivative side: exactly differentiable
//! scalar fields (polynomials or ratios of polynomials), composition with
//! affine and projective maps, jets, derivative-expression evaluation, and a
//! finite-difference oracle.
//!
//! Fields live over the coordinates of point 1, so the polynomial machinery is
//! shared with the expansion engine.

use crate::algebra::{
    rat, rational_to_f64, AlgebraError, CoordPolynomial, Rational,
};
use crate::maps::{MapError, ProjectiveMap, RationalAffineMap};
use crate::translator::{ExprForm, InvariantExpr, MultiIndex, NormKind};
use num::{One, Zero};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FieldError {
    #[error("evaluation at a pole of the field")]
    Pole,
    #[error("jet of order {have} does not cover a symbol of order {need}")]
    InsufficientJetOrder { have: u32, need: u32 },
    #[error("zero Jacobian in a normalized derivative expression")]
    ZeroJacobian,
    #[error("expected a derivative-form expression")]
    NotDerivForm,
    #[error("dimension mismatch: field {field}, other {other}")]
    DimMismatch { field: u32, other: u32 },
    #[error("non-finite value in finite-difference stencil")]
    NonFiniteStencil,
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Map(#[from] MapError),
}

fn assign_point1(p: &[Rational]) -> BTreeMap<(u32, u32), Rational> {
    p.iter()
        .enumerate()
        .map(|(a, v)| ((1u32, a as u32 + 1), v.clone()))
        .collect()
}

/// A scalar field H: polynomial or ratio of polynomials with exact rational
/// coefficients. Closed under partial differentiation and under composition
/// with affine and projective maps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScalarField {
    num: CoordPolynomial,
    den: CoordPolynomial,
}

impl ScalarField {
    pub fn from_poly(p: CoordPolynomial) -> Self {
        let one = CoordPolynomial::one(p.dim());
        Self { num: p, den: one }
    }

    pub fn from_ratio(num: CoordPolynomial, den: CoordPolynomial) -> Result<Self, FieldError> {
        if num.dim() != den.dim() {
            return Err(FieldError::DimMismatch { field: num.dim(), other: den.dim() });
        }
        if den.is_zero() {
            return Err(FieldError::Pole);
        }
        Ok(Self { num, den })
    }

    pub fn dim(&self) -> u32 {
        self.num.dim()
    }

    pub fn numerator(&self) -> &CoordPolynomial {
        &self.num
    }

    pub fn denominator(&self) -> &CoordPolynomial {
        &self.den
    }

    pub fn is_polynomial(&self) -> bool {
        self.den == CoordPolynomial::one(self.dim())
    }

    pub fn mul(&self, other: &Self) -> Result<Self, FieldError> {
        Ok(Self {
            num: self.num.mul(&other.num)?,
            den: self.den.mul(&other.den)?,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self, FieldError> {
        Ok(Self {
            num: self
                .num
                .mul(&other.den)?
                .add(&other.num.mul(&self.den)?)?,
            den: self.den.mul(&other.den)?,
        })
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Self { num: self.num.scale(c), den: self.den.clone() }
    }

    /// Exact partial derivative with respect to axis `a` (1-based), by the
    /// quotient rule.
    pub fn partial(&self, axis: u32) -> Self {
        if self.is_polynomial() {
            return Self::from_poly(self.num.derivative(1, axis));
        }
        let np = self.num.derivative(1, axis);
        let dp = self.den.derivative(1, axis);
        let num = np
            .mul(&self.den)
            .and_then(|a| a.sub(&self.num.mul(&dp).expect("same dim")))
            .expect("same dim");
        let den = self.den.mul(&self.den).expect("same dim");
        Self { num, den }
    }

    /// Iterated partials along a multiindex.
    pub fn partial_multi(&self, idx: &[u32]) -> Self {
        let mut f = self.clone();
        for (a, &e) in idx.iter().enumerate() {
            for _ in 0..e {
                f = f.partial(a as u32 + 1);
            }
        }
        f
    }

    pub fn eval(&self, p: &[Rational]) -> Result<Rational, FieldError> {
        let assign = assign_point1(p);
        let den = self.den.eval(&assign)?;
        if den.is_zero() {
            return Err(FieldError::Pole);
        }
        Ok(self.num.eval(&assign)? / den)
    }

    pub fn eval_f64(&self, p: &[f64]) -> Result<f64, FieldError> {
        let q: Vec<Rational> = p
            .iter()
            .map(|&x| crate::algebra::rational_from_f64(x).ok_or(FieldError::NonFiniteStencil))
            .collect::<Result<_, _>>()?;
        Ok(rational_to_f64(&self.eval(&q)?))
    }

    /// Exact substitution `H(T x + t)`.
    pub fn compose_affine(&self, t: &RationalAffineMap) -> Result<Self, FieldError> {
        let d = self.dim();
        if t.dim() != d as usize {
            return Err(FieldError::DimMismatch { field: d, other: t.dim() as u32 });
        }
        let subst = |axis0: usize| -> CoordPolynomial {
            let mut p = CoordPolynomial::constant(d, t.translation[axis0].clone());
            for (b, c) in t.matrix[axis0].iter().enumerate() {
                let v = CoordPolynomial::var(d, 1, b as u32 + 1)
                    .expect("axis in range")
                    .scale(c);
                p = p.add(&v).expect("same dim");
            }
            p
        };
        Ok(Self {
            num: self.num.substitute(d, |_, a| subst(a as usize - 1))?,
            den: self.den.substitute(d, |_, a| subst(a as usize - 1))?,
        })
    }

    /// Exact substitution `H(P(x))` as a rational field; poles surface at
    /// evaluation time, not here.
    pub fn compose_projective(&self, p: &ProjectiveMap) -> Result<Self, FieldError> {
        let d = self.dim();
        if p.dim != d {
            return Err(FieldError::DimMismatch { field: d, other: p.dim });
        }
        let (nums, den) = p.component_polys();
        let num_c = compose_poly_rational(&self.num, &nums, &den)?;
        let den_c = compose_poly_rational(&self.den, &nums, &den)?;
        // (n1/q^a) / (n2/q^b) = n1 * q^b / (n2 * q^a)
        Ok(Self {
            num: num_c.0.mul(&den_c.1)?,
            den: den_c.0.mul(&num_c.1)?,
        })
    }

    /// All exact partial derivatives up to `order` at `p`.
    pub fn jet(&self, p: &[Rational], order: u32) -> Result<JetPoint, FieldError> {
        let d = self.dim();
        let mut fields: BTreeMap<Vec<u32>, ScalarField> = BTreeMap::new();
        fields.insert(vec![0; d as usize], self.clone());
        let mut values = BTreeMap::new();
        for r in 0..=order {
            for idx in crate::maps::multi_indices(d, r) {
                let f = derived_field(&mut fields, &idx);
                values.insert(idx, f.eval(p)?);
            }
        }
        Ok(JetPoint { position: p.to_vec(), order, values })
    }

    pub fn jet_f64(&self, p: &[f64], order: u32) -> Result<JetPointF, FieldError> {
        let q: Vec<Rational> = p
            .iter()
            .map(|&x| crate::algebra::rational_from_f64(x).ok_or(FieldError::NonFiniteStencil))
            .collect::<Result<_, _>>()?;
        Ok(self.jet(&q, order)?.to_f64())
    }

    /// Jet of `H(P(x))` at `x` via the chain rule for orders up to two; higher
    /// orders fall back to symbolic composition. The chain-rule path avoids
    /// the degree blowup of differentiating the composed rational field.
    pub fn projective_jet(
        &self,
        p: &ProjectiveMap,
        x: &[Rational],
        order: u32,
    ) -> Result<JetPoint, FieldError> {
        if order > 2 {
            return self.compose_projective(p)?.jet(x, order);
        }
        let d = self.dim() as usize;
        let u = p.apply(x)?;
        let h = self.jet(&u, order)?;
        // Component derivatives of u_i = p_i / q at x, up to order 2. p_i and
        // q are linear, so u_i,a = (M[i][a] q - p_i M[d][a]) / q^2 and
        // u_i,ab = (-M[i][a] M[d][b] q - M[i][b] M[d][a] q
        //           + 2 p_i M[d][a] M[d][b]) / q^3.
        let q = p.denominator_at(x);
        if q.is_zero() {
            return Err(FieldError::Pole);
        }
        let lin = |row: &[Rational]| -> Rational {
            row.iter()
                .take(d)
                .zip(x)
                .fold(row[d].clone(), |acc, (a, v)| acc + a.clone() * v.clone())
        };
        let pi: Vec<Rational> = (0..d).map(|i| lin(&p.matrix[i])).collect();
        let q2 = q.clone() * q.clone();
        let q3 = q2.clone() * q.clone();
        let du = |i: usize, a: usize| -> Rational {
            (p.matrix[i][a].clone() * q.clone() - pi[i].clone() * p.matrix[d][a].clone())
                / q2.clone()
        };
        let ddu = |i: usize, a: usize, b: usize| -> Rational {
            (rat(2) * pi[i].clone() * p.matrix[d][a].clone() * p.matrix[d][b].clone()
                - p.matrix[i][a].clone() * p.matrix[d][b].clone() * q.clone()
                - p.matrix[i][b].clone() * p.matrix[d][a].clone() * q.clone())
                / q3.clone()
        };
        let mut values: BTreeMap<Vec<u32>, Rational> = BTreeMap::new();
        values.insert(vec![0; d], h.value(&vec![0; d])?.clone());
        if order >= 1 {
            for a in 0..d {
                let mut acc = Rational::zero();
                for i in 0..d {
                    acc += h.value(&unit(d, i))?.clone() * du(i, a);
                }
                values.insert(unit(d, a), acc);
            }
        }
        if order >= 2 {
            for a in 0..d {
                for b in a..d {
                    let mut acc = Rational::zero();
                    for i in 0..d {
                        for j in 0..d {
                            acc += h.value(&pair(d, i, j))?.clone() * du(i, a) * du(j, b);
                        }
                        acc += h.value(&unit(d, i))?.clone() * ddu(i, a, b);
                    }
                    values.insert(pair(d, a, b), acc);
                }
            }
        }
        Ok(JetPoint { position: x.to_vec(), order, values })
    }
}

fn unit(d: usize, a: usize) -> Vec<u32> {
    let mut v = vec![0u32; d];
    v[a] = 1;
    v
}

fn pair(d: usize, a: usize, b: usize) -> Vec<u32> {
    let mut v = vec![0u32; d];
    v[a] += 1;
    v[b] += 1;
    v
}

/// Memoized symbolic derivative lookup, deriving each multiindex from a
/// predecessor with one fewer differentiation.
fn derived_field(
    fields: &mut BTreeMap<Vec<u32>, ScalarField>,
    idx: &[u32],
) -> ScalarField {
    if let Some(f) = fields.get(idx) {
        return f.clone();
    }
    let a = idx.iter().position(|&e| e > 0).expect("nonzero index");
    let mut prev = idx.to_vec();
    prev[a] -= 1;
    let base = derived_field(fields, &prev);
    let f = base.partial(a as u32 + 1);
    fields.insert(idx.to_vec(), f.clone());
    f
}

/// Compose a polynomial with projective components: returns `(N, q^D)` with
/// `poly(p_1/q, ..., p_d/q) = N / q^D`, `D` the total degree.
fn compose_poly_rational(
    poly: &CoordPolynomial,
    nums: &[CoordPolynomial],
    den: &CoordPolynomial,
) -> Result<(CoordPolynomial, CoordPolynomial), FieldError> {
    let d = poly.dim();
    let big_d = poly.total_degree();
    let mut out = CoordPolynomial::zero(d);
    for (mono, coeff) in poly.terms() {
        let mut t = CoordPolynomial::constant(d, coeff.clone());
        let mut deg = 0u32;
        for (&(point, axis), &e) in mono.exponents() {
            debug_assert_eq!(point, 1);
            t = t.mul(&nums[axis as usize - 1].pow(e))?;
            deg += e;
        }
        t = t.mul(&den.pow(big_d - deg))?;
        out = out.add(&t)?;
    }
    Ok((out, den.pow(big_d)))
}

/// Exact derivatives of a field at a point, up to a declared order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JetPoint {
    pub position: Vec<Rational>,
    pub order: u32,
    pub values: BTreeMap<MultiIndex, Rational>,
}

impl JetPoint {
    pub fn value(&self, idx: &[u32]) -> Result<&Rational, FieldError> {
        self.values.get(idx).ok_or(FieldError::InsufficientJetOrder {
            have: self.order,
            need: idx.iter().sum(),
        })
    }

    pub fn to_f64(&self) -> JetPointF {
        JetPointF {
            position: self.position.iter().map(rational_to_f64).collect(),
            order: self.order,
            values: self
                .values
                .iter()
                .map(|(k, v)| (k.clone(), rational_to_f64(v)))
                .collect(),
        }
    }
}

/// Floating-point jet, as produced by the finite-difference oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct JetPointF {
    pub position: Vec<f64>,
    pub order: u32,
    pub values: BTreeMap<MultiIndex, f64>,
}

impl JetPointF {
    pub fn value(&self, idx: &[u32]) -> Result<f64, FieldError> {
        self.values
            .get(idx)
            .copied()
            .ok_or(FieldError::InsufficientJetOrder {
                have: self.order,
                need: idx.iter().sum(),
            })
    }
}

/// Evaluate the numerator of a derivative-form expression on an exact jet and
/// divide by `J^k`.
pub fn eval_deriv_expr_exact(
    e: &InvariantExpr,
    jet: &JetPoint,
    jacobian: &Rational,
) -> Result<Rational, FieldError> {
    if e.form != ExprForm::Derivatives {
        return Err(FieldError::NotDerivForm);
    }
    let mut acc = Rational::zero();
    for term in &e.terms {
        let mut t = term.coeff.clone();
        for s in &term.symbols {
            t *= jet.value(s)?.clone();
        }
        acc += t;
    }
    if e.normalization.kind == NormKind::Jacobian && e.normalization.power > 0 {
        if jacobian.is_zero() {
            return Err(FieldError::ZeroJacobian);
        }
        let mut jp = Rational::one();
        for _ in 0..e.normalization.power {
            jp *= jacobian.clone();
        }
        acc /= jp;
    }
    Ok(acc)
}

/// Numerator of a derivative-form expression on an exact jet, without the
/// Jacobian division.
pub fn eval_deriv_numerator(e: &InvariantExpr, jet: &JetPoint) -> Result<Rational, FieldError> {
    if e.form != ExprForm::Derivatives {
        return Err(FieldError::NotDerivForm);
    }
    let mut acc = Rational::zero();
    for term in &e.terms {
        let mut t = term.coeff.clone();
        for s in &term.symbols {
            t *= jet.value(s)?.clone();
        }
        acc += t;
    }
    Ok(acc)
}

/// Floating-point evaluation on a jet, dividing by `J^k`.
pub fn eval_deriv_expr(e: &InvariantExpr, jet: &JetPointF, jacobian: f64) -> Result<f64, FieldError> {
    if e.form != ExprForm::Derivatives {
        return Err(FieldError::NotDerivForm);
    }
    let mut acc = 0.0;
    for term in &e.terms {
        let mut t = rational_to_f64(&term.coeff);
        for s in &term.symbols {
            t *= jet.value(s)?;
        }
        acc += t;
    }
    if e.normalization.kind == NormKind::Jacobian && e.normalization.power > 0 {
        if jacobian == 0.0 {
            return Err(FieldError::ZeroJacobian);
        }
        acc /= jacobian.powi(e.normalization.power as i32);
    }
    Ok(acc)
}

/// Default relative finite-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-3;

/// Central-difference jet of a black-box evaluator with one Richardson
/// extrapolation level.
pub fn fd_jet(
    eval: &dyn Fn(&[f64]) -> f64,
    p: &[f64],
    order: u32,
    h: f64,
) -> Result<JetPointF, FieldError> {
    let d = p.len() as u32;
    let mut values = BTreeMap::new();
    for r in 0..=order {
        for idx in crate::maps::multi_indices(d, r) {
            let coarse = central_diff(eval, p, &idx, h)?;
            let fine = central_diff(eval, p, &idx, h / 2.0)?;
            values.insert(idx, (4.0 * fine - coarse) / 3.0);
        }
    }
    Ok(JetPointF { position: p.to_vec(), order, values })
}

/// Plain central-difference estimate of one partial derivative (no
/// extrapolation); exposed for convergence-rate measurements.
pub fn central_diff(
    eval: &dyn Fn(&[f64]) -> f64,
    p: &[f64],
    idx: &[u32],
    h: f64,
) -> Result<f64, FieldError> {
    match idx.iter().position(|&e| e > 0) {
        None => {
            let v = eval(p);
            if !v.is_finite() {
                return Err(FieldError::NonFiniteStencil);
            }
            Ok(v)
        }
        Some(a) => {
            let mut rest = idx.to_vec();
            rest[a] -= 1;
            let mut hi = p.to_vec();
            hi[a] += h;
            let mut lo = p.to_vec();
            lo[a] -= h;
            let f_hi = central_diff(eval, &hi, &rest, h)?;
            let f_lo = central_diff(eval, &lo, &rest, h)?;
            Ok((f_hi - f_lo) / (2.0 * h))
        }
    }
}

// ---------------------------------------------------------------------------
// Field literal parser
// ---------------------------------------------------------------------------

/// Parse a polynomial field literal like `3/2*x^2*y - y^3 + x`. Variables are
/// `x, y, z, w` up to the given dimension; coefficients are exact rationals.
pub fn parse_field(input: &str, dim: u32) -> Result<ScalarField, FieldError> {
    let mut p = Parser { input: input.as_bytes(), text: input, pos: 0, dim };
    let poly = p.expression()?;
    p.skip_ws();
    if p.pos != p.input.len() {
        return Err(FieldError::Parse { pos: p.pos, msg: "trailing input".into() });
    }
    Ok(ScalarField::from_poly(poly))
}

struct Parser<'a> {
    input: &'a [u8],
    text: &'a str,
    pos: usize,
    dim: u32,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.input.len() && self.input[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.input.get(self.pos).copied()
    }

    fn expression(&mut self) -> Result<CoordPolynomial, FieldError> {
        let mut acc = match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                self.term()?.neg()
            }
            Some(b'+') => {
                self.pos += 1;
                self.term()?
            }
            _ => self.term()?,
        };
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?)?;
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = acc.sub(&self.term()?)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<CoordPolynomial, FieldError> {
        let mut acc = self.factor()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            acc = acc.mul(&self.factor()?)?;
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<CoordPolynomial, FieldError> {
        let base = self.base()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.input.len() && self.input[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if self.pos == start {
                return Err(FieldError::Parse { pos: self.pos, msg: "expected exponent".into() });
            }
            let e: u32 = self.text[start..self.pos]
                .parse()
                .map_err(|_| FieldError::Parse { pos: start, msg: "bad exponent".into() })?;
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<CoordPolynomial, FieldError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expression()?;
                if self.peek() != Some(b')') {
                    return Err(FieldError::Parse { pos: self.pos, msg: "expected `)`".into() });
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() => {
                let r = self.number()?;
                Ok(CoordPolynomial::constant(self.dim, r))
            }
            Some(c @ (b'x' | b'y' | b'z' | b'w')) => {
                self.pos += 1;
                let axis = match c {
                    b'x' => 1,
                    b'y' => 2,
                    b'z' => 3,
                    _ => 4,
                };
                if axis > self.dim {
                    return Err(FieldError::Parse {
                        pos: self.pos - 1,
                        msg: format!(
                            "variable `{}` exceeds dimension {}",
                            c as char, self.dim
                        ),
                    });
                }
                Ok(CoordPolynomial::var(self.dim, 1, axis)?)
            }
            other => Err(FieldError::Parse {
                pos: self.pos,
                msg: format!("unexpected {:?}", other.map(|c| c as char)),
            }),
        }
    }

    /// `p` or `p/q` as an exact rational literal.
    fn number(&mut self) -> Result<Rational, FieldError> {
        let int = |p: &mut Self| -> Result<i64, FieldError> {
            p.skip_ws();
            let start = p.pos;
            while p.pos < p.input.len() && p.input[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.text[start..p.pos]
                .parse()
                .map_err(|_| FieldError::Parse { pos: start, msg: "bad number".into() })
        };
        let n = int(self)?;
        if self.peek() == Some(b'/') {
            let save = self.pos;
            self.pos += 1;
            if self.peek().map(|c| c.is_ascii_digit()) == Some(true) {
                let d = int(self)?;
                if d == 0 {
                    return Err(FieldError::Parse { pos: save, msg: "zero denominator".into() });
                }
                return Ok(crate::algebra::ratio(n, d));
            }
            self.pos = save;
        }
        Ok(rat(n))
    }
}
