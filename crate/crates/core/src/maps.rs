//! Affine and projective transforms, plus the order-r transform matrices that
//! relate same-order moments (and same-order derivatives) before and after an
//! affine map.

use crate::algebra::{
    rational_from_f64, rational_to_f64, AlgebraError, CoordPolynomial, Rational,
};
use nalgebra::{DMatrix, DVector};
use num::{One, Zero};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MapError {
    #[error("matrix is singular (|det| = {0:e} below threshold)")]
    Singular(f64),
    #[error("matrix must be square, got {0}x{1}")]
    NotSquare(usize, usize),
    #[error("translation length {got} does not match dimension {dim}")]
    BadTranslation { dim: usize, got: usize },
    #[error("homogeneous matrix must be (d+1)x(d+1)")]
    BadHomogeneous,
    #[error("evaluation at a pole of the projective map")]
    Pole,
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

const SINGULARITY_EPS: f64 = 1e-12;

/// Invertible affine map `x -> A x + t` with f64 entries.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    matrix: DMatrix<f64>,
    translation: DVector<f64>,
}

impl AffineMap {
    pub fn new(matrix: DMatrix<f64>, translation: DVector<f64>) -> Result<Self, MapError> {
        if matrix.nrows() != matrix.ncols() {
            return Err(MapError::NotSquare(matrix.nrows(), matrix.ncols()));
        }
        if translation.len() != matrix.nrows() {
            return Err(MapError::BadTranslation {
                dim: matrix.nrows(),
                got: translation.len(),
            });
        }
        let det = matrix.clone().determinant();
        if det.abs() < SINGULARITY_EPS {
            return Err(MapError::Singular(det.abs()));
        }
        Ok(Self { matrix, translation })
    }

    pub fn from_rows(rows: &[&[f64]], translation: &[f64]) -> Result<Self, MapError> {
        let d = rows.len();
        let matrix = DMatrix::from_fn(d, d, |i, j| rows[i][j]);
        Self::new(matrix, DVector::from_column_slice(translation))
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: DMatrix::identity(dim, dim),
            translation: DVector::zeros(dim),
        }
    }

    pub fn translation_only(t: &[f64]) -> Self {
        Self {
            matrix: DMatrix::identity(t.len(), t.len()),
            translation: DVector::from_column_slice(t),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn translation(&self) -> &DVector<f64> {
        &self.translation
    }

    pub fn jacobian(&self) -> f64 {
        self.matrix.clone().determinant()
    }

    /// Ratio of the largest to smallest singular value.
    pub fn condition_number(&self) -> f64 {
        let svd = self.matrix.clone().svd(false, false);
        let max = svd.singular_values.max();
        let min = svd.singular_values.min();
        if min <= 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        let v = &self.matrix * DVector::from_column_slice(p) + &self.translation;
        v.iter().copied().collect()
    }
}

/// Affine map with exact rational entries, for the exact verification paths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalAffineMap {
    pub matrix: Vec<Vec<Rational>>,
    pub translation: Vec<Rational>,
}

impl RationalAffineMap {
    pub fn new(matrix: Vec<Vec<Rational>>, translation: Vec<Rational>) -> Result<Self, MapError> {
        let d = matrix.len();
        if matrix.iter().any(|r| r.len() != d) {
            return Err(MapError::NotSquare(d, 0));
        }
        if translation.len() != d {
            return Err(MapError::BadTranslation { dim: d, got: translation.len() });
        }
        let map = Self { matrix, translation };
        if map.jacobian().is_zero() {
            return Err(MapError::Singular(0.0));
        }
        Ok(map)
    }

    pub fn identity(dim: usize) -> Self {
        let matrix = (0..dim)
            .map(|i| {
                (0..dim)
                    .map(|j| if i == j { Rational::one() } else { Rational::zero() })
                    .collect()
            })
            .collect();
        Self { matrix, translation: vec![Rational::zero(); dim] }
    }

    pub fn dim(&self) -> usize {
        self.matrix.len()
    }

    pub fn jacobian(&self) -> Rational {
        rational_det(&self.matrix)
    }

    pub fn apply(&self, p: &[Rational]) -> Vec<Rational> {
        self.matrix
            .iter()
            .zip(&self.translation)
            .map(|(row, t)| {
                row.iter()
                    .zip(p)
                    .fold(t.clone(), |acc, (a, x)| acc + a.clone() * x.clone())
            })
            .collect()
    }

    pub fn transposed_matrix(&self) -> Vec<Vec<Rational>> {
        let d = self.dim();
        (0..d)
            .map(|i| (0..d).map(|j| self.matrix[j][i].clone()).collect())
            .collect()
    }

    /// Exact rational lift of an f64 map (every finite f64 is dyadic).
    pub fn from_f64(map: &AffineMap) -> Self {
        let d = map.dim();
        Self {
            matrix: (0..d)
                .map(|i| {
                    (0..d)
                        .map(|j| rational_from_f64(map.matrix()[(i, j)]).expect("finite"))
                        .collect()
                })
                .collect(),
            translation: (0..d)
                .map(|i| rational_from_f64(map.translation()[i]).expect("finite"))
                .collect(),
        }
    }

    pub fn to_f64(&self) -> Result<AffineMap, MapError> {
        let d = self.dim();
        let matrix = DMatrix::from_fn(d, d, |i, j| rational_to_f64(&self.matrix[i][j]));
        let translation = DVector::from_fn(d, |i, _| rational_to_f64(&self.translation[i]));
        AffineMap::new(matrix, translation)
    }
}

/// Exact determinant by Laplace expansion; transform dimensions are small.
pub fn rational_det(m: &[Vec<Rational>]) -> Rational {
    let n = m.len();
    match n {
        0 => Rational::one(),
        1 => m[0][0].clone(),
        _ => {
            let mut acc = Rational::zero();
            for j in 0..n {
                if m[0][j].is_zero() {
                    continue;
                }
                let minor: Vec<Vec<Rational>> = m[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|&(c, _)| c != j)
                            .map(|(_, v)| v.clone())
                            .collect()
                    })
                    .collect();
                let cofactor = m[0][j].clone() * rational_det(&minor);
                if j % 2 == 0 {
                    acc += cofactor;
                } else {
                    acc -= cofactor;
                }
            }
            acc
        }
    }
}

/// Projective map in homogeneous coordinates, with exact rational entries so
/// that composed fields stay exactly differentiable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectiveMap {
    pub dim: u32,
    /// (d+1) x (d+1) homogeneous matrix.
    pub matrix: Vec<Vec<Rational>>,
}

impl ProjectiveMap {
    pub fn new(dim: u32, matrix: Vec<Vec<Rational>>) -> Result<Self, MapError> {
        let n = dim as usize + 1;
        if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
            return Err(MapError::BadHomogeneous);
        }
        if rational_det(&matrix).is_zero() {
            return Err(MapError::Singular(0.0));
        }
        Ok(Self { dim, matrix })
    }

    pub fn identity(dim: u32) -> Self {
        let n = dim as usize + 1;
        Self {
            dim,
            matrix: (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| if i == j { Rational::one() } else { Rational::zero() })
                        .collect()
                })
                .collect(),
        }
    }

    /// Embed an affine map as a projective one (last row `0 ... 0 1`).
    pub fn from_affine(map: &RationalAffineMap) -> Self {
        let d = map.dim();
        let n = d + 1;
        let mut matrix = vec![vec![Rational::zero(); n]; n];
        for i in 0..d {
            for j in 0..d {
                matrix[i][j] = map.matrix[i][j].clone();
            }
            matrix[i][d] = map.translation[i].clone();
        }
        matrix[d][d] = Rational::one();
        Self { dim: d as u32, matrix }
    }

    /// Numerator polynomials of each output coordinate and the shared
    /// denominator polynomial, over the variables of point 1.
    pub fn component_polys(&self) -> (Vec<CoordPolynomial>, CoordPolynomial) {
        let d = self.dim;
        let row_poly = |row: &[Rational]| {
            let mut p = CoordPolynomial::constant(d, row[d as usize].clone());
            for (a, c) in row.iter().take(d as usize).enumerate() {
                let v = CoordPolynomial::var(d, 1, a as u32 + 1)
                    .expect("axis in range")
                    .scale(c);
                p = p.add(&v).expect("same dim");
            }
            p
        };
        let nums = self.matrix[..d as usize].iter().map(|r| row_poly(r)).collect();
        let den = row_poly(&self.matrix[d as usize]);
        (nums, den)
    }

    pub fn denominator_at(&self, p: &[Rational]) -> Rational {
        let d = self.dim as usize;
        let row = &self.matrix[d];
        row.iter()
            .take(d)
            .zip(p)
            .fold(row[d].clone(), |acc, (a, x)| acc + a.clone() * x.clone())
    }

    /// Determinant of the Jacobian matrix of the map at `p`. For the
    /// components `u_i = p_i / q` with linear `p_i`, `q`:
    /// `du_i/dx_a = (M[i][a] * q - p_i * M[d][a]) / q^2`.
    pub fn local_jacobian(&self, p: &[Rational]) -> Result<Rational, MapError> {
        let d = self.dim as usize;
        let q = self.denominator_at(p);
        if q.is_zero() {
            return Err(MapError::Pole);
        }
        let row_at = |i: usize| -> Rational {
            let row = &self.matrix[i];
            row.iter()
                .take(d)
                .zip(p)
                .fold(row[d].clone(), |acc, (a, x)| acc + a.clone() * x.clone())
        };
        let q2 = q.clone() * q.clone();
        let jac: Vec<Vec<Rational>> = (0..d)
            .map(|i| {
                let pi = row_at(i);
                (0..d)
                    .map(|a| {
                        (self.matrix[i][a].clone() * q.clone()
                            - pi.clone() * self.matrix[d][a].clone())
                            / q2.clone()
                    })
                    .collect()
            })
            .collect();
        Ok(rational_det(&jac))
    }

    pub fn apply(&self, p: &[Rational]) -> Result<Vec<Rational>, MapError> {
        let den = self.denominator_at(p);
        if den.is_zero() {
            return Err(MapError::Pole);
        }
        let d = self.dim as usize;
        Ok((0..d)
            .map(|i| {
                let row = &self.matrix[i];
                let num = row
                    .iter()
                    .take(d)
                    .zip(p)
                    .fold(row[d].clone(), |acc, (a, x)| acc + a.clone() * x.clone());
                num / den.clone()
            })
            .collect())
    }
}

// ---------------------------------------------------------------------------
// Order-r transform matrices
// ---------------------------------------------------------------------------

/// All multiindices of total order `r` in `d` axes, in descending
/// lexicographic order, e.g. `(2,0), (1,1), (0,2)`.
pub fn multi_indices(d: u32, r: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(d as usize);
    fn rec(d: u32, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() as u32 == d - 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for e in (0..=left).rev() {
            cur.push(e);
            rec(d, left - e, cur, out);
            cur.pop();
        }
    }
    if d > 0 {
        rec(d, r, &mut cur, &mut out);
    }
    out
}

/// The matrix `B` with rows and columns indexed by [`multi_indices`] such that
/// `prod_i (sum_a A[i][a] x_a)^{alpha_i} = sum_beta B[alpha][beta] x^beta`.
///
/// For an affine map with linear part `A`, the order-r moment vector of the
/// transformed image equals `J * B(A, r)` times the original's; the order-r
/// derivative vector of the composed field `H(A x + t)` equals
/// `B(A^T, r)` times the field's derivative vector at the mapped point.
pub fn multinomial_matrix(a: &[Vec<Rational>], r: u32) -> Vec<Vec<Rational>> {
    let d = a.len() as u32;
    let indices = multi_indices(d, r);
    let mut rows = Vec::with_capacity(indices.len());
    for alpha in &indices {
        // Expand prod_i (sum_a A[i][a] x_a)^{alpha_i} symbolically.
        let mut p = CoordPolynomial::one(d);
        for (i, &e) in alpha.iter().enumerate() {
            if e == 0 {
                continue;
            }
            let mut lin = CoordPolynomial::zero(d);
            for (ax, coeff) in a[i].iter().enumerate() {
                let v = CoordPolynomial::var(d, 1, ax as u32 + 1)
                    .expect("axis in range")
                    .scale(coeff);
                lin = lin.add(&v).expect("same dim");
            }
            p = p.mul(&lin.pow(e)).expect("same dim");
        }
        let row: Vec<Rational> = indices
            .iter()
            .map(|beta| {
                let mono = crate::algebra::CoordMonomial::from_exponents(
                    beta.iter()
                        .enumerate()
                        .map(|(ax, &e)| ((1u32, ax as u32 + 1), e)),
                );
                p.coefficient(&mono)
            })
            .collect();
        rows.push(row);
    }
    rows
}

/// f64 version of [`multinomial_matrix`]; entries are lifted exactly and the
/// only rounding is the final conversion back.
pub fn multinomial_matrix_f64(a: &DMatrix<f64>, r: u32) -> DMatrix<f64> {
    let d = a.nrows();
    let rational: Vec<Vec<Rational>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| rational_from_f64(a[(i, j)]).expect("finite"))
                .collect()
        })
        .collect();
    let m = multinomial_matrix(&rational, r);
    DMatrix::from_fn(m.len(), m.len(), |i, j| rational_to_f64(&m[i][j]))
}
