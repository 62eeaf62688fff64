//! Measurement substrate for the moment side: images as weighted point sets,
//! moment and centroid computation, affine action, and evaluation of
//! moment-form invariant expressions.
//!
//! Affine action uses measure semantics: positions are mapped and every mass
//! is multiplied by the Jacobian determinant, so the zero-order moment scales
//! exactly by `J` and no interpolation error enters the invariance checks.

use crate::algebra::{rational_from_f64, Rational};
use crate::algebra::rational_to_f64;
use crate::maps::{AffineMap, MapError, RationalAffineMap};
use num::Zero;
use crate::translator::{ExprForm, InvariantExpr, MultiIndex, NormKind};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ImageError {
    #[error("total mass is zero")]
    ZeroMass,
    #[error("non-finite coordinate or mass")]
    NonFinite,
    #[error("point has {got} coordinates, expected {dim}")]
    BadPoint { dim: usize, got: usize },
    #[error("grid is empty or all-zero")]
    EmptyGrid,
    #[error("grid spacing must be positive")]
    BadSpacing,
    #[error("expected a moment-form expression")]
    NotMomentForm,
    #[error("expression dimension {expr} does not match image dimension {img}")]
    DimMismatch { expr: u32, img: usize },
    #[error("csv parse error at line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error(transparent)]
    Map(#[from] MapError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointMass {
    pub pos: Vec<f64>,
    pub mass: f64,
}

/// A weighted point set: the discrete stand-in for an image density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointMassImage {
    dim: usize,
    points: Vec<PointMass>,
}

impl PointMassImage {
    pub fn new(dim: usize, points: Vec<PointMass>) -> Result<Self, ImageError> {
        for p in &points {
            if p.pos.len() != dim {
                return Err(ImageError::BadPoint { dim, got: p.pos.len() });
            }
            if !p.mass.is_finite() || p.pos.iter().any(|c| !c.is_finite()) {
                return Err(ImageError::NonFinite);
            }
        }
        Ok(Self { dim, points })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[PointMass] {
        &self.points
    }

    pub fn total_mass(&self) -> f64 {
        self.points.iter().map(|p| p.mass).sum()
    }

    /// `sum_i mass_i * prod_a pos_ia^idx_a`.
    pub fn raw_moment(&self, idx: &[u32]) -> f64 {
        self.moment_about(idx, None)
    }

    fn moment_about(&self, idx: &[u32], center: Option<&[f64]>) -> f64 {
        self.points
            .iter()
            .map(|p| {
                let mut t = p.mass;
                for (a, &e) in idx.iter().enumerate() {
                    let c = match center {
                        Some(c) => p.pos[a] - c[a],
                        None => p.pos[a],
                    };
                    t *= c.powi(e as i32);
                }
                t
            })
            .sum()
    }

    pub fn centroid(&self) -> Result<Vec<f64>, ImageError> {
        let m00 = self.total_mass();
        if m00 == 0.0 {
            return Err(ImageError::ZeroMass);
        }
        Ok((0..self.dim)
            .map(|a| {
                let mut idx = vec![0u32; self.dim];
                idx[a] = 1;
                self.raw_moment(&idx) / m00
            })
            .collect())
    }

    /// Raw moment about the centroid; first-order central moments are zero by
    /// construction.
    pub fn central_moment(&self, idx: &[u32]) -> Result<f64, ImageError> {
        let c = self.centroid()?;
        Ok(self.moment_about(idx, Some(&c)))
    }

    /// Vector of all order-r central moments in `multi_indices` order.
    pub fn central_moment_vector(&self, r: u32) -> Result<Vec<f64>, ImageError> {
        let c = self.centroid()?;
        Ok(crate::maps::multi_indices(self.dim as u32, r)
            .iter()
            .map(|idx| self.moment_about(idx, Some(&c)))
            .collect())
    }

    /// Map positions by `T` and scale every mass by its Jacobian determinant,
    /// so that `M00' = J * M00` holds to machine precision.
    pub fn apply_affine(&self, t: &AffineMap) -> Result<PointMassImage, ImageError> {
        if t.dim() != self.dim {
            return Err(ImageError::DimMismatch { expr: t.dim() as u32, img: self.dim });
        }
        let j = t.jacobian();
        Ok(PointMassImage {
            dim: self.dim,
            points: self
                .points
                .iter()
                .map(|p| PointMass { pos: t.apply(&p.pos), mass: p.mass * j })
                .collect(),
        })
    }

    pub fn translate(&self, shift: &[f64]) -> PointMassImage {
        PointMassImage {
            dim: self.dim,
            points: self
                .points
                .iter()
                .map(|p| PointMass {
                    pos: p.pos.iter().zip(shift).map(|(a, b)| a + b).collect(),
                    mass: p.mass,
                })
                .collect(),
        }
    }
}

/// Evaluate a moment-form expression on an image using central moments,
/// dividing by `mu00^w` when a normalization is attached.
pub fn eval_moment_expr(e: &InvariantExpr, img: &PointMassImage) -> Result<f64, ImageError> {
    if e.form != ExprForm::Moments {
        return Err(ImageError::NotMomentForm);
    }
    if e.dim as usize != img.dim() {
        return Err(ImageError::DimMismatch { expr: e.dim, img: img.dim() });
    }
    let centroid = img.centroid()?;
    let mut cache: BTreeMap<MultiIndex, f64> = BTreeMap::new();
    let mut value = 0.0;
    for term in &e.terms {
        let mut t = rational_to_f64(&term.coeff);
        for s in &term.symbols {
            let mu = *cache
                .entry(s.clone())
                .or_insert_with(|| img.moment_about(s, Some(&centroid)));
            t *= mu;
        }
        value += t;
    }
    if e.normalization.kind == NormKind::Mu00 && e.normalization.power > 0 {
        let m00 = img.total_mass();
        value /= m00.powi(e.normalization.power as i32);
    }
    Ok(value)
}

/// An image lifted to exact rationals. Finite f64 coordinates are dyadic, so
/// the lift is lossless; with an exact affine map the whole invariance
/// relation can be checked with a single rounding at the very end, which is
/// what keeps heavily cancelling invariants within float tolerance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalImage {
    dim: usize,
    points: Vec<(Vec<Rational>, Rational)>,
}

impl RationalImage {
    pub fn from_image(img: &PointMassImage) -> Self {
        Self {
            dim: img.dim,
            points: img
                .points
                .iter()
                .map(|p| {
                    (
                        p.pos
                            .iter()
                            .map(|&c| rational_from_f64(c).expect("validated finite"))
                            .collect(),
                        rational_from_f64(p.mass).expect("validated finite"),
                    )
                })
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply_affine(&self, t: &RationalAffineMap) -> Result<RationalImage, ImageError> {
        if t.dim() != self.dim {
            return Err(ImageError::DimMismatch { expr: t.dim() as u32, img: self.dim });
        }
        let j = t.jacobian();
        Ok(RationalImage {
            dim: self.dim,
            points: self
                .points
                .iter()
                .map(|(pos, mass)| (t.apply(pos), mass.clone() * j.clone()))
                .collect(),
        })
    }

    pub fn total_mass(&self) -> Rational {
        self.points.iter().map(|(_, m)| m.clone()).sum()
    }

    pub fn centroid(&self) -> Result<Vec<Rational>, ImageError> {
        let m00 = self.total_mass();
        if m00.is_zero() {
            return Err(ImageError::ZeroMass);
        }
        Ok((0..self.dim)
            .map(|a| {
                self.points
                    .iter()
                    .map(|(pos, m)| pos[a].clone() * m.clone())
                    .sum::<Rational>()
                    / m00.clone()
            })
            .collect())
    }

    pub fn central_moment(&self, idx: &[u32], centroid: &[Rational]) -> Rational {
        self.points
            .iter()
            .map(|(pos, m)| {
                let mut t = m.clone();
                for (a, &e) in idx.iter().enumerate() {
                    for _ in 0..e {
                        t *= pos[a].clone() - centroid[a].clone();
                    }
                }
                t
            })
            .sum()
    }
}

/// Exact counterpart of [`eval_moment_expr`]; the caller rounds the result.
pub fn eval_moment_expr_exact(
    e: &InvariantExpr,
    img: &RationalImage,
) -> Result<Rational, ImageError> {
    if e.form != ExprForm::Moments {
        return Err(ImageError::NotMomentForm);
    }
    if e.dim as usize != img.dim {
        return Err(ImageError::DimMismatch { expr: e.dim, img: img.dim });
    }
    let centroid = img.centroid()?;
    let mut cache: BTreeMap<MultiIndex, Rational> = BTreeMap::new();
    let mut value = Rational::zero();
    for term in &e.terms {
        let mut t = term.coeff.clone();
        for s in &term.symbols {
            let mu = cache
                .entry(s.clone())
                .or_insert_with(|| img.central_moment(s, &centroid));
            t *= mu.clone();
        }
        value += t;
    }
    if e.normalization.kind == NormKind::Mu00 && e.normalization.power > 0 {
        let m00 = img.total_mass();
        for _ in 0..e.normalization.power {
            value /= m00.clone();
        }
    }
    Ok(value)
}

/// Density samples on a regular grid; an ingestion format only, converted to
/// point masses before any moment work.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub dim: usize,
    pub origin: Vec<f64>,
    pub spacing: Vec<f64>,
    /// Row-major over `shape`.
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl DensityGrid {
    pub fn new(
        origin: Vec<f64>,
        spacing: Vec<f64>,
        shape: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self, ImageError> {
        let dim = origin.len();
        if spacing.len() != dim || shape.len() != dim {
            return Err(ImageError::BadPoint { dim, got: spacing.len() });
        }
        if spacing.iter().any(|&s| s <= 0.0) {
            return Err(ImageError::BadSpacing);
        }
        if values.len() != shape.iter().product::<usize>() || values.iter().all(|&v| v == 0.0) {
            return Err(ImageError::EmptyGrid);
        }
        Ok(Self { dim, origin, spacing, shape, values })
    }

    /// One point per nonzero cell at the cell center, mass = value times cell
    /// volume.
    pub fn to_pointmass(&self) -> Result<PointMassImage, ImageError> {
        let volume: f64 = self.spacing.iter().product();
        let mut points = Vec::new();
        for (flat, &v) in self.values.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let mut rem = flat;
            let mut coord = vec![0usize; self.dim];
            for a in (0..self.dim).rev() {
                coord[a] = rem % self.shape[a];
                rem /= self.shape[a];
            }
            let pos: Vec<f64> = (0..self.dim)
                .map(|a| self.origin[a] + (coord[a] as f64 + 0.5) * self.spacing[a])
                .collect();
            points.push(PointMass { pos, mass: v * volume });
        }
        if points.is_empty() {
            return Err(ImageError::EmptyGrid);
        }
        PointMassImage::new(self.dim, points)
    }
}

// ---------------------------------------------------------------------------
// CSV formats
// ---------------------------------------------------------------------------

/// Image CSV: first line `dim=d`, then one `x,y[,z...],mass` row per point.
pub fn image_from_csv(text: &str) -> Result<PointMassImage, ImageError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (n0, header) = lines
        .next()
        .ok_or(ImageError::Csv { line: 1, msg: "empty file".into() })?;
    let header = header.trim();
    let dim: usize = header
        .strip_prefix("dim=")
        .and_then(|d| d.trim().parse().ok())
        .ok_or(ImageError::Csv {
            line: n0 + 1,
            msg: format!("expected `dim=d` header, found `{header}`"),
        })?;
    let mut points = Vec::new();
    for (n, line) in lines {
        let fields: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| ImageError::Csv { line: n + 1, msg: e.to_string() })?;
        if fields.len() != dim + 1 {
            return Err(ImageError::Csv {
                line: n + 1,
                msg: format!("expected {} fields, found {}", dim + 1, fields.len()),
            });
        }
        points.push(PointMass { pos: fields[..dim].to_vec(), mass: fields[dim] });
    }
    PointMassImage::new(dim, points)
}

pub fn image_to_csv(img: &PointMassImage) -> String {
    let mut out = format!("dim={}\n", img.dim());
    for p in img.points() {
        let mut fields: Vec<String> = p.pos.iter().map(|c| format!("{c}")).collect();
        fields.push(format!("{}", p.mass));
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// 2D grid CSV: dense rows of values. Sidecar metadata lines `origin=x,y` and
/// `spacing=dx,dy` come first, prefixed with `#`.
pub fn grid_from_csv(text: &str) -> Result<DensityGrid, ImageError> {
    let mut origin: Option<Vec<f64>> = None;
    let mut spacing: Option<Vec<f64>> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            let meta = meta.trim();
            let parse_vec = |s: &str| -> Result<Vec<f64>, ImageError> {
                s.split(',')
                    .map(|f| f.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| ImageError::Csv { line: n + 1, msg: e.to_string() })
            };
            if let Some(v) = meta.strip_prefix("origin=") {
                origin = Some(parse_vec(v)?);
            } else if let Some(v) = meta.strip_prefix("spacing=") {
                spacing = Some(parse_vec(v)?);
            }
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| ImageError::Csv { line: n + 1, msg: e.to_string() })?;
        rows.push(row);
    }
    let origin = origin.ok_or(ImageError::Csv { line: 1, msg: "missing `# origin=`".into() })?;
    let spacing =
        spacing.ok_or(ImageError::Csv { line: 1, msg: "missing `# spacing=`".into() })?;
    if rows.is_empty() {
        return Err(ImageError::EmptyGrid);
    }
    let ncols = rows[0].len();
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(ImageError::Csv { line: 1, msg: "ragged grid rows".into() });
    }
    // Rows index the first axis, columns the second.
    let shape = vec![rows.len(), ncols];
    let values = rows.into_iter().flatten().collect();
    DensityGrid::new(origin, spacing, shape, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_points(coords: &[&[f64]]) -> PointMassImage {
        PointMassImage::new(
            coords[0].len(),
            coords
                .iter()
                .map(|c| PointMass { pos: c.to_vec(), mass: 1.0 })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn raw_moment_single_point() {
        let img = unit_points(&[&[2.0, 3.0]]);
        assert_relative_eq!(img.raw_moment(&[1, 1]), 6.0);
    }

    #[test]
    fn raw_moment_symmetric_pair() {
        let img = unit_points(&[&[1.0, 0.0], &[-1.0, 0.0]]);
        assert_relative_eq!(img.raw_moment(&[2, 0]), 2.0);
        assert_relative_eq!(img.raw_moment(&[1, 0]), 0.0);
    }

    #[test]
    fn centroid_midpoint_and_identity() {
        let img = unit_points(&[&[0.0, 0.0], &[2.0, 0.0]]);
        assert_eq!(img.centroid().unwrap(), vec![1.0, 0.0]);
        let single = unit_points(&[&[3.5, -2.0]]);
        assert_eq!(single.centroid().unwrap(), vec![3.5, -2.0]);
    }

    #[test]
    fn zero_mass_is_an_error() {
        let img = PointMassImage::new(
            2,
            vec![
                PointMass { pos: vec![0.0, 0.0], mass: 1.0 },
                PointMass { pos: vec![1.0, 0.0], mass: -1.0 },
            ],
        )
        .unwrap();
        assert!(matches!(img.centroid(), Err(ImageError::ZeroMass)));
    }

    #[test]
    fn central_first_order_vanishes() {
        let img = unit_points(&[&[1.0, 2.0], &[4.0, -1.0], &[0.5, 0.5]]);
        assert_relative_eq!(img.central_moment(&[1, 0]).unwrap(), 0.0, epsilon = 1e-12);
        assert_relative_eq!(img.central_moment(&[0, 1]).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn central_moment_matches_two_pass_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let points: Vec<PointMass> = (0..20)
            .map(|_| PointMass {
                pos: vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)],
                mass: rng.gen_range(0.1..1.0),
            })
            .collect();
        let img = PointMassImage::new(2, points.clone()).unwrap();
        let c = img.centroid().unwrap();
        let oracle: f64 = points
            .iter()
            .map(|p| p.mass * (p.pos[0] - c[0]).powi(2) * (p.pos[1] - c[1]))
            .sum();
        assert_relative_eq!(img.central_moment(&[2, 1]).unwrap(), oracle, max_relative = 1e-12);
    }

    #[test]
    fn affine_identity_fixes_image() {
        let img = unit_points(&[&[1.0, 2.0], &[-1.0, 0.5]]);
        let out = img.apply_affine(&AffineMap::identity(2)).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn mass_scales_by_jacobian() {
        let img = unit_points(&[&[1.0, 2.0], &[-1.0, 0.5], &[0.3, 0.3]]);
        let s = 1.7;
        let t = AffineMap::from_rows(&[&[s, 0.0], &[0.0, s]], &[0.0, 0.0]).unwrap();
        let out = img.apply_affine(&t).unwrap();
        assert_relative_eq!(out.total_mass(), s * s * img.total_mass(), max_relative = 1e-14);
    }

    #[test]
    fn central_moments_are_translation_invariant() {
        let img = unit_points(&[&[1.0, 2.0], &[-1.0, 0.5], &[0.3, -0.7]]);
        let shifted = img.translate(&[3.7, -12.1]);
        for idx in [[2, 0], [1, 1], [0, 2], [3, 0], [2, 1]] {
            assert_relative_eq!(
                img.central_moment(&idx).unwrap(),
                shifted.central_moment(&idx).unwrap(),
                max_relative = 1e-9,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn grid_single_cell() {
        let g = DensityGrid::new(vec![0.0, 0.0], vec![2.0, 2.0], vec![1, 1], vec![5.0]).unwrap();
        let img = g.to_pointmass().unwrap();
        assert_eq!(img.points().len(), 1);
        assert_relative_eq!(img.points()[0].mass, 20.0);
        assert_eq!(img.points()[0].pos, vec![1.0, 1.0]);
    }

    #[test]
    fn uniform_grid_centroid_at_center() {
        let g = DensityGrid::new(
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            vec![2, 2],
            vec![1.0; 4],
        )
        .unwrap();
        let img = g.to_pointmass().unwrap();
        assert_eq!(img.centroid().unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn gaussian_grid_matches_analytic_moments() {
        // Standard 2D Gaussian sampled on [-6,6]^2: raw second moments are 1,
        // the centroid is the origin, up to discretization error.
        let n = 121usize;
        let h = 0.1;
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let x = -6.0 + (i as f64 + 0.5) * h;
                let y = -6.0 + (j as f64 + 0.5) * h;
                values.push((-0.5 * (x * x + y * y)).exp() / (2.0 * std::f64::consts::PI));
            }
        }
        let g = DensityGrid::new(vec![-6.0, -6.0], vec![h, h], vec![n, n], values).unwrap();
        let img = g.to_pointmass().unwrap();
        assert_relative_eq!(img.total_mass(), 1.0, max_relative = 1e-4);
        let c = img.centroid().unwrap();
        assert!(c[0].abs() < 1e-8 && c[1].abs() < 1e-8);
        assert_relative_eq!(img.central_moment(&[2, 0]).unwrap(), 1.0, max_relative = 1e-3);
        assert_relative_eq!(img.central_moment(&[0, 2]).unwrap(), 1.0, max_relative = 1e-3);
    }

    #[test]
    fn image_csv_roundtrip() {
        let img = unit_points(&[&[1.0, 2.0], &[-0.5, 0.25]]);
        let text = image_to_csv(&img);
        assert!(text.starts_with("dim=2\n"));
        let back = image_from_csv(&text).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn image_csv_errors_carry_line_numbers() {
        let err = image_from_csv("dim=2\n1.0,2.0\n").unwrap_err();
        assert!(matches!(err, ImageError::Csv { line: 2, .. }), "{err:?}");
        let err = image_from_csv("1.0,2.0,1.0\n").unwrap_err();
        assert!(matches!(err, ImageError::Csv { line: 1, .. }), "{err:?}");
    }

    #[test]
    fn grid_csv_parses_sidecar_metadata() {
        let text = "# origin=0,0\n# spacing=0.5,0.5\n1,0\n0,1\n";
        let g = grid_from_csv(text).unwrap();
        assert_eq!(g.shape, vec![2, 2]);
        let img = g.to_pointmass().unwrap();
        assert_eq!(img.points().len(), 2);
    }
}
