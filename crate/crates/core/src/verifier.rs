//! Invariance verification drivers: sample transforms in a group, compare an
//! expression before and after, fit the weight exponent, and emit a
//! machine-readable report.
//!
//! Trials are independent; each draws its randomness from a per-trial stream
//! of the run seed, so reports are byte-identical for a given seed regardless
//! of whether the trials run sequentially or in parallel.

use crate::algebra::{rat, ratio, rational_to_f64, Rational};
use crate::catalog;
use crate::difflab::{eval_deriv_numerator, FieldError, ScalarField};
use crate::generators::{GenFactor, PISpec, SpecError};
use crate::maps::{
    multinomial_matrix_f64, AffineMap, ProjectiveMap, RationalAffineMap,
};
use crate::momentlab::{
    eval_moment_expr_exact, ImageError, PointMass, PointMassImage, RationalImage,
};
use crate::translator::{
    spec_to_moments, to_derivatives, ExprForm, InvariantExpr, TranslateError,
};
use nalgebra::{DMatrix, DVector};
use num::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Values with magnitude below this floor are treated as degenerate rather
/// than divided.
pub const MAGNITUDE_FLOOR: f64 = 1e-12;

/// Fitted weight exponent must lie within this distance of the declared one.
pub const EXPONENT_TOL: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VerifyError {
    #[error("no images supplied")]
    NoImages,
    #[error("no fields supplied")]
    NoFields,
    #[error("group {0:?} is not applicable to this subject")]
    BadGroup(TransformGroup),
    #[error("too many pole resamples while drawing evaluation points")]
    TooManyPoles,
    #[error(transparent)]
    Map(#[from] crate::maps::MapError),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Translate(#[from] TranslateError),
    #[error(transparent)]
    Spec(#[from] SpecError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformGroup {
    Rotation,
    Similarity,
    Affine,
    Projective,
}

impl std::str::FromStr for TransformGroup {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "rotation" => Ok(Self::Rotation),
            "similarity" => Ok(Self::Similarity),
            "affine" => Ok(Self::Affine),
            "projective" => Ok(Self::Projective),
            other => Err(format!("unknown group `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub trials: u32,
    pub seed: u64,
    pub tolerance: f64,
    /// Evaluation points per (transform, field) pair on the derivative side.
    pub points: u32,
    /// Run trials on the rayon pool when the `parallel` feature is enabled.
    pub parallel: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { trials: 100, seed: 0, tolerance: 1e-9, points: 5, parallel: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSample {
    pub transform: u32,
    pub subject: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<u32>,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub jacobian: f64,
    pub rel_dev: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub subject: String,
    pub group: TransformGroup,
    pub trials: u32,
    pub seed: u64,
    pub tolerance: f64,
    pub declared_exponent: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fitted_exponent: Option<f64>,
    pub max_rel_dev: f64,
    pub degenerate_samples: u32,
    pub verdict: Verdict,
    pub samples: Vec<TrialSample>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    /// Worst non-degenerate sample, if any: the concrete counterexample when
    /// the verdict is `fail`.
    pub fn worst_sample(&self) -> Option<&TrialSample> {
        self.samples
            .iter()
            .filter(|s| !s.degenerate)
            .max_by(|a, b| a.rel_dev.total_cmp(&b.rel_dev))
    }
}

fn assemble_report(
    subject: String,
    group: TransformGroup,
    cfg: &VerifyConfig,
    declared_exponent: u32,
    mut samples: Vec<TrialSample>,
) -> VerificationReport {
    samples.sort_by_key(|s| (s.transform, s.subject, s.point));
    let degenerate_samples = samples.iter().filter(|s| s.degenerate).count() as u32;
    let live: Vec<&TrialSample> = samples.iter().filter(|s| !s.degenerate).collect();
    let max_rel_dev = live.iter().map(|s| s.rel_dev).fold(0.0, f64::max);
    let fitted_exponent = fit_exponent(&live);
    let verdict = if live.is_empty() {
        Verdict::Degenerate
    } else if max_rel_dev <= cfg.tolerance
        && fitted_exponent
            .map(|f| (f - declared_exponent as f64).abs() <= EXPONENT_TOL)
            .unwrap_or(true)
    {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    VerificationReport {
        subject,
        group,
        trials: cfg.trials,
        seed: cfg.seed,
        tolerance: cfg.tolerance,
        declared_exponent,
        fitted_exponent,
        max_rel_dev,
        degenerate_samples,
        verdict,
        samples,
    }
}

/// Least-squares slope of `ln|ratio|` against `ln J`; `None` when the
/// Jacobians carry no spread (e.g. rotations, where J is identically one).
fn fit_exponent(samples: &[&TrialSample]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.jacobian > 0.0 && s.ratio != 0.0 && s.ratio.is_finite())
        .map(|s| (s.jacobian.ln(), s.ratio.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mean_x = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if sxx < 1e-9 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    Some(sxy / sxx)
}

fn make_sample(
    transform: u32,
    subject: u32,
    point: Option<u32>,
    lhs: f64,
    rhs: f64,
    weight: f64,
    jacobian: f64,
) -> TrialSample {
    let expected = weight * rhs;
    let scale = lhs.abs().max(expected.abs());
    let degenerate = scale < MAGNITUDE_FLOOR;
    let rel_dev = if degenerate { 0.0 } else { (lhs - expected).abs() / scale };
    let ratio = if rhs.abs() < MAGNITUDE_FLOOR { f64::NAN } else { lhs / rhs };
    TrialSample {
        transform,
        subject,
        point,
        lhs,
        rhs,
        ratio: if ratio.is_finite() { ratio } else { 0.0 },
        jacobian,
        rel_dev,
        degenerate,
    }
}

// ---------------------------------------------------------------------------
// Randomness
// ---------------------------------------------------------------------------

/// RNG for one trial: an independent stream of the run seed.
pub fn trial_rng(seed: u64, trial: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64 + 1);
    rng
}

/// RNG for generating shared inputs (images, fields) of a run.
pub fn input_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    rng
}

/// Random point-mass image. Masses are kept small so that high-weight
/// normalized invariants (divided by `mu00^w` with large `w`) stay comfortably
/// above the degeneracy floor on typical images.
pub fn random_image(dim: usize, n_points: usize, rng: &mut impl Rng) -> PointMassImage {
    let points = (0..n_points)
        .map(|_| PointMass {
            pos: (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            mass: rng.gen_range(0.01..0.1),
        })
        .collect();
    PointMassImage::new(dim, points).expect("finite by construction")
}

/// Random polynomial field with small integer coefficients on all monomials
/// up to `degree`; resampled if it collapses to a constant.
pub fn random_poly_field(dim: u32, degree: u32, rng: &mut impl Rng) -> ScalarField {
    use crate::algebra::{CoordMonomial, CoordPolynomial};
    loop {
        let mut terms = Vec::new();
        for r in 0..=degree {
            for idx in crate::maps::multi_indices(dim, r) {
                let c: i64 = rng.gen_range(-3..=3);
                if c != 0 {
                    terms.push((
                        rat(c),
                        CoordMonomial::from_exponents(
                            idx.iter()
                                .enumerate()
                                .map(|(a, &e)| ((1u32, a as u32 + 1), e)),
                        ),
                    ));
                }
            }
        }
        let p = CoordPolynomial::from_terms(dim, terms);
        if p.total_degree() >= 1 {
            return ScalarField::from_poly(p);
        }
    }
}

/// Random affine map with entries in [-2,2], Jacobian in [0.1, 5], condition
/// number at most 1e3, translation in [-2,2].
pub fn sample_affine(dim: usize, rng: &mut impl Rng) -> AffineMap {
    loop {
        let m = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-2.0..2.0));
        let t = DVector::from_fn(dim, |_, _| rng.gen_range(-2.0..2.0));
        if let Ok(map) = AffineMap::new(m, t) {
            let j = map.jacobian();
            if (0.1..=5.0).contains(&j) && map.condition_number() <= 1e3 {
                return map;
            }
        }
    }
}

/// Random rotation (det +1) plus translation in [-2,2].
pub fn sample_rotation(dim: usize, rng: &mut impl Rng) -> AffineMap {
    let q = random_rotation_matrix(dim, rng);
    let t = DVector::from_fn(dim, |_, _| rng.gen_range(-2.0..2.0));
    AffineMap::new(q, t).expect("rotation is invertible")
}

/// Rotation times a uniform scale in [0.5, 1.5], plus translation.
pub fn sample_similarity(dim: usize, rng: &mut impl Rng) -> AffineMap {
    let s: f64 = rng.gen_range(0.5..1.5);
    let q = random_rotation_matrix(dim, rng) * s;
    let t = DVector::from_fn(dim, |_, _| rng.gen_range(-2.0..2.0));
    AffineMap::new(q, t).expect("invertible")
}

fn random_rotation_matrix(dim: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    if dim == 1 {
        return DMatrix::identity(1, 1);
    }
    loop {
        let m = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0));
        let qr = m.qr();
        let mut q = qr.q();
        let r = qr.r();
        // Fix the sign convention, then force det +1.
        for i in 0..dim {
            if r[(i, i)] < 0.0 {
                for k in 0..dim {
                    q[(k, i)] = -q[(k, i)];
                }
            }
        }
        if q.determinant() < 0.0 {
            for k in 0..dim {
                q[(k, 0)] = -q[(k, 0)];
            }
        }
        if q.determinant() > 0.5 {
            return q;
        }
    }
}

pub fn sample_group(group: TransformGroup, dim: usize, rng: &mut impl Rng) -> AffineMap {
    match group {
        TransformGroup::Rotation => sample_rotation(dim, rng),
        TransformGroup::Similarity => sample_similarity(dim, rng),
        TransformGroup::Affine | TransformGroup::Projective => sample_affine(dim, rng),
    }
}

/// Rational affine map with dyadic entries: exact, Jacobian positive.
pub fn sample_rational_affine(dim: usize, rng: &mut impl Rng) -> RationalAffineMap {
    loop {
        let matrix: Vec<Vec<Rational>> = (0..dim)
            .map(|_| (0..dim).map(|_| ratio(rng.gen_range(-16i64..=16), 8)).collect())
            .collect();
        let translation: Vec<Rational> =
            (0..dim).map(|_| ratio(rng.gen_range(-16i64..=16), 8)).collect();
        if let Ok(map) = RationalAffineMap::new(matrix, translation) {
            if map.jacobian() > Rational::zero() {
                return map;
            }
        }
    }
}

/// Bounded projective map: identity with bottom-row perturbations uniform in
/// [-0.2, 0.2], quantized to thousandths so the map stays exact.
pub fn sample_projective(dim: u32, rng: &mut impl Rng) -> ProjectiveMap {
    let d = dim as usize;
    loop {
        let mut matrix = ProjectiveMap::identity(dim).matrix;
        for a in 0..d {
            matrix[d][a] = ratio(rng.gen_range(-200i64..=200), 1000);
        }
        if let Ok(p) = ProjectiveMap::new(dim, matrix) {
            return p;
        }
    }
}

/// Evaluation point in [-1,1]^d quantized to 64ths, resampled until the
/// projective denominator (if any) stays at least 0.2 in magnitude.
pub fn sample_point(
    dim: u32,
    rng: &mut impl Rng,
    away_from: Option<&ProjectiveMap>,
) -> Result<Vec<Rational>, VerifyError> {
    for _ in 0..1000 {
        let p: Vec<Rational> =
            (0..dim).map(|_| ratio(rng.gen_range(-64i64..=64), 64)).collect();
        match away_from {
            None => return Ok(p),
            Some(m) => {
                let den = rational_to_f64(&m.denominator_at(&p)).abs();
                if den >= 0.2 {
                    return Ok(p);
                }
            }
        }
    }
    Err(VerifyError::TooManyPoles)
}

/// Run `f` over trial indices, in parallel when enabled, preserving index
/// order in the result.
fn run_trials<T: Send>(
    trials: u32,
    parallel: bool,
    f: impl Fn(u32) -> T + Sync + Send,
) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        if parallel {
            use rayon::prelude::*;
            return (0..trials).into_par_iter().map(f).collect();
        }
    }
    let _ = parallel;
    (0..trials).map(f).collect()
}

// ---------------------------------------------------------------------------
// Moment-side verification
// ---------------------------------------------------------------------------

/// Verify a moment-form expression on a set of images under sampled
/// transforms of a group. Normalized affine expressions must be absolute
/// invariants (ratio one).
pub fn verify_moment_invariance(
    e: &InvariantExpr,
    images: &[PointMassImage],
    group: TransformGroup,
    cfg: &VerifyConfig,
) -> Result<VerificationReport, VerifyError> {
    if images.is_empty() {
        return Err(VerifyError::NoImages);
    }
    if e.form != ExprForm::Moments {
        return Err(VerifyError::Image(ImageError::NotMomentForm));
    }
    if group == TransformGroup::Projective {
        return Err(VerifyError::BadGroup(group));
    }
    let dim = e.dim as usize;
    // Dyadic lift once; every trial then runs in exact arithmetic and rounds
    // a single scalar, so heavy cancellation in the expression cannot inflate
    // the observed deviation past genuine non-invariance.
    let lifted: Vec<RationalImage> = images.iter().map(RationalImage::from_image).collect();
    let base: Vec<f64> = lifted
        .iter()
        .map(|img| eval_moment_expr_exact(e, img).map(|v| rational_to_f64(&v)))
        .collect::<Result<_, _>>()?;
    let samples: Vec<Result<Vec<TrialSample>, VerifyError>> =
        run_trials(cfg.trials, cfg.parallel, |trial| {
            let mut rng = trial_rng(cfg.seed, trial);
            let t = sample_group(group, dim, &mut rng);
            let j = t.jacobian();
            let exact_t = RationalAffineMap::from_f64(&t);
            let mut out = Vec::with_capacity(images.len());
            for (i, img) in lifted.iter().enumerate() {
                let moved = img.apply_affine(&exact_t)?;
                let lhs = rational_to_f64(&eval_moment_expr_exact(e, &moved)?);
                out.push(make_sample(trial, i as u32, None, lhs, base[i], 1.0, j));
            }
            Ok(out)
        });
    let mut flat = Vec::new();
    for s in samples {
        flat.extend(s?);
    }
    Ok(assemble_report(
        e.meta.source.clone().unwrap_or_else(|| e.render()),
        group,
        cfg,
        0,
        flat,
    ))
}

// ---------------------------------------------------------------------------
// Derivative-side verification
// ---------------------------------------------------------------------------

/// Verify a derivative-form expression: for each sampled transform `T` and
/// point `x`, the numerator on the composed field at `x` must equal `J^k`
/// times the numerator on the original field at `T(x)`.
pub fn verify_derivative_invariance(
    e: &InvariantExpr,
    fields: &[ScalarField],
    group: TransformGroup,
    cfg: &VerifyConfig,
) -> Result<VerificationReport, VerifyError> {
    if fields.is_empty() {
        return Err(VerifyError::NoFields);
    }
    if e.form != ExprForm::Derivatives {
        return Err(VerifyError::Field(FieldError::NotDerivForm));
    }
    if group == TransformGroup::Projective {
        return Err(VerifyError::BadGroup(group));
    }
    let dim = e.dim as usize;
    let order = e.max_order();
    let k = e.normalization.power;
    let samples: Vec<Result<Vec<TrialSample>, VerifyError>> =
        run_trials(cfg.trials, cfg.parallel, |trial| {
            let mut rng = trial_rng(cfg.seed, trial);
            let t = sample_group(group, dim, &mut rng);
            let tq = RationalAffineMap::from_f64(&t);
            let j = rational_to_f64(&tq.jacobian());
            let mut out = Vec::new();
            for (fi, field) in fields.iter().enumerate() {
                let composed = field.compose_affine(&tq)?;
                for pi in 0..cfg.points {
                    let x = sample_point(dim as u32, &mut rng, None)?;
                    let jet_c = composed.jet(&x, order)?;
                    let lhs = rational_to_f64(&eval_deriv_numerator(e, &jet_c)?);
                    let mapped = tq.apply(&x);
                    let jet_o = field.jet(&mapped, order)?;
                    let rhs = rational_to_f64(&eval_deriv_numerator(e, &jet_o)?);
                    out.push(make_sample(
                        trial,
                        fi as u32,
                        Some(pi),
                        lhs,
                        rhs,
                        j.powi(k as i32),
                        j,
                    ));
                }
            }
            Ok(out)
        });
    let mut flat = Vec::new();
    for s in samples {
        flat.extend(s?);
    }
    Ok(assemble_report(
        e.meta.source.clone().unwrap_or_else(|| e.render()),
        group,
        cfg,
        k,
        flat,
    ))
}

/// Screen an affine differential invariant under bounded projective maps with
/// a pointwise local-Jacobian weight: at every sampled `(P, x)` the numerator
/// on the composed field at `x` must equal `J_P(x)^k` times the numerator on
/// the original at `P(x)`.
pub fn screen_projective(
    e: &InvariantExpr,
    fields: &[ScalarField],
    cfg: &VerifyConfig,
) -> Result<VerificationReport, VerifyError> {
    if fields.is_empty() {
        return Err(VerifyError::NoFields);
    }
    if e.form != ExprForm::Derivatives {
        return Err(VerifyError::Field(FieldError::NotDerivForm));
    }
    let dim = e.dim;
    let order = e.max_order();
    let k = e.normalization.power;
    let samples: Vec<Result<Vec<TrialSample>, VerifyError>> =
        run_trials(cfg.trials, cfg.parallel, |trial| {
            let mut rng = trial_rng(cfg.seed, trial);
            let p = sample_projective(dim, &mut rng);
            let mut out = Vec::new();
            for (fi, field) in fields.iter().enumerate() {
                for pi in 0..cfg.points {
                    let x = sample_point(dim, &mut rng, Some(&p))?;
                    let jet_c = field.projective_jet(&p, &x, order)?;
                    let lhs = rational_to_f64(&eval_deriv_numerator(e, &jet_c)?);
                    let mapped = p.apply(&x)?;
                    let jet_o = field.jet(&mapped, order)?;
                    let rhs = rational_to_f64(&eval_deriv_numerator(e, &jet_o)?);
                    let local_j = rational_to_f64(&p.local_jacobian(&x)?);
                    let mut weight = 1.0;
                    for _ in 0..k {
                        weight *= local_j;
                    }
                    out.push(make_sample(
                        trial,
                        fi as u32,
                        Some(pi),
                        lhs,
                        rhs,
                        weight,
                        local_j.abs(),
                    ));
                }
            }
            Ok(out)
        });
    let mut flat = Vec::new();
    for s in samples {
        flat.extend(s?);
    }
    Ok(assemble_report(
        e.meta.source.clone().unwrap_or_else(|| e.render()),
        TransformGroup::Projective,
        cfg,
        k,
        flat,
    ))
}

// ---------------------------------------------------------------------------
// Linear relation checks (same-order moments and derivatives)
// ---------------------------------------------------------------------------

/// Verify the linear relation among same-order moments and among same-order
/// derivatives under random affine maps, with the same multinomial matrix
/// machinery on both sides.
pub fn check_linear_relation(
    order: u32,
    dim: u32,
    cfg: &VerifyConfig,
) -> Result<VerificationReport, VerifyError> {
    let d = dim as usize;
    let mut input = input_rng(cfg.seed);
    let images: Vec<PointMassImage> =
        (0..4).map(|_| random_image(d, 30, &mut input)).collect();
    let fields: Vec<ScalarField> = (0..4)
        .map(|_| random_poly_field(dim, order + 1, &mut input))
        .collect();
    let samples: Vec<Result<Vec<TrialSample>, VerifyError>> =
        run_trials(cfg.trials, cfg.parallel, |trial| {
            let mut rng = trial_rng(cfg.seed, trial);
            let t = sample_affine(d, &mut rng);
            let j = t.jacobian();
            let b_mom = multinomial_matrix_f64(t.matrix(), order);
            let b_der = multinomial_matrix_f64(&t.matrix().transpose(), order);
            let tq = RationalAffineMap::from_f64(&t);
            let mut out = Vec::new();
            // Moment side: mu'(r) = J * B * mu(r).
            for (i, img) in images.iter().enumerate() {
                let before = DVector::from_vec(img.central_moment_vector(order)?);
                let moved = img.apply_affine(&t)?;
                let after = DVector::from_vec(moved.central_moment_vector(order)?);
                let predicted = (&b_mom * &before) * j;
                out.push(vector_sample(trial, i as u32, Some(0), &after, &predicted, j));
            }
            // Derivative side: jet of H(Tx + t) at x = B(T^T) * jet of H at Tx+t.
            for (i, field) in fields.iter().enumerate() {
                let x = sample_point(dim, &mut rng, None)?;
                let composed = field.compose_affine(&tq)?;
                let jet_c = composed.jet(&x, order)?;
                let jet_o = field.jet(&tq.apply(&x), order)?;
                let idxs = crate::maps::multi_indices(dim, order);
                let lhs = DVector::from_vec(
                    idxs.iter()
                        .map(|ix| Ok(rational_to_f64(jet_c.value(ix)?)))
                        .collect::<Result<Vec<f64>, FieldError>>()?,
                );
                let rhs = DVector::from_vec(
                    idxs.iter()
                        .map(|ix| Ok(rational_to_f64(jet_o.value(ix)?)))
                        .collect::<Result<Vec<f64>, FieldError>>()?,
                );
                let predicted = &b_der * &rhs;
                out.push(vector_sample(
                    trial,
                    (images.len() + i) as u32,
                    Some(1),
                    &lhs,
                    &predicted,
                    j,
                ));
            }
            Ok(out)
        });
    let mut flat = Vec::new();
    for s in samples {
        flat.extend(s?);
    }
    Ok(assemble_report(
        format!("linear-relation-order{order}-d{dim}"),
        TransformGroup::Affine,
        cfg,
        0,
        flat,
    ))
}

/// Componentwise relative deviation of a vector against its prediction,
/// folded into one sample (lhs/rhs are the vector norms).
fn vector_sample(
    transform: u32,
    subject: u32,
    point: Option<u32>,
    actual: &DVector<f64>,
    predicted: &DVector<f64>,
    jacobian: f64,
) -> TrialSample {
    let scale = actual.amax().max(predicted.amax());
    let degenerate = scale < MAGNITUDE_FLOOR;
    let rel_dev = if degenerate {
        0.0
    } else {
        (actual - predicted).amax() / scale
    };
    TrialSample {
        transform,
        subject,
        point,
        lhs: actual.norm(),
        rhs: predicted.norm(),
        ratio: 1.0,
        jacobian,
        rel_dev,
        degenerate,
    }
}

// ---------------------------------------------------------------------------
// Conjecture explorer
// ---------------------------------------------------------------------------

/// The candidate generating-function product `g(1,...,m) * g(2,...,m+1)` in
/// dimension m: the two-factor pattern whose m=2 and m=3 instances are known
/// projective differential invariants.
pub fn conjecture_spec(m: u32) -> Result<PISpec, SpecError> {
    if m < 2 {
        return Err(SpecError::BadGArity { dim: m, got: 0 });
    }
    let first: Vec<u32> = (1..=m).collect();
    let second: Vec<u32> = (2..=m + 1).collect();
    PISpec::new(m, vec![GenFactor::g(first), GenFactor::g(second)])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConjectureReport {
    pub m: u32,
    pub spec: String,
    pub expansion_terms: usize,
    pub moment_expr: String,
    pub derivative_expr: String,
    pub affine: VerificationReport,
    pub projective: VerificationReport,
    /// Evidence summary, not a theorem: both verdicts pass.
    pub supported: bool,
}

/// Run the whole pipeline on the conjectured spec: expand, translate,
/// verify affine invariance, screen projectively, report the evidence.
pub fn explore_conjecture(m: u32, cfg: &VerifyConfig) -> Result<ConjectureReport, VerifyError> {
    let spec = conjecture_spec(m)?;
    let expansion = spec.expand()?;
    let moment = spec_to_moments(&spec)?;
    let deriv = to_derivatives(&moment)?;
    let mut input = input_rng(cfg.seed);
    let fields: Vec<ScalarField> =
        (0..3).map(|_| random_poly_field(m, 3, &mut input)).collect();
    let affine = verify_derivative_invariance(&deriv, &fields, TransformGroup::Affine, cfg)?;
    let projective = screen_projective(&deriv, &fields, cfg)?;
    let supported = affine.passed() && projective.passed();
    Ok(ConjectureReport {
        m,
        spec: spec.to_string(),
        expansion_terms: expansion.num_terms(),
        moment_expr: moment.render(),
        derivative_expr: deriv.render(),
        affine,
        projective,
        supported,
    })
}

/// Convenience: the derivative-form invariant of the conjectured spec.
pub fn conjecture_derivative_expr(m: u32) -> Result<InvariantExpr, VerifyError> {
    let spec = conjecture_spec(m)?;
    Ok(to_derivatives(&spec_to_moments(&spec)?)?)
}

/// Laplacian-style rotation invariant: the derivative translation of the
/// first catalog rotation invariant.
pub fn laplacian_2d() -> InvariantExpr {
    to_derivatives(&catalog::hu_invariants()[0].clone()).expect("moment form")
}
