//! End-to-end acceptance gate. Each numbered check prints one pass/fail line;
//! the test fails if any check fails.

use geninv::algebra::{rat, ratio, rational_from_f64, Rational};
use geninv::catalog;
use geninv::difflab::eval_deriv_numerator;
use geninv::generators::PISpec;
use geninv::maps::{multi_indices, multinomial_matrix, multinomial_matrix_f64, RationalAffineMap};
use geninv::momentlab::eval_moment_expr;
use geninv::translator::{spec_to_moments, to_derivatives, InvariantExpr};
use geninv::verifier::{
    self, conjecture_derivative_expr, conjecture_spec, explore_conjecture, sample_affine,
    sample_point, sample_rational_affine, screen_projective,
    verify_derivative_invariance, verify_moment_invariance, TransformGroup, Verdict, VerifyConfig,
};
use nalgebra::DVector;
use num::{One, Zero};
use std::time::Instant;

type Check = Result<(), String>;

fn fail(msg: impl Into<String>) -> Check {
    Err(msg.into())
}

fn expect(cond: bool, msg: impl Into<String>) -> Check {
    if cond {
        Ok(())
    } else {
        fail(msg)
    }
}

fn cfg(trials: u32, seed: u64, tol: f64, points: u32) -> VerifyConfig {
    VerifyConfig { trials, seed, tolerance: tol, points, parallel: true }
}

// 1. Symbolic goldens: expansion, moment translation with recorded constants,
//    derivative translation.
fn symbolic_goldens() -> Check {
    let sq = PISpec::parse("g(1,2)*g(1,2)", None).map_err(|e| e.to_string())?;
    expect(
        sq.expand().map_err(|e| e.to_string())?.to_string()
            == "x1^2*y2^2 - 2*x1*x2*y1*y2 + x2^2*y1^2",
        "squared cross product expansion mismatch",
    )?;
    let e = spec_to_moments(&sq).map_err(|e| e.to_string())?;
    expect(
        e.render() == "(mu20*mu02 - mu11^2) / mu00^4" && e.meta.constant == "2",
        format!("moment translation mismatch: {} (constant {})", e.render(), e.meta.constant),
    )?;

    let chain = PISpec::parse("g(2,1)*g(2,3)", None).map_err(|e| e.to_string())?;
    let e = spec_to_moments(&chain).map_err(|e| e.to_string())?;
    expect(
        e.render() == "(mu20*mu01^2 - 2*mu11*mu10*mu01 + mu02*mu10^2) / mu00^5"
            && e.meta.constant == "1",
        format!("three-point translation mismatch: {}", e.render()),
    )?;
    let d = to_derivatives(&e).map_err(|e| e.to_string())?;
    expect(
        d.render() == "(Hxx*Hy^2 - 2*Hxy*Hx*Hy + Hyy*Hx^2) / J^2",
        format!("derivative translation mismatch: {}", d.render()),
    )?;

    let f11 = PISpec::parse("f(1,1)", Some(2)).map_err(|e| e.to_string())?;
    let e = spec_to_moments(&f11).map_err(|e| e.to_string())?;
    expect(e.render() == "mu20 + mu02", format!("inner-product translation: {}", e.render()))
}

// 2. Linear relation among same-order moments under affine maps, float path:
//    20 images x 20 maps, orders 2 and 3 in 2D and order 2 in 3D, within 1e-9
//    and 10 seconds.
fn moment_linear_relation() -> Check {
    let start = Instant::now();
    for (dim, orders) in [(2usize, vec![2u32, 3]), (3, vec![2])] {
        let mut rng = verifier::input_rng(101);
        let images: Vec<_> = (0..20).map(|_| verifier::random_image(dim, 30, &mut rng)).collect();
        let maps: Vec<_> = (0..20).map(|_| sample_affine(dim, &mut rng)).collect();
        for t in &maps {
            let j = t.jacobian();
            for &r in &orders {
                let b = multinomial_matrix_f64(t.matrix(), r);
                for img in &images {
                    let before = DVector::from_vec(
                        img.central_moment_vector(r).map_err(|e| e.to_string())?,
                    );
                    let moved = img.apply_affine(t).map_err(|e| e.to_string())?;
                    let after = DVector::from_vec(
                        moved.central_moment_vector(r).map_err(|e| e.to_string())?,
                    );
                    let predicted = (&b * &before) * j;
                    let scale = after.amax().max(predicted.amax());
                    let dev = (&after - &predicted).amax() / scale;
                    expect(
                        dev <= 1e-9,
                        format!("moment relation dev {dev:e} (dim {dim}, order {r})"),
                    )?;
                }
            }
        }
    }
    expect(start.elapsed().as_secs() < 10, "moment relation check exceeded 10s")
}

// 3. Linear relation among same-order derivatives, exact rational arithmetic:
//    10 cubic fields x 10 rational affine maps, zero deviation.
fn derivative_linear_relation_exact() -> Check {
    let mut rng = verifier::input_rng(202);
    let fields: Vec<_> = (0..10).map(|_| verifier::random_poly_field(2, 3, &mut rng)).collect();
    let maps: Vec<_> = (0..10).map(|_| sample_rational_affine(2, &mut rng)).collect();
    let idxs = multi_indices(2, 2);
    for t in &maps {
        let b = multinomial_matrix(&t.transposed_matrix(), 2);
        for field in &fields {
            let x = sample_point(2, &mut rng, None).map_err(|e| e.to_string())?;
            let composed = field.compose_affine(t).map_err(|e| e.to_string())?;
            let jet_c = composed.jet(&x, 2).map_err(|e| e.to_string())?;
            let jet_o = field.jet(&t.apply(&x), 2).map_err(|e| e.to_string())?;
            for (row, ix) in idxs.iter().enumerate() {
                let lhs = jet_c.value(ix).map_err(|e| e.to_string())?.clone();
                let mut rhs = Rational::zero();
                for (col, jx) in idxs.iter().enumerate() {
                    rhs += b[row][col].clone()
                        * jet_o.value(jx).map_err(|e| e.to_string())?.clone();
                }
                expect(lhs == rhs, format!("derivative relation not exact at {ix:?}"))?;
            }
        }
    }
    Ok(())
}

// 4. Moment invariance: the affine catalog passes 100 affine trials, the
//    rotation catalogs (2D and 3D) pass 100 rotation+translation trials, and
//    a rotation-only invariant fails generic affine maps by a wide margin.
fn moment_invariance_catalog() -> Check {
    let mut rng = verifier::input_rng(303);
    let images2: Vec<_> = (0..3).map(|_| verifier::random_image(2, 30, &mut rng)).collect();
    let images3: Vec<_> = (0..3).map(|_| verifier::random_image(3, 30, &mut rng)).collect();
    let c = cfg(100, 303, 1e-9, 1);

    for (i, e) in catalog::affine_2d_invariants().iter().enumerate() {
        let r = verify_moment_invariance(e, &images2, TransformGroup::Affine, &c)
            .map_err(|e| e.to_string())?;
        expect(
            r.verdict == Verdict::Pass,
            format!("affine catalog entry {} failed: max dev {:e}", i + 1, r.max_rel_dev),
        )?;
    }
    for (i, e) in catalog::hu_invariants().iter().enumerate() {
        let r = verify_moment_invariance(e, &images2, TransformGroup::Rotation, &c)
            .map_err(|e| e.to_string())?;
        expect(
            r.verdict == Verdict::Pass,
            format!("rotation catalog entry {} failed: max dev {:e}", i + 1, r.max_rel_dev),
        )?;
    }
    for (i, e) in catalog::invariants_3d().iter().enumerate() {
        let r = verify_moment_invariance(e, &images3, TransformGroup::Rotation, &c)
            .map_err(|e| e.to_string())?;
        expect(
            r.verdict == Verdict::Pass,
            format!("3D catalog entry {} failed: max dev {:e}", i + 1, r.max_rel_dev),
        )?;
    }
    // Negative control: the second rotation invariant is not affine-invariant.
    let hu2 = catalog::by_name("hu2").unwrap();
    let r = verify_moment_invariance(&hu2, &images2, TransformGroup::Affine, &c)
        .map_err(|e| e.to_string())?;
    expect(
        r.verdict == Verdict::Fail && r.max_rel_dev > 0.1,
        format!("negative control too tame: max dev {:e}", r.max_rel_dev),
    )
}

fn exact_weight_check(
    e: &InvariantExpr,
    dim: u32,
    degree: u32,
    n_fields: usize,
    n_maps: usize,
    n_points: usize,
    seed: u64,
) -> Check {
    let order = e.max_order();
    let k = e.normalization.power;
    let mut rng = verifier::input_rng(seed);
    let fields: Vec<_> = (0..n_fields)
        .map(|_| verifier::random_poly_field(dim, degree, &mut rng))
        .collect();
    let maps: Vec<_> = (0..n_maps)
        .map(|_| sample_rational_affine(dim as usize, &mut rng))
        .collect();
    for t in &maps {
        let j = t.jacobian();
        let mut weight = Rational::one();
        for _ in 0..k {
            weight *= j.clone();
        }
        for field in &fields {
            let composed = field.compose_affine(t).map_err(|e| e.to_string())?;
            for _ in 0..n_points {
                let x = sample_point(dim, &mut rng, None).map_err(|e| e.to_string())?;
                let jet_c = composed.jet(&x, order).map_err(|e| e.to_string())?;
                let lhs = eval_deriv_numerator(e, &jet_c).map_err(|e| e.to_string())?;
                let jet_o = field.jet(&t.apply(&x), order).map_err(|e| e.to_string())?;
                let rhs = eval_deriv_numerator(e, &jet_o).map_err(|e| e.to_string())?;
                expect(
                    lhs == weight.clone() * rhs,
                    format!("weight relation not exact (dim {dim}, k {k})"),
                )?;
            }
        }
    }
    Ok(())
}

// 5. Differential invariance, exact path: the 2D and 3D two-factor invariants
//    satisfy lhs = J^2 * rhs in rational arithmetic; the Laplacian has ratio
//    exactly one under exact rotations; fitted exponents match the declared
//    Jacobian power in floating mode.
fn differential_invariance_exact() -> Check {
    let e2 = conjecture_derivative_expr(2).map_err(|e| e.to_string())?;
    exact_weight_check(&e2, 2, 3, 10, 10, 5, 404)?;
    let e3 = conjecture_derivative_expr(3).map_err(|e| e.to_string())?;
    exact_weight_check(&e3, 3, 3, 4, 4, 3, 405)?;

    // Exact Pythagorean rotations leave the Laplacian numerator unchanged.
    let lap = verifier::laplacian_2d();
    let rotations = [
        RationalAffineMap::new(
            vec![vec![ratio(3, 5), ratio(-4, 5)], vec![ratio(4, 5), ratio(3, 5)]],
            vec![ratio(1, 2), rat(-2)],
        ),
        RationalAffineMap::new(
            vec![vec![ratio(5, 13), ratio(-12, 13)], vec![ratio(12, 13), ratio(5, 13)]],
            vec![rat(3), ratio(-7, 4)],
        ),
    ];
    let mut rng = verifier::input_rng(406);
    for t in rotations {
        let t = t.map_err(|e| e.to_string())?;
        for _ in 0..5 {
            let field = verifier::random_poly_field(2, 3, &mut rng);
            let x = sample_point(2, &mut rng, None).map_err(|e| e.to_string())?;
            let lhs = eval_deriv_numerator(
                &lap,
                &field.compose_affine(&t).map_err(|e| e.to_string())?.jet(&x, 2)
                    .map_err(|e| e.to_string())?,
            )
            .map_err(|e| e.to_string())?;
            let rhs = eval_deriv_numerator(
                &lap,
                &field.jet(&t.apply(&x), 2).map_err(|e| e.to_string())?,
            )
            .map_err(|e| e.to_string())?;
            expect(lhs == rhs, "Laplacian ratio not exactly one under rotation")?;
        }
    }

    // Floating mode: the fitted exponent recovers the declared power.
    let mut rng = verifier::input_rng(407);
    let fields: Vec<_> = (0..2).map(|_| verifier::random_poly_field(2, 3, &mut rng)).collect();
    let r = verify_derivative_invariance(&e2, &fields, TransformGroup::Affine, &cfg(40, 407, 1e-9, 3))
        .map_err(|e| e.to_string())?;
    let fit = r.fitted_exponent.ok_or("no exponent fitted")?;
    expect(
        r.verdict == Verdict::Pass && (fit - 2.0).abs() <= 0.01,
        format!("fitted exponent {fit} (declared 2)"),
    )
}

// 6. Projective screening: the 2D and 3D two-factor invariants pass under 50
//    bounded projective maps x 10 points at 1e-6; the Hessian determinant
//    fails, with the counterexample logged.
fn projective_screening() -> Check {
    let c = cfg(50, 505, 1e-6, 10);
    let mut rng = verifier::input_rng(505);
    let f2: Vec<_> = (0..1).map(|_| verifier::random_poly_field(2, 3, &mut rng)).collect();
    let f3: Vec<_> = (0..1).map(|_| verifier::random_poly_field(3, 3, &mut rng)).collect();

    let e2 = conjecture_derivative_expr(2).map_err(|e| e.to_string())?;
    let r = screen_projective(&e2, &f2, &c).map_err(|e| e.to_string())?;
    expect(
        r.verdict == Verdict::Pass,
        format!("2D screening failed: max dev {:e}", r.max_rel_dev),
    )?;

    let e3 = conjecture_derivative_expr(3).map_err(|e| e.to_string())?;
    let r = screen_projective(&e3, &f3, &c).map_err(|e| e.to_string())?;
    expect(
        r.verdict == Verdict::Pass,
        format!("3D screening failed: max dev {:e}", r.max_rel_dev),
    )?;

    let hess = catalog::hessian_det_2d();
    let r = screen_projective(&hess, &f2, &c).map_err(|e| e.to_string())?;
    expect(r.verdict == Verdict::Fail, "Hessian determinant unexpectedly passed screening")?;
    let w = r.worst_sample().ok_or("no counterexample sample")?;
    println!(
        "   counterexample: transform {} point {:?} lhs {:.6e} expected {:.6e} (J_local {:.4})",
        w.transform,
        w.point,
        w.lhs,
        w.ratio * w.rhs,
        w.jacobian
    );
    expect(w.rel_dev > 1e-6, "counterexample deviation below tolerance")
}

// 7. Conjectured two-factor family: the 2D instance matches the known
//    three-point product up to sign, the 3D instance is the known 4-point
//    product, and the 4D instance runs end to end within 60 seconds (outcome
//    recorded as evidence, not asserted).
fn conjecture_family() -> Check {
    let two = conjecture_spec(2).map_err(|e| e.to_string())?;
    let known = PISpec::parse("g(2,1)*g(2,3)", None).map_err(|e| e.to_string())?;
    let a = two.expand().map_err(|e| e.to_string())?;
    let b = known.expand().map_err(|e| e.to_string())?;
    expect(a == b || a == b.neg(), "2D conjecture instance differs beyond sign")?;

    let three = conjecture_spec(3).map_err(|e| e.to_string())?;
    expect(
        three.to_string() == "g(1,2,3)*g(2,3,4)",
        format!("3D conjecture instance is {three}"),
    )?;

    let start = Instant::now();
    let report = explore_conjecture(4, &cfg(10, 606, 1e-6, 2)).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    println!(
        "   4D evidence: affine {:?} (max dev {:.3e}), projective {:?} (max dev {:.3e}), {} expansion terms, {:.1}s",
        report.affine.verdict,
        report.affine.max_rel_dev,
        report.projective.verdict,
        report.projective.max_rel_dev,
        report.expansion_terms,
        elapsed.as_secs_f64()
    );
    expect(elapsed.as_secs() < 60, format!("4D exploration took {:?}", elapsed))
}

// 8. Determinism: same seed, byte-identical reports, parallel or not.
fn determinism() -> Check {
    let e = catalog::by_name("aff1").unwrap();
    let mut rng = verifier::input_rng(707);
    let images: Vec<_> = (0..2).map(|_| verifier::random_image(2, 20, &mut rng)).collect();
    let c = cfg(20, 707, 1e-9, 2);
    let a = verify_moment_invariance(&e, &images, TransformGroup::Affine, &c)
        .map_err(|e| e.to_string())?;
    let b = verify_moment_invariance(&e, &images, TransformGroup::Affine, &c)
        .map_err(|e| e.to_string())?;
    expect(a.to_json() == b.to_json(), "moment verification reports differ")?;
    let mut seq = c.clone();
    seq.parallel = false;
    let s = verify_moment_invariance(&e, &images, TransformGroup::Affine, &seq)
        .map_err(|e| e.to_string())?;
    expect(a.samples == s.samples, "parallel and sequential sample sets differ")?;

    let d = conjecture_derivative_expr(2).map_err(|e| e.to_string())?;
    let fields: Vec<_> = (0..1).map(|_| verifier::random_poly_field(2, 3, &mut rng)).collect();
    let a = screen_projective(&d, &fields, &c).map_err(|e| e.to_string())?;
    let b = screen_projective(&d, &fields, &c).map_err(|e| e.to_string())?;
    expect(a.to_json() == b.to_json(), "screening reports differ")
}

// 9. First-order symbols: the three-point moment form vanishes identically on
//    central moments (computed exactly), while its derivative translation is
//    nonzero on a generic cubic field.
fn first_order_flag() -> Check {
    let spec = PISpec::parse("g(2,1)*g(2,3)", None).map_err(|e| e.to_string())?;
    let e = spec_to_moments(&spec).map_err(|e| e.to_string())?;
    expect(e.contains_first_order(), "moment form has no first-order symbol")?;

    // Exact central-moment evaluation on a random image lifted to rationals.
    let mut rng = verifier::input_rng(808);
    for _ in 0..3 {
        let img = verifier::random_image(2, 12, &mut rng);
        let pts: Vec<(Vec<Rational>, Rational)> = img
            .points()
            .iter()
            .map(|p| {
                (
                    p.pos.iter().map(|&c| rational_from_f64(c).unwrap()).collect(),
                    rational_from_f64(p.mass).unwrap(),
                )
            })
            .collect();
        let m00: Rational = pts.iter().map(|(_, m)| m.clone()).sum();
        let centroid: Vec<Rational> = (0..2)
            .map(|a| {
                pts.iter()
                    .map(|(p, m)| p[a].clone() * m.clone())
                    .sum::<Rational>()
                    / m00.clone()
            })
            .collect();
        let central = |idx: &[u32]| -> Rational {
            pts.iter()
                .map(|(p, m)| {
                    let mut t = m.clone();
                    for (a, &e) in idx.iter().enumerate() {
                        for _ in 0..e {
                            t *= p[a].clone() - centroid[a].clone();
                        }
                    }
                    t
                })
                .sum()
        };
        let mut value = Rational::zero();
        for term in &e.terms {
            let mut t = term.coeff.clone();
            for s in &term.symbols {
                t *= central(s);
            }
            value += t;
        }
        expect(value.is_zero(), "moment form did not vanish exactly on central moments")?;
    }

    // The float evaluator agrees up to roundoff.
    let img = verifier::random_image(2, 12, &mut rng);
    let v = eval_moment_expr(&e, &img).map_err(|e| e.to_string())?;
    expect(v.abs() < 1e-12, format!("float evaluation {v:e} not at roundoff level"))?;

    let d = to_derivatives(&e).map_err(|e| e.to_string())?;
    let field = geninv::difflab::parse_field("x^3 - 2*x*y^2 + y^3 + x*y", 2)
        .map_err(|e| e.to_string())?;
    let jet = field.jet(&[ratio(1, 3), ratio(-1, 2)], 2).map_err(|e| e.to_string())?;
    let v = eval_deriv_numerator(&d, &jet).map_err(|e| e.to_string())?;
    expect(!v.is_zero(), "derivative form vanished on a generic cubic")
}

#[test]
fn acceptance() {
    let checks: Vec<(&str, fn() -> Check)> = vec![
        ("symbolic goldens", symbolic_goldens),
        ("moment linear relation", moment_linear_relation),
        ("derivative linear relation (exact)", derivative_linear_relation_exact),
        ("moment invariance catalog", moment_invariance_catalog),
        ("differential invariance (exact)", differential_invariance_exact),
        ("projective screening", projective_screening),
        ("conjectured two-factor family", conjecture_family),
        ("determinism", determinism),
        ("first-order symbols", first_order_flag),
    ];
    let mut failures = Vec::new();
    for (i, (name, check)) in checks.iter().enumerate() {
        match check() {
            Ok(()) => println!("{}. {name}: pass", i + 1),
            Err(msg) => {
                println!("{}. {name}: FAIL — {msg}", i + 1);
                failures.push(format!("{}. {name}: {msg}", i + 1));
            }
        }
    }
    assert!(failures.is_empty(), "failed criteria:\n{}", failures.join("\n"));
}
