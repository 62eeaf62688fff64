//! Catalog of classical invariants used as verification subjects: Hu's seven
//! 2D moment invariants, the three low-order 2D affine moment invariants, the
//! three 3D second-order moment invariants, and a couple of derivative-form
//! entries used as screening controls.

use crate::algebra::{rat, Rational};
use crate::translator::{
    ExprForm, ExprMeta, InvariantExpr, MultiIndex, NormKind, Normalization,
};

/// Symbol-polynomial scratch type: a sum of (coefficient, symbol multiset)
/// terms, combined with ordinary polynomial arithmetic before being frozen
/// into an [`InvariantExpr`].
type SymPoly = Vec<(Rational, Vec<MultiIndex>)>;

fn mu(idx: &[u32]) -> SymPoly {
    vec![(rat(1), vec![idx.to_vec()])]
}

fn add(a: SymPoly, b: SymPoly) -> SymPoly {
    let mut out = a;
    out.extend(b);
    out
}

fn sub(a: SymPoly, b: SymPoly) -> SymPoly {
    add(a, scale(b, -1))
}

fn scale(a: SymPoly, c: i64) -> SymPoly {
    a.into_iter().map(|(k, s)| (k * rat(c), s)).collect()
}

fn mul(a: &SymPoly, b: &SymPoly) -> SymPoly {
    let mut out = Vec::new();
    for (ca, sa) in a {
        for (cb, sb) in b {
            let mut s = sa.clone();
            s.extend(sb.iter().cloned());
            out.push((ca.clone() * cb.clone(), s));
        }
    }
    out
}

fn square(a: &SymPoly) -> SymPoly {
    mul(a, a)
}

fn freeze(dim: u32, terms: SymPoly, w: u32, m: u32, k: u32, name: &str) -> InvariantExpr {
    InvariantExpr::from_terms(
        dim,
        ExprForm::Moments,
        terms,
        Normalization { kind: NormKind::Mu00, power: w },
        ExprMeta { m, k, constant: "1".into(), source: Some(name.into()) },
    )
}

/// Hu's seven 2D moment invariants, invariant under rotation and translation.
pub fn hu_invariants() -> Vec<InvariantExpr> {
    let m20 = mu(&[2, 0]);
    let m02 = mu(&[0, 2]);
    let m11 = mu(&[1, 1]);
    let m30 = mu(&[3, 0]);
    let m03 = mu(&[0, 3]);
    let m21 = mu(&[2, 1]);
    let m12 = mu(&[1, 2]);

    let s30_12 = add(m30.clone(), m12.clone()); // mu30 + mu12
    let s21_03 = add(m21.clone(), m03.clone()); // mu21 + mu03
    let d30_12 = sub(m30.clone(), scale(m12.clone(), 3)); // mu30 - 3 mu12
    let d21_03 = sub(scale(m21.clone(), 3), m03.clone()); // 3 mu21 - mu03
    let d20_02 = sub(m20.clone(), m02.clone());

    let i1 = add(m20.clone(), m02.clone());
    let i2 = add(square(&d20_02), scale(square(&m11), 4));
    let i3 = add(square(&d30_12), square(&d21_03));
    let i4 = add(square(&s30_12), square(&s21_03));
    let i5 = add(
        mul(
            &mul(&d30_12, &s30_12),
            &sub(square(&s30_12), scale(square(&s21_03), 3)),
        ),
        mul(
            &mul(&d21_03, &s21_03),
            &sub(scale(square(&s30_12), 3), square(&s21_03)),
        ),
    );
    let i6 = add(
        mul(&d20_02, &sub(square(&s30_12), square(&s21_03))),
        scale(mul(&mul(&m11, &s30_12), &s21_03), 4),
    );
    let i7 = sub(
        mul(
            &mul(&d21_03, &s30_12),
            &sub(square(&s30_12), scale(square(&s21_03), 3)),
        ),
        mul(
            &mul(&d30_12, &s21_03),
            &sub(scale(square(&s30_12), 3), square(&s21_03)),
        ),
    );

    [
        (i1, 1u32), (i2, 2), (i3, 2), (i4, 2), (i5, 4), (i6, 3), (i7, 4),
    ]
    .into_iter()
    .enumerate()
    .map(|(n, (terms, m))| freeze(2, terms, 0, m, 0, &format!("hu{}", n + 1)))
    .collect()
}

/// The three low-order 2D affine moment invariants, with their zero-order
/// moment normalizations (powers 4, 10, 7).
pub fn affine_2d_invariants() -> Vec<InvariantExpr> {
    let m20 = mu(&[2, 0]);
    let m02 = mu(&[0, 2]);
    let m11 = mu(&[1, 1]);
    let m30 = mu(&[3, 0]);
    let m03 = mu(&[0, 3]);
    let m21 = mu(&[2, 1]);
    let m12 = mu(&[1, 2]);

    let i1 = sub(mul(&m20, &m02), square(&m11));
    let i2 = add(
        sub(
            add(
                sub(
                    mul(&square(&m30), &square(&m03)),
                    scale(mul(&mul(&m30, &m21), &mul(&m12, &m03)), 6),
                ),
                scale(mul(&m30, &mul(&m12, &square(&m12))), 4),
            ),
            scale(mul(&square(&m21), &square(&m12)), 3),
        ),
        scale(mul(&mul(&m21, &square(&m21)), &m03), 4),
    );
    let i3 = add(
        sub(
            mul(&m20, &sub(mul(&m21, &m03), square(&m12))),
            mul(&m11, &sub(mul(&m30, &m03), mul(&m21, &m12))),
        ),
        mul(&m02, &sub(mul(&m30, &m12), square(&m21))),
    );

    vec![
        freeze(2, i1, 4, 2, 2, "aff2d_1"),
        freeze(2, i2, 10, 4, 6, "aff2d_2"),
        freeze(2, i3, 7, 3, 4, "aff2d_3"),
    ]
}

/// The three 3D second-order moment invariants (principal minors of the
/// second-order moment matrix), invariant under rotation and translation.
pub fn invariants_3d() -> Vec<InvariantExpr> {
    let m200 = mu(&[2, 0, 0]);
    let m020 = mu(&[0, 2, 0]);
    let m002 = mu(&[0, 0, 2]);
    let m110 = mu(&[1, 1, 0]);
    let m101 = mu(&[1, 0, 1]);
    let m011 = mu(&[0, 1, 1]);

    let i1 = add(add(m200.clone(), m020.clone()), m002.clone());
    let i2 = sub(
        sub(
            sub(
                add(
                    add(mul(&m200, &m020), mul(&m200, &m002)),
                    mul(&m020, &m002),
                ),
                square(&m110),
            ),
            square(&m101),
        ),
        square(&m011),
    );
    let i3 = sub(
        sub(
            sub(
                add(
                    mul(&mul(&m200, &m020), &m002),
                    scale(mul(&mul(&m110, &m101), &m011), 2),
                ),
                mul(&m002, &square(&m110)),
            ),
            mul(&m020, &square(&m101)),
        ),
        mul(&m200, &square(&m011)),
    );

    vec![
        freeze(3, i1, 0, 1, 0, "s3d_1"),
        freeze(3, i2, 0, 2, 0, "s3d_2"),
        freeze(3, i3, 0, 3, 0, "s3d_3"),
    ]
}

/// Hessian determinant `Hxx*Hyy - Hxy^2` with Jacobian weight 2: an affine
/// differential invariant that is expected to fail projective screening.
pub fn hessian_det_2d() -> InvariantExpr {
    InvariantExpr::from_terms(
        2,
        ExprForm::Derivatives,
        vec![
            (rat(1), vec![vec![2, 0], vec![0, 2]]),
            (rat(-1), vec![vec![1, 1], vec![1, 1]]),
        ],
        Normalization { kind: NormKind::Jacobian, power: 2 },
        ExprMeta { m: 2, k: 2, constant: "1".into(), source: Some("hessdet2d".into()) },
    )
}

/// A lone second-order moment: the negative control that no verifier should
/// accept.
pub fn mu20_alone() -> InvariantExpr {
    freeze(2, mu(&[2, 0]), 0, 1, 0, "mu20")
}

/// A lone second-order derivative, the derivative-side negative control.
pub fn hxx_alone() -> InvariantExpr {
    InvariantExpr::from_terms(
        2,
        ExprForm::Derivatives,
        vec![(rat(1), vec![vec![2, 0]])],
        Normalization { kind: NormKind::Jacobian, power: 0 },
        ExprMeta { m: 1, k: 0, constant: "1".into(), source: Some("hxx".into()) },
    )
}

/// Look up a catalog entry by name: `hu1`..`hu7`, `aff1`..`aff3`,
/// `s3d1`..`s3d3`, `hessdet2d`, `mu20`, `hxx`.
pub fn by_name(name: &str) -> Option<InvariantExpr> {
    if let Some(n) = name.strip_prefix("hu") {
        let n: usize = n.parse().ok()?;
        return hu_invariants().into_iter().nth(n.checked_sub(1)?);
    }
    if let Some(n) = name.strip_prefix("aff") {
        let n: usize = n.parse().ok()?;
        return affine_2d_invariants().into_iter().nth(n.checked_sub(1)?);
    }
    if let Some(n) = name.strip_prefix("s3d") {
        let n: usize = n.parse().ok()?;
        return invariants_3d().into_iter().nth(n.checked_sub(1)?);
    }
    match name {
        "hessdet2d" => Some(hessian_det_2d()),
        "mu20" => Some(mu20_alone()),
        "hxx" => Some(hxx_alone()),
        _ => None,
    }
}
