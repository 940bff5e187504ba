//! Integration tests for homogeneous-polynomial and rational-curve
//! operations: frozen hand-checked examples plus randomized structural
//! properties. All polynomial arithmetic used to plant or verify cases is
//! done with the test's own convolution helper, independent of the library.

use bubbletree::poly::{HomogPoly, MapTuple, P1Point, RationalCurve};
use bubbletree::{Complex, TAU_POINT};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex {
    Complex::new(re, im)
}

/// Test-owned polynomial product on u-descending coefficient vectors.
fn conv(a: &[Complex], b: &[Complex]) -> Vec<Complex> {
    let mut out = vec![c(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Coefficients of the monic-in-u polynomial with the given affine roots.
fn poly_from_affine_roots(roots: &[Complex]) -> Vec<Complex> {
    let mut p = vec![c(1.0, 0.0)];
    for r in roots {
        p = conv(&p, &[c(1.0, 0.0), -r]);
    }
    p
}

/// Scales a coefficient vector so its sup norm is 1 and the first maximal
/// coefficient is real positive, for projectively-robust comparison.
fn canonical(coeffs: &[Complex]) -> Vec<Complex> {
    let sup = coeffs.iter().map(|x| x.norm()).fold(0.0, f64::max);
    assert!(sup > 0.0);
    let pivot = *coeffs.iter().find(|x| x.norm() >= sup * (1.0 - 1e-12)).unwrap();
    let factor = pivot.conj() / (pivot.norm() * sup);
    coeffs.iter().map(|x| x * factor).collect()
}

fn assert_coeffs_close(got: &[Complex], want: &[Complex], tol: f64) {
    assert_eq!(got.len(), want.len());
    let (g, w) = (canonical(got), canonical(want));
    for (a, b) in g.iter().zip(&w) {
        assert!(
            (a - b).norm() <= tol,
            "coefficient mismatch: {a} vs {b} (tol {tol:.1e})"
        );
    }
}

// ---------------------------------------------------------------------------
// frozen evaluation and root examples
// ---------------------------------------------------------------------------

#[test]
fn eval_hand_examples() {
    // u*v at [1, 1]
    let p = HomogPoly::new(vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
    let pt = P1Point::new(c(1.0, 0.0), c(1.0, 0.0)).unwrap();
    assert!((p.eval(&pt) - c(1.0, 0.0)).norm() < 1e-15);

    // u^2 at [0, 1]
    let p = HomogPoly::new(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
    assert!(p.eval(&P1Point::zero()).norm() < 1e-15);

    // u^2 - v^2 at [2, 1], which normalizes to [1, 0.5]: 1 - 0.25
    let p = HomogPoly::new(vec![c(1.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]).unwrap();
    let pt = P1Point::new(c(2.0, 0.0), c(1.0, 0.0)).unwrap();
    assert!((p.eval(&pt) - c(0.75, 0.0)).norm() < 1e-15);
}

#[test]
fn roots_monomial_and_infinity() {
    // u^3: triple root at [0, 1]
    let p = HomogPoly::new(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
    let roots = p.roots().unwrap();
    assert_eq!(roots.len(), 1);
    assert_eq!(roots[0].1, 3);
    assert!(roots[0].0.close_to(&P1Point::zero(), TAU_POINT));

    // v^3: triple root at infinity [1, 0]
    let p = HomogPoly::new(vec![c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
    let roots = p.roots().unwrap();
    assert_eq!(roots.len(), 1);
    assert_eq!(roots[0].1, 3);
    assert!(roots[0].0.is_infinity());
}

#[test]
fn roots_with_multiplicity() {
    // (z - 1)^2 (z - 2) = z^3 - 4z^2 + 5z - 2
    let p = HomogPoly::new(vec![c(1.0, 0.0), c(-4.0, 0.0), c(5.0, 0.0), c(-2.0, 0.0)]).unwrap();
    let mut roots = p.roots().unwrap();
    roots.sort_by_key(|(_, m)| std::cmp::Reverse(*m));
    assert_eq!(roots.len(), 2);
    assert_eq!(roots[0].1, 2);
    assert!(roots[0].0.close_to(&P1Point::from_affine(c(1.0, 0.0)), 1e-5));
    assert_eq!(roots[1].1, 1);
    assert!(roots[1].0.close_to(&P1Point::from_affine(c(2.0, 0.0)), 1e-5));
}

#[test]
fn zero_inputs_rejected() {
    assert!(P1Point::new(c(0.0, 0.0), c(0.0, 0.0)).is_err());
    // the zero polynomial is a representable sentinel, but has no roots
    let z = HomogPoly::zero(1);
    assert!(z.roots().is_err());
    assert!(MapTuple::new(vec![z.clone(), z]).is_err());
    // entries with a common root do not form a curve
    let u2 = HomogPoly::new(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
    let uv = HomogPoly::new(vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
    assert!(RationalCurve::new(MapTuple::new(vec![u2, uv]).unwrap()).is_err());
}

// ---------------------------------------------------------------------------
// frozen common-factor examples
// ---------------------------------------------------------------------------

#[test]
fn common_factor_planted_u_squared() {
    // [u^2 (u - v), u^2 (u + v), u^2 v]
    let e1 = HomogPoly::new(vec![c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
    let e2 = HomogPoly::new(vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
    let e3 = HomogPoly::new(vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
    let t = MapTuple::new(vec![e1, e2, e3]).unwrap();
    let f = t.common_factor().unwrap();
    assert_eq!(f.roots.len(), 1);
    assert_eq!(f.roots[0].1, 2);
    assert!(f.roots[0].0.close_to(&P1Point::zero(), TAU_POINT));
    assert_eq!(f.residual.degree(), 1);
    // residual is [u - v, u + v, v] up to a shared scalar
    let want = [
        vec![c(1.0, 0.0), c(-1.0, 0.0)],
        vec![c(1.0, 0.0), c(1.0, 0.0)],
        vec![c(0.0, 0.0), c(1.0, 0.0)],
    ];
    // find the scalar from the first entry, then require it shared
    let got0 = f.residual.entries()[0].coeffs();
    let lambda = got0[0] / want[0][0];
    for (entry, w) in f.residual.entries().iter().zip(&want) {
        for (a, b) in entry.coeffs().iter().zip(w) {
            assert!((a - b * lambda).norm() < 1e-10);
        }
    }
}

#[test]
fn common_factor_coprime_tuple_is_untouched() {
    let u = HomogPoly::new(vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
    let v = HomogPoly::new(vec![c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
    let t = MapTuple::new(vec![u, v]).unwrap();
    let f = t.common_factor().unwrap();
    assert!(f.roots.is_empty());
    assert_eq!(f.residual.degree(), 1);
}

#[test]
fn common_factor_synthetic_division() {
    // [u^3, u^2 v] -> common factor u^2, residual [u, v]
    let e1 = HomogPoly::new(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
    let e2 = HomogPoly::new(vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
    let t = MapTuple::new(vec![e1, e2]).unwrap();
    let f = t.common_factor().unwrap();
    assert_eq!(f.roots.len(), 1);
    assert_eq!(f.roots[0].1, 2);
    assert!(f.roots[0].0.close_to(&P1Point::zero(), TAU_POINT));
    assert_coeffs_close(
        f.residual.entries()[0].coeffs(),
        &[c(1.0, 0.0), c(0.0, 0.0)],
        1e-10,
    );
    assert_coeffs_close(
        f.residual.entries()[1].coeffs(),
        &[c(0.0, 0.0), c(1.0, 0.0)],
        1e-10,
    );
}

// ---------------------------------------------------------------------------
// frozen normalization and substitution examples
// ---------------------------------------------------------------------------

#[test]
fn normalize_scalar_and_phase() {
    let mk = |a: Complex| {
        let u = HomogPoly::new(vec![a, c(0.0, 0.0)]).unwrap();
        let v = HomogPoly::new(vec![c(0.0, 0.0), a]).unwrap();
        MapTuple::new(vec![u, v]).unwrap().normalized()
    };
    for a in [c(2.0, 0.0), c(0.0, 1.0), c(-3.0, 4.0)] {
        let t = mk(a);
        assert!((t.entries()[0].coeffs()[0] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((t.entries()[1].coeffs()[1] - c(1.0, 0.0)).norm() < 1e-15);
    }
    // [3u^2 - 3v^2, 3uv] -> [u^2 - v^2, uv]
    let e1 = HomogPoly::new(vec![c(3.0, 0.0), c(0.0, 0.0), c(-3.0, 0.0)]).unwrap();
    let e2 = HomogPoly::new(vec![c(0.0, 0.0), c(3.0, 0.0), c(0.0, 0.0)]).unwrap();
    let t = MapTuple::new(vec![e1, e2]).unwrap().normalized();
    assert_coeffs_close(
        t.entries()[0].coeffs(),
        &[c(1.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)],
        1e-15,
    );
    assert_coeffs_close(
        t.entries()[1].coeffs(),
        &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
        1e-15,
    );
}

#[test]
fn substitute_affine_identity_map() {
    // [u, v] under z = 1 + 2w becomes the map w -> 1 + 2w: [2w_u + w_v, w_v]
    let u = HomogPoly::new(vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
    let v = HomogPoly::new(vec![c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
    let t = MapTuple::new(vec![u, v]).unwrap();
    let s = t.substitute_affine(c(1.0, 0.0), c(2.0, 0.0)).unwrap();
    // compare projectively entry by entry with a shared scalar
    let lambda = s.entries()[0].coeffs()[0] / c(2.0, 0.0);
    assert!(lambda.norm() > 0.0);
    let want = [vec![c(2.0, 0.0), c(1.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]];
    for (entry, w) in s.entries().iter().zip(&want) {
        for (a, b) in entry.coeffs().iter().zip(w) {
            assert!((a - b * lambda).norm() < 1e-14);
        }
    }
}

#[test]
fn substitute_affine_trivial_and_rescale() {
    let e1 = HomogPoly::new(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
    let e2 = HomogPoly::new(vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
    let t = MapTuple::new(vec![e1, e2]).unwrap();
    // identity substitution
    let s = t.substitute_affine(c(0.0, 0.0), c(1.0, 0.0)).unwrap();
    let lambda = s.entries()[0].coeffs()[0];
    for (entry, orig) in s.entries().iter().zip(t.entries()) {
        for (a, b) in entry.coeffs().iter().zip(orig.coeffs()) {
            assert!((a - b * lambda).norm() < 1e-14);
        }
    }

    // [u^2 - k^-2 v^2, uv] zoomed at 0 with scale k^-2 becomes
    // [k^-2 w_u^2 - w_v^2, w_u w_v] after the shared renormalization
    let k = 100.0;
    let e1 = HomogPoly::new(vec![c(1.0, 0.0), c(0.0, 0.0), c(-1.0 / (k * k), 0.0)]).unwrap();
    let e2 = HomogPoly::new(vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
    let t = MapTuple::new(vec![e1, e2]).unwrap();
    let s = t.substitute_affine(c(0.0, 0.0), c(1.0 / (k * k), 0.0)).unwrap();
    let want = [
        vec![c(1.0 / (k * k), 0.0), c(0.0, 0.0), c(-1.0, 0.0)],
        vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
    ];
    let lambda = s.entries()[1].coeffs()[1] / want[1][1];
    for (entry, w) in s.entries().iter().zip(&want) {
        for (a, b) in entry.coeffs().iter().zip(w) {
            assert!((a - b * lambda).norm() < 1e-14);
        }
    }
}

// ---------------------------------------------------------------------------
// frozen local order / preimage examples
// ---------------------------------------------------------------------------

fn square_curve() -> RationalCurve {
    // z -> z^2 as [u^2, v^2]
    let u2 = HomogPoly::new(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
    let v2 = HomogPoly::new(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
    RationalCurve::new(MapTuple::new(vec![u2, v2]).unwrap()).unwrap()
}

fn identity_curve() -> RationalCurve {
    let u = HomogPoly::new(vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
    let v = HomogPoly::new(vec![c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
    RationalCurve::new(MapTuple::new(vec![u, v]).unwrap()).unwrap()
}

#[test]
fn local_order_examples() {
    let id = identity_curve();
    for z in [c(0.0, 0.0), c(0.3, -0.7), c(5.0, 2.0)] {
        assert_eq!(id.local_order(&P1Point::from_affine(z)), 1);
    }
    assert_eq!(id.local_order(&P1Point::infinity()), 1);

    let sq = square_curve();
    assert_eq!(sq.local_order(&P1Point::zero()), 2);
    assert_eq!(sq.local_order(&P1Point::infinity()), 2);
    assert_eq!(sq.local_order(&P1Point::from_affine(c(1.0, 0.0))), 1);

    // constant curve: order 0 everywhere
    let a = HomogPoly::constant(c(1.0, 0.0));
    let b = HomogPoly::constant(c(2.0, 0.0));
    let k = RationalCurve::new(MapTuple::new(vec![a, b]).unwrap()).unwrap();
    assert_eq!(k.local_order(&P1Point::zero()), 0);
}

#[test]
fn preimages_examples() {
    let sq = square_curve();
    // x = 0: double preimage at z = 0
    let pre = sq.preimages(&[c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
    assert_eq!(pre.len(), 1);
    assert_eq!(pre[0].1, 2);
    assert!(pre[0].0.close_to(&P1Point::zero(), TAU_POINT));
    assert_eq!(sq.order_at(&[c(0.0, 0.0), c(1.0, 0.0)]).unwrap(), 2);

    // x = 1: two simple preimages at z = +-1
    let mut pre = sq.preimages(&[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
    pre.sort_by(|p, q| {
        p.0.affine().unwrap().re.total_cmp(&q.0.affine().unwrap().re)
    });
    assert_eq!(pre.len(), 2);
    assert_eq!((pre[0].1, pre[1].1), (1, 1));
    assert!(pre[0].0.close_to(&P1Point::from_affine(c(-1.0, 0.0)), 1e-5));
    assert!(pre[1].0.close_to(&P1Point::from_affine(c(1.0, 0.0)), 1e-5));

    // identity: one simple preimage anywhere
    let id = identity_curve();
    let pre = id.preimages(&[c(0.3, 0.4), c(1.0, 0.0)]).unwrap();
    assert_eq!(pre.len(), 1);
    assert_eq!(pre[0].1, 1);
    assert!(pre[0].0.close_to(&P1Point::from_affine(c(0.3, 0.4)), 1e-6));
}

// ---------------------------------------------------------------------------
// randomized structural properties
// ---------------------------------------------------------------------------

fn complex_in(r: f64) -> impl Strategy<Value = Complex> {
    (-r..r, -r..r).prop_map(|(re, im)| Complex::new(re, im))
}

/// Up to `max` affine points with pairwise separation at least `sep`.
fn separated_points(max: usize, sep: f64) -> impl Strategy<Value = Vec<Complex>> {
    proptest::collection::vec(complex_in(2.0), 1..=max).prop_filter(
        "pairwise separation",
        move |pts| {
            pts.iter().enumerate().all(|(i, p)| {
                pts.iter().skip(i + 1).all(|q| (p - q).norm() >= sep)
            })
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    /// Roots of a planted product of well-separated simple linear factors are
    /// recovered, and multiplying the recovered factors reproduces the
    /// coefficients to 1e-8 relative error.
    #[test]
    fn root_reconstruction_simple(
        pts in separated_points(8, 1e-3),
        lead in complex_in(1.0).prop_filter("nonzero", |z| z.norm() > 0.1),
    ) {
        let coeffs: Vec<Complex> =
            poly_from_affine_roots(&pts).iter().map(|x| x * lead).collect();
        let p = HomogPoly::new(coeffs.clone()).unwrap();
        let roots = p.roots().unwrap();
        let total: usize = roots.iter().map(|(_, m)| m).sum();
        prop_assert_eq!(total, pts.len());
        // rebuild from the recovered roots with the test's own product
        let mut rebuilt = vec![c(1.0, 0.0)];
        for (pt, m) in &roots {
            let (a, b) = pt.coords();
            for _ in 0..*m {
                rebuilt = conv(&rebuilt, &[b, -a]);
            }
        }
        let (g, w) = (canonical(&rebuilt), canonical(&coeffs));
        for (a, b) in g.iter().zip(&w) {
            prop_assert!((a - b).norm() <= 1e-8);
        }
    }

    /// Multiplicities of well-separated planted clusters are recovered
    /// exactly, with accurately refined centers.
    #[test]
    fn root_multiplicities_recovered(
        pts in separated_points(3, 0.5),
        mults in proptest::collection::vec(1usize..=4, 3),
    ) {
        let all: Vec<Complex> = pts
            .iter()
            .zip(&mults)
            .flat_map(|(p, m)| std::iter::repeat(*p).take(*m))
            .collect();
        prop_assume!(all.len() <= 8);
        let coeffs = poly_from_affine_roots(&all);
        let p = HomogPoly::new(coeffs).unwrap();
        let roots = p.roots().unwrap();
        prop_assert_eq!(roots.len(), pts.len());
        for (pt, m) in pts.iter().zip(&mults) {
            let hit = roots.iter().find(|(r, _)| {
                r.close_to(&P1Point::from_affine(*pt), 1e-4)
            });
            prop_assert!(hit.is_some(), "missing planted root {pt}");
            let (r, got_m) = hit.unwrap();
            prop_assert_eq!(*got_m, *m);
            // refined centers are far more accurate than the cluster scatter
            prop_assert!(r.cross(&P1Point::from_affine(*pt)) <= 1e-8);
        }
    }

    /// common_factor recovers planted common roots and multiplicities, and
    /// the degree identity d0 + sum(d_j) = d holds exactly.
    #[test]
    fn common_factor_recovers_planted(
        pts in separated_points(3, 0.5),
        mults in proptest::collection::vec(1usize..=2, 3),
        res in proptest::collection::vec(
            proptest::collection::vec(complex_in(1.0), 3),
            2..=4
        ),
    ) {
        let planted: Vec<(Complex, usize)> =
            pts.iter().copied().zip(mults.iter().copied()).collect();
        let factor: Vec<Complex> = {
            let all: Vec<Complex> = planted
                .iter()
                .flat_map(|(p, m)| std::iter::repeat(*p).take(*m))
                .collect();
            poly_from_affine_roots(&all)
        };
        // residual entries: random degree-2 coefficients, coprimality checked
        let entries: Vec<HomogPoly> = res
            .iter()
            .map(|coeffs| HomogPoly::new(conv(&factor, coeffs)))
            .collect::<Result<_, _>>()
            .map_err(|_| TestCaseError::reject("zero entry"))?;
        let residual_tuple: Vec<HomogPoly> = res
            .iter()
            .map(|coeffs| HomogPoly::new(coeffs.clone()))
            .collect::<Result<_, _>>()
            .map_err(|_| TestCaseError::reject("zero residual entry"))?;
        let rt = MapTuple::new(residual_tuple)
            .map_err(|_| TestCaseError::reject("zero residual"))?;
        prop_assume!(rt.common_factor().unwrap().roots.is_empty());
        // residual roots must also stay away from the planted ones so the
        // planted multiplicities are unambiguous
        for e in rt.entries() {
            for (r, _) in e.roots().unwrap() {
                for (p, _) in &planted {
                    prop_assume!(r.cross(&P1Point::from_affine(*p)) > 1e-2);
                }
            }
        }

        let t = MapTuple::new(entries).unwrap();
        let f = t.common_factor().unwrap();
        let planted_deg: usize = planted.iter().map(|(_, m)| m).sum();
        prop_assert_eq!(f.common_degree(), planted_deg);
        prop_assert_eq!(f.residual.degree() + planted_deg, t.degree());
        for (p, m) in &planted {
            let hit = f.roots.iter().find(|(r, _)| {
                r.close_to(&P1Point::from_affine(*p), TAU_POINT.max(1e-5))
            });
            prop_assert!(hit.is_some(), "missing planted factor root {p}");
            prop_assert_eq!(hit.unwrap().1, *m);
        }
    }

    /// normalize is idempotent and invariant under projective scaling.
    #[test]
    fn normalize_projective_invariance(
        coeffs in proptest::collection::vec(complex_in(2.0), 6),
        lambda in complex_in(2.0).prop_filter("nonzero", |z| z.norm() > 1e-2),
    ) {
        let e1 = HomogPoly::new(coeffs[0..3].to_vec())
            .map_err(|_| TestCaseError::reject("zero entry"))?;
        let e2 = HomogPoly::new(coeffs[3..6].to_vec())
            .map_err(|_| TestCaseError::reject("zero entry"))?;
        let t = MapTuple::new(vec![e1.clone(), e2.clone()]).unwrap();
        let scaled = MapTuple::new(vec![e1.scaled(lambda), e2.scaled(lambda)]).unwrap();
        let (a, b) = (t.normalized(), scaled.normalized());
        for (x, y) in a.entries().iter().zip(b.entries()) {
            for (p, q) in x.coeffs().iter().zip(y.coeffs()) {
                prop_assert!((p - q).norm() <= 1e-12);
            }
        }
        let twice = a.normalized();
        for (x, y) in a.entries().iter().zip(twice.entries()) {
            for (p, q) in x.coeffs().iter().zip(y.coeffs()) {
                prop_assert!((p - q).norm() <= 1e-12);
            }
        }
    }

    /// Zooming in and back out is the identity on normalized tuples.
    #[test]
    fn substitute_affine_inverse(
        coeffs in proptest::collection::vec(complex_in(1.0), 6),
        a in complex_in(1.0),
        b in complex_in(2.0).prop_filter("scale", |z| z.norm() > 0.2),
    ) {
        let e1 = HomogPoly::new(coeffs[0..3].to_vec())
            .map_err(|_| TestCaseError::reject("zero entry"))?;
        let e2 = HomogPoly::new(coeffs[3..6].to_vec())
            .map_err(|_| TestCaseError::reject("zero entry"))?;
        let t = MapTuple::new(vec![e1, e2]).unwrap();
        let fwd = t.substitute_affine(a, b).unwrap();
        let back = fwd.substitute_affine(-a / b, 1.0 / b).unwrap();
        prop_assert_eq!(back.degree(), t.degree());
        let (x, y) = (back.normalized(), t.normalized());
        for (p, q) in x.entries().iter().zip(y.entries()) {
            for (u, w) in p.coeffs().iter().zip(q.coeffs()) {
                prop_assert!((u - w).norm() <= 1e-12);
            }
        }
    }

    /// For maps to the projective line, preimage multiplicities of any target
    /// value sum to the degree.
    #[test]
    fn preimage_orders_sum_to_degree(
        coeffs in proptest::collection::vec(complex_in(1.0), 10),
        z0 in complex_in(0.8),
    ) {
        let e1 = HomogPoly::new(coeffs[0..5].to_vec())
            .map_err(|_| TestCaseError::reject("zero entry"))?;
        let e2 = HomogPoly::new(coeffs[5..10].to_vec())
            .map_err(|_| TestCaseError::reject("zero entry"))?;
        let t = MapTuple::new(vec![e1, e2]).unwrap();
        let curve = RationalCurve::new(t)
            .map_err(|_| TestCaseError::reject("common factor"))?;
        let x = curve.tuple().eval(&P1Point::from_affine(z0));
        prop_assume!(x.iter().map(|v| v.norm()).fold(0.0, f64::max) > 1e-6);
        let pre = curve.preimages(&x).unwrap();
        let total: usize = pre.iter().map(|(_, m)| m).sum();
        prop_assert_eq!(total, curve.degree());
        // the seed point is among the preimages
        let seed_found =
            pre.iter().any(|(p, _)| p.close_to(&P1Point::from_affine(z0), 1e-4));
        prop_assert!(seed_found);
    }
}
