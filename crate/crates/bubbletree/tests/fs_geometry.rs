//! Integration tests for Fubini-Study geometry: distances, densities,
//! adaptive energy integration, suprema, image diameters, and boundary
//! lengths, checked against closed-form values computed by hand.

use bubbletree::fs::{
    self, energy, energy_density, energy_mode, fs_distance, image_diameter, sup_density,
    ExecMode, Region,
};
use bubbletree::poly::{HomogPoly, MapTuple, RationalCurve};
use bubbletree::Complex;
use std::f64::consts::PI;

fn c(re: f64, im: f64) -> Complex {
    Complex::new(re, im)
}

fn curve(entries: Vec<Vec<Complex>>) -> RationalCurve {
    let polys = entries.into_iter().map(|e| HomogPoly::new(e).unwrap()).collect();
    RationalCurve::new(MapTuple::new(polys).unwrap()).unwrap()
}

fn identity_curve() -> RationalCurve {
    curve(vec![vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]])
}

/// z -> z^d as the monomial tuple [u^d, v^d].
fn monomial_curve(d: usize) -> RationalCurve {
    let mut u = vec![c(0.0, 0.0); d + 1];
    let mut v = vec![c(0.0, 0.0); d + 1];
    u[0] = c(1.0, 0.0);
    v[d] = c(1.0, 0.0);
    curve(vec![u, v])
}

fn constant_curve() -> RationalCurve {
    curve(vec![vec![c(1.0, 0.0)], vec![c(2.0, 0.0)]])
}

// ---------------------------------------------------------------------------
// distance
// ---------------------------------------------------------------------------

#[test]
fn fs_distance_frozen_values() {
    let p = [c(1.0, 0.0), c(0.0, 0.0)];
    let q = [c(0.0, 0.0), c(1.0, 0.0)];
    let r = [c(1.0, 0.0), c(1.0, 0.0)];
    assert!(fs_distance(&p, &p).unwrap() < 1e-12);
    assert!((fs_distance(&p, &q).unwrap() - PI / 2.0).abs() < 1e-12);
    assert!((fs_distance(&p, &r).unwrap() - PI / 4.0).abs() < 1e-12);
    // scaling either argument changes nothing
    let r2 = [c(-3.0, 4.0), c(-3.0, 4.0)];
    assert!((fs_distance(&p, &r2).unwrap() - PI / 4.0).abs() < 1e-12);
    // on the line: d([z, 1], [0, 1]) = arctan|z|
    for z in [c(0.3, 0.0), c(0.0, 1.7), c(-2.0, 1.0)] {
        let d = fs_distance(&[z, c(1.0, 0.0)], &[c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!((d - z.norm().atan()).abs() < 1e-12);
    }
    assert!(fs_distance(&[c(0.0, 0.0), c(0.0, 0.0)], &p).is_err());
}

// ---------------------------------------------------------------------------
// density
// ---------------------------------------------------------------------------

#[test]
fn density_identity_closed_form() {
    let id = identity_curve();
    assert!((energy_density(&id, c(0.0, 0.0), 0) - 1.0 / PI).abs() < 1e-12);
    for z in [c(0.5, 0.0), c(0.0, -1.2), c(2.0, 1.0)] {
        let want = 1.0 / (PI * (1.0 + z.norm_sqr()).powi(2));
        assert!((energy_density(&id, z, 0) - want).abs() < 1e-12 * want.max(1.0));
        // the two charts agree: chart 1 sees w = 1/z
        let w = 1.0 / z;
        let got = energy_density(&id, w, 1);
        let jac = w.norm_sqr() / z.norm_sqr(); // not used; direct closed form
        let _ = jac;
        let want1 = 1.0 / (PI * (1.0 + w.norm_sqr()).powi(2));
        assert!((got - want1).abs() < 1e-12);
    }
}

#[test]
fn density_square_closed_form() {
    // z -> z^2: density 4 r^2 / (pi (1 + r^4)^2)
    let sq = monomial_curve(2);
    for z in [c(1.0, 0.0), c(0.0, 1.0), c(0.4, -0.3), c(1.3, 0.8)] {
        let r2 = z.norm_sqr();
        let want = 4.0 * r2 / (PI * (1.0 + r2 * r2).powi(2));
        assert!((energy_density(&sq, z, 0) - want).abs() < 1e-12);
    }
    // |z| = 1 gives exactly 1/pi
    assert!((energy_density(&sq, c(1.0, 0.0), 0) - 1.0 / PI).abs() < 1e-13);
}

#[test]
fn density_constant_curve_vanishes() {
    let k = constant_curve();
    for z in [c(0.0, 0.0), c(1.0, 1.0), c(-3.0, 0.2)] {
        assert_eq!(energy_density(&k, z, 0), 0.0);
    }
}

// ---------------------------------------------------------------------------
// energy
// ---------------------------------------------------------------------------

#[test]
fn energy_equals_degree_on_full_sphere() {
    for d in 1..=3 {
        let e = energy(&monomial_curve(d), &Region::FullSphere, 1e-8).unwrap();
        assert!(
            (e.value - d as f64).abs() < 1e-7,
            "degree {d}: got {} (err est {:.2e})",
            e.value,
            e.err_estimate
        );
        assert!(e.err_estimate <= 1e-8);
    }
    // a generic degree-2 curve into the projective plane
    let t = curve(vec![
        vec![c(1.0, 0.0), c(0.3, 0.1), c(-0.2, 0.0)],
        vec![c(0.0, 0.0), c(1.0, 0.0), c(0.5, -0.4)],
        vec![c(0.2, 0.0), c(0.0, 0.7), c(1.0, 0.0)],
    ]);
    let e = energy(&t, &Region::FullSphere, 1e-7).unwrap();
    assert!((e.value - 2.0).abs() < 1e-6, "got {}", e.value);
}

#[test]
fn energy_disk_closed_forms() {
    let id = identity_curve();
    // identity on |z| <= delta: delta^2 / (1 + delta^2)
    for delta in [0.25, 0.5, 1.0, 2.0] {
        let e = energy(
            &id,
            &Region::Disk { center: c(0.0, 0.0), r: delta, chart: 0 },
            1e-9,
        )
        .unwrap();
        let want = delta * delta / (1.0 + delta * delta);
        assert!((e.value - want).abs() < 1e-8, "delta {delta}: {} vs {want}", e.value);
    }
    // z -> z^2 on the unit disk: exactly half of the total energy 2
    let sq = monomial_curve(2);
    let e = energy(&sq, &Region::Disk { center: c(0.0, 0.0), r: 1.0, chart: 0 }, 1e-9).unwrap();
    assert!((e.value - 1.0).abs() < 1e-8, "got {}", e.value);
    // closed form 2 r^4 / (1 + r^4) at other radii
    for r in [0.3, 0.7, 1.5] {
        let e = energy(&sq, &Region::Disk { center: c(0.0, 0.0), r, chart: 0 }, 1e-9).unwrap();
        let want = 2.0 * r.powi(4) / (1.0 + r.powi(4));
        assert!((e.value - want).abs() < 1e-8, "r {r}: {} vs {want}", e.value);
    }
}

#[test]
fn energy_annulus_and_complement() {
    let id = identity_curve();
    let f = |r: f64| r * r / (1.0 + r * r);
    let e = energy(
        &id,
        &Region::Annulus { center: c(0.0, 0.0), r_in: 0.5, r_out: 2.0, chart: 0 },
        1e-9,
    )
    .unwrap();
    assert!((e.value - (f(2.0) - f(0.5))).abs() < 1e-8);

    // complement of one disk: total minus the disk
    let e = energy(
        &id,
        &Region::SphereComplement { disks: vec![(c(0.0, 0.0), 0.5, 0)] },
        1e-8,
    )
    .unwrap();
    assert!((e.value - (1.0 - f(0.5))).abs() < 1e-7, "got {}", e.value);
}

#[test]
fn energy_chart_independence() {
    // the disk |z| >= 2 in chart 0 equals the disk |w| <= 0.5 in chart 1
    let sq = monomial_curve(2);
    let inner =
        energy(&sq, &Region::Disk { center: c(0.0, 0.0), r: 0.5, chart: 1 }, 1e-9).unwrap();
    let f = |r: f64| 2.0 * r.powi(4) / (1.0 + r.powi(4));
    assert!((inner.value - (2.0 - f(2.0))).abs() < 1e-8);
}

#[test]
fn energy_rejects_bad_regions() {
    let id = identity_curve();
    assert!(energy(&id, &Region::Disk { center: c(0.0, 0.0), r: -1.0, chart: 0 }, 1e-6).is_err());
    assert!(energy(
        &id,
        &Region::Annulus { center: c(0.0, 0.0), r_in: 2.0, r_out: 1.0, chart: 0 },
        1e-6
    )
    .is_err());
    assert!(energy(&id, &Region::Disk { center: c(0.0, 0.0), r: 1.0, chart: 2 }, 1e-6).is_err());
}

#[test]
fn energy_modes_agree_bitwise() {
    // determinism contract: the parallel and sequential refinements visit
    // cells in the same order and re-sum identically
    let spiky = curve(vec![
        vec![c(1.0, 0.0), c(0.0, 0.0), c(-1e-6, 0.0)],
        vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
    ]);
    for region in [
        Region::FullSphere,
        Region::Disk { center: c(0.0, 0.0), r: 0.3, chart: 0 },
        Region::Annulus { center: c(0.0, 0.0), r_in: 0.1, r_out: 3.0, chart: 0 },
    ] {
        let seq = energy_mode(&spiky, &region, 1e-8, ExecMode::Sequential).unwrap();
        let par = energy_mode(&spiky, &region, 1e-8, ExecMode::Parallel).unwrap();
        assert_eq!(seq.value.to_bits(), par.value.to_bits(), "region {region:?}");
        assert_eq!(seq.cells, par.cells);
    }
}

// ---------------------------------------------------------------------------
// suprema, diameters, boundary lengths
// ---------------------------------------------------------------------------

#[test]
fn sup_density_identity_and_square() {
    let id = identity_curve();
    let s = sup_density(&id, &Region::Disk { center: c(0.0, 0.0), r: 2.0, chart: 0 }).unwrap();
    assert!(s.point.norm() < 1e-5);
    assert!((s.value - 1.0 / PI).abs() < 1e-9);

    // z -> z^2: maximum on the circle |z| = 3^(-1/4), value 9/(4 sqrt(3) pi)
    let sq = monomial_curve(2);
    let s = sup_density(&sq, &Region::Disk { center: c(0.0, 0.0), r: 2.0, chart: 0 }).unwrap();
    let want_r = 3.0f64.powf(-0.25);
    let want_v = 9.0 / (4.0 * 3.0f64.sqrt() * PI);
    assert!((s.point.norm() - want_r).abs() < 1e-4, "argmax at |z| = {}", s.point.norm());
    assert!((s.value - want_v).abs() < 1e-9 * want_v.max(1.0));

    let k = constant_curve();
    let s = sup_density(&k, &Region::Disk { center: c(0.0, 0.0), r: 1.0, chart: 0 }).unwrap();
    assert_eq!(s.value, 0.0);
}

#[test]
fn image_diameter_frozen_values() {
    let k = constant_curve();
    // arccos rounding leaves ~1e-8 of noise on coincident points
    assert!(image_diameter(&k, &Region::FullSphere, 500).unwrap() < 1e-7);

    let id = identity_curve();
    let d = image_diameter(&id, &Region::FullSphere, 1000).unwrap();
    assert!((d - PI / 2.0).abs() < 0.01 * PI / 2.0, "got {d}");

    // small disk: image diameter of the identity is 2 arctan(delta) ~ 2 delta
    let delta = 0.05;
    let d = image_diameter(
        &id,
        &Region::Disk { center: c(0.0, 0.0), r: delta, chart: 0 },
        800,
    )
    .unwrap();
    assert!((d - 2.0 * delta).abs() < 0.1 * 2.0 * delta, "got {d}");
}

#[test]
fn boundary_length_identity_closed_form() {
    // the identity's circle |z| = r maps to a circle of FS length
    // 2 pi r / (1 + r^2)
    let id = identity_curve();
    for r in [0.1, 0.5, 1.0, 3.0] {
        let l = fs::boundary_length(&id, c(0.0, 0.0), r, 0).unwrap();
        let want = 2.0 * PI * r / (1.0 + r * r);
        assert!((l - want).abs() < 1e-7 * want.max(1.0), "r {r}: {l} vs {want}");
    }
}

#[test]
fn energy_result_error_bound_is_honored() {
    // the estimate must bound the true error where the truth is known
    let id = identity_curve();
    for tol in [1e-5, 1e-7, 1e-9] {
        let e = energy(&id, &Region::Disk { center: c(0.0, 0.0), r: 1.0, chart: 0 }, tol)
            .unwrap();
        assert!(e.err_estimate <= tol);
        assert!((e.value - 0.5).abs() <= tol.max(1e-12) * 10.0);
    }
}
