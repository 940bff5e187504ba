//! Fubini-Study geometry of rational curves: distances, energy density,
//! region energies, density suprema, image diameters, and circle lengths.
//!
//! Two classical scale conventions coexist and are kept explicit:
//!
//! * Distances and lengths use the round metric `d([p],[q]) =
//!   arccos(|<p,q>| / (|p||q|))`, under which the projective line has
//!   diameter pi/2 and a circle of radius `r` maps under the identity to a
//!   curve of length `2 pi r / (1 + r^2)`.
//! * Energy uses the area form normalized so a line has total area 1; a
//!   degree-d curve then has total energy exactly d. This differs from the
//!   arccos-scale area by a factor pi.
//!
//! The pointwise energy density of `f = [R_1 : ... : R_n]` in an affine
//! chart is `rho(z) = (S0 S1 - |X|^2) / (pi S0^2)` with `S0 = sum |R_i|^2`,
//! `S1 = sum |R_i'|^2`, `X = sum R_i' conj(R_i)`, and energies are integrals
//! of `rho` over chart regions.

use crate::error::{Error, Result};
use crate::poly::{P1Point, RationalCurve};
use crate::quad::{self, adaptive_line, adaptive_polar, Mode, CELL_CAP};
use crate::Complex;

/// A region of the sphere, described in an affine chart where applicable.
/// Chart 0 has coordinate `z = u/v`, chart 1 has `w = v/u = 1/z`.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Disk { center: Complex, r: f64, chart: u8 },
    Annulus { center: Complex, r_in: f64, r_out: f64, chart: u8 },
    /// Everything outside a finite union of pairwise disjoint closed disks.
    SphereComplement { disks: Vec<(Complex, f64, u8)> },
    FullSphere,
}

impl Region {
    pub fn validate(&self) -> Result<()> {
        let check_disk = |center: &Complex, r: f64, chart: u8| -> Result<()> {
            if !(r > 0.0) || !r.is_finite() || !center.re.is_finite() || !center.im.is_finite() {
                return Err(Error::Invalid("disk needs a finite center and positive radius".into()));
            }
            if chart > 1 {
                return Err(Error::Invalid("chart index must be 0 or 1".into()));
            }
            Ok(())
        };
        match self {
            Region::Disk { center, r, chart } => check_disk(center, *r, *chart),
            Region::Annulus { center, r_in, r_out, chart } => {
                check_disk(center, *r_out, *chart)?;
                if !(*r_in >= 0.0 && r_in < r_out) {
                    return Err(Error::Invalid("annulus needs 0 <= r_in < r_out".into()));
                }
                Ok(())
            }
            Region::SphereComplement { disks } => {
                for (c, r, ch) in disks {
                    check_disk(c, *r, *ch)?;
                }
                let reps: Vec<DiskRep> = disks
                    .iter()
                    .map(|&(c, r, ch)| DiskRep::to_chart0(c, r, ch))
                    .collect::<Result<_>>()?;
                for i in 0..reps.len() {
                    for j in (i + 1)..reps.len() {
                        if !reps[i].disjoint_from(&reps[j]) {
                            return Err(Error::Invalid(format!(
                                "complement disks {i} and {j} overlap"
                            )));
                        }
                    }
                }
                Ok(())
            }
            Region::FullSphere => Ok(()),
        }
    }
}

/// A disk re-expressed in chart 0, either as a bounded disk or as the
/// complement of one (when the original chart-1 disk contained z = infinity).
enum DiskRep {
    Disk(Complex, f64),
    Exterior(Complex, f64),
}

impl DiskRep {
    fn to_chart0(c: Complex, r: f64, chart: u8) -> Result<Self> {
        if chart == 0 {
            return Ok(DiskRep::Disk(c, r));
        }
        let k = c.norm_sqr() - r * r;
        if k.abs() < 1e-12 {
            return Err(Error::Invalid(
                "chart-1 disk boundary passes through infinity of chart 0".into(),
            ));
        }
        let center = c.conj() / k;
        let radius = r / k.abs();
        if k > 0.0 {
            Ok(DiskRep::Disk(center, radius))
        } else {
            Ok(DiskRep::Exterior(center, radius))
        }
    }

    fn disjoint_from(&self, other: &Self) -> bool {
        match (self, other) {
            (DiskRep::Disk(c1, r1), DiskRep::Disk(c2, r2)) => (c1 - c2).norm() > r1 + r2,
            (DiskRep::Disk(c1, r1), DiskRep::Exterior(c2, r2))
            | (DiskRep::Exterior(c2, r2), DiskRep::Disk(c1, r1)) => (c1 - c2).norm() + r1 < *r2,
            (DiskRep::Exterior(_, _), DiskRep::Exterior(_, _)) => false,
        }
    }
}

/// Result of an adaptive energy integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyResult {
    pub value: f64,
    pub err_estimate: f64,
    pub cells: usize,
}

/// Round-metric distance between points of projective space given by
/// homogeneous coordinate vectors: `arccos(|<p,q>|/(|p||q|))`, in `[0, pi/2]`.
pub fn fs_distance(p: &[Complex], q: &[Complex]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Invalid("dimension mismatch".into()));
    }
    let mp = p.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mq = q.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if mp == 0.0 || mq == 0.0 || !mp.is_finite() || !mq.is_finite() {
        return Err(Error::ZeroVector);
    }
    // angle via atan2(|p wedge q|, |<p, q>|): an arccosine of the normalized
    // inner product loses half the significant digits for nearby points and
    // collapses to zero once the angle drops below the square root of
    // machine epsilon, which breaks the local-scale probes dividing
    // distances ~ h^order by h^order
    let a: Vec<Complex> = p.iter().map(|c| c / mp).collect();
    let b: Vec<Complex> = q.iter().map(|c| c / mq).collect();
    let inner: Complex = a.iter().zip(&b).map(|(x, y)| x * y.conj()).sum();
    let mut wedge = 0.0;
    for i in 0..a.len() {
        for j in (i + 1)..a.len() {
            wedge += (a[i] * b[j] - a[j] * b[i]).norm_sqr();
        }
    }
    Ok(wedge.sqrt().atan2(inner.norm()))
}

/// Precomputed chart coefficients for fast repeated density evaluation.
/// Entries are normalized once (density is invariant under tuple scaling).
pub struct DensityEvaluator {
    desc: Vec<Vec<Complex>>,
}

impl DensityEvaluator {
    pub fn new(curve: &RationalCurve, chart: u8) -> Self {
        let t = curve.tuple().normalized();
        DensityEvaluator {
            desc: t.entries().iter().map(|e| e.chart_coeffs(chart)).collect(),
        }
    }

    /// Energy density at the chart coordinate `z` (unit-line normalization).
    pub fn density(&self, z: Complex) -> f64 {
        let (s0, s1, x) = self.first_fundamental(z);
        if s0 == 0.0 {
            return 0.0;
        }
        ((s0 * s1 - x.norm_sqr()) / (s0 * s0)).max(0.0) / std::f64::consts::PI
    }

    /// Round-metric speed factor `|f'|` at `z`: the length of the image of a
    /// curve through `z` picks up this factor against `|dz|`.
    pub fn metric_speed(&self, z: Complex) -> f64 {
        let (s0, s1, x) = self.first_fundamental(z);
        if s0 == 0.0 {
            return 0.0;
        }
        (s0 * s1 - x.norm_sqr()).max(0.0).sqrt() / s0
    }

    fn first_fundamental(&self, z: Complex) -> (f64, f64, Complex) {
        let mut s0 = 0.0;
        let mut s1 = 0.0;
        let mut x = Complex::new(0.0, 0.0);
        for d in &self.desc {
            let (p, dp) = crate::poly::horner_pd(d, z);
            s0 += p.norm_sqr();
            s1 += dp.norm_sqr();
            x += dp * p.conj();
        }
        (s0, s1, x)
    }
}

/// Energy density of the curve at a chart point.
pub fn energy_density(curve: &RationalCurve, z: Complex, chart: u8) -> f64 {
    DensityEvaluator::new(curve, chart).density(z)
}

/// Fubini-Study energy of the curve over a region, to absolute tolerance
/// `tol`. A degree-d curve has full-sphere energy exactly d; the error
/// estimate on success is at most `tol`.
pub fn energy(curve: &RationalCurve, region: &Region, tol: f64) -> Result<EnergyResult> {
    energy_mode(curve, region, tol, Mode::default())
}

#[doc(hidden)]
pub fn energy_mode(curve: &RationalCurve, region: &Region, tol: f64, mode: Mode) -> Result<EnergyResult> {
    region.validate()?;
    if !(tol > 0.0) {
        return Err(Error::Invalid("tolerance must be positive".into()));
    }
    match region {
        Region::Disk { center, r, chart } => annular_energy(curve, *center, 0.0, *r, *chart, tol, mode),
        Region::Annulus { center, r_in, r_out, chart } => {
            annular_energy(curve, *center, *r_in, *r_out, *chart, tol, mode)
        }
        Region::FullSphere => {
            let a = annular_energy(curve, Complex::new(0.0, 0.0), 0.0, 1.0, 0, tol / 2.0, mode)?;
            let b = annular_energy(curve, Complex::new(0.0, 0.0), 0.0, 1.0, 1, tol / 2.0, mode)?;
            Ok(EnergyResult {
                value: a.value + b.value,
                err_estimate: a.err_estimate + b.err_estimate,
                cells: a.cells + b.cells,
            })
        }
        Region::SphereComplement { disks } => {
            let shares = disks.len() + 1;
            let full = energy_mode(curve, &Region::FullSphere, tol / shares as f64, mode)?;
            let mut value = full.value;
            let mut err = full.err_estimate;
            let mut cells = full.cells;
            for &(c, r, ch) in disks {
                let part = annular_energy(curve, c, 0.0, r, ch, tol / shares as f64, mode)?;
                value -= part.value;
                err += part.err_estimate;
                cells += part.cells;
            }
            Ok(EnergyResult { value, err_estimate: err, cells })
        }
    }
}

fn annular_energy(
    curve: &RationalCurve,
    center: Complex,
    r_in: f64,
    r_out: f64,
    chart: u8,
    tol: f64,
    mode: Mode,
) -> Result<EnergyResult> {
    let ev = DensityEvaluator::new(curve, chart);
    let f = move |r: f64, t: f64| {
        let z = center + Complex::from_polar(r, t);
        ev.density(z)
    };
    let out = adaptive_polar(&f, r_in, r_out, tol, CELL_CAP, mode)?;
    Ok(EnergyResult { value: out.value, err_estimate: out.err_estimate, cells: out.cells })
}

/// Location and value of the density supremum over a bounded region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupDensity {
    /// Chart coordinate of the maximizer.
    pub point: Complex,
    /// Chart the coordinate refers to (the region's chart).
    pub chart: u8,
    pub value: f64,
}

/// Deterministic grid search for the density supremum over a disk or
/// annulus: a 64x64 coarse scan (plus boundary circles) followed by local
/// grid refinement until the grid step drops below `1e-6` times the region
/// diameter.
pub fn sup_density(curve: &RationalCurve, region: &Region) -> Result<SupDensity> {
    region.validate()?;
    let (center, r_lo, r_hi, chart) = match region {
        Region::Disk { center, r, chart } => (*center, 0.0, *r, *chart),
        Region::Annulus { center, r_in, r_out, chart } => (*center, *r_in, *r_out, *chart),
        _ => {
            return Err(Error::Invalid(
                "sup_density needs a region bounded in one chart".into(),
            ))
        }
    };
    let ev = DensityEvaluator::new(curve, chart);
    let inside = |z: Complex| {
        let d = (z - center).norm();
        d >= r_lo && d <= r_hi
    };
    let mut best = (center + Complex::new(r_hi.min(r_lo.max(r_hi * 0.5)), 0.0), f64::NEG_INFINITY);
    let consider = |z: Complex, v: f64, best: &mut (Complex, f64)| {
        if v > best.1 {
            *best = (z, v);
        }
    };
    let n = 64;
    let step0 = 2.0 * r_hi / (n as f64 - 1.0);
    for i in 0..n {
        for j in 0..n {
            let z = center + Complex::new(-r_hi + step0 * i as f64, -r_hi + step0 * j as f64);
            if inside(z) {
                consider(z, ev.density(z), &mut best);
            }
        }
    }
    // Boundary circles: thin annuli can slip between square grid points.
    for &rr in &[r_lo, r_hi] {
        if rr > 0.0 {
            for s in 0..256 {
                let t = std::f64::consts::TAU * s as f64 / 256.0;
                let z = center + Complex::from_polar(rr, t);
                consider(z, ev.density(z), &mut best);
            }
        }
    }
    let target = 1e-6 * 2.0 * r_hi;
    let mut window = 2.0 * step0;
    while window > target {
        let m = 17;
        let step = 2.0 * window / (m as f64 - 1.0);
        let anchor = best.0;
        for i in 0..m {
            for j in 0..m {
                let z = anchor + Complex::new(-window + step * i as f64, -window + step * j as f64);
                if inside(z) {
                    consider(z, ev.density(z), &mut best);
                }
            }
        }
        window *= 0.5;
    }
    Ok(SupDensity { point: best.0, chart, value: best.1 })
}

fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

fn region_sample(region: &Region, h1: f64, h2: f64) -> Option<P1Point> {
    let tau = std::f64::consts::TAU;
    match region {
        Region::Disk { center, r, chart } => {
            let z = center + Complex::from_polar(r * h1.sqrt(), tau * h2);
            Some(chart_point(z, *chart))
        }
        Region::Annulus { center, r_in, r_out, chart } => {
            let rr = (r_in * r_in + h1 * (r_out * r_out - r_in * r_in)).sqrt();
            let z = center + Complex::from_polar(rr, tau * h2);
            Some(chart_point(z, *chart))
        }
        Region::FullSphere => Some(sphere_point(h1, h2)),
        Region::SphereComplement { disks } => {
            let p = sphere_point(h1, h2);
            for &(c, r, ch) in disks {
                let (a, b) = p.coords();
                let zc = if ch == 0 {
                    if b.norm() == 0.0 {
                        continue;
                    }
                    a / b
                } else {
                    if a.norm() == 0.0 {
                        continue;
                    }
                    b / a
                };
                if (zc - c).norm() <= r {
                    return None;
                }
            }
            Some(p)
        }
    }
}

fn chart_point(z: Complex, chart: u8) -> P1Point {
    if chart == 0 {
        P1Point::from_affine(z)
    } else {
        P1Point::from_affine(z).swapped()
    }
}

fn sphere_point(h1: f64, h2: f64) -> P1Point {
    // area-uniform on the round sphere, mapped stereographically
    let cos_theta = 1.0 - 2.0 * h1;
    let theta = cos_theta.clamp(-1.0, 1.0).acos();
    let t = (theta / 2.0).tan();
    let phi = std::f64::consts::TAU * h2;
    if t <= 1.0 {
        P1Point::from_affine(Complex::from_polar(t, phi))
    } else {
        P1Point::from_affine(Complex::from_polar(1.0 / t, -phi)).swapped()
    }
}

/// Round-metric diameter of the image of a region, estimated from a
/// low-discrepancy (Halton) sample of at most `samples` points (capped at
/// 4096). Deterministic; a lower bound converging to the true diameter.
pub fn image_diameter(curve: &RationalCurve, region: &Region, samples: usize) -> Result<f64> {
    region.validate()?;
    let want = samples.clamp(8, 4096);
    let mut vals: Vec<Vec<Complex>> = Vec::with_capacity(want);
    let mut index = 1u64;
    let budget = 40 * want as u64;
    while vals.len() < want && index <= budget {
        let h1 = halton(index, 2);
        let h2 = halton(index, 3);
        index += 1;
        if let Some(p) = region_sample(region, h1, h2) {
            let mut v = curve.tuple().eval(&p);
            let m = v.iter().map(|c| c.norm()).fold(0.0, f64::max);
            if m == 0.0 {
                continue;
            }
            let norm = v.iter().map(|c| (c / m).norm_sqr()).sum::<f64>().sqrt() * m;
            for c in v.iter_mut() {
                *c /= norm;
            }
            vals.push(v);
        }
    }
    let mut diam = 0.0f64;
    for i in 0..vals.len() {
        for j in (i + 1)..vals.len() {
            let inner: Complex = vals[i]
                .iter()
                .zip(&vals[j])
                .map(|(a, b)| a * b.conj())
                .sum();
            let d = inner.norm().min(1.0).acos();
            diam = diam.max(d);
        }
    }
    Ok(diam)
}

/// Round-metric length of the image of the circle `|z - center| = r` in the
/// given chart. The identity map gives `2 pi r / (1 + r^2)`.
pub fn boundary_length(curve: &RationalCurve, center: Complex, r: f64, chart: u8) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Invalid("circle radius must be positive".into()));
    }
    let ev = DensityEvaluator::new(curve, chart);
    let f = move |t: f64| {
        let z = center + Complex::from_polar(r, t);
        r * ev.metric_speed(z)
    };
    let out = adaptive_line(&f, 0.0, std::f64::consts::TAU, 1e-9, 1e-13, 1 << 16)?;
    Ok(out.value)
}

/// The quadrature execution mode in use by default (parallel when the
/// feature is enabled). Exposed for benches and determinism tests.
#[doc(hidden)]
pub fn default_mode() -> Mode {
    Mode::default()
}

#[doc(hidden)]
pub use quad::Mode as ExecMode;
