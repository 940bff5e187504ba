//! Bubble-tree analysis of curve families.
//!
//! A family is a sequence of coprime degree-`d` tuples indexed by a
//! parameter `k` tending to infinity. Its coefficient-wise limit (after
//! normalization) may acquire common linear factors; each common root is a
//! bubble point and its multiplicity is exactly the energy mass lost there.
//! Zooming into a bubble point at the energy-canonical scale (the radius
//! capturing the local mass minus half an energy quantum) and taking the
//! limit again yields the bubble component and, recursively, the whole tree.
//!
//! The recursion is fully numerical: centers come from an energy-centroid
//! contraction seeded at the algebraic bubble point, scales from a
//! bisection on the monotone map `delta -> energy(disk(center, delta))`, and
//! limits from Neville extrapolation in `1/k` of the normalized
//! coefficients. Every step that can fail reports a typed error rather than
//! guessing.

use crate::error::{Error, Result};
use crate::fs::{self, DensityEvaluator, Region};
use crate::poly::{MapTuple, P1Point, RationalCurve};
use crate::tree::{DecoratedTree, RootedOrder, SphereTree};
use crate::{Complex, TAU_POINT};

/// Sup-norm acceptance tolerance for extrapolated limits of raw input
/// families (exact coefficient data).
const LIMIT_TOL: f64 = 1e-6;

/// Acceptance tolerance for limits of rescaled families, whose coefficients
/// carry noise from the numerically computed centers and scales.
const RESCALED_LIMIT_TOL: f64 = 3e-5;

/// One member of a curve family.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilySample {
    pub k: f64,
    pub tuple: MapTuple,
}

/// A sequence of coprime tuples indexed by a strictly increasing parameter,
/// optionally with a declared limit tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveFamily {
    samples: Vec<FamilySample>,
    declared_limit: Option<MapTuple>,
}

impl CurveFamily {
    pub fn new(samples: Vec<FamilySample>, declared_limit: Option<MapTuple>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Invalid("family needs at least one sample".into()));
        }
        if declared_limit.is_none() && samples.len() < 3 {
            return Err(Error::Invalid(
                "family needs at least 3 samples unless a limit is declared".into(),
            ));
        }
        let n = samples[0].tuple.n();
        let d = samples[0].tuple.degree();
        let mut prev = 0.0;
        for s in &samples {
            if !(s.k > prev && s.k.is_finite()) {
                return Err(Error::Invalid(
                    "sample parameters must be positive and strictly increasing".into(),
                ));
            }
            prev = s.k;
            if s.tuple.n() != n || s.tuple.degree() != d {
                return Err(Error::Invalid("samples must share n and degree".into()));
            }
            let f = s.tuple.common_factor()?;
            if !f.roots.is_empty() {
                return Err(Error::Invalid(format!(
                    "sample at k = {} has a common factor; samples must be coprime",
                    s.k
                )));
            }
        }
        if let Some(l) = &declared_limit {
            if l.n() != n || l.degree() != d {
                return Err(Error::Invalid("declared limit must share n and degree".into()));
            }
        }
        Ok(CurveFamily { samples, declared_limit })
    }

    pub fn samples(&self) -> &[FamilySample] {
        &self.samples
    }

    pub fn declared_limit(&self) -> Option<&MapTuple> {
        self.declared_limit.as_ref()
    }

    pub fn n(&self) -> usize {
        self.samples[0].tuple.n()
    }

    pub fn degree(&self) -> usize {
        self.samples[0].tuple.degree()
    }
}

/// Coefficient-wise limit of the normalized family by Neville extrapolation
/// at 0 over the nodes `1/k`. Accepted when the last two diagonal
/// extrapolants agree within `tol` in sup-norm; coefficients below the noise
/// floor of the accepted extrapolant are snapped to exact zero (so that
/// factors at roots of the limit, including `[1:0]`, are read off exactly),
/// and the result is renormalized.
pub fn limit_tuple(fam: &CurveFamily, tol: f64) -> Result<MapTuple> {
    if let Some(l) = fam.declared_limit() {
        return Ok(l.normalized());
    }
    let mut rows: Vec<Vec<Complex>> = fam
        .samples
        .iter()
        .map(|s| {
            let t = s.tuple.normalized();
            t.entries()
                .iter()
                .flat_map(|e| e.coeffs().iter().copied())
                .collect()
        })
        .collect();
    // The per-sample normalization pins the projective scale only up to the
    // choice of pivot coefficient; when two coefficients tie in modulus the
    // pivot (and with it the row's phase) can jump between samples. Align
    // each row's phase against its predecessor so the sequence fed to the
    // extrapolation is continuous in the family parameter.
    for i in 1..rows.len() {
        let dot: Complex = rows[i - 1]
            .iter()
            .zip(&rows[i])
            .map(|(p, q)| p * q.conj())
            .sum();
        if dot.norm() > 1e-6 {
            let phase = dot / dot.norm();
            for q in rows[i].iter_mut() {
                *q *= phase;
            }
        }
    }
    let nodes: Vec<f64> = fam.samples.iter().map(|s| 1.0 / s.k).collect();
    let m = rows.len();
    let width = rows[0].len();
    // Neville tableau evaluated at 0, carried on whole coefficient vectors.
    let mut tab = rows;
    let mut diag: Vec<Vec<Complex>> = vec![tab[0].clone()];
    for j in 1..m {
        for i in (j..m).rev() {
            let xi = nodes[i];
            let xij = nodes[i - j];
            let denom = xij - xi;
            for c in 0..width {
                tab[i][c] = (tab[i][c] * xij - tab[i - 1][c] * xi) / denom;
            }
        }
        diag.push(tab[j].clone());
        // tableau rows above j are no longer needed; tab[i] for i >= j holds
        // the order-j extrapolants ending at sample i
    }
    let sup_diff = |a: &[Complex], b: &[Complex]| -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    };
    if m < 2 {
        return Err(Error::NoConvergence("need at least 2 samples to extrapolate".into()));
    }
    let last = &diag[m - 1];
    let prev = &diag[m - 2];
    let final_diff = sup_diff(last, prev);
    if !(final_diff < tol) {
        return Err(Error::NoConvergence(format!(
            "extrapolant sup-norm difference {final_diff:.3e} not below tol {tol:.3e}"
        )));
    }
    let sup = last.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let snap = (10.0 * final_diff).max(1e-12) * sup;
    let snapped: Vec<Complex> = last
        .iter()
        .map(|c| if c.norm() < snap { Complex::new(0.0, 0.0) } else { *c })
        .collect();
    let d = fam.degree();
    let n = fam.n();
    let entries = (0..n)
        .map(|i| {
            crate::poly::HomogPoly::new(snapped[i * (d + 1)..(i + 1) * (d + 1)].to_vec())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MapTuple::new(entries)?.normalized())
}

/// A bubble point of a family: location, energy mass, and the algebraic
/// multiplicity of the common factor it comes from. The mass equals the
/// multiplicity exactly (energy quantization for rational curves).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BubbleMass {
    pub point: P1Point,
    pub mass: f64,
    pub algebraic_mult: usize,
}

/// Bubble points of a family together with the limit curve (the limit tuple
/// with common factors divided out).
pub fn bubble_points(fam: &CurveFamily) -> Result<(Vec<BubbleMass>, RationalCurve)> {
    let limit = limit_tuple(fam, LIMIT_TOL)?;
    let fac = limit.common_factor()?;
    let masses = fac
        .roots
        .iter()
        .map(|&(point, m)| BubbleMass { point, mass: m as f64, algebraic_mult: m })
        .collect();
    Ok((masses, RationalCurve::new(fac.residual)?))
}

/// One row of a mass profile: energies of the largest-`k` samples on the
/// disk of radius `delta`, and their within-family extrapolation.
#[derive(Debug, Clone, PartialEq)]
pub struct MassRow {
    pub delta: f64,
    pub energies: Vec<(f64, f64)>,
    pub family_limit: f64,
}

/// Numerical two-scale estimate of the mass concentrating at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct MassProfile {
    pub point: Complex,
    pub rows: Vec<MassRow>,
    pub mass: f64,
    pub uncertainty: f64,
}

/// Estimates the energy mass concentrating at `point` (chart-0 coordinate).
///
/// The two limits are never interchanged: for each `delta` (strictly
/// decreasing) the within-family limit of `E_k(B_delta)` is estimated first,
/// from the two largest `k` samples by linear extrapolation in `1/k`; the
/// vanishing-radius limit is then taken by Richardson extrapolation in
/// `delta^2` of those per-radius estimates. The uncertainty is the spread of
/// the last two per-radius extrapolations.
pub fn mass_profile(
    fam: &CurveFamily,
    point: Complex,
    deltas: &[f64],
    tol: f64,
) -> Result<MassProfile> {
    if deltas.len() < 2 {
        return Err(Error::Invalid("mass profile needs at least 2 radii".into()));
    }
    for w in deltas.windows(2) {
        if !(w[1] < w[0] && w[1] > 0.0) {
            return Err(Error::Invalid("radii must be positive and strictly decreasing".into()));
        }
    }
    if fam.samples().len() < 2 {
        return Err(Error::Invalid("mass profile needs at least 2 samples".into()));
    }
    let tail = &fam.samples()[fam.samples().len() - 2..];
    let curves: Vec<RationalCurve> = tail
        .iter()
        .map(|s| RationalCurve::new(s.tuple.clone()))
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let mut energies = Vec::new();
        for (s, c) in tail.iter().zip(&curves) {
            let e = fs::energy(c, &Region::Disk { center: point, r: delta, chart: 0 }, tol)?;
            energies.push((s.k, e.value));
        }
        let (xa, ea) = (1.0 / energies[0].0, energies[0].1);
        let (xb, eb) = (1.0 / energies[1].0, energies[1].1);
        let family_limit = (xa * eb - xb * ea) / (xa - xb);
        rows.push(MassRow { delta, energies, family_limit });
    }
    let mut estimates = Vec::new();
    for w in rows.windows(2) {
        let (t0, l0) = (w[0].delta * w[0].delta, w[0].family_limit);
        let (t1, l1) = (w[1].delta * w[1].delta, w[1].family_limit);
        estimates.push((t0 * l1 - t1 * l0) / (t0 - t1));
    }
    let mass = *estimates.last().unwrap();
    let uncertainty = if estimates.len() >= 2 {
        (mass - estimates[estimates.len() - 2]).abs()
    } else {
        (mass - rows.last().unwrap().family_limit).abs()
    };
    Ok(MassProfile { point, rows, mass, uncertainty })
}

/// Solves `energy(disk(center, delta)) = mu` for `delta` on the continuous
/// nondecreasing energy function. Requires `0 < mu < degree`.
///
/// Two stages keep this cheap: a bracket search and log-bisection at a
/// coarse quadrature tolerance narrow the radius to a few percent, then a
/// bracket-safeguarded secant iteration in `log(delta)` at the fine
/// tolerance polishes it until `|E - mu|` is within 3x the fine quadrature
/// tolerance or the bracket's relative width drops below `tol`. The
/// returned radius satisfies `|E - mu| <= 10x` the fine tolerance.
pub fn delta_for_mass(curve: &RationalCurve, center: Complex, mu: f64, tol: f64) -> Result<f64> {
    let d = curve.degree() as f64;
    if !(mu > 0.0 && mu < d) {
        return Err(Error::NoSolution(format!(
            "mass {mu} outside the attainable range (0, {d})"
        )));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::Invalid("bracket tolerance must be in (0, 1)".into()));
    }
    let qtol_fine = (mu * 1e-3).min(1e-8).max(1e-12);
    let qtol_coarse = (mu * 1e-2).min(1e-5).max(qtol_fine);
    let e_at = |delta: f64, qtol: f64| -> Result<f64> {
        Ok(fs::energy(curve, &Region::Disk { center, r: delta, chart: 0 }, qtol)?.value)
    };
    let mut hi = 1.0;
    let mut e_hi = e_at(hi, qtol_coarse)?;
    while e_hi < mu + 2.0 * qtol_coarse {
        hi *= 4.0;
        if hi > 1e9 {
            return Err(Error::NoSolution("energy never reaches mu at finite radius".into()));
        }
        e_hi = e_at(hi, qtol_coarse)?;
    }
    let mut lo = hi;
    loop {
        lo *= 0.25;
        if lo < 1e-300 {
            return Err(Error::NoSolution("energy exceeds mu at every radius".into()));
        }
        if e_at(lo, qtol_coarse)? < mu - 2.0 * qtol_coarse {
            break;
        }
    }
    for _ in 0..60 {
        if hi / lo <= 1.05 {
            break;
        }
        let mid = (lo * hi).sqrt();
        let e = e_at(mid, qtol_coarse)?;
        if (e - mu).abs() <= 3.0 * qtol_coarse {
            // within coarse noise of the target; leave the rest to the
            // fine stage with a bracket centered here
            lo = mid * 0.9;
            hi = mid / 0.9;
            break;
        }
        if e < mu {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // fine stage: safeguarded secant on g(t) = E(e^t) - mu
    let mut tlo = lo.ln();
    let mut thi = hi.ln();
    let mut prev: Option<(f64, f64)> = None;
    let mut last: Option<(f64, f64)> = None;
    let mut best = (0.5 * (tlo + thi), f64::INFINITY);
    for _ in 0..40 {
        let mut t = 0.5 * (tlo + thi);
        if let (Some((t1, g1)), Some((t2, g2))) = (prev, last) {
            if g2 != g1 {
                let ts = t2 - g2 * (t2 - t1) / (g2 - g1);
                if ts > tlo && ts < thi {
                    t = ts;
                }
            }
        }
        let g = e_at(t.exp(), qtol_fine)? - mu;
        if g.abs() < best.1 {
            best = (t, g.abs());
        }
        if g.abs() <= 3.0 * qtol_fine {
            break;
        }
        if g < 0.0 {
            tlo = t;
        } else {
            thi = t;
        }
        prev = last;
        last = Some((t, g));
        if thi - tlo <= tol {
            break;
        }
    }
    if best.1 > 10.0 * qtol_fine {
        return Err(Error::NoSolution(format!(
            "radius search stalled: |E - mu| = {:.3e} at delta = {:.6e}",
            best.1,
            best.0.exp()
        )));
    }
    Ok(best.0.exp())
}

/// The per-sample rescaling data of one zoom step: centers `z_k`, scales
/// `delta_k`, and the target mass `mu` the scales realize.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaleStep {
    pub centers: Vec<Complex>,
    pub scales: Vec<f64>,
    pub mu: f64,
}

/// Applies a rescale step: sample `k` becomes `tuple(z_k + delta_k * w)`,
/// renormalized. Degrees and parameters are preserved; any declared limit is
/// dropped (the zoomed family has its own limit).
pub fn rescaled_family(fam: &CurveFamily, step: &RescaleStep) -> Result<CurveFamily> {
    if step.centers.len() != fam.samples().len() || step.scales.len() != fam.samples().len() {
        return Err(Error::Invalid("one center and scale per sample required".into()));
    }
    let samples = fam
        .samples()
        .iter()
        .zip(step.centers.iter().zip(&step.scales))
        .map(|(s, (&c, &scale))| {
            Ok(FamilySample {
                k: s.k,
                tuple: s.tuple.substitute_affine(c, Complex::new(scale, 0.0))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    CurveFamily::new(samples, None)
}

/// Finite roots of every tuple entry, with multiplicities.
///
/// A density spike of a rational map needs all entries to be small at once,
/// so every spike sits within its own core scale of a root of each entry.
/// These points therefore anchor all candidate spikes of the sample, are
/// computable without knowing the spike scales, and — unlike any measured
/// quantity — are exact algebraic functions of the family parameter.
fn entry_root_anchors(tuple: &MapTuple) -> Vec<(Complex, usize)> {
    let mut out = Vec::new();
    for entry in tuple.entries() {
        if entry.is_zero() {
            continue;
        }
        if let Ok(roots) = entry.roots() {
            for (pt, mult) in roots {
                if let Some(z) = pt.affine() {
                    out.push((z, mult));
                }
            }
        }
    }
    out.sort_by(|a, b| (a.0.re, a.0.im).partial_cmp(&(b.0.re, b.0.im)).unwrap());
    out
}

/// Energy and first moment (about `center`) of the density over the disk of
/// radius `r`, decomposed into one polar integral per interior anchor plus a
/// masked remainder.
///
/// The decomposition exists because adaptive quadrature in a single frame is
/// blind to a core that is sharp relative to its distance from the frame
/// origin: at coarse tolerance both quadrature rules straddle the spike, the
/// error estimate never sees it, and its entire mass is silently dropped. A
/// core anchored at the polar origin of its own piece is always resolved,
/// since the graded inner rings shrink onto it and the near-origin nodes
/// sample its tail. The pieces partition the disk exactly: a point belongs
/// to the nearest anchor whose excision disk contains it, else to the
/// remainder.
fn disk_moments(
    ev: &DensityEvaluator,
    center: Complex,
    r: f64,
    anchors: &[Complex],
    etol: f64,
    want_moment: bool,
) -> Result<(f64, Complex)> {
    const CAP: usize = 400_000;
    let mode = crate::fs::default_mode();
    let picked: Vec<(Complex, f64)> = anchors
        .iter()
        .filter(|h| (*h - center).norm() < 0.98 * r)
        .map(|&h| (h, 0.45 * (r - (h - center).norm())))
        .collect();
    let owner = |z: Complex| -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (j, &(h, s)) in picked.iter().enumerate() {
            let d = (z - h).norm();
            if d < s && best.map_or(true, |(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        best.map(|(j, _)| j)
    };
    let share = etol / (picked.len() as f64 + 1.0);
    let mut energy = 0.0;
    let mut moment = Complex::new(0.0, 0.0);
    for piece in 0..=picked.len() {
        let (origin, rad, claim) = if piece == 0 {
            (center, r, None)
        } else {
            let (h, s) = picked[piece - 1];
            (h, s, Some(piece - 1))
        };
        let rho = |rr: f64, th: f64| -> f64 {
            let z = origin + Complex::from_polar(rr, th);
            if owner(z) == claim { ev.density(z) } else { 0.0 }
        };
        energy += crate::quad::adaptive_polar(&rho, 0.0, rad, share, CAP, mode)?.value;
        if want_moment {
            let arm = origin - center;
            let fx = |rr: f64, th: f64| rho(rr, th) * (arm.re + rr * th.cos());
            let fy = |rr: f64, th: f64| rho(rr, th) * (arm.im + rr * th.sin());
            moment.re += crate::quad::adaptive_polar(&fx, 0.0, rad, share * r, CAP, mode)?.value;
            moment.im += crate::quad::adaptive_polar(&fy, 0.0, rad, share * r, CAP, mode)?.value;
        }
    }
    Ok((energy, moment))
}

/// Deterministic energy-centroid localization of the mass cluster at an
/// algebraic bubble seed.
///
/// Starting from the search window, alternately re-center on the
/// energy-weighted centroid of the window and halve the window while the
/// halved window still captures `mu` plus a quarter quantum. Every quantity
/// is an anchor-decomposed adaptive integral, so the located center varies
/// smoothly along the family and sharp cores cannot fall between quadrature
/// nodes while the window is still far from them. (A density argmax does
/// not vary smoothly: symmetric cores maximize the density on a whole
/// circle, and a grid argmax then lands at rounding-noise whim, feeding the
/// limit extrapolation a non-convergent center sequence.)
///
/// The contraction stops within a factor of two of the window radius that
/// leaks a quarter quantum, i.e. at a small multiple of the cluster extent.
/// The center is then snapped to the multiplicity-weighted centroid of the
/// entry roots inside the window: the measured centroid carries quadrature
/// noise at the final window scale, which a subsequent zoom divides by the
/// (smaller) cluster scale and the limit extrapolation then amplifies,
/// while the root centroid is an exact smooth function of the family
/// parameter sitting within the cluster hull.
fn locate_energy_center(
    curve: &RationalCurve,
    seed: Complex,
    radius: f64,
    mu: f64,
) -> Result<Complex> {
    let ev = DensityEvaluator::new(curve, 0);
    let anchors = entry_root_anchors(curve.tuple());
    let mut positions: Vec<Complex> = anchors.iter().map(|a| a.0).collect();
    positions.dedup_by(|a, b| (*a - *b).norm() <= 1e-9 * b.norm().max(1.0));
    let etol = (1e-3 * mu).min(1e-3);
    let mut c = seed;
    let mut r = radius;
    // the seed window must capture the cluster in the first place
    let mut e = disk_moments(&ev, c, r, &positions, etol, false)?.0;
    let mut grow = 0;
    while e < mu && grow < 8 {
        r *= 2.0;
        e = disk_moments(&ev, c, r, &positions, etol, false)?.0;
        grow += 1;
    }
    if e < mu {
        return Err(Error::NoSolution(format!(
            "window around {c} captures only {e:.3e} of the required mass {mu:.3e}"
        )));
    }
    for _ in 0..60 {
        let (e_now, m) = disk_moments(&ev, c, r, &positions, etol, true)?;
        let shift = m / e_now;
        // keep the recentering inside the current window
        let capped = if shift.norm() > 0.5 * r { shift * (0.5 * r / shift.norm()) } else { shift };
        c += capped;
        let e_half = disk_moments(&ev, c, 0.5 * r, &positions, etol, false)?.0;
        if e_half < mu + 0.25 {
            break;
        }
        r *= 0.5;
        if r < 1e-200 {
            break;
        }
    }
    // snap to the algebraic skeleton of the located cluster (slack factor on
    // the selection radius so an anchor on the window edge cannot drop in
    // and out between samples)
    let mut weight = 0.0;
    let mut sum = Complex::new(0.0, 0.0);
    for &(h, mult) in &anchors {
        if (h - c).norm() <= 1.25 * r {
            weight += mult as f64;
            sum += h * mult as f64;
        }
    }
    if weight > 0.0 {
        c = sum / weight;
    }
    Ok(c)
}

/// Tolerances and the energy quantum controlling the bubble recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct BubbleConfig {
    /// Energy quantum: zoom scales capture `mass - hbar/2`.
    pub hbar: f64,
    /// Allowed discrepancy between measured and algebraic masses in reports.
    pub mass_tol: f64,
    /// Allowed gap between parent and child map values at a node.
    pub connect_tol: f64,
    /// Absolute tolerance for component energy integrals.
    pub quad_tol: f64,
}

impl Default for BubbleConfig {
    fn default() -> Self {
        BubbleConfig { hbar: 1.0, mass_tol: 0.05, connect_tol: 1e-3, quad_tol: 1e-7 }
    }
}

/// One component of a bubble tree, with its limit map in the component's own
/// coordinates, the attachment data on the parent, and the measured node gap.
#[derive(Debug, Clone)]
pub struct BubbleComponent {
    pub id: usize,
    pub parent: Option<usize>,
    /// Attachment point on the parent sphere (chart-0 coordinate there).
    pub attach: Option<Complex>,
    /// Energy mass of the bubble this component resolves.
    pub mass: Option<f64>,
    pub curve: RationalCurve,
    pub degree: usize,
    /// Round-metric distance between the parent map at the attachment point
    /// and this component's map at its infinity.
    pub node_gap: Option<f64>,
    /// Per-sample centers and scales of the zoom that produced the component.
    pub rescale: Option<RescaleStep>,
}

/// The complete numerical Gromov limit of a family.
#[derive(Debug, Clone)]
pub struct BubbleTree {
    pub components: Vec<BubbleComponent>,
    /// Full-sphere energy of each component map, same order as `components`.
    pub energies: Vec<f64>,
    pub diagnostics: Vec<String>,
}

impl BubbleTree {
    pub fn degree_sum(&self) -> usize {
        self.components.iter().map(|c| c.degree).sum()
    }

    pub fn energy_sum(&self) -> f64 {
        crate::quad::compensated_sum(self.energies.iter().copied())
    }

    /// The underlying tree of spheres.
    pub fn sphere_tree(&self) -> Result<SphereTree> {
        let edges: Vec<(usize, usize)> = self
            .components
            .iter()
            .filter_map(|c| c.parent.map(|p| (c.id, p)))
            .collect();
        let order = RootedOrder::from_edges(self.components.len(), &edges)?;
        SphereTree::new(order, self.components.iter().map(|c| c.attach).collect())
    }

    /// The decorated tree (degrees, no extra marked points).
    pub fn decorated(&self) -> Result<DecoratedTree> {
        DecoratedTree::new(
            self.sphere_tree()?,
            self.components.iter().map(|c| c.degree).collect(),
            vec![0; self.components.len()],
        )
    }

    pub fn stability(&self) -> Result<(bool, Vec<usize>)> {
        Ok(self.decorated()?.stability())
    }

    /// All invariant violations against the expected total degree; empty
    /// means the tree passes every structural and numerical check.
    pub fn violations(&self, expected_degree: usize, cfg: &BubbleConfig) -> Vec<String> {
        let mut out = Vec::new();
        if self.degree_sum() != expected_degree {
            out.push(format!(
                "degree sum {} != family degree {}",
                self.degree_sum(),
                expected_degree
            ));
        }
        for c in &self.components {
            if let Some(g) = c.node_gap {
                if g > cfg.connect_tol {
                    out.push(format!(
                        "node gap {:.3e} at component {} exceeds {:.3e}",
                        g, c.id, cfg.connect_tol
                    ));
                }
            }
        }
        let budget = self.components.len() as f64 * 10.0 * cfg.quad_tol;
        if (self.energy_sum() - expected_degree as f64).abs() > budget {
            out.push(format!(
                "component energies sum to {:.9} != degree {} (budget {:.1e})",
                self.energy_sum(),
                expected_degree,
                budget
            ));
        }
        match self.stability() {
            Ok((true, _)) => {}
            Ok((false, offenders)) => out.push(format!("unstable components: {offenders:?}")),
            Err(e) => out.push(format!("tree structure invalid: {e}")),
        }
        if let Ok(t) = self.sphere_tree() {
            for v in t.validate() {
                out.push(format!("{}: {}", v.axiom, v.detail));
            }
        }
        out
    }
}

/// Builds the full bubble tree of a family.
///
/// Per level: extrapolate the limit, factor it, and for every finite common
/// root zoom each sample at the density peak with the energy-canonical scale
/// and recurse on the rescaled family. The multiplicity at `[1:0]` of each
/// rescaled limit must equal `degree - mass` (no energy lost between
/// scales); a mismatch aborts with [`Error::NoConvergence`]. Recursion depth
/// is bounded by `ceil(degree / hbar)`.
///
/// If the top-level limit has a bubble at infinity the whole family is first
/// recomposed with an integer shear of the domain so every bubble is finite;
/// a diagnostic records the rotation.
pub fn build_bubble_tree(fam: &CurveFamily, cfg: &BubbleConfig) -> Result<BubbleTree> {
    if !(cfg.hbar > 0.0 && cfg.mass_tol > 0.0 && cfg.connect_tol > 0.0 && cfg.quad_tol > 0.0) {
        return Err(Error::Invalid("config parameters must be positive".into()));
    }
    let d = fam.degree();
    let mut diagnostics = Vec::new();
    let mut fam = fam.clone();
    let limit = limit_tuple(&fam, LIMIT_TOL)?;
    let fac = limit.common_factor()?;
    if fac.roots.iter().any(|(p, _)| p.is_infinity()) {
        let mut shear = None;
        's: for s in 1..=16u32 {
            let target = P1Point::new(Complex::new(1.0, 0.0), Complex::new(s as f64, 0.0))?;
            for (p, _) in &fac.roots {
                if p.cross(&target) <= 10.0 * TAU_POINT {
                    continue 's;
                }
            }
            shear = Some(s as f64);
            break;
        }
        let s = shear.ok_or_else(|| Error::Invalid("could not find a shear avoiding all bubbles".into()))?;
        let m = [
            [Complex::new(1.0, 0.0), Complex::new(0.0, 0.0)],
            [Complex::new(s, 0.0), Complex::new(1.0, 0.0)],
        ];
        let samples = fam
            .samples()
            .iter()
            .map(|smp| {
                Ok(FamilySample { k: smp.k, tuple: smp.tuple.compose_mobius(m)? })
            })
            .collect::<Result<Vec<_>>>()?;
        let lim = match fam.declared_limit() {
            Some(l) => Some(l.compose_mobius(m)?),
            None => None,
        };
        fam = CurveFamily::new(samples, lim)?;
        diagnostics.push(format!(
            "DOMAIN_ROTATED: bubble at infinity; coordinates sheared by (u, v) -> (u, {s}u + v)"
        ));
    }
    let max_depth = (d as f64 / cfg.hbar).ceil().max(1.0) as usize;
    let mut components: Vec<BubbleComponent> = Vec::new();
    build_level(&fam, None, 0, None, cfg, max_depth, &mut components)?;
    let energies: Vec<f64> = crate::par_map_ordered(
        components.iter().map(|c| c.curve.clone()).collect::<Vec<_>>(),
        |curve| fs::energy(&curve, &Region::FullSphere, cfg.quad_tol).map(|e| e.value),
    )
    .into_iter()
    .collect::<Result<_>>()?;
    let tree = BubbleTree { components, energies, diagnostics };
    let mut tree = tree;
    if let Ok((false, offenders)) = tree.stability() {
        let root_constant = tree.components[0].degree == 0;
        if offenders.contains(&0) && root_constant {
            tree.diagnostics.push(
                "UNSTABLE_ROOT: root limit map is constant with fewer than 3 special points; \
                 a domain reparametrization would be needed to stabilize it"
                    .into(),
            );
        }
        if !offenders.is_empty() {
            tree.diagnostics
                .push(format!("UNSTABLE: components {offenders:?} are constant with < 3 special points"));
        }
    }
    Ok(tree)
}

/// Recursive worker: materializes the component for `fam`'s limit and its
/// subtree. `context` carries (parent id, attachment point, mass, rescale
/// data) for non-root levels.
fn build_level(
    fam: &CurveFamily,
    expected_mass: Option<usize>,
    depth: usize,
    context: Option<(usize, Complex, f64, RescaleStep)>,
    cfg: &BubbleConfig,
    max_depth: usize,
    components: &mut Vec<BubbleComponent>,
) -> Result<usize> {
    let tol = if depth == 0 { LIMIT_TOL } else { RESCALED_LIMIT_TOL };
    let limit = limit_tuple(fam, tol)?;
    let fac = limit.common_factor()?;
    let mut finite: Vec<(P1Point, usize)> = Vec::new();
    let mut inf_mult = 0usize;
    for &(p, m) in &fac.roots {
        if p.is_infinity() {
            inf_mult += m;
        } else {
            finite.push((p, m));
        }
    }
    match expected_mass {
        Some(mass) => {
            let expected = fam.degree() - mass;
            if inf_mult != expected {
                return Err(Error::NoConvergence(format!(
                    "far-field multiplicity {inf_mult} != degree - mass = {expected} \
                     after rescaling; energy escaped between scales"
                )));
            }
        }
        None => {
            if inf_mult != 0 {
                return Err(Error::NoConvergence(
                    "bubble at infinity survived the domain rotation".into(),
                ));
            }
        }
    }
    let curve = RationalCurve::new(fac.residual.clone())?;
    let id = components.len();
    let (parent, attach, mass, rescale) = match context {
        Some((p, a, m, r)) => (Some(p), Some(a), Some(m), Some(r)),
        None => (None, None, None, None),
    };
    components.push(BubbleComponent {
        id,
        parent,
        attach,
        mass,
        curve: curve.clone(),
        degree: curve.degree(),
        node_gap: None,
        rescale,
    });
    for &(pt, m) in &finite {
        if depth + 1 > max_depth {
            return Err(Error::DepthExceeded(max_depth));
        }
        let z_star = pt.affine().ok_or_else(|| {
            Error::NoConvergence("finite bubble point has no affine coordinate".into())
        })?;
        let mut r_search = 0.5 * z_star.norm().max(1.0);
        for &(other, _) in &finite {
            if other.cross(&pt) > TAU_POINT {
                if let Some(zo) = other.affine() {
                    r_search = r_search.min(0.45 * (zo - z_star).norm());
                }
            }
        }
        let mu = m as f64 - 0.5 * cfg.hbar;
        let zooms: Vec<Result<(Complex, f64)>> =
            crate::par_map_ordered(fam.samples().to_vec(), |s| {
                let sample_curve = RationalCurve::new(s.tuple.clone())?;
                let z_k = locate_energy_center(&sample_curve, z_star, r_search, mu)?;
                let delta_k = delta_for_mass(&sample_curve, z_k, mu, 1e-12)?;
                Ok((z_k, delta_k))
            });
        let mut centers = Vec::with_capacity(zooms.len());
        let mut scales = Vec::with_capacity(zooms.len());
        for z in zooms {
            let (z_k, delta_k) = z?;
            centers.push(z_k);
            scales.push(delta_k);
        }
        let step = RescaleStep { centers, scales, mu };
        let child_fam = rescaled_family(fam, &step)?;
        let child_id = build_level(
            &child_fam,
            Some(m),
            depth + 1,
            Some((id, z_star, m as f64, step)),
            cfg,
            max_depth,
            components,
        )?;
        let parent_val = curve.tuple().eval(&pt);
        let child_val = components[child_id].curve.tuple().eval(&P1Point::infinity());
        let gap = fs::fs_distance(&parent_val, &child_val)?;
        components[child_id].node_gap = Some(gap);
    }
    Ok(id)
}
