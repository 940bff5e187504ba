//! Homogeneous polynomials in two variables, points of the projective line,
//! and coefficient tuples representing rational curves in projective space.
//!
//! A tuple `[R_1, ..., R_n]` of degree-`d` homogeneous polynomials defines the
//! map `[u:v] -> [R_1(u,v) : ... : R_n(u,v)]` wherever some entry is nonzero.
//! The common linear factors of the entries are exactly the points where a
//! coefficient-wise limit of curves loses energy, so the factorization
//! routines here are the combinatorial core of the bubble-tree construction.
//!
//! Root finding uses Durand-Kerner simultaneous iteration followed by
//! cluster detection. A multiplicity-m root of a polynomial carrying relative
//! coefficient error eps scatters its computed roots over a disk of radius
//! about eps^(1/m), so clusters are merged with a multiplicity-adaptive
//! tolerance ladder on top of the base tolerance [`crate::TAU_ROOT`], and the
//! reported location is the cluster centroid (first-order accurate in eps)
//! polished by one multiplicity-aware Newton step. Distinct roots of inputs
//! handled by this crate are assumed separated well above the ladder; see the
//! generator conventions in the tests.

use crate::error::{Error, Result};
use crate::{Complex, TAU_POINT, TAU_ROOT};

const C_ZERO: Complex = Complex::new(0.0, 0.0);
const C_ONE: Complex = Complex::new(1.0, 0.0);

/// A point of the projective line, stored as a homogeneous coordinate pair
/// scaled to max-norm 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct P1Point {
    a: Complex,
    b: Complex,
}

impl P1Point {
    /// Builds a point from homogeneous coordinates `[a : b]`.
    pub fn new(a: Complex, b: Complex) -> Result<Self> {
        let m = a.norm().max(b.norm());
        if m == 0.0 || !m.is_finite() {
            return Err(Error::ZeroVector);
        }
        Ok(Self { a: a / m, b: b / m })
    }

    /// The point `[z : 1]`, represented in the chart where it is small.
    pub fn from_affine(z: Complex) -> Self {
        if z.norm() <= 1.0 {
            Self { a: z, b: C_ONE }
        } else {
            Self { a: C_ONE, b: z.inv() }
        }
    }

    /// The point `[0 : 1]`.
    pub fn zero() -> Self {
        Self { a: C_ZERO, b: C_ONE }
    }

    /// The point `[1 : 0]`.
    pub fn infinity() -> Self {
        Self { a: C_ONE, b: C_ZERO }
    }

    /// Max-norm-1 homogeneous coordinates.
    pub fn coords(&self) -> (Complex, Complex) {
        (self.a, self.b)
    }

    /// Affine coordinate `a/b` in the standard chart; `None` for `[1:0]`.
    pub fn affine(&self) -> Option<Complex> {
        if self.b.norm() == 0.0 {
            None
        } else {
            Some(self.a / self.b)
        }
    }

    /// Modulus of the cross product of the max-norm-1 representatives.
    /// Vanishes exactly when the points coincide.
    pub fn cross(&self, other: &Self) -> f64 {
        (self.a * other.b - other.a * self.b).norm()
    }

    /// Projective equality test at tolerance `tol` on the cross product.
    pub fn close_to(&self, other: &Self, tol: f64) -> bool {
        self.cross(other) <= tol
    }

    /// Whether the point is `[1:0]` up to [`TAU_POINT`].
    pub fn is_infinity(&self) -> bool {
        self.b.norm() <= TAU_POINT
    }

    /// The point with the two coordinates exchanged (the chart swap z -> 1/z).
    pub fn swapped(&self) -> Self {
        Self { a: self.b, b: self.a }
    }

    fn sort_key(&self) -> (u8, f64, f64) {
        if self.b.norm() >= self.a.norm() {
            let z = self.a / self.b;
            (0, z.re, z.im)
        } else {
            let w = self.b / self.a;
            (1, w.re, w.im)
        }
    }
}

fn sort_points(points: &mut [(P1Point, usize)]) {
    points.sort_by(|(p, _), (q, _)| {
        let kp = p.sort_key();
        let kq = q.sort_key();
        kp.0.cmp(&kq.0)
            .then(kp.1.total_cmp(&kq.1))
            .then(kp.2.total_cmp(&kq.2))
    });
}

/// A homogeneous polynomial in `(u, v)`, stored as the coefficient vector of
/// `u^(d-j) v^j` for `j = 0..=d`. The identically-zero polynomial of a given
/// degree is representable (all coefficients zero) so that tuples may carry
/// zero entries; operations that need a nonzero polynomial reject it.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogPoly {
    coeffs: Vec<Complex>,
}

impl HomogPoly {
    /// Builds a polynomial from coefficients of `u^(d-j) v^j`, `j` ascending.
    pub fn new(coeffs: Vec<Complex>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Invalid("empty coefficient vector".into()));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Invalid("nonfinite coefficient".into()));
        }
        Ok(Self { coeffs })
    }

    /// The zero polynomial of the given degree.
    pub fn zero(degree: usize) -> Self {
        Self { coeffs: vec![C_ZERO; degree + 1] }
    }

    /// The constant polynomial `c` (degree 0).
    pub fn constant(c: Complex) -> Self {
        Self { coeffs: vec![c] }
    }

    /// The linear form `b u - a v` vanishing exactly at `[a : b]`.
    pub fn vanishing_at(pt: &P1Point) -> Self {
        let (a, b) = pt.coords();
        Self { coeffs: vec![b, -a] }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex] {
        &self.coeffs
    }

    /// True when every coefficient is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    /// Largest coefficient modulus.
    pub fn sup_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Scales every coefficient by `c`.
    pub fn scaled(&self, c: Complex) -> Self {
        Self { coeffs: self.coeffs.iter().map(|x| x * c).collect() }
    }

    /// Polynomial product (degrees add).
    pub fn mul(&self, other: &Self) -> Self {
        Self { coeffs: conv(&self.coeffs, &other.coeffs) }
    }

    /// Evaluates at a projective point using its max-norm-1 representative,
    /// with Horner evaluation in the chart where the point is small.
    pub fn eval(&self, pt: &P1Point) -> Complex {
        let (a, b) = pt.coords();
        let d = self.degree() as u32;
        if b.norm() >= a.norm() {
            let z = a / b;
            horner(&self.coeffs, z) * b.powu(d)
        } else {
            let w = b / a;
            let mut acc = C_ZERO;
            for c in self.coeffs.iter().rev() {
                acc = acc * w + c;
            }
            acc * a.powu(d)
        }
    }

    /// Coefficients of the dehomogenization in the given chart, as a vector in
    /// descending powers of the chart coordinate. Chart 0 is `v = 1` with
    /// coordinate `z = u/v`; chart 1 is `u = 1` with coordinate `w = v/u`.
    pub fn chart_coeffs(&self, chart: u8) -> Vec<Complex> {
        match chart {
            0 => self.coeffs.clone(),
            _ => self.coeffs.iter().rev().cloned().collect(),
        }
    }

    /// All roots on the projective line with multiplicities; the multiplicity
    /// sum equals the degree. Roots at `[1:0]` are read off from exact leading
    /// zero coefficients; the rest are computed by simultaneous iteration and
    /// cluster detection in the standard chart.
    pub fn roots(&self) -> Result<Vec<(P1Point, usize)>> {
        if self.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        let lead_zeros = self
            .coeffs
            .iter()
            .take_while(|c| c.re == 0.0 && c.im == 0.0)
            .count();
        let desc = &self.coeffs[lead_zeros..];
        let mut out: Vec<(P1Point, usize)> = Vec::new();
        if desc.len() > 1 {
            let raw = durand_kerner(desc);
            for (center, mult, _spread) in cluster_roots(desc, &raw) {
                out.push((P1Point::from_affine(center), mult));
            }
        }
        if lead_zeros > 0 {
            out.push((P1Point::infinity(), lead_zeros));
        }
        sort_points(&mut out);
        Ok(out)
    }
}

/// Horner evaluation of a descending coefficient vector.
pub(crate) fn horner(desc: &[Complex], z: Complex) -> Complex {
    let mut acc = C_ZERO;
    for c in desc {
        acc = acc * z + c;
    }
    acc
}

/// Simultaneous evaluation of value and derivative.
pub(crate) fn horner_pd(desc: &[Complex], z: Complex) -> (Complex, Complex) {
    let mut p = C_ZERO;
    let mut dp = C_ZERO;
    for c in desc {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Derivative of a descending coefficient vector.
pub(crate) fn derive_desc(desc: &[Complex]) -> Vec<Complex> {
    let n = desc.len() - 1;
    if n == 0 {
        return vec![C_ZERO];
    }
    desc[..n]
        .iter()
        .enumerate()
        .map(|(j, c)| c * ((n - j) as f64))
        .collect()
}

/// Convolution of coefficient vectors (polynomial product).
pub(crate) fn conv(a: &[Complex], b: &[Complex]) -> Vec<Complex> {
    let mut out = vec![C_ZERO; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x.re == 0.0 && x.im == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Durand-Kerner iteration on a descending coefficient vector with nonzero
/// leading coefficient. Deterministic: fixed starting configuration, fixed
/// sweep order, fixed stopping rule.
fn durand_kerner(desc: &[Complex]) -> Vec<Complex> {
    let m = desc.len() - 1;
    let lead = desc[0];
    let a: Vec<Complex> = desc.iter().map(|c| c / lead).collect();
    if m == 1 {
        return vec![-a[1]];
    }
    let radius = (1.0
        + a.iter()
            .skip(1)
            .map(|c| c.norm())
            .fold(0.0, f64::max))
    .min(1e100);
    let rot = Complex::new(0.4, 0.9);
    let mut z: Vec<Complex> = (0..m)
        .map(|j| rot.powu(j as u32 + 1) * radius)
        .collect();
    let mut plateau = f64::INFINITY;
    for it in 0..800 {
        let mut step_max = 0.0f64;
        for j in 0..m {
            let pv = horner(&a, z[j]);
            let mut den = C_ONE;
            for i in 0..m {
                if i != j {
                    den *= z[j] - z[i];
                }
            }
            if den.norm() == 0.0 {
                den = Complex::new(1e-290, 0.0);
            }
            let step = pv / den;
            let cand = z[j] - step;
            if cand.re.is_finite() && cand.im.is_finite() {
                z[j] = cand;
                step_max = step_max.max(step.norm() / z[j].norm().max(1.0));
            } else {
                z[j] = rot.powu((j + it + 2) as u32) * radius * 1.1;
                step_max = f64::INFINITY;
            }
        }
        if step_max < 1e-13 {
            break;
        }
        // Multiple roots converge to an equilibrium cluster where steps stop
        // shrinking; detect the plateau instead of burning the full budget.
        if it % 24 == 23 {
            if step_max.is_finite() && step_max > 0.5 * plateau {
                break;
            }
            plateau = step_max;
        }
    }
    z
}

/// Merge tolerance for a cluster of total size `m` around magnitude `scale`.
fn merge_tol(m: usize, scale: f64) -> f64 {
    let ladder = 25.0 * 1e-14f64.powf(1.0 / m as f64);
    TAU_ROOT.max(ladder) * scale.max(1.0)
}

/// Floating-point noise level assumed for polynomial coefficients, relative
/// to their sup norm. Used by the cluster plausibility test.
const COEFF_EPS: f64 = 1e-15;

/// Connected components of a point set under single-linkage at distance
/// `tol`, in deterministic order (components ordered by their lowest point
/// under the (re, im) lexicographic order).
fn single_linkage(set: &[Complex], tol: f64) -> Vec<Vec<Complex>> {
    let mut pts: Vec<Complex> = set.to_vec();
    pts.sort_by(|p, q| p.re.total_cmp(&q.re).then(p.im.total_cmp(&q.im)));
    let n = pts.len();
    let mut assigned = vec![false; n];
    let mut comps = Vec::new();
    for start in 0..n {
        if assigned[start] {
            continue;
        }
        let mut comp = vec![pts[start]];
        assigned[start] = true;
        let mut frontier = vec![start];
        while let Some(i) = frontier.pop() {
            for j in 0..n {
                if !assigned[j] && (pts[i] - pts[j]).norm() <= tol {
                    assigned[j] = true;
                    comp.push(pts[j]);
                    frontier.push(j);
                }
            }
        }
        comps.push(comp);
    }
    comps
}

/// Newton iteration on the (m-1)-th derivative of `p`. An exact m-fold root
/// of `p` is an exact *simple* root of `p^(m-1)` (every lower derivative of
/// `(z-r)^m` still vanishes at `r`), so this converges quadratically to
/// machine precision where multiplicity-aware Newton on `p` itself drowns in
/// rounding noise. The step is discarded if it leaves a guard disk around
/// the start point, which prevents escaping to a different critical point.
fn refine_cluster(desc: &[Complex], c0: Complex, m: usize, spread: f64) -> Complex {
    let mut cur = desc.to_vec();
    for _ in 0..m.saturating_sub(1) {
        cur = derive_desc(&cur);
    }
    let guard = 4.0 * spread + TAU_ROOT * c0.norm().max(1.0);
    let mut z = c0;
    for _ in 0..8 {
        let (p, dp) = horner_pd(&cur, z);
        if dp.norm() == 0.0 {
            break;
        }
        let step = p / dp;
        let cand = z - step;
        if !cand.re.is_finite() || !cand.im.is_finite() || (cand - c0).norm() > guard {
            return c0;
        }
        z = cand;
        if step.norm() < 1e-15 * z.norm().max(1.0) {
            break;
        }
    }
    z
}

/// Tests whether `c` is consistent with an exact m-fold root of `p` up to
/// coefficient rounding noise: every Taylor coefficient `t_s = |p^(s)(c)|/s!`
/// for `s <= m-2` must be explained either by a residual root offset below
/// `PROFILE_W` (allowance `binom(m,s) * t_m * W^(m-s)`) or by evaluation
/// noise (a multiple of `COEFF_EPS` times the derivative's sup norm).
/// `s = m-1` is skipped because [`refine_cluster`] zeroes it by construction.
/// Calibrated on planted cases: genuine clusters sit below the noise floors
/// after refinement, while distinct roots at separation `h` produce ratios
/// near `binom(m,s) * h^(m-s)`, several orders of magnitude above.
fn plausible_multiple(desc: &[Complex], c: Complex, m: usize) -> bool {
    const PROFILE_W: f64 = 1e-7;
    const FLOOR_FACTOR: f64 = 32.0;
    let w = PROFILE_W * c.norm().max(1.0);
    let mut cur = desc.to_vec();
    let mut fact = 1.0;
    let mut terms = Vec::with_capacity(m + 1);
    let mut floors = Vec::with_capacity(m + 1);
    for s in 0..=m {
        if s > 0 {
            fact *= s as f64;
        }
        let sup = cur.iter().map(|a| a.norm()).fold(0.0, f64::max);
        terms.push(horner(&cur, c).norm() / fact);
        floors.push(COEFF_EPS * sup / fact);
        if s < m {
            cur = derive_desc(&cur);
        }
    }
    let t_m = terms[m];
    if t_m <= FLOOR_FACTOR * floors[m] {
        // the leading term itself is noise: nothing to refute against
        return true;
    }
    let mut binom = 1.0f64;
    let mut allow_pow = w.powi(m as i32);
    for s in 0..m.saturating_sub(1) {
        let allow = (binom * t_m * allow_pow).max(FLOOR_FACTOR * floors[s]);
        if terms[s] > allow {
            return false;
        }
        binom *= (m - s) as f64 / (s + 1) as f64;
        allow_pow /= w;
    }
    true
}

/// Groups computed roots into multiplicity clusters by recursive
/// single-linkage splitting. A set that stays connected at the
/// multiplicity-adaptive tolerance is accepted as an m-fold root only if the
/// polynomial itself corroborates it ([`plausible_multiple`] at the
/// derivative-refined center); otherwise the linkage tolerance is halved
/// until the set separates. Returns `(refined center, multiplicity, spread)`
/// triples ordered by (re, im) of the center.
fn cluster_roots(desc: &[Complex], raw: &[Complex]) -> Vec<(Complex, usize, f64)> {
    fn process(desc: &[Complex], set: Vec<Complex>, out: &mut Vec<(Complex, usize, f64)>) {
        let m = set.len();
        let centroid = set.iter().sum::<Complex>() / m as f64;
        let spread = set.iter().map(|p| (p - centroid).norm()).fold(0.0, f64::max);
        if m == 1 {
            out.push((refine_cluster(desc, set[0], 1, 0.0), 1, 0.0));
            return;
        }
        let scale = centroid.norm().max(set.iter().map(|p| p.norm()).fold(0.0, f64::max));
        let tol = merge_tol(m, scale);
        let comps = single_linkage(&set, tol);
        if comps.len() > 1 {
            for comp in comps {
                process(desc, comp, out);
            }
            return;
        }
        let refined = refine_cluster(desc, centroid, m, spread);
        if plausible_multiple(desc, refined, m) {
            out.push((refined, m, spread));
            return;
        }
        // Connected at the ladder tolerance, but the polynomial refutes an
        // m-fold root: shrink the linkage until the set comes apart. If it
        // never does, the points are numerically coincident and we keep the
        // merged cluster as the best available description.
        let mut t = tol * 0.5;
        while t > 1e-14 * scale.max(1.0) {
            let comps = single_linkage(&set, t);
            if comps.len() > 1 {
                for comp in comps {
                    process(desc, comp, out);
                }
                return;
            }
            t *= 0.5;
        }
        out.push((refined, m, spread));
    }
    let mut out = Vec::new();
    process(desc, raw.to_vec(), &mut out);
    out.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
    out
}

/// Divides `p` by the linear form vanishing at `pt`, once. Returns the
/// quotient (degree drops by one) and the remainder modulus. The division is
/// performed in the chart where `pt` is small, so it is well conditioned for
/// roots of any magnitude including `[1:0]`. The divisor is monic in that
/// chart, so the quotient keeps the dividend's leading coefficient there and
/// may differ from the monic-in-`u` quotient by a constant; the chart choice
/// depends only on `pt`, so all entries of a tuple divided at the same point
/// share the scale and stay projectively consistent.
pub(crate) fn divide_linear(p: &HomogPoly, pt: &P1Point) -> (HomogPoly, f64) {
    let d = p.degree();
    debug_assert!(d >= 1);
    let (a, b) = pt.coords();
    if b.norm() >= a.norm() {
        let z0 = a / b;
        let mut q = Vec::with_capacity(d);
        let mut acc = p.coeffs[0];
        for j in 1..=d {
            q.push(acc);
            acc = p.coeffs[j] + z0 * acc;
        }
        (HomogPoly { coeffs: q }, acc.norm())
    } else {
        let w0 = b / a;
        let asc: Vec<Complex> = p.coeffs.iter().rev().cloned().collect();
        let mut q = Vec::with_capacity(d);
        let mut acc = asc[0];
        for j in 1..=d {
            q.push(acc);
            acc = asc[j] + w0 * acc;
        }
        q.reverse();
        (HomogPoly { coeffs: q }, acc.norm())
    }
}

/// Common roots of a family of nonzero polynomials: intersects the root sets
/// at tolerance [`TAU_POINT`] on the projective cross product, taking the
/// minimum multiplicity and averaging the matched locations.
pub(crate) fn common_roots(polys: &[&HomogPoly]) -> Result<Vec<(P1Point, usize)>> {
    debug_assert!(!polys.is_empty());
    if polys.iter().any(|p| p.degree() == 0) {
        return Ok(Vec::new());
    }
    let mut sets = Vec::with_capacity(polys.len());
    for p in polys {
        sets.push(p.roots()?);
    }
    let mut out: Vec<(P1Point, usize)> = Vec::new();
    'cand: for &(pt, m0) in &sets[0] {
        let mut mult = m0;
        let mut reps = vec![pt];
        for set in &sets[1..] {
            let mut hit: Option<(f64, P1Point, usize)> = None;
            for &(q, mq) in set {
                let c = pt.cross(&q);
                if c <= TAU_POINT && hit.map_or(true, |(hc, _, _)| c < hc) {
                    hit = Some((c, q, mq));
                }
            }
            match hit {
                Some((_, q, mq)) => {
                    mult = mult.min(mq);
                    reps.push(q);
                }
                None => continue 'cand,
            }
        }
        out.push((average_points(&reps), mult));
    }
    sort_points(&mut out);
    Ok(out)
}

/// Averages projectively-close points in the chart where the first is small.
fn average_points(reps: &[P1Point]) -> P1Point {
    let (a, b) = reps[0].coords();
    let n = reps.len() as f64;
    if b.norm() >= a.norm() {
        let mean = reps
            .iter()
            .map(|p| {
                let (pa, pb) = p.coords();
                pa / pb
            })
            .sum::<Complex>()
            / n;
        P1Point::from_affine(mean)
    } else {
        let mean = reps
            .iter()
            .map(|p| {
                let (pa, pb) = p.coords();
                pb / pa
            })
            .sum::<Complex>()
            / n;
        P1Point { a: C_ONE, b: mean }
    }
}

/// Result of pulling the common linear factors out of a tuple.
#[derive(Debug, Clone)]
pub struct Factorization {
    /// Common roots with multiplicities, in deterministic order.
    pub roots: Vec<(P1Point, usize)>,
    /// The tuple with all common factors divided out; its entries share no
    /// root, so it represents an actual rational curve.
    pub residual: MapTuple,
    /// Largest relative synthetic-division remainder encountered, a
    /// diagnostic for how exactly the detected factors divide the entries.
    pub remainder_norm: f64,
}

impl Factorization {
    /// Total degree of the common factor.
    pub fn common_degree(&self) -> usize {
        self.roots.iter().map(|(_, m)| m).sum()
    }
}

/// An `n`-tuple of degree-`d` homogeneous polynomials, not all zero.
#[derive(Debug, Clone, PartialEq)]
pub struct MapTuple {
    entries: Vec<HomogPoly>,
}

impl MapTuple {
    pub fn new(entries: Vec<HomogPoly>) -> Result<Self> {
        if entries.len() < 2 {
            return Err(Error::Invalid("tuple needs at least 2 entries".into()));
        }
        let d = entries[0].degree();
        if entries.iter().any(|e| e.degree() != d) {
            return Err(Error::Invalid("tuple entries must share one degree".into()));
        }
        if entries.iter().all(|e| e.is_zero()) {
            return Err(Error::ZeroTuple);
        }
        Ok(Self { entries })
    }

    pub fn n(&self) -> usize {
        self.entries.len()
    }

    pub fn degree(&self) -> usize {
        self.entries[0].degree()
    }

    pub fn entries(&self) -> &[HomogPoly] {
        &self.entries
    }

    /// Largest coefficient modulus across all entries.
    pub fn sup_coeff(&self) -> f64 {
        self.entries.iter().map(|e| e.sup_coeff()).fold(0.0, f64::max)
    }

    /// Evaluates all entries at a point, giving homogeneous coordinates of
    /// the image (valid wherever some entry is nonzero).
    pub fn eval(&self, pt: &P1Point) -> Vec<Complex> {
        self.entries.iter().map(|e| e.eval(pt)).collect()
    }

    /// Canonical representative of the projective equivalence class: sup-norm
    /// of the coefficients is 1 and the first coefficient achieving it
    /// (entry-major, ascending power index) is real positive.
    pub fn normalized(&self) -> MapTuple {
        let sup = self.sup_coeff();
        let mut pivot = C_ONE;
        'outer: for e in &self.entries {
            for c in e.coeffs() {
                if c.norm() >= sup {
                    pivot = *c;
                    break 'outer;
                }
            }
        }
        let factor = pivot.conj() / (pivot.norm() * sup);
        MapTuple {
            entries: self.entries.iter().map(|e| e.scaled(factor)).collect(),
        }
    }

    /// Pulls out the common linear factors of the entries by intersecting
    /// root clusters and dividing synthetically at the matched centroids.
    /// Zero entries impose no constraint and stay zero in the residual.
    pub fn common_factor(&self) -> Result<Factorization> {
        let nonzero: Vec<&HomogPoly> = self.entries.iter().filter(|e| !e.is_zero()).collect();
        let commons = common_roots(&nonzero)?;
        let total: usize = commons.iter().map(|(_, m)| m).sum();
        let mut remainder_norm = 0.0f64;
        let mut residual = Vec::with_capacity(self.entries.len());
        for e in &self.entries {
            if e.is_zero() {
                residual.push(HomogPoly::zero(self.degree() - total));
                continue;
            }
            let sup = e.sup_coeff();
            let mut q = e.clone();
            for (pt, m) in &commons {
                for _ in 0..*m {
                    let (qq, rem) = divide_linear(&q, pt);
                    remainder_norm = remainder_norm.max(rem / sup);
                    q = qq;
                }
            }
            residual.push(q);
        }
        Ok(Factorization {
            roots: commons,
            residual: MapTuple::new(residual)?,
            remainder_norm,
        })
    }

    /// Composes with the domain map `(w_u, w_v) -> (m00 w_u + m01 w_v,
    /// m10 w_u + m11 w_v)`, then renormalizes. Rejects singular matrices.
    pub fn compose_mobius(&self, m: [[Complex; 2]; 2]) -> Result<MapTuple> {
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if det.norm() == 0.0 {
            return Err(Error::Invalid("singular domain substitution".into()));
        }
        let d = self.degree();
        let pows_top = powers_of_linear(m[0][0], m[0][1], d);
        let pows_bot = powers_of_linear(m[1][0], m[1][1], d);
        let entries = self
            .entries
            .iter()
            .map(|e| {
                let mut out = vec![C_ZERO; d + 1];
                for (j, &c) in e.coeffs().iter().enumerate() {
                    if c.re == 0.0 && c.im == 0.0 {
                        continue;
                    }
                    let top = &pows_top[d - j];
                    let bot = &pows_bot[j];
                    for (i1, &x) in top.iter().enumerate() {
                        for (i2, &y) in bot.iter().enumerate() {
                            out[i1 + i2] += c * x * y;
                        }
                    }
                }
                HomogPoly { coeffs: out }
            })
            .collect();
        Ok(MapTuple { entries }.normalized())
    }

    /// Reparametrizes by the affine chart map `z = center + scale * w`,
    /// renormalized. The heart of the rescaling step: zooming the domain into
    /// the disk of radius `scale` around `center`.
    pub fn substitute_affine(&self, center: Complex, scale: Complex) -> Result<MapTuple> {
        if scale.norm() == 0.0 {
            return Err(Error::ZeroScale);
        }
        self.compose_mobius([[scale, center], [C_ZERO, C_ONE]])
    }

    /// The tuple in the opposite chart (`u` and `v` exchanged); represents
    /// the same map precomposed with `z -> 1/z`.
    pub fn swapped_chart(&self) -> MapTuple {
        MapTuple {
            entries: self
                .entries
                .iter()
                .map(|e| HomogPoly {
                    coeffs: e.coeffs.iter().rev().cloned().collect(),
                })
                .collect(),
        }
    }
}

/// Coefficient tables of `(a w_u + b w_v)^s` for `s = 0..=d`.
fn powers_of_linear(a: Complex, b: Complex, d: usize) -> Vec<Vec<Complex>> {
    let mut out = Vec::with_capacity(d + 1);
    out.push(vec![C_ONE]);
    for s in 1..=d {
        let prev = &out[s - 1];
        let mut next = vec![C_ZERO; s + 1];
        for (i, &c) in prev.iter().enumerate() {
            next[i] += c * a;
            next[i + 1] += c * b;
        }
        out.push(next);
    }
    out
}

/// A coprime tuple: an honest rational curve (no common root among entries).
/// Constant curves are exactly those of degree 0.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalCurve {
    tuple: MapTuple,
}

impl RationalCurve {
    /// Validates coprimality via [`MapTuple::common_factor`].
    pub fn new(tuple: MapTuple) -> Result<Self> {
        let f = tuple.common_factor()?;
        if !f.roots.is_empty() {
            return Err(Error::Invalid(format!(
                "tuple entries share {} common root(s); divide them out first",
                f.roots.len()
            )));
        }
        Ok(Self { tuple })
    }

    pub fn tuple(&self) -> &MapTuple {
        &self.tuple
    }

    pub fn n(&self) -> usize {
        self.tuple.n()
    }

    /// Algebraic degree; equals the Fubini-Study energy of the map.
    pub fn degree(&self) -> usize {
        self.tuple.degree()
    }

    pub fn is_constant(&self) -> bool {
        self.degree() == 0
    }

    /// The curve precomposed with `z -> 1/z` (coprimality is preserved).
    pub fn swapped_chart(&self) -> RationalCurve {
        RationalCurve { tuple: self.tuple.swapped_chart() }
    }

    /// Local order of the map at `z0`: the least `l` such that some component
    /// of the map, written in a chart centered at the image point, has
    /// nonvanishing l-th derivative. Equals 1 at immersed points, exceeds 1
    /// exactly at critical points, and is 0 only for constant curves.
    ///
    /// Computed algebraically: with pivot entry `R_p` maximizing `|R_p(z0)|`,
    /// the chart components are `R_i / R_p`, whose derivative is the Wronskian
    /// `W_i = R_i' R_p - R_i R_p'` over `R_p^2`; the order is one plus the
    /// smallest vanishing order of a nonzero `W_i` at `z0`.
    pub fn local_order(&self, z0: &P1Point) -> usize {
        if self.degree() == 0 {
            return 0;
        }
        let (a, b) = z0.coords();
        let chart: u8 = if b.norm() >= a.norm() { 0 } else { 1 };
        let t0 = if chart == 0 { a / b } else { b / a };
        let charts: Vec<Vec<Complex>> = self
            .tuple
            .entries
            .iter()
            .map(|e| e.chart_coeffs(chart))
            .collect();
        let vals = self.tuple.eval(z0);
        let p = vals
            .iter()
            .enumerate()
            .max_by(|(_, x), (_, y)| x.norm().total_cmp(&y.norm()))
            .map(|(i, _)| i)
            .unwrap();
        let dp = derive_desc(&charts[p]);
        let sup_p = charts[p].iter().map(|c| c.norm()).fold(0.0, f64::max);
        let mut best: Option<usize> = None;
        for i in 0..self.n() {
            if i == p {
                continue;
            }
            let di = derive_desc(&charts[i]);
            let w = sub_vec(&conv(&di, &charts[p]), &conv(&charts[i], &dp));
            let sup_i = charts[i].iter().map(|c| c.norm()).fold(0.0, f64::max);
            let sup_w = w.iter().map(|c| c.norm()).fold(0.0, f64::max);
            let scale = sup_i * sup_p * (self.degree() as f64).powi(2);
            if sup_w <= 1e-12 * scale {
                // proportional entries: this component is constant in the
                // chart and imposes no order constraint
                continue;
            }
            let s = vanishing_order(&w, t0);
            best = Some(best.map_or(s, |b: usize| b.min(s)));
        }
        1 + best.unwrap_or(0)
    }

    /// All preimages of the target point `x` (homogeneous coordinates in the
    /// image space) with local multiplicities. The multiplicity sum over all
    /// preimages equals the degree whenever `x` lies in the image of the
    /// associated degree-d branched cover.
    ///
    /// Computed from the 2x2 minors `R_i x_p - R_p x_i` against the dominant
    /// coordinate `x_p`: their common roots are exactly the preimages, with
    /// multiplicity the minimum vanishing order over the minors.
    pub fn preimages(&self, x: &[Complex]) -> Result<Vec<(P1Point, usize)>> {
        if x.len() != self.n() {
            return Err(Error::Invalid(format!(
                "target has {} coordinates, curve maps into {} coordinates",
                x.len(),
                self.n()
            )));
        }
        let xm = x.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if xm == 0.0 || !xm.is_finite() {
            return Err(Error::ZeroVector);
        }
        if self.degree() == 0 {
            return Err(Error::ConstantCurve);
        }
        let p = x
            .iter()
            .enumerate()
            .max_by(|(_, u), (_, v)| u.norm().total_cmp(&v.norm()))
            .map(|(i, _)| i)
            .unwrap();
        let mut minors = Vec::new();
        for i in 0..self.n() {
            if i == p {
                continue;
            }
            let coeffs: Vec<Complex> = self.tuple.entries[i]
                .coeffs()
                .iter()
                .zip(self.tuple.entries[p].coeffs())
                .map(|(ci, cp)| ci * x[p] - cp * x[i])
                .collect();
            let m = HomogPoly { coeffs };
            if !m.is_zero() {
                minors.push(m);
            }
        }
        if minors.is_empty() {
            return Err(Error::ConstantCurve);
        }
        let refs: Vec<&HomogPoly> = minors.iter().collect();
        common_roots(&refs)
    }

    /// Total order of `x`: the multiplicity sum over all preimages (0 when
    /// `x` is not attained).
    pub fn order_at(&self, x: &[Complex]) -> Result<usize> {
        Ok(self.preimages(x)?.iter().map(|(_, m)| m).sum())
    }
}

fn sub_vec(a: &[Complex], b: &[Complex]) -> Vec<Complex> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Order of vanishing of a descending-coefficient polynomial at `t0` (which
/// lies in the closed unit disk by chart choice): the first Taylor
/// coefficient at `t0` exceeding a relative threshold.
fn vanishing_order(desc: &[Complex], t0: Complex) -> usize {
    let sup = desc.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let deg = desc.len() - 1;
    let mut cur = desc.to_vec();
    let mut fact = 1.0f64;
    for s in 0..=deg {
        if s > 0 {
            fact *= s as f64;
        }
        let v = horner(&cur, t0).norm() / fact;
        if v > 1e-8 * sup {
            return s;
        }
        cur = derive_desc(&cur);
    }
    deg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    #[test]
    fn divide_linear_exact() {
        // (z - 2)(z + 1) = z^2 - z - 2, homogeneous in (u, v). The point
        // z = 2 is represented as [1 : 0.5], so the division runs in the
        // v/u chart and the quotient keeps p's leading v-coefficient (-2):
        // the result is -2(z + 1), projectively equal to z + 1.
        let p = HomogPoly::new(vec![c(1.0, 0.0), c(-1.0, 0.0), c(-2.0, 0.0)]).unwrap();
        let (q, rem) = divide_linear(&p, &P1Point::from_affine(c(2.0, 0.0)));
        assert!(rem < 1e-14);
        assert_eq!(q.degree(), 1);
        assert!((q.coeffs()[0] - c(-2.0, 0.0)).norm() < 1e-14);
        assert!((q.coeffs()[1] - c(-2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn divide_linear_at_zero() {
        // u * (u - v) divided at [0 : 1] (affine z = 0): quotient u - v
        let p = HomogPoly::new(vec![c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let (q, rem) = divide_linear(&p, &P1Point::zero());
        assert!(rem < 1e-14);
        assert!((q.coeffs()[0] - c(1.0, 0.0)).norm() < 1e-14);
        assert!((q.coeffs()[1] - c(-1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn divide_linear_at_infinity() {
        // v * (u - v) divided at [1 : 0]: quotient u - v
        let p = HomogPoly::new(vec![c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)]).unwrap();
        let (q, rem) = divide_linear(&p, &P1Point::infinity());
        assert!(rem < 1e-14);
        assert!((q.coeffs()[0] - c(1.0, 0.0)).norm() < 1e-14);
        assert!((q.coeffs()[1] - c(-1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn durand_kerner_simple() {
        // roots 1, -2, 3i
        let desc = conv(
            &conv(&[c(1.0, 0.0), c(-1.0, 0.0)], &[c(1.0, 0.0), c(2.0, 0.0)]),
            &[c(1.0, 0.0), c(0.0, -3.0)],
        );
        let mut r = durand_kerner(&desc);
        r.sort_by(|p, q| p.re.total_cmp(&q.re));
        assert!((r[0] - c(-2.0, 0.0)).norm() < 1e-10);
        assert!((r[1] - c(0.0, 3.0)).norm() < 1e-10);
        assert!((r[2] - c(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn cluster_quadruple_root() {
        // (z - 1)^4: the computed roots scatter at ~1e-4 and must cluster
        let lin = [c(1.0, 0.0), c(-1.0, 0.0)];
        let p4 = conv(&conv(&lin, &lin), &conv(&lin, &lin));
        let raw = durand_kerner(&p4);
        let clusters = cluster_roots(&p4, &raw);
        assert_eq!(clusters.len(), 1);
        assert_eq!(clusters[0].1, 4);
        assert!((clusters[0].0 - c(1.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn cluster_quadruple_with_neighbors() {
        // (z - 0.5)^4 (z - 0.45) (z - 0.55): the chain through the nearby
        // simple roots must be split off, the quadruple kept together
        let lin = |r: f64| [c(1.0, 0.0), c(-r, 0.0)];
        let q = conv(&lin(0.5), &lin(0.5));
        let p = conv(&conv(&q, &q), &conv(&lin(0.45), &lin(0.55)));
        let raw = durand_kerner(&p);
        let mut clusters = cluster_roots(&p, &raw);
        clusters.sort_by(|a, b| a.0.re.total_cmp(&b.0.re));
        assert_eq!(clusters.len(), 3);
        assert_eq!(clusters[0].1, 1);
        assert!((clusters[0].0 - c(0.45, 0.0)).norm() < 1e-9);
        assert_eq!(clusters[1].1, 4);
        assert!((clusters[1].0 - c(0.5, 0.0)).norm() < 1e-9);
        assert_eq!(clusters[2].1, 1);
        assert!((clusters[2].0 - c(0.55, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn cluster_rejects_nearby_simple_roots() {
        // four distinct roots packed at separation ~1e-3: connected at the
        // multiplicity-4 linkage tolerance, but the polynomial refutes a
        // quadruple root, so they must come back out as four simple roots
        let lin = |r: Complex| [c(1.0, 0.0), -r];
        let p = conv(
            &conv(&lin(c(1.0, 0.0)), &lin(c(1.001, 0.0))),
            &conv(&lin(c(1.002, 0.0)), &lin(c(1.0, 0.001))),
        );
        let raw = durand_kerner(&p);
        let clusters = cluster_roots(&p, &raw);
        assert_eq!(clusters.len(), 4);
        assert!(clusters.iter().all(|cl| cl.1 == 1));
        // position accuracy is conditioning-limited here: |p'| ~ 2e-9 at
        // each root, so coefficient rounding alone moves them by ~1e-7
        for target in [c(1.0, 0.0), c(1.001, 0.0), c(1.002, 0.0), c(1.0, 0.001)] {
            assert!(
                clusters.iter().any(|cl| (cl.0 - target).norm() < 5e-6),
                "missing root near {target}"
            );
        }
    }
}
