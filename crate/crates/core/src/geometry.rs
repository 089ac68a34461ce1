//! Domains, the embedded unit circle, point sets, and every scattered-data
//! geometric quantity: fill distance, separation radius, mesh ratio, tubular
//! neighborhoods, closest-point projection, and cone-dependent domain
//! constants.

use crate::error::{Error, Result};
use crate::scalar::Real;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Default number of candidate points used when measuring fill distances.
pub const DEFAULT_FILL_RESOLUTION: usize = 100_000;

/// Hard ceiling on generated node counts.
pub const MAX_NODES: usize = 100_000;

// ---------------------------------------------------------------------------
// Domains and manifolds
// ---------------------------------------------------------------------------

/// Supported bounded domain shapes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape<T> {
    /// Interval `[a, b]` in one dimension.
    Interval { a: T, b: T },
    /// Axis-aligned box `[x0, x1] × [y0, y1]`.
    Box2 { x0: T, x1: T, y0: T, y1: T },
    /// Disk of given center and radius.
    Disk { cx: T, cy: T, radius: T },
    /// Annulus with radii `(1-δ, 1+δ)` centered at the origin (the tubular
    /// neighborhood of the unit circle of half-width δ).
    Annulus { delta: T },
}

/// A bounded domain satisfying an interior cone condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain<T> {
    pub shape: Shape<T>,
    /// Interior cone angle θ ∈ (0, π/2).
    pub cone_angle: T,
    /// Interior cone radius.
    pub cone_radius: T,
}

/// Dimensionless cone-dependent constants attached to a domain: `c` enters
/// lower bounds for quadrature-point separation, `c_big ≥ c` the matching
/// upper bounds; both derive from the volume and the cone angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainConstants<T> {
    pub c_omega: T,
    pub c_omega_big: T,
}

impl<T: Real> Domain<T> {
    fn checked(shape: Shape<T>, cone_angle: T, cone_radius: T) -> Result<Self> {
        let vol = Domain {
            shape,
            cone_angle,
            cone_radius,
        }
        .volume();
        if !(vol > T::zero()) || !vol.is_finite() {
            return Err(Error::InvalidGeometry(format!(
                "domain must be bounded with positive volume (got volume {:e})",
                vol.as_f64()
            )));
        }
        if !(cone_angle > T::zero() && cone_angle < T::FRAC_PI_2()) {
            return Err(Error::InvalidGeometry(
                "cone angle must lie strictly between 0 and π/2".into(),
            ));
        }
        if !(cone_radius > T::zero()) {
            return Err(Error::InvalidGeometry("cone radius must be positive".into()));
        }
        Ok(Domain {
            shape,
            cone_angle,
            cone_radius,
        })
    }

    /// Interval `[a, b]` with a conservative default cone (θ = π/4).
    pub fn interval(a: T, b: T) -> Result<Self> {
        if !(b > a) {
            return Err(Error::InvalidGeometry(format!(
                "interval needs a < b, got [{}, {}]",
                a, b
            )));
        }
        Self::checked(
            Shape::Interval { a, b },
            T::FRAC_PI_4(),
            (b - a) * T::of(0.5),
        )
    }

    /// Axis-aligned box with a conservative default cone (θ = π/4).
    pub fn box2(x0: T, x1: T, y0: T, y1: T) -> Result<Self> {
        if !(x1 > x0 && y1 > y0) {
            return Err(Error::InvalidGeometry(
                "box needs x0 < x1 and y0 < y1".into(),
            ));
        }
        let side = (x1 - x0).min(y1 - y0);
        Self::checked(Shape::Box2 { x0, x1, y0, y1 }, T::FRAC_PI_4(), side * T::of(0.5))
    }

    /// Disk with a conservative default cone (θ = π/4).
    pub fn disk(cx: T, cy: T, radius: T) -> Result<Self> {
        if !(radius > T::zero()) {
            return Err(Error::InvalidGeometry("disk needs a positive radius".into()));
        }
        Self::checked(Shape::Disk { cx, cy, radius }, T::FRAC_PI_4(), radius)
    }

    /// Annulus `1-δ ≤ ‖x‖ ≤ 1+δ` for `0 < δ < 1`.
    pub fn annulus(delta: T) -> Result<Self> {
        if !(delta > T::zero() && delta < T::one()) {
            return Err(Error::InvalidGeometry(
                "annulus requires band half-width δ strictly between 0 and 1".into(),
            ));
        }
        Self::checked(Shape::Annulus { delta }, T::FRAC_PI_4(), delta)
    }

    /// Replace the cone parameters (validated).
    pub fn with_cone(self, cone_angle: T, cone_radius: T) -> Result<Self> {
        Self::checked(self.shape, cone_angle, cone_radius)
    }

    /// Ambient (and intrinsic) dimension.
    pub fn dim(&self) -> usize {
        match self.shape {
            Shape::Interval { .. } => 1,
            _ => 2,
        }
    }

    /// Exact volume (length/area).
    pub fn volume(&self) -> T {
        match self.shape {
            Shape::Interval { a, b } => b - a,
            Shape::Box2 { x0, x1, y0, y1 } => (x1 - x0) * (y1 - y0),
            Shape::Disk { radius, .. } => T::PI() * radius * radius,
            // π((1+δ)² − (1−δ)²) = 4πδ
            Shape::Annulus { delta } => T::of(4.0) * T::PI() * delta,
        }
    }

    /// Membership test with a small boundary tolerance.
    pub fn contains(&self, p: &[T]) -> bool {
        let eps = T::of(1e-12);
        match self.shape {
            Shape::Interval { a, b } => p[0] >= a - eps && p[0] <= b + eps,
            Shape::Box2 { x0, x1, y0, y1 } => {
                p[0] >= x0 - eps && p[0] <= x1 + eps && p[1] >= y0 - eps && p[1] <= y1 + eps
            }
            Shape::Disk { cx, cy, radius } => {
                let dx = p[0] - cx;
                let dy = p[1] - cy;
                (dx * dx + dy * dy).sqrt() <= radius + eps
            }
            Shape::Annulus { delta } => {
                let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
                r >= T::one() - delta - eps && r <= T::one() + delta + eps
            }
        }
    }

    /// Cone-dependent dimensionless constants.
    ///
    /// `c = π^{-1/2} (vol Γ(d/2+1))^{1/d}` and `c_big = (2π/θ)^{1/d} c`.
    /// The Γ values at the two shipped dimensions are exact:
    /// Γ(3/2) = √π/2 and Γ(2) = 1.
    pub fn constants(&self) -> DomainConstants<T> {
        let d = self.dim();
        let vol = self.volume();
        let gamma = match d {
            1 => T::PI().sqrt() * T::of(0.5),
            2 => T::one(),
            _ => unreachable!("only one- and two-dimensional shapes exist"),
        };
        let inv_d = T::one() / T::of_usize(d);
        let c_omega = (vol * gamma).powf(inv_d) / T::PI().sqrt();
        let c_omega_big = (T::of(2.0) * T::PI() / self.cone_angle).powf(inv_d) * c_omega;
        DomainConstants {
            c_omega,
            c_omega_big,
        }
    }

    /// Short shape name for reports and configs.
    pub fn shape_name(&self) -> &'static str {
        match self.shape {
            Shape::Interval { .. } => "interval",
            Shape::Box2 { .. } => "box",
            Shape::Disk { .. } => "disk",
            Shape::Annulus { .. } => "annulus",
        }
    }
}

/// Smooth closed manifolds of codimension one in the plane. Only the unit
/// circle ships; it is embedded in ℝ² with intrinsic dimension 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Manifold {
    Circle,
}

impl Manifold {
    pub fn ambient_dim(&self) -> usize {
        2
    }

    pub fn intrinsic_dim(&self) -> usize {
        1
    }

    /// Reach of the manifold: largest band half-width with no focal point.
    /// For the unit circle this is 1 (the focal point is the origin).
    pub fn focal_radius<T: Real>(&self) -> T {
        T::one()
    }

    /// Intrinsic (geodesic) length: 2π for the unit circle.
    pub fn measure<T: Real>(&self) -> T {
        T::of(2.0) * T::PI()
    }
}

/// Closest-point projection onto the manifold: `x ↦ x/‖x‖` for the unit
/// circle. The projection is well defined everywhere except the circle's
/// center (the focal point); band callers guarantee `|‖x‖ − 1| < 1`
/// themselves via [`tubular_domain`]'s half-width check.
pub fn closest_point<T: Real>(x: &[T], m: Manifold) -> Result<[T; 2]> {
    let Manifold::Circle = m;
    let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
    if r <= T::of(1e-300) {
        return Err(Error::FocalPoint(
            "closest-point projection undefined at the circle's center".into(),
        ));
    }
    Ok([x[0] / r, x[1] / r])
}

/// Tubular neighborhood of the manifold with half-width δ: the annulus
/// `(1-δ, 1+δ)` for the unit circle. The narrow band inherits the circle's
/// cone angle; the cone radius scales with the half-width.
pub fn tubular_domain<T: Real>(m: Manifold, delta: T) -> Result<Domain<T>> {
    let Manifold::Circle = m;
    if !(delta > T::zero() && delta < m.focal_radius()) {
        return Err(Error::FocalPoint(
            "focal point inside band: tubular half-width must satisfy 0 < δ < 1".into(),
        ));
    }
    Domain::annulus(delta)
}

/// A host a point set can live on: either a bounded domain or the circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Host<T> {
    Domain(Domain<T>),
    Manifold(Manifold),
}

impl<T: Real> Host<T> {
    pub fn ambient_dim(&self) -> usize {
        match self {
            Host::Domain(d) => d.dim(),
            Host::Manifold(m) => m.ambient_dim(),
        }
    }

    /// Metric intrinsic to the host: Euclidean on domains, geodesic arc
    /// length on the circle.
    pub fn distance(&self, p: &[T], q: &[T]) -> T {
        match self {
            Host::Domain(_) => euclidean(p, q),
            Host::Manifold(Manifold::Circle) => {
                let ta = p[1].atan2(p[0]);
                let tb = q[1].atan2(q[0]);
                let two_pi = T::of(2.0) * T::PI();
                let mut d = (ta - tb).abs();
                if d > T::PI() {
                    d = two_pi - d;
                }
                d
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Host::Domain(d) => d.shape_name(),
            Host::Manifold(Manifold::Circle) => "circle",
        }
    }
}

#[inline]
fn euclidean<T: Real>(p: &[T], q: &[T]) -> T {
    debug_assert_eq!(p.len(), q.len());
    let mut s = T::zero();
    for (&a, &b) in p.iter().zip(q) {
        let d = a - b;
        s += d * d;
    }
    s.sqrt()
}

// ---------------------------------------------------------------------------
// Point sets
// ---------------------------------------------------------------------------

/// A finite node set on a host, with cached fill distance `h`, separation
/// radius `q`, and mesh ratio `ρ = h/q`.
#[derive(Debug, Clone)]
pub struct PointSet<T> {
    host: Host<T>,
    dim: usize,
    pts: Vec<T>,
    h: T,
    q: T,
}

impl<T: Real> PointSet<T> {
    /// Build a point set, measuring `h` against `resolution` dense candidate
    /// points and `q` exactly. Fails on empty input, coalescing nodes, or
    /// (for the circle) points off the manifold by more than 1e-12.
    pub fn new(host: Host<T>, pts: Vec<T>, resolution: usize) -> Result<Self> {
        let dim = host.ambient_dim();
        if pts.is_empty() {
            return Err(Error::EmptyNodeSet);
        }
        assert_eq!(pts.len() % dim, 0, "flat point buffer length must be n*dim");
        let n = pts.len() / dim;
        if let Host::Manifold(Manifold::Circle) = host {
            for i in 0..n {
                let p = &pts[i * dim..(i + 1) * dim];
                let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
                if (r - T::one()).abs() > T::of(1e-12) {
                    return Err(Error::InvalidGeometry(format!(
                        "node {} lies off the unit circle by {:e}",
                        i,
                        (r - T::one()).abs().as_f64()
                    )));
                }
            }
        }
        let q = if n >= 2 {
            separation_of(&host, &pts, dim)?
        } else {
            T::infinity()
        };
        let h = fill_distance_of(&host, &pts, dim, resolution)?;
        Ok(PointSet {
            host,
            dim,
            pts,
            h,
            q,
        })
    }

    pub fn host(&self) -> &Host<T> {
        &self.host
    }

    pub fn len(&self) -> usize {
        self.pts.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.pts.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[T] {
        &self.pts[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points_flat(&self) -> &[T] {
        &self.pts
    }

    /// Fill distance (measured from below on a dense candidate grid).
    pub fn h(&self) -> T {
        self.h
    }

    /// Separation radius (exact).
    pub fn q(&self) -> T {
        self.q
    }

    /// Mesh ratio `h/q` (0 for a single node, whose `q` is infinite).
    pub fn rho(&self) -> T {
        if self.q.is_infinite() {
            T::zero()
        } else {
            self.h / self.q
        }
    }

    /// Node angles, defined for circle hosts.
    pub fn angles(&self) -> Vec<T> {
        (0..self.len())
            .map(|i| {
                let p = self.point(i);
                p[1].atan2(p[0])
            })
            .collect()
    }

    /// CSV serialization: header `x0[,x1]`, one row per point.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(if self.dim == 1 { "x0\n" } else { "x0,x1\n" });
        for i in 0..self.len() {
            let p = self.point(i);
            if self.dim == 1 {
                out.push_str(&format!("{:.17e}\n", p[0].as_f64()));
            } else {
                out.push_str(&format!(
                    "{:.17e},{:.17e}\n",
                    p[0].as_f64(),
                    p[1].as_f64()
                ));
            }
        }
        out
    }
}

/// Fill distance of a raw flat point buffer against a dense candidate grid.
pub fn fill_distance_of<T: Real>(
    host: &Host<T>,
    pts: &[T],
    dim: usize,
    resolution: usize,
) -> Result<T> {
    if pts.is_empty() {
        return Err(Error::EmptyNodeSet);
    }
    if resolution < 1_000 {
        return Err(Error::InvalidArgument(format!(
            "fill-distance candidate resolution must be at least 1000, got {}",
            resolution
        )));
    }
    let candidates = candidate_grid(host, resolution);
    let n = pts.len() / dim;
    let mut h = T::zero();
    let mut cand = vec![T::zero(); dim];
    for c in candidates.chunks(dim) {
        cand.copy_from_slice(c);
        let mut best = T::infinity();
        for i in 0..n {
            let d = host.distance(&cand, &pts[i * dim..(i + 1) * dim]);
            if d < best {
                best = d;
            }
        }
        if best > h {
            h = best;
        }
    }
    Ok(h)
}

/// Exact separation radius: half the minimal pairwise host distance.
pub fn separation_of<T: Real>(host: &Host<T>, pts: &[T], dim: usize) -> Result<T> {
    let n = pts.len() / dim;
    if n < 2 {
        return Err(Error::TooFewNodes);
    }
    let mut min_d = T::infinity();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = host.distance(&pts[i * dim..(i + 1) * dim], &pts[j * dim..(j + 1) * dim]);
            if d < min_d {
                min_d = d;
            }
        }
    }
    if !(min_d > T::zero()) {
        return Err(Error::CoalescingNodes {
            min_dist: min_d.as_f64(),
        });
    }
    Ok(min_d * T::of(0.5))
}

/// Re-measure the fill distance of a point set at a chosen candidate
/// resolution (the cached value uses the default resolution).
pub fn fill_distance<T: Real>(x: &PointSet<T>, resolution: usize) -> Result<T> {
    fill_distance_of(x.host(), x.points_flat(), x.dim(), resolution)
}

/// Exact separation radius of a point set (half the minimal pairwise host
/// distance); needs at least two nodes.
pub fn separation_radius<T: Real>(x: &PointSet<T>) -> Result<T> {
    separation_of(x.host(), x.points_flat(), x.dim())
}

/// Mesh ratio `h/q` from the two measurements above.
pub fn mesh_ratio<T: Real>(x: &PointSet<T>) -> Result<T> {
    if x.len() < 2 {
        return Err(Error::TooFewNodes);
    }
    Ok(x.h() / x.q())
}

/// Dense candidate/evaluation grids per host, with at least `count` points.
pub fn candidate_grid<T: Real>(host: &Host<T>, count: usize) -> Vec<T> {
    match host {
        Host::Domain(dom) => match dom.shape {
            Shape::Interval { a, b } => {
                let n = count.max(2);
                let step = (b - a) / T::of_usize(n - 1);
                (0..n).map(|i| a + step * T::of_usize(i)).collect()
            }
            Shape::Box2 { x0, x1, y0, y1 } => {
                let side = (count as f64).sqrt().ceil() as usize;
                let side = side.max(2);
                let sx = (x1 - x0) / T::of_usize(side - 1);
                let sy = (y1 - y0) / T::of_usize(side - 1);
                let mut out = Vec::with_capacity(side * side * 2);
                for i in 0..side {
                    for j in 0..side {
                        out.push(x0 + sx * T::of_usize(i));
                        out.push(y0 + sy * T::of_usize(j));
                    }
                }
                out
            }
            Shape::Disk { cx, cy, radius } => {
                // Tensor grid over the bounding square, filtered to the disk;
                // oversample so roughly `count` survive the filter.
                let side = ((count as f64 * 4.0 / std::f64::consts::PI).sqrt()).ceil() as usize;
                let side = side.max(2);
                let s = radius * T::of(2.0) / T::of_usize(side - 1);
                let mut out = Vec::new();
                for i in 0..side {
                    for j in 0..side {
                        let x = cx - radius + s * T::of_usize(i);
                        let y = cy - radius + s * T::of_usize(j);
                        let dx = x - cx;
                        let dy = y - cy;
                        if (dx * dx + dy * dy).sqrt() <= radius {
                            out.push(x);
                            out.push(y);
                        }
                    }
                }
                out
            }
            Shape::Annulus { delta } => {
                // Polar grid with aspect matched to the band: radial extent 2δ
                // against circumference 2π.
                let d = delta.as_f64();
                let n_r = ((count as f64 * d / std::f64::consts::PI).sqrt().ceil() as usize).max(2);
                let n_t = (count / n_r).max(8);
                let mut out = Vec::with_capacity(n_r * n_t * 2);
                let r0 = T::one() - delta;
                let dr = delta * T::of(2.0) / T::of_usize(n_r - 1);
                let dt = T::of(2.0) * T::PI() / T::of_usize(n_t);
                for i in 0..n_r {
                    let r = r0 + dr * T::of_usize(i);
                    for j in 0..n_t {
                        let t = dt * T::of_usize(j);
                        out.push(r * t.cos());
                        out.push(r * t.sin());
                    }
                }
                out
            }
        },
        Host::Manifold(Manifold::Circle) => {
            let n = count.max(8);
            let dt = T::of(2.0) * T::PI() / T::of_usize(n);
            let mut out = Vec::with_capacity(n * 2);
            for i in 0..n {
                let t = dt * T::of_usize(i);
                out.push(t.cos());
                out.push(t.sin());
            }
            out
        }
    }
}

// ---------------------------------------------------------------------------
// Node generators
// ---------------------------------------------------------------------------

/// Structured quasi-uniform refinement at dyadic level `k`:
/// interval `2^k + 1` equispaced nodes, box the tensor grid, circle `2^k`
/// equispaced angles, disk concentric rings with arc-proportional counts.
/// All shipped shapes come out with mesh ratio ρ ≤ 2.
pub fn uniform_refinement<T: Real>(host: Host<T>, level: u32) -> Result<PointSet<T>> {
    uniform_refinement_with_resolution(host, level, DEFAULT_FILL_RESOLUTION)
}

/// Same as [`uniform_refinement`] with an explicit fill-distance resolution.
pub fn uniform_refinement_with_resolution<T: Real>(
    host: Host<T>,
    level: u32,
    resolution: usize,
) -> Result<PointSet<T>> {
    let pts: Vec<T> = match &host {
        Host::Domain(dom) => match dom.shape {
            Shape::Interval { a, b } => {
                let n = checked_node_count(1usize << level, 1, 1)? + 1;
                let step = (b - a) / T::of_usize(n - 1);
                (0..n).map(|i| a + step * T::of_usize(i)).collect()
            }
            Shape::Box2 { x0, x1, y0, y1 } => {
                let side = checked_node_count(1usize << level, 1, 1)? + 1;
                checked_node_count(side, side, 1)?;
                let sx = (x1 - x0) / T::of_usize(side - 1);
                let sy = (y1 - y0) / T::of_usize(side - 1);
                let mut out = Vec::with_capacity(side * side * 2);
                for i in 0..side {
                    for j in 0..side {
                        out.push(x0 + sx * T::of_usize(i));
                        out.push(y0 + sy * T::of_usize(j));
                    }
                }
                out
            }
            Shape::Disk { cx, cy, radius } => {
                // Center node plus 2^k concentric rings; ring j carries
                // round(2πj) nodes so the arc spacing matches the radial
                // spacing, with a golden-angle twist per ring so rings do not
                // align radially.
                let rings = 1usize << level;
                let golden = T::of(std::f64::consts::PI * (3.0 - 5f64.sqrt()));
                let mut out = vec![cx, cy];
                for j in 1..=rings {
                    let r = radius * T::of_usize(j) / T::of_usize(rings);
                    let cnt =
                        (2.0 * std::f64::consts::PI * j as f64).round() as usize;
                    let offset = golden * T::of_usize(j);
                    let dt = T::of(2.0) * T::PI() / T::of_usize(cnt);
                    for i in 0..cnt {
                        let t = offset + dt * T::of_usize(i);
                        out.push(cx + r * t.cos());
                        out.push(cy + r * t.sin());
                    }
                }
                checked_node_count(out.len() / 2, 1, 1)?;
                out
            }
            Shape::Annulus { delta } => {
                // Polar lattice with target spacing 2π/2^k on both axes:
                // enough rings to resolve the band width, ring counts matched
                // to arc length, alternating half-step angular offsets.
                let s = 2.0 * std::f64::consts::PI / (1u64 << level) as f64;
                let d = delta.as_f64();
                let n_r = ((2.0 * d / s).ceil() as usize).max(1);
                checked_node_count(n_r, 1usize << level, 2)?;
                let mut out = Vec::new();
                for i in 0..n_r {
                    let frac = (2 * i + 1) as f64 / (2 * n_r) as f64;
                    let r = T::one() - delta + delta * T::of(2.0 * frac);
                    let cnt = ((2.0 * std::f64::consts::PI * r.as_f64() / s).round()
                        as usize)
                        .max(8);
                    let dt = T::of(2.0) * T::PI() / T::of_usize(cnt);
                    let off = if i % 2 == 0 { T::zero() } else { dt * T::of(0.5) };
                    for j in 0..cnt {
                        let t = off + dt * T::of_usize(j);
                        out.push(r * t.cos());
                        out.push(r * t.sin());
                    }
                }
                checked_node_count(out.len() / 2, 1, 1)?;
                out
            }
        },
        Host::Manifold(Manifold::Circle) => {
            let n = checked_node_count(1usize << level, 1, 1)?;
            let dt = T::of(2.0) * T::PI() / T::of_usize(n);
            let mut out = Vec::with_capacity(n * 2);
            for i in 0..n {
                let t = dt * T::of_usize(i);
                out.push(t.cos());
                out.push(t.sin());
            }
            out
        }
    };
    PointSet::new(host, pts, resolution)
}

fn checked_node_count(a: usize, b: usize, c: usize) -> Result<usize> {
    let n = a.saturating_mul(b).saturating_mul(c);
    if n > MAX_NODES {
        Err(Error::RefinementTooLarge { nodes: n })
    } else {
        Ok(n)
    }
}

/// Greedy farthest-point (max-min) selection of `n` nodes from a seeded
/// random candidate pool. Deterministic given `(host, n, candidates, seed)`.
/// The first node is the candidate farthest from the pool's first draw, which
/// pushes the selection to the extremes of the host.
pub fn farthest_point_sample<T: Real>(
    host: Host<T>,
    n: usize,
    candidates: usize,
    seed: u64,
) -> Result<PointSet<T>> {
    if n == 0 {
        return Err(Error::InvalidArgument("cannot select zero nodes".into()));
    }
    if candidates < 10 * n {
        return Err(Error::InvalidArgument(format!(
            "candidate pool must hold at least 10·n = {} points, got {}",
            10 * n,
            candidates
        )));
    }
    checked_node_count(n, 1, 1)?;
    let dim = host.ambient_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool = Vec::with_capacity(candidates * dim);
    for _ in 0..candidates {
        sample_point(&host, &mut rng, &mut pool);
    }

    // Distance from each pool point to the selected set, updated greedily.
    let mut min_dist = vec![T::infinity(); candidates];
    let first = {
        // Farthest from pool[0]: forces extremes deterministically.
        let p0 = pool[0..dim].to_vec();
        let mut best = (T::neg_infinity(), 0usize);
        for i in 0..candidates {
            let d = host.distance(&p0, &pool[i * dim..(i + 1) * dim]);
            if d > best.0 {
                best = (d, i);
            }
        }
        best.1
    };
    let mut selected = vec![first];
    let mut pts: Vec<T> = pool[first * dim..(first + 1) * dim].to_vec();
    while selected.len() < n {
        let last = *selected.last().unwrap();
        let lp = pool[last * dim..(last + 1) * dim].to_vec();
        let mut best = (T::neg_infinity(), 0usize);
        for i in 0..candidates {
            let d = host.distance(&lp, &pool[i * dim..(i + 1) * dim]);
            if d < min_dist[i] {
                min_dist[i] = d;
            }
            if min_dist[i] > best.0 {
                best = (min_dist[i], i);
            }
        }
        selected.push(best.1);
        pts.extend_from_slice(&pool[best.1 * dim..(best.1 + 1) * dim]);
    }
    PointSet::new(host, pts, DEFAULT_FILL_RESOLUTION)
}

fn sample_point<T: Real>(host: &Host<T>, rng: &mut ChaCha8Rng, out: &mut Vec<T>) {
    match host {
        Host::Domain(dom) => match dom.shape {
            Shape::Interval { a, b } => {
                out.push(a + (b - a) * T::of(rng.gen::<f64>()));
            }
            Shape::Box2 { x0, x1, y0, y1 } => {
                out.push(x0 + (x1 - x0) * T::of(rng.gen::<f64>()));
                out.push(y0 + (y1 - y0) * T::of(rng.gen::<f64>()));
            }
            Shape::Disk { cx, cy, radius } => {
                let r = radius * T::of(rng.gen::<f64>().sqrt());
                let t = T::of(2.0) * T::PI() * T::of(rng.gen::<f64>());
                out.push(cx + r * t.cos());
                out.push(cy + r * t.sin());
            }
            Shape::Annulus { delta } => {
                let r0 = (T::one() - delta) * (T::one() - delta);
                let r1 = (T::one() + delta) * (T::one() + delta);
                let r = (r0 + (r1 - r0) * T::of(rng.gen::<f64>())).sqrt();
                let t = T::of(2.0) * T::PI() * T::of(rng.gen::<f64>());
                out.push(r * t.cos());
                out.push(r * t.sin());
            }
        },
        Host::Manifold(Manifold::Circle) => {
            let t = T::of(2.0) * T::PI() * T::of(rng.gen::<f64>());
            out.push(t.cos());
            out.push(t.sin());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_interval() -> Host<f64> {
        Host::Domain(Domain::interval(0.0, 1.0).unwrap())
    }

    #[test]
    fn fill_distance_midpoint_examples() {
        let host = unit_interval();
        let x = PointSet::new(host, vec![0.0, 0.5, 1.0], 10_000).unwrap();
        assert_relative_eq!(x.h(), 0.25, epsilon = 1e-3);
        assert_relative_eq!(x.q(), 0.25, epsilon = 0.0);

        let single = PointSet::new(host, vec![0.0], 10_000).unwrap();
        assert_relative_eq!(single.h(), 1.0, epsilon = 1e-3);
        assert!(single.q().is_infinite());
    }

    #[test]
    fn fill_distance_uniform_33_grid() {
        let host = unit_interval();
        let x = uniform_refinement_with_resolution(host, 5, 100_000).unwrap();
        assert_eq!(x.len(), 33);
        // True value 2^-6; dense-grid measurement approaches from below.
        assert!(x.h() <= 0.015625 + 1e-12);
        assert_relative_eq!(x.h(), 0.015625, epsilon = 1e-5);
    }

    #[test]
    fn separation_on_circle_uses_geodesic_distance() {
        let circle = Host::Manifold(Manifold::Circle);
        let x = PointSet::new(circle, vec![1.0, 0.0, -1.0, 0.0], 10_000).unwrap();
        // Geodesic distance between antipodes is π, so q = π/2.
        assert_relative_eq!(x.q(), std::f64::consts::FRAC_PI_2, epsilon = 1e-14);
    }

    #[test]
    fn mesh_ratio_of_uniform_grids_is_one() {
        for level in 2..6 {
            let x =
                uniform_refinement_with_resolution(unit_interval(), level, 50_000).unwrap();
            let rho = mesh_ratio(&x).unwrap();
            assert!(rho <= 1.0 + 1e-3, "level {}: rho = {}", level, rho);
            assert!(rho >= 1.0 - 1e-3, "level {}: rho = {}", level, rho);
        }
    }

    #[test]
    fn interval_refinement_halves_h_exactly() {
        let x3 = uniform_refinement_with_resolution(unit_interval(), 3, 100_000).unwrap();
        let x4 = uniform_refinement_with_resolution(unit_interval(), 4, 100_000).unwrap();
        assert_relative_eq!(x3.q() / x4.q(), 2.0, epsilon = 1e-12);
        assert_relative_eq!(x3.h() / x4.h(), 2.0, epsilon = 1e-3);
    }

    #[test]
    fn circle_level_two_is_the_four_cardinal_angles() {
        let x: PointSet<f64> =
            uniform_refinement_with_resolution(Host::Manifold(Manifold::Circle), 2, 10_000)
                .unwrap();
        assert_eq!(x.len(), 4);
        let a = x.angles();
        assert_relative_eq!(a[0], 0.0, epsilon = 1e-15);
        assert_relative_eq!(a[1], std::f64::consts::FRAC_PI_2, epsilon = 1e-15);
        // Mesh ratio 1 on the circle.
        assert_relative_eq!(mesh_ratio(&x).unwrap(), 1.0, epsilon = 1e-3);
    }

    #[test]
    fn box_and_disk_refinements_are_quasi_uniform() {
        let b = Host::Domain(Domain::box2(0.0, 1.0, 0.0, 1.0).unwrap());
        let x = uniform_refinement_with_resolution(b, 3, 50_000).unwrap();
        assert_eq!(x.len(), 81);
        let rho = mesh_ratio(&x).unwrap();
        assert!(rho <= 2.0, "box rho = {}", rho);

        let d = Host::Domain(Domain::disk(0.0, 0.0, 1.0).unwrap());
        for level in 2..=4 {
            let x = uniform_refinement_with_resolution(d, level, 50_000).unwrap();
            let rho = mesh_ratio(&x).unwrap();
            assert!(rho <= 2.0, "disk level {}: rho = {}", level, rho);
        }
    }

    #[test]
    fn refinement_rejects_oversize_levels() {
        let e = uniform_refinement_with_resolution(unit_interval(), 30, 10_000);
        assert!(matches!(e, Err(Error::RefinementTooLarge { .. })));
    }

    #[test]
    fn farthest_point_sampling_hits_interval_extremes() {
        let x = farthest_point_sample(unit_interval(), 2, 4_000, 42).unwrap();
        let mut endpoints: Vec<f64> = x.points_flat().to_vec();
        endpoints.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(endpoints[0] < 0.01, "left end ≈ 0, got {}", endpoints[0]);
        assert!(endpoints[1] > 0.99, "right end ≈ 1, got {}", endpoints[1]);
    }

    #[test]
    fn farthest_point_sampling_is_deterministic_and_quasi_uniform() {
        let b = Host::Domain(Domain::box2(0.0, 1.0, 0.0, 1.0).unwrap());
        let x1 = farthest_point_sample(b, 16, 2_000, 7).unwrap();
        let x2 = farthest_point_sample(b, 16, 2_000, 7).unwrap();
        assert_eq!(x1.points_flat(), x2.points_flat());
        let rho = mesh_ratio(&x1).unwrap();
        assert!(rho <= 2.2, "fps rho = {}", rho);
    }

    #[test]
    fn farthest_point_sampling_validates_pool_size() {
        assert!(farthest_point_sample(unit_interval(), 10, 50, 1).is_err());
    }

    #[test]
    fn closest_point_projects_and_is_idempotent() {
        let p = closest_point(&[3.0_f64, 4.0], Manifold::Circle).unwrap();
        assert_relative_eq!(p[0], 0.6, epsilon = 1e-15);
        assert_relative_eq!(p[1], 0.8, epsilon = 1e-15);

        let q = closest_point(&[0.5_f64, 0.0], Manifold::Circle).unwrap();
        assert_relative_eq!(q[0], 1.0, epsilon = 1e-15);

        let again = closest_point(&[p[0], p[1]], Manifold::Circle).unwrap();
        assert!((again[0] - p[0]).abs() < 1e-14 && (again[1] - p[1]).abs() < 1e-14);

        assert!(closest_point(&[0.0_f64, 0.0], Manifold::Circle).is_err());
    }

    #[test]
    fn tubular_domain_is_the_annulus() {
        let d = tubular_domain::<f64>(Manifold::Circle, 0.1).unwrap();
        match d.shape {
            Shape::Annulus { delta } => assert_eq!(delta, 0.1),
            _ => panic!("expected annulus"),
        }
        assert_relative_eq!(
            d.volume(),
            4.0 * std::f64::consts::PI * 0.1,
            epsilon = 1e-15
        );
        assert!(tubular_domain::<f64>(Manifold::Circle, 1.0).is_err());
    }

    #[test]
    fn domain_constants_closed_forms() {
        // Unit disk: c = π^{-1/2} (π·Γ(2))^{1/2} = 1, exactly.
        let disk = Domain::disk(0.0_f64, 0.0, 1.0).unwrap();
        let c = disk.constants();
        assert!((c.c_omega - 1.0).abs() <= 1e-12);

        // Unit interval: c = π^{-1/2} (1·Γ(3/2))^{1/1} = Γ(3/2)/√π = 1/2.
        let iv = Domain::interval(0.0_f64, 1.0).unwrap();
        let c = iv.constants();
        assert_relative_eq!(c.c_omega, 0.5, epsilon = 1e-15);

        // Ratio identity for any θ.
        for &theta in &[0.3_f64, 0.7, 1.2] {
            let d = Domain::disk(0.0_f64, 0.0, 2.0)
                .unwrap()
                .with_cone(theta, 1.0)
                .unwrap();
            let c = d.constants();
            let expect = (2.0 * std::f64::consts::PI / theta).powf(0.5);
            assert_relative_eq!(c.c_omega_big / c.c_omega, expect, epsilon = 1e-13);
            assert!(c.c_omega <= c.c_omega_big);
        }
    }

    #[test]
    fn geometry_invariants_q_le_h() {
        let b = Host::Domain(Domain::box2(0.0, 1.0, 0.0, 1.0).unwrap());
        let x = farthest_point_sample(b, 24, 2_000, 3).unwrap();
        assert!(x.q() <= x.h() * (1.0 + 1e-3));
    }

    #[test]
    fn pointset_rejects_duplicates_and_off_manifold_points() {
        let host = unit_interval();
        assert!(matches!(
            PointSet::new(host, vec![0.3, 0.3], 10_000),
            Err(Error::CoalescingNodes { .. })
        ));
        let circle = Host::Manifold(Manifold::Circle);
        assert!(PointSet::new(circle, vec![1.1, 0.0], 10_000).is_err());
    }

    #[test]
    fn csv_serialization_has_header_and_rows() {
        let host = unit_interval();
        let x = PointSet::new(host, vec![0.0, 1.0], 10_000).unwrap();
        let csv = x.to_csv();
        assert!(csv.starts_with("x0\n"));
        assert_eq!(csv.lines().count(), 3);

        let b = Host::Domain(Domain::box2(0.0, 1.0, 0.0, 1.0).unwrap());
        let y = PointSet::new(b, vec![0.0, 0.0, 1.0, 1.0], 10_000).unwrap();
        assert!(y.to_csv().starts_with("x0,x1\n"));
    }

    #[test]
    fn invalid_geometry_is_rejected() {
        assert!(Domain::interval(1.0_f64, 0.0).is_err());
        assert!(Domain::annulus(1.5_f64).is_err());
        assert!(Domain::annulus(0.0_f64).is_err());
        assert!(Domain::disk(0.0_f64, 0.0, -1.0).is_err());
        assert!(Domain::interval(0.0_f64, 1.0)
            .unwrap()
            .with_cone(2.0, 1.0)
            .is_err());
    }
}
