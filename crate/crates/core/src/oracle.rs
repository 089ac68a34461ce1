//! Independent brute-force verifiers for tests.
//!
//! Everything here is a literal transcription of a definition — the Rayleigh
//! supremum, a full dense eigensolve, pointwise sup-norm scans, pairwise
//! distance definitions — implemented without touching the main assembly or
//! factorization paths. The only shared surfaces are plain data containers
//! and the kernel/quadrature evaluation primitives. Single-threaded by
//! design; inputs are capped at test scale.

use crate::error::{Error, Result};
use crate::geometry::{Host, Manifold, PointSet, Shape};
use crate::kernels::TrialSpace;
use crate::linalg::Mat;
use crate::quadrature::Rule;
use crate::scalar::Real;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn draw_normal<T: Real>(rng: &mut ChaCha8Rng) -> T {
    let z: f64 = StandardNormal.sample(rng);
    T::of(z)
}

/// Plain quadratic form `cᵀ G c` by nested loops.
fn quad_form<T: Real>(g: &Mat<T>, c: &[T]) -> T {
    let n = c.len();
    let mut acc = T::zero();
    for i in 0..n {
        let mut row = T::zero();
        for j in 0..n {
            row += g.at(i, j) * c[j];
        }
        acc += c[i] * row;
    }
    acc
}

/// Maximum Rayleigh quotient `cᵀG_num c / cᵀG_den c` over seeded
/// standard-normal coefficient draws. By the definition of the supremum this
/// never exceeds the largest generalized eigenvalue of the pencil, so it is
/// a lower-bound validator for the main eigenpath. Requires a positive
/// definite denominator and at least 10³ trials (asserted).
pub fn mc_rayleigh_bound<T: Real>(
    g_num: &Mat<T>,
    g_den: &Mat<T>,
    trials: usize,
    seed: u64,
) -> T {
    let n = g_den.rows();
    assert_eq!(n, g_den.cols());
    assert_eq!(n, g_num.rows());
    assert_eq!(n, g_num.cols());
    assert!(trials >= 1_000, "the Monte Carlo bound needs ≥ 10³ trials");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = T::neg_infinity();
    let mut c = vec![T::zero(); n];
    for _ in 0..trials {
        for x in c.iter_mut() {
            *x = draw_normal(&mut rng);
        }
        let den = quad_form(g_den, &c);
        assert!(
            den > T::zero(),
            "denominator quadratic form not positive: the pencil denominator must be PD"
        );
        let ratio = quad_form(g_num, &c) / den;
        if ratio > best {
            best = ratio;
        }
    }
    best
}

/// Textbook Cholesky without jitter: the oracle requires an honestly PD
/// denominator and reports failure rather than regularizing.
fn plain_cholesky<T: Real>(g: &Mat<T>) -> Result<Vec<Vec<T>>> {
    let n = g.rows();
    let mut l = vec![vec![T::zero(); n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = g.at(i, j);
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if !(s > T::zero()) {
                    return Err(Error::InvalidArgument(format!(
                        "reference eigensolve needs a positive definite denominator \
                         (pivot {} at row {})",
                        s, i
                    )));
                }
                l[i][j] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Ok(l)
}

/// Cyclic Jacobi eigensolve of a symmetric matrix held as nested rows;
/// returns all eigenvalues (unordered). Convergence: off-diagonal Frobenius
/// mass below 1e−14 of the total, at most 60 sweeps.
fn jacobi_eigenvalues<T: Real>(a: &mut [Vec<T>]) -> Vec<T> {
    let n = a.len();
    if n == 0 {
        return vec![];
    }
    let frob = {
        let mut s = T::zero();
        for row in a.iter() {
            for &x in row {
                s += x * x;
            }
        }
        s.sqrt()
    };
    let tol = T::of(1e-14) * frob.max(T::of(1e-300));
    for _sweep in 0..60 {
        let mut off = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[i][j] * a[i][j];
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p][q];
                if apq.abs() <= tol * T::of(1e-2) {
                    continue;
                }
                // Classic symmetric 2×2 annihilation rotation.
                let theta = (a[q][q] - a[p][p]) / (T::of(2.0) * apq);
                let t = {
                    let s = if theta >= T::zero() { T::one() } else { -T::one() };
                    s / (theta.abs() + (theta * theta + T::one()).sqrt())
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

/// Largest generalized eigenvalue of the pencil `(G_num, G_den)` by a full
/// dense two-step reference: plain Cholesky reduction followed by a cyclic
/// Jacobi eigensolve, implemented independently of the Krylov path.
/// Capped at n ≤ 32 (oracle scope).
pub fn dense_eig_reference<T: Real>(g_num: &Mat<T>, g_den: &Mat<T>) -> Result<T> {
    let n = g_den.rows();
    if n > 32 {
        return Err(Error::InvalidArgument(format!(
            "the dense reference eigensolve is capped at 32 rows (got {})",
            n
        )));
    }
    if n == 0 {
        return Ok(T::zero());
    }
    let l = plain_cholesky(g_den)?;
    // Z = L⁻¹ G_num (column-wise forward solves) …
    let mut z = vec![vec![T::zero(); n]; n];
    for col in 0..n {
        for i in 0..n {
            let mut s = g_num.at(i, col);
            for k in 0..i {
                s -= l[i][k] * z[k][col];
            }
            z[i][col] = s / l[i][i];
        }
    }
    // … then B = Z L⁻ᵀ, i.e. forward-solve each row of Z against L.
    let mut b = vec![vec![T::zero(); n]; n];
    for row in 0..n {
        for j in 0..n {
            let mut s = z[row][j];
            for k in 0..j {
                s -= l[j][k] * b[row][k];
            }
            b[row][j] = s / l[j][j];
        }
    }
    let eigs = jacobi_eigenvalues(&mut b);
    Ok(eigs
        .into_iter()
        .fold(T::neg_infinity(), |acc, x| if x > acc { x } else { acc }))
}

/// Direct evaluation of a trial function at one point: `Σ_j c_j φ(y, x_j)`.
fn eval_direct<T: Real>(space: &TrialSpace<T>, coeffs: &[T], y: &[T]) -> T {
    let mut s = T::zero();
    for (j, &c) in coeffs.iter().enumerate() {
        s += c * space.kernel().eval(y, space.nodes().point(j));
    }
    s
}

/// Brute-force lower bound on the sup/L₂ norm ratio over the trial space:
/// the max over seeded coefficient draws and grid points of
/// `|u(y)| / ‖u‖_{L₂}`, with `u` evaluated by direct summation and its L₂
/// norm by naive weighted quadrature. Never exceeds the dual closed form
/// (up to grid slack); deterministic per seed.
pub fn brute_sup_norm_ratio<T: Real>(
    space: &TrialSpace<T>,
    rule: &Rule<T>,
    draws: usize,
    grid: &[T],
    seed: u64,
) -> Result<T> {
    let n = space.dim();
    let dim = space.kernel().dim();
    if grid.is_empty() || grid.len() % dim != 0 {
        return Err(Error::InvalidArgument(format!(
            "the evaluation grid must be a nonempty flat buffer of {}-dimensional points",
            dim
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = T::neg_infinity();
    let mut coeffs = vec![T::zero(); n];
    for _ in 0..draws {
        for c in coeffs.iter_mut() {
            *c = draw_normal(&mut rng);
        }
        let mut l2_sq = T::zero();
        for i in 0..rule.len() {
            let v = eval_direct(space, &coeffs, rule.node(i));
            l2_sq += rule.weights()[i] * v * v;
        }
        if !(l2_sq > T::zero()) {
            continue;
        }
        let l2 = l2_sq.sqrt();
        let mut sup = T::zero();
        for y in grid.chunks_exact(dim) {
            let v = eval_direct(space, &coeffs, y).abs();
            if v > sup {
                sup = v;
            }
        }
        let ratio = sup / l2;
        if ratio > best {
            best = ratio;
        }
    }
    Ok(best)
}

fn host_distance<T: Real>(host: &Host<T>, p: &[T], q: &[T]) -> T {
    match host {
        Host::Domain(_) => {
            let mut s = T::zero();
            for (&a, &b) in p.iter().zip(q) {
                let d = a - b;
                s += d * d;
            }
            s.sqrt()
        }
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

/// Dense reference grid for the fill-distance scan, generated here from the
/// host's shape description alone (about `per_dim` points per axis, with
/// membership filtering on curved shapes).
fn reference_grid<T: Real>(host: &Host<T>, per_dim: usize) -> Vec<T> {
    let g = per_dim.max(2);
    let lin = |a: T, b: T| -> Vec<T> {
        (0..g)
            .map(|i| a + (b - a) * T::of_usize(i) / T::of_usize(g - 1))
            .collect()
    };
    match host {
        Host::Domain(dom) => match dom.shape {
            Shape::Interval { a, b } => lin(a, b),
            Shape::Box2 { x0, x1, y0, y1 } => {
                let xs = lin(x0, x1);
                let ys = lin(y0, y1);
                let mut pts = Vec::with_capacity(g * g * 2);
                for &x in &xs {
                    for &y in &ys {
                        pts.push(x);
                        pts.push(y);
                    }
                }
                pts
            }
            Shape::Disk { cx, cy, radius } => {
                let xs = lin(cx - radius, cx + radius);
                let ys = lin(cy - radius, cy + radius);
                let mut pts = Vec::new();
                for &x in &xs {
                    for &y in &ys {
                        let dx = x - cx;
                        let dy = y - cy;
                        if (dx * dx + dy * dy).sqrt() <= radius {
                            pts.push(x);
                            pts.push(y);
                        }
                    }
                }
                pts
            }
            Shape::Annulus { delta } => {
                let lim = T::one() + delta;
                let xs = lin(-lim, lim);
                let mut pts = Vec::new();
                for &x in &xs {
                    for &y in xs.iter() {
                        let r = (x * x + y * y).sqrt();
                        if r >= T::one() - delta && r <= T::one() + delta {
                            pts.push(x);
                            pts.push(y);
                        }
                    }
                }
                pts
            }
        },
        Host::Manifold(Manifold::Circle) => {
            let count = g * g;
            let dt = T::of(2.0) * T::PI() / T::of_usize(count);
            let mut pts = Vec::with_capacity(count * 2);
            for i in 0..count {
                let t = dt * T::of_usize(i);
                pts.push(t.cos());
                pts.push(t.sin());
            }
            pts
        }
    }
}

/// Literal transcriptions of the mesh-geometry definitions: the fill
/// distance `h = sup_{y∈Ω} min_j dist(y, x_j)` approximated over a dense
/// reference grid (about `grid_per_dim` points per axis), and the separation
/// radius `q = ½ min_{i≠j} dist(x_i, x_j)` computed exactly by the O(N²)
/// pairwise scan. Distances use the host metric (geodesic on the circle).
pub fn pairwise_scan<T: Real>(x: &PointSet<T>, grid_per_dim: usize) -> (T, T) {
    let host = x.host();
    let n = x.len();
    let dim = x.dim();

    let grid = reference_grid(host, grid_per_dim);
    let mut h = T::zero();
    for y in grid.chunks_exact(dim) {
        let mut nearest = T::infinity();
        for j in 0..n {
            let d = host_distance(host, y, x.point(j));
            if d < nearest {
                nearest = d;
            }
        }
        if nearest > h {
            h = nearest;
        }
    }

    let mut min_pair = T::infinity();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = host_distance(host, x.point(i), x.point(j));
            if d < min_pair {
                min_pair = d;
            }
        }
    }
    let q = min_pair * T::of(0.5);
    (h, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{nikolskii_constant, pencil_top};
    use crate::geometry::{uniform_refinement_with_resolution, Domain};
    use crate::kernels::Kernel;
    use crate::quadrature::build_rule;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn mat_from(rows: &[Vec<f64>]) -> Mat<f64> {
        Mat::from_rows(rows)
    }

    fn random_spd(n: usize, rng: &mut ChaCha8Rng, ridge: f64) -> Mat<f64> {
        let mut rows = vec![vec![0.0_f64; n]; n];
        let raw: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect())
            .collect();
        for (i, row) in rows.iter_mut().enumerate() {
            for (j, out) in row.iter_mut().enumerate() {
                *out = (0..n).map(|k| raw[k][i] * raw[k][j]).sum::<f64>()
                    + if i == j { ridge } else { 0.0 };
            }
        }
        mat_from(&rows)
    }

    #[test]
    fn mc_bound_hits_closed_forms() {
        let a = mat_from(&[vec![3.0]]);
        let b = mat_from(&[vec![7.0]]);
        let r = mc_rayleigh_bound(&a, &b, 1_000, 5);
        assert_relative_eq!(r, 3.0 / 7.0, max_relative = 1e-14);

        let num = mat_from(&[vec![1.0, 0.0], vec![0.0, 4.0]]);
        let den = mat_from(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let r = mc_rayleigh_bound(&num, &den, 4_000, 11);
        assert!(r > 3.9 && r <= 4.0 + 1e-12, "got {}", r);
    }

    #[test]
    fn mc_bound_never_exceeds_dense_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for trial in 0..50 {
            let n = 2 + (trial % 7);
            let num = random_spd(n, &mut rng, 0.1);
            let den = random_spd(n, &mut rng, 0.5);
            let top = dense_eig_reference(&num, &den).unwrap();
            let mc = mc_rayleigh_bound(&num, &den, 1_000, 1000 + trial as u64);
            assert!(
                mc <= top * (1.0 + 1e-12),
                "trial {}: mc {} exceeds λ_max {}",
                trial,
                mc,
                top
            );
        }
    }

    #[test]
    fn dense_reference_closed_forms_and_cap() {
        let id = Mat::<f64>::identity(3);
        assert_relative_eq!(dense_eig_reference(&id, &id).unwrap(), 1.0, epsilon = 1e-13);

        let num = mat_from(&[vec![1.0, 0.0], vec![0.0, 4.0]]);
        let den = Mat::<f64>::identity(2);
        assert_relative_eq!(dense_eig_reference(&num, &den).unwrap(), 4.0, epsilon = 1e-12);

        // Symmetric 2×2 with analytic spectrum {1, 3}.
        let sym = mat_from(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        assert_relative_eq!(
            dense_eig_reference(&sym, &Mat::<f64>::identity(2)).unwrap(),
            3.0,
            epsilon = 1e-12
        );

        let big = Mat::<f64>::identity(33);
        assert!(dense_eig_reference(&big, &big).is_err());

        let sing = mat_from(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert!(dense_eig_reference(&Mat::<f64>::identity(2), &sing).is_err());
        let not_pd = mat_from(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(dense_eig_reference(&num, &not_pd).is_err());
    }

    #[test]
    fn dense_reference_agrees_with_krylov_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for trial in 0..10 {
            let n = 8;
            let num = random_spd(n, &mut rng, 0.05);
            let den = random_spd(n, &mut rng, 0.3);
            let reference = dense_eig_reference(&num, &den).unwrap();
            let main = pencil_top(&num, &den, "test pencil").unwrap().lambda;
            assert_relative_eq!(reference, main, max_relative = 1e-9);
            let _ = trial;
        }
    }

    #[test]
    fn brute_sup_single_node_closed_form() {
        // One ν = 1/2 translate on a wide interval: mass → 1 − e^{−20}, and
        // the sup/L₂ ratio is attained at the node where φ = 1.
        let dom = Domain::interval(-10.0, 10.0).unwrap();
        let x = PointSet::new(Host::Domain(dom), vec![0.0], 10_000).unwrap();
        let space = TrialSpace::new(Kernel::new(1.0, 1).unwrap(), x).unwrap();
        let rule = build_rule(Host::Domain(dom), 7).unwrap();
        let mut grid: Vec<f64> = (0..257).map(|i| -10.0 + 20.0 * i as f64 / 256.0).collect();
        grid.push(0.0); // make sure the node itself is on the grid
        let r = brute_sup_norm_ratio(&space, &rule, 5, &grid, 3).unwrap();
        let expected = 1.0 / (1.0 - (-20.0_f64).exp()).sqrt();
        assert_relative_eq!(r, expected, max_relative = 1e-9);
    }

    #[test]
    fn brute_sup_is_a_lower_bound_for_the_dual_closed_form() {
        let dom = Domain::interval(0.0, 1.0).unwrap();
        let nodes: Vec<f64> = (0..5).map(|i| 0.1 + 0.2 * i as f64).collect();
        let x = PointSet::new(Host::Domain(dom), nodes, 10_000).unwrap();
        let space = TrialSpace::new(Kernel::new(2.0, 1).unwrap(), x).unwrap();
        let rule = build_rule(Host::Domain(dom), 6).unwrap();
        let grid: Vec<f64> = (0..64).map(|i| i as f64 / 63.0).collect();
        let brute = brute_sup_norm_ratio(&space, &rule, 40, &grid, 9).unwrap();
        let exact = nikolskii_constant(&space, &rule, &grid).unwrap().value;
        assert!(
            brute <= exact * (1.0 + 1e-10),
            "brute {} exceeds dual value {}",
            brute,
            exact
        );
        assert!(brute > 0.5 * exact, "brute bound implausibly loose");
        // Determinism per seed.
        let again = brute_sup_norm_ratio(&space, &rule, 40, &grid, 9).unwrap();
        assert_eq!(brute.to_bits(), again.to_bits());
    }

    #[test]
    fn pairwise_scan_matches_geometry_module() {
        let dom = Domain::interval(0.0, 1.0).unwrap();
        let nodes: Vec<f64> = (0..9).map(|i| i as f64 / 8.0).collect();
        let x = PointSet::new(Host::Domain(dom), nodes, 10_000).unwrap();
        let (h, q) = pairwise_scan(&x, 4_000);
        assert_relative_eq!(q, x.q(), max_relative = 1e-12);
        assert_relative_eq!(h, x.h(), max_relative = 1e-2);

        let circle: Host<f64> = Host::Manifold(Manifold::Circle);
        let c = uniform_refinement_with_resolution(circle, 3, 10_000).unwrap();
        let (hc, qc) = pairwise_scan(&c, 128);
        assert_relative_eq!(qc, c.q(), max_relative = 1e-12);
        assert_relative_eq!(hc, c.h(), max_relative = 1e-2);
    }
}
