//! Trial spaces restricted to the unit circle: constant-along-normal band
//! extensions, the δ^{1/2} norm equivalences between a tubular band and the
//! circle, a pointwise Poincaré-type bound used by those equivalences, and
//! the circle versions of the Bernstein and Nikolskii extremal constants.
//!
//! The circle is the only manifold shipped; it is embedded in ℝ² and all
//! intrinsic Sobolev norms go through the Fourier (spectral) path of the
//! `sobolev` module, while ambient norms on the band annulus use the same
//! quadrature assembly as every other planar domain.

use crate::error::{Error, Result};
use crate::estimators::{
    merge_conditioning, pencil_top, summarize, sup_dual_constant, to_translate_basis,
    ConstantEstimate,
};
use crate::geometry::{closest_point, tubular_domain, Host, Manifold};
use crate::kernels::TrialSpace;
use crate::linalg::{cholesky_jittered, dot, tree_sum};
use crate::quadrature::{build_rule, gl_line, Rule};
use crate::scalar::Real;
use crate::sobolev::{circle_spectral_norm, circle_sobolev_gram, h_norm_gram, trial_derivative_values};

/// Equispaced angles `θ_i = 2πi/count` on `[0, 2π)`.
pub fn uniform_angles<T: Real>(count: usize) -> Vec<T> {
    let dt = T::of(2.0) * T::PI() / T::of_usize(count);
    (0..count).map(|i| dt * T::of_usize(i)).collect()
}

/// Flat `(cos θ, sin θ)` coordinates of a list of angles.
pub fn angles_to_points<T: Real>(angles: &[T]) -> Vec<T> {
    let mut pts = Vec::with_capacity(angles.len() * 2);
    for &t in angles {
        pts.push(t.cos());
        pts.push(t.sin());
    }
    pts
}

// ---------------------------------------------------------------------------
// Constant-along-normal extension
// ---------------------------------------------------------------------------

/// A circle function extended to a band annulus by composition with the
/// closest-point projection: the extension's value at `x` is `u(x/‖x‖)`,
/// so it is constant along radial rays by construction.
///
/// The base function is given in angle parametrization `θ ↦ u(θ)` and must
/// be 2π-periodic (it describes a function on the circle).
pub struct BandExtension<T, F>
where
    T: Real,
    F: Fn(T) -> T,
{
    u: F,
    delta: T,
    host: Host<T>,
}

impl<T, F> BandExtension<T, F>
where
    T: Real,
    F: Fn(T) -> T,
{
    /// Band half-width δ.
    pub fn delta(&self) -> T {
        self.delta
    }

    /// The band annulus `1 − δ < ‖x‖ < 1 + δ` the extension lives on.
    pub fn host(&self) -> &Host<T> {
        &self.host
    }

    /// The base function on the circle, by angle.
    pub fn base(&self, theta: T) -> T {
        (self.u)(theta)
    }

    /// Extension value at a planar point: `u` at the closest circle point.
    /// Errors at the focal point (the origin), where the projection is
    /// undefined; every point of the band annulus is projectable.
    pub fn eval(&self, x: &[T]) -> Result<T> {
        let cp = closest_point(x, Manifold::Circle)?;
        Ok((self.u)(cp[1].atan2(cp[0])))
    }
}

/// Extend a circle function to the band of half-width δ by making it
/// constant along normals (radial rays). Requires `0 < δ < 1` so the band
/// stays inside the circle's reach.
pub fn extend_constant_normal<T, F>(u: F, delta: T) -> Result<BandExtension<T, F>>
where
    T: Real,
    F: Fn(T) -> T,
{
    let band = tubular_domain(Manifold::Circle, delta)?;
    Ok(BandExtension {
        u,
        delta,
        host: Host::Domain(band),
    })
}

/// L₂ equivalence ratio of a constant-along-normal extension:
/// `‖u∘R‖_{L₂(Ω_δ)} / (√(2δ)·‖u‖_{L₂(S¹)})` with `R` the closest-point
/// projection and `Ω_δ` the band annulus.
///
/// On the circle this is an identity up to quadrature: in polar coordinates
/// the numerator separates into `(∫_{1−δ}^{1+δ} r dr)·∫ u(θ)² dθ` and the
/// radial factor is exactly 2δ, so the ratio is 1 for every resolvable `u`.
/// The rule must live on the extension's own band annulus; the circle-side
/// norm uses the matching trapezoid grid (same angle count as the rule),
/// so the angular factors cancel exactly.
pub fn equivalence_ratio_extension<T, F>(ext: &BandExtension<T, F>, rule: &Rule<T>) -> Result<T>
where
    T: Real,
    F: Fn(T) -> T,
{
    if rule.host() != ext.host() {
        return Err(Error::InvalidArgument(
            "the quadrature rule must be built on the extension's band annulus".into(),
        ));
    }
    let terms: Result<Vec<T>> = (0..rule.len())
        .map(|i| {
            let v = ext.eval(rule.node(i))?;
            Ok(rule.weights()[i] * v * v)
        })
        .collect();
    let num_sq = tree_sum(&terms?);

    // Circle-side trapezoid with the same angle count as the annulus rule.
    let s = 1usize << (rule.level() + 4);
    let dt = T::of(2.0) * T::PI() / T::of_usize(s);
    let sq: Vec<T> = (0..s)
        .map(|k| {
            let v = ext.base(dt * T::of_usize(k));
            dt * v * v
        })
        .collect();
    let circle_sq = tree_sum(&sq);
    if !(circle_sq > T::zero()) {
        return Err(Error::InvalidArgument(
            "the base function vanishes at every quadrature angle; the equivalence \
             ratio is undefined"
                .into(),
        ));
    }
    let den_sq = T::of(2.0) * ext.delta() * circle_sq;
    Ok((num_sq / den_sq).max(T::zero()).sqrt())
}

// ---------------------------------------------------------------------------
// Norm equivalence for trial functions (not constant along normals)
// ---------------------------------------------------------------------------

/// Measured two-sided equivalence between the ambient band norm and the
/// scaled circle norm of one trial function.
#[derive(Debug, Clone)]
pub struct TrialEquivalence<T> {
    /// `‖u‖_{H^β(Ω_δ)} / (δ^{1/2}·‖u‖_{H^β(S¹)})`; the equivalence predicts
    /// this stays within δ-independent bounds as the band shrinks.
    pub ratio: T,
    /// Ambient Sobolev norm over the band annulus.
    pub ambient_norm: T,
    /// Intrinsic (spectral) Sobolev norm on the circle.
    pub manifold_norm: T,
    pub delta: T,
    pub beta: T,
    /// Both norms vanished (zero coefficient vector); the ratio is reported
    /// as 1 by convention.
    pub degenerate_zero: bool,
    /// Range of the polar Jacobian determinant `r` over the band:
    /// `(1 − δ, 1 + δ)`.
    pub jacobian_bounds: (T, T),
}

/// Ratio `‖u‖_{H^β(Ω_δ)} / (δ^{1/2}·‖u‖_{H^β(S¹)})` for a trial function
/// `u = Σ c_j φ(·, x_j)` with nodes on the circle. Unlike a
/// constant-along-normal extension, `u` genuinely varies across the band,
/// so the ratio is not identically 1; the norm equivalence for trial spaces
/// asserts it is bounded above and below independently of δ when
/// `δ = O(q)`.
///
/// The ambient norm integrates over the band annulus `1−δ < ‖x‖ < 1+δ` with
/// a rule at `ambient_level`; the circle norm is spectral on `2^big_k`
/// samples. The order must satisfy `0 ≤ β ≤ ⌊τ − 1/2⌋` with
/// `τ = m − 1/2` the smoothness of the restricted kernel; the cap is
/// enforced, not clamped. A zero coefficient vector yields the convention
/// ratio 1 with `degenerate_zero` set.
pub fn trial_equivalence_ratio<T: Real>(
    space: &TrialSpace<T>,
    coeffs: &[T],
    delta: T,
    beta: T,
    ambient_level: u32,
    big_k: u32,
) -> Result<TrialEquivalence<T>> {
    if !space.on_circle() {
        return Err(Error::InvalidArgument(
            "the trial-space norm equivalence is defined for circle node sets".into(),
        ));
    }
    if coeffs.len() != space.dim() {
        return Err(Error::InvalidArgument(format!(
            "{} coefficients for {} nodes",
            coeffs.len(),
            space.dim()
        )));
    }
    let tau: T = space.kernel().tau()?;
    let cap = (tau - T::of(0.5)).floor();
    if !(beta >= T::zero() && beta <= cap + T::of(1e-12)) {
        return Err(Error::InadmissibleOrder(format!(
            "the band norm equivalence for trial functions requires \
             0 ≤ β ≤ ⌊τ − 1/2⌋ = {} (restricted-kernel smoothness τ = {}); got β = {}",
            cap, tau, beta
        )));
    }
    let band = tubular_domain(Manifold::Circle, delta)?;
    let rule = build_rule(Host::Domain(band), ambient_level)?;

    let g = h_norm_gram(space, beta, &rule, None)?;
    let ambient_norm = dot(coeffs, &g.mat.matvec(coeffs)).max(T::zero()).sqrt();

    let pts = angles_to_points(&uniform_angles::<T>(1usize << big_k));
    let zeros = vec![0usize; 2];
    let samples = trial_derivative_values(space, coeffs, &zeros, &pts, None)?;
    let manifold_norm = circle_spectral_norm(&samples, beta)?;

    let degenerate_zero = ambient_norm == T::zero() && manifold_norm == T::zero();
    let ratio = if degenerate_zero {
        T::one()
    } else {
        ambient_norm / (delta.sqrt() * manifold_norm)
    };
    Ok(TrialEquivalence {
        ratio,
        ambient_norm,
        manifold_norm,
        delta,
        beta,
        degenerate_zero,
        jacobian_bounds: (T::one() - delta, T::one() + delta),
    })
}

// ---------------------------------------------------------------------------
// Pointwise Poincaré-type bound on a symmetric interval
// ---------------------------------------------------------------------------

/// Both sides of the pointwise Poincaré-type bound and whether it held.
#[derive(Debug, Clone, Copy)]
pub struct PoincareCheck<T> {
    /// `|f(0)|^p`.
    pub lhs: T,
    /// `2^{p−1}/(2δ)·∫_{−δ}^{δ}|f|^p + 2^{p−1}·δ^{p−1}·∫_{−δ}^{δ}|f′|^p`.
    pub rhs: T,
    /// `lhs ≤ rhs·(1 + 1e−10)`.
    pub holds: bool,
}

/// Check the pointwise bound
/// `|f(0)|^p ≤ 2^{p−1}/(2δ)·∫_{−δ}^{δ}|f|^p + 2^{p−1}·δ^{p−1}·∫_{−δ}^{δ}|f′|^p`
/// for a C¹ function given with its derivative. Both integrals use the same
/// composite Gauss rule with 2⁶ panels, so the two sides are internally
/// consistent. Requires `p ≥ 1` and `δ > 0` (asserted).
pub fn poincare_check<T: Real>(
    f: impl Fn(T) -> T,
    df: impl Fn(T) -> T,
    delta: T,
    p: T,
) -> PoincareCheck<T> {
    assert!(delta > T::zero(), "the half-width must be positive");
    assert!(p >= T::one(), "the exponent must satisfy p ≥ 1");
    let (xs, ws) = gl_line(-delta, delta, 64);
    let tf: Vec<T> = xs
        .iter()
        .zip(&ws)
        .map(|(&x, &w)| w * f(x).abs().powf(p))
        .collect();
    let td: Vec<T> = xs
        .iter()
        .zip(&ws)
        .map(|(&x, &w)| w * df(x).abs().powf(p))
        .collect();
    let int_f = tree_sum(&tf);
    let int_df = tree_sum(&td);
    let two_pm1 = T::of(2.0).powf(p - T::one());
    let lhs = f(T::zero()).abs().powf(p);
    let rhs = two_pm1 / (T::of(2.0) * delta) * int_f + two_pm1 * delta.powf(p - T::one()) * int_df;
    PoincareCheck {
        lhs,
        rhs,
        holds: lhs <= rhs * (T::one() + T::of(1e-10)),
    }
}

// ---------------------------------------------------------------------------
// Circle Bernstein and Nikolskii constants
// ---------------------------------------------------------------------------

/// Whether β is admissible for the circle Bernstein constant:
/// `β ∈ (1/2, τ]` (above half the intrinsic dimension) or
/// `β ∈ [0, ⌊τ − 1/2⌋]` (integer-reachable orders), with float slack on the
/// closed ends.
pub fn manifold_bernstein_admissible(beta: f64, tau: f64) -> bool {
    let eps = 1e-9;
    (beta > 0.5 && beta <= tau + eps) || (beta >= -eps && beta <= (tau - 0.5).floor() + eps)
}

/// Circle Bernstein extremal constant `sup ‖u‖_{H^β(S¹)} / ‖u‖_{L₂(S¹)}`
/// over the restricted-kernel trial space: `√λ_max` of the pencil of the
/// spectral order-β Gram against the spectral mass Gram, both on `2^big_k`
/// samples. Per-level reports multiply by `h^β` so the fitted slope of the
/// raw value against the fill distance targets −β.
pub fn manifold_bernstein_constant<T: Real>(
    space: &TrialSpace<T>,
    beta: T,
    big_k: u32,
) -> Result<ConstantEstimate<T>> {
    if !space.on_circle() {
        return Err(Error::InvalidArgument(
            "the circle Bernstein constant needs a circle node set".into(),
        ));
    }
    let tau: T = space.kernel().tau()?;
    if !manifold_bernstein_admissible(beta.as_f64(), tau.as_f64()) {
        return Err(Error::InadmissibleOrder(format!(
            "circle Bernstein order β = {} is outside the admissible set for \
             restricted-kernel smoothness τ = {}: β must lie in (1/2, τ] or in \
             [0, ⌊τ − 1/2⌋]",
            beta, tau
        )));
    }
    let phi = space.gram()?;
    let chol_phi = cholesky_jittered(&phi, "kernel interpolation matrix")?;
    let num = circle_sobolev_gram(space, beta, big_k, Some(&chol_phi.l))?;
    let den = circle_sobolev_gram(space, T::zero(), big_k, Some(&chol_phi.l))?;
    let sol = pencil_top(&num.mat, &den.mat, "circle mass Gram")?;
    Ok(ConstantEstimate {
        value: sol.lambda.max(T::zero()).sqrt(),
        s_upper: beta,
        s_lower: T::zero(),
        space: summarize(space),
        conditioning: merge_conditioning(&chol_phi, &sol),
        extremizer: to_translate_basis(&chol_phi, &sol.eigvec),
    })
}

/// Circle Nikolskii extremal constant `sup ‖u‖_{L_∞(S¹)} / ‖u‖_{L₂(S¹)}`
/// by the dual closed form `max_θ √(k_θᵀ M⁻¹ k_θ)` with `M` the spectral
/// circle mass Gram on `2^big_k` samples, maximized over the given
/// evaluation angles (a lower bound that sharpens with angle density; at
/// least 8 angles per node required). The raw slope against the fill
/// distance targets −1/2.
pub fn manifold_nikolskii_constant<T: Real>(
    space: &TrialSpace<T>,
    big_k: u32,
    eval_angles: &[T],
) -> Result<ConstantEstimate<T>> {
    if !space.on_circle() {
        return Err(Error::InvalidArgument(
            "the circle Nikolskii constant needs a circle node set".into(),
        ));
    }
    let n = space.dim();
    if eval_angles.len() < 8 * n {
        return Err(Error::InvalidArgument(format!(
            "the sup-norm evaluation grid must be at least 8× denser than the node set \
             (got {} angles for {} nodes)",
            eval_angles.len(),
            n
        )));
    }
    let phi = space.gram()?;
    let chol_phi = cholesky_jittered(&phi, "kernel interpolation matrix")?;
    let mass = circle_sobolev_gram(space, T::zero(), big_k, Some(&chol_phi.l))?;
    let chol_mass = cholesky_jittered(&mass.mat, "circle mass Gram")?;
    let pts = angles_to_points(eval_angles);
    sup_dual_constant(space, &chol_phi, &chol_mass, &pts)
}
