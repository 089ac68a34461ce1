//! Quadrature rules on every shipped geometry, plus weighted L_q and
//! discrete ℓ_ϱ norms.
//!
//! Interval and box rules are composite 8-point Gauss–Legendre with dyadic
//! panel counts; disk and annulus rules are polar tensor products (radial
//! Gauss–Legendre weighted by r, equispaced angles); the circle rule is the
//! equispaced trapezoid rule, spectrally accurate for periodic integrands.

use crate::error::{Error, Result};
use crate::geometry::{candidate_grid, Host, Manifold, Shape};
use crate::linalg::tree_sum;
use crate::scalar::Real;

/// Hard ceiling on rule sizes.
pub const MAX_RULE_NODES: usize = 10_000_000;

/// 8-point Gauss–Legendre nodes on [-1, 1] (positive half; mirrored below).
const GL8_X: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_328_99,
    0.796_666_477_413_626_74,
    0.960_289_856_497_536_23,
];
/// Matching weights.
const GL8_W: [f64; 4] = [
    0.362_683_783_378_361_98,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

/// Nodes/weights of the composite 8-point Gauss–Legendre rule on `[a, b]`
/// with `panels` equal panels.
pub fn gl_line<T: Real>(a: T, b: T, panels: usize) -> (Vec<T>, Vec<T>) {
    let mut xs = Vec::with_capacity(panels * 8);
    let mut ws = Vec::with_capacity(panels * 8);
    let w = (b - a) / T::of_usize(panels);
    for p in 0..panels {
        let lo = a + w * T::of_usize(p);
        push_gl_panel(lo, lo + w, &mut xs, &mut ws);
    }
    (xs, ws)
}

/// Offset companion of [`gl_line`]: panels shifted by half a width, with
/// half-width panels at both ends, so no node coincides with the base rule.
pub fn gl_line_offset<T: Real>(a: T, b: T, panels: usize) -> (Vec<T>, Vec<T>) {
    let mut xs = Vec::new();
    let mut ws = Vec::new();
    let w = (b - a) / T::of_usize(panels);
    let half = w * T::of(0.5);
    // [a, a+w/2], then full panels, then [b-w/2, b].
    push_gl_panel(a, a + half, &mut xs, &mut ws);
    for p in 0..panels.saturating_sub(1) {
        let lo = a + half + w * T::of_usize(p);
        push_gl_panel(lo, lo + w, &mut xs, &mut ws);
    }
    push_gl_panel(b - half, b, &mut xs, &mut ws);
    (xs, ws)
}

fn push_gl_panel<T: Real>(lo: T, hi: T, xs: &mut Vec<T>, ws: &mut Vec<T>) {
    let c = (lo + hi) * T::of(0.5);
    let h = (hi - lo) * T::of(0.5);
    // Keep a fixed symmetric node order: ascending across the panel.
    for i in (0..4).rev() {
        xs.push(c - h * T::of(GL8_X[i]));
        ws.push(h * T::of(GL8_W[i]));
    }
    for i in 0..4 {
        xs.push(c + h * T::of(GL8_X[i]));
        ws.push(h * T::of(GL8_W[i]));
    }
}

/// A quadrature rule: flat node buffer, positive weights in volume units,
/// and the spacing scale used by near-diagonal policies downstream.
#[derive(Debug, Clone)]
pub struct Rule<T> {
    host: Host<T>,
    level: u32,
    dim: usize,
    nodes: Vec<T>,
    weights: Vec<T>,
    /// Largest panel extent (max over axes of the panel width).
    panel_width: T,
}

impl<T: Real> Rule<T> {
    pub fn host(&self) -> &Host<T> {
        &self.host
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[T] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    pub fn nodes_flat(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn panel_width(&self) -> T {
        self.panel_width
    }

    /// Integrate a function with deterministic (tree) summation.
    pub fn integrate(&self, f: impl Fn(&[T]) -> T) -> T {
        let terms: Vec<T> = (0..self.len())
            .map(|i| self.weights[i] * f(self.node(i)))
            .collect();
        tree_sum(&terms)
    }

    /// Total weight (equals the host volume for shipped rules).
    pub fn total_weight(&self) -> T {
        tree_sum(&self.weights)
    }
}

/// Build the rule for a host at refinement level `k ≥ 1`.
///
/// - interval: `2^k` panels of 8-point Gauss–Legendre;
/// - box: the tensor square of the interval rule;
/// - disk: `2^k` radial Gauss–Legendre panels (weighted by r) × `2^{k+4}`
///   equispaced angles;
/// - annulus: radial panels symmetric about r = 1 (count `max(4, 2^{k-3})`)
///   × `2^{k+4}` angles;
/// - circle: `2^{k+4}` equispaced trapezoid points.
pub fn build_rule<T: Real>(host: Host<T>, level: u32) -> Result<Rule<T>> {
    if level < 1 {
        return Err(Error::InvalidArgument(
            "quadrature level must be at least 1".into(),
        ));
    }
    let (nodes, weights, dim, panel_width) = match &host {
        Host::Domain(dom) => match dom.shape {
            Shape::Interval { a, b } => {
                let panels = checked_panels(1usize << level, 8, 1)?;
                let (xs, ws) = gl_line(a, b, panels);
                let pw = (b - a) / T::of_usize(panels);
                (xs, ws, 1, pw)
            }
            Shape::Box2 { x0, x1, y0, y1 } => {
                let panels = 1usize << level;
                checked_panels(panels * 8, panels * 8, 1)?;
                let (xs, wx) = gl_line(x0, x1, panels);
                let (ys, wy) = gl_line(y0, y1, panels);
                let mut nodes = Vec::with_capacity(xs.len() * ys.len() * 2);
                let mut weights = Vec::with_capacity(xs.len() * ys.len());
                for (i, &x) in xs.iter().enumerate() {
                    for (j, &y) in ys.iter().enumerate() {
                        nodes.push(x);
                        nodes.push(y);
                        weights.push(wx[i] * wy[j]);
                    }
                }
                let pw = ((x1 - x0) / T::of_usize(panels))
                    .max((y1 - y0) / T::of_usize(panels));
                (nodes, weights, 2, pw)
            }
            Shape::Disk { cx, cy, radius } => {
                let r_panels = 1usize << level;
                let n_t = 1usize << (level + 4);
                checked_panels(r_panels * 8, n_t, 1)?;
                let (rs, wr) = gl_line(T::zero(), radius, r_panels);
                polar_tensor(cx, cy, &rs, &wr, n_t, radius / T::of_usize(r_panels))
            }
            Shape::Annulus { delta } => {
                let r_panels = 4usize.max(1usize << level.saturating_sub(3));
                let n_t = 1usize << (level + 4);
                checked_panels(r_panels * 8, n_t, 1)?;
                // Two symmetric half-bands so r = 1 is a panel edge: radial
                // nodes never sit exactly on the circle.
                let half = r_panels / 2;
                let (mut rs, mut wr) = gl_line(T::one() - delta, T::one(), half.max(1));
                let (rs2, wr2) = gl_line(T::one(), T::one() + delta, half.max(1));
                rs.extend_from_slice(&rs2);
                wr.extend_from_slice(&wr2);
                polar_tensor(
                    T::zero(),
                    T::zero(),
                    &rs,
                    &wr,
                    n_t,
                    delta / T::of_usize(half.max(1)),
                )
            }
        },
        Host::Manifold(Manifold::Circle) => {
            let n = checked_panels(1usize << (level + 4), 1, 1)?;
            let dt = T::of(2.0) * T::PI() / T::of_usize(n);
            let mut nodes = Vec::with_capacity(n * 2);
            let weights = vec![dt; n];
            for i in 0..n {
                let t = dt * T::of_usize(i);
                nodes.push(t.cos());
                nodes.push(t.sin());
            }
            (nodes, weights, 2, dt)
        }
    };
    Ok(Rule {
        host,
        level,
        dim,
        nodes,
        weights,
        panel_width,
    })
}

/// Offset companion of [`build_rule`] for the Gagliardo double integrals:
/// same construction with every panel (and on disks/annuli every angle)
/// shifted by half a step, so no node coincides with the base rule's.
/// Defined for bounded domains only.
pub fn offset_rule<T: Real>(host: Host<T>, level: u32) -> Result<Rule<T>> {
    if level < 1 {
        return Err(Error::InvalidArgument(
            "quadrature level must be at least 1".into(),
        ));
    }
    let dom = match &host {
        Host::Domain(d) => *d,
        Host::Manifold(_) => {
            return Err(Error::InvalidArgument(
                "offset rules exist only on domains (the circle uses spectral norms)".into(),
            ))
        }
    };
    let (nodes, weights, dim, panel_width) = match dom.shape {
        Shape::Interval { a, b } => {
            let panels = checked_panels(1usize << level, 8, 1)?;
            let (xs, ws) = gl_line_offset(a, b, panels);
            let pw = (b - a) / T::of_usize(panels);
            (xs, ws, 1, pw)
        }
        Shape::Box2 { x0, x1, y0, y1 } => {
            let panels = 1usize << level;
            checked_panels(panels * 8 + 8, panels * 8 + 8, 1)?;
            let (xs, wx) = gl_line_offset(x0, x1, panels);
            let (ys, wy) = gl_line_offset(y0, y1, panels);
            let mut nodes = Vec::with_capacity(xs.len() * ys.len() * 2);
            let mut weights = Vec::with_capacity(xs.len() * ys.len());
            for (i, &x) in xs.iter().enumerate() {
                for (j, &y) in ys.iter().enumerate() {
                    nodes.push(x);
                    nodes.push(y);
                    weights.push(wx[i] * wy[j]);
                }
            }
            let pw =
                ((x1 - x0) / T::of_usize(panels)).max((y1 - y0) / T::of_usize(panels));
            (nodes, weights, 2, pw)
        }
        Shape::Disk { cx, cy, radius } => {
            let r_panels = 1usize << level;
            let n_t = 1usize << (level + 4);
            checked_panels((r_panels + 1) * 8, n_t, 1)?;
            let (rs, wr) = gl_line_offset(T::zero(), radius, r_panels);
            let (mut nodes, weights, dim, pw) = polar_tensor(
                cx,
                cy,
                &rs,
                &wr,
                n_t,
                radius / T::of_usize(r_panels),
            );
            rotate_half_step(&mut nodes, cx, cy, n_t);
            (nodes, weights, dim, pw)
        }
        Shape::Annulus { delta } => {
            let r_panels = 4usize.max(1usize << level.saturating_sub(3));
            let n_t = 1usize << (level + 4);
            checked_panels((r_panels + 1) * 8, n_t, 1)?;
            let (rs, wr) = gl_line_offset(T::one() - delta, T::one() + delta, r_panels);
            let (mut nodes, weights, dim, pw) = polar_tensor(
                T::zero(),
                T::zero(),
                &rs,
                &wr,
                n_t,
                delta * T::of(2.0) / T::of_usize(r_panels),
            );
            rotate_half_step(&mut nodes, T::zero(), T::zero(), n_t);
            (nodes, weights, dim, pw)
        }
    };
    Ok(Rule {
        host,
        level,
        dim,
        nodes,
        weights,
        panel_width,
    })
}

/// Rotate polar nodes by half an angular step about the given center.
fn rotate_half_step<T: Real>(nodes: &mut [T], cx: T, cy: T, n_t: usize) {
    let half = T::PI() / T::of_usize(n_t);
    let (c, s) = (half.cos(), half.sin());
    for p in nodes.chunks_mut(2) {
        let x = p[0] - cx;
        let y = p[1] - cy;
        p[0] = cx + c * x - s * y;
        p[1] = cy + s * x + c * y;
    }
}

fn polar_tensor<T: Real>(
    cx: T,
    cy: T,
    rs: &[T],
    wr: &[T],
    n_t: usize,
    radial_panel: T,
) -> (Vec<T>, Vec<T>, usize, T) {
    let dt = T::of(2.0) * T::PI() / T::of_usize(n_t);
    let mut nodes = Vec::with_capacity(rs.len() * n_t * 2);
    let mut weights = Vec::with_capacity(rs.len() * n_t);
    let mut max_r = T::zero();
    for (i, &r) in rs.iter().enumerate() {
        max_r = max_r.max(r);
        let w_ring = wr[i] * r * dt;
        for j in 0..n_t {
            let t = dt * T::of_usize(j);
            nodes.push(cx + r * t.cos());
            nodes.push(cy + r * t.sin());
            weights.push(w_ring);
        }
    }
    let pw = radial_panel.max(max_r * dt);
    (nodes, weights, 2, pw)
}

fn checked_panels(a: usize, b: usize, c: usize) -> Result<usize> {
    let n = a.saturating_mul(b).saturating_mul(c);
    if n > MAX_RULE_NODES {
        Err(Error::RuleTooLarge { nodes: n })
    } else {
        Ok(a)
    }
}

/// Supported L_q / ℓ_ϱ exponents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lq {
    One,
    Two,
    Inf,
}

impl Lq {
    /// Parse from a numeric value (1, 2, or +∞).
    pub fn from_f64(q: f64) -> Result<Lq> {
        if q == 1.0 {
            Ok(Lq::One)
        } else if q == 2.0 {
            Ok(Lq::Two)
        } else if q.is_infinite() && q > 0.0 {
            Ok(Lq::Inf)
        } else {
            Err(Error::UnsupportedNormExponent(format!(
                "exponent {} not in {{1, 2, ∞}}",
                q
            )))
        }
    }

    /// Parse from config text: "1", "2", "inf" (or "∞").
    pub fn parse(text: &str) -> Result<Lq> {
        match text.trim() {
            "1" => Ok(Lq::One),
            "2" => Ok(Lq::Two),
            "inf" | "Inf" | "INF" | "∞" => Ok(Lq::Inf),
            other => Err(Error::UnsupportedNormExponent(format!(
                "exponent '{}' not in {{1, 2, inf}}",
                other
            ))),
        }
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            Lq::One => 1.0,
            Lq::Two => 2.0,
            Lq::Inf => f64::INFINITY,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Lq::One => "1",
            Lq::Two => "2",
            Lq::Inf => "inf",
        }
    }
}

/// Weighted L_q norm of `f` over the rule's host. Finite exponents use the
/// rule nodes; the L_∞ norm is a dense-grid maximum over at least 4× as many
/// points as the rule (a lower bound that is monotone under refinement).
pub fn lq_norm<T: Real>(rule: &Rule<T>, f: impl Fn(&[T]) -> T, q: Lq) -> T {
    match q {
        Lq::One => {
            let terms: Vec<T> = (0..rule.len())
                .map(|i| rule.weights[i] * f(rule.node(i)).abs())
                .collect();
            tree_sum(&terms)
        }
        Lq::Two => {
            let terms: Vec<T> = (0..rule.len())
                .map(|i| {
                    let v = f(rule.node(i));
                    rule.weights[i] * v * v
                })
                .collect();
            tree_sum(&terms).sqrt()
        }
        Lq::Inf => {
            let floor = match rule.host {
                Host::Manifold(_) => 16_384,
                Host::Domain(_) => 65_536,
            };
            let grid = candidate_grid(&rule.host, (4 * rule.len()).max(floor));
            let mut m = T::zero();
            for p in grid.chunks(rule.dim) {
                m = m.max(f(p).abs());
            }
            m
        }
    }
}

/// Discrete ℓ_ϱ norm of raw values — explicitly without any 1/N factor.
pub fn discrete_norm<T: Real>(values: &[T], rho: Lq) -> Result<T> {
    if values.is_empty() {
        return Err(Error::EmptyNodeSet);
    }
    Ok(match rho {
        Lq::One => {
            let terms: Vec<T> = values.iter().map(|v| v.abs()).collect();
            tree_sum(&terms)
        }
        Lq::Two => {
            let terms: Vec<T> = values.iter().map(|v| *v * *v).collect();
            tree_sum(&terms).sqrt()
        }
        Lq::Inf => values.iter().fold(T::zero(), |a, v| a.max(v.abs())),
    })
}
