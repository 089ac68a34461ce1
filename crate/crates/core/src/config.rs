//! Experiment configuration: a flat `key = value` text format with `#`
//! comments, parsed with full-validation semantics — every violation in the
//! document is reported, not just the first one found.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::estimators::{bernstein_admissible, sampling_order_limit};
use crate::geometry::{Domain, Host, Manifold};
use crate::kernels::Kernel;
use crate::manifold::manifold_bernstein_admissible;
use crate::quadrature::Lq;

/// The ten experiment kinds the runner can execute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Bernstein,
    Nikolskii,
    Stability,
    NativeInverse,
    Sampling,
    GnCheck,
    ManifoldBernstein,
    ManifoldNikolskii,
    Equivalence,
    Poincare,
}

impl Kind {
    pub const ALL: [Kind; 10] = [
        Kind::Bernstein,
        Kind::Nikolskii,
        Kind::Stability,
        Kind::NativeInverse,
        Kind::Sampling,
        Kind::GnCheck,
        Kind::ManifoldBernstein,
        Kind::ManifoldNikolskii,
        Kind::Equivalence,
        Kind::Poincare,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Kind::Bernstein => "bernstein",
            Kind::Nikolskii => "nikolskii",
            Kind::Stability => "stability",
            Kind::NativeInverse => "native-inverse",
            Kind::Sampling => "sampling",
            Kind::GnCheck => "gn-check",
            Kind::ManifoldBernstein => "manifold-bernstein",
            Kind::ManifoldNikolskii => "manifold-nikolskii",
            Kind::Equivalence => "equivalence",
            Kind::Poincare => "poincare",
        }
    }

    pub fn parse(text: &str) -> Option<Kind> {
        Kind::ALL.iter().copied().find(|k| k.label() == text.trim())
    }

    /// Whether the kind fits a scaling exponent with a [min, max] verdict
    /// band (as opposed to a |slope| ≤ tol boundedness check or no fit).
    pub fn has_slope_band(&self) -> bool {
        matches!(
            self,
            Kind::Bernstein
                | Kind::Nikolskii
                | Kind::Stability
                | Kind::NativeInverse
                | Kind::ManifoldBernstein
                | Kind::ManifoldNikolskii
        )
    }

    /// Whether the kind checks |slope| ≤ tol (boundedness / δ-independence).
    pub fn has_slope_tolerance(&self) -> bool {
        matches!(self, Kind::Sampling | Kind::GnCheck | Kind::Equivalence)
    }

    /// Whether the kind runs on the circle.
    pub fn on_manifold(&self) -> bool {
        matches!(
            self,
            Kind::ManifoldBernstein | Kind::ManifoldNikolskii | Kind::Equivalence
        )
    }
}

/// How node sets are generated per refinement level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeGenerator {
    /// Structured quasi-uniform refinement (mesh ratio ≤ 2 by construction).
    Uniform,
    /// Greedy farthest-point selection from a seeded random candidate pool.
    Fps,
}

impl NodeGenerator {
    pub fn label(&self) -> &'static str {
        match self {
            NodeGenerator::Uniform => "uniform",
            NodeGenerator::Fps => "fps",
        }
    }
}

/// A fully validated experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: Kind,
    /// Geometry the trial spaces live on (absent only for the poincare kind,
    /// which runs on symmetric intervals with no kernel).
    pub host: Option<Host<f64>>,
    /// Kernel smoothness m (ν = m − d/2); absent only for poincare.
    pub m: Option<f64>,
    pub levels: Vec<u32>,
    pub nodes: NodeGenerator,
    pub seed: u64,
    /// Numerator order for bernstein/stability/sampling.
    pub s: Option<f64>,
    /// Circle Sobolev order for the manifold kinds.
    pub beta: Option<f64>,
    /// Interpolation orders for gn-check: t < alpha < m_order.
    pub t: f64,
    pub alpha: f64,
    pub m_order: f64,
    /// Sampling-inequality exponents.
    pub target_q: Lq,
    pub source_p: Lq,
    pub varrho: Lq,
    /// Random trial-function draws per level (sampling/gn-check/equivalence)
    /// or random polynomials (poincare).
    pub draws: usize,
    /// Band half-width factor: δ = c_delta · q per level (equivalence).
    pub c_delta: f64,
    /// Poincare exponents and half-widths.
    pub p_values: Vec<f64>,
    pub deltas: Vec<f64>,
    /// Poincare polynomial degree.
    pub degree: usize,
    /// Spectral resolution on the circle: 2^spectral_k samples.
    pub spectral_k: u32,
    /// Quadrature level of the band-annulus rule (equivalence).
    pub ambient_level: u32,
    /// Fixed quadrature level override; by default the rule level tracks the
    /// refinement level (doubling panels in 1D, capped tensor panels in 2D).
    pub rule_level: Option<u32>,
    /// Sup-norm evaluation grid density: grid_factor × N points (≥ 8).
    pub grid_factor: usize,
    /// Verdict band for the fitted exponent (slope-band kinds).
    pub slope_min: Option<f64>,
    pub slope_max: Option<f64>,
    /// Verdict tolerance |slope| ≤ slope_tol (boundedness kinds).
    pub slope_tol: f64,
    /// Per-level ratio bounds for the equivalence kind.
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// Output directory (CLI --out overrides).
    pub out: Option<String>,
    /// Exact config text as parsed, embedded in every report.
    pub text: String,
}

fn default_slope_tol(kind: Kind) -> f64 {
    match kind {
        Kind::GnCheck => 0.15,
        _ => 0.25,
    }
}

fn default_draws(kind: Kind) -> usize {
    match kind {
        Kind::Poincare => 100,
        Kind::Equivalence => 3,
        _ => 20,
    }
}

struct Parser {
    map: BTreeMap<String, String>,
    violations: Vec<String>,
    consumed: Vec<String>,
}

impl Parser {
    fn take(&mut self, key: &str) -> Option<String> {
        self.consumed.push(key.to_string());
        self.map.get(key).cloned()
    }

    fn f64_key(&mut self, key: &str) -> Option<f64> {
        let raw = self.take(key)?;
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => Some(v),
            _ => {
                self.violations
                    .push(format!("key `{}`: expected a finite number, got `{}`", key, raw));
                None
            }
        }
    }

    fn f64_or(&mut self, key: &str, default: f64) -> f64 {
        self.f64_key(key).unwrap_or(default)
    }

    fn usize_or(&mut self, key: &str, default: usize) -> usize {
        match self.take(key) {
            None => default,
            Some(raw) => match raw.parse::<usize>() {
                Ok(v) => v,
                Err(_) => {
                    self.violations.push(format!(
                        "key `{}`: expected a nonnegative integer, got `{}`",
                        key, raw
                    ));
                    default
                }
            },
        }
    }

    fn u64_or(&mut self, key: &str, default: u64) -> u64 {
        match self.take(key) {
            None => default,
            Some(raw) => match raw.parse::<u64>() {
                Ok(v) => v,
                Err(_) => {
                    self.violations.push(format!(
                        "key `{}`: expected an unsigned integer, got `{}`",
                        key, raw
                    ));
                    default
                }
            },
        }
    }

    fn u32_or(&mut self, key: &str, default: u32) -> u32 {
        self.usize_or(key, default as usize) as u32
    }

    fn lq_or(&mut self, key: &str, default: Lq) -> Lq {
        match self.take(key) {
            None => default,
            Some(raw) => match Lq::parse(&raw) {
                Ok(v) => v,
                Err(_) => {
                    self.violations.push(format!(
                        "key `{}`: expected a Lebesgue exponent in {{1, 2, inf}}, got `{}`",
                        key, raw
                    ));
                    default
                }
            },
        }
    }

    fn f64_list(&mut self, key: &str, default: &[f64]) -> Vec<f64> {
        match self.take(key) {
            None => default.to_vec(),
            Some(raw) => {
                let mut out = Vec::new();
                let mut ok = true;
                for item in raw.split(',') {
                    match item.trim().parse::<f64>() {
                        Ok(v) if v.is_finite() => out.push(v),
                        _ => {
                            ok = false;
                            self.violations.push(format!(
                                "key `{}`: `{}` is not a finite number in the comma list",
                                key, item.trim()
                            ));
                        }
                    }
                }
                if ok && out.is_empty() {
                    self.violations
                        .push(format!("key `{}`: the list must be nonempty", key));
                }
                out
            }
        }
    }
}

/// Parse and validate an experiment config document.
///
/// The format is one `key = value` per line with `#` starting a comment.
/// On failure the error carries **all** violations found — syntax problems,
/// unknown or duplicate keys, missing required keys, and every
/// admissible-range check that mirrors an inequality's hypotheses — so a
/// document can be fixed in one pass.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut map: BTreeMap<String, String> = BTreeMap::new();
    let mut violations: Vec<String> = Vec::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match line.split_once('=') {
            None => violations.push(format!(
                "line {}: expected `key = value`, got `{}`",
                idx + 1,
                line
            )),
            Some((k, v)) => {
                let key = k.trim().to_string();
                let val = v.trim().to_string();
                if key.is_empty() {
                    violations.push(format!("line {}: empty key", idx + 1));
                } else if map.insert(key.clone(), val).is_some() {
                    violations.push(format!("line {}: duplicate key `{}`", idx + 1, key));
                }
            }
        }
    }

    let mut p = Parser {
        map,
        violations,
        consumed: Vec::new(),
    };

    // Kind first: it decides which keys are required.
    let kind = match p.take("kind") {
        None => {
            p.violations.push(format!(
                "missing required key `kind` (one of: {})",
                Kind::ALL.map(|k| k.label()).join(", ")
            ));
            None
        }
        Some(raw) => match Kind::parse(&raw) {
            Some(k) => Some(k),
            None => {
                p.violations.push(format!(
                    "key `kind`: `{}` is not an experiment kind (one of: {})",
                    raw,
                    Kind::ALL.map(|k| k.label()).join(", ")
                ));
                None
            }
        },
    };

    // Geometry. The poincare kind runs on symmetric intervals with no
    // kernel, so geometry keys are optional (and ignored) there.
    let needs_geometry = kind.map(|k| k != Kind::Poincare).unwrap_or(false);
    let domain_raw = p.take("domain");
    let a = p.f64_or("a", 0.0);
    let b = p.f64_or("b", 1.0);
    let x0 = p.f64_or("x0", 0.0);
    let x1 = p.f64_or("x1", 1.0);
    let y0 = p.f64_or("y0", 0.0);
    let y1 = p.f64_or("y1", 1.0);
    let cx = p.f64_or("cx", 0.0);
    let cy = p.f64_or("cy", 0.0);
    let radius = p.f64_or("radius", 1.0);
    let band_delta = p.f64_or("band_delta", 0.2);

    let host: Option<Host<f64>> = if needs_geometry {
        match domain_raw.as_deref() {
            None => {
                p.violations.push(
                    "missing required key `domain` (interval, box, disk, annulus, or circle)"
                        .into(),
                );
                None
            }
            Some("interval") => match Domain::interval(a, b) {
                Ok(d) => Some(Host::Domain(d)),
                Err(e) => {
                    p.violations.push(format!("geometry: {}", e));
                    None
                }
            },
            Some("box") => match Domain::box2(x0, x1, y0, y1) {
                Ok(d) => Some(Host::Domain(d)),
                Err(e) => {
                    p.violations.push(format!("geometry: {}", e));
                    None
                }
            },
            Some("disk") => match Domain::disk(cx, cy, radius) {
                Ok(d) => Some(Host::Domain(d)),
                Err(e) => {
                    p.violations.push(format!("geometry: {}", e));
                    None
                }
            },
            Some("annulus") => match Domain::annulus(band_delta) {
                Ok(d) => Some(Host::Domain(d)),
                Err(e) => {
                    p.violations.push(format!("geometry: {}", e));
                    None
                }
            },
            Some("circle") => Some(Host::Manifold(Manifold::Circle)),
            Some(other) => {
                p.violations.push(format!(
                    "key `domain`: `{}` is not a host (interval, box, disk, annulus, circle)",
                    other
                ));
                None
            }
        }
    } else {
        None
    };

    if let (Some(k), Some(h)) = (kind, host) {
        let on_circle = matches!(h, Host::Manifold(_));
        if k.on_manifold() && !on_circle {
            p.violations.push(format!(
                "kind `{}` runs on the circle; set `domain = circle`",
                k.label()
            ));
        }
        if !k.on_manifold() && k != Kind::Poincare && on_circle {
            p.violations.push(format!(
                "kind `{}` runs on a bounded domain; for circle trial spaces use the \
                 manifold-bernstein / manifold-nikolskii / equivalence kinds",
                k.label()
            ));
        }
    }

    // Kernel smoothness. On kernel-eligibility failure the raw value is kept
    // so order-hypothesis checks below can still report their own violations
    // (the parse fails regardless, with the full list).
    let m_raw = p.f64_key("m");
    let m: Option<f64> = if needs_geometry {
        match m_raw {
            Some(mv) => {
                if let Some(h) = host {
                    if let Err(e) = Kernel::new(mv, h.ambient_dim()) {
                        p.violations.push(format!("key `m`: {}", e));
                    }
                }
                Some(mv)
            }
            None => {
                p.violations.push(
                    "missing required key `m` (kernel smoothness; ν = m − d/2 must be a \
                     half-integer in {1/2, 3/2, 5/2, 7/2})"
                        .into(),
                );
                None
            }
        }
    } else {
        m_raw
    };

    // Refinement levels.
    let levels: Vec<u32> = match p.take("levels") {
        None if needs_geometry => {
            p.violations
                .push("missing required key `levels` (comma list of refinement indices)".into());
            vec![]
        }
        None => vec![],
        Some(raw) => {
            let mut out: Vec<u32> = Vec::new();
            for item in raw.split(',') {
                match item.trim().parse::<u32>() {
                    Ok(v) if (1..=16).contains(&v) => out.push(v),
                    Ok(v) => p.violations.push(format!(
                        "key `levels`: refinement index {} outside the supported range 1..=16",
                        v
                    )),
                    Err(_) => p.violations.push(format!(
                        "key `levels`: `{}` is not a refinement index",
                        item.trim()
                    )),
                }
            }
            if needs_geometry {
                if out.is_empty() {
                    p.violations
                        .push("key `levels`: the list must be nonempty".into());
                } else if !out.windows(2).all(|w| w[0] < w[1]) {
                    p.violations
                        .push("key `levels`: refinement indices must be strictly increasing".into());
                }
            }
            out
        }
    };

    let nodes = match p.take("nodes").as_deref() {
        None | Some("uniform") => NodeGenerator::Uniform,
        Some("fps") => NodeGenerator::Fps,
        Some(other) => {
            p.violations.push(format!(
                "key `nodes`: `{}` is not a node generator (uniform or fps)",
                other
            ));
            NodeGenerator::Uniform
        }
    };

    let seed = p.u64_or("seed", 0);
    let s = p.f64_key("s");
    let beta = p.f64_key("beta");
    let t = p.f64_or("t", 0.0);
    let alpha = p.f64_or("alpha", 1.0);
    let m_order = p.f64_or("m_order", 2.0);
    let target_q = p.lq_or("target_q", Lq::Two);
    let source_p = p.lq_or("source_p", Lq::Two);
    let varrho = p.lq_or("varrho", Lq::Two);
    let draws = p.usize_or("draws", kind.map(default_draws).unwrap_or(20));
    let c_delta = p.f64_or("c_delta", 0.25);
    let p_values = p.f64_list("p_values", &[1.0, 2.0, 3.0]);
    let deltas = p.f64_list("deltas", &[0.1, 0.5]);
    let degree = p.usize_or("degree", 5);
    let spectral_k = p.u32_or("spectral_k", 12);
    let ambient_level = p.u32_or("ambient_level", 4);
    let rule_level = p.take("rule_level").and_then(|raw| match raw.parse::<u32>() {
        Ok(v) if (1..=12).contains(&v) => Some(v),
        _ => {
            p.violations.push(format!(
                "key `rule_level`: expected an integer in 1..=12, got `{}`",
                raw
            ));
            None
        }
    });
    let grid_factor = p.usize_or("grid_factor", 16);
    let slope_min = p.f64_key("slope_min");
    let slope_max = p.f64_key("slope_max");
    let slope_tol = p.f64_or("slope_tol", kind.map(default_slope_tol).unwrap_or(0.25));
    let ratio_min = p.f64_or("ratio_min", 1.0 / 3.0);
    let ratio_max = p.f64_or("ratio_max", 3.0);
    let out = p.take("out");

    // Unknown keys (everything not consumed above).
    for key in p.map.keys() {
        if !p.consumed.iter().any(|c| c == key) {
            p.violations.push(format!("unknown key `{}`", key));
        }
    }

    // Kind-specific completeness and admissibility. Each check mirrors the
    // hypothesis of the inequality the experiment measures.
    if let Some(k) = kind {
        let d = host.map(|h| h.ambient_dim()).unwrap_or(1);
        match k {
            Kind::Bernstein => match (s, m) {
                (None, _) => p
                    .violations
                    .push("kind `bernstein` requires `s` (numerator Sobolev order)".into()),
                (Some(sv), Some(mv)) => {
                    if !bernstein_admissible(sv, d, mv) {
                        p.violations.push(format!(
                            "Bernstein order s = {} is outside the admissible set for d = {}, \
                             m = {}: s must lie in (d/2, m] or in [0, ⌊m⌋]",
                            sv, d, mv
                        ));
                    }
                }
                _ => {}
            },
            Kind::Stability => match (s, m) {
                (None, _) => p
                    .violations
                    .push("kind `stability` requires `s` (numerator Sobolev order)".into()),
                (Some(sv), Some(mv)) => {
                    if !(sv >= 0.0 && sv <= mv.floor() + 1e-12) {
                        p.violations.push(format!(
                            "stability order s = {} must satisfy 0 ≤ s ≤ ⌊m⌋ = {}",
                            sv,
                            mv.floor()
                        ));
                    }
                }
                _ => {}
            },
            Kind::Sampling => match (s, m) {
                (None, _) => p.violations.push(
                    "kind `sampling` requires `s` (order of the sampled seminorm)".into(),
                ),
                (Some(sv), Some(mv)) => match sampling_order_limit(mv, d, source_p, target_q) {
                    Err(e) => p.violations.push(format!("sampling orders: {}", e)),
                    Ok(orders) => {
                        if !(sv >= 0.0 && sv <= orders.l as f64 + 1e-12) {
                            p.violations.push(format!(
                                "sampling order s = {} must satisfy 0 ≤ s ≤ l = {} (the \
                                 admissible derivative-order limit for m = {}, d = {}, p = {}, \
                                 q = {})",
                                sv,
                                orders.l,
                                mv,
                                d,
                                source_p.label(),
                                target_q.label()
                            ));
                        }
                    }
                },
                _ => {}
            },
            Kind::GnCheck => {
                if let Some(mv) = m {
                    if !(0.0 <= t && t < alpha && alpha < m_order && m_order <= mv + 1e-12) {
                        p.violations.push(format!(
                            "interpolation orders must satisfy 0 ≤ t < alpha < m_order ≤ m \
                             (got t = {}, alpha = {}, m_order = {}, m = {})",
                            t, alpha, m_order, mv
                        ));
                    }
                }
            }
            Kind::ManifoldBernstein => match (beta, m) {
                (None, _) => p.violations.push(
                    "kind `manifold-bernstein` requires `beta` (circle Sobolev order)".into(),
                ),
                (Some(bv), Some(mv)) => {
                    let tau = mv - 0.5;
                    if !manifold_bernstein_admissible(bv, tau) {
                        p.violations.push(format!(
                            "circle Bernstein order beta = {} is outside the admissible set for \
                             restricted-kernel smoothness τ = {}: beta must lie in (1/2, τ] or \
                             in [0, ⌊τ − 1/2⌋]",
                            bv, tau
                        ));
                    }
                }
                _ => {}
            },
            Kind::Equivalence => match (beta, m) {
                (None, _) => p.violations.push(
                    "kind `equivalence` requires `beta` (band/circle Sobolev order)".into(),
                ),
                (Some(bv), Some(mv)) => {
                    let cap = (mv - 1.0).floor();
                    if !(bv >= 0.0 && bv <= cap + 1e-12) {
                        p.violations.push(format!(
                            "the band norm equivalence for trial functions requires \
                             0 ≤ beta ≤ ⌊τ − 1/2⌋ = {} (τ = m − 1/2 = {}); got beta = {}",
                            cap,
                            mv - 0.5,
                            bv
                        ));
                    }
                    if !(c_delta > 0.0 && c_delta <= 2.0) {
                        p.violations.push(format!(
                            "key `c_delta`: the band factor must lie in (0, 2], got {}",
                            c_delta
                        ));
                    }
                }
                _ => {}
            },
            Kind::Poincare => {
                for &pv in &p_values {
                    if pv < 1.0 {
                        p.violations.push(format!(
                            "key `p_values`: the bound needs exponents p ≥ 1, got {}",
                            pv
                        ));
                    }
                }
                for &dv in &deltas {
                    if !(dv > 0.0 && dv < 1.0) {
                        p.violations.push(format!(
                            "key `deltas`: half-widths must lie in (0, 1), got {}",
                            dv
                        ));
                    }
                }
                if degree == 0 || degree > 12 {
                    p.violations.push(format!(
                        "key `degree`: polynomial degree must lie in 1..=12, got {}",
                        degree
                    ));
                }
            }
            Kind::Nikolskii | Kind::NativeInverse | Kind::ManifoldNikolskii => {}
        }

        if k.has_slope_band() {
            match (slope_min, slope_max) {
                (Some(lo), Some(hi)) => {
                    if !(lo <= hi) {
                        p.violations.push(format!(
                            "verdict band: slope_min = {} must not exceed slope_max = {}",
                            lo, hi
                        ));
                    }
                }
                _ => p.violations.push(format!(
                    "kind `{}` requires the verdict band keys `slope_min` and `slope_max`",
                    k.label()
                )),
            }
        }
        if k.has_slope_tolerance() && !(slope_tol > 0.0) {
            p.violations.push(format!(
                "key `slope_tol`: the boundedness tolerance must be positive, got {}",
                slope_tol
            ));
        }
        if k == Kind::Equivalence && !(ratio_min > 0.0 && ratio_min < ratio_max) {
            p.violations.push(format!(
                "equivalence ratio bounds need 0 < ratio_min < ratio_max, got [{}, {}]",
                ratio_min, ratio_max
            ));
        }
        if k.on_manifold() || k == Kind::ManifoldNikolskii {
            if !(6..=22).contains(&spectral_k) {
                p.violations.push(format!(
                    "key `spectral_k`: the circle sample exponent must lie in 6..=22, got {}",
                    spectral_k
                ));
            }
        }
        if k == Kind::Nikolskii && grid_factor < 8 {
            p.violations.push(format!(
                "key `grid_factor`: the sup-norm grid must be at least 8× denser than the \
                 node set, got factor {}",
                grid_factor
            ));
        }
        if k == Kind::Equivalence && !(1..=8).contains(&ambient_level) {
            p.violations.push(format!(
                "key `ambient_level`: the band quadrature level must lie in 1..=8, got {}",
                ambient_level
            ));
        }
        if matches!(k, Kind::Sampling | Kind::GnCheck | Kind::Equivalence) && draws == 0 {
            p.violations
                .push("key `draws`: at least one random trial function is required".into());
        }
        if k == Kind::Poincare && draws == 0 {
            p.violations
                .push("key `draws`: at least one random polynomial is required".into());
        }
    }

    if !p.violations.is_empty() {
        return Err(Error::Config(p.violations));
    }

    Ok(ExperimentConfig {
        kind: kind.expect("kind validated above"),
        host,
        m,
        levels,
        nodes,
        seed,
        s,
        beta,
        t,
        alpha,
        m_order,
        target_q,
        source_p,
        varrho,
        draws,
        c_delta,
        p_values,
        deltas,
        degree,
        spectral_k,
        ambient_level,
        rule_level,
        grid_factor,
        slope_min,
        slope_max,
        slope_tol,
        ratio_min,
        ratio_max,
        out,
        text: text.to_string(),
    })
}

impl ExperimentConfig {
    /// Canonical serialization: parsing the result reproduces the config.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut push = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        push("kind", self.kind.label().to_string());
        if let Some(h) = &self.host {
            match h {
                Host::Domain(dom) => match dom.shape {
                    crate::geometry::Shape::Interval { a, b } => {
                        push("domain", "interval".into());
                        push("a", format!("{}", a));
                        push("b", format!("{}", b));
                    }
                    crate::geometry::Shape::Box2 { x0, x1, y0, y1 } => {
                        push("domain", "box".into());
                        push("x0", format!("{}", x0));
                        push("x1", format!("{}", x1));
                        push("y0", format!("{}", y0));
                        push("y1", format!("{}", y1));
                    }
                    crate::geometry::Shape::Disk { cx, cy, radius } => {
                        push("domain", "disk".into());
                        push("cx", format!("{}", cx));
                        push("cy", format!("{}", cy));
                        push("radius", format!("{}", radius));
                    }
                    crate::geometry::Shape::Annulus { delta } => {
                        push("domain", "annulus".into());
                        push("band_delta", format!("{}", delta));
                    }
                },
                Host::Manifold(Manifold::Circle) => push("domain", "circle".into()),
            }
        }
        if let Some(m) = self.m {
            push("m", format!("{}", m));
        }
        if !self.levels.is_empty() {
            push(
                "levels",
                self.levels
                    .iter()
                    .map(|l| l.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            );
        }
        push("nodes", self.nodes.label().to_string());
        push("seed", format!("{}", self.seed));
        if let Some(s) = self.s {
            push("s", format!("{}", s));
        }
        if let Some(beta) = self.beta {
            push("beta", format!("{}", beta));
        }
        match self.kind {
            Kind::GnCheck => {
                push("t", format!("{}", self.t));
                push("alpha", format!("{}", self.alpha));
                push("m_order", format!("{}", self.m_order));
            }
            Kind::Sampling => {
                push("target_q", self.target_q.label().to_string());
                push("source_p", self.source_p.label().to_string());
                push("varrho", self.varrho.label().to_string());
            }
            Kind::Equivalence => {
                push("c_delta", format!("{}", self.c_delta));
                push("ambient_level", format!("{}", self.ambient_level));
            }
            Kind::Poincare => {
                push(
                    "p_values",
                    self.p_values
                        .iter()
                        .map(|v| v.to_string())
                        .collect::<Vec<_>>()
                        .join(","),
                );
                push(
                    "deltas",
                    self.deltas
                        .iter()
                        .map(|v| v.to_string())
                        .collect::<Vec<_>>()
                        .join(","),
                );
                push("degree", format!("{}", self.degree));
            }
            _ => {}
        }
        if matches!(
            self.kind,
            Kind::Sampling | Kind::GnCheck | Kind::Equivalence | Kind::Poincare
        ) {
            push("draws", format!("{}", self.draws));
        }
        if self.kind.on_manifold() {
            push("spectral_k", format!("{}", self.spectral_k));
        }
        if let Some(rl) = self.rule_level {
            push("rule_level", format!("{}", rl));
        }
        if self.kind == Kind::Nikolskii {
            push("grid_factor", format!("{}", self.grid_factor));
        }
        if let (Some(lo), Some(hi)) = (self.slope_min, self.slope_max) {
            push("slope_min", format!("{}", lo));
            push("slope_max", format!("{}", hi));
        }
        if self.kind.has_slope_tolerance() {
            push("slope_tol", format!("{}", self.slope_tol));
        }
        if self.kind == Kind::Equivalence {
            push("ratio_min", format!("{}", self.ratio_min));
            push("ratio_max", format!("{}", self.ratio_max));
        }
        if let Some(out_dir) = &self.out {
            push("out", out_dir.clone());
        }
        out
    }
}
