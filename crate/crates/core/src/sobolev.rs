//! Sobolev norms and the Gram matrices that turn norm extremization over a
//! trial space into finite eigenproblems.
//!
//! Integer-order seminorms are assembled by quadrature on kernel-derivative
//! tables; fractional orders add a Gagliardo double integral over a pair of
//! offset grids; on the circle, norms are computed spectrally from FFT
//! coefficients of sampled functions (an equivalent norm to the atlas
//! construction — reports label the calibration).
//!
//! Every assembly accepts an optional whitener: the lower Cholesky factor C
//! of the kernel Gram Φ = CCᵀ. With it, tables of the kernel translates are
//! converted row-by-row into tables of the whitened (Newton) basis, and the
//! returned Gram is the congruence C⁻¹GC⁻ᵀ — same pencil eigenvalues, vastly
//! better conditioning.

use crate::error::{Error, Result};
use crate::geometry::Host;
use crate::kernels::TrialSpace;
use crate::linalg::{
    accumulate_atb, accumulate_ddt, mirror_upper, solve_lower_rows_inplace, tree_sum, Mat,
};
use crate::quadrature::{offset_rule, Lq, Rule};
use crate::scalar::Real;
use rayon::prelude::*;

/// Quadrature nodes processed per assembly chunk (fixed for determinism).
const CHUNK: usize = 2048;

/// Node ceiling per grid for planar Gagliardo double integrals (O(Q²) cost).
const GAGLIARDO_2D_CAP: usize = 4_000;

/// Whether a Gram carries a full norm or a seminorm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GramKind {
    FullNorm,
    Seminorm,
}

/// A Sobolev Gram matrix over a trial space basis (translate basis, or the
/// whitened basis when a whitener was supplied at assembly).
#[derive(Debug, Clone)]
pub struct SobolevGram<T> {
    pub s: T,
    pub kind: GramKind,
    pub mat: Mat<T>,
    /// Product measure dropped by the Gagliardo near-diagonal policy
    /// (zero for purely integer-order assemblies).
    pub dropped_measure: T,
}

/// Multi-indices of total order `k` in `dim` variables.
fn multi_indices(dim: usize, k: usize) -> Vec<Vec<usize>> {
    match dim {
        1 => vec![vec![k]],
        2 => (0..=k).map(|a| vec![k - a, a]).collect(),
        _ => unreachable!(),
    }
}

/// Split a real order into integer and fractional parts, snapping within
/// 1e-9 of an integer.
pub fn split_order<T: Real>(s: T) -> (usize, T) {
    let s64 = s.as_f64();
    let k = s64.floor();
    let t = s64 - k;
    if t < 1e-9 {
        (k as usize, T::zero())
    } else if t > 1.0 - 1e-9 {
        (k as usize + 1, T::zero())
    } else {
        (k as usize, T::of(t))
    }
}

// ---------------------------------------------------------------------------
// Integer-order seminorm Grams
// ---------------------------------------------------------------------------

/// Seminorm Gram of integer order k:
/// `(G_k)_{jl} = Σ_{|α|=k} ∫ D^α φ_j · D^α φ_l`, by quadrature.
pub fn integer_seminorm_gram<T: Real>(
    space: &TrialSpace<T>,
    k: usize,
    rule: &Rule<T>,
    whitener: Option<&Mat<T>>,
) -> Result<SobolevGram<T>> {
    if matches!(rule.host(), Host::Manifold(_)) && k > 0 {
        // Ambient partial derivatives integrated over the manifold are not
        // intrinsic derivatives; positive orders on the circle go through the
        // spectral path. (Ambient norms of circle-node spaces over planar
        // hosts, e.g. a band annulus, are fine and use this assembly.)
        return Err(Error::InvalidArgument(
            "positive-order norms on the circle go through the spectral path".into(),
        ));
    }
    let n = space.dim();
    let mut g = Mat::zeros(n, n);
    for alpha in multi_indices(space.kernel().dim(), k) {
        accumulate_table_gram(&mut g, space, &alpha, rule, whitener)?;
    }
    mirror_upper(&mut g);
    Ok(SobolevGram {
        s: T::of_usize(k),
        kind: GramKind::Seminorm,
        mat: g,
        dropped_measure: T::zero(),
    })
}

/// Stream one derivative table through whitening, √weight scaling, and
/// symmetric accumulation. Chunk boundaries are fixed, so results are
/// independent of thread count.
fn accumulate_table_gram<T: Real>(
    g: &mut Mat<T>,
    space: &TrialSpace<T>,
    alpha: &[usize],
    rule: &Rule<T>,
    whitener: Option<&Mat<T>>,
) -> Result<()> {
    let dim = rule.dim();
    let q = rule.len();
    let mut start = 0;
    while start < q {
        let end = (start + CHUNK).min(q);
        let pts = &rule.nodes_flat()[start * dim..end * dim];
        let mut table = space.kernel().eval_table(alpha, pts, space.nodes())?;
        if let Some(l) = whitener {
            solve_lower_rows_inplace(l, &mut table);
        }
        for (row, &w) in table.rows_mut_iter().zip(&rule.weights()[start..end]) {
            let sw = w.sqrt();
            for v in row.iter_mut() {
                *v *= sw;
            }
        }
        let d = table.transposed();
        accumulate_ddt(g, &d);
        start = end;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Gagliardo fractional seminorm
// ---------------------------------------------------------------------------

/// Masked pair weight `w_a w_b / ‖x-y‖^{d+2t}`, zero within ε of the
/// diagonal. Specialized fast paths cover the shipped integer exponents.
struct PairKernel<T> {
    eps_sq: T,
    exponent: f64,
}

impl<T: Real> PairKernel<T> {
    #[inline]
    fn inv_dist_pow(&self, d_sq: T) -> T {
        if d_sq < self.eps_sq {
            return T::zero();
        }
        if self.exponent == 2.0 {
            T::one() / d_sq
        } else if self.exponent == 3.0 {
            T::one() / (d_sq * d_sq.sqrt())
        } else {
            d_sq.powf(T::of(-self.exponent / 2.0))
        }
    }
}

/// Fractional seminorm Gram of order k + t via the Gagliardo double
/// integral over a base/offset rule pair:
/// `(G)_{jl} = Σ_{|α|=k} ∬ (D^αφ_j(x)-D^αφ_j(y))(D^αφ_l(x)-D^αφ_l(y)) /
/// ‖x-y‖^{d+2t} dx dy`, with pairs closer than one panel width dropped and
/// the dropped product measure reported.
pub fn gagliardo_seminorm_gram<T: Real>(
    space: &TrialSpace<T>,
    k: usize,
    t: T,
    rule: &Rule<T>,
    offset: &Rule<T>,
    whitener: Option<&Mat<T>>,
) -> Result<SobolevGram<T>> {
    if !(t > T::zero() && t < T::one()) {
        return Err(Error::InadmissibleOrder(format!(
            "fractional part t must lie strictly in (0,1), got {}",
            t
        )));
    }
    if matches!(rule.host(), Host::Manifold(_)) {
        return Err(Error::InvalidArgument(
            "fractional norms on the circle go through the spectral path".into(),
        ));
    }
    let m: T = space.kernel().m();
    if T::of_usize(k) + t > m + T::of(1e-12) {
        return Err(Error::InadmissibleOrder(format!(
            "order {} + {} exceeds the kernel smoothness {}",
            k, t, m
        )));
    }
    let d = rule.dim();
    if d == 2 && rule.len().max(offset.len()) > GAGLIARDO_2D_CAP {
        return Err(Error::InvalidArgument(format!(
            "planar Gagliardo grids are capped at {} nodes per grid (got {}); \
             use a coarser rule level",
            GAGLIARDO_2D_CAP,
            rule.len().max(offset.len())
        )));
    }
    let n = space.dim();
    let eps = rule.panel_width().max(offset.panel_width());
    let pk = PairKernel {
        eps_sq: eps * eps,
        exponent: d as f64 + 2.0 * t.as_f64(),
    };

    let mut g = Mat::zeros(n, n);
    let mut dropped_total = T::zero();
    for alpha in multi_indices(d, k) {
        let mut ta = space
            .kernel()
            .eval_table(&alpha, rule.nodes_flat(), space.nodes())?;
        let mut tb = space
            .kernel()
            .eval_table(&alpha, offset.nodes_flat(), space.nodes())?;
        if let Some(l) = whitener {
            solve_lower_rows_inplace(l, &mut ta);
            solve_lower_rows_inplace(l, &mut tb);
        }
        let (ra, rb, mix, dropped) = pair_weights_and_mix(rule, offset, &tb, &pk);
        dropped_total += dropped;

        // G_α = TAᵀ diag(ra) TA + TBᵀ diag(rb) TB − S − Sᵀ, S = TAᵀ (W TB).
        let g1 = scaled_self_product(&ta, &ra);
        let g2 = scaled_self_product(&tb, &rb);
        let mut s = Mat::zeros(n, n);
        let mut start = 0;
        while start < rule.len() {
            let end = (start + CHUNK).min(rule.len());
            let at = submatrix_transposed(&ta, start, end);
            let bt = submatrix_transposed(&mix, start, end);
            accumulate_atb(&mut s, &at, &bt);
            start = end;
        }
        for i in 0..n {
            for j in 0..n {
                *g.at_mut(i, j) += g1.at(i, j) + g2.at(i, j) - s.at(i, j) - s.at(j, i);
            }
        }
    }
    g.symmetrize();
    Ok(SobolevGram {
        s: T::of_usize(k) + t,
        kind: GramKind::Seminorm,
        mat: g,
        dropped_measure: dropped_total,
    })
}

/// For each base node x: the total masked pair weight ra(x) = Σ_y w(x,y),
/// the mixed rows (W·TB)(x) = Σ_y w(x,y)·TB_y, and symmetrically rb(y);
/// plus the dropped product measure. Parallel over fixed base-node blocks
/// with an ordered merge, so every sum has a fixed association order.
fn pair_weights_and_mix<T: Real>(
    rule: &Rule<T>,
    offset: &Rule<T>,
    tb: &Mat<T>,
    pk: &PairKernel<T>,
) -> (Vec<T>, Vec<T>, Mat<T>, T) {
    let qa = rule.len();
    let qb = offset.len();
    let n = tb.cols();
    let dim = rule.dim();
    let blocks: Vec<(usize, usize)> = (0..qa)
        .step_by(512)
        .map(|s| (s, (s + 512).min(qa)))
        .collect();

    struct BlockOut<T> {
        start: usize,
        ra: Vec<T>,
        rb: Vec<T>,
        mix: Mat<T>,
        dropped: T,
    }

    let outs: Vec<BlockOut<T>> = blocks
        .par_iter()
        .map(|&(start, end)| {
            let mut ra = vec![T::zero(); end - start];
            let mut rb = vec![T::zero(); qb];
            let mut mix = Mat::zeros(end - start, n);
            let mut dropped = T::zero();
            let mut wrow = vec![T::zero(); qb];
            for x in start..end {
                let px = rule.node(x);
                let wx = rule.weights()[x];
                let mut rax = T::zero();
                for y in 0..qb {
                    let py = offset.node(y);
                    let mut d_sq = T::zero();
                    for c in 0..dim {
                        let d = px[c] - py[c];
                        d_sq += d * d;
                    }
                    let wy = offset.weights()[y];
                    let inv = pk.inv_dist_pow(d_sq);
                    if inv == T::zero() {
                        dropped += wx * wy;
                        wrow[y] = T::zero();
                    } else {
                        let w = wx * wy * inv;
                        wrow[y] = w;
                        rax += w;
                        rb[y] += w;
                    }
                }
                ra[x - start] = rax;
                let mrow = mix.row_mut(x - start);
                for y in 0..qb {
                    let w = wrow[y];
                    if w != T::zero() {
                        let brow = tb.row(y);
                        for (m, &b) in mrow.iter_mut().zip(brow) {
                            *m += w * b;
                        }
                    }
                }
            }
            BlockOut {
                start,
                ra,
                rb,
                mix,
                dropped,
            }
        })
        .collect();

    // Ordered merge: blocks arrive in index order from the ordered collect.
    let mut ra = vec![T::zero(); qa];
    let mut rb = vec![T::zero(); qb];
    let mut mix = Mat::zeros(qa, n);
    let mut dropped = T::zero();
    for b in outs {
        ra[b.start..b.start + b.ra.len()].copy_from_slice(&b.ra);
        for (acc, v) in rb.iter_mut().zip(&b.rb) {
            *acc += *v;
        }
        for i in 0..b.mix.rows() {
            mix.row_mut(b.start + i).copy_from_slice(b.mix.row(i));
        }
        dropped += b.dropped;
    }
    (ra, rb, mix, dropped)
}

/// `Tᵀ diag(r) T` assembled in weight-scaled chunks.
fn scaled_self_product<T: Real>(table: &Mat<T>, r: &[T]) -> Mat<T> {
    let n = table.cols();
    let mut g = Mat::zeros(n, n);
    let mut start = 0;
    while start < table.rows() {
        let end = (start + CHUNK).min(table.rows());
        let mut chunk = Mat::zeros(end - start, n);
        for i in start..end {
            let sw = r[i].sqrt();
            for (dst, &src) in chunk.row_mut(i - start).iter_mut().zip(table.row(i)) {
                *dst = sw * src;
            }
        }
        let d = chunk.transposed();
        accumulate_ddt(&mut g, &d);
        start = end;
    }
    mirror_upper(&mut g);
    g
}

/// Transpose rows `start..end` of a table into an `n × B` chunk.
fn submatrix_transposed<T: Real>(table: &Mat<T>, start: usize, end: usize) -> Mat<T> {
    let n = table.cols();
    let mut out = Mat::zeros(n, end - start);
    for i in start..end {
        let row = table.row(i);
        for j in 0..n {
            *out.at_mut(j, i - start) = row[j];
        }
    }
    out
}

/// Gagliardo seminorm² of a plain evaluable function, from its values on the
/// base grid (`fa`) and offset grid (`fb`). Returns (seminorm², dropped
/// product measure). This is the evaluable test path; trial spaces use
/// [`gagliardo_seminorm_gram`].
pub fn gagliardo_value_sq<T: Real>(
    rule: &Rule<T>,
    offset: &Rule<T>,
    fa: &[T],
    fb: &[T],
    t: T,
) -> Result<(T, T)> {
    if !(t > T::zero() && t < T::one()) {
        return Err(Error::InadmissibleOrder(format!(
            "fractional part t must lie strictly in (0,1), got {}",
            t
        )));
    }
    assert_eq!(fa.len(), rule.len());
    assert_eq!(fb.len(), offset.len());
    let d = rule.dim();
    let eps = rule.panel_width().max(offset.panel_width());
    let pk = PairKernel {
        eps_sq: eps * eps,
        exponent: d as f64 + 2.0 * t.as_f64(),
    };
    let qa = rule.len();
    let qb = offset.len();
    let dim = d;
    let blocks: Vec<(usize, usize)> = (0..qa)
        .step_by(512)
        .map(|s| (s, (s + 512).min(qa)))
        .collect();
    let partials: Vec<(T, T)> = blocks
        .par_iter()
        .map(|&(start, end)| {
            let mut tot = T::zero();
            let mut dropped = T::zero();
            for x in start..end {
                let px = rule.node(x);
                let wx = rule.weights()[x];
                let fx = fa[x];
                for y in 0..qb {
                    let py = offset.node(y);
                    let mut d_sq = T::zero();
                    for c in 0..dim {
                        let dc = px[c] - py[c];
                        d_sq += dc * dc;
                    }
                    let wy = offset.weights()[y];
                    let inv = pk.inv_dist_pow(d_sq);
                    if inv == T::zero() {
                        dropped += wx * wy;
                    } else {
                        let df = fx - fb[y];
                        tot += wx * wy * inv * df * df;
                    }
                }
            }
            (tot, dropped)
        })
        .collect();
    let tots: Vec<T> = partials.iter().map(|p| p.0).collect();
    let drops: Vec<T> = partials.iter().map(|p| p.1).collect();
    Ok((tree_sum(&tots), tree_sum(&drops)))
}

// ---------------------------------------------------------------------------
// Full H^s norm Grams
// ---------------------------------------------------------------------------

/// Full-norm Gram for real order `0 ≤ s ≤ m`: the sum of the integer
/// seminorm Grams up to ⌊s⌋, plus (for fractional s) the Gagliardo term on
/// the order-⌊s⌋ derivatives over an internally built offset rule.
pub fn h_norm_gram<T: Real>(
    space: &TrialSpace<T>,
    s: T,
    rule: &Rule<T>,
    whitener: Option<&Mat<T>>,
) -> Result<SobolevGram<T>> {
    let m: T = space.kernel().m();
    if s < T::zero() || s > m + T::of(1e-12) {
        return Err(Error::InadmissibleOrder(format!(
            "norm order {} outside [0, m] with kernel smoothness m = {}",
            s, m
        )));
    }
    let (k, t) = split_order(s);
    let mut g = integer_seminorm_gram(space, 0, rule, whitener)?;
    for j in 1..=k {
        let gj = integer_seminorm_gram(space, j, rule, whitener)?;
        add_into(&mut g.mat, &gj.mat);
    }
    let mut dropped = T::zero();
    if t > T::zero() {
        let off = offset_rule(*rule.host(), rule.level())?;
        let frac = gagliardo_seminorm_gram(space, k, t, rule, &off, whitener)?;
        add_into(&mut g.mat, &frac.mat);
        dropped = frac.dropped_measure;
    }
    Ok(SobolevGram {
        s,
        kind: GramKind::FullNorm,
        mat: g.mat,
        dropped_measure: dropped,
    })
}

fn add_into<T: Real>(a: &mut Mat<T>, b: &Mat<T>) {
    for (x, y) in a.data_mut().iter_mut().zip(b.data()) {
        *x += *y;
    }
}

/// Seminorm Gram of real order `s = k + t`: the integer-order Gram when
/// `t = 0`, otherwise the Gagliardo Gram on the order-k derivatives over an
/// internally built offset rule.
pub fn seminorm_gram<T: Real>(
    space: &TrialSpace<T>,
    s: T,
    rule: &Rule<T>,
    whitener: Option<&Mat<T>>,
) -> Result<SobolevGram<T>> {
    if s < T::zero() {
        return Err(Error::InadmissibleOrder(
            "seminorm order must be nonnegative".into(),
        ));
    }
    let (k, t) = split_order(s);
    if t == T::zero() {
        integer_seminorm_gram(space, k, rule, whitener)
    } else {
        let off = offset_rule(*rule.host(), rule.level())?;
        gagliardo_seminorm_gram(space, k, t, rule, &off, whitener)
    }
}

// ---------------------------------------------------------------------------
// Circle spectral norms
// ---------------------------------------------------------------------------

/// In-place radix-2 complex FFT (decimation in time). Twiddles are computed
/// directly per butterfly stage from sin/cos, keeping accuracy at machine
/// precision for the shipped sizes.
fn fft_inplace<T: Real>(re: &mut [T], im: &mut [T]) {
    let n = re.len();
    debug_assert!(n.is_power_of_two());
    debug_assert_eq!(n, im.len());
    // Bit-reversal permutation.
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            re.swap(i, j);
            im.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let base = -T::of(2.0) * T::PI() / T::of_usize(len);
        // Direct twiddle evaluation per index: no recurrence drift.
        let tw: Vec<(T, T)> = (0..half)
            .map(|k| {
                let a = base * T::of_usize(k);
                (a.cos(), a.sin())
            })
            .collect();
        let mut start = 0;
        while start < n {
            for k in 0..half {
                let (cr, ci) = tw[k];
                let u = start + k;
                let v = u + half;
                let tr = re[v] * cr - im[v] * ci;
                let ti = re[v] * ci + im[v] * cr;
                re[v] = re[u] - tr;
                im[v] = im[u] - ti;
                re[u] += tr;
                im[u] += ti;
            }
            start += len;
        }
        len <<= 1;
    }
}

/// Signed frequency of DFT bin k for size n.
#[inline]
fn signed_freq(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Spectral Sobolev norm of order β ≥ 0 on the circle from equispaced
/// samples: `(2π/S² · Σ_k (1+k'²)^β |û_k|²)^{1/2}` with û the DFT and k' the
/// signed frequency. At β = 0 this is exactly the S-point trapezoid L₂(S¹)
/// norm (discrete Parseval). Errors when the top-quarter spectrum carries
/// more than 1e-8 of the weighted energy (under-resolved samples).
pub fn circle_spectral_norm<T: Real>(samples: &[T], beta: T) -> Result<T> {
    let s = samples.len();
    if !s.is_power_of_two() || s < 64 {
        return Err(Error::InvalidArgument(format!(
            "spectral norm needs a power-of-two sample count ≥ 64, got {}",
            s
        )));
    }
    if beta < T::zero() {
        return Err(Error::InadmissibleOrder(
            "spectral norm order must be nonnegative".into(),
        ));
    }
    let mut re = samples.to_vec();
    let mut im = vec![T::zero(); s];
    fft_inplace(&mut re, &mut im);
    let mut total = T::zero();
    let mut tail = T::zero();
    let quarter = (s / 4) as i64;
    for k in 0..s {
        let kf = signed_freq(k, s);
        let k2 = T::of((kf * kf) as f64);
        let e = (T::one() + k2).powf(beta) * (re[k] * re[k] + im[k] * im[k]);
        total += e;
        if kf.abs() > quarter {
            tail += e;
        }
    }
    if total > T::zero() && tail / total > T::of(1e-8) {
        return Err(Error::UnderResolved {
            fraction: (tail / total).as_f64(),
        });
    }
    let fac = T::of(2.0) * T::PI() / T::of_usize(s * s);
    Ok((fac * total).sqrt())
}

/// Spectral H^β Gram of a circle trial space from 2^K equispaced samples of
/// the basis translates (whitened first when a whitener is given). The same
/// under-resolution guard as [`circle_spectral_norm`] applies to the pooled
/// basis spectrum.
pub fn circle_sobolev_gram<T: Real>(
    space: &TrialSpace<T>,
    beta: T,
    big_k: u32,
    whitener: Option<&Mat<T>>,
) -> Result<SobolevGram<T>> {
    if !space.on_circle() {
        return Err(Error::InvalidArgument(
            "spectral Grams are defined for circle trial spaces".into(),
        ));
    }
    if beta < T::zero() {
        return Err(Error::InadmissibleOrder(
            "spectral norm order must be nonnegative".into(),
        ));
    }
    if big_k < 6 {
        return Err(Error::InvalidArgument(
            "spectral sampling needs at least 2^6 points (K ≥ 6)".into(),
        ));
    }
    let s = 1usize << big_k;
    let n = space.dim();
    // Values table: row per sample angle, column per basis translate.
    let mut table = sample_translate_table(space, s);
    if let Some(l) = whitener {
        solve_lower_rows_inplace(l, &mut table);
    }
    // FFT each basis function's samples: work on the transpose.
    let basis = table.transposed();
    let mut spectra_re = Mat::zeros(n, s);
    let mut spectra_im = Mat::zeros(n, s);
    for (j, (rr, ri)) in spectra_re
        .rows_mut_iter()
        .zip(spectra_im.rows_mut_iter())
        .enumerate()
    {
        rr.copy_from_slice(basis.row(j));
        fft_inplace(rr, ri);
    }

    // Frequency weights and the pooled aliasing guard.
    let fac = T::of(2.0) * T::PI() / T::of_usize(s * s);
    let mut total = T::zero();
    let mut tail = T::zero();
    let quarter = (s / 4) as i64;
    let weights: Vec<T> = (0..s)
        .map(|k| {
            let kf = signed_freq(k, s);
            let k2 = T::of((kf * kf) as f64);
            fac * (T::one() + k2).powf(beta)
        })
        .collect();
    for j in 0..n {
        for k in 0..s {
            let p = spectra_re.at(j, k) * spectra_re.at(j, k)
                + spectra_im.at(j, k) * spectra_im.at(j, k);
            let e = weights[k] * p;
            total += e;
            if signed_freq(k, s).abs() > quarter {
                tail += e;
            }
        }
    }
    if total > T::zero() && tail / total > T::of(1e-8) {
        return Err(Error::UnderResolved {
            fraction: (tail / total).as_f64(),
        });
    }

    // Real feature matrix D (n × 2S): G = D Dᵀ = Σ_k w_k û û*.
    let mut d = Mat::zeros(n, 2 * s);
    for j in 0..n {
        let row = d.row_mut(j);
        for k in 0..s {
            let sw = weights[k].sqrt();
            row[2 * k] = sw * spectra_re.at(j, k);
            row[2 * k + 1] = sw * spectra_im.at(j, k);
        }
    }
    let mut g = Mat::zeros(n, n);
    accumulate_ddt(&mut g, &d);
    mirror_upper(&mut g);
    Ok(SobolevGram {
        s: beta,
        kind: GramKind::FullNorm,
        mat: g,
        dropped_measure: T::zero(),
    })
}

/// Values of every basis translate at 2^K equispaced angles (S × n).
fn sample_translate_table<T: Real>(space: &TrialSpace<T>, s: usize) -> Mat<T> {
    let angles = space.nodes().angles();
    let n = angles.len();
    let mut table = Mat::zeros(s, n);
    let dt = T::of(2.0) * T::PI() / T::of_usize(s);
    for (i, row) in table.rows_mut_iter().enumerate() {
        let theta = dt * T::of_usize(i);
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = space.kernel().eval_chordal(theta, angles[j]);
        }
    }
    table
}

// ---------------------------------------------------------------------------
// Trial-function evaluation helpers (for the residual-style estimators)
// ---------------------------------------------------------------------------

/// Values of D^α u at a flat point buffer, where u has the given coefficients
/// in the translate basis (whitener = None) or the whitened basis.
pub fn trial_derivative_values<T: Real>(
    space: &TrialSpace<T>,
    coeffs: &[T],
    alpha: &[usize],
    pts: &[T],
    whitener: Option<&Mat<T>>,
) -> Result<Vec<T>> {
    let dim = space.kernel().dim();
    let q = pts.len() / dim;
    let mut out = Vec::with_capacity(q);
    let mut start = 0;
    while start < q {
        let end = (start + CHUNK).min(q);
        let mut table = space
            .kernel()
            .eval_table(alpha, &pts[start * dim..end * dim], space.nodes())?;
        if let Some(l) = whitener {
            solve_lower_rows_inplace(l, &mut table);
        }
        for i in 0..(end - start) {
            out.push(crate::linalg::dot(table.row(i), coeffs));
        }
        start = end;
    }
    Ok(out)
}

/// Weighted L_q norm of the order-s gradient stack of a trial function:
/// finite q gives `(Σ_{|α|=s} ‖D^α u‖_q^q)^{1/q}`, q = ∞ the max over α of
/// dense-grid maxima.
pub fn trial_seminorm_lq<T: Real>(
    space: &TrialSpace<T>,
    coeffs: &[T],
    s: usize,
    rule: &Rule<T>,
    q: Lq,
    whitener: Option<&Mat<T>>,
) -> Result<T> {
    let alphas = multi_indices(space.kernel().dim(), s);
    match q {
        Lq::Inf => {
            let floor = match rule.host() {
                Host::Manifold(_) => 16_384,
                Host::Domain(_) => 65_536,
            };
            let grid = crate::geometry::candidate_grid(rule.host(), (4 * rule.len()).max(floor));
            let mut best = T::zero();
            for alpha in &alphas {
                let vals = trial_derivative_values(space, coeffs, alpha, &grid, whitener)?;
                for v in vals {
                    best = best.max(v.abs());
                }
            }
            Ok(best)
        }
        Lq::One => {
            let mut acc = T::zero();
            for alpha in &alphas {
                let vals =
                    trial_derivative_values(space, coeffs, alpha, rule.nodes_flat(), whitener)?;
                let terms: Vec<T> = vals
                    .iter()
                    .zip(rule.weights())
                    .map(|(v, &w)| w * v.abs())
                    .collect();
                acc += tree_sum(&terms);
            }
            Ok(acc)
        }
        Lq::Two => {
            let mut acc = T::zero();
            for alpha in &alphas {
                let vals =
                    trial_derivative_values(space, coeffs, alpha, rule.nodes_flat(), whitener)?;
                let terms: Vec<T> = vals
                    .iter()
                    .zip(rule.weights())
                    .map(|(v, &w)| w * *v * *v)
                    .collect();
                acc += tree_sum(&terms);
            }
            Ok(acc.sqrt())
        }
    }
}
