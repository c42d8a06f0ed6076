//! Lyapunov exponents, Oseledec directions, truncated Lyapunov norms and
//! stopping times for random compositions.

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cocycle::{
    cocycle_derivative, derive_seed, line_angle, line_distance, sample_word, DrivingMeasure, IntMat2, MapSpec,
    OrbitWindow, RealMat2, ScaledMat2, TorusPoint, Word,
};
use crate::cones::{real_eigen, Eigenvalues};
use crate::error::{Error, Result};

/// Steps discarded before exponent accumulation.
pub const BURN_IN: usize = 1000;
/// Number of batches for the batch-means standard error.
pub const BATCHES: usize = 20;
/// Default truncation window of the Lyapunov norms.
pub const DEFAULT_WINDOW: usize = 50;
/// Singular-value ratio below which a direction estimate is unreliable.
pub const MIN_SINGULAR_RATIO: f64 = 2.0;
/// Largest accepted angle change between horizons `N − 10` and `N`.
pub const MAX_DIRECTION_GAP: f64 = 1e-3;

/// Fixed generic start direction for projective iteration.
const START_ANGLE: f64 = 0.412_345_678_9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub lambda_u: f64,
    pub lambda_s: f64,
    pub stderr_u: f64,
    pub n_steps: usize,
    pub mean_log_det: f64,
}

/// `min{1, λᵘ/200, −λˢ/200} / 2`.
pub fn default_epsilon0(lambda_u: f64, lambda_s: f64) -> f64 {
    0.5 * 1f64.min(lambda_u / 200.0).min(-lambda_s / 200.0)
}

fn batch_stderr(batch_sums: &[f64], batch_len: usize) -> f64 {
    let k = batch_sums.len() as f64;
    let means: Vec<f64> = batch_sums.iter().map(|s| s / batch_len as f64).collect();
    let mean = means.iter().sum::<f64>() / k;
    let var = means.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / (k - 1.0);
    (var / k).sqrt()
}

fn iterate_exponent<F>(n: usize, v0: [f64; 2], mut step: F) -> Result<LyapunovEstimate>
where
    F: FnMut(usize) -> Result<RealMat2>,
{
    let r0 = v0[0].hypot(v0[1]);
    if !(r0 > 0.0) || !r0.is_finite() {
        return Err(Error::PreconditionFail("start vector must be nonzero".into()));
    }
    let mut v = [v0[0] / r0, v0[1] / r0];
    let batch_len = n / BATCHES;
    let mut batches = vec![0.0; BATCHES];
    let (mut sum, mut sum_det) = (0.0, 0.0);
    for k in 0..BURN_IN + n {
        let d = step(k)?;
        let w = d.apply(v);
        let r = w[0].hypot(w[1]);
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::Degenerate(format!("step norm {r} at step {k}")));
        }
        v = [w[0] / r, w[1] / r];
        if k >= BURN_IN {
            let i = k - BURN_IN;
            let lr = r.ln();
            sum += lr;
            sum_det += d.det().abs().ln();
            if i < batch_len * BATCHES {
                batches[i / batch_len] += lr;
            }
        }
    }
    let lambda_u = sum / n as f64;
    let mean_log_det = sum_det / n as f64;
    Ok(LyapunovEstimate {
        lambda_u,
        lambda_s: mean_log_det - lambda_u,
        stderr_u: batch_stderr(&batches, batch_len),
        n_steps: n,
        mean_log_det,
    })
}

/// Bit length above which the exact iteration drops low-order bits.
const EXACT_CAP_BITS: u64 = 1 << 16;

fn big_log_norm(x: &BigInt, y: &BigInt) -> f64 {
    let bits = x.bits().max(y.bits());
    let shift = bits.saturating_sub(60);
    let xf = (x >> shift).to_f64().unwrap_or(0.0);
    let yf = (y >> shift).to_f64().unwrap_or(0.0);
    xf.hypot(yf).ln() + shift as f64 * std::f64::consts::LN_2
}

/// Projective iteration of integer matrices on a big-integer vector.
///
/// Float iteration cannot follow products such as `A^{S_n}` with `S_n` a
/// random walk: once the contracted component drops below rounding it is
/// lost, and the return leg re-expands rounding noise. Here low bits are only
/// dropped once the vector exceeds [`EXACT_CAP_BITS`] bits.
fn iterate_exponent_exact<F>(n: usize, v0: [f64; 2], mut step: F) -> Result<LyapunovEstimate>
where
    F: FnMut(usize) -> IntMat2,
{
    let r0 = v0[0].hypot(v0[1]);
    if !(r0 > 0.0) || !r0.is_finite() {
        return Err(Error::PreconditionFail("start vector must be nonzero".into()));
    }
    let scale = (1u64 << 60) as f64;
    let mut x = BigInt::from((v0[0] / r0 * scale).round() as i64);
    let mut y = BigInt::from((v0[1] / r0 * scale).round() as i64);
    let mut dropped = 0u64;
    let log_norm = |x: &BigInt, y: &BigInt, dropped: u64| big_log_norm(x, y) + dropped as f64 * std::f64::consts::LN_2;
    let batch_len = n / BATCHES;
    let mut marks = Vec::with_capacity(BATCHES + 1);
    let mut start = 0.0;
    let mut sum_det = 0.0;
    for k in 0..BURN_IN + n {
        if k == BURN_IN {
            start = log_norm(&x, &y, dropped);
        }
        if k >= BURN_IN && (k - BURN_IN).is_multiple_of(batch_len) && marks.len() <= BATCHES {
            marks.push(log_norm(&x, &y, dropped));
        }
        let m = step(k);
        let nx = &x * m.a + &y * m.b;
        let ny = &x * m.c + &y * m.d;
        x = nx;
        y = ny;
        if x.bits().max(y.bits()) > EXACT_CAP_BITS {
            let cut = x.bits().max(y.bits()) - EXACT_CAP_BITS / 2;
            x >>= cut;
            y >>= cut;
            dropped += cut;
        }
        if x.bits() == 0 && y.bits() == 0 {
            return Err(Error::Degenerate(format!("vector vanished at step {k}")));
        }
        if k >= BURN_IN {
            sum_det += (m.det().abs() as f64).ln();
        }
    }
    if marks.len() <= BATCHES {
        marks.push(log_norm(&x, &y, dropped));
    }
    let end = log_norm(&x, &y, dropped);
    let batches: Vec<f64> = marks.windows(2).map(|p| p[1] - p[0]).collect();
    let lambda_u = (end - start) / n as f64;
    let mean_log_det = sum_det / n as f64;
    Ok(LyapunovEstimate {
        lambda_u,
        lambda_s: mean_log_det - lambda_u,
        stderr_u: batch_stderr(&batches, batch_len),
        n_steps: n,
        mean_log_det,
    })
}

/// True when every map charged by `nu` is linear, so the cocycle is constant in `x`.
fn linear_support(family: &[MapSpec], nu: &DrivingMeasure) -> bool {
    nu.atoms().iter().all(|a| family[a.0].is_linear())
}

fn check_family(family: &[MapSpec], nu: &DrivingMeasure, n: usize) -> Result<()> {
    nu.validate_for(family.len())?;
    if n < BURN_IN {
        return Err(Error::PreconditionFail(format!("need at least {BURN_IN} steps, got {n}")));
    }
    Ok(())
}

/// Top exponent by projective iteration from a fixed generic direction, after
/// [`BURN_IN`] steps; `λˢ` comes from the determinant identity.
pub fn top_exponent(
    family: &[MapSpec],
    nu: &DrivingMeasure,
    x0: TorusPoint,
    n: usize,
    seed: u64,
) -> Result<LyapunovEstimate> {
    top_exponent_from(family, nu, x0, [START_ANGLE.cos(), START_ANGLE.sin()], n, seed)
}

/// [`top_exponent`] with an explicit start vector.
pub fn top_exponent_from(
    family: &[MapSpec],
    nu: &DrivingMeasure,
    x0: TorusPoint,
    v0: [f64; 2],
    n: usize,
    seed: u64,
) -> Result<LyapunovEstimate> {
    check_family(family, nu, n)?;
    let word = sample_word(nu, BURN_IN + n, seed);
    if linear_support(family, nu) {
        return iterate_exponent_exact(n, v0, |k| family[word.get(k)].linear_part());
    }
    let mut x = x0;
    iterate_exponent(n, v0, |k| {
        let f = &family[word.get(k)];
        let d = f.derivative(x);
        x = f.apply(x);
        Ok(d)
    })
}

/// Top exponent of the inverse cocycle `x ↦ f⁻¹(x)`, `D(f⁻¹) = (Df ∘ f⁻¹)⁻¹`.
/// Its `lambda_u` estimates `−λˢ` of the forward cocycle.
pub fn backward_exponent(
    family: &[MapSpec],
    nu: &DrivingMeasure,
    x0: TorusPoint,
    n: usize,
    seed: u64,
) -> Result<LyapunovEstimate> {
    check_family(family, nu, n)?;
    let word = sample_word(nu, BURN_IN + n, seed);
    let v0 = [START_ANGLE.cos(), START_ANGLE.sin()];
    if linear_support(family, nu) {
        let inverses: Vec<Option<IntMat2>> = family.iter().map(|f| f.linear_part().inverse()).collect();
        if inverses.iter().all(Option::is_some) {
            return iterate_exponent_exact(n, v0, |k| inverses[word.get(k)].unwrap());
        }
    }
    let mut x = x0;
    iterate_exponent(n, v0, |k| {
        let f = &family[word.get(k)];
        x = f.inverse(x)?;
        f.derivative(x).inverse().ok_or_else(|| Error::Degenerate("singular derivative".into()))
    })
}

/// Weighted mean over runs with pooled standard error.
pub fn merge_estimates(runs: &[LyapunovEstimate]) -> Option<LyapunovEstimate> {
    let total: usize = runs.iter().map(|r| r.n_steps).sum();
    if total == 0 {
        return None;
    }
    let w = |r: &LyapunovEstimate| r.n_steps as f64 / total as f64;
    let lambda_u = runs.iter().map(|r| w(r) * r.lambda_u).sum();
    let mean_log_det = runs.iter().map(|r| w(r) * r.mean_log_det).sum();
    let var: f64 = runs.iter().map(|r| (w(r) * r.stderr_u).powi(2)).sum();
    Some(LyapunovEstimate {
        lambda_u,
        lambda_s: mean_log_det - lambda_u,
        stderr_u: var.sqrt(),
        n_steps: total,
        mean_log_det,
    })
}

/// One [`top_exponent`] run per seed in parallel; results in seed order plus
/// their merge.
pub fn top_exponent_seeds(
    family: &[MapSpec],
    nu: &DrivingMeasure,
    x0: TorusPoint,
    n: usize,
    seeds: &[u64],
) -> Result<(Vec<LyapunovEstimate>, LyapunovEstimate)> {
    let runs: Vec<LyapunovEstimate> =
        seeds.par_iter().map(|&s| top_exponent(family, nu, x0, n, s)).collect::<Result<_>>()?;
    let merged = merge_estimates(&runs).ok_or_else(|| Error::PreconditionFail("no seeds".into()))?;
    Ok((runs, merged))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionEstimate {
    /// Line angle in `[0, π)`.
    pub angle: f64,
    pub horizon: usize,
    /// Angle change between horizons `N − 10` and `N`.
    pub convergence_gap: f64,
    /// `log(σ_max / σ_min)` at horizon `N`.
    pub log_singular_ratio: f64,
    pub reliable: bool,
}

fn direction_estimate(angle: f64, prev: f64, horizon: usize, m: &ScaledMat2) -> DirectionEstimate {
    let (hi, lo) = m.log_singular_values();
    let gap = line_distance(angle, prev);
    let ratio = hi - lo;
    DirectionEstimate {
        angle,
        horizon,
        convergence_gap: gap,
        log_singular_ratio: ratio,
        reliable: ratio >= MIN_SINGULAR_RATIO.ln() && gap <= MAX_DIRECTION_GAP,
    }
}

/// Most contracted direction of `D f^N_ω(x)`.
pub fn stable_direction(family: &[MapSpec], word: &Word, x: TorusPoint, n: usize) -> Result<DirectionEstimate> {
    if n <= 10 {
        return Err(Error::PreconditionFail(format!("horizon {n} must exceed 10")));
    }
    let early = cocycle_derivative(family, word, x, n - 10)?;
    let mut xk = x;
    for &id in &word.entries()[..n - 10] {
        xk = family[id].apply(xk);
    }
    let tail = cocycle_derivative(family, &word.shifted(n - 10), xk, 10)?;
    let full = tail.compose(&early);
    Ok(direction_estimate(full.mat.bottom_right_singular_angle(), early.mat.bottom_right_singular_angle(), n, &full))
}

/// Most expanded image direction at time `at` of the cocycle started `N` steps
/// earlier along `word`, i.e. the unstable line at `x = x_at`.
pub fn unstable_direction(
    family: &[MapSpec],
    word: &Word,
    at: usize,
    x: TorusPoint,
    n: usize,
) -> Result<DirectionEstimate> {
    if n <= 10 {
        return Err(Error::PreconditionFail(format!("horizon {n} must exceed 10")));
    }
    let win = OrbitWindow::new(family, word, at, x, n, 0)?;
    let mut late = ScaledMat2::identity();
    for j in -10..0 {
        late = late.then(&win.step_derivative(family, j));
    }
    let mut early = ScaledMat2::identity();
    for j in -(n as isize)..-10 {
        early = early.then(&win.step_derivative(family, j));
    }
    let full = late.compose(&early);
    let image = |m: &ScaledMat2| m.mat.image_angle(m.mat.top_right_singular_angle());
    Ok(direction_estimate(image(&full), image(&late), n, &full))
}

/// `1 − |mean e^{2iθ}|` over line angles; exactly 0 for identical angles and
/// independent of input order.
pub fn circular_line_variance(angles: &[f64]) -> f64 {
    let mut a: Vec<f64> = angles.iter().map(|&t| line_angle(t)).collect();
    a.sort_by(f64::total_cmp);
    let k = a.len() as f64;
    let mut r2 = 0.0;
    for &ti in &a {
        for &tj in &a {
            r2 += (2.0 * (ti - tj)).cos();
        }
    }
    1.0 - (r2 / (k * k)).clamp(0.0, 1.0).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonrandomnessReport {
    pub score: f64,
    pub angles: Vec<f64>,
    pub unreliable: usize,
}

/// Circular variance of stable directions at `x` across `k_words` independent words.
pub fn nonrandomness_score(
    family: &[MapSpec],
    nu: &DrivingMeasure,
    x: TorusPoint,
    k_words: usize,
    n: usize,
    seed: u64,
) -> Result<NonrandomnessReport> {
    nu.validate_for(family.len())?;
    let words: Vec<Word> = (0..k_words).map(|i| sample_word(nu, n, derive_seed(seed, i as u64))).collect();
    nonrandomness_from_words(family, &words, x, n)
}

/// [`nonrandomness_score`] over explicitly given words.
pub fn nonrandomness_from_words(
    family: &[MapSpec],
    words: &[Word],
    x: TorusPoint,
    n: usize,
) -> Result<NonrandomnessReport> {
    if words.len() < 2 {
        return Err(Error::PreconditionFail("need at least two words".into()));
    }
    let dirs = words.iter().map(|w| stable_direction(family, w, x, n)).collect::<Result<Vec<_>>>()?;
    let unreliable = dirs.iter().filter(|d| !d.reliable).count();
    if 2 * unreliable > dirs.len() {
        return Err(Error::Unreliable(format!("{unreliable} of {} stable directions unreliable", dirs.len())));
    }
    let angles: Vec<f64> = dirs.iter().map(|d| d.angle).collect();
    Ok(NonrandomnessReport { score: circular_line_variance(&angles), angles, unreliable })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Bundle {
    Unstable,
    Stable,
}

/// Oseledec splitting along a stored stretch of orbit.
///
/// Unstable vectors are pushed forward from a generic vector placed `warm`
/// steps before the usable range; stable vectors are pulled back from `warm`
/// steps after it. Each bundle carries the log growth profile `C(j)` with
/// `C(0) = 0` and `C(j+1) − C(j) = log‖Df(j)|E(j)‖`, so that
/// `‖Df^n v‖ = ‖v‖·exp(C(j+n) − C(j))` for `v ∈ E(j)`.
#[derive(Debug, Clone)]
pub struct OseledecFrame {
    window: OrbitWindow,
    span_back: usize,
    span_fwd: usize,
    lambda_u: f64,
    lambda_s: f64,
    eu: Vec<[f64; 2]>,
    es: Vec<[f64; 2]>,
    cu: Vec<f64>,
    cs: Vec<f64>,
}

impl OseledecFrame {
    /// Frame usable on relative times `[−span_back, span_fwd]` around `x = x_at`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        family: &[MapSpec],
        word: &Word,
        at: usize,
        x: TorusPoint,
        lambda_u: f64,
        lambda_s: f64,
        span_back: usize,
        span_fwd: usize,
        warm: usize,
    ) -> Result<Self> {
        let back = span_back + warm;
        let fwd = span_fwd + warm;
        let window = OrbitWindow::new(family, word, at, x, back, fwd)?;
        let len = back + fwd + 1;
        let idx = |j: isize| (j + back as isize) as usize;
        let derivs: Vec<RealMat2> =
            (-(back as isize)..fwd as isize).map(|j| window.step_derivative(family, j)).collect();

        let mut eu = vec![[0.0; 2]; len];
        let mut au = vec![0.0; len - 1];
        eu[0] = [START_ANGLE.cos(), START_ANGLE.sin()];
        for k in 0..len - 1 {
            let w = derivs[k].apply(eu[k]);
            let r = w[0].hypot(w[1]);
            au[k] = r.ln();
            eu[k + 1] = [w[0] / r, w[1] / r];
        }
        let mut es = vec![[0.0; 2]; len];
        let mut as_ = vec![0.0; len - 1];
        es[len - 1] = [(START_ANGLE + 1.0).cos(), (START_ANGLE + 1.0).sin()];
        for k in (0..len - 1).rev() {
            let inv = derivs[k].inverse().ok_or_else(|| Error::Degenerate("singular derivative".into()))?;
            let w = inv.apply(es[k + 1]);
            let r = w[0].hypot(w[1]);
            as_[k] = -r.ln();
            es[k] = [w[0] / r, w[1] / r];
        }
        let profile = |steps: &[f64]| {
            let mut c = vec![0.0; len];
            let z = idx(0);
            for k in z..len - 1 {
                c[k + 1] = c[k] + steps[k];
            }
            for k in (0..z).rev() {
                c[k] = c[k + 1] - steps[k];
            }
            c
        };
        let cu = profile(&au);
        let cs = profile(&as_);
        Ok(OseledecFrame { window, span_back, span_fwd, lambda_u, lambda_s, eu, es, cu, cs })
    }

    fn idx(&self, j: isize) -> Result<usize> {
        if j < -(self.span_back as isize) || j > self.span_fwd as isize {
            return Err(Error::OutOfRange {
                requested: j.unsigned_abs(),
                available: self.span_back.max(self.span_fwd),
            });
        }
        Ok((j + self.window.back() as isize) as usize)
    }

    pub fn window(&self) -> &OrbitWindow {
        &self.window
    }

    pub fn exponent(&self, bundle: Bundle) -> f64 {
        match bundle {
            Bundle::Unstable => self.lambda_u,
            Bundle::Stable => self.lambda_s,
        }
    }

    /// Unit vector spanning the bundle at relative time `j`.
    pub fn direction(&self, bundle: Bundle, j: isize) -> Result<[f64; 2]> {
        let i = self.idx(j)?;
        Ok(match bundle {
            Bundle::Unstable => self.eu[i],
            Bundle::Stable => self.es[i],
        })
    }

    /// `C(j)`: log growth of the bundle from time 0 to time `j`.
    pub fn log_growth(&self, bundle: Bundle, j: isize) -> Result<f64> {
        let i = self.idx(j)?;
        Ok(match bundle {
            Bundle::Unstable => self.cu[i],
            Bundle::Stable => self.cs[i],
        })
    }

    /// Squared truncated Lyapunov norm of a unit vector of the bundle at time
    /// `t`, split into the terms whose offsets fall in `common` and the rest.
    fn weight_sum(&self, bundle: Bundle, two_sided: bool, t: isize, w: usize, eps0: f64) -> Result<Vec<(isize, f64)>> {
        let lambda = self.exponent(bundle);
        let ct = self.log_growth(bundle, t)?;
        let hi = if two_sided { w as isize } else { 0 };
        let mut out = Vec::with_capacity(2 * w + 1);
        for k in -(w as isize)..=hi {
            let c = self.log_growth(bundle, t + k)?;
            out.push((t + k, (2.0 * (c - ct) - 2.0 * lambda * k as f64 - 2.0 * eps0 * k.abs() as f64).exp()));
        }
        Ok(out)
    }

    /// Truncated Lyapunov norm at time `t` of `v ∈ E^σ(t)`:
    /// `(Σ_{|k|≤W} ‖Df^k v‖² e^{−2λk−2ε₀|k|})^{1/2}`, or `k ∈ [−W, 0]` for the
    /// past one-sided norm.
    pub fn truncated_norm(
        &self,
        bundle: Bundle,
        two_sided: bool,
        t: isize,
        v: [f64; 2],
        w: usize,
        eps0: f64,
    ) -> Result<f64> {
        let len = v[0].hypot(v[1]);
        if !(len > 0.0) || !len.is_finite() {
            return Err(Error::PreconditionFail("vector must be nonzero".into()));
        }
        let e = self.direction(bundle, t)?;
        let misalign = (e[0] * v[1] - e[1] * v[0]).abs() / len;
        if misalign > 1e-6 {
            return Err(Error::PreconditionFail(format!("vector off the bundle by {misalign:.3e} rad")));
        }
        let terms = self.weight_sum(bundle, two_sided, t, w, eps0)?;
        // the k = 0 term is exactly 1, summed first
        let mut sum = 1.0;
        for &(_, x) in terms.iter().filter(|(m, _)| *m != t) {
            sum += x;
        }
        Ok(len * sum.sqrt())
    }

    /// Growth bound `e^{nλ−|n|ε₀}‖v‖' ≤ ‖Df^n v‖' ≤ e^{nλ+|n|ε₀}‖v‖'` for the
    /// two-sided truncated norm, `v ∈ E^σ(0)`.
    ///
    /// Terms at offsets present in both windows obey the bound exactly; the
    /// rest is charged to a slack factor `e^{2ε₀}·√(1 + tail)`.
    pub fn norm_growth_check(&self, bundle: Bundle, v: [f64; 2], w: usize, eps0: f64, n: isize) -> Result<GrowthCheck> {
        let lambda = self.exponent(bundle);
        let n0 = self.truncated_norm(bundle, true, 0, v, w, eps0)?;
        let len = v[0].hypot(v[1]);
        let vn_len = len * self.log_growth(bundle, n)?.exp();
        let e = self.direction(bundle, n)?;
        let nn = self.truncated_norm(bundle, true, n, [vn_len * e[0], vn_len * e[1]], w, eps0)?;

        let t0 = self.weight_sum(bundle, true, 0, w, eps0)?;
        let tn = self.weight_sum(bundle, true, n, w, eps0)?;
        let lo_m = (n - w as isize).max(-(w as isize));
        let hi_m = (n + w as isize).min(w as isize);
        let split = |terms: &[(isize, f64)]| {
            let (mut common, mut rest) = (0.0, 0.0);
            for &(m, x) in terms {
                if (lo_m..=hi_m).contains(&m) {
                    common += x;
                } else {
                    rest += x;
                }
            }
            rest / common
        };
        let tail = split(&t0).max(split(&tn));
        let log_slack = 2.0 * eps0 + 0.5 * tail.ln_1p();
        let log_ratio = nn.ln() - n0.ln();
        let centre = n as f64 * lambda;
        let band = n.unsigned_abs() as f64 * eps0 + log_slack;
        let lower_margin = log_ratio - (centre - band);
        let upper_margin = (centre + band) - log_ratio;
        Ok(GrowthCheck { pass: lower_margin >= 0.0 && upper_margin >= 0.0, lower_margin, upper_margin, tail })
    }

    /// Per-step log growth of the bundle in the two-sided truncated Lyapunov
    /// norm, accumulated from time 0: entry `j` is `log(‖Df^j v‖'_j / ‖v‖'_0)`.
    pub fn lyapunov_log_profile(&self, bundle: Bundle, len: usize, w: usize, eps0: f64) -> Result<Vec<f64>> {
        let e0 = self.direction(bundle, 0)?;
        let n0 = self.truncated_norm(bundle, true, 0, e0, w, eps0)?.ln();
        (0..=len as isize)
            .map(|j| {
                let e = self.direction(bundle, j)?;
                Ok(self.log_growth(bundle, j)? + self.truncated_norm(bundle, true, j, e, w, eps0)?.ln() - n0)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthCheck {
    pub pass: bool,
    /// Log-distance above the lower bound.
    pub lower_margin: f64,
    /// Log-distance below the upper bound.
    pub upper_margin: f64,
    pub tail: f64,
}

/// Two-sided or past one-sided truncated Lyapunov norm of `v ∈ E^σ` at
/// `x = x_at`, building the frame it needs.
#[allow(clippy::too_many_arguments)]
pub fn truncated_norm(
    family: &[MapSpec],
    two_sided: bool,
    word: &Word,
    at: usize,
    x: TorusPoint,
    v: [f64; 2],
    bundle: Bundle,
    est: &LyapunovEstimate,
    w: usize,
    eps0: f64,
) -> Result<f64> {
    let fwd = if two_sided { w } else { 0 };
    let warm = (at - w.min(at)).min(200);
    let frame = OseledecFrame::new(family, word, at, x, est.lambda_u, est.lambda_s, w, fwd, warm)?;
    frame.truncated_norm(bundle, two_sided, 0, v, w, eps0)
}

/// Cumulative log-norm data `S(m)` of the stable bundle and `U(j)` of the
/// unstable bundle, both from time 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormLogData {
    pub stable: Vec<f64>,
    pub unstable: Vec<f64>,
}

impl NormLogData {
    /// Data from per-step log factors.
    pub fn from_steps(stable_steps: &[f64], unstable_steps: &[f64]) -> Self {
        let acc = |steps: &[f64]| {
            let mut out = Vec::with_capacity(steps.len() + 1);
            let mut c = 0.0;
            out.push(c);
            for s in steps {
                c += s;
                out.push(c);
            }
            out
        };
        NormLogData { stable: acc(stable_steps), unstable: acc(unstable_steps) }
    }

    /// Lyapunov-norm data from an Oseledec frame.
    pub fn from_frame(frame: &OseledecFrame, m_max: usize, j_max: usize, w: usize, eps0: f64) -> Result<Self> {
        Ok(NormLogData {
            stable: frame.lyapunov_log_profile(Bundle::Stable, m_max, w, eps0)?,
            unstable: frame.lyapunov_log_profile(Bundle::Unstable, j_max, w, eps0)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoppingTimeTable {
    pub delta: f64,
    pub epsilon: f64,
    pub m: Vec<usize>,
    pub tau: Vec<i64>,
    pub l: Vec<i64>,
}

/// `τ(m) = max{ℓ : S(m) + U(m+ℓ) − U(m) + log δ ≤ log ε}` over `ℓ ≥ −m`, and
/// `L(m) = m + τ(m)`.
pub fn stopping_times(
    data: &NormLogData,
    delta: f64,
    epsilon: f64,
    m_range: std::ops::RangeInclusive<usize>,
) -> Result<StoppingTimeTable> {
    if !(delta > 0.0 && delta < 1.0 && epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::PreconditionFail("δ and ε must lie in (0,1)".into()));
    }
    let u = &data.unstable;
    if u.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::PreconditionFail("unstable log-norms must increase".into()));
    }
    let budget = epsilon.ln() - delta.ln();
    let j_max = u.len() - 1;
    let (mut ms, mut taus, mut ls) = (Vec::new(), Vec::new(), Vec::new());
    for m in m_range {
        if m >= data.stable.len() || m > j_max {
            return Err(Error::OutOfRange { requested: m, available: data.stable.len().min(u.len()) - 1 });
        }
        let level = budget - data.stable[m] + u[m];
        // largest L ∈ [0, j_max] with U(L) ≤ level
        if u[0] > level {
            return Err(Error::OutOfRange { requested: 0, available: j_max });
        }
        if u[j_max] <= level {
            return Err(Error::OutOfRange { requested: j_max + 1, available: j_max });
        }
        let l = u.partition_point(|&x| x <= level) - 1;
        ms.push(m);
        ls.push(l as i64);
        taus.push(l as i64 - m as i64);
    }
    Ok(StoppingTimeTable { delta, epsilon, m: ms, tau: taus, l: ls })
}

/// `⌊(log(ε/δ) − m·λˢ)/λᵘ⌋` for a single linear map.
pub fn stopping_time_closed_form(lambda_u: f64, lambda_s: f64, delta: f64, epsilon: f64, m: usize) -> i64 {
    (((epsilon / delta).ln() - m as f64 * lambda_s) / lambda_u).floor() as i64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeReport {
    pub lower: f64,
    pub upper: f64,
    pub min_step: i64,
    pub max_step: i64,
    /// All unit differences of `τ` in `[lower − 1, upper + 1]`.
    pub pass: bool,
}

/// Check unit differences of `τ` against
/// `[(−λˢ−3ε₀)/(λᵘ+ε₀), (−λˢ+3ε₀)/(λᵘ−ε₀)]` with one step of slack.
pub fn slope_check(table: &StoppingTimeTable, lambda_u: f64, lambda_s: f64, eps0: f64) -> SlopeReport {
    let lower = (-lambda_s - 3.0 * eps0) / (lambda_u + eps0);
    let upper = (-lambda_s + 3.0 * eps0) / (lambda_u - eps0);
    let (mut min_step, mut max_step) = (i64::MAX, i64::MIN);
    let mut pass = true;
    for k in 1..table.m.len() {
        let dm = (table.m[k] - table.m[k - 1]) as f64;
        let dt = table.tau[k] - table.tau[k - 1];
        min_step = min_step.min(dt);
        max_step = max_step.max(dt);
        let s = dt as f64 / dm;
        if s < lower - 1.0 / dm || s > upper + 1.0 / dm {
            pass = false;
        }
    }
    SlopeReport { lower, upper, min_step, max_step, pass }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixedExponent {
    pub t: f64,
    pub closed_form: f64,
    pub simulated: f64,
}

/// Exponent of the projectivised cocycle of `ν = t δ_g + (1 − t) δ_f` on the
/// two eigenlines of `f`, with the measure split evenly between the lines.
///
/// The closed form is `(1−t)(λᵘ+λˢ)/2 + t/2·(log‖g|Eᵘ‖ + log‖g|Eˢ‖)`; the
/// simulation runs the Markov chain on the two lines (tracked by index, so the
/// contracting line is not lost to rounding), averaging two chains started on
/// `Eᵘ` and `Eˢ` driven by the same letters.
pub fn mixed_projective_exponent(f: &RealMat2, g: &RealMat2, t: f64, n: usize, seed: u64) -> Result<MixedExponent> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::PreconditionFail(format!("weight {t} outside [0,1]")));
    }
    let rep = real_eigen(f);
    let (Eigenvalues::Real(big, small), Some((au, as_))) = (rep.eigenvalues, rep.eigen_angles) else {
        return Err(Error::PreconditionFail("f has no real eigenlines".into()));
    };
    for a in [au, as_] {
        let img = g.image_angle(a);
        if line_distance(img, au).min(line_distance(img, as_)) > 1e-10 {
            return Err(Error::PreconditionFail("g does not preserve the eigenline pair of f".into()));
        }
    }
    if line_distance(g.image_angle(au), g.image_angle(as_)) <= 1e-10 {
        return Err(Error::PreconditionFail("g collapses the eigenline pair of f".into()));
    }
    let (lu, ls) = (big.abs().ln(), small.abs().ln());
    let closed_form = (1.0 - t) * 0.5 * (lu + ls) + 0.5 * t * (g.gain(au).ln() + g.gain(as_).ln());

    let nu = DrivingMeasure::two_point(1, 0, t)?;
    let word = sample_word(&nu, n, seed);
    // transitions of the chain on the line pair: (log gain, image line) per map and line
    let lines = [au, as_];
    let step = |m: &RealMat2, i: usize| {
        let img = m.image_angle(lines[i]);
        let next = if line_distance(img, au) <= line_distance(img, as_) { 0 } else { 1 };
        (m.gain(lines[i]).ln(), next)
    };
    let table = [[step(f, 0), step(f, 1)], [step(g, 0), step(g, 1)]];
    let mut total = 0.0;
    for start in 0..2 {
        let mut state = start;
        for &id in word.entries() {
            let (lg, next) = table[id][state];
            total += lg;
            state = next;
        }
    }
    Ok(MixedExponent { t, closed_form, simulated: total / (2.0 * n as f64) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuityRow {
    pub t: f64,
    pub estimate: LyapunovEstimate,
    /// Exact exponent when `f` and `g` are commuting linear maps.
    pub chi: Option<f64>,
    pub residual: Option<f64>,
}

/// Top exponent of `ν_t = t δ_f + (1 − t) δ_g` along `t_grid`.
///
/// For commuting linear `f, g` with real eigenlines the shared lines `V` are
/// invariant and the top exponent is `max_V t·log‖f|V‖ + (1−t)·log‖g|V‖`.
pub fn exponent_continuity_scan(
    f: &MapSpec,
    g: &MapSpec,
    t_grid: &[f64],
    x0: TorusPoint,
    n: usize,
    seed: u64,
) -> Result<Vec<ContinuityRow>> {
    let family = [f.clone(), g.clone()];
    let lines = shared_lines(f, g);
    t_grid
        .par_iter()
        .map(|&t| {
            let nu = DrivingMeasure::two_point(0, 1, t)?;
            let estimate = top_exponent(&family, &nu, x0, n, seed)?;
            let chi =
                lines.map(|ls| ls.iter().map(|&(lf, lg)| t * lf + (1.0 - t) * lg).fold(f64::NEG_INFINITY, f64::max));
            Ok(ContinuityRow { t, estimate, chi, residual: chi.map(|c| (estimate.lambda_u - c).abs()) })
        })
        .collect()
}

/// `(log‖f|V‖, log‖g|V‖)` on the eigenlines of `f` when `f, g` are commuting
/// linear maps sharing them.
fn shared_lines(f: &MapSpec, g: &MapSpec) -> Option<[(f64, f64); 2]> {
    if !f.is_linear() || !g.is_linear() {
        return None;
    }
    let (fl, gl) = (f.linear_part(), g.linear_part());
    if fl * gl != gl * fl {
        return None;
    }
    let (fr, gr) = (fl.to_real(), gl.to_real());
    let (a, b) = real_eigen(&fr).eigen_angles?;
    let fixed = |m: &RealMat2, th: f64| line_distance(m.image_angle(th), th) < 1e-12;
    if !(fixed(&gr, a) && fixed(&gr, b)) {
        return None;
    }
    Some([(fr.gain(a).ln(), gr.gain(a).ln()), (fr.gain(b).ln(), gr.gain(b).ln())])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::{IntMat2, SineTerm};
    use proptest::prelude::*;
    use rand::Rng;
    use std::f64::consts::TAU;

    fn a() -> IntMat2 {
        IntMat2::new(2, 1, 1, 1)
    }
    fn b() -> IntMat2 {
        IntMat2::new(1, 1, 1, 2)
    }
    fn lin(m: IntMat2) -> MapSpec {
        MapSpec::linear(m).unwrap()
    }
    fn golden_log() -> f64 {
        ((3.0 + 5f64.sqrt()) / 2.0).ln()
    }
    fn ab() -> Vec<MapSpec> {
        vec![lin(a()), lin(b())]
    }
    fn half() -> DrivingMeasure {
        DrivingMeasure::uniform(&[0, 1]).unwrap()
    }

    #[test]
    fn single_map_exponent() {
        let e = top_exponent(&[lin(a())], &DrivingMeasure::dirac(0), TorusPoint::new(0.1, 0.2), 10_000, 1).unwrap();
        assert!((e.lambda_u - golden_log()).abs() < 1e-6);
        assert!((e.lambda_u + e.lambda_s - e.mean_log_det).abs() < 1e-9);
        assert!(e.lambda_u >= e.lambda_s);
    }

    #[test]
    fn rotation_has_zero_exponent() {
        let r = lin(IntMat2::new(0, -1, 1, 0));
        let e = top_exponent(&[r], &DrivingMeasure::dirac(0), TorusPoint::new(0.1, 0.2), 10_000, 1).unwrap();
        assert!(e.lambda_u.abs() < 1e-9);
    }

    #[test]
    fn random_walk_of_a_and_inverse() {
        // product is A^{S} with S the walk; its log-norm is log φ²·|S| up to O(1)
        let fam = vec![lin(a()), lin(a().inverse().unwrap())];
        let n = 200_000;
        let e = top_exponent(&fam, &half(), TorusPoint::origin(), n, 9).unwrap();
        let w = sample_word(&half(), BURN_IN + n, 9);
        let walk = |r: std::ops::Range<usize>| r.map(|k| if w.get(k) == 0 { 1i64 } else { -1 }).sum::<i64>();
        let (s0, s1) = (walk(0..BURN_IN), walk(0..BURN_IN + n));
        let bound = |s: i64| golden_log() * s.abs() as f64;
        let expect = bound(s1) - bound(s0);
        let got = e.lambda_u * n as f64;
        assert!((got - expect).abs() < 4.0, "{got} vs {expect}");
        assert!(e.lambda_u.abs() < 1e-2);
    }

    #[test]
    fn short_runs_rejected() {
        assert!(top_exponent(&ab(), &half(), TorusPoint::origin(), 999, 1).is_err());
    }

    #[test]
    fn start_vector_scaling_is_invisible() {
        let fam = ab();
        let x = TorusPoint::new(0.3, 0.1);
        let v = [0.3, -0.7];
        let base = top_exponent_from(&fam, &half(), x, v, 5_000, 4).unwrap();
        for c in [-1.0, 2.0, -0.5, 1024.0] {
            let e = top_exponent_from(&fam, &half(), x, [c * v[0], c * v[1]], 5_000, 4).unwrap();
            assert_eq!(e, base);
        }
        let e = top_exponent_from(&fam, &half(), x, [3.7 * v[0], 3.7 * v[1]], 5_000, 4).unwrap();
        assert!((e.lambda_u - base.lambda_u).abs() < 1e-12);
    }

    #[test]
    fn backward_matches_minus_stable() {
        let fam = ab();
        let x = TorusPoint::new(0.3, 0.1);
        let f = top_exponent(&fam, &half(), x, 100_000, 7).unwrap();
        let bw = backward_exponent(&fam, &half(), x, 100_000, 8).unwrap();
        let se = f.stderr_u.hypot(bw.stderr_u);
        assert!((bw.lambda_u + f.lambda_s).abs() < 3.0 * se, "{} vs {} (se {se})", bw.lambda_u, -f.lambda_s);
    }

    #[test]
    fn seed_merge_is_order_stable() {
        let fam = ab();
        let (runs, merged) = top_exponent_seeds(&fam, &half(), TorusPoint::origin(), 2_000, &[1, 2, 3]).unwrap();
        assert_eq!(runs.len(), 3);
        assert_eq!(runs[1], top_exponent(&fam, &half(), TorusPoint::origin(), 2_000, 2).unwrap());
        let mean = runs.iter().map(|r| r.lambda_u).sum::<f64>() / 3.0;
        assert!((merged.lambda_u - mean).abs() < 1e-12);
        assert_eq!(merged.n_steps, 6_000);
    }

    #[test]
    fn stable_direction_of_single_map() {
        let w = Word::from_entries(vec![0; 40]);
        let d = stable_direction(&[lin(a())], &w, TorusPoint::new(0.2, 0.3), 40).unwrap();
        let (_, s) = real_eigen(&a().to_real()).eigen_angles.unwrap();
        assert!(line_distance(d.angle, s) < 1e-8);
        assert!(d.reliable);
    }

    #[test]
    fn rotations_are_unreliable() {
        let w = Word::from_entries(vec![0; 40]);
        let d = stable_direction(&[lin(IntMat2::new(0, -1, 1, 0))], &w, TorusPoint::new(0.2, 0.3), 40).unwrap();
        assert!(!d.reliable);
    }

    #[test]
    fn convergence_gap_decays() {
        let fam = ab();
        let est = top_exponent(&fam, &half(), TorusPoint::origin(), 20_000, 3).unwrap();
        let factor = ((est.lambda_u - est.lambda_s) * 5.0).exp() / 2.0;
        let mut ratios: Vec<f64> = (0..100)
            .map(|i| {
                let w = sample_word(&half(), 30, 100 + i);
                let g20 = stable_direction(&fam, &w, TorusPoint::origin(), 20).unwrap().convergence_gap;
                let g30 = stable_direction(&fam, &w, TorusPoint::origin(), 30).unwrap().convergence_gap;
                g20 / g30
            })
            .collect();
        ratios.sort_by(f64::total_cmp);
        assert!(ratios[50] >= factor, "median {} < {factor}", ratios[50]);
    }

    #[test]
    fn unstable_direction_of_single_map() {
        let w = Word::from_entries(vec![0; 60]);
        let d = unstable_direction(&[lin(a())], &w, 50, TorusPoint::new(0.2, 0.3), 40).unwrap();
        let (u, _) = real_eigen(&a().to_real()).eigen_angles.unwrap();
        assert!(line_distance(d.angle, u) < 1e-8);
    }

    #[test]
    fn nonrandomness_dichotomy() {
        let x = TorusPoint::new(0.3, 0.6);
        let pow = vec![lin(a()), lin(a() * a())];
        let s = nonrandomness_score(&pow, &half(), x, 50, 40, 1).unwrap();
        assert!(s.score < 1e-6);
        for seed in [1, 2, 3] {
            let s = nonrandomness_score(&ab(), &half(), x, 50, 40, seed).unwrap();
            assert!(s.score > 0.05, "{}", s.score);
        }
        let w = sample_word(&half(), 40, 9);
        let same = nonrandomness_from_words(&ab(), &vec![w; 7], x, 40).unwrap();
        assert_eq!(same.score, 0.0);
    }

    #[test]
    fn nonrandomness_ignores_word_order() {
        let x = TorusPoint::new(0.3, 0.6);
        let mut words: Vec<Word> = (0..12).map(|i| sample_word(&half(), 40, 50 + i)).collect();
        let s1 = nonrandomness_from_words(&ab(), &words, x, 40).unwrap().score;
        words.reverse();
        words.swap(2, 7);
        let s2 = nonrandomness_from_words(&ab(), &words, x, 40).unwrap().score;
        assert_eq!(s1, s2);
    }

    fn single_frame() -> (OseledecFrame, f64) {
        let l = golden_log();
        let w = Word::from_entries(vec![0; 400]);
        let f = OseledecFrame::new(&[lin(a())], &w, 200, TorusPoint::new(0.1, 0.4), l, -l, 100, 100, 60).unwrap();
        (f, l)
    }

    #[test]
    fn truncated_norm_geometric_oracle() {
        let (frame, l) = single_frame();
        let eps0 = default_epsilon0(l, -l);
        let w = 50;
        let v = frame.direction(Bundle::Unstable, 0).unwrap();
        let q = (-2.0 * eps0).exp();
        let two = 1.0 + 2.0 * q * (1.0 - q.powi(w as i32)) / (1.0 - q);
        let one = (1.0 - q.powi(w as i32 + 1)) / (1.0 - q);
        let t2 = frame.truncated_norm(Bundle::Unstable, true, 0, v, w, eps0).unwrap();
        let t1 = frame.truncated_norm(Bundle::Unstable, false, 0, v, w, eps0).unwrap();
        assert!((t2 - two.sqrt()).abs() < 1e-10, "{t2} vs {}", two.sqrt());
        assert!((t1 - one.sqrt()).abs() < 1e-10);
        let vs = frame.direction(Bundle::Stable, 0).unwrap();
        let ts = frame.truncated_norm(Bundle::Stable, true, 0, vs, w, eps0).unwrap();
        assert!((ts - two.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn truncated_norm_rejects_off_bundle_vectors() {
        let (frame, l) = single_frame();
        let eps0 = default_epsilon0(l, -l);
        let vs = frame.direction(Bundle::Stable, 0).unwrap();
        assert!(frame.truncated_norm(Bundle::Unstable, true, 0, vs, 50, eps0).is_err());
        assert!(frame.truncated_norm(Bundle::Unstable, true, 0, [0.0, 0.0], 50, eps0).is_err());
    }

    fn random_frame(seed: u64) -> (OseledecFrame, f64) {
        let fam = ab();
        let w = sample_word(&half(), 600, seed);
        let est = LyapunovEstimate { lambda_u: 0.8, lambda_s: -0.8, stderr_u: 0.0, n_steps: 1, mean_log_det: 0.0 };
        let eps0 = default_epsilon0(est.lambda_u, est.lambda_s);
        (
            OseledecFrame::new(&fam, &w, 300, TorusPoint::new(0.2, 0.7), est.lambda_u, est.lambda_s, 120, 120, 100)
                .unwrap(),
            eps0,
        )
    }

    #[test]
    fn frame_vectors_are_equivariant() {
        let (frame, _) = random_frame(5);
        let fam = ab();
        for j in -100..100 {
            let d = frame.window().step_derivative(&fam, j);
            for bundle in [Bundle::Unstable, Bundle::Stable] {
                let e = frame.direction(bundle, j).unwrap();
                let img = d.apply(e);
                let next = frame.direction(bundle, j + 1).unwrap();
                let r = img[0].hypot(img[1]);
                assert!((img[0] * next[1] - img[1] * next[0]).abs() / r < 1e-9);
                let dc = frame.log_growth(bundle, j + 1).unwrap() - frame.log_growth(bundle, j).unwrap();
                assert!((dc - r.ln()).abs() < 1e-9);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn norm_is_homogeneous_and_bounded_below(seed in 0u64..1000, t in -20isize..20, c in -5.0f64..5.0) {
            prop_assume!(c.abs() > 1e-3);
            let (frame, eps0) = random_frame(seed);
            for bundle in [Bundle::Unstable, Bundle::Stable] {
                let e = frame.direction(bundle, t).unwrap();
                let v = [c * e[0], c * e[1]];
                for two in [true, false] {
                    let n1 = frame.truncated_norm(bundle, two, t, v, 50, eps0).unwrap();
                    prop_assert!(n1 >= v[0].hypot(v[1]));
                    let n2 = frame.truncated_norm(bundle, two, t, [2.0 * v[0], 2.0 * v[1]], 50, eps0).unwrap();
                    prop_assert_eq!(n2, 2.0 * n1);
                    let n3 = frame.truncated_norm(bundle, two, t, [3.0 * v[0], 3.0 * v[1]], 50, eps0).unwrap();
                    prop_assert!((n3 - 3.0 * n1).abs() <= 4.0 * f64::EPSILON * n3);
                }
            }
        }
    }

    #[test]
    fn growth_check_passes() {
        let (frame, l) = single_frame();
        let eps0 = default_epsilon0(l, -l);
        let v = frame.direction(Bundle::Unstable, 0).unwrap();
        let g0 = frame.norm_growth_check(Bundle::Unstable, v, 50, eps0, 0).unwrap();
        assert!(g0.pass && g0.lower_margin >= 0.0 && g0.upper_margin >= 0.0);
        for n in 1..=25 {
            let g = frame.norm_growth_check(Bundle::Unstable, v, 50, eps0, n).unwrap();
            assert!(g.pass && g.lower_margin > 0.0 && g.upper_margin > 0.0);
        }
        let mut rng = crate::cocycle::rng(3);
        let mut passed = 0;
        for trial in 0..100 {
            let (frame, eps0) = random_frame(1000 + trial);
            let bundle = if trial % 2 == 0 { Bundle::Unstable } else { Bundle::Stable };
            let v = frame.direction(bundle, 0).unwrap();
            let n = rng.gen_range(-25..=25);
            if frame.norm_growth_check(bundle, v, 50, eps0, n).unwrap().pass {
                passed += 1;
            }
        }
        assert_eq!(passed, 100);
    }

    #[test]
    fn stopping_times_closed_form() {
        let l = golden_log();
        let data = NormLogData::from_steps(&vec![-l; 500], &vec![l; 800]);
        for (delta, eps) in [(0.013, 0.37), (0.2, 0.5), (1e-4, 0.9)] {
            let t = stopping_times(&data, delta, eps, 0..=300).unwrap();
            for (k, &m) in t.m.iter().enumerate() {
                assert_eq!(t.tau[k], stopping_time_closed_form(l, -l, delta, eps, m));
                assert_eq!(t.l[k], m as i64 + t.tau[k]);
            }
            assert!(t.l.windows(2).all(|p| p[1] > p[0]));
            assert!(t.tau.windows(2).all(|p| p[1] >= p[0]));
        }
    }

    #[test]
    fn stopping_time_equal_thresholds() {
        let data = NormLogData::from_steps(&vec![-0.5; 50], &vec![0.7; 50]);
        let t = stopping_times(&data, 0.3, 0.3, 0..=0).unwrap();
        assert!(t.tau[0] >= 0 && t.l[0] >= 0);
    }

    #[test]
    fn stopping_time_range_errors() {
        let data = NormLogData::from_steps(&vec![-0.5; 50], &vec![0.7; 50]);
        assert!(matches!(stopping_times(&data, 0.1, 0.5, 0..=60), Err(Error::OutOfRange { .. })));
        assert!(matches!(stopping_times(&data, 0.1, 0.5, 40..=45), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn stopping_time_slopes_on_random_data() {
        let fam = ab();
        let est = top_exponent(&fam, &half(), TorusPoint::origin(), 100_000, 11).unwrap();
        let eps0 = default_epsilon0(est.lambda_u, est.lambda_s);
        let w = sample_word(&half(), 1200, 12);
        let frame =
            OseledecFrame::new(&fam, &w, 200, TorusPoint::new(0.3, 0.3), est.lambda_u, est.lambda_s, 60, 700, 100)
                .unwrap();
        let data = NormLogData::from_frame(&frame, 200, 600, 50, eps0).unwrap();
        let t = stopping_times(&data, 0.01, 0.5, 0..=200).unwrap();
        assert!(t.l.windows(2).all(|p| p[1] > p[0]));
        let rep = slope_check(&t, est.lambda_u, est.lambda_s, eps0);
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn mixed_axis_swap() {
        let f = RealMat2::diag(2.0, 0.5);
        let g = RealMat2::new(0.0, 0.5, 2.0, 0.0);
        for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let r = mixed_projective_exponent(&f, &g, t, 100_000, 5).unwrap();
            assert!(r.closed_form.abs() < 1e-15);
            assert!((r.closed_form - r.simulated).abs() < 2e-3);
        }
        let bad = RealMat2::new(1.0, 1.0, 0.0, 1.0);
        assert!(mixed_projective_exponent(&f, &bad, 0.5, 1000, 1).is_err());
    }

    #[test]
    fn mixed_with_asymmetric_g() {
        // g = diag(3, 1/2) fixes both axes; the chains never switch lines
        let f = RealMat2::diag(2.0, 0.5);
        let g = RealMat2::diag(3.0, 0.5);
        let r = mixed_projective_exponent(&f, &g, 0.5, 100_000, 2).unwrap();
        let expect = 0.5 * 0.5 * (3f64.ln() + 0.5f64.ln());
        assert!((r.closed_form - expect).abs() < 1e-15);
        assert!((r.simulated - expect).abs() < 5e-3);
    }

    #[test]
    fn continuity_on_commuting_powers() {
        let f = lin(a());
        let g = lin(a() * a());
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let rows = exponent_continuity_scan(&f, &g, &grid, TorusPoint::origin(), 1_000_000, 21).unwrap();
        for r in &rows {
            let chi = r.chi.unwrap();
            assert!((chi - (2.0 - r.t) * golden_log()).abs() < 1e-12);
            assert!(r.residual.unwrap() < 2e-3, "t={} residual {}", r.t, r.residual.unwrap());
        }
    }

    #[test]
    fn continuity_noncommuting_is_smooth() {
        let grid: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
        let rows = exponent_continuity_scan(&lin(a()), &lin(b()), &grid, TorusPoint::origin(), 100_000, 2).unwrap();
        assert!(rows.iter().all(|r| r.chi.is_none()));
        for p in rows.windows(2) {
            assert!((p[1].estimate.lambda_u - p[0].estimate.lambda_u).abs() < 0.05);
        }
        let end =
            top_exponent(&[lin(a()), lin(b())], &DrivingMeasure::dirac(0), TorusPoint::origin(), 100_000, 2).unwrap();
        let last = rows.last().unwrap().estimate;
        assert!((last.lambda_u - end.lambda_u).abs() <= 3.0 * last.stderr_u.hypot(end.stderr_u) + 1e-9);
    }

    #[test]
    fn perturbed_family_exponent_is_positive() {
        let h = vec![SineTerm::new(1, 1.0 / TAU, 0.0)];
        let fam = vec![
            MapSpec::shear_pair(a(), h.clone(), h.clone(), 0.05).unwrap(),
            MapSpec::shear_pair(b(), h.clone(), h, 0.05).unwrap(),
        ];
        let e = top_exponent(&fam, &half(), TorusPoint::new(0.1, 0.2), 20_000, 1).unwrap();
        assert!(e.lambda_u > 0.5);
        assert!(e.mean_log_det.abs() < 1e-12);
    }
}
