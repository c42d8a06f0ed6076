//! Empirical stationary measures and the evidence used to classify them.

use std::collections::HashMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cocycle::{sample_word, DrivingMeasure, MapSpec, RationalPoint, TorusPoint};
use crate::error::{Error, Result};
use crate::lyapunov::LyapunovEstimate;

/// Default histogram resolution.
pub const DEFAULT_GRID: usize = 16;
/// Default Fourier cutoff `K` in `0 < |k|∞ ≤ K`.
pub const DEFAULT_FOURIER_CUTOFF: i64 = 5;
/// Smallest sample count accepted by [`sample_stationary`].
pub const MIN_SAMPLES: usize = 1000;

/// Starting point of a sampled orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Start {
    Point(TorusPoint),
    /// Followed in exact arithmetic; only valid for all-linear families.
    Rational(RationalPoint),
}

impl From<TorusPoint> for Start {
    fn from(p: TorusPoint) -> Self {
        Start::Point(p)
    }
}

impl From<RationalPoint> for Start {
    fn from(p: RationalPoint) -> Self {
        Start::Rational(p)
    }
}

/// Samples of one or more orbits with a `G × G` histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    samples: Vec<TorusPoint>,
    burn_in: usize,
    seeds: Vec<u64>,
    grid: usize,
    histogram: Vec<u64>,
}

fn cell(p: &TorusPoint, g: usize) -> usize {
    let i = ((p.x() * g as f64) as usize).min(g - 1);
    let j = ((p.y() * g as f64) as usize).min(g - 1);
    i * g + j
}

fn histogram(samples: &[TorusPoint], g: usize) -> Vec<u64> {
    let mut h = vec![0u64; g * g];
    for p in samples {
        h[cell(p, g)] += 1;
    }
    h
}

impl EmpiricalMeasure {
    /// Measure from given points (no orbit, burn-in 0).
    pub fn from_points(samples: Vec<TorusPoint>, seed: u64) -> Self {
        let histogram = histogram(&samples, DEFAULT_GRID);
        EmpiricalMeasure { samples, burn_in: 0, seeds: vec![seed], grid: DEFAULT_GRID, histogram }
    }

    /// `n` i.i.d. uniform points.
    pub fn uniform(n: usize, seed: u64) -> Self {
        use rand::Rng;
        let mut r = crate::cocycle::rng(seed);
        let pts = (0..n).map(|_| TorusPoint::new(r.gen::<f64>(), r.gen::<f64>())).collect();
        EmpiricalMeasure::from_points(pts, seed)
    }

    pub fn samples(&self) -> &[TorusPoint] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in
    }

    pub fn seeds(&self) -> &[u64] {
        &self.seeds
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    /// Row-major counts, index `i·G + j` for the cell `[i/G, (i+1)/G) × [j/G, (j+1)/G)`.
    pub fn histogram(&self) -> &[u64] {
        &self.histogram
    }

    /// Same samples binned on a `g × g` grid.
    pub fn with_grid(mut self, g: usize) -> Self {
        let g = g.max(1);
        self.grid = g;
        self.histogram = histogram(&self.samples, g);
        self
    }

    /// Concatenate shards in the given order; histograms add.
    pub fn merge(parts: Vec<EmpiricalMeasure>) -> Option<EmpiricalMeasure> {
        let mut it = parts.into_iter();
        let mut out = it.next()?;
        for p in it {
            if p.grid != out.grid {
                let g = out.grid;
                out.samples.extend(p.samples);
                out.seeds.extend(p.seeds);
                out.histogram = histogram(&out.samples, g);
                continue;
            }
            for (a, b) in out.histogram.iter_mut().zip(&p.histogram) {
                *a += b;
            }
            out.samples.extend(p.samples);
            out.seeds.extend(p.seeds);
        }
        Some(out)
    }
}

/// Empirical measure of one random orbit: `x_{k+1} = f_{ω_k}(x_k)`, keeping
/// `x_k` for `burn_in ≤ k < burn_in + n`.
pub fn sample_stationary(
    family: &[MapSpec],
    nu: &DrivingMeasure,
    start: impl Into<Start>,
    burn_in: usize,
    n: usize,
    seed: u64,
) -> Result<EmpiricalMeasure> {
    nu.validate_for(family.len())?;
    if n < MIN_SAMPLES {
        return Err(Error::PreconditionFail(format!("need at least {MIN_SAMPLES} samples, got {n}")));
    }
    let word = sample_word(nu, burn_in + n, seed);
    let mut samples = Vec::with_capacity(n);
    match start.into() {
        Start::Point(x0) => {
            let mut x = x0;
            for (k, &id) in word.entries().iter().enumerate() {
                if k >= burn_in {
                    samples.push(x);
                }
                x = family[id].apply(x);
            }
        }
        Start::Rational(r0) => {
            if let Some(i) = nu.atoms().iter().map(|a| a.0).find(|&i| !family[i].is_linear()) {
                return Err(Error::PreconditionFail(format!("exact start needs linear maps; map {i} is perturbed")));
            }
            let mats: Vec<_> = family.iter().map(|f| f.linear_part()).collect();
            let mut r = r0;
            for (k, &id) in word.entries().iter().enumerate() {
                if k >= burn_in {
                    samples.push(r.to_point());
                }
                r = r.apply(&mats[id]);
            }
        }
    }
    let histogram = histogram(&samples, DEFAULT_GRID);
    Ok(EmpiricalMeasure { samples, burn_in, seeds: vec![seed], grid: DEFAULT_GRID, histogram })
}

/// One orbit per seed in parallel, merged in seed order.
pub fn sample_stationary_sharded(
    family: &[MapSpec],
    nu: &DrivingMeasure,
    start: Start,
    burn_in: usize,
    n_per_shard: usize,
    seeds: &[u64],
) -> Result<EmpiricalMeasure> {
    let parts = seeds
        .par_iter()
        .map(|&s| sample_stationary(family, nu, start, burn_in, n_per_shard, s))
        .collect::<Result<Vec<_>>>()?;
    EmpiricalMeasure::merge(parts).ok_or_else(|| Error::PreconditionFail("no seeds".into()))
}

const CHUNK: usize = 1 << 14;

/// `1/N Σ e^{2πi k·(x_j − x_ref)}` for the frequencies `k = (a, b)` with
/// `0 ≤ a ≤ K`, `−K ≤ b ≤ K`, returned in that order.
///
/// Phases are taken relative to `x_ref` (which leaves magnitudes unchanged and
/// makes a point mass give exactly 1), and powers are built incrementally.
fn half_plane_coefficients(points: &[TorusPoint], x_ref: [f64; 2], k_max: i64) -> Vec<Complex64> {
    let kk = k_max as usize;
    let width = 2 * kk + 1;
    let partials: Vec<Vec<Complex64>> = points
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = vec![Complex64::new(0.0, 0.0); (kk + 1) * width];
            let mut px = vec![Complex64::new(1.0, 0.0); kk + 1];
            let mut py = vec![Complex64::new(1.0, 0.0); width];
            for p in chunk {
                let ex = Complex64::from_polar(1.0, std::f64::consts::TAU * (p.x() - x_ref[0]));
                let ey = Complex64::from_polar(1.0, std::f64::consts::TAU * (p.y() - x_ref[1]));
                for a in 1..=kk {
                    px[a] = px[a - 1] * ex;
                }
                // py[kk + b] = ey^b
                for b in 1..=kk {
                    py[kk + b] = py[kk + b - 1] * ey;
                    py[kk - b] = py[kk - b + 1] * ey.conj();
                }
                for a in 0..=kk {
                    for (bi, yb) in py.iter().enumerate() {
                        acc[a * width + bi] += px[a] * yb;
                    }
                }
            }
            acc
        })
        .collect();
    let n = points.len().max(1) as f64;
    let mut total = vec![Complex64::new(0.0, 0.0); (kk + 1) * width];
    for part in &partials {
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    total.iter().map(|c| c / n).collect()
}

/// Frequencies with `0 < |k|∞ ≤ K`, one of each `±k` pair.
fn half_plane_frequencies(k_max: i64) -> Vec<(usize, [i64; 2])> {
    let width = 2 * k_max + 1;
    let mut out = Vec::new();
    for a in 0..=k_max {
        for b in -k_max..=k_max {
            if a == 0 && b <= 0 {
                continue;
            }
            out.push(((a * width + b + k_max) as usize, [a, b]));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierSpectrum {
    pub k_max: i64,
    pub n_samples: usize,
    /// `(k, |μ̂(k)|)` for every `0 < |k|∞ ≤ K`.
    pub magnitudes: Vec<([i64; 2], f64)>,
}

impl FourierSpectrum {
    pub fn max_magnitude(&self) -> f64 {
        self.magnitudes.iter().map(|m| m.1).fold(0.0, f64::max)
    }

    /// Largest magnitude and its frequency.
    pub fn argmax(&self) -> Option<([i64; 2], f64)> {
        self.magnitudes.iter().copied().fold(None, |best, m| match best {
            Some((_, v)) if v >= m.1 => best,
            _ => Some(m),
        })
    }
}

/// Weyl-sum magnitudes `|1/N Σ e^{2πi k·x_j}|` over `0 < |k|∞ ≤ K`.
pub fn fourier_spectrum(mu: &EmpiricalMeasure, k_max: i64) -> FourierSpectrum {
    let pts = mu.samples();
    let x_ref = pts.first().map(|p| p.coords()).unwrap_or([0.0, 0.0]);
    let coeffs = half_plane_coefficients(pts, x_ref, k_max);
    let mut magnitudes = Vec::new();
    for (idx, k) in half_plane_frequencies(k_max) {
        let m = coeffs[idx].norm().min(1.0);
        magnitudes.push((k, m));
        magnitudes.push(([-k[0], -k[1]], m));
    }
    magnitudes.sort_by_key(|m| m.0);
    FourierSpectrum { k_max, n_samples: pts.len(), magnitudes }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationarityResidual {
    /// `Σ_A |μ(A) − Σ_i p_i μ(f_i⁻¹A)|` over grid cells.
    pub l1: f64,
    /// Largest single-cell discrepancy.
    pub max_cell: f64,
}

/// Discrepancy between `μ` and `Σ p_i (f_i)_* μ` on a `g × g` grid; the mass
/// `μ(f⁻¹A)` is the fraction of samples `x` with `f(x) ∈ A`.
pub fn stationarity_residual(
    mu: &EmpiricalMeasure,
    family: &[MapSpec],
    nu: &DrivingMeasure,
    g: usize,
) -> Result<StationarityResidual> {
    if mu.is_empty() {
        return Err(Error::PreconditionFail("empty measure".into()));
    }
    nu.validate_for(family.len())?;
    let g = g.max(1);
    let n = mu.len() as f64;
    let base = histogram(mu.samples(), g);
    let mut pushed = vec![0.0; g * g];
    for &(id, p) in nu.atoms() {
        let f = &family[id];
        let images: Vec<TorusPoint> = mu.samples().par_iter().map(|x| f.apply(*x)).collect();
        for (c, h) in pushed.iter_mut().zip(histogram(&images, g)) {
            *c += p * h as f64;
        }
    }
    let (mut l1, mut max_cell) = (0.0, 0.0f64);
    for (b, q) in base.iter().zip(&pushed) {
        let d = (*b as f64 - q).abs() / n;
        l1 += d;
        max_cell = max_cell.max(d);
    }
    Ok(StationarityResidual { l1, max_cell })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub center: TorusPoint,
    pub count: usize,
    pub mass: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomReport {
    pub clusters: Vec<Cluster>,
    pub residual_count: usize,
    pub residual_mass: f64,
    pub total: usize,
}

fn grid_key(p: &TorusPoint, cells: i64) -> (i64, i64) {
    (((p.x() * cells as f64) as i64).min(cells - 1), ((p.y() * cells as f64) as i64).min(cells - 1))
}

/// Greedy atom search: repeatedly take the `radius`-ball (max metric, centred
/// at a sample) holding the most remaining mass, record it and remove its
/// points, until the best ball holds less than `mass_threshold`.
pub fn atom_detect(mu: &EmpiricalMeasure, radius: f64, mass_threshold: f64) -> Result<AtomReport> {
    if !(radius > 0.0) {
        return Err(Error::PreconditionFail("radius must be positive".into()));
    }
    let total = mu.len();
    // distinct points with multiplicities
    let mut uniq: HashMap<(u64, u64), usize> = HashMap::new();
    for p in mu.samples() {
        *uniq.entry((p.x().to_bits(), p.y().to_bits())).or_default() += 1;
    }
    let mut pts: Vec<(TorusPoint, usize)> =
        uniq.into_iter().map(|((x, y), c)| (TorusPoint::new(f64::from_bits(x), f64::from_bits(y)), c)).collect();
    pts.sort_by(|a, b| a.0.x().total_cmp(&b.0.x()).then(a.0.y().total_cmp(&b.0.y())));

    let cells = ((1.0 / radius).floor() as i64).clamp(1, 1 << 20);
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, (p, _)) in pts.iter().enumerate() {
        buckets.entry(grid_key(p, cells)).or_default().push(i);
    }
    let neighbours = |i: usize, alive: &[bool]| -> Vec<usize> {
        let (cx, cy) = grid_key(&pts[i].0, cells);
        let mut out = Vec::new();
        let span = if cells < 3 { 0..cells } else { -1..2 };
        let mut seen = Vec::new();
        for dx in span.clone() {
            for dy in span.clone() {
                let key = if cells < 3 { (dx, dy) } else { ((cx + dx).rem_euclid(cells), (cy + dy).rem_euclid(cells)) };
                if seen.contains(&key) {
                    continue;
                }
                seen.push(key);
                if let Some(b) = buckets.get(&key) {
                    for &j in b {
                        if alive[j] && pts[i].0.distance(&pts[j].0) <= radius {
                            out.push(j);
                        }
                    }
                }
            }
        }
        out
    };

    let mut alive = vec![true; pts.len()];
    let mut clusters = Vec::new();
    let mut assigned = 0usize;
    loop {
        let best = (0..pts.len())
            .into_par_iter()
            .filter(|&i| alive[i])
            .map(|i| (neighbours(i, &alive).iter().map(|&j| pts[j].1).sum::<usize>(), i))
            .reduce_with(|a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });
        let Some((count, i)) = best else { break };
        if (count as f64) < mass_threshold * total as f64 || count == 0 {
            break;
        }
        for j in neighbours(i, &alive) {
            alive[j] = false;
        }
        assigned += count;
        clusters.push(Cluster { center: pts[i].0, count, mass: count as f64 / total as f64, radius });
    }
    let residual_count = total - assigned;
    Ok(AtomReport { clusters, residual_count, residual_mass: residual_count as f64 / total.max(1) as f64, total })
}

/// `max_{0<|k|∞≤K} |μ̂(k) − (f_*μ)^(k)|`, with `f_*μ` given by the images of the samples.
pub fn invariance_distance(mu: &EmpiricalMeasure, spec: &MapSpec, k_max: i64) -> Result<f64> {
    if mu.is_empty() {
        return Err(Error::PreconditionFail("empty measure".into()));
    }
    let pts = mu.samples();
    let x_ref = pts[0].coords();
    let images: Vec<TorusPoint> = pts.par_iter().map(|p| spec.apply(*p)).collect();
    let c0 = half_plane_coefficients(pts, x_ref, k_max);
    let c1 = half_plane_coefficients(&images, x_ref, k_max);
    Ok(half_plane_frequencies(k_max).into_iter().map(|(i, _)| (c0[i] - c1[i]).norm()).fold(0.0, f64::max))
}

/// Decision thresholds of [`classify`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    /// Fourier-flat when every magnitude is below `fourier_factor / √N`.
    pub fourier_factor: f64,
    pub atomic_residual: f64,
    pub dimension_tolerance: f64,
    pub nonrandom: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { fourier_factor: 4.0, atomic_residual: 0.01, dimension_tolerance: 0.1, nonrandom: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Evidence {
    pub exponents: Option<LyapunovEstimate>,
    pub atoms: Option<AtomReport>,
    pub fourier: Option<FourierSpectrum>,
    pub nonrandomness: Option<f64>,
    pub dim_u: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Atomic,
    SRBLike,
    NonRandomStableField,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrichotomyVerdict {
    pub tag: Verdict,
    pub evidence: Evidence,
    pub thresholds: Thresholds,
    /// Which tests fired, in evaluation order.
    pub reasons: Vec<String>,
}

/// Decision tree over the evidence:
///
/// 1. atomic (`residual_mass < atomic_residual`): `Atomic`, unless the Fourier
///    spectrum is flat as well, which is contradictory and gives `Inconclusive`;
/// 2. non-random stable field (`score < nonrandom`): `NonRandomStableField`;
/// 3. hyperbolic exponents (`λᵘ > 0 > λˢ`) with `|dimᵘ − 1| ≤ tol`: `SRBLike`;
/// 4. anything else, including missing evidence: `Inconclusive`.
pub fn classify(evidence: &Evidence, thresholds: &Thresholds) -> TrichotomyVerdict {
    let mut reasons = Vec::new();
    let flat = evidence.fourier.as_ref().map(|f| {
        let bound = thresholds.fourier_factor / (f.n_samples.max(1) as f64).sqrt();
        let m = f.max_magnitude();
        reasons.push(format!("fourier max {m:.3e} vs flat bound {bound:.3e}"));
        m < bound
    });
    let verdict =
        |tag, reasons| TrichotomyVerdict { tag, evidence: evidence.clone(), thresholds: *thresholds, reasons };

    if let Some(a) = &evidence.atoms {
        reasons.push(format!("{} clusters, residual mass {:.3e}", a.clusters.len(), a.residual_mass));
        if a.residual_mass < thresholds.atomic_residual {
            if flat == Some(true) {
                reasons.push("atomic but Fourier-flat: conflicting".into());
                return verdict(Verdict::Inconclusive, reasons);
            }
            return verdict(Verdict::Atomic, reasons);
        }
    }
    if let Some(s) = evidence.nonrandomness {
        reasons.push(format!("nonrandomness score {s:.3e}"));
        if s < thresholds.nonrandom {
            return verdict(Verdict::NonRandomStableField, reasons);
        }
    }
    let hyperbolic = evidence.exponents.map(|e| e.lambda_u > 0.0 && e.lambda_s < 0.0);
    match (hyperbolic, evidence.dim_u) {
        (Some(true), Some(d)) => {
            reasons.push(format!("hyperbolic exponents, dim_u {d:.3}"));
            if (d - 1.0).abs() <= thresholds.dimension_tolerance {
                verdict(Verdict::SRBLike, reasons)
            } else {
                reasons.push("dim_u outside SRB band".into());
                verdict(Verdict::Inconclusive, reasons)
            }
        }
        (Some(false), _) => {
            reasons.push("exponents not hyperbolic".into());
            verdict(Verdict::Inconclusive, reasons)
        }
        _ => {
            reasons.push("missing exponent or dimension evidence".into());
            verdict(Verdict::Inconclusive, reasons)
        }
    }
}
