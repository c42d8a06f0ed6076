//! Joint cone conditions for families of 2×2 matrices.
//!
//! Cones live in the projective line ℝP¹ and are single angular arcs. A pair
//! `(Cᵘ, Cˢ)` certifies a family when every matrix maps `Cᵘ` strictly inside
//! itself, every inverse maps `Cˢ` strictly inside itself, and all of them
//! expand their cone by at least `κ > 1`.
//!
//! Verification is numerical, not rigorous: inclusion uses exact arc images of
//! the cone endpoints, expansion is minimised over a boundary-inclusive grid of
//! directions with golden-section refinement around the grid minimum.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cocycle::{line_angle, line_distance, IntMat2, MapSpec, RealMat2, TorusPoint};

/// Smallest accepted slack for strict inequalities.
pub const MARGIN_FLOOR: f64 = 1e-9;

/// Default number of directions in the expansion grid.
pub const DEFAULT_GRID: usize = 10_000;

/// Arc of lines within `half_width` of `center` (angles mod π).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectiveCone {
    center: f64,
    half_width: f64,
}

impl ProjectiveCone {
    /// `None` unless `0 < half_width < π/2`.
    pub fn new(center: f64, half_width: f64) -> Option<Self> {
        if half_width > 0.0 && half_width < FRAC_PI_2 && center.is_finite() {
            Some(ProjectiveCone { center: line_angle(center), half_width })
        } else {
            None
        }
    }

    /// Cone spanning the arc from `lo` counter-clockwise to `hi`.
    pub fn from_arc(lo: f64, hi: f64) -> Option<Self> {
        let width = (hi - lo).rem_euclid(PI);
        ProjectiveCone::new(lo + 0.5 * width, 0.5 * width)
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn lower(&self) -> f64 {
        line_angle(self.center - self.half_width)
    }

    /// Open-cone membership.
    pub fn contains(&self, angle: f64) -> bool {
        line_distance(angle, self.center) < self.half_width
    }

    pub fn is_disjoint(&self, other: &ProjectiveCone) -> bool {
        self.half_width + other.half_width <= line_distance(self.center, other.center)
    }

    /// Boundary-inclusive grid of `n ≥ 2` directions spanning the closed cone.
    pub fn grid(&self, n: usize) -> impl Iterator<Item = f64> + '_ {
        let lo = self.center - self.half_width;
        let step = 2.0 * self.half_width / (n.max(2) - 1) as f64;
        (0..n.max(2)).map(move |k| lo + step * k as f64)
    }
}

/// Image arc of `cone` under `m`, as `(start, width)` with angles increasing.
fn image_arc(m: &RealMat2, cone: &ProjectiveCone) -> (f64, f64) {
    let a = m.image_angle(cone.center - cone.half_width);
    let b = m.image_angle(cone.center + cone.half_width);
    if m.det() > 0.0 {
        (a, (b - a).rem_euclid(PI))
    } else {
        (b, (a - b).rem_euclid(PI))
    }
}

/// Angular slack of `m·cone ⊂ target`; negative when the inclusion fails.
pub fn inclusion_margin(m: &RealMat2, cone: &ProjectiveCone, target: &ProjectiveCone) -> f64 {
    let (start, width) = image_arc(m, cone);
    let lo = target.center - target.half_width;
    let mut s = (start - lo).rem_euclid(PI);
    // an image starting just below the lower edge wraps to near π
    if s > 2.0 * target.half_width + 0.5 * (PI - 2.0 * target.half_width) {
        s -= PI;
    }
    let e = s + width;
    s.min(2.0 * target.half_width - e)
}

/// `min ‖Mv‖/‖v‖` over the closed cone: grid of `grid` directions, then
/// golden-section refinement in the bracket of the best grid point.
pub fn min_gain_grid(m: &RealMat2, cone: &ProjectiveCone, grid: usize) -> f64 {
    let n = grid.max(3);
    let lo = cone.center - cone.half_width;
    let hi = cone.center + cone.half_width;
    let step = (hi - lo) / (n - 1) as f64;
    let (mut best_k, mut best) = (0usize, f64::INFINITY);
    for k in 0..n {
        let g = m.gain(lo + step * k as f64);
        if g < best {
            best = g;
            best_k = k;
        }
    }
    let mut a = lo + step * best_k.saturating_sub(1) as f64;
    let mut b = (lo + step * (best_k + 1) as f64).min(hi);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (m.gain(c), m.gain(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = m.gain(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = m.gain(d);
        }
    }
    best.min(fc).min(fd)
}

/// `min ‖Mv‖/‖v‖` over the closed cone from the closed form
/// `‖M u(θ)‖² = (p+q)/2 + (p−q)/2·cos 2θ + r·sin 2θ`.
pub fn min_gain_exact(m: &RealMat2, cone: &ProjectiveCone) -> f64 {
    let p = m.a * m.a + m.c * m.c;
    let q = m.b * m.b + m.d * m.d;
    let r = m.a * m.b + m.c * m.d;
    let g2 = |t: f64| 0.5 * (p + q) + 0.5 * (p - q) * (2.0 * t).cos() + r * (2.0 * t).sin();
    let lo = cone.center - cone.half_width;
    let hi = cone.center + cone.half_width;
    let mut best = g2(lo).min(g2(hi));
    let t_min = 0.5 * (r.atan2(0.5 * (p - q)) + PI);
    if line_distance(t_min, cone.center) <= cone.half_width {
        best = best.min(g2(t_min));
    }
    best.max(0.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConeSide {
    Unstable,
    Stable,
}

/// Verified joint cone condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeCertificate {
    pub cone_u: ProjectiveCone,
    pub cone_s: ProjectiveCone,
    /// Verified expansion constant, already reduced by [`MARGIN_FLOOR`].
    pub kappa: f64,
    /// Smallest angular slack over all strict inclusions.
    pub margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ConeFailure {
    NotDisjoint,
    NotInvertible { matrix: usize },
    InclusionFail { matrix: usize, cone: ConeSide, margin: f64 },
    ExpansionFail { matrix: usize, cone: ConeSide, kappa: f64 },
}

/// Check the joint cone condition for `mats` with the given candidate cones.
pub fn check_joint_cone(
    mats: &[RealMat2],
    cone_u: ProjectiveCone,
    cone_s: ProjectiveCone,
) -> Result<ConeCertificate, ConeFailure> {
    check_joint_cone_with_grid(mats, cone_u, cone_s, DEFAULT_GRID)
}

pub fn check_joint_cone_with_grid(
    mats: &[RealMat2],
    cone_u: ProjectiveCone,
    cone_s: ProjectiveCone,
    grid: usize,
) -> Result<ConeCertificate, ConeFailure> {
    if !cone_u.is_disjoint(&cone_s) {
        return Err(ConeFailure::NotDisjoint);
    }
    let mut margin = f64::INFINITY;
    let mut kappa = f64::INFINITY;
    for (i, m) in mats.iter().enumerate() {
        let inv = m.inverse().ok_or(ConeFailure::NotInvertible { matrix: i })?;
        for (side, mat, cone) in [(ConeSide::Unstable, m, &cone_u), (ConeSide::Stable, &inv, &cone_s)] {
            let mg = inclusion_margin(mat, cone, cone);
            if mg <= MARGIN_FLOOR {
                return Err(ConeFailure::InclusionFail { matrix: i, cone: side, margin: mg });
            }
            margin = margin.min(mg);
            let k = min_gain_grid(mat, cone, grid) - MARGIN_FLOOR;
            if k <= 1.0 {
                return Err(ConeFailure::ExpansionFail { matrix: i, cone: side, kappa: k });
            }
            kappa = kappa.min(k);
        }
    }
    Ok(ConeCertificate { cone_u, cone_s, kappa, margin })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Eigenvalues {
    Real(f64, f64),
    Complex { re: f64, im: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicityReport {
    pub is_hyperbolic: bool,
    /// Ordered by decreasing modulus when real.
    pub eigenvalues: Eigenvalues,
    /// `(unstable, stable)` eigenline angles in `[0, π)` for distinct real eigenvalues.
    pub eigen_angles: Option<(f64, f64)>,
}

fn eigenvector_angle(m: &RealMat2, lambda: f64) -> f64 {
    // pick the better conditioned row of (M − λ)v = 0
    let r1 = [m.a - lambda, m.b];
    let r2 = [m.c, m.d - lambda];
    let row = if r1[0].hypot(r1[1]) >= r2[0].hypot(r2[1]) { r1 } else { r2 };
    if row[0] == 0.0 && row[1] == 0.0 {
        return 0.0;
    }
    line_angle((-row[0]).atan2(row[1]))
}

/// Eigen-data of a real 2×2 matrix.
pub fn real_eigen(m: &RealMat2) -> HyperbolicityReport {
    let tr = m.trace();
    let det = m.det();
    let disc = tr * tr - 4.0 * det;
    if disc <= 0.0 {
        let re = 0.5 * tr;
        let im = 0.5 * (-disc).max(0.0).sqrt();
        let eigenvalues = if disc == 0.0 { Eigenvalues::Real(re, re) } else { Eigenvalues::Complex { re, im } };
        return HyperbolicityReport { is_hyperbolic: false, eigenvalues, eigen_angles: None };
    }
    let root = disc.sqrt();
    let big = 0.5 * (tr + if tr >= 0.0 { root } else { -root });
    let small = det / big;
    let hyperbolic = (big.abs() - 1.0).abs() > 1e-12 && (small.abs() - 1.0).abs() > 1e-12;
    let (u, s) = (eigenvector_angle(m, big), eigenvector_angle(m, small));
    HyperbolicityReport {
        is_hyperbolic: hyperbolic && big.abs() > 1.0 && small.abs() < 1.0,
        eigenvalues: Eigenvalues::Real(big, small),
        eigen_angles: Some((u, s)),
    }
}

/// Eigen-data of an integer matrix; hyperbolicity is decided in exact integer
/// arithmetic when `|det| = 1`.
pub fn eigen_analysis(m: &IntMat2) -> HyperbolicityReport {
    let mut report = real_eigen(&m.to_real());
    report.is_hyperbolic = match m.det() {
        1 => m.trace().abs() > 2,
        -1 => m.trace() != 0,
        _ => report.is_hyperbolic,
    };
    report
}

fn circular_line_mean(angles: &[f64]) -> f64 {
    let (s, c) = angles.iter().fold((0.0, 0.0), |(s, c), &a| (s + (2.0 * a).sin(), c + (2.0 * a).cos()));
    if s.hypot(c) < 1e-12 * angles.len() as f64 {
        angles[0]
    } else {
        line_angle(0.5 * s.atan2(c))
    }
}

/// Share of the free gap given to `Cᵘ`, tried in this order.
const SEARCH_SPLITS: [f64; 9] = [0.5, 0.4, 0.6, 0.3, 0.7, 0.2, 0.8, 0.1, 0.9];
/// Fraction of the free gap used by the two cones, widest first.
const SEARCH_FILLS: [f64; 7] = [0.98, 0.9, 0.75, 0.5, 0.25, 0.1, 0.02];

/// Deterministic search for a joint cone certificate.
///
/// Cᵘ is centred at the line-mean of the unstable eigenlines and Cˢ at that of
/// the stable ones; each must contain its own cluster. The free angular gap
/// between the clusters is shared out according to [`SEARCH_FILLS`] ×
/// [`SEARCH_SPLITS`] (outer loop over fills) and the first pair passing
/// [`check_joint_cone`] is returned.
pub fn search_cone_certificate(mats: &[RealMat2]) -> Option<ConeCertificate> {
    if mats.is_empty() {
        return None;
    }
    let mut us = Vec::with_capacity(mats.len());
    let mut ss = Vec::with_capacity(mats.len());
    for m in mats {
        let r = real_eigen(m);
        let (u, s) = r.eigen_angles.filter(|_| r.is_hyperbolic)?;
        us.push(u);
        ss.push(s);
    }
    let cu = circular_line_mean(&us);
    let cs = circular_line_mean(&ss);
    let ru = us.iter().map(|&a| line_distance(a, cu)).fold(0.0, f64::max);
    let rs = ss.iter().map(|&a| line_distance(a, cs)).fold(0.0, f64::max);
    let gap = line_distance(cu, cs) - ru - rs;
    if gap <= 2.0 * MARGIN_FLOOR {
        return None;
    }
    for &fill in &SEARCH_FILLS {
        for &split in &SEARCH_SPLITS {
            let wu = ru + fill * split * gap;
            let ws = rs + fill * (1.0 - split) * gap;
            let (Some(cone_u), Some(cone_s)) = (ProjectiveCone::new(cu, wu), ProjectiveCone::new(cs, ws)) else {
                continue;
            };
            if let Ok(cert) = check_joint_cone(mats, cone_u, cone_s) {
                return Some(cert);
            }
        }
    }
    None
}

/// A letter of a group word: generator index, possibly inverted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Letter {
    pub generator: usize,
    pub inverse: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupWord(pub Vec<Letter>);

impl GroupWord {
    /// Product `g_{w_0} g_{w_1} ⋯` (leftmost letter applied last); `None` on
    /// overflow or a non-invertible inverse letter.
    pub fn evaluate(&self, generators: &[IntMat2]) -> Option<IntMat2> {
        let mut acc = IntMat2::IDENTITY;
        for l in &self.0 {
            let g = generators[l.generator];
            let g = if l.inverse { g.inverse()? } else { g };
            acc = acc.checked_mul(&g)?;
        }
        Some(acc)
    }
}

/// Breadth-first search, in length-lexicographic order over reduced words in
/// the generators and their inverses, for two hyperbolic words whose products
/// do not commute. Returns the first such pair `(earlier, later)`.
pub fn find_noncommuting_hyperbolic(generators: &[IntMat2], max_word_len: usize) -> Option<(GroupWord, GroupWord)> {
    let mut alphabet = Vec::new();
    for (i, g) in generators.iter().enumerate() {
        alphabet.push(Letter { generator: i, inverse: false });
        if g.inverse().is_some() {
            alphabet.push(Letter { generator: i, inverse: true });
        }
    }
    let mut hyperbolic: Vec<(GroupWord, IntMat2)> = Vec::new();
    let mut frontier: Vec<(Vec<Letter>, IntMat2)> = vec![(Vec::new(), IntMat2::IDENTITY)];
    for _ in 0..max_word_len {
        let mut next = Vec::new();
        for (w, m) in &frontier {
            for &l in &alphabet {
                if let Some(last) = w.last() {
                    if last.generator == l.generator && last.inverse != l.inverse {
                        continue;
                    }
                }
                let g = generators[l.generator];
                let g = if l.inverse { g.inverse().expect("alphabet holds invertible letters") } else { g };
                let Some(prod) = m.checked_mul(&g) else { continue };
                let mut word = w.clone();
                word.push(l);
                if eigen_analysis(&prod).is_hyperbolic {
                    if let Some((earlier, _)) =
                        hyperbolic.iter().find(|(_, h)| match (h.checked_mul(&prod), prod.checked_mul(h)) {
                            (Some(ab), Some(ba)) => ab != ba,
                            _ => false,
                        })
                    {
                        return Some((earlier.clone(), GroupWord(word)));
                    }
                    hyperbolic.push((GroupWord(word.clone()), prod));
                }
                next.push((word, prod));
            }
        }
        frontier = next;
    }
    None
}

/// Outcome of checking a certificate against perturbed derivatives on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbedConeReport {
    pub pass: bool,
    /// Smallest slack-adjusted angular inclusion margin.
    pub worst_margin: f64,
    /// Smallest slack-adjusted expansion factor.
    pub worst_kappa: f64,
    /// Grid point and map index attaining the worst combined score.
    pub witness: TorusPoint,
    pub witness_map: usize,
    /// Bound on the derivative change between a point and its nearest grid node.
    pub derivative_slack: f64,
}

struct LocalCheck {
    margin: f64,
    kappa: f64,
}

fn local_check(m: &RealMat2, cone: &ProjectiveCone, slack: f64) -> LocalCheck {
    let gain = min_gain_exact(m, cone);
    if gain <= slack {
        return LocalCheck { margin: f64::NEG_INFINITY, kappa: gain - slack };
    }
    // direction of (M + Δ)v moves by at most asin(‖Δ‖ / (‖Mv‖ − ‖Δ‖))
    let angular = (slack / (gain - slack)).min(1.0).asin();
    LocalCheck { margin: inclusion_margin(m, cone, cone) - angular, kappa: gain - slack }
}

/// Verify the cone conditions for the derivatives of a perturbed family on a
/// `grid_n × grid_n` grid, with a Lipschitz slack covering off-grid points.
pub fn check_perturbed_cones(family: &[MapSpec], cert: &ConeCertificate, grid_n: usize) -> PerturbedConeReport {
    let n = grid_n.max(1);
    // Euclidean distance from any point to its nearest node is at most half a cell diagonal.
    let reach = std::f64::consts::SQRT_2 * 0.5 / n as f64;
    let slacks: Vec<(f64, f64)> = family
        .iter()
        .map(|f| {
            let delta = f.derivative_lipschitz() * reach;
            (delta, delta)
        })
        .collect();
    // worst (score, margin, kappa, i, j, map) per row, reduced in index order
    let rows: Vec<(f64, f64, f64, usize, usize, usize)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut worst = (f64::INFINITY, f64::INFINITY, f64::INFINITY, i, 0, 0);
            for j in 0..n {
                let p = TorusPoint::new(i as f64 / n as f64, j as f64 / n as f64);
                for (k, f) in family.iter().enumerate() {
                    let d = f.derivative(p);
                    let Some(dinv) = d.inverse() else {
                        return (f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY, i, j, k);
                    };
                    let (delta, _) = slacks[k];
                    let inv_norm = dinv.opnorm();
                    let delta_inv = if inv_norm * delta < 1.0 {
                        inv_norm * inv_norm * delta / (1.0 - inv_norm * delta)
                    } else {
                        f64::INFINITY
                    };
                    let fu = local_check(&d, &cert.cone_u, delta);
                    let fs = local_check(&dinv, &cert.cone_s, delta_inv);
                    let margin = fu.margin.min(fs.margin);
                    let kappa = fu.kappa.min(fs.kappa);
                    let score = margin.min(kappa - 1.0);
                    if score < worst.0 {
                        worst = (score, margin, kappa, i, j, k);
                    }
                    worst.1 = worst.1.min(margin);
                    worst.2 = worst.2.min(kappa);
                }
            }
            worst
        })
        .collect();
    let mut worst_margin = f64::INFINITY;
    let mut worst_kappa = f64::INFINITY;
    let mut best = (f64::INFINITY, 0usize, 0usize, 0usize);
    for r in &rows {
        worst_margin = worst_margin.min(r.1);
        worst_kappa = worst_kappa.min(r.2);
        if r.0 < best.0 {
            best = (r.0, r.3, r.4, r.5);
        }
    }
    PerturbedConeReport {
        pass: worst_margin > 0.0 && worst_kappa > 1.0,
        worst_margin,
        worst_kappa,
        witness: TorusPoint::new(best.1 as f64 / n as f64, best.2 as f64 / n as f64),
        witness_map: best.3,
        derivative_slack: slacks.iter().map(|s| s.0).fold(0.0, f64::max),
    }
}

/// Bisection on the perturbation amplitude for the largest passing `ε`.
///
/// `family_at(ε)` builds the family; `lo` must pass and `hi` must fail.
/// Returns `(ε_pass, ε_fail, report at ε_fail)`.
pub fn bisect_perturbation<F>(
    family_at: F,
    cert: &ConeCertificate,
    grid_n: usize,
    mut lo: f64,
    mut hi: f64,
    iterations: usize,
) -> Option<(f64, f64, PerturbedConeReport)>
where
    F: Fn(f64) -> Option<Vec<MapSpec>>,
{
    let check = |eps: f64| family_at(eps).map(|fam| check_perturbed_cones(&fam, cert, grid_n));
    if !check(lo)?.pass {
        return None;
    }
    let mut fail_report = check(hi).filter(|r| !r.pass)?;
    for _ in 0..iterations {
        let mid = 0.5 * (lo + hi);
        match check(mid) {
            Some(r) if r.pass => lo = mid,
            Some(r) => {
                hi = mid;
                fail_report = r;
            }
            None => hi = mid,
        }
    }
    Some((lo, hi, fail_report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::SineTerm;
    use std::f64::consts::{FRAC_PI_4, TAU};

    fn a() -> IntMat2 {
        IntMat2::new(2, 1, 1, 1)
    }
    fn b() -> IntMat2 {
        IntMat2::new(1, 1, 1, 2)
    }
    fn quadrant_cones() -> (ProjectiveCone, ProjectiveCone) {
        (ProjectiveCone::new(FRAC_PI_4, FRAC_PI_4).unwrap(), ProjectiveCone::new(3.0 * FRAC_PI_4, FRAC_PI_4).unwrap())
    }

    #[test]
    fn eigen_examples() {
        let r = eigen_analysis(&a());
        assert!(r.is_hyperbolic);
        let s5 = 5f64.sqrt();
        match r.eigenvalues {
            Eigenvalues::Real(l1, l2) => {
                assert!((l1 - (3.0 + s5) / 2.0).abs() < 1e-14);
                assert!((l2 - (3.0 - s5) / 2.0).abs() < 1e-14);
            }
            _ => panic!("expected real eigenvalues"),
        }
        let rot = eigen_analysis(&IntMat2::new(0, -1, 1, 0));
        assert!(!rot.is_hyperbolic);
        assert!(matches!(rot.eigenvalues, Eigenvalues::Complex { .. }));
        assert!(!eigen_analysis(&IntMat2::new(1, 1, 0, 1)).is_hyperbolic);
        // det −1, trace 1: eigenvalues φ and −1/φ
        assert!(eigen_analysis(&IntMat2::new(1, 1, 1, 0)).is_hyperbolic);
    }

    #[test]
    fn eigenpairs_satisfy_definition() {
        for m in [a(), b(), IntMat2::new(3, 2, 1, 1), IntMat2::new(1, 1, 1, 0), IntMat2::new(5, 2, 2, 1)] {
            let r = eigen_analysis(&m);
            let (Eigenvalues::Real(l1, l2), Some((t1, t2))) = (r.eigenvalues, r.eigen_angles) else { panic!() };
            let mr = m.to_real();
            for (l, t) in [(l1, t1), (l2, t2)] {
                let v = [t.cos(), t.sin()];
                let w = mr.apply(v);
                assert!((w[0] - l * v[0]).abs() < 1e-10 && (w[1] - l * v[1]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn hyperbolic_iff_trace_exceeds_two_for_sl2() {
        for x in -4..=4 {
            for y in -4..=4 {
                for z in -4..=4 {
                    // complete to det 1 when possible: w = (1 + y z) / x
                    if x == 0 || (1 + y * z) % x != 0 {
                        continue;
                    }
                    let m = IntMat2::new(x, y, z, (1 + y * z) / x);
                    assert_eq!(m.det(), 1);
                    assert_eq!(eigen_analysis(&m).is_hyperbolic, m.trace().abs() > 2);
                }
            }
        }
    }

    #[test]
    fn quadrant_certificate_for_a_and_b() {
        let (cu, cs) = quadrant_cones();
        let cert = check_joint_cone(&[a().to_real(), b().to_real()], cu, cs).unwrap();
        assert!(cert.kappa > 1.0);
        // κ is √2: both matrices send e₂ (resp. e₁ under the inverse) to a vector of length √2
        assert!((cert.kappa - 2f64.sqrt()).abs() < 1e-8);
        let fine = check_joint_cone_with_grid(&[a().to_real(), b().to_real()], cu, cs, 10 * DEFAULT_GRID).unwrap();
        assert!(fine.kappa > 1.0 && (fine.kappa - cert.kappa).abs() < 1e-8);
    }

    #[test]
    fn inverse_pair_fails_inclusion() {
        let (cu, cs) = quadrant_cones();
        let r = check_joint_cone(&[a().to_real(), a().inverse().unwrap().to_real()], cu, cs);
        assert!(matches!(r, Err(ConeFailure::InclusionFail { matrix: 1, .. })));
    }

    #[test]
    fn eigen_cones_of_single_map() {
        let r = eigen_analysis(&a());
        let (u, s) = r.eigen_angles.unwrap();
        let cu = ProjectiveCone::new(u, 0.1).unwrap();
        let cs = ProjectiveCone::new(s, 0.1).unwrap();
        let m = [a().to_real()];
        let cert = check_joint_cone(&m, cu, cs).unwrap();
        let fine = check_joint_cone_with_grid(&m, cu, cs, 10 * DEFAULT_GRID).unwrap();
        assert!((cert.kappa - fine.kappa).abs() / fine.kappa < 0.05);
        // grid + golden section against the closed-form sinusoid minimum
        let exact = min_gain_exact(&m[0], &cu).min(min_gain_exact(&m[0].inverse().unwrap(), &cs));
        assert!((cert.kappa + MARGIN_FLOOR - exact).abs() < 1e-10);
    }

    #[test]
    fn grid_minimum_agrees_with_closed_form() {
        let mut seed = 1u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..200 {
            let m = RealMat2::new(4.0 * next() - 2.0, 4.0 * next() - 2.0, 4.0 * next() - 2.0, 4.0 * next() - 2.0);
            let cone = ProjectiveCone::new(PI * next(), 0.01 + 1.5 * next()).unwrap();
            let g = min_gain_grid(&m, &cone, 2000);
            let e = min_gain_exact(&m, &cone);
            assert!((g - e).abs() < 1e-9 * (1.0 + e), "{g} vs {e}");
        }
    }

    #[test]
    fn search_finds_known_certificates() {
        assert!(search_cone_certificate(&[a().to_real(), b().to_real()]).is_some());
        assert!(search_cone_certificate(&[a().to_real()]).is_some());
        // conjugating by a quarter turn swaps the eigen-frames: the clusters collide
        let r = RealMat2::rotation(FRAC_PI_2);
        let conj = r * a().to_real() * r.inverse().unwrap();
        assert!(search_cone_certificate(&[a().to_real(), conj]).is_none());
        assert!(search_cone_certificate(&[RealMat2::rotation(0.3)]).is_none());
    }

    #[test]
    fn noncommuting_words() {
        let (w1, w2) = find_noncommuting_hyperbolic(&[a(), b()], 3).unwrap();
        assert_eq!(w1.0.len(), 1);
        assert_eq!(w2.0.len(), 1);
        let (p, q) = (w1.evaluate(&[a(), b()]).unwrap(), w2.evaluate(&[a(), b()]).unwrap());
        assert!(eigen_analysis(&p).is_hyperbolic && eigen_analysis(&q).is_hyperbolic);
        assert_ne!(p * q, q * p);
        assert_eq!(a() * b(), IntMat2::new(3, 4, 2, 3));
        assert_eq!(b() * a(), IntMat2::new(3, 2, 4, 3));
        assert!(find_noncommuting_hyperbolic(&[a()], 6).is_none());
        assert!(find_noncommuting_hyperbolic(&[IntMat2::new(0, -1, 1, 0)], 6).is_none());
    }

    #[test]
    fn noncommuting_words_beyond_length_one() {
        // parabolic generators: products of length two are the first hyperbolic words
        let gens = [IntMat2::new(1, 2, 0, 1), IntMat2::new(1, 0, 2, 1)];
        let (w1, w2) = find_noncommuting_hyperbolic(&gens, 3).unwrap();
        let (p, q) = (w1.evaluate(&gens).unwrap(), w2.evaluate(&gens).unwrap());
        assert!(eigen_analysis(&p).is_hyperbolic && eigen_analysis(&q).is_hyperbolic);
        assert_ne!(p * q, q * p);
    }

    fn shear_family(eps: f64) -> Option<Vec<MapSpec>> {
        let h = vec![SineTerm::new(1, 1.0 / TAU, 0.0)];
        let v = vec![SineTerm::new(1, 1.0 / TAU, 0.7)];
        Some(vec![MapSpec::shear_pair(a(), h.clone(), v.clone(), eps).ok()?, MapSpec::shear_pair(b(), h, v, eps).ok()?])
    }

    #[test]
    fn perturbed_check_at_zero_matches_linear_margin() {
        let (cu, cs) = quadrant_cones();
        let cert = check_joint_cone(&[a().to_real(), b().to_real()], cu, cs).unwrap();
        let rep = check_perturbed_cones(&shear_family(0.0).unwrap(), &cert, 16);
        assert!(rep.pass);
        assert_eq!(rep.worst_margin, cert.margin);
        assert_eq!(rep.derivative_slack, 0.0);
    }

    #[test]
    fn perturbed_check_small_shear_passes() {
        let (cu, cs) = quadrant_cones();
        let cert = check_joint_cone(&[a().to_real(), b().to_real()], cu, cs).unwrap();
        let rep = check_perturbed_cones(&shear_family(0.02).unwrap(), &cert, 256);
        assert!(rep.pass, "{rep:?}");
        assert!(rep.worst_margin < cert.margin);
    }

    #[test]
    fn bisection_locates_failure() {
        let (cu, cs) = quadrant_cones();
        let cert = check_joint_cone(&[a().to_real(), b().to_real()], cu, cs).unwrap();
        let (lo, hi, rep) = bisect_perturbation(shear_family, &cert, 64, 0.0, 0.1, 20).unwrap();
        assert!(lo < hi && hi - lo < 1e-6);
        assert!(!rep.pass);
        assert!(check_perturbed_cones(&shear_family(lo).unwrap(), &cert, 64).pass);
    }
}
