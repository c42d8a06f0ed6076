//! Local unstable curves, affine parameters, conditional slices and pointwise
//! dimension estimates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cocycle::{line_angle, MapSpec, OrbitWindow, ScaledMat2, TorusPoint, Word};
use crate::error::{Error, Result};
use crate::lyapunov::LyapunovEstimate;
use crate::stationary::EmpiricalMeasure;

/// Smallest slice accepted by [`conditional_slice`].
pub const MIN_SLICE: usize = 200;
/// Largest chart radius; beyond it lifts near the base become ambiguous.
pub const MAX_RADIUS: f64 = 0.25;
/// Offsets below this are pushed by quadrature of the derivative.
const SIMPSON_BELOW: f64 = 1e-3;

/// A point of the curve under construction, relative to the current centre.
#[derive(Debug, Clone)]
struct Node {
    off: [f64; 2],
    tan: [f64; 2],
    /// `log‖Df t̂‖` at each stage so far.
    logj: Vec<f64>,
}

fn norm(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

fn lerp2(a: [f64; 2], b: [f64; 2], t: f64) -> [f64; 2] {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

fn unit(v: [f64; 2]) -> [f64; 2] {
    let r = norm(v);
    [v[0] / r, v[1] / r]
}

fn mix(a: &Node, b: &Node, t: f64) -> Node {
    Node {
        off: lerp2(a.off, b.off, t),
        tan: unit(lerp2(a.tan, b.tan, t)),
        logj: a.logj.iter().zip(&b.logj).map(|(x, y)| x + t * (y - x)).collect(),
    }
}

/// Local unstable curve through `base` for the past of a word.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnstableCurve {
    pub base: TorusPoint,
    /// Index of `base` within the word.
    pub at: usize,
    /// Letters `ω_{at−n_back} … ω_{at−1}` used to build the curve.
    pub past_word: Vec<usize>,
    pub radius: f64,
    pub base_index: usize,
    /// Lift offsets from `base`, ordered along the curve.
    pub offsets: Vec<[f64; 2]>,
    pub points: Vec<TorusPoint>,
    /// Unit tangents, consistently oriented.
    pub tangents: Vec<[f64; 2]>,
    pub tangent_angles: Vec<f64>,
    /// `log_jacobians[i][k − 1] = log J` at the `k`-th preimage of point `i`,
    /// `J = ‖Df t̂‖` along the curve.
    pub log_jacobians: Vec<Vec<f64>>,
    /// Signed arc length from the base.
    pub arc: Vec<f64>,
}

impl UnstableCurve {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn n_back(&self) -> usize {
        self.past_word.len()
    }

    /// Offset of `p` from the base in the lift around it.
    pub fn offset_of(&self, p: TorusPoint) -> [f64; 2] {
        self.base.displacement(&p)
    }

    /// Nearest point of the polyline to `q` (an offset from the base):
    /// `(segment, fraction, distance)`, or `None` when the foot lies beyond an end.
    pub fn project_offset(&self, q: [f64; 2]) -> Option<(usize, f64, f64)> {
        project(&self.offsets, q)
    }
}

fn project(poly: &[[f64; 2]], q: [f64; 2]) -> Option<(usize, f64, f64)> {
    let mut best: Option<(usize, f64, f64)> = None;
    for s in 0..poly.len().saturating_sub(1) {
        let (a, b) = (poly[s], poly[s + 1]);
        let d = [b[0] - a[0], b[1] - a[1]];
        let l2 = d[0] * d[0] + d[1] * d[1];
        let t = if l2 > 0.0 { ((q[0] - a[0]) * d[0] + (q[1] - a[1]) * d[1]) / l2 } else { 0.0 };
        let tc = t.clamp(0.0, 1.0);
        let foot = lerp2(a, b, tc);
        let dist = norm([q[0] - foot[0], q[1] - foot[1]]);
        if best.is_none_or(|bst| dist < bst.2) {
            best = Some((s, tc, dist));
        }
    }
    let (s, t, d) = best?;
    let at_end = (s == 0 && t == 0.0) || (s + 2 == poly.len() && t == 1.0);
    if at_end {
        let end = if s == 0 { poly[0] } else { poly[poly.len() - 1] };
        // accept only when q sits on the end point itself
        if norm([q[0] - end[0], q[1] - end[1]]) > 0.0 {
            return None;
        }
    }
    Some((s, t, d))
}

/// Hausdorff-type distance: largest distance from the points of `pts` to the polyline `poly`.
pub fn max_distance_to_polyline(pts: &[[f64; 2]], poly: &[[f64; 2]]) -> f64 {
    pts.iter()
        .map(|&q| {
            let mut best = f64::INFINITY;
            for s in 0..poly.len() - 1 {
                let (a, b) = (poly[s], poly[s + 1]);
                let d = [b[0] - a[0], b[1] - a[1]];
                let l2 = d[0] * d[0] + d[1] * d[1];
                let t =
                    if l2 > 0.0 { (((q[0] - a[0]) * d[0] + (q[1] - a[1]) * d[1]) / l2).clamp(0.0, 1.0) } else { 0.0 };
                let f = lerp2(a, b, t);
                best = best.min(norm([q[0] - f[0], q[1] - f[1]]));
            }
            best
        })
        .fold(0.0, f64::max)
}

/// Build the local unstable curve of `x = x_at` with `n_points` points within
/// `radius` of `x`.
///
/// `x` is pulled back `n_back` steps along the word; a short straight segment
/// along the most expanded direction of `D f^{n_back}` is laid there and pushed
/// forward stage by stage. Each stage re-anchors the centre on the stored
/// orbit, bisects gaps above the working spacing (new points take their
/// preimage, tangent and Jacobian history by interpolation of their
/// neighbours) and trims points far outside the chart. The result is
/// resampled evenly in arc length with the base at index `n_points / 2`.
pub fn unstable_curve(
    family: &[MapSpec],
    word: &Word,
    at: usize,
    x: TorusPoint,
    radius: f64,
    n_back: usize,
    n_points: usize,
) -> Result<UnstableCurve> {
    if !(radius > 0.0) || radius >= MAX_RADIUS {
        return Err(Error::ChartOverflow { stage: 0 });
    }
    if n_points < 3 {
        return Err(Error::PreconditionFail("need at least three curve points".into()));
    }
    let win = OrbitWindow::new(family, word, at, x, n_back, 0)?;
    let n = n_back as isize;
    let mut cocycle = ScaledMat2::identity();
    for j in -n..0 {
        cocycle = cocycle.then(&win.step_derivative(family, j));
    }
    let u0 = {
        let t = cocycle.mat.top_right_singular_angle();
        [t.cos(), t.sin()]
    };
    let (log_growth, _) = cocycle.log_singular_values();
    let i0 = n_points / 2;
    let h_final = radius / i0.max(1) as f64;
    let spacing = 0.5 * h_final;

    let mut half = 2.0 * radius * (-log_growth).exp();
    for _ in 0..8 {
        match grow(family, &win, n_back, u0, half, radius, spacing)? {
            Some(nodes) => return Ok(finish(x, at, &win, n_back, radius, n_points, nodes)),
            None => half *= 2.0,
        }
    }
    Err(Error::ChartOverflow { stage: n_back })
}

/// Push the initial segment through all stages; `None` if it ends up too short.
fn grow(
    family: &[MapSpec],
    win: &OrbitWindow,
    n_back: usize,
    u0: [f64; 2],
    half: f64,
    radius: f64,
    spacing: f64,
) -> Result<Option<(Vec<Node>, usize)>> {
    let m = 8;
    let mut nodes: Vec<Node> = (-m..=m)
        .map(|i| Node {
            off: [u0[0] * half * i as f64 / m as f64, u0[1] * half * i as f64 / m as f64],
            tan: u0,
            logj: Vec::new(),
        })
        .collect();
    let mut centre = m as usize;
    let trim = 1.5 * radius;
    for k in 0..n_back {
        let j = k as isize - n_back as isize;
        let f = &family[win.letter(j)];
        let c = win.point(j).coords();
        let fc = f.apply_lift(c);
        let push = |nd: &Node| {
            let o = nd.off;
            let p = [c[0] + o[0], c[1] + o[1]];
            // below an ulp of the coordinates `c + o` loses `o`; Simpson on the derivative keeps it
            let off = if norm(o) < SIMPSON_BELOW {
                let mid = f.derivative_lift([c[0] + 0.5 * o[0], c[1] + 0.5 * o[1]]).apply(o);
                let d0 = f.derivative_lift(c).apply(o);
                let d1 = f.derivative_lift(p).apply(o);
                [(d0[0] + 4.0 * mid[0] + d1[0]) / 6.0, (d0[1] + 4.0 * mid[1] + d1[1]) / 6.0]
            } else {
                let q = f.apply_lift(p);
                [q[0] - fc[0], q[1] - fc[1]]
            };
            let w = f.derivative_lift(p).apply(nd.tan);
            let r = norm(w);
            let mut logj = nd.logj.clone();
            logj.push(r.ln());
            Node { off, tan: [w[0] / r, w[1] / r], logj }
        };
        let pushed: Vec<Node> = nodes.par_iter().map(push).collect();
        let mut out = Vec::with_capacity(pushed.len() * 2);
        let mut new_centre = 0;
        for i in 0..pushed.len() {
            if i == centre {
                new_centre = out.len();
            }
            let mut cur = pushed[i].clone();
            if i == centre {
                cur.off = [0.0, 0.0];
            }
            out.push(cur);
            if i + 1 < pushed.len() {
                refine(&nodes[i], &nodes[i + 1], &pushed[i], &pushed[i + 1], &push, spacing, 0, &mut out);
            }
        }
        // trim: keep a contiguous run around the centre, plus one point beyond `trim` per side
        let mut lo = new_centre;
        while lo > 0 && norm(out[lo].off) <= trim {
            lo -= 1;
        }
        let mut hi = new_centre;
        while hi + 1 < out.len() && norm(out[hi].off) <= trim {
            hi += 1;
        }
        if out[lo..=hi].iter().any(|nd| nd.off[0].abs() >= 0.5 || nd.off[1].abs() >= 0.5) {
            return Err(Error::ChartOverflow { stage: k + 1 });
        }
        centre = new_centre - lo;
        nodes = out.drain(lo..=hi).collect();
    }
    // both sides must reach the radius, with distance from the base increasing
    let reach_left = nodes[..centre].iter().any(|nd| norm(nd.off) >= radius);
    let reach_right = nodes[centre + 1..].iter().any(|nd| norm(nd.off) >= radius);
    if !(reach_left && reach_right) {
        return Ok(None);
    }
    let mut i = centre;
    while i > 0 && norm(nodes[i].off) < radius {
        if norm(nodes[i - 1].off) <= norm(nodes[i].off) {
            return Err(Error::ChartOverflow { stage: n_back });
        }
        i -= 1;
    }
    let mut i = centre;
    while i + 1 < nodes.len() && norm(nodes[i].off) < radius {
        if norm(nodes[i + 1].off) <= norm(nodes[i].off) {
            return Err(Error::ChartOverflow { stage: n_back });
        }
        i += 1;
    }
    Ok(Some((nodes, centre)))
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(&Node) -> Node>(
    pa: &Node,
    pb: &Node,
    a: &Node,
    b: &Node,
    push: &F,
    spacing: f64,
    depth: usize,
    out: &mut Vec<Node>,
) {
    let gap = norm([b.off[0] - a.off[0], b.off[1] - a.off[1]]);
    if gap <= spacing || depth >= 40 {
        return;
    }
    let pm = mix(pa, pb, 0.5);
    let m = push(&pm);
    refine(pa, &pm, a, &m, push, spacing, depth + 1, out);
    out.push(m.clone());
    refine(&pm, pb, &m, b, push, spacing, depth + 1, out);
}

fn finish(
    x: TorusPoint,
    at: usize,
    win: &OrbitWindow,
    n_back: usize,
    radius: f64,
    n_points: usize,
    (nodes, centre): (Vec<Node>, usize),
) -> UnstableCurve {
    // signed arc length along the fine polyline
    let mut s = vec![0.0; nodes.len()];
    for i in centre + 1..nodes.len() {
        s[i] = s[i - 1] + norm([nodes[i].off[0] - nodes[i - 1].off[0], nodes[i].off[1] - nodes[i - 1].off[1]]);
    }
    for i in (0..centre).rev() {
        s[i] = s[i + 1] - norm([nodes[i + 1].off[0] - nodes[i].off[0], nodes[i + 1].off[1] - nodes[i].off[1]]);
    }
    // arc length at which each side crosses the chart radius
    let crossing = |range: Vec<usize>| {
        let mut prev = centre;
        for i in range {
            let (r0, r1) = (norm(nodes[prev].off), norm(nodes[i].off));
            if r1 >= radius {
                let t = (radius - r0) / (r1 - r0);
                return s[prev] + t * (s[i] - s[prev]);
            }
            prev = i;
        }
        s[prev]
    };
    let s_minus = -crossing((0..centre).rev().collect());
    let s_plus = crossing((centre + 1..nodes.len()).collect());
    let i0 = n_points / 2;
    let h = (s_minus / i0 as f64).min(s_plus / (n_points - 1 - i0) as f64);

    let mut seg = 0usize;
    let resampled: Vec<(Node, f64)> = (0..n_points)
        .map(|i| {
            if i == i0 {
                return (nodes[centre].clone(), 0.0);
            }
            let target = (i as f64 - i0 as f64) * h;
            while seg + 2 < nodes.len() && s[seg + 1] < target {
                seg += 1;
            }
            let t = ((target - s[seg]) / (s[seg + 1] - s[seg])).clamp(0.0, 1.0);
            (mix(&nodes[seg], &nodes[seg + 1], t), target)
        })
        .collect();

    let bl = x.coords();
    let offsets: Vec<[f64; 2]> = resampled.iter().map(|(nd, _)| nd.off).collect();
    let points = offsets.iter().map(|o| TorusPoint::from_lift([bl[0] + o[0], bl[1] + o[1]])).collect();
    let mut tangents: Vec<[f64; 2]> = resampled.iter().map(|(nd, _)| nd.tan).collect();
    // orient along increasing index
    let dir = [offsets[n_points - 1][0] - offsets[0][0], offsets[n_points - 1][1] - offsets[0][1]];
    if tangents[i0][0] * dir[0] + tangents[i0][1] * dir[1] < 0.0 {
        for t in &mut tangents {
            *t = [-t[0], -t[1]];
        }
    }
    let tangent_angles = tangents.iter().map(|t| line_angle(t[1].atan2(t[0]))).collect();
    let log_jacobians = resampled.iter().map(|(nd, _)| nd.logj.iter().rev().copied().collect()).collect();
    let arc = resampled.iter().map(|r| r.1).collect();
    let past_word = (0..n_back).map(|k| win.letter(k as isize - n_back as isize)).collect();
    UnstableCurve {
        base: x,
        at,
        past_word,
        radius,
        base_index: i0,
        offsets,
        points,
        tangents,
        tangent_angles,
        log_jacobians,
        arc,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineChart {
    pub k: usize,
    /// `ρ(z) = Π_{k=1}^{K} J(y_{−k}) / J(z_{−k})` per curve point.
    pub rho: Vec<f64>,
    /// `H(z) = ∫_y^z ρ ds`, signed along the curve.
    pub h: Vec<f64>,
}

impl AffineChart {
    /// `H` at a fractional position on segment `seg`.
    pub fn h_at(&self, seg: usize, frac: f64) -> f64 {
        self.h[seg] + frac * (self.h[seg + 1] - self.h[seg])
    }
}

/// Truncated affine parameter along `curve` with `K` backward Jacobian ratios,
/// integrated by the trapezoid rule in arc length.
pub fn affine_parameter(curve: &UnstableCurve, k: usize) -> Result<AffineChart> {
    if k > curve.n_back() {
        return Err(Error::OutOfRange { requested: k, available: curve.n_back() });
    }
    let b = curve.base_index;
    let base = &curve.log_jacobians[b];
    let rho: Vec<f64> =
        curve.log_jacobians.iter().map(|lj| (0..k).map(|i| base[i] - lj[i]).sum::<f64>().exp()).collect();
    let mut h = vec![0.0; rho.len()];
    let seg = |i: usize, j: usize| {
        norm([curve.offsets[j][0] - curve.offsets[i][0], curve.offsets[j][1] - curve.offsets[i][1]])
    };
    for i in b + 1..rho.len() {
        h[i] = h[i - 1] + 0.5 * (rho[i - 1] + rho[i]) * seg(i - 1, i);
    }
    for i in (0..b).rev() {
        h[i] = h[i + 1] - 0.5 * (rho[i] + rho[i + 1]) * seg(i, i + 1);
    }
    Ok(AffineChart { k, rho, h })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntertwiningReport {
    /// `max |J(y)·H_y(z) − H_{f y}(f z)|` over compared points.
    pub max_residual: f64,
    /// Largest distance from an image point `f z` to the curve at `f y`.
    pub max_offset: f64,
    pub compared: usize,
    /// `J(y) = ‖Df|Eᵘ(y)‖`.
    pub jacobian: f64,
}

/// Compare the chart at `x = x_at` pushed by `f = f_{ω_at}` against the chart
/// rebuilt at `f(x)` from the shifted word.
#[allow(clippy::too_many_arguments)]
pub fn intertwining_check(
    family: &[MapSpec],
    word: &Word,
    at: usize,
    x: TorusPoint,
    radius: f64,
    n_back: usize,
    n_points: usize,
    k: usize,
) -> Result<IntertwiningReport> {
    if at >= word.len() {
        return Err(Error::OutOfRange { requested: at, available: word.len() });
    }
    let f = &family[word.get(at)];
    let curve = unstable_curve(family, word, at, x, radius, n_back, n_points)?;
    let chart = affine_parameter(&curve, k)?;
    let fx = f.apply(x);
    let next = unstable_curve(family, word, at + 1, fx, radius, n_back, n_points)?;
    let next_chart = affine_parameter(&next, k)?;

    let xl = x.coords();
    let fxl = f.apply_lift(xl);
    let t = curve.tangents[curve.base_index];
    let w = f.derivative_lift(xl).apply(t);
    let jacobian = norm(w);
    let nt = next.tangents[next.base_index];
    let sign = if w[0] * nt[0] + w[1] * nt[1] >= 0.0 { 1.0 } else { -1.0 };

    let (mut max_residual, mut max_offset, mut compared) = (0.0f64, 0.0f64, 0usize);
    for (i, o) in curve.offsets.iter().enumerate() {
        let q = f.apply_lift([xl[0] + o[0], xl[1] + o[1]]);
        let qo = [q[0] - fxl[0], q[1] - fxl[1]];
        if norm(qo) >= 0.999 * radius {
            continue;
        }
        let Some((s, fr, d)) = next.project_offset(qo) else { continue };
        max_offset = max_offset.max(d);
        let r = (jacobian * chart.h[i] - sign * next_chart.h_at(s, fr)).abs();
        max_residual = max_residual.max(r);
        compared += 1;
    }
    Ok(IntertwiningReport { max_residual, max_offset, compared, jacobian })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slice {
    /// `H` coordinates of the samples inside the tube.
    pub coords: Vec<f64>,
    pub count: usize,
    pub tube_halfwidth: f64,
}

/// `H` coordinates of the samples within `tube_halfwidth` of the curve,
/// each projected to its nearest curve point.
pub fn conditional_slice(
    mu: &EmpiricalMeasure,
    curve: &UnstableCurve,
    chart: &AffineChart,
    tube_halfwidth: f64,
) -> Result<Slice> {
    let reach = curve.offsets.iter().map(|&o| norm(o)).fold(0.0, f64::max) + tube_halfwidth;
    let coords: Vec<f64> = mu
        .samples()
        .par_iter()
        .filter_map(|p| {
            if curve.base.distance(p) > reach {
                return None;
            }
            let q = curve.offset_of(*p);
            let (s, fr, d) = curve.project_offset(q)?;
            (d <= tube_halfwidth).then(|| chart.h_at(s, fr))
        })
        .collect();
    let count = coords.len();
    if count < MIN_SLICE {
        return Err(Error::InsufficientSlice { count, required: MIN_SLICE });
    }
    Ok(Slice { coords, count, tube_halfwidth })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub dim: f64,
    pub fit_range: (f64, f64),
    /// `(r, C(r))` at every radius.
    pub correlation_sums: Vec<(f64, f64)>,
    /// RMS residual of the log-log fit.
    pub fit_residual: f64,
}

/// Radii as fractions of the coordinate span, `10^{−3} … 10^{−1}`.
const RADIUS_EXPONENTS: [f64; 9] = [-3.0, -2.75, -2.5, -2.25, -2.0, -1.75, -1.5, -1.25, -1.0];
/// Indices of the fitted radii (the middle decade).
const FIT: std::ops::Range<usize> = 2..7;

/// Fraction of pairs within distance `r` of each other, for each `r` in `radii`.
fn correlation_sums(sorted: &[f64], radii: &[f64]) -> Vec<f64> {
    let n = sorted.len();
    let pairs = (n * (n - 1) / 2) as f64;
    radii
        .iter()
        .map(|&r| {
            let mut j = 0usize;
            let mut count = 0usize;
            for i in 0..n {
                while sorted[i] - sorted[j] > r {
                    j += 1;
                }
                count += i - j;
            }
            count as f64 / pairs
        })
        .collect()
}

/// Correlation dimension of a set of reals: slope of `log C(r)` against
/// `log r` over the middle decade of nine radii spanning `[10⁻³, 10⁻¹]` times
/// the coordinate span.
pub fn dimension_estimate(coords: &[f64]) -> Result<DimensionEstimate> {
    if coords.len() < MIN_SLICE {
        return Err(Error::InsufficientSlice { count: coords.len(), required: MIN_SLICE });
    }
    let mut sorted = coords.to_vec();
    sorted.sort_by(f64::total_cmp);
    let span = sorted[sorted.len() - 1] - sorted[0];
    if span == 0.0 {
        return Ok(DimensionEstimate { dim: 0.0, fit_range: (0.0, 0.0), correlation_sums: vec![], fit_residual: 0.0 });
    }
    let radii: Vec<f64> = RADIUS_EXPONENTS.iter().map(|e| span * 10f64.powf(*e)).collect();
    let c = correlation_sums(&sorted, &radii);
    let pts: Vec<(f64, f64)> = FIT.filter(|&i| c[i] > 0.0).map(|i| (radii[i].ln(), c[i].ln())).collect();
    let (dim, fit_residual) = if pts.len() < 2 {
        (0.0, 0.0)
    } else {
        let m = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let slope = sxy / sxx;
        let res = (pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum::<f64>() / m).sqrt();
        (slope, res)
    };
    Ok(DimensionEstimate {
        dim: dim.clamp(0.0, 1.5),
        fit_range: (radii[FIT.start], radii[FIT.end - 1]),
        correlation_sums: radii.into_iter().zip(c).collect(),
        fit_residual,
    })
}

/// `n` samples of the middle-thirds Cantor measure resolved to `depth`
/// levels, uniform within each level-`depth` interval.
pub fn cantor_sample(n: usize, depth: u32, seed: u64) -> Vec<f64> {
    use rand::Rng;
    let mut r = crate::cocycle::rng(seed);
    let cell = 3f64.powi(-(depth as i32));
    (0..n)
        .map(|_| {
            let mut x = 0.0;
            let mut scale = 1.0;
            for _ in 0..depth {
                scale /= 3.0;
                if r.gen::<bool>() {
                    x += 2.0 * scale;
                }
            }
            x + cell * r.gen::<f64>()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SrbReport {
    /// `|λᵘ·dimᵘ + λˢ·dimˢ|`.
    pub residual: f64,
    /// `tol·(|λᵘ| + |λˢ|)`.
    pub tolerance: f64,
    pub mismatch: bool,
    /// `|dimᵘ − 1| ≤ tol`.
    pub srb: bool,
}

/// Entropy identity `λᵘ dimᵘ = −λˢ dimˢ` and the SRB test `dimᵘ ≈ 1`.
pub fn srb_consistency(est: &LyapunovEstimate, dim_u: f64, dim_s: f64, tol: f64) -> SrbReport {
    let residual = (est.lambda_u * dim_u + est.lambda_s * dim_s).abs();
    let tolerance = tol * (est.lambda_u.abs() + est.lambda_s.abs());
    SrbReport { residual, tolerance, mismatch: residual > tolerance, srb: (dim_u - 1.0).abs() <= tol }
}
