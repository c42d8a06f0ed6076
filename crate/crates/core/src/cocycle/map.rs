use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::mat::{IntMat2, RealMat2};
use super::point::TorusPoint;
use crate::error::{Error, Result};

/// One term `coeff · sin(2π · freq · t + phase)` of a one-variable sine series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SineTerm {
    pub freq: i64,
    pub coeff: f64,
    pub phase: f64,
}

impl SineTerm {
    pub fn new(freq: i64, coeff: f64, phase: f64) -> Self {
        SineTerm { freq, coeff, phase }
    }
}

/// One term `coeff · sin(2π ⟨freq, p⟩ + phase)` of a vector field on the torus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub freq: [i64; 2],
    pub coeff: [f64; 2],
    pub phase: f64,
}

impl TrigTerm {
    pub fn new(freq: [i64; 2], coeff: [f64; 2], phase: f64) -> Self {
        TrigTerm { freq, coeff, phase }
    }
}

/// Periodic perturbation of the linear part.
///
/// `ShearPair` composes the linear map with the horizontal shear
/// `(x, y) ↦ (x + εψ₁(y), y)` and then the vertical shear
/// `(x, y) ↦ (x, y + εψ₂(x))`; the result preserves area exactly.
/// `Trig` adds `ε Σ c_j sin(2π⟨k_j, p⟩ + φ_j)` to `Lp` and is generally not
/// conservative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Perturbation {
    None,
    ShearPair { horizontal: Vec<SineTerm>, vertical: Vec<SineTerm>, epsilon: f64 },
    Trig { terms: Vec<TrigTerm>, epsilon: f64 },
}

fn series(terms: &[SineTerm], t: f64) -> f64 {
    terms.iter().map(|s| s.coeff * (TAU * s.freq as f64 * t + s.phase).sin()).sum()
}

fn series_deriv(terms: &[SineTerm], t: f64) -> f64 {
    terms.iter().map(|s| s.coeff * TAU * s.freq as f64 * (TAU * s.freq as f64 * t + s.phase).cos()).sum()
}

fn series_c1(terms: &[SineTerm]) -> f64 {
    terms.iter().map(|s| TAU * s.coeff.abs() * s.freq.unsigned_abs() as f64).sum()
}

fn series_c2(terms: &[SineTerm]) -> f64 {
    terms.iter().map(|s| TAU * TAU * s.coeff.abs() * (s.freq as f64).powi(2)).sum()
}

const NEWTON_MAX_STEPS: usize = 50;
const NEWTON_TOL: f64 = 1e-14;

/// A torus diffeomorphism: integer linear part in GL(2,ℤ) plus an optional
/// periodic perturbation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MapSpecRaw", into = "MapSpecRaw")]
pub struct MapSpec {
    linear: IntMat2,
    linear_inv: IntMat2,
    perturbation: Perturbation,
    conservative: bool,
}

#[derive(Serialize, Deserialize)]
struct MapSpecRaw {
    linear: IntMat2,
    perturbation: Perturbation,
    conservative: bool,
}

impl TryFrom<MapSpecRaw> for MapSpec {
    type Error = Error;
    fn try_from(r: MapSpecRaw) -> Result<Self> {
        MapSpec::new(r.linear, r.perturbation, r.conservative)
    }
}

impl From<MapSpec> for MapSpecRaw {
    fn from(m: MapSpec) -> Self {
        MapSpecRaw { linear: m.linear, perturbation: m.perturbation, conservative: m.conservative }
    }
}

impl MapSpec {
    /// Validates the specification.
    ///
    /// The linear part must lie in GL(2,ℤ), shear pairs must be flagged
    /// conservative, conservative maps need `|det| = 1` and no trigonometric
    /// field, and the perturbation must satisfy the invertibility margin
    /// `ε · Σ 2π|c||k| < 1/‖L⁻¹‖`.
    pub fn new(linear: IntMat2, perturbation: Perturbation, conservative: bool) -> Result<Self> {
        let linear_inv = linear.inverse().ok_or_else(|| {
            Error::InvalidSpec(format!("linear part {linear} is not in GL(2,Z) (det {})", linear.det()))
        })?;
        let c1 = match &perturbation {
            Perturbation::None => 0.0,
            Perturbation::ShearPair { horizontal, vertical, epsilon } => {
                if !conservative {
                    return Err(Error::InvalidSpec("shear-pair maps are area preserving; set conservative".into()));
                }
                check_epsilon(*epsilon)?;
                epsilon * (series_c1(horizontal) + series_c1(vertical))
            }
            Perturbation::Trig { terms, epsilon } => {
                check_epsilon(*epsilon)?;
                if conservative && *epsilon > 0.0 {
                    return Err(Error::InvalidSpec(
                        "trigonometric perturbations are not known to preserve area".into(),
                    ));
                }
                epsilon
                    * terms
                        .iter()
                        .map(|t| {
                            let k = (t.freq[0] as f64).hypot(t.freq[1] as f64);
                            TAU * t.coeff[0].hypot(t.coeff[1]) * k
                        })
                        .sum::<f64>()
            }
        };
        let inv_norm = linear_inv.to_real().opnorm();
        if !(c1 * inv_norm < 1.0) {
            return Err(Error::InvalidSpec(format!(
                "perturbation C1 size {c1:.4e} violates invertibility margin 1/|L^-1| = {:.4e}",
                1.0 / inv_norm
            )));
        }
        Ok(MapSpec { linear, linear_inv, perturbation, conservative })
    }

    pub fn linear(linear: IntMat2) -> Result<Self> {
        let conservative = linear.det().abs() == 1;
        MapSpec::new(linear, Perturbation::None, conservative)
    }

    /// Linear map followed by the area-preserving shear pair.
    pub fn shear_pair(
        linear: IntMat2,
        horizontal: Vec<SineTerm>,
        vertical: Vec<SineTerm>,
        epsilon: f64,
    ) -> Result<Self> {
        MapSpec::new(linear, Perturbation::ShearPair { horizontal, vertical, epsilon }, true)
    }

    pub fn trig(linear: IntMat2, terms: Vec<TrigTerm>, epsilon: f64) -> Result<Self> {
        MapSpec::new(linear, Perturbation::Trig { terms, epsilon }, false)
    }

    pub fn linear_part(&self) -> IntMat2 {
        self.linear
    }

    pub fn perturbation(&self) -> &Perturbation {
        &self.perturbation
    }

    pub fn is_conservative(&self) -> bool {
        self.conservative
    }

    /// True when the perturbation vanishes identically.
    pub fn is_linear(&self) -> bool {
        match &self.perturbation {
            Perturbation::None => true,
            Perturbation::ShearPair { epsilon, .. } | Perturbation::Trig { epsilon, .. } => *epsilon == 0.0,
        }
    }

    pub fn epsilon(&self) -> f64 {
        match &self.perturbation {
            Perturbation::None => 0.0,
            Perturbation::ShearPair { epsilon, .. } | Perturbation::Trig { epsilon, .. } => *epsilon,
        }
    }

    /// Apply the map on the universal cover ℝ² (no reduction mod 1).
    pub fn apply_lift(&self, p: [f64; 2]) -> [f64; 2] {
        let l = &self.linear;
        let mut q = [l.a as f64 * p[0] + l.b as f64 * p[1], l.c as f64 * p[0] + l.d as f64 * p[1]];
        match &self.perturbation {
            Perturbation::None => {}
            Perturbation::ShearPair { horizontal, vertical, epsilon } => {
                if *epsilon != 0.0 {
                    q[0] += epsilon * series(horizontal, q[1]);
                    q[1] += epsilon * series(vertical, q[0]);
                }
            }
            Perturbation::Trig { terms, epsilon } => {
                if *epsilon != 0.0 {
                    for t in terms {
                        let s = (TAU * (t.freq[0] as f64 * p[0] + t.freq[1] as f64 * p[1]) + t.phase).sin();
                        q[0] += epsilon * t.coeff[0] * s;
                        q[1] += epsilon * t.coeff[1] * s;
                    }
                }
            }
        }
        q
    }

    pub fn apply(&self, p: TorusPoint) -> TorusPoint {
        TorusPoint::from_lift(self.apply_lift(p.coords()))
    }

    /// Jacobian at a lifted point; periodic in `p`.
    pub fn derivative_lift(&self, p: [f64; 2]) -> RealMat2 {
        let l = self.linear.to_real();
        match &self.perturbation {
            Perturbation::None => l,
            Perturbation::ShearPair { horizontal, vertical, epsilon } => {
                if *epsilon == 0.0 {
                    return l;
                }
                let q = l.apply(p);
                let s1 = epsilon * series_deriv(horizontal, q[1]);
                let x1 = q[0] + epsilon * series(horizontal, q[1]);
                let s2 = epsilon * series_deriv(vertical, x1);
                let h = RealMat2::new(1.0, s1, 0.0, 1.0);
                let v = RealMat2::new(1.0, 0.0, s2, 1.0);
                v * h * l
            }
            Perturbation::Trig { terms, epsilon } => {
                let mut m = l;
                if *epsilon == 0.0 {
                    return m;
                }
                for t in terms {
                    let c = epsilon * TAU * (TAU * (t.freq[0] as f64 * p[0] + t.freq[1] as f64 * p[1]) + t.phase).cos();
                    m.a += c * t.coeff[0] * t.freq[0] as f64;
                    m.b += c * t.coeff[0] * t.freq[1] as f64;
                    m.c += c * t.coeff[1] * t.freq[0] as f64;
                    m.d += c * t.coeff[1] * t.freq[1] as f64;
                }
                m
            }
        }
    }

    pub fn derivative(&self, p: TorusPoint) -> RealMat2 {
        self.derivative_lift(p.coords())
    }

    /// Preimage on the universal cover: the lift `p` with `apply_lift(p) = q`
    /// nearest to `L⁻¹q`.
    pub fn inverse_lift(&self, q: [f64; 2]) -> Result<[f64; 2]> {
        let li = self.linear_inv.to_real();
        match &self.perturbation {
            Perturbation::None => Ok(li.apply(q)),
            Perturbation::ShearPair { horizontal, vertical, epsilon } => {
                let y = q[1] - epsilon * series(vertical, q[0]);
                let x = q[0] - epsilon * series(horizontal, y);
                Ok(li.apply([x, y]))
            }
            Perturbation::Trig { epsilon, .. } => {
                let mut p = li.apply(q);
                if *epsilon == 0.0 {
                    return Ok(p);
                }
                let mut residual = f64::INFINITY;
                for _ in 0..NEWTON_MAX_STEPS {
                    let f = self.apply_lift(p);
                    let r = [f[0] - q[0], f[1] - q[1]];
                    residual = r[0].abs().max(r[1].abs());
                    if residual <= NEWTON_TOL * (1.0 + q[0].abs().max(q[1].abs())) {
                        return Ok(p);
                    }
                    let jinv =
                        self.derivative_lift(p).inverse().ok_or(Error::NonConvergence { iterations: 0, residual })?;
                    let step = jinv.apply(r);
                    p = [p[0] - step[0], p[1] - step[1]];
                }
                Err(Error::NonConvergence { iterations: NEWTON_MAX_STEPS, residual })
            }
        }
    }

    pub fn inverse(&self, q: TorusPoint) -> Result<TorusPoint> {
        self.inverse_lift(q.coords()).map(TorusPoint::from_lift)
    }

    /// Upper bound on `sup ‖D f(p) − D f(p')‖ / |p − p'|` (Euclidean).
    pub fn derivative_lipschitz(&self) -> f64 {
        let lnorm = self.linear.to_real().opnorm();
        match &self.perturbation {
            Perturbation::None => 0.0,
            Perturbation::ShearPair { horizontal, vertical, epsilon } => {
                let b1 = 1.0 + epsilon * series_c1(horizontal);
                let b2 = 1.0 + epsilon * series_c1(vertical);
                let l1 = epsilon * series_c2(horizontal);
                let l2 = epsilon * series_c2(vertical);
                // D f = V(S₁Lp)·H(Lp)·L; product rule with ‖DS₁‖ ≤ b1.
                lnorm * lnorm * (l1 * b2 + l2 * b1 * b1)
            }
            Perturbation::Trig { terms, epsilon } => {
                epsilon
                    * terms
                        .iter()
                        .map(|t| {
                            let k2 = (t.freq[0] as f64).powi(2) + (t.freq[1] as f64).powi(2);
                            TAU * TAU * t.coeff[0].hypot(t.coeff[1]) * k2
                        })
                        .sum::<f64>()
            }
        }
    }
}

fn check_epsilon(eps: f64) -> Result<()> {
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::InvalidSpec(format!("amplitude must be finite and non-negative, got {eps}")));
    }
    Ok(())
}
