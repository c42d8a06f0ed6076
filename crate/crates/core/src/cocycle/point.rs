use serde::{Deserialize, Serialize};

use super::mat::IntMat2;

/// Reduce a real number into `[0, 1)`.
#[inline]
pub fn wrap_unit(t: f64) -> f64 {
    let r = t - t.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Signed distance on the circle ℝ/ℤ from `a` to `b`, in `[-1/2, 1/2)`.
#[inline]
pub fn circle_offset(a: f64, b: f64) -> f64 {
    let d = b - a;
    d - (d + 0.5).floor()
}

/// A point of the torus ℝ²/ℤ², both coordinates in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    x: f64,
    y: f64,
}

impl TorusPoint {
    pub fn new(x: f64, y: f64) -> Self {
        TorusPoint { x: wrap_unit(x), y: wrap_unit(y) }
    }

    pub fn from_lift(p: [f64; 2]) -> Self {
        TorusPoint::new(p[0], p[1])
    }

    pub fn origin() -> Self {
        TorusPoint { x: 0.0, y: 0.0 }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn coords(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    /// Flat max-metric: the larger of the two circle distances.
    pub fn distance(&self, other: &TorusPoint) -> f64 {
        circle_offset(self.x, other.x).abs().max(circle_offset(self.y, other.y).abs())
    }

    /// Shortest displacement vector from `self` to `other` in the universal cover.
    pub fn displacement(&self, other: &TorusPoint) -> [f64; 2] {
        [circle_offset(self.x, other.x), circle_offset(self.y, other.y)]
    }

    /// Lift of `self` closest to the reference lift `near`.
    pub fn lift_near(&self, near: [f64; 2]) -> [f64; 2] {
        [near[0] + circle_offset(near[0], self.x), near[1] + circle_offset(near[1], self.y)]
    }
}

/// A point of `(1/den)ℤ²/ℤ²` held exactly. Integer matrices map this set
/// to itself, so orbits of rational points under linear families can be
/// followed without rounding drift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RationalPoint {
    num: [i64; 2],
    den: i64,
}

impl RationalPoint {
    pub fn new(nx: i64, ny: i64, den: i64) -> Option<Self> {
        if den <= 0 {
            return None;
        }
        Some(RationalPoint { num: [nx.rem_euclid(den), ny.rem_euclid(den)], den })
    }

    pub fn numerators(&self) -> [i64; 2] {
        self.num
    }

    pub fn denominator(&self) -> i64 {
        self.den
    }

    pub fn apply(&self, m: &IntMat2) -> RationalPoint {
        let d = self.den as i128;
        let (x, y) = (self.num[0] as i128, self.num[1] as i128);
        let nx = (m.a as i128 * x + m.b as i128 * y).rem_euclid(d);
        let ny = (m.c as i128 * x + m.d as i128 * y).rem_euclid(d);
        RationalPoint { num: [nx as i64, ny as i64], den: self.den }
    }

    pub fn to_point(&self) -> TorusPoint {
        TorusPoint::new(self.num[0] as f64 / self.den as f64, self.num[1] as f64 / self.den as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn reduction_is_idempotent(x in -1e6f64..1e6, y in -1e6f64..1e6) {
            let p = TorusPoint::new(x, y);
            prop_assert!((0.0..1.0).contains(&p.x()) && (0.0..1.0).contains(&p.y()));
            prop_assert_eq!(TorusPoint::new(p.x(), p.y()), p);
        }

        #[test]
        fn distance_is_symmetric_and_bounded(a in 0f64..1.0, b in 0f64..1.0, c in 0f64..1.0, d in 0f64..1.0) {
            let p = TorusPoint::new(a, b);
            let q = TorusPoint::new(c, d);
            prop_assert!((p.distance(&q) - q.distance(&p)).abs() < 1e-15);
            prop_assert!(p.distance(&q) <= 0.5);
        }
    }

    #[test]
    fn tiny_negative_wraps_into_range() {
        let p = TorusPoint::new(-1e-18, 1.0);
        assert_eq!(p.x(), 0.0);
        assert_eq!(p.y(), 0.0);
    }

    #[test]
    fn rational_orbit_is_exact() {
        let a = IntMat2::new(2, 1, 1, 1);
        let mut p = RationalPoint::new(1, 2, 5).unwrap();
        for _ in 0..1000 {
            p = p.apply(&a);
        }
        assert_eq!(p.denominator(), 5);
        // A has finite order on the 5-torsion subgroup
        let start = RationalPoint::new(1, 2, 5).unwrap();
        let mut q = start.apply(&a);
        let mut period = 1;
        while q != start {
            q = q.apply(&a);
            period += 1;
        }
        assert!(period <= 24);
    }
}
