//! Torus points, map families, random words and the derivative cocycle.

mod map;
mod mat;
mod point;
mod word;

pub use map::{MapSpec, Perturbation, SineTerm, TrigTerm};
pub use mat::{line_angle, line_distance, line_offset, IntMat2, RealMat2, ScaledMat2};
pub use point::{circle_offset, wrap_unit, RationalPoint, TorusPoint};
pub use word::{derive_seed, rng, sample_word, DrivingMeasure, Word};

use crate::error::{Error, Result};

/// Check that every letter of `word` indexes `family`.
pub fn validate_word(family: &[MapSpec], word: &Word) -> Result<()> {
    match word.entries().iter().find(|&&e| e >= family.len()) {
        Some(e) => Err(Error::PreconditionFail(format!("word letter {e} outside family of {}", family.len()))),
        None => Ok(()),
    }
}

/// `D f^n_ω(p) = D f_{ω_{n−1}}(p_{n−1}) ⋯ D f_{ω_0}(p_0)` in scaled form.
pub fn cocycle_derivative(family: &[MapSpec], word: &Word, p: TorusPoint, n: usize) -> Result<ScaledMat2> {
    if n > word.len() {
        return Err(Error::OutOfRange { requested: n, available: word.len() });
    }
    validate_word(family, word)?;
    let mut x = p;
    let mut acc = ScaledMat2::identity();
    for &id in &word.entries()[..n] {
        let f = &family[id];
        acc = acc.then(&f.derivative(x));
        x = f.apply(x);
    }
    Ok(acc)
}

/// Points `p_0 = p, p_{k+1} = f_{ω_k}(p_k)` for `k < n`.
pub fn forward_orbit(family: &[MapSpec], word: &Word, p: TorusPoint, n: usize) -> Vec<TorusPoint> {
    let mut out = Vec::with_capacity(n + 1);
    let mut x = p;
    out.push(x);
    for &id in &word.entries()[..n] {
        x = family[id].apply(x);
        out.push(x);
    }
    out
}

/// A finite stretch of a random orbit around a reference time.
///
/// `point(j)` is the point at time `at + j` for `j ∈ [−back, fwd]`, and the map
/// applied at that time is `word[at + j]`. Past points are obtained by
/// inverting the maps, future points by applying them; the stored sequence is
/// reused rather than recomputed, so every consumer sees the same pseudo-orbit.
#[derive(Debug, Clone)]
pub struct OrbitWindow {
    at: usize,
    back: usize,
    points: Vec<TorusPoint>,
    letters: Vec<usize>,
}

impl OrbitWindow {
    pub fn new(family: &[MapSpec], word: &Word, at: usize, x: TorusPoint, back: usize, fwd: usize) -> Result<Self> {
        validate_word(family, word)?;
        if back > at {
            return Err(Error::OutOfRange { requested: back, available: at });
        }
        if at + fwd > word.len() {
            return Err(Error::OutOfRange { requested: at + fwd, available: word.len() });
        }
        let mut past = Vec::with_capacity(back);
        let mut y = x;
        for k in 1..=back {
            y = family[word.get(at - k)].inverse(y)?;
            past.push(y);
        }
        past.reverse();
        let mut points = past;
        let mut y = x;
        points.push(y);
        for k in 0..fwd {
            y = family[word.get(at + k)].apply(y);
            points.push(y);
        }
        // letters for times at-back .. at+fwd (the last point has none unless available)
        let hi = (at + fwd + 1).min(word.len());
        let letters = word.entries()[at - back..hi].to_vec();
        Ok(OrbitWindow { at, back, points, letters })
    }

    pub fn at(&self) -> usize {
        self.at
    }

    pub fn back(&self) -> usize {
        self.back
    }

    pub fn fwd(&self) -> usize {
        self.points.len() - 1 - self.back
    }

    pub fn point(&self, j: isize) -> TorusPoint {
        self.points[(j + self.back as isize) as usize]
    }

    /// Map id applied at relative time `j`.
    pub fn letter(&self, j: isize) -> usize {
        self.letters[(j + self.back as isize) as usize]
    }

    /// Derivative of the map applied at relative time `j`, at `point(j)`.
    pub fn step_derivative(&self, family: &[MapSpec], j: isize) -> RealMat2 {
        family[self.letter(j)].derivative(self.point(j))
    }
}
