//! Driving measures and the random words they generate.
//!
//! All randomness in the crate flows through [`rng`], a ChaCha8 stream seeded
//! from a single `u64`; every randomized routine is a pure function of its
//! inputs and seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The project-wide generator. ChaCha is counter based, so the stream for a
/// seed is fixed independently of platform.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derive an independent child seed (SplitMix64 finaliser).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Finitely supported probability on the maps of a family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrivingMeasure {
    atoms: Vec<(usize, f64)>,
}

impl DrivingMeasure {
    pub fn new(atoms: Vec<(usize, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("no atoms".into()));
        }
        for (i, &(id, p)) in atoms.iter().enumerate() {
            if !(p > 0.0) || !p.is_finite() {
                return Err(Error::InvalidMeasure(format!("probability of map {id} is {p}")));
            }
            if atoms[..i].iter().any(|&(other, _)| other == id) {
                return Err(Error::InvalidMeasure(format!("map {id} listed twice")));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMeasure(format!("probabilities sum to {total}")));
        }
        Ok(DrivingMeasure { atoms })
    }

    /// Point mass on one map.
    pub fn dirac(id: usize) -> Self {
        DrivingMeasure { atoms: vec![(id, 1.0)] }
    }

    /// Uniform weights on the given maps.
    pub fn uniform(ids: &[usize]) -> Result<Self> {
        let p = 1.0 / ids.len() as f64;
        let mut atoms: Vec<(usize, f64)> = ids.iter().map(|&i| (i, p)).collect();
        // absorb rounding so the weights sum to one
        if let Some(last) = atoms.last_mut() {
            last.1 = 1.0 - p * (ids.len() - 1) as f64;
        }
        DrivingMeasure::new(atoms)
    }

    /// `t δ_f + (1 − t) δ_g`, dropping a zero-weight atom at the endpoints.
    pub fn two_point(f: usize, g: usize, t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidMeasure(format!("weight {t} outside [0,1]")));
        }
        if t == 1.0 {
            return Ok(DrivingMeasure::dirac(f));
        }
        if t == 0.0 {
            return Ok(DrivingMeasure::dirac(g));
        }
        DrivingMeasure::new(vec![(f, t), (g, 1.0 - t)])
    }

    pub fn atoms(&self) -> &[(usize, f64)] {
        &self.atoms
    }

    /// Check every map id indexes a family of the given size.
    pub fn validate_for(&self, family_len: usize) -> Result<()> {
        match self.atoms.iter().find(|a| a.0 >= family_len) {
            Some(a) => Err(Error::InvalidMeasure(format!("map id {} outside family of {family_len}", a.0))),
            None => Ok(()),
        }
    }

    fn draw(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for &(id, p) in &self.atoms {
            acc += p;
            if u < acc {
                return id;
            }
        }
        self.atoms[self.atoms.len() - 1].0
    }
}

/// A finite prefix of a random word `(ω₀, ω₁, …)` of map ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Word {
    entries: Vec<usize>,
    seed: u64,
}

impl Word {
    /// A fixed word (seed recorded as 0).
    pub fn from_entries(entries: Vec<usize>) -> Self {
        Word { entries, seed: 0 }
    }

    pub fn entries(&self) -> &[usize] {
        &self.entries
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, i: usize) -> usize {
        self.entries[i]
    }

    /// The word with its first `k` letters removed.
    pub fn shifted(&self, k: usize) -> Word {
        Word { entries: self.entries[k.min(self.entries.len())..].to_vec(), seed: self.seed }
    }
}

/// Draw `length` i.i.d. letters from `nu`.
pub fn sample_word(nu: &DrivingMeasure, length: usize, seed: u64) -> Word {
    let mut r = rng(seed);
    let entries = if nu.atoms.len() == 1 {
        vec![nu.atoms[0].0; length]
    } else {
        (0..length).map(|_| nu.draw(r.gen::<f64>())).collect()
    };
    Word { entries, seed }
}
