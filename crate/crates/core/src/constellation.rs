//! One-dimensional M-PAM constellations, bit patterns and binary labelings.
//!
//! A [`Constellation`] is always stored with unit average energy. A
//! [`Pattern`] is one row of a labeling matrix: a length-M binary vector of
//! Hamming weight M/2 that splits the constellation into the points labeled
//! with 0 and the points labeled with 1. A [`Labeling`] stacks m patterns so
//! that every point receives a distinct m-bit label.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for the unit-energy and symmetry checks.
pub const CONSTELLATION_TOL: f64 = 1e-12;

/// Largest supported number of bits per symbol.
pub const MAX_BITS: u32 = 8;

/// Strictly increasing, unit-energy amplitude levels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constellation {
    points: Vec<f64>,
    bits: u32,
}

impl Constellation {
    /// Scales `points` by a single positive factor so that the mean square is one.
    pub fn normalize(points: &[f64]) -> Result<Self> {
        let size = points.len();
        if size < 2 || !size.is_power_of_two() {
            return Err(Error::InvalidConstellation(format!(
                "number of points must be a power of two >= 2, got {size}"
            )));
        }
        let bits = size.trailing_zeros();
        if bits > MAX_BITS {
            return Err(Error::BitsOutOfRange(bits));
        }
        if let Some(bad) = points.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidConstellation(format!(
                "non-finite point {bad}"
            )));
        }
        for w in points.windows(2) {
            if w[1] == w[0] {
                return Err(Error::InvalidConstellation(format!(
                    "duplicate point {}",
                    w[0]
                )));
            }
            if w[1] < w[0] {
                return Err(Error::InvalidConstellation(format!(
                    "points must be strictly increasing ({} follows {})",
                    w[1], w[0]
                )));
            }
        }
        let energy = points.iter().map(|x| x * x).sum::<f64>() / size as f64;
        let scale = energy.sqrt().recip();
        Ok(Self {
            points: points.iter().map(|x| x * scale).collect(),
            bits,
        })
    }

    /// Equally spaced 2^m-PAM, `{±d, ±3d, ..., ±(M-1)d}` with unit average energy.
    pub fn equally_spaced(bits: u32) -> Result<Self> {
        if !(1..=MAX_BITS).contains(&bits) {
            return Err(Error::BitsOutOfRange(bits));
        }
        let size = 1usize << bits;
        let raw: Vec<f64> = (0..size)
            .map(|k| 2.0 * k as f64 - (size as f64 - 1.0))
            .collect();
        Self::normalize(&raw)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Number of points M.
    pub fn size(&self) -> usize {
        self.points.len()
    }

    /// Bits per symbol m, with M = 2^m.
    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn mean_energy(&self) -> f64 {
        self.points.iter().map(|x| x * x).sum::<f64>() / self.size() as f64
    }

    /// Center y0 such that `a_k = -a_{M-k+1} + 2 y0` for every k, if it exists.
    pub fn symmetry_center(&self) -> SymmetryCenter {
        let n = self.size();
        let center = 0.5 * (self.points[0] + self.points[n - 1]);
        let symmetric = (0..n / 2).all(|k| {
            let lhs = self.points[k];
            let rhs = -self.points[n - 1 - k] + 2.0 * center;
            (lhs - rhs).abs() <= CONSTELLATION_TOL * lhs.abs().max(1.0)
        });
        SymmetryCenter {
            center: symmetric.then_some(center),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetry_center().center.is_some()
    }

    /// Smallest distance between neighboring points.
    pub fn min_distance(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }
}

/// Symmetry point of a constellation; `None` for asymmetric ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryCenter {
    pub center: Option<f64>,
}

/// Binary row vector of length M with Hamming weight M/2.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Pattern {
    bits: Vec<u8>,
}

impl Pattern {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        let size = bits.len();
        if size < 2 || !size.is_power_of_two() {
            return Err(Error::InvalidPattern(format!(
                "length must be a power of two >= 2, got {size}"
            )));
        }
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidPattern(format!("entry {b} is not a bit")));
        }
        let weight = bits.iter().filter(|&&b| b == 1).count();
        if weight != size / 2 {
            return Err(Error::InvalidPattern(format!(
                "Hamming weight must be {}, got {weight}",
                size / 2
            )));
        }
        Ok(Self { bits })
    }

    /// `[0; M/2] ++ [1; M/2]`, the pattern that is lossless for any constellation.
    pub fn p_one(size: usize) -> Result<Self> {
        Self::new((0..size).map(|k| u8::from(k >= size / 2)).collect())
    }

    /// `[0; M/4] ++ [1; M/2] ++ [0; M/4]`, lossless for symmetric constellations.
    pub fn p_two(size: usize) -> Result<Self> {
        if size < 4 {
            return Err(Error::InvalidPattern(format!(
                "the centered pattern needs M >= 4, got {size}"
            )));
        }
        let q = size / 4;
        Self::new(
            (0..size)
                .map(|k| u8::from(k >= q && k < size - q))
                .collect(),
        )
    }

    /// Alternating `[0, 1, 0, 1, ...]`.
    pub fn p_three(size: usize) -> Result<Self> {
        Self::new((0..size).map(|k| (k % 2) as u8).collect())
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bit(&self, k: usize) -> u8 {
        self.bits[k]
    }

    /// `p'_k = p_{M+1-k}`.
    pub fn reflect(&self) -> Self {
        Self {
            bits: self.bits.iter().rev().copied().collect(),
        }
    }

    /// `p'_k = 1 - p_k`.
    pub fn invert(&self) -> Self {
        Self {
            bits: self.bits.iter().map(|b| 1 - b).collect(),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.reflect() == *self
    }

    /// Lexicographically smallest member of `{p, refl p, inv p, inv refl p}`.
    pub fn canonical(&self) -> Self {
        let reflected = self.reflect();
        let candidates = [self.invert(), reflected.invert(), reflected];
        candidates
            .into_iter()
            .fold(self.clone(), |best, c| if c < best { c } else { best })
    }

    /// Whether the two patterns are related by inversions and/or reflections.
    pub fn is_equivalent(&self, other: &Pattern) -> Result<bool> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(self.canonical() == other.canonical())
    }

    /// Indices of the points labeled with `bit`.
    pub fn indices_of(&self, bit: u8) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter(move |(_, &b)| b == bit)
            .map(|(k, _)| k)
    }

    /// Points of `constellation` labeled with `bit`, in increasing order.
    pub fn subconstellation(&self, constellation: &Constellation, bit: u8) -> Vec<f64> {
        self.indices_of(bit)
            .map(|k| constellation.points()[k])
            .collect()
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (k, b) in self.bits.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{b}")?;
        }
        write!(f, "]")
    }
}

/// m x M binary matrix whose k-th column labels the k-th point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Labeling {
    rows: Vec<Pattern>,
}

impl Labeling {
    pub fn new(rows: Vec<Pattern>) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::InvalidLabeling("no rows".into()));
        };
        let size = first.len();
        if let Some(r) = rows.iter().find(|r| r.len() != size) {
            return Err(Error::LengthMismatch {
                left: size,
                right: r.len(),
            });
        }
        if 1usize << rows.len() != size {
            return Err(Error::InvalidLabeling(format!(
                "{} rows cannot label {size} points one-to-one",
                rows.len()
            )));
        }
        let mut labels: Vec<usize> = (0..size)
            .map(|k| {
                rows.iter()
                    .fold(0usize, |acc, r| (acc << 1) | r.bit(k) as usize)
            })
            .collect();
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidLabeling(
                "two points share the same binary label".into(),
            ));
        }
        Ok(Self { rows })
    }

    /// Builds a labeling from raw rows, validating each pattern.
    pub fn from_rows(rows: Vec<Vec<u8>>) -> Result<Self> {
        let patterns = rows
            .into_iter()
            .map(Pattern::new)
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::InvalidLabeling(e.to_string()))?;
        Self::new(patterns)
    }

    /// Binary reflected Gray code, most significant bit in the first row.
    pub fn brgc(bits: u32) -> Result<Self> {
        Self::from_codes(bits, |k| k ^ (k >> 1))
    }

    /// Natural binary code, most significant bit in the first row.
    pub fn nbc(bits: u32) -> Result<Self> {
        Self::from_codes(bits, |k| k)
    }

    fn from_codes(bits: u32, code: impl Fn(usize) -> usize) -> Result<Self> {
        if !(1..=MAX_BITS).contains(&bits) {
            return Err(Error::BitsOutOfRange(bits));
        }
        let size = 1usize << bits;
        let rows = (0..bits)
            .map(|j| {
                let shift = bits - 1 - j;
                Pattern::new((0..size).map(|k| ((code(k) >> shift) & 1) as u8).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows)
    }

    pub fn rows(&self) -> &[Pattern] {
        &self.rows
    }

    pub fn row(&self, j: usize) -> &Pattern {
        &self.rows[j]
    }

    /// Number of bit positions m.
    pub fn bits(&self) -> usize {
        self.rows.len()
    }

    /// Number of labeled points M.
    pub fn size(&self) -> usize {
        self.rows[0].len()
    }

    /// Label of point `k`, first row first.
    pub fn column(&self, k: usize) -> Vec<u8> {
        self.rows.iter().map(|r| r.bit(k)).collect()
    }

    pub fn check_compatible(&self, constellation: &Constellation) -> Result<()> {
        if self.size() != constellation.size() {
            return Err(Error::LengthMismatch {
                left: self.size(),
                right: constellation.size(),
            });
        }
        Ok(())
    }
}

/// Labeling as it appears in a configuration file: a named code or explicit rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelingSpec {
    Named(String),
    Rows(Vec<Vec<u8>>),
}

impl LabelingSpec {
    pub fn build(&self, bits: u32) -> Result<Labeling> {
        match self {
            LabelingSpec::Named(name) => match name.to_ascii_lowercase().as_str() {
                "brgc" | "gray" => Labeling::brgc(bits),
                "nbc" | "natural" => Labeling::nbc(bits),
                other => Err(Error::InvalidLabeling(format!(
                    "unknown labeling '{other}' (expected brgc, nbc or explicit rows)"
                ))),
            },
            LabelingSpec::Rows(rows) => Labeling::from_rows(rows.clone()),
        }
    }
}

/// JSON description of a constellation and its labeling:
/// `{"points": [..] (optional), "m": int, "labeling": "brgc"|"nbc"|[[bits]]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstellationFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<f64>>,
    pub m: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labeling: Option<LabelingSpec>,
}

impl ConstellationFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn constellation(&self) -> Result<Constellation> {
        let c = match &self.points {
            Some(points) => Constellation::normalize(points)?,
            None => Constellation::equally_spaced(self.m)?,
        };
        if c.bits() != self.m {
            return Err(Error::InvalidConstellation(format!(
                "m = {} but {} points were given",
                self.m,
                c.size()
            )));
        }
        Ok(c)
    }

    pub fn labeling(&self) -> Result<Option<Labeling>> {
        self.labeling
            .as_ref()
            .map(|spec| {
                let lab = spec.build(self.m)?;
                if lab.bits() != self.m as usize {
                    return Err(Error::InvalidLabeling(format!(
                        "labeling has {} rows but m = {}",
                        lab.bits(),
                        self.m
                    )));
                }
                Ok(lab)
            })
            .transpose()
    }
}
