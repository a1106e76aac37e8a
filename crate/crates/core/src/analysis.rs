//! Losslessness classification of patterns and labelings, rate curves over
//! SNR, their inversion, and the horizontal dB loss between two curves.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constellation::{Constellation, Labeling, Pattern};
use crate::error::{Error, Result};
use crate::lvalue::Snr;
use crate::rates::{self, QuadratureConfig, RateKind, RateValue};
use crate::transforms::{self, BinaryInputChannel};

/// Named equivalence classes of patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PatternClass {
    /// Equivalent to `[0,…,0,1,…,1]`.
    PI,
    /// Equivalent to `[0^{M/4}, 1^{M/2}, 0^{M/4}]`.
    PII,
    /// Equivalent to the alternating pattern `[0,1,0,1,…]`.
    PIII,
    Other,
}

impl PatternClass {
    pub fn of(pattern: &Pattern) -> Self {
        let size = pattern.len();
        let canonical = pattern.canonical();
        let matches = |p: Result<Pattern>| p.map(|p| p.canonical() == canonical).unwrap_or(false);
        if matches(Pattern::p_one(size)) {
            PatternClass::PI
        } else if matches(Pattern::p_two(size)) {
            PatternClass::PII
        } else if matches(Pattern::p_three(size)) {
            PatternClass::PIII
        } else {
            PatternClass::Other
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            PatternClass::PI => "p_I",
            PatternClass::PII => "p_II",
            PatternClass::PIII => "p_III",
            PatternClass::Other => "other",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    /// Pattern equivalent to `p_I`; any constellation.
    LosslessCaseI,
    /// Pattern equivalent to `p_II` on a symmetric constellation.
    LosslessCaseII,
    Lossy,
}

impl Verdict {
    pub fn is_lossless(self) -> bool {
        self != Verdict::Lossy
    }
}

/// Whether the max-log approximation loses information for one pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LosslessVerdict {
    pub verdict: Verdict,
    pub class: PatternClass,
    pub reason: String,
}

impl fmt::Display for LosslessVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.verdict {
            Verdict::LosslessCaseI => write!(f, "lossless (case I, {})", self.class.label()),
            Verdict::LosslessCaseII => write!(f, "lossless (case II, {})", self.class.label()),
            Verdict::Lossy => write!(f, "lossy ({})", self.class.label()),
        }
    }
}

/// Max-log L-values lose no information iff the pattern is equivalent to
/// `p_I`, or it is equivalent to `p_II` and the constellation is symmetric.
pub fn classify_pattern(
    constellation: &Constellation,
    pattern: &Pattern,
) -> Result<LosslessVerdict> {
    if pattern.len() != constellation.size() {
        return Err(Error::LengthMismatch {
            left: constellation.size(),
            right: pattern.len(),
        });
    }
    let class = PatternClass::of(pattern);
    let (verdict, reason) = match class {
        PatternClass::PI => (
            Verdict::LosslessCaseI,
            "max-log L-value is monotone in the observation".to_string(),
        ),
        PatternClass::PII if constellation.is_symmetric() => (
            Verdict::LosslessCaseII,
            "pattern and constellation share a symmetry center".to_string(),
        ),
        PatternClass::PII => (
            Verdict::Lossy,
            "p_II pattern on an asymmetric constellation".to_string(),
        ),
        PatternClass::PIII | PatternClass::Other => (
            Verdict::Lossy,
            "pattern is equivalent to neither p_I nor p_II".to_string(),
        ),
    };
    Ok(LosslessVerdict {
        verdict,
        class,
        reason,
    })
}

/// Per-row verdicts of a labeling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelingVerdict {
    pub rows: Vec<LosslessVerdict>,
    pub all_lossless: bool,
}

impl LabelingVerdict {
    /// 1-based indices of the lossy rows.
    pub fn lossy_rows(&self) -> Vec<usize> {
        self.rows
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.verdict.is_lossless())
            .map(|(j, _)| j + 1)
            .collect()
    }
}

pub fn classify_labeling(
    constellation: &Constellation,
    labeling: &Labeling,
) -> Result<LabelingVerdict> {
    labeling.check_compatible(constellation)?;
    let rows = labeling
        .rows()
        .iter()
        .map(|p| classify_pattern(constellation, p))
        .collect::<Result<Vec<_>>>()?;
    Ok(LabelingVerdict {
        all_lossless: rows.iter().all(|v| v.verdict.is_lossless()),
        rows,
    })
}

/// What a rate is computed for: one bit position or a whole labeling.
#[derive(Debug, Clone, PartialEq)]
pub enum CurveSource {
    Pattern(Pattern),
    Labeling(Labeling),
}

impl CurveSource {
    fn pattern(&self, kind: RateKind) -> Result<&Pattern> {
        match self {
            CurveSource::Pattern(p) => Ok(p),
            CurveSource::Labeling(_) => Err(Error::InvalidArgument(format!(
                "{kind} is a bit-level rate and needs a single pattern"
            ))),
        }
    }

    fn labeling(&self, kind: RateKind) -> Result<&Labeling> {
        match self {
            CurveSource::Labeling(l) => Ok(l),
            CurveSource::Pattern(_) => Err(Error::InvalidArgument(format!(
                "{kind} is a labeling-level rate and needs a labeling"
            ))),
        }
    }
}

/// Evaluates any [`RateKind`] at one SNR.
pub fn rate_at(
    constellation: &Constellation,
    source: &CurveSource,
    kind: RateKind,
    snr: Snr,
    cfg: &QuadratureConfig,
) -> Result<RateValue> {
    let c = constellation;
    match kind {
        RateKind::BitMi(k) => rates::bit_mi(c, source.pattern(kind)?, snr, k, cfg),
        RateKind::BitGmi(k) => rates::bit_gmi(c, source.pattern(kind)?, snr, k, cfg),
        RateKind::BitMiSymmetrized => {
            let ch = BinaryInputChannel::maxlog(c, source.pattern(kind)?, snr)?;
            transforms::mi_of_channel(&transforms::symmetrize(&ch))
        }
        RateKind::BicmMi(k) => rates::bicm_mi(c, source.labeling(kind)?, snr, k, cfg),
        RateKind::BicmGmi(k) => rates::bicm_gmi(c, source.labeling(kind)?, snr, k, cfg),
        RateKind::HarmonizedGmi(k) => rates::harmonized_gmi(c, source.labeling(kind)?, snr, k, cfg),
        RateKind::BicmMiMixed => {
            let lab = source.labeling(kind)?;
            lab.check_compatible(c)?;
            let chs = lab
                .rows()
                .iter()
                .map(|p| BinaryInputChannel::maxlog(c, p, snr))
                .collect::<Result<Vec<_>>>()?;
            let mi = transforms::mi_of_channel(&transforms::mix(&chs)?)?;
            Ok(RateValue {
                value: lab.bits() as f64 * mi.value,
                kind,
                s_star: Vec::new(),
                at_boundary: false,
            })
        }
    }
}

/// Tolerated decrease between consecutive samples before a curve is
/// rejected; saturated rates may repeat or wobble at rounding level.
pub const MONOTONE_SLACK: f64 = 1e-10;

/// Rate as a function of SNR in dB, sampled on a grid and interpolated with
/// a monotone piecewise-cubic Hermite spline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCurve {
    kind: RateKind,
    max_rate: f64,
    snr_db: Vec<f64>,
    rates: Vec<f64>,
    slopes: Vec<f64>,
}

impl RateCurve {
    /// `max_rate` is the range of the rate: 1 for bit-level kinds, `m` for
    /// labeling-level kinds.
    pub fn from_samples(
        kind: RateKind,
        max_rate: f64,
        snr_db: Vec<f64>,
        rates: Vec<f64>,
    ) -> Result<Self> {
        if snr_db.len() != rates.len() {
            return Err(Error::LengthMismatch {
                left: snr_db.len(),
                right: rates.len(),
            });
        }
        if snr_db.len() < 2 {
            return Err(Error::InvalidArgument(
                "a rate curve needs at least two samples".into(),
            ));
        }
        if snr_db.windows(2).any(|w| w[1] <= w[0] || w[1].is_nan())
            || snr_db.iter().any(|v| !v.is_finite())
        {
            return Err(Error::InvalidSnr(
                "SNR grid must be finite and strictly increasing".into(),
            ));
        }
        if let Some(bad) = rates.iter().find(|r| !r.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite rate {bad}")));
        }
        for k in 1..rates.len() {
            if rates[k] < rates[k - 1] - MONOTONE_SLACK {
                return Err(Error::NonMonotoneCurve {
                    prev_db: snr_db[k - 1],
                    next_db: snr_db[k],
                    prev: rates[k - 1],
                    next: rates[k],
                });
            }
        }
        // flatten rounding-level dips so the interpolant is monotone
        let mut rates = rates;
        for k in 1..rates.len() {
            rates[k] = rates[k].max(rates[k - 1]);
        }
        let slopes = monotone_slopes(&snr_db, &rates);
        Ok(Self {
            kind,
            max_rate,
            snr_db,
            rates,
            slopes,
        })
    }

    pub fn kind(&self) -> RateKind {
        self.kind
    }

    pub fn max_rate(&self) -> f64 {
        self.max_rate
    }

    pub fn snr_db(&self) -> &[f64] {
        &self.snr_db
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.snr_db.iter().copied().zip(self.rates.iter().copied())
    }

    /// `(lowest, highest)` sampled rate.
    pub fn rate_range(&self) -> (f64, f64) {
        (self.rates[0], self.rates[self.rates.len() - 1])
    }

    /// Interpolated rate; clamped to the end samples outside the grid.
    pub fn eval(&self, db: f64) -> f64 {
        let n = self.snr_db.len();
        if db <= self.snr_db[0] {
            return self.rates[0];
        }
        if db >= self.snr_db[n - 1] {
            return self.rates[n - 1];
        }
        let k = self.snr_db.partition_point(|&x| x <= db) - 1;
        self.hermite(k, db)
    }

    fn hermite(&self, k: usize, db: f64) -> f64 {
        let h = self.snr_db[k + 1] - self.snr_db[k];
        let t = (db - self.snr_db[k]) / h;
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.rates[k]
            + (t3 - 2.0 * t2 + t) * h * self.slopes[k]
            + (-2.0 * t3 + 3.0 * t2) * self.rates[k + 1]
            + (t3 - t2) * h * self.slopes[k + 1]
    }

    /// The SNR in dB at which the interpolated curve reaches `target`.
    pub fn invert(&self, target: f64) -> Result<f64> {
        let (lo, hi) = self.rate_range();
        if !(target >= lo && target <= hi) {
            return Err(Error::TargetOutOfRange { target, lo, hi });
        }
        if let Some(k) = self.rates.iter().position(|&r| r == target) {
            return Ok(self.snr_db[k]);
        }
        let k = self.rates.partition_point(|&r| r < target) - 1;
        let (mut a, mut b) = (self.snr_db[k], self.snr_db[k + 1]);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b || b - a <= 1e-12 {
                break;
            }
            if self.hermite(k, mid) < target {
                a = mid;
            } else {
                b = mid;
            }
        }
        Ok(0.5 * (a + b))
    }
}

/// Fritsch–Butland slopes: zero at local extrema, weighted harmonic mean of
/// the neighboring secants elsewhere.
fn monotone_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    let mut slopes = vec![0.0; n];
    slopes[0] = delta[0];
    slopes[n - 1] = delta[n - 2];
    for k in 1..n - 1 {
        let (d0, d1) = (delta[k - 1], delta[k]);
        if d0 * d1 <= 0.0 {
            slopes[k] = 0.0;
        } else {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            slopes[k] = (w1 + w2) / (w1 / d0 + w2 / d1);
        }
    }
    slopes
}

/// Evaluates `kind` at every grid point (in parallel) and builds the curve.
pub fn build_curve(
    constellation: &Constellation,
    source: &CurveSource,
    kind: RateKind,
    snr_grid_db: &[f64],
    cfg: &QuadratureConfig,
) -> Result<RateCurve> {
    if snr_grid_db.len() < 2 {
        return Err(Error::InvalidArgument(
            "a rate curve needs at least two samples".into(),
        ));
    }
    let rates = snr_grid_db
        .par_iter()
        .map(|&db| rate_at(constellation, source, kind, Snr::from_db(db)?, cfg).map(|r| r.value))
        .collect::<Result<Vec<f64>>>()?;
    let max_rate = if kind.is_bit_level() {
        1.0
    } else {
        constellation.bits() as f64
    };
    RateCurve::from_samples(kind, max_rate, snr_grid_db.to_vec(), rates)
}

/// Horizontal distance `φ_deg⁻¹(R) − φ_ref⁻¹(R)` in dB between two curves
/// of the same range.
pub fn loss_db(reference: &RateCurve, degraded: &RateCurve, target: f64) -> Result<f64> {
    if reference.max_rate != degraded.max_rate {
        return Err(Error::RangeMismatch {
            left: reference.max_rate,
            right: degraded.max_rate,
        });
    }
    Ok(degraded.invert(target)? - reference.invert(target)?)
}

/// `start, start + step, …` up to `stop` inclusive (with rounding slack).
pub fn snr_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(start.is_finite() && stop.is_finite() && step.is_finite() && step > 0.0 && stop >= start) {
        return Err(Error::InvalidSnr(format!(
            "invalid grid {start}:{stop}:{step}"
        )));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    if count > 1_000_000 {
        return Err(Error::InvalidSnr(format!(
            "grid {start}:{stop}:{step} is too dense"
        )));
    }
    Ok((0..count).map(|k| start + k as f64 * step).collect())
}
