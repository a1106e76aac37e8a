//! Monte Carlo estimators of every rate kind, used to cross-check the
//! quadrature results.
//!
//! Samples are drawn in fixed-size chunks; chunk `k` uses a ChaCha8 stream
//! seeded with `seed` and stream number `k`. Chunk statistics are merged in
//! chunk order, so an estimate depends only on `(seed, samples)` and not on
//! the number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::CurveSource;
use crate::constellation::{Constellation, Pattern};
use crate::error::{Error, Result};
use crate::lvalue::{BitDemapper, ConditionalLValueDensity, PiecewiseLinearLValue, Snr};
use crate::numerics::special::log2_one_plus_exp_neg;
use crate::rates::{LValueKind, RateKind};
use crate::transforms::{mix, symmetrize, BinaryInputChannel};

pub const MIN_SAMPLES: u64 = 10_000;
pub const CHUNK_SIZE: u64 = 1 << 16;

/// Sample mean of a rate integrand with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

impl McEstimate {
    /// `|value − mean| / std_error`; infinite when the standard error is zero
    /// and the values differ.
    pub fn z_score(&self, value: f64) -> f64 {
        let diff = (value - self.mean).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / self.std_error
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Welford) -> Welford {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        Welford {
            n,
            mean: self.mean + d * other.n as f64 / n as f64,
            m2: self.m2 + other.m2 + d * d * (self.n as f64 * other.n as f64) / n as f64,
        }
    }
}

/// The stream generator for chunk `chunk`.
pub fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// Runs `draw` `samples` times across chunks; `draw` writes `count`
/// integrand values per sample.
fn estimate<F>(samples: u64, seed: u64, count: usize, draw: F) -> Result<Vec<McEstimate>>
where
    F: Fn(&mut ChaCha8Rng, &mut [f64]) + Sync,
{
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "at least {MIN_SAMPLES} samples are required, got {samples}"
        )));
    }
    let chunks = samples.div_ceil(CHUNK_SIZE);
    let stats: Vec<Vec<Welford>> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = chunk_rng(seed, k);
            let n = CHUNK_SIZE.min(samples - k * CHUNK_SIZE);
            let mut acc = vec![Welford::default(); count];
            let mut out = vec![0.0; count];
            for _ in 0..n {
                draw(&mut rng, &mut out);
                for (a, &x) in acc.iter_mut().zip(&out) {
                    a.push(x);
                }
            }
            acc
        })
        .collect();
    let mut totals = vec![Welford::default(); count];
    for chunk in stats {
        for (t, c) in totals.iter_mut().zip(chunk) {
            *t = t.merge(c);
        }
    }
    Ok(totals
        .into_iter()
        .map(|t| {
            let var = t.m2 / (t.n - 1) as f64;
            McEstimate {
                mean: t.mean,
                std_error: (var / t.n as f64).sqrt(),
                samples,
                seed,
            }
        })
        .collect())
}

#[derive(Debug, Clone)]
enum RowLValue {
    Exact(BitDemapper),
    MaxLog(PiecewiseLinearLValue),
    Corrected(ConditionalLValueDensity),
}

impl RowLValue {
    fn new(c: &Constellation, p: &Pattern, snr: Snr, kind: LValueKind) -> Result<Self> {
        let d = BitDemapper::new(c, p, snr)?;
        Ok(match kind {
            LValueKind::Exact => RowLValue::Exact(d),
            LValueKind::MaxLog => RowLValue::MaxLog(d.piecewise()),
            LValueKind::Corrected => RowLValue::Corrected(d.maxlog_density()),
        })
    }

    fn eval(&self, y: f64) -> f64 {
        match self {
            RowLValue::Exact(d) => d.exact_lvalue(y),
            RowLValue::MaxLog(pl) => pl.eval(y),
            // the observed L-value always lies in the support
            RowLValue::Corrected(dens) => dens
                .correction(dens.piecewise().eval(y))
                .unwrap_or(f64::NAN),
        }
    }
}

/// One quantity estimated in a shared Monte Carlo pass.
#[derive(Debug, Clone, PartialEq)]
pub struct McRequest {
    pub kind: RateKind,
    /// Bit position (0-based) for bit-level kinds on a labeling.
    pub row: Option<usize>,
    /// `s` for GMI kinds: one value, or one per bit position for the
    /// harmonized GMI. Ignored by MI kinds.
    pub s: Vec<f64>,
}

impl McRequest {
    pub fn new(kind: RateKind, s: &[f64]) -> Self {
        Self {
            kind,
            row: None,
            s: s.to_vec(),
        }
    }

    pub fn for_row(kind: RateKind, row: usize, s: &[f64]) -> Self {
        Self {
            kind,
            row: Some(row),
            s: s.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Cached {
    Exact,
    MaxLog,
    Corrected,
}

#[derive(Debug, Clone)]
enum Term {
    /// `Σ_j 1 − log2(1 + e^{-s_j·b̌_j·l_j(y)})` over the listed rows.
    Rows {
        lvalue: Cached,
        rows: Vec<(usize, f64)>,
    },
    Symmetrized {
        row: usize,
        channel: BinaryInputChannel,
    },
    Mixed {
        channel: BinaryInputChannel,
    },
}

fn signed(bit: u8) -> f64 {
    if bit == 1 {
        1.0
    } else {
        -1.0
    }
}

/// `1 − log2(1 + W(l|1−b)/W(l|b))`.
fn mi_term(channel: &BinaryInputChannel, l: f64, bit: u8) -> f64 {
    let own = channel.log_density(l, bit);
    let other = channel.log_density(l, 1 - bit);
    1.0 - log2_one_plus_exp_neg(own - other)
}

fn build_term(
    c: &Constellation,
    patterns: &[Pattern],
    snr: Snr,
    from_labeling: bool,
    req: &McRequest,
) -> Result<Term> {
    let kind = req.kind;
    let m = patterns.len();
    let row = if kind.is_bit_level() {
        let row = match (from_labeling, req.row) {
            (true, Some(r)) if r < m => r,
            (false, None | Some(0)) => 0,
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "{kind} needs a valid bit position (got {:?} of {m})",
                    req.row
                )))
            }
        };
        Some(row)
    } else {
        if !from_labeling {
            return Err(Error::InvalidArgument(format!("{kind} needs a labeling")));
        }
        None
    };
    let cached = |k: LValueKind| match k {
        LValueKind::Exact => Cached::Exact,
        LValueKind::MaxLog => Cached::MaxLog,
        LValueKind::Corrected => Cached::Corrected,
    };
    let mi_cached = |k: LValueKind| match k {
        LValueKind::Exact => Cached::Exact,
        _ => Cached::Corrected,
    };
    let s_for = |count: usize| -> Result<Vec<f64>> {
        let s = match req.s.len() {
            1 => vec![req.s[0]; count],
            n if n == count => req.s.clone(),
            n => {
                return Err(Error::InvalidArgument(format!(
                    "{kind} needs {count} values of s, got {n}"
                )))
            }
        };
        if s.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument(format!("invalid s {s:?}")));
        }
        Ok(s)
    };
    Ok(match kind {
        RateKind::BitMi(k) => Term::Rows {
            lvalue: mi_cached(k),
            rows: vec![(row.unwrap_or(0), 1.0)],
        },
        RateKind::BitGmi(k) => Term::Rows {
            lvalue: cached(k),
            rows: vec![(row.unwrap_or(0), s_for(1)?[0])],
        },
        RateKind::BicmMi(k) => Term::Rows {
            lvalue: mi_cached(k),
            rows: (0..m).map(|j| (j, 1.0)).collect(),
        },
        RateKind::BicmGmi(k) => {
            if req.s.len() != 1 {
                return Err(Error::InvalidArgument(format!("{kind} uses a single s")));
            }
            Term::Rows {
                lvalue: cached(k),
                rows: s_for(m)?.into_iter().enumerate().collect(),
            }
        }
        RateKind::HarmonizedGmi(k) => Term::Rows {
            lvalue: cached(k),
            rows: s_for(m)?.into_iter().enumerate().collect(),
        },
        RateKind::BitMiSymmetrized => {
            let row = row.unwrap_or(0);
            Term::Symmetrized {
                row,
                channel: symmetrize(&BinaryInputChannel::maxlog(c, &patterns[row], snr)?),
            }
        }
        RateKind::BicmMiMixed => {
            let channels = patterns
                .iter()
                .map(|p| BinaryInputChannel::maxlog(c, p, snr))
                .collect::<Result<Vec<_>>>()?;
            Term::Mixed {
                channel: mix(&channels)?,
            }
        }
    })
}

/// Per-sample L-values of every bit position, computed on first use.
struct RowCache<'a> {
    demappers: &'a [BitDemapper],
    piecewise: &'a [PiecewiseLinearLValue],
    densities: &'a [ConditionalLValueDensity],
    y: f64,
    values: [[f64; 3]; 8],
}

impl RowCache<'_> {
    fn get(&mut self, which: Cached, row: usize) -> f64 {
        let slot = which as usize;
        let v = self.values[row][slot];
        if !v.is_nan() {
            return v;
        }
        let v = match which {
            Cached::Exact => self.demappers[row].exact_lvalue(self.y),
            Cached::MaxLog => self.piecewise[row].eval(self.y),
            Cached::Corrected => {
                let l = self.get(Cached::MaxLog, row);
                // the observed L-value always lies in the support
                self.densities[row].correction(l).unwrap_or(f64::NAN)
            }
        };
        self.values[row][slot] = v;
        v
    }
}

/// Monte Carlo estimates of several rates from one set of samples.
///
/// Every sample draws the symbol, the noise, a scrambler bit and a bit
/// position in that order, whatever is requested, so each estimate depends
/// only on `(seed, samples)` and its own request. MI kinds of max-log
/// L-values use the analytic conditional density for the log-ratio and
/// sample only the outer expectation; GMI kinds are evaluated at the
/// requested `s`.
pub fn mc_rates(
    constellation: &Constellation,
    source: &CurveSource,
    snr: Snr,
    requests: &[McRequest],
    samples: u64,
    seed: u64,
) -> Result<Vec<McEstimate>> {
    let c = constellation;
    let (patterns, from_labeling): (Vec<Pattern>, bool) = match source {
        CurveSource::Pattern(p) => (vec![p.clone()], false),
        CurveSource::Labeling(lab) => {
            lab.check_compatible(c)?;
            (lab.rows().to_vec(), true)
        }
    };
    for p in &patterns {
        if p.len() != c.size() {
            return Err(Error::LengthMismatch {
                left: c.size(),
                right: p.len(),
            });
        }
    }
    let terms = requests
        .iter()
        .map(|r| build_term(c, &patterns, snr, from_labeling, r))
        .collect::<Result<Vec<_>>>()?;
    let demappers = patterns
        .iter()
        .map(|p| BitDemapper::new(c, p, snr))
        .collect::<Result<Vec<_>>>()?;
    let piecewise: Vec<_> = demappers.iter().map(BitDemapper::piecewise).collect();
    let densities: Vec<_> = demappers.iter().map(BitDemapper::maxlog_density).collect();

    let points = c.points().to_vec();
    let sigma = snr.noise_std();
    let m = patterns.len();
    estimate(samples, seed, terms.len(), |rng, out| {
        let k = rng.random_range(0..points.len());
        let z: f64 = rng.sample(StandardNormal);
        let flip: bool = rng.random();
        let pick = rng.random_range(0..m);
        let mut cache = RowCache {
            demappers: &demappers,
            piecewise: &piecewise,
            densities: &densities,
            y: points[k] + sigma * z,
            values: [[f64::NAN; 3]; 8],
        };
        for (term, slot) in terms.iter().zip(out.iter_mut()) {
            *slot = match term {
                Term::Rows { lvalue, rows } => rows
                    .iter()
                    .map(|&(j, s)| {
                        let l = cache.get(*lvalue, j);
                        1.0 - log2_one_plus_exp_neg(s * signed(patterns[j].bit(k)) * l)
                    })
                    .sum(),
                Term::Symmetrized { row, channel } => {
                    let l = cache.get(Cached::MaxLog, *row);
                    let bit = patterns[*row].bit(k) ^ u8::from(flip);
                    mi_term(channel, if flip { -l } else { l }, bit)
                }
                Term::Mixed { channel } => {
                    let l = cache.get(Cached::MaxLog, pick);
                    m as f64 * mi_term(channel, l, patterns[pick].bit(k))
                }
            };
        }
    })
}

/// Monte Carlo estimate of one rate; see [`mc_rates`]. For bit-level kinds
/// the source is a single pattern.
pub fn mc_rate(
    constellation: &Constellation,
    source: &CurveSource,
    snr: Snr,
    kind: RateKind,
    s_star: &[f64],
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    let est = mc_rates(
        constellation,
        source,
        snr,
        &[McRequest::new(kind, s_star)],
        samples,
        seed,
    )?;
    Ok(est[0])
}

/// L-values of one bit position given the transmitted bit, for histogram
/// and distribution tests.
pub fn sample_lvalues(
    constellation: &Constellation,
    pattern: &Pattern,
    snr: Snr,
    kind: LValueKind,
    bit: u8,
    samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let lv = RowLValue::new(constellation, pattern, snr, kind)?;
    let subset = pattern.subconstellation(constellation, bit);
    let sigma = snr.noise_std();
    let chunks = (samples as u64).div_ceil(CHUNK_SIZE);
    let parts: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = chunk_rng(seed, k);
            let count = CHUNK_SIZE.min(samples as u64 - k * CHUNK_SIZE);
            (0..count)
                .map(|_| {
                    let x = subset[rng.random_range(0..subset.len())];
                    let z: f64 = rng.sample(StandardNormal);
                    lv.eval(x + sigma * z)
                })
                .collect()
        })
        .collect();
    Ok(parts.concat())
}

/// Kolmogorov–Smirnov distance between a sample and a continuous CDF.
pub fn ks_distance(mut sample: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    sample
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

/// Value of the GMI objective implied by an estimate of `1 − objective`.
pub fn objective_from_rate(estimate: &McEstimate) -> f64 {
    1.0 - estimate.mean
}
