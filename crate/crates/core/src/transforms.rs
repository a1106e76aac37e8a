//! Binary-input channels described only by their conditional L-value
//! densities, with the symmetrization and mixing transforms and MI/GMI
//! computed by adaptive integration over the L-value.
//!
//! A channel is a weighted sum of [`LValueLaw`] components, each optionally
//! mirrored (`W(-l | 1-b)` instead of `W(l | b)`). Symmetrization splits every
//! component into a plain and a mirrored half; mixing concatenates the
//! component lists with rescaled weights.

use std::f64::consts::LN_2;
use std::fmt;
use std::sync::Arc;

use log::warn;

use crate::constellation::{Constellation, Pattern};
use crate::error::{Error, Result};
use crate::lvalue::{BitDemapper, ConditionalLValueDensity, Snr};
use crate::numerics::special::{log2_one_plus_exp_neg, log_add_exp};
use crate::numerics::{golden_section, integrate_adaptive, kronrod_nodes, AdaptiveOptions};
use crate::rates::{clamp_rate, LValueKind, QuadratureConfig, RateKind, RateValue};

/// Observation half-width, in noise standard deviations beyond the outermost
/// points, used to bound the L-value range of integration.
pub const SUPPORT_SIGMAS: f64 = 8.0;

/// Conditional density of an L-value given the transmitted bit.
pub trait LValueLaw: Send + Sync + fmt::Debug {
    /// `ln W(l | bit)`; `-inf` where the density vanishes.
    fn log_density(&self, l: f64, bit: u8) -> f64;
    /// L-values where the density is discontinuous or has a kink.
    fn kinks(&self) -> Vec<f64>;
    /// L-value range carrying all but a negligible part of the mass.
    fn window(&self) -> (f64, f64);
    fn lvalue_kind(&self) -> LValueKind;
}

impl LValueLaw for ConditionalLValueDensity {
    fn log_density(&self, l: f64, bit: u8) -> f64 {
        ConditionalLValueDensity::log_density(self, l, bit)
    }

    fn kinks(&self) -> Vec<f64> {
        ConditionalLValueDensity::kinks(self)
    }

    fn window(&self) -> (f64, f64) {
        ConditionalLValueDensity::window(self, SUPPORT_SIGMAS)
    }

    fn lvalue_kind(&self) -> LValueKind {
        LValueKind::MaxLog
    }
}

/// Density of the exact L-value for patterns where it is monotone in the
/// observation (patterns equivalent to `[0,…,0,1,…,1]`), obtained by
/// inverting `l(y)` numerically.
#[derive(Debug, Clone)]
pub struct ExactLValueDensity {
    demapper: BitDemapper,
    increasing: bool,
    y_window: (f64, f64),
}

impl ExactLValueDensity {
    pub fn new(demapper: BitDemapper) -> Result<Self> {
        let p = demapper.pattern();
        if p.canonical() != Pattern::p_one(p.len())? {
            return Err(Error::InvalidPattern(format!(
                "the exact L-value density is only available for monotone patterns, got {p}"
            )));
        }
        let pts = demapper.constellation().points();
        let margin = SUPPORT_SIGMAS * demapper.snr().noise_std();
        Ok(Self {
            increasing: p.bit(0) == 0,
            y_window: (pts[0] - margin, pts[pts.len() - 1] + margin),
            demapper,
        })
    }

    /// The observation mapping to L-value `l`.
    fn invert(&self, l: f64) -> Option<f64> {
        let f = |y: f64| {
            let v = self.demapper.exact_lvalue(y);
            if self.increasing {
                v - l
            } else {
                l - v
            }
        };
        let (mut lo, mut hi) = self.y_window;
        let mut width = hi - lo;
        for _ in 0..200 {
            if f(lo) <= 0.0 {
                break;
            }
            lo -= width;
            width *= 2.0;
        }
        width = hi - lo;
        for _ in 0..200 {
            if f(hi) >= 0.0 {
                break;
            }
            hi += width;
            width *= 2.0;
        }
        if !(f(lo) <= 0.0 && f(hi) >= 0.0) {
            return None;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }
}

impl LValueLaw for ExactLValueDensity {
    fn log_density(&self, l: f64, bit: u8) -> f64 {
        match self.invert(l) {
            Some(y) => {
                let slope = self.demapper.exact_lvalue_slope(y).abs();
                if slope > 0.0 {
                    self.demapper.log_observation_density(y, bit) - slope.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            None => f64::NEG_INFINITY,
        }
    }

    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }

    fn window(&self) -> (f64, f64) {
        let a = self.demapper.exact_lvalue(self.y_window.0);
        let b = self.demapper.exact_lvalue(self.y_window.1);
        (a.min(b), a.max(b))
    }

    fn lvalue_kind(&self) -> LValueKind {
        LValueKind::Exact
    }
}

/// How a channel was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Raw,
    Symmetrized,
    Mixed,
}

#[derive(Debug, Clone)]
struct Component {
    weight: f64,
    law: Arc<dyn LValueLaw>,
    mirrored: bool,
}

impl Component {
    fn log_density(&self, l: f64, bit: u8) -> f64 {
        let ld = if self.mirrored {
            self.law.log_density(-l, 1 - bit)
        } else {
            self.law.log_density(l, bit)
        };
        self.weight.ln() + ld
    }
}

/// A binary-input channel given by its conditional densities `W(l | b)`.
#[derive(Debug, Clone)]
pub struct BinaryInputChannel {
    components: Vec<Component>,
    provenance: Provenance,
}

impl BinaryInputChannel {
    pub fn from_law(law: Arc<dyn LValueLaw>) -> Self {
        Self {
            components: vec![Component {
                weight: 1.0,
                law,
                mirrored: false,
            }],
            provenance: Provenance::Raw,
        }
    }

    /// The max-log bit channel of one bit position.
    pub fn maxlog(constellation: &Constellation, pattern: &Pattern, snr: Snr) -> Result<Self> {
        let demapper = BitDemapper::new(constellation, pattern, snr)?;
        Ok(Self::from_law(Arc::new(demapper.maxlog_density())))
    }

    /// The exact-L-value bit channel; only for monotone patterns.
    pub fn exact(constellation: &Constellation, pattern: &Pattern, snr: Snr) -> Result<Self> {
        let demapper = BitDemapper::new(constellation, pattern, snr)?;
        Ok(Self::from_law(Arc::new(ExactLValueDensity::new(demapper)?)))
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn log_density(&self, l: f64, bit: u8) -> f64 {
        self.components
            .iter()
            .map(|c| c.log_density(l, bit))
            .fold(f64::NEG_INFINITY, log_add_exp)
    }

    pub fn density(&self, l: f64, bit: u8) -> f64 {
        self.log_density(l, bit).exp()
    }

    pub fn kinks(&self) -> Vec<f64> {
        let mut kinks: Vec<f64> = self
            .components
            .iter()
            .flat_map(|c| {
                let sign = if c.mirrored { -1.0 } else { 1.0 };
                c.law.kinks().into_iter().map(move |k| sign * k)
            })
            .collect();
        kinks.sort_by(f64::total_cmp);
        kinks.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(1.0));
        kinks
    }

    pub fn window(&self) -> (f64, f64) {
        self.components
            .iter()
            .map(|c| {
                let (lo, hi) = c.law.window();
                if c.mirrored {
                    (-hi, -lo)
                } else {
                    (lo, hi)
                }
            })
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (lo, hi)| {
                (a.min(lo), b.max(hi))
            })
    }

    fn lvalue_kind(&self) -> LValueKind {
        self.components[0].law.lvalue_kind()
    }

    /// Integration edges: the window cut at every kink inside it.
    fn edges(&self) -> Vec<f64> {
        let (lo, hi) = self.window();
        let mut edges = vec![lo];
        edges.extend(self.kinks().into_iter().filter(|&k| k > lo && k < hi));
        edges.push(hi);
        edges
    }

    /// `∫ W(l | b) dl` for both bits over the integration window.
    pub fn total_mass(&self) -> Result<[f64; 2]> {
        Ok(integrate_adaptive(
            |l| [self.density(l, 0), self.density(l, 1)],
            &self.edges(),
            AdaptiveOptions::default(),
        )?
        .value)
    }
}

/// `W̃(l | b) = ½ (W(l | b) + W(-l | 1-b))`.
pub fn symmetrize(channel: &BinaryInputChannel) -> BinaryInputChannel {
    let components = channel
        .components
        .iter()
        .flat_map(|c| {
            [false, true].map(|flip| Component {
                weight: 0.5 * c.weight,
                law: c.law.clone(),
                mirrored: c.mirrored ^ flip,
            })
        })
        .collect();
    BinaryInputChannel {
        components,
        provenance: Provenance::Symmetrized,
    }
}

/// `W̃(l | b) = (1/m) Σ_j W_j(l | b)`.
pub fn mix(channels: &[BinaryInputChannel]) -> Result<BinaryInputChannel> {
    let weights = vec![1.0 / channels.len().max(1) as f64; channels.len()];
    mix_weighted(channels, &weights)
}

/// `W̃(l | b) = Σ_j w_j W_j(l | b)`.
pub fn mix_weighted(
    channels: &[BinaryInputChannel],
    weights: &[f64],
) -> Result<BinaryInputChannel> {
    if channels.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot mix an empty list of channels".into(),
        ));
    }
    check_weights(channels.len(), weights)?;
    let components = channels
        .iter()
        .zip(weights)
        .flat_map(|(ch, &w)| {
            ch.components.iter().map(move |c| Component {
                weight: w * c.weight,
                ..c.clone()
            })
        })
        .filter(|c| c.weight > 0.0)
        .collect();
    Ok(BinaryInputChannel {
        components,
        provenance: Provenance::Mixed,
    })
}

fn check_weights(count: usize, weights: &[f64]) -> Result<()> {
    if weights.len() != count {
        return Err(Error::LengthMismatch {
            left: count,
            right: weights.len(),
        });
    }
    let total: f64 = weights.iter().sum();
    if weights.iter().any(|&w| w.is_nan() || w < 0.0) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "weights must be a probability vector, got {weights:?}"
        )));
    }
    Ok(())
}

fn xlog2_ratio(w: f64, avg: f64) -> f64 {
    if w > 0.0 {
        w * (w / avg).ln() / LN_2
    } else {
        0.0
    }
}

/// `I(B; L) = ½ Σ_b ∫ W(l|b) log2(W(l|b) / W̄(l)) dl`.
pub fn mi_of_channel(channel: &BinaryInputChannel) -> Result<RateValue> {
    let res = integrate_adaptive(
        |l| {
            let w0 = channel.density(l, 0);
            let w1 = channel.density(l, 1);
            let avg = 0.5 * (w0 + w1);
            [0.5 * (xlog2_ratio(w0, avg) + xlog2_ratio(w1, avg))]
        },
        &channel.edges(),
        AdaptiveOptions::default(),
    )?;
    let kind = match channel.provenance {
        Provenance::Symmetrized if channel.lvalue_kind() == LValueKind::MaxLog => {
            RateKind::BitMiSymmetrized
        }
        _ => RateKind::BitMi(channel.lvalue_kind()),
    };
    Ok(RateValue {
        value: clamp_rate(res.value[0]),
        kind,
        s_star: Vec::new(),
        at_boundary: false,
    })
}

/// The GMI objective of a channel, `½ Σ_b ∫ W(l|b) log2(1 + e^{-s·b̌·l}) dl`,
/// on a fixed set of nodes adapted to the channel.
#[derive(Debug, Clone)]
pub struct ChannelObjective {
    /// `(weight·W(l|b), b̌·l)` pairs.
    terms: Vec<(f64, f64)>,
}

impl ChannelObjective {
    pub fn new(channel: &BinaryInputChannel) -> Result<Self> {
        // refine for a spread of s values so the partition serves the whole search
        let res = integrate_adaptive(
            |l| {
                let (w0, w1) = (channel.density(l, 0), channel.density(l, 1));
                let mut out = [w0, w1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
                for (k, s) in [0.25, 1.0, 4.0].into_iter().enumerate() {
                    out[2 + 2 * k] = w0 * log2_one_plus_exp_neg(-s * l);
                    out[3 + 2 * k] = w1 * log2_one_plus_exp_neg(s * l);
                }
                out
            },
            &channel.edges(),
            AdaptiveOptions::default(),
        )?;
        let mut terms = Vec::with_capacity(2 * 15 * res.intervals.len());
        for &(a, b) in &res.intervals {
            for (l, w) in kronrod_nodes(a, b) {
                terms.push((0.5 * w * channel.density(l, 0), -l));
                terms.push((0.5 * w * channel.density(l, 1), l));
            }
        }
        terms.retain(|&(w, _)| w > 0.0);
        Ok(Self { terms })
    }

    pub fn objective(&self, s: f64) -> f64 {
        if s == 0.0 {
            return 1.0;
        }
        self.terms
            .iter()
            .map(|&(w, l)| w * log2_one_plus_exp_neg(s * l))
            .sum()
    }
}

fn minimize_channels(
    objectives: &[ChannelObjective],
    kind: RateKind,
    cfg: &QuadratureConfig,
) -> Result<RateValue> {
    cfg.validate()?;
    let count = objectives.len() as f64;
    let total = |s: f64| objectives.iter().map(|o| o.objective(s)).sum::<f64>();
    let best = golden_section(total, cfg.s_lo, cfg.s_hi, cfg.s_rel_tol);
    let (s, min, at_boundary) = if count <= best.value {
        (0.0, count, false)
    } else {
        (best.x, best.value, best.at_boundary)
    };
    if at_boundary {
        warn!("{kind}: minimizing s = {s} is on the search boundary");
    }
    Ok(RateValue {
        value: clamp_rate(count - min),
        kind,
        s_star: vec![s],
        at_boundary,
    })
}

/// `1 − min_s ½ Σ_b ∫ W(l|b) log2(1 + e^{-s·b̌·l}) dl`.
pub fn gmi_of_channel(channel: &BinaryInputChannel, cfg: &QuadratureConfig) -> Result<RateValue> {
    minimize_channels(
        &[ChannelObjective::new(channel)?],
        RateKind::BitGmi(channel.lvalue_kind()),
        cfg,
    )
}

/// BICM GMI of a set of bit channels with one common `s`.
pub fn bicm_gmi_of_channels(
    channels: &[BinaryInputChannel],
    cfg: &QuadratureConfig,
) -> Result<RateValue> {
    if channels.is_empty() {
        return Err(Error::InvalidArgument("no channels".into()));
    }
    let objectives = channels
        .iter()
        .map(ChannelObjective::new)
        .collect::<Result<Vec<_>>>()?;
    minimize_channels(
        &objectives,
        RateKind::BicmGmi(channels[0].lvalue_kind()),
        cfg,
    )
}

/// Harmonized GMI of a set of bit channels: per-channel GMIs, summed.
pub fn harmonized_gmi_of_channels(
    channels: &[BinaryInputChannel],
    cfg: &QuadratureConfig,
) -> Result<RateValue> {
    if channels.is_empty() {
        return Err(Error::InvalidArgument("no channels".into()));
    }
    let per = channels
        .iter()
        .map(|ch| gmi_of_channel(ch, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(RateValue {
        value: clamp_rate(per.iter().map(|r| r.value).sum()),
        kind: RateKind::HarmonizedGmi(channels[0].lvalue_kind()),
        s_star: per.iter().map(|r| r.s_star[0]).collect(),
        at_boundary: per.iter().any(|r| r.at_boundary),
    })
}

/// `I(B; L | S) − I(B; L) = Σ_j w_j I(B; L_j) − I(B; L_mix)`, where the
/// mixture picks channel `j` with probability `w_j`.
pub fn conditional_mi_gap(channels: &[BinaryInputChannel], weights: &[f64]) -> Result<f64> {
    check_weights(channels.len(), weights)?;
    let mixture = mix_weighted(channels, weights)?;
    let mut conditional = 0.0;
    for (ch, &w) in channels.iter().zip(weights) {
        conditional += w * mi_of_channel(ch)?.value;
    }
    Ok(conditional - mi_of_channel(&mixture)?.value)
}
