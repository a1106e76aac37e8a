//! Bit-level MI and GMI, and labeling-level BICM MI, BICM GMI and harmonized
//! GMI, computed by quadrature over the channel observation.
//!
//! Every expectation is `(1/M) Σ_x E[h(Y) | X = x]` with `Y ~ N(x, 1/(2ρ))`.
//! The per-point expectation uses [`GaussianRule`]: Gauss–Hermite when the
//! integrand is smooth around `x`, composite Gauss–Legendre split at the
//! integrand's kinks otherwise.
//!
//! All rates reduce to the GMI objective `E[log2(1 + e^{-s·b̌·L})]` with
//! `b̌ = 2b − 1`: the GMI minimizes it over `s`, and the MI of an L-value that
//! is a true log-likelihood ratio equals `1 −` the objective at `s = 1`. The
//! max-log MI is therefore computed from the corrected L-value `g(l)`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::constellation::{Constellation, Labeling, Pattern};
use crate::error::{Error, Result};
use crate::lvalue::{BitDemapper, Snr};
use crate::numerics::special::log2_one_plus_exp_neg;
use crate::numerics::{golden_section, GaussianRule};

/// Rates below this are reported as exactly zero.
pub const RATE_FLOOR: f64 = 1e-12;

/// Which L-value a rate is computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LValueKind {
    Exact,
    MaxLog,
    /// Max-log L-value passed through the correction `g`.
    Corrected,
}

impl LValueKind {
    pub const ALL: [LValueKind; 3] = [LValueKind::Exact, LValueKind::MaxLog, LValueKind::Corrected];

    pub fn name(self) -> &'static str {
        match self {
            LValueKind::Exact => "exact",
            LValueKind::MaxLog => "maxlog",
            LValueKind::Corrected => "corrected",
        }
    }
}

impl fmt::Display for LValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The quantity a [`RateValue`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RateKind {
    /// `I(B; L)` for one bit position.
    BitMi(LValueKind),
    /// GMI of one bit position.
    BitGmi(LValueKind),
    /// MI of one symmetrized max-log bit channel.
    BitMiSymmetrized,
    /// Sum of the bit-level MIs.
    BicmMi(LValueKind),
    /// GMI with a single `s` shared by all bit positions.
    BicmGmi(LValueKind),
    /// Sum of the bit-level GMIs, each with its own `s`.
    HarmonizedGmi(LValueKind),
    /// `m` times the MI of the uniformly mixed max-log bit channels.
    BicmMiMixed,
}

impl RateKind {
    /// Every kind the command line understands, in display order.
    pub const ALL: [RateKind; 14] = [
        RateKind::BitMi(LValueKind::Exact),
        RateKind::BitMi(LValueKind::MaxLog),
        RateKind::BitMi(LValueKind::Corrected),
        RateKind::BitGmi(LValueKind::Exact),
        RateKind::BitGmi(LValueKind::MaxLog),
        RateKind::BitGmi(LValueKind::Corrected),
        RateKind::BitMiSymmetrized,
        RateKind::BicmMi(LValueKind::Exact),
        RateKind::BicmMi(LValueKind::MaxLog),
        RateKind::BicmGmi(LValueKind::Exact),
        RateKind::BicmGmi(LValueKind::MaxLog),
        RateKind::HarmonizedGmi(LValueKind::Exact),
        RateKind::HarmonizedGmi(LValueKind::MaxLog),
        RateKind::BicmMiMixed,
    ];

    /// Bit-level kinds range over `[0, 1]`, labeling-level kinds over `[0, m]`.
    pub fn is_bit_level(self) -> bool {
        matches!(
            self,
            RateKind::BitMi(_) | RateKind::BitGmi(_) | RateKind::BitMiSymmetrized
        )
    }

    pub fn name(self) -> String {
        match self {
            RateKind::BitMi(k) => format!("mi_{k}"),
            RateKind::BitGmi(k) => format!("gmi_{k}"),
            RateKind::BitMiSymmetrized => "mi_maxlog_sym".into(),
            RateKind::BicmMi(k) => format!("mi_bicm_{k}"),
            RateKind::BicmGmi(k) => format!("gmi_bicm_{k}"),
            RateKind::HarmonizedGmi(k) => format!("gmi_harm_{k}"),
            RateKind::BicmMiMixed => "mi_bicm_maxlog_mixed".into(),
        }
    }
}

impl fmt::Display for RateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for RateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let wanted = s.trim().to_ascii_lowercase();
        RateKind::ALL
            .into_iter()
            .find(|k| k.name() == wanted)
            .ok_or_else(|| Error::Parse(format!("unknown rate kind `{s}`")))
    }
}

/// A rate in bits per channel use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateValue {
    pub value: f64,
    pub kind: RateKind,
    /// Minimizing `s`: empty for MI kinds, one entry for bit-level and BICM
    /// GMI, one per bit position for the harmonized GMI.
    pub s_star: Vec<f64>,
    /// Some minimizer landed on the edge of the search interval.
    pub at_boundary: bool,
}

impl RateValue {
    fn mi(kind: RateKind, value: f64) -> Self {
        Self {
            value: clamp_rate(value),
            kind,
            s_star: Vec::new(),
            at_boundary: false,
        }
    }
}

pub(crate) fn clamp_rate(value: f64) -> f64 {
    if value < RATE_FLOOR {
        0.0
    } else {
        value
    }
}

/// Quadrature order and search settings for `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Nodes per conditioning point (Gauss–Hermite order, and Gauss–Legendre
    /// order per piece when the integrand has to be split).
    pub nodes_per_point: usize,
    pub s_lo: f64,
    pub s_hi: f64,
    /// Relative bracket width at which the golden-section search stops.
    pub s_rel_tol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            nodes_per_point: 64,
            s_lo: 1e-4,
            s_hi: 8.0,
            s_rel_tol: 1e-8,
        }
    }
}

impl QuadratureConfig {
    pub fn with_nodes(nodes_per_point: usize) -> Result<Self> {
        let cfg = Self {
            nodes_per_point,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes_per_point < 8 {
            return Err(Error::InvalidArgument(format!(
                "at least 8 quadrature nodes per point are required, got {}",
                self.nodes_per_point
            )));
        }
        if !(self.s_lo > 0.0 && self.s_lo < self.s_hi && self.s_hi.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "invalid search interval [{}, {}]",
                self.s_lo, self.s_hi
            )));
        }
        if self.s_rel_tol.is_nan() || self.s_rel_tol <= 0.0 {
            return Err(Error::InvalidArgument(
                "search tolerance must be positive".into(),
            ));
        }
        Ok(())
    }

    pub(crate) fn rule(&self) -> Arc<GaussianRule> {
        static RULES: OnceLock<Mutex<HashMap<usize, Arc<GaussianRule>>>> = OnceLock::new();
        let mut rules = RULES
            .get_or_init(Default::default)
            .lock()
            .unwrap_or_else(|e| e.into_inner());
        rules
            .entry(self.nodes_per_point)
            .or_insert_with(|| Arc::new(GaussianRule::new(self.nodes_per_point)))
            .clone()
    }
}

/// Quadrature nodes for one bit position and L-value kind, with the signed
/// L-value `b̌·l(y)` cached at every node so the GMI objective can be
/// re-evaluated for many `s` cheaply.
#[derive(Debug, Clone)]
pub struct BitObjective {
    weights: Vec<f64>,
    signed_l: Vec<f64>,
}

impl BitObjective {
    pub fn new(
        constellation: &Constellation,
        pattern: &Pattern,
        snr: Snr,
        kind: LValueKind,
        cfg: &QuadratureConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let demapper = BitDemapper::new(constellation, pattern, snr)?;
        let rule = cfg.rule();
        let sigma = snr.noise_std();
        let weight = 1.0 / constellation.size() as f64;

        let mut splits = demapper.decision_boundaries();
        let (piecewise, density) = match kind {
            LValueKind::Exact => (None, None),
            LValueKind::MaxLog => (Some(demapper.piecewise()), None),
            LValueKind::Corrected => {
                let density = demapper.maxlog_density();
                (Some(density.piecewise().clone()), Some(density))
            }
        };
        if let Some(pl) = &piecewise {
            splits.extend_from_slice(pl.breakpoints());
            if density.is_some() {
                for v in pl.kink_values() {
                    splits.extend(pl.preimages(v));
                }
            }
        }
        splits.sort_by(f64::total_cmp);

        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let mut signed_l = Vec::new();
        for (k, &x) in constellation.points().iter().enumerate() {
            let sign = if pattern.bit(k) == 1 { 1.0 } else { -1.0 };
            nodes.clear();
            rule.push_nodes(x, sigma, &splits, &mut nodes);
            for &(y, w) in &nodes {
                let l = match (&piecewise, &density) {
                    (None, _) => demapper.exact_lvalue(y),
                    (Some(pl), None) => pl.eval(y),
                    (Some(pl), Some(dens)) => dens.correction(pl.eval(y))?,
                };
                weights.push(w * weight);
                signed_l.push(sign * l);
            }
        }
        Ok(Self { weights, signed_l })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `E[log2(1 + e^{-s·b̌·L})]`.
    pub fn objective(&self, s: f64) -> f64 {
        if s == 0.0 {
            return 1.0;
        }
        self.weights
            .iter()
            .zip(&self.signed_l)
            .map(|(w, l)| w * log2_one_plus_exp_neg(s * l))
            .sum()
    }

    /// `1 − objective(1)`; the MI when the L-value is a true log-likelihood
    /// ratio (exact or corrected).
    pub fn mi(&self) -> f64 {
        1.0 - self.objective(1.0)
    }
}

/// Minimizes a sum of objectives over a common `s`; returns `(s*, min, boundary)`.
fn minimize_sum(objectives: &[&BitObjective], cfg: &QuadratureConfig) -> (f64, f64, bool) {
    let total = |s: f64| objectives.iter().map(|o| o.objective(s)).sum::<f64>();
    let best = golden_section(total, cfg.s_lo, cfg.s_hi, cfg.s_rel_tol);
    let at_s0 = objectives.len() as f64;
    if at_s0 <= best.value {
        (0.0, at_s0, false)
    } else {
        (best.x, best.value, best.at_boundary)
    }
}

fn gmi_from(objectives: &[&BitObjective], kind: RateKind, cfg: &QuadratureConfig) -> RateValue {
    let (s, min, at_boundary) = minimize_sum(objectives, cfg);
    if at_boundary {
        warn!("{kind}: minimizing s = {s} is on the search boundary");
    }
    RateValue {
        value: clamp_rate(objectives.len() as f64 - min),
        kind,
        s_star: vec![s],
        at_boundary,
    }
}

/// `E[log2(1 + e^{-s·b̌·L})]` for one bit position.
pub fn gmi_objective(
    constellation: &Constellation,
    pattern: &Pattern,
    snr: Snr,
    kind: LValueKind,
    s: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "s must be nonnegative, got {s}"
        )));
    }
    Ok(BitObjective::new(constellation, pattern, snr, kind, cfg)?.objective(s))
}

/// Bit-level GMI `1 − min_s E[log2(1 + e^{-s·b̌·L})]`.
pub fn bit_gmi(
    constellation: &Constellation,
    pattern: &Pattern,
    snr: Snr,
    kind: LValueKind,
    cfg: &QuadratureConfig,
) -> Result<RateValue> {
    let obj = BitObjective::new(constellation, pattern, snr, kind, cfg)?;
    Ok(gmi_from(&[&obj], RateKind::BitGmi(kind), cfg))
}

/// `I(B; L)` for the given L-value kind. The exact and corrected kinds give
/// `I(B; Y)` and `I(B; L^ml)` respectively; the max-log kind is `I(B; L^ml)`
/// as well, since `g` is a sufficient statistic.
pub fn bit_mi(
    constellation: &Constellation,
    pattern: &Pattern,
    snr: Snr,
    kind: LValueKind,
    cfg: &QuadratureConfig,
) -> Result<RateValue> {
    let lkind = match kind {
        LValueKind::Exact => LValueKind::Exact,
        LValueKind::MaxLog | LValueKind::Corrected => LValueKind::Corrected,
    };
    let obj = BitObjective::new(constellation, pattern, snr, lkind, cfg)?;
    Ok(RateValue::mi(RateKind::BitMi(kind), obj.mi()))
}

/// `I(B; Y)` for one bit position.
pub fn bit_mi_exact(
    constellation: &Constellation,
    pattern: &Pattern,
    snr: Snr,
    cfg: &QuadratureConfig,
) -> Result<RateValue> {
    bit_mi(constellation, pattern, snr, LValueKind::Exact, cfg)
}

/// `I(B; L^ml)` for one bit position, from the analytic max-log density.
pub fn bit_mi_maxlog(
    constellation: &Constellation,
    pattern: &Pattern,
    snr: Snr,
    cfg: &QuadratureConfig,
) -> Result<RateValue> {
    bit_mi(constellation, pattern, snr, LValueKind::MaxLog, cfg)
}

fn row_objectives(
    constellation: &Constellation,
    labeling: &Labeling,
    snr: Snr,
    kind: LValueKind,
    cfg: &QuadratureConfig,
) -> Result<Vec<BitObjective>> {
    labeling.check_compatible(constellation)?;
    labeling
        .rows()
        .iter()
        .map(|p| BitObjective::new(constellation, p, snr, kind, cfg))
        .collect()
}

/// BICM MI: the sum of the bit-level MIs.
pub fn bicm_mi(
    constellation: &Constellation,
    labeling: &Labeling,
    snr: Snr,
    kind: LValueKind,
    cfg: &QuadratureConfig,
) -> Result<RateValue> {
    labeling.check_compatible(constellation)?;
    let total = labeling
        .rows()
        .iter()
        .map(|p| bit_mi(constellation, p, snr, kind, cfg).map(|r| r.value))
        .sum::<Result<f64>>()?;
    Ok(RateValue::mi(RateKind::BicmMi(kind), total))
}

/// BICM GMI: `m − min_s Σ_j E[log2(1 + e^{-s·b̌_j·L_j})]` with one `s`.
pub fn bicm_gmi(
    constellation: &Constellation,
    labeling: &Labeling,
    snr: Snr,
    kind: LValueKind,
    cfg: &QuadratureConfig,
) -> Result<RateValue> {
    let rows = row_objectives(constellation, labeling, snr, kind, cfg)?;
    let refs: Vec<&BitObjective> = rows.iter().collect();
    Ok(gmi_from(&refs, RateKind::BicmGmi(kind), cfg))
}

/// Harmonized GMI: the sum of the bit-level GMIs, each with its own `s`.
pub fn harmonized_gmi(
    constellation: &Constellation,
    labeling: &Labeling,
    snr: Snr,
    kind: LValueKind,
    cfg: &QuadratureConfig,
) -> Result<RateValue> {
    let rows = row_objectives(constellation, labeling, snr, kind, cfg)?;
    let per_row: Vec<RateValue> = rows
        .iter()
        .map(|o| gmi_from(&[o], RateKind::BitGmi(kind), cfg))
        .collect();
    Ok(RateValue {
        value: clamp_rate(per_row.iter().map(|r| r.value).sum()),
        kind: RateKind::HarmonizedGmi(kind),
        s_star: per_row.iter().map(|r| r.s_star[0]).collect(),
        at_boundary: per_row.iter().any(|r| r.at_boundary),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::tests::all_patterns;
    use approx::assert_abs_diff_eq;

    fn pam(m: u32) -> Constellation {
        Constellation::equally_spaced(m).unwrap()
    }

    fn pat(bits: &[u8]) -> Pattern {
        Pattern::new(bits.to_vec()).unwrap()
    }

    fn db(v: f64) -> Snr {
        Snr::from_db(v).unwrap()
    }

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    /// `I(B;Y)` by composite Simpson integration over a fine `y` grid.
    fn dense_mi_oracle(c: &Constellation, p: &Pattern, snr: Snr) -> f64 {
        let d = BitDemapper::new(c, p, snr).unwrap();
        let sigma = snr.noise_std();
        let pts = c.points();
        let (lo, hi) = (pts[0] - 14.0 * sigma, pts[pts.len() - 1] + 14.0 * sigma);
        let n = 200_000;
        let h = (hi - lo) / n as f64;
        let f = |y: f64| {
            let l0 = d.log_observation_density(y, 0);
            let l1 = d.log_observation_density(y, 1);
            let lf = crate::numerics::special::log_add_exp(l0, l1) - std::f64::consts::LN_2;
            0.5 * (l0.exp() * (l0 - lf) + l1.exp() * (l1 - lf)) / std::f64::consts::LN_2
        };
        let mut total = f(lo) + f(hi);
        for i in 1..n {
            total += f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        total * h / 3.0
    }

    #[test]
    fn config_validation() {
        assert!(QuadratureConfig::with_nodes(7).is_err());
        assert!(QuadratureConfig::with_nodes(8).is_ok());
        let bad = QuadratureConfig {
            s_lo: 2.0,
            s_hi: 1.0,
            ..cfg()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn kind_names_round_trip() {
        for k in RateKind::ALL {
            assert_eq!(k.name().parse::<RateKind>().unwrap(), k);
        }
        assert!("gmi_bogus".parse::<RateKind>().is_err());
    }

    #[test]
    fn objective_at_zero_is_one() {
        for kind in LValueKind::ALL {
            let v =
                gmi_objective(&pam(2), &pat(&[0, 1, 0, 1]), db(3.0), kind, 0.0, &cfg()).unwrap();
            assert_eq!(v, 1.0);
        }
        assert!(gmi_objective(
            &pam(1),
            &pat(&[0, 1]),
            db(0.0),
            LValueKind::Exact,
            -1.0,
            &cfg()
        )
        .is_err());
    }

    #[test]
    fn exact_mi_matches_dense_oracle() {
        let asym = Constellation::normalize(&[-2.0, -1.0, 1.0, 4.0]).unwrap();
        let cases = [
            (pam(1), pat(&[0, 1])),
            (pam(2), pat(&[0, 0, 1, 1])),
            (pam(2), pat(&[0, 1, 0, 1])),
            (asym, pat(&[0, 1, 1, 0])),
            (pam(3), pat(&[0, 1, 1, 0, 0, 1, 1, 0])),
        ];
        for (c, p) in &cases {
            for v in [-10.0, 0.0, 6.0, 15.0] {
                let q = bit_mi_exact(c, p, db(v), &cfg()).unwrap().value;
                let oracle = dense_mi_oracle(c, p, db(v));
                assert_abs_diff_eq!(q, oracle, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn bpsk_low_snr_value() {
        // I(B;Y) for BPSK at -10 dB, checked against the dense oracle
        let q = bit_mi_exact(&pam(1), &pat(&[0, 1]), db(-10.0), &cfg())
            .unwrap()
            .value;
        assert_abs_diff_eq!(
            q,
            dense_mi_oracle(&pam(1), &pat(&[0, 1]), db(-10.0)),
            epsilon = 1e-9
        );
        assert!(q > 0.1 && q < 0.2);
    }

    #[test]
    fn saturation_and_zero_snr_limits() {
        let r = bit_mi_exact(&pam(2), &pat(&[0, 0, 1, 1]), db(30.0), &cfg()).unwrap();
        assert!(r.value <= 1.0 && 1.0 - r.value < 1e-6);
        for kind in LValueKind::ALL {
            assert!(
                bit_gmi(&pam(2), &pat(&[0, 1, 1, 0]), db(-40.0), kind, &cfg())
                    .unwrap()
                    .value
                    < 1e-4
            );
            assert!(
                bit_mi(&pam(2), &pat(&[0, 1, 0, 1]), db(-40.0), kind, &cfg())
                    .unwrap()
                    .value
                    < 1e-4
            );
        }
        let lab = Labeling::nbc(2).unwrap();
        assert!(
            harmonized_gmi(&pam(2), &lab, db(-50.0), LValueKind::MaxLog, &cfg())
                .unwrap()
                .value
                < 1e-4
        );
    }

    #[test]
    fn exact_gmi_is_mi_with_unit_s() {
        for p in all_patterns(4) {
            for v in [-10.0, 0.0, 10.0] {
                let g = bit_gmi(&pam(2), &p, db(v), LValueKind::Exact, &cfg()).unwrap();
                let mi = bit_mi_exact(&pam(2), &p, db(v), &cfg()).unwrap();
                assert!((g.s_star[0] - 1.0).abs() <= 1e-3, "{p} {v} {:?}", g.s_star);
                assert_abs_diff_eq!(g.value, mi.value, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn corrected_gmi_equals_maxlog_mi() {
        for p in all_patterns(4) {
            for v in [-5.0, 0.0, 8.0] {
                let g = bit_gmi(&pam(2), &p, db(v), LValueKind::Corrected, &cfg()).unwrap();
                let mi = bit_mi_maxlog(&pam(2), &p, db(v), &cfg()).unwrap();
                assert_abs_diff_eq!(g.value, mi.value, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn lossless_patterns_have_no_mi_loss() {
        for p in [pat(&[0, 0, 1, 1]), pat(&[0, 1, 1, 0])] {
            for v in [-10.0, 0.0, 10.0] {
                let ex = bit_mi_exact(&pam(2), &p, db(v), &cfg()).unwrap().value;
                let ml = bit_mi_maxlog(&pam(2), &p, db(v), &cfg()).unwrap().value;
                assert_abs_diff_eq!(ex, ml, epsilon = 1e-6);
            }
        }
        let ex = bit_mi_exact(&pam(2), &pat(&[0, 1, 0, 1]), db(0.0), &cfg())
            .unwrap()
            .value;
        let ml = bit_mi_maxlog(&pam(2), &pat(&[0, 1, 0, 1]), db(0.0), &cfg())
            .unwrap()
            .value;
        assert!(ex - ml > 1e-4);
        let bpsk = pat(&[0, 1]);
        assert_eq!(
            bit_mi_exact(&pam(1), &bpsk, db(2.0), &cfg()).unwrap().value,
            bit_mi(&pam(1), &bpsk, db(2.0), LValueKind::Exact, &cfg())
                .unwrap()
                .value
        );
        assert_abs_diff_eq!(
            bit_mi_exact(&pam(1), &bpsk, db(2.0), &cfg()).unwrap().value,
            bit_mi_maxlog(&pam(1), &bpsk, db(2.0), &cfg())
                .unwrap()
                .value,
            epsilon = 1e-12
        );
    }

    #[test]
    fn golden_section_matches_grid_scan() {
        let obj = BitObjective::new(
            &pam(2),
            &pat(&[0, 1, 1, 0]),
            db(3.0),
            LValueKind::MaxLog,
            &cfg(),
        )
        .unwrap();
        let g = bit_gmi(
            &pam(2),
            &pat(&[0, 1, 1, 0]),
            db(3.0),
            LValueKind::MaxLog,
            &cfg(),
        )
        .unwrap();
        let scan = (0..=1000)
            .map(|i| obj.objective(1e-4 + (8.0 - 1e-4) * i as f64 / 1000.0))
            .fold(f64::INFINITY, f64::min);
        assert!(1.0 - scan <= g.value + 1e-12);
        assert_abs_diff_eq!(1.0 - scan, g.value, epsilon = 1e-6);
    }

    #[test]
    fn objective_is_convex_in_s() {
        let obj = BitObjective::new(
            &pam(3),
            &pat(&[0, 1, 0, 1, 0, 1, 0, 1]),
            db(5.0),
            LValueKind::MaxLog,
            &cfg(),
        )
        .unwrap();
        let vals: Vec<f64> = (0..=80).map(|i| obj.objective(0.1 * i as f64)).collect();
        for w in vals.windows(3) {
            assert!(w[0] + w[2] - 2.0 * w[1] >= -1e-12);
        }
    }

    #[test]
    fn quadrature_order_doubling() {
        let hi = QuadratureConfig::with_nodes(128).unwrap();
        for (m, p) in [(2, pat(&[0, 1, 0, 1])), (3, pat(&[0, 0, 1, 1, 1, 1, 0, 0]))] {
            for v in [-10.0, 0.0, 10.0, 20.0] {
                for kind in LValueKind::ALL {
                    let a = bit_gmi(&pam(m), &p, db(v), kind, &cfg()).unwrap().value;
                    let b = bit_gmi(&pam(m), &p, db(v), kind, &hi).unwrap().value;
                    assert!((a - b).abs() <= 1e-7, "{m} {p} {v} {kind}: {a} vs {b}");
                    let a = bit_mi(&pam(m), &p, db(v), kind, &cfg()).unwrap().value;
                    let b = bit_mi(&pam(m), &p, db(v), kind, &hi).unwrap().value;
                    assert!((a - b).abs() <= 1e-7, "{m} {p} {v} {kind}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn labeling_level_relations() {
        let c = pam(2);
        for lab in [Labeling::brgc(2).unwrap(), Labeling::nbc(2).unwrap()] {
            for v in [-5.0, 0.0, 5.0, 10.0] {
                let mi = bicm_mi(&c, &lab, db(v), LValueKind::Exact, &cfg())
                    .unwrap()
                    .value;
                let gb = bicm_gmi(&c, &lab, db(v), LValueKind::Exact, &cfg()).unwrap();
                let gh = harmonized_gmi(&c, &lab, db(v), LValueKind::Exact, &cfg()).unwrap();
                assert_abs_diff_eq!(mi, gb.value, epsilon = 1e-6);
                assert_abs_diff_eq!(mi, gh.value, epsilon = 1e-6);
                assert_eq!(gh.s_star.len(), 2);

                let mi_ml = bicm_mi(&c, &lab, db(v), LValueKind::MaxLog, &cfg())
                    .unwrap()
                    .value;
                let gb_ml = bicm_gmi(&c, &lab, db(v), LValueKind::MaxLog, &cfg())
                    .unwrap()
                    .value;
                let gh_ml = harmonized_gmi(&c, &lab, db(v), LValueKind::MaxLog, &cfg())
                    .unwrap()
                    .value;
                assert!(mi + 1e-6 >= mi_ml);
                assert!(mi_ml + 1e-6 >= gh_ml);
                assert!(gh_ml + 1e-6 >= gb_ml);
            }
        }
        let brgc = Labeling::brgc(2).unwrap();
        let ex = bicm_mi(&c, &brgc, db(0.0), LValueKind::Exact, &cfg())
            .unwrap()
            .value;
        let ml = bicm_mi(&c, &brgc, db(0.0), LValueKind::MaxLog, &cfg())
            .unwrap()
            .value;
        assert_abs_diff_eq!(ex, ml, epsilon = 1e-6);

        let brgc8 = Labeling::brgc(3).unwrap();
        let ex = bicm_mi(&pam(3), &brgc8, db(0.0), LValueKind::Exact, &cfg())
            .unwrap()
            .value;
        let ml = bicm_mi(&pam(3), &brgc8, db(0.0), LValueKind::MaxLog, &cfg())
            .unwrap()
            .value;
        assert!(ex > ml);
    }

    #[test]
    fn labeling_row_one_shared() {
        let c = pam(2);
        let (brgc, nbc) = (Labeling::brgc(2).unwrap(), Labeling::nbc(2).unwrap());
        let row =
            |lab: &Labeling, j: usize| bit_mi_exact(&c, lab.row(j), db(1.0), &cfg()).unwrap().value;
        assert_eq!(row(&brgc, 0), row(&nbc, 0));
        let total = bicm_mi(&c, &nbc, db(1.0), LValueKind::Exact, &cfg())
            .unwrap()
            .value;
        assert_abs_diff_eq!(total, row(&nbc, 0) + row(&nbc, 1), epsilon = 1e-15);
    }

    #[test]
    fn incompatible_labeling_rejected() {
        assert!(bicm_mi(
            &pam(3),
            &Labeling::brgc(2).unwrap(),
            db(0.0),
            LValueKind::Exact,
            &cfg()
        )
        .is_err());
    }

    #[test]
    fn rates_nondecreasing_in_snr() {
        let lab = Labeling::nbc(2).unwrap();
        let grid: Vec<f64> = (-10..=20).map(f64::from).collect();
        for kind in [LValueKind::Exact, LValueKind::MaxLog] {
            let series: Vec<f64> = grid
                .iter()
                .map(|&v| {
                    harmonized_gmi(&pam(2), &lab, db(v), kind, &cfg())
                        .unwrap()
                        .value
                })
                .collect();
            assert!(series.windows(2).all(|w| w[1] > w[0]), "{kind}: {series:?}");
        }
    }
}
