//! Exact and max-log L-values of one bit position, as functions of the
//! channel observation `y`.
//!
//! The max-log L-value is a continuous piecewise-linear function of `y`
//! ([`PiecewiseLinearLValue`]): its slope changes at midpoints between
//! neighboring points that carry the same bit, and it crosses zero at
//! midpoints between neighbors that carry different bits. Because every
//! piece is affine, the conditional density of the max-log L-value given the
//! transmitted bit is a finite sum of Gaussian pieces
//! ([`ConditionalLValueDensity`]).

use std::f64::consts::PI;

use crate::constellation::{Constellation, Pattern};
use crate::error::{Error, Result};
use crate::numerics::special::{log_sum_exp, std_normal_interval};

/// Average SNR `ρ = 1/N0`; the noise variance is `N0/2 = 1/(2ρ)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Snr {
    rho: f64,
}

impl Snr {
    pub fn linear(rho: f64) -> Result<Self> {
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::InvalidSnr(format!(
                "linear SNR must be positive and finite, got {rho}"
            )));
        }
        Ok(Self { rho })
    }

    pub fn from_db(db: f64) -> Result<Self> {
        if !db.is_finite() {
            return Err(Error::InvalidSnr(format!("{db} dB")));
        }
        Self::linear(10f64.powf(db / 10.0))
    }

    pub fn rho(self) -> f64 {
        self.rho
    }

    pub fn db(self) -> f64 {
        10.0 * self.rho.log10()
    }

    /// Noise standard deviation `sqrt(N0/2)`.
    pub fn noise_std(self) -> f64 {
        (2.0 * self.rho).sqrt().recip()
    }
}

/// Computes the L-values of one bit position: the constellation split by a
/// pattern, at a given SNR.
#[derive(Debug, Clone)]
pub struct BitDemapper {
    constellation: Constellation,
    pattern: Pattern,
    snr: Snr,
    zeros: Vec<f64>,
    ones: Vec<f64>,
}

impl BitDemapper {
    pub fn new(constellation: &Constellation, pattern: &Pattern, snr: Snr) -> Result<Self> {
        if pattern.len() != constellation.size() {
            return Err(Error::LengthMismatch {
                left: constellation.size(),
                right: pattern.len(),
            });
        }
        Ok(Self {
            zeros: pattern.subconstellation(constellation, 0),
            ones: pattern.subconstellation(constellation, 1),
            constellation: constellation.clone(),
            pattern: pattern.clone(),
            snr,
        })
    }

    pub fn constellation(&self) -> &Constellation {
        &self.constellation
    }

    pub fn pattern(&self) -> &Pattern {
        &self.pattern
    }

    pub fn snr(&self) -> Snr {
        self.snr
    }

    /// Points labeled with `bit`.
    pub fn subset(&self, bit: u8) -> &[f64] {
        if bit == 0 {
            &self.zeros
        } else {
            &self.ones
        }
    }

    /// `log Σ_{x∈S1} e^{-ρ(y-x)²} − log Σ_{x∈S0} e^{-ρ(y-x)²}`.
    pub fn exact_lvalue(&self, y: f64) -> f64 {
        let rho = self.snr.rho;
        let metric = |x: &f64| -rho * (y - x) * (y - x);
        log_sum_exp(self.ones.iter().map(metric)) - log_sum_exp(self.zeros.iter().map(metric))
    }

    /// Derivative of [`exact_lvalue`](Self::exact_lvalue) with respect to `y`:
    /// `2ρ(E[X | y, B=1] − E[X | y, B=0])`.
    pub fn exact_lvalue_slope(&self, y: f64) -> f64 {
        let rho = self.snr.rho;
        let posterior_mean = |subset: &[f64]| {
            let max = subset
                .iter()
                .map(|x| -rho * (y - x) * (y - x))
                .fold(f64::NEG_INFINITY, f64::max);
            let (num, den) = subset.iter().fold((0.0, 0.0), |(n, d), x| {
                let w = (-rho * (y - x) * (y - x) - max).exp();
                (n + w * x, d + w)
            });
            num / den
        };
        2.0 * rho * (posterior_mean(&self.ones) - posterior_mean(&self.zeros))
    }

    /// `ρ [min_{x∈S0} (y−x)² − min_{x∈S1} (y−x)²]`.
    pub fn maxlog_lvalue(&self, y: f64) -> f64 {
        let nearest = |subset: &[f64]| {
            subset
                .iter()
                .map(|x| (y - x) * (y - x))
                .fold(f64::INFINITY, f64::min)
        };
        self.snr.rho * (nearest(&self.zeros) - nearest(&self.ones))
    }

    /// `f_{Y|B}(y|b) = (2/M) Σ_{x∈S_b} sqrt(ρ/π) e^{-ρ(y−x)²}`, in the log domain.
    pub fn log_observation_density(&self, y: f64, bit: u8) -> f64 {
        let rho = self.snr.rho;
        let offset = (2.0 / self.constellation.size() as f64).ln() + 0.5 * (rho / PI).ln();
        offset + log_sum_exp(self.subset(bit).iter().map(|x| -rho * (y - x) * (y - x)))
    }

    /// Midpoints between neighboring points labeled with different bits.
    pub fn zero_crossings(&self) -> Vec<f64> {
        let pts = self.constellation.points();
        (0..pts.len() - 1)
            .filter(|&k| self.pattern.bit(k) != self.pattern.bit(k + 1))
            .map(|k| 0.5 * (pts[k] + pts[k + 1]))
            .collect()
    }

    /// Midpoints between all neighboring constellation points.
    pub fn decision_boundaries(&self) -> Vec<f64> {
        self.constellation
            .points()
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]))
            .collect()
    }

    pub fn piecewise(&self) -> PiecewiseLinearLValue {
        PiecewiseLinearLValue::build(self)
    }

    pub fn maxlog_density(&self) -> ConditionalLValueDensity {
        ConditionalLValueDensity::new(self)
    }
}

/// One affine piece `l(y) = slope·y + intercept` on `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
    pub slope: f64,
    pub intercept: f64,
    /// Nearest point labeled 0 on this piece.
    pub zero_point: f64,
    /// Nearest point labeled 1 on this piece.
    pub one_point: f64,
}

impl Segment {
    pub fn eval(&self, y: f64) -> f64 {
        self.slope * y + self.intercept
    }

    /// `y` on this piece with `l(y) = l`, ignoring the piece bounds.
    pub fn invert(&self, l: f64) -> f64 {
        (l - self.intercept) / self.slope
    }

    pub fn contains(&self, y: f64) -> bool {
        y >= self.lo && y < self.hi
    }

    /// Closure of the image of the piece, `(inf, sup)`; may be infinite.
    pub fn image(&self) -> (f64, f64) {
        let ends = [self.value_at_edge(self.lo), self.value_at_edge(self.hi)];
        (ends[0].min(ends[1]), ends[0].max(ends[1]))
    }

    fn value_at_edge(&self, y: f64) -> f64 {
        if y.is_finite() {
            self.eval(y)
        } else {
            self.slope.signum() * y.signum() * f64::INFINITY
        }
    }
}

/// Max-log L-value of one bit position as a continuous piecewise-linear
/// function of the observation.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearLValue {
    breakpoints: Vec<f64>,
    segments: Vec<Segment>,
    zero_crossings: Vec<f64>,
}

impl PiecewiseLinearLValue {
    pub fn build(demapper: &BitDemapper) -> Self {
        let rho = demapper.snr.rho;
        let mut breakpoints: Vec<f64> = [demapper.subset(0), demapper.subset(1)]
            .iter()
            .flat_map(|s| s.windows(2).map(|w| 0.5 * (w[0] + w[1])))
            .collect();
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(1.0));

        let mut edges = Vec::with_capacity(breakpoints.len() + 2);
        edges.push(f64::NEG_INFINITY);
        edges.extend_from_slice(&breakpoints);
        edges.push(f64::INFINITY);

        let nearest = |subset: &[f64], y: f64| {
            *subset
                .iter()
                .min_by(|a, b| (y - **a).abs().total_cmp(&(y - **b).abs()))
                .expect("nonempty subconstellation")
        };
        let segments = edges
            .windows(2)
            .map(|w| {
                let probe = match (w[0].is_finite(), w[1].is_finite()) {
                    (true, true) => 0.5 * (w[0] + w[1]),
                    (false, true) => w[1] - 1.0,
                    (true, false) => w[0] + 1.0,
                    (false, false) => 0.0,
                };
                let a_t = nearest(demapper.subset(0), probe);
                let a_s = nearest(demapper.subset(1), probe);
                Segment {
                    lo: w[0],
                    hi: w[1],
                    slope: 2.0 * rho * (a_s - a_t),
                    intercept: rho * (a_t * a_t - a_s * a_s),
                    zero_point: a_t,
                    one_point: a_s,
                }
            })
            .collect();

        Self {
            breakpoints,
            segments,
            zero_crossings: demapper.zero_crossings(),
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn zero_crossings(&self) -> &[f64] {
        &self.zero_crossings
    }

    pub fn segment_index(&self, y: f64) -> usize {
        self.breakpoints.partition_point(|&b| b <= y)
    }

    pub fn eval(&self, y: f64) -> f64 {
        self.segments[self.segment_index(y)].eval(y)
    }

    /// L-values at the breakpoints; the conditional density of the L-value
    /// is discontinuous only there.
    pub fn kink_values(&self) -> Vec<f64> {
        self.breakpoints.iter().map(|&y| self.eval(y)).collect()
    }

    /// All `y` with `l(y) = l`.
    pub fn preimages(&self, l: f64) -> Vec<f64> {
        self.segments
            .iter()
            .map(|s| s.invert(l))
            .zip(&self.segments)
            .filter(|(y, s)| *y >= s.lo && *y <= s.hi)
            .map(|(y, _)| y)
            .collect()
    }

    /// Range of `l(y)` for `y ∈ [lo, hi]`.
    pub fn range_on(&self, lo: f64, hi: f64) -> (f64, f64) {
        std::iter::once(lo)
            .chain(
                self.breakpoints
                    .iter()
                    .copied()
                    .filter(|&b| b > lo && b < hi),
            )
            .chain(std::iter::once(hi))
            .map(|y| self.eval(y))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
                (a.min(v), b.max(v))
            })
    }

    /// Closure of the range of `l` over the whole real line.
    pub fn support(&self) -> (f64, f64) {
        self.segments
            .iter()
            .map(Segment::image)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (lo, hi)| {
                (a.min(lo), b.max(hi))
            })
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.segments.iter().all(|s| s.slope > 0.0)
    }
}

/// Analytic conditional density `f_{L|B}(l|b)` of the max-log L-value.
///
/// For every piece whose image contains `l`, the observation `y` that maps
/// to `l` contributes `f_{Y|B}(y|b) / |slope|`.
#[derive(Debug, Clone)]
pub struct ConditionalLValueDensity {
    piecewise: PiecewiseLinearLValue,
    zeros: Vec<f64>,
    ones: Vec<f64>,
    rho: f64,
    log_offset: f64,
    points: (f64, f64),
}

impl ConditionalLValueDensity {
    pub fn new(demapper: &BitDemapper) -> Self {
        let rho = demapper.snr.rho;
        let pts = demapper.constellation.points();
        Self {
            piecewise: demapper.piecewise(),
            zeros: demapper.subset(0).to_vec(),
            ones: demapper.subset(1).to_vec(),
            rho,
            log_offset: (2.0 / pts.len() as f64).ln() + 0.5 * (rho / PI).ln(),
            points: (pts[0], pts[pts.len() - 1]),
        }
    }

    pub fn piecewise(&self) -> &PiecewiseLinearLValue {
        &self.piecewise
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    fn subset(&self, bit: u8) -> &[f64] {
        if bit == 0 {
            &self.zeros
        } else {
            &self.ones
        }
    }

    /// `ln f_{L|B}(l|b)`; `-inf` outside the support.
    pub fn log_density(&self, l: f64, bit: u8) -> f64 {
        let subset = self.subset(bit);
        let mut max = f64::NEG_INFINITY;
        let mut terms = [0.0f64; 64];
        let mut spill = Vec::new();
        let mut count = 0usize;
        for seg in &self.piecewise.segments {
            let y = seg.invert(l);
            let tol = 1e-12 * y.abs().max(1.0);
            if !(y >= seg.lo - tol && y < seg.hi + tol) {
                continue;
            }
            let jac = -seg.slope.abs().ln();
            for x in subset {
                let t = self.log_offset + jac - self.rho * (y - x) * (y - x);
                max = max.max(t);
                if count < terms.len() {
                    terms[count] = t;
                } else {
                    spill.push(t);
                }
                count += 1;
            }
        }
        if count == 0 || max == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let head = &terms[..count.min(terms.len())];
        let sum: f64 = head.iter().chain(&spill).map(|t| (t - max).exp()).sum();
        max + sum.ln()
    }

    pub fn density(&self, l: f64, bit: u8) -> f64 {
        self.log_density(l, bit).exp()
    }

    /// `P(L ≤ l | B = b)`, from Gaussian interval probabilities.
    pub fn cdf(&self, l: f64, bit: u8) -> f64 {
        let sigma = (2.0 * self.rho).sqrt().recip();
        let weight = 1.0 / self.subset(bit).len() as f64;
        let mut total = 0.0;
        for seg in &self.piecewise.segments {
            let y = seg.invert(l);
            let (lo, hi) = if seg.slope > 0.0 {
                (seg.lo, seg.hi.min(y))
            } else {
                (seg.lo.max(y), seg.hi)
            };
            if hi <= lo {
                continue;
            }
            for x in self.subset(bit) {
                total += weight * std_normal_interval((lo - x) / sigma, (hi - x) / sigma);
            }
        }
        total.clamp(0.0, 1.0)
    }

    /// `g(l) = ln f_{L|B}(l|1) − ln f_{L|B}(l|0)`, the log-likelihood ratio of
    /// the max-log L-value itself.
    pub fn correction(&self, l: f64) -> Result<f64> {
        let one = self.log_density(l, 1);
        if one == f64::NEG_INFINITY {
            return Err(Error::OutsideSupport { l, bit: 1 });
        }
        let zero = self.log_density(l, 0);
        if zero == f64::NEG_INFINITY {
            return Err(Error::OutsideSupport { l, bit: 0 });
        }
        Ok(one - zero)
    }

    /// L-values where the density is discontinuous.
    pub fn kinks(&self) -> Vec<f64> {
        self.piecewise.kink_values()
    }

    /// Range of L-values produced by observations within `k` noise standard
    /// deviations of the outermost points.
    pub fn window(&self, k: f64) -> (f64, f64) {
        let sigma = (2.0 * self.rho).sqrt().recip();
        self.piecewise
            .range_on(self.points.0 - k * sigma, self.points.1 + k * sigma)
    }
}

/// Free-function form of [`ConditionalLValueDensity::density`].
pub fn maxlog_density(
    constellation: &Constellation,
    pattern: &Pattern,
    snr: Snr,
    bit: u8,
    l: f64,
) -> Result<f64> {
    Ok(BitDemapper::new(constellation, pattern, snr)?
        .maxlog_density()
        .density(l, bit))
}

/// Free-function form of [`ConditionalLValueDensity::correction`].
pub fn correction_g(
    constellation: &Constellation,
    pattern: &Pattern,
    snr: Snr,
    l: f64,
) -> Result<f64> {
    BitDemapper::new(constellation, pattern, snr)?
        .maxlog_density()
        .correction(l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{integrate_adaptive, AdaptiveOptions};
    use approx::assert_abs_diff_eq;

    fn pat(bits: &[u8]) -> Pattern {
        Pattern::new(bits.to_vec()).unwrap()
    }

    fn demapper(m: u32, bits: &[u8], rho: f64) -> BitDemapper {
        BitDemapper::new(
            &Constellation::equally_spaced(m).unwrap(),
            &pat(bits),
            Snr::linear(rho).unwrap(),
        )
        .unwrap()
    }

    fn grid(d: &BitDemapper) -> Vec<f64> {
        let pts = d.constellation().points();
        let margin = 5.0 / (2.0 * d.snr().rho()).sqrt();
        let (lo, hi) = (pts[0] - margin, pts[pts.len() - 1] + margin);
        (0..1001)
            .map(|i| lo + (hi - lo) * i as f64 / 1000.0)
            .collect()
    }

    #[test]
    fn snr_conversions() {
        assert_abs_diff_eq!(Snr::from_db(10.0).unwrap().rho(), 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(Snr::linear(2.0).unwrap().db(), 3.0103, epsilon = 1e-4);
        assert!(Snr::linear(0.0).is_err());
        assert!(Snr::linear(f64::NAN).is_err());
        assert!(Snr::from_db(f64::INFINITY).is_err());
    }

    #[test]
    fn exact_lvalue_examples() {
        for rho in [0.1, 1.0, 30.0] {
            assert_abs_diff_eq!(
                demapper(2, &[0, 0, 1, 1], rho).exact_lvalue(0.0),
                0.0,
                epsilon = 1e-12
            );
        }
        // S0 = {±3/√5}, S1 = {±1/√5}: log(2e^{-1/5} / 2e^{-9/5}) = 8/5
        assert_abs_diff_eq!(
            demapper(2, &[0, 1, 1, 0], 1.0).exact_lvalue(0.0),
            1.6,
            epsilon = 1e-14
        );
        for (rho, y) in [(0.5, 0.3), (3.0, -1.2), (100.0, 0.01)] {
            assert_abs_diff_eq!(
                demapper(1, &[0, 1], rho).exact_lvalue(y),
                4.0 * rho * y,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn exact_lvalue_survives_high_snr() {
        let d = demapper(3, &[0, 1, 1, 0, 0, 1, 1, 0], 1e4);
        for y in [-3.0, 0.0, 0.123, 2.5] {
            assert!(d.exact_lvalue(y).is_finite());
        }
    }

    #[test]
    fn exact_slope_matches_finite_difference() {
        let d = BitDemapper::new(
            &Constellation::normalize(&[-2.0, -1.0, 1.0, 4.0]).unwrap(),
            &pat(&[0, 1, 0, 1]),
            Snr::linear(2.0).unwrap(),
        )
        .unwrap();
        for y in [-1.5, -0.2, 0.4, 1.9] {
            let h = 1e-6;
            let fd = (d.exact_lvalue(y + h) - d.exact_lvalue(y - h)) / (2.0 * h);
            assert_abs_diff_eq!(
                d.exact_lvalue_slope(y),
                fd,
                epsilon = 1e-6 * fd.abs().max(1.0)
            );
        }
    }

    #[test]
    fn maxlog_lvalue_examples() {
        for rho in [0.3, 1.0, 7.0] {
            assert_abs_diff_eq!(
                demapper(2, &[0, 1, 1, 0], rho).maxlog_lvalue(0.0),
                1.6 * rho,
                epsilon = 1e-13
            );
            assert_eq!(demapper(2, &[0, 0, 1, 1], rho).maxlog_lvalue(0.0), 0.0);
            let d = demapper(1, &[0, 1], rho);
            for y in [-0.7, 0.0, 2.2] {
                assert_abs_diff_eq!(d.maxlog_lvalue(y), 4.0 * rho * y, epsilon = 1e-12);
                assert_abs_diff_eq!(d.maxlog_lvalue(y), d.exact_lvalue(y), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn piecewise_structure() {
        let s5 = 5f64.sqrt();
        let pl = demapper(2, &[0, 0, 1, 1], 1.0).piecewise();
        assert_eq!(pl.segments().len(), 3);
        assert_abs_diff_eq!(pl.breakpoints()[0], -2.0 / s5, epsilon = 1e-15);
        assert_abs_diff_eq!(pl.breakpoints()[1], 2.0 / s5, epsilon = 1e-15);
        assert!(pl.is_strictly_increasing());
        assert_eq!(pl.zero_crossings(), &[0.0]);

        let pl = demapper(2, &[0, 1, 1, 0], 1.0).piecewise();
        assert_eq!(pl.breakpoints(), &[0.0]);
        assert_eq!(pl.zero_crossings().len(), 2);
        assert_abs_diff_eq!(pl.zero_crossings()[0], -2.0 / s5, epsilon = 1e-15);
        assert_abs_diff_eq!(pl.zero_crossings()[1], 2.0 / s5, epsilon = 1e-15);

        let rho = 2.5;
        let pl = demapper(1, &[0, 1], rho).piecewise();
        assert_eq!(pl.segments().len(), 1);
        assert_abs_diff_eq!(pl.segments()[0].slope, 4.0 * rho, epsilon = 1e-14);
        assert_eq!(pl.zero_crossings(), &[0.0]);
    }

    #[test]
    fn piecewise_matches_maxlog_pointwise() {
        let asym = Constellation::normalize(&[-2.0, -1.0, 1.0, 4.0, 5.0, 6.5, 7.0, 9.0]).unwrap();
        let patterns = [
            pat(&[0, 0, 0, 0, 1, 1, 1, 1]),
            pat(&[0, 0, 1, 1, 1, 1, 0, 0]),
            pat(&[0, 1, 1, 0, 0, 1, 1, 0]),
            pat(&[0, 1, 0, 1, 0, 1, 0, 1]),
            pat(&[1, 0, 0, 1, 1, 0, 1, 0]),
        ];
        for c in [Constellation::equally_spaced(3).unwrap(), asym] {
            for p in &patterns {
                for rho in [0.1, 1.0, 40.0] {
                    let d = BitDemapper::new(&c, p, Snr::linear(rho).unwrap()).unwrap();
                    let pl = d.piecewise();
                    for y in grid(&d) {
                        let want = d.maxlog_lvalue(y);
                        assert!((pl.eval(y) - want).abs() <= 1e-12 * want.abs().max(1.0));
                    }
                    for w in pl.breakpoints().windows(1) {
                        let y = w[0];
                        let left = pl.segments()[pl.segment_index(y) - 1].eval(y);
                        let right = pl.segments()[pl.segment_index(y)].eval(y);
                        assert!((left - right).abs() <= 1e-12 * left.abs().max(1.0));
                    }
                    for &z in pl.zero_crossings() {
                        assert!(pl.eval(z).abs() <= 1e-12 * rho);
                    }
                    assert!(pl.segments().iter().all(|s| s.slope != 0.0));
                }
            }
        }
    }

    #[test]
    fn high_snr_convergence() {
        // |l_ex − l_ml| ≤ ln(M/2) for every y, so the normalized gap vanishes like 1/ρ.
        let p = pat(&[0, 1, 1, 0, 0, 1, 1, 0]);
        let c = Constellation::equally_spaced(3).unwrap();
        let sup_gap = |db: f64| {
            let d = BitDemapper::new(&c, &p, Snr::from_db(db).unwrap()).unwrap();
            let rho = d.snr().rho();
            grid(&d)
                .into_iter()
                .map(|y| (d.exact_lvalue(y) - d.maxlog_lvalue(y)).abs() / rho)
                .fold(0.0, f64::max)
        };
        let base = sup_gap(0.0);
        let high = sup_gap(40.0);
        assert!(high <= 4f64.ln() / 1e4 + 1e-15);
        assert!(high <= 1e-3 * base);
        assert!(sup_gap(20.0) > high);
    }

    fn lemma_symmetric(d: &BitDemapper, y0: f64, f: impl Fn(&BitDemapper, f64) -> f64) -> bool {
        grid(d).into_iter().all(|y| {
            let (a, b) = (f(d, y0 + y), f(d, y0 - y));
            (a - b).abs() <= 1e-9 * a.abs().max(1.0)
        })
    }

    #[test]
    fn symmetry_of_lvalues_requires_symmetric_constellation_and_pattern() {
        let sym = Constellation::normalize(&[0.0, 1.0, 2.0, 3.0]).unwrap();
        let y0 = sym.symmetry_center().center.unwrap();
        let asym = Constellation::normalize(&[-2.0, -1.0, 1.0, 4.0]).unwrap();
        let rho = Snr::linear(1.5).unwrap();
        let exact = |d: &BitDemapper, y: f64| d.exact_lvalue(y);
        let maxlog = |d: &BitDemapper, y: f64| d.maxlog_lvalue(y);

        let d = BitDemapper::new(&sym, &pat(&[0, 1, 1, 0]), rho).unwrap();
        assert!(lemma_symmetric(&d, y0, exact));
        assert!(lemma_symmetric(&d, y0, maxlog));

        for p in [pat(&[0, 0, 1, 1]), pat(&[0, 1, 0, 1])] {
            let d = BitDemapper::new(&sym, &p, rho).unwrap();
            assert!(!lemma_symmetric(&d, y0, exact));
            assert!(!lemma_symmetric(&d, y0, maxlog));
        }
        let d = BitDemapper::new(&asym, &pat(&[0, 1, 1, 0]), rho).unwrap();
        let mid = 0.5 * (asym.points()[0] + asym.points()[3]);
        assert!(!lemma_symmetric(&d, mid, exact));
        assert!(!lemma_symmetric(&d, mid, maxlog));
    }

    fn total_mass(dens: &ConditionalLValueDensity, bit: u8) -> f64 {
        let (lo, hi) = dens.window(9.0);
        let mut edges = vec![lo];
        let mut kinks: Vec<f64> = dens
            .kinks()
            .into_iter()
            .filter(|&k| k > lo && k < hi)
            .collect();
        kinks.sort_by(f64::total_cmp);
        edges.extend(kinks);
        edges.push(hi);
        integrate_adaptive(
            |l| [dens.density(l, bit)],
            &edges,
            AdaptiveOptions::default(),
        )
        .unwrap()
        .value[0]
    }

    #[test]
    fn density_normalizes() {
        let asym = Constellation::normalize(&[-2.0, -1.0, 1.0, 4.0]).unwrap();
        for c in [Constellation::equally_spaced(2).unwrap(), asym] {
            for p in [pat(&[0, 0, 1, 1]), pat(&[0, 1, 1, 0]), pat(&[0, 1, 0, 1])] {
                for rho in [0.1, 1.0, 10.0] {
                    let d = BitDemapper::new(&c, &p, Snr::linear(rho).unwrap()).unwrap();
                    let dens = d.maxlog_density();
                    for bit in [0, 1] {
                        assert_abs_diff_eq!(total_mass(&dens, bit), 1.0, epsilon = 1e-6);
                    }
                }
            }
        }
    }

    #[test]
    fn bpsk_density_is_gaussian() {
        // L = 4ρY with Y | B=1 ~ N(1, 1/(2ρ)): mean 4ρ, variance 8ρ
        let rho = 0.8;
        let dens = demapper(1, &[0, 1], rho).maxlog_density();
        let (mean, var) = (4.0 * rho, 8.0 * rho);
        for l in [-3.0, 0.0, 1.7, 3.2, 9.0] {
            let want = (-(l - mean) * (l - mean) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt();
            assert_abs_diff_eq!(dens.density(l, 1), want, epsilon = 1e-14);
            let want0 = (-(l + mean) * (l + mean) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt();
            assert_abs_diff_eq!(dens.density(l, 0), want0, epsilon = 1e-14);
        }
    }

    #[test]
    fn cdf_matches_integrated_density() {
        let d = demapper(2, &[0, 1, 1, 0], 1.0);
        let dens = d.maxlog_density();
        let (lo, _) = dens.window(9.0);
        for l in [-3.0, 0.0, 1.0, 1.5] {
            for bit in [0, 1] {
                let mut edges = vec![lo];
                edges.extend(dens.kinks().into_iter().filter(|&k| k > lo && k < l));
                edges.push(l);
                let mass = integrate_adaptive(
                    |v| [dens.density(v, bit)],
                    &edges,
                    AdaptiveOptions::default(),
                )
                .unwrap()
                .value[0];
                assert_abs_diff_eq!(dens.cdf(l, bit), mass, epsilon = 1e-9);
            }
        }
        // the p_II L-value never exceeds 8ρ/5
        assert_eq!(dens.cdf(1.6 + 1e-9, 0), 1.0);
        assert_eq!(dens.density(1.7, 0), 0.0);
        assert_abs_diff_eq!(dens.piecewise().support().1, 1.6, epsilon = 1e-14);
    }

    #[test]
    fn correction_for_bpsk_is_identity() {
        let dens = demapper(1, &[0, 1], 0.7).maxlog_density();
        for l in [-5.0, -0.1, 0.0, 2.0, 11.0] {
            assert_abs_diff_eq!(
                dens.correction(l).unwrap(),
                l,
                epsilon = 1e-9 * l.abs().max(1.0)
            );
        }
    }

    #[test]
    fn correction_recovers_exact_lvalue_for_lossless_patterns() {
        for p in [&[0u8, 0, 1, 1][..], &[0, 1, 1, 0]] {
            let d = demapper(2, p, 1.0);
            let dens = d.maxlog_density();
            for y in grid(&d) {
                let g = dens.correction(d.maxlog_lvalue(y)).unwrap();
                let ex = d.exact_lvalue(y);
                assert!(
                    (g - ex).abs() <= 1e-9 * ex.abs().max(1.0),
                    "y={y} g={g} ex={ex}"
                );
            }
        }
    }

    #[test]
    fn correction_cannot_recover_exact_lvalue_for_alternating_pattern() {
        let d = demapper(2, &[0, 1, 0, 1], 1.0);
        let dens = d.maxlog_density();
        let ys = grid(&d);
        // two observations with the same max-log but different exact L-values
        let pl = d.piecewise();
        let l = d.maxlog_lvalue(-0.2);
        let pre = pl.preimages(l);
        assert!(pre.len() >= 2);
        let exact: Vec<f64> = pre.iter().map(|&y| d.exact_lvalue(y)).collect();
        assert!(exact.windows(2).any(|w| (w[0] - w[1]).abs() > 1e-3));
        let worst = ys
            .iter()
            .map(|&y| (dens.correction(d.maxlog_lvalue(y)).unwrap() - d.exact_lvalue(y)).abs())
            .fold(0.0, f64::max);
        assert!(worst > 1e-3);
    }

    #[test]
    fn correction_outside_support_is_an_error() {
        let dens = demapper(2, &[0, 1, 1, 0], 1.0).maxlog_density();
        assert!(matches!(
            dens.correction(2.0),
            Err(Error::OutsideSupport { .. })
        ));
        let c = Constellation::equally_spaced(2).unwrap();
        assert!(correction_g(&c, &pat(&[0, 1, 1, 0]), Snr::linear(1.0).unwrap(), 2.0).is_err());
        assert!(correction_g(&c, &pat(&[0, 1, 1, 0]), Snr::linear(1.0).unwrap(), 0.5).is_ok());
    }

    #[test]
    fn mismatched_lengths_rejected() {
        let c = Constellation::equally_spaced(2).unwrap();
        assert!(BitDemapper::new(&c, &pat(&[0, 1]), Snr::linear(1.0).unwrap()).is_err());
    }
}
