//! Gaussian quadrature rules and an adaptive Gauss–Kronrod integrator.

use std::collections::BinaryHeap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numerics::special::std_normal_pdf;

/// Gauss–Hermite rule for `∫ e^{-x²} f(x) dx` over the real line.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    /// Nodes are found by Newton iteration on the orthonormal Hermite recurrence.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Hermite order must be positive");
        let n = order;
        let pim4 = PI.powf(-0.25);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let mut z = 0.0f64;
        for i in 0..n.div_ceil(2) {
            z = match i {
                0 => {
                    let t = (2 * n + 1) as f64;
                    t.sqrt() - 1.85575 * t.powf(-0.16667)
                }
                1 => z - 1.14 * (n as f64).powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0],
                3 => 1.91 * z - 0.91 * nodes[1],
                _ => 2.0 * z - nodes[i - 2],
            };
            let mut deriv = 0.0;
            for _ in 0..100 {
                let mut p1 = pim4;
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
                }
                deriv = (2.0 * n as f64).sqrt() * p2;
                let step = p1 / deriv;
                z -= step;
                if step.abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            weights[i] = 2.0 / (deriv * deriv);
            weights[n - 1 - i] = weights[i];
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `∫ e^{-x²} f(x) dx`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be positive");
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut deriv = 1.0;
            for _ in 0..100 {
                let mut p1 = 1.0;
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
                }
                deriv = n as f64 * (z * p1 - p2) / (z * z - 1.0);
                let step = p1 / deriv;
                z -= step;
                if step.abs() <= 1e-16 {
                    break;
                }
            }
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = 2.0 / ((1.0 - z * z) * deriv * deriv);
            weights[n - 1 - i] = weights[i];
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&t, &w)| (mid + half * t, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// Expectation nodes for `Y ~ N(mean, sigma²)`.
///
/// Smooth integrands use a plain Gauss–Hermite rule. When the integrand has
/// kinks or jumps, their locations are passed as `splits`; the window
/// `mean ± window·sigma` is then cut at every split inside it and each piece
/// gets a Gauss–Legendre rule against the Gaussian weight.
#[derive(Debug, Clone)]
pub struct GaussianRule {
    hermite: GaussHermite,
    legendre: GaussLegendre,
    window: f64,
}

/// Half-width of the truncation window in standard deviations; the
/// discarded mass is `2Φ(-12) ≈ 3.6e-33`.
pub const GAUSSIAN_WINDOW: f64 = 12.0;

impl GaussianRule {
    pub fn new(order: usize) -> Self {
        Self {
            hermite: GaussHermite::new(order),
            legendre: GaussLegendre::new(order),
            window: GAUSSIAN_WINDOW,
        }
    }

    pub fn order(&self) -> usize {
        self.hermite.order()
    }

    /// Appends `(y, weight)` pairs to `out`; the weights sum to ~1.
    pub fn push_nodes(&self, mean: f64, sigma: f64, splits: &[f64], out: &mut Vec<(f64, f64)>) {
        let lo = mean - self.window * sigma;
        let hi = mean + self.window * sigma;
        let mut cuts: Vec<f64> = splits
            .iter()
            .copied()
            .filter(|&s| s > lo && s < hi)
            .collect();
        if cuts.is_empty() {
            let scale = std::f64::consts::SQRT_2 * sigma;
            let norm = PI.sqrt().recip();
            out.extend(
                self.hermite
                    .nodes()
                    .iter()
                    .zip(self.hermite.weights())
                    .map(|(&x, &w)| (mean + scale * x, w * norm)),
            );
            return;
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * sigma);
        let mut edges = Vec::with_capacity(cuts.len() + 2);
        edges.push(lo);
        edges.extend(cuts);
        edges.push(hi);
        for w in edges.windows(2) {
            // integrate in standardized coordinates for a well-scaled weight
            let (ta, tb) = ((w[0] - mean) / sigma, (w[1] - mean) / sigma);
            out.extend(
                self.legendre
                    .mapped(ta, tb)
                    .map(|(t, wt)| (mean + sigma * t, wt * std_normal_pdf(t))),
            );
        }
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// The 15 Kronrod nodes and weights on `[a, b]`.
pub fn kronrod_nodes(a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (0..15).map(move |i| {
        let (k, sign) = if i < 8 { (i, -1.0) } else { (14 - i, 1.0) };
        (mid + sign * half * XGK[k], half * WGK[k])
    })
}

fn gk15<const N: usize>(f: &impl Fn(f64) -> [f64; N], a: f64, b: f64) -> ([f64; N], [f64; N]) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut kronrod = [0.0; N];
    let mut gauss = [0.0; N];
    let center = f(mid);
    for c in 0..N {
        kronrod[c] = WGK[7] * center[c];
        gauss[c] = WG[3] * center[c];
    }
    for k in 0..7 {
        let dx = half * XGK[k];
        let lo = f(mid - dx);
        let hi = f(mid + dx);
        for c in 0..N {
            let s = lo[c] + hi[c];
            kronrod[c] += WGK[k] * s;
            if k % 2 == 1 {
                gauss[c] += WG[k / 2] * s;
            }
        }
    }
    let mut err = [0.0; N];
    for c in 0..N {
        kronrod[c] *= half;
        gauss[c] *= half;
        err[c] = (kronrod[c] - gauss[c]).abs();
    }
    (kronrod, err)
}

#[derive(Debug, Clone)]
struct Piece<const N: usize> {
    a: f64,
    b: f64,
    value: [f64; N],
    error: [f64; N],
    score: f64,
}

impl<const N: usize> PartialEq for Piece<N> {
    fn eq(&self, other: &Self) -> bool {
        self.score == other.score
    }
}
impl<const N: usize> Eq for Piece<N> {}
impl<const N: usize> PartialOrd for Piece<N> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<const N: usize> Ord for Piece<N> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.score.total_cmp(&other.score)
    }
}

/// Outcome of [`integrate_adaptive`].
#[derive(Debug, Clone)]
pub struct AdaptiveResult<const N: usize> {
    pub value: [f64; N],
    pub error: [f64; N],
    /// Final partition, sorted by left endpoint.
    pub intervals: Vec<(f64, f64)>,
}

/// Tolerances for [`integrate_adaptive`].
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-11,
            rel_tol: 1e-10,
            max_intervals: 4000,
        }
    }
}

/// Globally adaptive Gauss–Kronrod (7/15) integration of a vector-valued
/// integrand over `[edges[0], edges[last]]`, starting from the pieces
/// delimited by `edges`. Every component must meet
/// `error <= abs_tol + rel_tol·|value|`.
pub fn integrate_adaptive<const N: usize>(
    f: impl Fn(f64) -> [f64; N],
    edges: &[f64],
    opts: AdaptiveOptions,
) -> Result<AdaptiveResult<N>> {
    if edges.len() < 2 {
        return Err(Error::Integration("need at least one interval".into()));
    }
    if edges.iter().any(|e| !e.is_finite()) {
        return Err(Error::Integration("interval edges must be finite".into()));
    }
    let score = |err: &[f64; N]| err.iter().copied().fold(0.0, f64::max);
    let mut heap = BinaryHeap::new();
    for w in edges.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let (value, error) = gk15(&f, w[0], w[1]);
        heap.push(Piece {
            a: w[0],
            b: w[1],
            value,
            error,
            score: score(&error),
        });
    }
    let totals = |heap: &BinaryHeap<Piece<N>>| {
        let mut v = [0.0; N];
        let mut e = [0.0; N];
        for p in heap.iter() {
            for c in 0..N {
                v[c] += p.value[c];
                e[c] += p.error[c];
            }
        }
        (v, e)
    };
    loop {
        let (value, error) = totals(&heap);
        let converged = (0..N).all(|c| error[c] <= opts.abs_tol + opts.rel_tol * value[c].abs());
        if converged {
            let mut intervals: Vec<(f64, f64)> = heap.iter().map(|p| (p.a, p.b)).collect();
            intervals.sort_by(|x, y| x.0.total_cmp(&y.0));
            return Ok(AdaptiveResult {
                value,
                error,
                intervals,
            });
        }
        if heap.len() >= opts.max_intervals {
            return Err(Error::Integration(format!(
                "no convergence after {} subintervals; value {value:?}, error estimate {error:?}",
                heap.len()
            )));
        }
        let worst = heap.pop().expect("nonempty partition");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::Integration(format!(
                "interval [{}, {}] cannot be split further; error estimate {error:?}",
                worst.a, worst.b
            )));
        }
        for (a, b) in [(worst.a, mid), (mid, worst.b)] {
            let (value, error) = gk15(&f, a, b);
            heap.push(Piece {
                a,
                b,
                value,
                error,
                score: score(&error),
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn hermite_moments() {
        for n in [8, 20, 64, 128] {
            let gh = GaussHermite::new(n);
            assert_abs_diff_eq!(gh.integrate(|_| 1.0), PI.sqrt(), epsilon = 1e-13);
            assert_abs_diff_eq!(gh.integrate(|x| x * x), PI.sqrt() / 2.0, epsilon = 1e-13);
            assert_abs_diff_eq!(
                gh.integrate(|x| x.powi(4)),
                3.0 * PI.sqrt() / 4.0,
                epsilon = 1e-12
            );
            assert_abs_diff_eq!(gh.integrate(|x| x.powi(3)), 0.0, epsilon = 1e-12);
        }
        let gh = GaussHermite::new(20);
        assert_abs_diff_eq!(
            gh.integrate(f64::cos),
            PI.sqrt() / 0.25f64.exp(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn hermite_nodes_sorted_and_distinct() {
        let gh = GaussHermite::new(64);
        assert!(gh.nodes().windows(2).all(|w| w[0] > w[1]));
        assert!(gh.weights().iter().all(|&w| w > 0.0));
    }

    #[test]
    fn legendre_polynomials_exact() {
        let gl = GaussLegendre::new(10);
        assert_abs_diff_eq!(
            gl.integrate(-1.0, 1.0, |x| x.powi(18)),
            2.0 / 19.0,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(gl.integrate(0.0, 2.0, |x| x.powi(3)), 4.0, epsilon = 1e-13);
        let gl = GaussLegendre::new(64);
        assert_abs_diff_eq!(gl.integrate(0.0, PI, f64::sin), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn gaussian_rule_moments_with_and_without_splits() {
        let rule = GaussianRule::new(32);
        for splits in [vec![], vec![0.3], vec![-1.0, 0.2, 0.25, 4.0, 100.0]] {
            let mut nodes = Vec::new();
            rule.push_nodes(0.5, 0.7, &splits, &mut nodes);
            let mass: f64 = nodes.iter().map(|(_, w)| w).sum();
            let mean: f64 = nodes.iter().map(|(y, w)| w * y).sum();
            let var: f64 = nodes.iter().map(|(y, w)| w * (y - 0.5).powi(2)).sum();
            assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-13);
            assert_abs_diff_eq!(mean, 0.5, epsilon = 1e-13);
            assert_abs_diff_eq!(var, 0.49, epsilon = 1e-13);
        }
    }

    #[test]
    fn gaussian_rule_handles_kinks() {
        // E|Y| for Y ~ N(0.2, 1) = sqrt(2/pi) e^{-0.02} + 0.2 (1 - 2Φ(-0.2))
        let mu: f64 = 0.2;
        let phi = crate::numerics::special::std_normal_cdf(-mu);
        let want = (2.0 / PI).sqrt() * (-mu * mu / 2.0).exp() + mu * (1.0 - 2.0 * phi);
        let rule = GaussianRule::new(32);
        let mut nodes = Vec::new();
        rule.push_nodes(mu, 1.0, &[0.0], &mut nodes);
        let got: f64 = nodes.iter().map(|(y, w)| w * y.abs()).sum();
        assert_abs_diff_eq!(got, want, epsilon = 1e-14);
    }

    #[test]
    fn adaptive_vector_integrand() {
        let res = integrate_adaptive(
            |x| [x.exp(), (-(x * x)).exp(), if x < 0.3 { 1.0 } else { 0.0 }],
            &[-8.0, 0.3, 2.0],
            AdaptiveOptions::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(res.value[0], 2f64.exp() - (-8f64).exp(), epsilon = 1e-10);
        assert_abs_diff_eq!(
            res.value[1],
            PI.sqrt() * 0.5 * (libm::erf(2.0) + 1.0),
            epsilon = 1e-10
        );
        assert_abs_diff_eq!(res.value[2], 8.3, epsilon = 1e-12);
        let total: f64 = res
            .intervals
            .iter()
            .flat_map(|&(a, b)| kronrod_nodes(a, b))
            .map(|(_, w)| w)
            .sum();
        assert_abs_diff_eq!(total, 10.0, epsilon = 1e-12);
    }

    #[test]
    fn adaptive_reports_failure() {
        let err = integrate_adaptive(
            |x| [1.0 / x.abs().sqrt().max(1e-300)],
            &[-1.0, 1.0],
            AdaptiveOptions {
                max_intervals: 20,
                ..AdaptiveOptions::default()
            },
        );
        assert!(matches!(err, Err(Error::Integration(_))));
    }
}
