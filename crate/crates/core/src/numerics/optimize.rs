//! Golden-section search for convex scalar objectives.

/// Minimizer found by [`golden_section`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
    /// The minimizer sits on the edge of the bracket, so the true minimum
    /// may lie outside it.
    pub at_boundary: bool,
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Minimizes a unimodal `f` on `[lo, hi]` until the bracket width is below
/// `rel_tol·(|a| + |b|)`.
pub fn golden_section(f: impl Fn(f64) -> f64, lo: f64, hi: f64, rel_tol: f64) -> Minimum {
    assert!(lo < hi, "empty bracket [{lo}, {hi}]");
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..400 {
        if (b - a) <= rel_tol * (a.abs() + b.abs()) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let (mut x, mut value) = if fc <= fd { (c, fc) } else { (d, fd) };
    for edge in [lo, hi] {
        let fe = f(edge);
        if fe < value {
            x = edge;
            value = fe;
        }
    }
    let slack = 1e-6 * (hi - lo);
    Minimum {
        x,
        value,
        at_boundary: x - lo <= slack || hi - x <= slack,
    }
}
