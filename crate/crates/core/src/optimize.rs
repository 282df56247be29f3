//! One-dimensional maximization for unimodal objectives.

/// Inverse golden ratio.
const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub x: f64,
    pub value: f64,
}

/// Golden-section search for the max of a unimodal `f` on `[lo, hi]`,
/// stopped once the bracket is narrower than `width`. Endpoints are
/// candidates too, so monotone objectives are handled.
pub fn golden_section_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, width: f64) -> Maximum {
    assert!(lo <= hi, "empty bracket [{lo}, {hi}]");
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    // An absolute width below machine spacing can never be met.
    let width = width.max(4.0 * f64::EPSILON * lo.abs().max(hi.abs()));
    while b - a > width {
        if fc >= fd {
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
    let mut best = if fc >= fd { Maximum { x: c, value: fc } } else { Maximum { x: d, value: fd } };
    for x in [lo, hi] {
        let v = f(x);
        if v > best.value {
            best = Maximum { x, value: v };
        }
    }
    best
}

/// One parabolic step through `x - h, x, x + h`, kept only if it improves
/// the objective and stays inside `[lo, hi]`.
pub fn quadratic_polish(f: impl Fn(f64) -> f64, at: Maximum, h: f64, lo: f64, hi: f64) -> Maximum {
    let (x0, x2) = (at.x - h, at.x + h);
    if x0 < lo || x2 > hi {
        return at;
    }
    let (f0, f2) = (f(x0), f(x2));
    let curvature = f0 - 2.0 * at.value + f2;
    if !(curvature < 0.0) {
        return at;
    }
    let x = at.x + 0.5 * h * (f0 - f2) / curvature;
    if !(lo..=hi).contains(&x) {
        return at;
    }
    let v = f(x);
    if v > at.value { Maximum { x, value: v } } else { at }
}
