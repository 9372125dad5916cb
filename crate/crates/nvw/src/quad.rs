//! Small quadrature helpers.
//!
//! The hut profile needs integrals of `f(w)/sqrt(sin w)` that are singular at
//! cell endpoints touching `w = 0` or `w = pi`; double-exponential quadrature
//! handles integrable endpoint singularities without special casing.

/// Tanh-sinh quadrature of `f` over `[a, b]`, refined until successive levels
/// agree to `tol` (absolute) or `max_level` is reached. Endpoints are never
/// evaluated.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let c = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let hpi = std::f64::consts::FRAC_PI_2;
    // abscissa offsets from the nearest endpoint avoid cancellation near it
    let node = |t: f64| -> Option<(f64, f64)> {
        let sh = hpi * t.sinh();
        let ch = t.cosh();
        let w = hpi * ch / (sh.cosh() * sh.cosh());
        let dist = half / (sh.exp() * sh.cosh()); // = half * (1 - tanh(sh))
        if dist <= 0.0 || !w.is_finite() {
            return None;
        }
        Some((dist, w))
    };
    let eval_pair = |t: f64| -> f64 {
        match node(t) {
            None => 0.0,
            Some((d, w)) => {
                let xr = b - d;
                let xl = a + d;
                let mut s = 0.0;
                if xr > a && xr < b {
                    s += f(xr);
                }
                if xl > a && xl < b {
                    s += f(xl);
                }
                w * s
            }
        }
    };
    let tmax = 6.5;
    let mut h = 1.0;
    let mut sum = hpi * f(c);
    let mut k = 1;
    while k as f64 * h <= tmax {
        sum += eval_pair(k as f64 * h);
        k += 1;
    }
    let mut est = sum * h * half;
    for _level in 0..12 {
        h *= 0.5;
        let mut k = 1;
        while k as f64 * h <= tmax {
            sum += eval_pair(k as f64 * h);
            k += 2;
        }
        let next = sum * h * half;
        if (next - est).abs() <= tol {
            return next;
        }
        est = next;
    }
    est
}

/// Composite Gauss-Legendre (5 points) of `f` over `[a, b]` in `n` panels.
pub fn gauss_legendre<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    const X: [f64; 5] = [
        0.0,
        -0.538_469_310_105_683_1,
        0.538_469_310_105_683_1,
        -0.906_179_845_938_664,
        0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    let n = n.max(1);
    let dx = (b - a) / n as f64;
    let mut total = 0.0;
    for p in 0..n {
        let c = a + (p as f64 + 0.5) * dx;
        let mut s = 0.0;
        for q in 0..5 {
            s += W[q] * f(c + 0.5 * dx * X[q]);
        }
        total += 0.5 * dx * s;
    }
    total
}
