//! Gauss–Legendre quadrature of the archimedean integral
//! `(1/pi) int Re psi(1 + it) f(t) dt` with the Fejér kernel.

use std::f64::consts::PI;

/// Nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// `Re psi(1 + it)` by shifting to `|z| > 20` and the asymptotic series.
pub fn re_digamma_1_it(t: f64) -> f64 {
    // psi(z) = psi(z + m) - sum_{k<m} 1/(z + k)
    let m = 20;
    let mut shift = 0.0;
    for k in 0..m {
        let re = 1.0 + k as f64;
        shift += re / (re * re + t * t);
    }
    let (x, y) = (1.0 + m as f64, t);
    let r2 = x * x + y * y;
    let ln_abs = 0.5 * r2.ln();
    // Re of 1/z^k via the polar form
    let arg = y.atan2(x);
    let re_inv = |k: i32| (-(k as f64) * arg).cos() / r2.powf(k as f64 / 2.0);
    let bern = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0, -691.0 / 2730.0, 7.0 / 6.0];
    let mut s = ln_abs - 0.5 * re_inv(1);
    for (j, b) in bern.iter().enumerate() {
        let k = 2 * (j as i32 + 1);
        s -= b / k as f64 * re_inv(k);
    }
    s - shift
}

/// `(2/pi) int_0^inf Re psi(1 + it) (sin(pi D t) / (pi D t))^2 dt`, integrated
/// between consecutive zeros of the kernel up to `T = 4000 / D`, with the
/// averaged tail `(ln T + 1) / (pi^3 D^2 T)`.
pub fn archimedean_quadrature(delta: f64) -> f64 {
    let gl = gauss_legendre(24);
    let f = |t: f64| {
        if t == 0.0 {
            1.0
        } else {
            let x = PI * delta * t;
            (x.sin() / x).powi(2)
        }
    };
    let pieces = 4000;
    let h = 1.0 / delta;
    let mut total = 0.0;
    for k in 0..pieces {
        let (a, b) = (k as f64 * h, (k + 1) as f64 * h);
        let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
        let mut s = 0.0;
        for &(x, w) in &gl {
            let t = mid + half * x;
            s += w * re_digamma_1_it(t) * f(t);
        }
        total += s * half;
    }
    let t_end = pieces as f64 * h;
    let tail = (t_end.ln() + 1.0) / (PI * PI * delta * delta * t_end);
    (2.0 / PI) * total + tail / PI
}
