//! Independent reference values for Rayleigh-fading expectations.
//!
//! `E1` is evaluated by its power series below 1 and by a continued
//! fraction above; the expectation itself is also integrated numerically
//! with adaptive Simpson quadrature so the two can be checked against each
//! other.

#![allow(dead_code)]

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Exponential integral `E1(x)` for `x > 0`.
pub fn exp_int_e1(x: f64) -> f64 {
    assert!(x > 0.0);
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            term *= -x / k as f64;
            let add = term / k as f64;
            sum += add;
            if add.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        -EULER_GAMMA - x.ln() - sum
    } else {
        // modified Lentz on the continued fraction e^-x / (x + 1 - 1/(x + 3 - 4/(x + 5 - ...)))
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let a = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (a * d + b);
            c = b + a / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// `1/2 E[log2(1 + 2 snr X)]`, `X ~ Exp(1)`, in closed form.
pub fn achievable_closed_form(snr: f64) -> f64 {
    if snr == 0.0 {
        return 0.0;
    }
    let a = 1.0 / (2.0 * snr);
    // For large a, e^a E1(a) is formed inside the continued fraction to avoid overflow.
    0.5 * (a.exp() * exp_int_e1(a)) / std::f64::consts::LN_2
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return left + right + diff / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson integral of `f` over `[a, b]`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// The same expectation by quadrature of the exponential density.
pub fn achievable_quadrature(snr: f64) -> f64 {
    let f = |x: f64| (-x).exp() * (2.0 * snr * x).ln_1p() / std::f64::consts::LN_2;
    // the tail beyond 60 contributes below 1e-24
    let pieces = [0.0, 0.01, 0.1, 1.0, 5.0, 20.0, 60.0];
    0.5 * pieces.windows(2).map(|w| integrate(&f, w[0], w[1], 1e-13)).sum::<f64>()
}
