//! Modified Bessel functions of the second kind, `K_0` and `K_1`, for `x > 0`.
//!
//! Evaluated from `K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt` with the
//! trapezoid rule, which converges geometrically for this doubly-exponentially
//! decaying integrand.

#[allow(unused_imports)]
use num_traits::Float;

const STEP: f64 = 1.0 / 64.0;

fn bessel_k(nu: f64, x: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NAN;
    }
    // integrand below exp(-740) relative to its start is irrelevant
    let t_max = (1.0 + 740.0 / x).acosh() + 1.0;
    let n = (t_max / STEP).ceil() as usize;
    let mut acc = 0.5 * (-x).exp();
    for k in 1..=n {
        let t = k as f64 * STEP;
        acc += (-x * t.cosh()).exp() * (nu * t).cosh();
    }
    acc * STEP
}

pub fn bessel_k0(x: f64) -> f64 {
    bessel_k(0.0, x)
}

pub fn bessel_k1(x: f64) -> f64 {
    bessel_k(1.0, x)
}
