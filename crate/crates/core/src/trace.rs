//! Trigonometric polynomials used as boundary data on circles.

use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

/// `a(theta) = c0 + sum_k (cos[k-1] cos k theta + sin[k-1] sin k theta)`.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct TrigSeries {
    pub c0: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub cos: Vec<f64>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub sin: Vec<f64>,
}

impl TrigSeries {
    pub fn constant(c0: f64) -> Self {
        Self {
            c0,
            ..Default::default()
        }
    }

    pub fn degree(&self) -> usize {
        self.cos.len().max(self.sin.len())
    }

    fn coeff(v: &[f64], k: usize) -> f64 {
        v.get(k - 1).copied().unwrap_or(0.0)
    }

    pub fn eval(&self, theta: f64) -> f64 {
        let mut acc = self.c0;
        for k in 1..=self.degree() {
            let (s, c) = (k as f64 * theta).sin_cos();
            acc += Self::coeff(&self.cos, k) * c + Self::coeff(&self.sin, k) * s;
        }
        acc
    }

    /// `d a / d theta`
    pub fn derivative(&self, theta: f64) -> f64 {
        let mut acc = 0.0;
        for k in 1..=self.degree() {
            let kf = k as f64;
            let (s, c) = (kf * theta).sin_cos();
            acc += kf * (Self::coeff(&self.sin, k) * c - Self::coeff(&self.cos, k) * s);
        }
        acc
    }

    /// Values at `n` equispaced angles starting at zero.
    pub fn sample(&self, n: usize) -> Vec<f64> {
        (0..n).map(|j| self.eval(2.0 * PI * j as f64 / n as f64)).collect()
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        Self {
            c0: lambda * self.c0,
            cos: self.cos.iter().map(|v| lambda * v).collect(),
            sin: self.sin.iter().map(|v| lambda * v).collect(),
        }
    }

    /// Value of the harmonic extension `sum (r/R)^k (...)` into the disk of
    /// radius `outer`.
    pub fn harmonic_extension(&self, r: f64, theta: f64, outer: f64) -> f64 {
        let q = r / outer;
        let mut acc = self.c0;
        let mut qk = 1.0;
        for k in 1..=self.degree() {
            qk *= q;
            let (s, c) = (k as f64 * theta).sin_cos();
            acc += qk * (Self::coeff(&self.cos, k) * c + Self::coeff(&self.sin, k) * s);
        }
        acc
    }

    /// `(min, max)` of the value and `max |a'|` over a fine uniform grid.
    pub fn extrema(&self, n: usize) -> (f64, f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut dmax: f64 = 0.0;
        for j in 0..n {
            let t = 2.0 * PI * j as f64 / n as f64;
            let v = self.eval(t);
            lo = lo.min(v);
            hi = hi.max(v);
            dmax = dmax.max(self.derivative(t).abs());
        }
        (lo, hi, dmax)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_and_derivative() {
        let a = TrigSeries {
            c0: 2.0,
            cos: alloc::vec![1.0],
            sin: alloc::vec![0.0, 0.5],
        };
        let t = 0.3;
        assert!((a.eval(t) - (2.0 + t.cos() + 0.5 * (2.0 * t).sin())).abs() < 1e-15);
        assert!((a.derivative(t) - (-t.sin() + (2.0 * t).cos())).abs() < 1e-15);
        assert!((a.harmonic_extension(0.5, t, 1.0) - (2.0 + 0.5 * t.cos() + 0.125 * (2.0 * t).sin())).abs() < 1e-15);
    }
}
