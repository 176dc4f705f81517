//! Independent reference computations: power series for the modified Bessel
//! functions and Gauss-Legendre quadrature of the weighted energy terms for
//! closed-form fields.

use std::f64::consts::PI;

use carleman_core::carleman::{elliptic_sides, parabolic_sides};
use carleman_core::geometry::{build_annulus, BoundaryId, BoundaryRole, BoundaryTags, GridField};
use carleman_core::special::{bessel_k0, bessel_k1};
use carleman_core::weights::{build_parabolic_weight, build_radial_weight, EllipticWeight, ExponentShift};
use carleman_core::{MetricField, PotentialField};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `K0(x) = -(ln(x/2) + gamma) I0(x) + sum_k H_k (x^2/4)^k / (k!)^2`
fn k0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let (mut term, mut i0, mut tail, mut h) = (1.0, 1.0, 0.0, 0.0);
    for k in 1..200 {
        let kf = k as f64;
        term *= q / (kf * kf);
        h += 1.0 / kf;
        i0 += term;
        tail += h * term;
        if term < 1e-18 * i0 {
            break;
        }
    }
    -((0.5 * x).ln() + EULER_GAMMA) * i0 + tail
}

/// `K1(x) = 1/x + ln(x/2) I1(x) - (x/4) sum_k (psi(k+1) + psi(k+2)) (x^2/4)^k / (k! (k+1)!)`
fn k1_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let (mut term, mut i1, mut tail) = (1.0, 0.0, 0.0);
    let (mut hk, mut hk1) = (0.0, 1.0);
    for k in 0..200 {
        let kf = k as f64;
        if k > 0 {
            term *= q / (kf * (kf + 1.0));
            hk += 1.0 / kf;
            hk1 += 1.0 / (kf + 1.0);
        }
        i1 += term;
        tail += (hk + hk1 - 2.0 * EULER_GAMMA) * term;
        if k > 2 && term < 1e-18 * i1 {
            break;
        }
    }
    1.0 / x + (0.5 * x).ln() * 0.5 * x * i1 - 0.25 * x * tail
}

#[test]
fn bessel_matches_series() {
    for &x in &[0.05, 0.3, 1.0, 1.5, 2.0, 3.0] {
        let (a, b) = (bessel_k0(x), k0_series(x));
        assert!((a - b).abs() <= 1e-12 * b, "K0({x}): {a} vs {b}");
        let (a, b) = (bessel_k1(x), k1_series(x));
        assert!((a - b).abs() <= 1e-12 * b, "K1({x}): {a} vs {b}");
    }
    // the series cancels against I0 ~ e^x here
    let (a, b) = (bessel_k0(6.0), k0_series(6.0));
    assert!((a - b).abs() <= 1e-8 * b);
}

#[test]
fn bessel_reference_digits() {
    assert!((bessel_k0(1.0) - 0.421_024_438_240_708_3).abs() < 1e-15);
    assert!((bessel_k0(2.0) - 0.113_893_872_749_533_4).abs() < 1e-15);
    assert!((bessel_k1(2.0) - 0.139_865_881_816_522_4).abs() < 1e-15);
    assert!((k0_series(2.0) / k0_series(1.0) - 0.270_516).abs() < 1e-6);
}

/// Composite 5-point Gauss-Legendre rule on `[a, b]` with `panels` panels.
fn gauss(a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
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
    let h = (b - a) / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for q in 0..5 {
            acc += W[q] * f(mid + 0.5 * h * X[q]);
        }
    }
    0.5 * h * acc
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs()
}

#[test]
fn log_r_sides_match_radial_quadrature() {
    let (gamma, s) = (3.0, 20.0);
    let n_r = 4096;
    let d = build_annulus(1.0, 2.0, n_r, 16, BoundaryTags::annulus(BoundaryRole::S, BoundaryRole::Gamma)).unwrap();
    let w = EllipticWeight::radial(&d, BoundaryId::Inner, gamma, s).unwrap();
    let g = MetricField::euclidean(&d);
    let u = GridField::from_polar(&d, |r, _| r.ln());
    let shift = 2.0 * s * gamma.exp();
    let sd = elliptic_sides(&w, &g, &PotentialField::zero(&d), &u, ExponentShift::Fixed(shift)).unwrap();

    // phi = r - 1, varphi = e^{gamma phi}, sigma = s gamma varphi
    let weight = |r: f64| {
        let vp = (gamma * (r - 1.0)).exp();
        ((2.0 * s * vp - shift).exp(), s * gamma * vp)
    };
    let li = 2.0 * PI
        * gauss(1.0, 2.0, 4 * n_r, |r| {
            let (e, sg) = weight(r);
            e * gamma * sg * (1.0 / (r * r) + sg * sg * r.ln().powi(2)) * r
        });
    let (e1, s1) = weight(1.0);
    let lu = 2.0 * PI * e1 * s1;
    let (e2, s2) = weight(2.0);
    let rpi = 2.0 * PI * 2.0 * e2 * s2 * (0.25 + s2 * s2 * 2f64.ln().powi(2));

    assert!(close(sd.lhs_interior, li, 1e-2), "{} vs {li}", sd.lhs_interior);
    assert!(close(sd.lhs_upsilon, lu, 1e-2), "{} vs {lu}", sd.lhs_upsilon);
    assert!(close(sd.rhs_pi, rpi, 1e-2), "{} vs {rpi}", sd.rhs_pi);
    assert!(sd.rhs_tau.abs() < 1e-12 * rpi);
    assert!(sd.rhs_pde < 1e-3 * rpi);
    let ratio = sd.ratio().unwrap();
    assert!(ratio.is_finite());
    assert!(close(ratio, (li + lu) / rpi, 1e-2));
}

#[test]
fn parabolic_sides_match_space_time_quadrature() {
    let (gamma, s, t_final) = (2.0, 10.0, 1.0);
    let (n_r, n_t) = (256, 128);
    let d = build_annulus(0.5, 1.0, n_r, 128, BoundaryTags::annulus(BoundaryRole::Gamma, BoundaryRole::S)).unwrap();
    let phi = build_radial_weight(&d, BoundaryId::Outer).unwrap();
    let w = build_parabolic_weight(&phi, t_final, n_t, gamma, s).unwrap();
    let g = MetricField::euclidean(&d);
    // u = e^{-t} r cos(theta)
    let slice = |_, t: f64| {
        let u = GridField::from_polar(&d, |r, th| (-t).exp() * r * th.cos());
        let ut = u.scaled(-1.0);
        Ok((u, ut))
    };
    let e2m = (2.0 * gamma * 0.5).exp();
    let shift = 2.0 * s * ((gamma * 0.5).exp() - e2m) * 4.0 / (t_final * t_final);
    let sd = parabolic_sides(&w, BoundaryId::Outer, &g, slice, ExponentShift::Fixed(shift)).unwrap();

    // phi = 1 - r, varphi = (e^{gamma phi} - e^{2 gamma m}) l(t), xi = e^{gamma phi} l(t)
    let at = |t: f64, r: f64| {
        let l = 1.0 / (t * (t_final - t));
        let ep = (gamma * (1.0 - r)).exp();
        ((2.0 * s * (ep - e2m) * l - shift).exp(), s * gamma * ep * l)
    };
    let panels = 4 * n_t;
    let li = gauss(0.0, t_final, panels, |t| {
        let d2 = (-2.0 * t).exp();
        gauss(0.5, 1.0, 4 * n_r, |r| {
            let (e, sg) = at(t, r);
            e * gamma * sg * d2 * (2.0 * PI + sg * sg * r * r * PI) * r
        })
    });
    let rp = gauss(0.0, t_final, panels, |t| {
        let d2 = (-2.0 * t).exp();
        gauss(0.5, 1.0, 4 * n_r, |r| at(t, r).0 * d2 * r * r * PI * r)
    });
    let lu = gauss(0.0, t_final, panels, |t| {
        let (e, sg) = at(t, 1.0);
        e * sg * (-2.0 * t).exp() * PI * (1.0 + sg * sg)
    });
    let rt = gauss(0.0, t_final, panels, |t| {
        let (e, sg) = at(t, 1.0);
        e * (-2.0 * t).exp() * PI * (1.0 / sg + sg)
    });
    let rpi = gauss(0.0, t_final, panels, |t| {
        let (e, sg) = at(t, 0.5);
        let r = 0.5;
        e * (-2.0 * t).exp() * (PI * r * r / sg + 2.0 * PI * sg + PI * r * r * sg.powi(3)) * r
    });
    for (name, got, want) in [
        ("lhs_interior", sd.lhs_interior, li),
        ("lhs_upsilon", sd.lhs_upsilon, lu),
        ("rhs_pde", sd.rhs_pde, rp),
        ("rhs_pi", sd.rhs_pi, rpi),
        ("rhs_tau", sd.rhs_tau, rt),
    ] {
        assert!(close(got, want, 1e-2), "{name}: {got} vs {want}");
    }
}
