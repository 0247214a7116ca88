use std::f64::consts::{FRAC_PI_2, PI, TAU};

use knlab_core::eigenfunctions::{
    highest_weight, highest_weight_constant, random_harmonic, sine_power_integral, sphere_eigenvalue, torus_wave, zonal,
};
use knlab_core::experiments::{fit_scaling, K_LADDER};
use knlab_core::functionals::{kn_maximal, lp_norm, KnSampler, QuadratureGrid};
use knlab_core::geometry::{ChartPoint, Surface};
use proptest::prelude::*;

fn north() -> ChartPoint {
    ChartPoint::polar(0.0, 0.0)
}

#[test]
fn zonal_degree_zero_is_constant() {
    let z = zonal(0, north()).unwrap();
    assert_eq!(z.lambda(), 0.0);
    let c = 1.0 / (4.0 * PI).sqrt();
    for (t, p) in [(0.3, 0.0), (1.5, 2.0), (3.0, -1.0)] {
        let v = z.evaluate(&ChartPoint::polar(t, p));
        assert!((v.re - c).abs() < 1e-14 && v.im.abs() < 1e-14);
    }
}

#[test]
fn zonal_pole_value() {
    let z = zonal(10, north()).unwrap();
    let v = z.evaluate(&ChartPoint::polar(1e-12, 0.0)).norm();
    assert!((v - (21.0 / (4.0 * PI)).sqrt()).abs() < 1e-10);
    assert!((z.lambda() - sphere_eigenvalue(10)).abs() < 1e-15);
}

#[test]
fn zonal_norm_on_a_finer_grid() {
    let z = zonal(25, ChartPoint::polar(1.1, 0.3)).unwrap();
    let grid = QuadratureGrid::sphere(z.surface(), 100, 200);
    let n = lp_norm(&z, &grid, 2.0).unwrap();
    assert!((n - 1.0).abs() < 1e-6, "{n}");
    assert!((z.l2_certificate() - 1.0).abs() < 1e-6);
}

#[test]
fn zonal_rotation_covariance() {
    let s = Surface::unit_sphere();
    let x0 = ChartPoint::polar(0.9, -0.6);
    let rotated = zonal(17, x0).unwrap();
    let polar = zonal(17, north()).unwrap();
    let c = s.embed(&x0);
    for (t, p) in [(0.2, 0.1), (1.3, 2.2), (2.7, -2.9), (0.95, -0.55)] {
        let y = ChartPoint::polar(t, p);
        let e = s.embed(&y);
        let angle = (c[0] * e[0] + c[1] * e[1] + c[2] * e[2]).clamp(-1.0, 1.0).acos();
        let want = polar.evaluate(&ChartPoint::polar(angle.max(1e-15), 0.0));
        assert!((rotated.evaluate(&y) - want).norm() < 1e-10);
    }
}

#[test]
fn highest_weight_peaks_on_the_equator() {
    for k in [1, 5, 32, 200] {
        let q = highest_weight(k).unwrap();
        let eq = q.evaluate(&ChartPoint::polar(FRAC_PI_2, 0.3)).norm();
        for i in 1..60 {
            let t = PI * i as f64 / 60.0;
            assert!(q.evaluate(&ChartPoint::polar(t, 0.3)).norm() <= eq * (1.0 + 1e-14));
        }
        assert!((q.lambda() - sphere_eigenvalue(k)).abs() < 1e-12);
    }
}

#[test]
fn highest_weight_constant_at_three() {
    // int_0^pi sin^7 = 2 * (6 * 4 * 2) / (7 * 5 * 3) = 32 / 35
    assert!((sine_power_integral(7) - 32.0 / 35.0).abs() < 1e-14);
    let c3 = highest_weight_constant(3);
    assert!((c3 * c3 * TAU * 32.0 / 35.0 - 1.0).abs() < 1e-13);
}

#[test]
fn highest_weight_l4_slope() {
    let pairs: Vec<(f64, f64)> = K_LADDER
        .iter()
        .map(|&k| {
            let q = highest_weight(k).unwrap();
            let grid = QuadratureGrid::for_field(&q, 1.0);
            (q.lambda(), lp_norm(&q, &grid, 4.0).unwrap())
        })
        .collect();
    let fit = fit_scaling(&pairs).unwrap();
    assert!((fit.slope - 0.125).abs() <= 0.03, "slope {}", fit.slope);
}

#[test]
fn highest_weight_orthogonal_to_zonal() {
    for k in [1, 6, 40] {
        let q = highest_weight(k).unwrap();
        let z = zonal(k, north()).unwrap();
        let grid = QuadratureGrid::for_field(&q, 1.0);
        let inner: num_complex::Complex64 = grid
            .nodes()
            .iter()
            .map(|(p, w)| q.evaluate(p) * z.evaluate(p).conj() * *w)
            .sum();
        assert!(inner.norm() <= 1e-6, "k = {k}: {inner}");
    }
}

#[test]
fn torus_wave_norms_do_not_depend_on_frequency() {
    let area = 4.0 * PI * PI;
    for m in [[1, 0], [3, 4], [7, -2]] {
        let e = torus_wave(m, [TAU, TAU]).unwrap();
        let grid = QuadratureGrid::for_field(&e, 1.0);
        for p in [2.0, 3.0, 4.0, 6.0] {
            let n = lp_norm(&e, &grid, p).unwrap();
            let want = area.powf(1.0 / p - 0.5);
            assert!((n - want).abs() < 1e-12 * want.max(1.0), "m {m:?} p {p}: {n} vs {want}");
        }
        let sup = lp_norm(&e, &grid, f64::INFINITY).unwrap();
        assert!((sup - area.powf(-0.5)).abs() < 1e-12);
    }
}

#[test]
fn random_harmonic_properties() {
    for seed in [1, 7, 99] {
        let f = random_harmonic(30, seed).unwrap();
        assert!((f.l2_certificate() - 1.0).abs() < 1e-6);
        let grid = QuadratureGrid::for_field(&f, 2.0);
        assert!((lp_norm(&f, &grid, 2.0).unwrap() - 1.0).abs() < 1e-6);
    }
    let f = random_harmonic(20, 7).unwrap();
    let r = f.laplace_residual(100, 7).unwrap();
    assert!(r <= 1e-4, "{r}");
    let again = random_harmonic(20, 7).unwrap();
    let p = ChartPoint::polar(1.0, 1.0);
    assert_eq!(f.evaluate(&p), again.evaluate(&p));
}

#[test]
fn laplace_residuals_of_every_family() {
    let fields = [
        zonal(12, ChartPoint::polar(0.4, 1.0)).unwrap(),
        highest_weight(24).unwrap(),
        torus_wave([5, 6], [TAU, TAU]).unwrap(),
    ];
    for f in &fields {
        let r = f.laplace_residual(100, 3).unwrap();
        assert!(r <= 1e-4, "{:?}: {r}", f.family());
    }
}

#[test]
fn norms_converge_under_grid_doubling() {
    for f in [highest_weight(128).unwrap(), random_harmonic(64, 2).unwrap()] {
        for p in [4.0, 6.0] {
            let a = lp_norm(&f, &QuadratureGrid::for_field(&f, 1.0), p).unwrap();
            let b = lp_norm(&f, &QuadratureGrid::for_field(&f, 2.0), p).unwrap();
            assert!((a - b).abs() <= 1e-3 * b, "{:?} p {p}: {a} vs {b}", f.family());
        }
    }
}

#[test]
fn random_kn_below_highest_weight() {
    let sampler = KnSampler::default();
    let q = highest_weight(64).unwrap();
    let top = kn_maximal(&q, q.lambda(), &sampler).unwrap().value;
    for seed in 1..=8 {
        let f = random_harmonic(64, seed).unwrap();
        let v = kn_maximal(&f, f.lambda(), &sampler).unwrap().value;
        assert!(v < top, "seed {seed}: {v} >= {top}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn zonal_bounded_by_pole_value(k in 0usize..80, t in 0.0f64..PI, p in -3.0f64..3.0) {
        let z = zonal(k, north()).unwrap();
        let bound = ((2 * k + 1) as f64 / (4.0 * PI)).sqrt();
        prop_assert!(z.evaluate(&ChartPoint::polar(t.max(1e-12), p)).norm() <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn highest_weight_modulus_is_longitude_free(k in 1usize..120, t in 0.01f64..3.13, p in -3.0f64..3.0) {
        let q = highest_weight(k).unwrap();
        let a = q.evaluate(&ChartPoint::polar(t, p)).norm();
        let b = q.evaluate(&ChartPoint::polar(t, 0.0)).norm();
        prop_assert!((a - b).abs() <= 1e-12 * b.max(1e-300));
    }
}
