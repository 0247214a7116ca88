use knlab_core::experiments::checks::{cs_check, kernel_decay};
use knlab_core::oscillatory::{
    bilinear_kernel, cs_determinant, gram_cutoff, gram_norm, gram_norm_unchecked, gram_quadratic_form,
    linearization_constant, partition_cutoffs, DegenerateProbe, EuclideanProbe, GramCheck, GramConfig, KernelSpec,
    PhaseProbe, SurfaceProbe,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Regression floor for `min |det|` on the 20 x 20 sphere probe grid.
const CS_FLOOR: f64 = 9.65;
/// Regression bound for `|psi(x, t) - psi(x, 0) - t psi_t(x, 0)| / t^2`.
const LINEARIZATION_BOUND: f64 = 1.62;

#[test]
fn degenerate_phase_has_zero_determinant() {
    let p = DegenerateProbe::default();
    for x in p.window().x_grid(5) {
        assert_eq!(cs_determinant(&p, x, 0.05).unwrap(), 0.0);
    }
}

#[test]
fn euclidean_determinant_matches_symbolic_form() {
    // phi = |x - (0, t)|, r^2 = x1^2 + (x2 - t)^2:
    //   phi_x1t = x1 (x2 - t) / r^3        phi_x2t = -x1^2 / r^3
    //   phi_x1tt = x1 (3 (x2 - t)^2 - r^2) / r^5
    //   phi_x2tt = -3 x1^2 (x2 - t) / r^5
    // so the determinant collapses to -x1^3 / r^6.
    let p = EuclideanProbe::default();
    for (x1, x2, t) in [(-0.5, 0.1, 0.0), (-0.25, -0.15, 0.1), (-0.55, 0.0, -0.2)] {
        let r2: f64 = x1 * x1 + (x2 - t) * (x2 - t);
        let exact = -x1 * x1 * x1 / r2.powi(3);
        let d = cs_determinant(&p, [x1, x2], t).unwrap();
        assert!((d - exact).abs() < 1e-5, "{d} vs {exact}");
    }
    let d = cs_determinant(&p, [-0.5, 0.1], 0.0).unwrap();
    assert!((d - 0.125 / 0.26f64.powi(3)).abs() < 1e-5);
}

#[test]
fn sphere_probe_determinant_floor_and_sign() {
    let r = cs_check(20).unwrap();
    assert!(r.min_abs >= CS_FLOOR, "{r:?}");
    assert_eq!(r.degenerate_max, 0.0);

    let probe = SurfaceProbe::unit_sphere();
    let w = probe.window();
    let mut signs = Vec::new();
    for t in [w.t[0], 0.0, w.t[1]] {
        for x in w.x_grid(6) {
            signs.push(cs_determinant(&probe, x, t).unwrap().signum());
        }
    }
    assert!(signs.iter().all(|&s| s == signs[0] && s != 0.0));
}

#[test]
fn sphere_probe_phase_properties() {
    let probe = SurfaceProbe::unit_sphere();
    let w = probe.window();
    for x in w.x_grid(4) {
        for t in [w.t[0], 0.0, w.t[1]] {
            let phi = probe.phase(x, t).unwrap();
            assert!(phi > 0.2 && phi < 0.5, "{phi}");
        }
    }
    let c = linearization_constant(&probe, 8).unwrap();
    assert!(c > 0.0 && c <= LINEARIZATION_BOUND, "{c}");
}

#[test]
fn kernel_on_the_diagonal() {
    let probe = SurfaceProbe::unit_sphere();
    let spec = KernelSpec::default();
    let v = [0.02, 0.1];
    let a = bilinear_kernel(&probe, &spec, 20.0, v, v).unwrap();
    let b = bilinear_kernel(&probe, &spec, 80.0, v, v).unwrap();
    assert!(a.re > 0.0 && a.im.abs() < 1e-14);
    assert!((a - b).norm() < 1e-12 * a.re);
    assert!(bilinear_kernel(&probe, &spec, 400.0, v, v).is_err());
}

#[test]
fn kernel_decays_off_the_diagonal() {
    let sweep = kernel_decay(100.0, &[[0.0, 1.0]]).unwrap();
    let s = sweep[0].slope;
    assert!(s <= -2.0 + 0.2, "slope {s}");
}

#[test]
fn gram_single_point() {
    let probe = SurfaceProbe::unit_sphere();
    for lambda in [100.0, 900.0] {
        let g = GramCheck::new(
            &probe,
            &GramConfig {
                lambda,
                count: 1,
                ..GramConfig::default()
            },
        )
        .unwrap();
        let n = gram_norm(&g).unwrap();
        let sup = gram_cutoff(lambda, 0.0);
        assert!(n > 0.0 && n <= 2.0 * sup * sup, "{n}");
    }
}

#[test]
fn gram_separated_points_are_uniform_in_lambda() {
    let probe = SurfaceProbe::unit_sphere();
    let norms: Vec<f64> = [400.0, 1600.0, 6400.0]
        .iter()
        .map(|&lambda| {
            let g = GramCheck::new(
                &probe,
                &GramConfig {
                    lambda,
                    count: 32,
                    ..GramConfig::default()
                },
            )
            .unwrap();
            assert!(g.hermitian_defect() <= 1e-12);
            gram_norm(&g).unwrap()
        })
        .collect();
    let (lo, hi) = norms
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &n| (a.min(n), b.max(n)));
    assert!(hi <= 2.0 * lo, "{norms:?}");
}

#[test]
fn gram_coincident_points_grow_linearly() {
    let probe = SurfaceProbe::unit_sphere();
    let one = gram_norm_unchecked(
        &GramCheck::from_normal_coordinates_unchecked(&probe, 400.0, &[[-0.3, 0.0]], 0.25).unwrap(),
    );
    for j in [4, 8, 16] {
        let g = GramCheck::from_normal_coordinates_unchecked(&probe, 400.0, &vec![[-0.3, 0.0]; j], 0.25).unwrap();
        // With J <= 10 no pair is ten apart and the condition holds vacuously.
        if j > 10 {
            assert!(!g.is_separated());
            assert!(gram_norm(&g).is_err());
        }
        let n = gram_norm_unchecked(&g);
        assert!((n / (j as f64 * one) - 1.0).abs() < 1e-9, "J = {j}: {n}");
    }
}

#[test]
fn gram_form_ignores_global_phase() {
    let probe = SurfaceProbe::unit_sphere();
    let g = GramCheck::new(
        &probe,
        &GramConfig {
            lambda: 400.0,
            count: 12,
            ..GramConfig::default()
        },
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let a: Vec<Complex64> = (0..12)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let turned: Vec<Complex64> = a.iter().map(|z| z * Complex64::from_polar(1.0, 0.7)).collect();
    let q = gram_quadratic_form(&probe, &g, &a).unwrap();
    let q2 = gram_quadratic_form(&probe, &g, &turned).unwrap();
    assert!((q - q2).abs() <= 1e-12 * q);
    let mass: f64 = a.iter().map(|z| z.norm_sqr()).sum();
    assert!(q <= gram_norm(&g).unwrap() * mass * (1.0 + 1e-9));
}

#[test]
fn partition_of_unity() {
    let lambda = 250.0f64;
    let big_j = 12i64;
    let cutoffs: Vec<_> = (-big_j..=big_j)
        .map(|j| partition_cutoffs(lambda, j).unwrap())
        .collect();
    let reach = (big_j - 1) as f64 / lambda.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let t = rng.random_range(-reach..reach);
        let values: Vec<f64> = cutoffs.iter().map(|c| c.eval(t)).collect();
        let sum: f64 = values.iter().sum();
        assert!((sum - 1.0).abs() <= 1e-12, "t = {t}: {sum}");
        assert!(values.iter().filter(|&&v| v != 0.0).count() <= 2);
    }
    for c in &cutoffs {
        let [lo, hi] = c.support();
        let s = lambda.sqrt();
        assert!((lo - (c.j as f64 - 1.0) / s).abs() < 1e-15 && (hi - (c.j as f64 + 1.0) / s).abs() < 1e-15);
        for i in 0..50 {
            let t = lo - 0.5 + (hi - lo + 1.0) * i as f64 / 49.0;
            if t <= lo || t >= hi {
                assert_eq!(c.eval(t), 0.0);
            }
        }
    }
    assert!(partition_cutoffs(0.5, 0).is_err());
}
