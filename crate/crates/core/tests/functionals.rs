use std::f64::consts::{FRAC_PI_2, PI, TAU};

use knlab_core::eigenfunctions::{highest_weight, random_harmonic, torus_wave, zonal};
use knlab_core::experiments::checks::{equator_band_oracle, equator_tube_mass, tube_floor, tube_trend};
use knlab_core::experiments::{fit_scaling, K_LADDER};
use knlab_core::functionals::{
    kn_maximal, lp_norm, restrict_integral, restrict_integral_with, tube, tube_mass, tube_with_resolution, KnSampler,
    QuadratureGrid,
};
use knlab_core::geometry::{
    geodesic_distance, geodesic_segment, latitude, ChartPoint, GeodesicPath, Surface, TangentVector,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn equator_arc(length: f64) -> GeodesicPath {
    let s = Surface::unit_sphere();
    let p = ChartPoint::polar(FRAC_PI_2, 0.0);
    geodesic_segment(&s, &s.unit_direction(&p, FRAC_PI_2), length).unwrap()
}

/// Unit meridian arc with the north pole at its midpoint.
fn polar_arc() -> GeodesicPath {
    let s = Surface::unit_sphere();
    geodesic_segment(&s, &TangentVector::new(ChartPoint::polar(0.5, PI), [-1.0, 0.0]), 1.0).unwrap()
}

#[test]
fn grid_weights_sum_to_area() {
    let s = Surface::unit_sphere();
    let g = QuadratureGrid::sphere(&s, 20, 40);
    assert!((g.total_weight() - 4.0 * PI).abs() < 1e-4 * 4.0 * PI);
    let t = Surface::flat_torus([TAU, 3.0]).unwrap();
    let g = QuadratureGrid::torus(&t, 30, 17);
    assert!((g.total_weight() - TAU * 3.0).abs() < 1e-4 * TAU * 3.0);
}

#[test]
fn constant_field_l4() {
    let z = zonal(0, ChartPoint::polar(0.0, 0.0)).unwrap();
    let grid = QuadratureGrid::for_field(&z, 1.0);
    let n = lp_norm(&z, &grid, 4.0).unwrap();
    assert!((n - (4.0 * PI).powf(-0.25)).abs() < 1e-12);
    assert!(lp_norm(&z, &grid, 1.5).is_err());
}

#[test]
fn zonal_sup_norm() {
    let z = zonal(40, ChartPoint::polar(1.2, 0.7)).unwrap();
    let grid = QuadratureGrid::for_field(&z, 1.0);
    let sup = lp_norm(&z, &grid, f64::INFINITY).unwrap();
    assert!((sup - (81.0 / (4.0 * PI)).sqrt()).abs() < 1e-6, "{sup}");
}

#[test]
fn highest_weight_l6_slope() {
    let pairs: Vec<(f64, f64)> = K_LADDER
        .iter()
        .map(|&k| {
            let q = highest_weight(k).unwrap();
            (
                q.lambda(),
                lp_norm(&q, &QuadratureGrid::for_field(&q, 1.0), 6.0).unwrap(),
            )
        })
        .collect();
    let fit = fit_scaling(&pairs).unwrap();
    assert!((fit.slope - 1.0 / 6.0).abs() <= 0.03, "slope {}", fit.slope);
}

#[test]
fn torus_restriction_is_length_over_area() {
    let e = torus_wave([4, 5], [TAU, TAU]).unwrap();
    let t = e.surface().clone();
    for (x, y, a) in [(0.0, 0.0, 0.3), (2.0, 5.0, 2.2)] {
        let p = ChartPoint::plane(x, y);
        let g = geodesic_segment(&t, &t.unit_direction(&p, a), 1.0).unwrap();
        assert!((restrict_integral(&e, &g) - 1.0 / (4.0 * PI * PI)).abs() < 1e-12);
    }
    // Divided by sqrt(lambda) it decays along m = (n, n + 1).
    let p = ChartPoint::plane(0.0, 0.0);
    let g = geodesic_segment(&t, &t.unit_direction(&p, 0.3), 1.0).unwrap();
    let scaled: Vec<f64> = [4, 16, 64]
        .iter()
        .map(|&n| {
            let e = torus_wave([n, n + 1], [TAU, TAU]).unwrap();
            restrict_integral(&e, &g) / e.lambda().sqrt()
        })
        .collect();
    assert!(scaled.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn equator_restriction_slope() {
    let arc = equator_arc(1.0);
    let pairs: Vec<(f64, f64)> = K_LADDER
        .iter()
        .map(|&k| {
            let q = highest_weight(k).unwrap();
            (k as f64, restrict_integral(&q, &arc))
        })
        .collect();
    let fit = fit_scaling(&pairs).unwrap();
    assert!((fit.slope - 0.5).abs() <= 0.05, "slope {}", fit.slope);
}

#[test]
fn meridian_restriction_matches_oversampled_rule() {
    let z = zonal(30, ChartPoint::polar(0.0, 0.0)).unwrap();
    let arc = polar_arc();
    let a = restrict_integral(&z, &arc);
    let b = restrict_integral_with(&z, &arc, 10.0);
    assert!((a - b).abs() < 1e-6, "{a} vs {b}");
}

#[test]
fn tube_volumes() {
    let t = Surface::standard_torus();
    let g = geodesic_segment(&t, &TangentVector::new(ChartPoint::plane(1.0, 1.0), [0.6, 0.8]), 1.0).unwrap();
    assert!((tube(&g, 0.01).unwrap().volume() - 0.02).abs() < 1e-9);

    let band = tube(&equator_arc(TAU), 0.1).unwrap();
    assert!(
        (band.volume() - 4.0 * PI * 0.1f64.sin()).abs() < 1e-6,
        "{}",
        band.volume()
    );

    let v = tube(&equator_arc(1.0), 0.05).unwrap().volume();
    assert!((0.075..=0.125).contains(&v), "{v}");

    for (core, r) in [(equator_arc(1.0), 0.1), (polar_arc(), 0.08)] {
        let v = tube(&core, r).unwrap().volume();
        assert!((1.5 * r..=2.5 * r).contains(&v));
    }
}

#[test]
fn tube_nodes_lie_within_the_radius() {
    let s = Surface::unit_sphere();
    let core = polar_arc();
    let r = 0.09;
    let region = tube(&core, r).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let node = region.nodes()[rng.random_range(0..region.nodes().len())];
        let (on_core, _) = core.point_at(node.s);
        let d = geodesic_distance(&s, &on_core, &node.point).unwrap();
        assert!(d < r + 1e-6, "{d}");
        assert!((d - node.t.abs()).abs() < 1e-6);
    }
}

#[test]
fn whole_sphere_tube_holds_all_mass() {
    let full = equator_arc(TAU);
    for f in [
        highest_weight(12).unwrap(),
        random_harmonic(9, 4).unwrap(),
        zonal(7, ChartPoint::polar(0.3, 0.2)).unwrap(),
    ] {
        let region = tube_with_resolution(&full, FRAC_PI_2, f.lambda(), 1.0).unwrap();
        let m = tube_mass(&f, &region).unwrap();
        assert!((m - 1.0).abs() < 1e-4, "{:?}: {m}", f.family());
    }
}

#[test]
fn tube_mass_grows_with_radius() {
    let q = highest_weight(48).unwrap();
    let core = equator_arc(1.0);
    let mut last = 0.0;
    for r in [0.02, 0.05, 0.1, 0.2, 0.4] {
        let m = tube_mass(&q, &tube_with_resolution(&core, r, q.lambda(), 1.0).unwrap()).unwrap();
        assert!(m >= last, "r = {r}");
        last = m;
    }
}

#[test]
fn tube_mass_converges_under_doubling() {
    for (f, core) in [
        (highest_weight(256).unwrap(), equator_arc(1.0)),
        (random_harmonic(128, 3).unwrap(), polar_arc()),
    ] {
        let r = f.lambda().powf(-0.5);
        let a = tube_mass(&f, &tube_with_resolution(&core, r, f.lambda(), 1.0).unwrap()).unwrap();
        let b = tube_mass(&f, &tube_with_resolution(&core, r, f.lambda(), 2.0).unwrap()).unwrap();
        assert!((a - b).abs() <= 1e-3 * b, "{a} vs {b}");
    }
}

#[test]
fn equatorial_concentration_has_a_floor() {
    let rows = equator_tube_mass(&K_LADDER, 1.0).unwrap();
    let floor = tube_floor();
    for row in &rows {
        assert!(row.mass > floor, "k = {}: {}", row.k, row.mass);
        assert!((row.mass - equator_band_oracle(row.k)).abs() < 1e-8);
    }
    assert!(tube_trend(&rows).unwrap().abs() <= 0.05);
}

#[test]
fn zonal_tube_mass_decays() {
    let core = polar_arc();
    let pairs: Vec<(f64, f64)> = K_LADDER
        .iter()
        .map(|&k| {
            let z = zonal(k, ChartPoint::polar(0.0, 0.0)).unwrap();
            let r = z.lambda().powf(-0.5);
            let region = tube_with_resolution(&core, r, z.lambda(), 1.0).unwrap();
            (k as f64, tube_mass(&z, &region).unwrap())
        })
        .collect();
    let slope = fit_scaling(&pairs).unwrap().slope;
    // Away from the pole Z_k^2 averages to 1 / (pi^2 k sin d) and the pole
    // disc contributes a comparable amount, so the mass behaves like
    // k^{-1/2} (pi + log(k / 2)); its local slope at the ladder's
    // geometric midpoint is the oracle.
    let mid = 64.0f64;
    let oracle = -0.5 + 1.0 / (PI + (mid / 2.0).ln());
    assert!(slope <= -0.3, "slope {slope}");
    assert!((slope - oracle).abs() <= 0.05, "slope {slope} oracle {oracle}");
}

#[test]
fn torus_kn_is_exact() {
    let e = torus_wave([11, 12], [TAU, TAU]).unwrap();
    let l = e.lambda();
    let r = kn_maximal(&e, l, &KnSampler::default()).unwrap();
    let want = 2.0 * l.powf(-0.5) / (4.0 * PI * PI);
    assert!((r.value - want).abs() < 1e-9, "{} vs {want}", r.value);
}

#[test]
fn kn_maximizer_for_q100_follows_the_equator() {
    let q = highest_weight(100).unwrap();
    let l = q.lambda();
    let sampler = KnSampler::default();
    let found = kn_maximal(&q, l, &sampler).unwrap();
    let dense = kn_maximal(&q, l, &sampler.densified(2, l)).unwrap();
    for r in [&found, &dense] {
        let off = r
            .maximizer
            .samples()
            .iter()
            .map(|s| latitude(&Surface::unit_sphere().embed(&s.point)).abs())
            .fold(0.0, f64::max);
        assert!(off <= 0.02, "max latitude {off}");
    }
    assert!(
        found.value >= dense.value * (1.0 - 1e-3),
        "{} vs {}",
        found.value,
        dense.value
    );
    for m in &found.masses {
        assert!(*m <= found.value);
    }
}

#[test]
fn kn_values_bounded_by_total_mass() {
    let sampler = KnSampler::default();
    for f in [
        highest_weight(24).unwrap(),
        zonal(24, ChartPoint::polar(0.0, 0.0)).unwrap(),
        random_harmonic(24, 1).unwrap(),
    ] {
        let r = kn_maximal(&f, f.lambda(), &sampler).unwrap();
        assert!(r.value <= 1.0 + 1e-6);
        assert!(r.masses.iter().all(|&m| m <= r.value));
        // Cauchy-Schwarz through L4 on the maximizing tube.
        let l4 = lp_norm(&f, &QuadratureGrid::for_field(&f, 1.0), 4.0).unwrap();
        assert!(r.value.sqrt() <= r.volume.powf(0.25) * l4 * (1.0 + 1e-6));
    }
}
