//! Geodesic distance and the Gauss-lemma check on the exponential map.

use super::geodesic::{exp_lifted, integrate, GeoState};
use super::surface::{
    angle_between, dot, normalized, scale, sub, ChartPoint, Surface, SurfaceDescriptor, TangentVector, Vec3,
};
use crate::error::{Error, Result};

/// Tolerance for integrations feeding finite differences.
const TIGHT_TOLERANCE: f64 = 1e-12;

/// Geodesic distance `d_g(x, y)`.
///
/// Closed forms on the round sphere (great-circle angle) and the torus
/// (minimum over lattice translates); two-point shooting on the perturbed
/// sphere, restricted to pairs closer than its validity radius.
pub fn geodesic_distance(surface: &Surface, x: &ChartPoint, y: &ChartPoint) -> Result<f64> {
    surface.check_chart(x)?;
    surface.check_chart(y)?;
    match surface.descriptor() {
        SurfaceDescriptor::RoundSphere { radius } => Ok(radius * angle_between(&surface.embed(x), &surface.embed(y))),
        SurfaceDescriptor::FlatTorus { periods } => {
            let mut d2 = 0.0;
            for ((&p, a), b) in periods.iter().zip(x.coords).zip(y.coords) {
                let mut d = (a - b).rem_euclid(p);
                if d > p / 2.0 {
                    d = p - d;
                }
                d2 += d * d;
            }
            Ok(d2.sqrt())
        }
        SurfaceDescriptor::PerturbedSphere { .. } => shooting_distance(surface, x, y),
    }
}

fn shooting_distance(surface: &Surface, x: &ChartPoint, y: &ChartPoint) -> Result<f64> {
    let limit = surface.validity_radius();
    let xs = surface.embed(x);
    let ys = surface.embed(y);
    let d0 = angle_between(&xs, &ys);
    if d0 >= limit {
        return Err(Error::OutOfRange { distance: d0, limit });
    }
    if d0 < 1e-14 {
        return Ok(0.0);
    }
    // Orthonormal frame at x (Euclidean; the metric is conformal).
    let [b0, b1] = surface.chart_basis(x);
    let (e0, e1) = (normalized(b0), normalized(b1));
    let w = sub(&ys, &scale(xs, dot(&xs, &ys)));
    let mut alpha = dot(&w, &e1).atan2(dot(&w, &e0));
    let mut len = d0;
    // Tangent frame at y for the residual.
    let [c0, c1] = surface.chart_basis(y);
    let (f0, f1) = (normalized(c0), normalized(c1));
    let endpoint = |alpha: f64, len: f64| -> Result<[f64; 2]> {
        let v = surface.unit_direction(x, alpha);
        let z = exp_lifted(surface, &v.scaled(len), TIGHT_TOLERANCE)?;
        let d = sub(&z, &ys);
        Ok([dot(&d, &f0), dot(&d, &f1)])
    };
    let mut residual = f64::INFINITY;
    for it in 0..40 {
        let r = endpoint(alpha, len)?;
        residual = r[0].hypot(r[1]);
        if residual < 1e-12 {
            return Ok(len);
        }
        let h = 1e-6;
        let ra_p = endpoint(alpha + h, len)?;
        let ra_m = endpoint(alpha - h, len)?;
        let rl_p = endpoint(alpha, len + h)?;
        let rl_m = endpoint(alpha, len - h)?;
        let ja = [(ra_p[0] - ra_m[0]) / (2.0 * h), (ra_p[1] - ra_m[1]) / (2.0 * h)];
        let jl = [(rl_p[0] - rl_m[0]) / (2.0 * h), (rl_p[1] - rl_m[1]) / (2.0 * h)];
        let det = ja[0] * jl[1] - jl[0] * ja[1];
        if det.abs() < 1e-300 {
            return Err(Error::Shooting {
                iterations: it,
                residual,
            });
        }
        let da = (r[0] * jl[1] - jl[0] * r[1]) / det;
        let dl = (ja[0] * r[1] - r[0] * ja[1]) / det;
        alpha -= da;
        len -= dl;
        if len >= limit {
            return Err(Error::OutOfRange { distance: len, limit });
        }
    }
    if residual < 1e-10 {
        return Ok(len);
    }
    Err(Error::Shooting {
        iterations: 40,
        residual,
    })
}

/// Endpoint of the integrated geodesic for the tangent vector `u` at `p`
/// (lifted, unwrapped on the torus).
fn shoot_endpoint(surface: &Surface, u: &TangentVector) -> Result<Vec3> {
    let len = surface.norm(u);
    let dir = u.scaled(1.0 / len);
    let normal = surface.rotate90(&dir);
    let st = integrate(surface, GeoState::new(surface, &dir, &normal), &[len], TIGHT_TOLERANCE)?;
    Ok(super::geodesic::lifted_position(surface, &st[0]))
}

fn differential(surface: &Surface, at: &TangentVector, dir: &TangentVector, h: f64) -> Result<Vec3> {
    let plus = TangentVector::new(
        at.base,
        [
            at.components[0] + h * dir.components[0],
            at.components[1] + h * dir.components[1],
        ],
    );
    let minus = TangentVector::new(
        at.base,
        [
            at.components[0] - h * dir.components[0],
            at.components[1] - h * dir.components[1],
        ],
    );
    let a = shoot_endpoint(surface, &plus)?;
    let b = shoot_endpoint(surface, &minus)?;
    Ok(scale(sub(&a, &b), 0.5 / h))
}

fn validate_gauss(surface: &Surface, v: &TangentVector, r: f64, step: f64) -> Result<()> {
    surface.check_chart(&v.base)?;
    surface.require_unit(v)?;
    let limit = surface.validity_radius();
    if !(r > 0.0 && r < limit) {
        return Err(Error::OutOfRange { distance: r, limit });
    }
    if !(step > 0.0 && step < 0.5) {
        return Err(Error::InvalidArgument(format!("differencing step {step}")));
    }
    Ok(())
}

fn gauss_terms(
    surface: &Surface,
    v: &TangentVector,
    r: f64,
    w: &TangentVector,
    step: f64,
    richardson: bool,
) -> Result<f64> {
    let rv = v.scaled(r);
    let d = |dir: &TangentVector| -> Result<Vec3> {
        let coarse = differential(surface, &rv, dir, step)?;
        if !richardson {
            return Ok(coarse);
        }
        let fine = differential(surface, &rv, dir, step / 2.0)?;
        Ok(scale(sub(&scale(fine, 4.0), &coarse), 1.0 / 3.0))
    };
    let radial = d(&rv)?;
    let transverse = d(w)?;
    let end = shoot_endpoint(surface, &rv)?;
    let lhs = surface.lifted_inner(&end, &radial, &transverse);
    let rhs = surface.inner(&rv, w);
    Ok((lhs - rhs).abs())
}

/// `|<D exp_p(rv)[rv], D exp_p(rv)[w]> - <rv, w>_p|` with the differential
/// taken by central differences of integrated geodesics (step `step` and
/// `step / 2`, Richardson-extrapolated).
pub fn gauss_lemma_residual(surface: &Surface, v: &TangentVector, r: f64, w: &TangentVector, step: f64) -> Result<f64> {
    validate_gauss(surface, v, r, step)?;
    gauss_terms(surface, v, r, w, step, true)
}

/// Same as [`gauss_lemma_residual`] with plain central differences; the
/// residual then decays like `step^2`.
pub fn gauss_lemma_residual_raw(
    surface: &Surface,
    v: &TangentVector,
    r: f64,
    w: &TangentVector,
    step: f64,
) -> Result<f64> {
    validate_gauss(surface, v, r, step)?;
    gauss_terms(surface, v, r, w, step, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn antipodal_and_lattice_cases() {
        let s = Surface::unit_sphere();
        let n = ChartPoint::polar(1e-9, 0.0);
        let so = ChartPoint::polar(PI - 1e-9, 0.0);
        assert!((geodesic_distance(&s, &n, &so).unwrap() - PI).abs() < 1e-8);
        let t = Surface::standard_torus();
        let d = geodesic_distance(&t, &ChartPoint::plane(0.0, 0.0), &ChartPoint::plane(TAU - 0.1, 0.0)).unwrap();
        assert!((d - 0.1).abs() < 1e-12);
    }

    #[test]
    fn perturbed_distance_is_symmetric_and_reduces_to_round_outside_bump() {
        let ps = Surface::perturbed_sphere(0.05, [PI / 2.0, 0.0], 0.6).unwrap();
        let a = ChartPoint::polar(1.3, -0.4);
        let b = ChartPoint::polar(1.8, 0.5);
        let dab = geodesic_distance(&ps, &a, &b).unwrap();
        let dba = geodesic_distance(&ps, &b, &a).unwrap();
        assert!((dab - dba).abs() < 1e-8, "{dab} {dba}");
        // Far from the bump the metric is round.
        let c = ChartPoint::polar(0.8, 2.5);
        let d = ChartPoint::polar(1.2, 3.0);
        let round = geodesic_distance(&Surface::unit_sphere(), &c, &d).unwrap();
        assert!((geodesic_distance(&ps, &c, &d).unwrap() - round).abs() < 1e-9);
        let far = ChartPoint::polar(2.9, 3.0);
        assert!(matches!(
            geodesic_distance(&ps, &a, &far),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn gauss_lemma_on_flat_torus_is_exact() {
        let t = Surface::standard_torus();
        let p = ChartPoint::plane(1.0, 2.0);
        let v = t.unit_direction(&p, 0.7);
        let w = TangentVector::new(p, [0.3, -1.2]);
        let r = gauss_lemma_residual(&t, &v, 0.9, &w, 1e-4).unwrap();
        assert!(r < 1e-10, "{r}");
    }

    #[test]
    fn gauss_lemma_on_sphere() {
        let s = Surface::unit_sphere();
        let p = ChartPoint::polar(1.0, 0.5);
        let v = s.unit_direction(&p, 0.4);
        let w = s.rotate90(&v);
        let r = gauss_lemma_residual(&s, &v, 0.5, &w, 1e-4).unwrap();
        assert!(r <= 1e-6, "{r}");
        assert!(gauss_lemma_residual(&s, &v, 4.0, &w, 1e-4).is_err());
    }
}
