//! Fermi normal coordinates about a geodesic segment.

use std::f64::consts::PI;

use super::distance::geodesic_distance;
use super::geodesic::{closed_form_exp, sweep, GeodesicPath};
use super::surface::{add, scale, ChartPoint, Surface, SurfaceDescriptor, TangentVector, Vec3};
use crate::error::{Error, Result};

/// Integrator tolerance used for Fermi maps on surfaces without closed forms.
const FERMI_TOLERANCE: f64 = 1e-12;

/// Coordinates `(s, t) -> exp_{gamma(s)}(t nu(s))` about a geodesic segment,
/// where `nu` is the parallel unit normal. In these coordinates the metric is
/// `g11(s, t) ds^2 + dt^2` and `g11 = J^2` for the normal Jacobi field `J`.
#[derive(Debug, Clone)]
pub struct FermiChart {
    surface: Surface,
    origin: TangentVector,
    length: f64,
    half_width: f64,
    focal_distance: f64,
}

/// Worst-case deviations of a Fermi chart from its defining properties.
#[derive(Debug, Clone, Copy, Default)]
pub struct FermiDiagnostics {
    /// max |g12| over the sampled grid.
    pub max_cross_term: f64,
    /// max |g11(s, 0) - 1|.
    pub max_core_deviation: f64,
    /// max |d/dt g11(s, 0)|.
    pub max_core_derivative: f64,
    /// max |g11 from differences - J^2| over the grid.
    pub max_jacobi_mismatch: f64,
    /// max |d((s1,0),(s2,0)) - |s1 - s2|| over sampled pairs.
    pub max_core_distance_error: f64,
}

/// Builds Fermi coordinates of half-width `half_width` about `gamma0`.
pub fn build_fermi_chart(surface: &Surface, gamma0: &GeodesicPath, half_width: f64) -> Result<FermiChart> {
    if !(half_width.is_finite() && half_width > 0.0) {
        return Err(Error::InvalidArgument(format!("half-width {half_width}")));
    }
    let start = gamma0.start();
    let origin = surface.normalize_tangent(&start.tangent);
    let length = gamma0.total_length();
    let focal = focal_distance(surface, &origin, length)?;
    if half_width > focal {
        return Err(Error::FocalPoint { half_width, focal });
    }
    Ok(FermiChart {
        surface: surface.clone(),
        origin,
        length,
        half_width,
        focal_distance: focal,
    })
}

/// Distance along the normal geodesics to the first zero of the normal
/// Jacobi field (the first focal point of the core).
fn focal_distance(surface: &Surface, origin: &TangentVector, length: f64) -> Result<f64> {
    match surface.descriptor() {
        SurfaceDescriptor::RoundSphere { radius } => Ok(PI * radius / 2.0),
        SurfaceDescriptor::FlatTorus { .. } => Ok(f64::INFINITY),
        SurfaceDescriptor::PerturbedSphere { .. } => {
            let limit = surface.validity_radius();
            let step = 0.01;
            let n = (limit / step).round() as usize;
            let ts: Vec<f64> = (1..=n).map(|i| i as f64 * step).collect();
            let mut focal = limit;
            for i in 0..=16 {
                let s = length * i as f64 / 16.0;
                let (p, tan, _) = sweep(surface, origin, &[s], FERMI_TOLERANCE)?[0];
                let nu = surface.rotate90(&TangentVector::new(p, tan.components));
                for sign in [1.0, -1.0] {
                    let signed: Vec<f64> = ts.iter().map(|t| sign * t).collect();
                    let col = sweep(surface, &nu, &signed, 1e-9)?;
                    let mut prev = (0.0, 1.0);
                    for (k, (_, _, j)) in col.iter().enumerate() {
                        if *j <= 0.0 {
                            let t0 = prev.0 + (ts[k] - prev.0) * prev.1 / (prev.1 - j);
                            focal = focal.min(t0);
                            break;
                        }
                        prev = (ts[k], *j);
                    }
                }
            }
            Ok(focal)
        }
    }
}

impl FermiChart {
    pub fn surface(&self) -> &Surface {
        &self.surface
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn focal_distance(&self) -> f64 {
        self.focal_distance
    }

    /// Core point and unit tangent at arc length `s`.
    pub fn core(&self, s: f64) -> Result<(ChartPoint, TangentVector)> {
        let (p, t, _) = sweep(&self.surface, &self.origin, &[s], FERMI_TOLERANCE)?[0];
        Ok((p, TangentVector::new(p, t.components)))
    }

    /// Parallel unit normal at arc length `s`.
    pub fn normal(&self, s: f64) -> Result<TangentVector> {
        let (_, t) = self.core(s)?;
        Ok(self.surface.rotate90(&t))
    }

    /// Points and `sqrt(g11)` values on the column `s = const` at the given `t`s.
    pub fn column(&self, s: f64, ts: &[f64]) -> Result<Vec<(ChartPoint, f64)>> {
        let nu = self.normal(s)?;
        Ok(sweep(&self.surface, &nu, ts, FERMI_TOLERANCE)?
            .into_iter()
            .map(|(p, _, j)| (p, j))
            .collect())
    }

    pub fn map(&self, s: f64, t: f64) -> Result<ChartPoint> {
        Ok(self.column(s, &[t])?[0].0)
    }

    /// `g11(s, t)` from the normal Jacobi field.
    pub fn g11(&self, s: f64, t: f64) -> Result<f64> {
        let j = self.column(s, &[t])?[0].1;
        Ok(j * j)
    }

    /// Lifted image of `(s, t)`; unwrapped on the torus.
    fn lifted(&self, s: f64, t: f64) -> Result<Vec3> {
        if self.surface.periods().is_some() {
            let base = self.surface.embed(&self.origin.base);
            let d = self.surface.lift_tangent(&self.origin);
            let n = self.surface.lift_tangent(&self.surface.rotate90(&self.origin));
            return Ok(add(&add(&base, &scale(d, s)), &scale(n, t)));
        }
        Ok(self.surface.embed(&self.map(s, t)?))
    }

    /// Pulled-back metric `[[g11, g12], [g12, g22]]` at `(s, t)` by central
    /// differences of the map with one Richardson step.
    pub fn pulled_back_metric(&self, s: f64, t: f64) -> Result<[[f64; 2]; 2]> {
        let h = 1e-3;
        let deriv = |ds: f64, dt: f64, h: f64| -> Result<Vec3> {
            let a = self.lifted(s + ds * h, t + dt * h)?;
            let b = self.lifted(s - ds * h, t - dt * h)?;
            Ok(scale(super::surface::sub(&a, &b), 0.5 / h))
        };
        let rich = |ds: f64, dt: f64| -> Result<Vec3> {
            let coarse = deriv(ds, dt, h)?;
            let fine = deriv(ds, dt, h / 2.0)?;
            Ok(scale(super::surface::sub(&scale(fine, 4.0), &coarse), 1.0 / 3.0))
        };
        let fs = rich(1.0, 0.0)?;
        let ft = rich(0.0, 1.0)?;
        let x = self.lifted(s, t)?;
        let g11 = self.surface.lifted_inner(&x, &fs, &fs);
        let g12 = self.surface.lifted_inner(&x, &fs, &ft);
        let g22 = self.surface.lifted_inner(&x, &ft, &ft);
        Ok([[g11, g12], [g12, g22]])
    }

    /// Checks the Fermi-chart properties on an `n x n` grid of `(s, t)`.
    pub fn diagnostics(&self, n: usize) -> Result<FermiDiagnostics> {
        let mut d = FermiDiagnostics::default();
        let n = n.max(2);
        // Keep the differencing stencil inside the chart.
        let margin: f64 = 2e-3;
        let s_lo = margin.min(self.length / 4.0);
        let s_hi = self.length - s_lo;
        let t_max = self.half_width - margin.min(self.half_width / 4.0);
        for i in 0..n {
            let s = s_lo + (s_hi - s_lo) * i as f64 / (n - 1) as f64;
            for j in 0..n {
                let t = -t_max + 2.0 * t_max * j as f64 / (n - 1) as f64;
                let g = self.pulled_back_metric(s, t)?;
                d.max_cross_term = d.max_cross_term.max(g[0][1].abs());
                let jac = self.g11(s, t)?;
                d.max_jacobi_mismatch = d.max_jacobi_mismatch.max((g[0][0] - jac).abs());
            }
            let g0 = self.pulled_back_metric(s, 0.0)?;
            d.max_core_deviation = d.max_core_deviation.max((g0[0][0] - 1.0).abs());
            let dt = 1e-3;
            let gp = self.pulled_back_metric(s, dt)?[0][0];
            let gm = self.pulled_back_metric(s, -dt)?[0][0];
            d.max_core_derivative = d.max_core_derivative.max(((gp - gm) / (2.0 * dt)).abs());
        }
        if self.length <= self.surface.validity_radius() {
            for i in 0..n {
                let s1 = self.length * i as f64 / (n - 1) as f64;
                let s2 = self.length * ((i * 7 + 3) % n) as f64 / (n - 1) as f64;
                let p1 = self.map(s1, 0.0)?;
                let p2 = self.map(s2, 0.0)?;
                let dist = geodesic_distance(&self.surface, &p1, &p2)?;
                d.max_core_distance_error = d.max_core_distance_error.max((dist - (s1 - s2).abs()).abs());
            }
        }
        Ok(d)
    }

    /// Exact point for round spheres and tori, used by tests as a reference.
    pub fn closed_form_map(&self, s: f64, t: f64) -> Option<ChartPoint> {
        if self.surface.is_perturbed() {
            return None;
        }
        let (p, tan, _) = closed_form_exp(&self.surface, &self.origin.base, &self.origin, s);
        let nu = self.surface.rotate90(&tan);
        Some(closed_form_exp(&self.surface, &p, &nu, t).0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::geodesic::{geodesic_shoot, unit_geodesic};
    use crate::geometry::surface::Chart;

    #[test]
    fn torus_chart_is_flat() {
        let t = Surface::standard_torus();
        let v = TangentVector::new(ChartPoint::plane(0.5, 0.5), [1.0, 0.0]);
        let core = unit_geodesic(&t, &v).unwrap();
        let chart = build_fermi_chart(&t, &core, 0.3).unwrap();
        for (s, tt) in [(0.1, 0.2), (0.5, -0.29), (0.9, 0.0)] {
            assert!((chart.g11(s, tt).unwrap() - 1.0).abs() < 1e-15);
            let g = chart.pulled_back_metric(s, tt).unwrap();
            assert!((g[0][0] - 1.0).abs() < 1e-10 && g[0][1].abs() < 1e-10);
        }
    }

    #[test]
    fn equator_chart_matches_cos_squared() {
        // Pullback of the round metric dtheta^2 + sin^2(theta) dphi^2 under
        // theta = pi/2 - t, phi = s gives cos^2(t) ds^2 + dt^2.
        let s = Surface::unit_sphere();
        let p = ChartPoint::polar(PI / 2.0, 0.0);
        let v = s.unit_direction(&p, PI / 2.0);
        let core = geodesic_shoot(&s, &v, 1.0).unwrap();
        let chart = build_fermi_chart(&s, &core, 1.2).unwrap();
        for i in 0..50 {
            for j in 0..50 {
                let ss = i as f64 / 49.0;
                let t = -1.2 + 2.4 * j as f64 / 49.0;
                let g = chart.g11(ss, t).unwrap();
                assert!((g - t.cos().powi(2)).abs() < 1e-6);
            }
        }
        let g = chart.pulled_back_metric(0.3, 0.7).unwrap();
        assert!((g[0][0] - 0.7f64.cos().powi(2)).abs() < 1e-6);
        assert!(g[0][1].abs() < 1e-8);
        // (s, t) = (0.3, 0.2) sits at longitude 0.3, latitude 0.2 (outward-normal orientation).
        let q = s.to_chart(&chart.map(0.3, 0.2).unwrap(), Chart::Polar);
        assert!((q.coords[0] - (PI / 2.0 - 0.2)).abs() < 1e-12);
        assert!((q.coords[1] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn focal_limit_enforced() {
        let s = Surface::unit_sphere();
        let p = ChartPoint::polar(PI / 2.0, 0.0);
        let core = unit_geodesic(&s, &s.unit_direction(&p, PI / 2.0)).unwrap();
        assert!(matches!(
            build_fermi_chart(&s, &core, 1.6),
            Err(Error::FocalPoint { .. })
        ));
    }
}
