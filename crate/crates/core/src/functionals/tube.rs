use std::f64::consts::TAU;

use rayon::prelude::*;

use super::nodes_per_unit_length;
use crate::eigenfunctions::EigenfunctionField;
use crate::error::{Error, Result};
use crate::geometry::{build_fermi_chart, sweep, ChartPoint, GeodesicPath, Surface, SurfaceDescriptor, TangentVector};
use crate::quadrature::composite_with_min_nodes;

/// Integrator tolerance for tube columns on surfaces without closed forms.
const TUBE_TOLERANCE: f64 = 1e-10;

/// One quadrature node of a tube, in Fermi coordinates about the core.
#[derive(Debug, Clone, Copy)]
pub struct TubeNode {
    pub s: f64,
    pub t: f64,
    pub point: ChartPoint,
    /// `w_s w_t sqrt(g11(s, t))`.
    pub weight: f64,
}

/// Quadrature-equipped geodesic tube `{ y : d(y, gamma) < r }`.
#[derive(Debug, Clone)]
pub struct TubeRegion {
    core: GeodesicPath,
    radius: f64,
    nodes: Vec<TubeNode>,
    resolution: [usize; 2],
    volume: f64,
}

impl TubeRegion {
    pub fn core(&self) -> &GeodesicPath {
        &self.core
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn nodes(&self) -> &[TubeNode] {
        &self.nodes
    }

    /// Node counts along `s` and across `t`.
    pub fn resolution(&self) -> [usize; 2] {
        self.resolution
    }

    /// `Vol_g`, the sum of the weights.
    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn surface(&self) -> &Surface {
        self.core.surface()
    }
}

/// Tube of radius `r` sized for fields with eigenvalue `r^{-2}`.
pub fn tube(gamma: &GeodesicPath, r: f64) -> Result<TubeRegion> {
    tube_with_resolution(gamma, r, r.powi(-2), 1.0)
}

/// Tube of radius `r` about `gamma` with node counts sized for eigenvalue
/// `lambda` and multiplied by `scale`.
pub fn tube_with_resolution(gamma: &GeodesicPath, r: f64, lambda: f64, scale: f64) -> Result<TubeRegion> {
    let surface = gamma.surface();
    check_radius(surface, r)?;
    if surface.is_perturbed() {
        build_fermi_chart(surface, gamma, r)?;
    }
    let start = gamma.start().tangent;
    let (nodes, resolution) = tube_nodes(surface, &start, gamma.total_length(), r, lambda, scale)?;
    let volume = nodes.iter().map(|n| n.weight).sum();
    Ok(TubeRegion {
        core: gamma.clone(),
        radius: r,
        nodes,
        resolution,
        volume,
    })
}

fn check_radius(surface: &Surface, r: f64) -> Result<()> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidArgument(format!("tube radius {r}")));
    }
    if let SurfaceDescriptor::RoundSphere { radius } = surface.descriptor() {
        let focal = std::f64::consts::FRAC_PI_2 * radius;
        if r > focal * (1.0 + 1e-12) {
            return Err(Error::FocalPoint { half_width: r, focal });
        }
    }
    Ok(())
}

pub(crate) fn tube_nodes(
    surface: &Surface,
    start: &TangentVector,
    length: f64,
    r: f64,
    lambda: f64,
    scale: f64,
) -> Result<(Vec<TubeNode>, [usize; 2])> {
    let ns = (nodes_per_unit_length(lambda) as f64 * length * scale).ceil() as usize;
    let nt_rule = (4.0 * (lambda * 2.0 * r / TAU + 4.0)).max(16.0);
    let nt = (nt_rule * scale).ceil() as usize;
    let (s_nodes, s_weights) = composite_with_min_nodes(0.0, length, ns);
    let (t_nodes, t_weights) = composite_with_min_nodes(-r, r, nt);
    let core = sweep(surface, start, &s_nodes, TUBE_TOLERANCE)?;
    let columns: Vec<Result<Vec<TubeNode>>> = core
        .par_iter()
        .zip(s_nodes.par_iter().zip(s_weights.par_iter()))
        .map(|((p, tan, _), (&s, &ws))| {
            let nu = surface.rotate90(&TangentVector::new(*p, tan.components));
            let col = sweep(surface, &nu, &t_nodes, TUBE_TOLERANCE)?;
            Ok(col
                .into_iter()
                .zip(t_nodes.iter().zip(&t_weights))
                .map(|((q, _, j), (&t, &wt))| TubeNode {
                    s,
                    t,
                    point: q,
                    weight: ws * wt * j.abs(),
                })
                .collect())
        })
        .collect();
    let mut nodes = Vec::with_capacity(s_nodes.len() * t_nodes.len());
    for c in columns {
        nodes.extend(c?);
    }
    Ok((nodes, [s_nodes.len(), t_nodes.len()]))
}

/// `int_tube |f|^2 dx`.
pub fn tube_mass(field: &EigenfunctionField, tube: &TubeRegion) -> Result<f64> {
    if field.surface() != tube.surface() {
        return Err(Error::InvalidArgument(
            "tube and field live on different surfaces".into(),
        ));
    }
    Ok(mass_of_nodes(field, &tube.nodes, tube.resolution[1]))
}

pub(crate) fn mass_of_nodes(field: &EigenfunctionField, nodes: &[TubeNode], column: usize) -> f64 {
    let sums: Vec<f64> = nodes
        .par_chunks(column.max(1))
        .map(|col| col.iter().map(|n| n.weight * field.evaluate(&n.point).norm_sqr()).sum())
        .collect();
    sums.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{geodesic_segment, unit_geodesic};

    #[test]
    fn torus_tube_volume_is_exact() {
        let t = Surface::standard_torus();
        let v = TangentVector::new(ChartPoint::plane(1.0, 1.0), [0.6, 0.8]);
        let tb = tube(&unit_geodesic(&t, &v).unwrap(), 0.01).unwrap();
        assert!((tb.volume() - 0.02).abs() < 1e-9);
    }

    #[test]
    fn sphere_band_area() {
        let s = Surface::unit_sphere();
        let p = ChartPoint::polar(std::f64::consts::FRAC_PI_2, 0.0);
        let v = s.unit_direction(&p, std::f64::consts::FRAC_PI_2);
        let band = tube(&geodesic_segment(&s, &v, TAU).unwrap(), 0.1).unwrap();
        assert!((band.volume() - 4.0 * std::f64::consts::PI * 0.1f64.sin()).abs() < 1e-6);
        assert!(matches!(
            tube(&geodesic_segment(&s, &v, 1.0).unwrap(), 1.6),
            Err(Error::FocalPoint { .. })
        ));
    }
}
