use std::f64::consts::TAU;

use rayon::prelude::*;

use crate::eigenfunctions::EigenfunctionField;
use crate::geometry::{ChartPoint, Surface, SurfaceDescriptor};
use crate::quadrature::gauss_legendre;

#[derive(Debug, Clone, PartialEq)]
enum Layout {
    /// Gauss–Legendre in `cos(theta)` times uniform longitude.
    Sphere {
        theta: Vec<f64>,
        weight: Vec<f64>,
        n_phi: usize,
    },
    /// Uniform trapezoid rule (spectrally accurate for periodic integrands).
    Torus { n: [usize; 2], periods: [f64; 2] },
}

/// Product quadrature rule on a whole surface.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    surface: Surface,
    layout: Layout,
}

impl QuadratureGrid {
    /// `n_theta` Gauss–Legendre colatitudes times `n_phi` longitudes.
    pub fn sphere(surface: &Surface, n_theta: usize, n_phi: usize) -> Self {
        assert!(surface.is_spherical(), "sphere grid on a torus");
        let (x, w) = gauss_legendre(n_theta.max(1));
        // Nodes ordered from the north pole southwards.
        let theta: Vec<f64> = x.iter().rev().map(|c| c.clamp(-1.0, 1.0).acos()).collect();
        let weight: Vec<f64> = w.into_iter().rev().collect();
        QuadratureGrid {
            surface: surface.clone(),
            layout: Layout::Sphere {
                theta,
                weight,
                n_phi: n_phi.max(1),
            },
        }
    }

    pub fn torus(surface: &Surface, nx: usize, ny: usize) -> Self {
        let periods = surface.periods().expect("torus grid on a sphere");
        QuadratureGrid {
            surface: surface.clone(),
            layout: Layout::Torus {
                n: [nx.max(1), ny.max(1)],
                periods,
            },
        }
    }

    /// Grid obeying the sizing rule for a degree-`k` field: `(4k + 16)`
    /// colatitudes by `(8k + 16)` longitudes, times `scale`.
    pub fn for_degree(surface: &Surface, k: usize, scale: f64) -> Self {
        let n_theta = ((4 * k + 16) as f64 * scale).ceil() as usize;
        let n_phi = ((8 * k + 16) as f64 * scale).ceil() as usize;
        Self::sphere(surface, n_theta, n_phi)
    }

    /// Grid sized for `field` (times `scale`).
    pub fn for_field(field: &EigenfunctionField, scale: f64) -> Self {
        let band = field.bandwidth();
        match field.surface().descriptor() {
            SurfaceDescriptor::FlatTorus { .. } => {
                let n = |m: usize| (((8 * m + 16) as f64) * scale).ceil() as usize;
                Self::torus(field.surface(), n(band[0]), n(band[1]))
            }
            _ => Self::for_degree(field.surface(), band[0].max(band[1]), scale),
        }
    }

    pub fn surface(&self) -> &Surface {
        &self.surface
    }

    /// Node counts along the two chart coordinates.
    pub fn resolution(&self) -> [usize; 2] {
        match &self.layout {
            Layout::Sphere { theta, n_phi, .. } => [theta.len(), *n_phi],
            Layout::Torus { n, .. } => *n,
        }
    }

    pub fn len(&self) -> usize {
        let r = self.resolution();
        r[0] * r[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Rows as `(first coordinate, weight of each node in the row)`; the
    /// second coordinate runs uniformly over its period.
    pub(crate) fn rows(&self) -> Vec<(f64, f64)> {
        match &self.layout {
            Layout::Sphere { theta, weight, n_phi } => {
                let r2 = radius_sq(&self.surface);
                theta
                    .iter()
                    .zip(weight)
                    .map(|(&t, &w)| (t, w * r2 * TAU / *n_phi as f64))
                    .collect()
            }
            Layout::Torus { n, periods } => {
                let w = periods[0] * periods[1] / (n[0] * n[1]) as f64;
                (0..n[0]).map(|i| (periods[0] * i as f64 / n[0] as f64, w)).collect()
            }
        }
    }

    pub(crate) fn row_len(&self) -> usize {
        self.resolution()[1]
    }

    /// Spacing of the rows near the point of interest (upper bound).
    pub(crate) fn spacing(&self) -> [f64; 2] {
        match &self.layout {
            Layout::Sphere { theta, n_phi, .. } => {
                [std::f64::consts::PI / theta.len() as f64 * 1.6, TAU / *n_phi as f64]
            }
            Layout::Torus { n, periods } => [periods[0] / n[0] as f64, periods[1] / n[1] as f64],
        }
    }

    pub(crate) fn row_point(&self, first: f64, j: usize) -> ChartPoint {
        match &self.layout {
            Layout::Sphere { n_phi, .. } => ChartPoint::polar(first, TAU * j as f64 / *n_phi as f64),
            Layout::Torus { n, periods } => ChartPoint::plane(first, periods[1] * j as f64 / n[1] as f64),
        }
    }

    /// All nodes with their area weights (including any conformal factor).
    pub fn nodes(&self) -> Vec<(ChartPoint, f64)> {
        let m = self.row_len();
        let mut out = Vec::with_capacity(self.len());
        for (first, w) in self.rows() {
            for j in 0..m {
                let p = self.row_point(first, j);
                out.push((p, w * self.conformal_weight(&p)));
            }
        }
        out
    }

    fn conformal_weight(&self, p: &ChartPoint) -> f64 {
        if self.surface.is_perturbed() {
            let g = self.surface.metric(p);
            g[0][0]
        } else {
            1.0
        }
    }

    /// Sum of the weights (the surface area up to quadrature error).
    pub fn total_weight(&self) -> f64 {
        if !self.surface.is_perturbed() {
            let m = self.row_len() as f64;
            return self.rows().iter().map(|(_, w)| w * m).sum();
        }
        let m = self.row_len();
        let rows = self.rows();
        let sums: Vec<f64> = rows
            .par_iter()
            .map(|&(first, w)| {
                (0..m)
                    .map(|j| w * self.conformal_weight(&self.row_point(first, j)))
                    .sum()
            })
            .collect();
        sums.iter().sum()
    }
}

fn radius_sq(surface: &Surface) -> f64 {
    match surface.descriptor() {
        SurfaceDescriptor::RoundSphere { radius } => radius * radius,
        _ => 1.0,
    }
}
