use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::probe::SurfaceProbe;
use crate::error::{Error, Result};
use crate::geometry::{geodesic_distance, ChartPoint};
use crate::quadrature::composite_with_min_nodes;

/// Point configuration for [`GramCheck::new`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GramConfig {
    pub lambda: f64,
    pub count: usize,
    /// Distance of the points from the origin (points sit near `(-s0, 0)`).
    pub s0: f64,
    /// Angular spacing of consecutive points in units of `lambda^{-1/2}`.
    pub spacing: f64,
    /// Separation constant `c` required for `|j - k| >= 10`.
    pub separation: f64,
}

impl Default for GramConfig {
    fn default() -> Self {
        GramConfig {
            lambda: 400.0,
            count: 32,
            s0: 0.3,
            spacing: 0.5,
            separation: 0.25,
        }
    }
}

/// Gram matrix `G_jk = lambda^{1/2} int e^{i lambda (psi(x_j,t) - psi(x_k,t))} rho(t) rho(t) dt`.
#[derive(Debug, Clone)]
pub struct GramCheck {
    lambda: f64,
    kappa: Vec<[f64; 2]>,
    points: Vec<ChartPoint>,
    directions: Vec<f64>,
    separation: f64,
    separated: bool,
    matrix: DMatrix<Complex64>,
}

/// Gaussian-windowed bump in `tau = lambda^{1/2} t`, zero for `|tau| >= 1`.
pub fn gram_cutoff(lambda: f64, t: f64) -> f64 {
    let tau = lambda.sqrt() * t;
    if tau.abs() >= 1.0 {
        return 0.0;
    }
    (-2.0 * tau * tau).exp() * (1.0 - 1.0 / (1.0 - tau * tau)).exp()
}

fn t_nodes(lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let r = lambda.powf(-0.5);
    composite_with_min_nodes(-r, r, 128 + lambda.sqrt().ceil() as usize)
}

impl GramCheck {
    /// Points at geodesic-normal angle `pi + (j - J/2) spacing lambda^{-1/2}`
    /// and radius `s0` about the origin. Fails if the separation hypothesis
    /// does not hold.
    pub fn new(probe: &SurfaceProbe, cfg: &GramConfig) -> Result<Self> {
        let step = cfg.spacing / cfg.lambda.sqrt();
        let kappa: Vec<[f64; 2]> = (0..cfg.count)
            .map(|j| {
                let a = PI + (j as f64 - cfg.count as f64 / 2.0) * step;
                [cfg.s0 * a.cos(), cfg.s0 * a.sin()]
            })
            .collect();
        let check = Self::from_normal_coordinates_unchecked(probe, cfg.lambda, &kappa, cfg.separation)?;
        if !check.separated {
            return Err(Error::Precondition(format!(
                "direction gaps violate |d_j - d_k| >= {} lambda^(-1/2) |j - k| for |j - k| >= 10",
                cfg.separation
            )));
        }
        Ok(check)
    }

    /// Builds the Gram matrix for arbitrary normal coordinates without
    /// enforcing separation; [`gram_norm`] still refuses such checks.
    pub fn from_normal_coordinates_unchecked(
        probe: &SurfaceProbe,
        lambda: f64,
        kappa: &[[f64; 2]],
        separation: f64,
    ) -> Result<Self> {
        if kappa.is_empty() || kappa.len() > 64 {
            return Err(Error::InvalidArgument(format!(
                "{} Gram points (need 1..=64)",
                kappa.len()
            )));
        }
        if lambda.is_nan() || lambda < 1.0 {
            return Err(Error::InvalidArgument(format!("lambda = {lambda}")));
        }
        // The pushforward of d/dx2 at the origin is (0, 1) in normal coordinates.
        let h = 1e-3;
        let along = probe.from_normal_coordinates([0.0, h])?;
        let gap = geodesic_distance(probe.surface(), &along, &probe.axis_point(h)?)?;
        if gap > 1e-9 {
            return Err(Error::Precondition(format!(
                "normal coordinates do not preserve the x2 axis (offset {gap})"
            )));
        }
        let points: Vec<ChartPoint> = kappa
            .iter()
            .map(|k| probe.from_normal_coordinates(*k))
            .collect::<Result<_>>()?;
        let directions: Vec<f64> = kappa.iter().map(|k| k[1] / k[0].hypot(k[1])).collect();
        let sep_step = separation / lambda.sqrt();
        let mut separated = true;
        for j in 0..kappa.len() {
            for k in (j + 10)..kappa.len() {
                if (directions[j] - directions[k]).abs() < sep_step * (k - j) as f64 {
                    separated = false;
                }
            }
        }
        let (ts, ws) = t_nodes(lambda);
        let n = points.len();
        let mut e = vec![Complex64::new(0.0, 0.0); n * ts.len()];
        for (j, p) in points.iter().enumerate() {
            for (i, &t) in ts.iter().enumerate() {
                let psi = probe.phase_at(p, t)?;
                e[j * ts.len() + i] = Complex64::from_polar(gram_cutoff(lambda, t), lambda * psi);
            }
        }
        let root = lambda.sqrt();
        let matrix = DMatrix::from_fn(n, n, |j, k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..ts.len() {
                acc += e[j * ts.len() + i] * e[k * ts.len() + i].conj() * ws[i];
            }
            acc * root
        });
        Ok(GramCheck {
            lambda,
            kappa: kappa.to_vec(),
            points,
            directions,
            separation,
            separated,
            matrix,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn normal_coordinates(&self) -> &[[f64; 2]] {
        &self.kappa
    }

    pub fn points(&self) -> &[ChartPoint] {
        &self.points
    }

    /// `kappa_2 / |kappa|` for every point.
    pub fn directions(&self) -> &[f64] {
        &self.directions
    }

    pub fn separation(&self) -> f64 {
        self.separation
    }

    pub fn is_separated(&self) -> bool {
        self.separated
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// `max |G - G^*|`.
    pub fn hermitian_defect(&self) -> f64 {
        let g = &self.matrix;
        let mut worst: f64 = 0.0;
        for j in 0..g.nrows() {
            for k in 0..g.ncols() {
                worst = worst.max((g[(j, k)] - g[(k, j)].conj()).norm());
            }
        }
        worst
    }
}

/// Operator norm of the Gram matrix; requires the separation hypothesis.
pub fn gram_norm(check: &GramCheck) -> Result<f64> {
    if !check.separated {
        return Err(Error::Precondition(
            "Gram points violate the direction separation condition".into(),
        ));
    }
    Ok(gram_norm_unchecked(check))
}

/// Operator norm without the separation precondition.
pub fn gram_norm_unchecked(check: &GramCheck) -> f64 {
    check
        .matrix
        .clone()
        .singular_values()
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// `lambda^{1/2} int |sum_j e^{i lambda psi(x_j, t)} rho(t) a_j|^2 dt`, computed
/// directly rather than through the matrix.
pub fn gram_quadratic_form(probe: &SurfaceProbe, check: &GramCheck, a: &[Complex64]) -> Result<f64> {
    if a.len() != check.points.len() {
        return Err(Error::InvalidArgument(
            "coefficient count differs from point count".into(),
        ));
    }
    let lambda = check.lambda;
    let (ts, ws) = t_nodes(lambda);
    let mut total = 0.0;
    for (&t, &w) in ts.iter().zip(&ws) {
        let mut s = Complex64::new(0.0, 0.0);
        for (p, aj) in check.points.iter().zip(a) {
            s += Complex64::from_polar(gram_cutoff(lambda, t), lambda * probe.phase_at(p, t)?) * aj;
        }
        total += w * s.norm_sqr();
    }
    Ok(total * lambda.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_norm() {
        let probe = SurfaceProbe::unit_sphere();
        let lambda = 400.0;
        let check = GramCheck::from_normal_coordinates_unchecked(&probe, lambda, &[[-0.3, 0.0]], 0.25).unwrap();
        let (ts, ws) = t_nodes(lambda);
        let exact: f64 = ts
            .iter()
            .zip(&ws)
            .map(|(t, w)| w * gram_cutoff(lambda, *t).powi(2))
            .sum::<f64>()
            * lambda.sqrt();
        let n = gram_norm(&check).unwrap();
        assert!((n - exact).abs() < 1e-12);
        assert!(n <= 2.0);
        assert!(check.hermitian_defect() < 1e-12);
    }
}
