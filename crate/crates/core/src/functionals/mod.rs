//! Concentration functionals: surface `L^p` norms, `L²` restriction to
//! geodesics, tube masses and the Kakeya–Nikodym maximal average.

mod grid;
mod kn;
mod tube;

use rayon::prelude::*;

use crate::eigenfunctions::EigenfunctionField;
use crate::error::{Error, Result};
use crate::geometry::{normalized, ChartPoint, GeodesicPath, Vec3};
use crate::quadrature::composite_with_min_nodes;

pub use grid::QuadratureGrid;
pub use kn::{kn_maximal, restriction_maximal, KnCandidate, KnResult, KnSampler, LevelTrace, RestrictionMax};
pub use tube::{tube, tube_mass, tube_with_resolution, TubeNode, TubeRegion};

/// Nodes per unit length along a geodesic for a field of eigenvalue `lambda`.
pub fn nodes_per_unit_length(lambda: f64) -> usize {
    (4.0 * (lambda / std::f64::consts::TAU + 4.0)).ceil() as usize
}

/// `(sum_i w_i |f(x_i)|^p)^{1/p}`, or for `p = inf` the grid maximum
/// refined by golden-section ascent around the largest grid values.
pub fn lp_norm(field: &EigenfunctionField, grid: &QuadratureGrid, p: f64) -> Result<f64> {
    if p.is_nan() || p < 2.0 {
        return Err(Error::InvalidExponent(p));
    }
    let rows = grid.rows();
    let m = grid.row_len();
    if p.is_infinite() {
        return Ok(sup_norm(field, grid));
    }
    let conformal = grid.surface().is_perturbed();
    let sums: Vec<f64> = rows
        .par_iter()
        .map(|&(first, w)| {
            let vals = field.evaluate_row(first, m);
            let mut acc = 0.0;
            for (j, v) in vals.iter().enumerate() {
                let wj = if conformal {
                    w * grid.surface().metric(&grid.row_point(first, j))[0][0]
                } else {
                    w
                };
                acc += wj * pow_abs(v.norm(), p);
            }
            acc
        })
        .collect();
    let total: f64 = sums.iter().sum();
    Ok(total.powf(1.0 / p))
}

fn pow_abs(a: f64, p: f64) -> f64 {
    if p == 2.0 {
        a * a
    } else if p == 4.0 {
        let a2 = a * a;
        a2 * a2
    } else {
        a.powf(p)
    }
}

/// Largest `|f|`: the grid maximum, refined by coordinate-wise golden-section
/// ascent in a local chart around the best grid nodes.
fn sup_norm(field: &EigenfunctionField, grid: &QuadratureGrid) -> f64 {
    let rows = grid.rows();
    let m = grid.row_len();
    let per_row: Vec<Vec<(f64, usize)>> = rows
        .par_iter()
        .map(|&(first, _)| {
            let vals = field.evaluate_row(first, m);
            let mut best: Vec<(f64, usize)> = vals.iter().map(|v| v.norm()).zip(0..).collect();
            best.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite values"));
            best.truncate(2);
            best
        })
        .collect();
    let mut cands: Vec<(f64, ChartPoint)> = per_row
        .iter()
        .zip(&rows)
        .flat_map(|(row, &(first, _))| row.iter().map(move |&(v, j)| (v, grid.row_point(first, j))))
        .collect();
    cands.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite values"));
    let grid_max = cands.first().map_or(0.0, |c| c.0);
    let h = grid.spacing();
    let refined: Vec<f64> = cands.par_iter().take(8).map(|(_, p)| ascend(field, p, h)).collect();
    refined.into_iter().fold(grid_max, f64::max)
}

fn ascend(field: &EigenfunctionField, p: &ChartPoint, h: [f64; 2]) -> f64 {
    let surface = field.surface();
    if surface.periods().is_some() {
        let mut c = p.coords;
        for _ in 0..3 {
            for axis in 0..2 {
                let f = |x: f64| {
                    let mut q = c;
                    q[axis] = x;
                    field.evaluate(&ChartPoint::plane(q[0], q[1])).norm()
                };
                c[axis] = golden_max(f, c[axis] - h[axis], c[axis] + h[axis]);
            }
        }
        return field.evaluate(&surface.normalize(ChartPoint::plane(c[0], c[1]))).norm();
    }
    // Local chart Y(a, b) = normalize(X + a e1 + b e2) avoids pole trouble.
    let x = surface.embed(p);
    let [b1, b2] = surface.chart_basis(p);
    let e1 = normalized(b1);
    let e2 = normalized(b2);
    let at = |a: f64, b: f64| -> Vec3 {
        normalized([
            x[0] + a * e1[0] + b * e2[0],
            x[1] + a * e1[1] + b * e2[1],
            x[2] + a * e1[2] + b * e2[2],
        ])
    };
    let value = |a: f64, b: f64| field.evaluate(&surface.project(&at(a, b))).norm();
    let width = h[0].max(h[1]);
    let (mut a, mut b) = (0.0, 0.0);
    for _ in 0..3 {
        a = golden_max(|s| value(s, b), a - width, a + width);
        b = golden_max(|s| value(a, s), b - width, b + width);
    }
    value(a, b)
}

/// Golden-section search for the maximum of a unimodal function.
fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if hi - lo < 1e-13 {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 > f2 {
        x1
    } else {
        x2
    }
}

/// `int_gamma |f|^2 ds` by composite Gauss–Legendre along arc length with
/// at least `4 (lambda / 2 pi + 4)` nodes per unit length.
pub fn restrict_integral(field: &EigenfunctionField, gamma: &GeodesicPath) -> f64 {
    restrict_integral_with(field, gamma, 1.0)
}

/// [`restrict_integral`] with the node count multiplied by `oversample`.
pub fn restrict_integral_with(field: &EigenfunctionField, gamma: &GeodesicPath, oversample: f64) -> f64 {
    let len = gamma.total_length();
    let min_nodes = (nodes_per_unit_length(field.lambda()) as f64 * len.max(1e-3) * oversample).ceil() as usize;
    let (s, w) = composite_with_min_nodes(0.0, len, min_nodes);
    s.iter()
        .zip(&w)
        .map(|(&si, &wi)| {
            let (p, _) = gamma.point_at(si);
            wi * field.evaluate(&p).norm_sqr()
        })
        .sum()
}
