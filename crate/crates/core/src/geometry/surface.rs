//! Model surfaces: chart points, metrics, Christoffel symbols and curvature.
//!
//! Spherical surfaces use two colatitude/longitude charts. The `Polar`
//! chart is the usual one; the `Rotated` chart has its poles on the
//! equator of the `Polar` chart, so every point lies well inside one of
//! the two. The flat torus uses a single `Plane` chart with coordinates
//! reduced modulo the periods.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

/// Switch away from a spherical chart once `sin(colatitude)` drops below this.
pub(crate) const CHART_SWITCH_SIN: f64 = 0.5;

/// Chart identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Chart {
    Polar,
    Rotated,
    Plane,
}

impl Chart {
    pub(crate) fn other(self) -> Chart {
        match self {
            Chart::Polar => Chart::Rotated,
            Chart::Rotated => Chart::Polar,
            Chart::Plane => Chart::Plane,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartPoint {
    pub chart: Chart,
    pub coords: [f64; 2],
}

impl ChartPoint {
    /// Colatitude/longitude point in the standard chart.
    pub fn polar(theta: f64, phi: f64) -> Self {
        ChartPoint {
            chart: Chart::Polar,
            coords: [theta, phi],
        }
    }

    pub fn plane(x: f64, y: f64) -> Self {
        ChartPoint {
            chart: Chart::Plane,
            coords: [x, y],
        }
    }
}

/// Tangent vector in chart components (chart units per unit arc length).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentVector {
    pub base: ChartPoint,
    pub components: [f64; 2],
}

impl TangentVector {
    pub fn new(base: ChartPoint, components: [f64; 2]) -> Self {
        TangentVector { base, components }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        TangentVector {
            base: self.base,
            components: [self.components[0] * factor, self.components[1] * factor],
        }
    }
}

/// Serializable surface descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SurfaceDescriptor {
    RoundSphere {
        radius: f64,
    },
    FlatTorus {
        periods: [f64; 2],
    },
    /// Unit sphere with metric `(1 + amplitude * bump)^2 * round`; the bump
    /// center is given as (colatitude, longitude).
    PerturbedSphere {
        amplitude: f64,
        bump_center: [f64; 2],
        bump_width: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Bump {
    amplitude: f64,
    center: Vec3,
    width: f64,
}

/// Conformal log-factor `sigma` and its derivatives at a point of the unit sphere.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Conformal {
    pub sigma: f64,
    /// Ambient vector `G` with `d sigma = G . dX` for tangent `dX`.
    pub grad: Vec3,
    /// Round-sphere Laplacian of sigma.
    pub laplacian: f64,
}

impl Conformal {
    const FLAT: Conformal = Conformal {
        sigma: 0.0,
        grad: [0.0; 3],
        laplacian: 0.0,
    };
}

/// A model surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SurfaceDescriptor", into = "SurfaceDescriptor")]
pub struct Surface {
    descriptor: SurfaceDescriptor,
    bump: Option<Bump>,
}

impl TryFrom<SurfaceDescriptor> for Surface {
    type Error = Error;

    fn try_from(descriptor: SurfaceDescriptor) -> Result<Self> {
        Surface::new(descriptor)
    }
}

impl From<Surface> for SurfaceDescriptor {
    fn from(s: Surface) -> Self {
        s.descriptor
    }
}

/// Validity radius of the perturbed sphere: distances and exponential maps
/// are only computed below it.
pub const PERTURBED_VALIDITY: f64 = 1.5;
/// Longest geodesic the perturbed-sphere integrator will produce.
pub const PERTURBED_MAX_LENGTH: f64 = TAU;

impl Surface {
    pub fn new(descriptor: SurfaceDescriptor) -> Result<Self> {
        let bump = match &descriptor {
            SurfaceDescriptor::RoundSphere { radius } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::InvalidArgument(format!("sphere radius {radius}")));
                }
                None
            }
            SurfaceDescriptor::FlatTorus { periods } => {
                if !periods.iter().all(|p| p.is_finite() && *p > 0.0) {
                    return Err(Error::InvalidArgument(format!("torus periods {periods:?}")));
                }
                None
            }
            SurfaceDescriptor::PerturbedSphere {
                amplitude,
                bump_center,
                bump_width,
            } => {
                if !(amplitude.is_finite() && *amplitude > -1.0 && *amplitude < 1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "perturbation amplitude {amplitude} must lie in (-1, 1)"
                    )));
                }
                if !(*bump_width > 0.0 && *bump_width <= PI / 2.0) {
                    return Err(Error::InvalidArgument(format!(
                        "bump width {bump_width} must lie in (0, pi/2]"
                    )));
                }
                Some(Bump {
                    amplitude: *amplitude,
                    center: unit_from_chart(Chart::Polar, bump_center[0], bump_center[1]),
                    width: *bump_width,
                })
            }
        };
        Ok(Surface { descriptor, bump })
    }

    pub fn unit_sphere() -> Self {
        Self::round_sphere(1.0).expect("unit radius is valid")
    }

    pub fn round_sphere(radius: f64) -> Result<Self> {
        Self::new(SurfaceDescriptor::RoundSphere { radius })
    }

    pub fn flat_torus(periods: [f64; 2]) -> Result<Self> {
        Self::new(SurfaceDescriptor::FlatTorus { periods })
    }

    /// The square torus with periods 2π.
    pub fn standard_torus() -> Self {
        Self::flat_torus([TAU, TAU]).expect("2pi periods are valid")
    }

    pub fn perturbed_sphere(amplitude: f64, bump_center: [f64; 2], bump_width: f64) -> Result<Self> {
        Self::new(SurfaceDescriptor::PerturbedSphere {
            amplitude,
            bump_center,
            bump_width,
        })
    }

    pub fn descriptor(&self) -> &SurfaceDescriptor {
        &self.descriptor
    }

    pub fn name(&self) -> &'static str {
        match self.descriptor {
            SurfaceDescriptor::RoundSphere { .. } => "round_sphere",
            SurfaceDescriptor::FlatTorus { .. } => "flat_torus",
            SurfaceDescriptor::PerturbedSphere { .. } => "perturbed_sphere",
        }
    }

    pub fn is_spherical(&self) -> bool {
        !matches!(self.descriptor, SurfaceDescriptor::FlatTorus { .. })
    }

    pub fn is_unit_round_sphere(&self) -> bool {
        matches!(self.descriptor, SurfaceDescriptor::RoundSphere { radius } if radius == 1.0)
    }

    pub fn is_perturbed(&self) -> bool {
        self.bump.is_some()
    }

    /// Radius of the underlying round sphere (1 for the perturbed sphere).
    pub(crate) fn sphere_radius(&self) -> f64 {
        match self.descriptor {
            SurfaceDescriptor::RoundSphere { radius } => radius,
            _ => 1.0,
        }
    }

    pub fn periods(&self) -> Option<[f64; 2]> {
        match self.descriptor {
            SurfaceDescriptor::FlatTorus { periods } => Some(periods),
            _ => None,
        }
    }

    pub fn area(&self) -> f64 {
        match self.descriptor {
            SurfaceDescriptor::RoundSphere { radius } => 4.0 * PI * radius * radius,
            SurfaceDescriptor::FlatTorus { periods } => periods[0] * periods[1],
            // Only the round value; the perturbed area is not used anywhere.
            SurfaceDescriptor::PerturbedSphere { .. } => 4.0 * PI,
        }
    }

    /// Radius below which distances and exponential maps are trusted.
    pub fn validity_radius(&self) -> f64 {
        match self.descriptor {
            SurfaceDescriptor::RoundSphere { radius } => PI * radius,
            SurfaceDescriptor::FlatTorus { periods } => 0.5 * periods[0].min(periods[1]),
            SurfaceDescriptor::PerturbedSphere { .. } => PERTURBED_VALIDITY,
        }
    }

    /// Reduces torus coordinates modulo the periods and sphere longitudes modulo 2π.
    pub fn normalize(&self, p: ChartPoint) -> ChartPoint {
        match (p.chart, self.periods()) {
            (Chart::Plane, Some(per)) => {
                ChartPoint::plane(p.coords[0].rem_euclid(per[0]), p.coords[1].rem_euclid(per[1]))
            }
            _ => ChartPoint {
                chart: p.chart,
                coords: [p.coords[0], p.coords[1].rem_euclid(TAU)],
            },
        }
    }

    pub(crate) fn check_chart(&self, p: &ChartPoint) -> Result<()> {
        let ok = match p.chart {
            Chart::Plane => !self.is_spherical(),
            Chart::Polar | Chart::Rotated => self.is_spherical() && p.coords[0] > 0.0 && p.coords[0] < PI,
        };
        if ok && p.coords.iter().all(|c| c.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "chart point {p:?} is outside the chart domain of {}",
                self.name()
            )))
        }
    }

    /// Lifted position: the point of the round sphere of radius R in R^3, or
    /// the planar coordinates (with zero third component) for the torus.
    pub fn embed(&self, p: &ChartPoint) -> Vec3 {
        match p.chart {
            Chart::Plane => [p.coords[0], p.coords[1], 0.0],
            chart => scale(unit_from_chart(chart, p.coords[0], p.coords[1]), self.sphere_radius()),
        }
    }

    /// Inverse of [`Surface::embed`]; spherical points are radially projected
    /// and placed in the better-conditioned chart.
    pub fn project(&self, x: &Vec3) -> ChartPoint {
        if !self.is_spherical() {
            return self.normalize(ChartPoint::plane(x[0], x[1]));
        }
        let u = normalized(*x);
        let (theta, phi) = chart_from_unit(Chart::Polar, &u);
        if theta.sin() >= CHART_SWITCH_SIN {
            ChartPoint::polar(theta, phi)
        } else {
            let (t, f) = chart_from_unit(Chart::Rotated, &u);
            ChartPoint {
                chart: Chart::Rotated,
                coords: [t, f],
            }
        }
    }

    /// Re-expresses `p` in `chart` (spherical surfaces only).
    pub fn to_chart(&self, p: &ChartPoint, chart: Chart) -> ChartPoint {
        if p.chart == chart || chart == Chart::Plane {
            return *p;
        }
        let u = unit_from_chart(p.chart, p.coords[0], p.coords[1]);
        let (t, f) = chart_from_unit(chart, &u);
        ChartPoint { chart, coords: [t, f] }
    }

    /// Ambient images of the coordinate vectors at `p`.
    pub fn chart_basis(&self, p: &ChartPoint) -> [Vec3; 2] {
        match p.chart {
            Chart::Plane => [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            chart => {
                let r = self.sphere_radius();
                let [a, b] = unit_basis(chart, p.coords[0], p.coords[1]);
                [scale(a, r), scale(b, r)]
            }
        }
    }

    pub fn lift_tangent(&self, v: &TangentVector) -> Vec3 {
        let [a, b] = self.chart_basis(&v.base);
        let c = v.components;
        [
            a[0] * c[0] + b[0] * c[1],
            a[1] * c[0] + b[1] * c[1],
            a[2] * c[0] + b[2] * c[1],
        ]
    }

    /// Chart components of an ambient tangent vector at `p`.
    pub fn lower_tangent(&self, p: &ChartPoint, w: &Vec3) -> TangentVector {
        let [a, b] = self.chart_basis(p);
        TangentVector::new(*p, [dot(w, &a) / dot(&a, &a), dot(w, &b) / dot(&b, &b)])
    }

    pub(crate) fn conformal_at(&self, p: &ChartPoint) -> Conformal {
        match (&self.bump, p.chart) {
            (Some(b), Chart::Polar | Chart::Rotated) => {
                b.conformal(&unit_from_chart(p.chart, p.coords[0], p.coords[1]))
            }
            _ => Conformal::FLAT,
        }
    }

    /// Conformal factor `Omega = e^sigma` of the metric relative to the round
    /// (or flat) metric, at a lifted point.
    pub fn conformal_factor(&self, x: &Vec3) -> f64 {
        match &self.bump {
            Some(b) => b.conformal(&normalized(*x)).sigma.exp(),
            None => 1.0,
        }
    }

    /// Metric inner product of two ambient tangent vectors at a lifted point.
    pub fn lifted_inner(&self, x: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
        let omega = self.conformal_factor(x);
        omega * omega * dot(a, b)
    }

    /// Metric tensor `g_jk` at `p`; diagonal in every chart used here.
    pub fn metric(&self, p: &ChartPoint) -> [[f64; 2]; 2] {
        match p.chart {
            Chart::Plane => [[1.0, 0.0], [0.0, 1.0]],
            _ => {
                let r = self.sphere_radius();
                let e2 = (2.0 * self.conformal_at(p).sigma).exp() * r * r;
                let s = p.coords[0].sin();
                [[e2, 0.0], [0.0, e2 * s * s]]
            }
        }
    }

    /// Cometric `g^jk` at `p`.
    pub fn cometric(&self, p: &ChartPoint) -> [[f64; 2]; 2] {
        let g = self.metric(p);
        let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        [[g[1][1] / det, -g[0][1] / det], [-g[1][0] / det, g[0][0] / det]]
    }

    /// Area element `sqrt(det g)`.
    pub fn area_element(&self, p: &ChartPoint) -> f64 {
        let g = self.metric(p);
        (g[0][0] * g[1][1] - g[0][1] * g[1][0]).sqrt()
    }

    /// Christoffel symbols, indexed `[k][i][j]` for `Gamma^k_ij`.
    pub fn christoffel(&self, p: &ChartPoint) -> [[[f64; 2]; 2]; 2] {
        if p.chart == Chart::Plane {
            return [[[0.0; 2]; 2]; 2];
        }
        let (theta, phi) = (p.coords[0], p.coords[1]);
        let (s, c) = theta.sin_cos();
        let mut gam = [[[0.0; 2]; 2]; 2];
        gam[0][1][1] = -s * c;
        gam[1][0][1] = c / s;
        gam[1][1][0] = c / s;
        if self.bump.is_some() {
            let conf = self.conformal_at(p);
            let [ea, eb] = unit_basis(p.chart, theta, phi);
            let ds = [dot(&conf.grad, &ea), dot(&conf.grad, &eb)];
            // Raised gradient with respect to the round metric diag(1, s^2).
            let up = [ds[0], ds[1] / (s * s)];
            let g0 = [1.0, s * s];
            for k in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        let mut v = 0.0;
                        if k == i {
                            v += ds[j];
                        }
                        if k == j {
                            v += ds[i];
                        }
                        if i == j {
                            v -= g0[i] * up[k];
                        }
                        gam[k][i][j] += v;
                    }
                }
            }
        }
        gam
    }

    /// Gaussian curvature at `p`.
    pub fn gaussian_curvature(&self, p: &ChartPoint) -> f64 {
        match p.chart {
            Chart::Plane => 0.0,
            _ => {
                let r = self.sphere_radius();
                let conf = self.conformal_at(p);
                (-2.0 * conf.sigma).exp() * (1.0 - conf.laplacian) / (r * r)
            }
        }
    }

    pub fn inner(&self, a: &TangentVector, b: &TangentVector) -> f64 {
        let g = self.metric(&a.base);
        let (x, y) = (a.components, b.components);
        g[0][0] * x[0] * y[0] + g[0][1] * (x[0] * y[1] + x[1] * y[0]) + g[1][1] * x[1] * y[1]
    }

    pub fn norm(&self, v: &TangentVector) -> f64 {
        self.inner(v, v).sqrt()
    }

    pub fn normalize_tangent(&self, v: &TangentVector) -> TangentVector {
        v.scaled(1.0 / self.norm(v))
    }

    /// Rotation by +90 degrees in the tangent plane (orientation given by the
    /// outward normal on spheres).
    pub fn rotate90(&self, v: &TangentVector) -> TangentVector {
        let g = self.metric(&v.base);
        let ratio = (g[0][0] / g[1][1]).sqrt();
        TangentVector::new(v.base, [-v.components[1] / ratio, v.components[0] * ratio])
    }

    /// Unit tangent at `p` making angle `alpha` with the first coordinate
    /// direction, measured in a g-orthonormal frame.
    pub fn unit_direction(&self, p: &ChartPoint, alpha: f64) -> TangentVector {
        let g = self.metric(p);
        TangentVector::new(*p, [alpha.cos() / g[0][0].sqrt(), alpha.sin() / g[1][1].sqrt()])
    }

    pub(crate) fn require_unit(&self, v: &TangentVector) -> Result<()> {
        let n2 = self.inner(v, v);
        if (n2 - 1.0).abs() > 1e-10 {
            return Err(Error::NonUnitTangent { norm: n2.sqrt() });
        }
        Ok(())
    }
}

impl Bump {
    /// Profile `b(rho) = exp(1 - 1/(1 - (rho/w)^2))` and two derivatives.
    fn profile(&self, rho: f64) -> (f64, f64, f64) {
        let w = self.width;
        let u = rho / w;
        if u >= 1.0 {
            return (0.0, 0.0, 0.0);
        }
        let q = 1.0 - u * u;
        let b = (1.0 - 1.0 / q).exp();
        let db = b * (-2.0 * u / (w * q * q));
        let d2b = b * (4.0 * u * u / (w * w * q.powi(4)) - 2.0 / (w * w) * (1.0 / (q * q) + 4.0 * u * u / q.powi(3)));
        (b, db, d2b)
    }

    fn conformal(&self, x: &Vec3) -> Conformal {
        let cosr = dot(x, &self.center).clamp(-1.0, 1.0);
        let cross = cross(x, &self.center);
        let sinr = dot(&cross, &cross).sqrt();
        let rho = sinr.atan2(cosr);
        let (b, db, d2b) = self.profile(rho);
        if b == 0.0 {
            return Conformal::FLAT;
        }
        let a = self.amplitude;
        let f = 1.0 + a * b;
        let sigma = f.ln();
        let ds = a * db / f;
        let d2s = a * d2b / f - ds * ds;
        let (ratio, laplacian) = if rho < 1e-6 {
            (d2s, 2.0 * d2s)
        } else {
            (ds / sinr, d2s + cosr / sinr * ds)
        };
        Conformal {
            sigma,
            grad: scale(self.center, -ratio),
            laplacian,
        }
    }
}

pub(crate) fn unit_from_chart(chart: Chart, theta: f64, phi: f64) -> Vec3 {
    let (s, c) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    permute(chart, [s * cp, s * sp, c])
}

pub(crate) fn chart_from_unit(chart: Chart, x: &Vec3) -> (f64, f64) {
    let u = unpermute(chart, *x);
    let rho = (u[0] * u[0] + u[1] * u[1]).sqrt();
    let theta = rho.atan2(u[2]);
    let phi = u[1].atan2(u[0]).rem_euclid(TAU);
    (theta, phi)
}

pub(crate) fn unit_basis(chart: Chart, theta: f64, phi: f64) -> [Vec3; 2] {
    let (s, c) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    [
        permute(chart, [c * cp, c * sp, -s]),
        permute(chart, [-s * sp, s * cp, 0.0]),
    ]
}

fn permute(chart: Chart, u: Vec3) -> Vec3 {
    match chart {
        Chart::Rotated => [u[2], u[0], u[1]],
        _ => u,
    }
}

fn unpermute(chart: Chart, x: Vec3) -> Vec3 {
    match chart {
        Chart::Rotated => [x[1], x[2], x[0]],
        _ => x,
    }
}

pub(crate) fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub(crate) fn add(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub(crate) fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn norm3(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn normalized(a: Vec3) -> Vec3 {
    scale(a, 1.0 / norm3(&a))
}

/// Angle between two nonzero vectors, accurate for small and large angles.
pub(crate) fn angle_between(a: &Vec3, b: &Vec3) -> f64 {
    norm3(&cross(a, b)).atan2(dot(a, b))
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;

    fn sample_points() -> Vec<ChartPoint> {
        let mut pts = Vec::new();
        for i in 1..8 {
            for j in 0..9 {
                let theta = i as f64 * PI / 8.0;
                let phi = j as f64 * TAU / 9.0 + 0.1;
                pts.push(ChartPoint::polar(theta, phi));
                pts.push(ChartPoint {
                    chart: Chart::Rotated,
                    coords: [theta, phi],
                });
            }
        }
        pts
    }

    fn surfaces() -> Vec<Surface> {
        vec![
            Surface::unit_sphere(),
            Surface::round_sphere(2.5).unwrap(),
            Surface::perturbed_sphere(0.05, [1.2, 0.4], 0.9).unwrap(),
            Surface::perturbed_sphere(-0.3, [PI / 2.0, 0.0], 1.3).unwrap(),
        ]
    }

    #[test]
    fn metric_is_spd_and_cometric_inverts_it() {
        for surf in surfaces() {
            for p in sample_points() {
                let g = surf.metric(&p);
                let gi = surf.cometric(&p);
                assert!(g[0][0] > 0.0 && g[0][0] * g[1][1] - g[0][1] * g[1][0] > 0.0);
                assert_eq!(g[0][1], g[1][0]);
                for i in 0..2 {
                    for j in 0..2 {
                        let v: f64 = (0..2).map(|k| gi[i][k] * g[k][j]).sum();
                        let id = if i == j { 1.0 } else { 0.0 };
                        assert!((v - id).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn round_christoffels_match_closed_form_and_torus_is_flat() {
        let s = Surface::unit_sphere();
        let p = ChartPoint::polar(0.7, 1.1);
        let g = s.christoffel(&p);
        assert!((g[0][1][1] + 0.7f64.sin() * 0.7f64.cos()).abs() < 1e-15);
        assert!((g[1][0][1] - 0.7f64.cos() / 0.7f64.sin()).abs() < 1e-15);
        assert_eq!(g[0][0][0], 0.0);
        let t = Surface::standard_torus();
        assert_eq!(t.christoffel(&ChartPoint::plane(1.0, 2.0)), [[[0.0; 2]; 2]; 2]);
    }

    /// Christoffels from central differences of the metric.
    fn christoffel_fd(surf: &Surface, p: &ChartPoint) -> [[[f64; 2]; 2]; 2] {
        let h = 1e-5;
        let mut dg = [[[0.0; 2]; 2]; 2]; // dg[l][i][j] = d_l g_ij
        for l in 0..2 {
            let mut a = *p;
            let mut b = *p;
            a.coords[l] += h;
            b.coords[l] -= h;
            let (ga, gb) = (surf.metric(&a), surf.metric(&b));
            for i in 0..2 {
                for j in 0..2 {
                    dg[l][i][j] = (ga[i][j] - gb[i][j]) / (2.0 * h);
                }
            }
        }
        let gi = surf.cometric(p);
        let mut out = [[[0.0; 2]; 2]; 2];
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    out[k][i][j] = (0..2)
                        .map(|l| 0.5 * gi[k][l] * (dg[i][l][j] + dg[j][l][i] - dg[l][i][j]))
                        .sum();
                }
            }
        }
        out
    }

    #[test]
    fn closed_form_christoffels_agree_with_metric_differences() {
        for surf in surfaces() {
            for p in sample_points() {
                let a = surf.christoffel(&p);
                let b = christoffel_fd(&surf, &p);
                for k in 0..2 {
                    for i in 0..2 {
                        for j in 0..2 {
                            assert!(
                                (a[k][i][j] - b[k][i][j]).abs() < 1e-7,
                                "{} {p:?} {k}{i}{j}: {} vs {}",
                                surf.name(),
                                a[k][i][j],
                                b[k][i][j]
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn curvature_of_perturbed_sphere_matches_brioschi_differences() {
        // For an orthogonal metric E, G: K = -1/(2 sqrt(EG)) [ d_u(G_u/sqrt(EG)) + d_v(E_v/sqrt(EG)) ].
        let surf = Surface::perturbed_sphere(0.2, [1.3, 0.5], 1.0).unwrap();
        let h = 1e-4;
        for p in sample_points().into_iter().filter(|p| p.chart == Chart::Polar) {
            let eg = |q: &ChartPoint| {
                let g = surf.metric(q);
                (g[0][0], g[1][1])
            };
            let at = |du: f64, dv: f64| ChartPoint::polar(p.coords[0] + du, p.coords[1] + dv);
            let term_u = |du: f64| {
                let q = at(du, 0.0);
                let (e, _) = eg(&q);
                let (_, gp) = eg(&at(du + h, 0.0));
                let (_, gm) = eg(&at(du - h, 0.0));
                let g = eg(&q).1;
                ((gp - gm) / (2.0 * h)) / (e * g).sqrt()
            };
            let term_v = |dv: f64| {
                let q = at(0.0, dv);
                let (e, g) = eg(&q);
                let (ep, _) = eg(&at(0.0, dv + h));
                let (em, _) = eg(&at(0.0, dv - h));
                ((ep - em) / (2.0 * h)) / (e * g).sqrt()
            };
            let (e, g) = eg(&p);
            let k = -1.0 / (2.0 * (e * g).sqrt())
                * ((term_u(h) - term_u(-h)) / (2.0 * h) + (term_v(h) - term_v(-h)) / (2.0 * h));
            let exact = surf.gaussian_curvature(&p);
            assert!((k - exact).abs() < 1e-5, "{p:?}: {k} vs {exact}");
        }
    }

    #[test]
    fn charts_round_trip_through_embedding() {
        let surf = Surface::perturbed_sphere(0.1, [0.3, 0.0], 0.5).unwrap();
        for p in sample_points() {
            let x = surf.embed(&p);
            let q = surf.project(&x);
            let y = surf.embed(&q);
            assert!(norm3(&sub(&x, &y)) < 1e-14);
            let back = surf.to_chart(&q, p.chart);
            assert!((back.coords[0] - p.coords[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn rotate90_is_isometric_and_orthogonal() {
        for surf in surfaces() {
            for p in sample_points() {
                let v = surf.unit_direction(&p, 0.37);
                let w = surf.rotate90(&v);
                assert!((surf.norm(&w) - 1.0).abs() < 1e-12);
                assert!(surf.inner(&v, &w).abs() < 1e-12);
                // Orientation: v x w points outward.
                let n = cross(&surf.lift_tangent(&v), &surf.lift_tangent(&w));
                assert!(dot(&n, &surf.embed(&p)) > 0.0);
            }
        }
    }

    #[test]
    fn descriptor_validation() {
        assert!(Surface::round_sphere(-1.0).is_err());
        assert!(Surface::flat_torus([1.0, 0.0]).is_err());
        assert!(Surface::perturbed_sphere(1.5, [0.0, 0.0], 0.5).is_err());
        assert!(Surface::perturbed_sphere(0.05, [0.0, 0.0], 2.0).is_err());
    }

    #[test]
    fn torus_points_reduce_modulo_periods() {
        let t = Surface::flat_torus([2.0, 3.0]).unwrap();
        let p = t.normalize(ChartPoint::plane(5.5, -0.5));
        assert!((p.coords[0] - 1.5).abs() < 1e-15 && (p.coords[1] - 2.5).abs() < 1e-15);
    }
}
