//! Geodesic integration.
//!
//! The geodesic flow is integrated in Hamiltonian form `x' = g^{-1} p`,
//! `p_k' = -1/2 d_k g^{ij} p_i p_j` with an adaptive Dormand–Prince 5(4)
//! scheme. The state also carries a parallel-transported vector and the
//! scalar normal Jacobi field `J'' + K J = 0`, `J(0) = 1`, `J'(0) = 0`,
//! which together give Fermi coordinates without any re-orthonormalization.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;

use super::surface::{
    add, cross, dot, norm3, normalized, scale, unit_basis, unit_from_chart, Chart, ChartPoint, Surface,
    SurfaceDescriptor, TangentVector, Vec3, CHART_SWITCH_SIN, PERTURBED_MAX_LENGTH,
};
use crate::error::{Error, Result};

/// Default relative tolerance of the geodesic integrator.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;
const MAX_STEP: f64 = 0.1;
const MAX_STEPS: usize = 2_000_000;

/// Integrator state: position, momentum, transported vector, Jacobi pair.
#[derive(Debug, Clone, Copy)]
pub(crate) struct GeoState {
    pub chart: Chart,
    pub y: [f64; 8],
}

impl GeoState {
    pub(crate) fn new(surface: &Surface, v: &TangentVector, transported: &TangentVector) -> Self {
        let g = surface.metric(&v.base);
        let c = v.components;
        let n = transported.components;
        GeoState {
            chart: v.base.chart,
            y: [
                v.base.coords[0],
                v.base.coords[1],
                g[0][0] * c[0] + g[0][1] * c[1],
                g[1][0] * c[0] + g[1][1] * c[1],
                n[0],
                n[1],
                1.0,
                0.0,
            ],
        }
    }

    pub(crate) fn point(&self) -> ChartPoint {
        ChartPoint {
            chart: self.chart,
            coords: [self.y[0], self.y[1]],
        }
    }

    pub(crate) fn velocity(&self, surface: &Surface) -> TangentVector {
        let p = self.point();
        let gi = surface.cometric(&p);
        TangentVector::new(
            p,
            [
                gi[0][0] * self.y[2] + gi[0][1] * self.y[3],
                gi[1][0] * self.y[2] + gi[1][1] * self.y[3],
            ],
        )
    }

    pub(crate) fn transported(&self) -> TangentVector {
        TangentVector::new(self.point(), [self.y[4], self.y[5]])
    }

    pub(crate) fn jacobi(&self) -> (f64, f64) {
        (self.y[6], self.y[7])
    }
}

fn rhs(surface: &Surface, chart: Chart, y: &[f64; 8]) -> [f64; 8] {
    let p = ChartPoint {
        chart,
        coords: [y[0], y[1]],
    };
    let gi = surface.cometric(&p);
    let vel = [gi[0][0] * y[2], gi[1][1] * y[3]];
    let mut dp = [0.0; 2];
    if chart != Chart::Plane {
        let r = surface.sphere_radius();
        let conf = surface.conformal_at(&p);
        let (s, c) = y[0].sin_cos();
        let [ea, eb] = unit_basis(chart, y[0], y[1]);
        let ds = [dot(&conf.grad, &ea), dot(&conf.grad, &eb)];
        let inv = (-2.0 * conf.sigma).exp() / (r * r);
        let kin = y[2] * y[2] + y[3] * y[3] / (s * s);
        dp[0] = inv * (ds[0] * kin + c * y[3] * y[3] / (s * s * s));
        dp[1] = inv * ds[1] * kin;
    }
    let gam = surface.christoffel(&p);
    let mut dn = [0.0; 2];
    for (k, dnk) in dn.iter_mut().enumerate() {
        let mut acc = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                acc += gam[k][i][j] * vel[i] * y[4 + j];
            }
        }
        *dnk = -acc;
    }
    let curvature = surface.gaussian_curvature(&p);
    [vel[0], vel[1], dp[0], dp[1], dn[0], dn[1], y[7], -curvature * y[6]]
}

/// Moves a spherical state into the other chart when it nears a pole.
fn maybe_switch_chart(surface: &Surface, state: &mut GeoState) -> bool {
    if state.chart == Chart::Plane || state.y[0].sin() >= CHART_SWITCH_SIN {
        return false;
    }
    let v = state.velocity(surface);
    let n = state.transported();
    let lifted_v = surface.lift_tangent(&v);
    let lifted_n = surface.lift_tangent(&n);
    let target = state.chart.other();
    let q = surface.to_chart(&state.point(), target);
    let v2 = surface.lower_tangent(&q, &lifted_v);
    let n2 = surface.lower_tangent(&q, &lifted_n);
    let (j, dj) = state.jacobi();
    let mut next = GeoState::new(surface, &v2, &n2);
    next.y[6] = j;
    next.y[7] = dj;
    *state = next;
    true
}

// Dormand–Prince 5(4) tableau.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates from arc length 0 and returns the state at each requested
/// arc length (sorted, nonnegative).
pub(crate) fn integrate(surface: &Surface, start: GeoState, outputs: &[f64], tol: f64) -> Result<Vec<GeoState>> {
    debug_assert!(outputs.windows(2).all(|w| w[0] <= w[1]));
    let mut out = Vec::with_capacity(outputs.len());
    let mut state = start;
    maybe_switch_chart(surface, &mut state);
    let mut s = 0.0;
    let mut idx = 0;
    while idx < outputs.len() && outputs[idx] <= 0.0 {
        out.push(state);
        idx += 1;
    }
    let mut k = [[0.0f64; 8]; 7];
    k[0] = rhs(surface, state.chart, &state.y);
    let mut h_prop = (tol.powf(0.2) * 0.5).min(MAX_STEP);
    let mut steps = 0;
    while idx < outputs.len() {
        steps += 1;
        if steps > MAX_STEPS {
            return Err(Error::InvalidArgument(
                "geodesic integrator exceeded its step budget".into(),
            ));
        }
        let target = outputs[idx];
        let remaining = target - s;
        let clipped = h_prop >= remaining;
        let h = if clipped { remaining } else { h_prop };
        for stage in 1..7 {
            let mut ys = state.y;
            for (i, ysi) in ys.iter_mut().enumerate() {
                let mut acc = 0.0;
                for j in 0..stage {
                    acc += A[stage][j] * k[j][i];
                }
                *ysi += h * acc;
            }
            k[stage] = rhs(surface, state.chart, &ys);
        }
        let mut y_new = state.y;
        for (i, yi) in y_new.iter_mut().enumerate() {
            let mut acc = 0.0;
            for j in 0..6 {
                acc += A[6][j] * k[j][i];
            }
            *yi += h * acc;
        }
        let mut err = 0.0f64;
        for i in 0..8 {
            let mut e = 0.0;
            for j in 0..7 {
                e += E[j] * k[j][i];
            }
            let sc = tol * (1.0 + state.y[i].abs().max(y_new[i].abs()));
            err = err.max((h * e).abs() / sc);
        }
        if !err.is_finite() {
            h_prop = h * 0.2;
            if h_prop < 1e-14 {
                return Err(Error::InvalidArgument("geodesic integrator diverged".into()));
            }
            continue;
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        if err <= 1.0 {
            s = if clipped { target } else { s + h };
            state.y = y_new;
            k[0] = k[6];
            if maybe_switch_chart(surface, &mut state) {
                k[0] = rhs(surface, state.chart, &state.y);
            }
            let proposal = (h * factor).min(MAX_STEP);
            h_prop = if clipped { h_prop.max(proposal) } else { proposal };
            while idx < outputs.len() && outputs[idx] <= s {
                out.push(state);
                idx += 1;
            }
        } else {
            h_prop = h * factor;
            if h_prop < 1e-14 {
                return Err(Error::InvalidArgument("geodesic step size underflow".into()));
            }
        }
    }
    Ok(out)
}

/// Lifted position (unwrapped on the torus) of an integrator state.
pub(crate) fn lifted_position(surface: &Surface, state: &GeoState) -> Vec3 {
    match state.chart {
        Chart::Plane => [state.y[0], state.y[1], 0.0],
        chart => scale(unit_from_chart(chart, state.y[0], state.y[1]), surface.sphere_radius()),
    }
}

/// One sample of a geodesic path.
#[derive(Debug, Clone, Copy)]
pub struct GeodesicSample {
    pub s: f64,
    pub point: ChartPoint,
    pub tangent: TangentVector,
    /// Parallel-transported unit normal.
    pub normal: TangentVector,
}

/// Arc-length parametrized geodesic.
#[derive(Debug, Clone)]
pub struct GeodesicPath {
    surface: Surface,
    samples: Vec<GeodesicSample>,
    lifted: Vec<(Vec3, Vec3)>,
    total_length: f64,
    endpoint_error: f64,
}

impl GeodesicPath {
    pub fn samples(&self) -> &[GeodesicSample] {
        &self.samples
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    pub fn surface(&self) -> &Surface {
        &self.surface
    }

    /// Difference between the endpoint and that of a re-integration at a
    /// tolerance 32 times smaller (roughly half the step size).
    pub fn endpoint_error(&self) -> f64 {
        self.endpoint_error
    }

    pub fn start(&self) -> &GeodesicSample {
        &self.samples[0]
    }

    pub fn end(&self) -> &GeodesicSample {
        self.samples.last().expect("paths have at least two samples")
    }

    /// Position and unit tangent at arc length `s` (clamped to the path).
    ///
    /// Round spheres and tori use the exact exponential map from the start;
    /// otherwise the samples are interpolated with cubic Hermite splines in
    /// the lifted coordinates.
    pub fn point_at(&self, s: f64) -> (ChartPoint, TangentVector) {
        let s = s.clamp(0.0, self.total_length);
        if has_closed_form(&self.surface) {
            let st = self.start();
            let (p, t, _) = closed_form_exp(&self.surface, &st.point, &st.tangent, s);
            return (p, t);
        }
        let (x, v) = self.lifted_at(s);
        let p = self.surface.project(&x);
        let t = self.surface.lower_tangent(&p, &v);
        (p, self.surface.normalize_tangent(&t))
    }

    /// Lifted position and velocity at arc length `s` by Hermite interpolation.
    pub fn lifted_at(&self, s: f64) -> (Vec3, Vec3) {
        let s = s.clamp(0.0, self.total_length);
        let n = self.samples.len();
        let i = match self
            .samples
            .binary_search_by(|smp| smp.s.partial_cmp(&s).expect("finite arc length"))
        {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        };
        let (s0, s1) = (self.samples[i].s, self.samples[i + 1].s);
        let h = s1 - s0;
        let tau = (s - s0) / h;
        let (p0, v0) = self.lifted[i];
        let (p1, v1) = self.lifted[i + 1];
        let t2 = tau * tau;
        let t3 = t2 * tau;
        let (h00, h10, h01, h11) = (
            2.0 * t3 - 3.0 * t2 + 1.0,
            t3 - 2.0 * t2 + tau,
            -2.0 * t3 + 3.0 * t2,
            t3 - t2,
        );
        let (d00, d10, d01, d11) = (
            6.0 * t2 - 6.0 * tau,
            3.0 * t2 - 4.0 * tau + 1.0,
            -6.0 * t2 + 6.0 * tau,
            3.0 * t2 - 2.0 * tau,
        );
        let mut x = [0.0; 3];
        let mut v = [0.0; 3];
        for k in 0..3 {
            x[k] = h00 * p0[k] + h10 * h * v0[k] + h01 * p1[k] + h11 * h * v1[k];
            v[k] = (d00 * p0[k] + d01 * p1[k]) / h + d10 * v0[k] + d11 * v1[k];
        }
        (x, v)
    }

    /// Length recomputed by Gauss–Legendre integration of the metric speed of
    /// the interpolated path.
    pub fn measured_length(&self) -> f64 {
        let mut total = 0.0;
        let (x, w) = crate::quadrature::gauss_legendre(8);
        for pair in self.samples.windows(2) {
            let (a, b) = (pair[0].s, pair[1].s);
            for (xi, wi) in x.iter().zip(&w) {
                let s = 0.5 * (a + b) + 0.5 * (b - a) * xi;
                let (p, v) = self.lifted_at(s);
                total += 0.5 * (b - a) * wi * self.surface.lifted_inner(&p, &v, &v).sqrt();
            }
        }
        total
    }

    /// Writes `s, coord1, coord2, v1, v2` rows with a header.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        w.write_record(["s", "coord1", "coord2", "v1", "v2"])?;
        for smp in &self.samples {
            w.write_record(&[
                smp.s.to_string(),
                smp.point.coords[0].to_string(),
                smp.point.coords[1].to_string(),
                smp.tangent.components[0].to_string(),
                smp.tangent.components[1].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Options for [`geodesic_shoot_with`].
#[derive(Debug, Clone, Copy)]
pub struct ShootOptions {
    pub tolerance: f64,
    pub samples_per_unit_length: usize,
    /// Re-integrate at tolerance/32 to estimate the endpoint error.
    pub estimate_error: bool,
}

impl Default for ShootOptions {
    fn default() -> Self {
        ShootOptions {
            tolerance: DEFAULT_TOLERANCE,
            samples_per_unit_length: 64,
            estimate_error: true,
        }
    }
}

/// Integrates the geodesic through `p` with unit initial velocity `v`.
pub fn geodesic_shoot(surface: &Surface, v: &TangentVector, length: f64) -> Result<GeodesicPath> {
    geodesic_shoot_with(surface, v, length, ShootOptions::default())
}

pub fn geodesic_shoot_with(
    surface: &Surface,
    v: &TangentVector,
    length: f64,
    opts: ShootOptions,
) -> Result<GeodesicPath> {
    validate_shot(surface, v, length)?;
    let n = ((length * opts.samples_per_unit_length as f64).ceil() as usize).max(16);
    let outputs: Vec<f64> = (0..=n)
        .map(|i| if i == n { length } else { length * i as f64 / n as f64 })
        .collect();
    let normal = surface.rotate90(v);
    let states = integrate(surface, GeoState::new(surface, v, &normal), &outputs, opts.tolerance)?;
    let endpoint_error = if opts.estimate_error {
        let fine = integrate(
            surface,
            GeoState::new(surface, v, &normal),
            &[length],
            opts.tolerance / 32.0,
        )?;
        let a = lifted_position(surface, states.last().expect("nonempty"));
        let b = lifted_position(surface, &fine[0]);
        norm3(&super::surface::sub(&a, &b))
    } else {
        0.0
    };
    Ok(build_path(surface, &outputs, &states, endpoint_error))
}

fn validate_shot(surface: &Surface, v: &TangentVector, length: f64) -> Result<()> {
    surface.check_chart(&v.base)?;
    surface.require_unit(v)?;
    if !(length.is_finite() && length > 0.0) {
        return Err(Error::InvalidArgument(format!("geodesic length {length}")));
    }
    if surface.is_perturbed() && length > PERTURBED_MAX_LENGTH {
        return Err(Error::ChartTransition {
            length,
            limit: PERTURBED_MAX_LENGTH,
        });
    }
    Ok(())
}

fn build_path(surface: &Surface, outputs: &[f64], states: &[GeoState], endpoint_error: f64) -> GeodesicPath {
    let mut samples = Vec::with_capacity(states.len());
    let mut lifted = Vec::with_capacity(states.len());
    for (&s, st) in outputs.iter().zip(states) {
        let vel = st.velocity(surface);
        let x = lifted_position(surface, st);
        let dx = surface.lift_tangent(&vel);
        let point = surface.normalize(st.point());
        samples.push(GeodesicSample {
            s,
            point,
            tangent: TangentVector::new(point, vel.components),
            normal: TangentVector::new(point, st.transported().components),
        });
        lifted.push((x, dx));
    }
    GeodesicPath {
        surface: surface.clone(),
        total_length: *outputs.last().expect("nonempty"),
        samples,
        lifted,
        endpoint_error,
    }
}

pub(crate) fn has_closed_form(surface: &Surface) -> bool {
    matches!(
        surface.descriptor(),
        SurfaceDescriptor::RoundSphere { .. } | SurfaceDescriptor::FlatTorus { .. }
    )
}

/// Exact exponential map on round spheres and flat tori: returns the point
/// at arc length `t` along the geodesic with unit velocity `v`, the unit
/// tangent there, and the normal Jacobi field value.
pub(crate) fn closed_form_exp(
    surface: &Surface,
    p: &ChartPoint,
    v: &TangentVector,
    t: f64,
) -> (ChartPoint, TangentVector, f64) {
    match surface.descriptor() {
        SurfaceDescriptor::FlatTorus { .. } => {
            let q = surface.normalize(ChartPoint::plane(
                p.coords[0] + t * v.components[0],
                p.coords[1] + t * v.components[1],
            ));
            (q, TangentVector::new(q, v.components), 1.0)
        }
        _ => {
            let r = surface.sphere_radius();
            let x = scale(surface.embed(p), 1.0 / r);
            let e = normalized(surface.lift_tangent(v));
            let (sn, cs) = (t / r).sin_cos();
            let y = add(&scale(x, cs), &scale(e, sn));
            let dy = add(&scale(x, -sn), &scale(e, cs));
            let q = surface.project(&scale(y, r));
            let tan = surface.lower_tangent(&q, &dy);
            (q, surface.normalize_tangent(&tan), cs)
        }
    }
}

/// Points, unit tangents and Jacobi values along the geodesic from `v.base`
/// with unit initial velocity `v`, at the signed arc lengths `ts`.
/// Negative arc lengths follow `-v`.
pub(crate) fn sweep(
    surface: &Surface,
    v: &TangentVector,
    ts: &[f64],
    tol: f64,
) -> Result<Vec<(ChartPoint, TangentVector, f64)>> {
    if has_closed_form(surface) {
        return Ok(ts.iter().map(|&t| closed_form_exp(surface, &v.base, v, t)).collect());
    }
    let mut result = vec![None; ts.len()];
    for sign in [1.0, -1.0] {
        let mut idx: Vec<usize> = (0..ts.len())
            .filter(|&i| if sign > 0.0 { ts[i] >= 0.0 } else { ts[i] < 0.0 })
            .collect();
        if idx.is_empty() {
            continue;
        }
        idx.sort_by(|&a, &b| ts[a].abs().partial_cmp(&ts[b].abs()).expect("finite"));
        let outputs: Vec<f64> = idx.iter().map(|&i| ts[i].abs()).collect();
        let dir = v.scaled(sign);
        let normal = surface.rotate90(&dir);
        let states = integrate(surface, GeoState::new(surface, &dir, &normal), &outputs, tol)?;
        for (&i, st) in idx.iter().zip(&states) {
            let q = surface.normalize(st.point());
            let vel = st.velocity(surface);
            let tan = TangentVector::new(q, vel.components).scaled(sign);
            result[i] = Some((q, tan, st.jacobi().0));
        }
    }
    Ok(result.into_iter().map(|r| r.expect("every output filled")).collect())
}

/// Exponential map at `v.base` applied to the (not necessarily unit) vector
/// `v`, returned as a lifted point (unwrapped on the torus).
pub(crate) fn exp_lifted(surface: &Surface, v: &TangentVector, tol: f64) -> Result<Vec3> {
    let len = surface.norm(v);
    if len == 0.0 {
        return Ok(surface.embed(&v.base));
    }
    let dir = v.scaled(1.0 / len);
    let normal = surface.rotate90(&dir);
    let st = integrate(surface, GeoState::new(surface, &dir, &normal), &[len], tol)?;
    Ok(lifted_position(surface, &st[0]))
}

/// Unit geodesic with the given start and direction: closed form where
/// available, integrated otherwise.
pub fn unit_geodesic(surface: &Surface, v: &TangentVector) -> Result<GeodesicPath> {
    geodesic_segment(surface, v, 1.0)
}

pub fn geodesic_segment(surface: &Surface, v: &TangentVector, length: f64) -> Result<GeodesicPath> {
    if !has_closed_form(surface) {
        return geodesic_shoot_with(
            surface,
            v,
            length,
            ShootOptions {
                estimate_error: false,
                ..ShootOptions::default()
            },
        );
    }
    validate_shot(surface, v, length)?;
    let n = ((length * 64.0).ceil() as usize).max(16);
    let mut samples = Vec::with_capacity(n + 1);
    let mut lifted = Vec::with_capacity(n + 1);
    let start_lift = surface.embed(&v.base);
    let dir_lift = surface.lift_tangent(v);
    let normal0 = surface.rotate90(v);
    let normal_lift = surface.lift_tangent(&normal0);
    for i in 0..=n {
        let s = if i == n { length } else { length * i as f64 / n as f64 };
        let (q, t, _) = closed_form_exp(surface, &v.base, v, s);
        let (x, dx) = if surface.is_spherical() {
            let r = surface.sphere_radius();
            let (sn, cs) = (s / r).sin_cos();
            let u = scale(start_lift, 1.0 / r);
            let e = normalized(dir_lift);
            (
                scale(add(&scale(u, cs), &scale(e, sn)), r),
                add(&scale(u, -sn), &scale(e, cs)),
            )
        } else {
            (add(&start_lift, &scale(dir_lift, s)), dir_lift)
        };
        // The normal stays perpendicular to the great circle plane.
        let normal = if surface.is_spherical() {
            let nl = normalized(normal_lift);
            surface.lower_tangent(&q, &nl)
        } else {
            TangentVector::new(q, normal0.components)
        };
        samples.push(GeodesicSample {
            s,
            point: q,
            tangent: t,
            normal,
        });
        lifted.push((x, dx));
    }
    Ok(GeodesicPath {
        surface: surface.clone(),
        samples,
        lifted,
        total_length: length,
        endpoint_error: 0.0,
    })
}

/// Base-point grid for [`sample_unit_geodesics`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct BaseGrid {
    pub rows: usize,
    pub cols: usize,
}

impl BaseGrid {
    pub fn new(rows: usize, cols: usize) -> Self {
        BaseGrid { rows, cols }
    }

    /// Base points in row-major order: colatitudes `(i + 1/2) pi / rows` and
    /// longitudes `2 pi j / cols` on spheres; `i P1 / rows`, `j P2 / cols` on tori.
    pub fn points(&self, surface: &Surface) -> Vec<ChartPoint> {
        let mut pts = Vec::with_capacity(self.rows * self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                pts.push(match surface.periods() {
                    Some(per) => ChartPoint::plane(
                        per[0] * i as f64 / self.rows as f64,
                        per[1] * j as f64 / self.cols as f64,
                    ),
                    None => ChartPoint::polar(
                        (i as f64 + 0.5) * PI / self.rows as f64,
                        TAU * j as f64 / self.cols as f64,
                    ),
                });
            }
        }
        pts
    }
}

/// Unit directions `2 pi k / count` at `p` in the orthonormal coordinate frame.
pub fn directions(surface: &Surface, p: &ChartPoint, count: usize) -> Vec<TangentVector> {
    (0..count)
        .map(|k| surface.unit_direction(p, TAU * k as f64 / count as f64))
        .collect()
}

/// Deterministic family of unit geodesics: every base point of the grid
/// (row-major) times `direction_count` equispaced directions.
pub fn sample_unit_geodesics(
    surface: &Surface,
    base_grid: BaseGrid,
    direction_count: usize,
) -> Result<Vec<GeodesicPath>> {
    if direction_count < 4 {
        return Err(Error::InvalidArgument(format!(
            "direction_count = {direction_count} < 4"
        )));
    }
    let starts: Vec<TangentVector> = base_grid
        .points(surface)
        .iter()
        .flat_map(|p| directions(surface, p, direction_count))
        .collect();
    starts
        .par_iter()
        .map(|v| {
            geodesic_shoot_with(
                surface,
                v,
                1.0,
                ShootOptions {
                    estimate_error: false,
                    ..ShootOptions::default()
                },
            )
        })
        .collect()
}

/// Great-circle angular distance from a lifted sphere point to the plane of
/// the equator `z = 0`, i.e. |latitude|.
pub fn latitude(x: &Vec3) -> f64 {
    let r = norm3(x);
    (x[2] / r).asin()
}

/// Unit normal of the great circle carrying a spherical path.
pub fn great_circle_pole(path: &GeodesicPath) -> Vec3 {
    let (x, v) = path.lifted_at(0.0);
    normalized(cross(&x, &v))
}
