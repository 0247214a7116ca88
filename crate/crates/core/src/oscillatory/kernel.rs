use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::probe::PhaseProbe;
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre_on;

/// Smooth bump amplitude `a(x, t, t') = beta(|x - c| / r) eta(t) eta(t')`,
/// with `eta = 1` on `|t| <= t_plateau` and `0` for `|t| >= t_support`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelSpec {
    pub center: [f64; 2],
    pub x_radius: f64,
    pub t_plateau: f64,
    pub t_support: f64,
    pub nodes_per_wavelength: f64,
    /// Largest lambda accepted (quadrature cost grows like lambda^2).
    pub max_lambda: f64,
    /// Accepted relative difference against the doubled grid.
    pub tolerance: f64,
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec {
            center: [-0.3, 0.0],
            x_radius: 0.1,
            t_plateau: 0.75,
            t_support: 1.1,
            nodes_per_wavelength: 10.0,
            max_lambda: 200.0,
            tolerance: 1e-4,
        }
    }
}

fn bump(r: f64) -> f64 {
    if r.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - r * r)).exp()
    }
}

fn smooth_step(x: f64) -> f64 {
    let f = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
    let (a, b) = (f(x), f(1.0 - x));
    a / (a + b)
}

impl KernelSpec {
    pub fn t_profile(&self, t: f64) -> f64 {
        smooth_step((self.t_support - t.abs()) / (self.t_support - self.t_plateau))
    }

    fn x_amplitude(&self, x: [f64; 2]) -> f64 {
        let r = (x[0] - self.center[0]).hypot(x[1] - self.center[1]) / self.x_radius;
        bump(r)
    }

    /// Gauss–Legendre nodes per side of the x-square for a given lambda:
    /// `nodes_per_wavelength` per period of a phase with gradient up to 4.
    pub fn nodes_per_side(&self, lambda: f64) -> usize {
        let side = 2.0 * self.x_radius;
        ((side * self.nodes_per_wavelength * 4.0 * lambda / TAU).ceil() as usize).max(48)
    }

    /// x-nodes with weights `w |beta|^2`, skipping those outside the support.
    fn x_nodes(&self, n: usize) -> (Vec<[f64; 2]>, Vec<f64>) {
        let r = self.x_radius;
        let (a, wa) = gauss_legendre_on(n, self.center[0] - r, self.center[0] + r);
        let (b, wb) = gauss_legendre_on(n, self.center[1] - r, self.center[1] + r);
        let mut xs = Vec::new();
        let mut ws = Vec::new();
        for (x1, w1) in a.iter().zip(&wa) {
            for (x2, w2) in b.iter().zip(&wb) {
                let amp = self.x_amplitude([*x1, *x2]);
                if amp > 0.0 {
                    xs.push([*x1, *x2]);
                    ws.push(w1 * w2 * amp * amp);
                }
            }
        }
        (xs, ws)
    }

    /// `int |a(x, t, t')|^2 dx` for the diagonal pair `(t, t')`.
    pub fn diagonal(&self, t: f64, tp: f64) -> f64 {
        let (_, ws) = self.x_nodes(256);
        let e = self.t_profile(t) * self.t_profile(tp);
        ws.iter().sum::<f64>() * e * e
    }

    fn check_cost(&self, lambda: f64) -> Result<usize> {
        let n = self.nodes_per_side(lambda);
        if lambda > self.max_lambda {
            return Err(Error::CostBound {
                lambda,
                bound: self.max_lambda,
                required_nodes: n,
            });
        }
        Ok(n)
    }
}

/// `(t, t')` from `v = (u1^2 / 2, u2)` with `u = (t - t', t + t')`, `u1 >= 0`.
pub fn v_to_t(v: [f64; 2]) -> [f64; 2] {
    let u1 = (2.0 * v[0].max(0.0)).sqrt();
    [(v[1] + u1) / 2.0, (v[1] - u1) / 2.0]
}

fn kernel_on(
    probe: &dyn PhaseProbe,
    spec: &KernelSpec,
    lambda: f64,
    tt: [f64; 2],
    ss: [f64; 2],
    n: usize,
) -> Result<Complex64> {
    let (xs, ws) = spec.x_nodes(n);
    let amp = spec.t_profile(tt[0]) * spec.t_profile(tt[1]) * spec.t_profile(ss[0]) * spec.t_profile(ss[1]);
    let ts = [tt[0], tt[1], ss[0], ss[1]];
    let table = probe.phase_table(&xs, &ts)?;
    let sum: Complex64 = table
        .chunks(4)
        .zip(&ws)
        .map(|(p, w)| Complex64::from_polar(*w, lambda * ((p[0] + p[1]) - (p[2] + p[3]))))
        .sum();
    Ok(sum * amp)
}

/// `K_lambda` at `(t, t')`, `(t~, t~')`, checked against a doubled grid.
pub fn kernel_at(
    probe: &dyn PhaseProbe,
    spec: &KernelSpec,
    lambda: f64,
    tt: [f64; 2],
    ss: [f64; 2],
) -> Result<Complex64> {
    let n = spec.check_cost(lambda)?;
    let k = kernel_on(probe, spec, lambda, tt, ss, n)?;
    let fine = kernel_on(probe, spec, lambda, tt, ss, 2 * n)?;
    let scale = spec.diagonal(tt[0], tt[1]).max(spec.diagonal(ss[0], ss[1]));
    let err = (k - fine).norm() / scale;
    if err > spec.tolerance {
        return Err(Error::Quadrature(format!(
            "bilinear kernel at lambda = {lambda}: relative difference {err} against the doubled grid"
        )));
    }
    Ok(fine)
}

/// `K_lambda(v, v~) = int a(x, v) conj(a(x, v~)) e^{i lambda [Phi(x, v) - Phi(x, v~)]} dx`
/// with `Phi(x; t, t') = phi(x, t) + phi(x, t')`.
pub fn bilinear_kernel(
    probe: &dyn PhaseProbe,
    spec: &KernelSpec,
    lambda: f64,
    v: [f64; 2],
    v_tilde: [f64; 2],
) -> Result<Complex64> {
    kernel_at(probe, spec, lambda, v_to_t(v), v_to_t(v_tilde))
}

/// Row integral over `|t - t'| >= N lambda^{-1/2}` at the maximizing peak.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RowIntegral {
    pub n: usize,
    pub value: f64,
    /// The `(t~, t~')` attaining the sup over the sampled peaks.
    pub peak: [f64; 2],
}

/// Peak separations `t~ - t~'` from 0 to the edge of the amplitude plateau
/// in steps of `spacing`.
pub fn peak_grid(spec: &KernelSpec, spacing: f64) -> Vec<f64> {
    let count = (2.0 * spec.t_plateau / spacing).floor() as usize;
    (0..=count).map(|i| i as f64 * spacing).collect()
}

/// `sup int_{|t - t'| >= N lambda^{-1/2}} |K_lambda(t, t'; t~, t~')| dt dt'`
/// over symmetric peaks `(t~, t~') = (u/2, -u/2)`, `u` in `separations`.
///
/// `|K|` varies slowly compared with `K` itself, so the `(t, t')` integral
/// runs over the whole amplitude support on a uniform grid of spacing
/// `step`; the half `t < t'` is added by the symmetry `t <-> t'`.
pub fn row_integral(
    probe: &dyn PhaseProbe,
    spec: &KernelSpec,
    lambda: f64,
    n: usize,
    separations: &[f64],
    step: f64,
) -> Result<RowIntegral> {
    let nodes = spec.check_cost(lambda)?;
    let (xs, ws) = spec.x_nodes(nodes);
    let cut = n as f64 / lambda.sqrt();
    let m = (2.0 * spec.t_support / step).ceil() as usize;
    let h = 2.0 * spec.t_support / m as f64;
    let ts: Vec<f64> = (0..m).map(|i| -spec.t_support + h * (i as f64 + 0.5)).collect();
    let profile: Vec<f64> = ts.iter().map(|&t| spec.t_profile(t)).collect();
    let table = probe.phase_table(&xs, &ts)?;
    // e[i][x] = e^{i lambda phi(x, t_i)}, contiguous per t node.
    let e: Vec<Vec<Complex64>> = (0..m)
        .map(|i| {
            (0..xs.len())
                .map(|x| Complex64::from_polar(1.0, lambda * table[x * m + i]))
                .collect()
        })
        .collect();
    let mut best = RowIntegral {
        n,
        value: f64::NEG_INFINITY,
        peak: [0.0, 0.0],
    };
    for &u1 in separations {
        let peak = [u1 / 2.0, -u1 / 2.0];
        let ref_phase = probe.phase_table(&xs, &peak)?;
        let amp_peak = spec.t_profile(peak[0]) * spec.t_profile(peak[1]);
        let coeff: Vec<Complex64> = (0..xs.len())
            .map(|x| Complex64::from_polar(ws[x], -lambda * (ref_phase[2 * x] + ref_phase[2 * x + 1])))
            .collect();
        let rows: Vec<f64> = (0..m)
            .into_par_iter()
            .map(|i| {
                if profile[i] == 0.0 {
                    return 0.0;
                }
                let d: Vec<Complex64> = coeff.iter().zip(&e[i]).map(|(c, v)| c * v).collect();
                let mut acc = 0.0;
                for j in 0..m {
                    if ts[i] - ts[j] < cut || profile[j] == 0.0 {
                        continue;
                    }
                    let s: Complex64 = d.iter().zip(&e[j]).map(|(p, q)| p * q).sum();
                    acc += s.norm() * profile[i] * profile[j] * amp_peak;
                }
                acc
            })
            .collect();
        let value = 2.0 * rows.iter().sum::<f64>() * h * h;
        if value > best.value {
            best = RowIntegral { n, value, peak };
        }
    }
    Ok(best)
}
