//! Numerical checks of the oscillatory-integral ingredients: the
//! Carleson–Sjölin determinant of the distance phase, off-diagonal decay of
//! the bilinear kernel, and the almost-orthogonality Gram bound.

mod gram;
mod kernel;
mod partition;
mod probe;

use crate::error::{Error, Result};

pub use gram::{gram_cutoff, gram_norm, gram_norm_unchecked, gram_quadratic_form, GramCheck, GramConfig};
pub use kernel::{bilinear_kernel, kernel_at, peak_grid, row_integral, v_to_t, KernelSpec, RowIntegral};
pub use partition::{partition_cutoffs, partition_profile, Cutoff};
pub use probe::{DegenerateProbe, EuclideanProbe, PhaseProbe, ProbeWindow, SurfaceProbe};

/// Differencing steps for the mixed derivatives.
pub const CS_STEPS: [f64; 3] = [1e-3, 5e-4, 2.5e-4];
/// Required agreement of the two Richardson extrapolants.
pub const CS_AGREEMENT: f64 = 1e-5;

/// Determinant with its convergence diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct CsDeterminant {
    pub value: f64,
    /// Plain central-difference determinants at the three steps.
    pub raw: [f64; 3],
    /// Richardson extrapolants from steps (1, 2) and (2, 3).
    pub extrapolants: [f64; 2],
    /// `(D(h1) - D(h2)) / (D(h2) - D(h3))`, about 4 for second-order convergence.
    pub halving_ratio: f64,
}

fn mixed_entries(probe: &dyn PhaseProbe, x: [f64; 2], t: f64, h: f64) -> Result<[f64; 4]> {
    let phi = |dx1: f64, dx2: f64, dt: f64| probe.phase([x[0] + dx1, x[1] + dx2], t + dt);
    let mut out = [0.0; 4];
    for axis in 0..2 {
        let (a, b) = if axis == 0 { (h, 0.0) } else { (0.0, h) };
        let pp = phi(a, b, h)?;
        let p0 = phi(a, b, 0.0)?;
        let pm = phi(a, b, -h)?;
        let mp = phi(-a, -b, h)?;
        let m0 = phi(-a, -b, 0.0)?;
        let mm = phi(-a, -b, -h)?;
        out[axis] = (pp - pm - mp + mm) / (4.0 * h * h);
        out[2 + axis] = ((pp - 2.0 * p0 + pm) - (mp - 2.0 * m0 + mm)) / (2.0 * h * h * h);
    }
    Ok(out)
}

fn det(e: [f64; 4]) -> f64 {
    e[0] * e[3] - e[1] * e[2]
}

/// `det [[phi_{x1 t}, phi_{x2 t}], [phi_{x1 t t}, phi_{x2 t t}]]` with full diagnostics.
pub fn cs_determinant_report(probe: &dyn PhaseProbe, x: [f64; 2], t: f64) -> Result<CsDeterminant> {
    probe::check_window(probe, x, t)?;
    let e: Vec<[f64; 4]> = CS_STEPS
        .iter()
        .map(|&h| mixed_entries(probe, x, t, h))
        .collect::<Result<_>>()?;
    let rich = |a: [f64; 4], b: [f64; 4]| -> [f64; 4] {
        let mut r = [0.0; 4];
        for i in 0..4 {
            r[i] = (4.0 * b[i] - a[i]) / 3.0;
        }
        r
    };
    let r1 = det(rich(e[0], e[1]));
    let r2 = det(rich(e[1], e[2]));
    let raw = [det(e[0]), det(e[1]), det(e[2])];
    let report = CsDeterminant {
        value: r2,
        raw,
        extrapolants: [r1, r2],
        halving_ratio: (raw[0] - raw[1]) / (raw[1] - raw[2]),
    };
    if !(r1.is_finite() && r2.is_finite()) || (r1 - r2).abs() > CS_AGREEMENT * r2.abs().max(1.0) {
        return Err(Error::NumericalDerivative(format!(
            "Carleson-Sjolin determinant at x = {x:?}, t = {t}: extrapolants {r1} and {r2} differ by {} (raw {raw:?})",
            (r1 - r2).abs()
        )));
    }
    Ok(report)
}

/// Carleson–Sjölin determinant of `probe` at `(x, t)`.
pub fn cs_determinant(probe: &dyn PhaseProbe, x: [f64; 2], t: f64) -> Result<f64> {
    Ok(cs_determinant_report(probe, x, t)?.value)
}

/// `d/dt phi(x, t)` by Richardson-extrapolated central differences.
pub fn phase_t_derivative(probe: &dyn PhaseProbe, x: [f64; 2], t: f64) -> Result<f64> {
    let d = |h: f64| -> Result<f64> { Ok((probe.phase(x, t + h)? - probe.phase(x, t - h)?) / (2.0 * h)) };
    let h = CS_STEPS[0];
    Ok((4.0 * d(h / 2.0)? - d(h)?) / 3.0)
}

/// `max |r(x, t)| / t^2` over the sampled window, where
/// `r(x, t) = psi(x, t) - psi(x, 0) - t d_t psi(x, 0)`.
pub fn linearization_constant(probe: &dyn PhaseProbe, n: usize) -> Result<f64> {
    let w = probe.window();
    let mut worst: f64 = 0.0;
    for x in w.x_grid(n) {
        let p0 = probe.phase(x, 0.0)?;
        let d0 = phase_t_derivative(probe, x, 0.0)?;
        for i in 0..n {
            let t = w.t[0] + (w.t[1] - w.t[0]) * i as f64 / (n.max(2) - 1) as f64;
            if t.abs() < 1e-3 {
                continue;
            }
            let r = probe.phase(x, t)? - p0 - t * d0;
            worst = worst.max(r.abs() / (t * t));
        }
    }
    Ok(worst)
}
