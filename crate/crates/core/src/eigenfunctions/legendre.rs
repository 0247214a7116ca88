//! Legendre polynomials and orthonormal associated Legendre functions.

use std::f64::consts::PI;

use num_complex::Complex64;

/// `P_k(x)` by the upward three-term recurrence in degree.
pub fn legendre(k: usize, x: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let (mut p0, mut p1) = (1.0, x);
    for n in 1..k {
        let n = n as f64;
        let p2 = ((2.0 * n + 1.0) * x * p1 - n * p0) / (n + 1.0);
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// `log` of the sectoral constant: `Pbar_k^k(cos theta) = (-1)^k exp(this) sin^k theta`.
fn log_sectoral(k: usize) -> f64 {
    let mut acc = ((2 * k + 1) as f64 / (4.0 * PI)).ln();
    for i in 1..=k {
        acc += ((2 * i - 1) as f64 / (2 * i) as f64).ln();
    }
    0.5 * acc
}

/// `Pbar_k^m(x)` for `m = 0..=k`, normalized so that
/// `Y_k^m = Pbar_k^m(cos theta) e^{i m phi}` is orthonormal on the unit
/// sphere (Condon–Shortley phase).
///
/// Runs the three-term recurrence downward in `m` from the sectoral seed,
/// which is the stable direction. The seed is kept in log form and values
/// are rescaled as they grow so nothing overflows near the poles.
pub fn normalized_associated_all(k: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; k + 1];
    let s = (1.0 - x * x).max(0.0).sqrt();
    if s < 1e-300 {
        let sign = if x < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
        out[0] = sign * ((2 * k + 1) as f64 / (4.0 * PI)).sqrt();
        return out;
    }
    if k == 0 {
        out[0] = (1.0 / (4.0 * PI)).sqrt();
        return out;
    }
    let lf = k as f64;
    let mut log_scale = log_sectoral(k) + lf * s.ln();
    let mut scales = vec![0.0; k + 1];
    let mut vals = vec![0.0; k + 1];
    let sign_k = if k % 2 == 1 { -1.0 } else { 1.0 };
    let (mut above, mut here) = (0.0, sign_k);
    vals[k] = here;
    scales[k] = log_scale;
    let cot = x / s;
    for m in (1..=k).rev() {
        let mf = m as f64;
        let a = ((lf + mf + 1.0) * (lf - mf)).sqrt();
        let b = ((lf + mf) * (lf - mf + 1.0)).sqrt();
        let below = -(above * a + 2.0 * mf * cot * here) / b;
        above = here;
        here = below;
        let mag = here.abs().max(above.abs());
        if mag > 1e100 {
            here /= 1e100;
            above /= 1e100;
            log_scale += 100.0 * std::f64::consts::LN_10;
        }
        vals[m - 1] = here;
        scales[m - 1] = log_scale;
    }
    for m in 0..=k {
        out[m] = vals[m] * scales[m].exp();
    }
    out
}

/// Reference route: sectoral seed `Pbar_m^m` followed by the upward
/// recurrence in degree up to `k`. Costs `O(k^2)` for all orders; used to
/// cross-check [`normalized_associated_all`].
pub fn normalized_associated_upward(k: usize, m: usize, x: f64) -> f64 {
    assert!(m <= k);
    let s = (1.0 - x * x).max(0.0).sqrt();
    let sign = if m % 2 == 1 { -1.0 } else { 1.0 };
    let log_seed = log_sectoral(m) + if m > 0 { m as f64 * s.ln() } else { 0.0 };
    // Track the scale separately; the upward recurrence is linear.
    let mut p_prev = 0.0;
    let mut p = sign;
    for l in (m + 1)..=k {
        let lf = l as f64;
        let mf = m as f64;
        let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
        let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
        let next = a * (x * p - b * p_prev);
        p_prev = p;
        p = next;
    }
    p * log_seed.exp()
}

/// `int_0^pi sin^n(theta) d theta` by the Wallis recursion.
pub fn sine_power_integral(n: usize) -> f64 {
    let mut val = if n.is_multiple_of(2) { PI } else { 2.0 };
    let mut j = if n.is_multiple_of(2) { 2 } else { 3 };
    while j <= n {
        val *= (j - 1) as f64 / j as f64;
        j += 2;
    }
    val
}

/// Precomputed recurrence data for `sum_m c_m Y_k^m(theta, phi)`.
#[derive(Debug, Clone)]
pub(crate) struct HarmonicSum {
    k: usize,
    log_seed: f64,
    /// `(sqrt((k+m+1)(k-m)), 1 / sqrt((k+m)(k-m+1)))` indexed by `m`.
    rec: Vec<(f64, f64)>,
}

impl HarmonicSum {
    pub(crate) fn new(k: usize) -> Self {
        let lf = k as f64;
        let rec = (0..=k)
            .map(|m| {
                let mf = m as f64;
                let a = ((lf + mf + 1.0) * (lf - mf)).sqrt();
                let b = ((lf + mf) * (lf - mf + 1.0)).sqrt();
                (a, if b > 0.0 { 1.0 / b } else { 0.0 })
            })
            .collect();
        HarmonicSum {
            k,
            log_seed: log_sectoral(k),
            rec,
        }
    }

    /// `sum_{|m| <= k} coeffs[k + m] Y_k^m` at `(arccos x, phi)`, with the
    /// same downward recurrence as [`normalized_associated_all`] fused into
    /// the sum.
    pub(crate) fn eval(&self, coeffs: &[Complex64], x: f64, phi: f64) -> Complex64 {
        let k = self.k;
        let s = (1.0 - x * x).max(0.0).sqrt();
        if s < 1e-300 || k == 0 {
            let p0 = normalized_associated_all(k, x)[0];
            return coeffs[k] * p0;
        }
        let cot = x / s;
        let mut log_scale = self.log_seed + k as f64 * s.ln();
        let mut factor = log_scale.exp();
        let step = Complex64::from_polar(1.0, -phi);
        let mut e = Complex64::from_polar(1.0, k as f64 * phi);
        let term = |m: usize, p: f64, e: Complex64| -> Complex64 {
            if m == 0 {
                coeffs[k] * p
            } else {
                let sign = if m % 2 == 1 { -p } else { p };
                coeffs[k + m] * e * p + coeffs[k - m] * e.conj() * sign
            }
        };
        let (mut above, mut here) = (0.0, if k % 2 == 1 { -1.0 } else { 1.0 });
        let mut acc = term(k, here * factor, e);
        for m in (1..=k).rev() {
            let (a, binv) = self.rec[m];
            let below = -(above * a + 2.0 * m as f64 * cot * here) * binv;
            above = here;
            here = below;
            if here.abs().max(above.abs()) > 1e100 {
                here /= 1e100;
                above /= 1e100;
                log_scale += 100.0 * std::f64::consts::LN_10;
                factor = log_scale.exp();
            }
            e *= step;
            acc += term(m - 1, here * factor, e);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_low_degrees() {
        for &x in &[-0.9, -0.2, 0.0, 0.37, 1.0] {
            assert!((legendre(2, x) - 0.5 * (3.0 * x * x - 1.0)).abs() < 1e-15);
            assert!((legendre(3, x) - 0.5 * (5.0 * x * x * x - 3.0 * x)).abs() < 1e-15);
            assert!((legendre(7, 1.0) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn downward_matches_upward() {
        for &k in &[1usize, 5, 20, 64, 256] {
            for &x in &[-0.999, -0.6, 0.0, 0.3, 0.87, 0.9999] {
                let all = normalized_associated_all(k, x);
                for m in (0..=k).step_by((k / 7).max(1)) {
                    let up = normalized_associated_upward(k, m, x);
                    assert!(
                        (all[m] - up).abs() < 1e-9 * (1.0 + up.abs()),
                        "k={k} m={m} x={x}: {} vs {up}",
                        all[m]
                    );
                }
            }
        }
    }

    #[test]
    fn low_order_closed_forms() {
        let x: f64 = 0.4;
        let s = (1.0 - x * x).sqrt();
        let all = normalized_associated_all(1, x);
        assert!((all[0] - (3.0 / (4.0 * PI)).sqrt() * x).abs() < 1e-15);
        assert!((all[1] + (3.0 / (8.0 * PI)).sqrt() * s).abs() < 1e-15);
        let all = normalized_associated_all(2, x);
        assert!((all[2] - 0.25 * (15.0 / (2.0 * PI)).sqrt() * s * s).abs() < 1e-15);
    }

    #[test]
    fn wallis_values() {
        assert!((sine_power_integral(7) - 32.0 / 35.0).abs() < 1e-15);
        assert!((sine_power_integral(1) - 2.0).abs() < 1e-15);
        assert!((sine_power_integral(2) - PI / 2.0).abs() < 1e-15);
    }
}
