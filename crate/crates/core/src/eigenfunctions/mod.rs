//! L²-normalized Laplace eigenfunctions with explicit eigenvalues on the
//! round unit sphere and on flat tori.

mod legendre;

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use num_complex::Complex64;

use legendre::HarmonicSum;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{lp_norm, QuadratureGrid};
use crate::geometry::{Chart, ChartPoint, Surface, Vec3};

pub use legendre::{legendre, normalized_associated_all, normalized_associated_upward, sine_power_integral};

/// Largest deviation of the quadrature L² norm from 1 accepted at construction.
pub const CERTIFICATE_TOLERANCE: f64 = 1e-6;

/// Eigenfunction family descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Family {
    /// Zonal harmonic of degree `k` about `pole` = (colatitude, longitude).
    Zonal {
        k: usize,
        pole: [f64; 2],
    },
    HighestWeight {
        k: usize,
    },
    /// Plane wave with integer frequency `m`.
    TorusWave {
        m: [i64; 2],
    },
    RandomHarmonic {
        k: usize,
        seed: u64,
    },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Zonal { .. } => "zonal",
            Family::HighestWeight { .. } => "highest_weight",
            Family::TorusWave { .. } => "torus_wave",
            Family::RandomHarmonic { .. } => "random_harmonic",
        }
    }

    /// Spherical degree, if any.
    pub fn degree(&self) -> Option<usize> {
        match *self {
            Family::Zonal { k, .. } | Family::HighestWeight { k } | Family::RandomHarmonic { k, .. } => Some(k),
            Family::TorusWave { .. } => None,
        }
    }
}

#[derive(Debug, Clone)]
enum Repr {
    Zonal {
        k: usize,
        pole: Vec3,
        amp: f64,
    },
    HighestWeight {
        k: usize,
        amp: f64,
    },
    Wave {
        freq: [f64; 2],
        amp: f64,
    },
    /// Coefficients of `Y_k^m`, indexed by `m + k`.
    Random {
        k: usize,
        coeffs: Arc<Vec<Complex64>>,
        sum: Arc<HarmonicSum>,
    },
}

/// An evaluable eigenfunction with eigenvalue `lambda` of `sqrt(-Delta)`.
#[derive(Debug, Clone)]
pub struct EigenfunctionField {
    surface: Surface,
    family: Family,
    lambda: f64,
    certificate: f64,
    repr: Repr,
}

/// `sqrt(k^2 + k)`.
pub fn sphere_eigenvalue(k: usize) -> f64 {
    let k = k as f64;
    (k * k + k).sqrt()
}

/// Zonal function `Z_k` about `pole` on the unit sphere.
pub fn zonal(k: usize, pole: ChartPoint) -> Result<EigenfunctionField> {
    let s = Surface::unit_sphere();
    let x = s.to_chart(&pole, Chart::Polar);
    EigenfunctionField::new(&s, Family::Zonal { k, pole: x.coords })
}

/// Highest-weight harmonic `Q_k = c_k (x_1 + i x_2)^k` on the unit sphere.
pub fn highest_weight(k: usize) -> Result<EigenfunctionField> {
    EigenfunctionField::new(&Surface::unit_sphere(), Family::HighestWeight { k })
}

/// Plane wave `e^{i <2 pi m / P, x>} / sqrt(area)` on the flat torus with the given periods.
pub fn torus_wave(m: [i64; 2], periods: [f64; 2]) -> Result<EigenfunctionField> {
    EigenfunctionField::new(&Surface::flat_torus(periods)?, Family::TorusWave { m })
}

/// Gaussian random combination of the degree-`k` spherical harmonics.
pub fn random_harmonic(k: usize, seed: u64) -> Result<EigenfunctionField> {
    EigenfunctionField::new(&Surface::unit_sphere(), Family::RandomHarmonic { k, seed })
}

/// `c_k` with `c_k^2 * 2 pi * int sin^{2k+1} = 1`.
pub fn highest_weight_constant(k: usize) -> f64 {
    1.0 / (TAU * sine_power_integral(2 * k + 1)).sqrt()
}

impl EigenfunctionField {
    /// Builds the field on `surface`, checking that the family lives there,
    /// and certifies its L² norm by quadrature.
    pub fn new(surface: &Surface, family: Family) -> Result<Self> {
        let unsupported = || Error::UnsupportedFamily {
            family: family.name().to_string(),
            surface: surface.name().to_string(),
        };
        let (lambda, repr) = match &family {
            Family::TorusWave { m } => {
                let per = surface.periods().ok_or_else(unsupported)?;
                if m[0] == 0 && m[1] == 0 {
                    return Err(Error::InvalidArgument("torus wave with zero frequency".into()));
                }
                let freq = [TAU * m[0] as f64 / per[0], TAU * m[1] as f64 / per[1]];
                let amp = 1.0 / surface.area().sqrt();
                (freq[0].hypot(freq[1]), Repr::Wave { freq, amp })
            }
            spherical => {
                if !surface.is_unit_round_sphere() {
                    return Err(unsupported());
                }
                match *spherical {
                    Family::Zonal { k, pole } => {
                        let x0 = surface.embed(&ChartPoint::polar(pole[0], pole[1]));
                        let amp = ((2 * k + 1) as f64 / (4.0 * PI)).sqrt();
                        (sphere_eigenvalue(k), Repr::Zonal { k, pole: x0, amp })
                    }
                    Family::HighestWeight { k } => {
                        if k == 0 {
                            return Err(Error::InvalidArgument(
                                "highest-weight harmonic needs k >= 1 (use the zonal family)".into(),
                            ));
                        }
                        (
                            sphere_eigenvalue(k),
                            Repr::HighestWeight {
                                k,
                                amp: highest_weight_constant(k),
                            },
                        )
                    }
                    Family::RandomHarmonic { k, seed } => {
                        if k == 0 {
                            return Err(Error::InvalidArgument("random harmonic needs k >= 1".into()));
                        }
                        let mut rng = ChaCha8Rng::seed_from_u64(seed);
                        let mut coeffs: Vec<Complex64> = (0..=2 * k)
                            .map(|_| {
                                let re: f64 = rng.sample(StandardNormal);
                                let im: f64 = rng.sample(StandardNormal);
                                Complex64::new(re, im)
                            })
                            .collect();
                        let norm = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                        for c in &mut coeffs {
                            *c /= norm;
                        }
                        (
                            sphere_eigenvalue(k),
                            Repr::Random {
                                k,
                                coeffs: Arc::new(coeffs),
                                sum: Arc::new(HarmonicSum::new(k)),
                            },
                        )
                    }
                    Family::TorusWave { .. } => unreachable!(),
                }
            }
        };
        let mut field = EigenfunctionField {
            surface: surface.clone(),
            family,
            lambda,
            certificate: f64::NAN,
            repr,
        };
        let grid = QuadratureGrid::for_field(&field, 1.0);
        field.certificate = lp_norm(&field, &grid, 2.0)?;
        if (field.certificate - 1.0).abs() > CERTIFICATE_TOLERANCE {
            return Err(Error::Normalization {
                certificate: field.certificate,
            });
        }
        Ok(field)
    }

    pub fn surface(&self) -> &Surface {
        &self.surface
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// Eigenvalue of `sqrt(-Delta)`.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Quadrature L² norm computed at construction.
    pub fn l2_certificate(&self) -> f64 {
        self.certificate
    }

    /// Largest frequency present along a chart coordinate, used to size grids.
    pub(crate) fn bandwidth(&self) -> [usize; 2] {
        match &self.repr {
            Repr::Zonal { k, .. } | Repr::HighestWeight { k, .. } | Repr::Random { k, .. } => [*k, *k],
            Repr::Wave { .. } => match self.family {
                Family::TorusWave { m } => [m[0].unsigned_abs() as usize, m[1].unsigned_abs() as usize],
                _ => unreachable!(),
            },
        }
    }

    pub fn evaluate(&self, p: &ChartPoint) -> Complex64 {
        match &self.repr {
            Repr::Wave { freq, amp } => Complex64::from_polar(*amp, freq[0] * p.coords[0] + freq[1] * p.coords[1]),
            Repr::Zonal { k, pole, amp } => {
                let x = self.surface.embed(p);
                let c = (x[0] * pole[0] + x[1] * pole[1] + x[2] * pole[2]).clamp(-1.0, 1.0);
                Complex64::new(amp * legendre(*k, c), 0.0)
            }
            Repr::HighestWeight { k, amp } => {
                let x = self.surface.embed(p);
                let r = x[0].hypot(x[1]);
                let phase = x[1].atan2(x[0]);
                Complex64::from_polar(amp * r.powi(*k as i32), *k as f64 * phase)
            }
            Repr::Random { coeffs, sum, .. } => {
                let x = self.surface.embed(p);
                sum.eval(coeffs, x[2].clamp(-1.0, 1.0), x[1].atan2(x[0]))
            }
        }
    }

    /// Values on the row `coord1 = first`, `coord2 = j * period / count` for
    /// `j = 0..count` (period `2 pi` on the sphere's polar chart).
    pub fn evaluate_row(&self, first: f64, count: usize) -> Vec<Complex64> {
        match &self.repr {
            Repr::Random { k, coeffs, .. } => {
                let k = *k;
                let plm = normalized_associated_all(k, first.cos());
                let mut buf = vec![Complex64::new(0.0, 0.0); count];
                buf[0] += coeffs[k] * plm[0];
                for m in 1..=k {
                    let sign = if m % 2 == 1 { -1.0 } else { 1.0 };
                    buf[m % count] += coeffs[k + m] * plm[m];
                    buf[(count - m % count) % count] += coeffs[k - m] * (sign * plm[m]);
                }
                let mut planner = FftPlanner::new();
                planner.plan_fft_inverse(count).process(&mut buf);
                buf
            }
            _ => {
                let period = self.surface.periods().map_or(TAU, |p| p[1]);
                (0..count)
                    .map(|j| {
                        let c2 = period * j as f64 / count as f64;
                        let p = match self.surface.periods() {
                            Some(_) => ChartPoint::plane(first, c2),
                            None => ChartPoint::polar(first, c2),
                        };
                        self.evaluate(&p)
                    })
                    .collect()
            }
        }
    }

    /// Chart Laplace–Beltrami of the field at `p` by the flux-form five-point
    /// stencil with step `h` and `h/2`, Richardson-extrapolated.
    pub fn laplacian(&self, p: &ChartPoint, h: f64) -> Complex64 {
        let coarse = self.stencil(p, h);
        let fine = self.stencil(p, h / 2.0);
        (fine * 4.0 - coarse) / 3.0
    }

    fn stencil(&self, p: &ChartPoint, h: f64) -> Complex64 {
        let at = |d0: f64, d1: f64| ChartPoint {
            chart: p.chart,
            coords: [p.coords[0] + d0, p.coords[1] + d1],
        };
        let flux = |q: &ChartPoint, i: usize| {
            let g = self.surface.metric(q);
            (g[0][0] * g[1][1]).sqrt() / g[i][i]
        };
        let f0 = self.evaluate(p);
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..2 {
            let e = |s: f64| if i == 0 { (s, 0.0) } else { (0.0, s) };
            let (a, b) = e(h);
            let (c, d) = e(h / 2.0);
            let plus = at(a, b);
            let minus = at(-a, -b);
            let ap = flux(&at(c, d), i);
            let am = flux(&at(-c, -d), i);
            acc += (self.evaluate(&plus) - f0) * ap - (f0 - self.evaluate(&minus)) * am;
        }
        acc / (h * h * self.surface.area_element(p))
    }

    /// `max |Delta e + lambda^2 e| / max |e|` over `count` seeded random points.
    pub fn laplace_residual(&self, count: usize, seed: u64) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = 0.01 / self.lambda.max(1.0);
        let grid = QuadratureGrid::for_field(self, 1.0);
        let sup = lp_norm(self, &grid, f64::INFINITY)?;
        let mut worst: f64 = 0.0;
        for _ in 0..count {
            let p = match self.surface.periods() {
                Some(per) => ChartPoint::plane(rng.random::<f64>() * per[0], rng.random::<f64>() * per[1]),
                None => {
                    let z: f64 = rng.random_range(-1.0..1.0);
                    let phi: f64 = rng.random_range(0.0..TAU);
                    let r = (1.0 - z * z).sqrt();
                    self.surface.project(&[r * phi.cos(), r * phi.sin(), z])
                }
            };
            let res = self.laplacian(&p, h) + self.evaluate(&p) * (self.lambda * self.lambda);
            worst = worst.max(res.norm());
        }
        Ok(worst / sup)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fused_random_sum_matches_table() {
        let f = random_harmonic(40, 3).unwrap();
        let Repr::Random { k, coeffs, .. } = &f.repr else {
            unreachable!()
        };
        for (theta, phi) in [(0.3, 1.0), (1.5, -2.0), (3.1, 0.2), (1e-4, 0.7)] {
            let plm = normalized_associated_all(*k, f64::cos(theta));
            let mut direct = coeffs[*k] * plm[0];
            for m in 1..=*k {
                let e = Complex64::from_polar(1.0, m as f64 * phi);
                let sign = if m % 2 == 1 { -1.0 } else { 1.0 };
                direct += coeffs[*k + m] * plm[m] * e + coeffs[*k - m] * (sign * plm[m]) * e.conj();
            }
            let fused = f.evaluate(&ChartPoint::polar(theta, phi));
            assert!((fused - direct).norm() < 1e-12, "{theta} {phi}: {fused} vs {direct}");
        }
    }

    #[test]
    fn highest_weight_constant_matches_wallis() {
        let c3 = highest_weight_constant(3);
        assert!((c3 * c3 * TAU * 32.0 / 35.0 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zonal_value_at_pole() {
        let z = zonal(10, ChartPoint::polar(0.7, 1.1)).unwrap();
        let v = z.evaluate(&ChartPoint::polar(0.7, 1.1));
        assert!((v.re - (21.0 / (4.0 * PI)).sqrt()).abs() < 1e-12);
        assert!((z.lambda() - 110f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn row_evaluation_matches_pointwise() {
        let f = random_harmonic(12, 3).unwrap();
        let row = f.evaluate_row(0.8, 40);
        for (j, v) in row.iter().enumerate() {
            let p = ChartPoint::polar(0.8, TAU * j as f64 / 40.0);
            assert!((v - f.evaluate(&p)).norm() < 1e-12);
        }
        // Fewer samples than frequencies still gives exact values.
        let row = f.evaluate_row(2.1, 7);
        for (j, v) in row.iter().enumerate() {
            let p = ChartPoint::polar(2.1, TAU * j as f64 / 7.0);
            assert!((v - f.evaluate(&p)).norm() < 1e-12);
        }
    }

    #[test]
    fn unsupported_surfaces_rejected() {
        let t = Surface::standard_torus();
        assert!(matches!(
            EigenfunctionField::new(&t, Family::HighestWeight { k: 3 }),
            Err(Error::UnsupportedFamily { .. })
        ));
        assert!(matches!(
            EigenfunctionField::new(&Surface::unit_sphere(), Family::TorusWave { m: [1, 0] }),
            Err(Error::UnsupportedFamily { .. })
        ));
        assert!(highest_weight(0).is_err());
        assert!(torus_wave([0, 0], [TAU, TAU]).is_err());
    }
}
