use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::geometry::{build_fermi_chart, geodesic_distance, geodesic_segment, sweep, ChartPoint, FermiChart, Surface};

/// Box of admissible `(x, t)` for a phase probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeWindow {
    pub x1: [f64; 2],
    pub x2: [f64; 2],
    pub t: [f64; 2],
}

impl ProbeWindow {
    pub fn contains(&self, x: [f64; 2], t: f64) -> bool {
        let inside = |v: f64, r: [f64; 2]| v >= r[0] && v <= r[1];
        inside(x[0], self.x1) && inside(x[1], self.x2) && inside(t, self.t)
    }

    /// `n x n` grid over `(x1, x2)`.
    pub fn x_grid(&self, n: usize) -> Vec<[f64; 2]> {
        let lerp = |r: [f64; 2], i: usize| r[0] + (r[1] - r[0]) * i as f64 / (n.max(2) - 1) as f64;
        (0..n)
            .flat_map(|i| (0..n).map(move |j| [lerp(self.x1, i), lerp(self.x2, j)]))
            .collect()
    }
}

/// A phase `phi(x, t)` on a coordinate patch.
pub trait PhaseProbe: Sync {
    fn name(&self) -> &str;

    fn phase(&self, x: [f64; 2], t: f64) -> Result<f64>;

    fn window(&self) -> ProbeWindow;

    /// `phi(x_i, t_j)` as a row-major `xs.len() x ts.len()` table.
    fn phase_table(&self, xs: &[[f64; 2]], ts: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(xs.len() * ts.len());
        for x in xs {
            for &t in ts {
                out.push(self.phase(*x, t)?);
            }
        }
        Ok(out)
    }
}

/// `phi(x, t) = |x - (0, t)|`.
#[derive(Debug, Clone, Copy)]
pub struct EuclideanProbe {
    pub window: ProbeWindow,
}

impl Default for EuclideanProbe {
    fn default() -> Self {
        EuclideanProbe {
            window: ProbeWindow {
                x1: [-0.6, -0.2],
                x2: [-0.2, 0.2],
                t: [-0.2, 0.2],
            },
        }
    }
}

impl PhaseProbe for EuclideanProbe {
    fn name(&self) -> &str {
        "euclidean"
    }

    fn phase(&self, x: [f64; 2], t: f64) -> Result<f64> {
        Ok(x[0].hypot(x[1] - t))
    }

    fn window(&self) -> ProbeWindow {
        self.window
    }
}

/// The degenerate phase `phi(x, t) = x1 t`.
#[derive(Debug, Clone, Copy)]
pub struct DegenerateProbe {
    pub window: ProbeWindow,
}

impl Default for DegenerateProbe {
    fn default() -> Self {
        DegenerateProbe {
            window: EuclideanProbe::default().window,
        }
    }
}

impl PhaseProbe for DegenerateProbe {
    fn name(&self) -> &str {
        "degenerate"
    }

    fn phase(&self, x: [f64; 2], t: f64) -> Result<f64> {
        Ok(x[0] * t)
    }

    fn window(&self) -> ProbeWindow {
        self.window
    }
}

/// `psi(x, t) = d_g(x, (0, t))` in Fermi coordinates about a geodesic
/// `gamma_0 = {(0, t)}`: `x1` is the signed distance along the normal
/// geodesics and `x2` the arc length along `gamma_0`.
#[derive(Debug, Clone)]
pub struct SurfaceProbe {
    chart: FermiChart,
    offset: f64,
    window: ProbeWindow,
}

impl SurfaceProbe {
    /// Probe about the geodesic through `origin` with unit direction
    /// angle `alpha`, covering arc lengths `[-half_length, half_length]`.
    pub fn new(
        surface: &Surface,
        origin: ChartPoint,
        alpha: f64,
        half_length: f64,
        window: ProbeWindow,
    ) -> Result<Self> {
        let v = surface.unit_direction(&origin, alpha);
        let back = sweep(surface, &v, &[-half_length], 1e-12)?[0];
        let gamma0 = geodesic_segment(surface, &back.1, 2.0 * half_length)?;
        let half_width = window.x1[0].abs().max(window.x1[1].abs()).max(0.6);
        let chart = build_fermi_chart(surface, &gamma0, half_width)?;
        Ok(SurfaceProbe {
            chart,
            offset: half_length,
            window,
        })
    }

    /// Probe about the equator of the unit sphere, origin at longitude 0.
    pub fn unit_sphere() -> Self {
        Self::new(
            &Surface::unit_sphere(),
            ChartPoint::polar(FRAC_PI_2, 0.0),
            FRAC_PI_2,
            1.5,
            ProbeWindow {
                x1: [-0.45, -0.3],
                x2: [-0.1, 0.1],
                t: [-0.1, 0.1],
            },
        )
        .expect("equator probe is well inside the focal distance")
    }

    pub fn surface(&self) -> &Surface {
        self.chart.surface()
    }

    pub fn chart(&self) -> &FermiChart {
        &self.chart
    }

    /// Surface point with probe coordinates `x`.
    pub fn point(&self, x: [f64; 2]) -> Result<ChartPoint> {
        self.chart.map(x[1] + self.offset, x[0])
    }

    /// The point `(0, t)` of `gamma_0`.
    pub fn axis_point(&self, t: f64) -> Result<ChartPoint> {
        self.chart.map(t + self.offset, 0.0)
    }

    /// `exp_o(kappa)` for geodesic normal coordinates `kappa` about the
    /// origin `o = (0, 0)`, with the first axis along the `x1` direction.
    pub fn from_normal_coordinates(&self, kappa: [f64; 2]) -> Result<ChartPoint> {
        let (o, tangent) = self.chart.core(self.offset)?;
        let surface = self.surface();
        let normal = surface.rotate90(&tangent);
        let r = kappa[0].hypot(kappa[1]);
        if r == 0.0 {
            return Ok(o);
        }
        let (c, s) = (kappa[0] / r, kappa[1] / r);
        let dir = crate::geometry::TangentVector::new(
            o,
            [
                c * normal.components[0] + s * tangent.components[0],
                c * normal.components[1] + s * tangent.components[1],
            ],
        );
        Ok(sweep(surface, &dir, &[r], 1e-12)?[0].0)
    }

    pub fn phase_at(&self, p: &ChartPoint, t: f64) -> Result<f64> {
        geodesic_distance(self.surface(), p, &self.axis_point(t)?)
    }
}

impl PhaseProbe for SurfaceProbe {
    fn name(&self) -> &str {
        "fermi"
    }

    fn phase(&self, x: [f64; 2], t: f64) -> Result<f64> {
        self.phase_at(&self.point(x)?, t)
    }

    fn window(&self) -> ProbeWindow {
        self.window
    }

    fn phase_table(&self, xs: &[[f64; 2]], ts: &[f64]) -> Result<Vec<f64>> {
        use rayon::prelude::*;
        let axis: Vec<ChartPoint> = ts.iter().map(|&t| self.axis_point(t)).collect::<Result<_>>()?;
        let rows: Vec<Vec<f64>> = xs
            .par_iter()
            .map(|x| {
                let p = self.point(*x)?;
                axis.iter()
                    .map(|q| geodesic_distance(self.surface(), &p, q))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<_>>()?;
        Ok(rows.concat())
    }
}

pub(crate) fn check_window(probe: &dyn PhaseProbe, x: [f64; 2], t: f64) -> Result<()> {
    if !probe.window().contains(x, t) {
        return Err(Error::InvalidArgument(format!(
            "({}, {}; {t}) is outside the {} probe window",
            x[0],
            x[1],
            probe.name()
        )));
    }
    Ok(())
}
