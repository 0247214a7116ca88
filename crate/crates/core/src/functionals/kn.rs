use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::restrict_integral;
use super::tube::{mass_of_nodes, tube_nodes};
use crate::eigenfunctions::EigenfunctionField;
use crate::error::{Error, Result};
use crate::geometry::{
    add, cross, directions, dot, normalized, scale, unit_geodesic, BaseGrid, GeodesicPath, Surface, TangentVector,
};

/// Candidate family and refinement schedule for [`kn_maximal`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnSampler {
    pub base_rows: usize,
    pub base_cols: usize,
    /// Directions per base point; `ceil(lambda^{1/2})` when absent.
    pub directions: Option<usize>,
    /// Refinement levels after the coarse pass (at least 2).
    pub levels: usize,
    /// Multiplier on the tube quadrature node counts.
    pub resolution_scale: f64,
}

impl Default for KnSampler {
    fn default() -> Self {
        KnSampler {
            base_rows: 8,
            base_cols: 16,
            directions: None,
            levels: 5,
            resolution_scale: 1.0,
        }
    }
}

impl KnSampler {
    /// The same sampler with `factor` times as many base points per axis
    /// and `factor^2` times as many directions.
    pub fn densified(&self, factor: usize, lambda: f64) -> Self {
        KnSampler {
            base_rows: self.base_rows * factor,
            base_cols: self.base_cols * factor,
            directions: Some(self.direction_count(lambda) * factor * factor),
            ..*self
        }
    }

    pub fn direction_count(&self, lambda: f64) -> usize {
        self.directions.unwrap_or_else(|| lambda.sqrt().ceil() as usize).max(4)
    }
}

/// One evaluated unit geodesic.
#[derive(Debug, Clone, Copy)]
pub struct KnCandidate {
    pub start: TangentVector,
    pub mass: f64,
    pub volume: f64,
}

/// Summary of one refinement level.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LevelTrace {
    pub level: usize,
    /// Offsets along the geodesic, across it, and of the direction angle.
    pub spacing: [f64; 3],
    pub moves: usize,
    pub candidates: usize,
    pub best: f64,
}

/// Result of the Kakeya–Nikodym search.
#[derive(Debug, Clone)]
pub struct KnResult {
    /// Largest tube mass found.
    pub value: f64,
    pub maximizer: GeodesicPath,
    /// `Vol_g` of the maximizing tube.
    pub volume: f64,
    pub radius: f64,
    pub coarse_candidates: usize,
    pub levels: Vec<LevelTrace>,
    /// Every mass evaluated, coarse pass first, in enumeration order.
    pub masses: Vec<f64>,
}

impl KnResult {
    /// The maximal-operator normalization `value / Vol_g`.
    pub fn normalized(&self) -> f64 {
        self.value / self.volume
    }

    pub fn candidate_count(&self) -> usize {
        self.masses.len()
    }
}

/// `sup_{gamma in Pi} int_{T(gamma)} |f|^2` over unit geodesics, tube radius
/// `lambda^{-1/2}`: a coarse pass over the base grid and `ceil(lambda^{1/2})`
/// directions, then pattern-search refinement around the best candidate
/// with spacings halved at every level. Ties go to the earliest candidate.
pub fn kn_maximal(field: &EigenfunctionField, lambda: f64, sampler: &KnSampler) -> Result<KnResult> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("lambda = {lambda}")));
    }
    if sampler.levels < 2 {
        return Err(Error::InvalidArgument(format!(
            "kn search needs at least 2 refinement levels, got {}",
            sampler.levels
        )));
    }
    if sampler.base_rows == 0 || sampler.base_cols == 0 {
        return Err(Error::InvalidArgument("empty base grid".into()));
    }
    let surface = field.surface();
    let radius = lambda.powf(-0.5);
    let resolution_lambda = lambda.max(field.lambda());
    let eval = |start: &TangentVector| -> Result<KnCandidate> {
        let (nodes, res) = tube_nodes(surface, start, 1.0, radius, resolution_lambda, sampler.resolution_scale)?;
        let volume = nodes.iter().map(|n| n.weight).sum();
        Ok(KnCandidate {
            start: *start,
            mass: mass_of_nodes(field, &nodes, res[1]),
            volume,
        })
    };

    let search = pattern_search(surface, lambda, sampler, eval)?;
    let best = search.best;
    let (coarse_len, levels, masses) = (search.coarse, search.levels, search.values);
    Ok(KnResult {
        value: best.mass,
        maximizer: unit_geodesic(surface, &best.start)?,
        volume: best.volume,
        radius,
        coarse_candidates: coarse_len,
        levels,
        masses,
    })
}

/// Result of [`restriction_maximal`].
#[derive(Debug, Clone)]
pub struct RestrictionMax {
    pub value: f64,
    pub maximizer: GeodesicPath,
    pub candidates: usize,
}

/// `sup_{gamma in Pi} int_gamma |f|^2 ds` by the same coarse-to-fine search
/// as [`kn_maximal`], with `lambda` the field eigenvalue.
pub fn restriction_maximal(field: &EigenfunctionField, sampler: &KnSampler) -> Result<RestrictionMax> {
    if sampler.levels < 2 || sampler.base_rows == 0 || sampler.base_cols == 0 {
        return Err(Error::InvalidArgument("degenerate sampler".into()));
    }
    let surface = field.surface();
    let eval = |start: &TangentVector| -> Result<KnCandidate> {
        let path = unit_geodesic(surface, start)?;
        Ok(KnCandidate {
            start: *start,
            mass: restrict_integral(field, &path),
            volume: 1.0,
        })
    };
    let search = pattern_search(surface, field.lambda(), sampler, eval)?;
    Ok(RestrictionMax {
        value: search.best.mass,
        maximizer: unit_geodesic(surface, &search.best.start)?,
        candidates: search.values.len(),
    })
}

pub(crate) struct SearchOutcome {
    pub best: KnCandidate,
    pub coarse: usize,
    pub levels: Vec<LevelTrace>,
    pub values: Vec<f64>,
}

/// Coarse pass over the base grid times `direction_count` directions, then
/// 26-neighbour pattern search (along, across, turn) with halving spacings.
pub(crate) fn pattern_search<F>(surface: &Surface, lambda: f64, sampler: &KnSampler, eval: F) -> Result<SearchOutcome>
where
    F: Fn(&TangentVector) -> Result<KnCandidate> + Sync + Send,
{
    let grid = BaseGrid::new(sampler.base_rows, sampler.base_cols);
    let count = sampler.direction_count(lambda);
    let starts: Vec<TangentVector> = grid
        .points(surface)
        .iter()
        .flat_map(|p| directions(surface, p, count))
        .collect();
    let coarse: Vec<KnCandidate> = starts.par_iter().map(&eval).collect::<Result<_>>()?;
    let mut masses: Vec<f64> = coarse.iter().map(|c| c.mass).collect();
    let mut best = first_max(&coarse).expect("non-empty candidate family");

    let base_spacing = match surface.periods() {
        Some(p) => (p[0] / sampler.base_rows as f64).max(p[1] / sampler.base_cols as f64),
        None => PI / sampler.base_rows as f64,
    };
    let mut spacing = [base_spacing / 2.0, base_spacing / 2.0, TAU / count as f64 / 2.0];
    let mut levels = Vec::with_capacity(sampler.levels);
    for level in 0..sampler.levels {
        let mut moves = 0;
        let mut evaluated = 0;
        loop {
            let neighbours: Vec<TangentVector> = (0..27)
                .filter(|&i| i != 13)
                .map(|i| {
                    let d = [(i / 9) as f64 - 1.0, ((i / 3) % 3) as f64 - 1.0, (i % 3) as f64 - 1.0];
                    perturb(
                        surface,
                        &best.start,
                        d[0] * spacing[0],
                        d[1] * spacing[1],
                        d[2] * spacing[2],
                    )
                })
                .collect();
            let cands: Vec<KnCandidate> = neighbours.par_iter().map(&eval).collect::<Result<_>>()?;
            evaluated += cands.len();
            masses.extend(cands.iter().map(|c| c.mass));
            let top = first_max(&cands).expect("26 neighbours");
            if top.mass <= best.mass {
                break;
            }
            best = top;
            moves += 1;
            if moves >= 16 {
                break;
            }
        }
        levels.push(LevelTrace {
            level,
            spacing,
            moves,
            candidates: evaluated,
            best: best.mass,
        });
        spacing = spacing.map(|x| x / 2.0);
    }
    Ok(SearchOutcome {
        best,
        coarse: coarse.len(),
        levels,
        values: masses,
    })
}

fn first_max(cands: &[KnCandidate]) -> Option<KnCandidate> {
    let mut best: Option<KnCandidate> = None;
    for c in cands {
        if best.is_none_or(|b| c.mass > b.mass) {
            best = Some(*c);
        }
    }
    best
}

/// Moves the start point by `along` and `across` the geodesic and rotates
/// the direction by `turn`.
fn perturb(surface: &Surface, v: &TangentVector, along: f64, across: f64, turn: f64) -> TangentVector {
    let x = surface.embed(&v.base);
    let e = normalized(surface.lift_tangent(v));
    match surface.periods() {
        Some(_) => {
            let n = [-e[1], e[0], 0.0];
            let y = add(&add(&x, &scale(e, along)), &scale(n, across));
            let p = surface.project(&y);
            let (c, s) = (turn.cos(), turn.sin());
            let d = add(&scale(e, c), &scale(n, s));
            surface.normalize_tangent(&surface.lower_tangent(&p, &d))
        }
        None => {
            let r = crate::geometry::norm3(&x);
            let u = scale(x, 1.0 / r);
            let n = cross(&u, &e);
            let u2 = normalized(add(&add(&u, &scale(e, along / r)), &scale(n, across / r)));
            let e2 = normalized(add(&e, &scale(u2, -dot(&e, &u2))));
            let n2 = cross(&u2, &e2);
            let (c, s) = (turn.cos(), turn.sin());
            let d = add(&scale(e2, c), &scale(n2, s));
            let p = surface.project(&scale(u2, r));
            surface.normalize_tangent(&surface.lower_tangent(&p, &d))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigenfunctions::torus_wave;
    use crate::geometry::ChartPoint;

    #[test]
    fn torus_wave_sup_is_constant() {
        let f = torus_wave([3, 4], [TAU, TAU]).unwrap();
        let lambda = f.lambda();
        let res = kn_maximal(
            &f,
            lambda,
            &KnSampler {
                base_rows: 2,
                base_cols: 2,
                ..Default::default()
            },
        )
        .unwrap();
        let exact = 2.0 * lambda.powf(-0.5) / (4.0 * PI * PI);
        assert!((res.value - exact).abs() < 1e-9);
        assert!(res.masses.iter().all(|m| (m - exact).abs() < 1e-9));
    }

    #[test]
    fn perturbation_keeps_unit_speed() {
        let s = Surface::unit_sphere();
        let v = s.unit_direction(&ChartPoint::polar(1.0, 0.3), 0.4);
        let w = perturb(&s, &v, 0.1, -0.05, 0.2);
        assert!((s.norm(&w) - 1.0).abs() < 1e-12);
        let zero = perturb(&s, &v, 0.0, 0.0, 0.0);
        assert!((s.lift_tangent(&zero)[0] - s.lift_tangent(&v)[0]).abs() < 1e-12);
        assert!(levels_rejected());
    }

    fn levels_rejected() -> bool {
        let f = torus_wave([1, 0], [TAU, TAU]).unwrap();
        kn_maximal(
            &f,
            1.0,
            &KnSampler {
                levels: 1,
                ..Default::default()
            },
        )
        .is_err()
    }
}
