//! Scaling ledgers: each experiment evaluates a functional over a ladder
//! of degrees, records one row per `(family, k, quantity)` and reduces the
//! rows to a verdict.

pub mod checks;
mod verify;

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::TAU;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::eigenfunctions::{highest_weight, random_harmonic, torus_wave, zonal, EigenfunctionField};
use crate::error::{Error, Result};
use crate::functionals::{kn_maximal, lp_norm, restriction_maximal, KnSampler, QuadratureGrid};
use crate::geometry::ChartPoint;

pub use verify::{
    closes_within, delta_table, holder_chain, kn_table, prop3_torus_check, verify_bourgain, verify_corollary2,
    verify_estimate_1, verify_theorem1, Classification, Corollary2Report, DeltaRow, FamilyTrends, HolderRow,
    Prop3Report, Prop3Row, C_EPS_SLOPE, HOLDER_TOLERANCE,
};

/// Default degree ladder.
pub const K_LADDER: [usize; 9] = [16, 24, 32, 48, 64, 96, 128, 192, 256];
/// Default `epsilon` grid for the L4 versus Kakeya-Nikodym ledger.
pub const EPS_GRID: [f64; 4] = [1.0, 0.5, 0.25, 0.125];
/// Trend slope at or above which a sequence counts as non-decaying.
pub const NON_DECAYING: f64 = -0.02;
/// Trend slope at or below which a sequence counts as decaying.
pub const DECAYING: f64 = -0.05;
/// Largest trend slope accepted for a bounded ratio sequence.
pub const BOUNDED_TREND: f64 = 0.02;

/// `delta(p) = (1/2)(1/2 - 1/p)` on `[2, 6]` and `1/2 - 2/p` on `[6, inf]`.
pub fn delta(p: f64) -> Result<f64> {
    if p.is_nan() || p < 2.0 {
        return Err(Error::InvalidExponent(p));
    }
    if p <= 6.0 {
        Ok(0.5 * (0.5 - 1.0 / p))
    } else {
        Ok(0.5 - 2.0 / p)
    }
}

/// Least-squares line through `(log lambda, log value)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination, clamped to `[0, 1]`.
    pub r2: f64,
    pub pairs: Vec<(f64, f64)>,
}

impl ScalingFit {
    pub fn predict(&self, lambda: f64) -> f64 {
        (self.intercept + self.slope * lambda.ln()).exp()
    }
}

pub fn fit_scaling(pairs: &[(f64, f64)]) -> Result<ScalingFit> {
    if pairs.len() < 5 {
        return Err(Error::InvalidArgument(format!(
            "scaling fit needs at least 5 pairs, got {}",
            pairs.len()
        )));
    }
    for &(l, v) in pairs {
        if l.is_nan() || l <= 0.0 {
            return Err(Error::NonPositiveValue(l));
        }
        if v.is_nan() || v <= 0.0 {
            return Err(Error::NonPositiveValue(v));
        }
    }
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let (slope, intercept, r2) = line_fit(&xs, &ys);
    Ok(ScalingFit {
        slope,
        intercept,
        r2,
        pairs: pairs.to_vec(),
    })
}

pub(crate) fn line_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };
    (slope, intercept, r2)
}

/// Slope of `log value` against `log lambda` over the top half of a
/// ladder (at least its last five entries).
pub fn trend_slope(pairs: &[(f64, f64)]) -> Result<f64> {
    let n = pairs.len();
    let take = n.div_ceil(2).max(5).min(n);
    Ok(fit_scaling(&pairs[n - take..])?.slope)
}

/// A family of eigenfunctions indexed by degree.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Ladder {
    /// Zonal harmonics about the north pole.
    Zonal,
    HighestWeight,
    /// Plane waves `m = (n, n + 1)` with `n = round(k / sqrt 2)` on the
    /// `2 pi`-periodic square torus, so that `lambda ~ k`.
    TorusWave,
    RandomHarmonic {
        seed: u64,
    },
}

impl Ladder {
    pub fn field(&self, k: usize) -> Result<EigenfunctionField> {
        match *self {
            Ladder::Zonal => zonal(k, ChartPoint::polar(0.0, 0.0)),
            Ladder::HighestWeight => highest_weight(k),
            Ladder::TorusWave => torus_wave(torus_frequency(k), [TAU, TAU]),
            Ladder::RandomHarmonic { seed } => random_harmonic(k, seed),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Ladder::Zonal => "zonal".into(),
            Ladder::HighestWeight => "highest_weight".into(),
            Ladder::TorusWave => "torus_wave".into(),
            Ladder::RandomHarmonic { seed } => format!("random_harmonic[seed={seed}]"),
        }
    }

    /// Whether the family is expected to saturate the `L^p` bounds.
    pub fn saturating(&self) -> bool {
        matches!(self, Ladder::HighestWeight)
    }
}

pub fn torus_frequency(k: usize) -> [i64; 2] {
    let n = (k as f64 / std::f64::consts::SQRT_2).round() as i64;
    [n, n + 1]
}

/// One ledger line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LedgerRow {
    pub experiment: String,
    pub family: String,
    pub k: usize,
    pub lambda: f64,
    pub quantity: String,
    /// Experiment parameter attached to the row (`epsilon`, `p`, ...).
    pub param: Option<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub pass: bool,
    pub max_ratio: f64,
    /// Named trend slopes; `trend` is the primary one.
    pub slopes: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

/// Ledger plus verdict of one experiment on one family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub experiment: String,
    pub family: String,
    pub params: BTreeMap<String, Vec<f64>>,
    pub rows: Vec<LedgerRow>,
    pub verdict: Verdict,
}

impl InequalityReport {
    /// CSV with a header row, `.` decimals and `\n` line endings.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> csv::Result<()> {
        write_rows(&self.rows, writer)
    }

    /// `(lambda, ratio)` for the rows of `quantity`, in ledger order.
    pub fn series(&self, quantity: &str) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.quantity == quantity)
            .map(|r| (r.lambda, r.ratio))
            .collect()
    }
}

pub fn write_rows<W: std::io::Write>(rows: &[LedgerRow], writer: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Numerical settings shared by the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub sampler: KnSampler,
    /// Multiplier on the surface quadrature resolution.
    pub resolution_scale: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            sampler: KnSampler::default(),
            resolution_scale: 1.0,
        }
    }
}

/// Kakeya–Nikodym value and tube volume of one field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KnValue {
    pub value: f64,
    pub volume: f64,
}

/// Per-field memo of the expensive functionals.
pub struct Cell {
    pub ladder: Ladder,
    pub k: usize,
    pub field: EigenfunctionField,
    norms: Mutex<BTreeMap<u64, f64>>,
    kn: OnceLock<Result<KnValue>>,
    restriction: OnceLock<Result<f64>>,
}

impl Cell {
    pub fn lambda(&self) -> f64 {
        self.field.lambda()
    }

    fn name(&self) -> String {
        format!("{}/k={}", self.ladder.label(), self.k)
    }
}

/// Cache of fields and functionals keyed by `(family, k)`, shared by all
/// experiments of a run so each Kakeya–Nikodym search happens once.
pub struct Workbench {
    settings: Settings,
    cells: Mutex<HashMap<(Ladder, usize), Arc<Cell>>>,
}

impl Workbench {
    pub fn new(settings: Settings) -> Self {
        Workbench {
            settings,
            cells: Mutex::new(HashMap::new()),
        }
    }

    pub fn settings(&self) -> &Settings {
        &self.settings
    }

    pub fn cell(&self, ladder: &Ladder, k: usize) -> Result<Arc<Cell>> {
        if let Some(c) = self.cells.lock().expect("cache lock").get(&(ladder.clone(), k)) {
            return Ok(c.clone());
        }
        let cell = Arc::new(Cell {
            ladder: ladder.clone(),
            k,
            field: ladder.field(k)?,
            norms: Mutex::new(BTreeMap::new()),
            kn: OnceLock::new(),
            restriction: OnceLock::new(),
        });
        let mut cells = self.cells.lock().expect("cache lock");
        Ok(cells.entry((ladder.clone(), k)).or_insert(cell).clone())
    }

    /// Every cell created so far, ordered by family label and degree.
    pub fn cells(&self) -> Vec<Arc<Cell>> {
        let mut v: Vec<Arc<Cell>> = self.cells.lock().expect("cache lock").values().cloned().collect();
        v.sort_by_key(|c| (c.ladder.label(), c.k));
        v
    }

    pub fn lp(&self, cell: &Cell, p: f64) -> Result<f64> {
        let key = p.to_bits();
        if let Some(v) = cell.norms.lock().expect("norm lock").get(&key) {
            return Ok(*v);
        }
        let grid = QuadratureGrid::for_field(&cell.field, self.settings.resolution_scale);
        let v = lp_norm(&cell.field, &grid, p)?;
        cell.norms.lock().expect("norm lock").insert(key, v);
        Ok(v)
    }

    pub fn kn(&self, cell: &Cell) -> Result<KnValue> {
        cell.kn
            .get_or_init(|| {
                let r = kn_maximal(&cell.field, cell.lambda(), &self.settings.sampler)?;
                Ok(KnValue {
                    value: r.value,
                    volume: r.volume,
                })
            })
            .clone()
    }

    pub fn restriction(&self, cell: &Cell) -> Result<f64> {
        cell.restriction
            .get_or_init(|| Ok(restriction_maximal(&cell.field, &self.settings.sampler)?.value))
            .clone()
    }
}

impl Default for Workbench {
    fn default() -> Self {
        Workbench::new(Settings::default())
    }
}

pub(crate) fn in_cell<T>(experiment: &str, cell: &Cell, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Cell {
        experiment: experiment.to_string(),
        cell: cell.name(),
        source: Box::new(e),
    })
}
