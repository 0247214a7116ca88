use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::Serialize;

use super::{
    delta, fit_scaling, in_cell, line_fit, trend_slope, InequalityReport, Ladder, LedgerRow, Verdict, Workbench,
    BOUNDED_TREND, DECAYING, NON_DECAYING,
};
use crate::eigenfunctions::torus_wave;
use crate::error::{Error, Result};
use crate::functionals::restrict_integral;
use crate::geometry::{geodesic_segment, ChartPoint, TangentVector};

/// Largest fitted `log C_eps` vs `log(1/eps)` slope accepted.
pub const C_EPS_SLOPE: f64 = 2.3;
/// Relative slack for the Hölder chain.
pub const HOLDER_TOLERANCE: f64 = 1e-6;

fn check_ks(ks: &[usize]) -> Result<()> {
    if ks.len() < 5 {
        return Err(Error::InvalidArgument(format!(
            "k range needs at least 5 degrees for a trend, got {}",
            ks.len()
        )));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn row(
    experiment: &str,
    family: &str,
    k: usize,
    lambda: f64,
    quantity: &str,
    param: Option<f64>,
    lhs: f64,
    rhs: f64,
) -> LedgerRow {
    LedgerRow {
        experiment: experiment.to_string(),
        family: family.to_string(),
        k,
        lambda,
        quantity: quantity.to_string(),
        param,
        lhs,
        rhs,
        ratio: lhs / rhs,
    }
}

fn ratio_verdict(rows: &[LedgerRow], quantity: &str, limit: f64) -> Result<Verdict> {
    let pairs: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.quantity == quantity)
        .map(|r| (r.lambda, r.ratio))
        .collect();
    let max_ratio = pairs.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let finite = pairs.iter().all(|p| p.1.is_finite());
    let trend = trend_slope(&pairs)?;
    let mut slopes = BTreeMap::new();
    slopes.insert("trend".to_string(), trend);
    Ok(Verdict {
        pass: finite && trend <= limit,
        max_ratio,
        slopes,
        notes: Vec::new(),
    })
}

fn base_params(ks: &[usize], p: Option<f64>) -> BTreeMap<String, Vec<f64>> {
    let mut m = BTreeMap::new();
    m.insert("k".to_string(), ks.iter().map(|&k| k as f64).collect());
    if let Some(p) = p {
        m.insert("p".to_string(), vec![p]);
    }
    m
}

/// Ledger of `lambda^{-delta(p)} ||e||_p`; passes when bounded with
/// trend slope at most 0.02.
pub fn verify_estimate_1(wb: &Workbench, ladder: &Ladder, p: f64, ks: &[usize]) -> Result<InequalityReport> {
    const NAME: &str = "verify-estimate1";
    check_ks(ks)?;
    let d = delta(p)?;
    let family = ladder.label();
    let rows: Vec<LedgerRow> = ks
        .par_iter()
        .map(|&k| {
            let cell = wb.cell(ladder, k)?;
            let norm = in_cell(NAME, &cell, wb.lp(&cell, p))?;
            let lambda = cell.lambda();
            Ok(row(
                NAME,
                &family,
                k,
                lambda,
                "normalized_lp",
                Some(p),
                norm,
                lambda.powf(d),
            ))
        })
        .collect::<Result<_>>()?;
    let mut verdict = ratio_verdict(&rows, "normalized_lp", BOUNDED_TREND)?;
    let norms: Vec<(f64, f64)> = rows.iter().map(|r| (r.lambda, r.lhs)).collect();
    verdict.slopes.insert("norm".into(), fit_scaling(&norms)?.slope);
    Ok(InequalityReport {
        experiment: NAME.into(),
        family,
        params: base_params(ks, Some(p)),
        rows,
        verdict,
    })
}

/// Ledger of `sup_gamma int_gamma |e|^2 / (lambda^{1/p} ||e||_p^2)` with the
/// sup taken by the coarse-to-fine geodesic search.
pub fn verify_bourgain(wb: &Workbench, ladder: &Ladder, p: f64, ks: &[usize]) -> Result<InequalityReport> {
    const NAME: &str = "verify-bourgain";
    check_ks(ks)?;
    delta(p)?;
    let family = ladder.label();
    let rows: Vec<LedgerRow> = ks
        .par_iter()
        .map(|&k| {
            let cell = wb.cell(ladder, k)?;
            let norm = in_cell(NAME, &cell, wb.lp(&cell, p))?;
            let sup = in_cell(NAME, &cell, wb.restriction(&cell))?;
            let lambda = cell.lambda();
            let rhs = if p.is_infinite() {
                norm * norm
            } else {
                lambda.powf(1.0 / p) * norm * norm
            };
            Ok(row(NAME, &family, k, lambda, "restriction_ratio", Some(p), sup, rhs))
        })
        .collect::<Result<_>>()?;
    let mut verdict = ratio_verdict(&rows, "restriction_ratio", BOUNDED_TREND)?;
    let sups: Vec<(f64, f64)> = rows.iter().map(|r| (r.lambda, r.lhs)).collect();
    verdict.slopes.insert("restriction".into(), fit_scaling(&sups)?.slope);
    Ok(InequalityReport {
        experiment: NAME.into(),
        family,
        params: base_params(ks, Some(p)),
        rows,
        verdict,
    })
}

/// L4 versus Kakeya-Nikodym ledger: `||e||_4^4 <= eps lambda^{1/2} + C_eps lambda^{1/2} KN + C`
/// with `C = 1` and `C_eps` the least constant that makes every row hold.
pub fn verify_theorem1(wb: &Workbench, ladder: &Ladder, ks: &[usize], eps_grid: &[f64]) -> Result<InequalityReport> {
    const NAME: &str = "verify-theorem1";
    const C: f64 = 1.0;
    check_ks(ks)?;
    if eps_grid.is_empty() || eps_grid.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
        return Err(Error::InvalidArgument(format!(
            "epsilon grid {eps_grid:?} not in (0, 1]"
        )));
    }
    let family = ladder.label();
    // (lambda, ||e||_4^4, KN)
    let cells: Vec<(usize, f64, f64, f64)> = ks
        .par_iter()
        .map(|&k| {
            let cell = wb.cell(ladder, k)?;
            let l4 = in_cell(NAME, &cell, wb.lp(&cell, 4.0))?;
            let kn = in_cell(NAME, &cell, wb.kn(&cell))?;
            Ok((k, cell.lambda(), l4.powi(4), kn.value))
        })
        .collect::<Result<_>>()?;
    let c_eps: Vec<f64> = eps_grid
        .iter()
        .map(|&eps| {
            cells
                .iter()
                .map(|&(_, lambda, lhs, kn)| ((lhs - eps * lambda.sqrt() - C) / (lambda.sqrt() * kn)).max(0.0))
                .fold(0.0, f64::max)
        })
        .collect();
    let mut rows = Vec::new();
    for (&eps, &ce) in eps_grid.iter().zip(&c_eps) {
        for &(k, lambda, lhs, kn) in &cells {
            let rhs = eps * lambda.sqrt() + ce * lambda.sqrt() * kn + C;
            rows.push(row(NAME, &family, k, lambda, "theorem1", Some(eps), lhs, rhs));
        }
    }
    let max_ratio = rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
    let satisfiable = c_eps.iter().all(|c| c.is_finite()) && max_ratio <= 1.0 + 1e-12;
    let mut slopes = BTreeMap::new();
    let mut notes = Vec::new();
    let positive: Vec<(f64, f64)> = eps_grid
        .iter()
        .zip(&c_eps)
        .filter(|(_, &c)| c > 0.0)
        .map(|(&e, &c)| ((1.0 / e).ln(), c.ln()))
        .collect();
    let mut slope_ok = true;
    if positive.len() >= 2 {
        let (xs, ys): (Vec<f64>, Vec<f64>) = positive.iter().copied().unzip();
        let s = line_fit(&xs, &ys).0;
        slopes.insert("c_eps".into(), s);
        slope_ok = s <= C_EPS_SLOPE;
        if positive.len() < eps_grid.len() {
            notes.push(format!(
                "C_eps = 0 for {} of {} epsilons; slope fitted on the positive values",
                eps_grid.len() - positive.len(),
                eps_grid.len()
            ));
        }
    } else {
        notes.push(format!(
            "C_eps is positive for {} of {} epsilons: the epsilon term and C absorb the left side, no slope to fit",
            positive.len(),
            eps_grid.len()
        ));
    }
    let eps_term: Vec<(f64, f64)> = cells.iter().map(|&(_, l, lhs, _)| (l, lhs / l.sqrt())).collect();
    slopes.insert("l4_over_sqrt_lambda".into(), trend_slope(&eps_term)?);
    let mut params = base_params(ks, Some(4.0));
    params.insert("eps".into(), eps_grid.to_vec());
    params.insert("c_eps".into(), c_eps);
    params.insert("c".into(), vec![C]);
    Ok(InequalityReport {
        experiment: NAME.into(),
        family,
        params,
        rows,
        verdict: Verdict {
            pass: satisfiable && slope_ok,
            max_ratio,
            slopes,
            notes,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    NonDecaying,
    Decaying,
    Indeterminate,
}

impl Classification {
    pub fn of(slope: f64) -> Self {
        if slope >= NON_DECAYING {
            Classification::NonDecaying
        } else if slope <= DECAYING {
            Classification::Decaying
        } else {
            Classification::Indeterminate
        }
    }
}

/// Trend slopes of (bi) `lambda^{-1/2} sup int_gamma |e|^2`, (bii) the
/// Kakeya–Nikodym value and (biii) `lambda^{-delta(p)} ||e||_p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyTrends {
    pub family: String,
    pub saturating: bool,
    pub slopes: [f64; 3],
    pub classes: [Classification; 3],
    /// All three classified as expected for the family.
    pub as_expected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Corollary2Report {
    pub p: f64,
    pub families: Vec<FamilyTrends>,
    pub rows: Vec<LedgerRow>,
    /// No family has (bii) decaying while (biii) is non-decaying.
    pub equivalence_consistent: bool,
    pub pass: bool,
}

impl Corollary2Report {
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> csv::Result<()> {
        super::write_rows(&self.rows, writer)
    }
}

pub fn verify_corollary2(wb: &Workbench, families: &[Ladder], p: f64, ks: &[usize]) -> Result<Corollary2Report> {
    const NAME: &str = "verify-corollary2";
    check_ks(ks)?;
    if !(p > 2.0 && p < 6.0) {
        return Err(Error::InvalidExponent(p));
    }
    let d = delta(p)?;
    let mut rows = Vec::new();
    let mut trends = Vec::new();
    for ladder in families {
        let family = ladder.label();
        let cells: Vec<[LedgerRow; 3]> = ks
            .par_iter()
            .map(|&k| {
                let cell = wb.cell(ladder, k)?;
                let lambda = cell.lambda();
                let sup = in_cell(NAME, &cell, wb.restriction(&cell))?;
                let kn = in_cell(NAME, &cell, wb.kn(&cell))?;
                let norm = in_cell(NAME, &cell, wb.lp(&cell, p))?;
                Ok([
                    row(NAME, &family, k, lambda, "bi", None, sup, lambda.sqrt()),
                    row(NAME, &family, k, lambda, "bii", None, kn.value, 1.0),
                    row(NAME, &family, k, lambda, "biii", Some(p), norm, lambda.powf(d)),
                ])
            })
            .collect::<Result<_>>()?;
        let mut slopes = [0.0; 3];
        for q in 0..3 {
            let pairs: Vec<(f64, f64)> = cells.iter().map(|c| (c[q].lambda, c[q].ratio)).collect();
            slopes[q] = trend_slope(&pairs)?;
        }
        let classes = slopes.map(Classification::of);
        let want = if ladder.saturating() {
            Classification::NonDecaying
        } else {
            Classification::Decaying
        };
        trends.push(FamilyTrends {
            family: family.clone(),
            saturating: ladder.saturating(),
            slopes,
            classes,
            as_expected: classes.iter().all(|&c| c == want),
        });
        rows.extend(cells.into_iter().flatten());
    }
    let equivalence_consistent = trends
        .iter()
        .all(|t| !(t.classes[1] == Classification::Decaying && t.classes[2] == Classification::NonDecaying));
    let pass = equivalence_consistent && trends.iter().all(|t| t.as_expected);
    Ok(Corollary2Report {
        p,
        families: trends,
        rows,
        equivalence_consistent,
        pass,
    })
}

/// One instance of `KN^{1/2} <= Vol(T)^{1/4} ||e||_4`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderRow {
    pub family: String,
    pub k: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// The Hölder chain over every cell of the workbench whose
/// Kakeya–Nikodym value has been computed.
pub fn holder_chain(wb: &Workbench) -> Result<Vec<HolderRow>> {
    let mut out = Vec::new();
    for cell in wb.cells() {
        let Some(Ok(kn)) = cell.kn.get() else { continue };
        let l4 = wb.lp(&cell, 4.0)?;
        let lhs = kn.value.sqrt();
        let rhs = kn.volume.powf(0.25) * l4;
        out.push(HolderRow {
            family: cell.ladder.label(),
            k: cell.k,
            lhs,
            rhs,
            holds: lhs <= rhs * (1.0 + HOLDER_TOLERANCE),
        });
    }
    Ok(out)
}

/// Kakeya–Nikodym values over a ladder; the ratio column is `KN / Vol`.
pub fn kn_table(wb: &Workbench, ladder: &Ladder, ks: &[usize]) -> Result<InequalityReport> {
    const NAME: &str = "kn-maximal";
    let family = ladder.label();
    let rows: Vec<LedgerRow> = ks
        .par_iter()
        .map(|&k| {
            let cell = wb.cell(ladder, k)?;
            let kn = in_cell(NAME, &cell, wb.kn(&cell))?;
            Ok(row(NAME, &family, k, cell.lambda(), "kn", None, kn.value, kn.volume))
        })
        .collect::<Result<_>>()?;
    let mut slopes = BTreeMap::new();
    if ks.len() >= 5 {
        let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.lambda, r.lhs)).collect();
        slopes.insert("trend".into(), trend_slope(&pairs)?);
    }
    let max_ratio = rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
    Ok(InequalityReport {
        experiment: NAME.into(),
        family,
        params: base_params(ks, None),
        rows,
        verdict: Verdict {
            pass: true,
            max_ratio,
            slopes,
            notes: Vec::new(),
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaRow {
    pub p: f64,
    pub delta: f64,
}

/// `delta(p)` at `p` in {2, 3, 4, 6, 8, inf}.
pub fn delta_table() -> Vec<DeltaRow> {
    [2.0, 3.0, 4.0, 6.0, 8.0, f64::INFINITY]
        .into_iter()
        .map(|p| DeltaRow {
            p,
            delta: delta(p).expect("p >= 2"),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prop3Row {
    pub n: i64,
    pub geodesic_slope: f64,
    pub lambda: f64,
    pub value: f64,
    pub exact: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prop3Report {
    pub rows: Vec<Prop3Row>,
    /// Fitted decay exponent per geodesic slope.
    pub fits: Vec<(f64, f64)>,
    pub warnings: Vec<String>,
    pub pass: bool,
}

impl Prop3Report {
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Whether the line of slope `sigma` through the `2 pi`-periodic square
/// torus closes up within length `max_length`.
pub fn closes_within(sigma: f64, max_length: f64) -> bool {
    let qmax = (max_length / TAU).floor() as i64;
    for q in 1..=qmax.max(1) {
        let p = (sigma * q as f64).round();
        let len = TAU * ((p * p) + (q * q) as f64).sqrt();
        if (sigma * q as f64 - p).abs() < 1e-12 && len <= max_length {
            return true;
        }
    }
    false
}

/// `lambda^{-1/2} int_gamma |e_m|^2 ds` for `m = (n, n + 1)` along unit
/// segments of the given slopes; the exact value is
/// `lambda^{-1/2} / (4 pi^2)`, so the fitted exponent must be `-1/2`.
pub fn prop3_torus_check(ns: &[i64], slopes: &[f64]) -> Result<Prop3Report> {
    if ns.len() < 5 {
        return Err(Error::InvalidArgument("need at least 5 frequencies".into()));
    }
    let mut warnings = Vec::new();
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    let mut pass = true;
    for &sigma in slopes {
        let closed = closes_within(sigma, 10.0);
        if closed {
            warnings.push(format!(
                "slope {sigma}: geodesic closes within length 10, outside the hypothesis of the non-closed case"
            ));
        }
        let norm = (1.0 + sigma * sigma).sqrt();
        let v = TangentVector::new(ChartPoint::plane(0.3, 0.2), [1.0 / norm, sigma / norm]);
        let mut pairs = Vec::new();
        for &n in ns {
            let field = torus_wave([n, n + 1], [TAU, TAU])?;
            let gamma = geodesic_segment(field.surface(), &v, 1.0)?;
            let lambda = field.lambda();
            let value = restrict_integral(&field, &gamma) / lambda.sqrt();
            rows.push(Prop3Row {
                n,
                geodesic_slope: sigma,
                lambda,
                value,
                exact: 1.0 / (lambda.sqrt() * 4.0 * std::f64::consts::PI.powi(2)),
            });
            pairs.push((lambda, value));
        }
        let s = fit_scaling(&pairs)?.slope;
        if !closed {
            pass &= (s + 0.5).abs() <= 1e-6;
        }
        fits.push((sigma, s));
    }
    Ok(Prop3Report {
        rows,
        fits,
        warnings,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_slopes_close() {
        assert!(closes_within(1.0, 10.0));
        assert!(closes_within(0.0, 10.0));
        assert!(!closes_within(2.0, 10.0));
        assert!(!closes_within((1.0 + 5f64.sqrt()) / 2.0, 10.0));
    }

    #[test]
    fn classification_thresholds() {
        assert_eq!(Classification::of(0.0), Classification::NonDecaying);
        assert_eq!(Classification::of(-0.03), Classification::Indeterminate);
        assert_eq!(Classification::of(-0.5), Classification::Decaying);
    }
}
