//! Exponent sweeps over power controls `√θ(‖x‖^r + ‖y‖^r)`.
//!
//! Each row evaluates, at the reference point `x = y = e₁`, the verdict of
//! every stability series, the tightest scaling constants on the sample
//! pairs, the extraction verdict of every route and the closed-form series
//! coefficients. The additive series change verdict at `r = 1`, the
//! quadratic ones at `r = 2`.

use aqlab::control::{closed_form_power, series, smallest_l, ControlFunction, Regime, SeriesId, SmallestL};
use aqlab::direct::{extract, Route};
use aqlab::mappings::Mapping;
use aqlab::Vector;

use crate::output::{opt_real, real, Table};
use crate::pipeline::Experiment;
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub r: f64,
    /// Series verdicts in [`SeriesId::ALL`] order.
    pub series: [&'static str; 4],
    pub smallest_l: [SmallestL; 2],
    /// Extraction verdicts in [`Route::ALL`] order.
    pub extraction: [&'static str; 4],
    pub coefficients: [Option<f64>; 4],
}

pub fn sweep_rows(exp: &Experiment, f: &Mapping, r_values: &[f64]) -> Result<Vec<SweepRow>, CliError> {
    let (theta, _) = exp.phi.power_params().expect("configured controls are power type");
    let t = &exp.cfg.tolerances;
    let space = exp.cfg.spaces.x.clone();
    let e1 = Vector::basis(space.dimension(), 0);
    let zero = Vector::zeros(space.dimension());
    let mut scale_pairs = Vec::with_capacity(2 * exp.samples.points.len());
    for x in &exp.samples.points {
        scale_pairs.push((x.clone(), x.clone()));
        scale_pairs.push((x.clone(), zero.clone()));
    }
    let mut rows = Vec::with_capacity(r_values.len());
    for &r in r_values {
        // Verdicts use a unit-amplitude control so that θ = 0 cannot mask them.
        let phi = ControlFunction::power(space.clone(), 1.0, r)?;
        let mut series_v = [""; 4];
        let mut coefficients = [None; 4];
        for (i, id) in SeriesId::ALL.into_iter().enumerate() {
            let s = series(id, &phi, &e1, &e1, exp.beta, t.series, t.series_max_terms)?;
            series_v[i] = s.verdict.as_str();
            coefficients[i] = closed_form_power(theta, r, exp.beta, id)?;
        }
        let sl = |regime| smallest_l(&phi, exp.beta, &scale_pairs, regime);
        let smallest = [sl(Regime::Halving)?, sl(Regime::Doubling)?];
        let mut extraction = [""; 4];
        for (i, route) in Route::ALL.into_iter().enumerate() {
            extraction[i] = extract(route, f, &phi, exp.beta, &e1, &e1, exp.tol, t.k_max)?.verdict.as_str();
        }
        rows.push(SweepRow {
            r,
            series: series_v,
            smallest_l: smallest,
            extraction,
            coefficients,
        });
    }
    Ok(rows)
}

fn smallest_cell(s: SmallestL) -> String {
    match s {
        SmallestL::Below(v) => real(v),
        SmallestL::NoneBelowOne(_) => "none<1".into(),
    }
}

/// The sweep as CSV, one row per `r`.
pub fn sweep_exponent(exp: &Experiment, f: &Mapping, r_values: &[f64]) -> Result<String, CliError> {
    let mut header = vec!["r".to_string()];
    header.extend(SeriesId::ALL.iter().map(|id| id.as_str().to_string()));
    header.push("smallest_L_halving".into());
    header.push("smallest_L_doubling".into());
    header.extend(Route::ALL.iter().map(|r| format!("extract_{}", r.as_str())));
    header.extend(SeriesId::ALL.iter().map(|id| format!("coefficient_{}", id.as_str())));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut table = Table::new(&header_refs);
    for row in sweep_rows(exp, f, r_values)? {
        let mut cells = vec![real(row.r)];
        cells.extend(row.series.iter().map(|s| s.to_string()));
        cells.extend(row.smallest_l.iter().map(|s| smallest_cell(*s)));
        cells.extend(row.extraction.iter().map(|s| s.to_string()));
        cells.extend(row.coefficients.iter().map(|c| opt_real(*c)));
        table.row(cells);
    }
    Ok(table.finish())
}
