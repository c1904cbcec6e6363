//! Scenario orchestration: axioms, admissibility, series, extraction,
//! bounds, fixed points, audits and sweeps, in that order.

use std::collections::BTreeMap;
use std::path::Path;

use aqlab::audit::{audit_corollary, check_structure, direct_bound, route_consistency, verify_direct_bound, worst_status};
use aqlab::control::{series, ControlFunction, Regime, SeriesId};
use aqlab::direct::{domination_entry, reconcile_f, Reconciliation, Route};
use aqlab::fixpoint::{fp_extract_and_verify, stability_bound_fp, FixpointOutcome};
use aqlab::mappings::{admissibility_check, calibrate_amplitude, Core, Mapping, Perturbation, Table as GridTable};
use aqlab::spaces::{check_beta_homogeneity, check_fnorm_axioms, norm_eval, NormKind};
use aqlab::{AuditEntry, AuditReport, Error, Vector, Witness};
use serde::{Deserialize, Serialize};

use crate::config::{CoreConfig, ExperimentConfig, Method, PerturbationConfig};
use crate::output::{self, opt_real, real, Table};
use crate::sampling::Samples;
use crate::sweep;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Axioms,
    Admissibility,
    Series,
    Extract,
    Bound,
    Fixpoint,
    Audit,
    Sweep,
}

/// Stages executed by each subcommand.
pub fn stages_for(command: &str) -> &'static [Stage] {
    use Stage::*;
    match command {
        "axioms" => &[Axioms],
        "series" => &[Series],
        "extract" => &[Admissibility, Extract],
        "fixpoint" => &[Admissibility, Fixpoint],
        "bound" => &[Admissibility, Extract, Bound, Fixpoint],
        "audit" => &[Audit],
        "sweep" => &[Sweep],
        _ => &[Axioms, Admissibility, Series, Extract, Bound, Fixpoint, Audit, Sweep],
    }
}

/// Command-line overrides applied on top of the config.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    /// Replaces the extraction tolerance.
    pub tol: Option<f64>,
}

/// Everything a run produced: the report and the files to write.
#[derive(Debug)]
pub struct Outcome {
    pub report: AuditReport,
    pub files: Vec<(String, String)>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        self.report.exit_code()
    }

    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_str())
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        output::write_all(dir, &self.files)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TableRow {
    x: f64,
    z: f64,
    value: f64,
}

fn load_table(path: &Path) -> Result<GridTable, CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut points = Vec::new();
    for row in reader.deserialize::<TableRow>() {
        let r = row.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        points.push((r.x, r.z, r.value));
    }
    Ok(GridTable::from_points(&points)?)
}

/// The mapping described by the config, before any calibration.
pub fn build_mapping(cfg: &ExperimentConfig) -> Result<Mapping, CliError> {
    let (x, y) = (cfg.spaces.x.clone(), cfg.spaces.y.clone());
    let core = match &cfg.mapping.core {
        CoreConfig::Zero => Core::Zero,
        CoreConfig::Separable { a, q } => Core::Separable { a: a.clone(), q: q.clone() },
    };
    let perturbation = match &cfg.mapping.perturbation {
        None => None,
        Some(PerturbationConfig::PowerProduct { eta, a, b }) => Some(Perturbation::power_product(*eta, *a, *b)),
        Some(PerturbationConfig::Oscillatory { eta, a, b, freq }) => {
            Some(Perturbation::oscillatory(*eta, *a, *b, *freq))
        }
        Some(PerturbationConfig::Table { eta, path }) => Some(Perturbation::table(*eta, load_table(path)?)),
    };
    Ok(Mapping::new(x, y, core, perturbation)?)
}

/// A validated config together with its derived objects.
pub struct Experiment {
    pub cfg: ExperimentConfig,
    pub phi: ControlFunction,
    pub template: Mapping,
    pub samples: Samples,
    pub beta: f64,
    pub tol: f64,
}

impl Experiment {
    pub fn new(mut cfg: ExperimentConfig, ov: Overrides) -> Result<Self, CliError> {
        if let Some(t) = ov.tol {
            if !(t.is_finite() && t > 0.0) {
                return Err(CliError::Config(format!("--tol must be positive, got {t}")));
            }
            cfg.tolerances.extraction = t;
        }
        if let Some(s) = ov.seed {
            cfg.samples.seed = Some(s);
        }
        cfg.validate()?;
        let phi = ControlFunction::from_spec(cfg.spaces.x.clone(), cfg.phi)?;
        let template = build_mapping(&cfg)?;
        let samples = Samples::generate(&cfg.samples, cfg.spaces.x.dimension(), None)?;
        Ok(Experiment {
            beta: cfg.beta(),
            tol: cfg.tolerances.extraction,
            cfg,
            phi,
            template,
            samples,
        })
    }

    pub fn run(&self, stages: &[Stage]) -> Result<Outcome, CliError> {
        let mut st = State::default();
        let mut f = self.template.clone();
        for &stage in stages {
            match stage {
                Stage::Axioms => self.axioms(&mut st)?,
                Stage::Admissibility => f = self.admissibility(&mut st)?,
                Stage::Series => self.series(&mut st)?,
                Stage::Extract => self.extract(&f, &mut st)?,
                Stage::Bound => self.bound(&f, &mut st)?,
                Stage::Fixpoint => self.fixpoint(&f, &mut st)?,
                Stage::Audit => self.audit(&f, &mut st)?,
                Stage::Sweep => {
                    if !self.cfg.sweep.r_values.is_empty() || stages.len() == 1 {
                        st.files
                            .push(("sweep.csv".into(), sweep::sweep_exponent(self, &f, &self.cfg.sweep.r_values)?));
                    }
                }
            }
        }
        if stages.contains(&Stage::Extract) || stages.contains(&Stage::Fixpoint) {
            self.consistency(&mut st)?;
        }
        st.report.sort();
        let mut files = st.files;
        files.push(("report.json".into(), output::json(&st.report)));
        files.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(Outcome {
            report: st.report,
            files,
        })
    }

    fn methods(&self, direct: bool) -> Vec<Regime> {
        self.cfg
            .methods()
            .into_iter()
            .filter_map(|m| match (m, direct) {
                (Method::DirectHalving, true) | (Method::FixpointHalving, false) => Some(Regime::Halving),
                (Method::DirectDoubling, true) | (Method::FixpointDoubling, false) => Some(Regime::Doubling),
                _ => None,
            })
            .collect()
    }

    fn axioms(&self, st: &mut State) -> Result<(), CliError> {
        // Deep null sequences, so the trend rule also resolves small β.
        let seqs: Vec<Vec<f64>> = vec![
            (0..=120).map(|n| (-8.0 * n as f64).exp2()).collect(),
            (0..=30).map(|n| 10f64.powi(-10 * n)).collect(),
        ];
        let scalars = [-2.0, -1.0, -0.5, 0.0, 0.25, 0.5, 1.0, 3.0];
        let tol = self.cfg.tolerances.identity;
        let spaces = [("x", &self.cfg.spaces.x), ("y", &self.cfg.spaces.y)];
        for (name, space) in spaces {
            let samples = if space.dimension() == self.samples.points.first().map_or(0, |v| v.dim()) {
                self.samples.points.clone()
            } else {
                Samples::generate(&self.cfg.samples, space.dimension(), None)?.points
            };
            for mut e in check_fnorm_axioms(space, &samples, &seqs, tol)? {
                e.check_id = format!("space.{name}.{}", e.check_id.trim_start_matches("space."));
                st.report.push(e);
            }
            if space.kind() == NormKind::BetaHomogeneous {
                let mut e = check_beta_homogeneity(space, &samples, &scalars, tol)?;
                e.check_id = format!("space.{name}.{}", e.check_id.trim_start_matches("space."));
                st.report.push(e);
            }
        }
        Ok(())
    }

    fn admissibility(&self, st: &mut State) -> Result<Mapping, CliError> {
        let tuples = &self.samples.tuples;
        let mut f = self.template.clone();
        if self.cfg.mapping.calibrate {
            match calibrate_amplitude(&self.template, &self.phi, tuples) {
                Ok(m) => {
                    let eta = m.eta().unwrap_or(0.0);
                    st.report.push(
                        AuditEntry::pass("mapping.calibration", eta)
                            .with_witness(Witness::at(Vec::new()).with("eta", eta))
                            .with_notes(format!("calibrated on {} tuple(s)", tuples.len())),
                    );
                    f = m;
                }
                Err(Error::Calibration { reason, witness }) => {
                    let mut e = AuditEntry::refused("mapping.calibration", reason);
                    e.witness = Some(Witness::at(witness));
                    st.report.push(e);
                }
                Err(e) => return Err(e.into()),
            }
        }
        if tuples.is_empty() {
            st.report
                .push(AuditEntry::refused("mapping.admissibility", "no sample tuples"));
        } else {
            st.report.push(admissibility_check(&f, &self.phi, tuples)?);
        }
        Ok(f)
    }

    fn series(&self, st: &mut State) -> Result<(), CliError> {
        let t = &self.cfg.tolerances;
        let mut table = Table::new(&["series_id", "x", "y", "value", "terms", "tail_bound", "converged"]);
        for id in SeriesId::ALL {
            for x in &self.samples.points {
                let zero = Vector::zeros(x.dim());
                for y in [x, &zero] {
                    let r = series(id, &self.phi, x, y, self.beta, t.series, t.series_max_terms)?;
                    table.row([
                        id.as_str().to_string(),
                        output::vector(x),
                        output::vector(y),
                        real(r.value),
                        r.terms_used.to_string(),
                        real(r.tail_bound),
                        r.converged.to_string(),
                    ]);
                }
            }
        }
        st.files.push(("series.csv".into(), table.finish()));
        Ok(())
    }

    fn extract(&self, f: &Mapping, st: &mut State) -> Result<(), CliError> {
        let t = &self.cfg.tolerances;
        let pairs = &self.samples.pairs;
        let mut table = st.extract_table.take().unwrap_or_else(|| {
            Table::new(&["route", "x", "z", "k_stop", "verdict", "limit", "last_gap", "tail_bound"])
        });
        for regime in self.methods(true) {
            let rec = reconcile_f(f, &self.phi, self.beta, regime, pairs, self.tol, t.k_max)?;
            for tr in rec.first.iter().chain(&rec.second) {
                table.row([
                    tr.route.as_str().to_string(),
                    output::vector(&tr.x),
                    output::vector(&tr.z),
                    tr.k_stop.to_string(),
                    tr.verdict.as_str().to_string(),
                    tr.limit.as_ref().map(output::vector).unwrap_or_default(),
                    real(tr.last_gap()),
                    real(tr.last_tail_bound()),
                ]);
            }
            st.report.push(rec.entry.clone());
            let traces: Vec<_> = rec.first.iter().chain(&rec.second).cloned().collect();
            if !traces.is_empty() {
                let mut e = domination_entry(&traces, f.y_space())?;
                e.check_id = format!("direct.{}.cauchy_domination", regime.as_str());
                st.report.push(e);
            }
            if rec.values.is_some() && !self.samples.tuples.is_empty() {
                let k = rec.first.iter().map(|t| t.k_stop).max().unwrap_or(0) as u32;
                let limit = f.scaled(Route::pair(regime).0.op(), k);
                self.structure(&limit, &format!("direct.{}", regime.as_str()), st)?;
            }
            st.direct.insert(regime, rec);
        }
        st.extract_table = Some(table);
        Ok(())
    }

    /// Structural checks on an extracted approximant. Convergence is only
    /// certified on the sampled box, so tuples whose arguments `x ± y`,
    /// `z ± w` leave it are skipped.
    fn structure(&self, limit: &Mapping, prefix: &str, st: &mut State) -> Result<(), CliError> {
        let range = self.cfg.samples.range;
        let inside = |a: &Vector, b: &Vector| {
            a.coords().iter().zip(b.coords()).all(|(p, q)| (p + q).abs() <= range && (p - q).abs() <= range)
        };
        let tuples: Vec<_> = self
            .samples
            .tuples
            .iter()
            .filter(|[x, y, z, w]| inside(x, y) && inside(z, w))
            .cloned()
            .collect();
        if tuples.is_empty() {
            st.report.push(AuditEntry::refused(
                format!("{prefix}.structure"),
                "no sample tuple keeps its arguments inside the sampled box",
            ));
            return Ok(());
        }
        match check_structure(limit, &tuples, self.cfg.tolerances.structure) {
            Ok(entries) => {
                for mut e in entries {
                    e.check_id = format!("{prefix}.{}", e.check_id);
                    st.report.push(e);
                }
            }
            Err(e @ Error::Numeric { .. }) => {
                st.report
                    .push(AuditEntry::refused(format!("{prefix}.structure"), e.to_string()));
            }
            Err(e) => return Err(e.into()),
        }
        Ok(())
    }

    fn bound(&self, f: &Mapping, st: &mut State) -> Result<(), CliError> {
        let pairs = &self.samples.pairs;
        let table = st
            .bound_table
            .get_or_insert_with(|| Table::new(&["method", "x", "z", "deviation", "bound", "slack"]));
        for regime in self.methods(true) {
            let id = format!("direct.{}.bound", regime.as_str());
            let Some(values) = st.direct.get(&regime).and_then(|r| r.values.as_ref()) else {
                st.report
                    .push(AuditEntry::refused(id, "approximant not available: extraction did not reconcile"));
                continue;
            };
            st.report
                .push(verify_direct_bound(f, values, &self.phi, self.beta, regime, pairs)?);
            for ((x, z), v) in pairs.iter().zip(values) {
                let dev = norm_eval(f.y_space(), &(&f.eval(x, z)? - v))?;
                let bound = match direct_bound(&self.phi, self.beta, regime, x, z)? {
                    Ok((a, b)) => a.min(b),
                    Err(_) => f64::INFINITY,
                };
                table.row([
                    format!("direct_{}", regime.as_str()),
                    output::vector(x),
                    output::vector(z),
                    real(dev),
                    real(bound),
                    real(bound - dev),
                ]);
            }
        }
        Ok(())
    }

    fn fixpoint(&self, f: &Mapping, st: &mut State) -> Result<(), CliError> {
        let t = &self.cfg.tolerances;
        let pairs = &self.samples.pairs;
        let l = self.cfg.fixpoint.l;
        for regime in self.methods(false) {
            let direct = st.direct.get(&regime).and_then(|r| r.values.clone());
            let out = fp_extract_and_verify(f, &self.phi, self.beta, l, regime, pairs, self.tol, t.n_max, direct.as_deref())?;
            st.report.extend(out.entries.iter().cloned());
            let table = st
                .fixpoint_table
                .get_or_insert_with(|| Table::new(&["regime", "operator", "n", "distance", "ratio"]));
            let mut verdict = FixpointVerdict {
                regime: regime.as_str(),
                stated_l: l,
                operators: Vec::new(),
                status: worst_status(&out.entries).as_str(),
            };
            if let Some((r1, r2)) = &out.runs {
                for run in [r1, r2] {
                    for (n, d) in run.distances.iter().enumerate() {
                        let ratio = if n == 0 { None } else { run.ratios.get(n - 1).copied() };
                        table.row([
                            regime.as_str().to_string(),
                            run.operator.as_str().to_string(),
                            n.to_string(),
                            real(*d),
                            opt_real(ratio),
                        ]);
                    }
                    verdict.operators.push(OperatorVerdict {
                        operator: run.operator.as_str(),
                        weight: run.weight.as_str(),
                        alternative: run.alternative.as_str(),
                        n_stop: run.n_stop,
                        alpha_measured: run.alpha_measured,
                        residual: run.residual,
                        aposteriori_holds: run.aposteriori.map(|a| a.holds),
                    });
                }
                if !self.samples.tuples.is_empty() && out.values.is_some() {
                    self.structure(&r1.limit, &format!("fixpoint.{}", regime.as_str()), st)?;
                }
                if st.bound_table.is_some() {
                    let table = st
                        .bound_table
                        .get_or_insert_with(|| Table::new(&["method", "x", "z", "deviation", "bound", "slack"]));
                    for (x, z) in pairs {
                        let dev = norm_eval(f.y_space(), &(&f.eval(x, z)? - &r1.limit.eval(x, z)?))?;
                        let bound = stability_bound_fp(l, self.beta, &self.phi, x, z, regime)?;
                        table.row([
                            format!("fixpoint_{}", regime.as_str()),
                            output::vector(x),
                            output::vector(z),
                            real(dev),
                            real(bound),
                            real(bound - dev),
                        ]);
                    }
                }
            }
            st.verdicts.push(verdict);
            st.fixpoint.insert(regime, out);
        }
        Ok(())
    }

    fn consistency(&self, st: &mut State) -> Result<(), CliError> {
        let pairs = &self.samples.pairs;
        for regime in [Regime::Halving, Regime::Doubling] {
            let mut routes: Vec<(String, Option<Vec<Vector>>)> = Vec::new();
            if let Some(rec) = st.direct.get(&regime) {
                for traces in [&rec.first, &rec.second] {
                    let name = traces.first().map_or(Route::pair(regime).0, |t| t.route).as_str();
                    let vals: Option<Vec<Vector>> = traces.iter().map(|t| t.limit.clone()).collect();
                    routes.push((name.to_string(), vals));
                }
            }
            if let Some(out) = st.fixpoint.get(&regime) {
                match &out.runs {
                    Some((r1, r2)) => {
                        for run in [r1, r2] {
                            let converged = run.alternative.as_str() == "convergent";
                            let vals = if converged {
                                Some(pairs.iter().map(|(x, z)| run.limit.eval(x, z)).collect::<Result<Vec<_>, _>>()?)
                            } else {
                                None
                            };
                            routes.push((run.operator.as_str().to_string(), vals));
                        }
                    }
                    None => routes.push((format!("fixpoint_{}", regime.as_str()), None)),
                }
            }
            if routes.len() < 2 {
                continue;
            }
            let refs: Vec<(&str, Option<&[Vector]>)> =
                routes.iter().map(|(n, v)| (n.as_str(), v.as_deref())).collect();
            let mut e = route_consistency(&refs, &self.cfg.spaces.y, pairs, self.cfg.tolerances.routes)?;
            e.check_id = format!("routes.{}.consistency", regime.as_str());
            st.report.push(e);
        }
        if let Some(table) = st.extract_table.take() {
            st.files.push(("extract.csv".into(), table.finish()));
        }
        if let Some(table) = st.bound_table.take() {
            st.files.push(("bound.csv".into(), table.finish()));
        }
        if let Some(table) = st.fixpoint_table.take() {
            st.files.push(("fixpoint.csv".into(), table.finish()));
            st.files
                .push(("fixpoint_verdict.json".into(), output::json(&st.verdicts)));
        }
        Ok(())
    }

    fn audit(&self, f: &Mapping, st: &mut State) -> Result<(), CliError> {
        let (theta, r) = self.phi.power_params().expect("configured controls are power type");
        let pairs = &self.samples.pairs;
        for req in &self.cfg.audit.corollaries {
            let (th, rr, b) = (req.theta.unwrap_or(theta), req.r.unwrap_or(r), req.beta.unwrap_or(self.beta));
            match audit_corollary(req.id, th, rr, b, pairs) {
                Ok(entries) => st.report.extend(entries),
                Err(Error::Input(msg)) => st.report.push(AuditEntry::refused(
                    format!("corollary.{}", req.id.as_str()),
                    format!("not audited: {msg}"),
                )),
                Err(e) => return Err(e.into()),
            }
        }
        if self.cfg.audit.structure && !self.samples.tuples.is_empty() {
            for e in check_structure(f, &self.samples.tuples, self.cfg.tolerances.identity)? {
                st.report.push(e);
            }
        }
        Ok(())
    }
}

#[derive(Default)]
struct State {
    report: AuditReport,
    files: Vec<(String, String)>,
    direct: BTreeMap<Regime, Reconciliation>,
    fixpoint: BTreeMap<Regime, FixpointOutcome>,
    verdicts: Vec<FixpointVerdict>,
    extract_table: Option<Table>,
    bound_table: Option<Table>,
    fixpoint_table: Option<Table>,
}

#[derive(Serialize)]
struct FixpointVerdict {
    regime: &'static str,
    #[serde(rename = "stated_L")]
    stated_l: f64,
    status: &'static str,
    operators: Vec<OperatorVerdict>,
}

#[derive(Serialize)]
struct OperatorVerdict {
    operator: &'static str,
    weight: &'static str,
    alternative: &'static str,
    n_stop: usize,
    #[serde(serialize_with = "aqlab::report::ser_real")]
    alpha_measured: f64,
    #[serde(serialize_with = "aqlab::report::ser_real")]
    residual: f64,
    aposteriori_holds: Option<bool>,
}
