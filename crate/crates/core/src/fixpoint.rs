//! Fixed-point method: a generalized metric on sampled mappings, the four
//! scaling operators and the Diaz–Margolis iteration.
//!
//! The metric is `d(g, h) = sup ‖g(x,z) − h(x,z)‖ / weight(x, z)` over the
//! sample set, with weight `φ(x,x)φ(z,0)` (first) or `φ(x,0)φ(z,z)` (second).
//! All distances are sampled estimates.

use serde::Serialize;

use crate::control::{check_beta, check_condition, phi_eval, ControlFunction, Regime};
use crate::error::{Error, Result};
use crate::mappings::{Mapping, ScalingOp};
use crate::report::{AuditEntry, Status, Witness};
use crate::spaces::{norm_eval, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    /// `φ(x, x) φ(z, 0)`.
    First,
    /// `φ(x, 0) φ(z, z)`.
    Second,
}

impl WeightKind {
    pub fn as_str(self) -> &'static str {
        match self {
            WeightKind::First => "first",
            WeightKind::Second => "second",
        }
    }

    pub fn eval(self, phi: &ControlFunction, x: &Vector, z: &Vector) -> Result<f64> {
        let zero = Vector::zeros(x.dim());
        let (a, b) = match self {
            WeightKind::First => (phi_eval(phi, x, x)?, phi_eval(phi, z, &zero)?),
            WeightKind::Second => (phi_eval(phi, x, &zero)?, phi_eval(phi, z, z)?),
        };
        Ok(if a == 0.0 || b == 0.0 { 0.0 } else { a * b })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneralizedDistance {
    #[serde(serialize_with = "crate::report::ser_real")]
    pub value: f64,
    /// Sample attaining the supremum.
    pub witness: Option<(Vector, Vector)>,
    pub weight_kind: WeightKind,
    pub samples: usize,
}

/// Sampled generalized distance. Zero-weight points are skipped where
/// `g = h` and make the distance `+∞` otherwise.
pub fn gen_metric(
    g: &Mapping,
    h: &Mapping,
    phi: &ControlFunction,
    kind: WeightKind,
    samples: &[(Vector, Vector)],
) -> Result<GeneralizedDistance> {
    if samples.is_empty() {
        return Err(Error::input("generalized distance needs at least one sample"));
    }
    let y = g.y_space();
    let mut out = GeneralizedDistance {
        value: 0.0,
        witness: None,
        weight_kind: kind,
        samples: samples.len(),
    };
    for (x, z) in samples {
        let diff = norm_eval(y, &(&g.eval(x, z)? - &h.eval(x, z)?))?;
        if diff == 0.0 {
            continue;
        }
        let w = kind.eval(phi, x, z)?;
        let ratio = if w == 0.0 { f64::INFINITY } else { diff / w };
        if ratio > out.value {
            out.value = ratio;
            out.witness = Some((x.clone(), z.clone()));
            if ratio == f64::INFINITY {
                break;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Operator {
    /// `J g(x, z) = 2 g(x/2, z)`.
    J,
    /// `J′ g(x, z) = 4 g(x, z/2)`.
    JPrime,
    /// `J g(x, z) = g(2x, z)/2`.
    JMul,
    /// `J′ g(x, z) = g(x, 2z)/4`.
    JPrimeMul,
}

impl Operator {
    pub fn as_str(self) -> &'static str {
        match self {
            Operator::J => "J",
            Operator::JPrime => "J_prime",
            Operator::JMul => "J_mul",
            Operator::JPrimeMul => "J_prime_mul",
        }
    }

    pub fn scaling(self) -> ScalingOp {
        match self {
            Operator::J => ScalingOp::HalveFirst,
            Operator::JPrime => ScalingOp::HalveSecond,
            Operator::JMul => ScalingOp::DoubleFirst,
            Operator::JPrimeMul => ScalingOp::DoubleSecond,
        }
    }

    /// The weight under which the operator contracts.
    pub fn weight(self) -> WeightKind {
        match self {
            Operator::J | Operator::JMul => WeightKind::First,
            Operator::JPrime | Operator::JPrimeMul => WeightKind::Second,
        }
    }

    /// First-slot and second-slot operators of a regime.
    pub fn pair(regime: Regime) -> (Operator, Operator) {
        match regime {
            Regime::Halving => (Operator::J, Operator::JPrime),
            Regime::Doubling => (Operator::JMul, Operator::JPrimeMul),
        }
    }
}

pub fn apply_j(g: &Mapping, op: Operator) -> Mapping {
    g.scaled(op.scaling(), 1)
}

/// Largest `d(Jg, Jh)/d(g, h)` over probe pairs with finite nonzero `d(g, h)`.
pub fn contraction_factor(
    op: Operator,
    phi: &ControlFunction,
    kind: WeightKind,
    probes: &[(Mapping, Mapping)],
    samples: &[(Vector, Vector)],
) -> Result<f64> {
    let mut best: Option<f64> = None;
    for (g, h) in probes {
        let d = gen_metric(g, h, phi, kind, samples)?.value;
        if d == 0.0 || !d.is_finite() {
            continue;
        }
        let dj = gen_metric(&apply_j(g, op), &apply_j(h, op), phi, kind, samples)?.value;
        let ratio = dj / d;
        best = Some(best.map_or(ratio, |b: f64| b.max(ratio)));
    }
    best.ok_or_else(|| Error::input("no probe pair has a finite nonzero distance"))
}

/// Which alternative of the fixed-point dichotomy the iteration exhibited.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Alternative {
    /// Distances finite from `n0` on and the iteration reached the tolerance.
    Convergent { n0: usize },
    /// `d(Jⁿf, Jⁿ⁺¹f) = ∞` for every recorded `n`.
    InfiniteDistances,
    /// Finite distances that stopped contracting.
    NotContracting,
    /// `n_max` reached with finite, contracting distances above tolerance.
    Exhausted,
}

impl Alternative {
    pub fn as_str(self) -> &'static str {
        match self {
            Alternative::Convergent { .. } => "convergent",
            Alternative::InfiniteDistances => "infinite_distances",
            Alternative::NotContracting => "not_contracting",
            Alternative::Exhausted => "exhausted",
        }
    }
}

/// A-posteriori check `d(f, F) ≤ d(f, Jf)/(1 − α)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AposterioriCheck {
    #[serde(serialize_with = "crate::report::ser_real")]
    pub lhs: f64,
    #[serde(serialize_with = "crate::report::ser_real")]
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Debug, Clone)]
pub struct FixpointRun {
    pub operator: Operator,
    pub weight: WeightKind,
    /// `distances[n] = d(Jⁿf, Jⁿ⁺¹f)`.
    pub distances: Vec<f64>,
    /// `ratios[n-1] = distances[n] / distances[n-1]` where defined.
    pub ratios: Vec<f64>,
    pub alpha_measured: f64,
    pub n_stop: usize,
    pub alternative: Alternative,
    /// `J^{n_stop} f`, lazily composed.
    pub limit: Mapping,
    /// `max ‖J^{n_stop+1} f − J^{n_stop} f‖` over samples.
    pub residual: f64,
    pub aposteriori: Option<AposterioriCheck>,
}

const STALL_RUN: usize = 5;

/// Iterates `Jⁿ f` until `d(Jⁿf, Jⁿ⁺¹f) ≤ tol` and the pointwise error
/// estimate `‖Jⁿ⁺¹f − Jⁿf‖ / (1 − α) ≤ tol`, with `α` the largest measured
/// ratio, or until one of the other alternatives shows up.
pub fn dm_iterate(
    op: Operator,
    f: &Mapping,
    phi: &ControlFunction,
    kind: WeightKind,
    samples: &[(Vector, Vector)],
    n_max: usize,
    tol: f64,
) -> Result<FixpointRun> {
    if !(tol > 0.0) {
        return Err(Error::input(format!("tolerance must be positive, got {tol}")));
    }
    let y = f.y_space();
    let residual = |a: &Mapping, b: &Mapping| -> Result<f64> {
        let mut worst: f64 = 0.0;
        for (x, z) in samples {
            worst = worst.max(norm_eval(y, &(&b.eval(x, z)? - &a.eval(x, z)?))?);
        }
        Ok(worst)
    };
    let mut distances = Vec::new();
    let mut ratios = Vec::new();
    let mut current = f.clone();
    let mut n0 = None;
    let (mut inf_run, mut stall_run) = (0usize, 0usize);
    let mut alternative = Alternative::Exhausted;
    let mut n_stop = n_max;
    let mut last_residual = f64::INFINITY;

    for n in 0..=n_max {
        let next = apply_j(&current, op);
        let d = match gen_metric(&current, &next, phi, kind, samples) {
            Ok(d) => d.value,
            Err(e) if e.is_numeric() => f64::INFINITY,
            Err(e) => return Err(e),
        };
        distances.push(d);
        if d.is_finite() {
            n0.get_or_insert(n);
            inf_run = 0;
        } else {
            inf_run += 1;
        }
        if n > 0 {
            let prev = distances[n - 1];
            if prev.is_finite() && d.is_finite() && prev > 0.0 {
                let ratio = d / prev;
                ratios.push(ratio);
                stall_run = if ratio >= 1.0 { stall_run + 1 } else { 0 };
            }
        }
        if d <= tol {
            let res = residual(&current, &next)?;
            let alpha = ratios.iter().copied().fold(None, |m: Option<f64>, r| Some(m.map_or(r, |m| m.max(r))));
            let error = match alpha {
                _ if res == 0.0 => 0.0,
                Some(a) if a < 1.0 => res / (1.0 - a),
                _ => f64::INFINITY,
            };
            if error <= tol {
                last_residual = res;
                alternative = Alternative::Convergent { n0: n0.unwrap_or(n) };
                n_stop = n;
                break;
            }
        }
        if n0.is_none() && inf_run >= STALL_RUN {
            alternative = Alternative::InfiniteDistances;
            n_stop = n;
            break;
        }
        if stall_run >= STALL_RUN || (n0.is_some() && !d.is_finite()) {
            alternative = Alternative::NotContracting;
            n_stop = n;
            break;
        }
        if n == n_max {
            last_residual = residual(&current, &next).unwrap_or(f64::INFINITY);
            break;
        }
        current = next;
    }
    let alpha_measured = ratios.iter().copied().fold(0.0, f64::max);
    let aposteriori = if let Alternative::Convergent { .. } = alternative {
        let lhs = gen_metric(f, &current, phi, kind, samples)?.value;
        let rhs = if alpha_measured < 1.0 {
            distances[0] / (1.0 - alpha_measured)
        } else {
            f64::INFINITY
        };
        Some(AposterioriCheck {
            lhs,
            rhs,
            holds: lhs <= rhs * (1.0 + 1e-12),
        })
    } else {
        None
    };
    Ok(FixpointRun {
        operator: op,
        weight: kind,
        distances,
        ratios,
        alpha_measured,
        n_stop,
        alternative,
        limit: current,
        residual: last_residual,
        aposteriori,
    })
}

/// Stability bound of the fixed-point method:
/// halving `min{L/(2^β(1−L)) φ(x,x)φ(z,0), L/(4^β(1−L)) φ(x,0)φ(z,z)}`,
/// doubling the same with numerators `1`.
pub fn stability_bound_fp(l: f64, beta: f64, phi: &ControlFunction, x: &Vector, z: &Vector, regime: Regime) -> Result<f64> {
    if !(l > 0.0 && l < 1.0) {
        return Err(Error::input(format!("L must lie in (0, 1), got {l}")));
    }
    check_beta(beta)?;
    let num = match regime {
        Regime::Halving => l,
        Regime::Doubling => 1.0,
    };
    let a = num / (beta.exp2() * (1.0 - l)) * WeightKind::First.eval(phi, x, z)?;
    let b = num / ((2.0 * beta).exp2() * (1.0 - l)) * WeightKind::Second.eval(phi, x, z)?;
    Ok(a.min(b))
}

#[derive(Debug, Clone)]
pub struct FixpointOutcome {
    pub runs: Option<(FixpointRun, FixpointRun)>,
    /// `F` at the samples when both runs converged and agree.
    pub values: Option<Vec<Vector>>,
    pub entries: Vec<AuditEntry>,
}

/// Sample pairs on which the scaling hypothesis is checked for `(x, z)`.
pub(crate) fn condition_pairs(samples: &[(Vector, Vector)]) -> Vec<(Vector, Vector)> {
    let mut out = Vec::with_capacity(samples.len() * 4);
    for (x, z) in samples {
        let zero = Vector::zeros(x.dim());
        out.push((x.clone(), x.clone()));
        out.push((x.clone(), zero.clone()));
        out.push((z.clone(), zero));
        out.push((z.clone(), z.clone()));
    }
    out
}

/// Runs both operators of the regime, reconciles their fixed points and
/// verifies `‖f − F‖ ≤ stability_bound_fp` at every sample. Refused when the
/// scaling hypothesis fails for the stated `L`.
#[allow(clippy::too_many_arguments)]
pub fn fp_extract_and_verify(
    f: &Mapping,
    phi: &ControlFunction,
    beta: f64,
    l: f64,
    regime: Regime,
    samples: &[(Vector, Vector)],
    tol: f64,
    n_max: usize,
    direct: Option<&[Vector]>,
) -> Result<FixpointOutcome> {
    let prefix = format!("fixpoint.{}", regime.as_str());
    let cond = check_condition(phi, l, beta, &condition_pairs(samples), regime)?;
    if !cond.is_pass() {
        let mut refused = AuditEntry::refused(
            format!("{prefix}.precondition"),
            format!(
                "{} scaling hypothesis fails for L = {l}; iteration not attempted",
                regime.as_str()
            ),
        );
        refused.witness = cond.witness;
        refused.margin = cond.margin;
        return Ok(FixpointOutcome {
            runs: None,
            values: None,
            entries: vec![refused],
        });
    }

    let (op1, op2) = Operator::pair(regime);
    let r1 = dm_iterate(op1, f, phi, op1.weight(), samples, n_max, tol)?;
    let r2 = dm_iterate(op2, f, phi, op2.weight(), samples, n_max, tol)?;
    let mut entries = vec![cond.with_notes(format!("{prefix} hypothesis with L = {l}"))];
    entries.last_mut().unwrap().check_id = format!("{prefix}.precondition");

    for (slot, run) in [("first", &r1), ("second", &r2)] {
        let ok = matches!(run.alternative, Alternative::Convergent { .. });
        let mut e = AuditEntry::verdict(format!("{prefix}.{slot}.convergence"), ok, tol - run.residual)
            .with_witness(
                Witness::at(Vec::new())
                    .with("n_stop", run.n_stop as f64)
                    .with("alpha_measured", run.alpha_measured)
                    .with("stated_L", l)
                    .with("residual", run.residual),
            )
            .with_notes(format!("operator {}: {}", run.operator.as_str(), run.alternative.as_str()));
        if run.operator == Operator::JPrimeMul {
            e.notes.push_str(
                "; second-slot operator taken as g(x, 2z)/4, the form required by the displayed \
                 estimate ‖f(x, z) − f(x, 2z)/4‖; the proof text writes 4 g(x/2, z)",
            );
        }
        entries.push(e);
        if let Some(a) = run.aposteriori {
            entries.push(
                AuditEntry::verdict(format!("{prefix}.{slot}.aposteriori"), a.holds, a.rhs - a.lhs).with_witness(
                    Witness::at(Vec::new())
                        .with("d_f_limit", a.lhs)
                        .with("d_f_Jf_over_1_minus_alpha", a.rhs)
                        .with("alpha_measured", run.alpha_measured),
                ),
            );
        }
    }

    let converged = |r: &FixpointRun| matches!(r.alternative, Alternative::Convergent { .. });
    if !(converged(&r1) && converged(&r2)) {
        entries.push(AuditEntry::refused(
            format!("{prefix}.reconcile"),
            "at least one operator did not converge",
        ));
        return Ok(FixpointOutcome {
            runs: Some((r1, r2)),
            values: None,
            entries,
        });
    }

    let y = f.y_space();
    let mut values = Vec::with_capacity(samples.len());
    let mut worst_dev = (f64::NEG_INFINITY, 0usize);
    let mut worst_slack = (f64::INFINITY, 0usize, 0.0, 0.0);
    for (i, (x, z)) in samples.iter().enumerate() {
        let a = r1.limit.eval(x, z)?;
        let b = r2.limit.eval(x, z)?;
        let dev = norm_eval(y, &(&a - &b))?;
        if dev > worst_dev.0 {
            worst_dev = (dev, i);
        }
        let lhs = norm_eval(y, &(&f.eval(x, z)? - &a))?;
        let bound = stability_bound_fp(l, beta, phi, x, z, regime)?;
        if bound - lhs < worst_slack.0 {
            worst_slack = (bound - lhs, i, lhs, bound);
        }
        values.push(a);
    }
    let at = |i: usize| {
        let (x, z) = &samples[i];
        Witness::at(vec![x.coords().to_vec(), z.coords().to_vec()])
    };
    let reconcile = AuditEntry::verdict(format!("{prefix}.reconcile"), worst_dev.0 <= tol, tol - worst_dev.0)
        .with_witness(at(worst_dev.1).with("deviation", worst_dev.0))
        .with_notes(format!("{} sample(s)", samples.len()));
    let reconciled = reconcile.is_pass();
    entries.push(reconcile);
    entries.push(
        AuditEntry::verdict(format!("{prefix}.bound"), worst_slack.0 >= 0.0, worst_slack.0)
            .with_witness(at(worst_slack.1).with("deviation", worst_slack.2).with("bound", worst_slack.3))
            .with_notes(format!("sampled on {} point(s)", samples.len())),
    );
    if let Some(direct) = direct {
        if direct.len() != samples.len() {
            return Err(Error::input("direct-method values do not match the sample count"));
        }
        let mut worst = (f64::NEG_INFINITY, 0usize);
        for (i, (d, v)) in direct.iter().zip(&values).enumerate() {
            let dev = norm_eval(y, &(d - v))?;
            if dev > worst.0 {
                worst = (dev, i);
            }
        }
        entries.push(
            AuditEntry::verdict(format!("{prefix}.matches_direct"), worst.0 <= tol, tol - worst.0)
                .with_witness(at(worst.1).with("deviation", worst.0)),
        );
    }
    Ok(FixpointOutcome {
        runs: Some((r1, r2)),
        values: reconciled.then_some(values),
        entries,
    })
}

/// True when every entry is a pass.
pub fn all_pass(entries: &[AuditEntry]) -> bool {
    entries.iter().all(|e| e.status == Status::Pass)
}
