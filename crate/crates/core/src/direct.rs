//! Direct-method extraction: the additive-quadratic approximant as the limit
//! of scaled dyadic iterates, with the Cauchy estimates that control it.
//!
//! | route             | iterate `s_k`              | gap bound term (`j`)                           |
//! |-------------------|----------------------------|------------------------------------------------|
//! | `halving_first`   | `2^k f(x/2^k, z)`          | `2^{jβ} φ(x/2^{j+1}, x/2^{j+1}) φ(z, 0)`       |
//! | `halving_second`  | `4^k f(x, z/2^k)`          | `4^{jβ} φ(x, 0) φ(z/2^{j+1}, z/2^{j+1})`       |
//! | `doubling_first`  | `2^{-k} f(2^k x, z)`       | `2^{-(j+1)β} φ(2^j x, 2^j x) φ(z, 0)`          |
//! | `doubling_second` | `4^{-k} f(x, 2^k z)`       | `4^{-(j+1)β} φ(x, 0) φ(2^j z, 2^j z)`          |
//!
//! `‖s_l − s_m‖` is bounded by the sum of the gap terms over `l ≤ j < m`.

use serde::{Deserialize, Serialize};

use crate::control::{check_beta, phi_eval, sum_geometric, term_model, ControlFunction, Regime, SeriesId};
use crate::error::{Error, Result};
use crate::mappings::{Mapping, ScalingOp};
use crate::report::{AuditEntry, Witness};
use crate::spaces::{norm_eval, pow2, SpaceSpec, Vector, IDENTITY_TOL};

pub const DEFAULT_K_MAX: usize = 60;
/// Consecutive small gaps required before a trace may converge.
pub const SMALL_GAP_RUN: usize = 3;
/// Consecutive growing iterates (with non-shrinking gaps) that mean divergence.
pub const GROWTH_RUN: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    HalvingFirst,
    HalvingSecond,
    DoublingFirst,
    DoublingSecond,
}

impl Route {
    pub const ALL: [Route; 4] = [
        Route::HalvingFirst,
        Route::HalvingSecond,
        Route::DoublingFirst,
        Route::DoublingSecond,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Route::HalvingFirst => "halving_first",
            Route::HalvingSecond => "halving_second",
            Route::DoublingFirst => "doubling_first",
            Route::DoublingSecond => "doubling_second",
        }
    }

    /// The scaling operator whose `k`-fold power produces `s_k`.
    pub fn op(self) -> ScalingOp {
        match self {
            Route::HalvingFirst => ScalingOp::HalveFirst,
            Route::HalvingSecond => ScalingOp::HalveSecond,
            Route::DoublingFirst => ScalingOp::DoubleFirst,
            Route::DoublingSecond => ScalingOp::DoubleSecond,
        }
    }

    pub fn regime(self) -> Regime {
        match self {
            Route::HalvingFirst | Route::HalvingSecond => Regime::Halving,
            Route::DoublingFirst | Route::DoublingSecond => Regime::Doubling,
        }
    }

    /// First-slot and second-slot routes of a regime.
    pub fn pair(regime: Regime) -> (Route, Route) {
        match regime {
            Regime::Halving => (Route::HalvingFirst, Route::HalvingSecond),
            Regime::Doubling => (Route::DoublingFirst, Route::DoublingSecond),
        }
    }

    fn first_slot(self) -> bool {
        matches!(self, Route::HalvingFirst | Route::DoublingFirst)
    }

    /// The stability series whose terms make up this route's gap bound.
    pub fn series(self) -> SeriesId {
        match self {
            Route::HalvingFirst => SeriesId::HalvingAdditive,
            Route::HalvingSecond => SeriesId::HalvingQuadratic,
            Route::DoublingFirst => SeriesId::DoublingAdditive,
            Route::DoublingSecond => SeriesId::DoublingQuadratic,
        }
    }
}

impl std::fmt::Display for Route {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `j`-th term of the route's Cauchy estimate at `(x, z)`.
pub fn cauchy_term(route: Route, phi: &ControlFunction, beta: f64, x: &Vector, z: &Vector, j: usize) -> Result<f64> {
    let zero = Vector::zeros(x.dim());
    let (arg, factor) = if route.first_slot() {
        (x, phi_eval(phi, z, &zero)?)
    } else {
        (z, phi_eval(phi, x, &zero)?)
    };
    if factor == 0.0 {
        return Ok(0.0);
    }
    Ok(route.series().term(phi, beta, arg, arg, j)? * factor)
}

/// Sum of the route's Cauchy terms for `l ≤ j < m`, or `j ≥ l` when `m` is
/// `None`. Finite sums are exact left-to-right sums; infinite ones use the
/// geometric tail rule of the series engine and are `inf` when it cannot
/// certify convergence.
pub fn cauchy_tail_bound(
    phi: &ControlFunction,
    beta: f64,
    l: usize,
    m: Option<usize>,
    route: Route,
    x: &Vector,
    z: &Vector,
) -> Result<f64> {
    check_beta(beta)?;
    match m {
        Some(m) => {
            if m <= l {
                return Err(Error::input(format!("need l < m, got l={l}, m={m}")));
            }
            let mut acc = 0.0;
            for j in l..m {
                acc += cauchy_term(route, phi, beta, x, z, j)?;
            }
            Ok(acc)
        }
        None => infinite_tail(phi, beta, l, route, x, z),
    }
}

const TAIL_TOL: f64 = 1e-13;
const TAIL_MAX_TERMS: usize = 4000;

fn infinite_tail(phi: &ControlFunction, beta: f64, l: usize, route: Route, x: &Vector, z: &Vector) -> Result<f64> {
    let r = sum_geometric(
        |n| cauchy_term(route, phi, beta, x, z, l + n),
        term_model(phi, route.series(), beta),
        TAIL_TOL,
        TAIL_MAX_TERMS,
    )?;
    Ok(r.upper())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceVerdict {
    Converged,
    Diverged,
    Undecided,
}

impl TraceVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceVerdict::Converged => "converged",
            TraceVerdict::Diverged => "diverged",
            TraceVerdict::Undecided => "undecided",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionTrace {
    pub route: Route,
    pub x: Vector,
    pub z: Vector,
    /// `s_0, …, s_{k_stop}`.
    pub iterates: Vec<Vector>,
    /// `gaps[k-1] = ‖s_k − s_{k−1}‖`.
    pub gaps: Vec<f64>,
    /// `tail_bounds[k]` bounds `‖s_k − limit‖` (sum of Cauchy terms `j ≥ k`).
    pub tail_bounds: Vec<f64>,
    /// Cauchy terms `j = 0, …, k_stop − 1`.
    pub cauchy_terms: Vec<f64>,
    pub verdict: TraceVerdict,
    pub limit: Option<Vector>,
    pub k_stop: usize,
    pub note: String,
}

impl ExtractionTrace {
    pub fn converged(&self) -> bool {
        self.verdict == TraceVerdict::Converged
    }

    pub fn last_gap(&self) -> f64 {
        self.gaps.last().copied().unwrap_or(0.0)
    }

    pub fn last_tail_bound(&self) -> f64 {
        self.tail_bounds.last().copied().unwrap_or(f64::INFINITY)
    }
}

/// Runs one extraction route at `(x, z)`.
///
/// Converged: `‖s_k − s_{k−1}‖ ≤ tol·max(1, ‖s_k‖)` for [`SMALL_GAP_RUN`]
/// consecutive `k` and the analytic tail from `k` is `≤ tol`. Diverged: a
/// non-finite iterate, or [`GROWTH_RUN`] consecutive steps with growing
/// magnitude and non-shrinking gaps. Undecided otherwise at `k_max`.
#[allow(clippy::too_many_arguments)]
pub fn extract(
    route: Route,
    f: &Mapping,
    phi: &ControlFunction,
    beta: f64,
    x: &Vector,
    z: &Vector,
    tol: f64,
    k_max: usize,
) -> Result<ExtractionTrace> {
    check_beta(beta)?;
    if !(tol > 0.0) {
        return Err(Error::input(format!("tolerance must be positive, got {tol}")));
    }
    f.x_space().check_dim(x)?;
    f.x_space().check_dim(z)?;
    let y: &SpaceSpec = f.y_space();

    let mut terms = Vec::with_capacity(k_max + 1);
    for j in 0..=k_max {
        terms.push(cauchy_term(route, phi, beta, x, z, j)?);
    }
    let mut suffix = vec![0.0; k_max + 2];
    suffix[k_max + 1] = infinite_tail(phi, beta, k_max + 1, route, x, z)?;
    for k in (0..=k_max).rev() {
        suffix[k] = terms[k] + suffix[k + 1];
    }

    let mut trace = ExtractionTrace {
        route,
        x: x.clone(),
        z: z.clone(),
        iterates: Vec::new(),
        gaps: Vec::new(),
        tail_bounds: Vec::new(),
        cauchy_terms: Vec::new(),
        verdict: TraceVerdict::Undecided,
        limit: None,
        k_stop: 0,
        note: String::new(),
    };
    let (mut small_run, mut growth_run) = (0usize, 0usize);
    let mut prev_mag = 0.0;

    for k in 0..=k_max {
        let s = match f.scaled(route.op(), k as u32).eval(x, z) {
            Ok(s) => s,
            Err(e) if e.is_numeric() => {
                trace.verdict = TraceVerdict::Diverged;
                trace.note = format!("non-finite iterate at k={k}");
                return Ok(trace);
            }
            Err(e) => return Err(e),
        };
        let mag = norm_eval(y, &s)?;
        if let Some(prev) = trace.iterates.last() {
            let gap = norm_eval(y, &(&s - prev))?;
            if !gap.is_finite() {
                trace.verdict = TraceVerdict::Diverged;
                trace.note = format!("non-finite gap at k={k}");
                return Ok(trace);
            }
            small_run = if gap <= tol * mag.max(1.0) { small_run + 1 } else { 0 };
            let gap_grows = trace.gaps.last().map_or(true, |g| gap >= *g);
            growth_run = if mag > prev_mag && gap_grows { growth_run + 1 } else { 0 };
            trace.gaps.push(gap);
            trace.cauchy_terms.push(terms[k - 1]);
        }
        trace.iterates.push(s);
        trace.tail_bounds.push(suffix[k]);
        trace.k_stop = k;
        prev_mag = mag;

        if small_run >= SMALL_GAP_RUN && suffix[k] <= tol {
            trace.verdict = TraceVerdict::Converged;
            trace.limit = trace.iterates.last().cloned();
            return Ok(trace);
        }
        if growth_run >= GROWTH_RUN {
            trace.verdict = TraceVerdict::Diverged;
            trace.note = format!("iterate magnitude grew over {GROWTH_RUN} consecutive steps");
            return Ok(trace);
        }
    }
    trace.note = format!("k_max={k_max} reached");
    Ok(trace)
}

pub fn extract_p_div(f: &Mapping, phi: &ControlFunction, beta: f64, x: &Vector, z: &Vector, tol: f64, k_max: usize) -> Result<ExtractionTrace> {
    extract(Route::HalvingFirst, f, phi, beta, x, z, tol, k_max)
}

pub fn extract_q_div(f: &Mapping, phi: &ControlFunction, beta: f64, x: &Vector, z: &Vector, tol: f64, k_max: usize) -> Result<ExtractionTrace> {
    extract(Route::HalvingSecond, f, phi, beta, x, z, tol, k_max)
}

pub fn extract_p_mul(f: &Mapping, phi: &ControlFunction, beta: f64, x: &Vector, z: &Vector, tol: f64, k_max: usize) -> Result<ExtractionTrace> {
    extract(Route::DoublingFirst, f, phi, beta, x, z, tol, k_max)
}

pub fn extract_q_mul(f: &Mapping, phi: &ControlFunction, beta: f64, x: &Vector, z: &Vector, tol: f64, k_max: usize) -> Result<ExtractionTrace> {
    extract(Route::DoublingSecond, f, phi, beta, x, z, tol, k_max)
}

/// Outcome of checking `‖s_l − s_m‖ ≤ Σ_{l≤j<m} term_j` on one trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domination {
    pub pairs_checked: usize,
    pub violations: usize,
    /// Smallest `bound − gap` seen, with its `(l, m)`.
    pub worst_margin: f64,
    pub worst_pair: (usize, usize),
}

/// Checks the Cauchy estimate against every recorded pair `l < m`.
pub fn check_domination(trace: &ExtractionTrace, y: &SpaceSpec) -> Result<Domination> {
    let mut out = Domination {
        pairs_checked: 0,
        violations: 0,
        worst_margin: f64::INFINITY,
        worst_pair: (0, 0),
    };
    let n = trace.iterates.len();
    for l in 0..n {
        let mut bound = 0.0;
        for m in l + 1..n {
            bound += trace.cauchy_terms[m - 1];
            let gap = norm_eval(y, &(&trace.iterates[l] - &trace.iterates[m]))?;
            let margin = bound - gap;
            out.pairs_checked += 1;
            if !(gap <= bound) {
                out.violations += 1;
            }
            if margin < out.worst_margin {
                out.worst_margin = margin;
                out.worst_pair = (l, m);
            }
        }
    }
    Ok(out)
}

/// Audit entry for [`check_domination`] over many traces.
pub fn domination_entry(traces: &[ExtractionTrace], y: &SpaceSpec) -> Result<AuditEntry> {
    let mut pairs = 0;
    let mut violations = 0;
    let mut worst: Option<(f64, &ExtractionTrace, (usize, usize))> = None;
    for t in traces {
        let d = check_domination(t, y)?;
        pairs += d.pairs_checked;
        violations += d.violations;
        if d.pairs_checked > 0 && worst.map_or(true, |w| d.worst_margin < w.0) {
            worst = Some((d.worst_margin, t, d.worst_pair));
        }
    }
    let id = "direct.cauchy_domination";
    let Some((margin, t, (l, m))) = worst else {
        return Ok(AuditEntry::pass(id, f64::INFINITY).with_notes("no recorded gap pairs"));
    };
    let w = Witness::at(vec![t.x.coords().to_vec(), t.z.coords().to_vec()])
        .with("l", l as f64)
        .with("m", m as f64)
        .with("margin", margin);
    Ok(AuditEntry::verdict(id, violations == 0, margin)
        .with_witness(w)
        .with_notes(format!(
            "{pairs} (l, m) pair(s) over {} trace(s); {violations} violation(s)",
            traces.len()
        )))
}

/// Result of reconciling the two routes of a regime.
#[derive(Debug, Clone)]
pub struct Reconciliation {
    pub first: Vec<ExtractionTrace>,
    pub second: Vec<ExtractionTrace>,
    /// `F = P` at every sample, present only when reconciliation passed.
    pub values: Option<Vec<Vector>>,
    pub entry: AuditEntry,
}

/// Extracts `P` and `Q` along the regime's two routes and checks `P = Q`.
///
/// Refused when any sample fails to converge on either route; those samples
/// are listed in the notes.
pub fn reconcile_f(
    f: &Mapping,
    phi: &ControlFunction,
    beta: f64,
    regime: Regime,
    samples: &[(Vector, Vector)],
    tol: f64,
    k_max: usize,
) -> Result<Reconciliation> {
    let (rp, rq) = Route::pair(regime);
    let id = format!("direct.{}.reconcile", regime.as_str());
    let mut first = Vec::with_capacity(samples.len());
    let mut second = Vec::with_capacity(samples.len());
    for (x, z) in samples {
        first.push(extract(rp, f, phi, beta, x, z, tol, k_max)?);
        second.push(extract(rq, f, phi, beta, x, z, tol, k_max)?);
    }
    let failures: Vec<String> = first
        .iter()
        .chain(&second)
        .filter(|t| !t.converged())
        .map(|t| format!("{} at ({}, {}): {}", t.route, t.x, t.z, t.verdict.as_str()))
        .collect();
    if !failures.is_empty() {
        const SHOWN: usize = 8;
        let mut notes = format!("{} non-converged trace(s): ", failures.len());
        notes.push_str(&failures.iter().take(SHOWN).cloned().collect::<Vec<_>>().join("; "));
        if failures.len() > SHOWN {
            notes.push_str("; ...");
        }
        return Ok(Reconciliation {
            first,
            second,
            values: None,
            entry: AuditEntry::refused(id, notes),
        });
    }
    let y = f.y_space();
    let mut worst = (f64::NEG_INFINITY, 0usize);
    for (i, (p, q)) in first.iter().zip(&second).enumerate() {
        let d = norm_eval(y, &(p.limit.as_ref().unwrap() - q.limit.as_ref().unwrap()))?;
        if d > worst.0 {
            worst = (d, i);
        }
    }
    let entry = if samples.is_empty() {
        AuditEntry::pass(id, tol).with_notes("no samples")
    } else {
        let (x, z) = &samples[worst.1];
        AuditEntry::verdict(&id, worst.0 <= tol, tol - worst.0)
            .with_witness(Witness::at(vec![x.coords().to_vec(), z.coords().to_vec()]).with("deviation", worst.0))
            .with_notes(format!("{} sample(s)", samples.len()))
    };
    let values = entry
        .is_pass()
        .then(|| first.iter().map(|t| t.limit.clone().unwrap()).collect());
    Ok(Reconciliation {
        first,
        second,
        values,
        entry,
    })
}

/// `lhs ≤ rhs` up to [`IDENTITY_TOL`] relative, for inequalities that are
/// tight on exact arithmetic.
fn within(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + IDENTITY_TOL * rhs.abs()
}

/// Single-variable additive limit `T(x) = lim 2^{-n} g(2^n x)` and the
/// checks around it.
#[derive(Debug, Clone)]
pub struct RassiasOutcome {
    pub limits: Vec<Option<Vector>>,
    pub steps: Vec<usize>,
    /// `max ‖g(x) − T(x)‖ / (ε ‖x‖^p)` over samples with `x ≠ 0`.
    pub measured_ratio: f64,
    /// `2ε/(2^β − 2^{βp})`, the constant in front of `‖x‖^p`.
    pub bound_constant: f64,
    pub entries: Vec<AuditEntry>,
}

/// Constant `2ε/(2^β − 2^{βp})` of the single-variable bound; for `β = 1`
/// this is `2ε/(2 − 2^p)`.
pub fn rassias_constant(eps: f64, p: f64, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    if !(p >= 0.0 && p < 1.0) {
        return Err(Error::input(format!("exponent p must lie in [0, 1), got {p}")));
    }
    if !(eps >= 0.0) {
        return Err(Error::input(format!("epsilon must be >= 0, got {eps}")));
    }
    Ok(2.0 * eps / (beta.exp2() - (beta * p).exp2()))
}

/// Extracts `T` from `g` on `x_samples`, checks the Cauchy-type hypothesis
/// `‖g(x+y) − g(x) − g(y)‖ ≤ ε(‖x‖^p + ‖y‖^p)` on `pairs`, and verifies
/// `‖g(x) − T(x)‖ ≤ 2ε/(2^β − 2^{βp}) ‖x‖^p`. The space serves as both domain
/// and target.
#[allow(clippy::too_many_arguments)]
pub fn rassias_calibration(
    space: &SpaceSpec,
    g: &dyn Fn(&Vector) -> Vector,
    p: f64,
    eps: f64,
    x_samples: &[Vector],
    pairs: &[(Vector, Vector)],
    tol: f64,
    k_max: usize,
) -> Result<RassiasOutcome> {
    let beta = space.beta()?;
    let constant = rassias_constant(eps, p, beta)?;
    if !(tol > 0.0) {
        return Err(Error::input(format!("tolerance must be positive, got {tol}")));
    }
    let zero = Vector::zeros(space.dimension());
    if !g(&zero).is_zero() {
        return Err(Error::input("g(0) must be 0"));
    }
    let norm = |v: &Vector| norm_eval(space, v);
    let powp = |n: f64| if n == 0.0 { 0.0 } else { n.powf(p) };
    let mut entries = Vec::new();

    let mut worst_hyp = (f64::INFINITY, None);
    for (x, y) in pairs {
        let lhs = norm(&(&(&g(&(x + y)) - &g(x)) - &g(y)))?;
        let rhs = eps * (powp(norm(x)?) + powp(norm(y)?));
        if rhs - lhs < worst_hyp.0 {
            worst_hyp = (rhs - lhs, Some((x, y, lhs, rhs)));
        }
    }
    entries.push(match worst_hyp.1 {
        None => AuditEntry::pass("rassias.hypothesis", f64::INFINITY).with_notes("no sample pairs"),
        Some((x, y, lhs, rhs)) => AuditEntry::verdict("rassias.hypothesis", within(lhs, rhs), rhs - lhs)
            .with_witness(
                Witness::at(vec![x.coords().to_vec(), y.coords().to_vec()])
                    .with("defect", lhs)
                    .with("bound", rhs),
            )
            .with_notes(format!("{} sample pair(s)", pairs.len())),
    });

    let mut limits = Vec::with_capacity(x_samples.len());
    let mut steps = Vec::with_capacity(x_samples.len());
    let mut stalled = Vec::new();
    // Ratio of the analytic tail terms: 2^{-β} · 2^{βp}.
    let rho = (beta * (p - 1.0)).exp2();
    for x in x_samples {
        space.check_dim(x)?;
        let nx = powp(norm(x)?);
        // Tail from n: Σ_{j≥n} 2^{-(j+1)β} · 2ε ‖2^j x‖^p = 2^{-β} 2ε ‖x‖^p ρ^n / (1 − ρ).
        let tail = |n: usize| (-beta).exp2() * 2.0 * eps * nx * rho.powi(n as i32) / (1.0 - rho);
        let mut prev: Option<Vector> = None;
        let mut small_run = 0;
        let mut found = None;
        for n in 0..=k_max {
            let t = g(&x.scale(pow2(n as i32))).scale(pow2(-(n as i32)));
            if !t.is_finite() {
                break;
            }
            if let Some(pv) = &prev {
                let gap = norm(&(&t - pv))?;
                small_run = if gap <= tol * norm(&t)?.max(1.0) { small_run + 1 } else { 0 };
            }
            let done = small_run >= SMALL_GAP_RUN && tail(n) <= tol;
            prev = Some(t);
            if done {
                found = Some(n);
                break;
            }
        }
        match found {
            Some(n) => {
                limits.push(prev);
                steps.push(n);
            }
            None => {
                stalled.push(x.to_string());
                limits.push(None);
                steps.push(k_max);
            }
        }
    }
    entries.push(if stalled.is_empty() {
        AuditEntry::pass("rassias.convergence", 0.0).with_notes(format!("{} sample(s)", x_samples.len()))
    } else {
        AuditEntry::new("rassias.convergence", crate::report::Status::Fail, -(stalled.len() as f64))
            .with_witness(Witness::at(Vec::new()).with("non_converged", stalled.len() as f64))
            .with_notes(format!("diverged or undecided at x = {}", stalled.join(", ")))
    });

    let mut measured_ratio: f64 = 0.0;
    let mut worst_bound = (f64::INFINITY, None);
    for (x, t) in x_samples.iter().zip(&limits) {
        let Some(t) = t else { continue };
        let dev = norm(&(&g(x) - t))?;
        let nx = powp(norm(x)?);
        let bound = constant * nx;
        if nx > 0.0 && eps > 0.0 {
            measured_ratio = measured_ratio.max(dev / (eps * nx));
        }
        if bound - dev < worst_bound.0 {
            worst_bound = (bound - dev, Some((x, dev, bound)));
        }
    }
    entries.push(match worst_bound.1 {
        None => AuditEntry::refused("rassias.bound", "no converged samples"),
        Some((x, dev, bound)) => AuditEntry::verdict("rassias.bound", within(dev, bound), bound - dev)
            .with_witness(
                Witness::at(vec![x.coords().to_vec()])
                    .with("deviation", dev)
                    .with("bound", bound)
                    .with("measured_ratio", measured_ratio)
                    .with("bound_constant_over_eps", if eps > 0.0 { constant / eps } else { f64::NAN }),
            ),
    });

    Ok(RassiasOutcome {
        limits,
        steps,
        measured_ratio,
        bound_constant: constant,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mappings::{Core, Perturbation};

    fn line() -> SpaceSpec {
        SpaceSpec::beta_homogeneous(1, 1.0).unwrap()
    }

    fn s(v: f64) -> Vector {
        Vector::scalar(v)
    }

    fn pp(eta: f64, a: f64, b: f64) -> Mapping {
        Mapping::new(line(), line(), Core::Zero, Some(Perturbation::power_product(eta, a, b))).unwrap()
    }

    fn phi(r: f64) -> ControlFunction {
        ControlFunction::power(line(), 1.0, r).unwrap()
    }

    #[test]
    fn halving_routes_on_cubic_fixture() {
        let f = pp(0.01, 3.0, 3.0);
        let t = extract_p_div(&f, &phi(3.0), 1.0, &s(1.0), &s(1.0), 1e-10, 60).unwrap();
        assert!(t.converged(), "{t:?}");
        for (k, it) in t.iterates.iter().enumerate() {
            assert_eq!(it.first(), 0.01 * pow2(-2 * k as i32));
        }
        assert!(t.limit.unwrap().first().abs() <= 1e-10);
        let q = extract_q_div(&f, &phi(3.0), 1.0, &s(1.0), &s(1.0), 1e-10, 60).unwrap();
        assert!(q.converged());
        assert_eq!(q.iterates[5].first(), 0.01 * pow2(-5));
    }

    #[test]
    fn zero_map_converges_to_zero() {
        let f = Mapping::zero(line(), line());
        for route in Route::ALL {
            let r = if route.regime() == Regime::Halving { 3.0 } else { 0.5 };
            let t = extract(route, &f, &phi(r), 1.0, &s(1.0), &s(-2.0), 1e-10, 200).unwrap();
            assert!(t.converged(), "{route}: {t:?}");
            assert_eq!(t.limit.unwrap(), s(0.0));
        }
    }

    #[test]
    fn non_contracting_perturbations() {
        // Sub-critical first-slot exponent: 2^k (x/2^k)^{1/2} grows.
        let t = extract_p_div(&pp(0.01, 0.5, 3.0), &phi(3.0), 1.0, &s(1.0), &s(1.0), 1e-10, 60).unwrap();
        assert_eq!(t.verdict, TraceVerdict::Diverged);
        // Degree-one first slot is a fixed point of the scaling: exact at k = 0.
        let f = pp(0.01, 1.0, 3.0);
        let t = extract_p_div(&f, &phi(3.0), 1.0, &s(1.5), &s(1.0), 1e-10, 60).unwrap();
        assert!(t.iterates.iter().all(|v| *v == t.iterates[0]));
        assert_eq!(t.limit.unwrap(), f.eval(&s(1.5), &s(1.0)).unwrap());
        // Without a convergent analytic tail the same constant sequence stays undecided.
        let t = extract_p_mul(&f, &phi(3.0), 1.0, &s(1.0), &s(1.0), 1e-10, 60).unwrap();
        assert_eq!(t.verdict, TraceVerdict::Undecided);
        let t = extract_q_mul(&pp(0.01, 3.0, 2.0), &phi(3.0), 1.0, &s(1.0), &s(1.0), 1e-10, 60).unwrap();
        assert_eq!(t.verdict, TraceVerdict::Undecided);
    }

    #[test]
    fn doubling_routes_decay_for_subcritical_exponents() {
        let f = pp(0.01, 0.5, 0.5);
        let t = extract_p_mul(&f, &phi(0.5), 1.0, &s(1.0), &s(1.0), 1e-10, 200).unwrap();
        assert!((t.iterates[4].first() - 0.01 * 0.25).abs() < 1e-17);
        assert!(t.converged());
        let t = extract_q_mul(&f, &phi(0.5), 1.0, &s(1.0), &s(1.0), 1e-10, 200).unwrap();
        assert!(t.converged());
        let grow = extract_p_mul(&pp(0.01, 3.0, 3.0), &phi(3.0), 1.0, &s(1.0), &s(1.0), 1e-10, 60).unwrap();
        assert_eq!(grow.verdict, TraceVerdict::Diverged);
    }

    #[test]
    fn cauchy_tail_examples() {
        let p = phi(3.0);
        let (x, z) = (s(1.0), s(1.0));
        let single = cauchy_tail_bound(&p, 1.0, 4, Some(5), Route::HalvingFirst, &x, &z).unwrap();
        assert_eq!(single, cauchy_term(Route::HalvingFirst, &p, 1.0, &x, &z, 4).unwrap());
        let all = cauchy_tail_bound(&p, 1.0, 0, None, Route::HalvingFirst, &x, &z).unwrap();
        assert!((all - 1.0 / 3.0).abs() < 1e-12);
        let zero = ControlFunction::zero(line());
        assert_eq!(cauchy_tail_bound(&zero, 1.0, 0, None, Route::HalvingSecond, &x, &z).unwrap(), 0.0);
        assert!(cauchy_tail_bound(&p, 1.0, 3, Some(3), Route::HalvingFirst, &x, &z).is_err());
    }

    #[test]
    fn domination_holds_on_fixture() {
        let f = pp(0.02, 3.0, 3.0);
        let t = extract_q_div(&f, &phi(3.0), 1.0, &s(2.0), &s(-1.5), 1e-10, 60).unwrap();
        let d = check_domination(&t, &line()).unwrap();
        assert_eq!(d.violations, 0);
        assert!(d.pairs_checked > 100);
    }

    #[test]
    fn reconcile_examples() {
        let samples: Vec<_> = [-2.0, -0.5, 0.0, 1.0, 2.0]
            .iter()
            .flat_map(|&a| [-1.0, 0.0, 2.0].iter().map(move |&b| (s(a), s(b))))
            .collect();
        let r = reconcile_f(&pp(0.02, 3.0, 3.0), &phi(3.0), 1.0, Regime::Halving, &samples, 1e-10, 60).unwrap();
        assert!(r.entry.is_pass(), "{:?}", r.entry);
        assert!(r.values.unwrap().iter().all(|v| v.first().abs() <= 1e-10));

        // Second-slot degree 2 is a fixed point of the Q route but P still decays.
        let split = pp(0.02, 3.0, 2.0);
        let r = reconcile_f(&split, &phi(3.0), 1.0, Regime::Halving, &samples, 1e-10, 60).unwrap();
        assert_eq!(r.entry.status, crate::report::Status::Fail);
        let w = r.entry.witness.unwrap();
        assert!(w.value("deviation").unwrap() > 0.0);

        let mixed = pp(0.02, 3.0, 1.5);
        let r = reconcile_f(&mixed, &phi(3.0), 1.0, Regime::Halving, &samples, 1e-10, 60).unwrap();
        assert_eq!(r.entry.status, crate::report::Status::Refused);
        assert!(r.entry.notes.contains("halving_second"));
        assert!(r.values.is_none());
    }

    #[test]
    fn rassias_examples() {
        let sp = line();
        let g = |x: &Vector| s(x.first() + 0.1 * x.first().abs().sqrt());
        let xs: Vec<_> = [-2.0, -1.0, 0.25, 1.0, 3.0].iter().map(|&v| s(v)).collect();
        let pairs: Vec<_> = [-1.0, 0.0, 0.5, 2.0]
            .iter()
            .flat_map(|&a| [-2.0, 0.25, 1.0].iter().map(move |&b| (s(a), s(b))))
            .collect();
        let out = rassias_calibration(&sp, &g, 0.5, 0.1, &xs, &pairs, 1e-15, 200).unwrap();
        assert!(out.entries.iter().all(|e| e.is_pass()), "{:?}", out.entries);
        for (x, t) in xs.iter().zip(&out.limits) {
            assert!((t.as_ref().unwrap().first() - x.first()).abs() <= 1e-10);
        }
        assert!((out.measured_ratio - 1.0).abs() <= 1e-12);
        assert!((rassias_constant(1.0, 0.5, 1.0).unwrap() - 3.414_213_562_373_095).abs() < 1e-12);

        let lin = |x: &Vector| x.scale(3.0);
        let out = rassias_calibration(&sp, &lin, 0.5, 0.1, &xs, &pairs, 1e-12, 200).unwrap();
        assert_eq!(out.measured_ratio, 0.0);
    }
}
