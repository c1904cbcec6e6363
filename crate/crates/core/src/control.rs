//! Control functions and the stability series built from them.
//!
//! The four series, for a control function `φ` and target homogeneity `β`:
//!
//! | id                   | sum                                          |
//! |----------------------|----------------------------------------------|
//! | `halving_additive`   | `Σ_{j≥1} 2^{(j-1)β} φ(x/2^j, y/2^j)`         |
//! | `halving_quadratic`  | `Σ_{j≥1} 4^{(j-1)β} φ(x/2^j, y/2^j)`         |
//! | `doubling_additive`  | `Σ_{j≥0} 2^{-(j+1)β} φ(2^j x, 2^j y)`        |
//! | `doubling_quadratic` | `Σ_{j≥0} 4^{-(j+1)β} φ(2^j x, 2^j y)`        |
//!
//! For the power control `φ(x,y) = √θ(‖x‖^r + ‖y‖^r)` every series is exactly
//! geometric and [`closed_form_power`] gives its sum as a multiple of `φ`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::{AuditEntry, Witness};
use crate::spaces::{norm_eval, pow2, SpaceSpec, Vector};

/// Term ratio at or above `1 - UNIT_RATIO_MARGIN` counts as non-contracting.
pub const UNIT_RATIO_MARGIN: f64 = 1e-9;
/// Consecutive non-contracting ratios needed for a divergence verdict.
pub const DIVERGENCE_RUN: usize = 8;

pub type PhiFn = Arc<dyn Fn(&Vector, &Vector) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum PhiKind {
    /// `φ(x, y) = √θ (‖x‖^r + ‖y‖^r)`.
    Power { theta: f64, r: f64 },
    /// User-defined control. Series over it only converge when a scaling
    /// claim is supplied: `φ(x/2, y/2) ≤ halving · φ(x, y)` and
    /// `φ(2x, 2y) ≤ doubling · φ(x, y)`.
    Custom {
        eval: PhiFn,
        halving: Option<f64>,
        doubling: Option<f64>,
    },
}

impl fmt::Debug for PhiKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhiKind::Power { theta, r } => write!(f, "Power {{ theta: {theta}, r: {r} }}"),
            PhiKind::Custom {
                halving, doubling, ..
            } => write!(f, "Custom {{ halving: {halving:?}, doubling: {doubling:?} }}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ControlFunction {
    kind: PhiKind,
    space: SpaceSpec,
}

/// JSON shape of a power control: `{"kind": "power", "theta": .., "r": ..}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControlSpec {
    Power { theta: f64, r: f64 },
}

impl ControlFunction {
    pub fn power(space: SpaceSpec, theta: f64, r: f64) -> Result<Self> {
        if !(theta.is_finite() && theta >= 0.0) {
            return Err(Error::input(format!("theta must be >= 0, got {theta}")));
        }
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::input(format!("r must be > 0, got {r}")));
        }
        Ok(ControlFunction {
            kind: PhiKind::Power { theta, r },
            space,
        })
    }

    pub fn from_spec(space: SpaceSpec, spec: ControlSpec) -> Result<Self> {
        match spec {
            ControlSpec::Power { theta, r } => Self::power(space, theta, r),
        }
    }

    pub fn custom(space: SpaceSpec, eval: PhiFn) -> Self {
        ControlFunction {
            kind: PhiKind::Custom {
                eval,
                halving: None,
                doubling: None,
            },
            space,
        }
    }

    /// The identically zero control.
    pub fn zero(space: SpaceSpec) -> Self {
        ControlFunction {
            kind: PhiKind::Power { theta: 0.0, r: 1.0 },
            space,
        }
    }

    pub fn with_scaling_claims(mut self, halving: Option<f64>, doubling: Option<f64>) -> Self {
        if let PhiKind::Custom {
            halving: h,
            doubling: d,
            ..
        } = &mut self.kind
        {
            *h = halving;
            *d = doubling;
        }
        self
    }

    pub fn kind(&self) -> &PhiKind {
        &self.kind
    }

    pub fn space(&self) -> &SpaceSpec {
        &self.space
    }

    /// `(θ, r)` for a power control.
    pub fn power_params(&self) -> Option<(f64, f64)> {
        match self.kind {
            PhiKind::Power { theta, r } => Some((theta, r)),
            PhiKind::Custom { .. } => None,
        }
    }

    pub fn is_power(&self) -> bool {
        matches!(self.kind, PhiKind::Power { .. })
    }

    pub fn eval(&self, x: &Vector, y: &Vector) -> Result<f64> {
        phi_eval(self, x, y)
    }

    /// Degree `s` with `φ(t x, t y) = |t|^s φ(x, y)` for a power control.
    pub fn scaling_degree(&self) -> Option<f64> {
        self.power_params()
            .map(|(_, r)| r * self.space.homogeneity())
    }
}

pub fn phi_eval(phi: &ControlFunction, x: &Vector, y: &Vector) -> Result<f64> {
    match &phi.kind {
        PhiKind::Power { theta, r } => {
            if *theta == 0.0 {
                phi.space.check_dim(x)?;
                phi.space.check_dim(y)?;
                return Ok(0.0);
            }
            let nx = norm_eval(&phi.space, x)?;
            let ny = norm_eval(&phi.space, y)?;
            let p = |n: f64| if n == 0.0 { 0.0 } else { n.powf(*r) };
            Ok(theta.sqrt() * (p(nx) + p(ny)))
        }
        PhiKind::Custom { eval, .. } => {
            phi.space.check_dim(x)?;
            phi.space.check_dim(y)?;
            let v = eval(x, y);
            if v.is_nan() || v < 0.0 {
                return Err(Error::contract(format!(
                    "custom control returned {v} at ({x}, {y})"
                )));
            }
            Ok(v)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesId {
    HalvingAdditive,
    HalvingQuadratic,
    DoublingAdditive,
    DoublingQuadratic,
}

impl SeriesId {
    pub const ALL: [SeriesId; 4] = [
        SeriesId::HalvingAdditive,
        SeriesId::HalvingQuadratic,
        SeriesId::DoublingAdditive,
        SeriesId::DoublingQuadratic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SeriesId::HalvingAdditive => "halving_additive",
            SeriesId::HalvingQuadratic => "halving_quadratic",
            SeriesId::DoublingAdditive => "doubling_additive",
            SeriesId::DoublingQuadratic => "doubling_quadratic",
        }
    }

    fn halving(self) -> bool {
        matches!(self, SeriesId::HalvingAdditive | SeriesId::HalvingQuadratic)
    }

    /// 1 for the additive weights `2^{±jβ}`, 2 for the quadratic `4^{±jβ}`.
    fn weight_order(self) -> f64 {
        match self {
            SeriesId::HalvingAdditive | SeriesId::DoublingAdditive => 1.0,
            _ => 2.0,
        }
    }

    /// The `n`-th term (`n ≥ 0`).
    pub fn term(self, phi: &ControlFunction, beta: f64, x: &Vector, y: &Vector, n: usize) -> Result<f64> {
        let k = n as i32;
        let w = self.weight_order() * beta;
        if self.halving() {
            let s = pow2(-(k + 1));
            let v = phi_eval(phi, &x.scale(s), &y.scale(s))?;
            Ok(if v == 0.0 { 0.0 } else { (w * n as f64).exp2() * v })
        } else {
            let s = pow2(k);
            let v = phi_eval(phi, &x.scale(s), &y.scale(s))?;
            Ok(if v == 0.0 { 0.0 } else { (-w * (n as f64 + 1.0)).exp2() * v })
        }
    }

    /// Upper bound on consecutive term ratios implied by a custom control's
    /// scaling claim.
    fn claimed_ratio(self, phi: &ControlFunction, beta: f64) -> Option<f64> {
        let PhiKind::Custom { halving, doubling, .. } = phi.kind else {
            return None;
        };
        let w = self.weight_order() * beta;
        if self.halving() {
            halving.map(|h| w.exp2() * h)
        } else {
            doubling.map(|d| (-w).exp2() * d)
        }
    }
}

impl fmt::Display for SeriesId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesVerdict {
    Converged,
    /// Term ratio stuck at or above one (or a term overflowed).
    Diverged,
    /// `max_terms` reached without a certified tail.
    Exhausted,
}

impl SeriesVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            SeriesVerdict::Converged => "converged",
            SeriesVerdict::Diverged => "diverged",
            SeriesVerdict::Exhausted => "exhausted",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesResult {
    pub value: f64,
    pub terms_used: usize,
    /// Geometric estimate of the neglected tail; `inf` when unknown.
    #[serde(serialize_with = "crate::report::ser_real")]
    pub tail_bound: f64,
    pub converged: bool,
    pub verdict: SeriesVerdict,
}

impl SeriesResult {
    /// Partial sum plus tail estimate, `inf` unless converged.
    pub fn upper(&self) -> f64 {
        if self.converged {
            self.value + self.tail_bound
        } else {
            f64::INFINITY
        }
    }
}

/// How much the summation loop may trust the observed term ratios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TermModel {
    /// Terms are exactly geometric (power controls): a zero first term means
    /// every term is zero, and the measured ratio is the true ratio.
    Geometric,
    /// Consecutive term ratios are bounded by the given constant.
    Claimed(f64),
    /// Nothing is known; the sum is never declared converged.
    Unverified,
}

/// Sums `term(0) + term(1) + …` left to right with a geometric stopping rule.
///
/// The loop stops with `Converged` once `t·ρ/(1−ρ) ≤ tol·max(1, S)` where `ρ`
/// is the stabilised ratio of the last two nonzero terms (or the claimed
/// bound). It stops with `Diverged` after [`DIVERGENCE_RUN`] consecutive
/// ratios `≥ 1 − 1e-9`, or when a term is not finite.
pub fn sum_geometric<F>(mut term: F, model: TermModel, tol: f64, max_terms: usize) -> Result<SeriesResult>
where
    F: FnMut(usize) -> Result<f64>,
{
    if !(tol > 0.0) {
        return Err(Error::input(format!("tolerance must be positive, got {tol}")));
    }
    let mut sum = 0.0f64;
    let mut last_nonzero: Option<f64> = None;
    let mut prev_ratio: Option<f64> = None;
    let mut unit_run = 0usize;
    let mut tail = f64::INFINITY;

    for n in 0..max_terms {
        let t = term(n)?;
        if !t.is_finite() {
            return Ok(SeriesResult {
                value: sum,
                terms_used: n,
                tail_bound: f64::INFINITY,
                converged: false,
                verdict: SeriesVerdict::Diverged,
            });
        }
        sum += t;
        let used = n + 1;

        if t == 0.0 {
            let done = match model {
                TermModel::Geometric => true,
                TermModel::Claimed(rho) => rho < 1.0,
                TermModel::Unverified => false,
            };
            if done {
                return Ok(SeriesResult {
                    value: sum,
                    terms_used: used,
                    tail_bound: 0.0,
                    converged: true,
                    verdict: SeriesVerdict::Converged,
                });
            }
            continue;
        }

        let ratio = last_nonzero.map(|p| t / p);
        last_nonzero = Some(t);
        let Some(ratio) = ratio else {
            if let TermModel::Claimed(rho) = model {
                if rho < 1.0 {
                    tail = t * rho / (1.0 - rho);
                    if tail <= tol * sum.abs().max(1.0) {
                        return Ok(converged(sum, used, tail));
                    }
                }
            }
            continue;
        };

        if ratio >= 1.0 - UNIT_RATIO_MARGIN {
            unit_run += 1;
            if unit_run >= DIVERGENCE_RUN {
                return Ok(SeriesResult {
                    value: sum,
                    terms_used: used,
                    tail_bound: f64::INFINITY,
                    converged: false,
                    verdict: SeriesVerdict::Diverged,
                });
            }
        } else {
            unit_run = 0;
        }

        let rho = match model {
            TermModel::Claimed(rho) => Some(rho),
            TermModel::Geometric | TermModel::Unverified => {
                let stable = prev_ratio
                    .map(|p| (ratio - p).abs() <= 1e-6 * ratio.abs().max(1e-300))
                    .unwrap_or(false);
                stable.then_some(ratio)
            }
        };
        prev_ratio = Some(ratio);
        if let Some(rho) = rho {
            if rho < 1.0 - UNIT_RATIO_MARGIN {
                tail = t * rho / (1.0 - rho);
                if model != TermModel::Unverified && tail <= tol * sum.abs().max(1.0) {
                    return Ok(converged(sum, used, tail));
                }
            } else {
                tail = f64::INFINITY;
            }
        }
    }
    Ok(SeriesResult {
        value: sum,
        terms_used: max_terms,
        tail_bound: tail,
        converged: false,
        verdict: SeriesVerdict::Exhausted,
    })
}

fn converged(value: f64, terms_used: usize, tail: f64) -> SeriesResult {
    SeriesResult {
        value,
        terms_used,
        tail_bound: tail,
        converged: true,
        verdict: SeriesVerdict::Converged,
    }
}

pub(crate) fn term_model(phi: &ControlFunction, id: SeriesId, beta: f64) -> TermModel {
    if phi.is_power() {
        TermModel::Geometric
    } else {
        id.claimed_ratio(phi, beta)
            .map(TermModel::Claimed)
            .unwrap_or(TermModel::Unverified)
    }
}

/// Evaluates one of the four stability series at `(x, y)`.
pub fn series(
    id: SeriesId,
    phi: &ControlFunction,
    x: &Vector,
    y: &Vector,
    beta: f64,
    tol: f64,
    max_terms: usize,
) -> Result<SeriesResult> {
    check_beta(beta)?;
    phi.space.check_dim(x)?;
    phi.space.check_dim(y)?;
    sum_geometric(
        |n| id.term(phi, beta, x, y, n),
        term_model(phi, id, beta),
        tol,
        max_terms,
    )
}

pub fn series_halving_additive(phi: &ControlFunction, x: &Vector, y: &Vector, beta: f64, tol: f64, max_terms: usize) -> Result<SeriesResult> {
    series(SeriesId::HalvingAdditive, phi, x, y, beta, tol, max_terms)
}

pub fn series_halving_quadratic(phi: &ControlFunction, x: &Vector, y: &Vector, beta: f64, tol: f64, max_terms: usize) -> Result<SeriesResult> {
    series(SeriesId::HalvingQuadratic, phi, x, y, beta, tol, max_terms)
}

pub fn series_doubling_additive(phi: &ControlFunction, x: &Vector, y: &Vector, beta: f64, tol: f64, max_terms: usize) -> Result<SeriesResult> {
    series(SeriesId::DoublingAdditive, phi, x, y, beta, tol, max_terms)
}

pub fn series_doubling_quadratic(phi: &ControlFunction, x: &Vector, y: &Vector, beta: f64, tol: f64, max_terms: usize) -> Result<SeriesResult> {
    series(SeriesId::DoublingQuadratic, phi, x, y, beta, tol, max_terms)
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if beta.is_finite() && beta > 0.0 {
        Ok(())
    } else {
        Err(Error::input(format!("beta must be positive, got {beta}")))
    }
}

/// Coefficient `K` with `series(x, y) = K · φ(x, y)` for a control of exact
/// scaling degree `degree` (`φ(t x, t y) = t^degree φ(x, y)`, `t > 0`) and
/// target homogeneity `beta_y`. `None` when the series diverges.
pub fn closed_form_coefficient(id: SeriesId, degree: f64, beta_y: f64) -> Option<f64> {
    let w = id.weight_order() * beta_y;
    if id.halving() {
        (degree > w).then(|| 1.0 / (degree.exp2() - w.exp2()))
    } else {
        (degree < w).then(|| 1.0 / (w.exp2() - degree.exp2()))
    }
}

/// Closed-form series coefficient for the power control `√θ(‖x‖^r + ‖y‖^r)`
/// on β-homogeneous spaces: `1/(2^{βr} − 2^β)`, `1/(2^{βr} − 4^β)`,
/// `1/(2^β − 2^{βr})`, `1/(4^β − 2^{βr})` in the order of [`SeriesId::ALL`],
/// each on its convergence range. `None` means divergent.
pub fn closed_form_power(theta: f64, r: f64, beta: f64, id: SeriesId) -> Result<Option<f64>> {
    if !(theta.is_finite() && theta >= 0.0) {
        return Err(Error::input(format!("theta must be >= 0, got {theta}")));
    }
    check_beta(beta)?;
    Ok(closed_form_coefficient(id, beta * r, beta))
}

/// Halving or doubling regime. Selects the direct-method series pair, the
/// fixed-point operators and the scaling hypothesis checked for them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Hypothesis `φ(x/2, y/2) ≤ (L/4^β) φ(x, y) ≤ (L/2^β) φ(x, y)`.
    Halving,
    /// Hypothesis `φ(x, y) ≤ 2^β L φ(x/2, y/2) ≤ 4^β L φ(x/2, y/2)`.
    Doubling,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Halving => "halving",
            Regime::Doubling => "doubling",
        }
    }
}

struct RatioScan {
    worst: f64,
    witness: Option<(Vector, Vector, f64, f64)>,
    counted: usize,
}

/// Per-sample required constant: `4^β φ(x/2,y/2)/φ(x,y)` (halving) or
/// `φ(x,y)/(2^β φ(x/2,y/2))` (doubling). Samples with `φ(x,y) = 0` are skipped.
fn scan_ratios(
    phi: &ControlFunction,
    beta: f64,
    samples: &[(Vector, Vector)],
    cond: Regime,
) -> Result<RatioScan> {
    let mut scan = RatioScan {
        worst: f64::NEG_INFINITY,
        witness: None,
        counted: 0,
    };
    for (x, y) in samples {
        let full = phi_eval(phi, x, y)?;
        if full == 0.0 {
            continue;
        }
        let half = phi_eval(phi, &x.scale(0.5), &y.scale(0.5))?;
        let required = match cond {
            Regime::Halving => (2.0 * beta).exp2() * half / full,
            Regime::Doubling => {
                if half == 0.0 {
                    f64::INFINITY
                } else {
                    full / (beta.exp2() * half)
                }
            }
        };
        scan.counted += 1;
        if required > scan.worst {
            scan.worst = required;
            scan.witness = Some((x.clone(), y.clone(), full, half));
        }
    }
    Ok(scan)
}

/// Checks a scaling hypothesis for a stated `L` on sample pairs.
///
/// The witness records the stated and required constants, plus the
/// observed scaling ratio of `φ` against the ratio the stated `L` allows.
pub fn check_condition(
    phi: &ControlFunction,
    l: f64,
    beta: f64,
    samples: &[(Vector, Vector)],
    cond: Regime,
) -> Result<AuditEntry> {
    if !(l > 0.0 && l < 1.0) {
        return Err(Error::input(format!("L must lie in (0, 1), got {l}")));
    }
    check_beta(beta)?;
    let id = format!("condition.{}", cond.as_str());
    let scan = scan_ratios(phi, beta, samples, cond)?;
    let Some((x, y, full, half)) = scan.witness else {
        return Ok(AuditEntry::pass(id, f64::INFINITY)
            .with_notes("vacuous: control vanishes on every sample"));
    };
    let (available, observed) = match cond {
        Regime::Halving => (l / (2.0 * beta).exp2(), half / full),
        Regime::Doubling => (beta.exp2() * l, full / half),
    };
    let ok = scan.worst <= l;
    let w = Witness::at(vec![x.into_coords(), y.into_coords()])
        .with("stated_L", l)
        .with("required_L", scan.worst)
        .with("available_ratio", available)
        .with("observed_ratio", observed);
    Ok(AuditEntry::verdict(id, ok, l - scan.worst)
        .with_witness(w)
        .with_notes(format!("{} sample pair(s) with nonzero control", scan.counted)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SmallestL {
    Below(f64),
    /// The tightest constant on the samples is `≥ 1`.
    NoneBelowOne(f64),
}

impl SmallestL {
    pub fn value(self) -> f64 {
        match self {
            SmallestL::Below(v) | SmallestL::NoneBelowOne(v) => v,
        }
    }
}

/// Tightest `L` for which the scaling condition holds on the samples.
pub fn smallest_l(
    phi: &ControlFunction,
    beta: f64,
    samples: &[(Vector, Vector)],
    cond: Regime,
) -> Result<SmallestL> {
    check_beta(beta)?;
    let scan = scan_ratios(phi, beta, samples, cond)?;
    if scan.counted == 0 {
        return Err(Error::input("every sample pair has a zero control value"));
    }
    Ok(if scan.worst < 1.0 {
        SmallestL::Below(scan.worst)
    } else {
        SmallestL::NoneBelowOne(scan.worst)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(beta: f64) -> SpaceSpec {
        SpaceSpec::beta_homogeneous(1, beta).unwrap()
    }

    fn s(v: f64) -> Vector {
        Vector::scalar(v)
    }

    fn power(theta: f64, r: f64, beta: f64) -> ControlFunction {
        ControlFunction::power(line(beta), theta, r).unwrap()
    }

    #[test]
    fn phi_examples() {
        assert_eq!(power(1.0, 3.0, 1.0).eval(&s(1.0), &s(0.0)).unwrap(), 1.0);
        assert_eq!(power(4.0, 2.0, 1.0).eval(&s(1.0), &s(1.0)).unwrap(), 4.0);
        assert_eq!(power(4.0, 2.0, 1.0).eval(&s(0.0), &s(0.0)).unwrap(), 0.0);
        let neg = ControlFunction::custom(line(1.0), Arc::new(|_, _| -1.0));
        assert!(matches!(neg.eval(&s(1.0), &s(1.0)), Err(Error::Contract(_))));
    }

    #[test]
    fn halving_quadratic_product_example() {
        let phi = power(1.0, 3.0, 1.0);
        let phi_x0 = phi.eval(&s(1.0), &s(0.0)).unwrap();
        let q = series_halving_quadratic(&phi, &s(1.0), &s(1.0), 1.0, 1e-14, 500).unwrap();
        assert!(q.converged);
        assert!((phi_x0 * q.value - 0.5).abs() < 1e-12);
        let zero = series_halving_quadratic(&phi, &s(0.0), &s(0.0), 1.0, 1e-14, 500).unwrap();
        assert_eq!(zero.value, 0.0);
        assert!(zero.converged);
    }

    #[test]
    fn critical_ratios_diverge() {
        let r2 = power(1.0, 2.0, 1.0);
        let q = series_halving_quadratic(&r2, &s(1.0), &s(1.0), 1.0, 1e-12, 500).unwrap();
        assert_eq!(q.verdict, SeriesVerdict::Diverged);
        assert!(!q.converged);
        let r1 = power(1.0, 1.0, 1.0);
        let a = series_halving_additive(&r1, &s(1.0), &s(1.0), 1.0, 1e-12, 500).unwrap();
        assert_eq!(a.verdict, SeriesVerdict::Diverged);
        let d = series_doubling_additive(&power(1.0, 2.0, 1.0), &s(1.0), &s(1.0), 1.0, 1e-12, 500).unwrap();
        assert_eq!(d.verdict, SeriesVerdict::Diverged);
    }

    #[test]
    fn halving_additive_example() {
        let phi = power(1.0, 3.0, 1.0);
        let psi = series_halving_additive(&phi, &s(1.0), &s(1.0), 1.0, 1e-14, 500).unwrap();
        let prod = psi.value * phi.eval(&s(1.0), &s(0.0)).unwrap();
        assert!((prod - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn doubling_examples() {
        let phi = power(1.0, 0.5, 1.0);
        let psi = series_doubling_additive(&phi, &s(1.0), &s(1.0), 1.0, 1e-15, 2000).unwrap();
        assert!((psi.value - 2.0 / (2.0 - 2f64.sqrt())).abs() < 1e-12);
        let q = series_doubling_quadratic(&phi, &s(1.0), &s(1.0), 1.0, 1e-15, 2000).unwrap();
        assert!((q.value - 2.0 / (4.0 - 2f64.sqrt())).abs() < 1e-12);

        let phi = power(1.0, 0.5, 0.5);
        let q = series_doubling_quadratic(&phi, &s(1.0), &s(1.0), 0.5, 1e-15, 2000).unwrap();
        assert!((q.value - 2.0 / (2.0 - 2f64.powf(0.25))).abs() < 1e-12);
    }

    #[test]
    fn closed_form_examples() {
        let c = closed_form_power(1.0, 3.0, 1.0, SeriesId::HalvingAdditive).unwrap().unwrap();
        assert!((c - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(closed_form_power(1.0, 2.0, 1.0, SeriesId::HalvingQuadratic).unwrap(), None);
        assert_eq!(
            closed_form_power(1.0, 0.0, 1.0, SeriesId::DoublingAdditive).unwrap(),
            Some(1.0)
        );
        assert!(closed_form_power(-1.0, 1.0, 1.0, SeriesId::DoublingAdditive).is_err());
    }

    /// Oracle: 200 explicit terms summed in plain floating point.
    fn truncated_oracle(id: SeriesId, r: f64, beta: f64) -> f64 {
        (0..200)
            .map(|n| {
                let j = n as f64;
                match id {
                    SeriesId::HalvingAdditive => 2f64.powf(j * beta) * 2f64.powf(-(j + 1.0) * beta * r),
                    SeriesId::HalvingQuadratic => 4f64.powf(j * beta) * 2f64.powf(-(j + 1.0) * beta * r),
                    SeriesId::DoublingAdditive => 2f64.powf(-(j + 1.0) * beta) * 2f64.powf(j * beta * r),
                    SeriesId::DoublingQuadratic => 4f64.powf(-(j + 1.0) * beta) * 2f64.powf(j * beta * r),
                }
            })
            .sum()
    }

    #[test]
    fn closed_form_matches_truncated_oracle() {
        let c = closed_form_power(1.0, 3.0, 1.0, SeriesId::HalvingAdditive).unwrap().unwrap();
        assert!((c - truncated_oracle(SeriesId::HalvingAdditive, 3.0, 1.0)).abs() <= 1e-12);
        let c = closed_form_power(1.0, 0.5, 1.0, SeriesId::DoublingQuadratic).unwrap().unwrap();
        assert!((c - truncated_oracle(SeriesId::DoublingQuadratic, 0.5, 1.0)).abs() <= 1e-12);
    }

    #[test]
    fn custom_control_needs_a_claim() {
        let base = ControlFunction::custom(line(1.0), Arc::new(|x: &Vector, y: &Vector| {
            x.first().abs().powi(3) + y.first().abs().powi(3)
        }));
        let r = series_halving_additive(&base, &s(1.0), &s(1.0), 1.0, 1e-12, 100).unwrap();
        assert!(!r.converged);
        assert_eq!(r.verdict, SeriesVerdict::Exhausted);

        let claimed = base.with_scaling_claims(Some(0.125), None);
        let r = series_halving_additive(&claimed, &s(1.0), &s(1.0), 1.0, 1e-14, 200).unwrap();
        assert!(r.converged);
        assert!((r.value - 2.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn condition_halving_examples() {
        let pairs = vec![(s(1.0), s(1.0)), (s(2.0), s(-0.5)), (s(0.0), s(0.0))];
        let e = check_condition(&power(1.0, 3.0, 1.0), 0.5, 1.0, &pairs, Regime::Halving).unwrap();
        assert!(e.is_pass());
        assert_eq!(e.witness.unwrap().value("required_L"), Some(0.5));

        let r = 1.5f64;
        let l = (2f64.powf(r) - 2.0) / (2f64.powf(r) - 2.0 + 1.0);
        let e = check_condition(&power(1.0, r, 1.0), l, 1.0, &pairs, Regime::Halving).unwrap();
        assert!(!e.is_pass());
        let w = e.witness.unwrap();
        assert!((w.value("available_ratio").unwrap() - 0.113_270_3).abs() < 1e-6);
        assert!((w.value("observed_ratio").unwrap() - 2f64.powf(-1.5)).abs() < 1e-12);

        let zero = ControlFunction::zero(line(1.0));
        let e = check_condition(&zero, 0.5, 1.0, &pairs, Regime::Halving).unwrap();
        assert!(e.is_pass());
        assert!(check_condition(&zero, 1.0, 1.0, &pairs, Regime::Halving).is_err());
    }

    #[test]
    fn condition_doubling_examples() {
        let pairs = vec![(s(1.0), s(1.0)), (s(0.5), s(2.0))];
        let phi = power(1.0, 0.5, 1.0);
        let e = check_condition(&phi, 2f64.powf(-0.5), 1.0, &pairs, Regime::Doubling).unwrap();
        assert!(e.is_pass(), "{e:?}");
        let e = check_condition(&phi, 2f64.powf(-1.5), 1.0, &pairs, Regime::Doubling).unwrap();
        assert!(!e.is_pass());
        assert!((e.witness.unwrap().value("required_L").unwrap() - 2f64.powf(-0.5)).abs() < 1e-12);
        let zero = ControlFunction::zero(line(1.0));
        assert!(check_condition(&zero, 0.5, 1.0, &pairs, Regime::Doubling).unwrap().is_pass());
    }

    #[test]
    fn smallest_l_examples() {
        let pairs = vec![(s(1.0), s(1.0)), (s(-1.5), s(0.25))];
        let l = smallest_l(&power(1.0, 3.0, 1.0), 1.0, &pairs, Regime::Halving).unwrap();
        assert_eq!(l, SmallestL::Below(0.5));
        let l = smallest_l(&power(1.0, 2.0, 1.0), 1.0, &pairs, Regime::Halving).unwrap();
        assert!(matches!(l, SmallestL::NoneBelowOne(v) if v == 1.0));
        let l = smallest_l(&power(1.0, 0.5, 1.0), 1.0, &pairs, Regime::Doubling).unwrap();
        assert!((l.value() - 2f64.powf(-0.5)).abs() < 1e-12);
        let zero = ControlFunction::zero(line(1.0));
        assert!(smallest_l(&zero, 1.0, &pairs, Regime::Halving).is_err());
    }
}
