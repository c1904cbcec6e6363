//! Structural checks of extracted mappings, verification of the final
//! stability bounds, and numerical audits of the power-type corollaries.
//!
//! The auditor never repairs a stated result. When a recomputed constant or
//! hypothesis disagrees with the printed one, the entry is `flagged` and
//! carries both values.

use serde::{Deserialize, Serialize};

use crate::control::{check_condition, phi_eval, series, sum_geometric, ControlFunction, Regime, SeriesId, SeriesResult, TermModel};
use crate::error::{Error, Result};
use crate::fixpoint::{condition_pairs, stability_bound_fp};
use crate::mappings::{defect, Mapping, Tuple};
use crate::report::{AuditEntry, Status, Witness};
use crate::spaces::{
    check_beta_homogeneity, check_fnorm_axioms, induce_fnorm_from_pnorm, norm_eval, pow2, SpaceSpec, Vector,
};

const SERIES_TOL: f64 = 1e-15;
const SERIES_MAX_TERMS: usize = 5000;
/// Relative tolerance for comparing recomputed and printed constants.
pub const CONSTANT_TOL: f64 = 1e-12;

fn coords(vs: &[&Vector]) -> Vec<Vec<f64>> {
    vs.iter().map(|v| v.coords().to_vec()).collect()
}

struct Worst {
    value: f64,
    point: Option<Vec<Vec<f64>>>,
}

impl Worst {
    fn new() -> Self {
        Worst {
            value: f64::NEG_INFINITY,
            point: None,
        }
    }

    /// Strict comparison: the first maximum wins.
    fn offer(&mut self, value: f64, point: impl FnOnce() -> Vec<Vec<f64>>) {
        if value > self.value {
            self.value = value;
            self.point = Some(point());
        }
    }
}

/// Residuals of the three structural families on sample tuples `(x, y, z, w)`:
/// the full equation, first-slot additivity `F(x+y, z) − F(x, z) − F(y, z)`,
/// and the second-slot quadratic law `F(x, z+w) + F(x, z−w) − 2F(x, z) − 2F(x, w)`.
pub fn check_structure(f: &Mapping, samples: &[Tuple], tol: f64) -> Result<Vec<AuditEntry>> {
    if samples.is_empty() {
        return Err(Error::input("structural check needs at least one sample tuple"));
    }
    let y_space = f.y_space();
    let mut full = Worst::new();
    let mut additive = Worst::new();
    let mut quadratic = Worst::new();
    for t in samples {
        let [x, y, z, w] = t;
        let r = defect(f, x, y, z, w)?;
        full.offer(r, || coords(&[x, y, z, w]));

        let a = &(&f.eval(&(x + y), z)? - &f.eval(x, z)?) - &f.eval(y, z)?;
        additive.offer(norm_eval(y_space, &a)?, || coords(&[x, y, z]));

        let q = &(&f.eval(x, &(z + w))? + &f.eval(x, &(z - w))?) - &(&f.eval(x, z)? + &f.eval(x, w)?).scale(2.0);
        quadratic.offer(norm_eval(y_space, &q)?, || coords(&[x, z, w]));
    }
    let entry = |id: &str, w: Worst| {
        AuditEntry::verdict(id, w.value <= tol, tol - w.value)
            .with_witness(Witness::at(w.point.unwrap_or_default()).with("residual", w.value))
            .with_notes(format!("{} sample tuple(s)", samples.len()))
    };
    Ok(vec![
        entry("structure.full_equation", full),
        entry("structure.first_slot_additive", additive),
        entry("structure.second_slot_quadratic", quadratic),
    ])
}

fn eval_series(id: SeriesId, phi: &ControlFunction, x: &Vector, y: &Vector, beta: f64) -> Result<SeriesResult> {
    series(id, phi, x, y, beta, SERIES_TOL, SERIES_MAX_TERMS)
}

/// The series pair `(Ψ, Φ)` used by a direct-method bound and the series
/// whose convergence is that method's hypothesis.
pub fn direct_series(regime: Regime) -> (SeriesId, SeriesId, SeriesId) {
    match regime {
        Regime::Halving => (SeriesId::HalvingAdditive, SeriesId::HalvingQuadratic, SeriesId::HalvingQuadratic),
        Regime::Doubling => (SeriesId::DoublingAdditive, SeriesId::DoublingQuadratic, SeriesId::DoublingAdditive),
    }
}

/// `min{Ψ(x,x)φ(z,0), φ(x,0)Φ(z,z)}` from partial sums plus their tail
/// estimates (exact for geometric terms), or the divergent
/// hypothesis series when it fails to converge. A divergent non-hypothesis
/// entry counts as `+∞`.
pub fn direct_bound(phi: &ControlFunction, beta: f64, regime: Regime, x: &Vector, z: &Vector) -> Result<std::result::Result<(f64, f64), SeriesId>> {
    let (psi_id, phi_id, hyp) = direct_series(regime);
    let zero = Vector::zeros(x.dim());
    let psi = eval_series(psi_id, phi, x, x, beta)?;
    let big_phi = eval_series(phi_id, phi, z, z, beta)?;
    let hyp_ok = if hyp == psi_id { psi.converged } else { big_phi.converged };
    if !hyp_ok {
        return Ok(Err(hyp));
    }
    let product = |s: &SeriesResult, factor: f64| {
        if factor == 0.0 {
            0.0
        } else if s.converged {
            s.upper() * factor
        } else {
            f64::INFINITY
        }
    };
    let a = product(&psi, phi_eval(phi, z, &zero)?);
    let b = product(&big_phi, phi_eval(phi, x, &zero)?);
    Ok(Ok((a, b)))
}

/// Checks `‖f(x,z) − F(x,z)‖ ≤ min{Ψ(x,x)φ(z,0), φ(x,0)Φ(z,z)}` at every
/// sample, with `F` given by its values at the samples.
pub fn verify_direct_bound(
    f: &Mapping,
    f_values: &[Vector],
    phi: &ControlFunction,
    beta: f64,
    regime: Regime,
    samples: &[(Vector, Vector)],
) -> Result<AuditEntry> {
    if f_values.len() != samples.len() {
        return Err(Error::input("F values do not match the sample count"));
    }
    let id = format!("direct.{}.bound", regime.as_str());
    let mut worst = (f64::INFINITY, None);
    for ((x, z), fv) in samples.iter().zip(f_values) {
        let (a, b) = match direct_bound(phi, beta, regime, x, z)? {
            Ok(ab) => ab,
            Err(hyp) => {
                return Ok(AuditEntry::refused(
                    id,
                    format!("hypothesis series {hyp} diverges at ({x}, {z})"),
                )
                .with_witness(Witness::at(coords(&[x, z]))));
            }
        };
        let bound = a.min(b);
        let dev = norm_eval(f.y_space(), &(&f.eval(x, z)? - fv))?;
        let slack = bound - dev;
        if slack < worst.0 {
            worst = (slack, Some((x, z, dev, bound)));
        }
    }
    Ok(match worst.1 {
        None => AuditEntry::pass(id, f64::INFINITY).with_notes("no samples"),
        Some((x, z, dev, bound)) => AuditEntry::verdict(id, worst.0 >= 0.0, worst.0)
            .with_witness(Witness::at(coords(&[x, z])).with("deviation", dev).with("bound", bound))
            .with_notes(format!("sampled on {} point(s)", samples.len())),
    })
}

/// The six power-type corollaries audited by [`audit_corollary`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorollaryId {
    /// Direct method, halving regime, power control, `r > 2`.
    HalvingPower,
    /// Quasi-Banach version of the halving direct method.
    HalvingQuasi,
    /// Direct method, doubling regime, power control, `r < 1`.
    DoublingPower,
    /// Quasi-Banach version of the doubling direct method.
    DoublingQuasi,
    /// Fixed-point method, halving regime, power control, `r > 1`.
    FixpointHalvingPower,
    /// Fixed-point method, doubling regime, power control, `r < 1`.
    FixpointDoublingPower,
}

impl CorollaryId {
    pub const ALL: [CorollaryId; 6] = [
        CorollaryId::HalvingPower,
        CorollaryId::HalvingQuasi,
        CorollaryId::DoublingPower,
        CorollaryId::DoublingQuasi,
        CorollaryId::FixpointHalvingPower,
        CorollaryId::FixpointDoublingPower,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CorollaryId::HalvingPower => "halving_power",
            CorollaryId::HalvingQuasi => "halving_quasi",
            CorollaryId::DoublingPower => "doubling_power",
            CorollaryId::DoublingQuasi => "doubling_quasi",
            CorollaryId::FixpointHalvingPower => "fixpoint_halving_power",
            CorollaryId::FixpointDoublingPower => "fixpoint_doubling_power",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

/// The constants as printed for a power-type corollary: the two entries of
/// the displayed `min{…}` (coefficients of `‖x‖^r‖z‖^r`), the constant the
/// corollary states, and the `L` it chooses where applicable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrintedConstants {
    pub entries: (f64, f64),
    pub stated: f64,
    pub stated_l: Option<f64>,
}

pub fn printed_constants(id: CorollaryId, theta: f64, r: f64, beta: f64) -> Option<PrintedConstants> {
    let t2 = 2.0 * theta;
    let (b, rb) = (beta.exp2(), (r * beta).exp2());
    let b4 = (2.0 * beta).exp2();
    match id {
        CorollaryId::HalvingPower => Some(PrintedConstants {
            entries: (t2 / (rb - b), t2 / (rb - b4)),
            stated: t2 / (rb - b),
            stated_l: None,
        }),
        CorollaryId::DoublingPower => Some(PrintedConstants {
            entries: (t2 / (b - rb), t2 / (b4 - rb)),
            stated: t2 / (b4 - rb),
            stated_l: None,
        }),
        CorollaryId::FixpointHalvingPower => Some(PrintedConstants {
            entries: (t2 / (((r - 1.0) * beta).exp2() - 1.0), t2 / (rb - b)),
            stated: t2 / (rb - b),
            stated_l: Some((rb - b) / (rb - b + 1.0)),
        }),
        CorollaryId::FixpointDoublingPower => Some(PrintedConstants {
            entries: (t2 / (b4 - rb), (beta + 1.0).exp2() * theta / (b4 - rb)),
            stated: t2 / (b4 - rb),
            stated_l: Some((beta * (r - 2.0)).exp2()),
        }),
        CorollaryId::HalvingQuasi | CorollaryId::DoublingQuasi => None,
    }
}

fn check_range(id: CorollaryId, theta: f64, r: f64, beta: f64) -> Result<()> {
    if !(theta.is_finite() && theta >= 0.0) {
        return Err(Error::input(format!("theta must be >= 0, got {theta}")));
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::input(format!("beta must lie in (0, 1], got {beta}")));
    }
    let ok = match id {
        CorollaryId::HalvingPower => r > 2.0,
        CorollaryId::DoublingPower | CorollaryId::FixpointDoublingPower => r > 0.0 && r < 1.0,
        CorollaryId::FixpointHalvingPower => r > 1.0,
        CorollaryId::HalvingQuasi | CorollaryId::DoublingQuasi => r > 0.0,
    };
    if ok && r.is_finite() {
        Ok(())
    } else {
        Err(Error::input(format!("r = {r} lies outside the range of {}", id.as_str())))
    }
}

fn is_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= CONSTANT_TOL * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn flag_unless(ok: bool) -> Status {
    if ok {
        Status::Pass
    } else {
        Status::Flagged
    }
}

/// Audits one corollary at `(θ, r, β)` on sample points `(x, z)`.
///
/// For the quasi-Banach corollaries `beta` is read as the exponent `p` of
/// the `p`-norm on `Y`, and `X` carries the `ℓ_p` law of the same dimension.
pub fn audit_corollary(
    id: CorollaryId,
    theta: f64,
    r: f64,
    beta: f64,
    samples: &[(Vector, Vector)],
) -> Result<Vec<AuditEntry>> {
    check_range(id, theta, r, beta)?;
    let dim = samples
        .first()
        .map(|(x, _)| x.dim())
        .ok_or_else(|| Error::input("corollary audit needs at least one sample point"))?;
    match id {
        CorollaryId::HalvingQuasi | CorollaryId::DoublingQuasi => audit_quasi(id, theta, r, beta, dim, samples),
        _ => audit_power(id, theta, r, beta, dim, samples),
    }
}

fn audit_power(id: CorollaryId, theta: f64, r: f64, beta: f64, dim: usize, samples: &[(Vector, Vector)]) -> Result<Vec<AuditEntry>> {
    let space = SpaceSpec::beta_homogeneous(dim, beta)?;
    let phi = ControlFunction::power(space.clone(), theta, r)?;
    let printed = printed_constants(id, theta, r, beta).expect("power corollary");
    let prefix = format!("corollary.{}", id.as_str());
    let fixpoint_regime = match id {
        CorollaryId::FixpointHalvingPower => Some(Regime::Halving),
        CorollaryId::FixpointDoublingPower => Some(Regime::Doubling),
        _ => None,
    };
    let direct_regime = match id {
        CorollaryId::HalvingPower => Some(Regime::Halving),
        CorollaryId::DoublingPower => Some(Regime::Doubling),
        _ => None,
    };
    let zero = Vector::zeros(dim);
    let mut entries = Vec::new();

    // (i) Recompute the constant from the governing bound at every sample.
    let mut worst_dev = (f64::NEG_INFINITY, None);
    let mut recomputed_entries = (f64::NAN, f64::NAN);
    let mut divergent = None;
    for (x, z) in samples {
        let (nx, nz) = (norm_eval(&space, x)?, norm_eval(&space, z)?);
        if nx == 0.0 || nz == 0.0 {
            continue;
        }
        let scale = nx.powf(r) * nz.powf(r);
        let (a, b) = if let Some(regime) = fixpoint_regime {
            let l = printed.stated_l.unwrap();
            let num = if regime == Regime::Halving { l } else { 1.0 };
            let first = num / (beta.exp2() * (1.0 - l)) * phi_eval(&phi, x, x)? * phi_eval(&phi, z, &zero)?;
            let second = num / ((2.0 * beta).exp2() * (1.0 - l)) * phi_eval(&phi, x, &zero)? * phi_eval(&phi, z, z)?;
            debug_assert!(is_close(first.min(second), stability_bound_fp(l, beta, &phi, x, z, regime)?));
            (first, second)
        } else {
            match direct_bound(&phi, beta, direct_regime.unwrap(), x, z)? {
                Ok(ab) => ab,
                Err(hyp) => {
                    divergent = Some((hyp, x, z));
                    break;
                }
            }
        };
        let (ka, kb) = (a / scale, b / scale);
        recomputed_entries = (ka, kb);
        let dev = (ka.min(kb) - printed.stated).abs();
        if dev > worst_dev.0 {
            worst_dev = (dev, Some((x, z, ka, kb)));
        }
    }
    if let Some((hyp, x, z)) = divergent {
        entries.push(
            AuditEntry::refused(format!("{prefix}.constant"), format!("series {hyp} diverges at ({x}, {z})"))
                .with_witness(Witness::at(coords(&[x, z]))),
        );
    } else if let Some((x, z, ka, kb)) = worst_dev.1 {
        let recomputed = ka.min(kb);
        let ok = is_close(recomputed, printed.stated);
        let mut e = AuditEntry::new(format!("{prefix}.constant"), flag_unless(ok), -worst_dev.0)
            .with_witness(
                Witness::at(coords(&[x, z]))
                    .with("printed", printed.stated)
                    .with("recomputed", recomputed)
                    .with("recomputed_first", ka)
                    .with("recomputed_second", kb),
            )
            .with_notes(format!("coefficient of ‖x‖^r‖z‖^r over {} sample point(s)", samples.len()));
        if !ok {
            e.notes.push_str("; recomputed bound constant disagrees with the printed constant");
        }
        entries.push(e);
    } else {
        return Err(Error::input("corollary audit needs a sample with x ≠ 0 and z ≠ 0"));
    }

    // (ii) The printed min{…} identity and the order of its entries.
    let (e1, e2) = printed.entries;
    let identity_ok = is_close(e1.min(e2), printed.stated);
    let in_order = is_close(e1, recomputed_entries.0) && is_close(e2, recomputed_entries.1);
    let swapped = is_close(e1, recomputed_entries.1) && is_close(e2, recomputed_entries.0);
    let mut e = AuditEntry::new(format!("{prefix}.min_identity"), flag_unless(identity_ok), -(e1.min(e2) - printed.stated).abs())
        .with_witness(
            Witness::at(Vec::new())
                .with("printed_first", e1)
                .with("printed_second", e2)
                .with("printed_min", e1.min(e2))
                .with("stated", printed.stated)
                .with("recomputed_first", recomputed_entries.0)
                .with("recomputed_second", recomputed_entries.1),
        );
    e.notes = if in_order {
        "printed entries match the recomputed entries".into()
    } else if swapped {
        "printed entries match the recomputed entries in swapped order".into()
    } else {
        "printed entries differ from the recomputed entries".into()
    };
    entries.push(e);

    // (iii) The hypothesis at the stated parameters.
    if let Some(regime) = fixpoint_regime {
        let l = printed.stated_l.unwrap();
        let c = check_condition(&phi, l, beta, &condition_pairs(samples), regime)?;
        let mut e = AuditEntry::new(format!("{prefix}.hypothesis"), flag_unless(c.is_pass()), c.margin);
        e.witness = c.witness;
        e.notes = format!("{} scaling hypothesis with the stated L = {l}", regime.as_str());
        entries.push(e);
    } else {
        let regime = direct_regime.unwrap();
        let (_, _, hyp) = direct_series(regime);
        let boundary = if regime == Regime::Halving { 2.0 } else { 1.0 };
        let phi_b = ControlFunction::power(space.clone(), theta.max(1.0), boundary)?;
        let mut worst = None;
        for (x, z) in samples {
            let arg = if hyp == SeriesId::HalvingQuadratic { z } else { x };
            let s = eval_series(hyp, &phi, arg, arg, beta)?;
            if !s.converged {
                worst = Some((x, z, s));
                break;
            }
        }
        let one = Vector::basis(dim, 0);
        let at_boundary = eval_series(hyp, &phi_b, &one, &one, beta)?;
        let mut e = match worst {
            None => AuditEntry::pass(format!("{prefix}.hypothesis"), 0.0),
            Some((x, z, s)) => AuditEntry::new(format!("{prefix}.hypothesis"), Status::Flagged, -1.0)
                .with_witness(Witness::at(coords(&[x, z])).with("partial_sum", s.value)),
        };
        let w = e.witness.take().unwrap_or_default();
        e.witness = Some(
            w.with("r", r)
                .with("boundary_r", boundary)
                .with("boundary_converges", if at_boundary.converged { 1.0 } else { 0.0 }),
        );
        e.notes = format!(
            "series {hyp} at r = {r}; at the range boundary r = {boundary} it is {}",
            at_boundary.verdict.as_str()
        );
        entries.push(e);
    }
    Ok(entries)
}

/// A series exactly as printed in a quasi-Banach corollary: `Σ_{j≥1} c^{j−1}
/// φ(x/2^j, y/2^j)` with `c = 2^{±p}` or `4^{p}`.
fn printed_quasi_series(phi: &ControlFunction, ratio: f64, x: &Vector, y: &Vector) -> Result<SeriesResult> {
    sum_geometric(
        |n| {
            let s = pow2(-(n as i32 + 1));
            let v = phi_eval(phi, &x.scale(s), &y.scale(s))?;
            Ok(if v == 0.0 { 0.0 } else { ratio.powi(n as i32) * v })
        },
        TermModel::Geometric,
        SERIES_TOL,
        SERIES_MAX_TERMS,
    )
}

fn audit_quasi(id: CorollaryId, theta: f64, r: f64, p: f64, dim: usize, samples: &[(Vector, Vector)]) -> Result<Vec<AuditEntry>> {
    let prefix = format!("corollary.{}", id.as_str());
    let x_space = SpaceSpec::p_norm(dim, p)?;
    let y_space = SpaceSpec::p_norm(dim, p)?;
    let phi = ControlFunction::power(x_space.clone(), theta, r)?;
    let mut entries = Vec::new();

    // The p-th power of the p-norm is a p-homogeneous F-norm.
    let induced = induce_fnorm_from_pnorm(&y_space)?;
    let vectors: Vec<Vector> = samples.iter().flat_map(|(x, z)| [x.clone(), z.clone()]).collect();
    let homog = check_beta_homogeneity(&induced, &vectors, &[-2.0, -0.5, 0.0, 0.25, 3.0], CONSTANT_TOL)?;
    let axioms = check_fnorm_axioms(&induced, &vectors, &[], CONSTANT_TOL)?;
    let triangle = axioms
        .iter()
        .find(|e| e.check_id.ends_with("triangle"))
        .cloned()
        .expect("triangle axiom entry");
    let ok = homog.is_pass() && triangle.is_pass();
    entries.push(
        AuditEntry::new(format!("{prefix}.induced_fnorm"), if ok { Status::Pass } else { Status::Fail }, homog.margin.min(triangle.margin))
            .with_witness(
                Witness::at(Vec::new())
                    .with("induced_beta", induced.beta()?)
                    .with("homogeneity_margin", homog.margin)
                    .with("triangle_margin", triangle.margin),
            )
            .with_notes(format!("p = {p}: ‖·‖^p on Y checked for p-homogeneity and the triangle law")),
    );

    // Printed series against the series of the governing theorem with β = p.
    let (printed_psi_ratio, printed_phi_ratio) = match id {
        CorollaryId::HalvingQuasi => (p.exp2(), (2.0 * p).exp2()),
        _ => ((-p).exp2(), (2.0 * p).exp2()),
    };
    let regime = if id == CorollaryId::HalvingQuasi { Regime::Halving } else { Regime::Doubling };
    let (psi_id, phi_id, hyp) = direct_series(regime);
    let mut mismatch: Option<(f64, Witness)> = None;
    let mut printed_hyp_ok = true;
    let mut theorem_hyp_ok = true;
    let mut first_point = None;
    for (x, z) in samples {
        first_point.get_or_insert((x, z));
        for (name, ratio, sid, arg) in [("psi", printed_psi_ratio, psi_id, x), ("phi", printed_phi_ratio, phi_id, z)] {
            let printed = printed_quasi_series(&phi, ratio, arg, arg)?;
            let theorem = eval_series(sid, &phi, arg, arg, p)?;
            if sid == hyp {
                theorem_hyp_ok &= theorem.converged;
                printed_hyp_ok &= printed.converged;
            }
            let agree = printed.converged == theorem.converged
                && (!printed.converged || is_close(printed.value, theorem.value));
            let dev = if printed.converged && theorem.converged {
                (printed.value - theorem.value).abs()
            } else if agree {
                0.0
            } else {
                f64::INFINITY
            };
            if !agree && mismatch.as_ref().map_or(true, |m| dev > m.0) {
                mismatch = Some((
                    dev,
                    Witness::at(coords(&[arg]))
                        .with(&format!("printed_{name}"), printed.value)
                        .with(&format!("printed_{name}_converged"), f64::from(u8::from(printed.converged)))
                        .with(&format!("theorem_{name}"), theorem.value)
                        .with(&format!("theorem_{name}_converged"), f64::from(u8::from(theorem.converged))),
                ));
            }
        }
    }
    entries.push(match mismatch {
        None => AuditEntry::pass(format!("{prefix}.series_match"), 0.0)
            .with_notes(format!("printed Ψ, Φ equal the {} series with β = p = {p}", regime.as_str())),
        Some((dev, w)) => AuditEntry::new(format!("{prefix}.series_match"), Status::Flagged, -dev)
            .with_witness(w)
            .with_notes(format!(
                "printed Ψ, Φ differ from the {} series with β = p = {p}",
                regime.as_str()
            )),
    });

    // (min{a, b})^{1/p} = min{a^{1/p}, b^{1/p}} on the bound entries.
    let mut worst_gap: f64 = 0.0;
    for (x, z) in samples {
        if let Ok((a, b)) = direct_bound(&phi, p, regime, x, z)? {
            if a.is_finite() && b.is_finite() {
                let lhs = a.min(b).powf(1.0 / p);
                let rhs = a.powf(1.0 / p).min(b.powf(1.0 / p));
                worst_gap = worst_gap.max((lhs - rhs).abs() / lhs.abs().max(f64::MIN_POSITIVE));
            }
        }
    }
    entries.push(
        AuditEntry::new(format!("{prefix}.min_identity"), flag_unless(worst_gap <= CONSTANT_TOL), CONSTANT_TOL - worst_gap)
            .with_witness(Witness::at(Vec::new()).with("relative_gap", worst_gap))
            .with_notes("bound of the 1/p-th powers equals the 1/p-th power of the bound"),
    );

    let (x, z) = first_point.expect("nonempty samples");
    let ok = printed_hyp_ok && theorem_hyp_ok;
    entries.push(
        AuditEntry::new(format!("{prefix}.hypothesis"), flag_unless(ok), if ok { 0.0 } else { -1.0 })
            .with_witness(
                Witness::at(coords(&[x, z]))
                    .with("r", r)
                    .with("p", p)
                    .with("printed_hypothesis_converges", f64::from(u8::from(printed_hyp_ok)))
                    .with("theorem_hypothesis_converges", f64::from(u8::from(theorem_hyp_ok))),
            )
            .with_notes(format!("hypothesis series {hyp} as printed and as required, at r = {r}")),
    );
    Ok(entries)
}

/// Worst status across entries (by severity, refused above flagged).
pub fn worst_status(entries: &[AuditEntry]) -> Status {
    entries
        .iter()
        .map(|e| e.status)
        .max_by_key(|s| (s.severity(), *s))
        .unwrap_or(Status::Pass)
}

/// Pairwise agreement of the approximant from several routes on common
/// samples. Refused when any route is missing.
pub fn route_consistency(
    routes: &[(&str, Option<&[Vector]>)],
    y: &SpaceSpec,
    samples: &[(Vector, Vector)],
    tol: f64,
) -> Result<AuditEntry> {
    let id = "routes.consistency";
    let missing: Vec<&str> = routes.iter().filter(|r| r.1.is_none()).map(|r| r.0).collect();
    if !missing.is_empty() {
        return Ok(AuditEntry::refused(id, format!("missing route(s): {}", missing.join(", "))));
    }
    let vals: Vec<(&str, &[Vector])> = routes.iter().map(|(n, v)| (*n, v.unwrap())).collect();
    if vals.iter().any(|(_, v)| v.len() != samples.len()) {
        return Err(Error::input("route values do not match the sample count"));
    }
    let mut worst = (0.0f64, None);
    for i in 0..vals.len() {
        for j in i + 1..vals.len() {
            for (k, (a, b)) in vals[i].1.iter().zip(vals[j].1).enumerate() {
                let d = norm_eval(y, &(a - b))?;
                if d > worst.0 || worst.1.is_none() {
                    worst = (d, Some((i, j, k)));
                }
            }
        }
    }
    let names: Vec<&str> = vals.iter().map(|v| v.0).collect();
    let mut e = AuditEntry::verdict(id, worst.0 <= tol, tol - worst.0)
        .with_notes(format!("routes: {}", names.join(", ")));
    if let Some((i, j, k)) = worst.1 {
        let (x, z) = &samples[k];
        e.witness = Some(Witness::at(coords(&[x, z])).with("deviation", worst.0));
        e.notes.push_str(&format!("; worst pair {} vs {}", vals[i].0, vals[j].0));
    }
    Ok(e)
}
