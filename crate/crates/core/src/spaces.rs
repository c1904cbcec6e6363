//! Finite-dimensional model spaces.
//!
//! A [`SpaceSpec`] pairs a coordinate dimension with a norm law:
//!
//! * `beta_homogeneous`: `‖v‖ = M(v)^β` where `M` is a 1-homogeneous base
//!   magnitude (Euclidean by default). This is an F-norm with
//!   `‖t v‖ = |t|^β ‖v‖` for every real `t`.
//! * `quasi`: the `ℓ_q` quasi-norm `(Σ|v_i|^q)^{1/q}` with
//!   `q = 1/(1 + log₂ C)`, whose quasi-norm constant in dimension ≥ 2 is
//!   exactly `C`.
//! * `p_norm`: the `ℓ_p` quasi-norm, which is `p`-subadditive.
//!
//! Scalars are real throughout.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::{AuditEntry, Witness};

/// Default relative tolerance for exact identities.
pub const IDENTITY_TOL: f64 = 1e-12;

/// Exact `2^k` for integer `k` in the normal range of `f64`.
pub fn pow2(k: i32) -> f64 {
    if (-1022..=1023).contains(&k) {
        f64::from_bits(((k + 1023) as u64) << 52)
    } else {
        2f64.powi(k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector(Vec<f64>);

impl Vector {
    /// Builds a vector, rejecting non-finite coordinates.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some(c) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::input(format!("non-finite coordinate {c}")));
        }
        Ok(Vector(coords))
    }

    pub fn scalar(v: f64) -> Self {
        Vector(vec![v])
    }

    pub fn zeros(dim: usize) -> Self {
        Vector(vec![0.0; dim])
    }

    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        Vector(v)
    }

    pub(crate) fn from_raw(coords: Vec<f64>) -> Self {
        Vector(coords)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn scale(&self, t: f64) -> Vector {
        Vector(self.0.iter().map(|c| c * t).collect())
    }

    pub fn first(&self) -> f64 {
        self.0.first().copied().unwrap_or(0.0)
    }
}

impl fmt::Display for Vector {
    /// Coordinates in shortest round-trip form, joined by `;`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl Add for &Vector {
    type Output = Vector;
    fn add(self, rhs: &Vector) -> Vector {
        debug_assert_eq!(self.dim(), rhs.dim());
        Vector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &Vector {
    type Output = Vector;
    fn sub(self, rhs: &Vector) -> Vector {
        debug_assert_eq!(self.dim(), rhs.dim());
        Vector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        Vector(self.0.iter().map(|c| -c).collect())
    }
}

/// 1-homogeneous magnitude underlying a β-homogeneous norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Magnitude {
    Euclidean,
    /// `(Σ|v_i|^p)^{1/p}`.
    LpSum(f64),
}

impl Magnitude {
    fn eval(self, v: &[f64]) -> f64 {
        match self {
            _ if v.len() == 1 => v[0].abs(),
            Magnitude::Euclidean => rescaled(v, |w| w.iter().map(|c| c * c).sum::<f64>().sqrt()),
            Magnitude::LpSum(p) => lp_quasi(v, p),
        }
    }
}

/// Evaluates a 1-homogeneous `m` directly, falling back to `s·m(v/s)` with
/// `s = max|v_i|` when the direct sum overflows or underflows.
fn rescaled(v: &[f64], m: impl Fn(&[f64]) -> f64) -> f64 {
    let direct = m(v);
    let s = v.iter().fold(0.0f64, |a, c| a.max(c.abs()));
    if s == 0.0 || !s.is_finite() || (direct.is_finite() && direct > 0.0 && direct >= f64::MIN_POSITIVE.sqrt()) {
        return direct;
    }
    let w: Vec<f64> = v.iter().map(|c| c / s).collect();
    s * m(&w)
}

fn lp_quasi(v: &[f64], p: f64) -> f64 {
    if v.len() == 1 {
        return v[0].abs();
    }
    if p == 1.0 {
        return v.iter().map(|c| c.abs()).sum();
    }
    rescaled(v, |w| w.iter().map(|c| c.abs().powf(p)).sum::<f64>().powf(1.0 / p))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormLaw {
    BetaHomogeneous { beta: f64, base: Magnitude },
    Quasi { c: f64 },
    PNorm { p: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    BetaHomogeneous,
    Quasi,
    PNorm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceRepr", into = "SpaceRepr")]
pub struct SpaceSpec {
    dimension: usize,
    law: NormLaw,
}

/// JSON shape of a space: `dimension`, `kind`, `beta`, `C`, `p`, and an
/// optional `base_p` selecting an `ℓ_p` base magnitude for β-homogeneous laws.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceRepr {
    dimension: usize,
    kind: NormKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    base_p: Option<f64>,
}

impl TryFrom<SpaceRepr> for SpaceSpec {
    type Error = Error;

    fn try_from(r: SpaceRepr) -> Result<Self> {
        let need = |v: Option<f64>, key: &str| {
            v.ok_or_else(|| Error::input(format!("space kind {:?} requires `{key}`", r.kind)))
        };
        match r.kind {
            NormKind::BetaHomogeneous => {
                let beta = need(r.beta, "beta")?;
                match r.base_p {
                    None => SpaceSpec::beta_homogeneous(r.dimension, beta),
                    Some(p) => {
                        check_exponent(p, "base_p")?;
                        SpaceSpec::new(
                            r.dimension,
                            NormLaw::BetaHomogeneous {
                                beta,
                                base: Magnitude::LpSum(p),
                            },
                        )
                    }
                }
            }
            NormKind::Quasi => SpaceSpec::quasi(r.dimension, need(r.c, "C")?),
            NormKind::PNorm => SpaceSpec::p_norm(r.dimension, need(r.p, "p")?),
        }
    }
}

impl From<SpaceSpec> for SpaceRepr {
    fn from(s: SpaceSpec) -> Self {
        let mut r = SpaceRepr {
            dimension: s.dimension,
            kind: s.kind(),
            beta: None,
            c: None,
            p: None,
            base_p: None,
        };
        match s.law {
            NormLaw::BetaHomogeneous { beta, base } => {
                r.beta = Some(beta);
                if let Magnitude::LpSum(p) = base {
                    r.base_p = Some(p);
                }
            }
            NormLaw::Quasi { c } => r.c = Some(c),
            NormLaw::PNorm { p } => r.p = Some(p),
        }
        r
    }
}

fn check_exponent(v: f64, name: &str) -> Result<()> {
    if v.is_finite() && v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(Error::input(format!("{name} must lie in (0, 1], got {v}")))
    }
}

impl SpaceSpec {
    pub fn new(dimension: usize, law: NormLaw) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::input("dimension must be positive"));
        }
        match law {
            NormLaw::BetaHomogeneous { beta, .. } => check_exponent(beta, "beta")?,
            NormLaw::Quasi { c } => {
                if !(c.is_finite() && c >= 1.0) {
                    return Err(Error::input(format!("quasi-norm constant must be >= 1, got {c}")));
                }
            }
            NormLaw::PNorm { p } => check_exponent(p, "p")?,
        }
        Ok(SpaceSpec { dimension, law })
    }

    /// `‖v‖ = |v|_2^β`.
    pub fn beta_homogeneous(dimension: usize, beta: f64) -> Result<Self> {
        Self::new(
            dimension,
            NormLaw::BetaHomogeneous {
                beta,
                base: Magnitude::Euclidean,
            },
        )
    }

    pub fn quasi(dimension: usize, c: f64) -> Result<Self> {
        Self::new(dimension, NormLaw::Quasi { c })
    }

    pub fn p_norm(dimension: usize, p: f64) -> Result<Self> {
        Self::new(dimension, NormLaw::PNorm { p })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn law(&self) -> NormLaw {
        self.law
    }

    pub fn kind(&self) -> NormKind {
        match self.law {
            NormLaw::BetaHomogeneous { .. } => NormKind::BetaHomogeneous,
            NormLaw::Quasi { .. } => NormKind::Quasi,
            NormLaw::PNorm { .. } => NormKind::PNorm,
        }
    }

    /// Homogeneity degree of the norm: β for β-homogeneous laws, 1 otherwise.
    pub fn homogeneity(&self) -> f64 {
        match self.law {
            NormLaw::BetaHomogeneous { beta, .. } => beta,
            _ => 1.0,
        }
    }

    /// β of a β-homogeneous space, or a contract error.
    pub fn beta(&self) -> Result<f64> {
        match self.law {
            NormLaw::BetaHomogeneous { beta, .. } => Ok(beta),
            _ => Err(Error::contract(format!(
                "expected a beta_homogeneous space, got {:?}",
                self.kind()
            ))),
        }
    }

    pub fn check_dim(&self, v: &Vector) -> Result<()> {
        if v.dim() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: v.dim(),
            });
        }
        Ok(())
    }

    pub fn norm(&self, v: &Vector) -> Result<f64> {
        norm_eval(self, v)
    }
}

/// Norm of `v` under the space's law.
pub fn norm_eval(space: &SpaceSpec, v: &Vector) -> Result<f64> {
    space.check_dim(v)?;
    if !v.is_finite() {
        return Err(Error::Numeric {
            what: "norm argument".into(),
            point: vec![v.coords().to_vec()],
        });
    }
    let c = v.coords();
    Ok(match space.law {
        NormLaw::BetaHomogeneous { beta, base } => {
            let m = base.eval(c);
            if beta == 1.0 {
                m
            } else {
                m.powf(beta)
            }
        }
        NormLaw::Quasi { c: k } => lp_quasi(c, aoki_rolewicz_exponent(k)?),
        NormLaw::PNorm { p } => lp_quasi(c, p),
    })
}

/// `p = 1/(1 + log₂ C)`: the exponent of an equivalent `p`-norm for a
/// quasi-norm with constant `C`.
pub fn aoki_rolewicz_exponent(c: f64) -> Result<f64> {
    if !(c.is_finite() && c >= 1.0) {
        return Err(Error::input(format!("quasi-norm constant must be >= 1, got {c}")));
    }
    Ok(1.0 / (1.0 + c.log2()))
}

/// The F-norm `‖·‖^p` induced by a `p`-norm space, as a β-homogeneous space
/// with `β = p`.
pub fn induce_fnorm_from_pnorm(space: &SpaceSpec) -> Result<SpaceSpec> {
    match space.law {
        NormLaw::PNorm { p } => SpaceSpec::new(
            space.dimension,
            NormLaw::BetaHomogeneous {
                beta: p,
                base: Magnitude::LpSum(p),
            },
        ),
        _ => Err(Error::contract(format!(
            "induce_fnorm_from_pnorm needs a p_norm space, got {:?}",
            space.kind()
        ))),
    }
}

/// Sup over ordered sample pairs of `‖x+y‖ / (‖x‖+‖y‖)`: a lower estimate
/// of the quasi-norm constant.
pub fn quasi_constant_estimate(space: &SpaceSpec, samples: &[Vector]) -> Result<f64> {
    let norms = samples
        .iter()
        .map(|v| norm_eval(space, v))
        .collect::<Result<Vec<_>>>()?;
    let mut best: Option<f64> = None;
    for (i, x) in samples.iter().enumerate() {
        for (j, y) in samples.iter().enumerate() {
            let denom = norms[i] + norms[j];
            if denom <= 0.0 {
                continue;
            }
            let ratio = norm_eval(space, &(x + y))? / denom;
            best = Some(best.map_or(ratio, |b: f64| b.max(ratio)));
        }
    }
    best.ok_or_else(|| Error::input("no sample pair with positive norm sum"))
}

/// Scalars used for the fixed-scalar half of the continuity axioms.
const FIXED_SCALARS: [f64; 3] = [-2.0, 0.5, 3.0];

/// Empirical check of the six F-norm axioms.
///
/// Axioms (1)-(3) are tested on the samples (and all ordered pairs of them).
/// Axioms (4)-(6) are limit statements; for every provided null sequence
/// `λ_n` they are tested on the finite prefix with a decreasing-trend rule:
/// the last value must be below `1e-3` times the first.
pub fn check_fnorm_axioms(
    space: &SpaceSpec,
    samples: &[Vector],
    scalar_sequences: &[Vec<f64>],
    tol: f64,
) -> Result<Vec<AuditEntry>> {
    if samples.is_empty() {
        return Err(Error::input("check_fnorm_axioms needs at least one sample"));
    }
    let norms = samples
        .iter()
        .map(|v| norm_eval(space, v))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(6);

    // (1) ‖x‖ = 0 iff x = 0
    let mut worst = 0.0f64;
    let mut wit = None;
    for (v, &n) in samples.iter().zip(&norms) {
        let bad = if v.is_zero() { n } else if n > 0.0 { 0.0 } else { 1.0 };
        if bad > worst {
            worst = bad;
            wit = Some(Witness::at(vec![v.coords().to_vec()]).with("norm", n));
        }
    }
    out.push(entry("axiom.1.definiteness", worst, tol, wit));

    // (2) ‖-x‖ = ‖x‖ (real unimodular scalars)
    let mut worst = 0.0f64;
    let mut wit = None;
    for (v, &n) in samples.iter().zip(&norms) {
        let m = norm_eval(space, &-v)?;
        let d = (m - n).abs() / (1.0 + n);
        if d > worst {
            worst = d;
            wit = Some(Witness::at(vec![v.coords().to_vec()]).with("norm", n).with("norm_neg", m));
        }
    }
    out.push(entry("axiom.2.symmetry", worst, tol, wit));

    // (3) triangle inequality
    let mut worst = 0.0f64;
    let mut wit = None;
    for (i, x) in samples.iter().enumerate() {
        for (j, y) in samples.iter().enumerate() {
            let s = norm_eval(space, &(x + y))?;
            let d = (s - norms[i] - norms[j]) / (1.0 + norms[i] + norms[j]);
            if d > worst {
                worst = d;
                wit = Some(
                    Witness::at(vec![x.coords().to_vec(), y.coords().to_vec()])
                        .with("norm_sum", s)
                        .with("norm_x", norms[i])
                        .with("norm_y", norms[j]),
                );
            }
        }
    }
    out.push(entry("axiom.3.triangle", worst, tol, wit));

    // (4)-(6): trend tests on null sequences
    let trend = |values: &[f64]| -> bool {
        match (values.first(), values.last()) {
            (Some(&a), Some(&b)) => (a == 0.0 && b == 0.0) || b < a * 1e-3,
            _ => true,
        }
    };
    let mut fails = [0usize; 3];
    let mut wits: [Option<Witness>; 3] = [None, None, None];
    for seq in scalar_sequences {
        if seq.len() < 2 {
            continue;
        }
        for (v, &n) in samples.iter().zip(&norms) {
            if n == 0.0 {
                continue;
            }
            let a4 = seq
                .iter()
                .map(|&l| norm_eval(space, &v.scale(l)))
                .collect::<Result<Vec<_>>>()?;
            record_trend(&mut fails[0], &mut wits[0], trend(&a4), v, &a4);
            for &lam in &FIXED_SCALARS {
                let a5 = seq
                    .iter()
                    .map(|&l| norm_eval(space, &v.scale(l).scale(lam)))
                    .collect::<Result<Vec<_>>>()?;
                record_trend(&mut fails[1], &mut wits[1], trend(&a5), v, &a5);
            }
            let a6 = seq
                .iter()
                .map(|&l| norm_eval(space, &v.scale(l).scale(l)))
                .collect::<Result<Vec<_>>>()?;
            record_trend(&mut fails[2], &mut wits[2], trend(&a6), v, &a6);
        }
    }
    let names = [
        "axiom.4.null_scalars",
        "axiom.5.null_vectors",
        "axiom.6.joint_null",
    ];
    for ((name, f), w) in names.iter().zip(fails).zip(wits) {
        let mut e = AuditEntry::verdict(*name, f == 0, -(f as f64)).with_notes(format!(
            "{} sequence(s) checked on finite prefixes; trend rule last < 1e-3 * first",
            scalar_sequences.len()
        ));
        if f == 0 {
            e.margin = 0.0;
        }
        if let Some(w) = w {
            e = e.with_witness(w);
        }
        out.push(e);
    }
    Ok(out)
}

fn record_trend(count: &mut usize, wit: &mut Option<Witness>, ok: bool, v: &Vector, vals: &[f64]) {
    if !ok {
        *count += 1;
        if wit.is_none() {
            *wit = Some(
                Witness::at(vec![v.coords().to_vec()])
                    .with("first", vals[0])
                    .with("last", vals[vals.len() - 1]),
            );
        }
    }
}

fn entry(id: &str, worst: f64, tol: f64, wit: Option<Witness>) -> AuditEntry {
    let e = AuditEntry::verdict(id, worst <= tol, tol - worst);
    match wit {
        Some(w) => e.with_witness(w),
        None => e,
    }
}

/// Max over samples × scalars of `|‖t v‖ − |t|^β ‖v‖|`, passing when every
/// deviation is within `tol · (1 + ‖v‖)`.
pub fn check_beta_homogeneity(
    space: &SpaceSpec,
    samples: &[Vector],
    scalars: &[f64],
    tol: f64,
) -> Result<AuditEntry> {
    let beta = space.beta()?;
    let mut worst_dev = 0.0f64;
    let mut worst_scaled = 0.0f64;
    let mut wit = None;
    for v in samples {
        let n = norm_eval(space, v)?;
        for &t in scalars {
            let lhs = norm_eval(space, &v.scale(t))?;
            let rhs = t.abs().powf(beta) * n;
            let dev = (lhs - rhs).abs();
            let scaled = dev / (1.0 + n);
            if scaled > worst_scaled || wit.is_none() {
                worst_scaled = scaled.max(worst_scaled);
                worst_dev = dev;
                wit = Some(
                    Witness::at(vec![v.coords().to_vec()])
                        .with("t", t)
                        .with("norm_tv", lhs)
                        .with("scaled_norm", rhs)
                        .with("deviation", dev),
                );
            }
        }
    }
    let mut e = AuditEntry::verdict("space.beta_homogeneity", worst_scaled <= tol, tol - worst_scaled)
        .with_notes(format!("max deviation {worst_dev}"));
    if let Some(w) = wit {
        e = e.with_witness(w);
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: f64) -> Vector {
        Vector::scalar(v)
    }

    #[test]
    fn norm_eval_examples() {
        let b1 = SpaceSpec::beta_homogeneous(1, 1.0).unwrap();
        let b05 = SpaceSpec::beta_homogeneous(1, 0.5).unwrap();
        assert_eq!(norm_eval(&b1, &s(0.0)).unwrap(), 0.0);
        assert_eq!(norm_eval(&b05, &s(4.0)).unwrap(), 2.0);
        assert_eq!(norm_eval(&b1, &s(-3.0)).unwrap(), 3.0);
    }

    #[test]
    fn magnitudes_survive_extreme_scales() {
        let big = [2f64.powi(900), 2f64.powi(900)];
        assert_eq!(Magnitude::Euclidean.eval(&big), 2f64.powi(900) * 2f64.sqrt());
        assert_eq!(Magnitude::LpSum(0.5).eval(&big), 2f64.powi(902));
        let tiny = [2f64.powi(-1000), 0.0];
        assert_eq!(Magnitude::Euclidean.eval(&tiny), 2f64.powi(-1000));
    }

    #[test]
    fn norm_eval_errors() {
        let b1 = SpaceSpec::beta_homogeneous(2, 1.0).unwrap();
        assert!(matches!(
            norm_eval(&b1, &s(1.0)),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
        assert!(Vector::new(vec![f64::NAN]).is_err());
        let bad = Vector::from_raw(vec![f64::INFINITY, 0.0]);
        assert!(norm_eval(&b1, &bad).unwrap_err().is_numeric());
    }

    #[test]
    fn parameter_validation() {
        assert!(SpaceSpec::beta_homogeneous(1, 0.0).is_err());
        assert!(SpaceSpec::beta_homogeneous(1, 1.5).is_err());
        assert!(SpaceSpec::quasi(1, 0.5).is_err());
        assert!(SpaceSpec::p_norm(1, 0.0).is_err());
        assert!(SpaceSpec::beta_homogeneous(0, 1.0).is_err());
    }

    #[test]
    fn axioms_pass_for_absolute_value() {
        let b1 = SpaceSpec::beta_homogeneous(1, 1.0).unwrap();
        let samples: Vec<_> = [-2.0, -0.75, 0.0, 0.5, 1.0, 3.25].iter().map(|&v| s(v)).collect();
        let seqs = vec![(0..40).map(|n| pow2(-n)).collect::<Vec<_>>()];
        let entries = check_fnorm_axioms(&b1, &samples, &seqs, 1e-12).unwrap();
        assert_eq!(entries.len(), 6);
        for e in &entries {
            assert!(e.is_pass(), "{e:?}");
        }
        let tri = entries.iter().find(|e| e.check_id == "axiom.3.triangle").unwrap();
        assert!(tri.margin >= 1e-12 - 1e-15);
    }

    #[test]
    fn quasi_space_fails_triangle_with_witness() {
        // ℓ_{1/2} quasi-norm: ‖e1 + e2‖ = 4 > ‖e1‖ + ‖e2‖ = 2
        let q = SpaceSpec::quasi(2, 2.0).unwrap();
        let samples = vec![Vector::basis(2, 0), Vector::basis(2, 1)];
        let entries = check_fnorm_axioms(&q, &samples, &[], 1e-12).unwrap();
        let tri = entries.iter().find(|e| e.check_id == "axiom.3.triangle").unwrap();
        assert!(!tri.is_pass());
        let w = tri.witness.as_ref().unwrap();
        assert_eq!(w.value("norm_sum"), Some(4.0));
        assert_eq!(w.point, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn half_homogeneous_triangle_on_squares() {
        let b = SpaceSpec::beta_homogeneous(1, 0.5).unwrap();
        let samples = vec![s(1.0), s(4.0), s(9.0)];
        let entries = check_fnorm_axioms(&b, &samples, &[], 1e-12).unwrap();
        assert!(entries[2].is_pass());
    }

    #[test]
    fn short_sequence_fails_trend_rule() {
        let b = SpaceSpec::beta_homogeneous(1, 1.0).unwrap();
        let seqs = vec![vec![1.0, 0.5, 0.25]];
        let entries = check_fnorm_axioms(&b, &[s(1.0)], &seqs, 1e-12).unwrap();
        assert!(!entries[3].is_pass());
        assert!(entries[3].witness.is_some());
    }

    #[test]
    fn beta_homogeneity_examples() {
        let b1 = SpaceSpec::beta_homogeneous(1, 1.0).unwrap();
        let e = check_beta_homogeneity(&b1, &[s(2.0)], &[3.0], 1e-12).unwrap();
        assert!(e.is_pass());
        assert_eq!(e.witness.unwrap().value("deviation"), Some(0.0));

        let b05 = SpaceSpec::beta_homogeneous(1, 0.5).unwrap();
        let e = check_beta_homogeneity(&b05, &[s(1.0)], &[4.0, 0.0], 1e-12).unwrap();
        assert!(e.is_pass());

        let q = SpaceSpec::quasi(1, 2.0).unwrap();
        assert!(matches!(
            check_beta_homogeneity(&q, &[s(1.0)], &[2.0], 1e-12),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn quasi_constant_examples() {
        let b1 = SpaceSpec::beta_homogeneous(1, 1.0).unwrap();
        let samples: Vec<_> = [-1.0, 0.5, 2.0].iter().map(|&v| s(v)).collect();
        assert!(quasi_constant_estimate(&b1, &samples).unwrap() <= 1.0);

        let b05 = SpaceSpec::beta_homogeneous(1, 0.5).unwrap();
        let est = quasi_constant_estimate(&b05, &[s(1.0)]).unwrap();
        assert!((est - 2f64.sqrt() / 2.0).abs() < 1e-15);

        let l_half = SpaceSpec::p_norm(2, 0.5).unwrap();
        let est = quasi_constant_estimate(&l_half, &[Vector::basis(2, 0), Vector::basis(2, 1)]).unwrap();
        assert_eq!(est, 2.0);
        assert_eq!(est, 2f64.powf(1.0 / 0.5 - 1.0));

        assert!(quasi_constant_estimate(&b1, &[s(0.0)]).is_err());
        assert!(quasi_constant_estimate(&b1, &[]).is_err());
    }

    #[test]
    fn aoki_rolewicz_examples() {
        assert_eq!(aoki_rolewicz_exponent(1.0).unwrap(), 1.0);
        assert_eq!(aoki_rolewicz_exponent(2.0).unwrap(), 0.5);
        assert!((aoki_rolewicz_exponent(4.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(aoki_rolewicz_exponent(0.9).is_err());
    }

    #[test]
    fn quasi_law_reaches_its_constant() {
        for c in [1.5, 2.0, 4.0] {
            let q = SpaceSpec::quasi(2, c).unwrap();
            let est = quasi_constant_estimate(&q, &[Vector::basis(2, 0), Vector::basis(2, 1)]).unwrap();
            assert!((est - c).abs() < 1e-12, "C={c}: {est}");
        }
    }

    #[test]
    fn induced_fnorm_examples() {
        let p1 = SpaceSpec::p_norm(1, 1.0).unwrap();
        let f1 = induce_fnorm_from_pnorm(&p1).unwrap();
        for v in [-2.0, 0.0, 0.75] {
            assert_eq!(norm_eval(&f1, &s(v)).unwrap(), norm_eval(&p1, &s(v)).unwrap());
        }

        let p = SpaceSpec::p_norm(1, 0.5).unwrap();
        let f = induce_fnorm_from_pnorm(&p).unwrap();
        assert_eq!(f.beta().unwrap(), 0.5);
        assert_eq!(norm_eval(&f, &s(4.0)).unwrap(), 2.0);
        assert!(check_beta_homogeneity(&f, &[s(1.0), s(3.0)], &[4.0, -0.25], 1e-12)
            .unwrap()
            .is_pass());
        let two = norm_eval(&f, &s(2.0)).unwrap();
        assert!(two <= 2.0 * norm_eval(&f, &s(1.0)).unwrap());

        let b = SpaceSpec::beta_homogeneous(1, 0.5).unwrap();
        assert!(matches!(induce_fnorm_from_pnorm(&b), Err(Error::Contract(_))));
    }

    #[test]
    fn json_keys_and_validation() {
        let q = SpaceSpec::quasi(2, 2.0).unwrap();
        let json = serde_json::to_string(&q).unwrap();
        assert_eq!(json, r#"{"dimension":2,"kind":"quasi","C":2.0}"#);
        let back: SpaceSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, q);
        assert!(serde_json::from_str::<SpaceSpec>(r#"{"dimension":1,"kind":"quasi"}"#).is_err());
        assert!(serde_json::from_str::<SpaceSpec>(
            r#"{"dimension":1,"kind":"p_norm","p":0.5,"extra":1}"#
        )
        .is_err());
    }
}
