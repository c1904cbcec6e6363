//! Bivariate mappings `f: X × X → Y`, the functional-equation defect and
//! admissibility of `f` against the product control `φ(x, y) φ(z, w)`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::control::{phi_eval, ControlFunction};
use crate::error::{Error, Result};
use crate::report::{AuditEntry, Witness};
use crate::spaces::{norm_eval, pow2, SpaceSpec, Vector};

pub type MapFn = Arc<dyn Fn(&Vector, &Vector) -> Vector + Send + Sync>;

/// The exactly structured part of a mapping.
#[derive(Clone)]
pub enum Core {
    Zero,
    /// `f(x, z) = (zᵀ Q z) · A x` with `A` of shape `dim Y × dim X` and `Q`
    /// of shape `dim X × dim X`.
    Separable { a: Vec<Vec<f64>>, q: Vec<Vec<f64>> },
    /// Arbitrary map; values on the axes are forced to zero.
    Custom(MapFn),
}

impl fmt::Debug for Core {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Core::Zero => f.write_str("Zero"),
            Core::Separable { a, q } => write!(f, "Separable {{ a: {a:?}, q: {q:?} }}"),
            Core::Custom(_) => f.write_str("Custom"),
        }
    }
}

/// Sign-preserving power `sign(t)|t|^a`, exactly zero at `t = 0`.
pub fn spow(t: f64, a: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t.signum() * t.abs().powf(a)
    }
}

/// Values on a rectangular grid containing the origin, bilinearly
/// interpolated. Values on both axes must be zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    xs: Vec<f64>,
    zs: Vec<f64>,
    values: Vec<f64>,
}

impl Table {
    /// `values` is row-major: `values[i * zs.len() + j]` belongs to `(xs[i], zs[j])`.
    pub fn new(xs: Vec<f64>, zs: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        for (name, axis) in [("x", &xs), ("z", &zs)] {
            if axis.len() < 2 || axis.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::input(format!(
                    "table {name} grid must have at least two strictly increasing values"
                )));
            }
            if !axis.contains(&0.0) {
                return Err(Error::input(format!("table {name} grid must contain 0")));
            }
        }
        if values.len() != xs.len() * zs.len() {
            return Err(Error::input(format!(
                "table has {} values for a {}x{} grid",
                values.len(),
                xs.len(),
                zs.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("table values must be finite"));
        }
        for (i, x) in xs.iter().enumerate() {
            for (j, z) in zs.iter().enumerate() {
                let v = values[i * zs.len() + j];
                if (*x == 0.0 || *z == 0.0) && v != 0.0 {
                    return Err(Error::input(format!(
                        "table value at ({x}, {z}) lies on an axis and must be 0, got {v}"
                    )));
                }
            }
        }
        Ok(Table { xs, zs, values })
    }

    /// Builds a table from `(x, z, value)` triples covering a full grid.
    pub fn from_points(points: &[(f64, f64, f64)]) -> Result<Self> {
        let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
        let mut zs: Vec<f64> = points.iter().map(|p| p.1).collect();
        for axis in [&mut xs, &mut zs] {
            axis.sort_by(f64::total_cmp);
            axis.dedup();
        }
        let mut values = vec![f64::NAN; xs.len() * zs.len()];
        for &(x, z, v) in points {
            let i = xs.binary_search_by(|a| a.total_cmp(&x)).unwrap_or(0);
            let j = zs.binary_search_by(|a| a.total_cmp(&z)).unwrap_or(0);
            let slot = &mut values[i * zs.len() + j];
            if !slot.is_nan() {
                return Err(Error::input(format!("duplicate table point ({x}, {z})")));
            }
            *slot = v;
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::input("table points do not cover a full grid"));
        }
        Table::new(xs, zs, values)
    }

    fn cell(axis: &[f64], t: f64) -> Option<(usize, f64)> {
        if t < axis[0] || t > axis[axis.len() - 1] {
            return None;
        }
        let i = axis.partition_point(|a| *a <= t).clamp(1, axis.len() - 1) - 1;
        let w = (t - axis[i]) / (axis[i + 1] - axis[i]);
        Some((i, w))
    }

    /// Interpolated value, `None` outside the grid.
    pub fn eval(&self, x: f64, z: f64) -> Option<f64> {
        let (i, u) = Self::cell(&self.xs, x)?;
        let (j, v) = Self::cell(&self.zs, z)?;
        let n = self.zs.len();
        let at = |a: usize, b: usize| self.values[a * n + b];
        let lo = if v == 0.0 { at(i, j) } else { (1.0 - v) * at(i, j) + v * at(i, j + 1) };
        if u == 0.0 {
            return Some(lo);
        }
        let hi = if v == 0.0 {
            at(i + 1, j)
        } else {
            (1.0 - v) * at(i + 1, j) + v * at(i + 1, j + 1)
        };
        Some((1.0 - u) * lo + u * hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PerturbationKind {
    /// `spow(x₁, a) · spow(z₁, b)`.
    PowerProduct { a: f64, b: f64 },
    /// `spow(x₁, a) · spow(z₁, b) · cos(freq · x₁ · z₁)`.
    Oscillatory { a: f64, b: f64, freq: f64 },
    Table(Arc<Table>),
}

/// `η · e(x₁, z₁)` placed on the first basis vector of `Y`, where `x₁`, `z₁`
/// are first coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub kind: PerturbationKind,
    pub eta: f64,
}

impl Perturbation {
    pub fn power_product(eta: f64, a: f64, b: f64) -> Self {
        Perturbation {
            kind: PerturbationKind::PowerProduct { a, b },
            eta,
        }
    }

    pub fn oscillatory(eta: f64, a: f64, b: f64, freq: f64) -> Self {
        Perturbation {
            kind: PerturbationKind::Oscillatory { a, b, freq },
            eta,
        }
    }

    pub fn table(eta: f64, table: Table) -> Self {
        Perturbation {
            kind: PerturbationKind::Table(Arc::new(table)),
            eta,
        }
    }

    fn validate(&self) -> Result<()> {
        if !self.eta.is_finite() {
            return Err(Error::input(format!("amplitude must be finite, got {}", self.eta)));
        }
        match self.kind {
            PerturbationKind::PowerProduct { a, b } | PerturbationKind::Oscillatory { a, b, .. } => {
                if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
                    return Err(Error::input(format!(
                        "perturbation exponents must be positive, got a={a}, b={b}"
                    )));
                }
            }
            PerturbationKind::Table(_) => {}
        }
        if let PerturbationKind::Oscillatory { freq, .. } = self.kind {
            if !freq.is_finite() {
                return Err(Error::input("oscillation frequency must be finite"));
            }
        }
        Ok(())
    }

    fn scalar(&self, x1: f64, z1: f64) -> Result<f64> {
        if self.eta == 0.0 {
            return Ok(0.0);
        }
        let shape = match &self.kind {
            PerturbationKind::PowerProduct { a, b } => spow(x1, *a) * spow(z1, *b),
            PerturbationKind::Oscillatory { a, b, freq } => {
                spow(x1, *a) * spow(z1, *b) * (freq * x1 * z1).cos()
            }
            PerturbationKind::Table(t) => t.eval(x1, z1).ok_or_else(|| Error::Numeric {
                what: "table perturbation queried outside its grid".into(),
                point: vec![vec![x1], vec![z1]],
            })?,
        };
        Ok(self.eta * shape)
    }
}

/// One lazy scaling step applied to a whole mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingOp {
    /// `g ↦ 2 g(x/2, z)`.
    HalveFirst,
    /// `g ↦ 4 g(x, z/2)`.
    HalveSecond,
    /// `g ↦ g(2x, z)/2`.
    DoubleFirst,
    /// `g ↦ g(x, 2z)/4`.
    DoubleSecond,
}

impl ScalingOp {
    /// `(output exponent, x exponent, z exponent)` of one application.
    fn exponents(self) -> (i32, i32, i32) {
        match self {
            ScalingOp::HalveFirst => (1, -1, 0),
            ScalingOp::HalveSecond => (2, 0, -1),
            ScalingOp::DoubleFirst => (-1, 1, 0),
            ScalingOp::DoubleSecond => (-2, 0, 1),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ScalingOp::HalveFirst => "halve_first",
            ScalingOp::HalveSecond => "halve_second",
            ScalingOp::DoubleFirst => "double_first",
            ScalingOp::DoubleSecond => "double_second",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Mapping {
    x_space: SpaceSpec,
    y_space: SpaceSpec,
    core: Core,
    perturbation: Option<Perturbation>,
    ops: Vec<(ScalingOp, u32)>,
}

impl Mapping {
    pub fn new(
        x_space: SpaceSpec,
        y_space: SpaceSpec,
        core: Core,
        perturbation: Option<Perturbation>,
    ) -> Result<Self> {
        if let Core::Separable { a, q } = &core {
            let (dx, dy) = (x_space.dimension(), y_space.dimension());
            if a.len() != dy || a.iter().any(|row| row.len() != dx) {
                return Err(Error::input(format!("linear part must be {dy}x{dx}")));
            }
            if q.len() != dx || q.iter().any(|row| row.len() != dx) {
                return Err(Error::input(format!("quadratic form must be {dx}x{dx}")));
            }
            if a.iter().chain(q).flatten().any(|c| !c.is_finite()) {
                return Err(Error::input("separable core coefficients must be finite"));
            }
        }
        if let Some(p) = &perturbation {
            p.validate()?;
        }
        Ok(Mapping {
            x_space,
            y_space,
            core,
            perturbation,
            ops: Vec::new(),
        })
    }

    pub fn zero(x_space: SpaceSpec, y_space: SpaceSpec) -> Self {
        Mapping {
            x_space,
            y_space,
            core: Core::Zero,
            perturbation: None,
            ops: Vec::new(),
        }
    }

    /// `f(x, z) = c · x₁ · z₁²` on the first output coordinate.
    pub fn linear_times_square(x_space: SpaceSpec, y_space: SpaceSpec, c: f64) -> Result<Self> {
        let (dx, dy) = (x_space.dimension(), y_space.dimension());
        let mut a = vec![vec![0.0; dx]; dy];
        a[0][0] = c;
        let mut q = vec![vec![0.0; dx]; dx];
        q[0][0] = 1.0;
        Mapping::new(x_space, y_space, Core::Separable { a, q }, None)
    }

    pub fn custom(x_space: SpaceSpec, y_space: SpaceSpec, eval: MapFn) -> Self {
        Mapping {
            x_space,
            y_space,
            core: Core::Custom(eval),
            perturbation: None,
            ops: Vec::new(),
        }
    }

    pub fn x_space(&self) -> &SpaceSpec {
        &self.x_space
    }

    pub fn y_space(&self) -> &SpaceSpec {
        &self.y_space
    }

    pub fn core(&self) -> &Core {
        &self.core
    }

    pub fn perturbation(&self) -> Option<&Perturbation> {
        self.perturbation.as_ref()
    }

    pub fn eta(&self) -> Option<f64> {
        self.perturbation.as_ref().map(|p| p.eta)
    }

    pub fn with_eta(&self, eta: f64) -> Result<Self> {
        let mut out = self.clone();
        match &mut out.perturbation {
            Some(p) => p.eta = eta,
            None => return Err(Error::input("mapping has no perturbation to rescale")),
        }
        out.perturbation.as_ref().unwrap().validate()?;
        Ok(out)
    }

    pub fn without_perturbation(&self) -> Self {
        Mapping {
            perturbation: None,
            ..self.clone()
        }
    }

    pub fn perturbation_only(&self) -> Self {
        Mapping {
            core: Core::Zero,
            ..self.clone()
        }
    }

    /// True when the mapping is identically zero by construction.
    pub fn is_zero_map(&self) -> bool {
        matches!(self.core, Core::Zero)
            && self.perturbation.as_ref().map_or(true, |p| p.eta == 0.0)
    }

    /// The mapping `op^n(self)`, composed lazily.
    pub fn scaled(&self, op: ScalingOp, n: u32) -> Self {
        let mut out = self.clone();
        if n == 0 {
            return out;
        }
        match out.ops.last_mut() {
            Some((last, k)) if *last == op => *k += n,
            _ => out.ops.push((op, n)),
        }
        out
    }

    pub fn scaling_stack(&self) -> &[(ScalingOp, u32)] {
        &self.ops
    }

    fn eval_base(&self, x: &Vector, z: &Vector) -> Result<Vector> {
        let dy = self.y_space.dimension();
        if x.is_zero() || z.is_zero() {
            return Ok(Vector::zeros(dy));
        }
        let mut out = match &self.core {
            Core::Zero => vec![0.0; dy],
            Core::Separable { a, q } => {
                let zc = z.coords();
                let qz: f64 = q
                    .iter()
                    .zip(zc)
                    .map(|(row, zi)| zi * row.iter().zip(zc).map(|(c, zj)| c * zj).sum::<f64>())
                    .sum();
                a.iter()
                    .map(|row| qz * row.iter().zip(x.coords()).map(|(c, xi)| c * xi).sum::<f64>())
                    .collect()
            }
            Core::Custom(g) => {
                let v = g(x, z);
                if v.dim() != dy {
                    return Err(Error::DimensionMismatch {
                        expected: dy,
                        got: v.dim(),
                    });
                }
                v.into_coords()
            }
        };
        if let Some(p) = &self.perturbation {
            out[0] += p.scalar(x.first(), z.first())?;
        }
        Ok(Vector::from_raw(out))
    }

    pub fn eval(&self, x: &Vector, z: &Vector) -> Result<Vector> {
        self.x_space.check_dim(x)?;
        self.x_space.check_dim(z)?;
        let (mut out_e, mut x_e, mut z_e) = (0i64, 0i64, 0i64);
        for (op, n) in &self.ops {
            let (o, a, b) = op.exponents();
            let n = i64::from(*n);
            out_e += i64::from(o) * n;
            x_e += i64::from(a) * n;
            z_e += i64::from(b) * n;
        }
        let p2 = |e: i64| pow2(e.clamp(-2000, 2000) as i32);
        let (xs, zs) = if x_e == 0 && z_e == 0 {
            (x.clone(), z.clone())
        } else {
            (x.scale(p2(x_e)), z.scale(p2(z_e)))
        };
        let numeric = |what: &str| Error::Numeric {
            what: what.into(),
            point: vec![x.coords().to_vec(), z.coords().to_vec()],
        };
        if !xs.is_finite() || !zs.is_finite() {
            return Err(numeric("scaled argument overflowed"));
        }
        let base = self.eval_base(&xs, &zs)?;
        let v = if out_e == 0 { base } else { base.scale(p2(out_e)) };
        if !v.is_finite() {
            return Err(numeric("mapping value is not finite"));
        }
        Ok(v)
    }
}

pub fn eval_f(f: &Mapping, x: &Vector, z: &Vector) -> Result<Vector> {
    f.eval(x, z)
}

/// `(f(x+y, z+w) + f(x−y, z−w)) − 2 (f(x, z) + f(x, w))`.
///
/// This grouping makes `defect(x, 0, z, z) = ‖f(x, 2z) − 4 f(x, z)‖` and
/// `defect(x, x, z, 0) = ‖f(2x, z) − 2 f(x, z)‖` hold bit for bit.
pub fn defect_vector(f: &Mapping, x: &Vector, y: &Vector, z: &Vector, w: &Vector) -> Result<Vector> {
    for v in [x, y, z, w] {
        f.x_space.check_dim(v)?;
    }
    let a = f.eval(&(x + y), &(z + w))?;
    let b = f.eval(&(x - y), &(z - w))?;
    let c = f.eval(x, z)?;
    let d = f.eval(x, w)?;
    Ok(&(&a + &b) - &(&c + &d).scale(2.0))
}

pub fn defect(f: &Mapping, x: &Vector, y: &Vector, z: &Vector, w: &Vector) -> Result<f64> {
    norm_eval(&f.y_space, &defect_vector(f, x, y, z, w)?)
}

/// A sample `(x, y, z, w)` of the defect inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct DefectSample {
    pub point: [Vector; 4],
    pub defect_norm: f64,
    pub bound: f64,
    pub slack: f64,
}

pub type Tuple = [Vector; 4];

pub fn defect_sample(f: &Mapping, phi: &ControlFunction, t: &Tuple) -> Result<DefectSample> {
    let [x, y, z, w] = t;
    let defect_norm = defect(f, x, y, z, w)?;
    let bound = phi_eval(phi, x, y)? * phi_eval(phi, z, w)?;
    Ok(DefectSample {
        point: t.clone(),
        defect_norm,
        bound,
        slack: bound - defect_norm,
    })
}

fn tuple_coords(t: &Tuple) -> Vec<Vec<f64>> {
    t.iter().map(|v| v.coords().to_vec()).collect()
}

/// Checks `defect(x, y, z, w) ≤ φ(x, y) φ(z, w)` on every sample tuple and
/// reports the minimum slack with its tuple.
pub fn admissibility_check(f: &Mapping, phi: &ControlFunction, samples: &[Tuple]) -> Result<AuditEntry> {
    if samples.is_empty() {
        return Err(Error::input("admissibility check needs at least one sample tuple"));
    }
    let mut worst: Option<DefectSample> = None;
    for t in samples {
        let s = defect_sample(f, phi, t)?;
        if worst.as_ref().map_or(true, |w| s.slack < w.slack) {
            worst = Some(s);
        }
    }
    let w = worst.expect("nonempty samples");
    let witness = Witness::at(tuple_coords(&w.point))
        .with("defect", w.defect_norm)
        .with("bound", w.bound)
        .with("slack", w.slack);
    Ok(AuditEntry::verdict("mapping.admissibility", w.slack >= 0.0, w.slack)
        .with_witness(witness)
        .with_notes(format!("sampled on {} tuple(s)", samples.len())))
}

const CALIBRATION_CAP_LOG2: i32 = 64;
const BISECTION_STEPS: usize = 200;

/// Rescales the perturbation amplitude by the largest factor `s` for which
/// the defect inequality holds on every sample tuple.
///
/// The defect is affine in `s`, so the admissible factors form an interval
/// containing 0 once the core alone is admissible. The search doubles from
/// `s = 1` (capped at `2^64`), bisects, and finally re-verifies the rescaled
/// mapping end to end.
pub fn calibrate_amplitude(template: &Mapping, phi: &ControlFunction, samples: &[Tuple]) -> Result<Mapping> {
    let eta = template
        .eta()
        .filter(|e| *e != 0.0)
        .ok_or_else(|| Error::input("calibration needs a template with a nonzero perturbation"))?;
    if samples.is_empty() {
        return Err(Error::input("calibration needs at least one sample tuple"));
    }
    let core = template.without_perturbation();
    let pert = template.perturbation_only();
    let mut pre = Vec::with_capacity(samples.len());
    for t in samples {
        let [x, y, z, w] = t;
        let dc = defect_vector(&core, x, y, z, w)?;
        let bound = phi_eval(phi, x, y)? * phi_eval(phi, z, w)?;
        let core_defect = norm_eval(template.y_space(), &dc)?;
        if core_defect > bound {
            return Err(Error::Calibration {
                reason: format!(
                    "core alone violates the defect inequality: defect {core_defect} > bound {bound}"
                ),
                witness: tuple_coords(t),
            });
        }
        pre.push((dc, defect_vector(&pert, x, y, z, w)?, bound));
    }
    let y_space = template.y_space().clone();
    let passes = |s: f64| -> Result<bool> {
        for (dc, dp, bound) in &pre {
            if norm_eval(&y_space, &(dc + &dp.scale(s)))? > *bound {
                return Ok(false);
            }
        }
        Ok(true)
    };

    let cap = pow2(CALIBRATION_CAP_LOG2);
    let template_ok = passes(1.0)?;
    let (mut lo, mut hi) = if template_ok { (1.0, 2.0) } else { (0.0, 1.0) };
    if template_ok {
        while hi <= cap && passes(hi)? {
            lo = hi;
            hi *= 2.0;
        }
    }
    if lo < cap {
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if passes(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    if lo == 0.0 {
        let worst = samples
            .iter()
            .zip(&pre)
            .map(|(t, (dc, dp, b))| {
                let d = norm_eval(&y_space, &(dc + &dp.scale(f64::MIN_POSITIVE)))?;
                Ok((t, b - d))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(t, _)| tuple_coords(t))
            .unwrap_or_default();
        return Err(Error::Calibration {
            reason: "no positive amplitude satisfies the defect inequality".into(),
            witness: worst,
        });
    }

    let mut s = lo;
    for _ in 0..1000 {
        let candidate = template.with_eta(eta * s)?;
        if admissibility_check(&candidate, phi, samples)?.is_pass() {
            return Ok(candidate);
        }
        let next = s * (1.0 - 1e-9);
        s = if template_ok && next < 1.0 { 1.0 } else { next };
    }
    Err(Error::Calibration {
        reason: "rescaled mapping failed end-to-end re-verification".into(),
        witness: Vec::new(),
    })
}
