//! Quasi-periodic cocycles `(α, A(·))` over circle rotations.
//!
//! A cocycle acts on `T × SU(2)` by `(x, g) ↦ (x + α, A(x) g)`. Generators are
//! SU(2)-valued; `period` is the period of their SO(3) projection, so an SU(2)
//! generator may flip sign after one period (the lift `E_{1/2}` does).

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::algebra::{
    cover_project, e_half, e_r, path_lift, su2_exp, su2_log, AlgebraError, GroupElement, HalfInt,
    HomotopyClass, Su2Vector,
};
use crate::fourier::{analyze_with_leakage, FourierMap, Su2Field, Symmetry};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CocycleError {
    #[error("period mismatch: {0} and {1} are not commensurable as declared")]
    PeriodMismatch(u32, u32),
    #[error("degree estimate under-resolved at n = {n}: {coarse} vs {fine} on doubled grid")]
    UnderResolved { n: i64, coarse: f64, fine: f64 },
    #[error("degree estimate needs n ≥ 1 and a grid of at least 8 points")]
    BadDegreeInput,
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("malformed cocycle: {0}")]
    Malformed(String),
}

/// Generators with an exact formula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum ClosedForm {
    /// `x ↦ g`.
    Constant { q: [f64; 4] },
    /// `x ↦ E_r(x)`, with `r = twice_r / 2`.
    Rotation { twice_r: i32 },
    /// `x ↦ A·E_{1/2}(x)`, the lift of `A·R_{2πx}`.
    Model,
    /// `x ↦ A·E_{1/2}(x)·exp({0, z})`.
    NormalForm { z: Complex64 },
    /// `x ↦ E_{1/2}(α)·exp({0, z̄})·exp({0, e^{2iπx} z})`.
    SecondIterate { alpha: f64, z: Complex64 },
    /// `x ↦ A·E_{1/2}(x + shift)·exp(U(x))`.
    Chart { shift: f64, u: Su2Field },
    /// `x ↦ exp(U(x))`.
    Exp { u: Su2Field },
}

impl ClosedForm {
    fn eval(&self, x: f64) -> GroupElement {
        match self {
            ClosedForm::Constant { q } => GroupElement::from_quaternion(*q),
            ClosedForm::Rotation { twice_r } => e_r(HalfInt(*twice_r), x),
            ClosedForm::Model => GroupElement::a() * e_half(x),
            ClosedForm::NormalForm { z } => {
                GroupElement::a() * e_half(x) * su2_exp(Su2Vector::off_diagonal(*z))
            }
            ClosedForm::SecondIterate { alpha, z } => {
                e_half(*alpha)
                    * su2_exp(Su2Vector::off_diagonal(z.conj()))
                    * su2_exp(Su2Vector::off_diagonal(
                        Complex64::from_polar(1.0, 2.0 * PI * x) * z,
                    ))
            }
            ClosedForm::Chart { shift, u } => {
                GroupElement::a() * e_half(x + shift) * su2_exp(u.eval(x))
            }
            ClosedForm::Exp { u } => su2_exp(u.eval(x)),
        }
    }
}

/// Band-limited generator stored as quaternion samples on `[0, span)`.
///
/// Evaluation is trigonometric interpolation of each quaternion component,
/// followed by renormalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "GridWire", into = "GridWire")]
pub struct GridMap {
    span: u32,
    samples: Vec<[f64; 4]>,
    components: [FourierMap; 4],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridWire {
    span: u32,
    samples: Vec<[f64; 4]>,
}

impl From<GridMap> for GridWire {
    fn from(g: GridMap) -> Self {
        GridWire {
            span: g.span,
            samples: g.samples,
        }
    }
}

impl From<GridWire> for GridMap {
    fn from(w: GridWire) -> Self {
        GridMap::from_samples(w.span, w.samples)
    }
}

impl GridMap {
    /// Interpolant through samples at `x_j = j·span/M`.
    pub fn from_samples(span: u32, samples: Vec<[f64; 4]>) -> Self {
        let m = samples.len().max(1);
        let n = (m - 1) / 2;
        let components = [0, 1, 2, 3].map(|c| {
            let col: Vec<_> = samples.iter().map(|q| Complex64::new(q[c], 0.0)).collect();
            analyze_with_leakage(&col, span.max(1), n, Symmetry::RealValued)
                .map(|(f, _)| f)
                .unwrap_or_else(|_| FourierMap::zero(span.max(1), Symmetry::RealValued))
        });
        Self {
            span,
            samples,
            components,
        }
    }

    /// Samples `f` with continuous sign choice over `[0, span)`.
    pub fn sample(span: u32, m: usize, f: impl Fn(f64) -> GroupElement) -> Self {
        let mut prev = GroupElement::IDENTITY;
        let samples = (0..m)
            .map(|j| {
                let g = f(span as f64 * j as f64 / m as f64);
                let g = if j == 0 { g } else { g.aligned_with(&prev) };
                prev = g;
                g.quaternion()
            })
            .collect();
        Self::from_samples(span, samples)
    }

    pub fn eval(&self, x: f64) -> GroupElement {
        GroupElement::from_quaternion(self.components.each_ref().map(|c| c.eval_real(x)))
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

type MapFn = Arc<dyn Fn(f64) -> GroupElement + Send + Sync>;

/// How a generator is evaluated.
#[derive(Clone)]
pub enum MapForm {
    Closed(ClosedForm),
    Grid(GridMap),
    /// Exact composition of other maps, kept symbolic.
    Derived(MapFn),
}

impl fmt::Debug for MapForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapForm::Closed(c) => write!(f, "Closed({c:?})"),
            MapForm::Grid(g) => write!(f, "Grid({} samples over {})", g.len(), g.span),
            MapForm::Derived(_) => write!(f, "Derived"),
        }
    }
}

/// A map `R → SU(2)` whose SO(3) projection has integer period.
#[derive(Debug, Clone)]
pub struct GroupMap {
    pub period: u32,
    pub form: MapForm,
}

impl GroupMap {
    pub fn closed(period: u32, form: ClosedForm) -> Self {
        Self {
            period,
            form: MapForm::Closed(form),
        }
    }

    pub fn constant(g: GroupElement) -> Self {
        Self::closed(1, ClosedForm::Constant { q: g.quaternion() })
    }

    pub fn identity() -> Self {
        Self::constant(GroupElement::IDENTITY)
    }

    pub fn derived(period: u32, f: impl Fn(f64) -> GroupElement + Send + Sync + 'static) -> Self {
        Self {
            period,
            form: MapForm::Derived(Arc::new(f)),
        }
    }

    pub fn eval(&self, x: f64) -> GroupElement {
        match &self.form {
            MapForm::Closed(c) => c.eval(x),
            MapForm::Grid(g) => g.eval(x),
            MapForm::Derived(f) => f(x),
        }
    }

    pub fn inverse(&self) -> Self {
        let me = self.clone();
        Self::derived(self.period, move |x| me.eval(x).inverse())
    }

    /// `x ↦ self(x + s)`.
    pub fn shifted(&self, s: f64) -> Self {
        let me = self.clone();
        Self::derived(self.period, move |x| me.eval(x + s))
    }

    /// Pointwise product `x ↦ self(x)·other(x)`.
    pub fn product(&self, other: &GroupMap) -> Self {
        let (a, b) = (self.clone(), other.clone());
        Self::derived(lcm(self.period, other.period), move |x| {
            a.eval(x) * b.eval(x)
        })
    }

    /// Grid-backed copy with `per_period` samples per unit length over two SO(3)
    /// periods, which always closes up in SU(2).
    pub fn to_grid(&self, per_period: usize) -> Self {
        let span = 2 * self.period;
        let me = self.clone();
        Self {
            period: self.period,
            form: MapForm::Grid(GridMap::sample(
                span,
                per_period * span as usize,
                move |x| me.eval(x),
            )),
        }
    }

    pub fn is_constant_on(&self, grid: usize, tol: f64) -> bool {
        let g0 = self.eval(0.0);
        (0..grid).all(|j| {
            self.eval(self.period as f64 * j as f64 / grid as f64)
                .projective_distance(&g0)
                < tol
        })
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub(crate) fn lcm(a: u32, b: u32) -> u32 {
    a / gcd(a, b) * b
}

/// `(α_n, z_n)`: the normal form `(α_n, A·E_{1/2}(·)·exp({0, z_n}))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalFormParams {
    pub alpha_n: f64,
    pub z_n: Complex64,
}

/// A quasi-periodic cocycle `(α, A(·))`.
#[derive(Debug, Clone)]
pub struct Cocycle {
    pub freq: f64,
    pub generator: GroupMap,
    pub label: String,
}

impl Cocycle {
    pub fn new(freq: f64, generator: GroupMap, label: impl Into<String>) -> Self {
        Self {
            freq,
            generator,
            label: label.into(),
        }
    }

    pub fn constant(freq: f64, g: GroupElement) -> Self {
        Self::new(freq, GroupMap::constant(g), "constant")
    }

    /// `(α, R_{2π·})` lifted as `(α, E_{1/2}(·))`.
    pub fn rotation(freq: f64) -> Self {
        Self::new(
            freq,
            GroupMap::closed(1, ClosedForm::Rotation { twice_r: 1 }),
            "rotation",
        )
    }

    /// `(α, E_r(·))`.
    pub fn rotation_r(freq: f64, r: HalfInt) -> Self {
        Self::new(
            freq,
            GroupMap::closed(1, ClosedForm::Rotation { twice_r: r.0 }),
            "rotation",
        )
    }

    /// `(α, A·R_{2π·})`: degree zero, not homotopic to the identity.
    pub fn model(freq: f64) -> Self {
        Self::new(freq, GroupMap::closed(1, ClosedForm::Model), "model")
    }

    /// `(α, A·E_{1/2}(· + α/2)·exp(U(·)))`, the chart used by the local reduction.
    pub fn chart(freq: f64, u: Su2Field) -> Self {
        let shift = freq / 2.0;
        Self::new(
            freq,
            GroupMap::closed(1, ClosedForm::Chart { shift, u }),
            "chart",
        )
    }

    pub fn period(&self) -> u32 {
        self.generator.period
    }

    pub fn value(&self, x: f64) -> GroupElement {
        self.generator.eval(x)
    }

    /// `A_n(x)`: `A(x+(n−1)α)···A(x)` for `n > 0`, `Id` for `n = 0`, and
    /// `A_{|n|}(x + nα)⁻¹` for `n < 0`.
    pub fn iterate(&self, n: i64, x: f64) -> GroupElement {
        if n < 0 {
            return self.iterate(-n, x + n as f64 * self.freq).inverse();
        }
        let mut acc = GroupElement::IDENTITY;
        for j in 0..n {
            acc = self.value(x + j as f64 * self.freq) * acc;
        }
        acc
    }

    /// The cocycle `(nα, A_n(·))`.
    pub fn power(&self, n: i64) -> Cocycle {
        let me = self.clone();
        Cocycle::new(
            n as f64 * self.freq,
            GroupMap::derived(self.period(), move |x| me.iterate(n, x)),
            format!("{}^{n}", self.label),
        )
    }

    /// `(α, B(·+α)·A(·)·B(·)⁻¹)`.
    pub fn conjugate(&self, b: &GroupMap) -> Result<Cocycle, CocycleError> {
        let (p, q) = (self.period(), b.period);
        if p == 0 || q == 0 || (p % q != 0 && q % p != 0) {
            return Err(CocycleError::PeriodMismatch(p, q));
        }
        let (me, b) = (self.clone(), b.clone());
        let alpha = self.freq;
        Ok(Cocycle::new(
            alpha,
            GroupMap::derived(p.max(q), move |x| {
                b.eval(x + alpha) * me.value(x) * b.eval(x).inverse()
            }),
            format!("conj({})", self.label),
        ))
    }

    /// `(2α, A(·+α)·A(·))`.
    pub fn second_iterate(&self) -> Cocycle {
        let me = self.clone();
        let alpha = self.freq;
        Cocycle::new(
            2.0 * alpha,
            GroupMap::derived(self.period(), move |x| me.value(x + alpha) * me.value(x)),
            format!("{}²", self.label),
        )
    }

    /// Largest projective distance between `A(x + p)` and `A(x)` on a probe grid.
    pub fn periodicity_defect(&self, probes: usize) -> f64 {
        let p = self.period() as f64;
        (0..probes)
            .map(|j| {
                let x = p * j as f64 / probes as f64;
                self.value(x + p).projective_distance(&self.value(x))
            })
            .fold(0.0, f64::max)
    }

    /// Homotopy class of the SO(3) loop `x ↦ A(x)` over one period. Sampling
    /// doubles until consecutive samples are within the lifting bound.
    pub fn homotopy_class(&self) -> Result<HomotopyClass, CocycleError> {
        let p = self.period() as f64;
        let mut m = 256;
        loop {
            let loop_: Vec<_> = (0..=m)
                .map(|j| cover_project(self.value(p * j as f64 / m as f64)))
                .collect();
            match path_lift(&loop_) {
                Ok((_, class)) => return Ok(class),
                Err(AlgebraError::GapTooLarge { .. }) if m < 1 << 16 => m *= 2,
                Err(e) => return Err(e.into()),
            }
        }
    }

    /// Mean norm of the logarithmic derivative `∂A_n·A_n⁻¹` over one period,
    /// divided by `2πn`, so that `(α, E_1(·))` scores 1.
    ///
    /// The derivative is a geodesic central difference, exact for one-parameter
    /// subgroups. The estimate is repeated on the doubled grid as a resolution check.
    pub fn degree_estimate(&self, n: i64, grid: usize) -> Result<f64, CocycleError> {
        if n < 1 || grid < 8 {
            return Err(CocycleError::BadDegreeInput);
        }
        let coarse = self.degree_on_grid(n, grid);
        let fine = self.degree_on_grid(n, 2 * grid);
        if (coarse - fine).abs() > 1e-3 {
            return Err(CocycleError::UnderResolved { n, coarse, fine });
        }
        Ok(fine)
    }

    fn degree_on_grid(&self, n: i64, grid: usize) -> f64 {
        let p = self.period() as f64;
        let h = p / grid as f64;
        let values: Vec<_> = (0..grid + 2)
            .map(|j| self.iterate(n, (j as f64 - 1.0) * h))
            .collect();
        let total: f64 = (1..=grid)
            .map(|j| {
                let step =
                    (values[j + 1] * values[j - 1].inverse()).aligned_with(&GroupElement::IDENTITY);
                su2_log(step).map(|v| v.norm()).unwrap_or(PI) / (2.0 * h)
            })
            .sum();
        total / grid as f64 / (2.0 * PI * n as f64)
    }

    /// JSON `{freq, period, kind, payload}`. Derived generators are sampled with
    /// `per_period` points per unit length.
    pub fn to_json(&self, per_period: usize) -> Value {
        let (kind, payload) = match &self.generator.form {
            MapForm::Closed(c) => (
                "closed_form",
                serde_json::to_value(c).expect("closed form serializes"),
            ),
            MapForm::Grid(g) => ("grid", serde_json::to_value(g).expect("grid serializes")),
            MapForm::Derived(_) => match self.generator.to_grid(per_period).form {
                MapForm::Grid(g) => ("grid", serde_json::to_value(g).expect("grid serializes")),
                _ => unreachable!("to_grid returns a grid"),
            },
        };
        json!({
            "freq": self.freq,
            "period": self.period(),
            "kind": kind,
            "label": self.label,
            "payload": payload,
        })
    }

    pub fn from_json(v: &Value) -> Result<Cocycle, CocycleError> {
        let bad = |m: &str| CocycleError::Malformed(m.to_string());
        let freq = v
            .get("freq")
            .and_then(Value::as_f64)
            .ok_or_else(|| bad("freq"))?;
        let period = v
            .get("period")
            .and_then(Value::as_u64)
            .ok_or_else(|| bad("period"))? as u32;
        if period == 0 {
            return Err(bad("period must be positive"));
        }
        let label = v
            .get("label")
            .and_then(Value::as_str)
            .unwrap_or("")
            .to_string();
        let payload = v.get("payload").cloned().ok_or_else(|| bad("payload"))?;
        let form = match v.get("kind").and_then(Value::as_str) {
            Some("closed_form") => MapForm::Closed(
                serde_json::from_value(payload)
                    .map_err(|e| CocycleError::Malformed(e.to_string()))?,
            ),
            Some("grid") => MapForm::Grid(
                serde_json::from_value(payload)
                    .map_err(|e| CocycleError::Malformed(e.to_string()))?,
            ),
            _ => return Err(bad("kind must be closed_form or grid")),
        };
        Ok(Cocycle::new(freq, GroupMap { period, form }, label))
    }
}

/// `(α_n, A·E_{1/2}(·)·exp({0, z_n}))`.
pub fn normal_form_cocycle(nf: NormalFormParams) -> Cocycle {
    Cocycle::new(
        nf.alpha_n,
        GroupMap::closed(1, ClosedForm::NormalForm { z: nf.z_n }),
        "normal form",
    )
}

/// `(2α_n, E_{1/2}(α_n)·exp({0, z̄_n})·exp({0, e^{2iπ·} z_n}))`, built literally.
pub fn second_iterate_closed_form(nf: NormalFormParams) -> Cocycle {
    Cocycle::new(
        2.0 * nf.alpha_n,
        GroupMap::closed(
            1,
            ClosedForm::SecondIterate {
                alpha: nf.alpha_n,
                z: nf.z_n,
            },
        ),
        "second iterate closed form",
    )
}

/// The conjugation `E_{1/2}(·)` that carries the direct second iterate of the
/// normal form onto the closed form: `E(x+2α)·A(x+α)A(x)·E(x)⁻¹ = −closed(x)`.
pub fn corollary_frame() -> GroupMap {
    GroupMap::closed(1, ClosedForm::Rotation { twice_r: 1 })
}

/// Sup projective distance between two generators on `grid` points of `[0, period)`.
pub fn generator_distance(a: &Cocycle, b: &Cocycle, grid: usize) -> f64 {
    let p = lcm(a.period(), b.period()) as f64;
    (0..grid)
        .map(|j| {
            let x = p * j as f64 / grid as f64;
            a.value(x).projective_distance(&b.value(x))
        })
        .fold(0.0, f64::max)
}

/// Least-squares fit of `d ≈ C/n`; returns `(C, R²)`.
pub fn fit_inverse_decay(points: &[(f64, f64)]) -> (f64, f64) {
    let num: f64 = points.iter().map(|(n, d)| d / n).sum();
    let den: f64 = points.iter().map(|(n, _)| 1.0 / (n * n)).sum();
    let c = num / den;
    let mean = points.iter().map(|(_, d)| d).sum::<f64>() / points.len() as f64;
    let ss_tot: f64 = points.iter().map(|(_, d)| (d - mean).powi(2)).sum();
    let ss_res: f64 = points.iter().map(|(n, d)| (d - c / n).powi(2)).sum();
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    (c, r2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const GOLDEN: f64 = 0.618_033_988_749_894_9;

    fn close(a: GroupElement, b: GroupElement, tol: f64) -> bool {
        a.distance(&b) < tol
    }

    fn smooth_b(seed: f64) -> GroupMap {
        let u = Su2Field {
            t: FourierMap::from_entries(
                1,
                [
                    (1, Complex64::new(0.2 * seed, 0.1)),
                    (-1, Complex64::new(0.2 * seed, -0.1)),
                ],
                Symmetry::RealValued,
            )
            .unwrap(),
            z: FourierMap::from_entries(
                1,
                [
                    (0, Complex64::new(0.3, -seed)),
                    (2, Complex64::new(0.0, 0.2)),
                ],
                Symmetry::None,
            )
            .unwrap(),
        };
        GroupMap::closed(1, ClosedForm::Exp { u })
    }

    #[test]
    fn iterate_examples() {
        let c = Cocycle::rotation_r(GOLDEN, HalfInt::ONE);
        assert_eq!(c.iterate(0, 0.3), GroupElement::IDENTITY);
        let x = 0.123;
        assert!(close(
            c.iterate(3, x),
            e_r(HalfInt::ONE, 3.0 * x + 3.0 * GOLDEN),
            1e-12
        ));

        let m = Cocycle::model(GOLDEN);
        let g0 = m.iterate(2, 0.0);
        for j in 0..64 {
            assert!(m.iterate(2, j as f64 / 64.0).projective_distance(&g0) < 1e-12);
        }
    }

    #[test]
    fn cocycle_identity_long_products() {
        let c = Cocycle::new(GOLDEN, smooth_b(0.7), "b");
        let x = 0.31;
        for (m, n) in [(10_000i64, -3i64), (-5_000, 5_000), (7, 9_000)] {
            let lhs = c.iterate(m + n, x);
            let rhs = c.iterate(m, x + n as f64 * GOLDEN) * c.iterate(n, x);
            assert!(lhs.projective_distance(&rhs) < 1e-9 * (m.abs() + n.abs()) as f64);
        }
    }

    #[test]
    fn conjugation_examples() {
        let c = Cocycle::model(GOLDEN);
        let same = c.conjugate(&GroupMap::identity()).unwrap();
        assert!(generator_distance(&c, &same, 64) < 1e-15);

        let g = su2_exp(Su2Vector::new(0.4, Complex64::new(-0.2, 0.9)));
        let k = su2_exp(Su2Vector::new(1.1, Complex64::new(0.3, 0.0)));
        let cc = Cocycle::constant(GOLDEN, k)
            .conjugate(&GroupMap::constant(g))
            .unwrap();
        assert!(close(cc.value(0.4), g * k * g.inverse(), 1e-14));

        let back = c
            .conjugate(&smooth_b(0.3))
            .unwrap()
            .conjugate(&smooth_b(0.3).inverse())
            .unwrap();
        assert!(generator_distance(&c, &back, 64) < 1e-10);

        let two = Cocycle::new(GOLDEN, GroupMap::derived(2, |x| e_half(x / 2.0)), "two");
        assert!(matches!(
            two.conjugate(&GroupMap::derived(3, |_| GroupElement::IDENTITY)),
            Err(CocycleError::PeriodMismatch(2, 3))
        ));
    }

    #[test]
    fn half_rotation_conjugates_model_to_constant() {
        // E_{1/2}(x/2) has SO(3)-period 2; it reduces (α, A·E_{1/2}(·)) to A·E_{1/2}(−α/2).
        let b = GroupMap::derived(2, |x| e_half(x / 2.0));
        let c = Cocycle::model(GOLDEN).conjugate(&b).unwrap();
        assert_eq!(c.period(), 2);
        let target = GroupElement::a() * e_half(-GOLDEN / 2.0);
        for j in 0..128 {
            assert!(c.value(2.0 * j as f64 / 128.0).projective_distance(&target) < 1e-12);
        }
    }

    #[test]
    fn second_iterate_examples() {
        let k = su2_exp(Su2Vector::new(0.3, Complex64::new(0.1, 0.5)));
        let c = Cocycle::constant(GOLDEN, k).second_iterate();
        assert_eq!(c.freq, 2.0 * GOLDEN);
        assert!(close(c.value(0.8), k * k, 1e-14));

        let m = Cocycle::model(GOLDEN).second_iterate();
        let vals: Vec<_> = (0..128).map(|j| m.value(j as f64 / 128.0)).collect();
        // direct oracle: A E(x+α) A E(x) = A² E(−x−α) E(x) = −E(−α)
        let expect = -e_half(-GOLDEN);
        assert!(vals.iter().all(|v| close(*v, expect, 1e-14)));
    }

    #[test]
    fn second_iterate_matches_double_iterate() {
        let c = Cocycle::new(GOLDEN, smooth_b(1.3), "b");
        let c2 = c.second_iterate();
        for n in [1i64, 4, -3, 17] {
            for x in [0.0, 0.41, 0.93] {
                assert!(c2.iterate(n, x).distance(&c.iterate(2 * n, x)) < 1e-9);
            }
        }
    }

    #[test]
    fn normal_form_examples() {
        let nf = normal_form_cocycle(NormalFormParams {
            alpha_n: GOLDEN,
            z_n: Complex64::new(0.0, 0.0),
        });
        assert!(generator_distance(&nf, &Cocycle::model(GOLDEN), 64) < 1e-15);

        let nf = normal_form_cocycle(NormalFormParams {
            alpha_n: GOLDEN,
            z_n: Complex64::new(0.1, 0.0),
        });
        let direct = GroupElement::a() * su2_exp(Su2Vector::off_diagonal(Complex64::new(0.1, 0.0)));
        assert!(close(nf.value(0.0), direct, 1e-15));
        assert!(nf.periodicity_defect(64) < 1e-12);
        // as an SU(2) map the normal form is antiperiodic
        assert!(close(nf.value(1.3), -nf.value(0.3), 1e-12));
    }

    #[test]
    fn closed_form_second_iterate_examples() {
        let zero = NormalFormParams {
            alpha_n: GOLDEN,
            z_n: Complex64::new(0.0, 0.0),
        };
        let c = second_iterate_closed_form(zero);
        assert!(c.generator.is_constant_on(64, 1e-15));
        assert!(close(c.value(0.2), e_half(GOLDEN), 1e-15));

        // direct quaternion-product oracle under the E_{1/2}(·) frame
        let nf = NormalFormParams {
            alpha_n: GOLDEN,
            z_n: Complex64::new(0.05, 0.0),
        };
        let direct = normal_form_cocycle(nf)
            .second_iterate()
            .conjugate(&corollary_frame())
            .unwrap();
        let closed = second_iterate_closed_form(nf);
        assert!(generator_distance(&direct, &closed, 128) < 1e-9);
        for j in 0..16 {
            let x = j as f64 / 16.0;
            assert!(close(direct.value(x), -closed.value(x), 1e-13));
        }
    }

    #[test]
    fn closed_form_nonconstant_factor_has_window_support() {
        let z = Complex64::new(0.03, -0.04);
        let m = 64;
        let samples: Vec<_> = (0..m)
            .map(|j| {
                let x = j as f64 / m as f64;
                su2_log(su2_exp(Su2Vector::off_diagonal(
                    Complex64::from_polar(1.0, 2.0 * PI * x) * z,
                )))
                .unwrap()
            })
            .collect();
        let field = Su2Field::analyze(&samples, 1, 8).unwrap();
        for k in -8i64..=8 {
            if k != 1 {
                assert!(field.z.coeff(k).norm() < 1e-14);
            }
            assert!(field.t.coeff(k).norm() < 1e-14);
        }
    }

    #[test]
    fn homotopy_examples() {
        let k = su2_exp(Su2Vector::new(0.3, Complex64::new(0.1, 0.5)));
        assert_eq!(
            Cocycle::constant(GOLDEN, k).homotopy_class().unwrap(),
            HomotopyClass::Trivial
        );
        assert_eq!(
            Cocycle::rotation(GOLDEN).homotopy_class().unwrap(),
            HomotopyClass::Nontrivial
        );
        assert_eq!(
            Cocycle::model(GOLDEN).homotopy_class().unwrap(),
            HomotopyClass::Nontrivial
        );
        assert_eq!(
            Cocycle::rotation_r(GOLDEN, HalfInt::ONE)
                .homotopy_class()
                .unwrap(),
            HomotopyClass::Trivial
        );
    }

    #[test]
    fn homotopy_is_conjugation_invariant() {
        for s in 0..10 {
            let b = smooth_b(0.25 * s as f64 - 1.0);
            let c = Cocycle::model(GOLDEN).conjugate(&b).unwrap();
            assert_eq!(c.homotopy_class().unwrap(), HomotopyClass::Nontrivial);
        }
    }

    #[test]
    fn degree_examples() {
        let e1 = Cocycle::rotation_r(GOLDEN, HalfInt::ONE);
        for n in [1, 2, 5, 16] {
            assert!((e1.degree_estimate(n, 256).unwrap() - 1.0).abs() < 1e-9);
        }
        let k = su2_exp(Su2Vector::new(0.3, Complex64::new(0.1, 0.5)));
        assert!(Cocycle::constant(GOLDEN, k).degree_estimate(7, 64).unwrap() < 1e-12);
        assert!((Cocycle::rotation(GOLDEN).degree_estimate(8, 128).unwrap() - 0.5).abs() < 1e-9);

        // odd iterates of the model keep one factor of E_{1/2}: exactly 1/(2n)
        let m = Cocycle::model(GOLDEN);
        for n in [1i64, 3, 7, 15] {
            assert!((m.degree_estimate(n, 256).unwrap() - 0.5 / n as f64).abs() < 1e-9);
        }
        assert!(m.degree_estimate(16, 256).unwrap() < 1e-9);
    }

    #[test]
    fn degree_is_invariant_under_constant_conjugation() {
        let g = su2_exp(Su2Vector::new(0.4, Complex64::new(-0.2, 0.9)));
        let c = Cocycle::new(GOLDEN, smooth_b(0.5), "b").product_with_model();
        let cc = c.conjugate(&GroupMap::constant(g)).unwrap();
        let (a, b) = (
            c.degree_estimate(5, 256).unwrap(),
            cc.degree_estimate(5, 256).unwrap(),
        );
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn degree_drift_under_smooth_conjugation_shrinks() {
        let c = Cocycle::rotation(GOLDEN);
        let cc = c.conjugate(&smooth_b(0.8)).unwrap();
        let drift =
            |n| (c.degree_estimate(n, 1024).unwrap() - cc.degree_estimate(n, 1024).unwrap()).abs();
        let (d8, d16, d32) = (drift(8), drift(16), drift(32));
        assert!(d16 < d8 && d32 < d16, "{d8} {d16} {d32}");
    }

    #[test]
    fn under_resolution_is_reported() {
        let e1 = Cocycle::rotation_r(GOLDEN, HalfInt(8));
        assert!(matches!(
            e1.degree_estimate(5, 64),
            Err(CocycleError::UnderResolved { .. })
        ));
    }

    #[test]
    fn inverse_decay_fit() {
        let pts: Vec<_> = [1.0, 3.0, 7.0].iter().map(|n| (*n, 0.5 / n)).collect();
        let (c, r2) = fit_inverse_decay(&pts);
        assert!((c - 0.5).abs() < 1e-15 && (r2 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip() {
        let nf = normal_form_cocycle(NormalFormParams {
            alpha_n: GOLDEN,
            z_n: Complex64::new(0.01, -0.02),
        });
        let v = nf.to_json(64);
        assert_eq!(v["kind"], "closed_form");
        let back = Cocycle::from_json(&serde_json::from_str(&v.to_string()).unwrap()).unwrap();
        assert!(generator_distance(&nf, &back, 64) == 0.0);

        let derived = Cocycle::model(GOLDEN).conjugate(&smooth_b(0.2)).unwrap();
        let v = derived.to_json(64);
        assert_eq!(v["kind"], "grid");
        let back = Cocycle::from_json(&v).unwrap();
        assert!(generator_distance(&derived, &back, 100) < 1e-8);
    }

    impl Cocycle {
        fn product_with_model(&self) -> Cocycle {
            Cocycle::new(
                self.freq,
                self.generator.product(&Cocycle::model(self.freq).generator),
                "mixed",
            )
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn cocycle_identity(m in -50i64..50, n in -50i64..50, x in 0.0f64..1.0, s in -1.0f64..1.0) {
            let c = Cocycle::new(GOLDEN, smooth_b(s), "b");
            let lhs = c.iterate(m + n, x);
            let rhs = c.iterate(m, x + n as f64 * GOLDEN) * c.iterate(n, x);
            prop_assert!(lhs.distance(&rhs) < 1e-8);
        }

        #[test]
        fn conjugation_covariance(n in -30i64..30, x in 0.0f64..1.0, s in -1.0f64..1.0) {
            let c = Cocycle::model(GOLDEN);
            let b = smooth_b(s);
            let cc = c.conjugate(&b).unwrap();
            let lhs = cc.iterate(n, x);
            let rhs = b.eval(x + n as f64 * GOLDEN) * c.iterate(n, x) * b.eval(x).inverse();
            prop_assert!(lhs.distance(&rhs) < 1e-8);
        }
    }
}
