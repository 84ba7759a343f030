//! Z²-actions, the continued-fraction base change, the normalizer `B(·)` with
//! `B(·+α)·A(·)·B(·)⁻¹ = Id`, and the two-periodic reduction pipeline.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{e_half, su2_exp, su2_log, GroupElement, HomotopyClass, Su2Vector};
use crate::arithmetic::check_dc_tilde;
use crate::cocycle::{Cocycle, CocycleError, GroupMap};
use crate::reduction::{distance_to_constant, mean_element, near_constant_kam, ReductionError};

/// Grid used for commutation and periodicity probes.
pub const PROBE_GRID: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RenormError {
    #[error("matrix {0:?} is not unimodular")]
    NotUnimodular([[i64; 2]; 2]),
    #[error("generator is not periodic (defect {0:.3e})")]
    NotPeriodic(f64),
    #[error("seam matching failed: {0}")]
    SeamMatchFailed(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Cocycle(#[from] CocycleError),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
}

/// Frequency `one + alpha·α`, tracked with exact integer coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreqCoord {
    pub one: i64,
    pub alpha: i64,
}

impl FreqCoord {
    pub const ONE: FreqCoord = FreqCoord { one: 1, alpha: 0 };
    pub const ALPHA: FreqCoord = FreqCoord { one: 0, alpha: 1 };

    pub fn value(&self, alpha: f64) -> f64 {
        self.one as f64 + self.alpha as f64 * alpha
    }

    fn combine(m: i64, a: FreqCoord, n: i64, b: FreqCoord) -> FreqCoord {
        FreqCoord {
            one: m * a.one + n * b.one,
            alpha: m * a.alpha + n * b.alpha,
        }
    }
}

impl fmt::Display for FreqCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}α", self.one, self.alpha)
    }
}

/// A pair of commuting cocycles over the same fibre.
#[derive(Debug, Clone)]
pub struct Z2Action {
    pub alpha: f64,
    pub first: Cocycle,
    pub second: Cocycle,
    pub first_coord: FreqCoord,
    pub second_coord: FreqCoord,
    pub commutation_defect: f64,
}

/// `sup_x dist(C₁(x+β₂)C₂(x), C₂(x+β₁)C₁(x))` over the probe grid on `[0, 1)`.
pub fn commutation_defect(first: &Cocycle, second: &Cocycle) -> f64 {
    (0..PROBE_GRID)
        .map(|j| {
            let x = j as f64 / PROBE_GRID as f64;
            let ab = first.value(x + second.freq) * second.value(x);
            let ba = second.value(x + first.freq) * first.value(x);
            ab.projective_distance(&ba)
        })
        .fold(0.0, f64::max)
}

impl Z2Action {
    pub fn new(
        alpha: f64,
        first: Cocycle,
        first_coord: FreqCoord,
        second: Cocycle,
        second_coord: FreqCoord,
    ) -> Self {
        let commutation_defect = commutation_defect(&first, &second);
        Self {
            alpha,
            first,
            second,
            first_coord,
            second_coord,
            commutation_defect,
        }
    }

    /// The element `Φ₁^m ∘ Φ₂^n`: `(mβ₁ + nβ₂, x ↦ Φ₁^m(x + nβ₂)·Φ₂^n(x))`.
    pub fn word(&self, m: i64, n: i64) -> (FreqCoord, Cocycle) {
        let coord = FreqCoord::combine(m, self.first_coord, n, self.second_coord);
        let (a, b) = (self.first.clone(), self.second.clone());
        let shift = n as f64 * b.freq;
        let period = crate::cocycle::lcm(a.period(), b.period());
        let map = GroupMap::derived(period, move |x| a.iterate(m, x + shift) * b.iterate(n, x));
        (
            coord,
            Cocycle::new(coord.value(self.alpha), map, format!("Φ₁^{m}Φ₂^{n}")),
        )
    }

    /// Conjugates both generators by `B`, which may be any map on the line.
    pub fn conjugate_by(&self, b: &GroupMap, label: &str) -> Z2Action {
        let conj = |c: &Cocycle| {
            let (c2, b2) = (c.clone(), b.clone());
            let beta = c.freq;
            Cocycle::new(
                beta,
                GroupMap::derived(c.period(), move |x| {
                    b2.eval(x + beta) * c2.value(x) * b2.eval(x).inverse()
                }),
                format!("{label}({})", c.label),
            )
        };
        Z2Action::new(
            self.alpha,
            conj(&self.first),
            self.first_coord,
            conj(&self.second),
            self.second_coord,
        )
    }

    /// Largest projective distance between corresponding generators on `[0, span)`.
    pub fn distance_to(&self, other: &Z2Action, span: f64, grid: usize) -> f64 {
        (0..grid)
            .map(|j| {
                let x = span * j as f64 / grid as f64;
                self.first
                    .value(x)
                    .projective_distance(&other.first.value(x))
                    .max(
                        self.second
                            .value(x)
                            .projective_distance(&other.second.value(x)),
                    )
            })
            .fold(0.0, f64::max)
    }
}

/// `Φ = ((1, Id), (α, A(·)))`.
pub fn make_action(c: &Cocycle) -> Result<Z2Action, RenormError> {
    let defect = c.periodicity_defect(PROBE_GRID);
    if c.period() != 1 || defect > 1e-10 {
        return Err(RenormError::NotPeriodic(defect));
    }
    Ok(Z2Action::new(
        c.freq,
        Cocycle::new(1.0, GroupMap::identity(), "(1, Id)"),
        FreqCoord::ONE,
        c.clone(),
        FreqCoord::ALPHA,
    ))
}

/// `[[a, 1], [1, 0]]` with `a = ⌊1/α⌋`.
pub fn cf_matrix(alpha: f64) -> [[i64; 2]; 2] {
    [[(1.0 / alpha).floor() as i64, 1], [1, 0]]
}

fn det(m: &[[i64; 2]; 2]) -> i64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub fn unimodular_inverse(m: &[[i64; 2]; 2]) -> Result<[[i64; 2]; 2], RenormError> {
    let d = det(m);
    if d.abs() != 1 {
        return Err(RenormError::NotUnimodular(*m));
    }
    Ok([[d * m[1][1], -d * m[0][1]], [-d * m[1][0], d * m[0][0]]])
}

/// New generators are the words given by the rows of `M⁻¹`, so that frequencies
/// transform as `(β₁', β₂') = M⁻¹(β₁, β₂)`. For `M = [[a,1],[1,0]]` this sends
/// `((1, Id), (α, A))` to `((α, A), (1 − aα, A_{−a}))`. The change of scale is omitted.
pub fn base_change(a: &Z2Action, m: [[i64; 2]; 2]) -> Result<Z2Action, RenormError> {
    let r = unimodular_inverse(&m)?;
    let (c1, g1) = a.word(r[0][0], r[0][1]);
    let (c2, g2) = a.word(r[1][0], r[1][1]);
    Ok(Z2Action::new(a.alpha, g1, c1, g2, c2))
}

/// A real-line map tabulated on a uniform grid over `[0, length]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealLineMap {
    pub length: f64,
    pub step: f64,
    pub samples: Vec<[f64; 4]>,
}

/// Flat-ended transition `χ` on `[0, 1]` with `χ⁽ʲ⁾(0) = χ⁽ʲ⁾(1) = 0` for `1 ≤ j ≤ order`.
pub fn smoothstep(order: usize, t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    let mut sum = 0.0;
    let mut binom = 1.0;
    for j in 0..=order {
        if j > 0 {
            binom *= (order + j) as f64 / j as f64;
        }
        sum += binom * (1.0 - t).powi(j as i32);
    }
    t.powi(order as i32 + 1) * sum
}

/// `B` with `B(x+β) = B(x)·G(x)⁻¹` on the whole line, seeded on `[0, β)` by
/// `B(s) = R(s)·exp(χ(s/β)·log(R(s)⁻¹·R(s−β)·G(s−β)⁻¹))` around a reference path `R`.
#[derive(Clone)]
pub struct Normalizer {
    beta: f64,
    g: GroupMap,
    reference: GroupMap,
    seam_order: usize,
}

impl fmt::Debug for Normalizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Normalizer(β = {}, seam order {})",
            self.beta, self.seam_order
        )
    }
}

/// Largest seam correction angle accepted when seeding `B`.
pub const SEAM_ANGLE_LIMIT: f64 = PI / 2.0;

impl Normalizer {
    pub fn new(
        beta: f64,
        g: GroupMap,
        reference: GroupMap,
        seam_order: usize,
    ) -> Result<Self, RenormError> {
        if beta.is_nan() || beta <= 0.0 {
            return Err(RenormError::Precondition(format!(
                "normalizer needs a positive shift, got {beta}"
            )));
        }
        let n = Self {
            beta,
            g,
            reference,
            seam_order,
        };
        for j in 0..=64 {
            let s = beta * j as f64 / 64.0;
            let angle = n.seam_correction(s).su2_angle();
            if angle > SEAM_ANGLE_LIMIT {
                return Err(RenormError::SeamMatchFailed(format!(
                    "reference path is {angle:.3} rad from the propagated value at s = {s:.4}"
                )));
            }
        }
        Ok(n)
    }

    fn seam_correction(&self, s: f64) -> GroupElement {
        let r = self.reference.eval(s);
        let q = self.reference.eval(s - self.beta) * self.g.eval(s - self.beta).inverse();
        (r.inverse() * q).aligned_with(&GroupElement::IDENTITY)
    }

    fn seed(&self, s: f64) -> GroupElement {
        let r = self.reference.eval(s);
        let chi = smoothstep(self.seam_order, s / self.beta);
        if chi == 0.0 {
            return r;
        }
        let v = su2_log(self.seam_correction(s)).unwrap_or(Su2Vector::ZERO);
        r * su2_exp(v.scale(chi))
    }

    pub fn eval(&self, x: f64) -> GroupElement {
        let j = (x / self.beta).floor() as i64;
        let s = x - j as f64 * self.beta;
        let mut b = self.seed(s);
        if j >= 0 {
            for i in 0..j {
                b = b * self.g.eval(s + i as f64 * self.beta).inverse();
            }
        } else {
            for i in 1..=-j {
                b = b * self.g.eval(s - i as f64 * self.beta);
            }
        }
        b
    }

    pub fn as_map(&self) -> GroupMap {
        let me = self.clone();
        GroupMap::derived(1, move |x| me.eval(x))
    }

    pub fn tabulate(&self, length: f64, points: usize) -> RealLineMap {
        let step = length / (points.max(2) - 1) as f64;
        RealLineMap {
            length,
            step,
            samples: (0..points.max(2))
                .map(|j| self.eval(j as f64 * step).quaternion())
                .collect(),
        }
    }

    /// Mismatch of one-sided first derivatives of `B` across the seam at 0.
    pub fn seam_defect(&self) -> f64 {
        let h = 1e-5;
        let b0 = self.eval(0.0);
        let plus = su2_log(b0.inverse() * self.eval(h)).unwrap_or(Su2Vector::ZERO);
        let minus = su2_log(b0.inverse() * self.eval(-h)).unwrap_or(Su2Vector::ZERO);
        (plus + minus).norm() / h
    }
}

/// Exact normalizer of `(β, A·E_{1/2}(·))`: `B₀(x) = exp((x/β)L)·E_{1/2}(x/2)` with
/// `exp(L) = E_{1/2}(β/2)·A⁻¹`.
pub fn model_normalizer(beta: f64) -> GroupMap {
    let k = e_half(beta / 2.0) * GroupElement::a().inverse();
    let l = su2_log(k).expect("E(β/2)A⁻¹ is a quarter turn");
    GroupMap::derived(1, move |x| su2_exp(l.scale(x / beta)) * e_half(x / 2.0))
}

/// Exact normalizer of a constant cocycle `(β, C)`: `x ↦ exp(−(x/β)·log C)`.
pub fn constant_normalizer(beta: f64, c: GroupElement) -> Result<GroupMap, RenormError> {
    let l = su2_log(c)
        .ok_or_else(|| RenormError::SeamMatchFailed("constant generator is −Id".into()))?;
    Ok(GroupMap::derived(1, move |x| su2_exp(l.scale(-x / beta))))
}

/// Output of [`normalize_action`].
#[derive(Debug, Clone)]
pub struct NormalizedAction {
    pub b: Normalizer,
    pub table: RealLineMap,
    pub action: Z2Action,
    /// `NF(x) = B(x+1)·B(x)⁻¹`.
    pub nf: GroupMap,
    /// `sup dist(NF(x+α), NF(x))`.
    pub nf_periodicity_defect: f64,
    /// `sup dist` of the normalized first generator to `Id`.
    pub first_defect: f64,
    pub seam_defect: f64,
}

/// Builds `B` for the first generator and conjugates the action by it. Without an
/// explicit reference, a constant generator uses [`constant_normalizer`] and any
/// other generator uses [`model_normalizer`].
pub fn normalize_action(
    a: &Z2Action,
    seam_order: usize,
    reference: Option<GroupMap>,
) -> Result<NormalizedAction, RenormError> {
    let beta = a.first.freq;
    let g = a.first.generator.clone();
    let reference = match reference {
        Some(r) => r,
        None if g.is_constant_on(PROBE_GRID, 1e-12) => constant_normalizer(beta, g.eval(0.0))?,
        None => model_normalizer(beta),
    };
    let b = Normalizer::new(beta, g, reference, seam_order)?;
    let seam_defect = b.seam_defect();
    if seam_order >= 1 && seam_defect > 1e-3 {
        return Err(RenormError::SeamMatchFailed(format!(
            "first derivatives differ by {seam_defect:.3e} across the seam"
        )));
    }
    let bmap = b.as_map();
    let action = a.conjugate_by(&bmap, "B");
    let nf = {
        let b = b.clone();
        GroupMap::derived(1, move |x| b.eval(x + 1.0) * b.eval(x).inverse())
    };
    let probe = |f: &dyn Fn(f64) -> f64| (0..256).map(|j| f(j as f64 / 256.0)).fold(0.0, f64::max);
    let nf_periodicity_defect = probe(&|x| nf.eval(x + beta).projective_distance(&nf.eval(x)));
    let first_defect = probe(&|x| {
        action
            .first
            .value(x)
            .projective_distance(&GroupElement::IDENTITY)
    });
    let length = 3.0 + 2.0 * beta;
    Ok(NormalizedAction {
        table: b.tabulate(length, 1024),
        b,
        action,
        nf,
        nf_periodicity_defect,
        first_defect,
        seam_defect,
    })
}

/// Pipeline stages, used to tag failures and trace records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Preconditions,
    MakeAction,
    BaseChange,
    Normalize,
    SecondReturn,
    Reduce,
    InvertBaseChange,
    TwoPeriodic,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("stage serializes");
        write!(f, "{}", s.as_str().unwrap_or("?"))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("pipeline stage {stage}: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: RenormError,
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T, PipelineError>;
}

impl<T, E: Into<RenormError>> AtStage<T> for Result<T, E> {
    fn at(self, stage: Stage) -> Result<T, PipelineError> {
        self.map_err(|e| PipelineError {
            stage,
            source: e.into(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub seam_order: usize,
    /// Number of near-constant KAM steps, giving `D_0 … D_steps`.
    pub kam_steps: usize,
    pub truncation: usize,
    pub grid: usize,
    pub guard: f64,
    /// Diophantine window for the precondition gate.
    pub gamma: f64,
    pub tau: f64,
    pub depth_k: u32,
    /// Iterate used by the degree gate; the gate asks for an estimate ≤ 0.05.
    pub degree_n: i64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seam_order: 4,
            kam_steps: 3,
            truncation: 63,
            grid: 256,
            guard: 1e-6,
            gamma: 10.0,
            tau: 2.0,
            depth_k: 100,
            degree_n: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub first_freq: FreqCoord,
    pub second_freq: FreqCoord,
    pub first_freq_value: f64,
    pub second_freq_value: f64,
    pub commutation_defect: f64,
}

impl StageRecord {
    fn of(stage: Stage, a: &Z2Action) -> Self {
        Self {
            stage,
            first_freq: a.first_coord,
            second_freq: a.second_coord,
            first_freq_value: a.first.freq,
            second_freq_value: a.second.freq,
            commutation_defect: a.commutation_defect,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceRow {
    pub m: usize,
    pub distance_to_constant: f64,
}

/// Everything the pipeline measured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineTrace {
    pub alpha: f64,
    pub partial_quotient: i64,
    pub gauge: String,
    pub stages: Vec<StageRecord>,
    pub base_change_roundtrip: f64,
    pub seam_defect: f64,
    pub normalized_first_defect: f64,
    pub nf_periodicity_defect: f64,
    pub nf2_identity_defect: f64,
    pub d_m_periodicity_defect: f64,
    pub word_vs_direct: f64,
    pub distances: Vec<DistanceRow>,
    pub final_constant: [f64; 4],
    pub distance_to_constant: f64,
}

/// Final two-periodic action and its trace.
#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub action: Z2Action,
    pub trace: PipelineTrace,
}

impl PipelineOutcome {
    pub fn distance_to_constant(&self) -> f64 {
        self.trace.distance_to_constant
    }
}

fn sup_on(grid: usize, span: f64, f: impl Fn(f64) -> f64) -> f64 {
    (0..grid)
        .map(|j| f(span * j as f64 / grid as f64))
        .fold(0.0, f64::max)
}

/// Runs one renormalization step and the two-periodic reduction:
/// make the action, base change by `CF(α)`, normalize the first generator by `B`,
/// form `NF₂(x) = NF(x+1)·NF(x)`, reduce it near constants by `D_m` (solved on the
/// rescaled circle `x ↦ x/α`, so `D_m` is α-periodic), undo the base change and square
/// the time-one generator. The returned distance is the sup projective distance of
/// the final generators to constants on `[0, 2)`.
pub fn two_periodic_pipeline(
    c: &Cocycle,
    cfg: &PipelineConfig,
) -> Result<PipelineOutcome, PipelineError> {
    let alpha = c.freq;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(RenormError::Precondition(format!(
            "α = {alpha} is not in (0, 1)"
        )))
        .at(Stage::Preconditions);
    }
    let class = c.homotopy_class().at(Stage::Preconditions)?;
    if class != HomotopyClass::Nontrivial {
        return Err(RenormError::Precondition(
            "cocycle is homotopic to the identity".into(),
        ))
        .at(Stage::Preconditions);
    }
    let degree = c
        .degree_estimate(cfg.degree_n, 8 * cfg.degree_n as usize)
        .at(Stage::Preconditions)?;
    if degree > 0.05 {
        return Err(RenormError::Precondition(format!(
            "degree estimate {degree:.3} is not small"
        )))
        .at(Stage::Preconditions);
    }
    let dc = check_dc_tilde(alpha, cfg.gamma, cfg.tau, cfg.depth_k);
    if !dc.satisfied {
        return Err(RenormError::Precondition(format!(
            "α fails the half-shifted Diophantine window (margin {:.3e} at k = {})",
            dc.min_margin, dc.worst_k
        )))
        .at(Stage::Preconditions);
    }

    let mut stages = Vec::new();
    let phi = make_action(c).at(Stage::MakeAction)?;
    stages.push(StageRecord::of(Stage::MakeAction, &phi));

    let m = cf_matrix(alpha);
    let a = m[0][0];
    let renorm = base_change(&phi, m).at(Stage::BaseChange)?;
    stages.push(StageRecord::of(Stage::BaseChange, &renorm));
    let back = base_change(&renorm, unimodular_inverse(&m).at(Stage::BaseChange)?)
        .at(Stage::BaseChange)?;
    let base_change_roundtrip = back.distance_to(&phi, 1.0, PROBE_GRID);

    let normalized = normalize_action(&renorm, cfg.seam_order, None).at(Stage::Normalize)?;
    stages.push(StageRecord::of(Stage::Normalize, &normalized.action));
    let nf = normalized.nf.clone();
    let nf2 = {
        let nf = nf.clone();
        GroupMap::derived(1, move |x| nf.eval(x + 1.0) * nf.eval(x))
    };
    let shift = 1.0 - a as f64 * alpha;
    let nf2_identity_defect = sup_on(256, 1.0, |x| {
        (nf.eval(x + shift) * nf.eval(x)).projective_distance(&nf2.eval(x))
    });

    // NF₂ is α-periodic; on the rescaled circle it is 1-periodic over the shift 2/α.
    let rescaled = {
        let nf2 = nf2.clone();
        GroupMap::derived(1, move |y| nf2.eval(alpha * y))
    };
    let beta = 2.0 / alpha;
    let kam = near_constant_kam(
        beta,
        &rescaled,
        &[cfg.truncation],
        cfg.kam_steps,
        cfg.grid,
        cfg.guard,
    )
    .at(Stage::Reduce)?;

    let b = normalized.b.clone();
    let mut distances = Vec::new();
    let mut last = None;
    for (mi, dprime) in kam.conjugations.iter().enumerate() {
        let d = {
            let dprime = dprime.clone();
            GroupMap::derived(1, move |x| dprime.eval(x / alpha))
        };
        let w = {
            let (d, b) = (d.clone(), b.clone());
            GroupMap::derived(1, move |x| d.eval(x) * b.eval(x))
        };
        let conj = renorm.conjugate_by(&w, "W");
        let restored = base_change(&conj, unimodular_inverse(&m).at(Stage::InvertBaseChange)?)
            .at(Stage::InvertBaseChange)?;
        let (time_one, rotation) = (restored.first.clone(), restored.second.clone());
        let two = time_one.second_iterate();
        let final_action = Z2Action::new(
            alpha,
            two,
            FreqCoord { one: 2, alpha: 0 },
            rotation,
            FreqCoord::ALPHA,
        );
        let samples: Vec<_> = (0..256)
            .map(|j| final_action.first.value(2.0 * j as f64 / 256.0))
            .collect();
        let id_defect = sup_on(256, 2.0, |x| {
            final_action
                .second
                .value(x)
                .projective_distance(&GroupElement::IDENTITY)
        });
        let dist = distance_to_constant(&samples).max(id_defect);
        distances.push(DistanceRow {
            m: mi,
            distance_to_constant: dist,
        });
        if mi + 1 == kam.conjugations.len() {
            stages.push(StageRecord::of(Stage::InvertBaseChange, &restored));
            stages.push(StageRecord::of(Stage::TwoPeriodic, &final_action));
            let direct = {
                let (d, nf2) = (d.clone(), nf2.clone());
                move |x: f64| d.eval(x + 2.0) * nf2.eval(x) * d.eval(x).inverse()
            };
            let word_vs_direct = sup_on(256, 2.0, |x| {
                final_action.first.value(x).projective_distance(&direct(x))
            });
            let two_a = 2.0 * a as f64 * alpha;
            let d_m_periodicity_defect = sup_on(256, 1.0, |x| {
                d.eval(x + 2.0)
                    .projective_distance(&d.eval(x + 2.0 - two_a))
            });
            last = Some((
                final_action,
                mean_element(&samples),
                word_vs_direct,
                d_m_periodicity_defect,
            ));
        }
    }
    let (action, constant, word_vs_direct, d_m_periodicity_defect) =
        last.expect("at least D_0 is evaluated");
    let distance = distances
        .last()
        .map(|r| r.distance_to_constant)
        .unwrap_or(f64::NAN);
    Ok(PipelineOutcome {
        action,
        trace: PipelineTrace {
            alpha,
            partial_quotient: a,
            gauge: "A = [[0, 1], [-1, 0]], E_{1/2}(x) = diag(e^{iπx}, e^{-iπx})".into(),
            stages,
            base_change_roundtrip,
            seam_defect: normalized.seam_defect,
            normalized_first_defect: normalized.first_defect,
            nf_periodicity_defect: normalized.nf_periodicity_defect,
            nf2_identity_defect,
            d_m_periodicity_defect,
            word_vs_direct,
            distances,
            final_constant: constant.quaternion(),
            distance_to_constant: distance,
        },
    })
}

/// Cross-check built on the second iterate: base change `((1, Id), (2α, A₂))` by
/// `CF(2α mod 1)` and normalize the first generator, which yields `((2α, Id), (1 − 2nα, NF))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondIterateCrossCheck {
    pub first_freq: FreqCoord,
    pub second_freq: FreqCoord,
    pub first_defect: f64,
    /// `sup dist(NF(x+2α), NF(x))`.
    pub nf_periodicity_defect: f64,
}

pub fn second_iterate_cross_check(
    c: &Cocycle,
    seam_order: usize,
) -> Result<SecondIterateCrossCheck, RenormError> {
    let alpha = c.freq;
    let two = c.second_iterate();
    let doubled = (2.0 * alpha).rem_euclid(1.0);
    let wrap = (2.0 * alpha).floor() as i64;
    let g = two.generator.clone();
    // the double rotation as a frequency of the module over (1, α): 2α − wrap
    let shifted = Cocycle::new(doubled, g.clone(), "A₂");
    let phi = Z2Action::new(
        alpha,
        Cocycle::new(1.0, GroupMap::identity(), "(1, Id)"),
        FreqCoord::ONE,
        shifted,
        FreqCoord {
            one: -wrap,
            alpha: 2,
        },
    );
    let renorm = base_change(&phi, cf_matrix(doubled))?;
    let samples: Vec<_> = (0..PROBE_GRID)
        .map(|j| renorm.first.value(j as f64 / PROBE_GRID as f64))
        .collect();
    let reference = constant_normalizer(renorm.first.freq, mean_element(&samples))?;
    let n = normalize_action(&renorm, seam_order, Some(reference))?;
    let beta = renorm.first.freq;
    let second = n.action.second.clone();
    let nf_periodicity_defect = sup_on(256, 1.0, |x| {
        second.value(x + beta).projective_distance(&second.value(x))
    });
    Ok(SecondIterateCrossCheck {
        first_freq: renorm.first_coord,
        second_freq: renorm.second_coord,
        first_defect: n.first_defect,
        nf_periodicity_defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::{normal_form_cocycle, NormalFormParams};
    use num_complex::Complex64;

    const GOLDEN: f64 = 0.618_033_988_749_894_9;

    fn normal_form(z: f64) -> Cocycle {
        normal_form_cocycle(NormalFormParams {
            alpha_n: GOLDEN,
            z_n: Complex64::new(z, 0.0),
        })
    }

    #[test]
    fn make_action_examples() {
        let k = su2_exp(Su2Vector::new(0.3, Complex64::new(0.1, 0.2)));
        assert_eq!(
            make_action(&Cocycle::constant(GOLDEN, k))
                .unwrap()
                .commutation_defect,
            0.0
        );
        assert!(
            make_action(&Cocycle::model(GOLDEN))
                .unwrap()
                .commutation_defect
                < 1e-10
        );
        let bad = Cocycle::new(GOLDEN, GroupMap::derived(1, |x| e_half(x / 1.5)), "bad");
        assert!(matches!(
            make_action(&bad),
            Err(RenormError::NotPeriodic(_))
        ));
    }

    #[test]
    fn base_change_examples() {
        let phi = make_action(&Cocycle::model(GOLDEN)).unwrap();
        let same = base_change(&phi, [[1, 0], [0, 1]]).unwrap();
        assert!(same.distance_to(&phi, 1.0, 64) < 1e-15);
        assert!(matches!(
            base_change(&phi, [[2, 0], [0, 1]]),
            Err(RenormError::NotUnimodular(_))
        ));

        let trivial = make_action(&Cocycle::constant(GOLDEN, GroupElement::IDENTITY)).unwrap();
        let r = base_change(&trivial, cf_matrix(GOLDEN)).unwrap();
        assert_eq!(r.first_coord, FreqCoord::ALPHA);
        assert_eq!(r.second_coord, FreqCoord { one: 1, alpha: -1 });
        assert!((r.second.freq - (1.0 - GOLDEN)).abs() < 1e-16);

        let c = Cocycle::model(GOLDEN);
        let r = base_change(&phi, cf_matrix(GOLDEN)).unwrap();
        for j in 0..64 {
            let x = j as f64 / 64.0;
            assert!(r.second.value(x).distance(&c.iterate(-1, x)) < 1e-14);
            assert!(r.first.value(x).distance(&c.value(x)) < 1e-15);
        }
        assert!(r.commutation_defect < 1e-8);
    }

    #[test]
    fn base_change_round_trip() {
        for alpha in [GOLDEN, 0.3, 0.41421356237309503] {
            let phi = make_action(&normal_form(0.05).with_freq(alpha)).unwrap();
            let m = cf_matrix(alpha);
            let there = base_change(&phi, m).unwrap();
            let back = base_change(&there, unimodular_inverse(&m).unwrap()).unwrap();
            assert!(back.distance_to(&phi, 1.0, 64) < 1e-8);
            assert_eq!(back.first_coord, phi.first_coord);
            assert_eq!(back.second_coord, phi.second_coord);
        }
    }

    #[test]
    fn smoothstep_is_flat_at_both_ends() {
        for order in 0..5 {
            assert_eq!(smoothstep(order, 0.0), 0.0);
            assert!((smoothstep(order, 1.0) - 1.0).abs() < 1e-14);
            assert!((smoothstep(order, 0.5) - 0.5).abs() < 1e-14);
            let h = 1e-3;
            if order >= 1 {
                assert!(smoothstep(order, h) / h < 1e-2);
                assert!((1.0 - smoothstep(order, 1.0 - h)) / h < 1e-2);
            }
        }
    }

    #[test]
    fn normalize_identity_and_constant() {
        let id = make_action(&Cocycle::constant(GOLDEN, GroupElement::IDENTITY)).unwrap();
        let r = base_change(&id, cf_matrix(GOLDEN)).unwrap();
        let n = normalize_action(&r, 2, None).unwrap();
        for j in 0..32 {
            let x = 3.0 * j as f64 / 32.0 - 1.0;
            assert!(n.b.eval(x).distance(&GroupElement::IDENTITY) < 1e-15);
            assert!(n.nf.eval(x).distance(&GroupElement::IDENTITY) < 1e-15);
        }

        let k = su2_exp(Su2Vector::new(0.3, Complex64::new(0.1, 0.2)));
        let a = Z2Action::new(
            GOLDEN,
            Cocycle::constant(GOLDEN, k),
            FreqCoord::ALPHA,
            Cocycle::new(1.0, GroupMap::identity(), "(1, Id)"),
            FreqCoord::ONE,
        );
        let n = normalize_action(&a, 2, None).unwrap();
        // closed form: B(x) = exp(−(x/α) log K), NF = exp(−log K / α)
        let expect = su2_exp(su2_log(k).unwrap().scale(-1.0 / GOLDEN));
        for j in 0..32 {
            assert!(n.nf.eval(j as f64 / 32.0).distance(&expect) < 1e-13);
        }
        assert!(n.first_defect < 1e-13);
    }

    #[test]
    fn normal_form_nf_is_alpha_periodic() {
        let phi = make_action(&normal_form(0.01)).unwrap();
        let r = base_change(&phi, cf_matrix(GOLDEN)).unwrap();
        let n = normalize_action(&r, 2, None).unwrap();
        assert!(
            n.nf_periodicity_defect < 1e-7,
            "{}",
            n.nf_periodicity_defect
        );
        assert!(n.first_defect < 1e-7);
        assert!(n.seam_defect < 1e-3);
    }

    #[test]
    fn seam_failure_is_reported() {
        let phi = make_action(&normal_form(0.01)).unwrap();
        let r = base_change(&phi, cf_matrix(GOLDEN)).unwrap();
        let far = GroupMap::derived(1, |x| e_half(3.0 * x) * GroupElement::a());
        assert!(matches!(
            normalize_action(&r, 2, Some(far)),
            Err(RenormError::SeamMatchFailed(_))
        ));
    }

    #[test]
    fn pipeline_on_unperturbed_normal_form() {
        let out = two_periodic_pipeline(&normal_form(0.0), &PipelineConfig::default()).unwrap();
        assert!(
            out.distance_to_constant() < 1e-8,
            "{:?}",
            out.trace.distances
        );
    }

    #[test]
    fn pipeline_distance_decreases_for_small_obstruction() {
        let out = two_periodic_pipeline(&normal_form(1e-2), &PipelineConfig::default()).unwrap();
        let d: Vec<f64> = out
            .trace
            .distances
            .iter()
            .map(|r| r.distance_to_constant)
            .collect();
        assert!(d[0] > 1e-3, "{d:?}");
        assert!(d.windows(2).all(|w| w[1] < w[0]), "{d:?}");
        assert!(out.distance_to_constant() <= 1e-3);
        assert!(out.trace.nf_periodicity_defect < 1e-7);
        assert!(out.trace.word_vs_direct < 1e-10);
        assert!(out.action.commutation_defect < 1e-8);
    }

    #[test]
    fn second_iterate_cross_check_normalizes() {
        for z in [0.0, 1e-2] {
            let out = second_iterate_cross_check(&normal_form(z), 4).unwrap();
            assert_eq!(out.first_freq, FreqCoord { one: -1, alpha: 2 });
            assert!(out.first_defect < 1e-7);
            assert!(out.nf_periodicity_defect < 1e-7, "{out:?}");
        }
    }

    #[test]
    fn pipeline_rejects_trivial_homotopy() {
        let c = Cocycle::constant(GOLDEN, GroupElement::IDENTITY);
        let err = two_periodic_pipeline(&c, &PipelineConfig::default()).unwrap_err();
        assert_eq!(err.stage, Stage::Preconditions);
    }

    impl Cocycle {
        fn with_freq(mut self, alpha: f64) -> Cocycle {
            self.freq = alpha;
            self
        }
    }
}
