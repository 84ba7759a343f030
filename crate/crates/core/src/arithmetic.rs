//! Continued fractions, the Gauss map and finite-window Diophantine certificates.
//!
//! The conditions checked here quantify over all nonzero integers `k`; a numerical
//! certificate can only cover `1 ≤ |k| ≤ K`, so every check reports the worst margin
//! over its window instead of a bare boolean. Both margins are even in `k`, so only
//! positive `k` are scanned.
//!
//! The Gauss map loses roughly `2·log₁₀(1/x)` digits per step, so it runs on a
//! 256-bit fixed-point representation with an explicit error bound.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Fractional bits of the fixed-point representation (~77 decimal digits).
pub const WORKING_BITS: u32 = 256;

/// Remainders below this stop the continued-fraction expansion.
pub const REMAINDER_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ArithmeticError {
    #[error("Gauss iteration lost more than half the working precision at step {step}")]
    PrecisionExhausted { step: usize },
    #[error("could not parse frequency {0:?}")]
    Parse(String),
    #[error("frequency must lie in (0, 1), got {0}")]
    OutOfRange(f64),
    #[error("precondition failed: {0}")]
    Precondition(String),
}

/// Distance from `x` to the nearest integer.
pub fn dist_z(x: f64) -> f64 {
    (x - x.round()).abs()
}

/// A frequency in `(0, 1)` held to [`WORKING_BITS`] fractional bits.
#[derive(Clone, PartialEq, Eq)]
pub struct Frequency {
    // value = mantissa / 2^WORKING_BITS
    mantissa: BigInt,
    // absolute error bound in units of 2^-WORKING_BITS
    error_ulps: u64,
}

impl fmt::Debug for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Frequency({:.17})", self.to_f64())
    }
}

impl Frequency {
    fn one() -> BigInt {
        BigInt::one() << WORKING_BITS
    }

    /// Exact conversion of a double (every finite double is a dyadic rational).
    pub fn from_f64(x: f64) -> Result<Self, ArithmeticError> {
        if !(x > 0.0 && x < 1.0) {
            return Err(ArithmeticError::OutOfRange(x));
        }
        let bits = x.to_bits();
        let exponent = ((bits >> 52) & 0x7ff) as i64;
        let fraction = bits & ((1u64 << 52) - 1);
        let (m, e) = if exponent == 0 {
            (fraction, -1074)
        } else {
            (fraction | (1u64 << 52), exponent - 1075)
        };
        // x = m · 2^e
        let shift = WORKING_BITS as i64 + e;
        let mantissa = if shift >= 0 {
            BigInt::from(m) << shift as usize
        } else {
            BigInt::from(m) >> (-shift) as usize
        };
        Ok(Self {
            mantissa,
            error_ulps: if shift >= 0 { 0 } else { 1 },
        })
    }

    /// `(√5 − 1)/2`.
    pub fn golden() -> Self {
        // (sqrt(5·4^W) - 2^W) / 2
        let five = BigInt::from(5) << (2 * WORKING_BITS) as usize;
        let root = five.sqrt();
        Self {
            mantissa: (root - Self::one()) >> 1usize,
            error_ulps: 1,
        }
    }

    /// `√2 − 1`.
    pub fn silver() -> Self {
        let two = BigInt::from(2) << (2 * WORKING_BITS) as usize;
        Self {
            mantissa: two.sqrt() - Self::one(),
            error_ulps: 1,
        }
    }

    /// Parses a decimal literal such as `0.41421356237309504880168872` exactly
    /// (to one ulp), or one of the names `golden`, `silver`.
    pub fn parse(s: &str) -> Result<Self, ArithmeticError> {
        let s = s.trim();
        match s {
            "golden" => return Ok(Self::golden()),
            "silver" => return Ok(Self::silver()),
            _ => {}
        }
        let err = || ArithmeticError::Parse(s.to_string());
        let (int_part, frac_part) = s.split_once('.').unwrap_or((s, ""));
        if !int_part.chars().all(|c| c.is_ascii_digit())
            || !frac_part.chars().all(|c| c.is_ascii_digit())
            || (int_part.is_empty() && frac_part.is_empty())
        {
            return Err(err());
        }
        let digits: BigInt = format!("{int_part}{frac_part}")
            .parse()
            .map_err(|_| err())?;
        let denom = BigInt::from(10).pow(frac_part.len() as u32);
        let (mantissa, rem) = (digits << WORKING_BITS as usize).div_rem(&denom);
        let value = Self {
            mantissa,
            error_ulps: u64::from(!rem.is_zero()),
        };
        let v = value.to_f64();
        if !(v > 0.0 && v < 1.0) {
            return Err(ArithmeticError::OutOfRange(v));
        }
        Ok(value)
    }

    pub fn to_f64(&self) -> f64 {
        // keep 64 significant bits before the conversion
        let bits = self.mantissa.bits();
        if bits <= 64 {
            return self.mantissa.to_f64().unwrap_or(0.0) / 2f64.powi(WORKING_BITS as i32);
        }
        let drop = bits - 64;
        let top = (&self.mantissa >> drop as usize).to_f64().unwrap_or(0.0);
        top * 2f64.powi(drop as i32 - WORKING_BITS as i32)
    }

    /// Absolute error bound of the stored value.
    pub fn error_bound(&self) -> f64 {
        self.error_ulps as f64 * 2f64.powi(-(WORKING_BITS as i32))
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    /// One Gauss step `x ↦ {1/x}`, returning the partial quotient `⌊1/x⌋` and the
    /// remainder. Errors once the propagated error bound exceeds half the working bits.
    pub fn gauss_step(&self, step: usize) -> Result<(u64, Frequency), ArithmeticError> {
        let scaled = Self::one() << WORKING_BITS as usize;
        let q = scaled / &self.mantissa;
        let (a, frac) = q.div_rem(&Self::one());
        let a = a
            .to_u64()
            .ok_or(ArithmeticError::PrecisionExhausted { step })?;
        // error of 1/x is err/x², plus one ulp of rounding
        let x = self.to_f64();
        let grown = self.error_ulps as f64 / (x * x) + 1.0;
        let limit = 2f64.powi(WORKING_BITS as i32 / 2);
        if !grown.is_finite() || grown > limit {
            return Err(ArithmeticError::PrecisionExhausted { step });
        }
        Ok((
            a,
            Frequency {
                mantissa: frac,
                error_ulps: grown.ceil() as u64,
            },
        ))
    }
}

/// Why a continued-fraction expansion stopped before the requested depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CfStop {
    Complete,
    /// A remainder fell below [`REMAINDER_FLOOR`] (rational or near-rational input).
    DepthTruncated {
        at: usize,
    },
    PrecisionExhausted {
        at: usize,
    },
    /// The next convergent would overflow 128-bit integers.
    ConvergentOverflow {
        at: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuedFraction {
    pub alpha: f64,
    pub partial_quotients: Vec<u64>,
    /// `(p_n, q_n)` for `n = 1..=d`.
    pub convergents: Vec<(i128, i128)>,
    pub stop: CfStop,
}

impl ContinuedFraction {
    pub fn depth(&self) -> usize {
        self.partial_quotients.len()
    }

    /// `p_n q_{n-1} − p_{n-1} q_n`, with `(p_0, q_0) = (0, 1)`.
    pub fn determinant(&self, n: usize) -> i128 {
        let (p, q) = self.convergents[n - 1];
        let (pp, qp) = if n == 1 {
            (0, 1)
        } else {
            self.convergents[n - 2]
        };
        p * qp - pp * q
    }
}

/// Expands `alpha` by repeated Gauss steps.
pub fn continued_fraction(alpha: &Frequency, depth: usize) -> ContinuedFraction {
    let mut quotients = Vec::with_capacity(depth);
    let mut convergents = Vec::with_capacity(depth);
    let (mut p_prev, mut q_prev): (i128, i128) = (1, 0);
    let (mut p, mut q): (i128, i128) = (0, 1);
    let mut x = alpha.clone();
    let mut stop = CfStop::Complete;
    for n in 1..=depth {
        if x.is_zero() || x.to_f64() < REMAINDER_FLOOR {
            stop = CfStop::DepthTruncated { at: n - 1 };
            break;
        }
        let (a, next) = match x.gauss_step(n) {
            Ok(v) => v,
            Err(_) => {
                stop = CfStop::PrecisionExhausted { at: n - 1 };
                break;
            }
        };
        let ai = a as i128;
        let pn = ai.checked_mul(p).and_then(|v| v.checked_add(p_prev));
        let qn = ai.checked_mul(q).and_then(|v| v.checked_add(q_prev));
        let (Some(pn), Some(qn)) = (pn, qn) else {
            stop = CfStop::ConvergentOverflow { at: n - 1 };
            break;
        };
        quotients.push(a);
        convergents.push((pn, qn));
        (p_prev, q_prev, p, q) = (p, q, pn, qn);
        x = next;
    }
    if stop == CfStop::Complete && quotients.len() == depth {
        // a vanishing final remainder means the expansion terminated exactly here
        if x.is_zero() {
            stop = CfStop::DepthTruncated { at: depth };
        }
    }
    ContinuedFraction {
        alpha: alpha.to_f64(),
        partial_quotients: quotients,
        convergents,
        stop,
    }
}

/// The first `count + 1` Gauss iterates `α, G(α), …, Gⁿ(α)` as doubles.
pub fn gauss_orbit(alpha: &Frequency, count: usize) -> Result<Vec<f64>, ArithmeticError> {
    let mut out = Vec::with_capacity(count + 1);
    let mut x = alpha.clone();
    out.push(x.to_f64());
    for n in 1..=count {
        if x.is_zero() {
            return Err(ArithmeticError::PrecisionExhausted { step: n });
        }
        let (_, next) = x.gauss_step(n)?;
        out.push(next.to_f64());
        x = next;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Condition {
    /// `|kα|_Z ≥ γ⁻¹/|k|^τ`
    #[serde(rename = "DC")]
    Dc,
    /// `|kα − 1/2|_Z ≥ γ⁻¹/|k|^τ`
    #[serde(rename = "DC_TILDE")]
    DcTilde,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiophantineReport {
    pub condition: Condition,
    pub gamma: f64,
    pub tau: f64,
    #[serde(rename = "depth_K")]
    pub depth_k: u32,
    pub min_margin: f64,
    pub worst_k: i64,
    pub satisfied: bool,
}

fn scan(condition: Condition, alpha: f64, gamma: f64, tau: f64, k_max: u32) -> DiophantineReport {
    let shift = match condition {
        Condition::Dc => 0.0,
        Condition::DcTilde => 0.5,
    };
    let mut min_margin = f64::INFINITY;
    let mut worst_k = 1;
    for k in 1..=k_max.max(1) {
        let kf = k as f64;
        let margin = dist_z(kf * alpha - shift) - 1.0 / (gamma * kf.powf(tau));
        if margin < min_margin {
            min_margin = margin;
            worst_k = k as i64;
        }
    }
    DiophantineReport {
        condition,
        gamma,
        tau,
        depth_k: k_max,
        min_margin,
        worst_k,
        satisfied: min_margin >= 0.0,
    }
}

/// Finite-window certificate for `α ∈ DC(γ, τ)`.
pub fn check_dc(alpha: f64, gamma: f64, tau: f64, k_max: u32) -> DiophantineReport {
    scan(Condition::Dc, alpha, gamma, tau, k_max)
}

/// Finite-window certificate for the half-shifted condition `|kα − 1/2|_Z ≥ γ⁻¹/|k|^τ`.
pub fn check_dc_tilde(alpha: f64, gamma: f64, tau: f64, k_max: u32) -> DiophantineReport {
    scan(Condition::DcTilde, alpha, gamma, tau, k_max)
}

/// Half-shifted certificates along the Gauss orbit `Gⁿ(α)`, `n = 0..=gauss_depth`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceWindow {
    pub reports: Vec<(usize, DiophantineReport)>,
}

impl RecurrenceWindow {
    /// Indices `n` whose iterate passes the window.
    pub fn hits(&self) -> Vec<usize> {
        self.reports
            .iter()
            .filter(|(_, r)| r.satisfied)
            .map(|(n, _)| *n)
            .collect()
    }
}

/// Finite surrogate of "`Gⁿ(α)` satisfies the half-shifted condition infinitely often":
/// counts hits over a window of Gauss iterates.
pub fn check_rdc_tilde_finite(
    alpha: &Frequency,
    gamma: f64,
    tau: f64,
    gauss_depth: usize,
    k_max: u32,
) -> Result<RecurrenceWindow, ArithmeticError> {
    let orbit = gauss_orbit(alpha, gauss_depth)?;
    Ok(RecurrenceWindow {
        reports: orbit
            .into_iter()
            .enumerate()
            .map(|(n, x)| (n, check_dc_tilde(x, gamma, tau, k_max)))
            .collect(),
    })
}

/// Both sides of the doubling implication `α ∈ D̃C(γ,τ) ⇒ 2α ∈ DC(γ/2,τ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoublingProbe {
    pub alpha: f64,
    pub hypothesis: DiophantineReport,
    pub conclusion: DiophantineReport,
}

impl DoublingProbe {
    /// A counterexample: hypothesis certified, conclusion refuted.
    pub fn is_counterexample(&self) -> bool {
        self.hypothesis.satisfied && !self.conclusion.satisfied
    }
}

pub fn doubling_probe(alpha: f64, gamma: f64, tau: f64, k_max: u32) -> DoublingProbe {
    let doubled = (2.0 * alpha).rem_euclid(1.0);
    DoublingProbe {
        alpha,
        hypothesis: check_dc_tilde(alpha, gamma, tau, k_max),
        conclusion: check_dc(doubled, gamma / 2.0, tau, k_max),
    }
}

/// Falsification probe for the doubling implication. Refuses to run when the
/// hypothesis `α ∈ D̃C(γ,τ)` is not certified on the window.
pub fn doubling_lemma_check(
    alpha: f64,
    gamma: f64,
    tau: f64,
    k_max: u32,
) -> Result<bool, ArithmeticError> {
    let probe = doubling_probe(alpha, gamma, tau, k_max);
    if !probe.hypothesis.satisfied {
        return Err(ArithmeticError::Precondition(format!(
            "alpha = {alpha} fails the half-shifted window (worst k = {}, margin {:.3e})",
            probe.hypothesis.worst_k, probe.hypothesis.min_margin
        )));
    }
    Ok(probe.conclusion.satisfied)
}

/// Lower bound `4·γ⁻¹/N^τ` on the diagonal small divisors `|e^{2iπkα} + 1|`, `|k| ≤ N`,
/// implied by a passing half-shifted certificate.
pub fn diagonal_guard(gamma: f64, tau: f64, n: usize) -> f64 {
    4.0 / (gamma * (n.max(1) as f64).powf(tau))
}
