//! Finitely supported Fourier series on circles `R/pZ`.
//!
//! Coefficient space is the source of truth: frequency `k` is the character
//! `e^{2iπkx/p}`, and grids are derived views produced by FFT.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::Su2Vector;

/// Relative energy above the target band that `analyze` tolerates.
pub const ALIASING_TOLERANCE: f64 = 1e-8;

/// Absolute out-of-band energy always tolerated; rounding noise on unit-size
/// group elements sits far below it.
pub const ALIASING_FLOOR: f64 = 1e-26;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FourierError {
    #[error("aliasing detected: {ratio:.3e} of the energy lies above |k| = {support}")]
    AliasingDetected { ratio: f64, support: usize },
    #[error("{samples} samples cannot resolve support {support} (need at least {need})", need = 2 * support + 1)]
    TooFewSamples { samples: usize, support: usize },
    #[error("real-valued symmetry violated at k = {k} (defect {defect:.3e})")]
    SymmetryViolated { k: i64, defect: f64 },
    #[error("period mismatch: {0} vs {1}")]
    PeriodMismatch(u32, u32),
    #[error("malformed map: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Symmetry {
    #[serde(rename = "REAL_VALUED")]
    RealValued,
    #[serde(rename = "NONE")]
    None,
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn fft_in_place(buf: &mut [Complex64], inverse: bool) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        let plan = if inverse {
            p.plan_fft_inverse(buf.len())
        } else {
            p.plan_fft_forward(buf.len())
        };
        plan.process(buf);
    });
}

/// Finite Fourier series `Σ_{|k| ≤ N} c_k e^{2iπkx/p}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FourierWire", into = "FourierWire")]
pub struct FourierMap {
    period: u32,
    support: usize,
    // index k + support
    coeffs: Vec<Complex64>,
    symmetry: Symmetry,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FourierWire {
    period: u32,
    entries: Vec<(i64, f64, f64)>,
    symmetry: Symmetry,
}

impl From<FourierMap> for FourierWire {
    fn from(f: FourierMap) -> Self {
        FourierWire {
            period: f.period,
            entries: f.entries().map(|(k, c)| (k, c.re, c.im)).collect(),
            symmetry: f.symmetry,
        }
    }
}

impl TryFrom<FourierWire> for FourierMap {
    type Error = FourierError;
    fn try_from(w: FourierWire) -> Result<Self, FourierError> {
        if w.period == 0 {
            return Err(FourierError::Malformed("period must be positive".into()));
        }
        FourierMap::from_entries(
            w.period,
            w.entries
                .into_iter()
                .map(|(k, re, im)| (k, Complex64::new(re, im))),
            w.symmetry,
        )
    }
}

impl FourierMap {
    pub fn zero(period: u32, symmetry: Symmetry) -> Self {
        Self {
            period,
            support: 0,
            coeffs: vec![Complex64::new(0.0, 0.0)],
            symmetry,
        }
    }

    pub fn constant(period: u32, c: Complex64, symmetry: Symmetry) -> Self {
        Self {
            period,
            support: 0,
            coeffs: vec![c],
            symmetry,
        }
    }

    /// Builds a map from `(k, c_k)` pairs; duplicate `k` accumulate.
    pub fn from_entries(
        period: u32,
        entries: impl IntoIterator<Item = (i64, Complex64)>,
        symmetry: Symmetry,
    ) -> Result<Self, FourierError> {
        let entries: Vec<_> = entries.into_iter().collect();
        let support = entries
            .iter()
            .map(|(k, _)| k.unsigned_abs() as usize)
            .max()
            .unwrap_or(0);
        let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * support + 1];
        for (k, c) in entries {
            coeffs[(k + support as i64) as usize] += c;
        }
        let map = Self {
            period,
            support,
            coeffs,
            symmetry,
        };
        map.check_symmetry(1e-12)?;
        Ok(map)
    }

    /// Builds a map from a dense coefficient vector indexed `k + N`.
    pub fn from_dense(
        period: u32,
        coeffs: Vec<Complex64>,
        symmetry: Symmetry,
    ) -> Result<Self, FourierError> {
        if coeffs.len().is_multiple_of(2) {
            return Err(FourierError::Malformed(
                "dense coefficient vector must have odd length".into(),
            ));
        }
        let map = Self {
            period,
            support: coeffs.len() / 2,
            coeffs,
            symmetry,
        };
        map.check_symmetry(1e-12)?;
        Ok(map)
    }

    fn check_symmetry(&self, tol: f64) -> Result<(), FourierError> {
        if self.symmetry != Symmetry::RealValued {
            return Ok(());
        }
        let scale = self.max_coeff().max(1.0);
        for k in 0..=self.support as i64 {
            let defect = (self.coeff(-k) - self.coeff(k).conj()).norm();
            if defect > tol * scale {
                return Err(FourierError::SymmetryViolated { k, defect });
            }
        }
        Ok(())
    }

    pub fn period(&self) -> u32 {
        self.period
    }

    pub fn support(&self) -> usize {
        self.support
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn coeff(&self, k: i64) -> Complex64 {
        if k.unsigned_abs() as usize > self.support {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(k + self.support as i64) as usize]
        }
    }

    /// `(k, c_k)` over the stored band.
    pub fn entries(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let n = self.support as i64;
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(i, c)| (i as i64 - n, *c))
    }

    pub fn max_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Exact finite sum at `x`.
    pub fn eval(&self, x: f64) -> Complex64 {
        let w = 2.0 * PI * x / self.period as f64;
        self.entries()
            .filter(|(_, c)| *c != Complex64::new(0.0, 0.0))
            .map(|(k, c)| c * Complex64::from_polar(1.0, k as f64 * w))
            .sum()
    }

    /// Real part of the evaluation; exact for real-valued maps up to rounding.
    pub fn eval_real(&self, x: f64) -> f64 {
        self.eval(x).re
    }

    /// Values on the uniform grid `x_j = j·p/M`, `j = 0..M`.
    pub fn sample(&self, m: usize) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for (k, c) in self.entries() {
            buf[k.rem_euclid(m as i64) as usize] += c;
        }
        fft_in_place(&mut buf, true);
        buf
    }

    /// The map `x ↦ f(x + shift)`: coefficients rotated by `e^{2iπk·shift/p}`.
    pub fn shifted(&self, shift: f64) -> Self {
        let w = 2.0 * PI * shift / self.period as f64;
        let mut out = self.clone();
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            let k = i as f64 - self.support as f64;
            *c *= Complex64::from_polar(1.0, k * w);
        }
        out
    }

    /// The map `x ↦ conj(f(x))`.
    pub fn conjugate(&self) -> Self {
        let mut out = self.clone();
        out.coeffs = self.coeffs.iter().rev().map(|c| c.conj()).collect();
        out
    }

    /// The same function viewed on a circle of period `p·factor` (`k ↦ factor·k`).
    pub fn embed_period(&self, factor: u32) -> Self {
        let entries = self.entries().map(|(k, c)| (k * factor as i64, c));
        Self::from_entries(self.period * factor, entries, self.symmetry)
            .expect("embedding preserves symmetry")
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        for c in out.coeffs.iter_mut() {
            *c *= s;
        }
        if s.im != 0.0 {
            out.symmetry = Symmetry::None;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self, FourierError> {
        if self.period != other.period {
            return Err(FourierError::PeriodMismatch(self.period, other.period));
        }
        let n = self.support.max(other.support) as i64;
        let symmetry =
            if self.symmetry == Symmetry::RealValued && other.symmetry == Symmetry::RealValued {
                Symmetry::RealValued
            } else {
                Symmetry::None
            };
        Self::from_entries(
            self.period,
            (-n..=n).map(|k| (k, self.coeff(k) + other.coeff(k))),
            symmetry,
        )
    }

    /// Keeps `|k| ≤ n`.
    pub fn truncate(&self, n: usize) -> Self {
        if n >= self.support {
            return self.clone();
        }
        let nn = n as i64;
        Self::from_entries(
            self.period,
            (-nn..=nn).map(|k| (k, self.coeff(k))),
            self.symmetry,
        )
        .expect("truncation preserves symmetry")
    }

    /// `ℓ²` norm of the coefficients with `|k| > n`.
    pub fn tail_norm(&self, n: usize) -> f64 {
        self.entries()
            .filter(|(k, _)| k.unsigned_abs() as usize > n)
            .map(|(_, c)| c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Sup of `|f|` over the uniform grid of the given size.
    pub fn norm_c0(&self, grid_size: usize) -> f64 {
        self.sample(grid_size.max(1))
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }

    /// `(Σ (1+|k|)^{2s} |c_k|²)^{1/2}`.
    pub fn norm_sobolev(&self, s: f64) -> f64 {
        self.entries()
            .map(|(k, c)| (1.0 + k.abs() as f64).powf(2.0 * s) * c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Pointwise product, computed on a grid at least 4× the combined support and
    /// re-analyzed with the aliasing guard.
    pub fn multiply(&self, other: &Self) -> Result<Self, FourierError> {
        if self.period != other.period {
            return Err(FourierError::PeriodMismatch(self.period, other.period));
        }
        let n = self.support + other.support;
        let m = (4 * (n + 1)).next_power_of_two();
        let a = self.sample(m);
        let b = other.sample(m);
        let prod: Vec<_> = a.iter().zip(b.iter()).map(|(x, y)| x * y).collect();
        let symmetry =
            if self.symmetry == Symmetry::RealValued && other.symmetry == Symmetry::RealValued {
                Symmetry::RealValued
            } else {
                Symmetry::None
            };
        analyze(&prod, self.period, n, symmetry)
    }
}

/// Discrete Fourier analysis of `M` samples on the uniform period-`p` grid, keeping
/// `|k| ≤ n`. Fails if more than [`ALIASING_TOLERANCE`] of the energy sits above `n`
/// and that energy exceeds [`ALIASING_FLOOR`].
pub fn analyze(
    samples: &[Complex64],
    period: u32,
    n: usize,
    symmetry: Symmetry,
) -> Result<FourierMap, FourierError> {
    let (map, ratio) = analyze_with_leakage(samples, period, n, symmetry)?;
    let total: f64 = samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / samples.len() as f64;
    if ratio > ALIASING_TOLERANCE && ratio * total > ALIASING_FLOOR {
        return Err(FourierError::AliasingDetected { ratio, support: n });
    }
    Ok(map)
}

/// As [`analyze`], but returns the out-of-band energy ratio instead of failing on it.
pub fn analyze_with_leakage(
    samples: &[Complex64],
    period: u32,
    n: usize,
    symmetry: Symmetry,
) -> Result<(FourierMap, f64), FourierError> {
    let m = samples.len();
    if m < 2 * n + 1 {
        return Err(FourierError::TooFewSamples {
            samples: m,
            support: n,
        });
    }
    let mut buf = samples.to_vec();
    fft_in_place(&mut buf, false);
    let inv = 1.0 / m as f64;
    for c in buf.iter_mut() {
        *c *= inv;
    }
    let total: f64 = buf.iter().map(|c| c.norm_sqr()).sum();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * n + 1];
    let mut kept = 0.0;
    for k in -(n as i64)..=n as i64 {
        let c = buf[k.rem_euclid(m as i64) as usize];
        kept += c.norm_sqr();
        coeffs[(k + n as i64) as usize] = c;
    }
    if symmetry == Symmetry::RealValued {
        for k in 0..=n {
            let plus = coeffs[n + k];
            let minus = coeffs[n - k];
            let avg = (plus + minus.conj()) * 0.5;
            coeffs[n + k] = avg;
            coeffs[n - k] = avg.conj();
        }
    }
    let ratio = if total > 0.0 {
        ((total - kept) / total).max(0.0)
    } else {
        0.0
    };
    Ok((
        FourierMap {
            period,
            support: n,
            coeffs,
            symmetry,
        },
        ratio,
    ))
}

/// Inverse of [`analyze`] at one point: the exact finite sum.
pub fn synthesize(f: &FourierMap, x: f64) -> Complex64 {
    f.eval(x)
}

/// An su(2)-valued map `x ↦ {U_t(x), U_z(x)}` with real-valued diagonal part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Su2Field {
    pub t: FourierMap,
    pub z: FourierMap,
}

impl Su2Field {
    pub fn zero(period: u32) -> Self {
        Self {
            t: FourierMap::zero(period, Symmetry::RealValued),
            z: FourierMap::zero(period, Symmetry::None),
        }
    }

    pub fn period(&self) -> u32 {
        self.t.period
    }

    pub fn support(&self) -> usize {
        self.t.support.max(self.z.support)
    }

    pub fn eval(&self, x: f64) -> Su2Vector {
        Su2Vector::new(self.t.eval_real(x), self.z.eval(x))
    }

    pub fn shifted(&self, shift: f64) -> Self {
        Self {
            t: self.t.shifted(shift),
            z: self.z.shifted(shift),
        }
    }

    pub fn truncate(&self, n: usize) -> Self {
        Self {
            t: self.t.truncate(n),
            z: self.z.truncate(n),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, FourierError> {
        Ok(Self {
            t: self.t.add(&other.t)?,
            z: self.z.add(&other.z)?,
        })
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            t: self.t.scale(Complex64::new(s, 0.0)),
            z: self.z.scale(Complex64::new(s, 0.0)),
        }
    }

    /// Sup over the grid of the su(2) norm.
    pub fn norm_c0(&self, grid_size: usize) -> f64 {
        let t = self.t.sample(grid_size);
        let z = self.z.sample(grid_size);
        t.iter()
            .zip(z.iter())
            .map(|(a, b)| (a.re * a.re + b.norm_sqr()).sqrt())
            .fold(0.0, f64::max)
    }

    pub fn norm_sobolev(&self, s: f64) -> f64 {
        (self.t.norm_sobolev(s).powi(2) + self.z.norm_sobolev(s).powi(2)).sqrt()
    }

    /// `ℓ²` mass of both components above `|k| = n`.
    pub fn tail_norm(&self, n: usize) -> f64 {
        (self.t.tail_norm(n).powi(2) + self.z.tail_norm(n).powi(2)).sqrt()
    }

    /// Analysis of su(2) samples on the uniform grid.
    pub fn analyze(samples: &[Su2Vector], period: u32, n: usize) -> Result<Self, FourierError> {
        let t: Vec<_> = samples.iter().map(|v| Complex64::new(v.t, 0.0)).collect();
        let z: Vec<_> = samples.iter().map(|v| v.z).collect();
        Ok(Self {
            t: analyze(&t, period, n, Symmetry::RealValued)?,
            z: analyze(&z, period, n, Symmetry::None)?,
        })
    }
}

/// Pairs a real-valued diagonal map with an off-diagonal map into an su(2)-valued map.
pub fn su2_map(u_t: &FourierMap, u_z: &FourierMap) -> Result<Su2Field, FourierError> {
    if u_t.symmetry != Symmetry::RealValued {
        return Err(FourierError::SymmetryViolated {
            k: 0,
            defect: f64::NAN,
        });
    }
    if u_t.period != u_z.period {
        return Err(FourierError::PeriodMismatch(u_t.period, u_z.period));
    }
    Ok(Su2Field {
        t: u_t.clone(),
        z: u_z.clone(),
    })
}
