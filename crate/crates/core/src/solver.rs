//! Roots `T_k^±` of the truncated pressure functions, and `k`-sweeps.

use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::alphabet::Alphabet;
use crate::enumeration::{enumerate_weights, EnumMode, EnumOptions};
use crate::error::{Error, Result};
use crate::pressure::{PressureCurve, Sign};

/// Root tolerance in `t` when the weights are stored.
pub const DEFAULT_TOL_STORED: f64 = 1e-10;
/// Root tolerance in `t` when the tree is re-traversed per evaluation.
pub const DEFAULT_TOL_STREAMED: f64 = 1e-6;
/// Doubling of the upper bracket end stops here.
pub const DEFAULT_T_MAX: f64 = 1024.0;

/// A certified root: `P(lo) ≥ 0 > P(hi)` and `hi − lo ≤ tol`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootBracket {
    pub root: f64,
    pub lo: f64,
    pub hi: f64,
    pub p_lo: f64,
    pub p_hi: f64,
    pub iterations: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum NoRoot {
    /// Some summands do not decay in `t`, so the sum stays above one.
    NotMonotone { offending_words: u64 },
    /// No sign change was found below `t_max`.
    BracketNotFound { t_max: f64 },
}

impl NoRoot {
    pub fn message(&self) -> String {
        match self {
            NoRoot::NotMonotone { offending_words } => format!(
                "{offending_words} word(s) have summands that do not decay in t; increase k"
            ),
            NoRoot::BracketNotFound { t_max } => {
                format!("pressure stays nonnegative up to t = {t_max}")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RootOutcome {
    Root(RootBracket),
    NoRoot(NoRoot),
}

impl RootOutcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            RootOutcome::Root(b) => Some(b.root),
            RootOutcome::NoRoot(_) => None,
        }
    }

    pub fn iterations(&self) -> u32 {
        match self {
            RootOutcome::Root(b) => b.iterations,
            RootOutcome::NoRoot(_) => 0,
        }
    }
}

/// Bisection on a doubling bracket `[0, t_hi]`.
pub fn solve_root(curve: &PressureCurve, tol: f64) -> Result<RootOutcome> {
    solve_root_with_max(curve, tol, DEFAULT_T_MAX)
}

pub fn solve_root_with_max(curve: &PressureCurve, tol: f64, t_max: f64) -> Result<RootOutcome> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let validity = curve.validity();
    if !validity.monotone {
        return Ok(RootOutcome::NoRoot(NoRoot::NotMonotone {
            offending_words: validity.offending_word_count,
        }));
    }
    let mut iterations = 1;
    let p0 = curve.eval(0.0);
    if p0 <= 0.0 {
        return Ok(RootOutcome::Root(RootBracket {
            root: 0.0,
            lo: 0.0,
            hi: 0.0,
            p_lo: p0,
            p_hi: p0,
            iterations,
        }));
    }
    let (mut lo, mut p_lo) = (0.0, p0);
    let mut hi = t_max.min(1.0);
    let mut p_hi = curve.eval(hi);
    iterations += 1;
    while p_hi >= 0.0 {
        lo = hi;
        p_lo = p_hi;
        hi *= 2.0;
        if hi > t_max {
            return Ok(RootOutcome::NoRoot(NoRoot::BracketNotFound { t_max }));
        }
        p_hi = curve.eval(hi);
        iterations += 1;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let p = curve.eval(mid);
        iterations += 1;
        if p >= 0.0 {
            lo = mid;
            p_lo = p;
        } else {
            hi = mid;
            p_hi = p;
        }
    }
    Ok(RootOutcome::Root(RootBracket {
        root: 0.5 * (lo + hi),
        lo,
        hi,
        p_lo,
        p_hi,
        iterations,
    }))
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// `None` picks the default for the chosen enumeration mode.
    pub tol: Option<f64>,
    pub mode: EnumMode,
    pub enumeration: EnumOptions,
    /// Report `T_k^+ = min(T_k^+, 1)` (or `1` when no root exists) for real
    /// alphabets, matching tables that print the trivial bound.
    pub clamp_one: bool,
    pub t_max: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: None,
            mode: EnumMode::Auto,
            enumeration: EnumOptions::default(),
            clamp_one: false,
            t_max: DEFAULT_T_MAX,
        }
    }
}

impl SolverOptions {
    pub fn with_threads(mut self, threads: usize) -> Self {
        self.enumeration.threads = threads.max(1);
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = Some(tol);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionBounds {
    pub k: u32,
    pub minus: RootOutcome,
    pub plus: RootOutcome,
    /// `T_k^+` was replaced by the trivial bound 1.
    pub plus_clamped: bool,
    pub tolerance: f64,
    pub iterations: u32,
    pub term_count: u128,
    pub stored: bool,
    pub wall_time: Duration,
    /// Integral estimate of the sum over digits dropped by a ceiling,
    /// `Σ_{b omitted} b^{-2t}`, at `T_1^-` and `T_1^+` (`k = 1` only).
    pub tail_minus: Option<f64>,
    pub tail_plus: Option<f64>,
}

impl DimensionBounds {
    pub fn t_minus(&self) -> Option<f64> {
        self.minus.value()
    }

    pub fn t_plus(&self) -> Option<f64> {
        self.plus.value()
    }

    pub fn width(&self) -> Option<f64> {
        Some(self.t_plus()? - self.t_minus()?)
    }
}

/// Runs `f` on a pool of `threads` workers, or inline when `threads ≤ 1`.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if threads <= 1 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Enumerates `I^k` once and solves for both `T_k^-` and `T_k^+`.
pub fn dimension_bounds(
    alphabet: &Alphabet,
    k: u32,
    opts: &SolverOptions,
) -> Result<DimensionBounds> {
    let threads = opts.enumeration.threads;
    with_threads(threads, || dimension_bounds_inner(alphabet, k, opts))?
}

fn dimension_bounds_inner(
    alphabet: &Alphabet,
    k: u32,
    opts: &SolverOptions,
) -> Result<DimensionBounds> {
    let start = Instant::now();
    let weights = Arc::new(enumerate_weights(
        alphabet,
        k,
        opts.mode,
        &opts.enumeration,
    )?);
    let stored = weights.is_stored();
    let tol = opts.tol.unwrap_or(if stored {
        DEFAULT_TOL_STORED
    } else {
        DEFAULT_TOL_STREAMED
    });
    let threads = opts.enumeration.threads;
    let minus_curve = PressureCurve::new(weights.clone(), Sign::Minus, threads);
    let plus_curve = PressureCurve::new(weights.clone(), Sign::Plus, threads);
    let minus = solve_root_with_max(&minus_curve, tol, opts.t_max)?;
    let mut plus = solve_root_with_max(&plus_curve, tol, opts.t_max)?;

    let mut plus_clamped = false;
    if opts.clamp_one && alphabet.is_real() && plus.value().is_none_or(|t| t > 1.0) {
        plus = RootOutcome::Root(RootBracket {
            root: 1.0,
            lo: 1.0,
            hi: 1.0,
            p_lo: f64::NAN,
            p_hi: f64::NAN,
            iterations: plus.iterations(),
        });
        plus_clamped = true;
    }
    let tail = alphabet.tail().filter(|_| k == 1);
    Ok(DimensionBounds {
        k,
        tail_minus: tail.zip(minus.value()).map(|(tl, t)| tl.estimate(t)),
        tail_plus: tail.zip(plus.value()).map(|(tl, t)| tl.estimate(t)),
        iterations: minus.iterations() + plus.iterations(),
        minus,
        plus,
        plus_clamped,
        tolerance: tol,
        term_count: weights.term_count(),
        stored,
        wall_time: start.elapsed(),
    })
}

/// Least-squares fit of `width_k ≈ C/k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthFit {
    pub c: f64,
    pub rms_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub bounds: Vec<DimensionBounds>,
    /// Values of `k` where `T_k^-` dropped below `T_{k-1}^-` by more than `2·tol`.
    pub minus_violations: Vec<u32>,
    /// Values of `k` where `T_k^+` rose above `T_{k-1}^+` by more than `2·tol`.
    pub plus_violations: Vec<u32>,
    pub widths: Vec<Option<f64>>,
    pub fit: Option<WidthFit>,
}

impl SweepResult {
    pub fn monotone(&self) -> bool {
        self.minus_violations.is_empty() && self.plus_violations.is_empty()
    }
}

pub fn sweep(alphabet: &Alphabet, k_max: u32, opts: &SolverOptions) -> Result<SweepResult> {
    if k_max < 2 {
        return Err(Error::InvalidArgument("k_max must be at least 2".into()));
    }
    let threads = opts.enumeration.threads;
    let bounds = with_threads(threads, || {
        (1..=k_max)
            .map(|k| dimension_bounds_inner(alphabet, k, opts))
            .collect::<Result<Vec<_>>>()
    })??;

    let mut minus_violations = Vec::new();
    let mut plus_violations = Vec::new();
    for pair in bounds.windows(2) {
        let (prev, cur) = (&pair[0], &pair[1]);
        let slack = 2.0 * cur.tolerance.max(prev.tolerance);
        if let (Some(a), Some(b)) = (prev.t_minus(), cur.t_minus()) {
            if b < a - slack {
                minus_violations.push(cur.k);
            }
        }
        if let (Some(a), Some(b)) = (prev.t_plus(), cur.t_plus()) {
            if b > a + slack {
                plus_violations.push(cur.k);
            }
        }
    }
    let widths: Vec<Option<f64>> = bounds.iter().map(DimensionBounds::width).collect();
    let fit = fit_inverse_k(&bounds);
    Ok(SweepResult {
        bounds,
        minus_violations,
        plus_violations,
        widths,
        fit,
    })
}

fn fit_inverse_k(bounds: &[DimensionBounds]) -> Option<WidthFit> {
    let pts: Vec<(f64, f64)> = bounds
        .iter()
        .filter_map(|b| Some((b.k as f64, b.width()?)))
        .collect();
    if pts.is_empty() {
        return None;
    }
    let num: f64 = pts.iter().map(|(k, w)| w / k).sum();
    let den: f64 = pts.iter().map(|(k, _)| 1.0 / (k * k)).sum();
    let c = num / den;
    let mse = pts.iter().map(|(k, w)| (w - c / k).powi(2)).sum::<f64>() / pts.len() as f64;
    Some(WidthFit {
        c,
        rms_residual: mse.sqrt(),
    })
}

/// `Σ_{b ∈ I} |φ'_b(0)|^t = Σ_b |b|^{-2t}` against 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuCheck {
    pub t: f64,
    pub sum: f64,
    pub at_most_one: bool,
}

pub fn mu_subsystem_check(alphabet: &Alphabet, t: f64) -> MuCheck {
    let sum: f64 = alphabet
        .digits()
        .iter()
        .map(|b| (-2.0 * t * b.log_modulus().expect("digits are nonzero")).exp())
        .sum();
    MuCheck {
        t,
        sum,
        at_most_one: sum <= 1.0,
    }
}
