//! Truncated pressure functions
//!
//! ```text
//! P_k^±(t) = (1/k) ln Σ_{ω ∈ I^k} |q_ω|^{-2t} |1+a_ω|^{±2t}
//! ```
//!
//! Each summand is `exp(-2t·b_ω)` with base `b_ω = ln|q_ω| ∓ ln|1+a_ω|`.
//! Sums factor out the largest summand and accumulate with Neumaier
//! compensation.

use std::ops::AddAssign;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::alphabet::Alphabet;
use crate::enumeration::{
    enumerate_weights, word_count, EnumMode, EnumOptions, WeightSet, WeightTerm,
};
use crate::error::{Error, Result};

/// Compensated (Kahan–Babuška–Neumaier) running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }

    pub fn merge(mut self, other: NeumaierSum) -> Self {
        self += other.sum;
        self.comp += other.comp;
        self
    }
}

impl AddAssign<f64> for NeumaierSum {
    #[inline]
    fn add_assign(&mut self, x: f64) {
        let s = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - s) + x;
        } else {
            self.comp += (x - s) + self.sum;
        }
        self.sum = s;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    /// `(1+a_ω)^{-2t}`: the lower bound.
    Minus,
    /// `(1+a_ω)^{+2t}`: the upper bound.
    Plus,
}

impl Sign {
    #[inline]
    pub fn base(self, w: &WeightTerm) -> f64 {
        match self {
            Sign::Minus => w.log_q + w.log_1pa,
            Sign::Plus => w.log_q - w.log_1pa,
        }
    }
}

/// Whether every summand decays in `t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidityFlag {
    pub monotone: bool,
    /// Words whose summand base is `≥ 1`, i.e. `|1+a_ω|^{±1}/|q_ω| ≥ 1`.
    pub offending_word_count: u64,
}

#[derive(Clone, Debug)]
pub struct PressureCurve {
    weights: Arc<WeightSet>,
    sign: Sign,
    threads: usize,
    min_base: f64,
    validity: ValidityFlag,
}

impl PressureCurve {
    /// Scans the weights once for the smallest base and the validity flag.
    pub fn new(weights: Arc<WeightSet>, sign: Sign, threads: usize) -> Self {
        let (min_base, offending) = weights.fold_terms(
            threads,
            || (f64::INFINITY, 0u64),
            |acc, w| {
                let b = sign.base(w);
                acc.0 = acc.0.min(b);
                acc.1 += u64::from(b <= 0.0);
            },
            |a, b| (a.0.min(b.0), a.1 + b.1),
        );
        PressureCurve {
            weights,
            sign,
            threads,
            min_base,
            validity: ValidityFlag {
                monotone: offending == 0,
                offending_word_count: offending,
            },
        }
    }

    pub fn k(&self) -> u32 {
        self.weights.k()
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn weights(&self) -> &Arc<WeightSet> {
        &self.weights
    }

    pub fn validity(&self) -> ValidityFlag {
        self.validity
    }

    /// `ln Σ_ω exp(-2t·b_ω)`.
    pub fn log_sum(&self, t: f64) -> f64 {
        // largest exponent: -2t·min_base for t ≥ 0
        let shift = -2.0 * t * self.min_base;
        let sign = self.sign;
        let acc = self.weights.fold_terms(
            self.threads,
            NeumaierSum::default,
            |acc, w| *acc += (-2.0 * t * sign.base(w) - shift).exp(),
            NeumaierSum::merge,
        );
        shift + acc.value().ln()
    }

    /// `P_k^±(t)`.
    pub fn eval(&self, t: f64) -> f64 {
        self.log_sum(t) / self.k() as f64
    }

    /// `(Σ(t), Σ'(t))` without rescaling; meant for `t` near a root.
    pub fn sum_with_derivative(&self, t: f64) -> (f64, f64) {
        let sign = self.sign;
        let (s, d) = self.weights.fold_terms(
            self.threads,
            || (NeumaierSum::default(), NeumaierSum::default()),
            |acc, w| {
                let b = sign.base(w);
                let e = (-2.0 * t * b).exp();
                acc.0 += e;
                acc.1 += -2.0 * b * e;
            },
            |a, b| (a.0.merge(b.0), a.1.merge(b.1)),
        );
        (s.value(), d.value())
    }
}

/// Builds one curve by enumerating `I^k`.
pub fn pressure_curve(
    alphabet: &Alphabet,
    k: u32,
    sign: Sign,
    mode: EnumMode,
    opts: &EnumOptions,
) -> Result<PressureCurve> {
    let weights = Arc::new(enumerate_weights(alphabet, k, mode, opts)?);
    Ok(PressureCurve::new(weights, sign, opts.threads))
}

/// Largest word count accepted by [`sandwich_check`].
pub const SANDWICH_MAX_WORDS: u128 = 1 << 22;

/// The three sides of the finite-`n` pressure sandwich, in log form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub k: u32,
    pub n: u32,
    pub t: f64,
    /// `n · ln Σ_{I^k} w^-(t)`
    pub log_lower: f64,
    /// `ln Σ_{I^{kn}} |φ'_ω(0)|^t`
    pub log_middle: f64,
    /// `n · ln Σ_{I^k} w^+(t)`
    pub log_upper: f64,
    pub lower_strict: bool,
    pub upper_strict: bool,
}

impl SandwichReport {
    /// Non-strict bracketing, which is all that holds for `n = 1`.
    pub fn holds(&self) -> bool {
        self.log_lower <= self.log_middle && self.log_middle <= self.log_upper
    }

    pub fn strict(&self) -> bool {
        self.lower_strict && self.upper_strict
    }
}

/// Checks `(Σ_{I^k} w^-)^n ≤ Σ_{I^{kn}} |φ'_ω(0)|^t ≤ (Σ_{I^k} w^+)^n`, with the
/// middle sum enumerated directly over words of length `kn`.
pub fn sandwich_check(alphabet: &Alphabet, k: u32, n: u32, t: f64) -> Result<SandwichReport> {
    if k == 0 || n == 0 {
        return Err(Error::InvalidArgument("k and n must be positive".into()));
    }
    let long = k.checked_mul(n).ok_or(Error::TooManyWords {
        alphabet: alphabet.len(),
        k: u32::MAX,
    })?;
    let count = word_count(alphabet.len(), long)?;
    if count > SANDWICH_MAX_WORDS {
        return Err(Error::InvalidArgument(format!(
            "{count} words is too many for direct enumeration"
        )));
    }
    let opts = EnumOptions::default();
    let short = Arc::new(enumerate_weights(alphabet, k, EnumMode::Stored, &opts)?);
    let lower = PressureCurve::new(short.clone(), Sign::Minus, 1).log_sum(t);
    let upper = PressureCurve::new(short, Sign::Plus, 1).log_sum(t);

    // |φ'_ω(0)|^t = |q_ω|^{-2t}
    let full = enumerate_weights(alphabet, long, EnumMode::Stored, &opts)?;
    let terms = full.stored_terms().expect("stored");
    let shift = terms
        .iter()
        .map(|w| -2.0 * t * w.log_q)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut acc = NeumaierSum::default();
    for w in terms {
        acc += (-2.0 * t * w.log_q - shift).exp();
    }
    let middle = shift + acc.value().ln();

    let (log_lower, log_upper) = (n as f64 * lower, n as f64 * upper);
    Ok(SandwichReport {
        k,
        n,
        t,
        log_lower,
        log_middle: middle,
        log_upper,
        lower_strict: log_lower < middle,
        upper_strict: middle < log_upper,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::parse_alphabet;

    fn curve(alpha: &str, k: u32, sign: Sign) -> PressureCurve {
        let a = parse_alphabet(alpha).unwrap().materialize().unwrap();
        pressure_curve(&a, k, sign, EnumMode::Stored, &EnumOptions::default()).unwrap()
    }

    #[test]
    fn neumaier_recovers_small_addends() {
        let mut s = NeumaierSum::default();
        for x in [1e100, 1.0, -1e100, 1.0] {
            s += x;
        }
        assert_eq!(s.value(), 2.0);
    }

    #[test]
    fn singleton_curve_is_linear() {
        let c = curve("{2}", 1, Sign::Minus);
        for t in [0.0, 0.3, 1.0, 2.5] {
            assert!((c.eval(t) + 2.0 * t * 3f64.ln()).abs() < 1e-14);
        }
    }

    #[test]
    fn value_at_zero_counts_words() {
        assert!((curve("{1,2}", 1, Sign::Minus).eval(0.0) - 2f64.ln()).abs() < 1e-15);
        for k in 1..=6 {
            for sign in [Sign::Minus, Sign::Plus] {
                let c = curve("{1,3,4}", k, sign);
                assert!((c.eval(0.0) - 3f64.ln()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn four_term_expansion() {
        // 9^{-t} + 25^{-t} + 16^{-t} + 49^{-t} at t = 1/2
        let expect = 0.5 * (1.0 / 3.0 + 1.0 / 5.0 + 1.0 / 4.0 + 1.0 / 7.0f64).ln();
        let got = curve("{1,2}", 2, Sign::Minus).eval(0.5);
        assert!((got - expect).abs() < 1e-14);
        assert!((got - -0.03834).abs() < 1e-5);
    }

    #[test]
    fn validity_flags() {
        let v = curve("{1,2}", 1, Sign::Plus).validity();
        assert_eq!(
            v,
            ValidityFlag {
                monotone: false,
                offending_word_count: 1
            }
        );
        assert!(curve("{1,2}", 2, Sign::Plus).validity().monotone);
        for alpha in ["{1,2}", "{1}", "{1+i,2-i,1}", "{3..5}x{-2..2}i"] {
            assert!(curve(alpha, 1, Sign::Minus).validity().monotone, "{alpha}");
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let c = curve("{2,3,5}", 3, Sign::Plus);
        let t = 0.4;
        let (_, d) = c.sum_with_derivative(t);
        let h = 1e-6;
        let fd = (c.sum_with_derivative(t + h).0 - c.sum_with_derivative(t - h).0) / (2.0 * h);
        assert!((d - fd).abs() < 1e-6 * d.abs());
    }

    #[test]
    fn sandwich_examples() {
        let a = parse_alphabet("{1,2}").unwrap().materialize().unwrap();
        let r = sandwich_check(&a, 1, 2, 0.5).unwrap();
        assert!(r.strict(), "{r:?}");
        // hand values: (5/6)^2, 1/2+1/3+1/3+1/5, (11/4)^2
        assert!((r.log_lower - 2.0 * (5.0f64 / 6.0).ln()).abs() < 1e-14);
        assert!((r.log_middle - (1.0 / 2.0 + 2.0 / 3.0 + 1.0 / 5.0f64).ln()).abs() < 1e-14);
        assert!((r.log_upper - 2.0 * 2.75f64.ln()).abs() < 1e-14);
        let b = parse_alphabet("{2,3}").unwrap().materialize().unwrap();
        assert!(sandwich_check(&b, 2, 2, 0.3).unwrap().strict());
        let one = sandwich_check(&b, 2, 1, 0.3).unwrap();
        assert!(one.holds());
        assert!(sandwich_check(&a, 12, 2, 0.5).is_err());
    }

    #[test]
    fn convex_on_grid() {
        for (alpha, k) in [("{2,3}", 4), ("{1,2}", 6), ("{5,6,7}", 3)] {
            for sign in [Sign::Minus, Sign::Plus] {
                let c = curve(alpha, k, sign);
                if !c.validity().monotone {
                    continue;
                }
                let h = 0.1;
                for i in 1..20 {
                    let t = i as f64 * h;
                    let second = c.eval(t + h) - 2.0 * c.eval(t) + c.eval(t - h);
                    assert!(second >= -1e-9, "{alpha} {sign:?} t={t}");
                    assert!(c.eval(t + h) < c.eval(t));
                }
            }
        }
    }
}
