//! Generalized convergents `p_ω(z)/q_ω(z)` via the two-term recurrence.
//!
//! A state carries the numerators and denominators at the current and
//! previous length. The generalized denominator is linear in the tail
//! variable: `q_ω(z) = q_n + z·q_{n-1}`, and likewise for `p`.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gaussian::{ComplexRational, GaussianInt};

/// A nonempty finite word over valid digits.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Word(Vec<GaussianInt>);

impl Word {
    pub fn new(digits: Vec<GaussianInt>) -> Result<Self> {
        if digits.is_empty() {
            return Err(Error::InvalidArgument("words must be nonempty".into()));
        }
        if let Some(d) = digits.iter().find(|d| d.re < 1.into()) {
            return Err(Error::InvalidDigit(d.to_string()));
        }
        Ok(Word(digits))
    }

    pub fn from_integers(digits: &[i64]) -> Result<Self> {
        Word::new(digits.iter().map(|&d| GaussianInt::real(d)).collect())
    }

    pub fn digits(&self) -> &[GaussianInt] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The reversed word `(ω_n, ..., ω_1)`.
    pub fn dual(&self) -> Word {
        Word(self.0.iter().rev().cloned().collect())
    }

    /// The word with its first digit removed, if any digits remain.
    pub fn shifted(&self) -> Option<Word> {
        (self.0.len() > 1).then(|| Word(self.0[1..].to_vec()))
    }

    /// Builds the convergent state from scratch.
    pub fn state(&self) -> ConvergentState {
        self.0
            .iter()
            .fold(ConvergentState::empty(), |s, d| s.extend(d))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.0.iter().map(|d| d.to_string()).collect();
        write!(f, "({})", items.join(","))
    }
}

/// `(p, q)` at word lengths `n-1` and `n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvergentState {
    pub p_prev: GaussianInt,
    pub p_curr: GaussianInt,
    pub q_prev: GaussianInt,
    pub q_curr: GaussianInt,
    pub len: usize,
}

impl ConvergentState {
    /// State of the empty word: `p_{-1}=1, p_0=0, q_{-1}=0, q_0=1`.
    pub fn empty() -> Self {
        ConvergentState {
            p_prev: GaussianInt::one(),
            p_curr: GaussianInt::zero(),
            q_prev: GaussianInt::zero(),
            q_curr: GaussianInt::one(),
            len: 0,
        }
    }

    pub fn extend(&self, digit: &GaussianInt) -> Self {
        ConvergentState {
            p_prev: self.p_curr.clone(),
            p_curr: &(digit * &self.p_curr) + &self.p_prev,
            q_prev: self.q_curr.clone(),
            q_curr: &(digit * &self.q_curr) + &self.q_prev,
            len: self.len + 1,
        }
    }

    /// `q_ω(z) = q_n + z·q_{n-1}` for a Gaussian-integer `z`, exactly.
    pub fn q_at_exact(&self, z: &GaussianInt) -> GaussianInt {
        &self.q_curr + &(z * &self.q_prev)
    }

    pub fn p_at_exact(&self, z: &GaussianInt) -> GaussianInt {
        &self.p_curr + &(z * &self.p_prev)
    }

    /// `q_ω(z)` for a floating `z`, scaled down by `2^shift`.
    ///
    /// The shift keeps huge coefficients inside `f64` range; callers
    /// that compare ratios pass the same shift to both sides.
    pub fn q_at_scaled(&self, z: Complex64, shift: u64) -> Complex64 {
        self.q_curr.to_c64_scaled(shift) + z * self.q_prev.to_c64_scaled(shift)
    }

    pub fn q_at(&self, z: Complex64) -> Complex64 {
        self.q_at_scaled(z, 0)
    }

    pub fn p_at(&self, z: Complex64) -> Complex64 {
        self.p_curr.to_c64() + z * self.p_prev.to_c64()
    }

    /// `ln |q_ω(z)|`, valid far beyond `f64` range.
    pub fn log_abs_q_at(&self, z: Complex64) -> f64 {
        let shift = self.q_curr.max_bits().saturating_sub(60);
        self.q_at_scaled(z, shift).norm().ln() + shift as f64 * std::f64::consts::LN_2
    }

    /// The convergent `a_ω = p_ω(0)/q_ω(0)`, unreduced.
    pub fn value(&self) -> ComplexRational {
        ComplexRational {
            num: self.p_curr.clone(),
            den: self.q_curr.clone(),
        }
    }
}

/// Evaluates `q_ω(z) = q_n + z·q_{n-1}`.
pub fn q_at(word: &Word, z: Complex64) -> Complex64 {
    word.state().q_at(z)
}

pub fn convergent_value(word: &Word) -> ComplexRational {
    word.state().value()
}

/// Outcome of the three exact duality identities on one word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualityReport {
    /// `p_{ω_1..ω_n}(z) = q_{ω_2..ω_n}(z)` as linear polynomials in `z`;
    /// `None` for single-digit words.
    pub shift_identity: Option<bool>,
    /// `q_ω(0) = q_ω̃(0)`.
    pub reversal_symmetry: bool,
    /// `q_ω(1) = q_ω(0) + p_ω̃(0)`.
    pub unit_shift_identity: bool,
}

impl DualityReport {
    pub fn passed(&self) -> bool {
        self.shift_identity.unwrap_or(true) && self.reversal_symmetry && self.unit_shift_identity
    }
}

pub fn check_duality(word: &Word) -> DualityReport {
    let s = word.state();
    let dual = word.dual().state();
    let shift_identity = word.shifted().map(|tail| {
        let t = tail.state();
        s.p_curr == t.q_curr && s.p_prev == t.q_prev
    });
    let one = GaussianInt::one();
    DualityReport {
        shift_identity,
        reversal_symmetry: s.q_curr == dual.q_curr,
        unit_shift_identity: s.q_at_exact(&one) == &s.q_curr + &dual.p_curr,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn g(re: i64, im: i64) -> GaussianInt {
        GaussianInt::new(re, im)
    }

    #[test]
    fn recurrence_base_cases() {
        let s1 = ConvergentState::empty().extend(&g(1, 0));
        assert_eq!((s1.p_curr.clone(), s1.q_curr.clone()), (g(1, 0), g(1, 0)));
        let s2 = s1.extend(&g(2, 0));
        assert_eq!((s2.p_curr.clone(), s2.q_curr.clone()), (g(2, 0), g(3, 0)));
        // 1/(1+1/(1+1/1)) = 2/3
        let s3 = Word::from_integers(&[1, 1, 1]).unwrap().state();
        assert_eq!((s3.p_curr, s3.q_curr), (g(2, 0), g(3, 0)));
        let c = ConvergentState::empty().extend(&g(1, 1));
        assert_eq!(c.q_curr, g(1, 1));
    }

    #[test]
    fn linear_denominator() {
        let w2 = Word::from_integers(&[2]).unwrap();
        assert_eq!(
            q_at(&w2, Complex64::new(0.0, 0.0)),
            Complex64::new(2.0, 0.0)
        );
        let w12 = Word::from_integers(&[1, 2]).unwrap();
        assert_eq!(
            q_at(&w12, Complex64::new(1.0, 0.0)),
            Complex64::new(4.0, 0.0)
        );
        assert_eq!(
            q_at(&w12, Complex64::new(0.0, 0.0)),
            Complex64::new(3.0, 0.0)
        );
        assert_eq!(w12.state().q_at_exact(&g(1, 0)), g(4, 0));
    }

    #[test]
    fn convergent_values() {
        let v = |d: &[i64]| convergent_value(&Word::from_integers(d).unwrap());
        assert_eq!(v(&[1]), ComplexRational::new(g(1, 0), g(1, 0)).unwrap());
        assert_eq!(v(&[2, 2]), ComplexRational::new(g(2, 0), g(5, 0)).unwrap());
        assert_eq!(v(&[1, 2]), ComplexRational::new(g(2, 0), g(3, 0)).unwrap());
    }

    #[test]
    fn duality_examples() {
        let r = check_duality(&Word::from_integers(&[1, 2]).unwrap());
        assert_eq!(r.shift_identity, Some(true));
        assert!(r.reversal_symmetry && r.unit_shift_identity);
        let single = check_duality(&Word::from_integers(&[5]).unwrap());
        assert_eq!(single.shift_identity, None);
        assert!(single.passed());
    }

    #[test]
    fn word_validation_and_dual() {
        assert!(Word::new(vec![]).is_err());
        assert!(Word::new(vec![g(0, 3)]).is_err());
        let w = Word::new(vec![g(1, 1), g(2, 0), g(3, -1)]).unwrap();
        assert_eq!(w.dual().dual(), w);
        assert_eq!(w.to_string(), "(1+i,2,3-i)");
    }

    #[test]
    fn log_abs_q_for_long_words() {
        // 2000 ones: q is a Fibonacci number far beyond f64 range
        let w = Word::from_integers(&vec![1; 2000]).unwrap();
        let s = w.state();
        let exact = s.q_curr.log_modulus().unwrap();
        let approx = s.log_abs_q_at(Complex64::new(0.0, 0.0));
        assert!((exact - approx).abs() < 1e-12 * exact);
    }

    pub(crate) fn arb_word(max_len: usize) -> impl Strategy<Value = Word> {
        prop::collection::vec((1i64..12, -6i64..7, any::<bool>()), 1..=max_len).prop_map(|v| {
            Word::new(
                v.into_iter()
                    .map(|(a, b, real)| g(a, if real { 0 } else { b }))
                    .collect(),
            )
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn duality_identities_hold(w in arb_word(25)) {
            prop_assert!(check_duality(&w).passed());
        }

        #[test]
        fn incremental_matches_linear_form(w in arb_word(15), zr in -3i64..4, zi in -3i64..4) {
            // q(z) for z = zr + zi·i from the recurrence with the last digit shifted by z
            let z = g(zr, zi);
            let s = w.state();
            let mut digits = w.digits().to_vec();
            let last = digits.pop().unwrap();
            let prefix = digits.iter().fold(ConvergentState::empty(), |s, d| s.extend(d));
            let shifted = prefix.extend(&(&last + &z));
            prop_assert_eq!(s.q_at_exact(&z), shifted.q_curr);
            prop_assert_eq!(s.p_at_exact(&z), shifted.p_curr);
        }

        #[test]
        fn telescoping_product(w in arb_word(12), x in 0.0f64..1.0, y in -0.5f64..0.5) {
            let z = Complex64::new(x, y * (x * (1.0 - x)).sqrt() * 2.0 * 0.999);
            let n = w.len();
            let mut prod = 1.0;
            for i in 0..n {
                let suffix = Word::new(w.digits()[i..].to_vec()).unwrap().state();
                prod *= suffix.p_at(z).norm() / suffix.q_at(z).norm();
            }
            let expect = 1.0 / w.state().q_at(z).norm();
            prop_assert!((prod - expect).abs() <= 1e-12 * expect);
        }
    }
}
