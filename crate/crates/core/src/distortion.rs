//! Derivative moduli of the composed maps `φ_ω` and their distortion bounds.
//!
//! `|φ'_ω(z)| = 1/|q_ω(z)|²`, and for real digits the ratio
//! `|φ'_ω(z)|/|φ'_ω(w)|` over the disk `D` is bracketed by
//! `|1+a_ω̃|^{∓2}`, attained only at the corner pairs `(0,1)` and `(1,0)`.
//! For complex digits the extremes of `|q_ω|` on `D` need not sit at `0`
//! and `1`; [`verify_distortion`] reports such words as violations.

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::convergents::{ConvergentState, Word};
use crate::error::{Error, Result};
use crate::gaussian::GaussianInt;

/// A point of the closed disk `|z − 1/2| ≤ 1/2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiskPoint(Complex64);

impl DiskPoint {
    /// Accepts points up to `1e-12` outside the boundary to absorb rounding.
    pub fn new(z: Complex64) -> Result<Self> {
        if (z - Complex64::new(0.5, 0.0)).norm() > 0.5 + 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "{z} lies outside the disk D"
            )));
        }
        Ok(DiskPoint(z))
    }

    pub fn zero() -> Self {
        DiskPoint(Complex64::new(0.0, 0.0))
    }

    pub fn one() -> Self {
        DiskPoint(Complex64::new(1.0, 0.0))
    }

    /// The boundary point `1/2 + e^{iθ}/2`.
    pub fn boundary(theta: f64) -> Self {
        DiskPoint(Complex64::new(0.5, 0.0) + 0.5 * Complex64::from_polar(1.0, theta))
    }

    pub fn z(&self) -> Complex64 {
        self.0
    }
}

/// `ln |φ'_ω(z)| = −2 ln |q_ω(z)|`.
pub fn log_derivative_modulus(word: &Word, z: DiskPoint) -> f64 {
    -2.0 * word.state().log_abs_q_at(z.0)
}

/// `|φ'_ω(z)| = 1/|q_ω(z)|²`; underflows to zero only for extremely long words.
pub fn derivative_modulus(word: &Word, z: DiskPoint) -> f64 {
    log_derivative_modulus(word, z).exp()
}

/// `|φ'_ω(z)|` by composing the single-digit maps numerically:
/// `Π_i |φ'_{ω_i}(φ_{ω_{i+1}..ω_n}(z))|` with `φ_b(z) = 1/(b+z)`.
pub fn chain_rule_derivative_modulus(word: &Word, z: DiskPoint) -> f64 {
    let mut point = z.0;
    let mut log_sum = 0.0;
    for d in word.digits().iter().rev() {
        let shifted = d.to_c64() + point;
        // |φ_b'(x)| = 1/|b+x|²
        log_sum -= 2.0 * shifted.norm().ln();
        point = shifted.inv();
    }
    log_sum.exp()
}

/// Exact bracket `[|1+a_ω̃|^{-2}, |1+a_ω̃|^{2}]` for the derivative ratio.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistortionBounds {
    pub lower: BigRational,
    pub upper: BigRational,
}

impl DistortionBounds {
    pub fn lower_f64(&self) -> f64 {
        self.lower.to_f64().unwrap_or(0.0)
    }

    pub fn upper_f64(&self) -> f64 {
        self.upper.to_f64().unwrap_or(f64::INFINITY)
    }
}

pub fn distortion_bounds(word: &Word) -> DistortionBounds {
    let s = word.dual().state();
    let one_plus = &s.q_curr + &s.p_curr;
    DistortionBounds {
        lower: BigRational::new(s.q_curr.norm(), one_plus.norm()),
        upper: BigRational::new(one_plus.norm(), s.q_curr.norm()),
    }
}

/// Outcome of sampling derivative ratios over `D × D`.
#[derive(Clone, Debug, PartialEq)]
pub struct DistortionReport {
    pub pairs: usize,
    /// Pairs whose ratio leaves the bracket by more than `1e-12` relative.
    pub violations: usize,
    /// Non-corner pairs within `1e-12` relative of a bracket endpoint.
    pub near_extreme_non_corner: usize,
    /// The ratio at `(z, w) = (1, 0)` equals the lower bound exactly.
    pub lower_attained: bool,
    /// The ratio at `(z, w) = (0, 1)` equals the upper bound exactly.
    pub upper_attained: bool,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

impl DistortionReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
            && self.near_extreme_non_corner == 0
            && self.lower_attained
            && self.upper_attained
    }
}

/// Deterministic sample of `D`: always `0` and `1`, then 70% boundary and
/// 30% interior points.
pub fn sample_disk(samples: usize, seed: u64) -> Vec<DiskPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = vec![DiskPoint::zero(), DiskPoint::one()];
    while pts.len() < samples.max(2) {
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        if rng.random_bool(0.7) {
            pts.push(DiskPoint::boundary(theta));
        } else {
            let r = 0.5 * rng.random::<f64>().sqrt();
            pts.push(DiskPoint(
                Complex64::new(0.5, 0.0) + Complex64::from_polar(r, theta),
            ));
        }
    }
    pts
}

fn exact_norm_ratio(s: &ConvergentState, num_at: i64, den_at: i64) -> BigRational {
    let num = s.q_at_exact(&GaussianInt::real(num_at)).norm();
    let den = s.q_at_exact(&GaussianInt::real(den_at)).norm();
    BigRational::new(num, den)
}

pub fn verify_distortion(word: &Word, samples: usize, seed: u64) -> Result<DistortionReport> {
    if samples < 2 {
        return Err(Error::InvalidArgument(
            "at least two sample points are needed".into(),
        ));
    }
    let bounds = distortion_bounds(word);
    let (lo, hi) = (bounds.lower_f64(), bounds.upper_f64());
    let s = word.state();
    let shift = s.q_curr.max_bits().saturating_sub(60);
    let pts = sample_disk(samples, seed);
    // |q(z)|² with a common scale; ratios are unaffected
    let qn: Vec<f64> = pts
        .iter()
        .map(|p| s.q_at_scaled(p.0, shift).norm_sqr())
        .collect();

    let mut report = DistortionReport {
        pairs: 0,
        violations: 0,
        near_extreme_non_corner: 0,
        // ratio at (z, w) is |q(w)|²/|q(z)|²
        lower_attained: exact_norm_ratio(&s, 0, 1) == bounds.lower,
        upper_attained: exact_norm_ratio(&s, 1, 0) == bounds.upper,
        min_ratio: f64::INFINITY,
        max_ratio: 0.0,
    };
    let tol = 1e-12;
    for (i, qz) in qn.iter().enumerate() {
        for (j, qw) in qn.iter().enumerate() {
            let ratio = qw / qz;
            report.pairs += 1;
            report.min_ratio = report.min_ratio.min(ratio);
            report.max_ratio = report.max_ratio.max(ratio);
            if ratio < lo * (1.0 - tol) || ratio > hi * (1.0 + tol) {
                report.violations += 1;
            }
            let corner = (i, j) == (0, 1) || (i, j) == (1, 0);
            let near = (ratio - lo).abs() <= tol * lo || (ratio - hi).abs() <= tol * hi;
            if near && !corner && lo < hi {
                report.near_extreme_non_corner += 1;
            }
        }
    }
    Ok(report)
}
