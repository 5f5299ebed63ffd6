//! Images `φ_ω(D)` of the base disk, in exact rational arithmetic, and
//! their SVG rendering.

use std::fmt::Write as _;
use std::path::Path;

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::alphabet::Alphabet;
use crate::error::{Error, Result};
use crate::gaussian::GaussianInt;

/// Upper limit on the number of disks one picture may hold.
pub const MAX_DISKS: usize = 10_000;

/// The closed disk `φ_ω(D)` for a word `ω` (empty word: `D` itself).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiskImage {
    pub center_re: BigRational,
    pub center_im: BigRational,
    pub radius: BigRational,
    pub word: Vec<GaussianInt>,
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

impl DiskImage {
    /// `D`: center 1/2, radius 1/2.
    pub fn base() -> Self {
        DiskImage {
            center_re: rat(1, 2),
            center_im: BigRational::zero(),
            radius: rat(1, 2),
            word: Vec::new(),
        }
    }

    pub fn depth(&self) -> usize {
        self.word.len()
    }

    /// Image under `z ↦ 1/(b+z)`. With `m = b + c`, the disk `|z−c| ≤ r`
    /// maps to center `conj(m)/(|m|²−r²)` and radius `r/(|m|²−r²)`.
    fn invert_shifted(&self, b: &GaussianInt) -> Result<Self> {
        let (b_re, b_im) = b.to_rational_parts();
        let m_re = &self.center_re + b_re;
        let m_im = &self.center_im + b_im;
        let den = &m_re * &m_re + &m_im * &m_im - &self.radius * &self.radius;
        if den <= BigRational::zero() {
            return Err(Error::InvalidArgument(format!(
                "pole of 1/({b}+z) meets the disk"
            )));
        }
        let mut word = Vec::with_capacity(self.word.len() + 1);
        word.push(b.clone());
        word.extend(self.word.iter().cloned());
        Ok(DiskImage {
            center_re: m_re / &den,
            center_im: -m_im / &den,
            radius: &self.radius / &den,
            word,
        })
    }

    /// Whether `other` lies inside `self` (tangency allowed).
    pub fn contains(&self, other: &DiskImage) -> bool {
        let gap = &self.radius - &other.radius;
        if gap < BigRational::zero() {
            return false;
        }
        self.center_dist_sq(other) <= &gap * &gap
    }

    /// Whether the open disks are disjoint (tangency allowed).
    pub fn interiors_disjoint(&self, other: &DiskImage) -> bool {
        let sum = &self.radius + &other.radius;
        self.center_dist_sq(other) >= &sum * &sum
    }

    fn center_dist_sq(&self, other: &DiskImage) -> BigRational {
        let dx = &self.center_re - &other.center_re;
        let dy = &self.center_im - &other.center_im;
        &dx * &dx + &dy * &dy
    }

    pub fn center_f64(&self) -> (f64, f64) {
        (
            self.center_re.to_f64().unwrap_or(f64::NAN),
            self.center_im.to_f64().unwrap_or(f64::NAN),
        )
    }

    pub fn radius_f64(&self) -> f64 {
        self.radius.to_f64().unwrap_or(f64::NAN)
    }

    /// Identifier usable as an XML id: `w_1_2`, with `1+2i` spelled `1p2i`.
    pub fn element_id(&self) -> String {
        let mut id = String::from("w");
        for d in &self.word {
            id.push('_');
            id.push_str(&d.to_string().replace('+', "p").replace('-', "m"));
        }
        id
    }
}

/// `φ_ω(D) = φ_{ω_1}(φ_{ω_2}(… φ_{ω_n}(D)))`.
pub fn image_disk(word: &[GaussianInt]) -> Result<DiskImage> {
    word.iter()
        .rev()
        .try_fold(DiskImage::base(), |disk, b| disk.invert_shifted(b))
}

/// All images of depth `1..=depth`, parents before children, in digit order.
pub fn iterate_disks(alphabet: &Alphabet, depth: usize) -> Result<Vec<DiskImage>> {
    if !(1..=2).contains(&depth) {
        return Err(Error::InvalidArgument("depth must be 1 or 2".into()));
    }
    let n = alphabet.len();
    let total = if depth == 1 { n } else { n + n * n };
    if total > MAX_DISKS {
        return Err(Error::InvalidArgument(format!(
            "{total} disks exceed the limit of {MAX_DISKS}"
        )));
    }
    let mut out = Vec::with_capacity(total);
    for b in alphabet.digits() {
        out.push(image_disk(std::slice::from_ref(b))?);
    }
    if depth == 2 {
        for b1 in alphabet.digits() {
            for b2 in alphabet.digits() {
                out.push(image_disk(&[b1.clone(), b2.clone()])?);
            }
        }
    }
    Ok(out)
}

/// SVG 1.1 picture of the iterates, one stroke-only `<circle>` per disk.
/// The viewport is the disk `D`; the imaginary axis points up.
pub fn svg_string(alphabet: &Alphabet, depth: usize) -> Result<String> {
    let disks = iterate_disks(alphabet, depth)?;
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    s.push_str(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" \
         width=\"800\" height=\"800\" viewBox=\"0 -0.5 1 1\">\n",
    );
    for d in &disks {
        let (cx, cy) = d.center_f64();
        let word: Vec<String> = d.word.iter().map(|b| b.to_string()).collect();
        let width = if d.depth() == 1 { 0.002 } else { 0.001 };
        writeln!(
            s,
            "  <circle id=\"{}\" data-word=\"{}\" cx=\"{:.12}\" cy=\"{:.12}\" r=\"{:.12}\" \
             fill=\"none\" stroke=\"black\" stroke-width=\"{}\"/>",
            d.element_id(),
            word.join(","),
            cx,
            -cy + 0.0,
            d.radius_f64(),
            width
        )
        .expect("write to string");
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn render_svg(alphabet: &Alphabet, depth: usize, out: impl AsRef<Path>) -> Result<usize> {
    let svg = svg_string(alphabet, depth)?;
    std::fs::write(out, &svg)?;
    Ok(svg.matches("<circle").count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::parse_alphabet;
    use crate::convergents::Word;

    fn alpha(s: &str) -> Alphabet {
        parse_alphabet(s).unwrap().materialize().unwrap()
    }

    #[test]
    fn single_digit_images() {
        let d1 = image_disk(&[GaussianInt::real(1)]).unwrap();
        assert_eq!(
            (
                d1.center_re.clone(),
                d1.center_im.clone(),
                d1.radius.clone()
            ),
            (rat(3, 4), rat(0, 1), rat(1, 4))
        );
        let d2 = image_disk(&[GaussianInt::real(2)]).unwrap();
        assert_eq!((d2.center_re, d2.radius), (rat(5, 12), rat(1, 12)));
        assert_eq!(image_disk(&[]).unwrap(), DiskImage::base());
    }

    #[test]
    fn nesting_and_disjointness() {
        for a in ["{1,2}", "{1+i,1-i,2+i,2-i}", "{1..3}x{-1..1}i"] {
            let disks = iterate_disks(&alpha(a), 2).unwrap();
            let base = DiskImage::base();
            for d in &disks {
                assert!(base.contains(d), "{a}: {}", d.element_id());
                if d.depth() == 2 {
                    let parent = image_disk(&d.word[..1]).unwrap();
                    assert!(parent.contains(d), "{a}: {}", d.element_id());
                }
            }
            for (i, x) in disks.iter().enumerate() {
                for y in &disks[i + 1..] {
                    if x.depth() == y.depth() {
                        assert!(
                            x.interiors_disjoint(y),
                            "{a}: {} {}",
                            x.element_id(),
                            y.element_id()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn radius_bounded_by_derivative() {
        for digits in [vec![1], vec![1, 2], vec![3, 1, 4], vec![2, 2, 2, 2]] {
            let word = Word::from_integers(&digits).unwrap();
            let q0 = word.state().q_curr.to_c64().norm();
            let d = image_disk(word.digits()).unwrap();
            assert!(d.radius_f64() <= 0.5 / (q0 * q0) + 1e-9);
        }
    }

    #[test]
    fn svg_counts_and_ids() {
        let svg = svg_string(&alpha("{1+i,1-i,2+i,2-i}"), 2).unwrap();
        assert_eq!(svg.matches("<circle").count(), 20);
        assert!(svg.contains("id=\"w_1pi_2mi\""));
        assert_eq!(
            svg_string(&alpha("{3}"), 1)
                .unwrap()
                .matches("<circle")
                .count(),
            1
        );
        assert_eq!(
            svg_string(&alpha("{1,2}"), 2)
                .unwrap()
                .matches("<circle")
                .count(),
            6
        );
        assert!(iterate_disks(&alpha("{1,2}"), 3).is_err());
        assert!(iterate_disks(&alpha("{1..200}"), 2).is_err());
    }

    #[test]
    fn svg_is_deterministic() {
        let a = alpha("{1,2,3}");
        assert_eq!(svg_string(&a, 2).unwrap(), svg_string(&a, 2).unwrap());
    }
}
