//! Digit alphabets `I ⊂ ℕ×ℤi` and their finite materialization.
//!
//! Grammar (whitespace ignored):
//!
//! ```text
//! {n1,n2,...}        explicit list; items may be Gaussian integers or a..b ranges
//! {a..b}             integer range
//! <a>N               progression aℕ = {a, 2a, 3a, ...}   (bare `N` means 1N)
//! F<n>               cofinite set ℕ \ {1, ..., n-1}
//! <set>x<set>i       complex rectangle, both sets in {..} form
//! ```
//!
//! Infinite kinds need a ceiling before they can be materialized.

use std::fmt;
use std::path::Path;

use num_bigint::BigInt;
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::GaussianInt;

/// How a ceiling truncates an infinite alphabet.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CeilingMode {
    /// Keep digits whose real part is at most the ceiling.
    #[default]
    Value,
    /// Keep the first `ceiling` digits of the infinite sequence
    /// (`2N` with ceiling `c` becomes `{2, 4, ..., 2c}`).
    Index,
}

impl std::str::FromStr for CeilingMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "value" => Ok(CeilingMode::Value),
            "index" => Ok(CeilingMode::Index),
            other => Err(Error::Syntax(format!("unknown ceiling mode {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AlphabetKind {
    Explicit(Vec<GaussianInt>),
    Range {
        lo: i64,
        hi: i64,
    },
    Progression {
        step: i64,
    },
    Cofinite {
        start: i64,
    },
    Rectangle {
        re: Vec<i64>,
        im: Vec<i64>,
    },
    /// Digits read from a file, one per line.
    Listed {
        source: String,
        digits: Vec<GaussianInt>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlphabetSpec {
    pub kind: AlphabetKind,
    pub ceiling: Option<u64>,
    pub ceiling_mode: CeilingMode,
}

/// Where the digits dropped by a ceiling start, for tail diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OmittedTail {
    pub first_omitted: f64,
    pub spacing: f64,
}

impl OmittedTail {
    /// Integral estimate of `Σ_{b omitted} b^{-2t}`; infinite when `2t ≤ 1`.
    pub fn estimate(&self, t: f64) -> f64 {
        let s = 2.0 * t;
        if s <= 1.0 {
            return f64::INFINITY;
        }
        self.first_omitted.powf(1.0 - s) / (self.spacing * (s - 1.0))
    }
}

/// A finite, duplicate-free digit list ordered by `(Re, Im)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Alphabet {
    digits: Vec<GaussianInt>,
    tail: Option<OmittedTail>,
}

impl Alphabet {
    pub fn new(digits: impl IntoIterator<Item = GaussianInt>) -> Result<Self> {
        let mut digits: Vec<GaussianInt> = digits.into_iter().collect();
        for d in &digits {
            check_digit(d)?;
        }
        digits.sort_by(|a, b| (&a.re, &a.im).cmp(&(&b.re, &b.im)));
        digits.dedup();
        if digits.is_empty() {
            return Err(Error::EmptyAlphabet);
        }
        Ok(Alphabet { digits, tail: None })
    }

    pub fn from_integers(values: &[i64]) -> Result<Self> {
        Alphabet::new(values.iter().map(|&v| GaussianInt::real(v)))
    }

    pub fn digits(&self) -> &[GaussianInt] {
        &self.digits
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn is_real(&self) -> bool {
        self.digits.iter().all(GaussianInt::is_real)
    }

    pub fn tail(&self) -> Option<OmittedTail> {
        self.tail
    }
}

fn check_digit(d: &GaussianInt) -> Result<()> {
    if d.re < BigInt::one() {
        return Err(Error::InvalidDigit(d.to_string()));
    }
    Ok(())
}

impl AlphabetSpec {
    pub fn new(kind: AlphabetKind) -> Self {
        AlphabetSpec {
            kind,
            ceiling: None,
            ceiling_mode: CeilingMode::Value,
        }
    }

    pub fn with_ceiling(mut self, ceiling: u64) -> Self {
        self.ceiling = Some(ceiling);
        self
    }

    pub fn with_ceiling_mode(mut self, mode: CeilingMode) -> Self {
        self.ceiling_mode = mode;
        self
    }

    pub fn is_infinite(&self) -> bool {
        matches!(
            self.kind,
            AlphabetKind::Progression { .. } | AlphabetKind::Cofinite { .. }
        )
    }

    /// Reads one digit per line; blank lines and `#` comments are skipped.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut digits = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let d: GaussianInt = line.parse().map_err(|_| {
                Error::Syntax(format!("{}:{}: bad digit {line:?}", path.display(), no + 1))
            })?;
            check_digit(&d)?;
            digits.push(d);
        }
        if digits.is_empty() {
            return Err(Error::EmptyAlphabet);
        }
        Ok(AlphabetSpec::new(AlphabetKind::Listed {
            source: path.display().to_string(),
            digits,
        }))
    }

    pub fn materialize(&self) -> Result<Alphabet> {
        let cap = self.ceiling.map(BigInt::from);
        let under_cap = |d: &GaussianInt| cap.as_ref().is_none_or(|c| &d.re <= c);
        let finite = |digits: Vec<GaussianInt>| -> Result<Alphabet> {
            Alphabet::new(digits.into_iter().filter(|d| under_cap(d)))
        };
        match &self.kind {
            AlphabetKind::Explicit(d) | AlphabetKind::Listed { digits: d, .. } => finite(d.clone()),
            AlphabetKind::Range { lo, hi } => finite((*lo..=*hi).map(GaussianInt::real).collect()),
            AlphabetKind::Rectangle { re, im } => finite(
                re.iter()
                    .flat_map(|&a| im.iter().map(move |&b| GaussianInt::new(a, b)))
                    .collect(),
            ),
            AlphabetKind::Progression { step } => {
                let c = self.require_ceiling()?;
                let step_u = *step as u64;
                let count = match self.ceiling_mode {
                    CeilingMode::Value => c / step_u,
                    CeilingMode::Index => c,
                };
                let mut a = Alphabet::new((1..=count).map(|j| GaussianInt::real(j * step_u)))?;
                a.tail = Some(OmittedTail {
                    first_omitted: ((count + 1) * step_u) as f64,
                    spacing: step_u as f64,
                });
                Ok(a)
            }
            AlphabetKind::Cofinite { start } => {
                let c = self.require_ceiling()?;
                let start_u = *start as u64;
                let last = match self.ceiling_mode {
                    CeilingMode::Value => c,
                    CeilingMode::Index => start_u + c - 1,
                };
                let mut a = Alphabet::new((start_u..=last).map(GaussianInt::real))?;
                a.tail = Some(OmittedTail {
                    first_omitted: (last + 1) as f64,
                    spacing: 1.0,
                });
                Ok(a)
            }
        }
    }

    fn require_ceiling(&self) -> Result<u64> {
        self.ceiling
            .ok_or_else(|| Error::MissingCeiling(self.kind_text()))
    }

    fn kind_text(&self) -> String {
        match &self.kind {
            AlphabetKind::Explicit(d) => {
                let items: Vec<String> = d.iter().map(|x| x.to_string()).collect();
                format!("{{{}}}", items.join(","))
            }
            AlphabetKind::Range { lo, hi } => format!("{{{lo}..{hi}}}"),
            AlphabetKind::Progression { step } => format!("{step}N"),
            AlphabetKind::Cofinite { start } => format!("F{start}"),
            AlphabetKind::Rectangle { re, im } => {
                format!("{}x{}i", int_set_text(re), int_set_text(im))
            }
            AlphabetKind::Listed { source, .. } => format!("@{source}"),
        }
    }
}

fn int_set_text(v: &[i64]) -> String {
    let contiguous = v.windows(2).all(|w| w[1] == w[0] + 1);
    if v.len() > 2 && contiguous {
        format!("{{{}..{}}}", v[0], v[v.len() - 1])
    } else {
        let items: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        format!("{{{}}}", items.join(","))
    }
}

impl fmt::Display for AlphabetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.kind_text())
    }
}

impl std::str::FromStr for AlphabetSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_alphabet(s)
    }
}

/// Parses an alphabet expression; nothing is materialized.
pub fn parse_alphabet(spec: &str) -> Result<AlphabetSpec> {
    let txt: String = spec
        .chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| if c == '×' { 'x' } else { c })
        .collect();
    let syntax = |msg: &str| Error::Syntax(format!("{msg} in alphabet {spec:?}"));
    if txt.is_empty() {
        return Err(Error::EmptyAlphabet);
    }

    if let Some(rest) = txt.strip_prefix('F') {
        let start: i64 = rest.parse().map_err(|_| syntax("bad cofinite index"))?;
        if start < 1 {
            return Err(Error::InvalidDigit(start.to_string()));
        }
        return Ok(AlphabetSpec::new(AlphabetKind::Cofinite { start }));
    }
    if let Some(rest) = txt.strip_suffix('N') {
        let step: i64 = if rest.is_empty() {
            1
        } else {
            rest.parse().map_err(|_| syntax("bad progression step"))?
        };
        if step < 1 {
            return Err(Error::InvalidDigit(step.to_string()));
        }
        return Ok(AlphabetSpec::new(AlphabetKind::Progression { step }));
    }
    if let Some(body) = txt.strip_suffix('i') {
        if let Some((re_txt, im_txt)) = body.split_once("}x{") {
            let re = parse_int_set(&format!("{re_txt}}}")).map_err(|_| syntax("bad real set"))?;
            let im =
                parse_int_set(&format!("{{{im_txt}")).map_err(|_| syntax("bad imaginary set"))?;
            if re.is_empty() || im.is_empty() {
                return Err(Error::EmptyAlphabet);
            }
            if let Some(&bad) = re.iter().find(|&&a| a < 1) {
                return Err(Error::InvalidDigit(bad.to_string()));
            }
            return Ok(AlphabetSpec::new(AlphabetKind::Rectangle { re, im }));
        }
    }

    let inner = txt
        .strip_prefix('{')
        .and_then(|t| t.strip_suffix('}'))
        .ok_or_else(|| syntax("expected {..}, <a>N, F<n> or a rectangle"))?;
    if inner.is_empty() {
        return Err(Error::EmptyAlphabet);
    }
    let items: Vec<&str> = inner.split(',').collect();
    if let [single] = items.as_slice() {
        if let Some((lo, hi)) = single.split_once("..") {
            let lo: i64 = lo.parse().map_err(|_| syntax("bad range"))?;
            let hi: i64 = hi.parse().map_err(|_| syntax("bad range"))?;
            if lo > hi {
                return Err(Error::EmptyAlphabet);
            }
            if lo < 1 {
                return Err(Error::InvalidDigit(lo.to_string()));
            }
            return Ok(AlphabetSpec::new(AlphabetKind::Range { lo, hi }));
        }
    }
    let mut digits = Vec::new();
    for item in items {
        if let Some((lo, hi)) = item.split_once("..") {
            let lo: i64 = lo.parse().map_err(|_| syntax("bad range"))?;
            let hi: i64 = hi.parse().map_err(|_| syntax("bad range"))?;
            digits.extend((lo..=hi).map(GaussianInt::real));
        } else {
            digits.push(item.parse::<GaussianInt>()?);
        }
    }
    if digits.is_empty() {
        return Err(Error::EmptyAlphabet);
    }
    if let Some(bad) = digits.iter().find(|d| !d.re.is_positive()) {
        return Err(Error::InvalidDigit(bad.to_string()));
    }
    Ok(AlphabetSpec::new(AlphabetKind::Explicit(digits)))
}

fn parse_int_set(txt: &str) -> Result<Vec<i64>> {
    let bad = || Error::Syntax(format!("bad integer set {txt:?}"));
    let inner = txt
        .strip_prefix('{')
        .and_then(|t| t.strip_suffix('}'))
        .ok_or_else(bad)?;
    let mut out = Vec::new();
    for item in inner.split(',').filter(|s| !s.is_empty()) {
        if let Some((lo, hi)) = item.split_once("..") {
            let lo: i64 = lo.parse().map_err(|_| bad())?;
            let hi: i64 = hi.parse().map_err(|_| bad())?;
            out.extend(lo..=hi);
        } else {
            out.push(item.parse().map_err(|_| bad())?);
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Parses a ceiling given as an integer or in `1e6` / `5e5` notation.
pub fn parse_ceiling(s: &str) -> Result<u64> {
    let bad = || Error::Syntax(format!("bad ceiling {s:?}"));
    if let Ok(v) = s.parse::<u64>() {
        return if v == 0 { Err(bad()) } else { Ok(v) };
    }
    let (mant, exp) = s.split_once(['e', 'E']).ok_or_else(bad)?;
    let mant: u64 = mant.parse().map_err(|_| bad())?;
    let exp: u32 = exp.parse().map_err(|_| bad())?;
    let v = 10u64
        .checked_pow(exp)
        .and_then(|p| p.checked_mul(mant))
        .ok_or_else(bad)?;
    if v == 0 {
        return Err(bad());
    }
    Ok(v)
}
