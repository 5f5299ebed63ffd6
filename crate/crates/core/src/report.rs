//! Machine-readable run records, the table reproduction harness, and the
//! property suites behind `cfdim verify`.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::alphabet::{parse_alphabet, Alphabet, AlphabetSpec, CeilingMode};
use crate::convergents::{check_duality, Word};
use crate::distortion::{
    chain_rule_derivative_modulus, derivative_modulus, verify_distortion, DiskPoint,
};
use crate::enumeration::{word_count, EnumMode};
use crate::error::{Error, Result};
use crate::gaussian::GaussianInt;
use crate::pressure::sandwich_check;
use crate::solver::{
    dimension_bounds, DimensionBounds, RootOutcome, SolverOptions, SweepResult, WidthFit,
};

/// Exponent convention of every pressure sum: terms are `|q|^{-2t}`.
pub const CONVENTION: &str = "q^-2t";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Result for one sign: a root with its final bracket, or why there is none.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SignResult {
    Root { t: f64, lo: f64, hi: f64 },
    NoRoot { reason: String, message: String },
}

impl SignResult {
    pub fn value(&self) -> Option<f64> {
        match self {
            SignResult::Root { t, .. } => Some(*t),
            SignResult::NoRoot { .. } => None,
        }
    }

    fn from_outcome(o: &RootOutcome) -> Self {
        match o {
            RootOutcome::Root(b) => SignResult::Root {
                t: b.root,
                lo: b.lo,
                hi: b.hi,
            },
            RootOutcome::NoRoot(n) => {
                let reason = serde_json::to_value(n)
                    .ok()
                    .and_then(|v| v.get("reason").and_then(|r| r.as_str()).map(String::from))
                    .unwrap_or_else(|| "unknown".into());
                SignResult::NoRoot {
                    reason,
                    message: n.message(),
                }
            }
        }
    }

    fn text(&self) -> String {
        match self {
            SignResult::Root { t, .. } => format!("{t:.9}"),
            SignResult::NoRoot { message, .. } => format!("no root ({message})"),
        }
    }

    fn csv_cell(&self) -> String {
        match self {
            SignResult::Root { t, .. } => format!("{t}"),
            SignResult::NoRoot { reason, .. } => format!("no_root:{reason}"),
        }
    }
}

/// Everything needed to interpret one `T_k^±` computation later.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub convention: String,
    pub version: String,
    pub alphabet: String,
    pub ceiling: Option<u64>,
    pub ceiling_mode: CeilingMode,
    pub digits: u64,
    pub k: u32,
    pub t_minus: SignResult,
    pub t_plus: SignResult,
    pub plus_clamped: bool,
    pub tolerance: f64,
    pub term_count: u64,
    pub stored: bool,
    pub threads: usize,
    /// Omitted with `--no-timing` so output is reproducible byte for byte.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_secs: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_minus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_plus: Option<f64>,
}

pub const CSV_HEADER: &str = "alphabet,ceiling,ceiling_mode,k,t_minus,t_plus,plus_clamped,tolerance,term_count,stored,threads,wall_time_secs,convention,version";

impl RunRecord {
    pub fn new(
        spec: &AlphabetSpec,
        alphabet: &Alphabet,
        bounds: &DimensionBounds,
        threads: usize,
        timing: bool,
    ) -> Self {
        RunRecord {
            convention: CONVENTION.into(),
            version: VERSION.into(),
            alphabet: spec.to_string(),
            ceiling: spec.ceiling,
            ceiling_mode: spec.ceiling_mode,
            digits: alphabet.len() as u64,
            k: bounds.k,
            t_minus: SignResult::from_outcome(&bounds.minus),
            t_plus: SignResult::from_outcome(&bounds.plus),
            plus_clamped: bounds.plus_clamped,
            tolerance: bounds.tolerance,
            term_count: bounds.term_count.min(u64::MAX as u128) as u64,
            stored: bounds.stored,
            threads,
            wall_time_secs: timing.then_some(bounds.wall_time.as_secs_f64()),
            tail_minus: bounds.tail_minus,
            tail_plus: bounds.tail_plus,
        }
    }

    pub fn has_no_root(&self) -> bool {
        self.t_minus.value().is_none() || self.t_plus.value().is_none()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn csv_row(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(Vec::new());
        w.write_record([
            self.alphabet.clone(),
            self.ceiling.map(|c| c.to_string()).unwrap_or_default(),
            format!("{:?}", self.ceiling_mode).to_lowercase(),
            self.k.to_string(),
            self.t_minus.csv_cell(),
            self.t_plus.csv_cell(),
            self.plus_clamped.to_string(),
            self.tolerance.to_string(),
            self.term_count.to_string(),
            self.stored.to_string(),
            self.threads.to_string(),
            self.wall_time_secs
                .map(|t| format!("{t:.6}"))
                .unwrap_or_default(),
            self.convention.clone(),
            self.version.clone(),
        ])
        .expect("write to memory");
        let bytes = w.into_inner().expect("flush to memory");
        String::from_utf8(bytes).expect("utf-8")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let ceiling = match self.ceiling {
            Some(c) => format!(" (ceiling {c}, {:?} mode)", self.ceiling_mode).to_lowercase(),
            None => String::new(),
        };
        writeln!(
            s,
            "alphabet   {}{ceiling}, {} digits",
            self.alphabet, self.digits
        )
        .unwrap();
        writeln!(s, "k          {}", self.k).unwrap();
        writeln!(s, "T_k^-      {}", self.t_minus.text()).unwrap();
        let clamp = if self.plus_clamped {
            " (clamped to 1)"
        } else {
            ""
        };
        writeln!(s, "T_k^+      {}{clamp}", self.t_plus.text()).unwrap();
        if let (Some(a), Some(b)) = (self.t_minus.value(), self.t_plus.value()) {
            writeln!(s, "width      {:.3e}", b - a).unwrap();
        }
        if let (Some(a), Some(b)) = (self.tail_minus, self.tail_plus) {
            writeln!(s, "tail est.  {a:.3e} at T^-, {b:.3e} at T^+").unwrap();
        }
        let mode = if self.stored { "stored" } else { "streamed" };
        writeln!(
            s,
            "terms      {} ({mode}), tol {:e}",
            self.term_count, self.tolerance
        )
        .unwrap();
        let mut tail = format!("threads {}", self.threads);
        if let Some(t) = self.wall_time_secs {
            write!(tail, ", {t:.3} s").unwrap();
        }
        writeln!(
            s,
            "run        {tail}, convention {}, cfdim {}",
            self.convention, self.version
        )
        .unwrap();
        s
    }
}

/// A `k`-sweep with its monotonicity diagnosis and `C/k` width fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub records: Vec<RunRecord>,
    pub monotone: bool,
    pub minus_violations: Vec<u32>,
    pub plus_violations: Vec<u32>,
    pub fit: Option<WidthFit>,
}

impl SweepRecord {
    pub fn new(
        spec: &AlphabetSpec,
        alphabet: &Alphabet,
        sweep: &SweepResult,
        threads: usize,
        timing: bool,
    ) -> Self {
        SweepRecord {
            records: sweep
                .bounds
                .iter()
                .map(|b| RunRecord::new(spec, alphabet, b, threads, timing))
                .collect(),
            monotone: sweep.monotone(),
            minus_violations: sweep.minus_violations.clone(),
            plus_violations: sweep.plus_violations.clone(),
            fit: sweep.fit,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{CSV_HEADER}\n");
        for r in &self.records {
            s.push_str(&r.csv_row());
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(
            s,
            "{:>3}  {:>14}  {:>14}  {:>10}",
            "k", "T_k^-", "T_k^+", "width"
        )
        .unwrap();
        for r in &self.records {
            let cell = |x: &SignResult| {
                x.value()
                    .map(|v| format!("{v:.9}"))
                    .unwrap_or_else(|| "no root".into())
            };
            let width = match (r.t_minus.value(), r.t_plus.value()) {
                (Some(a), Some(b)) => format!("{:.3e}", b - a),
                _ => "-".into(),
            };
            writeln!(
                s,
                "{:>3}  {:>14}  {:>14}  {:>10}",
                r.k,
                cell(&r.t_minus),
                cell(&r.t_plus),
                width
            )
            .unwrap();
        }
        writeln!(s, "monotone: {}", if self.monotone { "yes" } else { "no" }).unwrap();
        if !self.monotone {
            writeln!(
                s,
                "  T^- drops at k = {:?}, T^+ rises at k = {:?}",
                self.minus_violations, self.plus_violations
            )
            .unwrap();
        }
        if let Some(fit) = self.fit {
            writeln!(
                s,
                "width ~ {:.4}/k (rms residual {:.2e})",
                fit.c, fit.rms_residual
            )
            .unwrap();
        }
        s
    }
}

/// One row of a published table.
#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub alphabet: &'static str,
    pub ceiling: Option<u64>,
    pub ceiling_mode: CeilingMode,
    pub k: u32,
    pub published: (f64, f64),
    pub tolerance: f64,
    /// Why the row cannot match under the `q^-2t` convention.
    pub conflict: Option<&'static str>,
}

impl TableRow {
    fn finite(alphabet: &'static str, k: u32, published: (f64, f64), tolerance: f64) -> Self {
        TableRow {
            alphabet,
            ceiling: None,
            ceiling_mode: CeilingMode::Value,
            k,
            published,
            tolerance,
            conflict: None,
        }
    }

    fn infinite(
        alphabet: &'static str,
        ceiling: u64,
        mode: CeilingMode,
        published: (f64, f64),
    ) -> Self {
        TableRow {
            alphabet,
            ceiling: Some(ceiling),
            ceiling_mode: mode,
            k: 1,
            published,
            tolerance: 5e-3,
            conflict: None,
        }
    }

    fn conflicting(mut self, why: &'static str) -> Self {
        self.conflict = Some(why);
        self
    }

    pub fn spec(&self) -> Result<AlphabetSpec> {
        let mut spec = parse_alphabet(self.alphabet)?.with_ceiling_mode(self.ceiling_mode);
        if let Some(c) = self.ceiling {
            spec = spec.with_ceiling(c);
        }
        Ok(spec)
    }
}

const COMPLEX_CONFLICT: &str =
    "not reproduced at any k with either |1+a| or 1+|a| as the distortion factor";

const POWERS_OF_TWO: &str =
    "{16,32,64,128,256,512,1024,2048,4096,8192,16384,32768,65536,131072,262144,524288,1048576}";

/// Rows of tables 1 (complex), 2 (real, finite) and 3 (real, infinite).
/// Arithmetic progressions are truncated to their first `ceiling` terms,
/// cofinite sets at the value `ceiling`; those are the readings under which
/// the published numbers come out.
pub fn table_rows(id: u8) -> Result<Vec<TableRow>> {
    use CeilingMode::{Index, Value};
    let rows = match id {
        1 => vec![
            TableRow::finite("{2..5}x{-8..8}i", 3, (1.28512, 1.47856), 5e-3).conflicting(COMPLEX_CONFLICT),
            TableRow::finite("{2,3}x{-2..2}i", 5, (1.01264, 1.13546), 5e-3).conflicting(COMPLEX_CONFLICT),
            TableRow::finite("{3,4,5}x{-8..8}i", 3, (1.13013, 1.22647), 5e-3).conflicting(COMPLEX_CONFLICT),
            TableRow::finite("{5..8}x{2..5}i", 4, (0.684495, 0.707564), 5e-3),
            TableRow::finite("{10,11}x{10,11}i", 4, (0.255398, 0.258506), 5e-3),
        ],
        2 => vec![
            TableRow::finite("{1,2}", 20, (0.52417, 0.562868), 2e-3),
            TableRow::finite("{2,3}", 20, (0.334398, 0.344864), 1e-3),
            TableRow::finite("{5,6,7,8}", 12, (0.368563, 0.373438), 1e-3),
            TableRow::finite("{10,11}", 16, (0.146668, 0.147231), 1e-3),
            TableRow::finite("{100..104}", 10, (0.193454, 0.193556), 1e-3).conflicting(
                "q^-2t gives 0.17396..0.17403 at k = 10; the published bracket is not reproduced at any k",
            ),
            TableRow::finite(POWERS_OF_TWO, 4, (0.23, 0.23), 5e-3),
        ],
        3 => vec![
            TableRow::infinite("2N", 1_000_000, Index, (0.688063, 0.856625)),
            TableRow::infinite("3N", 1_000_000, Index, (0.626338, 0.662808)),
            TableRow::infinite("4N", 1_000_000, Index, (0.593185, 0.609052)),
            TableRow::infinite("7N", 1_000_000, Index, (0.544423, 0.54838)),
            TableRow::infinite("10N", 500_000, Index, (0.518104, 0.519956)),
            TableRow::infinite("100N", 500_000, Index, (0.417934, 0.417959)),
            TableRow::infinite("F2", 1_000_000, Value, (0.791291, 1.0))
                .conflicting("the printed upper bound is the trivial bound 1; pass --clamp-one to match it"),
            TableRow::infinite("F3", 1_000_000, Value, (0.759746, 0.841966)),
            TableRow::infinite("F5", 1_000_000, Value, (0.728387, 0.757026)),
            TableRow::infinite("F11", 1_000_000, Value, (0.692645, 0.700367)),
            TableRow::infinite("F37", 1_000_000, Value, (0.655331, 0.656722)),
            TableRow::infinite("F1000", 1_000_000, Value, (0.596801, 0.596828)),
        ],
        other => return Err(Error::InvalidArgument(format!("no table {other}; expected 1, 2 or 3"))),
    };
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowFlag {
    Ok,
    /// Known to disagree under the `q^-2t` convention; reported, not gating.
    Flagged,
    /// Outside tolerance at a smaller `k` than published.
    ReducedK,
    Mismatch,
}

impl RowFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            RowFlag::Ok => "ok",
            RowFlag::Flagged => "flagged",
            RowFlag::ReducedK => "reduced_k",
            RowFlag::Mismatch => "mismatch",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableResult {
    pub alphabet: String,
    pub ceiling: Option<u64>,
    pub k: u32,
    pub published_k: u32,
    pub t_minus: Option<f64>,
    pub t_plus: Option<f64>,
    pub paper_t_minus: f64,
    pub paper_t_plus: f64,
    pub delta_minus: Option<f64>,
    pub delta_plus: Option<f64>,
    pub flag: RowFlag,
    pub note: Option<String>,
}

pub const TABLE_CSV_HEADER: &str =
    "alphabet,ceiling,k,t_minus,t_plus,paper_t_minus,paper_t_plus,delta_minus,delta_plus,flag";

pub fn table_csv(results: &[TableResult]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TABLE_CSV_HEADER.split(','))
        .expect("write to memory");
    let opt = |x: Option<f64>| {
        x.map(|v| format!("{v:.9}"))
            .unwrap_or_else(|| "no_root".into())
    };
    let delta = |x: Option<f64>| x.map(|v| format!("{v:.3e}")).unwrap_or_default();
    for r in results {
        w.write_record([
            r.alphabet.clone(),
            r.ceiling.map(|c| c.to_string()).unwrap_or_default(),
            r.k.to_string(),
            opt(r.t_minus),
            opt(r.t_plus),
            r.paper_t_minus.to_string(),
            r.paper_t_plus.to_string(),
            delta(r.delta_minus),
            delta(r.delta_plus),
            r.flag.as_str().to_string(),
        ])
        .expect("write to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8")
}

/// Expected cost multiplier of a streamed run over a stored one: every
/// bisection step re-traverses the word tree.
const STREAMED_COST_FACTOR: f64 = 30.0;

/// The largest `k ≤ row.k` whose predicted run time fits `budget`, from the
/// timing of a small calibration run.
pub fn budget_k(
    alphabet: &Alphabet,
    published_k: u32,
    budget: Duration,
    opts: &SolverOptions,
) -> Result<u32> {
    let n = alphabet.len();
    let mut k_cal = 1;
    while k_cal < published_k && word_count(n, k_cal + 1)? <= 20_000 {
        k_cal += 1;
    }
    let started = Instant::now();
    let cal = dimension_bounds(alphabet, k_cal, opts)?;
    let per_term = started.elapsed().as_secs_f64() / cal.term_count.max(1) as f64;
    let mut k = published_k;
    while k > k_cal {
        let terms = word_count(n, k).unwrap_or(u128::MAX);
        let stored = opts.mode == EnumMode::Stored
            || (opts.mode == EnumMode::Auto && terms <= opts.enumeration.mem_cap);
        let factor = if stored { 1.0 } else { STREAMED_COST_FACTOR };
        if terms as f64 * per_term * factor <= budget.as_secs_f64() {
            break;
        }
        k -= 1;
    }
    Ok(k)
}

/// Recomputes one row, shrinking `k` to fit `budget` when given.
pub fn run_table_row(
    row: &TableRow,
    budget: Option<Duration>,
    opts: &SolverOptions,
) -> Result<TableResult> {
    let spec = row.spec()?;
    let alphabet = spec.materialize()?;
    let k = match budget {
        Some(b) => budget_k(&alphabet, row.k, b, opts)?,
        None => row.k,
    };
    let bounds = dimension_bounds(&alphabet, k, opts)?;
    let (t_minus, t_plus) = (bounds.t_minus(), bounds.t_plus());
    let delta_minus = t_minus.map(|t| t - row.published.0);
    let delta_plus = t_plus.map(|t| t - row.published.1);
    let within = |d: Option<f64>| d.is_some_and(|d| d.abs() <= row.tolerance);
    let matches = within(delta_minus) && within(delta_plus);
    let flag = if matches {
        RowFlag::Ok
    } else if row.conflict.is_some() {
        RowFlag::Flagged
    } else if k < row.k {
        RowFlag::ReducedK
    } else {
        RowFlag::Mismatch
    };
    Ok(TableResult {
        alphabet: spec.to_string(),
        ceiling: row.ceiling,
        k,
        published_k: row.k,
        t_minus,
        t_plus,
        paper_t_minus: row.published.0,
        paper_t_plus: row.published.1,
        delta_minus,
        delta_plus,
        flag,
        note: if matches {
            None
        } else {
            row.conflict.map(String::from)
        },
    })
}

/// Recomputes a whole table; `budget` is shared evenly between the rows.
pub fn run_table(
    id: u8,
    budget: Option<Duration>,
    opts: &SolverOptions,
) -> Result<Vec<TableResult>> {
    let rows = table_rows(id)?;
    let per_row = budget.map(|b| b / rows.len() as u32);
    rows.iter()
        .map(|r| run_table_row(r, per_row, opts))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Lemmas,
    Distortion,
    Sandwich,
    All,
}

impl std::str::FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lemmas" => Ok(Suite::Lemmas),
            "distortion" => Ok(Suite::Distortion),
            "sandwich" => Ok(Suite::Sandwich),
            "all" => Ok(Suite::All),
            other => Err(Error::InvalidArgument(format!("unknown suite {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckLine {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub checks: Vec<CheckLine>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            writeln!(s, "{tag}  {:<28} {}", c.name, c.detail).unwrap();
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Parameters of `verify`; `alphabet` and `k` restrict the distortion and
/// sandwich suites to one alphabet.
#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub seed: u64,
    pub words: usize,
    pub samples: usize,
    pub alphabet: Option<Alphabet>,
    pub k: Option<u32>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 0,
            words: 1000,
            samples: 64,
            alphabet: None,
            k: None,
        }
    }
}

/// A random word whose digits have real part in `1..=12`; with `complex`,
/// imaginary parts range over `-6..=6`.
pub fn random_word(rng: &mut impl Rng, len: usize, complex: bool) -> Word {
    let digits = (0..len.max(1))
        .map(|_| {
            let re = rng.random_range(1..=12i64);
            let im = if complex {
                rng.random_range(-6..=6i64)
            } else {
                0
            };
            GaussianInt::new(re, im)
        })
        .collect();
    Word::new(digits).expect("digits have positive real part")
}

fn random_word_over(rng: &mut impl Rng, alphabet: &Alphabet, len: usize) -> Word {
    let d = alphabet.digits();
    Word::new(
        (0..len)
            .map(|_| d[rng.random_range(0..d.len())].clone())
            .collect(),
    )
    .expect("alphabet digits")
}

fn random_disk_point(rng: &mut impl Rng) -> DiskPoint {
    let theta = rng.random_range(0.0..std::f64::consts::TAU);
    let r = 0.5 * rng.random::<f64>().sqrt();
    DiskPoint::new(Complex64::new(0.5, 0.0) + Complex64::from_polar(r, theta)).expect("inside D")
}

fn lemma_checks(opts: &VerifyOptions, rng: &mut ChaCha8Rng) -> Vec<CheckLine> {
    let mut failures = [0usize; 3];
    for i in 0..opts.words {
        let len = rng.random_range(2..=25);
        let word = random_word(rng, len, i % 2 == 1);
        let r = check_duality(&word);
        for (f, ok) in failures.iter_mut().zip([
            r.shift_identity,
            Some(r.reversal_symmetry),
            Some(r.unit_shift_identity),
        ]) {
            if ok == Some(false) {
                *f += 1;
            }
        }
    }
    let names = ["shift identity", "reversal symmetry", "unit-shift identity"];
    let mut out: Vec<CheckLine> = names
        .iter()
        .zip(failures)
        .map(|(name, f)| CheckLine {
            name: name.to_string(),
            passed: f == 0,
            detail: format!("{f} of {} random words fail", opts.words),
        })
        .collect();

    let pairs = 200;
    let mut worst = 0.0f64;
    for i in 0..pairs {
        let len = rng.random_range(1..=25);
        let word = random_word(rng, len, i % 2 == 1);
        let z = random_disk_point(rng);
        let a = chain_rule_derivative_modulus(&word, z);
        let b = derivative_modulus(&word, z);
        worst = worst.max(((a - b) / b).abs());
    }
    out.push(CheckLine {
        name: "derivative identity".into(),
        passed: worst <= 1e-10,
        detail: format!("max relative deviation {worst:.2e} over {pairs} pairs"),
    });
    out
}

fn distortion_checks(opts: &VerifyOptions, rng: &mut ChaCha8Rng) -> Result<Vec<CheckLine>> {
    let words = 200;
    let mut bad = Vec::new();
    let mut pairs = 0usize;
    for _ in 0..words {
        let word = match &opts.alphabet {
            Some(a) => random_word_over(rng, a, opts.k.unwrap_or(5).max(1) as usize),
            None => {
                let len = rng.random_range(1..=12);
                random_word(rng, len, false)
            }
        };
        let r = verify_distortion(&word, opts.samples, rng.random())?;
        pairs += r.pairs;
        if !r.passed() {
            bad.push(word.to_string());
        }
    }
    let mut detail = format!("{} of {words} words fail ({pairs} ratio pairs)", bad.len());
    if let Some(first) = bad.first() {
        write!(detail, ", e.g. {first}").unwrap();
    }
    Ok(vec![CheckLine {
        name: "distortion bracket".into(),
        passed: bad.is_empty(),
        detail,
    }])
}

fn sandwich_checks(opts: &VerifyOptions) -> Result<Vec<CheckLine>> {
    let alphabets = match &opts.alphabet {
        Some(a) => vec![a.clone()],
        None => vec![
            Alphabet::from_integers(&[1, 2])?,
            Alphabet::from_integers(&[2, 3])?,
        ],
    };
    let ks = match opts.k {
        Some(k) => vec![k],
        None => vec![1, 2],
    };
    let mut out = Vec::new();
    for a in &alphabets {
        for &k in &ks {
            let mut failed = Vec::new();
            for t in [0.2, 0.5, 0.8] {
                let r = sandwich_check(a, k, 2, t)?;
                if !r.strict() {
                    failed.push(t);
                }
            }
            let digits: Vec<String> = a.digits().iter().map(|d| d.to_string()).collect();
            out.push(CheckLine {
                name: format!("sandwich {{{}}} k={k} n=2", digits.join(",")),
                passed: failed.is_empty(),
                detail: if failed.is_empty() {
                    "strict at t = 0.2, 0.5, 0.8".into()
                } else {
                    format!("not strict at t = {failed:?}")
                },
            });
        }
    }
    Ok(out)
}

pub fn run_verify(suite: Suite, opts: &VerifyOptions) -> Result<VerifyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut checks = Vec::new();
    if matches!(suite, Suite::Lemmas | Suite::All) {
        checks.extend(lemma_checks(opts, &mut rng));
    }
    if matches!(suite, Suite::Distortion | Suite::All) {
        checks.extend(distortion_checks(opts, &mut rng)?);
    }
    if matches!(suite, Suite::Sandwich | Suite::All) {
        checks.extend(sandwich_checks(opts)?);
    }
    Ok(VerifyReport {
        seed: opts.seed,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(alpha: &str, k: u32) -> RunRecord {
        let spec = parse_alphabet(alpha).unwrap();
        let a = spec.materialize().unwrap();
        let b = dimension_bounds(&a, k, &SolverOptions::default()).unwrap();
        RunRecord::new(&spec, &a, &b, 1, true)
    }

    #[test]
    fn json_round_trip() {
        for (alpha, k) in [("{2,3}", 6), ("{1,2}", 1), ("{2}", 2)] {
            let r = record(alpha, k);
            let back = RunRecord::from_json(&r.to_json()).unwrap();
            assert_eq!(back, r);
            assert_eq!(back.to_json(), r.to_json());
            assert_eq!(r.convention, "q^-2t");
        }
    }

    #[test]
    fn no_root_is_reported_with_reason() {
        let r = record("{1,2}", 1);
        assert!(r.has_no_root());
        match &r.t_plus {
            SignResult::NoRoot { reason, .. } => assert_eq!(reason, "not_monotone"),
            other => panic!("{other:?}"),
        }
        assert!(r.csv_row().contains("no_root:not_monotone"));
    }

    #[test]
    fn csv_row_matches_header() {
        let r = record("{2,3}", 4);
        let cols = CSV_HEADER.split(',').count();
        let row = r.csv_row();
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_reader(row.as_bytes());
        let rec = rdr.records().next().unwrap().unwrap();
        assert_eq!(rec.len(), cols);
        assert_eq!(&rec[0], "{2,3}");
    }

    #[test]
    fn text_mentions_both_bounds() {
        let t = record("{2,3}", 5).to_text();
        assert!(t.contains("T_k^-") && t.contains("T_k^+") && t.contains("q^-2t"));
    }

    #[test]
    fn table_ids() {
        assert_eq!(table_rows(1).unwrap().len(), 5);
        assert!(table_rows(2).unwrap().iter().any(|r| r.conflict.is_some()));
        assert!(table_rows(4).is_err());
        for id in 1..=3 {
            for row in table_rows(id).unwrap() {
                row.spec().unwrap();
            }
        }
    }

    #[test]
    fn cheap_table_row() {
        let row = TableRow::finite("{10,11}", 6, (0.146668, 0.147231), 1e-3);
        let r = run_table_row(&row, None, &SolverOptions::default()).unwrap();
        assert_eq!(r.k, 6);
        assert!(r.t_minus.unwrap() < 0.146668 + 1e-4);
        let csv = table_csv(&[r]);
        assert!(csv.starts_with(TABLE_CSV_HEADER));
    }

    #[test]
    fn budget_shrinks_k() {
        let a = Alphabet::from_integers(&[1, 2]).unwrap();
        let k = budget_k(&a, 30, Duration::from_millis(1), &SolverOptions::default()).unwrap();
        assert!(k < 30);
    }

    #[test]
    fn verify_suites_pass() {
        let opts = VerifyOptions {
            seed: 7,
            words: 200,
            samples: 16,
            ..Default::default()
        };
        let r = run_verify(Suite::All, &opts).unwrap();
        assert!(r.passed(), "{}", r.to_text());
        assert_eq!(run_verify(Suite::All, &opts).unwrap(), r);
    }

    #[test]
    fn suite_names() {
        assert_eq!("sandwich".parse::<Suite>().unwrap(), Suite::Sandwich);
        assert!("nope".parse::<Suite>().is_err());
    }
}
