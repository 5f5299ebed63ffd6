//! Acceptance oracles. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any gating criterion fails.

use std::time::{Duration, Instant};

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cfdim_core::alphabet::{parse_alphabet, Alphabet};
use cfdim_core::convergents::check_duality;
use cfdim_core::distortion::{
    chain_rule_derivative_modulus, derivative_modulus, verify_distortion, DiskPoint,
};
use cfdim_core::pressure::sandwich_check;
use cfdim_core::render::{image_disk, iterate_disks, DiskImage};
use cfdim_core::report::{random_word, run_table_row, table_rows, RowFlag, RunRecord, TableRow};
use cfdim_core::solver::{NoRoot, RootOutcome};
use cfdim_core::{dimension_bounds, sweep, GaussianInt, SolverOptions};

struct Outcome {
    passed: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn alpha(s: &str) -> Alphabet {
    parse_alphabet(s).unwrap().materialize().unwrap()
}

fn threads() -> usize {
    std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .max(4)
}

fn exact_identities() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut failures = 0;
    for i in 0..1000 {
        let len = rng.random_range(2..=25);
        let w = random_word(&mut rng, len, i % 2 == 1);
        if !check_duality(&w).passed() {
            failures += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        failures == 0 && secs < 10.0,
        format!("{failures}/1000 words fail, {secs:.2} s"),
    )
}

fn derivative_identity() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for i in 0..200 {
        let len = rng.random_range(1..=25);
        let w = random_word(&mut rng, len, i % 2 == 0);
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        let r = 0.5 * rng.random::<f64>().sqrt();
        let z = DiskPoint::new(num_complex::Complex64::new(
            0.5 + r * theta.cos(),
            r * theta.sin(),
        ))
        .unwrap();
        let chain = chain_rule_derivative_modulus(&w, z);
        let closed = derivative_modulus(&w, z);
        worst = worst.max(((chain - closed) / closed).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-10 && secs < 10.0,
        format!("max relative deviation {worst:.2e}, {secs:.2} s"),
    )
}

// Words have real digits: for complex digits the extremes of |q| on the
// disk move off the corners and the bracket can fail.
fn distortion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut bad = 0;
    let mut pairs = 0;
    for _ in 0..200 {
        let len = rng.random_range(1..=15);
        let w = random_word(&mut rng, len, false);
        let r = verify_distortion(&w, 48, rng.random()).unwrap();
        pairs += r.pairs;
        if !r.passed() {
            bad += 1;
        }
    }
    outcome(
        bad == 0,
        format!("{bad}/200 real words fail, {pairs} ratio pairs"),
    )
}

fn sandwich() -> Outcome {
    let start = Instant::now();
    let mut fails = Vec::new();
    for a in ["{1,2}", "{2,3}"] {
        for k in [1, 2] {
            for t in [0.2, 0.5, 0.8] {
                let r = sandwich_check(&alpha(a), k, 2, t).unwrap();
                if !r.strict() {
                    fails.push(format!("{a} k={k} t={t}"));
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        fails.is_empty() && secs < 30.0,
        format!("12 cases, failures {fails:?}, {secs:.2} s"),
    )
}

fn known_value() -> Outcome {
    const DIM: f64 = 0.531280506;
    let start = Instant::now();
    let a = alpha("{1,2}");
    let opts = SolverOptions::default().with_threads(threads());
    let mut bad = Vec::new();
    let mut last = None;
    for k in 2..=20 {
        let b = dimension_bounds(&a, k, &opts).unwrap();
        match (b.t_minus(), b.t_plus()) {
            (Some(lo), Some(hi)) if lo < DIM && DIM < hi => {}
            other => bad.push((k, other)),
        }
        last = Some(b);
    }
    let b = last.unwrap();
    let (lo, hi) = (
        b.t_minus().unwrap_or(f64::NAN),
        b.t_plus().unwrap_or(f64::NAN),
    );
    let close = (lo - 0.52417).abs() <= 2e-3 && (hi - 0.562868).abs() <= 2e-3;
    let secs = start.elapsed().as_secs_f64();
    outcome(
        bad.is_empty() && close && secs < 120.0,
        format!("bracket fails at {bad:?}; k=20: ({lo:.6}, {hi:.6}), {secs:.2} s"),
    )
}

fn monotone_rate() -> Outcome {
    let s = sweep(&alpha("{2,3}"), 10, &SolverOptions::default()).unwrap();
    let w = |k: usize| s.widths[k - 1].unwrap_or(f64::NAN);
    let ratios: Vec<f64> = (2..=5).map(|k| w(k) / w(2 * k)).collect();
    let rate_ok = ratios.iter().all(|r| (1.4..=2.8).contains(r));
    outcome(
        s.monotone() && rate_ok,
        format!(
            "monotone {}, w_k/w_2k for k=2..5: {:?}",
            s.monotone(),
            ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>()
        ),
    )
}

fn table_rows_soft() -> Outcome {
    let opts = SolverOptions::default().with_threads(threads());
    let pick = |id: u8, name: &str| -> TableRow {
        table_rows(id)
            .unwrap()
            .into_iter()
            .find(|r| r.alphabet == name)
            .unwrap()
    };
    let mut rows = vec![pick(2, "{2,3}"), pick(2, "{10,11}"), pick(2, "{100..104}")];
    for name in ["2N", "3N", "F3", "F5"] {
        let mut r = pick(3, name);
        r.tolerance = 5e-3;
        rows.push(r);
    }
    let powers = table_rows(2)
        .unwrap()
        .into_iter()
        .find(|r| r.alphabet.starts_with("{16,"))
        .unwrap();
    rows.push(powers);

    let mut gating_ok = true;
    let mut parts = Vec::new();
    for row in &rows {
        let res = run_table_row(row, Some(Duration::from_secs(60)), &opts).unwrap();
        let label = if row.alphabet.starts_with("{16,") {
            "2^4..2^20"
        } else {
            row.alphabet
        };
        if row.conflict.is_none() && res.flag != RowFlag::Ok {
            gating_ok = false;
        }
        if row.conflict.is_some() && res.flag != RowFlag::Flagged {
            gating_ok = false;
        }
        let d = |x: Option<f64>| x.map_or("none".into(), |v| format!("{v:+.1e}"));
        parts.push(format!(
            "{label}:{}({},{})",
            res.flag.as_str(),
            d(res.delta_minus),
            d(res.delta_plus)
        ));
    }
    // the powers-of-2 claim is stated to two decimals
    let p = rows.last().unwrap();
    let b = dimension_bounds(&p.spec().unwrap().materialize().unwrap(), p.k, &opts).unwrap();
    let two_dec = |x: Option<f64>| x.is_some_and(|v| (v * 100.0).round() == 23.0);
    let powers_ok = two_dec(b.t_minus()) && two_dec(b.t_plus());
    outcome(gating_ok && powers_ok, parts.join(" "))
}

fn degenerate() -> Outcome {
    let opts = SolverOptions::default();
    let single = dimension_bounds(&alpha("{2}"), 3, &opts).unwrap();
    let single_ok = single.t_minus() == Some(0.0) && single.t_plus() == Some(0.0);
    let pair = dimension_bounds(&alpha("{1,2}"), 1, &opts).unwrap();
    let diag_ok = pair.plus == RootOutcome::NoRoot(NoRoot::NotMonotone { offending_words: 1 });
    outcome(
        single_ok && diag_ok && pair.t_minus().is_some(),
        format!(
            "singleton ({:?}, {:?}); {{1,2}} k=1 plus: {:?}",
            single.t_minus(),
            single.t_plus(),
            pair.plus
        ),
    )
}

fn rendering() -> Outcome {
    let disks = iterate_disks(&alpha("{1,2}"), 2).unwrap();
    let base = DiskImage::base();
    let mut nested = true;
    for d in &disks {
        let parent = if d.depth() == 2 {
            image_disk(&d.word[..1]).unwrap()
        } else {
            base.clone()
        };
        nested &= parent.contains(d);
    }
    let mut disjoint = true;
    for (i, x) in disks.iter().enumerate() {
        for y in &disks[i + 1..] {
            if x.depth() == y.depth() {
                disjoint &= x.interiors_disjoint(y);
            }
        }
    }
    let d1 = image_disk(&[GaussianInt::real(1)]).unwrap();
    let q = |n: i64, d: i64| BigRational::new(n.into(), d.into());
    let exact = d1.center_re == q(3, 4) && d1.center_im == q(0, 1) && d1.radius == q(1, 4);
    outcome(
        nested && disjoint && exact && disks.len() == 6,
        format!(
            "{} disks, nested {nested}, disjoint {disjoint}, phi_1(D) = disk(3/4, 1/4) {exact}",
            disks.len()
        ),
    )
}

fn determinism() -> Outcome {
    let spec = parse_alphabet("{1,2,3}").unwrap();
    let a = spec.materialize().unwrap();
    let single = SolverOptions::default().with_threads(1);
    let run = |opts: &SolverOptions, th: usize| {
        let b = dimension_bounds(&a, 11, opts).unwrap();
        RunRecord::new(&spec, &a, &b, th, false)
    };
    let (r1, r2) = (run(&single, 1), run(&single, 1));
    let bytes_equal = r1.to_json() == r2.to_json() && r1.csv_row() == r2.csv_row();
    let multi = run(&SolverOptions::default().with_threads(threads()), threads());
    let gap = |x: Option<f64>, y: Option<f64>| (x.unwrap() - y.unwrap()).abs();
    let dm = gap(r1.t_minus.value(), multi.t_minus.value());
    let dp = gap(r1.t_plus.value(), multi.t_plus.value());
    outcome(
        bytes_equal && dm <= 1e-9 && dp <= 1e-9,
        format!(
            "single-thread byte-identical {bytes_equal}; {}-thread deltas {dm:.1e}, {dp:.1e}",
            threads()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("exact convergent identities", exact_identities),
        ("derivative identity", derivative_identity),
        ("distortion bracket", distortion),
        ("sandwich oracle", sandwich),
        ("known dimension of {1,2}", known_value),
        ("monotonicity and O(1/k) rate", monotone_rate),
        ("table reproduction", table_rows_soft),
        ("degenerate alphabets", degenerate),
        ("disk rendering", rendering),
        ("determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let o = check();
        let tag = if o.passed { "PASS" } else { "FAIL" };
        println!(
            "criterion {:>2} {tag}  {name}: {} [{:.1} s]",
            i + 1,
            o.detail,
            start.elapsed().as_secs_f64()
        );
        failed += usize::from(!o.passed);
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
