//! Invariant suites, each producing one [`CheckResult`] per check.
//!
//! The digit transforms are injected through [`Transforms`] so a harness can
//! swap in a broken implementation and watch the suites fail.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::digits::{self, Base};
use crate::dimension::{box_count, verify_convergence, Family};
use crate::error::{Error, Result};
use crate::grid::{
    expected_cell_count, ifs_generator, indicator, iterate_generator, GridSpec, PatternQuery,
    Target, TransformKind,
};

pub type DigitFn = fn(u64, u64, Base) -> Result<u64>;

#[derive(Debug, Clone, Copy)]
pub struct Transforms {
    pub cvt: DigitFn,
    pub sv: DigitFn,
    pub evt_max: DigitFn,
    pub evt_min: DigitFn,
}

impl Default for Transforms {
    fn default() -> Self {
        Transforms {
            cvt: digits::cvt,
            sv: digits::sv,
            evt_max: digits::evt_max,
            evt_min: digits::evt_min,
        }
    }
}

impl Transforms {
    /// A carry transform that drops the carry out of the lowest digit.
    /// Only for exercising failure paths.
    pub fn corrupted() -> Self {
        fn bad_cvt(a: u64, b: u64, base: Base) -> Result<u64> {
            let n = base.get();
            let v = digits::cvt(a, b, base)?;
            Ok(if (a % n + b % n) >= n { v - n } else { v })
        }
        Transforms {
            cvt: bad_cvt,
            ..Self::default()
        }
    }

    fn apply(&self, t: TransformKind, a: u64, b: u64, base: Base) -> Result<u64> {
        match t {
            TransformKind::Cvt => (self.cvt)(a, b, base),
            TransformKind::EvtMax => (self.evt_max)(a, b, base),
            TransformKind::EvtMin => (self.evt_min)(a, b, base),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Identities,
    Lattice,
    Substitution,
    Counts,
    Convergence,
    BoxCount,
    All,
}

impl Suite {
    const EACH: [Suite; 6] = [
        Suite::Identities,
        Suite::Lattice,
        Suite::Substitution,
        Suite::Counts,
        Suite::Convergence,
        Suite::BoxCount,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Identities => "identities",
            Suite::Lattice => "lattice",
            Suite::Substitution => "substitution",
            Suite::Counts => "counts",
            Suite::Convergence => "convergence",
            Suite::BoxCount => "box-count",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase().replace('_', "-");
        std::iter::once(Suite::All)
            .chain(Suite::EACH)
            .find(|suite| suite.name() == s || (s == "boxcount" && *suite == Suite::BoxCount))
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown suite {s:?} (expected all, identities, lattice, substitution, counts, convergence or box-count)"
                ))
            })
    }
}

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub n_max: u64,
    pub seed: u64,
    /// Random pairs drawn per base for the identity suite.
    pub random_pairs: usize,
    pub transforms: Transforms,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            n_max: 1_000_000,
            seed: 0x00c0_ffee,
            random_pairs: 100_000,
            transforms: Transforms::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub suite: &'static str,
    pub check: String,
    pub passed: bool,
    pub cases: u64,
    pub failures: u64,
    pub detail: String,
    pub elapsed_ms: f64,
}

struct Tally {
    cases: u64,
    failures: u64,
    first: Option<String>,
}

impl Tally {
    fn new() -> Self {
        Tally {
            cases: 0,
            failures: 0,
            first: None,
        }
    }

    fn check(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures += 1;
            if self.first.is_none() {
                self.first = Some(describe());
            }
        }
    }

    fn finish(self, suite: Suite, check: impl Into<String>, started: Instant) -> CheckResult {
        CheckResult {
            suite: suite.name(),
            check: check.into(),
            passed: self.failures == 0 && self.cases > 0,
            cases: self.cases,
            failures: self.failures,
            detail: self.first.unwrap_or_default(),
            elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
        }
    }
}

fn base(n: u64) -> Base {
    Base::new(n).expect("suite bases are >= 2")
}

pub fn run(suite: Suite, config: &VerifyConfig) -> Vec<CheckResult> {
    match suite {
        Suite::All => Suite::EACH
            .iter()
            .flat_map(|&s| run(s, config))
            .collect(),
        Suite::Identities => identities(config),
        Suite::Lattice => lattice(config),
        Suite::Substitution => substitution(),
        Suite::Counts => counts(config),
        Suite::Convergence => convergence(config),
        Suite::BoxCount => box_counts(),
    }
}

fn identities(config: &VerifyConfig) -> Vec<CheckResult> {
    let t = &config.transforms;
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for n in 2..=8u64 {
        let nb = base(n);
        let started = Instant::now();
        let mut tally = Tally::new();
        let check_pair = |a: u64, b: u64, tally: &mut Tally| {
            let c = (t.cvt)(a, b, nb);
            let s = (t.sv)(a, b, nb);
            let hi = (t.evt_max)(a, b, nb);
            let lo = (t.evt_min)(a, b, nb);
            let ok = match (c, s, hi, lo) {
                (Ok(c), Ok(s), Ok(hi), Ok(lo)) => {
                    a + b == c + s
                        && a + b == hi + lo
                        && c % n == 0
                        && (t.cvt)(b, a, nb) == Ok(c)
                        && (t.sv)(b, a, nb) == Ok(s)
                }
                _ => false,
            };
            tally.check(ok, || format!("a={a} b={b} base={n}"));
        };
        let lim = n.pow(3);
        for a in 0..lim {
            for b in 0..lim {
                check_pair(a, b, &mut tally);
            }
        }
        let lim = n.pow(10);
        for _ in 0..config.random_pairs {
            let (a, b) = (rng.random_range(0..lim), rng.random_range(0..lim));
            check_pair(a, b, &mut tally);
        }
        out.push(tally.finish(
            Suite::Identities,
            format!("base {n}: a+b = cvt+sv = evt_max+evt_min (seed {})", config.seed),
            started,
        ));
    }

    let started = Instant::now();
    let mut tally = Tally::new();
    let two = Base::BINARY;
    for _ in 0..config.random_pairs {
        let (a, b) = (rng.random_range(0..1u64 << 62), rng.random_range(0..1u64 << 62));
        let ok = (t.cvt)(a, b, two) == Ok((a & b) << 1)
            && (t.sv)(a, b, two) == Ok(a ^ b)
            && (t.evt_max)(a, b, two) == Ok(a | b)
            && (t.evt_min)(a, b, two) == Ok(a & b);
        tally.check(ok, || format!("a={a} b={b}"));
    }
    out.push(tally.finish(Suite::Identities, "base 2 matches bitwise and/xor/or", started));
    out
}

fn lattice(config: &VerifyConfig) -> Vec<CheckResult> {
    let t = &config.transforms;
    (2..=5u64)
        .map(|n| {
            let nb = base(n);
            let started = Instant::now();
            let mut tally = Tally::new();
            let mx = |x, y| (t.evt_max)(x, y, nb).ok();
            let mn = |x, y| (t.evt_min)(x, y, nb).ok();
            let lim = n.pow(3);
            for x in 0..lim {
                tally.check(mx(x, x) == Some(x) && mn(x, x) == Some(x), || {
                    format!("idempotence fails at {x}")
                });
                for y in 0..lim {
                    let (hi, lo) = (mx(x, y), mn(x, y));
                    let ok = hi == mx(y, x)
                        && lo == mn(y, x)
                        && hi.and_then(|h| mn(x, h)) == Some(x)
                        && lo.and_then(|l| mx(x, l)) == Some(x);
                    tally.check(ok, || format!("commutativity/absorption fails at ({x}, {y})"));
                    for z in 0..lim {
                        let ok = mx(y, z).and_then(|v| mx(x, v)) == hi.and_then(|v| mx(v, z))
                            && mn(y, z).and_then(|v| mn(x, v)) == lo.and_then(|v| mn(v, z));
                        tally.check(ok, || format!("associativity fails at ({x}, {y}, {z})"));
                    }
                }
            }
            tally.finish(Suite::Lattice, format!("base {n}: max/min lattice laws"), started)
        })
        .collect()
}

fn substitution() -> Vec<CheckResult> {
    let queries = [
        PatternQuery::cvt_zero(),
        PatternQuery::evt_top(),
        PatternQuery::new(TransformKind::EvtMin, Target::Value(0)),
    ];
    let mut out = Vec::new();
    for q in queries {
        let started = Instant::now();
        let mut tally = Tally::new();
        for n in 2..=5u64 {
            let gen = match ifs_generator(base(n), &q) {
                Ok(g) => g,
                Err(e) => {
                    tally.check(false, || format!("base {n}: {e}"));
                    continue;
                }
            };
            for depth in 1..=4 {
                let direct = GridSpec::new(base(n), depth).and_then(|s| indicator(&s, &q));
                let iterated = iterate_generator(&gen, depth);
                let ok = matches!((&direct, &iterated), (Ok(d), Ok(i)) if d == i);
                tally.check(ok, || format!("base {n} depth {depth} differs"));
            }
        }
        out.push(tally.finish(
            Suite::Substitution,
            format!("{} {}: iterated generator equals direct indicator", q.transform, q.target),
            started,
        ));
    }
    out
}

fn counts(config: &VerifyConfig) -> Vec<CheckResult> {
    let t = &config.transforms;
    let queries = [
        PatternQuery::cvt_zero(),
        PatternQuery::evt_top(),
        PatternQuery::new(TransformKind::EvtMin, Target::Value(0)),
    ];
    let mut out = Vec::new();
    for q in queries {
        let started = Instant::now();
        let mut tally = Tally::new();
        for n in 2..=8u64 {
            for depth in 1..=3 {
                let spec = match GridSpec::new(base(n), depth) {
                    Ok(s) => s,
                    Err(e) => {
                        tally.check(false, || e.to_string());
                        continue;
                    }
                };
                let (Ok(target), Ok(expected), Ok(grid)) = (
                    q.resolve(&spec),
                    expected_cell_count(&spec, &q),
                    indicator(&spec, &q),
                ) else {
                    tally.check(false, || format!("base {n} depth {depth}: query failed"));
                    continue;
                };
                let side = spec.side();
                let mut brute = 0u64;
                for a in 0..side {
                    for b in 0..side {
                        if t.apply(q.transform, a, b, spec.base()) == Ok(target) {
                            brute += 1;
                        }
                    }
                }
                let ok = brute == expected && grid.count_ones() == expected;
                tally.check(ok, || {
                    format!(
                        "base {n} depth {depth}: closed form {expected}, brute force {brute}, grid {}",
                        grid.count_ones()
                    )
                });
            }
        }
        out.push(tally.finish(
            Suite::Counts,
            format!("{} {}: popcount equals closed-form count", q.transform, q.target),
            started,
        ));
    }
    out
}

fn convergence(config: &VerifyConfig) -> Vec<CheckResult> {
    [Family::Cvt, Family::Evt]
        .into_iter()
        .map(|family| {
            let started = Instant::now();
            let mut tally = Tally::new();
            let report = verify_convergence(family, config.n_max);
            let detail = match &report {
                Ok(r) => {
                    tally.check(r.monotone, || {
                        format!("direction fails at n={}", r.first_violation.unwrap_or(0))
                    });
                    tally.check(r.final_gap > 0.0 && r.final_gap < 1.0, || {
                        format!("gap {} outside (0, 1)", r.final_gap)
                    });
                    format!(
                        "value at n={} is {:.9}, gap to {} is {:.6}",
                        r.n_max, r.final_value, r.limit, r.final_gap
                    )
                }
                Err(e) => {
                    tally.check(false, || e.to_string());
                    String::new()
                }
            };
            let direction = if family == Family::Cvt { "increasing" } else { "decreasing" };
            let mut result = tally.finish(
                Suite::Convergence,
                format!("{family}: similarity dimension strictly {direction} up to n={}", config.n_max),
                started,
            );
            if result.passed {
                result.detail = detail;
            }
            result
        })
        .collect()
}

fn box_counts() -> Vec<CheckResult> {
    let mut out = Vec::new();
    for family in [Family::Cvt, Family::Evt] {
        let started = Instant::now();
        let mut tally = Tally::new();
        for n in 2..=5u64 {
            let nb = base(n);
            let fit = GridSpec::new(nb, 4)
                .and_then(|s| indicator(&s, &family.query()))
                .and_then(|g| box_count(&g));
            let expected = family.dimension(nb);
            match fit {
                Ok(fit) => {
                    let copies = family.copies(nb).unwrap_or(0);
                    let exact = fit
                        .counts
                        .iter()
                        .enumerate()
                        .all(|(j, &c)| Some(c) == copies.checked_pow(4 - j as u32));
                    tally.check((fit.slope - expected).abs() < 0.02 && exact, || {
                        format!("base {n}: slope {} vs closed form {expected}", fit.slope)
                    });
                }
                Err(e) => tally.check(false, || format!("base {n}: {e}")),
            }
        }
        out.push(tally.finish(
            Suite::BoxCount,
            format!("{family}: box-count slope within 0.02 of closed form, depth 4"),
            started,
        ));
    }
    out
}
