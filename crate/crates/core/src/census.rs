//! Exhaustive and sampled censuses of quadratic triples `(a, b, c)`.
//!
//! Work is split into fixed-size chunks of the linear triple index
//! `i = ((a - 1) p + b) p + c` (or of the sample index), classified on a
//! dedicated thread pool and merged with an associative, commutative
//! reduction, so reports do not depend on the worker count.

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{self, Write};
use std::time::Instant;
use thiserror::Error;

use crate::dynamics::{OrbitShape, QuadPoly};
use crate::field::{FieldCtx, FieldError, Fp};
use crate::stability::{stability_test_with, Criterion, StabilityVerdict, Status};

/// Largest number of triples a single census may classify.
pub const TRIPLE_BUDGET: u64 = 1_000_000_000;

/// Triples per work unit. Fixed, so that chunk boundaries never depend on
/// the worker count.
pub const CHUNK_SIZE: u64 = 1 << 14;

/// Sampled triples are drawn in blocks of this many before classification.
const SAMPLE_BLOCK: u64 = 1 << 20;

/// Default `C` in the scaling check `max t_f <= C p^(3/4)`.
pub const DEFAULT_BOUND_CONSTANT: f64 = 10.0;

#[derive(Debug, Error)]
pub enum CensusError {
    #[error("census of {requested} triples exceeds the budget of {TRIPLE_BUDGET}")]
    BudgetExceeded { requested: u128 },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("writing output: {0}")]
    Io(#[from] io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum CensusMode {
    Exhaustive,
    /// `n` triples drawn uniformly with replacement from `F_p^* x F_p x F_p`
    /// by xoshiro256++ seeded through SplitMix64 (`seed_from_u64`).
    Sample {
        n: u64,
        seed: u64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CensusOptions {
    pub mode: CensusMode,
    pub workers: usize,
    pub criterion: Criterion,
    pub record_timing: bool,
}

impl Default for CensusOptions {
    fn default() -> Self {
        CensusOptions {
            mode: CensusMode::Exhaustive,
            workers: 1,
            criterion: Criterion::Normalized,
            record_timing: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    pub a: u64,
    pub b: u64,
    pub c: u64,
}

impl Triple {
    pub fn from_index(p: u64, i: u64) -> Triple {
        Triple {
            a: i / (p * p) + 1,
            b: i / p % p,
            c: i % p,
        }
    }

    pub fn index(&self, p: u64) -> u64 {
        ((self.a - 1) * p + self.b) * p + self.c
    }
}

/// Classification of one triple: the verdict, and the orbit shape when the
/// verdict is `Stable`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TripleRecord {
    pub triple: Triple,
    pub verdict: StabilityVerdict,
    pub shape: Option<OrbitShape>,
}

pub fn classify(f: &QuadPoly, criterion: Criterion) -> TripleRecord {
    let verdict = stability_test_with(f, criterion);
    TripleRecord {
        triple: Triple {
            a: f.a().value(),
            b: f.b().value(),
            c: f.c().value(),
        },
        verdict,
        shape: verdict.is_stable().then(|| f.orbit_shape()),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CensusReport {
    pub p: u64,
    #[serde(flatten)]
    pub mode: CensusMode,
    pub criterion: Criterion,
    pub total: u64,
    pub stable_count: u64,
    pub indeterminate_count: u64,
    pub not_stable_count: u64,
    /// `None` when no stable triple was seen.
    pub max_tf: Option<u64>,
    /// Smallest-index triple attaining `max_tf`.
    pub argmax_f: Option<Triple>,
    pub tf_histogram: BTreeMap<u64, u64>,
    /// `max_tf / p^(3/4)`.
    pub ratio_34: Option<f64>,
    /// `max_tf / p^(1/2)`.
    pub ratio_12: Option<f64>,
    /// `stable_count / total`.
    pub stable_fraction: f64,
    /// Every indeterminate triple, sorted.
    pub indeterminate: Vec<Triple>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_secs: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
struct Partial {
    total: u64,
    stable: u64,
    indeterminate: u64,
    not_stable: u64,
    /// (t_f, index, triple), maximal t_f with smallest index
    best: Option<(u64, u64, Triple)>,
    histogram: BTreeMap<u64, u64>,
    indeterminate_list: Vec<Triple>,
}

impl Partial {
    fn add(&mut self, index: u64, rec: &TripleRecord) {
        self.total += 1;
        match rec.verdict.status {
            Status::Stable => {
                self.stable += 1;
                let t_f = rec.shape.expect("stable records carry a shape").t_f;
                *self.histogram.entry(t_f).or_default() += 1;
                let better = match self.best {
                    None => true,
                    Some((t, i, _)) => t_f > t || (t_f == t && index < i),
                };
                if better {
                    self.best = Some((t_f, index, rec.triple));
                }
            }
            Status::NotStable => self.not_stable += 1,
            Status::Indeterminate => {
                self.indeterminate += 1;
                self.indeterminate_list.push(rec.triple);
            }
        }
    }

    fn merge(mut self, other: Partial) -> Partial {
        self.total += other.total;
        self.stable += other.stable;
        self.indeterminate += other.indeterminate;
        self.not_stable += other.not_stable;
        for (t, n) in other.histogram {
            *self.histogram.entry(t).or_default() += n;
        }
        self.indeterminate_list.extend(other.indeterminate_list);
        self.best = match (self.best, other.best) {
            (Some(x), Some(y)) => Some(
                if (y.0, std::cmp::Reverse(y.1)) > (x.0, std::cmp::Reverse(x.1)) {
                    y
                } else {
                    x
                },
            ),
            (x, y) => x.or(y),
        };
        self
    }

    fn into_report(
        mut self,
        p: u64,
        options: &CensusOptions,
        elapsed: Option<f64>,
    ) -> CensusReport {
        self.indeterminate_list.sort_unstable();
        let max_tf = self.best.map(|b| b.0);
        let pf = p as f64;
        CensusReport {
            p,
            mode: options.mode,
            criterion: options.criterion,
            total: self.total,
            stable_count: self.stable,
            indeterminate_count: self.indeterminate,
            not_stable_count: self.not_stable,
            max_tf,
            argmax_f: self.best.map(|b| b.2),
            tf_histogram: self.histogram,
            ratio_34: max_tf.map(|t| t as f64 / pf.powf(0.75)),
            ratio_12: max_tf.map(|t| t as f64 / pf.sqrt()),
            stable_fraction: if self.total == 0 {
                0.0
            } else {
                self.stable as f64 / self.total as f64
            },
            indeterminate: self.indeterminate_list,
            elapsed_secs: elapsed,
        }
    }
}

fn check_budget(ctx: &FieldCtx, mode: &CensusMode) -> Result<u64, CensusError> {
    let p = ctx.p() as u128;
    let requested = match *mode {
        CensusMode::Exhaustive => (p - 1) * p * p,
        CensusMode::Sample { n, .. } => n as u128,
    };
    if requested > TRIPLE_BUDGET as u128 {
        return Err(CensusError::BudgetExceeded { requested });
    }
    Ok(requested as u64)
}

fn pool(workers: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool")
}

/// Classifies the exhaustive index range `[lo, hi)`, feeding each record to
/// `sink` in index order.
fn scan_range(
    ctx: FieldCtx,
    criterion: Criterion,
    lo: u64,
    hi: u64,
    mut sink: impl FnMut(u64, &TripleRecord),
) {
    let p = ctx.p();
    let mut cached: Option<(u64, Fp)> = None;
    for i in lo..hi {
        let t = Triple::from_index(p, i);
        let a = ctx.elem(t.a);
        let inv_two_a = match cached {
            Some((av, inv)) if av == t.a => inv,
            _ => {
                let inv = ctx.inv(ctx.add(a, a)).expect("2a != 0");
                cached = Some((t.a, inv));
                inv
            }
        };
        let f = QuadPoly::with_inv_two_a(ctx, a, ctx.elem(t.b), ctx.elem(t.c), inv_two_a);
        sink(i, &classify(&f, criterion));
    }
}

fn sample_block(ctx: &FieldCtx, rng: &mut Xoshiro256PlusPlus, len: u64) -> Vec<Triple> {
    let p = ctx.p();
    (0..len)
        .map(|_| Triple {
            a: rng.random_range(1..p),
            b: rng.random_range(0..p),
            c: rng.random_range(0..p),
        })
        .collect()
}

fn classify_triple(ctx: &FieldCtx, t: Triple, criterion: Criterion) -> TripleRecord {
    let f = QuadPoly::from_u64s(*ctx, t.a, t.b, t.c).expect("a != 0");
    classify(&f, criterion)
}

pub fn run_census(ctx: &FieldCtx, options: &CensusOptions) -> Result<CensusReport, CensusError> {
    let total = check_budget(ctx, &options.mode)?;
    let start = Instant::now();
    let ctx = *ctx;
    let criterion = options.criterion;

    let partial = pool(options.workers).install(|| match options.mode {
        CensusMode::Exhaustive => {
            let chunks = total.div_ceil(CHUNK_SIZE);
            (0..chunks)
                .into_par_iter()
                .map(|chunk| {
                    let lo = chunk * CHUNK_SIZE;
                    let hi = (lo + CHUNK_SIZE).min(total);
                    let mut part = Partial::default();
                    scan_range(ctx, criterion, lo, hi, |i, rec| part.add(i, rec));
                    part
                })
                .reduce(Partial::default, Partial::merge)
        }
        CensusMode::Sample { n, seed } => {
            let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
            let mut acc = Partial::default();
            let mut offset = 0;
            while offset < n {
                let block = sample_block(&ctx, &mut rng, SAMPLE_BLOCK.min(n - offset));
                let part = block
                    .par_chunks(CHUNK_SIZE as usize)
                    .enumerate()
                    .map(|(ci, chunk)| {
                        let mut part = Partial::default();
                        for (j, &t) in chunk.iter().enumerate() {
                            let index = offset + ci as u64 * CHUNK_SIZE + j as u64;
                            part.add(index, &classify_triple(&ctx, t, criterion));
                        }
                        part
                    })
                    .reduce(Partial::default, Partial::merge);
                acc = acc.merge(part);
                offset += block.len() as u64;
            }
            acc
        }
    });

    let elapsed = options.record_timing.then(|| start.elapsed().as_secs_f64());
    Ok(partial.into_report(ctx.p(), options, elapsed))
}

/// Header of the per-triple CSV stream.
pub const TRIPLE_CSV_HEADER: [&str; 11] = [
    "p",
    "a",
    "b",
    "c",
    "verdict",
    "witness_index",
    "mu",
    "lambda",
    "s",
    "t_f",
    "orbit_size",
];

fn triple_csv_row(p: u64, rec: &TripleRecord) -> [String; 11] {
    let opt = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
    let shape = rec.shape;
    [
        p.to_string(),
        rec.triple.a.to_string(),
        rec.triple.b.to_string(),
        rec.triple.c.to_string(),
        rec.verdict.status.to_string(),
        opt(rec.verdict.witness_index),
        opt(shape.map(|s| s.mu)),
        opt(shape.map(|s| s.lambda)),
        opt(shape.map(|s| s.s)),
        opt(shape.map(|s| s.t_f)),
        opt(shape.map(|s| s.orbit_size)),
    ]
}

/// Streams one CSV row per scanned triple, in index order (sample order in
/// sample mode), and returns the summary report of the same run.
pub fn run_census_csv<W: Write>(
    ctx: &FieldCtx,
    options: &CensusOptions,
    out: W,
) -> Result<CensusReport, CensusError> {
    let total = check_budget(ctx, &options.mode)?;
    let start = Instant::now();
    let ctx = *ctx;
    let p = ctx.p();
    let criterion = options.criterion;
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(TRIPLE_CSV_HEADER)?;
    let mut acc = Partial::default();
    let pool = pool(options.workers);

    // classify a batch in parallel, then write it sequentially
    let batch = CHUNK_SIZE * 64;
    let mut emit = |records: Vec<(u64, TripleRecord)>| -> Result<(), CensusError> {
        for (i, rec) in &records {
            acc.add(*i, rec);
            writer.write_record(triple_csv_row(p, rec))?;
        }
        Ok(())
    };
    match options.mode {
        CensusMode::Exhaustive => {
            let mut lo = 0;
            while lo < total {
                let hi = (lo + batch).min(total);
                let chunks: Vec<Vec<(u64, TripleRecord)>> = pool.install(|| {
                    (lo..hi)
                        .step_by(CHUNK_SIZE as usize)
                        .collect::<Vec<u64>>()
                        .into_par_iter()
                        .map(|start| {
                            let end = (start + CHUNK_SIZE).min(hi);
                            let mut v = Vec::with_capacity((end - start) as usize);
                            scan_range(ctx, criterion, start, end, |i, r| v.push((i, *r)));
                            v
                        })
                        .collect()
                });
                let records = chunks.into_iter().flatten().collect();
                emit(records)?;
                lo = hi;
            }
        }
        CensusMode::Sample { n, seed } => {
            let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
            let mut offset = 0;
            while offset < n {
                let block = sample_block(&ctx, &mut rng, SAMPLE_BLOCK.min(n - offset));
                let records: Vec<(u64, TripleRecord)> = pool.install(|| {
                    block
                        .par_iter()
                        .enumerate()
                        .map(|(j, &t)| (offset + j as u64, classify_triple(&ctx, t, criterion)))
                        .collect()
                });
                offset += block.len() as u64;
                emit(records)?;
            }
        }
    }
    writer.flush()?;
    let elapsed = options.record_timing.then(|| start.elapsed().as_secs_f64());
    Ok(acc.into_report(p, options, elapsed))
}

/// Summary document: the report plus tool identification and an echo of
/// the options that determine its content. The worker count is not echoed
/// since it does not affect the result.
#[derive(Serialize)]
pub struct CensusSummary<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub options: OptionsEcho,
    pub report: &'a CensusReport,
}

#[derive(Serialize)]
pub struct OptionsEcho {
    #[serde(flatten)]
    pub mode: CensusMode,
    pub criterion: Criterion,
    pub timing: bool,
}

impl<'a> CensusSummary<'a> {
    pub fn new(report: &'a CensusReport, options: &CensusOptions) -> Self {
        CensusSummary {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            options: OptionsEcho {
                mode: options.mode,
                criterion: options.criterion,
                timing: options.record_timing,
            },
            report,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub p: u64,
    pub total: u64,
    pub stable_count: u64,
    pub indeterminate_count: u64,
    pub max_tf: Option<u64>,
    pub ratio_34: Option<f64>,
    pub ratio_12: Option<f64>,
}

impl From<&CensusReport> for ScalingRow {
    fn from(r: &CensusReport) -> Self {
        ScalingRow {
            p: r.p,
            total: r.total,
            stable_count: r.stable_count,
            indeterminate_count: r.indeterminate_count,
            max_tf: r.max_tf,
            ratio_34: r.ratio_34,
            ratio_12: r.ratio_12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingTable {
    pub bound_constant: f64,
    pub rows: Vec<ScalingRow>,
    /// Running maximum of `ratio_12` down the table.
    pub running_max_ratio_12: Vec<Option<f64>>,
}

impl ScalingTable {
    /// Primes whose `max_tf / p^(3/4)` exceeds the bound constant.
    pub fn violations(&self) -> Vec<u64> {
        self.rows
            .iter()
            .filter(|r| r.ratio_34.is_some_and(|x| x > self.bound_constant))
            .map(|r| r.p)
            .collect()
    }

    pub fn max_ratio_12(&self) -> Option<f64> {
        self.running_max_ratio_12.last().copied().flatten()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CensusError> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn rows_from_csv(data: &str) -> Result<Vec<ScalingRow>, CensusError> {
        let mut r = csv::Reader::from_reader(data.as_bytes());
        Ok(r.deserialize().collect::<Result<Vec<ScalingRow>, _>>()?)
    }
}

/// Runs one census per prime (sorted, deduplicated) and tabulates the orbit
/// length ratios.
pub fn scaling_table(
    primes: &[u64],
    options: &CensusOptions,
    bound_constant: f64,
) -> Result<ScalingTable, CensusError> {
    let mut primes = primes.to_vec();
    primes.sort_unstable();
    primes.dedup();
    let mut rows = Vec::with_capacity(primes.len());
    for &p in &primes {
        let ctx = FieldCtx::new(p)?;
        rows.push(ScalingRow::from(&run_census(&ctx, options)?));
    }
    let mut running = None::<f64>;
    let running_max_ratio_12 = rows
        .iter()
        .map(|r| {
            running = match (running, r.ratio_12) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            };
            running
        })
        .collect();
    Ok(ScalingTable {
        bound_constant,
        rows,
        running_max_ratio_12,
    })
}
