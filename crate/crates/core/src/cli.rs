//! The `qorbit` command line.
//!
//! Exit codes: `0` on success, `1` on a domain error (the message names the
//! error case), `2` on a usage error.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use crate::census::{
    run_census, run_census_csv, scaling_table, CensusMode, CensusOptions, CensusSummary,
    DEFAULT_BOUND_CONSTANT,
};
use crate::charsum::{
    self, triple_charsum, tset_size, verify_tf_bound, weil_sum, wset_size, SubsetSpec,
};
use crate::dynamics::QuadPoly;
use crate::field::FieldCtx;
use crate::primality::is_prime;
use crate::stability::{stability_oracle, stability_test_with, Criterion, OracleOutcome};
use crate::Error;

#[derive(Parser, Debug)]
#[command(
    name = "qorbit",
    version,
    about = "Critical orbits and stability of quadratic maps over F_p"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Critical point and rho shape of the critical orbit.
    Orbit {
        #[command(flatten)]
        poly: PolyArgs,
        /// Also report f^(N)(x) for the point given by --x.
        #[arg(long, value_name = "N")]
        iterate: Option<u64>,
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        x: i64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Stability test on the adjusted critical orbit.
    Stab {
        #[command(flatten)]
        poly: PolyArgs,
        #[arg(long, default_value = "normalized")]
        criterion: Criterion,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Irreducibility of the symbolic iterates f^(1..=depth).
    Oracle {
        #[command(flatten)]
        poly: PolyArgs,
        #[arg(long, default_value_t = 5)]
        depth: u32,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Size of T_p(K), directly and through the product identity.
    Tset {
        #[command(flatten)]
        poly: PolyArgs,
        #[arg(long)]
        k: u32,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Character sum of a product of iterates, with its Weil budget.
    Weil {
        #[command(flatten)]
        poly: PolyArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        ks: Vec<u32>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Check t_f - 1 <= #T_p(K) for a stable polynomial.
    Bound {
        #[command(flatten)]
        poly: PolyArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Classify every (or a sample of) coefficient triple over F_p.
    Census {
        #[arg(long)]
        p: u64,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// One census per prime, tabulating max t_f against p^(3/4) and p^(1/2).
    Scaling {
        /// Comma list, or an inclusive range `lo..hi` of odd primes.
        #[arg(long)]
        primes: String,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = DEFAULT_BOUND_CONSTANT)]
        bound: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Size of W_p(K) over all coefficient triples.
    Wset {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        k: u32,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Character sum over coefficient triples of a product of orbit elements.
    Wsum {
        #[arg(long)]
        p: u64,
        #[arg(long, value_delimiter = ',', required = true)]
        ks: Vec<u32>,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Args, Debug)]
struct PolyArgs {
    #[arg(long)]
    p: u64,
    #[arg(long, allow_hyphen_values = true)]
    a: i64,
    #[arg(long, allow_hyphen_values = true)]
    b: i64,
    #[arg(long, allow_hyphen_values = true)]
    c: i64,
}

impl PolyArgs {
    fn build(&self) -> Result<QuadPoly, Error> {
        let ctx = FieldCtx::new(self.p)?;
        Ok(QuadPoly::new(
            ctx,
            ctx.elem_i64(self.a),
            ctx.elem_i64(self.b),
            ctx.elem_i64(self.c),
        )?)
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Draw N random triples instead of scanning all of them.
    #[arg(long, value_name = "N")]
    sample: Option<u64>,
    #[arg(long, default_value_t = 1, requires = "sample")]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long, default_value = "normalized")]
    criterion: Criterion,
}

impl RunArgs {
    fn options(&self, timing: bool) -> CensusOptions {
        CensusOptions {
            mode: match self.sample {
                Some(n) => CensusMode::Sample { n, seed: self.seed },
                None => CensusMode::Exhaustive,
            },
            workers: self.threads,
            criterion: self.criterion,
            record_timing: timing,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct OutputArgs {
    #[arg(long, value_enum, conflicts_with_all = ["json", "csv"])]
    format: Option<Format>,
    /// Shorthand for --format json.
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    /// Shorthand for --format csv.
    #[arg(long)]
    csv: bool,
    /// Write results to FILE instead of standard output.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Omit wall-clock fields so that output is reproducible.
    #[arg(long)]
    no_timing: bool,
}

impl OutputArgs {
    fn format(&self) -> Format {
        match (self.format, self.json, self.csv) {
            (Some(f), _, _) => f,
            (None, true, _) => Format::Json,
            (None, _, true) => Format::Csv,
            _ => Format::Human,
        }
    }
}

enum Failure {
    Usage(String),
    Domain(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Domain(Error::Io(e))
    }
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn dispatch<I, S>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match run(cli.command, stdout) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            2
        }
        Err(Failure::Domain(e)) => {
            let _ = writeln!(stderr, "error: {}: {e}", e.code());
            1
        }
    }
}

fn sink<'a>(out: &OutputArgs, stdout: &'a mut dyn Write) -> Result<Box<dyn Write + 'a>, Failure> {
    Ok(match &out.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(stdout),
    })
}

fn emit_json<T: Serialize>(w: &mut dyn Write, value: &T) -> Result<(), Failure> {
    serde_json::to_writer_pretty(&mut *w, value).map_err(io::Error::from)?;
    writeln!(w)?;
    Ok(())
}

fn no_csv(name: &str) -> Failure {
    Failure::Usage(format!("csv output is not available for `{name}`"))
}

fn poly_json(f: &QuadPoly) -> serde_json::Value {
    json!({ "p": f.ctx().p(), "a": f.a(), "b": f.b(), "c": f.c() })
}

fn merge(mut base: serde_json::Value, extra: serde_json::Value) -> serde_json::Value {
    if let (Some(b), serde_json::Value::Object(e)) = (base.as_object_mut(), extra) {
        b.extend(e);
    }
    base
}

fn parse_primes(spec: &str) -> Result<Vec<u64>, Failure> {
    let bad = || Failure::Usage(format!("invalid --primes `{spec}`"));
    if let Some((lo, hi)) = spec.split_once("..") {
        let lo: u64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: u64 = hi.trim().parse().map_err(|_| bad())?;
        Ok((lo.max(3)..=hi).filter(|&n| is_prime(n)).collect())
    } else if spec.trim().is_empty() {
        Ok(Vec::new())
    } else {
        spec.split(',')
            .map(|s| s.trim().parse().map_err(|_| bad()))
            .collect()
    }
}

fn run(command: Command, stdout: &mut dyn Write) -> Result<(), Failure> {
    match command {
        Command::Orbit {
            poly,
            iterate,
            x,
            out,
        } => {
            let f = poly.build()?;
            let shape = f.orbit_shape();
            let mut w = sink(&out, stdout)?;
            let point = f.ctx().elem_i64(x);
            let iterated = iterate.map(|n| f.iterate_value(point, n));
            match out.format() {
                Format::Json => {
                    let mut v = merge(poly_json(&f), json!({ "gamma": f.critical_point() }));
                    v = merge(v, serde_json::to_value(shape).map_err(io::Error::from)?);
                    if let (Some(n), Some(y)) = (iterate, iterated) {
                        v = merge(v, json!({ "x": point, "n": n, "iterate": y }));
                    }
                    emit_json(&mut w, &v)?;
                }
                Format::Human => {
                    writeln!(w, "gamma = {}", f.critical_point())?;
                    writeln!(
                        w,
                        "mu = {}, lambda = {}, s = {}, t_f = {}, orbit_size = {}",
                        shape.mu, shape.lambda, shape.s, shape.t_f, shape.orbit_size
                    )?;
                    if let (Some(n), Some(y)) = (iterate, iterated) {
                        writeln!(w, "f^({n})({point}) = {y}")?;
                    }
                }
                Format::Csv => return Err(no_csv("orbit")),
            }
        }
        Command::Stab {
            poly,
            criterion,
            out,
        } => {
            let f = poly.build()?;
            let v = stability_test_with(&f, criterion);
            let mut w = sink(&out, stdout)?;
            match out.format() {
                Format::Json => {
                    let doc = merge(poly_json(&f), json!({ "criterion": criterion }));
                    emit_json(
                        &mut w,
                        &merge(doc, serde_json::to_value(v).map_err(io::Error::from)?),
                    )?;
                }
                Format::Human => {
                    write!(w, "{}", v.status)?;
                    if let (Some(i), Some(x)) = (v.witness_index, v.witness_value) {
                        write!(w, " (witness index {i}, value {x})")?;
                    }
                    writeln!(w, "; scanned {}", v.scanned)?;
                }
                Format::Csv => return Err(no_csv("stab")),
            }
        }
        Command::Oracle { poly, depth, out } => {
            let f = poly.build()?;
            let outcome = stability_oracle(&f, depth).map_err(Error::from)?;
            let mut w = sink(&out, stdout)?;
            let (name, level) = match outcome {
                OracleOutcome::AllIrreducibleUpToDepth(_) => ("AllIrreducibleUpToDepth", None),
                OracleOutcome::ReducibleAt(n) => ("ReducibleAt", Some(n)),
            };
            match out.format() {
                Format::Json => emit_json(
                    &mut w,
                    &merge(
                        poly_json(&f),
                        json!({ "depth": depth, "outcome": name, "reducible_at": level }),
                    ),
                )?,
                Format::Human => match level {
                    Some(n) => writeln!(w, "ReducibleAt({n})")?,
                    None => writeln!(w, "AllIrreducibleUpToDepth({depth})")?,
                },
                Format::Csv => return Err(no_csv("oracle")),
            }
        }
        Command::Tset { poly, k, out } => {
            let f = poly.build()?;
            let r = tset_size(&f, k).map_err(Error::from)?;
            let mut w = sink(&out, stdout)?;
            match out.format() {
                Format::Json => emit_json(&mut w, &r)?,
                Format::Human => {
                    writeln!(w, "#T_{}({}) = {}", r.p, r.k, r.direct_count)?;
                    writeln!(
                        w,
                        "identity: {} / 2^{} = {}; zero terms {}",
                        r.identity_numerator, r.k, r.identity_count, r.zero_terms
                    )?;
                    writeln!(
                        w,
                        "p/2^K = {}; Weil budget {:.3} ({})",
                        r.q_over_2k,
                        r.weil_error_budget,
                        if r.within_weil_budget {
                            "within"
                        } else {
                            "exceeded"
                        }
                    )?;
                }
                Format::Csv => return Err(no_csv("tset")),
            }
        }
        Command::Weil { poly, ks, out } => {
            let f = poly.build()?;
            let subset = SubsetSpec::new(ks).map_err(Error::from)?;
            let r = weil_sum(&f, &subset).map_err(Error::from)?;
            let mut w = sink(&out, stdout)?;
            match out.format() {
                Format::Json => emit_json(&mut w, &r)?,
                Format::Human => writeln!(
                    w,
                    "sum = {}; degree {}; budget {:.3} ({})",
                    r.sum,
                    r.degree,
                    r.weil_budget,
                    if r.within_budget {
                        "within"
                    } else {
                        "exceeded"
                    }
                )?,
                Format::Csv => return Err(no_csv("weil")),
            }
        }
        Command::Bound { poly, out } => {
            let f = poly.build()?;
            let r = verify_tf_bound(&f).map_err(Error::from)?;
            let mut w = sink(&out, stdout)?;
            match out.format() {
                Format::Json => emit_json(&mut w, &r)?,
                Format::Human => {
                    let top = *r.tset_sizes.last().expect("k_star >= 1");
                    writeln!(
                        w,
                        "t_f = {}, K* = {}, #T = {}: t_f - 1 <= #T {}; orbit membership {}",
                        r.t_f,
                        r.k_star,
                        top,
                        if r.bound_holds { "holds" } else { "FAILS" },
                        if r.membership_holds { "holds" } else { "FAILS" }
                    )?;
                }
                Format::Csv => return Err(no_csv("bound")),
            }
        }
        Command::Census { p, run, out } => {
            let ctx = FieldCtx::new(p).map_err(Error::from)?;
            let options = run.options(!out.no_timing);
            let mut w = sink(&out, stdout)?;
            match out.format() {
                Format::Csv => {
                    run_census_csv(&ctx, &options, &mut w).map_err(Error::from)?;
                }
                Format::Json => {
                    let report = run_census(&ctx, &options).map_err(Error::from)?;
                    emit_json(&mut w, &CensusSummary::new(&report, &options))?;
                }
                Format::Human => {
                    let r = run_census(&ctx, &options).map_err(Error::from)?;
                    writeln!(w, "p = {}, triples = {}", r.p, r.total)?;
                    writeln!(
                        w,
                        "stable {}, not stable {}, indeterminate {}",
                        r.stable_count, r.not_stable_count, r.indeterminate_count
                    )?;
                    if let (Some(t), Some(arg)) = (r.max_tf, r.argmax_f) {
                        writeln!(
                            w,
                            "max t_f = {t} at (a, b, c) = ({}, {}, {})",
                            arg.a, arg.b, arg.c
                        )?;
                        writeln!(
                            w,
                            "max t_f / p^(3/4) = {:.4}, max t_f / p^(1/2) = {:.4}",
                            r.ratio_34.unwrap_or_default(),
                            r.ratio_12.unwrap_or_default()
                        )?;
                    }
                    for t in &r.indeterminate {
                        writeln!(w, "indeterminate: ({}, {}, {})", t.a, t.b, t.c)?;
                    }
                    if let Some(s) = r.elapsed_secs {
                        writeln!(w, "elapsed {s:.3}s")?;
                    }
                }
            }
        }
        Command::Scaling {
            primes,
            run,
            bound,
            out,
        } => {
            let primes = parse_primes(&primes)?;
            let options = run.options(!out.no_timing);
            let table = scaling_table(&primes, &options, bound).map_err(Error::from)?;
            let mut w = sink(&out, stdout)?;
            match out.format() {
                Format::Csv => table.write_csv(&mut w).map_err(Error::from)?,
                Format::Json => emit_json(&mut w, &table)?,
                Format::Human => {
                    writeln!(
                        w,
                        "{:>6} {:>10} {:>6} {:>9} {:>9}",
                        "p", "S_p", "max_tf", "ratio_34", "ratio_12"
                    )?;
                    for r in &table.rows {
                        let f = |x: Option<f64>| {
                            x.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into())
                        };
                        let t = r
                            .max_tf
                            .map(|v| v.to_string())
                            .unwrap_or_else(|| "-".into());
                        writeln!(
                            w,
                            "{:>6} {:>10} {:>6} {:>9} {:>9}",
                            r.p,
                            r.stable_count,
                            t,
                            f(r.ratio_34),
                            f(r.ratio_12)
                        )?;
                    }
                }
            }
            w.flush()?;
            let violations = table.violations();
            if !violations.is_empty() {
                return Err(Error::ScalingBoundViolated {
                    bound,
                    primes: violations,
                }
                .into());
            }
        }
        Command::Wset { p, k, out } => {
            let ctx = FieldCtx::new(p).map_err(Error::from)?;
            let r = wset_size(&ctx, k).map_err(Error::from)?;
            let mut w = sink(&out, stdout)?;
            match out.format() {
                Format::Json => emit_json(&mut w, &r)?,
                Format::Human => writeln!(
                    w,
                    "#W_{}({}) = {} of {} triples",
                    r.p, r.k, r.count, r.total
                )?,
                Format::Csv => return Err(no_csv("wset")),
            }
        }
        Command::Wsum { p, ks, out } => {
            let ctx = FieldCtx::new(p).map_err(Error::from)?;
            let subset = SubsetSpec::new(ks).map_err(Error::from)?;
            let r = triple_charsum(&ctx, &subset).map_err(Error::from)?;
            let mut w = sink(&out, stdout)?;
            match out.format() {
                Format::Json => emit_json(
                    &mut w,
                    &merge(
                        serde_json::to_value(&r).map_err(io::Error::from)?,
                        json!({ "trivial_sum": charsum::trivial_triple_sum(p) }),
                    ),
                )?,
                Format::Human => writeln!(
                    w,
                    "sum = {} over {} triples; |sum| / p^(5/2) = {:.6}",
                    r.sum,
                    charsum::trivial_triple_sum(p),
                    r.ratio_q52
                )?,
                Format::Csv => return Err(no_csv("wsum")),
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prime_lists() {
        assert_eq!(parse_primes("3..13").ok().unwrap(), vec![3, 5, 7, 11, 13]);
        assert_eq!(parse_primes("2..5").ok().unwrap(), vec![3, 5]);
        assert_eq!(parse_primes("3, 9").ok().unwrap(), vec![3, 9]);
        assert!(parse_primes("").ok().unwrap().is_empty());
        assert!(parse_primes("x..5").is_err());
    }
}
