//! Command-line front end: table analysis, bound reports, single
//! simulations, verification campaigns and wordlength sweeps.
//!
//! Exit codes: 0 on success, 1 when a campaign found misroundings, 2 when a
//! bound verdict failed, 3 on configuration or usage errors, 10 when a
//! misrounding contradicted a passing bound verdict (the falsification
//! alarm).

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use goldiv::bounds::{precision_loss_curve, total_bound, QRange};
use goldiv::campaign::{campaign, report_histogram, CampaignMode, CampaignSpec};
use goldiv::config;
use goldiv::engine::{Divider, DividerConfig};
use goldiv::exact::{decimal_string, fraction_string, log2_abs, rational_from_decimal_str};
use goldiv::fixedpoint::FixedPoint;
use goldiv::oracle;
use goldiv::recip::{build, search_partitions};
use num_rational::BigRational;
use num_traits::Signed;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::Write;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "goldiv", about = "Bit-exact workbench for iterative-multiplicative division", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Path to a divider config file, or a builtin preset name
    /// (threestage, twostage, toy, ...).
    #[arg(long)]
    config: String,
}

#[derive(Subcommand)]
enum Command {
    /// Build the reciprocal table and report its exact error profile.
    TableAnalyze {
        #[command(flatten)]
        config: ConfigArg,
        /// Dump raw table entries to this file (binary, little endian).
        #[arg(long)]
        dump: Option<String>,
        /// Also search every slice partition with the same index widths.
        #[arg(long)]
        search: bool,
        /// How many worst divisor intervals to list.
        #[arg(long, default_value_t = 8)]
        worst: usize,
    },
    /// Compute the error-bound report for every readout stage.
    Bounds {
        #[command(flatten)]
        config: ConfigArg,
        /// Apply the strict-supremum refinements when deciding ties.
        #[arg(long)]
        criticality: bool,
        /// Use the raw quotient range (1/2, 2) instead of the normalized [1, 2).
        #[arg(long)]
        raw_q: bool,
        /// Print the factor precision-loss curve for this error exponent.
        #[arg(long)]
        loss_curve: Option<f64>,
    },
    /// Run one division and print the stage results and the error ledger.
    Simulate {
        #[command(flatten)]
        config: ConfigArg,
        /// Dividend mantissa as a binary literal, e.g. 1.0110...
        #[arg(long)]
        a: Option<String>,
        /// Divisor mantissa as a binary literal.
        #[arg(long)]
        b: Option<String>,
        /// Draw a random input pair for this stage instead.
        #[arg(long)]
        stage: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run a verification campaign against the exact oracle.
    Campaign {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, default_value_t = 1_000_000)]
        vectors: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// random | adversarial | exhaustive-toy
        #[arg(long, default_value = "random")]
        mode: String,
        /// Stage to exercise (sp, dp, ep, ...); repeat for several, default all.
        #[arg(long)]
        stage: Vec<String>,
        /// Write the error histogram of each stage as CSV under this prefix.
        #[arg(long)]
        hist: Option<String>,
        /// Histogram bin width in final-stage ulps (decimal).
        #[arg(long, default_value = "0.25")]
        hist_bin: String,
        /// Stop an adversarial stage after this many witnesses (0 = run out
        /// the full budget).
        #[arg(long, default_value_t = 0)]
        stop_after: usize,
    },
    /// Sweep one wordlength knob and emit bound verdicts as CSV.
    Sweep {
        #[command(flatten)]
        config: ConfigArg,
        /// Knob to vary: ulp, bias, n<i>, d<i>, f<i>.
        #[arg(long)]
        knob: String,
        #[arg(long)]
        from: i64,
        #[arg(long)]
        to: i64,
        /// Apply criticality refinements to every point.
        #[arg(long)]
        criticality: bool,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<String>,
    },
}

fn load_config(arg: &ConfigArg) -> Result<DividerConfig> {
    let cfg = config::load(&arg.config).map_err(|e| anyhow!(e))?;
    cfg.validate().map_err(|e| anyhow!("{e}"))?;
    Ok(cfg)
}

fn ulp_string(v: &BigRational) -> String {
    let dec = decimal_string(v, 6);
    match log2_abs(v) {
        Some(l) => format!("{dec} (2^{l:.4})"),
        None => dec,
    }
}

fn print_bound_report(report: &goldiv::bounds::BoundReport) {
    println!(
        "table error bound: {} = 2^{:.6}",
        fraction_string(&report.eps0),
        log2_abs(&report.eps0).unwrap_or(f64::NEG_INFINITY)
    );
    if report.criticality {
        println!("criticality refinements: on");
    }
    let log2s = |v: &BigRational| match log2_abs(v) {
        Some(l) if v.is_negative() => format!("-2^{l:.4}"),
        Some(l) => format!("2^{l:.4}"),
        None => "0".into(),
    };
    for s in &report.stages {
        println!("stage {} (iteration {}, {} mantissa bits)", s.name, s.iteration, s.mantissa_bits);
        println!("  margin          +/- {} ulp", decimal_string(&s.margin, 1));
        println!(
            "  accumulative    [{}, {}] ulp  ({}, {})",
            decimal_string(&s.aaet.lo, 6),
            decimal_string(&s.aaet.hi, 6),
            log2s(&s.aaet.lo),
            log2s(&s.aaet.hi)
        );
        println!("  convergent      -{} ulp", ulp_string(&s.cet));
        println!(
            "  rigorous total  [{}, {}] ulp  ({}, {})",
            decimal_string(&s.rigorous.lo, 6),
            decimal_string(&s.rigorous.hi, 6),
            log2s(&s.rigorous.lo),
            log2s(&s.rigorous.hi)
        );
        println!("    exact lo      {}", fraction_string(&s.rigorous.lo));
        println!("    exact hi      {}", fraction_string(&s.rigorous.hi));
        println!("    exact cet     {}", fraction_string(&s.cet));
        println!("  verdict         {}", s.verdict);
    }
    println!("overall verdict: {}", report.verdict);
}

fn run() -> Result<u8> {
    let cli = Cli::parse();
    match cli.command {
        Command::TableAnalyze { config, dump, search, worst } => {
            let cfg = load_config(&config)?;
            let t = &cfg.table;
            println!(
                "geometry: large 2^{} x {}, small 2^{} x {}, {}-bit subtractor, {} output frac bits{}",
                t.large_index_bits(),
                t.large_out_bits,
                t.small_index_bits(),
                t.small_out_bits,
                t.sub_bits,
                t.out_frac_bits,
                if t.implied_leading_bit { ", implied leading bit" } else { "" }
            );
            let table = build(t).context("table build failed")?;
            let max = table.max_rel_error();
            println!(
                "max relative error: {} = 2^{:.6}",
                fraction_string(&max),
                log2_abs(&max).unwrap()
            );
            let (neg, pos) = table.signed_extremes();
            println!(
                "signed extremes: {} = 2^{:.6} and +{} = 2^{:.6}",
                decimal_string(&neg, 9),
                log2_abs(&neg).unwrap_or(f64::NEG_INFINITY),
                decimal_string(&pos, 9),
                log2_abs(&pos).unwrap_or(f64::NEG_INFINITY)
            );
            println!("witness divisor mantissa: {}", table.achieving_input().to_binary_string());
            println!("worst {} input intervals:", worst);
            for iv in table.find_worst_divisors(worst) {
                println!(
                    "  [{}, {}) local error 2^{:.6}",
                    iv.lo.to_binary_string(),
                    iv.hi.to_binary_string(),
                    log2_abs(&iv.local_error).unwrap_or(f64::NEG_INFINITY)
                );
            }
            if search {
                let best = search_partitions(
                    t.large_index_bits(),
                    t.large_out_bits,
                    t.small_index_bits(),
                    t.small_out_bits,
                    t.sub_bits,
                    t.implied_leading_bit,
                )
                .context("partition search failed")?;
                let c = best.config();
                println!(
                    "best partition for these widths: n1={} n2={} n3={} with max error 2^{:.6}",
                    c.n1,
                    c.n2,
                    c.n3,
                    log2_abs(&best.max_rel_error()).unwrap()
                );
            }
            if let Some(path) = dump {
                let mut f = std::fs::File::create(&path).with_context(|| format!("creating {path}"))?;
                table.dump_entries(&mut f)?;
                println!("entries dumped to {path}");
            }
            Ok(0)
        }
        Command::Bounds { config, criticality, raw_q, loss_curve } => {
            let cfg = load_config(&config)?;
            let table = build(&cfg.table).context("table build failed")?;
            let q = if raw_q { QRange::raw() } else { QRange::normalized() };
            let report = total_bound(&cfg, &table, &q, criticality);
            print_bound_report(&report);
            if let Some(e) = loss_curve {
                println!("factor precision loss for error exponent {e} (extra bits -> bits lost):");
                for (x, loss) in precision_loss_curve(e, 0..=8) {
                    println!("  {x:+}: {loss:.4}");
                }
            }
            Ok(if report.verdict.is_fail() { 2 } else { 0 })
        }
        Command::Simulate { config, a, b, stage, seed } => {
            let cfg = load_config(&config)?;
            let divider = Divider::new(cfg).map_err(|e| anyhow!("{e}"))?;
            let (a, b) = match (a, b) {
                (Some(a), Some(b)) => (
                    FixedPoint::from_binary_str(&a).map_err(|e| anyhow!("--a: {e}"))?,
                    FixedPoint::from_binary_str(&b).map_err(|e| anyhow!("--b: {e}"))?,
                ),
                (None, None) => {
                    let spec = match &stage {
                        Some(name) => divider
                            .config()
                            .stage(name)
                            .ok_or_else(|| anyhow!("unknown stage {name:?}"))?,
                        None => &divider.config().stages[0],
                    };
                    let m = spec.input_frac_bits;
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let draw = |r: &mut ChaCha8Rng| {
                        (1u64 << m) | (r.next_u64() & ((1u64 << m) - 1))
                    };
                    let a = FixedPoint::new(draw(&mut rng).into(), 1, m).unwrap();
                    let b = FixedPoint::new(draw(&mut rng).into(), 1, m).unwrap();
                    println!("inputs (seed {seed}): a = {}, b = {}", a.to_binary_string(), b.to_binary_string());
                    (a, b)
                }
                _ => return Err(anyhow!("--a and --b must be given together")),
            };
            let out = divider.divide(&a, &b).map_err(|e| anyhow!("{e}"))?;
            let ledger = &out.ledger;
            let exact = oracle::exact_quotient(&ledger.dividend, &ledger.divisor).unwrap();
            println!("normalized dividend: {}", ledger.dividend.to_binary_string());
            println!("reciprocal:          {}", ledger.reciprocal.to_binary_string());
            println!(
                "initial error eps0:  {} (2^{:.4})",
                fraction_string(&ledger.eps0.to_rational()),
                log2_abs(&ledger.eps0.to_rational()).unwrap_or(f64::NEG_INFINITY)
            );
            let exp_str = |e: &BigRational| match log2_abs(e) {
                Some(l) if e.is_negative() => format!("-2^{l:.4}"),
                Some(l) => format!("2^{l:.4}"),
                None => "0 (exact)".into(),
            };
            for (i, ep) in ledger.eps_primes.iter().enumerate() {
                println!("  1 - D_{i} = {}", exp_str(&ep.to_rational()));
            }
            for (i, n) in ledger.n_errors.iter().enumerate() {
                println!("  n_{i} = {}", exp_str(&n.to_rational()));
            }
            let mut worst_fail = false;
            for s in &out.stages {
                let check = oracle::check_margin(&s.value, &exact, s.mantissa_bits);
                println!(
                    "stage {}: value {}..., error {} stage-ulp, margin 2^-{} -> {}",
                    s.name,
                    &s.value.to_binary_string()[..(3 + s.value.frac_bits().min(24) as usize)],
                    ulp_string(&check.error_ulps),
                    s.mantissa_bits + 1,
                    if check.pass { "pass" } else { "MISROUNDING" }
                );
                worst_fail |= !check.pass;
            }
            // self check: the analytical expansion of the ledger must agree
            let rebuilt = ledger.reconstruct_final();
            let simulated = goldiv::engine::raw_final_numerator(divider.config(), &out).unwrap();
            assert_eq!(rebuilt, simulated, "ledger reconstruction mismatch");
            Ok(if worst_fail { 1 } else { 0 })
        }
        Command::Campaign { config, vectors, seed, mode, stage, hist, hist_bin, stop_after } => {
            let cfg = load_config(&config)?;
            let mode = match mode.as_str() {
                "random" => CampaignMode::Random,
                "adversarial" => CampaignMode::Adversarial,
                "exhaustive-toy" => CampaignMode::ExhaustiveToy,
                other => return Err(anyhow!("unknown mode {other:?}")),
            };
            let divider = Divider::new(cfg).map_err(|e| anyhow!("{e}"))?;
            let mut spec = CampaignSpec::new(vectors, seed, mode);
            spec.stages = stage;
            spec.stop_after_witnesses = stop_after;
            spec.hist_bin_ulp = rational_from_decimal_str(&hist_bin)
                .ok_or_else(|| anyhow!("--hist-bin must be a decimal"))?;
            let report = campaign(&divider, &spec).map_err(|e| anyhow!("{e}"))?;
            for s in &report.bound.stages {
                println!(
                    "bound {}: [{}, {}] ulp vs margin {} -> {}",
                    s.name,
                    decimal_string(&s.rigorous.lo, 4),
                    decimal_string(&s.rigorous.hi, 4),
                    decimal_string(&s.margin, 0),
                    s.verdict
                );
            }
            let mut misrounded = false;
            for s in &report.stages {
                let range = match (&s.min_error_ulp, &s.max_error_ulp) {
                    (Some(lo), Some(hi)) => {
                        format!("[{}, {}]", decimal_string(lo, 4), decimal_string(hi, 4))
                    }
                    _ => "(none)".into(),
                };
                println!(
                    "stage {}: {} vectors, {} misroundings, observed error {} ulp",
                    s.stage_name, s.vectors_run, s.misroundings, range
                );
                for w in s.witnesses.iter().take(4) {
                    println!(
                        "  witness: a = {}, b = {}, error {} ulp",
                        w.a.to_binary_string(),
                        w.b.to_binary_string(),
                        decimal_string(&w.error_ulp, 6)
                    );
                }
                misrounded |= s.misroundings > 0;
                if let Some(prefix) = &hist {
                    let path = format!("{prefix}{}.csv", s.stage_name);
                    let mut f =
                        std::fs::File::create(&path).with_context(|| format!("creating {path}"))?;
                    report_histogram(s, divider.config(), 1.5, &mut f)?;
                    println!("  histogram written to {path}");
                }
            }
            if report.alarm {
                eprintln!("ALARM: misrounding under a passing bound verdict");
                return Ok(10);
            }
            if misrounded {
                Ok(1)
            } else if report.bound.verdict.is_fail() {
                Ok(2)
            } else {
                Ok(0)
            }
        }
        Command::Sweep { config, knob, from, to, criticality, out } => {
            let base = load_config(&config)?;
            let mut rows = String::new();
            rows.push_str(
                "knob,value,stage,aaet_lo_ulp,aaet_hi_ulp,cet_ulp,rig_lo_ulp,rig_hi_ulp,margin_ulp,verdict,cet_ulp_exact,rig_lo_ulp_exact,rig_hi_ulp_exact\n",
            );
            for value in from..=to {
                let mut cfg = base.clone();
                goldiv::config::apply_knob(&mut cfg, &knob, value).map_err(|e| anyhow!("{e}"))?;
                cfg.validate().map_err(|e| anyhow!("{knob}={value}: {e}"))?;
                let table = build(&cfg.table).context("table build failed")?;
                let report = total_bound(&cfg, &table, &QRange::normalized(), criticality);
                for s in &report.stages {
                    rows.push_str(&format!(
                        "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                        knob,
                        value,
                        s.name,
                        fraction_string(&s.aaet.lo),
                        fraction_string(&s.aaet.hi),
                        decimal_string(&s.cet, 9),
                        decimal_string(&s.rigorous.lo, 9),
                        decimal_string(&s.rigorous.hi, 9),
                        fraction_string(&s.margin),
                        s.verdict,
                        fraction_string(&s.cet),
                        fraction_string(&s.rigorous.lo),
                        fraction_string(&s.rigorous.hi)
                    ));
                }
            }
            match out {
                Some(path) => {
                    let mut f = std::fs::File::create(&path).with_context(|| format!("creating {path}"))?;
                    f.write_all(rows.as_bytes())?;
                    println!("sweep written to {path}");
                }
                None => print!("{rows}"),
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
