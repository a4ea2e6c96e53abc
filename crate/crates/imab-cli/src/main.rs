//! Command-line front door: generate instances and corpora, validate them,
//! run single episodes, average over visit orders, tune hyperparameters,
//! and print bound tables. Every output file is canonical JSON or CSV, so
//! identical command lines produce byte-identical artifacts.
//!
//! Exit codes: 0 on success, 2 when `validate` finds a bad curve, 1 for
//! everything else (missing files, bad parameters).

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use imab_core::algorithms::{standard_m, Estimator};
use imab_core::engine::{
    evaluate_exact, evaluate_mc, init_threads, run_one, AlgorithmSpec, LossKind, LossSpec,
    CSV_HEADER,
};
use imab_core::instances::{
    gap_report, make_example, make_hard_family, Corpus, ExampleKind, GeneratorSpec,
};
use imab_core::jsonio::{load_corpus, load_instance, write_json_file};
use imab_core::shuffle::SplitMix64;
use imab_core::theory::{bound_reports, BOUNDS_CSV_HEADER};
use imab_core::tuning::{
    dual_profile_hybrid, dual_profile_ptrr, erm_tune, sample_complexity, TuneFamily,
};
use imab_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "imab",
    version,
    about = "Improving multi-armed bandits: generate, run, evaluate, tune",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write an instance or corpus file
    Gen(GenArgs),
    /// Check every arm for monotonicity and concavity
    Validate(ValidateArgs),
    /// Run one episode and optionally save its trace
    Run(RunArgs),
    /// Average an algorithm over visit orders, exactly or by sampling
    Eval(EvalArgs),
    /// Fit hyperparameters on samples drawn from a corpus
    Tune(TuneArgs),
    /// Print the table of theoretical constants
    Bounds(BoundsArgs),
    /// Enumerate the exact loss profile over alpha
    Dual(DualArgs),
    /// Gap and commit-budget diagnostics for an instance
    Report(ReportArgs),
}

#[derive(Args)]
struct GenArgs {
    /// hard | ex1 | ex2 | ex3 | ex4 | hard_uniform_good
    #[arg(long)]
    family: String,
    #[arg(long)]
    k: usize,
    #[arg(long = "T")]
    horizon: usize,
    /// Scale of the generated curves
    #[arg(long, default_value_t = 1.0)]
    m: f64,
    /// Growth exponent of the improving arm
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    /// Break point of the flattening arms; defaults to T/4
    #[arg(long)]
    s: Option<usize>,
    /// Position of the improving arm (hard family only)
    #[arg(long, default_value_t = 0)]
    good: usize,
    /// Corpus seed (hard_uniform_good only)
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long = "in")]
    input: PathBuf,
}

#[derive(Args)]
struct AlgoArgs {
    /// ptrr | hybrid | cumulative_hybrid | regret_hybrid | envelope_greedy | doubling_ptrr
    #[arg(long)]
    algo: String,
    #[arg(long)]
    alpha: Option<f64>,
    /// Exploration budget of the two-stage variants
    #[arg(long = "B")]
    b: Option<usize>,
    /// Scale override: threshold scale, terminal scale, or f* estimate
    #[arg(long)]
    m: Option<f64>,
    /// Threshold clock override
    #[arg(long)]
    tau: Option<usize>,
    /// oracle | max_observed (doubling_ptrr only)
    #[arg(long)]
    estimator: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[command(flatten)]
    algo: AlgoArgs,
    /// Visit order as comma-separated arm indices, e.g. 0,2,1
    #[arg(long)]
    perm: Option<String>,
    /// Seed for the visit order when --perm is absent
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the full episode trace here
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[command(flatten)]
    algo: AlgoArgs,
    /// Enumerate all k! visit orders (k <= 8)
    #[arg(long)]
    exact: bool,
    /// Number of sampled episodes when not --exact
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the CSV report here
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TuneArgs {
    /// Corpus file to sample from
    #[arg(long = "in")]
    input: PathBuf,
    /// ptrr | hybrid
    #[arg(long)]
    family: String,
    /// Sample count; computed from eps/delta when absent
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Constant in the sample-complexity bound
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Loss bound H
    #[arg(long = "H", default_value_t = 1.0)]
    h: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the tuning result here
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    k: usize,
    /// Also derive the lower-bound constants at this exponent
    #[arg(long)]
    beta: Option<f64>,
    /// Emit canonical JSON instead of CSV
    #[arg(long)]
    json: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DualArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// ptrr | hybrid
    #[arg(long)]
    algo: String,
    /// Scale override (threshold scale or terminal scale)
    #[arg(long)]
    m: Option<f64>,
    /// Threshold clock override (ptrr only)
    #[arg(long)]
    tau: Option<usize>,
    /// avg_regret | max_pull_regret | bai_failure
    #[arg(long, default_value = "avg_regret")]
    loss: String,
    /// Loss bound H; the per-instance default applies when absent
    #[arg(long = "H")]
    h: Option<f64>,
    /// Visit order as comma-separated arm indices
    #[arg(long)]
    perm: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the profile here
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Stage budgets to test the commit condition at, e.g. 4,8,16
    #[arg(long = "B")]
    b: Option<String>,
    /// Write the report here
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    init_threads();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match dispatch(cli.command) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(1);
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Gen(a) => cmd_gen(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Run(a) => cmd_run(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Tune(a) => cmd_tune(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Dual(a) => cmd_dual(a),
        Command::Report(a) => cmd_report(a),
    }
}

fn bad_param(msg: impl Into<String>) -> Error {
    Error::InvalidParam(msg.into())
}

fn parse_perm(raw: &str) -> Result<Vec<usize>> {
    raw.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<usize>()
                .map_err(|_| bad_param(format!("perm: '{tok}' is not an arm index")))
        })
        .collect()
}

fn pick_perm(perm: &Option<String>, seed: u64, k: usize) -> Result<Vec<usize>> {
    match perm {
        Some(raw) => parse_perm(raw),
        None => Ok(SplitMix64::new(seed).permutation(k)),
    }
}

fn require<T>(value: Option<T>, name: &str, algo: &str) -> Result<T> {
    value.ok_or_else(|| bad_param(format!("{algo} needs the parameter {name}")))
}

fn build_spec(a: &AlgoArgs) -> Result<AlgorithmSpec> {
    let spec = match a.algo.as_str() {
        "ptrr" => AlgorithmSpec::Ptrr {
            alpha: require(a.alpha, "alpha", "ptrr")?,
            m_threshold: a.m,
            tau: a.tau,
        },
        "hybrid" => AlgorithmSpec::Hybrid {
            alpha: require(a.alpha, "alpha", "hybrid")?,
            b: require(a.b, "B", "hybrid")?,
            m_terminal: a.m,
        },
        "cumulative_hybrid" => AlgorithmSpec::CumulativeHybrid {
            alpha: require(a.alpha, "alpha", "cumulative_hybrid")?,
            b: require(a.b, "B", "cumulative_hybrid")?,
            m_terminal: a.m,
        },
        "regret_hybrid" => AlgorithmSpec::RegretHybrid {
            alpha: require(a.alpha, "alpha", "regret_hybrid")?,
            b: require(a.b, "B", "regret_hybrid")?,
            f_star: a.m,
        },
        "envelope_greedy" => AlgorithmSpec::EnvelopeGreedy,
        "doubling_ptrr" => {
            let estimator = match a.estimator.as_deref() {
                None | Some("oracle") => Estimator::Oracle,
                Some("max_observed") => Estimator::MaxObserved,
                Some(other) => {
                    return Err(bad_param(format!(
                        "estimator must be oracle or max_observed, got {other}"
                    )))
                }
            };
            AlgorithmSpec::DoublingPtrr {
                alpha: require(a.alpha, "alpha", "doubling_ptrr")?,
                estimator_id: estimator,
            }
        }
        other => return Err(bad_param(format!("unknown algo {other}"))),
    };
    Ok(spec)
}

fn cmd_gen(a: GenArgs) -> Result<i32> {
    let s = a.s.unwrap_or(a.horizon / 4);
    if a.family == "hard_uniform_good" {
        let corpus = Corpus::Generated {
            generator: GeneratorSpec::HardUniformGood {
                k: a.k,
                horizon: a.horizon,
                m: a.m,
                beta: a.beta,
                s,
            },
            seed: a.seed,
        };
        corpus.check()?;
        write_json_file(&a.out, &corpus)?;
        println!(
            "wrote {}: corpus hard_uniform_good (k={}, T={}, {} placements)",
            a.out.display(),
            a.k,
            a.horizon,
            a.k
        );
        return Ok(0);
    }
    let inst = match a.family.as_str() {
        "hard" => make_hard_family(a.k, a.horizon, a.m, a.beta, s, a.good)?,
        "ex1" => make_example(ExampleKind::Ex1, a.k, a.horizon)?,
        "ex2" => make_example(ExampleKind::Ex2, a.k, a.horizon)?,
        "ex3" => make_example(ExampleKind::Ex3, a.k, a.horizon)?,
        "ex4" => make_example(ExampleKind::Ex4, a.k, a.horizon)?,
        other => return Err(bad_param(format!("unknown family {other}"))),
    };
    write_json_file(&a.out, &inst)?;
    println!(
        "wrote {}: {} (k={}, T={}, cee={})",
        a.out.display(),
        inst.label(),
        inst.k(),
        inst.horizon(),
        inst.cee()
    );
    Ok(0)
}

fn cmd_validate(a: ValidateArgs) -> Result<i32> {
    let inst = load_instance(&a.input)?;
    let mut bad = 0;
    for (i, check) in inst.validate().iter().enumerate() {
        if check.is_valid() {
            continue;
        }
        bad += 1;
        let mut faults = Vec::new();
        if !check.monotone {
            faults.push("not monotone");
        }
        if !check.concave {
            faults.push("not concave");
        }
        println!(
            "arm {i}: {} at t={}",
            faults.join(" and "),
            check.first_violation.unwrap_or(0)
        );
    }
    if bad == 0 {
        println!(
            "ok: {} arms monotone and concave over T={}",
            inst.k(),
            inst.horizon()
        );
        Ok(0)
    } else {
        Ok(2)
    }
}

fn cmd_run(a: RunArgs) -> Result<i32> {
    let inst = load_instance(&a.input)?;
    let spec = build_spec(&a.algo)?;
    let perm = pick_perm(&a.perm, a.seed, inst.k())?;
    let trace = run_one(&inst, &spec, &perm)?;
    if let Some(out) = &a.out {
        write_json_file(out, &trace)?;
    }
    println!(
        "{} on {}: total_reward={} chosen_arm={} pulls={}",
        trace.algo,
        inst.label(),
        trace.total_reward,
        trace.chosen_arm,
        trace.pulls.len()
    );
    Ok(0)
}

fn cmd_eval(a: EvalArgs) -> Result<i32> {
    let inst = load_instance(&a.input)?;
    let spec = build_spec(&a.algo)?;
    let report = if a.exact {
        evaluate_exact(&inst, &spec)?
    } else {
        let n = require(a.n, "n", "eval --mc")?;
        evaluate_mc(&inst, &spec, n, a.seed)?
    };
    let text = format!("{CSV_HEADER}\n{}\n", report.csv_row());
    print!("{text}");
    if let Some(out) = &a.out {
        std::fs::write(out, &text).map_err(|e| {
            Error::Io(std::io::Error::new(
                e.kind(),
                format!("{}: {e}", out.display()),
            ))
        })?;
    }
    Ok(0)
}

fn cmd_tune(a: TuneArgs) -> Result<i32> {
    let corpus = load_corpus(&a.input)?;
    let family = match a.family.as_str() {
        "ptrr" => TuneFamily::Ptrr,
        "hybrid" => TuneFamily::Hybrid,
        other => {
            return Err(bad_param(format!(
                "family must be ptrr or hybrid, got {other}"
            )))
        }
    };
    let n = match a.n {
        Some(n) => n,
        None => {
            let eps = require(a.eps, "eps (or n)", "tune")?;
            let delta = require(a.delta, "delta (or n)", "tune")?;
            let q_bound = corpus
                .support()?
                .iter()
                .map(|w| {
                    let q = w.instance.k() * w.instance.horizon();
                    match family {
                        TuneFamily::Ptrr => q,
                        TuneFamily::Hybrid => q * w.instance.horizon(),
                    }
                })
                .max()
                .unwrap_or(1);
            sample_complexity(a.h, eps, delta, q_bound as f64, a.c)?
        }
    };
    let mut rng = SplitMix64::new(a.seed);
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        let inst = corpus.sample(&mut rng)?;
        let perm = rng.permutation(inst.k());
        samples.push((inst, perm));
    }
    let loss = LossSpec::with_bound(LossKind::AvgRegret, a.h);
    let result = erm_tune(&samples, family, &loss)?;
    if let Some(out) = &a.out {
        write_json_file(out, &result)?;
    }
    match result.b_hat {
        Some(b) => println!(
            "alpha_hat={} B_hat={b} loss={} over {} samples ({} candidates)",
            result.alpha_hat, result.loss, n, result.candidates
        ),
        None => println!(
            "alpha_hat={} loss={} over {} samples ({} candidates)",
            result.alpha_hat, result.loss, n, result.candidates
        ),
    }
    Ok(0)
}

fn cmd_bounds(a: BoundsArgs) -> Result<i32> {
    let reports = bound_reports(a.alpha, a.k, a.beta)?;
    let text = if a.json {
        imab_core::jsonio::canonical_string(&reports)?
    } else {
        let mut lines = vec![BOUNDS_CSV_HEADER.to_string()];
        lines.extend(reports.iter().map(|r| r.csv_row()));
        lines.join("\n") + "\n"
    };
    print!("{text}");
    if let Some(out) = &a.out {
        std::fs::write(out, &text).map_err(|e| {
            Error::Io(std::io::Error::new(
                e.kind(),
                format!("{}: {e}", out.display()),
            ))
        })?;
    }
    Ok(0)
}

fn cmd_dual(a: DualArgs) -> Result<i32> {
    let inst = load_instance(&a.input)?;
    let perm = pick_perm(&a.perm, a.seed, inst.k())?;
    let kind = match a.loss.as_str() {
        "avg_regret" => LossKind::AvgRegret,
        "max_pull_regret" => LossKind::MaxPullRegret,
        "bai_failure" => LossKind::BaiFailure,
        other => return Err(bad_param(format!("unknown loss {other}"))),
    };
    let loss = match a.h {
        Some(h) => LossSpec::with_bound(kind, h),
        None => LossSpec::new(kind),
    };
    match a.algo.as_str() {
        "ptrr" => {
            let (m, tau) = match (a.m, a.tau) {
                (Some(m), Some(tau)) => (m, tau),
                (m_over, tau_over) => {
                    let (m0, tau0) = standard_m(&inst)?;
                    (m_over.unwrap_or(m0), tau_over.unwrap_or(tau0))
                }
            };
            let profile = dual_profile_ptrr(&inst, &perm, &loss, m, tau)?;
            if let Some(out) = &a.out {
                write_json_file(out, &profile)?;
            }
            println!(
                "ptrr profile on {}: {} pieces, {} breakpoints",
                inst.label(),
                profile.piece_count,
                profile.breakpoints.len()
            );
        }
        "hybrid" => {
            let m = a.m.unwrap_or_else(|| inst.best_final_value());
            let profile = dual_profile_hybrid(&inst, &perm, &loss, m)?;
            if let Some(out) = &a.out {
                write_json_file(out, &profile)?;
            }
            println!(
                "hybrid profile on {}: {} pieces across {} budgets",
                inst.label(),
                profile.piece_count,
                profile.per_b.len()
            );
        }
        other => {
            return Err(bad_param(format!(
                "dual supports ptrr or hybrid, got {other}"
            )))
        }
    }
    Ok(0)
}

fn cmd_report(a: ReportArgs) -> Result<i32> {
    let inst = load_instance(&a.input)?;
    let budgets = match &a.b {
        Some(raw) => raw
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<usize>()
                    .map_err(|_| bad_param(format!("B: '{tok}' is not a budget")))
            })
            .collect::<Result<Vec<_>>>()?,
        None => Vec::new(),
    };
    let report = gap_report(&inst, &budgets);
    if let Some(out) = &a.out {
        write_json_file(out, &report)?;
    }
    println!(
        "{}: best_arm={} delta_terminal={} budget_sum={}",
        inst.label(),
        report.best_arm,
        report.delta_terminal,
        report
            .budget_sum
            .map_or_else(|| "never".to_string(), |s| s.to_string())
    );
    Ok(0)
}
