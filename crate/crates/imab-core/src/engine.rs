//! Evaluation: exact expectations over all k! visit orders, seeded Monte
//! Carlo, loss functions, and report formatting.
//!
//! Exact evaluation parallelizes over permutations but always reduces in
//! permutation index order, so results are bit-identical across thread
//! counts and re-runs.

use std::sync::Once;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{
    cumulative_hybrid_run, doubling_ptrr_run, envelope_greedy_run, hybrid_run, ptrr_run,
    regret_hybrid_run, standard_m, EpisodeTrace, Estimator,
};
use crate::error::Error;
use crate::instances::{opt_cumulative, Instance};
use crate::shuffle::SplitMix64;
use crate::{Result, K_MAX_EXACT};

/// Install the global thread pool once, honoring `IMAB_THREADS` when set.
/// Safe to call from every entry point; only the first call does anything.
pub fn init_threads() {
    static INIT: Once = Once::new();
    INIT.call_once(|| {
        if let Ok(raw) = std::env::var("IMAB_THREADS") {
            if let Ok(n) = raw.parse::<usize>() {
                if n >= 1 {
                    let _ = rayon::ThreadPoolBuilder::new()
                        .num_threads(n)
                        .build_global();
                }
            }
        }
    });
}

// ---------------------------------------------------------------------------
// Algorithm selection
// ---------------------------------------------------------------------------

/// A runnable algorithm with its hyperparameters. Optional fields fall back
/// to per-instance defaults when resolved:
/// - `ptrr`: τ = T − k and m = (τ/T)·f*(T), f* the cumulative-best arm;
/// - the hybrids: m_terminal = max_i f_i(T);
/// - `regret_hybrid`: f_star = f*(T).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlgorithmSpec {
    Ptrr {
        alpha: f64,
        #[serde(default)]
        m_threshold: Option<f64>,
        #[serde(default)]
        tau: Option<usize>,
    },
    Hybrid {
        alpha: f64,
        #[serde(rename = "B")]
        b: usize,
        #[serde(default)]
        m_terminal: Option<f64>,
    },
    CumulativeHybrid {
        alpha: f64,
        #[serde(rename = "B")]
        b: usize,
        #[serde(default)]
        m_terminal: Option<f64>,
    },
    RegretHybrid {
        alpha: f64,
        #[serde(rename = "B")]
        b: usize,
        #[serde(default)]
        f_star: Option<f64>,
    },
    EnvelopeGreedy,
    DoublingPtrr {
        alpha: f64,
        estimator_id: Estimator,
    },
}

fn estimator_name(e: Estimator) -> &'static str {
    match e {
        Estimator::Oracle => "oracle",
        Estimator::MaxObserved => "max_observed",
    }
}

/// An `AlgorithmSpec` with every default filled in against one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedSpec {
    pub algo: &'static str,
    /// `key=value` pairs joined by `;`, echoing the resolved parameters.
    pub params: String,
    /// The scale parameter the variant thresholds on, when it has one.
    pub scale: Option<f64>,
    spec: AlgorithmSpec,
}

/// Fill in the per-instance defaults.
pub fn resolve(spec: &AlgorithmSpec, inst: &Instance) -> Result<ResolvedSpec> {
    let (_, star) = opt_cumulative(inst);
    let out = match *spec {
        AlgorithmSpec::Ptrr {
            alpha,
            m_threshold,
            tau,
        } => {
            let (m_default, tau_default) = standard_m(inst)?;
            let m = m_threshold.unwrap_or(m_default);
            let tau = tau.unwrap_or(tau_default);
            ResolvedSpec {
                algo: "ptrr",
                params: format!("alpha={alpha};m={m};tau={tau}"),
                scale: Some(m),
                spec: AlgorithmSpec::Ptrr {
                    alpha,
                    m_threshold: Some(m),
                    tau: Some(tau),
                },
            }
        }
        AlgorithmSpec::Hybrid {
            alpha,
            b,
            m_terminal,
        } => {
            let m = m_terminal.unwrap_or_else(|| inst.best_final_value());
            ResolvedSpec {
                algo: "hybrid",
                params: format!("alpha={alpha};B={b};m_terminal={m}"),
                scale: Some(m),
                spec: AlgorithmSpec::Hybrid {
                    alpha,
                    b,
                    m_terminal: Some(m),
                },
            }
        }
        AlgorithmSpec::CumulativeHybrid {
            alpha,
            b,
            m_terminal,
        } => {
            let m = m_terminal.unwrap_or_else(|| inst.best_final_value());
            ResolvedSpec {
                algo: "cumulative_hybrid",
                params: format!("alpha={alpha};B={b};m_terminal={m}"),
                scale: Some(m),
                spec: AlgorithmSpec::CumulativeHybrid {
                    alpha,
                    b,
                    m_terminal: Some(m),
                },
            }
        }
        AlgorithmSpec::RegretHybrid { alpha, b, f_star } => {
            let fs = f_star.unwrap_or_else(|| inst.arm(star).value(inst.horizon()));
            ResolvedSpec {
                algo: "regret_hybrid",
                params: format!("alpha={alpha};B={b};f_star={fs}"),
                scale: Some(fs),
                spec: AlgorithmSpec::RegretHybrid {
                    alpha,
                    b,
                    f_star: Some(fs),
                },
            }
        }
        AlgorithmSpec::EnvelopeGreedy => ResolvedSpec {
            algo: "envelope_greedy",
            params: "-".into(),
            scale: None,
            spec: AlgorithmSpec::EnvelopeGreedy,
        },
        AlgorithmSpec::DoublingPtrr {
            alpha,
            estimator_id,
        } => ResolvedSpec {
            algo: "doubling_ptrr",
            params: format!("alpha={alpha};estimator={}", estimator_name(estimator_id)),
            scale: None,
            spec: AlgorithmSpec::DoublingPtrr {
                alpha,
                estimator_id,
            },
        },
    };
    Ok(out)
}

/// Run one episode of the (resolved) algorithm under the given visit order.
/// `envelope_greedy` is deterministic and ignores the permutation.
pub fn run_one(
    inst: &Instance,
    spec: &AlgorithmSpec,
    permutation: &[usize],
) -> Result<EpisodeTrace> {
    let resolved = resolve(spec, inst)?;
    run_resolved(inst, &resolved, permutation)
}

fn run_resolved(
    inst: &Instance,
    resolved: &ResolvedSpec,
    permutation: &[usize],
) -> Result<EpisodeTrace> {
    let t = inst.horizon();
    match resolved.spec {
        AlgorithmSpec::Ptrr {
            alpha,
            m_threshold,
            tau,
        } => ptrr_run(
            inst,
            alpha,
            m_threshold.unwrap(),
            tau.unwrap(),
            permutation,
            t,
        ),
        AlgorithmSpec::Hybrid {
            alpha,
            b,
            m_terminal,
        } => hybrid_run(inst, alpha, b, m_terminal.unwrap(), permutation),
        AlgorithmSpec::CumulativeHybrid {
            alpha,
            b,
            m_terminal,
        } => cumulative_hybrid_run(inst, alpha, b, m_terminal.unwrap(), permutation),
        AlgorithmSpec::RegretHybrid { alpha, b, f_star } => {
            regret_hybrid_run(inst, alpha, b, f_star.unwrap(), permutation)
        }
        AlgorithmSpec::EnvelopeGreedy => Ok(envelope_greedy_run(inst)),
        AlgorithmSpec::DoublingPtrr {
            alpha,
            estimator_id,
        } => doubling_ptrr_run(inst, alpha, estimator_id, permutation),
    }
}

/// Run one episode with the visit order drawn from the seed.
pub fn run_episode_seeded(
    inst: &Instance,
    spec: &AlgorithmSpec,
    seed: u64,
) -> Result<EpisodeTrace> {
    let mut rng = SplitMix64::new(seed);
    let perm = rng.permutation(inst.k());
    run_one(inst, spec, &perm)
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

/// Which episode outcome gets scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// (OPT_T − collected reward) / T.
    AvgRegret,
    /// max_i f_i(T) minus the best per-pull value actually reached.
    MaxPullRegret,
    /// 0 if the returned arm ties the best final value, else 1.
    BaiFailure,
}

/// A loss with an optional clamp bound H; losses are reported in [0, H].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub kind: LossKind,
    #[serde(default)]
    pub h_bound: Option<f64>,
}

impl LossSpec {
    pub fn new(kind: LossKind) -> Self {
        Self {
            kind,
            h_bound: None,
        }
    }

    pub fn with_bound(kind: LossKind, h: f64) -> Self {
        Self {
            kind,
            h_bound: Some(h),
        }
    }

    /// The clamp bound in effect: the explicit H when given, otherwise 1 for
    /// the identification loss, the algorithm's own scale parameter for the
    /// per-pull loss when it has one, and max_i f_i(T) as the fallback.
    pub fn resolved_h(&self, inst: &Instance, scale: Option<f64>) -> f64 {
        if let Some(h) = self.h_bound {
            return h;
        }
        match self.kind {
            LossKind::BaiFailure => 1.0,
            LossKind::MaxPullRegret => scale.unwrap_or_else(|| inst.best_final_value()),
            LossKind::AvgRegret => inst.best_final_value(),
        }
    }
}

/// Raw (unclamped) loss of one finished episode.
pub fn episode_loss(inst: &Instance, trace: &EpisodeTrace, kind: LossKind) -> f64 {
    let t = inst.horizon();
    match kind {
        LossKind::AvgRegret => {
            let (opt, _) = opt_cumulative(inst);
            (opt - trace.total_reward) / t as f64
        }
        LossKind::MaxPullRegret => {
            let reached = trace
                .arm_pulls
                .iter()
                .enumerate()
                .map(|(i, &n)| inst.arm(i).value(n))
                .fold(f64::NEG_INFINITY, f64::max);
            inst.best_final_value() - reached
        }
        LossKind::BaiFailure => {
            if inst.arm(trace.chosen_arm).value(t) >= inst.best_final_value() {
                0.0
            } else {
                1.0
            }
        }
    }
}

/// Resolve the spec, run one episode, and score it, clamped to [0, H].
pub fn run_loss(
    inst: &Instance,
    spec: &AlgorithmSpec,
    permutation: &[usize],
    loss: &LossSpec,
) -> Result<f64> {
    let resolved = resolve(spec, inst)?;
    let trace = run_resolved(inst, &resolved, permutation)?;
    let h = loss.resolved_h(inst, resolved.scale);
    Ok(episode_loss(inst, &trace, loss.kind).clamp(0.0, h))
}

// ---------------------------------------------------------------------------
// Permutation enumeration
// ---------------------------------------------------------------------------

fn factorial(k: usize) -> usize {
    (1..=k).product()
}

/// The idx-th permutation of 0..k in lexicographic order (factorial number
/// system unranking). idx must lie in 0..k!.
pub fn nth_permutation(k: usize, idx: usize) -> Vec<usize> {
    let mut items: Vec<usize> = (0..k).collect();
    let mut out = Vec::with_capacity(k);
    let mut rem = idx;
    for pos in 0..k {
        let f = factorial(k - 1 - pos);
        out.push(items.remove(rem / f));
        rem %= f;
    }
    out
}

/// Exact expectation of `f` over the uniform distribution on all k!
/// permutations. Parallel evaluation, serial in-order summation: the result
/// does not depend on the thread count.
pub fn expected_over_permutations<F>(k: usize, f: F) -> Result<f64>
where
    F: Fn(&[usize]) -> Result<f64> + Sync,
{
    if k > K_MAX_EXACT {
        return Err(Error::InvalidParam(format!(
            "exact evaluation enumerates k! = {k}! permutations and is capped at \
             k = {K_MAX_EXACT}; use the Monte Carlo evaluator instead"
        )));
    }
    let n = factorial(k);
    let vals: Vec<Result<f64>> = (0..n)
        .into_par_iter()
        .map(|i| f(&nth_permutation(k, i)))
        .collect();
    let mut sum = 0.0;
    for v in vals {
        sum += v?;
    }
    Ok(sum / n as f64)
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// Header for `EvalReport::csv_row`.
pub const CSV_HEADER: &str =
    "algo,variant-params,method,n,mean_reward,ratio,p_best_arm,loss_avg_regret,loss_max_pull_regret";

/// Aggregate evaluation of one algorithm on one instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub algo: String,
    pub params: String,
    /// "exact" or "mc".
    pub method: String,
    /// Number of episodes averaged (k! for exact).
    pub n: usize,
    pub mean_reward: f64,
    /// OPT_T / mean_reward.
    pub ratio: f64,
    /// Fraction of episodes whose returned arm ties the best final value.
    pub p_best_arm: f64,
    pub loss_avg_regret: f64,
    pub loss_max_pull_regret: f64,
    /// Standard error of the reward mean; Monte Carlo only.
    pub std_error: Option<f64>,
}

impl EvalReport {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.algo,
            self.params,
            self.method,
            self.n,
            self.mean_reward,
            self.ratio,
            self.p_best_arm,
            self.loss_avg_regret,
            self.loss_max_pull_regret
        )
    }
}

/// Per-episode scores entering the aggregates: reward, best-arm indicator,
/// and the two clamped regret losses.
fn episode_stats(inst: &Instance, resolved: &ResolvedSpec, trace: &EpisodeTrace) -> [f64; 4] {
    let h_avg = LossSpec::new(LossKind::AvgRegret).resolved_h(inst, resolved.scale);
    let h_mp = LossSpec::new(LossKind::MaxPullRegret).resolved_h(inst, resolved.scale);
    [
        trace.total_reward,
        1.0 - episode_loss(inst, trace, LossKind::BaiFailure),
        episode_loss(inst, trace, LossKind::AvgRegret).clamp(0.0, h_avg),
        episode_loss(inst, trace, LossKind::MaxPullRegret).clamp(0.0, h_mp),
    ]
}

fn report_from_sums(
    inst: &Instance,
    resolved: &ResolvedSpec,
    method: &str,
    n: usize,
    sums: [f64; 4],
    std_error: Option<f64>,
) -> EvalReport {
    let (opt, _) = opt_cumulative(inst);
    let nf = n as f64;
    let mean_reward = sums[0] / nf;
    EvalReport {
        algo: resolved.algo.to_string(),
        params: resolved.params.clone(),
        method: method.to_string(),
        n,
        mean_reward,
        ratio: opt / mean_reward,
        p_best_arm: sums[1] / nf,
        loss_avg_regret: sums[2] / nf,
        loss_max_pull_regret: sums[3] / nf,
        std_error,
    }
}

/// Derandomized evaluation: the exact expectation over all k! visit orders.
/// Refuses instances with more than `K_MAX_EXACT` arms.
pub fn evaluate_exact(inst: &Instance, spec: &AlgorithmSpec) -> Result<EvalReport> {
    let k = inst.k();
    if k > K_MAX_EXACT {
        return Err(Error::InvalidParam(format!(
            "exact evaluation enumerates k! permutations and is capped at k = \
             {K_MAX_EXACT}, got k = {k}; use the Monte Carlo evaluator instead"
        )));
    }
    let resolved = resolve(spec, inst)?;
    let n = factorial(k);
    let per: Vec<Result<[f64; 4]>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let perm = nth_permutation(k, i);
            let trace = run_resolved(inst, &resolved, &perm)?;
            Ok(episode_stats(inst, &resolved, &trace))
        })
        .collect();
    let mut sums = [0.0; 4];
    for row in per {
        let row = row?;
        for (s, v) in sums.iter_mut().zip(row) {
            *s += v;
        }
    }
    Ok(report_from_sums(inst, &resolved, "exact", n, sums, None))
}

/// Monte Carlo evaluation over `n` seeded episodes. The permutation stream
/// comes from a single sequential generator, so the estimate is a pure
/// function of (instance, spec, n, seed).
pub fn evaluate_mc(
    inst: &Instance,
    spec: &AlgorithmSpec,
    n: usize,
    seed: u64,
) -> Result<EvalReport> {
    if n == 0 {
        return Err(Error::InvalidParam("n must be at least 1".into()));
    }
    let resolved = resolve(spec, inst)?;
    let mut rng = SplitMix64::new(seed);
    let mut sums = [0.0; 4];
    let mut rewards = Vec::with_capacity(n);
    for _ in 0..n {
        let perm = rng.permutation(inst.k());
        let trace = run_resolved(inst, &resolved, &perm)?;
        let row = episode_stats(inst, &resolved, &trace);
        for (s, v) in sums.iter_mut().zip(row) {
            *s += v;
        }
        rewards.push(trace.total_reward);
    }
    let mean = sums[0] / n as f64;
    let std_error = (n > 1).then(|| {
        let var = rewards.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    });
    Ok(report_from_sums(inst, &resolved, "mc", n, sums, std_error))
}

// ---------------------------------------------------------------------------
