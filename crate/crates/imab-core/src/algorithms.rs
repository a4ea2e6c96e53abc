//! The algorithm families, each a deterministic function of (instance,
//! parameters, permutation).
//!
//! All randomness is externalized: the only random object any policy here
//! would draw, the arm visit order, enters as an explicit permutation, so a
//! fixed (instance, parameters, permutation) triple reproduces the same
//! trace bit for bit and expectations over the uniform order become exact
//! finite averages (see the engine module).
//!
//! Tie rules, once and for all:
//! - argmax over arm values or lower envelopes: lowest index wins;
//! - envelope-slack pulls (hybrid stage 1): lowest index wins, so unpulled
//!   arms (infinite slack) go in index order;
//! - optimistic pulls (envelope-greedy): highest upper envelope, then fewest
//!   pulls, then lowest index. The middle key keeps the rule round-robin on
//!   instances whose upper envelopes tie exactly, instead of letting arm 0
//!   soak up the whole budget.

use serde::{Deserialize, Serialize};

use crate::curves::RewardCurve;
use crate::error::Error;
use crate::instances::{argmax, opt_cumulative, Instance};
use crate::Result;

// ---------------------------------------------------------------------------
// Traces
// ---------------------------------------------------------------------------

/// One pull: global time `t` (1-based), the arm, the arm's own pull count
/// after this pull, and the reward f_arm(arm_pull) it produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pull {
    pub t: usize,
    pub arm: usize,
    pub arm_pull: usize,
    pub reward: f64,
}

/// Why a thresholded round-robin visit ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VisitEnd {
    /// The keep-test failed.
    Abandoned,
    /// The pull budget ran out while the test still passed.
    Budget,
    /// Every arm had been abandoned; the leftover budget went to the arm
    /// with the highest current value.
    Fill,
}

/// One arm's visit during a thresholded round-robin stage. `pulls` counts
/// only this visit's pulls, so for a fresh run the visit list doubles as the
/// stop-time tuple (t_stop per visited arm, in visit order).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Visit {
    pub arm: usize,
    pub pulls: usize,
    pub reward: f64,
    pub end: VisitEnd,
}

/// A stage-1 certificate: the arm whose lower envelope strictly cleared
/// every other arm's upper envelope, and the global time (pulls made so
/// far) at which the check fired.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Commit {
    pub arm: usize,
    pub time: usize,
}

/// One cycle of the horizon-doubling wrapper. Nominal and actual phase
/// lengths differ only when the true horizon truncates the cycle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cycle {
    pub horizon_guess: usize,
    pub explore_nominal: usize,
    pub explore_actual: usize,
    pub exploit_nominal: usize,
    pub exploit_actual: usize,
    pub m_hat: f64,
    pub m_exploit: f64,
    pub tau_exploit: usize,
    pub exploit_reward: f64,
    pub completed: bool,
}

/// Full pull-by-pull record of one episode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeTrace {
    pub algo: &'static str,
    pub pulls: Vec<Pull>,
    /// Final per-arm pull counts.
    pub arm_pulls: Vec<usize>,
    /// Cumulative reward over the whole episode.
    pub total_reward: f64,
    /// The arm the episode returns.
    pub chosen_arm: usize,
    /// Set when a stage-1 certificate fired.
    pub commit: Option<Commit>,
    /// Global time at which the post-exploration round robin began, for the
    /// two-stage algorithms that reached it.
    pub stage2_start: Option<usize>,
    /// Round-robin visit records, in visit order.
    pub visits: Vec<Visit>,
    /// Doubling-wrapper cycles; empty for single-horizon runs.
    pub cycles: Vec<Cycle>,
}

// ---------------------------------------------------------------------------
// Shared runner
// ---------------------------------------------------------------------------

struct Runner<'a> {
    inst: &'a Instance,
    counts: Vec<usize>,
    pulls: Vec<Pull>,
    total_reward: f64,
}

impl<'a> Runner<'a> {
    fn new(inst: &'a Instance) -> Self {
        Self {
            inst,
            counts: vec![0; inst.k()],
            pulls: Vec::with_capacity(inst.horizon()),
            total_reward: 0.0,
        }
    }

    fn time(&self) -> usize {
        self.pulls.len()
    }

    fn value(&self, arm: usize) -> f64 {
        self.inst.arm(arm).value(self.counts[arm])
    }

    fn pull(&mut self, arm: usize) -> f64 {
        debug_assert!(self.time() < self.inst.horizon());
        self.counts[arm] += 1;
        let reward = self.inst.arm(arm).value(self.counts[arm]);
        self.pulls.push(Pull {
            t: self.pulls.len() + 1,
            arm,
            arm_pull: self.counts[arm],
            reward,
        });
        self.total_reward += reward;
        reward
    }

    /// Arm with the highest current value, lowest index on ties.
    fn leader(&self) -> usize {
        argmax((0..self.inst.k()).map(|i| self.value(i)))
    }

    fn finish(
        self,
        algo: &'static str,
        chosen_arm: usize,
        commit: Option<Commit>,
        stage2_start: Option<usize>,
        visits: Vec<Visit>,
        cycles: Vec<Cycle>,
    ) -> EpisodeTrace {
        EpisodeTrace {
            algo,
            pulls: self.pulls,
            arm_pulls: self.counts,
            total_reward: self.total_reward,
            chosen_arm,
            commit,
            stage2_start,
            visits,
            cycles,
        }
    }
}

// ---------------------------------------------------------------------------
// Parameter checks
// ---------------------------------------------------------------------------

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParam(format!(
            "alpha must lie in (0, 1], got {alpha}"
        )));
    }
    Ok(())
}

fn check_scale(name: &str, m: f64) -> Result<()> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::InvalidParam(format!(
            "{name} must be positive and finite, got {m}"
        )));
    }
    Ok(())
}

pub(crate) fn check_permutation(perm: &[usize], k: usize) -> Result<()> {
    if perm.len() != k {
        return Err(Error::InvalidParam(format!(
            "permutation has length {}, instance has {k} arms",
            perm.len()
        )));
    }
    let mut seen = vec![false; k];
    for &i in perm {
        if i >= k || seen[i] {
            return Err(Error::InvalidParam(format!(
                "permutation {perm:?} is not a bijection on 0..{k}"
            )));
        }
        seen[i] = true;
    }
    Ok(())
}

fn check_budget(budget: usize, horizon: usize) -> Result<()> {
    if budget > horizon {
        return Err(Error::InvalidParam(format!(
            "budget {budget} exceeds horizon {horizon}"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Thresholded round robin
// ---------------------------------------------------------------------------

/// Stay-or-move test: keep pulling while f(t_i) >= m·(t_i/τ)^α. Always true
/// at t_i = 0, so every visited arm gets at least one pull; t_i may exceed
/// τ. For α = 1 the threshold is computed as (m·t_i)/τ, which is exact
/// whenever the true quotient is representable; the worked linear examples
/// meet the threshold with equality and the tie must survive floating
/// point.
pub fn keep_test(f_value: f64, t_i: usize, m: f64, tau: usize, alpha: f64) -> bool {
    if t_i == 0 {
        return true;
    }
    let threshold = if alpha == 1.0 {
        m * t_i as f64 / tau as f64
    } else {
        m * (t_i as f64 / tau as f64).powf(alpha)
    };
    f_value >= threshold
}

/// Core single-stage loop shared by every run that ends in a thresholded
/// round robin. Visits arms in `order`; each visited arm is pulled while the
/// keep-test holds on its in-stage count and budget remains. If every arm
/// gets abandoned first, the leftover budget is dumped on the arm with the
/// highest current value. Pull counts already on the arms act as curve
/// shifts: the stage sees g_i(s) = f_i(shift_i + s).
fn ptrr_stage(
    run: &mut Runner,
    order: &[usize],
    alpha: f64,
    m: f64,
    tau: usize,
    budget: usize,
) -> Vec<Visit> {
    let shift = run.counts.clone();
    let mut visits = Vec::new();
    let mut left = budget;
    for &arm in order {
        if left == 0 {
            break;
        }
        let mut visit = Visit {
            arm,
            pulls: 0,
            reward: 0.0,
            end: VisitEnd::Abandoned,
        };
        loop {
            let s = run.counts[arm] - shift[arm];
            if !keep_test(run.value(arm), s, m, tau, alpha) {
                visit.end = VisitEnd::Abandoned;
                break;
            }
            if left == 0 {
                visit.end = VisitEnd::Budget;
                break;
            }
            let reward = run.pull(arm);
            visit.pulls += 1;
            visit.reward += reward;
            left -= 1;
        }
        visits.push(visit);
    }
    if left > 0 {
        let arm = run.leader();
        let mut visit = Visit {
            arm,
            pulls: 0,
            reward: 0.0,
            end: VisitEnd::Fill,
        };
        while left > 0 {
            let reward = run.pull(arm);
            visit.pulls += 1;
            visit.reward += reward;
            left -= 1;
        }
        visits.push(visit);
    }
    visits
}

/// Single-permutation thresholded round robin over at most `budget` pulls,
/// returning the arm with the highest observed value.
pub fn ptrr_run(
    inst: &Instance,
    alpha: f64,
    m_threshold: f64,
    tau: usize,
    permutation: &[usize],
    budget: usize,
) -> Result<EpisodeTrace> {
    check_alpha(alpha)?;
    check_scale("m_threshold", m_threshold)?;
    check_permutation(permutation, inst.k())?;
    check_budget(budget, inst.horizon())?;
    if tau == 0 {
        return Err(Error::InvalidParam("tau must be at least 1".into()));
    }
    let mut run = Runner::new(inst);
    let visits = ptrr_stage(&mut run, permutation, alpha, m_threshold, tau, budget);
    let chosen = run.leader();
    Ok(run.finish("ptrr", chosen, None, None, visits, vec![]))
}

/// Default threshold scale and clock: τ = T − k and m = (τ/T)·f*(T), with
/// f* the cumulative-best arm's curve.
pub fn standard_m(inst: &Instance) -> Result<(f64, usize)> {
    let t = inst.horizon();
    let k = inst.k();
    if t <= k {
        return Err(Error::Domain(format!(
            "the default clock tau = T - k needs T > k; T={t}, k={k}"
        )));
    }
    let tau = t - k;
    let (_, star) = opt_cumulative(inst);
    let m = (tau as f64 / t as f64) * inst.arm(star).value(t);
    Ok((m, tau))
}

/// Sandwich test for a threshold scale: (1/c₂)·f*(T−k) <= m <= f*(T)·((T−k)/T)^α,
/// with f* the cumulative-best arm. The upper side is what the never-drop
/// guarantee needs; the lower side keeps the scale honest to within a
/// constant c₂ >= 1.
pub fn check_m(inst: &Instance, m: f64, alpha: f64, c2: f64) -> Result<bool> {
    check_alpha(alpha)?;
    if !(c2 >= 1.0 && c2.is_finite()) {
        return Err(Error::InvalidParam(format!("c2 must be >= 1, got {c2}")));
    }
    let t = inst.horizon();
    let k = inst.k();
    if t <= k {
        return Err(Error::Domain(format!(
            "the threshold sandwich needs T > k; T={t}, k={k}"
        )));
    }
    let (_, star) = opt_cumulative(inst);
    let f_star = inst.arm(star);
    let lower = f_star.value(t - k) / c2;
    let frac = (t - k) as f64 / t as f64;
    let factor = if alpha == 1.0 { frac } else { frac.powf(alpha) };
    let upper = f_star.value(t) * factor;
    Ok(lower <= m && m <= upper)
}

// ---------------------------------------------------------------------------
// Envelopes and the two-stage algorithms
// ---------------------------------------------------------------------------

/// Per-arm certified bounds. Terminal flavor brackets f_i(T):
///   L_i = f_i(t_i),  U_i = L_i + (T−t_i)·γ_i,  γ_i = f_i(t_i) − f_i(t_i−1).
/// Cumulative flavor brackets the best-case total F_i(T) when the rest of
/// the budget goes to arm i:
///   L_i = F_i + (T−t_i)·f_i(t_i),  U_i = L_i + (T−t_i)(T−t_i+1)/2·γ_i.
/// Unpulled arms carry U_i = ∞ (γ is unobservable before the first pull).
/// Concavity makes both sandwiches sound.
pub(crate) struct EnvelopeSet {
    cumulative: bool,
    horizon: usize,
    pub(crate) lower: Vec<f64>,
    pub(crate) upper: Vec<f64>,
    fsum: Vec<f64>,
}

impl EnvelopeSet {
    pub(crate) fn new(k: usize, horizon: usize, cumulative: bool) -> Self {
        Self {
            cumulative,
            horizon,
            lower: vec![0.0; k],
            upper: vec![f64::INFINITY; k],
            fsum: vec![0.0; k],
        }
    }

    /// Refresh arm i's bounds after its pull count reached t_i.
    pub(crate) fn after_pull(&mut self, curve: &RewardCurve, i: usize, t_i: usize) {
        let value = curve.value(t_i);
        let gamma = value - curve.value(t_i - 1);
        let rem = (self.horizon - t_i) as f64;
        if self.cumulative {
            self.fsum[i] += value;
            self.lower[i] = self.fsum[i] + rem * value;
            self.upper[i] = self.lower[i] + rem * (rem + 1.0) / 2.0 * gamma;
        } else {
            self.lower[i] = value;
            self.upper[i] = self.lower[i] + rem * gamma;
        }
    }

    /// The certificate check: Some(i) when arm i's lower bound strictly
    /// clears every other arm's upper bound, with i = argmax of the lower
    /// bounds (lowest index on ties).
    pub(crate) fn commit_candidate(&self) -> Option<usize> {
        let ihat = argmax(self.lower.iter().copied());
        let mut rival = f64::NEG_INFINITY;
        for (j, &u) in self.upper.iter().enumerate() {
            if j != ihat && u > rival {
                rival = u;
            }
        }
        (self.lower[ihat] > rival).then_some(ihat)
    }

    fn slack_arm(&self) -> usize {
        argmax(self.lower.iter().zip(&self.upper).map(|(l, u)| u - l))
    }

    fn optimistic_arm(&self, counts: &[usize]) -> usize {
        let mut best = 0;
        for i in 1..self.upper.len() {
            if self.upper[i] > self.upper[best]
                || (self.upper[i] == self.upper[best] && counts[i] < counts[best])
            {
                best = i;
            }
        }
        best
    }
}

#[derive(Clone, Copy)]
enum PullRule {
    /// Widest-gap exploration: argmax (U_i − L_i).
    Slack,
    /// Optimism: argmax U_i, then fewest pulls, then lowest index.
    Optimistic,
}

/// Exploration prefix over at most `budget` pulls. When `commits` is set,
/// the certificate is checked before each pull, i.e. at global times
/// 0..budget−1, so a commit always happens strictly before the budget is
/// spent.
fn envelope_stage(
    run: &mut Runner,
    env: &mut EnvelopeSet,
    budget: usize,
    rule: PullRule,
    commits: bool,
) -> Option<Commit> {
    for _ in 0..budget {
        if commits {
            if let Some(arm) = env.commit_candidate() {
                return Some(Commit {
                    arm,
                    time: run.time(),
                });
            }
        }
        let arm = match rule {
            PullRule::Slack => env.slack_arm(),
            PullRule::Optimistic => env.optimistic_arm(&run.counts),
        };
        run.pull(arm);
        env.after_pull(run.inst.arm(arm), arm, run.counts[arm]);
    }
    None
}

/// Threshold scale and clock for the round robin that follows an
/// uncommitted exploration prefix of length b: τ' = (T−b) − k and
/// m' = (τ'/T)·scale. When the leftover horizon cannot even cover the arms
/// (τ' < 1) the stage degenerates to an always-pass test (m' = 0, τ' = 1)
/// so the budget still gets spent; with a zero threshold the first arm in
/// the visit order absorbs it.
pub(crate) fn stage2_params(t: usize, b: usize, k: usize, scale: f64) -> (f64, usize) {
    let rest = t - b;
    if rest > k {
        let tau = rest - k;
        ((tau as f64 / t as f64) * scale, tau)
    } else {
        (0.0, 1)
    }
}

/// Stage-1 exploration state after at most b slack-rule pulls: the per-arm
/// counts and the certificate, if one fired. Used by the dual-profile
/// machinery, which needs the (α-independent) prefix without a full trace.
pub(crate) fn hybrid_stage1_probe(
    inst: &Instance,
    b: usize,
    cumulative: bool,
) -> (Vec<usize>, Option<Commit>) {
    let mut run = Runner::new(inst);
    let mut env = EnvelopeSet::new(inst.k(), inst.horizon(), cumulative);
    let commit = envelope_stage(&mut run, &mut env, b, PullRule::Slack, true);
    (run.counts, commit)
}

fn hybrid_core(
    inst: &Instance,
    alpha: f64,
    b: usize,
    m_terminal: f64,
    permutation: &[usize],
    cumulative: bool,
) -> Result<EpisodeTrace> {
    check_alpha(alpha)?;
    check_scale("m_terminal", m_terminal)?;
    check_permutation(permutation, inst.k())?;
    check_budget(b, inst.horizon())?;
    let algo = if cumulative {
        "cumulative_hybrid"
    } else {
        "hybrid"
    };
    let t = inst.horizon();
    let mut run = Runner::new(inst);
    let mut env = EnvelopeSet::new(inst.k(), t, cumulative);
    if let Some(commit) = envelope_stage(&mut run, &mut env, b, PullRule::Slack, true) {
        while run.time() < t {
            run.pull(commit.arm);
        }
        return Ok(run.finish(algo, commit.arm, Some(commit), None, vec![], vec![]));
    }
    let (m2, tau2) = stage2_params(t, b, inst.k(), m_terminal);
    let visits = ptrr_stage(&mut run, permutation, alpha, m2, tau2, t - b);
    let chosen = run.leader();
    Ok(run.finish(algo, chosen, None, Some(b), visits, vec![]))
}

/// Two-stage run with terminal envelopes: explore by widest envelope gap,
/// commit on a certificate, otherwise fall back to the thresholded round
/// robin on the shifted curves. Committing spends the whole remaining
/// budget on the certified arm.
pub fn hybrid_run(
    inst: &Instance,
    alpha: f64,
    b: usize,
    m_terminal: f64,
    permutation: &[usize],
) -> Result<EpisodeTrace> {
    hybrid_core(inst, alpha, b, m_terminal, permutation, false)
}

/// As `hybrid_run`, with cumulative envelopes and gap semantics.
pub fn cumulative_hybrid_run(
    inst: &Instance,
    alpha: f64,
    b: usize,
    m_terminal: f64,
    permutation: &[usize],
) -> Result<EpisodeTrace> {
    hybrid_core(inst, alpha, b, m_terminal, permutation, true)
}

/// Two-stage run for cumulative regret: an optimistic exploration prefix of
/// exactly b pulls (no commit checks), then the thresholded round robin on
/// the shifted curves with the caller's estimate of f*(T) setting the
/// scale. The exploration stage pulls argmax U_i on terminal envelopes; it
/// stands in for a first-stage policy chosen by the caller's taste, and the
/// guarantees only use the round-robin stage.
pub fn regret_hybrid_run(
    inst: &Instance,
    alpha: f64,
    b: usize,
    f_star_estimate: f64,
    permutation: &[usize],
) -> Result<EpisodeTrace> {
    check_alpha(alpha)?;
    check_scale("f_star_estimate", f_star_estimate)?;
    check_permutation(permutation, inst.k())?;
    check_budget(b, inst.horizon())?;
    let t = inst.horizon();
    let mut run = Runner::new(inst);
    let mut env = EnvelopeSet::new(inst.k(), t, false);
    envelope_stage(&mut run, &mut env, b, PullRule::Optimistic, false);
    let (m2, tau2) = stage2_params(t, b, inst.k(), f_star_estimate);
    let visits = ptrr_stage(&mut run, permutation, alpha, m2, tau2, t - b);
    let chosen = run.leader();
    Ok(run.finish("regret_hybrid", chosen, None, Some(b), visits, vec![]))
}

/// Optimistic baseline: pull argmax U_i (terminal envelopes) for the whole
/// horizon. Fully deterministic; takes no permutation.
pub fn envelope_greedy_run(inst: &Instance) -> EpisodeTrace {
    let t = inst.horizon();
    let mut run = Runner::new(inst);
    let mut env = EnvelopeSet::new(inst.k(), t, false);
    envelope_stage(&mut run, &mut env, t, PullRule::Optimistic, false);
    let chosen = run.leader();
    run.finish("envelope_greedy", chosen, None, None, vec![], vec![])
}

/// Oblivious cyclic baseline over the permutation.
pub fn round_robin_run(
    inst: &Instance,
    permutation: &[usize],
    budget: usize,
) -> Result<EpisodeTrace> {
    check_permutation(permutation, inst.k())?;
    check_budget(budget, inst.horizon())?;
    let mut run = Runner::new(inst);
    round_robin_stage(&mut run, permutation, budget);
    let chosen = run.leader();
    Ok(run.finish("round_robin", chosen, None, None, vec![], vec![]))
}

fn round_robin_stage(run: &mut Runner, order: &[usize], budget: usize) {
    for j in 0..budget {
        run.pull(order[j % order.len()]);
    }
}

// ---------------------------------------------------------------------------
// Unknown horizon
// ---------------------------------------------------------------------------

/// How the doubling wrapper turns an explore phase into a scale estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Clairvoyant stand-in for analysis and tests: m̂ = f*(τ') exactly,
    /// with f* the true cumulative-best arm.
    Oracle,
    /// Largest reward observed anywhere in the trace so far.
    MaxObserved,
}

/// Horizon-doubling wrapper. Guesses T' = 4k, 8k, 16k, ... and spends each
/// cycle half on round-robin exploration (feeding the estimator) and half
/// on the thresholded round robin with τ' = T'/2 − k and m = m̂/(2·16^α).
/// The final cycle is truncated by the true horizon, explore phase first;
/// traces record nominal versus actual lengths.
pub fn doubling_ptrr_run(
    inst: &Instance,
    alpha: f64,
    estimator: Estimator,
    permutation: &[usize],
) -> Result<EpisodeTrace> {
    check_alpha(alpha)?;
    check_permutation(permutation, inst.k())?;
    let t = inst.horizon();
    let k = inst.k();
    if t <= 4 * k {
        return Err(Error::Domain(format!(
            "the doubling wrapper needs T > 4k; T={t}, k={k}"
        )));
    }
    let (_, star) = opt_cumulative(inst);
    let star_curve = inst.arm(star);
    let denom = 2.0
        * if alpha == 1.0 {
            16.0
        } else {
            16f64.powf(alpha)
        };

    let mut run = Runner::new(inst);
    let mut visits = Vec::new();
    let mut cycles = Vec::new();
    let mut guess = 4 * k;
    while run.time() < t {
        let explore_nominal = guess / 2;
        let exploit_nominal = guess - explore_nominal;
        let explore_actual = explore_nominal.min(t - run.time());
        round_robin_stage(&mut run, permutation, explore_actual);

        let tau_exploit = guess / 2 - k;
        let m_hat = match estimator {
            Estimator::Oracle => star_curve.value(tau_exploit),
            Estimator::MaxObserved => run.pulls.iter().map(|p| p.reward).fold(0.0, f64::max),
        };
        let m_exploit = m_hat / denom;

        let exploit_actual = exploit_nominal.min(t - run.time());
        let before = run.total_reward;
        let stage_visits = ptrr_stage(
            &mut run,
            permutation,
            alpha,
            m_exploit,
            tau_exploit,
            exploit_actual,
        );
        visits.extend(stage_visits);
        cycles.push(Cycle {
            horizon_guess: guess,
            explore_nominal,
            explore_actual,
            exploit_nominal,
            exploit_actual,
            m_hat,
            m_exploit,
            tau_exploit,
            exploit_reward: run.total_reward - before,
            completed: explore_actual == explore_nominal && exploit_actual == exploit_nominal,
        });
        guess *= 2;
    }
    let chosen = run.leader();
    Ok(run.finish("doubling_ptrr", chosen, None, None, visits, cycles))
}

// ---------------------------------------------------------------------------
