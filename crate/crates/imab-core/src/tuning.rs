//! Hyperparameter selection: piecewise-constant loss profiles over the
//! threshold exponent α, and empirical risk minimization across sampled
//! instances.
//!
//! For a fixed instance, permutation, and threshold scale, an episode's
//! trace depends on α only through the keep-test outcomes, and each
//! outcome flips at most once as α grows. The loss over α ∈ (0, 1] is
//! therefore a step function with few pieces. The profile builder finds the
//! exact flip points *of the floating-point predicate* by bisection over
//! adjacent doubles, so a profile lookup returns bit-for-bit the loss a
//! direct run at that α would produce. α = 1 is carried as its own stored
//! value: the keep-test computes its threshold differently there (see
//! [`keep_test`](crate::algorithms::keep_test)) and several worked
//! instances differ at 1 exactly.

use serde::Serialize;

use crate::algorithms::{
    check_permutation, hybrid_stage1_probe, keep_test, stage2_params, standard_m,
};
use crate::engine::{run_loss, AlgorithmSpec, LossSpec};
use crate::error::Error;
use crate::instances::Instance;
use crate::Result;

fn next_up(x: f64) -> f64 {
    debug_assert!(x >= 0.0 && x.is_finite());
    f64::from_bits(x.to_bits() + 1)
}

fn prev_down(x: f64) -> f64 {
    debug_assert!(x > 0.0 && x.is_finite());
    f64::from_bits(x.to_bits() - 1)
}

// ---------------------------------------------------------------------------
// Profiles
// ---------------------------------------------------------------------------

/// Piecewise-constant view of α ↦ loss on (0, 1]. `breakpoints` are strictly
/// inside (0, 1), ascending; `piece_values[i]` is the loss on the open
/// interval between breakpoints i−1 and i (with 0 and 1 as outer fences);
/// `breakpoint_values[i]` is the loss at exactly `breakpoints[i]`; and
/// `right_value` is the loss at exactly α = 1. Adjacent pieces with equal
/// values on both sides of an equal-valued breakpoint are merged, so
/// `piece_count` counts the maximal regions on which the loss is constant
/// (an unmerged breakpoint or the right endpoint can each form a region of
/// its own).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualProfile {
    pub breakpoints: Vec<f64>,
    pub piece_values: Vec<f64>,
    pub breakpoint_values: Vec<f64>,
    pub right_value: f64,
    pub piece_count: usize,
}

impl DualProfile {
    /// Loss at α, bit-identical to a direct episode run at α.
    pub fn value_at(&self, alpha: f64) -> f64 {
        if alpha == 1.0 {
            return self.right_value;
        }
        match self.breakpoints.binary_search_by(|b| b.total_cmp(&alpha)) {
            Ok(i) => self.breakpoint_values[i],
            Err(i) => self.piece_values[i],
        }
    }
}

/// Per-exploration-budget profiles of the two-stage algorithm: `per_b[b]`
/// is the α profile at that budget, b ∈ 0..=T.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HybridDualProfile {
    pub per_b: Vec<DualProfile>,
    /// Sum of the per-budget piece counts.
    pub piece_count: usize,
}

/// Outcome of one keep-test comparison over an open α interval.
enum TestOutcome {
    Pass,
    Fail,
    /// The predicate flips inside the interval; the payload is the lowest
    /// double at which the flipped outcome holds.
    Split(f64),
}

/// Classify `f_value >= m·(s/τ)^α` over the doubles strictly inside
/// (lo, hi). The threshold is monotone in α, so the outcome is constant or
/// flips once, and bisection over bit-adjacent doubles pins the flip
/// exactly. Callers never pass intervals without interior doubles.
fn classify(f_value: f64, s: usize, m: f64, tau: usize, lo: f64, hi: f64) -> TestOutcome {
    if s == 0 {
        return TestOutcome::Pass;
    }
    let a = next_up(lo);
    let b = prev_down(hi);
    debug_assert!(a <= b);
    let oa = keep_test(f_value, s, m, tau, a);
    if oa == keep_test(f_value, s, m, tau, b) {
        return if oa {
            TestOutcome::Pass
        } else {
            TestOutcome::Fail
        };
    }
    let (mut x, mut y) = (a, b);
    while y.to_bits() - x.to_bits() > 1 {
        let mid = f64::from_bits((x.to_bits() + y.to_bits()) / 2);
        if keep_test(f_value, s, m, tau, mid) == oa {
            x = mid;
        } else {
            y = mid;
        }
    }
    TestOutcome::Split(y)
}

/// Walk the thresholded round robin's control flow symbolically over
/// (lo, hi): counts only, no rewards. Returns the first α at which some
/// keep-test outcome flips inside the interval, or None when the whole
/// trace is constant on it. Mirrors the runtime stage exactly, except that
/// tests evaluated with an exhausted budget are skipped: their outcome
/// cannot change which pulls happen.
#[allow(clippy::too_many_arguments)]
fn stage_split(
    inst: &Instance,
    order: &[usize],
    shift: &[usize],
    m: f64,
    tau: usize,
    budget: usize,
    lo: f64,
    hi: f64,
) -> Option<f64> {
    let mut counts = shift.to_vec();
    let mut left = budget;
    for &arm in order {
        if left == 0 {
            break;
        }
        loop {
            if left == 0 {
                break;
            }
            let s = counts[arm] - shift[arm];
            let value = inst.arm(arm).value(counts[arm]);
            match classify(value, s, m, tau, lo, hi) {
                TestOutcome::Split(c) => return Some(c),
                TestOutcome::Fail => break,
                TestOutcome::Pass => {
                    counts[arm] += 1;
                    left -= 1;
                }
            }
        }
    }
    // The fill phase runs no tests.
    None
}

/// Assemble a profile from a splitter and a ground-truth loss evaluator.
/// Every stored value comes from `loss_at`, i.e. from real episode runs.
fn build_profile(
    split: impl Fn(f64, f64) -> Option<f64>,
    loss_at: impl Fn(f64) -> Result<f64>,
) -> Result<DualProfile> {
    let mut stack = vec![(0.0f64, 1.0f64)];
    let mut leaves: Vec<(f64, f64)> = Vec::new();
    let mut bps: Vec<f64> = Vec::new();
    while let Some((lo, hi)) = stack.pop() {
        // Intervals without interior doubles hold no representable α; they
        // stay as (unreachable) pieces to keep the piece/breakpoint
        // alternation intact.
        if next_up(lo) >= hi {
            leaves.push((lo, hi));
            continue;
        }
        match split(lo, hi) {
            Some(c) => {
                bps.push(c);
                stack.push((lo, c));
                stack.push((c, hi));
            }
            None => leaves.push((lo, hi)),
        }
    }
    bps.sort_by(f64::total_cmp);
    leaves.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut breakpoint_values = Vec::with_capacity(bps.len());
    for &c in &bps {
        breakpoint_values.push(loss_at(c)?);
    }
    let mut piece_values = Vec::with_capacity(leaves.len());
    for (i, &(lo, hi)) in leaves.iter().enumerate() {
        let a = next_up(lo);
        if a >= hi {
            // Unreachable piece: copy a neighboring breakpoint's value so
            // merging stays honest.
            piece_values.push(breakpoint_values[i.saturating_sub(1).min(bps.len() - 1)]);
            continue;
        }
        let mut mid = lo + 0.5 * (hi - lo);
        if !(mid > lo && mid < hi) {
            mid = a;
        }
        piece_values.push(loss_at(mid)?);
    }
    let right_value = loss_at(1.0)?;

    // Merge breakpoints whose value and both flanking pieces agree.
    let mut m_bps = Vec::new();
    let mut m_bpv = Vec::new();
    let mut m_pieces = vec![piece_values[0]];
    for i in 0..bps.len() {
        let last = *m_pieces.last().unwrap();
        if piece_values[i + 1] == last && breakpoint_values[i] == last {
            continue;
        }
        m_bps.push(bps[i]);
        m_bpv.push(breakpoint_values[i]);
        m_pieces.push(piece_values[i + 1]);
    }
    let spikes = (0..m_bps.len())
        .filter(|&i| m_bpv[i] != m_pieces[i] && m_bpv[i] != m_pieces[i + 1])
        .count();
    let right_extra = usize::from(right_value != *m_pieces.last().unwrap());
    let piece_count = m_pieces.len() + spikes + right_extra;
    Ok(DualProfile {
        breakpoints: m_bps,
        piece_values: m_pieces,
        breakpoint_values: m_bpv,
        right_value,
        piece_count,
    })
}

fn check_scale(name: &str, m: f64) -> Result<()> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::InvalidParam(format!(
            "{name} must be positive and finite, got {m}"
        )));
    }
    Ok(())
}

/// Exact loss profile of the thresholded round robin over α ∈ (0, 1] at
/// fixed scale, clock, and visit order.
pub fn dual_profile_ptrr(
    inst: &Instance,
    permutation: &[usize],
    loss: &LossSpec,
    m_threshold: f64,
    tau: usize,
) -> Result<DualProfile> {
    check_scale("m_threshold", m_threshold)?;
    check_permutation(permutation, inst.k())?;
    if tau == 0 {
        return Err(Error::InvalidParam("tau must be at least 1".into()));
    }
    let t = inst.horizon();
    let shift = vec![0usize; inst.k()];
    build_profile(
        |lo, hi| stage_split(inst, permutation, &shift, m_threshold, tau, t, lo, hi),
        |alpha| {
            let spec = AlgorithmSpec::Ptrr {
                alpha,
                m_threshold: Some(m_threshold),
                tau: Some(tau),
            };
            run_loss(inst, &spec, permutation, loss)
        },
    )
}

/// Per-budget loss profiles of the two-stage (terminal-envelope) algorithm
/// over α ∈ (0, 1], for every exploration budget b ∈ 0..=T. Stage 1 never
/// consults α, so a committed budget yields a single-piece profile; an
/// uncommitted one hands the stage-1 counts to the round-robin walker.
pub fn dual_profile_hybrid(
    inst: &Instance,
    permutation: &[usize],
    loss: &LossSpec,
    m_terminal: f64,
) -> Result<HybridDualProfile> {
    check_scale("m_terminal", m_terminal)?;
    check_permutation(permutation, inst.k())?;
    let t = inst.horizon();
    let mut per_b = Vec::with_capacity(t + 1);
    for b in 0..=t {
        let (counts, commit) = hybrid_stage1_probe(inst, b, false);
        let loss_at = |alpha: f64| {
            let spec = AlgorithmSpec::Hybrid {
                alpha,
                b,
                m_terminal: Some(m_terminal),
            };
            run_loss(inst, &spec, permutation, loss)
        };
        let profile = if commit.is_some() {
            build_profile(|_, _| None, loss_at)?
        } else {
            let (m2, tau2) = stage2_params(t, b, inst.k(), m_terminal);
            build_profile(
                |lo, hi| stage_split(inst, permutation, &counts, m2, tau2, t - b, lo, hi),
                loss_at,
            )?
        };
        per_b.push(profile);
    }
    let piece_count = per_b.iter().map(|p| p.piece_count).sum();
    Ok(HybridDualProfile { per_b, piece_count })
}

// ---------------------------------------------------------------------------
// ERM
// ---------------------------------------------------------------------------

/// Which family the tuner searches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TuneFamily {
    /// α only; scale and clock at their per-instance defaults.
    Ptrr,
    /// (α, B) jointly; the terminal scale at its per-instance default.
    Hybrid,
}

/// Result of an ERM sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuneResult {
    pub alpha_hat: f64,
    #[serde(rename = "B_hat", skip_serializing_if = "Option::is_none")]
    pub b_hat: Option<usize>,
    /// Minimal average loss over the samples.
    pub loss: f64,
    /// Number of candidate points examined.
    pub candidates: usize,
    /// Each sample's loss at the chosen hyperparameters.
    pub per_instance: Vec<f64>,
}

/// Candidate α values that cover every piece of every profile: all
/// breakpoints, a midpoint of every cell of their union, and 1.0.
fn candidate_alphas<'a>(bp_lists: impl Iterator<Item = &'a [f64]>) -> Vec<f64> {
    let mut bps: Vec<f64> = bp_lists.flatten().copied().collect();
    bps.sort_by(f64::total_cmp);
    bps.dedup();
    let mut cands = bps.clone();
    let mut fences = vec![0.0];
    fences.extend_from_slice(&bps);
    fences.push(1.0);
    for w in fences.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let mut mid = lo + 0.5 * (hi - lo);
        if !(mid > lo && mid < hi) {
            if next_up(lo) >= hi {
                continue;
            }
            mid = next_up(lo);
        }
        cands.push(mid);
    }
    cands.push(1.0);
    cands.sort_by(f64::total_cmp);
    cands.dedup();
    cands
}

/// Empirical risk minimization over sampled (instance, visit order) pairs.
/// The average loss is piecewise constant in the hyperparameters, so
/// scanning the finite candidate set is an exact minimization, not a grid
/// approximation. Ties prefer the smallest α, then the smallest B.
pub fn erm_tune(
    samples: &[(Instance, Vec<usize>)],
    family: TuneFamily,
    loss: &LossSpec,
) -> Result<TuneResult> {
    if samples.is_empty() {
        return Err(Error::InvalidParam(
            "erm_tune needs at least one sample".into(),
        ));
    }
    let n = samples.len() as f64;
    match family {
        TuneFamily::Ptrr => {
            let mut profiles = Vec::with_capacity(samples.len());
            for (inst, perm) in samples {
                let (m, tau) = standard_m(inst)?;
                profiles.push(dual_profile_ptrr(inst, perm, loss, m, tau)?);
            }
            let cands = candidate_alphas(profiles.iter().map(|p| p.breakpoints.as_slice()));
            let mut best: Option<(f64, f64)> = None;
            for &a in &cands {
                let avg = profiles.iter().map(|p| p.value_at(a)).sum::<f64>() / n;
                let better = match best {
                    None => true,
                    Some((bl, ba)) => avg < bl || (avg == bl && a < ba),
                };
                if better {
                    best = Some((avg, a));
                }
            }
            let (loss_hat, alpha_hat) = best.unwrap();
            Ok(TuneResult {
                alpha_hat,
                b_hat: None,
                loss: loss_hat,
                candidates: cands.len(),
                per_instance: profiles.iter().map(|p| p.value_at(alpha_hat)).collect(),
            })
        }
        TuneFamily::Hybrid => {
            let t = samples[0].0.horizon();
            for (inst, _) in samples {
                if inst.horizon() != t {
                    return Err(Error::InvalidParam(format!(
                        "hybrid tuning needs one shared horizon; got {} and {t}",
                        inst.horizon()
                    )));
                }
            }
            let mut profiles = Vec::with_capacity(samples.len());
            for (inst, perm) in samples {
                let m_terminal = inst.best_final_value();
                profiles.push(dual_profile_hybrid(inst, perm, loss, m_terminal)?);
            }
            // One α grid across every budget, so equal-loss budgets tie at
            // the same α and the B tie-break can see them.
            let cands = candidate_alphas(
                profiles
                    .iter()
                    .flat_map(|p| p.per_b.iter().map(|d| d.breakpoints.as_slice())),
            );
            let mut best: Option<(f64, f64, usize)> = None;
            for b in 0..=t {
                for &a in &cands {
                    let avg = profiles.iter().map(|p| p.per_b[b].value_at(a)).sum::<f64>() / n;
                    let better = match best {
                        None => true,
                        Some((bl, ba, bb)) => {
                            avg < bl || (avg == bl && (a < ba || (a == ba && b < bb)))
                        }
                    };
                    if better {
                        best = Some((avg, a, b));
                    }
                }
            }
            let candidates = cands.len() * (t + 1);
            let (loss_hat, alpha_hat, b_hat) = best.unwrap();
            Ok(TuneResult {
                alpha_hat,
                b_hat: Some(b_hat),
                loss: loss_hat,
                candidates,
                per_instance: profiles
                    .iter()
                    .map(|p| p.per_b[b_hat].value_at(alpha_hat))
                    .collect(),
            })
        }
    }
}

/// Episodes needed so that, with probability 1 − δ, every one of Q
/// hyperparameter cells has its empirical average loss within ε of its
/// population mean, for losses bounded by H:
///   n = ⌈c · (H/ε)² · (ln Q + ln(1/δ))⌉, at least 1.
pub fn sample_complexity(h: f64, eps: f64, delta: f64, q_bound: f64, c: f64) -> Result<usize> {
    for (name, v) in [("H", h), ("eps", eps), ("c", c)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "{name} must be positive and finite, got {v}"
            )));
        }
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParam(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    if !(q_bound >= 1.0 && q_bound.is_finite()) {
        return Err(Error::InvalidParam(format!(
            "Q must be >= 1, got {q_bound}"
        )));
    }
    let ratio = h / eps;
    let n = c * ratio * ratio * (q_bound.ln() + (1.0 / delta).ln());
    Ok((n.ceil() as usize).max(1))
}

// ---------------------------------------------------------------------------
