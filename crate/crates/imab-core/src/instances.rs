//! Bandit instances: k arms sharing one horizon T, plus the constructions the
//! evaluation suites lean on.
//!
//! Two notions of "best arm" coexist and are both reported:
//! - highest final value f_i(T) (the target of best-arm identification), and
//! - highest cumulative reward sum_t f_i(t) (the benchmark OPT_T divides by).
//!
//! The gap report carries the commit-budget arithmetic for the envelope
//! hybrids. For arm i after n pulls the terminal envelope's residual
//! uncertainty is Delta_i(n) = (T-n) * (f_i(n) - f_i(n-1)); the budget
//! h_i(eps) is the first n in 2..=T with Delta_i(n) <= eps, or "never". The
//! gap-certified-commit condition GCC(B) holds when the relevant final-value
//! gap is positive and sum_i h_i(gap/3) <= B. The cumulative variant replaces
//! the envelope width with (T-n)(T-n+1)/2 * gamma and the gap with the
//! cumulative one. Both variants are always computed; callers pick the one
//! matching the hybrid they run.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::curves::RewardCurve;
use crate::error::Error;
use crate::shuffle::SplitMix64;
use crate::Result;

/// k reward curves over a common horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    k: usize,
    #[serde(rename = "T")]
    horizon: usize,
    label: String,
    arms: Vec<RewardCurve>,
}

impl Instance {
    /// Arms must share one horizon and there must be at least two of them.
    pub fn new(label: impl Into<String>, arms: Vec<RewardCurve>) -> Result<Self> {
        if arms.len() < 2 {
            return Err(Error::InvalidParam(format!(
                "an instance needs at least 2 arms, got {}",
                arms.len()
            )));
        }
        let horizon = arms[0].horizon();
        for (i, arm) in arms.iter().enumerate() {
            if arm.horizon() != horizon {
                return Err(Error::Schema(format!(
                    "arm {i} has horizon {} but arm 0 has {horizon}",
                    arm.horizon()
                )));
            }
        }
        Ok(Self {
            k: arms.len(),
            horizon,
            label: label.into(),
            arms,
        })
    }

    /// Re-check the redundant fields after deserialization.
    pub fn check_shape(&self) -> Result<()> {
        if self.k != self.arms.len() {
            return Err(Error::Schema(format!(
                "k={} does not match {} arms",
                self.k,
                self.arms.len()
            )));
        }
        if self.arms.len() < 2 {
            return Err(Error::Schema("an instance needs at least 2 arms".into()));
        }
        for (i, arm) in self.arms.iter().enumerate() {
            if arm.horizon() != self.horizon {
                return Err(Error::Schema(format!(
                    "arm {i} has horizon {} but the instance says T={}",
                    arm.horizon(),
                    self.horizon
                )));
            }
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn arms(&self) -> &[RewardCurve] {
        &self.arms
    }

    pub fn arm(&self, i: usize) -> &RewardCurve {
        &self.arms[i]
    }

    /// Validate every arm; returns the per-arm checks.
    pub fn validate(&self) -> Vec<crate::curves::CurveCheck> {
        self.arms.iter().map(|a| a.validate()).collect()
    }

    /// Curvature index of the instance: the largest per-arm minimal envelope
    /// exponent, so every arm satisfies the lower-envelope property at this
    /// value (and none strictly below it).
    pub fn cee(&self) -> f64 {
        self.arms
            .iter()
            .map(|a| a.min_envelope_exponent())
            .fold(0.0, f64::max)
    }

    /// Arm with the highest final value f_i(T), lowest index on ties.
    pub fn best_final_arm(&self) -> usize {
        argmax(self.arms.iter().map(|a| a.value(self.horizon)))
    }

    /// Highest final value across arms.
    pub fn best_final_value(&self) -> f64 {
        self.arms
            .iter()
            .map(|a| a.value(self.horizon))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Cumulative reward of arm i if pulled all T times.
    pub fn cumulative(&self, i: usize) -> f64 {
        (1..=self.horizon).map(|t| self.arms[i].value(t)).sum()
    }
}

/// Lowest-index argmax over an iterator of f64 (strict improvement moves the
/// winner, ties keep the earlier index).
pub(crate) fn argmax(it: impl Iterator<Item = f64>) -> usize {
    let mut best = f64::NEG_INFINITY;
    let mut idx = 0;
    for (i, v) in it.enumerate() {
        if v > best {
            best = v;
            idx = i;
        }
    }
    idx
}

/// Benchmark value OPT_T = max_i sum_{t=1..T} f_i(t) and its arm,
/// lowest index on ties.
pub fn opt_cumulative(inst: &Instance) -> (f64, usize) {
    let mut best = f64::NEG_INFINITY;
    let mut idx = 0;
    for i in 0..inst.k() {
        let c = inst.cumulative(i);
        if c > best {
            best = c;
            idx = i;
        }
    }
    (best, idx)
}

/// One good arm m*(t/T)^beta among k-1 decoys that match it up to pull s and
/// stay flat afterwards. Until some arm is pulled more than s times, every
/// arm looks identical.
pub fn make_hard_family(
    k: usize,
    horizon: usize,
    m: f64,
    beta: f64,
    s: usize,
    good_index: usize,
) -> Result<Instance> {
    if k < 2 {
        return Err(Error::InvalidParam(format!("k must be >= 2, got {k}")));
    }
    if good_index >= k {
        return Err(Error::InvalidParam(format!(
            "good_index {good_index} out of range for k={k}"
        )));
    }
    let mut arms = Vec::with_capacity(k);
    for i in 0..k {
        if i == good_index {
            arms.push(RewardCurve::power(m, beta, horizon)?);
        } else {
            arms.push(RewardCurve::power_flat(m, beta, s, horizon)?);
        }
    }
    Instance::new(
        format!("hard_k{k}_T{horizon}_beta{beta}_s{s}_good{good_index}"),
        arms,
    )
}

/// Which of the four motivating constructions to build. The best arm sits at
/// index 0 in all of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExampleKind {
    /// Constant 1 against arms that climb to 1/2 and stop.
    Ex1,
    /// Linear t/T against arms capped at 1/k.
    Ex2,
    /// Constant 1 against fully linear arms.
    Ex3,
    /// Linear t/T against arms capped at 1/sqrt(k).
    Ex4,
}

pub fn make_example(which: ExampleKind, k: usize, horizon: usize) -> Result<Instance> {
    if k < 2 {
        return Err(Error::InvalidParam(format!("k must be >= 2, got {k}")));
    }
    let mut arms = Vec::with_capacity(k);
    let (label, best, other): (&str, RewardCurve, RewardCurve) = match which {
        ExampleKind::Ex1 => (
            "ex1",
            RewardCurve::constant(1.0, horizon)?,
            RewardCurve::linear_cap(0.5, horizon)?,
        ),
        ExampleKind::Ex2 => (
            "ex2",
            RewardCurve::power(1.0, 1.0, horizon)?,
            RewardCurve::linear_cap(1.0 / k as f64, horizon)?,
        ),
        ExampleKind::Ex3 => (
            "ex3",
            RewardCurve::constant(1.0, horizon)?,
            RewardCurve::power(1.0, 1.0, horizon)?,
        ),
        ExampleKind::Ex4 => (
            "ex4",
            RewardCurve::power(1.0, 1.0, horizon)?,
            RewardCurve::linear_cap(1.0 / (k as f64).sqrt(), horizon)?,
        ),
    };
    arms.push(best);
    for _ in 1..k {
        arms.push(other.clone());
    }
    Instance::new(format!("{label}_k{k}_T{horizon}"), arms)
}

// --- gap report -------------------------------------------------------------

/// Pull budget after which an arm's envelope is tight enough, or `Never` if
/// no pull count in 2..=T achieves it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    Pulls(usize),
    Never,
}

/// Final-value and cumulative gaps with the per-arm commit budgets at a third
/// of each gap, and the commit condition evaluated at the queried budgets.
#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    /// argmax_i f_i(T), lowest index on ties.
    pub best_arm: usize,
    /// argmax_i sum_t f_i(t), lowest index on ties.
    pub best_arm_cumulative: usize,
    /// f at T of the best arm minus the runner-up's.
    pub delta_terminal: f64,
    /// Best cumulative total minus the runner-up's.
    pub delta_cumulative: f64,
    /// Terminal-envelope budgets h_i(delta_terminal / 3).
    pub budgets: Vec<Budget>,
    /// Sum of the terminal budgets; None when any arm never gets there.
    pub budget_sum: Option<usize>,
    /// Cumulative-envelope budgets h_i(delta_cumulative / 3).
    pub budgets_cumulative: Vec<Budget>,
    pub budget_sum_cumulative: Option<usize>,
    /// Terminal commit condition at each queried stage budget B.
    pub gcc_holds_at: BTreeMap<usize, bool>,
    /// Cumulative commit condition at each queried B.
    pub gcc_cumulative_at: BTreeMap<usize, bool>,
}

fn runner_up_gap(values: &[f64], best: usize) -> f64 {
    let second = values
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != best)
        .map(|(_, v)| *v)
        .fold(f64::NEG_INFINITY, f64::max);
    values[best] - second
}

/// Pulls needed before an arm's residual envelope width drops to `eps`: the
/// first n in 2..=T with (T-n)·γ(n-1) <= eps, or in the cumulative variant
/// (T-n)(T-n+1)/2·γ(n-1) <= eps, where γ(n-1) = f(n) - f(n-1). Concavity
/// makes the width nonincreasing in n, so this is also monotone in eps.
pub fn commit_budget(arm: &RewardCurve, eps: f64, cumulative: bool) -> Budget {
    let t = arm.horizon();
    for n in 2..=t {
        let gamma = arm.value(n) - arm.value(n - 1);
        let rem = (t - n) as f64;
        let width = if cumulative {
            rem * (rem + 1.0) / 2.0 * gamma
        } else {
            rem * gamma
        };
        if width <= eps {
            return Budget::Pulls(n);
        }
    }
    Budget::Never
}

fn sum_budgets(budgets: &[Budget]) -> Option<usize> {
    let mut sum = 0usize;
    for b in budgets {
        match b {
            Budget::Pulls(n) => sum += n,
            Budget::Never => return None,
        }
    }
    Some(sum)
}

pub fn gap_report(inst: &Instance, b_queries: &[usize]) -> GapReport {
    let t = inst.horizon();
    let finals: Vec<f64> = inst.arms().iter().map(|a| a.value(t)).collect();
    let cumuls: Vec<f64> = (0..inst.k()).map(|i| inst.cumulative(i)).collect();
    let best_arm = argmax(finals.iter().copied());
    let best_arm_cumulative = argmax(cumuls.iter().copied());
    let delta_terminal = runner_up_gap(&finals, best_arm);
    let delta_cumulative = runner_up_gap(&cumuls, best_arm_cumulative);

    let budgets: Vec<Budget> = inst
        .arms()
        .iter()
        .map(|arm| commit_budget(arm, delta_terminal / 3.0, false))
        .collect();
    let budgets_cumulative: Vec<Budget> = inst
        .arms()
        .iter()
        .map(|arm| commit_budget(arm, delta_cumulative / 3.0, true))
        .collect();
    let budget_sum = sum_budgets(&budgets);
    let budget_sum_cumulative = sum_budgets(&budgets_cumulative);

    let gcc = |gap: f64, sum: Option<usize>, b: usize| -> bool {
        gap > 0.0 && sum.is_some_and(|s| s <= b)
    };
    let gcc_holds_at = b_queries
        .iter()
        .map(|&b| (b, gcc(delta_terminal, budget_sum, b)))
        .collect();
    let gcc_cumulative_at = b_queries
        .iter()
        .map(|&b| (b, gcc(delta_cumulative, budget_sum_cumulative, b)))
        .collect();

    GapReport {
        best_arm,
        best_arm_cumulative,
        delta_terminal,
        delta_cumulative,
        budgets,
        budget_sum,
        budgets_cumulative,
        budget_sum_cumulative,
        gcc_holds_at,
        gcc_cumulative_at,
    }
}

// --- corpora ----------------------------------------------------------------

/// A distribution over instances: either an explicit weighted list or a
/// seeded generator with finite support.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Corpus {
    Entries { entries: Vec<WeightedInstance> },
    Generated { generator: GeneratorSpec, seed: u64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightedInstance {
    pub weight: f64,
    pub instance: Instance,
}

/// Generator families for procedurally-described corpora.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum GeneratorSpec {
    /// The hard family with the good arm's position uniform over 0..k.
    HardUniformGood {
        k: usize,
        #[serde(rename = "T")]
        horizon: usize,
        m: f64,
        beta: f64,
        s: usize,
    },
}

impl Corpus {
    pub fn from_entries(entries: Vec<WeightedInstance>) -> Result<Self> {
        let c = Corpus::Entries { entries };
        c.check()?;
        Ok(c)
    }

    /// Weights must sum to one within 1e-9; every instance must be shaped
    /// correctly.
    pub fn check(&self) -> Result<()> {
        match self {
            Corpus::Entries { entries } => {
                if entries.is_empty() {
                    return Err(Error::Schema("corpus has no entries".into()));
                }
                let mut total = 0.0;
                for e in entries {
                    if !(e.weight > 0.0 && e.weight.is_finite()) {
                        return Err(Error::Schema(format!(
                            "corpus weight must be positive, got {}",
                            e.weight
                        )));
                    }
                    e.instance.check_shape()?;
                    total += e.weight;
                }
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::Schema(format!(
                        "corpus weights sum to {total}, expected 1"
                    )));
                }
                Ok(())
            }
            Corpus::Generated { generator, .. } => {
                // Constructing the support validates the parameters.
                generator.support().map(|_| ())
            }
        }
    }

    /// The full weighted support. Every corpus in this crate is finite, so
    /// exact expectations over the corpus are always available.
    pub fn support(&self) -> Result<Vec<WeightedInstance>> {
        match self {
            Corpus::Entries { entries } => Ok(entries.clone()),
            Corpus::Generated { generator, .. } => generator.support(),
        }
    }

    /// Draw one instance: pick a support entry by weight using the stream.
    pub fn sample(&self, rng: &mut SplitMix64) -> Result<Instance> {
        let support = self.support()?;
        let u = rng.next_f64();
        let mut acc = 0.0;
        for e in &support {
            acc += e.weight;
            if u < acc {
                return Ok(e.instance.clone());
            }
        }
        Ok(support
            .last()
            .expect("support checked nonempty")
            .instance
            .clone())
    }
}

impl GeneratorSpec {
    pub fn support(&self) -> Result<Vec<WeightedInstance>> {
        match *self {
            GeneratorSpec::HardUniformGood {
                k,
                horizon,
                m,
                beta,
                s,
            } => {
                let w = 1.0 / k as f64;
                (0..k)
                    .map(|g| {
                        Ok(WeightedInstance {
                            weight: w,
                            instance: make_hard_family(k, horizon, m, beta, s, g)?,
                        })
                    })
                    .collect()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_linear_arm_cumulative_is_arithmetic_series() {
        let arms = vec![
            RewardCurve::power(1.0, 1.0, 100).unwrap(),
            RewardCurve::constant(0.0, 100).unwrap(),
        ];
        let inst = Instance::new("lin", arms).unwrap();
        let (opt, idx) = opt_cumulative(&inst);
        assert_eq!(idx, 0);
        assert!((opt - 50.5).abs() < 1e-12);
    }

    #[test]
    fn hard_family_decoys_freeze() {
        let inst = make_hard_family(4, 64, 1.0, 0.5, 16, 2).unwrap();
        assert_eq!(inst.arm(3).value(32), inst.arm(3).value(16));
        assert!((inst.arm(3).value(32) - 0.5).abs() < 1e-15);
        assert!(inst.arm(2).value(32) > 0.7);
        // OPT_T >= m*T/(beta+1) for the pure power benchmark.
        let lin = make_hard_family(2, 100, 1.0, 1.0, 10, 0).unwrap();
        let (opt, _) = opt_cumulative(&lin);
        assert!((opt - 50.5).abs() < 1e-12);
        assert!(opt >= 100.0 / 2.0);
    }

    #[test]
    fn hard_family_curvature_index_is_beta() {
        for beta in [0.25, 0.5, 0.75, 1.0] {
            let inst = make_hard_family(5, 80, 1.3, beta, 20, 1).unwrap();
            assert!((inst.cee() - beta).abs() < 1e-12, "beta={beta}");
            for arm in inst.arms() {
                assert!(arm.satisfies_le(beta).unwrap());
            }
        }
    }

    #[test]
    fn examples_have_best_arm_zero() {
        for which in [
            ExampleKind::Ex1,
            ExampleKind::Ex2,
            ExampleKind::Ex3,
            ExampleKind::Ex4,
        ] {
            let inst = make_example(which, 4, 40).unwrap();
            assert_eq!(inst.k(), 4);
            assert_eq!(inst.best_final_arm(), 0, "{which:?}");
            assert_eq!(inst.arm(0).value(40), 1.0);
        }
        let ex2 = make_example(ExampleKind::Ex2, 4, 40).unwrap();
        assert!((ex2.arm(1).value(40) - 0.25).abs() < 1e-15);
        let ex4 = make_example(ExampleKind::Ex4, 4, 40).unwrap();
        assert!((ex4.arm(1).value(40) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn constant_arms_gap_report() {
        let arms = vec![
            RewardCurve::constant(1.0, 20).unwrap(),
            RewardCurve::constant(0.5, 20).unwrap(),
            RewardCurve::constant(0.5, 20).unwrap(),
        ];
        let inst = Instance::new("three_constants", arms).unwrap();
        let report = gap_report(&inst, &[5, 6, 10]);
        assert_eq!(report.best_arm, 0);
        assert!((report.delta_terminal - 0.5).abs() < 1e-12);
        assert_eq!(report.budgets, vec![Budget::Pulls(2); 3]);
        assert_eq!(report.budget_sum, Some(6));
        assert!(!report.gcc_holds_at[&5]);
        assert!(report.gcc_holds_at[&6]);
        assert!(report.gcc_holds_at[&10]);
    }

    #[test]
    fn zero_gap_never_certifies() {
        let arms = vec![
            RewardCurve::constant(1.0, 10).unwrap(),
            RewardCurve::constant(1.0, 10).unwrap(),
        ];
        let inst = Instance::new("twins", arms).unwrap();
        let report = gap_report(&inst, &[10]);
        assert_eq!(report.delta_terminal, 0.0);
        assert!(!report.gcc_holds_at[&10]);
    }

    #[test]
    fn linear_best_arm_needs_late_pulls() {
        // In the second example the best arm's envelope stays wide until
        // n >= T(1 - (1 - 1/k)/3), which exceeds T/2 for every k >= 2.
        let inst = make_example(ExampleKind::Ex2, 4, 40).unwrap();
        let report = gap_report(&inst, &[20]);
        assert_eq!(report.best_arm, 0);
        assert!((report.delta_terminal - 0.75).abs() < 1e-12);
        match report.budgets[0] {
            Budget::Pulls(n) => assert!(n > 20, "n={n}"),
            Budget::Never => panic!("best arm budget should be reachable"),
        }
        assert!(!report.gcc_holds_at[&20]);
    }

    #[test]
    fn corpus_weights_are_checked() {
        let inst = make_example(ExampleKind::Ex3, 2, 10).unwrap();
        let bad = Corpus::Entries {
            entries: vec![WeightedInstance {
                weight: 0.6,
                instance: inst.clone(),
            }],
        };
        assert!(bad.check().is_err());
        let good = Corpus::from_entries(vec![
            WeightedInstance {
                weight: 0.5,
                instance: inst.clone(),
            },
            WeightedInstance {
                weight: 0.5,
                instance: inst,
            },
        ])
        .unwrap();
        assert_eq!(good.support().unwrap().len(), 2);
    }

    #[test]
    fn generated_corpus_support_is_uniform() {
        let corpus = Corpus::Generated {
            generator: GeneratorSpec::HardUniformGood {
                k: 4,
                horizon: 32,
                m: 1.0,
                beta: 0.5,
                s: 8,
            },
            seed: 0,
        };
        let support = corpus.support().unwrap();
        assert_eq!(support.len(), 4);
        for (g, e) in support.iter().enumerate() {
            assert!((e.weight - 0.25).abs() < 1e-15);
            assert_eq!(e.instance.best_final_arm(), g);
        }
        let mut rng = SplitMix64::new(3);
        let drawn = corpus.sample(&mut rng).unwrap();
        assert_eq!(drawn.k(), 4);
    }
}
