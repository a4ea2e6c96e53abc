//! Randomized invariants over generated instances: shape and accounting
//! facts that every run must satisfy, independent of the bound-level checks
//! in the acceptance suite.

use imab_core::algorithms::{
    cumulative_hybrid_run, hybrid_run, keep_test, ptrr_run, round_robin_run, standard_m,
};
use imab_core::curves::RewardCurve;
use imab_core::engine::{nth_permutation, run_episode_seeded, AlgorithmSpec};
use imab_core::instances::{commit_budget, opt_cumulative, Budget, Instance};
use imab_core::jsonio::canonical_string;
use imab_core::shuffle::SplitMix64;
use proptest::prelude::*;

fn arb_curve(horizon: usize) -> BoxedStrategy<RewardCurve> {
    prop_oneof![
        (0.05f64..2.0, 0.1f64..=1.0)
            .prop_map(move |(m, beta)| RewardCurve::power(m, beta, horizon).unwrap()),
        (0.05f64..2.0, 0.1f64..=1.0, 1..=horizon)
            .prop_map(move |(m, beta, s)| RewardCurve::power_flat(m, beta, s, horizon).unwrap()),
        (0.05f64..2.0).prop_map(move |c| RewardCurve::constant(c, horizon).unwrap()),
        (0.05f64..2.0).prop_map(move |cap| RewardCurve::linear_cap(cap, horizon).unwrap()),
        proptest::collection::vec(0.0f64..1.0, horizon).prop_map(move |mut incs| {
            incs.sort_by(|a, b| b.total_cmp(a));
            let mut acc = 0.0;
            let values = incs
                .iter()
                .map(|d| {
                    acc += d;
                    acc
                })
                .collect();
            RewardCurve::table(values, horizon).unwrap()
        }),
    ]
    .boxed()
}

fn arb_instance() -> impl Strategy<Value = Instance> {
    (2usize..=4, 5usize..=16).prop_flat_map(|(k, t)| {
        proptest::collection::vec(arb_curve(t), k)
            .prop_map(|arms| Instance::new("prop", arms).unwrap())
    })
}

fn check_accounting(inst: &Instance, tr: &imab_core::algorithms::EpisodeTrace, budget: usize) {
    assert_eq!(tr.pulls.len(), budget);
    assert_eq!(tr.arm_pulls.iter().sum::<usize>(), budget);
    let mut counts = vec![0usize; inst.k()];
    let mut total = 0.0;
    for (i, p) in tr.pulls.iter().enumerate() {
        assert_eq!(p.t, i + 1);
        counts[p.arm] += 1;
        assert_eq!(p.arm_pull, counts[p.arm]);
        assert_eq!(p.reward, inst.arm(p.arm).value(p.arm_pull));
        total += p.reward;
    }
    assert_eq!(counts, tr.arm_pulls);
    assert!((total - tr.total_reward).abs() <= 1e-9 * (1.0 + total.abs()));
    assert!(tr.chosen_arm < inst.k());
}

fn terminal_leader(inst: &Instance, counts: &[usize]) -> usize {
    let mut best = 0;
    for i in 1..inst.k() {
        if inst.arm(i).value(counts[i]) > inst.arm(best).value(counts[best]) {
            best = i;
        }
    }
    best
}

proptest! {
    #[test]
    fn constructed_curves_are_valid(inst in arb_instance()) {
        for arm in inst.arms() {
            prop_assert!(arm.validate().is_valid());
            prop_assert_eq!(arm.value(0), 0.0);
            let t = arm.horizon();
            for n in 1..=t {
                prop_assert!(arm.value(n) >= arm.value(n - 1));
            }
            for n in 2..=t {
                let d_prev = arm.value(n - 1) - arm.value(n - 2);
                let d = arm.value(n) - arm.value(n - 1);
                prop_assert!(d <= d_prev + 1e-12);
            }
        }
    }

    #[test]
    fn untouched_arms_always_pass_the_keep_test(
        f_value in 0.0f64..10.0,
        m in 0.01f64..10.0,
        tau in 1usize..100,
        alpha in 0.01f64..=1.0,
    ) {
        prop_assert!(keep_test(f_value, 0, m, tau, alpha));
    }

    #[test]
    fn ptrr_accounts_for_every_pull(
        inst in arb_instance(),
        alpha in 0.01f64..=1.0,
        seed in any::<u64>(),
    ) {
        let (m, tau) = standard_m(&inst).unwrap();
        let perm = SplitMix64::new(seed).permutation(inst.k());
        let t = inst.horizon();
        let tr = ptrr_run(&inst, alpha, m, tau, &perm, t).unwrap();
        check_accounting(&inst, &tr, t);
        prop_assert_eq!(tr.chosen_arm, terminal_leader(&inst, &tr.arm_pulls));
        let visit_pulls: usize = tr.visits.iter().map(|v| v.pulls).sum();
        prop_assert_eq!(visit_pulls, t);
    }

    #[test]
    fn hybrid_uses_the_whole_horizon(
        inst in arb_instance(),
        alpha in 0.01f64..=1.0,
        b_frac in 0.0f64..=1.0,
        seed in any::<u64>(),
        cumulative in any::<bool>(),
    ) {
        let t = inst.horizon();
        let b = (b_frac * t as f64) as usize;
        let perm = SplitMix64::new(seed).permutation(inst.k());
        let scale = inst.best_final_value();
        let tr = if cumulative {
            cumulative_hybrid_run(&inst, alpha, b, scale, &perm).unwrap()
        } else {
            hybrid_run(&inst, alpha, b, scale, &perm).unwrap()
        };
        check_accounting(&inst, &tr, t);
        if let Some(c) = &tr.commit {
            prop_assert!(c.time <= b);
            prop_assert_eq!(tr.chosen_arm, c.arm);
            for p in &tr.pulls[c.time..] {
                prop_assert_eq!(p.arm, c.arm);
            }
        } else {
            prop_assert_eq!(tr.stage2_start, Some(b));
        }
    }

    #[test]
    fn round_robin_spreads_pulls_evenly(inst in arb_instance(), seed in any::<u64>()) {
        let t = inst.horizon();
        let perm = SplitMix64::new(seed).permutation(inst.k());
        let tr = round_robin_run(&inst, &perm, t).unwrap();
        check_accounting(&inst, &tr, t);
        let lo = tr.arm_pulls.iter().min().unwrap();
        let hi = tr.arm_pulls.iter().max().unwrap();
        prop_assert!(hi - lo <= 1);
    }

    #[test]
    fn seeded_runs_are_reproducible(
        inst in arb_instance(),
        alpha in 0.01f64..=1.0,
        seed in any::<u64>(),
    ) {
        let spec = AlgorithmSpec::Ptrr { alpha, m_threshold: None, tau: None };
        let a = run_episode_seeded(&inst, &spec, seed).unwrap();
        let b = run_episode_seeded(&inst, &spec, seed).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn canonical_json_is_idempotent(inst in arb_instance()) {
        let once = canonical_string(&inst).unwrap();
        let back: Instance = serde_json::from_str(&once).unwrap();
        prop_assert_eq!(&back, &inst);
        let twice = canonical_string(&back).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn commit_budget_shrinks_as_eps_grows(
        inst in arb_instance(),
        e1 in 0.001f64..2.0,
        e2 in 0.001f64..2.0,
        cumulative in any::<bool>(),
    ) {
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let as_cost = |b: Budget| match b {
            Budget::Pulls(n) => n as u64,
            Budget::Never => u64::MAX,
        };
        for arm in inst.arms() {
            let tight = as_cost(commit_budget(arm, lo, cumulative));
            let loose = as_cost(commit_budget(arm, hi, cumulative));
            prop_assert!(loose <= tight);
        }
    }

    #[test]
    fn generated_permutations_are_bijections(
        k in 1usize..=6,
        seed in any::<u64>(),
        idx in 0usize..720,
    ) {
        let mut from_rng = SplitMix64::new(seed).permutation(k);
        from_rng.sort_unstable();
        prop_assert_eq!(from_rng, (0..k).collect::<Vec<_>>());

        let fact: usize = (1..=k).product();
        let mut from_index = nth_permutation(k, idx % fact);
        from_index.sort_unstable();
        prop_assert_eq!(from_index, (0..k).collect::<Vec<_>>());
    }

    #[test]
    fn below_stays_in_range(seed in any::<u64>(), n in 1u64..1_000_000) {
        let mut rng = SplitMix64::new(seed);
        for _ in 0..32 {
            prop_assert!(rng.below(n) < n);
        }
    }

    #[test]
    fn opt_cumulative_is_the_best_arm(inst in arb_instance()) {
        let (opt, star) = opt_cumulative(&inst);
        prop_assert_eq!(opt, inst.cumulative(star));
        for i in 0..inst.k() {
            prop_assert!(inst.cumulative(i) <= opt);
        }
    }
}
