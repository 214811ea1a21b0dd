use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ts_bandit::belief::DiscreteBelief;
use ts_bandit::environment::{run_episode, ContextAdversary};
use ts_bandit::harness::instances::random_tabular;
use ts_bandit::harness::runner::run_experiment_with_workers;
use ts_bandit::harness::ExperimentConfig;

fn config(n: usize, nx: usize, k: usize, horizon: usize, runs: usize, seed: u64) -> ExperimentConfig {
    let text = format!(
        r#"{{
  "model": {{ "kind": "tabular_bernoulli", "random": {{ "n_atoms": {n}, "n_contexts": {nx}, "n_actions": {k}, "seed": {seed} }} }},
  "adversary": {{ "kind": "round_robin" }},
  "horizon": {horizon},
  "runs": {runs},
  "master_seed": {seed},
  "diagnostics": true
}}"#
    );
    ExperimentConfig::from_str_at(&text, "generated").unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn reports_do_not_depend_on_workers(
        n in 1usize..12, nx in 1usize..4, k in 1usize..5, horizon in 1usize..15, runs in 1usize..8, seed in any::<u64>()
    ) {
        let cfg = config(n, nx, k, horizon, runs, seed);
        let one = run_experiment_with_workers(&cfg, 1).unwrap();
        let four = run_experiment_with_workers(&cfg, 4).unwrap();
        prop_assert_eq!(&one.report, &four.report);
        prop_assert_eq!(&one.runs, &four.runs);
        prop_assert!(one.report.all_passed(), "{:?}", one.report.checks);
    }

    #[test]
    fn cumulative_regret_is_nondecreasing(seed in any::<u64>(), horizon in 1usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (grid, model) = random_tabular(&mut rng, 10, 3, 4).unwrap();
        let rec = run_episode(grid, Arc::new(model), &ContextAdversary::IidUniform, horizon, seed, false).unwrap();
        prop_assert_eq!(rec.rounds.len(), horizon);
        let mut prev = 0.0;
        for r in &rec.rounds {
            prop_assert!(r.instant_regret >= 0.0);
            prop_assert!((r.cum_regret - prev - r.instant_regret).abs() < 1e-12);
            prev = r.cum_regret;
        }
    }

    #[test]
    fn posterior_after_episode_matches_replay(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (grid, model) = random_tabular(&mut rng, 12, 2, 3).unwrap();
        let model = Arc::new(model);
        let sim = ts_bandit::environment::Simulator::new(grid.clone(), model.clone()).unwrap();
        let ep = sim.run_episode(&ContextAdversary::RoundRobin, 30, seed, false).unwrap();
        let mut replay = DiscreteBelief::new(grid);
        for (x, a, loss) in ep.record.trajectory() {
            replay.update(&model, x, a, loss).unwrap();
        }
        for (p, q) in replay.weights().iter().zip(ep.belief.weights()) {
            prop_assert!((p - q).abs() < 1e-12);
        }
    }
}
