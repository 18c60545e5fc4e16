//! Extended value iteration against policy enumeration.

mod common;

use rand::Rng as _;
use uccrl::discretize::{AggEstimates, GridSpec};
use uccrl::envs::EnvState;
use uccrl::eval::{brute_force_gain, solve_poisson};
use uccrl::optimism::{extended_value_iteration, extract_continuous_policy, PlausibleSet};
use uccrl::seeded_rng;

#[test]
fn zero_radii_gain_matches_enumeration() {
    let mut rng = seeded_rng(31);
    for _ in 0..100 {
        let states = rng.gen_range(1..=4);
        let actions = rng.gen_range(1..=3);
        let mdp = common::random_mdp(&mut rng, states, actions);
        let plan =
            extended_value_iteration(&PlausibleSet::exact(AggEstimates::from_mdp(&mdp)), 1e-10, 1_000_000).unwrap();
        let (best, _) = brute_force_gain(&mdp).unwrap();
        assert!(
            (plan.optimistic_gain - best).abs() <= 1e-6,
            "{} vs {best}",
            plan.optimistic_gain
        );
        // The returned policy is itself (near) optimal.
        let own = solve_poisson(&mdp, &plan.policy).unwrap().gain;
        assert!(own >= best - 1e-6);
        assert_eq!(plan.policy.len(), states);
        assert!(plan.policy.iter().all(|&a| a < actions));
    }
}

#[test]
fn positive_radii_never_lower_the_gain() {
    let mut rng = seeded_rng(32);
    for _ in 0..100 {
        let states = rng.gen_range(1..=4);
        let actions = rng.gen_range(1..=3);
        let mdp = common::random_mdp(&mut rng, states, actions);
        let est = AggEstimates::from_mdp(&mdp);
        let base = extended_value_iteration(&PlausibleSet::exact(est.clone()), 1e-9, 1_000_000).unwrap();
        let pairs = states * actions;
        let rr: Vec<f64> = (0..pairs).map(|_| rng.gen_range(0.0..0.3)).collect();
        let tr: Vec<f64> = (0..pairs).map(|_| rng.gen_range(0.0..1.0)).collect();
        let ps = PlausibleSet::with_radii(est, rr, tr).unwrap();
        let opt = extended_value_iteration(&ps, 1e-9, 1_000_000).unwrap();
        assert!(opt.optimistic_gain >= base.optimistic_gain - 2e-9);
        assert!(opt.optimistic_gain >= 0.0 && opt.optimistic_gain <= 1.0 + ps.max_reward_radius() + 1e-9);
    }
}

#[test]
fn extension_composes_policy_with_cell_index() {
    let mut rng = seeded_rng(33);
    for d in 1..=2 {
        let grid = GridSpec::new(3, d).unwrap();
        let mdp = common::random_mdp(&mut rng, grid.num_cells(), 3);
        let plan =
            extended_value_iteration(&PlausibleSet::exact(AggEstimates::from_mdp(&mdp)), 1e-8, 1_000_000).unwrap();
        let policy = extract_continuous_policy(&plan, &grid).unwrap();
        for _ in 0..1000 {
            let s = EnvState::uniform(d, &mut rng);
            assert_eq!(policy.action(&s), plan.policy[grid.cell_index(&s)]);
        }
    }
    // Boundary state belongs to the lower cell.
    let grid = GridSpec::new(2, 1).unwrap();
    let mdp = uccrl::FiniteMdp::new(2, 2, vec![1.0, 0.0, 0.0, 1.0], vec![0.5; 8]).unwrap();
    let plan = extended_value_iteration(&PlausibleSet::exact(AggEstimates::from_mdp(&mdp)), 1e-10, 1000).unwrap();
    let policy = extract_continuous_policy(&plan, &grid).unwrap();
    assert_eq!(plan.policy, vec![0, 1]);
    assert_eq!(policy.action(&EnvState::scalar(0.1).unwrap()), 0);
    assert_eq!(policy.action(&EnvState::scalar(0.5).unwrap()), 0);
    assert_eq!(policy.action(&EnvState::scalar(0.5000001).unwrap()), 1);
}
