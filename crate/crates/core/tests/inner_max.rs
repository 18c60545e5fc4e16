//! Inner maximization over the L1 ball, checked against a grid search and
//! a linear program.

mod common;

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use rand::Rng as _;
use uccrl::optimism::inner_transition_max;
use uccrl::seeded_rng;

fn dot(p: &[f64], u: &[f64]) -> f64 {
    p.iter().zip(u).map(|(a, b)| a * b).sum()
}

fn l1(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum()
}

/// Best objective over distributions whose entries are multiples of
/// `1/units` and lie within `radius` of `p_hat`.
fn grid_max(p_hat: &[f64], radius: f64, u: &[f64], units: usize) -> f64 {
    fn rec(k: usize, left: usize, cur: &mut Vec<f64>, units: usize, eval: &mut dyn FnMut(&[f64])) {
        if k == 1 {
            cur.push(left as f64 / units as f64);
            eval(cur);
            cur.pop();
            return;
        }
        for m in 0..=left {
            cur.push(m as f64 / units as f64);
            rec(k - 1, left - m, cur, units, eval);
            cur.pop();
        }
    }
    let mut best = f64::NEG_INFINITY;
    rec(p_hat.len(), units, &mut Vec::new(), units, &mut |p| {
        if l1(p, p_hat) <= radius.min(2.0) + 1e-9 {
            best = best.max(dot(p, u));
        }
    });
    best
}

/// Exact optimum: max <p,u> s.t. p >= 0, sum p = 1, sum |p - p_hat| <= radius.
fn lp_max(p_hat: &[f64], radius: f64, u: &[f64]) -> f64 {
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let p: Vec<_> = u.iter().map(|&uj| lp.add_var(uj, (0.0, 1.0))).collect();
    let dev: Vec<_> = u.iter().map(|_| lp.add_var(0.0, (0.0, 2.0))).collect();
    lp.add_constraint(
        p.iter().map(|&v| (v, 1.0)).collect::<Vec<_>>().as_slice(),
        ComparisonOp::Eq,
        1.0,
    );
    for j in 0..u.len() {
        lp.add_constraint([(dev[j], 1.0), (p[j], -1.0)], ComparisonOp::Ge, -p_hat[j]);
        lp.add_constraint([(dev[j], 1.0), (p[j], 1.0)], ComparisonOp::Ge, p_hat[j]);
    }
    lp.add_constraint(
        dev.iter().map(|&v| (v, 1.0)).collect::<Vec<_>>().as_slice(),
        ComparisonOp::Le,
        radius.min(2.0),
    );
    lp.solve().unwrap().objective()
}

fn check_feasible(p: &[f64], p_hat: &[f64], radius: f64) {
    assert!(p.iter().all(|&x| x >= 0.0), "{p:?}");
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!(l1(p, p_hat) <= radius.min(2.0) + 1e-12);
}

#[test]
fn matches_grid_search_on_grid_aligned_instances() {
    // With p_hat on the 1/20 lattice and radius/2 a multiple of 1/20 the
    // maximizer is a lattice point, so the grid search is exact.
    const UNITS: usize = 20;
    let mut rng = seeded_rng(21);
    for _ in 0..1000 {
        let k = rng.gen_range(1..=6);
        let mut counts = vec![0usize; k];
        for _ in 0..UNITS {
            counts[rng.gen_range(0..k)] += 1;
        }
        let p_hat: Vec<f64> = counts.iter().map(|&c| c as f64 / UNITS as f64).collect();
        let radius = 2.0 * rng.gen_range(0..=UNITS + 2) as f64 / UNITS as f64;
        let u: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..3.0)).collect();
        let p = inner_transition_max(&p_hat, radius, &u);
        check_feasible(&p, &p_hat, radius);
        let brute = grid_max(&p_hat, radius, &u, UNITS);
        assert!(
            (dot(&p, &u) - brute).abs() <= 1e-6,
            "p_hat={p_hat:?} r={radius} u={u:?}: {} vs {brute}",
            dot(&p, &u)
        );
    }
}

#[test]
fn dominates_grid_search_on_generic_instances() {
    let mut rng = seeded_rng(22);
    for _ in 0..1000 {
        let k = rng.gen_range(1..=5);
        let p_hat = common::random_sparse_distribution(&mut rng, k);
        let radius = rng.gen_range(0.0..2.5);
        let u: Vec<f64> = (0..k).map(|_| rng.gen::<f64>()).collect();
        let p = inner_transition_max(&p_hat, radius, &u);
        check_feasible(&p, &p_hat, radius);
        assert!(dot(&p, &u) >= grid_max(&p_hat, radius, &u, 12) - 1e-6);
    }
}

#[test]
fn matches_linear_program() {
    let mut rng = seeded_rng(23);
    for _ in 0..1000 {
        let k = rng.gen_range(1..=6);
        let p_hat = if rng.gen_bool(0.5) {
            common::random_distribution(&mut rng, k)
        } else {
            common::random_sparse_distribution(&mut rng, k)
        };
        let radius = if rng.gen_bool(0.1) {
            0.0
        } else {
            rng.gen_range(0.0..2.5)
        };
        let u: Vec<f64> = (0..k).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let p = inner_transition_max(&p_hat, radius, &u);
        check_feasible(&p, &p_hat, radius);
        let exact = lp_max(&p_hat, radius, &u);
        assert!(
            (dot(&p, &u) - exact).abs() <= 1e-6,
            "p_hat={p_hat:?} r={radius} u={u:?}: {} vs {exact}",
            dot(&p, &u)
        );
    }
}

#[test]
fn worked_example() {
    let p = inner_transition_max(&[0.5, 0.5], 0.2, &[0.0, 1.0]);
    assert!((p[0] - 0.4).abs() < 1e-15 && (p[1] - 0.6).abs() < 1e-15);
    assert!((grid_max(&[0.5, 0.5], 0.2, &[0.0, 1.0], 1000) - 0.6).abs() < 1e-12);
}
