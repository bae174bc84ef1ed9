mod common;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tsmcf::flow::{brute_force_mcf, random_graph, solve_mcf, verify_result, FlowGraph};

fn small_graph(seed: u64) -> FlowGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(0..=12);
    let frames = rng.gen_range(1..=4);
    let prob = rng.gen_range(0.2..0.8);
    random_graph(&mut rng, n, frames, 2, prob)
}

#[test]
fn solver_matches_brute_force_on_random_graphs() {
    let started = Instant::now();
    for seed in 0..250 {
        let g = small_graph(seed);
        let fast = solve_mcf(&g).unwrap();
        let slow = brute_force_mcf(&g).unwrap();
        assert_eq!(fast.scaled_cost, slow.scaled_cost, "seed {seed}");
        assert!(common::paths_disjoint(&g, &fast), "seed {seed}");
        verify_result(&g, &fast).unwrap();
    }
    assert!(started.elapsed().as_secs_f64() < 10.0);
}

#[test]
fn augmentations_never_decrease() {
    // Successive shortest paths find each next path at no lower cost.
    for seed in 0..100 {
        let g = small_graph(1000 + seed);
        let r = solve_mcf(&g).unwrap();
        assert!(
            r.augmentations.windows(2).all(|w| w[0] <= w[1]),
            "seed {seed}"
        );
        assert!(r.augmentations.iter().all(|&c| c < 0), "seed {seed}");
        assert_eq!(r.augmentations.iter().sum::<i64>(), r.scaled_cost);
    }
}

#[test]
fn large_graphs_stay_disjoint() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..5 {
        let g = random_graph(&mut rng, 400, 40, 3, 0.2);
        let r = solve_mcf(&g).unwrap();
        assert!(common::paths_disjoint(&g, &r));
    }
}

#[test]
fn positive_costs_yield_no_paths() {
    let mut g = FlowGraph::new(vec![0, 1]);
    for k in 1..=2 {
        g.add_enter(k, 1.0);
        g.add_observation(k, 0.5);
        g.add_exit(k, 1.0);
    }
    g.add_transition(1, 2, 0.0);
    let r = solve_mcf(&g).unwrap();
    assert!(r.paths.is_empty());
    assert_eq!(r.scaled_cost, 0);
}
