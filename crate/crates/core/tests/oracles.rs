mod common;

use common::*;
use forced_pruning::param_learn::{tied_fit, DEFAULT_L2};
use forced_pruning::structure::greedy_add;
use forced_pruning::{
    edge_deletion_scores, forced_pruning, learn_params_with_apt, mple_fit, quantize_params,
    DataSet, Edge, FitOptions, ForcedPruning, Heuristic, PairwiseModel, PruningConfig,
    TyingPartition,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;

fn tight(l2: f64) -> FitOptions {
    FitOptions {
        l2_strength: l2,
        max_optimizer_steps: 2000,
        gradient_tolerance: 1e-9,
    }
}

#[test]
fn pll_matches_row_by_row_oracle() {
    for seed in 0..10 {
        let n = 4 + seed as usize % 5;
        let m = random_model(n, 0.5, 2.0, seed);
        let ds = random_dataset(n, 80, seed + 100);
        let got = m.pll(&ds).unwrap();
        let want = pll_oracle(&m, &ds);
        assert!(
            (got - want).abs() < 1e-12,
            "seed {}: {} vs {}",
            seed,
            got,
            want
        );
    }
}

#[test]
fn deletion_delta_matches_full_recompute() {
    for seed in 0..10 {
        let m = random_model(7, 0.6, 2.0, seed);
        let ds = random_dataset(7, 120, seed + 7);
        let base = pll_oracle(&m, &ds);
        for s in edge_deletion_scores(&m, &ds).unwrap() {
            let mut without = m.clone();
            without.remove_edge(s.edge).unwrap();
            let want = base - pll_oracle(&without, &ds);
            assert!(
                (s.delta - want).abs() < 1e-12,
                "{}: {} vs {}",
                s.edge,
                s.delta,
                want
            );
            let single = m.pll_delta_without_edge(&ds, s.edge).unwrap();
            assert!((single - want).abs() < 1e-12);
        }
    }
}

#[test]
fn addition_gain_matches_grid_search() {
    let ds = random_dataset(6, 300, 3);
    let m = mple_fit(&random_model(6, 0.3, 0.5, 9), &ds, &FitOptions::default())
        .unwrap()
        .model;
    let candidates: Vec<Edge> = Edge::complete(6)
        .into_iter()
        .filter(|e| m.edge_index(*e).is_none())
        .collect();
    let base = pll_oracle(&m, &ds);
    let gains = greedy_add(&m, &ds, &candidates, candidates.len()).unwrap();
    for g in &gains {
        let (w, best) = grid_argmax(
            |w| {
                let mut with = m.clone();
                with.insert_edge(g.edge, w).unwrap();
                pll_oracle(&with, &ds)
            },
            -8.0,
            8.0,
        );
        assert!(
            (g.gain - (best - base)).abs() < 1e-8,
            "{}: gain {} vs {}",
            g.edge,
            g.gain,
            best - base
        );
        assert!(
            (g.weight - w).abs() < 1e-3,
            "{}: weight {} vs {}",
            g.edge,
            g.weight,
            w
        );
    }
    for pair in gains.windows(2) {
        assert!(pair[0].gain >= pair[1].gain);
    }
}

#[test]
fn chow_liu_beats_random_spanning_trees() {
    let mut r = rng(11);
    for seed in 0..5 {
        let n = 8;
        let ds = random_dataset(n, 400, seed);
        let tree = forced_pruning::chow_liu_tree(&ds);
        let best = tree_weight(&ds, &tree);
        for _ in 0..100 {
            // random spanning tree: attach each vertex of a shuffled order to an earlier one
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut r);
            let edges: Vec<Edge> = (1..n)
                .map(|i| e(order[i], order[rand::Rng::gen_range(&mut r, 0..i)]))
                .collect();
            assert!(tree_weight(&ds, &edges) <= best + 1e-12);
        }
    }
}

#[test]
fn quantize_objective_is_monotone_in_cluster_count() {
    let mut r = rng(5);
    for _ in 0..20 {
        let values: Vec<f64> = (0..12)
            .map(|_| rand::Rng::gen_range(&mut r, -3.0..3.0))
            .collect();
        let mut prev = f64::INFINITY;
        for c in 1..=values.len() {
            let obj = quantize_params(&values, c).unwrap().objective(&values);
            assert!(obj <= prev + 1e-12);
            prev = obj;
        }
        assert!(prev.abs() < 1e-12);
    }
}

#[test]
fn one_cluster_tied_fit_matches_grid_search() {
    let ds = random_dataset(4, 200, 21);
    let model = PairwiseModel::with_edges(4, [e(0, 1), e(1, 2), e(2, 3)]).unwrap();
    let lambda = 0.01;
    let partition = TyingPartition::new(vec![0; model.n_params()], vec![0.0]).unwrap();
    let fit = tied_fit(&model, &ds, &partition, &tight(lambda)).unwrap();
    let objective = |mu: f64| {
        let mut m = model.clone();
        m.set_params(&vec![mu; model.n_params()]).unwrap();
        pll_oracle(&m, &ds) - lambda * mu * mu
    };
    let (mu, best) = grid_argmax(objective, -5.0, 5.0);
    assert!((fit.partition.means()[0] - mu).abs() < 1e-5);
    assert!((fit.report.objective - best).abs() < 1e-6);
    assert!(fit
        .model
        .params()
        .iter()
        .all(|&p| p == fit.partition.means()[0]));
}

#[test]
fn tying_two_tight_groups_costs_little() {
    // a symmetric cycle: every node weight equal, every edge weight equal
    let cycle: Vec<Edge> = (0..6).map(|i| e(i, (i + 1) % 6)).collect();
    let truth =
        PairwiseModel::from_parts(6, vec![-1.0; 6], cycle.iter().map(|&c| (c, 2.0)).collect())
            .unwrap();
    let ds = exact_samples(&truth, 5000, 8);
    let model = PairwiseModel::with_edges(6, cycle).unwrap();
    let untied = mple_fit(&model, &ds, &tight(DEFAULT_L2)).unwrap().model;
    let tied = learn_params_with_apt(&model, &ds, 2, &tight(DEFAULT_L2)).unwrap();
    let a = untied.pll(&ds).unwrap();
    let b = tied.model.pll(&ds).unwrap();
    assert!((a - b).abs() < 0.01 * a.abs(), "untied {} tied {}", a, b);
}

#[test]
fn fit_is_independent_of_starting_point() {
    let mut r = rng(31);
    for seed in 0..5 {
        let ds = random_dataset(6, 250, seed);
        let base = random_model(6, 0.5, 0.0, seed);
        let from_zero = mple_fit(&base, &ds, &tight(DEFAULT_L2))
            .unwrap()
            .model
            .params();
        let mut start = base.clone();
        let p: Vec<f64> = (0..base.n_params())
            .map(|_| rand::Rng::gen_range(&mut r, -3.0..3.0))
            .collect();
        start.set_params(&p).unwrap();
        let from_random = mple_fit(&start, &ds, &tight(DEFAULT_L2))
            .unwrap()
            .model
            .params();
        for (a, b) in from_zero.iter().zip(&from_random) {
            assert!((a - b).abs() < 1e-4, "{} vs {}", a, b);
        }
    }
}

#[test]
fn correlated_pair_gets_finite_positive_coupling() {
    let data: Vec<Vec<u8>> = (0..100)
        .map(|i| match i % 10 {
            0 => vec![0, 1],
            1 => vec![1, 0],
            k if k < 6 => vec![0, 0],
            _ => vec![1, 1],
        })
        .collect();
    let ds = DataSet::new("pair", 2, &data).unwrap();
    let model = PairwiseModel::with_edges(2, [e(0, 1)]).unwrap();
    let lambda = 0.01;
    let fit = mple_fit(&model, &ds, &tight(lambda)).unwrap().model;
    let w = fit.edge_weights()[0];
    assert!(w.is_finite() && w > 0.0);
    // node weights are symmetric: optimize jointly over (node, edge) by nested grid
    let (w_grid, _) = grid_argmax(
        |w| {
            grid_argmax(
                |t| {
                    let m = PairwiseModel::from_parts(2, vec![t, t], vec![(e(0, 1), w)]).unwrap();
                    pll_oracle(&m, &ds) - lambda * (2.0 * t * t + w * w)
                },
                -6.0,
                6.0,
            )
            .1
        },
        0.0,
        8.0,
    );
    assert!((w - w_grid).abs() < 1e-3, "{} vs {}", w, w_grid);
}

#[test]
fn fitted_tree_edges_all_carry_likelihood() {
    let parents = [None, Some(0), Some(0), Some(1), Some(1), Some(2)];
    let ds = tree_samples(&parents, 0.85, 2000, 4);
    let tree: Vec<Edge> = parents
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.map(|p| e(i, p)))
        .collect();
    let fit = mple_fit(
        &PairwiseModel::with_edges(6, tree).unwrap(),
        &ds,
        &FitOptions::default(),
    )
    .unwrap()
    .model;
    for s in edge_deletion_scores(&fit, &ds).unwrap() {
        assert!(s.delta >= 0.0, "{} has delta {}", s.edge, s.delta);
    }
}

#[test]
fn learner_is_deterministic() {
    let ds = random_dataset(10, 300, 2);
    for heuristic in [Heuristic::Greedy, Heuristic::Rejection] {
        let config = PruningConfig {
            extra_edges: 6,
            exchange_size: 3,
            heuristic,
            max_iter: 6,
            seed: 17,
            apt_clusters: 8,
            ..PruningConfig::default()
        };
        let a = forced_pruning(&ds, &config).unwrap();
        let b = forced_pruning(&ds, &config).unwrap();
        assert_eq!(a.log, b.log);
        assert_eq!(a.model, b.model);
        assert_eq!(a.partition, b.partition);
    }
}

#[test]
fn learner_respects_budget_and_cluster_count() {
    let ds = random_dataset(9, 300, 6);
    let config = PruningConfig {
        extra_edges: 5,
        exchange_size: 2,
        max_iter: 5,
        apt_clusters: 4,
        ..PruningConfig::default()
    };
    let out = forced_pruning(&ds, &config).unwrap();
    assert_eq!(out.model.n_edges(), config.budget(9));
    let mut distinct = out.model.params();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    assert!(distinct.len() <= 4);
    let best = out.log[out.best_iteration].train_neg_pll;
    assert_eq!(best, out.train_neg_pll);
    assert!(out.log.iter().all(|r| r.train_neg_pll >= best));
}

#[test]
fn exchange_moves_edges_between_sets() {
    let ds = random_dataset(8, 300, 12);
    let config = PruningConfig {
        extra_edges: 4,
        exchange_size: 2,
        max_iter: 10,
        ..PruningConfig::default()
    };
    let mut learner = ForcedPruning::new(&ds, config).unwrap();
    for _ in 0..10 {
        let before = learner.active().clone();
        let rec = learner.step().unwrap().clone();
        for d in &rec.deleted {
            assert!(before.contains(d));
            assert!(!learner.active().contains(d));
            assert!(learner.pool().contains(d));
        }
        for a in &rec.added {
            assert!(!before.contains(a));
            assert!(learner.active().contains(a));
        }
    }
}

fn small_dataset() -> impl Strategy<Value = DataSet> {
    (3usize..7).prop_flat_map(|n| {
        prop::collection::vec(prop::collection::vec(0u8..2, n), 5..60)
            .prop_map(move |rows| DataSet::new("p", n, &rows).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pll_ignores_instance_order(ds in small_dataset(), seed in 0u64..1000) {
        let n = ds.n_vars();
        let m = random_model(n, 0.5, 2.0, seed);
        let mut rows: Vec<Vec<u8>> = ds.instances().map(<[u8]>::to_vec).collect();
        rows.shuffle(&mut rng(seed));
        let shuffled = DataSet::new("s", n, &rows).unwrap();
        prop_assert!((m.pll(&ds).unwrap() - m.pll(&shuffled).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn pll_is_a_log_probability(ds in small_dataset(), seed in 0u64..1000) {
        let m = random_model(ds.n_vars(), 0.5, 3.0, seed);
        let p = m.pll(&ds).unwrap();
        prop_assert!(p <= 0.0 && p.is_finite());
    }

    #[test]
    fn chow_liu_is_a_spanning_tree(ds in small_dataset()) {
        let tree = forced_pruning::chow_liu_tree(&ds);
        prop_assert_eq!(tree.len(), ds.n_vars() - 1);
        let mut seen: Vec<usize> = tree.iter().flat_map(|e| [e.lo(), e.hi()]).collect();
        seen.sort();
        seen.dedup();
        prop_assert_eq!(seen.len(), ds.n_vars());
    }

    #[test]
    fn mutual_information_matches_oracle(ds in small_dataset()) {
        for i in 0..ds.n_vars() {
            for j in (i + 1)..ds.n_vars() {
                let got = forced_pruning::mutual_information(&ds, i, j).unwrap();
                prop_assert!((got - mi_oracle(&ds, i, j).max(0.0)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn quantize_means_are_cluster_averages(
        values in prop::collection::vec(-5.0f64..5.0, 1..15),
        c in 1usize..6,
    ) {
        let c = c.min(values.len());
        let p = quantize_params(&values, c).unwrap();
        prop_assert_eq!(p.n_clusters(), c);
        for (k, mean) in p.means().iter().enumerate() {
            let members: Vec<f64> = values
                .iter()
                .zip(p.assignment())
                .filter(|(_, &a)| a == k)
                .map(|(v, _)| *v)
                .collect();
            prop_assert!(!members.is_empty());
            let avg = members.iter().sum::<f64>() / members.len() as f64;
            prop_assert!((avg - mean).abs() < 1e-9);
        }
    }
}
