use rabbithole::clustering::{adjusted_rand_index, Partition};
use rabbithole::markov::{absorption_probabilities, build_chain, ChainSpec};
use rabbithole::model::{run_to_absorption, stream_rng, Catalog, Eviction, UserState};
use rand::Rng;

/// Dense Gauss-Jordan solve of (I - Q) t = 1 over the transient states.
fn expected_steps_oracle(h: usize) -> Vec<f64> {
    let transient: Vec<usize> = (1..h).collect();
    let n = transient.len();
    let mut a = vec![vec![0.0; n + 1]; n];
    for (r, &k) in transient.iter().enumerate() {
        let x = k as f64 / h as f64;
        let move_p = x * (1.0 - x);
        a[r][r] = 1.0 - (1.0 - 2.0 * move_p);
        if r > 0 {
            a[r][r - 1] = -move_p;
        }
        if r + 1 < n {
            a[r][r + 1] = -move_p;
        }
        a[r][n] = 1.0;
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                let pivot_row = a[col].clone();
                for (x, p) in a[r].iter_mut().zip(pivot_row).skip(col) {
                    *x -= f * p;
                }
            }
        }
    }
    let mut t = vec![0.0; h + 1];
    for (r, &k) in transient.iter().enumerate() {
        t[k] = a[r][n] / a[r][r];
    }
    t
}

#[test]
fn count_chain_expected_steps_match_dense_solve() {
    for h in 2..=15 {
        let r = absorption_probabilities(&build_chain(ChainSpec::count(h)).unwrap()).unwrap();
        for (k, t) in expected_steps_oracle(h).into_iter().enumerate() {
            assert!((r.expected_steps[k] - t).abs() <= 1e-8 * t.max(1.0), "h={h} k={k}");
        }
    }
}

#[test]
fn count_chain_matches_random_eviction_simulation() {
    let h = 6;
    let catalog = Catalog::uniform(60, 20).unwrap();
    let exact = absorption_probabilities(&build_chain(ChainSpec::count(h)).unwrap()).unwrap();
    let runs = 20_000;
    for k in 1..h {
        let types: Vec<bool> = (0..h).map(|i| i < k).collect();
        let start = UserState::from_types(&types, &catalog).unwrap();
        let mut rng = stream_rng(31, k as u64);
        let (mut trapped, mut steps) = (0u64, Vec::with_capacity(runs));
        for _ in 0..runs {
            let a = run_to_absorption(start.clone(), &catalog, 1, Eviction::Random, 1_000_000, &mut rng)
                .unwrap()
                .unwrap();
            trapped += u64::from(a.trapped);
            steps.push(a.steps as f64);
        }
        let p = exact.p_rh[k];
        let est = trapped as f64 / runs as f64;
        assert!(
            (est - p).abs() <= 4.0 * (p * (1.0 - p) / runs as f64).sqrt(),
            "k={k}: {est} vs {p}"
        );
        let mean = steps.iter().sum::<f64>() / runs as f64;
        let var = steps.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (runs - 1) as f64;
        let expected = exact.expected_steps[k];
        assert!(
            (mean - expected).abs() <= 4.0 * (var / runs as f64).sqrt(),
            "k={k}: {mean} vs {expected}"
        );
    }
}

#[test]
fn ari_is_centered_on_random_labelings() {
    let mut rng = stream_rng(17, 0);
    let trials = 1000;
    let mut total = 0.0;
    for _ in 0..trials {
        let a: Vec<u8> = (0..20).map(|_| rng.random_range(0..3)).collect();
        let b: Vec<u8> = (0..20).map(|_| rng.random_range(0..3)).collect();
        total += adjusted_rand_index(&Partition::from_labels(&a), &Partition::from_labels(&b)).unwrap();
    }
    let mean = total / trials as f64;
    assert!(mean.abs() <= 0.02, "mean ARI {mean}");
}

#[test]
fn detector_recovers_simulator_labels_across_seeds() {
    use rabbithole::detector::{classify_rh, default_threshold, expected_similarity, pairwise_similarity};
    use rabbithole::model::{RhLabel, SimParams};
    use rabbithole::synth::converged_population;

    let catalog = Catalog::uniform(1000, 100).unwrap();
    let tau = default_threshold(expected_similarity(1000, 100, 50).unwrap()).unwrap();
    let mut ub_pairs = Vec::new();
    for seed in 1..=20 {
        let params = SimParams {
            rounds: 200,
            seed,
            ..SimParams::default()
        };
        let t = converged_population(&params, &catalog, 100_000).unwrap();
        let sims = pairwise_similarity(&t.final_recommendations, false).unwrap();
        let found = classify_rh(&sims, tau).unwrap().labels(t.users());
        assert_eq!(found, t.final_labels, "seed {seed}");
        for i in 0..t.users() {
            for j in i + 1..t.users() {
                if t.final_labels[i] == RhLabel::RabbitHole && t.final_labels[j] == RhLabel::RabbitHole {
                    ub_pairs.push(sims.get(i, j));
                }
            }
        }
    }
    let mean = ub_pairs.iter().sum::<f64>() / ub_pairs.len() as f64;
    assert!(
        ub_pairs.len() >= 100 && (mean - 0.5).abs() <= 0.05,
        "{} U_B pairs, mean {mean}",
        ub_pairs.len()
    );
}
