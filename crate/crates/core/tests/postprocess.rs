use lapcom::data::Multiplex;
use lapcom::evaluation::scenario::{generate_scenario, preset};
use lapcom::linalg::procrustes_correlation;
use lapcom::model::{log_posterior, Component, Model, ModelData, ModelState, Variant};
use lapcom::postprocess::*;
use lapcom::sampler::{run_chain, SamplerConfig, Trace};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Point = [f64; 2];

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

/// VI lower bound written out from its definition (base-2 logs).
fn vi_bound_oracle(labels: &[usize], psm: &[Vec<f64>]) -> f64 {
    let n = labels.len();
    let mut total = 0.0;
    for i in 0..n {
        let a: f64 = (0..n).filter(|&j| labels[i] == labels[j]).count() as f64;
        let b: f64 = psm[i].iter().sum();
        let c: f64 = (0..n).filter(|&j| labels[i] == labels[j]).map(|j| psm[i][j]).sum();
        total += a.log2() + b.log2() - 2.0 * c.log2();
    }
    total / n as f64
}

/// All set partitions of `n` items as restricted growth strings.
fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![0]];
    for _ in 1..n {
        let mut next = Vec::new();
        for p in &out {
            let k = p.iter().max().unwrap() + 1;
            for l in 0..=k {
                let mut q = p.clone();
                q.push(l);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

fn psm_rows(draws: &[Vec<usize>]) -> Vec<Vec<f64>> {
    let n = draws[0].len();
    let t = draws.len() as f64;
    (0..n).map(|i| (0..n).map(|j| draws.iter().filter(|d| d[i] == d[j]).count() as f64 / t).collect()).collect()
}

#[test]
fn similarity_matrix_example() {
    let draws = PartitionDraws::new(vec![vec![0, 0, 1], vec![1, 0, 0]]).unwrap();
    let psm = posterior_similarity_matrix(&draws);
    let want = [[1.0, 0.5, 0.0], [0.5, 1.0, 0.5], [0.0, 0.5, 1.0]];
    for i in 0..3 {
        for j in 0..3 {
            assert!(close(psm[(i, j)], want[i][j], 1e-15));
        }
    }
    assert!(PartitionDraws::new(vec![]).is_err());
    assert!(PartitionDraws::new(vec![vec![0, 1], vec![0]]).is_err());
}

#[test]
fn minvi_majority_is_global_minimum() {
    let a = vec![0, 0, 0, 1, 1, 2];
    let b = vec![0, 0, 1, 1, 1, 2];
    let draws = vec![a.clone(), a.clone(), a.clone(), b];
    let pd = PartitionDraws::new(draws.clone()).unwrap();
    let psm = posterior_similarity_matrix(&pd);
    let best = minvi_partition(&pd, &psm);
    assert_eq!(best.labels, a);
    assert_eq!(best.n_clusters, 3);
    let rows = psm_rows(&draws);
    let global = set_partitions(6).iter().map(|p| vi_bound_oracle(p, &rows)).fold(f64::INFINITY, f64::min);
    assert!(close(best.bound, global, 1e-12));
}

#[test]
fn modes_break_ties_low() {
    assert_eq!(smallest_mode(&[3, 2, 3, 2, 4]), Some(2));
    assert_eq!(smallest_mode(&[5]), Some(5));
    assert_eq!(smallest_mode(&[]), None);
}

/// Three well-separated latent spaces; component `g` is centred at `offset(g)`
/// and carries two node clusters.
fn planted_state(c: &[usize], g: usize, n: usize, rng: &mut ChaCha8Rng) -> ModelState {
    let offset = |g: usize| [6.0 * g as f64, -4.0 * g as f64];
    let comps = (0..g)
        .map(|k| {
            let o = offset(k);
            let z: Vec<Point> = (0..n)
                .map(|i| [o[0] + i as f64 * 0.3 + 0.01 * rng.random::<f64>(), o[1] + 0.01 * rng.random::<f64>()])
                .collect();
            let mut comp = Component {
                k: 2,
                k_plus: 2,
                w: 1.0,
                log_pi: vec![0.5f64.ln(); 2],
                s: (0..n).map(|i| (i >= n / 2) as usize).collect(),
                mu: vec![[o[0], o[1]], [o[0] + 0.3 * n as f64, o[1]]],
                sigma2: vec![[0.3, 0.3]; 2],
                z,
            };
            comp.relabel_nodes();
            comp
        })
        .collect();
    let mut s = ModelState { g, g_plus: g, log_tau: vec![-(g as f64).ln(); g], e: 1.0, c: c.to_vec(), alpha: 0.2, comps };
    s.relabel_networks();
    s
}

#[test]
fn network_relabel_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let c = vec![0, 0, 1, 1, 2, 2, 0];
    let truth: Vec<ModelState> = (0..200).map(|_| planted_state(&c, 3, 8, &mut rng)).collect();
    let mut scrambled = truth.clone();
    for s in scrambled.iter_mut().skip(1) {
        let mut order = vec![0, 1, 2];
        order.shuffle(&mut rng);
        s.permute_networks(&order);
    }
    let rel = kmeans_relabel(&scrambled, RelabelLevel::Network, 3).unwrap();
    assert_eq!(rel.n_valid(), 200);
    assert_eq!(rel.samples, truth);

    let draws: Vec<&[usize]> = rel.samples.iter().map(|s| s.c.as_slice()).collect();
    let c_hat = vec![2, 2, 0, 0, 1, 1, 2];
    let al = align_reference_partition(&c_hat, &draws).unwrap();
    assert_eq!(al.labels, c);
    assert_eq!(al.support, 1.0);
    assert!(!al.tie);
}

#[test]
fn node_relabel_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let c = vec![0, 0, 0];
    let mut truth: Vec<ModelState> = Vec::new();
    for _ in 0..150 {
        let mut s = planted_state(&c, 1, 9, &mut rng);
        let comp = &mut s.comps[0];
        // three node clusters with distinct centres
        comp.k = 3;
        comp.s = (0..9).map(|i| i / 3).collect();
        comp.mu = vec![[-3.0, 0.0], [3.0, 0.0], [0.0, 3.0]];
        for m in comp.mu.iter_mut() {
            m[0] += 0.05 * rng.random::<f64>();
        }
        comp.sigma2 = vec![[0.1, 0.1], [0.2, 0.2], [0.3, 0.3]];
        comp.log_pi = vec![(1.0f64 / 3.0).ln(); 3];
        comp.relabel_nodes();
        truth.push(s);
    }
    let mut scrambled = truth.clone();
    for s in scrambled.iter_mut().skip(1) {
        let mut order = vec![0, 1, 2];
        order.shuffle(&mut rng);
        s.comps[0].permute_nodes(&order);
    }
    let rel = kmeans_relabel(&scrambled, RelabelLevel::Node(0), 3).unwrap();
    assert_eq!(rel.n_valid(), 150);
    assert_eq!(rel.samples, truth);
}

#[test]
fn relabel_masks_other_cluster_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut samples = vec![
        planted_state(&[0, 0, 1, 1], 2, 6, &mut rng),
        planted_state(&[0, 0, 0, 0], 1, 6, &mut rng),
        planted_state(&[0, 1, 1, 0], 2, 6, &mut rng),
    ];
    samples[2].permute_networks(&[1, 0]);
    let rel = kmeans_relabel(&samples, RelabelLevel::Network, 2).unwrap();
    assert_eq!(rel.valid, vec![true, false, true]);
    assert_eq!(rel.samples[1], samples[1]);
    let only_one = &samples[1..2];
    assert!(matches!(
        kmeans_relabel(only_one, RelabelLevel::Network, 2),
        Err(lapcom::Error::NoValidIterations(_))
    ));
    assert!(kmeans_relabel(&samples, RelabelLevel::Network, 0).is_err());
}

#[test]
fn alignment_takes_majority_map() {
    let c_hat = [0, 0, 1, 1];
    let a: &[usize] = &[0, 0, 1, 1];
    let b: &[usize] = &[1, 1, 0, 0];
    let mut draws = vec![a; 7];
    draws.extend(vec![b; 3]);
    let al = align_reference_partition(&c_hat, &draws).unwrap();
    assert_eq!(al.labels, vec![0, 0, 1, 1]);
    assert!(close(al.support, 0.7, 1e-12));
    let al = align_reference_partition(&c_hat, &[a, b]).unwrap();
    assert!(al.tie);
    assert_eq!(al.labels, vec![0, 0, 1, 1]);
    assert!(align_reference_partition(&c_hat, &[]).is_err());
}

fn planted_similarity(x: &[Point], angle: f64, scale: f64, shift: Point, reflect: bool) -> Vec<Point> {
    let (s, c) = angle.sin_cos();
    x.iter()
        .map(|p| {
            let p = if reflect { [p[0], -p[1]] } else { *p };
            [scale * (c * p[0] - s * p[1]) + shift[0], scale * (s * p[0] + c * p[1]) + shift[1]]
        })
        .collect()
}

#[test]
fn procrustes_recovers_planted_transform() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let reference: Vec<Point> = (0..15).map(|_| [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]).collect();
    // draw = inverse map of the reference, so aligning must undo it
    let draw: Vec<Point> = planted_similarity(&reference, -std::f64::consts::FRAC_PI_2, 1.0 / 2.5, [0.0, 0.0], false)
        .iter()
        .map(|p| [p[0] - 3.0, p[1] + 1.5])
        .collect();
    let out = procrustes_align(&[draw.clone()], &reference).unwrap();
    for (a, b) in out.draws[0].iter().zip(&reference) {
        assert!(close(a[0], b[0], 1e-8) && close(a[1], b[1], 1e-8));
    }
    assert!(close(out.transforms[0].scale, 2.5, 1e-8));
    assert!(out.residuals[0] < 1e-8);
    // idempotent on aligned input
    let again = procrustes_align(&out.draws, &reference).unwrap();
    assert!(close(again.transforms[0].scale, 1.0, 1e-8));
    assert!(again.transforms[0].translation.iter().all(|t| t.abs() < 1e-8));
    // variances follow the squared scale
    let (mu, s2) = transform_cluster_params(&out.transforms[0], &[draw[0]], &[[1.0, 2.0]]);
    assert!(close(mu[0][0], reference[0][0], 1e-8));
    assert!(close(s2[0][0], 6.25, 1e-8) && close(s2[0][1], 12.5, 1e-8));
    assert!(procrustes_align(&[draw[..3].to_vec()], &reference).is_err());
}

proptest! {
    #[test]
    fn procrustes_any_similarity(seed in 0u64..10_000, angle in -3.1f64..3.1, scale in 0.2f64..5.0,
                                 sx in -5.0f64..5.0, sy in -5.0f64..5.0, reflect: bool) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Point> = (0..10).map(|_| [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]).collect();
        let y = planted_similarity(&x, angle, scale, [sx, sy], reflect);
        let out = procrustes_align(&[x.clone()], &y).unwrap();
        prop_assert!(out.residuals[0] < 1e-8);
        prop_assert!(close(out.transforms[0].scale, scale, 1e-8));
        prop_assert!(close(procrustes_correlation(&x, &y), 1.0, 1e-10));
    }

    #[test]
    fn vi_bound_matches_definition(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(2..9);
        let draws: Vec<Vec<usize>> = (0..rng.random_range(1..6)).map(|_| (0..n).map(|_| rng.random_range(0..3)).collect()).collect();
        let pd = PartitionDraws::new(draws.clone()).unwrap();
        let psm = posterior_similarity_matrix(&pd);
        let rows = psm_rows(&draws);
        let cand: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
        prop_assert!(close(vi_lower_bound(&cand, &psm), vi_bound_oracle(&cand, &rows), 1e-10));
        let best = minvi_partition(&pd, &psm);
        // no sampled partition beats the chosen one
        for d in &draws {
            prop_assert!(best.bound <= vi_bound_oracle(d, &rows) + 1e-10);
        }
    }
}

fn small_fit(seed: u64) -> (Multiplex, Model, Trace) {
    let mut spec = preset("C", seed).unwrap();
    spec.m = 8;
    spec.n = 14;
    let (mx, _) = generate_scenario(&spec).unwrap();
    let mut cfg = SamplerConfig::for_size(mx.n_layers(), mx.n_nodes());
    cfg.n_iter = 300;
    cfg.burn_in = 200;
    cfg.thin = 5;
    cfg.seed = seed;
    let tr = run_chain(&mx, &cfg).unwrap();
    let model = lapcom::sampler::build_model(&mx, &cfg);
    (mx, model, tr)
}

#[test]
fn relabelling_preserves_log_posterior() {
    let (_, model, tr) = small_fit(3);
    let target = smallest_mode(&tr.samples.iter().map(|s| s.g_plus).collect::<Vec<_>>()).unwrap();
    let rel = kmeans_relabel(&tr.samples, RelabelLevel::Network, target).unwrap();
    for (a, b) in rel.samples.iter().zip(&tr.log_posterior) {
        assert!(close(log_posterior(a, &model), *b, 1e-8 * (1.0 + b.abs())));
    }
}

/// A trace whose every sample has network partition `c`.
fn synthetic_trace(template: &Trace, chain: usize, c: &[usize], g: usize, n: usize, seed: u64) -> Trace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tr = template.clone();
    tr.chain = chain;
    tr.samples = (0..30).map(|_| planted_state(c, g, n, &mut rng)).collect();
    tr.iterations = (1..=30).collect();
    tr.log_posterior = vec![0.0; 30];
    tr
}

#[test]
fn reconcile_discards_minority_counts() {
    let (_, _, template) = small_fit(1);
    let (m, n) = (6, 8);
    let mut spec = preset("A", 2).unwrap();
    spec.m = m;
    spec.n = n;
    let mx = generate_scenario(&spec).unwrap().0;
    let model = Model::new(ModelData::from_multiplex(&mx), template.config.hyper.clone(), Variant::Lapcom);
    let two = [0, 0, 0, 1, 1, 1];
    let three = [0, 0, 1, 1, 2, 2];
    let traces = vec![
        synthetic_trace(&template, 0, &two, 2, n, 1),
        synthetic_trace(&template, 1, &two, 2, n, 1),
        synthetic_trace(&template, 2, &three, 3, n, 2),
    ];
    let rec = reconcile_chains(&traces, &model).unwrap();
    assert_eq!(rec.g_hat_plus_mode, 2);
    assert_eq!(rec.discarded.len(), 1);
    assert_eq!(rec.discarded[0].chain, 2);
    assert_eq!(rec.solution.c_hat, two.to_vec());
    assert_eq!(rec.cross_chain_ari.len(), 1);
    assert!(close(rec.cross_chain_ari[0].1, 1.0, 1e-12));
    assert_eq!(rec.chain_log_posteriors.len(), 2);

    let single = reconcile_chains(&traces[2..], &model).unwrap();
    assert_eq!(single.selected_chain, 2);
    assert_eq!(single.solution.g_hat_plus, 3);
    assert!(single.cross_chain_ari.is_empty() && single.discarded.is_empty());
    assert!(reconcile_chains(&[], &model).is_err());

    let dir = tempfile::tempdir().unwrap();
    write_solution_bundle(dir.path(), &rec).unwrap();
    let back = read_solution(&dir.path().join("solution.json")).unwrap();
    assert_eq!(back.solution.c_hat, rec.solution.c_hat);
    assert_eq!(back.solution.groups[1].s_hat, rec.solution.groups[1].s_hat);
    assert!(back.solution.transforms.is_empty());
    let text = std::fs::read_to_string(dir.path().join("solution.json")).unwrap();
    assert!(text.contains("\"label_base\": 1"));
    for f in ["Z_hat_1.csv", "Z_hat_2.csv", "transforms.csv", "cross_chain_ari.csv", "discarded_chains.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn postprocess_real_chain() {
    let (_, model, tr) = small_fit(5);
    let sol = postprocess_chain(&tr, &model).unwrap();
    assert_eq!(sol.c_hat.len(), 8);
    assert_eq!(sol.groups.len(), sol.g_hat_plus);
    assert!(close(sol.tau_hat.iter().sum::<f64>(), 1.0, 1e-12));
    assert!(sol.log_posterior_at_estimate.is_finite());
    let st = point_estimate_state(&sol);
    assert!(close(log_posterior(&st, &model), sol.log_posterior_at_estimate, 1e-9));
    for gs in &sol.groups {
        assert_eq!(gs.z_hat.len(), 14);
        assert_eq!(gs.mu_hat.len(), gs.k_hat_plus);
        assert!(close(gs.pi_hat.iter().sum::<f64>(), 1.0, 1e-9));
    }
}
