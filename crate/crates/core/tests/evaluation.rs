#[path = "common/oracles.rs"]
mod oracles;

use lapcom::data::{Multiplex, Network};
use lapcom::distributions::EdgeFamily;
use lapcom::evaluation::metrics::*;
use lapcom::evaluation::ppc::*;
use lapcom::evaluation::scenario::{generate_scenario, preset, PRESET_NAMES};
use lapcom::evaluation::schieber::{schieber_distance, schieber_distance_matrix, SchieberWeights};
use lapcom::model::{Component, ModelState};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn random_network(rng: &mut ChaCha8Rng, n: usize, directed: bool, family: EdgeFamily, density: f64) -> Network {
    let mut w = vec![0u32; n * n];
    for i in 0..n {
        for j in 0..n {
            if i == j || (!directed && j < i) {
                continue;
            }
            let v = match family {
                EdgeFamily::Binary => rng.random_bool(density) as u32,
                EdgeFamily::Count => {
                    if rng.random_bool(density) {
                        rng.random_range(1..6)
                    } else {
                        0
                    }
                }
            };
            w[i * n + j] = v;
            if !directed {
                w[j * n + i] = v;
            }
        }
    }
    Network::new(n, w, directed, family).unwrap()
}

#[test]
fn ari_examples() {
    assert_eq!(ari(&[0, 0, 1, 1], &[1, 1, 0, 0]).unwrap(), 1.0);
    // one item moved between two clusters of four
    let v = ari(&[0, 0, 0, 0, 1, 1, 1, 1], &[0, 0, 0, 1, 1, 1, 1, 1]).unwrap();
    assert!(close(v, oracles::ari(&[0, 0, 0, 0, 1, 1, 1, 1], &[0, 0, 0, 1, 1, 1, 1, 1]), 1e-12));
    assert!(v < 1.0 && v > 0.0);
    assert!(ari(&[0, 1], &[0]).is_err());
}

#[test]
fn pr_auc_examples() {
    // perfect ranking
    assert!(close(pr_auc(&[0.9, 0.8, 0.2, 0.1], &[true, true, false, false]).unwrap(), 1.0, 1e-15));
    // all scores tied: single point at recall 1, precision 1/2
    assert!(close(pr_auc(&[0.5; 4], &[true, false, true, false]).unwrap(), 0.75, 1e-15));
    assert!(pr_auc(&[0.1, 0.2], &[false, false]).is_none());
}

#[test]
fn count_metric_examples() {
    let obs = Network::new(3, vec![0, 2, 0, 2, 0, 1, 0, 1, 0], false, EdgeFamily::Count).unwrap();
    let rep = Network::new(3, vec![0, 0, 3, 0, 0, 1, 3, 1, 0], false, EdgeFamily::Count).unwrap();
    let m = metric_count(&obs, &rep).unwrap();
    // dyads (0,1) (0,2) (1,2): |2-0| + |0-3| + |1-1|
    assert!(close(m.mad, 5.0 / 3.0, 1e-15));
    assert_eq!(m.tnr, Some(0.0));
    assert_eq!(m.ecdf, vec![0.0, 3.0f64.ln()]);
    let b = Network::new(3, vec![0; 9], false, EdgeFamily::Binary).unwrap();
    assert!(metric_count(&obs, &b).is_err());
    assert!(metric_binary(&b, &b, &[0.5; 2]).is_err());
    let r = metric_binary(&b, &b, &[0.5; 3]).unwrap();
    assert_eq!((r.pr_auc, r.f1, r.hamming), (None, 1.0, 0.0));
}

#[test]
fn metrics_match_oracles_on_random_fixtures() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for fixture in 0..40 {
        let n = rng.random_range(3..9);
        let directed = fixture % 3 == 0;
        // partitions
        let k1 = rng.random_range(1..5);
        let k2 = rng.random_range(1..5);
        let p: Vec<usize> = (0..n + 4).map(|_| rng.random_range(0..k1)).collect();
        let q: Vec<usize> = (0..n + 4).map(|_| rng.random_range(0..k2)).collect();
        assert!(close(ari(&p, &q).unwrap(), oracles::ari(&p, &q), 1e-12), "ari fixture {fixture}");
        let map = match_labels(&p, &q).unwrap();
        let mapped = apply_label_map(&p, &map);
        let hits = mapped.iter().zip(&q).filter(|(a, b)| a == b).count();
        assert_eq!(hits, oracles::best_agreement(&p, &q), "matching fixture {fixture}");
        let targets: std::collections::BTreeSet<usize> = map.values().copied().collect();
        assert_eq!(targets.len(), map.len(), "matching must be injective");

        // binary networks
        let dens = rng.random_range(0.1..0.7);
        let ob = random_network(&mut rng, n, directed, EdgeFamily::Binary, dens);
        let dens = rng.random_range(0.1..0.7);
        let rb = random_network(&mut rng, n, directed, EdgeFamily::Binary, dens);
        let ov: Vec<bool> = oracles::dyad_values(&ob).iter().map(|&v| v > 0).collect();
        let rv: Vec<bool> = oracles::dyad_values(&rb).iter().map(|&v| v > 0).collect();
        // coarse scores force ties
        let scores: Vec<f64> = (0..ov.len()).map(|_| rng.random_range(0..6) as f64 / 5.0).collect();
        let m = metric_binary(&ob, &rb, &scores).unwrap();
        match (m.pr_auc, oracles::pr_auc(&scores, &ov)) {
            (Some(a), Some(b)) => assert!(close(a, b, 1e-12), "pr-auc fixture {fixture}"),
            (a, b) => assert_eq!(a, b),
        }
        assert!(close(m.f1, oracles::f1(&ov, &rv), 1e-12));
        assert!(close(m.hamming, oracles::hamming(&ov, &rv), 1e-12));
        let density = |v: &[bool]| v.iter().filter(|&&x| x).count() as f64 / v.len() as f64;
        assert!(close(m.density_sq_diff, (density(&rv) - density(&ov)).powi(2), 1e-12));
        let d = schieber_distance(&ob, &rb);
        assert!(close(d, oracles::schieber(&ob, &rb), 1e-8), "schieber fixture {fixture}: {d}");

        // count networks
        let dens = rng.random_range(0.1..0.9);
        let oc = random_network(&mut rng, n, directed, EdgeFamily::Count, dens);
        let dens = rng.random_range(0.1..0.9);
        let rc = random_network(&mut rng, n, directed, EdgeFamily::Count, dens);
        let m = metric_count(&oc, &rc).unwrap();
        let (ov, rv) = (oracles::dyad_values(&oc), oracles::dyad_values(&rc));
        assert!(close(m.mad, oracles::mad(&ov, &rv), 1e-12));
        assert_eq!(m.tnr, oracles::tnr(&ov, &rv));
    }
}

#[test]
fn schieber_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let nets: Vec<Network> = (0..5).map(|_| random_network(&mut rng, 8, false, EdgeFamily::Binary, 0.3)).collect();
    let d = schieber_distance_matrix(&nets, SchieberWeights::default());
    for i in 0..5 {
        assert!(d[(i, i)].abs() < 1e-12);
        for j in 0..5 {
            assert!(close(d[(i, j)], d[(j, i)], 1e-15));
            assert!((0.0..=1.0).contains(&d[(i, j)]));
            if i != j {
                assert!(close(d[(i, j)], schieber_distance(&nets[i], &nets[j]), 1e-12));
            }
        }
    }
    // smaller graphs are padded with isolated nodes
    let small = random_network(&mut rng, 5, false, EdgeFamily::Binary, 0.5);
    let v = schieber_distance(&small, &nets[0]);
    assert!(close(v, oracles::schieber(&small, &nets[0]), 1e-8));
    let mut w = vec![0u32; 64];
    for i in 0..5 {
        for j in 0..5 {
            w[i * 8 + j] = small.get(i, j);
        }
    }
    let padded = Network::new(8, w, false, EdgeFamily::Binary).unwrap();
    assert!(close(v, schieber_distance(&padded, &nets[0]), 1e-12));
    // a complete graph and an empty graph are far apart
    let full = Network::new(6, (0..36).map(|k| (k / 6 != k % 6) as u32).collect(), false, EdgeFamily::Binary).unwrap();
    let empty = Network::new(6, vec![0; 36], false, EdgeFamily::Binary).unwrap();
    assert!(schieber_distance(&full, &empty) > 0.3);
}

fn single_state(z: Vec<[f64; 2]>, alpha: f64, m: usize) -> ModelState {
    let n = z.len();
    ModelState {
        g: 1,
        g_plus: 1,
        log_tau: vec![0.0],
        e: 1.0,
        c: vec![0; m],
        alpha,
        comps: vec![Component {
            k: 1,
            k_plus: 1,
            w: 1.0,
            log_pi: vec![0.0],
            s: vec![0; n],
            mu: vec![[0.0, 0.0]],
            sigma2: vec![[1.0, 1.0]],
            z,
        }],
    }
}

#[test]
fn ppc_moments_match_model() {
    let z = vec![[0.0, 0.0], [0.5, 0.0], [0.0, 1.0], [1.0, 1.0]];
    let alpha = 0.7;
    let r = 10_000;
    for family in [EdgeFamily::Count, EdgeFamily::Binary] {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let obs = Multiplex::from_networks(vec![random_network(&mut rng, 4, false, family, 0.5)]).unwrap();
        let samples = vec![single_state(z.clone(), alpha, 1); r];
        let reps = ppc_simulate(&samples, &obs, r, 77).unwrap();
        assert_eq!(reps.len(), r);
        for (k, (i, j)) in oracles::dyad_list(4, false).into_iter().enumerate() {
            let eta = alpha - ((z[i][0] - z[j][0]).powi(2) + (z[i][1] - z[j][1]).powi(2));
            let (mean, var, p0) = match family {
                EdgeFamily::Count => (eta.exp(), eta.exp(), 1.0 - (-eta.exp()).exp()),
                EdgeFamily::Binary => {
                    let p = 1.0 / (1.0 + (-eta).exp());
                    (p, p * (1.0 - p), p)
                }
            };
            let emp = reps.iter().map(|x| x.multiplex.get(0).get(i, j) as f64).sum::<f64>() / r as f64;
            let se = (var / r as f64).sqrt();
            assert!((emp - mean).abs() < 4.0 * se, "{family:?} dyad ({i},{j}): {emp} vs {mean}");
            assert!(close(reps[0].tie_probs[0][k], p0, 1e-12));
        }
    }
}

#[test]
fn ppc_contracts_and_report() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let z: Vec<[f64; 2]> = (0..6).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
    let nets: Vec<Network> = (0..2).map(|_| random_network(&mut rng, 6, false, EdgeFamily::Count, 0.4)).collect();
    let obs = Multiplex::from_networks(nets).unwrap();
    let samples = vec![single_state(z.clone(), 0.3, 2); 12];
    assert!(ppc_simulate(&samples, &obs, 0, 1).is_err());
    assert!(ppc_simulate(&samples, &obs, 13, 1).is_err());
    assert!(ppc_simulate(&[single_state(z.clone(), 0.3, 3)], &obs, 1, 1).is_err());
    let a = ppc_simulate(&samples, &obs, 10, 5).unwrap();
    let b = ppc_simulate(&samples, &obs, 10, 5).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.multiplex, y.multiplex);
    }
    let rep = ppc_report(&obs, &a).unwrap();
    assert_eq!(rep.n_replicates, 10);
    let label = &obs.labels()[0];
    let mads = rep.values(label, "mad");
    assert_eq!(mads.len(), 10);
    for (i, v) in mads.iter().enumerate() {
        let o = oracles::dyad_values(obs.get(0));
        let r = oracles::dyad_values(a[i].multiplex.get(0));
        assert!(close(*v, oracles::mad(&o, &r), 1e-12));
    }
    let s = &rep.summary[label]["mad"];
    assert_eq!(s.n, 10);
    let mean = mads.iter().sum::<f64>() / 10.0;
    assert!(close(s.mean, mean, 1e-12));
    let dir = tempfile::tempdir().unwrap();
    write_ppc_report(dir.path(), &rep).unwrap();
    let rows = read_ppc_rows(&dir.path().join("ppc_report.csv")).unwrap();
    assert_eq!(rows.len(), rep.rows.len());
    assert!(dir.path().join("ppc_summary.json").exists());
    assert!(dir.path().join("ecdf").join(format!("{label}.csv")).exists());
}

#[test]
fn summary_quantiles() {
    let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]).unwrap();
    assert!(close(s.median, 2.5, 1e-15));
    assert!(close(s.iqr, 1.5, 1e-15));
    assert!(close(s.sd, (5.0f64 / 3.0).sqrt(), 1e-15));
    assert!(Summary::of(&[]).is_none());
}

#[test]
fn scenario_presets() {
    for name in PRESET_NAMES {
        let spec = preset(name, 1).unwrap();
        spec.validate().unwrap();
    }
    assert!(preset("Z", 1).is_err());
    let spec = preset("A", 3).unwrap();
    assert_eq!((spec.m, spec.n, spec.g_star, spec.family), (20, 30, 2, EdgeFamily::Count));
    let (mx, truth) = generate_scenario(&spec).unwrap();
    assert_eq!((mx.n_layers(), mx.n_nodes()), (20, 30));
    assert_eq!(truth.c.len(), 20);
    assert_eq!(truth.z.len(), 2);
    assert!(truth.s.iter().all(|s| s.iter().all(|&x| x == 0)));
    let (again, truth2) = generate_scenario(&spec).unwrap();
    assert_eq!(mx, again);
    assert_eq!(truth, truth2);
    let (other, _) = generate_scenario(&preset("A", 4).unwrap()).unwrap();
    assert_ne!(mx, other);

    let spec = preset("V", 1).unwrap();
    assert_eq!((spec.m, spec.n, spec.g_star, spec.family), (100, 60, 4, EdgeFamily::Binary));
    assert_eq!(spec.k, vec![1, 2, 2, 3]);
    let (mx, truth) = generate_scenario(&spec).unwrap();
    assert!(mx.networks().iter().all(|n| n.weights().iter().all(|&w| w <= 1)));
    for g in 0..4 {
        assert!(truth.s[g].iter().all(|&s| s < spec.k[g]));
    }
}

proptest! {
    #[test]
    fn ari_symmetric_and_label_free(seed in 0u64..100_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(2..15);
        let p: Vec<usize> = (0..n).map(|_| rng.random_range(0..4)).collect();
        let q: Vec<usize> = (0..n).map(|_| rng.random_range(0..4)).collect();
        let a = ari(&p, &q).unwrap();
        prop_assert!(close(a, ari(&q, &p).unwrap(), 1e-12));
        let shifted: Vec<usize> = p.iter().map(|x| 7 - x).collect();
        prop_assert!(close(a, ari(&shifted, &q).unwrap(), 1e-12));
        prop_assert!(close(ari(&p, &shifted).unwrap(), 1.0, 1e-12));
        prop_assert!(a <= 1.0 + 1e-12);
    }

    #[test]
    fn schieber_symmetric_bounded(seed in 0u64..100_000, directed: bool) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_network(&mut rng, 7, directed, EdgeFamily::Binary, 0.4);
        let b = random_network(&mut rng, 7, directed, EdgeFamily::Binary, 0.4);
        let d = schieber_distance(&a, &b);
        prop_assert!(close(d, schieber_distance(&b, &a), 1e-12));
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert!(schieber_distance(&a, &a).abs() < 1e-12);
    }
}
