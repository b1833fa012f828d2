use lapcom::data::{Multiplex, Network};
use lapcom::distributions::EdgeFamily;
use lapcom::evaluation::scenario::{generate_scenario, preset};
use lapcom::model::{Model, ModelData, Variant};
use lapcom::sampler::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small_data(name: &str, seed: u64) -> Multiplex {
    let mut spec = preset(name, seed).unwrap();
    spec.m = 6;
    spec.n = 12;
    generate_scenario(&spec).unwrap().0
}

fn short_config(mx: &Multiplex, n_iter: usize, burn_in: usize, thin: usize, seed: u64) -> SamplerConfig {
    let mut cfg = SamplerConfig::for_size(mx.n_layers(), mx.n_nodes());
    cfg.n_iter = n_iter;
    cfg.burn_in = burn_in;
    cfg.thin = thin;
    cfg.seed = seed;
    cfg
}

#[test]
fn snapshot_count() {
    let mx = small_data("A", 1);
    let cfg = short_config(&mx, 10, 0, 1, 3);
    let tr = run_chain(&mx, &cfg).unwrap();
    assert_eq!(tr.len(), 10);
    assert_eq!(tr.iterations, (1..=10).collect::<Vec<_>>());
    let cfg = short_config(&mx, 30, 12, 5, 3);
    let tr = run_chain(&mx, &cfg).unwrap();
    assert_eq!(tr.len(), cfg.n_samples());
    assert_eq!(tr.iterations, vec![17, 22, 27, 32, 37, 42]);
    for (_, r) in tr.acceptance_rates() {
        assert!((0.0..=1.0).contains(&r));
    }
    assert!(tr.log_posterior.iter().all(|x| x.is_finite()));
}

#[test]
fn config_validation() {
    let mx = small_data("A", 1);
    let mut cfg = short_config(&mx, 10, 0, 3, 0);
    assert!(cfg.validate(mx.n_nodes()).is_err());
    cfg.thin = 0;
    assert!(cfg.validate(mx.n_nodes()).is_err());
    assert!(run_multichain(&mx, &short_config(&mx, 4, 0, 1, 0), 0, true).is_err());
}

#[test]
fn runs_are_reproducible() {
    let mx = small_data("I", 2);
    let cfg = short_config(&mx, 20, 10, 2, 99);
    let a = run_multichain(&mx, &cfg, 2, true).unwrap();
    let b = run_multichain(&mx, &cfg, 2, true).unwrap();
    assert_eq!(a, b);
    assert_ne!(a[0].samples, a[1].samples);
    let other = run_multichain(&mx, &short_config(&mx, 20, 10, 2, 100), 1, true).unwrap();
    assert_ne!(a[0].samples, other[0].samples);
}

#[test]
fn checkpoint_resume_is_exact() {
    let mx = small_data("C", 4);
    let cfg = short_config(&mx, 40, 20, 4, 7);
    let model = build_model(&mx, &cfg);
    let init = initial_state(&mx, &model, &cfg).unwrap();
    let full = ChainRunner::new(&model, cfg.clone(), init.clone(), 1).finish();

    // interrupt once during burn-in and once after it
    let mut runner = ChainRunner::new(&model, cfg.clone(), init, 1);
    runner.run_to(13);
    let json = serde_json::to_string(&runner.checkpoint()).unwrap();
    drop(runner);
    let mut runner = ChainRunner::resume(&model, serde_json::from_str(&json).unwrap()).unwrap();
    runner.run_to(41);
    let json = serde_json::to_string(&runner.checkpoint()).unwrap();
    let resumed = ChainRunner::resume(&model, serde_json::from_str(&json).unwrap()).unwrap().finish();
    assert_eq!(full, resumed);
}

#[test]
fn trace_files_round_trip() {
    let mx = small_data("A", 5);
    let cfg = short_config(&mx, 12, 4, 3, 1);
    let tr = run_chain(&mx, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_trace_files(dir.path(), &tr, &mx);
    let back = trace_io::read_trace(dir.path()).unwrap();
    assert_eq!(back.samples, tr.samples);
    assert_eq!(back.iterations, tr.iterations);
    assert_eq!(back.config, tr.config);
    for (a, b) in back.log_posterior.iter().zip(&tr.log_posterior) {
        assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
    }
    let meta = trace_io::read_trace_meta(dir.path()).unwrap();
    assert_eq!((meta.n_nodes, meta.n_networks), (12, 6));
}

fn write_trace_files(dir: &std::path::Path, tr: &Trace, mx: &Multiplex) {
    trace_io::write_trace(dir, tr, mx.n_nodes(), mx.n_layers()).unwrap();
}

#[test]
fn single_component_limits() {
    let mx = small_data("C", 6);
    let mut cfg = short_config(&mx, 15, 5, 1, 2);
    cfg.hyper.g_max = 1;
    cfg.hyper.g0 = 1;
    cfg.hyper.k_max = 1;
    cfg.hyper.k0 = 1;
    let tr = run_chain(&mx, &cfg).unwrap();
    for s in &tr.samples {
        assert_eq!((s.g, s.g_plus), (1, 1));
        assert!(s.c.iter().all(|&c| c == 0));
        assert_eq!(s.comps[0].k, 1);
        assert!(s.comps[0].s.iter().all(|&x| x == 0));
    }
}

#[test]
fn init_single_group() {
    let mx = small_data("A", 3);
    let mut cfg = short_config(&mx, 1, 0, 1, 0);
    cfg.hyper.g0 = 1;
    let model = build_model(&mx, &cfg);
    let s = initial_state(&mx, &model, &cfg).unwrap();
    assert_eq!(s.g, 1);
    assert!(s.c.iter().all(|&c| c == 0));
    s.check_invariants(&model.hyper, model.variant).unwrap();
}

#[test]
fn init_separates_distinct_pairs() {
    let spec_a = preset("A", 11).unwrap();
    let (base, truth) = generate_scenario(&spec_a).unwrap();
    // first network of each true group, each duplicated
    let a = truth.c.iter().position(|&c| c == 0).unwrap();
    let b = truth.c.iter().position(|&c| c == 1).unwrap();
    let nets: Vec<Network> = [a, b, a, b].iter().map(|&m| base.get(m).clone()).collect();
    let mx = Multiplex::from_networks(nets).unwrap();
    let cfg = short_config(&mx, 1, 0, 1, 0);
    let model = build_model(&mx, &cfg);
    let s = initial_state(&mx, &model, &cfg).unwrap();
    assert_eq!(s.c, vec![0, 1, 0, 1]);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let c = initial_network_partition(&mx, 2, InitMethod::Gmm, &mut rng);
    assert_eq!(c, vec![0, 1, 0, 1]);
    // more groups than networks leaves each network on its own
    assert_eq!(initial_network_partition(&mx, 7, InitMethod::Kmeans, &mut rng), vec![0, 1, 2, 3]);
}

#[test]
fn perturbed_chains_share_structure() {
    let mx = small_data("A", 8);
    let cfg = short_config(&mx, 2, 0, 1, 4);
    let model = build_model(&mx, &cfg);
    let base = initial_state(&mx, &model, &cfg).unwrap();
    assert_eq!(chain_start(&base, &cfg, 0, true), base);
    let p = chain_start(&base, &cfg, 2, true);
    assert_eq!(p.c, base.c);
    assert_ne!(p.comps[0].z, base.comps[0].z);
    assert_eq!(chain_start(&base, &cfg, 2, false), base);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn invariants_hold_after_every_sweep(seed in 0u64..1000, binary: bool, mono: bool, directed: bool) {
        let mut spec = preset(if binary { "I" } else { "C" }, seed).unwrap();
        spec.m = 5;
        spec.n = 10;
        spec.directed = directed;
        let (mx, _) = generate_scenario(&spec).unwrap();
        let mut cfg = short_config(&mx, 1, 0, 1, seed);
        cfg.variant = if mono { Variant::MonoLapcm } else { Variant::Lapcom };
        cfg.hyper.g0 = 3;
        let model = build_model(&mx, &cfg);
        let mut state = initial_state(&mx, &model, &cfg).unwrap();
        state.check_invariants(&model.hyper, model.variant).unwrap();
        let mut ctl = SweepControl::new(&model, true);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..25 {
            sweep(&mut state, &model, &mut ctl, &mut rng);
            prop_assert!(state.check_invariants(&model.hyper, model.variant).is_ok(),
                "{:?}", state.check_invariants(&model.hyper, model.variant));
            if mono {
                prop_assert!(state.comps.iter().all(|c| c.k == 1 && c.s.iter().all(|&s| s == 0)));
            }
        }
    }

    #[test]
    fn data_free_sweeps_stay_valid(seed in 0u64..1000, binary: bool) {
        let fam = if binary { EdgeFamily::Binary } else { EdgeFamily::Count };
        let cfg = SamplerConfig::for_size(8, 6);
        let model = Model::new(ModelData::data_free(8, 6, fam), cfg.hyper.clone(), Variant::Lapcom);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state = init_from_prior(&model, &mut rng);
        let mut ctl = SweepControl::new(&model, false);
        for _ in 0..40 {
            sweep(&mut state, &model, &mut ctl, &mut rng);
            prop_assert!(state.check_invariants(&model.hyper, model.variant).is_ok());
        }
    }
}
