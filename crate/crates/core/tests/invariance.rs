use gaugecrypt::analysis::{gauge_experiment, ks_two_sample, ExperimentConfig, SamplerConfig};
use gaugecrypt::gauge::{decode_sampleset, encode_problem, keygen};
use gaugecrypt::problems::ran1;
use gaugecrypt::samplers::{exact_boltzmann, simulated_annealing, simulated_annealing_with, AnnealParams};
use gaugecrypt::seed::rng_from_seed;
use gaugecrypt::topology::chimera;
use gaugecrypt::{Execution, Spins};

#[test]
fn annealed_energies_pass_two_sample_ks_under_a_random_key() {
    let p = ran1(&chimera(1).unwrap(), &mut rng_from_seed(40));
    let key = keygen(p.n(), &mut rng_from_seed(41));
    let base = AnnealParams { num_reads: 10_000, sweeps: 20, seed: 0, ..Default::default() };
    let plain = simulated_annealing(&p, &base).unwrap();
    // Independent sampler seed so the comparison is not trivially exact.
    let other = AnnealParams { seed: 1_000_000, ..base };
    let encoded = encode_problem(&p, &key).unwrap();
    let decoded = decode_sampleset(&simulated_annealing(&encoded, &other).unwrap(), &key, &p).unwrap();
    let ks = ks_two_sample(&plain.energies(), &decoded.energies()).unwrap();
    assert!(ks.p_value > 0.01, "{ks:?}");
}

#[test]
fn mirrored_start_gives_the_exact_mirror_run() {
    let p = ran1(&chimera(2).unwrap(), &mut rng_from_seed(3));
    let key = keygen(p.n(), &mut rng_from_seed(4));
    let prm = AnnealParams { num_reads: 50, sweeps: 100, seed: 77, ..Default::default() };
    // Random initial states are drawn before the key matters, so only a
    // mirrored fixed start gives a read-by-read match.
    let s0 = Spins::all_up(p.n());
    let init = gaugecrypt::gauge::decode_sample(&s0, &key).unwrap();
    let plain = simulated_annealing_with(&p, &prm, Some(&s0), Execution::Sequential).unwrap();
    let mirrored =
        simulated_annealing_with(&encode_problem(&p, &key).unwrap(), &prm, Some(&init), Execution::Parallel).unwrap();
    assert_eq!(decode_sampleset(&mirrored, &key, &p).unwrap(), plain);
}

#[test]
fn ran1_closure_under_random_keys() {
    let t = chimera(2).unwrap();
    let mut rng = rng_from_seed(5);
    let (mut positive, mut total) = (0u64, 0u64);
    for _ in 0..200 {
        let p = ran1(&t, &mut rng);
        let key = keygen(p.n(), &mut rng);
        let e = encode_problem(&p, &key).unwrap();
        assert!(e.linear().all(|(_, v)| v == 0.0));
        for (_, _, v) in e.couplings() {
            assert!(v == 1.0 || v == -1.0);
            positive += u64::from(v > 0.0);
            total += 1;
        }
    }
    let freq = positive as f64 / total as f64;
    assert!((freq - 0.5).abs() <= 2.576 * (0.25 / total as f64).sqrt(), "{freq}");
}

#[test]
fn exact_boltzmann_is_gauge_invariant_state_by_state() {
    let p = ran1(&chimera(1).unwrap(), &mut rng_from_seed(6));
    let direct = exact_boltzmann(&p, 0.8).unwrap();
    for k in 0..5 {
        let key = keygen(p.n(), &mut rng_from_seed(100 + k));
        let enc = exact_boltzmann(&encode_problem(&p, &key).unwrap(), 0.8).unwrap();
        for (t, _, prob) in direct.iter() {
            let s = Spins::from_index(p.n(), t);
            let mirrored = gaugecrypt::gauge::decode_sample(&s, &key).unwrap();
            assert_eq!(enc.probability(&mirrored), prob);
        }
    }
}

#[test]
fn experiment_in_exact_mode_shows_no_difference() {
    let p = ran1(&chimera(1).unwrap(), &mut rng_from_seed(9));
    let cfg = ExperimentConfig { num_transforms: 4, sampler: SamplerConfig::Exact { beta: 1.0 }, ..Default::default() };
    let r = gauge_experiment(&p, &cfg).unwrap();
    assert_eq!(r.avg_diff_percent, 0.0);
    assert!(r.transformed_cdfs.iter().all(|c| *c == r.baseline_cdf));
}

#[test]
fn experiment_is_identical_across_execution_modes() {
    let p = ran1(&chimera(1).unwrap(), &mut rng_from_seed(10));
    let cfg = ExperimentConfig {
        num_transforms: 3,
        reads: 200,
        sampler: SamplerConfig::Anneal { sweeps: 30, beta_initial: 0.1, beta_final: 3.0 },
        seed: 12,
        ..Default::default()
    };
    let par = gauge_experiment(&p, &ExperimentConfig { exec: Execution::Parallel, ..cfg.clone() }).unwrap();
    let seq = gauge_experiment(&p, &ExperimentConfig { exec: Execution::Sequential, ..cfg }).unwrap();
    assert_eq!(serde_json::to_vec(&par).unwrap(), serde_json::to_vec(&seq).unwrap());
}
