use rand::seq::SliceRandom;
use rand::Rng;

use roadgrowth_core::nn::{rng_from_seed, LstmCell, LstmState, Parameters, SgdConfig};
use roadgrowth_core::raster_encoder::{extract_patches, train_patch_ae, PatchAutoencoder};
use roadgrowth_core::road_encoder::{Drnnae, DrnnaeConfig};
use roadgrowth_core::synth::{generate, SynthConfig};
use roadgrowth_testkit::{max_gradient_error, RefAutoencoder, RefLstm};

const H: f64 = 1e-5;
const FLOOR: f64 = 1e-6;

fn wide_model(n_hidden: usize, seed: u64) -> Drnnae {
    let mut rng = rng_from_seed(seed);
    let mut m = Drnnae::zeros(DrnnaeConfig { n_hidden, ..DrnnaeConfig::default() }).unwrap();
    m.init_uniform(&mut rng, 0.5);
    m
}

fn random_seq(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    (0..len).map(|_| rng.gen_range(0.0..1.0)).collect()
}

#[test]
fn drnnae_gradients_match_finite_differences() {
    for draw in 0..20u64 {
        for len in 1..=5 {
            let m = wide_model(2, draw);
            let seq = random_seq(len, 1000 + draw * 7 + len as u64);
            let (_, grad) = m.loss_and_gradients(&seq).unwrap();
            let err = max_gradient_error(&m, &grad, |p| p.reconstruction_loss(&seq).unwrap(), H, FLOOR);
            assert!(err <= 1e-4, "draw {draw} len {len}: relative error {err}");
        }
    }
}

#[test]
fn drnnae_gradients_wider_models() {
    for (k, len) in [(1, 3), (3, 4), (5, 18)] {
        let m = wide_model(k, 77 + k as u64);
        let seq = random_seq(len, 5);
        let (_, grad) = m.loss_and_gradients(&seq).unwrap();
        let err = max_gradient_error(&m, &grad, |p| p.reconstruction_loss(&seq).unwrap(), H, FLOOR);
        assert!(err <= 1e-4, "k {k} len {len}: relative error {err}");
    }
}

#[test]
fn patch_ae_gradients_match_finite_differences() {
    let mut rng = rng_from_seed(3);
    for bands in 1..=3 {
        let mut ae = PatchAutoencoder::zeros(bands, 1, 4).unwrap();
        ae.init_uniform(&mut rng, 0.5);
        let x: Vec<f64> = (0..ae.patch_dim()).map(|_| rng.gen_range(0.0..1.0)).collect();
        let (_, grad) = ae.loss_and_gradients(&x).unwrap();
        let err = max_gradient_error(&ae, &grad, |p| p.loss(&x).unwrap(), H, FLOOR);
        assert!(err <= 1e-4, "bands {bands}: relative error {err}");
    }
}

fn reference(m: &Drnnae) -> RefAutoencoder {
    let views = m.tensors();
    let flat: Vec<&[f64]> = views.iter().map(|t| t.data).collect();
    RefAutoencoder::from_flat(&flat, m.n_hidden())
}

#[test]
fn drnnae_matches_reference_forward() {
    for seed in 0..10 {
        let m = wide_model(1 + seed as usize % 4, seed);
        let r = reference(&m);
        for len in [1, 2, 7, 18] {
            let seq = random_seq(len, seed * 31 + len as u64);
            let code = m.encode(&seq).unwrap();
            for (a, b) in code.iter().zip(r.encode(&seq)) {
                assert!((a - b).abs() <= 1e-12);
            }
            for (a, b) in m.decode(&code, len).unwrap().iter().zip(r.decode(&code, len)) {
                assert!((a - b).abs() <= 1e-12);
            }
            assert!((m.reconstruction_loss(&seq).unwrap() - r.loss(&seq)).abs() <= 1e-12);
        }
    }
}

#[test]
fn lstm_matches_reference_step() {
    let mut rng = rng_from_seed(11);
    let mut cell = LstmCell::zeros("t", 3, 4);
    cell.init_uniform(&mut rng, 1.0);
    let views = cell.tensors();
    let flat: Vec<&[f64]> = views.iter().map(|t| t.data).collect();
    let r = RefLstm::from_flat(&flat, 4, 7);
    let inputs: Vec<Vec<f64>> = (0..6).map(|_| (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
    let ours = cell.forward(&inputs).unwrap();
    for (s, h) in ours.iter().zip(r.run(&inputs)) {
        for (a, b) in s.h.iter().zip(&h) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
}

#[test]
fn memory_grows_at_most_one_per_step() {
    let mut rng = rng_from_seed(12);
    for _ in 0..50 {
        let mut cell = LstmCell::zeros("t", 1, 3);
        cell.init_uniform(&mut rng, 3.0);
        let mut state = LstmState::zeros(3);
        for _ in 0..30 {
            let next = cell.step(&[rng.gen_range(-5.0..5.0)], &state).unwrap();
            for (c1, c0) in next.c.iter().zip(&state.c) {
                assert!(c1.abs() <= c0.abs() + 1.0 + 1e-12);
            }
            for h in &next.h {
                assert!(h.abs() < 1.0);
            }
            state = next;
        }
    }
}

#[test]
fn codes_depend_on_order_and_length() {
    let m = wide_model(3, 4);
    let mut rng = rng_from_seed(9);
    let seq = random_seq(6, 9);
    let base = m.encode(&seq).unwrap();
    let mut differ = 0;
    for _ in 0..100 {
        let mut perm = seq.clone();
        perm.shuffle(&mut rng);
        if perm == seq {
            continue;
        }
        if m.encode(&perm).unwrap() != base {
            differ += 1;
        }
    }
    assert!(differ >= 99, "only {differ} of 100 permutations changed the code");
    assert_ne!(m.encode(&[0.3]).unwrap(), m.encode(&[0.3, 0.3]).unwrap());
}

#[test]
fn training_is_deterministic_and_finite() {
    let seqs: Vec<Vec<f64>> = (0..40).map(|i| random_seq(1 + i % 6, i as u64)).collect();
    let cfg = SgdConfig { epochs: 20, batch_size: 8, ..SgdConfig::default() };
    let run = |seed| {
        let mut m = Drnnae::random(DrnnaeConfig { n_hidden: 3, ..DrnnaeConfig::default() }, &mut rng_from_seed(seed)).unwrap();
        let hist = m.train(&seqs, &SgdConfig { seed, ..cfg }, |_, _| {}).unwrap();
        (m, hist)
    };
    let (a, ha) = run(1);
    let (b, hb) = run(1);
    assert_eq!(a, b);
    assert_eq!(ha, hb);
    for seed in 0..5 {
        let (m, h) = run(seed);
        assert!(h.iter().all(|v| v.is_finite()));
        assert!(m.is_finite());
    }
}

#[test]
fn patch_ae_halves_its_loss() {
    let scenario = generate(&SynthConfig::default()).unwrap();
    let raster = scenario.raster.normalized();
    let mut patches = extract_patches(&raster, 1);
    patches.shuffle(&mut rng_from_seed(42));
    patches.truncate(500);
    let mut ae = PatchAutoencoder::random(raster.n_bands(), 1, 8, &mut rng_from_seed(42)).unwrap();
    let before = ae.mean_loss(&patches).unwrap();
    let cfg = SgdConfig { learning_rate: 0.1, batch_size: 16, epochs: 200, seed: 42, clip_norm: None };
    train_patch_ae(&mut ae, &patches, &cfg).unwrap();
    let after = ae.mean_loss(&patches).unwrap();
    assert!(after < 0.5 * before, "loss {before} -> {after}");
}
