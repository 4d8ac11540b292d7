use brcsmud::baseline::{bpdn_detect, BpdnConfig};
use brcsmud::cdma::{draw_frame, CdmaConfig};
use brcsmud::detector::{detect, exhaustive_detect};
use brcsmud::harness::{roc_from_sweep, run_sweep_to, ExperimentConfig, RocFilter};
use brcsmud::model::DetectionParams;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn cdma_frames_solved_exactly() {
    let cfg = CdmaConfig {
        num_nodes: 7,
        spreading_gain: 2,
        snr_db: 5.0,
        ..CdmaConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let frame = draw_frame(&mut rng, &cfg).unwrap();
        for omega in [0.01, 1.0, 100.0] {
            let params = DetectionParams::new(0.2, frame.noise_var, omega, cfg.alphabet.clone()).unwrap();
            let fast = detect(&frame.system, &params).unwrap();
            let slow = exhaustive_detect(&frame.system, &params).unwrap();
            assert_eq!(fast.x_hat, slow.x_hat);
            assert!((fast.objective_value - slow.objective_value).abs() <= 1e-9);
        }
    }
}

#[test]
fn noiseless_frames_recovered_when_well_posed() {
    let cfg = CdmaConfig {
        num_nodes: 6,
        spreading_gain: 8,
        snr_db: 60.0,
        ..CdmaConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut bpdn_exact = 0;
    for _ in 0..100 {
        let frame = draw_frame(&mut rng, &cfg).unwrap();
        let params = DetectionParams::new(0.2, frame.noise_var, 1.0, cfg.alphabet.clone()).unwrap();
        assert_eq!(detect(&frame.system, &params).unwrap().x_hat, frame.x_true);
        let bpdn = bpdn_detect(&frame.system, &BpdnConfig::for_noise(frame.noise_var, 6), &cfg.alphabet).unwrap();
        bpdn_exact += usize::from(bpdn == frame.x_true);
    }
    assert!(bpdn_exact > 50, "{bpdn_exact}");
}

#[test]
fn sweep_then_roc_in_memory() {
    let cfg = ExperimentConfig {
        num_nodes: 6,
        spreading_gain_list: vec![3],
        snr_db_list: vec![0.0, 20.0],
        omega_list: vec![0.01, 100.0],
        trials_per_point: 100,
        ..ExperimentConfig::default()
    };
    let mut buf = Vec::new();
    assert_eq!(run_sweep_to(&cfg, &mut buf).unwrap(), 8);
    let table = roc_from_sweep(std::str::from_utf8(&buf).unwrap(), &RocFilter::default()).unwrap();
    assert_eq!(table.rows, 4);
    let points: Vec<(f64, f64)> = table
        .csv
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<f64> = l.split(',').map(|v| v.parse().unwrap()).collect();
            (f[2], f[3])
        })
        .collect();
    // a larger Bayes factor never raises the false-activity rate
    assert!(points[2].0 <= points[0].0 && points[3].0 <= points[1].0, "{points:?}");
}
