mod support;

use hbqed::dynamics::{initial_state, Stepper};
use hbqed::model::{Config, Coupling};
use hbqed::system::OpenSystem;
use support::{distribution, Dense};

const T: f64 = 40.0;

/// Largest population error of the split step at `dt` against `reference`.
fn split_error(system: &OpenSystem, config: &Config, dt: f64, reference: &[f64]) -> f64 {
    let mut rho = initial_state(system);
    Stepper::new(system, &config.rates, dt, 1)
        .steps(&mut rho, (T / dt).round() as usize)
        .unwrap();
    let got = distribution(&rho.to_dense(&system.partition), &system.space);
    got.iter()
        .zip(reference)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

#[test]
fn split_step_tracks_the_master_equation() {
    let mut strong = Config::new(2, Coupling::Coherent);
    strong.rates.gamma_hyd = 0.1;
    strong.rates.gamma_dist = 0.05;
    strong.rates.mu_hyd = 0.3;
    strong.rates.mu_dist = 0.6;
    for config in [
        Config::new(2, Coupling::Coherent),
        Config::new(2, Coupling::Incoherent),
        strong,
    ] {
        let system = OpenSystem::build(&config).unwrap();
        let dense = Dense::new(&system, &config.rates);
        let start = initial_state(&system).to_dense(&system.partition);
        let reference = distribution(&dense.rk4(&start, 0.05, (T / 0.05) as usize), &system.space);
        let coarse = split_error(&system, &config, 0.1, &reference);
        let fine = split_error(&system, &config, 0.025, &reference);
        assert!(coarse < 2e-3, "dt = 0.1: {coarse}");
        assert!(fine < coarse / 2.5, "{coarse} -> {fine}");
    }
}
