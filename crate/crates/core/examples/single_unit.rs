//! One dimer: closed Rabi oscillation, then relaxation to the open-system
//! steady state.
//!
//! cargo run --release --example single_unit

use hbqed::dynamics::{hb_distribution, initial_state};
use hbqed::{evolve, steady_state, Config, Coupling, OpenSystem, Stepper};

fn main() -> hbqed::Result<()> {
    let mut closed = Config::new(1, Coupling::Incoherent);
    closed.rates.gamma_hyd = 0.0;
    closed.rates.gamma_dist = 0.0;
    let system = OpenSystem::build(&closed)?;
    let g = closed.params.g_hyd;
    let stepper = Stepper::new(&system, &closed.rates, 0.01 / g, 1);
    let mut rho = initial_state(&system);
    println!("closed system, P1 against 1/2 sin^2(sqrt2 g t)");
    for _ in 0..8 {
        stepper.steps(&mut rho, 40)?;
        let p1 = hb_distribution(&rho, &system.space, &system.partition)[1];
        let exact = 0.5 * (2f64.sqrt() * g * rho.time).sin().powi(2);
        println!(
            "  t = {:6.2}  P1 = {p1:.9}  analytic = {exact:.9}",
            rho.time
        );
    }

    let mut open = Config::new(1, Coupling::Incoherent);
    open.evolve.t_max = 200.0;
    open.evolve.probe_interval = 25.0;
    let system = OpenSystem::build(&open)?;
    let ts = evolve(&system, &open.rates, &open.evolve)?;
    println!("open system, gamma = {}", open.rates.gamma_hyd);
    for (t, p) in ts.times.iter().zip(&ts.distributions) {
        println!("  t = {t:6.1}  P0 = {:.6}  P1 = {:.6}", p[0], p[1]);
    }
    open.evolve.t_max = 10_000.0;
    let steady = steady_state(&system, &open.rates, &open.evolve)?;
    println!(
        "steady state after t = {:.1}: {:?}",
        steady.time, steady.distribution
    );
    Ok(())
}
