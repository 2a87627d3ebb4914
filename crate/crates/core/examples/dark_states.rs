//! Exact dark-state bases of coherent clusters and a check that a dark
//! component survives the dissipative dynamics.
//!
//! cargo run --release --example dark_states

use hbqed::darkstates::{dark_basis, dark_density, verify_dark};
use hbqed::{Config, Coupling, OpenSystem, Stepper};

fn main() -> hbqed::Result<()> {
    for m in 2..=5 {
        let basis = dark_basis(m)?;
        println!("m = {m}: {} dark states", basis.dimension());
        if m > 4 {
            continue;
        }
        let system = OpenSystem::build(&Config::new(m as u32, Coupling::Coherent))?;
        for v in basis.vectors() {
            let terms: Vec<String> = v
                .terms()
                .iter()
                .map(|(k, c)| format!("{c:+}|{k}>"))
                .collect();
            let report = verify_dark(v, &system);
            println!(
                "  {}  Lindblad residual {:.1e}",
                terms.join(" "),
                report.lindblad_residual
            );
        }
    }

    let system = OpenSystem::build(&Config::new(3, Coupling::Coherent))?;
    let basis = dark_basis(3)?;
    let v = basis.vectors().next().expect("one dark state at m = 3");
    let start = dark_density(v, &system)?;
    let mut rho = start.clone();
    Stepper::new(&system, &system.config.rates, system.config.evolve.dt, 1)
        .steps(&mut rho, 1000)?;
    println!(
        "m = 3 dark state after t = {:.0}: max |rho - rho0| = {:.1e}",
        rho.time,
        rho.max_abs_diff(&start)
    );
    Ok(())
}
