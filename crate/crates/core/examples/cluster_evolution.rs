//! Time series of the hydrogen-bond distribution for a cluster, written as
//! CSV and SVG.
//!
//! cargo run --release --example cluster_evolution -- [m] [coherent|incoherent] [out-prefix]

use hbqed::report::{svg_time_series, time_series_csv, write_atomic};
use hbqed::{evolve, Config, Coupling, OpenSystem};
use std::path::PathBuf;

fn main() -> hbqed::Result<()> {
    let mut args = std::env::args().skip(1);
    let m: u32 = args
        .next()
        .map_or(3, |a| a.parse().expect("m must be an integer"));
    let coupling = match args.next().as_deref() {
        Some("coherent") => Coupling::Coherent,
        _ => Coupling::Incoherent,
    };
    let mut config = Config::new(m, coupling);
    config.evolve.t_max = 300.0;
    let system = OpenSystem::build(&config)?;
    println!(
        "m = {m} {coupling:?}: {} states in {} blocks",
        system.space.len(),
        system.partition.num_blocks()
    );
    let ts = evolve(&system, &config.rates, &config.evolve)?;
    for (t, p) in ts.times.iter().zip(&ts.distributions).step_by(50) {
        let cells: Vec<String> = p.iter().map(|x| format!("{x:.4}")).collect();
        println!("  t = {t:6.1}  P = [{}]", cells.join(", "));
    }
    if let Some(prefix) = args.next().map(PathBuf::from) {
        write_atomic(&prefix.with_extension("csv"), &time_series_csv(&ts))?;
        write_atomic(&prefix.with_extension("svg"), &svg_time_series(&ts))?;
        println!("wrote {}.csv and .svg", prefix.display());
    }
    Ok(())
}
