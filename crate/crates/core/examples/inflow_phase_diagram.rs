//! Steady-state map over phonon inflow ratios, with dividing lines at
//! 0.1, 0.5 and 0.9.
//!
//! cargo run --release --example inflow_phase_diagram -- [m] [grid] [out-prefix]

use hbqed::analysis::{axis, extract_contours, sweep_inflow, DEFAULT_LEVELS};
use hbqed::report::{contours_json, heatmap_csv, svg_heatmap, write_atomic};
use hbqed::{Config, Coupling};
use std::path::PathBuf;

fn main() -> hbqed::Result<()> {
    let mut args = std::env::args().skip(1);
    let m: u32 = args.next().map_or(1, |a| a.parse().expect("m"));
    let n: usize = args.next().map_or(11, |a| a.parse().expect("grid size"));
    let mut config = Config::new(m, Coupling::Incoherent);
    config.evolve.t_max = 10_000.0;
    config.evolve.workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mu = axis(n, 0.9);
    let map = sweep_inflow(&config, &mu, &mu)?;
    let k = m as usize;
    let values = map.values(k);
    println!("P{k} at steady state; rows mu_hyd, columns mu_dist");
    for (i, row) in values.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:.3}")).collect();
        println!("  {:.2} | {}", mu[i], cells.join(" "));
    }
    let contours = extract_contours(&map, k, &DEFAULT_LEVELS)?;
    for c in &contours.contours {
        let points: usize = c.polylines.iter().map(Vec::len).sum();
        println!(
            "level {}: {} polylines, {points} points",
            c.level,
            c.polylines.len()
        );
    }
    if let Some(prefix) = args.next().map(PathBuf::from) {
        write_atomic(&prefix.with_extension("csv"), &heatmap_csv(&map))?;
        write_atomic(
            &prefix.with_extension("contours.json"),
            &contours_json(&contours),
        )?;
        write_atomic(
            &prefix.with_extension("svg"),
            &svg_heatmap(&map, k, Some(&contours)),
        )?;
        println!("wrote {}.csv, .contours.json and .svg", prefix.display());
    }
    Ok(())
}
