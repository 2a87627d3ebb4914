//! Steady-state hydrogen-bond distributions, incoherent against coherent,
//! with the binomial law for reference.
//!
//! cargo run --release --example steady_states -- [max-m]

use hbqed::{steady_state, Config, Coupling, OpenSystem};

fn steady(m: u32, coupling: Coupling) -> hbqed::Result<Vec<f64>> {
    let mut config = Config::new(m, coupling);
    config.evolve.t_max = 10_000.0;
    let system = OpenSystem::build(&config)?;
    Ok(steady_state(&system, &config.rates, &config.evolve)?.distribution)
}

fn show(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x:.5}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn main() -> hbqed::Result<()> {
    let max_m: u32 = std::env::args()
        .nth(1)
        .map_or(3, |a| a.parse().expect("max m"));
    for m in 2..=max_m {
        let binom: Vec<f64> = (0..=m)
            .map(|k| {
                (0..k).fold(1.0, |c, i| c * f64::from(m - i) / f64::from(i + 1))
                    / 2f64.powi(m as i32)
            })
            .collect();
        let inc = steady(m, Coupling::Incoherent)?;
        let coh = steady(m, Coupling::Coherent)?;
        let signs: String = coh
            .iter()
            .zip(&inc)
            .map(|(c, i)| if c > i { '+' } else { '-' })
            .collect();
        println!("m = {m}");
        println!("  binomial    {}", show(&binom));
        println!("  incoherent  {}", show(&inc));
        println!("  coherent    {}", show(&coh));
        println!("  coh - inc   {signs}");
    }
    Ok(())
}
