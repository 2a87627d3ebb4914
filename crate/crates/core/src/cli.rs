//! Command-line front end: `simulate`, `steady`, `blocks`, `dark`, `sweep`.
//!
//! Exit codes: 0 success, 1 invalid input or usage, 2 runtime failure
//! (including `NOT_CONVERGED` under `--strict`).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::analysis::{axis, extract_contours, sweep_inflow, DEFAULT_LEVELS};
use crate::basis::{enumerate_states, partition_blocks};
use crate::darkstates::{dark_basis, verify_dark};
use crate::dynamics::{evolve, steady_state_report};
use crate::error::{Error, Result};
use crate::model::{Config, ConfigFile, Coupling};
use crate::operators::{build_hamiltonian, build_jump_operators, hamiltonian_matrix};
use crate::report;
use crate::system::OpenSystem;

/// Horizon for `steady` and `sweep` when none is configured.
pub const STEADY_T_MAX: f64 = 10_000.0;

#[derive(Debug, Parser)]
#[command(
    name = "hbqed",
    version,
    about = "Open-system dynamics of hydrogen-bonded water clusters"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evolve the all-excited state and write the time series.
    Simulate(Common),
    /// Evolve to the steady state and print the bond-count distribution.
    Steady(Common),
    /// Print basis size and block statistics.
    Blocks {
        #[command(flatten)]
        common: Common,
        /// Dump the Hamiltonian of this block as CSV.
        #[arg(long)]
        dump_block: Option<usize>,
    },
    /// Enumerate and verify dark states of a coherent cluster.
    Dark(Common),
    /// Steady-state map over both inflow ratios.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Grid points per axis.
        #[arg(long, default_value_t = 21)]
        grid: usize,
        /// Largest inflow ratio on each axis.
        #[arg(long, default_value_t = 0.95)]
        mu_max: f64,
        /// Contour levels.
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<f64>>,
        /// Bond count whose probability is mapped (default m).
        #[arg(long)]
        k: Option<usize>,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set rates.gamma_hyd=0.05`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    coupling: Option<Coupling>,
    #[arg(long)]
    mu_hyd: Option<f64>,
    #[arg(long)]
    mu_dist: Option<f64>,
    /// Coupling strength for both modes.
    #[arg(long)]
    g: Option<f64>,
    /// Emission rate for both modes.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long, env = "HBQED_WORKERS")]
    workers: Option<usize>,
    /// Treat NOT_CONVERGED as a failure.
    #[arg(long)]
    strict: bool,
    /// Main output file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// SVG chart output.
    #[arg(long)]
    svg: Option<PathBuf>,
}

impl Common {
    /// File, then flags, then `--set`, then validation. Returns the config
    /// and whether any source fixed `t_max`.
    fn resolve(&self) -> Result<(Config, bool)> {
        let (mut file, mut t_max_given) = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                let raw: serde_json::Value =
                    serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
                (
                    ConfigFile::from_json(&text)?,
                    raw["evolve"].get("t_max").is_some(),
                )
            }
            None => (ConfigFile::default(), false),
        };
        if let Some(m) = self.m {
            file.model.m = m;
        }
        if let Some(c) = self.coupling {
            file.model.coupling = c;
        }
        if let Some(v) = self.mu_hyd {
            file.rates.mu_hyd = v;
        }
        if let Some(v) = self.mu_dist {
            file.rates.mu_dist = v;
        }
        if let Some(v) = self.g {
            file.model.g_hyd = v;
            file.model.g_dist = v;
        }
        if let Some(v) = self.gamma {
            file.rates.gamma_hyd = v;
            file.rates.gamma_dist = v;
        }
        if let Some(v) = self.dt {
            file.evolve.dt = v;
        }
        if let Some(v) = self.t_max {
            file.evolve.t_max = v;
            t_max_given = true;
        }
        if let Some(v) = self.workers {
            file.evolve.workers = v;
        }
        for o in &self.overrides {
            file.set(o)?;
            let key = o.split('=').next().unwrap_or("").trim();
            t_max_given |= key == "t_max" || key == "evolve.t_max";
        }
        Ok((Config::from(&file).validate()?, t_max_given))
    }

    fn steady_config(&self) -> Result<Config> {
        let (mut c, given) = self.resolve()?;
        if !given {
            c.evolve.t_max = STEADY_T_MAX;
        }
        Ok(c)
    }
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Io<'_> {
    fn emit(&mut self, path: Option<&Path>, text: &str) -> Result<()> {
        match path {
            Some(p) => report::write_atomic(p, text),
            None => self.out.write_all(text.as_bytes()).map_err(Error::from),
        }
    }

    fn echo_config(&mut self, common: &Common, config: &Config) -> Result<()> {
        for w in config.warnings() {
            writeln!(self.err, "warning: {w}")?;
        }
        let json = ConfigFile::from(config).to_json() + "\n";
        match &common.out {
            Some(out) => {
                let mut name = out.as_os_str().to_owned();
                name.push(".config.json");
                report::write_atomic(Path::new(&name), &json)
            }
            None => self.err.write_all(json.as_bytes()).map_err(Error::from),
        }
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

fn simulate(io: &mut Io, c: &Common) -> Result<i32> {
    let (config, _) = c.resolve()?;
    io.echo_config(c, &config)?;
    let system = OpenSystem::build(&config)?;
    let ts = evolve(&system, &config.rates, &config.evolve)?;
    io.emit(c.out.as_deref(), &report::time_series_csv(&ts))?;
    if let Some(svg) = &c.svg {
        report::write_atomic(svg, &report::svg_time_series(&ts))?;
    }
    Ok(0)
}

fn steady(io: &mut Io, c: &Common) -> Result<i32> {
    let config = c.steady_config()?;
    io.echo_config(c, &config)?;
    let system = OpenSystem::build(&config)?;
    let r = steady_state_report(&system, &config.rates, &config.evolve)?;
    let mut text = String::from("k,P\n");
    for (k, p) in r.distribution.iter().enumerate() {
        text.push_str(&format!("{k},{}\n", report::fmt12(*p)));
    }
    io.emit(c.out.as_deref(), &text)?;
    if r.converged {
        return Ok(0);
    }
    let e = r.into_result().unwrap_err();
    writeln!(
        io.err,
        "{}[{}]: {e}",
        if c.strict { "error" } else { "warning" },
        e.code()
    )?;
    Ok(if c.strict { 2 } else { 0 })
}

fn blocks(io: &mut Io, c: &Common, dump: Option<usize>) -> Result<i32> {
    let (config, _) = c.resolve()?;
    io.echo_config(c, &config)?;
    let space = enumerate_states(&config.spec, config.closure());
    let h = hamiltonian_matrix(&space, &config.params);
    let jumps = build_jump_operators(&space);
    let partition = partition_blocks(&space, &h, &jumps)?;
    match dump {
        Some(b) if b >= partition.num_blocks() => Err(Error::Config(format!(
            "block {b} does not exist ({} blocks)",
            partition.num_blocks()
        ))),
        Some(b) => {
            let blocks = build_hamiltonian(&h, &partition, &config.params);
            io.emit(
                c.out.as_deref(),
                &report::block_csv(&blocks.blocks[b].matrix),
            )?;
            Ok(0)
        }
        None => {
            let text = format!(
                "{}\n{}\n",
                report::TABLE_HEADER,
                report::table_row(&config.spec.coupling.to_string(), &partition.stats)
            );
            io.emit(c.out.as_deref(), &text)?;
            Ok(0)
        }
    }
}

fn dark(io: &mut Io, c: &Common) -> Result<i32> {
    let (config, _) = c.resolve()?;
    if config.spec.coupling != Coupling::Coherent {
        return Err(Error::DarkRange(config.spec.m));
    }
    io.echo_config(c, &config)?;
    let basis = dark_basis(config.spec.m as usize)?;
    let system = OpenSystem::build(&config)?;
    let reports: Vec<_> = basis.vectors().map(|v| verify_dark(v, &system)).collect();
    let json =
        serde_json::to_string_pretty(&report::dark_json(&basis, &reports)).expect("json") + "\n";
    io.emit(c.out.as_deref(), &json)?;
    Ok(if reports.iter().all(|r| r.passed) {
        0
    } else {
        2
    })
}

fn sweep(
    io: &mut Io,
    c: &Common,
    grid: usize,
    mu_max: f64,
    levels: Option<&[f64]>,
    k: Option<usize>,
) -> Result<i32> {
    let config = c.steady_config()?;
    io.echo_config(c, &config)?;
    let k = k.unwrap_or(config.spec.m as usize);
    if k > config.spec.m as usize {
        return Err(Error::Config(format!(
            "k = {k} exceeds m = {}",
            config.spec.m
        )));
    }
    let ax = axis(grid, mu_max);
    let heat = sweep_inflow(&config, &ax, &ax)?;
    let contours = extract_contours(&heat, k, levels.unwrap_or(&DEFAULT_LEVELS))?;
    match &c.out {
        Some(out) => {
            report::write_atomic(out, &report::heatmap_csv(&heat))?;
            report::write_atomic(
                &sibling(out, ".contours.json"),
                &report::contours_json(&contours),
            )?;
        }
        None => io
            .out
            .write_all(report::contours_json(&contours).as_bytes())?,
    }
    if let Some(svg) = &c.svg {
        report::write_atomic(svg, &report::svg_heatmap(&heat, k, Some(&contours)))?;
    }
    let missed = heat.converged.iter().flatten().filter(|&&ok| !ok).count();
    if missed == 0 {
        return Ok(0);
    }
    writeln!(
        io.err,
        "{}[NOT_CONVERGED]: {missed} cells did not converge",
        if c.strict { "error" } else { "warning" }
    )?;
    Ok(if c.strict { 2 } else { 0 })
}

/// Run with explicit arguments (including the program name) and streams.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let mut io = Io { out, err };
    let result = match &cli.command {
        Command::Simulate(c) => simulate(&mut io, c),
        Command::Steady(c) => steady(&mut io, c),
        Command::Blocks { common, dump_block } => blocks(&mut io, common, *dump_block),
        Command::Dark(c) => dark(&mut io, c),
        Command::Sweep {
            common,
            grid,
            mu_max,
            levels,
            k,
        } => sweep(&mut io, common, *grid, *mu_max, levels.as_deref(), *k),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(io.err, "error[{}]: {e}", e.code());
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("hbqed").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn unknown_flags_are_usage_errors() {
        let (code, _, err) = call(&["blocks", "--frobnicate"]);
        assert_eq!(code, 1);
        assert!(err.contains("Usage"));
        assert_eq!(call(&[]).0, 1);
        assert_eq!(call(&["--help"]).0, 0);
    }

    #[test]
    fn validation_errors_exit_one() {
        let (code, _, err) = call(&["blocks", "--m", "1", "--coupling", "coherent"]);
        assert_eq!(code, 1);
        assert!(err.contains("COHERENT_REQUIRES_M_GE_2"));
        let (code, _, err) = call(&["steady", "--mu-hyd", "1.0"]);
        assert_eq!(code, 1);
        assert!(err.contains("MU_OUT_OF_RANGE"));
    }

    #[test]
    fn blocks_prints_table_row() {
        let (code, out, err) = call(&["blocks", "--m", "2", "--coupling", "coherent"]);
        assert_eq!(code, 0);
        assert!(out.starts_with(report::TABLE_HEADER));
        assert!(out.contains("coherent"));
        assert!(out.contains("23"));
        assert!(err.contains("\"model\""));
    }

    #[test]
    fn not_converged_is_fatal_only_when_strict() {
        let (code, _, err) = call(&["steady", "--t-max", "5"]);
        assert_eq!(code, 0);
        assert!(err.contains("NOT_CONVERGED"));
        assert_eq!(call(&["steady", "--t-max", "5", "--strict"]).0, 2);
    }

    #[test]
    fn two_unit_dark_basis_is_empty() {
        let (code, out, _) = call(&["dark", "--m", "2", "--coupling", "coherent"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["m"], 2);
        assert!(v["sectors"]
            .as_array()
            .unwrap()
            .iter()
            .all(|s| s["dimension"] == 0));
    }

    #[test]
    fn outputs_and_sidecar_are_written() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("run.csv");
        let svg = dir.path().join("run.svg");
        let (code, stdout, _) = call(&[
            "simulate",
            "--t-max",
            "20",
            "--out",
            out.to_str().unwrap(),
            "--svg",
            svg.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        assert!(stdout.is_empty());
        let csv = std::fs::read_to_string(&out).unwrap();
        assert!(csv.starts_with("t,P0,P1,n_hyd,n_dist,trace,min_eig\n"));
        assert_eq!(csv.lines().count(), 22);
        assert!(std::fs::read_to_string(&svg).unwrap().contains("<polyline"));
        let side = std::fs::read_to_string(dir.path().join("run.csv.config.json")).unwrap();
        let f = ConfigFile::from_json(&side).unwrap();
        assert_eq!(f.evolve.t_max, 20.0);
        assert_eq!(f.model.phonon_cap_hyd, Some(1));
    }

    #[test]
    fn config_file_then_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(&cfg, r#"{"model": {"m": 2}, "evolve": {"t_max": 7}}"#).unwrap();
        let out = dir.path().join("s.csv");
        let (code, _, _) = call(&[
            "steady",
            "--config",
            cfg.to_str().unwrap(),
            "--set",
            "coupling=coherent",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let side = std::fs::read_to_string(dir.path().join("s.csv.config.json")).unwrap();
        let f = ConfigFile::from_json(&side).unwrap();
        assert_eq!(f.model.coupling, Coupling::Coherent);
        assert_eq!(f.evolve.t_max, 7.0);
        assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 4);
    }
}
