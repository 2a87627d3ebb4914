//! Domain types for the cluster model and their validation.
//!
//! A [`Config`] bundles the four parameter groups. [`Config::validate`]
//! checks every invariant, fills the defaults that depend on the cluster
//! (phonon caps), and returns a normalized copy; validating that copy again
//! returns it unchanged.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Whether each unit owns its phonon modes or all units share two modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Coupling {
    #[default]
    Incoherent,
    Coherent,
}

impl std::str::FromStr for Coupling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "incoherent" => Ok(Coupling::Incoherent),
            "coherent" => Ok(Coupling::Coherent),
            other => Err(Error::Config(format!("unknown coupling '{other}'"))),
        }
    }
}

impl std::fmt::Display for Coupling {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Coupling::Incoherent => "incoherent",
            Coupling::Coherent => "coherent",
        })
    }
}

/// The two phonon modes: proton relaxation (`Hyd`) and proton displacement (`Dist`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Hyd,
    Dist,
}

impl Mode {
    pub const BOTH: [Mode; 2] = [Mode::Hyd, Mode::Dist];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Hyd => "hyd",
            Mode::Dist => "dist",
        }
    }
}

/// Size and phonon layout of a `[(H2O)2]^m` cluster.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterSpec {
    pub m: u32,
    pub coupling: Coupling,
    /// Truncation of every hyd phonon register. `None` until validated.
    pub phonon_cap_hyd: Option<u32>,
    pub phonon_cap_dist: Option<u32>,
}

impl ClusterSpec {
    pub fn new(m: u32, coupling: Coupling) -> Self {
        Self {
            m,
            coupling,
            phonon_cap_hyd: None,
            phonon_cap_dist: None,
        }
    }

    /// Cap applied when none is configured: one phonon per private mode,
    /// `m` phonons per shared mode.
    pub fn default_cap(&self) -> u32 {
        match self.coupling {
            Coupling::Incoherent => 1,
            Coupling::Coherent => self.m,
        }
    }

    pub fn cap(&self, mode: Mode) -> u32 {
        let cap = match mode {
            Mode::Hyd => self.phonon_cap_hyd,
            Mode::Dist => self.phonon_cap_dist,
        };
        cap.unwrap_or_else(|| self.default_cap())
    }

    /// Number of phonon registers per mode.
    pub fn phonon_registers(&self) -> usize {
        match self.coupling {
            Coupling::Incoherent => self.m as usize,
            Coupling::Coherent => 1,
        }
    }

    /// Register that unit `unit` exchanges phonons with.
    pub fn register_of(&self, unit: usize) -> usize {
        match self.coupling {
            Coupling::Incoherent => unit,
            Coupling::Coherent => 0,
        }
    }

    fn validate(&self) -> Result<Self> {
        if self.m < 1 {
            return Err(Error::MOutOfRange(self.m));
        }
        if self.coupling == Coupling::Coherent && self.m < 2 {
            return Err(Error::CoherentRequiresMGe2(self.m));
        }
        let mut out = self.clone();
        for mode in Mode::BOTH {
            let cap = self.cap(mode);
            if cap < 1 || cap > self.m.max(1) {
                return Err(Error::CapOutOfRange {
                    mode: mode.name(),
                    cap,
                    max: self.m.max(1),
                });
            }
            match mode {
                Mode::Hyd => out.phonon_cap_hyd = Some(cap),
                Mode::Dist => out.phonon_cap_dist = Some(cap),
            }
        }
        Ok(out)
    }
}

/// Physical constants in dimensionless units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    pub hbar: f64,
    pub omega_hyd: f64,
    pub omega_dist: f64,
    pub g_hyd: f64,
    pub g_dist: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            omega_hyd: 1.0,
            omega_dist: 1.0,
            g_hyd: 0.1,
            g_dist: 0.1,
        }
    }
}

impl ModelParams {
    pub fn omega(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Hyd => self.omega_hyd,
            Mode::Dist => self.omega_dist,
        }
    }

    pub fn g(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Hyd => self.g_hyd,
            Mode::Dist => self.g_dist,
        }
    }
}

/// Emission rates and inflow-to-emission ratios per mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateConfig {
    pub gamma_hyd: f64,
    pub gamma_dist: f64,
    pub mu_hyd: f64,
    pub mu_dist: f64,
}

impl Default for RateConfig {
    fn default() -> Self {
        Self {
            gamma_hyd: 0.02,
            gamma_dist: 0.02,
            mu_hyd: 0.0,
            mu_dist: 0.0,
        }
    }
}

impl RateConfig {
    pub fn gamma(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Hyd => self.gamma_hyd,
            Mode::Dist => self.gamma_dist,
        }
    }

    pub fn mu(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Hyd => self.mu_hyd,
            Mode::Dist => self.mu_dist,
        }
    }

    /// Inflow rate `mu * gamma`.
    pub fn inflow(&self, mode: Mode) -> f64 {
        self.mu(mode) * self.gamma(mode)
    }

    pub fn has_inflow(&self) -> bool {
        self.mu_hyd > 0.0 || self.mu_dist > 0.0
    }

    pub fn max_gamma(&self) -> f64 {
        self.gamma_hyd.max(self.gamma_dist)
    }

    pub fn without_inflow(&self) -> Self {
        Self {
            mu_hyd: 0.0,
            mu_dist: 0.0,
            ..self.clone()
        }
    }
}

/// Time stepping and convergence settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_max: f64,
    /// Trace distance between consecutive probes that counts as stationary.
    pub steady_tol: f64,
    /// Time between samples and convergence probes.
    pub probe_interval: f64,
    /// Most negative eigenvalue tolerated before a run aborts.
    pub positivity_tol: f64,
    pub workers: usize,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            dt: 0.1,
            t_max: 1000.0,
            steady_tol: 1e-8,
            probe_interval: 1.0,
            positivity_tol: 1e-8,
            workers: 1,
        }
    }
}

impl EvolutionConfig {
    /// Whole steps between probes (at least one).
    pub fn steps_per_probe(&self) -> usize {
        ((self.probe_interval / self.dt).round() as usize).max(1)
    }

    pub fn total_steps(&self) -> usize {
        (self.t_max / self.dt).round() as usize
    }
}

/// Which edges the reachable-basis search follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClosureMode {
    /// Hamiltonian exchange plus phonon leakage.
    DecayClosure,
    /// Additionally phonon inflow, up to the caps.
    PumpClosure,
}

/// Complete, self-describing run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub spec: ClusterSpec,
    pub params: ModelParams,
    pub rates: RateConfig,
    pub evolve: EvolutionConfig,
}

impl Config {
    pub fn new(m: u32, coupling: Coupling) -> Self {
        Self {
            spec: ClusterSpec::new(m, coupling),
            params: ModelParams::default(),
            rates: RateConfig::default(),
            evolve: EvolutionConfig::default(),
        }
    }

    pub fn with_rates(mut self, rates: RateConfig) -> Self {
        self.rates = rates;
        self
    }

    pub fn with_evolve(mut self, evolve: EvolutionConfig) -> Self {
        self.evolve = evolve;
        self
    }

    /// Pump closure whenever any inflow is switched on.
    pub fn closure(&self) -> ClosureMode {
        if self.rates.has_inflow() {
            ClosureMode::PumpClosure
        } else {
            ClosureMode::DecayClosure
        }
    }

    /// Check every invariant and return the normalized configuration.
    pub fn validate(&self) -> Result<Config> {
        let spec = self.spec.validate()?;

        let p = &self.params;
        for (name, v) in [
            ("hbar", p.hbar),
            ("omega_hyd", p.omega_hyd),
            ("omega_dist", p.omega_dist),
        ] {
            positive(name, v)?;
        }
        for (name, v) in [("g_hyd", p.g_hyd), ("g_dist", p.g_dist)] {
            non_negative(name, v)?;
        }

        let r = &self.rates;
        for (name, v) in [("gamma_hyd", r.gamma_hyd), ("gamma_dist", r.gamma_dist)] {
            non_negative(name, v)?;
        }
        for mode in Mode::BOTH {
            let mu = r.mu(mode);
            if !mu.is_finite() || !(0.0..1.0).contains(&mu) {
                return Err(Error::MuOutOfRange {
                    mode: mode.name(),
                    value: mu,
                });
            }
        }

        let e = &self.evolve;
        for (name, v) in [
            ("dt", e.dt),
            ("t_max", e.t_max),
            ("steady_tol", e.steady_tol),
            ("probe_interval", e.probe_interval),
        ] {
            positive(name, v)?;
        }
        non_negative("positivity_tol", e.positivity_tol)?;
        if e.workers == 0 {
            return Err(Error::NonPositiveValue {
                name: "workers",
                value: 0.0,
            });
        }

        Ok(Config {
            spec,
            params: self.params.clone(),
            rates: self.rates.clone(),
            evolve: self.evolve.clone(),
        })
    }

    /// Soft constraints that are reported but not rejected.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for mode in Mode::BOTH {
            let scale = self.params.hbar * self.params.omega(mode);
            if self.params.g(mode) > 0.2 * scale {
                out.push(format!(
                    "g_{} = {} exceeds 0.2*hbar*omega = {}; rotating-wave form may be inaccurate",
                    mode.name(),
                    self.params.g(mode),
                    0.2 * scale
                ));
            }
        }
        let stiff = self.evolve.dt * self.rates.max_gamma();
        if stiff > 0.05 {
            out.push(format!(
                "dt*max(gamma) = {stiff} exceeds 0.05; first-order dissipation step may lose accuracy"
            ));
        }
        if self.params.omega_hyd != self.params.omega_dist {
            out.push("omega_hyd != omega_dist: lambda system is not symmetric".to_string());
        }
        out
    }
}

/// `model` section of a configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub m: u32,
    pub coupling: Coupling,
    pub phonon_cap_hyd: Option<u32>,
    pub phonon_cap_dist: Option<u32>,
    pub hbar: f64,
    pub omega_hyd: f64,
    pub omega_dist: f64,
    pub g_hyd: f64,
    pub g_dist: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        ConfigFile::from(&Config::new(1, Coupling::Incoherent)).model
    }
}

/// On-disk JSON form of [`Config`]. Missing keys take defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub model: ModelSection,
    pub rates: RateConfig,
    pub evolve: EvolutionConfig,
}

impl From<&Config> for ConfigFile {
    fn from(c: &Config) -> Self {
        Self {
            model: ModelSection {
                m: c.spec.m,
                coupling: c.spec.coupling,
                phonon_cap_hyd: c.spec.phonon_cap_hyd,
                phonon_cap_dist: c.spec.phonon_cap_dist,
                hbar: c.params.hbar,
                omega_hyd: c.params.omega_hyd,
                omega_dist: c.params.omega_dist,
                g_hyd: c.params.g_hyd,
                g_dist: c.params.g_dist,
            },
            rates: c.rates.clone(),
            evolve: c.evolve.clone(),
        }
    }
}

impl From<&ConfigFile> for Config {
    fn from(f: &ConfigFile) -> Self {
        let m = &f.model;
        Config {
            spec: ClusterSpec {
                m: m.m,
                coupling: m.coupling,
                phonon_cap_hyd: m.phonon_cap_hyd,
                phonon_cap_dist: m.phonon_cap_dist,
            },
            params: ModelParams {
                hbar: m.hbar,
                omega_hyd: m.omega_hyd,
                omega_dist: m.omega_dist,
                g_hyd: m.g_hyd,
                g_dist: m.g_dist,
            },
            rates: f.rates.clone(),
            evolve: f.evolve.clone(),
        }
    }
}

impl ConfigFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    /// Apply `key=value`, where `key` is `section.field` or a bare field
    /// name that occurs in exactly one section. `value` is read as JSON,
    /// falling back to a string.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override {assignment:?} is not key=value")))?;
        let key = key.trim();
        let mut doc = serde_json::to_value(&*self).expect("plain data serializes");
        let sections = ["model", "rates", "evolve"];
        let (section, field) = match key.split_once('.') {
            Some((s, f)) => (s.to_string(), f.to_string()),
            None => {
                let owners: Vec<&str> = sections
                    .iter()
                    .copied()
                    .filter(|s| doc[*s].get(key).is_some())
                    .collect();
                match owners.as_slice() {
                    [one] => (one.to_string(), key.to_string()),
                    _ => return Err(Error::Config(format!("unknown configuration key {key:?}"))),
                }
            }
        };
        let slot = doc
            .get_mut(&section)
            .and_then(|s| s.get_mut(&field))
            .ok_or_else(|| Error::Config(format!("unknown configuration key {key:?}")))?;
        *slot = serde_json::from_str(raw.trim())
            .unwrap_or_else(|_| serde_json::Value::String(raw.trim().to_string()));
        *self = serde_json::from_value(doc).map_err(|e| Error::Config(format!("{key}: {e}")))?;
        Ok(())
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::NonFinite { name });
    }
    if v <= 0.0 {
        return Err(Error::NonPositiveValue { name, value: v });
    }
    Ok(())
}

fn non_negative(name: &'static str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::NonFinite { name });
    }
    if v < 0.0 {
        return Err(Error::NegativeValue { name, value: v });
    }
    Ok(())
}
