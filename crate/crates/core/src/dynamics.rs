//! Block-diagonal density matrices and the two-step time integrator.
//!
//! One step of length `dt` is
//!
//! 1. an exact unitary rotation `rho -> U rho U^dag` per block, with
//!    `U = exp(-i H dt / hbar)` from the cached eigendecomposition, then
//! 2. dissipation, applied channel by channel in a fixed order (each
//!    operator's leak direction, then its inflow direction). Each sub-step
//!    is the first-order map
//!    `rho -> rho + c (A rho A^dag - {A^dag A, rho}/2)`, `c = r dt / hbar`,
//!    taken in its amplitude-damping form so that it stays completely
//!    positive and exactly trace preserving.
//!
//! The jump terms `A rho A^dag` move population between blocks along the
//! partition routing. Within a step, blocks are updated independently and
//! the routed contributions are merged per target block in source order,
//! so the result does not depend on the worker count.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use rayon::ThreadPool;

use crate::basis::{BlockPartition, StateSpace};
use crate::error::{Error, Result};
use crate::model::{EvolutionConfig, Mode, RateConfig};
use crate::system::{ChannelTable, OpenSystem};

/// Block-diagonal density operator.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDensityMatrix {
    pub blocks: Vec<DMatrix<Complex64>>,
    pub time: f64,
}

impl BlockDensityMatrix {
    pub fn zeros(partition: &BlockPartition) -> Self {
        Self {
            blocks: partition
                .blocks
                .iter()
                .map(|b| DMatrix::zeros(b.len(), b.len()))
                .collect(),
            time: 0.0,
        }
    }

    /// `|s><s|` for basis state `state`.
    pub fn basis_projector(partition: &BlockPartition, state: usize) -> Self {
        let mut rho = Self::zeros(partition);
        let b = partition.block_of[state];
        let k = partition.local_of[state];
        rho.blocks[b][(k, k)] = Complex64::new(1.0, 0.0);
        rho
    }

    /// Add `weight * |v><v| / <v|v>` where `v` is given by its nonzero
    /// components. All components must share one block.
    pub fn add_pure(
        &mut self,
        partition: &BlockPartition,
        weight: f64,
        components: &[(usize, Complex64)],
    ) -> Result<()> {
        let Some(&(first, _)) = components.first() else {
            return Ok(());
        };
        let b = partition.block_of[first];
        if let Some(&(i, _)) = components.iter().find(|(i, _)| partition.block_of[*i] != b) {
            return Err(Error::Config(format!(
                "vector spans blocks {b} and {}; not block diagonal",
                partition.block_of[i]
            )));
        }
        let norm: f64 = components.iter().map(|(_, c)| c.norm_sqr()).sum();
        let block = &mut self.blocks[b];
        for &(i, ci) in components {
            for &(j, cj) in components {
                block[(partition.local_of[i], partition.local_of[j])] +=
                    ci * cj.conj() * (weight / norm);
            }
        }
        Ok(())
    }

    pub fn trace(&self) -> f64 {
        self.blocks.iter().map(|b| b.trace().re).sum()
    }

    pub fn purity(&self) -> f64 {
        self.blocks.iter().map(|b| (b * b).trace().re).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| {
                let d = b - b.adjoint();
                d.iter().map(|z| z.norm()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.blocks
            .iter()
            .filter(|b| !b.is_empty())
            .map(|b| {
                hermitian_eigenvalues(b)
                    .into_iter()
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn population(&self, partition: &BlockPartition, state: usize) -> f64 {
        let k = partition.local_of[state];
        self.blocks[partition.block_of[state]][(k, k)].re
    }

    pub fn element(&self, partition: &BlockPartition, i: usize, j: usize) -> Complex64 {
        let b = partition.block_of[i];
        if b != partition.block_of[j] {
            return Complex64::default();
        }
        self.blocks[b][(partition.local_of[i], partition.local_of[j])]
    }

    /// Trace distance `||rho - sigma||_1 / 2`.
    pub fn trace_distance(&self, other: &Self) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .filter(|(a, _)| !a.is_empty())
            .map(|(a, b)| {
                let d = a - b;
                if d.iter().all(|z| *z == Complex64::default()) {
                    0.0
                } else {
                    0.5 * hermitian_eigenvalues(&d)
                        .iter()
                        .map(|x| x.abs())
                        .sum::<f64>()
                }
            })
            .sum()
    }

    /// Largest entry-wise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()))
            .fold(0.0, f64::max)
    }

    /// Expand into the full (unblocked) matrix.
    pub fn to_dense(&self, partition: &BlockPartition) -> DMatrix<Complex64> {
        let n = partition.block_of.len();
        let mut out = DMatrix::zeros(n, n);
        for (b, members) in partition.blocks.iter().enumerate() {
            for (ki, &i) in members.iter().enumerate() {
                for (kj, &j) in members.iter().enumerate() {
                    out[(i, j)] = self.blocks[b][(ki, kj)];
                }
            }
        }
        out
    }
}

fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    if m.nrows() == 1 {
        return vec![m[(0, 0)].re];
    }
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    sym.symmetric_eigenvalues().iter().copied().collect()
}

/// The all-excited pure state.
pub fn initial_state(system: &OpenSystem) -> BlockDensityMatrix {
    BlockDensityMatrix::basis_projector(&system.partition, system.space.initial_index())
}

/// `P_k`: population of states with exactly `k` formed hydrogen bonds.
pub fn hb_distribution(
    rho: &BlockDensityMatrix,
    space: &StateSpace,
    partition: &BlockPartition,
) -> Vec<f64> {
    let mut p = vec![0.0; space.m() + 1];
    for (i, s) in space.states().iter().enumerate() {
        p[s.bonds()] += rho.population(partition, i);
    }
    p
}

pub fn phonon_number(
    rho: &BlockDensityMatrix,
    space: &StateSpace,
    partition: &BlockPartition,
    mode: Mode,
) -> f64 {
    space
        .states()
        .iter()
        .enumerate()
        .map(|(i, s)| s.total_phonons(mode) as f64 * rho.population(partition, i))
        .sum()
}

/// Cached `exp(-i H dt / hbar)` per block, split into real and imaginary
/// parts together with their transposes.
#[derive(Debug, Clone)]
pub struct Propagators {
    pub dt: f64,
    blocks: Vec<[DMatrix<f64>; 4]>,
}

impl Propagators {
    pub fn new(system: &OpenSystem, dt: f64) -> Self {
        let t = dt / system.hbar();
        let blocks = system
            .hamiltonian
            .blocks
            .iter()
            .map(|b| {
                let (c, s) = b.propagator(t);
                let (ct, st) = (c.transpose(), s.transpose());
                [c, s, ct, st]
            })
            .collect();
        Self { dt, blocks }
    }
}

fn rotate(rho: &DMatrix<Complex64>, u: &[DMatrix<f64>; 4]) -> DMatrix<Complex64> {
    if rho.iter().all(|z| *z == Complex64::default()) {
        return rho.clone();
    }
    let [c, s, ct, st] = u;
    let re = rho.map(|z| z.re);
    let im = rho.map(|z| z.im);
    // X = U rho
    let xr = c * &re - s * &im;
    let xi = c * &im + s * &re;
    // Y = X U^dag, U^dag = C^T - i S^T
    let yr = &xr * ct + &xi * st;
    let yi = &xi * ct - &xr * st;
    yr.zip_map(&yi, Complex64::new)
}

/// Runs per-block work either inline or on a fixed-size pool.
pub struct Workers {
    pool: Option<ThreadPool>,
}

impl Workers {
    pub fn new(n: usize) -> Self {
        let pool = (n > 1).then(|| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .expect("thread pool")
        });
        Self { pool }
    }

    pub fn map<T: Send, F: Fn(usize) -> T + Sync + Send>(&self, n: usize, f: F) -> Vec<T> {
        match &self.pool {
            None => (0..n).map(f).collect(),
            Some(pool) => pool.install(|| (0..n).into_par_iter().map(f).collect()),
        }
    }
}

/// Exact unitary part of one step.
pub fn unitary_step(rho: &mut BlockDensityMatrix, props: &Propagators, workers: &Workers) {
    let old = std::mem::take(&mut rho.blocks);
    rho.blocks = workers.map(old.len(), |b| rotate(&old[b], &props.blocks[b]));
}

/// Per-block factors of one channel sub-step at a fixed `rate * dt / hbar`:
/// `keep[i] = exp(-c w_i / 2)` and `jump[i] = sqrt(1 - exp(-c w_i))`.
#[derive(Debug, Clone)]
struct ChannelFactors {
    channel: usize,
    keep: Vec<Vec<f64>>,
    jump: Vec<Vec<f64>>,
}

impl ChannelFactors {
    fn new(channel: usize, table: &ChannelTable, coeff: f64) -> Self {
        let keep = table
            .weights
            .iter()
            .map(|w| w.iter().map(|&x| (-0.5 * coeff * x).exp()).collect())
            .collect();
        let jump = table
            .weights
            .iter()
            .map(|w| w.iter().map(|&x| (-(-coeff * x).exp_m1()).sqrt()).collect())
            .collect();
        Self {
            channel,
            keep,
            jump,
        }
    }
}

fn channel_factors(system: &OpenSystem, rates: &RateConfig, dt: f64) -> Vec<ChannelFactors> {
    system
        .channels
        .iter()
        .enumerate()
        .filter_map(|(k, table)| {
            let rate = table.rate(rates);
            (rate != 0.0).then(|| ChannelFactors::new(k, table, rate * dt / system.hbar()))
        })
        .collect()
}

/// One sub-step for a single channel direction:
/// `rho -> K rho K + sum M rho M^dag`, with `K = exp(-c A^dag A / 2)` and
/// `M` the operator `A` rescaled so that `K^2 + M^dag M = 1`.
fn channel_step(
    rho: &mut BlockDensityMatrix,
    table: &ChannelTable,
    factors: &ChannelFactors,
    partition: &BlockPartition,
    workers: &Workers,
) -> Result<()> {
    for &i in &table.misses {
        if rho.population(partition, i) != 0.0 {
            return Err(Error::BlockRoutingMiss {
                channel: table.operator,
                state: i,
            });
        }
    }
    let old = std::mem::take(&mut rho.blocks);
    rho.blocks = workers.map(old.len(), |b| {
        let src = &old[b];
        let k = &factors.keep[b];
        let mut out = if k.iter().all(|&x| x == 1.0) {
            src.clone()
        } else {
            DMatrix::from_fn(src.nrows(), src.ncols(), |i, j| src[(i, j)] * (k[i] * k[j]))
        };
        for tr in &table.incoming[b] {
            let from = &old[tr.source];
            let s = &factors.jump[tr.source];
            for &(sj, dj, _) in &tr.pairs {
                for &(si, di, _) in &tr.pairs {
                    out[(di, dj)] += from[(si, sj)] * (s[si] * s[sj]);
                }
            }
        }
        out
    });
    Ok(())
}

fn apply_channels(
    rho: &mut BlockDensityMatrix,
    system: &OpenSystem,
    factors: &[ChannelFactors],
    workers: &Workers,
) -> Result<()> {
    for f in factors {
        channel_step(
            rho,
            &system.channels[f.channel],
            f,
            &system.partition,
            workers,
        )?;
    }
    Ok(())
}

/// Dissipative part of one step: every channel with nonzero rate, in
/// channel order.
pub fn dissipative_step(
    rho: &mut BlockDensityMatrix,
    system: &OpenSystem,
    rates: &RateConfig,
    dt: f64,
    workers: &Workers,
) -> Result<()> {
    apply_channels(rho, system, &channel_factors(system, rates, dt), workers)
}

/// Reusable integrator for a fixed system, rate set and step.
pub struct Stepper<'a> {
    pub system: &'a OpenSystem,
    pub rates: RateConfig,
    pub dt: f64,
    props: Propagators,
    factors: Vec<ChannelFactors>,
    workers: Workers,
}

impl<'a> Stepper<'a> {
    pub fn new(system: &'a OpenSystem, rates: &RateConfig, dt: f64, workers: usize) -> Self {
        Self {
            system,
            rates: rates.clone(),
            dt,
            props: Propagators::new(system, dt),
            factors: channel_factors(system, rates, dt),
            workers: Workers::new(workers),
        }
    }

    pub fn step(&self, rho: &mut BlockDensityMatrix) -> Result<()> {
        unitary_step(rho, &self.props, &self.workers);
        apply_channels(rho, self.system, &self.factors, &self.workers)?;
        rho.time += self.dt;
        Ok(())
    }

    pub fn steps(&self, rho: &mut BlockDensityMatrix, n: usize) -> Result<()> {
        for _ in 0..n {
            self.step(rho)?;
        }
        Ok(())
    }
}

/// Sampled observables of one run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimeSeries {
    pub m: usize,
    pub times: Vec<f64>,
    /// `distributions[sample][k]` = `P_k`.
    pub distributions: Vec<Vec<f64>>,
    pub n_hyd: Vec<f64>,
    pub n_dist: Vec<f64>,
    pub trace: Vec<f64>,
    pub min_eig: Vec<f64>,
}

impl TimeSeries {
    pub fn new(m: usize) -> Self {
        Self {
            m,
            ..Self::default()
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `P_k` over time.
    pub fn series(&self, k: usize) -> Vec<f64> {
        self.distributions.iter().map(|p| p[k]).collect()
    }

    fn record(&mut self, rho: &BlockDensityMatrix, system: &OpenSystem) -> f64 {
        let (space, part) = (&system.space, &system.partition);
        let min_eig = rho.min_eigenvalue();
        self.times.push(rho.time);
        self.distributions.push(hb_distribution(rho, space, part));
        self.n_hyd.push(phonon_number(rho, space, part, Mode::Hyd));
        self.n_dist
            .push(phonon_number(rho, space, part, Mode::Dist));
        self.trace.push(rho.trace());
        self.min_eig.push(min_eig);
        min_eig
    }
}

/// Evolve the all-excited state to `t_max`, sampling every probe interval.
pub fn evolve(
    system: &OpenSystem,
    rates: &RateConfig,
    evo: &EvolutionConfig,
) -> Result<TimeSeries> {
    evolve_from(system, rates, evo, initial_state(system)).map(|(ts, _)| ts)
}

/// Evolve `rho`, returning the samples and the final state.
pub fn evolve_from(
    system: &OpenSystem,
    rates: &RateConfig,
    evo: &EvolutionConfig,
    mut rho: BlockDensityMatrix,
) -> Result<(TimeSeries, BlockDensityMatrix)> {
    let stepper = Stepper::new(system, rates, evo.dt, evo.workers);
    let mut ts = TimeSeries::new(system.m());
    let total = evo.total_steps();
    let per_probe = evo.steps_per_probe();
    let mut done = 0;
    loop {
        let min_eig = ts.record(&rho, system);
        if min_eig < -evo.positivity_tol {
            return Err(Error::PositivityViolation {
                time: rho.time,
                min_eigenvalue: min_eig,
            });
        }
        if done >= total {
            break;
        }
        let n = per_probe.min(total - done);
        stepper.steps(&mut rho, n)?;
        done += n;
    }
    Ok((ts, rho))
}

/// Outcome of a steady-state search.
#[derive(Debug, Clone)]
pub struct SteadyReport {
    pub distribution: Vec<f64>,
    pub converged: bool,
    pub time: f64,
    /// Trace distance between the last two probes.
    pub distance: f64,
    pub state: BlockDensityMatrix,
}

impl SteadyReport {
    pub fn into_result(self) -> Result<SteadyReport> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NotConverged {
                time: self.time,
                distance: self.distance,
                distribution: self.distribution,
            })
        }
    }
}

/// Evolve until two probes are closer than `steady_tol` in trace distance
/// or `t_max` is reached. Never fails on non-convergence; see
/// [`steady_state`] for the strict variant.
pub fn steady_state_report(
    system: &OpenSystem,
    rates: &RateConfig,
    evo: &EvolutionConfig,
) -> Result<SteadyReport> {
    if rates.max_gamma() <= 0.0 {
        return Err(Error::NonPositiveValue {
            name: "gamma",
            value: rates.max_gamma(),
        });
    }
    let stepper = Stepper::new(system, rates, evo.dt, evo.workers);
    let mut rho = initial_state(system);
    let total = evo.total_steps();
    let per_probe = evo.steps_per_probe();
    let mut done = 0;
    let mut distance = f64::INFINITY;
    let mut converged = false;
    while done < total {
        let prev = rho.clone();
        let n = per_probe.min(total - done);
        stepper.steps(&mut rho, n)?;
        done += n;
        distance = rho.trace_distance(&prev);
        if distance < evo.steady_tol {
            converged = true;
            break;
        }
    }
    Ok(SteadyReport {
        distribution: hb_distribution(&rho, &system.space, &system.partition),
        converged,
        time: rho.time,
        distance,
        state: rho,
    })
}

/// Like [`steady_state_report`] but `NOT_CONVERGED` is an error.
pub fn steady_state(
    system: &OpenSystem,
    rates: &RateConfig,
    evo: &EvolutionConfig,
) -> Result<SteadyReport> {
    steady_state_report(system, rates, evo)?.into_result()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BasisState;
    use crate::model::{Config, Coupling};

    fn system(m: u32, c: Coupling, rates: RateConfig) -> OpenSystem {
        OpenSystem::build(&Config::new(m, c).with_rates(rates)).unwrap()
    }

    fn closed() -> RateConfig {
        RateConfig {
            gamma_hyd: 0.0,
            gamma_dist: 0.0,
            ..RateConfig::default()
        }
    }

    fn idx(sys: &OpenSystem, p_hyd: &[u8], p_dist: &[u8], levels: &[u8]) -> usize {
        sys.space
            .position(&BasisState {
                p_hyd: p_hyd.to_vec(),
                p_dist: p_dist.to_vec(),
                levels: levels.to_vec(),
            })
            .unwrap()
    }

    #[test]
    fn initial_state_is_pure_and_unbonded() {
        let sys = system(1, Coupling::Incoherent, RateConfig::default());
        let rho = initial_state(&sys);
        assert_eq!(rho.trace(), 1.0);
        assert_eq!(rho.purity(), 1.0);
        assert_eq!(
            hb_distribution(&rho, &sys.space, &sys.partition),
            vec![1.0, 0.0]
        );

        let sys = system(3, Coupling::Coherent, RateConfig::default());
        let rho = initial_state(&sys);
        let b = sys.partition.block_of[sys.space.initial_index()];
        assert_eq!(
            sys.partition.labels[b],
            crate::basis::SectorLabel::Charge { hyd: 0, dist: 0 }
        );
        let occupied: Vec<usize> = rho
            .blocks
            .iter()
            .enumerate()
            .filter(|(_, m)| m.iter().any(|z| z.norm() > 0.0))
            .map(|(i, _)| i)
            .collect();
        assert_eq!(occupied, vec![b]);
    }

    #[test]
    fn distribution_of_basis_states_and_mixtures() {
        let sys = system(1, Coupling::Incoherent, RateConfig::default());
        let bonded = idx(&sys, &[0], &[0], &[0]);
        let rho = BlockDensityMatrix::basis_projector(&sys.partition, bonded);
        assert_eq!(
            hb_distribution(&rho, &sys.space, &sys.partition),
            vec![0.0, 1.0]
        );

        let mut mix = BlockDensityMatrix::zeros(&sys.partition);
        for i in 0..sys.space.len() {
            mix.add_pure(&sys.partition, 0.2, &[(i, Complex64::new(1.0, 0.0))])
                .unwrap();
        }
        let p = hb_distribution(&mix, &sys.space, &sys.partition);
        assert!((p[1] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn singleton_blocks_are_left_alone_by_rotation() {
        let sys = system(1, Coupling::Incoherent, closed());
        let ground = idx(&sys, &[0], &[0], &[1]);
        let mut rho = BlockDensityMatrix::basis_projector(&sys.partition, ground);
        let before = rho.clone();
        unitary_step(&mut rho, &Propagators::new(&sys, 0.7), &Workers::new(1));
        assert!(rho.max_abs_diff(&before) < 1e-15);
    }

    #[test]
    fn half_steps_compose_exactly() {
        let sys = system(2, Coupling::Coherent, closed());
        let w = Workers::new(1);
        let mut a = initial_state(&sys);
        let mut b = a.clone();
        unitary_step(&mut a, &Propagators::new(&sys, 0.2), &w);
        let half = Propagators::new(&sys, 0.1);
        unitary_step(&mut b, &half, &w);
        unitary_step(&mut b, &half, &w);
        assert!(a.max_abs_diff(&b) < 1e-12);
        assert!((a.trace() - 1.0).abs() < 1e-12);
        assert!((a.purity() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rabi_curve_of_single_unit() {
        let sys = system(1, Coupling::Incoherent, closed());
        let g = sys.config.params.g_hyd;
        let dt = 0.01 / g;
        let stepper = Stepper::new(&sys, &closed(), dt, 1);
        let mut rho = initial_state(&sys);
        for _ in 0..2000 {
            stepper.step(&mut rho).unwrap();
            let p1 = hb_distribution(&rho, &sys.space, &sys.partition)[1];
            let exact = 0.5 * (2f64.sqrt() * g * rho.time).sin().powi(2);
            assert!((p1 - exact).abs() < 1e-9, "t = {}", rho.time);
        }
    }

    #[test]
    fn zero_rates_leave_state_unchanged() {
        let sys = system(2, Coupling::Incoherent, RateConfig::default());
        let mut rho = initial_state(&sys);
        Stepper::new(&sys, &RateConfig::default(), 0.1, 1)
            .steps(&mut rho, 30)
            .unwrap();
        let before = rho.clone();
        dissipative_step(&mut rho, &sys, &closed(), 0.1, &Workers::new(1)).unwrap();
        assert_eq!(rho, before);
    }

    #[test]
    fn single_phonon_leaks_at_gamma() {
        // dP/dt = -gamma P for the one-phonon bonded state under the
        // dissipator alone; the sub-step is exact for a single emission.
        let gamma = 0.05;
        let rates = RateConfig {
            gamma_hyd: gamma,
            gamma_dist: gamma,
            ..RateConfig::default()
        };
        let sys = system(1, Coupling::Incoherent, rates.clone());
        let from = idx(&sys, &[1], &[0], &[0]);
        let to = idx(&sys, &[0], &[0], &[0]);
        let dt = 1e-3;
        let mut rho = BlockDensityMatrix::basis_projector(&sys.partition, from);
        let w = Workers::new(1);
        let steps = 2000;
        for _ in 0..steps {
            dissipative_step(&mut rho, &sys, &rates, dt, &w).unwrap();
        }
        let t = dt * steps as f64;
        let p = rho.population(&sys.partition, from);
        assert!((p - (-gamma * t).exp()).abs() < 1e-12);
        assert!((rho.population(&sys.partition, to) - (1.0 - p)).abs() < 1e-12);
    }

    #[test]
    fn long_runs_preserve_trace() {
        let sys = system(2, Coupling::Coherent, RateConfig::default());
        let mut rho = initial_state(&sys);
        Stepper::new(&sys, &RateConfig::default(), 0.1, 1)
            .steps(&mut rho, 10_000)
            .unwrap();
        assert!((rho.trace() - 1.0).abs() <= 1e-9);
        assert!(rho.hermiticity_error() <= 1e-10);
        assert!(rho.min_eigenvalue() >= -1e-8);
    }

    #[test]
    fn inflow_on_decay_closure_is_a_routing_miss() {
        let sys = OpenSystem::build_with_closure(
            &Config::new(1, Coupling::Incoherent),
            crate::model::ClosureMode::DecayClosure,
        )
        .unwrap();
        let rates = RateConfig {
            mu_dist: 0.5,
            ..RateConfig::default()
        };
        let mut rho = initial_state(&sys);
        let err = dissipative_step(&mut rho, &sys, &rates, 0.1, &Workers::new(1)).unwrap_err();
        assert_eq!(err.code(), "BLOCK_ROUTING_MISS");
    }

    #[test]
    fn indefinite_states_trip_the_positivity_monitor() {
        let sys = system(1, Coupling::Incoherent, RateConfig::default());
        let mut rho = initial_state(&sys);
        let bonded = idx(&sys, &[0], &[0], &[0]);
        rho.add_pure(&sys.partition, 1e-6, &[(bonded, Complex64::new(1.0, 0.0))])
            .unwrap();
        let displaced = idx(&sys, &[0], &[0], &[1]);
        rho.add_pure(
            &sys.partition,
            -1e-6,
            &[(displaced, Complex64::new(1.0, 0.0))],
        )
        .unwrap();
        let err = evolve_from(
            &sys,
            &RateConfig::default(),
            &EvolutionConfig::default(),
            rho,
        )
        .unwrap_err();
        assert_eq!(err.code(), "POSITIVITY_VIOLATION");
    }

    #[test]
    fn large_steps_stay_positive() {
        let rates = RateConfig {
            gamma_hyd: 5.0,
            gamma_dist: 5.0,
            ..RateConfig::default()
        };
        let sys = system(2, Coupling::Coherent, rates.clone());
        let evo = EvolutionConfig {
            dt: 1.0,
            t_max: 20.0,
            ..EvolutionConfig::default()
        };
        let ts = evolve(&sys, &rates, &evo).unwrap();
        assert!(ts.min_eig.iter().all(|&x| x > -1e-12));
    }

    #[test]
    fn steady_state_needs_dissipation() {
        let sys = system(1, Coupling::Incoherent, closed());
        let err = steady_state(&sys, &closed(), &EvolutionConfig::default()).unwrap_err();
        assert_eq!(err.code(), "NON_POSITIVE_VALUE");
    }

    #[test]
    fn short_horizon_reports_not_converged() {
        let sys = system(1, Coupling::Incoherent, RateConfig::default());
        let evo = EvolutionConfig {
            t_max: 50.0,
            ..EvolutionConfig::default()
        };
        match steady_state(&sys, &RateConfig::default(), &evo).unwrap_err() {
            Error::NotConverged {
                distribution,
                distance,
                ..
            } => {
                assert_eq!(distribution.len(), 2);
                assert!(distance > 1e-8);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn time_series_is_normalized() {
        let sys = system(2, Coupling::Coherent, RateConfig::default());
        let evo = EvolutionConfig {
            t_max: 100.0,
            ..EvolutionConfig::default()
        };
        let ts = evolve(&sys, &RateConfig::default(), &evo).unwrap();
        assert_eq!(ts.len(), 101);
        for p in &ts.distributions {
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}
