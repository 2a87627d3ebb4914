//! Inflow sweeps, steady-state maps and level-set extraction.

use std::collections::HashMap;

use serde::Serialize;

use crate::dynamics::{steady_state_report, Workers};
use crate::error::{Error, Result};
use crate::model::{ClosureMode, Config, EvolutionConfig, Mode};
use crate::system::OpenSystem;

/// `n` evenly spaced points from 0 to `max` inclusive.
pub fn axis(n: usize, max: f64) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| max * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Steady-state distributions over a `(mu_hyd, mu_dist)` grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatmapData {
    pub m: usize,
    pub mu_hyd: Vec<f64>,
    pub mu_dist: Vec<f64>,
    /// `distributions[i][j]` is `P_0..P_m` at `(mu_hyd[i], mu_dist[j])`.
    pub distributions: Vec<Vec<Vec<f64>>>,
    pub converged: Vec<Vec<bool>>,
}

impl HeatmapData {
    /// Grid of `P_k`, indexed `[i_hyd][i_dist]`.
    pub fn values(&self, k: usize) -> Vec<Vec<f64>> {
        self.distributions
            .iter()
            .map(|row| row.iter().map(|p| p[k]).collect())
            .collect()
    }

    pub fn all_converged(&self) -> bool {
        self.converged.iter().flatten().all(|&c| c)
    }

    /// Cells in row-major order: `(mu_hyd, mu_dist, distribution, converged)`.
    pub fn cells(&self) -> impl Iterator<Item = (f64, f64, &[f64], bool)> + '_ {
        self.mu_hyd.iter().enumerate().flat_map(move |(i, &x)| {
            self.mu_dist.iter().enumerate().map(move |(j, &y)| {
                (
                    x,
                    y,
                    self.distributions[i][j].as_slice(),
                    self.converged[i][j],
                )
            })
        })
    }
}

fn check_axis(name: &'static str, values: &[f64]) -> Result<()> {
    if let Some(&v) = values.iter().find(|v| !(0.0..1.0).contains(*v)) {
        return Err(Error::MuOutOfRange {
            mode: name,
            value: v,
        });
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(format!(
            "{name} axis must be strictly increasing"
        )));
    }
    Ok(())
}

/// Steady state at every grid point. The pumped state space is built once;
/// cells run on `config.evolve.workers` threads and are assembled by index,
/// so the result does not depend on evaluation order. Non-convergence is
/// recorded per cell; any other error aborts the sweep.
pub fn sweep_inflow(config: &Config, mu_hyd: &[f64], mu_dist: &[f64]) -> Result<HeatmapData> {
    check_axis(Mode::Hyd.name(), mu_hyd)?;
    check_axis(Mode::Dist.name(), mu_dist)?;
    let system = OpenSystem::build_with_closure(config, ClosureMode::PumpClosure)?;
    let cell_evolve = EvolutionConfig {
        workers: 1,
        ..system.config.evolve.clone()
    };
    let (nx, ny) = (mu_hyd.len(), mu_dist.len());
    let workers = Workers::new(system.config.evolve.workers);
    let cells = workers.map(nx * ny, |c| {
        let mut rates = system.config.rates.clone();
        rates.mu_hyd = mu_hyd[c / ny];
        rates.mu_dist = mu_dist[c % ny];
        steady_state_report(&system, &rates, &cell_evolve).map(|r| (r.distribution, r.converged))
    });
    let mut distributions = vec![Vec::with_capacity(ny); nx];
    let mut converged = vec![Vec::with_capacity(ny); nx];
    for (c, cell) in cells.into_iter().enumerate() {
        let (p, ok) = cell?;
        distributions[c / ny].push(p);
        converged[c / ny].push(ok);
    }
    Ok(HeatmapData {
        m: system.m(),
        mu_hyd: mu_hyd.to_vec(),
        mu_dist: mu_dist.to_vec(),
        distributions,
        converged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Hyd,
    Dist,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trend {
    NonDecreasing,
    NonIncreasing,
}

/// Every pair of neighbours along `axis` violating `trend` by more than
/// `slack`, as `(i, j)` of the first cell of the pair.
pub fn monotonicity_violations(
    grid: &[Vec<f64>],
    axis: Axis,
    trend: Trend,
    slack: f64,
) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..grid.len() {
        for j in 0..grid[i].len() {
            let next = match axis {
                Axis::Hyd => grid.get(i + 1).map(|r| r[j]),
                Axis::Dist => grid[i].get(j + 1).copied(),
            };
            let Some(b) = next else { continue };
            let a = grid[i][j];
            let bad = match trend {
                Trend::NonDecreasing => b < a - slack,
                Trend::NonIncreasing => b > a + slack,
            };
            if bad {
                out.push((i, j));
            }
        }
    }
    out
}

/// Polylines of one level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContourLevel {
    pub level: f64,
    pub polylines: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ContourSet {
    pub contours: Vec<ContourLevel>,
}

pub const DEFAULT_LEVELS: [f64; 3] = [0.1, 0.5, 0.9];

/// Grid edge: horizontal edges join `(i, j)` and `(i + 1, j)`; vertical
/// edges join `(i, j)` and `(i, j + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Edge {
    H(usize, usize),
    V(usize, usize),
}

fn crossing(x: &[f64], y: &[f64], z: &[Vec<f64>], level: f64, e: Edge) -> Option<[f64; 2]> {
    let ((i0, j0), (i1, j1)) = match e {
        Edge::H(i, j) => ((i, j), (i + 1, j)),
        Edge::V(i, j) => ((i, j), (i, j + 1)),
    };
    let (a, b) = (z[i0][j0], z[i1][j1]);
    if (a >= level) == (b >= level) {
        return None;
    }
    let t = (level - a) / (b - a);
    Some([x[i0] + t * (x[i1] - x[i0]), y[j0] + t * (y[j1] - y[j0])])
}

/// Marching squares over `z[i][j]` at `(x[i], y[j])`, with linear
/// interpolation on cell edges. Saddles are split by the cell-centre mean.
pub fn contour_lines(x: &[f64], y: &[f64], z: &[Vec<f64>], level: f64) -> Vec<Vec<[f64; 2]>> {
    let mut segments: Vec<(Edge, Edge)> = Vec::new();
    for i in 0..x.len().saturating_sub(1) {
        for j in 0..y.len().saturating_sub(1) {
            let edges = [
                Edge::H(i, j),
                Edge::V(i + 1, j),
                Edge::H(i, j + 1),
                Edge::V(i, j),
            ];
            let hit: Vec<Edge> = edges
                .iter()
                .copied()
                .filter(|&e| crossing(x, y, z, level, e).is_some())
                .collect();
            match hit.len() {
                2 => segments.push((hit[0], hit[1])),
                4 => {
                    let centre = (z[i][j] + z[i + 1][j] + z[i + 1][j + 1] + z[i][j + 1]) / 4.0;
                    let [bottom, right, top, left] = edges;
                    if (centre >= level) == (z[i][j] >= level) {
                        segments.push((bottom, right));
                        segments.push((top, left));
                    } else {
                        segments.push((left, bottom));
                        segments.push((right, top));
                    }
                }
                _ => {}
            }
        }
    }

    let mut at: HashMap<Edge, Vec<usize>> = HashMap::new();
    for (s, &(a, b)) in segments.iter().enumerate() {
        at.entry(a).or_default().push(s);
        at.entry(b).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();
    let walk = |start: usize, from: Edge, used: &mut Vec<bool>| {
        let mut chain = vec![from];
        let (mut seg, mut edge) = (start, from);
        loop {
            used[seg] = true;
            let (a, b) = segments[seg];
            edge = if a == edge { b } else { a };
            chain.push(edge);
            match at[&edge].iter().find(|&&s| !used[s]) {
                Some(&next) => seg = next,
                None => break,
            }
        }
        chain
    };
    // Open lines start at a boundary crossing; closed loops afterwards.
    for pass in 0..2 {
        for s in 0..segments.len() {
            if used[s] {
                continue;
            }
            let (a, b) = segments[s];
            let from = if pass == 1 || at[&a].len() == 1 {
                a
            } else if at[&b].len() == 1 {
                b
            } else {
                continue;
            };
            let chain = walk(s, from, &mut used);
            lines.push(
                chain
                    .into_iter()
                    .map(|e| crossing(x, y, z, level, e).expect("edge is crossed"))
                    .collect(),
            );
        }
    }
    lines
}

/// Contours of `P_k` at each level in `levels` (each in `(0, 1)`).
pub fn extract_contours(heatmap: &HeatmapData, k: usize, levels: &[f64]) -> Result<ContourSet> {
    if let Some(&l) = levels.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
        return Err(Error::Config(format!("contour level {l} outside (0, 1)")));
    }
    let z = heatmap.values(k);
    Ok(ContourSet {
        contours: levels
            .iter()
            .map(|&level| ContourLevel {
                level,
                polylines: contour_lines(&heatmap.mu_hyd, &heatmap.mu_dist, &z, level),
            })
            .collect(),
    })
}

/// Size of the coherence effect on one `P_k` map relative to the effect of
/// one grid step in either inflow ratio.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoherenceEffect {
    pub k: usize,
    /// `max |P_k^coh - P_k^incoh|` over the grid.
    pub max_difference: f64,
    /// Largest change of `P_k` between neighbouring cells of either map.
    pub max_step_variation: f64,
    pub insignificant: bool,
}

pub fn coherence_effect(
    coherent: &HeatmapData,
    incoherent: &HeatmapData,
    k: usize,
) -> Result<CoherenceEffect> {
    if coherent.mu_hyd != incoherent.mu_hyd || coherent.mu_dist != incoherent.mu_dist {
        return Err(Error::Config("heatmaps use different grids".into()));
    }
    let (a, b) = (coherent.values(k), incoherent.values(k));
    let max_difference = a
        .iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    let step = |g: &[Vec<f64>]| {
        let mut best: f64 = 0.0;
        for i in 0..g.len() {
            for j in 0..g[i].len() {
                if let Some(r) = g.get(i + 1) {
                    best = best.max((r[j] - g[i][j]).abs());
                }
                if let Some(v) = g[i].get(j + 1) {
                    best = best.max((v - g[i][j]).abs());
                }
            }
        }
        best
    };
    let max_step_variation = step(&a).max(step(&b));
    Ok(CoherenceEffect {
        k,
        max_difference,
        max_step_variation,
        insignificant: max_difference < max_step_variation,
    })
}
