//! Hamiltonian and jump operators on a [`StateSpace`].
//!
//! Every operator in this model has real entries: the rotating-wave
//! exchange `g (a^dag sigma + a sigma^dag)` with real `g`, and bosonic
//! `sqrt(n)` amplitudes for the phonon ladders.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::basis::{BasisState, BlockPartition, StateSpace, BONDED, DISPLACED, EXCITED};
use crate::error::{Error, Result};
use crate::model::{Mode, ModelParams};

/// Coordinate-format complex matrix with unique, in-range entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, Complex64)>,
}

impl SparseMatrix {
    pub fn new(
        rows: usize,
        cols: usize,
        mut entries: Vec<(usize, usize, Complex64)>,
    ) -> Result<Self> {
        entries.sort_by_key(|&(r, c, _)| (r, c));
        for w in entries.windows(2) {
            if (w[0].0, w[0].1) == (w[1].0, w[1].1) {
                return Err(Error::Config(format!(
                    "duplicate entry ({}, {})",
                    w[0].0, w[0].1
                )));
            }
        }
        if let Some(&(r, c, _)) = entries.iter().find(|&&(r, c, _)| r >= rows || c >= cols) {
            return Err(Error::Config(format!(
                "entry ({r}, {c}) outside {rows}x{cols}"
            )));
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[(usize, usize, Complex64)] {
        &self.entries
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.entries
            .binary_search_by_key(&(r, c), |&(r, c, _)| (r, c))
            .map(|k| self.entries[k].2)
            .unwrap_or_default()
    }

    /// Real part of the diagonal, zero where absent.
    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.rows.min(self.cols)];
        for &(r, c, v) in &self.entries {
            if r == c {
                d[r] = v.re;
            }
        }
        d
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.rows, self.cols);
        for &(r, c, v) in &self.entries {
            m[(r, c)] = v;
        }
        m
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::default(); self.rows];
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
        y
    }
}

fn proton_flags(level: u8) -> (bool, bool) {
    match level {
        BONDED => (false, true),
        DISPLACED => (true, false),
        EXCITED => (true, true),
        _ => unreachable!("levels are 0, 1 or 2"),
    }
}

/// Free energy `hbar*Omega_hyd*(p_hyd + n_{l=1}) + hbar*Omega_dist*(p_dist + n_{d=1})`.
pub fn free_energy(state: &BasisState, params: &ModelParams) -> f64 {
    let (mut nl, mut nd) = (0u32, 0u32);
    for &a in &state.levels {
        let (l, d) = proton_flags(a);
        nl += l as u32;
        nd += d as u32;
    }
    params.hbar
        * (params.omega_hyd * (state.total_phonons(Mode::Hyd) + nl) as f64
            + params.omega_dist * (state.total_phonons(Mode::Dist) + nd) as f64)
}

/// Level a unit falls to when it emits a phonon of `mode`.
pub fn lowered_level(mode: Mode) -> u8 {
    match mode {
        Mode::Hyd => BONDED,
        Mode::Dist => DISPLACED,
    }
}

/// Sparse Hamiltonian on the whole space.
pub fn hamiltonian_matrix(space: &StateSpace, params: &ModelParams) -> SparseMatrix {
    let spec = &space.spec;
    let mut entries = Vec::new();
    for (i, s) in space.states().iter().enumerate() {
        entries.push((i, i, Complex64::new(free_energy(s, params), 0.0)));
        for unit in 0..space.m() {
            if s.levels[unit] != EXCITED {
                continue;
            }
            let reg = spec.register_of(unit);
            for mode in Mode::BOTH {
                // a^dag sigma: unit drops, phonon created; the conjugate
                // entry is written alongside.
                let mut t = s.clone();
                t.levels[unit] = lowered_level(mode);
                t.phonons_mut(mode)[reg] += 1;
                if let Some(j) = space.position(&t) {
                    let amp = params.g(mode) * (t.phonons(mode)[reg] as f64).sqrt();
                    entries.push((j, i, Complex64::new(amp, 0.0)));
                    entries.push((i, j, Complex64::new(amp, 0.0)));
                }
            }
        }
    }
    SparseMatrix::new(space.len(), space.len(), entries).expect("exchange pairs are unique")
}

/// One phonon register: its annihilation action (leakage) and creation
/// action (inflow), each as a per-state image with bosonic amplitude.
#[derive(Debug, Clone)]
pub struct JumpOperator {
    pub id: usize,
    pub mode: Mode,
    /// Unit that owns the register, `None` for a shared mode.
    pub unit: Option<usize>,
    pub register: usize,
    lower: Vec<Option<(usize, f64)>>,
    raise: Vec<Option<(usize, f64)>>,
    /// States whose creation image is allowed by the cap but missing from
    /// the space (decay closure only).
    pub raise_misses: Vec<usize>,
}

impl JumpOperator {
    pub fn lower(&self, state: usize) -> Option<(usize, f64)> {
        self.lower[state]
    }

    pub fn raise(&self, state: usize) -> Option<(usize, f64)> {
        self.raise[state]
    }

    /// Diagonal of `A^dag A` in the truncated space.
    pub fn lower_weight(&self, state: usize) -> f64 {
        self.lower[state].map_or(0.0, |(_, a)| a * a)
    }

    /// Diagonal of `A A^dag` in the truncated space.
    pub fn raise_weight(&self, state: usize) -> f64 {
        self.raise[state].map_or(0.0, |(_, a)| a * a)
    }

    fn as_matrix(n: usize, action: &[Option<(usize, f64)>]) -> SparseMatrix {
        let entries = action
            .iter()
            .enumerate()
            .filter_map(|(i, img)| img.map(|(j, a)| (j, i, Complex64::new(a, 0.0))))
            .collect();
        SparseMatrix::new(n, n, entries).expect("images are unique per source")
    }

    pub fn annihilation_matrix(&self) -> SparseMatrix {
        Self::as_matrix(self.lower.len(), &self.lower)
    }

    pub fn creation_matrix(&self) -> SparseMatrix {
        Self::as_matrix(self.raise.len(), &self.raise)
    }

    pub fn label(&self) -> String {
        match self.unit {
            Some(u) => format!("a_{}[{}]", self.mode.name(), u + 1),
            None => format!("a_{}", self.mode.name()),
        }
    }
}

/// One jump operator per phonon register, ordered unit by unit and hyd
/// before dist within a unit.
pub fn build_jump_operators(space: &StateSpace) -> Vec<JumpOperator> {
    let spec = &space.spec;
    let regs = spec.phonon_registers();
    let shared = regs == 1 && spec.coupling == crate::model::Coupling::Coherent;
    let mut out = Vec::new();
    for reg in 0..regs {
        for mode in Mode::BOTH {
            let cap = spec.cap(mode) as u8;
            let mut lower = Vec::with_capacity(space.len());
            let mut raise = Vec::with_capacity(space.len());
            let mut raise_misses = Vec::new();
            for (i, s) in space.states().iter().enumerate() {
                let p = s.phonons(mode)[reg];
                lower.push(if p > 0 {
                    let mut t = s.clone();
                    t.phonons_mut(mode)[reg] -= 1;
                    space.position(&t).map(|j| (j, (p as f64).sqrt()))
                } else {
                    None
                });
                raise.push(if p < cap {
                    let mut t = s.clone();
                    t.phonons_mut(mode)[reg] += 1;
                    let img = space.position(&t).map(|j| (j, (p as f64 + 1.0).sqrt()));
                    if img.is_none() {
                        raise_misses.push(i);
                    }
                    img
                } else {
                    None
                });
            }
            out.push(JumpOperator {
                id: out.len(),
                mode,
                unit: if shared { None } else { Some(reg) },
                register: reg,
                lower,
                raise,
                raise_misses,
            });
        }
    }
    out
}

/// Dense Hamiltonian block with its cached spectral decomposition.
#[derive(Debug, Clone)]
pub struct HamiltonianBlock {
    pub matrix: DMatrix<f64>,
    pub energies: DVector<f64>,
    /// Orthogonal eigenvector matrix, columns are eigenvectors.
    pub vectors: DMatrix<f64>,
}

impl HamiltonianBlock {
    fn new(matrix: DMatrix<f64>) -> Self {
        let eig = SymmetricEigen::new(matrix.clone());
        Self {
            matrix,
            energies: eig.eigenvalues,
            vectors: eig.eigenvectors,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Real and imaginary parts of `exp(-i H t / hbar)`.
    pub fn propagator(&self, t_over_hbar: f64) -> (DMatrix<f64>, DMatrix<f64>) {
        let v = &self.vectors;
        let mut vc = v.clone();
        let mut vs = v.clone();
        for (k, &e) in self.energies.iter().enumerate() {
            let phase = e * t_over_hbar;
            vc.column_mut(k).scale_mut(phase.cos());
            vs.column_mut(k).scale_mut(-phase.sin());
        }
        (&vc * v.transpose(), &vs * v.transpose())
    }

    pub fn reconstruction_error(&self) -> f64 {
        let d = DMatrix::from_diagonal(&self.energies);
        let back = &self.vectors * d * self.vectors.transpose();
        (back - &self.matrix).amax()
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.matrix - self.matrix.transpose()).amax()
    }
}

#[derive(Debug, Clone)]
pub struct HamiltonianBlocks {
    pub hbar: f64,
    pub blocks: Vec<HamiltonianBlock>,
}

pub fn build_hamiltonian(
    h: &SparseMatrix,
    partition: &BlockPartition,
    params: &ModelParams,
) -> HamiltonianBlocks {
    let mut dense: Vec<DMatrix<f64>> = partition
        .blocks
        .iter()
        .map(|b| DMatrix::zeros(b.len(), b.len()))
        .collect();
    for &(r, c, v) in h.entries() {
        let b = partition.block_of[r];
        debug_assert_eq!(b, partition.block_of[c]);
        dense[b][(partition.local_of[r], partition.local_of[c])] = v.re;
    }
    HamiltonianBlocks {
        hbar: params.hbar,
        blocks: dense.into_iter().map(HamiltonianBlock::new).collect(),
    }
}
