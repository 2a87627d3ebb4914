//! Exact dark states of the coherent cluster.
//!
//! A dark state is a zero-phonon superposition annihilated by both
//! collective lowering operators `sum_i sigma_hyd,i` and
//! `sum_i sigma_dist,i`. Kernels are computed in rational arithmetic on
//! the qutrit space of unit levels; the operators lower `n2` (units at
//! `a = 2`) by one, so the kernel splits by `n2` and, further, by the
//! counts `(n0, n1)`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::basis::{BasisState, BONDED, DISPLACED, EXCITED};
use crate::dynamics::BlockDensityMatrix;
use crate::error::{Error, Result};
use crate::model::{Coupling, Mode};
use crate::system::OpenSystem;

/// Index of a level string in the `3^m` qutrit basis; unit 0 is the most
/// significant digit, so index order is label order.
pub fn qutrit_index(levels: &[u8]) -> usize {
    levels.iter().fold(0, |acc, &a| acc * 3 + a as usize)
}

pub fn qutrit_levels(m: usize, mut index: usize) -> Vec<u8> {
    let mut out = vec![0; m];
    for slot in out.iter_mut().rev() {
        *slot = (index % 3) as u8;
        index /= 3;
    }
    out
}

/// Ket label, e.g. `"120"`.
pub fn ket_label(levels: &[u8]) -> String {
    levels.iter().map(|a| char::from(b'0' + a)).collect()
}

pub fn parse_ket(label: &str, m: usize) -> Result<Vec<u8>> {
    let levels: Option<Vec<u8>> = label
        .chars()
        .map(|c| c.to_digit(3).map(|d| d as u8))
        .collect();
    match levels {
        Some(l) if l.len() == m => Ok(l),
        _ => Err(Error::Config(format!(
            "bad ket label {label:?} for m = {m}"
        ))),
    }
}

fn count(levels: &[u8], a: u8) -> usize {
    levels.iter().filter(|&&x| x == a).count()
}

/// Integer operator on the qutrit space, as `(row, col, value)` entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntOperator {
    pub dim: usize,
    pub entries: Vec<(usize, usize, i64)>,
}

impl IntOperator {
    pub fn apply(&self, v: &[(usize, BigInt)]) -> BTreeMap<usize, BigInt> {
        let mut by_col: BTreeMap<usize, Vec<(usize, i64)>> = BTreeMap::new();
        for &(r, c, x) in &self.entries {
            by_col.entry(c).or_default().push((r, x));
        }
        let mut out: BTreeMap<usize, BigInt> = BTreeMap::new();
        for (c, coeff) in v {
            for &(r, x) in by_col.get(c).into_iter().flatten() {
                *out.entry(r).or_default() += coeff * x;
            }
        }
        out.retain(|_, x| !x.is_zero());
        out
    }

    fn sum(&self, other: &Self) -> Self {
        let mut acc: BTreeMap<(usize, usize), i64> = BTreeMap::new();
        for &(r, c, x) in self.entries.iter().chain(&other.entries) {
            *acc.entry((r, c)).or_default() += x;
        }
        Self {
            dim: self.dim,
            entries: acc
                .into_iter()
                .filter(|(_, x)| *x != 0)
                .map(|((r, c), x)| (r, c, x))
                .collect(),
        }
    }
}

/// `sum_i sigma_mode,i` on the zero-phonon qutrit space.
pub fn collective_lowering(m: usize, mode: Mode) -> IntOperator {
    let target = match mode {
        Mode::Hyd => BONDED,
        Mode::Dist => DISPLACED,
    };
    let dim = 3usize.pow(m as u32);
    let mut entries = Vec::new();
    for col in 0..dim {
        let levels = qutrit_levels(m, col);
        for i in 0..m {
            if levels[i] == EXCITED {
                let mut t = levels.clone();
                t[i] = target;
                entries.push((qutrit_index(&t), col, 1));
            }
        }
    }
    entries.sort_unstable();
    IntOperator { dim, entries }
}

/// The summed relaxation operator over both modes.
pub fn collective_total(m: usize) -> IntOperator {
    collective_lowering(m, Mode::Hyd).sum(&collective_lowering(m, Mode::Dist))
}

/// Integer vector on the zero-phonon qutrit space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DarkVector {
    pub m: usize,
    /// Units at `a = 2`, when all components agree; `None` for mixtures.
    pub n2: Option<usize>,
    /// `(qutrit index, coefficient)`, ascending index, no zeros.
    pub components: Vec<(usize, BigInt)>,
}

impl DarkVector {
    pub fn new(m: usize, mut components: Vec<(usize, BigInt)>) -> Self {
        components.sort_by_key(|(i, _)| *i);
        let mut merged: Vec<(usize, BigInt)> = Vec::new();
        for (i, c) in components {
            match merged.last_mut() {
                Some((j, acc)) if *j == i => *acc += c,
                _ => merged.push((i, c)),
            }
        }
        merged.retain(|(_, c)| !c.is_zero());
        let mut n2s = merged
            .iter()
            .map(|(i, _)| count(&qutrit_levels(m, *i), EXCITED));
        let first = n2s.next();
        let n2 = match first {
            Some(k) if n2s.all(|x| x == k) => Some(k),
            _ => None,
        };
        Self {
            m,
            n2,
            components: merged,
        }
    }

    /// Build from `(ket label, coefficient)` terms.
    pub fn from_terms(m: usize, terms: &[(&str, i64)]) -> Result<Self> {
        let comps = terms
            .iter()
            .map(|(label, c)| Ok((qutrit_index(&parse_ket(label, m)?), BigInt::from(*c))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(m, comps))
    }

    pub fn is_zero(&self) -> bool {
        self.components.is_empty()
    }

    pub fn terms(&self) -> Vec<(String, BigInt)> {
        self.components
            .iter()
            .map(|(i, c)| (ket_label(&qutrit_levels(self.m, *i)), c.clone()))
            .collect()
    }

    /// Relabel units: unit `i` moves to position `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let comps = self
            .components
            .iter()
            .map(|(i, c)| {
                let levels = qutrit_levels(self.m, *i);
                let mut t = vec![0; self.m];
                for (u, &a) in levels.iter().enumerate() {
                    t[perm[u]] = a;
                }
                (qutrit_index(&t), c.clone())
            })
            .collect();
        Self::new(self.m, comps)
    }

    pub fn has_excitation(&self) -> bool {
        self.components
            .iter()
            .any(|(i, _)| qutrit_levels(self.m, *i).contains(&EXCITED))
    }
}

/// Dark subspace of one `n2` sector, as canonical echelon rows.
#[derive(Debug, Clone, PartialEq)]
pub struct DarkSector {
    pub n2: usize,
    pub basis: Vec<DarkVector>,
}

impl DarkSector {
    pub fn dimension(&self) -> usize {
        self.basis.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DarkBasis {
    pub m: usize,
    /// Sectors `n2 = 1..=m`, ascending.
    pub sectors: Vec<DarkSector>,
}

impl DarkBasis {
    pub fn dimension(&self) -> usize {
        self.sectors.iter().map(DarkSector::dimension).sum()
    }

    pub fn vectors(&self) -> impl Iterator<Item = &DarkVector> {
        self.sectors.iter().flat_map(|s| s.basis.iter())
    }

    /// Exact span membership.
    pub fn contains(&self, v: &DarkVector) -> bool {
        if v.m != self.m {
            return false;
        }
        let mut rest: BTreeMap<usize, BigRational> = v
            .components
            .iter()
            .map(|(i, c)| (*i, BigRational::from_integer(c.clone())))
            .collect();
        for row in self.vectors() {
            let (pivot, lead) = &row.components[0];
            let Some(x) = rest.get(pivot).cloned() else {
                continue;
            };
            let f = x / BigRational::from_integer(lead.clone());
            for (i, c) in &row.components {
                let e = rest.entry(*i).or_insert_with(BigRational::zero);
                *e -= &f * BigRational::from_integer(c.clone());
            }
            rest.retain(|_, x| !x.is_zero());
        }
        rest.is_empty()
    }

    /// Rank of a set of vectors, exactly.
    pub fn rank_of(vectors: &[DarkVector]) -> usize {
        let mut cols: Vec<usize> = vectors
            .iter()
            .flat_map(|v| v.components.iter().map(|(i, _)| *i))
            .collect();
        cols.sort_unstable();
        cols.dedup();
        let pos: BTreeMap<usize, usize> = cols.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        let mut rows: Vec<Vec<BigRational>> = vectors
            .iter()
            .map(|v| {
                let mut r = vec![BigRational::zero(); cols.len()];
                for (i, c) in &v.components {
                    r[pos[i]] = BigRational::from_integer(c.clone());
                }
                r
            })
            .collect();
        rref(&mut rows, cols.len()).len()
    }
}

/// In-place reduced row echelon form; returns pivot columns. Rows left
/// past the rank are zero and truncated.
fn rref(rows: &mut Vec<Vec<BigRational>>, ncols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == rows.len() {
            break;
        }
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = rows[r][c].recip();
        for x in rows[r].iter_mut() {
            *x *= &inv;
        }
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (x, y) in row.iter_mut().zip(&pivot_row).skip(c) {
                if !y.is_zero() {
                    *x -= &f * y;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    rows.truncate(r);
    pivots
}

/// Scale a rational row to coprime integers with a positive leading entry.
fn primitive(row: &[BigRational]) -> Vec<BigInt> {
    let lcm = row
        .iter()
        .filter(|x| !x.is_zero())
        .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = row.iter().map(|x| (x * &lcm).to_integer()).collect();
    let gcd = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    let sign = match ints.iter().find(|x| !x.is_zero()) {
        Some(x) if x.is_negative() => -BigInt::one(),
        _ => BigInt::one(),
    };
    ints.into_iter().map(|x| x / &gcd * &sign).collect()
}

/// Kernel of both collective operators on the states with level counts
/// `(n0, n1, n2)`, as canonical echelon rows.
fn subsector_kernel(m: usize, n0: usize, n1: usize, n2: usize) -> Vec<DarkVector> {
    let cols: Vec<usize> = (0..3usize.pow(m as u32))
        .filter(|&i| {
            let l = qutrit_levels(m, i);
            count(&l, BONDED) == n0 && count(&l, DISPLACED) == n1 && count(&l, EXCITED) == n2
        })
        .collect();
    // Rows: hyd images then dist images, keyed by (mode, qutrit index).
    let mut row_of: BTreeMap<(u8, usize), usize> = BTreeMap::new();
    let mut entries = Vec::new();
    for (k, &col) in cols.iter().enumerate() {
        let levels = qutrit_levels(m, col);
        for i in 0..m {
            if levels[i] != EXCITED {
                continue;
            }
            for (tag, target) in [(0u8, BONDED), (1, DISPLACED)] {
                let mut t = levels.clone();
                t[i] = target;
                let n = row_of.len();
                let r = *row_of.entry((tag, qutrit_index(&t))).or_insert(n);
                entries.push((r, k));
            }
        }
    }
    let mut a = vec![vec![BigRational::zero(); cols.len()]; row_of.len()];
    for (r, k) in entries {
        a[r][k] += BigRational::one();
    }
    let pivots = rref(&mut a, cols.len());
    let free: Vec<usize> = (0..cols.len()).filter(|c| !pivots.contains(c)).collect();
    let mut kernel: Vec<Vec<BigRational>> = free
        .iter()
        .map(|&f| {
            let mut v = vec![BigRational::zero(); cols.len()];
            v[f] = BigRational::one();
            for (r, &p) in pivots.iter().enumerate() {
                v[p] = -a[r][f].clone();
            }
            v
        })
        .collect();
    rref(&mut kernel, cols.len());
    kernel
        .iter()
        .map(|row| {
            let comps = primitive(row)
                .into_iter()
                .enumerate()
                .filter(|(_, x)| !x.is_zero())
                .map(|(k, x)| (cols[k], x))
                .collect();
            DarkVector::new(m, comps)
        })
        .collect()
}

/// Exact dark subspace for `2 <= m <= 6`, sector by sector in `n2`.
/// Vectors without any excited unit are left out: every 2-free state is
/// annihilated trivially.
pub fn dark_basis(m: usize) -> Result<DarkBasis> {
    if !(2..=6).contains(&m) {
        return Err(Error::DarkRange(m as u32));
    }
    let sectors = (1..=m)
        .map(|n2| {
            let mut basis: Vec<DarkVector> = (0..=m - n2)
                .flat_map(|n0| subsector_kernel(m, n0, m - n2 - n0, n2))
                .collect();
            // Subsector supports are disjoint, so sorting by leading index
            // keeps the union in reduced echelon form.
            basis.sort_by_key(|v| v.components[0].0);
            DarkSector { n2, basis }
        })
        .collect();
    Ok(DarkBasis { m, sectors })
}

/// Checks of one candidate dark vector against a built coherent system.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DarkReport {
    pub terms: Vec<(String, i64)>,
    /// Largest coefficient of `sum sigma_hyd |D>`, exact.
    pub hyd_residual: f64,
    pub dist_residual: f64,
    /// Largest coefficient of the summed relaxation operator applied.
    pub total_residual: f64,
    /// Spread of the diagonal energies of the components.
    pub energy_spread: f64,
    /// `max |H|D> - E|D>|` with the vector normalized.
    pub interaction_residual: f64,
    /// `max |L(|D><D|)|` with the vector normalized.
    pub lindblad_residual: f64,
    pub passed: bool,
}

fn max_abs(v: &BTreeMap<usize, BigInt>) -> f64 {
    v.values()
        .map(|x| x.abs().to_f64().unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max)
}

fn zero_phonon_state(system: &OpenSystem, levels: &[u8]) -> Option<usize> {
    let regs = system.config.spec.phonon_registers();
    system.space.position(&BasisState {
        p_hyd: vec![0; regs],
        p_dist: vec![0; regs],
        levels: levels.to_vec(),
    })
}

/// Normalized amplitudes of `v` on the system's basis, or `None` if some
/// component is not in the space.
pub fn embed(v: &DarkVector, system: &OpenSystem) -> Option<Vec<(usize, f64)>> {
    let norm = v
        .components
        .iter()
        .map(|(_, c)| c.to_f64().unwrap_or(f64::INFINITY).powi(2))
        .sum::<f64>()
        .sqrt();
    v.components
        .iter()
        .map(|(i, c)| {
            zero_phonon_state(system, &qutrit_levels(v.m, *i))
                .map(|s| (s, c.to_f64().unwrap_or(f64::INFINITY) / norm))
        })
        .collect()
}

/// `|D><D|` as a block density matrix of `system`.
pub fn dark_density(v: &DarkVector, system: &OpenSystem) -> Result<BlockDensityMatrix> {
    let amps = embed(v, system)
        .ok_or_else(|| Error::Config("dark vector is not in the state space".into()))?;
    let mut rho = BlockDensityMatrix::zeros(&system.partition);
    let comps: Vec<(usize, Complex64)> = amps
        .iter()
        .map(|&(i, a)| (i, Complex64::new(a, 0.0)))
        .collect();
    rho.add_pure(&system.partition, 1.0, &comps)?;
    Ok(rho)
}

type SparseVec = BTreeMap<usize, Complex64>;

fn sparse_apply(entries: &[(usize, usize, Complex64)], v: &SparseVec) -> SparseVec {
    let mut out = SparseVec::new();
    for &(r, c, x) in entries {
        if let Some(y) = v.get(&c) {
            *out.entry(r).or_default() += x * y;
        }
    }
    out
}

fn add_outer(
    acc: &mut BTreeMap<(usize, usize), Complex64>,
    scale: Complex64,
    a: &SparseVec,
    b: &SparseVec,
) {
    for (&i, x) in a {
        for (&j, y) in b {
            *acc.entry((i, j)).or_default() += scale * x * y.conj();
        }
    }
}

/// Evaluate `v` against the exact dark conditions and the full generator
/// of `system` (which must be coherent with the same `m`). Never fails;
/// problems show up as a failing report.
pub fn verify_dark(v: &DarkVector, system: &OpenSystem) -> DarkReport {
    let m = v.m;
    let hyd_residual = max_abs(&collective_lowering(m, Mode::Hyd).apply(&v.components));
    let dist_residual = max_abs(&collective_lowering(m, Mode::Dist).apply(&v.components));
    let total_residual = max_abs(&collective_total(m).apply(&v.components));
    let terms = v
        .terms()
        .into_iter()
        .map(|(l, c)| (l, c.to_i64().unwrap_or(i64::MAX)))
        .collect();

    let embedded = (system.config.spec.coupling == Coupling::Coherent && system.m() == m)
        .then(|| embed(v, system))
        .flatten();
    let Some(amps) = embedded.filter(|a| !a.is_empty()) else {
        return DarkReport {
            terms,
            hyd_residual,
            dist_residual,
            total_residual,
            energy_spread: f64::INFINITY,
            interaction_residual: f64::INFINITY,
            lindblad_residual: f64::INFINITY,
            passed: false,
        };
    };

    let h = &system.hamiltonian_sparse;
    let diag = h.diagonal();
    let energies: Vec<f64> = amps.iter().map(|&(i, _)| diag[i]).collect();
    let e_max = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e_min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let energy_spread = e_max - e_min;

    let psi: SparseVec = amps
        .iter()
        .map(|&(i, a)| (i, Complex64::new(a, 0.0)))
        .collect();
    let hpsi = sparse_apply(h.entries(), &psi);
    let mut keys: Vec<usize> = hpsi.keys().chain(psi.keys()).copied().collect();
    keys.sort_unstable();
    keys.dedup();
    let interaction_residual = keys
        .iter()
        .map(|k| {
            let hv = hpsi.get(k).copied().unwrap_or_default();
            let pv = psi.get(k).copied().unwrap_or_default();
            (hv - pv * e_min).norm()
        })
        .fold(0.0, f64::max);

    // L(rho) for rho = |psi><psi|.
    let hbar = system.hbar();
    let rates = &system.config.rates;
    let mut acc: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
    let minus_i = Complex64::new(0.0, -1.0 / hbar);
    add_outer(&mut acc, minus_i, &hpsi, &psi);
    add_outer(&mut acc, -minus_i, &psi, &hpsi);
    for op in &system.jumps {
        let a = op.annihilation_matrix();
        let ad = op.creation_matrix();
        for (rate, fwd, back) in [
            (rates.gamma(op.mode), &a, &ad),
            (rates.inflow(op.mode), &ad, &a),
        ] {
            if rate == 0.0 {
                continue;
            }
            let r = Complex64::new(rate / hbar, 0.0);
            let jpsi = sparse_apply(fwd.entries(), &psi);
            let npsi = sparse_apply(back.entries(), &jpsi);
            add_outer(&mut acc, r, &jpsi, &jpsi);
            add_outer(&mut acc, -r * 0.5, &npsi, &psi);
            add_outer(&mut acc, -r * 0.5, &psi, &npsi);
        }
    }
    let lindblad_residual = acc.values().map(|z| z.norm()).fold(0.0, f64::max);

    let passed = hyd_residual == 0.0
        && dist_residual == 0.0
        && energy_spread <= 1e-12
        && interaction_residual <= 1e-12
        && lindblad_residual <= 1e-12;
    DarkReport {
        terms,
        hyd_residual,
        dist_residual,
        total_residual,
        energy_spread,
        interaction_residual,
        lindblad_residual,
        passed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Config, RateConfig};

    const D3: [(&str, i64); 6] = [
        ("120", 1),
        ("102", -1),
        ("210", -1),
        ("201", 1),
        ("012", 1),
        ("021", -1),
    ];

    /// Place a three-unit vector on `units` of four, with `rest` elsewhere.
    fn embed4(units: [usize; 3], rest: char) -> Vec<(String, i64)> {
        let spare = (0..4).find(|u| !units.contains(u)).unwrap();
        D3.iter()
            .map(|(label, c)| {
                let mut s = ['?'; 4];
                for (u, ch) in units.iter().zip(label.chars()) {
                    s[*u] = ch;
                }
                s[spare] = rest;
                (s.iter().collect(), *c)
            })
            .collect()
    }

    fn vector(m: usize, terms: &[(String, i64)]) -> DarkVector {
        let t: Vec<(&str, i64)> = terms.iter().map(|(l, c)| (l.as_str(), *c)).collect();
        DarkVector::from_terms(m, &t).unwrap()
    }

    fn four_unit_list() -> Vec<DarkVector> {
        let mut out = Vec::new();
        for rest in ['0', '1'] {
            for units in [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]] {
                out.push(vector(4, &embed4(units, rest)));
            }
        }
        let extra: [&[(&str, i64)]; 3] = [
            &[
                ("1210", 1),
                ("1201", -1),
                ("1012", -1),
                ("1021", 1),
                ("2110", -1),
                ("2101", 1),
                ("0112", 1),
                ("0121", -1),
            ],
            &[
                ("1020", 1),
                ("1002", -1),
                ("2010", -1),
                ("2001", 1),
                ("0120", -1),
                ("0102", 1),
                ("0210", 1),
                ("0201", -1),
            ],
            &[
                ("1120", 1),
                ("1102", -1),
                ("1200", 1),
                ("2100", -1),
                ("2011", -1),
                ("0211", 1),
                ("0012", -1),
                ("0021", 1),
                ("1210", -1),
                ("1012", 1),
                ("1020", -1),
                ("2101", 1),
                ("2010", 1),
                ("0121", -1),
                ("0102", 1),
                ("0201", -1),
            ],
        ];
        for terms in extra {
            out.push(DarkVector::from_terms(4, terms).unwrap());
        }
        out
    }

    /// Rank over GF(p) of the stacked operators on all states with at
    /// least one excited unit, dense and without any sector split.
    fn kernel_dim_mod_p(m: usize) -> usize {
        const P: u64 = 2_147_483_647;
        let dim = 3usize.pow(m as u32);
        let cols: Vec<usize> = (0..dim)
            .filter(|&i| qutrit_levels(m, i).contains(&2))
            .collect();
        let mut a = vec![vec![0u64; cols.len()]; 2 * dim];
        for (k, &c) in cols.iter().enumerate() {
            let l = qutrit_levels(m, c);
            for i in 0..m {
                if l[i] == 2 {
                    for (off, t) in [(0, 0u8), (dim, 1)] {
                        let mut s = l.clone();
                        s[i] = t;
                        a[off + qutrit_index(&s)][k] += 1;
                    }
                }
            }
        }
        let inv = |x: u64| {
            let (mut r, mut b, mut e) = (1u64, x, P - 2);
            while e > 0 {
                if e & 1 == 1 {
                    r = r * b % P;
                }
                b = b * b % P;
                e >>= 1;
            }
            r
        };
        let mut rank = 0;
        for c in 0..cols.len() {
            let Some(p) = (rank..a.len()).find(|&i| a[i][c] != 0) else {
                continue;
            };
            a.swap(rank, p);
            let iv = inv(a[rank][c]);
            let pivot: Vec<u64> = a[rank].iter().map(|x| x * iv % P).collect();
            for row in a.iter_mut().skip(rank + 1) {
                let f = row[c];
                if f != 0 {
                    for (x, y) in row.iter_mut().zip(&pivot) {
                        *x = (*x + P - f * y % P) % P;
                    }
                }
            }
            rank += 1;
        }
        cols.len() - rank
    }

    #[test]
    fn qutrit_labels_round_trip() {
        for i in 0..81 {
            let l = qutrit_levels(4, i);
            assert_eq!(qutrit_index(&l), i);
            assert_eq!(parse_ket(&ket_label(&l), 4).unwrap(), l);
        }
        assert!(parse_ket("13", 2).is_err());
        assert!(parse_ket("120", 2).is_err());
    }

    #[test]
    fn collective_lowering_actions() {
        let hyd = collective_lowering(3, Mode::Hyd);
        let v = DarkVector::from_terms(3, &[("120", 1)]).unwrap();
        let out = hyd.apply(&v.components);
        assert_eq!(out.len(), 1);
        assert_eq!(out.get(&qutrit_index(&[1, 0, 0])), Some(&BigInt::from(1)));

        let dist = collective_lowering(3, Mode::Dist);
        for label in ["000", "101", "011", "111"] {
            let v = DarkVector::from_terms(3, &[(label, 1)]).unwrap();
            assert!(dist.apply(&v.components).is_empty());
        }
        let total = collective_total(3);
        assert_eq!(total.entries.len(), hyd.entries.len() + dist.entries.len());
    }

    #[test]
    fn two_units_have_no_dark_states() {
        assert_eq!(dark_basis(2).unwrap().dimension(), 0);
    }

    #[test]
    fn three_unit_dark_state_is_unique() {
        let basis = dark_basis(3).unwrap();
        assert_eq!(basis.dimension(), 1);
        let d = DarkVector::from_terms(3, &D3).unwrap();
        assert!(basis.contains(&d));
        let found = basis.vectors().next().unwrap();
        let flipped: Vec<(usize, BigInt)> = d.components.iter().map(|(i, c)| (*i, -c)).collect();
        assert!(found == &d || found.components == flipped);
        assert_eq!(found.n2, Some(1));
    }

    #[test]
    fn four_unit_list_spans_the_dark_space() {
        let basis = dark_basis(4).unwrap();
        assert_eq!(basis.dimension(), 6);
        let list = four_unit_list();
        for v in &list {
            assert!(basis.contains(v), "{:?}", v.terms());
        }
        assert_eq!(DarkBasis::rank_of(&list), 6);
        assert!(!basis.contains(&DarkVector::from_terms(4, &[("1200", 1)]).unwrap()));
    }

    #[test]
    fn dimensions_match_dense_rank_oracle() {
        for m in 2..=5 {
            assert_eq!(
                dark_basis(m).unwrap().dimension(),
                kernel_dim_mod_p(m),
                "m = {m}"
            );
        }
    }

    #[test]
    fn basis_rows_are_dark_and_canonical() {
        for m in 2..=6 {
            let basis = dark_basis(m).unwrap();
            let hyd = collective_lowering(m, Mode::Hyd);
            let dist = collective_lowering(m, Mode::Dist);
            let leads: Vec<usize> = basis.vectors().map(|v| v.components[0].0).collect();
            for s in &basis.sectors {
                let l: Vec<usize> = s.basis.iter().map(|v| v.components[0].0).collect();
                assert!(l.windows(2).all(|w| w[0] < w[1]));
            }
            for v in basis.vectors() {
                assert!(v.has_excitation());
                assert!(hyd.apply(&v.components).is_empty());
                assert!(dist.apply(&v.components).is_empty());
                assert!(v.components[0].1.is_positive());
                // Pivot columns appear in no other row.
                for &p in &leads {
                    if p != v.components[0].0 {
                        assert!(v.components.iter().all(|(i, _)| *i != p));
                    }
                }
            }
        }
    }

    #[test]
    fn dark_space_is_permutation_invariant() {
        for m in [3, 4, 5] {
            let basis = dark_basis(m).unwrap();
            let mut perm: Vec<usize> = (1..m).collect();
            perm.push(0);
            let swap: Vec<usize> = (0..m).map(|i| if i < 2 { 1 - i } else { i }).collect();
            for v in basis.vectors() {
                assert!(basis.contains(&v.permuted(&perm)));
                assert!(basis.contains(&v.permuted(&swap)));
            }
        }
    }

    #[test]
    fn out_of_range_sizes_are_rejected() {
        assert_eq!(dark_basis(1).unwrap_err().code(), "DARK_RANGE");
        assert_eq!(dark_basis(7).unwrap_err().code(), "DARK_RANGE");
    }

    fn coherent(m: u32) -> OpenSystem {
        OpenSystem::build(&Config::new(m, Coupling::Coherent).with_rates(RateConfig::default()))
            .unwrap()
    }

    #[test]
    fn verification_accepts_dark_vectors() {
        let sys = coherent(3);
        let report = verify_dark(&DarkVector::from_terms(3, &D3).unwrap(), &sys);
        assert!(report.passed, "{report:?}");
        assert_eq!(report.total_residual, 0.0);

        let sys = coherent(4);
        let report = verify_dark(&four_unit_list()[0], &sys);
        assert!(report.passed, "{report:?}");
    }

    #[test]
    fn verification_rejects_a_lone_ket() {
        let sys = coherent(3);
        let report = verify_dark(&DarkVector::from_terms(3, &[("120", 1)]).unwrap(), &sys);
        assert!(!report.passed);
        assert_eq!(report.hyd_residual, 1.0);
        assert!(report.lindblad_residual > 1e-3);
    }

    #[test]
    fn verification_fails_on_a_mismatched_system() {
        let report = verify_dark(&DarkVector::from_terms(3, &D3).unwrap(), &coherent(2));
        assert!(!report.passed);
    }
}
