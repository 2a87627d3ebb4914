//! Reachable Hilbert-space basis and its block partition.
//!
//! Each unit carries two proton registers, `l` (proton excited) and `d`
//! (proton close to the partner oxygen). The reachable basis is found by a
//! breadth-first closure on those raw registers starting from the
//! all-excited state, then compressed to the three-level label
//!
//! | level | l | d | meaning                    |
//! |-------|---|---|----------------------------|
//! | 0     | 0 | 1 | hydrogen bond formed       |
//! | 1     | 1 | 0 | proton displaced           |
//! | 2     | 1 | 1 | excited, at the bond point |
//!
//! The `(l, d) = (0, 0)` configuration is never reached.

use std::collections::{HashMap, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ClosureMode, ClusterSpec, Coupling, Mode};
use crate::operators::{JumpOperator, SparseMatrix};

pub const BONDED: u8 = 0;
pub const DISPLACED: u8 = 1;
pub const EXCITED: u8 = 2;

/// One basis ket. Phonon vectors have one entry per unit for incoherent
/// clusters and a single shared entry for coherent ones.
///
/// The derived ordering is the canonical order: lexicographic on
/// `(p_hyd, p_dist, levels)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct BasisState {
    pub p_hyd: Vec<u8>,
    pub p_dist: Vec<u8>,
    pub levels: Vec<u8>,
}

impl BasisState {
    pub fn all_excited(spec: &ClusterSpec) -> Self {
        let regs = spec.phonon_registers();
        Self {
            p_hyd: vec![0; regs],
            p_dist: vec![0; regs],
            levels: vec![EXCITED; spec.m as usize],
        }
    }

    pub fn phonons(&self, mode: Mode) -> &[u8] {
        match mode {
            Mode::Hyd => &self.p_hyd,
            Mode::Dist => &self.p_dist,
        }
    }

    pub fn phonons_mut(&mut self, mode: Mode) -> &mut Vec<u8> {
        match mode {
            Mode::Hyd => &mut self.p_hyd,
            Mode::Dist => &mut self.p_dist,
        }
    }

    pub fn total_phonons(&self, mode: Mode) -> u32 {
        self.phonons(mode).iter().map(|&p| p as u32).sum()
    }

    pub fn count_level(&self, level: u8) -> usize {
        self.levels.iter().filter(|&&a| a == level).count()
    }

    /// Number of formed hydrogen bonds (units at level 0).
    pub fn bonds(&self) -> usize {
        self.count_level(BONDED)
    }

    pub fn is_zero_phonon(&self) -> bool {
        self.p_hyd.iter().chain(&self.p_dist).all(|&p| p == 0)
    }

    /// Levels as a digit string, unit 1 first, e.g. `"120"`.
    pub fn level_label(&self) -> String {
        self.levels.iter().map(|a| char::from(b'0' + a)).collect()
    }
}

impl std::fmt::Display for BasisState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let join = |v: &[u8]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        write!(
            f,
            "|{};{};{}>",
            join(&self.p_hyd),
            join(&self.p_dist),
            self.level_label()
        )
    }
}

/// Uncompressed registers used during the closure search.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct RawState {
    p_hyd: Vec<u8>,
    p_dist: Vec<u8>,
    l: Vec<bool>,
    d: Vec<bool>,
}

impl RawState {
    fn initial(spec: &ClusterSpec) -> Self {
        let regs = spec.phonon_registers();
        let m = spec.m as usize;
        Self {
            p_hyd: vec![0; regs],
            p_dist: vec![0; regs],
            l: vec![true; m],
            d: vec![true; m],
        }
    }

    fn compress(&self) -> BasisState {
        let levels = self
            .l
            .iter()
            .zip(&self.d)
            .map(|(&l, &d)| match (l, d) {
                (false, true) => BONDED,
                (true, false) => DISPLACED,
                (true, true) => EXCITED,
                (false, false) => unreachable!("(l=0, d=0) is outside the lambda system"),
            })
            .collect();
        BasisState {
            p_hyd: self.p_hyd.clone(),
            p_dist: self.p_dist.clone(),
            levels,
        }
    }

    fn phonons_mut(&mut self, mode: Mode) -> &mut Vec<u8> {
        match mode {
            Mode::Hyd => &mut self.p_hyd,
            Mode::Dist => &mut self.p_dist,
        }
    }

    /// Exchange partners under `g (a^dag sigma + a sigma^dag)` for both modes.
    ///
    /// sigma_hyd lowers `l` and only acts with `d = 1`; sigma_dist lowers `d`
    /// and only acts with `l = 1`.
    fn exchange_partners(&self, spec: &ClusterSpec, out: &mut Vec<RawState>) {
        for unit in 0..spec.m as usize {
            let reg = spec.register_of(unit);
            for mode in Mode::BOTH {
                let cap = spec.cap(mode) as u8;
                let (lowered, raised) = match mode {
                    Mode::Hyd => (self.d[unit] && self.l[unit], self.d[unit] && !self.l[unit]),
                    Mode::Dist => (self.l[unit] && self.d[unit], self.l[unit] && !self.d[unit]),
                };
                let p = match mode {
                    Mode::Hyd => self.p_hyd[reg],
                    Mode::Dist => self.p_dist[reg],
                };
                if lowered && p < cap {
                    let mut next = self.clone();
                    next.phonons_mut(mode)[reg] += 1;
                    match mode {
                        Mode::Hyd => next.l[unit] = false,
                        Mode::Dist => next.d[unit] = false,
                    }
                    out.push(next);
                }
                if raised && p > 0 {
                    let mut next = self.clone();
                    next.phonons_mut(mode)[reg] -= 1;
                    match mode {
                        Mode::Hyd => next.l[unit] = true,
                        Mode::Dist => next.d[unit] = true,
                    }
                    out.push(next);
                }
            }
        }
    }

    fn leak_partners(&self, spec: &ClusterSpec, pump: bool, out: &mut Vec<RawState>) {
        for mode in Mode::BOTH {
            let cap = spec.cap(mode) as u8;
            for reg in 0..spec.phonon_registers() {
                let p = match mode {
                    Mode::Hyd => self.p_hyd[reg],
                    Mode::Dist => self.p_dist[reg],
                };
                if p > 0 {
                    let mut next = self.clone();
                    next.phonons_mut(mode)[reg] -= 1;
                    out.push(next);
                }
                if pump && p < cap {
                    let mut next = self.clone();
                    next.phonons_mut(mode)[reg] += 1;
                    out.push(next);
                }
            }
        }
    }
}

/// The ordered reachable basis with its inverse index.
#[derive(Debug, Clone)]
pub struct StateSpace {
    pub spec: ClusterSpec,
    pub closure: ClosureMode,
    states: Vec<BasisState>,
    index: HashMap<BasisState, usize>,
}

impl StateSpace {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[BasisState] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &BasisState {
        &self.states[i]
    }

    pub fn position(&self, state: &BasisState) -> Option<usize> {
        self.index.get(state).copied()
    }

    pub fn initial_index(&self) -> usize {
        self.position(&BasisState::all_excited(&self.spec))
            .expect("closure always contains its seed")
    }

    pub fn m(&self) -> usize {
        self.spec.m as usize
    }
}

/// Breadth-first closure from the all-excited state.
pub fn enumerate_states(spec: &ClusterSpec, closure: ClosureMode) -> StateSpace {
    let pump = closure == ClosureMode::PumpClosure;
    let seed = RawState::initial(spec);
    let mut seen: HashMap<RawState, ()> = HashMap::new();
    let mut queue = VecDeque::new();
    seen.insert(seed.clone(), ());
    queue.push_back(seed);
    let mut scratch = Vec::new();
    while let Some(s) = queue.pop_front() {
        scratch.clear();
        s.exchange_partners(spec, &mut scratch);
        s.leak_partners(spec, pump, &mut scratch);
        for next in scratch.drain(..) {
            if !seen.contains_key(&next) {
                seen.insert(next.clone(), ());
                queue.push_back(next);
            }
        }
    }

    let mut states: Vec<BasisState> = seen.keys().map(RawState::compress).collect();
    states.sort();
    let index = states
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), i))
        .collect();
    StateSpace {
        spec: spec.clone(),
        closure,
        states,
        index,
    }
}

/// Conserved label of a unitary-invariant sector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(untagged)]
pub enum SectorLabel {
    /// Coherent: `(n0 - p_hyd, n1 - p_dist)`.
    Charge { hyd: i32, dist: i32 },
    /// Incoherent: the same charge, unit by unit.
    Units(Vec<(i32, i32)>),
}

impl std::fmt::Display for SectorLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SectorLabel::Charge { hyd, dist } => write!(f, "({hyd},{dist})"),
            SectorLabel::Units(units) => {
                let parts: Vec<String> = units.iter().map(|(h, d)| format!("({h},{d})")).collect();
                write!(f, "[{}]", parts.join(""))
            }
        }
    }
}

pub fn sector_charge(state: &BasisState, spec: &ClusterSpec) -> SectorLabel {
    match spec.coupling {
        Coupling::Coherent => SectorLabel::Charge {
            hyd: state.count_level(BONDED) as i32 - state.p_hyd[0] as i32,
            dist: state.count_level(DISPLACED) as i32 - state.p_dist[0] as i32,
        },
        Coupling::Incoherent => SectorLabel::Units(
            state
                .levels
                .iter()
                .enumerate()
                .map(|(i, &a)| {
                    (
                        (a == BONDED) as i32 - state.p_hyd[i] as i32,
                        (a == DISPLACED) as i32 - state.p_dist[i] as i32,
                    )
                })
                .collect(),
        ),
    }
}

/// Dimension-table summary of a partition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionStats {
    pub org_dim: usize,
    pub num_blocks: usize,
    pub max_block_dim: usize,
    /// `sum(dim_i^2) / org_dim^2`, as a fraction.
    pub memory_ratio: f64,
}

impl PartitionStats {
    pub fn memory_percent(&self) -> String {
        format!("{:.3}%", 100.0 * self.memory_ratio)
    }
}

/// Connected components of the Hamiltonian graph plus the block-to-block
/// routing of every jump operator.
#[derive(Debug, Clone)]
pub struct BlockPartition {
    pub blocks: Vec<Vec<usize>>,
    pub block_of: Vec<usize>,
    /// Position of each state inside its block.
    pub local_of: Vec<usize>,
    /// `routing[block][op]`: target block of the annihilation direction.
    pub routing: Vec<Vec<Option<usize>>>,
    /// `inflow_routing[block][op]`: target block of the creation direction.
    pub inflow_routing: Vec<Vec<Option<usize>>>,
    pub labels: Vec<SectorLabel>,
    /// True when every label occurs in exactly one block.
    pub labels_unique: bool,
    pub stats: PartitionStats,
}

impl BlockPartition {
    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Unitary-invariant blocks: connected components of the H graph, joined
/// where needed so that each jump operator carries a block into one block.
pub fn partition_blocks(
    space: &StateSpace,
    hamiltonian: &SparseMatrix,
    jumps: &[JumpOperator],
) -> Result<BlockPartition> {
    let n = space.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for &(r, c, v) in hamiltonian.entries() {
        if r != c && v.norm() != 0.0 {
            let (a, b) = (find(&mut parent, r), find(&mut parent, c));
            if a != b {
                let (lo, hi) = (a.min(b), a.max(b));
                parent[hi] = lo;
            }
        }
    }

    // A jump must carry a block into a single block. States reached from
    // one block by the same operator are merged until that holds; for the
    // coherent cluster this joins H-disconnected zero-phonon states that
    // share a sector.
    loop {
        let mut merged = false;
        for op in jumps {
            for action in [JumpOperator::lower, JumpOperator::raise] {
                let mut first: HashMap<usize, usize> = HashMap::new();
                for i in 0..n {
                    if let Some((j, _)) = action(op, i) {
                        let src = find(&mut parent, i);
                        let dst = find(&mut parent, j);
                        let prev = *first.entry(src).or_insert(dst);
                        let prev = find(&mut parent, prev);
                        if prev != dst {
                            let (lo, hi) = (prev.min(dst), prev.max(dst));
                            parent[hi] = lo;
                            merged = true;
                        }
                    }
                }
            }
        }
        if !merged {
            break;
        }
    }

    // Blocks ordered by their smallest member; members ascending.
    let mut block_of = vec![usize::MAX; n];
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut root_block: HashMap<usize, usize> = HashMap::new();
    for (i, slot) in block_of.iter_mut().enumerate() {
        let root = find(&mut parent, i);
        let b = *root_block.entry(root).or_insert_with(|| {
            blocks.push(Vec::new());
            blocks.len() - 1
        });
        *slot = b;
        blocks[b].push(i);
    }
    let mut local_of = vec![0; n];
    for members in &blocks {
        for (k, &i) in members.iter().enumerate() {
            local_of[i] = k;
        }
    }

    let route =
        |image: &dyn Fn(&JumpOperator, usize) -> Option<usize>| -> Result<Vec<Vec<Option<usize>>>> {
            let mut table = vec![vec![None; jumps.len()]; blocks.len()];
            for (b, members) in blocks.iter().enumerate() {
                for (k, op) in jumps.iter().enumerate() {
                    let mut target: Option<usize> = None;
                    for &i in members {
                        if let Some(j) = image(op, i) {
                            let tb = block_of[j];
                            match target {
                                None => target = Some(tb),
                                Some(prev) if prev != tb => {
                                    return Err(Error::RoutingAmbiguous {
                                        operator: k,
                                        block: b,
                                        first: prev,
                                        second: tb,
                                    })
                                }
                                _ => {}
                            }
                        }
                    }
                    table[b][k] = target;
                }
            }
            Ok(table)
        };
    let routing = route(&|op, i| op.lower(i).map(|(j, _)| j))?;
    let inflow_routing = route(&|op, i| op.raise(i).map(|(j, _)| j))?;

    let labels: Vec<SectorLabel> = blocks
        .iter()
        .map(|members| sector_charge(space.state(members[0]), &space.spec))
        .collect();
    for (b, members) in blocks.iter().enumerate() {
        debug_assert!(members
            .iter()
            .all(|&i| sector_charge(space.state(i), &space.spec) == labels[b]));
    }
    let mut sorted = labels.clone();
    sorted.sort();
    sorted.dedup();
    let labels_unique = sorted.len() == labels.len();

    let org_dim = n;
    let sum_sq: f64 = blocks.iter().map(|b| (b.len() * b.len()) as f64).sum();
    let stats = PartitionStats {
        org_dim,
        num_blocks: blocks.len(),
        max_block_dim: blocks.iter().map(Vec::len).max().unwrap_or(0),
        memory_ratio: sum_sq / (org_dim as f64 * org_dim as f64),
    };

    Ok(BlockPartition {
        blocks,
        block_of,
        local_of,
        routing,
        inflow_routing,
        labels,
        labels_unique,
        stats,
    })
}
