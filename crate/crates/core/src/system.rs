//! A fully built open system: basis, partition, Hamiltonian blocks and
//! block-local jump tables, ready for time stepping.

use crate::basis::{enumerate_states, partition_blocks, BlockPartition, StateSpace};
use crate::error::Result;
use crate::model::{ClosureMode, Config, Mode, RateConfig};
use crate::operators::{
    build_hamiltonian, build_jump_operators, hamiltonian_matrix, HamiltonianBlocks, JumpOperator,
    SparseMatrix,
};

/// Contribution of one source block to one target block.
#[derive(Debug, Clone)]
pub struct Transfer {
    pub source: usize,
    /// `(source local index, target local index, amplitude)`.
    pub pairs: Vec<(usize, usize, f64)>,
}

/// One direction (leak or inflow) of one jump operator, laid out by block.
#[derive(Debug, Clone)]
pub struct ChannelTable {
    pub operator: usize,
    pub mode: Mode,
    pub inflow: bool,
    /// `incoming[target]`: transfers into `target`, ordered by source block.
    pub incoming: Vec<Vec<Transfer>>,
    /// Per block, per local state: diagonal of `A^dag A` (or `A A^dag`).
    pub weights: Vec<Vec<f64>>,
    /// Global indices of states whose image leaves the space.
    pub misses: Vec<usize>,
}

impl ChannelTable {
    fn build(op: &JumpOperator, inflow: bool, partition: &BlockPartition) -> Self {
        let nb = partition.num_blocks();
        let mut incoming: Vec<Vec<Transfer>> = vec![Vec::new(); nb];
        let mut weights: Vec<Vec<f64>> = partition
            .blocks
            .iter()
            .map(|b| vec![0.0; b.len()])
            .collect();
        for (src, members) in partition.blocks.iter().enumerate() {
            let mut pairs = Vec::new();
            let mut target = None;
            for (k, &i) in members.iter().enumerate() {
                let img = if inflow { op.raise(i) } else { op.lower(i) };
                if let Some((j, amp)) = img {
                    weights[src][k] = amp * amp;
                    target = Some(partition.block_of[j]);
                    pairs.push((k, partition.local_of[j], amp));
                }
            }
            if let Some(t) = target {
                incoming[t].push(Transfer { source: src, pairs });
            }
        }
        Self {
            operator: op.id,
            mode: op.mode,
            inflow,
            incoming,
            weights,
            misses: if inflow {
                op.raise_misses.clone()
            } else {
                Vec::new()
            },
        }
    }

    /// Rate of this direction under `rates`.
    pub fn rate(&self, rates: &RateConfig) -> f64 {
        if self.inflow {
            rates.inflow(self.mode)
        } else {
            rates.gamma(self.mode)
        }
    }
}

#[derive(Debug, Clone)]
pub struct OpenSystem {
    pub config: Config,
    pub space: StateSpace,
    pub hamiltonian_sparse: SparseMatrix,
    pub partition: BlockPartition,
    pub hamiltonian: HamiltonianBlocks,
    pub jumps: Vec<JumpOperator>,
    /// Leak then inflow table for each operator, in operator order.
    pub channels: Vec<ChannelTable>,
}

impl OpenSystem {
    /// Validate `config` and build with the closure its rates call for.
    pub fn build(config: &Config) -> Result<Self> {
        let config = config.validate()?;
        let closure = config.closure();
        Self::build_with_closure(&config, closure)
    }

    pub fn build_with_closure(config: &Config, closure: ClosureMode) -> Result<Self> {
        let config = config.validate()?;
        let space = enumerate_states(&config.spec, closure);
        let h = hamiltonian_matrix(&space, &config.params);
        let jumps = build_jump_operators(&space);
        let partition = partition_blocks(&space, &h, &jumps)?;
        let hamiltonian = build_hamiltonian(&h, &partition, &config.params);
        let channels = jumps
            .iter()
            .flat_map(|op| {
                [
                    ChannelTable::build(op, false, &partition),
                    ChannelTable::build(op, true, &partition),
                ]
            })
            .collect();
        Ok(Self {
            config,
            space,
            hamiltonian_sparse: h,
            partition,
            hamiltonian,
            jumps,
            channels,
        })
    }

    pub fn m(&self) -> usize {
        self.space.m()
    }

    pub fn hbar(&self) -> f64 {
        self.config.params.hbar
    }
}
