//! State-space sizes and block partitions for m = 1..6, in the layout of
//! a dimension table.
//!
//! cargo run --release --example dmp_blocks

use hbqed::basis::{enumerate_states, partition_blocks};
use hbqed::model::ClosureMode;
use hbqed::operators::{build_jump_operators, hamiltonian_matrix};
use hbqed::report::{table_row, TABLE_HEADER};
use hbqed::{Config, Coupling};

fn main() -> hbqed::Result<()> {
    println!("{TABLE_HEADER}");
    for coupling in [Coupling::Incoherent, Coupling::Coherent] {
        for m in 1..=6 {
            if coupling == Coupling::Coherent && m < 2 {
                continue;
            }
            let config = Config::new(m, coupling).validate()?;
            let space = enumerate_states(&config.spec, ClosureMode::DecayClosure);
            let h = hamiltonian_matrix(&space, &config.params);
            let jumps = build_jump_operators(&space);
            let partition = partition_blocks(&space, &h, &jumps)?;
            let label = format!("{coupling:?} m={m}");
            println!("{}", table_row(&label, &partition.stats));
        }
    }
    Ok(())
}
