//! Site-wise construction: instruction tapes, topplings, stabilization and
//! odometers.

mod checks;
mod stabilize;
mod tape;
mod topple;

pub use checks::{
    check_abelian, check_abelian_with, check_monotone_chain, check_monotonicity,
    equivalence_arw_ph, odometer_growth, random_orders, AbelianCheck, AbelianWitness, GrowthPoint,
    MonotonicityCheck,
};
pub use stabilize::{
    stabilize, Odometer, OrderPolicy, Outcome, Stabilization, DEFAULT_TOPPLING_BUDGET,
};
pub use tape::{Instruction, InstructionTape, TapeMode};
pub use topple::{apply_instruction, is_unstable, topple, ToppleEffect};
