pub mod abelian;
pub mod critical;
pub mod fixation;
pub mod flow;
pub mod simulate;

use arw_core::SeedSpec;

use crate::output::Outputs;

pub struct Ctx {
    pub seed: SeedSpec,
    pub out: Outputs,
}
