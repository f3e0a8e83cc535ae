//! The prescribed-derivative construction: flow-box cover of `K`, the
//! scale constant, the four-step modification on each box and the
//! inductive stack of modifications.

pub mod bump;
mod modification;
mod pipeline;
mod plan;
mod serial;
mod stack;

pub use modification::{
    modify_box, BoxFunction, BoxModification, CoverPatch, Diagnostics, ModifyConfig, MsSample, PieceIntervals,
    StepJets, MEMO_CELL, MS_HI, MS_LO, PHI_HI, PHI_LO,
};
pub use pipeline::{construct_prescribed, BoxLog, ConstructConfig, ConstructionLog};
pub use plan::{
    box_samples, choose_cover, piece_intervals, scale_constant, scale_from_decay, ConstructionPlan, CoverConfig,
    ScaleSampling,
};
pub use serial::{load_stack, save_stack, stack_from_text, stack_to_text, StackSpec, STACK_MAGIC};
pub use stack::{LevelOnBox, ModifiedStack, PrescribedLyapunov};
