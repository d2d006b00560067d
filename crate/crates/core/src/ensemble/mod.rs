//! Two-layer blending of member predictions.

mod blend;
mod pipeline;

pub use blend::{blend_fit, BlendModel, BLEND_HEADER};
pub use pipeline::{
    apply_blend, blend_row, fit_blend, global_mean_baseline, member_row, parse_members, run_pipeline,
    train_member, train_members, BlendRun, BlendSettings, Dataset, InputKind, MemberModel,
    MemberSpec, ModelKind, PipelineRun, PredictionMatrix, TrainSettings, TrainedMember,
};

pub mod file {
    //! Blend model file I/O.
    pub use super::blend::{from_text, load, save, to_text};
}
