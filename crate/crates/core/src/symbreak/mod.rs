//! Symmetry breaking: Luby and Israeli–Itai as state-congested rules, the
//! degree-reduction rule, the low-degree finish and the end-to-end pipelines.

pub mod cover;
pub mod israeli_itai;
pub mod low_degree;
pub mod luby;
pub mod params;
pub mod pipeline;
pub mod reduction;
pub mod status;

pub use cover::vertex_cover_from_mm;
pub use israeli_itai::{israeli_itai_rule, IsraeliItaiRule};
pub use low_degree::{solve_low_degree, LowDegreeReport};
pub use luby::{luby_rule, LubyRule};
pub use params::{ceil_sqrt, DegreeReductionParams, Fidelity, Mode, SpaceMode, Thresholds};
pub use pipeline::{
    coarse_degree_reduction, mark_dead, reduce_to_sqrt, run_pipeline, ExecPath, PhaseTrace, PipelineConfig, PipelineRun,
    WindowTrace,
};
pub use reduction::{degree_reduction_step, CallOutcome, DegreeReductionRule};
pub use status::{Progress, Solution, VertexStatus};
