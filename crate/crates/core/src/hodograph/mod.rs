//! Solutions `u(x, t)` from commuting flows through the implicit relations
//! `μ^i(u) = λ^i(u) t + x`, and the finite-difference check of any
//! candidate solution against `u^i_t = λ^i(u) u^i_x`.

mod grid;
mod pipeline;
mod plot;
mod tsarev;

pub use grid::{verify_solution, PointStatus, SolutionGrid, Verification};
pub use pipeline::{
    b_vanishes, pipeline_solve, PipelineError, PipelineOptions, PipelineResult, Route,
};
pub use plot::plot_script;
pub use tsarev::{
    solve_tsarev, CommutingFlow, ExprFlow, GridFlow, NewtonOptions, StaircaseFlow, SweepOrder,
};
