//! Saddle-point solves, the semi-implicit backward Euler loop and a steady
//! Picard iteration.

mod picard;
mod saddle;
mod time;

pub use picard::{steady_picard, PicardConfig, SteadyData, SteadyFn, SteadySolution};
pub use saddle::{solve_saddle, SaddleSolution, SaddleSolver, SaddleSystem, SolverReport, RTOL};
pub use time::{
    backward_euler_run, InitialCondition, InitialProjection, ProblemData, Snapshot, SpaceTimeFn, StepDiagnostics,
    TimeLoopConfig, Trajectory,
};
