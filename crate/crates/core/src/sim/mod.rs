//! Closed-loop simulation, robustness constants, level sets and monitors.

pub mod closed_loop;
pub mod constants;
pub mod distributed;
pub mod levelset;
pub mod schedule;
pub mod theorem;

pub use closed_loop::{run_closed_loop, StepRecord, TrajectoryLog};
pub use constants::{compute_constants, ConstantsSpec, LambdaReport, RobustnessConstants, SigmaEnvelope};
pub use distributed::{run_distributed_demo, DistributedLog, SubsystemSpec};
pub use levelset::{level_set, roa_union, tail_orbit, value_grid, Cell, GridSpec, LevelMask, LevelSet};
pub use schedule::Schedule;
pub use theorem::{verify_theorem1, Theorem1Report, Verdict};
