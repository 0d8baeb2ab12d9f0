//! Deterministic interleaving of mutators and one collector.

mod builtin;
mod explore;
mod scenario;
mod sim;
mod trace;
mod workload;


pub use builtin::{builtin, builtin_names};
pub use explore::{explore_interleavings, ExplorationReport};
pub use scenario::{
    ExploreBounds, MutatorScript, Scenario, ScenarioError, Schedule, ScheduleItem, WorkloadParams,
};
pub use sim::{minimize, run, Counterexample, Halt, RunOptions, RunOutcome, Sim};
pub use trace::{Actor, Trace, TraceEntry};
pub use workload::{generate_workload, Workload};
