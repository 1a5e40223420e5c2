//! Experiment configuration, sweeps, the analysis pipeline and plotting.

mod analysis;
mod config;
mod experiment;
mod plot;

pub use analysis::{analyze, AnalysisOptions, AnalysisOutcome};
pub use config::{ExperimentSpec, GraphSource, ShiftSource, TransitionSource};
pub use experiment::{
    mean_std, run_experiment, Cell, CellRun, ExperimentOutcome, ReductionRow, ReductionTable,
    RunRecord, WeekReductionRow,
};
pub use plot::{emit_plot, render_svg};
