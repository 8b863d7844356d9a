//! Chain recurrence on a transition graph, return times and orbit-based
//! recurrence classifications.

mod graph;
mod report;
mod returns;

pub use graph::{build_transition_graph, chain_recurrent_cells, TransitionGraph, EDGE_GUARD};
pub use report::{recurrence_report, report_on_graph, ClosureVerdict, InclusionViolations, RecurrenceReport, ReportConfig};
pub use returns::{
    cell_seed, classify_minimal, classify_on_grid, max_gap_with_sentinels, omega_limit_cells, return_times,
    return_times_seeded, GapWitness, MinimalVerdict, ReturnTimeSet, Verdict, DEFAULT_GAP_FRACTION,
};
