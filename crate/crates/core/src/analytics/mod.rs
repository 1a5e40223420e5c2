//! Empirical pipeline: shifts from scored posts, user categories, homophily,
//! rank tests and export of shift histograms.

mod dependence;
mod export;
mod homophily;
mod iqr;
mod shifts;
pub mod stats;
mod transitions;

pub use dependence::{shift_dependence, DependenceReport, KwObservations};
pub use export::{export_shift_distribution, CategorizedShift, ShiftExport};
pub use homophily::{
    homophily, homophily_verdict, HomophilyReport, LabelHomophily, DEFAULT_HOMOPHILY_MARGIN,
};
pub use iqr::{
    categorize_users, iqr_categorize, quantile_linear, CategoryAssignment, IqrSplit,
    UserCategories, WHISKER_FACTOR,
};
pub use shifts::{
    compute_shifts, read_posts, write_posts, write_shift_samples, NeighborAveraging, PostRecord,
    ShiftExtraction, ShiftSample,
};
pub use stats::{chi_square_sf, kruskal_wallis, KruskalWallis};
pub use transitions::{category_transitions, TransitionEstimate, TransitionMethod};
