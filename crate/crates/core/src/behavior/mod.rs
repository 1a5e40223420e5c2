//! User categories, category dynamics and shift distributions.

mod category;
mod shift;
mod transition;

pub use category::{assign_categories, CategoryFractions, CategoryProfile, UserCategory};
pub use shift::{
    load_shift_distribution, CategoryShifts, InputBin, ShiftBin, ShiftDistribution, ShiftRow,
};
pub use transition::{step_category, TransitionMatrix};
