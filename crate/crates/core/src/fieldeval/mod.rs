//! Solution evaluation on target grids and error fields.

mod grid;
mod reference;

pub use grid::{
    error_field, evaluate_field, evaluate_points, near_flags, stokes_pressure_at, ErrorSummary, FieldCell, FieldGrid,
    GridSpec, ERROR_FLOOR,
};
pub use reference::{
    cubic_stokes_pressure, cubic_stokes_velocity, interior_test_points, make_reference, ReferenceSolution, SourceLayout,
};
