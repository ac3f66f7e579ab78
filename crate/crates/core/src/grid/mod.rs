//! The discrete Dirichlet Laplacian on masked 2D grids: domains, fields,
//! the 5-point operator, the explicit-Euler gradient flow with deflation,
//! a matrix-free Newton iteration and field export.

mod domain;
mod export;
mod field;
mod flow;
mod newton;

pub use domain::{square_spacing, GridDomain};
pub use export::{encode_pgm, field_to_csv, parse_field_csv};
pub use field::GridField;
pub use flow::{
    closed_form_square_eig, flow_residual, flow_step, from_stencil_units, functional_value,
    run_flow, solve_eigenfunctions, solve_eigenfunctions_with, start_stream, to_stencil_units,
    EigenfunctionOutcome, FlowConfig, FlowRun, GridEigenpair,
};
pub use newton::{newton_grid, GRID_NEWTON_MAX_ITER};
