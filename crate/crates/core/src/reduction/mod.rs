//! Coordinates and models adapted to a system containing a tight binary:
//! a pair chart separating fast from slow motion, the canonical
//! transformation chain to action-angle variables, and the averaged
//! one-degree-of-freedom system that remains.

pub mod averaged;
pub mod chain;
pub mod chart;

pub use averaged::{
    excess_energy, h0, h2bar, integrate_reduced, numeric_h2, phi_average_second_order,
    second_order_coefficient, ReducedSystem, ReducedTrajectory, SlowGeometry,
};
pub use chain::{
    chart_to_reduced, from_reduced, reduced_to_chart, strengths_condition, to_reduced,
    transform_chain, ReducedCoords, TransformChain,
};
pub use chart::{
    binary_vector_field, energy_product_log_defect, from_binary_chart, perturbation_split,
    timescale_condition, timescale_ratio, to_binary_chart, ChartState,
};
