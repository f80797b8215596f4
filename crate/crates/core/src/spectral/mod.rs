//! Finite rotation systems, their ergodic components, spectral measures of
//! indicator functions, orbit unions and the measure-increment loop.

mod components;
mod increment;
mod measure;
mod orbit;
mod system;

pub use components::{component_measure_of, components_within, ergodic_components, ErgodicComponent};
pub use increment::{
    directional_kappa, increment_inequality_holds, increment_run, IncrementMode, IncrementOptions, IncrementStatus,
    IncrementStep, IncrementTrace,
};
pub use measure::{spectral_measure, spectral_measure_on, SpectralMeasureTable, MASS_TOLERANCE};
pub use orbit::{
    directional_union, find_expansive_direction, find_return_time, orbit_union_directional, orbit_union_polynomial,
    polynomial_shift_set, polynomial_union, primitive_direction_classes, ExpansiveDirection, ReturnTime,
};
pub use system::{CyclicProductSystem, GroupSet};
