//! Periodic grids, unitary transforms and Fourier multipliers.

mod fft;
pub mod field;
pub mod grid;
pub mod multiplier;
pub mod snapshot;

pub use field::{Representation, SpectralField};
pub use grid::{japanese, GridSpec};
pub use multiplier::{
    apply_multiplier, free_propagate, g0_symbol, g0_symbol_max, theta_component, theta_squared,
    velocity_calculus, Symbol,
};

/// Parallel sum with a fixed reduction order, so results do not depend on thread scheduling.
pub(crate) fn ordered_sum<T, I>(iter: I) -> T
where
    I: rayon::iter::IndexedParallelIterator<Item = T>,
    T: Send + std::iter::Sum<T>,
{
    use rayon::iter::ParallelIterator;
    iter.chunks(4096).map(|c| c.into_iter().sum::<T>()).collect::<Vec<T>>().into_iter().sum()
}
