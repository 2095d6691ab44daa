//! Fixtures shared by the benchmarks.

use rrg_core::samplers::sample_regular;
use rrg_core::{Caps, Graph, SeededStream};

/// A fixed `d`-regular graph on `n` vertices.
pub fn regular(n: usize, d: usize, seed: u64) -> Graph {
    sample_regular(n, d, &mut SeededStream::new(seed, 0), &Caps::default()).expect("feasible parameters")
}
