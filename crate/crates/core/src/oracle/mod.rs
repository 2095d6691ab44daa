//! Exhaustive ground truth for small `n`: enumeration of regular graphs and
//! exact laws of the measures built from them.

pub mod distribution;
pub mod enumerate;
pub mod expr;
pub mod tally;

pub use distribution::{
    atom_distribution, beta_weight, class_distribution, exact_distribution, exact_distribution_with_normalizer, ClassDistribution,
    ClassEntry, Distribution,
};
pub use enumerate::{count_labeled_degree_sequence, count_labeled_regular, enumerate_regular, for_each_regular, for_each_regular_rooted};
pub use expr::{Atom, MeasureExpr};
pub use tally::exact_edge_probability;
