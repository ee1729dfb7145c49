//! Graph families: nested-fractal prefractals, carpets, trees, lattices,
//! and random weight laws.

pub mod carpet;
pub mod ifs;
pub mod lattice;
pub mod tree;
pub mod weights;

pub use carpet::CarpetGenerator;
pub use ifs::{IfsSpec, LatticeMap};
pub use lattice::build_lattice_box;
pub use tree::{
    excursion_distance, excursion_from_tree, sample_uniform_tree, tree_from_excursion, Excursion, OrderedTree,
};
pub use weights::{assign_weights, WeightKind, WeightLaw};
