pub mod builtin;
pub mod entropy;
pub mod general_lattice;
pub mod geometry;
pub mod model;
pub mod program;
pub mod search;
pub mod spectral;
pub mod triangulation;
pub mod twist;
pub mod weight;
