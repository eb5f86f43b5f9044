pub mod cache;
pub mod chord;
pub mod cli;
pub mod cohomology;
pub mod differential;
pub mod geometry;
pub mod graph;
pub mod integrator;
pub mod linalg;
