//! Spatial graph kit.
//!
//! Decides orientation-preserving isomorphism of decorated spatial graphs
//! (graphs embedded in the oriented 3-sphere, with optional vertex colors,
//! edge colors and edge orientations). The pipeline compiles a planar diagram
//! into a triangulated 3-sphere, carves out the marked exterior of the graph,
//! decomposes it along reducing spheres and clean reducing discs into a tree
//! of blocks, and compares blocks through a normal-surface-backed,
//! budget-bounded combinatorial search. Verdicts are three-valued: a definite
//! answer always carries an independently checkable witness or obstruction,
//! and exhausted budgets surface as `Unknown` rather than as a guess.

pub mod config;
pub mod diagram;
pub mod graphs;

pub mod compile;
pub mod exterior;
pub mod pipeline;
pub mod surfaces;
pub mod tri;

pub mod cli;
