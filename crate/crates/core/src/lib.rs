//! Discrete uniformization of decorated piecewise-Euclidean surfaces.
//!
//! Given a closed triangulated surface with edge lengths and a circle of
//! radius `r_i` at every vertex, the solver finds a discrete conformal factor
//! `u` whose metric has a prescribed combinatorial curvature
//! `R_{alpha,i} = K_i / r_i^alpha`, where `K_i` is the angle defect. The
//! triangulation is kept weighted Delaunay by edge flips while `u` moves.

// `!(x > y)` is used on purpose so that NaN fails the test.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod corpus;
pub mod curvature;
pub mod delaunay;
pub mod energy;
pub mod geometry;
pub mod io;
pub mod mesh;
pub mod metric;
pub mod solver;
