//! Saddle-point solvers for convex-concave problems under quadratic growth.
//!
//! The crate is organised bottom-up: [`geometry`] supplies Bregman generators
//! and prox steps, [`problems`] builds test problems and their solution sets,
//! [`growth`] certifies growth moduli, and [`solver`] runs GAPD and GDA.

pub mod geometry;
pub mod growth;
pub mod linalg;
pub mod problems;
pub mod qp;
pub mod rng;
pub mod solver;

pub use nalgebra::{DMatrix, DVector};
