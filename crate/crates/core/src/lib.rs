//! Offline-online numerical homogenization for elliptic multiscale problems.
//!
//! The offline stage samples the effective matrix by solving micro-scale cell
//! problems at the barycenters of a coarse sampling mesh ([`microcell`]) and
//! reconstructs a piecewise polynomial matrix field by local least squares
//! ([`reconstruct`]). The online stage solves the macroscopic problem with the
//! reconstructed coefficient using P1/P2 Lagrange elements ([`macrosolver`]).
//! [`harness`] drives convergence, cost and Monte-Carlo studies from TOML
//! configuration files.

pub mod coeffs;
pub mod error;
pub mod harness;
pub mod linsolve;
pub mod macrosolver;
pub mod mesh;
pub mod microcell;
pub mod quadrature;
pub mod reconstruct;

pub use error::{Error, Result};

pub type Point = nalgebra::Point2<f64>;
pub type Mat2 = nalgebra::Matrix2<f64>;

/// A 2x2 matrix-valued field on the plane.
pub trait MatrixField: Send + Sync {
    fn eval(&self, x: Point) -> Mat2;
}

impl<F> MatrixField for F
where
    F: Fn(Point) -> Mat2 + Send + Sync,
{
    fn eval(&self, x: Point) -> Mat2 {
        self(x)
    }
}

pub(crate) fn mat_to_row_major(m: &Mat2) -> [f64; 4] {
    [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]]
}

pub(crate) fn mat_from_row_major(v: [f64; 4]) -> Mat2 {
    Mat2::new(v[0], v[1], v[2], v[3])
}
