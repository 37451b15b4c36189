#![no_std]
#![warn(missing_docs)]

//! Directional quantile hyperplanes and exact bivariate halfspace depth contours.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`] - directions, hyperplanes, orthocomplement bases and convex
//!   halfplane intersection in the plane.
//! * [`qr`] - an exact vertex solver for single-output quantile regression
//!   (check-loss minimisation) with dual-weight recovery.
//! * [`directional`] - τu-quantile hyperplanes of a point cloud, their
//!   Lagrange multipliers and the multiplier-based outlier scan.
//! * [`contour`] - the exact fixed-τ direction sweep in the plane and the
//!   resulting halfspace depth region.
//! * [`depth`] - brute-force halfspace depth used as an independent oracle.
//! * [`envelope`] - the u-orthogonal directional quantile envelope and its
//!   comparison with the exact region.
//! * [`regression`] - multiple-output regression quantiles.
//!
//! Everything here is pure computation over `alloc` collections; file
//! formats and the command-line front end live in the `dirquant` crate.
//!
//! Conventions used throughout: the objective is the *sum* of check losses,
//! so Lagrange multipliers carry sum scale; the lower (outlying) halfspace of
//! a hyperplane `{z : b'z = a}` is the open side `{z : b'z < a}`.

extern crate alloc;

pub mod cloud;
pub mod contour;
pub mod depth;
pub mod directional;
pub mod envelope;
mod error;
pub mod geometry;
mod linalg;
pub mod qr;
pub mod regression;
pub mod rng;

pub use cloud::PointCloud;
pub use error::{Error, Result};
pub use geometry::{ConvexRegion2D, Direction, Hyperplane, OrthoBasis, RegionStatus};
