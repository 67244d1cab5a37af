//! Delay-Doppler domain precoder design for OTFS integrated sensing and
//! communication.
//!
//! - [`otfs`]: grid, path model, cyclic-shift/Doppler matrices, DD channel and
//!   its Doppler derivative, modulation chain.
//! - [`metrics`]: MSE/SINR, average BER and its lower bound, Fisher
//!   information, CRB, capacity.
//! - [`solver`]: closed-form CRB-only / BER-only precoders, the covariance
//!   closed form and the ellipsoid dual search, MSE-balancing rotation,
//!   single-symbol beamformer.
//! - [`montecarlo`]: bit-level link simulation.
//! - [`scenario`]: random channel draws.
//!
//! Vectors on the `M x N` DD grid are column-major (`vec`), and DFTs are
//! unitary.
//!
//! ```
//! use otfs_isac::{dd_channel, OtfsGrid, PathParams, PathSet};
//! use num_complex::Complex64;
//!
//! let grid = OtfsGrid::new(4, 4, 15e3).unwrap();
//! let paths = PathSet::single(PathParams::new(Complex64::new(1.0, 0.0), 0, 0.0));
//! let h = dd_channel(&paths, &grid).unwrap();
//! assert!((h.matrix() - otfs_isac::CMatrix::identity(16, 16)).norm() < 1e-12);
//! ```

/// Library version, recorded in experiment manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod error;
pub mod linalg;
pub mod metrics;
pub mod montecarlo;
pub mod otfs;
pub mod qam;
pub mod scenario;
pub mod solver;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector};
pub use metrics::{Equalizer, LinkMetrics, NoiseModel};
pub use montecarlo::{simulate_ber, simulate_ber_time_domain, BerEstimate, SimConfig};
pub use otfs::{
    dd_channel, doppler_derivative_channel, doppler_tap_derivative_channel, otfs_demodulate,
    otfs_modulate, time_domain_channel, DdChannel, OtfsGrid, PathParams, PathSet,
};
pub use qam::QamConstellation;
pub use scenario::{ChannelStatistics, DopplerUnit, Scenario};
pub use solver::{
    eigen_basis, solve_algorithm1, DualSolver, EigenBasis, EllipsoidState, PrecoderSolution,
    SolverConfig,
};
