//! Retinal wave simulation and labeled image dataset generation.
//!
//! A hexagonal lattice of amacrine cells fills a circular retina
//! ([`lattice`]); a stochastic excitable medium produces wave episodes on it
//! ([`dynamics`]); frames are rendered to binary crops or raw RGB images
//! ([`projection`], [`imageio`]); and [`datasetgen`] turns parameter grids
//! into balanced, fully reproducible classification datasets.
//!
//! The geometry, dynamics and projection code is generic over [`Real`]; the
//! aliases below fix the scalar to `f64`, which the dataset pipeline uses.

pub mod datasetgen;
pub mod dynamics;
pub mod error;
pub mod imageio;
pub mod lattice;
pub mod projection;
pub mod real;
pub mod rng;

pub use error::{Error, Result};
pub use real::Real;

pub type Lattice = lattice::RetinaLattice<f64>;
pub type Params = dynamics::WaveParams<f64>;
pub type Globals = dynamics::GlobalDynamicsConfig<f64>;
pub type Frame = dynamics::SimulationFrame<f64>;
pub type Augmentation = projection::AugmentationSpec<f64>;

pub type LatticeF32 = lattice::RetinaLattice<f32>;
pub type ParamsF32 = dynamics::WaveParams<f32>;
pub type FrameF32 = dynamics::SimulationFrame<f32>;
