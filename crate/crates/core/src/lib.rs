//! Blind federated learning of fuzzy cognitive map (FCM) classifiers.
//!
//! Participants train local FCM classifiers with particle swarm optimization,
//! starting without any model from a server. A coordinator then repeatedly
//! averages their adjacency matrices (with constant, accuracy-based or
//! precision-based weights) and sends the result back as the starting point for
//! the next local training round.
//!
//! * [`fcm`]: classifier model, activation functions and fixed-point dynamics.
//! * [`pso`]: swarm training with the Jaccard-complement fitness.
//! * [`aggregation`]: weighted averaging and augmentation of adjacency matrices.
//! * [`federation`]: the round-based Blind and Blended Blind protocols.
//! * [`data`]: CSV ingestion, encoding, partitioning and train/test splits.
//! * [`experiment`]: configuration-driven runs and report tables.

pub mod aggregation;
pub mod data;
pub mod error;
pub mod experiment;
pub mod fcm;
pub mod federation;
pub mod matrix;
pub mod metrics;
pub mod pso;
pub mod seed;

pub use error::{Error, Result};
pub use fcm::{Activation, DynamicsConfig, FcmModel, ModelShape, StateVector};
pub use matrix::SquareMatrix;
pub use pso::PsoConfig;
