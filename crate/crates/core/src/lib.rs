//! Robust distributed Kalman filtering with event-triggered communication.

pub mod divergence;
pub mod dkf;
pub mod error;
pub mod harness;
pub mod lfsim;
pub mod linalg;
pub mod model;
pub mod robust;
pub mod seeding;
pub mod serde_mat;
pub mod variant;
pub mod world;

pub use error::{Error, Result};
pub use linalg::{Matrix, Vector};
