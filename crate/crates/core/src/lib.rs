//! Region-structured feed-forward networks for classifying grammatical
//! facial expressions from 3D facial-landmark frames.
//!
//! The pipeline: [`dataset`] parses landmark files (or synthesizes them),
//! [`preprocess`] imputes placeholders, balances, splits and standardizes,
//! [`structnet`] holds the masked 300 -> 100 -> 10 -> K network with its
//! hand-written backpropagation, [`optim`] the losses and Adam, [`train`]
//! the mini-batch loop, and [`experiments`] the binary, multiclass and
//! fully connected baseline protocols.

pub mod config;
pub mod dataset;
pub mod error;
pub mod experiments;
pub mod gradcheck;
pub mod metrics;
pub mod optim;
pub mod preprocess;
pub mod reference;
pub mod seed;
pub mod structnet;
pub mod train;

pub use config::{ComboPolicy, RunConfig, UserSelector};
pub use dataset::{LandmarkFrame, MarkerClass, MarkerDataset, User};
pub use error::{Error, Result};
pub use metrics::Metrics;
pub use structnet::{ConnectivitySpec, Model, NetworkParams, Preset};
