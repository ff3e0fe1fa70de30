//! Skeleton-based action recognition with Frequent Local Parts (FLPs).
//!
//! The pipeline has four stages:
//!
//! 1. [`skeleton`] + [`features`]: normalize Kinect skeletons and quantize each
//!    limb orientation into one of 27 states, then fold limb states into 7
//!    part-state items per frame.
//! 2. [`transactions`]: collect the unique part states of `C` consecutive
//!    frames into one itemset transaction.
//! 3. [`miner`] + [`selection`]: enumerate closed frequent itemsets (LCM with
//!    prefix-preserving closure extension) and greedily keep the `K` most
//!    relevant, non-redundant ones.
//! 4. [`bof`] + [`svm`]: encode each action as a bag-of-FLPs histogram and
//!    classify it with a one-vs-one SVM over the square-root histogram
//!    intersection kernel.
//!
//! [`pipeline`] ties the stages together, handles configuration, cross-subject
//! splits, evaluation reports and the synthetic data generator.

pub mod bof;
pub mod error;
pub mod features;
pub mod miner;
pub mod pipeline;
pub mod selection;
pub mod skeleton;
pub mod svm;
pub mod transactions;

pub use error::{Error, Result};
