//! Digit-classification case study.
//!
//! A small CNN is trained on MNIST, every pixel of a test image becomes a
//! sensitivity factor on [0, 1], and the per-pixel indices of each method are
//! averaged into a saliency map. Pixels are then ranked and nested blocks of
//! the most and least important pixels are scored by nearest-neighbour
//! classification and k-means clustering.

pub mod casestudy;
pub mod cnn;
pub mod mnist;

pub use cnn::{CnnError, IncrementalForward, TinyCnn, TrainConfig};
pub use mnist::{load_idx, ImageSet, MnistError, MnistFiles};
