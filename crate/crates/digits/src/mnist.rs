//! IDX file reader for the MNIST distribution format.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub const SIDE: usize = 28;
pub const PIXELS: usize = SIDE * SIDE;
pub const CLASSES: usize = 10;

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Error)]
pub enum MnistError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: wrong magic 0x{found:08x}, expected 0x{expected:08x}")]
    WrongMagic {
        path: PathBuf,
        expected: u32,
        found: u32,
    },
    #[error("{path}: truncated, header promises {expected} bytes but file holds {got}")]
    Truncated {
        path: PathBuf,
        expected: usize,
        got: usize,
    },
    #[error("{path}: images are {rows}x{cols}, expected 28x28")]
    WrongShape { path: PathBuf, rows: u32, cols: u32 },
    #[error("{images} images but {labels} labels")]
    CountMismatch { images: usize, labels: usize },
    #[error("label {label} at index {index} is outside 0..9")]
    BadLabel { index: usize, label: u8 },
}

/// Grayscale 28x28 images with labels.
///
/// Pixels are kept as the original bytes; [`ImageSet::pixel`] and
/// [`ImageSet::image`] expose them as `byte / 255` in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct ImageSet {
    bytes: Vec<u8>,
    labels: Vec<u8>,
}

impl ImageSet {
    pub fn from_bytes(bytes: Vec<u8>, labels: Vec<u8>) -> Result<Self, MnistError> {
        if bytes.len() != labels.len() * PIXELS {
            return Err(MnistError::CountMismatch {
                images: bytes.len() / PIXELS,
                labels: labels.len(),
            });
        }
        if let Some(index) = labels.iter().position(|&l| l as usize >= CLASSES) {
            return Err(MnistError::BadLabel {
                index,
                label: labels[index],
            });
        }
        Ok(Self { bytes, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i] as usize
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn raw(&self, i: usize) -> &[u8] {
        &self.bytes[i * PIXELS..(i + 1) * PIXELS]
    }

    pub fn pixel(&self, i: usize, p: usize) -> f64 {
        self.bytes[i * PIXELS + p] as f64 / 255.0
    }

    pub fn image(&self, i: usize) -> Vec<f64> {
        self.raw(i).iter().map(|&b| b as f64 / 255.0).collect()
    }

    /// Images at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut bytes = Vec::with_capacity(indices.len() * PIXELS);
        for &i in indices {
            bytes.extend_from_slice(self.raw(i));
        }
        Self {
            bytes,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// First `count` indices taken round-robin over the classes in label
    /// order, so every class is represented as evenly as the data allows.
    pub fn stratified(&self, count: usize) -> Vec<usize> {
        let mut by_class: Vec<std::collections::VecDeque<usize>> = vec![Default::default(); CLASSES];
        for (i, &l) in self.labels.iter().enumerate() {
            by_class[l as usize].push_back(i);
        }
        let mut picked = Vec::with_capacity(count);
        while picked.len() < count && by_class.iter().any(|q| !q.is_empty()) {
            for q in by_class.iter_mut() {
                if picked.len() == count {
                    break;
                }
                if let Some(i) = q.pop_front() {
                    picked.push(i);
                }
            }
        }
        picked
    }
}

fn read(path: &Path) -> Result<Vec<u8>, MnistError> {
    fs::read(path).map_err(|source| MnistError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn header(path: &Path, data: &[u8], words: usize) -> Result<Vec<u32>, MnistError> {
    if data.len() < 4 * words {
        return Err(MnistError::Truncated {
            path: path.to_path_buf(),
            expected: 4 * words,
            got: data.len(),
        });
    }
    Ok(data[..4 * words]
        .chunks_exact(4)
        .map(|c| u32::from_be_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

fn check_magic(path: &Path, found: u32, expected: u32) -> Result<(), MnistError> {
    if found != expected {
        return Err(MnistError::WrongMagic {
            path: path.to_path_buf(),
            expected,
            found,
        });
    }
    Ok(())
}

fn payload(path: &Path, data: &[u8], offset: usize, len: usize) -> Result<Vec<u8>, MnistError> {
    if data.len() < offset + len {
        return Err(MnistError::Truncated {
            path: path.to_path_buf(),
            expected: offset + len,
            got: data.len(),
        });
    }
    Ok(data[offset..offset + len].to_vec())
}

pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<ImageSet, MnistError> {
    let (ip, lp) = (images_path.as_ref(), labels_path.as_ref());
    let images = read(ip)?;
    let h = header(ip, &images, 1)?;
    check_magic(ip, h[0], IMAGE_MAGIC)?;
    let h = header(ip, &images, 4)?;
    if h[2] as usize != SIDE || h[3] as usize != SIDE {
        return Err(MnistError::WrongShape {
            path: ip.to_path_buf(),
            rows: h[2],
            cols: h[3],
        });
    }
    let n_images = h[1] as usize;
    let bytes = payload(ip, &images, 16, n_images * PIXELS)?;

    let labels = read(lp)?;
    let h = header(lp, &labels, 1)?;
    check_magic(lp, h[0], LABEL_MAGIC)?;
    let h = header(lp, &labels, 2)?;
    let n_labels = h[1] as usize;
    let labels = payload(lp, &labels, 8, n_labels)?;
    if n_images != n_labels {
        return Err(MnistError::CountMismatch {
            images: n_images,
            labels: n_labels,
        });
    }
    ImageSet::from_bytes(bytes, labels)
}

/// Standard file names inside an MNIST directory.
pub struct MnistFiles {
    pub train_images: PathBuf,
    pub train_labels: PathBuf,
    pub test_images: PathBuf,
    pub test_labels: PathBuf,
}

impl MnistFiles {
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let d = dir.as_ref();
        Self {
            train_images: d.join("train-images-idx3-ubyte"),
            train_labels: d.join("train-labels-idx1-ubyte"),
            test_images: d.join("t10k-images-idx3-ubyte"),
            test_labels: d.join("t10k-labels-idx1-ubyte"),
        }
    }

    /// Files that are not present.
    pub fn missing(&self) -> Vec<PathBuf> {
        [&self.train_images, &self.train_labels, &self.test_images, &self.test_labels]
            .into_iter()
            .filter(|p| !p.is_file())
            .cloned()
            .collect()
    }

    pub fn load(&self) -> Result<(ImageSet, ImageSet), MnistError> {
        Ok((
            load_idx(&self.train_images, &self.train_labels)?,
            load_idx(&self.test_images, &self.test_labels)?,
        ))
    }
}
