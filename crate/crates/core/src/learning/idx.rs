//! Big-endian IDX files as distributed for MNIST.
//!
//! ```text
//! images: u32 magic 0x00000803 | u32 count | u32 rows | u32 cols | count*rows*cols u8
//! labels: u32 magic 0x00000801 | u32 count | count u8
//! ```

use std::path::{Path, PathBuf};

use thiserror::Error;

use super::{Dataset, LearningError};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;
pub const MNIST_CLASSES: usize = 10;

#[derive(Debug, Error)]
pub enum IdxError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: bad magic number {found:#010x}, expected {expected:#010x}")]
    BadMagic {
        path: PathBuf,
        expected: u32,
        found: u32,
    },
    #[error("{path}: file holds {actual} bytes, header implies {expected}")]
    Truncated {
        path: PathBuf,
        expected: usize,
        actual: usize,
    },
    #[error("image count {images} does not match label count {labels}")]
    CountMismatch { images: usize, labels: usize },
    #[error("label {value} at index {index} outside [0, {classes})")]
    LabelOutOfRange {
        index: usize,
        value: u8,
        classes: usize,
    },
}

fn read_u32(bytes: &[u8], offset: usize) -> Option<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
}

fn check_header(path: &Path, bytes: &[u8], magic: u32, header_len: usize) -> Result<(), IdxError> {
    if bytes.len() < header_len {
        return Err(IdxError::Truncated {
            path: path.to_owned(),
            expected: header_len,
            actual: bytes.len(),
        });
    }
    let found = read_u32(bytes, 0).unwrap();
    if found != magic {
        return Err(IdxError::BadMagic {
            path: path.to_owned(),
            expected: magic,
            found,
        });
    }
    Ok(())
}

fn check_len(path: &Path, bytes: &[u8], expected: usize) -> Result<(), IdxError> {
    if bytes.len() != expected {
        return Err(IdxError::Truncated {
            path: path.to_owned(),
            expected,
            actual: bytes.len(),
        });
    }
    Ok(())
}

/// Parsed image file: `(count, rows*cols, pixels)`.
pub fn parse_images(path: &Path, bytes: &[u8]) -> Result<(usize, usize, Vec<u8>), IdxError> {
    check_header(path, bytes, IMAGES_MAGIC, 16)?;
    let count = read_u32(bytes, 4).unwrap() as usize;
    let rows = read_u32(bytes, 8).unwrap() as usize;
    let cols = read_u32(bytes, 12).unwrap() as usize;
    check_len(path, bytes, 16 + count * rows * cols)?;
    Ok((count, rows * cols, bytes[16..].to_vec()))
}

pub fn parse_labels(path: &Path, bytes: &[u8]) -> Result<Vec<u8>, IdxError> {
    check_header(path, bytes, LABELS_MAGIC, 8)?;
    let count = read_u32(bytes, 4).unwrap() as usize;
    check_len(path, bytes, 8 + count)?;
    Ok(bytes[8..].to_vec())
}

fn read(path: &Path) -> Result<Vec<u8>, IdxError> {
    std::fs::read(path).map_err(|source| IdxError::Io {
        path: path.to_owned(),
        source,
    })
}

/// Loads an image/label IDX pair; pixels are scaled to `[0, 1]` by `/255`.
pub fn load_idx(
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<Dataset, LearningError> {
    let images_path = images_path.as_ref();
    let labels_path = labels_path.as_ref();
    let (count, dim, pixels) = parse_images(images_path, &read(images_path)?)?;
    let raw_labels = parse_labels(labels_path, &read(labels_path)?)?;
    if raw_labels.len() != count {
        return Err(IdxError::CountMismatch {
            images: count,
            labels: raw_labels.len(),
        }
        .into());
    }
    let labels = raw_labels
        .iter()
        .enumerate()
        .map(|(index, &value)| {
            if (value as usize) < MNIST_CLASSES {
                Ok(value as usize)
            } else {
                Err(IdxError::LabelOutOfRange {
                    index,
                    value,
                    classes: MNIST_CLASSES,
                })
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let features = pixels.iter().map(|&p| p as f32 / 255.0).collect();
    Dataset::new(features, labels, dim, MNIST_CLASSES)
}
