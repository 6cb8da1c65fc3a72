//! IDX binary format reader (big-endian, as distributed for the digit sets).

use std::fs;
use std::path::Path;

use crate::error::{Error, IdxError, Result};

use super::data::Dataset;

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

fn idx_err(path: &Path, kind: IdxError) -> Error {
    Error::Idx {
        path: path.to_path_buf(),
        kind,
    }
}

fn read_u32(bytes: &[u8], offset: usize, path: &Path) -> Result<u32> {
    let end = offset + 4;
    if bytes.len() < end {
        return Err(idx_err(
            path,
            IdxError::Truncated {
                needed: end,
                had: bytes.len(),
            },
        ));
    }
    Ok(u32::from_be_bytes(bytes[offset..end].try_into().unwrap()))
}

fn read_images(path: &Path) -> Result<(usize, Vec<u8>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let magic = read_u32(&bytes, 0, path)?;
    if magic != IMAGES_MAGIC {
        return Err(idx_err(
            path,
            IdxError::BadMagic {
                got: magic,
                expected: IMAGES_MAGIC,
            },
        ));
    }
    let n = read_u32(&bytes, 4, path)? as usize;
    let rows = read_u32(&bytes, 8, path)? as usize;
    let cols = read_u32(&bytes, 12, path)? as usize;
    if rows != 28 || cols != 28 {
        return Err(idx_err(path, IdxError::BadShape { rows, cols }));
    }
    let needed = 16 + n * rows * cols;
    if bytes.len() < needed {
        return Err(idx_err(
            path,
            IdxError::Truncated {
                needed,
                had: bytes.len(),
            },
        ));
    }
    Ok((n, bytes[16..needed].to_vec()))
}

fn read_labels(path: &Path) -> Result<(usize, Vec<u8>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let magic = read_u32(&bytes, 0, path)?;
    if magic != LABELS_MAGIC {
        return Err(idx_err(
            path,
            IdxError::BadMagic {
                got: magic,
                expected: LABELS_MAGIC,
            },
        ));
    }
    let n = read_u32(&bytes, 4, path)? as usize;
    let needed = 8 + n;
    if bytes.len() < needed {
        return Err(idx_err(
            path,
            IdxError::Truncated {
                needed,
                had: bytes.len(),
            },
        ));
    }
    Ok((n, bytes[8..needed].to_vec()))
}

/// Loads an image/label file pair, scaling pixels to `[0, 1]`.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let (n_images, pixels) = read_images(images_path)?;
    let (n_labels, labels) = read_labels(labels_path)?;
    if n_images != n_labels {
        return Err(idx_err(
            images_path,
            IdxError::CountMismatch {
                images: n_images,
                labels: n_labels,
            },
        ));
    }
    Ok(Dataset::from_bytes(n_images, &pixels, labels))
}
