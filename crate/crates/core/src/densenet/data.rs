//! In-memory image dataset.

use ndarray::Array2;

use super::rotate::rotate;

/// `N x 784` grayscale images in `[0, 1]` with digit labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub images: Array2<f64>,
    pub labels: Vec<u8>,
}

impl Dataset {
    pub fn from_bytes(n: usize, pixels: &[u8], labels: Vec<u8>) -> Self {
        assert_eq!(pixels.len(), n * 784);
        assert_eq!(labels.len(), n);
        let scaled: Vec<f64> = pixels.iter().map(|p| f64::from(*p) / 255.0).collect();
        Self {
            images: Array2::from_shape_vec((n, 784), scaled).expect("shape"),
            labels,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// The first `n` examples.
    pub fn take(&self, n: usize) -> Dataset {
        let n = n.min(self.len());
        Dataset {
            images: self.images.slice(ndarray::s![..n, ..]).to_owned(),
            labels: self.labels[..n].to_vec(),
        }
    }

    /// A copy with every image rotated by `degrees`.
    pub fn rotated(&self, degrees: u32) -> Dataset {
        let mut images = Array2::zeros(self.images.raw_dim());
        for (src, mut dst) in self.images.outer_iter().zip(images.outer_iter_mut()) {
            let rotated = rotate(src.as_slice().expect("contiguous"), degrees);
            dst.assign(&ndarray::ArrayView1::from(&rotated));
        }
        Dataset {
            images,
            labels: self.labels.clone(),
        }
    }

    /// Rows `idx` as a batch matrix.
    pub fn batch(&self, idx: &[usize]) -> (Array2<f64>, Vec<u8>) {
        let images = self.images.select(ndarray::Axis(0), idx);
        let labels = idx.iter().map(|i| self.labels[*i]).collect();
        (images, labels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Dataset {
        let mut pixels = vec![0u8; 3 * 784];
        pixels[0] = 255;
        pixels[784 + 5] = 51;
        Dataset::from_bytes(3, &pixels, vec![1, 2, 3])
    }

    #[test]
    fn take_is_a_prefix() {
        let d = tiny();
        let t = d.take(2);
        assert_eq!(t.len(), 2);
        assert_eq!(t.labels, vec![1, 2]);
        assert_eq!(t.images[[0, 0]], 1.0);
    }

    #[test]
    fn batch_gathers_rows() {
        let d = tiny();
        let (images, labels) = d.batch(&[2, 0]);
        assert_eq!(labels, vec![3, 1]);
        assert_eq!(images[[1, 0]], 1.0);
    }

    #[test]
    fn rotated_zero_is_identity() {
        let d = tiny();
        assert_eq!(d.rotated(0), d);
    }
}
