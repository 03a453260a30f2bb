use super::ImagingError;

/// One boolean per pixel, row-major. Stored as bytes holding 0 or 1 so that
/// row kernels can combine masks with plain integer ops.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<u8>,
}

impl BinaryMask {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![0; width * height],
        }
    }

    pub fn ones(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![1; width * height],
        }
    }

    /// Builds a mask from arbitrary bytes; any nonzero byte is treated as set.
    pub fn from_bytes(width: usize, height: usize, bytes: Vec<u8>) -> Result<Self, ImagingError> {
        if width == 0 || height == 0 {
            return Err(ImagingError::ZeroDimensions { width, height });
        }
        if bytes.len() != width * height {
            return Err(ImagingError::BufferLength {
                width,
                height,
                expected: width * height,
                actual: bytes.len(),
            });
        }
        let bits = bytes.into_iter().map(|b| u8::from(b != 0)).collect();
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(u8::from(f(x, y)));
            }
        }
        Self {
            width,
            height,
            bits,
        }
    }

    /// Caller guarantees every byte is 0 or 1.
    pub(crate) fn from_raw(width: usize, height: usize, bits: Vec<u8>) -> Self {
        debug_assert_eq!(bits.len(), width * height);
        debug_assert!(bits.iter().all(|&b| b <= 1));
        Self {
            width,
            height,
            bits,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x] != 0
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = u8::from(value);
    }

    /// Raw 0/1 bytes, row-major.
    pub fn as_bytes(&self) -> &[u8] {
        &self.bits
    }

    pub fn row(&self, y: usize) -> &[u8] {
        &self.bits[y * self.width..(y + 1) * self.width]
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&b| b == 0)
    }

    pub fn not(&self) -> Self {
        Self::from_raw(
            self.width,
            self.height,
            self.bits.iter().map(|&b| b ^ 1).collect(),
        )
    }

    /// Fraction of set pixels in `[0, 1]`.
    pub fn coverage(&self) -> f64 {
        self.count_ones() as f64 / self.bits.len() as f64
    }

    pub(crate) fn bits_mut(&mut self) -> &mut [u8] {
        &mut self.bits
    }

    pub(crate) fn ensure_same_dims(&self, other: (usize, usize)) -> Result<(), ImagingError> {
        if self.dims() != other {
            return Err(ImagingError::DimensionMismatch {
                left: self.dims(),
                right: other,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_bytes_normalizes() {
        let m = BinaryMask::from_bytes(2, 2, vec![0, 255, 3, 0]).unwrap();
        assert_eq!(m.as_bytes(), &[0, 1, 1, 0]);
        assert_eq!(m.count_ones(), 2);
        assert_eq!(m.not().as_bytes(), &[1, 0, 0, 1]);
        assert!(BinaryMask::from_bytes(2, 2, vec![0; 3]).is_err());
    }
}
