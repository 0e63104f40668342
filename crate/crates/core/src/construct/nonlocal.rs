use super::FeatureMatrix;
use crate::error::{Error, Result};

/// `height × width × bands` image stored pixel-major: the spectrum of pixel
/// `(r, c)` is `values[(r * width + c) * bands..][..bands]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperCube {
    height: usize,
    width: usize,
    bands: usize,
    values: Vec<f64>,
}

impl HyperCube {
    pub fn new(height: usize, width: usize, bands: usize, values: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || bands == 0 {
            return Err(Error::param("cube", "every dimension must be nonzero"));
        }
        if values.len() != height * width * bands {
            return Err(Error::DimensionMismatch {
                expected: format!("{height} × {width} × {bands} values"),
                actual: format!("{} values", values.len()),
            });
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("cube"));
        }
        Ok(HyperCube {
            height,
            width,
            bands,
            values,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn spectrum(&self, r: usize, c: usize) -> &[f64] {
        let start = (r * self.width + c) * self.bands;
        &self.values[start..start + self.bands]
    }
}

/// Patch features for cosine-similarity k-NN on an image.
///
/// Row `r * width + c` concatenates the spectra of the `window × window`
/// patch around pixel `(r, c)`, borders replicated, each spectrum scaled by
/// `exp(-(dr² + dc²) / (2 s²))` with `s = window / 2`. Rows have unit norm,
/// so Euclidean distance orders neighbours as cosine distance does.
pub fn nonlocal_means_features(cube: &HyperCube, window: usize) -> Result<FeatureMatrix> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::param("window", format!("must be odd, got {window}")));
    }
    let half = (window / 2) as isize;
    let s = window as f64 / 2.0;
    let offsets: Vec<(isize, isize, f64)> = (-half..=half)
        .flat_map(|dr| (-half..=half).map(move |dc| (dr, dc)))
        .map(|(dr, dc)| (dr, dc, (-((dr * dr + dc * dc) as f64) / (2.0 * s * s)).exp()))
        .collect();
    let dim = window * window * cube.bands;
    let n = cube.height * cube.width;
    let mut values = Vec::with_capacity(n * dim);
    let clamp = |x: isize, len: usize| x.clamp(0, len as isize - 1) as usize;
    for r in 0..cube.height {
        for c in 0..cube.width {
            let start = values.len();
            for &(dr, dc, g) in &offsets {
                let spec = cube.spectrum(clamp(r as isize + dr, cube.height), clamp(c as isize + dc, cube.width));
                values.extend(spec.iter().map(|x| g * x));
            }
            let row = &mut values[start..];
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(Error::DegenerateInput(format!("patch around pixel ({r}, {c}) is all zero")));
            }
            row.iter_mut().for_each(|x| *x /= norm);
        }
    }
    FeatureMatrix::new(n, dim, values)
}
