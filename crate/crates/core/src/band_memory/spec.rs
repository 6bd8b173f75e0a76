use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Partition of a length-`F` feature axis into windows of size `C` at stride
/// `s`. When `(F - C) mod s != 0` a final window starting at `F - C` is
/// appended, so the tail of the axis is always covered.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BandSpec {
    pub feature_len: usize,
    pub window: usize,
    pub stride: usize,
    pub starts: Vec<usize>,
}

impl BandSpec {
    pub fn n_bands(&self) -> usize {
        self.starts.len()
    }

    pub fn range(&self, j: usize) -> std::ops::Range<usize> {
        let s = self.starts[j];
        s..s + self.window
    }

    /// Windows are disjoint and cover every coordinate, so concatenating the
    /// band slices reproduces the original vector.
    pub fn tiles_exactly(&self) -> bool {
        self.window == self.stride && (self.feature_len - self.window).is_multiple_of(self.stride)
    }

    /// Checks the invariants of a spec that came from outside (e.g. a bank
    /// file header).
    pub fn validate(&self) -> Result<()> {
        let expected = make_band_spec(self.feature_len, self.window, self.stride)?;
        if expected.starts != self.starts {
            return Err(Error::Format {
                what: "band spec",
                msg: format!("starts {:?} do not follow from (F, C, s)", self.starts),
            });
        }
        Ok(())
    }
}

pub fn make_band_spec(feature_len: usize, window: usize, stride: usize) -> Result<BandSpec> {
    if window == 0 || stride == 0 {
        return Err(Error::invalid("band window and stride must be >= 1"));
    }
    if window > feature_len {
        return Err(Error::invalid(format!(
            "band window {window} exceeds feature length {feature_len}"
        )));
    }
    let last = feature_len - window;
    let mut starts: Vec<usize> = (0..=last).step_by(stride).collect();
    if !last.is_multiple_of(stride) {
        starts.push(last);
    }
    Ok(BandSpec {
        feature_len,
        window,
        stride,
        starts,
    })
}

/// Sub-band slices `f[start_j .. start_j + C)`.
pub fn slice_bands<'a>(values: &'a [f64], spec: &BandSpec) -> Result<Vec<&'a [f64]>> {
    if values.len() != spec.feature_len {
        return Err(Error::LengthMismatch {
            expected: spec.feature_len,
            found: values.len(),
        });
    }
    Ok((0..spec.n_bands()).map(|j| &values[spec.range(j)]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn windowing_table_rows() {
        let rows = [
            (128, 38, 38, vec![0, 38, 76, 90]),
            (90, 20, 20, vec![0, 20, 40, 60, 70]),
            (8000, 3200, 3200, vec![0, 3200, 4800]),
            (6144, 768, 768, (0..8).map(|i| i * 768).collect()),
            (128, 76, 76, vec![0, 52]),
        ];
        for (f, c, s, starts) in rows {
            let spec = make_band_spec(f, c, s).unwrap();
            assert_eq!(spec.starts, starts, "({f},{c},{s})");
        }
        assert!(make_band_spec(6144, 768, 768).unwrap().tiles_exactly());
    }

    #[test]
    fn global_special_case_and_errors() {
        let spec = make_band_spec(10, 10, 10).unwrap();
        assert_eq!(spec.starts, vec![0]);
        assert!(make_band_spec(5, 6, 1).is_err());
        assert!(make_band_spec(5, 2, 0).is_err());
    }

    #[test]
    fn slicing() {
        let f: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let spec = make_band_spec(10, 5, 5).unwrap();
        let b = slice_bands(&f, &spec).unwrap();
        assert_eq!(b, vec![&f[..5], &f[5..]]);
        let whole = make_band_spec(10, 10, 3).unwrap();
        assert_eq!(slice_bands(&f, &whole).unwrap(), vec![&f[..]]);
        let odd = make_band_spec(7, 3, 3).unwrap();
        assert_eq!(odd.starts, vec![0, 3, 4]);
        assert!(slice_bands(&f[..9], &spec).is_err());
    }

    proptest! {
        #[test]
        fn band_count_formula(f in 1usize..400, c_frac in 0.0f64..1.0, s in 1usize..200) {
            let c = 1 + ((f - 1) as f64 * c_frac) as usize;
            let spec = make_band_spec(f, c, s).unwrap();
            let extra = usize::from(!(f - c).is_multiple_of(s));
            prop_assert_eq!(spec.n_bands(), 1 + (f - c) / s + extra);
            prop_assert!(spec.starts.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(spec.starts.iter().all(|&st| st + c <= f));
            prop_assert_eq!(*spec.starts.last().unwrap(), if extra == 1 { f - c } else { (f - c) / s * s });
            if s <= c {
                let mut covered = vec![false; f];
                for j in 0..spec.n_bands() {
                    for i in spec.range(j) { covered[i] = true; }
                }
                prop_assert!(covered.iter().all(|&x| x));
            }
        }

        #[test]
        fn exact_tiling_reconstructs(n_b in 1usize..10, c in 1usize..20) {
            let f = n_b * c;
            let values: Vec<f64> = (0..f).map(|i| i as f64 * 0.5).collect();
            let spec = make_band_spec(f, c, c).unwrap();
            prop_assert!(spec.tiles_exactly());
            let joined: Vec<f64> = slice_bands(&values, &spec).unwrap().concat();
            prop_assert_eq!(joined, values);
        }
    }
}
