//! Frame-level spectral features (power STFT, log-Mel, MFCC) and temporal
//! pooling into clip vectors.

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::types::{AxisKind, ClipVector, Pooling};

/// Row-major `T × F` feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMatrix {
    values: Vec<f64>,
    frames: usize,
    dim: usize,
    pub axis: AxisKind,
}

impl FrameMatrix {
    pub fn new(values: Vec<f64>, frames: usize, dim: usize, axis: AxisKind) -> Result<Self> {
        if frames == 0 || dim == 0 {
            return Err(Error::Empty("frame matrix"));
        }
        if values.len() != frames * dim {
            return Err(Error::LengthMismatch {
                expected: frames * dim,
                found: values.len(),
            });
        }
        Ok(FrameMatrix {
            values,
            frames,
            dim,
            axis,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], axis: AxisKind) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::invalid("ragged frame rows"));
        }
        Self::new(rows.concat(), rows.len(), dim, axis)
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.dim..(t + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Power spectrogram `|STFT|²`, `frames × (n_fft/2 + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrogram {
    pub values: Vec<f64>,
    pub frames: usize,
    pub bins: usize,
    pub n_fft: usize,
}

impl PowerSpectrogram {
    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.bins..(t + 1) * self.bins]
    }
}

/// Periodic Hann window.
pub fn hann(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
        .collect()
}

/// Reusable STFT plan: Hann window, no centering, `n_fft = frame_len`.
pub struct Stft {
    frame_len: usize,
    frame_shift: usize,
    window: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl Stft {
    pub fn new(frame_len: usize, frame_shift: usize) -> Result<Self> {
        if frame_len == 0 || frame_shift == 0 {
            return Err(Error::invalid("frame length and shift must be >= 1"));
        }
        let fft = FftPlanner::new().plan_fft_forward(frame_len);
        Ok(Stft {
            frame_len,
            frame_shift,
            window: hann(frame_len),
            fft,
        })
    }

    pub fn frame_count(&self, n: usize) -> usize {
        if n < self.frame_len {
            0
        } else {
            1 + (n - self.frame_len) / self.frame_shift
        }
    }

    pub fn power(&self, signal: &[f64]) -> Result<PowerSpectrogram> {
        if self.frame_len > signal.len() {
            return Err(Error::invalid(format!(
                "frame length {} exceeds signal length {}",
                self.frame_len,
                signal.len()
            )));
        }
        let frames = self.frame_count(signal.len());
        let bins = self.frame_len / 2 + 1;
        let mut values = Vec::with_capacity(frames * bins);
        let mut buf = vec![Complex::new(0.0, 0.0); self.frame_len];
        let mut scratch = vec![Complex::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        for t in 0..frames {
            let start = t * self.frame_shift;
            for ((b, &x), &w) in buf.iter_mut().zip(&signal[start..start + self.frame_len]).zip(&self.window) {
                *b = Complex::new(x * w, 0.0);
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            values.extend(buf[..bins].iter().map(|c| c.norm_sqr()));
        }
        Ok(PowerSpectrogram {
            values,
            frames,
            bins,
            n_fft: self.frame_len,
        })
    }
}

pub fn stft_power(signal: &[f64], frame_len: usize, frame_shift: usize) -> Result<PowerSpectrogram> {
    Stft::new(frame_len, frame_shift)?.power(signal)
}

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular HTK-scale filterbank with unit peak amplitude.
#[derive(Debug, Clone)]
pub struct MelFilterbank {
    /// `n_mels × bins`, row-major; stored sparsely as (first bin, weights).
    filters: Vec<(usize, Vec<f64>)>,
    centers_hz: Vec<f64>,
    bins: usize,
}

impl MelFilterbank {
    pub fn new(n_mels: usize, n_fft: usize, sample_rate: u32, f_min: f64, f_max: f64) -> Result<Self> {
        if n_mels < 1 {
            return Err(Error::invalid("n_mels must be >= 1"));
        }
        if !(f_min < f_max) {
            return Err(Error::invalid("f_min must be below f_max"));
        }
        let nyquist = sample_rate as f64 / 2.0;
        if f_max > nyquist {
            return Err(Error::invalid(format!("f_max {f_max} exceeds Nyquist {nyquist}")));
        }
        let bins = n_fft / 2 + 1;
        let bin_hz = sample_rate as f64 / n_fft as f64;
        let (m_lo, m_hi) = (hz_to_mel(f_min), hz_to_mel(f_max));
        let edges: Vec<f64> = (0..n_mels + 2)
            .map(|i| mel_to_hz(m_lo + (m_hi - m_lo) * i as f64 / (n_mels + 1) as f64))
            .collect();
        let mut filters = Vec::with_capacity(n_mels);
        for m in 0..n_mels {
            let (lo, center, hi) = (edges[m], edges[m + 1], edges[m + 2]);
            let mut first = None;
            let mut weights = Vec::new();
            for k in 0..bins {
                let f = k as f64 * bin_hz;
                let w = if f > lo && f <= center {
                    (f - lo) / (center - lo)
                } else if f > center && f < hi {
                    (hi - f) / (hi - center)
                } else {
                    0.0
                };
                if w > 0.0 {
                    first.get_or_insert(k);
                    weights.push(w);
                } else if first.is_some() {
                    break;
                }
            }
            // A triangle narrower than the bin spacing catches no bin; it
            // falls back to the bin nearest its center so no band is empty.
            let entry = match first {
                Some(k) => (k, weights),
                None => (((center / bin_hz).round() as usize).min(bins - 1), vec![1.0]),
            };
            filters.push(entry);
        }
        Ok(MelFilterbank {
            filters,
            centers_hz: edges[1..=n_mels].to_vec(),
            bins,
        })
    }

    pub fn n_mels(&self) -> usize {
        self.filters.len()
    }

    pub fn centers_hz(&self) -> &[f64] {
        &self.centers_hz
    }

    /// Dense filter row `m`.
    pub fn row(&self, m: usize) -> Vec<f64> {
        let mut dense = vec![0.0; self.bins];
        let (k0, w) = &self.filters[m];
        dense[*k0..*k0 + w.len()].copy_from_slice(w);
        dense
    }

    pub fn apply(&self, power_row: &[f64], out: &mut [f64]) {
        for (o, (k0, w)) in out.iter_mut().zip(&self.filters) {
            *o = w.iter().zip(&power_row[*k0..]).map(|(a, b)| a * b).sum();
        }
    }
}

pub fn logmel(spec: &PowerSpectrogram, bank: &MelFilterbank, floor: f64) -> Result<FrameMatrix> {
    if spec.bins != bank.bins {
        return Err(Error::LengthMismatch {
            expected: bank.bins,
            found: spec.bins,
        });
    }
    let n_mels = bank.n_mels();
    let mut values = vec![0.0; spec.frames * n_mels];
    for (t, out) in values.chunks_exact_mut(n_mels).enumerate() {
        bank.apply(spec.row(t), out);
        for v in out.iter_mut() {
            *v = (*v + floor).ln();
        }
    }
    FrameMatrix::new(values, spec.frames, n_mels, AxisKind::MelBand)
}

/// Orthonormal DCT-II basis truncated to the first `n_coeff` rows.
#[derive(Debug, Clone)]
pub struct Dct {
    basis: Vec<f64>,
    n_in: usize,
    n_out: usize,
}

impl Dct {
    pub fn new(n_in: usize, n_out: usize) -> Result<Self> {
        if n_out > n_in {
            return Err(Error::invalid(format!(
                "n_coeff {n_out} exceeds the {n_in} mel bands"
            )));
        }
        if n_out == 0 {
            return Err(Error::invalid("n_coeff must be >= 1"));
        }
        let n = n_in as f64;
        let mut basis = Vec::with_capacity(n_in * n_out);
        for k in 0..n_out {
            let scale = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
            basis.extend((0..n_in).map(|i| scale * (PI * k as f64 * (2 * i + 1) as f64 / (2.0 * n)).cos()));
        }
        Ok(Dct { basis, n_in, n_out })
    }

    pub fn forward(&self, x: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(self.basis.chunks_exact(self.n_in)) {
            *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    /// Transpose application; the exact inverse when `n_out == n_in`.
    pub fn inverse(&self, c: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n_in];
        for (row, &ck) in self.basis.chunks_exact(self.n_in).zip(c) {
            for (xi, b) in x.iter_mut().zip(row) {
                *xi += ck * b;
            }
        }
        x
    }
}

pub fn mfcc(logmel_frames: &FrameMatrix, n_coeff: usize) -> Result<FrameMatrix> {
    let dct = Dct::new(logmel_frames.dim(), n_coeff)?;
    mfcc_with(logmel_frames, &dct)
}

pub fn mfcc_with(logmel_frames: &FrameMatrix, dct: &Dct) -> Result<FrameMatrix> {
    if logmel_frames.dim() != dct.n_in {
        return Err(Error::LengthMismatch {
            expected: dct.n_in,
            found: logmel_frames.dim(),
        });
    }
    let mut values = vec![0.0; logmel_frames.frames() * dct.n_out];
    for (row, out) in logmel_frames.rows().zip(values.chunks_exact_mut(dct.n_out)) {
        dct.forward(row, out);
    }
    FrameMatrix::new(values, logmel_frames.frames(), dct.n_out, AxisKind::CepstralCoeff)
}

/// Collapses the time axis: per-coordinate mean (`Tmean`) or max (`Tmax`).
pub fn temporal_pool(frames: &FrameMatrix, mode: Pooling) -> Result<ClipVector> {
    let t = frames.frames();
    let f = frames.dim();
    let values = match mode {
        Pooling::Tmean => {
            let mut acc = vec![0.0; f];
            for row in frames.rows() {
                for (a, v) in acc.iter_mut().zip(row) {
                    *a += v;
                }
            }
            acc.iter_mut().for_each(|a| *a /= t as f64);
            acc
        }
        Pooling::Tmax => {
            let mut acc = vec![f64::NEG_INFINITY; f];
            for row in frames.rows() {
                for (a, &v) in acc.iter_mut().zip(row) {
                    *a = a.max(v);
                }
            }
            acc
        }
        Pooling::Direct => return Err(Error::invalid("temporal pooling mode must be tmean or tmax")),
    };
    ClipVector::new(values, frames.axis, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sine(freq: f64, sr: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| (2.0 * PI * freq * i as f64 / sr).sin()).collect()
    }

    #[test]
    fn frame_count_formula() {
        let stft = Stft::new(1024, 512).unwrap();
        assert_eq!(stft.frame_count(160_000), 311);
        assert!(stft_power(&[0.0; 100], 1024, 512).is_err());
    }

    #[test]
    fn zero_signal_zero_power() {
        let p = stft_power(&vec![0.0; 4096], 1024, 512).unwrap();
        assert!(p.values.iter().all(|&v| v == 0.0));
        assert_eq!(p.bins, 513);
    }

    #[test]
    fn sine_peaks_at_expected_bin() {
        let p = stft_power(&sine(1000.0, 16000.0, 16000), 1024, 512).unwrap();
        let expected = (1000.0f64 * 1024.0 / 16000.0).round() as i64;
        for t in 0..p.frames {
            let row = p.row(t);
            let arg = argmax(row) as i64;
            assert!((arg - expected).abs() <= 1, "frame {t}: bin {arg}");
        }
    }

    fn argmax(v: &[f64]) -> usize {
        v.iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &x)| if x > bv { (i, x) } else { (bi, bv) })
            .0
    }

    #[test]
    fn logmel_of_zero_power_is_log_floor() {
        let p = stft_power(&vec![0.0; 2048], 1024, 512).unwrap();
        let bank = MelFilterbank::new(128, 1024, 16000, 0.0, 8000.0).unwrap();
        let lm = logmel(&p, &bank, 1e-10).unwrap();
        assert_eq!(lm.dim(), 128);
        assert!(lm.values().iter().all(|&v| v == 1e-10f64.ln()));
    }

    #[test]
    fn filterbank_rows_positive_peaks_increasing() {
        let bank = MelFilterbank::new(128, 1024, 16000, 0.0, 8000.0).unwrap();
        let mut last_peak = -1.0;
        for m in 0..bank.n_mels() {
            let row = bank.row(m);
            assert!(row.iter().sum::<f64>() > 0.0, "row {m} empty");
            let c = bank.centers_hz()[m];
            assert!(c > last_peak);
            last_peak = c;
        }
        assert!(MelFilterbank::new(0, 1024, 16000, 0.0, 8000.0).is_err());
        assert!(MelFilterbank::new(8, 1024, 16000, 4000.0, 4000.0).is_err());
        assert!(MelFilterbank::new(8, 1024, 16000, 0.0, 9000.0).is_err());
    }

    #[test]
    fn sine_lands_in_nearest_mel_band() {
        let p = stft_power(&sine(1000.0, 16000.0, 16000), 1024, 512).unwrap();
        let bank = MelFilterbank::new(128, 1024, 16000, 0.0, 8000.0).unwrap();
        let lm = logmel(&p, &bank, 1e-10).unwrap();
        let nearest = bank
            .centers_hz()
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - 1000.0).abs().total_cmp(&(b.1 - 1000.0).abs()))
            .unwrap()
            .0;
        for t in 0..lm.frames() {
            let arg = argmax(lm.row(t));
            assert!((arg as i64 - nearest as i64).abs() <= 1, "frame {t}: band {arg} vs {nearest}");
        }
    }

    #[test]
    fn mfcc_of_constant_row() {
        let lm = FrameMatrix::from_rows(&[vec![2.5; 16]], AxisKind::MelBand).unwrap();
        let c = mfcc(&lm, 8).unwrap();
        assert!((c.row(0)[0] - 2.5 * 4.0).abs() < 1e-12);
        assert!(c.row(0)[1..].iter().all(|v| v.abs() < 1e-12));
        assert!(mfcc(&lm, 17).is_err());
    }

    #[test]
    fn dct_inverts() {
        let x: Vec<f64> = (0..24).map(|i| ((i * 37) % 11) as f64 - 4.2).collect();
        let dct = Dct::new(24, 24).unwrap();
        let mut c = vec![0.0; 24];
        dct.forward(&x, &mut c);
        for (a, b) in dct.inverse(&c).iter().zip(&x) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn dct_matches_direct_four_point_sum() {
        let x = [0.3, -1.2, 2.0, 0.7];
        let lm = FrameMatrix::from_rows(&[x.to_vec()], AxisKind::MelBand).unwrap();
        let c = mfcc(&lm, 4).unwrap();
        // Hand-expanded orthonormal DCT-II over four points.
        let n = 4.0f64;
        for k in 0..4 {
            let mut s = 0.0;
            for (i, xi) in x.iter().enumerate() {
                s += xi * (PI / n * (i as f64 + 0.5) * k as f64).cos();
            }
            let w = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
            assert!((c.row(0)[k] - w * s).abs() < 1e-12);
        }
    }

    #[test]
    fn pooling_examples() {
        let x = FrameMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]], AxisKind::MelBand).unwrap();
        assert_eq!(temporal_pool(&x, Pooling::Tmean).unwrap().values, vec![2.0, 3.0]);
        assert_eq!(temporal_pool(&x, Pooling::Tmax).unwrap().values, vec![3.0, 4.0]);
        let c = FrameMatrix::from_rows(&vec![vec![7.0, -1.0]; 5], AxisKind::MelBand).unwrap();
        assert_eq!(temporal_pool(&c, Pooling::Tmean).unwrap().values, vec![7.0, -1.0]);
        assert_eq!(temporal_pool(&c, Pooling::Tmax).unwrap().values, vec![7.0, -1.0]);
        let single = FrameMatrix::from_rows(&[vec![0.5, 9.0]], AxisKind::MelBand).unwrap();
        for mode in [Pooling::Tmean, Pooling::Tmax] {
            assert_eq!(temporal_pool(&single, mode).unwrap().values, vec![0.5, 9.0]);
        }
        assert!(FrameMatrix::from_rows(&[], AxisKind::MelBand).is_err());
    }

    #[test]
    fn mfcc_deterministic() {
        let sig: Vec<f64> = (0..8192).map(|i| ((i * 7919) % 1013) as f64 / 1013.0 - 0.5).collect();
        let bank = MelFilterbank::new(128, 1024, 16000, 0.0, 8000.0).unwrap();
        let run = || {
            let p = stft_power(&sig, 1024, 512).unwrap();
            mfcc(&logmel(&p, &bank, 1e-10).unwrap(), 90).unwrap()
        };
        let (a, b) = (run(), run());
        assert!(a.values().iter().zip(b.values()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    proptest! {
        #[test]
        fn pooling_permutation_invariant_and_ordered(
            rows in proptest::collection::vec(proptest::collection::vec(-50.0f64..50.0, 3), 1..8),
            rot in 0usize..8,
        ) {
            let x = FrameMatrix::from_rows(&rows, AxisKind::MelBand).unwrap();
            let mut permuted = rows.clone();
            let k = rot % permuted.len();
            permuted.rotate_left(k);
            permuted.reverse();
            let y = FrameMatrix::from_rows(&permuted, AxisKind::MelBand).unwrap();
            let (mx, my) = (temporal_pool(&x, Pooling::Tmax).unwrap(), temporal_pool(&y, Pooling::Tmax).unwrap());
            prop_assert_eq!(&mx.values, &my.values);
            let (ax, ay) = (temporal_pool(&x, Pooling::Tmean).unwrap(), temporal_pool(&y, Pooling::Tmean).unwrap());
            for ((a, b), m) in ax.values.iter().zip(&ay.values).zip(&mx.values) {
                prop_assert!((a - b).abs() < 1e-9);
                prop_assert!(m + 1e-12 >= *a);
            }
        }

        #[test]
        fn logmel_width_is_n_mels(frames in 1usize..6, n_mels in 1usize..40) {
            let n = 256 + (frames - 1) * 128;
            let sig: Vec<f64> = (0..n).map(|i| ((i * 31) % 17) as f64 / 17.0).collect();
            let p = stft_power(&sig, 256, 128).unwrap();
            let bank = MelFilterbank::new(n_mels, 256, 16000, 0.0, 8000.0).unwrap();
            let lm = logmel(&p, &bank, 1e-10).unwrap();
            prop_assert_eq!(lm.dim(), n_mels);
            prop_assert_eq!(lm.frames(), frames);
        }
    }
}
