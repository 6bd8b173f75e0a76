//! All-pole spectral envelope: Burg lattice fit over the whole clip, then the
//! magnitude response `|1 / (1 - Σ a_k e^{-jωk})|` sampled on a uniform grid.

use rustfft::num_complex::Complex;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::types::{AxisKind, ClipVector, Pooling};

/// Magnitudes above this are clamped (poles on or next to the sampled grid).
pub const MAX_MAGNITUDE: f64 = 1e12;

/// Predictor `x[n] ≈ Σ_{k=1}^{p} a_k x[n-k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpcModel {
    pub coefficients: Vec<f64>,
    pub reflection: Vec<f64>,
    /// Residual energy per sample after the last stage.
    pub gain: f64,
    /// Set when the signal is identically zero and no model could be fit.
    pub degenerate: bool,
}

impl LpcModel {
    pub fn order(&self) -> usize {
        self.coefficients.len()
    }
}

pub fn burg_fit(signal: &[f64], order: usize) -> Result<LpcModel> {
    if order == 0 {
        return Err(Error::invalid("LPC order must be >= 1"));
    }
    let n = signal.len();
    if order >= n {
        return Err(Error::invalid(format!("LPC order {order} must be below signal length {n}")));
    }
    let mut fwd = signal.to_vec();
    let mut bwd = signal.to_vec();
    // Monic error filter A(z) = 1 + Σ c_i z^{-i}; predictor taps are -c_i.
    let mut poly = vec![0.0; order + 1];
    poly[0] = 1.0;
    let mut reflection = Vec::with_capacity(order);
    let mut energy = signal.iter().map(|x| x * x).sum::<f64>() / n as f64;
    if energy == 0.0 {
        return Ok(LpcModel {
            coefficients: vec![0.0; order],
            reflection: vec![0.0; order],
            gain: 0.0,
            degenerate: true,
        });
    }

    let mut tmp = vec![0.0; order + 1];
    for m in 1..=order {
        let mut num = 0.0;
        let mut den = 0.0;
        for t in m..n {
            let f = fwd[t];
            let b = bwd[t - 1];
            num += f * b;
            den += f * f + b * b;
        }
        if den <= f64::MIN_POSITIVE {
            // Residual vanished: remaining stages stay zero.
            reflection.resize(order, 0.0);
            break;
        }
        let k = (-2.0 * num / den).clamp(-1.0, 1.0);
        reflection.push(k);

        tmp[..=m].copy_from_slice(&poly[..=m]);
        for i in 1..=m {
            poly[i] = tmp[i] + k * tmp[m - i];
        }

        for t in (m..n).rev() {
            let f = fwd[t];
            let b = bwd[t - 1];
            fwd[t] = f + k * b;
            bwd[t] = b + k * f;
        }
        energy *= 1.0 - k * k;
    }

    Ok(LpcModel {
        coefficients: poly[1..].iter().map(|c| -c).collect(),
        reflection,
        gain: energy,
        degenerate: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpcSpectrumConfig {
    pub n_bins: usize,
    pub f_max: f64,
    pub sample_rate: f64,
}

impl LpcSpectrumConfig {
    pub fn nyquist(n_bins: usize, sample_rate: f64) -> Self {
        LpcSpectrumConfig {
            n_bins,
            f_max: sample_rate / 2.0,
            sample_rate,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_bins < 2 {
            return Err(Error::invalid("LPC spectrum needs at least 2 bins"));
        }
        if !(self.f_max > 0.0 && self.f_max <= self.sample_rate / 2.0) {
            return Err(Error::invalid("LPC f_max must lie in (0, Nyquist]"));
        }
        Ok(())
    }

    /// Angular frequency of bin `m` (1-based): `π·m/F · f_max/(sr/2)`.
    pub fn omega(&self, m: usize) -> f64 {
        PI * m as f64 / self.n_bins as f64 * (self.f_max / (self.sample_rate / 2.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpcSpectrum {
    pub vector: ClipVector,
    /// Count of bins clamped to [`MAX_MAGNITUDE`].
    pub clamped: usize,
    /// The model was degenerate and the all-ones spectrum was returned.
    pub degenerate: bool,
}

pub fn lpc_spectrum(model: &LpcModel, cfg: &LpcSpectrumConfig) -> Result<LpcSpectrum> {
    cfg.validate()?;
    if model.degenerate {
        return Ok(LpcSpectrum {
            vector: ClipVector::new(vec![1.0; cfg.n_bins], AxisKind::LpcBin, Pooling::Direct)?,
            clamped: 0,
            degenerate: true,
        });
    }
    let mut clamped = 0;
    let mut values = Vec::with_capacity(cfg.n_bins);
    for m in 1..=cfg.n_bins {
        let w = cfg.omega(m);
        let step = Complex::new(w.cos(), -w.sin());
        // Re-anchor the phasor every 16 taps to keep the recurrence accurate.
        let mut phasor = Complex::new(1.0, 0.0);
        let mut h = Complex::new(1.0, 0.0);
        for (k, a) in model.coefficients.iter().enumerate() {
            let tap = k + 1;
            phasor = if tap % 16 == 0 {
                Complex::new((w * tap as f64).cos(), -(w * tap as f64).sin())
            } else {
                phasor * step
            };
            h -= phasor * *a;
        }
        let mag = 1.0 / h.norm();
        if mag.is_finite() && mag <= MAX_MAGNITUDE {
            values.push(mag);
        } else {
            clamped += 1;
            values.push(MAX_MAGNITUDE);
        }
    }
    Ok(LpcSpectrum {
        vector: ClipVector::new(values, AxisKind::LpcBin, Pooling::Direct)?,
        clamped,
        degenerate: false,
    })
}
