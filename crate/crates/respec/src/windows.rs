//! Analysis windows and the auxiliary windows used by the three-transform
//! reassignment method.
//!
//! From a base window `h` the set derives:
//! `h_T = t·h` (time ramp), `h_D = dh/dt` (spectral derivative),
//! `h_TD = t·dh/dt`, `h_T2 = t²·h`, `h_D2 = d²h/dt²`.
//! Ramps and time references are centered on the frame center index
//! `(N-1)/2`, so reassignment offsets come out relative to the frame center.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral;

/// Window families supported by [`make_window`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowKind {
    Kaiser,
    Hann,
}

/// Parameters for building a window.
#[derive(Debug, Clone, Copy)]
pub struct WindowSpec {
    pub kind: WindowKind,
    /// Window length in samples. Odd lengths give an integer center index
    /// and exact symmetry.
    pub length: usize,
    /// Kaiser shaping parameter; ignored for Hann.
    pub kaiser_beta: f64,
    /// Seconds per sample.
    pub sample_period: f64,
}

impl WindowSpec {
    pub fn kaiser(length: usize, beta: f64, sample_period: f64) -> Self {
        Self { kind: WindowKind::Kaiser, length, kaiser_beta: beta, sample_period }
    }

    pub fn hann(length: usize, sample_period: f64) -> Self {
        Self { kind: WindowKind::Hann, length, kaiser_beta: 0.0, sample_period }
    }

    pub fn validate(&self) -> Result<()> {
        if self.length < 3 {
            return Err(Error::InvalidParam(format!(
                "window length must be at least 3 samples, got {}",
                self.length
            )));
        }
        if !self.kaiser_beta.is_finite() || self.kaiser_beta < 0.0 {
            return Err(Error::InvalidParam(format!(
                "kaiser beta must be finite and non-negative, got {}",
                self.kaiser_beta
            )));
        }
        if !self.sample_period.is_finite() || self.sample_period <= 0.0 {
            return Err(Error::InvalidParam(format!(
                "sample period must be positive, got {}",
                self.sample_period
            )));
        }
        Ok(())
    }
}

/// The base window and its five derived windows, all sharing one length.
///
/// `h` is even-symmetric about `center_index`; `h_t` and `h_d` are
/// odd-symmetric; `h_td`, `h_t2` and `h_d2` are even-symmetric. Ramp
/// products are exact; the FFT-derived arrays are symmetric to rounding.
#[derive(Debug, Clone)]
pub struct WindowSet {
    pub h: Vec<f64>,
    /// Time-ramped window, seconds·amplitude: `(n - c)·T·h[n]`.
    pub h_t: Vec<f64>,
    /// Time-derivative window, amplitude/second.
    pub h_d: Vec<f64>,
    /// Ramped derivative window: `(n - c)·T·h_d[n]`.
    pub h_td: Vec<f64>,
    /// Squared-ramp window, seconds²·amplitude: `((n - c)·T)²·h[n]`.
    pub h_t2: Vec<f64>,
    /// Second-derivative window, amplitude/second².
    pub h_d2: Vec<f64>,
    /// `(N - 1) / 2`.
    pub center_index: f64,
    pub sample_period: f64,
}

impl WindowSet {
    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }
}

/// Modified Bessel function of the first kind, order zero.
///
/// Power series `Σ ((x/2)^m / m!)²`, truncated once a term falls below
/// 1e-16 of the running sum.
pub fn bessel_i0(x: f64) -> f64 {
    debug_assert!(x.is_finite() && x >= 0.0);
    let base = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut m = 1.0;
    loop {
        term *= base / (m * m);
        sum += term;
        if term < 1e-16 * sum {
            return sum;
        }
        m += 1.0;
    }
}

/// Build the base analysis window.
///
/// Kaiser: `h[n] = I0(β·sqrt(1 - (2n/(N-1) - 1)²)) / I0(β)`;
/// Hann: `h[n] = 0.5·(1 - cos(2πn/(N-1)))`. The peak sits at the center.
pub fn make_window(spec: &WindowSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let n = spec.length;
    let m = (n - 1) as f64;
    let w = match spec.kind {
        WindowKind::Hann => (0..n)
            .map(|i| 0.5 * (1.0 - (std::f64::consts::TAU * i as f64 / m).cos()))
            .collect(),
        WindowKind::Kaiser => {
            let denom = bessel_i0(spec.kaiser_beta);
            (0..n)
                .map(|i| {
                    let u = 2.0 * i as f64 / m - 1.0;
                    let arg = (1.0 - u * u).max(0.0).sqrt();
                    bessel_i0(spec.kaiser_beta * arg) / denom
                })
                .collect()
        }
    };
    Ok(w)
}

/// Differentiate a window by the Fourier derivative theorem.
///
/// The DFT is multiplied by `jω_k` with signed radian frequencies
/// (`ω_k = 2πk/(LT)` for `k < L/2`, `2π(k-L)/(LT)` above, Nyquist zeroed
/// for even `L`), inverted, and the real part taken. Returns
/// amplitude/second.
///
/// Symmetric windows sampled on `0..N` carry the same value at both ends;
/// such a window is one period of an `(N-1)`-periodic sequence with the
/// endpoint duplicated, so the derivative is taken at period `N-1` and the
/// shared endpoint replicated. Inputs whose ends differ are differentiated
/// at full length.
pub fn derivative_window(h: &[f64], sample_period: f64) -> Result<Vec<f64>> {
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("window"));
    }
    if h.len() < 3 {
        return Err(Error::InvalidParam(format!(
            "window length must be at least 3 samples, got {}",
            h.len()
        )));
    }
    if !sample_period.is_finite() || sample_period <= 0.0 {
        return Err(Error::InvalidParam(format!(
            "sample period must be positive, got {sample_period}"
        )));
    }
    let n = h.len();
    let peak = h.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let shared_endpoint = (h[0] - h[n - 1]).abs() <= 1e-12 * peak;
    let period = if shared_endpoint { n - 1 } else { n };

    let mut buf: Vec<Complex64> = h[..period].iter().map(|&v| Complex64::new(v, 0.0)).collect();
    spectral::fft_in_place(&mut buf);
    let l = period as f64;
    for (k, v) in buf.iter_mut().enumerate() {
        let omega = if 2 * k < period {
            std::f64::consts::TAU * k as f64 / (l * sample_period)
        } else if 2 * k == period {
            0.0 // Nyquist: jω·H has ambiguous sign, zeroing keeps the result real
        } else {
            std::f64::consts::TAU * (k as f64 - l) / (l * sample_period)
        };
        *v = Complex64::new(-v.im * omega, v.re * omega);
    }
    spectral::ifft_in_place(&mut buf);

    let max_re = buf.iter().fold(0.0f64, |a, v| a.max(v.re.abs()));
    let max_im = buf.iter().fold(0.0f64, |a, v| a.max(v.im.abs()));
    if max_im > 1e-9 * max_re.max(f64::MIN_POSITIVE) {
        return Err(Error::Numeric(format!(
            "imaginary residue {max_im:e} exceeds 1e-9 of peak derivative {max_re:e}"
        )));
    }

    let mut out: Vec<f64> = buf.iter().map(|v| v.re).collect();
    if period < n {
        out.push(out[0]);
    }
    Ok(out)
}

/// True if the window tapers enough at its ends for the circular spectral
/// derivative to be accurate.
pub fn edge_taper_ok(h: &[f64]) -> bool {
    let peak = h.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    match (h.first(), h.last()) {
        (Some(&a), Some(&b)) => a.abs() <= 1e-3 * peak && b.abs() <= 1e-3 * peak,
        _ => true,
    }
}

/// Build the full window set for a spec: `h`, its first and second spectral
/// derivatives, and the exact centered-ramp products.
pub fn build_window_set(spec: &WindowSpec) -> Result<WindowSet> {
    let h = make_window(spec)?;
    let t = spec.sample_period;
    let h_d = derivative_window(&h, t)?;
    let h_d2 = derivative_window(&h_d, t)?;
    let n = h.len();
    let center = (n - 1) as f64 / 2.0;
    let ramp: Vec<f64> = (0..n).map(|i| (i as f64 - center) * t).collect();
    let h_t: Vec<f64> = (0..n).map(|i| ramp[i] * h[i]).collect();
    let h_t2: Vec<f64> = (0..n).map(|i| ramp[i] * ramp[i] * h[i]).collect();
    let h_td: Vec<f64> = (0..n).map(|i| ramp[i] * h_d[i]).collect();
    Ok(WindowSet {
        h,
        h_t,
        h_d,
        h_td,
        h_t2,
        h_d2,
        center_index: center,
        sample_period: t,
    })
}
