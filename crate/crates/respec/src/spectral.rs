//! Dense Fourier machinery: DFT wrappers, short-time frames under each
//! auxiliary window, and the moving-window/STFT phase relation.
//!
//! Two phase conventions appear throughout the crate:
//!
//! * **STFT convention** `φ(t,ω)`: phase referenced to signal time zero; a
//!   stationary sinusoid has constant phase across frames. All matrices
//!   stored in [`StftSet`] use this convention.
//! * **Moving-window convention** `φ_t(ω) = ωt + φ(t,ω)`: phase referenced
//!   to the sliding frame center. [`stft_frame`] returns this form;
//!   [`mwt_to_stft_phase`] converts.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::exec::map_frames;
use crate::windows::WindowSet;

/// Real-valued uniformly sampled waveform.
#[derive(Debug, Clone)]
pub struct SampledSignal {
    samples: Vec<f64>,
    sample_rate: f64,
}

impl SampledSignal {
    pub fn new(samples: Vec<f64>, sample_rate: f64) -> Result<Self> {
        if !sample_rate.is_finite() || sample_rate <= 0.0 {
            return Err(Error::InvalidParam(format!(
                "sample rate must be positive, got {sample_rate}"
            )));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("signal samples"));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    /// Sample at a possibly out-of-range index; the signal is implicitly
    /// zero-extended on both sides so every hop-aligned frame is valid.
    pub fn sample_at(&self, index: isize) -> f64 {
        if index < 0 || index as usize >= self.samples.len() {
            0.0
        } else {
            self.samples[index as usize]
        }
    }
}

/// Short-time grid: frame layout and bin frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct StftGrid {
    pub fft_size: usize,
    /// Hop between frame starts, samples.
    pub hop: usize,
    pub window_length: usize,
    pub sample_rate: f64,
    /// Length of the analyzed signal, samples.
    pub signal_len: usize,
    pub n_frames: usize,
}

impl StftGrid {
    pub fn new(
        signal_len: usize,
        window_length: usize,
        hop: usize,
        fft_size: usize,
        sample_rate: f64,
    ) -> Result<Self> {
        if hop < 1 {
            return Err(Error::InvalidParam("hop must be at least 1 sample".into()));
        }
        if fft_size < window_length {
            return Err(Error::InvalidParam(format!(
                "fft size {fft_size} smaller than window length {window_length}"
            )));
        }
        if window_length == 0 {
            return Err(Error::InvalidParam("window length must be non-zero".into()));
        }
        if !sample_rate.is_finite() || sample_rate <= 0.0 {
            return Err(Error::InvalidParam(format!(
                "sample rate must be positive, got {sample_rate}"
            )));
        }
        let n_frames = signal_len.div_ceil(hop);
        Ok(Self { fft_size, hop, window_length, sample_rate, signal_len, n_frames })
    }

    /// Default grid for a window length: hop = length/8 (at least 1),
    /// fft size = next power of two at or above twice the length.
    pub fn default_for(signal_len: usize, window_length: usize, sample_rate: f64) -> Result<Self> {
        let hop = (window_length / 8).max(1);
        let fft_size = (2 * window_length).next_power_of_two();
        Self::new(signal_len, window_length, hop, fft_size, sample_rate)
    }

    /// Sample index at which frame `m` starts.
    pub fn frame_start(&self, m: usize) -> usize {
        m * self.hop
    }

    /// Time of the center of frame `m`: `(m·hop + (N-1)/2) / rate`.
    pub fn frame_time(&self, m: usize) -> f64 {
        (self.frame_start(m) as f64 + (self.window_length - 1) as f64 / 2.0) / self.sample_rate
    }

    pub fn frame_times(&self) -> Vec<f64> {
        (0..self.n_frames).map(|m| self.frame_time(m)).collect()
    }

    /// Radian frequency of bin `k`: `2πk·rate/fft_size`.
    pub fn bin_freq(&self, k: usize) -> f64 {
        std::f64::consts::TAU * k as f64 * self.sample_rate / self.fft_size as f64
    }

    pub fn bin_freqs(&self) -> Vec<f64> {
        (0..self.fft_size).map(|k| self.bin_freq(k)).collect()
    }

    /// Bin spacing in rad/s.
    pub fn bin_spacing(&self) -> f64 {
        std::f64::consts::TAU * self.sample_rate / self.fft_size as f64
    }

    /// True when the window of frame `m` extends past the signal on either
    /// side; tests use this to exclude edge frames.
    pub fn is_boundary(&self, m: usize) -> bool {
        self.frame_start(m) + self.window_length > self.signal_len
    }

    /// Highest emitted bin on the positive-frequency side (Nyquist).
    pub fn positive_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }
}

/// Aligned complex short-time transforms of one signal under each window in
/// a [`WindowSet`]. All matrices use the STFT phase convention and share
/// the frame segmentation.
#[derive(Debug, Clone)]
pub struct StftSet {
    pub grid: StftGrid,
    /// Transform under the base window `h`.
    pub x: Vec<Vec<Complex64>>,
    /// Transform under the time-ramped window `h_T`.
    pub x_th: Vec<Vec<Complex64>>,
    /// Transform under the derivative window `h_D`.
    pub x_dh: Vec<Vec<Complex64>>,
    /// Transform under `h_TD = t·dh/dt` (mixed partial).
    pub x_tdh: Option<Vec<Vec<Complex64>>>,
    /// Transform under `h_T2 = t²·h` (second frequency partial).
    pub x_t2h: Option<Vec<Vec<Complex64>>>,
    /// Transform under `h_D2 = d²h/dt²` (second time partial).
    pub x_d2h: Option<Vec<Vec<Complex64>>>,
}

/// Which optional auxiliary transforms [`stft_set`] should compute.
#[derive(Debug, Clone, Copy, Default)]
pub struct AuxTransforms {
    /// `h_TD`, for the mixed partial derivative.
    pub mixed: bool,
    /// `h_T2`, for the second partial in frequency.
    pub second_freq: bool,
    /// `h_D2`, for the second partial in time.
    pub second_time: bool,
}

impl AuxTransforms {
    pub fn all() -> Self {
        Self { mixed: true, second_freq: true, second_time: true }
    }
}

pub(crate) fn fft_in_place(buf: &mut [Complex64]) {
    let fft = FftPlanner::new().plan_fft_forward(buf.len());
    fft.process(buf);
}

pub(crate) fn ifft_in_place(buf: &mut [Complex64]) {
    let n = buf.len();
    let fft = FftPlanner::new().plan_fft_inverse(n);
    fft.process(buf);
    let scale = 1.0 / n as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
}

/// Discrete Fourier transform `X(k) = Σ x(m)·e^(-j2πkm/N)`.
pub fn dft(x: &[Complex64]) -> Result<Vec<Complex64>> {
    if x.is_empty() {
        return Err(Error::InvalidParam("dft input must be non-empty".into()));
    }
    if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::NonFinite("dft input"));
    }
    let mut buf = x.to_vec();
    fft_in_place(&mut buf);
    Ok(buf)
}

/// Inverse DFT, normalized by `1/N`.
pub fn idft(x: &[Complex64]) -> Result<Vec<Complex64>> {
    if x.is_empty() {
        return Err(Error::InvalidParam("idft input must be non-empty".into()));
    }
    if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::NonFinite("idft input"));
    }
    let mut buf = x.to_vec();
    ifft_in_place(&mut buf);
    Ok(buf)
}

/// Table of `e^(-j2πi/n)` for exact integer-reduced twiddle lookups.
pub(crate) struct TwiddleTable {
    table: Vec<Complex64>,
}

impl TwiddleTable {
    pub(crate) fn new(n: usize) -> Self {
        let table = (0..n)
            .map(|i| Complex64::from_polar(1.0, -std::f64::consts::TAU * i as f64 / n as f64))
            .collect();
        Self { table }
    }

    /// `e^(-j2π·num/n)` with `num` reduced modulo `n` exactly.
    pub(crate) fn at(&self, num: usize) -> Complex64 {
        self.table[num % self.table.len()]
    }
}

/// One short-time frame in the moving-window convention: the windowed
/// segment starting at `frame_start` (zero-extended outside the signal) is
/// zero-padded to `fft_size` and transformed, then referenced to the frame
/// center so that an even window yields a real DC response.
pub fn stft_frame(
    signal: &SampledSignal,
    window: &[f64],
    frame_start: isize,
    fft_size: usize,
) -> Result<Vec<Complex64>> {
    let n = window.len();
    if n == 0 || n > fft_size {
        return Err(Error::InvalidParam(format!(
            "window length {n} must be in 1..=fft_size {fft_size}"
        )));
    }
    if window.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("window"));
    }
    let mut buf = windowed_frame(signal, window, frame_start, fft_size);
    fft_in_place(&mut buf);
    // Reference to the frame center: multiply bin k by e^(+jπk(N-1)/fft_size),
    // reduced exactly as an integer modulo 2·fft_size. The table holds
    // e^(-jθ), so conjugate.
    let tw = TwiddleTable::new(2 * fft_size);
    for (k, v) in buf.iter_mut().enumerate() {
        *v *= tw.at(k * (n - 1) % (2 * fft_size)).conj();
    }
    Ok(buf)
}

fn windowed_frame(
    signal: &SampledSignal,
    window: &[f64],
    frame_start: isize,
    fft_size: usize,
) -> Vec<Complex64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); fft_size];
    for (i, &w) in window.iter().enumerate() {
        let s = signal.sample_at(frame_start + i as isize);
        buf[i] = Complex64::new(s * w, 0.0);
    }
    buf
}

/// Convert a moving-window frame to the STFT phase convention by
/// multiplying bin `k` by `e^(-j·ω_k·frame_time)`. Magnitudes unchanged.
pub fn mwt_to_stft_phase(
    frame: &[Complex64],
    frame_time: f64,
    bin_freqs: &[f64],
) -> Result<Vec<Complex64>> {
    if frame.len() != bin_freqs.len() {
        return Err(Error::GridMismatch(format!(
            "frame has {} bins but {} bin frequencies given",
            frame.len(),
            bin_freqs.len()
        )));
    }
    if !frame_time.is_finite() {
        return Err(Error::NonFinite("frame time"));
    }
    Ok(frame
        .iter()
        .zip(bin_freqs)
        .map(|(v, &w)| v * Complex64::from_polar(1.0, -w * frame_time))
        .collect())
}

/// Compute aligned short-time transforms of `signal` under the windows in
/// `ws` on `grid`. `x`, `x_th` and `x_dh` are always produced; `aux`
/// selects the higher-order windows. Frames are independent and computed
/// as a parallel map with deterministic order.
pub fn stft_set(
    signal: &SampledSignal,
    ws: &WindowSet,
    grid: &StftGrid,
    aux: AuxTransforms,
) -> Result<StftSet> {
    if ws.len() != grid.window_length {
        return Err(Error::GridMismatch(format!(
            "window set length {} does not match grid window length {}",
            ws.len(),
            grid.window_length
        )));
    }
    if grid.signal_len != signal.len() {
        return Err(Error::GridMismatch(format!(
            "grid built for signal of {} samples, got {}",
            grid.signal_len,
            signal.len()
        )));
    }
    let nf = grid.fft_size;
    let tw = TwiddleTable::new(nf);

    let mut windows: Vec<&[f64]> = vec![&ws.h, &ws.h_t, &ws.h_d];
    if aux.mixed {
        windows.push(&ws.h_td);
    }
    if aux.second_freq {
        windows.push(&ws.h_t2);
    }
    if aux.second_time {
        windows.push(&ws.h_d2);
    }

    let per_frame = map_frames(grid.n_frames, |m| {
        let start = grid.frame_start(m) as isize;
        windows
            .iter()
            .map(|w| {
                let mut buf = windowed_frame(signal, w, start, nf);
                fft_in_place(&mut buf);
                // STFT convention: multiply bin k by e^(-j2πk·start/fft_size).
                let s = grid.frame_start(m) % nf;
                for (k, v) in buf.iter_mut().enumerate() {
                    *v *= tw.at(k * s % nf);
                }
                buf
            })
            .collect::<Vec<_>>()
    });

    let mut mats: Vec<Vec<Vec<Complex64>>> = (0..windows.len()).map(|_| Vec::new()).collect();
    for frame in per_frame {
        for (slot, mat) in frame.into_iter().zip(mats.iter_mut()) {
            mat.push(slot);
        }
    }
    let mut it = mats.into_iter();
    let x = it.next().unwrap();
    let x_th = it.next().unwrap();
    let x_dh = it.next().unwrap();
    let x_tdh = aux.mixed.then(|| it.next().unwrap());
    let x_t2h = aux.second_freq.then(|| it.next().unwrap());
    let x_d2h = aux.second_time.then(|| it.next().unwrap());

    Ok(StftSet { grid: grid.clone(), x, x_th, x_dh, x_tdh, x_t2h, x_d2h })
}

/// STFT-convention frames of `signal` under a single window, at arbitrary
/// frame starts (used by the finite-difference backend, which needs frames
/// one sample apart).
pub(crate) fn stft_frames_at(
    signal: &SampledSignal,
    window: &[f64],
    starts: &[isize],
    grid: &StftGrid,
) -> Vec<Vec<Complex64>> {
    let nf = grid.fft_size;
    let tw = TwiddleTable::new(2 * nf);
    map_frames(starts.len(), |i| {
        let start = starts[i];
        let mut buf = windowed_frame(signal, window, start, nf);
        fft_in_place(&mut buf);
        // e^(-j2πk·start/nf) with possibly negative start: reduce 2k·start
        // modulo 2nf in integers.
        let two_nf = 2 * nf as i64;
        for (k, v) in buf.iter_mut().enumerate() {
            let num = (2 * k as i64 * start as i64).rem_euclid(two_nf) as usize;
            *v *= tw.at(num);
        }
        buf
    })
}
