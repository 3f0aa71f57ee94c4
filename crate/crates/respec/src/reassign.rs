//! Reassigned time-frequency coordinates.
//!
//! Two backends compute the same quantities: the three-transform method
//! evaluates the phase-derivative ratios algebraically from aligned STFTs,
//! and the finite-difference method approximates them from cross-spectral
//! surfaces built on frames one sample apart and adjacent bins. Energy at
//! cell `(t, ω)` is relocated to the local group delay and channelized
//! instantaneous frequency:
//!
//! ```text
//! t̂ = t + Re{ X_Th·X* / |X|² }        ω̂ = ω − Im{ X_Dh·X* / |X|² }
//! ```
//!
//! (signs follow the centered, un-flipped ramp/derivative windows: the ramp
//! weights each sample by its offset from the frame center, so the ratio is
//! the local-time center of gravity directly).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec::map_frames;
use crate::spectral::{stft_frames_at, SampledSignal, StftGrid, StftSet, TwiddleTable};

/// Which estimator produced a [`ReassignedSpectrogram`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Transform,
    FiniteDifference,
}

/// One retained time-frequency cell with its reassigned coordinates.
#[derive(Debug, Clone, Copy)]
pub struct ReassignedPoint {
    pub frame: usize,
    pub bin: usize,
    /// Frame-center time, seconds.
    pub nominal_time: f64,
    /// Bin frequency, rad/s.
    pub nominal_freq: f64,
    /// Reassigned time, seconds.
    pub t_hat: f64,
    /// Reassigned frequency, rad/s.
    pub omega_hat: f64,
    pub magnitude: f64,
    /// dB relative to the frame maximum.
    pub power_db: f64,
    /// STFT-convention phase; replaced by the corrected phase when a
    /// phase-correction pass runs.
    pub phase: f64,
    /// Mixed partial ∂²φ/∂t∂ω, NaN until filled from a derivative field.
    pub mixed_partial: f64,
}

/// Grid metadata plus the retained reassigned points, frame-major,
/// bin-ascending.
#[derive(Debug, Clone)]
pub struct ReassignedSpectrogram {
    pub grid: StftGrid,
    pub points: Vec<ReassignedPoint>,
    pub threshold_db: f64,
    pub backend: Backend,
    /// Set by despeckling: the (tol_sin, tol_imp) used.
    pub prune_tolerances: Option<(f64, f64)>,
}

/// Options shared by both backends.
#[derive(Debug, Clone, Copy)]
pub struct ReassignConfig {
    /// Per-frame power gate in dB relative to that frame's maximum; cells
    /// below it are omitted (reassignment has no meaning at zero power).
    pub threshold_db: f64,
    /// Emit bins above Nyquist too (off by default; real input spectra are
    /// conjugate-symmetric).
    pub include_negative: bool,
}

impl Default for ReassignConfig {
    fn default() -> Self {
        Self { threshold_db: -70.0, include_negative: false }
    }
}

impl ReassignConfig {
    pub fn with_threshold(threshold_db: f64) -> Self {
        Self { threshold_db, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if !self.threshold_db.is_finite() || self.threshold_db > 0.0 {
            return Err(Error::InvalidParam(format!(
                "threshold must be <= 0 dB, got {}",
                self.threshold_db
            )));
        }
        Ok(())
    }
}

/// Per-cell reassignment shifts from the three transform values.
/// Returns `(t_hat - t, omega_hat - ω)` in seconds and rad/s.
#[inline]
pub fn transform_shifts(x: Complex64, x_th: Complex64, x_dh: Complex64) -> (f64, f64) {
    let p = x.norm_sqr();
    let xc = x.conj();
    ((x_th * xc).re / p, -(x_dh * xc).im / p)
}

fn emitted_bins(grid: &StftGrid, include_negative: bool) -> usize {
    if include_negative {
        grid.fft_size
    } else {
        grid.positive_bins()
    }
}

fn frame_peak_power(row: &[Complex64], bins: usize) -> f64 {
    row[..bins].iter().map(|v| v.norm_sqr()).fold(0.0, f64::max)
}

/// Reassign by the three-transform method.
pub fn reassign_transform(
    stfts: &StftSet,
    cfg: &ReassignConfig,
) -> Result<ReassignedSpectrogram> {
    cfg.validate()?;
    let grid = &stfts.grid;
    if stfts.x.len() != grid.n_frames
        || stfts.x_th.len() != grid.n_frames
        || stfts.x_dh.len() != grid.n_frames
    {
        return Err(Error::GridMismatch(
            "transform matrices do not match the grid frame count".into(),
        ));
    }
    let bins = emitted_bins(grid, cfg.include_negative);
    let gate = 10f64.powf(cfg.threshold_db / 10.0);

    let per_frame = map_frames(grid.n_frames, |m| {
        let x = &stfts.x[m];
        let x_th = &stfts.x_th[m];
        let x_dh = &stfts.x_dh[m];
        let peak = frame_peak_power(x, bins);
        let mut pts = Vec::new();
        if peak <= 0.0 || !peak.is_finite() {
            return pts;
        }
        let floor = peak * gate;
        let t = grid.frame_time(m);
        for k in 0..bins {
            let p = x[k].norm_sqr();
            if p < floor || p == 0.0 {
                continue;
            }
            let (dt, dw) = transform_shifts(x[k], x_th[k], x_dh[k]);
            let t_hat = t + dt;
            let omega_hat = grid.bin_freq(k) + dw;
            if !t_hat.is_finite() || !omega_hat.is_finite() {
                continue;
            }
            pts.push(ReassignedPoint {
                frame: m,
                bin: k,
                nominal_time: t,
                nominal_freq: grid.bin_freq(k),
                t_hat,
                omega_hat,
                magnitude: p.sqrt(),
                power_db: 10.0 * (p / peak).log10(),
                phase: x[k].arg(),
                mixed_partial: f64::NAN,
            });
        }
        pts
    });

    Ok(ReassignedSpectrogram {
        grid: grid.clone(),
        points: per_frame.into_iter().flatten().collect(),
        threshold_db: cfg.threshold_db,
        backend: Backend::Transform,
        prune_tolerances: None,
    })
}

/// Reassign by finite differences of phase via cross-spectral surfaces.
///
/// `C` multiplies each cell by the conjugate of the same cell one sample
/// later in time (`Δt` = one sample, attributed to the earlier frame);
/// `L` multiplies the frame-center-referenced values of the two bins
/// adjacent to `k` (`Δω` = one bin, centered). The arguments of the
/// products are the phase differences, unwrapped automatically.
pub fn reassign_finite_difference(
    signal: &SampledSignal,
    window: &[f64],
    grid: &StftGrid,
    cfg: &ReassignConfig,
) -> Result<ReassignedSpectrogram> {
    cfg.validate()?;
    if window.len() != grid.window_length {
        return Err(Error::GridMismatch(format!(
            "window length {} does not match grid window length {}",
            window.len(),
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
    let bins = emitted_bins(grid, cfg.include_negative);
    let gate = 10f64.powf(cfg.threshold_db / 10.0);
    let period = 1.0 / grid.sample_rate;
    let dw = grid.bin_spacing();
    let tw = TwiddleTable::new(2 * nf);

    let per_frame = map_frames(grid.n_frames, |m| {
        let s = grid.frame_start(m) as isize;
        let frames = stft_frames_at(signal, window, &[s, s + 1], grid);
        let x0 = &frames[0];
        let x1 = &frames[1];
        let peak = frame_peak_power(x0, bins);
        let mut pts = Vec::new();
        if peak <= 0.0 || !peak.is_finite() {
            return pts;
        }
        let floor = peak * gate;
        let t = grid.frame_time(m);
        // Frame-center-referenced values for the bin-direction surface:
        // multiply bin k by e^(+jω_k·t) = e^(+j2πk(2s + N - 1)/(2·fft_size)).
        let num_base = 2 * s as i64 + (grid.window_length as i64 - 1);
        let two_nf = 2 * nf as i64;
        let centered: Vec<Complex64> = x0
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let num = (k as i64 * num_base).rem_euclid(two_nf) as usize;
                v * tw.at(num).conj()
            })
            .collect();
        for k in 0..bins {
            let p = x0[k].norm_sqr();
            if p < floor || p == 0.0 {
                continue;
            }
            let prev = &centered[(k + nf - 1) % nf];
            let next = &centered[(k + 1) % nf];
            // A zero cell anywhere in the cross products means there is no
            // phase difference to take (e.g. the one-sample-later frame
            // slid past the last nonzero sample).
            if x1[k].norm_sqr() == 0.0 || prev.norm_sqr() == 0.0 || next.norm_sqr() == 0.0 {
                continue;
            }
            let c = x1[k] * x0[k].conj();
            let dphi_dt = c.arg() / period;
            let omega_hat = grid.bin_freq(k) + dphi_dt;
            let l = next * prev.conj();
            let dphit_domega = l.arg() / (2.0 * dw);
            let t_hat = t - dphit_domega;
            if !t_hat.is_finite() || !omega_hat.is_finite() {
                continue;
            }
            pts.push(ReassignedPoint {
                frame: m,
                bin: k,
                nominal_time: t,
                nominal_freq: grid.bin_freq(k),
                t_hat,
                omega_hat,
                magnitude: p.sqrt(),
                power_db: 10.0 * (p / peak).log10(),
                phase: x0[k].arg(),
                mixed_partial: f64::NAN,
            });
        }
        pts
    });

    Ok(ReassignedSpectrogram {
        grid: grid.clone(),
        points: per_frame.into_iter().flatten().collect(),
        threshold_db: cfg.threshold_db,
        backend: Backend::FiniteDifference,
        prune_tolerances: None,
    })
}

/// Interpolated peak frequency by fitting a parabola to log magnitude at
/// `k_peak - 1, k_peak, k_peak + 1`. Returns rad/s.
pub fn parabolic_peak(mag_frame: &[f64], k_peak: usize, grid: &StftGrid) -> Result<f64> {
    if k_peak == 0 || k_peak + 1 >= mag_frame.len() {
        return Err(Error::InvalidParam(format!(
            "peak bin {k_peak} has no neighbors in a frame of {} bins",
            mag_frame.len()
        )));
    }
    let a = mag_frame[k_peak - 1];
    let b = mag_frame[k_peak];
    let c = mag_frame[k_peak + 1];
    if !(a > 0.0 && c > 0.0 && b > a && b > c) {
        return Err(Error::InvalidParam(format!(
            "bin {k_peak} is not a strict local maximum with positive neighbors"
        )));
    }
    let (la, lb, lc) = (a.ln(), b.ln(), c.ln());
    let delta = 0.5 * (la - lc) / (la - 2.0 * lb + lc);
    Ok(grid.bin_freq(k_peak) + delta * grid.bin_spacing())
}

impl ReassignedSpectrogram {
    /// Points of one frame (points are stored frame-major).
    pub fn frame_points(&self, frame: usize) -> impl Iterator<Item = &ReassignedPoint> {
        self.points.iter().filter(move |p| p.frame == frame)
    }
}
