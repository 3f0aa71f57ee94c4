//! Mixed and second-order partial derivatives of STFT phase.
//!
//! Transform route (per valid cell, `p = |X|²`):
//!
//! ```text
//! ∂²φ/∂t∂ω = Re{X_TDh·X*/p} − Re{X_Th·X_Dh/X²}
//! ∂²φ/∂ω²  = Im{(X_Th·X*/p)²} − Im{X_T2h·X*/p}
//! ∂²φ/∂t²  = Im{X_D2h·X*/p} − Im{(X_Dh·X*/p)²}
//! ```
//!
//! A sinusoid-dominated cell gives mixed ≈ −1, an impulse-dominated cell
//! mixed ≈ 0 (STFT convention; the moving-window convention reads one
//! higher). The finite-difference route differences unwrapped phase on the
//! sample/bin grid and serves as the independent oracle.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec::map_frames;
use crate::phasecorrect::wrap_phase;
use crate::spectral::{stft_frames_at, SampledSignal, StftGrid, StftSet, TwiddleTable};

/// Per-cell phase-derivative values over a grid, masked below threshold.
#[derive(Debug, Clone)]
pub struct PhaseDerivField {
    pub grid: StftGrid,
    /// ∂²φ/∂t∂ω, dimensionless; NaN where invalid.
    pub mixed: Vec<Vec<f64>>,
    /// ∂²φ/∂ω², s²; NaN where invalid.
    pub second_freq: Option<Vec<Vec<f64>>>,
    /// ∂²φ/∂t², rad/s per s; NaN where invalid.
    pub second_time: Option<Vec<Vec<f64>>>,
    /// Cells at or above the per-frame power gate.
    pub valid: Vec<Vec<bool>>,
    pub threshold_db: f64,
}

fn check_threshold(threshold_db: f64) -> Result<()> {
    if !threshold_db.is_finite() || threshold_db > 0.0 {
        return Err(Error::InvalidParam(format!(
            "threshold must be <= 0 dB, got {threshold_db}"
        )));
    }
    Ok(())
}

fn validity_row(x: &[Complex64], positive_bins: usize, gate: f64) -> (Vec<bool>, Vec<f64>) {
    let peak = x[..positive_bins]
        .iter()
        .map(|v| v.norm_sqr())
        .fold(0.0, f64::max);
    let floor = if peak > 0.0 && peak.is_finite() {
        peak * gate
    } else {
        f64::INFINITY
    };
    let powers: Vec<f64> = x.iter().map(|v| v.norm_sqr()).collect();
    let valid = powers.iter().map(|&p| p >= floor && p > 0.0).collect();
    (valid, powers)
}

/// Mixed partial ∂²φ/∂t∂ω from the four-transform formula.
pub fn mixed_partial(stfts: &StftSet, threshold_db: f64) -> Result<PhaseDerivField> {
    check_threshold(threshold_db)?;
    let x_tdh = stfts
        .x_tdh
        .as_ref()
        .ok_or(Error::MissingTransform("X_TDh"))?;
    let grid = &stfts.grid;
    let gate = 10f64.powf(threshold_db / 10.0);
    let pos = grid.positive_bins();

    let rows = map_frames(grid.n_frames, |m| {
        let x = &stfts.x[m];
        let (valid, powers) = validity_row(x, pos, gate);
        let mixed: Vec<f64> = (0..grid.fft_size)
            .map(|k| {
                if !valid[k] {
                    return f64::NAN;
                }
                mixed_partial_cell(x[k], stfts.x_th[m][k], stfts.x_dh[m][k], x_tdh[m][k], powers[k])
            })
            .collect();
        (mixed, valid)
    });

    let (mixed, valid) = rows.into_iter().unzip();
    Ok(PhaseDerivField {
        grid: grid.clone(),
        mixed,
        second_freq: None,
        second_time: None,
        valid,
        threshold_db,
    })
}

#[inline]
pub fn mixed_partial_cell(
    x: Complex64,
    x_th: Complex64,
    x_dh: Complex64,
    x_tdh: Complex64,
    power: f64,
) -> f64 {
    let xc = x.conj();
    (x_tdh * xc).re / power - (x_th * x_dh / (x * x)).re
}

/// Second partial of phase in frequency, ∂²φ/∂ω² (s²); NaN where masked.
pub fn second_partial_freq(stfts: &StftSet, threshold_db: f64) -> Result<Vec<Vec<f64>>> {
    check_threshold(threshold_db)?;
    let x_t2h = stfts
        .x_t2h
        .as_ref()
        .ok_or(Error::MissingTransform("X_T2h"))?;
    let grid = &stfts.grid;
    let gate = 10f64.powf(threshold_db / 10.0);
    let pos = grid.positive_bins();
    Ok(map_frames(grid.n_frames, |m| {
        let x = &stfts.x[m];
        let (valid, powers) = validity_row(x, pos, gate);
        (0..grid.fft_size)
            .map(|k| {
                if !valid[k] {
                    return f64::NAN;
                }
                let xc = x[k].conj();
                let r_t = x_t2h[m][k] * xc / powers[k];
                let r = stfts.x_th[m][k] * xc / powers[k];
                (r * r).im - r_t.im
            })
            .collect()
    }))
}

/// Second partial of phase in time, ∂²φ/∂t²; for a linear chirp this is the
/// chirp rate in rad/s². NaN where masked.
pub fn second_partial_time(stfts: &StftSet, threshold_db: f64) -> Result<Vec<Vec<f64>>> {
    check_threshold(threshold_db)?;
    let x_d2h = stfts
        .x_d2h
        .as_ref()
        .ok_or(Error::MissingTransform("X_D2h"))?;
    let grid = &stfts.grid;
    let gate = 10f64.powf(threshold_db / 10.0);
    let pos = grid.positive_bins();
    Ok(map_frames(grid.n_frames, |m| {
        let x = &stfts.x[m];
        let (valid, powers) = validity_row(x, pos, gate);
        (0..grid.fft_size)
            .map(|k| {
                if !valid[k] {
                    return f64::NAN;
                }
                let xc = x[k].conj();
                let r_d2 = x_d2h[m][k] * xc / powers[k];
                let r = stfts.x_dh[m][k] * xc / powers[k];
                r_d2.im - (r * r).im
            })
            .collect()
    }))
}

impl PhaseDerivField {
    /// Attach ∂²φ/∂ω² computed from the same transform set.
    pub fn add_second_partial_freq(&mut self, stfts: &StftSet) -> Result<()> {
        self.second_freq = Some(second_partial_freq(stfts, self.threshold_db)?);
        Ok(())
    }

    /// Attach ∂²φ/∂t² computed from the same transform set.
    pub fn add_second_partial_time(&mut self, stfts: &StftSet) -> Result<()> {
        self.second_time = Some(second_partial_time(stfts, self.threshold_db)?);
        Ok(())
    }
}

/// Finite-difference estimates of the phase partials, the oracle route.
///
/// All fields are `[frames][bins]` with NaN at masked cells. Time
/// differences use frames one sample apart; frequency differences use
/// adjacent bins of the frame-center-referenced phase (so the differences
/// stay well inside ±π near a ridge) and are converted back to the STFT
/// convention. Every difference is corrected by ±2π when it exceeds π.
#[derive(Debug, Clone)]
pub struct FdPhasePartials {
    pub grid: StftGrid,
    /// ∂φ/∂t (rad/s); for a sinusoid at the peak bin this is the detuning
    /// ω₀ − ω_k.
    pub dphi_dt: Vec<Vec<f64>>,
    /// ∂φ/∂ω (s); for an impulse this is −t₀.
    pub dphi_domega: Vec<Vec<f64>>,
    /// ∂²φ/∂t∂ω (STFT convention).
    pub mixed: Vec<Vec<f64>>,
    /// ∂²φ/∂t∂ω of the moving-window phase; reads one higher than `mixed`.
    pub mixed_mwt: Vec<Vec<f64>>,
    /// ∂²φ/∂ω² (s²).
    pub second_freq: Vec<Vec<f64>>,
    /// ∂²φ/∂t² (rad/s²).
    pub second_time: Vec<Vec<f64>>,
    pub valid: Vec<Vec<bool>>,
}

/// Compute all finite-difference phase partials on the grid.
pub fn phase_partials_fd(
    signal: &SampledSignal,
    window: &[f64],
    grid: &StftGrid,
    threshold_db: f64,
) -> Result<FdPhasePartials> {
    check_threshold(threshold_db)?;
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
    let gate = 10f64.powf(threshold_db / 10.0);
    let pos = grid.positive_bins();
    let period = 1.0 / grid.sample_rate;
    let dw = grid.bin_spacing();
    let tw = TwiddleTable::new(nf);

    struct Row {
        dphi_dt: Vec<f64>,
        dphi_domega: Vec<f64>,
        mixed: Vec<f64>,
        mixed_mwt: Vec<f64>,
        second_freq: Vec<f64>,
        second_time: Vec<f64>,
        valid: Vec<bool>,
    }

    let rows = map_frames(grid.n_frames, |m| {
        let s = grid.frame_start(m) as isize;
        let frames = stft_frames_at(signal, window, &[s - 1, s, s + 1], grid);
        let (xm, x0, xp) = (&frames[0], &frames[1], &frames[2]);
        let (valid, _) = validity_row(x0, pos, gate);
        let t = grid.frame_time(m);

        let phi0: Vec<f64> = x0.iter().map(|v| v.arg()).collect();
        let phim: Vec<f64> = xm.iter().map(|v| v.arg()).collect();
        let phip: Vec<f64> = xp.iter().map(|v| v.arg()).collect();
        // Moving-window phase of the center frame, for bin-direction
        // differences.
        let psi0: Vec<f64> = (0..nf)
            .map(|k| wrap_phase(phi0[k] + grid.bin_freq(k) * t))
            .collect();

        let mut row = Row {
            dphi_dt: vec![f64::NAN; nf],
            dphi_domega: vec![f64::NAN; nf],
            mixed: vec![f64::NAN; nf],
            mixed_mwt: vec![f64::NAN; nf],
            second_freq: vec![f64::NAN; nf],
            second_time: vec![f64::NAN; nf],
            valid,
        };
        for k in 0..nf {
            if !row.valid[k] {
                continue;
            }
            let kp = (k + 1) % nf;
            let km = (k + nf - 1) % nf;
            // Every participating cell must carry energy; a frame that
            // slides past the last nonzero sample has no phase to
            // difference.
            let participants = [
                xm[k], xp[k], x0[kp], x0[km], xp[kp], xp[km],
            ];
            if participants.iter().any(|v| v.norm_sqr() == 0.0) {
                row.valid[k] = false;
                continue;
            }
            let fwd_t = wrap_phase(phip[k] - phi0[k]);
            let bwd_t = wrap_phase(phi0[k] - phim[k]);
            row.dphi_dt[k] = (fwd_t + bwd_t) / (2.0 * period);
            row.second_time[k] = (fwd_t - bwd_t) / (period * period);

            let fwd_w = wrap_phase(psi0[kp] - psi0[k]);
            let bwd_w = wrap_phase(psi0[k] - psi0[km]);
            // ∂φ_t/∂ω − t converts back to the STFT convention.
            row.dphi_domega[k] = (fwd_w + bwd_w) / (2.0 * dw) - t;
            row.second_freq[k] = (fwd_w - bwd_w) / (dw * dw);

            // Mixed partial: bin-difference of the per-bin time difference,
            // via products so the unwrap is automatic.
            let c_p = xp[kp] * x0[kp].conj();
            let c_m = xp[km] * x0[km].conj();
            row.mixed[k] = (c_p * c_m.conj()).arg() / (2.0 * dw * period);
            // Same differences taken on moving-window phases: each per-bin
            // time difference picks up the frame-reference rotation ω_j·Δt
            // (e^(j2πj/fft_size), exact twiddles).
            let cm_p = c_p * tw.at(kp).conj();
            let cm_m = c_m * tw.at(km).conj();
            row.mixed_mwt[k] = (cm_p * cm_m.conj()).arg() / (2.0 * dw * period);
        }
        row
    });

    let n = grid.n_frames;
    let mut out = FdPhasePartials {
        grid: grid.clone(),
        dphi_dt: Vec::with_capacity(n),
        dphi_domega: Vec::with_capacity(n),
        mixed: Vec::with_capacity(n),
        mixed_mwt: Vec::with_capacity(n),
        second_freq: Vec::with_capacity(n),
        second_time: Vec::with_capacity(n),
        valid: Vec::with_capacity(n),
    };
    for r in rows {
        out.dphi_dt.push(r.dphi_dt);
        out.dphi_domega.push(r.dphi_domega);
        out.mixed.push(r.mixed);
        out.mixed_mwt.push(r.mixed_mwt);
        out.second_freq.push(r.second_freq);
        out.second_time.push(r.second_time);
        out.valid.push(r.valid);
    }
    Ok(out)
}

/// Copy mixed-partial values onto the matching points of a reassigned
/// spectrogram.
pub fn attach_mixed_partial(
    spectrogram: &mut crate::reassign::ReassignedSpectrogram,
    mixed: &[Vec<f64>],
) -> Result<()> {
    if mixed.len() != spectrogram.grid.n_frames {
        return Err(Error::GridMismatch(format!(
            "mixed field has {} frames, grid has {}",
            mixed.len(),
            spectrogram.grid.n_frames
        )));
    }
    for p in &mut spectrogram.points {
        p.mixed_partial = mixed[p.frame][p.bin];
    }
    Ok(())
}
