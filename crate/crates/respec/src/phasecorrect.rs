//! Phase correction for reassigned points.
//!
//! A point's stored phase is referenced to the analysis-window center in
//! time and frequency; once the point has been moved to `(t̂, ω̂)` the phase
//! must move with it. Frequency first: linear interpolation of the locally
//! unwrapped frame-center-referenced phase spectrum at ω̂ (the STFT
//! filters are linear-phase across their passband). Then time: a shift by
//! `ω̂·(t̂ − t)` accounts for the oscillation over the reassignment
//! interval, assuming the frequency is constant across it.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::reassign::ReassignedSpectrogram;
use crate::spectral::StftGrid;

/// Wrap to (−π, π].
#[inline]
pub fn wrap_phase(x: f64) -> f64 {
    let mut y = x % std::f64::consts::TAU;
    if y > std::f64::consts::PI {
        y -= std::f64::consts::TAU;
    } else if y <= -std::f64::consts::PI {
        y += std::f64::consts::TAU;
    }
    y
}

/// Result of a frequency-direction phase interpolation.
#[derive(Debug, Clone, Copy)]
pub struct InterpolatedPhase {
    pub phase: f64,
    /// True when ω̂ fell outside the bracketing bins and the nearest-bin
    /// phase was used instead.
    pub fell_back: bool,
}

/// Interpolate the frame phase spectrum at `omega_hat`.
///
/// `frame_phases` must be frame-center-referenced (moving-window
/// convention): near a ridge that spectrum is locally flat, so linear
/// interpolation between the bracketing bins is meaningful. The two
/// neighbor phases are unwrapped relative to bin `k` before interpolating.
pub fn correct_phase_for_frequency(
    frame_phases: &[f64],
    k: usize,
    omega_hat: f64,
    grid: &StftGrid,
) -> Result<InterpolatedPhase> {
    if frame_phases.len() != grid.fft_size {
        return Err(Error::GridMismatch(format!(
            "frame has {} phases, grid fft size is {}",
            frame_phases.len(),
            grid.fft_size
        )));
    }
    if k >= frame_phases.len() {
        return Err(Error::InvalidParam(format!(
            "bin {k} out of range for fft size {}",
            grid.fft_size
        )));
    }
    if !omega_hat.is_finite() {
        return Err(Error::NonFinite("omega_hat"));
    }
    let dw = grid.bin_spacing();
    let w_k = grid.bin_freq(k);
    let phi_k = frame_phases[k];

    let interp = |w_a: f64, w_b: f64, phi_a: f64, phi_b: f64| {
        let frac = (omega_hat - w_a) / (w_b - w_a);
        wrap_phase(phi_a + frac * (phi_b - phi_a))
    };

    if omega_hat >= w_k && k + 1 < frame_phases.len() && omega_hat <= w_k + dw {
        let phi_next = phi_k + wrap_phase(frame_phases[k + 1] - phi_k);
        return Ok(InterpolatedPhase {
            phase: interp(w_k, w_k + dw, phi_k, phi_next),
            fell_back: false,
        });
    }
    if omega_hat <= w_k && k >= 1 && omega_hat >= w_k - dw {
        let phi_prev = phi_k + wrap_phase(frame_phases[k - 1] - phi_k);
        return Ok(InterpolatedPhase {
            phase: interp(w_k - dw, w_k, phi_prev, phi_k),
            fell_back: false,
        });
    }
    // Heavily reassigned cell: fall back to the bin nearest omega_hat.
    let nearest = ((omega_hat / dw).round().max(0.0) as usize).min(frame_phases.len() - 1);
    Ok(InterpolatedPhase {
        phase: wrap_phase(frame_phases[nearest]),
        fell_back: true,
    })
}

/// Shift a phase across the time-reassignment interval: returns
/// `phase + ω̂·(t̂ − t)`, wrapped to (−π, π].
#[inline]
pub fn correct_phase_for_time(phase: f64, omega_hat: f64, t_hat: f64, nominal_time: f64) -> f64 {
    wrap_phase(phase + omega_hat * (t_hat - nominal_time))
}

/// Statistics from a phase-correction pass.
#[derive(Debug, Clone, Copy, Default)]
pub struct CorrectionReport {
    pub corrected: usize,
    pub fallbacks: usize,
}

/// Apply both corrections to every point of a reassigned spectrogram.
///
/// `x_frames` are the stored STFT-convention frames under the base window
/// (one per grid frame); the frame-center-referenced phases needed for
/// interpolation are derived here. After this pass each point's `phase` is
/// the oscillator phase at `(t̂, ω̂)`.
pub fn correct_spectrogram_phases(
    spectrogram: &mut ReassignedSpectrogram,
    x_frames: &[Vec<Complex64>],
) -> Result<CorrectionReport> {
    let grid = spectrogram.grid.clone();
    if x_frames.len() != grid.n_frames {
        return Err(Error::GridMismatch(format!(
            "{} transform frames for {} grid frames",
            x_frames.len(),
            grid.n_frames
        )));
    }
    let mut report = CorrectionReport::default();
    let mut frame_cache: Option<(usize, Vec<f64>)> = None;
    for p in &mut spectrogram.points {
        let phases = match &frame_cache {
            Some((m, phases)) if *m == p.frame => phases,
            _ => {
                let t = grid.frame_time(p.frame);
                let phases: Vec<f64> = x_frames[p.frame]
                    .iter()
                    .enumerate()
                    .map(|(k, v)| wrap_phase(v.arg() + grid.bin_freq(k) * t))
                    .collect();
                frame_cache = Some((p.frame, phases));
                &frame_cache.as_ref().unwrap().1
            }
        };
        let at_freq = correct_phase_for_frequency(phases, p.bin, p.omega_hat, &grid)?;
        p.phase = correct_phase_for_time(at_freq.phase, p.omega_hat, p.t_hat, p.nominal_time);
        report.corrected += 1;
        if at_freq.fell_back {
            report.fallbacks += 1;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reassign::{reassign_transform, ReassignConfig};
    use crate::spectral::{stft_set, AuxTransforms, SampledSignal, StftGrid};
    use crate::windows::{build_window_set, WindowSpec};
    use std::f64::consts::{PI, TAU};

    const RATE: f64 = 44100.0;

    fn sine(freq: f64, len: usize, phase: f64) -> SampledSignal {
        let samples = (0..len)
            .map(|n| (TAU * freq * n as f64 / RATE + phase).cos())
            .collect();
        SampledSignal::new(samples, RATE).unwrap()
    }

    #[test]
    fn wrap_phase_boundaries() {
        assert_eq!(wrap_phase(0.0), 0.0);
        assert_eq!(wrap_phase(PI), PI);
        assert!((wrap_phase(-PI) - PI).abs() < 1e-15);
        assert!((wrap_phase(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_phase(TAU + 0.25) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn interpolation_at_bin_center_is_identity() {
        let grid = StftGrid::new(4096, 501, 125, 1024, RATE).unwrap();
        let phases: Vec<f64> = (0..1024).map(|k| wrap_phase(k as f64 * 0.01)).collect();
        let got = correct_phase_for_frequency(&phases, 100, grid.bin_freq(100), &grid).unwrap();
        assert!(!got.fell_back);
        assert!((got.phase - phases[100]).abs() < 1e-12);
    }

    #[test]
    fn interpolation_handles_wrapped_neighbors() {
        let grid = StftGrid::new(4096, 501, 125, 1024, RATE).unwrap();
        let mut phases = vec![0.0; 1024];
        phases[99] = PI - 0.05;
        phases[100] = -PI + 0.05; // 0.1 rad above bin 99 after unwrap
        phases[101] = -PI + 0.15;
        let w = grid.bin_freq(100) + 0.5 * grid.bin_spacing();
        let got = correct_phase_for_frequency(&phases, 100, w, &grid).unwrap();
        assert!(!got.fell_back);
        let d_prev = wrap_phase(got.phase - phases[100]).abs();
        let d_next = wrap_phase(got.phase - phases[101]).abs();
        assert!(d_prev < PI && d_next < PI);
        assert!((wrap_phase(got.phase - (-PI + 0.1))).abs() < 1e-12);
    }

    #[test]
    fn out_of_bracket_falls_back_to_nearest_bin() {
        let grid = StftGrid::new(4096, 501, 125, 1024, RATE).unwrap();
        let phases: Vec<f64> = (0..1024).map(|k| wrap_phase(k as f64 * 0.3)).collect();
        let w = grid.bin_freq(140); // far from bin 100
        let got = correct_phase_for_frequency(&phases, 100, w, &grid).unwrap();
        assert!(got.fell_back);
        assert!((got.phase - wrap_phase(phases[140])).abs() < 1e-12);
    }

    #[test]
    fn time_correction_identity_and_shift() {
        assert_eq!(correct_phase_for_time(0.5, TAU * 1000.0, 0.25, 0.25), 0.5);
        // +5 ms at 1 kHz: shift = 2π·1000·0.005 = 10π ≡ 0 (mod 2π)
        let got = correct_phase_for_time(0.5, TAU * 1000.0, 0.255, 0.25);
        assert!((got - 0.5).abs() < 1e-9);
        let got = correct_phase_for_time(0.0, TAU * 1000.0, 0.25025, 0.25);
        assert!((wrap_phase(got - TAU * 0.25)).abs() < 1e-9);
    }

    fn corrected_points(
        f0: f64,
        phase0: f64,
        len: usize,
    ) -> (ReassignedSpectrogram, StftGrid, SampledSignal) {
        let sig = sine(f0, len, phase0);
        let n = 1001;
        let ws = build_window_set(&WindowSpec::kaiser(n, 12.0, 1.0 / RATE)).unwrap();
        let grid = StftGrid::new(len, n, 125, 4096, RATE).unwrap();
        let set = stft_set(&sig, &ws, &grid, AuxTransforms::default()).unwrap();
        let mut ra = reassign_transform(&set, &ReassignConfig::with_threshold(-6.0)).unwrap();
        correct_spectrogram_phases(&mut ra, &set.x).unwrap();
        (ra, grid, sig)
    }

    #[test]
    fn corrected_phase_matches_signal_phase_at_frame_center() {
        // Inter-bin sinusoid: the corrected phase evaluated back at the
        // frame center must equal the signal's instantaneous phase there.
        let f0 = 1000.37; // between bins
        let phase0 = 0.8;
        let (ra, grid, _) = corrected_points(f0, phase0, 22050);
        let mut checked = 0;
        for p in &ra.points {
            if grid.is_boundary(p.frame) {
                continue;
            }
            // Undo the time shift to get the phase at the frame center.
            let at_center = wrap_phase(p.phase - p.omega_hat * (p.t_hat - p.nominal_time));
            let truth = wrap_phase(TAU * f0 * p.nominal_time + phase0);
            assert!(
                wrap_phase(at_center - truth).abs() < 0.05,
                "frame {} bin {}: {} vs {}",
                p.frame,
                p.bin,
                at_center,
                truth
            );
            checked += 1;
        }
        assert!(checked > 100);
    }

    #[test]
    fn corrected_phase_advances_by_omega_hop_between_frames() {
        let f0 = 1000.37;
        let (ra, grid, _) = corrected_points(f0, 0.0, 22050);
        let hop_t = grid.hop as f64 / RATE;
        let mut checked = 0;
        let peak_bin = (f0 / RATE * 4096.0).round() as usize;
        let peaks: Vec<_> = ra.points.iter().filter(|p| p.bin == peak_bin).collect();
        for pair in peaks.windows(2) {
            if pair[1].frame != pair[0].frame + 1 || grid.is_boundary(pair[1].frame) {
                continue;
            }
            // Phases at (t̂, ω̂): the oscillator advances by ω̂·Δt̂.
            let expect = pair[0].omega_hat * (pair[1].t_hat - pair[0].t_hat);
            let got = pair[1].phase - pair[0].phase;
            assert!(
                wrap_phase(got - expect).abs() < 0.02,
                "frames {}->{}: advance {} vs {} (hop {hop_t})",
                pair[0].frame,
                pair[1].frame,
                got,
                expect
            );
            checked += 1;
        }
        assert!(checked > 50);
    }

    #[test]
    fn resynthesized_oscillator_matches_waveform() {
        // cos(ω̂(t - t̂) + phase) should correlate > 0.99 with the input
        // around t̂ over one window length.
        let f0 = 1000.37;
        let phase0 = 1.3;
        let (ra, grid, sig) = corrected_points(f0, phase0, 22050);
        let n = grid.window_length;
        let mut checked = 0;
        for p in &ra.points {
            if grid.is_boundary(p.frame) || p.power_db < -1.0 {
                continue;
            }
            let start = (p.t_hat * RATE) as isize - (n as isize) / 2;
            let mut dot = 0.0;
            let mut ee = 0.0;
            let mut ss = 0.0;
            for i in 0..n {
                let idx = start + i as isize;
                let t = idx as f64 / RATE;
                let synth = (p.omega_hat * (t - p.t_hat) + p.phase).cos();
                let x = sig.sample_at(idx);
                dot += synth * x;
                ee += synth * synth;
                ss += x * x;
            }
            let corr = dot / (ee.sqrt() * ss.sqrt());
            assert!(
                corr > 0.99,
                "frame {} bin {}: correlation {corr}",
                p.frame,
                p.bin
            );
            checked += 1;
        }
        assert!(checked > 20);
    }

    #[test]
    fn corrections_are_amplitude_invariant() {
        let f0 = 1000.37;
        let len = 8192;
        let sig = sine(f0, len, 0.8);
        let scaled = SampledSignal::new(
            sig.samples().iter().map(|&v| 11.0 * v).collect(),
            RATE,
        )
        .unwrap();
        let n = 1001;
        let ws = build_window_set(&WindowSpec::kaiser(n, 12.0, 1.0 / RATE)).unwrap();
        let grid = StftGrid::new(len, n, 125, 4096, RATE).unwrap();
        let cfg = ReassignConfig::with_threshold(-6.0);
        let mut ra = {
            let set = stft_set(&sig, &ws, &grid, AuxTransforms::default()).unwrap();
            let mut r = reassign_transform(&set, &cfg).unwrap();
            correct_spectrogram_phases(&mut r, &set.x).unwrap();
            r
        };
        let mut rb = {
            let set = stft_set(&scaled, &ws, &grid, AuxTransforms::default()).unwrap();
            let mut r = reassign_transform(&set, &cfg).unwrap();
            correct_spectrogram_phases(&mut r, &set.x).unwrap();
            r
        };
        assert_eq!(ra.points.len(), rb.points.len());
        for (a, b) in ra.points.iter_mut().zip(rb.points.iter_mut()) {
            assert!((wrap_phase(a.phase - b.phase)).abs() < 1e-9);
        }
    }
}
