//! Classification and despeckling of reassigned cells.
//!
//! The mixed partial derivative separates the two component families: cells
//! dominated by a quasi-sinusoid satisfy `1 + ∂²φ/∂t∂ω ≈ 0`, cells
//! dominated by an impulse satisfy `∂²φ/∂t∂ω ≈ 0`. Keeping only cells that
//! satisfy one of the two conditions removes the speckle that reassignment
//! scatters across low-consensus regions.

use crate::error::{Error, Result};
use crate::phasederiv::PhaseDerivField;
use crate::reassign::ReassignedSpectrogram;

/// Component family of one cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellClass {
    Sinusoid,
    Impulse,
    Neither,
}

impl CellClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            CellClass::Sinusoid => "sinusoid",
            CellClass::Impulse => "impulse",
            CellClass::Neither => "neither",
        }
    }
}

impl std::str::FromStr for CellClass {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sinusoid" | "sine" | "sin" => Ok(CellClass::Sinusoid),
            "impulse" | "imp" => Ok(CellClass::Impulse),
            "neither" | "none" => Ok(CellClass::Neither),
            other => Err(format!("unknown class '{other}'")),
        }
    }
}

/// Per-cell classification with the tolerances that produced it.
#[derive(Debug, Clone)]
pub struct PruneMask {
    pub grid: crate::spectral::StftGrid,
    pub class: Vec<Vec<CellClass>>,
    pub tol_sin: f64,
    pub tol_imp: f64,
}

/// Classify a single mixed-partial value.
#[inline]
pub fn classify_cell(mixed: f64, tol_sin: f64, tol_imp: f64) -> CellClass {
    let sin_resid = (1.0 + mixed).abs();
    let imp_resid = mixed.abs();
    let is_sin = sin_resid <= tol_sin;
    let is_imp = imp_resid <= tol_imp;
    match (is_sin, is_imp) {
        (true, true) => {
            if sin_resid <= imp_resid {
                CellClass::Sinusoid
            } else {
                CellClass::Impulse
            }
        }
        (true, false) => CellClass::Sinusoid,
        (false, true) => CellClass::Impulse,
        (false, false) => CellClass::Neither,
    }
}

/// Classify every valid cell of a mixed-partial field. Tolerances must lie
/// in (0, 0.5]. Invalid cells classify as Neither.
pub fn classify(field: &PhaseDerivField, tol_sin: f64, tol_imp: f64) -> Result<PruneMask> {
    for (name, tol) in [("tol_sin", tol_sin), ("tol_imp", tol_imp)] {
        if !(tol > 0.0 && tol <= 0.5) {
            return Err(Error::InvalidParam(format!(
                "{name} must be in (0, 0.5], got {tol}"
            )));
        }
    }
    let class = field
        .mixed
        .iter()
        .zip(&field.valid)
        .map(|(row, valid)| {
            row.iter()
                .zip(valid)
                .map(|(&mixed, &v)| {
                    if v && mixed.is_finite() {
                        classify_cell(mixed, tol_sin, tol_imp)
                    } else {
                        CellClass::Neither
                    }
                })
                .collect()
        })
        .collect();
    Ok(PruneMask {
        grid: field.grid.clone(),
        class,
        tol_sin,
        tol_imp,
    })
}

/// Keep only the points whose cell class is in `keep`.
pub fn despeckle(
    spectrogram: &ReassignedSpectrogram,
    mask: &PruneMask,
    keep: &[CellClass],
) -> Result<ReassignedSpectrogram> {
    if mask.grid != spectrogram.grid {
        return Err(Error::GridMismatch(
            "prune mask and spectrogram were built on different grids".into(),
        ));
    }
    let points = spectrogram
        .points
        .iter()
        .filter(|p| keep.contains(&mask.class[p.frame][p.bin]))
        .copied()
        .collect();
    Ok(ReassignedSpectrogram {
        grid: spectrogram.grid.clone(),
        points,
        threshold_db: spectrogram.threshold_db,
        backend: spectrogram.backend,
        prune_tolerances: Some((mask.tol_sin, mask.tol_imp)),
    })
}

/// Local standard deviation of reassigned frequency across neighboring
/// bins; low values mean high consensus and reliable estimates.
#[derive(Debug, Clone)]
pub struct ConsensusStats {
    pub grid: crate::spectral::StftGrid,
    /// σ of `omega_hat` over bins `k−r ..= k+r` in the same frame, rad/s;
    /// NaN where any neighborhood cell is missing.
    pub stdev: Vec<Vec<f64>>,
    pub radius: usize,
}

/// Per-cell frequency-consensus statistic over a `(2r+1)`-bin neighborhood.
pub fn frequency_consensus(
    spectrogram: &ReassignedSpectrogram,
    radius: usize,
) -> Result<ConsensusStats> {
    if radius < 1 {
        return Err(Error::InvalidParam("consensus radius must be at least 1".into()));
    }
    let grid = &spectrogram.grid;
    let nf = grid.fft_size;
    let mut omega = vec![vec![f64::NAN; nf]; grid.n_frames];
    for p in &spectrogram.points {
        omega[p.frame][p.bin] = p.omega_hat;
    }
    let stdev = omega
        .iter()
        .map(|row| {
            (0..nf)
                .map(|k| {
                    if k < radius || k + radius >= nf {
                        return f64::NAN;
                    }
                    let hood = &row[k - radius..=k + radius];
                    if hood.iter().any(|v| v.is_nan()) {
                        return f64::NAN;
                    }
                    let n = hood.len() as f64;
                    let mean = hood.iter().sum::<f64>() / n;
                    (hood.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
                })
                .collect()
        })
        .collect();
    Ok(ConsensusStats {
        grid: grid.clone(),
        stdev,
        radius,
    })
}
