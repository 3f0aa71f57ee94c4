//! Rasterize reassigned points into an 8-bit grayscale PGM image.

use respec::Error;

use crate::csvio::CsvPoint;

pub struct RenderParams {
    pub width: usize,
    pub height: usize,
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    pub f_min: Option<f64>,
    pub f_max: Option<f64>,
    /// dB below the image maximum mapped to gray 0.
    pub floor_db: f64,
}

pub struct RasterImage {
    pub width: usize,
    pub height: usize,
    /// Row-major, row 0 = highest frequency.
    pub gray: Vec<u8>,
    pub dropped: usize,
    pub empty: bool,
}

impl RasterImage {
    /// Binary PGM (P5, maxval 255).
    pub fn pgm_bytes(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.gray);
        out
    }
}

/// Accumulate each point's linear power into the pixel containing
/// `(t_hat, f_hat)`, then map to 8-bit gray over `[floor_db, 0]` relative
/// to the image maximum.
pub fn render(points: &[CsvPoint], params: &RenderParams) -> Result<RasterImage, Error> {
    if params.width < 1 || params.height < 1 {
        return Err(Error::InvalidParam("image must be at least 1x1 pixels".into()));
    }
    if !params.floor_db.is_finite() || params.floor_db >= 0.0 {
        return Err(Error::InvalidParam(format!(
            "floor must be negative dB, got {}",
            params.floor_db
        )));
    }
    let (mut t0, mut t1) = (params.t_min, params.t_max);
    let (mut f0, mut f1) = (params.f_min, params.f_max);
    if t0.is_none() || t1.is_none() || f0.is_none() || f1.is_none() {
        let mut tlo = f64::INFINITY;
        let mut thi = f64::NEG_INFINITY;
        let mut fhi = f64::NEG_INFINITY;
        for p in points {
            tlo = tlo.min(p.t_hat_s);
            thi = thi.max(p.t_hat_s);
            fhi = fhi.max(p.f_hat_hz);
        }
        if points.is_empty() {
            tlo = 0.0;
            thi = 1.0;
            fhi = 1.0;
        }
        t0.get_or_insert(tlo);
        t1.get_or_insert(thi);
        f0.get_or_insert(0.0);
        f1.get_or_insert(fhi);
    }
    let (t0, t1, f0, f1) = (t0.unwrap(), t1.unwrap(), f0.unwrap(), f1.unwrap());
    if t1 <= t0 || f1 <= f0 || [t0, t1, f0, f1].iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidParam(format!(
            "empty render range: t [{t0}, {t1}], f [{f0}, {f1}]"
        )));
    }

    let w = params.width;
    let h = params.height;
    let mut power = vec![0.0f64; w * h];
    let mut dropped = 0usize;
    for p in points {
        let tx = (p.t_hat_s - t0) / (t1 - t0);
        let fy = (p.f_hat_hz - f0) / (f1 - f0);
        if !(0.0..=1.0).contains(&tx) || !(0.0..=1.0).contains(&fy) {
            dropped += 1;
            continue;
        }
        let col = ((tx * w as f64) as usize).min(w - 1);
        let row_up = ((fy * h as f64) as usize).min(h - 1);
        let row = h - 1 - row_up; // row 0 = highest frequency
        power[row * w + col] += p.mag * p.mag;
    }

    let pmax = power.iter().fold(0.0f64, |a, &b| a.max(b));
    let empty = pmax <= 0.0;
    let gray = power
        .iter()
        .map(|&p| {
            if p <= 0.0 || empty {
                0
            } else {
                let db = (10.0 * (p / pmax).log10()).clamp(params.floor_db, 0.0);
                (255.0 * (db - params.floor_db) / -params.floor_db).round() as u8
            }
        })
        .collect();
    Ok(RasterImage { width: w, height: h, gray, dropped, empty })
}
