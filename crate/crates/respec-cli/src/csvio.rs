//! Point-cloud CSV format shared by analyze, prune and render.

use respec::reassign::ReassignedPoint;
use respec::{CellClass, Error};

pub const HEADER: &str =
    "nominal_time_s,nominal_freq_hz,t_hat_s,f_hat_hz,mag,power_db,phase_rad,mixed_partial,class";

/// One parsed CSV row.
#[derive(Debug, Clone)]
pub struct CsvPoint {
    pub nominal_time_s: f64,
    pub nominal_freq_hz: f64,
    pub t_hat_s: f64,
    pub f_hat_hz: f64,
    pub mag: f64,
    pub power_db: f64,
    pub phase_rad: f64,
    pub mixed_partial: f64,
    pub class: CellClass,
}

/// Format with `digits` significant digits, plain decimal where readable.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".to_string()
        } else if x > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        };
    }
    let e = format!("{:.*e}", digits - 1, x);
    // "d.dddddddde±ee" -> plain decimal when the exponent is moderate
    let (mantissa, exp) = e.split_once('e').expect("exponential format");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-5..15).contains(&exp) {
        return trim_zeros(mantissa) + "e" + &exp.to_string();
    }
    let neg = mantissa.starts_with('-');
    let m: String = mantissa
        .chars()
        .filter(|c| c.is_ascii_digit())
        .collect();
    let point = exp + 1; // digits before the decimal point
    let mut s = String::new();
    if neg {
        s.push('-');
    }
    if point <= 0 {
        s.push_str("0.");
        for _ in 0..-point {
            s.push('0');
        }
        s.push_str(&m);
    } else if (point as usize) >= m.len() {
        s.push_str(&m);
        for _ in 0..(point as usize - m.len()) {
            s.push('0');
        }
    } else {
        s.push_str(&m[..point as usize]);
        s.push('.');
        s.push_str(&m[point as usize..]);
    }
    trim_zeros(&s)
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        let t = s.trim_end_matches('0');
        t.trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

pub fn format_row(p: &ReassignedPoint, class: CellClass) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{}",
        fmt_sig(p.nominal_time, 9),
        fmt_sig(p.nominal_freq / std::f64::consts::TAU, 9),
        fmt_sig(p.t_hat, 9),
        fmt_sig(p.omega_hat / std::f64::consts::TAU, 9),
        fmt_sig(p.magnitude, 9),
        fmt_sig(p.power_db, 9),
        fmt_sig(p.phase, 9),
        fmt_sig(p.mixed_partial, 9),
        class.as_str()
    )
}

pub fn format_parsed_row(p: &CsvPoint, class: CellClass) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{}",
        fmt_sig(p.nominal_time_s, 9),
        fmt_sig(p.nominal_freq_hz, 9),
        fmt_sig(p.t_hat_s, 9),
        fmt_sig(p.f_hat_hz, 9),
        fmt_sig(p.mag, 9),
        fmt_sig(p.power_db, 9),
        fmt_sig(p.phase_rad, 9),
        fmt_sig(p.mixed_partial, 9),
        class.as_str()
    )
}

fn parse_field(s: &str, line: usize, what: &str) -> Result<f64, Error> {
    match s {
        "nan" => Ok(f64::NAN),
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => s.parse().map_err(|_| {
            Error::InvalidParam(format!("line {line}: cannot parse {what} from '{s}'"))
        }),
    }
}

/// Parse an analysis CSV produced by this tool.
pub fn parse(text: &str) -> Result<Vec<CsvPoint>, Error> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == HEADER => {}
        Some((_, h)) => {
            return Err(Error::InvalidParam(format!(
                "unexpected CSV header '{}'",
                h.trim()
            )))
        }
        None => return Err(Error::InvalidParam("empty CSV".into())),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(Error::InvalidParam(format!(
                "line {}: expected 9 fields, found {}",
                i + 1,
                fields.len()
            )));
        }
        rows.push(CsvPoint {
            nominal_time_s: parse_field(fields[0], i + 1, "nominal_time_s")?,
            nominal_freq_hz: parse_field(fields[1], i + 1, "nominal_freq_hz")?,
            t_hat_s: parse_field(fields[2], i + 1, "t_hat_s")?,
            f_hat_hz: parse_field(fields[3], i + 1, "f_hat_hz")?,
            mag: parse_field(fields[4], i + 1, "mag")?,
            power_db: parse_field(fields[5], i + 1, "power_db")?,
            phase_rad: parse_field(fields[6], i + 1, "phase_rad")?,
            mixed_partial: parse_field(fields[7], i + 1, "mixed_partial")?,
            class: fields[8].parse().map_err(Error::InvalidParam)?,
        });
    }
    Ok(rows)
}
