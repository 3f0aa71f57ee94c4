//! WAV file reading/writing and the deterministic synthetic test corpus.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub use crate::spectral::SampledSignal;

/// Synthetic signal families used throughout the test corpus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SignalKind {
    /// `a·cos(2πft + φ₀)`.
    Sinusoid { freq_hz: f64, phase: f64 },
    /// `a·cos(2π(f₀t + ½βt²))` sweeping `start_hz → end_hz` over the
    /// duration.
    LinearChirp { start_hz: f64, end_hz: f64 },
    /// Single unit sample at `sample_index`.
    Impulse { sample_index: usize },
    /// `Σ_k (a/k)·e^(−k(t−onset)/decay)·cos(2πk·f0·(t−onset))` for
    /// `t ≥ onset`: harmonically spaced partials with a sharp attack and
    /// per-partial exponential decay.
    HarmonicPluck { f0_hz: f64, partials: usize, decay_s: f64, onset_s: f64 },
    /// Seeded uniform noise in [−a, a]; identical across runs and
    /// platforms.
    WhiteNoise { seed: u64 },
    /// Sinusoid plus a scaled unit impulse.
    Mixture { sine_hz: f64, impulse_index: usize, impulse_gain: f64 },
}

/// Full description of a synthetic signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalSpec {
    pub kind: SignalKind,
    pub duration_s: f64,
    pub sample_rate: f64,
    /// Linear amplitude.
    pub amplitude: f64,
}

impl SignalSpec {
    fn validate(&self) -> Result<()> {
        if self.duration_s <= 0.0 || !self.duration_s.is_finite() {
            return Err(Error::InvalidParam(format!(
                "duration must be positive, got {}",
                self.duration_s
            )));
        }
        if self.sample_rate <= 0.0 || !self.sample_rate.is_finite() {
            return Err(Error::InvalidParam(format!(
                "sample rate must be positive, got {}",
                self.sample_rate
            )));
        }
        if !self.amplitude.is_finite() {
            return Err(Error::NonFinite("amplitude"));
        }
        let nyquist = self.sample_rate / 2.0;
        let check = |f: f64, what: &str| {
            if f >= nyquist {
                Err(Error::InvalidParam(format!(
                    "{what} {f} Hz aliases at sample rate {}",
                    self.sample_rate
                )))
            } else {
                Ok(())
            }
        };
        match self.kind {
            SignalKind::Sinusoid { freq_hz, .. } => check(freq_hz, "frequency")?,
            SignalKind::LinearChirp { start_hz, end_hz } => {
                check(start_hz, "chirp start")?;
                check(end_hz, "chirp end")?;
            }
            SignalKind::HarmonicPluck { f0_hz, partials, .. } => {
                if partials == 0 {
                    return Err(Error::InvalidParam("pluck needs at least one partial".into()));
                }
                check(f0_hz * partials as f64, "highest partial")?;
            }
            SignalKind::Mixture { sine_hz, .. } => check(sine_hz, "mixture sinusoid")?,
            SignalKind::Impulse { .. } | SignalKind::WhiteNoise { .. } => {}
        }
        Ok(())
    }
}

/// Knuth's MMIX linear congruential generator; fully specified so golden
/// files are cross-platform stable.
struct Lcg {
    state: u64,
}

impl Lcg {
    const MUL: u64 = 6364136223846793005;
    const INC: u64 = 1442695040888963407;

    fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Uniform in [−1, 1) from the top 53 bits.
    fn next_symmetric(&mut self) -> f64 {
        self.state = self.state.wrapping_mul(Self::MUL).wrapping_add(Self::INC);
        let u = (self.state >> 11) as f64 / (1u64 << 53) as f64;
        2.0 * u - 1.0
    }
}

/// Generate the exact closed-form samples of a synthetic signal.
pub fn generate(spec: &SignalSpec) -> Result<SampledSignal> {
    spec.validate()?;
    let rate = spec.sample_rate;
    let n = (spec.duration_s * rate).round() as usize;
    let a = spec.amplitude;
    let samples: Vec<f64> = match spec.kind {
        SignalKind::Sinusoid { freq_hz, phase } => (0..n)
            .map(|i| {
                let t = i as f64 / rate;
                a * (std::f64::consts::TAU * freq_hz * t + phase).cos()
            })
            .collect(),
        SignalKind::LinearChirp { start_hz, end_hz } => {
            let beta = (end_hz - start_hz) / spec.duration_s;
            (0..n)
                .map(|i| {
                    let t = i as f64 / rate;
                    a * (std::f64::consts::TAU * (start_hz * t + 0.5 * beta * t * t)).cos()
                })
                .collect()
        }
        SignalKind::Impulse { sample_index } => {
            if sample_index >= n {
                return Err(Error::InvalidParam(format!(
                    "impulse index {sample_index} outside {n}-sample signal"
                )));
            }
            let mut s = vec![0.0; n];
            s[sample_index] = a;
            s
        }
        SignalKind::HarmonicPluck { f0_hz, partials, decay_s, onset_s } => {
            if decay_s <= 0.0 || decay_s.is_nan() {
                return Err(Error::InvalidParam(format!(
                    "pluck decay must be positive, got {decay_s}"
                )));
            }
            (0..n)
                .map(|i| {
                    let t = i as f64 / rate - onset_s;
                    if t < 0.0 {
                        return 0.0;
                    }
                    (1..=partials)
                        .map(|k| {
                            let kf = k as f64;
                            (a / kf)
                                * (-t * kf / decay_s).exp()
                                * (std::f64::consts::TAU * kf * f0_hz * t).cos()
                        })
                        .sum()
                })
                .collect()
        }
        SignalKind::WhiteNoise { seed } => {
            let mut lcg = Lcg::new(seed);
            (0..n).map(|_| a * lcg.next_symmetric()).collect()
        }
        SignalKind::Mixture { sine_hz, impulse_index, impulse_gain } => {
            if impulse_index >= n {
                return Err(Error::InvalidParam(format!(
                    "impulse index {impulse_index} outside {n}-sample signal"
                )));
            }
            let mut s: Vec<f64> = (0..n)
                .map(|i| {
                    let t = i as f64 / rate;
                    a * (std::f64::consts::TAU * sine_hz * t).cos()
                })
                .collect();
            s[impulse_index] += a * impulse_gain;
            s
        }
    };
    SampledSignal::new(samples, rate)
}

/// Sample encodings supported by [`write_wav`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WavFormat {
    Pcm16,
    Float32,
}

fn read_exact_or(r: &mut impl Read, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf)
        .map_err(|_| Error::TruncatedWav(format!("unexpected end of file in {what}")))
}

fn le_u16(b: &[u8]) -> u16 {
    u16::from_le_bytes([b[0], b[1]])
}

fn le_u32(b: &[u8]) -> u32 {
    u32::from_le_bytes([b[0], b[1], b[2], b[3]])
}

/// Read a RIFF/WAVE file: PCM 16-bit or IEEE float 32-bit, any channel
/// count (first channel taken). PCM samples are normalized by 1/32768.
pub fn read_wav(path: impl AsRef<Path>) -> Result<SampledSignal> {
    let mut r = BufReader::new(File::open(path.as_ref())?);
    let mut head = [0u8; 12];
    read_exact_or(&mut r, &mut head, "RIFF header")?;
    if &head[0..4] != b"RIFF" {
        return Err(Error::MalformedWav(format!(
            "expected RIFF magic, found {:?}",
            String::from_utf8_lossy(&head[0..4])
        )));
    }
    if &head[8..12] != b"WAVE" {
        return Err(Error::MalformedWav("missing WAVE form type".into()));
    }

    let mut fmt: Option<(u16, u16, u32, u16)> = None; // (tag, channels, rate, bits)
    loop {
        let mut chunk = [0u8; 8];
        if r.read_exact(&mut chunk).is_err() {
            return Err(Error::MalformedWav("no data chunk found".into()));
        }
        let id = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let size = le_u32(&chunk[4..8]) as usize;
        match &id {
            b"fmt " => {
                if size < 16 {
                    return Err(Error::MalformedWav(format!("fmt chunk too small ({size})")));
                }
                let mut body = vec![0u8; size + (size & 1)];
                read_exact_or(&mut r, &mut body, "fmt chunk")?;
                fmt = Some((le_u16(&body[0..2]), le_u16(&body[2..4]), le_u32(&body[4..8]), le_u16(&body[14..16])));
            }
            b"data" => {
                let (tag, channels, rate, bits) = fmt.ok_or_else(|| {
                    Error::MalformedWav("data chunk before fmt chunk".into())
                })?;
                if channels == 0 {
                    return Err(Error::MalformedWav("zero channels".into()));
                }
                let bytes_per_sample = match (tag, bits) {
                    (1, 16) => 2,
                    (3, 32) => 4,
                    _ => {
                        return Err(Error::UnsupportedWav(format!(
                            "format tag {tag} with {bits} bits per sample"
                        )))
                    }
                };
                let mut body = vec![0u8; size];
                read_exact_or(&mut r, &mut body, "data chunk")?;
                let frame_bytes = bytes_per_sample * channels as usize;
                let frames = body.len() / frame_bytes;
                let mut samples = Vec::with_capacity(frames);
                for f in 0..frames {
                    let off = f * frame_bytes; // first channel
                    let v = match bytes_per_sample {
                        2 => i16::from_le_bytes([body[off], body[off + 1]]) as f64 / 32768.0,
                        _ => f32::from_le_bytes([
                            body[off],
                            body[off + 1],
                            body[off + 2],
                            body[off + 3],
                        ]) as f64,
                    };
                    samples.push(v);
                }
                return SampledSignal::new(samples, rate as f64);
            }
            _ => {
                // skip unknown chunk (sizes are padded to even)
                let mut skip = vec![0u8; size + (size & 1)];
                read_exact_or(&mut r, &mut skip, "chunk body")?;
            }
        }
    }
}

/// Write a mono RIFF/WAVE file in the requested encoding.
pub fn write_wav(signal: &SampledSignal, path: impl AsRef<Path>, format: WavFormat) -> Result<()> {
    let mut w = BufWriter::new(File::create(path.as_ref())?);
    let n = signal.len();
    let (tag, bits): (u16, u16) = match format {
        WavFormat::Pcm16 => (1, 16),
        WavFormat::Float32 => (3, 32),
    };
    let bytes_per_sample = (bits / 8) as u32;
    let data_len = n as u32 * bytes_per_sample;
    let rate = signal.sample_rate().round() as u32;

    w.write_all(b"RIFF")?;
    w.write_all(&(36 + data_len).to_le_bytes())?;
    w.write_all(b"WAVE")?;
    w.write_all(b"fmt ")?;
    w.write_all(&16u32.to_le_bytes())?;
    w.write_all(&tag.to_le_bytes())?;
    w.write_all(&1u16.to_le_bytes())?; // mono
    w.write_all(&rate.to_le_bytes())?;
    w.write_all(&(rate * bytes_per_sample).to_le_bytes())?;
    w.write_all(&(bytes_per_sample as u16).to_le_bytes())?;
    w.write_all(&bits.to_le_bytes())?;
    w.write_all(b"data")?;
    w.write_all(&data_len.to_le_bytes())?;
    match format {
        WavFormat::Pcm16 => {
            for &s in signal.samples() {
                let v = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
                w.write_all(&v.to_le_bytes())?;
            }
        }
        WavFormat::Float32 => {
            for &s in signal.samples() {
                w.write_all(&(s as f32).to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
