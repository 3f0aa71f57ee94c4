//! `respec`: reassigned spectrogram analysis from the command line.
//!
//! Subcommands: `synth` (generate test signals), `windows` (dump a window
//! set), `analyze` (reassigned point cloud to CSV), `prune` (filter a CSV
//! by component class), `render` (rasterize points to a PGM image).
//!
//! Exit codes: 0 success, 1 usage error, 2 I/O error, 3 numeric/validation
//! error.

mod csvio;
mod raster;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use respec::phasecorrect::correct_spectrogram_phases;
use respec::phasederiv::{attach_mixed_partial, mixed_partial, phase_partials_fd};
use respec::prune::classify_cell;
use respec::reassign::{reassign_finite_difference, reassign_transform, ReassignConfig};
use respec::signal_io::{generate, read_wav, write_wav, WavFormat};
use respec::spectral::{stft_set, AuxTransforms};
use respec::windows::{build_window_set, edge_taper_ok, WindowKind, WindowSpec};
use respec::{CellClass, Error, SampledSignal, SignalKind, SignalSpec, StftGrid};

use csvio::{fmt_sig, CsvPoint};

#[derive(Parser)]
#[command(name = "respec", version, about = "Reassigned spectrogram analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic test signal and write it as WAV.
    Synth(SynthArgs),
    /// Dump the analysis window and its five auxiliary windows as CSV.
    Windows(WindowsArgs),
    /// Compute a reassigned spectrogram and write the point cloud as CSV.
    Analyze(AnalyzeArgs),
    /// Filter an analysis CSV by component class.
    Prune(PruneArgs),
    /// Rasterize reassigned points into a PGM image.
    Render(RenderArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Sine,
    Chirp,
    Impulse,
    Pluck,
    Noise,
    Mixture,
}

#[derive(Clone, Copy, ValueEnum)]
enum WindowArg {
    Kaiser,
    Hann,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Transform,
    Fd,
}

#[derive(Args, Clone)]
struct SynthOpts {
    /// Signal family.
    #[arg(long = "kind", value_enum)]
    kind: KindArg,
    /// Sinusoid (or mixture sinusoid) frequency, Hz.
    #[arg(long, default_value_t = 1000.0)]
    freq: f64,
    /// Chirp start frequency, Hz.
    #[arg(long, default_value_t = 500.0)]
    start_hz: f64,
    /// Chirp end frequency, Hz.
    #[arg(long, default_value_t = 1500.0)]
    end_hz: f64,
    /// Impulse (or mixture impulse) sample index.
    #[arg(long, default_value_t = 5000)]
    impulse_at: usize,
    /// Mixture impulse gain relative to the sinusoid amplitude.
    #[arg(long, default_value_t = 60.0)]
    impulse_gain: f64,
    /// Pluck fundamental, Hz.
    #[arg(long, default_value_t = 73.4)]
    f0: f64,
    /// Pluck partial count.
    #[arg(long, default_value_t = 10)]
    partials: usize,
    /// Pluck first-partial decay constant, seconds.
    #[arg(long, default_value_t = 0.5)]
    decay: f64,
    /// Pluck onset time, seconds.
    #[arg(long, default_value_t = 0.0)]
    onset: f64,
    /// Noise seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Duration, seconds.
    #[arg(long, default_value_t = 1.0)]
    dur: f64,
    /// Sample rate, Hz.
    #[arg(long, default_value_t = 44100.0)]
    rate: f64,
    /// Linear amplitude.
    #[arg(long, default_value_t = 1.0)]
    amp: f64,
}

impl SynthOpts {
    fn spec(&self) -> SignalSpec {
        let kind = match self.kind {
            KindArg::Sine => SignalKind::Sinusoid { freq_hz: self.freq, phase: 0.0 },
            KindArg::Chirp => SignalKind::LinearChirp {
                start_hz: self.start_hz,
                end_hz: self.end_hz,
            },
            KindArg::Impulse => SignalKind::Impulse { sample_index: self.impulse_at },
            KindArg::Pluck => SignalKind::HarmonicPluck {
                f0_hz: self.f0,
                partials: self.partials,
                decay_s: self.decay,
                onset_s: self.onset,
            },
            KindArg::Noise => SignalKind::WhiteNoise { seed: self.seed },
            KindArg::Mixture => SignalKind::Mixture {
                sine_hz: self.freq,
                impulse_index: self.impulse_at,
                impulse_gain: self.impulse_gain,
            },
        };
        SignalSpec {
            kind,
            duration_s: self.dur,
            sample_rate: self.rate,
            amplitude: self.amp,
        }
    }
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    synth: SynthOpts,
    /// Output WAV path.
    #[arg(long)]
    out: PathBuf,
    /// Store 16-bit PCM instead of 32-bit float.
    #[arg(long)]
    pcm16: bool,
}

#[derive(Args, Clone)]
struct WindowOpts {
    /// Window family.
    #[arg(long = "window", value_enum, default_value = "kaiser")]
    window: WindowArg,
    /// Window length in milliseconds (rounded to the nearest odd sample
    /// count).
    #[arg(long, default_value_t = 65.7)]
    length_ms: f64,
    /// Kaiser shaping parameter.
    #[arg(long, default_value_t = 12.0)]
    beta: f64,
}

impl WindowOpts {
    fn spec(&self, rate: f64) -> Result<WindowSpec, Error> {
        if self.length_ms <= 0.0 || !self.length_ms.is_finite() {
            return Err(Error::InvalidParam(format!(
                "window length must be positive, got {} ms",
                self.length_ms
            )));
        }
        let raw = self.length_ms * 1e-3 * rate;
        // round up to an odd sample count (65.7 ms at 44.1 kHz -> 2899)
        let mut n = raw.ceil() as i64;
        if n % 2 == 0 {
            n += 1;
        }
        let n = n.max(3) as usize;
        let kind = match self.window {
            WindowArg::Kaiser => WindowKind::Kaiser,
            WindowArg::Hann => WindowKind::Hann,
        };
        Ok(WindowSpec {
            kind,
            length: n,
            kaiser_beta: self.beta,
            sample_period: 1.0 / rate,
        })
    }
}

#[derive(Args)]
struct WindowsArgs {
    /// Window family.
    #[arg(long = "kind", value_enum, default_value = "kaiser")]
    kind: WindowArg,
    #[arg(long, default_value_t = 65.7)]
    length_ms: f64,
    #[arg(long, default_value_t = 12.0)]
    beta: f64,
    /// Sample rate, Hz.
    #[arg(long, default_value_t = 44100.0)]
    rate: f64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Input WAV file (alternative to --synth).
    #[arg(long = "in", value_name = "WAV")]
    input: Option<PathBuf>,
    /// Generate the input instead of reading a file.
    #[arg(long = "synth", value_enum, value_name = "KIND")]
    synth: Option<KindArg>,
    #[command(flatten)]
    synth_opts: SynthOptsNoKind,
    #[command(flatten)]
    window: WindowOpts,
    /// FFT size (default: next power of two at or above twice the window).
    #[arg(long)]
    fft_size: Option<usize>,
    /// Hop in samples (default: window length / 8).
    #[arg(long)]
    hop: Option<usize>,
    /// Power gate in dB relative to each frame's maximum.
    #[arg(long, default_value_t = -70.0, allow_negative_numbers = true)]
    threshold_db: f64,
    /// Reassignment backend.
    #[arg(long, value_enum, default_value = "transform")]
    backend: BackendArg,
    /// Sinusoid-class tolerance on |1 + mixed|.
    #[arg(long, default_value_t = 0.2)]
    tol_sin: f64,
    /// Impulse-class tolerance on |mixed|.
    #[arg(long, default_value_t = 0.2)]
    tol_imp: f64,
    /// Skip the phase-correction pass (keep raw STFT phases).
    #[arg(long)]
    no_phase_correct: bool,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

/// Synth flags reused by `analyze --synth` (kind comes from --synth).
#[derive(Args, Clone)]
struct SynthOptsNoKind {
    #[arg(long, default_value_t = 1000.0, hide_short_help = true)]
    freq: f64,
    #[arg(long, default_value_t = 500.0, hide_short_help = true)]
    start_hz: f64,
    #[arg(long, default_value_t = 1500.0, hide_short_help = true)]
    end_hz: f64,
    #[arg(long, default_value_t = 5000, hide_short_help = true)]
    impulse_at: usize,
    #[arg(long, default_value_t = 60.0, hide_short_help = true)]
    impulse_gain: f64,
    #[arg(long, default_value_t = 73.4, hide_short_help = true)]
    f0: f64,
    #[arg(long, default_value_t = 10, hide_short_help = true)]
    partials: usize,
    #[arg(long, default_value_t = 0.5, hide_short_help = true)]
    decay: f64,
    #[arg(long, default_value_t = 0.0, hide_short_help = true)]
    onset: f64,
    #[arg(long, default_value_t = 1, hide_short_help = true)]
    seed: u64,
    #[arg(long, default_value_t = 1.0, hide_short_help = true)]
    dur: f64,
    /// Sample rate for synthetic input, Hz.
    #[arg(long, default_value_t = 44100.0)]
    rate: f64,
    #[arg(long, default_value_t = 1.0, hide_short_help = true)]
    amp: f64,
}

#[derive(Args)]
struct PruneArgs {
    /// Input analysis CSV.
    #[arg(long = "in")]
    input: PathBuf,
    /// Classes to keep, comma separated (sinusoid, impulse, neither).
    #[arg(long, value_delimiter = ',')]
    keep: Vec<String>,
    /// Reclassify from the mixed_partial column with this sinusoid
    /// tolerance (default: keep the stored class).
    #[arg(long)]
    tol_sin: Option<f64>,
    /// Reclassify from the mixed_partial column with this impulse
    /// tolerance (default: keep the stored class).
    #[arg(long)]
    tol_imp: Option<f64>,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RenderArgs {
    /// Input: analysis CSV or WAV (WAV is analyzed with default settings).
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 800)]
    width: usize,
    #[arg(long, default_value_t = 600)]
    height: usize,
    /// Time range start, seconds (default: data minimum).
    #[arg(long, allow_negative_numbers = true)]
    t_min: Option<f64>,
    /// Time range end, seconds (default: data maximum).
    #[arg(long, allow_negative_numbers = true)]
    t_max: Option<f64>,
    /// Frequency range start, Hz (default: 0).
    #[arg(long, allow_negative_numbers = true)]
    f_min: Option<f64>,
    /// Frequency range end, Hz (default: data maximum).
    #[arg(long, allow_negative_numbers = true)]
    f_max: Option<f64>,
    /// Grayscale floor in dB below the image maximum.
    #[arg(long, default_value_t = -80.0, allow_negative_numbers = true)]
    floor_db: f64,
    #[command(flatten)]
    window: WindowOpts,
    /// Output PGM path.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    let result = match cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Windows(args) => cmd_windows(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Prune(args) => cmd_prune(args),
        Command::Render(args) => cmd_render(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) | Error::MalformedWav(_) | Error::UnsupportedWav(_) | Error::TruncatedWav(_) => 2,
        _ => 3,
    }
}

fn cmd_synth(args: SynthArgs) -> Result<(), Error> {
    let signal = generate(&args.synth.spec())?;
    let format = if args.pcm16 { WavFormat::Pcm16 } else { WavFormat::Float32 };
    write_wav(&signal, &args.out, format)
}

fn cmd_windows(args: WindowsArgs) -> Result<(), Error> {
    if args.rate <= 0.0 || !args.rate.is_finite() {
        return Err(Error::InvalidParam(format!("sample rate must be positive, got {}", args.rate)));
    }
    let opts = WindowOpts {
        window: args.kind,
        length_ms: args.length_ms,
        beta: args.beta,
    };
    let spec = opts.spec(args.rate)?;
    let ws = build_window_set(&spec)?;
    let mut out = String::from("index,h,h_T,h_D,h_TD,h_T2,h_D2\n");
    for i in 0..ws.len() {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            i,
            fmt_sig(ws.h[i], 17),
            fmt_sig(ws.h_t[i], 17),
            fmt_sig(ws.h_d[i], 17),
            fmt_sig(ws.h_td[i], 17),
            fmt_sig(ws.h_t2[i], 17),
            fmt_sig(ws.h_d2[i], 17),
        ));
    }
    std::fs::write(&args.out, out)?;
    Ok(())
}

fn load_input(
    input: &Option<PathBuf>,
    synth: &Option<KindArg>,
    opts: &SynthOptsNoKind,
) -> Result<SampledSignal, Error> {
    match (input, synth) {
        (Some(path), None) => read_wav(path),
        (None, Some(kind)) => {
            let full = SynthOpts {
                kind: *kind,
                freq: opts.freq,
                start_hz: opts.start_hz,
                end_hz: opts.end_hz,
                impulse_at: opts.impulse_at,
                impulse_gain: opts.impulse_gain,
                f0: opts.f0,
                partials: opts.partials,
                decay: opts.decay,
                onset: opts.onset,
                seed: opts.seed,
                dur: opts.dur,
                rate: opts.rate,
                amp: opts.amp,
            };
            generate(&full.spec())
        }
        _ => Err(Error::InvalidParam(
            "exactly one of --in or --synth must be given".into(),
        )),
    }
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<(), Error> {
    let signal = load_input(&args.input, &args.synth, &args.synth_opts)?;
    let rate = signal.sample_rate();
    let wspec = args.window.spec(rate)?;
    let ws = build_window_set(&wspec)?;
    if !edge_taper_ok(&ws.h) {
        eprintln!("warning: window does not taper at its ends; derivative window may be inaccurate");
    }
    let hop = args.hop.unwrap_or((wspec.length / 8).max(1));
    let fft_size = args
        .fft_size
        .unwrap_or_else(|| (2 * wspec.length).next_power_of_two());
    let grid = StftGrid::new(signal.len(), wspec.length, hop, fft_size, rate)?;
    let cfg = ReassignConfig::with_threshold(args.threshold_db);

    let ra = match args.backend {
        BackendArg::Transform => {
            let aux = AuxTransforms { mixed: true, ..Default::default() };
            let set = stft_set(&signal, &ws, &grid, aux)?;
            let mut ra = reassign_transform(&set, &cfg)?;
            let field = mixed_partial(&set, args.threshold_db)?;
            attach_mixed_partial(&mut ra, &field.mixed)?;
            if !args.no_phase_correct {
                correct_spectrogram_phases(&mut ra, &set.x)?;
            }
            ra
        }
        BackendArg::Fd => {
            let mut ra = reassign_finite_difference(&signal, &ws.h, &grid, &cfg)?;
            let fd = phase_partials_fd(&signal, &ws.h, &grid, args.threshold_db)?;
            attach_mixed_partial(&mut ra, &fd.mixed)?;
            if !args.no_phase_correct {
                let set = stft_set(&signal, &ws, &grid, AuxTransforms::default())?;
                correct_spectrogram_phases(&mut ra, &set.x)?;
            }
            ra
        }
    };

    let mut out = String::from(csvio::HEADER);
    out.push('\n');
    for p in &ra.points {
        let class = if p.mixed_partial.is_finite() {
            classify_cell(p.mixed_partial, args.tol_sin, args.tol_imp)
        } else {
            CellClass::Neither
        };
        out.push_str(&csvio::format_row(p, class));
        out.push('\n');
    }
    std::fs::write(&args.out, out)?;
    Ok(())
}

fn cmd_prune(args: PruneArgs) -> Result<(), Error> {
    let reclassify = match (args.tol_sin, args.tol_imp) {
        (None, None) => None,
        (ts, ti) => {
            let ts = ts.unwrap_or(0.2);
            let ti = ti.unwrap_or(0.2);
            for (name, tol) in [("tol_sin", ts), ("tol_imp", ti)] {
                if !(tol > 0.0 && tol <= 0.5) {
                    return Err(Error::InvalidParam(format!(
                        "{name} must be in (0, 0.5], got {tol}"
                    )));
                }
            }
            Some((ts, ti))
        }
    };
    let keep: Vec<CellClass> = args
        .keep
        .iter()
        .map(|s| s.parse::<CellClass>().map_err(Error::InvalidParam))
        .collect::<Result<_, _>>()?;
    let text = std::fs::read_to_string(&args.input)?;
    let rows = csvio::parse(&text)?;
    let mut out = String::from(csvio::HEADER);
    out.push('\n');
    for row in &rows {
        let class = match reclassify {
            Some((ts, ti)) if row.mixed_partial.is_finite() => {
                classify_cell(row.mixed_partial, ts, ti)
            }
            Some(_) => CellClass::Neither,
            None => row.class,
        };
        if keep.contains(&class) {
            out.push_str(&csvio::format_parsed_row(row, class));
            out.push('\n');
        }
    }
    std::fs::write(&args.out, out)?;
    Ok(())
}

fn cmd_render(args: RenderArgs) -> Result<(), Error> {
    let is_wav = args
        .input
        .extension()
        .map(|e| e.eq_ignore_ascii_case("wav"))
        .unwrap_or(false);
    let rows: Vec<CsvPoint> = if is_wav {
        let signal = read_wav(&args.input)?;
        let rate = signal.sample_rate();
        let wspec = args.window.spec(rate)?;
        let ws = build_window_set(&wspec)?;
        let grid = StftGrid::default_for(signal.len(), wspec.length, rate)?;
        let set = stft_set(&signal, &ws, &grid, AuxTransforms::default())?;
        let ra = reassign_transform(&set, &ReassignConfig::default())?;
        ra.points
            .iter()
            .map(|p| CsvPoint {
                nominal_time_s: p.nominal_time,
                nominal_freq_hz: p.nominal_freq / std::f64::consts::TAU,
                t_hat_s: p.t_hat,
                f_hat_hz: p.omega_hat / std::f64::consts::TAU,
                mag: p.magnitude,
                power_db: p.power_db,
                phase_rad: p.phase,
                mixed_partial: p.mixed_partial,
                class: CellClass::Neither,
            })
            .collect()
    } else {
        csvio::parse(&std::fs::read_to_string(&args.input)?)?
    };

    let image = raster::render(&rows, &raster::RenderParams {
        width: args.width,
        height: args.height,
        t_min: args.t_min,
        t_max: args.t_max,
        f_min: args.f_min,
        f_max: args.f_max,
        floor_db: args.floor_db,
    })?;
    if image.dropped > 0 {
        eprintln!("{} points outside the rendered range were dropped", image.dropped);
    }
    if image.empty {
        eprintln!("warning: no points to render; image is a uniform floor");
    }
    std::fs::write(&args.out, image.pgm_bytes())?;
    Ok(())
}
