//! Run configuration: built-in defaults (the worked example), then an
//! optional JSON file, then command-line flags.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::Deserialize;

use qobserver_core::example;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Design,
    Simulate,
    Verify,
    ReproduceExample,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Design => "design",
            Command::Simulate => "simulate",
            Command::Verify => "verify",
            Command::ReproduceExample => "reproduce-example",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    /// Frequencies in rad/s, times in seconds.
    Si,
    /// Frequencies and times already scaled by a reference frequency.
    Nondimensional,
}

impl Units {
    pub fn name(self) -> &'static str {
        match self {
            Units::Si => "si",
            Units::Nondimensional => "nondimensional",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Design and verification of direct-coupled coherent quantum observers.
#[derive(Debug, Parser)]
#[command(name = "qobserver", version, allow_negative_numbers = true)]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    /// JSON config file; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Plant output row `a,b` (z_p = a q_p + b p_p).
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub cp: Option<Vec<f64>>,
    #[arg(long)]
    pub omega_o: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub eps_ratio: Option<f64>,
    /// Phase-family offset in radians, in (0, pi). Defaults to pi/2.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Comma-separated averaging horizons, in the time unit of `--units`.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub horizons: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub units: Option<Units>,
    /// Reference frequency in rad/s used to scale time. Defaults to omega_o
    /// for SI input.
    #[arg(long)]
    pub reference_frequency: Option<f64>,
    /// Output directory. Without it the main JSON document goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',', num_args = 1)]
    pub format: Option<Vec<Format>>,
    /// Initial quadrature means `q_p,p_p,q_o,p_o` for `simulate`.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub x0: Option<Vec<f64>>,
    /// Final simulation time, in the time unit of `--units`.
    #[arg(long)]
    pub t_final: Option<f64>,
    /// Number of simulation samples including t = 0.
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    c_p: Option<Vec<f64>>,
    omega_o: Option<f64>,
    gamma: Option<f64>,
    eps_ratio: Option<f64>,
    delta: Option<f64>,
    horizons: Option<Vec<f64>>,
    units: Option<Units>,
    reference_frequency: Option<f64>,
    output_dir: Option<PathBuf>,
    formats: Option<Vec<Format>>,
    x0: Option<Vec<f64>>,
    t_final: Option<f64>,
    samples: Option<usize>,
}

/// Validated configuration. Frequencies and times are stored in the units
/// named by `units`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub c_p: [f64; 2],
    pub omega_o: f64,
    pub gamma: f64,
    pub eps_ratio: f64,
    pub delta: Option<f64>,
    pub horizons: Option<Vec<f64>>,
    pub units: Units,
    /// rad/s per nondimensional frequency unit; `None` for nondimensional
    /// input without a stated reference.
    pub reference_frequency: Option<f64>,
    pub output_dir: Option<PathBuf>,
    pub csv: bool,
    pub json: bool,
    pub x0: Option<[f64; 4]>,
    pub t_final: Option<f64>,
    pub samples: usize,
}

pub const DEFAULT_SAMPLES: usize = 2001;

impl RunConfig {
    /// The worked example in SI units.
    pub fn example(command: Command) -> Self {
        RunConfig {
            command,
            c_p: example::C_P,
            omega_o: example::OMEGA_O,
            gamma: example::GAMMA,
            eps_ratio: example::EPS_RATIO,
            delta: None,
            horizons: None,
            units: Units::Si,
            reference_frequency: Some(example::OMEGA_O),
            output_dir: None,
            csv: true,
            json: true,
            x0: None,
            t_final: None,
            samples: DEFAULT_SAMPLES,
        }
    }

    /// Factor taking a frequency in the configured units to nondimensional
    /// units.
    pub fn frequency_scale(&self) -> f64 {
        match self.units {
            Units::Si => 1.0 / self.reference_frequency.expect("si has a reference"),
            Units::Nondimensional => 1.0,
        }
    }

    pub fn from_args(args: Args) -> Result<Self, CliError> {
        let (file, source) = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::Config(format!("{}: cannot read config: {e}", path.display()))
                })?;
                let file: FileConfig = serde_json::from_str(&text).map_err(|e| {
                    CliError::Config(format!(
                        "{}:{}:{}: {}",
                        path.display(),
                        e.line(),
                        e.column(),
                        strip_position(&e.to_string())
                    ))
                })?;
                (file, Some((path.clone(), text)))
            }
            None => (FileConfig::default(), None),
        };
        let file_origin = |key: &str| match &source {
            Some((path, text)) => Origin::File {
                path: path.clone(),
                line: key_line(text, key),
                key: key.to_string(),
            },
            None => Origin::Default,
        };
        let pick =
            |flag: Option<f64>, file_v: Option<f64>, key: &str, flag_name: &'static str| match (
                flag, file_v,
            ) {
                (Some(v), _) => (Some(v), Origin::Flag(flag_name)),
                (None, Some(v)) => (Some(v), file_origin(key)),
                (None, None) => (None, Origin::Default),
            };

        if args.command == Command::ReproduceExample {
            let overrides = args.cp.is_some()
                || args.omega_o.is_some()
                || args.gamma.is_some()
                || args.eps_ratio.is_some()
                || args.delta.is_some()
                || args.units.is_some()
                || args.reference_frequency.is_some()
                || file.c_p.is_some()
                || file.omega_o.is_some()
                || file.gamma.is_some()
                || file.eps_ratio.is_some()
                || file.delta.is_some()
                || file.units.is_some()
                || file.reference_frequency.is_some();
            if overrides {
                return Err(CliError::Config(
                    "reproduce-example uses the built-in example; design parameters cannot be overridden".into(),
                ));
            }
        }

        let units = args.units.or(file.units).unwrap_or(Units::Si);
        let default_freq = match units {
            Units::Si => example::OMEGA_O,
            Units::Nondimensional => 1.0,
        };

        let (cp, cp_origin) = match (args.cp, file.c_p) {
            (Some(v), _) => (v, Origin::Flag("--cp")),
            (None, Some(v)) => (v, file_origin("c_p")),
            (None, None) => (example::C_P.to_vec(), Origin::Default),
        };
        let c_p: [f64; 2] = cp.as_slice().try_into().map_err(|_| {
            cp_origin.error(format!("expected 2 entries for c_p, got {}", cp.len()))
        })?;
        if c_p.iter().any(|x| !x.is_finite()) {
            return Err(cp_origin.error("c_p entries must be finite".into()));
        }
        if c_p == [0.0, 0.0] {
            return Err(cp_origin.error("plant output selector is zero".into()));
        }

        let (omega_o, o) = pick(args.omega_o, file.omega_o, "omega_o", "--omega-o");
        let omega_o = positive(omega_o.unwrap_or(default_freq), "omega_o", &o)?;
        let (gamma, o) = pick(args.gamma, file.gamma, "gamma", "--gamma");
        let gamma = positive(gamma.unwrap_or(default_freq), "gamma", &o)?;
        let (eps_ratio, o) = pick(args.eps_ratio, file.eps_ratio, "eps_ratio", "--eps-ratio");
        let eps_ratio = positive(eps_ratio.unwrap_or(example::EPS_RATIO), "eps_ratio", &o)?;

        let (delta, o) = pick(args.delta, file.delta, "delta", "--delta");
        if let Some(d) = delta {
            if !(d > 0.0 && d < PI) {
                return Err(o.error(format!("delta must lie in (0, pi), got {d}")));
            }
        }

        let (reference, o) = pick(
            args.reference_frequency,
            file.reference_frequency,
            "reference_frequency",
            "--reference-frequency",
        );
        let reference_frequency = match reference {
            Some(r) => Some(positive(r, "reference_frequency", &o)?),
            None => match units {
                Units::Si => Some(omega_o),
                Units::Nondimensional => None,
            },
        };

        let (horizons, o) = match (args.horizons, file.horizons) {
            (Some(v), _) => (Some(v), Origin::Flag("--horizons")),
            (None, Some(v)) => (Some(v), file_origin("horizons")),
            (None, None) => (None, Origin::Default),
        };
        if let Some(h) = &horizons {
            if h.is_empty() || h.iter().any(|t| *t <= 0.0 || !t.is_finite()) {
                return Err(o.error("horizons must be positive and finite".into()));
            }
            if h.windows(2).any(|w| w[1] <= w[0]) {
                return Err(o.error("horizons must be strictly increasing".into()));
            }
        }

        let (formats, o) = match (args.format, file.formats) {
            (Some(v), _) => (v, Origin::Flag("--format")),
            (None, Some(v)) => (v, file_origin("formats")),
            (None, None) => (vec![Format::Csv, Format::Json], Origin::Default),
        };
        if formats.is_empty() {
            return Err(o.error("at least one output format is required".into()));
        }

        let (x0, o) = match (args.x0, file.x0) {
            (Some(v), _) => (Some(v), Origin::Flag("--x0")),
            (None, Some(v)) => (Some(v), file_origin("x0")),
            (None, None) => (None, Origin::Default),
        };
        let x0 = match x0 {
            Some(v) => {
                let arr: [f64; 4] = v
                    .as_slice()
                    .try_into()
                    .map_err(|_| o.error(format!("expected 4 entries for x0, got {}", v.len())))?;
                if arr.iter().any(|x| !x.is_finite()) {
                    return Err(o.error("x0 entries must be finite".into()));
                }
                Some(arr)
            }
            None => None,
        };

        let (t_final, o) = pick(args.t_final, file.t_final, "t_final", "--t-final");
        let t_final = match t_final {
            Some(t) => Some(positive(t, "t_final", &o)?),
            None => None,
        };
        let (samples, o) = match (args.samples, file.samples) {
            (Some(v), _) => (v, Origin::Flag("--samples")),
            (None, Some(v)) => (v, file_origin("samples")),
            (None, None) => (DEFAULT_SAMPLES, Origin::Default),
        };
        if samples < 2 {
            return Err(o.error(format!("samples must be at least 2, got {samples}")));
        }

        Ok(RunConfig {
            command: args.command,
            c_p,
            omega_o,
            gamma,
            eps_ratio,
            delta,
            horizons,
            units,
            reference_frequency,
            output_dir: args.out.or(file.output_dir),
            csv: formats.contains(&Format::Csv),
            json: formats.contains(&Format::Json),
            x0,
            t_final,
            samples,
        })
    }
}

/// Where a configuration value came from, for error messages.
#[derive(Debug, Clone)]
enum Origin {
    Default,
    Flag(&'static str),
    File {
        path: PathBuf,
        line: Option<usize>,
        key: String,
    },
}

impl Origin {
    fn error(&self, msg: String) -> CliError {
        CliError::Config(match self {
            Origin::Default => format!("default configuration: {msg}"),
            Origin::Flag(flag) => format!("{flag}: {msg}"),
            Origin::File {
                path,
                line: Some(line),
                key,
            } => {
                format!("{}:{line}: {key}: {msg}", display(path))
            }
            Origin::File {
                path,
                line: None,
                key,
            } => format!("{}: {key}: {msg}", display(path)),
        })
    }
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

fn positive(v: f64, name: &str, origin: &Origin) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(origin.error(format!("{name} must be positive and finite, got {v}")))
    }
}

/// 1-based line of the first `"key":` in `text`.
fn key_line(text: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"");
    let mut from = 0;
    while let Some(pos) = text[from..].find(&needle) {
        let at = from + pos;
        let rest = text[at + needle.len()..].trim_start();
        if rest.starts_with(':') {
            return Some(text[..at].matches('\n').count() + 1);
        }
        from = at + needle.len();
    }
    None
}

/// serde_json appends " at line L column C"; the position is printed up
/// front instead.
fn strip_position(msg: &str) -> &str {
    match msg.rfind(" at line ") {
        Some(i) => &msg[..i],
        None => msg,
    }
}
