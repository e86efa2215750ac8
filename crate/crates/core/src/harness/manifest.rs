use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::channels::ChannelKind;
use crate::error::{Error, Result};
use crate::fock::InputSpec;

use super::table::Format;

const MAX_GRID_POINTS: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    SweepR,
    SweepAlpha,
    QFunc,
    Point,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SweepR => "sweep-r",
            Command::SweepAlpha => "sweep-alpha",
            Command::QFunc => "qfunc",
            Command::Point => "point",
            Command::Verify => "verify",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sweep-r" => Ok(Command::SweepR),
            "sweep-alpha" => Ok(Command::SweepAlpha),
            "qfunc" => Ok(Command::QFunc),
            "point" => Ok(Command::Point),
            "verify" => Ok(Command::Verify),
            other => Err(Error::InvalidInput(format!("unknown command '{other}'"))),
        }
    }
}

/// Inclusive `(min, max, step)` grid. The step need not divide the span; the
/// final point is clamped to `max`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRange {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl SweepRange {
    pub fn new(min: f64, max: f64, step: f64) -> Self {
        SweepRange { min, max, step }
    }

    fn problems(&self, label: &str) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.min.is_finite() && self.max.is_finite() && self.step.is_finite()) {
            out.push(format!("{label} range must be finite"));
            return out;
        }
        if self.min < 0.0 {
            out.push(format!("{label}-min must be >= 0, got {}", self.min));
        }
        if self.max < self.min {
            out.push(format!("{label}-max ({}) must be >= {label}-min ({})", self.max, self.min));
        }
        if !(self.step > 0.0) {
            out.push(format!("{label}-step must be > 0, got {}", self.step));
        } else if (self.max - self.min) / self.step > MAX_GRID_POINTS as f64 {
            out.push(format!("{label} range has more than {MAX_GRID_POINTS} points"));
        }
        out
    }

    pub fn points(&self) -> Vec<f64> {
        let span = self.max - self.min;
        // absorb rounding so 0..3 step 0.01 yields 301 points
        let steps = (span / self.step + 1e-9).floor() as usize;
        let mut pts: Vec<f64> = (0..=steps).map(|k| self.min + k as f64 * self.step).collect();
        let last = pts[steps];
        if (self.max - last).abs() <= 1e-9 * self.step {
            pts[steps] = self.max;
        } else if last < self.max {
            pts.push(self.max);
        }
        pts
    }
}

impl fmt::Display for SweepRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.min, self.max, self.step)
    }
}

/// Everything needed to reproduce one CLI run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunManifest {
    pub command: Command,
    pub input: InputSpec,
    /// Fixed coupling for `point`, `qfunc` and `sweep-alpha`.
    pub r: Option<f64>,
    pub r_range: Option<SweepRange>,
    pub alpha_range: Option<SweepRange>,
    pub n_atoms: usize,
    /// Truncation override; auto-selected when `None`.
    pub dim: Option<usize>,
    pub channels: Vec<ChannelKind>,
    /// Samples per axis for `qfunc`.
    pub grid_points: Option<usize>,
    pub output_path: Option<PathBuf>,
    pub format: Format,
}

impl RunManifest {
    pub fn new(command: Command) -> Self {
        RunManifest {
            command,
            input: InputSpec::coherent(num_complex::Complex64::new(0.0, 0.0)),
            r: None,
            r_range: None,
            alpha_range: None,
            n_atoms: 1,
            dim: None,
            channels: Vec::new(),
            grid_points: None,
            output_path: None,
            format: Format::Csv,
        }
    }

    /// Checks every field and reports all problems at once.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if let Err(e) = self.input.validate() {
            problems.push(e.to_string());
        }
        if self.n_atoms == 0 {
            problems.push("atoms must be >= 1".into());
        }
        if let Some(d) = self.dim {
            if d < 2 {
                problems.push(format!("dim must be >= 2, got {d}"));
            }
        }
        if let Some(r) = self.r {
            if !r.is_finite() || r < 0.0 {
                problems.push(format!("r must be finite and >= 0, got {r}"));
            }
        }
        let mut unique = self.channels.clone();
        unique.sort();
        unique.dedup();
        if unique.len() != self.channels.len() {
            problems.push("channels must not repeat".into());
        }

        match self.command {
            Command::SweepR => {
                match &self.r_range {
                    Some(range) => problems.extend(range.problems("r")),
                    None => problems.push("sweep-r needs --r-min, --r-max and --r-step".into()),
                }
                if self.channels.is_empty() {
                    problems.push("sweep-r needs at least one channel".into());
                }
            }
            Command::SweepAlpha => {
                match &self.alpha_range {
                    Some(range) => problems.extend(range.problems("alpha")),
                    None => problems.push("sweep-alpha needs --alpha-min, --alpha-max and --alpha-step".into()),
                }
                if self.r.is_none() {
                    problems.push("sweep-alpha needs --r".into());
                }
                if self.input.is_squeezed() {
                    problems.push("sweep-alpha supports coherent inputs only".into());
                }
                if self.channels.is_empty() {
                    problems.push("sweep-alpha needs at least one channel".into());
                }
            }
            Command::Point => {
                if self.r.is_none() {
                    problems.push("point needs --r".into());
                }
                if self.channels.is_empty() {
                    problems.push("point needs at least one channel".into());
                }
            }
            Command::QFunc => {
                if self.channels.len() > 1 {
                    problems.push("qfunc takes at most one channel".into());
                }
                if !self.channels.is_empty() && self.r.is_none() {
                    problems.push("qfunc with a channel needs --r".into());
                }
                if let Some(n) = self.grid_points {
                    if !(2..=4001).contains(&n) {
                        problems.push(format!("grid points must be in 2..=4001, got {n}"));
                    }
                }
            }
            Command::Verify => {}
        }

        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidManifest(problems))
        }
    }
}
