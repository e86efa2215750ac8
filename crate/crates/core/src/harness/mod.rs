//! Drives the simulation from a [`RunManifest`] and emits result tables.

pub mod manifest;
pub mod table;
pub mod verify;

use std::path::PathBuf;

use num_complex::Complex64;

use crate::channels::{apply_channel, sweep_amplitude, sweep_coupling, ChannelKind, SweepRow};
use crate::error::Result;
use crate::evolution::InteractionConfig;
use crate::fock::{pure_density, FieldState, TRUNCATION_WARN};
use crate::phase_space::{default_grid, q_function, q_peak, GridSpec};

pub use manifest::{Command, RunManifest, SweepRange};
pub use table::{Format, Table, Value};

pub const TOOL_NAME: &str = "jcsim";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Result of [`run`]: the table, its encoded bytes and anything worth
/// telling the user.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub table: Table,
    pub bytes: Vec<u8>,
    pub output_path: Option<PathBuf>,
    pub warnings: Vec<String>,
    /// Filled by `verify` only.
    pub criteria: Vec<verify::CriterionResult>,
    /// Set by `verify` when any criterion misses.
    pub failed: bool,
}

/// Validates the manifest, runs the command and writes the output file when
/// a path is given.
pub fn run(manifest: &RunManifest) -> Result<RunReport> {
    manifest.validate()?;
    let mut warnings = Vec::new();
    let mut criteria = Vec::new();
    let mut table = match manifest.command {
        Command::SweepR => sweep_r(manifest, &mut warnings)?,
        Command::SweepAlpha => sweep_alpha(manifest, &mut warnings)?,
        Command::Point => point(manifest, &mut warnings)?,
        Command::QFunc => qfunc(manifest, &mut warnings)?,
        Command::Verify => {
            criteria = verify::run_suite();
            verify::suite_table(&criteria)?
        }
    };
    prepend_meta(&mut table, manifest_meta(manifest));
    let bytes = table.render(manifest.format)?;
    if let Some(path) = &manifest.output_path {
        std::fs::write(path, &bytes)?;
    }
    let failed = criteria.iter().any(|c| !c.passed);
    Ok(RunReport { table, bytes, output_path: manifest.output_path.clone(), warnings, criteria, failed })
}

fn prepend_meta(table: &mut Table, mut head: Vec<(String, String)>) {
    head.append(&mut table.meta);
    table.meta = head;
}

fn channel_list(channels: &[ChannelKind]) -> String {
    channels.iter().map(|c| c.name()).collect::<Vec<_>>().join(",")
}

fn manifest_meta(m: &RunManifest) -> Vec<(String, String)> {
    let opt = |v: Option<String>| v.unwrap_or_else(|| "-".into());
    let mut meta = vec![
        ("tool".into(), TOOL_NAME.into()),
        ("version".into(), TOOL_VERSION.into()),
        ("command".into(), m.command.to_string()),
        ("format".into(), m.format.to_string()),
    ];
    if m.command == Command::Verify {
        return meta;
    }
    meta.extend([
        ("alpha".into(), m.input.alpha.to_string()),
        ("squeeze_s".into(), m.input.squeezing_s.to_string()),
        ("squeeze_theta".into(), m.input.squeezing_theta.to_string()),
        ("r".into(), opt(m.r.map(|r| r.to_string()))),
        ("r_range".into(), opt(m.r_range.map(|r| r.to_string()))),
        ("alpha_range".into(), opt(m.alpha_range.map(|r| r.to_string()))),
        ("atoms".into(), m.n_atoms.to_string()),
        ("channels".into(), channel_list(&m.channels)),
        ("dim_override".into(), opt(m.dim.map(|d| d.to_string()))),
        ("grid_points".into(), opt(m.grid_points.map(|d| d.to_string()))),
    ]);
    meta
}

/// The manifest's input state, its truncation and the truncation tail mass.
fn prepare_input(m: &RunManifest) -> Result<(FieldState, usize, f64)> {
    let amplifying = m.channels.iter().any(|c| c.can_amplify());
    let dim = match m.dim {
        Some(d) => d,
        None => m.input.auto_dimension(amplifying)?,
    };
    let amps = m.input.amplitudes(dim)?;
    let tail = amps.tail_mass();
    Ok((pure_density(&amps).normalized()?, dim, tail))
}

fn input_meta(table: &mut Table, rho: &FieldState, dim: usize, tail: f64, m: &RunManifest) -> Result<()> {
    table.push_meta("dim", dim);
    table.push_meta("dim_source", if m.dim.is_some() { "override" } else { "auto" });
    table.push_meta("input_tail_mass", table::format_float(tail));
    table.push_meta("input_mean", table::format_float(rho.mean_photon_number()?));
    table.push_meta("input_top_population", table::format_float(rho.top_population()));
    Ok(())
}

const SWEEP_COLUMNS: [&str; 10] =
    ["channel", "atoms", "dim", "mean_in", "mean_out", "fraction", "success_probability", "top_population", "status", "message"];

fn sweep_cells(row: &SweepRow) -> Vec<Value> {
    vec![
        row.kind.name().into(),
        row.n_atoms.into(),
        row.dim.into(),
        row.mean_in.into(),
        row.mean_out.into(),
        row.fraction.into(),
        row.success_probability.into(),
        row.top_population.into(),
        row.status.label().into(),
        row.status.message().into(),
    ]
}

fn note_truncated_rows(rows: &[SweepRow], warnings: &mut Vec<String>) {
    let truncated = rows.iter().filter(|r| r.top_population.is_some_and(|p| p > TRUNCATION_WARN)).count();
    if truncated > 0 {
        warnings.push(format!(
            "{truncated} row(s) have top Fock population above {TRUNCATION_WARN:e}; increase --dim"
        ));
    }
}

fn sweep_r(m: &RunManifest, warnings: &mut Vec<String>) -> Result<Table> {
    let (rho, dim, tail) = prepare_input(m)?;
    let range = m.r_range.expect("validated");
    let rows = sweep_coupling(&rho, &range.points(), m.n_atoms, &m.channels)?;
    note_truncated_rows(&rows, warnings);
    let mut table = Table::new(std::iter::once("r").chain(SWEEP_COLUMNS));
    input_meta(&mut table, &rho, dim, tail, m)?;
    for row in &rows {
        let mut cells = vec![row.r.into()];
        cells.extend(sweep_cells(row));
        table.push_row(cells)?;
    }
    Ok(table)
}

fn sweep_alpha(m: &RunManifest, warnings: &mut Vec<String>) -> Result<Table> {
    let range = m.alpha_range.expect("validated");
    let rows = sweep_amplitude(&range.points(), m.r.expect("validated"), m.n_atoms, &m.channels, m.dim)?;
    note_truncated_rows(&rows, warnings);
    let mut table = Table::new(["alpha", "r"].into_iter().chain(SWEEP_COLUMNS));
    table.push_meta("dim", m.dim.map_or_else(|| "per-row".to_string(), |d| d.to_string()));
    table.push_meta("dim_source", if m.dim.is_some() { "override" } else { "auto" });
    for row in &rows {
        let mut cells = vec![row.alpha.into(), row.r.into()];
        cells.extend(sweep_cells(row));
        table.push_row(cells)?;
    }
    Ok(table)
}

fn point(m: &RunManifest, warnings: &mut Vec<String>) -> Result<Table> {
    let (rho, dim, tail) = prepare_input(m)?;
    let config = InteractionConfig::new(m.r.expect("validated"), m.n_atoms, dim)?;
    let mut table = Table::new([
        "channel",
        "r",
        "atoms",
        "dim",
        "mean_in",
        "mean_out",
        "fraction",
        "success_probability",
        "top_population",
        "truncation_warning",
    ]);
    input_meta(&mut table, &rho, dim, tail, m)?;
    let mut channels = m.channels.clone();
    channels.sort();
    for kind in channels {
        let out = apply_channel(&rho, &config, kind)?;
        let warning = out.truncation_warning.map(|w| w.to_string()).unwrap_or_default();
        if !warning.is_empty() {
            warnings.push(format!("{kind}: {warning}"));
        }
        table.push_row(vec![
            kind.name().into(),
            config.r.into(),
            config.n_atoms.into(),
            dim.into(),
            out.mean_in().into(),
            out.mean_out().into(),
            out.fraction().into(),
            out.success_probability.into(),
            out.max_top_population.into(),
            warning.into(),
        ])?;
    }
    Ok(table)
}

fn qfunc(m: &RunManifest, warnings: &mut Vec<String>) -> Result<Table> {
    let (rho, dim, tail) = prepare_input(m)?;
    let mut table = Table::new(["re", "im", "q"]);
    input_meta(&mut table, &rho, dim, tail, m)?;
    let state = match m.channels.first() {
        None => {
            table.push_meta("state", "input");
            rho
        }
        Some(&kind) => {
            let config = InteractionConfig::new(m.r.expect("validated"), m.n_atoms, dim)?;
            let out = apply_channel(&rho, &config, kind)?;
            if let Some(w) = out.truncation_warning {
                warnings.push(format!("{kind}: {w}"));
            }
            table.push_meta("state", kind.name());
            table.push_meta("success_probability", table::format_float(out.success_probability));
            out.final_state
        }
    };
    let mut grid = default_grid(&state)?;
    if let Some(n) = m.grid_points {
        grid = GridSpec::new(grid.re_min, grid.re_max, grid.im_min, grid.im_max, n, n)?;
    }
    let q = q_function(&state, &grid)?;
    let (peak, q_max) = q_peak(&q)?;
    table.push_meta("output_mean", table::format_float(state.mean_photon_number()?));
    for (k, v) in [("re_min", grid.re_min), ("re_max", grid.re_max), ("im_min", grid.im_min), ("im_max", grid.im_max)] {
        table.push_meta(k, table::format_float(v));
    }
    table.push_meta("n_re", grid.n_re);
    table.push_meta("n_im", grid.n_im);
    table.push_meta("integral", table::format_float(q.integral()));
    table.push_meta("peak_re", table::format_float(peak.re));
    table.push_meta("peak_im", table::format_float(peak.im));
    table.push_meta("q_max", table::format_float(q_max));
    for ((row, col), v) in q.values.indexed_iter() {
        let at: Complex64 = grid.point(row, col);
        table.push_row(vec![at.re.into(), at.im.into(), (*v).into()])?;
    }
    Ok(table)
}
