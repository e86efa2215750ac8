//! Sequential interaction with `N` ground-state atoms, each followed by one
//! of three terminal operations on the atom: trace it out, or keep only the
//! runs where it is found in its ground or excited state.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evolution::{block_operators, InteractionConfig};
use crate::fock::{auto_dimension, coherent_amplitudes, pure_density, FieldState, MIN_TRACE, TRUNCATION_WARN};
use num_complex::Complex64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ChannelKind {
    /// Partial trace over each atom: `ρ ← ρ₁₁ + ρ₂₂`.
    Absorption,
    /// Keep runs where every atom stays in its ground state: `ρ ← ρ₂₂/Tr ρ₂₂`.
    PostselectGround,
    /// Keep runs where every atom ends excited: `ρ ← ρ₁₁/Tr ρ₁₁`.
    PostselectExcited,
}

impl ChannelKind {
    pub const ALL: [ChannelKind; 3] = [ChannelKind::Absorption, ChannelKind::PostselectGround, ChannelKind::PostselectExcited];

    pub fn name(self) -> &'static str {
        match self {
            ChannelKind::Absorption => "absorption",
            ChannelKind::PostselectGround => "ground",
            ChannelKind::PostselectExcited => "excited",
        }
    }

    pub fn is_postselected(self) -> bool {
        !matches!(self, ChannelKind::Absorption)
    }

    /// Whether the output mean can exceed the input mean, which decides the
    /// truncation headroom.
    pub fn can_amplify(self) -> bool {
        self.is_postselected()
    }
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ChannelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "absorption" | "abs" => Ok(ChannelKind::Absorption),
            "ground" | "postselect-ground" => Ok(ChannelKind::PostselectGround),
            "excited" | "postselect-excited" => Ok(ChannelKind::PostselectExcited),
            other => Err(Error::InvalidInput(format!(
                "unknown channel '{other}' (expected absorption, ground or excited)"
            ))),
        }
    }
}

/// The largest top-level Fock population seen along a run, when it exceeds
/// [`TRUNCATION_WARN`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncationWarning {
    pub top_population: f64,
    /// 0 is the input state, `k` the state after atom `k`.
    pub step: usize,
}

impl fmt::Display for TruncationWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "top Fock population {:e} after atom {} exceeds {:e}; increase the truncation dimension",
            self.top_population, self.step, TRUNCATION_WARN
        )
    }
}

#[derive(Clone, Debug)]
pub struct ChannelOutcome {
    pub kind: ChannelKind,
    pub final_state: FieldState,
    /// Product of the conditional traces; exactly 1 for absorption.
    pub success_probability: f64,
    /// Conditional trace of each atom for post-selected channels, the running
    /// trace after each atom for absorption.
    pub per_step_trace: Vec<f64>,
    /// Mean photon number of the input followed by the state after each atom.
    pub mean_n_trajectory: Vec<f64>,
    pub max_top_population: f64,
    pub truncation_warning: Option<TruncationWarning>,
}

impl ChannelOutcome {
    pub fn mean_in(&self) -> f64 {
        self.mean_n_trajectory[0]
    }

    pub fn mean_out(&self) -> f64 {
        *self.mean_n_trajectory.last().expect("trajectory holds the input mean")
    }

    /// Fraction of photons remaining, `mean_out / mean_in`; `None` when the
    /// input mean vanishes.
    pub fn fraction(&self) -> Option<f64> {
        let mean_in = self.mean_in();
        (mean_in > MIN_TRACE).then(|| self.mean_out() / mean_in)
    }
}

/// Runs `rho0` through `config.n_atoms` atoms in sequence. Post-selected
/// channels renormalise after every atom and record the pre-normalisation
/// trace.
pub fn apply_channel(rho0: &FieldState, config: &InteractionConfig, kind: ChannelKind) -> Result<ChannelOutcome> {
    config.validate()?;
    if rho0.dim() != config.dim {
        return Err(Error::InvalidInput(format!(
            "dimension mismatch: state has {} levels, config {}",
            rho0.dim(),
            config.dim
        )));
    }
    if !rho0.is_normalized() {
        return Err(Error::InvalidInput(format!("input state must be normalised (trace {})", rho0.trace())));
    }
    let ops = block_operators(config.r, config.dim)?;

    let mut rho = rho0.clone();
    let mut per_step_trace = Vec::with_capacity(config.n_atoms);
    let mut trajectory = Vec::with_capacity(config.n_atoms + 1);
    trajectory.push(rho.mean_photon_number()?);
    let mut worst = TruncationWarning { top_population: rho.top_population(), step: 0 };

    for step in 1..=config.n_atoms {
        let blocks = ops.evolve(&rho)?;
        rho = match kind {
            ChannelKind::Absorption => {
                let next = blocks.traced();
                per_step_trace.push(next.trace());
                next
            }
            ChannelKind::PostselectGround | ChannelKind::PostselectExcited => {
                let (trace, block) = if kind == ChannelKind::PostselectGround {
                    (blocks.ground_trace(), blocks.ground())
                } else {
                    (blocks.excited_trace(), blocks.excited())
                };
                if !(trace > MIN_TRACE) {
                    return Err(Error::ImpossiblePostselection { step, trace });
                }
                per_step_trace.push(trace);
                block.normalized()?
            }
        };
        trajectory.push(rho.mean_photon_number_unnormalized()?);
        let top = rho.top_population() / rho.trace();
        if top > worst.top_population {
            worst = TruncationWarning { top_population: top, step };
        }
    }

    let success_probability = match kind {
        ChannelKind::Absorption => 1.0,
        _ => per_step_trace.iter().product(),
    };
    let final_state = if rho.is_normalized() { rho } else { rho.normalized()? };
    Ok(ChannelOutcome {
        kind,
        final_state,
        success_probability,
        per_step_trace,
        mean_n_trajectory: trajectory,
        max_top_population: worst.top_population,
        truncation_warning: (worst.top_population > TRUNCATION_WARN).then_some(worst),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum RowStatus {
    Ok,
    /// The channel ran but `F` is undefined (zero input mean).
    Degenerate(String),
    /// The channel failed for this row.
    Failed(String),
}

impl RowStatus {
    pub fn label(&self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::Degenerate(_) => "degenerate",
            RowStatus::Failed(_) => "error",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            RowStatus::Ok => "",
            RowStatus::Degenerate(m) | RowStatus::Failed(m) => m,
        }
    }
}

/// One `(parameter, channel)` cell of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub r: f64,
    /// Coherent amplitude, for amplitude sweeps.
    pub alpha: Option<f64>,
    pub kind: ChannelKind,
    pub n_atoms: usize,
    pub dim: usize,
    pub mean_in: f64,
    pub mean_out: Option<f64>,
    pub fraction: Option<f64>,
    pub success_probability: Option<f64>,
    pub top_population: Option<f64>,
    pub status: RowStatus,
}

impl SweepRow {
    pub fn is_ok(&self) -> bool {
        self.status == RowStatus::Ok
    }
}

fn sweep_cell(rho0: &FieldState, mean_in: f64, r: f64, alpha: Option<f64>, n_atoms: usize, kind: ChannelKind) -> SweepRow {
    let mut row = SweepRow {
        r,
        alpha,
        kind,
        n_atoms,
        dim: rho0.dim(),
        mean_in,
        mean_out: None,
        fraction: None,
        success_probability: None,
        top_population: None,
        status: RowStatus::Ok,
    };
    let outcome = InteractionConfig::new(r, n_atoms, rho0.dim()).and_then(|cfg| apply_channel(rho0, &cfg, kind));
    match outcome {
        Ok(out) => {
            row.mean_out = Some(out.mean_out());
            row.fraction = out.fraction();
            row.success_probability = Some(out.success_probability);
            row.top_population = Some(out.max_top_population);
            if row.fraction.is_none() {
                row.status = RowStatus::Degenerate("input mean photon number is zero; F is undefined".into());
            }
        }
        Err(e) => row.status = RowStatus::Failed(e.to_string()),
    }
    row
}

fn sorted_kinds(kinds: &[ChannelKind]) -> Result<Vec<ChannelKind>> {
    let mut kinds = kinds.to_vec();
    kinds.sort();
    kinds.dedup();
    if kinds.is_empty() {
        return Err(Error::InvalidInput("at least one channel is required".into()));
    }
    Ok(kinds)
}

/// `F` and success probability for every `(r, channel)` pair, rows ordered
/// by ascending `r` and then by channel. Per-row channel
/// failures are flagged on the row.
pub fn sweep_coupling(rho0: &FieldState, r_values: &[f64], n_atoms: usize, kinds: &[ChannelKind]) -> Result<Vec<SweepRow>> {
    if r_values.is_empty() {
        return Err(Error::InvalidInput("coupling grid is empty".into()));
    }
    if let Some(bad) = r_values.iter().find(|r| !r.is_finite() || **r < 0.0) {
        return Err(Error::InvalidInput(format!("coupling values must be finite and >= 0, got {bad}")));
    }
    let kinds = sorted_kinds(kinds)?;
    let mean_in = rho0.mean_photon_number()?;
    let mut r_values = r_values.to_vec();
    r_values.sort_by(f64::total_cmp);
    let cells: Vec<(f64, ChannelKind)> = r_values.iter().flat_map(|&r| kinds.iter().map(move |&k| (r, k))).collect();
    Ok(cells.into_par_iter().map(|(r, kind)| sweep_cell(rho0, mean_in, r, None, n_atoms, kind)).collect())
}

/// Coherent-input amplitude sweep at fixed coupling. Each amplitude gets its
/// own truncation from [`auto_dimension`] unless `dim_override` is given.
pub fn sweep_amplitude(
    alpha_values: &[f64],
    r: f64,
    n_atoms: usize,
    kinds: &[ChannelKind],
    dim_override: Option<usize>,
) -> Result<Vec<SweepRow>> {
    if alpha_values.is_empty() {
        return Err(Error::InvalidInput("amplitude grid is empty".into()));
    }
    if let Some(bad) = alpha_values.iter().find(|a| !a.is_finite() || **a < 0.0) {
        return Err(Error::InvalidInput(format!("amplitudes must be finite and >= 0, got {bad}")));
    }
    let kinds = sorted_kinds(kinds)?;
    let amplifying = kinds.iter().any(|k| k.can_amplify());
    let rows: Vec<Vec<SweepRow>> = alpha_values
        .par_iter()
        .map(|&alpha| {
            let dim = dim_override.unwrap_or_else(|| auto_dimension(alpha * alpha, amplifying));
            let prepared = coherent_amplitudes(Complex64::new(alpha, 0.0), dim)
                .and_then(|amps| pure_density(&amps).normalized())
                .and_then(|rho| rho.mean_photon_number().map(|m| (rho, m)));
            match prepared {
                Ok((rho0, mean_in)) => kinds.iter().map(|&k| sweep_cell(&rho0, mean_in, r, Some(alpha), n_atoms, k)).collect(),
                Err(e) => kinds
                    .iter()
                    .map(|&kind| SweepRow {
                        r,
                        alpha: Some(alpha),
                        kind,
                        n_atoms,
                        dim,
                        mean_in: f64::NAN,
                        mean_out: None,
                        fraction: None,
                        success_probability: None,
                        top_population: None,
                        status: RowStatus::Failed(e.to_string()),
                    })
                    .collect(),
            }
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::number_state_density;
    use approx::assert_abs_diff_eq;

    fn coherent_state(alpha: f64, dim: usize) -> FieldState {
        pure_density(&coherent_amplitudes(Complex64::new(alpha, 0.0), dim).unwrap()).normalized().unwrap()
    }

    fn run(alpha: f64, r: f64, n: usize, dim: usize, kind: ChannelKind) -> ChannelOutcome {
        let rho = coherent_state(alpha, dim);
        apply_channel(&rho, &InteractionConfig::new(r, n, dim).unwrap(), kind).unwrap()
    }

    #[test]
    fn parses_channel_names() {
        assert_eq!("ground".parse::<ChannelKind>().unwrap(), ChannelKind::PostselectGround);
        assert_eq!("Absorption".parse::<ChannelKind>().unwrap(), ChannelKind::Absorption);
        assert_eq!("postselect-excited".parse::<ChannelKind>().unwrap(), ChannelKind::PostselectExcited);
        assert!("both".parse::<ChannelKind>().is_err());
    }

    #[test]
    fn vacuum_survives_ground_postselection() {
        let vac = number_state_density(0, 5).unwrap();
        let out = apply_channel(&vac, &InteractionConfig::new(0.8, 7, 5).unwrap(), ChannelKind::PostselectGround).unwrap();
        assert_eq!(out.final_state, vac);
        assert_eq!(out.success_probability, 1.0);
    }

    #[test]
    fn number_state_is_unchanged_by_ground_postselection() {
        let rho = number_state_density(3, 8).unwrap();
        let out = apply_channel(&rho, &InteractionConfig::new(0.4, 10, 8).unwrap(), ChannelKind::PostselectGround).unwrap();
        assert_eq!(out.final_state.populations()[3], 1.0);
        assert!(out.mean_n_trajectory.iter().all(|&m| m == 3.0));
        let expect = (0.4 * 3f64.sqrt()).cos().powi(20);
        assert_abs_diff_eq!(out.success_probability, expect, epsilon = 1e-15);
    }

    #[test]
    fn excited_postselection_on_vacuum_is_impossible() {
        let vac = number_state_density(0, 4).unwrap();
        let err = apply_channel(&vac, &InteractionConfig::new(0.5, 1, 4).unwrap(), ChannelKind::PostselectExcited).unwrap_err();
        assert!(matches!(err, Error::ImpossiblePostselection { step: 1, .. }));
    }

    #[test]
    fn excited_postselection_removes_one_photon_per_atom() {
        let rho = number_state_density(4, 8).unwrap();
        let out = apply_channel(&rho, &InteractionConfig::new(0.3, 3, 8).unwrap(), ChannelKind::PostselectExcited).unwrap();
        assert_eq!(out.mean_n_trajectory, vec![4.0, 3.0, 2.0, 1.0]);
    }

    #[test]
    fn rejects_mismatched_or_unnormalised_input() {
        let rho = number_state_density(1, 4).unwrap();
        let cfg = InteractionConfig::new(0.2, 1, 5).unwrap();
        assert!(apply_channel(&rho, &cfg, ChannelKind::Absorption).is_err());
        let half = FieldState::from_matrix(rho.matrix().mapv(|v| v * 0.5)).unwrap();
        let cfg = InteractionConfig::new(0.2, 1, 4).unwrap();
        assert!(apply_channel(&half, &cfg, ChannelKind::Absorption).is_err());
    }

    // Means quoted for α = √10, N = 10 at r = 0.25, 0.45 and 0.6 (paper values
    // given to three significant figures).
    #[test]
    fn reproduces_quoted_means() {
        let a = 10f64.sqrt();
        let cases = [(0.25, 5.88, 4.92), (0.45, 2.72, 1.04), (0.6, 2.39, 19.15)];
        for (r, abs, post) in cases {
            let m_abs = run(a, r, 10, 107, ChannelKind::Absorption).mean_out();
            let m_post = run(a, r, 10, 107, ChannelKind::PostselectGround).mean_out();
            assert!((m_abs - abs).abs() < 0.01, "r={r}: absorption {m_abs}");
            assert!((m_post - post).abs() < 0.01, "r={r}: post-selected {m_post}");
        }
    }

    #[test]
    fn success_is_product_of_step_traces() {
        let out = run(10f64.sqrt(), 0.45, 10, 107, ChannelKind::PostselectGround);
        let product: f64 = out.per_step_trace.iter().product();
        assert_abs_diff_eq!(out.success_probability, product, epsilon = 1e-12);
        assert!(out.success_probability > 3e-5 && out.success_probability < 3e-4);
        out.final_state.check_invariants().unwrap();
    }

    #[test]
    fn absorption_preserves_trace() {
        let out = run(10f64.sqrt(), 0.6, 10, 60, ChannelKind::Absorption);
        for t in &out.per_step_trace {
            assert!((t - 1.0).abs() <= 1e-10);
        }
        assert_eq!(out.success_probability, 1.0);
    }

    #[test]
    fn reports_truncation() {
        let out = run(3.0, 0.6, 10, 20, ChannelKind::PostselectGround);
        assert!(out.truncation_warning.is_some());
        let out = run(3.0, 0.6, 10, 100, ChannelKind::PostselectGround);
        assert!(out.truncation_warning.is_none());
    }

    #[test]
    fn zero_coupling_row() {
        let rho = coherent_state(10f64.sqrt(), 60);
        let rows = sweep_coupling(&rho, &[0.0], 3, &ChannelKind::ALL).unwrap();
        assert_eq!(rows.len(), 3);
        for row in &rows {
            match row.kind {
                ChannelKind::PostselectExcited => assert!(matches!(row.status, RowStatus::Failed(_))),
                _ => assert_abs_diff_eq!(row.fraction.unwrap(), 1.0, epsilon = 1e-12),
            }
        }
    }

    #[test]
    fn weak_coupling_channels_agree() {
        let rho = coherent_state(10f64.sqrt(), 60);
        let grid: Vec<f64> = (0..=40).map(|k| k as f64 * 0.01).collect();
        let kinds = [ChannelKind::Absorption, ChannelKind::PostselectGround];
        let rows = sweep_coupling(&rho, &grid, 1, &kinds).unwrap();
        for pair in rows.chunks(2) {
            let (abs, post) = (&pair[0], &pair[1]);
            assert_eq!(abs.kind, ChannelKind::Absorption);
            let (fa, fp) = (abs.fraction.unwrap(), post.fraction.unwrap());
            if abs.r <= 0.05 {
                assert!((fa - fp).abs() < 1e-4, "r={}: {fa} vs {fp}", abs.r);
            }
            if abs.r >= 0.2 {
                assert!(fp < fa, "r={}: post-selection should attenuate more", abs.r);
            }
        }
    }

    #[test]
    fn amplitude_sweep_edges() {
        let kinds = [ChannelKind::Absorption, ChannelKind::PostselectGround];
        let rows = sweep_amplitude(&[0.0, 0.01], 0.25, 1, &kinds, None).unwrap();
        assert!(rows[..2].iter().all(|r| matches!(r.status, RowStatus::Degenerate(_))));
        let (fa, fp) = (rows[2].fraction.unwrap(), rows[3].fraction.unwrap());
        assert!((fa - fp).abs() < 1e-4);
        assert!(sweep_amplitude(&[-1.0], 0.25, 1, &kinds, None).is_err());
    }

    #[test]
    fn sweep_rows_are_ordered() {
        let rho = coherent_state(1.0, 20);
        let rows = sweep_coupling(&rho, &[0.3, 0.1], 2, &[ChannelKind::PostselectGround, ChannelKind::Absorption]).unwrap();
        let keys: Vec<_> = rows.iter().map(|r| (r.r, r.kind)).collect();
        assert_eq!(
            keys,
            vec![
                (0.1, ChannelKind::Absorption),
                (0.1, ChannelKind::PostselectGround),
                (0.3, ChannelKind::Absorption),
                (0.3, ChannelKind::PostselectGround),
            ]
        );
    }
}
