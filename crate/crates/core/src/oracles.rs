//! Closed-form photon-number series for a coherent input, evaluated without
//! the matrix engine. They serve as cross-checks and as fast evaluators.
//!
//! All sums run over Poisson weights `e^{-|α|²}|α|^{2n}/n!`, generated in log
//! space and extended until both the remaining tail and the last term fall
//! below a tenth of the requested tolerance.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{pure_density, AmplitudeVector, FieldState, MIN_TRACE};

pub const DEFAULT_SERIES_TOL: f64 = 1e-15;
const MAX_TERMS: usize = 1_000_000;

/// `|α|²`, `r`, atom count and tail tolerance for a series evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesParams {
    pub alpha_sq: f64,
    pub r: f64,
    pub n_atoms: usize,
    pub tol: f64,
}

impl SeriesParams {
    pub fn new(alpha_sq: f64, r: f64, n_atoms: usize) -> Result<Self> {
        let params = SeriesParams { alpha_sq, r, n_atoms, tol: DEFAULT_SERIES_TOL };
        params.validate()?;
        Ok(params)
    }

    pub fn with_tol(mut self, tol: f64) -> Result<Self> {
        self.tol = tol;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.alpha_sq.is_finite() || self.alpha_sq < 0.0 {
            return Err(Error::InvalidInput(format!("|alpha|^2 must be finite and >= 0, got {}", self.alpha_sq)));
        }
        if !self.r.is_finite() || self.r < 0.0 {
            return Err(Error::InvalidInput(format!("coupling r must be finite and >= 0, got {}", self.r)));
        }
        if self.n_atoms == 0 {
            return Err(Error::InvalidInput("at least one atom is required".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidInput(format!("series tolerance must be > 0, got {}", self.tol)));
        }
        Ok(())
    }

    /// Number of series terms the adaptive truncation keeps.
    pub fn terms(&self) -> Result<usize> {
        Ok(poisson_weights(self.alpha_sq, self.tol)?.len())
    }

    fn require_single_atom(&self) -> Result<()> {
        if self.n_atoms != 1 {
            return Err(Error::InvalidInput(format!(
                "closed form exists for a single atom only, got {} atoms",
                self.n_atoms
            )));
        }
        Ok(())
    }
}

/// Poisson weights `w_n`, `n = 0..terms`, with the tail beyond the last term
/// bounded by `tol/10`. Built by ratio recurrence outward from the mode and
/// normalised at the end, which keeps the relative error per term at a few
/// ulps even for large `|α|²`.
pub fn poisson_weights(alpha_sq: f64, tol: f64) -> Result<Vec<f64>> {
    if alpha_sq == 0.0 {
        return Ok(vec![1.0]);
    }
    let target = tol / 10.0;
    let mode = alpha_sq.floor() as usize;
    if mode >= MAX_TERMS {
        return Err(too_many_terms(alpha_sq));
    }
    let mut weights = vec![0.0; mode + 1];
    weights[mode] = 1.0;
    for k in (1..=mode).rev() {
        weights[k - 1] = weights[k] * k as f64 / alpha_sq;
    }
    let mut sum: f64 = weights.iter().sum();
    let mut n = mode;
    loop {
        let w = weights[n];
        let nf = n as f64;
        // geometric bound on Σ_{k>n} w_k once the ratio a²/(k+1) < 1
        let next = w * alpha_sq / (nf + 1.0);
        let tail = next / (1.0 - alpha_sq / (nf + 2.0));
        if nf + 1.0 > alpha_sq && tail < target * sum && w < target * sum {
            break;
        }
        if n + 1 >= MAX_TERMS {
            return Err(too_many_terms(alpha_sq));
        }
        weights.push(next);
        sum += next;
        n += 1;
    }
    weights.iter_mut().for_each(|w| *w /= sum);
    Ok(weights)
}

fn too_many_terms(alpha_sq: f64) -> Error {
    Error::InvalidInput(format!("Poisson series for |alpha|^2 = {alpha_sq} needs more than {MAX_TERMS} terms"))
}

fn sqrt_arg(r: f64, n: usize) -> f64 {
    r * (n as f64).sqrt()
}

/// Single-atom absorption: `⟨n⟩ = |α|² − Σ wₙ sin²(r√n)`.
pub fn mean_n_absorption(params: &SeriesParams) -> Result<f64> {
    params.validate()?;
    params.require_single_atom()?;
    let w = poisson_weights(params.alpha_sq, params.tol)?;
    let lost: f64 = w.iter().enumerate().map(|(n, wn)| wn * sqrt_arg(params.r, n).sin().powi(2)).sum();
    Ok(params.alpha_sq - lost)
}

/// Single-atom ground-state post-selection:
/// `⟨n⟩ = |α|² Σ wₙ cos²(r√(n+1)) / Σ wₙ cos²(r√n)`.
pub fn mean_n_postselect(params: &SeriesParams) -> Result<f64> {
    params.validate()?;
    params.require_single_atom()?;
    let w = poisson_weights(params.alpha_sq, params.tol)?;
    let (num, den) = w.iter().enumerate().fold((0.0, 0.0), |(num, den), (n, wn)| {
        (
            num + wn * sqrt_arg(params.r, n + 1).cos().powi(2),
            den + wn * sqrt_arg(params.r, n).cos().powi(2),
        )
    });
    if !(den > MIN_TRACE) {
        return Err(Error::ImpossiblePostselection { step: 1, trace: den });
    }
    Ok(params.alpha_sq * num / den)
}

/// Probability that all `N` atoms stay in the ground state:
/// `P_N = Σ wₙ cos^{2N}(r√n)`.
pub fn success_probability(params: &SeriesParams) -> Result<f64> {
    params.validate()?;
    let w = poisson_weights(params.alpha_sq, params.tol)?;
    let exp = 2 * params.n_atoms as i32;
    let p: f64 = w.iter().enumerate().map(|(n, wn)| wn * sqrt_arg(params.r, n).cos().powi(exp)).sum();
    Ok(p.clamp(0.0, 1.0))
}

/// Ground-post-selected field after `N` atoms built in one shot: every
/// coherent amplitude is multiplied by `cos^N(r√n)` and the result
/// renormalised. Amplitudes come from log-magnitudes, not the engine's
/// recurrence.
pub fn postselected_state_closed_form(alpha: Complex64, r: f64, n_atoms: usize, dim: usize) -> Result<FieldState> {
    if !(alpha.re.is_finite() && alpha.im.is_finite()) || !r.is_finite() || r < 0.0 || n_atoms == 0 || dim == 0 {
        return Err(Error::InvalidInput(format!(
            "invalid closed-form parameters: alpha={alpha}, r={r}, atoms={n_atoms}, dim={dim}"
        )));
    }
    let (mag, phase) = (alpha.norm(), alpha.arg());
    let mut ln_fact = 0.0;
    let mut amps = Vec::with_capacity(dim);
    for n in 0..dim {
        if n > 0 {
            ln_fact += (n as f64).ln();
        }
        let filter = sqrt_arg(r, n).cos().powi(n_atoms as i32);
        let c = if mag == 0.0 {
            if n == 0 { 1.0 } else { 0.0 }
        } else {
            (-0.5 * mag * mag + n as f64 * mag.ln() - 0.5 * ln_fact).exp()
        };
        amps.push(Complex64::from_polar(c * filter, n as f64 * phase));
    }
    let norm: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
    if !(norm > MIN_TRACE) {
        return Err(Error::ImpossiblePostselection { step: n_atoms, trace: norm });
    }
    let scale = norm.sqrt().recip();
    let amps = AmplitudeVector::from_vec(amps.into_iter().map(|c| c * scale).collect())?;
    pure_density(&amps).normalized()
}

/// `|⟨n⟩_absorption − ⟨n⟩_postselect|` for one atom at weak coupling. Both
/// means expand as `|α|²(1 − r²) + O(r⁴)`, so the gap is fourth order in `r`.
pub fn small_r_equivalence_gap(alpha_sq: f64, r: f64) -> Result<f64> {
    if !(r < 0.2) {
        return Err(Error::InvalidInput(format!("weak-coupling gap needs r < 0.2, got {r}")));
    }
    let params = SeriesParams::new(alpha_sq, r, 1)?;
    Ok((mean_n_absorption(&params)? - mean_n_postselect(&params)?).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn p(alpha_sq: f64, r: f64, n: usize) -> SeriesParams {
        SeriesParams::new(alpha_sq, r, n).unwrap()
    }

    #[test]
    fn weights_sum_to_one() {
        for a2 in [0.0, 1e-4, 0.5, 10.0, 64.0, 900.0] {
            let w = poisson_weights(a2, 1e-15).unwrap();
            let total: f64 = w.iter().sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
            let mean: f64 = w.iter().enumerate().map(|(n, wn)| n as f64 * wn).sum();
            assert_abs_diff_eq!(mean, a2, epsilon = 1e-10 * a2.max(1.0));
        }
    }

    #[test]
    fn trivial_limits() {
        assert_eq!(mean_n_absorption(&p(10.0, 0.0, 1)).unwrap(), 10.0);
        assert_eq!(mean_n_absorption(&p(0.0, 0.7, 1)).unwrap(), 0.0);
        assert_abs_diff_eq!(mean_n_postselect(&p(10.0, 0.0, 1)).unwrap(), 10.0, epsilon = 1e-12);
        for n in [1, 4, 10] {
            assert_abs_diff_eq!(success_probability(&p(7.5, 0.0, n)).unwrap(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn multi_atom_means_are_rejected() {
        assert!(mean_n_absorption(&p(10.0, 0.2, 2)).is_err());
        assert!(mean_n_postselect(&p(10.0, 0.2, 3)).is_err());
        assert!(SeriesParams::new(-1.0, 0.2, 1).is_err());
    }

    #[test]
    fn postselection_attenuates_more_at_moderate_coupling() {
        let params = p(10.0, 0.3, 1);
        assert!(mean_n_postselect(&params).unwrap() < mean_n_absorption(&params).unwrap());
    }

    // "on the order of 10⁻³" at r = 0.25 and "∼10⁻⁴" at r = 0.45 (N = 10).
    #[test]
    fn success_probability_orders_of_magnitude() {
        let weak = success_probability(&p(10.0, 0.25, 10)).unwrap();
        let strong = success_probability(&p(10.0, 0.45, 10)).unwrap();
        assert!((1e-3..1e-2).contains(&weak), "{weak}");
        assert!((1e-4..1e-3).contains(&strong), "{strong}");
        assert!(strong < weak);
    }

    #[test]
    fn closed_form_at_zero_coupling_is_input() {
        let alpha = Complex64::new(10f64.sqrt(), 0.0);
        let rho = postselected_state_closed_form(alpha, 0.0, 10, 60).unwrap();
        let input = pure_density(&crate::fock::coherent_amplitudes(alpha, 60).unwrap());
        for (a, b) in rho.matrix().iter().zip(input.matrix().iter()) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn closed_form_amplified_mean() {
        let rho = postselected_state_closed_form(Complex64::new(10f64.sqrt(), 0.0), 0.6, 10, 100).unwrap();
        assert!((rho.mean_photon_number().unwrap() - 19.15).abs() < 0.01);
    }

    #[test]
    fn closed_form_rejects_empty_support() {
        // every retained amplitude underflows: e^{-800}·40ⁿ/√n! for n < 2
        let err = postselected_state_closed_form(Complex64::new(40.0, 0.0), 0.1, 1, 2).unwrap_err();
        assert!(matches!(err, Error::ImpossiblePostselection { .. }));
        assert!(postselected_state_closed_form(Complex64::new(f64::NAN, 0.0), 0.1, 1, 4).is_err());
    }

    #[test]
    fn gap_is_fourth_order() {
        assert_eq!(small_r_equivalence_gap(10.0, 0.0).unwrap(), 0.0);
        let ratio = small_r_equivalence_gap(10.0, 0.04).unwrap() / small_r_equivalence_gap(10.0, 0.02).unwrap();
        assert!((ratio - 16.0).abs() < 0.2 * 16.0, "{ratio}");
        assert!(small_r_equivalence_gap(0.01, 0.1).unwrap() < 1e-5);
        assert!(small_r_equivalence_gap(10.0, 0.25).is_err());
    }

    #[test]
    fn success_decreases_with_atoms() {
        let mut last = 1.0;
        for n in 1..=12 {
            let now = success_probability(&p(10.0, 0.33, n)).unwrap();
            assert!(now <= last);
            last = now;
        }
    }
}
