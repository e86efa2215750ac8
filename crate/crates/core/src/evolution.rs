//! One resonant Jaynes-Cummings interaction interval between the field and a
//! ground-state atom.
//!
//! With the atomic basis ordered (excited, ground) the propagator has the
//! block form `[[Ĉ, Ŝ′], [Ŝ, Ĉ′]]` whose blocks are diagonal or singly shifted
//! in the Fock basis:
//!
//! ```text
//! Ĉ′|n⟩ = cos(r√n)|n⟩          Ĉ|n⟩  = cos(r√(n+1))|n⟩
//! Ŝ|n⟩  = −i sin(r√(n+1))|n+1⟩  Ŝ′|n⟩ = −i sin(r√n)|n−1⟩
//! ```
//!
//! A ground-state atom therefore leaves the field in the two diagonal joint
//! blocks `ρ₂₂ = Ĉ′ρĈ′` (atom still in the ground state) and
//! `ρ₁₁ = Ŝ′ρŜ′†` (atom excited, one photon fewer). Both are elementwise
//! scalings of the input plus an index shift; nothing is exponentiated.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::FieldState;

/// Coupling `r = λt`, atom count and Fock truncation for a channel run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InteractionConfig {
    pub r: f64,
    pub n_atoms: usize,
    pub dim: usize,
}

impl InteractionConfig {
    pub fn new(r: f64, n_atoms: usize, dim: usize) -> Result<Self> {
        let config = InteractionConfig { r, n_atoms, dim };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        check_coupling(self.r)?;
        if self.n_atoms == 0 {
            return Err(Error::InvalidInput("at least one atom is required".into()));
        }
        if self.dim < 2 {
            return Err(Error::InvalidInput(format!("truncation dimension must be >= 2, got {}", self.dim)));
        }
        Ok(())
    }
}

fn check_coupling(r: f64) -> Result<()> {
    if !r.is_finite() || r < 0.0 {
        return Err(Error::InvalidInput(format!("coupling r must be finite and >= 0, got {r}")));
    }
    Ok(())
}

/// Fock-basis coefficients of the propagator blocks for one coupling value.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockOperators {
    r: f64,
    // cos(r√n), n = 0..D
    cos: Vec<f64>,
    // sin(r√(n+1)), n = 0..D
    sin_next: Vec<f64>,
}

/// Block coefficients for coupling `r` on a `dim`-level field.
pub fn block_operators(r: f64, dim: usize) -> Result<BlockOperators> {
    check_coupling(r)?;
    if dim < 2 {
        return Err(Error::InvalidInput(format!("truncation dimension must be >= 2, got {dim}")));
    }
    let cos = (0..dim).map(|n| (r * (n as f64).sqrt()).cos()).collect();
    let sin_next = (0..dim).map(|n| (r * ((n + 1) as f64).sqrt()).sin()).collect();
    Ok(BlockOperators { r, cos, sin_next })
}

impl BlockOperators {
    pub fn dim(&self) -> usize {
        self.cos.len()
    }

    pub fn coupling(&self) -> f64 {
        self.r
    }

    /// Diagonal of `Ĉ′`: entry `n` is `cos(r√n)`.
    pub fn cprime(&self) -> &[f64] {
        &self.cos
    }

    /// `Ŝ|n⟩ = s[n]·|n+1⟩` with `s[n] = −i sin(r√(n+1))`.
    pub fn s_shift(&self) -> Vec<Complex64> {
        self.sin_next.iter().map(|&s| Complex64::new(0.0, -s)).collect()
    }

    /// `Ĉ|n⟩ = cos(r√(n+1))|n⟩`.
    pub fn c_diag(&self, n: usize) -> f64 {
        self.cos.get(n + 1).copied().unwrap_or_else(|| (self.r * ((n + 1) as f64).sqrt()).cos())
    }

    /// `Ŝ′|n⟩ = s′·|n−1⟩`; exactly zero on the vacuum.
    pub fn s_prime(&self, n: usize) -> Complex64 {
        match n {
            0 => Complex64::new(0.0, 0.0),
            _ => Complex64::new(0.0, -self.sin_next[n - 1]),
        }
    }

    /// Diagonal joint blocks after one atom. The top row and column of `ρ₁₁`
    /// would be fed from level `D`, which is outside the truncation, and are
    /// zero.
    pub fn evolve(&self, rho: &FieldState) -> Result<EvolvedBlocks> {
        let d = self.dim();
        if rho.dim() != d {
            return Err(Error::InvalidInput(format!(
                "dimension mismatch: state has {} levels, operators {}",
                rho.dim(),
                d
            )));
        }
        let m = rho.matrix();
        let mut rho22 = Array2::<Complex64>::zeros((d, d));
        let mut rho11 = Array2::<Complex64>::zeros((d, d));
        for n in 0..d {
            rho22[[n, n]] = Complex64::new(m[[n, n]].re * self.cos[n] * self.cos[n], 0.0);
            for k in (n + 1)..d {
                let v = m[[n, k]] * (self.cos[n] * self.cos[k]);
                rho22[[n, k]] = v;
                rho22[[k, n]] = v.conj();
            }
        }
        for n in 0..d - 1 {
            let sn = self.sin_next[n];
            rho11[[n, n]] = Complex64::new(m[[n + 1, n + 1]].re * sn * sn, 0.0);
            for k in (n + 1)..d - 1 {
                let v = m[[n + 1, k + 1]] * (sn * self.sin_next[k]);
                rho11[[n, k]] = v;
                rho11[[k, n]] = v.conj();
            }
        }
        Ok(EvolvedBlocks { rho11, rho22 })
    }
}

/// Field blocks of the joint state with the atom excited (`rho11`) or in its
/// ground state (`rho22`). Neither is normalised.
#[derive(Clone, Debug, PartialEq)]
pub struct EvolvedBlocks {
    pub rho11: Array2<Complex64>,
    pub rho22: Array2<Complex64>,
}

impl EvolvedBlocks {
    pub fn excited_trace(&self) -> f64 {
        self.rho11.diag().iter().map(|c| c.re).sum()
    }

    pub fn ground_trace(&self) -> f64 {
        self.rho22.diag().iter().map(|c| c.re).sum()
    }

    /// Partial trace over the atom.
    pub fn traced(&self) -> FieldState {
        FieldState::from_matrix_unchecked(&self.rho11 + &self.rho22)
    }

    pub fn excited(&self) -> FieldState {
        FieldState::from_matrix_unchecked(self.rho11.clone())
    }

    pub fn ground(&self) -> FieldState {
        FieldState::from_matrix_unchecked(self.rho22.clone())
    }
}

/// One interaction of `rho` with a ground-state atom at coupling `r`.
pub fn evolve_one_atom(rho: &FieldState, r: f64) -> Result<EvolvedBlocks> {
    block_operators(r, rho.dim())?.evolve(rho)
}

/// Debug path: the full joint propagator on the space closed under the
/// interaction, `{|e,n⟩ : n < D−1} ∪ {|g,n⟩ : n < D}`.
///
/// Index `n` is `|e,n⟩` and index `D−1+n` is `|g,n⟩`.
pub fn joint_unitary(r: f64, dim: usize) -> Result<Array2<Complex64>> {
    let ops = block_operators(r, dim)?;
    let ne = dim - 1;
    let size = ne + dim;
    let mut u = Array2::<Complex64>::zeros((size, size));
    for n in 0..ne {
        // excited column: Ĉ keeps it excited, Ŝ moves it to |g,n+1⟩
        u[[n, n]] = Complex64::new(ops.c_diag(n), 0.0);
        u[[ne + n + 1, n]] = ops.s_shift()[n];
    }
    for n in 0..dim {
        u[[ne + n, ne + n]] = Complex64::new(ops.cprime()[n], 0.0);
        if n > 0 {
            u[[n - 1, ne + n]] = ops.s_prime(n);
        }
    }
    Ok(u)
}

/// Debug path: `U (|g⟩⟨g| ⊗ ρ) U†` on the closed joint space, computing all
/// four blocks with dense products.
pub fn evolve_joint(rho: &FieldState, r: f64) -> Result<Array2<Complex64>> {
    let d = rho.dim();
    let u = joint_unitary(r, d)?;
    let ne = d - 1;
    let mut joint = Array2::<Complex64>::zeros((ne + d, ne + d));
    joint.slice_mut(ndarray::s![ne.., ne..]).assign(rho.matrix());
    let u_dag = u.t().mapv(|c| c.conj());
    Ok(u.dot(&joint).dot(&u_dag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent_amplitudes, number_state_density, pure_density};
    use approx::assert_abs_diff_eq;
    use ndarray::s;
    use std::f64::consts::FRAC_PI_2;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn trace(m: &Array2<Complex64>) -> f64 {
        m.diag().iter().map(|c| c.re).sum()
    }

    #[test]
    fn zero_coupling_is_identity() {
        let ops = block_operators(0.0, 3).unwrap();
        assert_eq!(ops.cprime(), &[1.0, 1.0, 1.0]);
        assert!(ops.s_shift().iter().all(|s| s.norm() == 0.0));
    }

    #[test]
    fn half_rabi_on_one_photon() {
        let ops = block_operators(FRAC_PI_2, 2).unwrap();
        assert_abs_diff_eq!(ops.cprime()[1], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn block_coefficients_quarter_coupling() {
        let ops = block_operators(0.25, 3).unwrap();
        assert_eq!(ops.cprime(), &[1.0, 0.25f64.cos(), (0.25 * 2f64.sqrt()).cos()]);
        assert_eq!(ops.s_prime(0), c(0.0));
        assert_abs_diff_eq!(ops.s_prime(1).im, -0.25f64.sin(), epsilon = 1e-16);
        assert_abs_diff_eq!(ops.c_diag(2), (0.25 * 3f64.sqrt()).cos(), epsilon = 1e-16);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(block_operators(-0.1, 4).is_err());
        assert!(block_operators(f64::NAN, 4).is_err());
        assert!(block_operators(0.1, 1).is_err());
        assert!(InteractionConfig::new(0.1, 0, 4).is_err());
        assert!(InteractionConfig::new(0.1, 1, 1).is_err());
        let ops = block_operators(0.1, 4).unwrap();
        assert!(ops.evolve(&number_state_density(0, 5).unwrap()).is_err());
    }

    #[test]
    fn vacuum_cannot_excite() {
        let blocks = evolve_one_atom(&number_state_density(0, 4).unwrap(), 1.3).unwrap();
        assert_eq!(blocks.rho22, number_state_density(0, 4).unwrap().into_matrix());
        assert!(blocks.rho11.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn one_photon_half_cycle() {
        let blocks = evolve_one_atom(&number_state_density(1, 3).unwrap(), FRAC_PI_2).unwrap();
        assert!(blocks.rho22.iter().all(|v| v.norm() < 1e-30));
        assert_abs_diff_eq!(blocks.rho11[[0, 0]].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(blocks.excited_trace(), 1.0, epsilon = 1e-15);
    }

    fn ln_factorial(n: usize) -> f64 {
        (1..=n).map(|k| (k as f64).ln()).sum()
    }

    #[test]
    fn ground_trace_matches_series() {
        let alpha = 10f64.sqrt();
        let rho = pure_density(&coherent_amplitudes(c(alpha), 60).unwrap());
        let blocks = evolve_one_atom(&rho, 0.25).unwrap();
        // Σ e^{-10} 10ⁿ/n! cos²(0.25√n) with an explicit log-factorial
        let series: f64 = (0..60)
            .map(|n| (-10.0 + n as f64 * 10f64.ln() - ln_factorial(n)).exp() * (0.25 * (n as f64).sqrt()).cos().powi(2))
            .sum();
        assert_abs_diff_eq!(blocks.ground_trace(), series, epsilon = 1e-10);
    }

    // ρ₂₂ = e^{-|α|²} Σ αⁿα*ᵐ/√(n!m!) cos(r√n)cos(r√m) |n⟩⟨m| and the
    // shifted sine counterpart for ρ₁₁.
    #[test]
    fn blocks_match_coefficient_formula() {
        let alpha = Complex64::new(1.7, -0.9);
        let r = 0.37;
        let d = 50;
        let rho = pure_density(&coherent_amplitudes(alpha, d).unwrap());
        let blocks = evolve_one_atom(&rho, r).unwrap();
        let coeff = |n: usize, m: usize| {
            let mag = (-alpha.norm_sqr() + (n + m) as f64 * alpha.norm().ln() - 0.5 * (ln_factorial(n) + ln_factorial(m))).exp();
            Complex64::from_polar(mag, (n as f64 - m as f64) * alpha.arg())
        };
        for n in 0..=30 {
            for m in 0..=30 {
                let cp = coeff(n, m) * ((r * (n as f64).sqrt()).cos() * (r * (m as f64).sqrt()).cos());
                assert!((blocks.rho22[[n, m]] - cp).norm() < 1e-12, "rho22[{n},{m}]");
                if n >= 1 && m >= 1 {
                    let cs = coeff(n, m) * ((r * (n as f64).sqrt()).sin() * (r * (m as f64).sqrt()).sin());
                    assert!((blocks.rho11[[n - 1, m - 1]] - cs).norm() < 1e-12, "rho11[{},{}]", n - 1, m - 1);
                }
            }
        }
    }

    #[test]
    fn rabi_oscillation_on_number_states() {
        for n in [1usize, 4, 9] {
            for &r in &[0.1, 0.7, 1.9, 2.8] {
                let blocks = evolve_one_atom(&number_state_density(n, 12).unwrap(), r).unwrap();
                let expect = (r * (n as f64).sqrt()).cos().powi(2);
                assert_abs_diff_eq!(blocks.ground_trace(), expect, epsilon = 1e-14);
                assert_abs_diff_eq!(blocks.excited_trace(), 1.0 - expect, epsilon = 1e-14);
            }
        }
    }

    // Hamiltonian a†σ₋ + aσ₊ on the closed joint space, exponentiated by
    // scaled Taylor series; independent of the closed-form blocks.
    fn taylor_propagator(r: f64, dim: usize) -> Array2<Complex64> {
        let ne = dim - 1;
        let size = ne + dim;
        let mut h = Array2::<Complex64>::zeros((size, size));
        for n in 0..ne {
            // ⟨g,n+1| a†σ₋ |e,n⟩ = √(n+1)
            let amp = c(((n + 1) as f64).sqrt());
            h[[ne + n + 1, n]] = amp;
            h[[n, ne + n + 1]] = amp;
        }
        let squarings = 8;
        let step = h.mapv(|v| v * Complex64::new(0.0, -r / f64::from(1u32 << squarings)));
        let mut result = Array2::<Complex64>::eye(size);
        let mut term = Array2::<Complex64>::eye(size);
        for k in 1..30 {
            term = term.dot(&step).mapv(|v| v / k as f64);
            result += &term;
        }
        for _ in 0..squarings {
            result = result.dot(&result);
        }
        result
    }

    #[test]
    fn joint_unitary_matches_exponential() {
        for &r in &[0.25, 1.1, 2.9] {
            let u = joint_unitary(r, 6).unwrap();
            let oracle = taylor_propagator(r, 6);
            for (a, b) in u.iter().zip(oracle.iter()) {
                assert!((a - b).norm() < 1e-12);
            }
            let udu = u.t().mapv(|v| v.conj()).dot(&u);
            let eye = Array2::<Complex64>::eye(u.nrows());
            for (a, b) in udu.iter().zip(eye.iter()) {
                assert!((a - b).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn diagonal_blocks_match_full_evolution() {
        let d = 7;
        let rho = pure_density(&coherent_amplitudes(Complex64::new(0.8, 0.5), d).unwrap());
        let r = 0.9;
        let joint = evolve_joint(&rho, r).unwrap();
        let blocks = evolve_one_atom(&rho, r).unwrap();
        let ne = d - 1;
        let ground = joint.slice(s![ne.., ne..]);
        let excited = joint.slice(s![..ne, ..ne]);
        for (a, b) in ground.iter().zip(blocks.rho22.iter()) {
            assert!((a - b).norm() < 1e-14);
        }
        for (a, b) in excited.iter().zip(blocks.rho11.slice(s![..ne, ..ne]).iter()) {
            assert!((a - b).norm() < 1e-14);
        }
        assert!(blocks.rho11.row(ne).iter().all(|v| v.norm() == 0.0));
        assert_abs_diff_eq!(trace(&joint), trace(&blocks.rho11) + trace(&blocks.rho22), epsilon = 1e-14);
    }
}
