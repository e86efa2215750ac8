//! Field states in a truncated Fock (photon-number) basis.
//!
//! Amplitudes are produced with multiplicative recurrences in `n`; factorials
//! are never formed directly, so truncation dimensions of several hundred are
//! safe.

use std::f64::consts::TAU;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Elementwise Hermiticity tolerance for a [`FieldState`].
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Allowed deviation of a normalised trace from one.
pub const TRACE_TOL: f64 = 1e-10;
/// Smallest eigenvalue accepted by the on-demand positivity check.
pub const PSD_TOL: f64 = 1e-9;
/// Traces below this are treated as zero.
pub const MIN_TRACE: f64 = 1e-300;
/// Top-level Fock population above which a result is flagged as truncated.
pub const TRUNCATION_WARN: f64 = 1e-8;
/// Tail mass the automatic truncation aims for on squeezed inputs.
pub const SQUEEZED_TAIL_TARGET: f64 = 1e-12;
const MAX_AUTO_DIM: usize = 4096;

const SQUEEZE_EPS: f64 = 1e-12;
const DIM_HEADROOM: usize = 10;
// Squared magnitudes of the scaled Hermite terms must stay representable.
const RESCALE_ABOVE: f64 = 1e150;

/// Parameters of the incident field: displacement `alpha` and optional
/// squeezing `squeezing_s · e^{i·squeezing_theta}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InputSpec {
    pub alpha: Complex64,
    pub squeezing_s: f64,
    pub squeezing_theta: f64,
}

impl InputSpec {
    pub fn coherent(alpha: Complex64) -> Self {
        InputSpec { alpha, squeezing_s: 0.0, squeezing_theta: 0.0 }
    }

    /// Squeezed coherent input. The angle is reduced into `[0, 2π)`.
    pub fn squeezed(alpha: Complex64, s: f64, theta: f64) -> Self {
        InputSpec { alpha, squeezing_s: s, squeezing_theta: theta.rem_euclid(TAU) }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.re.is_finite() && self.alpha.im.is_finite()) {
            return Err(Error::InvalidInput(format!("alpha must be finite, got {}", self.alpha)));
        }
        if !self.squeezing_s.is_finite() || self.squeezing_s < 0.0 {
            return Err(Error::InvalidInput(format!(
                "squeezing parameter must be finite and >= 0, got {}",
                self.squeezing_s
            )));
        }
        if !self.squeezing_theta.is_finite() || !(0.0..TAU).contains(&self.squeezing_theta) {
            return Err(Error::InvalidInput(format!(
                "squeezing angle must lie in [0, 2π), got {}",
                self.squeezing_theta
            )));
        }
        Ok(())
    }

    pub fn is_squeezed(&self) -> bool {
        self.squeezing_s >= SQUEEZE_EPS
    }

    /// Photon-number scale fed to [`auto_dimension`]: the mean of a coherent
    /// state whose number spread bounds that of this input.
    pub fn photon_scale(&self) -> f64 {
        let s = self.squeezing_s;
        self.alpha.norm_sqr() * (2.0 * s).exp() + s.sinh().powi(2)
    }

    /// Default truncation for this input. Squeezed states have a slowly
    /// decaying number tail, so the coherent rule is extended until the
    /// truncated tail mass drops below [`SQUEEZED_TAIL_TARGET`].
    pub fn auto_dimension(&self, amplifying: bool) -> Result<usize> {
        self.validate()?;
        let mut dim = auto_dimension(self.photon_scale(), amplifying);
        if !self.is_squeezed() {
            return Ok(dim);
        }
        while self.amplitudes(dim)?.tail_mass() > SQUEEZED_TAIL_TARGET {
            if dim >= MAX_AUTO_DIM {
                return Err(Error::InvalidInput(format!(
                    "squeezed input needs more than {MAX_AUTO_DIM} Fock levels; pass an explicit dimension"
                )));
            }
            dim = (dim + dim / 8).min(MAX_AUTO_DIM);
        }
        Ok(dim)
    }

    /// Fock amplitudes of this input, truncated to `dim` levels.
    pub fn amplitudes(&self, dim: usize) -> Result<AmplitudeVector> {
        if self.is_squeezed() {
            squeezed_coherent_amplitudes(self, dim)
        } else {
            self.validate()?;
            coherent_amplitudes(self.alpha, dim)
        }
    }
}

/// Truncation dimension large enough that a coherent state of mean `mean`
/// loses less than ~1e-12 of its mass. When the downstream channel can
/// amplify, the mean is tripled before the rule is applied.
pub fn auto_dimension(mean: f64, amplifying: bool) -> usize {
    let m = if amplifying { 3.0 * mean.max(0.0) } else { mean.max(0.0) };
    let core = (m + 12.0 * (m + 1.0).sqrt()).ceil() as usize;
    (core + DIM_HEADROOM).max(2)
}

/// Fock amplitudes `c_n`, `n = 0..dim`, plus the probability mass lost to
/// truncation.
#[derive(Clone, Debug, PartialEq)]
pub struct AmplitudeVector {
    amps: Vec<Complex64>,
    tail_mass: f64,
}

impl AmplitudeVector {
    /// Wraps raw amplitudes; the tail mass is `1 - Σ|c_n|²` (clamped at 0).
    pub fn from_vec(amps: Vec<Complex64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::InvalidInput("amplitude vector must be non-empty".into()));
        }
        if amps.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::InvalidInput("amplitudes must be finite".into()));
        }
        let norm: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
        if norm > 1.0 + TRACE_TOL {
            return Err(Error::InvalidInput(format!("amplitude norm {norm} exceeds one")));
        }
        Ok(AmplitudeVector { amps, tail_mass: (1.0 - norm).max(0.0) })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.amps.iter().enumerate().map(|(n, c)| n as f64 * c.norm_sqr()).sum()
    }
}

/// Coherent-state amplitudes `e^{-|α|²/2} αⁿ/√n!` via `c_{n+1} = c_n·α/√(n+1)`.
pub fn coherent_amplitudes(alpha: Complex64, dim: usize) -> Result<AmplitudeVector> {
    if !(alpha.re.is_finite() && alpha.im.is_finite()) {
        return Err(Error::InvalidInput(format!("alpha must be finite, got {alpha}")));
    }
    if dim == 0 {
        return Err(Error::InvalidInput("truncation dimension must be >= 1".into()));
    }
    let mut amps = Vec::with_capacity(dim);
    let mut c = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    amps.push(c);
    for n in 1..dim {
        c = c * alpha / (n as f64).sqrt();
        amps.push(c);
    }
    let norm: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
    Ok(AmplitudeVector { amps, tail_mass: (1.0 - norm).max(0.0) })
}

/// Displaced squeezed vacuum amplitudes
/// `cₙ ∝ (½e^{iθ}tanh s)^{n/2} Hₙ(γ/√(e^{iθ}sinh 2s)) / √(n!)`,
/// `γ = α cosh s + α* e^{iθ} sinh s`, normalised numerically over the
/// truncated support.
///
/// The scaled terms `hₙ = uⁿHₙ(x)/√n!` obey their own three-term recurrence,
/// so neither Hermite values nor factorials are formed. The tail mass is
/// estimated by running the recurrence past `dim`.
pub fn squeezed_coherent_amplitudes(spec: &InputSpec, dim: usize) -> Result<AmplitudeVector> {
    spec.validate()?;
    if dim == 0 {
        return Err(Error::InvalidInput("truncation dimension must be >= 1".into()));
    }
    if !spec.is_squeezed() {
        return coherent_amplitudes(spec.alpha, dim);
    }
    let s = spec.squeezing_s;
    let phase = Complex64::from_polar(1.0, spec.squeezing_theta);
    let alpha = spec.alpha;
    let gamma = alpha * s.cosh() + alpha.conj() * phase * s.sinh();
    let u = (phase * (0.5 * s.tanh())).sqrt();
    let x = gamma / (phase * (2.0 * s).sinh()).sqrt();

    let ext = dim + (dim / 2).max(20);
    let mut h: Vec<Complex64> = Vec::with_capacity(ext);
    h.push(Complex64::new(1.0, 0.0));
    if ext > 1 {
        h.push(2.0 * x * u);
    }
    for n in 1..ext - 1 {
        let nf = n as f64;
        let next = h[n] * (2.0 * x * u / (nf + 1.0).sqrt())
            - h[n - 1] * (2.0 * nf * u * u / ((nf + 1.0) * nf).sqrt());
        h.push(next);
        if next.norm() > RESCALE_ABOVE {
            let k = 1.0 / RESCALE_ABOVE;
            h.iter_mut().for_each(|v| *v *= k);
        }
    }

    let kept: f64 = h[..dim].iter().map(|c| c.norm_sqr()).sum();
    let total: f64 = kept + h[dim..].iter().map(|c| c.norm_sqr()).sum::<f64>();
    if !(kept > MIN_TRACE) || !kept.is_finite() {
        return Err(Error::DegenerateState { trace: kept });
    }
    let scale = kept.sqrt().recip();
    let amps = h[..dim].iter().map(|c| c * scale).collect();
    Ok(AmplitudeVector { amps, tail_mass: 1.0 - kept / total })
}

/// Density matrix of the field in a `D`-level Fock basis.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldState {
    matrix: Array2<Complex64>,
    normalized: bool,
}

impl FieldState {
    /// Validates shape, finiteness, Hermiticity and diagonal sign.
    pub fn from_matrix(matrix: Array2<Complex64>) -> Result<Self> {
        let (rows, cols) = matrix.dim();
        if rows == 0 || rows != cols {
            return Err(Error::InvalidInput(format!("density matrix must be square and non-empty, got {rows}x{cols}")));
        }
        if matrix.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::InvalidInput("density matrix has non-finite entries".into()));
        }
        let state = Self::from_matrix_unchecked(matrix);
        state.check_invariants()?;
        Ok(state)
    }

    pub(crate) fn from_matrix_unchecked(matrix: Array2<Complex64>) -> Self {
        let trace: f64 = matrix.diag().iter().map(|c| c.re).sum();
        FieldState { matrix, normalized: (trace - 1.0).abs() <= TRACE_TOL }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Array2<Complex64> {
        self.matrix
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diag().iter().map(|c| c.re).sum()
    }

    /// Photon-number distribution `Re ρ_nn`.
    pub fn populations(&self) -> Vec<f64> {
        self.matrix.diag().iter().map(|c| c.re).collect()
    }

    /// `ρ_{D-1,D-1}`, the truncation diagnostic.
    pub fn top_population(&self) -> f64 {
        let d = self.dim();
        self.matrix[[d - 1, d - 1]].re
    }

    /// Copy rescaled to unit trace.
    pub fn normalized(&self) -> Result<FieldState> {
        let trace = self.trace();
        if !(trace > MIN_TRACE) {
            return Err(Error::DegenerateState { trace });
        }
        let mut matrix = self.matrix.mapv(|c| c / trace);
        // the division can leave the trace a few ulps from one
        matrix.diag_mut().iter_mut().for_each(|c| c.im = 0.0);
        Ok(FieldState { matrix, normalized: true })
    }

    /// `Tr[n̂ρ]` for a normalised state.
    pub fn mean_photon_number(&self) -> Result<f64> {
        let trace = self.trace();
        if !(trace > MIN_TRACE) {
            return Err(Error::DegenerateState { trace });
        }
        if !self.normalized {
            return Err(Error::InvalidInput(format!(
                "state is not normalised (trace {trace}); use mean_photon_number_unnormalized"
            )));
        }
        Ok(self.number_moment())
    }

    /// `Tr[n̂ρ]/Tr[ρ]` for any state with non-vanishing trace.
    pub fn mean_photon_number_unnormalized(&self) -> Result<f64> {
        let trace = self.trace();
        if !(trace > MIN_TRACE) {
            return Err(Error::DegenerateState { trace });
        }
        Ok(self.number_moment() / trace)
    }

    fn number_moment(&self) -> f64 {
        self.matrix.diag().iter().enumerate().map(|(n, c)| n as f64 * c.re).sum()
    }

    /// `Tr[âρ]`.
    pub fn mean_annihilation(&self) -> Complex64 {
        (0..self.dim().saturating_sub(1))
            .map(|n| self.matrix[[n + 1, n]] * ((n + 1) as f64).sqrt())
            .sum()
    }

    /// `Tr[â²ρ]`.
    pub fn mean_annihilation_sq(&self) -> Complex64 {
        (0..self.dim().saturating_sub(2))
            .map(|n| self.matrix[[n + 2, n]] * (((n + 1) * (n + 2)) as f64).sqrt())
            .sum()
    }

    /// `⟨ψ|ρ|ψ⟩`; equals the fidelity with `|ψ⟩` when `|ψ⟩` is normalised.
    pub fn pure_overlap(&self, psi: &AmplitudeVector) -> Result<f64> {
        if psi.dim() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "dimension mismatch: state {} vs vector {}",
                self.dim(),
                psi.dim()
            )));
        }
        let c = psi.as_slice();
        let mut acc = Complex64::new(0.0, 0.0);
        for (n, cn) in c.iter().enumerate() {
            let row: Complex64 = self.matrix.row(n).iter().zip(c).map(|(r, cm)| r * cm).sum();
            acc += cn.conj() * row;
        }
        Ok(acc.re)
    }

    /// Hermiticity, diagonal sign and (when flagged) unit trace.
    pub fn check_invariants(&self) -> Result<()> {
        let d = self.dim();
        for i in 0..d {
            let diag = self.matrix[[i, i]];
            if diag.re < -HERMITIAN_TOL || diag.im.abs() > HERMITIAN_TOL {
                return Err(Error::InvalidInput(format!("diagonal entry {i} is {diag}")));
            }
            for j in (i + 1)..d {
                let gap = (self.matrix[[i, j]] - self.matrix[[j, i]].conj()).norm();
                if gap > HERMITIAN_TOL {
                    return Err(Error::InvalidInput(format!("not Hermitian at ({i},{j}): residual {gap:e}")));
                }
            }
        }
        if self.normalized && (self.trace() - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidInput(format!("trace {} is not one", self.trace())));
        }
        Ok(())
    }

    /// Whether the smallest eigenvalue is at least `-tol`, decided by a
    /// Cholesky factorisation of `ρ + tol·I`.
    pub fn is_positive_semidefinite(&self, tol: f64) -> bool {
        let d = self.dim();
        let mut l = Array2::<Complex64>::zeros((d, d));
        for j in 0..d {
            let mut diag = self.matrix[[j, j]].re + tol;
            for k in 0..j {
                diag -= l[[j, k]].norm_sqr();
            }
            if !(diag > 0.0) {
                return false;
            }
            let ljj = diag.sqrt();
            l[[j, j]] = Complex64::new(ljj, 0.0);
            for i in (j + 1)..d {
                let mut v = self.matrix[[i, j]];
                for k in 0..j {
                    v -= l[[i, k]] * l[[j, k]].conj();
                }
                l[[i, j]] = v / ljj;
            }
        }
        true
    }
}

/// `ρ = |ψ⟩⟨ψ|`, filled from the upper triangle so the result is exactly
/// Hermitian.
pub fn pure_density(c: &AmplitudeVector) -> FieldState {
    let a = c.as_slice();
    let d = a.len();
    let mut m = Array2::<Complex64>::zeros((d, d));
    for n in 0..d {
        m[[n, n]] = Complex64::new(a[n].norm_sqr(), 0.0);
        for k in (n + 1)..d {
            let v = a[n] * a[k].conj();
            m[[n, k]] = v;
            m[[k, n]] = v.conj();
        }
    }
    FieldState::from_matrix_unchecked(m)
}

/// Number-state projector `|n⟩⟨n|`.
pub fn number_state_density(n: usize, dim: usize) -> Result<FieldState> {
    if n >= dim {
        return Err(Error::OutOfRange { index: n, dim });
    }
    let mut m = Array2::<Complex64>::zeros((dim, dim));
    m[[n, n]] = Complex64::new(1.0, 0.0);
    Ok(FieldState::from_matrix_unchecked(m))
}
