//! Husimi Q-function `Q(β) = ⟨β|ρ|β⟩/π` sampled on rectangular grids.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::FieldState;

/// Samples per axis of the default grid.
pub const DEFAULT_GRID_POINTS: usize = 201;
/// Half-width of the default grid in Q-distribution standard deviations.
pub const DEFAULT_GRID_SIGMAS: f64 = 4.5;

/// Inclusive rectangular sampling of the complex plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub n_re: usize,
    pub n_im: usize,
}

impl GridSpec {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64, n_re: usize, n_im: usize) -> Result<Self> {
        let spec = GridSpec { re_min, re_max, im_min, im_max, n_re, n_im };
        spec.validate()?;
        Ok(spec)
    }

    /// Square grid of `n × n` samples centred on `center`.
    pub fn centered(center: Complex64, half_width: f64, n: usize) -> Result<Self> {
        Self::new(center.re - half_width, center.re + half_width, center.im - half_width, center.im + half_width, n, n)
    }

    pub fn validate(&self) -> Result<()> {
        let bounds = [self.re_min, self.re_max, self.im_min, self.im_max];
        if bounds.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidInput("grid bounds must be finite".into()));
        }
        if !(self.re_max > self.re_min) || !(self.im_max > self.im_min) {
            return Err(Error::InvalidInput(format!(
                "grid bounds must satisfy max > min, got re [{}, {}], im [{}, {}]",
                self.re_min, self.re_max, self.im_min, self.im_max
            )));
        }
        if self.n_re < 2 || self.n_im < 2 {
            return Err(Error::InvalidInput(format!(
                "grid needs at least 2 samples per axis, got {}x{}",
                self.n_re, self.n_im
            )));
        }
        Ok(())
    }

    pub fn d_re(&self) -> f64 {
        (self.re_max - self.re_min) / (self.n_re - 1) as f64
    }

    pub fn d_im(&self) -> f64 {
        (self.im_max - self.im_min) / (self.n_im - 1) as f64
    }

    pub fn re_at(&self, col: usize) -> f64 {
        self.re_min + col as f64 * self.d_re()
    }

    pub fn im_at(&self, row: usize) -> f64 {
        self.im_min + row as f64 * self.d_im()
    }

    pub fn point(&self, row: usize, col: usize) -> Complex64 {
        Complex64::new(self.re_at(col), self.im_at(row))
    }
}

/// Q-function samples; `values[[row, col]]` is taken at
/// `re_at(col) + i·im_at(row)`.
#[derive(Clone, Debug, PartialEq)]
pub struct QGrid {
    pub spec: GridSpec,
    pub values: Array2<f64>,
}

impl QGrid {
    /// Riemann sum `Σ Q·Δre·Δim`.
    pub fn integral(&self) -> f64 {
        self.values.sum() * self.spec.d_re() * self.spec.d_im()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

// c_n(β) = e^{-|β|²/2} βⁿ/√n!, the same recurrence as the Fock constructor.
fn fill_coherent(beta: Complex64, buf: &mut [Complex64]) {
    let mut c = Complex64::new((-0.5 * beta.norm_sqr()).exp(), 0.0);
    buf[0] = c;
    for (n, slot) in buf.iter_mut().enumerate().skip(1) {
        c = c * beta / (n as f64).sqrt();
        *slot = c;
    }
}

// ⟨c|ρ|c⟩ using Hermiticity: diagonal plus twice the real upper triangle.
fn quadratic_form(rho: &Array2<Complex64>, c: &[Complex64]) -> f64 {
    let d = c.len();
    let mut acc = 0.0;
    for n in 0..d {
        let row = rho.row(n);
        let mut upper = Complex64::new(0.0, 0.0);
        for m in (n + 1)..d {
            upper += row[m] * c[m];
        }
        acc += row[n].re * c[n].norm_sqr() + 2.0 * (c[n].conj() * upper).re;
    }
    acc
}

/// `Q(β)` at a single point.
pub fn q_at(rho: &FieldState, beta: Complex64) -> f64 {
    let mut c = vec![Complex64::new(0.0, 0.0); rho.dim()];
    fill_coherent(beta, &mut c);
    quadratic_form(rho.matrix(), &c) / PI
}

/// Samples `Q` on `grid`. Rows are evaluated in parallel; each sample depends
/// only on its own coordinates, so the result does not depend on the thread
/// count.
pub fn q_function(rho: &FieldState, grid: &GridSpec) -> Result<QGrid> {
    grid.validate()?;
    if !rho.is_normalized() {
        return Err(Error::InvalidInput(format!("Q-function needs a normalised state (trace {})", rho.trace())));
    }
    let d = rho.dim();
    let rows: Vec<Vec<f64>> = (0..grid.n_im)
        .into_par_iter()
        .map(|row| {
            let mut c = vec![Complex64::new(0.0, 0.0); d];
            (0..grid.n_re)
                .map(|col| {
                    fill_coherent(grid.point(row, col), &mut c);
                    quadratic_form(rho.matrix(), &c) / PI
                })
                .collect()
        })
        .collect();
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let values = Array2::from_shape_vec((grid.n_im, grid.n_re), flat).expect("grid shape matches sample count");
    Ok(QGrid { spec: *grid, values })
}

/// Grid centred on `⟨â⟩` with per-axis half-width of 4.5 standard deviations
/// of the state's Q-distribution, never narrower than that of a coherent
/// state (σ = 1/√2).
pub fn default_grid(rho: &FieldState) -> Result<GridSpec> {
    let rho = if rho.is_normalized() { rho.clone() } else { rho.normalized()? };
    let a = rho.mean_annihilation();
    let a2 = rho.mean_annihilation_sq();
    let anti = rho.mean_photon_number()? + 1.0;
    let var_re = 0.5 * (anti + a2.re) - a.re * a.re;
    let var_im = 0.5 * (anti - a2.re) - a.im * a.im;
    let half_re = DEFAULT_GRID_SIGMAS * var_re.max(0.0).sqrt().max(FRAC_1_SQRT_2);
    let half_im = DEFAULT_GRID_SIGMAS * var_im.max(0.0).sqrt().max(FRAC_1_SQRT_2);
    GridSpec::new(a.re - half_re, a.re + half_re, a.im - half_im, a.im + half_im, DEFAULT_GRID_POINTS, DEFAULT_GRID_POINTS)
}

/// Grid sample with the largest `Q`. Ties go to the smaller `|β|`, then to
/// the earlier row-major index.
pub fn q_peak(grid: &QGrid) -> Result<(Complex64, f64)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for ((row, col), &q) in grid.values.indexed_iter() {
        let better = match best {
            None => true,
            Some((br, bc, bq)) => {
                q > bq || (q == bq && grid.spec.point(row, col).norm() < grid.spec.point(br, bc).norm())
            }
        };
        if better {
            best = Some((row, col, q));
        }
    }
    match best {
        Some((row, col, q)) if q > 0.0 => Ok((grid.spec.point(row, col), q)),
        _ => Err(Error::DegenerateGrid),
    }
}
