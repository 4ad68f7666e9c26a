//! Transfer function, spectral covariance and stability of the linearized system.
//!
//! With `K = Γ − 𝓜` the output transfer function is
//! `S(ω) = √(2Γ) (iω + K)⁻¹ √(2Γ) − I`. Its real and imaginary parts are
//! evaluated independently through `Inv(ω) = [ω² + K²]⁻¹`:
//!
//! ```text
//! S_R = (2Γ)^{-1/2} A(ω) Inv(ω) (2Γ)^{1/2},   A(ω) = Γ² + [𝓜, Γ] − 𝓜² − ω²
//! S_I = −ω (2Γ)^{1/2} Inv(ω) (2Γ)^{1/2}
//! ```
//!
//! and every evaluation checks `S = S_R + i S_I`.
//!
//! All functions are pure in `(model, ω)`; grid evaluation fans out over rayon
//! and collects in frequency order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, complexify, compose, imag_part, real_part};
use crate::model::{build_drift, DriftMatrix, InteractionModel};
use crate::{CMatrix, RMatrix, C64};

/// Largest accepted 1-norm condition estimate of the kernel.
pub const MAX_CONDITION: f64 = 1e12;
/// Relative tolerance of the `S = S_R + i S_I` consistency check.
pub const SPLIT_TOL: f64 = 1e-10;
/// Below this stability margin spectra are still evaluated but a warning is logged.
pub const NEAR_THRESHOLD_MARGIN: f64 = 1e-6;
/// Default upper bound of the pump-scale search.
pub const DEFAULT_S_MAX: f64 = 1e3;

/// Covariance normalization.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `c = 1/(2√(2π))`, the literal prefactor of the output covariance.
    PaperPrefactor,
    /// `c = 1`, so vacuum is the identity and squeezing reads directly in dB.
    #[default]
    ShotNoiseUnity,
}

impl Normalization {
    pub fn prefactor(self) -> f64 {
        match self {
            Normalization::PaperPrefactor => 1.0 / (2.0 * (2.0 * std::f64::consts::PI).sqrt()),
            Normalization::ShotNoiseUnity => 1.0,
        }
    }

    /// Vacuum (shot-noise) level under this normalization.
    pub fn vacuum_level(self) -> f64 {
        self.prefactor()
    }
}

impl std::str::FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" | "paper_prefactor" | "paper-prefactor" => Ok(Self::PaperPrefactor),
            "unity" | "shot_noise_unity" | "shot-noise-unity" | "shot_noise" => Ok(Self::ShotNoiseUnity),
            other => Err(Error::InvalidParameter(format!("unknown normalization `{other}`"))),
        }
    }
}

/// Ordered list of sideband frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    points: Vec<f64>,
    symmetric: bool,
}

impl FrequencyGrid {
    pub fn new(points: Vec<f64>, symmetric: bool) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidGrid("grid is empty".into()));
        }
        if points.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidGrid("grid has non-finite points".into()));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("points must be strictly increasing".into()));
        }
        if symmetric {
            let n = points.len();
            let closed = (0..n).all(|k| {
                let (a, b) = (points[k], -points[n - 1 - k]);
                (a - b).abs() <= 1e-12 * a.abs().max(1.0)
            });
            if !closed {
                return Err(Error::InvalidGrid("symmetric grid must be closed under negation".into()));
            }
        }
        Ok(Self { points, symmetric })
    }

    /// `count` evenly spaced points in `[min, max]`.
    pub fn linspace(min: f64, max: f64, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidGrid("count must be positive".into()));
        }
        if count == 1 {
            return Self::new(vec![min], min == 0.0);
        }
        if max <= min {
            return Err(Error::InvalidGrid(format!("omega-max {max} must exceed omega-min {min}")));
        }
        let step = (max - min) / (count - 1) as f64;
        let points: Vec<f64> = (0..count).map(|k| min + step * k as f64).collect();
        let symmetric = (min + max).abs() <= 1e-12 * max.abs();
        let mut grid = Self::new(points, false)?;
        if symmetric {
            // make the mirror exact
            let n = grid.points.len();
            for k in 0..n / 2 {
                grid.points[n - 1 - k] = -grid.points[k];
            }
            if n % 2 == 1 {
                grid.points[n / 2] = 0.0;
            }
            grid.symmetric = true;
        }
        Ok(grid)
    }

    /// Grid closed under `ω → −ω`, containing every original point.
    pub fn mirrored(&self) -> Self {
        if self.symmetric {
            return self.clone();
        }
        let mut pts: Vec<f64> = self
            .points
            .iter()
            .flat_map(|&w| [w.abs(), -w.abs()])
            .map(|w| if w == 0.0 { 0.0 } else { w })
            .collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        Self {
            points: pts,
            symmetric: true,
        }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Stability of the linearized dynamics `dR/dt = (−Γ + 𝓜) R + ...`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stability {
    pub stable: bool,
    /// `−max Re λ(−Γ + 𝓜)`; positive below threshold.
    pub margin: f64,
}

pub fn stability(model: &InteractionModel) -> Stability {
    stability_of(&build_drift(model).m_quad, model)
}

fn stability_of(m_quad: &RMatrix, model: &InteractionModel) -> Stability {
    let generator = m_quad - model.damping_matrix();
    let max_re = generator
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let margin = -max_re;
    Stability {
        stable: margin > 0.0,
        margin,
    }
}

/// Smallest pump scale `s* > 0` at which `F → s·F` loses stability.
///
/// Brackets by doubling from `s = 1/64` and bisects to `1e-9` relative.
pub fn threshold_scale(model: &InteractionModel, s_max: f64) -> Result<f64> {
    let at_zero = stability(&model.with_pump_scale(0.0));
    if !at_zero.stable {
        return Err(Error::UnstableAtZeroPump {
            margin: at_zero.margin,
        });
    }
    if model.f().norm() == 0.0 {
        return Err(Error::NoThresholdFound { s_max });
    }
    let margin_at = |s: f64| stability(&model.with_pump_scale(s)).margin;

    let mut lo = 0.0;
    let mut hi = 1.0 / 64.0;
    while margin_at(hi) > 0.0 {
        if hi >= s_max {
            return Err(Error::NoThresholdFound { s_max });
        }
        lo = hi;
        hi = (hi * 2.0).min(s_max);
    }
    while hi - lo > 1e-9 * hi {
        let mid = 0.5 * (lo + hi);
        if margin_at(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One transfer-function evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferSample {
    pub omega: f64,
    pub s: CMatrix,
    pub s_r: RMatrix,
    pub s_i: RMatrix,
    /// Relative residual of `s − (s_r + i s_i)`.
    pub split_residual: f64,
}

/// One spectral covariance evaluation; `sigma = sigma_r + i sigma_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceSample {
    pub omega: f64,
    pub sigma: CMatrix,
    pub sigma_r: RMatrix,
    pub sigma_i: RMatrix,
    pub normalization: Normalization,
    /// Relative residual between the real/imaginary assembly and `c S S†`.
    pub split_residual: f64,
}

impl CovarianceSample {
    pub fn n_modes(&self) -> usize {
        self.sigma.nrows() / 2
    }

    pub fn vacuum_level(&self) -> f64 {
        self.normalization.vacuum_level()
    }

    /// `‖σ_I‖_F / ‖σ‖_F`.
    pub fn relative_imaginary(&self) -> f64 {
        linalg::ratio(self.sigma_i.norm(), self.sigma.norm())
    }

    /// Smallest eigenvalue of σ relative to the vacuum level.
    pub fn min_eigenvalue(&self) -> f64 {
        linalg::hermitian_eigenvalues(&self.sigma)[0] / self.vacuum_level()
    }

    /// Smallest eigenvalue of σ_R relative to the vacuum level.
    pub fn min_eigenvalue_real_part(&self) -> f64 {
        linalg::symmetric_eigenvalues(&self.sigma_r)[0] / self.vacuum_level()
    }

    /// Covariance of the listed modes alone (principal sub-block on their x and y rows).
    pub fn reduced(&self, modes: &[usize]) -> Result<CovarianceSample> {
        let n = self.n_modes();
        if modes.is_empty() || modes.iter().any(|&m| m >= n) {
            return Err(Error::InvalidParameter(format!(
                "mode selection {modes:?} out of range for {n} modes"
            )));
        }
        let idx: Vec<usize> = modes.iter().copied().chain(modes.iter().map(|m| m + n)).collect();
        let k = idx.len();
        let sigma = CMatrix::from_fn(k, k, |i, j| self.sigma[(idx[i], idx[j])]);
        let sigma_r = RMatrix::from_fn(k, k, |i, j| self.sigma_r[(idx[i], idx[j])]);
        let sigma_i = RMatrix::from_fn(k, k, |i, j| self.sigma_i[(idx[i], idx[j])]);
        Ok(CovarianceSample {
            omega: self.omega,
            sigma,
            sigma_r,
            sigma_i,
            normalization: self.normalization,
            split_residual: self.split_residual,
        })
    }
}

/// Closed forms of `S_R S_Iᵀ` and `S_R S_Iᵀ − S_I S_Rᵀ` with their direct counterparts.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductAsymmetry {
    pub omega: f64,
    /// `(−2ω) (2Γ)^{-1/2} A B (2Γ)^{1/2}`.
    pub srsit: RMatrix,
    /// `(−4ω) (2Γ)^{-1/2} (A B Γ − Γ B Aᵀ) (2Γ)^{-1/2}`.
    pub difference: RMatrix,
    pub a: RMatrix,
    /// `Inv Γ Invᵀ`.
    pub b: RMatrix,
    /// Relative residual of `srsit` against `S_R S_Iᵀ` from the transfer split.
    pub srsit_residual: f64,
    /// Residual of `difference` against the direct products, relative to `‖S_R‖‖S_I‖`.
    pub difference_residual: f64,
}

/// Precomputed linear system for repeated evaluation at many frequencies.
#[derive(Debug, Clone)]
pub struct LinearizedSystem {
    model: InteractionModel,
    drift: DriftMatrix,
    stability: Stability,
    gamma: RMatrix,
    /// `Γ − 𝓜`
    kernel: RMatrix,
    /// `Γ² + [𝓜, Γ] − 𝓜²`
    a_static: RMatrix,
    sqrt_2gamma: Vec<f64>,
}

impl LinearizedSystem {
    /// Build for a stable model; unstable models are rejected.
    pub fn new(model: &InteractionModel) -> Result<Self> {
        let sys = Self::formal(model);
        if !sys.stability.stable {
            return Err(Error::Unstable {
                margin: sys.stability.margin,
            });
        }
        if sys.stability.margin < NEAR_THRESHOLD_MARGIN {
            log::warn!(
                "stability margin {:e} is below {:e}; covariance diverges at threshold",
                sys.stability.margin,
                NEAR_THRESHOLD_MARGIN
            );
        }
        Ok(sys)
    }

    /// Build without the stability precondition.
    ///
    /// Above threshold the linearized formulas still evaluate wherever the
    /// kernel is invertible, but the results do not describe a stationary state.
    pub fn formal(model: &InteractionModel) -> Self {
        let drift = build_drift(model);
        let stability = stability_of(&drift.m_quad, model);
        let gamma = model.damping_matrix();
        let m = &drift.m_quad;
        let kernel = &gamma - m;
        let a_static = &gamma * &gamma + (m * &gamma - &gamma * m) - m * m;
        let sqrt_2gamma = model.damping_diagonal().iter().map(|g| (2.0 * g).sqrt()).collect();
        Self {
            model: model.clone(),
            drift,
            stability,
            gamma,
            kernel,
            a_static,
            sqrt_2gamma,
        }
    }

    pub fn model(&self) -> &InteractionModel {
        &self.model
    }

    pub fn drift(&self) -> &DriftMatrix {
        &self.drift
    }

    pub fn stability(&self) -> Stability {
        self.stability
    }

    pub fn dim(&self) -> usize {
        self.kernel.nrows()
    }

    /// `D · X` with `D = diag(d)`.
    fn left_diag(d: &[f64], x: &RMatrix) -> RMatrix {
        RMatrix::from_fn(x.nrows(), x.ncols(), |i, j| d[i] * x[(i, j)])
    }

    /// `X · D` with `D = diag(d)`.
    fn right_diag(x: &RMatrix, d: &[f64]) -> RMatrix {
        RMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] * d[j])
    }

    fn inv_sqrt_2gamma(&self) -> Vec<f64> {
        self.sqrt_2gamma.iter().map(|x| 1.0 / x).collect()
    }

    /// `A(ω) = Γ² + [𝓜, Γ] − 𝓜² − ω² I`.
    pub fn a_matrix(&self, omega: f64) -> RMatrix {
        &self.a_static - RMatrix::identity(self.dim(), self.dim()).scale(omega * omega)
    }

    /// `Inv(ω) = [ω² I + (Γ − 𝓜)²]⁻¹`, guarded by a condition estimate.
    pub fn inv_kernel(&self, omega: f64) -> Result<RMatrix> {
        let n = self.dim();
        let op = &self.kernel * &self.kernel + RMatrix::identity(n, n).scale(omega * omega);
        match linalg::inverse_with_condition(&op) {
            Some((inv, cond)) if cond <= MAX_CONDITION => Ok(inv),
            Some((_, cond)) => Err(Error::SingularKernel { omega, condition: cond }),
            None => Err(Error::SingularKernel {
                omega,
                condition: f64::INFINITY,
            }),
        }
    }

    /// `S(ω)` by a dense complex solve of `(iω + Γ − 𝓜)`.
    pub fn transfer_direct(&self, omega: f64) -> Result<CMatrix> {
        let n = self.dim();
        let op = complexify(&self.kernel) + CMatrix::identity(n, n) * C64::new(0.0, omega);
        let inv = match linalg::inverse_with_condition_c(&op) {
            Some((inv, cond)) if cond <= MAX_CONDITION => inv,
            Some((_, cond)) => return Err(Error::SingularKernel { omega, condition: cond }),
            None => {
                return Err(Error::SingularKernel {
                    omega,
                    condition: f64::INFINITY,
                })
            }
        };
        let d = &self.sqrt_2gamma;
        let mut s = CMatrix::from_fn(n, n, |i, j| inv[(i, j)] * (d[i] * d[j]));
        for k in 0..n {
            s[(k, k)] -= C64::new(1.0, 0.0);
        }
        Ok(s)
    }

    /// `(S_R, S_I)` through the factored real form and `−ω Inv`.
    pub fn transfer_split(&self, omega: f64) -> Result<(RMatrix, RMatrix)> {
        let inv = self.inv_kernel(omega)?;
        Ok(self.split_with(&inv, omega))
    }

    fn split_with(&self, inv: &RMatrix, omega: f64) -> (RMatrix, RMatrix) {
        let d = &self.sqrt_2gamma;
        let d_inv = self.inv_sqrt_2gamma();
        let s_r = Self::right_diag(&Self::left_diag(&d_inv, &(self.a_matrix(omega) * inv)), d);
        let s_i = Self::right_diag(&Self::left_diag(d, inv), d).scale(-omega);
        (s_r, s_i)
    }

    /// `S_R` in the unfactored form `√(2Γ) (Γ − 𝓜) Inv √(2Γ) − I`.
    pub fn transfer_real_unfactored(&self, omega: f64) -> Result<RMatrix> {
        let inv = self.inv_kernel(omega)?;
        let d = &self.sqrt_2gamma;
        let n = self.dim();
        Ok(Self::right_diag(&Self::left_diag(d, &(&self.kernel * inv)), d) - RMatrix::identity(n, n))
    }

    /// Transfer function with independently computed real/imaginary parts.
    pub fn transfer(&self, omega: f64) -> Result<TransferSample> {
        let s = self.transfer_direct(omega)?;
        let inv = self.inv_kernel(omega)?;
        let (s_r, s_i) = self.split_with(&inv, omega);
        let residual = linalg::rel_diff_c(&s, &compose(&s_r, &s_i));
        let cond = self.condition_hint(&inv);
        if residual > split_tolerance(cond) {
            return Err(Error::SplitMismatch { omega, residual });
        }
        Ok(TransferSample {
            omega,
            s,
            s_r,
            s_i,
            split_residual: residual,
        })
    }

    /// Rough conditioning of the kernel used to scale round-off bounds.
    fn condition_hint(&self, inv: &RMatrix) -> f64 {
        (self.kernel.norm() * self.kernel.norm() + 1.0) * inv.norm()
    }

    /// Output spectral covariance for vacuum input.
    pub fn spectral_covariance(&self, omega: f64, normalization: Normalization) -> Result<CovarianceSample> {
        let t = self.transfer(omega)?;
        let c = normalization.prefactor();
        let sigma = (&t.s * t.s.adjoint()).scale(c);
        let sr_t = t.s_r.transpose();
        let si_t = t.s_i.transpose();
        let sigma_r = (&t.s_r * &sr_t + &t.s_i * &si_t).scale(c);
        let sigma_i = (&t.s_i * &sr_t - &t.s_r * &si_t).scale(c);
        let residual = linalg::rel_diff_c(&sigma, &compose(&sigma_r, &sigma_i));
        Ok(CovarianceSample {
            omega,
            sigma,
            sigma_r,
            sigma_i,
            normalization,
            split_residual: residual,
        })
    }

    pub fn covariance_on_grid(&self, grid: &FrequencyGrid, normalization: Normalization) -> Result<Vec<CovarianceSample>> {
        grid.points()
            .par_iter()
            .map(|&w| self.spectral_covariance(w, normalization))
            .collect()
    }

    pub fn transfer_on_grid(&self, grid: &FrequencyGrid) -> Result<Vec<TransferSample>> {
        grid.points().par_iter().map(|&w| self.transfer(w)).collect()
    }

    /// Closed forms of the `S_R S_Iᵀ` product and its antisymmetric difference.
    pub fn product_asymmetry(&self, omega: f64) -> Result<ProductAsymmetry> {
        let inv = self.inv_kernel(omega)?;
        let (s_r, s_i) = self.split_with(&inv, omega);
        let a = self.a_matrix(omega);
        let b = &inv * &self.gamma * inv.transpose();
        let d = &self.sqrt_2gamma;
        let d_inv = self.inv_sqrt_2gamma();

        let srsit = Self::right_diag(&Self::left_diag(&d_inv, &(&a * &b)), d).scale(-2.0 * omega);
        let inner = &a * &b * &self.gamma - &self.gamma * &b * a.transpose();
        let difference = Self::right_diag(&Self::left_diag(&d_inv, &inner), &d_inv).scale(-4.0 * omega);

        let direct = &s_r * s_i.transpose();
        let direct_diff = &direct - &s_i * s_r.transpose();
        let scale = s_r.norm() * s_i.norm();
        let srsit_residual = linalg::ratio((&srsit - &direct).norm(), scale);
        let difference_residual = linalg::ratio((&difference - &direct_diff).norm(), scale);
        let tol = split_tolerance(self.condition_hint(&inv));
        if srsit_residual > tol || difference_residual > tol {
            return Err(Error::SplitMismatch {
                omega,
                residual: srsit_residual.max(difference_residual),
            });
        }
        Ok(ProductAsymmetry {
            omega,
            srsit,
            difference,
            a,
            b,
            srsit_residual,
            difference_residual,
        })
    }
}

/// `SPLIT_TOL`, widened only when the kernel conditioning makes it unreachable in f64.
fn split_tolerance(condition: f64) -> f64 {
    SPLIT_TOL.max(64.0 * f64::EPSILON * condition)
}

pub fn inv_kernel(model: &InteractionModel, omega: f64) -> Result<RMatrix> {
    LinearizedSystem::new(model)?.inv_kernel(omega)
}

pub fn transfer(model: &InteractionModel, omega: f64) -> Result<TransferSample> {
    LinearizedSystem::new(model)?.transfer(omega)
}

pub fn transfer_split(model: &InteractionModel, omega: f64) -> Result<(RMatrix, RMatrix)> {
    LinearizedSystem::new(model)?.transfer_split(omega)
}

pub fn spectral_covariance(model: &InteractionModel, omega: f64, normalization: Normalization) -> Result<CovarianceSample> {
    LinearizedSystem::new(model)?.spectral_covariance(omega, normalization)
}

pub fn product_asymmetry(model: &InteractionModel, omega: f64) -> Result<ProductAsymmetry> {
    LinearizedSystem::new(model)?.product_asymmetry(omega)
}

/// `max ‖S Ω S† − Ω‖_F / ‖Ω‖_F`-style residual of the conjugate-symplectic condition.
pub fn symplectic_residual(s: &CMatrix) -> f64 {
    let n = s.nrows() / 2;
    let omega = complexify(&linalg::symplectic_form(n));
    linalg::rel_diff_c(&(s * &omega * s.adjoint()), &omega)
}

/// Real and imaginary parts of a complex matrix.
pub fn split_parts(m: &CMatrix) -> (RMatrix, RMatrix) {
    (real_part(m), imag_part(m))
}
