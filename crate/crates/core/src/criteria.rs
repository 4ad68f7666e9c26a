//! Real-versus-complex classification of the output spectral covariance.
//!
//! With pair production present (`F ≠ 0`) the covariance is real exactly when
//! the damping commutes with the drift, `[Γ, 𝓜] = 0`, and `𝓜²` is symmetric.
//! The second condition is equivalent to `GF = (GF)ᵀ`. Both tests are
//! reported as scale-invariant relative Frobenius diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, commutator};
use crate::model::{quadrature_drift, InteractionModel};
use crate::spectral::{FrequencyGrid, LinearizedSystem, Normalization};
use crate::RMatrix;

/// Default relative tolerance of the algebraic conditions.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    /// No pair production: σ is proportional to the identity.
    #[serde(rename = "TriviallyReal_FZero")]
    TriviallyRealFZero,
    /// Diagonal drift (`G = 0`, `F = iD`): decoupled single-mode squeezers.
    DecoupledDiagonal,
    RealCovariance,
    ComplexCovariance,
}

impl Verdict {
    pub fn is_real(self) -> bool {
        !matches!(self, Verdict::ComplexCovariance)
    }

    pub fn name(self) -> &'static str {
        match self {
            Verdict::TriviallyRealFZero => "TriviallyReal_FZero",
            Verdict::DecoupledDiagonal => "DecoupledDiagonal",
            Verdict::RealCovariance => "RealCovariance",
            Verdict::ComplexCovariance => "ComplexCovariance",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub verdict: Verdict,
    /// `‖[Γ, 𝓜]‖_F / (‖Γ‖_F ‖𝓜‖_F)`, zero when `𝓜 = 0`.
    pub commutator_gamma_m: f64,
    /// `‖𝓜² − (𝓜²)ᵀ‖_F / ‖𝓜²‖_F`.
    pub m2_asymmetry: f64,
    /// `‖GF − (GF)ᵀ‖_F / ‖GF‖_F`.
    pub gf_asymmetry: f64,
    /// Off-diagonal mass of 𝓜 relative to its norm.
    pub m_offdiagonal: f64,
    pub tol: f64,
}

impl Classification {
    pub fn is_real(&self) -> bool {
        self.verdict.is_real()
    }
}

pub fn classify(model: &InteractionModel, tol: f64) -> Classification {
    let m = quadrature_drift(model);
    let gamma = model.damping_matrix();

    let commutator_gamma_m = linalg::ratio(commutator(&gamma, &m).norm(), gamma.norm() * m.norm());
    let m2 = &m * &m;
    let m2_asymmetry = linalg::ratio((&m2 - m2.transpose()).norm(), m2.norm());
    let gf = model.g() * model.f();
    let gf_asymmetry = linalg::ratio((&gf - gf.transpose()).norm(), gf.norm());
    let m_offdiagonal = linalg::ratio(off_diagonal_norm(&m), m.norm());

    let f_norm = model.f().norm();
    let pump_free = f_norm == 0.0 || f_norm <= tol * model.g().norm();

    let verdict = if pump_free {
        Verdict::TriviallyRealFZero
    } else if m_offdiagonal <= tol {
        Verdict::DecoupledDiagonal
    } else if commutator_gamma_m <= tol && m2_asymmetry <= tol {
        Verdict::RealCovariance
    } else {
        Verdict::ComplexCovariance
    };

    Classification {
        verdict,
        commutator_gamma_m,
        m2_asymmetry,
        gf_asymmetry,
        m_offdiagonal,
        tol,
    }
}

fn off_diagonal_norm(m: &RMatrix) -> f64 {
    let mut acc = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if i != j {
                acc += m[(i, j)] * m[(i, j)];
            }
        }
    }
    acc.sqrt()
}

/// Verdict checked against the covariance actually computed on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropositionReport {
    pub classification: Classification,
    /// `max_ω ‖σ_I(ω)‖_F / ‖σ(ω)‖_F` over the grid.
    pub max_relative_imaginary: f64,
    /// Frequency where the maximum occurs.
    pub argmax_omega: f64,
    pub consistent: bool,
}

/// Cross-check the algebraic verdict against the measured covariance.
///
/// Real-family verdicts must measure at most `10·tol`; a complex verdict must
/// exceed `tol` at some nonzero frequency. A disagreement is an error.
pub fn verify_propositions(model: &InteractionModel, grid: &FrequencyGrid, tol: f64) -> Result<PropositionReport> {
    verify_with(&LinearizedSystem::new(model)?, grid, tol)
}

/// As [`verify_propositions`] for an already-built (possibly formal) system.
pub fn verify_with(sys: &LinearizedSystem, grid: &FrequencyGrid, tol: f64) -> Result<PropositionReport> {
    let classification = classify(sys.model(), tol);
    let grid = grid.mirrored();
    let samples = sys.covariance_on_grid(&grid, Normalization::ShotNoiseUnity)?;
    let (argmax_omega, max_relative_imaginary) = samples
        .iter()
        .filter(|s| s.omega != 0.0)
        .map(|s| (s.omega, s.relative_imaginary()))
        .fold((0.0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });

    let consistent = if classification.is_real() {
        max_relative_imaginary <= 10.0 * tol
    } else {
        max_relative_imaginary > tol
    };
    if !consistent {
        return Err(Error::InconsistentVerdict {
            verdict: classification.verdict.to_string(),
            measured: max_relative_imaginary,
            tol,
        });
    }
    Ok(PropositionReport {
        classification,
        max_relative_imaginary,
        argmax_omega,
        consistent,
    })
}

/// Relative commutators `[Γ, A]`, `[Γ, B]` and `[A, B]` at `omega`, with
/// `A = Γ² + [𝓜, Γ] − 𝓜² − ω²` and `B = Inv Γ Invᵀ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairwiseCommutators {
    pub gamma_a: f64,
    pub gamma_b: f64,
    pub a_b: f64,
}

impl PairwiseCommutators {
    pub fn max(&self) -> f64 {
        self.gamma_a.max(self.gamma_b).max(self.a_b)
    }
}

pub fn pairwise_commutators(sys: &LinearizedSystem, omega: f64) -> Result<PairwiseCommutators> {
    let gamma = sys.model().damping_matrix();
    let a = sys.a_matrix(omega);
    let inv = sys.inv_kernel(omega)?;
    let b = &inv * &gamma * inv.transpose();
    let rel = |x: &RMatrix, y: &RMatrix| linalg::ratio(commutator(x, y).norm(), x.norm() * y.norm());
    Ok(PairwiseCommutators {
        gamma_a: rel(&gamma, &a),
        gamma_b: rel(&gamma, &b),
        a_b: rel(&a, &b),
    })
}

/// Whether Γ, A(ω) and B(ω) commute pair-wise (each relative commutator ≤ `tol`).
///
/// `[Γ, 𝓜] = 0` is necessary. It is not sufficient: with `Γ = γI` the
/// commutator `[A, B]` still vanishes only when `𝓜²` commutes with `Invᵀ`.
pub fn pairwise_commutation_check(model: &InteractionModel, omega: f64, tol: f64) -> Result<bool> {
    pairwise_with(&LinearizedSystem::new(model)?, omega, tol)
}

pub fn pairwise_with(sys: &LinearizedSystem, omega: f64, tol: f64) -> Result<bool> {
    Ok(pairwise_commutators(sys, omega)?.max() <= tol)
}

/// `[Γ, 𝓜] = 0` within `tol` (relative).
pub fn damping_commutes(model: &InteractionModel, tol: f64) -> bool {
    let m = quadrature_drift(model);
    let gamma = model.damping_matrix();
    linalg::ratio(commutator(&gamma, &m).norm(), gamma.norm() * m.norm()) <= tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{CMatrix, C64};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn single_mode(delta: f64, g: f64) -> InteractionModel {
        InteractionModel::new(
            CMatrix::from_element(1, 1, c(delta, 0.0)),
            CMatrix::from_element(1, 1, c(0.0, g)),
            vec![1.0],
        )
        .unwrap()
    }

    #[test]
    fn single_mode_is_real() {
        let cl = classify(&single_mode(1.0, 1.38), DEFAULT_TOL);
        assert_eq!(cl.verdict, Verdict::RealCovariance);
        assert_eq!(cl.gf_asymmetry, 0.0);
    }

    #[test]
    fn pump_free_takes_precedence() {
        let cl = classify(&single_mode(1.0, 0.0), DEFAULT_TOL);
        assert_eq!(cl.verdict, Verdict::TriviallyRealFZero);
        // F = 0 and 𝓜 diagonal at once (G = 0): still trivially real
        let m = InteractionModel::from_real(&[0.0], &[0.0], vec![1.0]).unwrap();
        assert_eq!(classify(&m, DEFAULT_TOL).verdict, Verdict::TriviallyRealFZero);
    }

    #[test]
    fn diagonal_drift_is_decoupled() {
        let f = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.0, 0.3), c(0.0, -0.2)]));
        let m = InteractionModel::new(CMatrix::zeros(2, 2), f, vec![1.0, 0.5]).unwrap();
        let cl = classify(&m, DEFAULT_TOL);
        assert_eq!(cl.verdict, Verdict::DecoupledDiagonal);
        assert!(pairwise_commutation_check(&m, 0.4, DEFAULT_TOL).unwrap());
    }

    #[test]
    fn unequal_damping_breaks_reality() {
        // G real and commuting with F, but the two modes decay at different rates
        let m = InteractionModel::from_real(&[1.0, 0.01, 0.01, 1.0], &[0.0, 0.02, 0.02, 0.0], vec![1.0, 0.001]).unwrap();
        let cl = classify(&m, DEFAULT_TOL);
        assert_eq!(cl.verdict, Verdict::ComplexCovariance);
        assert!(cl.commutator_gamma_m > DEFAULT_TOL);
        assert!(cl.gf_asymmetry <= DEFAULT_TOL);
        assert!(!pairwise_commutation_check(&m, 1.0, DEFAULT_TOL).unwrap());
    }

    #[test]
    fn equal_damping_commutes_with_gamma_but_not_always_pairwise() {
        let g = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.3, 0.4), c(0.3, -0.4), c(0.8, 0.0)]);
        let f = CMatrix::from_row_slice(2, 2, &[c(0.1, 0.0), c(0.0, 0.4), c(0.0, 0.4), c(0.0, 0.0)]);
        let m = InteractionModel::new(g, f, vec![1.0, 1.0]).unwrap();
        let sys = LinearizedSystem::new(&m).unwrap();
        let pc = pairwise_commutators(&sys, 0.7).unwrap();
        assert!(pc.gamma_a < 1e-15 && pc.gamma_b < 1e-15);
        // 𝓜² is not symmetric here, so A and B fail to commute
        assert!(pc.a_b > 1e-2);
        assert!(damping_commutes(&m, DEFAULT_TOL));

        // F = 0.3 G: GF symmetric
        let sym = InteractionModel::from_real(&[1.0, 0.2, 0.2, 0.5], &[0.3, 0.06, 0.06, 0.15], vec![0.7, 0.7]).unwrap();
        assert!(pairwise_commutation_check(&sym, 0.7, DEFAULT_TOL).unwrap());
    }

    #[test]
    fn asymmetric_gf_is_complex_and_verified() {
        let g = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.8, 0.0)]);
        let f = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, 1.31), c(0.0, 1.31), c(0.0, 0.0)]);
        let m = InteractionModel::new(g, f, vec![1.0, 1.0]).unwrap();
        let cl = classify(&m, DEFAULT_TOL);
        assert_eq!(cl.verdict, Verdict::ComplexCovariance);
        assert!(cl.gf_asymmetry > DEFAULT_TOL && cl.m2_asymmetry > DEFAULT_TOL);
        let grid = FrequencyGrid::linspace(0.0, 2.0, 21).unwrap();
        let report = verify_propositions(&m, &grid, DEFAULT_TOL).unwrap();
        assert!(report.consistent);
        assert!(report.max_relative_imaginary > 1e-3);
    }

    #[test]
    fn classification_is_scale_invariant() {
        let g = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.2, 0.1), c(0.2, -0.1), c(0.8, 0.0)]);
        let f = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.3), c(0.0, 0.5), c(0.0, 0.5), c(0.1, 0.0)]);
        let a = InteractionModel::new(g.clone(), f.clone(), vec![1.0, 0.5]).unwrap();
        let b = InteractionModel::new(g.scale(7.0), f.scale(7.0), vec![7.0, 3.5]).unwrap();
        let (ca, cb) = (classify(&a, DEFAULT_TOL), classify(&b, DEFAULT_TOL));
        assert_eq!(ca.verdict, cb.verdict);
        assert!((ca.m2_asymmetry - cb.m2_asymmetry).abs() < 1e-12);
        assert!((ca.commutator_gamma_m - cb.commutator_gamma_m).abs() < 1e-12);
    }

    #[test]
    fn verdict_names_serialize() {
        let s = serde_json::to_string(&Verdict::TriviallyRealFZero).unwrap();
        assert_eq!(s, "\"TriviallyReal_FZero\"");
    }
}
