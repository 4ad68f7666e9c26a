//! Physical system description and drift matrices.
//!
//! A model holds the Hermitian mode-hopping matrix `G`, the symmetric
//! pair-production matrix `F` and the per-mode damping rates. The quadrature
//! drift is
//!
//! ```text
//! 𝓜 = [[ Im(G+F),  Re(G−F)   ],
//!      [ −Re(G+F), −Im(G+F)ᵀ ]]
//! ```
//!
//! and its complex-amplitude twin is `M = i L† 𝓜 L = [[G, F], [−F*, −G*]]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, blocks, complexify, real_part};
use crate::{CMatrix, RMatrix, C64};

/// Default relative tolerance for the Hermitian/symmetric structure checks.
pub const DEFAULT_VALIDATION_TOL: f64 = 1e-10;

/// Declared reference rate. All stored rates are multiples of `scale` in `label` units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateUnit {
    pub label: String,
    pub scale: f64,
}

impl Default for RateUnit {
    fn default() -> Self {
        Self {
            label: "gamma_ref".into(),
            scale: 1.0,
        }
    }
}

/// Size of the symmetrization applied during validation (Frobenius norms).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Correction {
    pub g: f64,
    pub f: f64,
}

/// Candidate model before structural validation.
#[derive(Debug, Clone)]
pub struct RawModel {
    pub n_modes: usize,
    pub g: CMatrix,
    pub f: CMatrix,
    pub gamma: Vec<f64>,
    pub rate_unit: RateUnit,
}

/// A validated cavity model. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionModel {
    n_modes: usize,
    g: CMatrix,
    f: CMatrix,
    gamma: Vec<f64>,
    rate_unit: RateUnit,
    correction: Correction,
}

impl InteractionModel {
    /// Validate with the default tolerance.
    pub fn new(g: CMatrix, f: CMatrix, gamma: Vec<f64>) -> Result<Self> {
        let raw = RawModel {
            n_modes: gamma.len(),
            g,
            f,
            gamma,
            rate_unit: RateUnit::default(),
        };
        validate_model(raw, DEFAULT_VALIDATION_TOL)
    }

    /// Convenience constructor from real `G`, `F` entries given row-major.
    pub fn from_real(g: &[f64], f: &[f64], gamma: Vec<f64>) -> Result<Self> {
        let n = gamma.len();
        if g.len() != n * n || f.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for {n} modes, got G: {}, F: {}",
                n * n,
                g.len(),
                f.len()
            )));
        }
        let to_c = |v: &[f64]| CMatrix::from_row_iterator(n, n, v.iter().map(|&x| C64::new(x, 0.0)));
        Self::new(to_c(g), to_c(f), gamma)
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn g(&self) -> &CMatrix {
        &self.g
    }

    pub fn f(&self) -> &CMatrix {
        &self.f
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn rate_unit(&self) -> &RateUnit {
        &self.rate_unit
    }

    pub fn correction(&self) -> Correction {
        self.correction
    }

    pub fn with_rate_unit(mut self, unit: RateUnit) -> Self {
        self.rate_unit = unit;
        self
    }

    /// Same system with `F → s·F`.
    pub fn with_pump_scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.f = self.f.scale(s);
        out
    }

    /// Diagonal of the 2N×2N damping matrix Γ.
    pub fn damping_diagonal(&self) -> Vec<f64> {
        self.gamma.iter().chain(self.gamma.iter()).copied().collect()
    }

    /// 2N×2N damping matrix Γ = diag(γ | γ).
    pub fn damping_matrix(&self) -> RMatrix {
        RMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.damping_diagonal()))
    }

    pub fn is_pump_free(&self) -> bool {
        self.f.iter().all(|z| *z == C64::new(0.0, 0.0))
    }
}

/// Check dimensions, Hermiticity of `G`, symmetry of `F` and positivity of the
/// damping rates. Deviations below `tol` (relative Frobenius) are removed by
/// symmetrization and the applied correction is recorded on the model.
pub fn validate_model(raw: RawModel, tol: f64) -> Result<InteractionModel> {
    let n = raw.n_modes;
    if n == 0 {
        return Err(Error::DimensionMismatch("model needs at least one mode".into()));
    }
    for (name, m) in [("G", &raw.g), ("F", &raw.f)] {
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "{name} is {}x{}, expected {n}x{n}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter(format!("{name} has non-finite entries")));
        }
    }
    if raw.gamma.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "gamma has {} entries, expected {n}",
            raw.gamma.len()
        )));
    }
    if let Some((mode, &value)) = raw
        .gamma
        .iter()
        .enumerate()
        .find(|(_, g)| !(**g > 0.0) || !g.is_finite())
    {
        return Err(Error::NonPositiveDamping { mode, value });
    }

    let g_dev = raw.g.clone() - raw.g.adjoint();
    let g_rel = linalg::ratio(g_dev.norm(), raw.g.norm());
    if g_rel > tol {
        return Err(Error::StructureViolation {
            matrix: "G (Hermitian)",
            deviation: g_rel,
            tol,
        });
    }
    let f_dev = raw.f.clone() - raw.f.transpose();
    let f_rel = linalg::ratio(f_dev.norm(), raw.f.norm());
    if f_rel > tol {
        return Err(Error::StructureViolation {
            matrix: "F (symmetric)",
            deviation: f_rel,
            tol,
        });
    }

    let g = (raw.g.clone() + raw.g.adjoint()).scale(0.5);
    let f = (raw.f.clone() + raw.f.transpose()).scale(0.5);
    let correction = Correction {
        g: (&g - &raw.g).norm(),
        f: (&f - &raw.f).norm(),
    };
    Ok(InteractionModel {
        n_modes: n,
        g,
        f,
        gamma: raw.gamma,
        rate_unit: raw.rate_unit,
        correction,
    })
}

/// The fixed quadrature ordering `(x_1..x_N | y_1..y_N)` and its symplectic form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureBasis {
    pub n_modes: usize,
}

impl QuadratureBasis {
    pub fn new(n_modes: usize) -> Self {
        Self { n_modes }
    }

    /// Ω = [[0, I], [−I, 0]].
    pub fn symplectic_form(&self) -> RMatrix {
        linalg::symplectic_form(self.n_modes)
    }

    /// Unitary change of basis `L` from `(a | a†)` to `(x | y)`.
    pub fn amplitude_to_quadrature(&self) -> CMatrix {
        basis_change(self.n_modes)
    }
}

/// `L = (1/√2) [[I, I], [−iI, iI]]`.
pub fn basis_change(n: usize) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut l = CMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        l[(k, k)] = C64::new(s, 0.0);
        l[(k, n + k)] = C64::new(s, 0.0);
        l[(n + k, k)] = C64::new(0.0, -s);
        l[(n + k, n + k)] = C64::new(0.0, s);
    }
    l
}

/// Drift in both representations.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftMatrix {
    /// Real 2N×2N drift in quadrature ordering.
    pub m_quad: RMatrix,
    /// Complex 2N×2N drift in amplitude ordering `(a | a†)`.
    pub m_complex: CMatrix,
}

impl DriftMatrix {
    pub fn n_modes(&self) -> usize {
        self.m_quad.nrows() / 2
    }

    /// Relative deviation of `Ω𝓜` from symmetry.
    pub fn hamiltonian_residual(&self) -> f64 {
        let om = linalg::symplectic_form(self.n_modes()) * &self.m_quad;
        linalg::rel_diff(&om, &om.transpose())
    }
}

pub fn build_drift(model: &InteractionModel) -> DriftMatrix {
    DriftMatrix {
        m_quad: quadrature_drift(model),
        m_complex: build_complex_drift(model),
    }
}

/// Block assembly of 𝓜 from `G` and `F`.
pub fn quadrature_drift(model: &InteractionModel) -> RMatrix {
    let sum = model.g() + model.f();
    let diff = model.g() - model.f();
    let im_sum = linalg::imag_part(&sum);
    let re_sum = real_part(&sum);
    let re_diff = real_part(&diff);
    blocks(&im_sum, &re_diff, &(-&re_sum), &(-im_sum.transpose()))
}

/// `M = [[G, F], [−F*, −G*]]`.
pub fn build_complex_drift(model: &InteractionModel) -> CMatrix {
    let g = model.g();
    let f = model.f();
    blocks(g, f, &(-f.conjugate()), &(-g.conjugate()))
}

/// `i L† 𝓜 L`: complex-amplitude drift computed from the quadrature drift.
pub fn complex_from_quadrature(m_quad: &RMatrix) -> CMatrix {
    let n = m_quad.nrows() / 2;
    let l = basis_change(n);
    (l.adjoint() * complexify(m_quad) * l) * C64::new(0.0, 1.0)
}

/// `−i L M L†`: inverse of [`complex_from_quadrature`]. Returns the full
/// complex result; its imaginary part vanishes for a valid drift.
pub fn quadrature_from_complex(m_complex: &CMatrix) -> CMatrix {
    let n = m_complex.nrows() / 2;
    let l = basis_change(n);
    (&l * m_complex * l.adjoint()) * C64::new(0.0, -1.0)
}

/// Blocks of `M²` written in terms of `G` and `F`.
#[derive(Debug, Clone, PartialEq)]
pub struct MSquaredBlocks {
    /// `G² − F F*`
    pub top_left: CMatrix,
    /// `G F − F G*`
    pub top_right: CMatrix,
    /// `−(G F − F G*)†`
    pub bottom_left: CMatrix,
    /// `(G² − F F*)ᵀ`
    pub bottom_right: CMatrix,
}

impl MSquaredBlocks {
    pub fn assemble(&self) -> CMatrix {
        blocks(&self.top_left, &self.top_right, &self.bottom_left, &self.bottom_right)
    }
}

pub fn m_squared_blocks(model: &InteractionModel) -> MSquaredBlocks {
    let g = model.g();
    let f = model.f();
    let tl = g * g - f * f.conjugate();
    let tr = g * f - f * g.conjugate();
    MSquaredBlocks {
        bottom_left: -tr.adjoint(),
        bottom_right: tl.transpose(),
        top_left: tl,
        top_right: tr,
    }
}

/// On-disk model document. Complex entries are `{"re": .., "im": ..}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub n_modes: usize,
    #[serde(rename = "G")]
    pub g: Vec<Vec<ComplexEntry>>,
    #[serde(rename = "F")]
    pub f: Vec<Vec<ComplexEntry>>,
    pub gamma: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_unit: Option<RateUnit>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexEntry {
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

impl From<C64> for ComplexEntry {
    fn from(z: C64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

fn rows_to_matrix(name: &str, rows: &[Vec<ComplexEntry>], n: usize) -> Result<CMatrix> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch(format!(
            "{name} must be {n}x{n} (n_modes = {n})"
        )));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| C64::new(rows[i][j].re, rows[i][j].im)))
}

fn matrix_to_rows(m: &CMatrix) -> Vec<Vec<ComplexEntry>> {
    m.row_iter()
        .map(|r| r.iter().map(|&z| z.into()).collect())
        .collect()
}

impl ModelFile {
    pub fn into_raw(self) -> Result<RawModel> {
        let n = self.n_modes;
        Ok(RawModel {
            n_modes: n,
            g: rows_to_matrix("G", &self.g, n)?,
            f: rows_to_matrix("F", &self.f, n)?,
            gamma: self.gamma,
            rate_unit: self.rate_unit.unwrap_or_default(),
        })
    }

    pub fn into_model(self, tol: f64) -> Result<InteractionModel> {
        validate_model(self.into_raw()?, tol)
    }
}

impl From<&InteractionModel> for ModelFile {
    fn from(m: &InteractionModel) -> Self {
        Self {
            n_modes: m.n_modes,
            g: matrix_to_rows(&m.g),
            f: matrix_to_rows(&m.f),
            gamma: m.gamma.clone(),
            rate_unit: Some(m.rate_unit.clone()),
        }
    }
}

impl InteractionModel {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(s)?;
        file.into_model(DEFAULT_VALIDATION_TOL)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&ModelFile::from(self)).expect("model serializes")
    }
}

/// JSON Schema of the model file format.
pub const MODEL_SCHEMA: &str = r##"{
  "$schema": "https://json-schema.org/draft/2020-12/schema",
  "title": "cavity-squeeze interaction model",
  "type": "object",
  "required": ["n_modes", "G", "F", "gamma"],
  "properties": {
    "n_modes": { "type": "integer", "minimum": 1 },
    "G": { "$ref": "#/$defs/complexMatrix", "description": "Hermitian mode-hopping matrix, N x N, rows first" },
    "F": { "$ref": "#/$defs/complexMatrix", "description": "symmetric pair-production matrix, N x N, rows first" },
    "gamma": { "type": "array", "items": { "type": "number", "exclusiveMinimum": 0 }, "description": "per-mode damping rates" },
    "rate_unit": {
      "type": "object",
      "required": ["label", "scale"],
      "properties": { "label": { "type": "string" }, "scale": { "type": "number" } }
    }
  },
  "$defs": {
    "complex": {
      "type": "object",
      "required": ["re"],
      "properties": { "re": { "type": "number" }, "im": { "type": "number" } }
    },
    "complexMatrix": { "type": "array", "items": { "type": "array", "items": { "$ref": "#/$defs/complex" } } }
  }
}"##;

#[cfg(test)]
mod tests {
    use super::*;

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
    fn single_mode_opo_is_valid() {
        let m = single_mode(1.0, 1.38);
        assert_eq!(m.n_modes(), 1);
        assert_eq!(m.correction(), Correction::default());
    }

    #[test]
    fn non_hermitian_g_is_rejected() {
        let g = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let err = InteractionModel::new(g, CMatrix::zeros(2, 2), vec![1.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::StructureViolation { .. }), "{err}");
    }

    #[test]
    fn round_off_is_symmetrized_and_recorded() {
        let mut g = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.5, 0.2), c(0.5, -0.2), c(-0.3, 0.0)]);
        g[(0, 1)] += c(1e-14, 0.0);
        let m = InteractionModel::new(g, CMatrix::zeros(2, 2), vec![1.0, 2.0]).unwrap();
        assert!(m.correction().g > 0.0 && m.correction().g < 1e-13);
        assert_eq!(m.g(), &m.g().adjoint());
    }

    #[test]
    fn non_positive_damping_is_rejected() {
        let err = InteractionModel::from_real(&[0.0], &[0.0], vec![0.0]).unwrap_err();
        assert!(matches!(err, Error::NonPositiveDamping { mode: 0, .. }));
        let err = InteractionModel::from_real(&[0.0; 4], &[0.0; 4], vec![1.0, -1.0]).unwrap_err();
        assert!(matches!(err, Error::NonPositiveDamping { mode: 1, .. }));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let raw = RawModel {
            n_modes: 2,
            g: CMatrix::zeros(2, 2),
            f: CMatrix::zeros(3, 3),
            gamma: vec![1.0, 1.0],
            rate_unit: RateUnit::default(),
        };
        assert!(matches!(validate_model(raw, 1e-10), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn single_mode_drift_blocks() {
        let d = build_drift(&single_mode(1.0, 1.38));
        let expected = RMatrix::from_row_slice(2, 2, &[1.38, 1.0, -1.0, -1.38]);
        assert_eq!(d.m_quad, expected);
        let expected_c = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 1.38), c(0.0, 1.38), c(-1.0, 0.0)]);
        assert_eq!(d.m_complex, expected_c);
    }

    #[test]
    fn pump_free_real_g_gives_rotation_drift() {
        let m = InteractionModel::from_real(&[1.0, 0.3, 0.3, -0.5], &[0.0; 4], vec![1.0, 1.0]).unwrap();
        let g = RMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, -0.5]);
        let z = RMatrix::zeros(2, 2);
        assert_eq!(quadrature_drift(&m), blocks(&z, &g, &(-&g), &z));
    }

    #[test]
    fn zero_model_has_zero_complex_drift() {
        let m = InteractionModel::from_real(&[0.0; 4], &[0.0; 4], vec![1.0, 1.0]).unwrap();
        assert_eq!(build_complex_drift(&m), CMatrix::zeros(4, 4));
    }

    #[test]
    fn scalar_m_squared_blocks() {
        let m = single_mode(1.0, 1.38);
        let b = m_squared_blocks(&m);
        assert!((b.top_left[(0, 0)] - c(1.0 - 1.38 * 1.38, 0.0)).norm() < 1e-15);
        assert_eq!(b.top_right[(0, 0)], c(0.0, 0.0));
        assert_eq!(b.bottom_left[(0, 0)], c(0.0, 0.0));
    }

    #[test]
    fn model_json_roundtrip() {
        let m = single_mode(1.0, 1.38);
        let back = InteractionModel::from_json_str(&m.to_json_string()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn model_json_schema_parses() {
        let v: serde_json::Value = serde_json::from_str(MODEL_SCHEMA).unwrap();
        assert_eq!(v["required"][0], "n_modes");
    }

    #[test]
    fn model_json_without_imaginary_parts() {
        let s = r#"{"n_modes": 1, "G": [[{"re": 1.0}]], "F": [[{"re": 0.0, "im": 0.5}]], "gamma": [1.0]}"#;
        let m = InteractionModel::from_json_str(s).unwrap();
        assert_eq!(m.f()[(0, 0)], c(0.0, 0.5));
    }
}
