//! Case-study models and parameter sweeps.
//!
//! Every rate is in units of the reference damping `γ` unless a preset
//! parameter overrides `gamma`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criteria::{classify, Classification, Verdict, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::model::InteractionModel;
use crate::spectral::{FrequencyGrid, LinearizedSystem, Normalization};
use crate::{CMatrix, C64};

/// Degenerate OPO: `G = [Δ]`, `F = [ig]`, `Γ = [γ]`.
pub fn single_mode_opo(delta: f64, g: f64, gamma: f64) -> Result<InteractionModel> {
    InteractionModel::new(
        CMatrix::from_element(1, 1, C64::new(delta, 0.0)),
        CMatrix::from_element(1, 1, C64::new(0.0, g)),
        vec![gamma],
    )
}

/// Optical mode coupled to a mechanical oscillator.
pub fn optomech(delta: f64, omega_m: f64, g: f64, gamma: f64, gamma_m: f64) -> Result<InteractionModel> {
    InteractionModel::from_real(&[delta, g, g, omega_m], &[0.0, 2.0 * g, 2.0 * g, 0.0], vec![gamma, gamma_m])
}

/// Two-mode detuned χ³ OPO with equal damping.
pub fn two_mode_chi3(g11: f64, g22: f64, g12: C64, f12: C64, gamma: f64) -> Result<InteractionModel> {
    let zero = C64::new(0.0, 0.0);
    let g = CMatrix::from_row_slice(2, 2, &[C64::new(g11, 0.0), g12, g12.conj(), C64::new(g22, 0.0)]);
    let f = CMatrix::from_row_slice(2, 2, &[zero, f12, f12, zero]);
    InteractionModel::new(g, f, vec![gamma, gamma])
}

/// Dual-pumped three-mode microresonator, modes ordered `(p1, s, p2)`.
///
/// With `parasitic` the full coupling set is kept, including the overall
/// minus signs of both matrices. Without it only the signal pair production
/// survives: `G = (|β₁|² + |β₂|² − Δ) I`, `F = −diag(0, β₁β₂, 0)`.
pub fn dual_pump_three_mode(beta1: C64, beta2: C64, delta: f64, gamma: f64, parasitic: bool) -> Result<InteractionModel> {
    let zero = C64::new(0.0, 0.0);
    let diag = C64::new(beta1.norm_sqr() + beta2.norm_sqr() - delta, 0.0);
    let (g, f) = if parasitic {
        let hop = beta1 * beta2.conj();
        let g = CMatrix::from_row_slice(3, 3, &[diag, hop, zero, hop.conj(), diag, hop, zero, hop.conj(), diag]);
        let (b11, b12, b22) = (beta1 * beta1, beta1 * beta2, beta2 * beta2);
        let f = CMatrix::from_row_slice(3, 3, &[zero, b11, b12 * 2.0, b11, b12, b22, b12 * 2.0, b22, zero]);
        (-g, -f)
    } else {
        let g = CMatrix::identity(3, 3) * diag;
        let mut f = CMatrix::zeros(3, 3);
        f[(1, 1)] = -(beta1 * beta2);
        (g, f)
    };
    InteractionModel::new(g, f, vec![gamma; 3])
}

/// Named scalar parameter of a preset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParamSpec {
    pub name: &'static str,
    pub default: f64,
    pub doc: &'static str,
}

pub type Params = BTreeMap<String, f64>;

/// A named, parameterized case study.
#[derive(Debug, Clone, Copy)]
pub struct Scenario {
    pub name: &'static str,
    pub summary: &'static str,
    pub params: &'static [ParamSpec],
    /// Frequency at which the homodyne LO is optimized.
    pub reference_omega: f64,
    /// Modes whose reduced state is analysed; `None` for the whole system.
    pub focus_modes: Option<&'static [usize]>,
    /// Verdict at the default parameters.
    pub expected: Verdict,
    /// The defaults lie above threshold; spectra are evaluated formally.
    pub above_threshold: bool,
    build: fn(&Params) -> Result<InteractionModel>,
}

const fn p(name: &'static str, default: f64, doc: &'static str) -> ParamSpec {
    ParamSpec { name, default, doc }
}

const SINGLE_MODE: &[ParamSpec] = &[
    p("delta", 1.0, "cavity detuning"),
    p("g", 1.38, "pair-production strength, F = ig"),
    p("gamma", 1.0, "damping rate"),
];

const OPTOMECH: &[ParamSpec] = &[
    p("delta", 1.0, "optical detuning"),
    p("omega_m", 1.0, "mechanical frequency"),
    p("g", 0.01, "optomechanical coupling"),
    p("gamma", 1.0, "optical damping"),
    p("gamma_m", 0.001, "mechanical damping"),
];

const CHI3_SYMMETRIC: &[ParamSpec] = &[
    p("g11", 1.0, "mode 1 detuning"),
    p("g22", 1.0, "mode 2 detuning"),
    p("g12_re", 0.0, "hopping, real part"),
    p("g12_im", 0.0, "hopping, imaginary part"),
    p("f12_re", 0.0, "pair production, real part"),
    p("f12_im", 1.38, "pair production, imaginary part"),
    p("gamma", 1.0, "damping rate of both modes"),
];

const CHI3_ASYMMETRIC: &[ParamSpec] = &[
    p("g11", 1.0, "mode 1 detuning"),
    p("g22", 0.8, "mode 2 detuning"),
    p("g12_re", 0.0, "hopping, real part"),
    p("g12_im", 0.0, "hopping, imaginary part"),
    p("f12_re", 0.0, "pair production, real part"),
    p("f12_im", 1.31, "pair production, imaginary part"),
    p("gamma", 1.0, "damping rate of both modes"),
];

const DUAL_PUMP: &[ParamSpec] = &[
    p("beta_product", 0.46, "|β₁β₂|"),
    p("detuning_offset", 0.15, "|β₁|² + |β₂|² − Δ"),
    p("beta_ratio", 1.0, "|β₁| / |β₂|"),
    p("beta_phase", 0.0, "phase of β₁ (β₂ real)"),
    p("gamma", 1.0, "damping rate of all three modes"),
];

fn get(params: &Params, key: &str) -> f64 {
    params[key]
}

fn build_single_mode(p: &Params) -> Result<InteractionModel> {
    single_mode_opo(get(p, "delta"), get(p, "g"), get(p, "gamma"))
}

fn build_optomech(p: &Params) -> Result<InteractionModel> {
    optomech(get(p, "delta"), get(p, "omega_m"), get(p, "g"), get(p, "gamma"), get(p, "gamma_m"))
}

fn build_chi3(p: &Params) -> Result<InteractionModel> {
    two_mode_chi3(
        get(p, "g11"),
        get(p, "g22"),
        C64::new(get(p, "g12_re"), get(p, "g12_im")),
        C64::new(get(p, "f12_re"), get(p, "f12_im")),
        get(p, "gamma"),
    )
}

/// `β₁ = √(P ρ) e^{iφ}`, `β₂ = √(P / ρ)`, `Δ = |β₁|² + |β₂|² − offset`.
pub fn dual_pump_betas(beta_product: f64, beta_ratio: f64, beta_phase: f64) -> Result<(C64, C64)> {
    if !(beta_product >= 0.0 && beta_ratio > 0.0) {
        return Err(Error::InvalidParameter("beta_product must be ≥ 0 and beta_ratio > 0".into()));
    }
    let b1 = C64::from_polar((beta_product * beta_ratio).sqrt(), beta_phase);
    let b2 = C64::new((beta_product / beta_ratio).sqrt(), 0.0);
    Ok((b1, b2))
}

fn build_dual_pump(p: &Params, parasitic: bool) -> Result<InteractionModel> {
    let (b1, b2) = dual_pump_betas(get(p, "beta_product"), get(p, "beta_ratio"), get(p, "beta_phase"))?;
    let delta = b1.norm_sqr() + b2.norm_sqr() - get(p, "detuning_offset");
    dual_pump_three_mode(b1, b2, delta, get(p, "gamma"), parasitic)
}

const SIGNAL: &[usize] = &[1];

static PRESETS: [Scenario; 6] = [
    Scenario {
        name: "single_mode_opo",
        summary: "single-mode degenerate OPO",
        params: SINGLE_MODE,
        reference_omega: 0.1,
        focus_modes: None,
        expected: Verdict::RealCovariance,
        above_threshold: false,
        build: build_single_mode,
    },
    Scenario {
        name: "optomech",
        summary: "optomechanical cavity with unequal optical and mechanical damping",
        params: OPTOMECH,
        reference_omega: 1.0,
        focus_modes: None,
        expected: Verdict::ComplexCovariance,
        above_threshold: false,
        build: build_optomech,
    },
    Scenario {
        name: "two_mode_chi3_symmetric",
        summary: "two-mode χ³ OPO with equal detunings",
        params: CHI3_SYMMETRIC,
        reference_omega: 0.1,
        focus_modes: None,
        expected: Verdict::RealCovariance,
        above_threshold: false,
        build: build_chi3,
    },
    Scenario {
        name: "two_mode_chi3_asymmetric",
        summary: "two-mode χ³ OPO with unequal detunings",
        params: CHI3_ASYMMETRIC,
        reference_omega: 0.1,
        focus_modes: None,
        expected: Verdict::ComplexCovariance,
        above_threshold: false,
        build: build_chi3,
    },
    Scenario {
        name: "dual_pump",
        summary: "dual-pumped three-mode microresonator with parasitic processes",
        params: DUAL_PUMP,
        reference_omega: 0.5,
        focus_modes: Some(SIGNAL),
        expected: Verdict::ComplexCovariance,
        above_threshold: true,
        build: |p| build_dual_pump(p, true),
    },
    Scenario {
        name: "dual_pump_suppressed",
        summary: "dual-pumped microresonator with parasitic processes suppressed",
        params: DUAL_PUMP,
        reference_omega: 0.5,
        focus_modes: Some(SIGNAL),
        expected: Verdict::RealCovariance,
        above_threshold: false,
        build: |p| build_dual_pump(p, false),
    },
];

pub fn presets() -> &'static [Scenario] {
    &PRESETS
}

pub fn find(name: &str) -> Result<&'static Scenario> {
    PRESETS.iter().find(|s| s.name == name).ok_or_else(|| {
        let known: Vec<&str> = PRESETS.iter().map(|s| s.name).collect();
        Error::InvalidParameter(format!("unknown scenario `{name}` (known: {})", known.join(", ")))
    })
}

/// Parse `key=value`.
pub fn parse_assignment(s: &str) -> Result<(String, f64)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::InvalidParameter(format!("expected key=value, got `{s}`")))?;
    let value: f64 = v
        .trim()
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("`{v}` is not a number")))?;
    if !value.is_finite() {
        return Err(Error::InvalidParameter(format!("`{k}` must be finite")));
    }
    Ok((k.trim().to_string(), value))
}

impl Scenario {
    pub fn defaults(&self) -> Params {
        self.params.iter().map(|p| (p.name.to_string(), p.default)).collect()
    }

    /// Defaults with overrides applied; unknown keys are rejected.
    pub fn resolve(&self, overrides: &[(String, f64)]) -> Result<Params> {
        let mut params = self.defaults();
        for (k, v) in overrides {
            match params.get_mut(k) {
                Some(slot) => *slot = *v,
                None => {
                    let known: Vec<&str> = self.params.iter().map(|p| p.name).collect();
                    return Err(Error::InvalidParameter(format!(
                        "scenario `{}` has no parameter `{k}` (known: {})",
                        self.name,
                        known.join(", ")
                    )));
                }
            }
        }
        Ok(params)
    }

    pub fn build(&self, params: &Params) -> Result<InteractionModel> {
        (self.build)(params)
    }

    pub fn build_default(&self) -> Result<InteractionModel> {
        self.build(&self.defaults())
    }

    /// Linearized system, falling back to formal evaluation for presets
    /// whose defaults lie above threshold.
    pub fn system(&self, model: &InteractionModel) -> Result<LinearizedSystem> {
        match LinearizedSystem::new(model) {
            Err(Error::Unstable { margin }) if self.above_threshold => {
                log::warn!("scenario `{}` is above threshold (margin {margin:e}); evaluating formally", self.name);
                Ok(LinearizedSystem::formal(model))
            }
            other => other,
        }
    }
}

/// One point of a parameter sweep; failures are kept inline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub classification: Option<Classification>,
    pub margin: Option<f64>,
    /// `max_ω ‖σ_I‖_F / ‖σ‖_F` over the sweep grid.
    pub max_relative_imaginary: Option<f64>,
    pub error: Option<String>,
}

/// Frequencies used when a sweep is not given its own grid.
pub fn default_sweep_grid() -> FrequencyGrid {
    FrequencyGrid::linspace(-3.0, 3.0, 61).expect("static grid")
}

/// Vary one parameter of a preset, holding the others at `base`.
pub fn sweep(scenario: &Scenario, base: &Params, param: &str, values: &[f64], grid: &FrequencyGrid) -> Result<Vec<SweepPoint>> {
    if !base.contains_key(param) {
        return Err(Error::InvalidParameter(format!("scenario `{}` has no parameter `{param}`", scenario.name)));
    }
    Ok(values
        .par_iter()
        .map(|&value| {
            let mut params = base.clone();
            params.insert(param.to_string(), value);
            sweep_point(scenario, &params, value, grid)
        })
        .collect())
}

fn sweep_point(scenario: &Scenario, params: &Params, value: f64, grid: &FrequencyGrid) -> SweepPoint {
    let mut point = SweepPoint {
        value,
        classification: None,
        margin: None,
        max_relative_imaginary: None,
        error: None,
    };
    let model = match scenario.build(params) {
        Ok(m) => m,
        Err(e) => {
            point.error = Some(e.to_string());
            return point;
        }
    };
    point.classification = Some(classify(&model, DEFAULT_TOL));
    let outcome = scenario.system(&model).and_then(|sys| {
        point.margin = Some(sys.stability().margin);
        sys.covariance_on_grid(grid, Normalization::ShotNoiseUnity)
    });
    match outcome {
        Ok(samples) => {
            point.max_relative_imaginary = Some(samples.iter().map(|s| s.relative_imaginary()).fold(0.0, f64::max));
        }
        Err(e) => point.error = Some(e.to_string()),
    }
    point
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::classify;

    fn verdict(m: &InteractionModel) -> Verdict {
        classify(m, DEFAULT_TOL).verdict
    }

    #[test]
    fn preset_verdicts() {
        for s in presets() {
            let m = s.build_default().unwrap();
            assert_eq!(verdict(&m), s.expected, "{}", s.name);
        }
    }

    #[test]
    fn single_mode_builder() {
        let m = single_mode_opo(1.0, 1.38, 1.0).unwrap();
        assert_eq!(m.n_modes(), 1);
        assert_eq!(m.f()[(0, 0)], C64::new(0.0, 1.38));
        assert_eq!(verdict(&single_mode_opo(1.0, 0.0, 1.0).unwrap()), Verdict::TriviallyRealFZero);
    }

    #[test]
    fn optomech_equal_damping_is_real() {
        let m = optomech(1.0, 1.0, 0.01, 1.0, 1.0).unwrap();
        assert_eq!(verdict(&m), Verdict::RealCovariance);
        let gf = m.g() * m.f();
        let fg = m.f() * m.g();
        assert!((gf - fg).norm() < 1e-15);
    }

    #[test]
    fn chi3_without_pair_production_is_trivial() {
        let m = two_mode_chi3(1.0, 0.8, C64::new(0.0, 0.0), C64::new(0.0, 0.0), 1.0).unwrap();
        assert_eq!(verdict(&m), Verdict::TriviallyRealFZero);
    }

    #[test]
    fn dual_pump_structure() {
        let s = find("dual_pump").unwrap();
        let m = s.build_default().unwrap();
        let b = 0.46f64.sqrt();
        // G diagonal is −(|β₁|² + |β₂|² − Δ) = −0.15, F(1,1) = −β₁β₂
        assert!((m.g()[(0, 0)].re + 0.15).abs() < 1e-15);
        assert!((m.g()[(0, 1)].re + b * b).abs() < 1e-15);
        assert!((m.f()[(1, 1)].re + 0.46).abs() < 1e-15);
        assert!((m.f()[(0, 2)].re + 2.0 * 0.46).abs() < 1e-15);
        assert!(!crate::spectral::stability(&m).stable);
        let zero = dual_pump_three_mode(C64::new(0.0, 0.0), C64::new(0.0, 0.0), 0.3, 1.0, true).unwrap();
        assert_eq!(verdict(&zero), Verdict::TriviallyRealFZero);
    }

    #[test]
    fn overrides_and_unknown_keys() {
        let s = find("single_mode_opo").unwrap();
        let p = s.resolve(&[("g".into(), 0.5)]).unwrap();
        assert_eq!(p["g"], 0.5);
        assert!(s.resolve(&[("nope".into(), 1.0)]).is_err());
        assert!(find("missing").is_err());
        assert_eq!(parse_assignment("g = 0.25").unwrap(), ("g".to_string(), 0.25));
        assert!(parse_assignment("g").is_err());
    }

    #[test]
    fn chi3_sweep_flips_at_equal_detuning() {
        let s = find("two_mode_chi3_asymmetric").unwrap();
        let values = [0.8, 0.9, 0.95, 0.99, 1.0];
        let pts = sweep(s, &s.defaults(), "g22", &values, &default_sweep_grid()).unwrap();
        let verdicts: Vec<Verdict> = pts.iter().map(|p| p.classification.unwrap().verdict).collect();
        assert!(verdicts[..4].iter().all(|v| *v == Verdict::ComplexCovariance));
        assert_eq!(verdicts[4], Verdict::RealCovariance);
        assert!(pts[4].max_relative_imaginary.unwrap() < 1e-12);
        assert!(pts.iter().zip(values).all(|(p, v)| p.value == v));
    }

    #[test]
    fn optomech_sweep_over_mechanical_damping() {
        let s = find("optomech").unwrap();
        let pts = sweep(s, &s.defaults(), "gamma_m", &[0.001, 1.0], &default_sweep_grid()).unwrap();
        assert_eq!(pts[0].classification.unwrap().verdict, Verdict::ComplexCovariance);
        assert_eq!(pts[1].classification.unwrap().verdict, Verdict::RealCovariance);
        assert!(sweep(s, &s.defaults(), "gamma_m", &[], &default_sweep_grid()).unwrap().is_empty());
    }

    #[test]
    fn sweep_records_failures_inline() {
        let s = find("single_mode_opo").unwrap();
        let pts = sweep(s, &s.defaults(), "gamma", &[1.0, -1.0, 0.5], &default_sweep_grid()).unwrap();
        assert!(pts[0].error.is_none());
        assert!(pts[1].error.is_some());
        // g = 1.38 with γ = 0.5 is above threshold
        assert!(pts[2].error.as_deref().unwrap().contains("not stable"));
        assert!(sweep(s, &s.defaults(), "bogus", &[1.0], &default_sweep_grid()).is_err());
    }
}
