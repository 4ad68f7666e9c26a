use std::fs;

use anyhow::{anyhow, bail, Context, Result};
use cavity_squeeze::criteria::{classify, verify_with};
use cavity_squeeze::linalg;
use cavity_squeeze::model::MODEL_SCHEMA;
use cavity_squeeze::sampling::ensemble;
use cavity_squeeze::scenarios::{self, parse_assignment, Params, Scenario};
use cavity_squeeze::spectral::{stability, symplectic_residual, threshold_scale, DEFAULT_S_MAX};
use cavity_squeeze::squeezing::{
    bloch_messiah_pointwise, hd_best, hd_point, hidden_report_of, to_db, HdBest, HdPoint, SQUEEZED_DB,
};
use cavity_squeeze::{
    CMatrix, CovarianceSample, Error, FrequencyGrid, InteractionModel, LinearizedSystem, LoConfig, LoPhase,
    Normalization, SqueezingSpectrum,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::*;
use crate::output::{json as to_json, num, opt_num, Csv};

/// Rendered data plus the metadata echoed into the manifest.
pub struct Outcome {
    pub data: String,
    pub exit_code: u8,
    pub metadata: Value,
}

const SPECTRUM_GRID: (f64, f64, usize) = (0.0, 3.0, 301);
const SWEEP_GRID: (f64, f64, usize) = (-3.0, 3.0, 61);

pub fn execute(command: &Command) -> Result<Outcome> {
    match command {
        Command::Classify(a) => classify_cmd(a),
        Command::Spectrum(a) => spectrum_cmd(a),
        Command::Hd(a) => hd_cmd(a),
        Command::Scan(a) => scan_cmd(a),
        Command::Scenario(ScenarioCommand::List(a)) => list_cmd(a),
        Command::Scenario(ScenarioCommand::Run(a)) => run_cmd(a),
        Command::Scenario(ScenarioCommand::Export(a)) => export_cmd(a),
        Command::Selftest(a) => selftest_cmd(a),
        Command::Schema(a) => schema_cmd(a),
        Command::Replay(_) => bail!("a manifest cannot record a replay"),
    }
}

struct Source {
    model: InteractionModel,
    scenario: Option<&'static Scenario>,
    params: Option<Params>,
}

fn overrides(set: &[String]) -> Result<Vec<(String, f64)>> {
    Ok(set.iter().map(|s| parse_assignment(s)).collect::<cavity_squeeze::Result<_>>()?)
}

fn from_scenario(name: &str, set: &[String]) -> Result<Source> {
    let scenario = scenarios::find(name)?;
    let params = scenario.resolve(&overrides(set)?)?;
    Ok(Source {
        model: scenario.build(&params)?,
        scenario: Some(scenario),
        params: Some(params),
    })
}

fn load(src: &ModelSource) -> Result<Source> {
    match (&src.scenario, &src.model_file) {
        (Some(name), _) => from_scenario(name, &src.set),
        (None, Some(path)) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let model = InteractionModel::from_json_str(&text).with_context(|| format!("loading {}", path.display()))?;
            Ok(Source {
                model,
                scenario: None,
                params: None,
            })
        }
        (None, None) => bail!("one of --scenario or --model-file is required"),
    }
}

impl Source {
    fn system(&self) -> Result<LinearizedSystem> {
        Ok(match self.scenario {
            Some(s) => s.system(&self.model)?,
            None => LinearizedSystem::new(&self.model)?,
        })
    }

    fn describe(&self) -> Value {
        json!({
            "scenario": self.scenario.map(|s| s.name),
            "params": self.params,
            "n_modes": self.model.n_modes(),
        })
    }

    /// Explicit selection, else the scenario focus modes.
    fn modes(&self, explicit: &[usize]) -> Option<Vec<usize>> {
        if !explicit.is_empty() {
            return Some(explicit.to_vec());
        }
        self.scenario.and_then(|s| s.focus_modes).map(<[usize]>::to_vec)
    }
}

fn grid(g: &GridArgs, default: (f64, f64, usize)) -> Result<FrequencyGrid> {
    if !g.omega_list.is_empty() {
        return Ok(FrequencyGrid::new(g.omega_list.clone(), false)?);
    }
    Ok(FrequencyGrid::linspace(
        g.omega_min.unwrap_or(default.0),
        g.omega_max.unwrap_or(default.1),
        g.omega_count.unwrap_or(default.2),
    )?)
}

fn describe_grid(g: &FrequencyGrid) -> Value {
    let p = g.points();
    json!({"count": p.len(), "min": p[0], "max": p[p.len() - 1]})
}

fn lo_config(weights: &[f64], phase: LoPhase, n_modes: usize) -> Result<LoConfig> {
    if weights.is_empty() {
        return Ok(LoConfig::single_mode(n_modes, 0, phase)?);
    }
    if weights.len() != n_modes {
        bail!("--lo-mode-weights has {} entries, the analysed state has {n_modes} modes", weights.len());
    }
    Ok(LoConfig::normalized(weights.to_vec(), phase)?)
}

fn reduce(sample: CovarianceSample, modes: Option<&[usize]>) -> Result<CovarianceSample> {
    Ok(match modes {
        Some(m) => sample.reduced(m)?,
        None => sample,
    })
}

fn classify_cmd(a: &ClassifyArgs) -> Result<Outcome> {
    let src = load(&a.source)?;
    let c = classify(&src.model, a.tol);
    let mut report = json!({
        "verdict": c.verdict,
        "real": c.is_real(),
        "diagnostics": {
            "commutator_gamma_m": c.commutator_gamma_m,
            "m2_asymmetry": c.m2_asymmetry,
            "gf_asymmetry": c.gf_asymmetry,
            "m_offdiagonal": c.m_offdiagonal,
        },
        "tol": c.tol,
        "stability": stability(&src.model),
        "model": src.describe(),
    });
    if a.verify {
        let g = grid(&a.grid, SWEEP_GRID)?;
        let v = verify_with(&src.system()?, &g, a.tol)?;
        report["verification"] = json!({
            "max_relative_imaginary": v.max_relative_imaginary,
            "argmax_omega": v.argmax_omega,
            "consistent": v.consistent,
            "grid": describe_grid(&g.mirrored()),
        });
    }
    Ok(Outcome {
        data: to_json(&report),
        exit_code: if c.is_real() { 0 } else { 2 },
        metadata: json!({"model": src.describe(), "verdict": c.verdict}),
    })
}

fn spectrum_cmd(a: &SpectrumArgs) -> Result<Outcome> {
    let src = load(&a.source)?;
    let sys = src.system()?;
    let g = grid(&a.grid, SPECTRUM_GRID)?;
    let mut metadata = json!({
        "model": src.describe(),
        "verdict": classify(&src.model, cavity_squeeze::criteria::DEFAULT_TOL).verdict,
        "formal": !sys.stability().stable,
        "normalization": a.normalization,
        "grid": describe_grid(&g),
    });
    if let Some(kind) = a.matrix {
        metadata["matrix"] = json!(kind);
        return matrix_dump(&sys, &g, kind, a.normalization, a.output.output, metadata);
    }
    let modes = src.modes(&a.modes);
    let kept = modes.as_ref().map_or(src.model.n_modes(), Vec::len);
    let lo = lo_config(&a.lo_mode_weights, a.lo_phase, kept)?;
    let spec = SqueezingSpectrum::compute_reduced(&sys, &g, modes.as_deref(), &lo, a.normalization)?;
    metadata["modes"] = json!(modes);
    metadata["lo"] = json!(lo);
    Ok(Outcome {
        data: render_spectrum(&spec, a.output.output, &metadata),
        exit_code: 0,
        metadata,
    })
}

#[derive(Serialize)]
struct SpectrumRow {
    omega: f64,
    optimal_db: f64,
    hd_db: f64,
    hidden_fraction: Option<f64>,
    lo_phase: f64,
}

fn render_spectrum(spec: &SqueezingSpectrum, format: Format, metadata: &Value) -> String {
    let rows = spec.grid.points().iter().enumerate().map(|(k, &w)| SpectrumRow {
        omega: w,
        optimal_db: spec.optimal_db[k],
        hd_db: spec.hd_db[k],
        hidden_fraction: spec.hidden_fraction[k],
        lo_phase: spec.lo_phase[k],
    });
    match format {
        Format::Csv => {
            let mut csv = Csv::new(&["omega", "optimal_db", "hd_db", "hidden_fraction", "lo_phase"]);
            for r in rows {
                csv.row([num(r.omega), num(r.optimal_db), num(r.hd_db), opt_num(r.hidden_fraction), num(r.lo_phase)]);
            }
            csv.finish()
        }
        Format::Json => to_json(&json!({"metadata": metadata, "rows": rows.collect::<Vec<_>>()})),
    }
}

fn matrix_dump(
    sys: &LinearizedSystem,
    g: &FrequencyGrid,
    kind: MatrixKind,
    normalization: Normalization,
    format: Format,
    metadata: Value,
) -> Result<Outcome> {
    let mats: Vec<CMatrix> = g
        .points()
        .par_iter()
        .map(|&w| match kind {
            MatrixKind::Sigma => sys.spectral_covariance(w, normalization).map(|c| c.sigma),
            MatrixKind::Transfer => sys.transfer(w).map(|t| t.s),
        })
        .collect::<cavity_squeeze::Result<_>>()?;
    let name = match kind {
        MatrixKind::Sigma => "sigma",
        MatrixKind::Transfer => "s",
    };
    let dim = sys.dim();
    let data = match format {
        Format::Csv => {
            let mut header = vec!["omega".to_string()];
            for i in 0..dim {
                for j in 0..dim {
                    header.push(format!("{name}_{i}_{j}_re"));
                    header.push(format!("{name}_{i}_{j}_im"));
                }
            }
            let mut csv = Csv::new(&header);
            for (&w, m) in g.points().iter().zip(&mats) {
                let mut row = vec![num(w)];
                for i in 0..dim {
                    for j in 0..dim {
                        row.push(num(m[(i, j)].re));
                        row.push(num(m[(i, j)].im));
                    }
                }
                csv.row(row);
            }
            csv.finish()
        }
        Format::Json => {
            let points: Vec<Value> = g
                .points()
                .iter()
                .zip(&mats)
                .map(|(&w, m)| {
                    let part = |f: fn(&cavity_squeeze::C64) -> f64| -> Vec<Vec<f64>> {
                        (0..dim).map(|i| (0..dim).map(|j| f(&m[(i, j)])).collect()).collect()
                    };
                    json!({"omega": w, "re": part(|z| z.re), "im": part(|z| z.im)})
                })
                .collect();
            to_json(&json!({"metadata": metadata, "dim": dim, "points": points}))
        }
    };
    Ok(Outcome {
        data,
        exit_code: 0,
        metadata,
    })
}

#[derive(Serialize)]
struct HdReport {
    omega: f64,
    modes: Option<Vec<usize>>,
    normalization: Normalization,
    optimal_db: f64,
    hd_db: f64,
    fraction: Option<f64>,
    hidden_share: Option<f64>,
    variance_fraction: Option<f64>,
    best: HdBest,
    given: Option<HdPoint>,
}

fn hd_cmd(a: &HdArgs) -> Result<Outcome> {
    let src = load(&a.source)?;
    let sys = src.system()?;
    let omega = a
        .omega
        .or(src.scenario.map(|s| s.reference_omega))
        .ok_or_else(|| anyhow!("--omega is required with --model-file"))?;
    let modes = src.modes(&a.modes);
    let sample = reduce(sys.spectral_covariance(omega, a.normalization)?, modes.as_deref())?;
    let v_opt = sample.min_eigenvalue();
    let optimal_db = to_db(v_opt);
    let best = hd_best(&sample, a.restarts, a.seed);
    let squeezed = optimal_db < SQUEEZED_DB;
    let fraction = squeezed.then(|| best.value_db / optimal_db);
    let given = if a.lo_mode_weights.is_empty() {
        None
    } else {
        Some(hd_point(&sample, &lo_config(&a.lo_mode_weights, a.lo_phase, sample.n_modes())?)?)
    };
    let report = HdReport {
        omega,
        modes: modes.clone(),
        normalization: a.normalization,
        optimal_db,
        hd_db: best.value_db,
        fraction,
        hidden_share: fraction.map(|f| 1.0 - f),
        variance_fraction: squeezed.then(|| (1.0 - best.value) / (1.0 - v_opt)),
        best,
        given,
    };
    let metadata = json!({"model": src.describe(), "omega": omega, "modes": modes, "restarts": a.restarts, "seed": a.seed});
    let data = match a.output.output {
        Format::Json => to_json(&json!({"metadata": metadata, "report": report})),
        Format::Csv => {
            let k = report.best.mode_weights.len();
            let mut header: Vec<String> = [
                "omega",
                "optimal_db",
                "hd_db",
                "theta",
                "lower_bound_db",
                "fraction",
                "hidden_share",
                "variance_fraction",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect();
            header.extend((0..k).map(|i| format!("w_{i}")));
            if report.given.is_some() {
                header.extend(["given_theta".to_string(), "given_hd_db".to_string()]);
            }
            let mut row = vec![
                num(report.omega),
                num(report.optimal_db),
                num(report.hd_db),
                num(report.best.theta),
                num(report.best.lower_bound_db),
                opt_num(report.fraction),
                opt_num(report.hidden_share),
                opt_num(report.variance_fraction),
            ];
            row.extend(report.best.mode_weights.iter().map(|&w| num(w)));
            if let Some(g) = &report.given {
                row.extend([num(g.theta), num(g.db)]);
            }
            let mut csv = Csv::new(&header);
            csv.row(row);
            csv.finish()
        }
    };
    Ok(Outcome {
        data,
        exit_code: 0,
        metadata,
    })
}

fn sweep_values(a: &ScanArgs) -> Result<Vec<f64>> {
    if !a.values.is_empty() {
        return Ok(a.values.clone());
    }
    match (a.from, a.to, a.steps) {
        (Some(from), Some(to), Some(steps)) if steps > 0 => {
            if steps == 1 {
                return Ok(vec![from]);
            }
            let h = (to - from) / (steps - 1) as f64;
            Ok((0..steps).map(|k| if k + 1 == steps { to } else { from + h * k as f64 }).collect())
        }
        _ => bail!("give --values or --from/--to/--steps with steps > 0"),
    }
}

fn scan_cmd(a: &ScanArgs) -> Result<Outcome> {
    let scenario = scenarios::find(&a.scenario)?;
    let base = scenario.resolve(&overrides(&a.set)?)?;
    let values = sweep_values(a)?;
    let g = grid(&a.grid, SWEEP_GRID)?;
    let points = scenarios::sweep(scenario, &base, &a.param, &values, &g)?;
    let metadata = json!({"scenario": scenario.name, "param": a.param, "base": base, "grid": describe_grid(&g)});
    let data = match a.output.output {
        Format::Json => to_json(&json!({"metadata": metadata, "points": points})),
        Format::Csv => {
            let mut csv = Csv::new(&[
                "value",
                "verdict",
                "margin",
                "max_relative_imaginary",
                "commutator_gamma_m",
                "m2_asymmetry",
                "gf_asymmetry",
                "error",
            ]);
            for p in &points {
                let c = p.classification.as_ref();
                csv.row([
                    num(p.value),
                    c.map(|c| c.verdict.to_string()).unwrap_or_default(),
                    opt_num(p.margin),
                    opt_num(p.max_relative_imaginary),
                    opt_num(c.map(|c| c.commutator_gamma_m)),
                    opt_num(c.map(|c| c.m2_asymmetry)),
                    opt_num(c.map(|c| c.gf_asymmetry)),
                    p.error.clone().unwrap_or_default(),
                ]);
            }
            csv.finish()
        }
    };
    Ok(Outcome {
        data,
        exit_code: 0,
        metadata,
    })
}

fn list_cmd(a: &ListArgs) -> Result<Outcome> {
    let presets = scenarios::presets();
    let data = match a.output.output {
        Format::Json => {
            let items: Vec<Value> = presets
                .iter()
                .map(|s| {
                    json!({
                        "name": s.name,
                        "summary": s.summary,
                        "expected": s.expected,
                        "above_threshold": s.above_threshold,
                        "reference_omega": s.reference_omega,
                        "focus_modes": s.focus_modes,
                        "params": s.params,
                    })
                })
                .collect();
            to_json(&items)
        }
        Format::Csv => {
            let mut csv = Csv::new(&["name", "expected", "above_threshold", "reference_omega", "focus_modes", "params", "summary"]);
            for s in presets {
                let focus = s
                    .focus_modes
                    .map(|m| m.iter().map(usize::to_string).collect::<Vec<_>>().join(";"))
                    .unwrap_or_default();
                let params = s.params.iter().map(|p| format!("{}={}", p.name, p.default)).collect::<Vec<_>>().join(";");
                csv.row([
                    s.name.to_string(),
                    s.expected.to_string(),
                    s.above_threshold.to_string(),
                    num(s.reference_omega),
                    focus,
                    params,
                    s.summary.to_string(),
                ]);
            }
            csv.finish()
        }
    };
    Ok(Outcome {
        data,
        exit_code: 0,
        metadata: json!({"count": presets.len()}),
    })
}

fn run_cmd(a: &RunArgs) -> Result<Outcome> {
    let src = from_scenario(&a.name, &a.set)?;
    let scenario = src.scenario.expect("scenario source");
    let sys = src.system()?;
    let c = classify(&src.model, cavity_squeeze::criteria::DEFAULT_TOL);
    let g = grid(&a.grid, SPECTRUM_GRID)?;
    let modes = src.modes(&[]);
    let reference = reduce(sys.spectral_covariance(scenario.reference_omega, a.normalization)?, modes.as_deref())?;
    // the LO is optimized once, at the reference frequency, then held fixed up to its phase
    let hidden = match hidden_report_of(&reference, modes.as_deref()) {
        Ok(r) => Some(r),
        Err(Error::NoSqueezing { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let best = hd_best(&reference, cavity_squeeze::squeezing::DEFAULT_RESTARTS, cavity_squeeze::squeezing::DEFAULT_SEED);
    let lo = LoConfig::normalized(best.mode_weights.clone(), LoPhase::Scan)?;
    let spec = SqueezingSpectrum::compute_reduced(&sys, &g, modes.as_deref(), &lo, a.normalization)?;
    let metadata = json!({
        "model": src.describe(),
        "classification": c,
        "stability": sys.stability(),
        "formal": !sys.stability().stable,
        "normalization": a.normalization,
        "modes": modes,
        "lo": lo,
        "reference_omega": scenario.reference_omega,
        "reference": hidden,
        "grid": describe_grid(&g),
    });
    Ok(Outcome {
        data: render_spectrum(&spec, a.output.output, &metadata),
        exit_code: 0,
        metadata,
    })
}

fn export_cmd(a: &ExportArgs) -> Result<Outcome> {
    let src = from_scenario(&a.name, &a.set)?;
    let mut data = src.model.to_json_string();
    data.push('\n');
    Ok(Outcome {
        data,
        exit_code: 0,
        metadata: src.describe(),
    })
}

fn schema_cmd(a: &SchemaArgs) -> Result<Outcome> {
    let Some(path) = &a.validate else {
        let mut data = MODEL_SCHEMA.to_string();
        data.push('\n');
        return Ok(Outcome {
            data,
            exit_code: 0,
            metadata: json!({}),
        });
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let (report, code) = match InteractionModel::from_json_str(&text) {
        Ok(m) => (json!({"valid": true, "n_modes": m.n_modes()}), 0),
        Err(e) => (json!({"valid": false, "error": e.to_string()}), 1),
    };
    Ok(Outcome {
        data: to_json(&report),
        exit_code: code,
        metadata: json!({"validated": path}),
    })
}

#[derive(Debug, Serialize)]
struct Check {
    name: String,
    passed: bool,
    detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

/// Worst deviations over the random ensemble.
#[derive(Debug, Default, Clone, Copy)]
struct Worst {
    symplectic: f64,
    hermitian: f64,
    negativity: f64,
    parity: f64,
    dc_imaginary: f64,
    split: f64,
    real_verdict_imaginary: f64,
    real_part_order: f64,
    bloch_messiah: f64,
}

impl Worst {
    fn merge(self, o: Self) -> Self {
        Self {
            symplectic: self.symplectic.max(o.symplectic),
            hermitian: self.hermitian.max(o.hermitian),
            negativity: self.negativity.max(o.negativity),
            parity: self.parity.max(o.parity),
            dc_imaginary: self.dc_imaginary.max(o.dc_imaginary),
            split: self.split.max(o.split),
            real_verdict_imaginary: self.real_verdict_imaginary.max(o.real_verdict_imaginary),
            real_part_order: self.real_part_order.max(o.real_part_order),
            bloch_messiah: self.bloch_messiah.max(o.bloch_messiah),
        }
    }
}

const SELFTEST_OMEGAS: [f64; 4] = [0.0, 0.37, 1.3, 4.1];

fn model_worst(model: &InteractionModel) -> cavity_squeeze::Result<Worst> {
    let sys = LinearizedSystem::new(model)?;
    let real = classify(model, cavity_squeeze::criteria::DEFAULT_TOL).is_real();
    let mut w = Worst::default();
    for &omega in &SELFTEST_OMEGAS {
        let t = sys.transfer(omega)?;
        let c = sys.spectral_covariance(omega, Normalization::ShotNoiseUnity)?;
        let mirror = sys.spectral_covariance(-omega, Normalization::ShotNoiseUnity)?;
        let lam = c.min_eigenvalue();
        w.symplectic = w.symplectic.max(symplectic_residual(&t.s));
        w.hermitian = w.hermitian.max(linalg::rel_diff_c(&c.sigma, &c.sigma.adjoint()));
        w.negativity = w.negativity.max(-lam);
        w.parity = w.parity.max(linalg::rel_diff_c(&mirror.sigma, &c.sigma.map(|z| z.conj())));
        if omega == 0.0 {
            w.dc_imaginary = w.dc_imaginary.max(c.relative_imaginary());
        }
        w.split = w.split.max(t.split_residual).max(c.split_residual);
        if real {
            w.real_verdict_imaginary = w.real_verdict_imaginary.max(c.relative_imaginary());
        }
        w.real_part_order = w.real_part_order.max(lam - c.min_eigenvalue_real_part() - 1e-12 * lam.abs());
        w.bloch_messiah = w.bloch_messiah.max(bloch_messiah_pointwise(&t.s, omega)?.residual);
    }
    Ok(w)
}

fn golden_checks() -> Vec<Check> {
    let mut checks = Vec::new();
    let mut wrong = Vec::new();
    for s in scenarios::presets() {
        match s.build_default() {
            Ok(m) => {
                let v = classify(&m, cavity_squeeze::criteria::DEFAULT_TOL).verdict;
                if v != s.expected {
                    wrong.push(format!("{}: {} (expected {})", s.name, v, s.expected));
                }
            }
            Err(e) => wrong.push(format!("{}: {e}", s.name)),
        }
    }
    checks.push(Check::new(
        "preset verdicts",
        wrong.is_empty(),
        if wrong.is_empty() { format!("{} presets", scenarios::presets().len()) } else { wrong.join("; ") },
    ));

    let single = scenarios::single_mode_opo(1.0, 1.0, 1.0).and_then(|m| threshold_scale(&m, DEFAULT_S_MAX));
    let (ok, detail) = match single {
        Ok(s) => ((s - 2f64.sqrt()).abs() < 1e-6, format!("s* = {s:.12}, expected sqrt(1 + delta^2)")),
        Err(e) => (false, e.to_string()),
    };
    checks.push(Check::new("single-mode threshold", ok, detail));

    let gap = |name: &str, omega: f64| -> cavity_squeeze::Result<(f64, f64)> {
        let s = scenarios::find(name)?;
        let sys = s.system(&s.build_default()?)?;
        let c = sys.spectral_covariance(omega, Normalization::ShotNoiseUnity)?;
        let best = hd_best(&c, cavity_squeeze::squeezing::DEFAULT_RESTARTS, cavity_squeeze::squeezing::DEFAULT_SEED);
        Ok((to_db(c.min_eigenvalue()), best.value_db))
    };
    let (ok, detail) = match gap("single_mode_opo", 0.1) {
        Ok((o, h)) => ((h - o).abs() < 1e-6, format!("optimal {o:.6} dB, homodyne {h:.6} dB")),
        Err(e) => (false, e.to_string()),
    };
    checks.push(Check::new("single-mode homodyne reaches optimum", ok, detail));
    let (ok, detail) = match gap("two_mode_chi3_asymmetric", 0.1) {
        Ok((o, h)) => (h - o > 0.1, format!("optimal {o:.6} dB, homodyne {h:.6} dB")),
        Err(e) => (false, e.to_string()),
    };
    checks.push(Check::new("asymmetric two-mode hides squeezing", ok, detail));
    checks
}

fn selftest_cmd(a: &SelftestArgs) -> Result<Outcome> {
    if a.max_modes == 0 {
        bail!("--max-modes must be positive");
    }
    let mut checks = golden_checks();
    let models = ensemble(a.seed, a.count, a.max_modes);
    let results: Vec<cavity_squeeze::Result<Worst>> = models.par_iter().map(|(_, m)| model_worst(m)).collect();
    let failures: Vec<String> = results.iter().filter_map(|r| r.as_ref().err().map(|e| e.to_string())).collect();
    let worst = results.iter().filter_map(|r| r.as_ref().ok()).fold(Worst::default(), |acc, w| acc.merge(*w));
    checks.push(Check::new(
        "ensemble evaluates",
        failures.is_empty(),
        if failures.is_empty() { format!("{} models", models.len()) } else { failures.join("; ") },
    ));
    let bounds = [
        ("conjugate-symplectic transfer", worst.symplectic, 1e-10),
        ("hermitian covariance", worst.hermitian, 1e-10),
        ("positive covariance", worst.negativity, 1e-10),
        ("frequency parity", worst.parity, 1e-10),
        ("real covariance at dc", worst.dc_imaginary, 1e-12),
        ("real/imaginary split", worst.split, 1e-10),
        ("real verdicts have real covariance", worst.real_verdict_imaginary, 1e-9),
        ("homodyne bound ordering", worst.real_part_order, 1e-10),
        ("bloch-messiah residual", worst.bloch_messiah, 1e-9),
    ];
    for (name, value, tol) in bounds {
        checks.push(Check::new(name, value <= tol, format!("worst {value:.3e} (tol {tol:e})")));
    }
    let passed = checks.iter().all(|c| c.passed);
    let metadata = json!({"seed": a.seed, "count": a.count, "max_modes": a.max_modes, "passed": passed});
    let data = match a.output.output {
        Format::Json => to_json(&json!({"metadata": metadata, "checks": checks})),
        Format::Csv => {
            let mut csv = Csv::new(&["check", "passed", "detail"]);
            for c in &checks {
                csv.row([c.name.clone(), c.passed.to_string(), c.detail.clone()]);
            }
            csv.finish()
        }
    };
    Ok(Outcome {
        data,
        exit_code: if passed { 0 } else { 3 },
        metadata,
    })
}
