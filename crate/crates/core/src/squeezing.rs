//! Optimal and homodyne-accessible squeezing.
//!
//! The optimum at each frequency follows from the Bloch–Messiah
//! decomposition `S(ω) = u diag(d) v†` (equivalently the smallest eigenvalue
//! of `σ = c S S†`). A homodyne detector with real mode weights `u` and phase
//! `θ` measures the quadrature `w = (cosθ u | sinθ u)` and sees
//! `wᵀ σ w = wᵀ σ_R w`: the antisymmetric `σ_I` drops out of every real
//! quadratic form, so any squeezing carried by `σ_I` is hidden from it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, block, blocks};
use crate::spectral::{symplectic_residual, CovarianceSample, FrequencyGrid, LinearizedSystem, Normalization};
use crate::{CMatrix, DVector, RMatrix, C64};

/// Accepted deviation of `S Ω S† = Ω` on input to the decomposition.
pub const SYMPLECTIC_TOL: f64 = 1e-8;
/// Relative gap below which two squeezing parameters count as one cluster.
pub const DEGENERACY_TOL: f64 = 1e-8;
/// Smallest acceptable overlap between consecutive bases in `branch_align`.
pub const MIN_OVERLAP: f64 = 0.5;
/// Points of the coarse LO-phase scan over `[0, π)`.
pub const COARSE_PHASE_STEPS: usize = 360;
pub const DEFAULT_RESTARTS: usize = 8;
pub const DEFAULT_SEED: u64 = 0x5eed;

const GOLDEN_TOL: f64 = 1e-8;
/// Squeezing shallower than this (in dB) counts as none.
pub const SQUEEZED_DB: f64 = -1e-9;

/// One frequency of the Bloch–Messiah decomposition `S = u diag(d) v†`.
///
/// `d` follows the quadrature pairing: entry `k < N` is `e^{r_k}` and entry
/// `N + k` its reciprocal `e^{−r_k}`, with `r_k` descending straight out of
/// the decomposition. This keeps `u` and `v` conjugate-symplectic for the
/// fixed form Ω; [`BlochMessiahSample::sorted_descending`] gives the plain
/// descending spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct BlochMessiahSample {
    pub omega: f64,
    pub u: CMatrix,
    pub d: Vec<f64>,
    pub v: CMatrix,
    /// Repeated singular values: the basis inside a cluster is not unique.
    pub degenerate: bool,
    /// `‖S − u diag(d) v†‖_F / ‖S‖_F` at construction.
    pub residual: f64,
}

impl BlochMessiahSample {
    pub fn n_modes(&self) -> usize {
        self.d.len() / 2
    }

    pub fn reconstruct(&self) -> CMatrix {
        let n2 = self.d.len();
        let ud = CMatrix::from_fn(n2, n2, |i, j| self.u[(i, j)] * self.d[j]);
        ud * self.v.adjoint()
    }

    pub fn sorted_descending(&self) -> Vec<f64> {
        let mut d = self.d.clone();
        d.sort_by(|a, b| b.total_cmp(a));
        d
    }

    pub fn d_min(&self) -> f64 {
        self.d.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Best squeezing `20 log₁₀ d_min` in dB relative to shot noise.
    pub fn optimal_db(&self) -> f64 {
        20.0 * self.d_min().log10()
    }

    /// Squeezing parameters `r_k = ln d_k` for `k < N`.
    pub fn squeezing_parameters(&self) -> Vec<f64> {
        self.d[..self.n_modes()].iter().map(|d| d.ln()).collect()
    }
}

/// `T = (1/√2) [[I, I], [iI, −iI]]`, mapping `U(N,N)` onto conjugate-symplectic matrices.
fn pair_basis(n: usize) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut t = CMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        t[(k, k)] = C64::new(s, 0.0);
        t[(k, n + k)] = C64::new(s, 0.0);
        t[(n + k, k)] = C64::new(0.0, s);
        t[(n + k, n + k)] = C64::new(0.0, -s);
    }
    t
}

fn block_diag(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let n = a.nrows();
    blocks(a, &CMatrix::zeros(n, n), &CMatrix::zeros(n, n), b)
}

/// Bloch–Messiah decomposition of a conjugate-symplectic `s`.
///
/// In the basis `T` the matrix lies in `U(N, N)`. Its polar factor
/// `P = exp(H)` has `H = [[0, X], [X†, 0]]`; the SVD `X = Q₁ r Q₂†` gives
/// `P = D C(r) D†` with `D = diag(Q₁, Q₂)`, and `T C(r) T† = diag(e^r | e^{−r})`.
pub fn bloch_messiah_pointwise(s: &CMatrix, omega: f64) -> Result<BlochMessiahSample> {
    let n2 = s.nrows();
    if n2 == 0 || n2 % 2 != 0 || s.ncols() != n2 {
        return Err(Error::DimensionMismatch(format!("expected square 2N×2N matrix, got {}×{}", n2, s.ncols())));
    }
    let residual = symplectic_residual(s);
    if !(residual <= SYMPLECTIC_TOL) {
        return Err(Error::NotSymplectic { residual });
    }
    let n = n2 / 2;
    let t = pair_basis(n);
    let sp = t.adjoint() * s * &t;

    let eig = linalg::hermitian_part(&(&sp * sp.adjoint())).symmetric_eigen();
    let vecs = &eig.eigenvectors;
    let log_half: Vec<f64> = eig.eigenvalues.iter().map(|l| 0.5 * l.max(f64::MIN_POSITIVE).ln()).collect();
    let spectral_fn = |f: &dyn Fn(f64) -> f64| {
        let scaled = CMatrix::from_fn(n2, n2, |i, j| vecs[(i, j)] * f(log_half[j]));
        scaled * vecs.adjoint()
    };
    let h = spectral_fn(&|x| x);
    let p_inv = spectral_fn(&|x| (-x).exp());

    let x = block(&h, 0, 1);
    let (q1, r, q2) = linalg::svd_c(&x);

    let w = p_inv * &sp;
    let w1 = block(&w, 0, 0);
    let w2 = block(&w, 1, 1);

    let u = &t * block_diag(&q1, &q2) * t.adjoint();
    let v = &t * block_diag(&(w1.adjoint() * &q1), &(w2.adjoint() * &q2)) * t.adjoint();
    let d: Vec<f64> = r.iter().map(|x| x.exp()).chain(r.iter().map(|x| (-x).exp())).collect();
    let degenerate = r.windows(2).any(|p| (p[0] - p[1]).abs() <= DEGENERACY_TOL * p[0].abs().max(1.0));

    let mut sample = BlochMessiahSample {
        omega,
        u,
        d,
        v,
        degenerate,
        residual: 0.0,
    };
    sample.residual = linalg::rel_diff_c(s, &sample.reconstruct());
    Ok(sample)
}

/// Decomposition of the transfer function at `omega`.
pub fn bloch_messiah_at(sys: &LinearizedSystem, omega: f64) -> Result<BlochMessiahSample> {
    bloch_messiah_pointwise(&sys.transfer(omega)?.s, omega)
}

pub fn bloch_messiah_on_grid(sys: &LinearizedSystem, grid: &FrequencyGrid) -> Result<Vec<BlochMessiahSample>> {
    grid.points().par_iter().map(|&w| bloch_messiah_at(sys, w)).collect()
}

/// `10 log₁₀(λ_min(σ(ω)) / c)` on every grid point.
pub fn optimal_spectrum(sys: &LinearizedSystem, grid: &FrequencyGrid, normalization: Normalization) -> Result<Vec<f64>> {
    grid.points()
        .par_iter()
        .map(|&w| Ok(to_db(sys.spectral_covariance(w, normalization)?.min_eigenvalue())))
        .collect()
}

pub fn to_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

/// `⟨prev_k, cur_j⟩` summed over the x and y columns of pair `j` / `k`.
fn pair_overlap(prev: &CMatrix, cur: &CMatrix, j: usize, k: usize) -> C64 {
    let n = prev.nrows() / 2;
    prev.column(k).dotc(&cur.column(j)) + prev.column(n + k).dotc(&cur.column(n + j))
}

/// Apply `Z` (m×m) to the pairs `cols` of `m`, in both halves.
fn rotate_pairs(m: &mut CMatrix, cols: &[usize], z: &CMatrix) {
    let n = m.nrows() / 2;
    for half in [0, n] {
        let old: Vec<_> = cols.iter().map(|&c| m.column(half + c).into_owned()).collect();
        for (b, &cb) in cols.iter().enumerate() {
            let mut acc = DVector::<C64>::zeros(m.nrows());
            for (a, col) in old.iter().enumerate() {
                acc += col * z[(a, b)];
            }
            m.set_column(half + cb, &acc);
        }
    }
}

fn align_to(prev: &BlochMessiahSample, cur: &BlochMessiahSample, index: usize) -> Result<BlochMessiahSample> {
    let n = cur.n_modes();
    let mut u = cur.u.clone();
    let mut v = cur.v.clone();

    // Procrustes inside each cluster of equal squeezing parameters
    let mut pairs: Vec<usize> = (0..n).collect();
    pairs.sort_by(|&a, &b| cur.d[b].total_cmp(&cur.d[a]));
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && {
            let (a, b) = (cur.d[pairs[start]].ln(), cur.d[pairs[end]].ln());
            (a - b).abs() <= DEGENERACY_TOL * a.abs().max(1.0)
        } {
            end += 1;
        }
        if end - start > 1 {
            let cluster: Vec<usize> = pairs[start..end].to_vec();
            let m = cluster.len();
            let mut energy: Vec<(usize, f64)> = (0..n)
                .map(|k| (k, cluster.iter().map(|&j| pair_overlap(&prev.u, &u, j, k).norm_sqr()).sum()))
                .collect();
            energy.sort_by(|a, b| b.1.total_cmp(&a.1));
            let mut targets: Vec<usize> = energy[..m].iter().map(|e| e.0).collect();
            targets.sort_unstable();
            let overlap = CMatrix::from_fn(m, m, |a, b| pair_overlap(&prev.u, &u, cluster[a], targets[b]).conj());
            let (left, _, right) = linalg::svd_c(&overlap);
            let z = left * right.adjoint();
            rotate_pairs(&mut u, &cluster, &z);
            rotate_pairs(&mut v, &cluster, &z);
        }
        start = end;
    }

    // greedy assignment of current pairs onto the previous slots
    let mut scores: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for j in 0..n {
        for k in 0..n {
            scores.push((0.5 * pair_overlap(&prev.u, &u, j, k).norm(), j, k));
        }
    }
    scores.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut slot_of = vec![usize::MAX; n];
    let mut taken = vec![false; n];
    let mut worst = f64::INFINITY;
    for (score, j, k) in scores {
        if slot_of[j] == usize::MAX && !taken[k] {
            slot_of[j] = k;
            taken[k] = true;
            worst = worst.min(score);
        }
    }
    if worst <= MIN_OVERLAP {
        return Err(Error::AlignmentAmbiguous {
            index: index - 1,
            next: index,
            overlap: worst,
        });
    }

    let mut au = CMatrix::zeros(2 * n, 2 * n);
    let mut av = CMatrix::zeros(2 * n, 2 * n);
    let mut d = vec![0.0; 2 * n];
    for j in 0..n {
        let k = slot_of[j];
        for half in [0, n] {
            au.set_column(half + k, &u.column(half + j));
            av.set_column(half + k, &v.column(half + j));
            d[half + k] = cur.d[half + j];
        }
    }
    for k in 0..n {
        let o = pair_overlap(&prev.u, &au, k, k);
        let phase = if o.norm() > 0.0 { (o / o.norm()).conj() } else { C64::new(1.0, 0.0) };
        for half in [0, n] {
            let cu = au.column(half + k) * phase;
            au.set_column(half + k, &cu);
            let cv = av.column(half + k) * phase;
            av.set_column(half + k, &cv);
        }
    }
    let degenerate = cur.degenerate;
    let mut out = BlochMessiahSample {
        omega: cur.omega,
        u: au,
        d,
        v: av,
        degenerate,
        residual: cur.residual,
    };
    out.residual = out.residual.max(linalg::rel_diff_c(&cur.reconstruct(), &out.reconstruct()));
    Ok(out)
}

/// Reorder and rephase singular triplets so each branch follows continuously
/// from the previous frequency.
///
/// Sequential over the samples; the first one is the reference. Fails with
/// `AlignmentAmbiguous` when consecutive bases overlap by no more than
/// [`MIN_OVERLAP`], which means the grid is too coarse.
pub fn branch_align(samples: &[BlochMessiahSample]) -> Result<Vec<BlochMessiahSample>> {
    let mut out: Vec<BlochMessiahSample> = Vec::with_capacity(samples.len());
    for (idx, s) in samples.iter().enumerate() {
        let next = match out.last() {
            None => s.clone(),
            Some(prev) => align_to(prev, s, idx)?,
        };
        out.push(next);
    }
    Ok(out)
}

/// Local-oscillator phase: fixed, or optimized independently at every frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoPhase {
    Fixed(f64),
    Scan,
}

impl std::str::FromStr for LoPhase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "scan" {
            return Ok(LoPhase::Scan);
        }
        s.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .map(LoPhase::Fixed)
            .ok_or_else(|| Error::InvalidParameter(format!("LO phase must be a number or `scan`, got `{s}`")))
    }
}

/// Homodyne local oscillator: real unit mode weights and a phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoConfig {
    pub mode_weights: Vec<f64>,
    pub phase: LoPhase,
}

impl LoConfig {
    /// Requires `‖mode_weights‖ = 1` to 1e-9.
    pub fn new(mode_weights: Vec<f64>, phase: LoPhase) -> Result<Self> {
        let norm = mode_weights.iter().map(|x| x * x).sum::<f64>().sqrt();
        if mode_weights.is_empty() || mode_weights.iter().any(|x| !x.is_finite()) || (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("LO mode weights must be a unit vector (norm {norm})")));
        }
        Ok(Self { mode_weights, phase })
    }

    /// Rescale arbitrary nonzero weights to unit length.
    pub fn normalized(mode_weights: Vec<f64>, phase: LoPhase) -> Result<Self> {
        let norm = mode_weights.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidParameter("LO mode weights must be nonzero and finite".into()));
        }
        Self::new(mode_weights.iter().map(|x| x / norm).collect(), phase)
    }

    /// Weight 1 on a single mode.
    pub fn single_mode(n_modes: usize, mode: usize, phase: LoPhase) -> Result<Self> {
        if mode >= n_modes {
            return Err(Error::InvalidParameter(format!("mode {mode} out of range for {n_modes} modes")));
        }
        let mut w = vec![0.0; n_modes];
        w[mode] = 1.0;
        Self::new(w, phase)
    }
}

/// Homodyne reading at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HdPoint {
    pub omega: f64,
    pub theta: f64,
    /// `wᵀ σ_R w` relative to the vacuum level.
    pub value: f64,
    pub db: f64,
}

/// Quadratic forms `(uᵀAu, uᵀBu, uᵀDu)` of the xx, xy and yy blocks of σ_R.
fn phase_form(sample: &CovarianceSample, u: &DVector<f64>) -> (f64, f64, f64) {
    let a = block(&sample.sigma_r, 0, 0);
    let b = block(&sample.sigma_r, 0, 1);
    let d = block(&sample.sigma_r, 1, 1);
    (u.dot(&(&a * u)), u.dot(&(&b * u)), u.dot(&(&d * u)))
}

fn form_at(form: (f64, f64, f64), theta: f64) -> f64 {
    let (c, s) = (theta.cos(), theta.sin());
    c * c * form.0 + 2.0 * c * s * form.1 + s * s * form.2
}

/// Exact minimum of `form_at` over θ: the smaller eigenvalue of `[[a, b], [b, d]]`.
fn form_min(form: (f64, f64, f64)) -> (f64, f64) {
    let (a, b, d) = form;
    let phi = b.atan2(0.5 * (a - d));
    let theta = (0.5 * (phi + std::f64::consts::PI)).rem_euclid(std::f64::consts::PI);
    let radius = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    (theta, 0.5 * (a + d) - radius)
}

fn golden_section(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// Coarse scan of a π-periodic function over `[0, π)` then golden-section to 1e-8.
fn phase_scan(f: &dyn Fn(f64) -> f64) -> (f64, f64) {
    let step = std::f64::consts::PI / COARSE_PHASE_STEPS as f64;
    let best = (0..COARSE_PHASE_STEPS)
        .map(|k| (k as f64 * step, f(k as f64 * step)))
        .fold((0.0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
    let (theta, value) = golden_section(f, best.0 - step, best.0 + step, GOLDEN_TOL);
    (theta.rem_euclid(std::f64::consts::PI), value)
}

/// Phase optimum for fixed weights found by scan and golden-section alone.
pub fn hd_phase_scan(sample: &CovarianceSample, mode_weights: &[f64]) -> (f64, f64) {
    let form = phase_form(sample, &DVector::from_column_slice(mode_weights));
    let (theta, value) = phase_scan(&|t| form_at(form, t));
    (theta, value / sample.vacuum_level())
}

/// Homodyne reading of one covariance sample.
///
/// With `Scan`, the coarse scan and golden-section locate the optimum and
/// the closed-form 2×2 eigen solution finishes it.
pub fn hd_point(sample: &CovarianceSample, lo: &LoConfig) -> Result<HdPoint> {
    if lo.mode_weights.len() != sample.n_modes() {
        return Err(Error::DimensionMismatch(format!(
            "LO has {} weights, system has {} modes",
            lo.mode_weights.len(),
            sample.n_modes()
        )));
    }
    let form = phase_form(sample, &DVector::from_column_slice(&lo.mode_weights));
    let (theta, raw) = match lo.phase {
        LoPhase::Fixed(theta) => (theta, form_at(form, theta)),
        LoPhase::Scan => {
            let (scanned, scanned_value) = phase_scan(&|t| form_at(form, t));
            let (exact, exact_value) = form_min(form);
            if exact_value <= scanned_value {
                (exact, exact_value)
            } else {
                (scanned, scanned_value)
            }
        }
    };
    let value = raw / sample.vacuum_level();
    Ok(HdPoint {
        omega: sample.omega,
        theta,
        value,
        db: to_db(value),
    })
}

pub fn hd_spectrum(sys: &LinearizedSystem, lo: &LoConfig, grid: &FrequencyGrid, normalization: Normalization) -> Result<Vec<HdPoint>> {
    grid.points()
        .par_iter()
        .map(|&w| hd_point(&sys.spectral_covariance(w, normalization)?, lo))
        .collect()
}

/// Homodyne optimum over all real unit mode weights and phases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HdBest {
    pub omega: f64,
    pub mode_weights: Vec<f64>,
    pub theta: f64,
    /// Relative to the vacuum level.
    pub value: f64,
    pub value_db: f64,
    /// `λ_min(σ_R)` relative to the vacuum level.
    pub lower_bound: f64,
    pub lower_bound_db: f64,
    /// Largest excess of a random restart over the best value.
    pub restart_spread: f64,
}

/// `Q(θ) = cos²θ A + cosθ sinθ (B + Bᵀ) + sin²θ D`.
struct ConeForm {
    a: RMatrix,
    b_sym: RMatrix,
    d: RMatrix,
}

impl ConeForm {
    fn new(sigma_r: &RMatrix) -> Self {
        let b = block(sigma_r, 0, 1);
        Self {
            a: block(sigma_r, 0, 0),
            b_sym: &b + b.transpose(),
            d: block(sigma_r, 1, 1),
        }
    }

    fn at(&self, theta: f64) -> RMatrix {
        let (c, s) = (theta.cos(), theta.sin());
        self.a.scale(c * c) + self.b_sym.scale(c * s) + self.d.scale(s * s)
    }

    fn weights_form(&self, u: &DVector<f64>) -> (f64, f64, f64) {
        (u.dot(&(&self.a * u)), 0.5 * u.dot(&(&self.b_sym * u)), u.dot(&(&self.d * u)))
    }

    /// Alternate exact θ and exact u updates until the value stalls.
    fn descend(&self, theta0: f64) -> (f64, DVector<f64>, f64) {
        let (mut value, mut u) = linalg::min_eigenpair(&self.at(theta0));
        for _ in 0..2000 {
            let (t, _) = form_min(self.weights_form(&u));
            let (v, w) = linalg::min_eigenpair(&self.at(t));
            let improved = value - v;
            u = w;
            value = v.min(value);
            if improved <= 1e-16 * value.abs().max(f64::MIN_POSITIVE) {
                break;
            }
        }
        let (t, v) = form_min(self.weights_form(&u));
        (t, u, v.min(value))
    }
}

/// Minimum of `wᵀ σ_R w` over `w = (cosθ u | sinθ u)`, `u` real unit.
///
/// Starts from the best point of a coarse phase scan of `λ_min(Q(θ))`,
/// refined by golden-section, plus `restarts` seeded random phases.
pub fn hd_best(sample: &CovarianceSample, restarts: usize, seed: u64) -> HdBest {
    let vac = sample.vacuum_level();
    let cone = ConeForm::new(&sample.sigma_r);
    let (theta0, _) = phase_scan(&|t| linalg::min_eigenpair(&cone.at(t)).0);
    let (mut theta, mut u, mut value) = cone.descend(theta0);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut restart_values = Vec::with_capacity(restarts);
    for _ in 0..restarts {
        let start = rng.gen_range(0.0..std::f64::consts::PI);
        let (t, w, v) = cone.descend(start);
        restart_values.push(v);
        if v < value {
            theta = t;
            u = w;
            value = v;
        }
    }
    let restart_spread = restart_values.iter().map(|v| (v - value) / vac).fold(0.0, f64::max);

    // deterministic sign: largest weight positive, θ in [0, π)
    let pivot = u.iter().copied().fold(0.0, |m: f64, x| if x.abs() > m.abs() { x } else { m });
    if pivot < 0.0 {
        u = -u;
    }
    let lower_bound = linalg::symmetric_eigenvalues(&sample.sigma_r)[0] / vac;
    let value = value / vac;
    HdBest {
        omega: sample.omega,
        mode_weights: u.iter().copied().collect(),
        theta: theta.rem_euclid(std::f64::consts::PI),
        value,
        value_db: to_db(value),
        lower_bound,
        lower_bound_db: to_db(lower_bound),
        restart_spread,
    }
}

pub fn hd_best_at(sys: &LinearizedSystem, omega: f64, normalization: Normalization) -> Result<HdBest> {
    Ok(hd_best(&sys.spectral_covariance(omega, normalization)?, DEFAULT_RESTARTS, DEFAULT_SEED))
}

/// Optimal versus homodyne-accessible squeezing at one frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiddenReport {
    pub omega: f64,
    /// Modes kept; `None` means the whole system.
    pub modes: Option<Vec<usize>>,
    pub optimal_db: f64,
    pub hd_db: f64,
    /// `hd_db / optimal_db`.
    pub fraction: f64,
    /// `1 − fraction`.
    pub hidden_share: f64,
    /// `(1 − V_hd) / (1 − V_opt)` with linear noise levels `V`.
    pub variance_fraction: f64,
    pub lo: HdBest,
}

/// Hidden-squeezing budget at `omega`, optionally for a subset of modes
/// (their principal sub-block of σ, i.e. the reduced state).
pub fn hidden_report(sys: &LinearizedSystem, omega: f64, modes: Option<&[usize]>, normalization: Normalization) -> Result<HiddenReport> {
    let full = sys.spectral_covariance(omega, normalization)?;
    let sample = match modes {
        Some(m) => full.reduced(m)?,
        None => full,
    };
    hidden_report_of(&sample, modes)
}

pub fn hidden_report_of(sample: &CovarianceSample, modes: Option<&[usize]>) -> Result<HiddenReport> {
    let v_opt = sample.min_eigenvalue();
    let optimal_db = to_db(v_opt);
    if !(optimal_db < SQUEEZED_DB) {
        return Err(Error::NoSqueezing {
            omega: sample.omega,
            optimal_db,
        });
    }
    let lo = hd_best(sample, DEFAULT_RESTARTS, DEFAULT_SEED);
    let fraction = lo.value_db / optimal_db;
    Ok(HiddenReport {
        omega: sample.omega,
        modes: modes.map(<[usize]>::to_vec),
        optimal_db,
        hd_db: lo.value_db,
        fraction,
        hidden_share: 1.0 - fraction,
        variance_fraction: (1.0 - lo.value) / (1.0 - v_opt),
        lo,
    })
}

/// Optimal and homodyne squeezing across a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqueezingSpectrum {
    pub grid: FrequencyGrid,
    /// Modes kept before analysis; `None` for the whole system.
    pub modes: Option<Vec<usize>>,
    pub lo: LoConfig,
    pub normalization: Normalization,
    pub optimal_db: Vec<f64>,
    pub hd_db: Vec<f64>,
    pub lo_phase: Vec<f64>,
    /// `1 − hd_db/optimal_db`, only where the optimum is squeezed.
    pub hidden_fraction: Vec<Option<f64>>,
}

impl SqueezingSpectrum {
    pub fn compute(sys: &LinearizedSystem, grid: &FrequencyGrid, lo: &LoConfig, normalization: Normalization) -> Result<Self> {
        Self::compute_reduced(sys, grid, None, lo, normalization)
    }

    /// As [`SqueezingSpectrum::compute`] on the reduced state of `modes`;
    /// the LO weights then refer to the kept modes.
    pub fn compute_reduced(
        sys: &LinearizedSystem,
        grid: &FrequencyGrid,
        modes: Option<&[usize]>,
        lo: &LoConfig,
        normalization: Normalization,
    ) -> Result<Self> {
        let points: Vec<(f64, HdPoint)> = grid
            .points()
            .par_iter()
            .map(|&w| {
                let full = sys.spectral_covariance(w, normalization)?;
                let sample = match modes {
                    Some(m) => full.reduced(m)?,
                    None => full,
                };
                Ok((to_db(sample.min_eigenvalue()), hd_point(&sample, lo)?))
            })
            .collect::<Result<_>>()?;
        let optimal_db: Vec<f64> = points.iter().map(|p| p.0).collect();
        let hd_db: Vec<f64> = points.iter().map(|p| p.1.db).collect();
        let hidden_fraction = optimal_db
            .iter()
            .zip(&hd_db)
            .map(|(&o, &h)| (o < SQUEEZED_DB).then(|| 1.0 - h / o))
            .collect();
        Ok(Self {
            grid: grid.clone(),
            modes: modes.map(<[usize]>::to_vec),
            lo: lo.clone(),
            normalization,
            lo_phase: points.iter().map(|p| p.1.theta).collect(),
            optimal_db,
            hd_db,
            hidden_fraction,
        })
    }
}
