//! Seeded generators of random stable models and symplectic matrices, used by
//! property tests, the self-test and benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::model::InteractionModel;
use crate::spectral::{threshold_scale, DEFAULT_S_MAX};
use crate::{CMatrix, RMatrix, C64};

/// Structural family of a random model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelFamily {
    /// Arbitrary Hermitian `G`, symmetric `F`, unequal damping.
    Generic,
    /// Arbitrary `G`, `F` with `Γ = γ I`.
    EqualDamping,
    /// Real symmetric `G`, `F = i(aG + bI)`, `Γ = γ I`: `GF` symmetric and `[Γ, 𝓜] = 0`.
    SymmetricGf,
    /// `F = 0`.
    PumpFree,
    /// `G = 0`, `F = i·diag`.
    Diagonal,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 5] = [
        ModelFamily::Generic,
        ModelFamily::EqualDamping,
        ModelFamily::SymmetricGf,
        ModelFamily::PumpFree,
        ModelFamily::Diagonal,
    ];
}

fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

fn normal_c<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(standard_normal(rng), standard_normal(rng))
}

fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize, real: bool) -> CMatrix {
    let mut g = CMatrix::zeros(n, n);
    for i in 0..n {
        g[(i, i)] = C64::new(standard_normal(rng), 0.0);
        for j in i + 1..n {
            let z = if real {
                C64::new(standard_normal(rng), 0.0)
            } else {
                normal_c(rng)
            };
            g[(i, j)] = z;
            g[(j, i)] = z.conj();
        }
    }
    g
}

fn random_symmetric_c<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let mut f = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let z = normal_c(rng);
            f[(i, j)] = z;
            f[(j, i)] = z;
        }
    }
    f
}

/// Random model of the given family, rescaled to a random fraction
/// (0.2 to 0.85) of its pump threshold so it is stable with a healthy margin.
pub fn random_stable_model<R: Rng + ?Sized>(rng: &mut R, n: usize, family: ModelFamily) -> InteractionModel {
    let damping = Uniform::new(0.2, 2.0);
    let gamma: Vec<f64> = match family {
        ModelFamily::Generic | ModelFamily::PumpFree | ModelFamily::Diagonal => (0..n).map(|_| damping.sample(rng)).collect(),
        ModelFamily::EqualDamping | ModelFamily::SymmetricGf => vec![damping.sample(rng); n],
    };
    let (g, f) = match family {
        ModelFamily::Generic | ModelFamily::EqualDamping => (random_hermitian(rng, n, false), random_symmetric_c(rng, n)),
        ModelFamily::SymmetricGf => {
            let g = random_hermitian(rng, n, true);
            let (a, b) = (standard_normal(rng), standard_normal(rng));
            let f = (&g * C64::new(a, 0.0) + CMatrix::identity(n, n) * C64::new(b, 0.0)) * C64::new(0.0, 1.0);
            (g, f)
        }
        ModelFamily::PumpFree => (random_hermitian(rng, n, false), CMatrix::zeros(n, n)),
        ModelFamily::Diagonal => {
            let d: Vec<C64> = (0..n).map(|_| C64::new(0.0, standard_normal(rng))).collect();
            (CMatrix::zeros(n, n), CMatrix::from_diagonal(&nalgebra::DVector::from_vec(d)))
        }
    };
    let unit = InteractionModel::new(g, f, gamma).expect("generated model is well formed");
    if unit.is_pump_free() {
        return unit;
    }
    let fraction = Uniform::new(0.2, 0.85).sample(rng);
    let scale = threshold_scale(&unit, DEFAULT_S_MAX).unwrap_or(1.0);
    unit.with_pump_scale(fraction * scale)
}

/// `count` models cycling through `N = 1..=max_modes` and all families.
pub fn ensemble(seed: u64, count: usize, max_modes: usize) -> Vec<(ModelFamily, InteractionModel)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            let n = 1 + k % max_modes;
            let family = ModelFamily::ALL[(k / max_modes) % ModelFamily::ALL.len()];
            (family, random_stable_model(&mut rng, n, family))
        })
        .collect()
}

/// Haar-like random unitary via QR of a complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let z = CMatrix::from_fn(n, n, |_, _| normal_c(rng));
    let qr = z.qr();
    let (q, r) = (qr.q(), qr.r());
    // fix column phases so the distribution does not depend on the QR convention
    let mut q = q;
    for j in 0..n {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            let col = q.column(j) * phase;
            q.set_column(j, &col);
        }
    }
    q
}

/// Random conjugate-symplectic matrix: passive unitary times `exp(Ω H)`
/// with `H` real symmetric of size `scale`.
pub fn random_symplectic<R: Rng + ?Sized>(rng: &mut R, n: usize, scale: f64) -> CMatrix {
    let mut h = RMatrix::zeros(2 * n, 2 * n);
    for i in 0..2 * n {
        for j in i..2 * n {
            let x = scale * standard_normal(rng);
            h[(i, j)] = x;
            h[(j, i)] = x;
        }
    }
    let active = (crate::linalg::symplectic_form(n) * h).exp();
    let (u1, u2) = (random_unitary(rng, n), random_unitary(rng, n));
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut t = CMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        t[(k, k)] = C64::new(s, 0.0);
        t[(k, n + k)] = C64::new(s, 0.0);
        t[(n + k, k)] = C64::new(0.0, s);
        t[(n + k, n + k)] = C64::new(0.0, -s);
    }
    let z = CMatrix::zeros(n, n);
    let passive = &t * crate::linalg::blocks(&u1, &z, &z, &u2) * t.adjoint();
    passive * crate::linalg::complexify(&active)
}
