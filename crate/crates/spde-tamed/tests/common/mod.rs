//! Shared fixtures and independent oracle routes for the integration tests.

#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use spde_tamed::models::{DiffusionKind, DiscreteModel, ModelSpec};
use spde_tamed::noise::CovarianceSpec;
use spde_tamed::spectral::{GalerkinState, Modes, ModelKind, SpectralBasis};

pub fn rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// q_i = scale / (i+1)^2 along the canonical order.
pub fn poly_q(len: usize, scale: f64) -> Vec<f64> {
    (0..len).map(|i| scale / ((i + 1) as f64).powi(2)).collect()
}

pub fn model(
    kind: ModelKind,
    eta: f64,
    gamma: f64,
    cutoff: u32,
    noise_cutoff: u32,
    q_scale: f64,
    diffusion: DiffusionKind,
) -> DiscreteModel {
    let basis = SpectralBasis::new(kind, eta).unwrap();
    let modes = basis.modes_up_to(cutoff).unwrap();
    let noise = basis.modes_up_to(noise_cutoff).unwrap();
    let q = poly_q(noise.len(), q_scale);
    let cov = CovarianceSpec::new(noise, q, 0.0).unwrap();
    let spec = ModelSpec::new(kind, gamma, eta, 1.0, 1.0 / 36.0, None, diffusion, cov).unwrap();
    DiscreteModel::new(spec, modes).unwrap()
}

pub fn burgers(cutoff: u32) -> DiscreteModel {
    model(
        ModelKind::Burgers,
        0.0,
        0.5,
        cutoff,
        cutoff,
        0.5,
        DiffusionKind::AdditiveIdentity,
    )
}

pub fn ks(eta: f64, cutoff: u32) -> DiscreteModel {
    model(
        ModelKind::KuramotoSivashinsky,
        eta,
        0.25,
        cutoff,
        cutoff,
        0.5,
        DiffusionKind::AdditiveIdentity,
    )
}

pub fn ns(eta: f64, cutoff: u32) -> DiscreteModel {
    model(
        ModelKind::NavierStokes2d,
        eta,
        0.75,
        cutoff,
        cutoff,
        0.2,
        DiffusionKind::AdditiveIdentity,
    )
}

pub fn random_state(modes: &Modes, rng: &mut ChaCha12Rng, scale: f64) -> GalerkinState {
    let coeffs = (0..modes.len())
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect();
    GalerkinState::from_coeffs(modes.clone(), coeffs).unwrap()
}

pub fn state_with(dm: &DiscreteModel, entries: &[(spde_tamed::spectral::BasisId, f64)]) -> GalerkinState {
    let mut x = dm.zero_state();
    for &(id, c) in entries {
        x.set_coeff(id, c).unwrap();
    }
    x
}

/// |x|_{H_r} recomputed directly from the closed-form eigenvalues.
pub fn hnorm_oracle(x: &GalerkinState, r: f64) -> f64 {
    let basis = *x.modes().basis();
    let mut sum = 0.0;
    for (&id, &c) in x.modes().ids().iter().zip(x.coeffs()) {
        let lam = basis.eigenvalue(id).unwrap().abs();
        sum += lam.powf(2.0 * r) * c * c;
    }
    sum.sqrt()
}

/// Pointwise field value from the closed-form mode evaluations.
pub fn eval_state(x: &GalerkinState, point: [f64; 2]) -> [f64; 2] {
    let basis = *x.modes().basis();
    let mut out = [0.0, 0.0];
    for (&id, &c) in x.modes().ids().iter().zip(x.coeffs()) {
        let v = basis.eval(id, point);
        out[0] += c * v[0];
        out[1] += c * v[1];
    }
    out
}

/// Dense-grid sup of |field|, an independent route to the uniform norm.
pub fn dense_max_abs(x: &GalerkinState) -> f64 {
    let mut worst = 0.0f64;
    match x.modes().basis().kind() {
        ModelKind::NavierStokes2d => {
            let n = 101;
            for a in 0..=n {
                for b in 0..=n {
                    let v = eval_state(x, [a as f64 / n as f64, b as f64 / n as f64]);
                    worst = worst.max(v[0].hypot(v[1]));
                }
            }
        }
        _ => {
            let n = 4001;
            for a in 0..=n {
                let v = eval_state(x, [a as f64 / n as f64, 0.0]);
                worst = worst.max(v[0].abs());
            }
        }
    }
    worst
}

pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels * 2;
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Max entry-wise difference relative to 1 + the larger magnitude.
pub fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let scale = 1.0 + b.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    max_abs_diff(a, b) / scale
}

pub fn rng_for(dm: &DiscreteModel, seed: u64) -> ChaCha12Rng {
    let _ = dm;
    rng(seed)
}
