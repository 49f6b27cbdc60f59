//! Q-Wiener increments: covariance spectra, coloring by sqrt(Q), and
//! bit-reproducible Gaussian sampling.
//!
//! The noise space carries the model's own eigenbasis; Q is diagonal on a
//! declared finite mode set J with an optional analytic tail entering only
//! the trace. Increments are sampled per (seed, path, step) from a
//! counter-keyed ChaCha stream: path selects the cipher key, step selects
//! the stream counter, and draws run in canonical mode order, so every
//! increment is a pure function of its coordinates and paths can run in
//! parallel with no shared state.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::spectral::Modes;

/// Diagonal covariance spectrum on the noise-mode set, plus a nonnegative
/// analytic tail that contributes to the trace only.
#[derive(Debug, Clone)]
pub struct CovarianceSpec {
    modes: Modes,
    q: Vec<f64>,
    sqrt_q: Vec<f64>,
    tail: f64,
}

impl CovarianceSpec {
    /// Builds the spectrum; eigenvalues are given in canonical mode order.
    pub fn new(modes: Modes, q: Vec<f64>, tail: f64) -> Result<Self> {
        if q.len() != modes.len() {
            return Err(Error::contract(format!(
                "covariance spectrum has {} entries, mode set has {} modes",
                q.len(),
                modes.len()
            )));
        }
        if let Some(bad) = q.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::domain(format!(
                "covariance eigenvalues must be finite and nonnegative, got {bad}"
            )));
        }
        if !tail.is_finite() || tail < 0.0 {
            return Err(Error::domain(format!(
                "covariance tail must be finite and nonnegative, got {tail}"
            )));
        }
        let sqrt_q = q.iter().map(|v| v.sqrt()).collect();
        Ok(CovarianceSpec {
            modes,
            q,
            sqrt_q,
            tail,
        })
    }

    pub fn modes(&self) -> &Modes {
        &self.modes
    }

    /// Eigenvalues in canonical mode order.
    pub fn values(&self) -> &[f64] {
        &self.q
    }

    /// Componentwise square roots of the eigenvalues.
    pub fn sqrt_values(&self) -> &[f64] {
        &self.sqrt_q
    }

    pub fn tail(&self) -> f64 {
        self.tail
    }

    /// Trace of Q: sum of the declared eigenvalues plus the analytic tail.
    pub fn trace(&self) -> f64 {
        let mut sum = 0.0;
        for v in &self.q {
            sum += v;
        }
        sum + self.tail
    }

    /// Colors an increment by sqrt(Q): componentwise multiplication by
    /// sqrt(q_u) in canonical mode order.
    pub fn apply_sqrt(&self, w: &WienerIncrement) -> Result<Vec<f64>> {
        if *w.modes() != self.modes {
            return Err(Error::contract(
                "increment mode set does not match the covariance spectrum",
            ));
        }
        Ok(w.values()
            .iter()
            .zip(&self.sqrt_q)
            .map(|(z, s)| z * s)
            .collect())
    }
}

/// One projected Wiener increment: independent N(0, dt) coordinates on the
/// noise-mode set.
#[derive(Debug, Clone)]
pub struct WienerIncrement {
    modes: Modes,
    dz: Vec<f64>,
    dt: f64,
}

impl WienerIncrement {
    /// Wraps raw per-mode samples (canonical order).
    pub fn new(modes: Modes, dz: Vec<f64>, dt: f64) -> Result<Self> {
        if dz.len() != modes.len() {
            return Err(Error::contract(format!(
                "increment has {} entries, mode set has {} modes",
                dz.len(),
                modes.len()
            )));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::domain(format!(
                "increment interval must be positive, got {dt}"
            )));
        }
        Ok(WienerIncrement { modes, dz, dt })
    }

    pub fn modes(&self) -> &Modes {
        &self.modes
    }

    /// Per-mode Gaussian samples in canonical order (units sqrt(time)).
    pub fn values(&self) -> &[f64] {
        &self.dz
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }
}

/// Draws one increment: |J| independent N(0, dt) samples in canonical mode
/// order from the given stream position.
pub fn sample_increment(
    modes: &Modes,
    dt: f64,
    rng: &mut ChaCha12Rng,
) -> Result<WienerIncrement> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::domain(format!(
            "increment interval must be positive, got {dt}"
        )));
    }
    let scale = dt.sqrt();
    let dz = (0..modes.len())
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            z * scale
        })
        .collect();
    WienerIncrement::new(modes.clone(), dz, dt)
}

/// Standard splitmix64 step, used only for key derivation.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-path random stream: the ChaCha key is derived from (seed, path) and
/// the cipher's stream counter indexes positions within the path (0 for the
/// initial condition, m + 1 for step m), so any draw is addressable as a
/// pure function of (seed, path, position, order).
#[derive(Debug, Clone)]
pub struct PathStream {
    rng: ChaCha12Rng,
}

impl PathStream {
    pub fn new(seed: u64, path: u64) -> Self {
        let mut state = seed ^ 0x6A09_E667_F3BC_C909;
        let s0 = splitmix64(&mut state);
        let s1 = splitmix64(&mut state);
        let mut key_state = s0 ^ path.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(s1);
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut key_state).to_le_bytes());
        }
        PathStream {
            rng: ChaCha12Rng::from_seed(key),
        }
    }

    /// Positions the generator at the start of the given stream index and
    /// returns it for sampling.
    pub fn stream(&mut self, index: u64) -> &mut ChaCha12Rng {
        self.rng.set_stream(index);
        self.rng.set_word_pos(0);
        &mut self.rng
    }
}
