//! Coefficient vectors over a fixed mode set: the scheme's state type.
//!
//! A state is a dense real vector indexed by the canonical order of its mode
//! set. All reductions (norms, inner products) run in ascending canonical
//! order so results are bit-reproducible.

use crate::error::{Error, Result};

use super::{mode_power_sum, BasisId, Modes};

/// A finite spectral element: coefficients over a mode set.
#[derive(Debug, Clone, PartialEq)]
pub struct GalerkinState {
    modes: Modes,
    coeffs: Vec<f64>,
}

/// |lambda|^{2r} with fast paths for the exponents the library uses heavily.
fn abs_lambda_pow(abs_lambda: f64, two_r: f64) -> f64 {
    if two_r == 0.0 {
        1.0
    } else if two_r == 1.0 {
        abs_lambda
    } else if two_r == 2.0 {
        abs_lambda * abs_lambda
    } else {
        abs_lambda.powf(two_r)
    }
}

impl GalerkinState {
    /// The zero element of the span of `modes`.
    pub fn zero(modes: Modes) -> Self {
        let coeffs = vec![0.0; modes.len()];
        GalerkinState { modes, coeffs }
    }

    /// Wraps a coefficient vector given in canonical mode order.
    pub fn from_coeffs(modes: Modes, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != modes.len() {
            return Err(Error::contract(format!(
                "coefficient vector has length {}, mode set has {} modes",
                coeffs.len(),
                modes.len()
            )));
        }
        if let Some(bad) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(Error::contract(format!("non-finite coefficient {bad}")));
        }
        Ok(GalerkinState { modes, coeffs })
    }

    pub(crate) fn from_parts_unchecked(modes: Modes, coeffs: Vec<f64>) -> Self {
        debug_assert_eq!(modes.len(), coeffs.len());
        GalerkinState { modes, coeffs }
    }

    pub fn modes(&self) -> &Modes {
        &self.modes
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    /// Coefficient of the given mode, zero if the mode is not in the set.
    pub fn coeff(&self, id: BasisId) -> f64 {
        self.modes
            .index_of(id)
            .map_or(0.0, |i| self.coeffs[i])
    }

    /// Sets the coefficient of a mode that must be present in the set.
    pub fn set_coeff(&mut self, id: BasisId, value: f64) -> Result<()> {
        let i = self
            .modes
            .index_of(id)
            .ok_or_else(|| Error::contract(format!("mode {id} not in the state's mode set")))?;
        self.coeffs[i] = value;
        Ok(())
    }

    /// Interpolation-space norm `(sum_h |lambda_h|^{2r} c_h^2)^{1/2}`;
    /// r = 0 is the plain H-norm (Euclidean norm of the coefficients).
    pub fn hnorm(&self, r: f64) -> f64 {
        let two_r = 2.0 * r;
        let mut sum = 0.0;
        for (c, &al) in self.coeffs.iter().zip(self.modes.abs_eigenvalues()) {
            sum += abs_lambda_pow(al, two_r) * c * c;
        }
        sum.sqrt()
    }

    /// Orthogonal projection onto `target`: keeps coefficients of shared
    /// modes, zeroes the rest.
    ///
    /// Panics if the two mode sets belong to different bases; that is a
    /// programming error, not a data condition.
    pub fn project(&self, target: &Modes) -> GalerkinState {
        assert_eq!(
            self.modes.basis(),
            target.basis(),
            "projection across different bases"
        );
        if self.modes == *target {
            return self.clone();
        }
        let coeffs = target
            .ids()
            .iter()
            .map(|&id| self.coeff(id))
            .collect();
        GalerkinState {
            modes: target.clone(),
            coeffs,
        }
    }

    /// Applies the semigroup of A for time t: c_h -> exp(lambda_h t) c_h.
    /// A contraction in every interpolation norm since all lambda_h < 0.
    pub fn semigroup_apply(&self, t: f64) -> Result<GalerkinState> {
        if !(t >= 0.0) {
            return Err(Error::domain(format!(
                "semigroup time must be nonnegative, got {t}"
            )));
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(self.modes.abs_eigenvalues())
            .map(|(c, &al)| c * (-al * t).exp())
            .collect();
        Ok(GalerkinState {
            modes: self.modes.clone(),
            coeffs,
        })
    }

    /// H inner product with a state on the same mode set.
    ///
    /// Panics on mismatched mode sets (programming error).
    pub fn dot(&self, other: &GalerkinState) -> f64 {
        assert!(
            self.modes == other.modes,
            "inner product across different mode sets"
        );
        let mut sum = 0.0;
        for (a, b) in self.coeffs.iter().zip(&other.coeffs) {
            sum += a * b;
        }
        sum
    }

    /// In-place `self += s * other` over the same mode set.
    ///
    /// Panics on mismatched mode sets (programming error).
    pub fn add_scaled(&mut self, s: f64, other: &GalerkinState) {
        assert!(
            self.modes == other.modes,
            "add_scaled across different mode sets"
        );
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += s * b;
        }
    }

    /// In-place scalar multiply.
    pub fn scale(&mut self, s: f64) {
        for c in &mut self.coeffs {
            *c *= s;
        }
    }

    /// Rigorous sup-norm bound: `hnorm(x, rho) * sup_h ||h||_inf *
    /// (sum_{h in full basis} |lambda_h|^{-2 rho})^{1/2}`.
    ///
    /// The full-basis tail only loosens the bound relative to the mode-set
    /// sum, so the result dominates the grid maximum of the synthesized
    /// field. Domain error when the tail series diverges at this rho.
    pub fn linf_bound(&self, rho: f64) -> Result<f64> {
        let basis = self.modes.basis();
        let tail = mode_power_sum(basis, rho)?.sqrt();
        Ok(self.hnorm(rho) * basis.sup_linf() * tail)
    }
}
