//! Explicit trigonometric eigenbases of the linear operator A and the
//! coefficient-space calculus built on them.
//!
//! Three bases are supported, one per model kind:
//!
//! * Burgers (domain (0,1), scalar fields, Dirichlet): e_n(x) = sqrt(2) sin(n pi x)
//!   with eigenvalue -pi^2 n^2, n >= 1.
//! * Kuramoto-Sivashinsky (domain (0,1), scalar, periodic): phi_0 = 1,
//!   phi_k = sqrt(2) cos(2 pi k x) for k > 0, phi_k = sqrt(2) sin(2 pi |k| x)
//!   for k < 0, with eigenvalue 4 pi^2 k^2 - 16 pi^4 k^4 - eta.
//! * 2D Navier-Stokes (domain (0,1)^2, vector fields, periodic,
//!   divergence-free): two constant modes (1,0) and (0,1), and for
//!   (k,l) != (0,0) the field
//!   e_{k,l} = (k^2+l^2)^{-1/2} (l phi_k(x) phi_l(y), k phi_{-k}(x) phi_{-l}(y)),
//!   all with eigenvalue -eta - 4 pi^2 (k^2+l^2).
//!
//! Every eigenvalue is strictly negative (eta > 0 is required for the
//! periodic bases, where it is built into A). Interpolation-space norms are
//! the diagonal realization `hnorm(x, r) = (sum |lambda_h|^{2r} c_h^2)^{1/2}`.
//!
//! Mode sets carry a canonical total order — ascending |eigenvalue|, ties
//! broken lexicographically on the index — so that coefficient vectors,
//! serialized outputs, and floating-point reduction orders are all
//! deterministic.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

mod grid;
mod state;

pub use grid::{analyze, synthesize, Field, ModeTable, PhysicalGrid};
pub use state::GalerkinState;

/// Which concrete equation (and hence which eigenbasis) is in play.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum ModelKind {
    /// Stochastic Burgers on (0,1), Dirichlet sine basis.
    #[serde(rename = "burgers")]
    Burgers,
    /// Kuramoto-Sivashinsky on (0,1), periodic Fourier basis.
    #[serde(rename = "ks")]
    KuramotoSivashinsky,
    /// 2D Navier-Stokes on the torus (0,1)^2, divergence-free vector basis.
    #[serde(rename = "ns2d")]
    NavierStokes2d,
}

impl ModelKind {
    /// Dimension of the spatial domain.
    pub fn domain_dim(self) -> usize {
        match self {
            ModelKind::Burgers | ModelKind::KuramotoSivashinsky => 1,
            ModelKind::NavierStokes2d => 2,
        }
    }

    /// Number of components of a field value.
    pub fn field_dim(self) -> usize {
        match self {
            ModelKind::Burgers | ModelKind::KuramotoSivashinsky => 1,
            ModelKind::NavierStokes2d => 2,
        }
    }

    /// The config-facing name.
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Burgers => "burgers",
            ModelKind::KuramotoSivashinsky => "ks",
            ModelKind::NavierStokes2d => "ns2d",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Index of one basis function.
///
/// Only one variant is meaningful per model kind; the variants carry the
/// paper-facing index conventions described in the module docs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BasisId {
    /// Burgers mode n >= 1.
    Sine { n: u32 },
    /// Kuramoto-Sivashinsky mode k (k > 0 cosine, k < 0 sine, k = 0 constant).
    Fourier { k: i32 },
    /// Navier-Stokes mode (k, l, sigma); sigma = 1 only for the second
    /// constant field (0, 0, 1).
    Mode2d { k: i32, l: i32, sigma: u8 },
}

impl BasisId {
    /// Largest per-axis integer frequency of the mode (half-waves for the
    /// sine basis, full waves for the periodic bases).
    pub fn max_freq(self) -> u32 {
        match self {
            BasisId::Sine { n } => n,
            BasisId::Fourier { k } => k.unsigned_abs(),
            BasisId::Mode2d { k, l, .. } => k.unsigned_abs().max(l.unsigned_abs()),
        }
    }
}

impl fmt::Display for BasisId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisId::Sine { n } => write!(f, "{n}"),
            BasisId::Fourier { k } => write!(f, "{k}"),
            BasisId::Mode2d { k, l, sigma } => write!(f, "{k},{l},{sigma}"),
        }
    }
}

/// Scalar periodic family: phi_0 = 1, phi_k = sqrt(2) cos(2 pi k x) for k > 0,
/// phi_k = sqrt(2) sin(2 pi |k| x) for k < 0.
fn fourier_scalar(k: i32, x: f64) -> f64 {
    match k.cmp(&0) {
        Ordering::Equal => 1.0,
        Ordering::Greater => SQRT_2 * (2.0 * PI * f64::from(k) * x).cos(),
        Ordering::Less => SQRT_2 * (2.0 * PI * f64::from(-k) * x).sin(),
    }
}

/// d/dx phi_k = -2 pi k phi_{-k}, valid for every k including 0.
fn fourier_scalar_deriv(k: i32, x: f64) -> f64 {
    -2.0 * PI * f64::from(k) * fourier_scalar(-k, x)
}

/// One model's eigenbasis: eigenvalues, point evaluation, derivative rules,
/// canonical mode order, and the L-infinity embedding tail factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralBasis {
    kind: ModelKind,
    eta: f64,
}

impl SpectralBasis {
    /// Builds the basis. Burgers requires eta = 0 (its operator has no
    /// shift); the periodic bases require eta > 0 so that the constant modes
    /// have strictly negative eigenvalue.
    pub fn new(kind: ModelKind, eta: f64) -> Result<Self> {
        if !eta.is_finite() {
            return Err(Error::domain(format!("eta must be finite, got {eta}")));
        }
        match kind {
            ModelKind::Burgers => {
                if eta != 0.0 {
                    return Err(Error::domain(format!(
                        "burgers basis has no linear shift; eta must be 0, got {eta}"
                    )));
                }
            }
            ModelKind::KuramotoSivashinsky | ModelKind::NavierStokes2d => {
                if !(eta > 0.0) {
                    return Err(Error::domain(format!(
                        "{kind} basis requires eta > 0 (it keeps all eigenvalues negative), got {eta}"
                    )));
                }
            }
        }
        Ok(SpectralBasis { kind, eta })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Uniform bound on sup-norms of the basis functions: sqrt(2) for the
    /// scalar bases, 2 for the vector basis.
    pub fn sup_linf(&self) -> f64 {
        match self.kind {
            ModelKind::Burgers | ModelKind::KuramotoSivashinsky => SQRT_2,
            ModelKind::NavierStokes2d => 2.0,
        }
    }

    /// Validates that the id belongs to this basis kind.
    pub fn check_id(&self, id: BasisId) -> Result<()> {
        match (self.kind, id) {
            (ModelKind::Burgers, BasisId::Sine { n }) => {
                if n == 0 {
                    return Err(Error::domain("burgers mode index must satisfy n >= 1"));
                }
            }
            (ModelKind::KuramotoSivashinsky, BasisId::Fourier { .. }) => {}
            (ModelKind::NavierStokes2d, BasisId::Mode2d { k, l, sigma }) => {
                if sigma > 1 || (sigma == 1 && (k, l) != (0, 0)) {
                    return Err(Error::domain(format!(
                        "invalid ns2d mode ({k},{l},{sigma}): sigma = 1 is reserved for (0,0,1)"
                    )));
                }
            }
            (kind, id) => {
                return Err(Error::domain(format!(
                    "mode id {id:?} does not belong to the {kind} basis"
                )));
            }
        }
        Ok(())
    }

    /// Closed-form eigenvalue of the mode; strictly negative.
    pub fn eigenvalue(&self, id: BasisId) -> Result<f64> {
        self.check_id(id)?;
        Ok(match id {
            BasisId::Sine { n } => {
                let n = f64::from(n);
                -PI * PI * n * n
            }
            BasisId::Fourier { k } => {
                let k2 = f64::from(k) * f64::from(k);
                4.0 * PI * PI * k2 - 16.0 * PI.powi(4) * k2 * k2 - self.eta
            }
            BasisId::Mode2d { k, l, .. } => {
                let r2 = f64::from(k) * f64::from(k) + f64::from(l) * f64::from(l);
                -self.eta - 4.0 * PI * PI * r2
            }
        })
    }

    /// Point evaluation of the basis function; component 1 is zero for the
    /// scalar bases. `point[1]` is ignored on one-dimensional domains.
    pub fn eval(&self, id: BasisId, point: [f64; 2]) -> [f64; 2] {
        match id {
            BasisId::Sine { n } => [SQRT_2 * (f64::from(n) * PI * point[0]).sin(), 0.0],
            BasisId::Fourier { k } => [fourier_scalar(k, point[0]), 0.0],
            BasisId::Mode2d { k, l, sigma } => {
                if (k, l) == (0, 0) {
                    if sigma == 0 {
                        [1.0, 0.0]
                    } else {
                        [0.0, 1.0]
                    }
                } else {
                    let norm = (f64::from(k) * f64::from(k) + f64::from(l) * f64::from(l))
                        .sqrt()
                        .recip();
                    [
                        norm * f64::from(l)
                            * fourier_scalar(k, point[0])
                            * fourier_scalar(l, point[1]),
                        norm * f64::from(k)
                            * fourier_scalar(-k, point[0])
                            * fourier_scalar(-l, point[1]),
                    ]
                }
            }
        }
    }

    /// Closed-form partial derivative of the basis function along `axis`.
    pub fn eval_deriv(&self, id: BasisId, axis: usize, point: [f64; 2]) -> [f64; 2] {
        match id {
            BasisId::Sine { n } => {
                if axis == 0 {
                    let nf = f64::from(n);
                    [SQRT_2 * nf * PI * (nf * PI * point[0]).cos(), 0.0]
                } else {
                    [0.0, 0.0]
                }
            }
            BasisId::Fourier { k } => {
                if axis == 0 {
                    [fourier_scalar_deriv(k, point[0]), 0.0]
                } else {
                    [0.0, 0.0]
                }
            }
            BasisId::Mode2d { k, l, .. } => {
                if (k, l) == (0, 0) {
                    return [0.0, 0.0];
                }
                let norm = (f64::from(k) * f64::from(k) + f64::from(l) * f64::from(l))
                    .sqrt()
                    .recip();
                match axis {
                    0 => [
                        norm * f64::from(l)
                            * fourier_scalar_deriv(k, point[0])
                            * fourier_scalar(l, point[1]),
                        norm * f64::from(k)
                            * fourier_scalar_deriv(-k, point[0])
                            * fourier_scalar(-l, point[1]),
                    ],
                    1 => [
                        norm * f64::from(l)
                            * fourier_scalar(k, point[0])
                            * fourier_scalar_deriv(l, point[1]),
                        norm * f64::from(k)
                            * fourier_scalar(-k, point[0])
                            * fourier_scalar_deriv(-l, point[1]),
                    ],
                    _ => [0.0, 0.0],
                }
            }
        }
    }

    /// Canonical order: ascending |eigenvalue|, ties broken by the index.
    pub fn cmp_ids(&self, a: BasisId, b: BasisId) -> Ordering {
        let la = self
            .eigenvalue(a)
            .expect("cmp_ids called with an id invalid for this basis")
            .abs();
        let lb = self
            .eigenvalue(b)
            .expect("cmp_ids called with an id invalid for this basis")
            .abs();
        la.total_cmp(&lb).then_with(|| a.cmp(&b))
    }

    /// The standard finite mode set at the given per-axis cutoff: Burgers
    /// n = 1..=N; Kuramoto-Sivashinsky k = -N..=N; Navier-Stokes all (k,l)
    /// with |k|,|l| <= N plus the second constant mode.
    pub fn modes_up_to(&self, cutoff: u32) -> Result<Modes> {
        let cut = i32::try_from(cutoff).map_err(|_| Error::domain("mode cutoff too large"))?;
        let ids = match self.kind {
            ModelKind::Burgers => {
                if cutoff == 0 {
                    return Err(Error::domain("burgers cutoff must be >= 1"));
                }
                (1..=cutoff).map(|n| BasisId::Sine { n }).collect::<Vec<_>>()
            }
            ModelKind::KuramotoSivashinsky => {
                (-cut..=cut).map(|k| BasisId::Fourier { k }).collect()
            }
            ModelKind::NavierStokes2d => {
                let mut ids = vec![BasisId::Mode2d { k: 0, l: 0, sigma: 1 }];
                for k in -cut..=cut {
                    for l in -cut..=cut {
                        ids.push(BasisId::Mode2d { k, l, sigma: 0 });
                    }
                }
                ids
            }
        };
        Modes::new(*self, ids)
    }

    /// Square root of the full-basis power sum `sum_h |lambda_h|^{-2 rho}`,
    /// the tail factor of the L-infinity embedding bound.
    pub fn linf_tail_factor(&self, rho: f64) -> Result<f64> {
        Ok(mode_power_sum(self, rho)?.sqrt())
    }
}

/// A finite mode set in canonical order, shared cheaply between states.
#[derive(Debug, Clone)]
pub struct Modes {
    basis: SpectralBasis,
    ids: Arc<[BasisId]>,
    abs_lambda: Arc<[f64]>,
    max_freq: u32,
}

impl Modes {
    /// Builds a mode set: validates every id, sorts canonically, and rejects
    /// duplicates.
    pub fn new(basis: SpectralBasis, mut ids: Vec<BasisId>) -> Result<Self> {
        for &id in &ids {
            basis.check_id(id)?;
        }
        ids.sort_unstable_by(|&a, &b| basis.cmp_ids(a, b));
        for pair in ids.windows(2) {
            if pair[0] == pair[1] {
                return Err(Error::domain(format!("duplicate mode {} in mode set", pair[0])));
            }
        }
        let abs_lambda: Vec<f64> = ids
            .iter()
            .map(|&id| basis.eigenvalue(id).map(f64::abs))
            .collect::<Result<_>>()?;
        let max_freq = ids.iter().map(|id| id.max_freq()).max().unwrap_or(0);
        Ok(Modes {
            basis,
            ids: ids.into(),
            abs_lambda: abs_lambda.into(),
            max_freq,
        })
    }

    pub fn basis(&self) -> &SpectralBasis {
        &self.basis
    }

    pub fn ids(&self) -> &[BasisId] {
        &self.ids
    }

    /// Eigenvalue magnitudes in canonical order.
    pub fn abs_eigenvalues(&self) -> &[f64] {
        &self.abs_lambda
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Largest per-axis frequency over the set (0 for the empty set).
    pub fn max_freq(&self) -> u32 {
        self.max_freq
    }

    /// Position of the id in canonical order, if present.
    pub fn index_of(&self, id: BasisId) -> Option<usize> {
        if self.basis.check_id(id).is_err() {
            return None;
        }
        self.ids
            .binary_search_by(|&probe| self.basis.cmp_ids(probe, id))
            .ok()
    }

    pub fn contains(&self, id: BasisId) -> bool {
        self.index_of(id).is_some()
    }
}

impl PartialEq for Modes {
    fn eq(&self, other: &Self) -> bool {
        self.basis == other.basis
            && (Arc::ptr_eq(&self.ids, &other.ids) || self.ids == other.ids)
    }
}

/// Full-basis power sum `sum_{h} |lambda_h|^{-2s}` over the infinite basis,
/// evaluated by direct summation plus an analytic tail. Domain error when the
/// series diverges for the requested s.
///
/// Results are memoized: the sums are pure functions of (kind, eta, s) and
/// the 2D lattice case is expensive enough to matter in hot verification
/// loops.
pub(crate) fn mode_power_sum(basis: &SpectralBasis, s: f64) -> Result<f64> {
    if !s.is_finite() {
        return Err(Error::domain(format!("power-sum exponent must be finite, got {s}")));
    }
    type PowerSumCache = Mutex<HashMap<(u8, u64, u64), f64>>;
    static CACHE: OnceLock<PowerSumCache> = OnceLock::new();
    let key = (basis.kind as u8, basis.eta.to_bits(), s.to_bits());
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(&v) = cache.lock().expect("power-sum cache poisoned").get(&key) {
        return Ok(v);
    }
    let value = match basis.kind {
        ModelKind::Burgers => {
            // sum_n (pi^2 n^2)^{-2s} = pi^{-4s} zeta(4s), convergent iff 4s > 1.
            if 4.0 * s <= 1.0 {
                return Err(Error::domain(format!(
                    "burgers eigenvalue power sum diverges at exponent {s} (needs s > 1/4)"
                )));
            }
            PI.powf(-4.0 * s) * zeta(4.0 * s)
        }
        ModelKind::KuramotoSivashinsky => ks_power_sum(basis.eta, s)?,
        ModelKind::NavierStokes2d => ns_power_sum(basis.eta, s)?,
    };
    cache
        .lock()
        .expect("power-sum cache poisoned")
        .insert(key, value);
    Ok(value)
}

/// Riemann zeta for s > 1 by direct summation plus Euler-Maclaurin tail.
fn zeta(s: f64) -> f64 {
    let n = 10_000u32;
    let nf = f64::from(n);
    let mut sum = 0.0;
    for k in 1..n {
        sum += f64::from(k).powf(-s);
    }
    sum + nf.powf(1.0 - s) / (s - 1.0) + nf.powf(-s) / 2.0 + s * nf.powf(-s - 1.0) / 12.0
        - s * (s + 1.0) * (s + 2.0) * nf.powf(-s - 3.0) / 720.0
}

/// sum over the Kuramoto-Sivashinsky basis of |lambda|^{-2s}:
/// eta^{-2s} + 2 sum_{k>=1} (16 pi^4 k^4 - 4 pi^2 k^2 + eta)^{-2s}.
fn ks_power_sum(eta: f64, s: f64) -> Result<f64> {
    let p = 2.0 * s;
    if 4.0 * p <= 1.0 {
        return Err(Error::domain(format!(
            "ks eigenvalue power sum diverges at exponent {s} (needs s > 1/8)"
        )));
    }
    let a = 16.0 * PI.powi(4);
    let b = 4.0 * PI * PI;
    let n = 100_000u32;
    let mut sum = eta.powf(-p);
    for k in 1..=n {
        let k2 = f64::from(k) * f64::from(k);
        sum += 2.0 * (a * k2 * k2 - b * k2 + eta).powf(-p);
    }
    // Tail: integral of the asymptotic integrand minus the half end term.
    let nf = f64::from(n);
    let integral = 2.0
        * a.powf(-p)
        * (nf.powf(1.0 - 4.0 * p) / (4.0 * p - 1.0)
            + p * (b / a) * nf.powf(-1.0 - 4.0 * p) / (4.0 * p + 1.0)
            - p * (eta / a) * nf.powf(-3.0 - 4.0 * p) / (4.0 * p + 3.0));
    let n2 = nf * nf;
    let f_n = 2.0 * (a * n2 * n2 - b * n2 + eta).powf(-p);
    Ok(sum + integral - f_n / 2.0)
}

/// sum over the Navier-Stokes basis of |lambda|^{-2s}:
/// 2 eta^{-2s} + sum_{(k,l) != 0} (eta + 4 pi^2 (k^2+l^2))^{-2s},
/// by exact summation over the square |k|,|l| <= R plus a radial tail.
fn ns_power_sum(eta: f64, s: f64) -> Result<f64> {
    let p = 2.0 * s;
    if p <= 1.0 {
        return Err(Error::domain(format!(
            "ns2d eigenvalue power sum diverges at exponent {s} (needs s > 1/2)"
        )));
    }
    let r = 2048i64;
    let four_pi2 = 4.0 * PI * PI;
    // {k >= 1, l >= 0} is a fundamental domain of the quarter-turn rotation,
    // which partitions the nonzero lattice into orbits of size four with
    // k^2 + l^2 invariant.
    let mut quarter = 0.0;
    for k in 1..=r {
        for l in 0..=r {
            let t = eta + four_pi2 * ((k * k + l * l) as f64);
            quarter += if p == 1.0 {
                t.recip()
            } else if p == 2.0 {
                (t * t).recip()
            } else {
                t.powf(-p)
            };
        }
    }
    let tail =
        (eta + four_pi2 * ((r * r) as f64)).powf(1.0 - p) / (4.0 * PI * (p - 1.0));
    Ok(2.0 * eta.powf(-p) + 4.0 * quarter + tail)
}
