//! Quadratic Lyapunov diagnostics and exponential-moment machinery.
//!
//! The energy functional is V(x) = sqrt(theta) + eps |x|_H^2 with
//! theta = trace(Q) sup|b|^2. Its discrete generator along the scheme is
//!
//!   G V(x) = 2 eps <x, P_I F(x)> + eps |P_I B(x) P_J|_HS^2,
//!
//! and the structural drift condition asserts, on the taming set,
//!
//!   G V(x) + 2 eps^2 |(P_I B(x) P_J)* x|_U^2 + vbar <= rho V(x)
//!
//! with rho = 2 (b2 + eps theta) and the constant vbar = -2 eps b1 -
//! eps theta. `drift_condition_residual` reports the left side minus the
//! right side so tests can assert it never rises above round-off.
//!
//! The exponent functional of one path is V(Y_T) e^{-rho T} plus the
//! accumulated integral of vbar e^{-rho s} over indicated steps; its
//! exponential's mean over paths is bounded uniformly in the partition by
//! exp(exp(2 [720 max{T,rho,1} c^3]^{(720 c^3 max{T,1} + 7) iota}) /
//! min{mesh,1}^{varsigma + varsigma iota + 7 delta - 1/2}), which
//! `moment_bound_log` evaluates in iterated-log form since the bound itself
//! overflows any float format.
//!
//! `mc_estimate` runs the Monte Carlo side: per-node streaming
//! log-sum-exp of path exponents in fixed path order (so results are
//! byte-identical regardless of thread count), with batch-means confidence
//! intervals on the log scale.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::{DiscreteModel, ModelSpec};
use crate::noise::PathStream;
use crate::scheme::{walk_path, Trajectory};
use crate::spectral::{GalerkinState, Modes};
use crate::timegrid::Partition;

/// The constants of the quadratic energy functional and its drift relation.
#[derive(Debug, Clone, Copy)]
pub struct LyapunovSpec {
    epsilon: f64,
    sqrt_theta: f64,
    rho: f64,
    vbar: f64,
}

impl LyapunovSpec {
    pub fn from_model(spec: &ModelSpec) -> Self {
        LyapunovSpec {
            epsilon: spec.epsilon(),
            sqrt_theta: spec.theta().sqrt(),
            rho: spec.rho(),
            vbar: spec.vbar(),
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn vbar(&self) -> f64 {
        self.vbar
    }

    /// V(x) = sqrt(theta) + eps |x|_H^2.
    pub fn v(&self, x: &GalerkinState) -> f64 {
        let mut sq = 0.0;
        for c in x.coeffs() {
            sq += c * c;
        }
        self.sqrt_theta + self.epsilon * sq
    }
}

/// The scheme generator applied to V at x:
/// 2 eps <x, P_I F(x)> + eps |P_I B(x) P_J|_HS^2.
pub fn generator_v(dm: &DiscreteModel, x: &GalerkinState) -> Result<f64> {
    let eps = dm.spec().epsilon();
    let fx = dm.drift_f(x)?;
    let diag = dm.diffusion_diagnostics(x)?;
    Ok(2.0 * eps * x.dot(&fx) + eps * diag.hs_sq)
}

/// Everything the drift-condition check needs at one state.
#[derive(Debug, Clone, Copy)]
pub struct DriftResidual {
    /// Left side minus right side; nonpositive (up to round-off) on the
    /// taming set.
    pub residual: f64,
    /// V at the state.
    pub v: f64,
    /// Whether the state lies in the taming set for the given mesh.
    pub in_taming_set: bool,
}

/// Evaluates the drift-condition residual
/// G V(x) + 2 eps^2 |(P_I B P_J)* x|^2 + vbar - rho V(x) at x.
pub fn drift_condition_residual(
    dm: &DiscreteModel,
    x: &GalerkinState,
    h: f64,
) -> Result<DriftResidual> {
    let spec = dm.spec();
    let eps = spec.epsilon();
    let lyap = LyapunovSpec::from_model(spec);
    let fx = dm.drift_f(x)?;
    let diag = dm.diffusion_diagnostics(x)?;
    let gen = 2.0 * eps * x.dot(&fx) + eps * diag.hs_sq;
    let v = lyap.v(x);
    let residual = gen + 2.0 * eps * eps * diag.adjoint_sq + spec.vbar() - spec.rho() * v;
    Ok(DriftResidual {
        residual,
        v,
        in_taming_set: dm.in_taming_set(x, h)?,
    })
}

/// The path exponent V(Y_T) e^{-rho T} + accumulated vbar integral.
pub fn exponent_functional(lyap: &LyapunovSpec, traj: &Trajectory) -> f64 {
    let last = traj.len() - 1;
    let t = traj.times()[last];
    lyap.v(&traj.states()[last]) * (-lyap.rho * t).exp() + traj.accumulators()[last]
}

/// Initial law of the SPDE: a fixed state or independent centered Gaussian
/// coefficients with per-mode standard deviations.
#[derive(Debug, Clone)]
pub enum InitialCondition {
    Deterministic(GalerkinState),
    GaussianDiag { modes: Modes, sigmas: Vec<f64> },
}

impl InitialCondition {
    pub fn gaussian(modes: Modes, sigmas: Vec<f64>) -> Result<Self> {
        if sigmas.len() != modes.len() {
            return Err(Error::contract(format!(
                "{} standard deviations for {} modes",
                sigmas.len(),
                modes.len()
            )));
        }
        if sigmas.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::domain(
                "initial standard deviations must be finite and nonnegative",
            ));
        }
        Ok(InitialCondition::GaussianDiag { modes, sigmas })
    }

    /// Draws one initial state (stream 0 of a path's generator).
    pub fn sample(&self, rng: &mut rand_chacha::ChaCha12Rng) -> Result<GalerkinState> {
        match self {
            InitialCondition::Deterministic(x) => Ok(x.clone()),
            InitialCondition::GaussianDiag { modes, sigmas } => {
                use rand::Rng;
                let coeffs = sigmas
                    .iter()
                    .map(|s| s * rng.sample::<f64, _>(rand_distr::StandardNormal))
                    .collect();
                GalerkinState::from_coeffs(modes.clone(), coeffs)
            }
        }
    }

    /// log E[exp(V(P_I xi))] for the law restricted to `target` modes.
    ///
    /// Closed form; for the Gaussian case each surviving mode contributes
    /// -(1/2) ln(1 - 2 eps sigma^2), which requires 2 eps sigma^2 < 1.
    pub fn log_initial_moment(&self, lyap: &LyapunovSpec, target: &Modes) -> Result<f64> {
        match self {
            InitialCondition::Deterministic(x) => {
                if x.modes() == target {
                    Ok(lyap.v(x))
                } else {
                    if x.modes().basis() != target.basis() {
                        return Err(Error::contract(
                            "initial condition is on a different basis",
                        ));
                    }
                    Ok(lyap.v(&x.project(target)))
                }
            }
            InitialCondition::GaussianDiag { modes, sigmas } => {
                if modes.basis() != target.basis() {
                    return Err(Error::contract(
                        "initial condition is on a different basis",
                    ));
                }
                let mut log = lyap.sqrt_theta;
                for (&id, s) in modes.ids().iter().zip(sigmas) {
                    if !target.contains(id) {
                        continue;
                    }
                    let a = 2.0 * lyap.epsilon * s * s;
                    if a >= 1.0 {
                        return Err(Error::domain(format!(
                            "initial Gaussian moment diverges: 2 eps sigma^2 = {a} >= 1"
                        )));
                    }
                    log -= 0.5 * (-a).ln_1p();
                }
                Ok(log)
            }
        }
    }
}

/// Streaming log-sum-exp accumulator with a running max shift.
#[derive(Debug, Clone, Copy)]
struct LogSumExp {
    max: f64,
    sum: f64,
}

impl LogSumExp {
    fn new() -> Self {
        LogSumExp {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    fn push(&mut self, x: f64) {
        if x <= self.max {
            self.sum += (x - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - x).exp() + 1.0;
            self.max = x;
        }
    }

    /// log of the mean of the pushed exponentials over `n` entries.
    fn log_mean(&self, n: usize) -> f64 {
        self.max + (self.sum / n as f64).ln()
    }
}

/// Monte Carlo estimate of sup over grid nodes of
/// log E[exp(V(Y_t) e^{-rho t} + correction)].
#[derive(Debug, Clone)]
pub struct MomentEstimate {
    /// Grid nodes.
    pub times: Vec<f64>,
    /// Per-node log of the empirical mean of exponentials.
    pub log_means: Vec<f64>,
    /// Per-node batch-means 95% half-width on the log scale.
    pub ci_halfwidths: Vec<f64>,
    /// Largest per-node log-mean.
    pub sup_node_log_mean: f64,
    /// Node achieving the supremum.
    pub sup_node_index: usize,
    pub paths: usize,
    pub batches: usize,
    pub seed: u64,
}

/// Runs `paths` scheme paths and aggregates the per-node exponential-moment
/// statistics. Path p always uses the generator seeded by (seed, p), so the
/// result is independent of thread count.
pub fn mc_estimate(
    dm: &DiscreteModel,
    part: &Partition,
    ic: &InitialCondition,
    paths: usize,
    batches: usize,
    seed: u64,
) -> Result<MomentEstimate> {
    if paths == 0 {
        return Err(Error::config("at least one path is required"));
    }
    if batches < 2 || !paths.is_multiple_of(batches) {
        return Err(Error::config(format!(
            "batch count must be >= 2 and divide the path count ({paths} paths, {batches} batches)"
        )));
    }
    let lyap = LyapunovSpec::from_model(dm.spec());
    let n_nodes = part.nodes().len();
    let per_path: Vec<Vec<f64>> = (0..paths)
        .into_par_iter()
        .map(|p| -> Result<Vec<f64>> {
            let mut stream = PathStream::new(seed, p as u64);
            let xi = ic.sample(stream.stream(0))?;
            let mut exps = Vec::with_capacity(n_nodes);
            walk_path(dm, part, &xi, &mut stream, |_, t, y, accum, _| {
                exps.push(lyap.v(y) * (-lyap.rho * t).exp() + accum);
            })?;
            Ok(exps)
        })
        .collect::<Result<Vec<_>>>()?;

    let block = paths / batches;
    let mut log_means = Vec::with_capacity(n_nodes);
    let mut ci_halfwidths = Vec::with_capacity(n_nodes);
    for node in 0..n_nodes {
        let mut total = LogSumExp::new();
        let mut batch_logs = Vec::with_capacity(batches);
        let mut batch_acc = LogSumExp::new();
        for (p, path) in per_path.iter().enumerate() {
            let x = path[node];
            if !x.is_finite() {
                return Err(Error::invariant(format!(
                    "non-finite path exponent {x} at node {node}, path {p}"
                )));
            }
            total.push(x);
            batch_acc.push(x);
            if (p + 1) % block == 0 {
                batch_logs.push(batch_acc.log_mean(block));
                batch_acc = LogSumExp::new();
            }
        }
        let mean = batch_logs.iter().sum::<f64>() / batches as f64;
        let var = batch_logs
            .iter()
            .map(|b| (b - mean) * (b - mean))
            .sum::<f64>()
            / (batches as f64 - 1.0);
        let hw = student_t_975(batches - 1) * (var / batches as f64).sqrt();
        log_means.push(total.log_mean(paths));
        ci_halfwidths.push(hw);
    }
    let (sup_node_index, sup_node_log_mean) = log_means
        .iter()
        .copied()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("partition has at least two nodes");
    Ok(MomentEstimate {
        times: part.nodes().to_vec(),
        log_means,
        ci_halfwidths,
        sup_node_log_mean,
        sup_node_index,
        paths,
        batches,
        seed,
    })
}

/// Two-sided 95% Student-t quantile (0.975 one-sided) by degrees of freedom.
pub fn student_t_975(df: usize) -> f64 {
    const TABLE: [f64; 30] = [
        12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228, 2.201, 2.179,
        2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064,
        2.060, 2.056, 2.052, 2.048, 2.045, 2.042,
    ];
    if df == 0 {
        f64::INFINITY
    } else if df <= TABLE.len() {
        TABLE[df - 1]
    } else {
        1.96
    }
}

/// Parameters of the closed-form uniform exponential-moment bound.
#[derive(Debug, Clone, Copy)]
pub struct BoundParams {
    /// Taming constant; at least 1.
    pub c: f64,
    /// Moment order; at least 1.
    pub iota: f64,
    /// Time horizon T.
    pub t_end: f64,
    /// Lyapunov rate rho.
    pub rho: f64,
    /// Taming exponent delta.
    pub delta: f64,
    /// Auxiliary exponent varsigma in (0, (1 - 14 delta)/(2 + 2 iota)).
    pub varsigma: f64,
}

impl BoundParams {
    /// The parameters induced by a model on a horizon, at moment order 1
    /// and the default varsigma = delta.
    pub fn from_model(spec: &ModelSpec, t_end: f64) -> Self {
        BoundParams {
            c: spec.c(),
            iota: 1.0,
            t_end,
            rho: spec.rho(),
            delta: spec.delta(),
            varsigma: spec.delta(),
        }
    }
}

/// The bound in iterated-log form. The bound divides E[exp(V(Y_0))]; its
/// raw value overflows every float format, so callers get ln ln of it plus
/// the exact pieces it is assembled from.
#[derive(Debug, Clone, Copy)]
pub struct MomentBoundLog {
    /// ln(2 A^p) where A = 720 max{T, rho, 1} c^3 and
    /// p = (720 c^3 max{T, 1} + 7) iota.
    pub leading_exponent_log: f64,
    /// q = 1/2 - varsigma - varsigma iota - 7 delta, the mesh power.
    pub mesh_power: f64,
    /// q ln(min{mesh, 1}).
    pub mesh_log_term: f64,
    /// ln ln of the bound-to-initial-moment ratio.
    pub log_log_bound: f64,
}

/// Evaluates ln ln( bound / E[exp(V(Y_0))] ) =
/// ln( 2 A^p + q ln min{mesh,1} ) for a given mesh.
pub fn moment_bound_log(params: &BoundParams, mesh: f64) -> Result<MomentBoundLog> {
    let BoundParams {
        c,
        iota,
        t_end,
        rho,
        delta,
        varsigma,
    } = *params;
    if !(c >= 1.0) || !c.is_finite() {
        return Err(Error::domain(format!("bound needs c >= 1, got {c}")));
    }
    if !(iota >= 1.0) || !iota.is_finite() {
        return Err(Error::domain(format!("bound needs iota >= 1, got {iota}")));
    }
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::domain(format!(
            "bound needs a positive horizon, got {t_end}"
        )));
    }
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(Error::domain(format!(
            "bound needs a nonnegative rate, got {rho}"
        )));
    }
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::domain(format!(
            "bound needs a nonnegative delta, got {delta}"
        )));
    }
    if !(varsigma > 0.0) || !varsigma.is_finite() {
        return Err(Error::domain(format!(
            "bound needs a positive varsigma, got {varsigma}"
        )));
    }
    if !(mesh > 0.0) || !mesh.is_finite() {
        return Err(Error::domain(format!(
            "bound needs a positive mesh, got {mesh}"
        )));
    }
    let q = 0.5 - varsigma - varsigma * iota - 7.0 * delta;
    if !(q > 0.0) {
        return Err(Error::domain(format!(
            "mesh power 1/2 - varsigma (1 + iota) - 7 delta = {q} must be positive"
        )));
    }
    let a = 720.0 * t_end.max(rho).max(1.0) * c * c * c;
    let p = (720.0 * c * c * c * t_end.max(1.0) + 7.0) * iota;
    let leading = 2.0f64.ln() + p * a.ln();
    let mesh_log_term = q * mesh.min(1.0).ln();
    // ln(2 A^p + q ln m) = leading + ln(1 + q ln m / (2 A^p)); the relative
    // term underflows harmlessly to zero once the leading part is large.
    let rel = mesh_log_term * (-leading).exp();
    if rel <= -1.0 {
        return Err(Error::domain(
            "mesh so small the bound's inner exponent is nonpositive",
        ));
    }
    Ok(MomentBoundLog {
        leading_exponent_log: leading,
        mesh_power: q,
        mesh_log_term,
        log_log_bound: leading + rel.ln_1p(),
    })
}
