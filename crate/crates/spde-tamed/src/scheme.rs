//! Tamed exponential Euler stepping for the spectral Galerkin SPDE.
//!
//! One step from a grid node t0 to the next node t1 with increment dW:
//!
//!   Y(t1) = S(t1-t0) [ Y(t0) + 1_D(Y(t0)) ( F(Y(t0)) (t1-t0)
//!                                          + G / (1 + |G|_H^2) ) ],
//!
//! where G = P_I B(Y(t0)) P_J dW, S is the semigroup diag(exp(lambda t)),
//! and 1_D is the indicator of the taming set for the partition's GLOBAL
//! mesh (never the local step size). The noise term is the bounded "tamed"
//! image w / (1 + |w|^2) of the raw stochastic increment, so a single step
//! can never leave the stability region regardless of how large the
//! Gaussian draw is.
//!
//! An algebraically equivalent formulation distributes the semigroup over
//! the bracket and tames with the norm of the un-propagated noise term;
//! `step_distributed` implements it verbatim and is used to cross-check the
//! default `step` at machine precision.
//!
//! Paths are driven by one deterministic counter-based stream per path:
//! stream 0 feeds the initial condition, stream m+1 feeds step m. Walks are
//! therefore reproducible independent of thread count or path batching.

use crate::error::{Error, Result};
use crate::models::DiscreteModel;
use crate::noise::{sample_increment, PathStream, WienerIncrement};
use crate::spectral::GalerkinState;
use crate::timegrid::Partition;

/// The taming map w -> w / (1 + |w|_H^2).
pub fn tame(w: &GalerkinState) -> GalerkinState {
    let mut sq = 0.0;
    for c in w.coeffs() {
        sq += c * c;
    }
    let mut out = w.clone();
    out.scale(1.0 / (1.0 + sq));
    out
}

fn check_step_args(
    dm: &DiscreteModel,
    part: &Partition,
    y: &GalerkinState,
    t0: f64,
    t1: f64,
    dw: &WienerIncrement,
) -> Result<f64> {
    if *y.modes() != *dm.modes() {
        return Err(Error::contract("state is not on the model's mode set"));
    }
    if *dw.modes() != *dm.noise_modes() {
        return Err(Error::contract(
            "increment is not on the model's noise mode set",
        ));
    }
    let idx = part
        .nodes()
        .iter()
        .position(|&n| n == t1)
        .ok_or_else(|| Error::contract(format!("step target {t1} is not a partition node")))?;
    if idx == 0 || part.nodes()[idx - 1] != t0 {
        return Err(Error::contract(format!(
            "step source {t0} is not the partition node preceding {t1}"
        )));
    }
    let dt = t1 - t0;
    if dw.dt() != dt {
        return Err(Error::contract(format!(
            "increment variance horizon {} does not match the step length {dt}",
            dw.dt()
        )));
    }
    Ok(dt)
}

/// One tamed exponential Euler step from node t0 to node t1.
pub fn step(
    dm: &DiscreteModel,
    part: &Partition,
    y: &GalerkinState,
    t0: f64,
    t1: f64,
    dw: &WienerIncrement,
) -> Result<GalerkinState> {
    let dt = check_step_args(dm, part, y, t0, t1, dw)?;
    let mut z = y.clone();
    if dm.in_taming_set(y, part.mesh())? {
        let f = dm.drift_f(y)?;
        z.add_scaled(dt, &f);
        let g = dm.diffusion_b(y, dw)?;
        z.add_scaled(1.0, &tame(&g));
    }
    z.semigroup_apply(dt)
}

/// The distributed formulation: the semigroup applied to each bracket term
/// separately, with the taming denominator still using the un-propagated
/// noise norm. Equal to `step` by linearity; kept as an independent route.
pub fn step_distributed(
    dm: &DiscreteModel,
    part: &Partition,
    y: &GalerkinState,
    t0: f64,
    t1: f64,
    dw: &WienerIncrement,
) -> Result<GalerkinState> {
    let dt = check_step_args(dm, part, y, t0, t1, dw)?;
    let mut out = y.clone().semigroup_apply(dt)?;
    if dm.in_taming_set(y, part.mesh())? {
        let f = dm.drift_f(y)?.semigroup_apply(dt)?;
        out.add_scaled(dt, &f);
        let g = dm.diffusion_b(y, dw)?;
        let mut sq = 0.0;
        for c in g.coeffs() {
            sq += c * c;
        }
        let gs = g.semigroup_apply(dt)?;
        out.add_scaled(1.0 / (1.0 + sq), &gs);
    }
    Ok(out)
}

/// A fully materialized scheme path on a partition.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<GalerkinState>,
    indicators: Vec<bool>,
    accumulators: Vec<f64>,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }
    pub fn states(&self) -> &[GalerkinState] {
        &self.states
    }
    /// Taming-set membership of the state at each node (global mesh).
    pub fn indicators(&self) -> &[bool] {
        &self.indicators
    }
    /// Running integral of vbar e^{-rho s} ds over steps whose indicator was
    /// on; the correction term of the exponent functional.
    pub fn accumulators(&self) -> &[f64] {
        &self.accumulators
    }
    pub fn len(&self) -> usize {
        self.times.len()
    }
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Streaming core: walks one path, invoking `visit(node_index, t, state,
/// accumulator, indicator)` at every node including the initial one.
///
/// The initial condition is projected onto the model's mode set. Step m
/// consumes stream m+1 of the path's generator (stream 0 is reserved for
/// sampling initial conditions).
pub fn walk_path<F>(
    dm: &DiscreteModel,
    part: &Partition,
    xi: &GalerkinState,
    stream: &mut PathStream,
    mut visit: F,
) -> Result<()>
where
    F: FnMut(usize, f64, &GalerkinState, f64, bool),
{
    let spec = dm.spec();
    let mesh = part.mesh();
    let rho = spec.rho();
    let vbar = spec.vbar();
    let mut y = if xi.modes() == dm.modes() {
        xi.clone()
    } else {
        if xi.modes().basis() != dm.modes().basis() {
            return Err(Error::contract(
                "initial condition is on a different basis",
            ));
        }
        xi.project(dm.modes())
    };
    let mut accum = 0.0;
    let mut inside = dm.in_taming_set(&y, mesh)?;
    visit(0, 0.0, &y, accum, inside);
    let nodes = part.nodes().to_vec();
    for m in 0..part.num_steps() {
        let (t0, t1) = (nodes[m], nodes[m + 1]);
        let dt = t1 - t0;
        let dw = sample_increment(dm.noise_modes(), dt, stream.stream(m as u64 + 1))?;
        // Reuse the indicator decided at this node for both the step and
        // the exponent correction.
        let mut z = y;
        if inside {
            let f = dm.drift_f(&z)?;
            let g = dm.diffusion_b(&z, &dw)?;
            z.add_scaled(dt, &f);
            z.add_scaled(1.0, &tame(&g));
            // integral of e^{-rho s} ds over [t0, t1], exactly.
            let decay = if rho == 0.0 {
                dt
            } else {
                ((-rho * t0).exp() - (-rho * t1).exp()) / rho
            };
            accum += vbar * decay;
        }
        y = z.semigroup_apply(dt)?;
        inside = dm.in_taming_set(&y, mesh)?;
        visit(m + 1, t1, &y, accum, inside);
    }
    Ok(())
}

/// Simulates one full path, materializing every node.
pub fn simulate_path(
    dm: &DiscreteModel,
    part: &Partition,
    xi: &GalerkinState,
    stream: &mut PathStream,
) -> Result<Trajectory> {
    let n = part.nodes().len();
    let mut traj = Trajectory {
        times: Vec::with_capacity(n),
        states: Vec::with_capacity(n),
        indicators: Vec::with_capacity(n),
        accumulators: Vec::with_capacity(n),
    };
    walk_path(dm, part, xi, stream, |_, t, y, accum, inside| {
        traj.times.push(t);
        traj.states.push(y.clone());
        traj.indicators.push(inside);
        traj.accumulators.push(accum);
    })?;
    Ok(traj)
}
