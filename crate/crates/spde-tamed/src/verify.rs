//! Runtime self-verification of the structural properties the scheme's
//! stability rests on: basis orthonormality, exact transforms, the drift
//! identities and growth bounds, noise Hilbert-Schmidt bounds, the uniform
//! embedding, taming-map boundedness, semigroup contraction, the indicator
//! switch, the Lyapunov drift condition, and agreement of the two stepper
//! formulations.
//!
//! Every check reports a measured worst value against a fixed threshold, so
//! a report is actionable without rerunning. Checks draw their random
//! states from counter-based streams seeded by the caller and are fully
//! deterministic.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::lyapunov::{drift_condition_residual, LyapunovSpec};
use crate::models::DiscreteModel;
use crate::noise::{sample_increment, PathStream};
use crate::scheme::{step, step_distributed, tame};
use crate::spectral::{GalerkinState, ModeTable, ModelKind};
use crate::timegrid::Partition;

/// One verification result: worst measured value vs its threshold.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
    pub detail: String,
}

impl CheckReport {
    fn new(name: &str, measured: f64, threshold: f64, detail: String) -> Self {
        CheckReport {
            name: name.to_string(),
            passed: measured <= threshold,
            measured,
            threshold,
            detail,
        }
    }
}

/// Sample sizes and seed for the verification suite.
#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    /// States for identity/residual checks.
    pub states: usize,
    /// Trials for the inequality checks.
    pub trials: usize,
    /// Taming-set states for the drift-condition check.
    pub taming_states: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            states: 200,
            trials: 500,
            taming_states: 100,
            seed: 0,
        }
    }
}

/// Gram matrix of the table's modes under the grid quadrature, row-major.
pub fn gram_matrix(table: &ModeTable) -> Vec<f64> {
    let n = table.modes().len();
    let nn = table.grid().node_count();
    let w = table.grid().weights();
    let comps = table.grid().kind().field_dim();
    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        let ri = table.mode_row(i);
        for j in i..n {
            let rj = table.mode_row(j);
            let mut sum = 0.0;
            for c in 0..comps {
                for t in 0..nn {
                    sum += ri[c * nn + t] * rj[c * nn + t] * w[t];
                }
            }
            gram[i * n + j] = sum;
            gram[j * n + i] = sum;
        }
    }
    gram
}

/// Largest deviation of a Gram matrix from the identity.
pub fn gram_defect(gram: &[f64], n: usize) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[i * n + j] - target).abs());
        }
    }
    worst
}

fn random_state(dm: &DiscreteModel, rng: &mut rand_chacha::ChaCha12Rng, index: usize) -> GalerkinState {
    let modes = dm.modes();
    if index == 0 {
        return dm.zero_state();
    }
    if index <= modes.len() {
        let mut x = dm.zero_state();
        x.coeffs_mut()[index - 1] = 1.0;
        return x;
    }
    let scale = match index % 3 {
        0 => 0.25,
        1 => 1.0,
        _ => 4.0,
    };
    let coeffs = (0..modes.len())
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect();
    GalerkinState::from_parts_unchecked(modes.clone(), coeffs)
}

/// Runs the full property suite on a discretized model.
pub fn run_all(dm: &DiscreteModel, part: &Partition, opts: &VerifyOptions) -> Result<Vec<CheckReport>> {
    let mut reports = Vec::new();
    let spec = dm.spec();
    let lyap = LyapunovSpec::from_model(spec);
    let gamma = spec.gamma();
    let mut streams = PathStream::new(opts.seed, u64::MAX);

    // Basis orthonormality under the grid quadrature.
    let gram = gram_matrix(dm.table());
    reports.push(CheckReport::new(
        "mode-orthonormality",
        gram_defect(&gram, dm.modes().len()),
        1e-10,
        format!("{} modes", dm.modes().len()),
    ));

    // analyze(synthesize(x)) = x and the quadrature Parseval identity.
    {
        let rng = streams.stream(1);
        let mut worst_rt = 0.0f64;
        let mut worst_pv = 0.0f64;
        for t in 0..opts.states {
            let x = random_state(dm, rng, t);
            let f = dm.table().synthesize(&x)?;
            let y = dm.table().analyze(&f)?;
            let scale = 1.0 + x.coeffs().iter().fold(0.0f64, |m, c| m.max(c.abs()));
            for (a, b) in y.coeffs().iter().zip(x.coeffs()) {
                worst_rt = worst_rt.max((a - b).abs() / scale);
            }
            let sq = dm.grid().integrate(&f.sq_len_per_node())?;
            let h0 = x.hnorm(0.0);
            worst_pv = worst_pv.max((sq - h0 * h0).abs() / (1.0 + h0 * h0));
        }
        reports.push(CheckReport::new(
            "transform-roundtrip",
            worst_rt,
            1e-10,
            format!("{} states", opts.states),
        ));
        reports.push(CheckReport::new(
            "parseval-identity",
            worst_pv,
            1e-10,
            format!("{} states", opts.states),
        ));
    }

    // Closed-form derivatives vs centered differences of the evaluation.
    {
        let rng = streams.stream(2);
        let basis = *dm.modes().basis();
        let dim = spec.kind().domain_dim();
        let h = 1e-6;
        let mut worst = 0.0f64;
        for &id in dm.modes().ids().iter().take(40) {
            for _ in 0..10 {
                let point = [rng.random::<f64>(), rng.random::<f64>()];
                for axis in 0..dim {
                    let mut hi = point;
                    let mut lo = point;
                    hi[axis] += h;
                    lo[axis] -= h;
                    let vh = basis.eval(id, hi);
                    let vl = basis.eval(id, lo);
                    let dv = basis.eval_deriv(id, axis, point);
                    for c in 0..spec.kind().field_dim() {
                        let fd = (vh[c] - vl[c]) / (2.0 * h);
                        worst = worst.max((fd - dv[c]).abs() / (1.0 + dv[c].abs()));
                    }
                }
            }
        }
        reports.push(CheckReport::new(
            "derivative-consistency",
            worst,
            1e-6,
            "centered differences, h = 1e-6".to_string(),
        ));
    }

    // Divergence of every velocity basis function (exactly solenoidal).
    if spec.kind() == ModelKind::NavierStokes2d {
        let basis = *dm.modes().basis();
        let probe = basis.modes_up_to(8)?;
        let mut worst = 0.0f64;
        let samples = 33;
        for &id in probe.ids() {
            for a in 0..samples {
                for b in 0..samples {
                    let point = [a as f64 / samples as f64, b as f64 / samples as f64];
                    let dx = basis.eval_deriv(id, 0, point);
                    let dy = basis.eval_deriv(id, 1, point);
                    worst = worst.max((dx[0] + dy[1]).abs());
                }
            }
        }
        reports.push(CheckReport::new(
            "divergence-free",
            worst,
            1e-10,
            format!("{} modes, {}x{} points", probe.len(), samples, samples),
        ));
    }

    // <x, F(x)> = eta |x|^2: exact orthogonality of the transport term.
    {
        let rng = streams.stream(3);
        let mut worst = 0.0f64;
        for t in 0..opts.states {
            let x = random_state(dm, rng, t);
            let fx = dm.drift_f(&x)?;
            let h0 = x.hnorm(0.0);
            let hg = x.hnorm(gamma);
            let scale = (1.0 + hg * hg) * (1.0 + hg * hg);
            worst = worst.max((x.dot(&fx) - spec.eta() * h0 * h0).abs() / scale);
        }
        let tol = if spec.kind() == ModelKind::Burgers {
            1e-9
        } else {
            1e-8
        };
        reports.push(CheckReport::new(
            "drift-identity",
            worst,
            tol,
            format!("{} states", opts.states),
        ));
    }

    // Inequalities: |F| growth bound, HS noise bound, uniform embedding.
    {
        let rng = streams.stream(4);
        let mut worst_growth = 0.0f64;
        let mut worst_hs = 0.0f64;
        let mut worst_linf = 0.0f64;
        let sqrt_theta = spec.theta().sqrt();
        for t in 0..opts.trials {
            let x = random_state(dm, rng, t);
            let fx = dm.drift_f(&x)?;
            let bound = dm.growth_bound(&x);
            if bound > 0.0 {
                worst_growth = worst_growth.max(fx.hnorm(0.0) / bound);
            } else {
                worst_growth = worst_growth.max(fx.hnorm(0.0));
            }
            if sqrt_theta > 0.0 {
                worst_hs = worst_hs.max(dm.hs_norm_b(&x)? / sqrt_theta);
            }
            let linf = x.linf_bound(gamma)?;
            if linf > 0.0 {
                worst_linf = worst_linf.max(dm.table().synthesize(&x)?.max_abs() / linf);
            }
        }
        let slack = 1.0 + 1e-9;
        reports.push(CheckReport::new(
            "drift-growth-bound",
            worst_growth,
            slack,
            format!("{} trials, worst |F| to bound ratio", opts.trials),
        ));
        reports.push(CheckReport::new(
            "hs-noise-bound",
            worst_hs,
            slack,
            format!("{} trials, worst HS norm to sqrt(theta) ratio", opts.trials),
        ));
        reports.push(CheckReport::new(
            "linf-embedding",
            worst_linf,
            slack,
            format!("{} trials, worst sup to embedding bound ratio", opts.trials),
        ));
    }

    // |w / (1 + |w|^2)| never exceeds 1/2, including near |w| = 1.
    {
        let rng = streams.stream(5);
        let mut worst = 0.0f64;
        for t in 0..opts.trials {
            let mut w = random_state(dm, rng, t.max(1));
            let norms = [0.5, 0.999, 1.0, 1.001, 2.0, 100.0];
            let target = norms[t % norms.len()];
            let h0 = w.hnorm(0.0);
            if h0 > 0.0 {
                w.scale(target / h0);
            }
            worst = worst.max(tame(&w).hnorm(0.0));
        }
        reports.push(CheckReport::new(
            "taming-map-bound",
            worst,
            0.5 + 1e-12,
            format!("{} trials", opts.trials),
        ));
    }

    // V(S_h x) <= V(x) and the semigroup composition law.
    {
        let rng = streams.stream(6);
        let mut worst_contract = f64::NEG_INFINITY;
        let mut worst_comp = 0.0f64;
        for t in 0..opts.states {
            let x = random_state(dm, rng, t);
            let h = 0.001 + 0.5 * rng.random::<f64>();
            let s = 0.001 + 0.5 * rng.random::<f64>();
            let xh = x.semigroup_apply(h)?;
            worst_contract = worst_contract.max(lyap.v(&xh) - lyap.v(&x));
            let two = xh.semigroup_apply(s)?;
            let one = x.semigroup_apply(h + s)?;
            let scale = 1.0 + x.coeffs().iter().fold(0.0f64, |m, c| m.max(c.abs()));
            for (a, b) in two.coeffs().iter().zip(one.coeffs()) {
                worst_comp = worst_comp.max((a - b).abs() / scale);
            }
        }
        reports.push(CheckReport::new(
            "semigroup-contraction",
            worst_contract,
            0.0,
            format!("{} states, worst V increase", opts.states),
        ));
        reports.push(CheckReport::new(
            "semigroup-composition",
            worst_comp,
            1e-12,
            format!("{} states", opts.states),
        ));
    }

    // Outside the taming set one step is exactly the semigroup alone.
    {
        let rng = streams.stream(7);
        let nodes = part.nodes().to_vec();
        let (t0, t1) = (nodes[0], nodes[1]);
        let dt = t1 - t0;
        let mut worst = 0.0f64;
        let mut found = 0;
        for t in 0..opts.states {
            let mut y = random_state(dm, rng, dm.modes().len() + 1 + t);
            let mut tries = 0;
            while dm.in_taming_set(&y, part.mesh())? && tries < 200 {
                y.scale(2.0);
                tries += 1;
            }
            if dm.in_taming_set(&y, part.mesh())? {
                continue;
            }
            found += 1;
            let dw = sample_increment(dm.noise_modes(), dt, rng)?;
            let stepped = step(dm, part, &y, t0, t1, &dw)?;
            let plain = y.semigroup_apply(dt)?;
            for (a, b) in stepped.coeffs().iter().zip(plain.coeffs()) {
                worst = worst.max((a - b).abs());
            }
        }
        if found == 0 {
            return Err(Error::invariant(
                "could not construct any state outside the taming set",
            ));
        }
        reports.push(CheckReport::new(
            "taming-indicator-switch",
            worst,
            0.0,
            format!("{found} states outside the set; exact equality required"),
        ));
    }

    // The Lyapunov drift condition on taming-set states.
    {
        let rng = streams.stream(8);
        let mut worst = f64::NEG_INFINITY;
        let mut found = 0;
        let mut t = 0;
        while found < opts.taming_states && t < opts.taming_states * 20 {
            let mut x = random_state(dm, rng, t);
            t += 1;
            let mut tries = 0;
            while !dm.in_taming_set(&x, part.mesh())? && tries < 200 {
                x.scale(0.5);
                tries += 1;
            }
            if !dm.in_taming_set(&x, part.mesh())? {
                continue;
            }
            found += 1;
            let res = drift_condition_residual(dm, &x, part.mesh())?;
            worst = worst.max(res.residual / (1.0 + res.v));
        }
        if found == 0 {
            return Err(Error::invariant(
                "could not construct any state inside the taming set",
            ));
        }
        reports.push(CheckReport::new(
            "drift-condition",
            worst,
            1e-8,
            format!("{found} taming-set states, residual over 1 + V"),
        ));
    }

    // The two formulations of one step agree at machine precision.
    {
        let rng = streams.stream(9);
        let nodes = part.nodes().to_vec();
        let (t0, t1) = (nodes[0], nodes[1]);
        let dt = t1 - t0;
        let mut worst = 0.0f64;
        for t in 0..opts.states {
            let y = random_state(dm, rng, t);
            let dw = sample_increment(dm.noise_modes(), dt, rng)?;
            let a = step(dm, part, &y, t0, t1, &dw)?;
            let b = step_distributed(dm, part, &y, t0, t1, &dw)?;
            let scale = 1.0 + a.coeffs().iter().fold(0.0f64, |m, c| m.max(c.abs()));
            for (u, v) in a.coeffs().iter().zip(b.coeffs()) {
                worst = worst.max((u - v).abs() / scale);
            }
        }
        reports.push(CheckReport::new(
            "step-variant-agreement",
            worst,
            1e-14,
            format!("{} states", opts.states),
        ));
    }

    Ok(reports)
}
