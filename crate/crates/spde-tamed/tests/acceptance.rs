//! End-to-end acceptance suite. Each test covers one gate: structural drift
//! identities, the bound inequalities, the Lyapunov drift condition, oracle
//! equivalence of the stepper, deterministic temporal order, desk-scale
//! exponential-moment boundedness for all three equations, the closed-form
//! bound evaluator against an extended-precision oracle, and byte-identical
//! reruns of the command-line binary.

mod common;

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use num_bigint::BigUint;

use spde_tamed::lyapunov::{
    drift_condition_residual, mc_estimate, moment_bound_log, BoundParams, InitialCondition,
    LyapunovSpec,
};
use spde_tamed::models::{DiffusionKind, DiscreteModel};
use spde_tamed::noise::{sample_increment, PathStream};
use spde_tamed::scheme::{simulate_path, step, step_distributed, tame};
use spde_tamed::spectral::{GalerkinState, BasisId, ModelKind, SpectralBasis};
use spde_tamed::timegrid::Partition;

/// Worst relative defect of <x, F(x)> = eta |x|^2 over random states.
fn worst_identity_defect(dm: &DiscreteModel, eta: f64, states: usize, seed: u64) -> f64 {
    let mut rng = common::rng(seed);
    let mut worst = 0.0f64;
    for t in 0..states {
        let scale = [0.25, 1.0, 4.0][t % 3];
        let x = common::random_state(dm.modes(), &mut rng, scale);
        let fx = dm.drift_f(&x).unwrap();
        let h0 = x.hnorm(0.0);
        let defect = (x.dot(&fx) - eta * h0 * h0).abs();
        worst = worst.max(defect / (1.0 + eta.abs() * h0 * h0 + h0 * fx.hnorm(0.0)));
    }
    worst
}

#[test]
fn criterion_1_structural_identities() {
    let start = Instant::now();

    // Transport term exactly orthogonal to the state (eta = 0).
    let burgers = common::burgers(16);
    let worst_b = worst_identity_defect(&burgers, 0.0, 200, 101);
    assert!(worst_b <= 1e-9, "transport orthogonality defect {worst_b:e}");

    // Linearly destabilized kinds: <x, F(x)> = eta |x|^2.
    let ks = common::ks(1.3, 7);
    let worst_k = worst_identity_defect(&ks, 1.3, 200, 102);
    assert!(worst_k <= 1e-8, "1d coercivity defect {worst_k:e}");
    let ns = common::ns(0.9, 1);
    let worst_n = worst_identity_defect(&ns, 0.9, 200, 103);
    assert!(worst_n <= 1e-8, "2d coercivity defect {worst_n:e}");

    // Every 2d velocity mode is solenoidal pointwise.
    let basis = SpectralBasis::new(ModelKind::NavierStokes2d, 0.9).unwrap();
    let probe = basis.modes_up_to(4).unwrap();
    let mut worst_div = 0.0f64;
    let samples = 33;
    for &id in probe.ids() {
        for a in 0..samples {
            for b in 0..samples {
                let p = [a as f64 / samples as f64, b as f64 / samples as f64];
                let dx = basis.eval_deriv(id, 0, p);
                let dy = basis.eval_deriv(id, 1, p);
                worst_div = worst_div.max((dx[0] + dy[1]).abs());
            }
        }
    }
    assert!(worst_div <= 1e-10, "divergence {worst_div:e}");

    assert!(start.elapsed() < Duration::from_secs(60));
    println!(
        "pass: structural identities — orthogonality {worst_b:.2e}, coercivity {worst_k:.2e} / {worst_n:.2e}, divergence {worst_div:.2e}"
    );
}

#[test]
fn criterion_2_inequality_battery() {
    let variants = [
        common::burgers(16),
        common::model(
            ModelKind::Burgers,
            0.0,
            0.5,
            16,
            8,
            0.5,
            DiffusionKind::NemytskiiRational { amp: 0.8 },
        ),
        common::ks(1.3, 16),
        common::ks(0.5, 8),
        common::ns(0.9, 2),
    ];
    let trials_per = 2000usize;
    let slack = 1.0 + 1e-9;
    let mut total = 0usize;
    let mut violations = [0usize; 4];
    // Worst ratios: |F| / growth bound, HS / sqrt(theta), sup / embedding
    // bound, and the worst tamed norm.
    let mut worst = [0.0f64; 4];
    for (vi, dm) in variants.iter().enumerate() {
        let gamma = dm.spec().gamma();
        let sqrt_theta = dm.spec().theta().sqrt();
        let mut rng = common::rng(7000 + vi as u64);
        for t in 0..trials_per {
            let scale = [0.1, 1.0, 3.0, 10.0][t % 4];
            let x = common::random_state(dm.modes(), &mut rng, scale);

            let fx = dm.drift_f(&x).unwrap();
            let gb = dm.growth_bound(&x);
            let growth_ratio = if gb > 0.0 { fx.hnorm(0.0) / gb } else { fx.hnorm(0.0) };
            if growth_ratio > slack {
                violations[0] += 1;
            }
            worst[0] = worst[0].max(growth_ratio);

            let hs_ratio = dm.hs_norm_b(&x).unwrap() / sqrt_theta;
            if hs_ratio > slack {
                violations[1] += 1;
            }
            worst[1] = worst[1].max(hs_ratio);

            let lb = x.linf_bound(gamma).unwrap();
            let sup = dm.table().synthesize(&x).unwrap().max_abs();
            let linf_ratio = if lb > 0.0 { sup / lb } else { sup };
            if linf_ratio > slack {
                violations[2] += 1;
            }
            worst[2] = worst[2].max(linf_ratio);

            // Taming factor, with norms straddling the critical value 1.
            let mut w = x.clone();
            let h0 = w.hnorm(0.0);
            if h0 > 0.0 {
                w.scale([0.5, 0.999, 1.0, 1.001, 2.0, 100.0][t % 6] / h0);
            }
            let tamed = tame(&w).hnorm(0.0);
            if tamed > 0.5 * (1.0 + 1e-12) {
                violations[3] += 1;
            }
            worst[3] = worst[3].max(tamed);

            total += 1;
        }
    }
    assert!(total >= 10_000, "{total} trials");
    assert_eq!(
        violations,
        [0; 4],
        "violations [growth, hs, linf, taming] over {total} trials"
    );
    println!(
        "pass: inequality battery — {} trials, worst ratios growth {:.6}, hs {:.6}, linf {:.6}, tamed norm {:.12}",
        total, worst[0], worst[1], worst[2], worst[3]
    );
}

#[test]
fn criterion_3_drift_condition_residuals() {
    let variants = [
        common::burgers(16),
        common::ks(1.0, 16),
        common::ns(1.0, 2),
    ];
    let part = Partition::uniform(1.0, 64).unwrap();
    let mut worst_over_all = f64::NEG_INFINITY;
    for (vi, dm) in variants.iter().enumerate() {
        let mut rng = common::rng(31 + vi as u64);
        let mut found = 0usize;
        let mut tried = 0usize;
        let mut worst = f64::NEG_INFINITY;
        while found < 500 && tried < 10_000 {
            let scale = [0.05, 0.2, 0.5, 1.0][tried % 4];
            let mut x = common::random_state(dm.modes(), &mut rng, scale);
            tried += 1;
            let mut halvings = 0;
            while !dm.in_taming_set(&x, part.mesh()).unwrap() && halvings < 200 {
                x.scale(0.5);
                halvings += 1;
            }
            if !dm.in_taming_set(&x, part.mesh()).unwrap() {
                continue;
            }
            found += 1;
            let res = drift_condition_residual(dm, &x, part.mesh()).unwrap();
            let rel = res.residual / (1.0 + res.v);
            assert!(
                res.residual <= 1e-8 * (1.0 + res.v),
                "residual {} at V = {} ({})",
                res.residual,
                res.v,
                dm.spec().kind()
            );
            worst = worst.max(rel);
        }
        assert_eq!(found, 500, "taming-set states for {}", dm.spec().kind());
        worst_over_all = worst_over_all.max(worst);
    }
    println!(
        "pass: drift condition — 500 taming-set states per equation, worst residual/(1+V) {worst_over_all:.3e}"
    );
}

#[test]
fn criterion_4_single_mode_oracle_and_step_variants() {
    // One linear mode: the walk must reproduce the scalar recursion
    // y' = (y + g/(1+g^2)) exp(lambda dt) with the same addressed draws.
    let dm = common::model(
        ModelKind::Burgers,
        0.0,
        0.5,
        1,
        1,
        0.09,
        DiffusionKind::AdditiveIdentity,
    );
    let steps = 1000u32;
    let part = Partition::uniform(1.0, steps).unwrap();
    let mut xi = dm.zero_state();
    xi.set_coeff(BasisId::Sine { n: 1 }, 0.4).unwrap();
    let mut stream = PathStream::new(424_242, 0);
    let traj = simulate_path(&dm, &part, &xi, &mut stream).unwrap();
    assert!(traj.indicators().iter().all(|&b| b), "walk left the taming set");

    let lambda = -(std::f64::consts::PI * std::f64::consts::PI);
    let sqrt_q = 0.09f64.sqrt();
    let mut replay = PathStream::new(424_242, 0);
    let mut y = 0.4f64;
    let mut worst_walk = 0.0f64;
    for (m, (t0, t1)) in part.steps().enumerate() {
        let dt = t1 - t0;
        let dw = sample_increment(dm.noise_modes(), dt, replay.stream(m as u64 + 1)).unwrap();
        let g = sqrt_q * dw.values()[0];
        y = (y + g * (1.0 / (1.0 + g * g))) * (lambda * dt).exp();
        let got = traj.states()[m + 1].coeff(BasisId::Sine { n: 1 });
        worst_walk = worst_walk.max((got - y).abs() / y.abs().max(1e-300));
    }
    assert!(worst_walk <= 1e-14, "scalar oracle deviates by {worst_walk:e}");

    // The compact and distributed forms of one step agree everywhere,
    // including outside the taming set.
    let variants = [common::burgers(8), common::ks(1.3, 6), common::ns(0.9, 2)];
    let part = Partition::uniform(1.0, 64).unwrap();
    let (t0, t1) = (part.nodes()[0], part.nodes()[1]);
    let mut worst_var = 0.0f64;
    for (vi, dm) in variants.iter().enumerate() {
        let mut rng = common::rng(4100 + vi as u64);
        for t in 0..50 {
            let scale = [0.5, 2.0, 50.0][t % 3];
            let yst = common::random_state(dm.modes(), &mut rng, scale);
            let dw = sample_increment(dm.noise_modes(), t1 - t0, &mut rng).unwrap();
            let a = step(dm, &part, &yst, t0, t1, &dw).unwrap();
            let b = step_distributed(dm, &part, &yst, t0, t1, &dw).unwrap();
            worst_var = worst_var.max(common::max_rel_diff(a.coeffs(), b.coeffs()));
        }
    }
    assert!(worst_var <= 1e-14, "step variants deviate by {worst_var:e}");
    println!(
        "pass: oracle equivalence — scalar walk {worst_walk:.2e} over {steps} steps, step variants {worst_var:.2e}"
    );
}

#[test]
fn criterion_5_deterministic_temporal_order() {
    let start = Instant::now();
    // Noise-free transport: a zero spectrum keeps every increment at zero.
    let dm = common::model(
        ModelKind::Burgers,
        0.0,
        0.5,
        8,
        8,
        0.0,
        DiffusionKind::AdditiveIdentity,
    );
    let coeffs: Vec<f64> = (1..=8).map(|n| 0.4 / (n * n) as f64).collect();
    let xi = GalerkinState::from_coeffs(dm.modes().clone(), coeffs).unwrap();

    let terminal = |steps: u32| -> GalerkinState {
        let part = Partition::uniform(1.0, steps).unwrap();
        let mut stream = PathStream::new(0, 0);
        let traj = simulate_path(&dm, &part, &xi, &mut stream).unwrap();
        assert!(
            traj.indicators().iter().all(|&b| b),
            "left the taming set at {steps} steps"
        );
        traj.states()[traj.len() - 1].clone()
    };

    let reference = terminal(8192);
    let mut points = Vec::new();
    let mut errs = Vec::new();
    for &m in &[64u32, 128, 256, 512] {
        let got = terminal(m);
        let err: f64 = got
            .coeffs()
            .iter()
            .zip(reference.coeffs())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(err > 1e-13, "error at {m} steps hit the noise floor: {err:e}");
        points.push(((1.0 / f64::from(m)).ln(), err.ln()));
        errs.push(err);
    }
    // Least-squares slope of ln(error) against ln(dt).
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    assert!(
        (0.8..=1.2).contains(&slope),
        "observed temporal order {slope} outside [0.8, 1.2]; errors {errs:?}"
    );
    assert!(start.elapsed() < Duration::from_secs(120));
    println!(
        "pass: deterministic temporal order {slope:.3} (errors {:?})",
        errs.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>()
    );
}

/// Runs the three-mesh boundedness study and checks finiteness, stability
/// under refinement, and agreement with the initial exponential moment.
fn boundedness_study(
    label: &str,
    dm: &DiscreteModel,
    sigmas: Vec<f64>,
    paths: usize,
) -> (f64, f64, Vec<f64>, Vec<f64>) {
    assert!(dm.spec().theta() <= 1.0, "{label}: theta > 1");
    let ic = InitialCondition::gaussian(dm.modes().clone(), sigmas).unwrap();
    let lyap = LyapunovSpec::from_model(dm.spec());
    let log_initial = ic.log_initial_moment(&lyap, dm.modes()).unwrap();
    let mut sups = Vec::new();
    let mut hws = Vec::new();
    for &m in &[32u32, 64, 128] {
        let part = Partition::uniform(1.0, m).unwrap();
        let est = mc_estimate(dm, &part, &ic, paths, 20, 1000 + u64::from(m)).unwrap();
        assert!(
            est.log_means.iter().all(|v| v.is_finite()),
            "{label}: non-finite log-mean at {m} steps"
        );
        sups.push(est.sup_node_log_mean);
        hws.push(est.ci_halfwidths[est.sup_node_index]);
    }
    let increase = sups[2] - sups[0];
    let allowance = 2.0 * hws[0].max(hws[2]);
    assert!(
        increase <= allowance,
        "{label}: log-mean grew by {increase} under refinement (allowance {allowance})"
    );
    let gap = (sups[2] - log_initial).abs();
    assert!(
        gap <= 1.5f64.ln(),
        "{label}: finest-mesh estimate {} vs initial moment {} (gap {gap})",
        sups[2],
        log_initial
    );
    (log_initial, gap, sups, hws)
}

#[test]
fn criterion_6_exponential_moment_boundedness_burgers() {
    let start = Instant::now();
    let dm = common::burgers(16);
    let sigmas: Vec<f64> = (1..=16).map(|n| 0.2 / f64::from(n)).collect();
    let (log_initial, gap, sups, _) = boundedness_study("burgers", &dm, sigmas, 2000);
    assert!(start.elapsed() < Duration::from_secs(600));
    println!(
        "pass: boundedness (burgers) — sups {:?}, initial moment {log_initial:.4}, finest gap {gap:.4} <= {:.4}",
        sups.iter().map(|s| format!("{s:.4}")).collect::<Vec<_>>(),
        1.5f64.ln()
    );
}

#[test]
fn criterion_7_exponential_moment_boundedness_ks_and_ns() {
    let start = Instant::now();
    let ks = common::ks(1.0, 16);
    let ks_sigmas = vec![0.15; ks.modes().len()];
    let (ks_init, ks_gap, ks_sups, _) = boundedness_study("ks", &ks, ks_sigmas, 1000);
    let ks_elapsed = start.elapsed();
    assert!(ks_elapsed < Duration::from_secs(900));

    let mid = Instant::now();
    let ns = common::ns(1.0, 4);
    let ns_sigmas = vec![0.07; ns.modes().len()];
    let (ns_init, ns_gap, ns_sups, _) = boundedness_study("ns", &ns, ns_sigmas, 1000);
    assert!(mid.elapsed() < Duration::from_secs(900));

    println!(
        "pass: boundedness (ks, ns) — ks sups {:?} gap {ks_gap:.4} (initial {ks_init:.4}); ns sups {:?} gap {ns_gap:.4} (initial {ns_init:.4})",
        ks_sups.iter().map(|s| format!("{s:.4}")).collect::<Vec<_>>(),
        ns_sups.iter().map(|s| format!("{s:.4}")).collect::<Vec<_>>()
    );
}

#[test]
fn criterion_8_bound_evaluator_magnitude_and_power_law() {
    let params = BoundParams {
        c: 2.0,
        iota: 1.0,
        t_end: 1.0,
        rho: 0.0,
        delta: 1.0 / 36.0,
        varsigma: 1.0 / 36.0,
    };
    let b = moment_bound_log(&params, 0.5).unwrap();

    // Extended-precision oracle for ln(2 * 5760^5767): take the bit length
    // of the exact integer and the logarithm of its top 64 bits.
    let n = BigUint::from(5760u32).pow(5767u32) * BigUint::from(2u32);
    let bits = n.bits();
    let top = u64::try_from(&n >> (bits - 64)).unwrap();
    let oracle = (bits - 64) as f64 * std::f64::consts::LN_2 + (top as f64).ln();
    let rel = (b.leading_exponent_log - oracle).abs() / oracle;
    assert!(
        rel <= 1e-12,
        "leading term {} vs extended-precision {} (rel {rel:e})",
        b.leading_exponent_log,
        oracle
    );
    assert_eq!(
        b.log_log_bound, b.leading_exponent_log,
        "the mesh term must vanish next to the leading term"
    );
    assert!((b.mesh_power - 0.25).abs() <= 1e-15);

    // Exact power law: halving the mesh scales the inner bound by 2^(-q).
    let expect = 2f64.powf(-b.mesh_power);
    let mut mesh = 0.5;
    let mut worst = 0.0f64;
    for _ in 0..6 {
        let coarse = moment_bound_log(&params, mesh).unwrap();
        let fine = moment_bound_log(&params, mesh / 2.0).unwrap();
        let ratio = (fine.mesh_log_term - coarse.mesh_log_term).exp();
        worst = worst.max((ratio - expect).abs());
        mesh /= 2.0;
    }
    assert!(worst <= 1e-13, "power-law defect {worst:e}");
    println!(
        "pass: bound evaluator — leading {:.11e} vs oracle {:.11e} (rel {rel:.2e}), halving defect {worst:.2e}",
        b.leading_exponent_log, oracle
    );
}

#[test]
fn criterion_9_byte_identical_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_text = r#"{
  "model": {"kind": "burgers", "covariance": {"law": "polynomial", "scale": 0.5, "rate": 2.0}},
  "partition": {"horizon": 1.0, "steps": 16},
  "modes": {"cutoff": 4},
  "paths": 40,
  "batches": 4,
  "seed": 123,
  "verify": {"states": 40, "trials": 60, "taming_states": 10}
}"#;
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, cfg_text).unwrap();
    let bin = env!("CARGO_BIN_EXE_spde-tamed");

    let cases: [(&str, &[&str], &[&str]); 4] = [
        (
            "simulate",
            &[],
            &["config.json", "moments.csv", "estimate.json", "trajectory.csv"],
        ),
        ("verify", &[], &["config.json", "verify.json"]),
        (
            "sweep",
            &["--mesh", "0.125,0.0625"],
            &["config.json", "sweep.csv", "sweep.json"],
        ),
        (
            "bound",
            &["--mesh", "0.125,0.0625"],
            &["config.json", "bound.json"],
        ),
    ];
    let run = |sub: &str, extra: &[&str], out_dir: &Path, threads: &str| {
        let out = Command::new(bin)
            .args([
                sub,
                "--config",
                cfg.to_str().unwrap(),
                "--out",
                out_dir.to_str().unwrap(),
                "--threads",
                threads,
            ])
            .args(extra)
            .env_remove("SPDE_TAMED_THREADS")
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{sub} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    };
    let mut compared = 0usize;
    for (sub, extra, files) in cases {
        let d1 = dir.path().join(format!("{sub}-a"));
        let d2 = dir.path().join(format!("{sub}-b"));
        run(sub, extra, &d1, "1");
        run(sub, extra, &d2, "3");
        for f in files {
            let a = std::fs::read(d1.join(f)).unwrap();
            let b = std::fs::read(d2.join(f)).unwrap();
            assert_eq!(a, b, "{sub}/{f} differs across worker counts");
            compared += 1;
        }
    }
    println!("pass: reproducibility — {compared} artifacts byte-identical across reruns and worker counts");
}
