//! Physical-space grids, quadrature, and the transforms between coefficient
//! space and point values.
//!
//! The periodic bases use the rectangle rule on n uniform nodes j/n, which
//! integrates every harmonic exp(2 pi i q x) with |q| < n exactly. The sine
//! basis lives on half-waves sin(q pi x) whose plain moments (2/(q pi) for
//! odd q) no translation-invariant uniform rule reproduces, so its grid uses
//! closed uniform nodes j/m, threefold oversampled, with positive weights
//! computed once per grid as the truncated-SVD minimum-norm solution of the
//! exactness conditions on the half-wave family {cos(q pi x), sin(q pi x)};
//! exactness, positivity, and normalization are verified at construction.
//!
//! Products of basis functions stay inside these families with added
//! frequencies, so a grid built for the integrand band integrates Galerkin
//! projections of quadratic nonlinearities exactly (no aliasing error).
//! Positive weights make every analyze a genuine orthogonal projection in
//! the node inner product, so projected fields never gain norm.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};

use super::{GalerkinState, ModelKind, Modes};

/// Uniform quadrature grid on (0,1)^d with per-axis nodes and weights.
#[derive(Debug)]
pub struct PhysicalGrid {
    kind: ModelKind,
    axis_nodes: Vec<f64>,
    axis_weights: Vec<f64>,
    exact_freq: u32,
    node_coords: Vec<[f64; 2]>,
    node_weights: Vec<f64>,
}

impl PhysicalGrid {
    /// Builds a grid whose quadrature is exact for every integrand of
    /// per-axis frequency band at most `band` (in the model's frequency
    /// units: half-waves for the sine basis, full waves for the periodic
    /// ones), sized with ample margin below the exactness limit.
    pub fn for_integrand_band(kind: ModelKind, band: u32) -> Result<Self> {
        let (axis_nodes, axis_weights, exact_freq) = match kind {
            ModelKind::Burgers => {
                let (nodes, weights) = half_range_rule(band)?;
                (nodes, weights, band)
            }
            ModelKind::KuramotoSivashinsky | ModelKind::NavierStokes2d => {
                let n = 2 * band as usize + 2;
                let nodes: Vec<f64> = (0..n).map(|j| j as f64 / n as f64).collect();
                let weights = vec![1.0 / n as f64; n];
                (nodes, weights, (n - 1) as u32)
            }
        };
        let (node_coords, node_weights) = match kind.domain_dim() {
            1 => (
                axis_nodes.iter().map(|&x| [x, 0.0]).collect(),
                axis_weights.clone(),
            ),
            _ => {
                let n = axis_nodes.len();
                let mut coords = Vec::with_capacity(n * n);
                let mut weights = Vec::with_capacity(n * n);
                for j1 in 0..n {
                    for j2 in 0..n {
                        coords.push([axis_nodes[j1], axis_nodes[j2]]);
                        weights.push(axis_weights[j1] * axis_weights[j2]);
                    }
                }
                (coords, weights)
            }
        };
        Ok(PhysicalGrid {
            kind,
            axis_nodes,
            axis_weights,
            exact_freq,
            node_coords,
            node_weights,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    /// Highest per-axis integer frequency integrated exactly.
    pub fn exact_freq(&self) -> u32 {
        self.exact_freq
    }

    /// Number of nodes along one axis.
    pub fn axis_len(&self) -> usize {
        self.axis_nodes.len()
    }

    /// Total number of grid nodes.
    pub fn node_count(&self) -> usize {
        self.node_coords.len()
    }

    /// Node coordinates ([x, 0] on one-dimensional domains), row-major in
    /// (axis-0 index, axis-1 index).
    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.node_coords
    }

    /// Quadrature weight per node, same order as `nodes`.
    pub fn weights(&self) -> &[f64] {
        &self.node_weights
    }

    pub fn axis_nodes(&self) -> &[f64] {
        &self.axis_nodes
    }

    pub fn axis_weights(&self) -> &[f64] {
        &self.axis_weights
    }

    /// Quadrature of a scalar sampled on the grid nodes.
    pub fn integrate(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.node_count() {
            return Err(Error::contract(format!(
                "integrand has {} values, grid has {} nodes",
                values.len(),
                self.node_count()
            )));
        }
        let mut sum = 0.0;
        for (v, w) in values.iter().zip(&self.node_weights) {
            sum += v * w;
        }
        Ok(sum)
    }
}

/// Builds the closed-grid rule for the sine basis: nodes x_j = j/m with
/// m = 6k + 4 panels and weights exact for cos(q pi x), q = 0..=k, and
/// sin(q pi x), q = 1..=k.
///
/// The half-range trigonometric family is numerically rank-deficient on
/// equispaced nodes (its trailing singular values decay below machine
/// precision), so the square exactness system produces wild oscillating
/// weights. Oversampling threefold and taking the truncated-SVD
/// minimum-norm solution instead yields a stable rule whose weights come
/// out strictly positive with unit sum; all three properties are verified
/// here and any failure is an invariant error.
fn half_range_rule(k: u32) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = k as usize;
    let m = 6 * k + 4;
    let nodes: Vec<f64> = (0..=m).map(|j| j as f64 / m as f64).collect();
    let p = 2 * k + 1;
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(p);
    let mut rhs = Vec::with_capacity(p);
    for q in 0..=k {
        let qf = q as f64;
        cols.push(nodes.iter().map(|&x| (qf * PI * x).cos()).collect());
        rhs.push(if q == 0 { 1.0 } else { 0.0 });
    }
    for q in 1..=k {
        let qf = q as f64;
        cols.push(nodes.iter().map(|&x| (qf * PI * x).sin()).collect());
        rhs.push(if q % 2 == 1 { 2.0 / (qf * PI) } else { 0.0 });
    }
    let weights = min_norm_solve(cols, &rhs, 1e-12)?;
    // Independent verification against the analytic moments.
    let mut worst = 0.0f64;
    for q in 0..=k {
        let qf = q as f64;
        let mut c = 0.0;
        let mut s = 0.0;
        for (j, &x) in nodes.iter().enumerate() {
            c += weights[j] * (qf * PI * x).cos();
            s += weights[j] * (qf * PI * x).sin();
        }
        let c_exact = if q == 0 { 1.0 } else { 0.0 };
        let s_exact = if q % 2 == 1 { 2.0 / (qf * PI) } else { 0.0 };
        worst = worst.max((c - c_exact).abs()).max((s - s_exact).abs());
    }
    if worst > 1e-10 {
        return Err(Error::invariant(format!(
            "sine quadrature weights failed the moment check (residual {worst:.2e})"
        )));
    }
    if weights.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::invariant(
            "sine quadrature produced a nonpositive weight",
        ));
    }
    Ok((nodes, weights))
}

/// Minimum-norm solution of the underdetermined system columns^T w = rhs
/// via one-sided Jacobi SVD, treating singular values below `rel_cut` times
/// the largest as zero. The matrices here are small trigonometric moment
/// systems (a few hundred columns), so cyclic Jacobi sweeps are plenty fast
/// and numerically robust against the family's near rank deficiency.
fn min_norm_solve(mut cols: Vec<Vec<f64>>, rhs: &[f64], rel_cut: f64) -> Result<Vec<f64>> {
    let p = cols.len();
    debug_assert_eq!(rhs.len(), p);
    let n = cols[0].len();
    // Accumulated right rotations: v[i] is the i-th column of V in
    // M = U diag(sigma) V^T, where M's columns are the moment vectors.
    let mut v: Vec<Vec<f64>> = (0..p)
        .map(|i| {
            let mut e = vec![0.0; p];
            e[i] = 1.0;
            e
        })
        .collect();
    let mut converged = false;
    for _sweep in 0..60 {
        let mut rotated = false;
        for i in 0..p {
            for j in i + 1..p {
                let (lo, hi) = cols.split_at_mut(j);
                let ci = &mut lo[i];
                let cj = &mut hi[0];
                let mut aii = 0.0;
                let mut ajj = 0.0;
                let mut aij = 0.0;
                for t in 0..n {
                    aii += ci[t] * ci[t];
                    ajj += cj[t] * cj[t];
                    aij += ci[t] * cj[t];
                }
                if aij * aij <= 1e-30 * aii * ajj {
                    continue;
                }
                rotated = true;
                let zeta = (ajj - aii) / (2.0 * aij);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for t_i in 0..n {
                    let a = ci[t_i];
                    let b = cj[t_i];
                    ci[t_i] = cs * a - sn * b;
                    cj[t_i] = sn * a + cs * b;
                }
                let (vlo, vhi) = v.split_at_mut(j);
                let vi = &mut vlo[i];
                let vj = &mut vhi[0];
                for t_i in 0..p {
                    let a = vi[t_i];
                    let b = vj[t_i];
                    vi[t_i] = cs * a - sn * b;
                    vj[t_i] = sn * a + cs * b;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::invariant(
            "quadrature weight factorization did not converge",
        ));
    }
    let sigmas: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let sigma_max = sigmas.iter().fold(0.0f64, |m, s| m.max(*s));
    if sigma_max == 0.0 {
        return Err(Error::invariant("zero quadrature moment system"));
    }
    let cut = sigma_max * rel_cut;
    let mut w = vec![0.0; n];
    for i in 0..p {
        if sigmas[i] <= cut {
            continue;
        }
        let beta: f64 = v[i].iter().zip(rhs).map(|(a, b)| a * b).sum();
        let scale = beta / (sigmas[i] * sigmas[i]);
        for (wt, c) in w.iter_mut().zip(&cols[i]) {
            *wt += scale * c;
        }
    }
    Ok(w)
}

/// Point values of a (vector) field on a grid, component-major:
/// `values[c * nodes + j]` is component c at node j.
///
/// `band` is the per-axis frequency band for which quadrature against this
/// field is exact; `None` marks fields that are not band-limited (e.g.
/// rational functions of a state), for which the grid quadrature *is* the
/// declared definition of projections.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Arc<PhysicalGrid>,
    comps: usize,
    values: Vec<f64>,
    band: Option<u32>,
}

impl Field {
    pub fn zeros(grid: Arc<PhysicalGrid>, comps: usize, band: Option<u32>) -> Self {
        let values = vec![0.0; comps * grid.node_count()];
        Field {
            grid,
            comps,
            values,
            band,
        }
    }

    pub fn grid(&self) -> &Arc<PhysicalGrid> {
        &self.grid
    }

    pub fn comps(&self) -> usize {
        self.comps
    }

    pub fn band(&self) -> Option<u32> {
        self.band
    }

    pub fn set_band(&mut self, band: Option<u32>) {
        self.band = band;
    }

    /// One component's node values.
    pub fn comp(&self, c: usize) -> &[f64] {
        let nn = self.grid.node_count();
        &self.values[c * nn..(c + 1) * nn]
    }

    pub fn comp_mut(&mut self, c: usize) -> &mut [f64] {
        let nn = self.grid.node_count();
        &mut self.values[c * nn..(c + 1) * nn]
    }

    /// All values, component-major.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Largest absolute value over all components and nodes.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Pointwise squared Euclidean length of the field value per node.
    pub fn sq_len_per_node(&self) -> Vec<f64> {
        let nn = self.grid.node_count();
        let mut out = vec![0.0; nn];
        for c in 0..self.comps {
            for (o, v) in out.iter_mut().zip(self.comp(c)) {
                *o += v * v;
            }
        }
        out
    }
}

/// Cached point values (and derivatives) of a mode set on a grid: the
/// synthesize/analyze engine. Rows are stored mode-major so transforms are
/// plain dot products and run in canonical mode order.
#[derive(Debug)]
pub struct ModeTable {
    modes: Modes,
    grid: Arc<PhysicalGrid>,
    row_len: usize,
    rows: Vec<f64>,
    weighted_rows: Vec<f64>,
    deriv_rows: Vec<Vec<f64>>,
}

impl ModeTable {
    /// Tabulates the mode set on the grid. Resolution error when the grid
    /// cannot even integrate products of a mode with itself.
    pub fn new(modes: Modes, grid: Arc<PhysicalGrid>) -> Result<Self> {
        if grid.kind() != modes.basis().kind() {
            return Err(Error::contract(format!(
                "grid kind {} does not match basis kind {}",
                grid.kind(),
                modes.basis().kind()
            )));
        }
        if modes.max_freq() > grid.exact_freq() {
            return Err(Error::resolution(format!(
                "mode set has frequency {} beyond grid exactness limit {}",
                modes.max_freq(),
                grid.exact_freq()
            )));
        }
        let comps = grid.kind().field_dim();
        let nn = grid.node_count();
        let row_len = comps * nn;
        let basis = *modes.basis();
        let mut rows = vec![0.0; modes.len() * row_len];
        let mut weighted_rows = vec![0.0; modes.len() * row_len];
        let mut deriv_rows = vec![vec![0.0; modes.len() * row_len]; grid.kind().domain_dim()];
        for (mi, &id) in modes.ids().iter().enumerate() {
            for (j, &point) in grid.nodes().iter().enumerate() {
                let v = basis.eval(id, point);
                for (c, &vc) in v.iter().enumerate().take(comps) {
                    let at = mi * row_len + c * nn + j;
                    rows[at] = vc;
                    weighted_rows[at] = vc * grid.weights()[j];
                }
                for (axis, dr) in deriv_rows.iter_mut().enumerate() {
                    let dv = basis.eval_deriv(id, axis, point);
                    for c in 0..comps {
                        dr[mi * row_len + c * nn + j] = dv[c];
                    }
                }
            }
        }
        Ok(ModeTable {
            modes,
            grid,
            row_len,
            rows,
            weighted_rows,
            deriv_rows,
        })
    }

    pub fn modes(&self) -> &Modes {
        &self.modes
    }

    pub fn grid(&self) -> &Arc<PhysicalGrid> {
        &self.grid
    }

    /// Tabulated values of one mode (component-major row).
    pub fn mode_row(&self, index: usize) -> &[f64] {
        &self.rows[index * self.row_len..(index + 1) * self.row_len]
    }

    fn check_state(&self, x: &GalerkinState) -> Result<()> {
        if *x.modes() != self.modes {
            return Err(Error::contract(
                "state mode set does not match the transform table",
            ));
        }
        Ok(())
    }

    /// Exact evaluation of the trigonometric polynomial at the grid nodes.
    pub fn synthesize(&self, x: &GalerkinState) -> Result<Field> {
        self.check_state(x)?;
        let mut values = vec![0.0; self.row_len];
        for (mi, &c) in x.coeffs().iter().enumerate() {
            if c != 0.0 {
                for (v, r) in values.iter_mut().zip(self.mode_row(mi)) {
                    *v += c * r;
                }
            }
        }
        Ok(Field {
            grid: self.grid.clone(),
            comps: self.grid.kind().field_dim(),
            values,
            band: Some(self.modes.max_freq()),
        })
    }

    /// Exact evaluation of the partial derivative along `axis`.
    pub fn synthesize_deriv(&self, x: &GalerkinState, axis: usize) -> Result<Field> {
        self.check_state(x)?;
        if axis >= self.deriv_rows.len() {
            return Err(Error::domain(format!(
                "axis {axis} out of range for a {}-dimensional domain",
                self.deriv_rows.len()
            )));
        }
        let dr = &self.deriv_rows[axis];
        let mut values = vec![0.0; self.row_len];
        for (mi, &c) in x.coeffs().iter().enumerate() {
            if c != 0.0 {
                let row = &dr[mi * self.row_len..(mi + 1) * self.row_len];
                for (v, r) in values.iter_mut().zip(row) {
                    *v += c * r;
                }
            }
        }
        Ok(Field {
            grid: self.grid.clone(),
            comps: self.grid.kind().field_dim(),
            values,
            band: Some(self.modes.max_freq()),
        })
    }

    /// Quadrature realization of the inner products with each table mode:
    /// the Galerkin projection of the field onto the table's mode set.
    ///
    /// Band-limited fields are checked against the grid's exactness limit;
    /// fields with `band = None` are projected by definition of the grid
    /// quadrature.
    pub fn analyze(&self, field: &Field) -> Result<GalerkinState> {
        if !Arc::ptr_eq(field.grid(), &self.grid) {
            return Err(Error::contract("field grid does not match the transform table"));
        }
        if let Some(band) = field.band() {
            if band + self.modes.max_freq() > self.grid.exact_freq() {
                return Err(Error::resolution(format!(
                    "integrand band {} + mode band {} exceeds grid exactness limit {}",
                    band,
                    self.modes.max_freq(),
                    self.grid.exact_freq()
                )));
            }
        }
        let mut coeffs = vec![0.0; self.modes.len()];
        for (mi, c) in coeffs.iter_mut().enumerate() {
            let row = &self.weighted_rows[mi * self.row_len..(mi + 1) * self.row_len];
            let mut sum = 0.0;
            for (v, r) in field.values().iter().zip(row) {
                sum += v * r;
            }
            *c = sum;
        }
        Ok(GalerkinState::from_parts_unchecked(
            self.modes.clone(),
            coeffs,
        ))
    }
}

/// One-shot synthesize for callers without a prebuilt table.
pub fn synthesize(x: &GalerkinState, grid: &Arc<PhysicalGrid>) -> Result<Field> {
    ModeTable::new(x.modes().clone(), grid.clone())?.synthesize(x)
}

/// One-shot analyze onto `target` for callers without a prebuilt table.
pub fn analyze(field: &Field, target: &Modes) -> Result<GalerkinState> {
    ModeTable::new(target.clone(), field.grid().clone())?.analyze(field)
}
