//! Finite time partitions of [0, T] and their floor calculus.
//!
//! A partition theta is a finite sorted node set containing 0 and T. The
//! stepper advances from node to node; the taming threshold depends on the
//! mesh (the largest gap); and the scheme definition uses two floor maps:
//! `floor_closed(t) = max([0,t] ∩ theta)` and
//! `floor_open(t) = max([0,t) ∩ theta)` with `floor_open(0) = 0`.
//!
//! Nodes are data: comparisons are exact on the stored values, never
//! re-derived from indices, so non-uniform grids round-trip unchanged.

use crate::error::{Error, Result};

/// A finite sorted time grid on [0, T] with `{0, T}` included.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    nodes: Vec<f64>,
    mesh: f64,
}

impl Partition {
    /// Builds a partition from an explicit node list.
    ///
    /// The list must be strictly increasing, start at exactly 0, end at some
    /// T > 0, and contain only finite values.
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::domain("partition needs at least the nodes {0, T}"));
        }
        if nodes[0] != 0.0 {
            return Err(Error::domain(format!(
                "partition must start at 0, got {}",
                nodes[0]
            )));
        }
        for pair in nodes.windows(2) {
            if !(pair[1] > pair[0]) || !pair[1].is_finite() {
                return Err(Error::domain(format!(
                    "partition nodes must be finite and strictly increasing, got {} then {}",
                    pair[0], pair[1]
                )));
            }
        }
        let mesh = nodes
            .windows(2)
            .map(|p| p[1] - p[0])
            .fold(0.0f64, f64::max);
        Ok(Partition { nodes, mesh })
    }

    /// Uniform partition `{m·T/M : m = 0..=M}`.
    pub fn uniform(horizon: f64, steps: u32) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::domain(format!("horizon must be positive, got {horizon}")));
        }
        if steps == 0 {
            return Err(Error::domain("uniform partition needs at least one step"));
        }
        // m/M is exact at the endpoints, so 0 and T land exactly on the grid.
        let m_total = f64::from(steps);
        let nodes = (0..=steps)
            .map(|m| horizon * (f64::from(m) / m_total))
            .collect();
        Self::new(nodes)
    }

    /// The horizon T (last node).
    pub fn horizon(&self) -> f64 {
        *self.nodes.last().expect("partition is non-empty")
    }

    /// All nodes, sorted ascending, starting at 0 and ending at T.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Number of steps (intervals between consecutive nodes).
    pub fn num_steps(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Maximum gap between consecutive nodes.
    pub fn mesh(&self) -> f64 {
        self.mesh
    }

    fn check_range(&self, t: f64) -> Result<()> {
        if !(0.0..=self.horizon()).contains(&t) {
            return Err(Error::domain(format!(
                "time {t} outside [0, {}]",
                self.horizon()
            )));
        }
        Ok(())
    }

    /// Largest node ≤ t.
    pub fn floor_closed(&self, t: f64) -> Result<f64> {
        self.check_range(t)?;
        let count = self.nodes.partition_point(|&node| node <= t);
        Ok(self.nodes[count - 1])
    }

    /// Largest node strictly below t, with `floor_open(0) = 0`.
    pub fn floor_open(&self, t: f64) -> Result<f64> {
        self.check_range(t)?;
        let count = self.nodes.partition_point(|&node| node < t);
        if count == 0 {
            Ok(self.nodes[0])
        } else {
            Ok(self.nodes[count - 1])
        }
    }

    /// Consecutive node pairs `(t_m, t_{m+1})` in time order.
    pub fn steps(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.windows(2).map(|p| (p[0], p[1]))
    }
}
