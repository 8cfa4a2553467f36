use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strictly increasing partition `0 = t_0 < t_1 < … < t_N = T` with `N ≥ 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TimeGrid {
    nodes: Vec<f64>,
}

impl TimeGrid {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3 nodes (N >= 2), got {}",
                nodes.len()
            )));
        }
        if nodes[0] != 0.0 {
            return Err(Error::InvalidGrid(format!(
                "first node must be 0, got {}",
                nodes[0]
            )));
        }
        if let Some(bad) = nodes.iter().find(|t| !t.is_finite()) {
            return Err(Error::InvalidGrid(format!("non-finite node {bad}")));
        }
        if let Some(w) = nodes.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(format!(
                "nodes must be strictly increasing (violated at index {})",
                w + 1
            )));
        }
        Ok(Self { nodes })
    }

    /// Equally spaced grid `t_i = i·T/N`.
    pub fn uniform(intervals: usize, horizon: f64) -> Result<Self> {
        check_grid_args(intervals, horizon)?;
        let n = intervals as f64;
        let mut nodes: Vec<f64> = (0..=intervals).map(|i| i as f64 * horizon / n).collect();
        nodes[intervals] = horizon;
        Self::new(nodes)
    }

    /// Logarithmic grid `t_i = log(1 + (i/N)(e^T − 1))`, denser toward `T`.
    pub fn logarithmic(intervals: usize, horizon: f64) -> Result<Self> {
        check_grid_args(intervals, horizon)?;
        let n = intervals as f64;
        let span = horizon.exp_m1();
        let mut nodes: Vec<f64> = (0..=intervals)
            .map(|i| (i as f64 / n * span).ln_1p())
            .collect();
        nodes[0] = 0.0;
        nodes[intervals] = horizon;
        Self::new(nodes)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Number of intervals `N`.
    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Tolerance used when matching a time against the nodes.
    pub fn tolerance(&self) -> f64 {
        1e-12 * self.horizon()
    }

    /// Index of the node equal to `t` within the grid tolerance.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let tol = self.tolerance();
        let pos = self.nodes.partition_point(|&s| s < t - tol);
        (pos < self.nodes.len() && (self.nodes[pos] - t).abs() <= tol).then_some(pos)
    }

    /// The nodes from `t0` (which must be a node) up to `T`.
    pub fn tail_from(&self, t0: f64) -> Result<&[f64]> {
        let i = self.index_of(t0).ok_or(Error::NotOnGrid(t0))?;
        Ok(&self.nodes[i..])
    }

    /// Grid with every node multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.nodes.iter().map(|t| t * factor).collect())
    }
}

fn check_grid_args(intervals: usize, horizon: f64) -> Result<()> {
    if intervals < 2 {
        return Err(Error::InvalidGrid(format!(
            "need N >= 2 intervals, got {intervals}"
        )));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidGrid(format!(
            "horizon must be positive and finite, got {horizon}"
        )));
    }
    Ok(())
}

impl TryFrom<Vec<f64>> for TimeGrid {
    type Error = Error;

    fn try_from(nodes: Vec<f64>) -> Result<Self> {
        Self::new(nodes)
    }
}

impl From<TimeGrid> for Vec<f64> {
    fn from(grid: TimeGrid) -> Self {
        grid.nodes
    }
}

impl AsRef<[f64]> for TimeGrid {
    fn as_ref(&self) -> &[f64] {
        &self.nodes
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_grid_endpoints_and_middle() {
        let g = TimeGrid::logarithmic(2, 1.0).unwrap();
        assert_eq!(g.nodes()[0], 0.0);
        assert_eq!(g.nodes()[2], 1.0);
        // log(1 + (e - 1)/2)
        assert!((g.nodes()[1] - 0.620_114_506_958_278_4).abs() < 1e-12);
    }

    #[test]
    fn log_grid_spacing_shrinks_toward_horizon() {
        let g = TimeGrid::logarithmic(50, 2.0).unwrap();
        let steps: Vec<f64> = g.nodes().windows(2).map(|w| w[1] - w[0]).collect();
        assert!(steps.windows(2).all(|s| s[1] < s[0]));
        assert_eq!(g.horizon(), 2.0);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(TimeGrid::new(vec![0.0, 1.0]).is_err());
        assert!(TimeGrid::new(vec![0.1, 0.5, 1.0]).is_err());
        assert!(TimeGrid::new(vec![0.0, 0.5, 0.5, 1.0]).is_err());
        assert!(TimeGrid::uniform(1, 1.0).is_err());
        assert!(TimeGrid::logarithmic(10, 0.0).is_err());
    }

    #[test]
    fn node_lookup_uses_relative_tolerance() {
        let g = TimeGrid::uniform(10, 1.0).unwrap();
        assert_eq!(g.index_of(0.3 + 1e-14), Some(3));
        assert_eq!(g.index_of(0.35), None);
        assert_eq!(g.tail_from(0.8).unwrap(), &g.nodes()[8..]);
        assert!(matches!(g.tail_from(0.85), Err(Error::NotOnGrid(_))));
    }

    #[test]
    fn serde_roundtrip_validates() {
        let g = TimeGrid::uniform(4, 1.0).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(serde_json::from_str::<TimeGrid>(&s).unwrap(), g);
        assert!(serde_json::from_str::<TimeGrid>("[0.0, 2.0, 1.0]").is_err());
    }
}
