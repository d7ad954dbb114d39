//! Grid representation of the concave, nondecreasing value functions on the
//! z-line, with analytic tails: `v(z) = z + left_offset` below the grid and
//! `v(z) = right_offset` above it.  Both tail forms are exact in the limit
//! (`g - v -> 0` at both infinities, and `z - v` is nondecreasing), so a grid
//! wide enough makes the tails exact to rounding.

use crate::error::{Error, Result};
use crate::model::{ObservationModel, Structure};

/// Uniform node layout shared by every grid of one computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub z_min: f64,
    pub z_max: f64,
    pub step: f64,
}

impl GridSpec {
    pub fn new(z_min: f64, z_max: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(z_max > z_min) {
            return Err(Error::Config {
                field: "grid".into(),
                reason: format!("need z_min < z_max and step > 0, got [{z_min}, {z_max}] step {step}"),
            });
        }
        let spec = Self { z_min, z_max, step };
        if spec.len() < 16 {
            return Err(Error::Config {
                field: "grid".into(),
                reason: format!("node count {} below the minimum of 16", spec.len()),
            });
        }
        Ok(spec)
    }

    /// Symmetric default range wide enough for the expected excursion of the
    /// statistic: `Z = max(8 sigma_q sqrt(H), 4|b| + 4)` where `H` is the
    /// horizon (truncated) or a `1/c` surrogate (untruncated).
    pub fn default_for(model: &ObservationModel, b: f64, c: f64, horizon: Option<usize>) -> Self {
        let sigma = match model.structure() {
            Structure::Explicit { horizon } => (1..=horizon)
                .map(|j| model.stage(j).score_law().std_dev())
                .fold(0.0, f64::max),
            _ => model
                .cycle()
                .iter()
                .map(|s| s.score_law().std_dev())
                .fold(0.0, f64::max),
        };
        let h = horizon
            .unwrap_or_else(|| ((1.0 / c).ceil() as usize).clamp(10, 1000)) as f64;
        let z = (8.0 * sigma * h.sqrt()).max(4.0 * b.abs() + 4.0);
        let nodes = 1024;
        let step = 2.0 * z / nodes as f64;
        Self { z_min: -z, z_max: z, step }
    }

    pub fn len(&self) -> usize {
        ((self.z_max - self.z_min) / self.step).round() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, i: usize) -> f64 {
        self.z_min + i as f64 * self.step
    }
}

/// Values of one stage function (`v` or `r`) on a [`GridSpec`], plus the
/// observation-cost multiplier it was computed for.
#[derive(Debug, Clone)]
pub struct ValueGrid {
    spec: GridSpec,
    values: Vec<f64>,
    c: f64,
}

impl ValueGrid {
    pub fn new(spec: GridSpec, values: Vec<f64>, c: f64) -> Self {
        debug_assert_eq!(values.len(), spec.len());
        Self { spec, values, c }
    }

    /// The terminal function `g(z) = min(0, z)` on the grid.
    pub fn terminal(spec: GridSpec, c: f64) -> Self {
        let values = (0..spec.len()).map(|i| spec.node(i).min(0.0)).collect();
        Self::new(spec, values, c)
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn node(&self, i: usize) -> f64 {
        self.spec.node(i)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `v(z_min) - z_min`; the left tail is `z + left_offset`.
    pub fn left_offset(&self) -> f64 {
        self.values[0] - self.spec.z_min
    }

    /// The right tail is the constant `v(z_max)`.
    pub fn right_offset(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// Evaluate with linear interpolation inside the grid and the tail
    /// contract outside it.
    pub fn eval(&self, z: f64) -> f64 {
        let t = (z - self.spec.z_min) / self.spec.step;
        if t <= 0.0 {
            return z + self.left_offset();
        }
        let last = self.values.len() - 1;
        if t >= last as f64 {
            return self.right_offset();
        }
        let i = t.floor() as usize;
        let frac = t - i as f64;
        self.values[i] + frac * (self.values[i + 1] - self.values[i])
    }

    /// Pointwise `min(g, c + self)`: the Bellman step applied to an `r` grid.
    pub fn bellman_min(&self) -> ValueGrid {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &r)| (self.node(i).min(0.0)).min(self.c + r))
            .collect();
        ValueGrid::new(self.spec, values, self.c)
    }

    pub fn sup_dist(&self, other: &ValueGrid) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Checks the value-function laws: `v <= g`, nondecreasing, concave
    /// (second differences below `tol`), and `z - v` nondecreasing.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let n = self.values.len();
        for i in 0..n {
            let z = self.node(i);
            if self.values[i] > z.min(0.0) + tol {
                return Err(Error::InvariantViolation(format!(
                    "v({z}) = {} exceeds g(z) = {}",
                    self.values[i],
                    z.min(0.0)
                )));
            }
        }
        for i in 1..n {
            let dv = self.values[i] - self.values[i - 1];
            if dv < -tol {
                return Err(Error::InvariantViolation(format!(
                    "values decrease by {dv:e} at z = {}",
                    self.node(i)
                )));
            }
            if dv > self.spec.step + tol {
                return Err(Error::InvariantViolation(format!(
                    "z - v decreases at z = {}",
                    self.node(i)
                )));
            }
        }
        for i in 1..n - 1 {
            let second = self.values[i + 1] - 2.0 * self.values[i] + self.values[i - 1];
            if second > tol {
                return Err(Error::InvariantViolation(format!(
                    "convexity defect {second:e} at z = {}",
                    self.node(i)
                )));
            }
        }
        Ok(())
    }

    /// Max over nodes of `self - other`; `<= tol` certifies `self <= other`.
    pub fn max_excess_over(&self, other: &ValueGrid) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(f64::NEG_INFINITY, |m, (a, b)| m.max(a - b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> GridSpec {
        GridSpec::new(-4.0, 4.0, 0.5).unwrap()
    }

    #[test]
    fn terminal_is_g() {
        let g = ValueGrid::terminal(spec(), 0.1);
        assert_eq!(g.eval(-1.0), -1.0);
        assert_eq!(g.eval(2.0), 0.0);
        assert_eq!(g.eval(0.0), 0.0);
        g.validate(1e-12).unwrap();
    }

    #[test]
    fn tails_extend_linearly_and_flat() {
        let g = ValueGrid::terminal(spec(), 0.1);
        assert_eq!(g.eval(-10.0), -10.0);
        assert_eq!(g.eval(10.0), 0.0);
    }

    #[test]
    fn interpolation_is_exact_on_nodes_and_linear_between() {
        let g = ValueGrid::terminal(spec(), 0.1);
        assert_eq!(g.eval(-0.5), -0.5);
        assert_eq!(g.eval(-0.25), -0.25);
    }

    #[test]
    fn validate_rejects_nonconcave() {
        let s = spec();
        let mut vals: Vec<f64> = (0..s.len()).map(|i| s.node(i).min(0.0)).collect();
        vals[8] -= 0.5; // dent in the middle
        let g = ValueGrid::new(s, vals, 0.1);
        assert!(g.validate(1e-9).is_err());
    }

    #[test]
    fn grid_spec_minimum_node_count() {
        assert!(GridSpec::new(-1.0, 1.0, 0.5).is_err());
    }
}
