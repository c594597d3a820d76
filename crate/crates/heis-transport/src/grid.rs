//! Regular node-centered grids over an ambient box of H^n, scalar and
//! horizontal-vector fields sampled on them, and multilinear interpolation.
//!
//! Nodes sit at `low + i * h` per axis; integrals are plain node sums times
//! the cell volume, which keeps the gradient/divergence pair exactly adjoint.

use crate::error::{HeisError, Result};
use crate::group::{Coords, GroupPoint};
use serde::{Deserialize, Serialize};

/// A uniform node grid on an axis-aligned box of R^{2n+1}.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Grid {
    pub low: Vec<f64>,
    pub high: Vec<f64>,
    /// Nodes per axis (>= 4).
    pub res: Vec<usize>,
}

impl Grid {
    pub fn new(low: Vec<f64>, high: Vec<f64>, res: Vec<usize>) -> Result<Self> {
        let dim = low.len();
        if dim < 3 || dim % 2 == 0 || high.len() != dim || res.len() != dim {
            return Err(HeisError::InvalidArgument(format!(
                "grid needs 2n+1 >= 3 matching low/high/res entries, got {dim}/{}/{}",
                high.len(),
                res.len()
            )));
        }
        for a in 0..dim {
            if !(high[a] > low[a]) {
                return Err(HeisError::InvalidArgument(format!(
                    "degenerate box on axis {a}: [{}, {}]",
                    low[a], high[a]
                )));
            }
            if res[a] < 4 {
                return Err(HeisError::InvalidArgument(format!(
                    "grid resolution must be >= 4 per axis, got {} on axis {a}",
                    res[a]
                )));
            }
        }
        Ok(Self { low, high, res })
    }

    /// Cubic grid over a box with the same resolution per axis.
    pub fn cubic(low: [f64; 3], high: [f64; 3], res: usize) -> Result<Self> {
        Self::new(low.to_vec(), high.to_vec(), vec![res; 3])
    }

    pub fn dim(&self) -> usize {
        self.low.len()
    }

    pub fn n(&self) -> usize {
        (self.dim() - 1) / 2
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.high[axis] - self.low[axis]) / (self.res[axis] - 1) as f64
    }

    /// Volume element attached to each node.
    pub fn cellvol(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    pub fn node_count(&self) -> usize {
        self.res.iter().product()
    }

    /// Row-major flat index (last axis fastest).
    pub fn flat(&self, multi: &[usize]) -> usize {
        let mut idx = 0;
        for (a, &i) in multi.iter().enumerate() {
            idx = idx * self.res[a] + i;
        }
        idx
    }

    pub fn multi(&self, mut flat: usize) -> Vec<usize> {
        let mut multi = vec![0usize; self.dim()];
        for a in (0..self.dim()).rev() {
            multi[a] = flat % self.res[a];
            flat /= self.res[a];
        }
        multi
    }

    pub fn node_coord(&self, axis: usize, i: usize) -> f64 {
        self.low[axis] + self.spacing(axis) * i as f64
    }

    pub fn node_point(&self, flat: usize) -> GroupPoint {
        let multi = self.multi(flat);
        let coords: Coords = (0..self.dim())
            .map(|a| self.node_coord(a, multi[a]))
            .collect();
        GroupPoint::new(coords).expect("grid nodes are finite")
    }

    /// True when the point lies inside the box, within `slack` per axis.
    pub fn contains(&self, p: &GroupPoint, slack: f64) -> bool {
        p.coords()
            .iter()
            .enumerate()
            .all(|(a, &c)| c >= self.low[a] - slack && c <= self.high[a] + slack)
    }

    /// Base multi-index and fractional offsets of the cell containing `p`,
    /// with coordinates clamped to the box.
    pub fn locate_clamped(&self, p: &GroupPoint) -> (Vec<usize>, Vec<f64>) {
        let dim = self.dim();
        let mut base = vec![0usize; dim];
        let mut frac = vec![0.0; dim];
        for a in 0..dim {
            let h = self.spacing(a);
            let t = ((p.coords()[a] - self.low[a]) / h).clamp(0.0, (self.res[a] - 1) as f64);
            let i = (t.floor() as usize).min(self.res[a] - 2);
            base[a] = i;
            frac[a] = t - i as f64;
        }
        (base, frac)
    }

    /// Nearest node to `p` (clamped), as a flat index.
    pub fn nearest_node(&self, p: &GroupPoint) -> usize {
        let dim = self.dim();
        let mut multi = vec![0usize; dim];
        for a in 0..dim {
            let h = self.spacing(a);
            let t = ((p.coords()[a] - self.low[a]) / h).round();
            multi[a] = (t.max(0.0) as usize).min(self.res[a] - 1);
        }
        self.flat(&multi)
    }
}

/// A scalar field sampled on grid nodes.
#[derive(Debug, Clone)]
pub struct GridField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![0.0; grid.node_count()],
        }
    }

    pub fn from_fn(grid: &Grid, mut f: impl FnMut(&GroupPoint) -> f64) -> Self {
        let values = (0..grid.node_count())
            .map(|k| f(&grid.node_point(k)))
            .collect();
        Self {
            grid: grid.clone(),
            values,
        }
    }

    /// Node-sum quadrature of the field.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cellvol()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Shifts the field to exact zero node-mean.
    pub fn project_zero_mean(&mut self) {
        let m = self.mean();
        for v in &mut self.values {
            *v -= m;
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Multilinear interpolation at a point, clamped to the box.
    pub fn interpolate(&self, p: &GroupPoint) -> f64 {
        let (base, frac) = self.grid.locate_clamped(p);
        let dim = self.grid.dim();
        let corners = 1usize << dim;
        let mut acc = 0.0;
        let mut multi = vec![0usize; dim];
        for c in 0..corners {
            let mut weight = 1.0;
            for a in 0..dim {
                if (c >> a) & 1 == 1 {
                    weight *= frac[a];
                    multi[a] = base[a] + 1;
                } else {
                    weight *= 1.0 - frac[a];
                    multi[a] = base[a];
                }
            }
            if weight != 0.0 {
                acc += weight * self.values[self.grid.flat(&multi)];
            }
        }
        acc
    }
}

/// A horizontal vector field sampled on grid nodes, stored per frame
/// component.
#[derive(Debug, Clone)]
pub struct HorizontalGridField {
    pub grid: Grid,
    /// 2n component arrays, one value per node.
    pub components: Vec<Vec<f64>>,
}

impl HorizontalGridField {
    pub fn zeros(grid: &Grid) -> Self {
        let n2 = 2 * grid.n();
        Self {
            grid: grid.clone(),
            components: vec![vec![0.0; grid.node_count()]; n2],
        }
    }

    pub fn from_fn(grid: &Grid, mut f: impl FnMut(&GroupPoint) -> Vec<f64>) -> Self {
        let mut field = Self::zeros(grid);
        for k in 0..grid.node_count() {
            let v = f(&grid.node_point(k));
            for (c, comp) in field.components.iter_mut().enumerate() {
                comp[k] = v[c];
            }
        }
        field
    }

    /// Frame norm at one node.
    pub fn norm_at(&self, k: usize) -> f64 {
        self.components
            .iter()
            .map(|c| c[k] * c[k])
            .sum::<f64>()
            .sqrt()
    }

    /// Scalar field of pointwise frame norms.
    pub fn norm_field(&self) -> GridField {
        let mut out = GridField::zeros(&self.grid);
        for k in 0..self.grid.node_count() {
            out.values[k] = self.norm_at(k);
        }
        out
    }

    /// L^p norm (sum |w|^p cellvol)^{1/p}.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let s: f64 = (0..self.grid.node_count())
            .map(|k| self.norm_at(k).powf(p))
            .sum();
        (s * self.grid.cellvol()).powf(1.0 / p)
    }

    /// Multilinear interpolation of all components at a point.
    pub fn interpolate(&self, p: &GroupPoint) -> Coords {
        let (base, frac) = self.grid.locate_clamped(p);
        let dim = self.grid.dim();
        let corners = 1usize << dim;
        let mut acc: Coords = smallvec::smallvec![0.0; self.components.len()];
        let mut multi = vec![0usize; dim];
        for c in 0..corners {
            let mut weight = 1.0;
            for a in 0..dim {
                if (c >> a) & 1 == 1 {
                    weight *= frac[a];
                    multi[a] = base[a] + 1;
                } else {
                    weight *= 1.0 - frac[a];
                    multi[a] = base[a];
                }
            }
            if weight != 0.0 {
                let k = self.grid.flat(&multi);
                for (j, comp) in self.components.iter().enumerate() {
                    acc[j] += weight * comp[k];
                }
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn indexing_round_trip() {
        let g = Grid::new(vec![0.0, 0.0, 0.0], vec![1.0, 2.0, 3.0], vec![5, 6, 7]).unwrap();
        assert_eq!(g.node_count(), 210);
        for k in [0usize, 1, 17, 209] {
            assert_eq!(g.flat(&g.multi(k)), k);
        }
        assert_abs_diff_eq!(g.spacing(1), 0.4);
        assert_abs_diff_eq!(g.cellvol(), 0.25 * 0.4 * 0.5);
    }

    #[test]
    fn interpolation_reproduces_multilinear_functions() {
        let g = Grid::cubic([0.0, 0.0, 0.0], [1.0, 1.0, 1.0], 5).unwrap();
        let f = GridField::from_fn(&g, |p| {
            let c = p.coords();
            2.0 + c[0] - 3.0 * c[1] * c[2]
        });
        let p = GroupPoint::xyz(0.31, 0.77, 0.12);
        assert_abs_diff_eq!(
            f.interpolate(&p),
            2.0 + 0.31 - 3.0 * 0.77 * 0.12,
            epsilon = 1e-12
        );
        // clamped outside
        let q = GroupPoint::xyz(-1.0, 0.5, 0.5);
        assert_abs_diff_eq!(f.interpolate(&q), 2.0 + 0.0 - 3.0 * 0.5 * 0.5, epsilon = 1e-12);
    }

    #[test]
    fn integral_of_constant() {
        let g = Grid::cubic([0.0, 0.0, 0.0], [1.0, 1.0, 1.0], 9).unwrap();
        let f = GridField::from_fn(&g, |_| 2.0);
        // node-sum quadrature of a constant over the box counts res^3 cells
        let expected = 2.0 * g.cellvol() * g.node_count() as f64;
        assert_abs_diff_eq!(f.integral(), expected, epsilon = 1e-12);
    }

    #[test]
    fn vector_field_norms() {
        let g = Grid::cubic([0.0, 0.0, 0.0], [1.0, 1.0, 1.0], 4).unwrap();
        let w = HorizontalGridField::from_fn(&g, |_| vec![3.0, 4.0]);
        assert_abs_diff_eq!(w.norm_at(0), 5.0);
        let vol = g.cellvol() * g.node_count() as f64;
        assert_abs_diff_eq!(w.lp_norm(2.0), (25.0 * vol).sqrt(), epsilon = 1e-12);
    }
}
