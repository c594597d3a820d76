//! Discrete horizontal calculus on node grids.
//!
//! The horizontal gradient assembles frame derivatives X_j from central
//! differences of the ambient partials (one-sided at the box faces). The
//! horizontal divergence is defined as the negative transpose of that exact
//! stencil under the uniform cellvol pairing, so
//!
//!   sum <grad_H phi, w> cellvol = - sum phi (div_H w) cellvol
//!
//! holds to rounding for all grid fields. The duality theory downstream is an
//! adjointness statement, so the pairing must be gap-free by construction.

use crate::grid::{Grid, GridField, HorizontalGridField};

/// Ambient partial derivative along `axis`: central differences inside,
/// one-sided two-point stencils at the faces.
fn apply_partial(grid: &Grid, values: &[f64], axis: usize, out: &mut [f64]) {
    let dim = grid.dim();
    let res = &grid.res;
    let h = grid.spacing(axis);
    // stride of one step along `axis` in the row-major layout
    let stride: usize = res[axis + 1..].iter().product();
    let count = grid.node_count();
    let axis_len = res[axis];
    let block = stride * axis_len;
    for k in 0..count {
        let i = (k % block) / stride;
        out[k] = if i == 0 {
            (values[k + stride] - values[k]) / h
        } else if i == axis_len - 1 {
            (values[k] - values[k - stride]) / h
        } else {
            (values[k + stride] - values[k - stride]) / (2.0 * h)
        };
    }
    let _ = dim;
}

/// Exact transpose of `apply_partial`: scatter each node's stencil weights.
fn apply_partial_transpose(grid: &Grid, values: &[f64], axis: usize, out: &mut [f64]) {
    let res = &grid.res;
    let h = grid.spacing(axis);
    let stride: usize = res[axis + 1..].iter().product();
    let count = grid.node_count();
    let axis_len = res[axis];
    let block = stride * axis_len;
    for v in out.iter_mut() {
        *v = 0.0;
    }
    for k in 0..count {
        let i = (k % block) / stride;
        let w = values[k];
        if i == 0 {
            out[k + stride] += w / h;
            out[k] -= w / h;
        } else if i == axis_len - 1 {
            out[k] += w / h;
            out[k - stride] -= w / h;
        } else {
            out[k + stride] += w / (2.0 * h);
            out[k - stride] -= w / (2.0 * h);
        }
    }
}

/// Frame coefficient of X_j against the vertical partial at a node:
/// -x_{n+j}/2 for j < n, +x_{j-n}/2 for j >= n.
fn vertical_coefficient(grid: &Grid, j: usize, k: usize) -> f64 {
    let n = grid.n();
    let multi = grid.multi(k);
    if j < n {
        -grid.node_coord(n + j, multi[n + j]) / 2.0
    } else {
        grid.node_coord(j - n, multi[j - n]) / 2.0
    }
}

/// Discrete horizontal gradient: component j is X_j phi assembled from the
/// ambient partials.
pub fn horizontal_gradient(phi: &GridField) -> HorizontalGridField {
    let grid = &phi.grid;
    let n = grid.n();
    let count = grid.node_count();
    let mut out = HorizontalGridField::zeros(grid);
    let mut d_axis = vec![0.0; count];
    let mut d_vert = vec![0.0; count];
    apply_partial(grid, &phi.values, 2 * n, &mut d_vert);
    for j in 0..2 * n {
        apply_partial(grid, &phi.values, j, &mut d_axis);
        let comp = &mut out.components[j];
        for k in 0..count {
            comp[k] = d_axis[k] + vertical_coefficient(grid, j, k) * d_vert[k];
        }
    }
    out
}

/// Discrete horizontal divergence: the negative transpose of
/// [`horizontal_gradient`] under the cellvol pairing,
/// div_H w = - sum_j (D_j^T w_j + D_v^T (c_j w_j)).
pub fn horizontal_divergence(w: &HorizontalGridField) -> GridField {
    let grid = &w.grid;
    let n = grid.n();
    let count = grid.node_count();
    let mut out = GridField::zeros(grid);
    let mut scratch = vec![0.0; count];
    let mut weighted = vec![0.0; count];
    for j in 0..2 * n {
        let comp = &w.components[j];
        apply_partial_transpose(grid, comp, j, &mut scratch);
        for k in 0..count {
            out.values[k] -= scratch[k];
        }
        for k in 0..count {
            weighted[k] = vertical_coefficient(grid, j, k) * comp[k];
        }
        apply_partial_transpose(grid, &weighted, 2 * n, &mut scratch);
        for k in 0..count {
            out.values[k] -= scratch[k];
        }
    }
    out
}

/// Discrete pairing sum <grad_H phi, w> cellvol + sum phi (div_H w) cellvol,
/// which is zero to rounding by construction; exposed for the structural
/// acceptance check.
pub fn adjointness_residual(phi: &GridField, w: &HorizontalGridField) -> f64 {
    let grad = horizontal_gradient(phi);
    let div = horizontal_divergence(w);
    let count = phi.grid.node_count();
    let mut pairing = 0.0;
    for j in 0..grad.components.len() {
        let (g, c) = (&grad.components[j], &w.components[j]);
        for k in 0..count {
            pairing += g[k] * c[k];
        }
    }
    let mut dual = 0.0;
    for k in 0..count {
        dual += phi.values[k] * div.values[k];
    }
    (pairing + dual) * phi.grid.cellvol()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn grid() -> Grid {
        Grid::new(vec![-1.0, -1.0, -1.0], vec![1.0, 1.0, 1.0], vec![9, 8, 10]).unwrap()
    }

    #[test]
    fn gradient_of_coordinate_functions() {
        let g = grid();
        // phi = x_1: X_1 phi = 1, X_2 phi = 0, exactly (stencils are exact on
        // affine functions)
        let phi = GridField::from_fn(&g, |p| p.coords()[0]);
        let grad = horizontal_gradient(&phi);
        for k in 0..g.node_count() {
            assert_abs_diff_eq!(grad.components[0][k], 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(grad.components[1][k], 0.0, epsilon = 1e-12);
        }
        // phi = x_3: X_1 phi = -x_2/2, X_2 phi = x_1/2
        let phi = GridField::from_fn(&g, |p| p.coords()[2]);
        let grad = horizontal_gradient(&phi);
        for k in 0..g.node_count() {
            let p = g.node_point(k);
            assert_abs_diff_eq!(grad.components[0][k], -p.coords()[1] / 2.0, epsilon = 1e-12);
            assert_abs_diff_eq!(grad.components[1][k], p.coords()[0] / 2.0, epsilon = 1e-12);
        }
        // constants
        let phi = GridField::from_fn(&g, |_| 7.0);
        let grad = horizontal_gradient(&phi);
        for j in 0..2 {
            for k in 0..g.node_count() {
                assert_abs_diff_eq!(grad.components[j][k], 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn divergence_of_zero_and_gradient_of_linear() {
        let g = grid();
        let w = HorizontalGridField::zeros(&g);
        let div = horizontal_divergence(&w);
        assert!(div.values.iter().all(|v| *v == 0.0));

        // w = grad_H(x_1) = (1, 0): interior divergence vanishes (the
        // horizontal Laplacian of x_1), boundary rows carry the one-sided
        // closure
        let phi = GridField::from_fn(&g, |p| p.coords()[0]);
        let w = horizontal_gradient(&phi);
        let div = horizontal_divergence(&w);
        for k in 0..g.node_count() {
            let m = g.multi(k);
            let interior = (0..3).all(|a| m[a] >= 2 && m[a] + 2 < g.res[a]);
            if interior {
                assert_abs_diff_eq!(div.values[k], 0.0, epsilon = 1e-11);
            }
        }
    }

    #[test]
    fn adjointness_on_random_fields() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..100 {
            let phi = GridField::from_fn(&g, |_| rng.gen_range(-1.0..1.0));
            let w = HorizontalGridField::from_fn(&g, |_| {
                vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]
            });
            let r = adjointness_residual(&phi, &w);
            assert!(r.abs() <= 1e-10, "adjointness residual {r}");
        }
    }
}
