//! The Monge-Kantorovich problem between discrete measures with the
//! Carnot-Caratheodory cost: exact plans, Kantorovich potentials, transport
//! rays, scalar and vector transport densities, and the optimality reports
//! built on them.

use crate::calculus::horizontal_gradient;
use crate::error::{HeisError, Result};
use crate::geodesy::{
    cc_distance, geodesic_point, geodesic_velocity, in_uniqueness_set, polyline_length_sr,
    sample_geodesic, select_geodesic,
};
use crate::grid::{Grid, GridField};
use crate::group::{horizontal_norm, GroupPoint};
use crate::measure::{DiscreteMeasure, TransportPlan};
use crate::simplex::solve_transportation;

/// Optimal plan plus everything the LP certifies: the dense cost matrix and
/// exact dual potentials.
#[derive(Debug, Clone)]
pub struct MkSolution {
    pub plan: TransportPlan,
    /// Optimal transport cost.
    pub cost: f64,
    /// Dense cost matrix, row-major over (mu index, nu index).
    pub costs: Vec<f64>,
    /// Source potentials u_i with u_i - psi_j <= c_ij, equality on support.
    pub potential_u: Vec<f64>,
    /// Sink potentials psi_j (the Kantorovich potential restricted to nu).
    pub potential_psi: Vec<f64>,
}

impl MkSolution {
    pub fn cost_entry(&self, i: usize, j: usize) -> f64 {
        self.costs[i * self.plan.nu.len() + j]
    }

    /// Dual objective sum u d(mu - nu).
    pub fn dual_value(&self) -> f64 {
        let mu_part: f64 = self
            .potential_u
            .iter()
            .zip(&self.plan.mu.weights)
            .map(|(u, w)| u * w)
            .sum();
        let nu_part: f64 = self
            .potential_psi
            .iter()
            .zip(&self.plan.nu.weights)
            .map(|(p, w)| p * w)
            .sum();
        mu_part - nu_part
    }

    /// Primal-minus-dual gap; nonnegative up to rounding and zero at the
    /// exact optimum.
    pub fn duality_gap(&self) -> f64 {
        self.cost - self.dual_value()
    }
}

/// Solves the Monge-Kantorovich problem with cost d_SR by the transportation
/// simplex. Exact for the finite linear program.
pub fn solve_mk(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<MkSolution> {
    if mu.n() != nu.n() {
        return Err(HeisError::DimensionMismatch {
            expected: 2 * mu.n() + 1,
            got: 2 * nu.n() + 1,
        });
    }
    let (m, n) = (mu.len(), nu.len());
    let mut costs = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            costs[i * n + j] = cc_distance(&mu.points[i], &nu.points[j])?;
        }
    }
    let sol = {
        let cost_fn = |i: usize, j: usize| costs[i * n + j];
        solve_transportation(&mu.weights, &nu.weights, &cost_fn)?
    };
    let plan = TransportPlan::new(sol.flows, mu.clone(), nu.clone())?;
    Ok(MkSolution {
        plan,
        cost: sol.objective,
        costs,
        potential_u: sol.potential_u,
        potential_psi: sol.potential_v.iter().map(|v| -v).collect(),
    })
}

/// A Kantorovich potential sampled on the two supports, extended everywhere
/// by the c-transform over the nu support (which preserves 1-Lipschitzness
/// exactly and reproduces the stored values).
#[derive(Debug, Clone)]
pub struct PotentialSample {
    pub mu_points: Vec<GroupPoint>,
    pub mu_values: Vec<f64>,
    pub nu_points: Vec<GroupPoint>,
    pub nu_values: Vec<f64>,
}

impl PotentialSample {
    /// c-transform extension u(z) = min_j (psi_j + d_SR(z, y_j)).
    pub fn eval(&self, z: &GroupPoint) -> Result<f64> {
        let mut best = f64::INFINITY;
        for (p, v) in self.nu_points.iter().zip(&self.nu_values) {
            best = best.min(v + cc_distance(z, p)?);
        }
        Ok(best)
    }

    /// Looks up the stored value at a support point (1e-12 coordinate match).
    pub fn value_at(&self, p: &GroupPoint) -> Result<f64> {
        let close = |a: &GroupPoint| {
            a.coords()
                .iter()
                .zip(p.coords())
                .all(|(x, y)| (x - y).abs() <= 1e-12)
        };
        for (q, v) in self.mu_points.iter().zip(&self.mu_values) {
            if close(q) {
                return Ok(*v);
            }
        }
        for (q, v) in self.nu_points.iter().zip(&self.nu_values) {
            if close(q) {
                return Ok(*v);
            }
        }
        Err(HeisError::InvalidArgument(
            "potential undefined at the requested point".into(),
        ))
    }

    /// Worst 1-Lipschitz violation over all stored point pairs.
    pub fn lipschitz_slack(&self) -> Result<f64> {
        let pts: Vec<(&GroupPoint, f64)> = self
            .mu_points
            .iter()
            .zip(self.mu_values.iter().copied())
            .chain(self.nu_points.iter().zip(self.nu_values.iter().copied()))
            .collect();
        let mut worst: f64 = 0.0;
        for (a, (pa, va)) in pts.iter().enumerate() {
            for (pb, vb) in pts.iter().skip(a + 1) {
                let d = cc_distance(pa, pb)?;
                worst = worst.max((va - vb).abs() - d);
            }
        }
        Ok(worst)
    }

    /// Rasterizes the c-transform extension on a grid.
    pub fn rasterize(&self, grid: &Grid) -> Result<GridField> {
        let mut out = GridField::zeros(grid);
        for k in 0..grid.node_count() {
            out.values[k] = self.eval(&grid.node_point(k))?;
        }
        Ok(out)
    }
}

/// Recovers a Kantorovich potential from the LP duals. With a metric cost the
/// complementary-slackness duals already form a c-conjugate pair, so the
/// c-transform extension reproduces them on both supports; this is asserted
/// together with the duality gap (error above 1e-6) and the support equality
/// u(x) - u(y) = d_SR(x, y) on every mass-carrying pair.
pub fn recover_potential(sol: &MkSolution) -> Result<PotentialSample> {
    if sol.duality_gap().abs() > 1e-6 {
        return Err(HeisError::Numerical(format!(
            "duality gap {} exceeds 1e-6; the plan is not certified optimal",
            sol.duality_gap()
        )));
    }
    let sample = PotentialSample {
        mu_points: sol.plan.mu.points.clone(),
        mu_values: sol.potential_u.clone(),
        nu_points: sol.plan.nu.points.clone(),
        nu_values: sol.potential_psi.clone(),
    };
    for &(i, j, mass) in &sol.plan.pairs {
        if mass > 1e-12 {
            let gap =
                (sol.potential_u[i] - sol.potential_psi[j] - sol.cost_entry(i, j)).abs();
            if gap > 1e-8 {
                return Err(HeisError::Numerical(format!(
                    "potential not tight on mass-carrying pair ({i},{j}): gap {gap}"
                )));
            }
        }
    }
    Ok(sample)
}

/// True iff (x, y) spans a transport ray of `u`: distinct endpoints with
/// u(x) - u(y) = d_SR(x, y) within 1e-8.
pub fn is_transport_ray(u: &PotentialSample, x: &GroupPoint, y: &GroupPoint) -> Result<bool> {
    let ux = u.value_at(x)?;
    let uy = u.value_at(y)?;
    let d = cc_distance(x, y)?;
    if d <= 1e-15 {
        return Ok(false);
    }
    Ok((ux - uy - d).abs() <= 1e-8)
}

/// Scalar and vector transport density rasterized on a grid; node values are
/// densities (mass per unit volume).
#[derive(Debug, Clone)]
pub struct TransportDensityField {
    pub grid: Grid,
    pub scalar: Vec<f64>,
    /// 2n frame components.
    pub vector: Vec<Vec<f64>>,
    /// Number of plan pairs whose difference lies on the center; their
    /// geodesics are the deterministic tie-break selection, so the density is
    /// selection-dependent there.
    pub center_pairs: usize,
}

impl TransportDensityField {
    /// Total scalar mass: equals sum mass * d_SR over the plan pairs by
    /// construction, up to rounding.
    pub fn total_scalar_mass(&self) -> f64 {
        self.scalar.iter().sum::<f64>() * self.grid.cellvol()
    }

    /// Total variation of the vector density, sum |w| cellvol.
    pub fn total_variation(&self) -> f64 {
        let cv = self.grid.cellvol();
        (0..self.grid.node_count())
            .map(|k| {
                self.vector
                    .iter()
                    .map(|c| c[k] * c[k])
                    .sum::<f64>()
                    .sqrt()
            })
            .sum::<f64>()
            * cv
    }

    /// Largest per-cell excess |w|_H - a (nonpositive up to rounding).
    pub fn max_vector_excess(&self) -> f64 {
        (0..self.grid.node_count())
            .map(|k| {
                let norm = self
                    .vector
                    .iter()
                    .map(|c| c[k] * c[k])
                    .sum::<f64>()
                    .sqrt();
                norm - self.scalar[k]
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Rasterizes the transport density of a plan: each pair's selected geodesic
/// is sampled at `quadrature_k` midpoints; every sample deposits
/// mass |sigma'|_H / k (scalar) and mass sigma' / k (vector, frame
/// coordinates) into its nearest cell, divided by the cell volume.
pub fn transport_density(
    sol: &MkSolution,
    grid: &Grid,
    quadrature_k: usize,
) -> Result<TransportDensityField> {
    let k = quadrature_k.max(1);
    let n2 = 2 * grid.n();
    let mut field = TransportDensityField {
        grid: grid.clone(),
        scalar: vec![0.0; grid.node_count()],
        vector: vec![vec![0.0; grid.node_count()]; n2],
        center_pairs: 0,
    };
    let inv_cv = 1.0 / grid.cellvol();
    for &(i, j, mass) in &sol.plan.pairs {
        if mass <= 1e-15 {
            continue;
        }
        let x = &sol.plan.mu.points[i];
        let y = &sol.plan.nu.points[j];
        let d = sol.cost_entry(i, j);
        if d <= 1e-15 {
            continue;
        }
        if !in_uniqueness_set(x, y)? {
            field.center_pairs += 1;
        }
        let g = select_geodesic(x, y)?;
        let speed = g.speed();
        for s in 0..k {
            let t = (s as f64 + 0.5) / k as f64;
            let p = geodesic_point(&g, t)?;
            if !grid.contains(&p, 0.0) {
                return Err(HeisError::GridTooSmall(format!(
                    "geodesic of pair ({i},{j}) exits the grid at {:?}; enlarge the box to cover it",
                    p.coords()
                )));
            }
            let node = grid.nearest_node(&p);
            let w = mass / k as f64 * inv_cv;
            field.scalar[node] += w * speed;
            let v = geodesic_velocity(&g, t);
            for c in 0..n2 {
                field.vector[c][node] += w * v[c];
            }
        }
    }
    Ok(field)
}

/// A smooth scalar test function with its closed-form horizontal gradient.
pub struct SmoothTest {
    pub name: &'static str,
    pub value: fn(&GroupPoint) -> f64,
    /// Frame components (X_1 phi, ..., X_{2n} phi).
    pub grad_h: fn(&GroupPoint) -> Vec<f64>,
}

/// Five gentle polynomial/trigonometric test functions on H^1 with exact
/// horizontal gradients (X_1 = d_1 - x_2/2 d_3, X_2 = d_2 + x_1/2 d_3).
pub fn default_test_functions() -> Vec<SmoothTest> {
    vec![
        SmoothTest {
            name: "x1",
            value: |p| p.coords()[0],
            grad_h: |_| vec![1.0, 0.0],
        },
        SmoothTest {
            name: "x2",
            value: |p| p.coords()[1],
            grad_h: |_| vec![0.0, 1.0],
        },
        SmoothTest {
            name: "x3",
            value: |p| p.coords()[2],
            grad_h: |p| vec![-p.coords()[1] / 2.0, p.coords()[0] / 2.0],
        },
        SmoothTest {
            name: "x1*x2",
            value: |p| p.coords()[0] * p.coords()[1],
            grad_h: |p| vec![p.coords()[1], p.coords()[0]],
        },
        SmoothTest {
            name: "sin(pi x1 / 2) cos(pi x2 / 2)",
            value: |p| {
                let c = p.coords();
                (std::f64::consts::FRAC_PI_2 * c[0]).sin()
                    * (std::f64::consts::FRAC_PI_2 * c[1]).cos()
            },
            grad_h: |p| {
                let c = p.coords();
                let h = std::f64::consts::FRAC_PI_2;
                vec![
                    h * (h * c[0]).cos() * (h * c[1]).cos(),
                    -h * (h * c[0]).sin() * (h * c[1]).sin(),
                ]
            },
        },
    ]
}

/// Residual of the divergence identity for one test function:
/// | sum <grad_H phi, w> cellvol + int phi d(mu - nu) |.
pub fn divergence_residual(
    field: &TransportDensityField,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    test: &SmoothTest,
) -> f64 {
    let grid = &field.grid;
    let cv = grid.cellvol();
    let mut pairing = 0.0;
    for k in 0..grid.node_count() {
        // skip empty cells: the vector density is supported on the transport set
        if field.vector.iter().all(|c| c[k] == 0.0) {
            continue;
        }
        let p = grid.node_point(k);
        let g = (test.grad_h)(&p);
        for (c, comp) in field.vector.iter().enumerate() {
            pairing += g[c] * comp[k] * cv;
        }
    }
    let mut measure_part = 0.0;
    for (p, w) in mu.points.iter().zip(&mu.weights) {
        measure_part += (test.value)(p) * w;
    }
    for (p, w) in nu.points.iter().zip(&nu.weights) {
        measure_part -= (test.value)(p) * w;
    }
    (pairing + measure_part).abs()
}

/// Maximum divergence-identity residual over a family of test functions.
pub fn check_divergence_identity(
    field: &TransportDensityField,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    tests: &[SmoothTest],
) -> f64 {
    tests
        .iter()
        .map(|t| divergence_residual(field, mu, nu, t))
        .fold(0.0, f64::max)
}

/// Report of the Pansu-gradient comparison along mass-carrying geodesics.
#[derive(Debug, Clone)]
pub struct PansuReport {
    /// max over sampled interior points of | grad_H u + sigma' / |sigma'| |.
    pub max_deviation: f64,
    /// Pairs evaluated (unique-geodesic pairs with positive mass).
    pub evaluated_pairs: usize,
    /// Center-aligned pairs skipped (distance function not smooth there).
    pub skipped_pairs: usize,
    /// max | |sigma'|_H - d(x,y) | over evaluated pairs (constant-speed check).
    pub max_speed_error: f64,
}

/// Compares the discrete horizontal gradient of a rasterized potential with
/// the unit tangent of each mass-carrying geodesic at t in {0.25, 0.5, 0.75}.
pub fn check_pansu_gradient(u_grid: &GridField, sol: &MkSolution) -> Result<PansuReport> {
    let grad = horizontal_gradient(u_grid);
    let mut report = PansuReport {
        max_deviation: 0.0,
        evaluated_pairs: 0,
        skipped_pairs: 0,
        max_speed_error: 0.0,
    };
    for &(i, j, mass) in &sol.plan.pairs {
        if mass <= 1e-12 {
            continue;
        }
        let x = &sol.plan.mu.points[i];
        let y = &sol.plan.nu.points[j];
        let d = sol.cost_entry(i, j);
        if d <= 1e-12 {
            continue;
        }
        if !in_uniqueness_set(x, y)? {
            report.skipped_pairs += 1;
            continue;
        }
        report.evaluated_pairs += 1;
        let g = select_geodesic(x, y)?;
        for &t in &[0.25, 0.5, 0.75] {
            let p = geodesic_point(&g, t)?;
            let v = geodesic_velocity(&g, t);
            let speed = horizontal_norm(&v);
            report.max_speed_error = report.max_speed_error.max((speed - d).abs());
            let gu = grad.interpolate(&p);
            let mut dev2 = 0.0;
            for c in 0..v.len() {
                let e = gu[c] + v[c] / speed;
                dev2 += e * e;
            }
            report.max_deviation = report.max_deviation.max(dev2.sqrt());
        }
    }
    Ok(report)
}

/// Report of the Monge-Kantorovich system check for a pair (u, a_gamma).
#[derive(Debug, Clone)]
pub struct MkSystemReport {
    /// Divergence residual of w = -(grad_H u) a_gamma against mu - nu.
    pub divergence_residual: f64,
    /// Fraction of density-carrying cells with | |grad_H u| - 1 | <= 0.05.
    pub eikonal_fraction: f64,
    /// Global maximum of |grad_H u| over the grid.
    pub max_gradient_norm: f64,
}

/// Checks the Monge-Kantorovich system: div_H(-(grad_H u) a_gamma) = mu - nu,
/// |grad_H u| = 1 on the density, |grad_H u| <= 1 globally (discrete
/// tolerances are the caller's business; this only reports).
pub fn mk_system_check(
    u_grid: &GridField,
    field: &TransportDensityField,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
) -> MkSystemReport {
    let grad = horizontal_gradient(u_grid);
    let grid = &field.grid;
    let count = grid.node_count();
    let n2 = grad.components.len();
    let mut w_field = TransportDensityField {
        grid: grid.clone(),
        scalar: field.scalar.clone(),
        vector: vec![vec![0.0; count]; n2],
        center_pairs: field.center_pairs,
    };
    for c in 0..n2 {
        for k in 0..count {
            w_field.vector[c][k] = -grad.components[c][k] * field.scalar[k];
        }
    }
    let divergence_residual =
        check_divergence_identity(&w_field, mu, nu, &default_test_functions());

    let mut carrying = 0usize;
    let mut ok = 0usize;
    let mut max_norm: f64 = 0.0;
    let scalar_max = field.scalar.iter().copied().fold(0.0, f64::max);
    for k in 0..count {
        let norm = (0..n2)
            .map(|c| grad.components[c][k] * grad.components[c][k])
            .sum::<f64>()
            .sqrt();
        max_norm = max_norm.max(norm);
        if field.scalar[k] > 1e-9 * scalar_max.max(1.0) {
            carrying += 1;
            if (norm - 1.0).abs() <= 0.05 {
                ok += 1;
            }
        }
    }
    MkSystemReport {
        divergence_residual,
        eikonal_fraction: if carrying == 0 {
            1.0
        } else {
            ok as f64 / carrying as f64
        },
        max_gradient_norm: max_norm,
    }
}

/// Lagrangian value of the plan: sum mass * ell_SR(selected geodesic),
/// evaluated by polyline length on fine samples. Equals the MK cost because
/// sub-arcs of minimizing geodesics are minimizing.
pub fn lagrangian_value(sol: &MkSolution) -> Result<f64> {
    let mut total = 0.0;
    for &(i, j, mass) in &sol.plan.pairs {
        if mass <= 1e-15 {
            continue;
        }
        let x = &sol.plan.mu.points[i];
        let y = &sol.plan.nu.points[j];
        if sol.cost_entry(i, j) <= 1e-15 {
            continue;
        }
        let g = select_geodesic(x, y)?;
        total += mass * polyline_length_sr(&sample_geodesic(&g, 64)?)?;
    }
    Ok(total)
}
