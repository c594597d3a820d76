//! Closed-form geodesics of H^n, the Carnot-Caratheodory distance by
//! inversion of the endpoint map, a deterministic measurable selection of
//! geodesics, and sub-Riemannian lengths of polylines.
//!
//! A non-trivial geodesic from the identity is parametrized by a horizontal
//! covector chi in R^{2n} and a twist theta in [-2pi, 2pi]:
//!
//! ```text
//!   x_j(t)     = (chi_j sin(theta t) - chi_{n+j} (1 - cos(theta t))) / theta
//!   x_{n+j}(t) = (chi_{n+j} sin(theta t) + chi_j (1 - cos(theta t))) / theta
//!   x_{2n+1}(t)= |chi|^2 (theta t - sin(theta t)) / (2 theta^2)
//! ```
//!
//! with the straight line (chi t, 0) for theta = 0. The constant speed is
//! |chi|, which equals the distance to the endpoint at t = 1.
//!
//! Inverting the endpoint map at t = 1 reduces to the scalar equation
//! m(theta) = z_v / |zeta|^2 with m(theta) = (theta - sin theta) /
//! (4 (1 - cos theta)), which is strictly increasing on (0, 2pi); then
//! |chi| = theta |zeta| / (2 sin(theta/2)). Pairs whose difference lies on
//! the center have the closed form |chi| = sqrt(4 pi |z_v|).

use crate::error::{HeisError, Result};
use crate::group::{group_diff, group_mul, Coords, GroupPoint};
use std::f64::consts::PI;

/// Tolerance below which the horizontal part of x^{-1} y is treated as zero
/// (the pair is center-aligned and geodesics are non-unique).
pub const CENTER_TOL: f64 = 1e-8;

/// Parameters (base, chi, theta) of a geodesic t -> base . sigma_{chi,theta}(t).
#[derive(Debug, Clone)]
pub struct GeodesicParams {
    pub base: GroupPoint,
    pub chi: Coords,
    pub theta: f64,
}

impl GeodesicParams {
    /// Constant horizontal speed |chi| = d_SR(base, endpoint).
    pub fn speed(&self) -> f64 {
        self.chi.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// m(theta) = (theta - sin theta) / (4 (1 - cos theta)), the vertical-to-
/// horizontal ratio of the endpoint map. Odd, strictly increasing on
/// (0, 2pi), with m -> +infinity at 2pi.
pub fn endpoint_ratio(theta: f64) -> f64 {
    if theta.abs() < 1e-4 {
        // series: theta/12 (1 + theta^2/30 + theta^4/840)
        let t2 = theta * theta;
        theta / 12.0 * (1.0 + t2 / 30.0 + t2 * t2 / 840.0)
    } else {
        let s = (theta / 2.0).sin();
        (theta - theta.sin()) / (8.0 * s * s)
    }
}

/// Derivative of `endpoint_ratio`, used by the Newton step.
fn endpoint_ratio_prime(theta: f64) -> f64 {
    if theta.abs() < 1e-4 {
        let t2 = theta * theta;
        1.0 / 12.0 + t2 / 120.0 + t2 * t2 / 2016.0
    } else {
        let s = (theta / 2.0).sin();
        let one_minus_cos = 2.0 * s * s;
        (one_minus_cos * one_minus_cos - (theta - theta.sin()) * theta.sin())
            / (4.0 * one_minus_cos * one_minus_cos)
    }
}

/// Solves m(theta) = tau for theta in (0, 2pi), tau > 0. Safeguarded Newton
/// inside a shrinking bracket, bisection fallback after failed steps.
fn solve_theta(tau: f64) -> f64 {
    debug_assert!(tau > 0.0);
    let mut lo = 0.0_f64;
    let mut hi = 2.0 * PI - 1e-9;
    // m(hi) ~ pi/(delta/2)^2 is astronomically large, so tau is bracketed
    // unless it exceeds that; then the center formula limit applies anyway.
    let mut theta = if tau < endpoint_ratio(1.0) {
        (12.0 * tau).clamp(1e-9, 1.0)
    } else {
        (2.0 * PI - (PI / tau).sqrt()).clamp(1.0, hi)
    };
    let tol = 1e-12 * (1.0 + tau.abs());
    let mut failed_newton = 0u32;
    for _ in 0..200 {
        let r = endpoint_ratio(theta) - tau;
        if r.abs() <= tol {
            return theta;
        }
        if r > 0.0 {
            hi = theta;
        } else {
            lo = theta;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi.max(1.0) {
            return 0.5 * (lo + hi);
        }
        let step = r / endpoint_ratio_prime(theta);
        let candidate = theta - step;
        if failed_newton < 3 && candidate > lo && candidate < hi {
            theta = candidate;
        } else {
            failed_newton += 1;
            theta = 0.5 * (lo + hi);
        }
    }
    theta
}

/// theta |zeta| / (2 sin(theta/2)) evaluated stably, the horizontal speed of
/// the geodesic with twist theta reaching horizontal displacement zeta.
fn chi_norm_from(theta: f64, zeta_norm: f64) -> f64 {
    if theta.abs() < 1e-6 {
        let t2 = theta * theta;
        zeta_norm * (1.0 + t2 / 24.0)
    } else {
        theta.abs() * zeta_norm / (2.0 * (theta.abs() / 2.0).sin())
    }
}

/// Carnot-Caratheodory distance between two points of H^n.
///
/// Total function: center-aligned pairs take the closed form
/// sqrt(4 pi |z_v|), coplanar pairs the Euclidean horizontal norm, and the
/// general case inverts the endpoint map by a safeguarded Newton solve.
pub fn cc_distance(x: &GroupPoint, y: &GroupPoint) -> Result<f64> {
    if x.coords().len() != y.coords().len() {
        return Err(HeisError::DimensionMismatch {
            expected: x.coords().len(),
            got: y.coords().len(),
        });
    }
    let n = x.n();
    let (xc, yc) = (x.coords(), y.coords());
    let mut zh2 = 0.0;
    for j in 0..2 * n {
        let d = yc[j] - xc[j];
        zh2 += d * d;
    }
    let mut twist = 0.0;
    for j in 0..n {
        twist += xc[n + j] * yc[j] - xc[j] * yc[n + j];
    }
    let zv = yc[2 * n] - xc[2 * n] + 0.5 * twist;
    Ok(distance_from_parts(zh2, zv))
}

/// Distance to a point with horizontal norm^2 `zh2` and vertical part `zv`
/// (in the left-trivialized difference coordinates).
pub fn distance_from_parts(zh2: f64, zv: f64) -> f64 {
    let zh = zh2.sqrt();
    if zh <= CENTER_TOL {
        if zv == 0.0 && zh == 0.0 {
            return 0.0;
        }
        // near-center limit; continuous with the root-solve branch
        return (4.0 * PI * zv.abs()).sqrt().max(zh);
    }
    if zv == 0.0 {
        return zh;
    }
    let tau = zv.abs() / zh2;
    let theta = solve_theta(tau);
    chi_norm_from(theta, zh)
}

/// Point of the geodesic at parameter t in [0, 1].
pub fn geodesic_point(g: &GeodesicParams, t: f64) -> Result<GroupPoint> {
    let n = g.base.n();
    if g.chi.len() != 2 * n {
        return Err(HeisError::DimensionMismatch {
            expected: 2 * n,
            got: g.chi.len(),
        });
    }
    let theta = g.theta;
    let u = theta * t;
    // A = sin(theta t)/theta, B = (1 - cos(theta t))/theta,
    // C = (theta t - sin(theta t)) / (2 theta^2)
    let (a, b, c) = if theta.abs() < 1e-6 {
        let u2 = u * u;
        (
            t * (1.0 - u2 / 6.0 + u2 * u2 / 120.0),
            theta * t * t / 2.0 * (1.0 - u2 / 12.0 + u2 * u2 / 360.0),
            theta * t * t * t / 12.0 * (1.0 - u2 / 20.0 + u2 * u2 / 840.0),
        )
    } else {
        let s = (u / 2.0).sin();
        (
            u.sin() / theta,
            2.0 * s * s / theta,
            (u - u.sin()) / (2.0 * theta * theta),
        )
    };
    let chi2: f64 = g.chi.iter().map(|c| c * c).sum();
    let mut coords: Coords = smallvec::smallvec![0.0; 2 * n + 1];
    for j in 0..n {
        coords[j] = g.chi[j] * a - g.chi[n + j] * b;
        coords[n + j] = g.chi[n + j] * a + g.chi[j] * b;
    }
    coords[2 * n] = chi2 * c;
    let local = GroupPoint::new(coords)?;
    group_mul(&g.base, &local)
}

/// Horizontal velocity of the geodesic at parameter t, in frame coordinates
/// (left-invariant, so independent of the base point):
/// v_j = chi_j cos(theta t) - chi_{n+j} sin(theta t) and the symmetric
/// companion. The speed is |chi| for every t.
pub fn geodesic_velocity(g: &GeodesicParams, t: f64) -> Coords {
    let n = g.chi.len() / 2;
    let (c, s) = ((g.theta * t).cos(), (g.theta * t).sin());
    let mut v: Coords = smallvec::smallvec![0.0; 2 * n];
    for j in 0..n {
        v[j] = g.chi[j] * c - g.chi[n + j] * s;
        v[n + j] = g.chi[n + j] * c + g.chi[j] * s;
    }
    v
}

/// True when (x, y) lies in the uniqueness set E, i.e. the horizontal part of
/// x^{-1} y is nonzero (tolerance 1e-12 on its norm).
pub fn in_uniqueness_set(x: &GroupPoint, y: &GroupPoint) -> Result<bool> {
    let z = group_diff(x, y)?;
    Ok(z.horizontal_norm() > 1e-12)
}

/// Selects the geodesic from x to y: the unique one on the uniqueness set E,
/// and the deterministic first-coordinate tie-break
/// chi = (sqrt(4 pi |z_v|), 0, ..., 0), theta = sign(z_v) 2 pi for
/// center-aligned pairs. Errors when x = y.
pub fn select_geodesic(x: &GroupPoint, y: &GroupPoint) -> Result<GeodesicParams> {
    let z = group_diff(x, y)?;
    let n = x.n();
    let zh = z.horizontal_norm();
    let zv = z.vertical();
    if zh <= f64::EPSILON && zv.abs() <= f64::EPSILON {
        return Err(HeisError::InvalidArgument(
            "trivial geodesic: the two endpoints coincide".into(),
        ));
    }
    if zh < CENTER_TOL {
        let mut chi: Coords = smallvec::smallvec![0.0; 2 * n];
        chi[0] = (4.0 * PI * zv.abs()).sqrt();
        return Ok(GeodesicParams {
            base: x.clone(),
            chi,
            theta: 2.0 * PI * zv.signum(),
        });
    }
    let theta = if zv == 0.0 {
        0.0
    } else {
        zv.signum() * solve_theta(zv.abs() / (zh * zh))
    };
    // invert the 2x2 endpoint blocks:
    // chi_j = a zeta_j + (theta/2) zeta_{n+j}, a = (theta/2) cot(theta/2)
    let a = if theta.abs() < 1e-6 {
        let t2 = theta * theta;
        1.0 - t2 / 12.0 - t2 * t2 / 720.0
    } else {
        (theta / 2.0) * (theta / 2.0).cos() / (theta / 2.0).sin()
    };
    let half = theta / 2.0;
    let zc = z.horizontal();
    let mut chi: Coords = smallvec::smallvec![0.0; 2 * n];
    for j in 0..n {
        chi[j] = a * zc[j] + half * zc[n + j];
        chi[n + j] = -half * zc[j] + a * zc[n + j];
    }
    Ok(GeodesicParams {
        base: x.clone(),
        chi,
        theta,
    })
}

/// A piecewise-horizontal curve stored as its vertex list; each chord is
/// measured by the Carnot-Caratheodory distance.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct Polyline {
    pub vertices: Vec<GroupPointSer>,
}

/// Serializable point representation used inside polylines and traffic plans.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct GroupPointSer(pub Vec<f64>);

impl From<&GroupPoint> for GroupPointSer {
    fn from(p: &GroupPoint) -> Self {
        GroupPointSer(p.coords().to_vec())
    }
}

impl GroupPointSer {
    pub fn to_point(&self) -> Result<GroupPoint> {
        GroupPoint::new(Coords::from_slice(&self.0))
    }
}

impl Polyline {
    pub fn from_points(points: &[GroupPoint]) -> Result<Self> {
        if points.is_empty() {
            return Err(HeisError::InvalidArgument(
                "a polyline needs at least one vertex".into(),
            ));
        }
        let len = points[0].coords().len();
        if points.iter().any(|p| p.coords().len() != len) {
            return Err(HeisError::DimensionMismatch { expected: len, got: 0 });
        }
        Ok(Self {
            vertices: points.iter().map(GroupPointSer::from).collect(),
        })
    }

    pub fn points(&self) -> Result<Vec<GroupPoint>> {
        self.vertices.iter().map(|v| v.to_point()).collect()
    }
}

/// Sub-Riemannian length of a polyline: the sum of chord distances. Invariant
/// under vertex-preserving reparametrization and zero for constant curves.
pub fn polyline_length_sr(p: &Polyline) -> Result<f64> {
    let pts = p.points()?;
    let mut len = 0.0;
    for w in pts.windows(2) {
        len += cc_distance(&w[0], &w[1])?;
    }
    Ok(len)
}

/// Samples the geodesic at k+1 equispaced parameters into a polyline.
pub fn sample_geodesic(g: &GeodesicParams, k: usize) -> Result<Polyline> {
    let k = k.max(1);
    let pts: Result<Vec<GroupPoint>> = (0..=k)
        .map(|i| geodesic_point(g, i as f64 / k as f64))
        .collect();
    Polyline::from_points(&pts?)
}
