//! Exact group operations on the Heisenberg group H^n in exponential
//! coordinates, the intrinsic dilations, the left-invariant horizontal frame,
//! and the group mollifier.
//!
//! A point is a vector (x_1, ..., x_{2n+1}); the first 2n coordinates are
//! horizontal, the last one is the center direction. The group law is the
//! step-2 Baker-Campbell-Hausdorff product, so inverses are coordinate
//! negation and the identity is the origin.

use crate::error::{HeisError, Result};
use smallvec::SmallVec;

/// Inline storage that covers n <= 3 without heap allocation.
pub type Coords = SmallVec<[f64; 8]>;

/// A point of H^n in exponential coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupPoint {
    coords: Coords,
}

impl GroupPoint {
    /// Builds a point from its 2n+1 exponential coordinates.
    pub fn new(coords: impl Into<Coords>) -> Result<Self> {
        let coords = coords.into();
        let len = coords.len();
        if len < 3 || len % 2 == 0 {
            return Err(HeisError::InvalidArgument(format!(
                "a point of H^n needs an odd number (2n+1 >= 3) of coordinates, got {len}"
            )));
        }
        if !coords.iter().all(|c| c.is_finite()) {
            return Err(HeisError::InvalidArgument(
                "point coordinates must be finite".into(),
            ));
        }
        Ok(Self { coords })
    }

    /// The identity element of H^n.
    pub fn origin(n: usize) -> Self {
        Self {
            coords: smallvec::smallvec![0.0; 2 * n + 1],
        }
    }

    /// Convenience constructor for H^1.
    pub fn xyz(x: f64, y: f64, z: f64) -> Self {
        Self {
            coords: smallvec::smallvec![x, y, z],
        }
    }

    /// Group index n (the horizontal layer has dimension 2n).
    pub fn n(&self) -> usize {
        (self.coords.len() - 1) / 2
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Horizontal coordinates (x_1, ..., x_{2n}).
    pub fn horizontal(&self) -> &[f64] {
        &self.coords[..self.coords.len() - 1]
    }

    /// Center coordinate x_{2n+1}.
    pub fn vertical(&self) -> f64 {
        *self.coords.last().unwrap()
    }

    /// Euclidean norm of the horizontal part.
    pub fn horizontal_norm(&self) -> f64 {
        self.horizontal().iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// True when the point lies on the center L = {(0,...,0,t)}, within `tol`
    /// on the horizontal norm.
    pub fn in_center(&self, tol: f64) -> bool {
        self.horizontal_norm() <= tol
    }
}

fn check_same_n(a: &GroupPoint, b: &GroupPoint) -> Result<()> {
    if a.coords.len() != b.coords.len() {
        return Err(HeisError::DimensionMismatch {
            expected: a.coords.len(),
            got: b.coords.len(),
        });
    }
    Ok(())
}

/// Group product a.b from the step-2 BCH formula: horizontal coordinates add,
/// the center coordinate picks up half the symplectic product of the
/// horizontal parts.
pub fn group_mul(a: &GroupPoint, b: &GroupPoint) -> Result<GroupPoint> {
    check_same_n(a, b)?;
    let n = a.n();
    let mut coords: Coords = SmallVec::with_capacity(2 * n + 1);
    for j in 0..2 * n {
        coords.push(a.coords[j] + b.coords[j]);
    }
    let mut twist = 0.0;
    for j in 0..n {
        twist += a.coords[j] * b.coords[n + j] - a.coords[n + j] * b.coords[j];
    }
    coords.push(a.vertical() + b.vertical() + 0.5 * twist);
    Ok(GroupPoint { coords })
}

/// Group inverse; in exponential coordinates of a step-2 group this is
/// coordinate negation.
pub fn group_inv(a: &GroupPoint) -> GroupPoint {
    GroupPoint {
        coords: a.coords.iter().map(|c| -c).collect(),
    }
}

/// The difference point a^{-1}.b, computed without intermediate allocations
/// of the inverse.
pub fn group_diff(a: &GroupPoint, b: &GroupPoint) -> Result<GroupPoint> {
    group_mul(&group_inv(a), b)
}

/// Intrinsic anisotropic dilation: horizontal coordinates scale by tau, the
/// center coordinate by tau^2.
pub fn dilate(a: &GroupPoint, tau: f64) -> Result<GroupPoint> {
    if !(tau > 0.0) {
        return Err(HeisError::InvalidArgument(format!(
            "dilation factor must be positive, got {tau}"
        )));
    }
    let last = a.coords.len() - 1;
    let mut coords = a.coords.clone();
    for c in &mut coords[..last] {
        *c *= tau;
    }
    coords[last] *= tau * tau;
    Ok(GroupPoint { coords })
}

/// Ambient coordinates of the left-invariant frame field X_{j+1} at a point
/// (j is 0-based, 0 <= j < 2n):
/// for j < n it is e_j - (x_{n+j}/2) e_{2n+1}, for j >= n it is
/// e_j + (x_{j-n}/2) e_{2n+1}.
pub fn frame_vector(j: usize, at: &GroupPoint) -> Result<Coords> {
    let n = at.n();
    if j >= 2 * n {
        return Err(HeisError::InvalidArgument(format!(
            "frame index {j} out of range for n = {n}"
        )));
    }
    let mut v: Coords = smallvec::smallvec![0.0; 2 * n + 1];
    v[j] = 1.0;
    v[2 * n] = if j < n {
        -at.coords[n + j] / 2.0
    } else {
        at.coords[j - n] / 2.0
    };
    Ok(v)
}

/// A horizontal tangent vector expressed in the orthonormal frame
/// X_1, ..., X_{2n} at a base point.
#[derive(Debug, Clone)]
pub struct HorizontalVector {
    pub components: Coords,
    pub base: GroupPoint,
}

impl HorizontalVector {
    pub fn new(components: impl Into<Coords>, base: GroupPoint) -> Result<Self> {
        let components = components.into();
        if components.len() != 2 * base.n() {
            return Err(HeisError::DimensionMismatch {
                expected: 2 * base.n(),
                got: components.len(),
            });
        }
        Ok(Self { components, base })
    }

    /// Frame norm; the frame is orthonormal so this is the Euclidean norm of
    /// the components.
    pub fn norm_h(&self) -> f64 {
        horizontal_norm(&self.components)
    }

    /// Frame inner product with another vector (bases are not compared; the
    /// frame coefficients are left-invariant).
    pub fn inner_h(&self, other: &HorizontalVector) -> f64 {
        horizontal_inner(&self.components, &other.components)
    }

    /// Ambient coordinates sum_j c_j X_j(base).
    pub fn ambient(&self) -> Coords {
        let n = self.base.n();
        let mut out: Coords = smallvec::smallvec![0.0; 2 * n + 1];
        for (j, &c) in self.components.iter().enumerate() {
            out[j] += c;
            out[2 * n] += c * if j < n {
                -self.base.coords[n + j] / 2.0
            } else {
                self.base.coords[j - n] / 2.0
            };
        }
        out
    }
}

/// Euclidean norm of frame components.
pub fn horizontal_norm(components: &[f64]) -> f64 {
    components.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Euclidean inner product of frame components.
pub fn horizontal_inner(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Koranyi-type homogeneous gauge: rho(x)^4 = |x_h|^4 + 16 x_v^2.
/// It is 1-homogeneous under the dilations.
pub fn gauge(x: &GroupPoint) -> f64 {
    let h2: f64 = x.horizontal().iter().map(|c| c * c).sum();
    let v = x.vertical();
    (h2 * h2 + 16.0 * v * v).powf(0.25)
}

/// Gauge radius of the mollifier support inside the unit ball. On the center
/// axis d_SR = sqrt(pi) * gauge, which is the worst ratio, so a gauge ball of
/// radius 0.55 sits inside the sub-Riemannian unit ball (0.55 sqrt(pi) < 1).
pub const MOLLIFIER_GAUGE_RADIUS: f64 = 0.55;

/// The group mollifier at scale epsilon: a fixed polynomial bump
/// c (1 - (rho/r0)^2)^4 in the gauge, scaled by the anisotropic dilation
/// delta_{1/eps} and the factor eps^{-N}, N = 2n+2 the homogeneous dimension.
#[derive(Debug, Clone)]
pub struct MollifierSpec {
    pub epsilon: f64,
    n: usize,
    /// Normalization constant making the unscaled bump integrate to 1;
    /// computed once by radial quadrature.
    norm_const: f64,
}

impl MollifierSpec {
    pub fn new(epsilon: f64, n: usize) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(HeisError::InvalidArgument(format!(
                "mollifier scale must be positive, got {epsilon}"
            )));
        }
        if n == 0 {
            return Err(HeisError::InvalidArgument("group index n must be >= 1".into()));
        }
        Ok(Self {
            epsilon,
            n,
            norm_const: 1.0 / unnormalized_bump_mass(n),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Homogeneous dimension N = 2n+2.
    pub fn homogeneous_dimension(&self) -> usize {
        2 * self.n + 2
    }

    /// Value of rho_eps at x (centered at the identity).
    pub fn eval(&self, x: &GroupPoint) -> f64 {
        let inv_eps = 1.0 / self.epsilon;
        let scale = inv_eps.powi(self.homogeneous_dimension() as i32);
        // delta_{1/eps}(x) without building a point
        let h2: f64 = x
            .horizontal()
            .iter()
            .map(|c| {
                let s = c * inv_eps;
                s * s
            })
            .sum();
        let v = x.vertical() * inv_eps * inv_eps;
        scale * self.norm_const * bump_profile(h2, v)
    }

    /// Value of the mollified Dirac at `atom` evaluated at `z`, i.e.
    /// rho_eps(z . atom^{-1}).
    pub fn eval_at(&self, z: &GroupPoint, atom: &GroupPoint) -> Result<f64> {
        let shifted = group_mul(z, &group_inv(atom))?;
        Ok(self.eval(&shifted))
    }

    /// Half-widths of an ambient axis-aligned box containing the support of
    /// the mollified Dirac at `atom` (the set supp(rho_eps) . atom).
    pub fn support_half_widths(&self, atom: &GroupPoint) -> Coords {
        let n = self.n;
        let r_h = MOLLIFIER_GAUGE_RADIUS * self.epsilon;
        let r_v = MOLLIFIER_GAUGE_RADIUS * MOLLIFIER_GAUGE_RADIUS * self.epsilon * self.epsilon
            / 4.0;
        let mut hw: Coords = smallvec::smallvec![r_h; 2 * n + 1];
        // the BCH twist shifts the vertical coordinate by at most |s_h||y_h|/2
        hw[2 * n] = r_v + 0.5 * r_h * atom.horizontal_norm();
        hw
    }
}

/// Bump profile (1 - (rho/r0)^2)^4 as a function of |x_h|^2 and x_v,
/// unnormalized.
fn bump_profile(h2: f64, v: f64) -> f64 {
    let r0 = MOLLIFIER_GAUGE_RADIUS;
    let gauge2 = (h2 * h2 + 16.0 * v * v).sqrt();
    let s = gauge2 / (r0 * r0);
    if s >= 1.0 {
        0.0
    } else {
        let t = 1.0 - s;
        t * t * t * t
    }
}

/// Mass of the unnormalized bump over R^{2n+1}, in closed form.
///
/// Substituting a = |x_h|^2 and w = 4 x_v turns the gauge into the polar
/// radius R of the (a, w) half-plane, and the integral factorizes into
///   r0^{2n+2} * (S_{2n-1}/8) * Beta(n+1, 5) * int cos^{n-1},
/// with S_{2n-1} the sphere area in R^{2n} and the angular integral over
/// (-pi/2, pi/2). For n = 1 this is r0^4 pi^2 / 120.
fn unnormalized_bump_mass(n: usize) -> f64 {
    let pi = std::f64::consts::PI;
    let r0 = MOLLIFIER_GAUGE_RADIUS;
    let sphere = 2.0 * pi.powi(n as i32) / factorial(n - 1);
    // Beta(n+1, 5) = n! 4! / (n+5)!
    let beta = factorial(n) * 24.0 / factorial(n + 5);
    // int_{-pi/2}^{pi/2} cos^{n-1}: recurrence I_k = (k-1)/k I_{k-2}
    let mut angular = [pi, 2.0][(n - 1) % 2];
    let mut k = (n - 1) % 2;
    while k + 2 <= n - 1 {
        k += 2;
        angular *= (k - 1) as f64 / k as f64;
    }
    r0.powi(2 * n as i32 + 2) * sphere / 8.0 * beta * angular
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product::<f64>().max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_point(rng: &mut impl Rng, n: usize) -> GroupPoint {
        let coords: Coords = (0..2 * n + 1).map(|_| rng.gen_range(-2.0..2.0)).collect();
        GroupPoint::new(coords).unwrap()
    }

    #[test]
    fn identity_and_inverse() {
        let e = GroupPoint::origin(1);
        let p = GroupPoint::xyz(1.0, 2.0, 3.0);
        assert_eq!(group_mul(&e, &p).unwrap(), p);
        assert_eq!(group_mul(&p, &e).unwrap(), p);

        assert_eq!(
            group_inv(&p).coords(),
            GroupPoint::xyz(-1.0, -2.0, -3.0).coords()
        );
        assert_eq!(group_inv(&e), e);

        let a = GroupPoint::xyz(0.3, -0.7, 2.1);
        let prod = group_mul(&a, &group_inv(&a)).unwrap();
        for c in prod.coords() {
            assert_abs_diff_eq!(*c, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn group_law_twist() {
        // direct evaluation of the BCH formula for n=1
        let a = GroupPoint::xyz(1.0, 0.0, 0.0);
        let b = GroupPoint::xyz(0.0, 1.0, 0.0);
        let c = group_mul(&a, &b).unwrap();
        assert_eq!(c.coords(), &[1.0, 1.0, 0.5]);
    }

    #[test]
    fn inverse_antihomomorphism() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let a = random_point(&mut rng, 1);
            let b = random_point(&mut rng, 1);
            let lhs = group_mul(&group_inv(&a), &group_inv(&b)).unwrap();
            let rhs = group_inv(&group_mul(&b, &a).unwrap());
            for (l, r) in lhs.coords().iter().zip(rhs.coords()) {
                assert_abs_diff_eq!(l, r, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn associativity_on_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let n = 1 + (rng.gen_range(0..2) as usize);
            let a = random_point(&mut rng, n);
            let b = random_point(&mut rng, n);
            let c = random_point(&mut rng, n);
            let lhs = group_mul(&group_mul(&a, &b).unwrap(), &c).unwrap();
            let rhs = group_mul(&a, &group_mul(&b, &c).unwrap()).unwrap();
            for (l, r) in lhs.coords().iter().zip(rhs.coords()) {
                assert_abs_diff_eq!(l, r, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn dilation_definition_and_semigroup() {
        let p = GroupPoint::xyz(1.0, 1.0, 1.0);
        assert_eq!(dilate(&p, 2.0).unwrap().coords(), &[2.0, 2.0, 4.0]);
        assert_eq!(dilate(&p, 1.0).unwrap(), p);
        assert!(dilate(&p, 0.0).is_err());
        assert!(dilate(&p, -1.0).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let a = random_point(&mut rng, 1);
            let (tau, sigma) = (rng.gen_range(0.1..3.0), rng.gen_range(0.1..3.0));
            let lhs = dilate(&dilate(&a, sigma).unwrap(), tau).unwrap();
            let rhs = dilate(&a, tau * sigma).unwrap();
            for (l, r) in lhs.coords().iter().zip(rhs.coords()) {
                assert_abs_diff_eq!(l, r, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn dilations_are_automorphisms() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let a = random_point(&mut rng, 1);
            let b = random_point(&mut rng, 1);
            let tau = rng.gen_range(0.1..3.0);
            let lhs = dilate(&group_mul(&a, &b).unwrap(), tau).unwrap();
            let rhs = group_mul(&dilate(&a, tau).unwrap(), &dilate(&b, tau).unwrap()).unwrap();
            for (l, r) in lhs.coords().iter().zip(rhs.coords()) {
                assert_abs_diff_eq!(l, r, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn frame_vectors_match_the_coordinate_display() {
        let e = GroupPoint::origin(1);
        assert_eq!(frame_vector(0, &e).unwrap().as_slice(), &[1.0, 0.0, 0.0]);

        let p = GroupPoint::xyz(0.0, 4.0, 0.0);
        assert_eq!(frame_vector(0, &p).unwrap().as_slice(), &[1.0, 0.0, -2.0]);

        let q = GroupPoint::xyz(4.0, 0.0, 0.0);
        assert_eq!(frame_vector(1, &q).unwrap().as_slice(), &[0.0, 1.0, 2.0]);

        assert!(frame_vector(2, &q).is_err());
    }

    #[test]
    fn frame_left_invariance() {
        // d L_a maps X_j(e) to X_j(a): push the ambient vector at e by the
        // differential of left translation and compare.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let a = random_point(&mut rng, 1);
            let n = 1;
            for j in 0..2 * n {
                // dL_a at e: (v_1, v_2, v_3) -> (v_1, v_2, v_3 + (a_1 v_2 - a_2 v_1)/2)
                let at_e = frame_vector(j, &GroupPoint::origin(n)).unwrap();
                let pushed_v = at_e[2] + 0.5 * (a.coords()[0] * at_e[1] - a.coords()[1] * at_e[0]);
                let at_a = frame_vector(j, &a).unwrap();
                assert_abs_diff_eq!(at_e[0], at_a[0], epsilon = 1e-12);
                assert_abs_diff_eq!(at_e[1], at_a[1], epsilon = 1e-12);
                assert_abs_diff_eq!(pushed_v, at_a[2], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn horizontal_vector_ambient_and_norm() {
        let base = GroupPoint::xyz(0.0, 4.0, 0.0);
        let v = HorizontalVector::new(vec![1.0, 0.0], base).unwrap();
        assert_eq!(v.ambient().as_slice(), &[1.0, 0.0, -2.0]);
        assert_abs_diff_eq!(v.norm_h(), 1.0);
    }

    #[test]
    fn gauge_is_homogeneous() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let a = random_point(&mut rng, 1);
            let tau = rng.gen_range(0.1..4.0);
            assert_abs_diff_eq!(
                gauge(&dilate(&a, tau).unwrap()),
                tau * gauge(&a),
                epsilon = 1e-10 * (1.0 + gauge(&a))
            );
        }
    }

    fn midpoint_mass_3d(spec: &MollifierSpec, k: usize) -> f64 {
        let eps = spec.epsilon;
        let r_h = MOLLIFIER_GAUGE_RADIUS * eps;
        let r_v = MOLLIFIER_GAUGE_RADIUS * MOLLIFIER_GAUGE_RADIUS * eps * eps / 4.0;
        let (dh, dv) = (2.0 * r_h / k as f64, 2.0 * r_v / k as f64);
        let mut mass = 0.0;
        for ix in 0..k {
            let x = -r_h + (ix as f64 + 0.5) * dh;
            for iy in 0..k {
                let y = -r_h + (iy as f64 + 0.5) * dh;
                for iz in 0..k {
                    let z = -r_v + (iz as f64 + 0.5) * dv;
                    mass += spec.eval(&GroupPoint::xyz(x, y, z));
                }
            }
        }
        mass * dh * dh * dv
    }

    #[test]
    fn mollifier_unit_mass_by_independent_grid_quadrature() {
        // Richardson-extrapolated 3D midpoint quadrature for n=1, three scales
        for &eps in &[0.05f64, 0.1, 0.2] {
            let spec = MollifierSpec::new(eps, 1).unwrap();
            let coarse = midpoint_mass_3d(&spec, 150);
            let fine = midpoint_mass_3d(&spec, 300);
            let mass = (4.0 * fine - coarse) / 3.0;
            assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-6);
        }
        // the closed-form normalization for n = 1 is r0^4 pi^2 / 120
        let spec = MollifierSpec::new(1.0, 1).unwrap();
        let pi = std::f64::consts::PI;
        let r0 = MOLLIFIER_GAUGE_RADIUS;
        assert_abs_diff_eq!(
            1.0 / spec.norm_const,
            r0.powi(4) * pi * pi / 120.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn mollifier_nonnegative_and_supported_in_gauge_ball() {
        let spec = MollifierSpec::new(0.1, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..2000 {
            let p = GroupPoint::xyz(
                rng.gen_range(-0.1..0.1),
                rng.gen_range(-0.1..0.1),
                rng.gen_range(-0.01..0.01),
            );
            let v = spec.eval(&p);
            assert!(v >= 0.0);
            if gauge(&p) > MOLLIFIER_GAUGE_RADIUS * 0.1 {
                assert_eq!(v, 0.0);
            }
        }
    }
}
