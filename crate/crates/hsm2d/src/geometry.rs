//! Problem parameters, half-plane frames, and the complex scaling path.
//!
//! The computational square has half-width `a`; half-plane `j` (j = 0..3,
//! counted counterclockwise from the right one) sees the plane in coordinates
//! rotated by j*pi/2, and its boundary line carries a 1D coordinate `s`. The
//! complex scaling maps `s` to `tau(s)`, which leaves [-a, a] fixed and bends
//! both tails into the upper complex half-plane at angle `theta`, turning
//! oscillatory trace tails into exponentially decaying ones.

use num_complex::Complex64;

use crate::error::HsmError;

/// Wavenumber, box half-widths and scaling angle for one problem instance.
#[derive(Debug, Clone, Copy)]
pub struct WaveParams {
    /// Wavenumber k > 0.
    pub k: f64,
    /// Half-width of the matching square (traces live on its side lines).
    pub a: f64,
    /// Half-width of the outer square used by the coupled solver; `None`
    /// for the pure exterior problem.
    pub b: Option<f64>,
    /// Complex-scaling angle, in (0, pi/2); the coupled solver additionally
    /// requires theta < pi/4 so the four scaled representations cover the
    /// outer boundary.
    pub theta: f64,
}

impl WaveParams {
    /// Parameters for the exterior Dirichlet problem on the square.
    pub fn new(k: f64, a: f64, theta: f64) -> Result<Self, HsmError> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(HsmError::InvalidSpec(format!("wavenumber must be positive, got {k}")));
        }
        if !(a > 0.0 && a.is_finite()) {
            return Err(HsmError::InvalidSpec(format!("half-width must be positive, got {a}")));
        }
        if !(theta > 0.0 && theta < std::f64::consts::FRAC_PI_2) {
            return Err(HsmError::InvalidSpec(format!(
                "scaling angle must lie in (0, pi/2), got {theta}"
            )));
        }
        Ok(WaveParams { k, a, b: None, theta })
    }

    /// Parameters for the coupled problem with an outer square of half-width
    /// `b > a`; the scaling angle must then satisfy theta < pi/4.
    pub fn with_outer(k: f64, a: f64, b: f64, theta: f64) -> Result<Self, HsmError> {
        let mut p = WaveParams::new(k, a, theta)?;
        if !(b > a && b.is_finite()) {
            return Err(HsmError::InvalidSpec(format!(
                "outer half-width must exceed the inner one, got b = {b}, a = {a}"
            )));
        }
        if theta >= std::f64::consts::FRAC_PI_4 {
            return Err(HsmError::InvalidSpec(format!(
                "coupled problems need a scaling angle below pi/4, got {theta}"
            )));
        }
        p.b = Some(b);
        Ok(p)
    }

    /// e^{i theta}, the slope of the scaled path outside [-a, a].
    pub fn scaling_factor(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.theta)
    }
}

/// Index of one of the four half-planes, always reduced mod 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HalfPlaneIndex(u8);

impl HalfPlaneIndex {
    pub const ALL: [HalfPlaneIndex; 4] = [
        HalfPlaneIndex(0),
        HalfPlaneIndex(1),
        HalfPlaneIndex(2),
        HalfPlaneIndex(3),
    ];

    pub fn new(j: i64) -> Self {
        HalfPlaneIndex(j.rem_euclid(4) as u8)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// The counterclockwise neighbor j+1.
    pub fn next(self) -> Self {
        HalfPlaneIndex((self.0 + 1) % 4)
    }

    /// The clockwise neighbor j-1.
    pub fn prev(self) -> Self {
        HalfPlaneIndex((self.0 + 3) % 4)
    }
}

/// A point of the physical plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2 {
    pub x1: f64,
    pub x2: f64,
}

impl Point2 {
    pub fn new(x1: f64, x2: f64) -> Self {
        Point2 { x1, x2 }
    }

    pub fn norm(self) -> f64 {
        self.x1.hypot(self.x2)
    }
}

/// The complex scaling path: identity on [-a, a], both tails bent upward at
/// angle theta. Odd by construction: tau(-s) = -tau(s) exactly.
pub fn tau(params: &WaveParams, s: f64) -> Complex64 {
    let a = params.a;
    if s > a {
        let e = params.scaling_factor();
        Complex64::new(a + (s - a) * e.re, (s - a) * e.im)
    } else if s < -a {
        let e = params.scaling_factor();
        Complex64::new(-a + (s + a) * e.re, (s + a) * e.im)
    } else {
        Complex64::new(s, 0.0)
    }
}

/// Derivative of the scaling path; the two kink points carry the outer value
/// (quadrature panels are split there, so interior nodes never see them).
pub fn tau_prime(params: &WaveParams, s: f64) -> Complex64 {
    if s.abs() >= params.a {
        params.scaling_factor()
    } else {
        Complex64::new(1.0, 0.0)
    }
}

/// Coordinates of `p` in the frame of half-plane `j` (rotation by -j*pi/2,
/// with exact integer cosines so rotations are bit-reproducible).
pub fn local_coords(j: HalfPlaneIndex, p: Point2) -> (f64, f64) {
    match j.index() {
        0 => (p.x1, p.x2),
        1 => (p.x2, -p.x1),
        2 => (-p.x1, -p.x2),
        _ => (-p.x2, p.x1),
    }
}

/// The point of the boundary line of half-plane `j` at distance `r` from the
/// origin (r = a for the matching square, r = b for the outer one) and 1D
/// coordinate `t` along the line: the inverse of [`local_coords`] applied to
/// the local point (r, t).
pub fn side_point(j: HalfPlaneIndex, r: f64, t: f64) -> Point2 {
    match j.index() {
        0 => Point2::new(r, t),
        1 => Point2::new(-t, r),
        2 => Point2::new(-r, -t),
        _ => Point2::new(t, -r),
    }
}

/// Principal square root with the branch cut on the negative real axis
/// resolved to the upper side: arguments are taken in (-pi, pi], so negative
/// real inputs map to i*sqrt(|z|) regardless of the sign of a zero imaginary
/// part. The result always has Re >= 0.
pub fn principal_sqrt(z: Complex64) -> Complex64 {
    if z.im == 0.0 && z.re < 0.0 {
        return Complex64::new(0.0, (-z.re).sqrt());
    }
    z.sqrt()
}

/// The analytic continuation sqrt(w^2 + z^2) of the Euclidean distance
/// R(x1, x2) = sqrt(x1^2 + x2^2), via the principal square root.
pub fn complex_distance(w: Complex64, z: Complex64) -> Complex64 {
    principal_sqrt(w * w + z * z)
}

/// Strict test whether `p` lies in the region of half-plane `j` where its
/// scaled representation converges: x1^j > a together with the cone condition
/// x1^j - a > (|x2^j| - a) tan(theta). For points with |x2^j| <= a the cone
/// condition alone would wrongly admit points behind the matching line (its
/// right-hand side turns negative there), so the half-plane constraint is
/// intersected explicitly.
pub fn in_omega_theta(params: &WaveParams, j: HalfPlaneIndex, p: Point2) -> bool {
    in_omega_theta_margin(params, j, p, 0.0)
}

/// Like [`in_omega_theta`] with a safety margin added to both constraints;
/// reconstruction uses a small positive margin so quadrature never evaluates
/// kernels arbitrarily close to the region boundary.
pub fn in_omega_theta_margin(
    params: &WaveParams,
    j: HalfPlaneIndex,
    p: Point2,
    margin: f64,
) -> bool {
    let (l1, l2) = local_coords(j, p);
    l1 - params.a > margin && l1 - params.a > (l2.abs() - params.a) * params.theta.tan() + margin
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(theta: f64) -> WaveParams {
        WaveParams::new(2.0 * std::f64::consts::PI, 1.0, theta).unwrap()
    }

    #[test]
    fn parameter_validation_rejects_bad_inputs() {
        assert!(WaveParams::new(0.0, 1.0, 0.5).is_err());
        assert!(WaveParams::new(1.0, -1.0, 0.5).is_err());
        assert!(WaveParams::new(1.0, 1.0, 0.0).is_err());
        assert!(WaveParams::new(1.0, 1.0, std::f64::consts::FRAC_PI_2).is_err());
        assert!(WaveParams::with_outer(1.0, 1.0, 0.9, 0.5).is_err());
        assert!(WaveParams::with_outer(1.0, 1.0, 1.5, 1.0).is_err());
        assert!(WaveParams::with_outer(1.0, 1.0, 1.5, 0.5).is_ok());
    }

    #[test]
    fn half_plane_index_arithmetic_wraps() {
        let j = HalfPlaneIndex::new(3);
        assert_eq!(j.next().index(), 0);
        assert_eq!(j.prev().index(), 2);
        assert_eq!(HalfPlaneIndex::new(-1).index(), 3);
        assert_eq!(HalfPlaneIndex::new(7).index(), 3);
    }

    #[test]
    fn tau_fixes_the_inner_interval_and_bends_the_tails() {
        let p = params(std::f64::consts::FRAC_PI_6);
        assert_eq!(tau(&p, 0.0), Complex64::new(0.0, 0.0));
        assert_eq!(tau(&p, 1.0), Complex64::new(1.0, 0.0));
        assert_eq!(tau(&p, -1.0), Complex64::new(-1.0, 0.0));
        let t = tau(&p, 2.0);
        let e = p.scaling_factor();
        assert!((t - (Complex64::new(1.0, 0.0) + e)).norm() < 1e-15);
        // Imaginary part grows linearly with slope sin(theta) outside [-a, a].
        for &s in &[1.5, 3.0, 10.0, 42.0] {
            let im = tau(&p, s).im;
            assert!((im - (s - 1.0) * p.theta.sin()).abs() <= 1e-13 * s.abs());
        }
    }

    #[test]
    fn tau_prime_is_piecewise_constant_with_outer_value_at_kinks() {
        let p = params(0.7);
        assert_eq!(tau_prime(&p, 0.3), Complex64::new(1.0, 0.0));
        assert_eq!(tau_prime(&p, 5.0), p.scaling_factor());
        assert_eq!(tau_prime(&p, -5.0), p.scaling_factor());
        assert_eq!(tau_prime(&p, 1.0), p.scaling_factor());
        assert_eq!(tau_prime(&p, -1.0), p.scaling_factor());
    }

    #[test]
    fn local_coords_round_trip_on_all_half_planes() {
        let p = Point2::new(0.3, -1.7);
        for j in HalfPlaneIndex::ALL {
            let (l1, l2) = local_coords(j, p);
            let back = side_point(j, l1, l2);
            assert_eq!(back, p);
            // Rotations preserve the norm exactly (components only move).
            assert_eq!(Point2::new(l1, l2).norm(), p.norm());
        }
    }

    #[test]
    fn side_points_agree_at_shared_corners() {
        // The end t = a of side j is the start t = -a of side j+1.
        let a = 1.25;
        for j in HalfPlaneIndex::ALL {
            let p = side_point(j, a, a);
            let q = side_point(j.next(), a, -a);
            assert_eq!(p, q);
        }
    }

    #[test]
    fn principal_sqrt_examples_and_cut_side() {
        let r = principal_sqrt(Complex64::new(-1.0, 0.0));
        assert!((r - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        // The cut belongs to the upper side even for a negative zero.
        let r2 = principal_sqrt(Complex64::new(-4.0, -0.0));
        assert!((r2 - Complex64::new(0.0, 2.0)).norm() < 1e-15);
        let r3 = principal_sqrt(Complex64::new(0.0, 2.0));
        assert!((r3 - Complex64::new(1.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn complex_distance_reduces_to_euclidean_on_reals() {
        let r = complex_distance(Complex64::new(3.0, 0.0), Complex64::new(4.0, 0.0));
        assert!((r - Complex64::new(5.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn region_test_is_strict() {
        let p = params(std::f64::consts::FRAC_PI_4);
        let j0 = HalfPlaneIndex::new(0);
        assert!(in_omega_theta(&p, j0, Point2::new(2.0, 0.5)));
        // Just outside the boundary ray x1 - a = (|x2| - a) tan(theta) the
        // test fails; just inside it passes. (The ray itself is fp-ambiguous
        // at theta = pi/4 because tan rounds below 1.)
        assert!(!in_omega_theta(&p, j0, Point2::new(2.0, 2.0 + 1e-8)));
        assert!(in_omega_theta(&p, j0, Point2::new(2.0 + 1e-8, 2.0)));
        // Behind the matching line it certainly fails.
        assert!(!in_omega_theta(&p, j0, Point2::new(0.5, 0.0)));
        // The same physical point seen from the top half-plane.
        assert!(in_omega_theta(&p, HalfPlaneIndex::new(1), Point2::new(0.5, 2.0)));
    }

    #[test]
    fn union_of_regions_covers_far_points_when_theta_below_quarter_pi() {
        let p = params(std::f64::consts::FRAC_PI_6);
        for &(x1, x2) in &[(1.5, 0.0), (1.5, 1.5), (-1.2, 0.4), (0.0, -2.0), (-3.0, 3.0)] {
            let pt = Point2::new(x1, x2);
            let covered = HalfPlaneIndex::ALL.iter().any(|&j| in_omega_theta(&p, j, pt));
            assert!(covered, "point ({x1}, {x2}) not covered");
        }
    }

    #[test]
    fn quadrant_lower_bound_for_scaled_distance() {
        // For w in the sector 0 <= Arg w <= theta and any s, the analytic
        // distance R(w, tau(s) - a) satisfies
        // |R|^2 >= cos^2(theta) (|w|^2 + |tau(s) - a|^2).
        for &theta in &[
            std::f64::consts::FRAC_PI_6,
            std::f64::consts::FRAC_PI_4,
            std::f64::consts::FRAC_PI_3,
        ] {
            let p = params(theta);
            let cos2 = theta.cos() * theta.cos();
            for &mag in &[0.1, 1.0, 5.0] {
                for &frac in &[0.0, 0.5, 1.0] {
                    let w = Complex64::from_polar(mag, frac * theta);
                    let mut s = -50.0;
                    while s <= 50.0 {
                        let z = tau(&p, s) - Complex64::new(p.a, 0.0);
                        let r = complex_distance(w, z);
                        let lhs = r.norm_sqr();
                        let rhs = cos2 * (w.norm_sqr() + z.norm_sqr());
                        assert!(
                            lhs >= rhs - 1e-12 * rhs.max(1.0),
                            "theta={theta} w={w} s={s}: {lhs} < {rhs}"
                        );
                        s += 0.7;
                    }
                }
            }
        }
    }

    #[test]
    fn scaled_distance_has_nonnegative_imaginary_part_for_real_w() {
        // Reconstruction evaluates R(x1 - a, x2 - tau(s)) with real x1 > a;
        // its square lands in the closed upper half-plane, so the principal
        // root does too (this is what keeps kernel arguments dissipative).
        let p = params(std::f64::consts::FRAC_PI_6);
        for &w in &[0.2, 1.0, 7.3] {
            let mut s = -40.0;
            while s <= 40.0 {
                let z = tau(&p, s) - Complex64::new(p.a, 0.0);
                let r = complex_distance(Complex64::new(w, 0.0), z);
                assert!(r.im >= -1e-15, "w={w} s={s} Im R = {}", r.im);
                assert!(r.re >= 0.0);
                s += 0.37;
            }
        }
    }

    proptest! {
        #[test]
        fn tau_is_exactly_odd(s in -100.0f64..100.0, theta in 0.05f64..1.5) {
            let p = params(theta);
            let plus = tau(&p, s);
            let minus = tau(&p, -s);
            prop_assert_eq!(minus, -plus);
        }

        #[test]
        fn principal_sqrt_squares_back(re in -50.0f64..50.0, im in -50.0f64..50.0) {
            let z = Complex64::new(re, im);
            prop_assume!(z.norm() > 1e-6);
            let r = principal_sqrt(z);
            prop_assert!(r.re >= 0.0);
            prop_assert!((r * r - z).norm() <= 1e-14 * z.norm());
        }

        #[test]
        fn local_frames_preserve_distances(x1 in -10.0f64..10.0, x2 in -10.0f64..10.0, j in 0i64..4) {
            let p = Point2::new(x1, x2);
            let (l1, l2) = local_coords(HalfPlaneIndex::new(j), p);
            prop_assert!((l1.hypot(l2) - p.norm()).abs() <= 1e-15 * p.norm().max(1.0));
        }
    }
}
