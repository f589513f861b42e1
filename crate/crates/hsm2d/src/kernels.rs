//! Half-plane representation kernels and their complex-scaled compositions.
//!
//! Everything reduces to the double-layer kernel of a half-plane,
//! h(x1, z) = (i k x1 / 2) H_1^{(1)}(k R) / R with R = sqrt(x1^2 + z^2),
//! evaluated on analytic continuations of its arguments. The evaluation is
//! organized around the scaled Hankel function so the oscillatory factor
//! e^{i k R} is applied once, analytically; with Im(R) >= 0 (guaranteed by
//! the scaling geometry) that factor only ever decays.

use num_complex::Complex64;

use crate::error::HsmError;
use crate::geometry::{
    complex_distance, in_omega_theta, local_coords, tau, tau_prime, HalfPlaneIndex, Point2,
    WaveParams,
};
use crate::special::hankel1_scaled;

/// Double-layer half-plane kernel with complex wavenumber and complex
/// arguments. `kappa` is real for the standard kernels and k e^{i theta}
/// for the rotated-contour form used by the dissipativity check.
pub(crate) fn h_kernel_complex(
    kappa: Complex64,
    w: Complex64,
    z: Complex64,
) -> Result<Complex64, HsmError> {
    let w2z2 = w * w + z * z;
    if w2z2.re < 0.0 && w2z2.im.abs() <= 1e-8 * w2z2.norm() {
        return Err(HsmError::Domain(format!(
            "kernel distance argument {w2z2} lies on the square-root branch cut"
        )));
    }
    let r = complex_distance(w, z);
    let kr = kappa * r;
    let h1s = hankel1_scaled(1, kr)?;
    let im_kr = kr.im;
    if im_kr < -700.0 {
        return Err(HsmError::Overflow(format!(
            "kernel phase e^{{i k R}} overflows at k R = {kr}"
        )));
    }
    let phase = (Complex64::new(0.0, 1.0) * kr).exp();
    Ok(Complex64::new(0.0, 0.5) * kappa * w * h1s * phase / r)
}

/// The half-plane double-layer kernel h(x1, z) for a real offset x1 > 0 from
/// the trace line and a (possibly complex-scaled) lateral coordinate z.
pub fn kernel_h(params: &WaveParams, x1: f64, z: Complex64) -> Result<Complex64, HsmError> {
    if !(x1 > 0.0) {
        return Err(HsmError::Domain(format!(
            "half-plane kernel needs a positive offset, got x1 = {x1}"
        )));
    }
    h_kernel_complex(Complex64::new(params.k, 0.0), Complex64::new(x1, 0.0), z)
}

/// Robin-trace kernel lambda(x1, z) = (d/dx1 - ik) h(x1, z), in closed form:
/// (ik / 2R) [ (1 - i k x1) H_1^{(1)}(kR) - (k x1^2 / R) H_2^{(1)}(kR) ].
pub fn kernel_lambda(params: &WaveParams, x1: f64, z: Complex64) -> Result<Complex64, HsmError> {
    if !(x1 > 0.0) {
        return Err(HsmError::Domain(format!(
            "Robin kernel needs a positive offset, got x1 = {x1}"
        )));
    }
    let k = params.k;
    let w = Complex64::new(x1, 0.0);
    let w2z2 = w * w + z * z;
    if w2z2.re < 0.0 && w2z2.im.abs() <= 1e-8 * w2z2.norm() {
        return Err(HsmError::Domain(format!(
            "kernel distance argument {w2z2} lies on the square-root branch cut"
        )));
    }
    let r = complex_distance(w, z);
    let kr = Complex64::new(k, 0.0) * r;
    let h1s = hankel1_scaled(1, kr)?;
    let h2s = hankel1_scaled(2, kr)?;
    let phase = (Complex64::new(0.0, 1.0) * kr).exp();
    let ik = Complex64::new(0.0, k);
    let bracket = (Complex64::new(1.0, 0.0) - ik * x1) * h1s - (k * x1 * x1 / r) * h2s;
    Ok(ik / (2.0 * r) * bracket * phase)
}

/// Kernel of the scaled half-plane exchange operator: for a target t > a on
/// one trace line, the contribution of the neighboring scaled trace at s is
/// h(tau(t) - a, a - tau(s)) tau'(s). Zero for t <= a, where the operator
/// vanishes by construction.
pub fn kernel_dtheta(params: &WaveParams, t: f64, s: f64) -> Result<Complex64, HsmError> {
    if t <= params.a {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let a = Complex64::new(params.a, 0.0);
    let w = tau(params, t) - a;
    let z = a - tau(params, s);
    let v = h_kernel_complex(Complex64::new(params.k, 0.0), w, z)?;
    Ok(v * tau_prime(params, s))
}

/// The same kernel written as an unscaled half-plane kernel with the rotated
/// wavenumber k e^{i theta} at real arguments; for t, s > a this equals
/// [`kernel_dtheta`] identically, which is the algebraic form of the
/// dissipativity of the scaled exchange operator.
pub fn kernel_dtheta_dissipative(
    params: &WaveParams,
    t: f64,
    s: f64,
) -> Result<Complex64, HsmError> {
    if s <= params.a {
        return Err(HsmError::Domain(format!(
            "rotated-wavenumber form needs a source coordinate beyond the box, got s = {s}"
        )));
    }
    if t <= params.a {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let kappa = Complex64::new(params.k, 0.0) * params.scaling_factor();
    h_kernel_complex(
        kappa,
        Complex64::new(t - params.a, 0.0),
        Complex64::new(s - params.a, 0.0),
    )
}

/// Harmonic (zero-frequency) limit of the exchange kernel: the half-plane
/// Poisson kernel h0(x1, z) = x1 / (pi (x1^2 + z^2)) composed the same way as
/// [`kernel_dtheta`], without scaling. Zero for t <= a. The exchange operator
/// built from it bounds the norm of its oscillatory counterparts.
pub fn kernel_limit(a: f64, t: f64, s: f64) -> Complex64 {
    if t <= a {
        return Complex64::new(0.0, 0.0);
    }
    let x1 = t - a;
    let z = a - s;
    Complex64::new(x1 / (std::f64::consts::PI * (x1 * x1 + z * z)), 0.0)
}

/// Kernel of the representation formula of half-plane `j` evaluated at the
/// physical point `p`: h(x1^j - a, x2^j - tau(s)) tau'(s) in the local frame.
/// Fails when `p` lies outside the convergence region of representation `j`.
pub fn kernel_reconstruction(
    params: &WaveParams,
    j: HalfPlaneIndex,
    p: Point2,
    s: f64,
) -> Result<Complex64, HsmError> {
    if !in_omega_theta(params, j, p) {
        let (l1, l2) = local_coords(j, p);
        return Err(HsmError::Domain(format!(
            "point ({}, {}) with local coordinates ({l1}, {l2}) lies outside the \
             validity region of half-plane {}",
            p.x1,
            p.x2,
            j.index()
        )));
    }
    let (l1, l2) = local_coords(j, p);
    let w = Complex64::new(l1 - params.a, 0.0);
    let z = Complex64::new(l2, 0.0) - tau(params, s);
    let v = h_kernel_complex(Complex64::new(params.k, 0.0), w, z)?;
    Ok(v * tau_prime(params, s))
}
