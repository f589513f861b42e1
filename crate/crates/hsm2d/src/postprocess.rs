//! Field reconstruction, far-field extraction, and reference solutions.
//!
//! The solved traces determine the exterior field through four deformed
//! half-plane representations; each is valid on a wedge-shaped region, and
//! together (for scaling angles below pi/4) the wedges cover everything
//! outside the matching box. This module evaluates those representation
//! integrals at points, stitches them (plus an optional interior solver's
//! values) into labeled field grids, extracts the far-field coefficient on
//! the four axis directions, and provides two independent reference
//! solutions: the outgoing point source and the sound-soft circle series.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::HsmError;
use crate::geometry::{
    complex_distance, in_omega_theta_margin, local_coords, tau, tau_prime, HalfPlaneIndex,
    Point2, WaveParams,
};
use crate::kernels::kernel_reconstruction;
use crate::quadrature::GaussRule;
use crate::special::hankel1;
use crate::trace::TraceBasis;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Relative safety margin for region membership: reconstruction never
/// evaluates kernels closer than this (times the box half-width) to the
/// validity-region boundary, where the representation integral degrades.
const RECON_MARGIN_REL: f64 = 1e-9;

/// Quadrature controls for the representation integral along the trace line.
#[derive(Clone, Copy, Debug)]
pub struct ReconstructionSpec {
    /// Maximum panel length along the line.
    pub step: f64,
    /// Gauss points per panel.
    pub order: usize,
}

impl Default for ReconstructionSpec {
    fn default() -> Self {
        Self { step: 0.1, order: 5 }
    }
}

/// Which solver branch supplied a grid point's value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    /// Interior solver value (coupled problems only).
    Fem,
    /// Deformed half-plane representation of the given side.
    Branch(u8),
    /// Point not covered by any representation (inside the box without an
    /// interior solver).
    Outside,
}

impl Provenance {
    pub fn label(self) -> String {
        match self {
            Provenance::Fem => "fem".to_string(),
            Provenance::Branch(j) => format!("j{j}"),
            Provenance::Outside => "outside".to_string(),
        }
    }
}

/// Field values on a list of evaluation points, with per-point provenance.
#[derive(Clone, Debug)]
pub struct FieldGrid {
    pub points: Vec<Point2>,
    pub values: Vec<Complex64>,
    pub provenance: Vec<Provenance>,
}

impl FieldGrid {
    /// CSV export: one line per point.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,re,im,provenance\n");
        for i in 0..self.points.len() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                self.points[i].x1,
                self.points[i].x2,
                self.values[i].re,
                self.values[i].im,
                self.provenance[i].label()
            ));
        }
        out
    }

    /// Legacy-format VTK export (polydata vertices with complex field
    /// components and the provenance as an integer label).
    pub fn to_vtk(&self) -> String {
        let n = self.points.len();
        let mut out = String::new();
        out.push_str("# vtk DataFile Version 3.0\n");
        out.push_str("scattered field\nASCII\nDATASET POLYDATA\n");
        out.push_str(&format!("POINTS {n} double\n"));
        for p in &self.points {
            out.push_str(&format!("{} {} 0\n", p.x1, p.x2));
        }
        out.push_str(&format!("VERTICES {n} {}\n", 2 * n));
        for i in 0..n {
            out.push_str(&format!("1 {i}\n"));
        }
        out.push_str(&format!("POINT_DATA {n}\n"));
        out.push_str("SCALARS re double 1\nLOOKUP_TABLE default\n");
        for v in &self.values {
            out.push_str(&format!("{}\n", v.re));
        }
        out.push_str("SCALARS im double 1\nLOOKUP_TABLE default\n");
        for v in &self.values {
            out.push_str(&format!("{}\n", v.im));
        }
        out.push_str("SCALARS magnitude double 1\nLOOKUP_TABLE default\n");
        for v in &self.values {
            out.push_str(&format!("{}\n", v.norm()));
        }
        out.push_str("SCALARS provenance int 1\nLOOKUP_TABLE default\n");
        for p in &self.provenance {
            let code = match p {
                Provenance::Fem => -1i32,
                Provenance::Branch(j) => *j as i32,
                Provenance::Outside => -2,
            };
            out.push_str(&format!("{code}\n"));
        }
        out
    }
}

/// Far-field coefficients on the four axis directions.
#[derive(Clone, Debug)]
pub struct FarFieldReport {
    /// F on direction j (the outward normal of side j).
    pub values: [Complex64; 4],
    pub k: f64,
    pub a: f64,
    pub theta: f64,
    pub t_max: f64,
}

impl FarFieldReport {
    /// Structured-text export with all parameters echoed.
    pub fn to_json(&self) -> String {
        let mut out = String::from("{\n");
        out.push_str(&format!("  \"k\": {},\n", self.k));
        out.push_str(&format!("  \"a\": {},\n", self.a));
        out.push_str(&format!("  \"theta\": {},\n", self.theta));
        out.push_str(&format!("  \"t_max\": {},\n", self.t_max));
        out.push_str("  \"far_field\": [\n");
        for (j, v) in self.values.iter().enumerate() {
            let comma = if j + 1 < 4 { "," } else { "" };
            out.push_str(&format!(
                "    {{\"direction\": {j}, \"re\": {}, \"im\": {}}}{comma}\n",
                v.re, v.im
            ));
        }
        out.push_str("  ]\n}\n");
        out
    }
}

/// Evaluates the deformed representation of half-plane `j` at `p` from a
/// scaled trace given as a function, integrating over [-t_max, t_max] with
/// panels split at the given kink locations. Fails outside the validity
/// region of representation `j` (with the safety margin).
pub fn reconstruct_point_fn<F>(
    params: &WaveParams,
    j: HalfPlaneIndex,
    p: Point2,
    trace: F,
    t_max: f64,
    cuts: &[f64],
    spec: &ReconstructionSpec,
) -> Result<Complex64, HsmError>
where
    F: Fn(f64) -> Complex64,
{
    let margin = RECON_MARGIN_REL * params.a;
    if !in_omega_theta_margin(params, j, p, margin) {
        let (l1, l2) = local_coords(j, p);
        return Err(HsmError::Domain(format!(
            "point ({}, {}) with local coordinates ({l1}, {l2}) lies outside the validity \
             region of half-plane {}",
            p.x1,
            p.x2,
            j.index()
        )));
    }
    let rule = GaussRule::legendre(spec.order);
    let mut bounds: Vec<f64> = vec![-t_max];
    for &c in cuts {
        if c > -t_max && c < t_max {
            bounds.push(c);
        }
    }
    bounds.push(t_max);
    bounds.sort_by(|x, y| x.partial_cmp(y).unwrap());
    bounds.dedup();
    let mut acc = ZERO;
    let mut err: Option<HsmError> = None;
    for w in bounds.windows(2) {
        let n = (((w[1] - w[0]) / spec.step - 1e-12).ceil() as usize).max(1);
        for i in 0..n {
            let pa = w[0] + (w[1] - w[0]) * i as f64 / n as f64;
            let pb = w[0] + (w[1] - w[0]) * (i + 1) as f64 / n as f64;
            let jac = 0.5 * (pb - pa);
            for (&x, &wt) in rule.nodes.iter().zip(rule.weights.iter()) {
                let s = 0.5 * (pa + pb) + jac * x;
                match kernel_reconstruction(params, j, p, s) {
                    Ok(kv) => acc += kv * trace(s) * (wt * jac),
                    Err(e) => {
                        err = Some(e);
                    }
                }
            }
        }
    }
    match err {
        Some(e) => Err(e),
        None => Ok(acc),
    }
}

/// Evaluates the deformed representation of half-plane `j` at `p` from the
/// finite-element trace coefficients of side `j`.
pub fn reconstruct_point(
    params: &WaveParams,
    basis: &TraceBasis,
    coeffs: &[Complex64],
    j: HalfPlaneIndex,
    p: Point2,
    spec: &ReconstructionSpec,
) -> Result<Complex64, HsmError> {
    let cuts: Vec<f64> = (0..basis.n_elements())
        .map(|e| basis.element_span(e).0)
        .chain(std::iter::once(basis.t_max()))
        .collect();
    reconstruct_point_fn(
        params,
        j,
        p,
        |s| basis.evaluate(coeffs, s),
        basis.t_max(),
        &cuts,
        spec,
    )
}

/// Stitches the four representations (and an optional interior solver) into
/// a labeled grid. `interior` returns Some(value) when a point belongs to
/// the interior solver's region; representation branches are tried in
/// ascending side order. Points inside the matching box that no branch or
/// interior solver covers are labeled Outside with value zero; uncovered
/// points outside the box (possible only for scaling angles >= pi/4) are
/// an error.
pub fn reconstruct_field<F>(
    params: &WaveParams,
    basis: &TraceBasis,
    traces: &[Vec<Complex64>; 4],
    interior: Option<&F>,
    points: &[Point2],
    spec: &ReconstructionSpec,
) -> Result<FieldGrid, HsmError>
where
    F: Fn(Point2) -> Option<Complex64> + Sync,
{
    let margin = RECON_MARGIN_REL * params.a;
    let results: Vec<Result<(Complex64, Provenance), HsmError>> = points
        .par_iter()
        .map(|&p| {
            if let Some(f) = interior {
                if let Some(v) = f(p) {
                    return Ok((v, Provenance::Fem));
                }
            }
            for j in HalfPlaneIndex::ALL {
                if in_omega_theta_margin(params, j, p, margin) {
                    let v = reconstruct_point(
                        params,
                        basis,
                        &traces[j.index()],
                        j,
                        p,
                        spec,
                    )?;
                    return Ok((v, Provenance::Branch(j.index() as u8)));
                }
            }
            if p.x1.abs() <= params.a && p.x2.abs() <= params.a {
                return Ok((ZERO, Provenance::Outside));
            }
            Err(HsmError::Domain(format!(
                "point ({}, {}) is not covered by any half-plane representation; \
                 scaling angles below pi/4 cover the whole exterior",
                p.x1, p.x2
            )))
        })
        .collect();
    let mut values = Vec::with_capacity(points.len());
    let mut provenance = Vec::with_capacity(points.len());
    for r in results {
        let (v, pr) = r?;
        values.push(v);
        provenance.push(pr);
    }
    Ok(FieldGrid {
        points: points.to_vec(),
        values,
        provenance,
    })
}

/// Exact integrals of the Lagrange shape functions over one element, as
/// fractions of the element length.
fn shape_integral_weights(q: usize) -> &'static [f64] {
    match q {
        1 => &[0.5, 0.5],
        2 => &[1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
        _ => &[1.0 / 8.0, 3.0 / 8.0, 3.0 / 8.0, 1.0 / 8.0],
    }
}

/// Far-field coefficient of the scattered field in the axis direction of
/// side `j`: e^{-ika} sqrt(k/pi) (1-i)/2 times the integral of the scaled
/// trace against the path derivative. The trace is piecewise polynomial and
/// the path derivative is constant on every element, so the integral is
/// exact.
pub fn far_field_axis(
    params: &WaveParams,
    basis: &TraceBasis,
    coeffs: &[Complex64],
) -> Complex64 {
    assert_eq!(coeffs.len(), basis.n_dofs(), "coefficient length mismatch");
    let w = shape_integral_weights(basis.q());
    let mut acc = ZERO;
    for e in 0..basis.n_elements() {
        let (lo, hi) = basis.element_span(e);
        let tp = tau_prime(params, 0.5 * (lo + hi));
        let mut local = ZERO;
        for (l, m) in basis.element_dofs(e).enumerate() {
            local += coeffs[m] * w[l];
        }
        acc += local * tp * (hi - lo);
    }
    // The representation radiates from the side line, not the origin, so
    // referencing the far field to e^{ikR}/sqrt(R) costs a phase e^{-ika}.
    let shift = Complex64::new(0.0, -params.k * params.a).exp();
    (params.k / std::f64::consts::PI).sqrt() * Complex64::new(0.5, -0.5) * shift * acc
}

/// Far-field coefficients on all four axis directions.
pub fn far_field_report(
    params: &WaveParams,
    basis: &TraceBasis,
    traces: &[Vec<Complex64>; 4],
) -> FarFieldReport {
    let values = [
        far_field_axis(params, basis, &traces[0]),
        far_field_axis(params, basis, &traces[1]),
        far_field_axis(params, basis, &traces[2]),
        far_field_axis(params, basis, &traces[3]),
    ];
    FarFieldReport {
        values,
        k: params.k,
        a: params.a,
        theta: params.theta,
        t_max: basis.t_max(),
    }
}

/// The outgoing point source (i/4) H0(k |p|): the exact exterior solution
/// whose boundary trace is used for validation.
pub fn exact_hankel_solution(params: &WaveParams, p: Point2) -> Result<Complex64, HsmError> {
    let r = p.norm();
    if r == 0.0 {
        return Err(HsmError::Domain(
            "the point-source reference solution is singular at the origin".to_string(),
        ));
    }
    Ok(Complex64::new(0.0, 0.25) * hankel1(0, Complex64::new(params.k * r, 0.0))?)
}

/// The scaled trace of the point source on any side line: the analytic
/// continuation of (i/4) H0(k sqrt(a^2 + s^2)) along the bent path. The
/// same function serves all four sides by radial symmetry.
pub fn exact_hankel_scaled_trace(params: &WaveParams, s: f64) -> Result<Complex64, HsmError> {
    let r = complex_distance(Complex64::new(params.a, 0.0), tau(params, s));
    Ok(Complex64::new(0.0, 0.25) * hankel1(0, Complex64::new(params.k, 0.0) * r)?)
}

// ---------------------------------------------------------------------------
// Sound-soft circle reference series.
// ---------------------------------------------------------------------------

const MIE_ORDER_CAP: usize = 200;
const MIE_TAIL_TOL: f64 = 1e-12;

/// Cylindrical Hankel values H_m(z) for m = 0..=m_max by upward recurrence
/// (stable for H), from the library's order-0 and order-1 evaluations.
fn hankel_ladder(z: f64, m_max: usize) -> Result<Vec<Complex64>, HsmError> {
    let zc = Complex64::new(z, 0.0);
    let mut h = Vec::with_capacity(m_max + 1);
    h.push(hankel1(0, zc)?);
    if m_max >= 1 {
        h.push(hankel1(1, zc)?);
    }
    for m in 1..m_max {
        let next = h[m] * (2.0 * m as f64 / z) - h[m - 1];
        h.push(next);
    }
    Ok(h)
}

/// Reflection coefficients c_m = J_m(k r0) / H_m(k r0) of the sound-soft
/// circle. For real arguments J_m = Re H_m, so the ladder provides both.
fn mie_coefficients(k: f64, radius: f64, m_max: usize) -> Result<Vec<Complex64>, HsmError> {
    let h = hankel_ladder(k * radius, m_max)?;
    Ok(h.iter()
        .map(|hm| Complex64::new(hm.re, 0.0) / hm)
        .collect())
}

fn mie_truncation_order(k: f64, radius: f64) -> Result<usize, HsmError> {
    // The coefficients decay super-exponentially beyond m ~ k r0; find the
    // first order where two successive coefficients drop below the tail
    // tolerance.
    let c = mie_coefficients(k, radius, MIE_ORDER_CAP)?;
    let mut small = 0;
    for (m, cm) in c.iter().enumerate() {
        if cm.norm() < MIE_TAIL_TOL {
            small += 1;
            if small >= 2 {
                return Ok(m);
            }
        } else {
            small = 0;
        }
    }
    Err(HsmError::ConvergenceFailure(format!(
        "circle series did not reach tail tolerance {MIE_TAIL_TOL} within order {MIE_ORDER_CAP} \
         (k r0 = {})",
        k * radius
    )))
}

/// Scattered field of the sound-soft circle of the given radius centered at
/// the origin, hit by the unit plane wave from direction angle `alpha`
/// (incident field e^{i k (x cos alpha + y sin alpha)}), evaluated at `p`
/// outside the circle.
pub fn mie_scattered_field(
    k: f64,
    radius: f64,
    alpha: f64,
    p: Point2,
) -> Result<Complex64, HsmError> {
    if !(radius > 0.0) {
        return Err(HsmError::InvalidSpec(format!(
            "circle radius must be positive, got {radius}"
        )));
    }
    let r = p.norm();
    if r < radius * (1.0 - 1e-12) {
        return Err(HsmError::Domain(format!(
            "evaluation point ({}, {}) lies inside the circle of radius {radius}",
            p.x1, p.x2
        )));
    }
    let m_max = mie_truncation_order(k, radius)?;
    let c = mie_coefficients(k, radius, m_max)?;
    let h = hankel_ladder(k * r, m_max)?;
    let phi = p.x2.atan2(p.x1);
    let mut acc = ZERO;
    for m in 0..=m_max {
        let eps = if m == 0 { 1.0 } else { 2.0 };
        let im = Complex64::i().powu(m as u32);
        acc -= eps * im * c[m] * h[m] * (m as f64 * (phi - alpha)).cos();
    }
    Ok(acc)
}

/// Far-field coefficient of the sound-soft circle in observation direction
/// angle `phi`: the scattered field behaves like F(phi) e^{ikr}/sqrt(r).
pub fn mie_far_field(k: f64, radius: f64, alpha: f64, phi: f64) -> Result<Complex64, HsmError> {
    if !(radius > 0.0) {
        return Err(HsmError::InvalidSpec(format!(
            "circle radius must be positive, got {radius}"
        )));
    }
    let m_max = mie_truncation_order(k, radius)?;
    let c = mie_coefficients(k, radius, m_max)?;
    // H_m(kr) ~ sqrt(2/(pi k r)) e^{i(kr - m pi/2 - pi/4)}: the i^m factor
    // cancels e^{-i m pi/2} exactly.
    let front = -(2.0 / (std::f64::consts::PI * k)).sqrt()
        * (Complex64::new(0.0, -std::f64::consts::FRAC_PI_4)).exp();
    let mut acc = ZERO;
    for m in 0..=m_max {
        let eps = if m == 0 { 1.0 } else { 2.0 };
        acc += eps * c[m] * (m as f64 * (phi - alpha)).cos();
    }
    Ok(front * acc)
}

/// Relative discrete L2 and Linf distances between two grids over the
/// points where both carry a value (provenance not Outside), relative to
/// the second grid. Errors when the point sets differ.
pub fn error_norms(a: &FieldGrid, b: &FieldGrid) -> Result<(f64, f64), HsmError> {
    if a.points.len() != b.points.len() {
        return Err(HsmError::InvalidSpec(format!(
            "grids have {} and {} points; error norms need matching point sets",
            a.points.len(),
            b.points.len()
        )));
    }
    for (pa, pb) in a.points.iter().zip(b.points.iter()) {
        if pa != pb {
            return Err(HsmError::InvalidSpec(format!(
                "grid points ({}, {}) and ({}, {}) differ; error norms need matching point sets",
                pa.x1, pa.x2, pb.x1, pb.x2
            )));
        }
    }
    let mut diff2 = 0.0f64;
    let mut ref2 = 0.0f64;
    let mut diff_inf = 0.0f64;
    let mut ref_inf = 0.0f64;
    for i in 0..a.points.len() {
        if a.provenance[i] == Provenance::Outside || b.provenance[i] == Provenance::Outside {
            continue;
        }
        let d = (a.values[i] - b.values[i]).norm();
        let r = b.values[i].norm();
        diff2 += d * d;
        ref2 += r * r;
        diff_inf = diff_inf.max(d);
        ref_inf = ref_inf.max(r);
    }
    if ref2 == 0.0 {
        return Ok((0.0, 0.0));
    }
    Ok(((diff2 / ref2).sqrt(), diff_inf / ref_inf))
}
