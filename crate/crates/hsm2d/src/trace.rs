//! Discrete trace spaces on the four matching lines.
//!
//! Each half-plane representation carries an unknown trace on its matching
//! line, parameterized by arc length s in [-T, T] with the box corners at
//! s = +-a. The mesh places nodes exactly at +-a (the integral kernels have
//! kinks there and the Dirichlet data ends there) and is mirror symmetric:
//! node coordinates satisfy s[i] = -s[n-1-i] bitwise, so the reflection
//! s -> -s acts on coefficient vectors as exact index reversal. The coupling
//! operators between adjacent half-planes are reflections of one shared
//! Galerkin block, and the index-reversal property lets assembly reuse that
//! block without any interpolation error.
//!
//! Degrees of freedom on the data region [-a, a] are constrained to the
//! boundary data; the remaining dofs are the unknowns of the matching system.

use num_complex::Complex64;

use crate::error::HsmError;
use crate::geometry::WaveParams;
use crate::linalg::DenseComplexMatrix;
use crate::quadrature::GaussRule;

/// Mesh parameters for one matching-line trace.
#[derive(Clone, Copy, Debug)]
pub struct TraceGridSpec {
    /// Truncation half-length T of the matching line; must exceed the box
    /// half-width a.
    pub t_max: f64,
    /// Target element width; actual widths are the nearest values that fit
    /// whole elements into [-T, -a], [-a, a] and [a, T].
    pub h_mesh: f64,
    /// Polynomial degree of the nodal basis, 1 or 2.
    pub q: usize,
}

/// Nodal finite-element space on the symmetric trace mesh.
#[derive(Clone, Debug)]
pub struct TraceBasis {
    q: usize,
    t_max: f64,
    a: f64,
    /// Element breakpoints, ascending, breaks[0] = -T, breaks[last] = T.
    breaks: Vec<f64>,
    /// Dof coordinates, ascending; element e owns dofs q*e ..= q*e + q.
    nodes: Vec<f64>,
    /// True for dofs on the data region [-a, a].
    constrained: Vec<bool>,
    /// Global indices of the unconstrained dofs, ascending.
    free: Vec<usize>,
    /// Position of a global dof in `free`, if unconstrained.
    free_index: Vec<Option<usize>>,
    /// Number of elements left of the data region (mesh is symmetric).
    n_outer: usize,
    /// Number of elements inside the data region.
    n_inner: usize,
}

fn segment_count(length: f64, h: f64) -> usize {
    ((length / h - 1e-12).ceil() as usize).max(1)
}

/// Builds the trace space for the given wave parameters and mesh spec.
pub fn build_space(params: &WaveParams, spec: &TraceGridSpec) -> Result<TraceBasis, HsmError> {
    let a = params.a;
    if !(spec.t_max.is_finite() && spec.t_max > a) {
        return Err(HsmError::InvalidSpec(format!(
            "trace truncation t_max = {} must exceed the box half-width a = {a}",
            spec.t_max
        )));
    }
    if !(spec.h_mesh > 0.0 && spec.h_mesh.is_finite()) {
        return Err(HsmError::InvalidSpec(format!(
            "trace mesh width h_mesh = {} must be positive",
            spec.h_mesh
        )));
    }
    if !(1..=3).contains(&spec.q) {
        return Err(HsmError::InvalidSpec(format!(
            "trace basis degree q = {} is not supported (use 1, 2, or 3)",
            spec.q
        )));
    }
    let n_outer = segment_count(spec.t_max - a, spec.h_mesh);
    let n_inner = segment_count(2.0 * a, spec.h_mesh);

    // Breakpoints of the right half, with the endpoints pinned so that +-a
    // and +-T are exact; the left half is the bitwise negation. Interior
    // inner breakpoints a*(2i - n)/n negate exactly under i -> n - i.
    let mut breaks = Vec::with_capacity(2 * n_outer + n_inner + 1);
    for i in 0..=n_inner {
        if i == 0 {
            breaks.push(-a);
        } else if i == n_inner {
            breaks.push(a);
        } else {
            breaks.push(a * (2.0 * i as f64 - n_inner as f64) / n_inner as f64);
        }
    }
    for i in 1..=n_outer {
        if i == n_outer {
            breaks.push(spec.t_max);
        } else {
            breaks.push(a + (spec.t_max - a) * i as f64 / n_outer as f64);
        }
    }
    let right: Vec<f64> = breaks.clone();
    let mut all = Vec::with_capacity(2 * n_outer + n_inner + 1);
    for i in (n_inner + 1..=n_inner + n_outer).rev() {
        all.push(-right[i]);
    }
    all.extend_from_slice(&right);
    let breaks = all;

    // Interior nodes are written so a mirrored element produces the exact
    // negations: sums are commutative and negation is exact, so the node
    // list reverses bitwise under s -> -s for every degree.
    let n_elements = breaks.len() - 1;
    let mut nodes = Vec::with_capacity(spec.q * n_elements + 1);
    for e in 0..n_elements {
        nodes.push(breaks[e]);
        match spec.q {
            2 => nodes.push(0.5 * (breaks[e] + breaks[e + 1])),
            3 => {
                nodes.push((2.0 * breaks[e] + breaks[e + 1]) / 3.0);
                nodes.push((breaks[e] + 2.0 * breaks[e + 1]) / 3.0);
            }
            _ => {}
        }
    }
    nodes.push(breaks[n_elements]);

    // Inner elements occupy positions n_outer .. n_outer + n_inner; every dof
    // they own (shared endpoints at -+a included) carries boundary data.
    let n_dofs = nodes.len();
    let mut constrained = vec![false; n_dofs];
    for e in n_outer..n_outer + n_inner {
        for l in 0..=spec.q {
            constrained[spec.q * e + l] = true;
        }
    }
    let mut free = Vec::new();
    let mut free_index = vec![None; n_dofs];
    for (m, &fixed) in constrained.iter().enumerate() {
        if !fixed {
            free_index[m] = Some(free.len());
            free.push(m);
        }
    }

    Ok(TraceBasis {
        q: spec.q,
        t_max: spec.t_max,
        a,
        breaks,
        nodes,
        constrained,
        free,
        free_index,
        n_outer,
        n_inner,
    })
}

impl TraceBasis {
    pub fn q(&self) -> usize {
        self.q
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn box_half_width(&self) -> f64 {
        self.a
    }

    pub fn n_elements(&self) -> usize {
        self.breaks.len() - 1
    }

    pub fn n_dofs(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_free(&self) -> usize {
        self.free.len()
    }

    /// Elements per outer segment [a, T] (the left segment matches).
    pub fn n_outer_elements(&self) -> usize {
        self.n_outer
    }

    /// Elements inside the data region [-a, a].
    pub fn n_inner_elements(&self) -> usize {
        self.n_inner
    }

    pub fn node(&self, m: usize) -> f64 {
        self.nodes[m]
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn element_span(&self, e: usize) -> (f64, f64) {
        (self.breaks[e], self.breaks[e + 1])
    }

    /// Global dof indices owned by element `e`, ascending.
    pub fn element_dofs(&self, e: usize) -> impl Iterator<Item = usize> + '_ {
        let base = self.q * e;
        (0..=self.q).map(move |l| base + l)
    }

    pub fn is_constrained(&self, m: usize) -> bool {
        self.constrained[m]
    }

    pub fn free_dofs(&self) -> &[usize] {
        &self.free
    }

    pub fn free_position(&self, m: usize) -> Option<usize> {
        self.free_index[m]
    }

    /// Index of the basis function mirrored under s -> -s. Exact because the
    /// node list reverses bitwise under negation.
    pub fn refl(&self, m: usize) -> usize {
        self.nodes.len() - 1 - m
    }

    /// Lagrange shape values on the reference element xi in [-1, 1].
    /// Entries beyond q + 1 are zero.
    pub fn shape_values(&self, xi: f64) -> [f64; 4] {
        match self.q {
            1 => [0.5 * (1.0 - xi), 0.5 * (1.0 + xi), 0.0, 0.0],
            2 => [
                0.5 * xi * (xi - 1.0),
                1.0 - xi * xi,
                0.5 * xi * (xi + 1.0),
                0.0,
            ],
            _ => {
                // Nodes at -1, -1/3, 1/3, 1.
                let t = xi * xi - 1.0 / 9.0;
                let u = xi * xi - 1.0;
                [
                    -(9.0 / 16.0) * t * (xi - 1.0),
                    (27.0 / 16.0) * u * (xi - 1.0 / 3.0),
                    -(27.0 / 16.0) * u * (xi + 1.0 / 3.0),
                    (9.0 / 16.0) * t * (xi + 1.0),
                ]
            }
        }
    }

    /// Element containing `s` and the reference coordinate of `s` in it;
    /// `None` outside [-T, T]. Points on interior breakpoints resolve to the
    /// element on their right.
    pub fn locate(&self, s: f64) -> Option<(usize, f64)> {
        if !(s >= -self.t_max && s <= self.t_max) {
            return None;
        }
        let n_el = self.n_elements();
        let e = match self.breaks.partition_point(|&b| b <= s) {
            0 => 0,
            p if p > n_el => n_el - 1,
            p => p - 1,
        };
        let (sl, sr) = self.element_span(e);
        Some((e, 2.0 * (s - sl) / (sr - sl) - 1.0))
    }

    /// Evaluates the trace function with the given coefficients at `s`;
    /// zero outside the truncated line.
    pub fn evaluate(&self, coeffs: &[Complex64], s: f64) -> Complex64 {
        assert_eq!(coeffs.len(), self.n_dofs(), "coefficient length mismatch");
        let Some((e, xi)) = self.locate(s) else {
            return Complex64::new(0.0, 0.0);
        };
        let shapes = self.shape_values(xi);
        let mut value = Complex64::new(0.0, 0.0);
        for (l, m) in self.element_dofs(e).enumerate() {
            value += shapes[l] * coeffs[m];
        }
        value
    }

    /// Galerkin mass matrix over all dofs, assembled with a Gauss rule that
    /// is exact for the degree-2q integrand.
    pub fn mass_matrix(&self) -> DenseComplexMatrix {
        let rule = GaussRule::legendre(self.q + 1);
        let n = self.n_dofs();
        let mut mass = DenseComplexMatrix::zeros(n, n);
        for e in 0..self.n_elements() {
            let (sl, sr) = self.element_span(e);
            let jac = 0.5 * (sr - sl);
            for (&xi, &w) in rule.nodes.iter().zip(rule.weights.iter()) {
                let shapes = self.shape_values(xi);
                for (li, mi) in self.element_dofs(e).enumerate() {
                    for (lj, mj) in self.element_dofs(e).enumerate() {
                        mass.add_at(
                            mi,
                            mj,
                            Complex64::new(w * jac * shapes[li] * shapes[lj], 0.0),
                        );
                    }
                }
            }
        }
        mass
    }
}

/// Dirichlet data on the four sides of the box, parameterized by the local
/// coordinate t in [-a, a] of each side.
pub struct BoundaryData<'a> {
    sides: [&'a (dyn Fn(f64) -> Complex64 + Sync); 4],
}

impl<'a> BoundaryData<'a> {
    /// Wraps the four side functions and checks that adjacent sides agree at
    /// the shared corners: side j at t = a and side j+1 at t = -a sample the
    /// same physical corner point.
    pub fn new(
        sides: [&'a (dyn Fn(f64) -> Complex64 + Sync); 4],
        a: f64,
    ) -> Result<Self, HsmError> {
        for j in 0..4 {
            let end = (sides[j])(a);
            let start = (sides[(j + 1) % 4])(-a);
            let scale = end.norm().max(start.norm()).max(1e-30);
            if (end - start).norm() > 1e-9 * scale {
                return Err(HsmError::InvalidSpec(format!(
                    "boundary data disagrees at the corner shared by sides {j} and {}: \
                     {end} vs {start}",
                    (j + 1) % 4
                )));
            }
        }
        Ok(Self { sides })
    }

    pub fn side(&self, j: usize) -> &dyn Fn(f64) -> Complex64 {
        self.sides[j]
    }

    pub fn eval(&self, j: usize, t: f64) -> Complex64 {
        (self.sides[j])(t)
    }
}

/// Nodal interpolant of side `j`'s data on the trace mesh: data-region dofs
/// take the sampled value, free dofs are zero.
pub fn interpolate_boundary_data(
    basis: &TraceBasis,
    data: &BoundaryData<'_>,
    j: usize,
) -> Vec<Complex64> {
    let mut coeffs = vec![Complex64::new(0.0, 0.0); basis.n_dofs()];
    for m in 0..basis.n_dofs() {
        if basis.is_constrained(m) {
            coeffs[m] = data.eval(j, basis.node(m));
        }
    }
    coeffs
}

/// Serializes four trace coefficient vectors to CSV with one row per dof:
/// side index, node coordinate, real part, imaginary part.
pub fn traces_to_csv(basis: &TraceBasis, traces: &[Vec<Complex64>; 4]) -> String {
    let mut out = String::from("side,s,re,im\n");
    for (j, coeffs) in traces.iter().enumerate() {
        assert_eq!(coeffs.len(), basis.n_dofs(), "trace length mismatch");
        for (m, value) in coeffs.iter().enumerate() {
            out.push_str(&format!(
                "{j},{},{},{}\n",
                basis.node(m),
                value.re,
                value.im
            ));
        }
    }
    out
}
