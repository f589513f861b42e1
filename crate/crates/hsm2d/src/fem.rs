//! Interior finite elements and their coupling to the matching lines.
//!
//! Localized perturbations of free space (an impenetrable obstacle, a
//! variable coefficient, a compactly supported source) are handled by meshing
//! the region between the obstacle boundary and an outer square of half-width
//! b with triangles, discretizing the Helmholtz form with nodal elements, and
//! tying the interior unknown to the four half-plane traces in both
//! directions: the interior solution supplies the trace values on the inner
//! square, and the half-plane representations supply an exact radiation
//! condition on the outer square through a Robin-trace exchange integral.
//!
//! The coupled system over (trace unknowns, interior unknowns) is solved
//! either monolithically (one dense factorization, for small problems) or by
//! eliminating the interior block through a reordered banded factorization
//! plus a low-rank correction for the outer-square exchange rows, leaving a
//! dense Schur complement on the trace unknowns alone.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::assembly::{uniform_panels, HsmSystem, QuadratureSpec};
use crate::error::HsmError;
use crate::geometry::{local_coords, tau, tau_prime, HalfPlaneIndex, Point2, WaveParams};
use crate::kernels::kernel_lambda;
use crate::linalg::{lu_factor, BandLu, BandMatrix, DenseComplexMatrix};
use crate::quadrature::GaussRule;
use crate::trace::TraceBasis;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Largest coupled system (trace plus interior unknowns) the automatic
/// strategy still solves with one dense factorization.
const AUTO_DENSE_LIMIT: usize = 1500;

/// Six-point symmetric triangle rule, exact for polynomials of degree 4:
/// barycentric coordinates and weights relative to the triangle area.
const TRI_RULE: [([f64; 3], f64); 6] = [
    (
        [0.445948490915965, 0.445948490915965, 0.108103018168070],
        0.223381589678011,
    ),
    (
        [0.445948490915965, 0.108103018168070, 0.445948490915965],
        0.223381589678011,
    ),
    (
        [0.108103018168070, 0.445948490915965, 0.445948490915965],
        0.223381589678011,
    ),
    (
        [0.091576213509771, 0.091576213509771, 0.816847572980458],
        0.109951743655322,
    ),
    (
        [0.091576213509771, 0.816847572980458, 0.091576213509771],
        0.109951743655322,
    ),
    (
        [0.816847572980458, 0.091576213509771, 0.091576213509771],
        0.109951743655322,
    ),
];

// ---------------------------------------------------------------------------
// Compressed sparse rows
// ---------------------------------------------------------------------------

/// Complex matrix in compressed sparse row form, built from triplets.
#[derive(Clone, Debug)]
pub struct SparseComplexMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<Complex64>,
}

impl SparseComplexMatrix {
    /// Sorts the triplets by (row, column) and sums duplicates.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        mut triplets: Vec<(usize, usize, Complex64)>,
    ) -> Self {
        triplets.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<Complex64> = Vec::with_capacity(triplets.len());
        let mut last = (usize::MAX, usize::MAX);
        for (i, j, v) in triplets {
            assert!(i < n_rows && j < n_cols, "triplet ({i}, {j}) out of bounds");
            if (i, j) == last {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                last = (i, j);
            }
            row_ptr[i + 1] = col_idx.len();
        }
        // Rows without entries inherit the running prefix.
        for i in 1..=n_rows {
            if row_ptr[i] < row_ptr[i - 1] {
                row_ptr[i] = row_ptr[i - 1];
            }
        }
        SparseComplexMatrix {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn n_nonzeros(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[span.clone()].binary_search(&j) {
            Ok(p) => self.values[span.start + p],
            Err(_) => ZERO,
        }
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n_cols);
        let mut y = vec![ZERO; self.n_rows];
        for i in 0..self.n_rows {
            let mut acc = ZERO;
            for (j, v) in self.row(i) {
                acc += v * x[j];
            }
            y[i] = acc;
        }
        y
    }
}

// ---------------------------------------------------------------------------
// Mesh
// ---------------------------------------------------------------------------

/// Tag on a mesh edge: the obstacle boundary, or side j of the inner or
/// outer square (side j is the segment where the j-th local first coordinate
/// equals the square's half-width).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeTag {
    Obstacle,
    Inner(u8),
    Outer(u8),
}

impl EdgeTag {
    pub fn label(self) -> String {
        match self {
            EdgeTag::Obstacle => "obstacle".to_string(),
            EdgeTag::Inner(j) => format!("inner{j}"),
            EdgeTag::Outer(j) => format!("outer{j}"),
        }
    }

    pub fn parse(s: &str) -> Option<EdgeTag> {
        match s {
            "obstacle" => Some(EdgeTag::Obstacle),
            _ => {
                let (kind, idx) = s.split_at(s.len().checked_sub(1)?);
                let j: u8 = idx.parse().ok()?;
                if j > 3 {
                    return None;
                }
                match kind {
                    "inner" => Some(EdgeTag::Inner(j)),
                    "outer" => Some(EdgeTag::Outer(j)),
                    _ => None,
                }
            }
        }
    }
}

/// Conforming triangle mesh of the region between the obstacle boundary and
/// the outer square, with the inner square embedded as tagged interior edges.
/// Region 0 lies between the squares, region 1 inside the inner one.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh2D {
    pub vertices: Vec<Point2>,
    /// Vertex triples, counterclockwise.
    pub triangles: Vec<[usize; 3]>,
    /// Region id per triangle.
    pub regions: Vec<u32>,
    /// Tagged edges as vertex pairs.
    pub tagged_edges: Vec<(usize, usize, EdgeTag)>,
}

pub const REGION_OUTER: u32 = 0;
pub const REGION_INNER: u32 = 1;

fn edge_key(v0: usize, v1: usize) -> (usize, usize) {
    (v0.min(v1), v0.max(v1))
}

impl Mesh2D {
    fn double_area(&self, t: usize) -> f64 {
        let [i, j, k] = self.triangles[t];
        let (p0, p1, p2) = (self.vertices[i], self.vertices[j], self.vertices[k]);
        (p1.x1 - p0.x1) * (p2.x2 - p0.x2) - (p2.x1 - p0.x1) * (p1.x2 - p0.x2)
    }

    /// Checks conformity, orientation, region assignment, and that the tagged
    /// edges cover the complete boundary plus both squares at the half-widths
    /// of `params`.
    pub fn validate(&self, params: &WaveParams) -> Result<(), HsmError> {
        let a = params.a;
        let b = params.b.ok_or_else(|| {
            HsmError::InvalidSpec(
                "mesh validation needs parameters with an outer half-width".to_string(),
            )
        })?;
        let nv = self.vertices.len();
        let nt = self.triangles.len();
        if self.regions.len() != nt {
            return Err(HsmError::Mesh(format!(
                "{} region ids for {} triangles",
                self.regions.len(),
                nt
            )));
        }
        for (i, p) in self.vertices.iter().enumerate() {
            if !(p.x1.is_finite() && p.x2.is_finite()) {
                return Err(HsmError::Mesh(format!("vertex {i} is not finite")));
            }
        }
        let mut used = vec![false; nv];
        let mut edge_count: HashMap<(usize, usize), u8> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for &v in tri {
                if v >= nv {
                    return Err(HsmError::Mesh(format!(
                        "triangle {t} references vertex {v} of {nv}"
                    )));
                }
                used[v] = true;
            }
            let ar2 = self.double_area(t);
            if !(ar2 > 1e-13 * b * b) {
                return Err(HsmError::Mesh(format!(
                    "triangle {t} is degenerate or clockwise (double area {ar2})"
                )));
            }
            for e in 0..3 {
                let c = edge_count.entry(edge_key(tri[e], tri[(e + 1) % 3])).or_insert(0);
                *c += 1;
                if *c > 2 {
                    return Err(HsmError::Mesh(format!(
                        "edge ({}, {}) is shared by more than two triangles",
                        tri[e],
                        tri[(e + 1) % 3]
                    )));
                }
            }
        }
        if let Some(i) = used.iter().position(|&u| !u) {
            return Err(HsmError::Mesh(format!(
                "vertex {i} is not referenced by any triangle"
            )));
        }
        for (t, &r) in self.regions.iter().enumerate() {
            if r > 1 {
                return Err(HsmError::Mesh(format!("triangle {t} has region id {r}")));
            }
            let [i, j, k] = self.triangles[t];
            let cx = (self.vertices[i].x1 + self.vertices[j].x1 + self.vertices[k].x1) / 3.0;
            let cy = (self.vertices[i].x2 + self.vertices[j].x2 + self.vertices[k].x2) / 3.0;
            let m = cx.abs().max(cy.abs());
            let tol = 1e-12 * a.max(1.0);
            let want = if m < a - tol {
                REGION_INNER
            } else if m > a + tol {
                REGION_OUTER
            } else {
                return Err(HsmError::Mesh(format!(
                    "triangle {t} has its centroid on the inner square"
                )));
            };
            if r != want {
                return Err(HsmError::Mesh(format!(
                    "triangle {t} has region {r} but its centroid lies in region {want}"
                )));
            }
        }
        // Every tagged edge must be a mesh edge on the right geometry, with
        // the right multiplicity; boundary edges must all be tagged.
        let tol = 1e-9 * a.max(1.0);
        let mut tagged: HashMap<(usize, usize), EdgeTag> = HashMap::new();
        let mut side_len = [[0.0f64; 4]; 2];
        for &(v0, v1, tag) in &self.tagged_edges {
            if v0 >= nv || v1 >= nv {
                return Err(HsmError::Mesh(format!(
                    "tagged edge ({v0}, {v1}) references a missing vertex"
                )));
            }
            let count = *edge_count.get(&edge_key(v0, v1)).unwrap_or(&0);
            if count == 0 {
                return Err(HsmError::Mesh(format!(
                    "tagged edge ({v0}, {v1}) is not an edge of any triangle"
                )));
            }
            if tagged.insert(edge_key(v0, v1), tag).is_some() {
                return Err(HsmError::Mesh(format!(
                    "edge ({v0}, {v1}) is tagged more than once"
                )));
            }
            let (p0, p1) = (self.vertices[v0], self.vertices[v1]);
            let len = (p1.x1 - p0.x1).hypot(p1.x2 - p0.x2);
            match tag {
                EdgeTag::Obstacle => {
                    if count != 1 {
                        return Err(HsmError::Mesh(format!(
                            "obstacle edge ({v0}, {v1}) is not a boundary edge"
                        )));
                    }
                    for p in [p0, p1] {
                        if !(p.x1.abs().max(p.x2.abs()) < a) {
                            return Err(HsmError::Mesh(format!(
                                "obstacle edge ({v0}, {v1}) leaves the open inner square"
                            )));
                        }
                    }
                }
                EdgeTag::Inner(j) | EdgeTag::Outer(j) => {
                    let (outer, r) = match tag {
                        EdgeTag::Outer(_) => (true, b),
                        _ => (false, a),
                    };
                    if j > 3 {
                        return Err(HsmError::Mesh(format!("edge tag side {j} out of range")));
                    }
                    if outer && count != 1 {
                        return Err(HsmError::Mesh(format!(
                            "outer-square edge ({v0}, {v1}) is not a boundary edge"
                        )));
                    }
                    if !outer && count != 2 {
                        return Err(HsmError::Mesh(format!(
                            "inner-square edge ({v0}, {v1}) is not an interior edge"
                        )));
                    }
                    let hp = HalfPlaneIndex::new(j as i64);
                    for p in [p0, p1] {
                        let (l1, l2) = local_coords(hp, p);
                        if (l1 - r).abs() > tol || l2.abs() > r + tol {
                            return Err(HsmError::Mesh(format!(
                                "edge ({v0}, {v1}) tagged {} does not lie on that side",
                                tag.label()
                            )));
                        }
                    }
                    side_len[usize::from(outer)][j as usize] += len;
                }
            }
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            for e in 0..3 {
                let k = edge_key(tri[e], tri[(e + 1) % 3]);
                if edge_count[&k] == 1 && !tagged.contains_key(&k) {
                    return Err(HsmError::Mesh(format!(
                        "boundary edge ({}, {}) of triangle {t} carries no tag",
                        tri[e],
                        tri[(e + 1) % 3]
                    )));
                }
            }
        }
        for (outer, r) in [(0usize, a), (1usize, b)] {
            for j in 0..4 {
                let want = 2.0 * r;
                if (side_len[outer][j] - want).abs() > 1e-9 * want {
                    return Err(HsmError::Mesh(format!(
                        "side {j} of the {} square has tagged length {} instead of {want}",
                        if outer == 1 { "outer" } else { "inner" },
                        side_len[outer][j]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Serializes to the plain-text `hsm-mesh v1` format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("hsm-mesh v1\n");
        let _ = writeln!(out, "vertices {}", self.vertices.len());
        for p in &self.vertices {
            let _ = writeln!(out, "{:.17e} {:.17e}", p.x1, p.x2);
        }
        let _ = writeln!(out, "triangles {}", self.triangles.len());
        for (tri, r) in self.triangles.iter().zip(self.regions.iter()) {
            let _ = writeln!(out, "{} {} {} {}", tri[0], tri[1], tri[2], r);
        }
        let _ = writeln!(out, "edges {}", self.tagged_edges.len());
        for &(v0, v1, tag) in &self.tagged_edges {
            let _ = writeln!(out, "{} {} {}", v0, v1, tag.label());
        }
        out
    }

    /// Parses the `hsm-mesh v1` format written by [`Mesh2D::to_text`].
    pub fn from_text(text: &str) -> Result<Mesh2D, HsmError> {
        fn take<'t>(
            lines: &[(usize, &'t str)],
            cursor: &mut usize,
            what: &str,
        ) -> Result<(usize, &'t str), HsmError> {
            let item = lines.get(*cursor).copied().ok_or_else(|| {
                HsmError::Mesh(format!("unexpected end of file, expected {what}"))
            })?;
            *cursor += 1;
            Ok(item)
        }
        fn bad(n: usize, what: &str) -> HsmError {
            HsmError::Mesh(format!("line {}: {what}", n + 1))
        }
        fn count(line: &str, n: usize, word: &str) -> Result<usize, HsmError> {
            let mut it = line.split_whitespace();
            if it.next() != Some(word) {
                return Err(bad(n, &format!("expected a {word:?} section")));
            }
            it.next()
                .and_then(|c| c.parse().ok())
                .ok_or_else(|| bad(n, &format!("bad {word} count")))
        }
        let lines: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .map(|(n, raw)| (n, raw.trim()))
            .filter(|(_, s)| !s.is_empty())
            .collect();
        let mut cursor = 0usize;
        let (n, header) = take(&lines, &mut cursor, "the header")?;
        if header != "hsm-mesh v1" {
            return Err(bad(n, &format!("unknown header {header:?}")));
        }
        let (n, line) = take(&lines, &mut cursor, "the vertex section")?;
        let nv = count(line, n, "vertices")?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (n, line) = take(&lines, &mut cursor, "a vertex")?;
            let mut it = line.split_whitespace().map(|w| w.parse::<f64>());
            match (it.next(), it.next()) {
                (Some(Ok(x)), Some(Ok(y))) => vertices.push(Point2::new(x, y)),
                _ => return Err(bad(n, "bad vertex coordinates")),
            }
        }
        let (n, line) = take(&lines, &mut cursor, "the triangle section")?;
        let nt = count(line, n, "triangles")?;
        let mut triangles = Vec::with_capacity(nt);
        let mut regions = Vec::with_capacity(nt);
        for _ in 0..nt {
            let (n, line) = take(&lines, &mut cursor, "a triangle")?;
            let vals: Vec<usize> = line
                .split_whitespace()
                .map(|w| w.parse::<usize>())
                .collect::<Result<_, _>>()
                .map_err(|_| bad(n, "bad triangle indices"))?;
            if vals.len() != 4 {
                return Err(bad(n, "a triangle needs three vertices and a region"));
            }
            triangles.push([vals[0], vals[1], vals[2]]);
            regions.push(vals[3] as u32);
        }
        let (n, line) = take(&lines, &mut cursor, "the edge section")?;
        let ne = count(line, n, "edges")?;
        let mut tagged_edges = Vec::with_capacity(ne);
        for _ in 0..ne {
            let (n, line) = take(&lines, &mut cursor, "an edge")?;
            let mut it = line.split_whitespace();
            let v0 = it.next().and_then(|w| w.parse().ok());
            let v1 = it.next().and_then(|w| w.parse().ok());
            let tag = it.next().and_then(EdgeTag::parse);
            match (v0, v1, tag) {
                (Some(v0), Some(v1), Some(tag)) => tagged_edges.push((v0, v1, tag)),
                _ => return Err(bad(n, "bad tagged edge")),
            }
        }
        Ok(Mesh2D {
            vertices,
            triangles,
            regions,
            tagged_edges,
        })
    }
}

// ---------------------------------------------------------------------------
// Obstacles and the mesh builder
// ---------------------------------------------------------------------------

/// Shape carved out of the inner square. Polygons must list their vertices
/// in counterclockwise order around the origin (strictly increasing angle,
/// one turn), so every ray from the origin crosses the boundary once; the
/// boundary is sampled at the ring angles of the mesh, so polygon corners
/// are resolved at the perimeter step size.
#[derive(Clone, Debug)]
pub enum ObstacleSpec {
    None,
    Disk { radius: f64 },
    Polygon { vertices: Vec<Point2> },
}

impl ObstacleSpec {
    pub fn validate(&self) -> Result<(), HsmError> {
        match self {
            ObstacleSpec::None => Ok(()),
            ObstacleSpec::Disk { radius } => {
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(HsmError::InvalidSpec(format!(
                        "obstacle radius must be positive, got {radius}"
                    )));
                }
                Ok(())
            }
            ObstacleSpec::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return Err(HsmError::InvalidSpec(format!(
                        "an obstacle polygon needs at least 3 vertices, got {}",
                        vertices.len()
                    )));
                }
                let two_pi = 2.0 * std::f64::consts::PI;
                let mut total = 0.0;
                for (i, p) in vertices.iter().enumerate() {
                    if !(p.norm() > 0.0 && p.x1.is_finite() && p.x2.is_finite()) {
                        return Err(HsmError::InvalidSpec(format!(
                            "polygon vertex {i} must be finite and away from the origin"
                        )));
                    }
                    let q = vertices[(i + 1) % vertices.len()];
                    let gap = (q.x2.atan2(q.x1) - p.x2.atan2(p.x1)).rem_euclid(two_pi);
                    if !(gap > 0.0 && gap < std::f64::consts::PI) {
                        return Err(HsmError::InvalidSpec(format!(
                            "polygon vertices must wind counterclockwise around the origin \
                             with angular gaps under a half turn; gap {i} is {gap}"
                        )));
                    }
                    total += gap;
                }
                if (total - two_pi).abs() > 1e-9 {
                    return Err(HsmError::InvalidSpec(format!(
                        "polygon winds {total} radians around the origin instead of one turn"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Distance from the origin to the obstacle boundary along direction
    /// `phi`; the obstacle must not be `None`.
    pub fn radial_extent(&self, phi: f64) -> Result<f64, HsmError> {
        match self {
            ObstacleSpec::None => Err(HsmError::InvalidSpec(
                "an empty obstacle has no boundary".to_string(),
            )),
            ObstacleSpec::Disk { radius } => Ok(*radius),
            ObstacleSpec::Polygon { vertices } => {
                let n = vertices.len();
                let two_pi = 2.0 * std::f64::consts::PI;
                // Wedge whose angular span contains phi, measured from the
                // first vertex's angle.
                let base = vertices[0].x2.atan2(vertices[0].x1);
                let want = (phi - base).rem_euclid(two_pi);
                let mut acc = 0.0;
                let mut seg = n - 1;
                for i in 0..n {
                    let p = vertices[i];
                    let q = vertices[(i + 1) % n];
                    let gap = (q.x2.atan2(q.x1) - p.x2.atan2(p.x1)).rem_euclid(two_pi);
                    if want >= acc && want < acc + gap {
                        seg = i;
                        break;
                    }
                    acc += gap;
                }
                let p = vertices[seg];
                let q = vertices[(seg + 1) % n];
                let (dx, dy) = (q.x1 - p.x1, q.x2 - p.x2);
                let denom = phi.cos() * dy - phi.sin() * dx;
                if denom.abs() < 1e-14 * (dx.hypot(dy)) {
                    return Err(HsmError::InvalidSpec(format!(
                        "polygon segment {seg} is parallel to the ray at angle {phi}"
                    )));
                }
                let t = (p.x1 * dy - p.x2 * dx) / denom;
                if !(t > 0.0) {
                    return Err(HsmError::InvalidSpec(format!(
                        "polygon does not enclose the origin at angle {phi}"
                    )));
                }
                Ok(t)
            }
        }
    }
}

/// Controls for the structured mesh builder.
#[derive(Clone, Debug)]
pub struct MeshSpec {
    /// Target element size.
    pub h: f64,
    pub obstacle: ObstacleSpec,
}

/// Breakpoints of the trace mesh inside [-a, a]. Passing these to
/// [`build_mesh`] makes the interior nodes on the inner square line up with
/// the constrained trace nodes, which the coupled solver requires.
pub fn trace_inner_breaks(basis: &TraceBasis) -> Vec<f64> {
    let lo = basis.n_outer_elements();
    let hi = lo + basis.n_inner_elements();
    let mut breaks: Vec<f64> = (lo..hi).map(|e| basis.element_span(e).0).collect();
    breaks.push(basis.element_span(hi - 1).1);
    breaks
}

/// Builds the structured mesh: a tensor grid between the squares whose 1D
/// breakpoints extend `inner` by steps of at most `h`, the inner square
/// filled with grid cells when there is no obstacle, and otherwise with a
/// ring of layers interpolated between the obstacle boundary and the inner
/// square's perimeter nodes.
pub fn build_mesh(
    params: &WaveParams,
    inner: &[f64],
    spec: &MeshSpec,
) -> Result<Mesh2D, HsmError> {
    let a = params.a;
    let b = params.b.ok_or_else(|| {
        HsmError::InvalidSpec(
            "interior meshes need parameters with an outer half-width".to_string(),
        )
    })?;
    if !(spec.h > 0.0 && spec.h.is_finite()) {
        return Err(HsmError::InvalidSpec(format!(
            "mesh size must be positive, got {}",
            spec.h
        )));
    }
    if inner.len() < 2 {
        return Err(HsmError::InvalidSpec(
            "the inner breakpoints need at least one interval".to_string(),
        ));
    }
    for w in inner.windows(2) {
        if !(w[1] > w[0]) {
            return Err(HsmError::InvalidSpec(
                "inner breakpoints must increase strictly".to_string(),
            ));
        }
    }
    let tol = 1e-12 * a.max(1.0);
    if (inner[0] + a).abs() > tol || (inner[inner.len() - 1] - a).abs() > tol {
        return Err(HsmError::InvalidSpec(format!(
            "inner breakpoints must span [-a, a] = [{}, {}], got [{}, {}]",
            -a,
            a,
            inner[0],
            inner[inner.len() - 1]
        )));
    }
    spec.obstacle.validate()?;

    // 1D breakpoints on [-b, b]: mirrored outer steps around the given
    // inner ones.
    let n_o = (((b - a) / spec.h - 1e-12).ceil() as usize).max(1);
    let outer: Vec<f64> = (1..=n_o)
        .map(|i| if i == n_o { b } else { a + (b - a) * i as f64 / n_o as f64 })
        .collect();
    let mut xs = Vec::with_capacity(inner.len() + 2 * n_o);
    for i in (0..n_o).rev() {
        xs.push(-outer[i]);
    }
    xs.extend_from_slice(inner);
    xs.extend_from_slice(&outer);
    let nx = xs.len();
    let ia_lo = n_o;
    let ia_hi = n_o + inner.len() - 1;

    let mut vertices: Vec<Point2> = Vec::new();
    let mut vmap: HashMap<(u64, u64), usize> = HashMap::new();
    let mut triangles: Vec<[usize; 3]> = Vec::new();
    let mut regions: Vec<u32> = Vec::new();
    let key = |p: Point2| (p.x1.to_bits(), p.x2.to_bits());
    let mut vid = |p: Point2| -> usize {
        *vmap.entry(key(p)).or_insert_with(|| {
            vertices.push(p);
            vertices.len() - 1
        })
    };

    let has_obstacle = !matches!(spec.obstacle, ObstacleSpec::None);
    for ix in 0..nx - 1 {
        for iy in 0..nx - 1 {
            let inside = ix >= ia_lo && ix < ia_hi && iy >= ia_lo && iy < ia_hi;
            if inside && has_obstacle {
                continue;
            }
            let v00 = vid(Point2::new(xs[ix], xs[iy]));
            let v10 = vid(Point2::new(xs[ix + 1], xs[iy]));
            let v11 = vid(Point2::new(xs[ix + 1], xs[iy + 1]));
            let v01 = vid(Point2::new(xs[ix], xs[iy + 1]));
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
            let r = if inside { REGION_INNER } else { REGION_OUTER };
            regions.push(r);
            regions.push(r);
        }
    }

    let mut obstacle_edges: Vec<(usize, usize)> = Vec::new();
    if has_obstacle {
        // Perimeter nodes of the inner square, counterclockwise from the
        // corner (-a on both axes is the start of side 3's run).
        let mut per: Vec<Point2> = Vec::new();
        for iy in ia_lo..ia_hi {
            per.push(Point2::new(xs[ia_hi], xs[iy]));
        }
        for ix in (ia_lo + 1..=ia_hi).rev() {
            per.push(Point2::new(xs[ix], xs[ia_hi]));
        }
        for iy in (ia_lo + 1..=ia_hi).rev() {
            per.push(Point2::new(xs[ia_lo], xs[iy]));
        }
        for ix in ia_lo..ia_hi {
            per.push(Point2::new(xs[ix], xs[ia_lo]));
        }
        let n_per = per.len();
        let mut obs: Vec<Point2> = Vec::with_capacity(n_per);
        let mut max_thick = 0.0f64;
        for p in &per {
            let phi = p.x2.atan2(p.x1);
            let r_obs = spec.obstacle.radial_extent(phi)?;
            let r_per = p.norm();
            if !(r_obs < r_per * (1.0 - 1e-9)) {
                return Err(HsmError::InvalidSpec(format!(
                    "the obstacle reaches the inner square near angle {phi}"
                )));
            }
            max_thick = max_thick.max(r_per - r_obs);
            obs.push(Point2::new(r_obs * phi.cos(), r_obs * phi.sin()));
        }
        let layers = ((max_thick / spec.h).ceil() as usize).max(1);
        let mut rows: Vec<Vec<usize>> = Vec::with_capacity(layers + 1);
        for l in 0..=layers {
            let row: Vec<usize> = if l == layers {
                per.iter().map(|&p| vid(p)).collect()
            } else {
                let f = l as f64 / layers as f64;
                (0..n_per)
                    .map(|i| {
                        vid(Point2::new(
                            obs[i].x1 + f * (per[i].x1 - obs[i].x1),
                            obs[i].x2 + f * (per[i].x2 - obs[i].x2),
                        ))
                    })
                    .collect()
            };
            rows.push(row);
        }
        for i in 0..n_per {
            let i2 = (i + 1) % n_per;
            obstacle_edges.push((rows[0][i], rows[0][i2]));
            for l in 0..layers {
                triangles.push([rows[l][i], rows[l][i2], rows[l + 1][i2]]);
                triangles.push([rows[l][i], rows[l + 1][i2], rows[l + 1][i]]);
                regions.push(REGION_INNER);
                regions.push(REGION_INNER);
            }
        }
    }

    // Orientation and degeneracy pass.
    for t in 0..triangles.len() {
        let [i, j, k] = triangles[t];
        let (p0, p1, p2) = (vertices[i], vertices[j], vertices[k]);
        let ar2 = (p1.x1 - p0.x1) * (p2.x2 - p0.x2) - (p2.x1 - p0.x1) * (p1.x2 - p0.x2);
        if ar2.abs() <= 1e-13 * b * b {
            return Err(HsmError::Mesh(format!(
                "the mesh builder produced a degenerate triangle near ({}, {})",
                p0.x1, p0.x2
            )));
        }
        if ar2 < 0.0 {
            triangles[t].swap(1, 2);
        }
    }

    // Tags, looked up so a coordinate mismatch fails loudly instead of
    // minting stray vertices.
    let look = |p: Point2| -> Result<usize, HsmError> {
        vmap.get(&key(p)).copied().ok_or_else(|| {
            HsmError::Mesh(format!(
                "expected a mesh vertex at ({}, {}) for an edge tag",
                p.x1, p.x2
            ))
        })
    };
    let mut tagged_edges: Vec<(usize, usize, EdgeTag)> = Vec::new();
    for w in inner.windows(2) {
        let (alo, ahi) = (xs[ia_lo], xs[ia_hi]);
        let sides = [
            (Point2::new(ahi, w[0]), Point2::new(ahi, w[1]), EdgeTag::Inner(0)),
            (Point2::new(w[0], ahi), Point2::new(w[1], ahi), EdgeTag::Inner(1)),
            (Point2::new(alo, w[0]), Point2::new(alo, w[1]), EdgeTag::Inner(2)),
            (Point2::new(w[0], alo), Point2::new(w[1], alo), EdgeTag::Inner(3)),
        ];
        for (p0, p1, tag) in sides {
            tagged_edges.push((look(p0)?, look(p1)?, tag));
        }
    }
    for i in 0..nx - 1 {
        let (blo, bhi) = (xs[0], xs[nx - 1]);
        let sides = [
            (Point2::new(bhi, xs[i]), Point2::new(bhi, xs[i + 1]), EdgeTag::Outer(0)),
            (Point2::new(xs[i], bhi), Point2::new(xs[i + 1], bhi), EdgeTag::Outer(1)),
            (Point2::new(blo, xs[i]), Point2::new(blo, xs[i + 1]), EdgeTag::Outer(2)),
            (Point2::new(xs[i], blo), Point2::new(xs[i + 1], blo), EdgeTag::Outer(3)),
        ];
        for (p0, p1, tag) in sides {
            tagged_edges.push((look(p0)?, look(p1)?, tag));
        }
    }
    for (v0, v1) in obstacle_edges {
        tagged_edges.push((v0, v1, EdgeTag::Obstacle));
    }

    let mesh = Mesh2D {
        vertices,
        triangles,
        regions,
        tagged_edges,
    };
    mesh.validate(params)?;
    Ok(mesh)
}

// ---------------------------------------------------------------------------
// Nodal spaces
// ---------------------------------------------------------------------------

/// Continuous nodal space of degree 1 or 2 on a mesh: vertex dofs first,
/// then (for degree 2) one midpoint dof per edge in sorted edge order.
#[derive(Clone, Debug)]
pub struct FemSpace {
    p: usize,
    n_vertices: usize,
    dof_points: Vec<Point2>,
    tri_dofs: Vec<[usize; 6]>,
    edge_mid: HashMap<(usize, usize), usize>,
}

pub fn build_fem_space(mesh: &Mesh2D, p: usize) -> Result<FemSpace, HsmError> {
    if !(p == 1 || p == 2) {
        return Err(HsmError::InvalidSpec(format!(
            "interior element degree must be 1 or 2, got {p}"
        )));
    }
    let nv = mesh.vertices.len();
    let mut dof_points: Vec<Point2> = mesh.vertices.clone();
    let mut edge_mid: HashMap<(usize, usize), usize> = HashMap::new();
    let mut tri_dofs: Vec<[usize; 6]> = Vec::with_capacity(mesh.triangles.len());
    if p == 2 {
        let mut edges: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for tri in &mesh.triangles {
            for e in 0..3 {
                edges.entry(edge_key(tri[e], tri[(e + 1) % 3])).or_insert(0);
            }
        }
        for (rank, (key, slot)) in edges.iter_mut().enumerate() {
            *slot = nv + rank;
            let (p0, p1) = (mesh.vertices[key.0], mesh.vertices[key.1]);
            dof_points.push(Point2::new(0.5 * (p0.x1 + p1.x1), 0.5 * (p0.x2 + p1.x2)));
        }
        edge_mid = edges.into_iter().collect();
    }
    for tri in &mesh.triangles {
        let mut d = [usize::MAX; 6];
        d[..3].copy_from_slice(tri);
        if p == 2 {
            for e in 0..3 {
                d[3 + e] = edge_mid[&edge_key(tri[e], tri[(e + 1) % 3])];
            }
        }
        tri_dofs.push(d);
    }
    Ok(FemSpace {
        p,
        n_vertices: nv,
        dof_points,
        tri_dofs,
        edge_mid,
    })
}

impl FemSpace {
    pub fn degree(&self) -> usize {
        self.p
    }

    pub fn n_dofs(&self) -> usize {
        self.dof_points.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn dof_point(&self, d: usize) -> Point2 {
        self.dof_points[d]
    }

    /// Dofs local to triangle `t`: three vertices, then for degree 2 the
    /// midpoints of edges (0,1), (1,2), (2,0).
    pub fn tri_dofs(&self, t: usize) -> &[usize] {
        &self.tri_dofs[t][..self.n_local()]
    }

    pub fn n_local(&self) -> usize {
        if self.p == 1 {
            3
        } else {
            6
        }
    }

    /// Dofs on the edge (v0, v1): the endpoints, then for degree 2 the
    /// midpoint.
    pub fn edge_dofs(&self, v0: usize, v1: usize) -> Result<Vec<usize>, HsmError> {
        if self.p == 1 {
            return Ok(vec![v0, v1]);
        }
        let mid = self.edge_mid.get(&edge_key(v0, v1)).copied().ok_or_else(|| {
            HsmError::Mesh(format!("({v0}, {v1}) is not an edge of the mesh"))
        })?;
        Ok(vec![v0, v1, mid])
    }

    /// Shape values at barycentric coordinates `l`, in local dof order.
    pub fn shape_values(&self, l: [f64; 3]) -> [f64; 6] {
        let mut n = [0.0; 6];
        if self.p == 1 {
            n[..3].copy_from_slice(&l);
        } else {
            for i in 0..3 {
                n[i] = l[i] * (2.0 * l[i] - 1.0);
            }
            n[3] = 4.0 * l[0] * l[1];
            n[4] = 4.0 * l[1] * l[2];
            n[5] = 4.0 * l[2] * l[0];
        }
        n
    }

    /// Shape gradients at barycentric coordinates `l`, given the barycentric
    /// gradients `g` of the triangle.
    pub fn shape_gradients(&self, l: [f64; 3], g: [[f64; 2]; 3]) -> [[f64; 2]; 6] {
        let mut out = [[0.0; 2]; 6];
        if self.p == 1 {
            out[..3].copy_from_slice(&g);
        } else {
            for i in 0..3 {
                for c in 0..2 {
                    out[i][c] = (4.0 * l[i] - 1.0) * g[i][c];
                }
            }
            for (slot, (i, j)) in [(3, (0, 1)), (4, (1, 2)), (5, (2, 0))] {
                for c in 0..2 {
                    out[slot][c] = 4.0 * (l[i] * g[j][c] + l[j] * g[i][c]);
                }
            }
        }
        out
    }
}

/// Shape values on an edge at parameter u in [0, 1], ordered
/// [endpoint 0, endpoint 1, midpoint].
fn edge_shape_values(p: usize, u: f64) -> [f64; 3] {
    if p == 1 {
        [1.0 - u, u, 0.0]
    } else {
        [(1.0 - u) * (1.0 - 2.0 * u), u * (2.0 * u - 1.0), 4.0 * u * (1.0 - u)]
    }
}

// ---------------------------------------------------------------------------
// Materials and the interior form
// ---------------------------------------------------------------------------

/// Coefficient and source data. The region between the squares must stay
/// free space (coefficient 1), and the source is integrated over the inner
/// region only; both restrictions keep the exterior representations exact.
pub struct MaterialField<'a> {
    /// Relative coefficient per region id.
    pub rho_by_region: [f64; 2],
    pub source: Option<&'a (dyn Fn(Point2) -> Complex64 + Sync)>,
}

impl Default for MaterialField<'static> {
    fn default() -> Self {
        MaterialField {
            rho_by_region: [1.0, 1.0],
            source: None,
        }
    }
}

/// Assembles the interior Helmholtz form
/// (grad u, grad v) - k^2 (rho u, v) - ik (u, v) on the outer square,
/// over all dofs, plus the source functional.
pub fn assemble_interior(
    mesh: &Mesh2D,
    space: &FemSpace,
    materials: &MaterialField<'_>,
    params: &WaveParams,
) -> Result<(SparseComplexMatrix, Vec<Complex64>), HsmError> {
    for (r, &rho) in materials.rho_by_region.iter().enumerate() {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(HsmError::InvalidSpec(format!(
                "coefficient in region {r} must be positive, got {rho}"
            )));
        }
    }
    if materials.rho_by_region[REGION_OUTER as usize] != 1.0 {
        return Err(HsmError::InvalidSpec(format!(
            "the region between the squares must keep coefficient 1, got {}",
            materials.rho_by_region[REGION_OUTER as usize]
        )));
    }
    let nd = space.n_dofs();
    let n_loc = space.n_local();
    let k2 = params.k * params.k;
    let mut triplets: Vec<(usize, usize, Complex64)> = Vec::new();
    let mut rhs = vec![ZERO; nd];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let (p0, p1, p2) = (
            mesh.vertices[tri[0]],
            mesh.vertices[tri[1]],
            mesh.vertices[tri[2]],
        );
        let ar2 = (p1.x1 - p0.x1) * (p2.x2 - p0.x2) - (p2.x1 - p0.x1) * (p1.x2 - p0.x2);
        if !(ar2 > 0.0) {
            return Err(HsmError::Mesh(format!(
                "triangle {t} is degenerate or clockwise (double area {ar2})"
            )));
        }
        let area = 0.5 * ar2;
        let g = [
            [(p1.x2 - p2.x2) / ar2, (p2.x1 - p1.x1) / ar2],
            [(p2.x2 - p0.x2) / ar2, (p0.x1 - p2.x1) / ar2],
            [(p0.x2 - p1.x2) / ar2, (p1.x1 - p0.x1) / ar2],
        ];
        let region = *mesh.regions.get(t).ok_or_else(|| {
            HsmError::Mesh(format!("triangle {t} has no region id"))
        })? as usize;
        let rho = *materials.rho_by_region.get(region).ok_or_else(|| {
            HsmError::Mesh(format!("triangle {t} has region id {region} out of range"))
        })?;
        let mut k_loc = [[0.0f64; 6]; 6];
        let mut m_loc = [[0.0f64; 6]; 6];
        let mut f_loc = [ZERO; 6];
        for &(l, w) in &TRI_RULE {
            let shapes = space.shape_values(l);
            let grads = space.shape_gradients(l, g);
            let wa = w * area;
            for r in 0..n_loc {
                for c in 0..n_loc {
                    k_loc[r][c] += wa * (grads[r][0] * grads[c][0] + grads[r][1] * grads[c][1]);
                    m_loc[r][c] += wa * shapes[r] * shapes[c];
                }
            }
            if region == REGION_INNER as usize {
                if let Some(f) = materials.source {
                    let x = Point2::new(
                        l[0] * p0.x1 + l[1] * p1.x1 + l[2] * p2.x1,
                        l[0] * p0.x2 + l[1] * p1.x2 + l[2] * p2.x2,
                    );
                    let fx = f(x);
                    for r in 0..n_loc {
                        f_loc[r] += fx * (wa * shapes[r]);
                    }
                }
            }
        }
        let dofs = space.tri_dofs(t);
        for r in 0..n_loc {
            for c in 0..n_loc {
                let v = Complex64::new(k_loc[r][c] - k2 * rho * m_loc[r][c], 0.0);
                triplets.push((dofs[r], dofs[c], v));
            }
            rhs[dofs[r]] += f_loc[r];
        }
    }
    // Dissipative Robin term on the outer square.
    let rule = GaussRule::legendre(3);
    let mik = Complex64::new(0.0, -params.k);
    for &(v0, v1, tag) in &mesh.tagged_edges {
        if !matches!(tag, EdgeTag::Outer(_)) {
            continue;
        }
        let dofs = space.edge_dofs(v0, v1)?;
        let (p0, p1) = (mesh.vertices[v0], mesh.vertices[v1]);
        let len = (p1.x1 - p0.x1).hypot(p1.x2 - p0.x2);
        for (u, w) in rule.mapped(0.0, 1.0) {
            let shapes = edge_shape_values(space.p, u);
            for r in 0..dofs.len() {
                for c in 0..dofs.len() {
                    triplets.push((dofs[r], dofs[c], mik * (len * w * shapes[r] * shapes[c])));
                }
            }
        }
    }
    Ok((
        SparseComplexMatrix::from_triplets(nd, nd, triplets),
        rhs,
    ))
}

// ---------------------------------------------------------------------------
// Exchange integrals on the outer square
// ---------------------------------------------------------------------------

/// Galerkin rows of the Robin-trace exchange operator on one outer side:
/// row r pairs the interior basis function of `rows[r]` restricted to the
/// side with the operator applied to each trace basis function (columns over
/// all trace dofs of that side's line).
pub struct CouplingBlock {
    pub side: usize,
    pub rows: Vec<usize>,
    pub matrix: DenseComplexMatrix,
}

struct TracePoint {
    tau: Complex64,
    weight: Complex64,
    base: usize,
    shapes: [f64; 4],
    n_shapes: usize,
}

/// Assembles the exchange blocks for all four outer sides: entry (r, m) of
/// side j is the integral over that side of
/// [integral of lambda(b - a, t - tau(s)) phi_m(s) tau'(s) ds] v_r(t) dt.
pub fn assemble_outer_coupling(
    params: &WaveParams,
    basis: &TraceBasis,
    mesh: &Mesh2D,
    space: &FemSpace,
    quad: &QuadratureSpec,
) -> Result<[CouplingBlock; 4], HsmError> {
    let b = params.b.ok_or_else(|| {
        HsmError::InvalidSpec(
            "the exchange blocks need parameters with an outer half-width".to_string(),
        )
    })?;
    let offset = b - params.a;
    let n_tr = basis.n_dofs();
    let q = basis.q();
    let rule = GaussRule::legendre(quad.panel_order);
    // The kernel at offset b - a is analytic in the lateral coordinate at
    // scale b - a and oscillates at the wavelength, so panels resolve the
    // finer of the two.
    let step = (0.5 * std::f64::consts::PI / params.k).min(0.4 * offset);

    // Source quadrature layout, shared by every target point.
    let mut spts: Vec<TracePoint> = Vec::new();
    for e in 0..basis.n_elements() {
        let (slo, shi) = basis.element_span(e);
        for (pa, pb) in uniform_panels(slo, shi, step) {
            for (s, w) in rule.mapped(pa, pb) {
                let xi = 2.0 * (s - slo) / (shi - slo) - 1.0;
                spts.push(TracePoint {
                    tau: tau(params, s),
                    weight: tau_prime(params, s) * w,
                    base: q * e,
                    shapes: basis.shape_values(xi),
                    n_shapes: q + 1,
                });
            }
        }
    }

    let mut blocks: Vec<CouplingBlock> = Vec::with_capacity(4);
    for j in 0..4 {
        let hp = HalfPlaneIndex::new(j as i64);
        let t_of = |d: usize| local_coords(hp, space.dof_point(d)).1;
        let mut edges: Vec<(Vec<usize>, f64, f64)> = Vec::new();
        let mut row_t: BTreeMap<usize, f64> = BTreeMap::new();
        for &(v0, v1, tag) in &mesh.tagged_edges {
            if tag != EdgeTag::Outer(j as u8) {
                continue;
            }
            let dofs = space.edge_dofs(v0, v1)?;
            for &d in &dofs {
                row_t.insert(d, t_of(d));
            }
            edges.push((dofs, t_of(v0), t_of(v1)));
        }
        let mut rows: Vec<usize> = row_t.keys().copied().collect();
        rows.sort_by(|&x, &y| row_t[&x].partial_cmp(&row_t[&y]).unwrap());
        let row_of: HashMap<usize, usize> =
            rows.iter().enumerate().map(|(r, &d)| (d, r)).collect();

        let per_edge: Vec<Result<DenseComplexMatrix, HsmError>> = edges
            .par_iter()
            .map(|(dofs, t0, t1)| {
                let mut local = DenseComplexMatrix::zeros(dofs.len(), n_tr);
                let mut srow = vec![ZERO; n_tr];
                for (u, w) in rule.mapped(0.0, 1.0) {
                    let t = t0 + u * (t1 - t0);
                    let wt = w * (t1 - t0).abs();
                    let eshapes = edge_shape_values(space.p, u);
                    srow.iter_mut().for_each(|v| *v = ZERO);
                    for sp in &spts {
                        let z = Complex64::new(t, 0.0) - sp.tau;
                        let kv = kernel_lambda(params, offset, z)? * sp.weight;
                        for l in 0..sp.n_shapes {
                            srow[sp.base + l] += kv * sp.shapes[l];
                        }
                    }
                    for (r, _) in dofs.iter().enumerate() {
                        let c = Complex64::new(wt * eshapes[r], 0.0);
                        for (dst, src) in local.row_mut(r).iter_mut().zip(srow.iter()) {
                            *dst += c * src;
                        }
                    }
                }
                Ok(local)
            })
            .collect();

        let mut matrix = DenseComplexMatrix::zeros(rows.len(), n_tr);
        for (item, (dofs, _, _)) in per_edge.into_iter().zip(edges.iter()) {
            let local = item?;
            for (r, &d) in dofs.iter().enumerate() {
                let dst = matrix.row_mut(row_of[&d]);
                for (x, y) in dst.iter_mut().zip(local.row(r).iter()) {
                    *x += *y;
                }
            }
        }
        blocks.push(CouplingBlock {
            side: j,
            rows,
            matrix,
        });
    }
    Ok(match blocks.try_into() {
        Ok(arr) => arr,
        Err(_) => unreachable!(),
    })
}

// ---------------------------------------------------------------------------
// Inner-square matching
// ---------------------------------------------------------------------------

/// Pairing of every constrained trace dof of one side with the interior dof
/// at the same point of the inner square, in ascending trace-dof order.
pub struct InnerTraceMatch {
    pub pairs: Vec<(usize, usize)>,
}

/// Matches the constrained trace dofs of each side to the interior dofs on
/// the tagged inner-square edges. Requires equal polynomial degrees and
/// aligned breakpoints; any mismatch is reported with the offending
/// coordinate.
pub fn match_inner_square_dofs(
    params: &WaveParams,
    basis: &TraceBasis,
    mesh: &Mesh2D,
    space: &FemSpace,
) -> Result<[InnerTraceMatch; 4], HsmError> {
    if basis.q() != space.degree() {
        return Err(HsmError::InvalidSpec(format!(
            "trace degree {} and interior degree {} must agree for the coupled solve",
            basis.q(),
            space.degree()
        )));
    }
    let tol = 1e-9 * params.a.max(1.0);
    let cons: Vec<usize> = (0..basis.n_dofs())
        .filter(|&m| basis.is_constrained(m))
        .collect();
    let mut out: Vec<InnerTraceMatch> = Vec::with_capacity(4);
    for j in 0..4 {
        let hp = HalfPlaneIndex::new(j as i64);
        let mut fem: BTreeMap<usize, f64> = BTreeMap::new();
        for &(v0, v1, tag) in &mesh.tagged_edges {
            if tag != EdgeTag::Inner(j as u8) {
                continue;
            }
            for d in space.edge_dofs(v0, v1)? {
                fem.insert(d, local_coords(hp, space.dof_point(d)).1);
            }
        }
        if fem.len() != cons.len() {
            return Err(HsmError::Mesh(format!(
                "side {j} of the inner square has {} interior dofs but the trace has {} \
                 constrained dofs; the mesh must be built from the trace's inner breakpoints",
                fem.len(),
                cons.len()
            )));
        }
        let mut by_t: Vec<(f64, usize)> = fem.into_iter().map(|(d, t)| (t, d)).collect();
        by_t.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        let mut pairs = Vec::with_capacity(cons.len());
        for &m in &cons {
            let t = basis.node(m);
            let i = by_t.partition_point(|&(tf, _)| tf < t - tol);
            if i >= by_t.len() || (by_t[i].0 - t).abs() > tol {
                return Err(HsmError::Mesh(format!(
                    "no interior dof at parameter {t} on side {j} of the inner square"
                )));
            }
            pairs.push((m, by_t[i].1));
        }
        out.push(InnerTraceMatch { pairs });
    }
    Ok(match out.try_into() {
        Ok(arr) => arr,
        Err(_) => unreachable!(),
    })
}

// ---------------------------------------------------------------------------
// Reordered banded factorization
// ---------------------------------------------------------------------------

/// Reverse Cuthill-McKee ordering of the sparsity graph: breadth-first from
/// a minimum-degree start in each component, neighbors by increasing degree,
/// then reversed. Returns perm with perm[new] = old.
fn rcm_order(a: &SparseComplexMatrix) -> Vec<usize> {
    let n = a.n_rows;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for (j, _) in a.row(i) {
            if j != i {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for l in adj.iter_mut() {
        l.sort_unstable();
        l.dedup();
    }
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    loop {
        let Some(start) = (0..n).filter(|&i| !seen[i]).min_by_key(|&i| adj[i].len()) else {
            break;
        };
        seen[start] = true;
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let mut nb: Vec<usize> = adj[u].iter().copied().filter(|&v| !seen[v]).collect();
            nb.sort_by_key(|&v| adj[v].len());
            for v in nb {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    order.reverse();
    order
}

/// Banded factorization of a sparse matrix under the reverse Cuthill-McKee
/// ordering; solves are returned in the original numbering.
struct PermutedBandSolver {
    lu: BandLu,
    inv: Vec<usize>,
}

impl PermutedBandSolver {
    fn new(a: &SparseComplexMatrix) -> Result<Self, HsmError> {
        let n = a.n_rows;
        let perm = rcm_order(a);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut bw = 0usize;
        for i in 0..n {
            for (j, _) in a.row(i) {
                bw = bw.max(inv[i].abs_diff(inv[j]));
            }
        }
        let mut band = BandMatrix::zeros(n, bw, bw);
        for i in 0..n {
            for (j, v) in a.row(i) {
                band.add_at(inv[i], inv[j], v);
            }
        }
        Ok(PermutedBandSolver {
            lu: band.factor()?,
            inv,
        })
    }

    fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = b.len();
        let mut t = vec![ZERO; n];
        for i in 0..n {
            t[self.inv[i]] = b[i];
        }
        self.lu.solve_in_place(&mut t);
        let mut x = vec![ZERO; n];
        for i in 0..n {
            x[i] = t[self.inv[i]];
        }
        x
    }
}

// ---------------------------------------------------------------------------
// The coupled solve
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStrategy {
    /// Dense factorization below a size threshold, Schur elimination above.
    Auto,
    Monolithic,
    Schur,
}

/// Everything the coupled solve needs; the mesh must be built from the
/// trace's inner breakpoints and the degrees must match.
pub struct GeneralProblem<'a> {
    pub params: &'a WaveParams,
    pub basis: &'a TraceBasis,
    pub quad: &'a QuadratureSpec,
    pub mesh: &'a Mesh2D,
    pub space: &'a FemSpace,
    pub materials: &'a MaterialField<'a>,
    /// Dirichlet data on the obstacle boundary (for sound-soft scattering,
    /// the negated incident field); required exactly when the mesh has
    /// obstacle edges.
    pub obstacle_data: Option<&'a (dyn Fn(Point2) -> Complex64 + Sync)>,
}

/// Interior values, trace coefficients and diagnostics of a coupled solve.
pub struct GeneralSolution {
    /// Values at every interior dof, Dirichlet dofs included.
    pub u: Vec<Complex64>,
    /// Full trace coefficients per side; the constrained entries carry the
    /// interior solution's boundary values.
    pub traces: [Vec<Complex64>; 4],
    /// Relative residual of the full coupled block system.
    pub residual: f64,
    pub strategy_used: SolveStrategy,
}

/// The dense blocks of the coupled system, with gathers mapping their
/// auxiliary indices to reduced interior dofs.
struct CoupledBlocks {
    /// Trace-trace block over the stacked free dofs of the four sides.
    s_mat: DenseComplexMatrix,
    /// Trace rows against the constrained columns, indexed (side, position).
    c_d: DenseComplexMatrix,
    /// Exchange rows against the free trace columns.
    d_d: DenseComplexMatrix,
    /// Exchange rows against the constrained columns.
    e_d: DenseComplexMatrix,
    /// Reduced interior dof behind each constrained column.
    gather_a: Vec<usize>,
    /// Reduced interior dof behind each exchange row.
    gather_b: Vec<usize>,
}

fn coupled_residual(
    blocks: &CoupledBlocks,
    a_ff: &SparseComplexMatrix,
    f_red: &[Complex64],
    x_t: &[Complex64],
    x_u: &[Complex64],
) -> f64 {
    let ua: Vec<Complex64> = blocks.gather_a.iter().map(|&i| x_u[i]).collect();
    let mut r1 = blocks.s_mat.matvec(x_t);
    for (dst, src) in r1.iter_mut().zip(blocks.c_d.matvec(&ua)) {
        *dst += src;
    }
    let mut r2 = a_ff.matvec(x_u);
    let d1 = blocks.d_d.matvec(x_t);
    let d2 = blocks.e_d.matvec(&ua);
    for (c, &row) in blocks.gather_b.iter().enumerate() {
        r2[row] += d1[c] + d2[c];
    }
    for (dst, src) in r2.iter_mut().zip(f_red.iter()) {
        *dst -= src;
    }
    let num: f64 = r1.iter().chain(r2.iter()).map(|v| v.norm_sqr()).sum();
    let den: f64 = f_red.iter().map(|v| v.norm_sqr()).sum();
    (num / den.max(1e-300)).sqrt()
}

/// Solves the coupled trace-interior system.
pub fn solve_general(
    pb: &GeneralProblem<'_>,
    strategy: SolveStrategy,
) -> Result<GeneralSolution, HsmError> {
    let params = pb.params;
    let basis = pb.basis;
    params.b.ok_or_else(|| {
        HsmError::InvalidSpec("the coupled solve needs parameters with an outer half-width".to_string())
    })?;

    let system = HsmSystem::assemble(params, basis, pb.quad)?;
    let (a_csr, f_full) = assemble_interior(pb.mesh, pb.space, pb.materials, params)?;
    let nd = pb.space.n_dofs();

    // Dirichlet elimination on the obstacle boundary.
    let mut is_dir = vec![false; nd];
    for &(v0, v1, tag) in &pb.mesh.tagged_edges {
        if tag == EdgeTag::Obstacle {
            for d in pb.space.edge_dofs(v0, v1)? {
                is_dir[d] = true;
            }
        }
    }
    let has_obstacle = is_dir.iter().any(|&d| d);
    let g_dir: Vec<Complex64> = match (has_obstacle, pb.obstacle_data) {
        (true, Some(g)) => (0..nd)
            .map(|d| if is_dir[d] { g(pb.space.dof_point(d)) } else { ZERO })
            .collect(),
        (false, None) => vec![ZERO; nd],
        (true, None) => {
            return Err(HsmError::InvalidSpec(
                "the mesh has an obstacle boundary but no Dirichlet data was given".to_string(),
            ))
        }
        (false, Some(_)) => {
            return Err(HsmError::InvalidSpec(
                "Dirichlet data was given but the mesh has no obstacle boundary".to_string(),
            ))
        }
    };
    let mut free_pos: Vec<Option<usize>> = vec![None; nd];
    let mut fem_free: Vec<usize> = Vec::new();
    for d in 0..nd {
        if !is_dir[d] {
            free_pos[d] = Some(fem_free.len());
            fem_free.push(d);
        }
    }
    let n_u = fem_free.len();
    let mut triplets = Vec::new();
    let mut f_red = vec![ZERO; n_u];
    for (pi, &i) in fem_free.iter().enumerate() {
        f_red[pi] = f_full[i];
        for (j, v) in a_csr.row(i) {
            match free_pos[j] {
                Some(pj) => triplets.push((pi, pj, v)),
                None => f_red[pi] -= v * g_dir[j],
            }
        }
    }
    let a_ff = SparseComplexMatrix::from_triplets(n_u, n_u, triplets);

    let matches = match_inner_square_dofs(params, basis, pb.mesh, pb.space)?;
    let coupling = assemble_outer_coupling(params, basis, pb.mesh, pb.space, pb.quad)?;

    let free = basis.free_dofs();
    let n_f = free.len();
    let n_t = 4 * n_f;
    let cons: Vec<usize> = (0..basis.n_dofs())
        .filter(|&m| basis.is_constrained(m))
        .collect();
    let n_c = cons.len();

    let mut gather_a = Vec::with_capacity(4 * n_c);
    for m in &matches {
        for &(_, d) in &m.pairs {
            let pos = free_pos[d].ok_or_else(|| {
                HsmError::Mesh(
                    "the obstacle boundary touches the inner square".to_string(),
                )
            })?;
            gather_a.push(pos);
        }
    }
    let mut gather_b = Vec::new();
    let mut side_offset = [0usize; 4];
    for j in 0..4 {
        side_offset[j] = gather_b.len();
        for &d in &coupling[j].rows {
            let pos = free_pos[d].ok_or_else(|| {
                HsmError::Mesh(
                    "the obstacle boundary touches the outer square".to_string(),
                )
            })?;
            gather_b.push(pos);
        }
    }
    let n_b = gather_b.len();

    // Dense blocks of the coupled system.
    let (m_f, a_f, b_f) = system.free_blocks();
    let mass = system.mass();
    let gd = system.exchange_block();
    let mut s_mat = DenseComplexMatrix::zeros(n_t, n_t);
    for j in 0..4 {
        for p in 0..n_f {
            let row = s_mat.row_mut(j * n_f + p);
            for r in 0..n_f {
                row[j * n_f + r] += m_f.get(p, r);
                row[((j + 1) % 4) * n_f + r] -= a_f.get(p, r);
                row[((j + 3) % 4) * n_f + r] -= b_f.get(p, r);
            }
        }
    }
    let mut c_d = DenseComplexMatrix::zeros(n_t, 4 * n_c);
    for j in 0..4 {
        for p in 0..n_f {
            let row = j * n_f + p;
            for (ci, &m) in cons.iter().enumerate() {
                c_d.add_at(row, j * n_c + ci, mass.get(free[p], m));
                c_d.add_at(row, ((j + 1) % 4) * n_c + ci, -gd.get(free[p], basis.refl(m)));
                c_d.add_at(row, ((j + 3) % 4) * n_c + ci, -gd.get(basis.refl(free[p]), m));
            }
        }
    }
    let mut d_d = DenseComplexMatrix::zeros(n_b, n_t);
    let mut e_d = DenseComplexMatrix::zeros(n_b, 4 * n_c);
    for j in 0..4 {
        for rp in 0..coupling[j].rows.len() {
            let gr = side_offset[j] + rp;
            for (p, &m) in free.iter().enumerate() {
                d_d.set(gr, j * n_f + p, -coupling[j].matrix.get(rp, m));
            }
            for (ci, &m) in cons.iter().enumerate() {
                e_d.set(gr, j * n_c + ci, -coupling[j].matrix.get(rp, m));
            }
        }
    }
    let blocks = CoupledBlocks {
        s_mat,
        c_d,
        d_d,
        e_d,
        gather_a,
        gather_b,
    };

    let use_monolithic = match strategy {
        SolveStrategy::Monolithic => true,
        SolveStrategy::Schur => false,
        SolveStrategy::Auto => n_t + n_u <= AUTO_DENSE_LIMIT,
    };

    let (x_t, x_u, used) = if use_monolithic {
        let n = n_t + n_u;
        let mut big = DenseComplexMatrix::zeros(n, n);
        for r in 0..n_t {
            big.row_mut(r)[..n_t].copy_from_slice(blocks.s_mat.row(r));
        }
        for (ia, &col) in blocks.gather_a.iter().enumerate() {
            for r in 0..n_t {
                big.add_at(r, n_t + col, blocks.c_d.get(r, ia));
            }
        }
        for (ib, &row) in blocks.gather_b.iter().enumerate() {
            for c in 0..n_t {
                big.add_at(n_t + row, c, blocks.d_d.get(ib, c));
            }
            for (ia, &col) in blocks.gather_a.iter().enumerate() {
                big.add_at(n_t + row, n_t + col, blocks.e_d.get(ib, ia));
            }
        }
        for i in 0..n_u {
            for (j, v) in a_ff.row(i) {
                big.add_at(n_t + i, n_t + j, v);
            }
        }
        let mut rhs = vec![ZERO; n];
        rhs[n_t..].copy_from_slice(&f_red);
        let x = lu_factor(big)?.solve(&rhs);
        (
            x[..n_t].to_vec(),
            x[n_t..].to_vec(),
            SolveStrategy::Monolithic,
        )
    } else {
        let solver = PermutedBandSolver::new(&a_ff)?;
        // Unit solves for the distinct interior dofs behind exchange rows.
        let mut col_source = Vec::with_capacity(n_b);
        let mut uniq: Vec<usize> = Vec::new();
        let mut seen: HashMap<usize, usize> = HashMap::new();
        for &fd in &blocks.gather_b {
            let idx = *seen.entry(fd).or_insert_with(|| {
                uniq.push(fd);
                uniq.len() - 1
            });
            col_source.push(idx);
        }
        let xb_uniq: Vec<Vec<Complex64>> = uniq
            .par_iter()
            .map(|&fd| {
                let mut e = vec![ZERO; n_u];
                e[fd] = ONE;
                solver.solve(&e)
            })
            .collect();
        let xb_col = |c: usize| -> &[Complex64] { &xb_uniq[col_source[c]] };

        let y_mat = DenseComplexMatrix::from_fn(4 * n_c, n_b, |ia, c| {
            xb_col(c)[blocks.gather_a[ia]]
        });
        let mut k_mat = blocks.e_d.matmul(&y_mat);
        for i in 0..n_b {
            k_mat.add_at(i, i, ONE);
        }
        let k_lu = lu_factor(k_mat)?;
        let apply_inverse = |y: &[Complex64]| -> Vec<Complex64> {
            let mut z = solver.solve(y);
            let za: Vec<Complex64> = blocks.gather_a.iter().map(|&i| z[i]).collect();
            let v = k_lu.solve(&blocks.e_d.matvec(&za));
            for (c, &vc) in v.iter().enumerate() {
                if vc != ZERO {
                    let col = xb_col(c);
                    for (zi, &ci) in z.iter_mut().zip(col.iter()) {
                        *zi -= vc * ci;
                    }
                }
            }
            z
        };

        // Schur complement on the trace unknowns: the interior inverse seen
        // from the exchange rows collapses to Y K^{-1}.
        let kinv_dd = k_lu.solve_matrix(&blocks.d_d);
        let m1 = y_mat.matmul(&kinv_dd);
        let g_mat = blocks.c_d.matmul(&m1);
        let s_eff = DenseComplexMatrix::from_fn(n_t, n_t, |i, j| {
            blocks.s_mat.get(i, j) - g_mat.get(i, j)
        });
        let af = apply_inverse(&f_red);
        let afa: Vec<Complex64> = blocks.gather_a.iter().map(|&i| af[i]).collect();
        let rhs_t: Vec<Complex64> = blocks.c_d.matvec(&afa).iter().map(|v| -v).collect();
        let x_t = lu_factor(s_eff)?.solve(&rhs_t);
        let dxt = blocks.d_d.matvec(&x_t);
        let mut y2 = f_red.clone();
        for (c, &row) in blocks.gather_b.iter().enumerate() {
            y2[row] -= dxt[c];
        }
        let x_u = apply_inverse(&y2);
        (x_t, x_u, SolveStrategy::Schur)
    };

    let residual = coupled_residual(&blocks, &a_ff, &f_red, &x_t, &x_u);

    let mut u = g_dir;
    for (pi, &d) in fem_free.iter().enumerate() {
        u[d] = x_u[pi];
    }
    let traces: [Vec<Complex64>; 4] = std::array::from_fn(|j| {
        let mut full = vec![ZERO; basis.n_dofs()];
        for (p, &m) in free.iter().enumerate() {
            full[m] = x_t[j * n_f + p];
        }
        for &(m, d) in &matches[j].pairs {
            full[m] = u[d];
        }
        full
    });
    Ok(GeneralSolution {
        u,
        traces,
        residual,
        strategy_used: used,
    })
}

// ---------------------------------------------------------------------------
// Field evaluation and export
// ---------------------------------------------------------------------------

/// Point evaluator for an interior solution, with a uniform bin grid over
/// the mesh for triangle lookup.
pub struct FieldEvaluator<'a> {
    mesh: &'a Mesh2D,
    space: &'a FemSpace,
    values: &'a [Complex64],
    x_lo: f64,
    y_lo: f64,
    dx: f64,
    dy: f64,
    nx: usize,
    ny: usize,
    bins: Vec<Vec<u32>>,
}

impl<'a> FieldEvaluator<'a> {
    pub fn new(
        mesh: &'a Mesh2D,
        space: &'a FemSpace,
        values: &'a [Complex64],
    ) -> Result<Self, HsmError> {
        if values.len() != space.n_dofs() {
            return Err(HsmError::InvalidSpec(format!(
                "{} values for {} interior dofs",
                values.len(),
                space.n_dofs()
            )));
        }
        let (mut x_lo, mut x_hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in &mesh.vertices {
            x_lo = x_lo.min(p.x1);
            x_hi = x_hi.max(p.x1);
            y_lo = y_lo.min(p.x2);
            y_hi = y_hi.max(p.x2);
        }
        let n = ((mesh.triangles.len() as f64 / 4.0).sqrt().ceil() as usize).clamp(1, 256);
        let (nx, ny) = (n, n);
        let dx = ((x_hi - x_lo) / nx as f64).max(f64::MIN_POSITIVE);
        let dy = ((y_hi - y_lo) / ny as f64).max(f64::MIN_POSITIVE);
        let mut bins: Vec<Vec<u32>> = vec![Vec::new(); nx * ny];
        let clampi = |v: f64, n: usize| (v.floor().max(0.0) as usize).min(n - 1);
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let xs: Vec<f64> = tri.iter().map(|&v| mesh.vertices[v].x1).collect();
            let ys: Vec<f64> = tri.iter().map(|&v| mesh.vertices[v].x2).collect();
            let (bx0, bx1) = (
                clampi((xs.iter().cloned().fold(f64::INFINITY, f64::min) - x_lo) / dx, nx),
                clampi((xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - x_lo) / dx, nx),
            );
            let (by0, by1) = (
                clampi((ys.iter().cloned().fold(f64::INFINITY, f64::min) - y_lo) / dy, ny),
                clampi((ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - y_lo) / dy, ny),
            );
            for bx in bx0..=bx1 {
                for by in by0..=by1 {
                    bins[bx * ny + by].push(t as u32);
                }
            }
        }
        Ok(FieldEvaluator {
            mesh,
            space,
            values,
            x_lo,
            y_lo,
            dx,
            dy,
            nx,
            ny,
            bins,
        })
    }

    /// Value at `p`, or `None` outside the meshed region.
    pub fn eval(&self, p: Point2) -> Option<Complex64> {
        let bx = (p.x1 - self.x_lo) / self.dx;
        let by = (p.x2 - self.y_lo) / self.dy;
        if !(bx >= -1e-9 && by >= -1e-9) {
            return None;
        }
        let bx = (bx.max(0.0) as usize).min(self.nx.checked_sub(1)?);
        let by = (by.max(0.0) as usize).min(self.ny.checked_sub(1)?);
        for &t in &self.bins[bx * self.ny + by] {
            let tri = self.mesh.triangles[t as usize];
            let (p0, p1, p2) = (
                self.mesh.vertices[tri[0]],
                self.mesh.vertices[tri[1]],
                self.mesh.vertices[tri[2]],
            );
            let ar2 = (p1.x1 - p0.x1) * (p2.x2 - p0.x2) - (p2.x1 - p0.x1) * (p1.x2 - p0.x2);
            let l1 = ((p.x1 - p0.x1) * (p2.x2 - p0.x2) - (p2.x1 - p0.x1) * (p.x2 - p0.x2)) / ar2;
            let l2 = ((p1.x1 - p0.x1) * (p.x2 - p0.x2) - (p.x1 - p0.x1) * (p1.x2 - p0.x2)) / ar2;
            let l0 = 1.0 - l1 - l2;
            if l0 >= -1e-9 && l1 >= -1e-9 && l2 >= -1e-9 {
                let shapes = self.space.shape_values([l0, l1, l2]);
                let dofs = self.space.tri_dofs(t as usize);
                let mut acc = ZERO;
                for (l, &d) in dofs.iter().enumerate() {
                    acc += self.values[d] * shapes[l];
                }
                return Some(acc);
            }
        }
        None
    }
}

/// Serializes an interior solution to a legacy VTK unstructured grid with
/// the vertex values as point data.
pub fn interior_field_to_vtk(
    mesh: &Mesh2D,
    space: &FemSpace,
    values: &[Complex64],
) -> Result<String, HsmError> {
    if values.len() != space.n_dofs() {
        return Err(HsmError::InvalidSpec(format!(
            "{} values for {} interior dofs",
            values.len(),
            space.n_dofs()
        )));
    }
    let nv = mesh.vertices.len();
    let nt = mesh.triangles.len();
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\ninterior field\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(out, "POINTS {nv} double");
    for p in &mesh.vertices {
        let _ = writeln!(out, "{} {} 0", p.x1, p.x2);
    }
    let _ = writeln!(out, "CELLS {nt} {}", 4 * nt);
    for tri in &mesh.triangles {
        let _ = writeln!(out, "3 {} {} {}", tri[0], tri[1], tri[2]);
    }
    let _ = writeln!(out, "CELL_TYPES {nt}");
    for _ in 0..nt {
        out.push_str("5\n");
    }
    let _ = writeln!(out, "POINT_DATA {nv}");
    for (name, f) in [
        ("re", Box::new(|v: Complex64| v.re) as Box<dyn Fn(Complex64) -> f64>),
        ("im", Box::new(|v: Complex64| v.im)),
        ("magnitude", Box::new(|v: Complex64| v.norm())),
    ] {
        let _ = writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for d in 0..nv {
            let _ = writeln!(out, "{}", f(values[d]));
        }
    }
    Ok(out)
}

/// Unit-amplitude plane wave with the given propagation angle.
pub fn plane_wave(k: f64, incidence: f64) -> impl Fn(Point2) -> Complex64 + Sync + Copy {
    let (c, s) = (incidence.cos(), incidence.sin());
    move |p: Point2| (Complex64::new(0.0, k * (c * p.x1 + s * p.x2))).exp()
}
