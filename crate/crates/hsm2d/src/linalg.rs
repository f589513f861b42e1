//! Self-contained complex dense and banded linear algebra.
//!
//! Provides exactly what the solver needs: a row-major dense matrix type with
//! a blocked LU factorization (the one performance hotspot, backed by a packed
//! complex matrix-multiply kernel), a banded LU for the finite element block,
//! a power iteration for weighted operator norms, and small Jacobi-based
//! eigenvalue/singular-value routines used as test oracles and compactness
//! checks.

use num_complex::Complex64;

use crate::error::HsmError;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseComplexMatrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Complex64>,
}

impl DenseComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseComplexMatrix { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DenseComplexMatrix { rows, cols, data }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn add_at(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.cols + j] += v;
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [Complex64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![ZERO; self.rows];
        for i in 0..self.rows {
            let row = self.row(i);
            let mut acc = ZERO;
            for (a, b) in row.iter().zip(x.iter()) {
                acc += a * b;
            }
            y[i] = acc;
        }
        y
    }

    /// y = A^H x (conjugate transpose action).
    pub fn matvec_adjoint(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.rows);
        let mut y = vec![ZERO; self.cols];
        for i in 0..self.rows {
            let row = self.row(i);
            let xi = x[i];
            for (j, a) in row.iter().enumerate() {
                y[j] += a.conj() * xi;
            }
        }
        y
    }

    pub fn matmul(&self, other: &DenseComplexMatrix) -> DenseComplexMatrix {
        assert_eq!(self.cols, other.rows);
        let mut c = DenseComplexMatrix::zeros(self.rows, other.cols);
        let (m, n, kdim) = (self.rows, other.cols, self.cols);
        gemm_acc(
            &mut c.data, n, &self.data, kdim, &other.data, n, m, n, kdim, false,
        );
        c
    }

    pub fn adjoint(&self) -> DenseComplexMatrix {
        DenseComplexMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Writes the matrix in the raw binary layout used by the command line
    /// tool: two little-endian u64 dimensions, then row-major entries as
    /// little-endian f64 (real, imaginary) pairs.
    pub fn write_binary<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        w.write_all(&(self.rows as u64).to_le_bytes())?;
        w.write_all(&(self.cols as u64).to_le_bytes())?;
        for z in &self.data {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Packed complex GEMM
// ---------------------------------------------------------------------------

const MR: usize = 2;
const NR: usize = 4;
const MC: usize = 64;
const KC: usize = 192;
const NC: usize = 512;

/// C (m x n, leading dimension ldc) += or -= A (m x k, lda) * B (k x n, ldb).
/// Blocked and packed; the microkernel accumulates an MR x NR tile.
#[allow(clippy::too_many_arguments)]
fn gemm_acc(
    c: &mut [Complex64],
    ldc: usize,
    a: &[Complex64],
    lda: usize,
    b: &[Complex64],
    ldb: usize,
    m: usize,
    n: usize,
    kdim: usize,
    subtract: bool,
) {
    if m == 0 || n == 0 || kdim == 0 {
        return;
    }
    let sign = if subtract { -1.0 } else { 1.0 };
    let mut bpack = vec![ZERO; KC * NC];
    let mut apack = vec![ZERO; MC * KC];
    let mut jc = 0;
    while jc < n {
        let nc = NC.min(n - jc);
        let mut pc = 0;
        while pc < kdim {
            let kc = KC.min(kdim - pc);
            // Pack B block: panels of NR columns, contiguous in p.
            for jp in (0..nc).step_by(NR) {
                let nr = NR.min(nc - jp);
                let dst_base = jp * KC;
                for p in 0..kc {
                    let src = (pc + p) * ldb + jc + jp;
                    let dst = dst_base + p * NR;
                    for q in 0..nr {
                        bpack[dst + q] = b[src + q];
                    }
                    for q in nr..NR {
                        bpack[dst + q] = ZERO;
                    }
                }
            }
            let mut ic = 0;
            while ic < m {
                let mc = MC.min(m - ic);
                // Pack A block: panels of MR rows, contiguous in p.
                for ip in (0..mc).step_by(MR) {
                    let mr = MR.min(mc - ip);
                    let dst_base = ip * KC;
                    for p in 0..kc {
                        let dst = dst_base + p * MR;
                        for q in 0..mr {
                            apack[dst + q] = a[(ic + ip + q) * lda + pc + p];
                        }
                        for q in mr..MR {
                            apack[dst + q] = ZERO;
                        }
                    }
                }
                // Microkernel sweep over the packed tiles.
                for jp in (0..nc).step_by(NR) {
                    let nr = NR.min(nc - jp);
                    let bpanel = &bpack[jp * KC..jp * KC + kc * NR];
                    for ip in (0..mc).step_by(MR) {
                        let mr = MR.min(mc - ip);
                        let apanel = &apack[ip * KC..ip * KC + kc * MR];
                        let mut acc = [[ZERO; NR]; MR];
                        for (av, bv) in apanel
                            .chunks_exact(MR)
                            .zip(bpanel.chunks_exact(NR))
                        {
                            let a0 = av[0];
                            let a1 = av[1];
                            acc[0][0] += a0 * bv[0];
                            acc[0][1] += a0 * bv[1];
                            acc[0][2] += a0 * bv[2];
                            acc[0][3] += a0 * bv[3];
                            acc[1][0] += a1 * bv[0];
                            acc[1][1] += a1 * bv[1];
                            acc[1][2] += a1 * bv[2];
                            acc[1][3] += a1 * bv[3];
                        }
                        for q in 0..mr {
                            let crow = (ic + ip + q) * ldc + jc + jp;
                            for r in 0..nr {
                                c[crow + r] += sign * acc[q][r];
                            }
                        }
                    }
                }
                ic += mc;
            }
            pc += kc;
        }
        jc += nc;
    }
}

// ---------------------------------------------------------------------------
// Dense LU
// ---------------------------------------------------------------------------

/// LU factorization with partial pivoting of a square matrix.
pub struct LuFactors {
    pub n: usize,
    lu: DenseComplexMatrix,
    piv: Vec<usize>,
}

const PIVOT_FLOOR: f64 = 1e-300;
const LU_PANEL: usize = 48;

/// Factors `a` (consumed) as P A = L U with partial pivoting; ties in the
/// pivot search are broken by the smallest row index, so the factorization
/// is deterministic.
pub fn lu_factor(mut a: DenseComplexMatrix) -> Result<LuFactors, HsmError> {
    assert_eq!(a.rows, a.cols, "LU needs a square matrix");
    let n = a.rows;
    let mut piv = Vec::with_capacity(n);
    let mut k0 = 0;
    while k0 < n {
        let k1 = (k0 + LU_PANEL).min(n);
        // Unblocked factorization of the panel columns k0..k1.
        for j in k0..k1 {
            let mut p = j;
            let mut best = a.get(j, j).norm_sqr();
            for i in (j + 1)..n {
                let v = a.get(i, j).norm_sqr();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best.sqrt() < PIVOT_FLOOR {
                return Err(HsmError::SingularSystem(format!(
                    "pivot {} below threshold at elimination step {j}",
                    best.sqrt()
                )));
            }
            piv.push(p);
            if p != j {
                for col in 0..n {
                    let t = a.get(j, col);
                    a.set(j, col, a.get(p, col));
                    a.set(p, col, t);
                }
            }
            let inv = Complex64::new(1.0, 0.0) / a.get(j, j);
            for i in (j + 1)..n {
                let l = a.get(i, j) * inv;
                a.set(i, j, l);
            }
            // Rank-1 update restricted to the remaining panel columns.
            for i in (j + 1)..n {
                let l = a.get(i, j);
                if l == ZERO {
                    continue;
                }
                for col in (j + 1)..k1 {
                    let u = a.get(j, col);
                    a.add_at(i, col, -(l * u));
                }
            }
        }
        if k1 < n {
            // U12 = L11^{-1} A12 by forward substitution on rows.
            for i in k0..k1 {
                for p in k0..i {
                    let l = a.get(i, p);
                    if l == ZERO {
                        continue;
                    }
                    let (top, bottom) = a.data.split_at_mut(i * a.cols);
                    let src = &top[p * a.cols + k1..p * a.cols + n];
                    let dst = &mut bottom[k1..n];
                    for (d, s) in dst.iter_mut().zip(src.iter()) {
                        *d -= l * s;
                    }
                }
            }
            // Trailing update A22 -= L21 U12.
            let cols = a.cols;
            let (m2, n2, kk) = (n - k1, n - k1, k1 - k0);
            // Split borrows: copy the two panels (small) and update in place.
            let mut l21 = vec![ZERO; m2 * kk];
            for i in 0..m2 {
                for p in 0..kk {
                    l21[i * kk + p] = a.get(k1 + i, k0 + p);
                }
            }
            let mut u12 = vec![ZERO; kk * n2];
            for p in 0..kk {
                for j in 0..n2 {
                    u12[p * n2 + j] = a.get(k0 + p, k1 + j);
                }
            }
            let c = &mut a.data[k1 * cols..];
            gemm_acc(&mut c[k1..], cols, &l21, kk, &u12, n2, m2, n2, kk, true);
        }
        k0 = k1;
    }
    Ok(LuFactors { n, lu: a, piv })
}

impl LuFactors {
    /// Solves A x = b for one right-hand side.
    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(b.len(), self.n);
        let mut x = b.to_vec();
        for (j, &p) in self.piv.iter().enumerate() {
            if p != j {
                x.swap(j, p);
            }
        }
        let n = self.n;
        // L (unit diagonal) forward substitution.
        for i in 1..n {
            let row = self.lu.row(i);
            let mut acc = ZERO;
            for j in 0..i {
                acc += row[j] * x[j];
            }
            x[i] -= acc;
        }
        // U back substitution.
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let mut acc = ZERO;
            for j in (i + 1)..n {
                acc += row[j] * x[j];
            }
            x[i] = (x[i] - acc) / row[i];
        }
        x
    }

    /// Solves A X = B column by column.
    pub fn solve_matrix(&self, b: &DenseComplexMatrix) -> DenseComplexMatrix {
        assert_eq!(b.rows, self.n);
        let mut out = DenseComplexMatrix::zeros(b.rows, b.cols);
        let mut col = vec![ZERO; b.rows];
        for j in 0..b.cols {
            for i in 0..b.rows {
                col[i] = b.get(i, j);
            }
            let x = self.solve(&col);
            for i in 0..b.rows {
                out.set(i, j, x[i]);
            }
        }
        out
    }
}

/// Factors a copy of `a` and solves A x = b, then verifies the residual
/// |b - A x| <= 1e-10 (|A||x| + |b|) in the Frobenius/Euclidean scaling,
/// failing with a singular-system error otherwise.
pub fn lu_solve(a: &DenseComplexMatrix, b: &[Complex64]) -> Result<Vec<Complex64>, HsmError> {
    let f = lu_factor(a.clone())?;
    let x = f.solve(b);
    let ax = a.matvec(&x);
    let mut rnorm = 0.0f64;
    let mut bnorm = 0.0f64;
    let mut xnorm = 0.0f64;
    for i in 0..b.len() {
        rnorm += (b[i] - ax[i]).norm_sqr();
        bnorm += b[i].norm_sqr();
        xnorm += x[i].norm_sqr();
    }
    let scale = a.frobenius_norm() * xnorm.sqrt() + bnorm.sqrt();
    if rnorm.sqrt() > 1e-10 * scale {
        return Err(HsmError::SingularSystem(format!(
            "solve residual {} exceeds 1e-10 of the problem scale {scale}",
            rnorm.sqrt()
        )));
    }
    Ok(x)
}

// ---------------------------------------------------------------------------
// Banded LU (LAPACK-style band storage with fill rows)
// ---------------------------------------------------------------------------

/// Square banded matrix with `kl` sub- and `ku` superdiagonals, stored
/// column-wise with `kl` extra rows for pivoting fill.
pub struct BandMatrix {
    pub n: usize,
    pub kl: usize,
    pub ku: usize,
    ldab: usize,
    data: Vec<Complex64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        BandMatrix { n, kl, ku, ldab, data: vec![ZERO; ldab * n] }
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        // Row i of column j sits at band row kl + ku + i - j.
        j * self.ldab + self.kl + self.ku + i - j
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i + self.ku >= j && j + self.kl >= i
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        if self.in_band(i, j) {
            self.data[self.offset(i, j)]
        } else {
            ZERO
        }
    }

    pub fn add_at(&mut self, i: usize, j: usize, v: Complex64) {
        assert!(
            self.in_band(i, j),
            "entry ({i}, {j}) outside band kl={} ku={}",
            self.kl,
            self.ku
        );
        let o = self.offset(i, j);
        self.data[o] += v;
    }

    /// Factors the band matrix in place with partial pivoting.
    pub fn factor(mut self) -> Result<BandLu, HsmError> {
        let n = self.n;
        let kl = self.kl;
        let ku_eff = self.kl + self.ku; // fill widens the upper band
        let mut piv = Vec::with_capacity(n);
        for j in 0..n {
            // Pivot search within the column's band rows.
            let last = (j + kl).min(n - 1);
            let mut p = j;
            let mut best = self.data[self.offset(j, j)].norm_sqr();
            for i in (j + 1)..=last {
                let v = self.data[self.offset(i, j)].norm_sqr();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best.sqrt() < PIVOT_FLOOR {
                return Err(HsmError::SingularSystem(format!(
                    "band pivot {} below threshold at step {j}",
                    best.sqrt()
                )));
            }
            piv.push(p);
            let jend = (j + ku_eff).min(n - 1);
            if p != j {
                for col in j..=jend {
                    let oi = self.offset(j, col);
                    let op = self.offset(p, col);
                    self.data.swap(oi, op);
                }
            }
            let inv = Complex64::new(1.0, 0.0) / self.data[self.offset(j, j)];
            for i in (j + 1)..=last {
                let o = self.offset(i, j);
                self.data[o] *= inv;
            }
            for col in (j + 1)..=jend {
                let u = self.data[self.offset(j, col)];
                if u == ZERO {
                    continue;
                }
                for i in (j + 1)..=last {
                    let l = self.data[self.offset(i, j)];
                    let o = self.offset(i, col);
                    self.data[o] -= l * u;
                }
            }
        }
        Ok(BandLu { band: self, piv })
    }
}

/// Factored banded matrix.
pub struct BandLu {
    band: BandMatrix,
    piv: Vec<usize>,
}

impl BandLu {
    pub fn solve_in_place(&self, x: &mut [Complex64]) {
        let n = self.band.n;
        assert_eq!(x.len(), n);
        let kl = self.band.kl;
        let ku_eff = self.band.kl + self.band.ku;
        for j in 0..n {
            let p = self.piv[j];
            if p != j {
                x.swap(j, p);
            }
            let xj = x[j];
            if xj == ZERO {
                continue;
            }
            let last = (j + kl).min(n - 1);
            for i in (j + 1)..=last {
                x[i] -= self.band.data[self.band.offset(i, j)] * xj;
            }
        }
        for i in (0..n).rev() {
            let jend = (i + ku_eff).min(n - 1);
            let mut acc = ZERO;
            for j in (i + 1)..=jend {
                acc += self.band.data[self.band.offset(i, j)] * x[j];
            }
            x[i] = (x[i] - acc) / self.band.data[self.band.offset(i, i)];
        }
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

// ---------------------------------------------------------------------------
// Weighted operator norm by power iteration
// ---------------------------------------------------------------------------

const NORM_TOL: f64 = 1e-6;
const NORM_MAX_ITER: usize = 5000;

/// Real lower-triangular Cholesky factor of a Hermitian positive definite
/// matrix (used for mass weights, which are real symmetric).
fn cholesky(m: &DenseComplexMatrix) -> Result<DenseComplexMatrix, HsmError> {
    assert_eq!(m.rows, m.cols);
    let n = m.rows;
    let mut l = DenseComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut acc = m.get(i, j);
            for p in 0..j {
                acc -= l.get(i, p) * l.get(j, p).conj();
            }
            if i == j {
                if acc.re <= 0.0 || acc.im.abs() > 1e-10 * acc.re.abs().max(1.0) {
                    return Err(HsmError::SingularSystem(format!(
                        "weight matrix is not positive definite at row {i} (diagonal {acc})"
                    )));
                }
                l.set(i, i, Complex64::new(acc.re.sqrt(), 0.0));
            } else {
                l.set(i, j, acc / l.get(j, j));
            }
        }
    }
    Ok(l)
}

fn forward_solve(l: &DenseComplexMatrix, b: &mut [Complex64]) {
    let n = l.rows;
    for i in 0..n {
        let row = l.row(i);
        let mut acc = ZERO;
        for j in 0..i {
            acc += row[j] * b[j];
        }
        b[i] = (b[i] - acc) / row[i];
    }
}

/// Solves L^H x = b for lower-triangular L.
fn adjoint_solve(l: &DenseComplexMatrix, b: &mut [Complex64]) {
    let n = l.rows;
    for i in (0..n).rev() {
        let mut acc = ZERO;
        for j in (i + 1)..n {
            acc += l.get(j, i).conj() * b[j];
        }
        b[i] = (b[i] - acc) / l.get(i, i).conj();
    }
}

/// Largest singular value of `a`, optionally in the inner product induced by
/// the Hermitian positive definite `weight`: the operator norm of
/// L^{-1} A L^{-H} where weight = L L^H. Power iteration on the normal
/// operator with relative tolerance 1e-6 and an iteration cap of 5000.
pub fn op_norm_estimate(
    a: &DenseComplexMatrix,
    weight: Option<&DenseComplexMatrix>,
) -> Result<f64, HsmError> {
    assert_eq!(a.rows, a.cols, "operator norm needs a square matrix");
    let n = a.rows;
    if n == 0 {
        return Ok(0.0);
    }
    let l = match weight {
        Some(m) => Some(cholesky(m)?),
        None => None,
    };
    // Deterministic, fully populated start vector.
    let mut v: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(1.0 + (0.7 * i as f64).sin(), (1.3 * i as f64).cos()))
        .collect();
    let nv = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in v.iter_mut() {
        *z /= nv;
    }
    let apply_b = |x: &[Complex64], l: &Option<DenseComplexMatrix>| -> Vec<Complex64> {
        let mut t = x.to_vec();
        if let Some(l) = l {
            adjoint_solve(l, &mut t);
        }
        let mut y = a.matvec(&t);
        if let Some(l) = l {
            forward_solve(l, &mut y);
        }
        y
    };
    let apply_bh = |x: &[Complex64], l: &Option<DenseComplexMatrix>| -> Vec<Complex64> {
        let mut t = x.to_vec();
        if let Some(l) = l {
            // (L^{-1})^H x: solve L^H t = x.
            adjoint_solve(l, &mut t);
        }
        let mut y = a.matvec_adjoint(&t);
        if let Some(l) = l {
            forward_solve(l, &mut y);
        }
        y
    };
    let mut sigma = 0.0f64;
    for _ in 0..NORM_MAX_ITER {
        let bv = apply_b(&v, &l);
        let bn = bv.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let mut w = apply_bh(&bv, &l);
        let wn = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if wn == 0.0 || bn == 0.0 {
            return Ok(0.0);
        }
        for z in w.iter_mut() {
            *z /= wn;
        }
        v = w;
        let new_sigma = bn;
        if (new_sigma - sigma).abs() <= NORM_TOL * new_sigma.max(1e-30) {
            return Ok(new_sigma);
        }
        sigma = new_sigma;
    }
    Err(HsmError::ConvergenceFailure(format!(
        "operator norm power iteration did not settle within {NORM_MAX_ITER} iterations \
         (last estimate {sigma})"
    )))
}

// ---------------------------------------------------------------------------
// Jacobi eigenvalues and singular values (test oracles, compactness checks)
// ---------------------------------------------------------------------------

/// Eigenvalues of a Hermitian matrix by the cyclic Jacobi method, ascending.
pub fn hermitian_eigenvalues(m: &DenseComplexMatrix) -> Vec<f64> {
    assert_eq!(m.rows, m.cols);
    let n = m.rows;
    let mut a = m.clone();
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a.get(p, q).norm_sqr();
            }
        }
        if off.sqrt() <= 1e-14 * a.frobenius_norm().max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq.norm() == 0.0 {
                    continue;
                }
                let app = a.get(p, p).re;
                let aqq = a.get(q, q).re;
                // Phase out the pivot, then rotate like the real case.
                let phi = apq.arg();
                let mag = apq.norm();
                let tau = (aqq - app) / (2.0 * mag);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let e = Complex64::from_polar(1.0, -phi);
                // Column update: col_p' = c col_p - s e col_q,
                //                col_q' = s e* col_p... applied two-sided.
                for i in 0..n {
                    let aip = a.get(i, p);
                    let aiq = a.get(i, q) * e;
                    a.set(i, p, c * aip - s * aiq);
                    a.set(i, q, s * aip + c * aiq);
                }
                for j in 0..n {
                    let apj = a.get(p, j);
                    let aqj = a.get(q, j) * e.conj();
                    a.set(p, j, c * apj - s * aqj);
                    a.set(q, j, s * apj + c * aqj);
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a.get(i, i).re).collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ev
}

/// Singular values of a rectangular matrix by one-sided Jacobi on the
/// columns, descending.
pub fn singular_values(m: &DenseComplexMatrix) -> Vec<f64> {
    // Work on the orientation with fewer columns.
    let a = if m.rows >= m.cols { m.clone() } else { m.adjoint() };
    let (rows, cols) = (a.rows, a.cols);
    // Column-major copy for cache-friendly column ops.
    let mut col: Vec<Vec<Complex64>> = (0..cols)
        .map(|j| (0..rows).map(|i| a.get(i, j)).collect())
        .collect();
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let mut app = 0.0f64;
                let mut aqq = 0.0f64;
                let mut apq = ZERO;
                for i in 0..rows {
                    app += col[p][i].norm_sqr();
                    aqq += col[q][i].norm_sqr();
                    apq += col[p][i].conj() * col[q][i];
                }
                if apq.norm() <= 1e-15 * (app * aqq).sqrt().max(1e-300) {
                    continue;
                }
                rotated = true;
                let phi = apq.arg();
                let e = Complex64::from_polar(1.0, -phi);
                let mag = apq.norm();
                let tau = (aqq - app) / (2.0 * mag);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for i in 0..rows {
                    let vp = col[p][i];
                    let vq = col[q][i] * e;
                    col[p][i] = c * vp - s * vq;
                    col[q][i] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = col
        .iter()
        .map(|cj| cj.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
    sv
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Deterministic pseudo-random complex value for test matrices.
    fn pseudo(i: usize, j: usize) -> Complex64 {
        let x = ((i * 73 + j * 37 + 11) % 97) as f64 / 97.0 - 0.5;
        let y = ((i * 31 + j * 59 + 7) % 89) as f64 / 89.0 - 0.5;
        c(x, y)
    }

    #[test]
    fn gemm_matches_naive_triple_loop() {
        let a = DenseComplexMatrix::from_fn(7, 5, |i, j| pseudo(i, j));
        let b = DenseComplexMatrix::from_fn(5, 9, |i, j| pseudo(i + 3, j + 1));
        let fast = a.matmul(&b);
        for i in 0..7 {
            for j in 0..9 {
                let mut acc = ZERO;
                for p in 0..5 {
                    acc += a.get(i, p) * b.get(p, j);
                }
                assert!((fast.get(i, j) - acc).norm() <= 1e-14);
            }
        }
    }

    #[test]
    fn gemm_handles_sizes_around_block_boundaries() {
        for &(m, n, k) in &[(1usize, 1usize, 1usize), (2, 4, 3), (65, 513, 193), (130, 17, 200)] {
            let a = DenseComplexMatrix::from_fn(m, k, |i, j| pseudo(i, j));
            let b = DenseComplexMatrix::from_fn(k, n, |i, j| pseudo(j, i));
            let fast = a.matmul(&b);
            let mut worst = 0.0f64;
            for i in 0..m {
                for j in 0..n {
                    let mut acc = ZERO;
                    for p in 0..k {
                        acc += a.get(i, p) * b.get(p, j);
                    }
                    worst = worst.max((fast.get(i, j) - acc).norm());
                }
            }
            assert!(worst <= 1e-12 * (k as f64), "m={m} n={n} k={k}: {worst}");
        }
    }

    #[test]
    fn lu_reconstructs_the_matrix() {
        let n = 60;
        let a = DenseComplexMatrix::from_fn(n, n, |i, j| {
            let mut v = pseudo(i, j);
            if i == j {
                v += c(4.0, 0.0); // keep it comfortably nonsingular
            }
            v
        });
        let f = lu_factor(a.clone()).unwrap();
        // Check P A = L U by applying both sides to basis vectors.
        for t in 0..6 {
            let e: Vec<Complex64> = (0..n).map(|i| if i == t * 9 { c(1.0, 0.0) } else { ZERO }).collect();
            let x = f.solve(&e);
            let back = a.matvec(&x);
            let mut err = 0.0f64;
            for i in 0..n {
                err += (back[i] - e[i]).norm_sqr();
            }
            assert!(err.sqrt() <= 1e-11, "column {t}: residual {}", err.sqrt());
        }
    }

    #[test]
    fn lu_solve_verifies_residual_and_detects_singularity() {
        let a = DenseComplexMatrix::from_fn(3, 3, |i, j| {
            if i == j { c(2.0, 1.0) } else { c(0.3, -0.1) }
        });
        let b = vec![c(1.0, 0.0), c(0.0, 1.0), c(2.0, -1.0)];
        let x = lu_solve(&a, &b).unwrap();
        let ax = a.matvec(&x);
        for i in 0..3 {
            assert!((ax[i] - b[i]).norm() <= 1e-12);
        }
        // A matrix with a repeated row is singular.
        let mut s = DenseComplexMatrix::zeros(3, 3);
        for j in 0..3 {
            s.set(0, j, c(1.0, 0.0));
            s.set(1, j, c(1.0, 0.0));
            s.set(2, j, c(0.5, 0.5));
        }
        assert!(matches!(lu_solve(&s, &b), Err(HsmError::SingularSystem(_))));
    }

    #[test]
    fn lu_pivoting_is_deterministic() {
        let n = 40;
        let a = DenseComplexMatrix::from_fn(n, n, |i, j| pseudo(i * 2, j * 3) + if i == j { c(1.5, 0.0) } else { ZERO });
        let f1 = lu_factor(a.clone()).unwrap();
        let f2 = lu_factor(a).unwrap();
        assert_eq!(f1.piv, f2.piv);
        assert_eq!(f1.lu.as_slice(), f2.lu.as_slice());
    }

    #[test]
    fn band_lu_matches_dense_lu() {
        let n = 60;
        let (kl, ku) = (3usize, 2usize);
        let mut band = BandMatrix::zeros(n, kl, ku);
        let mut dense = DenseComplexMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i + ku >= j && j + kl >= i {
                    let v = pseudo(i, j) + if i == j { c(3.0, 0.5) } else { ZERO };
                    band.add_at(i, j, v);
                    dense.set(i, j, v);
                }
            }
        }
        let b: Vec<Complex64> = (0..n).map(|i| pseudo(i, n - i)).collect();
        let xb = band.factor().unwrap().solve(&b);
        let xd = lu_solve(&dense, &b).unwrap();
        for i in 0..n {
            assert!((xb[i] - xd[i]).norm() <= 1e-10, "i={i}");
        }
    }

    #[test]
    fn band_rejects_out_of_band_writes() {
        let mut band = BandMatrix::zeros(10, 1, 1);
        let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
            band.add_at(0, 5, c(1.0, 0.0));
        }));
        assert!(result.is_err());
    }

    #[test]
    fn power_iteration_finds_diagonal_norm() {
        let mut a = DenseComplexMatrix::zeros(3, 3);
        a.set(0, 0, c(3.0, 0.0));
        a.set(1, 1, c(-1.0, 0.0));
        a.set(2, 2, c(0.0, 0.5));
        let norm = op_norm_estimate(&a, None).unwrap();
        assert!((norm - 3.0).abs() <= 1e-5);
    }

    #[test]
    fn weighted_norm_of_identity_is_one() {
        // The matrix argument holds Galerkin entries <T phi_m, phi_n>, so the
        // identity operator is represented by the weight (mass) matrix itself
        // and must have norm exactly 1 in the weighted inner product.
        let n = 8;
        let mut w = DenseComplexMatrix::zeros(n, n);
        for i in 0..n {
            w.set(i, i, c(0.5 + i as f64, 0.0));
            if i + 1 < n {
                w.set(i, i + 1, c(0.1, 0.0));
                w.set(i + 1, i, c(0.1, 0.0));
            }
        }
        let norm = op_norm_estimate(&w, Some(&w)).unwrap();
        assert!((norm - 1.0).abs() <= 1e-5, "norm {norm}");
    }

    #[test]
    fn weighted_norm_matches_closed_form_for_diagonal_pair() {
        // Galerkin matrix A = diag(8, 1) over mass W = diag(4, 1): with
        // L = diag(2, 1) the weighted representative L^{-1} A L^{-H} is
        // diag(8/4, 1/1) = diag(2, 1), so the operator norm is 2.
        let mut a = DenseComplexMatrix::zeros(2, 2);
        a.set(0, 0, c(8.0, 0.0));
        a.set(1, 1, c(1.0, 0.0));
        let mut w = DenseComplexMatrix::zeros(2, 2);
        w.set(0, 0, c(4.0, 0.0));
        w.set(1, 1, c(1.0, 0.0));
        let norm = op_norm_estimate(&a, Some(&w)).unwrap();
        assert!((norm - 2.0).abs() <= 1e-5, "norm {norm}");
    }

    #[test]
    fn hermitian_eigenvalues_known_matrices() {
        let mut a = DenseComplexMatrix::zeros(2, 2);
        a.set(0, 0, c(2.0, 0.0));
        a.set(0, 1, c(1.0, 0.0));
        a.set(1, 0, c(1.0, 0.0));
        a.set(1, 1, c(2.0, 0.0));
        let ev = hermitian_eigenvalues(&a);
        assert!((ev[0] - 1.0).abs() <= 1e-12 && (ev[1] - 3.0).abs() <= 1e-12);
        // Complex Hermitian with the same spectrum.
        let mut h = DenseComplexMatrix::zeros(2, 2);
        h.set(0, 0, c(2.0, 0.0));
        h.set(0, 1, c(0.0, 1.0));
        h.set(1, 0, c(0.0, -1.0));
        h.set(1, 1, c(2.0, 0.0));
        let ev = hermitian_eigenvalues(&h);
        assert!((ev[0] - 1.0).abs() <= 1e-12 && (ev[1] - 3.0).abs() <= 1e-12);
    }

    #[test]
    fn singular_values_match_eigenvalues_of_gram_matrix() {
        let a = DenseComplexMatrix::from_fn(6, 4, |i, j| pseudo(i + 1, j + 2));
        let sv = singular_values(&a);
        let gram = a.adjoint().matmul(&a);
        let ev = hermitian_eigenvalues(&gram);
        let mut from_ev: Vec<f64> = ev.iter().map(|l| l.max(0.0).sqrt()).collect();
        from_ev.sort_by(|x, y| y.partial_cmp(x).unwrap());
        for i in 0..4 {
            assert!(
                (sv[i] - from_ev[i]).abs() <= 1e-10 * from_ev[0],
                "sigma_{i}: {} vs {}",
                sv[i],
                from_ev[i]
            );
        }
    }

    #[test]
    #[ignore = "performance measurement; run explicitly with --ignored --release"]
    fn gemm_sustains_at_least_one_gflop() {
        let n = 512;
        let a = DenseComplexMatrix::from_fn(n, n, |i, j| pseudo(i, j));
        let b = DenseComplexMatrix::from_fn(n, n, |i, j| pseudo(j, i));
        let start = std::time::Instant::now();
        let cmat = a.matmul(&b);
        let secs = start.elapsed().as_secs_f64();
        // 8 real flops per complex multiply-add.
        let gflops = 8.0 * (n as f64).powi(3) / secs / 1e9;
        assert!(cmat.get(0, 0).re.is_finite());
        assert!(gflops >= 1.0, "sustained only {gflops:.2} GFLOP/s");
    }
}
