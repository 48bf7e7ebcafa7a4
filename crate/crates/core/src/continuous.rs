//! Compressor design for continuous-time exosystems `x' = A x` with skew `A`.
//!
//! The compressor `c' = S c`, `c(0) = c0` is built in the Cartan subalgebra of
//! `so(n)`: conjugate `A` to a block diagonal `Ã = diag(w_i J, ..., [0])`, pick
//! `S̃ = diag(theta_i J, ..., [0])` so that the differences
//! `delta_i = w_i - theta_i` are pairwise distinct and nonzero, and rotate back
//! with the same `T`. Then `A` and `S` commute and
//! `y(t) = <e^{St} c0, e^{At} x0> = <e^{(S-A)t} c0, x0>`, whose sample rows span
//! `R^n`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;

/// Frequencies closer than this are treated as equal.
pub const FREQUENCY_TOLERANCE: f64 = 1e-8;

/// `J = [[0, 1], [-1, 0]]`, the generator of `so(2)`.
pub fn planar_generator() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])
}

/// `exp(phi J) = [[cos phi, sin phi], [-sin phi, cos phi]]`.
fn planar_rotation(phi: f64) -> [[f64; 2]; 2] {
    let (s, c) = phi.sin_cos();
    [[c, s], [-s, c]]
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkewSymmetricMatrix(DMatrix<f64>);

impl SkewSymmetricMatrix {
    /// Accepts `A` with `|A + A^T|_F <= 1e-12 |A|_F`.
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() || a.nrows() == 0 {
            return Err(Error::Precondition(format!(
                "expected a non-empty square matrix, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let asym = (&a + a.transpose()).norm();
        if asym > 1e-12 * a.norm() {
            return Err(Error::Precondition(format!(
                "matrix is not skew-symmetric (|A + A^T| = {asym:e})"
            )));
        }
        Ok(Self(a))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("matrix rows must all have length n".into()));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    /// Skew part `(M - M^T) / 2` of an arbitrary square matrix.
    fn skew_part(m: DMatrix<f64>) -> Self {
        Self((&m - m.transpose()) * 0.5)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// `A = T Ã T^T` with `Ã` block diagonal: blocks `w_i J`, then a trailing
/// scalar zero for odd `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct CartanForm {
    pub t: DMatrix<f64>,
    pub omegas: Vec<f64>,
    pub trailing_zero: bool,
}

impl CartanForm {
    pub fn dim(&self) -> usize {
        self.t.nrows()
    }

    /// Block diagonal matrix with `coeffs[i] J` blocks and the trailing zero.
    pub fn block_diagonal(&self, coeffs: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for (i, &w) in coeffs.iter().enumerate() {
            m[(2 * i, 2 * i + 1)] = w;
            m[(2 * i + 1, 2 * i)] = -w;
        }
        m
    }

    pub fn reduced(&self) -> DMatrix<f64> {
        self.block_diagonal(&self.omegas)
    }

    /// `T Ã T^T`, which should reproduce `A`.
    pub fn recompose(&self) -> DMatrix<f64> {
        &self.t * self.reduced() * self.t.transpose()
    }

    /// `T diag(exp(phi_i J)) T^T`, with the trailing entry 1.
    fn conjugated_rotation(&self, phases: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        let mut r = DMatrix::identity(n, n);
        for (i, &phi) in phases.iter().enumerate() {
            let b = planar_rotation(phi);
            r[(2 * i, 2 * i)] = b[0][0];
            r[(2 * i, 2 * i + 1)] = b[0][1];
            r[(2 * i + 1, 2 * i)] = b[1][0];
            r[(2 * i + 1, 2 * i + 1)] = b[1][1];
        }
        &self.t * r * self.t.transpose()
    }

    /// `e^{A t}`.
    pub fn exp(&self, t: f64) -> DMatrix<f64> {
        let phases: Vec<f64> = self.omegas.iter().map(|w| w * t).collect();
        self.conjugated_rotation(&phases)
    }

    /// Frequencies with duplicates (within [`FREQUENCY_TOLERANCE`]) or zeros
    /// make every constant compressor fail.
    pub fn constant_compressor_suffices(&self) -> bool {
        admissible_differences(&self.omegas)
    }
}

/// Pairwise distinct, nonzero magnitudes. A block at `-d` rotates through the
/// same two directions as one at `d`, so signs do not separate frequencies.
fn admissible_differences(deltas: &[f64]) -> bool {
    let mags: Vec<f64> = deltas.iter().map(|d| d.abs()).collect();
    mags.iter().all(|&d| d > FREQUENCY_TOLERANCE)
        && mags
            .iter()
            .enumerate()
            .all(|(i, a)| mags[i + 1..].iter().all(|b| (a - b).abs() > FREQUENCY_TOLERANCE))
}

/// Block index pairs, their frequencies and the unpaired (kernel) indices.
type IndexPairing = (Vec<(usize, usize)>, Vec<f64>, Vec<usize>);

/// Signed-permutation fast path: each row of `A` has at most one nonzero, so
/// `A` is already a direct sum of planar generators up to index order.
fn cartan_by_index_pairing(a: &DMatrix<f64>) -> Option<IndexPairing> {
    let n = a.nrows();
    let mut partner = vec![None; n];
    for i in 0..n {
        let nz: Vec<usize> = (0..n).filter(|&j| a[(i, j)] != 0.0).collect();
        match nz.as_slice() {
            [] => {}
            [j] => partner[i] = Some(*j),
            _ => return None,
        }
    }
    let mut pairs = Vec::new();
    let mut zeros = Vec::new();
    for i in 0..n {
        match partner[i] {
            None => zeros.push(i),
            Some(j) if j > i => {
                if partner[j] != Some(i) {
                    return None;
                }
                // orient so that u^T A v = w >= 0
                if a[(i, j)] > 0.0 {
                    pairs.push((i, j));
                } else {
                    pairs.push((j, i));
                }
            }
            Some(_) => {}
        }
    }
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by(|&x, &y| {
        let wx = a[(pairs[x].0, pairs[x].1)];
        let wy = a[(pairs[y].0, pairs[y].1)];
        wy.total_cmp(&wx)
    });
    let pairs: Vec<(usize, usize)> = order.iter().map(|&k| pairs[k]).collect();
    let omegas = pairs.iter().map(|&(u, v)| a[(u, v)]).collect();
    Some((pairs, omegas, zeros))
}

fn orthogonalize(v: &mut DVector<f64>, basis: &[DVector<f64>]) {
    // two passes of classical Gram-Schmidt
    for _ in 0..2 {
        for q in basis {
            let c = q.dot(v);
            v.axpy(-c, q, 1.0);
        }
    }
}

/// Finds `T` in `SO(n)` and `w_i >= 0` with `T^T A T` block diagonal.
///
/// Sparse inputs that are a permuted direct sum of planar blocks map to a
/// signed permutation `T`. Otherwise the planes come from the eigenspaces of
/// the symmetric matrix `A^T A = -A^2`: an eigenvector `u` of eigenvalue `w^2`
/// pairs with `v = -A u / w`, giving `u^T A v = w`.
///
/// If `det T = -1` after pairing, the second column of a zero block is
/// negated; without a zero block the trailing column (odd `n`) is, and failing
/// both the last block flips orientation, leaving its `w` negative.
pub fn cartan_decompose(a: &SkewSymmetricMatrix) -> Result<CartanForm> {
    let am = a.matrix();
    let n = a.dim();
    let scale = am.norm().max(1.0);
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut omegas: Vec<f64> = Vec::new();

    if let Some((pairs, ws, zeros)) = cartan_by_index_pairing(am) {
        for (&(u, v), &w) in pairs.iter().zip(&ws) {
            cols.push(DVector::from_fn(n, |i, _| if i == u { 1.0 } else { 0.0 }));
            cols.push(DVector::from_fn(n, |i, _| if i == v { 1.0 } else { 0.0 }));
            omegas.push(w);
        }
        for z in zeros {
            cols.push(DVector::from_fn(n, |i, _| if i == z { 1.0 } else { 0.0 }));
        }
    } else {
        let gram = am.transpose() * am;
        let eig = SymmetricEigen::new(gram);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
        let zero_cut = (FREQUENCY_TOLERANCE * scale).powi(2);
        let mut zero_candidates = Vec::new();
        for &k in &order {
            let mut u: DVector<f64> = eig.eigenvectors.column(k).into_owned();
            if eig.eigenvalues[k] <= zero_cut || cols.len() + 2 > n {
                zero_candidates.push(u);
                continue;
            }
            orthogonalize(&mut u, &cols);
            if u.norm() < 1e-6 {
                continue;
            }
            u.normalize_mut();
            let mut v = -(am * &u);
            orthogonalize(&mut v, &cols);
            let w = v.norm();
            if w <= FREQUENCY_TOLERANCE * scale {
                zero_candidates.push(u);
                continue;
            }
            v /= w;
            let w = u.dot(&(am * &v));
            cols.push(u);
            cols.push(v);
            omegas.push(w);
        }
        // fill the kernel: leftover eigenvectors first, then standard basis
        let standard = (0..n).map(|i| DVector::from_fn(n, |r, _| if r == i { 1.0 } else { 0.0 }));
        for mut z in zero_candidates.into_iter().chain(standard) {
            if cols.len() == n {
                break;
            }
            orthogonalize(&mut z, &cols);
            if z.norm() > 1e-6 {
                z.normalize_mut();
                cols.push(z);
            }
        }
    }
    if cols.len() != n {
        return Err(Error::Numerical(format!(
            "could not complete an orthonormal basis ({} of {n} columns)",
            cols.len()
        )));
    }

    let blocks = n / 2;
    omegas.resize(blocks, 0.0);
    let mut t = DMatrix::from_columns(&cols);
    if t.determinant() < 0.0 {
        if let Some(zb) = (0..blocks).rev().find(|&b| omegas[b] == 0.0) {
            t.column_mut(2 * zb + 1).neg_mut();
        } else if n % 2 == 1 {
            t.column_mut(n - 1).neg_mut();
        } else {
            t.column_mut(n - 1).neg_mut();
            let last = blocks - 1;
            omegas[last] = -omegas[last];
        }
    }
    let form = CartanForm {
        t,
        omegas,
        trailing_zero: n % 2 == 1,
    };
    let defect = (form.t.transpose() * am * &form.t - form.reduced()).norm();
    if defect > 1e-9 * scale {
        return Err(Error::Numerical(format!(
            "block diagonalization residual {defect:e} exceeds tolerance"
        )));
    }
    Ok(form)
}

/// `e^{M t}` for skew `M`, through its Cartan form. The result is orthogonal
/// with determinant +1.
pub fn matrix_exponential_skew(m: &SkewSymmetricMatrix, t: f64) -> Result<DMatrix<f64>> {
    Ok(cartan_decompose(m)?.exp(t))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousCompressorDesign {
    pub s: SkewSymmetricMatrix,
    pub c0: DVector<f64>,
    pub cartan: CartanForm,
    pub thetas: Vec<f64>,
    /// `delta_i = w_i - theta_i`.
    pub deltas: Vec<f64>,
}

impl ContinuousCompressorDesign {
    /// Assembles `S` and `c0` for arbitrary `thetas` without checking that the
    /// differences are admissible; use [`Self::admissible`] to test.
    pub fn from_parts_unchecked(cartan: CartanForm, thetas: Vec<f64>) -> Self {
        let n = cartan.dim();
        let s_tilde = cartan.block_diagonal(&thetas);
        let s = SkewSymmetricMatrix::skew_part(&cartan.t * s_tilde * cartan.t.transpose());
        let odd_sum = DVector::from_fn(n, |i, _| if i % 2 == 0 { 1.0 } else { 0.0 });
        let c0 = &cartan.t * odd_sum;
        let deltas = cartan.omegas.iter().zip(&thetas).map(|(w, th)| w - th).collect();
        Self {
            s,
            c0,
            cartan,
            thetas,
            deltas,
        }
    }

    pub fn dim(&self) -> usize {
        self.cartan.dim()
    }

    pub fn admissible(&self) -> bool {
        admissible_differences(&self.deltas)
    }

    /// `e^{(S - A) t} = T diag(exp(-delta_i t J)) T^T`.
    pub fn exp_difference(&self, t: f64) -> DMatrix<f64> {
        let phases: Vec<f64> = self.deltas.iter().map(|d| -d * t).collect();
        self.cartan.conjugated_rotation(&phases)
    }

    /// `e^{S t}`.
    pub fn exp_compressor(&self, t: f64) -> DMatrix<f64> {
        let phases: Vec<f64> = self.thetas.iter().map(|th| th * t).collect();
        self.cartan.conjugated_rotation(&phases)
    }

    /// Row `(e^{(S-A)t} c0)^T` relating `y(t)` to `x0`.
    pub fn measurement_row(&self, t: f64) -> DVector<f64> {
        self.exp_difference(t) * &self.c0
    }

    /// `|AS - SA|_F`.
    pub fn commutator_norm(&self, a: &SkewSymmetricMatrix) -> f64 {
        let (am, sm) = (a.matrix(), self.s.matrix());
        (am * sm - sm * am).norm()
    }

    /// Default schedule spacing `pi / (2 max|delta_i| n + 1)`.
    pub fn default_dt(&self) -> f64 {
        let max_delta = self.deltas.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        std::f64::consts::PI / (2.0 * max_delta * self.dim() as f64 + 1.0)
    }

    pub fn default_sample_times(&self, count: usize) -> Vec<f64> {
        let dt = self.default_dt();
        (0..count).map(|k| k as f64 * dt).collect()
    }
}

/// Design with `theta_i = w_i - i * delta_base`, i.e. `delta_i = i * delta_base`.
pub fn design_compressor(a: &SkewSymmetricMatrix, delta_base: f64) -> Result<ContinuousCompressorDesign> {
    if delta_base <= 0.0 || !delta_base.is_finite() {
        return Err(Error::Precondition("delta_base must be a positive real".into()));
    }
    let cartan = cartan_decompose(a)?;
    let thetas = cartan
        .omegas
        .iter()
        .enumerate()
        .map(|(i, w)| w - (i + 1) as f64 * delta_base)
        .collect();
    Ok(ContinuousCompressorDesign::from_parts_unchecked(cartan, thetas))
}

/// Design with caller-chosen `theta_i`; rejects choices whose differences
/// collide or vanish.
pub fn design_compressor_with_thetas(
    a: &SkewSymmetricMatrix,
    thetas: &[f64],
) -> Result<ContinuousCompressorDesign> {
    let cartan = cartan_decompose(a)?;
    if thetas.len() != cartan.omegas.len() {
        return Err(Error::Dimension(format!(
            "expected {} thetas, got {}",
            cartan.omegas.len(),
            thetas.len()
        )));
    }
    let design = ContinuousCompressorDesign::from_parts_unchecked(cartan, thetas.to_vec());
    if !design.admissible() {
        return Err(Error::Precondition(format!(
            "differences {:?} are not pairwise distinct and nonzero",
            design.deltas
        )));
    }
    Ok(design)
}

fn check_same_system(design: &ContinuousCompressorDesign, a: &SkewSymmetricMatrix) -> Result<()> {
    if a.dim() != design.dim() {
        return Err(Error::Dimension(format!(
            "design is for n = {}, matrix has n = {}",
            design.dim(),
            a.dim()
        )));
    }
    let gap = (design.cartan.recompose() - a.matrix()).norm();
    if gap > 1e-9 * a.matrix().norm().max(1.0) {
        return Err(Error::Precondition(format!(
            "design was built for a different matrix (gap {gap:e})"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpanningCertificate {
    pub sample_count: usize,
    pub dt: f64,
    #[serde(skip)]
    pub gramian: DMatrix<f64>,
    pub min_eigenvalue: f64,
    pub trace: f64,
    pub pass: bool,
}

/// Gramian of `v_k = e^{(S-A) k dt} c0`, `k < sample_count`; passes when its
/// smallest eigenvalue exceeds `1e-8 trace / n`.
pub fn spanning_certificate(
    design: &ContinuousCompressorDesign,
    a: &SkewSymmetricMatrix,
    sample_count: usize,
    dt: f64,
) -> Result<SpanningCertificate> {
    check_same_system(design, a)?;
    let n = design.dim();
    if sample_count < n {
        return Err(Error::Precondition(format!(
            "need at least n = {n} samples, got {sample_count}"
        )));
    }
    let mut gramian = DMatrix::zeros(n, n);
    for k in 0..sample_count {
        let v = design.measurement_row(k as f64 * dt);
        gramian += &v * v.transpose();
    }
    let min_eigenvalue = gramian.symmetric_eigenvalues().min();
    let trace = gramian.trace();
    let pass = trace > 0.0 && min_eigenvalue > 1e-8 * trace / n as f64;
    Ok(SpanningCertificate {
        sample_count,
        dt,
        gramian,
        min_eigenvalue,
        trace,
        pass,
    })
}

/// `y(t) = <e^{St} c0, e^{At} x0>` evaluated in product form.
pub fn simulate_continuous(
    design: &ContinuousCompressorDesign,
    x0: &DVector<f64>,
    times: &[f64],
) -> Vec<(f64, f64)> {
    times
        .iter()
        .map(|&t| {
            let c = design.exp_compressor(t) * &design.c0;
            let x = design.cartan.exp(t) * x0;
            (t, c.dot(&x))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousReconstruction {
    pub x0: DVector<f64>,
    pub residual: f64,
    pub min_singular_value: f64,
}

impl ContinuousReconstruction {
    /// `x(t) = e^{At} x0`.
    pub fn state_at(&self, a: &CartanForm, t: f64) -> DVector<f64> {
        a.exp(t) * &self.x0
    }
}

/// Least-squares recovery of `x0` from samples `(t_k, y_k)`.
pub fn reconstruct_continuous(
    samples: &[(f64, f64)],
    design: &ContinuousCompressorDesign,
    a: &SkewSymmetricMatrix,
) -> Result<ContinuousReconstruction> {
    check_same_system(design, a)?;
    let n = design.dim();
    let mut times: Vec<f64> = samples.iter().map(|s| s.0).collect();
    times.sort_by(f64::total_cmp);
    if times.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Precondition("sample times must be distinct".into()));
    }
    let rows: Vec<Vec<f64>> = samples
        .iter()
        .map(|&(t, _)| design.measurement_row(t).iter().copied().collect())
        .collect();
    let rhs: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let (min_singular_value, excited) = if rows.len() < n {
        (0.0, false)
    } else {
        let sv = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]).singular_values();
        (sv.min(), sv.max() > 0.0 && sv.min() > 1e-8 * sv.max())
    };
    let sol = linalg::float_solve(&rows, &rhs, n);
    let Some(sol) = sol.filter(|_| excited) else {
        return Err(Error::InsufficientExcitation {
            min_singular: min_singular_value,
        });
    };
    let x0 = DVector::from_vec(sol.x);
    let y_norm = DVector::from_vec(rhs.clone()).norm();
    let res_vec: Vec<f64> = rows
        .iter()
        .zip(&rhs)
        .map(|(r, y)| r.iter().zip(x0.iter()).map(|(a, b)| a * b).sum::<f64>() - y)
        .collect();
    let residual = DVector::from_vec(res_vec).norm();
    let allowed = 1e-8 * y_norm;
    if residual > allowed && residual > 0.0 {
        return Err(Error::InconsistentSamples { residual, allowed });
    }
    Ok(ContinuousReconstruction {
        x0,
        residual,
        min_singular_value,
    })
}
