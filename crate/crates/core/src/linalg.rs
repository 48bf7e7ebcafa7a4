//! Small dense solvers over the two scalar kinds.
//!
//! Exact path: Gauss-Jordan elimination over `BigRational`.
//! Float path: Householder QR with column pivoting, rank cut at
//! `max_dim * eps * largest_column_norm`.

use nalgebra::{DMatrix, DVector};
use num::{BigRational, Signed, Zero};

/// Rank structure of a stacked row system `rows * x`.
#[derive(Debug, Clone, PartialEq)]
pub struct RowSpace {
    pub rank: usize,
    /// `determined[i]` holds iff `e_i` lies in the row space, i.e. unknown `i`
    /// is pinned down by the equations regardless of the others.
    pub determined: Vec<bool>,
    /// 2-norm condition number of the stack; `None` in exact mode.
    pub condition: Option<f64>,
}

/// Solution of a full-column-rank system in the least-squares sense.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution<T> {
    pub x: Vec<T>,
    /// `max_k |rows_k . x - rhs_k|`; exactly zero for consistent exact systems.
    pub residual: f64,
}

/// Reduced row echelon form, returned with its pivot columns.
pub fn rref(rows: &[Vec<BigRational>], ncols: usize) -> (Vec<Vec<BigRational>>, Vec<usize>) {
    let mut m: Vec<Vec<BigRational>> = rows.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..ncols {
        if r == m.len() {
            break;
        }
        let Some(pr) = (r..m.len()).find(|&i| !m[i][col].is_zero()) else {
            continue;
        };
        m.swap(r, pr);
        let inv = BigRational::from_integer(1.into()) / m[r][col].clone();
        for v in m[r].iter_mut() {
            *v = v.clone() * inv.clone();
        }
        let pivot_row = m[r].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i == r || row[col].is_zero() {
                continue;
            }
            let f = row[col].clone();
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                *v = v.clone() - f.clone() * pv.clone();
            }
        }
        pivots.push(col);
        r += 1;
    }
    (m, pivots)
}

pub fn exact_row_space(rows: &[Vec<BigRational>], n: usize) -> RowSpace {
    let (r, pivots) = rref(rows, n);
    let mut determined = vec![false; n];
    for (k, &pc) in pivots.iter().enumerate() {
        let isolated = (0..n).all(|c| c == pc || pivots.contains(&c) || r[k][c].is_zero());
        if isolated {
            determined[pc] = true;
        }
    }
    RowSpace {
        rank: pivots.len(),
        determined,
        condition: None,
    }
}

pub fn exact_solve(
    rows: &[Vec<BigRational>],
    rhs: &[BigRational],
    n: usize,
) -> Option<Solution<BigRational>> {
    let augmented: Vec<Vec<BigRational>> = rows
        .iter()
        .zip(rhs)
        .map(|(row, b)| {
            let mut a = row.clone();
            a.push(b.clone());
            a
        })
        .collect();
    let (r, pivots) = rref(&augmented, n);
    if pivots.len() < n {
        return None;
    }
    let x: Vec<BigRational> = (0..n).map(|i| r[i][n].clone()).collect();
    let residual = rows
        .iter()
        .zip(rhs)
        .map(|(row, b)| {
            let lhs = row
                .iter()
                .zip(&x)
                .fold(BigRational::zero(), |acc, (a, v)| acc + a.clone() * v.clone());
            num::ToPrimitive::to_f64(&(lhs - b.clone()).abs()).unwrap_or(f64::INFINITY)
        })
        .fold(0.0, f64::max);
    Some(Solution { x, residual })
}

fn to_matrix(rows: &[Vec<f64>], n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j])
}

/// Numerical rank tolerance for an `m x n` matrix.
pub fn rank_tolerance(a: &DMatrix<f64>) -> f64 {
    let largest = a.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    a.nrows().max(a.ncols()) as f64 * f64::EPSILON * largest
}

pub fn float_rank(a: &DMatrix<f64>) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let tol = rank_tolerance(a);
    let r = a.clone().col_piv_qr().unpack_r();
    (0..r.nrows().min(r.ncols()))
        .filter(|&i| r[(i, i)].abs() > tol)
        .count()
}

pub fn float_row_space(rows: &[Vec<f64>], n: usize) -> RowSpace {
    if rows.is_empty() {
        return RowSpace {
            rank: 0,
            determined: vec![false; n],
            condition: Some(f64::INFINITY),
        };
    }
    let a = to_matrix(rows, n);
    let rank = float_rank(&a);
    let mut svd = a.svd(false, true);
    svd.sort_by_singular_values();
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let determined = (0..n)
        .map(|i| {
            let captured: f64 = (0..rank).map(|k| v_t[(k, i)].powi(2)).sum();
            captured >= 1.0 - 1e-9
        })
        .collect();
    let sv = &svd.singular_values;
    let condition = if sv.len() < n || sv[n - 1] == 0.0 {
        f64::INFINITY
    } else {
        sv[0] / sv[n - 1]
    };
    RowSpace {
        rank,
        determined,
        condition: Some(condition),
    }
}

/// Least squares `min |A x - b|` through column-pivoted QR; `None` when rank < n.
pub fn float_solve(rows: &[Vec<f64>], rhs: &[f64], n: usize) -> Option<Solution<f64>> {
    if rows.len() < n || n == 0 {
        return None;
    }
    let a = to_matrix(rows, n);
    let tol = rank_tolerance(&a);
    let qr = a.clone().col_piv_qr();
    let mut qtb = DVector::from_column_slice(rhs);
    qr.q_tr_mul(&mut qtb);
    let r = qr.r();
    if (0..n).any(|i| r[(i, i)].abs() <= tol) {
        return None;
    }
    let r_top = r.view((0, 0), (n, n)).into_owned();
    let mut z = r_top.solve_upper_triangular(&qtb.rows(0, n).into_owned())?;
    qr.p().inv_permute_rows(&mut z);
    let residual = (&a * &z - DVector::from_column_slice(rhs))
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    Some(Solution {
        x: z.iter().copied().collect(),
        residual,
    })
}
