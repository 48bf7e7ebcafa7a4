//! Linear dynamics `x(t+1) = G x(t)` under the switch mixer, so
//! `y(t) = <row_j(G^t), x(0)>` with `j = (t mod n) + 1`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::signal::CompressedStream;

/// Tolerance for the structural checks behind a [`GroupTag`].
const TAG_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupTag {
    Rotation,
    Orthogonal,
    SpecialLinear,
    Permutation,
    Other,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSystemSpec {
    pub g: DMatrix<f64>,
    pub tag: GroupTag,
    pub search_horizon: usize,
}

/// `|A - B|_F <= 1e-9 max(1, |A|_F)`.
pub fn powers_match(a: &DMatrix<f64>, b: &DMatrix<f64>) -> bool {
    let gap = (a - b).norm();
    gap.is_finite() && gap <= 1e-9 * a.norm().max(1.0)
}

/// Smallest `k <= 1000` with `G^k = I` within the power tolerance.
pub fn estimated_order(g: &DMatrix<f64>) -> Option<usize> {
    let id = DMatrix::identity(g.nrows(), g.ncols());
    let mut power = id.clone();
    (1..=1000).find(|_| {
        power = &power * g;
        powers_match(&power, &id)
    })
}

impl GroupSystemSpec {
    /// Validates `G` against its tag. Without an explicit horizon the power
    /// search runs to `10 n max(1, order)` where `order` is the estimated
    /// order of `G` (1 if none is found).
    pub fn new(g: DMatrix<f64>, tag: GroupTag, search_horizon: Option<usize>) -> Result<Self> {
        let n = g.nrows();
        if n == 0 || !g.is_square() {
            return Err(Error::Dimension(format!(
                "group element must be square and non-empty, got {}x{}",
                g.nrows(),
                g.ncols()
            )));
        }
        let det = g.determinant();
        if det.abs() <= 1e-12 {
            return Err(Error::Precondition(format!("G is singular (det = {det:e})")));
        }
        let id = DMatrix::<f64>::identity(n, n);
        let orthogonal = (g.transpose() * &g - &id).norm() <= TAG_TOLERANCE;
        let unimodular = (det - 1.0).abs() <= TAG_TOLERANCE;
        let permutation = g.iter().all(|v| *v == 0.0 || *v == 1.0)
            && g.row_iter().all(|r| r.sum() == 1.0)
            && g.column_iter().all(|c| c.sum() == 1.0);
        let ok = match tag {
            GroupTag::Rotation => orthogonal && unimodular,
            GroupTag::Orthogonal => orthogonal,
            GroupTag::SpecialLinear => unimodular,
            GroupTag::Permutation => permutation,
            GroupTag::Other => true,
        };
        if !ok {
            return Err(Error::Precondition(format!(
                "G is not a member of the {tag:?} group"
            )));
        }
        if search_horizon == Some(0) {
            return Err(Error::Precondition("search horizon must be positive".into()));
        }
        let search_horizon =
            search_horizon.unwrap_or_else(|| 10 * n * estimated_order(&g).unwrap_or(1).max(1));
        Ok(Self {
            g,
            tag,
            search_horizon,
        })
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    /// `G^0, G^1, ..., G^{count-1}`.
    pub fn powers(&self, count: usize) -> Vec<DMatrix<f64>> {
        let n = self.dim();
        let mut out = Vec::with_capacity(count);
        let mut p = DMatrix::identity(n, n);
        for _ in 0..count {
            out.push(p.clone());
            p = &self.g * p;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupResonance {
    #[serde(skip)]
    pub g_prime: DMatrix<f64>,
    /// `times[j - 1]` is a `t = j - 1 (mod n)` with `G^t = G'`.
    pub times: Vec<usize>,
}

/// Looks for `G'` appearing as a power `G^t` in every residue class of `t`
/// modulo `n`, for `1 <= t <= T_max`. Candidates are the powers with
/// `t = 0 (mod n)` in increasing order; each other class takes its earliest
/// matching power.
pub fn group_resonance_search(spec: &GroupSystemSpec, n: usize) -> Option<GroupResonance> {
    search_up_to(spec, n, spec.search_horizon)
}

fn search_up_to(spec: &GroupSystemSpec, n: usize, t_max: usize) -> Option<GroupResonance> {
    if n == 0 || t_max < n {
        return None;
    }
    let powers = spec.powers(t_max + 1);
    (n..=t_max).step_by(n).find_map(|t0| {
        let candidate = &powers[t0];
        let mut times = vec![t0];
        for r in 1..n {
            let t = (r..=t_max)
                .step_by(n)
                .find(|&t| powers_match(candidate, &powers[t]))?;
            times.push(t);
        }
        Some(GroupResonance {
            g_prime: candidate.clone(),
            times,
        })
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupReconstruction {
    pub x0: DVector<f64>,
    /// Sample times, in the row order of `assembled`.
    pub times: Vec<usize>,
    /// Row `k` is row `(times[k] mod n) + 1` of `G^{times[k]}`.
    pub assembled: DMatrix<f64>,
    pub via_resonance: bool,
    pub residual: f64,
}

impl GroupReconstruction {
    pub fn state_at(&self, spec: &GroupSystemSpec, t: usize) -> DVector<f64> {
        spec.powers(t + 1)[t].clone() * &self.x0
    }
}

/// Greedy row harvest over the given powers, scanning `t = 1, 2, ...` then
/// `t = 0`: keeps row `(t mod n) + 1` of `G^t` whenever it raises the rank.
fn harvest_times(powers: &[DMatrix<f64>], n: usize) -> Vec<usize> {
    let len = powers.len();
    let mut picked: Vec<usize> = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for t in (1..len).chain((len > 0).then_some(0)) {
        rows.push(powers[t].row(t % n).iter().copied().collect());
        let m = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
        if linalg::float_rank(&m) == rows.len() {
            picked.push(t);
            if picked.len() == n {
                break;
            }
        } else {
            rows.pop();
        }
    }
    picked
}

/// Rank reached by the rows `row_{(t mod n)+1}(G^t)`, `t < horizon`, and the
/// times that reach it.
pub fn harvestable_rank(spec: &GroupSystemSpec, horizon: usize) -> (usize, Vec<usize>) {
    let times = harvest_times(&spec.powers(horizon), spec.dim());
    (times.len(), times)
}

/// Harvests rows of the powers of `G` until they span `R^n`, then solves.
/// A resonance `G'` inside the window is used as-is, so the assembled matrix
/// is `G'`; otherwise rows are taken greedily from `t = 1` on, `t = 0` last.
pub fn reconstruct_group(
    y: &CompressedStream<f64>,
    spec: &GroupSystemSpec,
    n: usize,
) -> Result<GroupReconstruction> {
    if n != spec.dim() || y.n != n {
        return Err(Error::Dimension(format!(
            "G is {}x{}, stream has {} channels, n = {n}",
            spec.dim(),
            spec.dim(),
            y.n
        )));
    }
    let len = y.len();
    if len == 0 {
        return Err(Error::InsufficientHorizon {
            required: n,
            available: 0,
        });
    }
    let powers = spec.powers(len);
    let row = |t: usize| -> Vec<f64> { powers[t].row(t % n).iter().copied().collect() };

    let resonance = search_up_to(spec, n, spec.search_horizon.min(len - 1));
    let (times, via_resonance) = match resonance {
        Some(r) => (r.times, true),
        None => {
            let picked = harvest_times(&powers, n);
            if picked.len() < n {
                return Err(Error::InsufficientHorizon {
                    required: len + 1,
                    available: len,
                });
            }
            (picked, false)
        }
    };
    let rows: Vec<Vec<f64>> = times.iter().map(|&t| row(t)).collect();
    let rhs: Vec<f64> = times.iter().map(|&t| y.values[t]).collect();
    let sol = linalg::float_solve(&rows, &rhs, n)
        .ok_or_else(|| Error::Numerical("harvested rows lost rank during the solve".into()))?;
    let x0 = DVector::from_vec(sol.x);
    let mut residual = 0.0f64;
    for t in 0..len {
        let r = DVector::from_vec(row(t));
        let dev = (r.dot(&x0) - y.values[t]).abs();
        let scale = (r.norm() * x0.norm()).max(y.values[t].abs()).max(1.0);
        if dev > 1e-9 * scale {
            return Err(Error::InconsistentStream { residual: dev });
        }
        residual = residual.max(dev);
    }
    Ok(GroupReconstruction {
        x0,
        assembled: DMatrix::from_fn(n, n, |i, j| rows[i][j]),
        times,
        via_resonance,
        residual,
    })
}

pub fn simulate_group(
    spec: &GroupSystemSpec,
    x0: &DVector<f64>,
    horizon: usize,
) -> Result<CompressedStream<f64>> {
    let n = spec.dim();
    if x0.len() != n {
        return Err(Error::Dimension(format!(
            "x0 has length {}, expected {n}",
            x0.len()
        )));
    }
    let mut x = x0.clone();
    let mut values = Vec::with_capacity(horizon);
    for t in 0..horizon {
        values.push(x[t % n]);
        x = &spec.g * x;
    }
    Ok(CompressedStream::new(values, n, n, None))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sl3_g() -> DMatrix<f64> {
        DMatrix::from_row_slice(3, 3, &[-1.0, 1.0, 1.0, 1.0, 1.0, -1.0, -1.5, 1.5, 1.0])
    }

    fn sl3_g_prime() -> DMatrix<f64> {
        DMatrix::from_row_slice(3, 3, &[2.5, 0.5, -2.0, 0.5, 0.5, 0.0, 3.0, 0.0, -2.0])
    }

    #[test]
    fn sl3_group_resonance() {
        let g = sl3_g();
        assert!((g.determinant() - 1.0).abs() < 1e-12);
        assert_eq!(estimated_order(&g), Some(4));
        let spec = GroupSystemSpec::new(g, GroupTag::SpecialLinear, None).unwrap();
        assert_eq!(spec.search_horizon, 120);
        let r = group_resonance_search(&spec, 3).unwrap();
        assert_eq!(r.times, vec![3, 7, 11]);
        assert!((r.g_prime - sl3_g_prime()).norm() < 1e-12);
    }

    #[test]
    fn sl3_group_reconstruction() {
        let spec = GroupSystemSpec::new(sl3_g(), GroupTag::SpecialLinear, None).unwrap();
        let x0 = DVector::from_vec(vec![0.25, -2.0, 1.5]);
        let y = simulate_group(&spec, &x0, 12).unwrap();
        let rec = reconstruct_group(&y, &spec, 3).unwrap();
        assert!(rec.via_resonance);
        assert_eq!(rec.times, vec![3, 7, 11]);
        assert!((&rec.assembled - sl3_g_prime()).norm() < 1e-12);
        assert!((&rec.x0 - &x0).norm() < 1e-12);

        // without t = 11 the greedy harvest still spans
        let short = CompressedStream::new(y.values[..8].to_vec(), 3, 3, None);
        let rec = reconstruct_group(&short, &spec, 3).unwrap();
        assert!(!rec.via_resonance);
        assert!((rec.x0 - x0).norm() < 1e-12);
    }

    #[test]
    fn identity_group() {
        let spec = GroupSystemSpec::new(DMatrix::identity(4, 4), GroupTag::Orthogonal, None).unwrap();
        let r = group_resonance_search(&spec, 4).unwrap();
        assert_eq!(r.times, vec![4, 1, 2, 3]);
        let x0 = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        let rec = reconstruct_group(&simulate_group(&spec, &x0, 5).unwrap(), &spec, 4).unwrap();
        assert_eq!(rec.assembled, DMatrix::identity(4, 4));
        assert_eq!(rec.x0, x0);
    }

    #[test]
    fn spec_validation() {
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(GroupSystemSpec::new(singular, GroupTag::Other, None).is_err());
        let scale = DMatrix::from_diagonal_element(2, 2, 2.0);
        assert!(GroupSystemSpec::new(scale.clone(), GroupTag::SpecialLinear, None).is_err());
        assert!(GroupSystemSpec::new(scale.clone(), GroupTag::Orthogonal, None).is_err());
        let spec = GroupSystemSpec::new(scale, GroupTag::Other, None).unwrap();
        assert_eq!(spec.search_horizon, 20);
        assert!(group_resonance_search(&spec, 2).is_none());
        let swap = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(GroupSystemSpec::new(swap, GroupTag::Permutation, None).is_ok());
    }

    #[test]
    fn unobservable_group_reports_horizon() {
        // swap under the 2-switch reads x_1 at even and odd times alike
        let swap = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let spec = GroupSystemSpec::new(swap, GroupTag::Permutation, None).unwrap();
        let y = simulate_group(&spec, &DVector::from_vec(vec![1.0, 2.0]), 10).unwrap();
        assert!(matches!(
            reconstruct_group(&y, &spec, 2),
            Err(Error::InsufficientHorizon {
                required: 11,
                available: 10
            })
        ));
    }
}
