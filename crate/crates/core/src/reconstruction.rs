//! Inverting `y(t) = <c(t), x(t)>` for a `p`-periodic `x`.
//!
//! Every unknown `x(tau)` meets the equations `<c(t mod m), x(tau)> = y(t)` for
//! `t = tau (mod p)`; the signal is recoverable iff each of those per-phase
//! row stacks has rank `n`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Entry, Error, Result};
use crate::scalar::Scalar;
use crate::signal::{CompressedStream, MixingSignal, PeriodicVectorSignal};

/// Default cap on the number of `n`-subsets `check_richness` will enumerate.
pub const RICHNESS_BUDGET: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RichnessReport {
    pub rich: bool,
    /// First `n`-subset of period indices whose vectors fail to span.
    pub witness: Option<Vec<usize>>,
    /// Smallest Gramian eigenvalue over all subsets; `None` in exact mode,
    /// where the verdict is an exact rank test.
    pub min_gramian_eigenvalue: Option<f64>,
    pub subsets_checked: u128,
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Next `k`-combination of `0..n` in lexicographic order.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let Some(i) = (0..k).rev().find(|&i| idx[i] < n - k + i) else {
        return false;
    };
    idx[i] += 1;
    for j in i + 1..k {
        idx[j] = idx[j - 1] + 1;
    }
    true
}

pub fn check_richness<T: Scalar>(c: &MixingSignal<T>, n: usize) -> Result<RichnessReport> {
    check_richness_with_budget(c, n, RICHNESS_BUDGET)
}

/// Tests whether any `n` vectors from one period of `c` span `R^n`. One period
/// means `c(0), ..., c(m-1)`; `c(m) = c(0)` adds nothing.
pub fn check_richness_with_budget<T: Scalar>(
    c: &MixingSignal<T>,
    n: usize,
    budget: u128,
) -> Result<RichnessReport> {
    if c.dim() != n {
        return Err(Error::Dimension(format!(
            "mixing signal lives in R^{}, expected R^{n}",
            c.dim()
        )));
    }
    let m = c.period();
    if m < n {
        return Err(Error::Precondition(format!(
            "richness needs m >= n (m = {m}, n = {n})"
        )));
    }
    let needed = binomial(m as u128, n as u128);
    if needed > budget {
        return Err(Error::Budget { needed, cap: budget });
    }
    let float = matches!(T::KIND, crate::scalar::ValueKind::Float);
    let mut idx: Vec<usize> = (0..n).collect();
    let mut witness = None;
    let mut min_eig = f64::INFINITY;
    let mut checked = 0u128;
    loop {
        checked += 1;
        let rows: Vec<Vec<T>> = idx.iter().map(|&k| c.samples()[k].clone()).collect();
        if T::row_space(&rows, n).rank < n && witness.is_none() {
            witness = Some(idx.clone());
        }
        if float {
            let cm = DMatrix::from_fn(n, n, |i, j| rows[j][i].to_f64());
            let gram = &cm * cm.transpose();
            let eig = gram.symmetric_eigenvalues().min();
            min_eig = min_eig.min(eig);
        } else if witness.is_some() {
            break;
        }
        if !next_combination(&mut idx, m) {
            break;
        }
    }
    Ok(RichnessReport {
        rich: witness.is_none(),
        witness,
        min_gramian_eigenvalue: float.then_some(min_eig),
        subsets_checked: checked,
    })
}

/// Equations available for one phase `tau` of `x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhasePlan<T> {
    pub phase: usize,
    /// All `t < horizon` with `t = phase (mod p)`.
    pub times: Vec<usize>,
    /// Row `k` is `c(times[k] mod m)`.
    #[serde(skip)]
    pub rows: Vec<Vec<T>>,
    pub rank: usize,
    pub condition: Option<f64>,
    #[serde(skip)]
    pub determined: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconstructionPlan<T> {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub horizon: usize,
    pub per_phase: Vec<PhasePlan<T>>,
    pub feasible: bool,
    /// `(channel, phase)` unknowns, channel 1-based, that no combination of the
    /// available equations isolates.
    pub uncovered: Vec<Entry>,
}

/// Groups `t < horizon` by phase `t mod p` and ranks each stack. With
/// `horizon >= lcm(m, p)` the verdict is final: later rows repeat.
pub fn plan_reconstruction<T: Scalar>(
    c: &MixingSignal<T>,
    p: usize,
    horizon: usize,
) -> Result<ReconstructionPlan<T>> {
    if p == 0 || horizon == 0 {
        return Err(Error::Precondition("p and horizon must be >= 1".into()));
    }
    let n = c.dim();
    let per_phase: Vec<PhasePlan<T>> = (0..p)
        .map(|phase| {
            let times: Vec<usize> = (phase..horizon).step_by(p).collect();
            let rows: Vec<Vec<T>> = times.iter().map(|&t| c.at(t).to_vec()).collect();
            let space = T::row_space(&rows, n);
            PhasePlan {
                phase,
                times,
                rows,
                rank: space.rank,
                condition: space.condition,
                determined: space.determined,
            }
        })
        .collect();
    let feasible = per_phase.iter().all(|ph| ph.rank == n);
    let mut uncovered: Vec<Entry> = per_phase
        .iter()
        .flat_map(|ph| {
            ph.determined
                .iter()
                .enumerate()
                .filter(|(_, &d)| !d)
                .map(move |(i, _)| (i + 1, ph.phase))
        })
        .collect();
    uncovered.sort_unstable();
    Ok(ReconstructionPlan {
        n,
        m: c.period(),
        p,
        horizon,
        per_phase,
        feasible,
        uncovered,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction<T> {
    pub signal: PeriodicVectorSignal<T>,
    /// Largest equation residual over all phases (0 for exact rationals).
    pub max_residual: f64,
}

/// Recovers the unique `p`-periodic `x` with `compress(x, c)` equal to `y` on
/// the captured window.
pub fn reconstruct<T: Scalar>(
    y: &CompressedStream<T>,
    c: &MixingSignal<T>,
    p: usize,
) -> Result<Reconstruction<T>> {
    if y.is_empty() {
        return Err(Error::InsufficientHorizon {
            required: 1,
            available: 0,
        });
    }
    let plan = plan_reconstruction(c, p, y.len())?;
    if !plan.feasible {
        return Err(Error::NotLossless {
            uncovered: plan.uncovered,
        });
    }
    let n = plan.n;
    let scale = y.values.iter().map(|v| v.to_f64().abs()).fold(1.0, f64::max);
    let mut samples = Vec::with_capacity(p);
    let mut max_residual = 0.0f64;
    for ph in &plan.per_phase {
        let rhs: Vec<T> = ph.times.iter().map(|&t| y.values[t].clone()).collect();
        let sol = T::solve(&ph.rows, &rhs, n).ok_or_else(|| Error::NotLossless {
            uncovered: (1..=n).map(|i| (i, ph.phase)).collect(),
        })?;
        max_residual = max_residual.max(sol.residual);
        samples.push(sol.x);
    }
    let consistent = match T::KIND {
        crate::scalar::ValueKind::ExactRational => max_residual == 0.0,
        crate::scalar::ValueKind::Float => max_residual <= 1e-9 * scale,
    };
    if !consistent {
        return Err(Error::InconsistentStream {
            residual: max_residual,
        });
    }
    Ok(Reconstruction {
        signal: PeriodicVectorSignal::new(samples)?,
        max_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::number_theory::{gcd, general_losslessness, lcm};
    use crate::scalar::ratio;
    use crate::signal::{compress, switch_mixer};
    use num::BigRational;

    fn q(v: &[i64]) -> Vec<BigRational> {
        v.iter().map(|&x| ratio(x, 1)).collect()
    }

    fn tagged(n: usize, p: usize) -> PeriodicVectorSignal<BigRational> {
        PeriodicVectorSignal::new(
            (0..p)
                .map(|k| (1..=n).map(|i| ratio((100 * i + k) as i64, 7)).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn switch_richness() {
        // the only 3-subset of the switch period is the full basis
        assert!(
            check_richness(&switch_mixer::<BigRational>(3).unwrap(), 3)
                .unwrap()
                .rich
        );
        assert!(
            check_richness(&switch_mixer::<BigRational>(2).unwrap(), 2)
                .unwrap()
                .rich
        );
    }

    #[test]
    fn repeated_vector_breaks_richness() {
        let c = MixingSignal::new(vec![q(&[1, 2]), q(&[3, 1]), q(&[1, 2])]).unwrap();
        let r = check_richness(&c, 2).unwrap();
        assert!(!r.rich);
        assert_eq!(r.witness, Some(vec![0, 2]));
    }

    #[test]
    fn rotation_sampled_mixer_is_rich() {
        let angles = [0.3f64, 1.1, 2.0, 2.9, 4.4];
        let c = MixingSignal::new(angles.iter().map(|a| vec![a.cos(), a.sin()]).collect()).unwrap();
        let r = check_richness(&c, 2).unwrap();
        assert!(r.rich);
        assert_eq!(r.subsets_checked, 10);
        assert!(r.min_gramian_eigenvalue.unwrap() > 1e-3);
    }

    #[test]
    fn richness_errors() {
        let c = switch_mixer::<f64>(3).unwrap();
        assert!(matches!(check_richness(&c, 4), Err(Error::Dimension(_))));
        let short = MixingSignal::new(vec![vec![1.0, 0.0]]).unwrap();
        assert!(matches!(check_richness(&short, 2), Err(Error::Precondition(_))));
        let wide = MixingSignal::new(vec![vec![1.0; 4]; 30]).unwrap();
        assert!(matches!(
            check_richness_with_budget(&wide, 4, 1000),
            Err(Error::Budget {
                needed: 27405,
                cap: 1000
            })
        ));
    }

    #[test]
    fn switch_plan_coprime() {
        let plan = plan_reconstruction(&switch_mixer::<BigRational>(3).unwrap(), 5, 15).unwrap();
        assert!(plan.feasible);
        for ph in &plan.per_phase {
            assert_eq!(ph.times.len(), 3);
            assert!(ph.times.iter().all(|t| t % 5 == ph.phase));
        }
        assert!(plan.uncovered.is_empty());
    }

    #[test]
    fn switch_plan_resonant() {
        let plan = plan_reconstruction(&switch_mixer::<BigRational>(2).unwrap(), 4, 100).unwrap();
        assert!(!plan.feasible);
        assert_eq!(plan.uncovered, vec![(1, 1), (1, 3), (2, 0), (2, 2)]);
    }

    #[test]
    fn rich_mixer_gcd_boundary() {
        let c = MixingSignal::new(vec![q(&[1, 0]), q(&[0, 1]), q(&[1, 1]), q(&[1, -1])]).unwrap();
        assert!(check_richness(&c, 2).unwrap().rich);
        assert!(plan_reconstruction(&c, 6, 12).unwrap().feasible);
        assert!(!plan_reconstruction(&c, 4, 12).unwrap().feasible);
    }

    #[test]
    fn example_round_trip() {
        let x = tagged(3, 5);
        let c = switch_mixer(3).unwrap();
        let y = compress(&x, &c, 15).unwrap();
        let rec = reconstruct(&y, &c, 5).unwrap();
        assert_eq!(rec.signal, x);
        assert_eq!(rec.max_residual, 0.0);
        // x_3(0) is only seen at t = 5 within one phase-0 cycle
        let plan = plan_reconstruction(&c, 5, 15).unwrap();
        let t = plan.per_phase[0]
            .times
            .iter()
            .copied()
            .find(|&t| c.at(t)[2] == ratio(1, 1))
            .unwrap();
        assert_eq!(t, 5);
        assert_eq!(y.values[5], x.channel(3, 0).clone());
    }

    #[test]
    fn zero_stream_gives_zero_signal() {
        let c = switch_mixer::<BigRational>(4).unwrap();
        let y = CompressedStream::new(vec![ratio(0, 1); 28], 4, 4, None);
        let rec = reconstruct(&y, &c, 7).unwrap();
        assert_eq!(rec.signal, PeriodicVectorSignal::zeros(4, 7).unwrap());
    }

    #[test]
    fn not_lossless_and_inconsistent() {
        let c = switch_mixer::<BigRational>(2).unwrap();
        let y = compress(&tagged(2, 4), &c, 8).unwrap();
        match reconstruct(&y, &c, 4) {
            Err(Error::NotLossless { uncovered }) => assert_eq!(uncovered.len(), 4),
            other => panic!("expected NotLossless, got {other:?}"),
        }
        // a stream that is not 3-periodic under the switch
        let c = switch_mixer::<BigRational>(2).unwrap();
        let mut y = compress(&tagged(2, 3), &c, 12).unwrap();
        y.values[7] = y.values[7].clone() + ratio(1, 1);
        assert!(matches!(
            reconstruct(&y, &c, 3),
            Err(Error::InconsistentStream { .. })
        ));

        let cf = switch_mixer::<f64>(2).unwrap();
        let mut yf = CompressedStream::new(vec![1.0; 12], 2, 2, None);
        yf.values[5] = 2.0;
        assert!(matches!(
            reconstruct(&yf, &cf, 3),
            Err(Error::InconsistentStream { .. })
        ));
    }

    #[test]
    fn float_path_round_trip() {
        let c = MixingSignal::new(vec![
            vec![1.0, 0.5, -0.2],
            vec![0.1, 1.0, 0.7],
            vec![-0.4, 0.3, 1.0],
            vec![0.9, -0.8, 0.2],
        ])
        .unwrap();
        let x = PeriodicVectorSignal::new(vec![
            vec![0.25, -1.5, 2.0],
            vec![3.0, 0.0, -0.75],
            vec![1.0, 1.0, 1.0],
        ])
        .unwrap();
        let y = compress(&x, &c, 24).unwrap();
        let rec = reconstruct(&y, &c, 3).unwrap();
        for (a, b) in rec
            .signal
            .samples()
            .iter()
            .flatten()
            .zip(x.samples().iter().flatten())
        {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(rec.max_residual <= 1e-12);
    }

    #[test]
    fn verdict_stable_beyond_lcm() {
        let c = MixingSignal::new(vec![
            q(&[1, 0]),
            q(&[0, 1]),
            q(&[1, 1]),
            q(&[2, 1]),
            q(&[1, 3]),
            q(&[5, 1]),
        ])
        .unwrap();
        for p in 1..=12usize {
            let l = lcm(6, p as u64) as usize;
            let base = plan_reconstruction(&c, p, l).unwrap().feasible;
            assert_eq!(base, plan_reconstruction(&c, p, 3 * l + 1).unwrap().feasible);
            assert_eq!(base, general_losslessness(2, 6, p as u64).unwrap(), "p={p}");
            assert_eq!(base, 6 >= 2 * gcd(6, p as u64));
        }
    }
}
