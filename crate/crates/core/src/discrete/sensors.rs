//! Round-robin sensor networks: `N` independent subsystems
//! `x_i(t+1) = A_i x_i(t)`, of which sensor `i` (0-based) reports
//! `C_i x_i(t)` at the times `t = i (mod N)`.
//!
//! With planar rotations and `C_i = e_1^T` the stacked state lives in
//! `R^{2N}` and the schedule is the odd-index switch.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::signal::CompressedStream;

use super::rotation::Angle;

/// Singular values below `1e-9 sigma_max` count as zero.
const RANK_TOLERANCE: f64 = 1e-9;

fn planar_rotation(alpha: &Angle, t: i64) -> DMatrix<f64> {
    let (c, s) = alpha.cos_sin(t);
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorBlock {
    pub a: DMatrix<f64>,
    pub c: DVector<f64>,
    /// Set when `a` is the planar rotation by this angle and `c = e_1`.
    pub angle: Option<Angle>,
}

impl SensorBlock {
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// `A^t`, computed from the angle when there is one.
    pub fn power(&self, t: usize) -> DMatrix<f64> {
        match &self.angle {
            Some(alpha) => planar_rotation(alpha, t as i64),
            None => {
                let mut p = DMatrix::identity(self.dim(), self.dim());
                for _ in 0..t {
                    p = &self.a * p;
                }
                p
            }
        }
    }

    /// `C A^t`.
    pub fn output_row(&self, t: usize) -> DVector<f64> {
        self.power(t).transpose() * &self.c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorNetworkSpec {
    pub sensors: Vec<SensorBlock>,
}

impl SensorNetworkSpec {
    pub fn rotations(angles: &[Angle]) -> Result<Self> {
        if angles.is_empty() {
            return Err(Error::Precondition("a network needs at least one sensor".into()));
        }
        let sensors = angles
            .iter()
            .map(|alpha| {
                if !alpha.in_open_turn() {
                    return Err(Error::Precondition(format!(
                        "sensor angle {alpha} must lie in (0, 2pi)"
                    )));
                }
                Ok(SensorBlock {
                    a: planar_rotation(alpha, 1),
                    c: DVector::from_vec(vec![1.0, 0.0]),
                    angle: Some(*alpha),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { sensors })
    }

    pub fn general(blocks: Vec<(DMatrix<f64>, DVector<f64>)>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::Precondition("a network needs at least one sensor".into()));
        }
        let sensors = blocks
            .into_iter()
            .enumerate()
            .map(|(i, (a, c))| {
                if !a.is_square() || a.nrows() == 0 || c.len() != a.nrows() {
                    return Err(Error::Dimension(format!(
                        "sensor {}: A is {}x{}, C has length {}",
                        i + 1,
                        a.nrows(),
                        a.ncols(),
                        c.len()
                    )));
                }
                Ok(SensorBlock { a, c, angle: None })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { sensors })
    }

    /// Number of sensors `N`.
    pub fn count(&self) -> usize {
        self.sensors.len()
    }

    pub fn total_dim(&self) -> usize {
        self.sensors.iter().map(SensorBlock::dim).sum()
    }

    fn offsets(&self) -> Vec<usize> {
        self.sensors
            .iter()
            .scan(0, |acc, s| {
                let o = *acc;
                *acc += s.dim();
                Some(o)
            })
            .collect()
    }

    /// Output `C_i x_i(t)` of every sensor, whether scheduled or not.
    pub fn outputs_at(&self, x0: &[DVector<f64>], t: usize) -> Vec<f64> {
        self.sensors
            .iter()
            .zip(x0)
            .map(|(s, x)| s.output_row(t).dot(x))
            .collect()
    }

    /// Stacked state `(x_1(t), ..., x_N(t))`.
    pub fn stacked_state(&self, x0: &[DVector<f64>], t: usize) -> Vec<f64> {
        self.sensors
            .iter()
            .zip(x0)
            .flat_map(|(s, x)| (s.power(t) * x).iter().copied().collect::<Vec<_>>())
            .collect()
    }
}

/// Sensor `i` is recoverable iff `N alpha_i` is not a multiple of `2 pi`.
/// Only defined for networks of planar rotations.
pub fn roundrobin_losslessness(spec: &SensorNetworkSpec) -> Result<Vec<bool>> {
    let n = spec.count() as i64;
    spec.sensors
        .iter()
        .map(|s| match &s.angle {
            Some(alpha) => Ok(!alpha.is_full_turns(n)),
            None => Err(Error::UnsupportedSpec(
                "sensor is not a planar rotation; use the observability criterion".into(),
            )),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Observability {
    pub observable: bool,
    pub rank: usize,
}

fn numerical_rank(m: &DMatrix<f64>) -> usize {
    let sv = m.singular_values();
    let max = sv.max();
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOLERANCE * max).count()
}

/// Rank of the stride-`N` stack `C, C A^N, ..., C A^{(n-1)N}`.
pub fn observability_criterion(a: &DMatrix<f64>, c: &DVector<f64>, stride: usize) -> Result<Observability> {
    let n = a.nrows();
    if !a.is_square() || n == 0 || c.len() != n {
        return Err(Error::Dimension(format!(
            "A is {}x{}, C has length {}",
            a.nrows(),
            a.ncols(),
            c.len()
        )));
    }
    if stride == 0 {
        return Err(Error::Precondition("stride must be at least 1".into()));
    }
    let step = a.pow(stride as u32);
    Ok(observability_of_step(&step, c))
}

fn observability_of_step(step: &DMatrix<f64>, c: &DVector<f64>) -> Observability {
    let n = step.nrows();
    let mut stack = DMatrix::zeros(n, n);
    let mut row = c.transpose();
    for k in 0..n {
        stack.set_row(k, &row);
        row *= step;
    }
    let rank = numerical_rank(&stack);
    Observability {
        observable: rank == n,
        rank,
    }
}

/// Observability of every sensor at stride `N`, with exact angle arithmetic
/// for rotation sensors.
pub fn network_observability(spec: &SensorNetworkSpec) -> Vec<Observability> {
    let stride = spec.count();
    spec.sensors
        .iter()
        .map(|s| observability_of_step(&s.power(stride), &s.c))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensorEstimate {
    /// 1-based sensor index.
    pub sensor: usize,
    #[serde(skip)]
    pub x0: Option<DVector<f64>>,
    pub rank: usize,
    pub times: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensorNetworkReconstruction {
    pub sensors: Vec<SensorEstimate>,
    pub residual: f64,
}

impl SensorNetworkReconstruction {
    pub fn recoverable(&self) -> Vec<usize> {
        self.sensors
            .iter()
            .filter(|s| s.x0.is_some())
            .map(|s| s.sensor)
            .collect()
    }

    pub fn unrecoverable(&self) -> Vec<usize> {
        self.sensors
            .iter()
            .filter(|s| s.x0.is_none())
            .map(|s| s.sensor)
            .collect()
    }
}

/// Per-sensor recovery; sensors whose harvested rows never span are left
/// without an estimate instead of failing the whole network.
pub fn reconstruct_sensor_network_partial(
    y: &CompressedStream<f64>,
    spec: &SensorNetworkSpec,
) -> Result<SensorNetworkReconstruction> {
    if y.n != spec.total_dim() {
        return Err(Error::Dimension(format!(
            "stream carries {} channels, network state has {}",
            y.n,
            spec.total_dim()
        )));
    }
    let stride = spec.count();
    let observability = network_observability(spec);
    let mut estimates = Vec::with_capacity(stride);
    for (i, block) in spec.sensors.iter().enumerate() {
        let ni = block.dim();
        let times: Vec<usize> = (i..y.len()).step_by(stride).collect();
        let rows: Vec<Vec<f64>> = times
            .iter()
            .map(|&t| block.output_row(t).iter().copied().collect())
            .collect();
        let rank = if rows.is_empty() {
            0
        } else {
            numerical_rank(&DMatrix::from_fn(rows.len(), ni, |r, c| rows[r][c]))
        };
        let x0 = if rank == ni {
            let rhs: Vec<f64> = times.iter().map(|&t| y.values[t]).collect();
            crate::linalg::float_solve(&rows, &rhs, ni).map(|s| DVector::from_vec(s.x))
        } else if observability[i].observable {
            // the first n_i scheduled samples would have sufficed
            return Err(Error::InsufficientHorizon {
                required: i + (ni - 1) * stride + 1,
                available: y.len(),
            });
        } else {
            None
        };
        estimates.push(SensorEstimate {
            sensor: i + 1,
            x0,
            rank,
            times,
        });
    }
    let scale = y.values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut residual = 0.0f64;
    for (t, v) in y.values.iter().enumerate() {
        let i = t % stride;
        if let Some(x) = &estimates[i].x0 {
            residual = residual.max((spec.sensors[i].output_row(t).dot(x) - v).abs());
        }
    }
    if residual > 1e-9 * scale {
        return Err(Error::InconsistentStream { residual });
    }
    Ok(SensorNetworkReconstruction {
        sensors: estimates,
        residual,
    })
}

/// All-or-nothing variant: any unrecoverable sensor turns into
/// [`Error::PartialReconstruction`].
pub fn reconstruct_sensor_network(
    y: &CompressedStream<f64>,
    spec: &SensorNetworkSpec,
) -> Result<SensorNetworkReconstruction> {
    let rec = reconstruct_sensor_network_partial(y, spec)?;
    let unrecoverable = rec.unrecoverable();
    if !unrecoverable.is_empty() {
        return Err(Error::PartialReconstruction {
            recoverable: rec.recoverable(),
            unrecoverable,
        });
    }
    Ok(rec)
}

/// `y(t) = y_{(t mod N) + 1}(t)`.
pub fn simulate_sensor_network(
    spec: &SensorNetworkSpec,
    x0: &[DVector<f64>],
    horizon: usize,
) -> Result<CompressedStream<f64>> {
    if x0.len() != spec.count() || spec.sensors.iter().zip(x0).any(|(s, x)| x.len() != s.dim()) {
        return Err(Error::Dimension(
            "initial states do not match the sensor blocks".into(),
        ));
    }
    let n = spec.count();
    let values = (0..horizon)
        .map(|t| spec.sensors[t % n].output_row(t).dot(&x0[t % n]))
        .collect();
    Ok(CompressedStream::new(values, spec.total_dim(), n, None))
}

/// Offset of each sensor's block inside the stacked state.
pub fn block_offsets(spec: &SensorNetworkSpec) -> Vec<usize> {
    spec.offsets()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn x0s(n: usize) -> Vec<DVector<f64>> {
        (0..n)
            .map(|i| DVector::from_vec(vec![1.0 + i as f64, 0.5 - i as f64]))
            .collect()
    }

    #[test]
    fn rotation_network_verdicts() {
        let angles = [
            Angle::turns(1, 5).unwrap(),
            Angle::Radians(1.0),
            Angle::Radians(2.5),
        ];
        let spec = SensorNetworkSpec::rotations(&angles).unwrap();
        assert_eq!(roundrobin_losslessness(&spec).unwrap(), vec![true, true, true]);

        let angles = [
            Angle::turns(1, 3).unwrap(),
            Angle::Radians(1.0),
            Angle::Radians(2.5),
        ];
        let spec = SensorNetworkSpec::rotations(&angles).unwrap();
        assert_eq!(roundrobin_losslessness(&spec).unwrap(), vec![false, true, true]);
        let obs = network_observability(&spec);
        assert_eq!(obs[0].rank, 1);
        assert!(obs[1].observable && obs[2].observable);

        let single = SensorNetworkSpec::rotations(&[Angle::Radians(0.3)]).unwrap();
        assert_eq!(roundrobin_losslessness(&single).unwrap(), vec![true]);
    }

    #[test]
    fn observability_examples() {
        let a = planar_rotation(&Angle::Radians(0.7), 1);
        let e1 = DVector::from_vec(vec![1.0, 0.0]);
        assert_eq!(observability_criterion(&a, &e1, 3).unwrap().rank, 2);
        let id = DMatrix::identity(3, 3);
        let c = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        assert_eq!(observability_criterion(&id, &c, 2).unwrap().rank, 1);
        let float_third = planar_rotation(&Angle::Radians(TAU / 3.0), 1);
        let o = observability_criterion(&float_third, &e1, 3).unwrap();
        assert!(!o.observable && o.rank == 1);
    }

    #[test]
    fn general_blocks_are_unsupported_for_the_angle_test() {
        let spec =
            SensorNetworkSpec::general(vec![(DMatrix::identity(2, 2), DVector::from_vec(vec![1.0, 0.0]))])
                .unwrap();
        assert!(matches!(
            roundrobin_losslessness(&spec),
            Err(Error::UnsupportedSpec(_))
        ));
        assert!(SensorNetworkSpec::general(vec![(DMatrix::identity(2, 2), DVector::zeros(3))]).is_err());
    }

    #[test]
    fn two_sensor_round_trip() {
        let spec = SensorNetworkSpec::rotations(&[Angle::turns(1, 5).unwrap(), Angle::turns(1, 7).unwrap()])
            .unwrap();
        let x0 = x0s(2);
        let y = simulate_sensor_network(&spec, &x0, 12).unwrap();
        let rec = reconstruct_sensor_network(&y, &spec).unwrap();
        for (est, truth) in rec.sensors.iter().zip(&x0) {
            assert!((est.x0.as_ref().unwrap() - truth).norm() < 1e-12);
        }
        assert!(rec.residual <= 1e-9);
    }

    #[test]
    fn resonant_sensor_is_reported() {
        let spec = SensorNetworkSpec::rotations(&[
            Angle::turns(1, 3).unwrap(),
            Angle::Radians(1.0),
            Angle::Radians(2.5),
        ])
        .unwrap();
        let y = simulate_sensor_network(&spec, &x0s(3), 30).unwrap();
        assert_eq!(
            reconstruct_sensor_network(&y, &spec),
            Err(Error::PartialReconstruction {
                recoverable: vec![2, 3],
                unrecoverable: vec![1],
            })
        );
        let partial = reconstruct_sensor_network_partial(&y, &spec).unwrap();
        assert_eq!(partial.sensors[0].rank, 1);
    }

    #[test]
    fn short_stream_for_observable_sensor() {
        let spec = SensorNetworkSpec::rotations(&[Angle::Radians(1.0), Angle::Radians(2.0)]).unwrap();
        let y = simulate_sensor_network(&spec, &x0s(2), 3).unwrap();
        assert_eq!(
            reconstruct_sensor_network(&y, &spec),
            Err(Error::InsufficientHorizon {
                required: 4,
                available: 3
            })
        );
    }
}
