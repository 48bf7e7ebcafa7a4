//! Periodic signals and the causal inner-product compressor `y(t) = <c(t), x(t)>`.
//!
//! Signals are stored one period long and evaluated by modular indexing.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{Scalar, ValueKind};

fn validate_samples<T>(samples: &[Vec<T>], what: &str) -> Result<usize> {
    let Some(first) = samples.first() else {
        return Err(Error::Dimension(format!("{what} needs at least one sample")));
    };
    let n = first.len();
    if n == 0 {
        return Err(Error::Dimension(format!("{what} has zero-dimensional samples")));
    }
    if let Some(k) = samples.iter().position(|s| s.len() != n) {
        return Err(Error::Dimension(format!(
            "{what} sample {k} has length {}, expected {n}",
            samples[k].len()
        )));
    }
    Ok(n)
}

/// A `p`-periodic sequence of vectors in `R^n`: `x(t + p) = x(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicVectorSignal<T> {
    dim: usize,
    samples: Vec<Vec<T>>,
}

impl<T: Scalar> PeriodicVectorSignal<T> {
    /// One period of samples; sample `k` is `x(k)`.
    pub fn new(samples: Vec<Vec<T>>) -> Result<Self> {
        let dim = validate_samples(&samples, "signal")?;
        Ok(Self { dim, samples })
    }

    pub fn zeros(dim: usize, period: usize) -> Result<Self> {
        Self::new(vec![vec![T::zero(); dim]; period])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn period(&self) -> usize {
        self.samples.len()
    }

    pub fn samples(&self) -> &[Vec<T>] {
        &self.samples
    }

    pub fn value_kind(&self) -> ValueKind {
        T::KIND
    }

    pub fn at(&self, t: usize) -> &[T] {
        &self.samples[t % self.samples.len()]
    }

    /// Channel `i` (1-based) at time `t`.
    pub fn channel(&self, i: usize, t: usize) -> &T {
        &self.at(t)[i - 1]
    }
}

/// An `m`-periodic mixing signal `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingSignal<T> {
    dim: usize,
    samples: Vec<Vec<T>>,
}

impl<T: Scalar> MixingSignal<T> {
    pub fn new(samples: Vec<Vec<T>>) -> Result<Self> {
        let dim = validate_samples(&samples, "mixing signal")?;
        Ok(Self { dim, samples })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn period(&self) -> usize {
        self.samples.len()
    }

    pub fn samples(&self) -> &[Vec<T>] {
        &self.samples
    }

    pub fn at(&self, t: usize) -> &[T] {
        &self.samples[t % self.samples.len()]
    }
}

/// Scalar stream `y` with the metadata of the pair that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompressedStream<T> {
    #[serde(skip)]
    pub values: Vec<T>,
    pub n: usize,
    pub m: usize,
    /// The receiver may not know the signal period.
    pub p_hint: Option<usize>,
}

impl<T: Scalar> CompressedStream<T> {
    pub fn new(values: Vec<T>, n: usize, m: usize, p_hint: Option<usize>) -> Self {
        Self { values, n, m, p_hint }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (u, v)| acc + u.clone() * v.clone())
}

/// `y(t) = <c(t), x(t)>` for `t` in `[0, horizon)`.
pub fn compress<T: Scalar>(
    x: &PeriodicVectorSignal<T>,
    c: &MixingSignal<T>,
    horizon: usize,
) -> Result<CompressedStream<T>> {
    if x.dim() != c.dim() {
        return Err(Error::Dimension(format!(
            "signal has dimension {}, mixing signal {}",
            x.dim(),
            c.dim()
        )));
    }
    if horizon == 0 {
        return Err(Error::Precondition("horizon must be at least 1".into()));
    }
    let values = (0..horizon).map(|t| dot(c.at(t), x.at(t))).collect();
    Ok(CompressedStream::new(
        values,
        x.dim(),
        c.period(),
        Some(x.period()),
    ))
}

fn basis<T: Scalar>(dim: usize, k: usize) -> Vec<T> {
    let mut e = vec![T::zero(); dim];
    e[k] = T::one();
    e
}

/// The `n`-periodic switch `e_1, e_2, ..., e_n, e_1, ...`.
pub fn switch_mixer<T: Scalar>(n: usize) -> Result<MixingSignal<T>> {
    if n == 0 {
        return Err(Error::Dimension("switch needs n >= 1".into()));
    }
    MixingSignal::new((0..n).map(|k| basis(n, k)).collect())
}

/// The `N`-periodic odd-index switch `e_1, e_3, ..., e_{2N-1}` in `R^{2N}`,
/// i.e. round-robin over the first coordinates of `N` planar sensors.
pub fn odd_index_mixer<T: Scalar>(sensors: usize) -> Result<MixingSignal<T>> {
    if sensors == 0 {
        return Err(Error::Dimension("odd-index switch needs N >= 1".into()));
    }
    MixingSignal::new((0..sensors).map(|k| basis(2 * sensors, 2 * k)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;
    use num::BigRational;

    fn tagged_signal(n: usize, p: usize) -> PeriodicVectorSignal<BigRational> {
        // x_i(k) = 10 i + k keeps every entry distinguishable
        PeriodicVectorSignal::new(
            (0..p)
                .map(|k| (1..=n).map(|i| ratio((10 * i + k) as i64, 1)).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn switch_picks_third_channel_at_time_five() {
        let x = tagged_signal(3, 5);
        let y = compress(&x, &switch_mixer(3).unwrap(), 6).unwrap();
        assert_eq!(y.values[5], x.channel(3, 0).clone());
        assert_eq!(y.values[5], ratio(30, 1));
        assert_eq!((y.n, y.m, y.p_hint), (3, 3, Some(5)));
    }

    #[test]
    fn zero_signal_compresses_to_zero() {
        let x = PeriodicVectorSignal::<f64>::zeros(4, 7).unwrap();
        let c = MixingSignal::new(vec![vec![1.5, -2.0, 3.0, 0.25]; 3]).unwrap();
        let y = compress(&x, &c, 30).unwrap();
        assert!(y.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn compress_matches_naive_table() {
        let x = PeriodicVectorSignal::new(vec![
            vec![ratio(1, 2), ratio(-3, 4)],
            vec![ratio(5, 3), ratio(2, 1)],
            vec![ratio(-7, 5), ratio(0, 1)],
            vec![ratio(9, 8), ratio(-1, 6)],
        ])
        .unwrap();
        let y = compress(&x, &switch_mixer(2).unwrap(), 8).unwrap();
        // switch(2): even t reads x_1(t mod 4), odd t reads x_2(t mod 4)
        let expected = [
            ratio(1, 2),
            ratio(2, 1),
            ratio(-7, 5),
            ratio(-1, 6),
            ratio(1, 2),
            ratio(2, 1),
            ratio(-7, 5),
            ratio(-1, 6),
        ];
        assert_eq!(y.values, expected);
    }

    #[test]
    fn switch_shapes() {
        let s = switch_mixer::<f64>(3).unwrap();
        assert_eq!(
            s.samples(),
            &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]
        );
        assert_eq!(switch_mixer::<f64>(1).unwrap().samples(), &[vec![1.0]]);
        assert!(matches!(switch_mixer::<f64>(0), Err(Error::Dimension(_))));
        let x = tagged_signal(5, 7);
        let y = compress(&x, &switch_mixer(5).unwrap(), 15).unwrap();
        for t in 0..15 {
            assert_eq!(y.values[t], x.channel(t % 5 + 1, t).clone());
        }
    }

    #[test]
    fn odd_index_shapes() {
        let s = odd_index_mixer::<f64>(2).unwrap();
        assert_eq!(s.dim(), 4);
        assert_eq!(s.samples(), &[vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 0.0, 1.0, 0.0]]);
        assert_eq!(odd_index_mixer::<f64>(1).unwrap().samples(), &[vec![1.0, 0.0]]);
        assert!(odd_index_mixer::<f64>(0).is_err());
        // N = 3: y(t) is the first coordinate of sensor (t mod 3) + 1
        let x = tagged_signal(6, 4);
        let y = compress(&x, &odd_index_mixer(3).unwrap(), 12).unwrap();
        for t in 0..12 {
            let sensor = t % 3 + 1;
            assert_eq!(y.values[t], x.channel(2 * sensor - 1, t).clone());
        }
    }

    #[test]
    fn dimension_checks() {
        let x = tagged_signal(3, 2);
        assert!(matches!(
            compress(&x, &switch_mixer(2).unwrap(), 4),
            Err(Error::Dimension(_))
        ));
        assert!(PeriodicVectorSignal::<f64>::new(vec![]).is_err());
        assert!(PeriodicVectorSignal::new(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(compress(&x, &switch_mixer(3).unwrap(), 0).is_err());
    }
}
