//! Channels shuffled by a fixed permutation: `x_i(t+1) = x_{sigma(i)}(t)`.
//!
//! Under the switch mixer `y(t) = x_{sigma^t(j)}(0)` with `j = (t mod n) + 1`,
//! so every sample exposes one coordinate of the initial state.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::number_theory::lcm;
use crate::scalar::Scalar;
use crate::signal::CompressedStream;

/// A bijection of `{1..n}`, stored 0-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermutationSpec {
    images: Vec<usize>,
    order: u64,
}

impl PermutationSpec {
    /// `images[i - 1] = sigma(i)`, 1-based values.
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        if n == 0 {
            return Err(Error::Precondition("permutation of an empty set".into()));
        }
        let mut seen = vec![false; n];
        for &v in &images {
            if v == 0 || v > n || seen[v - 1] {
                return Err(Error::Precondition(format!(
                    "{images:?} is not a bijection of 1..={n}"
                )));
            }
            seen[v - 1] = true;
        }
        let mut spec = Self {
            images: images.into_iter().map(|v| v - 1).collect(),
            order: 1,
        };
        spec.order = spec.cycle_lengths().iter().fold(1, |acc, &l| lcm(acc, l as u64));
        Ok(spec)
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new((1..=n).collect())
    }

    /// Cycle notation such as `"(4 2 3 1)(5)"`, where `(a b c)` sends
    /// `a -> b -> c -> a`. Points not mentioned are fixed; `n` defaults to the
    /// largest point mentioned.
    pub fn parse_cycles(text: &str, n: Option<usize>) -> Result<Self> {
        let mut cycles: Vec<Vec<usize>> = Vec::new();
        let mut rest = text.trim();
        while !rest.is_empty() {
            let Some(body) = rest.strip_prefix('(') else {
                return Err(Error::Parse(format!("expected '(' in cycle notation {text:?}")));
            };
            let Some(close) = body.find(')') else {
                return Err(Error::Parse(format!("unclosed cycle in {text:?}")));
            };
            let cycle = body[..close]
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<usize>()
                        .map_err(|_| Error::Parse(format!("bad point {s:?} in {text:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            cycles.push(cycle);
            rest = body[close + 1..].trim_start();
        }
        let largest = cycles.iter().flatten().copied().max().unwrap_or(0);
        let n = n.unwrap_or(largest);
        if largest > n || cycles.iter().flatten().any(|&v| v == 0) {
            return Err(Error::Parse(format!("points of {text:?} must lie in 1..={n}")));
        }
        let mut images: Vec<usize> = (1..=n).collect();
        let mut touched = vec![false; n + 1];
        for cycle in &cycles {
            for (k, &a) in cycle.iter().enumerate() {
                if touched[a] {
                    return Err(Error::Parse(format!("point {a} repeated in {text:?}")));
                }
                touched[a] = true;
                images[a - 1] = cycle[(k + 1) % cycle.len()];
            }
        }
        Self::new(images)
    }

    pub fn n(&self) -> usize {
        self.images.len()
    }

    /// `sigma(i)`, 1-based.
    pub fn apply(&self, i: usize) -> usize {
        self.images[i - 1] + 1
    }

    /// `sigma^k(i)`, 1-based; `k` is reduced by the order first.
    pub fn apply_power(&self, i: usize, k: u64) -> usize {
        let mut v = i - 1;
        for _ in 0..k % self.order() {
            v = self.images[v];
        }
        v + 1
    }

    /// Cycles in order of their smallest point, each listed from that point.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut v = start;
            while !seen[v] {
                seen[v] = true;
                cycle.push(v + 1);
                v = self.images[v];
            }
            out.push(cycle);
        }
        out
    }

    pub fn cycle_lengths(&self) -> Vec<usize> {
        self.cycles().iter().map(Vec::len).collect()
    }

    /// `lcm` of the cycle lengths.
    pub fn order(&self) -> u64 {
        self.order
    }

    /// `x(t)` from `x(0)`: component `i` is `x_{sigma^t(i)}(0)`.
    pub fn state_at<T: Clone>(&self, x0: &[T], t: u64) -> Vec<T> {
        (1..=self.n())
            .map(|i| x0[self.apply_power(i, t) - 1].clone())
            .collect()
    }
}

impl fmt::Display for PermutationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for cycle in self.cycles() {
            let body: Vec<String> = cycle.iter().map(usize::to_string).collect();
            write!(f, "({})", body.join(" "))?;
        }
        Ok(())
    }
}

/// Sample `y(t)`, `t = i n + j - 1`, that reads `x_channel(0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub channel: usize,
    pub i: u64,
    pub j: usize,
    pub t: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PermutationVerdict {
    pub surjective: bool,
    /// Earliest witness per channel, indexed by `channel - 1`.
    pub witnesses: Vec<Option<Witness>>,
    /// Channels never read, 1-based.
    pub unseen: Vec<usize>,
    pub order: u64,
}

/// Image of `(i, j) -> sigma^{i n + j - 1}(j)` over `i < order(sigma)`, which
/// covers every sample time modulo `n order(sigma)`.
pub fn permutation_losslessness(spec: &PermutationSpec) -> PermutationVerdict {
    let n = spec.n();
    let order = spec.order();
    let mut witnesses: Vec<Option<Witness>> = vec![None; n];
    let mut remaining = n;
    'scan: for i in 0..order {
        for j in 1..=n {
            let t = i * n as u64 + j as u64 - 1;
            let channel = spec.apply_power(j, t);
            if witnesses[channel - 1].is_none() {
                witnesses[channel - 1] = Some(Witness { channel, i, j, t });
                remaining -= 1;
                if remaining == 0 {
                    break 'scan;
                }
            }
        }
    }
    let unseen: Vec<usize> = (1..=n).filter(|&k| witnesses[k - 1].is_none()).collect();
    PermutationVerdict {
        surjective: unseen.is_empty(),
        witnesses,
        unseen,
        order,
    }
}

/// True when `n` is a multiple of every cycle length, the resonant case in
/// which the samples only ever repeat `j -> sigma^{j-1}(j)`.
pub fn cycle_resonance(spec: &PermutationSpec) -> bool {
    (spec.n() as u64).is_multiple_of(spec.order())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PermutationReconstruction<T> {
    pub x0: Vec<T>,
    pub witnesses: Vec<Witness>,
}

impl<T: Clone> PermutationReconstruction<T> {
    pub fn trajectory(&self, spec: &PermutationSpec, horizon: usize) -> Vec<Vec<T>> {
        (0..horizon as u64).map(|t| spec.state_at(&self.x0, t)).collect()
    }
}

/// Reads each `x_k(0)` off its earliest witness sample, then checks that the
/// propagated trajectory reproduces every sample of `y`.
pub fn reconstruct_permutation<T: Scalar>(
    y: &CompressedStream<T>,
    spec: &PermutationSpec,
) -> Result<PermutationReconstruction<T>> {
    let n = spec.n();
    if y.n != n {
        return Err(Error::Dimension(format!(
            "stream carries {} channels, permutation acts on {n}",
            y.n
        )));
    }
    let verdict = permutation_losslessness(spec);
    if !verdict.surjective {
        // every phase of the unseen channels stays hidden
        let uncovered = verdict
            .unseen
            .iter()
            .flat_map(|&k| (0..verdict.order as usize).map(move |ph| (k, ph)))
            .collect();
        return Err(Error::NotLossless { uncovered });
    }
    let witnesses: Vec<Witness> = verdict.witnesses.into_iter().flatten().collect();
    let last = witnesses.iter().map(|w| w.t).max().unwrap_or(0) as usize;
    if y.len() <= last {
        return Err(Error::InsufficientHorizon {
            required: last + 1,
            available: y.len(),
        });
    }
    let mut x0 = vec![T::zero(); n];
    for w in &witnesses {
        x0[w.channel - 1] = y.values[w.t as usize].clone();
    }
    let scale = y.values.iter().map(|v| v.to_f64().abs()).fold(1.0, f64::max);
    let mut residual = 0.0f64;
    for (t, yt) in y.values.iter().enumerate() {
        let k = spec.apply_power(t % n + 1, t as u64);
        let diff = x0[k - 1].clone() - yt.clone();
        if !diff.is_negligible(scale) {
            residual = residual.max(diff.to_f64().abs());
        }
    }
    if residual > 0.0 {
        return Err(Error::InconsistentStream { residual });
    }
    Ok(PermutationReconstruction { x0, witnesses })
}

/// `y(t) = x_{(t mod n) + 1}(t)` for the permuted trajectory from `x0`.
pub fn simulate_permutation<T: Scalar>(
    spec: &PermutationSpec,
    x0: &[T],
    horizon: usize,
) -> Result<CompressedStream<T>> {
    let n = spec.n();
    if x0.len() != n {
        return Err(Error::Dimension(format!(
            "x0 has length {}, expected {n}",
            x0.len()
        )));
    }
    let values = (0..horizon)
        .map(|t| x0[spec.apply_power(t % n + 1, t as u64) - 1].clone())
        .collect();
    Ok(CompressedStream::new(values, n, n, None))
}
