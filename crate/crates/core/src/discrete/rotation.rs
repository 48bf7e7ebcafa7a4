//! A planar state rotated counter-clockwise by `alpha` each step, observed
//! through the 2-channel switch: `y(t) = x_1(t)` for even `t`, `x_2(t)` for odd.

use std::f64::consts::{PI, TAU};
use std::fmt;

use num::rational::Ratio;
use num::{Integer, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::CompressedStream;

/// Tolerance for deciding that a float angle is a multiple of a full turn.
pub const ANGLE_TOLERANCE: f64 = 1e-9;

/// An angle held either exactly, as a fraction of a full turn, or as radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AngleRepr", into = "String")]
pub enum Angle {
    Turns(Ratio<i64>),
    Radians(f64),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum AngleRepr {
    Text(String),
    Number(f64),
}

impl TryFrom<AngleRepr> for Angle {
    type Error = Error;

    fn try_from(r: AngleRepr) -> Result<Self> {
        match r {
            AngleRepr::Text(s) => Angle::parse(&s),
            AngleRepr::Number(v) => Ok(Angle::Radians(v)),
        }
    }
}

impl From<Angle> for String {
    fn from(a: Angle) -> String {
        a.to_string()
    }
}

impl Angle {
    /// `num / den` of a full turn, i.e. `2 pi num / den` radians.
    pub fn turns(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::Precondition("zero denominator in angle".into()));
        }
        Ok(Angle::Turns(Ratio::new(num, den)))
    }

    /// Accepts `2pi/3`, `2*pi/3`, `pi`, `-pi/2`, `2π/3` (exact), or plain
    /// radians such as `1.25`.
    pub fn parse(text: &str) -> Result<Self> {
        let s: String = text
            .trim()
            .to_lowercase()
            .replace('π', "pi")
            .chars()
            .filter(|c| !c.is_whitespace() && *c != '*')
            .collect();
        let bad = || Error::Parse(format!("cannot read angle {text:?}"));
        let Some((coef, rest)) = s.split_once("pi") else {
            return s.parse::<f64>().map(Angle::Radians).map_err(|_| bad());
        };
        let den: i64 = match rest {
            "" => 1,
            r => r
                .strip_prefix('/')
                .and_then(|d| d.parse().ok())
                .filter(|&d: &i64| d != 0)
                .ok_or_else(bad)?,
        };
        let coef = match coef {
            "" | "+" => "1",
            "-" => "-1",
            c => c,
        };
        if let Ok(k) = coef.parse::<i64>() {
            Angle::turns(k, 2 * den)
        } else {
            let k: f64 = coef.parse().map_err(|_| bad())?;
            Ok(Angle::Radians(k * PI / den as f64))
        }
    }

    pub fn radians(&self) -> f64 {
        match self {
            Angle::Turns(r) => TAU * *r.numer() as f64 / *r.denom() as f64,
            Angle::Radians(a) => *a,
        }
    }

    /// `k alpha` reduced into `[0, 2 pi)`; exact reduction for turn fractions.
    pub fn times(&self, k: i64) -> f64 {
        match self {
            Angle::Turns(r) => {
                let den = *r.denom() as i128;
                let rem = (k as i128 * *r.numer() as i128).mod_floor(&den);
                TAU * rem as f64 / den as f64
            }
            Angle::Radians(a) => (k as f64 * a).rem_euclid(TAU),
        }
    }

    /// `k alpha = 0 (mod 2 pi)`: exact for turn fractions, within
    /// [`ANGLE_TOLERANCE`] otherwise.
    pub fn is_full_turns(&self, k: i64) -> bool {
        match self {
            Angle::Turns(r) => (k as i128 * *r.numer() as i128)
                .mod_floor(&(*r.denom() as i128))
                .is_zero(),
            Angle::Radians(a) => {
                let v = (k as f64 * a).rem_euclid(TAU);
                v.min(TAU - v) <= ANGLE_TOLERANCE
            }
        }
    }

    /// `0 < alpha < 2 pi`.
    pub fn in_open_turn(&self) -> bool {
        match self {
            Angle::Turns(r) => r.is_positive() && *r.numer() < *r.denom(),
            Angle::Radians(a) => *a > 0.0 && *a < TAU,
        }
    }

    /// `(cos t alpha, sin t alpha)`.
    pub fn cos_sin(&self, t: i64) -> (f64, f64) {
        let (s, c) = self.times(t).sin_cos();
        (c, s)
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Angle::Turns(r) => {
                // r turns = 2 r pi
                let half = *r * 2;
                let (num, den) = (*half.numer(), *half.denom());
                let coef = match num {
                    1 => String::new(),
                    -1 => "-".into(),
                    k => k.to_string(),
                };
                if den == 1 {
                    write!(f, "{coef}pi")
                } else {
                    write!(f, "{coef}pi/{den}")
                }
            }
            Angle::Radians(a) => write!(f, "{a:?}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationSpec {
    pub alpha: Angle,
}

impl RotationSpec {
    pub fn new(alpha: Angle) -> Result<Self> {
        if !alpha.in_open_turn() {
            return Err(Error::Precondition(format!(
                "rotation angle {alpha} must lie in (0, 2pi)"
            )));
        }
        Ok(Self { alpha })
    }

    /// `x(t) = R(t alpha) x0`.
    pub fn state_at(&self, x0: [f64; 2], t: usize) -> [f64; 2] {
        let (c, s) = self.alpha.cos_sin(t as i64);
        [c * x0[0] - s * x0[1], s * x0[0] + c * x0[1]]
    }

    /// Row relating `y(t)` to `x(0)`.
    pub fn measurement_row(&self, t: usize) -> [f64; 2] {
        let (c, s) = self.alpha.cos_sin(t as i64);
        if t.is_multiple_of(2) {
            [c, -s]
        } else {
            [s, c]
        }
    }
}

/// First `(p, q)` with `(2p+1) alpha = 2q alpha (mod 2 pi)`, searching `p`
/// then `q` up to `bound`. `None` only means nothing was found within bound.
pub fn rotation_resonance(alpha: &Angle, bound: usize) -> Option<(usize, usize)> {
    resonance_within(alpha, bound, bound)
}

fn resonance_within(alpha: &Angle, p_max: usize, q_max: usize) -> Option<(usize, usize)> {
    (0..=p_max).find_map(|p| {
        (0..=q_max)
            .find(|&q| alpha.is_full_turns(2 * p as i64 + 1 - 2 * q as i64))
            .map(|q| (p, q))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RotationReconstruction {
    pub x0: [f64; 2],
    /// Sample times in the row order of `solve_matrix`.
    pub times: Vec<usize>,
    pub solve_matrix: [[f64; 2]; 2],
    /// `(p, q)` when the pair `y(2q), y(2p+1)` was used.
    pub resonance: Option<(usize, usize)>,
    /// Largest deviation of the recompressed stream from `y`.
    pub residual: f64,
}

fn det2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// First pair of sample times below `horizon`, scanning `t = 1, 2, ...` and
/// then `t = 0`, whose rows relating `y` to `x(0)` are independent.
pub fn independent_pair(spec: &RotationSpec, horizon: usize) -> Option<(usize, usize)> {
    let mut order = (1..horizon).chain((horizon > 0).then_some(0));
    let first = order.next()?;
    let r0 = spec.measurement_row(first);
    order
        .find(|&t| det2(r0, spec.measurement_row(t)).abs() > 1e-9)
        .map(|t| (first, t))
}

/// Recovers `x(0)` from a switch-mixed rotation stream. The resonant pair is
/// tried first; its solve matrix is itself a rotation. Otherwise samples are
/// taken greedily from `t = 1` onwards (then `t = 0`) until two rows are
/// independent, which also covers angles like `pi` where no resonance exists.
pub fn reconstruct_rotation(
    y: &CompressedStream<f64>,
    spec: &RotationSpec,
) -> Result<RotationReconstruction> {
    if y.n != 2 {
        return Err(Error::Dimension(format!(
            "rotation streams carry 2 channels, got {}",
            y.n
        )));
    }
    let len = y.len();
    if len < 2 {
        return Err(Error::InsufficientHorizon {
            required: 2,
            available: len,
        });
    }
    let resonance = resonance_within(&spec.alpha, (len - 2) / 2, (len - 1) / 2);
    let times = match resonance {
        Some((p, q)) => vec![2 * q, 2 * p + 1],
        None => match independent_pair(spec, len) {
            Some((a, b)) => vec![a, b],
            None => {
                return Err(Error::InsufficientHorizon {
                    required: len + 1,
                    available: len,
                })
            }
        },
    };
    let r0 = spec.measurement_row(times[0]);
    let r1 = spec.measurement_row(times[1]);
    let d = det2(r0, r1);
    let (b0, b1) = (y.values[times[0]], y.values[times[1]]);
    let x0 = [(b0 * r1[1] - b1 * r0[1]) / d, (r0[0] * b1 - r1[0] * b0) / d];
    let scale = y.values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let residual = y
        .values
        .iter()
        .enumerate()
        .map(|(t, v)| {
            let r = spec.measurement_row(t);
            (r[0] * x0[0] + r[1] * x0[1] - v).abs()
        })
        .fold(0.0, f64::max);
    if residual > 1e-9 * scale {
        return Err(Error::InconsistentStream { residual });
    }
    Ok(RotationReconstruction {
        x0,
        times,
        solve_matrix: [r0, r1],
        resonance,
        residual,
    })
}

pub fn simulate_rotation(spec: &RotationSpec, x0: [f64; 2], horizon: usize) -> CompressedStream<f64> {
    let values = (0..horizon).map(|t| spec.state_at(x0, t)[t % 2]).collect();
    CompressedStream::new(values, 2, 2, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_parsing() {
        assert_eq!(Angle::parse("2pi/3").unwrap(), Angle::turns(1, 3).unwrap());
        assert_eq!(Angle::parse("2*pi/3").unwrap(), Angle::turns(1, 3).unwrap());
        assert_eq!(Angle::parse("2π/3").unwrap(), Angle::turns(1, 3).unwrap());
        assert_eq!(Angle::parse("pi").unwrap(), Angle::turns(1, 2).unwrap());
        assert_eq!(Angle::parse("3pi/7").unwrap(), Angle::turns(3, 14).unwrap());
        assert_eq!(Angle::parse("1.25").unwrap(), Angle::Radians(1.25));
        assert!(Angle::parse("pi/0").is_err());
        assert!(Angle::parse("two").is_err());
        for s in ["2pi/3", "pi", "3pi/7", "-pi/2", "0.5"] {
            let a = Angle::parse(s).unwrap();
            assert_eq!(Angle::parse(&a.to_string()).unwrap(), a, "{s}");
        }
        assert_eq!(String::from(Angle::turns(1, 3).unwrap()), "2pi/3");
    }

    #[test]
    fn exact_turn_multiples() {
        let a = Angle::turns(1, 3).unwrap();
        assert!(a.is_full_turns(3) && a.is_full_turns(-6) && !a.is_full_turns(4));
        assert_eq!(a.times(4), a.times(1));
        let f = Angle::Radians(TAU / 3.0);
        assert!(f.is_full_turns(3) && !f.is_full_turns(2));
    }

    #[test]
    fn resonance_examples() {
        assert_eq!(rotation_resonance(&Angle::turns(1, 3).unwrap(), 10), Some((0, 2)));
        assert_eq!(rotation_resonance(&Angle::turns(1, 2).unwrap(), 100), None);
        assert!(rotation_resonance(&Angle::turns(3, 7).unwrap(), 20).is_some());
    }

    #[test]
    fn resonant_reconstruction_uses_a_rotation() {
        let spec = RotationSpec::new(Angle::turns(1, 3).unwrap()).unwrap();
        let x0 = [0.7, -1.3];
        let y = simulate_rotation(&spec, x0, 8);
        let rec = reconstruct_rotation(&y, &spec).unwrap();
        assert_eq!(rec.resonance, Some((0, 2)));
        let mut times = rec.times.clone();
        times.sort();
        assert_eq!(times, vec![1, 4]);
        let m = rec.solve_matrix;
        assert!((det2(m[0], m[1]) - 1.0).abs() < 1e-12);
        assert!((m[0][0] * m[1][0] + m[0][1] * m[1][1]).abs() < 1e-12);
        assert!((rec.x0[0] - x0[0]).abs() < 1e-12 && (rec.x0[1] - x0[1]).abs() < 1e-12);
    }

    #[test]
    fn half_turn_needs_no_resonance() {
        let spec = RotationSpec::new(Angle::parse("pi").unwrap()).unwrap();
        let y = simulate_rotation(&spec, [2.0, 5.0], 6);
        let rec = reconstruct_rotation(&y, &spec).unwrap();
        assert_eq!(rec.resonance, None);
        assert_eq!(rec.times, vec![1, 2]);
        assert!((rec.x0[0] - 2.0).abs() < 1e-12 && (rec.x0[1] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn quarter_turn_never_reads_the_second_coordinate() {
        let spec = RotationSpec::new(Angle::turns(1, 4).unwrap()).unwrap();
        assert_eq!(independent_pair(&spec, 100), None);
        let y = simulate_rotation(&spec, [1.0, 2.0], 12);
        assert!(matches!(
            reconstruct_rotation(&y, &spec),
            Err(Error::InsufficientHorizon { .. })
        ));
        let third = RotationSpec::new(Angle::turns(1, 3).unwrap()).unwrap();
        assert_eq!(independent_pair(&third, 100), Some((1, 2)));
    }

    #[test]
    fn rotation_errors() {
        assert!(RotationSpec::new(Angle::turns(0, 1).unwrap()).is_err());
        assert!(RotationSpec::new(Angle::Radians(7.0)).is_err());
        let spec = RotationSpec::new(Angle::Radians(0.4)).unwrap();
        let short = CompressedStream::new(vec![1.0], 2, 2, None);
        assert!(matches!(
            reconstruct_rotation(&short, &spec),
            Err(Error::InsufficientHorizon { .. })
        ));
        let mut y = simulate_rotation(&spec, [1.0, 1.0], 10);
        y.values[9] += 0.5;
        assert!(matches!(
            reconstruct_rotation(&y, &spec),
            Err(Error::InconsistentStream { .. })
        ));
    }
}
