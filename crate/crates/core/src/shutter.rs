//! Rolling-shutter readout of periodic grayscale scenes and its inversion.
//!
//! At time `t` the sensor reads row `(t mod n) + 1` of frame `t mod p`. Each
//! pixel column is an instance of the switch-mixed compressor with the rows as
//! channels, so the full sequence comes back whenever `gcd(n, p) = 1`.

use serde::Serialize;

use crate::discrete::permutation::PermutationSpec;
use crate::error::{Error, Result};
use crate::number_theory::{crt_solve, gcd, lcm, winding_coverage, CongruenceSystem};

pub type Frame = Vec<Vec<u16>>;

/// `p` frames of equal shape, extended periodically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageSequence {
    height: usize,
    width: usize,
    max_val: u16,
    frames: Vec<Frame>,
}

impl ImageSequence {
    pub fn new(frames: Vec<Frame>, max_val: u16) -> Result<Self> {
        let Some(first) = frames.first() else {
            return Err(Error::Dimension("an image sequence needs a frame".into()));
        };
        let height = first.len();
        let width = first.first().map_or(0, Vec::len);
        if height == 0 || width == 0 {
            return Err(Error::Dimension("frames must be non-empty".into()));
        }
        for (k, f) in frames.iter().enumerate() {
            if f.len() != height || f.iter().any(|r| r.len() != width) {
                return Err(Error::Dimension(format!("frame {k} is not {height}x{width}")));
            }
            if f.iter().flatten().any(|&v| v > max_val) {
                return Err(Error::Precondition(format!(
                    "frame {k} exceeds max value {max_val}"
                )));
            }
        }
        Ok(Self {
            height,
            width,
            max_val,
            frames,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn max_val(&self) -> u16 {
        self.max_val
    }

    pub fn period(&self) -> usize {
        self.frames.len()
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn frame(&self, t: usize) -> &Frame {
        &self.frames[t % self.frames.len()]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReadoutRecord {
    pub t: usize,
    /// 1-based, equal to `(t mod n) + 1`.
    pub row_index: usize,
    pub pixels: Vec<u16>,
}

/// One row per time step, starting at `t = 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReadoutStream {
    pub n_rows: usize,
    pub width: usize,
    pub max_val: u16,
    pub records: Vec<ReadoutRecord>,
}

impl ReadoutStream {
    pub fn new(n_rows: usize, width: usize, max_val: u16, records: Vec<ReadoutRecord>) -> Result<Self> {
        if n_rows == 0 || width == 0 {
            return Err(Error::Dimension(
                "readout needs at least one row and column".into(),
            ));
        }
        for (k, r) in records.iter().enumerate() {
            if r.t != k {
                return Err(Error::Precondition(format!(
                    "record {k} has time {}, expected {k}",
                    r.t
                )));
            }
            if r.row_index != k % n_rows + 1 {
                return Err(Error::Precondition(format!(
                    "record at t = {k} reads row {}, expected {}",
                    r.row_index,
                    k % n_rows + 1
                )));
            }
            if r.pixels.len() != width {
                return Err(Error::Dimension(format!(
                    "record at t = {k} has {} pixels, expected {width}",
                    r.pixels.len()
                )));
            }
        }
        Ok(Self {
            n_rows,
            width,
            max_val,
            records,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// What the sensor shows after reading out `t - n + 1 ..= t`: every row as
    /// it was last captured.
    pub fn smeared_frame(&self, t: usize) -> Result<Frame> {
        if t + 1 < self.n_rows || t >= self.len() {
            return Err(Error::InsufficientHorizon {
                required: (t + 1).max(self.n_rows),
                available: self.len(),
            });
        }
        let mut frame = vec![Vec::new(); self.n_rows];
        for rec in &self.records[t + 1 - self.n_rows..=t] {
            frame[rec.row_index - 1] = rec.pixels.clone();
        }
        Ok(frame)
    }
}

pub fn simulate_readout(seq: &ImageSequence, horizon: usize) -> Result<ReadoutStream> {
    if horizon == 0 {
        return Err(Error::Precondition("horizon must be at least 1".into()));
    }
    let n = seq.height();
    let records = (0..horizon)
        .map(|t| ReadoutRecord {
            t,
            row_index: t % n + 1,
            pixels: seq.frame(t)[t % n].clone(),
        })
        .collect();
    ReadoutStream::new(n, seq.width(), seq.max_val(), records)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Deblurred {
    pub sequence: ImageSequence,
    /// `consumed[tau][r]` is the time whose record supplied row `r + 1` of
    /// frame `tau`.
    pub consumed: Vec<Vec<usize>>,
}

/// Reassembles the `p` frames: row `r` of frame `tau` is the record at the
/// unique `t < lcm(n, p)` with `t = r - 1 (mod n)` and `t = tau (mod p)`.
pub fn deblur(stream: &ReadoutStream, p: usize, n_rows: usize, width: usize) -> Result<Deblurred> {
    if p == 0 {
        return Err(Error::Precondition("period must be at least 1".into()));
    }
    if n_rows != stream.n_rows || width != stream.width {
        return Err(Error::Dimension(format!(
            "stream is {}x{}, requested {n_rows}x{width}",
            stream.n_rows, stream.width
        )));
    }
    let (n, p64) = (n_rows as u64, p as u64);
    if gcd(n, p64) != 1 {
        let uncovered = winding_coverage(n, p64)?.uncovered_entries();
        return Err(Error::NotLossless { uncovered });
    }
    let required = lcm(n, p64) as usize;
    if stream.len() < required {
        return Err(Error::InsufficientHorizon {
            required,
            available: stream.len(),
        });
    }
    let mut frames = Vec::with_capacity(p);
    let mut consumed = Vec::with_capacity(p);
    for tau in 0..p64 {
        let mut frame = Vec::with_capacity(n_rows);
        let mut times = Vec::with_capacity(n_rows);
        for r in 0..n {
            let sys = CongruenceSystem::new(r, n, tau, p64)?;
            let t = crt_solve(&sys).expect("coprime moduli always admit a solution") as usize;
            frame.push(stream.records[t].pixels.clone());
            times.push(t);
        }
        frames.push(frame);
        consumed.push(times);
    }
    Ok(Deblurred {
        sequence: ImageSequence::new(frames, stream.max_val)?,
        consumed,
    })
}

const ROTOR_SIZE: usize = 5;

/// The 5x5 binary rotor (`max_val = 1`) turning by 45 degrees
/// counter-clockwise per frame: main diagonal, middle row, anti-diagonal,
/// middle column.
pub fn rotor_demo() -> ImageSequence {
    let n = ROTOR_SIZE;
    let mid = n / 2;
    let make = |on: &dyn Fn(usize, usize) -> bool| -> Frame {
        (0..n)
            .map(|r| (0..n).map(|c| u16::from(on(r, c))).collect())
            .collect()
    };
    let frames = vec![
        make(&|r, c| r == c),
        make(&|r, _| r == mid),
        make(&|r, c| r + c == n - 1),
        make(&|_, c| c == mid),
    ];
    ImageSequence::new(frames, 1).expect("rotor frames are well formed")
}

/// Positions of the square ring at distance `d` from the border, clockwise
/// from its top-left corner.
fn ring(n: usize, d: usize) -> Vec<(usize, usize)> {
    let (lo, hi) = (d, n - 1 - d);
    if lo == hi {
        return vec![(lo, lo)];
    }
    let mut out = Vec::new();
    out.extend((lo..hi).map(|c| (lo, c)));
    out.extend((lo..hi).map(|r| (r, hi)));
    out.extend((lo + 1..=hi).rev().map(|c| (hi, c)));
    out.extend((lo + 1..=hi).rev().map(|r| (r, lo)));
    out
}

/// The rotor's motion as a pixel permutation on the 25 pixels (row-major,
/// 1-based): each ring advances counter-clockwise by one eighth of a turn.
pub fn rotor_pixel_permutation() -> PermutationSpec {
    let n = ROTOR_SIZE;
    let idx = |(r, c): (usize, usize)| r * n + c;
    let mut images: Vec<usize> = (1..=n * n).collect();
    for d in 0..=n / 2 {
        let positions = ring(n, d);
        let len = positions.len();
        let step = len / 8;
        for (k, &pos) in positions.iter().enumerate() {
            // the new value at k is the old value one eighth further clockwise
            images[idx(pos)] = idx(positions[(k + step) % len]) + 1;
        }
    }
    PermutationSpec::new(images).expect("ring shifts form a bijection")
}

/// Frames `x(0), ..., x(p-1)` of pixels driven by
/// `x_i(t+1) = x_{sigma(i)}(t)`, pixels numbered row-major from 1.
pub fn from_pixel_permutation(
    sigma: &PermutationSpec,
    first: &Frame,
    p: usize,
    max_val: u16,
) -> Result<ImageSequence> {
    let height = first.len();
    let width = first.first().map_or(0, Vec::len);
    if sigma.n() != height * width {
        return Err(Error::Dimension(format!(
            "permutation acts on {} pixels, frame has {}",
            sigma.n(),
            height * width
        )));
    }
    let flat: Vec<u16> = first.iter().flatten().copied().collect();
    let frames = (0..p as u64)
        .map(|t| {
            let state = sigma.state_at(&flat, t);
            state.chunks(width).map(<[u16]>::to_vec).collect()
        })
        .collect();
    ImageSequence::new(frames, max_val)
}
