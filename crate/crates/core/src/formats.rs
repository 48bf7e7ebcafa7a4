//! File formats: CSV tables for signals, streams and readouts, plain PGM (P2)
//! images, and the serde documents for exosystem specs and compressor designs.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::continuous::{CartanForm, ContinuousCompressorDesign, SkewSymmetricMatrix};
use crate::discrete::group::{GroupSystemSpec, GroupTag};
use crate::discrete::permutation::PermutationSpec;
use crate::discrete::rotation::{Angle, RotationSpec};
use crate::discrete::sensors::SensorNetworkSpec;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::shutter::{Frame, ReadoutRecord, ReadoutStream};
use crate::signal::{MixingSignal, PeriodicVectorSignal};

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Header plus records, all fields trimmed.
fn read_table(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header: Vec<String> = rdr
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(str::to_owned)
        .collect();
    let rows = rdr
        .records()
        .map(|r| {
            r.map(|rec| rec.iter().map(str::to_owned).collect())
                .map_err(csv_err)
        })
        .collect::<Result<Vec<Vec<String>>>>()?;
    Ok((header, rows))
}

fn check_time_column(rows: &[Vec<String>]) -> Result<()> {
    for (k, row) in rows.iter().enumerate() {
        let t: usize = row[0]
            .parse()
            .map_err(|_| Error::Parse(format!("row {}: bad time {:?}", k + 1, row[0])))?;
        if t != k {
            return Err(Error::Parse(format!("row {}: time {t}, expected {k}", k + 1)));
        }
    }
    Ok(())
}

/// Table `t,<prefix>1,...,<prefix>n` with `t = 0, 1, ...`.
pub fn read_vector_table<T: Scalar>(text: &str, prefix: &str) -> Result<Vec<Vec<T>>> {
    let (header, rows) = read_table(text)?;
    let n = header.len().saturating_sub(1);
    let expected: Vec<String> = std::iter::once("t".to_string())
        .chain((1..=n).map(|k| format!("{prefix}{k}")))
        .collect();
    if n == 0 || header != expected {
        return Err(Error::Parse(format!(
            "expected header t,{prefix}1,...; got {}",
            header.join(",")
        )));
    }
    check_time_column(&rows)?;
    rows.iter()
        .map(|row| row[1..].iter().map(|tok| T::parse_token(tok)).collect())
        .collect()
}

pub fn write_vector_table<T: Scalar>(rows: &[Vec<T>], prefix: &str) -> String {
    let n = rows.first().map_or(0, Vec::len);
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain((1..=n).map(|k| format!("{prefix}{k}")))
        .collect();
    w.write_record(&header).expect("in-memory write");
    for (t, row) in rows.iter().enumerate() {
        let rec: Vec<String> = std::iter::once(t.to_string())
            .chain(row.iter().map(Scalar::format_token))
            .collect();
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

/// One period of a signal as `t,x1,...,xn`.
pub fn read_signal_csv<T: Scalar>(text: &str) -> Result<PeriodicVectorSignal<T>> {
    PeriodicVectorSignal::new(read_vector_table(text, "x")?)
}

pub fn write_signal_csv<T: Scalar>(x: &PeriodicVectorSignal<T>) -> String {
    write_vector_table(x.samples(), "x")
}

/// One period of a mixing signal as `t,c1,...,cn`.
pub fn read_mixer_csv<T: Scalar>(text: &str) -> Result<MixingSignal<T>> {
    MixingSignal::new(read_vector_table(text, "c")?)
}

pub fn write_mixer_csv<T: Scalar>(c: &MixingSignal<T>) -> String {
    write_vector_table(c.samples(), "c")
}

/// Scalar stream `t,y` with `t = 0, 1, ...`.
pub fn read_stream_csv<T: Scalar>(text: &str) -> Result<Vec<T>> {
    let (header, rows) = read_table(text)?;
    if header != ["t", "y"] {
        return Err(Error::Parse(format!(
            "expected header t,y; got {}",
            header.join(",")
        )));
    }
    check_time_column(&rows)?;
    rows.iter().map(|r| T::parse_token(&r[1])).collect()
}

pub fn write_stream_csv<T: Scalar>(values: &[T]) -> String {
    let mut out = String::from("t,y\n");
    for (t, v) in values.iter().enumerate() {
        out.push_str(&format!("{t},{}\n", v.format_token()));
    }
    out
}

/// Samples `t,y` at arbitrary real times.
pub fn read_samples_csv(text: &str) -> Result<Vec<(f64, f64)>> {
    let (header, rows) = read_table(text)?;
    if header != ["t", "y"] {
        return Err(Error::Parse(format!(
            "expected header t,y; got {}",
            header.join(",")
        )));
    }
    rows.iter()
        .map(|r| Ok((f64::parse_token(&r[0])?, f64::parse_token(&r[1])?)))
        .collect()
}

pub fn write_samples_csv(samples: &[(f64, f64)]) -> String {
    let mut out = String::from("t,y\n");
    for (t, y) in samples {
        out.push_str(&format!("{t:?},{y:?}\n"));
    }
    out
}

/// Readout table `t,row_index,p1,...,pw`. Without `n_rows` the image height
/// is taken as the largest row index seen. Without an explicit `max_val` the
/// depth is 255, or 65535 if any pixel exceeds 255.
pub fn read_readout_csv(text: &str, n_rows: Option<usize>, max_val: Option<u16>) -> Result<ReadoutStream> {
    let (header, rows) = read_table(text)?;
    let width = header.len().saturating_sub(2);
    let expected: Vec<String> = ["t".to_string(), "row_index".to_string()]
        .into_iter()
        .chain((1..=width).map(|k| format!("p{k}")))
        .collect();
    if width == 0 || header != expected {
        return Err(Error::Parse(format!(
            "expected header t,row_index,p1,...; got {}",
            header.join(",")
        )));
    }
    check_time_column(&rows)?;
    let records = rows
        .iter()
        .enumerate()
        .map(|(t, row)| {
            let num = |s: &String| -> Result<u16> {
                s.parse()
                    .map_err(|_| Error::Parse(format!("row {}: bad value {s:?}", t + 1)))
            };
            Ok(ReadoutRecord {
                t,
                row_index: num(&row[1])? as usize,
                pixels: row[2..].iter().map(num).collect::<Result<Vec<u16>>>()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_val = max_val.unwrap_or_else(|| {
        if records.iter().flat_map(|r| &r.pixels).any(|&v| v > 255) {
            u16::MAX
        } else {
            255
        }
    });
    let n_rows = n_rows.unwrap_or_else(|| records.iter().map(|r| r.row_index).max().unwrap_or(0));
    ReadoutStream::new(n_rows, width, max_val, records)
}

pub fn write_readout_csv(stream: &ReadoutStream) -> String {
    let mut out = String::from("t,row_index");
    for k in 1..=stream.width {
        out.push_str(&format!(",p{k}"));
    }
    out.push('\n');
    for rec in &stream.records {
        out.push_str(&format!("{},{}", rec.t, rec.row_index));
        for v in &rec.pixels {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

/// Plain (ASCII) graymap; returns the frame and its maximum value.
pub fn read_pgm(text: &str) -> Result<(Frame, u16)> {
    let mut tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(str::split_whitespace);
    if tokens.next() != Some("P2") {
        return Err(Error::Parse("not a plain PGM (missing P2 magic)".into()));
    }
    let mut num = |what: &str| -> Result<usize> {
        tokens
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Parse(format!("PGM: missing or bad {what}")))
    };
    let width = num("width")?;
    let height = num("height")?;
    let max_val = num("maxval")?;
    if width == 0 || height == 0 || max_val == 0 || max_val > u16::MAX as usize {
        return Err(Error::Parse("PGM: dimensions and maxval must be positive".into()));
    }
    let mut frame = vec![vec![0u16; width]; height];
    for row in frame.iter_mut() {
        for px in row.iter_mut() {
            let v = num("pixel")?;
            if v > max_val {
                return Err(Error::Parse(format!("PGM: pixel {v} exceeds maxval {max_val}")));
            }
            *px = v as u16;
        }
    }
    Ok((frame, max_val as u16))
}

pub fn write_pgm(frame: &Frame, max_val: u16) -> String {
    let width = frame.first().map_or(0, Vec::len);
    let mut out = format!("P2\n{width} {}\n{max_val}\n", frame.len());
    for row in frame {
        let line: Vec<String> = row.iter().map(u16::to_string).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

fn matrix_from_rows(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(Error::Dimension(format!(
            "{what} must be a non-empty rectangular array"
        )));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorBlockDoc {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    pub c: Vec<f64>,
}

/// Exosystem spec document, discriminated by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ExosystemDoc {
    Permutation {
        /// Cycle notation, e.g. `"(4 2 3 1)(5)"`.
        sigma: String,
        #[serde(default)]
        n: Option<usize>,
    },
    Rotation {
        alpha: Angle,
    },
    Group {
        #[serde(rename = "G")]
        g: Vec<Vec<f64>>,
        #[serde(default = "default_tag")]
        tag: GroupTag,
        #[serde(default)]
        search_horizon: Option<usize>,
    },
    Sensors {
        #[serde(default)]
        angles: Option<Vec<Angle>>,
        #[serde(default)]
        blocks: Option<Vec<SensorBlockDoc>>,
    },
}

fn default_tag() -> GroupTag {
    GroupTag::Other
}

#[derive(Debug, Clone, PartialEq)]
pub enum Exosystem {
    Permutation(PermutationSpec),
    Rotation(RotationSpec),
    Group(GroupSystemSpec),
    Sensors(SensorNetworkSpec),
}

impl ExosystemDoc {
    pub fn build(&self) -> Result<Exosystem> {
        Ok(match self {
            ExosystemDoc::Permutation { sigma, n } => {
                Exosystem::Permutation(PermutationSpec::parse_cycles(sigma, *n)?)
            }
            ExosystemDoc::Rotation { alpha } => Exosystem::Rotation(RotationSpec::new(*alpha)?),
            ExosystemDoc::Group {
                g,
                tag,
                search_horizon,
            } => Exosystem::Group(GroupSystemSpec::new(
                matrix_from_rows(g, "G")?,
                *tag,
                *search_horizon,
            )?),
            ExosystemDoc::Sensors { angles, blocks } => match (angles, blocks) {
                (Some(a), None) => Exosystem::Sensors(SensorNetworkSpec::rotations(a)?),
                (None, Some(b)) => Exosystem::Sensors(SensorNetworkSpec::general(
                    b.iter()
                        .map(|blk| Ok((matrix_from_rows(&blk.a, "A")?, DVector::from_vec(blk.c.clone()))))
                        .collect::<Result<Vec<_>>>()?,
                )?),
                _ => {
                    return Err(Error::Parse(
                        "sensor spec needs exactly one of `angles` or `blocks`".into(),
                    ))
                }
            },
        })
    }
}

/// A skew matrix document: either a bare array of rows or `{"A": rows}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixDoc {
    Rows(Vec<Vec<f64>>),
    Named {
        #[serde(rename = "A")]
        a: Vec<Vec<f64>>,
    },
}

impl MatrixDoc {
    pub fn to_skew(&self) -> Result<SkewSymmetricMatrix> {
        let rows = match self {
            MatrixDoc::Rows(r) | MatrixDoc::Named { a: r } => r,
        };
        SkewSymmetricMatrix::new(matrix_from_rows(rows, "A")?)
    }
}

/// Exported compressor design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignDoc {
    #[serde(rename = "S")]
    pub s: Vec<Vec<f64>>,
    pub c0: Vec<f64>,
    #[serde(rename = "T")]
    pub t: Vec<Vec<f64>>,
    pub omegas: Vec<f64>,
    pub thetas: Vec<f64>,
    pub deltas: Vec<f64>,
}

impl From<&ContinuousCompressorDesign> for DesignDoc {
    fn from(d: &ContinuousCompressorDesign) -> Self {
        Self {
            s: matrix_rows(d.s.matrix()),
            c0: d.c0.iter().copied().collect(),
            t: matrix_rows(&d.cartan.t),
            omegas: d.cartan.omegas.clone(),
            thetas: d.thetas.clone(),
            deltas: d.deltas.clone(),
        }
    }
}

impl DesignDoc {
    /// Rebuilds the design from `T`, `omegas` and `thetas`, and checks that the
    /// stored `S` and `c0` agree with it.
    pub fn to_design(&self) -> Result<ContinuousCompressorDesign> {
        let t = matrix_from_rows(&self.t, "T")?;
        let n = t.nrows();
        if !t.is_square() || self.omegas.len() != n / 2 || self.thetas.len() != n / 2 {
            return Err(Error::Dimension(format!(
                "design for n = {n} needs a square T and {} omegas and thetas",
                n / 2
            )));
        }
        let cartan = CartanForm {
            t,
            omegas: self.omegas.clone(),
            trailing_zero: n % 2 == 1,
        };
        let design = ContinuousCompressorDesign::from_parts_unchecked(cartan, self.thetas.clone());
        let s = matrix_from_rows(&self.s, "S")?;
        let c0 = DVector::from_vec(self.c0.clone());
        if s.shape() != (n, n) || c0.len() != n {
            return Err(Error::Dimension("S and c0 do not match T".into()));
        }
        let gap = (s - design.s.matrix()).norm() + (c0 - &design.c0).norm();
        if gap > 1e-9 * (1.0 + design.s.matrix().norm()) {
            return Err(Error::Precondition(format!(
                "stored S and c0 disagree with T, omegas and thetas (gap {gap:e})"
            )));
        }
        Ok(design)
    }
}
