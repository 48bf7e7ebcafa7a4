use std::fs;
use std::path::Path;

use num::BigRational;
use perimix::continuous::{
    design_compressor, design_compressor_with_thetas, reconstruct_continuous, spanning_certificate,
};
use perimix::discrete::group::{estimated_order, harvestable_rank};
use perimix::discrete::permutation::permutation_losslessness;
use perimix::discrete::rotation::independent_pair;
use perimix::discrete::sensors::{
    network_observability, reconstruct_sensor_network, roundrobin_losslessness,
};
use perimix::discrete::{
    cycle_resonance, group_resonance_search, reconstruct_group, reconstruct_permutation,
    reconstruct_rotation, rotation_resonance, Angle, GroupSystemSpec, PermutationSpec, RotationSpec,
    SensorNetworkSpec,
};
use perimix::formats::{self, DesignDoc, Exosystem, ExosystemDoc, MatrixDoc};
use perimix::number_theory::{gcd, general_losslessness, lcm, switch_losslessness, winding_coverage};
use perimix::reconstruction::{check_richness, plan_reconstruction, reconstruct as reconstruct_stream};
use perimix::shutter::{self, ImageSequence};
use perimix::{CompressedStream, Error, MixingSignal, Scalar};
use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use crate::report::{entry_names, Failure, RunReport};
use crate::{AnalyzeArgs, CompressArgs, DeblurArgs, DesignArgs, ReconstructArgs, ShutterArgs};

type Outcome = Result<RunReport, Failure>;

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    serde_json::from_str(&read_text(path)?)
        .map_err(|e| Failure::Core(Error::Parse(format!("{}: {e}", path.display()))))
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn load_mixer<T: Scalar>(mixer: Option<&Path>, switch: Option<usize>) -> Result<MixingSignal<T>, Failure> {
    match (mixer, switch) {
        (Some(path), None) => Ok(formats::read_mixer_csv(&read_text(path)?)?),
        (None, Some(n)) => Ok(perimix::switch_mixer(n)?),
        _ => Err(Failure::Usage("give exactly one of --mixer or --switch".into())),
    }
}

pub fn compress(a: &CompressArgs) -> Outcome {
    if a.exact {
        compress_with::<BigRational>(a)
    } else {
        compress_with::<f64>(a)
    }
}

fn compress_with<T: Scalar>(a: &CompressArgs) -> Outcome {
    let x = formats::read_signal_csv::<T>(&read_text(&a.signal)?)?;
    let c = load_mixer::<T>(a.mixer.as_deref(), a.switch)?;
    let y = perimix::compress(&x, &c, a.horizon)?;
    write_text(&a.out, &formats::write_stream_csv(&y.values))?;
    let mut r = RunReport::new(
        "compress",
        json!({
            "signal": path_str(&a.signal),
            "mixer": a.mixer.as_deref().map(path_str),
            "switch": a.switch,
            "horizon": a.horizon,
            "exact": a.exact,
        }),
    );
    r.diagnostic("n", json!(y.n))
        .diagnostic("m", json!(y.m))
        .diagnostic("p", json!(x.period()))
        .diagnostic("horizon", json!(y.len()))
        .artifact(&a.out);
    Ok(r)
}

/// Exosystem documents may omit `kind` when the flag already names it.
fn load_exosystem(path: &Path, kind: Option<&str>) -> Result<Exosystem, Failure> {
    let mut v: Value = read_json(path)?;
    if let Some(kind) = kind {
        if v.is_array() {
            v = json!({ "G": v });
        }
        if let Value::Object(m) = &mut v {
            m.entry("kind").or_insert_with(|| json!(kind));
        }
    }
    let doc: ExosystemDoc = serde_json::from_value(v)
        .map_err(|e| Failure::Core(Error::Parse(format!("{}: {e}", path.display()))))?;
    Ok(doc.build()?)
}

pub fn analyze(a: &AnalyzeArgs) -> Outcome {
    let targets = [
        a.perm.is_some(),
        a.alpha.is_some(),
        a.group.is_some(),
        a.sensors.is_some(),
        a.spec.is_some(),
    ]
    .iter()
    .filter(|&&b| b)
    .count();
    let periodic_flags = a.p.is_some() || a.m.is_some() || a.mixer.is_some();
    if targets > 1 || (targets == 1 && periodic_flags) {
        return Err(Failure::Usage("give exactly one analysis target".into()));
    }
    if targets == 1 && a.n.is_some() && a.perm.is_none() {
        return Err(Failure::Usage("--n only combines with --p or --perm".into()));
    }
    let inputs = json!({
        "n": a.n, "p": a.p, "m": a.m,
        "mixer": a.mixer.as_deref().map(path_str),
        "perm": a.perm, "alpha": a.alpha,
        "group": a.group.as_deref().map(path_str),
        "sensors": a.sensors.as_deref().map(path_str),
        "spec": a.spec.as_deref().map(path_str),
        "bound": a.bound,
    });
    let mut r = RunReport::new("analyze", inputs);
    if let Some(text) = &a.perm {
        let spec = PermutationSpec::parse_cycles(text, a.n.map(|n| n as usize))?;
        analyze_permutation(&mut r, &spec);
    } else if let Some(text) = &a.alpha {
        analyze_rotation(&mut r, &RotationSpec::new(Angle::parse(text)?)?, a.bound);
    } else if let Some(path) = &a.group {
        match load_exosystem(path, Some("group"))? {
            Exosystem::Group(g) => analyze_group(&mut r, &g),
            _ => return Err(Failure::Usage("--group expects a group spec".into())),
        }
    } else if let Some(path) = &a.sensors {
        match load_exosystem(path, Some("sensors"))? {
            Exosystem::Sensors(s) => analyze_sensors(&mut r, &s)?,
            _ => return Err(Failure::Usage("--sensors expects a sensor network spec".into())),
        }
    } else if let Some(path) = &a.spec {
        match load_exosystem(path, None)? {
            Exosystem::Permutation(s) => analyze_permutation(&mut r, &s),
            Exosystem::Rotation(s) => analyze_rotation(&mut r, &s, a.bound),
            Exosystem::Group(g) => analyze_group(&mut r, &g),
            Exosystem::Sensors(s) => analyze_sensors(&mut r, &s)?,
        }
    } else if let Some(path) = &a.mixer {
        let p = a.p.ok_or_else(|| Failure::Usage("--mixer needs --p".into()))?;
        if a.exact {
            analyze_mixer::<BigRational>(&mut r, path, a.n, p)?;
        } else {
            analyze_mixer::<f64>(&mut r, path, a.n, p)?;
        }
    } else {
        let (Some(n), Some(p)) = (a.n, a.p) else {
            return Err(Failure::Usage(
                "give --n and --p, or one of --perm, --alpha, --group, --sensors, --spec".into(),
            ));
        };
        match a.m {
            Some(m) => {
                let lossless = general_losslessness(n, m, p)?;
                r.decisive_verdict("lossless", lossless);
                r.diagnostic("regime", json!("rich-mixer"))
                    .diagnostic("gcd_m_p", json!(gcd(m, p)))
                    .diagnostic("required_m", json!(n * gcd(m, p)));
            }
            None => {
                let coverage = winding_coverage(n, p)?;
                let uncovered = coverage.uncovered_entries();
                r.decisive_verdict("lossless", switch_losslessness(n, p)?);
                r.verdict("winding_surjective", coverage.surjective);
                r.diagnostic("regime", json!("switch"))
                    .diagnostic("gcd", json!(gcd(n, p)))
                    .diagnostic("lcm", json!(lcm(n, p)))
                    .diagnostic("uncovered_names", json!(entry_names(&uncovered)))
                    .diagnostic("uncovered", json!(uncovered));
            }
        }
    }
    Ok(r)
}

fn analyze_mixer<T: Scalar>(r: &mut RunReport, path: &Path, n: Option<u64>, p: u64) -> Result<(), Failure> {
    let c: MixingSignal<T> = formats::read_mixer_csv(&read_text(path)?)?;
    if n.is_some_and(|n| n as usize != c.dim()) {
        return Err(Failure::Usage(format!(
            "--n disagrees with the mixer dimension {}",
            c.dim()
        )));
    }
    let horizon = lcm(c.period() as u64, p) as usize;
    let plan = plan_reconstruction(&c, p as usize, horizon)?;
    r.decisive_verdict("lossless", plan.feasible);
    match check_richness(&c, c.dim()) {
        Ok(rich) => {
            r.verdict("rich", rich.rich);
            if rich.rich {
                r.verdict(
                    "rich_predicate",
                    general_losslessness(c.dim() as u64, c.period() as u64, p)?,
                );
            }
            r.diagnostic("richness_witness", json!(rich.witness));
        }
        Err(Error::Budget { needed, cap }) => {
            r.diagnostic(
                "richness_skipped",
                json!(format!("{needed} subsets exceed the budget of {cap}")),
            );
        }
        Err(e) => return Err(e.into()),
    }
    let phases: Vec<Value> = plan
        .per_phase
        .iter()
        .map(|ph| json!({"phase": ph.phase, "rank": ph.rank, "condition": ph.condition, "times": ph.times}))
        .collect();
    r.diagnostic("regime", json!("mixer"))
        .diagnostic("n", json!(c.dim()))
        .diagnostic("m", json!(c.period()))
        .diagnostic("horizon", json!(horizon))
        .diagnostic("phases", json!(phases))
        .diagnostic("uncovered_names", json!(entry_names(&plan.uncovered)))
        .diagnostic("uncovered", json!(plan.uncovered));
    Ok(())
}

fn analyze_permutation(r: &mut RunReport, spec: &PermutationSpec) {
    let v = permutation_losslessness(spec);
    r.decisive_verdict("lossless", v.surjective);
    r.verdict("cycle_resonance", cycle_resonance(spec));
    let witnesses: Vec<_> = v.witnesses.iter().flatten().collect();
    r.diagnostic("regime", json!("permutation"))
        .diagnostic("n", json!(spec.n()))
        .diagnostic("cycles", json!(spec.to_string()))
        .diagnostic("cycle_lengths", json!(spec.cycle_lengths()))
        .diagnostic("order", json!(v.order))
        .diagnostic("witnesses", json!(witnesses))
        .diagnostic("unseen", json!(v.unseen));
}

fn analyze_rotation(r: &mut RunReport, spec: &RotationSpec, bound: usize) {
    let resonance = rotation_resonance(&spec.alpha, bound);
    let pair = independent_pair(spec, 2 * bound + 2);
    r.decisive_verdict("lossless", pair.is_some());
    r.verdict("resonance_found", resonance.is_some());
    r.diagnostic("regime", json!("rotation"))
        .diagnostic("alpha", json!(spec.alpha.to_string()))
        .diagnostic(
            "resonance",
            json!(resonance.map(|(p, q)| json!({"p": p, "q": q, "odd_time": 2 * p + 1, "even_time": 2 * q}))),
        )
        .diagnostic("independent_pair", json!(pair));
}

fn analyze_group(r: &mut RunReport, spec: &GroupSystemSpec) {
    let n = spec.dim();
    let resonance = group_resonance_search(spec, n);
    let (rank, times) = harvestable_rank(spec, spec.search_horizon + 1);
    r.decisive_verdict("lossless", rank == n);
    r.verdict("resonance_found", resonance.is_some());
    r.diagnostic("regime", json!("group"))
        .diagnostic("n", json!(n))
        .diagnostic("tag", json!(spec.tag))
        .diagnostic("search_horizon", json!(spec.search_horizon))
        .diagnostic("estimated_order", json!(estimated_order(&spec.g)))
        .diagnostic("harvest_rank", json!(rank))
        .diagnostic("harvest_times", json!(times))
        .diagnostic(
            "resonance",
            json!(resonance.map(|g| json!({
                "times": g.times,
                "G_prime": formats::matrix_rows(&g.g_prime),
            }))),
        );
}

fn analyze_sensors(r: &mut RunReport, spec: &SensorNetworkSpec) -> Result<(), Failure> {
    let obs = network_observability(spec);
    let angle_verdicts = match roundrobin_losslessness(spec) {
        Ok(v) => Some(v),
        Err(Error::UnsupportedSpec(_)) => None,
        Err(e) => return Err(e.into()),
    };
    r.decisive_verdict("lossless", obs.iter().all(|o| o.observable));
    let per_sensor: Vec<Value> = obs
        .iter()
        .enumerate()
        .map(|(i, o)| {
            json!({
                "sensor": i + 1,
                "observable": o.observable,
                "rank": o.rank,
                "angle_criterion": angle_verdicts.as_ref().map(|v| v[i]),
            })
        })
        .collect();
    r.diagnostic("regime", json!("sensors"))
        .diagnostic("sensor_count", json!(spec.count()))
        .diagnostic("sensors", json!(per_sensor));
    Ok(())
}

pub fn reconstruct(a: &ReconstructArgs) -> Outcome {
    let inputs = json!({
        "stream": path_str(&a.stream),
        "mixer": a.mixer.as_deref().map(path_str),
        "switch": a.switch,
        "p": a.p,
        "spec": a.spec.as_deref().map(path_str),
        "design": a.design.as_deref().map(path_str),
        "matrix": a.matrix.as_deref().map(path_str),
        "exact": a.exact,
    });
    let mut r = RunReport::new("reconstruct", inputs);
    if let Some(design) = &a.design {
        if a.exact {
            return Err(Failure::Usage(
                "--exact is not supported for continuous designs".into(),
            ));
        }
        let matrix = a.matrix.as_ref().expect("clap enforces --matrix");
        reconstruct_continuous_cmd(&mut r, &a.stream, design, matrix, &a.out)?;
    } else if let Some(spec) = &a.spec {
        match load_exosystem(spec, None)? {
            Exosystem::Permutation(s) => {
                if a.exact {
                    reconstruct_permutation_cmd::<BigRational>(&mut r, &a.stream, &s, &a.out)?
                } else {
                    reconstruct_permutation_cmd::<f64>(&mut r, &a.stream, &s, &a.out)?
                }
            }
            other => {
                if a.exact {
                    return Err(Failure::Usage(
                        "--exact is only supported for periodic signals and permutations".into(),
                    ));
                }
                reconstruct_float_exosystem(&mut r, &a.stream, &other, &a.out)?;
            }
        }
    } else {
        let p =
            a.p.ok_or_else(|| Failure::Usage("periodic reconstruction needs --p".into()))?;
        if a.exact {
            reconstruct_periodic::<BigRational>(&mut r, a, p)?;
        } else {
            reconstruct_periodic::<f64>(&mut r, a, p)?;
        }
    }
    r.artifact(&a.out);
    Ok(r)
}

fn reconstruct_periodic<T: Scalar>(r: &mut RunReport, a: &ReconstructArgs, p: usize) -> Result<(), Failure> {
    let c = load_mixer::<T>(a.mixer.as_deref(), a.switch)?;
    let values = formats::read_stream_csv::<T>(&read_text(&a.stream)?)?;
    let y = CompressedStream::new(values, c.dim(), c.period(), None);
    let rec = reconstruct_stream(&y, &c, p)?;
    write_text(&a.out, &formats::write_signal_csv(&rec.signal))?;
    r.decisive_verdict("lossless", true);
    r.diagnostic("regime", json!("periodic"))
        .diagnostic("n", json!(c.dim()))
        .diagnostic("m", json!(c.period()))
        .diagnostic("p", json!(p))
        .diagnostic("horizon", json!(y.len()))
        .diagnostic("max_residual", json!(rec.max_residual));
    Ok(())
}

fn reconstruct_permutation_cmd<T: Scalar>(
    r: &mut RunReport,
    stream: &Path,
    spec: &PermutationSpec,
    out: &Path,
) -> Result<(), Failure> {
    let values = formats::read_stream_csv::<T>(&read_text(stream)?)?;
    let y = CompressedStream::new(values, spec.n(), spec.n(), None);
    let rec = reconstruct_permutation(&y, spec)?;
    write_text(
        out,
        &formats::write_vector_table(&rec.trajectory(spec, y.len()), "x"),
    )?;
    r.decisive_verdict("lossless", true);
    r.diagnostic("regime", json!("permutation"))
        .diagnostic("witnesses", json!(rec.witnesses));
    Ok(())
}

fn reconstruct_float_exosystem(
    r: &mut RunReport,
    stream: &Path,
    exo: &Exosystem,
    out: &Path,
) -> Result<(), Failure> {
    let values = formats::read_stream_csv::<f64>(&read_text(stream)?)?;
    let len = values.len();
    let trajectory: Vec<Vec<f64>> = match exo {
        Exosystem::Rotation(spec) => {
            let y = CompressedStream::new(values, 2, 2, None);
            let rec = reconstruct_rotation(&y, spec)?;
            r.diagnostic("regime", json!("rotation"))
                .diagnostic("times", json!(rec.times))
                .diagnostic("resonance", json!(rec.resonance))
                .diagnostic("solve_matrix", json!(rec.solve_matrix))
                .diagnostic("residual", json!(rec.residual));
            (0..len).map(|t| spec.state_at(rec.x0, t).to_vec()).collect()
        }
        Exosystem::Group(spec) => {
            let n = spec.dim();
            let y = CompressedStream::new(values, n, n, None);
            let rec = reconstruct_group(&y, spec, n)?;
            r.diagnostic("regime", json!("group"))
                .diagnostic("times", json!(rec.times))
                .diagnostic("via_resonance", json!(rec.via_resonance))
                .diagnostic("assembled", json!(formats::matrix_rows(&rec.assembled)))
                .diagnostic("residual", json!(rec.residual));
            spec.powers(len)
                .iter()
                .map(|g| (g * &rec.x0).iter().copied().collect())
                .collect()
        }
        Exosystem::Sensors(spec) => {
            let y = CompressedStream::new(values, spec.total_dim(), spec.count(), None);
            let rec = reconstruct_sensor_network(&y, spec)?;
            let x0: Vec<_> = rec
                .sensors
                .iter()
                .map(|s| s.x0.clone().expect("all recovered"))
                .collect();
            r.diagnostic("regime", json!("sensors"))
                .diagnostic("sensors", json!(rec.sensors))
                .diagnostic("residual", json!(rec.residual));
            (0..len).map(|t| spec.stacked_state(&x0, t)).collect()
        }
        Exosystem::Permutation(_) => unreachable!("permutations are handled generically"),
    };
    write_text(out, &formats::write_vector_table(&trajectory, "x"))?;
    r.decisive_verdict("lossless", true);
    Ok(())
}

fn reconstruct_continuous_cmd(
    r: &mut RunReport,
    samples: &Path,
    design: &Path,
    matrix: &Path,
    out: &Path,
) -> Result<(), Failure> {
    let doc: DesignDoc = read_json(design)?;
    let design = doc.to_design()?;
    let a = read_json::<MatrixDoc>(matrix)?.to_skew()?;
    let samples = formats::read_samples_csv(&read_text(samples)?)?;
    let rec = reconstruct_continuous(&samples, &design, &a)?;
    write_text(
        out,
        &formats::write_vector_table(&[rec.x0.iter().copied().collect::<Vec<f64>>()], "x"),
    )?;
    r.decisive_verdict("lossless", true);
    r.diagnostic("regime", json!("continuous"))
        .diagnostic("samples", json!(samples.len()))
        .diagnostic("residual", json!(rec.residual))
        .diagnostic("min_singular_value", json!(rec.min_singular_value));
    Ok(())
}

pub fn design(a: &DesignArgs) -> Outcome {
    let matrix = read_json::<MatrixDoc>(&a.matrix)?.to_skew()?;
    let design = match &a.thetas {
        Some(thetas) => design_compressor_with_thetas(&matrix, thetas)?,
        None => design_compressor(&matrix, a.delta_base.unwrap_or(1.0))?,
    };
    let n = design.dim();
    let samples = a.samples.unwrap_or(4 * n);
    let dt = a.dt.unwrap_or_else(|| design.default_dt());
    let cert = spanning_certificate(&design, &matrix, samples, dt)?;
    let doc = DesignDoc::from(&design);
    write_text(
        &a.out,
        &(serde_json::to_string_pretty(&doc).expect("designs serialize") + "\n"),
    )?;
    let mut r = RunReport::new(
        "design",
        json!({
            "matrix": path_str(&a.matrix),
            "delta_base": a.delta_base,
            "thetas": a.thetas,
            "samples": a.samples,
            "dt": a.dt,
        }),
    );
    r.decisive_verdict("certificate_pass", cert.pass);
    r.verdict("admissible", design.admissible()).verdict(
        "constant_compressor_suffices",
        design.cartan.constant_compressor_suffices(),
    );
    r.diagnostic("n", json!(n))
        .diagnostic("omegas", json!(design.cartan.omegas))
        .diagnostic("thetas", json!(design.thetas))
        .diagnostic("deltas", json!(design.deltas))
        .diagnostic("c0", json!(doc.c0))
        .diagnostic("commutator_norm", json!(design.commutator_norm(&matrix)))
        .diagnostic("certificate", json!(cert))
        .artifact(&a.out);
    Ok(r)
}

fn frame_path(dir: &Path, k: usize) -> std::path::PathBuf {
    dir.join(format!("frame_{k}.pgm"))
}

fn write_frames(dir: &Path, seq: &ImageSequence, r: &mut RunReport) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("cannot create {}: {e}", dir.display())))?;
    for (k, f) in seq.frames().iter().enumerate() {
        let path = frame_path(dir, k);
        write_text(&path, &formats::write_pgm(f, seq.max_val()))?;
        r.artifact(&path);
    }
    Ok(())
}

pub fn simulate_shutter(a: &ShutterArgs) -> Outcome {
    let seq = if a.rotor {
        shutter::rotor_demo()
    } else {
        if a.frames.is_empty() {
            return Err(Failure::Usage("give --rotor or --frames".into()));
        }
        let mut frames = Vec::new();
        let mut max_val = None;
        for path in &a.frames {
            let (f, m) = formats::read_pgm(&read_text(path)?)?;
            if max_val.is_some_and(|v| v != m) {
                return Err(Failure::Core(Error::Dimension(
                    "frames disagree on maxval".into(),
                )));
            }
            max_val = Some(m);
            frames.push(f);
        }
        ImageSequence::new(frames, max_val.expect("at least one frame"))?
    };
    let horizon = a
        .horizon
        .unwrap_or_else(|| lcm(seq.height() as u64, seq.period() as u64) as usize);
    let stream = shutter::simulate_readout(&seq, horizon)?;
    write_text(&a.out, &formats::write_readout_csv(&stream))?;
    let mut r = RunReport::new(
        "simulate-shutter",
        json!({
            "rotor": a.rotor,
            "frames": a.frames.iter().map(|p| path_str(p)).collect::<Vec<_>>(),
            "horizon": a.horizon,
        }),
    );
    r.verdict("coprime", gcd(seq.height() as u64, seq.period() as u64) == 1);
    r.diagnostic("rows", json!(seq.height()))
        .diagnostic("width", json!(seq.width()))
        .diagnostic("period", json!(seq.period()))
        .diagnostic("horizon", json!(horizon))
        .artifact(&a.out);
    if let Some(dir) = &a.frames_out {
        write_frames(dir, &seq, &mut r)?;
    }
    Ok(r)
}

pub fn deblur(a: &DeblurArgs) -> Outcome {
    let stream = formats::read_readout_csv(&read_text(&a.stream)?, a.rows, a.max_val)?;
    let out = shutter::deblur(&stream, a.p, stream.n_rows, stream.width)?;
    let mut r = RunReport::new(
        "deblur",
        json!({
            "stream": path_str(&a.stream),
            "p": a.p,
            "rows": a.rows,
            "max_val": a.max_val,
        }),
    );
    r.decisive_verdict("lossless", true);
    r.diagnostic("rows", json!(stream.n_rows))
        .diagnostic("width", json!(stream.width))
        .diagnostic("consumed_times", json!(out.consumed));
    write_frames(&a.out, &out.sequence, &mut r)?;
    Ok(r)
}
