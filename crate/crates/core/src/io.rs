//! CSV and JSON file formats.
//!
//! All files are UTF-8 with LF line endings. Numbers are written in Rust's
//! shortest round-trip form with `.` as the decimal point, so a value read
//! back is bit-identical to the value written.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bandit::ScoreFunction;
use crate::conditional::{ConditionalModeConfig, JointSampleSet};
use crate::contextual::ContextualPolicy;
use crate::error::{ModalError, Result};
use crate::knn::SampleSet;
use crate::mode::{ContaminationReport, ModeEstimate};
use crate::zooming::PhaseRecord;

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

fn fmt(x: f64) -> String {
    format!("{x}")
}

/// Reads one point per row. A first row that does not parse as numbers is
/// taken as a header. Every row must have the same number of fields.
pub fn read_points<R: Read>(input: R) -> Result<SampleSet<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(input);
    let mut set: Option<SampleSet<f64>> = None;
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(i as u64 + 1, |p| p.line());
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        let row = match parsed {
            Ok(row) => row,
            Err(_) if i == 0 => continue,
            Err(e) => return Err(ModalError::data(format!("line {line}: {e}"))),
        };
        if row.iter().any(|v| !v.is_finite()) {
            return Err(ModalError::data(format!("line {line}: non-finite value")));
        }
        match &mut set {
            None => set = Some(SampleSet::from_points(row.len(), [row])?),
            Some(s) => {
                if row.len() != s.dim() {
                    return Err(ModalError::data(format!(
                        "line {line}: expected {} fields, found {}",
                        s.dim(),
                        row.len()
                    )));
                }
                s.push(&row)?;
            }
        }
    }
    set.ok_or_else(|| ModalError::data("no data rows"))
}

pub fn read_points_file(path: &Path) -> Result<SampleSet<f64>> {
    read_points(fs::File::open(path)?)
}

/// Like [`read_points`] but an empty input yields an empty set of dimension
/// `dim`.
pub fn read_points_or_empty<R: Read>(mut input: R, dim: usize) -> Result<SampleSet<f64>> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let has_rows = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .any(|l| l.split(',').all(|f| f.trim().parse::<f64>().is_ok()));
    if !has_rows {
        return SampleSet::new(dim);
    }
    let set = read_points(text.as_bytes())?;
    if set.dim() != dim {
        return Err(ModalError::Shape {
            expected: dim,
            found: set.dim(),
        });
    }
    Ok(set)
}

pub fn write_points<W: Write>(out: W, samples: &SampleSet<f64>) -> Result<()> {
    let mut w = writer(out);
    w.write_record((1..=samples.dim()).map(|i| format!("x_{i}")))?;
    for p in samples.iter() {
        w.write_record(p.iter().map(|&v| fmt(v)))?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `location_1, …, location_D, density, k, n`.
pub fn write_estimates<W: Write>(out: W, estimates: &[ModeEstimate<f64>]) -> Result<()> {
    let dim = estimates.first().map_or(1, |e| e.location.len());
    let mut w = writer(out);
    let mut header: Vec<String> = (1..=dim).map(|i| format!("location_{i}")).collect();
    header.extend(["density", "k", "n"].map(String::from));
    w.write_record(&header)?;
    for e in estimates {
        let mut row: Vec<String> = e.location.iter().map(|&v| fmt(v)).collect();
        row.push(fmt(e.density_value));
        row.push(e.k_used.to_string());
        row.push(e.n_used.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `clean, contaminated, displacement, ell, k, theoretical_bound`;
/// locations of dimension above one are written `;`-separated.
pub fn write_contamination_report<W: Write>(out: W, report: &ContaminationReport<f64>) -> Result<()> {
    let join = |v: &[f64]| v.iter().map(|&x| fmt(x)).collect::<Vec<_>>().join(";");
    let mut w = writer(out);
    w.write_record(["clean", "contaminated", "displacement", "ell", "k", "theoretical_bound"])?;
    w.write_record([
        join(&report.clean_estimate.location),
        join(&report.contaminated_estimate.location),
        fmt(report.displacement),
        report.ell.to_string(),
        report.clean_estimate.k_used.to_string(),
        fmt(report.theoretical_bound),
    ])?;
    w.flush()?;
    Ok(())
}

/// Columns `reward, ctx_1, …, ctx_d`.
pub fn write_joint<W: Write>(out: W, samples: &JointSampleSet<f64>) -> Result<()> {
    let mut w = writer(out);
    let mut header = vec!["reward".to_owned()];
    header.extend((1..=samples.context_dim()).map(|i| format!("ctx_{i}")));
    w.write_record(&header)?;
    for (r, x) in samples.iter() {
        let mut row = vec![fmt(r)];
        row.extend(x.iter().map(|&v| fmt(v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_joint<R: Read>(input: R) -> Result<JointSampleSet<f64>> {
    let rows = read_points(input)?;
    if rows.dim() < 2 {
        return Err(ModalError::data("joint samples need a reward column and at least one context column"));
    }
    let mut out = JointSampleSet::new(rows.dim() - 1)?;
    for p in rows.iter() {
        out.push(p[0], &p[1..])?;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicySidecar {
    num_arms: usize,
    context_dim: usize,
    config: ConditionalModeConfig,
    score: ScoreFunction,
}

/// Writes `arm_<i>.csv` for every arm plus `policy.json` into `dir`.
pub fn save_policy(dir: &Path, policy: &ContextualPolicy) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (i, arm) in policy.arms.iter().enumerate() {
        write_joint(fs::File::create(dir.join(format!("arm_{i}.csv")))?, arm)?;
    }
    let sidecar = PolicySidecar {
        num_arms: policy.num_arms(),
        context_dim: policy.context_dim(),
        config: policy.config.clone(),
        score: policy.score.clone(),
    };
    let mut text = serde_json::to_string_pretty(&sidecar)?;
    text.push('\n');
    fs::write(dir.join("policy.json"), text)?;
    Ok(())
}

pub fn load_policy(dir: &Path) -> Result<ContextualPolicy> {
    let sidecar: PolicySidecar = serde_json::from_str(&fs::read_to_string(dir.join("policy.json"))?)?;
    let arms = (0..sidecar.num_arms)
        .map(|i| read_joint(fs::File::open(dir.join(format!("arm_{i}.csv")))?))
        .collect::<Result<Vec<_>>>()?;
    if let Some(bad) = arms.iter().find(|a| a.context_dim() != sidecar.context_dim) {
        return Err(ModalError::Shape {
            expected: sidecar.context_dim,
            found: bad.context_dim(),
        });
    }
    ContextualPolicy::new(arms, sidecar.config, sidecar.score)
}

/// Columns `phase, center_1.., radius, argmax_1..`.
pub fn write_phase_trace<W: Write>(out: W, phases: &[PhaseRecord]) -> Result<()> {
    write_traces(out, false, &[(0, phases)])
}

/// Phase traces of several runs, with a leading `seed` column.
pub fn write_phase_traces<W: Write>(out: W, runs: &[(u64, &[PhaseRecord])]) -> Result<()> {
    write_traces(out, true, runs)
}

fn write_traces<W: Write>(out: W, seeded: bool, runs: &[(u64, &[PhaseRecord])]) -> Result<()> {
    let dim = runs
        .iter()
        .find_map(|(_, p)| p.first())
        .map_or(1, |p| p.center.len());
    let mut w = writer(out);
    let mut header = Vec::new();
    if seeded {
        header.push("seed".to_owned());
    }
    header.push("phase".to_owned());
    header.extend((1..=dim).map(|i| format!("center_{i}")));
    header.push("radius".into());
    header.extend((1..=dim).map(|i| format!("argmax_{i}")));
    w.write_record(&header)?;
    for (seed, phases) in runs {
        for p in phases.iter() {
            let mut row = Vec::new();
            if seeded {
                row.push(seed.to_string());
            }
            row.push(p.phase.to_string());
            row.extend(p.center.iter().map(|&v| fmt(v)));
            row.push(fmt(p.radius));
            row.extend(p.argmax.iter().map(|&v| fmt(v)));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mode::{estimate_mode, ModeEstimatorConfig};

    #[test]
    fn points_with_and_without_header() {
        let a = read_points("x\n0.1\n0.5\n0.52\n".as_bytes()).unwrap();
        let b = read_points("0.1\n0.5\n0.52\n".as_bytes()).unwrap();
        assert_eq!(a, b);
        let two = read_points("a,b\n0.1, 0.2\n0.3,0.4\n".as_bytes()).unwrap();
        assert_eq!(two.dim(), 2);
        assert_eq!(two.point(1), &[0.3, 0.4]);
    }

    #[test]
    fn malformed_points() {
        let err = read_points("0.1\n0.2,0.3\n".as_bytes()).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
        assert!(read_points("0.1\nabc\n".as_bytes()).is_err());
        assert!(read_points("".as_bytes()).is_err());
        assert!(read_points("x\n".as_bytes()).is_err());
        assert!(read_points("0.1\nNaN\n".as_bytes()).is_err());
        assert_eq!(read_points_or_empty("x\n".as_bytes(), 1).unwrap().len(), 0);
        assert!(read_points_or_empty("0.1,0.2\n".as_bytes(), 1).is_err());
    }

    #[test]
    fn round_trip_is_exact() {
        let s = SampleSet::from_scalars(vec![0.1, 1.0 / 3.0, 2f64.sqrt() / 7.0]);
        let mut buf = Vec::new();
        write_points(&mut buf, &s).unwrap();
        assert_eq!(read_points(buf.as_slice()).unwrap(), s);
    }

    #[test]
    fn estimate_columns() {
        let s = SampleSet::from_scalars(vec![0.1, 0.5, 0.52, 0.54, 0.9]);
        let e = estimate_mode(&s, &ModeEstimatorConfig::default().with_k(3)).unwrap();
        let mut buf = Vec::new();
        write_estimates(&mut buf, &[e]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("location_1,density,k,n"));
        assert!(lines.next().unwrap().starts_with("0.52,"));
    }

    #[test]
    fn policy_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let arms = vec![
            JointSampleSet::from_pairs(1, [(0.2, [0.1]), (0.3, [0.4])]).unwrap(),
            JointSampleSet::from_pairs(1, [(0.7, [0.2]), (0.6, [0.9])]).unwrap(),
        ];
        let p = ContextualPolicy::new(arms, ConditionalModeConfig::default().with_k(1), ScoreFunction::identity()).unwrap();
        save_policy(dir.path(), &p).unwrap();
        assert_eq!(load_policy(dir.path()).unwrap(), p);
    }

    #[test]
    fn phase_trace_header() {
        let ph = PhaseRecord {
            phase: 0,
            center: vec![0.5],
            radius: 1.0,
            argmax: vec![0.7],
            active_arms: vec![],
            clamped: false,
        };
        let mut buf = Vec::new();
        write_phase_trace(&mut buf, &[ph]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "phase,center_1,radius,argmax_1\n0,0.5,1,0.7\n");
    }
}
