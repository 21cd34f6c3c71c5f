//! Writes an experiment's CSV, JSON and SVG files.
//!
//! Every file is a function of the config alone: no timestamps, seeds in
//! order, floats printed in their shortest round-trip form.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use modal_core::io::{save_policy, write_phase_traces};
use modal_core::{ModalError, Result};
use serde_json::json;

use crate::runner::{ExperimentResult, SeedOutcome};
use crate::svg::{Chart, Series};

pub const PULLS_HEADER: &str = "t,arm,mean,sd";
pub const REGRET_HEADER: &str = "t,R_mean,R_sd,Rbar_mean,Rbar_sd,normalized";

pub fn pulls_csv(result: &ExperimentResult) -> String {
    let mut s = String::from(PULLS_HEADER);
    s.push('\n');
    for (t, row) in result.aggregate.pulls.iter().enumerate() {
        for (arm, st) in row.iter().enumerate() {
            s.push_str(&format!("{},{},{},{}\n", t + 1, arm, st.mean, st.sd));
        }
    }
    s
}

pub fn regret_csv(result: &ExperimentResult) -> String {
    let agg = &result.aggregate;
    let mut s = String::from(REGRET_HEADER);
    s.push('\n');
    let mut cps = agg.sample_regret.iter().peekable();
    for (i, r) in agg.regret.iter().enumerate() {
        let t = i + 1;
        let rbar = match cps.peek() {
            Some((c, st)) if *c == t => {
                let out = format!("{},{}", st.mean, st.sd);
                cps.next();
                out
            }
            _ => ",".to_owned(),
        };
        s.push_str(&format!("{t},{},{},{rbar},{}\n", r.mean, r.sd, agg.normalized[i]));
    }
    s
}

fn per_seed(seed: u64, outcome: &SeedOutcome) -> serde_json::Value {
    match outcome {
        SeedOutcome::Bandit(b) => {
            let mut v = json!({
                "seed": seed,
                "pulls": b.record.horizon(),
                "per_arm_counts": b.record.per_arm_counts,
                "most_pulled": b.record.most_pulled(),
                "final_estimates": b.record.final_estimates,
            });
            if let Some(r) = b.regret.last() {
                v["final_regret"] = json!(r);
            }
            if let Some(r) = b.sample_regret.last() {
                v["final_sample_regret"] = json!(r);
            }
            if let Some((set, early)) = &b.selected {
                v["selected"] = json!(set);
                v["terminated_early"] = json!(early);
            }
            if let Some(r) = &b.ranking {
                v["ranking"] = json!(r);
            }
            v
        }
        SeedOutcome::Contextual { record, agreement, .. } => json!({
            "seed": seed,
            "per_arm_counts": record.per_arm_counts,
            "agreement": agreement,
        }),
        SeedOutcome::Zooming(z) => json!({
            "seed": seed,
            "best_arm": z.best_arm,
            "phases": z.phases.len(),
            "final_radius": z.phases.last().map(|p| p.radius),
        }),
    }
}

pub fn summary_json(result: &ExperimentResult) -> Result<String> {
    let cfg = &result.config;
    let v = json!({
        "name": cfg.name,
        "strategy": cfg.strategy.name(),
        "horizon": cfg.horizon,
        "delta": cfg.delta,
        "seeds": cfg.seeds.iter().collect::<Vec<_>>(),
        "thetas": result.truth.as_ref().map(|g| &g.thetas),
        "checkpoints": result.checkpoints,
        "aggregate": result.aggregate,
        "runs": result.seeds.iter().map(|(s, o)| per_seed(*s, o)).collect::<Vec<_>>(),
    });
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

fn pulls_chart(result: &ExperimentResult) -> Chart {
    let agg = &result.aggregate;
    Chart {
        title: "Cumulative arm pulls".into(),
        x_label: "t".into(),
        y_label: "pulls".into(),
        series: (0..agg.arms)
            .map(|a| Series {
                label: format!("arm {a}"),
                points: agg
                    .pulls
                    .iter()
                    .enumerate()
                    .map(|(t, row)| ((t + 1) as f64, row[a].mean, Some(row[a].sd)))
                    .collect(),
            })
            .collect(),
    }
}

fn regret_charts(result: &ExperimentResult) -> (Chart, Chart) {
    let agg = &result.aggregate;
    let regret = Chart {
        title: "Regret".into(),
        x_label: "t".into(),
        y_label: "regret".into(),
        series: vec![
            Series {
                label: "R(t)".into(),
                points: agg
                    .regret
                    .iter()
                    .enumerate()
                    .map(|(t, s)| ((t + 1) as f64, s.mean, Some(s.sd)))
                    .collect(),
            },
            Series {
                label: "sample R(t)".into(),
                points: agg
                    .sample_regret
                    .iter()
                    .map(|(t, s)| (*t as f64, s.mean, Some(s.sd)))
                    .collect(),
            },
        ],
    };
    let normalized = Chart {
        title: "Normalized regret".into(),
        x_label: "t".into(),
        y_label: "R(t)/t".into(),
        series: vec![Series {
            label: "R(t)/t".into(),
            points: agg
                .normalized
                .iter()
                .enumerate()
                .map(|(t, v)| ((t + 1) as f64, *v, None))
                .collect(),
        }],
    };
    (regret, normalized)
}

/// Records the files it creates so they can be removed if a later write fails.
struct Writer {
    dir: PathBuf,
    created_dir: bool,
    written: Vec<PathBuf>,
}

impl Writer {
    fn file(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        let mut f = fs::File::create(&path)?;
        self.written.push(path);
        f.write_all(contents.as_bytes())?;
        Ok(())
    }

    fn remove(self) {
        for p in self.written.iter().rev() {
            let _ = if p.is_dir() { fs::remove_dir_all(p) } else { fs::remove_file(p) };
        }
        if self.created_dir {
            let _ = fs::remove_dir_all(&self.dir);
        }
    }
}

fn write_into(w: &mut Writer, result: &ExperimentResult) -> Result<()> {
    w.file("config.toml", &result.config.to_toml()?)?;
    w.file("pulls.csv", &pulls_csv(result))?;
    w.file("regret.csv", &regret_csv(result))?;
    w.file("summary.json", &summary_json(result)?)?;
    if result.config.svg {
        w.file("pulls.svg", &pulls_chart(result).render())?;
        let (regret, normalized) = regret_charts(result);
        w.file("regret.svg", &regret.render())?;
        w.file("normalized_regret.svg", &normalized.render())?;
    }
    let traces: Vec<(u64, &[_])> = result
        .seeds
        .iter()
        .filter_map(|(s, o)| match o {
            SeedOutcome::Zooming(z) => Some((*s, z.phases.as_slice())),
            _ => None,
        })
        .collect();
    if !traces.is_empty() {
        let mut buf = Vec::new();
        write_phase_traces(&mut buf, &traces)?;
        w.file("phases.csv", &String::from_utf8(buf).map_err(|e| ModalError::Data(e.to_string()))?)?;
    }
    if let Some((_, SeedOutcome::Contextual { policy, .. })) = result.seeds.first() {
        let dir = w.dir.join("policy");
        fs::create_dir_all(&dir)?;
        w.written.push(dir.clone());
        save_policy(&dir, policy)?;
    }
    Ok(())
}

/// Writes every output file into `dir`, creating it if needed. On failure
/// the files written so far are removed, along with `dir` if this call
/// created it.
pub fn write_outputs(result: &ExperimentResult, dir: &Path) -> Result<Vec<PathBuf>> {
    let created_dir = !dir.exists();
    fs::create_dir_all(dir)?;
    let mut w = Writer {
        dir: dir.to_path_buf(),
        created_dir,
        written: Vec::new(),
    };
    match write_into(&mut w, result) {
        Ok(()) => Ok(w.written),
        Err(e) => {
            w.remove();
            Err(e)
        }
    }
}
