use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::PolicyKind;
use super::persist::{fmt17, write_atomic, write_csv};
use crate::error::{Error, Result};
use crate::netmodel::Mode;

pub const RESULT_SCHEMA_VERSION: u32 = 1;
pub const HOURS: usize = 24;

/// Hour-of-day means of one scenario, averaged over evaluation seeds.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HourlySeries {
    pub power_w: [f64; HOURS],
    pub active_cells: [f64; HOURS],
    pub qos_pct: [f64; HOURS],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub id: u32,
    /// Episode mean station power, W.
    pub power_w: f64,
    /// Episode mean QoS, %.
    pub qos_pct: f64,
    /// Handovers per episode.
    pub handover: f64,
    pub hourly: HourlySeries,
}

/// Evaluation of one (policy, mode) over every scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultSet {
    pub schema_version: u32,
    pub name: String,
    pub policy: PolicyKind,
    pub mode: Mode,
    pub stations: usize,
    pub eval_seeds: usize,
    pub scenarios: Vec<ScenarioResult>,
}

impl ResultSet {
    pub fn validate(&self) -> Result<(), String> {
        if self.schema_version != RESULT_SCHEMA_VERSION {
            return Err("unsupported schema version".into());
        }
        if self.scenarios.is_empty() {
            return Err("no scenarios".into());
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if self.scenarios.iter().any(|s| {
            !finite(&[s.power_w, s.qos_pct, s.handover])
                || !finite(&s.hourly.power_w)
                || !finite(&s.hourly.active_cells)
                || !finite(&s.hourly.qos_pct)
        }) {
            return Err("non-finite metric".into());
        }
        Ok(())
    }

    /// Arithmetic means over scenarios of (power, QoS, handover).
    pub fn averages(&self) -> [f64; 3] {
        let n = self.scenarios.len() as f64;
        let mut acc = [0.0; 3];
        for s in &self.scenarios {
            acc[0] += s.power_w;
            acc[1] += s.qos_pct;
            acc[2] += s.handover;
        }
        acc.map(|v| v / n)
    }
}

pub const SUMMARY_NOTE: &str =
    "# power_w: episode mean station power in watts (summed over stations); \
qos_pct: episode mean QoS in percent; handover: handovers per episode; \
saving_pct: 100*(1 - power_w/power_w of noes)";

/// Mean and standard error of `xs`.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn summary_text(sets: &[ResultSet]) -> String {
    let ids: Vec<u32> = sets[0].scenarios.iter().map(|s| s.id).collect();
    let mut out = String::from(SUMMARY_NOTE);
    out.push('\n');
    let mut header = vec!["algorithm".to_string(), "metric".to_string()];
    header.extend(ids.iter().map(|id| format!("s{id}")));
    header.push("avg".into());
    out.push_str(&header.join(","));
    out.push('\n');
    let mut row = |name: &str, metric: &str, vals: Vec<f64>, avg: f64| {
        let mut cells = vec![name.to_string(), metric.to_string()];
        cells.extend(vals.iter().map(|v| fmt17(*v)));
        cells.push(fmt17(avg));
        out.push_str(&cells.join(","));
        out.push('\n');
    };
    let noes = sets.iter().find(|s| s.policy == PolicyKind::NoEs);
    for set in sets {
        let avg = set.averages();
        let col = |f: fn(&ScenarioResult) -> f64| set.scenarios.iter().map(f).collect::<Vec<_>>();
        row(&set.name, "power_w", col(|s| s.power_w), avg[0]);
        row(&set.name, "qos_pct", col(|s| s.qos_pct), avg[1]);
        row(&set.name, "handover", col(|s| s.handover), avg[2]);
        if let Some(base) = noes {
            let saving = set
                .scenarios
                .iter()
                .zip(&base.scenarios)
                .map(|(a, b)| 100.0 * (1.0 - a.power_w / b.power_w))
                .collect();
            row(
                &set.name,
                "saving_pct",
                saving,
                100.0 * (1.0 - avg[0] / base.averages()[0]),
            );
        }
    }
    out
}

fn hourly_rows(sets: &[ResultSet]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    let series: [(&str, fn(&HourlySeries) -> &[f64; HOURS]); 3] = [
        ("power_w", |h| &h.power_w),
        ("active_cells", |h| &h.active_cells),
        ("qos_pct", |h| &h.qos_pct),
    ];
    for set in sets {
        for (metric, pick) in series {
            for hour in 0..HOURS {
                let xs: Vec<f64> = set
                    .scenarios
                    .iter()
                    .map(|s| pick(&s.hourly)[hour])
                    .collect();
                let (m, se) = mean_stderr(&xs);
                rows.push(vec![
                    set.name.clone(),
                    metric.to_string(),
                    hour.to_string(),
                    fmt17(m),
                    fmt17(se),
                ]);
            }
        }
    }
    rows
}

/// Writes `summary.csv` and `hourly.csv` under `dir`.
pub fn write_report(sets: &[ResultSet], dir: &Path) -> Result<[PathBuf; 2]> {
    let Some(first) = sets.first() else {
        return Err(Error::Artifact("no result sets to report".into()));
    };
    let ids: Vec<u32> = first.scenarios.iter().map(|s| s.id).collect();
    if let Some(bad) = sets
        .iter()
        .find(|s| s.scenarios.iter().map(|r| r.id).ne(ids.iter().copied()))
    {
        return Err(Error::Artifact(format!(
            "{} covers different scenarios than {}",
            bad.name, first.name
        )));
    }
    let summary = dir.join("summary.csv");
    let hourly = dir.join("hourly.csv");
    let text = summary_text(sets);
    let rows = hourly_rows(sets);
    write_atomic(&summary, text.as_bytes())?;
    write_csv(
        &hourly,
        &["algorithm", "metric", "hour", "mean", "stderr"],
        &rows,
    )?;
    Ok([summary, hourly])
}
