//! Parameter sweeps over a grid of config values with a run manifest.

use std::collections::BTreeMap;
use std::str::FromStr;
use std::time::Instant;

use nhtfim::config::RawConfig;
use nhtfim::{Error, Result};
use rayon::prelude::*;
use serde::Serialize;

use crate::tasks::{num, run_task, Task};

/// `name=start:stop:count`; `alpha` sets `alpha_J` and `alpha_h` together.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Axis {
    pub name: String,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        match self.count {
            1 => vec![self.start],
            n => (0..n)
                .map(|i| {
                    let t = i as f64 / (n - 1) as f64;
                    self.start * (1.0 - t) + self.stop * t
                })
                .collect(),
        }
    }

    fn keys(&self) -> Vec<&str> {
        if self.name == "alpha" {
            vec!["alpha_J", "alpha_h"]
        } else {
            vec![self.name.as_str()]
        }
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Validation(format!("axis `{s}`: expected name=start:stop:count"));
        let (name, range) = s.split_once('=').ok_or_else(bad)?;
        let parts: Vec<&str> = range.split(':').collect();
        let [a, b, n] = parts[..] else { return Err(bad()) };
        let f = |x: &str| x.trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(bad);
        let count: usize = n.trim().parse().map_err(|_| bad())?;
        if count == 0 {
            return Err(Error::Validation(format!("axis `{s}`: count must be at least 1")));
        }
        Ok(Axis { name: name.trim().to_string(), start: f(a)?, stop: f(b)?, count })
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub axes: Vec<Axis>,
    pub fixed: RawConfig,
    pub task: Task,
    pub workers: usize,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::Validation("workers must be positive".into()));
        }
        if self.axes.is_empty() {
            return Err(Error::Validation("a sweep needs at least one axis".into()));
        }
        let mut seen: Vec<&str> = Vec::new();
        for a in &self.axes {
            for k in a.keys() {
                if self.fixed.get(k).is_some() {
                    return Err(Error::Validation(format!("axis `{}` is also fixed in the config", a.name)));
                }
                if seen.contains(&k) {
                    return Err(Error::Validation(format!("axis `{}` appears twice", a.name)));
                }
                seen.push(k);
            }
        }
        Ok(())
    }

    /// Grid points in row-major order, last axis fastest.
    pub fn points(&self) -> Vec<Vec<f64>> {
        self.axes.iter().fold(vec![Vec::new()], |acc, axis| {
            acc.into_iter()
                .flat_map(|prefix| {
                    axis.values().into_iter().map(move |v| {
                        let mut p = prefix.clone();
                        p.push(v);
                        p
                    })
                })
                .collect()
        })
    }

    fn config_at(&self, values: &[f64]) -> RawConfig {
        let mut raw = self.fixed.clone();
        for (axis, &v) in self.axes.iter().zip(values) {
            for k in axis.keys() {
                raw.set(k, num(v));
            }
        }
        raw
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointStatus {
    pub index: usize,
    pub values: Vec<f64>,
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub toolkit_version: String,
    pub task: Task,
    pub config: BTreeMap<String, String>,
    pub axes: Vec<Axis>,
    pub seed: Option<u64>,
    pub workers: usize,
    pub wall_clock_s: f64,
    pub successes: usize,
    pub failures: usize,
    pub points: Vec<PointStatus>,
    /// SHA-256 of each output file, hex encoded.
    pub outputs: BTreeMap<String, String>,
}

pub struct SweepResult {
    pub csv: String,
    pub manifest: RunManifest,
}

/// Runs every grid point on `workers` threads. Failed points are recorded and
/// skipped; rows are emitted in grid order whatever the completion order.
pub fn run_sweep(spec: &SweepSpec, seed: Option<u64>) -> Result<SweepResult> {
    spec.validate()?;
    let t0 = Instant::now();
    let points = spec.points();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| Error::Validation(format!("thread pool: {e}")))?;
    let results: Vec<Result<Vec<(String, String, String)>>> = pool.install(|| {
        points.par_iter().map(|v| run_task(spec.task, &spec.config_at(v), None).map(|o| o.observations)).collect()
    });
    let mut csv = String::from("point");
    for a in &spec.axes {
        csv.push(',');
        csv.push_str(&a.name);
    }
    csv.push_str(",observable,index,value\n");
    let mut statuses = Vec::with_capacity(points.len());
    for (i, (values, res)) in points.iter().zip(results).enumerate() {
        let coords: String = values.iter().map(|v| format!(",{}", num(*v))).collect();
        match res {
            Ok(rows) => {
                for (name, index, value) in rows {
                    csv.push_str(&format!("{i}{coords},{name},{index},{value}\n"));
                }
                statuses.push(PointStatus { index: i, values: values.clone(), status: "ok", error: None });
            }
            Err(e) => statuses.push(PointStatus { index: i, values: values.clone(), status: "failed", error: Some(e.to_string()) }),
        }
    }
    let successes = statuses.iter().filter(|s| s.error.is_none()).count();
    let manifest = RunManifest {
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        task: spec.task,
        config: spec.fixed.as_map().clone(),
        axes: spec.axes.clone(),
        seed,
        workers: spec.workers,
        wall_clock_s: t0.elapsed().as_secs_f64(),
        successes,
        failures: statuses.len() - successes,
        points: statuses,
        outputs: BTreeMap::new(),
    };
    Ok(SweepResult { csv, manifest })
}
