//! Per-subcommand computations. Each task reads a resolved `key = value`
//! config and returns its tables, a JSON summary and long-format observations.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nhtfim::cft::{compare_to_numerics, entropy_curve, CftParams, ValidityBounds};
use nhtfim::config::{RawConfig, RunConfig};
use nhtfim::continuous::continuous_entropy_trace;
use nhtfim::entanglement::{entropy_from_cprime, fit_scaling, tee, tee_collapse, CollapseGrid, ScalingThresholds};
use nhtfim::gaussian::{initial_frame, steady_state_frame, stroboscopic_run_with};
use nhtfim::io::write_matrix;
use nhtfim::oracle::quench_experiment;
use nhtfim::spectral::{
    allowed_momenta, classify_params, detect_edge_modes, floquet_dispersion, quasienergies_from_transfer, EdgeOptions,
    FloquetKicks, ModeClass, PhaseThresholds, TransferMatrix,
};
use nhtfim::{BoundaryCondition, Error, InitialState, LatticeSpec, ModelParams, QuenchConfig, Result, SubsystemSpec, TeePartition};
use serde::Serialize;
use serde_json::{json, Value};

/// Config keys read by tasks on top of the model keys.
pub const TASK_KEYS: &[&str] = &[
    "sizes", "ratio", "method", "beta_J_start", "beta_J_stop", "beta_J_count", "tee_periods", "c", "epsilon", "eta", "l",
    "t_max", "dt", "amplitude",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Spectrum,
    Evolve,
    Scaling,
    Tee,
    SpinQuench,
    CftCompare,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Spectrum => "spectrum",
            Task::Evolve => "evolve",
            Task::Scaling => "scaling",
            Task::Tee => "tee",
            Task::SpinQuench => "spin-quench",
            Task::CftCompare => "cft-compare",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Table { header: header.to_vec(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

/// One long-format observation: `(observable, index, value)`.
pub type Observation = (String, String, String);

#[derive(Debug, Clone)]
pub struct TaskOutput {
    pub table: Table,
    /// Second CSV, written next to the main one with a `_summary` suffix.
    pub summary_table: Option<Table>,
    pub json: Option<Value>,
    pub observations: Vec<Observation>,
}

/// Shortest round-trip decimal form, so output bytes are reproducible.
pub fn num(x: f64) -> String {
    format!("{x}")
}

fn obs(name: &str, index: impl ToString, value: impl ToString) -> Observation {
    (name.to_string(), index.to_string(), value.to_string())
}

fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Validation(msg.into()))
}

pub fn run_task(task: Task, raw: &RawConfig, dump: Option<&Path>) -> Result<TaskOutput> {
    raw.check_keys(TASK_KEYS)?;
    match task {
        Task::Spectrum => spectrum(raw),
        Task::Evolve => evolve(raw, dump),
        Task::Scaling => scaling(raw),
        Task::Tee => tee_scan(raw),
        Task::SpinQuench => spin_quench(raw),
        Task::CftCompare => cft_compare(raw),
    }
}

fn mode_class(c: ModeClass) -> &'static str {
    match c {
        ModeClass::Real => "real",
        ModeClass::ComplexConjugatePair => "conjugate-pair",
        ModeClass::GrowDecayPair => "grow-decay",
        ModeClass::Exceptional => "exceptional",
    }
}

#[derive(Serialize)]
struct EdgeJson {
    kind: String,
    re: f64,
    im: f64,
    loc_len: f64,
}

fn spectrum(raw: &RawConfig) -> Result<TaskOutput> {
    let run = RunConfig::from_raw(raw)?;
    let (p, lat) = (&run.params, &run.lattice);
    let defaults = EdgeOptions::default();
    let opts = EdgeOptions { tol_edge: raw.f64("tol_edge")?.unwrap_or(defaults.tol_edge), ..defaults };
    let tol_real = raw.f64("tol_real")?;
    let mut table = Table::new(&["k_or_index", "re_eps", "im_eps", "classification"]);
    let mut edges = Vec::new();
    let eps: Vec<nhtfim::linalg::C64>;
    let n_real_modes;
    if let Some(parity) = lat.bc.parity_sector() {
        let mut all = Vec::new();
        for k in allowed_momenta(lat.sites, parity) {
            let d = floquet_dispersion(p.j(), p.h(), k);
            for e in d.epsilon {
                table.push(vec![num(k), num(e.re), num(e.im), mode_class(d.classification).into()]);
                all.push(e);
            }
        }
        n_real_modes = quasienergies_from_transfer(&TransferMatrix::for_params(p, lat)?, lat.bc, tol_real).n_real_modes;
        eps = all;
    } else {
        let scan = detect_edge_modes(p, lat, &opts)?;
        let report = &scan.report;
        let tol = tol_real.unwrap_or(report.tol_real);
        let mut order: Vec<usize> = (0..report.quasienergies.len()).collect();
        let q = &report.quasienergies;
        order.sort_by(|&a, &b| q[a].re.total_cmp(&q[b].re).then(q[a].im.total_cmp(&q[b].im)));
        for (rank, &i) in order.iter().enumerate() {
            let e = q[i];
            let class = match report.edge_modes.iter().find(|r| r.energy == e) {
                Some(r) => format!("edge-{}", r.kind),
                None if e.im.abs() < tol => "real".into(),
                None => "complex".into(),
            };
            table.push(vec![rank.to_string(), num(e.re), num(e.im), class]);
        }
        n_real_modes = q.iter().filter(|e| e.im.abs() < tol).count();
        edges = report
            .edge_modes
            .iter()
            .map(|r| EdgeJson { kind: r.kind.to_string(), re: r.energy.re, im: r.energy.im, loc_len: r.localization_length })
            .collect();
        eps = q.clone();
    }
    let diag = if lat.sites >= 8 { Some(classify_params(p, lat.sites, &opts, &PhaseThresholds::default())?) } else { None };
    let phase = diag.as_ref().map(|d| d.label.to_string());
    let mut observations = vec![
        obs("phase", "", phase.clone().unwrap_or_default()),
        obs("n_real_modes", "", n_real_modes),
        obs("zero_pairs", "", diag.as_ref().map_or(0, |d| d.zero_pairs)),
        obs("pi_pairs", "", diag.as_ref().map_or(0, |d| d.pi_pairs)),
    ];
    let mut abs: Vec<f64> = eps.iter().map(|e| e.norm()).collect();
    abs.sort_by(f64::total_cmp);
    observations.extend(abs.iter().enumerate().map(|(i, a)| obs("abs_eps", i, num(*a))));
    let json = json!({ "n_real_modes": n_real_modes, "edge_modes": edges, "phase": phase });
    Ok(TaskOutput { table, summary_table: None, json: Some(json), observations })
}

fn evolve(raw: &RawConfig, dump: Option<&Path>) -> Result<TaskOutput> {
    let run = RunConfig::from_raw(raw)?;
    if let Some(dir) = dump {
        std::fs::create_dir_all(dir)?;
    }
    let trace = stroboscopic_run_with(&run.params, &run.lattice, &run.quench, &run.subsystem, |f| {
        if let Some(dir) = dump {
            write_matrix(&dir.join(format!("c_{:05}", f.period_count)), &f.correlations().c, Some(f.period_count))?;
        }
        Ok(())
    })?;
    let mut table = Table::new(&["period", "S_A", "norm_log", "purity_residual"]);
    let mut observations = Vec::new();
    for r in &trace.rows {
        table.push(vec![r.period.to_string(), num(r.s_a), num(r.norm_log), num(r.purity_residual)]);
        observations.push(obs("S_A", r.period, num(r.s_a)));
        observations.push(obs("norm_log", r.period, num(r.norm_log)));
        observations.push(obs("purity_residual", r.period, num(r.purity_residual)));
    }
    Ok(TaskOutput { table, summary_table: None, json: None, observations })
}

fn sizes(raw: &RawConfig) -> Result<Vec<usize>> {
    let text = raw.get("sizes").ok_or_else(|| Error::Validation("missing key `sizes`".into()))?;
    let out: Vec<usize> = text
        .split(',')
        .map(|s| s.trim().parse().map_err(|_| Error::Validation(format!("`sizes`: bad entry `{s}`"))))
        .collect::<Result<_>>()?;
    if out.is_empty() || out.windows(2).any(|w| w[1] <= w[0]) {
        return invalid("`sizes` must be strictly increasing");
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Method {
    Auto,
    Steady,
    Evolve,
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Method::Auto),
            "steady" => Ok(Method::Steady),
            "evolve" => Ok(Method::Evolve),
            o => invalid(format!("method must be auto, steady or evolve, got `{o}`")),
        }
    }
}

/// Time average of `S_A` over the last L/2 of 2L periods.
fn evolved_entropy(run: &RunConfig, sites: &[usize]) -> Result<f64> {
    let l = run.lattice.sites;
    let kicks = FloquetKicks::new(&run.params, &run.lattice);
    let mut f = initial_frame(&run.quench, &run.lattice)?;
    let (total, keep) = (2 * l, (l / 2).max(1));
    let mut acc = 0.0;
    for t in 0..total {
        f.step(&kicks)?;
        if t >= total - keep {
            acc += entropy_from_cprime(&f.cprime_block(sites))?.0;
        }
    }
    Ok(acc / keep as f64)
}

fn scaling(raw: &RawConfig) -> Result<TaskOutput> {
    let ratio = raw.f64("ratio")?.unwrap_or(0.1);
    if !(ratio > 0.0 && ratio <= 1.0) {
        return invalid("`ratio` must lie in (0, 1]");
    }
    let method: Method = raw.get("method").unwrap_or("auto").parse()?;
    let mut table = Table::new(&["L", "L_A", "S_A"]);
    let mut observations = Vec::new();
    let mut points = Vec::new();
    for l in sizes(raw)? {
        let la = ((ratio * l as f64).round() as usize).max(1);
        let mut r = raw.clone();
        r.set("L", l);
        r.set("L_A", la);
        r.set("sub_start", 1);
        if r.get("bc").is_none() {
            r.set("bc", "pbc");
        }
        let run = RunConfig::from_raw(&r)?;
        let sites = run.subsystem.site_indices(&run.lattice)?;
        let steady = || -> Result<f64> {
            let f = steady_state_frame(&TransferMatrix::for_params(&run.params, &run.lattice)?)?;
            Ok(entropy_from_cprime(&f.cprime_block(&sites))?.0)
        };
        let s = match method {
            Method::Steady => steady()?,
            Method::Evolve => evolved_entropy(&run, &sites)?,
            Method::Auto => match steady() {
                Ok(s) => s,
                Err(_) => evolved_entropy(&run, &sites)?,
            },
        };
        table.push(vec![l.to_string(), la.to_string(), num(s)]);
        observations.push(obs("S_A", l, num(s)));
        points.push((l, la, s));
    }
    let fit = fit_scaling(&points, &ScalingThresholds::default())?;
    observations.extend([
        obs("a", "", num(fit.a)),
        obs("b", "", num(fit.b)),
        obs("residual", "", num(fit.residual)),
        obs("law", "", fit.law),
    ]);
    let json = json!({ "a": fit.a, "b": fit.b, "residual": fit.residual, "law": fit.law.to_string() });
    Ok(TaskOutput { table, summary_table: None, json: Some(json), observations })
}

fn beta_grid(raw: &RawConfig) -> Result<Vec<f64>> {
    let need = |k: &str| raw.f64(k)?.ok_or_else(|| Error::Validation(format!("missing key `{k}`")));
    let (start, stop) = (need("beta_J_start")?, need("beta_J_stop")?);
    let count = raw.usize("beta_J_count")?.ok_or_else(|| Error::Validation("missing key `beta_J_count`".into()))?;
    match count {
        0 => invalid("`beta_J_count` must be positive"),
        1 => Ok(vec![start]),
        n => Ok((0..n).map(|i| start + (stop - start) * i as f64 / (n - 1) as f64).collect()),
    }
}

fn tee_scan(raw: &RawConfig) -> Result<TaskOutput> {
    let factor = raw.usize("tee_periods")?.unwrap_or(4).max(1);
    let betas = beta_grid(raw)?;
    let mut table = Table::new(&["L", "beta_J", "S_top"]);
    let mut observations = Vec::new();
    let mut curves: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    for l in sizes(raw)? {
        let part = TeePartition::quarters(l)?;
        for &bj in &betas {
            let mut r = raw.clone();
            r.set("L", l);
            r.set("beta_J", num(bj));
            r.set("bc", "obc");
            r.set("n_periods", factor * l);
            let run = RunConfig::from_raw(&r)?;
            let kicks = FloquetKicks::new(&run.params, &run.lattice);
            let mut f = initial_frame(&run.quench, &run.lattice)?;
            for _ in 0..run.quench.n_periods {
                f.step(&kicks)?;
            }
            let s = tee(&f.correlations(), &part)?.s_top;
            table.push(vec![l.to_string(), num(bj), num(s)]);
            observations.push(obs("S_top", format!("{l}:{}", num(bj)), num(s)));
            curves.entry(l).or_default().push((bj, s));
        }
    }
    let json = if curves.len() >= 3 && betas.len() >= 2 {
        let c = tee_collapse(&curves, &CollapseGrid::default())?;
        observations.extend([obs("beta_J0", "", num(c.beta_j0)), obs("nu", "", num(c.nu)), obs("residual", "", num(c.collapse_residual))]);
        json!({ "beta_J0": c.beta_j0, "nu": c.nu, "residual": c.collapse_residual })
    } else {
        json!({ "beta_J0": null, "nu": null, "residual": null })
    };
    Ok(TaskOutput { table, summary_table: None, json: Some(json), observations })
}

fn spin_quench(raw: &RawConfig) -> Result<TaskOutput> {
    let run = RunConfig::from_raw(raw)?;
    let trace = quench_experiment(&run.params, &run.lattice, &run.quench)?;
    let mut table = Table::new(&["period", "site", "Sx"]);
    let mut summary = Table::new(&["period", "SxSx_edge", "ghz_overlap"]);
    let mut observations = Vec::new();
    for (t, e) in trace.entries.iter().enumerate() {
        for (i, sx) in e.sx.iter().enumerate() {
            table.push(vec![t.to_string(), (i + 1).to_string(), num(*sx)]);
            observations.push(obs("Sx", format!("{t}:{}", i + 1), num(*sx)));
        }
        summary.push(vec![t.to_string(), num(e.sxsx_edge), num(e.ghz_overlap)]);
        observations.push(obs("SxSx_edge", t, num(e.sxsx_edge)));
        observations.push(obs("ghz_overlap", t, num(e.ghz_overlap)));
    }
    Ok(TaskOutput { table, summary_table: Some(summary), json: None, observations })
}

fn cft_compare(raw: &RawConfig) -> Result<TaskOutput> {
    let c = raw.f64("c")?.unwrap_or(0.5);
    let epsilon = raw.f64("epsilon")?.unwrap_or(0.185);
    let eta = raw.f64("eta")?.unwrap_or(0.1);
    let l = raw.usize("l")?.unwrap_or(10);
    let dt = raw.f64("dt")?.unwrap_or(0.05);
    let t_max = raw.f64("t_max")?.unwrap_or(1.5 * l as f64);
    let amplitude = raw.f64("amplitude")?.unwrap_or(0.5);
    let sites = raw.usize("L")?.unwrap_or(10 * l);
    if !(dt > 0.0 && t_max >= 0.0) || t_max / dt > 1e6 {
        return invalid("need dt > 0, t_max >= 0 and at most 1e6 time steps");
    }
    if l == 0 || l > sites {
        return invalid(format!("subsystem length l = {l} must lie in [1, L = {sites}]"));
    }
    let grid: Vec<f64> = (0..=(t_max / dt + 1e-9).floor() as usize).map(|i| i as f64 * dt).collect();
    let cp = CftParams::new(c, epsilon, eta, l as f64, 1)?;
    let curve = entropy_curve(&cp, &grid, &ValidityBounds::default())?;
    let initial: InitialState = raw.get("initial_state").unwrap_or("all-up").parse()?;
    let q = QuenchConfig::new(initial, 0);
    let lat = LatticeSpec::new(sites, BoundaryCondition::periodic(q.initial.fermion_parity(sites)?))?;
    let coupling = nhtfim::linalg::C64::new(amplitude, -amplitude * eta);
    let p = ModelParams::from_complex(coupling, coupling)?;
    let trace = continuous_entropy_trace(&p, &lat, &q, &SubsystemSpec::new(1, l), &grid)?;
    let s0 = trace.first().map_or(0.0, |x| x.s_a);
    let mut table = Table::new(&["t", "S_cft", "S_numeric", "valid"]);
    let mut observations = Vec::new();
    for (i, pt) in trace.iter().enumerate() {
        let sn = pt.s_a - s0;
        table.push(vec![num(pt.t), num(curve.s_a[i]), num(sn), curve.validity_mask[i].to_string()]);
        observations.push(obs("S_cft", num(pt.t), num(curve.s_a[i])));
        observations.push(obs("S_numeric", num(pt.t), num(sn)));
    }
    let numeric: Vec<(f64, f64)> = trace.iter().map(|x| (x.t, x.s_a)).collect();
    let json = serde_json::to_value(compare_to_numerics(&curve, &numeric)?)?;
    Ok(TaskOutput { table, summary_table: None, json: Some(json), observations })
}
