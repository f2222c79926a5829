//! Seeded multi-trial campaigns and the single-design `check` / `trace` tools.
//!
//! A campaign runs `trials` independent searches with seeds `seed + i` and
//! writes, under the output directory:
//!
//! * `trial_{i}_convergence.csv`, `trial_{i}_best.json`
//! * `trial_{i}_path.csv` (four-bar) or `trial_{i}_trajectory.csv` (hydraulic)
//! * `report.csv` and the fixed-width `report.txt`

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::fourbar::{self, FourBar, GrashofClass, Pairing, PrecisionPath, SynthesisObjective};
use crate::hydraulic::{self, PlantParams, TransmissionDesign, TransmissionObjective};
use crate::output::{fmt_g9, round_g9, write_convergence, write_json};
use crate::parallel;
use crate::search::{run_trials, Objective, SearchConfig, SearchResult, Termination};
use crate::space::SearchSpace;

/// Points per traced coupler curve written for each four-bar trial.
pub const PATH_RESOLUTION: usize = 360;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    Fourbar,
    Hydraulic,
}

impl FromStr for Problem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fourbar" => Ok(Self::Fourbar),
            "hydraulic" => Ok(Self::Hydraulic),
            _ => Err(Error::InvalidConfig(format!("unknown problem {s:?} (expected fourbar or hydraulic)"))),
        }
    }
}

impl Problem {
    pub fn design_columns(self) -> &'static [&'static str] {
        match self {
            Self::Fourbar => &fourbar::DESIGN_COLUMNS,
            Self::Hydraulic => &hydraulic::DESIGN_COLUMNS,
        }
    }

    fn table_headers(self) -> &'static [&'static str] {
        match self {
            Self::Fourbar => &["RUN", "a12", "a23", "a34", "a41", "a25", "alpha", "OBFN", "NO. EVALS"],
            Self::Hydraulic => &["RUN", "PUMP SIZE", "MOTOR SIZE", "INTEGRAL GAIN", "OBFN", "NO. EVALS"],
        }
    }

    pub fn space(self) -> SearchSpace {
        match self {
            Self::Fourbar => SynthesisObjective::space(),
            Self::Hydraulic => TransmissionObjective::space(),
        }
    }

    /// Search settings used when a run configuration does not override them.
    pub fn default_search(self) -> SearchConfig {
        match self {
            Self::Fourbar => SearchConfig {
                tenure: 12,
                best_size: 2,
                reduction_multiple: 6,
                initial_steps: Some(vec![20.0, 20.0, 20.0, 20.0, 20.0, 36.0]),
                intensify_after: 3,
                diversify_after: 50,
                reduce_after: 60,
                budget: 5000,
                ..SearchConfig::default()
            },
            Self::Hydraulic => SearchConfig { budget: 1500, ..SearchConfig::default() },
        }
    }
}

/// Campaign description, usually read from a JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: Problem,
    pub trials: usize,
    /// Trial `i` runs with seed `seed + i`.
    pub seed: u64,
    /// Fields overriding the problem's default [`SearchConfig`].
    pub search: serde_json::Map<String, Value>,
    /// Precision points (`x,y` CSV). The built-in generator trace when absent.
    pub target: Option<PathBuf>,
    pub pairing: Pairing,
    /// Plant parameter overrides (JSON).
    pub plant: Option<PathBuf>,
    /// Integration step of the hydraulic simulation, seconds.
    pub dt: f64,
    pub out: PathBuf,
    /// Worker threads; all cores when absent.
    pub workers: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: Problem::Fourbar,
            trials: 5,
            seed: 1,
            search: Default::default(),
            target: None,
            pairing: Pairing::Cyclic,
            plant: None,
            dt: hydraulic::DEFAULT_DT,
            out: PathBuf::from("out"),
            workers: None,
        }
    }
}

/// Command-line values that take precedence over the configuration file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub problem: Option<Problem>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub budget: Option<usize>,
    pub out: Option<PathBuf>,
    pub target: Option<PathBuf>,
    pub plant: Option<PathBuf>,
    pub pairing: Option<Pairing>,
    pub workers: Option<usize>,
}

impl RunConfig {
    /// Reads a configuration; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn from_file<P: AsRef<Path>>(path: P) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut cfg: Self = serde_json::from_str(&text)?;
        let dir = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.target, &mut cfg.plant].into_iter().flatten() {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        if cfg.out.is_relative() {
            cfg.out = dir.join(&cfg.out);
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.problem {
            self.problem = v;
        }
        if let Some(v) = o.trials {
            self.trials = v;
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.budget {
            self.search.insert("budget".into(), v.into());
        }
        if let Some(v) = &o.out {
            self.out = v.clone();
        }
        if let Some(v) = &o.target {
            self.target = Some(v.clone());
        }
        if let Some(v) = &o.plant {
            self.plant = Some(v.clone());
        }
        if let Some(v) = o.pairing {
            self.pairing = v;
        }
        if let Some(v) = o.workers {
            self.workers = Some(v);
        }
    }

    /// The problem defaults with the `search` overrides merged in.
    pub fn search_config(&self) -> Result<SearchConfig> {
        let mut merged = serde_json::to_value(self.problem.default_search())?;
        let obj = merged.as_object_mut().expect("struct serializes to an object");
        for (k, v) in &self.search {
            if k == "seed" {
                return Err(Error::InvalidConfig("set the campaign seed, not search.seed".into()));
            }
            obj.insert(k.clone(), v.clone());
        }
        let cfg: SearchConfig =
            serde_json::from_value(merged).map_err(|e| Error::InvalidConfig(format!("search: {e}")))?;
        cfg.resolve_steps(&self.problem.space())?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidConfig("workers must be at least 1".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidConfig(format!("dt = {} must be positive", self.dt)));
        }
        self.search_config().map(drop)
    }

    fn load_target(&self) -> Result<PrecisionPath> {
        match &self.target {
            Some(p) => PrecisionPath::read_csv(p),
            None => Ok(fourbar::run1_target()),
        }
    }

    fn load_plant(&self) -> Result<PlantParams> {
        match &self.plant {
            Some(p) => PlantParams::from_json_file(p),
            None => Ok(PlantParams::default()),
        }
    }
}

/// Best design of one trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialBest {
    pub design: Vec<f64>,
    pub obfn: f64,
    pub feasible: bool,
    pub evaluations: usize,
    pub termination: Termination,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRow {
    pub trial: usize,
    pub seed: u64,
    /// The search error message when the trial failed.
    pub outcome: std::result::Result<TrialBest, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub problem: Problem,
    pub rows: Vec<TrialRow>,
}

impl RunReport {
    fn successes(&self) -> impl Iterator<Item = (usize, &TrialBest)> {
        self.rows.iter().filter_map(|r| r.outcome.as_ref().ok().map(|b| (r.trial, b)))
    }

    /// Trial with the lowest objective, preferring feasible designs.
    pub fn best_trial(&self) -> Option<usize> {
        self.successes()
            .min_by(|a, b| (!a.1.feasible, a.1.obfn).partial_cmp(&(!b.1.feasible, b.1.obfn)).expect("finite objective"))
            .map(|(t, _)| t)
    }

    pub fn median_obfn(&self) -> Option<f64> {
        let mut v: Vec<f64> = self.successes().map(|(_, b)| b.obfn).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let n = v.len();
        Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
    }

    pub fn write_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let cols = self.problem.design_columns();
        let mut header = vec!["trial"];
        header.extend_from_slice(cols);
        header.extend(["obfn", "n_evals"]);
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![r.trial.to_string()];
            match &r.outcome {
                Ok(b) => {
                    rec.extend(b.design.iter().map(|&v| fmt_g9(v)));
                    rec.push(fmt_g9(b.obfn));
                    rec.push(b.evaluations.to_string());
                }
                Err(_) => rec.extend(std::iter::repeat_n(String::new(), cols.len() + 2)),
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Fixed-width results table followed by the campaign summary.
    pub fn table(&self) -> String {
        let headers = self.problem.table_headers();
        let mut cells: Vec<Vec<String>> = vec![headers.iter().map(|s| s.to_string()).collect()];
        for r in &self.rows {
            let mut row = vec![(r.trial + 1).to_string()];
            match &r.outcome {
                Ok(b) => {
                    row.extend(b.design.iter().map(|&v| fmt_g9(v)));
                    row.push(fmt_g9(b.obfn));
                    row.push(b.evaluations.to_string());
                }
                Err(e) => row.push(format!("failed: {e}")),
            }
            cells.push(row);
        }
        let mut widths = vec![0; headers.len()];
        for row in cells.iter().filter(|r| r.len() == headers.len()) {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.len());
            }
        }
        let mut out = String::new();
        for row in &cells {
            let line: Vec<String> =
                row.iter()
                    .enumerate()
                    .map(|(i, c)| {
                        if i < widths.len() && i + 1 < row.len() {
                            format!("{c:>w$}", w = widths[i])
                        } else {
                            c.clone()
                        }
                    })
                    .collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
        }
        out.push('\n');
        match self.best_trial() {
            Some(t) => {
                let b = self.rows[t].outcome.as_ref().expect("best trial succeeded");
                let note = if b.feasible { "" } else { " (infeasible)" };
                let _ = writeln!(out, "best run: {} (obfn {}){note}", t + 1, fmt_g9(b.obfn));
            }
            None => out.push_str("best run: none\n"),
        }
        match self.median_obfn() {
            Some(m) => {
                let _ = writeln!(out, "median obfn: {}", fmt_g9(m));
            }
            None => out.push_str("median obfn: none\n"),
        }
        let failed = self.rows.iter().filter(|r| r.outcome.is_err()).count();
        if failed > 0 {
            let _ = writeln!(out, "failed runs: {failed}");
        }
        out
    }
}

fn summarize(r: &SearchResult) -> TrialBest {
    TrialBest {
        design: r.best.iter().map(|&v| round_g9(v)).collect(),
        obfn: round_g9(r.best_value),
        feasible: r.feasible,
        evaluations: r.evaluations,
        termination: r.termination,
    }
}

#[derive(Serialize)]
struct BestFile<'a, D: Serialize> {
    trial: usize,
    seed: u64,
    design: D,
    obfn: f64,
    feasible: bool,
    n_evals: usize,
    termination: Termination,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<&'a str>,
}

/// Runs the campaign and writes every artifact under `cfg.out`.
pub fn run_campaign(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    let search = cfg.search_config()?;
    std::fs::create_dir_all(&cfg.out)?;
    let space = cfg.problem.space();
    match cfg.problem {
        Problem::Fourbar => {
            let target = cfg.load_target()?;
            target.write_csv(cfg.out.join("target.csv"))?;
            let obj = SynthesisObjective::new(target, cfg.pairing);
            campaign(cfg, &search, &space, &obj, |dir, i, best| {
                let m = FourBar::from_design(best)?;
                match m.grashof_class()? {
                    GrashofClass::CrankRocker => {
                        m.write_trace(dir.join(format!("trial_{i}_path.csv")), PATH_RESOLUTION)?;
                        Ok((serde_json::to_value(m)?, None))
                    }
                    _ => Ok((serde_json::to_value(m)?, Some("not a crank-rocker; no path written"))),
                }
            })
        }
        Problem::Hydraulic => {
            let plant = cfg.load_plant()?;
            let obj = TransmissionObjective { plant: plant.clone(), dt: cfg.dt, duration: hydraulic::DEFAULT_DURATION };
            campaign(cfg, &search, &space, &obj, |dir, i, best| {
                let d = TransmissionDesign::from_design(best)?;
                let tr = hydraulic::simulate(d, &plant, cfg.dt, hydraulic::DEFAULT_DURATION)?;
                tr.write_csv(dir.join(format!("trial_{i}_trajectory.csv")))?;
                let note = tr.failed_at.map(|_| "simulation diverged; trajectory truncated");
                Ok((serde_json::to_value(d)?, note))
            })
        }
    }
}

fn campaign<O: Objective>(
    cfg: &RunConfig,
    search: &SearchConfig,
    space: &SearchSpace,
    obj: &O,
    artifact: impl Fn(&Path, usize, &[f64]) -> Result<(Value, Option<&'static str>)>,
) -> Result<RunReport> {
    let results = parallel::with_workers(cfg.workers, || run_trials(obj, space, search, cfg.seed, cfg.trials));
    let mut rows = Vec::with_capacity(results.len());
    for (i, res) in results.into_iter().enumerate() {
        let seed = cfg.seed.wrapping_add(i as u64);
        let outcome = match res {
            Ok(r) => {
                write_convergence(cfg.out.join(format!("trial_{i}_convergence.csv")), &r)?;
                let best = summarize(&r);
                let (design, note) = artifact(&cfg.out, i, &r.best)?;
                let file = BestFile {
                    trial: i,
                    seed,
                    design,
                    obfn: best.obfn,
                    feasible: best.feasible,
                    n_evals: best.evaluations,
                    termination: best.termination,
                    note,
                };
                write_json(cfg.out.join(format!("trial_{i}_best.json")), &file)?;
                Ok(best)
            }
            Err(e) => Err(e.to_string()),
        };
        rows.push(TrialRow { trial: i, seed, outcome });
    }
    let report = RunReport { problem: cfg.problem, rows };
    report.write_csv(cfg.out.join("report.csv"))?;
    std::fs::write(cfg.out.join("report.txt"), report.table())?;
    Ok(report)
}

/// A single design, as accepted by [`check`] and [`trace`]: a bare
/// mechanism or transmission object, or a trial's `best.json`.
#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Mechanism(FourBar),
    Transmission(TransmissionDesign),
}

impl Payload {
    pub fn parse(text: &str) -> Result<Self> {
        let mut v: Value = serde_json::from_str(text)?;
        if let Some(d) = v.get_mut("design") {
            v = d.take();
        }
        if let Ok(m) = serde_json::from_value::<FourBar>(v.clone()) {
            return Ok(Self::Mechanism(m));
        }
        if let Ok(d) = serde_json::from_value::<TransmissionDesign>(v.clone()) {
            return Ok(Self::Transmission(d));
        }
        Err(Error::InvalidConfig(format!(
            "expected a mechanism ({}) or a transmission design ({})",
            fourbar::DESIGN_COLUMNS.join(", "),
            hydraulic::DESIGN_COLUMNS.join(", ")
        )))
    }

    pub fn from_file<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub feasible: bool,
    pub message: String,
}

/// Grashof class of a mechanism, or bound compliance of a transmission design.
pub fn check(payload: &Payload) -> Result<CheckReport> {
    Ok(match payload {
        Payload::Mechanism(m) => {
            let class = m.grashof_class()?;
            CheckReport { feasible: class == GrashofClass::CrankRocker, message: class.to_string() }
        }
        Payload::Transmission(d) => {
            let v = d.bound_violations();
            CheckReport {
                feasible: v.is_empty(),
                message: if v.is_empty() {
                    "within bounds".into()
                } else {
                    format!("bound violation: {}", v.join("; "))
                },
            }
        }
    })
}

/// Writes the coupler path (`resolution` = number of points) or the
/// four-second trajectory (`resolution` = time step). Nothing is written for
/// an infeasible payload.
pub fn trace(payload: &Payload, resolution: Option<f64>, plant: &PlantParams, out: &Path) -> Result<usize> {
    match payload {
        Payload::Mechanism(m) => {
            let n = resolution.unwrap_or(PATH_RESOLUTION as f64);
            if !(n >= 1.0 && n.fract() == 0.0) {
                return Err(Error::Invalid(format!("path resolution {n} must be a positive integer")));
            }
            let class = m.grashof_class()?;
            if class != GrashofClass::CrankRocker {
                return Err(Error::NotCrankRocker(class));
            }
            m.write_trace(out, n as usize)?;
            Ok(n as usize)
        }
        Payload::Transmission(d) => {
            let v = d.bound_violations();
            if !v.is_empty() {
                return Err(Error::Invalid(format!("bound violation: {}", v.join("; "))));
            }
            let dt = resolution.unwrap_or(hydraulic::DEFAULT_DT);
            let tr = hydraulic::simulate(*d, plant, dt, hydraulic::DEFAULT_DURATION)?;
            if let Some(t) = tr.failed_at {
                return Err(Error::Diverged { t });
            }
            tr.write_csv(out)?;
            Ok(tr.samples.len())
        }
    }
}

/// Process exit status for an error: 2 for configuration and I/O problems,
/// 1 for infeasible or invalid designs.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) | Error::Csv(_) | Error::Json(_) | Error::InvalidConfig(_) | Error::InvalidSpace(_) => 2,
        _ => 1,
    }
}
