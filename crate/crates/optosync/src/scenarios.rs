//! Scenario execution and artifact writing.

use crate::config::{Panel, Region, RunConfig, Scenario};
use crate::export::{self, write_json};
use crate::parallel;
use crate::svg::{self, HeatmapStyle, Series};
use optosync_core::dynamics::{classify_attractor, AttractorKind, AttractorReport};
use optosync_core::measures::measure_series;
use optosync_core::sweep::RegionCell;
use optosync_core::{
    classify_logic, evolve, find_logic_regions, largest_lyapunov, CellStatus, CovState, Gate, LogicReport,
    LyapunovConfig, LyapunovResult, MeanState, SweepField,
};
use serde::Serialize;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

pub const TOOL: &str = "optosync";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Something that did not complete.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    /// Panel label, corner or cell the failure belongs to.
    pub item: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub reason: String,
}

/// Manifest written next to the artifacts of every run.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub scenario: Scenario,
    /// `ok` or `failed`.
    pub status: &'static str,
    pub workers: usize,
    pub artifacts: Vec<String>,
    pub failures: Vec<Failure>,
    pub config: RunConfig,
}

#[derive(Debug)]
pub struct Outcome {
    pub manifest: Manifest,
    pub output_dir: PathBuf,
}

impl Outcome {
    /// 0 on success, 3 when any part of the run diverged or failed
    /// numerically.
    pub fn exit_code(&self) -> u8 {
        if self.manifest.failures.is_empty() {
            0
        } else {
            3
        }
    }
}

/// Header embedded in every JSON artifact.
#[derive(Serialize)]
struct Tagged<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    scenario: Scenario,
    #[serde(flatten)]
    body: T,
    config: &'a RunConfig,
}

struct Runner<'a> {
    cfg: &'a RunConfig,
    scenario: Scenario,
    dir: &'a Path,
    workers: usize,
    artifacts: Vec<String>,
    failures: Vec<Failure>,
}

impl<'a> Runner<'a> {
    fn path(&mut self, name: &str) -> PathBuf {
        self.artifacts.push(name.to_string());
        self.dir.join(name)
    }

    fn json<T: Serialize>(&mut self, name: &str, body: T) -> io::Result<()> {
        let p = self.path(name);
        write_json(
            &p,
            &Tagged {
                tool: TOOL,
                version: VERSION,
                scenario: self.scenario,
                body,
                config: self.cfg,
            },
        )
    }

    fn svg(&mut self, name: &str, doc: String) -> io::Result<()> {
        let p = self.path(name);
        fs::write(p, doc)
    }

    fn csv(&mut self, name: &str, write: impl FnOnce(fs::File) -> io::Result<()>) -> io::Result<()> {
        let p = self.path(name);
        write(fs::File::create(p)?)
    }

    fn fail(&mut self, item: impl Into<String>, at: Option<(f64, f64)>, reason: impl Into<String>) {
        self.failures.push(Failure {
            item: item.into(),
            mu: at.map(|a| a.0),
            lambda: at.map(|a| a.1),
            reason: reason.into(),
        });
    }
}

/// Run `scenario` and write all artifacts plus `manifest.json` into
/// `output_dir`. Only I/O problems are returned as errors; numerical
/// failures are recorded in the manifest.
pub fn run(cfg: &RunConfig, scenario: Scenario, output_dir: &Path, workers: usize) -> io::Result<Outcome> {
    fs::create_dir_all(output_dir)?;
    let mut effective = cfg.clone();
    effective.scenario = Some(scenario);
    effective.output_dir = output_dir.to_path_buf();
    let mut r = Runner {
        cfg: &effective,
        scenario,
        dir: output_dir,
        workers,
        artifacts: Vec::new(),
        failures: Vec::new(),
    };
    match scenario {
        Scenario::Simulate => simulate(&mut r)?,
        Scenario::SweepLyapunov => {
            sweep_lyapunov(&mut r)?;
        }
        Scenario::SweepSpbar => sweep_spbar(&mut r)?,
        Scenario::Logic => logic(&mut r)?,
        Scenario::CalibrateDrive => calibrate(&mut r)?,
    }
    let manifest = Manifest {
        tool: TOOL,
        version: VERSION,
        scenario,
        status: if r.failures.is_empty() { "ok" } else { "failed" },
        workers,
        artifacts: r.artifacts,
        failures: r.failures,
        config: effective.clone(),
    };
    write_json(&output_dir.join("manifest.json"), &manifest)?;
    Ok(Outcome {
        manifest,
        output_dir: output_dir.to_path_buf(),
    })
}

#[derive(Serialize)]
struct PanelLyapunov<'a> {
    panel: &'a Panel,
    result: LyapunovResult,
}

fn simulate(r: &mut Runner<'_>) -> io::Result<()> {
    let cfg = r.cfg;
    let init = MeanState::with_phase_offset(cfg.simulate.beta, cfg.simulate.theta0);
    let vacuum = CovState::vacuum();
    let mut thetas: Vec<(String, Vec<f64>, Vec<f64>)> = Vec::new();
    for panel in cfg.panels() {
        let params = cfg.params.with_coupling(panel.mu, panel.lambda);
        let at = Some((panel.mu, panel.lambda));
        let cov = cfg.simulate.covariance.then_some(&vacuum);
        let traj = match evolve(&params, &init, cov, &cfg.integrator) {
            Ok(t) => t,
            Err(e) => {
                r.fail(&panel.label, at, e.to_string());
                continue;
            }
        };
        if let Some(reason) = &traj.terminated_early {
            r.fail(&panel.label, at, reason.clone());
        }
        let label = panel.label.clone();
        r.csv(&format!("trajectory_{label}.csv"), |f| export::write_trajectory_csv(f, &traj))?;
        match measure_series(&traj, &cfg.measure) {
            Ok(m) => {
                r.csv(&format!("measures_{label}.csv"), |f| export::write_measures_csv(f, &m))?;
                if cfg.render {
                    if let (Some(sc), Some(sp)) = (&m.sc_prime, &m.sp_prime) {
                        let doc = svg::render_series(
                            &format!("Second-order measures, {label} (μ={}, λ={})", panel.mu, panel.lambda),
                            "t",
                            "measure",
                            &[
                                Series { label: "S_c′", x: &m.times, y: sc },
                                Series { label: "S_p′", x: &m.times, y: sp },
                            ],
                        );
                        r.svg(&format!("measures_{label}.svg"), doc)?;
                    }
                }
                thetas.push((label.clone(), m.times, m.theta));
            }
            Err(e) => r.fail(&label, at, e.to_string()),
        }
        if cfg.simulate.lyapunov {
            let lcfg = LyapunovConfig {
                theta0: cfg.simulate.theta0,
                beta: cfg.simulate.beta,
                ..cfg.lyapunov
            };
            match largest_lyapunov(&params, &init, &lcfg) {
                Ok(result) => r.json(
                    &format!("lyapunov_{label}.json"),
                    PanelLyapunov { panel: &panel, result },
                )?,
                Err(e) => r.fail(&label, at, format!("lyapunov: {e}")),
            }
        }
    }
    if cfg.render && !thetas.is_empty() {
        let series: Vec<Series<'_>> = thetas
            .iter()
            .map(|(l, t, th)| Series { label: l, x: t, y: th })
            .collect();
        let doc = svg::render_series("Phase error θ(t)", "t", "θ (rad)", &series);
        r.svg("theta.svg", doc)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepHeader<'a> {
    kind: optosync_core::FieldKind,
    grid: optosync_core::GridSpec,
    cells: usize,
    ok: usize,
    marginal: usize,
    divergent: usize,
    data: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    maximum: Option<CellValue>,
}

#[derive(Debug, Clone, Copy, Serialize)]
struct CellValue {
    mu: f64,
    lambda: f64,
    value: f64,
}

fn record_sweep(r: &mut Runner<'_>, name: &str, field: &SweepField, style: HeatmapStyle, title: &str) -> io::Result<()> {
    let count = |s: CellStatus| field.status.iter().filter(|x| **x == s).count();
    let csv_name = format!("{name}.csv");
    r.csv(&csv_name, |f| export::write_sweep_csv(f, field))?;
    let maximum = (field.kind == optosync_core::FieldKind::SpBar)
        .then(|| field.argmax())
        .flatten()
        .map(|k| {
            let (mu, lambda) = field.grid.point(k);
            CellValue { mu, lambda, value: field.values[k] }
        });
    r.json(
        &format!("{name}.json"),
        SweepHeader {
            kind: field.kind,
            grid: field.grid,
            cells: field.values.len(),
            ok: count(CellStatus::Ok),
            marginal: count(CellStatus::Marginal),
            divergent: count(CellStatus::Divergent),
            data: &csv_name,
            maximum,
        },
    )?;
    for k in field.failed_cells() {
        let reason = field.failures[k].clone().unwrap_or_else(|| "divergent".to_string());
        r.fail(format!("cell {k}"), Some(field.grid.point(k)), reason);
    }
    if r.cfg.render {
        r.svg(&format!("{name}.svg"), svg::render_heatmap(field, style, title))?;
    }
    Ok(())
}

fn sweep_lyapunov(r: &mut Runner<'_>) -> io::Result<Option<SweepField>> {
    let cfg = r.cfg;
    match parallel::sweep_lyapunov(&cfg.params, &cfg.grid, &cfg.lyapunov, r.workers) {
        Ok(field) => {
            record_sweep(r, "sweep_lyapunov", &field, HeatmapStyle::Sign, "Largest Lyapunov exponent of θ")?;
            Ok(Some(field))
        }
        Err(e) => {
            r.fail("sweep", None, e.to_string());
            Ok(None)
        }
    }
}

fn sweep_spbar(r: &mut Runner<'_>) -> io::Result<()> {
    let cfg = r.cfg;
    match parallel::sweep_sp_bar(&cfg.params, &cfg.grid, &cfg.sp_bar, r.workers) {
        Ok(field) => record_sweep(r, "sweep_spbar", &field, HeatmapStyle::Continuous, "Time-averaged S_p′"),
        Err(e) => {
            r.fail("sweep", None, e.to_string());
            Ok(())
        }
    }
}

/// Summary of the cells realizing one gate.
#[derive(Debug, Clone, Serialize)]
pub struct RegionSummary {
    pub gate: Gate,
    pub count: usize,
    /// Bounding box of the found cells.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Region>,
    /// Found cells inside the target window.
    pub in_target: usize,
    pub cells: Vec<[f64; 2]>,
}

pub fn summarize_region(gate: Gate, cells: &[RegionCell], target: &Region) -> RegionSummary {
    let bounds = (!cells.is_empty()).then(|| {
        let f = |g: fn(&RegionCell) -> f64, pick: fn(f64, f64) -> f64| {
            cells.iter().map(g).reduce(pick).unwrap()
        };
        Region {
            mu_min: f(|c| c.mu, f64::min),
            mu_max: f(|c| c.mu, f64::max),
            lambda_min: f(|c| c.lambda, f64::min),
            lambda_max: f(|c| c.lambda, f64::max),
        }
    });
    RegionSummary {
        gate,
        count: cells.len(),
        bounds,
        in_target: cells.iter().filter(|c| target.contains(c.mu, c.lambda)).count(),
        cells: cells.iter().map(|c| [c.mu, c.lambda]).collect(),
    }
}

#[derive(Serialize)]
struct LogicBody {
    mu_on: f64,
    lambda_on: f64,
    truth_table: Option<LogicReport>,
    target: Region,
    regions: Vec<RegionSummary>,
}

fn logic(r: &mut Runner<'_>) -> io::Result<()> {
    let cfg = r.cfg;
    let (mu_on, lambda_on) = (cfg.logic.mu_on, cfg.logic.lambda_on);
    let truth_table = match classify_logic(&cfg.params, mu_on, lambda_on, &cfg.lyapunov) {
        Ok(rep) => Some(rep),
        Err(e) => {
            r.fail("truth table", Some((mu_on, lambda_on)), e.to_string());
            None
        }
    };
    let mut regions = Vec::new();
    if cfg.logic.search_regions {
        if let Some(field) = sweep_lyapunov(r)? {
            for gate in [Gate::And, Gate::Or, Gate::Xor] {
                match find_logic_regions(&field, gate) {
                    Ok(cells) => regions.push(summarize_region(gate, &cells, &cfg.logic.target)),
                    Err(e) => r.fail(format!("{} region", gate.name()), None, e.to_string()),
                }
            }
        }
    }
    r.json(
        "logic.json",
        LogicBody {
            mu_on,
            lambda_on,
            truth_table,
            target: cfg.logic.target,
            regions,
        },
    )
}

#[derive(Serialize)]
struct DriveEntry {
    #[serde(rename = "E")]
    drive: f64,
    kind: AttractorKind,
    bounded: bool,
    divergent: bool,
    /// Bounded but neither stationary nor periodic.
    irregular: bool,
    chosen: bool,
    report: AttractorReport,
}

#[derive(Serialize)]
struct CalibrationBody {
    mu: f64,
    lambda: f64,
    chosen_drive: f64,
    entries: Vec<DriveEntry>,
}

fn calibrate(r: &mut Runner<'_>) -> io::Result<()> {
    let cfg = r.cfg;
    let init = MeanState::with_phase_offset(cfg.calibrate.beta, cfg.calibrate.theta0);
    let mut entries = Vec::new();
    for &drive in &cfg.calibrate.drives {
        let params = cfg.params.with_drive(drive);
        match classify_attractor(&params, &init, &cfg.integrator, &cfg.calibrate.attractor) {
            Ok(report) => entries.push(DriveEntry {
                drive,
                kind: report.kind,
                bounded: report.kind != AttractorKind::Divergent,
                divergent: report.kind == AttractorKind::Divergent,
                irregular: report.kind == AttractorKind::Irregular,
                chosen: drive == cfg.params.drive,
                report,
            }),
            Err(e) => r.fail(format!("E={drive}"), None, e.to_string()),
        }
    }
    r.json(
        "calibrate_drive.json",
        CalibrationBody {
            mu: cfg.params.mu,
            lambda: cfg.params.lambda,
            chosen_drive: cfg.params.drive,
            entries,
        },
    )
}
