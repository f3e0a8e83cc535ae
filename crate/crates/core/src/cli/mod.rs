//! Batch pipeline behind the `complyap` binary: a TOML run configuration,
//! one function per subcommand and the mapping of failures to exit codes.
//!
//! Files written to the output directory:
//!
//! | stage       | files                                             |
//! |-------------|---------------------------------------------------|
//! | chainrec    | `cells.txt`, `chainrec.txt`                       |
//! | construct   | `stack.txt`, `grid.txt`, `construct_log.txt`, and `base.model` for a collocation base |
//! | verify      | `report.txt`, `report.machine`                    |
//! | export-grid | `grid.txt`                                        |

use crate::baselyap::{collocation_fit, grid_nodes, BaseSpec, LyapunovEvaluator, Wendland};
use crate::chainrec::{
    build_transition_graph_with, dist_to_recurrent, read_cell_file, recurrent_cells, write_cell_file, CellGrid,
    GraphParams, RecurrentSet,
};
use crate::construct::{
    construct_prescribed, load_stack, save_stack, ConstructConfig, ConstructionLog, PrescribedLyapunov, StackSpec,
};
use crate::flow::FlowMapConfig;
use crate::par::{self, Execution};
use crate::system::{Aabb, FieldSpec, RegionSpec, ScalarSpec};
use crate::verify::{verify_report, Tolerances, VerificationReport, VerifyConfig};
use crate::{Error, Point};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const CELLS_FILE: &str = "cells.txt";
pub const CHAINREC_SUMMARY: &str = "chainrec.txt";
pub const STACK_FILE: &str = "stack.txt";
pub const GRID_FILE: &str = "grid.txt";
pub const LOG_FILE: &str = "construct_log.txt";
pub const MODEL_FILE: &str = "base.model";
pub const REPORT_FILE: &str = "report.txt";
pub const MACHINE_FILE: &str = "report.machine";

/// A complete run description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    /// `[x_lo, x_hi, y_lo, y_hi]`: the cell grid, the verification
    /// sampling square and the default export window.
    pub domain: [f64; 4],
    pub system: FieldSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chainrec: Option<ChainrecSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub construct: Option<ConstructSection>,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub export: ExportSection,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainrecSection {
    /// Cell width.
    pub h: f64,
    /// Flight time `T`.
    pub time: f64,
    pub eps: f64,
    #[serde(default = "default_samples_per_cell")]
    pub samples_per_cell: usize,
}

fn default_samples_per_cell() -> usize {
    4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstructSection {
    pub k: RegionSpec,
    pub g: ScalarSpec,
    #[serde(default = "default_uk_margin")]
    pub uk_margin: f64,
    #[serde(default = "default_collar")]
    pub collar_fraction: f64,
    #[serde(default = "default_ms_q_step")]
    pub ms_q_step: f64,
    pub base: BaseConfig,
}

fn default_uk_margin() -> f64 {
    ConstructConfig::default().uk_margin
}

fn default_collar() -> f64 {
    ConstructConfig::default().collar_fraction
}

fn default_ms_q_step() -> f64 {
    ConstructConfig::default().ms_q_step
}

/// The base Lyapunov function. A collocation base is fitted on a node grid
/// over `bounds` (default: the run domain) with nodes closer than `hole`
/// to a recurrent cell removed; it therefore needs a `chainrec` section.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaseConfig {
    Fixture {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
    },
    Collocation {
        spacing: f64,
        hole: f64,
        smoothness: u32,
        support: f64,
        rhs: ScalarSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bounds: Option<[f64; 4]>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    pub samples: usize,
    pub fd_delta: f64,
    pub fd_delta_k: f64,
    pub recurrent_inflation: f64,
    pub box_q: usize,
    pub box_t: usize,
    pub seam_delta: f64,
    pub seam_halvings: u32,
    pub tolerances: Tolerances,
}

impl Default for VerifySection {
    fn default() -> Self {
        let v = VerifyConfig::default();
        VerifySection {
            samples: v.samples,
            fd_delta: v.fd_delta,
            fd_delta_k: v.fd_delta_k,
            recurrent_inflation: v.recurrent_inflation,
            box_q: v.box_q,
            box_t: v.box_t,
            seam_delta: v.seam_delta,
            seam_halvings: v.seam_halvings,
            tolerances: v.tol,
        }
    }
}

/// Evaluation grid of the `x y tau taudot` export.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExportSection {
    pub nx: usize,
    pub ny: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounds: Option<[f64; 4]>,
}

impl Default for ExportSection {
    fn default() -> Self {
        ExportSection { nx: 121, ny: 121, bounds: None }
    }
}

/// A failed run, classified by exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("construction failed: {0}")]
    Construction(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Construction(_) => 3,
        }
    }
}

fn config_err(e: Error) -> CliError {
    CliError::Config(e.to_string())
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl RunConfig {
    pub fn parse(text: &str) -> CliResult<RunConfig> {
        let c: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> CliResult<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        RunConfig::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configurations always serialize")
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if !Aabb::from_bounds(self.domain).is_valid() {
            return bad(format!("invalid domain {:?}", self.domain));
        }
        self.system.build().map_err(config_err)?;
        if self.threads == Some(0) {
            return bad("threads must be positive".into());
        }
        if let Some(c) = &self.chainrec {
            if !(c.h > 0.0 && c.time > 0.0 && c.eps > 0.0 && c.samples_per_cell > 0) {
                return bad(format!("chainrec parameters must be positive: {c:?}"));
            }
        }
        if let Some(c) = &self.construct {
            c.k.build().map_err(config_err)?;
            c.g.build().map_err(config_err)?;
            if !(c.uk_margin > 0.0 && c.collar_fraction > 0.0 && c.collar_fraction < 1.0 && c.ms_q_step > 0.0) {
                return bad("construct: need uk_margin > 0, 0 < collar_fraction < 1, ms_q_step > 0".into());
            }
            if let BaseConfig::Collocation { spacing, hole, smoothness, support, rhs, bounds } = &c.base {
                if !(*spacing > 0.0 && *hole >= 0.0 && *support > 0.0) {
                    return bad("collocation: need spacing > 0, hole >= 0, support > 0".into());
                }
                Wendland::new(*smoothness, *support).map_err(config_err)?;
                rhs.build().map_err(config_err)?;
                if bounds.is_some_and(|b| !Aabb::from_bounds(b).is_valid()) {
                    return bad(format!("invalid collocation bounds {bounds:?}"));
                }
                if self.chainrec.is_none() {
                    return bad("a collocation base needs a [chainrec] section".into());
                }
            }
        }
        let v = &self.verify;
        if !(v.samples > 0 && v.fd_delta > 0.0 && v.fd_delta_k > 0.0 && v.recurrent_inflation >= 0.0) {
            return bad("verify: samples and finite-difference steps must be positive".into());
        }
        if !(v.box_q > 1 && v.box_t > 1 && v.seam_delta > 0.0) {
            return bad("verify: need box_q > 1, box_t > 1, seam_delta > 0".into());
        }
        let e = &self.export;
        if e.nx < 2 || e.ny < 2 {
            return bad("export: need nx, ny >= 2".into());
        }
        if e.bounds.is_some_and(|b| !Aabb::from_bounds(b).is_valid()) {
            return bad(format!("invalid export bounds {:?}", e.bounds));
        }
        Ok(())
    }

    fn construct_section(&self) -> CliResult<&ConstructSection> {
        self.construct.as_ref().ok_or_else(|| CliError::Config("missing [construct] section".into()))
    }

    pub fn verify_config(&self, recurrent: Option<RecurrentSet>) -> VerifyConfig {
        let v = &self.verify;
        VerifyConfig {
            samples: v.samples,
            seed: self.seed,
            fd_delta: v.fd_delta,
            fd_delta_k: v.fd_delta_k,
            flow: FlowMapConfig::default(),
            domain: Aabb::from_bounds(self.domain),
            recurrent,
            recurrent_inflation: v.recurrent_inflation,
            box_q: v.box_q,
            box_t: v.box_t,
            seam_delta: v.seam_delta,
            seam_halvings: v.seam_halvings,
            tol: v.tolerances,
            exec: Execution::default(),
        }
    }
}

fn out_dir(cfg: &RunConfig) -> CliResult<&Path> {
    std::fs::create_dir_all(&cfg.out).map_err(|e| io_err(&cfg.out, e))?;
    Ok(&cfg.out)
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

#[derive(Clone, Debug)]
pub struct ChainrecOutcome {
    pub set: RecurrentSet,
    pub summary: String,
}

fn compute_recurrent(cfg: &RunConfig, c: &ChainrecSection) -> CliResult<RecurrentSet> {
    let x = cfg.system.build().map_err(config_err)?;
    let grid = CellGrid::new(Aabb::from_bounds(cfg.domain), c.h).map_err(config_err)?;
    let params =
        GraphParams { time: c.time, eps: c.eps, samples_per_cell: c.samples_per_cell, flow: FlowMapConfig::default() };
    let graph = build_transition_graph_with(Execution::default(), &x, &grid, &params).map_err(config_err)?;
    Ok(recurrent_cells(&graph))
}

fn chainrec_summary(cfg: &RunConfig, set: &RecurrentSet) -> String {
    let mut s = String::new();
    let g = &set.grid;
    let _ = writeln!(s, "system {}", cfg.system.name());
    let _ = writeln!(s, "grid {} x {} cells over {:?}", g.nx, g.ny, cfg.domain);
    let _ = writeln!(s, "components {}", set.components.len());
    let _ = writeln!(s, "recurrent cells {}", set.cells.len());
    for (i, c) in set.components.iter().enumerate() {
        let _ = writeln!(s, "component {i} cells {}", c.len());
    }
    s
}

/// Builds the transition graph and writes the recurrent cells and a summary.
pub fn run_chainrec(cfg: &RunConfig) -> CliResult<ChainrecOutcome> {
    let c = cfg.chainrec.as_ref().ok_or_else(|| CliError::Config("missing [chainrec] section".into()))?;
    let set = compute_recurrent(cfg, c)?;
    let dir = out_dir(cfg)?;
    let cells = dir.join(CELLS_FILE);
    write_cell_file(&set, &cells).map_err(|e| io_err(&cells, e))?;
    let summary = chainrec_summary(cfg, &set);
    write(&dir.join(CHAINREC_SUMMARY), &summary)?;
    Ok(ChainrecOutcome { set, summary })
}

pub struct ConstructOutcome {
    pub spec: StackSpec,
    pub tau: PrescribedLyapunov,
    pub log: ConstructionLog,
}

fn fit_base(cfg: &RunConfig, c: &ConstructSection, rec: Option<&RecurrentSet>, dir: &Path) -> CliResult<BaseSpec> {
    match &c.base {
        BaseConfig::Fixture { name } => {
            Ok(BaseSpec::Fixture { name: name.clone().unwrap_or_else(|| cfg.system.name().to_string()) })
        }
        BaseConfig::Collocation { spacing, hole, smoothness, support, rhs, bounds } => {
            let rec = rec.ok_or_else(|| CliError::Config("a collocation base needs a [chainrec] section".into()))?;
            let x = cfg.system.build().map_err(config_err)?;
            let area = Aabb::from_bounds(bounds.unwrap_or(cfg.domain));
            let nodes = grid_nodes(&x, &area, *spacing, &|p: &Point| dist_to_recurrent(rec, p) > *hole);
            let kernel = Wendland::new(*smoothness, *support).map_err(config_err)?;
            let h = rhs.build().map_err(config_err)?;
            let model = collocation_fit(&x, &nodes, &h, kernel)
                .map_err(|e| CliError::Construction(Error::Stage { stage: "collocation", source: Box::new(e) }))?;
            let path = dir.join(MODEL_FILE);
            model.save(&path).map_err(|e| io_err(&path, e))?;
            Ok(BaseSpec::Collocation { model: PathBuf::from(MODEL_FILE) })
        }
    }
}

/// Runs the construction and writes the stack, the grid and the log. The
/// recurrent set of a `[chainrec]` section, if present, is computed first
/// and used for the admission check of `K`.
pub fn run_construct(cfg: &RunConfig) -> CliResult<ConstructOutcome> {
    let c = cfg.construct_section()?;
    let rec = match cfg.chainrec {
        Some(_) => Some(run_chainrec(cfg)?.set),
        None => None,
    };
    let dir = out_dir(cfg)?.to_path_buf();
    let base_spec = fit_base(cfg, c, rec.as_ref(), &dir)?;
    let spec = StackSpec {
        field: cfg.system.clone(),
        g: c.g.clone(),
        region: c.k.clone(),
        base: base_spec,
        uk_margin: c.uk_margin,
        collar_fraction: c.collar_fraction,
    };
    let x = spec.field.build().map_err(config_err)?;
    let base = resolve_base(&spec.base, &dir).build(&x).map_err(CliError::Construction)?;
    let region = spec.region.build().map_err(config_err)?;
    let g = spec.g.build().map_err(config_err)?;
    let ccfg = ConstructConfig {
        uk_margin: c.uk_margin,
        collar_fraction: c.collar_fraction,
        ms_q_step: c.ms_q_step,
        ..ConstructConfig::default()
    };
    let (tau, log) =
        construct_prescribed(&x, &region, &g, &base, rec.as_ref(), &ccfg).map_err(CliError::Construction)?;
    let stack_path = dir.join(STACK_FILE);
    save_stack(&stack_path, &spec, tau.stack()).map_err(|e| io_err(&stack_path, e))?;
    write(&dir.join(LOG_FILE), &log.to_string())?;
    write(&dir.join(GRID_FILE), &grid_text(cfg, &tau))?;
    Ok(ConstructOutcome { spec, tau, log })
}

fn resolve_base(base: &BaseSpec, dir: &Path) -> BaseSpec {
    match base {
        BaseSpec::Collocation { model } if model.is_relative() => BaseSpec::Collocation { model: dir.join(model) },
        other => other.clone(),
    }
}

/// `x y tau taudot` rows, `y` outer and `x` inner, in shortest round-trip
/// notation. Points where `τ_K` cannot be evaluated are written as `NaN`.
pub fn grid_text(cfg: &RunConfig, tau: &PrescribedLyapunov) -> String {
    let e = &cfg.export;
    let b = Aabb::from_bounds(e.bounds.unwrap_or(cfg.domain));
    let pts: Vec<Point> = (0..e.ny)
        .flat_map(|j| {
            let y = b.lo.y + (b.hi.y - b.lo.y) * j as f64 / (e.ny - 1) as f64;
            (0..e.nx).map(move |i| Point::new(b.lo.x + (b.hi.x - b.lo.x) * i as f64 / (e.nx - 1) as f64, y))
        })
        .collect();
    let rows = par::map(Execution::default(), &pts, |p| {
        let (v, d) = tau.jet(p).map_or((f64::NAN, f64::NAN), |j| (j.value, j.deriv));
        format!("{:e} {:e} {:e} {:e}\n", p.x, p.y, v, d)
    });
    let mut s = String::from("# x y tau taudot\n");
    rows.iter().for_each(|r| s.push_str(r));
    s
}

fn load(stack: &Path) -> CliResult<(StackSpec, PrescribedLyapunov)> {
    if !stack.is_file() {
        return Err(CliError::Io(format!("{}: no such stack file", stack.display())));
    }
    load_stack(stack).map_err(|e| io_err(stack, e))
}

/// Verifies a saved stack and writes both report forms. The recurrent set
/// is read from `cells.txt` next to the stack, or computed from the
/// `[chainrec]` section when that file is absent.
pub fn run_verify(cfg: &RunConfig, stack: &Path) -> CliResult<VerificationReport> {
    let (spec, tau) = load(stack)?;
    let cells = stack.parent().unwrap_or(Path::new(".")).join(CELLS_FILE);
    let rec = if cells.is_file() {
        Some(read_cell_file(&cells).map_err(|e| io_err(&cells, e))?)
    } else {
        cfg.chainrec.as_ref().map(|c| compute_recurrent(cfg, c)).transpose()?
    };
    let x = spec.field.build().map_err(config_err)?;
    let k = spec.region.build().map_err(config_err)?;
    let g = spec.g.build().map_err(config_err)?;
    let report = verify_report(&tau, &x, &k, &g, &cfg.verify_config(rec));
    let dir = out_dir(cfg)?;
    write(&dir.join(REPORT_FILE), &report.to_string())?;
    write(&dir.join(MACHINE_FILE), &report.machine_lines())?;
    Ok(report)
}

/// Re-exports the evaluation grid of a saved stack.
pub fn export_grid(cfg: &RunConfig, stack: &Path) -> CliResult<PathBuf> {
    let (_, tau) = load(stack)?;
    let path = out_dir(cfg)?.join(GRID_FILE);
    write(&path, &grid_text(cfg, &tau))?;
    Ok(path)
}
