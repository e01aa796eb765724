//! Experiment configs and the batch commands behind the binary.
//!
//! Every file written embeds the SHA-256 of the config bytes and the tool
//! version, and contains no timestamps, so reruns are byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::herald::wigner_grid;
use crate::optimize::{optimize, optimize_adaptive, optimize_loss_aware, AdaptiveResult, OptimizationResult, Problem, Settings};
use crate::scheme::{Backend, BranchReport, EvalOptions, LossModel, RerunReport, Scheme, Totals};
use crate::targets::{Target, TargetConfig};

pub const TOOL: &str = "adaptive-gbs";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    NonAdaptive,
    Adaptive,
    /// Adaptive with inline squeezing blocks.
    Symplectic,
    Concatenated,
    Rerun,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationConfig {
    #[serde(default = "default_backend")]
    pub backend: Backend,
    #[serde(default)]
    pub output_cutoff: Option<usize>,
    #[serde(default = "yes")]
    pub aborts: bool,
    #[serde(default = "default_flag")]
    pub flag_fidelity: f64,
}

fn default_backend() -> Backend {
    Backend::Gaussian
}

fn yes() -> bool {
    true
}

fn default_flag() -> f64 {
    0.9
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self { backend: Backend::Gaussian, output_cutoff: None, aborts: true, flag_fidelity: 0.9 }
    }
}

impl EvaluationConfig {
    pub fn options(&self) -> EvalOptions {
        EvalOptions {
            backend: self.backend,
            output_cutoff: self.output_cutoff,
            aborts: self.aborts,
            keep_states: false,
            flag_fidelity: self.flag_fidelity,
        }
    }
}

/// Where a swept loss fraction is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepModel {
    /// After every input, before every detector and on the output.
    #[default]
    Uniform,
    /// Before every detector and on the output.
    Detection,
    /// Before the detectors only.
    Herald,
    /// On the output mode only.
    Output,
}

impl SweepModel {
    pub fn loss_model(&self, loss: f64) -> LossModel {
        let eta = 1.0 - loss;
        match self {
            SweepModel::Uniform => LossModel::uniform(loss),
            SweepModel::Detection => LossModel::detection(loss),
            SweepModel::Herald => LossModel { pre_detect: eta, ..LossModel::none() },
            SweepModel::Output => LossModel { output: eta, ..LossModel::none() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Loss fractions, `1 - eta`.
    pub losses: Vec<f64>,
    #[serde(default)]
    pub model: SweepModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WignerWindow {
    pub q: [f64; 2],
    pub p: [f64; 2],
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RerunConfig {
    #[serde(default = "two")]
    pub attempts: u32,
}

fn two() -> u32 {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub target: TargetConfig,
    pub kind: SchemeKind,
    pub scheme: Scheme,
    #[serde(default)]
    pub optimizer: Settings,
    #[serde(default)]
    pub evaluation: EvaluationConfig,
    /// Optimize under the scheme's loss model, starting from the lossless optimum.
    #[serde(default)]
    pub loss_aware: bool,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub rerun: Option<RerunConfig>,
    #[serde(default)]
    pub wigner: Option<WignerWindow>,
}

fn config_error(e: impl std::fmt::Display) -> Error {
    Error::Config(e.to_string())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let mut cfg: Self = serde_json::from_str(text).map_err(config_error)?;
        cfg.scheme.normalize();
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parsed config and the hex SHA-256 of its bytes.
    pub fn load(path: &Path) -> Result<(Self, String)> {
        let bytes = fs::read(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let text = String::from_utf8(bytes.clone()).map_err(config_error)?;
        Ok((Self::from_json(&text)?, sha256_hex(&bytes)))
    }

    pub fn validate(&self) -> Result<()> {
        self.scheme.validate().map_err(config_error)?;
        let single_layer = self.scheme.root.outcomes.iter().all(|o| o.next.is_none());
        match self.kind {
            SchemeKind::NonAdaptive | SchemeKind::Rerun if !single_layer => {
                return Err(Error::Config(format!("{:?} schemes have a single layer", self.kind)));
            }
            SchemeKind::Rerun if self.scheme.leaf_paths().len() != 1 => {
                return Err(Error::Config("rerun schemes accept exactly one pattern".into()));
            }
            _ => {}
        }
        if let Some(s) = &self.sweep {
            if s.losses.is_empty() || s.losses.iter().any(|l| !(0.0..=1.0).contains(l)) {
                return Err(Error::Config("sweep losses must be fractions in [0, 1]".into()));
            }
        }
        if let Some(w) = &self.wigner {
            if w.points < 2 || w.q[0] >= w.q[1] || w.p[0] >= w.p[1] {
                return Err(Error::Config("wigner window needs increasing bounds and at least 2 points".into()));
            }
        }
        if self.optimizer.restarts == 0 || self.optimizer.evaluations == 0 {
            return Err(Error::Config("optimizer needs at least one restart and one evaluation".into()));
        }
        if let Backend::Fock { cutoff } = self.evaluation.backend {
            if cutoff < 2 {
                return Err(Error::Config("fock backend cutoff must be at least 2".into()));
            }
        }
        Ok(())
    }

    pub fn target(&self) -> Result<Target> {
        self.target.build()
    }

    /// Replaces the scheme with one read from a params file.
    pub fn with_params(mut self, path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut scheme: Scheme = serde_json::from_str(&text).map_err(config_error)?;
        scheme.normalize();
        self.scheme = scheme;
        self.validate()?;
        Ok(self)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchRow {
    pub branch: String,
    pub abort: bool,
    pub probability: f64,
    pub fidelity: Option<f64>,
    pub truncation: f64,
}

impl From<&BranchReport> for BranchRow {
    fn from(b: &BranchReport) -> Self {
        Self { branch: b.label(), abort: b.abort, probability: b.probability, fidelity: b.fidelity, truncation: b.truncation }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConcatenatedSummary {
    pub p_base: f64,
    pub p_zero_first: f64,
    pub p_replica: f64,
    pub p_extra: f64,
    pub p_total: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageSummary {
    pub reward: f64,
    pub fidelity: f64,
    pub probability: f64,
    pub feasible: bool,
    pub restart: usize,
    pub evaluations: usize,
}

impl From<&OptimizationResult> for StageSummary {
    fn from(r: &OptimizationResult) -> Self {
        Self {
            reward: r.reward,
            fidelity: r.fidelity,
            probability: r.probability,
            feasible: r.feasible,
            restart: r.restart,
            evaluations: r.evaluations,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizationSummary {
    pub seed: u64,
    pub stages: Vec<StageSummary>,
    /// Loss-blind parameters under the configured loss, when optimizing loss-aware.
    pub loss_blind: Option<Vec<BranchRow>>,
    /// Final parameters without loss, when optimizing loss-aware.
    pub lossless: Option<Vec<BranchRow>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub name: String,
    pub kind: SchemeKind,
    pub target: String,
    pub totals: Totals,
    pub branches: Vec<BranchRow>,
    pub concatenated: Option<ConcatenatedSummary>,
    pub rerun: Option<RerunReport>,
    pub optimization: Option<OptimizationSummary>,
}

/// Evaluates the config's scheme as written.
pub fn simulate(cfg: &ExperimentConfig, hash: &str) -> Result<Summary> {
    let target = cfg.target()?;
    let opts = cfg.evaluation.options();
    let (report, concatenated) = if cfg.kind == SchemeKind::Concatenated {
        let c = cfg.scheme.evaluate_concatenated(&target.state, &opts)?;
        let s = ConcatenatedSummary { p_base: c.p_base, p_zero_first: c.p_zero_first, p_replica: c.p_replica, p_extra: c.p_extra, p_total: c.p_total };
        (c.report, Some(s))
    } else {
        (cfg.scheme.evaluate(&target.state, &opts)?, None)
    };
    let rerun = match (cfg.kind, &cfg.rerun) {
        (SchemeKind::Rerun, r) => Some(cfg.scheme.evaluate_rerun(&target.state, r.as_ref().map_or(2, |r| r.attempts), &opts)?),
        _ => None,
    };
    if report.branches.iter().all(|b| b.abort || b.probability <= 0.0) {
        return Err(Error::ZeroProbability(cfg.name.clone()));
    }
    Ok(Summary {
        tool: TOOL.into(),
        version: VERSION.into(),
        config_hash: hash.into(),
        name: cfg.name.clone(),
        kind: cfg.kind,
        target: target.label,
        totals: report.totals,
        branches: report.branches.iter().map(BranchRow::from).collect(),
        concatenated,
        rerun,
        optimization: None,
    })
}

/// Output of [`optimize_config`]: the tuned scheme, per-stage traces and the
/// evaluation of the result.
#[derive(Debug, Clone)]
pub struct Optimized {
    pub scheme: Scheme,
    pub traces: Vec<Vec<crate::optimize::TracePoint>>,
    pub summary: Summary,
}

pub fn optimize_config(cfg: &ExperimentConfig, hash: &str, seed: Option<u64>) -> Result<Optimized> {
    let target = cfg.target()?;
    let settings = Settings { seed: seed.unwrap_or(cfg.optimizer.seed), ..cfg.optimizer.clone() };
    let eval = EvalOptions { aborts: false, ..cfg.evaluation.options() };
    let lossy = !cfg.scheme.loss.is_lossless();
    let mut blind = cfg.scheme.clone();
    blind.loss = LossModel::none();
    let adaptive = !matches!(cfg.kind, SchemeKind::NonAdaptive | SchemeKind::Rerun);

    let run = |scheme: &Scheme, warm: bool| -> Result<(Scheme, Vec<OptimizationResult>)> {
        if adaptive {
            let AdaptiveResult { scheme, stages, .. } = if warm {
                warm_adaptive(scheme, &target.state, &settings, &eval)?
            } else {
                optimize_adaptive(scheme, &target.state, &settings, &eval)?
            };
            Ok((scheme, stages))
        } else {
            let mut p = Problem::new(scheme.clone(), target.state.clone());
            p.settings = settings.clone();
            p.mode = settings.primary_mode();
            p.eval = eval.clone();
            let r = if warm { optimize_loss_aware(&p)?.result } else { optimize(&p)? };
            Ok((r.scheme.clone(), vec![r]))
        }
    };

    let (blind_scheme, mut stages) = run(&blind, false)?;
    let mut final_scheme = blind_scheme.clone();
    final_scheme.loss = cfg.scheme.loss.clone();
    let mut loss_blind = None;
    let mut lossless = None;
    if cfg.loss_aware && lossy {
        let before = final_scheme.evaluate(&target.state, &eval)?;
        loss_blind = Some(before.branches.iter().map(BranchRow::from).collect());
        let (aware, more) = run(&final_scheme, true)?;
        stages.extend(more);
        final_scheme = aware;
        let mut ideal = final_scheme.clone();
        ideal.loss = LossModel::none();
        let rows = ideal.evaluate(&target.state, &eval)?;
        lossless = Some(rows.branches.iter().map(BranchRow::from).collect());
    }
    let evaluated = ExperimentConfig { scheme: final_scheme.clone(), ..cfg.clone() };
    let mut summary = simulate(&evaluated, hash)?;
    summary.optimization = Some(OptimizationSummary {
        seed: settings.seed,
        stages: stages.iter().map(StageSummary::from).collect(),
        loss_blind,
        lossless,
    });
    Ok(Optimized { scheme: final_scheme, traces: stages.into_iter().map(|s| s.trace).collect(), summary })
}

/// Adaptive optimization restarted from the scheme's current parameters.
fn warm_adaptive(
    scheme: &Scheme,
    target: &crate::fock::FockTensor,
    settings: &Settings,
    eval: &EvalOptions,
) -> Result<AdaptiveResult> {
    crate::optimize::optimize_adaptive_from(scheme, target, settings, eval, true)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub loss: f64,
    pub eta: f64,
    pub branch: String,
    pub probability: f64,
    pub fidelity: Option<f64>,
}

/// Success branches of the scheme under each configured loss fraction.
pub fn sweep_loss(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    let sweep = cfg.sweep.clone().unwrap_or(SweepConfig { losses: vec![0.0, 0.01, 0.05, 0.1], model: SweepModel::Uniform });
    let target = cfg.target()?;
    let opts = EvalOptions { aborts: false, ..cfg.evaluation.options() };
    let mut rows = Vec::new();
    for &loss in &sweep.losses {
        let mut scheme = cfg.scheme.clone();
        scheme.loss = sweep.model.loss_model(loss);
        let report = scheme.evaluate(&target.state, &opts)?;
        for b in &report.branches {
            rows.push(SweepRow { loss, eta: 1.0 - loss, branch: b.label(), probability: b.probability, fidelity: b.fidelity });
        }
    }
    Ok(rows)
}

/// Wigner function of the first success branch on the configured window,
/// as `(q, p, w)` rows.
pub fn wigner_rows(cfg: &ExperimentConfig) -> Result<Vec<(f64, f64, f64)>> {
    let Some(w) = &cfg.wigner else { return Ok(Vec::new()) };
    let target = cfg.target()?;
    let opts = EvalOptions { keep_states: true, aborts: false, ..cfg.evaluation.options() };
    let leaf = cfg.scheme.primary_path();
    let b = cfg.scheme.evaluate_branch(&leaf, &target.state, &opts)?;
    let Some(state) = b.state else {
        return Err(Error::ZeroProbability(format!("{} primary branch", cfg.name)));
    };
    let rho = state.density().normalized();
    let grid = |lo: f64, hi: f64| -> Vec<f64> { (0..w.points).map(|k| lo + (hi - lo) * k as f64 / (w.points - 1) as f64).collect() };
    let (qs, ps) = (grid(w.q[0], w.q[1]), grid(w.p[0], w.p[1]));
    let values = wigner_grid(&rho, &qs, &ps);
    let mut rows = Vec::with_capacity(qs.len() * ps.len());
    for (i, &q) in qs.iter().enumerate() {
        for (j, &p) in ps.iter().enumerate() {
            rows.push((q, p, values[i][j]));
        }
    }
    Ok(rows)
}

/// Human-readable summary; the only place probabilities appear as percents.
pub fn render_report(s: &Summary) -> String {
    let mut out = String::new();
    let pct = |x: f64| format!("{:.3}%", 100.0 * x);
    let _ = writeln!(out, "{} ({:?}) -> {}", s.name, s.kind, s.target);
    let _ = writeln!(out, "{} {}  config sha256 {}", s.tool, s.version, s.config_hash);
    let _ = writeln!(out, "{:<16} {:>10} {:>10} {:>6}", "pattern", "P", "F", "abort");
    for b in s.branches.iter().filter(|b| !b.abort || b.fidelity.is_some_and(|f| f >= s.totals.flag_fidelity)) {
        let f = b.fidelity.map_or("-".to_string(), |f| format!("{:.3}%", 100.0 * f));
        let _ = writeln!(out, "{:<16} {:>10} {:>10} {:>6}", b.branch, pct(b.probability), f, if b.abort { "yes" } else { "" });
    }
    let t = &s.totals;
    let _ = writeln!(out, "success {}  aborted {}  beyond enumeration {}", pct(t.p_success), pct(t.p_abort), pct(t.p_tail));
    let _ = writeln!(out, "success incl. aborts with F >= {:.0}%: {}", 100.0 * t.flag_fidelity, pct(t.p_with_flagged));
    if let (Some(lo), Some(hi)) = (t.f_min, t.f_max) {
        let _ = writeln!(out, "fidelity range {} .. {}", pct(lo), pct(hi));
    }
    if let Some(c) = &s.concatenated {
        let _ = writeln!(
            out,
            "concatenated: base {} + zero-first {} x base + extra {} = {}",
            pct(c.p_base),
            pct(c.p_zero_first),
            pct(c.p_extra),
            pct(c.p_total)
        );
    }
    if let Some(r) = &s.rerun {
        let _ = writeln!(out, "rerun x{}: {} -> {}", r.attempts, pct(r.p_single), pct(r.p_total));
    }
    out
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
    pub params: Option<PathBuf>,
}

fn load(config: &Path, opts: &RunOptions) -> Result<(ExperimentConfig, String)> {
    let (cfg, hash) = ExperimentConfig::load(config)?;
    let cfg = match &opts.params {
        Some(p) => cfg.with_params(p)?,
        None => cfg,
    };
    fs::create_dir_all(&opts.out_dir)?;
    Ok((cfg, hash))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_wigner(path: &Path, rows: &[(f64, f64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["q", "p", "w"])?;
    for (q, p, v) in rows {
        w.write_record([q.to_string(), p.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `branches.csv`, `summary.json` and, when configured, `wigner.csv`.
pub fn cmd_simulate(config: &Path, opts: &RunOptions) -> Result<Summary> {
    let (cfg, hash) = load(config, opts)?;
    let summary = simulate(&cfg, &hash)?;
    write_csv(&opts.out_dir.join("branches.csv"), &summary.branches)?;
    write_json(&opts.out_dir.join("summary.json"), &summary)?;
    if cfg.wigner.is_some() {
        write_wigner(&opts.out_dir.join("wigner.csv"), &wigner_rows(&cfg)?)?;
    }
    Ok(summary)
}

#[derive(Serialize)]
struct TraceRow {
    stage: usize,
    evaluation: usize,
    reward: f64,
    fidelity: f64,
    probability: f64,
}

/// Writes `params.json` (a scheme usable with `--params`), `trace.csv`,
/// `branches.csv` and `summary.json`.
pub fn cmd_optimize(config: &Path, opts: &RunOptions) -> Result<Summary> {
    let (cfg, hash) = load(config, opts)?;
    let out = optimize_config(&cfg, &hash, opts.seed)?;
    write_json(&opts.out_dir.join("params.json"), &out.scheme)?;
    let trace: Vec<TraceRow> = out
        .traces
        .iter()
        .enumerate()
        .flat_map(|(stage, t)| {
            t.iter().map(move |p| TraceRow { stage, evaluation: p.evaluation, reward: p.reward, fidelity: p.fidelity, probability: p.probability })
        })
        .collect();
    write_csv(&opts.out_dir.join("trace.csv"), &trace)?;
    write_csv(&opts.out_dir.join("branches.csv"), &out.summary.branches)?;
    write_json(&opts.out_dir.join("summary.json"), &out.summary)?;
    Ok(out.summary)
}

/// Writes `sweep.csv` with one row per loss value and success branch.
pub fn cmd_sweep_loss(config: &Path, opts: &RunOptions) -> Result<Vec<SweepRow>> {
    let (cfg, _) = load(config, opts)?;
    let rows = sweep_loss(&cfg)?;
    write_csv(&opts.out_dir.join("sweep.csv"), &rows)?;
    Ok(rows)
}

/// Writes `report.txt` and returns its text.
pub fn cmd_report(config: &Path, opts: &RunOptions) -> Result<String> {
    let (cfg, hash) = load(config, opts)?;
    let text = render_report(&simulate(&cfg, &hash)?);
    fs::write(opts.out_dir.join("report.txt"), &text)?;
    Ok(text)
}
