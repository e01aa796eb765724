//! Multi-start bounded Nelder-Mead over the free parameters of a scheme.
//!
//! Reward is `F + P` for a single branch (`min F + sum P` for several).
//! In match-fidelity mode every branch must reach `F* - tol`; feasible
//! points score `1 + sum P`, infeasible ones the (negative) summed shortfall.

use std::f64::consts::{FRAC_PI_2, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::FockTensor;
use crate::scheme::{BranchReport, EvalOptions, ParamKind, Scheme, SchemeReport};

pub fn reward(fidelity: f64, probability: f64) -> f64 {
    fidelity + probability
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Mode {
    MaximizeReward,
    MatchFidelity { fidelity: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Settings {
    pub restarts: usize,
    /// Objective evaluations per restart.
    pub evaluations: usize,
    pub seed: u64,
    /// Squeezing bound when the scheme sets no `r_max`.
    pub squeeze_cap: f64,
    /// Initial squeezing range.
    pub init_squeeze: f64,
    pub displacement_cap: f64,
    pub match_tolerance: f64,
    /// Random points drawn before each simplex search starts.
    pub samples: usize,
    /// Number of best restarts searched further.
    pub refine: usize,
    /// Extra evaluations for each refined restart.
    pub refine_evaluations: usize,
    /// Fidelity the primary branch must reach, maximizing probability;
    /// maximizes the reward when unset.
    pub fidelity: Option<f64>,
    /// Fidelity floor for alternative branches; the primary branch's
    /// fidelity when unset.
    pub match_fidelity: Option<f64>,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            restarts: 16,
            evaluations: 3000,
            seed: 0,
            squeeze_cap: 2.0,
            init_squeeze: 0.5,
            displacement_cap: 3.0,
            match_tolerance: 1e-3,
            samples: 32,
            refine: 4,
            refine_evaluations: 24000,
            fidelity: None,
            match_fidelity: None,
        }
    }
}

impl Settings {
    /// Objective for the primary branch.
    pub fn primary_mode(&self) -> Mode {
        match self.fidelity {
            Some(fidelity) => Mode::MatchFidelity { fidelity },
            None => Mode::MaximizeReward,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub scheme: Scheme,
    pub target: FockTensor,
    /// Leaf paths entering the objective.
    pub branches: Vec<Vec<usize>>,
    /// Nodes whose parameters are free; all nodes when `None`.
    pub free_nodes: Option<Vec<Vec<usize>>>,
    pub mode: Mode,
    pub settings: Settings,
    pub eval: EvalOptions,
    /// Start restart 0 from the scheme's current parameters.
    pub warm_start: bool,
}

impl Problem {
    pub fn new(scheme: Scheme, target: FockTensor) -> Self {
        let branches = scheme.leaf_paths();
        Self {
            scheme,
            target,
            branches,
            free_nodes: None,
            mode: Mode::MaximizeReward,
            settings: Settings::default(),
            eval: EvalOptions::fast(),
            warm_start: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub evaluation: usize,
    pub reward: f64,
    pub fidelity: f64,
    pub probability: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizationResult {
    pub scheme: Scheme,
    pub reward: f64,
    pub fidelity: f64,
    pub probability: f64,
    pub feasible: bool,
    pub restart: usize,
    pub evaluations: usize,
    pub branches: Vec<BranchReport>,
    pub trace: Vec<TracePoint>,
}

#[derive(Debug, Clone, Copy)]
enum Bound {
    Interval(f64, f64),
    Periodic,
}

struct Space {
    /// Index into the scheme's full parameter vector.
    index: Vec<usize>,
    bounds: Vec<Bound>,
    init: Vec<(f64, f64)>,
}

impl Space {
    fn new(problem: &Problem) -> Self {
        let s = &problem.settings;
        let rb = problem.scheme.r_max.unwrap_or(s.squeeze_cap);
        let ri = s.init_squeeze.min(rb);
        let d = s.displacement_cap;
        let mut space = Space { index: Vec::new(), bounds: Vec::new(), init: Vec::new() };
        for (k, info) in problem.scheme.param_info().into_iter().enumerate() {
            if let Some(nodes) = &problem.free_nodes {
                if !nodes.contains(&info.node) {
                    continue;
                }
            }
            let (b, i) = match info.kind {
                ParamKind::Squeeze => (Bound::Interval(0.0, rb), (0.0, ri)),
                ParamKind::InlineSqueeze => (Bound::Interval(-rb, rb), (-ri, ri)),
                ParamKind::Mixing => (Bound::Interval(0.0, FRAC_PI_2), (0.0, FRAC_PI_2)),
                ParamKind::Angle => (Bound::Periodic, (0.0, TAU)),
                ParamKind::Displacement => (Bound::Interval(-d, d), (-d.min(1.0), d.min(1.0))),
            };
            space.index.push(k);
            space.bounds.push(b);
            space.init.push(i);
        }
        space
    }

    fn width(&self, k: usize) -> f64 {
        match self.bounds[k] {
            Bound::Interval(lo, hi) => hi - lo,
            Bound::Periodic => TAU,
        }
    }

    fn project(&self, x: &mut [f64]) {
        for (v, b) in x.iter_mut().zip(&self.bounds) {
            match *b {
                Bound::Interval(lo, hi) => *v = v.clamp(lo, hi),
                Bound::Periodic => *v = v.rem_euclid(TAU),
            }
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.init.iter().map(|&(lo, hi)| if hi > lo { rng.random_range(lo..hi) } else { lo }).collect()
    }
}

struct Objective<'a> {
    problem: &'a Problem,
    space: &'a Space,
    full: Vec<f64>,
}

struct Score {
    reward: f64,
    fidelity: f64,
    probability: f64,
    feasible: bool,
}

impl Objective<'_> {
    fn scheme_at(&self, x: &[f64]) -> Scheme {
        let mut full = self.full.clone();
        for (&k, &v) in self.space.index.iter().zip(x) {
            full[k] = v;
        }
        let mut s = self.problem.scheme.clone();
        s.set_params(&full);
        s
    }

    fn reports(&self, scheme: &Scheme) -> Result<Vec<BranchReport>> {
        self.problem
            .branches
            .iter()
            .map(|b| scheme.evaluate_branch(b, &self.problem.target, &self.problem.eval))
            .collect()
    }

    fn score(&self, x: &[f64]) -> Score {
        match self.reports(&self.scheme_at(x)) {
            Ok(r) => score_reports(&r, self.problem),
            Err(_) => Score { reward: f64::NEG_INFINITY, fidelity: 0.0, probability: 0.0, feasible: false },
        }
    }
}

fn score_reports(reports: &[BranchReport], problem: &Problem) -> Score {
    let p: f64 = reports.iter().map(|b| b.probability).sum();
    let f = reports.iter().map(|b| b.fidelity.unwrap_or(0.0)).fold(f64::INFINITY, f64::min);
    let f = if f.is_finite() { f } else { 0.0 };
    match problem.mode {
        Mode::MaximizeReward => Score { reward: reward(f, p), fidelity: f, probability: p, feasible: true },
        Mode::MatchFidelity { fidelity } => {
            let floor = fidelity - problem.settings.match_tolerance;
            let shortfall: f64 = reports.iter().map(|b| (b.fidelity.unwrap_or(0.0) - floor).min(0.0)).sum();
            if shortfall < 0.0 {
                Score { reward: shortfall, fidelity: f, probability: p, feasible: false }
            } else {
                Score { reward: 1.0 + p, fidelity: f, probability: p, feasible: true }
            }
        }
    }
}

struct Run {
    x: Vec<f64>,
    reward: f64,
    evaluations: usize,
    trace: Vec<TracePoint>,
}

struct Counter<'a, 'b> {
    obj: &'a Objective<'b>,
    budget: usize,
    used: usize,
    best: f64,
    best_x: Vec<f64>,
    trace: Vec<TracePoint>,
}

impl Counter<'_, '_> {
    /// Negated reward, for minimization.
    fn eval(&mut self, x: &[f64]) -> f64 {
        self.used += 1;
        let s = self.obj.score(x);
        if s.reward > self.best || self.trace.is_empty() {
            self.best = s.reward.max(self.best);
            self.best_x = x.to_vec();
            self.trace.push(TracePoint {
                evaluation: self.used,
                reward: self.best,
                fidelity: s.fidelity,
                probability: s.probability,
            });
        }
        let r = -s.reward;
        if r.is_nan() { f64::INFINITY } else { r }
    }

    fn exhausted(&self) -> bool {
        self.used >= self.budget
    }
}

fn nelder_mead(c: &mut Counter<'_, '_>, space: &Space, x0: &[f64], step: f64) {
    let n = x0.len();
    if n == 0 {
        c.eval(x0);
        return;
    }
    let mut pts: Vec<Vec<f64>> = vec![x0.to_vec()];
    for k in 0..n {
        let mut p = x0.to_vec();
        let w = space.width(k) * step;
        p[k] += if let Bound::Interval(_, hi) = space.bounds[k] { if p[k] + w > hi { -w } else { w } } else { w };
        space.project(&mut p);
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| c.eval(p)).collect();
    while !c.exhausted() {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();
        let spread = vals[n] - vals[0];
        let size = (1..=n)
            .map(|i| pts[i].iter().zip(&pts[0]).enumerate().map(|(k, (a, b))| ((a - b) / space.width(k)).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread.abs() < 1e-13 || size < 1e-9 {
            return;
        }
        let centroid: Vec<f64> = (0..n).map(|k| pts[..n].iter().map(|p| p[k]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = (0..n).map(|k| centroid[k] + t * (pts[n][k] - centroid[k])).collect();
            space.project(&mut p);
            p
        };
        let xr = along(-1.0);
        let fr = c.eval(&xr);
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = c.eval(&xe);
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
            continue;
        }
        if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < vals[n] {
            let x = along(-0.5);
            let f = c.eval(&x);
            (x, f)
        } else {
            let x = along(0.5);
            let f = c.eval(&x);
            (x, f)
        };
        if fc < vals[n].min(fr) {
            pts[n] = xc;
            vals[n] = fc;
            continue;
        }
        for i in 1..=n {
            let mut p: Vec<f64> = (0..n).map(|k| pts[0][k] + 0.5 * (pts[i][k] - pts[0][k])).collect();
            space.project(&mut p);
            vals[i] = c.eval(&p);
            pts[i] = p;
            if c.exhausted() {
                return;
            }
        }
    }
}

fn run_restart(obj: &Objective<'_>, space: &Space, problem: &Problem, restart: usize) -> Run {
    let s = &problem.settings;
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    rng.set_stream(restart as u64);
    let mut c = Counter { obj, budget: s.evaluations.max(1), used: 0, best: f64::NEG_INFINITY, best_x: Vec::new(), trace: Vec::new() };
    let mut start = if problem.warm_start && restart == 0 {
        let full = problem.scheme.params();
        let mut x: Vec<f64> = space.index.iter().map(|&k| full[k]).collect();
        space.project(&mut x);
        x
    } else {
        space.sample(&mut rng)
    };
    let mut start_val = c.eval(&start);
    if !(problem.warm_start && restart == 0) {
        for _ in 0..s.samples {
            if c.exhausted() {
                break;
            }
            let x = space.sample(&mut rng);
            let v = c.eval(&x);
            if v < start_val {
                start = x;
                start_val = v;
            }
        }
    }
    let mut step = 0.15;
    while !c.exhausted() {
        nelder_mead(&mut c, space, &start, step);
        start = c.best_x.clone();
        step = if step > 0.02 { step * 0.5 } else { 0.15 };
    }
    Run { x: c.best_x, reward: c.best, evaluations: c.used, trace: c.trace }
}

fn refine_run(obj: &Objective<'_>, space: &Space, problem: &Problem, restart: usize, run: Run) -> Run {
    let s = &problem.settings;
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed ^ 0x5eed_0f_4e_f1_4e);
    rng.set_stream(restart as u64);
    let mut c = Counter {
        obj,
        budget: run.evaluations + s.refine_evaluations,
        used: run.evaluations,
        best: run.reward,
        best_x: run.x,
        trace: run.trace,
    };
    let hop = (s.refine_evaluations / 16).max(200);
    let mut kick = 0.2;
    while !c.exhausted() {
        let before = c.best;
        let mut x = c.best_x.clone();
        for (k, v) in x.iter_mut().enumerate() {
            *v += kick * space.width(k) * (rng.random::<f64>() - 0.5);
        }
        space.project(&mut x);
        let stop = c.budget;
        c.budget = (c.used + hop).min(stop);
        let mut step = 0.1;
        let mut start = x;
        while !c.exhausted() {
            nelder_mead(&mut c, space, &start, step);
            start = c.best_x.clone();
            step *= 0.5;
            if step < 0.003 {
                break;
            }
        }
        c.budget = stop;
        kick = if c.best > before + 1e-9 { 0.2 } else if kick > 0.03 { kick * 0.7 } else { 0.4 };
    }
    Run { x: c.best_x, reward: c.best, evaluations: c.used, trace: c.trace }
}

pub fn optimize(problem: &Problem) -> Result<OptimizationResult> {
    problem.scheme.validate()?;
    if problem.branches.is_empty() {
        return Err(Error::InvalidParameter("optimization needs at least one branch".into()));
    }
    if problem.settings.restarts == 0 {
        return Err(Error::InvalidParameter("restarts must be at least 1".into()));
    }
    let space = Space::new(problem);
    let obj = Objective { problem, space: &space, full: problem.scheme.params() };
    let runs: Vec<Run> = (0..problem.settings.restarts)
        .into_par_iter()
        .map(|k| run_restart(&obj, &space, problem, k))
        .collect();
    let mut order: Vec<usize> = (0..runs.len()).collect();
    order.sort_by(|&a, &b| runs[b].reward.total_cmp(&runs[a].reward).then(a.cmp(&b)));
    order.truncate(problem.settings.refine);
    let mut runs: Vec<Option<Run>> = runs.into_iter().map(Some).collect();
    let refined: Vec<(usize, Run)> = order
        .iter()
        .map(|&k| (k, runs[k].take().expect("each restart refined once")))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(k, run)| (k, refine_run(&obj, &space, problem, k, run)))
        .collect();
    for (k, run) in refined {
        runs[k] = Some(run);
    }
    let runs: Vec<Run> = runs.into_iter().map(|r| r.expect("refined run returned")).collect();
    let mut best = 0;
    for (k, r) in runs.iter().enumerate() {
        if r.reward > runs[best].reward {
            best = k;
        }
    }
    let run = &runs[best];
    if !run.reward.is_finite() {
        return Err(Error::Numeric("no restart produced a finite objective".into()));
    }
    let scheme = obj.scheme_at(&run.x);
    let branches = obj.reports(&scheme)?;
    let score = score_reports(&branches, problem);
    Ok(OptimizationResult {
        scheme,
        reward: score.reward,
        fidelity: score.fidelity,
        probability: score.probability,
        feasible: score.feasible,
        restart: best,
        evaluations: runs.iter().map(|r| r.evaluations).sum(),
        branches,
        trace: run.trace.clone(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AdaptiveResult {
    pub scheme: Scheme,
    pub stages: Vec<OptimizationResult>,
    pub report: SchemeReport,
}

/// Optimizes the first-listed branch jointly with every layer on its path,
/// then each alternative subtree with earlier layers held fixed, matching
/// the primary branch's fidelity.
pub fn optimize_adaptive(
    scheme: &Scheme,
    target: &FockTensor,
    settings: &Settings,
    eval: &EvalOptions,
) -> Result<AdaptiveResult> {
    optimize_adaptive_from(scheme, target, settings, eval, false)
}

/// As [`optimize_adaptive`]; with `warm` every stage starts one restart from
/// the scheme's current parameters.
pub fn optimize_adaptive_from(
    scheme: &Scheme,
    target: &FockTensor,
    settings: &Settings,
    eval: &EvalOptions,
    warm: bool,
) -> Result<AdaptiveResult> {
    scheme.validate()?;
    let primary = scheme.primary_path();
    let primary_nodes: Vec<Vec<usize>> = (0..primary.len()).map(|d| primary[..d].to_vec()).collect();
    let mut stages = Vec::new();
    let first = optimize(&Problem {
        scheme: scheme.clone(),
        target: target.clone(),
        branches: vec![primary.clone()],
        free_nodes: Some(primary_nodes.clone()),
        mode: settings.primary_mode(),
        settings: settings.clone(),
        eval: eval.clone(),
        warm_start: warm,
    })?;
    let f_star = settings.match_fidelity.or(settings.fidelity).unwrap_or(first.fidelity);
    let mut current = first.scheme.clone();
    stages.push(first);
    for node in &primary_nodes {
        let count = current.node(node).map(|n| n.outcomes.len()).unwrap_or(0);
        for i in 1..count {
            let mut sub = node.clone();
            sub.push(i);
            if current.node(&sub).is_none() {
                continue;
            }
            let free = subtree_nodes(&current, &sub);
            let branches: Vec<Vec<usize>> = current.leaf_paths().into_iter().filter(|p| p.starts_with(&sub)).collect();
            let stage_settings = Settings { seed: settings.seed.wrapping_add(1 + stages.len() as u64), ..settings.clone() };
            let res = optimize(&Problem {
                scheme: current.clone(),
                target: target.clone(),
                branches,
                free_nodes: Some(free),
                mode: Mode::MatchFidelity { fidelity: f_star },
                settings: stage_settings,
                eval: eval.clone(),
                warm_start: warm,
            })?;
            current = res.scheme.clone();
            stages.push(res);
        }
    }
    let leaves = current.leaf_paths();
    if leaves.len() > 1 {
        let problem = joint_problem(&current, target, &leaves, f_star, settings, eval, stages.len());
        let reports = leaves.iter().map(|b| current.evaluate_branch(b, target, eval)).collect::<Result<Vec<_>>>()?;
        let before = score_reports(&reports, &problem);
        let joint = optimize(&problem)?;
        if joint.feasible && (!before.feasible || joint.reward > before.reward) {
            current = joint.scheme.clone();
            stages.push(joint);
        }
    }
    let report = current.evaluate(target, &EvalOptions { aborts: true, ..eval.clone() })?;
    Ok(AdaptiveResult { scheme: current, stages, report })
}

fn joint_problem(
    scheme: &Scheme,
    target: &FockTensor,
    leaves: &[Vec<usize>],
    fidelity: f64,
    settings: &Settings,
    eval: &EvalOptions,
    stage: usize,
) -> Problem {
    Problem {
        scheme: scheme.clone(),
        target: target.clone(),
        branches: leaves.to_vec(),
        free_nodes: None,
        mode: Mode::MatchFidelity { fidelity },
        settings: Settings { seed: settings.seed.wrapping_add(1 + stage as u64), ..settings.clone() },
        eval: eval.clone(),
        warm_start: true,
    }
}

fn subtree_nodes(scheme: &Scheme, root: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![root.to_vec()];
    let mut k = 0;
    while k < out.len() {
        let p = out[k].clone();
        if let Some(node) = scheme.node(&p) {
            for (i, o) in node.outcomes.iter().enumerate() {
                if o.next.is_some() {
                    let mut q = p.clone();
                    q.push(i);
                    out.push(q);
                }
            }
        }
        k += 1;
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct LossAwareResult {
    pub result: OptimizationResult,
    /// The same parameters evaluated without loss.
    pub lossless: Vec<BranchReport>,
}

/// Re-optimizes `problem` under the loss model already set on its scheme,
/// starting restart 0 from the scheme's current parameters.
pub fn optimize_loss_aware(problem: &Problem) -> Result<LossAwareResult> {
    let result = optimize(&Problem { warm_start: true, ..problem.clone() })?;
    let mut ideal = result.scheme.clone();
    ideal.loss = crate::scheme::LossModel::none();
    let lossless = problem
        .branches
        .iter()
        .map(|b| ideal.evaluate_branch(b, &problem.target, &problem.eval))
        .collect::<Result<_>>()?;
    Ok(LossAwareResult { result, lossless })
}
