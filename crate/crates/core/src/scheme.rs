//! Layered heralding circuits with feed-forward, and their evaluation.
//!
//! A [`Scheme`] is a tree. Each [`Node`] holds one [`Layer`] (fresh inputs,
//! Gaussian operations, measured modes) and the list of accepted outcomes of
//! that layer's measurement. An outcome either ends in success (`next` is
//! empty; every mode but the output has then been measured) or continues into
//! the layer configured for it. Outcomes that are not listed abort.
//!
//! Every root-to-leaf path is a single Gaussian circuit with all measurements
//! moved to the end, so each branch is evaluated exactly from its Gaussian
//! state. Single-photon inputs are produced by heralding one arm of an
//! auxiliary two-mode squeezed vacuum.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bargmann::{pattern_probability, Bargmann};
use crate::error::{Error, Result};
use crate::fock::FockTensor;
use crate::gaussian::{CovarianceState, SymplecticMatrix, C64};
use crate::herald::{herald, herald_lossy, DensityBlock, Heralded, OutputState, Pattern};
use crate::mesh::{rectangular_layout, Mesh};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Input {
    pub mode: usize,
    /// Squeezing of the input; applied to the Fock state when `fock` is set.
    #[serde(default)]
    pub r: f64,
    #[serde(default)]
    pub phi: f64,
    /// Coherent displacement `[re, im]`; a free parameter when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub displacement: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fock: Option<usize>,
    /// Excludes this input's parameters from optimization.
    #[serde(default, skip_serializing_if = "is_false")]
    pub fixed: bool,
}

fn is_false(b: &bool) -> bool {
    !*b
}

impl Input {
    pub fn squeezed(mode: usize, r: f64, phi: f64) -> Self {
        Self { mode, r, phi, displacement: None, fock: None, fixed: false }
    }

    pub fn fock(mode: usize, n: usize) -> Self {
        Self { mode, r: 0.0, phi: 0.0, displacement: None, fock: Some(n), fixed: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Op {
    /// Rectangular mesh on `modes`; missing parameters default to zero.
    Interferometer {
        modes: Vec<usize>,
        #[serde(default)]
        thetas: Vec<f64>,
        #[serde(default)]
        phis: Vec<f64>,
        #[serde(default)]
        phases: Vec<f64>,
    },
    /// Beamsplitter, two inline squeezers, beamsplitter.
    Block {
        modes: [usize; 2],
        #[serde(default)]
        bs1: [f64; 2],
        #[serde(default)]
        r: [f64; 2],
        #[serde(default)]
        phi: [f64; 2],
        #[serde(default)]
        bs2: [f64; 2],
    },
    Squeeze {
        mode: usize,
        r: f64,
        #[serde(default)]
        phi: f64,
    },
    Beamsplitter {
        modes: [usize; 2],
        theta: f64,
        #[serde(default)]
        phi: f64,
    },
    Phase {
        mode: usize,
        phi: f64,
    },
}

impl Op {
    pub fn modes(&self) -> Vec<usize> {
        match self {
            Op::Interferometer { modes, .. } => modes.clone(),
            Op::Block { modes, .. } | Op::Beamsplitter { modes, .. } => modes.to_vec(),
            Op::Squeeze { mode, .. } | Op::Phase { mode, .. } => vec![*mode],
        }
    }

    pub fn interferometer(modes: Vec<usize>) -> Self {
        let k = modes.len();
        let units = rectangular_layout(k).len();
        Op::Interferometer { modes, thetas: vec![0.0; units], phis: vec![0.0; units], phases: vec![0.0; k] }
    }

    pub fn block(i: usize, j: usize) -> Self {
        Op::Block { modes: [i, j], bs1: [0.0; 2], r: [0.0; 2], phi: [0.0; 2], bs2: [0.0; 2] }
    }

    fn is_passive(&self) -> bool {
        match self {
            Op::Block { r, .. } => r[0] == 0.0 && r[1] == 0.0,
            Op::Squeeze { r, .. } => *r == 0.0,
            _ => true,
        }
    }

    fn symplectic(&self, modes: usize) -> Result<SymplecticMatrix> {
        match self {
            Op::Interferometer { modes: on, thetas, phis, phases } => {
                let mesh = Mesh::rectangular(on.len(), thetas, phis, phases)?;
                SymplecticMatrix::passive_on(&mesh.unitary(), on, modes)
            }
            Op::Block { modes: [i, j], bs1, r, phi, bs2 } => {
                let s = SymplecticMatrix::beamsplitter(bs1[0], bs1[1], *i, *j, modes)?;
                let s = SymplecticMatrix::squeezer(r[0], phi[0], *i, modes)?.after(&s);
                let s = SymplecticMatrix::squeezer(r[1], phi[1], *j, modes)?.after(&s);
                Ok(SymplecticMatrix::beamsplitter(bs2[0], bs2[1], *i, *j, modes)?.after(&s))
            }
            Op::Squeeze { mode, r, phi } => SymplecticMatrix::squeezer(*r, *phi, *mode, modes),
            Op::Beamsplitter { modes: [i, j], theta, phi } => SymplecticMatrix::beamsplitter(*theta, *phi, *i, *j, modes),
            Op::Phase { mode, phi } => SymplecticMatrix::phase(*phi, *mode, modes),
        }
    }

    fn apply_fock(&self, psi: &FockTensor) -> Result<FockTensor> {
        match self {
            Op::Interferometer { modes: on, thetas, phis, phases } => {
                let mesh = Mesh::rectangular(on.len(), thetas, phis, phases)?;
                psi.apply_mesh(&mesh, on)
            }
            Op::Block { modes: [i, j], bs1, r, phi, bs2 } => psi
                .apply_beamsplitter(bs1[0], bs1[1], *i, *j)?
                .apply_squeezer(r[0], phi[0], *i)?
                .apply_squeezer(r[1], phi[1], *j)?
                .apply_beamsplitter(bs2[0], bs2[1], *i, *j),
            Op::Squeeze { mode, r, phi } => psi.apply_squeezer(*r, *phi, *mode),
            Op::Beamsplitter { modes: [i, j], theta, phi } => psi.apply_beamsplitter(*theta, *phi, *i, *j),
            Op::Phase { mode, phi } => psi.apply_phase(*phi, *mode),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layer {
    #[serde(default)]
    pub inputs: Vec<Input>,
    #[serde(default)]
    pub ops: Vec<Op>,
    #[serde(default)]
    pub measure: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outcome {
    pub pattern: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub next: Option<Box<Node>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Node {
    pub layer: Layer,
    pub outcomes: Vec<Outcome>,
}

impl Node {
    pub fn leaf(layer: Layer, patterns: &[&[usize]]) -> Self {
        let outcomes = patterns.iter().map(|p| Outcome { pattern: p.to_vec(), next: None }).collect();
        Self { layer, outcomes }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossPosition {
    PostSqueeze,
    PreDetect,
    Output,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossSite {
    pub mode: usize,
    pub position: LossPosition,
    pub eta: f64,
}

/// Transmissivities at the three loss positions; `sites` multiply on top of
/// the uniform values for individual modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossModel {
    #[serde(default = "one")]
    pub post_squeeze: f64,
    #[serde(default = "one")]
    pub pre_detect: f64,
    #[serde(default = "one")]
    pub output: f64,
    #[serde(default)]
    pub sites: Vec<LossSite>,
}

fn one() -> f64 {
    1.0
}

impl Default for LossModel {
    fn default() -> Self {
        Self::none()
    }
}

impl LossModel {
    pub fn none() -> Self {
        Self { post_squeeze: 1.0, pre_detect: 1.0, output: 1.0, sites: Vec::new() }
    }

    /// Loss fraction `loss` end to end on every mode, split evenly between
    /// the site after the input and the site before the detector or output.
    pub fn uniform(loss: f64) -> Self {
        let eta = (1.0 - loss).sqrt();
        Self { post_squeeze: eta, pre_detect: eta, output: eta, sites: Vec::new() }
    }

    /// Loss only at the end of every mode.
    pub fn detection(loss: f64) -> Self {
        let eta = 1.0 - loss;
        Self { post_squeeze: 1.0, pre_detect: eta, output: eta, sites: Vec::new() }
    }

    pub fn eta(&self, mode: usize, position: LossPosition) -> f64 {
        let base = match position {
            LossPosition::PostSqueeze => self.post_squeeze,
            LossPosition::PreDetect => self.pre_detect,
            LossPosition::Output => self.output,
        };
        self.sites
            .iter()
            .filter(|s| s.mode == mode && s.position == position)
            .fold(base, |acc, s| acc * s.eta)
    }

    pub fn is_lossless(&self) -> bool {
        self.post_squeeze == 1.0 && self.pre_detect == 1.0 && self.output == 1.0 && self.sites.iter().all(|s| s.eta == 1.0)
    }

    fn validate(&self, modes: usize) -> Result<()> {
        for e in [self.post_squeeze, self.pre_detect, self.output].into_iter().chain(self.sites.iter().map(|s| s.eta)) {
            if !(0.0..=1.0).contains(&e) {
                return Err(Error::InvalidTransmissivity(e));
            }
        }
        for s in &self.sites {
            if s.mode >= modes {
                return Err(Error::ModeOutOfRange { mode: s.mode, modes });
            }
        }
        Ok(())
    }
}

/// Bounds on the patterns enumerated for abort accounting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Enumeration {
    #[serde(default = "default_per_mode")]
    pub per_mode: usize,
    #[serde(default = "default_total")]
    pub total: usize,
}

fn default_per_mode() -> usize {
    4
}

fn default_total() -> usize {
    6
}

impl Default for Enumeration {
    fn default() -> Self {
        Self { per_mode: 4, total: 6 }
    }
}

impl Enumeration {
    pub fn patterns(&self, k: usize) -> Vec<Pattern> {
        let mut out = Vec::new();
        let mut counts = vec![0usize; k];
        loop {
            if counts.iter().sum::<usize>() <= self.total {
                out.push(Pattern(counts.clone()));
            }
            let mut d = k;
            loop {
                if d == 0 {
                    return out;
                }
                d -= 1;
                counts[d] += 1;
                if counts[d] <= self.per_mode {
                    break;
                }
                counts[d] = 0;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scheme {
    pub modes: usize,
    /// The unmeasured mode carrying the heralded state.
    pub output: usize,
    pub root: Node,
    #[serde(default)]
    pub loss: LossModel,
    /// Bound on every squeezing magnitude, inputs and inline alike.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
    #[serde(default)]
    pub enumeration: Enumeration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    /// Input squeezing magnitude, `[0, bound]`.
    Squeeze,
    /// Inline squeezing, `[-bound, bound]`.
    InlineSqueeze,
    /// Mixing angle of a beamsplitter, `[0, pi/2]`.
    Mixing,
    /// Periodic phase.
    Angle,
    Displacement,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamInfo {
    /// Outcome indices leading to the node that owns the parameter.
    pub node: Vec<usize>,
    pub kind: ParamKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Backend {
    /// Exact evaluation from the Gaussian state.
    Gaussian,
    /// Gate-by-gate evaluation on a truncated Fock tensor.
    Fock { cutoff: usize },
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub backend: Backend,
    /// Output-mode cutoff; defaults to the target's length.
    pub output_cutoff: Option<usize>,
    /// Enumerate unaccepted outcomes as abort rows.
    pub aborts: bool,
    pub keep_states: bool,
    /// Leaf-level aborts at or above this fidelity are summed separately.
    pub flag_fidelity: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { backend: Backend::Gaussian, output_cutoff: None, aborts: true, keep_states: false, flag_fidelity: 0.9 }
    }
}

impl EvalOptions {
    pub fn fast() -> Self {
        Self { aborts: false, ..Self::default() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BranchReport {
    /// Outcome indices of the accepted path; empty for abort rows.
    pub path: Vec<usize>,
    pub patterns: Vec<Pattern>,
    pub probability: f64,
    pub fidelity: Option<f64>,
    /// Conditional norm beyond the output cutoff.
    pub truncation: f64,
    pub abort: bool,
    #[serde(skip)]
    pub state: Option<OutputState>,
}

impl BranchReport {
    /// Counts of every layer, layers separated by `;`.
    pub fn label(&self) -> String {
        self.patterns
            .iter()
            .map(|p| p.0.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","))
            .collect::<Vec<_>>()
            .join(";")
    }

    pub fn flat_pattern(&self) -> Vec<usize> {
        self.patterns.iter().flat_map(|p| p.0.iter().copied()).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Totals {
    pub p_success: f64,
    /// Probability of enumerated unaccepted outcomes.
    pub p_abort: f64,
    /// Probability of outcomes beyond the enumeration bounds.
    pub p_tail: f64,
    pub f_min: Option<f64>,
    pub f_max: Option<f64>,
    /// Success plus leaf-level aborts whose fidelity reaches the flag threshold.
    pub p_with_flagged: f64,
    pub flag_fidelity: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SchemeReport {
    pub branches: Vec<BranchReport>,
    pub totals: Totals,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConcatenatedReport {
    pub report: SchemeReport,
    /// Success probability of leaves outside the all-zero first outcome.
    pub p_base: f64,
    /// Probability of the all-zero first outcome.
    pub p_zero_first: f64,
    /// Success probability of leaves under the all-zero first outcome.
    pub p_replica: f64,
    /// What the total adds beyond `p_base + p_zero_first * p_base`.
    pub p_extra: f64,
    pub p_total: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RerunReport {
    pub p_single: f64,
    pub attempts: u32,
    pub p_total: f64,
    pub fidelity: Option<f64>,
}

/// Success probability of `k` independent attempts.
pub fn rerun_probability(p1: f64, k: u32) -> f64 {
    1.0 - (1.0 - p1).powi(k as i32)
}

/// `p3 + p_zero * p3 + p_extra`.
pub fn concatenated_total(p3: f64, p_zero: f64, p_extra: f64) -> f64 {
    p3 + p_zero * p3 + p_extra
}

/// Layers and patterns along one root-to-node path.
struct Path<'a> {
    layers: Vec<&'a Layer>,
    patterns: Vec<Pattern>,
}

impl<'a> Path<'a> {
    fn measured(&self) -> Vec<usize> {
        self.layers.iter().flat_map(|l| l.measure.iter().copied()).collect()
    }

    fn counts(&self) -> Vec<usize> {
        self.patterns.iter().flat_map(|p| p.0.iter().copied()).collect()
    }

    fn fock_inputs(&self) -> Vec<(usize, usize)> {
        self.layers
            .iter()
            .flat_map(|l| l.inputs.iter())
            .filter_map(|i| i.fock.filter(|&n| n > 0).map(|n| (i.mode, n)))
            .collect()
    }
}

/// Joint probabilities below this are treated as impossible outcomes.
pub const ZERO_PROBABILITY: f64 = 1e-14;

fn tmsv_squeezing(n: usize) -> f64 {
    let lam = (n as f64 / (n as f64 + 1.0)).sqrt();
    lam.atanh()
}

fn herald_weight(n: usize) -> f64 {
    let lam2 = n as f64 / (n as f64 + 1.0);
    (1.0 - lam2) * lam2.powi(n as i32)
}

enum GState {
    Pure { s: DMatrix<f64>, xi: DVector<f64> },
    Mixed(CovarianceState),
}

impl GState {
    fn apply(&mut self, s: &SymplecticMatrix) -> Result<()> {
        match self {
            GState::Pure { s: acc, xi } => {
                *acc = s.matrix() * &*acc;
                *xi = s.matrix() * &*xi;
            }
            GState::Mixed(cov) => *cov = cov.apply_symplectic(s)?,
        }
        Ok(())
    }

    fn displace(&mut self, alpha: C64, mode: usize, modes: usize) {
        let xi = match self {
            GState::Pure { xi, .. } => xi,
            GState::Mixed(cov) => &mut cov.xi,
        };
        xi[mode] += 2.0 * alpha.re;
        xi[modes + mode] += 2.0 * alpha.im;
    }

    fn covariance(&self) -> CovarianceState {
        match self {
            GState::Pure { s, xi } => CovarianceState { v: s * s.transpose(), xi: xi.clone() },
            GState::Mixed(cov) => cov.clone(),
        }
    }

    fn loss(&mut self, eta: f64, mode: usize) -> Result<()> {
        if eta == 1.0 {
            return Ok(());
        }
        let cov = self.covariance().apply_loss(eta, mode)?;
        *self = GState::Mixed(cov);
        Ok(())
    }
}

impl Scheme {
    /// Fills absent interferometer parameters with zeros.
    pub fn normalize(&mut self) {
        fn fill(node: &mut Node) {
            for op in &mut node.layer.ops {
                if let Op::Interferometer { modes, thetas, phis, phases } = op {
                    let units = rectangular_layout(modes.len()).len();
                    if thetas.is_empty() {
                        *thetas = vec![0.0; units];
                    }
                    if phis.is_empty() {
                        *phis = vec![0.0; units];
                    }
                    if phases.is_empty() {
                        *phases = vec![0.0; modes.len()];
                    }
                }
            }
            for o in &mut node.outcomes {
                if let Some(next) = o.next.as_deref_mut() {
                    fill(next);
                }
            }
        }
        fill(&mut self.root);
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes == 0 {
            return Err(Error::InvalidCircuit("scheme needs at least one mode".into()));
        }
        if self.output >= self.modes {
            return Err(Error::ModeOutOfRange { mode: self.output, modes: self.modes });
        }
        self.loss.validate(self.modes)?;
        if let Some(r) = self.r_max {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::InvalidParameter(format!("r_max must be a finite non-negative number, got {r}")));
            }
        }
        self.validate_node(&self.root, &BTreeSet::new(), &BTreeSet::new(), &BTreeSet::new())
    }

    fn check_r(&self, r: f64, what: &str) -> Result<()> {
        if !r.is_finite() {
            return Err(Error::InvalidParameter(format!("{what} squeezing is not finite")));
        }
        if let Some(max) = self.r_max {
            if r.abs() > max + 1e-12 {
                return Err(Error::InvalidCircuit(format!("{what} squeezing {r} exceeds r_max {max}")));
            }
        }
        Ok(())
    }

    fn validate_node(
        &self,
        node: &Node,
        prepared: &BTreeSet<usize>,
        touched: &BTreeSet<usize>,
        measured: &BTreeSet<usize>,
    ) -> Result<()> {
        let n = self.modes;
        let (mut prepared, mut touched, mut measured) = (prepared.clone(), touched.clone(), measured.clone());
        let layer = &node.layer;
        for input in &layer.inputs {
            let m = input.mode;
            if m >= n {
                return Err(Error::ModeOutOfRange { mode: m, modes: n });
            }
            if prepared.contains(&m) || touched.contains(&m) || measured.contains(&m) {
                return Err(Error::InvalidCircuit(format!("mode {m} is prepared after it was already in use")));
            }
            self.check_r(input.r, "input")?;
            if !input.phi.is_finite() || input.displacement.is_some_and(|d| !d[0].is_finite() || !d[1].is_finite()) {
                return Err(Error::InvalidParameter(format!("non-finite input parameter on mode {m}")));
            }
            prepared.insert(m);
        }
        for op in &layer.ops {
            let modes = op.modes();
            for (k, &m) in modes.iter().enumerate() {
                if m >= n {
                    return Err(Error::ModeOutOfRange { mode: m, modes: n });
                }
                if modes[..k].contains(&m) {
                    return Err(Error::ModeCollision(m));
                }
                if measured.contains(&m) {
                    return Err(Error::InvalidCircuit(format!("mode {m} is used after its measurement")));
                }
                touched.insert(m);
            }
            match op {
                Op::Interferometer { modes, thetas, phis, phases } => {
                    let units = rectangular_layout(modes.len()).len();
                    if thetas.len() != units || phis.len() != units || phases.len() != modes.len() {
                        return Err(Error::InvalidCircuit(format!(
                            "interferometer on {} modes needs {units} angles, {units} unit phases and {} output phases",
                            modes.len(),
                            modes.len()
                        )));
                    }
                    if thetas.iter().chain(phis).chain(phases).any(|x| !x.is_finite()) {
                        return Err(Error::InvalidParameter("non-finite interferometer parameter".into()));
                    }
                }
                Op::Block { r, .. } => {
                    self.check_r(r[0], "inline")?;
                    self.check_r(r[1], "inline")?;
                }
                Op::Squeeze { r, .. } => self.check_r(*r, "inline")?,
                _ => {}
            }
        }
        for (k, &m) in layer.measure.iter().enumerate() {
            if m >= n {
                return Err(Error::ModeOutOfRange { mode: m, modes: n });
            }
            if m == self.output {
                return Err(Error::InvalidCircuit(format!("output mode {m} cannot be measured")));
            }
            if measured.contains(&m) || layer.measure[..k].contains(&m) {
                return Err(Error::InvalidCircuit(format!("mode {m} is measured twice")));
            }
        }
        measured.extend(layer.measure.iter().copied());
        if node.outcomes.is_empty() {
            return Err(Error::InvalidCircuit("every layer needs at least one accepted outcome".into()));
        }
        for (k, o) in node.outcomes.iter().enumerate() {
            if o.pattern.len() != layer.measure.len() {
                return Err(Error::DimensionMismatch { expected: layer.measure.len(), got: o.pattern.len() });
            }
            if node.outcomes[..k].iter().any(|p| p.pattern == o.pattern) {
                return Err(Error::InvalidCircuit(format!("outcome {:?} listed twice", o.pattern)));
            }
            match &o.next {
                Some(next) => self.validate_node(next, &prepared, &touched, &measured)?,
                None => {
                    if measured.len() + 1 != n {
                        return Err(Error::InvalidCircuit(format!(
                            "outcome {:?} ends the scheme with {} of {} ancilla modes measured",
                            o.pattern,
                            measured.len(),
                            n - 1
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn node(&self, path: &[usize]) -> Option<&Node> {
        let mut node = &self.root;
        for &i in path {
            node = node.outcomes.get(i)?.next.as_deref()?;
        }
        Some(node)
    }

    pub fn node_mut(&mut self, path: &[usize]) -> Option<&mut Node> {
        let mut node = &mut self.root;
        for &i in path {
            node = node.outcomes.get_mut(i)?.next.as_deref_mut()?;
        }
        Some(node)
    }

    /// Outcome-index paths of every success leaf, depth first.
    pub fn leaf_paths(&self) -> Vec<Vec<usize>> {
        fn walk(node: &Node, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            for (i, o) in node.outcomes.iter().enumerate() {
                prefix.push(i);
                match &o.next {
                    Some(next) => walk(next, prefix, out),
                    None => out.push(prefix.clone()),
                }
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut Vec::new(), &mut out);
        out
    }

    /// Path following the first listed outcome at every node.
    pub fn primary_path(&self) -> Vec<usize> {
        let mut path = Vec::new();
        let mut node = &self.root;
        loop {
            path.push(0);
            match node.outcomes[0].next.as_deref() {
                Some(next) => node = next,
                None => return path,
            }
        }
    }

    fn path(&self, outcomes: &[usize]) -> Result<Path<'_>> {
        let mut layers = Vec::new();
        let mut patterns = Vec::new();
        let mut node = &self.root;
        for (d, &i) in outcomes.iter().enumerate() {
            layers.push(&node.layer);
            let o = node
                .outcomes
                .get(i)
                .ok_or_else(|| Error::InvalidCircuit(format!("no outcome {i} at depth {d}")))?;
            patterns.push(Pattern(o.pattern.clone()));
            if d + 1 < outcomes.len() {
                node = o
                    .next
                    .as_deref()
                    .ok_or_else(|| Error::MissingPolicyBranch(format!("{:?}", o.pattern)))?;
            }
        }
        Ok(Path { layers, patterns })
    }

    /// Gaussian state of the circuit along `path`, with auxiliary modes for
    /// Fock inputs appended after the circuit modes.
    fn gaussian_state(&self, path: &Path<'_>) -> Result<(GState, Vec<(usize, usize)>)> {
        let n = self.modes;
        let focks = path.fock_inputs();
        let total = n + focks.len();
        let mut st = GState::Pure { s: DMatrix::identity(2 * total, 2 * total), xi: DVector::zeros(2 * total) };
        let mut ancillas = Vec::new();
        for layer in &path.layers {
            for input in &layer.inputs {
                let m = input.mode;
                if let Some(k) = input.fock.filter(|&k| k > 0) {
                    let a = n + ancillas.len();
                    let r = tmsv_squeezing(k);
                    st.apply(&SymplecticMatrix::squeezer(r, 0.0, m, total)?)?;
                    st.apply(&SymplecticMatrix::squeezer(-r, 0.0, a, total)?)?;
                    st.apply(&SymplecticMatrix::beamsplitter(std::f64::consts::FRAC_PI_4, 0.0, m, a, total)?)?;
                    ancillas.push((a, k));
                }
                if input.r != 0.0 {
                    st.apply(&SymplecticMatrix::squeezer(input.r, input.phi, m, total)?)?;
                }
                if let Some([re, im]) = input.displacement {
                    st.displace(C64::new(re, im), m, total);
                }
                st.loss(self.loss.eta(m, LossPosition::PostSqueeze), m)?;
            }
            for op in &layer.ops {
                st.apply(&op.symplectic(total)?)?;
            }
        }
        for m in path.measured() {
            st.loss(self.loss.eta(m, LossPosition::PreDetect), m)?;
        }
        st.loss(self.loss.eta(self.output, LossPosition::Output), self.output)?;
        Ok((st, ancillas))
    }

    /// Probability of the patterns along `path` (no output needed).
    fn path_probability(&self, path: &Path<'_>) -> Result<f64> {
        let (st, ancillas) = self.gaussian_state(path)?;
        let mut modes = path.measured();
        let mut counts = path.counts();
        for &(a, k) in &ancillas {
            modes.push(a);
            counts.push(k);
        }
        let norm: f64 = ancillas.iter().map(|&(_, k)| herald_weight(k)).product();
        if modes.is_empty() {
            return Ok(1.0);
        }
        Ok(pattern_probability(&st.covariance(), &modes, &counts)? / norm)
    }

    /// Exact probability and conditional output state of a complete path.
    fn gaussian_branch(&self, path: &Path<'_>, cutoff: usize) -> Result<(f64, Option<OutputState>)> {
        let (st, ancillas) = self.gaussian_state(path)?;
        let total = self.modes + ancillas.len();
        let mut fixed = vec![None; total];
        for (m, c) in path.measured().into_iter().zip(path.counts()) {
            fixed[m] = Some(c);
        }
        for &(a, k) in &ancillas {
            fixed[a] = Some(k);
        }
        let dims: Vec<usize> = (0..total).map(|m| if m == self.output { cutoff } else { fixed[m].unwrap_or(0) + 1 }).collect();
        let mut strides = vec![1usize; total];
        for k in (0..total.saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * dims[k + 1];
        }
        let base: usize = (0..total).filter(|&m| m != self.output).map(|m| fixed[m].unwrap_or(0) * strides[m]).sum();
        let so = strides[self.output];

        let meas_modes: Vec<usize> = (0..total).filter(|&m| m != self.output).collect();
        let meas_counts: Vec<usize> = meas_modes.iter().map(|&m| fixed[m].unwrap_or(0)).collect();
        let cov = st.covariance();
        let p_joint = if meas_modes.is_empty() { 1.0 } else { pattern_probability(&cov, &meas_modes, &meas_counts)? };
        let norm: f64 = ancillas.iter().map(|&(_, k)| herald_weight(k)).product();
        let p = p_joint / norm;
        if !(p_joint > ZERO_PROBABILITY) {
            return Ok((p.max(0.0), None));
        }
        let state = match &st {
            GState::Pure { s, xi } => {
                let g = Bargmann::pure_state(&SymplecticMatrix::from_raw(s.clone()), xi)?;
                let amps = g.amplitudes(&dims);
                let scale = p_joint.sqrt();
                let out: Vec<C64> = (0..cutoff).map(|j| amps[base + j * so] / scale).collect();
                let psi = FockTensor::single_mode(out);
                OutputState::Pure(if psi.norm_sqr() > 1.0 { psi.normalized() } else { psi })
            }
            GState::Mixed(cov) => {
                let g = Bargmann::density(cov)?;
                let full: Vec<usize> = dims.iter().chain(dims.iter()).copied().collect();
                let amps = g.amplitudes(&full);
                let side: usize = dims.iter().product();
                let rho = DMatrix::from_fn(cutoff, cutoff, |j, k| amps[(base + j * so) * side + base + k * so] / p_joint);
                let rho = DensityBlock::single_mode(rho);
                OutputState::Mixed(if rho.trace() > 1.0 { rho.normalized() } else { rho })
            }
        };
        Ok((p, Some(state)))
    }

    /// Probability and conditional output state of a complete path on the
    /// truncated Fock tensor.
    fn fock_branch(&self, path: &Path<'_>, cutoff: usize) -> Result<(f64, Option<OutputState>, f64)> {
        let n = self.modes;
        let mut occupations = vec![0usize; n];
        for &(m, k) in &path.fock_inputs() {
            occupations[m] = k;
        }
        let mut psi = FockTensor::fock_input(&occupations, &vec![cutoff; n])?;
        for layer in &path.layers {
            for input in &layer.inputs {
                if self.loss.eta(input.mode, LossPosition::PostSqueeze) != 1.0 {
                    return Err(Error::InvalidCircuit(
                        "loss after the inputs needs the gaussian backend".into(),
                    ));
                }
                if input.r != 0.0 {
                    psi = psi.apply_squeezer(input.r, input.phi, input.mode)?;
                }
                if let Some([re, im]) = input.displacement {
                    psi = psi.apply_displacement(C64::new(re, im), input.mode)?;
                }
            }
            for op in &layer.ops {
                psi = op.apply_fock(&psi)?;
            }
        }
        let truncation = psi.truncation();
        let measured = path.measured();
        let pattern = Pattern(path.counts());
        let eta_detect: Vec<f64> = measured.iter().map(|&m| self.loss.eta(m, LossPosition::PreDetect)).collect();
        let eta_out = self.loss.eta(self.output, LossPosition::Output);
        if eta_out == 1.0 && eta_detect.iter().all(|&e| e == 1.0) {
            Ok(match herald(&psi, &measured, &pattern)? {
                Heralded::Success { state, probability } => (probability, Some(OutputState::Pure(state)), truncation),
                Heralded::ZeroProbability => (0.0, None, truncation),
            })
        } else {
            Ok(match herald_lossy(&psi, &measured, &pattern, &eta_detect, eta_out)? {
                Heralded::Success { state, probability } => (probability, Some(OutputState::Mixed(state)), truncation),
                Heralded::ZeroProbability => (0.0, None, truncation),
            })
        }
    }

    fn branch_report(
        &self,
        path: &Path<'_>,
        outcome_path: Vec<usize>,
        target: &FockTensor,
        opts: &EvalOptions,
        abort: bool,
    ) -> Result<BranchReport> {
        let (p, state, truncation) = match opts.backend {
            Backend::Gaussian => {
                let cutoff = opts.output_cutoff.unwrap_or(target.cutoffs()[0]).max(1);
                let (p, state) = self.gaussian_branch(path, cutoff)?;
                let trunc = state.as_ref().map(|s| 1.0 - trace_of(s)).unwrap_or(0.0).max(0.0);
                (p, state, trunc)
            }
            Backend::Fock { cutoff } => self.fock_branch(path, cutoff)?,
        };
        let fidelity = state.as_ref().map(|s| raw_fidelity(s, target).clamp(0.0, 1.0));
        Ok(BranchReport {
            path: outcome_path,
            patterns: path.patterns.clone(),
            probability: p,
            fidelity,
            truncation,
            abort,
            state: if opts.keep_states { state } else { None },
        })
    }

    /// Evaluates the success leaf reached by `outcomes`.
    pub fn evaluate_branch(&self, outcomes: &[usize], target: &FockTensor, opts: &EvalOptions) -> Result<BranchReport> {
        let path = self.path(outcomes)?;
        let measured: usize = path.layers.iter().map(|l| l.measure.len()).sum();
        if measured + 1 != self.modes {
            return Err(Error::InvalidCircuit(format!("path {outcomes:?} does not end in a success leaf")));
        }
        self.branch_report(&path, outcomes.to_vec(), target, opts, false)
    }

    /// Circuit of the leaf reached by `outcomes`, heralded on other patterns.
    pub fn evaluate_branch_at(
        &self,
        outcomes: &[usize],
        patterns: &[Pattern],
        target: &FockTensor,
        opts: &EvalOptions,
    ) -> Result<BranchReport> {
        let mut path = self.path(outcomes)?;
        if patterns.len() != path.patterns.len() {
            return Err(Error::DimensionMismatch { expected: path.patterns.len(), got: patterns.len() });
        }
        for (l, p) in path.layers.iter().zip(patterns) {
            if l.measure.len() != p.0.len() {
                return Err(Error::DimensionMismatch { expected: l.measure.len(), got: p.0.len() });
            }
        }
        let same = path.patterns == patterns;
        path.patterns = patterns.to_vec();
        self.branch_report(&path, outcomes.to_vec(), target, opts, !same)
    }

    /// Every success leaf plus (optionally) abort rows, with totals.
    pub fn evaluate(&self, target: &FockTensor, opts: &EvalOptions) -> Result<SchemeReport> {
        self.validate()?;
        let leaves = self.leaf_paths();
        let mut branches: Vec<BranchReport> = leaves
            .par_iter()
            .map(|p| self.evaluate_branch(p, target, opts))
            .collect::<Result<_>>()?;
        if opts.aborts {
            let mut jobs = Vec::new();
            self.abort_jobs(&self.root, &mut Vec::new(), &mut jobs);
            let gauss = EvalOptions { backend: Backend::Gaussian, ..opts.clone() };
            let rows: Vec<BranchReport> = jobs
                .par_iter()
                .map(|(prefix, pattern, complete)| {
                    let mut path = self.path(prefix)?;
                    path.layers.push(&self.node(prefix).expect("abort job on a node").layer);
                    path.patterns.push(pattern.clone());
                    if *complete {
                        self.branch_report(&path, Vec::new(), target, &gauss, true)
                    } else {
                        Ok(BranchReport {
                            path: Vec::new(),
                            patterns: path.patterns.clone(),
                            probability: self.path_probability(&path)?,
                            fidelity: None,
                            truncation: 0.0,
                            abort: true,
                            state: None,
                        })
                    }
                })
                .collect::<Result<_>>()?;
            branches.extend(rows);
        }
        branches.sort_by(|a, b| a.patterns.cmp(&b.patterns).then(a.abort.cmp(&b.abort)));
        let totals = totals(&branches, opts.flag_fidelity);
        Ok(SchemeReport { branches, totals })
    }

    /// `(prefix to node, unaccepted pattern, pattern completes the circuit)`.
    fn abort_jobs(&self, node: &Node, prefix: &mut Vec<usize>, jobs: &mut Vec<(Vec<usize>, Pattern, bool)>) {
        let measured_before: usize = {
            let path = self.path(prefix).expect("prefix of an existing node");
            path.layers.iter().map(|l| l.measure.len()).sum()
        };
        let complete = measured_before + node.layer.measure.len() + 1 == self.modes;
        for pattern in self.enumeration.patterns(node.layer.measure.len()) {
            if !node.outcomes.iter().any(|o| o.pattern == pattern.0) {
                jobs.push((prefix.clone(), pattern, complete));
            }
        }
        for (i, o) in node.outcomes.iter().enumerate() {
            if let Some(next) = &o.next {
                prefix.push(i);
                self.abort_jobs(next, prefix, jobs);
                prefix.pop();
            }
        }
    }

    /// Single-layer scheme heralded on `pattern` (accepted or not).
    pub fn evaluate_non_adaptive(&self, pattern: &Pattern, target: &FockTensor, opts: &EvalOptions) -> Result<BranchReport> {
        self.validate()?;
        if self.root.outcomes.iter().any(|o| o.next.is_some()) {
            return Err(Error::InvalidCircuit("non-adaptive evaluation needs a single-layer scheme".into()));
        }
        if pattern.0.len() != self.root.layer.measure.len() {
            return Err(Error::DimensionMismatch { expected: self.root.layer.measure.len(), got: pattern.0.len() });
        }
        let path = Path { layers: vec![&self.root.layer], patterns: vec![pattern.clone()] };
        let idx = self.root.outcomes.iter().position(|o| o.pattern == pattern.0);
        self.branch_report(&path, idx.map(|i| vec![i]).unwrap_or_default(), target, opts, idx.is_none())
    }

    pub fn evaluate_adaptive(&self, target: &FockTensor, opts: &EvalOptions) -> Result<SchemeReport> {
        self.evaluate(target, opts)
    }

    /// Breaks the success probability into the part reached without the
    /// all-zero first outcome and the part that recurses through it.
    pub fn evaluate_concatenated(&self, target: &FockTensor, opts: &EvalOptions) -> Result<ConcatenatedReport> {
        let report = self.evaluate(target, opts)?;
        let zero_idx = self.root.outcomes.iter().position(|o| o.pattern.iter().all(|&n| n == 0) && o.next.is_some());
        let mut p_base = 0.0;
        let mut p_replica = 0.0;
        for b in report.branches.iter().filter(|b| !b.abort) {
            if Some(b.path[0]) == zero_idx {
                p_replica += b.probability;
            } else {
                p_base += b.probability;
            }
        }
        let p_zero_first = match zero_idx {
            Some(_) => {
                let zero = Pattern(vec![0; self.root.layer.measure.len()]);
                let path = Path { layers: vec![&self.root.layer], patterns: vec![zero] };
                self.path_probability(&path)?
            }
            None => 0.0,
        };
        let p_total = p_base + p_replica;
        let p_extra = p_total - concatenated_total(p_base, p_zero_first, 0.0);
        Ok(ConcatenatedReport { report, p_base, p_zero_first, p_replica, p_extra, p_total })
    }

    /// Success probability of repeating a single-branch scheme `attempts` times.
    pub fn evaluate_rerun(&self, target: &FockTensor, attempts: u32, opts: &EvalOptions) -> Result<RerunReport> {
        let leaves = self.leaf_paths();
        if leaves.len() != 1 {
            return Err(Error::InvalidCircuit("rerun needs a scheme with a single success branch".into()));
        }
        let b = self.evaluate_branch(&leaves[0], target, opts)?;
        Ok(RerunReport {
            p_single: b.probability,
            attempts,
            p_total: rerun_probability(b.probability, attempts),
            fidelity: b.fidelity,
        })
    }

    /// Visits every free parameter in a fixed order: nodes depth first,
    /// inputs before operations.
    ///
    /// Output phases of an interferometer on modes measured right after it
    /// in the same layer do not change any outcome and are skipped.
    pub fn visit_params_mut(&mut self, f: &mut dyn FnMut(&[usize], ParamKind, &mut f64)) {
        fn visit(node: &mut Node, path: &mut Vec<usize>, f: &mut dyn FnMut(&[usize], ParamKind, &mut f64)) {
            let layer = &mut node.layer;
            for input in &mut layer.inputs {
                if input.fixed {
                    continue;
                }
                f(path, ParamKind::Squeeze, &mut input.r);
                f(path, ParamKind::Angle, &mut input.phi);
                if let Some(d) = input.displacement.as_mut() {
                    f(path, ParamKind::Displacement, &mut d[0]);
                    f(path, ParamKind::Displacement, &mut d[1]);
                }
            }
            let measure = layer.measure.clone();
            let touched_later: Vec<BTreeSet<usize>> = (0..layer.ops.len())
                .map(|k| layer.ops[k + 1..].iter().flat_map(|o| o.modes()).collect())
                .collect();
            for (k, op) in layer.ops.iter_mut().enumerate() {
                match op {
                    Op::Interferometer { modes, thetas, phis, phases } => {
                        for (t, p) in thetas.iter_mut().zip(phis.iter_mut()) {
                            f(path, ParamKind::Mixing, t);
                            f(path, ParamKind::Angle, p);
                        }
                        for (m, ph) in modes.iter().zip(phases.iter_mut()) {
                            if measure.contains(m) && !touched_later[k].contains(m) {
                                continue;
                            }
                            f(path, ParamKind::Angle, ph);
                        }
                    }
                    Op::Block { bs1, r, phi, bs2, .. } => {
                        f(path, ParamKind::Mixing, &mut bs1[0]);
                        f(path, ParamKind::Angle, &mut bs1[1]);
                        f(path, ParamKind::InlineSqueeze, &mut r[0]);
                        f(path, ParamKind::InlineSqueeze, &mut r[1]);
                        f(path, ParamKind::Angle, &mut phi[0]);
                        f(path, ParamKind::Angle, &mut phi[1]);
                        f(path, ParamKind::Mixing, &mut bs2[0]);
                        f(path, ParamKind::Angle, &mut bs2[1]);
                    }
                    Op::Squeeze { r, phi, .. } => {
                        f(path, ParamKind::InlineSqueeze, r);
                        f(path, ParamKind::Angle, phi);
                    }
                    Op::Beamsplitter { theta, phi, .. } => {
                        f(path, ParamKind::Mixing, theta);
                        f(path, ParamKind::Angle, phi);
                    }
                    Op::Phase { phi, .. } => f(path, ParamKind::Angle, phi),
                }
            }
            for (i, o) in node.outcomes.iter_mut().enumerate() {
                if let Some(next) = o.next.as_deref_mut() {
                    path.push(i);
                    visit(next, path, f);
                    path.pop();
                }
            }
        }
        visit(&mut self.root, &mut Vec::new(), f);
    }

    pub fn param_info(&self) -> Vec<ParamInfo> {
        let mut out = Vec::new();
        self.clone().visit_params_mut(&mut |node, kind, _| out.push(ParamInfo { node: node.to_vec(), kind }));
        out
    }

    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.clone().visit_params_mut(&mut |_, _, v| out.push(*v));
        out
    }

    pub fn set_params(&mut self, values: &[f64]) {
        let mut it = values.iter();
        self.visit_params_mut(&mut |_, _, v| {
            if let Some(x) = it.next() {
                *v = *x;
            }
        });
    }

    /// True when every operation between inputs and detection is passive.
    pub fn is_passive(&self) -> bool {
        fn walk(node: &Node) -> bool {
            node.layer.ops.iter().all(Op::is_passive)
                && node.outcomes.iter().all(|o| o.next.as_deref().map_or(true, walk))
        }
        walk(&self.root)
    }

    /// Copy with the uniform post-input loss moved to just before detection
    /// and the output.
    pub fn with_loss_moved_to_detection(&self) -> Self {
        let mut out = self.clone();
        let eta = self.loss.post_squeeze;
        out.loss.post_squeeze = 1.0;
        out.loss.pre_detect *= eta;
        out.loss.output *= eta;
        out
    }
}

fn trace_of(s: &OutputState) -> f64 {
    match s {
        OutputState::Pure(psi) => psi.norm_sqr(),
        OutputState::Mixed(rho) => rho.trace(),
    }
}

/// Fidelity of a conditional state normalized to the exact branch
/// probability: weight beyond the cutoff counts as infidelity.
fn raw_fidelity(state: &OutputState, target: &FockTensor) -> f64 {
    let t = target.amplitudes();
    let tn = target.norm_sqr();
    match state {
        OutputState::Pure(psi) => {
            let o: C64 = psi.amplitudes().iter().zip(t).map(|(a, b)| b.conj() * a).sum();
            o.norm_sqr() / tn
        }
        OutputState::Mixed(rho) => {
            let n = rho.rho.nrows().min(t.len());
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..n {
                for j in 0..n {
                    acc += t[i].conj() * rho.rho[(i, j)] * t[j];
                }
            }
            acc.re / tn
        }
    }
}

fn totals(branches: &[BranchReport], flag: f64) -> Totals {
    let mut p_success = 0.0;
    let mut p_abort = 0.0;
    let mut p_flagged = 0.0;
    let mut f_min: Option<f64> = None;
    let mut f_max: Option<f64> = None;
    for b in branches {
        if b.abort {
            p_abort += b.probability;
            if b.fidelity.is_some_and(|f| f >= flag) {
                p_flagged += b.probability;
            }
        } else {
            p_success += b.probability;
            if let Some(f) = b.fidelity {
                f_min = Some(f_min.map_or(f, |x| x.min(f)));
                f_max = Some(f_max.map_or(f, |x| x.max(f)));
            }
        }
    }
    Totals {
        p_success,
        p_abort,
        p_tail: 1.0 - p_success - p_abort,
        f_min,
        f_max,
        p_with_flagged: p_success + p_flagged,
        flag_fidelity: flag,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tmsv_scheme(r: f64, n: usize) -> Scheme {
        let layer = Layer {
            inputs: vec![Input::squeezed(0, r, 0.0), Input::squeezed(1, -r, 0.0)],
            ops: vec![Op::Beamsplitter { modes: [0, 1], theta: std::f64::consts::FRAC_PI_4, phi: 0.0 }],
            measure: vec![1],
        };
        Scheme {
            modes: 2,
            output: 0,
            root: Node::leaf(layer, &[&[n]]),
            loss: LossModel::none(),
            r_max: None,
            enumeration: Enumeration::default(),
        }
    }

    #[test]
    fn tmsv_heralds_fock_states() {
        let r: f64 = 0.6;
        for n in 0..5 {
            let s = tmsv_scheme(r, n);
            let target = FockTensor::fock_input(&[n], &[n + 1]).unwrap();
            let b = s.evaluate_branch(&[0], &target, &EvalOptions::fast()).unwrap();
            let expect = r.tanh().powi(2 * n as i32) / r.cosh().powi(2);
            assert_abs_diff_eq!(b.probability, expect, epsilon = 1e-13);
            assert_abs_diff_eq!(b.fidelity.unwrap(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn fock_input_via_ancilla() {
        let layer = Layer { inputs: vec![Input::fock(0, 2), Input::squeezed(1, 0.0, 0.0)], ops: vec![], measure: vec![1] };
        let s = Scheme {
            modes: 2,
            output: 0,
            root: Node::leaf(layer, &[&[0]]),
            loss: LossModel::none(),
            r_max: None,
            enumeration: Enumeration::default(),
        };
        let target = FockTensor::fock_input(&[2], &[6]).unwrap();
        let b = s.evaluate_branch(&[0], &target, &EvalOptions::fast()).unwrap();
        assert_abs_diff_eq!(b.probability, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.fidelity.unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn enumeration_bounds() {
        let e = Enumeration { per_mode: 4, total: 6 };
        let pats = e.patterns(2);
        assert_eq!(pats.len(), 25 - 3);
        assert_eq!(e.patterns(0), vec![Pattern(vec![])]);
    }

    #[test]
    fn validation_errors() {
        let mut s = tmsv_scheme(0.3, 1);
        s.root.layer.measure = vec![0];
        assert!(s.validate().is_err());
        let mut s = tmsv_scheme(0.3, 1);
        s.r_max = Some(0.2);
        assert!(matches!(s.validate(), Err(Error::InvalidCircuit(_))));
        let mut s = tmsv_scheme(0.3, 1);
        s.root.outcomes[0].pattern = vec![1, 2];
        assert!(matches!(s.validate(), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn rerun_arithmetic() {
        assert_abs_diff_eq!(rerun_probability(0.3, 1), 0.3);
        assert_abs_diff_eq!(rerun_probability(1.0, 5), 1.0);
    }
}
