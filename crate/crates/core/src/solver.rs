//! Persistence-driven simplification of a scalar field.
//!
//! Each iteration matches the current diagram against a target diagram, then
//! moves every birth and death vertex towards its matched coordinates.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::assignment::{self, diagonal_projection, point_cost, Assignment, Target};
use crate::error::{Error, Result};
use crate::gradient::{build_gradient, DiscreteGradient};
use crate::grid::{ScalarField, VertexOrder};
use crate::persistence::{diagram_from_gradient, PairKey, PersistenceDiagram, PersistencePair};

/// Which pairs of the input diagram are kept (signal).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum TargetSpec {
    /// Finite pairs with persistence below this fraction of the range are removed.
    Threshold(f64),
    /// Finite pairs of this dimension are removed.
    RemoveDimension(u8),
    /// Every finite pair is removed.
    KeepInfiniteOnly,
    /// Exactly these pairs are kept; must include every infinite pair.
    Explicit(Vec<PairKey>),
    /// A pair is kept when every member keeps it.
    All(Vec<TargetSpec>),
}

impl TargetSpec {
    fn validate(&self) -> Result<()> {
        match self {
            Self::Threshold(t) if !(0.0..=1.0).contains(t) => Err(Error::InvalidInput(format!(
                "threshold {t} is not a fraction in [0, 1]"
            ))),
            Self::All(v) => v.iter().try_for_each(Self::validate),
            _ => Ok(()),
        }
    }

    fn keeps(&self, p: &PersistencePair, range: f64) -> bool {
        if !p.finite {
            return true;
        }
        match self {
            Self::Threshold(t) => p.persistence() >= t * range,
            Self::RemoveDimension(d) => p.dim != *d,
            Self::KeepInfiniteOnly => false,
            Self::Explicit(keys) => keys.contains(&p.key()),
            Self::All(v) => v.iter().all(|s| s.keeps(p, range)),
        }
    }

    fn explicit_keys(&self) -> Vec<&[PairKey]> {
        match self {
            Self::Explicit(k) => vec![k.as_slice()],
            Self::All(v) => v.iter().flat_map(Self::explicit_keys).collect(),
            _ => Vec::new(),
        }
    }
}

/// The signal pairs of `diagram` under `spec`.
pub fn build_target(diagram: &PersistenceDiagram, spec: &TargetSpec) -> Result<PersistenceDiagram> {
    spec.validate()?;
    for keys in spec.explicit_keys() {
        if let Some(p) = diagram.infinite().find(|p| !keys.contains(&p.key())) {
            return Err(Error::InvalidInput(format!(
                "target omits the infinite pair born at vertex {}",
                p.birth_vertex
            )));
        }
    }
    let range = diagram.range().unwrap_or(0.0);
    let kept = diagram
        .pairs()
        .iter()
        .filter(|p| spec.keeps(p, range))
        .cloned()
        .collect();
    Ok(PersistenceDiagram::new(kept))
}

/// Squared-distance energy of an assignment.
///
/// Infinite pairs are measured on their birth coordinate only: their death
/// is the maximum of the field by convention, not a critical simplex of the
/// pair, and it receives no gradient.
pub fn energy(a: &Assignment, source: &PersistenceDiagram, target: &PersistenceDiagram) -> f64 {
    let mut e = 0.0;
    for (i, p) in source.pairs().iter().enumerate() {
        let t = a.target_point(i, source, target);
        e += if p.finite {
            point_cost(p.point(), t, 2.0)
        } else {
            (p.birth - t.0).powi(2)
        };
    }
    for &j in &a.unmatched {
        let p = &target.pairs()[j];
        if p.finite {
            e += point_cost(p.point(), diagonal_projection(p.point()), 2.0);
        }
    }
    e
}

/// Optimal assignment of `diagram` to `target` and its energy.
pub fn loss(diagram: &PersistenceDiagram, target: &PersistenceDiagram) -> Result<(f64, Assignment)> {
    let a = assignment::wasserstein(diagram, target, 2.0)?;
    Ok((energy(&a, diagram, target), a))
}

/// Per-pair contributions to the gradient of the energy at a fixed
/// assignment, split by role.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LossGradient {
    pub birth: Vec<(u32, f64)>,
    pub death: Vec<(u32, f64)>,
}

impl LossGradient {
    pub fn new(diagram: &PersistenceDiagram, target: &PersistenceDiagram, a: &Assignment) -> Self {
        let mut g = Self::default();
        for (i, p) in diagram.pairs().iter().enumerate() {
            let (tb, td) = a.target_point(i, diagram, target);
            g.birth.push((p.birth_vertex, 2.0 * (p.birth - tb)));
            if p.finite {
                g.death.push((p.death_vertex, 2.0 * (p.death - td)));
            }
        }
        g
    }

    /// Weighted per-vertex sum.
    pub fn combined(&self, alpha_birth: f64, alpha_death: f64) -> BTreeMap<u32, f64> {
        let mut m = BTreeMap::new();
        if alpha_birth != 0.0 {
            for &(v, x) in &self.birth {
                *m.entry(v).or_insert(0.0) += alpha_birth * x;
            }
        }
        if alpha_death != 0.0 {
            for &(v, x) in &self.death {
                *m.entry(v).or_insert(0.0) += alpha_death * x;
            }
        }
        m
    }
}

/// Moves `field` by one direct descent step; returns the vertices whose value
/// changed, sorted.
pub fn gradient_step(field: &mut ScalarField, grad: &LossGradient, alpha_birth: f64, alpha_death: f64) -> Vec<u32> {
    let mut updated = Vec::new();
    for (v, g) in grad.combined(alpha_birth, alpha_death) {
        let old = field.value(v as usize);
        let new = old - g;
        if new != old {
            field.set(v as usize, new).expect("finite step");
            updated.push(v);
        }
    }
    updated
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AdamParams {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moments per vertex.
#[derive(Clone, Debug)]
pub struct AdamState {
    params: AdamParams,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl AdamState {
    pub fn new(num_vertices: usize, params: AdamParams) -> Self {
        Self {
            params,
            m: vec![0.0; num_vertices],
            v: vec![0.0; num_vertices],
            t: 0,
        }
    }
}

/// One Adam update on the summed gradient; returns the vertices that moved.
pub fn adam_step(field: &mut ScalarField, grad: &BTreeMap<u32, f64>, state: &mut AdamState) -> Vec<u32> {
    let AdamParams { lr, beta1, beta2, eps } = state.params;
    state.t += 1;
    let c1 = 1.0 - beta1.powi(state.t);
    let c2 = 1.0 - beta2.powi(state.t);
    let mut updated = Vec::new();
    for i in 0..state.m.len() {
        let g = grad.get(&(i as u32)).copied().unwrap_or(0.0);
        if g == 0.0 && state.m[i] == 0.0 && state.v[i] == 0.0 {
            continue;
        }
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g;
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g * g;
        let step = lr * (state.m[i] / c1) / ((state.v[i] / c2).sqrt() + eps);
        let old = field.value(i);
        if old - step != old {
            field.set(i, old - step).expect("finite step");
            updated.push(i as u32);
        }
    }
    updated
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Method {
    /// Full diagram and assignment recomputation every iteration.
    Baseline,
    /// Localized gradient update and still-pair assignment reuse.
    Accelerated,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Optimizer {
    Direct,
    Adam(AdamParams),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SolverConfig {
    pub method: Method,
    pub alpha_birth: f64,
    pub alpha_death: f64,
    /// Stop once the loss falls to this fraction of the initial loss.
    pub stop: f64,
    pub max_iterations: usize,
    pub optimizer: Optimizer,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: Method::Accelerated,
            alpha_birth: 0.5,
            alpha_death: 0.5,
            stop: 0.01,
            max_iterations: 1000,
            optimizer: Optimizer::Direct,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if !(self.alpha_birth >= 0.0 && self.alpha_death >= 0.0) {
            return bad("step sizes must be non-negative".into());
        }
        if self.alpha_birth + self.alpha_death <= 0.0 {
            return bad("at least one step size must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.stop) {
            return bad(format!("stop fraction {} is not in [0, 1]", self.stop));
        }
        if let Optimizer::Adam(p) = self.optimizer {
            if !(p.lr > 0.0 && (0.0..1.0).contains(&p.beta1) && (0.0..1.0).contains(&p.beta2) && p.eps > 0.0) {
                return bad("invalid Adam parameters".into());
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IterationRecord {
    pub iteration: usize,
    pub loss: f64,
    pub still_pair_fraction: f64,
    pub non_still_signal_pair_fraction: f64,
    pub updated_vertex_fraction: f64,
    pub gradient_ms: f64,
    pub diagram_ms: f64,
    pub assignment_ms: f64,
    pub step_ms: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DisplacementStats {
    pub min: f64,
    pub avg: f64,
    pub max: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FieldDistances {
    pub l2: f64,
    pub linf: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SolverReport {
    pub method: Method,
    pub loss0: f64,
    pub loss_final: f64,
    pub iterations: usize,
    /// Set when the run stopped on the iteration cap.
    pub max_iterations: bool,
    pub input_pairs: usize,
    pub target_pairs: usize,
    pub output_pairs: usize,
    pub distances: FieldDistances,
    pub signal_displacement: DisplacementStats,
    pub total_ms: f64,
    /// Record 0 describes the input; record `j` the state after step `j`.
    pub records: Vec<IterationRecord>,
}

impl SolverReport {
    pub fn phase_totals(&self) -> IterationRecord {
        let mut t = IterationRecord::default();
        for r in &self.records {
            t.gradient_ms += r.gradient_ms;
            t.diagram_ms += r.diagram_ms;
            t.assignment_ms += r.assignment_ms;
            t.step_ms += r.step_ms;
        }
        t
    }

    pub fn mean_updated_fraction(&self) -> f64 {
        let steps = &self.records[1.min(self.records.len())..];
        if steps.is_empty() {
            return 0.0;
        }
        steps.iter().map(|r| r.updated_vertex_fraction).sum::<f64>() / steps.len() as f64
    }

    pub fn mean_still_fraction(&self) -> f64 {
        let steps = &self.records[1.min(self.records.len())..];
        if steps.is_empty() {
            return 0.0;
        }
        steps.iter().map(|r| r.still_pair_fraction).sum::<f64>() / steps.len() as f64
    }
}

/// Outcome of [`run`].
#[derive(Clone, Debug)]
pub struct Solution {
    pub field: ScalarField,
    pub diagram: PersistenceDiagram,
    pub target: PersistenceDiagram,
    pub report: SolverReport,
}

/// State exposed to an observer after each iteration.
pub struct IterationView<'a> {
    pub iteration: usize,
    pub field: &'a ScalarField,
    pub diagram: &'a PersistenceDiagram,
    pub previous: &'a PersistenceDiagram,
    pub target: &'a PersistenceDiagram,
    pub assignment: &'a Assignment,
    pub loss: f64,
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

pub fn run(field: &ScalarField, spec: &TargetSpec, config: &SolverConfig) -> Result<Solution> {
    run_observed(field, spec, config, |_| {})
}

/// [`run`] calling `observe` after every iteration.
pub fn run_observed(
    field: &ScalarField,
    spec: &TargetSpec,
    config: &SolverConfig,
    mut observe: impl FnMut(&IterationView<'_>),
) -> Result<Solution> {
    config.validate()?;
    let start = Instant::now();
    let nv = field.len() as f64;
    let mut f = field.clone();

    let t = Instant::now();
    let mut order = VertexOrder::new(&f)?;
    let mut grad_field: DiscreteGradient = build_gradient(&f, &order);
    let gradient_ms = ms(t);
    let t = Instant::now();
    let mut diagram = diagram_from_gradient(&f, &order, &grad_field);
    let diagram_ms = ms(t);
    let target = build_target(&diagram, spec)?;
    let t = Instant::now();
    let (loss0, mut assignment) = loss(&diagram, &target)?;
    let assignment_ms = ms(t);
    let input_pairs = diagram.len();

    let mut records = vec![IterationRecord {
        iteration: 0,
        loss: loss0,
        gradient_ms,
        diagram_ms,
        assignment_ms,
        ..Default::default()
    }];
    let mut adam = match config.optimizer {
        Optimizer::Adam(p) => Some(AdamState::new(f.len(), p)),
        Optimizer::Direct => None,
    };
    let mut current = loss0;
    let mut j = 0;
    while current > config.stop * loss0 && j < config.max_iterations {
        let t = Instant::now();
        let lg = LossGradient::new(&diagram, &target, &assignment);
        let updated = match adam.as_mut() {
            Some(state) => adam_step(&mut f, &lg.combined(config.alpha_birth, config.alpha_death), state),
            None => gradient_step(&mut f, &lg, config.alpha_birth, config.alpha_death),
        };
        let step_ms = ms(t);

        let t = Instant::now();
        match config.method {
            Method::Baseline => {
                order = VertexOrder::new(&f)?;
                grad_field = build_gradient(&f, &order);
            }
            Method::Accelerated => {
                order.update(f.values(), &updated);
                grad_field.update(&f, &order, &updated);
            }
        }
        let gradient_ms = ms(t);
        let t = Instant::now();
        let previous = std::mem::replace(&mut diagram, diagram_from_gradient(&f, &order, &grad_field));
        let diagram_ms = ms(t);

        let t = Instant::now();
        let still = match config.method {
            Method::Baseline => {
                assignment = assignment::wasserstein(&diagram, &target, 2.0)?;
                None
            }
            Method::Accelerated => {
                let up = assignment::update_assignment(&assignment, &diagram, &previous, &target)?;
                assignment = up.assignment;
                Some(up.still)
            }
        };
        current = energy(&assignment, &diagram, &target);
        let assignment_ms = ms(t);
        let still = still.unwrap_or_else(|| assignment::still_pairs(&diagram, &previous));
        j += 1;

        let mut is_still = vec![false; diagram.len()];
        for &(i, _) in &still {
            is_still[i] = true;
        }
        let signal: Vec<usize> = assignment
            .targets
            .iter()
            .enumerate()
            .filter(|(_, t)| matches!(t, Target::Pair(_)))
            .map(|(i, _)| i)
            .collect();
        let moving_signal = signal.iter().filter(|&&i| !is_still[i]).count();
        records.push(IterationRecord {
            iteration: j,
            loss: current,
            still_pair_fraction: fraction(still.len(), diagram.len()),
            non_still_signal_pair_fraction: fraction(moving_signal, signal.len()),
            updated_vertex_fraction: updated.len() as f64 / nv,
            gradient_ms,
            diagram_ms,
            assignment_ms,
            step_ms,
        });
        observe(&IterationView {
            iteration: j,
            field: &f,
            diagram: &diagram,
            previous: &previous,
            target: &target,
            assignment: &assignment,
            loss: current,
        });
    }

    let report = SolverReport {
        method: config.method,
        loss0,
        loss_final: current,
        iterations: j,
        max_iterations: current > config.stop * loss0,
        input_pairs,
        target_pairs: target.len(),
        output_pairs: diagram.len(),
        distances: field_distances(field, &f)?,
        signal_displacement: signal_displacement_stats(&target, &diagram)?,
        total_ms: ms(start),
        records,
    };
    Ok(Solution {
        field: f,
        diagram,
        target,
        report,
    })
}

fn fraction(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// How far the signal pairs moved, under the optimal matching from `target`
/// to `output`.
pub fn signal_displacement_stats(
    target: &PersistenceDiagram,
    output: &PersistenceDiagram,
) -> Result<DisplacementStats> {
    if target.is_empty() {
        return Ok(DisplacementStats::default());
    }
    let a = assignment::wasserstein(target, output, 2.0)?;
    let d: Vec<f64> = (0..target.len())
        .map(|i| {
            let p = target.pairs()[i].point();
            let q = a.target_point(i, target, output);
            (p.0 - q.0).hypot(p.1 - q.1)
        })
        .collect();
    Ok(DisplacementStats {
        min: d.iter().copied().fold(f64::INFINITY, f64::min),
        avg: d.iter().sum::<f64>() / d.len() as f64,
        max: d.iter().copied().fold(0.0, f64::max),
    })
}

pub fn field_distances(f: &ScalarField, g: &ScalarField) -> Result<FieldDistances> {
    if f.dims() != g.dims() {
        return Err(Error::Structural(format!(
            "fields have dimensions {:?} and {:?}",
            f.dims(),
            g.dims()
        )));
    }
    let mut sq = 0.0;
    let mut linf: f64 = 0.0;
    for (a, b) in f.values().iter().zip(g.values()) {
        let d = (a - b).abs();
        sq += d * d;
        linf = linf.max(d);
    }
    Ok(FieldDistances { l2: sq.sqrt(), linf })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::persistence::compute_diagram;

    fn path(values: &[f64]) -> ScalarField {
        ScalarField::new(&[values.len()], values.to_vec()).unwrap()
    }

    #[test]
    fn threshold_target_drops_small_pairs() {
        let (d, _, _) = compute_diagram(&path(&[0.0, 2.0, 1.0, 3.0, 0.5])).unwrap();
        let t = build_target(&d, &TargetSpec::Threshold(0.34)).unwrap();
        // Range 3: (1,2) has persistence 1 < 1.02 and is dropped.
        assert_eq!(t.len(), 2);
        assert!(t.pairs().iter().all(|p| p.persistence() > 1.5));
        let only = build_target(&d, &TargetSpec::KeepInfiniteOnly).unwrap();
        assert_eq!(only.len(), 1);
        assert!(!only.pairs()[0].finite);
    }

    #[test]
    fn explicit_target_must_keep_infinite_pairs() {
        let (d, _, _) = compute_diagram(&path(&[0.0, 2.0, 1.0, 3.0, 0.5])).unwrap();
        let finite_keys: Vec<PairKey> = d.finite().map(|p| p.key()).collect();
        assert!(build_target(&d, &TargetSpec::Explicit(finite_keys)).is_err());
        let all: Vec<PairKey> = d.pairs().iter().map(|p| p.key()).collect();
        assert_eq!(build_target(&d, &TargetSpec::Explicit(all)).unwrap(), d);
    }

    #[test]
    fn single_noise_pair_loss() {
        let (d, _, _) = compute_diagram(&path(&[0.0, 1.0, 0.0, 5.0])).unwrap();
        let t = build_target(&d, &TargetSpec::KeepInfiniteOnly).unwrap();
        let (l, _) = loss(&d, &t).unwrap();
        assert!((l - 0.5).abs() < 1e-12);
        let (zero, _) = loss(&d, &d).unwrap();
        assert_eq!(zero, 0.0);
    }

    #[test]
    fn halfway_step_and_cutting() {
        let base = path(&[0.0, 0.8, 0.2, 1.0]);
        let (d, _, _) = compute_diagram(&base).unwrap();
        let t = build_target(&d, &TargetSpec::KeepInfiniteOnly).unwrap();
        let (_, a) = loss(&d, &t).unwrap();
        let g = LossGradient::new(&d, &t, &a);

        let mut f = base.clone();
        let up = gradient_step(&mut f, &g, 0.5, 0.5);
        assert_eq!(up, vec![1, 2]);
        assert_eq!((f.value(1), f.value(2)), (0.5, 0.5));

        let mut f = base.clone();
        gradient_step(&mut f, &g, 0.5, 0.0);
        assert_eq!((f.value(1), f.value(2)), (0.8, 0.5));
    }

    #[test]
    fn adam_first_step_is_lr_sized() {
        let mut f = path(&[0.0, 1.0, 2.0]);
        let mut s = AdamState::new(3, AdamParams::default());
        assert!(adam_step(&mut f.clone(), &BTreeMap::new(), &mut s.clone()).is_empty());
        let g = BTreeMap::from([(1u32, 3.0)]);
        assert_eq!(adam_step(&mut f, &g, &mut s), vec![1]);
        assert!((f.value(1) - (1.0 - 1e-4)).abs() < 1e-10);
    }

    #[test]
    fn simplified_input_needs_no_iteration() {
        let f = path(&[0.0, 1.0, 2.0, 3.0]);
        let s = run(&f, &TargetSpec::Threshold(0.01), &SolverConfig::default()).unwrap();
        assert_eq!(s.report.iterations, 0);
        assert_eq!(s.field, f);
        assert!(!s.report.max_iterations);
        assert_eq!(s.report.distances, FieldDistances::default());
    }

    #[test]
    fn field_distances_examples() {
        let f = path(&[0.0, 1.0, 2.0]);
        let mut g = f.clone();
        g.set(1, 1.3).unwrap();
        let d = field_distances(&f, &g).unwrap();
        assert!((d.l2 - 0.3).abs() < 1e-12 && (d.linf - 0.3).abs() < 1e-12);
        assert!(field_distances(&f, &path(&[0.0])).is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = SolverConfig::default();
        assert!(c.validate().is_ok());
        c.alpha_birth = 0.0;
        c.alpha_death = 0.0;
        assert!(c.validate().is_err());
        let c = SolverConfig { stop: 1.5, ..Default::default() };
        assert!(c.validate().is_err());
    }
}
