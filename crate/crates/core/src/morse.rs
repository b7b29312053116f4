//! Gradient post-processing on 3D fields: saddle connectors, their reversal,
//! and ascending integral lines ("filaments") from 2-saddles.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gradient::{find_cycle, DiscreteGradient, Pairing};
use crate::grid::{ScalarField, SimplexRef};
use crate::persistence::{reachable_triangles, PersistenceDiagram, PersistencePair};

/// Alternating chain of cells, each consecutive two incident.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VPath {
    pub cells: Vec<SimplexRef>,
}

impl VPath {
    pub fn start(&self) -> Option<SimplexRef> {
        self.cells.first().copied()
    }

    pub fn end(&self) -> Option<SimplexRef> {
        self.cells.last().copied()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum SkipReason {
    /// No V-path joins the two cells (one may already be cancelled).
    Missing,
    /// More than one V-path joins the two cells.
    Multiple,
    /// Reversing the connector would close a V-path.
    Cycle,
}

/// Outcome of looking for a connector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Connector {
    Unique(VPath),
    Missing,
    Multiple,
}

fn saddle_cells(g: &DiscreteGradient, pair: &PersistencePair) -> Result<(SimplexRef, SimplexRef)> {
    let (Some(b), Some(d)) = (pair.birth_simplex, pair.death_simplex) else {
        return Err(Error::InvalidInput("pair carries no simplices".into()));
    };
    if g.grid().ndim() != 3 || pair.dim != 1 || !pair.finite {
        return Err(Error::NotSaddlePair(b));
    }
    Ok((b, d))
}

fn descend_facets(g: &DiscreteGradient, tri: SimplexRef, mut f: impl FnMut(SimplexRef)) {
    let tail = g.tail(tri);
    g.grid().for_each_facet(tri, |e| {
        if Some(e) != tail {
            f(e);
        }
    });
}

/// The V-path from the death triangle down to the birth edge of a
/// saddle-saddle pair, when exactly one exists.
pub fn saddle_connector(g: &DiscreteGradient, pair: &PersistencePair) -> Result<Connector> {
    let (edge, tri) = saddle_cells(g, pair)?;
    Ok(connector_between(g, tri, edge))
}

fn connector_between(g: &DiscreteGradient, tri: SimplexRef, edge: SimplexRef) -> Connector {
    if !g.is_critical(tri) || !g.is_critical(edge) {
        return Connector::Missing;
    }
    let order = reachable_triangles(g.grid(), g, tri);
    // Number of paths to `edge`, saturated at 2.
    let mut count: HashMap<u32, u8> = HashMap::with_capacity(order.len());
    for &t in &order {
        let mut c = 0u8;
        descend_facets(g, t, |e| {
            if e == edge {
                c += 1;
            } else if let Some(next) = g.head(e) {
                c += count.get(&next.id).copied().unwrap_or(0);
            }
        });
        count.insert(t.id, c.min(2));
    }
    match count[&tri.id] {
        0 => return Connector::Missing,
        1 => {}
        _ => return Connector::Multiple,
    }
    let mut cells = vec![tri];
    let mut t = tri;
    loop {
        let mut step = None;
        descend_facets(g, t, |e| {
            if e == edge {
                step = Some((e, None));
            } else if let Some(next) = g.head(e) {
                if count.get(&next.id).copied().unwrap_or(0) > 0 {
                    step = Some((e, Some(next)));
                }
            }
        });
        let (e, next) = step.expect("a counted path continues");
        cells.push(e);
        match next {
            None => return Connector::Unique(VPath { cells }),
            Some(n) => {
                cells.push(n);
                t = n;
            }
        }
    }
}

/// Reverses the vectors along `path` (a connector from a critical triangle
/// down to a critical edge), cancelling both endpoints.
///
/// If the reversal closes a V-path the gradient is restored and
/// `Err(SkipReason::Cycle)` is returned.
pub fn reverse_connector(g: &mut DiscreteGradient, path: &VPath) -> Result<std::result::Result<(), SkipReason>> {
    check_connector(g, path)?;
    let saved: Vec<(SimplexRef, Pairing)> = path
        .cells
        .iter()
        .map(|&s| (s, g.pairing(s).expect("assigned")))
        .collect();
    // Each edge takes the triangle just before it on the path.
    for w in path.cells.chunks(2).zip(path.cells[1..].chunks(2)) {
        let (tri, edge) = (w.0[0], w.1[0]);
        g.set_vector(edge, tri);
    }
    let edges = path.cells.iter().copied().filter(|s| s.dim == 1);
    if find_cycle(g, 1, edges).is_some() {
        for (s, p) in saved {
            g.set_raw(s, p);
        }
        return Ok(Err(SkipReason::Cycle));
    }
    Ok(Ok(()))
}

fn check_connector(g: &DiscreteGradient, path: &VPath) -> Result<()> {
    let bad = |m: &str| Err(Error::InvalidInput(format!("not a connector: {m}")));
    let cells = &path.cells;
    if cells.len() < 2 || cells.len() % 2 != 0 {
        return bad("needs an even number of cells, at least two");
    }
    let (first, last) = (cells[0], cells[cells.len() - 1]);
    if first.dim != 2 || last.dim != 1 || !g.is_critical(first) || !g.is_critical(last) {
        return bad("endpoints must be a critical triangle and a critical edge");
    }
    for (i, w) in cells.windows(2).enumerate() {
        let ok = if i % 2 == 0 {
            w[0].dim == 2 && g.grid().facets(w[0]).contains(&w[1])
        } else {
            g.head(w[0]) == Some(w[1])
        };
        if !ok {
            return bad("consecutive cells do not follow the gradient");
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedPair {
    pub persistence: f64,
    pub reason: SkipReason,
}

/// Skipped cancellations binned by persistence.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SkipHistogram {
    /// `bins + 1` bin edges, uniform over `[0, max persistence processed]`.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub processed: usize,
    pub cancelled: usize,
    pub skipped: Vec<SkippedPair>,
}

impl SkipHistogram {
    pub const BINS: usize = 20;

    fn build(max_persistence: f64, processed: usize, cancelled: usize, skipped: Vec<SkippedPair>) -> Self {
        if processed == 0 {
            return Self::default();
        }
        let n = Self::BINS;
        let top = if max_persistence > 0.0 { max_persistence } else { 1.0 };
        let edges = (0..=n).map(|i| top * i as f64 / n as f64).collect();
        let mut counts = vec![0; n];
        for s in &skipped {
            let b = ((s.persistence / top) * n as f64) as usize;
            counts[b.min(n - 1)] += 1;
        }
        Self {
            edges,
            counts,
            processed,
            cancelled,
            skipped,
        }
    }

    pub fn total_skipped(&self) -> usize {
        self.skipped.len()
    }

    /// Skips with persistence strictly above `p`.
    pub fn skipped_above(&self, p: f64) -> usize {
        self.skipped.iter().filter(|s| s.persistence > p).count()
    }
}

/// Cancels the given saddle-saddle pairs by connector reversal, least
/// persistent first.
pub fn cancel_saddle_pairs<'a>(
    g: &mut DiscreteGradient,
    pairs: impl IntoIterator<Item = &'a PersistencePair>,
) -> Result<SkipHistogram> {
    let mut todo: Vec<&PersistencePair> = pairs.into_iter().collect();
    for p in &todo {
        saddle_cells(g, p)?;
    }
    todo.sort_by(|a, b| {
        a.persistence()
            .total_cmp(&b.persistence())
            .then(a.birth_vertex.cmp(&b.birth_vertex))
            .then(a.death_vertex.cmp(&b.death_vertex))
    });
    let mut skipped = Vec::new();
    let mut cancelled = 0;
    for p in &todo {
        let reason = match saddle_connector(g, p)? {
            Connector::Unique(path) => match reverse_connector(g, &path)? {
                Ok(()) => None,
                Err(r) => Some(r),
            },
            Connector::Missing => Some(SkipReason::Missing),
            Connector::Multiple => Some(SkipReason::Multiple),
        };
        match reason {
            None => cancelled += 1,
            Some(reason) => skipped.push(SkippedPair {
                persistence: p.persistence(),
                reason,
            }),
        }
    }
    let top = todo.iter().map(|p| p.persistence()).fold(0.0, f64::max);
    Ok(SkipHistogram::build(top, todo.len(), cancelled, skipped))
}

/// Cancels every finite saddle-saddle pair of `diagram`.
pub fn cancel_all_saddle_pairs(g: &mut DiscreteGradient, diagram: &PersistenceDiagram) -> Result<SkipHistogram> {
    cancel_saddle_pairs(g, diagram.dim(1).filter(|p| p.finite))
}

/// Ascending integral line from a 2-saddle, as cell barycentres.
#[derive(Clone, Debug, PartialEq)]
pub struct Filament {
    pub saddle: SimplexRef,
    /// Critical tetrahedron reached, `None` when the line leaves the domain.
    pub end: Option<SimplexRef>,
    pub points: Vec<[f64; 3]>,
}

/// Filaments from every critical triangle whose lowest vertex value is at
/// least `min_value`.
pub fn extract_filaments(g: &DiscreteGradient, field: &ScalarField, min_value: f64) -> Result<Vec<Filament>> {
    let grid = g.grid();
    if grid.ndim() != 3 {
        return Err(Error::InvalidInput("filaments need a 3D field".into()));
    }
    let mut out = Vec::new();
    for t in g.critical_cells(2) {
        let low = grid
            .vertices(t)
            .iter()
            .map(|&v| field.value(v as usize))
            .fold(f64::INFINITY, f64::min);
        if low < min_value {
            continue;
        }
        for first in grid.cofacets(t) {
            let mut points = vec![grid.barycenter(t)];
            let mut tet = first;
            let end = loop {
                points.push(grid.barycenter(tet));
                if g.is_critical(tet) {
                    break Some(tet);
                }
                let exit = g.tail(tet).expect("regular tetrahedron has a facet partner");
                points.push(grid.barycenter(exit));
                match grid.cofacets(exit).into_iter().find(|&c| c != tet) {
                    Some(next) => tet = next,
                    None => break None,
                }
            };
            out.push(Filament { saddle: t, end, points });
        }
    }
    Ok(out)
}

/// Independent cycles of the graph whose nodes are saddles and reached
/// maxima and whose edges are filaments. Lines leaving the domain end at
/// distinct leaves.
pub fn filament_cycle_rank(filaments: &[Filament]) -> usize {
    let mut ids: HashMap<(u8, u32), usize> = HashMap::new();
    let mut parent: Vec<usize> = Vec::new();
    let mut node = |key: (u8, u32), parent: &mut Vec<usize>| -> usize {
        *ids.entry(key).or_insert_with(|| {
            parent.push(parent.len());
            parent.len() - 1
        })
    };
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut rank = 0;
    for f in filaments {
        let a = node((2, f.saddle.id), &mut parent);
        let Some(end) = f.end else {
            continue;
        };
        let b = node((3, end.id), &mut parent);
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra == rb {
            rank += 1;
        } else {
            parent[ra] = rb;
        }
    }
    rank
}
