//! Persistence diagrams from a discrete gradient.
//!
//! Critical cells are paired in three passes: union-find over minima and
//! 1-saddles (dimension 0), union-find over the dual graph of maxima and
//! (d-1)-saddles with the outside of the domain as the oldest component
//! (dimension d-1), and, in 3D, column reduction of the Morse boundary between
//! the remaining 1- and 2-saddles.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::gradient::{build_gradient, DiscreteGradient};
use crate::grid::{Grid, ScalarField, SimplexKey, SimplexRef, VertexOrder};

/// Identity of a pair across iterations: what a still pair keeps fixed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PairKey {
    pub dim: u8,
    pub finite: bool,
    pub birth_vertex: u32,
    pub death_vertex: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PersistencePair {
    pub dim: u8,
    /// Absent for diagrams read back from disk.
    pub birth_simplex: Option<SimplexRef>,
    /// Absent for infinite pairs and for diagrams read back from disk.
    pub death_simplex: Option<SimplexRef>,
    pub birth_vertex: u32,
    /// For infinite pairs, the last vertex of the global order.
    pub death_vertex: u32,
    pub birth: f64,
    pub death: f64,
    pub finite: bool,
}

impl PersistencePair {
    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }

    pub fn key(&self) -> PairKey {
        PairKey {
            dim: self.dim,
            finite: self.finite,
            birth_vertex: self.birth_vertex,
            death_vertex: self.death_vertex,
        }
    }

    pub fn point(&self) -> (f64, f64) {
        (self.birth, self.death)
    }
}

/// Multiset of persistence pairs, kept sorted by (dim, birth, death).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PersistenceDiagram {
    pairs: Vec<PersistencePair>,
}

impl PersistenceDiagram {
    pub fn new(mut pairs: Vec<PersistencePair>) -> Self {
        pairs.sort_by(|a, b| {
            a.dim
                .cmp(&b.dim)
                .then(a.birth.total_cmp(&b.birth))
                .then(a.death.total_cmp(&b.death))
                .then(a.birth_vertex.cmp(&b.birth_vertex))
                .then(a.death_vertex.cmp(&b.death_vertex))
                .then(a.finite.cmp(&b.finite))
        });
        Self { pairs }
    }

    pub fn pairs(&self) -> &[PersistencePair] {
        &self.pairs
    }

    pub fn into_pairs(self) -> Vec<PersistencePair> {
        self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn dim(&self, p: u8) -> impl Iterator<Item = &PersistencePair> {
        self.pairs.iter().filter(move |x| x.dim == p)
    }

    pub fn finite(&self) -> impl Iterator<Item = &PersistencePair> {
        self.pairs.iter().filter(|x| x.finite)
    }

    pub fn infinite(&self) -> impl Iterator<Item = &PersistencePair> {
        self.pairs.iter().filter(|x| !x.finite)
    }

    /// Pair keys sorted, for multiset comparisons.
    pub fn sorted_keys(&self) -> Vec<PairKey> {
        let mut k: Vec<PairKey> = self.pairs.iter().map(PersistencePair::key).collect();
        k.sort_unstable();
        k
    }

    /// Function range spanned by the infinite dimension-0 pair.
    pub fn range(&self) -> Option<f64> {
        self.pairs
            .iter()
            .find(|p| p.dim == 0 && !p.finite)
            .map(PersistencePair::persistence)
    }

    /// Re-reads birth and death values from `field`.
    pub fn revalue(&mut self, field: &ScalarField) {
        for p in &mut self.pairs {
            p.birth = field.value(p.birth_vertex as usize);
            p.death = field.value(p.death_vertex as usize);
        }
    }
}

/// Builds a pair from vertex data, dropping zero-persistence pairs.
pub(crate) fn make_pair(
    field: &ScalarField,
    order: &VertexOrder,
    dim: u8,
    birth: SimplexRef,
    death: Option<SimplexRef>,
) -> Option<PersistencePair> {
    let grid = field.grid();
    let bv = grid.max_vertex(birth, order);
    let (dv, finite) = match death {
        Some(d) => (grid.max_vertex(d, order), true),
        None => (order.max_vertex(), false),
    };
    if finite && bv == dv {
        return None;
    }
    Some(PersistencePair {
        dim,
        birth_simplex: Some(birth),
        death_simplex: death,
        birth_vertex: bv,
        death_vertex: dv,
        birth: field.value(bv as usize),
        death: field.value(dv as usize),
        finite,
    })
}

struct Critical {
    cells: Vec<SimplexRef>,
    pos: HashMap<u32, usize>,
    paired: Vec<bool>,
}

impl Critical {
    fn collect(g: &DiscreteGradient, order: &VertexOrder, k: usize) -> Self {
        let grid = g.grid();
        let mut keyed: Vec<(SimplexKey, SimplexRef)> = g
            .critical_cells(k)
            .into_iter()
            .map(|s| (grid.key(s, order), s))
            .collect();
        keyed.sort_unstable();
        let cells: Vec<SimplexRef> = keyed.into_iter().map(|(_, s)| s).collect();
        let pos = cells.iter().enumerate().map(|(i, s)| (s.id, i)).collect();
        let paired = vec![false; cells.len()];
        Self { cells, pos, paired }
    }
}

/// Union-find whose representative is always the largest index in the set.
struct ElderSets {
    parent: Vec<u32>,
}

impl ElderSets {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        while self.parent[x as usize] != root {
            let next = self.parent[x as usize];
            self.parent[x as usize] = root;
            x = next;
        }
        root
    }

    /// Merges the two roots; returns the absorbed (smaller) one.
    fn merge(&mut self, a: u32, b: u32) -> u32 {
        let (small, big) = if a < b { (a, b) } else { (b, a) };
        self.parent[small as usize] = big;
        small
    }
}

/// Pairs the critical cells of `g` into the diagram of `field`.
pub fn diagram_from_gradient(
    field: &ScalarField,
    order: &VertexOrder,
    g: &DiscreteGradient,
) -> PersistenceDiagram {
    let grid = field.grid();
    let d = grid.ndim();
    let mut crit: Vec<Critical> = (0..=d).map(|k| Critical::collect(g, order, k)).collect();
    let mut pairs = Vec::new();
    let mut emit = |dim: u8, b: SimplexRef, death: Option<SimplexRef>| {
        if let Some(p) = make_pair(field, order, dim, b, death) {
            pairs.push(p);
        }
    };

    pair_minima(grid, g, &mut crit, &mut emit);
    if d >= 2 {
        pair_maxima(grid, g, &mut crit, &mut emit);
    }
    if d == 3 {
        pair_saddles(grid, g, &mut crit, &mut emit);
    }

    for (k, c) in crit.iter().enumerate() {
        for (i, &s) in c.cells.iter().enumerate() {
            if !c.paired[i] {
                emit(k as u8, s, None);
            }
        }
    }
    PersistenceDiagram::new(pairs)
}

fn pair_minima(
    grid: &Grid,
    g: &DiscreteGradient,
    crit: &mut [Critical],
    emit: &mut impl FnMut(u8, SimplexRef, Option<SimplexRef>),
) {
    let n0 = crit[0].cells.len();
    let mut memo = vec![u32::MAX; grid.num_vertices()];
    let mut path = Vec::new();
    let mut descend = |v: u32| -> u32 {
        let mut v = v;
        path.clear();
        let root = loop {
            if memo[v as usize] != u32::MAX {
                break memo[v as usize];
            }
            path.push(v);
            let s = SimplexRef::vertex(v);
            if g.is_critical(s) {
                break v;
            }
            let e = g.head(s).expect("regular vertex is paired with an edge");
            let vs = grid.vertices(e);
            v = if vs[0] == v { vs[1] } else { vs[0] };
        };
        for &p in &path {
            memo[p as usize] = root;
        }
        root
    };
    // Older components get larger union-find labels.
    let label = |pos: usize| (n0 - 1 - pos) as u32;
    let mut sets = ElderSets::new(n0);
    for i in 0..crit[1].cells.len() {
        let e = crit[1].cells[i];
        let vs = grid.vertices(e);
        let (a, b) = (descend(vs[0]), descend(vs[1]));
        let ra = sets.find(label(crit[0].pos[&a]));
        let rb = sets.find(label(crit[0].pos[&b]));
        if ra == rb {
            continue;
        }
        let young = sets.merge(ra, rb);
        let young_pos = n0 - 1 - young as usize;
        crit[0].paired[young_pos] = true;
        crit[1].paired[i] = true;
        emit(0, crit[0].cells[young_pos], Some(e));
    }
}

const OUTSIDE: u32 = u32::MAX - 1;

fn pair_maxima(
    grid: &Grid,
    g: &DiscreteGradient,
    crit: &mut [Critical],
    emit: &mut impl FnMut(u8, SimplexRef, Option<SimplexRef>),
) {
    let d = grid.ndim();
    let nt = crit[d].cells.len();
    let mut memo: HashMap<u32, u32> = HashMap::new();
    let mut path = Vec::new();
    let mut ascend = |crit_top: &Critical, start: SimplexRef| -> u32 {
        let mut t = start;
        path.clear();
        let root = loop {
            if let Some(&r) = memo.get(&t.id) {
                break r;
            }
            path.push(t.id);
            if g.is_critical(t) {
                break crit_top.pos[&t.id] as u32;
            }
            let s = g.tail(t).expect("regular top cell is paired with a facet");
            let mut next = None;
            grid.for_each_cofacet(s, |c| {
                if c != t {
                    next = Some(c);
                }
            });
            match next {
                Some(c) => t = c,
                None => break OUTSIDE,
            }
        };
        for &p in &path {
            memo.insert(p, root);
        }
        root
    };
    // Labels: position in key order, outside is the oldest of all.
    let mut sets = ElderSets::new(nt + 1);
    let label = |r: u32| if r == OUTSIDE { nt as u32 } else { r };
    for i in (0..crit[d - 1].cells.len()).rev() {
        if crit[d - 1].paired[i] {
            continue;
        }
        let s = crit[d - 1].cells[i];
        let mut roots = [OUTSIDE; 2];
        let mut n = 0;
        grid.for_each_cofacet(s, |c| {
            roots[n] = ascend(&crit[d], c);
            n += 1;
        });
        if n == 0 {
            continue;
        }
        let ra = sets.find(label(roots[0]));
        let rb = sets.find(label(roots[1]));
        if ra == rb {
            continue;
        }
        let young = sets.merge(ra, rb) as usize;
        crit[d].paired[young] = true;
        crit[d - 1].paired[i] = true;
        emit((d - 1) as u8, s, Some(crit[d].cells[young]));
    }
}

/// Mod-2 count of V-paths from triangle `t` to each critical edge in `rows`.
pub(crate) fn morse_boundary(
    grid: &Grid,
    g: &DiscreteGradient,
    t: SimplexRef,
    rows: &HashMap<u32, u32>,
) -> Vec<u32> {
    let topo = reachable_triangles(grid, g, t);
    let mut parity: HashMap<u32, bool> = HashMap::with_capacity(topo.len());
    parity.insert(t.id, true);
    let mut out: HashMap<u32, bool> = HashMap::new();
    for &tri in topo.iter().rev() {
        if !parity.get(&tri.id).copied().unwrap_or(false) {
            continue;
        }
        let tail = g.tail(tri);
        grid.for_each_facet(tri, |e| {
            if Some(e) == tail {
                return;
            }
            if g.is_critical(e) {
                if let Some(&r) = rows.get(&e.id) {
                    *out.entry(r).or_insert(false) ^= true;
                }
            } else if let Some(next) = g.head(e) {
                *parity.entry(next.id).or_insert(false) ^= true;
            }
        });
    }
    let mut col: Vec<u32> = out.into_iter().filter(|&(_, odd)| odd).map(|(r, _)| r).collect();
    col.sort_unstable();
    col
}

/// Triangles reachable from `t` by descending 1-2 V-paths, in DFS
/// post-order (so reversed it is a topological order starting at `t`).
pub(crate) fn reachable_triangles(grid: &Grid, g: &DiscreteGradient, t: SimplexRef) -> Vec<SimplexRef> {
    let successors = |tri: SimplexRef| -> Vec<SimplexRef> {
        let tail = g.tail(tri);
        let mut out = Vec::with_capacity(3);
        grid.for_each_facet(tri, |e| {
            if Some(e) != tail {
                if let Some(next) = g.head(e) {
                    out.push(next);
                }
            }
        });
        out
    };
    let mut seen = std::collections::HashSet::new();
    let mut post = Vec::new();
    let mut stack = vec![(t, successors(t))];
    seen.insert(t.id);
    while let Some((node, next)) = stack.last_mut() {
        if let Some(n) = next.pop() {
            if seen.insert(n.id) {
                let succ = successors(n);
                stack.push((n, succ));
            }
        } else {
            post.push(*node);
            stack.pop();
        }
    }
    post
}

fn xor_sorted(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

fn pair_saddles(
    grid: &Grid,
    g: &DiscreteGradient,
    crit: &mut [Critical],
    emit: &mut impl FnMut(u8, SimplexRef, Option<SimplexRef>),
) {
    // Rows: 1-saddles that did not kill a component, in key order.
    let rows: HashMap<u32, u32> = crit[1]
        .cells
        .iter()
        .enumerate()
        .filter(|(i, _)| !crit[1].paired[*i])
        .map(|(i, s)| (s.id, i as u32))
        .collect();
    let mut pivot_of: HashMap<u32, Vec<u32>> = HashMap::new();
    for j in 0..crit[2].cells.len() {
        if crit[2].paired[j] {
            continue;
        }
        let t = crit[2].cells[j];
        let mut col = morse_boundary(grid, g, t, &rows);
        while let Some(&low) = col.last() {
            match pivot_of.get(&low) {
                Some(other) => col = xor_sorted(&col, other),
                None => break,
            }
        }
        if let Some(&low) = col.last() {
            let i = low as usize;
            crit[1].paired[i] = true;
            crit[2].paired[j] = true;
            emit(1, crit[1].cells[i], Some(t));
            pivot_of.insert(low, col);
        }
    }
}

/// Diagram, gradient and vertex order of `field`.
pub fn compute_diagram(
    field: &ScalarField,
) -> Result<(PersistenceDiagram, DiscreteGradient, VertexOrder)> {
    let order = VertexOrder::new(field)?;
    let g = build_gradient(field, &order);
    let d = diagram_from_gradient(field, &order, &g);
    Ok((d, g, order))
}

/// Recomputes the diagram after the values of `updated` changed.
///
/// The gradient is copied from `prev` and only the affected lower stars are
/// reprocessed; the pairing pass runs in full. The result is identical to
/// [`compute_diagram`] on `field`.
pub fn update_diagram(
    prev: &DiscreteGradient,
    prev_order: &VertexOrder,
    field: &ScalarField,
    updated: &[u32],
) -> Result<(PersistenceDiagram, DiscreteGradient, VertexOrder)> {
    let mut order = prev_order.clone();
    order.update(field.values(), updated);
    let mut g = prev.clone();
    g.update(field, &order, updated);
    let d = diagram_from_gradient(field, &order, &g);
    Ok((d, g, order))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diagram(dims: &[usize], values: Vec<f64>) -> PersistenceDiagram {
        compute_diagram(&ScalarField::new(dims, values).unwrap()).unwrap().0
    }

    #[test]
    fn pair_keys_can_repeat() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let values: Vec<f64> = (0..27 + 64).map(|_| rng.gen_range(0.0..1.0)).skip(27).collect();
        let f = ScalarField::new(&[4, 4, 4], values).unwrap();
        let d = compute_diagram(&f).unwrap().0;
        let oracle = crate::oracle::brute_force_diagram(&f).unwrap();
        assert_eq!(d.sorted_keys(), oracle.sorted_keys());
        let mut keys = d.sorted_keys();
        keys.dedup();
        assert!(keys.len() < d.len());
    }

    #[test]
    fn path_example() {
        let d = diagram(&[5], vec![0.0, 2.0, 1.0, 3.0, 0.5]);
        let pts: Vec<(u8, f64, f64, bool)> =
            d.pairs().iter().map(|p| (p.dim, p.birth, p.death, p.finite)).collect();
        assert_eq!(
            pts,
            vec![(0, 0.0, 3.0, false), (0, 0.5, 3.0, true), (0, 1.0, 2.0, true)]
        );
    }

    #[test]
    fn monotone_field_has_single_infinite_pair() {
        let d = diagram(&[4, 3, 2], (0..24).map(f64::from).collect());
        assert_eq!(d.len(), 1);
        let p = &d.pairs()[0];
        assert!(!p.finite);
        assert_eq!((p.dim, p.birth, p.death), (0, 0.0, 23.0));
    }

    #[test]
    fn ring_of_maxima_in_2d() {
        // A ring-shaped ridge around a pit: one loop born at the ridge saddle
        // dies at the ridge maximum.
        let f = ScalarField::from_fn(&[21, 21], |c| {
            let r = ((c[0] as f64 - 10.0).powi(2) + (c[1] as f64 - 10.0).powi(2)).sqrt();
            (-(r - 6.0).powi(2) / 4.0).exp() + 0.01 * c[0] as f64
        })
        .unwrap();
        let (d, g, _) = compute_diagram(&f).unwrap();
        let maxima = d.dim(1).filter(|p| p.persistence() > 0.1).count();
        assert_eq!(maxima, 1);
        assert_eq!(crate::gradient::validate_gradient(&g), Ok(()));
    }

    #[test]
    fn pairs_account_for_every_critical_cell() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for dims in [vec![7, 6], vec![4, 5, 4]] {
            let n: usize = dims.iter().product();
            let values: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let f = ScalarField::new(&dims, values).unwrap();
            let order = VertexOrder::new(&f).unwrap();
            let g = build_gradient(&f, &order);
            // Count zero-persistence pairs back in by disabling the filter.
            let total_crit: usize = (0..=f.grid().ndim()).map(|k| g.critical_count(k)).sum();
            let d = diagram_from_gradient(&f, &order, &g);
            let cells: usize = d.pairs().iter().map(|p| if p.finite { 2 } else { 1 }).sum();
            assert!(cells <= total_crit);
            assert_eq!((total_crit - cells) % 2, 0);
            assert!(d.finite().all(|p| p.persistence() >= 0.0 && p.birth_vertex != p.death_vertex));
            assert_eq!(d.infinite().count(), 1);
        }
    }

    fn random_field(dims: &[usize], seed: u64, levels: u32) -> ScalarField {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n: usize = dims.iter().product();
        // Few levels force many ties through the index tie-break.
        let values = (0..n).map(|_| f64::from(rng.gen_range(0..levels))).collect();
        ScalarField::new(dims, values).unwrap()
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(48))]
        #[test]
        fn matches_boundary_reduction(
            seed in 0u64..u64::MAX,
            nx in 2usize..7, ny in 1usize..6, nz in 1usize..5,
            levels in proptest::sample::select(vec![3u32, 1000]),
        ) {
            let f = random_field(&[nx, ny, nz], seed, levels);
            let fast = compute_diagram(&f).unwrap().0;
            let slow = crate::oracle::brute_force_diagram(&f).unwrap();
            proptest::prop_assert_eq!(fast.sorted_keys(), slow.sorted_keys());
        }

        #[test]
        fn matches_boundary_reduction_2d(seed in 0u64..u64::MAX, nx in 2usize..12, ny in 2usize..12) {
            let f = random_field(&[nx, ny], seed, 1000);
            let fast = compute_diagram(&f).unwrap().0;
            let slow = crate::oracle::brute_force_diagram(&f).unwrap();
            proptest::prop_assert_eq!(fast.sorted_keys(), slow.sorted_keys());
        }
    }
}
