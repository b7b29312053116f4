//! Lower-star discrete gradient and its localized update.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::grid::{Grid, ScalarField, SimplexKey, SimplexRef, VertexOrder};

/// How one simplex takes part in the gradient.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pairing {
    Critical,
    /// Tail of a vector whose head is the given cofacet.
    Cofacet(SimplexRef),
    /// Head of a vector whose tail is the given facet.
    Facet(SimplexRef),
}

const UNSET: u32 = u32::MAX;
const CRITICAL: u32 = u32::MAX - 1;
const UP: u32 = 1 << 31;

#[inline]
fn encode(p: Pairing) -> u32 {
    match p {
        Pairing::Critical => CRITICAL,
        Pairing::Cofacet(t) => t.id | UP,
        Pairing::Facet(t) => t.id,
    }
}

/// Vertices whose value changed during the last descent step.
pub type UpdatedVertexSet = Vec<u32>;

/// A discrete gradient over every simplex of a grid, one word per simplex.
#[derive(Clone, PartialEq, Eq)]
pub struct DiscreteGradient {
    grid: Grid,
    cells: Vec<Vec<u32>>,
}

impl std::fmt::Debug for DiscreteGradient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let crit: Vec<usize> = (0..=self.grid.ndim()).map(|k| self.critical_count(k)).collect();
        f.debug_struct("DiscreteGradient")
            .field("grid", &self.grid)
            .field("critical", &crit)
            .finish()
    }
}

/// What went wrong in an invalid gradient.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GradientViolation {
    Unassigned(SimplexRef),
    /// `from` points at `to` but `to` does not point back.
    Involution { from: SimplexRef, to: SimplexRef },
    /// `from` is paired with something that is not a facet or cofacet.
    NotAdjacent { from: SimplexRef, to: SimplexRef },
    /// A closed V-path runs through this simplex.
    Cycle(SimplexRef),
}

impl std::fmt::Display for GradientViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Unassigned(s) => write!(f, "{s} is not assigned"),
            Self::Involution { from, to } => write!(f, "{from} -> {to} is not reciprocated"),
            Self::NotAdjacent { from, to } => write!(f, "{from} is paired with non-adjacent {to}"),
            Self::Cycle(s) => write!(f, "closed V-path through {s}"),
        }
    }
}

impl DiscreteGradient {
    fn empty(grid: &Grid) -> Self {
        let cells = (0..=grid.ndim()).map(|k| vec![UNSET; grid.id_space(k)]).collect();
        Self {
            grid: grid.clone(),
            cells,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn pairing(&self, s: SimplexRef) -> Option<Pairing> {
        let code = self.cells[s.dim as usize][s.id as usize];
        match code {
            UNSET => None,
            CRITICAL => Some(Pairing::Critical),
            c if c & UP != 0 => Some(Pairing::Cofacet(SimplexRef::new(s.dim + 1, c & !UP))),
            c => Some(Pairing::Facet(SimplexRef::new(s.dim - 1, c))),
        }
    }

    #[inline]
    pub fn is_critical(&self, s: SimplexRef) -> bool {
        self.cells[s.dim as usize][s.id as usize] == CRITICAL
    }

    /// The cofacet `s` is paired with, if `s` is the tail of a vector.
    #[inline]
    pub fn head(&self, s: SimplexRef) -> Option<SimplexRef> {
        let c = self.cells[s.dim as usize][s.id as usize];
        (c != UNSET && c != CRITICAL && c & UP != 0).then(|| SimplexRef::new(s.dim + 1, c & !UP))
    }

    /// The facet `s` is paired with, if `s` is the head of a vector.
    #[inline]
    pub fn tail(&self, s: SimplexRef) -> Option<SimplexRef> {
        let c = self.cells[s.dim as usize][s.id as usize];
        (c != UNSET && c != CRITICAL && c & UP == 0).then(|| SimplexRef::new(s.dim - 1, c))
    }

    /// Critical `k`-simplices in id order.
    pub fn critical_cells(&self, k: usize) -> Vec<SimplexRef> {
        self.cells[k]
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == CRITICAL)
            .map(|(id, _)| SimplexRef::new(k as u8, id as u32))
            .collect()
    }

    pub fn critical_count(&self, k: usize) -> usize {
        self.cells[k].iter().filter(|&&c| c == CRITICAL).count()
    }

    /// Pairs `tail` with its cofacet `head`, overwriting both entries.
    pub fn set_vector(&mut self, tail: SimplexRef, head: SimplexRef) {
        debug_assert_eq!(tail.dim + 1, head.dim);
        self.cells[tail.dim as usize][tail.id as usize] = encode(Pairing::Cofacet(head));
        self.cells[head.dim as usize][head.id as usize] = encode(Pairing::Facet(tail));
    }

    pub fn set_critical(&mut self, s: SimplexRef) {
        self.cells[s.dim as usize][s.id as usize] = CRITICAL;
    }

    /// Low-level write of one entry; may break the involution.
    pub fn set_raw(&mut self, s: SimplexRef, p: Pairing) {
        self.cells[s.dim as usize][s.id as usize] = encode(p);
    }

    fn write(cells: &mut [Vec<u32>], local: &[(SimplexRef, Pairing)]) {
        for &(s, p) in local {
            cells[s.dim as usize][s.id as usize] = encode(p);
        }
    }

    fn process_all(&mut self, vertices: &[u32], order: &VertexOrder) {
        const CHUNK: usize = 2048;
        let grid = &self.grid;
        if vertices.len() <= CHUNK {
            for &v in vertices {
                let local = process_lower_star(grid, v as usize, order);
                Self::write(&mut self.cells, &local);
            }
            return;
        }
        let batches: Vec<Vec<(SimplexRef, Pairing)>> = vertices
            .par_chunks(CHUNK)
            .map(|chunk| {
                chunk
                    .iter()
                    .flat_map(|&v| process_lower_star(grid, v as usize, order))
                    .collect()
            })
            .collect();
        for b in &batches {
            Self::write(&mut self.cells, b);
        }
    }

    /// Reprocesses the lower stars that can differ after `updated` changed.
    pub fn update(&mut self, field: &ScalarField, order: &VertexOrder, updated: &[u32]) {
        debug_assert_eq!(field.grid(), &self.grid);
        if updated.is_empty() {
            return;
        }
        let region = affected_vertices(&self.grid, updated);
        self.process_all(&region, order);
        #[cfg(feature = "strict-updates")]
        assert!(
            *self == build_gradient(field, order),
            "incremental gradient update diverged from full rebuild"
        );
    }
}

/// `updated` plus every vertex sharing a cell with one of them.
pub fn affected_vertices(grid: &Grid, updated: &[u32]) -> Vec<u32> {
    let mut mark = vec![false; grid.num_vertices()];
    let mut out = Vec::new();
    for &u in updated {
        let u = u as usize;
        if !mark[u] {
            mark[u] = true;
            out.push(u as u32);
        }
        grid.for_each_neighbor(u, |w| {
            if !mark[w] {
                mark[w] = true;
                out.push(w as u32);
            }
        });
    }
    out
}

const MAX_COFACETS: usize = 16;

struct LocalCell {
    s: SimplexRef,
    key: SimplexKey,
    facets: [u8; 4],
    nf: u8,
    cofacets: [u8; MAX_COFACETS],
    nc: u8,
}

/// Robins-style homotopy expansion over the lower star of `v`.
///
/// Returns the pairing of every simplex in the lower star; priorities follow
/// the lexicographic simplex order, so the result only depends on the
/// filtration.
pub fn process_lower_star(grid: &Grid, v: usize, order: &VertexOrder) -> Vec<(SimplexRef, Pairing)> {
    let mut ls = grid.lower_star(v, order);
    if ls.len() == 1 {
        return vec![(ls[0], Pairing::Critical)];
    }
    ls.sort_unstable();
    let mut cells: Vec<LocalCell> = ls
        .iter()
        .map(|&s| LocalCell {
            s,
            key: grid.key(s, order),
            facets: [0; 4],
            nf: 0,
            cofacets: [0; MAX_COFACETS],
            nc: 0,
        })
        .collect();
    for i in 0..cells.len() {
        let s = cells[i].s;
        grid.for_each_facet(s, |f| {
            if let Ok(j) = ls.binary_search(&f) {
                let c = &mut cells[i];
                c.facets[c.nf as usize] = j as u8;
                c.nf += 1;
                let d = &mut cells[j];
                d.cofacets[d.nc as usize] = i as u8;
                d.nc += 1;
            }
        });
    }

    let n = cells.len();
    let mut out: Vec<Option<Pairing>> = vec![None; n];
    let unpaired_faces = |out: &[Option<Pairing>], i: usize| -> (usize, usize) {
        let c = &cells[i];
        let mut count = 0;
        let mut last = 0;
        for &f in &c.facets[..c.nf as usize] {
            if out[f as usize].is_none() {
                count += 1;
                last = f as usize;
            }
        }
        (count, last)
    };

    let vertex = ls.binary_search(&SimplexRef::vertex(v as u32)).expect("v in lower star");
    let delta = (0..n)
        .filter(|&i| cells[i].s.dim == 1)
        .min_by_key(|&i| cells[i].key)
        .expect("non-trivial lower star has an edge");
    out[vertex] = Some(Pairing::Cofacet(cells[delta].s));
    out[delta] = Some(Pairing::Facet(cells[vertex].s));

    let mut pq_zero: BinaryHeap<Reverse<(SimplexKey, usize)>> = (0..n)
        .filter(|&i| i != delta && cells[i].s.dim == 1)
        .map(|i| Reverse((cells[i].key, i)))
        .collect();
    let mut pq_one: BinaryHeap<Reverse<(SimplexKey, usize)>> = BinaryHeap::new();
    let push_ready = |pq: &mut BinaryHeap<_>, out: &[Option<Pairing>], i: usize| {
        let c = &cells[i];
        for &b in &c.cofacets[..c.nc as usize] {
            let b = b as usize;
            if out[b].is_none() && unpaired_faces(out, b).0 == 1 {
                pq.push(Reverse((cells[b].key, b)));
            }
        }
    };
    push_ready(&mut pq_one, &out, delta);

    loop {
        while let Some(Reverse((_, a))) = pq_one.pop() {
            if out[a].is_some() {
                continue;
            }
            let (count, face) = unpaired_faces(&out, a);
            if count == 0 {
                pq_zero.push(Reverse((cells[a].key, a)));
            } else {
                out[face] = Some(Pairing::Cofacet(cells[a].s));
                out[a] = Some(Pairing::Facet(cells[face].s));
                push_ready(&mut pq_one, &out, a);
                push_ready(&mut pq_one, &out, face);
            }
        }
        let Some(Reverse((_, g))) = pq_zero.pop() else {
            break;
        };
        if out[g].is_some() {
            continue;
        }
        out[g] = Some(Pairing::Critical);
        push_ready(&mut pq_one, &out, g);
    }

    cells
        .iter()
        .zip(out)
        .map(|(c, p)| (c.s, p.expect("every lower-star simplex is assigned")))
        .collect()
}

/// Full gradient of the lexicographic lower-star filtration.
pub fn build_gradient(field: &ScalarField, order: &VertexOrder) -> DiscreteGradient {
    let mut g = DiscreteGradient::empty(field.grid());
    let all: Vec<u32> = (0..field.grid().num_vertices() as u32).collect();
    g.process_all(&all, order);
    g
}

/// Copies `g` and reprocesses the lower stars touched by `updated`.
///
/// `g` must be the gradient of a field that differs from `field` only on
/// `updated`; the result then equals `build_gradient(field, order)`.
pub fn update_gradient(
    g: &DiscreteGradient,
    field: &ScalarField,
    order: &VertexOrder,
    updated: &[u32],
) -> DiscreteGradient {
    let mut out = g.clone();
    out.update(field, order, updated);
    out
}

/// Checks involution, adjacency, completeness and acyclicity.
pub fn validate_gradient(g: &DiscreteGradient) -> Result<(), GradientViolation> {
    let grid = &g.grid;
    for k in 0..=grid.ndim() {
        for s in grid.simplices(k) {
            match g.pairing(s) {
                None => return Err(GradientViolation::Unassigned(s)),
                Some(Pairing::Critical) => {}
                Some(Pairing::Cofacet(t)) => {
                    if !grid.contains(t) || !grid.facets(t).contains(&s) {
                        return Err(GradientViolation::NotAdjacent { from: s, to: t });
                    }
                    if g.pairing(t) != Some(Pairing::Facet(s)) {
                        return Err(GradientViolation::Involution { from: s, to: t });
                    }
                }
                Some(Pairing::Facet(t)) => {
                    if !grid.contains(t) || !grid.cofacets(t).contains(&s) {
                        return Err(GradientViolation::NotAdjacent { from: s, to: t });
                    }
                    if g.pairing(t) != Some(Pairing::Cofacet(s)) {
                        return Err(GradientViolation::Involution { from: s, to: t });
                    }
                }
            }
        }
    }
    for k in 0..grid.ndim() {
        if let Some(s) = find_cycle(g, k, grid.simplices(k)) {
            return Err(GradientViolation::Cycle(s));
        }
    }
    Ok(())
}

/// Searches for a closed V-path among `k`-cells reachable from `starts`.
///
/// A V-path step goes from a `k`-cell through its head to another facet of
/// that head.
pub(crate) fn find_cycle(
    g: &DiscreteGradient,
    k: usize,
    starts: impl IntoIterator<Item = SimplexRef>,
) -> Option<SimplexRef> {
    const WHITE: u8 = 0;
    const GREY: u8 = 1;
    const BLACK: u8 = 2;
    let grid = &g.grid;
    let mut color = std::collections::HashMap::<u32, u8>::new();
    let mut stack: Vec<(SimplexRef, Vec<SimplexRef>)> = Vec::new();
    let successors = |e: SimplexRef| -> Vec<SimplexRef> {
        match g.head(e) {
            Some(t) => grid
                .facets(t)
                .into_iter()
                .filter(|&f| f != e && g.head(f).is_some())
                .collect(),
            None => Vec::new(),
        }
    };
    for s in starts {
        debug_assert_eq!(s.dim as usize, k);
        if g.head(s).is_none() || color.get(&s.id).copied().unwrap_or(WHITE) != WHITE {
            continue;
        }
        color.insert(s.id, GREY);
        stack.push((s, successors(s)));
        while let Some((node, next)) = stack.last_mut() {
            if let Some(n) = next.pop() {
                match color.get(&n.id).copied().unwrap_or(WHITE) {
                    GREY => return Some(n),
                    WHITE => {
                        color.insert(n.id, GREY);
                        let succ = successors(n);
                        stack.push((n, succ));
                    }
                    _ => {}
                }
            } else {
                color.insert(node.id, BLACK);
                stack.pop();
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gradient_of(dims: &[usize], values: Vec<f64>) -> (ScalarField, VertexOrder, DiscreteGradient) {
        let f = ScalarField::new(dims, values).unwrap();
        let o = VertexOrder::new(&f).unwrap();
        let g = build_gradient(&f, &o);
        (f, o, g)
    }

    fn critical_counts(g: &DiscreteGradient) -> Vec<usize> {
        (0..=g.grid().ndim()).map(|k| g.critical_count(k)).collect()
    }

    #[test]
    fn single_triangle_lower_star() {
        // 2x2 grid: vertices 0 and 3 lie on the diagonal shared by both triangles.
        // Give triangle {0, 1, 3} ranks 0 < 1 < 2 and keep vertex 2 highest.
        let (f, o, g) = gradient_of(&[2, 2], vec![0.0, 1.0, 3.0, 2.0]);
        let grid = f.grid();
        let local = process_lower_star(grid, 3, &o);
        let find = |vs: &[u32]| {
            local
                .iter()
                .find(|(s, _)| {
                    let mut a: Vec<u32> = grid.vertices(*s).to_vec();
                    a.sort();
                    a == vs
                })
                .unwrap()
                .1
        };
        let e03 = grid.simplices(1).find(|&e| grid.vertices(e).contains(&0) && grid.vertices(e).contains(&3)).unwrap();
        let tri = grid.simplices(2).find(|&t| grid.vertices(t).contains(&1)).unwrap();
        assert_eq!(find(&[3]), Pairing::Cofacet(e03));
        assert_eq!(find(&[1, 3]), Pairing::Cofacet(tri));
        assert!(g.is_critical(SimplexRef::vertex(0)));
        assert_eq!(validate_gradient(&g), Ok(()));
        let _ = f;
    }

    #[test]
    fn path_local_maximum() {
        let (_, o, g) = gradient_of(&[3], vec![0.0, 2.0, 1.0]);
        let local = process_lower_star(g.grid(), 1, &o);
        let crit: Vec<_> = local.iter().filter(|(_, p)| *p == Pairing::Critical).collect();
        assert_eq!(crit.len(), 1);
        assert_eq!(crit[0].0.dim, 1);
        // The vertex pairs with its lower edge, toward value 0.
        let (_, p) = local.iter().find(|(s, _)| s.dim == 0).unwrap();
        let Pairing::Cofacet(e) = *p else { panic!() };
        assert!(g.grid().vertices(e).contains(&0));
    }

    #[test]
    fn monotone_path_has_one_critical_vertex() {
        let (_, _, g) = gradient_of(&[10], (0..10).map(f64::from).collect());
        assert_eq!(critical_counts(&g), vec![1, 0]);
    }

    #[test]
    fn gaussian_bump_euler_characteristic() {
        let f = ScalarField::from_fn(&[64, 64], |c| {
            let dx = c[0] as f64 - 30.0;
            let dy = c[1] as f64 - 34.0;
            (-(dx * dx + dy * dy) / 100.0).exp()
        })
        .unwrap();
        let o = VertexOrder::new(&f).unwrap();
        let g = build_gradient(&f, &o);
        let c = critical_counts(&g);
        assert_eq!(c[0] as i64 - c[1] as i64 + c[2] as i64, 1);
        assert!(c[0] >= 1);
        assert_eq!(validate_gradient(&g), Ok(()));
    }

    #[test]
    fn swapped_vector_is_reported() {
        let (_, _, mut g) = gradient_of(&[4, 4], (0..16).map(|i| ((i * 7) % 16) as f64).collect());
        let grid = g.grid().clone();
        let e = grid.simplices(1).find(|&e| g.tail(e).is_some()).unwrap();
        let v = g.tail(e).unwrap();
        // Point the edge at a different facet than the one pointing at it.
        let other = grid.facets(e).into_iter().find(|&x| x != v).unwrap();
        g.set_raw(e, Pairing::Facet(other));
        assert!(matches!(
            validate_gradient(&g),
            Err(GradientViolation::Involution { .. })
        ));
    }

    #[test]
    fn two_vector_cycle_is_reported() {
        let (_, _, g0) = gradient_of(&[2, 2], vec![0.0, 1.0, 2.0, 3.0]);
        let grid = g0.grid().clone();
        let mut g = g0.clone();
        // Vertex-edge cycle 0 -> e01 -> 1 -> e13 -> 3 -> e03 -> 0.
        let edge = |a: u32, b: u32| {
            grid.simplices(1)
                .find(|&e| grid.vertices(e).contains(&a) && grid.vertices(e).contains(&b))
                .unwrap()
        };
        for k in 0..=2 {
            for s in grid.simplices(k) {
                g.set_critical(s);
            }
        }
        g.set_vector(SimplexRef::vertex(0), edge(0, 1));
        g.set_vector(SimplexRef::vertex(1), edge(1, 3));
        g.set_vector(SimplexRef::vertex(3), edge(0, 3));
        assert!(matches!(validate_gradient(&g), Err(GradientViolation::Cycle(_))));
    }

    #[test]
    fn update_with_empty_set_is_identity() {
        let (f, o, g) = gradient_of(&[5, 5], (0..25).map(|i| ((i * 13) % 25) as f64).collect());
        assert_eq!(update_gradient(&g, &f, &o, &[]), g);
    }

    #[test]
    fn update_matches_rebuild_on_random_perturbations() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..100 {
            let dims: &[usize] = if trial % 4 == 3 { &[6, 5, 4] } else { &[16, 16] };
            let n: usize = dims.iter().product();
            let values: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let (mut f, mut o, g) = gradient_of(dims, values);
            let k = rng.gen_range(1..8);
            let updated: Vec<u32> = (0..k).map(|_| rng.gen_range(0..n as u32)).collect();
            for &u in &updated {
                let x = if rng.gen_bool(0.3) {
                    f.value(rng.gen_range(0..n))
                } else {
                    rng.gen_range(0.0..1.0)
                };
                f.set(u as usize, x).unwrap();
            }
            o.update(f.values(), &updated);
            let fast = update_gradient(&g, &f, &o, &updated);
            assert_eq!(fast, build_gradient(&f, &o), "trial {trial}");
        }
    }

    #[test]
    fn morse_inequalities_and_validity_on_random_fields() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for dims in [vec![9, 9], vec![5, 5, 5], vec![30]] {
            for _ in 0..20 {
                let n: usize = dims.iter().product();
                let values: Vec<f64> = (0..n).map(|_| rng.gen_range(0..6) as f64).collect();
                let (_, _, g) = gradient_of(&dims, values);
                assert_eq!(validate_gradient(&g), Ok(()));
                let c = critical_counts(&g);
                assert!(c[0] >= 1);
                let chi: i64 = c
                    .iter()
                    .enumerate()
                    .map(|(k, &x)| if k % 2 == 0 { x as i64 } else { -(x as i64) })
                    .sum();
                assert_eq!(chi, 1);
            }
        }
    }

    #[test]
    fn build_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let values: Vec<f64> = (0..40 * 40 * 3).map(|_| rng.gen_range(0.0..1.0)).collect();
        let (_, _, a) = gradient_of(&[40, 40, 3], values.clone());
        let (_, _, b) = gradient_of(&[40, 40, 3], values);
        assert_eq!(a, b);
    }
}
