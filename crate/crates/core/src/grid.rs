//! Implicit Freudenthal (Kuhn) triangulation of 1D, 2D and 3D regular grids.
//!
//! A simplex is anchored at its lowest-coordinate vertex (the *base*) and is
//! described by a strictly increasing chain of axis subsets
//! `∅ = S0 ⊊ S1 ⊊ ... ⊊ Sk`; its vertices are `base + e(Si)`. Every chain of a
//! given length gets a fixed slot number, and the simplex id is
//! `base * slots(k) + slot`. Ids whose top vertex falls outside the grid are
//! simply not simplices.
//!
//! The filtration order is the lexicographic order on [`SimplexKey`]s, built
//! from the global [`VertexOrder`] (value first, vertex index as tie-break).

use std::cmp::Ordering;
use std::fmt;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// A simplex of the implicit triangulation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SimplexRef {
    pub dim: u8,
    pub id: u32,
}

impl SimplexRef {
    pub const fn new(dim: u8, id: u32) -> Self {
        Self { dim, id }
    }

    pub const fn vertex(v: u32) -> Self {
        Self { dim: 0, id: v }
    }
}

impl fmt::Display for SimplexRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-simplex #{}", self.dim, self.id)
    }
}

/// Vertex ranks of a simplex, sorted in decreasing order.
///
/// Keys compare lexicographically; when one key is a prefix of the other the
/// shorter one comes first, which places every face before its cofaces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SimplexKey {
    ranks: [u32; 4],
    len: u8,
}

impl SimplexKey {
    pub fn from_ranks(ranks: &[u32]) -> Self {
        assert!(!ranks.is_empty() && ranks.len() <= 4);
        let mut buf = [0u32; 4];
        buf[..ranks.len()].copy_from_slice(ranks);
        buf[..ranks.len()].sort_unstable_by(|a, b| b.cmp(a));
        Self {
            ranks: buf,
            len: ranks.len() as u8,
        }
    }

    pub fn ranks(&self) -> &[u32] {
        &self.ranks[..self.len as usize]
    }

    /// Rank of the highest vertex.
    pub fn top(&self) -> u32 {
        self.ranks[0]
    }
}

impl Ord for SimplexKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.ranks().cmp(other.ranks())
    }
}

impl PartialOrd for SimplexKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Vertex indices of one simplex, in chain order (base first).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SimplexVertices {
    v: [u32; 4],
    n: u8,
}

impl std::ops::Deref for SimplexVertices {
    type Target = [u32];
    fn deref(&self) -> &[u32] {
        &self.v[..self.n as usize]
    }
}

struct Tables {
    /// `chains[k][slot]`: axis masks of the chain, `chains[k][slot][0] == 0`.
    chains: Vec<Vec<[u8; 4]>>,
    /// `star[k]`: every (slot, mask) such that a vertex sits at `base + mask`.
    star: Vec<Vec<(u16, u8)>>,
    /// `facets[k][slot]`: (mask added to the base, facet slot).
    facets: Vec<Vec<Vec<(u8, u16)>>>,
    /// `cofacets[k][slot]`: (mask removed from the base, cofacet slot).
    cofacets: Vec<Vec<Vec<(u8, u16)>>>,
}

const NO_SLOT: u16 = u16::MAX;

fn chain_code(chain: &[u8]) -> usize {
    chain
        .iter()
        .skip(1)
        .enumerate()
        .fold(0usize, |acc, (i, &m)| acc | ((m as usize) << (3 * i)))
}

fn is_strict_subset(a: u8, b: u8) -> bool {
    a != b && a & b == a
}

impl Tables {
    fn build(ndim: usize) -> Self {
        let full: u8 = ((1u16 << ndim) - 1) as u8;
        let mut chains: Vec<Vec<[u8; 4]>> = vec![vec![[0; 4]]];
        for k in 1..=ndim {
            let mut next = Vec::new();
            for c in &chains[k - 1] {
                let last = c[k - 1];
                for m in 1..=full {
                    if is_strict_subset(last, m) && m & !full == 0 {
                        let mut nc = *c;
                        nc[k] = m;
                        next.push(nc);
                    }
                }
            }
            chains.push(next);
        }

        let lookup: Vec<Vec<u16>> = chains
            .iter()
            .enumerate()
            .map(|(k, cs)| {
                let mut t = vec![NO_SLOT; 512];
                for (slot, c) in cs.iter().enumerate() {
                    t[chain_code(&c[..=k])] = slot as u16;
                }
                t
            })
            .collect();
        let slot_of = |k: usize, chain: &[u8]| -> u16 {
            let s = lookup[k][chain_code(chain)];
            debug_assert_ne!(s, NO_SLOT);
            s
        };

        let star = chains
            .iter()
            .enumerate()
            .map(|(k, cs)| {
                cs.iter()
                    .enumerate()
                    .flat_map(|(slot, c)| (0..=k).map(move |p| (slot as u16, c[p])))
                    .collect()
            })
            .collect();

        let mut facets = Vec::new();
        let mut cofacets = Vec::new();
        for (k, cs) in chains.iter().enumerate() {
            let mut fk = Vec::new();
            let mut ck = Vec::new();
            for c in cs {
                let c = &c[..=k];
                let mut f = Vec::new();
                if k >= 1 {
                    for i in 0..=k {
                        if i == 0 {
                            let shifted: Vec<u8> = c[1..].iter().map(|&m| m ^ c[1]).collect();
                            f.push((c[1], slot_of(k - 1, &shifted)));
                        } else {
                            let mut rest = c.to_vec();
                            rest.remove(i);
                            f.push((0, slot_of(k - 1, &rest)));
                        }
                    }
                }
                fk.push(f);

                let mut co = Vec::new();
                if k < ndim {
                    for i in 1..=k {
                        for t in 1..=full {
                            if is_strict_subset(c[i - 1], t) && is_strict_subset(t, c[i]) {
                                let mut nc = c.to_vec();
                                nc.insert(i, t);
                                co.push((0, slot_of(k + 1, &nc)));
                            }
                        }
                    }
                    for t in 1..=full {
                        if is_strict_subset(c[k], t) {
                            let mut nc = c.to_vec();
                            nc.push(t);
                            co.push((0, slot_of(k + 1, &nc)));
                        }
                    }
                    for u in 1..=full {
                        if u & c[k] == 0 {
                            let mut nc = vec![0u8];
                            nc.extend(c.iter().map(|&m| m | u));
                            co.push((u, slot_of(k + 1, &nc)));
                        }
                    }
                }
                ck.push(co);
            }
            facets.push(fk);
            cofacets.push(ck);
        }

        Self {
            chains,
            star,
            facets,
            cofacets,
        }
    }

    fn get(ndim: usize) -> &'static Tables {
        static TABLES: [OnceLock<Tables>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
        TABLES[ndim - 1].get_or_init(|| Tables::build(ndim))
    }
}

/// A regular grid of 1 to 3 axes with its implicit triangulation.
#[derive(Clone)]
pub struct Grid {
    dims: [usize; 3],
    ndim: usize,
    nv: usize,
    strides: [usize; 3],
    offsets: [usize; 8],
    tables: &'static Tables,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid").field("dims", &self.dims()).finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.ndim == other.ndim && self.dims == other.dims
    }
}

impl Eq for Grid {}

impl Grid {
    pub fn new(dims: &[usize]) -> Result<Self> {
        if dims.is_empty() || dims.len() > 3 {
            return Err(Error::InvalidInput(format!(
                "grids must have 1 to 3 axes, got {}",
                dims.len()
            )));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidInput(format!("zero extent in {dims:?}")));
        }
        let mut full = [1usize; 3];
        full[..dims.len()].copy_from_slice(dims);
        let nv = full.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
        let nv = nv.ok_or_else(|| Error::InvalidInput(format!("grid {dims:?} too large")))?;
        let strides = [1, full[0], full[0] * full[1]];
        let mut offsets = [0usize; 8];
        for (m, o) in offsets.iter_mut().enumerate() {
            *o = (0..3).filter(|a| m >> a & 1 == 1).map(|a| strides[a]).sum();
        }
        let tables = Tables::get(dims.len());
        let max_slots = tables.chains.iter().map(Vec::len).max().unwrap_or(1);
        if nv.checked_mul(max_slots).map_or(true, |n| n >= (1usize << 31)) {
            return Err(Error::InvalidInput(format!("grid {dims:?} too large")));
        }
        Ok(Self {
            dims: full,
            ndim: dims.len(),
            nv,
            strides,
            offsets,
            tables,
        })
    }

    pub fn ndim(&self) -> usize {
        self.ndim
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims[..self.ndim]
    }

    pub fn num_vertices(&self) -> usize {
        self.nv
    }

    #[inline]
    pub fn coords(&self, v: usize) -> [usize; 3] {
        let x = v % self.dims[0];
        let r = v / self.dims[0];
        [x, r % self.dims[1], r / self.dims[1]]
    }

    #[inline]
    pub fn index(&self, c: [usize; 3]) -> usize {
        c[0] + self.strides[1] * c[1] + self.strides[2] * c[2]
    }

    /// Number of id slots per base vertex for `k`-simplices.
    pub fn slots(&self, k: usize) -> usize {
        self.tables.chains[k].len()
    }

    /// Size of the id space for `k`-simplices (including non-simplex ids).
    pub fn id_space(&self, k: usize) -> usize {
        self.nv * self.slots(k)
    }

    #[inline]
    fn fits(&self, c: &[usize; 3], top: u8) -> bool {
        (0..3).all(|a| top >> a & 1 == 0 || c[a] + 1 < self.dims[a])
    }

    #[inline]
    fn split(&self, s: SimplexRef) -> (usize, usize) {
        let n = self.slots(s.dim as usize);
        (s.id as usize / n, s.id as usize % n)
    }

    #[inline]
    fn make(&self, k: usize, base: usize, slot: u16) -> SimplexRef {
        SimplexRef::new(k as u8, (base * self.slots(k) + slot as usize) as u32)
    }

    /// Whether `s` names a simplex of this grid.
    pub fn contains(&self, s: SimplexRef) -> bool {
        let k = s.dim as usize;
        if k > self.ndim || s.id as usize >= self.id_space(k) {
            return false;
        }
        let (base, slot) = self.split(s);
        self.fits(&self.coords(base), self.tables.chains[k][slot][k])
    }

    pub fn vertices(&self, s: SimplexRef) -> SimplexVertices {
        let k = s.dim as usize;
        let (base, slot) = self.split(s);
        let chain = &self.tables.chains[k][slot];
        let mut v = [0u32; 4];
        for i in 0..=k {
            v[i] = (base + self.offsets[chain[i] as usize]) as u32;
        }
        SimplexVertices { v, n: (k + 1) as u8 }
    }

    pub fn for_each_facet(&self, s: SimplexRef, mut f: impl FnMut(SimplexRef)) {
        let k = s.dim as usize;
        if k == 0 {
            return;
        }
        let (base, slot) = self.split(s);
        for &(shift, fslot) in &self.tables.facets[k][slot] {
            f(self.make(k - 1, base + self.offsets[shift as usize], fslot));
        }
    }

    pub fn facets(&self, s: SimplexRef) -> Vec<SimplexRef> {
        let mut out = Vec::with_capacity(s.dim as usize + 1);
        self.for_each_facet(s, |t| out.push(t));
        out
    }

    pub fn for_each_cofacet(&self, s: SimplexRef, mut f: impl FnMut(SimplexRef)) {
        let k = s.dim as usize;
        if k >= self.ndim {
            return;
        }
        let (base, slot) = self.split(s);
        let c = self.coords(base);
        for &(sub, cslot) in &self.tables.cofacets[k][slot] {
            if (0..3).any(|a| sub >> a & 1 == 1 && c[a] == 0) {
                continue;
            }
            let mut nc = c;
            for (a, x) in nc.iter_mut().enumerate() {
                if sub >> a & 1 == 1 {
                    *x -= 1;
                }
            }
            let top = self.tables.chains[k + 1][cslot as usize][k + 1];
            if self.fits(&nc, top) {
                f(self.make(k + 1, base - self.offsets[sub as usize], cslot));
            }
        }
    }

    pub fn cofacets(&self, s: SimplexRef) -> Vec<SimplexRef> {
        let mut out = Vec::new();
        self.for_each_cofacet(s, |t| out.push(t));
        out
    }

    /// Calls `f` on every simplex containing vertex `v`.
    pub fn for_each_in_star(&self, v: usize, mut f: impl FnMut(SimplexRef)) {
        let c = self.coords(v);
        for k in 0..=self.ndim {
            for &(slot, mask) in &self.tables.star[k] {
                if (0..3).any(|a| mask >> a & 1 == 1 && c[a] == 0) {
                    continue;
                }
                let top = self.tables.chains[k][slot as usize][k];
                let ok = (0..3).all(|a| {
                    let in_top = top >> a & 1 == 1;
                    let in_mask = mask >> a & 1 == 1;
                    !in_top || in_mask || c[a] + 1 < self.dims[a]
                });
                if ok {
                    f(self.make(k, v - self.offsets[mask as usize], slot));
                }
            }
        }
    }

    pub fn star(&self, v: usize) -> Vec<SimplexRef> {
        let mut out = Vec::new();
        self.for_each_in_star(v, |s| out.push(s));
        out
    }

    /// Cofaces of `v` whose highest vertex in `order` is `v` itself.
    pub fn lower_star(&self, v: usize, order: &VertexOrder) -> Vec<SimplexRef> {
        let r = order.rank(v);
        let mut out = Vec::new();
        self.for_each_in_star(v, |s| {
            if self.vertices(s).iter().all(|&u| order.rank(u as usize) <= r) {
                out.push(s);
            }
        });
        out
    }

    /// All vertices sharing a simplex with `v` (excluding `v`).
    pub fn for_each_neighbor(&self, v: usize, mut f: impl FnMut(usize)) {
        if self.ndim == 0 {
            return;
        }
        // Edges of the star reach every vertex that shares a cell with `v`.
        let c = self.coords(v);
        for &(slot, mask) in &self.tables.star[1] {
            if (0..3).any(|a| mask >> a & 1 == 1 && c[a] == 0) {
                continue;
            }
            let top = self.tables.chains[1][slot as usize][1];
            let ok = (0..3).all(|a| {
                top >> a & 1 == 0 || mask >> a & 1 == 1 || c[a] + 1 < self.dims[a]
            });
            if ok {
                let base = v - self.offsets[mask as usize];
                let other = if mask == 0 {
                    base + self.offsets[top as usize]
                } else {
                    base
                };
                f(other);
            }
        }
    }

    /// Iterates over every `k`-simplex of the grid in id order.
    pub fn simplices(&self, k: usize) -> impl Iterator<Item = SimplexRef> + '_ {
        let n = self.slots(k);
        (0..self.nv).flat_map(move |base| {
            let c = self.coords(base);
            (0..n).filter_map(move |slot| {
                let top = self.tables.chains[k][slot][k];
                self.fits(&c, top).then(|| self.make(k, base, slot as u16))
            })
        })
    }

    pub fn simplex_count(&self, k: usize) -> usize {
        self.simplices(k).count()
    }

    /// Highest vertex of `s` in `order`.
    pub fn max_vertex(&self, s: SimplexRef, order: &VertexOrder) -> u32 {
        *self
            .vertices(s)
            .iter()
            .max_by_key(|&&u| order.rank(u as usize))
            .expect("simplex has vertices")
    }

    pub fn key(&self, s: SimplexRef, order: &VertexOrder) -> SimplexKey {
        let vs = self.vertices(s);
        let mut r = [0u32; 4];
        for (i, &u) in vs.iter().enumerate() {
            r[i] = order.rank(u as usize);
        }
        SimplexKey::from_ranks(&r[..vs.len()])
    }

    /// Barycenter of `s` in grid coordinates.
    pub fn barycenter(&self, s: SimplexRef) -> [f64; 3] {
        let vs = self.vertices(s);
        let mut acc = [0.0f64; 3];
        for &u in vs.iter() {
            let c = self.coords(u as usize);
            for a in 0..3 {
                acc[a] += c[a] as f64;
            }
        }
        acc.map(|x| x / vs.len() as f64)
    }
}

/// Grid dimensions plus one finite value per vertex, x-fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(dims: &[usize], values: Vec<f64>) -> Result<Self> {
        let grid = Grid::new(dims)?;
        Self::on_grid(grid, values)
    }

    pub fn on_grid(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.num_vertices() {
            return Err(Error::InvalidInput(format!(
                "expected {} values for grid {:?}, got {}",
                grid.num_vertices(),
                grid.dims(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite value {} at vertex {i}",
                values[i]
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(dims: &[usize], f: impl Fn([usize; 3]) -> f64) -> Result<Self> {
        let grid = Grid::new(dims)?;
        let values = (0..grid.num_vertices()).map(|v| f(grid.coords(v))).collect();
        Self::on_grid(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dims(&self) -> &[usize] {
        self.grid.dims()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn value(&self, v: usize) -> f64 {
        self.values[v]
    }

    /// Overwrites one value. Non-finite values are rejected.
    pub fn set(&mut self, v: usize, x: f64) -> Result<()> {
        if !x.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite value {x} at vertex {v}")));
        }
        self.values[v] = x;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn range(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                (lo.min(x), hi.max(x))
            })
    }

    /// Rescales the values to `[0, 1]`. Constant fields become all zeros.
    pub fn normalize(&mut self) {
        let (lo, hi) = self.range();
        let span = hi - lo;
        for x in &mut self.values {
            *x = if span > 0.0 { (*x - lo) / span } else { 0.0 };
        }
    }
}

#[inline]
fn vertex_less(values: &[f64], a: usize, b: usize) -> Ordering {
    values[a]
        .partial_cmp(&values[b])
        .expect("finite values")
        .then(a.cmp(&b))
}

/// Global vertex order: `(value, index)` lexicographic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexOrder {
    rank: Vec<u32>,
    inverse: Vec<u32>,
}

impl VertexOrder {
    pub fn new(field: &ScalarField) -> Result<Self> {
        Self::from_values(field.values())
    }

    pub fn from_values(values: &[f64]) -> Result<Self> {
        if let Some(i) = values.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite value at vertex {i}")));
        }
        let mut inverse: Vec<u32> = (0..values.len() as u32).collect();
        inverse.sort_unstable_by(|&a, &b| vertex_less(values, a as usize, b as usize));
        let mut rank = vec![0u32; values.len()];
        for (r, &v) in inverse.iter().enumerate() {
            rank[v as usize] = r as u32;
        }
        Ok(Self { rank, inverse })
    }

    /// Re-sorts after the values of `updated` changed; every other vertex
    /// keeps its relative position.
    pub fn update(&mut self, values: &[f64], updated: &[u32]) {
        if updated.is_empty() {
            return;
        }
        let mut moved = vec![false; values.len()];
        for &u in updated {
            moved[u as usize] = true;
        }
        let mut ins: Vec<u32> = updated.to_vec();
        ins.sort_unstable_by(|&a, &b| vertex_less(values, a as usize, b as usize));
        ins.dedup();
        let kept = self.inverse.iter().copied().filter(|&v| !moved[v as usize]);
        let mut merged = Vec::with_capacity(values.len());
        let mut ins = ins.into_iter().peekable();
        for v in kept {
            while let Some(&u) = ins.peek() {
                if vertex_less(values, u as usize, v as usize) == Ordering::Less {
                    merged.push(u);
                    ins.next();
                } else {
                    break;
                }
            }
            merged.push(v);
        }
        merged.extend(ins);
        for (r, &v) in merged.iter().enumerate() {
            self.rank[v as usize] = r as u32;
        }
        self.inverse = merged;
    }

    #[inline]
    pub fn rank(&self, v: usize) -> u32 {
        self.rank[v]
    }

    pub fn ranks(&self) -> &[u32] {
        &self.rank
    }

    /// Vertex at position `r` of the order.
    #[inline]
    pub fn vertex_at(&self, r: usize) -> u32 {
        self.inverse[r]
    }

    pub fn len(&self) -> usize {
        self.rank.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rank.is_empty()
    }

    /// Last vertex of the order (global maximum).
    pub fn max_vertex(&self) -> u32 {
        *self.inverse.last().expect("non-empty order")
    }

    pub fn min_vertex(&self) -> u32 {
        self.inverse[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn all_simplices(g: &Grid) -> Vec<SimplexRef> {
        (0..=g.ndim()).flat_map(|k| g.simplices(k)).collect()
    }

    #[test]
    fn vertex_order_examples() {
        let o = VertexOrder::from_values(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(o.ranks(), &[0, 1, 2]);
        let o = VertexOrder::from_values(&[0.5, 0.2, 0.2]).unwrap();
        assert_eq!(o.ranks(), &[2, 0, 1]);
        let o = VertexOrder::from_values(&[4.0; 5]).unwrap();
        assert_eq!(o.ranks(), &[0, 1, 2, 3, 4]);
        assert!(VertexOrder::from_values(&[0.0, f64::NAN]).is_err());
    }

    #[test]
    fn keys_compare_lexicographically() {
        let v = SimplexKey::from_ranks(&[2]);
        let e = SimplexKey::from_ranks(&[1, 2]);
        assert_eq!(e.ranks(), &[2, 1]);
        assert!(v < e);
        let t = SimplexKey::from_ranks(&[4, 1, 0]);
        let e2 = SimplexKey::from_ranks(&[4, 2]);
        assert!(t < e2);
    }

    #[test]
    fn freudenthal_counts_2d() {
        for (nx, ny) in [(2, 2), (3, 4), (5, 3), (1, 4)] {
            let g = Grid::new(&[nx, ny]).unwrap();
            assert_eq!(g.simplex_count(0), nx * ny);
            let axis = (nx - 1) * ny + nx * (ny - 1);
            let diag = (nx - 1) * (ny - 1);
            assert_eq!(g.simplex_count(1), axis + diag);
            assert_eq!(g.simplex_count(2), 2 * (nx - 1) * (ny - 1));
        }
    }

    #[test]
    fn freudenthal_counts_3d() {
        let (nx, ny, nz) = (3, 4, 2);
        let g = Grid::new(&[nx, ny, nz]).unwrap();
        let cubes = (nx - 1) * (ny - 1) * (nz - 1);
        assert_eq!(g.simplex_count(3), 6 * cubes);
        // Interior vertex of a Kuhn triangulation: 14 edges, 36 triangles, 24 tets.
        let g = Grid::new(&[3, 3, 3]).unwrap();
        let mid = g.index([1, 1, 1]);
        let star = g.star(mid);
        let count = |k| star.iter().filter(|s| s.dim == k).count();
        assert_eq!((count(1), count(2), count(3)), (14, 36, 24));
    }

    #[test]
    fn euler_characteristic_is_one() {
        for dims in [vec![7], vec![4, 5], vec![3, 4, 5], vec![1, 1, 3]] {
            let g = Grid::new(&dims).unwrap();
            let chi: i64 = (0..=g.ndim())
                .map(|k| if k % 2 == 0 { 1 } else { -1 } * g.simplex_count(k) as i64)
                .sum();
            assert_eq!(chi, 1, "dims {dims:?}");
        }
    }

    #[test]
    fn facets_and_cofacets_are_consistent() {
        for dims in [vec![4], vec![3, 4], vec![3, 3, 4]] {
            let g = Grid::new(&dims).unwrap();
            let simplices = all_simplices(&g);
            let set: HashSet<_> = simplices.iter().copied().collect();
            for &s in &simplices {
                let vs: HashSet<u32> = g.vertices(s).iter().copied().collect();
                assert_eq!(vs.len(), s.dim as usize + 1);
                let fs = g.facets(s);
                assert_eq!(fs.len(), if s.dim == 0 { 0 } else { s.dim as usize + 1 });
                for f in &fs {
                    assert!(set.contains(f), "facet {f} of {s} missing");
                    let fv: HashSet<u32> = g.vertices(*f).iter().copied().collect();
                    assert!(fv.is_subset(&vs));
                    assert!(g.cofacets(*f).contains(&s));
                }
                for c in g.cofacets(s) {
                    assert!(set.contains(&c));
                    assert!(g.facets(c).contains(&s));
                }
            }
        }
    }

    #[test]
    fn cofacets_of_interior_edge_in_2d() {
        let g = Grid::new(&[4, 4]).unwrap();
        let (a, b) = (g.index([1, 1, 0]), g.index([2, 1, 0]));
        let e = g
            .simplices(1)
            .find(|&e| {
                let vs = g.vertices(e);
                vs.contains(&(a as u32)) && vs.contains(&(b as u32))
            })
            .unwrap();
        assert_eq!(g.cofacets(e).len(), 2);
        let tet = Grid::new(&[2, 2, 2]).unwrap().simplices(3).next().unwrap();
        assert_eq!(Grid::new(&[2, 2, 2]).unwrap().facets(tet).len(), 4);
    }

    #[test]
    fn lower_star_of_2x2_max() {
        let f = ScalarField::new(&[2, 2], vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let o = VertexOrder::new(&f).unwrap();
        let ls = f.grid().lower_star(3, &o);
        let count = |k| ls.iter().filter(|s| s.dim == k).count();
        assert_eq!((count(0), count(1), count(2)), (1, 3, 2));
        assert_eq!(f.grid().lower_star(0, &o), vec![SimplexRef::vertex(0)]);
    }

    #[test]
    fn neighbors_match_star_vertices() {
        let g = Grid::new(&[3, 4, 3]).unwrap();
        for v in 0..g.num_vertices() {
            let mut from_star: HashSet<usize> = HashSet::new();
            g.for_each_in_star(v, |s| {
                from_star.extend(g.vertices(s).iter().map(|&u| u as usize))
            });
            from_star.remove(&v);
            let mut nb = HashSet::new();
            g.for_each_neighbor(v, |u| {
                nb.insert(u);
            });
            assert_eq!(nb, from_star);
        }
    }

    #[test]
    fn incremental_order_update_matches_resort() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut values: Vec<f64> = (0..200).map(|_| rng.gen_range(0.0..1.0)).collect();
        let mut order = VertexOrder::from_values(&values).unwrap();
        for _ in 0..50 {
            let updated: Vec<u32> = (0..10).map(|_| rng.gen_range(0..200)).collect();
            for &u in &updated {
                values[u as usize] = (rng.gen_range(0..4) as f64) / 4.0;
            }
            order.update(&values, &updated);
            assert_eq!(order, VertexOrder::from_values(&values).unwrap());
        }
    }

    #[test]
    fn field_rejects_bad_input() {
        assert!(ScalarField::new(&[2, 2], vec![0.0; 3]).is_err());
        assert!(ScalarField::new(&[2], vec![0.0, f64::INFINITY]).is_err());
        assert!(ScalarField::new(&[1, 1, 1, 1], vec![0.0]).is_err());
    }

    proptest::proptest! {
        #[test]
        fn faces_precede_cofaces(values in proptest::collection::vec(-1.0f64..1.0, 27)) {
            let f = ScalarField::new(&[3, 3, 3], values).unwrap();
            let o = VertexOrder::new(&f).unwrap();
            let g = f.grid();
            for s in all_simplices(g) {
                for t in g.facets(s) {
                    proptest::prop_assert!(g.key(t, &o) < g.key(s, &o));
                }
            }
        }

        #[test]
        fn lower_stars_partition_the_complex(values in proptest::collection::vec(0i32..4, 24)) {
            let values: Vec<f64> = values.into_iter().map(f64::from).collect();
            let f = ScalarField::new(&[2, 3, 4], values).unwrap();
            let o = VertexOrder::new(&f).unwrap();
            let g = f.grid();
            let mut seen = HashSet::new();
            for v in 0..g.num_vertices() {
                for s in g.lower_star(v, &o) {
                    proptest::prop_assert!(seen.insert(s));
                    proptest::prop_assert_eq!(g.max_vertex(s, &o) as usize, v);
                }
            }
            proptest::prop_assert_eq!(seen.len(), all_simplices(g).len());
        }
    }
}
