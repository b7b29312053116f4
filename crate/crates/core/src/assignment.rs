//! Wasserstein matching between persistence diagrams.
//!
//! Diagrams are split into (dimension, finiteness) classes. Finite classes are
//! augmented with diagonal projections and solved by an epsilon-scaling
//! auction (or the Hungarian algorithm when exactness is required); infinite
//! classes are matched in birth order.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::persistence::{PairKey, PersistenceDiagram, PersistencePair};

/// Relative duality gap at which the auction stops.
pub const AUCTION_PRECISION: f64 = 0.01;

/// Largest augmented class the Hungarian solver accepts.
pub const EXACT_CLASS_LIMIT: usize = 1024;

/// Where a source point is sent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Target {
    /// Index into the target diagram's pairs.
    Pair(usize),
    /// The point's own diagonal projection.
    Diagonal,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    /// One entry per pair of the source diagram.
    pub targets: Vec<Target>,
    /// Target pairs matched to the diagonal.
    pub unmatched: Vec<usize>,
    /// Sum of matched costs raised to `q`.
    pub cost: f64,
    pub q: f64,
}

impl Assignment {
    /// The Wasserstein distance, `cost^(1/q)`.
    pub fn distance(&self) -> f64 {
        self.cost.powf(1.0 / self.q)
    }

    /// Birth-death coordinates the source pair `i` is matched to.
    pub fn target_point(
        &self,
        i: usize,
        source: &PersistenceDiagram,
        target: &PersistenceDiagram,
    ) -> (f64, f64) {
        match self.targets[i] {
            Target::Pair(j) => target.pairs()[j].point(),
            Target::Diagonal => diagonal_projection(source.pairs()[i].point()),
        }
    }
}

pub fn diagonal_projection((b, d): (f64, f64)) -> (f64, f64) {
    let m = 0.5 * (b + d);
    (m, m)
}

/// Euclidean distance in birth-death space raised to `q`.
pub fn point_cost(a: (f64, f64), b: (f64, f64), q: f64) -> f64 {
    let d = (a.0 - b.0).hypot(a.1 - b.1);
    if q == 2.0 {
        d * d
    } else {
        d.powf(q)
    }
}

pub fn diagonal_cost(p: (f64, f64), q: f64) -> f64 {
    point_cost(p, diagonal_projection(p), q)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Solver {
    Auction,
    Exact,
}

type ClassKey = (u8, bool);

fn classes<'a>(
    pairs: impl Iterator<Item = (usize, &'a PersistencePair)>,
) -> HashMap<ClassKey, Vec<usize>> {
    let mut m: HashMap<ClassKey, Vec<usize>> = HashMap::new();
    for (i, p) in pairs {
        m.entry((p.dim, p.finite)).or_default().push(i);
    }
    m
}

/// Matches `src` (indices into `a`) against `dst` (indices into `b`) class by
/// class. Returns per-source targets and the total cost.
fn match_subsets(
    a: &[PersistencePair],
    src: &[usize],
    b: &[PersistencePair],
    dst: &[usize],
    q: f64,
    solver: Solver,
) -> Result<(Vec<(usize, Target)>, f64)> {
    let ca = classes(src.iter().map(|&i| (i, &a[i])));
    let cb = classes(dst.iter().map(|&j| (j, &b[j])));
    let mut keys: Vec<ClassKey> = ca.keys().chain(cb.keys()).copied().collect();
    keys.sort_unstable();
    keys.dedup();
    let empty = Vec::new();
    let solved: Vec<Result<(Vec<(usize, Target)>, f64)>> = keys
        .par_iter()
        .map(|&key| {
            let s = ca.get(&key).unwrap_or(&empty);
            let t = cb.get(&key).unwrap_or(&empty);
            if key.1 {
                match_finite(a, s, b, t, q, solver)
            } else {
                match_infinite(a, s, b, t, q, key.0)
            }
        })
        .collect();
    let mut out = Vec::with_capacity(src.len());
    let mut cost = 0.0;
    for r in solved {
        let (m, c) = r?;
        out.extend(m);
        cost += c;
    }
    Ok((out, cost))
}

fn match_infinite(
    a: &[PersistencePair],
    src: &[usize],
    b: &[PersistencePair],
    dst: &[usize],
    q: f64,
    dim: u8,
) -> Result<(Vec<(usize, Target)>, f64)> {
    if src.len() != dst.len() {
        return Err(Error::Structural(format!(
            "{} vs {} infinite pairs in dimension {dim}",
            src.len(),
            dst.len()
        )));
    }
    let by_birth = |p: &[PersistencePair], idx: &[usize]| {
        let mut v = idx.to_vec();
        v.sort_by(|&x, &y| {
            p[x].birth
                .total_cmp(&p[y].birth)
                .then(p[x].birth_vertex.cmp(&p[y].birth_vertex))
        });
        v
    };
    let (s, t) = (by_birth(a, src), by_birth(b, dst));
    let mut cost = 0.0;
    let out = s
        .iter()
        .zip(&t)
        .map(|(&i, &j)| {
            cost += point_cost(a[i].point(), b[j].point(), q);
            (i, Target::Pair(j))
        })
        .collect();
    Ok((out, cost))
}

fn match_finite(
    a: &[PersistencePair],
    src: &[usize],
    b: &[PersistencePair],
    dst: &[usize],
    q: f64,
    solver: Solver,
) -> Result<(Vec<(usize, Target)>, f64)> {
    if dst.is_empty() {
        let cost = src.iter().map(|&i| diagonal_cost(a[i].point(), q)).sum();
        return Ok((src.iter().map(|&i| (i, Target::Diagonal)).collect(), cost));
    }
    if src.is_empty() {
        let cost = dst.iter().map(|&j| diagonal_cost(b[j].point(), q)).sum();
        return Ok((Vec::new(), cost));
    }
    let problem = Augmented::new(
        src.iter().map(|&i| a[i].point()).collect(),
        dst.iter().map(|&j| b[j].point()).collect(),
        q,
    );
    let matching = match solver {
        Solver::Auction => problem.auction(AUCTION_PRECISION),
        Solver::Exact => problem.hungarian()?,
    };
    let n = src.len();
    let m = dst.len();
    let mut cost = 0.0;
    let mut out = Vec::with_capacity(n);
    for (row, &col) in matching.iter().enumerate() {
        cost += problem.cost(row, col);
        if row < n {
            let t = if col < m {
                Target::Pair(dst[col])
            } else {
                Target::Diagonal
            };
            out.push((src[row], t));
        }
    }
    Ok((out, cost))
}

/// Bipartite problem over `n + m` rows and columns.
///
/// Rows: `n` source points, then `m` diagonal copies of the target points.
/// Columns: `m` target points, then `n` diagonal copies of the source points.
struct Augmented {
    src: Vec<(f64, f64)>,
    dst: Vec<(f64, f64)>,
    src_diag: Vec<f64>,
    dst_diag: Vec<f64>,
    q: f64,
}

impl Augmented {
    fn new(src: Vec<(f64, f64)>, dst: Vec<(f64, f64)>, q: f64) -> Self {
        let src_diag = src.iter().map(|&p| diagonal_cost(p, q)).collect();
        let dst_diag = dst.iter().map(|&p| diagonal_cost(p, q)).collect();
        Self {
            src,
            dst,
            src_diag,
            dst_diag,
            q,
        }
    }

    fn size(&self) -> usize {
        self.src.len() + self.dst.len()
    }

    /// Cost of an edge, `None` when the edge does not exist.
    fn edge(&self, row: usize, col: usize) -> Option<f64> {
        let (n, m) = (self.src.len(), self.dst.len());
        match (row < n, col < m) {
            (true, true) => Some(point_cost(self.src[row], self.dst[col], self.q)),
            (true, false) => (col - m == row).then(|| self.src_diag[row]),
            (false, true) => (row - n == col).then(|| self.dst_diag[col]),
            (false, false) => Some(0.0),
        }
    }

    fn cost(&self, row: usize, col: usize) -> f64 {
        self.edge(row, col).expect("matching uses existing edges")
    }

    fn for_each_edge(&self, row: usize, mut f: impl FnMut(usize, f64)) {
        let (n, m) = (self.src.len(), self.dst.len());
        if row < n {
            for (col, &t) in self.dst.iter().enumerate() {
                f(col, point_cost(self.src[row], t, self.q));
            }
            f(m + row, self.src_diag[row]);
        } else {
            let j = row - n;
            f(j, self.dst_diag[j]);
            for col in m..m + n {
                f(col, 0.0);
            }
        }
    }

    fn max_cost(&self) -> f64 {
        let mut mx: f64 = 0.0;
        for row in 0..self.size() {
            self.for_each_edge(row, |_, c| mx = mx.max(c));
        }
        mx
    }

    /// Column per row. Gauss-Seidel auction with epsilon scaling, stopped on
    /// the relative duality gap.
    fn auction(&self, precision: f64) -> Vec<usize> {
        let size = self.size();
        let max_cost = self.max_cost();
        let mut price = vec![0.0f64; size];
        let mut row_of = vec![usize::MAX; size];
        let mut col_of = vec![usize::MAX; size];
        if max_cost == 0.0 {
            return self.greedy_zero();
        }
        let mut eps = max_cost / 4.0;
        let floor = max_cost * 1e-14;
        loop {
            row_of.fill(usize::MAX);
            col_of.fill(usize::MAX);
            let mut free: Vec<usize> = (0..size).rev().collect();
            while let Some(row) = free.pop() {
                let mut best = (usize::MAX, f64::NEG_INFINITY);
                let mut second = f64::NEG_INFINITY;
                self.for_each_edge(row, |col, c| {
                    let v = -c - price[col];
                    if v > best.1 {
                        second = best.1;
                        best = (col, v);
                    } else if v > second {
                        second = v;
                    }
                });
                let (col, v1) = best;
                let raise = if second.is_finite() { v1 - second } else { 0.0 };
                price[col] += raise + eps;
                let prev = row_of[col];
                if prev != usize::MAX {
                    col_of[prev] = usize::MAX;
                    free.push(prev);
                }
                row_of[col] = row;
                col_of[row] = col;
            }
            let primal: f64 = (0..size).map(|r| self.cost(r, col_of[r])).sum();
            let mut dual: f64 = price.iter().sum();
            for row in 0..size {
                let mut best = f64::NEG_INFINITY;
                self.for_each_edge(row, |col, c| best = best.max(-c - price[col]));
                dual += best;
            }
            let lower = -dual;
            if primal - lower <= precision * primal || eps < floor {
                return col_of;
            }
            eps /= 5.0;
        }
    }

    /// Any perfect matching; used when every cost is zero.
    fn greedy_zero(&self) -> Vec<usize> {
        let (n, m) = (self.src.len(), self.dst.len());
        (0..self.size())
            .map(|row| if row < n { m + row } else { row - n })
            .collect()
    }

    /// Column per row, exact, O(size^3).
    fn hungarian(&self) -> Result<Vec<usize>> {
        let size = self.size();
        if size > EXACT_CLASS_LIMIT {
            return Err(Error::GuardExceeded {
                what: "exact assignment class",
                size,
                limit: EXACT_CLASS_LIMIT,
            });
        }
        let big = (self.max_cost() + 1.0) * (size as f64 + 1.0) * 4.0;
        let cost = |r: usize, c: usize| self.edge(r, c).unwrap_or(big);
        // Potentials formulation with 1-based sentinel row/column 0.
        let mut u = vec![0.0f64; size + 1];
        let mut v = vec![0.0f64; size + 1];
        let mut row_at = vec![0usize; size + 1];
        let mut way = vec![0usize; size + 1];
        for i in 1..=size {
            row_at[0] = i;
            let mut j0 = 0;
            let mut minv = vec![f64::INFINITY; size + 1];
            let mut used = vec![false; size + 1];
            loop {
                used[j0] = true;
                let i0 = row_at[j0];
                let mut delta = f64::INFINITY;
                let mut j1 = 0;
                for j in 1..=size {
                    if used[j] {
                        continue;
                    }
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
                for j in 0..=size {
                    if used[j] {
                        u[row_at[j]] += delta;
                        v[j] -= delta;
                    } else {
                        minv[j] -= delta;
                    }
                }
                j0 = j1;
                if row_at[j0] == 0 {
                    break;
                }
            }
            loop {
                let j1 = way[j0];
                row_at[j0] = row_at[j1];
                j0 = j1;
                if j0 == 0 {
                    break;
                }
            }
        }
        let mut col_of = vec![0usize; size];
        for j in 1..=size {
            col_of[row_at[j] - 1] = j - 1;
        }
        Ok(col_of)
    }
}

fn assemble(
    n_src: usize,
    n_dst: usize,
    matched: Vec<(usize, Target)>,
    cost: f64,
    q: f64,
    preset: Option<Vec<Target>>,
) -> Assignment {
    let mut targets = preset.unwrap_or_else(|| vec![Target::Diagonal; n_src]);
    for (i, t) in matched {
        targets[i] = t;
    }
    let mut hit = vec![false; n_dst];
    for t in &targets {
        if let Target::Pair(j) = *t {
            hit[j] = true;
        }
    }
    let unmatched = (0..n_dst).filter(|&j| !hit[j]).collect();
    Assignment {
        targets,
        unmatched,
        cost,
        q,
    }
}

fn solve(
    d1: &PersistenceDiagram,
    d2: &PersistenceDiagram,
    q: f64,
    solver: Solver,
) -> Result<Assignment> {
    if !(q >= 1.0) {
        return Err(Error::InvalidInput(format!("exponent q = {q} must be >= 1")));
    }
    let src: Vec<usize> = (0..d1.len()).collect();
    let dst: Vec<usize> = (0..d2.len()).collect();
    let (matched, cost) = match_subsets(d1.pairs(), &src, d2.pairs(), &dst, q, solver)?;
    Ok(assemble(d1.len(), d2.len(), matched, cost, q, None))
}

/// Approximate optimal matching, within 1% of the optimal cost.
pub fn wasserstein(d1: &PersistenceDiagram, d2: &PersistenceDiagram, q: f64) -> Result<Assignment> {
    solve(d1, d2, q, Solver::Auction)
}

/// Exact optimal matching; refuses classes above [`EXACT_CLASS_LIMIT`].
pub fn exact_assignment(
    d1: &PersistenceDiagram,
    d2: &PersistenceDiagram,
    q: f64,
) -> Result<Assignment> {
    solve(d1, d2, q, Solver::Exact)
}

/// Index pairs `(i, k)` with `current[i]` and `previous[k]` sharing their key.
///
/// A vertex can carry several critical simplices of one dimension, so keys
/// may repeat within a diagram; repeated keys are matched in value order.
pub fn still_pairs(
    current: &PersistenceDiagram,
    previous: &PersistenceDiagram,
) -> Vec<(usize, usize)> {
    let group = |d: &PersistenceDiagram| {
        let mut m: HashMap<PairKey, Vec<usize>> = HashMap::with_capacity(d.len());
        for (i, p) in d.pairs().iter().enumerate() {
            m.entry(p.key()).or_default().push(i);
        }
        m
    };
    let prev = group(previous);
    let mut cur: Vec<(PairKey, Vec<usize>)> = group(current).into_iter().collect();
    cur.sort_unstable_by_key(|(k, _)| *k);
    let mut out = Vec::new();
    for (key, idx) in cur {
        if let Some(pidx) = prev.get(&key) {
            // Diagrams are sorted by value, so index order is value order.
            out.extend(idx.iter().copied().zip(pidx.iter().copied()));
        }
    }
    out.sort_unstable();
    out
}

/// Result of [`update_assignment`].
#[derive(Clone, Debug)]
pub struct AssignmentUpdate {
    pub assignment: Assignment,
    /// Still pairs as (current index, previous index).
    pub still: Vec<(usize, usize)>,
}

/// Reuses `prev` for still pairs and solves the rest from scratch.
///
/// The returned cost is evaluated on the current coordinates.
pub fn update_assignment(
    prev: &Assignment,
    current: &PersistenceDiagram,
    previous: &PersistenceDiagram,
    target: &PersistenceDiagram,
) -> Result<AssignmentUpdate> {
    if prev.targets.len() != previous.len() {
        return Err(Error::Structural(format!(
            "assignment covers {} pairs, previous diagram has {}",
            prev.targets.len(),
            previous.len()
        )));
    }
    let still = still_pairs(current, previous);
    let mut targets = vec![Target::Diagonal; current.len()];
    let mut is_still = vec![false; current.len()];
    let mut consumed = vec![false; target.len()];
    for &(i, k) in &still {
        let t = prev.targets[k];
        if let Target::Pair(j) = t {
            if j >= target.len() || consumed[j] {
                return Err(Error::Structural(format!(
                    "target pair {j} is reused or out of range"
                )));
            }
            consumed[j] = true;
        }
        targets[i] = t;
        is_still[i] = true;
    }
    let src: Vec<usize> = (0..current.len()).filter(|&i| !is_still[i]).collect();
    let dst: Vec<usize> = (0..target.len()).filter(|&j| !consumed[j]).collect();
    let (matched, _) = match_subsets(
        current.pairs(),
        &src,
        target.pairs(),
        &dst,
        prev.q,
        Solver::Auction,
    )?;
    let mut a = assemble(current.len(), target.len(), matched, 0.0, prev.q, Some(targets));
    a.cost = assignment_cost(&a, current, target);
    Ok(AssignmentUpdate { assignment: a, still })
}

/// Total cost of `a` on the present coordinates of both diagrams.
pub fn assignment_cost(a: &Assignment, source: &PersistenceDiagram, target: &PersistenceDiagram) -> f64 {
    let mut cost: f64 = source
        .pairs()
        .iter()
        .enumerate()
        .map(|(i, p)| point_cost(p.point(), a.target_point(i, source, target), a.q))
        .sum();
    cost += a
        .unmatched
        .iter()
        .map(|&j| diagonal_cost(target.pairs()[j].point(), a.q))
        .sum::<f64>();
    cost
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    pub(crate) fn finite(dim: u8, pts: &[(f64, f64)]) -> Vec<PersistencePair> {
        pts.iter()
            .enumerate()
            .map(|(i, &(b, d))| PersistencePair {
                dim,
                birth_simplex: None,
                death_simplex: None,
                birth_vertex: 2 * i as u32,
                death_vertex: 2 * i as u32 + 1,
                birth: b,
                death: d,
                finite: true,
            })
            .collect()
    }

    fn diagram(pts: &[(f64, f64)]) -> PersistenceDiagram {
        PersistenceDiagram::new(finite(0, pts))
    }

    #[test]
    fn single_point_goes_to_diagonal() {
        let a = wasserstein(&diagram(&[(0.0, 1.0)]), &diagram(&[]), 2.0).unwrap();
        assert_eq!(a.targets, vec![Target::Diagonal]);
        assert!((a.distance() - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn identical_diagrams_have_zero_distance() {
        let d = diagram(&[(0.0, 1.0), (0.2, 0.9), (0.5, 0.6)]);
        let a = wasserstein(&d, &d, 2.0).unwrap();
        assert_eq!(a.cost, 0.0);
        assert_eq!(a.targets, vec![Target::Pair(0), Target::Pair(1), Target::Pair(2)]);
    }

    #[test]
    fn two_points_against_one() {
        let d1 = diagram(&[(0.0, 2.0), (1.0, 3.0)]);
        let d2 = diagram(&[(0.0, 2.0)]);
        for a in [wasserstein(&d1, &d2, 2.0).unwrap(), exact_assignment(&d1, &d2, 2.0).unwrap()] {
            assert!((a.distance() - 2f64.sqrt()).abs() < 1e-9);
            assert_eq!(a.targets, vec![Target::Pair(0), Target::Diagonal]);
        }
    }

    #[test]
    fn infinite_class_mismatch_is_structural() {
        let mut p = finite(0, &[(0.0, 1.0)]);
        p[0].finite = false;
        let d1 = PersistenceDiagram::new(p);
        assert!(matches!(
            wasserstein(&d1, &diagram(&[]), 2.0),
            Err(Error::Structural(_))
        ));
    }

    fn random_diagram(rng: &mut impl Rng, n: usize) -> PersistenceDiagram {
        let pts: Vec<(f64, f64)> = (0..n)
            .map(|_| {
                let b: f64 = rng.gen_range(0.0..1.0);
                (b, b + rng.gen_range(0.0..0.5))
            })
            .collect();
        diagram(&pts)
    }

    #[test]
    fn auction_is_within_one_percent_and_symmetric() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let n1 = rng.gen_range(0..9);
            let n2 = rng.gen_range(0..9);
            let d1 = random_diagram(&mut rng, n1);
            let d2 = random_diagram(&mut rng, n2);
            let approx = wasserstein(&d1, &d2, 2.0).unwrap().cost;
            let exact = exact_assignment(&d1, &d2, 2.0).unwrap().cost;
            let back = exact_assignment(&d2, &d1, 2.0).unwrap().cost;
            assert!(approx >= exact - 1e-12 && approx <= 1.01 * exact + 1e-12);
            assert!((exact - back).abs() <= 1e-12 * exact.max(1.0));
        }
    }

    #[test]
    fn brute_force_agrees_with_hungarian() {
        // Enumerate every bijection of the augmented problem.
        fn permutations(n: usize) -> Vec<Vec<usize>> {
            if n == 0 {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for p in permutations(n - 1) {
                for k in 0..=p.len() {
                    let mut q = p.clone();
                    q.insert(k, n - 1);
                    out.push(q);
                }
            }
            out
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..40 {
            let (n, m) = (rng.gen_range(1..4), rng.gen_range(1..4));
            let d1 = random_diagram(&mut rng, n);
            let d2 = random_diagram(&mut rng, m);
            let prob = Augmented::new(
                d1.pairs().iter().map(|p| p.point()).collect(),
                d2.pairs().iter().map(|p| p.point()).collect(),
                2.0,
            );
            let best = permutations(n + m)
                .into_iter()
                .filter_map(|perm| {
                    perm.iter()
                        .enumerate()
                        .map(|(r, &c)| prob.edge(r, c))
                        .sum::<Option<f64>>()
                })
                .fold(f64::INFINITY, f64::min);
            let exact = exact_assignment(&d1, &d2, 2.0).unwrap().cost;
            assert!((best - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn still_pairs_follow_keys() {
        let d = diagram(&[(0.0, 1.0), (0.2, 0.9), (0.5, 0.6)]);
        assert_eq!(still_pairs(&d, &d), vec![(0, 0), (1, 1), (2, 2)]);
        let mut moved = d.clone().into_pairs();
        moved[1].birth_vertex = 99;
        let moved = PersistenceDiagram::new(moved);
        assert_eq!(still_pairs(&moved, &d).len(), 2);
    }

    #[test]
    fn repeated_keys_match_in_value_order() {
        let mut pairs = finite(1, &[(0.0, 1.0), (0.0, 2.0), (0.5, 3.0)]);
        pairs[1].birth_vertex = 0;
        pairs[1].death_vertex = 1;
        let d = PersistenceDiagram::new(pairs);
        assert_eq!(d.pairs()[0].key(), d.pairs()[1].key());
        assert_eq!(still_pairs(&d, &d), vec![(0, 0), (1, 1), (2, 2)]);
        let fewer = PersistenceDiagram::new(d.pairs()[1..].to_vec());
        assert_eq!(still_pairs(&fewer, &d), vec![(0, 0), (1, 2)]);
    }

    #[test]
    fn update_with_no_still_pairs_matches_full_solve() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let d1 = random_diagram(&mut rng, 6);
        let dt = random_diagram(&mut rng, 3);
        let a = wasserstein(&d1, &dt, 2.0).unwrap();
        let mut shifted = d1.clone().into_pairs();
        for p in &mut shifted {
            p.birth_vertex += 100;
        }
        let shifted = PersistenceDiagram::new(shifted);
        let up = update_assignment(&a, &shifted, &d1, &dt).unwrap();
        assert!(up.still.is_empty());
        let full = wasserstein(&shifted, &dt, 2.0).unwrap();
        assert_eq!(up.assignment.targets, full.targets);
        assert!((up.assignment.cost - full.cost).abs() < 1e-12);
    }

    #[test]
    fn update_with_all_still_keeps_targets() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        let d1 = random_diagram(&mut rng, 5);
        let dt = random_diagram(&mut rng, 2);
        let a = wasserstein(&d1, &dt, 2.0).unwrap();
        let up = update_assignment(&a, &d1, &d1, &dt).unwrap();
        assert_eq!(up.assignment.targets, a.targets);
        assert!((up.assignment.cost - a.cost).abs() < 1e-12);
    }

    #[test]
    fn empty_reduced_target_sends_points_to_diagonal() {
        let d1 = diagram(&[(0.0, 1.0), (0.3, 0.4)]);
        let dt = diagram(&[(0.0, 1.0)]);
        let a = wasserstein(&d1, &dt, 2.0).unwrap();
        let mut cur = d1.clone().into_pairs();
        cur[1].birth_vertex = 77;
        let cur = PersistenceDiagram::new(cur);
        let up = update_assignment(&a, &cur, &d1, &dt).unwrap();
        assert_eq!(up.assignment.targets, vec![Target::Pair(0), Target::Diagonal]);
    }

    #[test]
    fn stale_assignment_is_structural() {
        let d1 = diagram(&[(0.0, 1.0)]);
        let a = wasserstein(&d1, &d1, 2.0).unwrap();
        let d2 = diagram(&[(0.0, 1.0), (0.1, 0.2)]);
        assert!(matches!(
            update_assignment(&a, &d2, &d2, &d1),
            Err(Error::Structural(_))
        ));
    }
}
