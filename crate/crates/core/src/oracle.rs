//! Reference diagram by full boundary-matrix reduction over Z/2.
//!
//! Quadratic in the number of simplices; only meant for small grids in tests
//! and for cross-checking.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::grid::{ScalarField, SimplexKey, SimplexRef, VertexOrder};
use crate::persistence::{make_pair, PersistenceDiagram};

pub const ORACLE_SIMPLEX_LIMIT: usize = 50_000;

pub fn brute_force_diagram(field: &ScalarField) -> Result<PersistenceDiagram> {
    let grid = field.grid();
    let total: usize = (0..=grid.ndim()).map(|k| grid.simplex_count(k)).sum();
    if total > ORACLE_SIMPLEX_LIMIT {
        return Err(Error::GuardExceeded {
            what: "oracle simplices",
            size: total,
            limit: ORACLE_SIMPLEX_LIMIT,
        });
    }
    let order = VertexOrder::new(field)?;
    let mut cells: Vec<(SimplexKey, SimplexRef)> = (0..=grid.ndim())
        .flat_map(|k| grid.simplices(k).collect::<Vec<_>>())
        .map(|s| (grid.key(s, &order), s))
        .collect();
    cells.sort_unstable();
    let index: HashMap<SimplexRef, u32> =
        cells.iter().enumerate().map(|(i, &(_, s))| (s, i as u32)).collect();

    let mut low_of: HashMap<u32, usize> = HashMap::new();
    let mut columns: Vec<Vec<u32>> = Vec::with_capacity(cells.len());
    let mut killed = vec![false; cells.len()];
    let mut pairs = Vec::new();
    for (j, &(_, s)) in cells.iter().enumerate() {
        let mut col: Vec<u32> = grid.facets(s).iter().map(|f| index[f]).collect();
        col.sort_unstable();
        while let Some(&low) = col.last() {
            match low_of.get(&low) {
                Some(&other) => col = symmetric_difference(&col, &columns[other]),
                None => break,
            }
        }
        if let Some(&low) = col.last() {
            low_of.insert(low, j);
            killed[low as usize] = true;
            killed[j] = true;
            let birth = cells[low as usize].1;
            if let Some(p) = make_pair(field, &order, birth.dim, birth, Some(s)) {
                pairs.push(p);
            }
        }
        columns.push(col);
    }
    for (j, &(_, s)) in cells.iter().enumerate() {
        if !killed[j] {
            pairs.extend(make_pair(field, &order, s.dim, s, None));
        }
    }
    Ok(PersistenceDiagram::new(pairs))
}

fn symmetric_difference(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out: Vec<u32> = a.iter().chain(b).copied().collect();
    out.sort_unstable();
    let mut res = Vec::with_capacity(out.len());
    let mut i = 0;
    while i < out.len() {
        if i + 1 < out.len() && out[i] == out[i + 1] {
            i += 2;
        } else {
            res.push(out[i]);
            i += 1;
        }
    }
    res
}
