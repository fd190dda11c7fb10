#![allow(dead_code)]

use std::collections::BTreeSet;

use delay_attractor::boxcover::{BoxCollection, BoxRegion};
use delay_attractor::dde::HistorySegment;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A box as integer cell indices on the uniform grid of its depth.
pub type Cell = Vec<u64>;

/// Splits of each coordinate after `depth` cyclic bisections in `k` dimensions.
pub fn splits(k: usize, depth: u32) -> Vec<u32> {
    (0..k)
        .map(|i| {
            let d = depth as usize;
            ((d + k - 1 - i) / k) as u32
        })
        .collect()
}

/// Cell widths at `depth`.
pub fn widths(root: &BoxRegion, depth: u32) -> Vec<f64> {
    let s = splits(root.dim(), depth);
    root.radii()
        .iter()
        .zip(s)
        .map(|(r, n)| 2.0 * r / f64::powi(2.0, n as i32))
        .collect()
}

/// Cell of `y` with half-open cells and the root's upper faces closed.
pub fn grid_cell(root: &BoxRegion, depth: u32, y: &[f64]) -> Option<Cell> {
    let lo = root.lower();
    let hi = root.upper();
    let w = widths(root, depth);
    let s = splits(root.dim(), depth);
    let mut cell = Vec::with_capacity(y.len());
    for i in 0..y.len() {
        if !(y[i] >= lo[i] && y[i] <= hi[i]) {
            return None;
        }
        let n = 1u64 << s[i];
        let j = ((y[i] - lo[i]) / w[i]).floor() as u64;
        cell.push(j.min(n - 1));
    }
    Some(cell)
}

/// The collection's boxes as grid cells, recovered from box centers.
pub fn cells_of(c: &BoxCollection) -> BTreeSet<Cell> {
    let root = c.root();
    let lo = root.lower();
    let w = widths(root, c.depth());
    c.regions()
        .map(|(_, r)| {
            r.center()
                .iter()
                .enumerate()
                .map(|(i, x)| ((x - lo[i]) / w[i] - 0.5).round() as u64)
                .collect()
        })
        .collect()
}

/// Brute-force subdivision: every cell is tested with a `per_axis^k` grid
/// of cell-centered points. Returns the retained cells after each step.
pub fn brute_force(
    f: &dyn Fn(&[f64]) -> Vec<f64>,
    root: &BoxRegion,
    depth: u32,
    per_axis: usize,
) -> Vec<BTreeSet<Cell>> {
    let k = root.dim();
    let lo = root.lower();
    let mut active: BTreeSet<Cell> = BTreeSet::from([vec![0; k]]);
    let mut history = Vec::new();
    for step in 0..depth {
        let coord = step as usize % k;
        let refined: BTreeSet<Cell> = active
            .iter()
            .flat_map(|c| {
                (0..2).map(move |b| {
                    let mut child = c.clone();
                    child[coord] = 2 * c[coord] + b;
                    child
                })
            })
            .collect();
        let d = step + 1;
        let w = widths(root, d);
        let mut hits = BTreeSet::new();
        let total = per_axis.pow(k as u32);
        for cell in &refined {
            let mut x = vec![0.0; k];
            for idx in 0..total {
                let mut r = idx;
                for i in 0..k {
                    let q = r % per_axis;
                    r /= per_axis;
                    x[i] = lo[i] + (cell[i] as f64 + (q as f64 + 0.5) / per_axis as f64) * w[i];
                }
                if let Some(target) = grid_cell(root, d, &f(&x)) {
                    if refined.contains(&target) {
                        hits.insert(target);
                    }
                }
            }
        }
        active = hits;
        history.push(active.clone());
    }
    history
}

fn adjacent(a: &Cell, b: &Cell) -> bool {
    a.iter().zip(b).all(|(x, y)| x.abs_diff(*y) <= 1)
}

/// Every cell of one set lies in or next to a cell of the other.
pub fn within_one_layer(a: &BTreeSet<Cell>, b: &BTreeSet<Cell>) -> bool {
    a.difference(b).all(|c| b.iter().any(|d| adjacent(c, d)))
        && b.difference(a).all(|c| a.iter().any(|d| adjacent(c, d)))
}

/// A small random perturbation of the zero history for the Wright equation.
pub fn wright_perturbed_history(seed: u64) -> HistorySegment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values: Vec<f64> = (0..=64).map(|_| rng.gen_range(-0.05..0.05)).collect();
    HistorySegment::new(1.0, 1, values, None).unwrap()
}
