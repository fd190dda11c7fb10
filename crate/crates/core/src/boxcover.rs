//! Box collections obtained by cyclic bisection of a root box.
//!
//! A leaf at depth `l` is identified by its bit path: bit `i` (most
//! significant first) selects the lower (0) or upper (1) half when the box is
//! split along coordinate `i mod k` at step `i`. Only the active leaves are
//! stored, as sorted path keys, so geometry is always recomputed from the
//! path and membership is decided by arithmetic descent.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Deepest supported subdivision level (paths are stored in a `u64`).
pub const MAX_DEPTH: u32 = 64;

/// Axis-aligned box `prod [center_i - radius_i, center_i + radius_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxRegion {
    center: Vec<f64>,
    radii: Vec<f64>,
}

impl BoxRegion {
    pub fn new(center: Vec<f64>, radii: Vec<f64>) -> Result<Self> {
        if center.is_empty() || center.len() != radii.len() {
            return Err(Error::Config(format!(
                "box needs matching non-empty center and radii, got {} and {}",
                center.len(),
                radii.len()
            )));
        }
        if radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config("box radii must be positive and finite".into()));
        }
        Ok(BoxRegion { center, radii })
    }

    pub fn from_bounds(lower: &[f64], upper: &[f64]) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Config("box bounds differ in dimension".into()));
        }
        if lower.iter().zip(upper).any(|(l, u)| !(u > l)) {
            return Err(Error::Config("box upper bounds must exceed lower bounds".into()));
        }
        BoxRegion::new(
            lower.iter().zip(upper).map(|(l, u)| 0.5 * (l + u)).collect(),
            lower.iter().zip(upper).map(|(l, u)| 0.5 * (u - l)).collect(),
        )
    }

    /// The cube `[-r, r]^k`.
    pub fn cube(k: usize, center: f64, radius: f64) -> Result<Self> {
        BoxRegion::new(vec![center; k], vec![radius; k])
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn lower(&self) -> Vec<f64> {
        self.center.iter().zip(&self.radii).map(|(c, r)| c - r).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.center.iter().zip(&self.radii).map(|(c, r)| c + r).collect()
    }

    /// Closed-box membership.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.center.iter().zip(&self.radii))
                .all(|(x, (c, r))| *x >= c - r && *x <= c + r)
    }

    /// Open-box membership.
    pub fn contains_interior(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.center.iter().zip(&self.radii))
                .all(|(x, (c, r))| *x > c - r && *x < c + r)
    }

    /// Whether the closed boxes share at least one point.
    pub fn intersects(&self, other: &BoxRegion) -> bool {
        self.dim() == other.dim()
            && (0..self.dim()).all(|i| {
                (self.center[i] - other.center[i]).abs() <= self.radii[i] + other.radii[i]
            })
    }

    /// Max-norm diameter (largest edge length).
    pub fn diameter(&self) -> f64 {
        2.0 * self.radii.iter().cloned().fold(0.0, f64::max)
    }

    /// Splits along `coord` into (lower, upper) halves.
    pub fn bisect(&self, coord: usize) -> (BoxRegion, BoxRegion) {
        let r = 0.5 * self.radii[coord];
        let mut lo = self.clone();
        let mut hi = self.clone();
        lo.radii[coord] = r;
        hi.radii[coord] = r;
        lo.center[coord] -= r;
        hi.center[coord] += r;
        (lo, hi)
    }
}

/// The active leaves of one subdivision level.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxCollection {
    root: BoxRegion,
    depth: u32,
    active: Vec<u64>,
    excluded: Vec<BoxRegion>,
}

impl BoxCollection {
    /// Depth-0 collection holding the root box.
    pub fn new(root: BoxRegion) -> Self {
        BoxCollection {
            root,
            depth: 0,
            active: vec![0],
            excluded: Vec::new(),
        }
    }

    /// Removes the open boxes `excluded` from the domain seen by [`locate`](Self::locate).
    pub fn with_excluded(mut self, excluded: Vec<BoxRegion>) -> Result<Self> {
        if excluded.iter().any(|b| b.dim() != self.dim()) {
            return Err(Error::Config("excluded region dimension differs from the root box".into()));
        }
        self.excluded = excluded;
        Ok(self)
    }

    /// Builds a collection from explicit leaves; keys are deduplicated.
    pub fn from_leaves(root: BoxRegion, depth: u32, mut leaves: Vec<u64>) -> Result<Self> {
        if depth > MAX_DEPTH {
            return Err(Error::Config(format!("depth {depth} exceeds {MAX_DEPTH}")));
        }
        if depth < 64 && leaves.iter().any(|&l| l >> depth != 0) {
            return Err(Error::Config(format!("leaf key too long for depth {depth}")));
        }
        leaves.sort_unstable();
        leaves.dedup();
        Ok(BoxCollection {
            root,
            depth,
            active: leaves,
            excluded: Vec::new(),
        })
    }

    pub fn root(&self) -> &BoxRegion {
        &self.root
    }

    pub fn excluded(&self) -> &[BoxRegion] {
        &self.excluded
    }

    pub fn dim(&self) -> usize {
        self.root.dim()
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    /// Active leaf keys in ascending order.
    pub fn leaves(&self) -> &[u64] {
        &self.active
    }

    pub fn contains_leaf(&self, key: u64) -> bool {
        self.active.binary_search(&key).is_ok()
    }

    /// Coordinate split at subdivision step `step` (zero-based).
    pub fn split_coordinate(&self, step: u32) -> usize {
        step as usize % self.dim()
    }

    /// Half-widths shared by every leaf at the current depth.
    pub fn leaf_radii(&self) -> Vec<f64> {
        let mut radii = self.root.radii.clone();
        for step in 0..self.depth {
            radii[self.split_coordinate(step)] *= 0.5;
        }
        radii
    }

    /// Max-norm diameter of the leaves at the current depth.
    pub fn leaf_diameter(&self) -> f64 {
        2.0 * self.leaf_radii().into_iter().fold(0.0, f64::max)
    }

    /// Geometry of the leaf with path `key`.
    pub fn leaf_region(&self, key: u64) -> BoxRegion {
        let mut center = self.root.center.clone();
        let mut radii = self.root.radii.clone();
        for step in 0..self.depth {
            let c = self.split_coordinate(step);
            radii[c] *= 0.5;
            if (key >> (self.depth - 1 - step)) & 1 == 1 {
                center[c] += radii[c];
            } else {
                center[c] -= radii[c];
            }
        }
        BoxRegion { center, radii }
    }

    pub fn regions(&self) -> impl Iterator<Item = (u64, BoxRegion)> + '_ {
        self.active.iter().map(move |&k| (k, self.leaf_region(k)))
    }

    /// Whether `x` lies in one of the excluded regions.
    pub fn is_excluded(&self, x: &[f64]) -> bool {
        self.excluded.iter().any(|u| u.contains_interior(x))
    }

    /// Path of the depth-`depth` cell containing `x`, ignoring activity.
    ///
    /// Cells are half-open `[lo, hi)` except on the upper face of the root.
    pub fn cell_of(&self, x: &[f64]) -> Option<u64> {
        if !self.root.contains(x) {
            return None;
        }
        let mut center = self.root.center.clone();
        let mut radii = self.root.radii.clone();
        let mut key = 0u64;
        for step in 0..self.depth {
            let c = self.split_coordinate(step);
            radii[c] *= 0.5;
            let upper = x[c] >= center[c];
            if upper {
                center[c] += radii[c];
            } else {
                center[c] -= radii[c];
            }
            key = (key << 1) | upper as u64;
        }
        Some(key)
    }

    /// Active leaf containing `x`, if any; excluded points report `None`.
    pub fn locate(&self, x: &[f64]) -> Option<u64> {
        if self.is_excluded(x) {
            return None;
        }
        self.cell_of(x).filter(|&k| self.contains_leaf(k))
    }

    /// Replaces every leaf by its two children along coordinate `depth mod k`.
    pub fn subdivide(&self) -> BoxCollection {
        assert!(self.depth < MAX_DEPTH, "maximum subdivision depth reached");
        let active = self
            .active
            .iter()
            .flat_map(|&k| [k << 1, (k << 1) | 1])
            .collect();
        BoxCollection {
            root: self.root.clone(),
            depth: self.depth + 1,
            active,
            excluded: self.excluded.clone(),
        }
    }

    /// Keeps only the leaves in `hits`. Keys that are not active are ignored.
    pub fn retain(&self, hits: &[u64]) -> BoxCollection {
        let mut hits = hits.to_vec();
        hits.sort_unstable();
        hits.dedup();
        hits.retain(|k| self.contains_leaf(*k));
        BoxCollection {
            root: self.root.clone(),
            depth: self.depth,
            active: hits,
            excluded: self.excluded.clone(),
        }
    }

    /// Whether every leaf has its ancestor active in `coarser`.
    pub fn is_refinement_of(&self, coarser: &BoxCollection) -> bool {
        if coarser.depth > self.depth || coarser.root != self.root {
            return false;
        }
        let shift = self.depth - coarser.depth;
        self.active.iter().all(|&k| {
            let ancestor = if shift >= 64 { 0 } else { k >> shift };
            coarser.contains_leaf(ancestor)
        })
    }

    /// Bit path of `key` as a 0/1 string (`-` for the root).
    pub fn path_string(&self, key: u64) -> String {
        if self.depth == 0 {
            return "-".to_string();
        }
        (0..self.depth)
            .map(|step| {
                if (key >> (self.depth - 1 - step)) & 1 == 1 {
                    '1'
                } else {
                    '0'
                }
            })
            .collect()
    }

    /// The covering file: a `k=.. depth=.. count=..` header, then one line per
    /// active leaf with its path, center and radii (17 significant digits).
    pub fn to_text(&self) -> String {
        let k = self.dim();
        let mut out = format!("k={k} depth={} count={}\n", self.depth, self.len());
        for (key, region) in self.regions() {
            out.push_str(&self.path_string(key));
            for v in region.center.iter().chain(&region.radii) {
                write!(out, " {v:.16e}").expect("write to string");
            }
            out.push('\n');
        }
        out
    }

    /// Parses a covering file, recovering the root box from the first leaf.
    pub fn from_text(text: &str) -> Result<Self> {
        let file = CoveringFile::parse(text)?;
        file.into_collection()
    }
}

/// Raw contents of a covering file.
#[derive(Debug, Clone, PartialEq)]
pub struct CoveringFile {
    pub k: usize,
    pub depth: u32,
    pub leaves: Vec<(u64, BoxRegion)>,
}

impl CoveringFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::format("covering", "missing header"))?;
        let mut k = None;
        let mut depth = None;
        let mut count = None;
        for field in header.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::format("covering", format!("bad header field {field:?}")))?;
            let value: u64 = value
                .parse()
                .map_err(|_| Error::format("covering", format!("bad header value {field:?}")))?;
            match key {
                "k" => k = Some(value as usize),
                "depth" => depth = Some(value as u32),
                "count" => count = Some(value as usize),
                _ => return Err(Error::format("covering", format!("unknown header key {key:?}"))),
            }
        }
        let (Some(k), Some(depth), Some(count)) = (k, depth, count) else {
            return Err(Error::format("covering", "header needs k, depth and count"));
        };
        if k == 0 || depth > MAX_DEPTH {
            return Err(Error::format("covering", "invalid k or depth"));
        }
        let mut leaves = Vec::with_capacity(count);
        for (i, line) in lines.enumerate() {
            let mut fields = line.split_whitespace();
            let path = fields.next().unwrap_or_default();
            let key = parse_path(path, depth)
                .ok_or_else(|| Error::format("covering", format!("leaf {}: bad path {path:?}", i + 1)))?;
            let nums = fields
                .map(str::parse::<f64>)
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| Error::format("covering", format!("leaf {}: {e}", i + 1)))?;
            if nums.len() != 2 * k {
                return Err(Error::format(
                    "covering",
                    format!("leaf {}: expected {} numbers, found {}", i + 1, 2 * k, nums.len()),
                ));
            }
            let region = BoxRegion::new(nums[..k].to_vec(), nums[k..].to_vec())
                .map_err(|e| Error::format("covering", format!("leaf {}: {e}", i + 1)))?;
            leaves.push((key, region));
        }
        if leaves.len() != count {
            return Err(Error::format(
                "covering",
                format!("header announces {count} leaves, found {}", leaves.len()),
            ));
        }
        Ok(CoveringFile { k, depth, leaves })
    }

    /// Rebuilds the collection. The root box is recovered by undoing the
    /// bisections of the first leaf; every leaf is checked against it.
    pub fn into_collection(self) -> Result<BoxCollection> {
        let Some((key0, first)) = self.leaves.first() else {
            return Err(Error::format("covering", "cannot recover the root box of an empty covering"));
        };
        let k = self.k;
        let mut center = first.center.clone();
        let mut radii = first.radii.clone();
        for step in (0..self.depth).rev() {
            let c = step as usize % k;
            if (key0 >> (self.depth - 1 - step)) & 1 == 1 {
                center[c] -= radii[c];
            } else {
                center[c] += radii[c];
            }
            radii[c] *= 2.0;
        }
        let root = BoxRegion::new(center, radii)?;
        let collection = BoxCollection::from_leaves(
            root,
            self.depth,
            self.leaves.iter().map(|(k, _)| *k).collect(),
        )?;
        for (key, region) in &self.leaves {
            let expect = collection.leaf_region(*key);
            let close = expect
                .center
                .iter()
                .chain(&expect.radii)
                .zip(region.center.iter().chain(&region.radii))
                .all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0));
            if !close {
                return Err(Error::format(
                    "covering",
                    format!("leaf {} is inconsistent with its path", collection.path_string(*key)),
                ));
            }
        }
        Ok(collection)
    }
}

fn parse_path(path: &str, depth: u32) -> Option<u64> {
    if depth == 0 {
        return (path == "-").then_some(0);
    }
    if path.len() != depth as usize {
        return None;
    }
    path.bytes().try_fold(0u64, |acc, b| match b {
        b'0' => Some(acc << 1),
        b'1' => Some((acc << 1) | 1),
        _ => None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube(k: usize) -> BoxCollection {
        BoxCollection::new(BoxRegion::cube(k, 0.0, 2.0).unwrap())
    }

    #[test]
    fn first_bisection_splits_coordinate_zero() {
        let c = cube(5).subdivide();
        assert_eq!(c.len(), 2);
        let lo = c.leaf_region(0);
        let hi = c.leaf_region(1);
        assert_eq!(lo.radii(), &[1.0, 2.0, 2.0, 2.0, 2.0]);
        assert_eq!(lo.center(), &[-1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(hi.center(), &[1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn full_cycle_halves_every_radius() {
        let mut c = cube(3);
        for _ in 0..3 {
            c = c.subdivide();
        }
        assert_eq!(c.len(), 8);
        for (_, r) in c.regions() {
            assert_eq!(r.radii(), &[1.0, 1.0, 1.0]);
        }
        assert_eq!(c.leaf_diameter(), 2.0);
    }

    #[test]
    fn children_tile_the_parent() {
        let root = BoxRegion::from_bounds(&[-1.0, 0.0], &[5.0, 3.0]).unwrap();
        let c = BoxCollection::new(root.clone()).subdivide().subdivide();
        let vol: f64 = c
            .regions()
            .map(|(_, r)| r.radii().iter().map(|x| 2.0 * x).product::<f64>())
            .sum();
        assert_eq!(vol, 18.0);
        for (_, r) in c.regions() {
            for (lo, rlo) in r.lower().iter().zip(root.lower()) {
                assert!(*lo >= rlo);
            }
        }
    }

    #[test]
    fn locate_follows_half_open_convention() {
        let c = cube(2).subdivide().subdivide();
        for (key, region) in c.regions() {
            assert_eq!(c.locate(region.center()), Some(key));
        }
        assert_eq!(c.locate(&[3.0, 0.0]), None);
        // Shared face x0 = 0 belongs to the upper box.
        let k = c.locate(&[0.0, -1.0]).unwrap();
        assert_eq!(c.leaf_region(k).center(), &[1.0, -1.0]);
        // Upper face of the root is closed.
        assert!(c.locate(&[2.0, 2.0]).is_some());
        assert!(c.locate(&[-2.0, -2.0]).is_some());
    }

    #[test]
    fn locate_skips_inactive_and_excluded() {
        let c = cube(2).subdivide();
        let only_upper = c.retain(&[1]);
        assert_eq!(only_upper.locate(&[-1.0, 0.0]), None);
        assert_eq!(only_upper.locate(&[1.0, 0.0]), Some(1));
        let holed = only_upper
            .with_excluded(vec![BoxRegion::new(vec![1.0, 0.0], vec![0.5, 0.5]).unwrap()])
            .unwrap();
        assert_eq!(holed.locate(&[1.0, 0.0]), None);
        assert_eq!(holed.locate(&[1.5, 0.0]), Some(1));
    }

    #[test]
    fn retain_cases() {
        let c = cube(2).subdivide().subdivide();
        assert_eq!(c.retain(c.leaves()), c);
        assert!(c.retain(&[]).is_empty());
        let one = c.retain(&[2]);
        assert_eq!(one.leaves(), &[2]);
        assert!(one.is_refinement_of(&c));
    }

    #[test]
    fn path_geometry_matches_explicit_bisection() {
        let root = BoxRegion::from_bounds(&[-1.0, -4.0, -4.0], &[5.0, 2.0, 4.0]).unwrap();
        let mut regions = vec![(0u64, root.clone())];
        let mut c = BoxCollection::new(root);
        for step in 0..7u32 {
            regions = regions
                .into_iter()
                .flat_map(|(k, r)| {
                    let (lo, hi) = r.bisect(step as usize % 3);
                    [(k << 1, lo), ((k << 1) | 1, hi)]
                })
                .collect();
            c = c.subdivide();
        }
        for (k, r) in regions {
            let g = c.leaf_region(k);
            for (a, b) in g.center().iter().chain(g.radii()).zip(r.center().iter().chain(r.radii())) {
                assert!((a - b).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn covering_text_round_trip() {
        let root = BoxRegion::from_bounds(&[-1.0, -4.0, -4.0], &[5.0, 2.0, 4.0]).unwrap();
        let mut c = BoxCollection::new(root);
        for _ in 0..6 {
            c = c.subdivide();
        }
        let c = c.retain(&[0, 5, 17, 40, 63]);
        let text = c.to_text();
        assert!(text.starts_with("k=3 depth=6 count=5\n"));
        let back = BoxCollection::from_text(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn covering_parse_errors() {
        assert!(CoveringFile::parse("").is_err());
        assert!(CoveringFile::parse("k=1 depth=1 count=2\n0 0.5 0.5\n").is_err());
        assert!(CoveringFile::parse("k=1 depth=1 count=1\n01 0.5 0.5\n").is_err());
        assert!(CoveringFile::parse("k=1 depth=1 count=1\n1 0.5\n").is_err());
        let empty = CoveringFile::parse("k=2 depth=3 count=0\n").unwrap();
        assert!(empty.leaves.is_empty());
        assert!(empty.into_collection().is_err());
    }
}
