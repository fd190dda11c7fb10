//! Subdivision and selection: the box-covering approximation of the relative
//! global attractor of a map on `R^k`.
//!
//! Each step bisects every active box, evaluates the map on test points of
//! every box and keeps exactly the boxes hit by at least one image. Test
//! points are drawn from a per-box RNG seeded by (seed, depth, path), and the
//! merge of per-box results runs in box order, so results do not depend on
//! the thread count.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::boxcover::{BoxCollection, BoxRegion};
use crate::dde::DdeSystem;
use crate::embedding::{BootstrapPayload, EmbeddedMap, EmbeddingConfig};
use crate::error::{Error, Result};

/// A continuous map on `R^k` evaluated by the selection step.
pub trait SelectionMap: Sync {
    /// Extra data stored with an image and handed back when the image is
    /// reused as a test point.
    type Payload: Clone + Send + Sync;

    fn dim(&self) -> usize;

    /// Image of `x`. `Error::NonFiniteState` marks a discarded point; any
    /// other error aborts the run.
    fn apply(
        &self,
        x: &[f64],
        payload: Option<&Self::Payload>,
    ) -> Result<(Vec<f64>, Option<Self::Payload>)>;
}

impl SelectionMap for EmbeddedMap {
    type Payload = BootstrapPayload;

    fn dim(&self) -> usize {
        EmbeddedMap::dim(self)
    }

    fn apply(
        &self,
        x: &[f64],
        payload: Option<&BootstrapPayload>,
    ) -> Result<(Vec<f64>, Option<BootstrapPayload>)> {
        let (z, p) = EmbeddedMap::apply(self, x, payload)?;
        Ok((z, Some(p)))
    }
}

/// An explicit finite-dimensional map, for checking the selection logic
/// independently of any DDE.
pub struct SyntheticMap<F> {
    dim: usize,
    f: F,
}

impl<F> SyntheticMap<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        SyntheticMap { dim, f }
    }
}

impl<F> SelectionMap for SyntheticMap<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    type Payload = ();

    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[f64], _: Option<&()>) -> Result<(Vec<f64>, Option<()>)> {
        let y = (self.f)(x);
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { t: 0.0 });
        }
        Ok((y, None))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Number of subdivision steps `L`.
    pub steps: u32,
    pub points_per_box: usize,
    pub seed: u64,
    /// Payloads kept per box; the oldest are evicted first.
    pub max_payloads_per_box: usize,
    /// Worker threads; `None` uses the available parallelism.
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            steps: 20,
            points_per_box: 100,
            seed: 0,
            max_payloads_per_box: 32,
            threads: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::Config("steps must be at least 1".into()));
        }
        if self.points_per_box == 0 {
            return Err(Error::Config("points_per_box must be at least 1".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        if self.steps > crate::boxcover::MAX_DEPTH {
            return Err(Error::Config(format!(
                "steps must not exceed {}",
                crate::boxcover::MAX_DEPTH
            )));
        }
        Ok(())
    }
}

/// Per-step bookkeeping of the selection.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepRecord {
    pub depth: u32,
    pub boxes_before: usize,
    pub boxes_after: usize,
    /// Test points whose image was computed.
    pub evaluated: usize,
    /// Test points built from stored payloads.
    pub payload_points: usize,
    /// Images landing in a box of the subdivided collection.
    pub hits: usize,
    /// Images inside the root box but in a cell discarded earlier.
    pub missed: usize,
    pub out_of_domain: usize,
    /// Images inside an excluded region.
    pub excluded: usize,
    pub non_finite: usize,
    /// Random test points that fell in an excluded region and were skipped.
    pub skipped: usize,
    pub seconds: f64,
}

impl StepRecord {
    fn absorb(&mut self, other: &StepRecord) {
        self.evaluated += other.evaluated;
        self.payload_points += other.payload_points;
        self.hits += other.hits;
        self.missed += other.missed;
        self.out_of_domain += other.out_of_domain;
        self.excluded += other.excluded;
        self.non_finite += other.non_finite;
        self.skipped += other.skipped;
    }

    /// `evaluated = hits + missed + out_of_domain + excluded + non_finite`.
    pub fn is_balanced(&self) -> bool {
        self.evaluated == self.hits + self.missed + self.out_of_domain + self.excluded + self.non_finite
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SelectionReport {
    pub steps: Vec<StepRecord>,
}

const REPORT_COLUMNS: [&str; 10] = [
    "depth",
    "before",
    "after",
    "evaluated",
    "payload",
    "hits",
    "missed",
    "outside",
    "excluded",
    "nonfinite",
];

impl SelectionReport {
    fn columns(r: &StepRecord) -> [usize; 10] {
        [
            r.depth as usize,
            r.boxes_before,
            r.boxes_after,
            r.evaluated,
            r.payload_points,
            r.hits,
            r.missed,
            r.out_of_domain,
            r.excluded,
            r.non_finite,
        ]
    }

    /// Human-readable table; timings are left out so the text is reproducible.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for name in REPORT_COLUMNS {
            write!(out, "{name:>10}").unwrap();
        }
        out.push('\n');
        for r in &self.steps {
            for v in Self::columns(r) {
                write!(out, "{v:>10}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// `key = value` lines, one group per step.
    pub fn to_key_values(&self) -> String {
        let mut out = format!("steps = {}\n", self.steps.len());
        for r in &self.steps {
            for (name, v) in REPORT_COLUMNS.iter().zip(Self::columns(r)).skip(1) {
                writeln!(out, "step.{}.{name} = {v}", r.depth).unwrap();
            }
            writeln!(out, "step.{}.skipped = {}", r.depth, r.skipped).unwrap();
        }
        out
    }

    pub fn timings(&self) -> String {
        self.steps
            .iter()
            .map(|r| format!("step.{}.seconds = {:.6}\n", r.depth, r.seconds))
            .collect()
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed of the test-point generator of one box.
pub fn box_seed(seed: u64, depth: u32, key: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(depth as u64)) ^ key)
}

/// Uniform sample of the half-open box `[lo, hi)`.
fn sample_box(rng: &mut ChaCha8Rng, region: &BoxRegion) -> Vec<f64> {
    region
        .center()
        .iter()
        .zip(region.radii())
        .map(|(c, r)| c - r + 2.0 * r * rng.gen::<f64>())
        .collect()
}

type Stored<P> = VecDeque<(Vec<f64>, P)>;

struct BoxOutcome<P> {
    hits: Vec<(u64, Vec<f64>, Option<P>)>,
    record: StepRecord,
}

/// The subdivision/selection iteration for one map.
pub struct Subdivision<'m, M: SelectionMap> {
    map: &'m M,
    config: RunConfig,
    collection: BoxCollection,
    payloads: BTreeMap<u64, Stored<M::Payload>>,
    report: SelectionReport,
    pool: rayon::ThreadPool,
}

impl<'m, M: SelectionMap> Subdivision<'m, M> {
    pub fn new(
        map: &'m M,
        root: BoxRegion,
        excluded: Vec<BoxRegion>,
        config: RunConfig,
    ) -> Result<Self> {
        config.validate()?;
        if root.dim() != map.dim() {
            return Err(Error::Config(format!(
                "domain has dimension {}, map acts on R^{}",
                root.dim(),
                map.dim()
            )));
        }
        let collection = BoxCollection::new(root).with_excluded(excluded)?;
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(t) = config.threads {
            builder = builder.num_threads(t);
        }
        let pool = builder
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
        Ok(Subdivision {
            map,
            config,
            collection,
            payloads: BTreeMap::new(),
            report: SelectionReport::default(),
            pool,
        })
    }

    pub fn collection(&self) -> &BoxCollection {
        &self.collection
    }

    pub fn report(&self) -> &SelectionReport {
        &self.report
    }

    /// Payloads currently attached to the leaf `key`.
    pub fn payload_count(&self, key: u64) -> usize {
        self.payloads.get(&key).map_or(0, VecDeque::len)
    }

    /// Seeds a box with known points (for example samples of an invariant
    /// orbit); they are used before random test points.
    pub fn add_points(&mut self, points: impl IntoIterator<Item = (Vec<f64>, M::Payload)>) {
        for (x, p) in points {
            if let Some(key) = self.collection.locate(&x) {
                let slot = self.payloads.entry(key).or_default();
                slot.push_back((x, p));
                while slot.len() > self.config.max_payloads_per_box {
                    slot.pop_front();
                }
            }
        }
    }

    /// Runs one subdivision and one selection step.
    pub fn step(&mut self) -> Result<&StepRecord> {
        let start = Instant::now();
        let refined = self.collection.subdivide();
        let depth = refined.depth();

        let mut stored: BTreeMap<u64, Stored<M::Payload>> = BTreeMap::new();
        for (_, list) in std::mem::take(&mut self.payloads) {
            for (x, p) in list {
                if let Some(key) = refined.cell_of(&x) {
                    stored.entry(key).or_default().push_back((x, p));
                }
            }
        }

        let map = self.map;
        let cfg = &self.config;
        let leaves = refined.leaves();
        let outcomes: Vec<Result<BoxOutcome<M::Payload>>> = self.pool.install(|| {
            leaves
                .par_iter()
                .map(|&key| evaluate_box(map, cfg, &refined, key, stored.get(&key)))
                .collect()
        });

        let mut record = StepRecord {
            depth,
            boxes_before: refined.len(),
            ..StepRecord::default()
        };
        let mut hits: Vec<(u64, Vec<f64>, Option<M::Payload>)> = Vec::new();
        for outcome in outcomes {
            let outcome = outcome?;
            record.absorb(&outcome.record);
            hits.extend(outcome.hits);
        }
        hits.sort_by_key(|h| h.0);

        let keys: Vec<u64> = hits.iter().map(|h| h.0).collect();
        let selected = refined.retain(&keys);
        let cap = self.config.max_payloads_per_box;
        for (key, x, p) in hits {
            if let Some(p) = p {
                let slot = self.payloads.entry(key).or_default();
                slot.push_back((x, p));
                if slot.len() > cap {
                    slot.pop_front();
                }
            }
        }
        record.boxes_after = selected.len();
        record.seconds = start.elapsed().as_secs_f64();
        debug_assert!(record.is_balanced());
        self.collection = selected;
        self.report.steps.push(record);
        if self.collection.is_empty() {
            return Err(Error::EmptyCollection { depth });
        }
        Ok(self.report.steps.last().expect("just pushed"))
    }

    /// Runs all configured steps, calling `checkpoint` after each.
    pub fn run_with(
        mut self,
        mut checkpoint: impl FnMut(&BoxCollection, &StepRecord) -> Result<()>,
    ) -> Result<(BoxCollection, SelectionReport)> {
        for _ in 0..self.config.steps {
            self.step()?;
            checkpoint(
                &self.collection,
                self.report.steps.last().expect("step recorded"),
            )?;
        }
        Ok((self.collection, self.report))
    }

    pub fn run(self) -> Result<(BoxCollection, SelectionReport)> {
        self.run_with(|_, _| Ok(()))
    }
}

fn evaluate_box<M: SelectionMap>(
    map: &M,
    cfg: &RunConfig,
    collection: &BoxCollection,
    key: u64,
    stored: Option<&Stored<M::Payload>>,
) -> Result<BoxOutcome<M::Payload>> {
    let mut out = BoxOutcome {
        hits: Vec::new(),
        record: StepRecord::default(),
    };
    let mut classify = |image: Result<(Vec<f64>, Option<M::Payload>)>| -> Result<()> {
        out.record.evaluated += 1;
        let (y, p) = match image {
            Ok(v) => v,
            Err(Error::NonFiniteState { .. }) => {
                out.record.non_finite += 1;
                return Ok(());
            }
            Err(e) => return Err(e),
        };
        match collection.cell_of(&y) {
            None => out.record.out_of_domain += 1,
            Some(_) if collection.is_excluded(&y) => out.record.excluded += 1,
            Some(k) if collection.contains_leaf(k) => {
                out.record.hits += 1;
                out.hits.push((k, y, p));
            }
            Some(_) => out.record.missed += 1,
        }
        Ok(())
    };

    let mut used = 0;
    if let Some(list) = stored {
        for (x, p) in list.iter().take(cfg.points_per_box) {
            classify(map.apply(x, Some(p)))?;
            used += 1;
        }
    }
    let payload_points = used;
    let region = collection.leaf_region(key);
    let mut rng = ChaCha8Rng::seed_from_u64(box_seed(cfg.seed, collection.depth(), key));
    let mut skipped = 0;
    while used < cfg.points_per_box {
        let x = sample_box(&mut rng, &region);
        used += 1;
        if collection.is_excluded(&x) {
            skipped += 1;
            continue;
        }
        classify(map.apply(&x, None))?;
    }
    out.record.payload_points = payload_points;
    out.record.skipped = skipped;
    Ok(out)
}

/// Computes the covering of the relative global attractor of `phi_m` in `q`.
pub fn run_subdivision(
    sys: &DdeSystem,
    cfg: &EmbeddingConfig,
    q: &BoxRegion,
    rc: &RunConfig,
    excluded: &[BoxRegion],
) -> Result<(BoxCollection, SelectionReport)> {
    let map = EmbeddedMap::new(sys.clone(), cfg.clone())?;
    Subdivision::new(&map, q.clone(), excluded.to_vec(), rc.clone())?.run()
}

/// [`run_subdivision`] with the embedded DDE map replaced by `f`.
pub fn run_synthetic<F>(
    dim: usize,
    f: F,
    q: &BoxRegion,
    rc: &RunConfig,
    excluded: &[BoxRegion],
) -> Result<(BoxCollection, SelectionReport)>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    let map = SyntheticMap::new(dim, f);
    Subdivision::new(&map, q.clone(), excluded.to_vec(), rc.clone())?.run()
}
