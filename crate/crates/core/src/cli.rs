//! Command-line front end: `run`, `simulate`, `analyze`, `presets`.

use std::ffi::OsString;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::analysis::{
    box_centers, containment, estimate_box_dimension, hausdorff, poincare_slice,
    simulate_embedded_orbit, Report,
};
use crate::boxcover::BoxCollection;
use crate::config::{Artifact, Config, Target};
use crate::dde::{read_samples, write_sample_line};
use crate::embedding::EmbeddedMap;
use crate::error::{Error, Result};
use crate::models;
use crate::subdivision::{SelectionMap, SelectionReport, Subdivision, SyntheticMap};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "delay-attractor", version, about = "Box coverings of embedded attractors of delay equations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the subdivision algorithm and write coverings and reports.
    Run {
        config: PathBuf,
        /// Output directory (overrides [output] directory).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Random seed (overrides [run] seed).
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (overrides [run] threads).
        #[arg(long)]
        threads: Option<usize>,
        /// Write a covering every D depths (overrides [run] checkpoint_every).
        #[arg(long, value_name = "D")]
        checkpoint_every: Option<u32>,
    },
    /// Integrate the delay equation and write the trajectory and embedded orbit.
    Simulate {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        transient: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        spacing: Option<f64>,
    },
    /// Compare coverings with point sets or other coverings.
    Analyze {
        /// Covering files; three or more enable the dimension estimate.
        #[arg(required = true)]
        coverings: Vec<PathBuf>,
        /// Points in trajectory format (first column is time).
        #[arg(long)]
        points: Option<PathBuf>,
        /// Second covering for the Hausdorff distance between box centers.
        #[arg(long)]
        against: Option<PathBuf>,
        /// Poincaré slice as COORD,VALUE,THICKNESS with 1-based COORD.
        #[arg(long, value_name = "COORD,VALUE,THICKNESS")]
        slice: Option<String>,
        /// Report file; printed to stdout as well.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in models.
    Presets,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run {
            config,
            out,
            seed,
            threads,
            checkpoint_every,
        } => {
            let mut cfg = Config::load(&config)?;
            if let Some(s) = seed {
                cfg.run.seed = s;
            }
            if let Some(t) = threads {
                cfg.run.threads = Some(t);
            }
            if let Some(c) = checkpoint_every {
                cfg.checkpoint_every = c;
            }
            if let Some(o) = out {
                cfg.output.directory = o;
            }
            cfg.run.validate()?;
            cmd_run(&cfg).map(|_| ())
        }
        Command::Simulate {
            config,
            out,
            transient,
            samples,
            spacing,
        } => {
            let mut cfg = Config::load(&config)?;
            if let Some(o) = out {
                cfg.output.directory = o;
            }
            if let Some(t) = transient {
                cfg.simulate.transient = t;
            }
            if let Some(s) = samples {
                cfg.simulate.samples = s;
            }
            if let Some(s) = spacing {
                cfg.simulate.spacing = s;
            }
            cmd_simulate(&cfg)
        }
        Command::Analyze {
            coverings,
            points,
            against,
            slice,
            out,
        } => {
            let slice = slice.map(|s| parse_slice(&s)).transpose()?;
            let report = cmd_analyze(&coverings, points.as_deref(), against.as_deref(), slice)?;
            let text = report.to_text();
            print!("{text}");
            if let Some(path) = out {
                write_file(&path, &text)?;
            }
            Ok(())
        }
        Command::Presets => {
            for name in models::PRESET_NAMES {
                let p = models::preset(name)?;
                println!(
                    "{name:<14} k = {}, m = {}, tau = {}  {}",
                    p.embedding.dim(),
                    p.embedding.m,
                    p.system.tau(),
                    p.note
                );
            }
            Ok(())
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn parse_slice(s: &str) -> Result<(usize, f64, f64)> {
    let bad = || Error::Config(format!("--slice expects COORD,VALUE,THICKNESS, got {s:?}"));
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let coord: usize = parts[0].parse().map_err(|_| bad())?;
    if coord == 0 {
        return Err(Error::Config("--slice coordinates are numbered from 1".into()));
    }
    let value: f64 = parts[1].parse().map_err(|_| bad())?;
    let thickness: f64 = parts[2].parse().map_err(|_| bad())?;
    if !(thickness >= 0.0) {
        return Err(bad());
    }
    Ok((coord - 1, value, thickness))
}

/// Result of a completed `run`.
#[derive(Debug)]
pub struct RunOutcome {
    pub covering: BoxCollection,
    pub report: SelectionReport,
    pub files: Vec<PathBuf>,
}

fn drive<M: SelectionMap>(map: &M, cfg: &Config, dir: &Path) -> Result<RunOutcome> {
    let mut sd = Subdivision::new(map, cfg.domain.clone(), cfg.excluded.clone(), cfg.run.clone())?;
    let mut files = Vec::new();
    let write_checkpoints = cfg.output.emit.contains(&Artifact::Checkpoints);
    for _ in 0..cfg.run.steps {
        match sd.step() {
            Ok(r) => {
                let depth = r.depth;
                if write_checkpoints && cfg.is_checkpoint(depth) {
                    let path = dir.join(format!("covering_d{depth:02}.txt"));
                    write_file(&path, &sd.collection().to_text())?;
                    files.push(path);
                }
            }
            Err(e @ Error::EmptyCollection { .. }) => {
                if cfg.output.emit.contains(&Artifact::Report) {
                    write_reports(dir, sd.report())?;
                }
                return Err(e);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(RunOutcome {
        covering: sd.collection().clone(),
        report: sd.report().clone(),
        files,
    })
}

fn write_reports(dir: &Path, report: &SelectionReport) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for (name, text) in [
        ("report.txt", report.to_table()),
        ("report.kv", report.to_key_values()),
        ("timing.kv", report.timings()),
    ] {
        let path = dir.join(name);
        write_file(&path, &text)?;
        files.push(path);
    }
    Ok(files)
}

fn write_points(path: &Path, points: impl Iterator<Item = (f64, Vec<f64>)>) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for (t, p) in points {
        write_sample_line(&mut w, t, &p).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn manifest(cfg: &Config, command: &str) -> String {
    format!(
        "program = delay-attractor {VERSION}\ncommand = {command}\nname = {}\nseed = {}\n\
         checkpoint_every = {}\ncheckpoint_start = {}\nk = {}\n[config]\n{}",
        cfg.name,
        cfg.run.seed,
        cfg.checkpoint_every,
        cfg.checkpoint_start,
        cfg.dim(),
        cfg.source
    )
}

/// Runs the subdivision described by `cfg` without writing any files.
pub fn run_config(cfg: &Config) -> Result<(BoxCollection, SelectionReport)> {
    match &cfg.target {
        Target::Delay {
            system, embedding, ..
        } => {
            let map = EmbeddedMap::new(system.clone(), embedding.clone())?;
            Subdivision::new(&map, cfg.domain.clone(), cfg.excluded.clone(), cfg.run.clone())?.run()
        }
        Target::Synthetic(kind) => {
            let kind = kind.clone();
            let map = SyntheticMap::new(cfg.dim(), move |x: &[f64]| kind.apply(x));
            Subdivision::new(&map, cfg.domain.clone(), cfg.excluded.clone(), cfg.run.clone())?.run()
        }
    }
}

/// Runs the subdivision described by `cfg`, writing into its output directory.
pub fn cmd_run(cfg: &Config) -> Result<RunOutcome> {
    let dir = cfg.output.directory.clone();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    if let Target::Delay { embedding, .. } = &cfg.target {
        for w in embedding.validate()? {
            eprintln!("warning: {w}");
        }
    }
    let manifest_path = dir.join("manifest.txt");
    write_file(&manifest_path, &manifest(cfg, "run"))?;

    let mut outcome = match &cfg.target {
        Target::Delay {
            system, embedding, ..
        } => {
            let map = EmbeddedMap::new(system.clone(), embedding.clone())?;
            drive(&map, cfg, &dir)?
        }
        Target::Synthetic(kind) => {
            let kind = kind.clone();
            let map = SyntheticMap::new(cfg.dim(), move |x: &[f64]| kind.apply(x));
            drive(&map, cfg, &dir)?
        }
    };
    outcome.files.push(manifest_path);
    if cfg.output.emit.contains(&Artifact::Covering) {
        let path = dir.join("covering.txt");
        write_file(&path, &outcome.covering.to_text())?;
        outcome.files.push(path);
    }
    if cfg.output.emit.contains(&Artifact::Centers) {
        let path = dir.join("centers.txt");
        write_points(&path, box_centers(&outcome.covering).into_iter().map(|c| (0.0, c)))?;
        outcome.files.push(path);
    }
    if cfg.output.emit.contains(&Artifact::Report) {
        outcome.files.extend(write_reports(&dir, &outcome.report)?);
    }
    eprintln!(
        "{}: depth {}, {} boxes",
        cfg.name,
        outcome.covering.depth(),
        outcome.covering.len()
    );
    Ok(outcome)
}

/// Writes `trajectory.txt` (state on the integrator grid) and `orbit.txt`
/// (embedded samples).
pub fn cmd_simulate(cfg: &Config) -> Result<()> {
    let Target::Delay {
        system, embedding, ..
    } = &cfg.target
    else {
        return Err(Error::Config("simulate needs a delay system".into()));
    };
    let h0 = cfg.initial_history()?;
    let s = &cfg.simulate;
    let orbit = simulate_embedded_orbit(
        system,
        &embedding.layout,
        &h0,
        s.transient,
        s.samples,
        s.spacing,
        embedding.step,
    )?;
    let dir = &cfg.output.directory;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_file(&dir.join("manifest.txt"), &manifest(cfg, "simulate"))?;
    if let Some(traj) = &orbit.trajectory {
        let path = dir.join("trajectory.txt");
        let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::new(file);
        traj.write_text(&mut w).map_err(|e| Error::io(&path, e))?;
        w.flush().map_err(|e| Error::io(&path, e))?;
    }
    write_points(
        &dir.join("orbit.txt"),
        orbit.times.iter().copied().zip(orbit.points.iter().cloned()),
    )?;
    Ok(())
}

fn read_covering(path: &Path) -> Result<BoxCollection> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    BoxCollection::from_text(&text)
}

/// Builds the analysis report for the given coverings.
pub fn cmd_analyze(
    coverings: &[PathBuf],
    points: Option<&Path>,
    against: Option<&Path>,
    slice: Option<(usize, f64, f64)>,
) -> Result<Report> {
    let cols: Vec<BoxCollection> = coverings
        .iter()
        .map(|p| read_covering(p))
        .collect::<Result<_>>()?;
    let Some(last) = cols.last() else {
        return Err(Error::Config("no covering given".into()));
    };
    let k = last.dim();
    let mut report = Report::default();
    for (i, (c, path)) in cols.iter().zip(coverings).enumerate() {
        if c.dim() != k {
            return Err(Error::Config(format!(
                "{} has k = {}, expected {k}",
                path.display(),
                c.dim()
            )));
        }
        report.push(format!("covering.{i}.path"), path.display());
        report.push(format!("covering.{i}.depth"), c.depth());
        report.push(format!("covering.{i}.boxes"), c.len());
    }
    report.push("k", k);
    let centers = box_centers(last);

    if let Some(path) = points {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let pts: Vec<Vec<f64>> = read_samples(&text)?.into_iter().map(|(_, p)| p).collect();
        if let Some(p) = pts.first() {
            if p.len() != k {
                return Err(Error::Config(format!(
                    "points have {} coordinates, the covering has k = {k}",
                    p.len()
                )));
            }
        }
        report.push("points", pts.len());
        report.push("containment", format!("{:.6}", containment(last, &pts)));
        if !pts.is_empty() && !centers.is_empty() {
            report.push("hausdorff.points", format!("{:.6e}", hausdorff(&pts, &centers)?));
        }
    }
    if let Some(path) = against {
        let other = read_covering(path)?;
        if other.dim() != k {
            return Err(Error::Config(format!(
                "{} has k = {}, expected {k}",
                path.display(),
                other.dim()
            )));
        }
        let oc = box_centers(&other);
        if !oc.is_empty() && !centers.is_empty() {
            report.push("hausdorff.covering", format!("{:.6e}", hausdorff(&centers, &oc)?));
        }
    }
    if cols.len() >= 3 {
        let root = cols[0].root();
        if cols.iter().any(|c| c.root() != root) {
            report.push("dimension", "unavailable (coverings have different roots)");
        } else {
            let data: Vec<(u32, usize)> = cols.iter().map(|c| (c.depth(), c.len())).collect();
            match estimate_box_dimension(root, &data) {
                Ok(d) => report.push("dimension", format!("{d:.4}")),
                Err(e) => report.push("dimension", format!("unavailable ({e})")),
            }
        }
    }
    if let Some((coord, value, thickness)) = slice {
        let s = poincare_slice(last, coord, value, thickness)?;
        report.push("slice.coordinate", coord + 1);
        report.push("slice.value", value);
        report.push("slice.thickness", thickness);
        report.push("slice.boxes", s.len());
    }
    Ok(report)
}
