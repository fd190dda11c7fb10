//! Acceptance criteria A1-A10. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

mod common;

use std::f64::consts::PI;
use std::time::Instant;

use delay_attractor::analysis::{
    containment, estimate_box_dimension, poincare_slice, simulate_embedded_orbit,
};
use delay_attractor::boxcover::{BoxCollection, BoxRegion};
use delay_attractor::cli::cmd_run;
use delay_attractor::config::Config;
use delay_attractor::dde::{integrate, DdeSystem, HistorySegment};
use delay_attractor::embedding::{embed_initial, restrict, EmbeddedMap};
use delay_attractor::models::{self, linear_system, ModelPreset};
use delay_attractor::subdivision::{RunConfig, Subdivision, SyntheticMap};
use delay_attractor::synthetic::SyntheticKind;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn a1_integrator() -> Outcome {
    let a = PI / 2.0;
    let sys = DdeSystem::new(1, 1.0, move |_: &[f64], d: &[f64], o: &mut [f64]| o[0] = -a * d[0])
        .map_err(|e| e.to_string())?;
    let error = |h: f64| -> Result<f64, String> {
        let cells = (1.0 / h).round() as usize;
        let h0 = HistorySegment::from_fn_with_derivs(
            1.0,
            1,
            cells,
            |t, o| o[0] = (a * t).sin(),
            |t, o| o[0] = a * (a * t).cos(),
        )
        .map_err(|e| e.to_string())?;
        let run = integrate(&sys, &h0, 10.0, h).map_err(|e| e.to_string())?;
        let traj = run.trajectory;
        Ok((0..traj.len())
            .map(|r| (traj.row(r)[0] - (a * traj.time(r)).sin()).abs())
            .fold(0.0, f64::max))
    };
    let e1 = error(1e-3)?;
    let e2 = error(5e-4)?;
    let ratio = e1 / e2;
    check(
        e1 < 1e-6 && (12.0..=20.0).contains(&ratio),
        format!("max error {e1:.3e} at h = 1e-3, {e2:.3e} at h = 5e-4, ratio {ratio:.2}"),
    )
}

fn a2_right_inverse() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for name in ["wright", "arneodo", "mackey-glass"] {
        let p = models::preset(name).map_err(|e| e.to_string())?;
        let layout = &p.embedding.layout;
        let (lo, hi) = (p.domain.lower(), p.domain.upper());
        for _ in 0..1000 {
            let z: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| rng.gen_range(*l..*h)).collect();
            let back = embed_initial(&z, layout)
                .and_then(|h| restrict(&h, layout))
                .map_err(|e| e.to_string())?;
            for (x, y) in back.iter().zip(&z) {
                worst = worst.max((x - y).abs());
            }
        }
    }
    check(worst < 1e-12, format!("max |R(E(z)) - z| = {worst:.2e} over 3000 points"))
}

fn a3_subdivision_laws() -> Outcome {
    let p = models::wright();
    let map = EmbeddedMap::new(p.system.clone(), p.embedding.clone()).map_err(|e| e.to_string())?;
    let rc = RunConfig {
        steps: 12,
        points_per_box: 10,
        seed: 3,
        ..RunConfig::default()
    };
    let mut sd = Subdivision::new(&map, p.domain.clone(), vec![], rc).map_err(|e| e.to_string())?;
    let root = p.domain.clone();
    let mut previous = sd.collection().clone();
    let mut problems = Vec::new();
    for _ in 0..12 {
        sd.step().map_err(|e| e.to_string())?;
        let c = sd.collection();
        let d = c.depth();
        if !c.is_refinement_of(&previous) {
            problems.push(format!("depth {d} is not a refinement"));
        }
        let expected: Vec<f64> = common::widths(&root, d).iter().map(|w| w / 2.0).collect();
        for (key, r) in c.regions() {
            if r.radii() != expected.as_slice() {
                problems.push(format!("radii at depth {d}"));
                break;
            }
            let parent = previous.leaf_region(key >> 1);
            if !(0..r.dim()).all(|i| {
                r.lower()[i] >= parent.lower()[i] && r.upper()[i] <= parent.upper()[i]
            }) {
                problems.push(format!("box outside its parent at depth {d}"));
                break;
            }
        }
        let text = c.to_text();
        match BoxCollection::from_text(&text) {
            Ok(back) if back.to_text() == text && &back == c => {}
            _ => problems.push(format!("round trip at depth {d}")),
        }
        previous = c.clone();
    }
    check(
        problems.is_empty(),
        if problems.is_empty() {
            format!("12 steps, final {} boxes; nesting, radii and file round trip exact", previous.len())
        } else {
            problems.join("; ")
        },
    )
}

fn a4_oracle() -> Outcome {
    let cases: Vec<(SyntheticKind, bool)> = vec![
        (SyntheticKind::from_name("constant", 2).unwrap(), true),
        (SyntheticKind::Identity, true),
        (SyntheticKind::Contraction, true),
        (SyntheticKind::Hyperbolic, false),
        (SyntheticKind::Rotation, false),
    ];
    let depth = 12;
    let mut lines = Vec::new();
    let mut ok = true;
    for (kind, exact) in cases {
        let root = kind.default_domain(2);
        let f = {
            let kind = kind.clone();
            move |x: &[f64]| kind.apply(x)
        };
        let oracle = common::brute_force(&f, &root, depth, 10);
        let map = SyntheticMap::new(2, f.clone());
        let rc = RunConfig {
            steps: depth,
            points_per_box: 10,
            seed: 4,
            ..RunConfig::default()
        };
        let mut sd = Subdivision::new(&map, root.clone(), vec![], rc).map_err(|e| e.to_string())?;
        let mut case_ok = true;
        let mut diff = 0;
        for expected in &oracle {
            sd.step().map_err(|e| e.to_string())?;
            let got = common::cells_of(sd.collection());
            diff = diff.max(got.symmetric_difference(expected).count());
            let agree = if exact {
                &got == expected
            } else {
                common::within_one_layer(&got, expected)
            };
            case_ok &= agree;
        }
        ok &= case_ok;
        lines.push(format!(
            "{} {} ({} boxes, max diff {diff})",
            kind.name(),
            if case_ok { "ok" } else { "MISMATCH" },
            sd.collection().len()
        ));
    }
    check(ok, format!("depth {depth}: {}", lines.join(", ")))
}

fn a5_stable_linear() -> Outcome {
    let sys = linear_system(0.0, -0.5, 1.0).map_err(|e| e.to_string())?;
    let layout = delay_attractor::embedding::ObservableLayout::scalar(1.0, 3).map_err(|e| e.to_string())?;
    let cfg = delay_attractor::embedding::EmbeddingConfig::new(layout, 20);
    let q = BoxRegion::cube(3, 0.0, 1.0).unwrap();
    let rc = RunConfig {
        steps: 15,
        points_per_box: 100,
        seed: 5,
        ..RunConfig::default()
    };
    let (c, _) = delay_attractor::subdivision::run_subdivision(&sys, &cfg, &q, &rc, &[])
        .map_err(|e| e.to_string())?;
    let reach = c
        .regions()
        .map(|(_, r)| {
            r.center()
                .iter()
                .zip(r.radii())
                .map(|(x, h)| x.abs() + h)
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    check(
        !c.is_empty() && reach <= 0.25,
        format!("{} boxes, farthest box point at max-norm {reach:.4}", c.len()),
    )
}

fn run_preset(p: &ModelPreset, steps: u32) -> Result<BoxCollection, String> {
    let map = EmbeddedMap::new(p.system.clone(), p.embedding.clone()).map_err(|e| e.to_string())?;
    let rc = RunConfig {
        steps,
        points_per_box: 100,
        seed: 1,
        ..RunConfig::default()
    };
    Subdivision::new(&map, p.domain.clone(), p.excluded.clone(), rc)
        .and_then(|s| s.run())
        .map(|(c, _)| c)
        .map_err(|e| e.to_string())
}

fn orbit(p: &ModelPreset, h0: &HistorySegment, transient: f64, spacing: f64) -> Result<Vec<Vec<f64>>, String> {
    simulate_embedded_orbit(&p.system, &p.embedding.layout, h0, transient, 500, spacing, p.embedding.step)
        .map(|o| o.points)
        .map_err(|e| e.to_string())
}

fn a6_wright() -> Outcome {
    let p = models::wright();
    let pts = orbit(&p, &common::wright_perturbed_history(6), 200.0, 0.25)?;
    let c = run_preset(&p, 20)?;
    let frac = containment(&c, &pts);
    let origin = c.locate(&[0.0; 5]).is_some();

    let po = models::wright_orbit(models::WRIGHT_HOLE_RADIUS);
    let co = run_preset(&po, 20)?;
    let frac_o = containment(&co, &pts);
    let hole = &po.excluded[0];
    let meeting_hole = co
        .regions()
        .filter(|(_, r)| {
            (0..5).all(|i| (r.center()[i] - hole.center()[i]).abs() < r.radii()[i] + hole.radii()[i])
        })
        .count();
    check(
        frac >= 0.99 && origin && !co.is_empty() && frac_o >= 0.99 && meeting_hole == 0,
        format!(
            "depth 20: {} boxes, containment {frac:.3}, origin covered {origin}; \
             excluded variant: {} boxes, containment {frac_o:.3}, boxes meeting U {meeting_hole}",
            c.len(),
            co.len()
        ),
    )
}

fn a7_mackey_glass() -> Outcome {
    let p = models::mackey_glass();
    let pts = orbit(&p, &p.initial_history(), 300.0, 2.0 / 3.0)?;
    let c = run_preset(&p, 28)?;
    let frac = containment(&c, &pts);
    let fixed = c.locate(&[1.0; 7]).is_some();
    check(
        frac >= 0.99 && fixed,
        format!("depth 28: {} boxes, containment {frac:.3}, (1,...,1) covered {fixed}", c.len()),
    )
}

fn a8_arneodo() -> Outcome {
    let p = models::arneodo();
    let pts = orbit(&p, &p.initial_history(), 200.2, 0.26)?;
    let c = run_preset(&p, 20)?;
    let frac = containment(&c, &pts);
    let slice = poincare_slice(&c, 2, 0.0, 0.0).map_err(|e| e.to_string())?;
    check(
        frac >= 0.99 && !slice.is_empty(),
        format!(
            "depth 20: {} boxes, containment {frac:.3}, slice u2(0) = 0 has {} boxes",
            c.len(),
            slice.len()
        ),
    )
}

fn counts(kind: SyntheticKind, k: usize, depths: &[u32]) -> Result<(BoxRegion, Vec<(u32, usize)>), String> {
    let root = kind.default_domain(k);
    let map = SyntheticMap::new(k, move |x: &[f64]| kind.apply(x));
    let rc = RunConfig {
        steps: *depths.iter().max().unwrap(),
        points_per_box: 10,
        seed: 9,
        ..RunConfig::default()
    };
    let mut sd = Subdivision::new(&map, root.clone(), vec![], rc).map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    while sd.collection().depth() < *depths.iter().max().unwrap() {
        sd.step().map_err(|e| e.to_string())?;
        if depths.contains(&sd.collection().depth()) {
            out.push((sd.collection().depth(), sd.collection().len()));
        }
    }
    Ok((root, out))
}

fn a9_dimension() -> Outcome {
    let est = |root: &BoxRegion, data: &[(u32, usize)]| {
        estimate_box_dimension(root, data).map_err(|e| e.to_string())
    };
    let (root, data) = counts(SyntheticKind::from_name("constant", 3).unwrap(), 3, &[3, 6, 9, 12])?;
    let point = est(&root, &data)?;
    let (root, data) = counts(SyntheticKind::Identity, 3, &[3, 6, 9, 12])?;
    let cube = est(&root, &data)?;

    // Segment {x2 = x3 = 0} covered analytically by the cells it meets.
    let root3 = BoxRegion::cube(3, 0.0, 1.0).unwrap();
    let seg: Vec<(u32, usize)> = [6u32, 9, 12, 15, 18]
        .iter()
        .map(|&d| {
            let c = BoxCollection::new(root3.clone());
            let mut cells = std::collections::BTreeSet::new();
            for i in 0..=4096 {
                let x = -1.0 + 2.0 * i as f64 / 4096.0;
                cells.insert(common::grid_cell(c.root(), d, &[x, 0.0, 0.0]).unwrap());
            }
            (d, cells.len())
        })
        .collect();
    let segment = est(&root3, &seg)?;
    // The same from a run: attractor {x1 = 0} x [-1, 1] of diag(0.5, 1.2).
    let (root2, data) = counts(SyntheticKind::Hyperbolic, 2, &[8, 10, 12, 14])?;
    let run_segment = est(&root2, &data)?;
    check(
        point.abs() <= 1e-9
            && (cube - 3.0).abs() <= 1e-9
            && (segment - 1.0).abs() <= 0.15
            && (run_segment - 1.0).abs() <= 0.15,
        format!(
            "point {point:.2e}, segment {segment:.4} (from a run {run_segment:.4}), cube {cube:.12}"
        ),
    )
}

fn a10_determinism() -> Outcome {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let text = "[system]\npreset = wright\n[run]\nsteps = 12\npoints_per_box = 20\nseed = 10\n\
                checkpoint_every = 4\n[output]\nemit = covering, checkpoints, report, centers\n";
    let mut files = Vec::new();
    for (i, dir) in dirs.iter().enumerate() {
        let mut cfg = Config::parse(text).map_err(|e| e.to_string())?;
        cfg.output.directory = dir.path().to_path_buf();
        cfg.run.threads = Some(i + 1);
        let outcome = cmd_run(&cfg).map_err(|e| e.to_string())?;
        files.push(outcome.files);
    }
    let mut compared = 0;
    for path in &files[0] {
        let name = path.file_name().unwrap();
        if name == "timing.kv" {
            continue;
        }
        let a = std::fs::read(path).map_err(|e| e.to_string())?;
        let b = std::fs::read(dirs[1].path().join(name)).map_err(|e| e.to_string())?;
        if a != b {
            return Err(format!("{} differs between runs", name.to_string_lossy()));
        }
        compared += 1;
    }
    check(
        compared >= 7,
        format!("{compared} files byte-identical across two runs (1 and 2 threads)"),
    )
}

fn main() {
    let criteria: [(&str, &str, fn() -> Outcome); 10] = [
        ("A1", "integrator oracle", a1_integrator),
        ("A2", "right inverse", a2_right_inverse),
        ("A3", "subdivision laws", a3_subdivision_laws),
        ("A4", "brute-force oracle", a4_oracle),
        ("A5", "stable linear DDE", a5_stable_linear),
        ("A6", "Wright", a6_wright),
        ("A7", "Mackey-Glass", a7_mackey_glass),
        ("A8", "Arneodo", a8_arneodo),
        ("A9", "dimension estimator", a9_dimension),
        ("A10", "determinism", a10_determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|x| x == id) {
            continue;
        }
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("{id:<4} PASS  {name}: {detail} [{secs:.1} s]"),
            Err(detail) => {
                failed += 1;
                println!("{id:<4} FAIL  {name}: {detail} [{secs:.1} s]");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
