mod common;

use delay_attractor::boxcover::{BoxCollection, BoxRegion};
use delay_attractor::dde::{integrate, HistorySegment};
use delay_attractor::embedding::{
    embed_bootstrap, embed_initial, restrict, BootstrapPayload, EmbeddedMap, EmbeddingConfig,
};
use delay_attractor::models;
use delay_attractor::subdivision::{RunConfig, Subdivision, SyntheticMap};
use proptest::prelude::*;

fn mackey_glass_states(count: usize) -> Vec<HistorySegment> {
    let p = models::mackey_glass();
    let step = p.embedding.step;
    let mut state = integrate(&p.system, &p.initial_history(), 300.0, step)
        .unwrap()
        .final_state;
    let mut out = Vec::new();
    for _ in 0..count {
        state = integrate(&p.system, &state, 4.0 + 2.0 / 3.0, step)
            .unwrap()
            .final_state;
        out.push(state.clone());
    }
    out
}

fn sup_distance(a: &HistorySegment, b: &HistorySegment) -> f64 {
    let tau = a.tau();
    (0..=2000)
        .map(|i| {
            let t = -tau + tau * i as f64 / 2000.0;
            (a.evaluate(t).unwrap()[0] - b.evaluate(t).unwrap()[0]).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn bootstrap_extras_improve_reconstruction_on_mackey_glass() {
    let layout = models::mackey_glass().embedding.layout;
    let mut worst = [0.0f64; 3];
    for truth in mackey_glass_states(20) {
        let z = restrict(&truth, &layout).unwrap();
        let linear = embed_initial(&z, &layout).unwrap();
        let p0 = BootstrapPayload::from_state(&truth, &layout, 0).unwrap();
        let p3 = BootstrapPayload::from_state(&truth, &layout, 3).unwrap();
        let e0 = embed_bootstrap(&z, &p0, &layout).unwrap();
        let e3 = embed_bootstrap(&z, &p3, &layout).unwrap();
        worst[0] = worst[0].max(sup_distance(&linear, &truth));
        worst[1] = worst[1].max(sup_distance(&e0, &truth));
        worst[2] = worst[2].max(sup_distance(&e3, &truth));
    }
    eprintln!("reconstruction error: linear {:.3e}, p=0 {:.3e}, p=3 {:.3e}", worst[0], worst[1], worst[2]);
    assert!(worst[2] * 2.0 <= worst[1], "{worst:?}");
    assert!(worst[2] * 2.0 <= worst[0], "{worst:?}");
}

#[test]
fn two_steps_of_m1_track_one_step_of_m2() {
    let p = models::mackey_glass();
    let sys = p.system.clone();
    let one = EmbeddedMap::new(sys.clone(), EmbeddingConfig::new(p.embedding.layout.clone(), 1)).unwrap();
    let two = EmbeddedMap::new(sys, EmbeddingConfig::new(p.embedding.layout.clone(), 2)).unwrap();
    let mut worst: f64 = 0.0;
    let mut reconstruction: f64 = 0.0;
    for truth in mackey_glass_states(100) {
        let z = restrict(&truth, &p.embedding.layout).unwrap();
        let payload = BootstrapPayload::from_state(&truth, &p.embedding.layout, 3).unwrap();
        let rebuilt = embed_bootstrap(&z, &payload, &p.embedding.layout).unwrap();
        reconstruction = reconstruction.max(sup_distance(&rebuilt, &truth));
        let (direct, _) = two.apply(&z, Some(&payload)).unwrap();
        let (mid, pay) = one.apply(&z, Some(&payload)).unwrap();
        let (composed, _) = one.apply(&mid, Some(&pay)).unwrap();
        let d = direct
            .iter()
            .zip(&composed)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        worst = worst.max(d);
    }
    eprintln!("max |phi_2 - phi_1 o phi_1| = {worst:.3e}, reconstruction {reconstruction:.3e}");
    assert!(worst <= reconstruction, "deviation {worst:.3e} > {reconstruction:.3e}");
}

#[test]
fn equilibria_are_fixed_points_of_phi() {
    let cases: Vec<(&str, Vec<f64>)> = vec![
        ("wright", vec![0.0]),
        ("arneodo", vec![0.0, 0.0, 0.0]),
        ("arneodo", vec![2.5, 0.0, 0.0]),
        ("mackey-glass", vec![1.0]),
        ("mackey-glass", vec![0.0]),
    ];
    for (name, eq) in cases {
        let p = models::preset(name).unwrap();
        let h = HistorySegment::constant(p.system.tau(), &eq).unwrap();
        let z = restrict(&h, &p.embedding.layout).unwrap();
        let map = EmbeddedMap::new(p.system.clone(), p.embedding.clone()).unwrap();
        let (next, _) = map.apply(&z, None).unwrap();
        for (a, b) in next.iter().zip(&z) {
            assert!((a - b).abs() < 1e-8, "{name} {eq:?}: {next:?}");
        }
    }
}

fn linear_map(a: [f64; 4], b: [f64; 2]) -> impl Fn(&[f64]) -> Vec<f64> + Sync + Clone {
    move |x: &[f64]| vec![a[0] * x[0] + a[1] * x[1] + b[0], a[2] * x[0] + a[3] * x[1] + b[1]]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn runs_nest_and_keep_the_bisection_law(
        a in prop::array::uniform4(-0.9..0.9f64),
        b in prop::array::uniform2(-0.3..0.3f64),
        seed in 0u64..1000,
    ) {
        let root = BoxRegion::cube(2, 0.0, 1.0).unwrap();
        let map = SyntheticMap::new(2, linear_map(a, b));
        let rc = RunConfig { steps: 8, points_per_box: 6, seed, ..RunConfig::default() };
        let mut sd = Subdivision::new(&map, root.clone(), vec![], rc).unwrap();
        let mut prev = sd.collection().clone();
        for _ in 0..8 {
            if sd.step().is_err() {
                break;
            }
            let c = sd.collection();
            prop_assert!(c.is_refinement_of(&prev));
            let expected: Vec<f64> = common::widths(&root, c.depth()).iter().map(|w| w / 2.0).collect();
            prop_assert_eq!(c.leaf_radii(), expected);
            let text = c.to_text();
            let back = BoxCollection::from_text(&text).unwrap();
            prop_assert_eq!(&back, c);
            prop_assert_eq!(back.to_text(), text);
            prop_assert!(sd.report().steps.last().unwrap().is_balanced());
            prev = c.clone();
        }
    }

    #[test]
    fn same_seed_same_covering(seed in 0u64..1000) {
        let root = BoxRegion::cube(2, 0.0, 1.0).unwrap();
        let f = linear_map([0.3, -0.8, 0.8, 0.3], [0.05, 0.0]);
        let rc = RunConfig { steps: 8, points_per_box: 5, seed, ..RunConfig::default() };
        let run = || {
            let map = SyntheticMap::new(2, f.clone());
            Subdivision::new(&map, root.clone(), vec![], rc.clone()).unwrap().run().unwrap().0
        };
        prop_assert_eq!(run().to_text(), run().to_text());
    }
}
