use roadgrowth_core::index::{build_road_index, ExtentPolicy};
use roadgrowth_core::synth::{generate, generate_with_stats, persistence, SynthConfig};
use roadgrowth_core::Land;

fn cfg(seed: u64) -> SynthConfig {
    SynthConfig { seed, ..SynthConfig::default() }
}

#[test]
fn default_persistence_in_band() {
    for seed in 0..10 {
        let s = generate(&cfg(seed)).unwrap();
        let p = persistence(&s.t0, &s.t1).unwrap();
        assert!((0.80..=0.95).contains(&p), "seed {seed}: persistence {p}");
    }
}

#[test]
fn growth_is_monotone_and_seeded() {
    for seed in 0..5 {
        let s = generate(&cfg(seed)).unwrap();
        for (a, b) in [(&s.t0, &s.t1), (&s.t1, &s.t2)] {
            for (x, y) in a.cells().iter().zip(b.cells()) {
                assert!(!(*x == Land::Builtup && *y != Land::Builtup), "built-up cell reverted");
            }
        }
        assert!(s.t1.builtup_count() > s.t0.builtup_count());
        assert!(s.t2.builtup_count() > s.t1.builtup_count());
        assert_eq!(s, generate(&cfg(seed)).unwrap());
    }
    assert_ne!(generate(&cfg(0)).unwrap().t1, generate(&cfg(1)).unwrap().t1);
}

#[test]
fn growth_prefers_cells_near_roads() {
    let (mut near, mut far) = ((0usize, 0usize), (0usize, 0usize));
    for seed in 0..10 {
        let (_, stats) = generate_with_stats(&cfg(seed)).unwrap();
        for st in stats {
            near.0 += st.near_converted;
            near.1 += st.near_candidates;
            far.0 += st.far_converted;
            far.1 += st.far_candidates;
        }
    }
    let p_near = near.0 as f64 / near.1 as f64;
    let p_far = far.0 as f64 / far.1.max(1) as f64;
    assert!(p_near > p_far, "near {p_near} vs far {p_far}");
}

#[test]
fn seeds_sit_on_roads() {
    let c = cfg(3);
    let s = generate(&c).unwrap();
    let index = build_road_index(&s.roads, &c.transform().unwrap(), ExtentPolicy::Error).unwrap();
    assert!(index.nonempty_count() > 0);
    // every 3x3 seed block is centred on a road cell, so built-up cells at t0
    // lie within one cell of a road
    let gt = s.t0.transform;
    for i in 0..gt.n_cells() {
        let p = gt.pixel_at(i);
        if s.t0.get(p) == Land::Builtup {
            assert!(gt.window(p, 1).any(|q| !index.get(q).is_empty()), "t0 cell {p:?} far from roads");
        }
    }
}
