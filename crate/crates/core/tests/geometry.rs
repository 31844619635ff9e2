use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use roadgrowth_core::geo::{bresenham_line, clip_polyline};
use roadgrowth_core::{BBox, GeoCoord, GeoTransform, PixelCoord, Polyline};
use roadgrowth_testkit::{check_digital_line, dense_sample_cells, inside_length, polyline_length};

fn random_polyline(rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
    let n = rng.gen_range(2..8);
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(n);
    while pts.len() < n {
        // snap some vertices to the box lines to exercise boundary cases
        let mut v = || match rng.gen_range(0..6) {
            0 => 0.0,
            1 => 1.0,
            _ => rng.gen_range(-1.0..2.0),
        };
        let p = (v(), v());
        if pts.last() != Some(&p) {
            pts.push(p);
        }
    }
    pts
}

#[test]
fn clipping_invariants_on_random_polylines() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let bbox = BBox::new(0.0, 0.0, 1.0, 1.0).unwrap();
    let eps = 1e-9;
    for _ in 0..1000 {
        let pts = random_polyline(&mut rng);
        let line = Polyline::new(pts.iter().map(|&(x, y)| GeoCoord::new(x, y)).collect()).unwrap();
        let pieces = clip_polyline(&line, &bbox);
        let mut clipped = 0.0;
        for piece in &pieces {
            let p = piece.points();
            assert!(p.len() >= 2);
            for c in p {
                assert!(c.x >= -eps && c.x <= 1.0 + eps && c.y >= -eps && c.y <= 1.0 + eps, "{c:?} outside");
            }
            // interior points are input vertices
            for c in &p[1..p.len() - 1] {
                assert!(pts.contains(&(c.x, c.y)), "interior point {c:?} is not an input vertex");
            }
            clipped += polyline_length(&p.iter().map(|c| (c.x, c.y)).collect::<Vec<_>>());
        }
        let original = polyline_length(&pts);
        let expected = inside_length(&pts, (0.0, 0.0, 1.0, 1.0));
        assert!(clipped <= original * (1.0 + 1e-9) + 1e-12);
        assert!(
            (clipped - expected).abs() <= 1e-6 * original.max(1e-9),
            "clipped length {clipped} vs oracle {expected} for {pts:?}"
        );
    }
}

#[test]
fn bresenham_against_dense_sampling() {
    for r in 0..=10i64 {
        for c in 0..=10i64 {
            for (r0, c0) in [(0i64, 0i64), (10, 0), (5, 5), (0, 10)] {
                let (p, q) = ((r0, c0), (r, c));
                let cells: Vec<(i64, i64)> =
                    bresenham_line(PixelCoord::new(p.0 as usize, p.1 as usize), PixelCoord::new(q.0 as usize, q.1 as usize))
                        .into_iter()
                        .map(|x| (x.row as i64, x.col as i64))
                        .collect();
                check_digital_line(p, q, &cells).unwrap();
                let sampled = dense_sample_cells(p, q, 0.01);
                for cell in &cells {
                    assert!(sampled.contains(cell), "{cell:?} not on the ideal segment {p:?}->{q:?}");
                }
            }
        }
    }
}

#[test]
fn bresenham_two_by_three_path() {
    let cells = bresenham_line(PixelCoord::new(0, 0), PixelCoord::new(2, 3));
    let sampled = dense_sample_cells((0, 0), (2, 3), 0.01);
    assert_eq!(cells.len(), 4);
    let cols: Vec<usize> = cells.iter().map(|c| c.col).collect();
    assert_eq!(cols, vec![0, 1, 2, 3]);
    assert!(cells.iter().all(|c| sampled.contains(&(c.row as i64, c.col as i64))));
}

proptest! {
    #[test]
    fn pixel_center_round_trip(rows in 1usize..40, cols in 1usize..40, w in 0.1f64..50.0, h in 0.1f64..50.0,
                               ox in -1e5f64..1e5, oy in -1e5f64..1e5, pick in 0usize..10_000) {
        let gt = GeoTransform::new(ox, oy, w, h, rows, cols).unwrap();
        let p = gt.pixel_at(pick % gt.n_cells());
        let center = gt.pixel_to_bbox(p).unwrap().center();
        prop_assert_eq!(gt.coord_to_pixel(center).unwrap(), p);
    }

    #[test]
    fn bresenham_reverse_is_reversed(a in 0usize..30, b in 0usize..30, c in 0usize..30, d in 0usize..30) {
        let (p, q) = (PixelCoord::new(a, b), PixelCoord::new(c, d));
        let mut back = bresenham_line(q, p);
        back.reverse();
        prop_assert_eq!(bresenham_line(p, q), back);
    }
}
