use super::{BBox, GeoCoord, Polyline};

/// Liang–Barsky parametric clip of segment `a -> b` against the closed box.
///
/// Returns the parameter interval `[t0, t1]` of the visible part, or `None`
/// when the segment misses the box. The interval may be a single point.
pub fn clip_segment(a: GeoCoord, b: GeoCoord, bbox: &BBox) -> Option<(f64, f64)> {
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    let mut t0 = 0.0_f64;
    let mut t1 = 1.0_f64;
    let edges = [
        (-dx, a.x - bbox.min_x),
        (dx, bbox.max_x - a.x),
        (-dy, a.y - bbox.min_y),
        (dy, bbox.max_y - a.y),
    ];
    for (p, q) in edges {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
            continue;
        }
        let r = q / p;
        if p < 0.0 {
            if r > t1 {
                return None;
            }
            if r > t0 {
                t0 = r;
            }
        } else {
            if r < t0 {
                return None;
            }
            if r < t1 {
                t1 = r;
            }
        }
    }
    Some((t0, t1))
}

fn point_at(a: GeoCoord, b: GeoCoord, t: f64, bbox: &BBox) -> GeoCoord {
    if t <= 0.0 {
        return a;
    }
    if t >= 1.0 {
        return b;
    }
    GeoCoord::new(
        (a.x + t * (b.x - a.x)).clamp(bbox.min_x, bbox.max_x),
        (a.y + t * (b.y - a.y)).clamp(bbox.min_y, bbox.max_y),
    )
}

/// Clips a polyline to a closed box.
///
/// Each returned piece is a maximal connected run of the input inside the box,
/// in traversal order. Crossing segments are cut at their parametric
/// intersection with the boundary; every other vertex of a piece is an input
/// vertex. Runs that collapse to a single point (a corner touch) are dropped.
pub fn clip_polyline(poly: &Polyline, bbox: &BBox) -> Vec<Polyline> {
    let mut pieces = Vec::new();
    let mut current: Vec<GeoCoord> = Vec::new();

    let mut flush = |current: &mut Vec<GeoCoord>| {
        if current.len() >= 2 {
            pieces.push(Polyline {
                points: std::mem::take(current),
            });
        } else {
            current.clear();
        }
    };

    for (a, b) in poly.segments() {
        let Some((t0, t1)) = clip_segment(a, b, bbox) else {
            flush(&mut current);
            continue;
        };
        if t0 > 0.0 {
            flush(&mut current);
        }
        let entry = point_at(a, b, t0, bbox);
        let exit = point_at(a, b, t1, bbox);
        if current.is_empty() {
            current.push(entry);
        }
        if current.last() != Some(&exit) {
            current.push(exit);
        }
        if t1 < 1.0 {
            flush(&mut current);
        }
    }
    flush(&mut current);
    pieces
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64, y: f64) -> GeoCoord {
        GeoCoord::new(x, y)
    }

    fn unit() -> BBox {
        BBox::new(0.0, 0.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn inside_is_unchanged() {
        let p = Polyline::new(vec![c(0.1, 0.1), c(0.5, 0.9), c(0.9, 0.2)]).unwrap();
        assert_eq!(clip_polyline(&p, &unit()), vec![p]);
    }

    #[test]
    fn outside_is_empty() {
        let p = Polyline::new(vec![c(2.0, 2.0), c(3.0, 5.0)]).unwrap();
        assert!(clip_polyline(&p, &unit()).is_empty());
    }

    #[test]
    fn horizontal_crossing_by_hand() {
        let p = Polyline::new(vec![c(-1.0, 0.5), c(2.0, 0.5)]).unwrap();
        let out = clip_polyline(&p, &unit());
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].points(), &[c(0.0, 0.5), c(1.0, 0.5)]);
    }

    #[test]
    fn exit_and_reentry_gives_two_pieces() {
        let p = Polyline::new(vec![c(0.5, 0.5), c(0.5, 2.0), c(0.8, 2.0), c(0.8, 0.5)]).unwrap();
        let out = clip_polyline(&p, &unit());
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].points(), &[c(0.5, 0.5), c(0.5, 1.0)]);
        assert_eq!(out[1].points(), &[c(0.8, 1.0), c(0.8, 0.5)]);
    }

    #[test]
    fn boundary_run_is_kept() {
        let p = Polyline::new(vec![c(-1.0, 1.0), c(2.0, 1.0)]).unwrap();
        let out = clip_polyline(&p, &unit());
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].points(), &[c(0.0, 1.0), c(1.0, 1.0)]);
    }

    #[test]
    fn corner_touch_is_dropped() {
        let p = Polyline::new(vec![c(-1.0, 1.0), c(0.0, 0.0), c(1.0, -1.0)]).unwrap();
        let q = Polyline::new(vec![c(2.0, 0.0), c(1.0, 1.0), c(2.0, 2.0)]).unwrap();
        assert!(clip_polyline(&p, &unit()).is_empty());
        assert!(clip_polyline(&q, &unit()).is_empty());
    }

    #[test]
    fn vertex_on_boundary_continues_piece() {
        let p = Polyline::new(vec![c(0.2, 0.2), c(1.0, 0.5), c(0.2, 0.8)]).unwrap();
        let out = clip_polyline(&p, &unit());
        assert_eq!(out, vec![p]);
    }
}
