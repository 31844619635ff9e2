use super::PixelCoord;

/// Integer Bresenham rasterization of the segment between two cells.
///
/// Both endpoints are included, consecutive cells are 8-connected and no cell
/// repeats. The path is always traced from the endpoint with the smaller
/// `(row, col)` and reversed if needed, so `bresenham_line(q, p)` is exactly
/// `bresenham_line(p, q)` reversed.
pub fn bresenham_line(p: PixelCoord, q: PixelCoord) -> Vec<PixelCoord> {
    if q < p {
        let mut path = trace(q, p);
        path.reverse();
        return path;
    }
    trace(p, q)
}

fn trace(from: PixelCoord, to: PixelCoord) -> Vec<PixelCoord> {
    let (mut x, mut y) = (from.col as i64, from.row as i64);
    let (x1, y1) = (to.col as i64, to.row as i64);
    let dx = (x1 - x).abs();
    let dy = -(y1 - y).abs();
    let sx = if x < x1 { 1 } else { -1 };
    let sy = if y < y1 { 1 } else { -1 };
    let mut err = dx + dy;

    let mut path = Vec::with_capacity((dx.max(-dy) + 1) as usize);
    loop {
        path.push(PixelCoord::new(y as usize, x as usize));
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
    path
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pc(r: usize, c: usize) -> PixelCoord {
        PixelCoord::new(r, c)
    }

    #[test]
    fn degenerate_and_axis_aligned() {
        assert_eq!(bresenham_line(pc(0, 0), pc(0, 0)), vec![pc(0, 0)]);
        assert_eq!(
            bresenham_line(pc(0, 0), pc(0, 3)),
            vec![pc(0, 0), pc(0, 1), pc(0, 2), pc(0, 3)]
        );
        assert_eq!(
            bresenham_line(pc(3, 1), pc(0, 1)),
            vec![pc(3, 1), pc(2, 1), pc(1, 1), pc(0, 1)]
        );
    }

    #[test]
    fn shallow_line_path() {
        assert_eq!(
            bresenham_line(pc(0, 0), pc(2, 3)),
            vec![pc(0, 0), pc(1, 1), pc(1, 2), pc(2, 3)]
        );
    }

    #[test]
    fn reversal_symmetry_exhaustive() {
        let base = 10usize;
        for r in 0..=20 {
            for c in 0..=20 {
                let p = pc(base, base);
                let q = pc(r, c);
                let mut back = bresenham_line(q, p);
                back.reverse();
                let fwd = bresenham_line(p, q);
                assert_eq!(fwd, back, "{p:?} -> {q:?}");
                assert_eq!(fwd.first(), Some(&p));
                assert_eq!(fwd.last(), Some(&q));
                for w in fwd.windows(2) {
                    let dr = w[0].row.abs_diff(w[1].row);
                    let dc = w[0].col.abs_diff(w[1].col);
                    assert!(dr <= 1 && dc <= 1 && dr + dc > 0);
                }
                // one cell per step along the major axis
                let major = base.abs_diff(r).max(base.abs_diff(c));
                assert_eq!(fwd.len(), major + 1);
            }
        }
    }
}
