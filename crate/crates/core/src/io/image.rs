//! Binary PGM/PPM output for quick visual inspection of grids.

use std::io::Write;

use crate::error::{Error, Result};

/// Writes a binary greyscale PGM (P5). Values are min-max scaled to 0..=255;
/// a constant grid maps to 0.
pub fn write_pgm<W: Write>(mut out: W, width: usize, height: usize, values: &[f64]) -> Result<()> {
    if values.len() != width * height {
        return Err(Error::DimensionMismatch(format!(
            "{} values for a {width}x{height} image",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Value("PGM values must be finite".into()));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let bytes: Vec<u8> = values
        .iter()
        .map(|&v| {
            if span > 0.0 {
                ((v - lo) / span * 255.0).round() as u8
            } else {
                0
            }
        })
        .collect();
    write!(out, "P5\n{width} {height}\n255\n")?;
    out.write_all(&bytes)?;
    Ok(())
}

/// Writes a binary colour PPM (P6), mapping each category through `palette`.
pub fn write_ppm<W, C, F>(mut out: W, width: usize, height: usize, cells: &[C], palette: F) -> Result<()>
where
    W: Write,
    C: Copy,
    F: Fn(C) -> [u8; 3],
{
    if cells.len() != width * height {
        return Err(Error::DimensionMismatch(format!(
            "{} cells for a {width}x{height} image",
            cells.len()
        )));
    }
    write!(out, "P6\n{width} {height}\n255\n")?;
    let mut bytes = Vec::with_capacity(cells.len() * 3);
    for &c in cells {
        bytes.extend_from_slice(&palette(c));
    }
    out.write_all(&bytes)?;
    Ok(())
}

/// Splits a P5/P6 file into `(magic, width, height, pixel bytes)`.
pub fn parse_pnm(data: &[u8]) -> Result<(&str, usize, usize, &[u8])> {
    let mut fields = Vec::with_capacity(4);
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < data.len() && data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < data.len() && !data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::parse(1, "truncated PNM header"));
        }
        fields.push(std::str::from_utf8(&data[start..pos]).map_err(|_| Error::parse(1, "bad PNM header"))?);
    }
    pos += 1;
    let magic = fields[0];
    let w: usize = fields[1].parse().map_err(|_| Error::parse(1, "bad PNM width"))?;
    let h: usize = fields[2].parse().map_err(|_| Error::parse(1, "bad PNM height"))?;
    let channels = match magic {
        "P5" => 1,
        "P6" => 3,
        other => return Err(Error::parse(1, format!("unsupported PNM magic {other}"))),
    };
    let body = data.get(pos..).unwrap_or_default();
    if body.len() != w * h * channels {
        return Err(Error::parse(1, "PNM pixel data length does not match header"));
    }
    Ok((magic, w, h, body))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_grid_is_black() {
        let mut buf = Vec::new();
        write_pgm(&mut buf, 2, 2, &[3.0; 4]).unwrap();
        let (magic, w, h, px) = parse_pnm(&buf).unwrap();
        assert_eq!((magic, w, h), ("P5", 2, 2));
        assert_eq!(px, &[0, 0, 0, 0]);
    }

    #[test]
    fn two_values_span_full_range() {
        let mut buf = Vec::new();
        write_pgm(&mut buf, 2, 1, &[0.0, 1.0]).unwrap();
        assert_eq!(parse_pnm(&buf).unwrap().3, &[0, 255]);
    }

    #[test]
    fn non_finite_rejected() {
        assert!(write_pgm(Vec::new(), 1, 1, &[f64::NAN]).is_err());
    }

    #[test]
    fn ppm_palette_applied() {
        let mut buf = Vec::new();
        write_ppm(&mut buf, 2, 1, &[true, false], |b| if b { [1, 2, 3] } else { [4, 5, 6] }).unwrap();
        assert_eq!(parse_pnm(&buf).unwrap().3, &[1, 2, 3, 4, 5, 6]);
    }
}
