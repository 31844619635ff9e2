//! Land-change validation: the A–E area taxonomy and the figure of merit,
//! producer's, user's and overall accuracy.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::raster::{BuiltupGrid, Land};

/// Cell counts per agreement category.
///
/// * `a`: observed change predicted as persistence
/// * `b`: observed change predicted as change
/// * `c`: observed change predicted as the wrong gaining category, always 0
///   with a single gaining class
/// * `d`: observed persistence predicted as change
/// * `e`: observed persistence predicted as persistence
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ChangeAreas {
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub d: u64,
    pub e: u64,
}

/// Category of one cell, used for error maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChangeClass {
    Miss,
    Hit,
    WrongHit,
    FalseAlarm,
    CorrectRejection,
    NoData,
}

impl ChangeClass {
    /// Observed and predicted change are judged against `t0`; cells that are
    /// no-data in any grid are `NoData`.
    pub fn classify(t0: Land, t1: Land, pred: Land) -> Self {
        if !(t0.is_valid() && t1.is_valid() && pred.is_valid()) {
            return ChangeClass::NoData;
        }
        let observed = t0 != t1;
        let predicted = t0 != pred;
        match (observed, predicted) {
            (true, false) => ChangeClass::Miss,
            (true, true) => ChangeClass::Hit,
            (false, true) => ChangeClass::FalseAlarm,
            (false, false) => ChangeClass::CorrectRejection,
        }
    }

    /// Error-map colour: white for correct persistence, green for hits, blue
    /// for misses, red for false alarms.
    pub fn color(self) -> [u8; 3] {
        match self {
            ChangeClass::CorrectRejection => [255, 255, 255],
            ChangeClass::Hit => [0, 255, 0],
            ChangeClass::Miss => [0, 0, 255],
            ChangeClass::FalseAlarm => [255, 0, 0],
            ChangeClass::WrongHit => [255, 200, 0],
            ChangeClass::NoData => [0, 0, 0],
        }
    }
}

/// Per-cell categories in row-major order.
pub fn change_map(t0: &BuiltupGrid, t1: &BuiltupGrid, pred: &BuiltupGrid) -> Result<Vec<ChangeClass>> {
    t0.ensure_aligned(t1)?;
    t0.ensure_aligned(pred)?;
    Ok(t0
        .cells()
        .iter()
        .zip(t1.cells())
        .zip(pred.cells())
        .map(|((&a, &b), &p)| ChangeClass::classify(a, b, p))
        .collect())
}

pub fn compute_areas(t0: &BuiltupGrid, t1: &BuiltupGrid, pred: &BuiltupGrid) -> Result<ChangeAreas> {
    let mut areas = ChangeAreas::default();
    for class in change_map(t0, t1, pred)? {
        match class {
            ChangeClass::Miss => areas.a += 1,
            ChangeClass::Hit => areas.b += 1,
            ChangeClass::WrongHit => areas.c += 1,
            ChangeClass::FalseAlarm => areas.d += 1,
            ChangeClass::CorrectRejection => areas.e += 1,
            ChangeClass::NoData => {}
        }
    }
    Ok(areas)
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl ChangeAreas {
    pub fn total(&self) -> u64 {
        self.a + self.b + self.c + self.d + self.e
    }

    /// `B / (A + B + C + D)`
    pub fn fom(&self) -> Option<f64> {
        ratio(self.b, self.a + self.b + self.c + self.d)
    }

    /// `B / (A + B + C)`
    pub fn pa(&self) -> Option<f64> {
        ratio(self.b, self.a + self.b + self.c)
    }

    /// `B / (B + C + D)`
    pub fn ua(&self) -> Option<f64> {
        ratio(self.b, self.b + self.c + self.d)
    }

    /// `(B + E) / (A + B + C + D + E)`
    pub fn oa(&self) -> Option<f64> {
        ratio(self.b + self.e, self.total())
    }

    pub fn scores(&self) -> Scores {
        Scores {
            fom: self.fom(),
            pa: self.pa(),
            ua: self.ua(),
            oa: self.oa(),
        }
    }
}

pub fn fom(areas: &ChangeAreas) -> Option<f64> {
    areas.fom()
}

pub fn pa(areas: &ChangeAreas) -> Option<f64> {
    areas.pa()
}

pub fn ua(areas: &ChangeAreas) -> Option<f64> {
    areas.ua()
}

pub fn oa(areas: &ChangeAreas) -> Option<f64> {
    areas.oa()
}

/// The four metrics; `None` where a denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Scores {
    pub fom: Option<f64>,
    pub pa: Option<f64>,
    pub ua: Option<f64>,
    pub oa: Option<f64>,
}

/// Formats a metric for CSV output: shortest round-trip form or `NA`.
pub fn format_metric(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x}"),
        None => "NA".to_string(),
    }
}

pub fn parse_metric(s: &str) -> Result<Option<f64>> {
    if s == "NA" {
        return Ok(None);
    }
    s.parse()
        .map(Some)
        .map_err(|_| Error::Value(format!("metric value {s:?} is neither a number nor NA")))
}

/// One row of the metrics table.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub scenario: String,
    pub rep_size: usize,
    pub epoch: usize,
    pub method: String,
    pub scores: Scores,
}

pub const METRICS_HEADER: &str = "scenario,rep_size,epoch,method,FoM,PA,UA,OA";

pub fn write_metrics_csv(rows: &[MetricsRow]) -> String {
    let mut s = String::from(METRICS_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.scenario,
            r.rep_size,
            r.epoch,
            r.method,
            format_metric(r.scores.fom),
            format_metric(r.scores.pa),
            format_metric(r.scores.ua),
            format_metric(r.scores.oa)
        );
    }
    s
}

pub fn read_metrics_csv(text: &str) -> Result<Vec<MetricsRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(METRICS_HEADER) => {}
        _ => return Err(Error::parse(1, format!("expected header {METRICS_HEADER:?}"))),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let ln = i + 2;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(Error::parse(ln, format!("expected 8 fields, found {}", f.len())));
        }
        let num = |s: &str| s.parse::<usize>().map_err(|_| Error::parse(ln, format!("bad integer {s:?}")));
        let metric = |s: &str| parse_metric(s).map_err(|e| Error::parse(ln, e.to_string()));
        rows.push(MetricsRow {
            scenario: f[0].to_string(),
            rep_size: num(f[1])?,
            epoch: num(f[2])?,
            method: f[3].to_string(),
            scores: Scores {
                fom: metric(f[4])?,
                pa: metric(f[5])?,
                ua: metric(f[6])?,
                oa: metric(f[7])?,
            },
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::GeoTransform;

    fn grid(built: &[usize]) -> BuiltupGrid {
        let gt = GeoTransform::new(0.0, 4.0, 1.0, 1.0, 4, 4).unwrap();
        BuiltupGrid::new(gt, (0..16).map(|i| Land::from_bool(built.contains(&i))).collect()).unwrap()
    }

    #[test]
    fn hand_example() {
        let t0 = grid(&[]);
        let t1 = grid(&[0, 1, 2, 3]);
        let pred = grid(&[0, 1, 2, 8, 9]);
        let a = compute_areas(&t0, &t1, &pred).unwrap();
        assert_eq!(a, ChangeAreas { a: 1, b: 3, c: 0, d: 2, e: 10 });
        assert_eq!(a.fom(), Some(0.5));
        assert_eq!(a.pa(), Some(0.75));
        assert_eq!(a.ua(), Some(0.6));
        assert_eq!(a.oa(), Some(0.8125));
    }

    #[test]
    fn perfect_and_persistence_predictions() {
        let t0 = grid(&[5]);
        let t1 = grid(&[5, 6, 7]);
        let perfect = compute_areas(&t0, &t1, &t1).unwrap();
        assert_eq!((perfect.a, perfect.b, perfect.d, perfect.e), (0, 2, 0, 14));
        let persist = compute_areas(&t0, &t1, &t0).unwrap();
        assert_eq!((persist.b, persist.d), (0, 0));
    }

    #[test]
    fn all_perfect_scores() {
        let a = ChangeAreas { a: 0, b: 10, c: 0, d: 0, e: 6 };
        assert_eq!(a.scores(), Scores { fom: Some(1.0), pa: Some(1.0), ua: Some(1.0), oa: Some(1.0) });
    }

    #[test]
    fn undefined_metrics() {
        let a = ChangeAreas { e: 5, ..Default::default() };
        assert_eq!(a.fom(), None);
        assert_eq!(a.pa(), None);
        assert_eq!(a.ua(), None);
        assert_eq!(a.oa(), Some(1.0));
        assert_eq!(ChangeAreas::default().oa(), None);
        assert_eq!(format_metric(None), "NA");
    }

    #[test]
    fn nodata_cells_skipped() {
        let t0 = grid(&[]);
        let mut t1 = grid(&[0]);
        t1.set(crate::geo::PixelCoord::new(3, 3), Land::NoData);
        assert_eq!(compute_areas(&t0, &t1, &t1).unwrap().total(), 15);
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![MetricsRow {
            scenario: "s0".into(),
            rep_size: 6,
            epoch: 20,
            method: "roads-repr".into(),
            scores: Scores { fom: Some(0.125), pa: None, ua: Some(1.0 / 3.0), oa: Some(0.9) },
        }];
        let text = write_metrics_csv(&rows);
        assert!(text.contains(",NA,"));
        assert_eq!(read_metrics_csv(&text).unwrap(), rows);
    }
}
