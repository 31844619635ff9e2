//! GeoJSON `FeatureCollection` of `LineString` features.

use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::geo::{GeoCoord, Polyline};
use crate::roads::{Road, RoadId, RoadNetwork};

#[derive(Debug, Clone, Copy, Default)]
pub struct RoadParseOptions {
    /// Round coordinates to this many decimal places on ingestion.
    pub decimals: Option<u32>,
}

// Plain structs with a one-variant `type` enum (rather than internally tagged
// enums) keep serde's error positions on the offending token.
#[derive(Deserialize)]
enum CollectionKind {
    FeatureCollection,
}

#[derive(Deserialize)]
enum FeatureKind {
    Feature,
}

#[derive(Deserialize)]
enum GeometryKind {
    LineString,
}

#[derive(Deserialize)]
struct Collection {
    #[serde(rename = "type")]
    _kind: CollectionKind,
    features: Vec<Feature>,
}

#[derive(Deserialize)]
struct Feature {
    #[serde(rename = "type")]
    _kind: FeatureKind,
    geometry: Geometry,
    #[serde(default)]
    properties: Option<Map<String, Value>>,
}

#[derive(Deserialize)]
struct Geometry {
    #[serde(rename = "type")]
    _kind: GeometryKind,
    coordinates: Vec<Vec<f64>>,
}

pub fn parse_roads(text: &str) -> Result<RoadNetwork> {
    parse_roads_with(text, RoadParseOptions::default())
}

pub fn parse_roads_with(text: &str, opts: RoadParseOptions) -> Result<RoadNetwork> {
    let Collection { features, .. } = serde_json::from_str(text).map_err(|e| Error::parse(e.line().max(1), e.to_string()))?;

    let mut roads = Vec::with_capacity(features.len());
    for (i, Feature { geometry, properties, .. }) in features.into_iter().enumerate() {
        let coordinates = geometry.coordinates;
        let mut points = Vec::with_capacity(coordinates.len());
        for pos in coordinates {
            if pos.len() < 2 {
                return Err(Error::Validation(format!(
                    "feature {i}: position with {} ordinates",
                    pos.len()
                )));
            }
            let c = GeoCoord::new(pos[0], pos[1]);
            points.push(match opts.decimals {
                Some(d) => c.quantized(d),
                None => c,
            });
        }
        let geometry = Polyline::new(points)
            .map_err(|e| Error::Validation(format!("feature {i}: {e}")))?;
        let id = match properties.as_ref().and_then(|p| p.get("id")) {
            None | Some(Value::Null) => i as RoadId,
            Some(v) => v.as_u64().ok_or_else(|| {
                Error::Validation(format!("feature {i}: id must be a non-negative integer, got {v}"))
            })?,
        };
        roads.push(Road { id, geometry });
    }
    RoadNetwork::new(roads)
}

pub fn write_roads(roads: &RoadNetwork) -> String {
    let features: Vec<Value> = roads
        .roads()
        .iter()
        .map(|r| {
            let coords: Vec<Value> = r.geometry.points().iter().map(|c| json!([c.x, c.y])).collect();
            json!({
                "type": "Feature",
                "properties": { "id": r.id },
                "geometry": { "type": "LineString", "coordinates": coords },
            })
        })
        .collect();
    let doc = json!({ "type": "FeatureCollection", "features": features });
    let mut s = serde_json::to_string_pretty(&doc).expect("JSON values always serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE: &str = r#"{"type":"FeatureCollection","features":[
        {"type":"Feature","properties":{},"geometry":{"type":"LineString","coordinates":[[0,0],[1,1]]}}
    ]}"#;

    #[test]
    fn minimal_collection() {
        let net = parse_roads(ONE).unwrap();
        assert_eq!(net.len(), 1);
        assert_eq!(net.roads()[0].id, 0);
        assert_eq!(net.roads()[0].geometry.points().len(), 2);
    }

    #[test]
    fn truncated_text_is_parse_error() {
        let err = parse_roads(&ONE[..ONE.len() - 10]).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err}");
    }

    #[test]
    fn trailing_garbage_is_parse_error() {
        let err = parse_roads(&format!("{ONE}\n x")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
    }

    #[test]
    fn unsupported_geometry_is_parse_error() {
        let text = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","geometry":{"type":"Point","coordinates":[0,0]}}]}"#;
        let err = parse_roads(text).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn single_point_is_validation_error() {
        let text = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","geometry":{"type":"LineString","coordinates":[[0,0],[0,0]]}}]}"#;
        assert!(matches!(parse_roads(text), Err(Error::Validation(_))));
    }

    #[test]
    fn explicit_ids_and_duplicates() {
        let text = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","properties":{"id":42},"geometry":{"type":"LineString","coordinates":[[0,0],[1,0]]}},
            {"type":"Feature","properties":{"id":42},"geometry":{"type":"LineString","coordinates":[[0,0],[1,0]]}}]}"#;
        assert!(matches!(parse_roads(text), Err(Error::Validation(_))));
        let net = parse_roads(&text.replacen("42", "5", 1)).unwrap();
        assert_eq!(net.roads()[0].id, 5);
    }

    #[test]
    fn quantization_rounds_coordinates() {
        let text = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","geometry":{"type":"LineString","coordinates":[[0.123456,1.987654,3.0],[1,1]]}}]}"#;
        let net = parse_roads_with(text, RoadParseOptions { decimals: Some(2) }).unwrap();
        assert_eq!(net.roads()[0].geometry.points()[0], GeoCoord::new(0.12, 1.99));
    }

    #[test]
    fn write_then_parse() {
        let net = parse_roads(ONE).unwrap();
        assert_eq!(parse_roads(&write_roads(&net)).unwrap(), net);
    }
}
