use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geo::{BBox, Polyline};

pub type RoadId = u64;

#[derive(Debug, Clone, PartialEq)]
pub struct Road {
    pub id: RoadId,
    pub geometry: Polyline,
}

/// A set of roads with unique ids, kept in input order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RoadNetwork {
    roads: Vec<Road>,
    by_id: HashMap<RoadId, usize>,
}

impl RoadNetwork {
    pub fn new(roads: Vec<Road>) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(roads.len());
        for (i, road) in roads.iter().enumerate() {
            if by_id.insert(road.id, i).is_some() {
                return Err(Error::Validation(format!("duplicate road id {}", road.id)));
            }
        }
        Ok(Self { roads, by_id })
    }

    /// Assigns ids 0..n-1 in order.
    pub fn from_polylines(lines: Vec<Polyline>) -> Self {
        let roads = lines
            .into_iter()
            .enumerate()
            .map(|(i, geometry)| Road {
                id: i as RoadId,
                geometry,
            })
            .collect();
        Self::new(roads).expect("sequential ids are unique")
    }

    pub fn roads(&self) -> &[Road] {
        &self.roads
    }

    pub fn len(&self) -> usize {
        self.roads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roads.is_empty()
    }

    pub fn get(&self, id: RoadId) -> Option<&Road> {
        self.by_id.get(&id).map(|&i| &self.roads[i])
    }

    pub fn bbox(&self) -> Option<BBox> {
        self.roads
            .iter()
            .map(|r| r.geometry.bbox())
            .reduce(|a, b| a.union(&b))
    }
}
