//! `crowdsim-net/1` network files.

use std::fs;
use std::path::Path;

use crowdsim_core::geom::{Polyline, Vec2};
use crowdsim_core::roadnet::{Crossing, LaneSegment, Polygon, RoadError, RoadMap, SegmentId, SidewalkNetwork};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const FORMAT: &str = "crowdsim-net/1";

#[derive(Debug, Error)]
pub enum NetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    /// Malformed JSON or wrong shape.
    #[error("schema error: {0}")]
    Schema(String),
    /// Well-formed file describing an invalid network.
    #[error("validation error: {0}")]
    Validation(String),
}

type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentRecord {
    pub id: SegmentId,
    pub centerline: Vec<Point>,
    pub width_m: f64,
    #[serde(default)]
    pub successors: Vec<SegmentId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left_opposite_boundary: Option<Vec<Point>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right_road_edge: Option<Vec<Point>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetFile {
    pub format: String,
    pub lane_segments: Vec<SegmentRecord>,
    #[serde(default)]
    pub sidewalks: Vec<Vec<Point>>,
    /// `[sidewalk_a, arc_a, sidewalk_b, arc_b]`
    #[serde(default)]
    pub crossings: Vec<(usize, f64, usize, f64)>,
    pub region_of_interest: Vec<Point>,
    pub spawn_segments: Vec<SegmentId>,
}

fn points(p: &[Point]) -> Vec<Vec2> {
    p.iter().map(|[x, y]| Vec2::new(*x, *y)).collect()
}

fn record(v: &[Vec2]) -> Vec<Point> {
    v.iter().map(|p| [p.x, p.y]).collect()
}

fn line(p: &[Point], what: impl Fn() -> String) -> Result<Polyline, NetError> {
    Polyline::new(points(p)).map_err(|e| NetError::Validation(format!("{}: {e}", what())))
}

fn validation(e: RoadError) -> NetError {
    NetError::Validation(e.to_string())
}

impl NetFile {
    pub fn from_map(map: &RoadMap) -> NetFile {
        NetFile {
            format: FORMAT.to_string(),
            lane_segments: map
                .lanes
                .segments()
                .iter()
                .map(|s| SegmentRecord {
                    id: s.id,
                    centerline: record(s.centerline.points()),
                    width_m: s.width,
                    successors: s.successors.clone(),
                    left_opposite_boundary: s.left_opposite_boundary.as_ref().map(|l| record(l.points())),
                    right_road_edge: s.right_road_edge.as_ref().map(|l| record(l.points())),
                })
                .collect(),
            sidewalks: map.sidewalks.sidewalks().iter().map(|l| record(l.points())).collect(),
            crossings: map
                .sidewalks
                .crossings()
                .iter()
                .map(|c| (c.sidewalk_a, c.arc_a, c.sidewalk_b, c.arc_b))
                .collect(),
            region_of_interest: record(map.region_of_interest.vertices()),
            spawn_segments: map.spawn_segments.clone(),
        }
    }

    pub fn to_map(&self) -> Result<RoadMap, NetError> {
        if self.format != FORMAT {
            return Err(NetError::Schema(format!("format is {:?}, expected {FORMAT:?}", self.format)));
        }
        let mut segments = Vec::with_capacity(self.lane_segments.len());
        for s in &self.lane_segments {
            let optional = |p: &Option<Vec<Point>>, name: &str| {
                p.as_ref().map(|p| line(p, || format!("segment {} {name}", s.id))).transpose()
            };
            segments.push(LaneSegment {
                id: s.id,
                centerline: line(&s.centerline, || format!("segment {} centerline", s.id))?,
                width: s.width_m,
                successors: s.successors.clone(),
                left_opposite_boundary: optional(&s.left_opposite_boundary, "left_opposite_boundary")?,
                right_road_edge: optional(&s.right_road_edge, "right_road_edge")?,
            });
        }
        let sidewalks = self
            .sidewalks
            .iter()
            .enumerate()
            .map(|(i, p)| line(p, || format!("sidewalk {i}")))
            .collect::<Result<Vec<_>, _>>()?;
        let crossings = self
            .crossings
            .iter()
            .map(|&(sidewalk_a, arc_a, sidewalk_b, arc_b)| Crossing { sidewalk_a, arc_a, sidewalk_b, arc_b })
            .collect();
        let sidewalks = SidewalkNetwork::new(sidewalks, crossings).map_err(validation)?;
        let roi = Polygon::new(points(&self.region_of_interest)).map_err(validation)?;
        RoadMap::new(segments, sidewalks, roi, self.spawn_segments.clone()).map_err(validation)
    }
}

pub fn parse(text: &str) -> Result<RoadMap, NetError> {
    let file: NetFile = serde_json::from_str(text).map_err(|e| NetError::Schema(e.to_string()))?;
    file.to_map()
}

pub fn to_string(map: &RoadMap) -> String {
    serde_json::to_string_pretty(&NetFile::from_map(map)).expect("network serializes")
}

pub fn load(path: &Path) -> Result<RoadMap, NetError> {
    let text = fs::read_to_string(path).map_err(|source| NetError::Io { path: path.display().to_string(), source })?;
    parse(&text)
}

pub fn save(map: &RoadMap, path: &Path) -> std::io::Result<()> {
    fs::write(path, to_string(map) + "\n")
}
