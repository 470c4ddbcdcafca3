//! GeoJSON road labels and graph serialization.

use std::collections::{BTreeMap, HashMap};

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::geometry::{polyline_length, Point};
use crate::graph::{Edge, NodeId, RoadNetwork};
use crate::raster::{GeoTransform, RoadLine, VectorRoadSet};

/// Parsed label set plus the number of features skipped as non-lines.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadsRead {
    pub roads: VectorRoadSet,
    pub skipped: usize,
}

fn parse_json(bytes: &[u8]) -> Result<Value> {
    serde_json::from_slice(bytes).map_err(|e| Error::Parse {
        offset: byte_offset(bytes, e.line(), e.column()),
        message: e.to_string(),
    })
}

fn byte_offset(bytes: &[u8], line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let mut current = 1;
    for (i, &b) in bytes.iter().enumerate() {
        if current == line {
            return (i + column.saturating_sub(1)).min(bytes.len());
        }
        if b == b'\n' {
            current += 1;
        }
    }
    bytes.len()
}

fn data(msg: impl Into<String>) -> Error {
    Error::Data(msg.into())
}

fn position(v: &Value) -> Result<Point> {
    let arr = v
        .as_array()
        .ok_or_else(|| data("coordinate is not an array"))?;
    if arr.len() < 2 {
        return Err(data("coordinate needs at least 2 numbers"));
    }
    let x = arr[0]
        .as_f64()
        .ok_or_else(|| data("coordinate is not numeric"))?;
    let y = arr[1]
        .as_f64()
        .ok_or_else(|| data("coordinate is not numeric"))?;
    if !x.is_finite() || !y.is_finite() {
        return Err(data(format!("non-finite coordinate ({x}, {y})")));
    }
    Ok([x, y])
}

fn line_coords(v: &Value) -> Result<Vec<Point>> {
    v.as_array()
        .ok_or_else(|| data("LineString coordinates are not an array"))?
        .iter()
        .map(position)
        .collect()
}

fn features(root: &Value) -> Result<&Vec<Value>> {
    if root.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(data("top-level object is not a FeatureCollection"));
    }
    root.get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| data("FeatureCollection has no features array"))
}

fn attribute_string(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Reads LineString / MultiLineString features as polylines. Consecutive
/// duplicate vertices are collapsed; lines left with fewer than 2 points and
/// non-line features are skipped and counted.
pub fn read_roads_geojson(bytes: &[u8]) -> Result<RoadsRead> {
    let root = parse_json(bytes)?;
    let mut lines = Vec::new();
    let mut skipped = 0;
    for f in features(&root)? {
        let attributes: BTreeMap<String, String> = f
            .get("properties")
            .and_then(Value::as_object)
            .map(|m| {
                m.iter()
                    .map(|(k, v)| (k.clone(), attribute_string(v)))
                    .collect()
            })
            .unwrap_or_default();
        let geom = f.get("geometry").filter(|g| !g.is_null());
        let kind = geom.and_then(|g| g.get("type")).and_then(Value::as_str);
        let coords = geom.and_then(|g| g.get("coordinates"));
        let parts: Vec<Vec<Point>> = match (kind, coords) {
            (Some("LineString"), Some(c)) => vec![line_coords(c)?],
            (Some("MultiLineString"), Some(c)) => c
                .as_array()
                .ok_or_else(|| data("MultiLineString coordinates are not an array"))?
                .iter()
                .map(line_coords)
                .collect::<Result<_>>()?,
            _ => {
                skipped += 1;
                continue;
            }
        };
        for mut pts in parts {
            pts.dedup();
            if pts.len() < 2 {
                skipped += 1;
                continue;
            }
            lines.push(RoadLine {
                points: pts,
                attributes: attributes.clone(),
            });
        }
    }
    if skipped > 0 {
        log::warn!("skipped {skipped} features without usable line geometry");
    }
    if lines.is_empty() {
        log::warn!("road label set is empty");
    }
    Ok(RoadsRead {
        roads: VectorRoadSet { lines },
        skipped,
    })
}

fn to_bytes(v: &Value) -> Vec<u8> {
    let mut out = serde_json::to_vec(v).expect("JSON values serialize");
    out.push(b'\n');
    out
}

/// Writes labels as LineString features with full coordinate precision, so
/// a write-read round trip is exact.
pub fn write_roads_geojson(roads: &VectorRoadSet) -> Vec<u8> {
    let features: Vec<Value> = roads
        .lines
        .iter()
        .map(|l| {
            let props: Map<String, Value> = l
                .attributes
                .iter()
                .map(|(k, v)| (k.clone(), Value::String(v.clone())))
                .collect();
            json!({
                "type": "Feature",
                "geometry": {"type": "LineString", "coordinates": l.points},
                "properties": props,
            })
        })
        .collect();
    to_bytes(&json!({"type": "FeatureCollection", "features": features}))
}

/// Rounds to 9 significant digits.
pub fn round_sig9(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

fn pt9(p: Point) -> Value {
    json!([round_sig9(p[0]), round_sig9(p[1])])
}

/// Graph as a FeatureCollection: Point features for nodes (ascending id),
/// then LineString features for edges ordered by `(u, v, length_m)`. Numbers
/// carry 9 significant digits; the transform is stored as a top-level
/// `geotransform` member `[a, b, c, d, e, f]`.
pub fn write_graph_geojson(g: &RoadNetwork) -> Vec<u8> {
    let mut features: Vec<Value> = g
        .nodes()
        .map(|n| {
            json!({
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": pt9(n.geo)},
                "properties": {"id": n.id},
            })
        })
        .collect();
    let mut order: Vec<&Edge> = g.edges().iter().collect();
    order.sort_by(|a, b| {
        (a.u, a.v)
            .cmp(&(b.u, b.v))
            .then(a.length_m.total_cmp(&b.length_m))
    });
    for e in order {
        let coords: Vec<Value> = e.geo_path.iter().map(|&p| pt9(p)).collect();
        features.push(json!({
            "type": "Feature",
            "geometry": {"type": "LineString", "coordinates": coords},
            "properties": {
                "u": e.u,
                "v": e.v,
                "length_m": round_sig9(e.length_m),
                "length_px": round_sig9(e.length_px),
            },
        }));
    }
    let t = g.transform();
    to_bytes(&json!({
        "type": "FeatureCollection",
        "geotransform": [t.a, t.b, t.c, t.d, t.e, t.f],
        "features": features,
    }))
}

fn read_transform(root: &Value) -> Result<GeoTransform> {
    match root.get("geotransform") {
        None | Some(Value::Null) => Ok(GeoTransform::identity()),
        Some(v) => {
            let c: Vec<f64> = v
                .as_array()
                .filter(|a| a.len() == 6)
                .ok_or_else(|| data("geotransform must be an array of 6 numbers"))?
                .iter()
                .map(|x| {
                    x.as_f64()
                        .ok_or_else(|| data("geotransform must be numeric"))
                })
                .collect::<Result<_>>()?;
            GeoTransform::new(c[0], c[1], c[2], c[3], c[4], c[5])
        }
    }
}

fn id_property(f: &Value, key: &str) -> Option<NodeId> {
    let v = f.get("properties")?.get(key)?;
    v.as_u64()
        .or_else(|| v.as_str().and_then(|s| s.parse().ok()))
}

fn f64_property(f: &Value, key: &str) -> Option<f64> {
    f.get("properties")?.get(key)?.as_f64()
}

/// Reads a graph written by [`write_graph_geojson`]. Stored edge lengths are
/// kept as written so that write-read-write reproduces the same bytes; they
/// are recomputed from the geometry only when absent. Without a
/// `geotransform` member the identity transform is used.
pub fn read_graph_geojson(bytes: &[u8]) -> Result<RoadNetwork> {
    let root = parse_json(bytes)?;
    let transform = read_transform(&root)?;
    let mut g = RoadNetwork::new(transform);
    let feats = features(&root)?;
    for f in feats {
        if f.pointer("/geometry/type").and_then(Value::as_str) == Some("Point") {
            let id =
                id_property(f, "id").ok_or_else(|| data("Point feature without an integer id"))?;
            let p = position(f.pointer("/geometry/coordinates").unwrap_or(&Value::Null))?;
            if g.node(id).is_some() {
                return Err(data(format!("duplicate node id {id}")));
            }
            g.add_node_at_geo(id, p);
        }
    }
    for f in feats {
        if f.pointer("/geometry/type").and_then(Value::as_str) != Some("LineString") {
            continue;
        }
        let (Some(u), Some(v)) = (id_property(f, "u"), id_property(f, "v")) else {
            return Err(data("LineString feature without u/v properties"));
        };
        let geo_path = line_coords(f.pointer("/geometry/coordinates").unwrap_or(&Value::Null))?;
        if geo_path.len() < 2 {
            return Err(data(format!("edge {u}-{v} has fewer than 2 points")));
        }
        let path: Vec<Point> = geo_path
            .iter()
            .map(|q| transform.geo_to_pixel(q[0], q[1]))
            .collect();
        let edge = Edge {
            u,
            v,
            length_m: f64_property(f, "length_m").unwrap_or_else(|| polyline_length(&geo_path)),
            length_px: f64_property(f, "length_px").unwrap_or_else(|| polyline_length(&path)),
            path,
            geo_path,
        };
        if !(edge.length_m.is_finite() && edge.length_m >= 0.0) {
            return Err(data(format!("edge {u}-{v} has invalid length_m")));
        }
        g.push_edge_raw(edge)?;
    }
    Ok(g)
}

/// Builds a graph from line labels. Lines carrying integer `u`/`v` attributes
/// (as written by the graph writer) are joined by id. Otherwise nodes are
/// placed at line end points and at vertices shared between lines, and lines
/// are split there; node ids follow first appearance.
pub fn graph_from_roads(roads: &VectorRoadSet, transform: &GeoTransform) -> Result<RoadNetwork> {
    let by_id = !roads.lines.is_empty()
        && roads.lines.iter().all(|l| {
            let get = |k: &str| l.attributes.get(k).and_then(|s| s.parse::<NodeId>().ok());
            get("u").is_some() && get("v").is_some()
        });
    let mut g = RoadNetwork::new(*transform);
    if by_id {
        for l in &roads.lines {
            let u: NodeId = l.attributes["u"].parse().unwrap();
            let v: NodeId = l.attributes["v"].parse().unwrap();
            for (id, p) in [(u, l.points[0]), (v, *l.points.last().unwrap())] {
                if g.node(id).is_none() {
                    g.add_node_at_geo(id, p);
                }
            }
            g.add_edge_geo(u, v, l.points.clone())?;
        }
        return Ok(g);
    }

    let key = |p: Point| (p[0].to_bits(), p[1].to_bits());
    let mut uses: HashMap<(u64, u64), usize> = HashMap::new();
    for l in &roads.lines {
        for (i, &p) in l.points.iter().enumerate() {
            let w = if i == 0 || i + 1 == l.points.len() {
                2
            } else {
                1
            };
            *uses.entry(key(p)).or_default() += w;
        }
    }
    let mut ids: HashMap<(u64, u64), NodeId> = HashMap::new();
    let mut node_for = |g: &mut RoadNetwork, p: Point| -> NodeId {
        *ids.entry(key(p)).or_insert_with(|| {
            let id = g.next_node_id();
            g.add_node_at_geo(id, p);
            id
        })
    };
    for l in &roads.lines {
        let mut start = 0;
        let mut u = node_for(&mut g, l.points[0]);
        for i in 1..l.points.len() {
            let p = l.points[i];
            if i + 1 == l.points.len() || uses[&key(p)] >= 2 {
                let v = node_for(&mut g, p);
                g.add_edge_geo(u, v, l.points[start..=i].to_vec())?;
                start = i;
                u = v;
            }
        }
    }
    Ok(g)
}

/// True when every coordinate fits longitude/latitude ranges, which suggests
/// degrees rather than meters.
pub fn looks_geographic<'a>(points: impl IntoIterator<Item = &'a Point>) -> bool {
    let mut any = false;
    for p in points {
        any = true;
        if p[0].abs() > 180.0 || p[1].abs() > 90.0 {
            return false;
        }
    }
    any
}

pub fn roads_look_geographic(roads: &VectorRoadSet) -> bool {
    looks_geographic(roads.lines.iter().flat_map(|l| l.points.iter()))
}

pub fn graph_looks_geographic(g: &RoadNetwork) -> bool {
    looks_geographic(
        g.nodes()
            .map(|n| &n.geo)
            .chain(g.edges().iter().flat_map(|e| e.geo_path.iter())),
    )
}
