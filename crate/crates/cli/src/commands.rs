use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use roadgraph_core::fixture::{salt_and_pepper, SyntheticCity};
use roadgraph_core::geojson::{
    graph_from_roads, graph_looks_geographic, looks_geographic, read_graph_geojson,
    read_roads_geojson, roads_look_geographic, round_sig9, write_graph_geojson,
    write_roads_geojson,
};
use roadgraph_core::raster::io::{read_grid_file, write_grid_file};
use roadgraph_core::raster::{rasterize_centerlines, skeletonize};
use roadgraph_core::tiling::DirProvider;
use roadgraph_core::{
    apls, clean, extract_large, extract_small, make_fixture, nearest_node, plan_tiles, refine,
    shortest_route, topo, FixtureParams, GeoTransform, GridKind, PipelineConfig, RasterGrid,
    RoadNetwork, TileProvider,
};
use serde_json::{json, Map, Value};

use crate::opts::{parse_point, parse_transform, Command};

pub struct Ctx {
    pub cfg: PipelineConfig,
    pub assume_meters: bool,
}

#[derive(Debug)]
struct Degrees(String);

impl std::fmt::Display for Degrees {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} has coordinates that look like degrees; reproject to a metric CRS or pass --assume-meters",
            self.0
        )
    }
}

impl std::error::Error for Degrees {}

fn check_meters(ctx: &Ctx, what: &Path, geographic: bool) -> Result<()> {
    if geographic && !ctx.assume_meters {
        return Err(Degrees(what.display().to_string()).into());
    }
    Ok(())
}

fn extent_looks_geographic(t: &GeoTransform, width: usize, height: usize) -> bool {
    let (h, w) = (height as f64, width as f64);
    let corners = [
        t.pixel_to_geo(0.0, 0.0),
        t.pixel_to_geo(0.0, w),
        t.pixel_to_geo(h, 0.0),
        t.pixel_to_geo(h, w),
    ];
    t.pixel_size() < 0.01 && looks_geographic(corners.iter())
}

fn read_raster(ctx: &Ctx, path: &Path, kind: GridKind) -> Result<RasterGrid> {
    let g = read_grid_file(path, kind, GeoTransform::identity())
        .with_context(|| format!("reading {}", path.display()))?;
    check_meters(
        ctx,
        path,
        extent_looks_geographic(g.transform(), g.width(), g.height()),
    )?;
    Ok(g)
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

/// Graph files carry a `geotransform` member; anything else is read as
/// plain road labels in an identity pixel frame.
fn load_graph(ctx: &Ctx, path: &Path) -> Result<RoadNetwork> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let has_transform = serde_json::from_slice::<Value>(&bytes)
        .ok()
        .is_some_and(|v| v.get("geotransform").is_some());
    let g = if has_transform {
        read_graph_geojson(&bytes)
    } else {
        read_roads_geojson(&bytes)
            .and_then(|r| graph_from_roads(&r.roads, &GeoTransform::identity()))
    }
    .with_context(|| format!("reading {}", path.display()))?;
    check_meters(ctx, path, graph_looks_geographic(&g))?;
    Ok(g)
}

fn graph_summary(g: &RoadNetwork) -> Value {
    json!({
        "n_nodes": g.node_count(),
        "n_edges": g.edge_count(),
        "n_components": g.components().len(),
        "total_length_m": round_sig9(g.total_length_m()),
    })
}

fn mask_pixels(g: &RasterGrid) -> usize {
    g.values().iter().filter(|&&v| v != 0.0).count()
}

pub fn run(command: &Command, ctx: &Ctx) -> Result<Value> {
    let cfg = &ctx.cfg;
    let body = match command {
        Command::Rasterize {
            roads,
            width,
            height,
            transform,
            world,
            out,
            ..
        } => {
            let bytes = fs::read(roads).with_context(|| format!("reading {}", roads.display()))?;
            let read = read_roads_geojson(&bytes)
                .with_context(|| format!("reading {}", roads.display()))?;
            check_meters(ctx, roads, roads_look_geographic(&read.roads))?;
            let t = match (transform, world) {
                (Some(s), _) => {
                    let [a, b, c, d, e, f] = parse_transform(s)?;
                    GeoTransform::new(a, b, c, d, e, f)?
                }
                (None, Some(w)) => GeoTransform::read_world_file(w)
                    .with_context(|| format!("reading {}", w.display()))?,
                (None, None) => unreachable!("clap requires --transform or --world"),
            };
            let grid = rasterize_centerlines(&read.roads, *width, *height, &t, cfg.halfwidth_m)?;
            write_grid_file(out, &grid).with_context(|| format!("writing {}", out.display()))?;
            json!({
                "width": width,
                "height": height,
                "n_lines": read.roads.lines.len(),
                "n_skipped": read.skipped,
                "road_pixels": mask_pixels(&grid),
            })
        }
        Command::Clean { input, out, .. } => {
            let prob = read_raster(ctx, input, GridKind::Probability)?;
            let mask = clean(&prob, &cfg.clean())?;
            write_grid_file(out, &mask).with_context(|| format!("writing {}", out.display()))?;
            json!({"width": mask.width(), "height": mask.height(), "road_pixels": mask_pixels(&mask)})
        }
        Command::Skeletonize { input, out } => {
            let mask = read_raster(ctx, input, GridKind::Binary)?;
            let skel = skeletonize(&mask)?;
            write_grid_file(out, &skel).with_context(|| format!("writing {}", out.display()))?;
            json!({"width": skel.width(), "height": skel.height(), "skeleton_pixels": mask_pixels(&skel)})
        }
        Command::Extract { input, out, .. } => {
            let prob = read_raster(ctx, input, GridKind::Probability)?;
            let g = extract_small(&prob, &cfg.clean(), &cfg.refine())?;
            write(out, &write_graph_geojson(&g))?;
            json!({"width": prob.width(), "height": prob.height(), "graph": graph_summary(&g)})
        }
        Command::Stitch { tiles, out, .. } => {
            let provider = DirProvider::open(tiles)
                .with_context(|| format!("scanning {}", tiles.display()))?;
            let (h, w) = provider.extent();
            let t = provider.transform().unwrap_or_else(GeoTransform::identity);
            check_meters(ctx, tiles, extent_looks_geographic(&t, w, h))?;
            let large = cfg.large();
            let n_tiles = plan_tiles(w, h, large.window_px, large.overlap_px)?
                .tiles
                .len();
            let g = extract_large(&provider, w, h, &t, &large)?;
            write(out, &write_graph_geojson(&g))?;
            json!({
                "width": w,
                "height": h,
                "n_tiles": n_tiles,
                "n_models": provider.n_models(),
                "graph": graph_summary(&g),
            })
        }
        Command::Refine { graph, out, .. } => {
            let g = load_graph(ctx, graph)?;
            let r = refine(&g, &cfg.refine())?;
            write(out, &write_graph_geojson(&r))?;
            json!({"input": graph_summary(&g), "graph": graph_summary(&r)})
        }
        Command::EvalApls { gt, prop, .. } => {
            let report = apls(&load_graph(ctx, gt)?, &load_graph(ctx, prop)?, &cfg.apls())?;
            serde_json::to_value(report)?
        }
        Command::EvalTopo { gt, prop, .. } => {
            let report = topo(&load_graph(ctx, gt)?, &load_graph(ctx, prop)?, &cfg.topo())?;
            serde_json::to_value(report)?
        }
        Command::Route { graph, from, to } => {
            let (a, b) = (parse_point(from)?, parse_point(to)?);
            let g = load_graph(ctx, graph)?;
            let (src, dst) = (nearest_node(&g, a)?, nearest_node(&g, b)?);
            let r = shortest_route(&g, src, dst)?;
            let mut coords: Vec<Value> = r
                .geometry
                .iter()
                .map(|p| json!([round_sig9(p[0]), round_sig9(p[1])]))
                .collect();
            if coords.len() == 1 {
                coords.push(coords[0].clone());
            }
            // The route is the output itself, not a wrapped report.
            return Ok(json!({
                "type": "Feature",
                "geometry": {"type": "LineString", "coordinates": coords},
                "properties": {
                    "length_m": round_sig9(r.total_length_m),
                    "n_nodes": r.node_sequence.len(),
                    "from_node": src,
                    "to_node": dst,
                },
            }));
        }
        Command::Bench {
            size,
            pixel_size,
            seed,
            ..
        } => {
            let n = *size;
            if n == 0 {
                bail!(crate::UsageError("--size must be at least 1".into()));
            }
            let t = GeoTransform::north_up(500000.0, 4000000.0, *pixel_size)?;
            let city = SyntheticCity::new(n, n, *seed);
            let start = Instant::now();
            let g = extract_large(&city, n, n, &t, &cfg.large())?;
            let secs = start.elapsed().as_secs_f64();
            let km2 = (n as f64 * pixel_size).powi(2) / 1e6;
            log::info!("{n}x{n} px in {secs:.2} s");
            json!({
                "width": n,
                "height": n,
                "pixel_size_m": pixel_size,
                "seed": seed,
                "area_km2": km2,
                "seconds": secs,
                "km2_per_hour": km2 / (secs / 3600.0),
                "threads": rayon::current_num_threads(),
                "graph": graph_summary(&g),
            })
        }
        Command::Fixture {
            kind,
            seed,
            out_dir,
            pixel_size,
            noise,
            ..
        } => {
            let mut p = FixtureParams {
                halfwidth_m: cfg.halfwidth_m,
                ..Default::default()
            };
            if let Some(px) = pixel_size {
                p.pixel_m = *px;
            }
            let f = make_fixture(*kind, &p, *seed)?;
            let raster = if *noise > 0.0 {
                salt_and_pepper(&f.raster, *noise, *seed)?
            } else {
                f.raster.clone()
            };
            fs::create_dir_all(out_dir)
                .with_context(|| format!("creating {}", out_dir.display()))?;
            let files = ["raster.rgf", "roads.geojson", "graph.geojson"].map(|n| out_dir.join(n));
            write_grid_file(&files[0], &raster)
                .with_context(|| format!("writing {}", files[0].display()))?;
            write(&files[1], &write_roads_geojson(&f.roads))?;
            write(&files[2], &write_graph_geojson(&f.graph))?;
            json!({
                "kind": kind,
                "seed": seed,
                "noise": noise,
                "width": raster.width(),
                "height": raster.height(),
                "pixel_size_m": p.pixel_m,
                "files": files.iter().map(|f| f.display().to_string()).collect::<Vec<_>>(),
                "graph": graph_summary(&f.graph),
            })
        }
    };
    let mut report = Map::new();
    report.insert("command".into(), json!(command.name()));
    match body {
        Value::Object(m) => report.extend(m),
        other => {
            report.insert("result".into(), other);
        }
    }
    report.insert("params".into(), serde_json::to_value(cfg)?);
    Ok(Value::Object(report))
}
