//! Flag groups layered over the JSON configuration.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use roadgraph_core::{FixtureKind, PipelineConfig};

use crate::UsageError;

#[derive(Debug, Parser)]
#[command(
    name = "roadgraph",
    version,
    about = "Road graph extraction, refinement, scoring and routing"
)]
pub struct Cli {
    /// JSON pipeline settings; flags given on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Cap on worker threads. Results do not depend on it.
    #[arg(long, global = true, env = "ROADGRAPH_THREADS", value_name = "N")]
    pub threads: Option<usize>,

    /// Accept inputs whose coordinates look like degrees.
    #[arg(long, global = true)]
    pub assume_meters: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct RasterOpts {
    /// Road halfwidth in meters.
    #[arg(long, value_name = "M")]
    pub halfwidth: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct CleanOpts {
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, value_name = "PX")]
    pub open_radius: Option<usize>,
    #[arg(long, value_name = "PX")]
    pub close_radius: Option<usize>,
    #[arg(long, value_name = "PX")]
    pub smooth_radius: Option<usize>,
}

#[derive(Debug, Args, Default)]
pub struct RefineOpts {
    /// Drop components shorter than this many meters in total.
    #[arg(long, value_name = "M")]
    pub min_subgraph: Option<f64>,
    /// Prune dead ends shorter than this many pixels.
    #[arg(long, value_name = "PX")]
    pub max_spur: Option<f64>,
    /// Join terminals closer than this many pixels to another node.
    #[arg(long, value_name = "PX")]
    pub max_gap: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct TileOpts {
    #[arg(long, value_name = "PX")]
    pub window: Option<usize>,
    #[arg(long, value_name = "PX")]
    pub overlap: Option<usize>,
}

#[derive(Debug, Args, Default)]
pub struct AplsOpts {
    #[arg(long, value_name = "N")]
    pub n_control: Option<usize>,
    /// Snap buffer in meters.
    #[arg(long, value_name = "M")]
    pub buffer: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Add a node at the middle of every edge before scoring.
    #[arg(long)]
    pub midpoints: bool,
    /// Score ground truth to proposal only.
    #[arg(long)]
    pub one_way: bool,
}

#[derive(Debug, Args, Default)]
pub struct TopoOpts {
    /// Hole size in meters.
    #[arg(long, value_name = "M")]
    pub hole: Option<f64>,
    #[arg(long, value_name = "M")]
    pub radius: Option<f64>,
    #[arg(long, value_name = "M")]
    pub sample_spacing: Option<f64>,
    #[arg(long, value_name = "M")]
    pub seed_spacing: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn set<T: Copy>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl RasterOpts {
    fn apply(&self, c: &mut PipelineConfig) {
        set(&mut c.halfwidth_m, self.halfwidth);
    }
}

impl CleanOpts {
    fn apply(&self, c: &mut PipelineConfig) {
        set(&mut c.threshold, self.threshold);
        set(&mut c.open_radius, self.open_radius);
        set(&mut c.close_radius, self.close_radius);
        set(&mut c.smooth_radius, self.smooth_radius);
    }
}

impl RefineOpts {
    fn apply(&self, c: &mut PipelineConfig) {
        set(&mut c.min_subgraph_m, self.min_subgraph);
        set(&mut c.max_spur_px, self.max_spur);
        set(&mut c.max_gap_px, self.max_gap);
    }
}

impl TileOpts {
    fn apply(&self, c: &mut PipelineConfig) {
        set(&mut c.window_px, self.window);
        set(&mut c.overlap_px, self.overlap);
    }
}

impl AplsOpts {
    fn apply(&self, c: &mut PipelineConfig) {
        set(&mut c.n_control, self.n_control);
        set(&mut c.snap_buffer_m, self.buffer);
        set(&mut c.apls_seed, self.seed);
        if self.midpoints {
            c.inject_midpoints = true;
        }
        if self.one_way {
            c.symmetric = false;
        }
    }
}

impl TopoOpts {
    fn apply(&self, c: &mut PipelineConfig) {
        set(&mut c.hole_size_m, self.hole);
        set(&mut c.topo_radius_m, self.radius);
        set(&mut c.sample_spacing_m, self.sample_spacing);
        set(&mut c.seed_spacing_m, self.seed_spacing);
        set(&mut c.topo_seed, self.seed);
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Burn road centerlines into a binary mask.
    Rasterize {
        #[arg(long, value_name = "GEOJSON")]
        roads: PathBuf,
        #[arg(long)]
        width: usize,
        #[arg(long)]
        height: usize,
        /// Geotransform as "a,b,c,d,e,f" (x = a*col + b*row + c, y = d*col + e*row + f).
        #[arg(
            long,
            allow_hyphen_values = true,
            conflicts_with = "world",
            required_unless_present = "world"
        )]
        transform: Option<String>,
        /// World file holding the geotransform.
        #[arg(long)]
        world: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        raster: RasterOpts,
    },
    /// Threshold and clean a probability raster.
    Clean {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        clean: CleanOpts,
    },
    /// Thin a binary mask to one-pixel centerlines.
    Skeletonize {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Probability raster to refined road graph.
    Extract {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        clean: CleanOpts,
        #[command(flatten)]
        refine: RefineOpts,
    },
    /// Merge a directory of tile predictions and extract one graph.
    Stitch {
        /// Directory of tile_{row0}_{col0}_{model}.rgf|.pgm files.
        #[arg(long)]
        tiles: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        tile: TileOpts,
        #[command(flatten)]
        clean: CleanOpts,
        #[command(flatten)]
        refine: RefineOpts,
    },
    /// Prune spurs, close gaps and drop small components of a graph.
    Refine {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        refine: RefineOpts,
    },
    /// Average path length similarity between two graphs.
    EvalApls {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        prop: PathBuf,
        #[command(flatten)]
        apls: AplsOpts,
    },
    /// Topology precision/recall between two graphs.
    EvalTopo {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        prop: PathBuf,
        #[command(flatten)]
        topo: TopoOpts,
    },
    /// Shortest route between the nodes nearest two points.
    Route {
        #[arg(long)]
        graph: PathBuf,
        /// Start as "x,y".
        #[arg(long, allow_hyphen_values = true)]
        from: String,
        /// End as "x,y".
        #[arg(long, allow_hyphen_values = true)]
        to: String,
    },
    /// Time the post-processing of a synthetic city mask.
    Bench {
        /// Square raster side in pixels.
        #[arg(long, default_value_t = 10_000)]
        size: usize,
        #[arg(long, default_value_t = 0.3)]
        pixel_size: f64,
        #[arg(long, default_value_t = 3)]
        seed: u64,
        #[command(flatten)]
        tile: TileOpts,
        #[command(flatten)]
        clean: CleanOpts,
        #[command(flatten)]
        refine: RefineOpts,
    },
    /// Write a synthetic raster, its labels and its exact graph.
    Fixture {
        /// grid_city, ring, spur_forest or random_tree.
        #[arg(long)]
        kind: FixtureKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, value_name = "M")]
        pixel_size: Option<f64>,
        /// Fraction of pixels flipped by salt-and-pepper noise.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[command(flatten)]
        raster: RasterOpts,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Rasterize { .. } => "rasterize",
            Command::Clean { .. } => "clean",
            Command::Skeletonize { .. } => "skeletonize",
            Command::Extract { .. } => "extract",
            Command::Stitch { .. } => "stitch",
            Command::Refine { .. } => "refine",
            Command::EvalApls { .. } => "eval-apls",
            Command::EvalTopo { .. } => "eval-topo",
            Command::Route { .. } => "route",
            Command::Bench { .. } => "bench",
            Command::Fixture { .. } => "fixture",
        }
    }

    fn apply(&self, c: &mut PipelineConfig) {
        match self {
            Command::Rasterize { raster, .. } | Command::Fixture { raster, .. } => raster.apply(c),
            Command::Clean { clean, .. } => clean.apply(c),
            Command::Skeletonize { .. } | Command::Route { .. } => {}
            Command::Extract { clean, refine, .. } => {
                clean.apply(c);
                refine.apply(c);
            }
            Command::Stitch {
                tile,
                clean,
                refine,
                ..
            }
            | Command::Bench {
                tile,
                clean,
                refine,
                ..
            } => {
                tile.apply(c);
                clean.apply(c);
                refine.apply(c);
            }
            Command::Refine { refine, .. } => refine.apply(c),
            Command::EvalApls { apls, .. } => apls.apply(c),
            Command::EvalTopo { topo, .. } => topo.apply(c),
        }
    }
}

/// Defaults, then the config file, then flags; validated once at the end.
pub fn resolve_config(file: Option<&Path>, command: &Command) -> anyhow::Result<PipelineConfig> {
    let mut cfg = match file {
        Some(path) => {
            let bytes = std::fs::read(path)
                .map_err(|e| UsageError(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_slice(&bytes)
                .map_err(|e| UsageError(format!("{}: {e}", path.display())))?
        }
        None => PipelineConfig::default(),
    };
    command.apply(&mut cfg);
    cfg.validate().map_err(|e| UsageError(e.to_string()))?;
    Ok(cfg)
}

pub fn parse_point(s: &str) -> anyhow::Result<[f64; 2]> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || UsageError(format!("expected \"x,y\", got {s:?}"));
    if parts.len() != 2 {
        return Err(bad().into());
    }
    let x: f64 = parts[0].parse().map_err(|_| bad())?;
    let y: f64 = parts[1].parse().map_err(|_| bad())?;
    if !(x.is_finite() && y.is_finite()) {
        return Err(bad().into());
    }
    Ok([x, y])
}

pub fn parse_transform(s: &str) -> anyhow::Result<[f64; 6]> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| UsageError(format!("expected six comma-separated numbers, got {s:?}")))?;
    <[f64; 6]>::try_from(v)
        .map_err(|_| UsageError(format!("expected six comma-separated numbers, got {s:?}")).into())
}
