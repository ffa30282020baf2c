//! The `fibgrid` command line.

pub mod render;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::carpet::{CarpetChain, CarpetCoord};
use crate::fibtree::{self, NodeNumber, NodeStatus, TreePath};
use crate::grid::{
    build_ball, build_ball_from_rules, compare_balls, format_digits, wang_numbering, ArcDigit,
    GridBall, TileId, Tiling,
};
use crate::numeration::{zeck_decode, zeck_encode, ZeckendorfWord};
use crate::oracle::ring_sizes;
use crate::routing::{self, StatusEncoding};
use crate::simulator::{self, CostModel, SimConfig};

#[derive(Debug, Parser)]
#[command(
    name = "fibgrid",
    version,
    about = "Fibonacci-tree coordinates and routing on the pentagrid and heptagrid"
)]
pub struct Cli {
    /// JSON file with default settings; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Default)]
pub struct Common {
    /// penta or hepta
    #[arg(long)]
    pub tiling: Option<Tiling>,
    #[arg(long)]
    pub radius: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RouteSystem {
    Arcs,
    Wang,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimMode {
    Broadcast,
    Storm,
    Unicast,
    Traffic,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the ball serialization (JSON).
    Build {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Build from the tree and adjacency rules instead of the disc oracle.
        #[arg(long)]
        rules: bool,
    },
    /// Convert between tile coordinate, tree path, node number and Zeckendorf word.
    Coord {
        #[arg(long)]
        tiling: Option<Tiling>,
        /// Absolute coordinate, e.g. 312332 or "*3 1 2 3 3 2".
        tile: Option<String>,
        #[arg(long)]
        sector: Option<u8>,
        #[arg(long)]
        nu: Option<u128>,
        /// Son indices, e.g. 0,0,1,2,1
        #[arg(long)]
        path: Option<String>,
        /// Zeckendorf word of the node number.
        #[arg(long)]
        zeck: Option<String>,
    },
    /// Route between two tiles.
    Route {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long, value_enum, default_value = "arcs")]
        system: RouteSystem,
        /// Side of the central cell numbered 1 in the edge-number system.
        #[arg(long)]
        seed_side: Option<u8>,
    },
    /// Map carpet coordinates between the two grids.
    Carpet {
        /// Grid of the given tile.
        #[arg(long, default_value = "penta")]
        from: Tiling,
        #[arg(long)]
        tile: Option<String>,
        /// Carpet coordinate "(n,nu)".
        #[arg(long)]
        coord: Option<String>,
        #[arg(long)]
        radius: Option<u32>,
    },
    /// Run the message simulator.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "broadcast")]
        mode: SimMode,
        #[arg(long, default_value = "0")]
        source: String,
        #[arg(long)]
        to: Option<String>,
        /// Broadcast depth or replying level.
        #[arg(long)]
        k: Option<u32>,
        #[arg(long, default_value_t = 0)]
        payload: u64,
        #[arg(long)]
        rho: Option<String>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        draws: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// JSON-lines event log.
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Check the combinatorial model against the oracle; nonzero exit on failure.
    Verify {
        #[command(flatten)]
        common: Common,
    },
    /// Draw the ball as SVG, optionally with a highlighted route.
    Render {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        from: Option<String>,
        #[arg(long)]
        to: Option<String>,
        #[arg(long)]
        labels: bool,
    },
}

/// Settings read from `--config`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub tiling: Option<Tiling>,
    pub radius: Option<u32>,
    pub rho: Option<String>,
    pub seed: Option<u64>,
    pub seed_side: Option<u8>,
    pub high_water_mark: Option<usize>,
    pub lambda: Option<f64>,
    pub draws: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// Resolved settings: flag, else config file, else default.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub tiling: Tiling,
    pub radius: u32,
    pub rho: CostModel,
    pub seed: u64,
    pub seed_side: u8,
    pub high_water_mark: usize,
    pub lambda: f64,
    pub draws: usize,
    pub calibration: StatusEncoding,
}

impl RunConfig {
    fn resolve(file: &FileConfig, common: &Common, default_radius: u32) -> Result<Self> {
        let tiling = common.tiling.or(file.tiling).unwrap_or(Tiling::Penta);
        let radius = common.radius.or(file.radius).unwrap_or(default_radius);
        if radius > tiling.radius_cap() {
            bail!(
                "radius {radius} exceeds the cap {} for the {tiling}",
                tiling.radius_cap()
            );
        }
        let rho = file.rho.as_deref().unwrap_or("1").parse()?;
        Ok(Self {
            tiling,
            radius,
            rho,
            seed: file.seed.unwrap_or(1),
            seed_side: file.seed_side.unwrap_or(1),
            high_water_mark: file.high_water_mark.unwrap_or(64),
            lambda: file.lambda.unwrap_or(1.5),
            draws: file.draws.unwrap_or(100_000),
            calibration: StatusEncoding::CALIBRATED,
        })
    }
}

pub fn main() -> i32 {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    match run(cli, &mut stdout.lock()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Build {
            common,
            out: path,
            rules,
        } => {
            let cfg = RunConfig::resolve(&file, &common, 3)?;
            let ball = if rules {
                build_ball_from_rules(cfg.tiling, cfg.radius)?
            } else {
                build_ball(cfg.tiling, cfg.radius)?
            };
            let mut text = serde_json::to_string_pretty(&ball.to_file())?;
            text.push('\n');
            match path {
                Some(p) => {
                    fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?;
                    writeln!(out, "{} tiles written to {}", ball.len(), p.display())?;
                }
                None => out.write_all(text.as_bytes())?,
            }
            Ok(0)
        }
        Command::Coord {
            tiling,
            tile,
            sector,
            nu,
            path,
            zeck,
        } => {
            let tiling = tiling.or(file.tiling).unwrap_or(Tiling::Penta);
            let id = coord_tile(tiling, tile, sector, nu, path, zeck)?;
            print_coord(out, &id)?;
            Ok(0)
        }
        Command::Route {
            common,
            from,
            to,
            system,
            seed_side,
        } => {
            let cfg = RunConfig::resolve(&file, &common, 0)?;
            cmd_route(
                out,
                &cfg,
                common.radius.or(file.radius),
                &from,
                &to,
                system,
                seed_side,
            )
        }
        Command::Carpet {
            from,
            tile,
            coord,
            radius,
        } => {
            let radius = radius.or(file.radius).unwrap_or(4);
            cmd_carpet(out, from, tile, coord, radius)
        }
        Command::Simulate {
            common,
            mode,
            source,
            to,
            k,
            payload,
            rho,
            lambda,
            draws,
            seed,
            log,
            stats,
        } => {
            let file = FileConfig {
                rho: rho.or(file.rho.clone()),
                lambda: lambda.or(file.lambda),
                draws: draws.or(file.draws),
                seed: seed.or(file.seed),
                ..file
            };
            let cfg = RunConfig::resolve(&file, &common, 4)?;
            let sim = SimArgs {
                mode,
                source,
                to,
                k,
                payload,
                log,
                stats,
            };
            cmd_simulate(out, &cfg, sim)
        }
        Command::Verify { common } => {
            let cfg = RunConfig::resolve(&file, &common, 4)?;
            let checks = verify_suite(cfg.tiling, cfg.radius)?;
            let mut failed = 0;
            for c in &checks {
                writeln!(
                    out,
                    "{} {}: {}",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                )?;
                failed += usize::from(!c.pass);
            }
            writeln!(out, "{} checks, {failed} failed", checks.len())?;
            Ok(i32::from(failed > 0))
        }
        Command::Render {
            common,
            out: path,
            from,
            to,
            labels,
        } => {
            let cfg = RunConfig::resolve(&file, &common, 3)?;
            let ball = build_ball(cfg.tiling, cfg.radius)?;
            let highlight = match (from, to) {
                (Some(f), Some(t)) => routing::route_coordinates(&ball, &f, &t)?.tiles,
                (Some(f), None) | (None, Some(f)) => {
                    vec![ball.require(&TileId::from_coordinate(cfg.tiling, &f)?)?]
                }
                (None, None) => Vec::new(),
            };
            let svg = render::render_svg(&ball, &render::RenderOptions { highlight, labels })?;
            match path {
                Some(p) => {
                    fs::write(&p, svg).with_context(|| format!("writing {}", p.display()))?;
                    writeln!(out, "wrote {}", p.display())?;
                }
                None => out.write_all(svg.as_bytes())?,
            }
            Ok(0)
        }
    }
}

fn coord_tile(
    tiling: Tiling,
    tile: Option<String>,
    sector: Option<u8>,
    nu: Option<u128>,
    path: Option<String>,
    zeck: Option<String>,
) -> Result<TileId> {
    if let Some(t) = tile {
        return Ok(TileId::from_coordinate(tiling, &t)?);
    }
    let sector = sector.ok_or_else(|| anyhow!("give a tile coordinate or --sector"))?;
    if sector == 0 {
        return Ok(TileId::center());
    }
    if sector > tiling.p() {
        bail!("sector {sector} out of range for the {tiling}");
    }
    let tree_path = if let Some(p) = path {
        let sons = p
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<u8>().map_err(|_| anyhow!("bad son index {s:?}")))
            .collect::<Result<Vec<_>>>()?;
        TreePath::new(NodeStatus::ThreeNode, sons)?
    } else {
        let n = match (nu, zeck) {
            (Some(n), _) => n,
            (None, Some(z)) => zeck_decode(&z.parse::<ZeckendorfWord>()?)?,
            (None, None) => 1,
        };
        fibtree::number_to_path(NodeNumber(n), NodeStatus::ThreeNode)?
    };
    Ok(TileId::new(sector, tree_path.sons().to_vec())?)
}

fn print_coord(out: &mut dyn Write, id: &TileId) -> Result<()> {
    writeln!(out, "tile: {id}")?;
    if id.is_center() {
        writeln!(out, "sector: 0")?;
        writeln!(out, "level: 0")?;
        return Ok(());
    }
    let mut arcs = vec![ArcDigit::bold(id.sector)];
    arcs.extend(
        id.coordinate()
            .chars()
            .skip(1)
            .map(|c| ArcDigit::plain(c as u8 - b'0')),
    );
    let nu = fibtree::path_to_number(&id.path)?;
    writeln!(
        out,
        "arcs: {}",
        arcs.iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(" ")
    )?;
    writeln!(out, "sector: {}", id.sector)?;
    writeln!(out, "path: {:?}", id.path.sons())?;
    writeln!(out, "nu: {}", nu.0)?;
    writeln!(out, "zeckendorf: {}", zeck_encode(nu.0)?)?;
    writeln!(out, "status: {}", id.status().expect("non-central"))?;
    writeln!(out, "level: {}", id.level())?;
    Ok(())
}

fn cmd_route(
    out: &mut dyn Write,
    cfg: &RunConfig,
    radius: Option<u32>,
    from: &str,
    to: &str,
    system: RouteSystem,
    seed_side: Option<u8>,
) -> Result<i32> {
    let cap = cfg.tiling.radius_cap();
    match system {
        RouteSystem::Arcs => {
            let c = TileId::from_coordinate(cfg.tiling, from)?;
            let d = TileId::from_coordinate(cfg.tiling, to)?;
            let r = radius.unwrap_or_else(|| (c.level().max(d.level()) as u32 + 1).min(cap));
            let mut ball = build_ball(cfg.tiling, r)?;
            let mut res = routing::route_coordinates(&ball, from, to);
            if radius.is_none()
                && r < cap
                && matches!(res, Err(routing::RoutingError::Unreachable(_)))
            {
                ball = build_ball(cfg.tiling, cap)?;
                res = routing::route_coordinates(&ball, from, to);
            }
            let route = res?;
            writeln!(out, "forward: {}", route.forward)?;
            writeln!(out, "reverse: {}", route.reverse)?;
            writeln!(out, "relative: {}", route.relative_coordinate)?;
            writeln!(out, "length: {}", route.length())?;
        }
        RouteSystem::Wang => {
            if cfg.tiling != Tiling::Penta {
                bail!("the edge-number system exists on the pentagrid only");
            }
            let r = radius.unwrap_or((from.len().max(to.len()) as u32 + 1).min(cap));
            let ball = build_ball(cfg.tiling, r)?;
            let side = seed_side.unwrap_or(cfg.seed_side);
            let w = routing::wang_route_coordinates(&ball, side, from, to)?;
            writeln!(out, "path: {}", w.text())?;
            writeln!(out, "length: {}", w.digits.len())?;
        }
    }
    Ok(0)
}

fn cmd_carpet(
    out: &mut dyn Write,
    from: Tiling,
    tile: Option<String>,
    coord: Option<String>,
    radius: u32,
) -> Result<i32> {
    let other = match from {
        Tiling::Penta => Tiling::Hepta,
        Tiling::Hepta => Tiling::Penta,
    };
    let a = build_ball(from, radius.min(from.radius_cap()))?;
    let b = build_ball(other, radius.min(other.radius_cap()))?;
    let (ca, cb) = (CarpetChain::new(&a)?, CarpetChain::new(&b)?);
    let coord = match (tile, coord) {
        (Some(t), _) => ca.coord(a.require(&TileId::from_coordinate(from, &t)?)?)?,
        (None, Some(c)) => c.parse::<CarpetCoord>()?,
        (None, None) => bail!("give --tile or --coord"),
    };
    writeln!(out, "carpet: {coord}")?;
    for (ball, chain) in [(&a, &ca), (&b, &cb)] {
        let name = match chain.tile(coord) {
            Ok(t) => ball.tile(t).id.to_string(),
            Err(e) => format!("- ({e})"),
        };
        writeln!(out, "{}: {name}", ball.tiling)?;
    }
    Ok(0)
}

struct SimArgs {
    mode: SimMode,
    source: String,
    to: Option<String>,
    k: Option<u32>,
    payload: u64,
    log: Option<PathBuf>,
    stats: Option<PathBuf>,
}

fn write_or_print(out: &mut dyn Write, path: Option<&PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn cmd_simulate(out: &mut dyn Write, cfg: &RunConfig, sim: SimArgs) -> Result<i32> {
    let ball = build_ball(cfg.tiling, cfg.radius)?;
    let source = ball.require(&TileId::from_coordinate(cfg.tiling, &sim.source)?)?;
    let mut log_bytes = Vec::new();
    let summary = match sim.mode {
        SimMode::Broadcast => {
            let k = sim.k.unwrap_or(cfg.radius);
            let b = simulator::run_broadcast(&ball, source, k)?;
            simulator::write_log(&b.log, &mut log_bytes)?;
            let per_tick: Vec<String> = b
                .receivers_per_tick
                .iter()
                .map(ToString::to_string)
                .collect();
            format!(
                "receivers: {}\nexactly_once: {}\nper_tick: {}\n",
                b.arrival.len(),
                b.exactly_once(),
                per_tick.join(" ")
            )
        }
        SimMode::Storm => {
            let k = sim.k.unwrap_or(cfg.radius.saturating_sub(1));
            let config = SimConfig {
                high_water_mark: cfg.high_water_mark,
            };
            let s = simulator::run_reply_storm(&ball, source, k, &config)?;
            simulator::write_log(&s.log, &mut log_bytes)?;
            format!(
                "repliers: {}\nfifo: {}\n{}",
                s.repliers,
                simulator::check_fifo(&s.log),
                s.stats
            )
        }
        SimMode::Unicast => {
            let to = sim.to.ok_or_else(|| anyhow!("unicast needs --to"))?;
            let d = ball.require(&TileId::from_coordinate(cfg.tiling, &to)?)?;
            let u = simulator::run_unicast(&ball, source, d, sim.payload, cfg.rho)?;
            simulator::write_log(&u.log, &mut log_bytes)?;
            format!(
                "latency: {}\ncost: {}\nclosed_form: {}\n",
                u.latency,
                u.cost,
                simulator::transmission_cost(u.latency.into(), sim.payload, cfg.rho.rho)
            )
        }
        SimMode::Traffic => {
            let checks = simulator::monte_carlo_tail(
                &ball, source, cfg.lambda, cfg.draws, cfg.seed, cfg.radius,
            )?;
            let mut s = format!("gamma: {:.6}\n", simulator::gamma(cfg.lambda));
            for c in checks {
                s.push_str(&format!(
                    "k={} empirical={:.6} bound={:.6} allowance={:.6} {}\n",
                    c.k,
                    c.empirical,
                    c.bound,
                    c.allowance,
                    if c.pass { "ok" } else { "EXCEEDED" }
                ));
            }
            s
        }
    };
    if let Some(p) = &sim.log {
        fs::write(p, &log_bytes).with_context(|| format!("writing {}", p.display()))?;
    }
    write_or_print(out, sim.stats.as_ref(), &summary)?;
    Ok(0)
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

/// Oracle agreement, ring census, geodesy, broadcast, calibration, edge
/// numbering (pentagrid) and carpet injectivity on one ball.
pub fn verify_suite(tiling: Tiling, radius: u32) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let geo = build_ball(tiling, radius)?;
    let rules = build_ball_from_rules(tiling, radius)?;
    let diffs = compare_balls(&geo, &rules);
    checks.push(Check {
        name: "oracle agreement",
        pass: diffs.is_empty(),
        detail: format!("{} tiles, {} differences", geo.len(), diffs.len()),
    });

    let rings = ring_sizes(&geo.graph(), geo.center());
    let expected: Vec<usize> = (0..=radius)
        .map(|k| {
            if k == 0 {
                1
            } else {
                let f = crate::numeration::fib(
                    2 * i64::from(k) - 1,
                    crate::numeration::FibConvention::F01,
                )
                .expect("small index");
                usize::from(tiling.p()) * f as usize
            }
        })
        .collect();
    checks.push(Check {
        name: "ring census",
        pass: rings == expected,
        detail: format!("{rings:?}"),
    });

    let rep = routing::geodesy_report(&geo)?;
    checks.push(Check {
        name: "geodesy",
        pass: rep.ok(),
        detail: format!(
            "{} sources, {} pairs, {} certified, {} failures",
            rep.sources,
            rep.pairs,
            rep.certified,
            rep.failures.len() + rep.not_shortest
        ),
    });

    let b = simulator::run_broadcast(&geo, geo.center(), radius)?;
    checks.push(Check {
        name: "broadcast exactly once",
        pass: b.exactly_once() && b.arrival.len() == geo.len(),
        detail: format!("{} of {} tiles", b.arrival.len(), geo.len()),
    });

    let ranking = routing::calibrate_status_encoding(&geo);
    let unique =
        ranking[0] == (StatusEncoding::CALIBRATED, 0) && ranking.get(1).is_some_and(|r| r.1 > 0);
    checks.push(Check {
        name: "status calibration",
        pass: unique,
        detail: format!("best {:?}", ranking[0]),
    });

    if tiling == Tiling::Penta && radius > 0 {
        let w = wang_numbering(&geo, geo.center(), 1)?;
        checks.push(Check {
            name: "edge numbering",
            pass: w.conflicts == 0 && w.parity_conflicts == 0,
            detail: format!(
                "{} conflicts, {} odd cycles",
                w.conflicts, w.parity_conflicts
            ),
        });
    }

    if radius > 0 {
        let chain = CarpetChain::new(&geo)?;
        let mut seen = std::collections::HashSet::new();
        let mut ok = true;
        for t in chain.covered() {
            let c = chain.coord(t)?;
            ok &= seen.insert(c) && chain.tile(c)? == t;
        }
        checks.push(Check {
            name: "carpet injectivity",
            pass: ok,
            detail: format!("{} tiles with carpet coordinates", seen.len()),
        });
    }
    Ok(checks)
}

/// Route digits in the form the CLI shows them.
pub fn route_text(ball: &GridBall, from: &str, to: &str) -> Result<(String, String, String)> {
    let r = routing::route_coordinates(ball, from, to)?;
    Ok((
        format_digits(&r.forward.digits),
        format_digits(&r.reverse.digits),
        r.relative_coordinate,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String) {
        let cli =
            Cli::try_parse_from(std::iter::once("fibgrid").chain(args.iter().copied())).unwrap();
        let mut buf = Vec::new();
        let code = run(cli, &mut buf).unwrap();
        (code, String::from_utf8(buf).unwrap())
    }

    #[test]
    fn coord_decodes_arc_text() {
        let (_, text) = run_args(&["coord", "--tiling", "hepta", "*3 1 2 3 3 2"]);
        assert!(text.starts_with("tile: 312332\n"));
        assert!(text.contains("arcs: *3 1 2 3 3 2"));
        let (_, text) = run_args(&["coord", "--sector", "1", "--nu", "3"]);
        assert!(text.contains("path: [1]"));
        assert!(text.contains("zeckendorf: 100"));
    }

    #[test]
    fn build_is_deterministic() {
        let (_, a) = run_args(&["build", "--radius", "2"]);
        let (_, b) = run_args(&["build", "--radius", "2"]);
        assert_eq!(a, b);
        let (_, c) = run_args(&["build", "--radius", "0"]);
        let file: crate::grid::BallFile = serde_json::from_str(&c).unwrap();
        assert_eq!(file.tiles.len(), 1);
    }

    #[test]
    fn verify_small_ball() {
        let (code, text) = run_args(&["verify", "--tiling", "hepta", "--radius", "3"]);
        assert_eq!(code, 0, "{text}");
    }
}
