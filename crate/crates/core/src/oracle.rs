//! Geometric ground truth in the Poincaré disc.
//!
//! The base polygon sits at the origin; every other tile is obtained by
//! reflecting a known tile in one of its sides. Tiles are identified by
//! their hyperbolic centre. Nothing in this module knows about Fibonacci
//! trees, so it can be used to check the combinatorial constructions.

use std::collections::{HashMap, VecDeque};
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::grid::Tiling;

/// Tiles whose centres are closer than this (Euclidean distance in the disc)
/// are merged. Reflection drift grows with depth when measured in the
/// hyperbolic metric, while distinct centres stay at least ~1e-4 apart in
/// the disc up to the supported depth.
pub const MERGE_TOLERANCE: f64 = 1e-6;
/// Largest reflection depth accepted by [`generate_disc_ball`].
pub const MAX_DEPTH: u32 = 9;

const CELL: f64 = 1e-5;
/// Vertices of a shared side must agree to this hyperbolic distance.
const SIDE_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("depth {depth} exceeds the supported maximum {max}")]
    DepthTooLarge { depth: u32, max: u32 },
    #[error("two distinct tiles at disc distance {0:e}; merge tolerance is unsound")]
    AmbiguousDedup(f64),
    #[error("reflected tile does not share the expected side with its parent")]
    SideMismatch,
    #[error("tile {0} is not in the graph")]
    UnknownTile(usize),
    #[error("distance between tiles {0} and {1} is not certifiable inside this ball")]
    Uncertifiable(usize, usize),
}

#[derive(Debug, Clone, Serialize)]
pub struct DiscTile {
    /// Vertices in counter-clockwise order; side `k` joins vertex `k` to `k + 1`.
    #[serde(serialize_with = "ser_points")]
    pub vertices: Vec<Complex64>,
    #[serde(serialize_with = "ser_point")]
    pub center: Complex64,
    pub generation: u32,
}

fn ser_point<S: serde::Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

fn ser_points<S: serde::Serializer>(zs: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
    let pts: Vec<[f64; 2]> = zs.iter().map(|z| [z.re, z.im]).collect();
    pts.serialize(s)
}

pub fn hyperbolic_distance(z: Complex64, w: Complex64) -> f64 {
    let num = (z - w).norm();
    let den = (Complex64::new(1.0, 0.0) - z.conj() * w).norm();
    2.0 * (num / den).min(1.0 - 1e-16).atanh()
}

/// Circumradius, in the disc, of the regular base polygon.
pub fn base_circumradius(tiling: Tiling) -> f64 {
    let (p, q) = (f64::from(tiling.p()), f64::from(tiling.q()));
    let cosh_r = 1.0 / ((PI / p).tan() * (PI / q).tan());
    (cosh_r.acosh() / 2.0).tanh()
}

/// A hyperbolic line of the disc model: either a diameter or a circle
/// orthogonal to the unit circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Geodesic {
    Diameter { direction: Complex64 },
    Circle { center: Complex64, radius: f64 },
}

impl Geodesic {
    pub fn through(a: Complex64, b: Complex64) -> Geodesic {
        let det = a.re * b.im - a.im * b.re;
        if det.abs() <= 1e-12 * a.norm().max(b.norm()).max(1e-300) {
            let u = if a.norm() >= b.norm() { a } else { b };
            return Geodesic::Diameter {
                direction: u / u.norm(),
            };
        }
        // centre c with |c|^2 - 1 = r^2 passing through a and b:
        // Re(z conj c) = (|z|^2 + 1) / 2 for z in {a, b}
        let ra = (a.norm_sqr() + 1.0) / 2.0;
        let rb = (b.norm_sqr() + 1.0) / 2.0;
        let cx = (ra * b.im - a.im * rb) / det;
        let cy = (a.re * rb - ra * b.re) / det;
        let center = Complex64::new(cx, cy);
        Geodesic::Circle {
            center,
            radius: (center.norm_sqr() - 1.0).sqrt(),
        }
    }

    pub fn reflect(&self, z: Complex64) -> Complex64 {
        match *self {
            Geodesic::Diameter { direction } => direction * direction * z.conj(),
            Geodesic::Circle { center, radius } => center + radius * radius / (z - center).conj(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DiscBall {
    pub tiling: Tiling,
    pub depth: u32,
    pub reference_angle: f64,
    pub tiles: Vec<DiscTile>,
    /// `neighbors[t][k]` = (tile, side of that tile) across side `k` of `t`.
    pub neighbors: Vec<Vec<Option<(usize, usize)>>>,
}

struct CenterIndex {
    cells: HashMap<(i64, i64), Vec<usize>>,
}

impl CenterIndex {
    fn key(z: Complex64) -> (i64, i64) {
        ((z.re / CELL).floor() as i64, (z.im / CELL).floor() as i64)
    }

    fn find(&self, z: Complex64, tiles: &[DiscTile]) -> Result<Option<usize>, OracleError> {
        let (kx, ky) = Self::key(z);
        let mut found = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for &i in self.cells.get(&(kx + dx, ky + dy)).into_iter().flatten() {
                    let d = (tiles[i].center - z).norm();
                    if d < MERGE_TOLERANCE {
                        found = Some(i);
                    } else if d < 10.0 * MERGE_TOLERANCE {
                        return Err(OracleError::AmbiguousDedup(d));
                    }
                }
            }
        }
        Ok(found)
    }

    fn insert(&mut self, z: Complex64, i: usize) {
        self.cells.entry(Self::key(z)).or_default().push(i);
    }
}

/// All tiles reachable from the base polygon by at most `depth` side
/// reflections, with their side-sharing adjacency.
pub fn generate_disc_ball(tiling: Tiling, depth: u32) -> Result<DiscBall, OracleError> {
    generate_disc_ball_with_reference(tiling, depth, 0.0)
}

pub fn generate_disc_ball_with_reference(
    tiling: Tiling,
    depth: u32,
    reference_angle: f64,
) -> Result<DiscBall, OracleError> {
    if depth > MAX_DEPTH {
        return Err(OracleError::DepthTooLarge {
            depth,
            max: MAX_DEPTH,
        });
    }
    let p = tiling.p() as usize;
    let r = base_circumradius(tiling);
    let base = DiscTile {
        vertices: (0..p)
            .map(|k| Complex64::from_polar(r, reference_angle + 2.0 * PI * k as f64 / p as f64))
            .collect(),
        center: Complex64::new(0.0, 0.0),
        generation: 0,
    };
    let mut tiles = vec![base];
    let mut neighbors = vec![vec![None; p]];
    let mut index = CenterIndex {
        cells: HashMap::new(),
    };
    index.insert(tiles[0].center, 0);

    let mut queue = VecDeque::from([0usize]);
    while let Some(t) = queue.pop_front() {
        if tiles[t].generation >= depth {
            continue;
        }
        for k in 0..p {
            if neighbors[t][k].is_some() {
                continue;
            }
            let (a, b) = (tiles[t].vertices[k], tiles[t].vertices[(k + 1) % p]);
            let line = Geodesic::through(a, b);
            let center = line.reflect(tiles[t].center);
            let u = match index.find(center, &tiles)? {
                Some(u) => u,
                None => {
                    let reflected: Vec<Complex64> =
                        tiles[t].vertices.iter().map(|&v| line.reflect(v)).collect();
                    // reflection reverses orientation; restart at the shared edge
                    let vertices = (0..p).map(|j| reflected[(k + 1 + p - j) % p]).collect();
                    let u = tiles.len();
                    tiles.push(DiscTile {
                        vertices,
                        center,
                        generation: tiles[t].generation + 1,
                    });
                    neighbors.push(vec![None; p]);
                    index.insert(center, u);
                    queue.push_back(u);
                    u
                }
            };
            let l = shared_side(&tiles[u].vertices, a, b)?;
            neighbors[t][k] = Some((u, l));
            neighbors[u][l] = Some((t, k));
        }
    }
    // edges between two tiles of the outermost ring
    for t in 0..tiles.len() {
        if tiles[t].generation < depth {
            continue;
        }
        for k in 0..p {
            if neighbors[t][k].is_some() {
                continue;
            }
            let (a, b) = (tiles[t].vertices[k], tiles[t].vertices[(k + 1) % p]);
            let center = Geodesic::through(a, b).reflect(tiles[t].center);
            if let Some(u) = index.find(center, &tiles)? {
                let l = shared_side(&tiles[u].vertices, a, b)?;
                neighbors[t][k] = Some((u, l));
                neighbors[u][l] = Some((t, k));
            }
        }
    }
    Ok(DiscBall {
        tiling,
        depth,
        reference_angle,
        tiles,
        neighbors,
    })
}

/// Side of a neighbouring polygon running from `b` to `a`. Vertex
/// positions drift with depth, so the best match is taken and only a
/// gross mismatch is reported.
fn shared_side(vu: &[Complex64], a: Complex64, b: Complex64) -> Result<usize, OracleError> {
    let p = vu.len();
    let err = |l: usize| hyperbolic_distance(vu[l], b) + hyperbolic_distance(vu[(l + 1) % p], a);
    let l = (0..p)
        .min_by(|&x, &y| err(x).total_cmp(&err(y)))
        .expect("non-empty polygon");
    if err(l) > SIDE_TOLERANCE {
        return Err(OracleError::SideMismatch);
    }
    Ok(l)
}

impl DiscBall {
    pub fn len(&self) -> usize {
        self.tiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tiles.is_empty()
    }

    pub fn graph(&self) -> AdjacencyGraph {
        let mut adj = vec![Vec::new(); self.tiles.len()];
        let mut edges = Vec::new();
        for (t, row) in self.neighbors.iter().enumerate() {
            for (k, nb) in row.iter().enumerate() {
                if let Some((u, l)) = *nb {
                    adj[t].push(u);
                    if t < u {
                        edges.push(SharedSide {
                            a: t,
                            side_a: k,
                            b: u,
                            side_b: l,
                        });
                    }
                }
            }
        }
        AdjacencyGraph {
            depth_from_center: self.tiles.iter().map(|t| t.generation).collect(),
            radius: self.depth,
            adj,
            edges,
        }
    }

    /// Smallest disc distance between the centres of two adjacent tiles.
    pub fn min_center_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (t, row) in self.neighbors.iter().enumerate() {
            for &(u, _) in row.iter().flatten() {
                best = best.min((self.tiles[t].center - self.tiles[u].center).norm());
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SharedSide {
    pub a: usize,
    pub side_a: usize,
    pub b: usize,
    pub side_b: usize,
}

/// Side-sharing graph of a ball, with each tile's distance to the centre.
#[derive(Debug, Clone)]
pub struct AdjacencyGraph {
    pub adj: Vec<Vec<usize>>,
    pub edges: Vec<SharedSide>,
    pub depth_from_center: Vec<u32>,
    pub radius: u32,
}

pub const UNREACHED: u32 = u32::MAX;

impl AdjacencyGraph {
    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    fn check(&self, t: usize) -> Result<(), OracleError> {
        if t < self.adj.len() {
            Ok(())
        } else {
            Err(OracleError::UnknownTile(t))
        }
    }

    /// A path leaving the ball from `a` to `b` is at least this long.
    fn escape_length(&self, a: usize, b: usize) -> u32 {
        2 * (self.radius + 1) - self.depth_from_center[a] - self.depth_from_center[b]
    }

    pub fn is_interior(&self, t: usize) -> bool {
        self.depth_from_center[t] < self.radius
    }
}

pub fn bfs_distances(graph: &AdjacencyGraph, from: usize) -> Vec<u32> {
    let mut dist = vec![UNREACHED; graph.len()];
    dist[from] = 0;
    let mut queue = VecDeque::from([from]);
    while let Some(t) = queue.pop_front() {
        for &u in &graph.adj[t] {
            if dist[u] == UNREACHED {
                dist[u] = dist[t] + 1;
                queue.push_back(u);
            }
        }
    }
    dist
}

/// Tile-metric distance, refused when a shorter path could leave the ball.
pub fn bfs_distance(graph: &AdjacencyGraph, t0: usize, t1: usize) -> Result<u32, OracleError> {
    graph.check(t0)?;
    graph.check(t1)?;
    let d = bfs_distances(graph, t0)[t1];
    if d == UNREACHED || d > graph.escape_length(t0, t1) {
        return Err(OracleError::Uncertifiable(t0, t1));
    }
    Ok(d)
}

pub fn ring_sizes(graph: &AdjacencyGraph, center: usize) -> Vec<usize> {
    let dist = bfs_distances(graph, center);
    let max = dist
        .iter()
        .copied()
        .filter(|&d| d != UNREACHED)
        .max()
        .unwrap_or(0);
    let mut rings = vec![0; max as usize + 1];
    for d in dist.into_iter().filter(|&d| d != UNREACHED) {
        rings[d as usize] += 1;
    }
    rings
}

/// Number of shortest paths from `root` to `target`, by BFS layering.
pub fn geodesic_count(
    graph: &AdjacencyGraph,
    root: usize,
    target: usize,
) -> Result<u128, OracleError> {
    graph.check(root)?;
    graph.check(target)?;
    let mut dist = vec![UNREACHED; graph.len()];
    let mut count = vec![0u128; graph.len()];
    dist[root] = 0;
    count[root] = 1;
    let mut queue = VecDeque::from([root]);
    while let Some(t) = queue.pop_front() {
        if t == target {
            break;
        }
        for &u in &graph.adj[t] {
            if dist[u] == UNREACHED {
                dist[u] = dist[t] + 1;
                queue.push_back(u);
            }
            if dist[u] == dist[t] + 1 {
                count[u] += count[t];
            }
        }
    }
    // paths through the missing outside would have length >= escape_length
    if dist[target] == UNREACHED || dist[target] >= graph.escape_length(root, target) {
        return Err(OracleError::Uncertifiable(root, target));
    }
    Ok(count[target])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_depths() {
        let b0 = generate_disc_ball(Tiling::Penta, 0).unwrap();
        assert_eq!(b0.len(), 1);
        let b1 = generate_disc_ball(Tiling::Penta, 1).unwrap();
        assert_eq!(b1.len(), 6);
        let h1 = generate_disc_ball(Tiling::Hepta, 1).unwrap();
        assert_eq!(h1.len(), 8);
        assert!(matches!(
            generate_disc_ball(Tiling::Penta, 12),
            Err(OracleError::DepthTooLarge { .. })
        ));
    }

    #[test]
    fn base_polygon_angles() {
        for tiling in [Tiling::Penta, Tiling::Hepta] {
            let ball = generate_disc_ball(tiling, 0).unwrap();
            let v = &ball.tiles[0].vertices;
            let p = v.len();
            // interior angle between the two geodesics at vertex 1
            let tangent = |from: Complex64, to: Complex64| -> Complex64 {
                match Geodesic::through(from, to) {
                    Geodesic::Diameter { .. } => (to - from) / (to - from).norm(),
                    Geodesic::Circle { center, .. } => {
                        let radial = from - center;
                        let t = Complex64::new(-radial.im, radial.re);
                        let t = t / t.norm();
                        if (t.re * (to - from).re + t.im * (to - from).im) < 0.0 {
                            -t
                        } else {
                            t
                        }
                    }
                }
            };
            let t1 = tangent(v[1], v[0]);
            let t2 = tangent(v[1], v[2 % p]);
            let angle = (t1.re * t2.re + t1.im * t2.im).acos();
            let expected = 2.0 * PI / f64::from(tiling.q());
            assert!((angle - expected).abs() < 1e-9, "{tiling:?}: {angle}");
        }
    }

    #[test]
    fn ring_census() {
        let ball = generate_disc_ball(Tiling::Penta, 6).unwrap();
        let g = ball.graph();
        assert_eq!(ring_sizes(&g, 0), vec![1, 5, 15, 40, 105, 275, 720]);
        let ball = generate_disc_ball(Tiling::Hepta, 5).unwrap();
        assert_eq!(ring_sizes(&ball.graph(), 0), vec![1, 7, 21, 56, 147, 385]);
    }

    #[test]
    fn dedup_is_sound() {
        for (tiling, depth) in [(Tiling::Penta, 8), (Tiling::Hepta, 7)] {
            let ball = generate_disc_ball(tiling, depth).unwrap();
            assert!(ball.min_center_separation() > 10.0 * MERGE_TOLERANCE);
            let g = ball.graph();
            for t in 0..g.len() {
                if g.is_interior(t) {
                    assert_eq!(g.adj[t].len(), tiling.p() as usize);
                }
            }
        }
    }

    #[test]
    fn distances() {
        let ball = generate_disc_ball(Tiling::Penta, 4).unwrap();
        let g = ball.graph();
        assert_eq!(bfs_distance(&g, 3, 3).unwrap(), 0);
        for root in 1..=5 {
            assert_eq!(bfs_distance(&g, 0, root).unwrap(), 1);
        }
        assert!(matches!(
            bfs_distance(&g, 0, 10_000),
            Err(OracleError::UnknownTile(_))
        ));
    }

    #[test]
    fn metric_axioms_interior() {
        let ball = generate_disc_ball(Tiling::Penta, 4).unwrap();
        let g = ball.graph();
        let interior: Vec<usize> = (0..g.len())
            .filter(|&t| g.depth_from_center[t] <= 2)
            .collect();
        let d: Vec<Vec<u32>> = interior
            .iter()
            .map(|&a| {
                interior
                    .iter()
                    .map(|&b| bfs_distance(&g, a, b).unwrap())
                    .collect()
            })
            .collect();
        for i in 0..interior.len() {
            for j in 0..interior.len() {
                assert_eq!(d[i][j], d[j][i]);
                assert_eq!(d[i][j] == 0, i == j);
                for k in 0..interior.len() {
                    assert!(d[i][k] <= d[i][j] + d[j][k]);
                }
            }
        }
    }

    #[test]
    fn geodesic_counts_basic() {
        let ball = generate_disc_ball(Tiling::Penta, 5).unwrap();
        let g = ball.graph();
        assert_eq!(geodesic_count(&g, 1, 1).unwrap(), 1);
        // the centre and a vertex-neighbour of it: two geodesics through
        // the two side-neighbours
        let vertex_tile = (0..g.len())
            .find(|&t| {
                g.depth_from_center[t] == 2
                    && g.adj[t]
                        .iter()
                        .filter(|&&u| u != 0 && g.depth_from_center[u] == 1)
                        .count()
                        == 2
            })
            .unwrap();
        assert_eq!(geodesic_count(&g, 0, vertex_tile).unwrap(), 2);
    }
}
