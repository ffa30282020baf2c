//! Combinatorial model of the pentagrid {5,4} and the ternary heptagrid {7,3}.
//!
//! The plane is a central cell plus `p` sectors, each carrying a standard
//! Fibonacci tree. Every non-central tile numbers its sides 1..p
//! counter-clockwise starting from the side shared with its father; the
//! central cell numbers side `i` towards the root of sector `i`.
//!
//! Two constructions are provided. [`build_ball`] takes the geometric
//! oracle as the constructor of record and induces the tree labels from
//! it. [`build_ball_from_rules`] uses only the tree rules and the local
//! adjacency rules of the grids; agreement of the two is checked by
//! [`compare_balls`].

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fibtree::{NodeStatus, TreeError, TreePath};
use crate::oracle::{self, OracleError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("radius {radius} exceeds the cap {cap} for the {tiling}")]
    RadiusTooLarge {
        tiling: Tiling,
        radius: u32,
        cap: u32,
    },
    #[error("tile {0} is on the boundary of the ball")]
    Boundary(String),
    #[error("tile {0} is not in the ball")]
    UnknownTile(String),
    #[error("the operation is defined for the pentagrid only")]
    PentagridOnly,
    #[error("tree structure violated: {0}")]
    TreeRuleViolation(String),
    #[error("bad coordinate {0:?}: {1}")]
    BadCoordinate(String, &'static str),
    #[error("bad digit {0:?}")]
    BadDigit(String),
    #[error("side {side} out of range 1..={p}")]
    BadSide { side: u8, p: u8 },
}

pub type Result<T> = std::result::Result<T, GridError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tiling {
    Penta,
    Hepta,
}

impl Tiling {
    /// Number of sides of a tile.
    pub fn p(self) -> u8 {
        match self {
            Tiling::Penta => 5,
            Tiling::Hepta => 7,
        }
    }

    /// Number of tiles around a vertex.
    pub fn q(self) -> u8 {
        match self {
            Tiling::Penta => 4,
            Tiling::Hepta => 3,
        }
    }

    /// A plain digit `d` leaves the father through side `d + son_side_offset`.
    pub fn son_side_offset(self) -> u8 {
        (self.p() - 3) / 2
    }

    pub fn radius_cap(self) -> u32 {
        match self {
            Tiling::Penta => 8,
            Tiling::Hepta => 7,
        }
    }

    /// (input, output) pairs of the barred digits 1̄, 2̄, ...
    fn barred_pairs(self) -> &'static [(u8, u8)] {
        match self {
            Tiling::Penta => &[(1, 2), (1, 3), (1, 4), (2, 5)],
            Tiling::Hepta => &[(1, 3), (1, 4), (1, 5), (2, 6), (2, 7), (3, 7)],
        }
    }
}

impl fmt::Display for Tiling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tiling::Penta => "pentagrid",
            Tiling::Hepta => "heptagrid",
        })
    }
}

impl FromStr for Tiling {
    type Err = GridError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "penta" | "pentagrid" | "5" => Ok(Tiling::Penta),
            "hepta" | "heptagrid" | "7" => Ok(Tiling::Hepta),
            _ => Err(GridError::BadCoordinate(s.to_string(), "unknown tiling")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarity {
    Plain,
    Barred,
    /// Centre to sector root, pair (i, 1).
    Bold,
    /// Sector root to centre, pair (1, i).
    BoldBarred,
}

/// One crossing between adjacent tiles, written as an arc digit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ArcDigit {
    pub polarity: Polarity,
    pub value: u8,
}

impl ArcDigit {
    pub fn plain(value: u8) -> Self {
        Self {
            polarity: Polarity::Plain,
            value,
        }
    }

    pub fn barred(value: u8) -> Self {
        Self {
            polarity: Polarity::Barred,
            value,
        }
    }

    pub fn bold(value: u8) -> Self {
        Self {
            polarity: Polarity::Bold,
            value,
        }
    }

    /// (input side, output side) of the crossing.
    pub fn pair(self, tiling: Tiling) -> Option<(u8, u8)> {
        let v = self.value;
        match self.polarity {
            Polarity::Bold if (1..=tiling.p()).contains(&v) => Some((v, 1)),
            Polarity::BoldBarred if (1..=tiling.p()).contains(&v) => Some((1, v)),
            Polarity::Barred => tiling
                .barred_pairs()
                .get(usize::from(v).checked_sub(1)?)
                .copied(),
            Polarity::Plain => tiling
                .barred_pairs()
                .get(usize::from(v).checked_sub(1)?)
                .map(|&(a, b)| (b, a)),
            _ => None,
        }
    }

    pub fn input(self, tiling: Tiling) -> Option<u8> {
        self.pair(tiling).map(|p| p.0)
    }

    pub fn output(self, tiling: Tiling) -> Option<u8> {
        self.pair(tiling).map(|p| p.1)
    }

    pub fn mirror(self) -> Self {
        let polarity = match self.polarity {
            Polarity::Plain => Polarity::Barred,
            Polarity::Barred => Polarity::Plain,
            Polarity::Bold => Polarity::BoldBarred,
            Polarity::BoldBarred => Polarity::Bold,
        };
        Self {
            polarity,
            value: self.value,
        }
    }

    /// Digit of a crossing between two non-central tiles.
    pub fn from_pair(tiling: Tiling, input: u8, output: u8) -> Option<Self> {
        let pairs = tiling.barred_pairs();
        if let Some(i) = pairs.iter().position(|&p| p == (input, output)) {
            return Some(Self::barred(i as u8 + 1));
        }
        pairs
            .iter()
            .position(|&p| p == (output, input))
            .map(|i| Self::plain(i as u8 + 1))
    }
}

impl fmt::Display for ArcDigit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.polarity {
            Polarity::Plain => write!(f, "{}", self.value),
            Polarity::Barred => write!(f, "~{}", self.value),
            Polarity::Bold => write!(f, "*{}", self.value),
            Polarity::BoldBarred => write!(f, "~*{}", self.value),
        }
    }
}

impl FromStr for ArcDigit {
    type Err = GridError;

    fn from_str(s: &str) -> Result<Self> {
        let (polarity, rest) = if let Some(r) = s.strip_prefix("~*") {
            (Polarity::BoldBarred, r)
        } else if let Some(r) = s.strip_prefix('~') {
            (Polarity::Barred, r)
        } else if let Some(r) = s.strip_prefix('*') {
            (Polarity::Bold, r)
        } else {
            (Polarity::Plain, s)
        };
        let value: u8 = rest
            .parse()
            .map_err(|_| GridError::BadDigit(s.to_string()))?;
        if value == 0 {
            return Err(GridError::BadDigit(s.to_string()));
        }
        Ok(Self { polarity, value })
    }
}

/// Parses a digit string such as `"~2~3 1 ~4"` or `"*3 1 2"`; whitespace
/// between digits is optional.
pub fn parse_digits(s: &str) -> Result<Vec<ArcDigit>> {
    let mut out = Vec::new();
    let mut chars = s.chars().filter(|c| !c.is_whitespace()).peekable();
    while chars.peek().is_some() {
        let mut tok = String::new();
        while let Some(&c) = chars.peek() {
            if c == '~' || c == '*' {
                tok.push(c);
                chars.next();
            } else {
                break;
            }
        }
        match chars.next() {
            Some(c) if c.is_ascii_digit() => tok.push(c),
            _ => return Err(GridError::BadDigit(tok)),
        }
        out.push(tok.parse()?);
    }
    Ok(out)
}

pub fn format_digits(digits: &[ArcDigit]) -> String {
    digits.iter().map(ToString::to_string).collect()
}

/// The full digit table: plain and barred digits followed by the bold ones.
pub fn arc_table(tiling: Tiling) -> Vec<ArcDigit> {
    let n = tiling.barred_pairs().len() as u8;
    let mut out: Vec<ArcDigit> = (1..=n)
        .flat_map(|v| [ArcDigit::barred(v), ArcDigit::plain(v)])
        .collect();
    out.extend((1..=tiling.p()).map(ArcDigit::bold));
    out
}

/// A tile: the central cell (sector 0) or a node of one sector tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TileId {
    pub sector: u8,
    pub path: TreePath,
}

impl TileId {
    pub fn center() -> Self {
        Self {
            sector: 0,
            path: TreePath::root(NodeStatus::ThreeNode),
        }
    }

    pub fn new(sector: u8, sons: Vec<u8>) -> Result<Self> {
        if sector == 0 && !sons.is_empty() {
            return Err(GridError::BadCoordinate(
                format!("0:{sons:?}"),
                "the centre has no path",
            ));
        }
        Ok(Self {
            sector,
            path: TreePath::new(NodeStatus::ThreeNode, sons)?,
        })
    }

    pub fn is_center(&self) -> bool {
        self.sector == 0
    }

    /// Distance to the central cell.
    pub fn level(&self) -> usize {
        if self.is_center() {
            0
        } else {
            self.path.depth() + 1
        }
    }

    pub fn status(&self) -> Option<NodeStatus> {
        if self.is_center() {
            None
        } else {
            Some(self.path.status().expect("validated path"))
        }
    }

    pub fn child(&self, son: u8) -> Result<TileId> {
        Ok(Self {
            sector: self.sector,
            path: self.path.child(son)?,
        })
    }

    /// Absolute coordinate: the sector followed by one plain digit per
    /// tree step (digit = son index + 1 under a 3-node, + 2 under a 2-node).
    pub fn coordinate(&self) -> String {
        if self.is_center() {
            return "0".into();
        }
        let mut s = self.sector.to_string();
        let mut st = NodeStatus::ThreeNode;
        for &i in self.path.sons() {
            s.push(char::from(b'0' + son_digit(st, i)));
            st = st.son_status(i).expect("validated path");
        }
        s
    }

    pub fn from_coordinate(tiling: Tiling, text: &str) -> Result<TileId> {
        let text: String = text
            .chars()
            .filter(|c| !c.is_whitespace() && *c != '*')
            .collect();
        if text == "0" {
            return Ok(Self::center());
        }
        let mut digits = text.chars().map(|c| c.to_digit(10).map(|d| d as u8));
        let sector = digits
            .next()
            .flatten()
            .filter(|s| (1..=tiling.p()).contains(s))
            .ok_or(GridError::BadCoordinate(
                text.clone(),
                "sector must be in 1..=p",
            ))?;
        let mut st = NodeStatus::ThreeNode;
        let mut sons = Vec::new();
        for d in digits {
            let d = d.ok_or(GridError::BadCoordinate(text.clone(), "non-digit"))?;
            let son = digit_son(st, d).ok_or(GridError::BadCoordinate(
                text.clone(),
                "digit invalid for the node status",
            ))?;
            sons.push(son);
            st = st.son_status(son)?;
        }
        TileId::new(sector, sons)
    }
}

impl fmt::Display for TileId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.coordinate())
    }
}

/// Plain digit of son `index` under a node of status `st`.
pub fn son_digit(st: NodeStatus, index: u8) -> u8 {
    match st {
        NodeStatus::ThreeNode => index + 1,
        NodeStatus::TwoNode => index + 2,
    }
}

pub fn digit_son(st: NodeStatus, digit: u8) -> Option<u8> {
    let son = match st {
        NodeStatus::ThreeNode => digit.checked_sub(1)?,
        NodeStatus::TwoNode => digit.checked_sub(2)?,
    };
    (son < st.arity()).then_some(son)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Neighbor {
    pub tile: usize,
    pub side: u8,
}

#[derive(Debug, Clone)]
pub struct BallTile {
    pub id: TileId,
    pub distance: u32,
    pub boundary: bool,
    /// Vertices (disc coordinates) with side `s` running from
    /// `vertices[s - 1]` to `vertices[s % p]`; empty for rule-built balls.
    pub vertices: Vec<Complex64>,
    pub center: Option<Complex64>,
}

impl BallTile {
    pub fn status(&self) -> Option<NodeStatus> {
        self.id.status()
    }
}

/// A finite ball of the tessellation around the central cell.
#[derive(Debug, Clone)]
pub struct GridBall {
    pub tiling: Tiling,
    pub radius: u32,
    tiles: Vec<BallTile>,
    index: HashMap<TileId, usize>,
    /// `adjacency[t][side - 1]`
    adjacency: Vec<Vec<Option<Neighbor>>>,
}

impl GridBall {
    pub fn tiles(&self) -> &[BallTile] {
        &self.tiles
    }

    pub fn len(&self) -> usize {
        self.tiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tiles.is_empty()
    }

    pub fn tile(&self, t: usize) -> &BallTile {
        &self.tiles[t]
    }

    pub fn index_of(&self, id: &TileId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn require(&self, id: &TileId) -> Result<usize> {
        self.index_of(id)
            .ok_or_else(|| GridError::UnknownTile(id.to_string()))
    }

    pub fn center(&self) -> usize {
        0
    }

    pub fn p(&self) -> u8 {
        self.tiling.p()
    }

    pub fn neighbor(&self, t: usize, side: u8) -> Option<Neighbor> {
        self.adjacency[t]
            .get(usize::from(side).checked_sub(1)?)
            .copied()
            .flatten()
    }

    pub fn is_interior(&self, t: usize) -> bool {
        !self.tiles[t].boundary
    }

    pub fn neighbors(&self, t: usize) -> impl Iterator<Item = (u8, Neighbor)> + '_ {
        self.adjacency[t]
            .iter()
            .enumerate()
            .filter_map(|(k, nb)| nb.map(|n| (k as u8 + 1, n)))
    }

    /// Digit of the crossing leaving `t` through `side`.
    pub fn arc_digit(&self, t: usize, side: u8) -> Option<ArcDigit> {
        let nb = self.neighbor(t, side)?;
        if self.tiles[t].id.is_center() {
            return Some(ArcDigit::bold(side));
        }
        if self.tiles[nb.tile].id.is_center() {
            return Some(ArcDigit {
                polarity: Polarity::BoldBarred,
                value: nb.side,
            });
        }
        ArcDigit::from_pair(self.tiling, side, nb.side)
    }

    /// Tile-metric neighbour lists, for the BFS helpers of the oracle.
    pub fn graph(&self) -> oracle::AdjacencyGraph {
        let mut edges = Vec::new();
        let adj = (0..self.len())
            .map(|t| {
                self.neighbors(t)
                    .map(|(s, n)| {
                        if t < n.tile {
                            edges.push(oracle::SharedSide {
                                a: t,
                                side_a: usize::from(s),
                                b: n.tile,
                                side_b: usize::from(n.side),
                            });
                        }
                        n.tile
                    })
                    .collect()
            })
            .collect();
        oracle::AdjacencyGraph {
            adj,
            edges,
            depth_from_center: self.tiles.iter().map(|t| t.distance).collect(),
            radius: self.radius,
        }
    }

    fn check_radius(tiling: Tiling, radius: u32) -> Result<()> {
        if radius > tiling.radius_cap() {
            return Err(GridError::RadiusTooLarge {
                tiling,
                radius,
                cap: tiling.radius_cap(),
            });
        }
        Ok(())
    }

    /// Tiles grouped by distance from the centre, each ring in
    /// counter-clockwise order (sector by sector, left to right).
    pub fn rings(&self) -> Vec<Vec<usize>> {
        let mut rings = vec![Vec::new(); self.radius as usize + 1];
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            let (ia, ib) = (&self.tiles[a].id, &self.tiles[b].id);
            (ia.level(), ia.sector, ring_key(ia)).cmp(&(ib.level(), ib.sector, ring_key(ib)))
        });
        for t in order {
            rings[self.tiles[t].distance as usize].push(t);
        }
        rings
    }
}

fn ring_key(id: &TileId) -> u128 {
    crate::fibtree::path_to_number(&id.path)
        .map(|n| n.0)
        .unwrap_or(0)
}

/// Builds the ball of the given radius from the geometric oracle.
pub fn build_ball(tiling: Tiling, radius: u32) -> Result<GridBall> {
    GridBall::check_radius(tiling, radius)?;
    let disc = oracle::generate_disc_ball(tiling, radius)?;
    induce_labels(&disc)
}

/// Induces tree labels and side numbers on a disc ball. A tile with two
/// neighbours one step closer to the centre takes as father the one across
/// the clockwise-first of the two (consecutive) sides.
pub fn induce_labels(disc: &oracle::DiscBall) -> Result<GridBall> {
    let tiling = disc.tiling;
    let p = usize::from(tiling.p());
    let n = disc.len();
    let gen = |t: usize| disc.tiles[t].generation;

    // geometric side of each tile facing its father
    let mut father_side = vec![usize::MAX; n];
    for (t, father) in father_side.iter_mut().enumerate().skip(1) {
        let cands: Vec<usize> = (0..p)
            .filter(|&k| disc.neighbors[t][k].is_some_and(|(u, _)| gen(u) + 1 == gen(t)))
            .collect();
        *father = match cands[..] {
            [k] => k,
            [a, b] if (a + 1) % p == b => a,
            [a, b] if (b + 1) % p == a => b,
            _ => {
                return Err(GridError::TreeRuleViolation(format!(
                    "tile with {} candidate fathers",
                    cands.len()
                )))
            }
        };
    }
    let number = |t: usize, k: usize| -> u8 {
        if t == 0 {
            k as u8 + 1
        } else {
            ((k + p - father_side[t]) % p) as u8 + 1
        }
    };
    let geo_side = |t: usize, s: u8| -> usize {
        if t == 0 {
            usize::from(s) - 1
        } else {
            (father_side[t] + usize::from(s) - 1) % p
        }
    };

    // tiles in generation order: fathers precede sons
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&t| (gen(t), t));
    let mut ids: Vec<Option<TileId>> = vec![None; n];
    ids[0] = Some(TileId::center());
    for &t in order.iter().skip(1) {
        let (f, fk) = disc.neighbors[t][father_side[t]].expect("father exists");
        let fid = ids[f].clone().expect("father labelled first");
        let side = number(f, fk);
        let id = if fid.is_center() {
            TileId::new(side, Vec::new())?
        } else {
            let st = fid.status().expect("non-central");
            let digit = side
                .checked_sub(tiling.son_side_offset())
                .filter(|&d| d > 0)
                .ok_or_else(|| {
                    GridError::TreeRuleViolation(format!("son on side {side} of {fid}"))
                })?;
            let son = digit_son(st, digit).ok_or_else(|| {
                GridError::TreeRuleViolation(format!("{st} {fid} has a son on side {side}"))
            })?;
            fid.child(son)?
        };
        ids[t] = Some(id);
    }

    let mut tiles = Vec::with_capacity(n);
    let mut index = HashMap::with_capacity(n);
    for (t, id) in ids.into_iter().enumerate() {
        let id = id.expect("all labelled");
        let start = if t == 0 { 0 } else { father_side[t] };
        let vertices = (0..p)
            .map(|j| disc.tiles[t].vertices[(start + j) % p])
            .collect();
        if index.insert(id.clone(), t).is_some() {
            return Err(GridError::TreeRuleViolation(format!("duplicate tile {id}")));
        }
        tiles.push(BallTile {
            id,
            distance: gen(t),
            boundary: gen(t) >= disc.depth,
            vertices,
            center: Some(disc.tiles[t].center),
        });
    }
    let adjacency = (0..n)
        .map(|t| {
            (1..=tiling.p())
                .map(|s| {
                    disc.neighbors[t][geo_side(t, s)].map(|(u, l)| Neighbor {
                        tile: u,
                        side: number(u, l),
                    })
                })
                .collect()
        })
        .collect();
    let ball = GridBall {
        tiling,
        radius: disc.depth,
        tiles,
        index,
        adjacency,
    };
    check_son_counts(&ball)?;
    Ok(ball)
}

fn check_son_counts(ball: &GridBall) -> Result<()> {
    for t in 1..ball.len() {
        if !ball.is_interior(t) {
            continue;
        }
        let sons = ball
            .neighbors(t)
            .filter(|(_, nb)| nb.side == 1 && ball.tiles[nb.tile].distance > ball.tiles[t].distance)
            .count();
        let st = ball.tiles[t].status().expect("non-central");
        if sons != usize::from(st.arity()) {
            return Err(GridError::TreeRuleViolation(format!(
                "{} is a {st} with {sons} sons",
                ball.tiles[t].id
            )));
        }
    }
    Ok(())
}

/// Builds the ball from the Fibonacci tree rules and the local adjacency
/// rules alone, without any geometry.
///
/// Rings are walked counter-clockwise. With `next(N)` the following tile on
/// the ring of `N`:
/// * pentagrid: side 5 of `N` meets side 2 of the leftmost son of `next(N)`;
/// * heptagrid: side 7 of `N` meets side 2 (3 if a 2-node) of `next(N)`,
///   and side 6 of `N` meets side 2 of the leftmost son of `next(N)`.
pub fn build_ball_from_rules(tiling: Tiling, radius: u32) -> Result<GridBall> {
    GridBall::check_radius(tiling, radius)?;
    let p = tiling.p();
    let mut tiles = vec![BallTile {
        id: TileId::center(),
        distance: 0,
        boundary: radius == 0,
        vertices: Vec::new(),
        center: None,
    }];
    let mut rings: Vec<Vec<usize>> = vec![vec![0]];
    let mut sons_of: Vec<Vec<usize>> = vec![Vec::new()];
    let mut adjacency: Vec<Vec<Option<Neighbor>>> = vec![vec![None; usize::from(p)]];

    fn link(adj: &mut [Vec<Option<Neighbor>>], a: usize, sa: u8, b: usize, sb: u8) {
        adj[a][usize::from(sa) - 1] = Some(Neighbor { tile: b, side: sb });
        adj[b][usize::from(sb) - 1] = Some(Neighbor { tile: a, side: sa });
    }

    for d in 1..=radius {
        let mut ring = Vec::new();
        let parents = rings[d as usize - 1].clone();
        for &f in &parents {
            let fid = tiles[f].id.clone();
            let children: Vec<(TileId, u8)> = if fid.is_center() {
                (1..=p)
                    .map(|s| TileId::new(s, Vec::new()).map(|id| (id, s)))
                    .collect::<Result<_>>()?
            } else {
                let st = fid.status().expect("non-central");
                (0..st.arity())
                    .map(|i| {
                        fid.child(i)
                            .map(|id| (id, son_digit(st, i) + tiling.son_side_offset()))
                    })
                    .collect::<Result<_>>()?
            };
            for (id, side) in children {
                let t = tiles.len();
                tiles.push(BallTile {
                    id,
                    distance: d,
                    boundary: d == radius,
                    vertices: Vec::new(),
                    center: None,
                });
                sons_of.push(Vec::new());
                adjacency.push(vec![None; usize::from(p)]);
                sons_of[f].push(t);
                link(&mut adjacency, f, side, t, 1);
                ring.push(t);
            }
        }
        rings.push(ring);
    }

    for ring in rings.iter().skip(1) {
        let len = ring.len();
        for (i, &t) in ring.iter().enumerate() {
            let next = ring[(i + 1) % len];
            let nephew = sons_of[next].first().copied();
            match tiling {
                Tiling::Penta => {
                    if let Some(m) = nephew {
                        link(&mut adjacency, t, 5, m, 2);
                    }
                }
                Tiling::Hepta => {
                    let side = match tiles[next].status() {
                        Some(NodeStatus::TwoNode) => 3,
                        _ => 2,
                    };
                    link(&mut adjacency, t, 7, next, side);
                    if let Some(m) = nephew {
                        link(&mut adjacency, t, 6, m, 2);
                    }
                }
            }
        }
    }

    let index = tiles
        .iter()
        .enumerate()
        .map(|(i, t)| (t.id.clone(), i))
        .collect();
    Ok(GridBall {
        tiling,
        radius,
        tiles,
        index,
        adjacency,
    })
}

/// Differences between two balls compared tile-by-tile and side-by-side
/// through their tile identifiers. Empty means isomorphic.
pub fn compare_balls(a: &GridBall, b: &GridBall) -> Vec<String> {
    let mut diffs = Vec::new();
    if a.tiling != b.tiling || a.radius != b.radius {
        diffs.push("different tiling or radius".to_string());
        return diffs;
    }
    for (t, tile) in a.tiles.iter().enumerate() {
        let Some(u) = b.index_of(&tile.id) else {
            diffs.push(format!("{} missing from the second ball", tile.id));
            continue;
        };
        if tile.distance != b.tiles[u].distance || tile.boundary != b.tiles[u].boundary {
            diffs.push(format!("{} has different distance", tile.id));
        }
        for s in 1..=a.p() {
            let na = a
                .neighbor(t, s)
                .map(|n| (a.tiles[n.tile].id.clone(), n.side));
            let nb = b
                .neighbor(u, s)
                .map(|n| (b.tiles[n.tile].id.clone(), n.side));
            if na != nb {
                diffs.push(format!("{} side {s}: {na:?} vs {nb:?}", tile.id));
            }
        }
    }
    for tile in &b.tiles {
        if a.index_of(&tile.id).is_none() {
            diffs.push(format!("{} missing from the first ball", tile.id));
        }
    }
    diffs
}

/// For each side of an interior tile, the number of the same edge in the
/// neighbouring tile.
pub fn output_table(ball: &GridBall, t: usize) -> Result<BTreeMap<u8, u8>> {
    if !ball.is_interior(t) {
        return Err(GridError::Boundary(ball.tiles[t].id.to_string()));
    }
    Ok(ball
        .neighbors(t)
        .map(|(side, nb)| (side, nb.side))
        .collect())
}

/// Global pentagrid edge numbering in 1..=5 where both incident pentagons
/// agree on every edge.
#[derive(Debug, Clone)]
pub struct WangNumbering {
    /// `labels[t][side - 1]`
    pub labels: Vec<Vec<u8>>,
    pub orientation: Vec<i8>,
    /// Edges reached twice with disagreeing numbers.
    pub conflicts: usize,
    /// Tiles reached twice with disagreeing orientation (odd cycles).
    pub parity_conflicts: usize,
}

impl WangNumbering {
    pub fn label(&self, t: usize, side: u8) -> u8 {
        self.labels[t][usize::from(side) - 1]
    }

    /// Side of `t` carrying edge number `label`.
    pub fn side_with_label(&self, t: usize, label: u8) -> Option<u8> {
        self.labels[t]
            .iter()
            .position(|&l| l == label)
            .map(|k| k as u8 + 1)
    }
}

pub fn wang_numbering(ball: &GridBall, seed_tile: usize, seed_side: u8) -> Result<WangNumbering> {
    if ball.tiling != Tiling::Penta {
        return Err(GridError::PentagridOnly);
    }
    if !ball.is_interior(seed_tile) {
        return Err(GridError::Boundary(ball.tiles[seed_tile].id.to_string()));
    }
    if !(1..=5).contains(&seed_side) {
        return Err(GridError::BadSide {
            side: seed_side,
            p: 5,
        });
    }
    let wrap = |x: i32| (x.rem_euclid(5) + 1) as u8;
    let n = ball.len();
    let mut labels = vec![Vec::new(); n];
    let mut orientation = vec![0i8; n];
    labels[seed_tile] = (1..=5u8)
        .map(|s| wrap(i32::from(s) - i32::from(seed_side)))
        .collect();
    orientation[seed_tile] = 1;
    let (mut conflicts, mut parity_conflicts) = (0, 0);
    let mut queue = VecDeque::from([seed_tile]);
    while let Some(t) = queue.pop_front() {
        for (side, nb) in ball.neighbors(t).collect::<Vec<_>>() {
            let e = i32::from(labels[t][usize::from(side) - 1]);
            let or = -orientation[t];
            let want: Vec<u8> = (1..=5u8)
                .map(|j| wrap(e - 1 + i32::from(or) * (i32::from(j) - i32::from(nb.side))))
                .collect();
            if orientation[nb.tile] == 0 {
                orientation[nb.tile] = or;
                labels[nb.tile] = want;
                queue.push_back(nb.tile);
            } else {
                if orientation[nb.tile] != or {
                    parity_conflicts += 1;
                }
                if labels[nb.tile][usize::from(nb.side) - 1] != e as u8 {
                    conflicts += 1;
                }
            }
        }
    }
    Ok(WangNumbering {
        labels,
        orientation,
        conflicts,
        parity_conflicts,
    })
}

/// Orientation of `t` under the numbering seeded at the central cell.
pub fn orientation(ball: &GridBall, t: usize) -> Result<i8> {
    let numbering = wang_numbering(ball, ball.center(), 1)?;
    Ok(numbering.orientation[t])
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct BallFile {
    pub tiling: Tiling,
    pub radius: u32,
    pub tiles: Vec<BallFileTile>,
    pub adjacency: Vec<BallFileArc>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct BallFileTile {
    pub sector: u8,
    pub path: Vec<u8>,
    pub coordinate: String,
    pub status: Option<u8>,
    pub boundary: bool,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct BallFileArc {
    pub tile: usize,
    pub side: u8,
    pub neighbor_tile: usize,
    pub neighbor_side: u8,
    pub digit: String,
}

impl GridBall {
    pub fn to_file(&self) -> BallFile {
        let tiles = self
            .tiles
            .iter()
            .map(|t| BallFileTile {
                sector: t.id.sector,
                path: t.id.path.sons().to_vec(),
                coordinate: t.id.coordinate(),
                status: t.status().map(NodeStatus::arity),
                boundary: t.boundary,
            })
            .collect();
        let adjacency = (0..self.len())
            .flat_map(|t| {
                self.neighbors(t).map(move |(side, nb)| BallFileArc {
                    tile: t,
                    side,
                    neighbor_tile: nb.tile,
                    neighbor_side: nb.side,
                    digit: self
                        .arc_digit(t, side)
                        .map(|d| d.to_string())
                        .unwrap_or_else(|| "?".into()),
                })
            })
            .collect();
        BallFile {
            tiling: self.tiling,
            radius: self.radius,
            tiles,
            adjacency,
        }
    }

    pub fn from_file(file: &BallFile) -> Result<GridBall> {
        let p = file.tiling.p();
        let mut tiles = Vec::with_capacity(file.tiles.len());
        let mut index = HashMap::new();
        for (i, t) in file.tiles.iter().enumerate() {
            let id = TileId::new(t.sector, t.path.clone())?;
            index.insert(id.clone(), i);
            tiles.push(BallTile {
                distance: id.level() as u32,
                id,
                boundary: t.boundary,
                vertices: Vec::new(),
                center: None,
            });
        }
        let mut adjacency = vec![vec![None; usize::from(p)]; tiles.len()];
        for arc in &file.adjacency {
            if arc.side == 0 || arc.side > p || arc.tile >= tiles.len() {
                return Err(GridError::BadSide { side: arc.side, p });
            }
            adjacency[arc.tile][usize::from(arc.side) - 1] = Some(Neighbor {
                tile: arc.neighbor_tile,
                side: arc.neighbor_side,
            });
        }
        Ok(GridBall {
            tiling: file.tiling,
            radius: file.radius,
            tiles,
            index,
            adjacency,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_digits() {
        let h = Tiling::Hepta;
        assert_eq!(ArcDigit::barred(5).pair(h), Some((2, 7)));
        assert_eq!(ArcDigit::plain(4).pair(Tiling::Penta), Some((5, 2)));
        assert_eq!(ArcDigit::plain(6).mirror(), ArcDigit::barred(6));
        assert_eq!(ArcDigit::barred(6).pair(h), Some((3, 7)));
        assert_eq!(ArcDigit::bold(4).pair(h), Some((4, 1)));
        assert_eq!(ArcDigit::plain(5).pair(Tiling::Penta), None);
        assert_eq!(arc_table(h).len(), 12 + 7);
        assert_eq!(arc_table(Tiling::Penta).len(), 8 + 5);
        for tiling in [Tiling::Penta, Tiling::Hepta] {
            for d in arc_table(tiling) {
                let (a, b) = d.pair(tiling).unwrap();
                assert_eq!(d.mirror().pair(tiling), Some((b, a)));
                assert_eq!(d.mirror().mirror(), d);
                if matches!(d.polarity, Polarity::Plain | Polarity::Barred) {
                    assert_eq!(ArcDigit::from_pair(tiling, a, b), Some(d));
                }
            }
        }
    }

    #[test]
    fn digit_text() {
        let ds = parse_digits("~2~3 1 *4 ~*5").unwrap();
        assert_eq!(format_digits(&ds), "~2~31*4~*5");
        assert!(parse_digits("~").is_err());
        assert!("0".parse::<ArcDigit>().is_err());
    }

    #[test]
    fn coordinates_roundtrip() {
        let id = TileId::from_coordinate(Tiling::Hepta, "312332").unwrap();
        assert_eq!(id.sector, 3);
        assert_eq!(id.path.sons(), &[0, 0, 1, 2, 1]);
        assert_eq!(id.coordinate(), "312332");
        assert_eq!(
            TileId::from_coordinate(Tiling::Hepta, "*3 1 2 3 3 2").unwrap(),
            id
        );
        assert!(TileId::from_coordinate(Tiling::Penta, "6").is_err());
        // under a 2-node the digits are 2 and 3
        assert!(TileId::from_coordinate(Tiling::Penta, "311").is_err());
    }

    #[test]
    fn small_balls() {
        let b0 = build_ball(Tiling::Penta, 0).unwrap();
        assert_eq!(b0.len(), 1);
        assert_eq!(b0.neighbors(0).count(), 0);
        let b1 = build_ball(Tiling::Penta, 1).unwrap();
        assert_eq!(b1.len(), 6);
        for s in 1..=5 {
            let nb = b1.neighbor(0, s).unwrap();
            assert_eq!(nb.side, 1);
            assert_eq!(b1.tile(nb.tile).id, TileId::new(s, vec![]).unwrap());
        }
        assert!(matches!(
            build_ball(Tiling::Hepta, 8),
            Err(GridError::RadiusTooLarge { .. })
        ));
    }

    #[test]
    fn geometric_and_rule_balls_agree() {
        for (tiling, r) in [(Tiling::Penta, 5), (Tiling::Hepta, 4)] {
            let g = build_ball(tiling, r).unwrap();
            let c = build_ball_from_rules(tiling, r).unwrap();
            assert_eq!(compare_balls(&g, &c), Vec::<String>::new());
        }
    }

    #[test]
    fn every_arc_is_a_table_digit() {
        for (tiling, r) in [(Tiling::Penta, 5), (Tiling::Hepta, 4)] {
            let ball = build_ball(tiling, r).unwrap();
            for t in 0..ball.len() {
                for (side, nb) in ball.neighbors(t) {
                    let d = ball.arc_digit(t, side).expect("classifiable");
                    assert_eq!(d.pair(tiling), Some((side, nb.side)));
                    if nb.side == 1 && ball.tile(nb.tile).distance > ball.tile(t).distance && t != 0
                    {
                        assert_eq!(d.polarity, Polarity::Plain);
                        assert!((1..=3).contains(&d.value));
                    }
                }
            }
        }
    }

    #[test]
    fn output_tables() {
        let ball = build_ball(Tiling::Hepta, 4).unwrap();
        let mut saw_two = false;
        for t in 1..ball.len() {
            if !ball.is_interior(t) {
                assert!(output_table(&ball, t).is_err());
                continue;
            }
            let out = output_table(&ball, t).unwrap();
            assert_eq!(out.len(), 7);
            for (&a, &b) in &out {
                let nb = ball.neighbor(t, a).unwrap();
                assert_eq!(ball.neighbor(nb.tile, b).unwrap().tile, t);
                if a == 7 && ball.tile(nb.tile).status() == Some(NodeStatus::TwoNode) {
                    assert_eq!(b, 3);
                }
                if a == 7 && ball.tile(nb.tile).status() == Some(NodeStatus::ThreeNode) {
                    assert_eq!(b, 2);
                    saw_two = true;
                }
            }
            // side 1 leads to the father via 1̄, 2̄ or 3̄
            let d = ball.arc_digit(t, 1).unwrap();
            assert!(matches!(
                d.polarity,
                Polarity::Barred | Polarity::BoldBarred
            ));
        }
        assert!(saw_two);
    }

    #[test]
    fn wang_examples() {
        let ball = build_ball(Tiling::Penta, 4).unwrap();
        let w = wang_numbering(&ball, 0, 1).unwrap();
        assert_eq!(w.labels[0], vec![1, 2, 3, 4, 5]);
        for s in 1..=5 {
            let nb = ball.neighbor(0, s).unwrap();
            assert_eq!(w.orientation[nb.tile], -1);
            let l = &w.labels[nb.tile];
            // clockwise increasing: each next side counter-clockwise is one less
            for j in 0..5 {
                assert_eq!(
                    (i32::from(l[j]) - i32::from(l[(j + 1) % 5])).rem_euclid(5),
                    1
                );
            }
            assert_eq!(w.label(nb.tile, nb.side), s);
        }
        assert_eq!(w.conflicts, 0);
        assert_eq!(w.parity_conflicts, 0);
        assert_eq!(orientation(&ball, 0).unwrap(), 1);
        let hepta = build_ball(Tiling::Hepta, 2).unwrap();
        assert_eq!(
            wang_numbering(&hepta, 0, 1).unwrap_err(),
            GridError::PentagridOnly
        );
    }

    #[test]
    fn file_roundtrip() {
        let ball = build_ball(Tiling::Penta, 3).unwrap();
        let file = ball.to_file();
        let text = serde_json::to_string(&file).unwrap();
        let back: BallFile = serde_json::from_str(&text).unwrap();
        let rebuilt = GridBall::from_file(&back).unwrap();
        assert_eq!(compare_balls(&ball, &rebuilt), Vec::<String>::new());
    }
}
