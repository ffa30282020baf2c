//! Geodesic addressing: relative trees, arc-digit accumulation, the
//! two-stack private reply, and the pentagrid edge-number system.
//!
//! Around any cell `c` the plane splits into `p` sectors exactly as around
//! the central cell; relative sector `j` leaves `c` through its side `j`.
//! A relay entered on side `β₀` with relative status `st` sends to its son
//! `s` through side
//!
//! ```text
//! α₁ = 1 + ((β₀ − 1) + 2 + (p − 5)/2 + s − st) mod p
//! ```
//!
//! and the address grows by the arc digit `(α₁, output(α₁))`.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fibtree::{NodeStatus, TreeError};
use crate::grid::{
    son_digit, wang_numbering, ArcDigit, GridBall, GridError, Polarity, TileId, Tiling,
    WangNumbering,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RoutingError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("son index {s} invalid for a {status}")]
    BadSon { s: u8, status: NodeStatus },
    #[error("next side {0} is the entry side: conventions are miscalibrated")]
    BackToEntry(u8),
    #[error("tile {0} reached twice by the broadcast")]
    DuplicateDelivery(String),
    #[error("tile {0} is not reached by the relative tree of the source inside this ball")]
    Unreachable(String),
    #[error("address is not chainable at digit {index} ({digit})")]
    Malformed { index: usize, digit: String },
    #[error("the edge-number system exists on the pentagrid only")]
    PentagridOnly,
    #[error("edge number {0} out of range")]
    BadLabel(u8),
}

pub type Result<T> = std::result::Result<T, RoutingError>;

/// Integer value of a relay status inside formulas (1) and (2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StatusEncoding {
    pub two: i64,
    pub three: i64,
}

impl StatusEncoding {
    /// The only encoding under which the formulas reproduce the
    /// father-to-son arcs of the grid (see [`calibrate_status_encoding`]).
    pub const CALIBRATED: StatusEncoding = StatusEncoding { two: 0, three: 1 };

    pub fn value(self, st: NodeStatus) -> i64 {
        match st {
            NodeStatus::TwoNode => self.two,
            NodeStatus::ThreeNode => self.three,
        }
    }
}

impl Default for StatusEncoding {
    fn default() -> Self {
        Self::CALIBRATED
    }
}

/// Next side: alpha = 1 + (beta0 - 1 + 2 + (p-5)/2 + s - st) mod p, the status
/// already mapped to an integer.
pub fn formula_alpha(p: u8, beta0: u8, s: i64, st_r: i64) -> u8 {
    let p = i64::from(p);
    (1 + (i64::from(beta0) - 1 + 2 + (p - 5) / 2 + s - st_r).rem_euclid(p)) as u8
}

/// Next edge number: delta1 = 1 + (delta0 - 1 + or (2 + s - st)) mod 5.
pub fn formula_delta(delta0: u8, s: i64, st_r: i64, or: i8) -> u8 {
    (1 + (i64::from(delta0) - 1 + i64::from(or) * (2 + s - st_r)).rem_euclid(5)) as u8
}

fn check_son(s: u8, status: NodeStatus) -> Result<()> {
    if s >= status.arity() {
        return Err(RoutingError::BadSon { s, status });
    }
    Ok(())
}

/// Side through which a relay entered on `beta0` reaches its son `s`.
pub fn next_side(p: u8, beta0: u8, s: u8, st_r: NodeStatus, enc: StatusEncoding) -> Result<u8> {
    check_son(s, st_r)?;
    let alpha = formula_alpha(p, beta0, i64::from(s), enc.value(st_r));
    if alpha == beta0 {
        return Err(RoutingError::BackToEntry(alpha));
    }
    Ok(alpha)
}

/// The arc digit to son `s` of `relay`: `α₁` from formula (1), `β₁` from
/// the relay's output table.
pub fn next_arc(
    ball: &GridBall,
    relay: usize,
    beta0: u8,
    s: u8,
    st_r: NodeStatus,
) -> Result<ArcDigit> {
    let alpha = next_side(ball.p(), beta0, s, st_r, StatusEncoding::CALIBRATED)?;
    ball.arc_digit(relay, alpha)
        .ok_or_else(|| RoutingError::Unreachable(ball.tile(relay).id.to_string()))
}

/// Edge number of the arc to son `s` in the pentagrid special system.
pub fn next_digit_special(delta0: u8, s: u8, st_r: NodeStatus, or: i8) -> Result<u8> {
    check_son(s, st_r)?;
    if !(1..=5).contains(&delta0) {
        return Err(RoutingError::BadLabel(delta0));
    }
    Ok(formula_delta(
        delta0,
        i64::from(s),
        StatusEncoding::CALIBRATED.value(st_r),
        or,
    ))
}

/// A sequence of absolute arcs, starting from the sender.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArcAddress {
    pub digits: Vec<ArcDigit>,
}

impl ArcAddress {
    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    /// Reverse path: reversed order, each arc crossed the other way.
    pub fn reversed(&self) -> ArcAddress {
        ArcAddress {
            digits: self.digits.iter().rev().map(|d| d.mirror()).collect(),
        }
    }
}

impl fmt::Display for ArcAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.digits {
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// Tiles visited by following `address` from `start`; each digit must leave
/// the current tile through its input side and arrive on its output side.
pub fn walk_address(ball: &GridBall, start: usize, address: &ArcAddress) -> Result<Vec<usize>> {
    let mut tiles = vec![start];
    let mut t = start;
    for (index, d) in address.digits.iter().enumerate() {
        let bad = || RoutingError::Malformed {
            index,
            digit: d.to_string(),
        };
        let (a, b) = d.pair(ball.tiling).ok_or_else(bad)?;
        let at_center = t == ball.center();
        let bold = matches!(d.polarity, Polarity::Bold);
        if at_center != bold {
            return Err(bad());
        }
        let nb = ball.neighbor(t, a).ok_or_else(bad)?;
        if nb.side != b {
            return Err(bad());
        }
        t = nb.tile;
        tiles.push(t);
    }
    Ok(tiles)
}

#[derive(Debug, Clone)]
pub struct RelativeNode {
    pub tile: usize,
    /// Index of the relative father in [`RelativeTree::nodes`].
    pub father: Option<usize>,
    /// `None` for the source itself.
    pub status: Option<NodeStatus>,
    /// Side of the tile facing its relative father.
    pub entry_side: u8,
    /// Relative sector for the sector roots, otherwise the plain digit.
    pub digit: u8,
    /// Son index under the father (sector roots: sector - 1).
    pub son_index: u8,
    pub arc: Option<ArcDigit>,
    pub depth: u32,
    /// All sons of this node exist in the ball.
    pub complete: bool,
}

/// The tree of `c` as the broadcast builds it, relay by relay.
#[derive(Debug, Clone)]
pub struct RelativeTree {
    pub source: usize,
    pub nodes: Vec<RelativeNode>,
    by_tile: HashMap<usize, usize>,
}

/// Relative tree rooted at `c`, built with formula (1). Relays forward to
/// every son that exists in the ball; a tile reached twice is an error.
pub fn relative_tree(ball: &GridBall, c: usize) -> Result<RelativeTree> {
    let p = ball.p();
    let mut nodes = vec![RelativeNode {
        tile: c,
        father: None,
        status: None,
        entry_side: 0,
        digit: 0,
        son_index: 0,
        arc: None,
        depth: 0,
        complete: true,
    }];
    let mut by_tile = HashMap::from([(c, 0usize)]);
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let node = nodes[i].clone();
        let exits: Vec<(u8, u8, NodeStatus, u8)> = match node.status {
            None => (1..=p)
                .map(|j| (j, j, NodeStatus::ThreeNode, j - 1))
                .collect(),
            Some(st) => (0..st.arity())
                .map(|s| {
                    let side = next_side(p, node.entry_side, s, st, StatusEncoding::CALIBRATED)?;
                    Ok((side, son_digit(st, s), st.son_status(s)?, s))
                })
                .collect::<Result<_>>()?,
        };
        for (side, digit, status, son_index) in exits {
            let Some(nb) = ball.neighbor(node.tile, side) else {
                nodes[i].complete = false;
                continue;
            };
            if by_tile.contains_key(&nb.tile) {
                return Err(RoutingError::DuplicateDelivery(
                    ball.tile(nb.tile).id.to_string(),
                ));
            }
            let k = nodes.len();
            nodes.push(RelativeNode {
                tile: nb.tile,
                father: Some(i),
                status: Some(status),
                entry_side: nb.side,
                digit,
                son_index,
                arc: ball.arc_digit(node.tile, side),
                depth: node.depth + 1,
                complete: true,
            });
            by_tile.insert(nb.tile, k);
            queue.push_back(k);
        }
    }
    Ok(RelativeTree {
        source: c,
        nodes,
        by_tile,
    })
}

impl RelativeTree {
    pub fn node_of(&self, tile: usize) -> Option<&RelativeNode> {
        self.by_tile.get(&tile).map(|&i| &self.nodes[i])
    }

    fn chain(&self, tile: usize) -> Option<Vec<usize>> {
        let mut i = *self.by_tile.get(&tile)?;
        let mut out = vec![i];
        while let Some(f) = self.nodes[i].father {
            out.push(f);
            i = f;
        }
        out.reverse();
        Some(out)
    }

    /// Node indices from the source down to `tile`.
    pub fn node_path(&self, tile: usize) -> Option<Vec<usize>> {
        self.chain(tile)
    }

    pub fn address(&self, tile: usize) -> Option<ArcAddress> {
        let chain = self.chain(tile)?;
        Some(ArcAddress {
            digits: chain
                .iter()
                .skip(1)
                .map(|&i| self.nodes[i].arc.expect("arc of a non-source node"))
                .collect(),
        })
    }

    pub fn tiles_on_path(&self, tile: usize) -> Option<Vec<usize>> {
        Some(
            self.chain(tile)?
                .iter()
                .map(|&i| self.nodes[i].tile)
                .collect(),
        )
    }

    /// `0` for the source, otherwise the relative sector followed by the
    /// plain digits of the path.
    pub fn relative_coordinate(&self, tile: usize) -> Option<String> {
        let chain = self.chain(tile)?;
        if chain.len() == 1 {
            return Some("0".into());
        }
        Some(
            chain
                .iter()
                .skip(1)
                .map(|&i| char::from(b'0' + self.nodes[i].digit))
                .collect(),
        )
    }

    /// True when every node on the path to `tile`, and the whole subtree
    /// under it down to the ball boundary, is present.
    pub fn path_complete(&self, tile: usize) -> bool {
        self.chain(tile)
            .map(|c| c.iter().rev().skip(1).all(|&i| self.nodes[i].complete))
            .unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Address of every tile reached by the broadcast from `c`.
pub fn broadcast_addresses(ball: &GridBall, c: usize) -> Result<BTreeMap<usize, ArcAddress>> {
    let tree = relative_tree(ball, c)?;
    Ok(tree
        .nodes
        .iter()
        .map(|n| (n.tile, tree.address(n.tile).expect("node in tree")))
        .collect())
}

/// Forward and reverse routes between two tiles.
#[derive(Debug, Clone, Serialize)]
pub struct Route {
    pub forward: ArcAddress,
    pub reverse: ArcAddress,
    pub relative_coordinate: String,
    pub tiles: Vec<usize>,
}

impl Route {
    pub fn length(&self) -> usize {
        self.forward.len()
    }
}

pub fn route(ball: &GridBall, c: usize, d: usize) -> Result<Route> {
    route_in(&relative_tree(ball, c)?, ball, d)
}

pub fn route_in(tree: &RelativeTree, ball: &GridBall, d: usize) -> Result<Route> {
    let unreachable = || RoutingError::Unreachable(ball.tile(d).id.to_string());
    let forward = tree.address(d).ok_or_else(unreachable)?;
    let trace = reply_route(ball, d, &forward)?;
    Ok(Route {
        reverse: trace.reverse,
        relative_coordinate: tree.relative_coordinate(d).ok_or_else(unreachable)?,
        tiles: tree.tiles_on_path(d).ok_or_else(unreachable)?,
        forward,
    })
}

/// Convenience: route between two absolute coordinates such as `"312332"`.
pub fn route_coordinates(ball: &GridBall, from: &str, to: &str) -> Result<Route> {
    let c = ball.require(&TileId::from_coordinate(ball.tiling, from)?)?;
    let d = ball.require(&TileId::from_coordinate(ball.tiling, to)?)?;
    route(ball, c, d)
}

/// One relay of the private reply: the two sequences it forwards.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StackState {
    pub tile: usize,
    /// `δ₀ .. δᵢ₋₁`, still to be undone (top = last).
    pub pending: Vec<ArcDigit>,
    /// Arcs already undone, most recent on top.
    pub undone: Vec<ArcDigit>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReplyTrace {
    pub states: Vec<StackState>,
    pub tiles: Vec<usize>,
    pub reverse: ArcAddress,
}

/// Runs the reply from `d` back to the sender of `address`. Each relay pops
/// the top of the first sequence, pushes it on the second, and leaves
/// through the output side of that arc (the side it came in through).
pub fn reply_route(ball: &GridBall, d: usize, address: &ArcAddress) -> Result<ReplyTrace> {
    let mut pending = address.digits.clone();
    let mut undone = Vec::new();
    let mut t = d;
    let mut states = vec![StackState {
        tile: t,
        pending: pending.clone(),
        undone: undone.clone(),
    }];
    let mut tiles = vec![t];
    let mut reverse = Vec::new();
    while let Some(delta) = pending.pop() {
        let index = pending.len();
        let bad = || RoutingError::Malformed {
            index,
            digit: delta.to_string(),
        };
        let (a, b) = delta.pair(ball.tiling).ok_or_else(bad)?;
        let nb = ball.neighbor(t, b).ok_or_else(bad)?;
        if nb.side != a {
            return Err(bad());
        }
        reverse.push(delta.mirror());
        undone.push(delta);
        t = nb.tile;
        tiles.push(t);
        states.push(StackState {
            tile: t,
            pending: pending.clone(),
            undone: undone.clone(),
        });
    }
    Ok(ReplyTrace {
        states,
        tiles,
        reverse: ArcAddress { digits: reverse },
    })
}

/// Absolute edge-number coordinate: the centre's edge number towards the
/// sector, then the edge numbers crossed along the tree path.
pub fn wang_coordinate(ball: &GridBall, numbering: &WangNumbering, t: usize) -> Result<String> {
    if ball.tiling != Tiling::Penta {
        return Err(RoutingError::PentagridOnly);
    }
    let id = &ball.tile(t).id;
    if id.is_center() {
        return Ok("0".into());
    }
    let mut out = String::new();
    let mut cur = ball.center();
    let mut side = id.sector;
    let mut st = NodeStatus::ThreeNode;
    let mut sons = id.path.sons().iter();
    loop {
        out.push(char::from(b'0' + numbering.label(cur, side)));
        cur = ball
            .neighbor(cur, side)
            .ok_or_else(|| RoutingError::Unreachable(id.to_string()))?
            .tile;
        let Some(&s) = sons.next() else { break };
        side = son_digit(st, s) + ball.tiling.son_side_offset();
        st = st.son_status(s)?;
    }
    Ok(out)
}

/// Tile named by an edge-number coordinate.
pub fn wang_tile(ball: &GridBall, numbering: &WangNumbering, text: &str) -> Result<usize> {
    if ball.tiling != Tiling::Penta {
        return Err(RoutingError::PentagridOnly);
    }
    let mut t = ball.center();
    if text.trim() == "0" {
        return Ok(t);
    }
    for c in text.chars().filter(|c| !c.is_whitespace()) {
        let label = c
            .to_digit(10)
            .map(|d| d as u8)
            .ok_or(RoutingError::BadLabel(0))?;
        let side = numbering
            .side_with_label(t, label)
            .ok_or(RoutingError::BadLabel(label))?;
        t = ball
            .neighbor(t, side)
            .ok_or_else(|| RoutingError::Unreachable(text.to_string()))?
            .tile;
    }
    Ok(t)
}

#[derive(Debug, Clone, Serialize)]
pub struct WangRoute {
    pub digits: Vec<u8>,
    pub tiles: Vec<usize>,
}

impl WangRoute {
    pub fn text(&self) -> String {
        self.digits.iter().map(|d| char::from(b'0' + d)).collect()
    }
}

/// Route in the special system: the relative path of `d` drives formula (2)
/// from the edge number of `c`'s exit side; the tiles are found by following
/// edge numbers only.
pub fn wang_route(
    ball: &GridBall,
    numbering: &WangNumbering,
    tree: &RelativeTree,
    d: usize,
) -> Result<WangRoute> {
    if ball.tiling != Tiling::Penta {
        return Err(RoutingError::PentagridOnly);
    }
    let chain = tree
        .node_path(d)
        .ok_or_else(|| RoutingError::Unreachable(ball.tile(d).id.to_string()))?;
    let mut t = tree.source;
    let mut tiles = vec![t];
    let mut digits = Vec::new();
    let mut delta = 0u8;
    let mut status: Option<NodeStatus> = None;
    for &i in chain.iter().skip(1) {
        let node = &tree.nodes[i];
        delta = match status {
            None => numbering.label(t, node.digit),
            Some(st) => next_digit_special(delta, node.son_index, st, numbering.orientation[t])?,
        };
        let side = numbering
            .side_with_label(t, delta)
            .ok_or(RoutingError::BadLabel(delta))?;
        t = ball
            .neighbor(t, side)
            .ok_or_else(|| RoutingError::Unreachable(ball.tile(d).id.to_string()))?
            .tile;
        digits.push(delta);
        tiles.push(t);
        status = node.status;
    }
    Ok(WangRoute { digits, tiles })
}

/// Route between two edge-number coordinates, e.g. `"324142"` → `"2421413"`.
pub fn wang_route_coordinates(
    ball: &GridBall,
    seed_side: u8,
    from: &str,
    to: &str,
) -> Result<WangRoute> {
    let numbering = wang_numbering(ball, ball.center(), seed_side)?;
    let c = wang_tile(ball, &numbering, from)?;
    let d = wang_tile(ball, &numbering, to)?;
    let tree = relative_tree(ball, c)?;
    wang_route(ball, &numbering, &tree, d)
}

/// Mismatches of one status encoding against the father-to-son arcs of the
/// ball: for every interior non-central tile entered from its father and
/// every son, formula (1) must name the side of that son.
pub fn status_encoding_mismatches(ball: &GridBall, enc: StatusEncoding) -> usize {
    let mut bad = 0;
    for t in 1..ball.len() {
        if !ball.is_interior(t) {
            continue;
        }
        let id = &ball.tile(t).id;
        let st = id.status().expect("non-central");
        for s in 0..st.arity() {
            let alpha = formula_alpha(ball.p(), 1, i64::from(s), enc.value(st));
            let want = id
                .child(s)
                .ok()
                .and_then(|child| ball.index_of(&child))
                .and_then(|c| ball.neighbors(t).find(|(_, nb)| nb.tile == c))
                .map(|(side, _)| side);
            if want != Some(alpha) {
                bad += 1;
            }
        }
    }
    bad
}

/// All encodings over `{0..3}²` with their mismatch counts, best first.
pub fn calibrate_status_encoding(ball: &GridBall) -> Vec<(StatusEncoding, usize)> {
    let mut out: Vec<_> = (0..4)
        .flat_map(|two| (0..4).map(move |three| StatusEncoding { two, three }))
        .map(|enc| (enc, status_encoding_mismatches(ball, enc)))
        .collect();
    out.sort_by_key(|&(enc, n)| (n, enc.two, enc.three));
    out
}

/// Outcome of comparing every relative-tree route against BFS distances.
#[derive(Debug, Clone, Default, Serialize)]
pub struct GeodesyReport {
    pub sources: usize,
    pub pairs: usize,
    /// Pairs whose ball distance is provably the plane distance.
    pub certified: usize,
    /// `(c, d, route length, BFS distance)` with a longer route.
    pub failures: Vec<(String, String, usize, u32)>,
    /// Pairs whose tile sequence is not a BFS shortest path.
    pub not_shortest: usize,
}

impl GeodesyReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty() && self.not_shortest == 0
    }
}

/// For every interior source `c` and every tile its relative tree reaches
/// inside the ball: the route length must equal the BFS distance and the
/// route must advance one BFS layer per hop. A ball distance is certified
/// when `d ≤ 2(R + 1) − |c| − |d|`, since any path leaving the ball is at
/// least that long.
pub fn geodesy_report(ball: &GridBall) -> Result<GeodesyReport> {
    let graph = ball.graph();
    let mut report = GeodesyReport::default();
    for c in 0..ball.len() {
        if !ball.is_interior(c) {
            continue;
        }
        report.sources += 1;
        let tree = relative_tree(ball, c)?;
        let dist = crate::oracle::bfs_distances(&graph, c);
        for node in &tree.nodes {
            let d = node.tile;
            let tiles = tree.tiles_on_path(d).expect("node in tree");
            let len = tiles.len() - 1;
            report.pairs += 1;
            if len as u32 != dist[d] {
                report.failures.push((
                    ball.tile(c).id.to_string(),
                    ball.tile(d).id.to_string(),
                    len,
                    dist[d],
                ));
            }
            if tiles.iter().enumerate().any(|(i, &t)| dist[t] != i as u32) {
                report.not_shortest += 1;
            }
            let escape = 2 * (ball.radius + 1) - ball.tile(c).distance - ball.tile(d).distance;
            if dist[d] <= escape {
                report.certified += 1;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_ball, parse_digits};

    #[test]
    fn closed_forms() {
        assert_eq!(formula_alpha(7, 1, 0, 3), 1);
        assert_eq!(formula_delta(2, 1, 3, 1), 2);
        assert_eq!(
            next_side(5, 1, 2, NodeStatus::TwoNode, StatusEncoding::CALIBRATED).unwrap_err(),
            RoutingError::BadSon {
                s: 2,
                status: NodeStatus::TwoNode
            }
        );
        assert!(next_digit_special(2, 0, NodeStatus::ThreeNode, 1).is_ok());
        assert!(next_digit_special(6, 0, NodeStatus::ThreeNode, 1).is_err());
    }

    #[test]
    fn calibration_is_unique() {
        for (tiling, r) in [(Tiling::Penta, 5), (Tiling::Hepta, 4)] {
            let ball = build_ball(tiling, r).unwrap();
            let ranking = calibrate_status_encoding(&ball);
            assert_eq!(ranking[0], (StatusEncoding::CALIBRATED, 0));
            assert!(ranking[1].1 > 0);
        }
    }

    #[test]
    fn central_tree_is_absolute_tree() {
        for (tiling, r) in [(Tiling::Penta, 4), (Tiling::Hepta, 3)] {
            let ball = build_ball(tiling, r).unwrap();
            let tree = relative_tree(&ball, ball.center()).unwrap();
            assert_eq!(tree.len(), ball.len());
            for t in 0..ball.len() {
                assert_eq!(
                    tree.relative_coordinate(t).unwrap(),
                    ball.tile(t).id.coordinate()
                );
            }
        }
    }

    #[test]
    fn addresses_chain_and_reverse() {
        let ball = build_ball(Tiling::Hepta, 4).unwrap();
        let c = ball
            .require(&TileId::from_coordinate(Tiling::Hepta, "312").unwrap())
            .unwrap();
        let tree = relative_tree(&ball, c).unwrap();
        assert_eq!(tree.relative_coordinate(c).unwrap(), "0");
        assert!(tree.address(c).unwrap().is_empty());
        for n in &tree.nodes {
            let addr = tree.address(n.tile).unwrap();
            assert_eq!(addr.len() as u32, n.depth);
            let walked = walk_address(&ball, c, &addr).unwrap();
            assert_eq!(walked, tree.tiles_on_path(n.tile).unwrap());
            let trace = reply_route(&ball, n.tile, &addr).unwrap();
            let mut back = walked.clone();
            back.reverse();
            assert_eq!(trace.tiles, back);
            assert_eq!(trace.reverse, addr.reversed());
            for st in &trace.states {
                let mut whole = st.pending.clone();
                whole.extend(st.undone.iter().rev());
                assert_eq!(whole, addr.digits);
            }
        }
    }

    #[test]
    fn small_balls_are_geodesic() {
        for (tiling, r) in [(Tiling::Penta, 3), (Tiling::Hepta, 3)] {
            let ball = build_ball(tiling, r).unwrap();
            let rep = geodesy_report(&ball).unwrap();
            assert!(rep.ok(), "{rep:?}");
            assert!(rep.pairs > rep.sources);
        }
    }

    #[test]
    fn malformed_addresses() {
        let ball = build_ball(Tiling::Penta, 3).unwrap();
        let bad = ArcAddress {
            digits: parse_digits("12").unwrap(),
        };
        assert!(matches!(
            walk_address(&ball, 0, &bad),
            Err(RoutingError::Malformed { index: 0, .. })
        ));
        let ok = ArcAddress {
            digits: parse_digits("*2 1").unwrap(),
        };
        assert_eq!(walk_address(&ball, 0, &ok).unwrap().len(), 3);
        assert!(reply_route(&ball, 0, &ArcAddress::default())
            .unwrap()
            .reverse
            .is_empty());
    }

    #[test]
    fn special_system_matches_edge_numbers() {
        let ball = build_ball(Tiling::Penta, 4).unwrap();
        let numbering = wang_numbering(&ball, 0, 1).unwrap();
        for c in [0, 3, 17] {
            let tree = relative_tree(&ball, c).unwrap();
            for n in tree.nodes.iter().skip(1) {
                let w = wang_route(&ball, &numbering, &tree, n.tile).unwrap();
                assert_eq!(w.tiles, tree.tiles_on_path(n.tile).unwrap());
            }
        }
        for t in 0..ball.len() {
            let text = wang_coordinate(&ball, &numbering, t).unwrap();
            assert_eq!(wang_tile(&ball, &numbering, &text).unwrap(), t);
        }
    }
}
