//! Synchronous tick simulation of the protocol, plus the cost and traffic
//! models.
//!
//! One transport hop takes one tick and the per-hop digit computation is
//! folded into it. Hardware work (stack moves, payload copy) is accounted
//! in [`CostModel`] units and never adds ticks.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_rational::Ratio;
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fibtree::NodeStatus;
use crate::grid::{ArcDigit, GridBall};
use crate::numeration::{fib, FibConvention};
use crate::oracle::bfs_distances;
use crate::routing::{self, next_side, ArcAddress, RoutingError, StatusEncoding};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error("radius {0} exceeds the ball")]
    RadiusOutsideBall(u32),
    #[error("tile {0} is on the boundary")]
    NotInterior(String),
    #[error("gamma = {0} >= 1: the tail bound is vacuous")]
    VacuousBound(f64),
    #[error("bad cost parameter {0:?}")]
    BadRho(String),
    #[error("invalid parameter: {0}")]
    Invalid(&'static str),
    #[error("{0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, SimError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MessageKind {
    Public,
    Private,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    ToTarget,
    ToSource,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Message {
    pub id: u64,
    pub kind: MessageKind,
    pub source: usize,
    pub payload_length: u64,
    /// Public: the growing address. Private: arcs still to cross, top last.
    pub stack1: Vec<ArcDigit>,
    /// Private: arcs already crossed, top last.
    pub stack2: Vec<ArcDigit>,
    pub direction: Direction,
    /// Relative status of the receiving relay, set by the sender.
    #[serde(skip)]
    pub relay_status: Option<NodeStatus>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Recv,
    Send,
    Queue,
    Deliver,
}

/// One line of the event log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub tick: u32,
    pub tile: String,
    pub event: EventKind,
    pub message: u64,
    pub side: Option<u8>,
}

pub fn write_log<W: Write>(events: &[Event], mut out: W) -> Result<()> {
    for e in events {
        let line = serde_json::to_string(e).map_err(|e| SimError::Io(e.to_string()))?;
        writeln!(out, "{line}").map_err(|e| SimError::Io(e.to_string()))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Default)]
pub struct CellStats {
    pub relayed: u64,
    pub delayed_ticks: u64,
}

/// Per-cell state: one FIFO per output side.
#[derive(Debug, Clone)]
pub struct CellRuntime {
    pub tile: usize,
    pub fifo: Vec<VecDeque<Message>>,
    pub stats: CellStats,
}

impl CellRuntime {
    fn new(tile: usize, p: u8) -> Self {
        Self {
            tile,
            fifo: vec![VecDeque::new(); usize::from(p)],
            stats: CellStats::default(),
        }
    }

    fn queued(&self) -> usize {
        self.fifo.iter().map(VecDeque::len).sum()
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    /// Queue length above which a warning is counted (queues never drop).
    pub high_water_mark: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            high_water_mark: 64,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BroadcastResult {
    pub arrival: BTreeMap<usize, u32>,
    pub addresses: BTreeMap<usize, ArcAddress>,
    /// Number of cells receiving for the first time at each tick.
    pub receivers_per_tick: Vec<usize>,
    /// Receptions per cell; exactly-once means all equal 1.
    pub receptions: BTreeMap<usize, u32>,
    pub log: Vec<Event>,
}

impl BroadcastResult {
    pub fn exactly_once(&self) -> bool {
        self.receptions.values().all(|&n| n == 1)
    }
}

/// Broadcast from `c` for `until` ticks. Each relay computes the sides to
/// its sons with formula (1) from its entry side and relative status.
pub fn run_broadcast(ball: &GridBall, c: usize, until: u32) -> Result<BroadcastResult> {
    if !ball.is_interior(c) && until > 0 {
        return Err(SimError::NotInterior(ball.tile(c).id.to_string()));
    }
    let p = ball.p();
    let name = |t: usize| ball.tile(t).id.to_string();
    let mut arrival = BTreeMap::from([(c, 0u32)]);
    let mut addresses = BTreeMap::from([(c, ArcAddress::default())]);
    let mut receptions = BTreeMap::from([(c, 1u32)]);
    let mut receivers_per_tick = vec![1usize];
    let mut log = vec![Event {
        tick: 0,
        tile: name(c),
        event: EventKind::Recv,
        message: 0,
        side: None,
    }];
    // (tile, entry side, relative status, address)
    let mut frontier: Vec<(usize, u8, Option<NodeStatus>, Vec<ArcDigit>)> =
        vec![(c, 0, None, Vec::new())];
    for tick in 1..=until {
        let mut next = Vec::new();
        for (t, entry, status, addr) in &frontier {
            let exits: Vec<(u8, NodeStatus)> = match status {
                None => (1..=p).map(|j| (j, NodeStatus::ThreeNode)).collect(),
                Some(st) => (0..st.arity())
                    .map(|s| {
                        Ok((
                            next_side(p, *entry, s, *st, StatusEncoding::CALIBRATED)?,
                            st.son_status(s).map_err(RoutingError::from)?,
                        ))
                    })
                    .collect::<Result<_>>()?,
            };
            for (side, son_status) in exits {
                let Some(nb) = ball.neighbor(*t, side) else {
                    continue;
                };
                let digit = ball.arc_digit(*t, side).expect("neighbour exists");
                let mut a = addr.clone();
                a.push(digit);
                log.push(Event {
                    tick,
                    tile: name(*t),
                    event: EventKind::Send,
                    message: 0,
                    side: Some(side),
                });
                log.push(Event {
                    tick,
                    tile: name(nb.tile),
                    event: EventKind::Recv,
                    message: 0,
                    side: Some(nb.side),
                });
                *receptions.entry(nb.tile).or_insert(0) += 1;
                if arrival.contains_key(&nb.tile) {
                    continue;
                }
                arrival.insert(nb.tile, tick);
                addresses.insert(nb.tile, ArcAddress { digits: a.clone() });
                next.push((nb.tile, nb.side, Some(son_status), a));
            }
        }
        receivers_per_tick.push(next.len());
        frontier = next;
    }
    Ok(BroadcastResult {
        arrival,
        addresses,
        receivers_per_tick,
        receptions,
        log,
    })
}

#[derive(Debug, Clone, Default)]
pub struct StormStats {
    pub injected: u64,
    pub delivered: u64,
    pub sends: u64,
    pub ticks: u32,
    pub max_queue_depth: usize,
    pub max_fan_in: usize,
    pub max_intake_at_source: usize,
    pub high_water_warnings: u64,
    /// Violations of `injected = delivered + queued` at the end of a tick.
    pub conservation_violations: u64,
    /// distance → (latency → count)
    pub latency: BTreeMap<u32, BTreeMap<u32, u64>>,
}

impl fmt::Display for StormStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "injected: {}", self.injected)?;
        writeln!(f, "delivered: {}", self.delivered)?;
        writeln!(f, "sends: {}", self.sends)?;
        writeln!(f, "ticks: {}", self.ticks)?;
        writeln!(f, "max_queue_depth: {}", self.max_queue_depth)?;
        writeln!(f, "max_fan_in: {}", self.max_fan_in)?;
        writeln!(f, "max_intake_at_source: {}", self.max_intake_at_source)?;
        writeln!(f, "high_water_warnings: {}", self.high_water_warnings)?;
        writeln!(
            f,
            "conservation_violations: {}",
            self.conservation_violations
        )?;
        writeln!(f, "latency:")?;
        for (d, hist) in &self.latency {
            let cells: Vec<String> = hist.iter().map(|(l, n)| format!("{l}:{n}")).collect();
            writeln!(f, "  distance {d}: {}", cells.join(" "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct StormResult {
    pub stats: StormStats,
    pub log: Vec<Event>,
    pub repliers: usize,
}

/// Every cell at relative level `k` of `c` replies at tick 0. Relays pop
/// the top of the pending stack, push it on the second one, and queue the
/// message on the side the forward arc came in through.
pub fn run_reply_storm(
    ball: &GridBall,
    c: usize,
    k: u32,
    config: &SimConfig,
) -> Result<StormResult> {
    if k > ball.radius {
        return Err(SimError::RadiusOutsideBall(k));
    }
    let broadcast = run_broadcast(ball, c, k)?;
    let repliers: Vec<usize> = broadcast
        .arrival
        .iter()
        .filter(|&(_, &tick)| tick == k)
        .map(|(&t, _)| t)
        .collect();
    let messages = repliers
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            (
                t,
                Message {
                    id: i as u64,
                    kind: MessageKind::Private,
                    source: t,
                    payload_length: 0,
                    stack1: broadcast.addresses[&t].digits.clone(),
                    stack2: Vec::new(),
                    direction: Direction::ToSource,
                    relay_status: None,
                },
            )
        })
        .collect();
    let mut result = run_private(ball, c, messages, config)?;
    result.repliers = repliers.len();
    for hist in result.stats.latency.values() {
        debug_assert!(hist.keys().all(|&l| l >= k));
    }
    Ok(result)
}

/// Transports private messages towards `goal`, one hop per tick, with FIFO
/// queues per output side. Same-tick arrivals are queued by ascending entry
/// side; queued messages always leave before later arrivals.
pub fn run_private(
    ball: &GridBall,
    goal: usize,
    messages: Vec<(usize, Message)>,
    config: &SimConfig,
) -> Result<StormResult> {
    let p = ball.p();
    let name = |t: usize| ball.tile(t).id.to_string();
    let mut cells: HashMap<usize, CellRuntime> = HashMap::new();
    let mut log = Vec::new();
    let mut stats = StormStats::default();
    let mut origin: HashMap<u64, u32> = HashMap::new();

    let enqueue = |cells: &mut HashMap<usize, CellRuntime>,
                   log: &mut Vec<Event>,
                   stats: &mut StormStats,
                   tick: u32,
                   t: usize,
                   mut m: Message|
     -> Result<()> {
        let top = m
            .stack1
            .pop()
            .ok_or(SimError::Invalid("message with empty stack away from goal"))?;
        let side = top
            .output(ball.tiling)
            .ok_or(SimError::Invalid("digit outside the table"))?;
        m.stack2.push(top);
        let cell = cells.entry(t).or_insert_with(|| CellRuntime::new(t, p));
        cell.fifo[usize::from(side) - 1].push_back(m.clone());
        cell.stats.relayed += 1;
        let depth = cell.fifo[usize::from(side) - 1].len();
        stats.max_queue_depth = stats.max_queue_depth.max(depth);
        if depth > config.high_water_mark {
            stats.high_water_warnings += 1;
        }
        log.push(Event {
            tick,
            tile: name(t),
            event: EventKind::Queue,
            message: m.id,
            side: Some(side),
        });
        Ok(())
    };

    for (t, m) in messages {
        stats.injected += 1;
        origin.insert(m.id, m.stack1.len() as u32);
        if t == goal {
            stats.delivered += 1;
            stats
                .latency
                .entry(0)
                .or_default()
                .entry(0)
                .and_modify(|n| *n += 1)
                .or_insert(1);
            log.push(Event {
                tick: 0,
                tile: name(t),
                event: EventKind::Deliver,
                message: m.id,
                side: None,
            });
            continue;
        }
        enqueue(&mut cells, &mut log, &mut stats, 0, t, m)?;
    }

    let mut tick = 0;
    while cells.values().any(|c| c.queued() > 0) {
        tick += 1;
        // departures: head of every non-empty side queue
        let mut arrivals: Vec<(usize, u8, Message)> = Vec::new();
        let mut order: Vec<usize> = cells.keys().copied().collect();
        order.sort_unstable();
        for t in order {
            let cell = cells.get_mut(&t).expect("listed");
            for (k, q) in cell.fifo.iter_mut().enumerate() {
                let side = k as u8 + 1;
                let Some(m) = q.pop_front() else { continue };
                cell.stats.delayed_ticks += q.len() as u64;
                let nb = ball
                    .neighbor(t, side)
                    .ok_or(SimError::Invalid("queued towards a missing neighbour"))?;
                log.push(Event {
                    tick,
                    tile: name(t),
                    event: EventKind::Send,
                    message: m.id,
                    side: Some(side),
                });
                stats.sends += 1;
                arrivals.push((nb.tile, nb.side, m));
            }
        }
        arrivals.sort_by_key(|(t, side, _)| (*t, *side));
        let mut fan_in: HashMap<usize, usize> = HashMap::new();
        for (t, side, m) in arrivals {
            *fan_in.entry(t).or_insert(0) += 1;
            log.push(Event {
                tick,
                tile: name(t),
                event: EventKind::Recv,
                message: m.id,
                side: Some(side),
            });
            if t == goal {
                if !m.stack1.is_empty() {
                    return Err(SimError::Invalid(
                        "message reached the goal with pending arcs",
                    ));
                }
                stats.delivered += 1;
                let distance = origin[&m.id];
                *stats
                    .latency
                    .entry(distance)
                    .or_default()
                    .entry(tick)
                    .or_insert(0) += 1;
                log.push(Event {
                    tick,
                    tile: name(t),
                    event: EventKind::Deliver,
                    message: m.id,
                    side: None,
                });
            } else {
                enqueue(&mut cells, &mut log, &mut stats, tick, t, m)?;
            }
        }
        stats.max_fan_in = stats
            .max_fan_in
            .max(fan_in.values().copied().max().unwrap_or(0));
        stats.max_intake_at_source = stats
            .max_intake_at_source
            .max(fan_in.get(&goal).copied().unwrap_or(0));
        let queued: usize = cells.values().map(CellRuntime::queued).sum();
        if stats.injected != stats.delivered + queued as u64 {
            stats.conservation_violations += 1;
        }
    }
    stats.ticks = tick;
    Ok(StormResult {
        stats,
        log,
        repliers: 0,
    })
}

/// Checks that on every (tile, side) queue, messages were sent in the
/// order they were queued.
pub fn check_fifo(log: &[Event]) -> bool {
    let mut queued: HashMap<(&str, u8), VecDeque<u64>> = HashMap::new();
    for e in log {
        let Some(side) = e.side else { continue };
        match e.event {
            EventKind::Queue => queued
                .entry((&e.tile, side))
                .or_default()
                .push_back(e.message),
            EventKind::Send => {
                if let Some(q) = queued.get_mut(&(e.tile.as_str(), side)) {
                    if q.pop_front() != Some(e.message) {
                        return false;
                    }
                }
            }
            _ => {}
        }
    }
    true
}

/// Cost parameters. Software operations cost 1, hardware ones `rho`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CostModel {
    pub rho: Ratio<i64>,
}

impl CostModel {
    pub fn new(rho: Ratio<i64>) -> Result<Self> {
        if rho <= Ratio::from_integer(0) {
            return Err(SimError::BadRho(rho.to_string()));
        }
        Ok(Self { rho })
    }
}

impl FromStr for CostModel {
    type Err = SimError;

    /// Decimal text such as `"0.1"`, `"10"` or a fraction `"1/3"`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || SimError::BadRho(s.to_string());
        let s = s.trim();
        let rho = if let Some((n, d)) = s.split_once('/') {
            let d: i64 = d.trim().parse().map_err(|_| bad())?;
            if d == 0 {
                return Err(bad());
            }
            Ratio::new(n.trim().parse().map_err(|_| bad())?, d)
        } else if let Some((int, frac)) = s.split_once('.') {
            if frac.len() > 12 || !frac.chars().all(|c| c.is_ascii_digit()) {
                return Err(bad());
            }
            let den = 10i64.pow(frac.len() as u32);
            let int: i64 = if int.is_empty() {
                0
            } else {
                int.parse().map_err(|_| bad())?
            };
            let frac: i64 = if frac.is_empty() {
                0
            } else {
                frac.parse().map_err(|_| bad())?
            };
            Ratio::new(int * den + frac, den)
        } else {
            Ratio::from_integer(s.parse().map_err(|_| bad())?)
        };
        CostModel::new(rho)
    }
}

/// `d · (1 + ρM + ρd)`.
pub fn transmission_cost(dist: u64, payload: u64, rho: Ratio<i64>) -> Ratio<i64> {
    let d = Ratio::from_integer(dist as i64);
    let m = Ratio::from_integer(payload as i64);
    d * (Ratio::from_integer(1) + rho * m + rho * d)
}

#[derive(Debug, Clone)]
pub struct UnicastResult {
    pub latency: u32,
    pub cost: Ratio<i64>,
    pub tiles: Vec<usize>,
    pub log: Vec<Event>,
}

/// A private message from `c` to `d` over an empty network. Each hop costs
/// one software step for the digit, `ρM` to copy the payload and `ρ` per
/// address digit carried (the two stacks always hold the whole address).
pub fn run_unicast(
    ball: &GridBall,
    c: usize,
    d: usize,
    payload: u64,
    cost: CostModel,
) -> Result<UnicastResult> {
    let tree = routing::relative_tree(ball, c)?;
    let address = tree
        .address(d)
        .ok_or_else(|| RoutingError::Unreachable(ball.tile(d).id.to_string()))?;
    let name = |t: usize| ball.tile(t).id.to_string();
    let mut m = Message {
        id: 0,
        kind: MessageKind::Private,
        source: c,
        payload_length: payload,
        stack1: address.digits.iter().rev().copied().collect(),
        stack2: Vec::new(),
        direction: Direction::ToTarget,
        relay_status: None,
    };
    let one = Ratio::from_integer(1);
    let mut total = Ratio::from_integer(0);
    let mut t = c;
    let mut tiles = vec![c];
    let mut log = Vec::new();
    let mut tick = 0;
    while let Some(top) = m.stack1.pop() {
        tick += 1;
        let carried = (m.stack1.len() + m.stack2.len() + 1) as i64;
        total += one
            + cost.rho * Ratio::from_integer(payload as i64)
            + cost.rho * Ratio::from_integer(carried);
        let side = top
            .input(ball.tiling)
            .ok_or(SimError::Invalid("digit outside the table"))?;
        let nb = ball
            .neighbor(t, side)
            .ok_or(SimError::Invalid("address leaves the ball"))?;
        m.stack2.push(top);
        log.push(Event {
            tick,
            tile: name(t),
            event: EventKind::Send,
            message: 0,
            side: Some(side),
        });
        log.push(Event {
            tick,
            tile: name(nb.tile),
            event: EventKind::Recv,
            message: 0,
            side: Some(nb.side),
        });
        t = nb.tile;
        tiles.push(t);
    }
    log.push(Event {
        tick,
        tile: name(t),
        event: EventKind::Deliver,
        message: 0,
        side: None,
    });
    Ok(UnicastResult {
        latency: tick,
        cost: total,
        tiles,
        log,
    })
}

/// `β = (3 + √5)/2`, the growth rate of the tree levels.
pub fn beta() -> f64 {
    (3.0 + 5f64.sqrt()) / 2.0
}

/// `C₁ = β/√5`, so that `f_{2k+1} < C₁ βᵏ` with `f₀ = f₁ = 1`.
pub fn c1() -> f64 {
    beta() / 5f64.sqrt()
}

pub fn gamma(lambda: f64) -> f64 {
    beta() / lambda.exp()
}

/// `γ`, rejected unless strictly below 1.
fn useful_gamma(lambda: f64) -> Result<f64> {
    let g = gamma(lambda);
    if g < 1.0 {
        Ok(g)
    } else {
        Err(SimError::VacuousBound(g))
    }
}

/// `(P_k, D γ^{k+1} / (1 − γ))` for `P_k = C p f_{2k+1} e^{−λk}` and
/// `D = C C₁ p`.
pub fn traffic_bound(k: u32, c: f64, lambda: f64, p: u8) -> Result<(f64, f64)> {
    let g = useful_gamma(lambda)?;
    let f = fib(2 * i64::from(k) + 1, FibConvention::F01)
        .map_err(|_| SimError::Invalid("k too large"))? as f64;
    let p = f64::from(p);
    let pk = c * p * f * (-lambda * f64::from(k)).exp();
    let d = c * c1() * p;
    Ok((pk, d * g.powi(k as i32 + 1) / (1.0 - g)))
}

/// `C` making `Σ_k C p f_{2k+1} e^{−λk}` equal to 1.
pub fn normalizing_constant(lambda: f64, p: u8) -> Result<f64> {
    useful_gamma(lambda)?;
    let mut sum = 0.0;
    for k in 0..=80 {
        let f = fib(2 * k + 1, FibConvention::F01)
            .map_err(|_| SimError::Invalid("series too long"))? as f64;
        let term = f64::from(p) * f * (-lambda * k as f64).exp();
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    Ok(1.0 / sum)
}

#[derive(Debug, Clone, Serialize)]
pub struct TailCheck {
    pub k: u32,
    pub empirical: f64,
    pub bound: f64,
    pub allowance: f64,
    pub pass: bool,
}

/// Samples communication partners of `c` with probability proportional to
/// `e^{−λ dist}` over the ball, and compares the empirical fraction beyond
/// each `k ≤ k_max` with `D γ^{k+1}/(1−γ)`, `D` built from the
/// normalization constant of the sampled law. The allowance is a one-sided
/// 3σ binomial margin.
pub fn monte_carlo_tail(
    ball: &GridBall,
    c: usize,
    lambda: f64,
    draws: usize,
    seed: u64,
    k_max: u32,
) -> Result<Vec<TailCheck>> {
    let g = useful_gamma(lambda)?;
    if draws == 0 {
        return Err(SimError::Invalid("no draws"));
    }
    let dist = bfs_distances(&ball.graph(), c);
    let weights: Vec<f64> = dist
        .iter()
        .map(|&d| (-lambda * f64::from(d)).exp())
        .collect();
    let c_norm = 1.0 / weights.iter().sum::<f64>();
    let law = WeightedIndex::new(&weights).map_err(|_| SimError::Invalid("empty ball"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut beyond = vec![0usize; k_max as usize + 1];
    for _ in 0..draws {
        let d = dist[law.sample(&mut rng)];
        for (k, n) in beyond.iter_mut().enumerate() {
            if d > k as u32 {
                *n += 1;
            }
        }
    }
    let big_d = c_norm * c1() * f64::from(ball.p());
    Ok(beyond
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let bound = big_d * g.powi(k as i32 + 1) / (1.0 - g);
            let empirical = n as f64 / draws as f64;
            let b = bound.min(1.0);
            let allowance = 3.0 * (b * (1.0 - b) / draws as f64).sqrt();
            TailCheck {
                k: k as u32,
                empirical,
                bound,
                allowance,
                pass: empirical <= bound + allowance,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_ball, Tiling};
    use crate::numeration::level_count;

    fn r(n: i64, d: i64) -> Ratio<i64> {
        Ratio::new(n, d)
    }

    #[test]
    fn costs() {
        assert_eq!(transmission_cost(0, 5, r(1, 1)), r(0, 1));
        assert_eq!(transmission_cost(3, 10, r(1, 10)), r(69, 10));
        assert_eq!("0.1".parse::<CostModel>().unwrap().rho, r(1, 10));
        assert_eq!("10".parse::<CostModel>().unwrap().rho, r(10, 1));
        assert_eq!("1/3".parse::<CostModel>().unwrap().rho, r(1, 3));
        assert!("0".parse::<CostModel>().is_err());
        assert!("-1".parse::<CostModel>().is_err());
        assert!("x".parse::<CostModel>().is_err());
    }

    #[test]
    fn unicast_on_a_free_path() {
        let ball = build_ball(Tiling::Penta, 5).unwrap();
        let d = ball.tiles().iter().position(|t| t.distance == 5).unwrap();
        let u = run_unicast(&ball, 0, d, 0, CostModel::new(r(1, 1)).unwrap()).unwrap();
        assert_eq!(u.latency, 5);
        assert_eq!(u.cost, r(30, 1));
    }

    #[test]
    fn broadcast_levels() {
        let ball = build_ball(Tiling::Hepta, 4).unwrap();
        let b0 = run_broadcast(&ball, 0, 0).unwrap();
        assert_eq!(b0.arrival.len(), 1);
        let b = run_broadcast(&ball, 0, 4).unwrap();
        assert!(b.exactly_once());
        assert_eq!(b.arrival.len(), ball.len());
        for (l, &n) in b.receivers_per_tick.iter().enumerate().skip(1) {
            assert_eq!(n as u128, 7 * level_count(l as u32 - 1, 3).unwrap());
        }
        let addrs = routing::broadcast_addresses(&ball, 0).unwrap();
        assert_eq!(addrs, b.addresses);
    }

    #[test]
    fn storm_is_conservative() {
        let ball = build_ball(Tiling::Penta, 4).unwrap();
        let c = 1;
        for k in 0..=3 {
            let s = run_reply_storm(&ball, c, k, &SimConfig::default()).unwrap();
            assert_eq!(s.stats.delivered as usize, s.repliers);
            assert_eq!(s.stats.conservation_violations, 0);
            assert!(s.stats.max_fan_in <= 5);
            assert!(check_fifo(&s.log));
        }
    }

    #[test]
    fn single_reply_latency() {
        let ball = build_ball(Tiling::Hepta, 4).unwrap();
        let b = run_broadcast(&ball, 0, 3).unwrap();
        let (&t, _) = b.arrival.iter().find(|(_, &tick)| tick == 3).unwrap();
        let m = Message {
            id: 7,
            kind: MessageKind::Private,
            source: t,
            payload_length: 0,
            stack1: b.addresses[&t].digits.clone(),
            stack2: Vec::new(),
            direction: Direction::ToSource,
            relay_status: None,
        };
        let s = run_private(&ball, 0, vec![(t, m)], &SimConfig::default()).unwrap();
        assert_eq!(s.stats.ticks, 3);
        assert_eq!(s.stats.latency[&3][&3], 1);
    }

    #[test]
    fn fifo_detects_reordering() {
        let e = |event, message| Event {
            tick: 0,
            tile: "1".into(),
            event,
            message,
            side: Some(1),
        };
        assert!(check_fifo(&[
            e(EventKind::Queue, 1),
            e(EventKind::Queue, 2),
            e(EventKind::Send, 1)
        ]));
        assert!(!check_fifo(&[
            e(EventKind::Queue, 1),
            e(EventKind::Queue, 2),
            e(EventKind::Send, 2)
        ]));
    }

    #[test]
    fn traffic() {
        assert!((beta() - 2.618_033_988_7).abs() < 1e-9);
        assert!(matches!(
            traffic_bound(1, 0.1, 0.5, 5),
            Err(SimError::VacuousBound(_))
        ));
        let (_, tail) = traffic_bound(3, 0.1, 50.0, 5).unwrap();
        assert!(tail < 1e-50);
        let c = normalizing_constant(1.5, 5).unwrap();
        let total: f64 = (0..60)
            .map(|k| traffic_bound(k, c, 1.5, 5).unwrap().0)
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
        // strict, but the gap shrinks like β^-k below f64 resolution
        for k in 0..12 {
            let f = fib(2 * k + 1, FibConvention::F01).unwrap() as f64;
            assert!(f < c1() * beta().powi(k as i32));
        }
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let ball = build_ball(Tiling::Penta, 3).unwrap();
        let a = monte_carlo_tail(&ball, 0, 1.5, 2000, 7, 3).unwrap();
        let b = monte_carlo_tail(&ball, 0, 1.5, 2000, 7, 3).unwrap();
        assert_eq!(
            a.iter().map(|t| t.empirical).collect::<Vec<_>>(),
            b.iter().map(|t| t.empirical).collect::<Vec<_>>()
        );
        assert!(a.iter().all(|t| t.pass));
    }
}
