//! Carpet coordinates `(n, ν)` and the pentagrid ↔ heptagrid bijection.
//!
//! `F_0` is the tree of sector 1. The root of `F_n` is the middle son of the
//! root of `F_{n+1}`, so the chain climbs through the central cell (the root
//! of `F_1`) and outwards; negative `n` descend the middle-son chain of
//! `F_0`. A tile gets the smallest `n` with `T ∈ F_n` and its breadth-first
//! number `ν` in that tree. Two tiles of the two grids correspond when their
//! coordinates are equal.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fibtree::{self, NodeNumber, NodeStatus, TreeError, TreePath};
use crate::grid::{son_digit, GridBall};

/// Son index of the middle son of a 3-node.
const MIDDLE: u8 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CarpetError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("tile {0} lies outside every tree representable in this ball")]
    NotRepresentable(String),
    #[error("coordinate {0} names no tile of this ball")]
    NoSuchTile(CarpetCoord),
    #[error("sector {0} does not exist")]
    BadAnchor(u8),
    #[error("virtual tree revisits tile {0}")]
    Overlap(String),
    #[error("bad carpet coordinate {0:?}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, CarpetError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CarpetCoord {
    pub n: i64,
    pub nu: NodeNumber,
}

impl CarpetCoord {
    pub fn new(n: i64, nu: u128) -> Self {
        Self {
            n,
            nu: NodeNumber(nu),
        }
    }
}

impl fmt::Display for CarpetCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.n, self.nu.0)
    }
}

impl FromStr for CarpetCoord {
    type Err = CarpetError;

    fn from_str(s: &str) -> Result<Self> {
        let err = || CarpetError::Parse(s.to_string());
        let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
        let (a, b) = inner.split_once(',').ok_or_else(err)?;
        let n = a.trim().parse().map_err(|_| err())?;
        let nu: u128 = b.trim().parse().map_err(|_| err())?;
        if nu == 0 {
            return Err(err());
        }
        Ok(Self::new(n, nu))
    }
}

/// Number, inside `F_{n+k}`, of the node numbered `nu` in `F_n`.
pub fn chain_embed(nu: NodeNumber, steps: u32) -> Result<NodeNumber> {
    let path = fibtree::number_to_path(nu, NodeStatus::ThreeNode)?;
    let prefix = vec![MIDDLE; steps as usize];
    Ok(fibtree::path_to_number(&path.prepend(&prefix)?)?)
}

/// The nested trees of one ball, resolved once.
#[derive(Debug, Clone)]
pub struct CarpetChain<'a> {
    ball: &'a GridBall,
    /// `(root tile, side leading to the father)` of `F_n` for `n = 0..=n_max`.
    roots: Vec<(usize, u8)>,
    paths: HashMap<usize, TreePath>,
    by_path: HashMap<TreePath, usize>,
}

impl<'a> CarpetChain<'a> {
    /// Chain with `F_0` rooted at the root of sector 1.
    pub fn new(ball: &'a GridBall) -> Result<Self> {
        Self::anchored(ball, 1)
    }

    pub fn anchored(ball: &'a GridBall, sector: u8) -> Result<Self> {
        let p = ball.p();
        let root0 = ball
            .neighbor(ball.center(), sector)
            .ok_or(CarpetError::BadAnchor(sector))?
            .tile;
        // the son on virtual side m is the middle one
        let m = son_digit(NodeStatus::ThreeNode, MIDDLE) + ball.tiling.son_side_offset();
        let entry_for = |middle_side: u8| {
            ((i32::from(middle_side) - i32::from(m)).rem_euclid(i32::from(p)) + 1) as u8
        };
        let mut roots = vec![(root0, 1u8), (ball.center(), entry_for(sector))];
        loop {
            let &(t, e) = roots.last().expect("non-empty");
            match ball.neighbor(t, e) {
                Some(nb) => roots.push((nb.tile, entry_for(nb.side))),
                None => break,
            }
        }
        let (top, entry) = *roots.last().expect("non-empty");
        let mut paths = HashMap::new();
        let mut by_path = HashMap::new();
        let mut queue = VecDeque::from([(top, entry, TreePath::root(NodeStatus::ThreeNode))]);
        while let Some((t, e, path)) = queue.pop_front() {
            let st = path.status()?;
            for i in 0..st.arity() {
                let virtual_side = son_digit(st, i) + ball.tiling.son_side_offset();
                let side = ((u32::from(e) + u32::from(virtual_side) - 2) % u32::from(p)) as u8 + 1;
                if let Some(nb) = ball.neighbor(t, side) {
                    queue.push_back((nb.tile, nb.side, path.child(i)?));
                }
            }
            if paths.contains_key(&t) {
                return Err(CarpetError::Overlap(ball.tile(t).id.to_string()));
            }
            by_path.insert(path.clone(), t);
            paths.insert(t, path);
        }
        Ok(Self {
            ball,
            roots,
            paths,
            by_path,
        })
    }

    /// Largest `n` whose root lies in the ball.
    pub fn n_max(&self) -> i64 {
        self.roots.len() as i64 - 1
    }

    pub fn root(&self, n: i64) -> Option<usize> {
        usize::try_from(n)
            .ok()
            .and_then(|n| self.roots.get(n))
            .map(|r| r.0)
    }

    /// Tiles with a coordinate, i.e. reached inside the ball by the tree
    /// of the outermost representable root.
    pub fn covered(&self) -> impl Iterator<Item = usize> + '_ {
        self.paths.keys().copied()
    }

    pub fn coord(&self, t: usize) -> Result<CarpetCoord> {
        let path = self
            .paths
            .get(&t)
            .ok_or_else(|| CarpetError::NotRepresentable(self.ball.tile(t).id.to_string()))?;
        let strip = path.sons().iter().take_while(|&&s| s == MIDDLE).count();
        let rest = TreePath::new(NodeStatus::ThreeNode, path.sons()[strip..].to_vec())?;
        Ok(CarpetCoord {
            n: self.n_max() - strip as i64,
            nu: fibtree::path_to_number(&rest)?,
        })
    }

    pub fn tile(&self, coord: CarpetCoord) -> Result<usize> {
        let steps =
            usize::try_from(self.n_max() - coord.n).map_err(|_| CarpetError::NoSuchTile(coord))?;
        let path = fibtree::number_to_path(coord.nu, NodeStatus::ThreeNode)?;
        if path.sons().first() == Some(&MIDDLE) {
            // not minimal: that tile belongs to F_{n-1}
            return Err(CarpetError::NoSuchTile(coord));
        }
        let full = path.prepend(&vec![MIDDLE; steps])?;
        self.by_path
            .get(&full)
            .copied()
            .ok_or(CarpetError::NoSuchTile(coord))
    }
}

pub fn carpet_coord(ball: &GridBall, t: usize) -> Result<CarpetCoord> {
    CarpetChain::new(ball)?.coord(t)
}

pub fn carpet_tile(ball: &GridBall, coord: CarpetCoord) -> Result<usize> {
    CarpetChain::new(ball)?.tile(coord)
}

/// The bijection is equality of coordinates.
pub fn penta_to_hepta(coord: CarpetCoord) -> CarpetCoord {
    coord
}

pub fn hepta_to_penta(coord: CarpetCoord) -> CarpetCoord {
    coord
}

/// Image of a tile of one grid in a ball of the other grid.
pub fn map_tile(from: &CarpetChain<'_>, to: &CarpetChain<'_>, t: usize) -> Result<usize> {
    to.tile(penta_to_hepta(from.coord(t)?))
}
