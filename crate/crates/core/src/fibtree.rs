//! The standard Fibonacci tree.
//!
//! A 3-node has three sons, statuses (2, 3, 3) from left to right; a
//! 2-node has two sons, statuses (2, 3). Nodes are numbered level by level
//! from the left, the root being 1. Nothing is materialized: every query
//! replays the production rules along a path.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeration::{self, level_count, NumerationError, ZeckendorfWord};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("son index {index} invalid under a {status}")]
    InvalidSon { index: u8, status: NodeStatus },
    #[error("the root has no father")]
    RootHasNoFather,
    #[error("node numbers start at 1")]
    ZeroNumber,
    #[error(transparent)]
    Numeration(#[from] NumerationError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeStatus {
    TwoNode,
    ThreeNode,
}

impl NodeStatus {
    pub fn arity(self) -> u8 {
        match self {
            NodeStatus::TwoNode => 2,
            NodeStatus::ThreeNode => 3,
        }
    }

    pub fn from_arity(n: u8) -> Option<Self> {
        match n {
            2 => Some(NodeStatus::TwoNode),
            3 => Some(NodeStatus::ThreeNode),
            _ => None,
        }
    }

    pub fn son_statuses(self) -> &'static [NodeStatus] {
        use NodeStatus::*;
        match self {
            ThreeNode => &[TwoNode, ThreeNode, ThreeNode],
            TwoNode => &[TwoNode, ThreeNode],
        }
    }

    pub fn son_status(self, index: u8) -> Result<NodeStatus, TreeError> {
        self.son_statuses()
            .get(usize::from(index))
            .copied()
            .ok_or(TreeError::InvalidSon {
                index,
                status: self,
            })
    }
}

impl fmt::Display for NodeStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-node", self.arity())
    }
}

/// Son indices (0 = leftmost) from a root of the given status.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TreePath {
    root_status: NodeStatus,
    sons: Vec<u8>,
}

impl TreePath {
    pub fn root(root_status: NodeStatus) -> Self {
        Self {
            root_status,
            sons: Vec::new(),
        }
    }

    pub fn new(root_status: NodeStatus, sons: Vec<u8>) -> Result<Self, TreeError> {
        let path = Self { root_status, sons };
        path.status()?;
        Ok(path)
    }

    pub fn root_status(&self) -> NodeStatus {
        self.root_status
    }

    pub fn sons(&self) -> &[u8] {
        &self.sons
    }

    pub fn depth(&self) -> usize {
        self.sons.len()
    }

    pub fn is_root(&self) -> bool {
        self.sons.is_empty()
    }

    /// Status reached by replaying the production rules.
    pub fn status(&self) -> Result<NodeStatus, TreeError> {
        self.sons
            .iter()
            .try_fold(self.root_status, |st, &i| st.son_status(i))
    }

    pub fn child(&self, index: u8) -> Result<TreePath, TreeError> {
        self.status()?.son_status(index)?;
        let mut sons = self.sons.clone();
        sons.push(index);
        Ok(Self {
            root_status: self.root_status,
            sons,
        })
    }

    /// Path with `prefix` steps inserted at the root, the root status kept.
    pub fn prepend(&self, prefix: &[u8]) -> Result<TreePath, TreeError> {
        let mut sons = prefix.to_vec();
        sons.extend_from_slice(&self.sons);
        TreePath::new(self.root_status, sons)
    }
}

impl fmt::Display for TreePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, s) in self.sons.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, "]")
    }
}

pub fn status_of(path: &TreePath) -> Result<NodeStatus, TreeError> {
    path.status()
}

pub fn father(path: &TreePath) -> Result<TreePath, TreeError> {
    if path.is_root() {
        return Err(TreeError::RootHasNoFather);
    }
    let mut sons = path.sons.clone();
    sons.pop();
    Ok(TreePath {
        root_status: path.root_status,
        sons,
    })
}

pub fn sons(path: &TreePath) -> Result<Vec<TreePath>, TreeError> {
    let arity = path.status()?.arity();
    (0..arity).map(|i| path.child(i)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeNumber(pub u128);

impl fmt::Display for NodeNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

fn status_int(st: NodeStatus) -> u8 {
    st.arity()
}

/// Number of the first node of `level`.
pub fn first_of_level(level: u32, root_status: NodeStatus) -> Result<u128, TreeError> {
    let mut n = 1u128;
    for j in 0..level {
        n = n
            .checked_add(level_count(j, status_int(root_status))?)
            .ok_or(NumerationError::Overflow)?;
    }
    Ok(n)
}

pub fn path_to_number(path: &TreePath) -> Result<NodeNumber, TreeError> {
    // Counts of 2-nodes and 3-nodes strictly to the left on the current level.
    let (mut left2, mut left3) = (0u128, 0u128);
    let mut st = path.root_status;
    for &i in &path.sons {
        let (mut n2, mut n3) = (left2 + left3, left2 + 2 * left3);
        for &s in &st.son_statuses()[..usize::from(i)] {
            match s {
                NodeStatus::TwoNode => n2 += 1,
                NodeStatus::ThreeNode => n3 += 1,
            }
        }
        st = st.son_status(i)?;
        left2 = n2;
        left3 = n3;
    }
    let level = u32::try_from(path.depth()).map_err(|_| NumerationError::Overflow)?;
    let first = first_of_level(level, path.root_status)?;
    Ok(NodeNumber(first + left2 + left3))
}

pub fn number_to_path(n: NodeNumber, root_status: NodeStatus) -> Result<TreePath, TreeError> {
    if n.0 == 0 {
        return Err(TreeError::ZeroNumber);
    }
    let mut level = 0u32;
    let mut first = 1u128;
    loop {
        let count = level_count(level, status_int(root_status))?;
        if n.0 < first + count {
            break;
        }
        first += count;
        level += 1;
    }
    let mut offset = n.0 - first;
    let mut st = root_status;
    let mut sons = Vec::with_capacity(level as usize);
    for remaining in (0..level).rev() {
        let mut chosen = None;
        for (i, &s) in st.son_statuses().iter().enumerate() {
            let below = level_count(remaining, status_int(s))?;
            if offset < below {
                chosen = Some((i as u8, s));
                break;
            }
            offset -= below;
        }
        let (i, s) = chosen.expect("offset within level");
        sons.push(i);
        st = s;
    }
    Ok(TreePath { root_status, sons })
}

pub fn coordinate_of(n: NodeNumber) -> Result<ZeckendorfWord, TreeError> {
    Ok(numeration::zeck_encode(n.0)?)
}

/// Counts (2-nodes, 3-nodes) on each level 0..=depth by explicit expansion.
pub fn expand_level_census(root_status: NodeStatus, depth: u32) -> Vec<(u128, u128)> {
    let mut level = vec![root_status];
    let mut out = Vec::new();
    for d in 0..=depth {
        let twos = level.iter().filter(|&&s| s == NodeStatus::TwoNode).count() as u128;
        out.push((twos, level.len() as u128 - twos));
        if d < depth {
            level = level
                .iter()
                .flat_map(|s| s.son_statuses().iter().copied())
                .collect();
        }
    }
    out
}
