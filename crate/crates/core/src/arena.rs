//! The arena: a complete coherent binary tree with finite supports.
//!
//! A node of height `h` is the binary function on `[0, h)` that is 1 exactly
//! on its (finite) support. Every two such functions differ at finitely many
//! places, and splicing two nodes yields another node, so the tree is
//! coherent and complete by construction.
//!
//! Levels are indexed by every ordinal below the truncation `Λ`, so above `ω`
//! there are infinitely many of them. The arena additionally fixes a finite
//! observation grid of levels (ordinals whose finite part is below `width`)
//! used wherever something has to be enumerated.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ordinal::Ordinal;

#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Node {
    #[serde(rename = "h")]
    height: Ordinal,
    #[serde(rename = "supp")]
    support: BTreeSet<Ordinal>,
}

impl Node {
    pub fn new(height: Ordinal, support: impl IntoIterator<Item = Ordinal>) -> Result<Node> {
        let support: BTreeSet<Ordinal> = support.into_iter().collect();
        if let Some(top) = support.last() {
            if *top >= height {
                return Err(Error::InvalidNode(format!(
                    "support point {top} not below height {height}"
                )));
            }
        }
        Ok(Node { height, support })
    }

    /// Shorthand for finite heights and supports.
    pub fn finite(height: u64, support: &[u64]) -> Node {
        Node::new(Ordinal::nat(height), support.iter().map(|&p| Ordinal::nat(p)))
            .expect("finite node with support below height")
    }

    pub fn root() -> Node {
        Node {
            height: Ordinal::zero(),
            support: BTreeSet::new(),
        }
    }

    pub fn height(&self) -> &Ordinal {
        &self.height
    }

    pub fn support(&self) -> &BTreeSet<Ordinal> {
        &self.support
    }

    pub fn value_at(&self, xi: &Ordinal) -> u8 {
        u8::from(self.support.contains(xi))
    }

    /// `self ↾ β` for `β ≤ ht(self)`.
    pub fn restrict(&self, beta: &Ordinal) -> Node {
        debug_assert!(*beta <= self.height);
        Node {
            height: beta.clone(),
            support: self.support.range(..beta.clone()).cloned().collect(),
        }
    }

    /// `self ⌢ bit`.
    pub fn extend(&self, bit: u8) -> Node {
        let mut support = self.support.clone();
        if bit == 1 {
            support.insert(self.height.clone());
        }
        Node {
            height: self.height.succ(),
            support,
        }
    }

    /// Strict tree order `self <_S other`.
    pub fn is_below(&self, other: &Node) -> bool {
        self.height < other.height && other.restrict(&self.height).support == self.support
    }

    pub fn comparable(&self, other: &Node) -> bool {
        self == other || self.is_below(other) || other.is_below(self)
    }

    /// `D_{s,t}`: the coordinates below the smaller height where the nodes differ.
    pub fn dset(&self, other: &Node) -> BTreeSet<Ordinal> {
        let h = std::cmp::min(&self.height, &other.height).clone();
        self.support
            .symmetric_difference(&other.support)
            .filter(|x| **x < h)
            .cloned()
            .collect()
    }

    /// `Δ(s,t)`.
    pub fn delta(&self, other: &Node) -> Ordinal {
        let h = std::cmp::min(&self.height, &other.height);
        self.support
            .symmetric_difference(&other.support)
            .filter(|x| *x < h)
            .min()
            .cloned()
            .unwrap_or_else(|| h.clone())
    }
}

/// Height order: by height, then by the value at the first split point.
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.height.cmp(&other.height).then_with(|| {
            match self
                .support
                .symmetric_difference(&other.support)
                .filter(|x| **x < self.height)
                .min()
            {
                None => Ordering::Equal,
                Some(d) => self.value_at(d).cmp(&other.value_at(d)),
            }
        })
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {{", self.height)?;
        for (i, p) in self.support.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, "}})")
    }
}

impl fmt::Debug for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeetData {
    pub delta: Ordinal,
    pub dset: BTreeSet<Ordinal>,
    pub order: Ordering,
}

pub fn node_meet_data(s: &Node, t: &Node) -> MeetData {
    MeetData {
        delta: s.delta(t),
        dset: s.dset(t),
        order: s.cmp(t),
    }
}

/// `s ⌢ t↾[ht(s), ht(t))`.
pub fn splice(s: &Node, t: &Node) -> Result<Node> {
    if s.height >= t.height {
        return Err(Error::SpliceOrder {
            lower: s.height.to_string(),
            upper: t.height.to_string(),
        });
    }
    let support = s
        .support
        .iter()
        .cloned()
        .chain(t.support.range(s.height.clone()..).cloned())
        .collect();
    Ok(Node {
        height: t.height.clone(),
        support,
    })
}

/// Membership in `X_{s,n}`; `a` must be listed in height order.
pub fn x_member(a: &[Node], s: &Node, n: usize) -> Result<bool> {
    if n == 0 || a.len() != 2 * n {
        return Err(Error::ArityMismatch {
            expected: 2 * n,
            got: a.len(),
        });
    }
    if let Some(pos) = a.windows(2).position(|w| w[0] >= w[1]) {
        return Err(Error::NotHeightSorted(pos + 1));
    }
    let left = s.extend(0);
    let right = s.extend(1);
    let chain = |base: &Node, part: &[Node]| {
        std::iter::once(base)
            .chain(part.iter())
            .collect::<Vec<_>>()
            .windows(2)
            .all(|w| w[0].is_below(w[1]))
    };
    Ok(chain(&left, &a[..n])
        && chain(&right, &a[n..])
        && a[n - 1].height < a[n].height
        && a[n - 1].dset(&a[n]) == BTreeSet::from([s.height.clone()]))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arena {
    coords: BTreeSet<Ordinal>,
    height_bound: Ordinal,
    width: u64,
}

impl Arena {
    pub fn new(coords: impl IntoIterator<Item = Ordinal>, height_bound: Ordinal, width: u64) -> Result<Arena> {
        let coords: BTreeSet<Ordinal> = coords.into_iter().collect();
        if !height_bound.is_limit() {
            return Err(Error::InvalidArena(format!(
                "height bound {height_bound} is not a limit"
            )));
        }
        if height_bound >= Ordinal::omega_pow(u32::MAX) {
            return Err(Error::InvalidArena("height bound too large".into()));
        }
        if width < 2 {
            return Err(Error::InvalidArena("width must be at least 2".into()));
        }
        let arena = Arena {
            coords,
            height_bound,
            width,
        };
        for p in &arena.coords {
            if *p >= arena.height_bound {
                return Err(Error::InvalidArena(format!(
                    "coordinate {p} not below {}",
                    arena.height_bound
                )));
            }
            if !arena.on_grid(&p.succ()) {
                return Err(Error::InvalidArena(format!(
                    "coordinate {p} has no successor level on the observation grid (width {width})"
                )));
            }
        }
        Ok(arena)
    }

    /// Width that places every coordinate and its successor on the grid.
    pub fn default_width(coords: &BTreeSet<Ordinal>) -> u64 {
        coords
            .iter()
            .map(|p| p.finite_part() + 3)
            .chain(coords.iter().flat_map(|p| p.terms().iter().map(|&(_, c)| c)))
            .max()
            .unwrap_or(0)
            .max(4)
    }

    pub fn coords(&self) -> &BTreeSet<Ordinal> {
        &self.coords
    }

    pub fn height_bound(&self) -> &Ordinal {
        &self.height_bound
    }

    pub fn width(&self) -> u64 {
        self.width
    }

    pub fn contains(&self, node: &Node) -> bool {
        node.height <= self.height_bound && node.support.iter().all(|p| self.coords.contains(p))
    }

    pub fn coords_below(&self, gamma: &Ordinal) -> impl Iterator<Item = &Ordinal> {
        self.coords.range(..gamma.clone())
    }

    /// `S_γ`, sorted by the height order.
    pub fn level_nodes(&self, gamma: &Ordinal) -> Result<Vec<Node>> {
        if *gamma > self.height_bound {
            return Err(Error::BeyondTruncation {
                level: gamma.to_string(),
                bound: self.height_bound.to_string(),
            });
        }
        let coords: Vec<&Ordinal> = self.coords_below(gamma).collect();
        if coords.len() > 20 {
            return Err(Error::InvalidArena(format!(
                "level {gamma} has 2^{} nodes",
                coords.len()
            )));
        }
        let mut nodes: Vec<Node> = (0u32..1 << coords.len())
            .map(|mask| Node {
                height: gamma.clone(),
                support: coords
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, p)| (*p).clone())
                    .collect(),
            })
            .collect();
        nodes.sort();
        Ok(nodes)
    }

    pub fn on_grid(&self, gamma: &Ordinal) -> bool {
        let (lam, m) = gamma.split_limit();
        *gamma < self.height_bound && m < self.width && lam.terms().iter().all(|&(_, c)| c <= self.width)
    }

    /// All grid levels, ascending.
    pub fn grid_levels(&self) -> Vec<Ordinal> {
        let mut limits = vec![Ordinal::zero()];
        let mut frontier = vec![Ordinal::zero()];
        // Limit parts are sums of ω^e·c (e ≥ 1, c ≤ width) with decreasing e.
        while let Some(base) = frontier.pop() {
            let cap = base.terms().last().map(|&(e, _)| e).unwrap_or(u32::MAX);
            let top = self.height_bound.terms()[0].0;
            for e in 1..=top.min(cap.saturating_sub(1)) {
                for c in 1..=self.width {
                    let next = base.add(&Ordinal::from_terms(vec![(e, c)]).expect("term"));
                    if next < self.height_bound {
                        limits.push(next.clone());
                        frontier.push(next);
                    }
                }
            }
        }
        let mut levels: Vec<Ordinal> = limits
            .iter()
            .flat_map(|lam| (0..self.width).map(move |m| lam.add_nat(m)))
            .filter(|g| self.on_grid(g))
            .collect();
        levels.sort();
        levels.dedup();
        levels
    }

    pub fn grid_levels_below(&self, gamma: &Ordinal) -> Vec<Ordinal> {
        self.grid_levels().into_iter().filter(|g| g < gamma).collect()
    }

    /// Levels below `gamma` at which restrictions are inspected: the grid, plus
    /// the whole finite stretch `[λ, γ)` when `γ = λ + m`.
    pub fn observed_levels_below(&self, gamma: &Ordinal) -> Vec<Ordinal> {
        let (lam, m) = gamma.split_limit();
        let mut levels: BTreeSet<Ordinal> = self.grid_levels_below(gamma).into_iter().collect();
        levels.extend((0..m).map(|k| lam.add_nat(k)));
        levels.into_iter().collect()
    }

    /// Grid nodes, level by level, in height order.
    pub fn grid_nodes(&self) -> Result<Vec<Node>> {
        let mut out = Vec::new();
        for g in self.grid_levels() {
            out.extend(self.level_nodes(&g)?);
        }
        Ok(out)
    }
}

/// The ordinals in `[lo, hi)` when that interval is finite.
pub fn finite_interval(lo: &Ordinal, hi: &Ordinal) -> Option<Vec<Ordinal>> {
    if lo >= hi {
        return Some(Vec::new());
    }
    let (hl, hm) = hi.split_limit();
    if hl > *lo {
        return None;
    }
    let (ll, lm) = lo.split_limit();
    debug_assert_eq!(ll, hl);
    Some((lm..hm).map(|k| ll.add_nat(k)).collect())
}
