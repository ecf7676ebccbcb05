//! Blocks, families and the closure operator `cl(a, 𝓕)`.

use std::collections::BTreeSet;
use std::fmt::Debug;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::arena::Node;
use crate::error::{Error, Result};
use crate::ordinal::Ordinal;

/// A ground element with a rank: ordinals rank as themselves, nodes by height.
///
/// The element order must refine the rank order, so the first and last
/// elements of a block carry its minimum and maximum rank.
pub trait Ground: Clone + Ord + Debug + std::hash::Hash + Serialize + DeserializeOwned + Send + Sync {
    fn rank(&self) -> &Ordinal;
}

impl Ground for Ordinal {
    fn rank(&self) -> &Ordinal {
        self
    }
}

impl Ground for Node {
    fn rank(&self) -> &Ordinal {
        self.height()
    }
}

pub type Block<G> = BTreeSet<G>;

pub fn min_rank<G: Ground>(b: &Block<G>) -> &Ordinal {
    b.first().expect("blocks are nonempty").rank()
}

pub fn max_rank<G: Ground>(b: &Block<G>) -> &Ordinal {
    b.last().expect("blocks are nonempty").rank()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    /// Pairwise disjoint, no ordering constraint.
    Disjoint,
    /// Blocks occupy pairwise disjoint rank intervals.
    NonOverlapping,
    /// Common root, pairwise disjoint residues.
    DeltaSystem,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(bound = "G: Ground")]
pub struct Family<G: Ground> {
    flavor: Flavor,
    root: Option<Block<G>>,
    blocks: Vec<Block<G>>,
}

impl<G: Ground> Family<G> {
    pub fn empty() -> Self {
        Family {
            flavor: Flavor::NonOverlapping,
            root: None,
            blocks: Vec::new(),
        }
    }

    pub fn non_overlapping(blocks: impl IntoIterator<Item = Block<G>>) -> Result<Self> {
        let fam = Self::unchecked(Flavor::NonOverlapping, None, blocks);
        fam.validate()?;
        Ok(fam)
    }

    pub fn disjoint(blocks: impl IntoIterator<Item = Block<G>>) -> Result<Self> {
        let fam = Self::unchecked(Flavor::Disjoint, None, blocks);
        fam.validate()?;
        Ok(fam)
    }

    pub fn delta_system(root: Block<G>, blocks: impl IntoIterator<Item = Block<G>>) -> Result<Self> {
        let fam = Self::unchecked(Flavor::DeltaSystem, Some(root), blocks);
        fam.validate()?;
        Ok(fam)
    }

    /// Builds a family without checking its flavor invariant; blocks are
    /// still put in canonical order.
    pub fn unchecked(flavor: Flavor, root: Option<Block<G>>, blocks: impl IntoIterator<Item = Block<G>>) -> Self {
        let mut blocks: Vec<Block<G>> = blocks.into_iter().collect();
        blocks.sort();
        blocks.dedup();
        Family { flavor, root, blocks }
    }

    pub fn validate(&self) -> Result<()> {
        if self.blocks.iter().any(|b| b.is_empty()) {
            return Err(Error::InvalidFamily("empty block".into()));
        }
        match self.flavor {
            Flavor::Disjoint => {
                if let Some((a, b)) = self.first_overlapping_pair(|a, b| !a.is_disjoint(b)) {
                    return Err(Error::InvalidFamily(format!("blocks {a:?} and {b:?} intersect")));
                }
            }
            Flavor::NonOverlapping => {
                if self.root.is_some() {
                    return Err(Error::InvalidFamily("non-overlapping family with a root".into()));
                }
                if let Some((a, b)) = self.first_non_separated_pair() {
                    return Err(Error::InvalidFamily(format!("blocks {a:?} and {b:?} overlap in rank")));
                }
            }
            Flavor::DeltaSystem => {
                let root = self
                    .root
                    .as_ref()
                    .ok_or_else(|| Error::InvalidFamily("delta-system without root".into()))?;
                if let Some(b) = self.blocks.iter().find(|b| !root.is_subset(b)) {
                    return Err(Error::InvalidFamily(format!("block {b:?} does not contain the root")));
                }
                if let Some((a, b)) = self.first_overlapping_pair(|a, b| a.intersection(b).any(|x| !root.contains(x))) {
                    return Err(Error::InvalidFamily(format!("residues of {a:?} and {b:?} intersect")));
                }
            }
        }
        Ok(())
    }

    fn first_overlapping_pair(&self, clash: impl Fn(&Block<G>, &Block<G>) -> bool) -> Option<(&Block<G>, &Block<G>)> {
        for (i, a) in self.blocks.iter().enumerate() {
            for b in &self.blocks[i + 1..] {
                if clash(a, b) {
                    return Some((a, b));
                }
            }
        }
        None
    }

    /// First pair violating rank separation.
    pub fn first_non_separated_pair(&self) -> Option<(&Block<G>, &Block<G>)> {
        self.first_overlapping_pair(|a, b| !(max_rank(a) < min_rank(b) || max_rank(b) < min_rank(a)))
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn root(&self) -> Option<&Block<G>> {
        self.root.as_ref()
    }

    pub fn blocks(&self) -> &[Block<G>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn contains_block(&self, b: &Block<G>) -> bool {
        self.blocks.binary_search(b).is_ok()
    }

    /// `𝒜 ∩ [α]^{<ω}`: the blocks all of whose ranks lie below `alpha`.
    pub fn restrict_below(&self, alpha: &Ordinal) -> Family<G> {
        self.filtered(|b| max_rank(b) < alpha)
    }

    /// `𝒜 ∩ [ρ+1]^{<ω}`: the blocks with ranks at most `rank`.
    pub fn restrict_upto(&self, rank: &Ordinal) -> Family<G> {
        self.filtered(|b| max_rank(b) <= rank)
    }

    pub fn filtered(&self, keep: impl Fn(&Block<G>) -> bool) -> Family<G> {
        Family {
            flavor: self.flavor,
            root: self.root.clone(),
            blocks: self.blocks.iter().filter(|b| keep(b)).cloned().collect(),
        }
    }

    pub fn elements(&self) -> BTreeSet<G> {
        self.blocks.iter().flatten().cloned().collect()
    }
}

/// `cl(a, fams)`: least superset of `a` that contains every block it meets.
///
/// Families are scanned in index order and blocks in rank order; the result
/// does not depend on the scan order.
pub fn close<G: Ground>(a: &BTreeSet<G>, fams: &[Family<G>]) -> BTreeSet<G> {
    let mut acc = a.clone();
    loop {
        let mut changed = false;
        for fam in fams {
            for b in &fam.blocks {
                if !b.is_subset(&acc) && !b.is_disjoint(&acc) {
                    acc.extend(b.iter().cloned());
                    changed = true;
                }
            }
        }
        if !changed {
            return acc;
        }
    }
}

/// Closure relative to delta-system roots: every root is forced in, and a
/// block joins once its residue meets the accumulated set.
pub fn close_delta<G: Ground>(a: &BTreeSet<G>, fams: &[Family<G>]) -> Result<BTreeSet<G>> {
    let mut acc = a.clone();
    for (i, fam) in fams.iter().enumerate() {
        match (&fam.flavor, &fam.root) {
            (Flavor::DeltaSystem, Some(root)) => acc.extend(root.iter().cloned()),
            _ => return Err(Error::NotDeltaSystem(i)),
        }
    }
    loop {
        let mut changed = false;
        for fam in fams {
            let root = fam.root.as_ref().expect("checked above");
            for b in &fam.blocks {
                if !b.is_subset(&acc) && b.iter().any(|x| !root.contains(x) && acc.contains(x)) {
                    acc.extend(b.iter().cloned());
                    changed = true;
                }
            }
        }
        if !changed {
            return Ok(acc);
        }
    }
}

pub fn is_closed<G: Ground>(a: &BTreeSet<G>, fams: &[Family<G>]) -> bool {
    fams.iter()
        .flat_map(|f| f.blocks.iter())
        .all(|b| b.is_subset(a) || b.is_disjoint(a))
}

/// The partition of `ground` into singleton closures.
pub fn closure_classes<G: Ground>(ground: &BTreeSet<G>, fams: &[Family<G>]) -> Result<Vec<BTreeSet<G>>> {
    if let Some(b) = fams.iter().flat_map(|f| f.blocks.iter()).find(|b| !b.is_subset(ground)) {
        return Err(Error::BlockEscapesGround(format!("{b:?}")));
    }
    let mut seen = BTreeSet::new();
    let mut classes = Vec::new();
    for x in ground {
        if seen.contains(x) {
            continue;
        }
        let class = close(&BTreeSet::from([x.clone()]), fams);
        seen.extend(class.iter().cloned());
        classes.push(class);
    }
    Ok(classes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(xs: &[u64]) -> BTreeSet<Ordinal> {
        xs.iter().map(|&x| Ordinal::nat(x)).collect()
    }

    fn fam(blocks: &[&[u64]]) -> Family<Ordinal> {
        Family::non_overlapping(blocks.iter().map(|b| set(b))).unwrap()
    }

    fn delta(root: &[u64], blocks: &[&[u64]]) -> Family<Ordinal> {
        Family::delta_system(set(root), blocks.iter().map(|b| set(b))).unwrap()
    }

    #[test]
    fn close_examples() {
        assert_eq!(close(&set(&[0]), &[]), set(&[0]));
        assert_eq!(close(&set(&[0]), &[fam(&[&[0, 1], &[2, 3]])]), set(&[0, 1]));
        let chained = [fam(&[&[0, 1], &[4, 7]]), fam(&[&[1, 2]])];
        assert_eq!(close(&set(&[0]), &chained), set(&[0, 1, 2]));
    }

    #[test]
    fn close_delta_examples() {
        let f = [delta(&[5], &[&[5, 0], &[5, 1]])];
        assert_eq!(close_delta(&set(&[0]), &f).unwrap(), set(&[0, 5]));
        let g = [delta(&[9], &[&[9, 2]])];
        assert_eq!(close_delta(&set(&[]), &g).unwrap(), set(&[9]));
        assert_eq!(close_delta(&set(&[2]), &g).unwrap(), set(&[2, 9]));
        assert!(matches!(
            close_delta(&set(&[2]), &[fam(&[&[1]])]),
            Err(Error::NotDeltaSystem(0))
        ));
    }

    #[test]
    fn is_closed_examples() {
        let f = [fam(&[&[0, 1], &[2, 3]])];
        assert!(is_closed(&set(&[2, 3]), &f));
        assert!(!is_closed(&set(&[1, 2]), &f));
        assert!(is_closed(&set(&[]), &f));
    }

    #[test]
    fn closure_classes_examples() {
        let ground = set(&[0, 1, 2, 3, 4]);
        let classes = closure_classes(&ground, &[fam(&[&[0, 1], &[2, 3]])]).unwrap();
        assert_eq!(classes, vec![set(&[0, 1]), set(&[2, 3]), set(&[4])]);
        assert_eq!(closure_classes(&set(&[0, 1]), &[]).unwrap(), vec![set(&[0]), set(&[1])]);
        let chained = [fam(&[&[0, 1], &[4, 7]]), fam(&[&[1, 2]])];
        let classes = closure_classes(&set(&[0, 1, 2, 3, 4, 5, 6, 7]), &chained).unwrap();
        assert_eq!(classes[0], set(&[0, 1, 2]));
        assert!(matches!(
            closure_classes(&set(&[0]), &chained),
            Err(Error::BlockEscapesGround(_))
        ));
    }

    #[test]
    fn family_invariants() {
        assert!(Family::non_overlapping([set(&[0, 5]), set(&[3, 4])]).is_err());
        assert!(Family::disjoint([set(&[0, 5]), set(&[3, 4])]).is_ok());
        assert!(Family::disjoint([set(&[0, 5]), set(&[5])]).is_err());
        assert!(Family::delta_system(set(&[9]), [set(&[9, 1]), set(&[1, 9, 2])]).is_err());
        let f = fam(&[&[4, 7], &[0, 1]]);
        assert_eq!(f.blocks()[0], set(&[0, 1]));
        assert_eq!(f.restrict_below(&Ordinal::nat(7)).len(), 1);
        assert_eq!(f.restrict_upto(&Ordinal::nat(7)).len(), 2);
    }
}
