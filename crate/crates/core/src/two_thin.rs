//! Transfer of an ordinal-ground catalog onto the arena: a height-monotone
//! enumeration of the grid nodes, projection into `X_{s,n}`, and the
//! even/odd split that makes every family non-overlapping by height.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::arena::{x_member, Arena, Node};
use crate::certificate::Certificate;
use crate::closure::{close, Block, Family, Flavor};
use crate::error::{Error, Result};
use crate::forcing::CloseSample;
use crate::ordinal::Ordinal;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HeightBijection {
    forward: Vec<Node>,
}

impl HeightBijection {
    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn forward(&self, k: &Ordinal) -> Result<&Node> {
        k.as_nat()
            .and_then(|k| usize::try_from(k).ok())
            .and_then(|k| self.forward.get(k))
            .ok_or_else(|| Error::OutsideBijection(k.to_string()))
    }

    pub fn inverse(&self, node: &Node) -> Result<Ordinal> {
        self.forward
            .binary_search(node)
            .map(|k| Ordinal::nat(k as u64))
            .map_err(|_| Error::OutsideBijection(node.to_string()))
    }

    pub fn nodes(&self) -> &[Node] {
        &self.forward
    }
}

/// Grid nodes level by level, each level in height order.
pub fn height_bijection(arena: &Arena) -> Result<HeightBijection> {
    Ok(HeightBijection {
        forward: arena.grid_nodes()?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Even,
    Odd,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoThinEntry {
    pub s: Node,
    pub n: usize,
    pub parity: Parity,
    pub source: usize,
    pub family: Family<Node>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoThinCatalog {
    pub entries: Vec<TwoThinEntry>,
}

impl TwoThinCatalog {
    pub fn families(&self) -> Vec<Family<Node>> {
        self.entries.iter().map(|e| e.family.clone()).collect()
    }
}

/// `π(𝒜) ∩ X_{s,n}`, blocks in preimage order.
pub fn project_family(pi: &HeightBijection, fam: &Family<Ordinal>, s: &Node, n: usize) -> Result<Family<Node>> {
    let mut blocks = Vec::new();
    for a in fam.blocks() {
        let image: Block<Node> = a.iter().map(|k| pi.forward(k).cloned()).collect::<Result<_>>()?;
        let seq: Vec<Node> = image.iter().cloned().collect();
        if seq.len() == 2 * n && x_member(&seq, s, n)? {
            blocks.push((a.first().cloned(), image));
        }
    }
    blocks.sort_by(|x, y| x.0.cmp(&y.0));
    Ok(Family::unchecked(
        Flavor::Disjoint,
        None,
        blocks.into_iter().map(|(_, b)| b),
    ))
}

pub fn build_two_thin(fstar: &[Family<Ordinal>], arena: &Arena, pairs: &[(Node, usize)]) -> Result<TwoThinCatalog> {
    let pi = height_bijection(arena)?;
    let mut entries = Vec::new();
    for (source, fam) in fstar.iter().enumerate() {
        for (s, n) in pairs {
            let proj = project_family(&pi, fam, s, *n)?;
            for parity in [Parity::Even, Parity::Odd] {
                let offset = if parity == Parity::Even { 0 } else { 1 };
                let picked: Vec<Block<Node>> = proj.blocks().iter().skip(offset).step_by(2).cloned().collect();
                if picked.is_empty() {
                    continue;
                }
                entries.push(TwoThinEntry {
                    s: s.clone(),
                    n: *n,
                    parity,
                    source,
                    family: Family::non_overlapping(picked)?,
                });
            }
        }
    }
    Ok(TwoThinCatalog { entries })
}

pub fn audit_two_thin(
    cat: &TwoThinCatalog,
    alpha: &Ordinal,
    targets: &[Family<Node>],
    samples: &[CloseSample<'_, Node>],
    large: usize,
) -> Certificate {
    let mut cert = Certificate::new("two_thin");
    let fams = cat.families();

    let restrictions: BTreeSet<Vec<Block<Node>>> =
        fams.iter().map(|f| f.restrict_below(alpha).blocks().to_vec()).collect();
    cert.record(
        "i_restrictions",
        true,
        json!({"alpha": alpha, "count": restrictions.len(), "restrictions": restrictions}),
    );

    let mut ok = true;
    let mut overlaps = Vec::new();
    for (t, target) in targets.iter().enumerate() {
        let best = fams
            .iter()
            .map(|f| target.blocks().iter().filter(|b| f.contains_block(b)).count())
            .max()
            .unwrap_or(0);
        ok &= best >= large.min(target.len());
        overlaps.push(json!({"target": t, "best": best}));
    }
    cert.record("ii_overlap", ok, json!(overlaps));

    let mut ok = true;
    let mut bounds = Vec::new();
    for (i, s) in samples.iter().enumerate() {
        let sub: Vec<Family<Node>> = s.families.iter().filter_map(|&j| fams.get(j).cloned()).collect();
        let size = close(s.a, &sub).len();
        let within = sub.len() == s.families.len() && s.horizon.is_none_or(|h| size <= h);
        ok &= within;
        bounds.push(json!({"sample": i, "closure_size": size, "pass": within}));
    }
    cert.record("iii_closure", ok, json!(bounds));

    let mut bad = None;
    for (i, e) in cat.entries.iter().enumerate() {
        if let Some((a, b)) = e.family.first_non_separated_pair() {
            bad = Some(json!({"entry": i, "blocks": [a, b]}));
            break;
        }
    }
    cert.record("iv_non_overlapping", bad.is_none(), bad.unwrap_or(json!(null)));

    let mut bad = None;
    'x: for (i, e) in cat.entries.iter().enumerate() {
        for b in e.family.blocks() {
            let seq: Vec<Node> = b.iter().cloned().collect();
            if !matches!(x_member(&seq, &e.s, e.n), Ok(true)) {
                bad = Some(json!({"entry": i, "block": b}));
                break 'x;
            }
        }
    }
    cert.record("blocks_in_x", bad.is_none(), bad.unwrap_or(json!(null)));
    cert
}
