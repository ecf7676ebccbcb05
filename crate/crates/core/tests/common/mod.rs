#![allow(dead_code)]

use std::collections::BTreeSet;

use kurepa::arena::{x_member, Arena, Node};
use kurepa::closure::{Block, Family};
use kurepa::ordinal::Ordinal;
use kurepa::two_thin::{Parity, TwoThinCatalog, TwoThinEntry};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn o(n: u64) -> Ordinal {
    Ordinal::nat(n)
}

/// `ω·k + n`.
pub fn wk(k: u64, n: u64) -> Ordinal {
    Ordinal::omega_times(k).add_nat(n)
}

/// Sample points below `alpha` for ladder scenarios.
pub fn points_below(alpha: &Ordinal) -> Vec<Ordinal> {
    let mut pts: Vec<Ordinal> = (0..14).map(o).collect();
    for k in 1..4 {
        pts.extend((0..6).map(|n| wk(k, n)));
    }
    pts.retain(|p| p < alpha);
    pts.sort();
    pts
}

/// Non-overlapping family over sorted `points`: disjoint consecutive
/// segments, each contributing 1–3 of its points.
pub fn random_family<R: Rng>(rng: &mut R, points: &[Ordinal], max_blocks: usize) -> Family<Ordinal> {
    let mut blocks = Vec::new();
    let mut i = rng.gen_range(0..=2.min(points.len()));
    while i < points.len() && blocks.len() < max_blocks {
        let len = rng.gen_range(1..=4).min(points.len() - i);
        let seg = &points[i..i + len];
        let k = rng.gen_range(1..=seg.len().min(3));
        let b: Block<Ordinal> = seg.choose_multiple(rng, k).cloned().collect();
        blocks.push(b);
        i += len + rng.gen_range(0..3);
    }
    Family::non_overlapping(blocks).expect("segments are separated")
}

/// Disjoint family with blocks drawn anywhere in `ground`.
pub fn random_disjoint<R: Rng>(rng: &mut R, ground: &[Ordinal], max_blocks: usize) -> Family<Ordinal> {
    let mut pool: Vec<Ordinal> = ground.to_vec();
    pool.shuffle(rng);
    let mut blocks = Vec::new();
    while !pool.is_empty() && blocks.len() < max_blocks {
        let k = rng.gen_range(1..=pool.len().min(3));
        let b: Block<Ordinal> = pool.drain(..k).collect();
        blocks.push(b);
        if rng.gen_bool(0.3) && !pool.is_empty() {
            pool.remove(0);
        }
    }
    Family::disjoint(blocks).expect("drawn without replacement")
}

pub fn is_closed_oracle(a: &BTreeSet<Ordinal>, fams: &[Family<Ordinal>]) -> bool {
    fams.iter()
        .flat_map(|f| f.blocks())
        .all(|b| b.is_subset(a) || b.is_disjoint(a))
}

/// ⊆-least closed superset of `a` inside `ground`, by enumeration.
pub fn brute_closure(a: &BTreeSet<Ordinal>, ground: &[Ordinal], fams: &[Family<Ordinal>]) -> BTreeSet<Ordinal> {
    let mut best: Option<BTreeSet<Ordinal>> = None;
    for mask in 0u32..1 << ground.len() {
        let s: BTreeSet<Ordinal> = ground
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, x)| x.clone())
            .collect();
        if !a.is_subset(&s) || !is_closed_oracle(&s, fams) {
            continue;
        }
        best = Some(match best {
            None => s,
            Some(b) => b.intersection(&s).cloned().collect(),
        });
    }
    best.expect("ground itself is closed")
}

/// Random arena with `|P| ≤ 5` and `Λ ≤ ω·3`.
pub fn random_arena<R: Rng>(rng: &mut R) -> Arena {
    let lambda = Ordinal::omega_times(rng.gen_range(1..=3));
    random_arena_below(rng, lambda, 5)
}

pub fn random_arena_below<R: Rng>(rng: &mut R, lambda: Ordinal, max_coords: usize) -> Arena {
    let mut cands: Vec<Ordinal> = (0..7).map(o).chain([wk(1, 0), wk(1, 1), wk(2, 0), wk(2, 1)]).collect();
    cands.retain(|c| *c < lambda);
    let k = rng.gen_range(1..=max_coords);
    let coords: BTreeSet<Ordinal> = cands.choose_multiple(rng, k).cloned().collect();
    let width = Arena::default_width(&coords);
    Arena::new(coords, lambda, width).unwrap()
}

fn heights_below(lambda: &Ordinal) -> Vec<Ordinal> {
    let mut hs: Vec<Ordinal> = (0..11).map(o).collect();
    for k in 1..4 {
        hs.extend((0..5).map(|n| wk(k, n)));
    }
    hs.retain(|h| h < lambda);
    hs
}

fn random_support<R: Rng>(rng: &mut R, arena: &Arena, lo: &Ordinal, hi: &Ordinal) -> Vec<Ordinal> {
    arena
        .coords()
        .iter()
        .filter(|p| *p >= lo && *p < hi && rng.gen_bool(0.5))
        .cloned()
        .collect()
}

/// One block of `X_{s,n}` with all heights above `floor`, if the draw fits.
pub fn random_x_block<R: Rng>(rng: &mut R, arena: &Arena, s: &Node, n: usize, floor: &Ordinal) -> Option<Block<Node>> {
    let p = s.height().clone();
    let lo = floor.clone().max(p.succ());
    let mut hs: Vec<Ordinal> = heights_below(arena.height_bound())
        .into_iter()
        .filter(|h| *h >= lo)
        .collect();
    if hs.len() < 2 * n {
        return None;
    }
    let k = rng.gen_range(2 * n..=hs.len().min(2 * n + 2));
    let start = rng.gen_range(0..=hs.len() - k);
    hs = hs.split_off(start);
    hs.truncate(k);
    let mut hs: Vec<Ordinal> = hs.choose_multiple(rng, 2 * n).cloned().collect();
    hs.sort();
    let top0 = &hs[n - 1];
    let mut supp0: BTreeSet<Ordinal> = s.support().clone();
    supp0.extend(random_support(rng, arena, &p.succ(), top0));
    let t0 = Node::new(top0.clone(), supp0.iter().cloned()).ok()?;
    let top1 = &hs[2 * n - 1];
    let mut supp1: BTreeSet<Ordinal> = supp0.clone();
    supp1.insert(p.clone());
    supp1.extend(random_support(rng, arena, top0, top1));
    let t1 = Node::new(top1.clone(), supp1.iter().cloned()).ok()?;
    let seq: Vec<Node> = hs[..n]
        .iter()
        .map(|h| t0.restrict(h))
        .chain(hs[n..].iter().map(|h| t1.restrict(h)))
        .collect();
    let block: Block<Node> = seq.iter().cloned().collect();
    (block.len() == 2 * n && x_member(&seq, s, n).ok()? && seq.iter().all(|x| arena.contains(x))).then_some(block)
}

/// A splitting node: its height is a coordinate.
pub fn random_split_node<R: Rng>(rng: &mut R, arena: &Arena) -> Option<Node> {
    let p = arena
        .coords()
        .iter()
        .filter(|p| *p < arena.height_bound())
        .collect::<Vec<_>>()
        .choose(rng)
        .cloned()?
        .clone();
    let supp = random_support(rng, arena, &o(0), &p);
    Node::new(p, supp).ok()
}

/// Up to three entries with non-overlapping families of `X_{s,n}` blocks.
pub fn random_catalog<R: Rng>(rng: &mut R, arena: &Arena) -> TwoThinCatalog {
    let mut entries = Vec::new();
    for _ in 0..rng.gen_range(0..=3) {
        let Some(s) = random_split_node(rng, arena) else { break };
        let n = rng.gen_range(1..=2);
        let mut blocks: Vec<Block<Node>> = Vec::new();
        let mut floor = o(0);
        for _ in 0..rng.gen_range(1..=4) {
            if let Some(b) = random_x_block(rng, arena, &s, n, &floor) {
                floor = b.last().unwrap().height().succ();
                blocks.push(b);
            }
        }
        if blocks.is_empty() {
            continue;
        }
        entries.push(TwoThinEntry {
            s,
            n,
            parity: Parity::Even,
            source: entries.len(),
            family: Family::non_overlapping(blocks).expect("increasing floors"),
        });
    }
    TwoThinCatalog { entries }
}
