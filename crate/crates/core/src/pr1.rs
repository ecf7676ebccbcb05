//! The coloring of ordinals induced by a branch, and exhaustive witness
//! search for the rectangle property.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::arena::Node;
use crate::certificate::Certificate;
use crate::coloring::ColoringState;
use crate::error::{Error, Result};
use crate::ordinal::Ordinal;

/// A branch through the arena, given by its (finite) support.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Branch {
    #[serde(default)]
    pub supp: BTreeSet<Ordinal>,
}

impl Branch {
    pub fn zero() -> Self {
        Branch::default()
    }

    /// `b↾γ`.
    pub fn at(&self, gamma: &Ordinal) -> Node {
        Node::new(gamma.clone(), self.supp.range(..gamma.clone()).cloned()).expect("support below height")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pr1Instance {
    pub n: usize,
    pub tuples: Vec<Vec<Ordinal>>,
    pub eta: u8,
}

impl Pr1Instance {
    pub fn validate(&self, bound: &Ordinal) -> Result<()> {
        if self.eta > 1 {
            return Err(Error::MalformedInstance(format!("color {} is not below 2", self.eta)));
        }
        let mut seen = BTreeSet::new();
        for (i, t) in self.tuples.iter().enumerate() {
            if t.len() != self.n || t.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::MalformedInstance(format!(
                    "tuple {i} is not an increasing {}-tuple",
                    self.n
                )));
            }
            if let Some(x) = t.iter().find(|x| *x >= bound) {
                return Err(Error::MalformedInstance(format!(
                    "tuple {i} has {x} beyond the truncation"
                )));
            }
            if let Some(x) = t.iter().find(|x| !seen.insert((*x).clone())) {
                return Err(Error::MalformedInstance(format!("tuple {i} reuses {x}")));
            }
        }
        Ok(())
    }
}

/// `π(α, β) = c(b↾α, b↾β)`.
pub struct InducedPi<'a> {
    state: &'a ColoringState,
    branch: Branch,
}

pub fn induce_pi<'a>(state: &'a ColoringState, branch: &Branch) -> Result<InducedPi<'a>> {
    let arena = state.arena();
    if let Some(p) = branch.supp.iter().find(|p| !arena.coords().contains(*p)) {
        return Err(Error::BranchOutsideArena(format!("coordinate {p} is not in P")));
    }
    if state.built_up_to() < arena.height_bound() {
        return Err(Error::LevelNotBuilt(arena.height_bound().to_string()));
    }
    Ok(InducedPi {
        state,
        branch: branch.clone(),
    })
}

impl InducedPi<'_> {
    pub fn branch(&self) -> &Branch {
        &self.branch
    }

    pub fn state(&self) -> &ColoringState {
        self.state
    }

    pub fn color(&self, a: &Ordinal, b: &Ordinal) -> Result<u8> {
        let bound = self.state.arena().height_bound();
        if let Some(x) = [a, b].into_iter().find(|x| *x >= bound) {
            return Err(Error::BeyondTruncation {
                level: x.to_string(),
                bound: bound.to_string(),
            });
        }
        self.state.color(&self.branch.at(a), &self.branch.at(b))
    }

    /// `{ξ < β : π(ξ, β) ≠ π(ξ, γ)}` evaluated at the given points.
    pub fn defect_at(
        &self,
        points: impl IntoIterator<Item = Ordinal>,
        beta: &Ordinal,
        gamma: &Ordinal,
    ) -> Result<BTreeSet<Ordinal>> {
        let mut out = BTreeSet::new();
        for xi in points {
            if xi < *beta && self.color(&xi, beta)? != self.color(&xi, gamma)? {
                out.insert(xi);
            }
        }
        Ok(out)
    }
}

/// First `(α, β)`, `α < β`, with `π(a_α(i), a_β(j)) = η` for all `i, j`.
pub fn pr1_search(pi: &InducedPi<'_>, inst: &Pr1Instance) -> Result<Option<(usize, usize)>> {
    inst.validate(pi.state.arena().height_bound())?;
    for a in 0..inst.tuples.len() {
        'pair: for b in a + 1..inst.tuples.len() {
            for x in &inst.tuples[a] {
                for y in &inst.tuples[b] {
                    if pi.color(x, y)? != inst.eta {
                        continue 'pair;
                    }
                }
            }
            return Ok(Some((a, b)));
        }
    }
    Ok(None)
}

fn homogeneous(pi: &InducedPi<'_>, a: &[Ordinal], b: &[Ordinal]) -> Result<bool> {
    let first = pi.color(&a[0], &b[0])?;
    for x in a {
        for y in b {
            if pi.color(x, y)? != first {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn best_clique(adj: &[Vec<bool>]) -> Vec<usize> {
    fn grow(adj: &[Vec<bool>], cur: &mut Vec<usize>, cand: &[usize], best: &mut Vec<usize>) {
        if cur.len() + cand.len() <= best.len() {
            return;
        }
        if cand.is_empty() {
            *best = cur.clone();
            return;
        }
        for (p, &v) in cand.iter().enumerate() {
            if cur.len() + cand.len() - p <= best.len() {
                return;
            }
            let rest: Vec<usize> = cand[p + 1..].iter().copied().filter(|&u| adj[v][u]).collect();
            cur.push(v);
            grow(adj, cur, &rest, best);
            cur.pop();
        }
    }
    let all: Vec<usize> = (0..adj.len()).collect();
    let mut best = Vec::new();
    grow(adj, &mut Vec::new(), &all, &mut best);
    best
}

/// Coherence of `π` against `coh_defect` and the best pairwise
/// two-constant subfamily of `blocks`.
pub fn pi_audit(pi: &InducedPi<'_>, blocks: &[Vec<Ordinal>], large: usize) -> Result<Certificate> {
    let mut cert = Certificate::new("pi");
    for (i, b) in blocks.iter().enumerate() {
        if b.is_empty() || b.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::MalformedInstance(format!("block {i} is not increasing")));
        }
    }
    let points: BTreeSet<Ordinal> = blocks.iter().flatten().cloned().collect();
    let points: Vec<Ordinal> = points.into_iter().collect();
    let arena = pi.state.arena();
    let mut bad = None;
    let mut sizes = Vec::new();
    'coh: for (p, beta) in points.iter().enumerate() {
        for gamma in &points[p + 1..] {
            let expected: BTreeSet<Ordinal> = pi
                .state
                .coh_defect(&pi.branch.at(beta), &pi.branch.at(gamma))?
                .nodes
                .iter()
                .map(|x| x.height().clone())
                .collect();
            let mut probe: BTreeSet<Ordinal> = arena.observed_levels_below(beta).into_iter().collect();
            probe.extend(points[..p].iter().cloned());
            probe.extend(expected.iter().cloned());
            let got = pi.defect_at(probe, beta, gamma)?;
            sizes.push(json!({"beta": beta, "gamma": gamma, "size": got.len()}));
            if got != expected {
                bad = Some(json!({"beta": beta, "gamma": gamma, "pi": got, "coh": expected}));
                break 'coh;
            }
        }
    }
    cert.record("coherence", bad.is_none(), bad.unwrap_or(json!(sizes)));

    let m = blocks.len();
    let mut adj = vec![vec![false; m]; m];
    for i in 0..m {
        for j in i + 1..m {
            let ok = homogeneous(pi, &blocks[i], &blocks[j])?;
            adj[i][j] = ok;
            adj[j][i] = ok;
        }
    }
    let best = best_clique(&adj);
    cert.record(
        "homogeneous_subfamily",
        best.len() >= large.min(m),
        json!({"best": best, "size": best.len(), "of": m, "large": large}),
    );
    Ok(cert)
}
