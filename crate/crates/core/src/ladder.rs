//! Ladder partitions of a limit stage into windows `[α_n, α_{n+1})` with
//! finite corrections `F_n`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::certificate::Certificate;
use crate::closure::{close, is_closed, max_rank, min_rank, Block, Family, Ground};
use crate::error::{Error, Result};
use crate::ordinal::Ordinal;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "G: Ground")]
pub struct LadderResult<G: Ground> {
    /// `α_0, …, α_steps`.
    pub alphas: Vec<Ordinal>,
    /// `F_0, …, F_steps`.
    #[serde(rename = "F")]
    pub corrections: Vec<Block<G>>,
    pub steps: usize,
}

impl<G: Ground> LadderResult<G> {
    /// Upper end of window `n`, if the ladder reaches it.
    pub fn window_top(&self, n: usize) -> Option<&Ordinal> {
        self.alphas.get(n + 1)
    }

    pub fn correction(&self, n: usize) -> Option<&Block<G>> {
        self.corrections.get(n)
    }
}

fn straddles<G: Ground>(b: &Block<G>, alpha: &Ordinal) -> bool {
    min_rank(b) <= alpha && alpha <= max_rank(b)
}

fn prefix<G: Ground>(fams: &[Family<G>], n: usize) -> &[Family<G>] {
    &fams[..n.min(fams.len())]
}

fn straddle_union<G: Ground>(fams: &[Family<G>], alpha: &Ordinal) -> BTreeSet<G> {
    fams.iter()
        .flat_map(|f| f.blocks())
        .filter(|b| straddles(b, alpha))
        .flatten()
        .cloned()
        .collect()
}

pub fn build_ladder<G: Ground>(alpha: &Ordinal, fams: &[Family<G>], steps: usize) -> Result<LadderResult<G>> {
    if !alpha.is_limit() {
        return Err(Error::NotLimit(alpha.to_string()));
    }
    for b in fams.iter().flat_map(|f| f.blocks()) {
        if max_rank(b) >= alpha {
            return Err(Error::RankOutOfRange {
                rank: max_rank(b).to_string(),
                bound: alpha.to_string(),
            });
        }
    }
    let mut alphas = vec![alpha.fund_seq(0)?];
    for n in 0..steps {
        let cur = &alphas[n];
        let scope = prefix(fams, n + 1);
        let hull = close(&straddle_union(scope, cur), scope);
        let mut next = alpha.fund_seq(n as u64 + 1)?.max(cur.succ());
        if let Some(top) = hull.last() {
            next = next.max(top.rank().succ());
        }
        alphas.push(next);
    }
    let corrections = alphas
        .iter()
        .enumerate()
        .map(|(n, a)| {
            let scope = prefix(fams, n);
            close(&straddle_union(scope, a), scope)
        })
        .collect();
    Ok(LadderResult {
        alphas,
        corrections,
        steps,
    })
}

pub fn audit_ladder<G: Ground>(res: &LadderResult<G>, alpha: &Ordinal, fams: &[Family<G>]) -> Certificate {
    let mut cert = Certificate::new("ladder");
    let fs = &res.corrections;

    let mut bad = None;
    for (n, a) in res.alphas.iter().enumerate() {
        let fund = alpha.fund_seq(n as u64).ok();
        let below_prev = n > 0 && res.alphas[n - 1] >= *a;
        if below_prev || fund.as_ref().is_some_and(|f| a < f) || a >= alpha {
            bad = Some(json!({"n": n, "alpha_n": a}));
            break;
        }
    }
    cert.record("alphas_increasing", bad.is_none(), bad.unwrap_or(json!(res.alphas)));

    let mut bad = None;
    'disjoint: for m in 0..fs.len() {
        for n in m + 1..fs.len() {
            if let Some(x) = fs[m].intersection(&fs[n]).next() {
                bad = Some(json!({"m": m, "n": n, "element": x}));
                break 'disjoint;
            }
        }
    }
    cert.record("i_disjoint", bad.is_none(), bad.unwrap_or(json!(null)));

    let mut bad = None;
    for (n, f) in fs.iter().enumerate() {
        let scope = prefix(fams, n);
        if let Some(b) = scope
            .iter()
            .flat_map(|fam| fam.blocks())
            .find(|b| !b.is_subset(f) && !b.is_disjoint(f))
        {
            bad = Some(json!({"n": n, "block": b}));
            break;
        }
    }
    cert.record("ii_closed", bad.is_none(), bad.unwrap_or(json!(null)));

    let mut bad = None;
    'window: for (n, f) in fs.iter().enumerate() {
        let top = res.window_top(n).unwrap_or(alpha);
        for x in f {
            let above_prev = n == 0 || x.rank() > &res.alphas[n - 1];
            if !above_prev || x.rank() >= top {
                bad = Some(json!({"n": n, "element": x}));
                break 'window;
            }
        }
    }
    cert.record("ii_window", bad.is_none(), bad.unwrap_or(json!(null)));

    let ground: BTreeSet<G> = fams.iter().flat_map(|f| f.elements()).collect();
    let mut bad = None;
    for (n, f) in fs.iter().enumerate() {
        let scope = prefix(fams, n);
        let mut init: BTreeSet<G> = ground.iter().filter(|x| x.rank() < &res.alphas[n]).cloned().collect();
        init.extend(f.iter().cloned());
        if !is_closed(&init, scope) {
            let b = scope
                .iter()
                .flat_map(|fam| fam.blocks())
                .find(|b| !b.is_subset(&init) && !b.is_disjoint(&init));
            bad = Some(json!({"n": n, "block": b}));
            break;
        }
    }
    cert.record("ii_initial_closed", bad.is_none(), bad.unwrap_or(json!(null)));

    let mut bad = None;
    'local: for n in 0..res.alphas.len().saturating_sub(1) {
        let (lo, hi) = (&res.alphas[n], &res.alphas[n + 1]);
        let scope = prefix(fams, n);
        let empty = Block::new();
        let fn0 = &fs[n];
        let fn1 = fs.get(n + 1).unwrap_or(&empty);
        for beta in ground.iter().filter(|x| x.rank() >= lo && x.rank() < hi) {
            let cl = close(&BTreeSet::from([beta.clone()]), scope);
            if let Some(x) = cl
                .iter()
                .find(|x| !(x.rank() >= lo && x.rank() < hi) && !fn0.contains(x) && !fn1.contains(x))
            {
                bad = Some(json!({"n": n, "beta": beta, "escapes": x}));
                break 'local;
            }
        }
    }
    cert.record("iii_local", bad.is_none(), bad.unwrap_or(json!(null)));
    cert
}
