//! The pair coloring `c: [S]² → 2` built by recursion on levels.
//!
//! Colors are evaluated on demand. For `x <_S s` the value `c_s(x)` depends
//! only on `s` and `ht(x)`; successor levels copy their parent and color it
//! 0, limit levels follow the rung rules of their trace. Traces and values
//! are memoized, so repeated queries are cheap and always agree.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, Mutex};

use serde::Serialize;
use serde_json::{json, Value};

use crate::arena::{finite_interval, x_member, Arena, Node};
use crate::certificate::Certificate;
use crate::closure::{close, max_rank, Block, Family};
use crate::error::{Error, Result};
use crate::ladder::{build_ladder, LadderResult};
use crate::ordinal::Ordinal;
use crate::two_thin::TwoThinCatalog;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Rung {
    pub k: usize,
    #[serde(rename = "E")]
    pub e: Vec<Block<Node>>,
    #[serde(rename = "X")]
    pub x: BTreeSet<Node>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LimitTrace {
    pub level: Ordinal,
    pub nodes: Vec<Node>,
    /// Catalog entry behind each enumerated family `𝒜^n`.
    pub families: Vec<usize>,
    /// Position in `families` of each catalog entry's restriction.
    pub entry_family: Vec<Option<usize>>,
    pub ladder: LadderResult<Node>,
    #[serde(rename = "l")]
    pub parity: Vec<u8>,
    pub rungs: Vec<Rung>,
    pub steps: usize,
    pub required: usize,
    #[serde(skip)]
    restricted: Vec<Family<Node>>,
}

impl LimitTrace {
    /// `α_k`, continuing past the last rung with `max(fund(k), α_{k−1}+1)`.
    pub fn alpha(&self, k: usize) -> Ordinal {
        if let Some(a) = self.ladder.alphas.get(k) {
            return a.clone();
        }
        let mut a = self.ladder.alphas.last().expect("ladder has α_0").clone();
        for m in self.ladder.alphas.len()..=k {
            a = self
                .level
                .fund_seq(m as u64)
                .expect("trace level is a limit")
                .max(a.succ());
        }
        a
    }

    pub fn f(&self, k: usize) -> Option<&Block<Node>> {
        self.ladder.corrections.get(k).filter(|f| !f.is_empty())
    }

    pub fn x(&self, k: usize) -> Option<&BTreeSet<Node>> {
        match self.rungs.get(k) {
            Some(r) => Some(&r.x).filter(|x| !x.is_empty()),
            None => self.f(k),
        }
    }

    fn in_f(&self, k: usize, x: &Node) -> bool {
        self.f(k).is_some_and(|f| f.contains(x))
    }

    fn in_x(&self, k: usize, x: &Node) -> bool {
        self.x(k).is_some_and(|s| s.contains(x))
    }

    pub fn index_of(&self, s: &Node) -> Option<usize> {
        self.nodes.binary_search(s).ok()
    }

    pub fn restricted_families(&self) -> &[Family<Node>] {
        &self.restricted
    }

    /// Rung `k` with `α_k ≤ h < α_{k+1}`.
    pub fn window_of(&self, h: &Ordinal) -> usize {
        let mut k = 0;
        while self.alpha(k + 1) <= *h {
            k += 1;
        }
        k
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DefectReport {
    pub context: Value,
    pub nodes: BTreeSet<Node>,
    pub blocks: Vec<Block<Node>>,
    pub first_failure: Option<Value>,
}

impl DefectReport {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty() && self.blocks.is_empty()
    }
}

type Memo<K, V> = Mutex<HashMap<K, V>>;

pub struct ColoringState {
    arena: Arena,
    catalog: Option<TwoThinCatalog>,
    steps: Option<usize>,
    built: Ordinal,
    values: Memo<(Node, Ordinal), u8>,
    traces: Mutex<BTreeMap<Ordinal, Arc<LimitTrace>>>,
    disagreements: Memo<(Node, Node), Arc<BTreeSet<Ordinal>>>,
}

pub fn init_coloring(arena: &Arena) -> ColoringState {
    ColoringState {
        arena: arena.clone(),
        catalog: None,
        steps: None,
        built: Ordinal::zero(),
        values: Mutex::new(HashMap::new()),
        traces: Mutex::new(BTreeMap::new()),
        disagreements: Mutex::new(HashMap::new()),
    }
}

fn halves(a: &Block<Node>) -> Result<(Vec<Node>, usize)> {
    let seq: Vec<Node> = a.iter().cloned().collect();
    if seq.is_empty() || !seq.len().is_multiple_of(2) {
        return Err(Error::Precondition(format!("block of odd size {}", seq.len())));
    }
    let n = seq.len() / 2;
    Ok((seq, n))
}

impl ColoringState {
    pub fn arena(&self) -> &Arena {
        &self.arena
    }

    pub fn built_up_to(&self) -> &Ordinal {
        &self.built
    }

    pub fn catalog(&self) -> Option<&TwoThinCatalog> {
        self.catalog.as_ref()
    }

    fn set_catalog(&mut self, cat: &TwoThinCatalog, steps: Option<usize>) -> Result<()> {
        match &self.catalog {
            Some(old) if old != cat || self.steps != steps => Err(Error::CatalogChanged),
            Some(_) => Ok(()),
            None => {
                for e in &cat.entries {
                    for b in e.family.blocks() {
                        if let Some(x) = b
                            .iter()
                            .find(|x| !self.arena.contains(x) || x.height() >= self.arena.height_bound())
                        {
                            return Err(Error::ForeignBlock(format!("node {x} is not in the arena")));
                        }
                    }
                }
                self.catalog = Some(cat.clone());
                self.steps = steps;
                Ok(())
            }
        }
    }

    pub fn extend_successor(&mut self, gamma: &Ordinal) -> Result<()> {
        match gamma.pred() {
            Some(p) if p == self.built => {
                if gamma > self.arena.height_bound() {
                    return Err(Error::BeyondTruncation {
                        level: gamma.to_string(),
                        bound: self.arena.height_bound().to_string(),
                    });
                }
                self.built = gamma.clone();
                Ok(())
            }
            _ => Err(Error::WrongLevelOrder(format!(
                "successor {gamma} after built level {}",
                self.built
            ))),
        }
    }

    /// Builds every level up to the limit `alpha`; intermediate levels follow
    /// the same rules and their traces are computed for every grid limit.
    pub fn extend_limit(
        &mut self,
        alpha: &Ordinal,
        cat: &TwoThinCatalog,
        steps: Option<usize>,
    ) -> Result<Arc<LimitTrace>> {
        if !alpha.is_limit() {
            return Err(Error::NotLimit(alpha.to_string()));
        }
        if *alpha <= self.built {
            return Err(Error::WrongLevelOrder(format!(
                "limit {alpha} not above built level {}",
                self.built
            )));
        }
        if alpha > self.arena.height_bound() {
            return Err(Error::BeyondTruncation {
                level: alpha.to_string(),
                bound: self.arena.height_bound().to_string(),
            });
        }
        self.set_catalog(cat, steps)?;
        for g in self.arena.grid_levels() {
            if g.is_limit() && g > self.built && g < *alpha {
                self.trace(&g)?;
            }
        }
        let tr = self.trace(alpha)?;
        self.built = alpha.clone();
        Ok(tr)
    }

    /// Builds all levels up to `target`.
    pub fn build_to(&mut self, target: &Ordinal, cat: &TwoThinCatalog, steps: Option<usize>) -> Result<()> {
        self.set_catalog(cat, steps)?;
        if *target <= self.built {
            return Ok(());
        }
        let (lam, m) = target.split_limit();
        if lam > self.built {
            self.extend_limit(&lam, cat, steps)?;
        }
        let (base, start) = self.built.split_limit();
        let from = if base == lam { start + 1 } else { 1 };
        for k in from..=m {
            self.extend_successor(&lam.add_nat(k))?;
        }
        Ok(())
    }

    fn check_node(&self, s: &Node) -> Result<()> {
        if !self.arena.contains(s) {
            return Err(Error::InvalidNode(format!("{s} is not an arena node")));
        }
        if s.height() > &self.built {
            return Err(Error::LevelNotBuilt(s.height().to_string()));
        }
        Ok(())
    }

    /// `c({u, v})` for distinct nodes.
    pub fn color(&self, u: &Node, v: &Node) -> Result<u8> {
        if u == v {
            return Err(Error::Precondition("c is defined on pairs of distinct nodes".into()));
        }
        if !u.comparable(v) {
            return Ok(1);
        }
        let (lo, hi) = if u.height() < v.height() { (u, v) } else { (v, u) };
        self.check_node(hi)?;
        self.c_at(hi, lo.height())
    }

    /// `c_s(x)` for `x <_S s`.
    pub fn c_s(&self, s: &Node, x: &Node) -> Result<u8> {
        if !x.is_below(s) {
            return Err(Error::Incomparable);
        }
        self.check_node(s)?;
        self.c_at(s, x.height())
    }

    fn pair_raw(&self, u: &Node, v: &Node) -> Result<u8> {
        if !u.comparable(v) || u == v {
            return Ok(1);
        }
        let (lo, hi) = if u.height() < v.height() { (u, v) } else { (v, u) };
        self.c_at(hi, lo.height())
    }

    fn c_at(&self, s: &Node, h: &Ordinal) -> Result<u8> {
        let key = (s.clone(), h.clone());
        if let Some(&v) = self.values.lock().expect("memo lock").get(&key) {
            return Ok(v);
        }
        let (lam, m) = s.height().split_limit();
        let v = if m > 0 {
            if *h >= lam {
                0
            } else {
                self.c_at(&s.restrict(&lam), h)?
            }
        } else {
            let tr = self.trace(s.height())?;
            let i = tr.index_of(s).ok_or_else(|| Error::InvalidNode(s.to_string()))?;
            self.limit_value(&tr, i, s, h)?
        };
        self.values.lock().expect("memo lock").insert(key, v);
        Ok(v)
    }

    fn limit_value(&self, tr: &LimitTrace, i: usize, s: &Node, h: &Ordinal) -> Result<u8> {
        let x = s.restrict(h);
        let top = tr.alpha(i + 1);
        if *h < top && !tr.in_f(i + 1, &x) {
            return self.c_at(&s.restrict(&top), h);
        }
        let mut k = i + 1;
        loop {
            if tr.in_x(k, &x) {
                return Ok(tr.parity[i]);
            }
            let hi = tr.alpha(k + 1);
            if tr.alpha(k) <= *h && *h < hi && !tr.in_f(k + 1, &x) {
                return self.c_at(&s.restrict(&hi), h);
            }
            k += 1;
        }
    }

    /// The trace of limit level `alpha`, computed on first use.
    pub fn trace(&self, alpha: &Ordinal) -> Result<Arc<LimitTrace>> {
        if let Some(t) = self.traces.lock().expect("trace lock").get(alpha) {
            return Ok(t.clone());
        }
        let t = Arc::new(self.compute_trace(alpha)?);
        self.traces.lock().expect("trace lock").insert(alpha.clone(), t.clone());
        Ok(t)
    }

    pub fn traces(&self) -> Vec<Arc<LimitTrace>> {
        self.traces.lock().expect("trace lock").values().cloned().collect()
    }

    fn compute_trace(&self, alpha: &Ordinal) -> Result<LimitTrace> {
        let nodes = self.arena.level_nodes(alpha)?;
        let empty = TwoThinCatalog::default();
        let cat = self.catalog.as_ref().unwrap_or(&empty);
        let mut restricted: Vec<Family<Node>> = Vec::new();
        let mut families = Vec::new();
        let mut entry_family = Vec::new();
        for (e, entry) in cat.entries.iter().enumerate() {
            let r = entry.family.restrict_below(alpha);
            if r.is_empty() {
                entry_family.push(None);
                continue;
            }
            match restricted.iter().position(|f| f.blocks() == r.blocks()) {
                Some(p) => entry_family.push(Some(p)),
                None => {
                    entry_family.push(Some(restricted.len()));
                    restricted.push(r);
                    families.push(e);
                }
            }
        }

        let top = restricted
            .iter()
            .flat_map(|f| f.blocks())
            .map(|b| max_rank(b).clone())
            .max();
        let data_rungs = match &top {
            None => 0,
            Some(top) => {
                let mut steps = 1;
                loop {
                    let l = build_ladder(alpha, &restricted, steps)?;
                    if let Some(k) = l.alphas.iter().position(|a| a > top) {
                        break k;
                    }
                    steps *= 2;
                }
            }
        };
        let required = nodes.len().max(restricted.len()).max(data_rungs);
        let steps = self.steps.unwrap_or(required);
        if steps < required {
            return Err(Error::InsufficientRungs {
                level: alpha.to_string(),
                steps,
                required,
                nodes: nodes.len(),
                families: restricted.len(),
                data_rungs,
            });
        }
        let ladder = build_ladder(alpha, &restricted, steps)?;
        let parity: Vec<u8> = nodes.iter().map(|s| (nodes[0].dset(s).len() % 2) as u8).collect();
        let unit_pairs: Vec<(usize, usize)> = (0..nodes.len())
            .flat_map(|i| (0..nodes.len()).map(move |j| (i, j)))
            .filter(|&(i, j)| i != j && nodes[i].dset(&nodes[j]).len() == 1)
            .collect();

        let mut rungs = Vec::with_capacity(steps);
        for k in 0..steps {
            let lo = &ladder.alphas[k];
            let hi = &ladder.alphas[k + 1];
            let next_f = &ladder.corrections[k + 1];
            let mut e: BTreeSet<Block<Node>> = BTreeSet::new();
            for b in restricted[..k.min(restricted.len())].iter().flat_map(|f| f.blocks()) {
                if e.contains(b) || !b.iter().all(|x| x.height() >= lo && x.height() < hi) || !b.is_disjoint(next_f) {
                    continue;
                }
                let (seq, n) = halves(b)?;
                for &(i, j) in unit_pairs.iter().filter(|&&(i, j)| i < k && j < k) {
                    if !seq[n - 1].is_below(&nodes[i]) || !seq[2 * n - 1].is_below(&nodes[j]) {
                        continue;
                    }
                    let u = nodes[i].restrict(hi);
                    let v = nodes[j].restrict(hi);
                    if !self.good_raw(&seq, n, &u, &v)? {
                        e.insert(b.clone());
                        break;
                    }
                }
            }
            let union: BTreeSet<Node> = e.iter().flatten().cloned().collect();
            let mut x = close(&union, &restricted[..k.min(restricted.len())]);
            x.extend(ladder.corrections[k].iter().cloned());
            rungs.push(Rung {
                k,
                e: e.into_iter().collect(),
                x,
            });
        }
        Ok(LimitTrace {
            level: alpha.clone(),
            nodes,
            families,
            entry_family,
            ladder,
            parity,
            rungs,
            steps,
            required,
            restricted,
        })
    }

    fn good_raw(&self, seq: &[Node], n: usize, u: &Node, v: &Node) -> Result<bool> {
        for i in 0..2u8 {
            let mut ok = true;
            for j in 0..n {
                if self.pair_raw(&seq[j], u)? != i || self.pair_raw(&seq[n + j], v)? != 1 - i {
                    ok = false;
                    break;
                }
            }
            if ok {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Whether `(a, u, v)` is c-good.
    pub fn c_good(&self, a: &Block<Node>, u: &Node, v: &Node) -> Result<bool> {
        let (seq, n) = halves(a)?;
        let glue = seq[n - 1].dset(&seq[n]);
        if glue.len() != 1 {
            return Err(Error::Precondition(
                "a(n−1), a(n) must differ at exactly one place".into(),
            ));
        }
        if u.dset(v) != glue {
            return Err(Error::Precondition("D(u, v) must equal {ht(s)}".into()));
        }
        if !seq[n - 1].is_below(u) {
            return Err(Error::Precondition("a(n−1) must lie below u".into()));
        }
        if !seq[2 * n - 1].is_below(v) {
            return Err(Error::Precondition("a(2n−1) must lie below v".into()));
        }
        self.check_node(u)?;
        self.check_node(v)?;
        self.good_raw(&seq, n, u, v)
    }

    /// Heights `h < ht(u)` with `c_u(u↾h) ≠ c_t(u↾h)`, for `u ≤_S t`.
    fn disagreement(&self, u: &Node, t: &Node) -> Result<Arc<BTreeSet<Ordinal>>> {
        if u == t {
            return Ok(Arc::new(BTreeSet::new()));
        }
        let key = (u.clone(), t.clone());
        if let Some(d) = self.disagreements.lock().expect("memo lock").get(&key) {
            return Ok(d.clone());
        }
        let beta = u.height();
        let (lam, m) = t.height().split_limit();
        let out = if m > 0 {
            if *beta >= lam {
                BTreeSet::new()
            } else {
                (*self.disagreement(u, &t.restrict(&lam))?).clone()
            }
        } else {
            let tr = self.trace(t.height())?;
            let i = tr.index_of(t).ok_or_else(|| Error::InvalidNode(t.to_string()))?;
            let below_t = |set: Option<&BTreeSet<Node>>| -> Vec<Ordinal> {
                set.into_iter()
                    .flatten()
                    .filter(|x| x.height() < beta && x.is_below(t))
                    .map(|x| x.height().clone())
                    .collect()
            };
            let mut exceptional: BTreeSet<Ordinal> = below_t(tr.f(i + 1)).into_iter().collect();
            let mut pieces = vec![(Ordinal::zero(), tr.alpha(i + 1))];
            let mut k = i + 1;
            while tr.alpha(k) < *beta || k <= tr.steps {
                exceptional.extend(below_t(tr.x(k)));
                exceptional.extend(below_t(tr.f(k + 1)));
                if tr.alpha(k) < *beta {
                    pieces.push((tr.alpha(k), tr.alpha(k + 1)));
                }
                k += 1;
            }
            let mut out = BTreeSet::new();
            for h in &exceptional {
                if self.c_at(u, h)? != self.c_at(t, h)? {
                    out.insert(h.clone());
                }
            }
            for (lo, hi) in pieces {
                let src = t.restrict(&hi);
                let sub = if hi <= *beta {
                    self.disagreement(&src, u)?
                } else {
                    self.disagreement(u, &src)?
                };
                out.extend(
                    sub.iter()
                        .filter(|h| **h >= lo && **h < hi && !exceptional.contains(h))
                        .cloned(),
                );
            }
            out
        };
        let out = Arc::new(out);
        self.disagreements.lock().expect("memo lock").insert(key, out.clone());
        Ok(out)
    }

    /// `{x <_S s : c(x, s) ≠ c(x, t)}` for `s ≤_S t`.
    pub fn coh_defect(&self, s: &Node, t: &Node) -> Result<DefectReport> {
        if s != t && !s.is_below(t) {
            return Err(Error::Incomparable);
        }
        self.check_node(t)?;
        let heights = self.disagreement(s, t)?;
        Ok(DefectReport {
            context: json!({"s": s, "t": t}),
            nodes: heights.iter().map(|h| s.restrict(h)).collect(),
            ..Default::default()
        })
    }

    /// Blocks `b` of catalog entry `entry` below `alpha` with
    /// `b(2n−1) <_S a(1)` that fail the two-constant conclusion for the pair.
    pub fn hom_audit(&self, entry: usize, alpha: &Ordinal, pair: (&Node, &Node)) -> Result<DefectReport> {
        let cat = self
            .catalog
            .as_ref()
            .ok_or_else(|| Error::Precondition("no catalog".into()))?;
        let e = cat
            .entries
            .get(entry)
            .ok_or_else(|| Error::Precondition(format!("no catalog entry {entry}")))?;
        let (a0, a1) = pair;
        if a0.height() != alpha || a1.height() != alpha || a0 >= a1 {
            return Err(Error::Precondition(
                "pair must be two level nodes in height order".into(),
            ));
        }
        if a0.dset(a1) != BTreeSet::from([e.s.height().clone()]) {
            return Err(Error::Precondition("D(a(0), a(1)) must equal {ht(s)}".into()));
        }
        self.check_node(a1)?;
        self.check_node(a0)?;
        let mut report = DefectReport {
            context: json!({"entry": entry, "alpha": alpha, "pair": [a0, a1]}),
            ..Default::default()
        };
        for b in e.family.restrict_below(alpha).blocks() {
            let (seq, n) = halves(b)?;
            if !seq[2 * n - 1].is_below(a1) {
                continue;
            }
            if let Some(j) = self.first_rect_failure(&seq, n, a0, a1)? {
                if report.first_failure.is_none() {
                    report.first_failure = Some(json!({"block": b, "j": j}));
                }
                report.blocks.push(b.clone());
            }
        }
        Ok(report)
    }

    fn first_rect_failure(&self, seq: &[Node], n: usize, a0: &Node, a1: &Node) -> Result<Option<usize>> {
        let first = self.pair_raw(&seq[0], a0)?;
        for j in 0..n {
            if self.pair_raw(&seq[j], a0)? != first {
                return Ok(Some(j));
            }
            if self.pair_raw(&seq[n + j], a1)? != 1 - first {
                return Ok(Some(n + j));
            }
        }
        Ok(None)
    }

    /// The rung cases that guarantee the (hom) conclusion for each block.
    pub fn hom_classify(
        &self,
        entry: usize,
        alpha: &Ordinal,
        pair: (&Node, &Node),
    ) -> Result<Vec<(Block<Node>, HomCase)>> {
        let cat = self
            .catalog
            .as_ref()
            .ok_or_else(|| Error::Precondition("no catalog".into()))?;
        let e = cat
            .entries
            .get(entry)
            .ok_or_else(|| Error::Precondition(format!("no catalog entry {entry}")))?;
        let (a0, a1) = pair;
        let blocks: Vec<Block<Node>> = e
            .family
            .restrict_below(alpha)
            .blocks()
            .iter()
            .filter(|b| b.last().is_some_and(|top| top.is_below(a1)))
            .cloned()
            .collect();
        if !alpha.is_limit() {
            return Ok(blocks.into_iter().map(|b| (b, HomCase::Unpredicted)).collect());
        }
        let tr = self.trace(alpha)?;
        let i = tr.index_of(a0).ok_or_else(|| Error::InvalidNode(a0.to_string()))?;
        let j = tr.index_of(a1).ok_or_else(|| Error::InvalidNode(a1.to_string()))?;
        let fam = tr.entry_family[entry].unwrap_or(0);
        let big_n = i.max(j).max(fam) + 1;
        let cut = tr.alpha(big_n);
        let mut out = Vec::new();
        for b in blocks {
            let top = max_rank(&b).clone();
            let case = if top < cut {
                HomCase::Inherited
            } else {
                let k = tr.window_of(&top);
                let meets = |s: Option<&BTreeSet<Node>>| s.is_some_and(|s| !s.is_disjoint(&b));
                if meets(tr.f(k)) || meets(tr.f(k + 1)) {
                    HomCase::Case1
                } else if meets(tr.x(k)) {
                    HomCase::Case2
                } else {
                    HomCase::Case3
                }
            };
            out.push((b, case));
        }
        Ok(out)
    }

    /// `∃i ∀j,k<n: c(a(j), b(k)) = i ∧ c(a(n+j), b(n+k)) = 1−i`.
    pub fn rect_pattern(&self, a: &Block<Node>, b: &Block<Node>, n: usize) -> Result<bool> {
        let sa: Vec<&Node> = a.iter().collect();
        let sb: Vec<&Node> = b.iter().collect();
        if sa.len() != 2 * n || sb.len() != 2 * n {
            return Err(Error::ArityMismatch {
                expected: 2 * n,
                got: sa.len().min(sb.len()),
            });
        }
        let first = self.pair_raw(sa[0], sb[0])?;
        for j in 0..n {
            for k in 0..n {
                if self.pair_raw(sa[j], sb[k])? != first || self.pair_raw(sa[n + j], sb[n + k])? != 1 - first {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// `(s, x, c_s(x))` over grid nodes and observed heights, in height order.
    pub fn dump(&self) -> Result<Vec<(Node, Node, u8)>> {
        let mut levels = self.arena.grid_levels();
        levels.push(self.arena.height_bound().clone());
        let mut out = Vec::new();
        for g in levels.into_iter().filter(|g| *g <= self.built) {
            for s in self.arena.level_nodes(&g)? {
                for h in self.arena.observed_levels_below(&g) {
                    let v = self.c_at(&s, &h)?;
                    out.push((s.clone(), s.restrict(&h), v));
                }
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HomCase {
    /// Below `α_N`: covered only by (hom) at a lower level.
    Inherited,
    /// Meets `F_k ∪ F_{k+1}`.
    Case1,
    /// Meets `X_k`.
    Case2,
    Case3,
    Unpredicted,
}

/// Per-rung containment `{x : ht(x) ≥ α_k, c_{s_i}(x) ≠ c_{s_i↾α_{k+1}}(x)} ⊆ X_k ∪ F_{k+1}`
/// and parity soundness, for one limit level.
pub fn structural_audit(state: &ColoringState, alpha: &Ordinal) -> Result<Certificate> {
    let tr = state.trace(alpha)?;
    let mut cert = Certificate::new(format!("coloring@{alpha}"));
    let mut bad = None;
    let mut checked = 0usize;
    let mut symbolic = 0usize;
    'outer: for (i, s) in tr.nodes.iter().enumerate() {
        for k in i..tr.steps {
            let lo = tr.alpha(k);
            let hi = tr.alpha(k + 1);
            let src = s.restrict(&hi);
            let diff: Vec<Ordinal> = match finite_interval(&lo, &hi) {
                Some(hs) => {
                    let mut d = Vec::new();
                    for h in hs {
                        checked += 1;
                        if state.c_at(s, &h)? != state.c_at(&src, &h)? {
                            d.push(h);
                        }
                    }
                    d
                }
                None => {
                    symbolic += 1;
                    state
                        .disagreement(&src, s)?
                        .iter()
                        .filter(|h| **h >= lo)
                        .cloned()
                        .collect()
                }
            };
            for h in diff {
                let x = s.restrict(&h);
                if !tr.in_x(k, &x) && !tr.in_f(k + 1, &x) {
                    bad = Some(json!({"i": i, "k": k, "x": x}));
                    break 'outer;
                }
            }
        }
    }
    cert.record(
        "coh_containment",
        bad.is_none(),
        bad.unwrap_or(json!({"points": checked, "symbolic_windows": symbolic})),
    );

    let mut bad = None;
    'par: for i in 0..tr.nodes.len() {
        for j in 0..tr.nodes.len() {
            if tr.nodes[i].dset(&tr.nodes[j]).len() == 1 && tr.parity[j] != 1 - tr.parity[i] {
                bad = Some(json!({"i": i, "j": j}));
                break 'par;
            }
        }
    }
    cert.record("parity", bad.is_none(), bad.unwrap_or(json!(null)));

    let cat = state.catalog().cloned().unwrap_or_default();
    let mut bad = None;
    let mut touched = 0usize;
    'xk: for (k, rung) in tr.rungs.iter().enumerate() {
        if rung.x.is_empty() {
            continue;
        }
        for (e, entry) in cat.entries.iter().enumerate() {
            if tr.entry_family[e].is_none() {
                continue;
            }
            let glue = BTreeSet::from([entry.s.height().clone()]);
            for b in entry.family.restrict_below(alpha).blocks() {
                if !b.is_subset(&rung.x) {
                    continue;
                }
                let (seq, n) = halves(b)?;
                for i in 0..k.min(tr.nodes.len()) {
                    for j in 0..k.min(tr.nodes.len()) {
                        let (u, v) = (&tr.nodes[i], &tr.nodes[j]);
                        if u.dset(v) != glue || !seq[n - 1].is_below(u) || !seq[2 * n - 1].is_below(v) {
                            continue;
                        }
                        touched += 1;
                        if !state.good_raw(&seq, n, u, v)? {
                            bad = Some(json!({"k": k, "block": b, "i": i, "j": j}));
                            break 'xk;
                        }
                    }
                }
            }
        }
    }
    cert.record(
        "x_blocks_good",
        bad.is_none(),
        bad.unwrap_or(json!({"checked": touched})),
    );
    Ok(cert)
}

/// (hom) at a limit level: for every entry and every split pair, the
/// defective blocks are all inherited from below `α_N`.
pub fn hom_level_audit(state: &ColoringState, alpha: &Ordinal) -> Result<Certificate> {
    let mut cert = Certificate::new(format!("hom@{alpha}"));
    let cat = state.catalog().cloned().unwrap_or_default();
    let nodes = state.arena().level_nodes(alpha)?;
    let mut bad = None;
    let mut defects = 0usize;
    let mut pairs = 0usize;
    'outer: for (e, entry) in cat.entries.iter().enumerate() {
        let glue = BTreeSet::from([entry.s.height().clone()]);
        for (p, a0) in nodes.iter().enumerate() {
            for a1 in &nodes[p + 1..] {
                if a0.dset(a1) != glue {
                    continue;
                }
                pairs += 1;
                let report = state.hom_audit(e, alpha, (a0, a1))?;
                if report.blocks.is_empty() {
                    continue;
                }
                defects += report.blocks.len();
                let cases: BTreeMap<Block<Node>, HomCase> =
                    state.hom_classify(e, alpha, (a0, a1))?.into_iter().collect();
                for b in &report.blocks {
                    let case = cases.get(b).copied().unwrap_or(HomCase::Unpredicted);
                    if alpha.is_limit() && case != HomCase::Inherited {
                        bad = Some(json!({"entry": e, "pair": [a0, a1], "block": b, "case": case}));
                        break 'outer;
                    }
                }
            }
        }
    }
    cert.record(
        "hom_defects_predicted",
        bad.is_none(),
        bad.unwrap_or(json!({"pairs": pairs, "defects": defects})),
    );
    Ok(cert)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExtractResult {
    pub selected: Vec<usize>,
    pub dropped: Vec<(usize, String)>,
    pub defects: Vec<DefectReport>,
    pub pattern_holds: bool,
    pub violation: Option<Value>,
}

/// Greedy selection of instances avoiding each other's defect sets.
pub fn homogeneous_extract(
    state: &ColoringState,
    s: &Node,
    n: usize,
    instances: &[Vec<Block<Node>>],
) -> Result<ExtractResult> {
    let unions: Vec<BTreeSet<Node>> = instances
        .iter()
        .map(|x| x.iter().flatten().cloned().collect())
        .collect();
    for (p, u) in unions.iter().enumerate() {
        if let Some(q) = unions[..p].iter().position(|v| !v.is_disjoint(u)) {
            return Err(Error::MalformedInstance(format!("instances {q} and {p} share nodes")));
        }
    }
    if let Some(m) = instances.first().map(|x| x.len()) {
        if instances.iter().any(|x| x.len() != m) {
            return Err(Error::MalformedInstance("instances must have a uniform size".into()));
        }
    }
    for b in instances.iter().flatten() {
        let seq: Vec<Node> = b.iter().cloned().collect();
        if seq.len() != 2 * n || !x_member(&seq, s, n)? {
            return Err(Error::ForeignBlock(format!("{b:?} is not in X_(s,n)")));
        }
        state.check_node(&seq[2 * n - 1])?;
    }

    let candidates: BTreeSet<Node> = unions.iter().flatten().cloned().collect();
    let mut defects = Vec::with_capacity(instances.len());
    for (p, x) in instances.iter().enumerate() {
        let mut f: BTreeSet<Node> = BTreeSet::new();
        let mut fprime: BTreeSet<Node> = BTreeSet::new();
        for a in x {
            let seq: Vec<Node> = a.iter().cloned().collect();
            let base = seq[0].height();
            let lower = seq[n].restrict(base);
            for y in &candidates {
                if y.is_below(&seq[0]) {
                    let c0 = state.c_at(&seq[0], y.height())?;
                    for top in &seq[1..n] {
                        if state.c_at(top, y.height())? != c0 {
                            f.insert(y.clone());
                        }
                    }
                }
                if y.is_below(&lower) {
                    let c0 = state.c_at(&lower, y.height())?;
                    for k in 0..n {
                        if state.c_at(&seq[n + k], y.height())? != c0 {
                            f.insert(y.clone());
                        }
                    }
                }
            }
            for (q, other) in instances.iter().enumerate() {
                if q == p {
                    continue;
                }
                for b in other {
                    let sb: Vec<Node> = b.iter().cloned().collect();
                    if sb.iter().any(|z| z.height() >= base) || !sb[2 * n - 1].is_below(&seq[2 * n - 1]) {
                        continue;
                    }
                    if state.first_rect_failure(&sb, n, &seq[0], &lower)?.is_some() {
                        fprime.extend(sb);
                    }
                }
            }
        }
        defects.push(DefectReport {
            context: json!({"instance": p}),
            nodes: f.union(&fprime).cloned().collect(),
            ..Default::default()
        });
    }

    let span = |u: &BTreeSet<Node>| {
        (
            u.first().map(|x| x.height().clone()),
            u.iter().map(|x| x.height()).max().cloned(),
        )
    };
    let mut selected: Vec<usize> = Vec::new();
    let mut dropped = Vec::new();
    for p in 0..instances.len() {
        let (lo, hi) = span(&unions[p]);
        let mut reason = None;
        for &q in &selected {
            let (qlo, qhi) = span(&unions[q]);
            if !(hi < qlo || qhi < lo) {
                reason = Some(format!("overlaps instance {q} in height"));
            } else if !unions[q].is_disjoint(&defects[p].nodes) || !unions[p].is_disjoint(&defects[q].nodes) {
                reason = Some(format!("meets the defect set of instance {q}"));
            }
            if reason.is_some() {
                break;
            }
        }
        match reason {
            Some(r) => dropped.push((p, r)),
            None => selected.push(p),
        }
    }

    let mut violation = None;
    'check: for &p in &selected {
        for &q in &selected {
            if p == q {
                continue;
            }
            for a in &instances[p] {
                for b in &instances[q] {
                    let (ta, tb) = (a.last().expect("nonempty"), b.last().expect("nonempty"));
                    if ta.is_below(tb) && !state.rect_pattern(a, b, n)? {
                        violation = Some(json!({"lower": p, "upper": q, "a": a, "b": b}));
                        break 'check;
                    }
                }
            }
        }
    }
    Ok(ExtractResult {
        selected,
        dropped,
        defects,
        pattern_holds: violation.is_none(),
        violation,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Eq, serde::Deserialize, Serialize)]
pub struct Phi0Instance {
    /// `(t_i, N_i)`.
    pub pairs: Vec<(Node, usize)>,
    /// `s_α`.
    pub nodes: Vec<Node>,
    /// `x^i_α`, indexed `[i][α]`.
    pub x: Vec<Vec<Vec<Block<Node>>>>,
}

/// First `α < β` (lexicographic) satisfying both clauses of `φ₀`.
pub fn phi0_audit(state: &ColoringState, inst: &Phi0Instance) -> Result<Option<(usize, usize)>> {
    if inst.x.len() != inst.pairs.len() {
        return Err(Error::MalformedInstance("one x-list per (t, N) pair".into()));
    }
    let len = inst.nodes.len();
    for (i, xs) in inst.x.iter().enumerate() {
        if xs.len() != len {
            return Err(Error::MalformedInstance(format!(
                "x-list {i} has {} entries, expected {len}",
                xs.len()
            )));
        }
        let (t, big_n) = &inst.pairs[i];
        let mut seen: BTreeSet<&Block<Node>> = BTreeSet::new();
        for b in xs.iter().flatten() {
            let seq: Vec<Node> = b.iter().cloned().collect();
            if seq.len() != 2 * big_n || !x_member(&seq, t, *big_n)? {
                return Err(Error::MalformedInstance(format!(
                    "{b:?} is not in X_(t,N) for pair {i}"
                )));
            }
            if !seen.insert(b) {
                return Err(Error::MalformedInstance(format!(
                    "x-lists of pair {i} are not disjoint"
                )));
            }
        }
    }
    let distinct: BTreeSet<&Node> = inst.nodes.iter().collect();
    if distinct.len() != len {
        return Err(Error::MalformedInstance("s_α must be pairwise distinct".into()));
    }
    for alpha in 0..len {
        for beta in alpha + 1..len {
            if !inst.nodes[alpha].is_below(&inst.nodes[beta]) {
                continue;
            }
            let mut ok = true;
            'pairs: for (i, (_, big_n)) in inst.pairs.iter().enumerate() {
                for a in &inst.x[i][alpha] {
                    for b in &inst.x[i][beta] {
                        if !state.rect_pattern(a, b, *big_n)? {
                            ok = false;
                            break 'pairs;
                        }
                    }
                }
            }
            if ok {
                return Ok(Some((alpha, beta)));
            }
        }
    }
    Ok(None)
}

/// Whether `p ∪ {a}` is a condition of `Q_𝒜` for the family of `(s, n)`.
pub fn q_compatible(
    state: &ColoringState,
    s: &Node,
    n: usize,
    fam: &Family<Node>,
    p: &[Block<Node>],
    a: &Block<Node>,
) -> Result<bool> {
    let mut all: Vec<&Block<Node>> = p.iter().collect();
    all.push(a);
    for b in &all {
        let seq: Vec<Node> = b.iter().cloned().collect();
        if !fam.contains_block(b) || seq.len() != 2 * n || !x_member(&seq, s, n)? {
            return Err(Error::ForeignBlock(format!("{b:?}")));
        }
    }
    for x in &all {
        for y in &all {
            let (tx, ty) = (x.last().expect("nonempty"), y.last().expect("nonempty"));
            if tx.is_below(ty) && !state.rect_pattern(x, y, n)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
