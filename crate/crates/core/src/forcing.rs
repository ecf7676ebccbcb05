//! The poset of finite partial maps from successor restrictions to 2, the
//! generic-family extraction, and the explicit dense-set extensions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::certificate::Certificate;
use crate::closure::{close, max_rank, min_rank, Block, Family, Flavor, Ground};
use crate::error::{Error, Result};
use crate::ordinal::Ordinal;

/// A successor restriction `𝒜 ∩ [max(a)+1]^{<ω}`, compared extensionally.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RestrictionKey<G: Ground> {
    blocks: Vec<Block<G>>,
    digest: String,
}

impl<G: Ground> RestrictionKey<G> {
    fn new(mut blocks: Vec<Block<G>>) -> Self {
        blocks.sort();
        let bytes = serde_json::to_vec(&blocks).expect("blocks serialize");
        let digest = Sha256::digest(&bytes)
            .iter()
            .take(8)
            .map(|b| format!("{b:02x}"))
            .collect();
        RestrictionKey { blocks, digest }
    }

    pub fn blocks(&self) -> &[Block<G>] {
        &self.blocks
    }

    /// The designated block `max(𝒜)`.
    pub fn max_block(&self) -> &Block<G> {
        self.blocks
            .iter()
            .max_by(|a, b| max_rank(a).cmp(max_rank(b)))
            .expect("successor restrictions are nonempty")
    }

    pub fn digest(&self) -> &str {
        &self.digest
    }
}

impl<G: Ground> fmt::Debug for RestrictionKey<G> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "key:{}", self.digest)
    }
}

impl<G: Ground> fmt::Display for RestrictionKey<G> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.digest)
    }
}

impl<G: Ground> Serialize for RestrictionKey<G> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        json!({"digest": self.digest, "blocks": self.blocks}).serialize(serializer)
    }
}

pub fn succ_key<G: Ground>(fam: &Family<G>, a: &Block<G>) -> Result<RestrictionKey<G>> {
    if !fam.contains_block(a) {
        return Err(Error::BlockNotInFamily);
    }
    Ok(RestrictionKey::new(fam.restrict_upto(max_rank(a)).blocks().to_vec()))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Condition<G: Ground> {
    assignments: BTreeMap<RestrictionKey<G>, u8>,
}

impl<G: Ground> Default for Condition<G> {
    fn default() -> Self {
        Condition {
            assignments: BTreeMap::new(),
        }
    }
}

impl<G: Ground> Condition<G> {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn get(&self, key: &RestrictionKey<G>) -> Option<u8> {
        self.assignments.get(key).copied()
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = &RestrictionKey<G>> {
        self.assignments.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&RestrictionKey<G>, u8)> {
        self.assignments.iter().map(|(k, v)| (k, *v))
    }

    /// `self ≤ other` in the poset: `self` extends `other`.
    pub fn extends(&self, other: &Condition<G>) -> bool {
        other.iter().all(|(k, v)| self.get(k) == Some(v))
    }
}

impl<G: Ground> Serialize for Condition<G> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.assignments.len()))?;
        for (k, v) in &self.assignments {
            seq.serialize_element(&json!({"key": k.digest, "max_block": k.max_block(), "value": v}))?;
        }
        seq.end()
    }
}

pub fn extend_condition<G: Ground>(
    p: &Condition<G>,
    adds: impl IntoIterator<Item = (RestrictionKey<G>, u8)>,
) -> Result<Condition<G>> {
    let mut q = p.clone();
    for (k, v) in adds {
        match q.assignments.get(&k) {
            Some(&old) if old != v => return Err(Error::IncompatibleExtension(k.digest.clone())),
            Some(_) => {}
            None => {
                q.assignments.insert(k, v);
            }
        }
    }
    Ok(q)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[serde(bound = "G: Ground")]
pub enum DenseRequest<G: Ground> {
    Hit {
        family: usize,
        block: Block<G>,
    },
    Protect {
        a: BTreeSet<G>,
        families: Vec<usize>,
        #[serde(default)]
        horizon: Option<usize>,
    },
    Free {
        #[serde(default)]
        families: Vec<usize>,
        #[serde(default = "one")]
        count: usize,
    },
}

fn one() -> usize {
    1
}

/// A finite chain of conditions standing in for a generic filter.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(bound = "G: Ground")]
pub struct FilterSim<G: Ground> {
    pub chain: Vec<Condition<G>>,
    pub log: Vec<String>,
}

impl<G: Ground> Default for FilterSim<G> {
    fn default() -> Self {
        FilterSim {
            chain: Vec::new(),
            log: Vec::new(),
        }
    }
}

impl<G: Ground> FilterSim<G> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn top(&self) -> Condition<G> {
        self.chain.last().cloned().unwrap_or_default()
    }

    pub fn push(&mut self, q: Condition<G>, note: impl Into<String>) -> Result<()> {
        if !q.extends(&self.top()) {
            return Err(Error::Precondition("filter chain must be increasing".into()));
        }
        self.chain.push(q);
        self.log.push(note.into());
        Ok(())
    }

    /// Whether some condition assigns `value` to `key`.
    pub fn decides(&self, key: &RestrictionKey<G>, value: u8) -> bool {
        self.chain.iter().any(|p| p.get(key) == Some(value))
    }
}

/// `G(𝒜)`: the blocks whose successor key some condition marks 1.
pub fn extract_family<G: Ground>(g: &FilterSim<G>, fam: &Family<G>) -> Family<G> {
    fam.filtered(|b| {
        let key = succ_key(fam, b).expect("block of its own family");
        g.decides(&key, 1)
    })
}

/// Extends `p` so that every filter through the result keeps
/// `cl(a, G(fprime))` inside the returned bound.
pub fn protect_closure<G: Ground>(
    p: &Condition<G>,
    a: &BTreeSet<G>,
    fprime: &[Family<G>],
    horizon: Option<usize>,
) -> Result<(Condition<G>, BTreeSet<G>)> {
    let mut bound = a.clone();
    for k in p.keys() {
        bound.extend(k.max_block().iter().cloned());
    }
    if let Some(h) = horizon {
        if bound.len() > h {
            return Err(Error::HorizonExceeded {
                size: bound.len(),
                horizon: h,
            });
        }
    }
    let mut adds = Vec::new();
    for fam in fprime {
        for b in fam.blocks() {
            if !b.is_subset(&bound) && !b.is_disjoint(&bound) {
                adds.push((succ_key(fam, b)?, 0));
            }
        }
    }
    let q = extend_condition(p, adds).map_err(|e| Error::Precondition(format!("protection clashed with p: {e}")))?;
    Ok((q, bound))
}

pub fn hit_block<G: Ground>(p: &Condition<G>, fam: &Family<G>, a: &Block<G>) -> Result<Condition<G>> {
    let key = succ_key(fam, a)?;
    if p.get(&key) == Some(0) {
        return Err(Error::BlockExcluded(key.digest.clone()));
    }
    extend_condition(p, [(key, 1)])
}

/// Every successor key of the given families, in canonical order.
pub fn family_keys<G: Ground>(fams: &[&Family<G>]) -> Vec<RestrictionKey<G>> {
    let keys: BTreeSet<RestrictionKey<G>> = fams
        .iter()
        .flat_map(|f| f.blocks().iter().map(move |b| succ_key(f, b).expect("own block")))
        .collect();
    keys.into_iter().collect()
}

/// Assigns random bits to up to `count` keys outside `dom(p)`.
pub fn free_extension<G: Ground, R: Rng>(
    p: &Condition<G>,
    keys: &[RestrictionKey<G>],
    count: usize,
    rng: &mut R,
) -> Condition<G> {
    let mut open: Vec<&RestrictionKey<G>> = keys.iter().filter(|k| p.get(k).is_none()).collect();
    open.shuffle(rng);
    let adds = open.into_iter().take(count).map(|k| (k.clone(), rng.gen_range(0..2u8)));
    extend_condition(p, adds).expect("fresh keys never clash")
}

pub fn run_generic<G: Ground>(catalog: &[Family<G>], requests: &[DenseRequest<G>], seed: u64) -> Result<FilterSim<G>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sim = FilterSim::new();
    let fam_at = |index: usize, i: usize| {
        catalog.get(i).ok_or_else(|| Error::RequestFailed {
            index,
            reason: format!("no family {i}"),
        })
    };
    for (index, req) in requests.iter().enumerate() {
        let p = sim.top();
        let fail = |e: Error| Error::RequestFailed {
            index,
            reason: e.to_string(),
        };
        let (q, note) = match req {
            DenseRequest::Hit { family, block } => {
                let q = hit_block(&p, fam_at(index, *family)?, block).map_err(fail)?;
                (q, format!("hit family {family}"))
            }
            DenseRequest::Protect { a, families, horizon } => {
                let fams = families
                    .iter()
                    .map(|&i| fam_at(index, i).cloned())
                    .collect::<Result<Vec<_>>>()?;
                let (q, bound) = protect_closure(&p, a, &fams, *horizon).map_err(fail)?;
                (q, format!("protect bound of size {}", bound.len()))
            }
            DenseRequest::Free { families, count } => {
                let fams: Vec<&Family<G>> = if families.is_empty() {
                    catalog.iter().collect()
                } else {
                    families.iter().map(|&i| fam_at(index, i)).collect::<Result<_>>()?
                };
                let q = free_extension(&p, &family_keys(&fams), *count, &mut rng);
                let note = format!("free extension by {}", q.len() - p.len());
                (q, note)
            }
        };
        sim.push(q, note)?;
    }
    Ok(sim)
}

pub struct CloseSample<'a, G: Ground> {
    pub a: &'a BTreeSet<G>,
    pub families: &'a [usize],
    pub horizon: Option<usize>,
}

/// Finite-scale audit of the thin-family axioms over a catalog.
pub fn family_audit<G: Ground>(
    catalog: &[Family<G>],
    alpha: &Ordinal,
    targets: &[Family<G>],
    samples: &[CloseSample<'_, G>],
    filter: &FilterSim<G>,
    large: usize,
) -> Certificate {
    let mut cert = Certificate::new("family");

    let restrictions: BTreeSet<Vec<Block<G>>> = catalog
        .iter()
        .map(|f| f.restrict_below(alpha).blocks().to_vec())
        .collect();
    cert.record(
        "k1_restrictions",
        true,
        json!({"alpha": alpha, "count": restrictions.len()}),
    );

    let mut overlaps = Vec::new();
    let mut ok = true;
    for (t, target) in targets.iter().enumerate() {
        let best = catalog
            .iter()
            .enumerate()
            .map(|(i, f)| (target.blocks().iter().filter(|b| f.contains_block(b)).count(), i))
            .max_by_key(|&(n, i)| (n, std::cmp::Reverse(i)));
        let (size, family) = best.unwrap_or((0, usize::MAX));
        ok &= size >= large.min(target.len());
        overlaps.push(json!({"target": t, "best": size, "family": (family != usize::MAX).then_some(family)}));
    }
    cert.record("k2_overlap", ok, json!(overlaps));

    let mut bounds = Vec::new();
    let mut ok = true;
    for (i, s) in samples.iter().enumerate() {
        let fams: Vec<Family<G>> = s.families.iter().filter_map(|&j| catalog.get(j).cloned()).collect();
        let valid = fams.len() == s.families.len();
        let size = close(s.a, &fams).len();
        let within = valid && s.horizon.is_none_or(|h| size <= h);
        ok &= within;
        bounds.push(json!({"sample": i, "closure_size": size, "horizon": s.horizon, "pass": within}));
    }
    cert.record("k3_closure", ok, json!(bounds));

    let mut bad = None;
    'det: for (i, f) in catalog.iter().enumerate() {
        for (j, g) in catalog.iter().enumerate().skip(i + 1) {
            if f.restrict_below(alpha).blocks() != g.restrict_below(alpha).blocks() {
                continue;
            }
            let ef = extract_family(filter, f).restrict_below(alpha);
            let eg = extract_family(filter, g).restrict_below(alpha);
            if ef.blocks() != eg.blocks() {
                bad = Some(json!({"families": [i, j], "left": ef.blocks(), "right": eg.blocks()}));
                break 'det;
            }
        }
    }
    cert.record("k1_determination", bad.is_none(), bad.unwrap_or(json!(null)));
    cert
}

/// One block per window `[C(i), C(i+1))`: among blocks below `C(i+1)` but
/// not below `C(i)`, the one with the least minimum.
pub fn club_thin<G: Ground>(fam: &Family<G>, club: &[Ordinal]) -> Result<Family<G>> {
    if club.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition("club must be strictly increasing".into()));
    }
    let mut picked = Vec::new();
    for w in club.windows(2) {
        let pick = fam
            .blocks()
            .iter()
            .filter(|b| max_rank(b) < &w[1] && max_rank(b) >= &w[0])
            .min_by(|a, b| min_rank(a).cmp(min_rank(b)).then_with(|| a.cmp(b)));
        if let Some(b) = pick {
            picked.push(b.clone());
        }
    }
    Ok(Family::unchecked(fam.flavor(), fam.root().cloned(), picked))
}

/// `a + 𝒜 = {a ∪ b : b ∈ 𝒜}` as a delta-system with root `a`.
pub fn add_root<G: Ground>(a: &Block<G>, fam: &Family<G>) -> Result<Family<G>> {
    if let Some(b) = fam.blocks().iter().find(|b| !b.is_disjoint(a)) {
        return Err(Error::InvalidFamily(format!("root meets block {b:?}")));
    }
    let blocks = fam.blocks().iter().map(|b| b.union(a).cloned().collect());
    let out = Family::unchecked(Flavor::DeltaSystem, Some(a.clone()), blocks);
    out.validate()?;
    Ok(out)
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

    #[test]
    fn succ_key_examples() {
        let a = fam(&[&[0, 1], &[2, 3], &[8, 9]]);
        let k = succ_key(&a, &set(&[2, 3])).unwrap();
        assert_eq!(k.blocks(), &[set(&[0, 1]), set(&[2, 3])]);
        assert_eq!(k.max_block(), &set(&[2, 3]));
        assert_eq!(succ_key(&a, &set(&[0, 1])).unwrap().blocks(), &[set(&[0, 1])]);
        let b = fam(&[&[0, 1], &[5, 6]]);
        assert_eq!(
            succ_key(&a, &set(&[0, 1])).unwrap(),
            succ_key(&b, &set(&[0, 1])).unwrap()
        );
        assert!(matches!(succ_key(&a, &set(&[4])), Err(Error::BlockNotInFamily)));
    }

    #[test]
    fn extend_condition_examples() {
        let k = succ_key(&fam(&[&[0, 1]]), &set(&[0, 1])).unwrap();
        let p = extend_condition(&Condition::empty(), [(k.clone(), 1)]).unwrap();
        assert_eq!(p.get(&k), Some(1));
        assert_eq!(extend_condition(&p, [(k.clone(), 1)]).unwrap(), p);
        assert!(matches!(
            extend_condition(&p, [(k, 0)]),
            Err(Error::IncompatibleExtension(_))
        ));
    }

    #[test]
    fn extract_family_examples() {
        let a = fam(&[&[0, 1], &[2, 3], &[8, 9]]);
        let mut g = FilterSim::new();
        assert!(extract_family(&g, &a).is_empty());
        let k = succ_key(&a, &set(&[2, 3])).unwrap();
        g.push(extend_condition(&Condition::empty(), [(k, 1)]).unwrap(), "k")
            .unwrap();
        assert_eq!(extract_family(&g, &a).blocks(), &[set(&[2, 3])]);
        let all = family_keys(&[&a]).into_iter().map(|k| (k, 1));
        let mut g = FilterSim::new();
        g.push(extend_condition(&Condition::empty(), all).unwrap(), "all")
            .unwrap();
        assert_eq!(extract_family(&g, &a), a);
    }

    #[test]
    fn protect_closure_examples() {
        let fp = [fam(&[&[0, 1], &[4, 7]])];
        let (q, bound) = protect_closure(&Condition::empty(), &set(&[1]), &fp, None).unwrap();
        assert_eq!(bound, set(&[1]));
        let k = succ_key(&fp[0], &set(&[0, 1])).unwrap();
        assert_eq!(q.get(&k), Some(0));
        assert_eq!(q.len(), 1);

        let (q, bound) = protect_closure(&Condition::empty(), &set(&[]), &fp, None).unwrap();
        assert!(q.is_empty() && bound.is_empty());

        let (q, _) = protect_closure(&Condition::empty(), &set(&[0, 1]), &fp, None).unwrap();
        assert!(q.is_empty());

        assert!(matches!(
            protect_closure(&Condition::empty(), &set(&[0, 1, 2]), &fp, Some(2)),
            Err(Error::HorizonExceeded { size: 3, horizon: 2 })
        ));
    }

    #[test]
    fn hit_block_examples() {
        let b = fam(&[&[0, 1], &[8, 9]]);
        let p = hit_block(&Condition::empty(), &b, &set(&[8, 9])).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(hit_block(&p, &b, &set(&[8, 9])).unwrap(), p);
        let k = succ_key(&b, &set(&[8, 9])).unwrap();
        let z = extend_condition(&Condition::empty(), [(k, 0)]).unwrap();
        assert!(matches!(hit_block(&z, &b, &set(&[8, 9])), Err(Error::BlockExcluded(_))));
    }

    #[test]
    fn run_generic_examples() {
        let cat = vec![fam(&[&[0, 1], &[8, 9]]), fam(&[&[0, 1], &[4, 7]])];
        let reqs = vec![
            DenseRequest::Hit {
                family: 0,
                block: set(&[8, 9]),
            },
            DenseRequest::Protect {
                a: set(&[1]),
                families: vec![1],
                horizon: None,
            },
        ];
        let g = run_generic(&cat, &reqs, 7).unwrap();
        assert_eq!(g.chain.len(), 2);
        assert!(run_generic::<Ordinal>(&cat, &[], 7).unwrap().chain.is_empty());

        let clash = vec![
            DenseRequest::Protect {
                a: set(&[1]),
                families: vec![0],
                horizon: None,
            },
            DenseRequest::Hit {
                family: 0,
                block: set(&[0, 1]),
            },
        ];
        assert!(matches!(
            run_generic(&cat, &clash, 7),
            Err(Error::RequestFailed { index: 1, .. })
        ));
    }

    #[test]
    fn run_generic_is_deterministic() {
        let cat = vec![fam(&[&[0, 1], &[2, 3], &[5, 6], &[8, 9]])];
        let reqs = vec![DenseRequest::Free {
            families: vec![],
            count: 3,
        }];
        assert_eq!(
            run_generic(&cat, &reqs, 11).unwrap(),
            run_generic(&cat, &reqs, 11).unwrap()
        );
    }

    #[test]
    fn family_audit_examples() {
        let cat = vec![
            fam(&[&[0, 1], &[2, 3], &[6, 7]]),
            fam(&[&[0, 1], &[2, 3], &[8, 9]]),
            fam(&[&[0, 1], &[2, 3]]),
        ];
        let g = FilterSim::new();
        let chained = vec![fam(&[&[0, 1], &[4, 7]]), fam(&[&[1, 2]])];
        let a = set(&[0]);
        let samples = [CloseSample {
            a: &a,
            families: &[0, 1],
            horizon: Some(3),
        }];
        let cert = family_audit(&cat, &Ordinal::nat(5), &[fam(&[&[2, 3], &[8, 9]])], &[], &g, 2);
        assert_eq!(cert.clause("k1_restrictions").unwrap().witness["count"], 1);
        assert_eq!(cert.clause("k2_overlap").unwrap().witness[0]["best"], 2);
        assert!(cert.pass());
        let cert = family_audit(&chained, &Ordinal::nat(5), &[], &samples, &g, 1);
        assert_eq!(cert.clause("k3_closure").unwrap().witness[0]["closure_size"], 3);
        assert!(cert.pass());
    }

    #[test]
    fn club_thin_examples() {
        let a = fam(&[&[1, 2], &[4, 7], &[8, 9]]);
        let c: Vec<Ordinal> = [0, 3, 8, 10].iter().map(|&x| Ordinal::nat(x)).collect();
        assert_eq!(club_thin(&a, &c).unwrap(), a);
        let d = Family::disjoint([set(&[0, 5]), set(&[1, 2])]).unwrap();
        let got = club_thin(&d, &[Ordinal::nat(0), Ordinal::nat(6)]).unwrap();
        assert_eq!(got.blocks(), &[set(&[0, 5])]);
        assert!(club_thin(&a, &[Ordinal::nat(0), Ordinal::nat(1)]).unwrap().is_empty());
    }

    #[test]
    fn add_root_examples() {
        let a = fam(&[&[0, 1], &[2, 3]]);
        let r = add_root(&set(&[9]), &a).unwrap();
        assert_eq!(r.root(), Some(&set(&[9])));
        assert_eq!(r.blocks(), &[set(&[0, 1, 9]), set(&[2, 3, 9])]);
        let e = add_root(&set(&[]), &a).unwrap();
        assert_eq!(e.blocks(), a.blocks());
        assert_eq!(e.flavor(), Flavor::DeltaSystem);
        assert!(add_root(&set(&[0]), &fam(&[&[0, 1]])).is_err());
    }
}
