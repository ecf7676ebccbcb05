//! Acceptance gate: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::process::Command as Proc;
use std::time::{Duration, Instant};

use common::*;
use kurepa::arena::{Arena, Node};
use kurepa::closure::{close, closure_classes, is_closed, Block, Family};
use kurepa::coloring::{
    hom_level_audit, homogeneous_extract, init_coloring, phi0_audit, structural_audit, ColoringState, HomCase,
    Phi0Instance,
};
use kurepa::forcing::{
    extract_family, family_keys, free_extension, hit_block, protect_closure, succ_key, Condition, FilterSim,
};
use kurepa::ladder::{audit_ladder, build_ladder};
use kurepa::ordinal::Ordinal;
use kurepa::pr1::{induce_pi, Pr1Instance};
use kurepa::scenario::{coloring_stage, family_stage, pr1_stage, two_thin_stage, Scenario};
use kurepa::two_thin::TwoThinCatalog;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PLANTED: &str = include_str!("../examples/planted.json");

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn closure_suite() -> Outcome {
    let mut oracle_runs = 0;
    for seed in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = rng.gen_range(1..=12u64);
        let ground: Vec<Ordinal> = (0..g).map(o).collect();
        let fams: Vec<Family<Ordinal>> = (0..rng.gen_range(0..=4))
            .map(|_| {
                if rng.gen_bool(0.5) {
                    random_family(&mut rng, &ground, 4)
                } else {
                    random_disjoint(&mut rng, &ground, 4)
                }
            })
            .collect();
        let a: BTreeSet<Ordinal> = ground.iter().filter(|_| rng.gen_bool(0.3)).cloned().collect();
        let cl = close(&a, &fams);
        let by_points: BTreeSet<Ordinal> = a
            .iter()
            .flat_map(|x| close(&BTreeSet::from([x.clone()]), &fams))
            .collect();
        check(cl == by_points, || format!("seed {seed}: union over singletons"))?;
        check(close(&cl, &fams) == cl, || format!("seed {seed}: idempotence"))?;
        check(is_closed(&cl, &fams) && is_closed_oracle(&cl, &fams), || {
            format!("seed {seed}: closedness")
        })?;
        let all: BTreeSet<Ordinal> = ground.iter().cloned().collect();
        let comp: BTreeSet<Ordinal> = all.difference(&cl).cloned().collect();
        check(is_closed_oracle(&comp, &fams), || format!("seed {seed}: complement"))?;
        let b: BTreeSet<Ordinal> = ground.iter().filter(|_| rng.gen_bool(0.3)).cloned().collect();
        let union: BTreeSet<Ordinal> = cl.union(&close(&b, &fams)).cloned().collect();
        check(is_closed_oracle(&union, &fams), || format!("seed {seed}: union"))?;
        let classes = closure_classes(&all, &fams).map_err(|e| format!("seed {seed}: {e}"))?;
        let mut seen = BTreeSet::new();
        for c in &classes {
            check(!c.is_empty() && c.iter().all(|x| seen.insert(x.clone())), || {
                format!("seed {seed}: classes overlap")
            })?;
        }
        check(seen == all, || format!("seed {seed}: classes do not cover"))?;
        if g <= 10 {
            oracle_runs += 1;
            check(brute_closure(&a, &ground, &fams) == cl, || {
                format!("seed {seed}: brute-force oracle")
            })?;
        }
    }
    Ok(format!("1000 scenarios, {oracle_runs} against brute force"))
}

fn ladder_suite() -> Outcome {
    let worked = vec![
        Family::non_overlapping([[o(1), o(2)].into(), [o(4), o(7)].into()]).unwrap(),
        Family::non_overlapping([[o(3), o(4)].into(), [o(8), o(9)].into()]).unwrap(),
    ];
    let res = build_ladder(&Ordinal::omega(), &worked, 3).map_err(|e| e.to_string())?;
    let alphas = serde_json::to_string(&res.alphas).unwrap();
    let f: Vec<String> = res
        .corrections
        .iter()
        .map(|f| serde_json::to_string(f).unwrap())
        .collect();
    check(alphas == "[0,1,3,8]", || format!("worked example alphas {alphas}"))?;
    check(f[1] == "[1,2]" && f[2] == "[3,4,7]", || {
        format!("worked example corrections {f:?}")
    })?;

    let alphas = [Ordinal::omega(), Ordinal::omega_times(2), Ordinal::omega_pow(2)];
    for seed in 0..500u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alpha = alphas.choose(&mut rng).unwrap().clone();
        let pts = points_below(&alpha);
        let mut budget = 12;
        let mut fams = Vec::new();
        for _ in 0..rng.gen_range(0..=4) {
            let f = random_family(&mut rng, &pts, budget.min(4));
            budget -= f.len();
            fams.push(f);
        }
        let steps = rng.gen_range(0..=6);
        let res = build_ladder(&alpha, &fams, steps).map_err(|e| format!("seed {seed}: {e}"))?;
        let cert = audit_ladder(&res, &alpha, &fams);
        check(cert.pass(), || format!("seed {seed}: failing {:?}", cert.failing()))?;
    }
    Ok("500 scenarios and the worked example".into())
}

fn all_decided(p: &Condition<Ordinal>, fams: &[Family<Ordinal>], rng: &mut ChaCha8Rng) -> FilterSim<Ordinal> {
    let refs: Vec<&Family<Ordinal>> = fams.iter().collect();
    let keys = family_keys(&refs);
    let q = free_extension(p, &keys, keys.len(), rng);
    let mut g = FilterSim::new();
    g.push(p.clone(), "p").unwrap();
    g.push(q, "q").unwrap();
    g
}

fn forcing_suite() -> Outcome {
    let ground: Vec<Ordinal> = (0..16).map(o).collect();
    let mut extensions = 0;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fams: Vec<Family<Ordinal>> = (0..rng.gen_range(1..=4))
            .map(|_| random_family(&mut rng, &ground, 5))
            .collect();
        let refs: Vec<&Family<Ordinal>> = fams.iter().collect();
        let keys = family_keys(&refs);
        let p = free_extension(&Condition::empty(), &keys, rng.gen_range(0..3), &mut rng);
        let a: BTreeSet<Ordinal> = ground.iter().filter(|_| rng.gen_bool(0.2)).cloned().collect();
        let (q, bound) = protect_closure(&p, &a, &fams, None).map_err(|e| format!("seed {seed}: {e}"))?;
        let hit = fams[0]
            .blocks()
            .iter()
            .find(|b| q.get(&succ_key(&fams[0], b).unwrap()).is_none())
            .cloned();
        let r = match &hit {
            Some(b) => hit_block(&q, &fams[0], b).map_err(|e| format!("seed {seed}: {e}"))?,
            None => q.clone(),
        };
        for _ in 0..500 {
            extensions += 1;
            let g = all_decided(&r, &fams, &mut rng);
            let generic: Vec<Family<Ordinal>> = fams.iter().map(|f| extract_family(&g, f)).collect();
            let cl = close(&a, &generic);
            check(cl.is_subset(&bound), || {
                format!("seed {seed}: closure escaped the bound")
            })?;
            if let Some(b) = &hit {
                check(generic[0].contains_block(b), || format!("seed {seed}: hit block lost"))?;
            }
        }
    }

    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let base = random_family(&mut rng, &ground[..8], 4);
        let cut = o(8);
        let tail_a = random_family(&mut rng, &ground[8..], 3);
        let tail_b = random_family(&mut rng, &ground[8..], 3);
        let join =
            |t: &Family<Ordinal>| Family::non_overlapping(base.blocks().iter().chain(t.blocks()).cloned()).unwrap();
        let (fa, fb) = (join(&tail_a), join(&tail_b));
        let fams = vec![fa.clone(), fb.clone()];
        let g = all_decided(&Condition::empty(), &fams, &mut rng);
        let ea = extract_family(&g, &fa).restrict_below(&cut);
        let eb = extract_family(&g, &fb).restrict_below(&cut);
        check(ea.blocks() == eb.blocks(), || {
            format!("catalog {seed}: shared restriction decided differently")
        })?;
        for b in base.blocks() {
            check(succ_key(&fa, b).unwrap() == succ_key(&fb, b).unwrap(), || {
                format!("catalog {seed}: keys differ")
            })?;
        }
    }
    Ok(format!(
        "{extensions} adversarial extensions, 200 determination catalogs"
    ))
}

fn audit_levels(
    st: &ColoringState,
    cat: &TwoThinCatalog,
    seed: u64,
    cases: &mut BTreeMap<HomCase, usize>,
) -> Result<usize, String> {
    let mut levels = 0;
    for tr in st.traces() {
        levels += 1;
        let s = structural_audit(st, &tr.level).map_err(|e| format!("seed {seed}: {e}"))?;
        check(s.pass(), || {
            format!("seed {seed} level {}: {:?}", tr.level, s.failing())
        })?;
        let h = hom_level_audit(st, &tr.level).map_err(|e| format!("seed {seed}: {e}"))?;
        check(h.pass(), || {
            format!(
                "seed {seed} level {}: {:?}",
                tr.level,
                h.clause("hom_defects_predicted")
            )
        })?;
        for i in 0..tr.nodes.len() {
            for j in 0..tr.nodes.len() {
                if tr.nodes[i].dset(&tr.nodes[j]).len() == 1 {
                    check(tr.parity[j] == 1 - tr.parity[i], || {
                        format!("seed {seed}: parity {i} {j}")
                    })?;
                }
            }
        }
        for (e, entry) in cat.entries.iter().enumerate() {
            let glue = BTreeSet::from([entry.s.height().clone()]);
            for (p, a0) in tr.nodes.iter().enumerate() {
                for a1 in tr.nodes[p + 1..].iter().filter(|a1| a0.dset(a1) == glue) {
                    for (_, c) in st.hom_classify(e, &tr.level, (a0, a1)).map_err(|e| e.to_string())? {
                        *cases.entry(c).or_insert(0) += 1;
                    }
                }
            }
        }
    }
    Ok(levels)
}

fn coloring_suite() -> Outcome {
    let mut levels = 0;
    let mut cases = BTreeMap::new();
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let arena = random_arena(&mut rng);
        let cat = random_catalog(&mut rng, &arena);
        let mut st = init_coloring(&arena);
        st.build_to(arena.height_bound(), &cat, None)
            .map_err(|e| format!("seed {seed}: {e}"))?;
        levels += audit_levels(&st, &cat, seed, &mut cases)?;
        coh_against_direct(&st, &arena, seed)?;
    }
    // Windows below ω·3 never contain a limit, so blocks inside a window are
    // always swallowed by E_k; ω² exercises the remaining case.
    let mut wide = BTreeMap::new();
    for seed in 0..40u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let arena = random_arena_below(&mut rng, Ordinal::omega_pow(2), 3);
        let cat = random_catalog(&mut rng, &arena);
        let mut st = init_coloring(&arena);
        st.build_to(arena.height_bound(), &cat, None)
            .map_err(|e| format!("ω² seed {seed}: {e}"))?;
        levels += audit_levels(&st, &cat, seed, &mut wide)?;
    }
    check(wide.get(&HomCase::Case3).is_some_and(|&n| n > 0), || {
        format!("ω² batch never reached Case 3: {wide:?}")
    })?;
    Ok(format!(
        "140 seeds, {levels} limit levels, cases {cases:?}, at ω² {wide:?}"
    ))
}

/// Symbolic disagreement sets agree with direct evaluation on observed levels.
fn coh_against_direct(st: &ColoringState, arena: &Arena, seed: u64) -> Result<(), String> {
    let top = arena.height_bound();
    let mut levels = arena.grid_levels();
    levels.push(top.clone());
    for t in arena.level_nodes(top).unwrap() {
        for g in &levels {
            let s = t.restrict(g);
            let coh = st.coh_defect(&s, &t).map_err(|e| e.to_string())?;
            let direct: BTreeSet<Node> = arena
                .observed_levels_below(g)
                .into_iter()
                .map(|h| s.restrict(&h))
                .filter(|x| st.c_s(&s, x).unwrap() != st.c_s(&t, x).unwrap())
                .collect();
            let observed: BTreeSet<Node> = coh
                .nodes
                .iter()
                .filter(|x| arena.on_grid(x.height()) || direct.contains(*x))
                .cloned()
                .collect();
            check(observed == direct, || {
                format!("seed {seed}: coh({s}, {t}) {:?} vs direct {direct:?}", coh.nodes)
            })?;
            for x in &coh.nodes {
                check(st.c_s(&s, x).unwrap() != st.c_s(&t, x).unwrap(), || {
                    format!("seed {seed}: spurious defect {x}")
                })?;
            }
        }
    }
    Ok(())
}

fn pattern_oracle(st: &ColoringState, a: &Block<Node>, b: &Block<Node>, n: usize) -> bool {
    let a: Vec<&Node> = a.iter().collect();
    let b: Vec<&Node> = b.iter().collect();
    (0..2u8).any(|i| {
        (0..n).all(|j| {
            (0..n).all(|k| st.color(a[j], b[k]).unwrap() == i && st.color(a[n + j], b[n + k]).unwrap() == 1 - i)
        })
    })
}

fn precaliber_suite() -> Outcome {
    let mut extracted = 0;
    let mut phi = 0;
    let mut found = 0;
    for seed in 0..60u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let arena = random_arena(&mut rng);
        let cat = random_catalog(&mut rng, &arena);
        let mut st = init_coloring(&arena);
        st.build_to(arena.height_bound(), &cat, None)
            .map_err(|e| format!("seed {seed}: {e}"))?;
        let Some(s) = random_split_node(&mut rng, &arena) else {
            continue;
        };
        let n = rng.gen_range(1..=2);
        let mut used: BTreeSet<Node> = BTreeSet::new();
        let mut pool: Vec<Block<Node>> = Vec::new();
        for _ in 0..40 {
            if let Some(b) = random_x_block(&mut rng, &arena, &s, n, &o(0)) {
                if b.is_disjoint(&used) {
                    used.extend(b.iter().cloned());
                    pool.push(b);
                }
            }
        }
        let instances: Vec<Vec<Block<Node>>> = pool.iter().map(|b| vec![b.clone()]).collect();
        let res = homogeneous_extract(&st, &s, n, &instances).map_err(|e| format!("seed {seed}: {e}"))?;
        extracted += res.selected.len();
        for &p in &res.selected {
            for &q in &res.selected {
                let (a, b) = (&instances[p][0], &instances[q][0]);
                if p != q && a.last().unwrap().is_below(b.last().unwrap()) {
                    check(pattern_oracle(&st, a, b, n), || {
                        format!("seed {seed}: extracted {p},{q} break the pattern")
                    })?;
                }
            }
        }

        for _ in 0..5 {
            let k = rng.gen_range(2..=6);
            let nodes: Vec<Node> = {
                let mut v = Vec::new();
                let mut seen = BTreeSet::new();
                for _ in 0..k * 3 {
                    let t = arena
                        .level_nodes(arena.height_bound())
                        .unwrap()
                        .choose(&mut rng)
                        .unwrap()
                        .clone();
                    let hs = arena.grid_levels();
                    let x = t.restrict(hs.choose(&mut rng).unwrap());
                    if seen.insert(x.clone()) {
                        v.push(x);
                    }
                    if v.len() == k {
                        break;
                    }
                }
                v
            };
            let mut shuffled = pool.clone();
            shuffled.shuffle(&mut rng);
            let mut x: Vec<Vec<Block<Node>>> = vec![Vec::new(); nodes.len()];
            for (i, b) in shuffled.into_iter().take(12 - nodes.len().min(12)).enumerate() {
                if rng.gen_bool(0.7) {
                    x[i % nodes.len()].push(b);
                }
            }
            let inst = Phi0Instance {
                pairs: vec![(s.clone(), n)],
                nodes: nodes.clone(),
                x: vec![x.clone()],
            };
            let got = phi0_audit(&st, &inst).map_err(|e| format!("seed {seed}: {e}"))?;
            let mut naive = None;
            'outer: for a in 0..nodes.len() {
                for b in a + 1..nodes.len() {
                    if nodes[a].is_below(&nodes[b])
                        && x[a].iter().all(|p| x[b].iter().all(|q| pattern_oracle(&st, p, q, n)))
                    {
                        naive = Some((a, b));
                        break 'outer;
                    }
                }
            }
            phi += 1;
            found += naive.is_some() as usize;
            check(got == naive, || format!("seed {seed}: φ₀ {got:?} vs naive {naive:?}"))?;
        }
    }
    Ok(format!(
        "{extracted} extracted instances, {phi} φ₀ instances ({found} with witness)"
    ))
}

fn end_to_end() -> Outcome {
    let sc = Scenario::from_json(PLANTED).map_err(|e| e.to_string())?;
    let fam = family_stage(&sc).map_err(|e| e.to_string())?;
    let thin = two_thin_stage(&sc, &fam).map_err(|e| e.to_string())?;
    check(!thin.catalog.entries.is_empty(), || {
        "planted block did not survive the transfer".into()
    })?;
    let (state, cert) = coloring_stage(&sc, &thin).map_err(|e| e.to_string())?;
    check(cert.pass(), || format!("coloring audits {:?}", cert.failing()))?;
    let report = pr1_stage(&sc, &state).map_err(|e| e.to_string())?;
    for eta in [0u8, 1] {
        let clause = report.certificate.clause(&format!("witness_eta_{eta}"));
        check(clause.is_some_and(|c| c.pass), || format!("no witness for η = {eta}"))?;
    }
    check(
        report.certificate.clause("pi.coherence").is_some_and(|c| c.pass),
        || "π coherence differs from coh".into(),
    )?;

    let arena = sc.arena().unwrap();
    let mut fresh = init_coloring(&arena);
    fresh.build_to(arena.height_bound(), &thin.catalog, sc.steps).unwrap();
    let pi = induce_pi(&state, &sc.branch).unwrap();
    let b = |g: &Ordinal| Node::new(g.clone(), sc.branch.supp.range(..g.clone()).cloned()).unwrap();
    for eta in [0u8, 1] {
        let inst = Pr1Instance {
            n: sc.pr1.n,
            tuples: sc.pr1.tuples.clone(),
            eta,
        };
        let mut naive = None;
        'o: for x in 0..inst.tuples.len() {
            for y in x + 1..inst.tuples.len() {
                if inst.tuples[x]
                    .iter()
                    .all(|p| inst.tuples[y].iter().all(|q| fresh.color(&b(p), &b(q)).unwrap() == eta))
                {
                    naive = Some((x, y));
                    break 'o;
                }
            }
        }
        let got = kurepa::pr1::pr1_search(&pi, &inst).unwrap();
        check(got == naive && got.is_some(), || {
            format!("η = {eta}: search {got:?} vs fresh oracle {naive:?}")
        })?;
    }

    let pts: Vec<Ordinal> = arena.grid_levels();
    let mut compared = 0;
    for (i, beta) in pts.iter().enumerate() {
        for gamma in &pts[i + 1..] {
            let coh: BTreeSet<Ordinal> = state
                .coh_defect(&b(beta), &b(gamma))
                .unwrap()
                .nodes
                .iter()
                .map(|x| x.height().clone())
                .collect();
            let mut probe: BTreeSet<Ordinal> = arena.observed_levels_below(beta).into_iter().collect();
            probe.extend(coh.iter().cloned());
            let direct = pi.defect_at(probe, beta, gamma).unwrap();
            compared += 1;
            check(direct == coh, || {
                format!("π defect at ({beta}, {gamma}): {direct:?} vs {coh:?}")
            })?;
        }
    }
    Ok(format!("witnesses for η = 0 and 1, {compared} coherence pairs"))
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_kurepa");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let scenario = dir.path().join("planted.json");
    std::fs::write(&scenario, PLANTED).unwrap();
    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, "{}").unwrap();
    let mut files = 0;
    for sc in [&scenario, &empty] {
        for cmd in ["build-family", "two-thin", "color", "audit", "pr1", "all"] {
            let mut runs: Vec<BTreeMap<String, Vec<u8>>> = Vec::new();
            for r in 0..2 {
                let out = dir.path().join(format!("{cmd}-{r}"));
                let _ = std::fs::remove_dir_all(&out);
                let status = Proc::new(bin)
                    .args([cmd, sc.to_str().unwrap(), "--out", out.to_str().unwrap()])
                    .status()
                    .map_err(|e| e.to_string())?;
                let expected = if sc == &empty && cmd == "pr1" { None } else { Some(0) };
                if let Some(code) = expected {
                    check(status.code() == Some(code), || {
                        format!("{cmd} on {} exited {status}", sc.display())
                    })?;
                }
                let mut docs = BTreeMap::new();
                for e in std::fs::read_dir(&out).unwrap() {
                    let e = e.unwrap();
                    docs.insert(
                        e.file_name().to_string_lossy().into_owned(),
                        std::fs::read(e.path()).unwrap(),
                    );
                }
                runs.push(docs);
            }
            files += runs[0].len();
            check(!runs[0].is_empty() && runs[0] == runs[1], || {
                format!("{cmd} on {} is not reproducible", sc.display())
            })?;
        }
    }
    Ok(format!("{files} documents byte-identical across reruns"))
}

#[test]
fn acceptance() {
    type Criterion = (&'static str, fn() -> Outcome, Duration);
    let criteria: [Criterion; 7] = [
        ("1 closure laws", closure_suite, Duration::from_secs(5)),
        ("2 ladder audit", ladder_suite, Duration::from_secs(5)),
        ("3 forcing guarantees", forcing_suite, Duration::from_secs(10)),
        ("4 coloring structure", coloring_suite, Duration::from_secs(60)),
        ("5 precaliber and φ₀", precaliber_suite, Duration::from_secs(10)),
        ("6 end-to-end Pr₁", end_to_end, Duration::from_secs(60)),
        ("7 determinism", determinism, Duration::from_secs(60)),
    ];
    let mut failed = Vec::new();
    for (name, f, limit) in criteria {
        let start = Instant::now();
        let res = f();
        let took = start.elapsed();
        let res = res.and_then(|m| {
            if took <= limit {
                Ok(m)
            } else {
                Err(format!("{m}; took {took:.2?}, limit {limit:?}"))
            }
        });
        match res {
            Ok(m) => println!("PASS criterion {name}: {m} ({took:.2?})"),
            Err(m) => {
                println!("FAIL criterion {name}: {m} ({took:.2?})");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
