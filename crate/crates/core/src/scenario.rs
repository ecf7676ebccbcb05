//! JSON scenarios and the pipeline that runs them: forced family, two-thin
//! transfer, coloring, branch coloring, and the audits over each stage.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::arena::{Arena, Node};
use crate::certificate::Certificate;
use crate::closure::{Block, Family, Flavor};
use crate::coloring::{hom_level_audit, init_coloring, structural_audit, ColoringState};
use crate::error::{Error, Result};
use crate::forcing::{club_thin, extract_family, family_audit, run_generic, CloseSample, DenseRequest, FilterSim};
use crate::ladder::{audit_ladder, build_ladder, LadderResult};
use crate::ordinal::Ordinal;
use crate::pr1::{induce_pi, pi_audit, pr1_search, Branch, Pr1Instance};
use crate::two_thin::{audit_two_thin, build_two_thin, height_bijection, project_family, TwoThinCatalog};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArenaSpec {
    #[serde(default)]
    pub coords: Vec<Ordinal>,
    #[serde(default = "omega")]
    pub height_bound: Ordinal,
    #[serde(default)]
    pub width: Option<u64>,
}

fn omega() -> Ordinal {
    Ordinal::omega()
}

impl Default for ArenaSpec {
    fn default() -> Self {
        ArenaSpec {
            coords: Vec::new(),
            height_bound: omega(),
            width: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    #[serde(default = "non_overlapping")]
    pub flavor: Flavor,
    #[serde(default)]
    pub root: Option<Block<Ordinal>>,
    pub blocks: Vec<Block<Ordinal>>,
}

fn non_overlapping() -> Flavor {
    Flavor::NonOverlapping
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClubSpec {
    pub family: usize,
    pub club: Vec<Ordinal>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    pub s: Node,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pr1Spec {
    #[serde(default = "one")]
    pub n: usize,
    #[serde(default)]
    pub tuples: Vec<Vec<Ordinal>>,
    #[serde(default = "both")]
    pub etas: Vec<u8>,
}

fn one() -> usize {
    1
}

fn both() -> Vec<u8> {
    vec![0, 1]
}

impl Default for Pr1Spec {
    fn default() -> Self {
        Pr1Spec {
            n: 1,
            tuples: Vec::new(),
            etas: both(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderSpec {
    #[serde(default = "omega")]
    pub alpha: Ordinal,
    #[serde(default = "four")]
    pub steps: usize,
    #[serde(default)]
    pub tamper: bool,
}

fn four() -> usize {
    4
}

impl Default for LadderSpec {
    fn default() -> Self {
        LadderSpec {
            alpha: omega(),
            steps: 4,
            tamper: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSpec {
    pub a: BTreeSet<Ordinal>,
    #[serde(default)]
    pub families: Vec<usize>,
    #[serde(default)]
    pub horizon: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub arena: ArenaSpec,
    pub families: Vec<FamilySpec>,
    pub clubs: Vec<ClubSpec>,
    pub two_thin_pairs: Vec<PairSpec>,
    pub branch: Branch,
    pub requests: Vec<DenseRequest<Ordinal>>,
    pub pr1: Pr1Spec,
    pub large_threshold: usize,
    pub seed: u64,
    pub steps: Option<usize>,
    pub ladder: LadderSpec,
    /// Catalog indices whose blocks the catalog must meet largely.
    pub targets: Vec<usize>,
    pub close_samples: Vec<SampleSpec>,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            arena: ArenaSpec::default(),
            families: Vec::new(),
            clubs: Vec::new(),
            two_thin_pairs: Vec::new(),
            branch: Branch::default(),
            requests: Vec::new(),
            pr1: Pr1Spec::default(),
            large_threshold: 2,
            seed: 0,
            steps: None,
            ladder: LadderSpec::default(),
            targets: Vec::new(),
            close_samples: Vec::new(),
        }
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Scenario> {
        serde_json::from_str(text).map_err(|e| Error::MalformedInstance(format!("scenario: {e}")))
    }

    pub fn load(path: &Path) -> Result<Scenario> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::MalformedInstance(format!("{}: {e}", path.display())))?;
        Scenario::from_json(&text)
    }

    pub fn arena(&self) -> Result<Arena> {
        let coords: BTreeSet<Ordinal> = self.arena.coords.iter().cloned().collect();
        let width = self.arena.width.unwrap_or_else(|| Arena::default_width(&coords));
        Arena::new(coords, self.arena.height_bound.clone(), width)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FamilyStage {
    pub catalog: Vec<Family<Ordinal>>,
    pub filter: FilterSim<Ordinal>,
    pub generic: Vec<Family<Ordinal>>,
    pub ladder: LadderResult<Ordinal>,
    pub certificate: Certificate,
}

#[derive(Clone, Debug, Serialize)]
pub struct TwoThinStage {
    pub catalog: TwoThinCatalog,
    pub certificate: Certificate,
}

#[derive(Clone, Debug, Serialize)]
pub struct Pr1Report {
    pub witnesses: Vec<Value>,
    pub certificate: Certificate,
}

pub fn family_stage(sc: &Scenario) -> Result<FamilyStage> {
    let mut catalog = Vec::new();
    for (i, f) in sc.families.iter().enumerate() {
        let fam = Family::unchecked(f.flavor, f.root.clone(), f.blocks.iter().cloned());
        fam.validate()
            .map_err(|e| Error::MalformedInstance(format!("family {i}: {e}")))?;
        catalog.push(fam);
    }
    for c in &sc.clubs {
        let fam = catalog
            .get(c.family)
            .ok_or_else(|| Error::MalformedInstance(format!("club refers to missing family {}", c.family)))?;
        catalog.push(club_thin(fam, &c.club)?);
    }
    let filter = run_generic(&catalog, &sc.requests, sc.seed)?;
    let generic: Vec<Family<Ordinal>> = catalog.iter().map(|f| extract_family(&filter, f)).collect();

    let targets: Vec<Family<Ordinal>> = sc
        .targets
        .iter()
        .map(|&t| {
            catalog
                .get(t)
                .cloned()
                .ok_or_else(|| Error::MalformedInstance(format!("target {t} is not a catalog family")))
        })
        .collect::<Result<_>>()?;
    let samples: Vec<CloseSample<'_, Ordinal>> = sc
        .close_samples
        .iter()
        .map(|s| CloseSample {
            a: &s.a,
            families: &s.families,
            horizon: s.horizon,
        })
        .collect();
    let mut certificate = family_audit(
        &catalog,
        &sc.ladder.alpha,
        &targets,
        &samples,
        &filter,
        sc.large_threshold,
    );

    let alpha = &sc.ladder.alpha;
    let below: Vec<Family<Ordinal>> = generic.iter().map(|f| f.restrict_below(alpha)).collect();
    let mut ladder = build_ladder(alpha, &below, sc.ladder.steps)?;
    if sc.ladder.tamper {
        if let Some(f) = ladder.corrections.iter_mut().rev().find(|f| f.len() > 1) {
            f.pop_last();
        }
    }
    certificate.merge("ladder", audit_ladder(&ladder, alpha, &below));
    Ok(FamilyStage {
        catalog,
        filter,
        generic,
        ladder,
        certificate,
    })
}

pub fn two_thin_stage(sc: &Scenario, fam: &FamilyStage) -> Result<TwoThinStage> {
    let arena = sc.arena()?;
    let mut pairs = Vec::new();
    for p in &sc.two_thin_pairs {
        let s = Node::new(p.s.height().clone(), p.s.support().iter().cloned())?;
        if !arena.contains(&s) || s.height() >= arena.height_bound() {
            return Err(Error::InvalidNode(format!("{s} is not an arena node")));
        }
        pairs.push((s, p.n));
    }
    let catalog = build_two_thin(&fam.generic, &arena, &pairs)?;
    let pi = height_bijection(&arena)?;
    let mut targets = Vec::new();
    for f in &fam.generic {
        for (s, n) in &pairs {
            let proj = project_family(&pi, f, s, *n)?;
            if !proj.is_empty() {
                targets.push(proj);
            }
        }
    }
    let certificate = audit_two_thin(
        &catalog,
        arena.height_bound(),
        &targets,
        &[],
        sc.large_threshold.div_ceil(2),
    );
    Ok(TwoThinStage { catalog, certificate })
}

pub fn coloring_stage(sc: &Scenario, thin: &TwoThinStage) -> Result<(ColoringState, Certificate)> {
    let arena = sc.arena()?;
    let mut state = init_coloring(&arena);
    state.build_to(arena.height_bound(), &thin.catalog, sc.steps)?;
    let mut cert = Certificate::new("coloring");
    for tr in state.traces() {
        let level = tr.level.clone();
        cert.merge(&format!("coh@{level}"), structural_audit(&state, &level)?);
        cert.merge(&format!("hom@{level}"), hom_level_audit(&state, &level)?);
    }
    Ok((state, cert))
}

pub fn pr1_stage(sc: &Scenario, state: &ColoringState) -> Result<Pr1Report> {
    let pi = induce_pi(state, &sc.branch)?;
    let mut cert = Certificate::new("pr1");
    let mut witnesses = Vec::new();
    if sc.pr1.tuples.len() >= 2 {
        for &eta in &sc.pr1.etas {
            let inst = Pr1Instance {
                n: sc.pr1.n,
                tuples: sc.pr1.tuples.clone(),
                eta,
            };
            let found = pr1_search(&pi, &inst)?;
            witnesses.push(json!({"eta": eta, "witness": found}));
            cert.record(format!("witness_eta_{eta}"), found.is_some(), json!(found));
        }
    }
    cert.merge("pi", pi_audit(&pi, &sc.pr1.tuples, sc.large_threshold)?);
    Ok(Pr1Report {
        witnesses,
        certificate: cert,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Command {
    BuildFamily,
    TwoThin,
    Color,
    Audit,
    Pr1,
    All,
}

/// Artifacts written by a run: file name and JSON document.
pub struct RunOutput {
    pub files: Vec<(String, Value)>,
    pub pass: bool,
}

pub fn run(sc: &Scenario, cmd: Command) -> Result<RunOutput> {
    let mut files = Vec::new();
    let mut pass = true;
    let fam = family_stage(sc)?;
    let emit = |files: &mut Vec<(String, Value)>, name: &str, v: Value| files.push((name.to_string(), v));
    if matches!(cmd, Command::BuildFamily | Command::All) {
        pass &= fam.certificate.pass();
        emit(&mut files, "build_family.json", json!(fam));
    }
    if cmd == Command::BuildFamily {
        return Ok(RunOutput { files, pass });
    }
    let thin = two_thin_stage(sc, &fam)?;
    if matches!(cmd, Command::TwoThin | Command::All) {
        pass &= thin.certificate.pass();
        emit(&mut files, "two_thin.json", json!(thin));
    }
    if cmd == Command::TwoThin {
        return Ok(RunOutput { files, pass });
    }
    let (state, ccert) = coloring_stage(sc, &thin)?;
    if matches!(cmd, Command::Color | Command::All) {
        pass &= ccert.pass();
        let dump: Vec<Value> = state.dump()?.into_iter().map(|(s, x, c)| json!([s, x, c])).collect();
        emit(&mut files, "coloring.json", json!({"certificate": ccert, "dump": dump}));
        let traces = state.traces();
        let traces: Vec<&crate::coloring::LimitTrace> = traces.iter().map(|t| t.as_ref()).collect();
        emit(&mut files, "traces.json", json!(traces));
    }
    if cmd == Command::Color {
        return Ok(RunOutput { files, pass });
    }
    let pr1 = pr1_stage(sc, &state)?;
    if matches!(cmd, Command::Pr1 | Command::All) {
        pass &= pr1.certificate.pass();
        emit(&mut files, "pr1.json", json!(pr1));
    }
    if matches!(cmd, Command::Audit | Command::All) {
        let mut all = Certificate::new("audit");
        all.merge("family", fam.certificate.clone());
        all.merge("two_thin", thin.certificate.clone());
        all.merge("coloring", ccert);
        all.merge("pr1", pr1.certificate.clone());
        pass &= all.pass();
        emit(&mut files, "audit.json", json!(all));
    }
    Ok(RunOutput { files, pass })
}
