//! The cyclic model of PG(2,8) inside GF(512), its Fano subplanes, their
//! orbits under the Singer subgroup W of order 73, imprints on a line, and the
//! two-phase search for twelve orbits whose imprints tile a line.
//!
//! Point t is the GF(8)-line of GF(512) spanned by x^t, so points are
//! residues mod 73 and W acts by t -> t + 1.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cover::{solve, CoverInstance, CoverMode, CoverOutcome};
use crate::field::{FieldElement, FieldError, FieldSpec, FieldTable};

pub const POINTS: usize = 73;
pub const LINE_SIZE: usize = 9;
pub const SUBLINES: usize = 84;
pub const ORBITS_IN_COVER: usize = 12;
pub const CACHE_ENV: &str = "STEINER_CACHE_DIR";
const CACHE_FILE: &str = "pg28_orbits.txt";

/// A line given in the literature for a cyclic labeling of PG(2,8).
pub const REFERENCE_LINE: [u8; 9] = [1, 2, 35, 37, 42, 45, 47, 54, 63];

pub type Residue = u8;
pub type Triple = [Residue; 3];

#[derive(Debug, Error)]
pub enum Pg28Error {
    #[error("{target:?} is not a line under any translation or multiplier of the model ({distinct} distinct differences)")]
    LabelingMismatch { target: Vec<Residue>, distinct: usize },
    #[error("cache {path}: {reason}")]
    Cache { path: PathBuf, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Relabeling t -> multiplier * t + translation applied to the span line of 1 and x.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Normalization {
    pub translation: u8,
    pub multiplier: u8,
}

impl std::fmt::Display for Normalization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{},{}", self.translation, self.multiplier)
    }
}

#[derive(Debug, Clone)]
pub struct CyclicPlane {
    pub field: Arc<FieldTable>,
    pub norm: Normalization,
    /// Line `t` is `base_line + t`, each stored sorted.
    pub lines: Vec<[Residue; 9]>,
    line_masks: Vec<u128>,
    through: Vec<[u8; POINTS]>,
}

pub fn distinct_differences(set: &[Residue]) -> usize {
    let mut seen = HashSet::new();
    for &a in set {
        for &b in set {
            if a != b {
                seen.insert((a as usize + POINTS - b as usize) % POINTS);
            }
        }
    }
    seen.len()
}

fn shift(set: &[Residue], t: usize) -> Vec<Residue> {
    let mut out: Vec<Residue> = set.iter().map(|&p| ((p as usize + t) % POINTS) as Residue).collect();
    out.sort_unstable();
    out
}

fn mask_of(set: &[Residue]) -> u128 {
    set.iter().fold(0, |m, &p| m | 1u128 << p)
}

impl CyclicPlane {
    fn residue(field: &FieldTable, a: FieldElement) -> Residue {
        (field.log(a).expect("nonzero") as usize % POINTS) as Residue
    }

    /// GF(8)-span of 1 and x as a set of residues.
    pub fn span_line(field: &FieldTable) -> Vec<Residue> {
        let x = field.exp(1);
        let scalars: Vec<FieldElement> =
            std::iter::once(FieldElement::ZERO).chain((0..7).map(|i| field.exp(73 * i))).collect();
        let mut pts = BTreeSet::new();
        for &a in &scalars {
            for &b in &scalars {
                let c = field.add(a, field.mul(b, x));
                if !c.is_zero() {
                    pts.insert(Self::residue(field, c));
                }
            }
        }
        pts.into_iter().collect()
    }

    fn from_base(field: Arc<FieldTable>, norm: Normalization, base: &[Residue]) -> Self {
        let lines: Vec<[Residue; 9]> = (0..POINTS).map(|t| shift(base, t).try_into().expect("nine points")).collect();
        let line_masks = lines.iter().map(|l| mask_of(l)).collect();
        let mut through = vec![[u8::MAX; POINTS]; POINTS];
        for (id, l) in lines.iter().enumerate() {
            for &a in l {
                for &b in l {
                    if a != b {
                        through[a as usize][b as usize] = id as u8;
                    }
                }
            }
        }
        Self { field, norm, lines, line_masks, through }
    }

    /// Model whose lines include [`REFERENCE_LINE`]; fails if no relabeling t -> ct + s reaches it.
    pub fn build_reference() -> Result<Self, Pg28Error> {
        let field = FieldTable::shared(FieldSpec::gf512())?;
        let span = Self::span_line(&field);
        for c in 1..POINTS {
            let scaled: Vec<Residue> = span.iter().map(|&d| ((c * d as usize) % POINTS) as Residue).collect();
            for t in 0..POINTS {
                if shift(&scaled, t) == REFERENCE_LINE {
                    let norm = Normalization { translation: t as u8, multiplier: c as u8 };
                    return Ok(Self::from_base(field, norm, &REFERENCE_LINE));
                }
            }
        }
        Err(Pg28Error::LabelingMismatch {
            target: REFERENCE_LINE.to_vec(),
            distinct: distinct_differences(&REFERENCE_LINE),
        })
    }

    /// The model with its native labeling; line 0 is the translate of the span line through {1, 2}.
    pub fn build() -> Result<Self, Pg28Error> {
        let field = FieldTable::shared(FieldSpec::gf512())?;
        let span = Self::span_line(&field);
        let t = (0..POINTS)
            .find(|&t| {
                let l = shift(&span, t);
                l.contains(&1) && l.contains(&2)
            })
            .expect("some translate passes through 1 and 2");
        Ok(Self::from_base(field, Normalization { translation: t as u8, multiplier: 1 }, &shift(&span, t)))
    }

    pub fn line_mask(&self, id: usize) -> u128 {
        self.line_masks[id]
    }

    pub fn line_through(&self, a: Residue, b: Residue) -> usize {
        self.through[a as usize][b as usize] as usize
    }

    /// The line id of `set`, if it is a line.
    pub fn line_id(&self, set: &[Residue]) -> Option<usize> {
        let m = mask_of(set);
        self.line_masks.iter().position(|&l| l == m).filter(|_| set.len() == LINE_SIZE)
    }

    pub fn point_rep(&self, p: Residue, scalar: usize) -> FieldElement {
        self.field.exp((p as usize + POINTS * scalar) as i64)
    }

    pub fn point_of(&self, a: FieldElement) -> Residue {
        Self::residue(&self.field, a)
    }
}

/// Triples of `line` with representatives summing to zero, ascending.
pub fn sublines(plane: &CyclicPlane, line: usize) -> Vec<Triple> {
    let pts = plane.lines[line];
    let mut out = BTreeSet::new();
    for (i, &a) in pts.iter().enumerate() {
        for &b in &pts[i + 1..] {
            let u = plane.point_rep(a, 0);
            for s in 0..7 {
                let w = plane.field.add(u, plane.point_rep(b, s));
                let mut t = [a, b, plane.point_of(w)];
                t.sort_unstable();
                out.insert(t);
            }
        }
    }
    out.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FanoOrbit {
    pub index: usize,
    /// Lexicographically least translate.
    pub representative: [Residue; 7],
}

impl FanoOrbit {
    pub fn member(&self, t: usize) -> [Residue; 7] {
        shift(&self.representative, t).try_into().expect("seven points")
    }

    pub fn members(&self) -> impl Iterator<Item = [Residue; 7]> + '_ {
        (0..POINTS).map(|t| self.member(t))
    }
}

pub fn canonical_translate(set: &[Residue]) -> Vec<Residue> {
    (0..POINTS).map(|t| shift(set, t)).min().expect("nonempty")
}

/// Points of the subplane generated by representatives u, v, w.
pub fn fano_points(plane: &CyclicPlane, u: FieldElement, v: FieldElement, w: FieldElement) -> Vec<Residue> {
    let f = &plane.field;
    let mut pts: Vec<Residue> = [u, v, w, f.add(u, v), f.add(u, w), f.add(v, w), f.add(f.add(u, v), w)]
        .into_iter()
        .map(|e| plane.point_of(e))
        .collect();
    pts.sort_unstable();
    pts
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FanoStats {
    pub triples: u64,
    pub subplanes_through_zero: usize,
    pub orbits: usize,
}

/// All subplanes through point 0, from u = 1 and every scaled pair of non-collinear points b < c.
pub fn subplanes_through_zero(plane: &CyclicPlane) -> (Vec<[Residue; 7]>, u64) {
    let one = plane.point_rep(0, 0);
    let mut seen = HashSet::new();
    let mut triples = 0u64;
    for b in 1..POINTS as Residue {
        let l = plane.line_through(0, b);
        for c in b + 1..POINTS as Residue {
            if plane.line_mask(l) >> c & 1 == 1 {
                continue;
            }
            for sb in 0..7 {
                for sc in 0..7 {
                    triples += 1;
                    let pts = fano_points(plane, one, plane.point_rep(b, sb), plane.point_rep(c, sc));
                    seen.insert(<[Residue; 7]>::try_from(pts).expect("seven points"));
                }
            }
        }
    }
    let mut out: Vec<[Residue; 7]> = seen.into_iter().collect();
    out.sort_unstable();
    (out, triples)
}

/// W-orbits of Fano subplanes, ordered by representative.
pub fn enumerate_fano_orbits(plane: &CyclicPlane) -> (Vec<FanoOrbit>, FanoStats) {
    let (through_zero, triples) = subplanes_through_zero(plane);
    let reps: BTreeSet<Vec<Residue>> = through_zero.iter().map(|s| canonical_translate(s)).collect();
    let orbits: Vec<FanoOrbit> = reps
        .into_iter()
        .enumerate()
        .map(|(index, r)| FanoOrbit { index, representative: r.try_into().expect("seven points") })
        .collect();
    log::debug!("{} generating triples, {} subplanes through 0, {} orbits", triples, through_zero.len(), orbits.len());
    let stats = FanoStats { triples, subplanes_through_zero: through_zero.len(), orbits: orbits.len() };
    (orbits, stats)
}

/// Lines meeting `points` in exactly three points.
pub fn secant_lines(plane: &CyclicPlane, points: &[Residue]) -> Vec<usize> {
    let m = mask_of(points);
    (0..POINTS).filter(|&l| (plane.line_mask(l) & m).count_ones() == 3).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImprintRecord {
    pub orbit: usize,
    pub line: usize,
    /// Distinct three-point intersections, ascending.
    pub imprint: Vec<Triple>,
}

impl ImprintRecord {
    /// Bit i set iff the i-th subline of the line (ascending order) is in the imprint.
    pub fn mask(&self, sublines: &[Triple]) -> u128 {
        self.imprint.iter().fold(0, |m, t| m | 1u128 << sublines.binary_search(t).expect("imprint triple is a subline"))
    }
}

pub fn imprint(orbit: &FanoOrbit, plane: &CyclicPlane, line: usize) -> ImprintRecord {
    let lm = plane.line_mask(line);
    let mut set = BTreeSet::new();
    for member in orbit.members() {
        let hit = mask_of(&member) & lm;
        if hit.count_ones() == 3 {
            let pts: Vec<Residue> = (0..POINTS as Residue).filter(|&p| hit >> p & 1 == 1).collect();
            set.insert([pts[0], pts[1], pts[2]]);
        }
    }
    ImprintRecord { orbit: orbit.index, line, imprint: set.into_iter().collect() }
}

/// Orbits with their imprints on line 0, as loaded from or written to the cache.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitTable {
    pub field: FieldSpec,
    pub norm: Normalization,
    pub orbits: Vec<FanoOrbit>,
    pub imprints: Vec<ImprintRecord>,
}

impl OrbitTable {
    pub fn compute(plane: &CyclicPlane) -> Self {
        let (orbits, _) = enumerate_fano_orbits(plane);
        let imprints = orbits.par_iter().map(|o| imprint(o, plane, 0)).collect();
        Self { field: plane.field.spec().clone(), norm: plane.norm, orbits, imprints }
    }

    pub fn header(&self) -> String {
        format!("pg28 field={} norm={} orbits={}", self.field, self.norm, self.orbits.len())
    }

    pub fn to_text(&self) -> String {
        let mut s = self.header();
        s.push('\n');
        for o in &self.orbits {
            let pts: Vec<String> = o.representative.iter().map(u8::to_string).collect();
            writeln!(s, "{}", pts.join(" ")).unwrap();
        }
        writeln!(s, "line 0").unwrap();
        for rec in &self.imprints {
            let ts: Vec<String> = rec.imprint.iter().map(|t| format!("{},{},{}", t[0], t[1], t[2])).collect();
            writeln!(s, "{}: {}", rec.orbit, ts.join(" ")).unwrap();
        }
        s
    }

    /// Parses a cache file; `None` if the header does not match `plane`.
    pub fn parse(text: &str, plane: &CyclicPlane) -> Result<Option<Self>, String> {
        let mut lines = text.lines();
        let header = lines.next().ok_or("empty file")?;
        let n: usize = header
            .rsplit_once("orbits=")
            .and_then(|(_, n)| n.parse().ok())
            .ok_or_else(|| format!("bad header {header:?}"))?;
        let expected = format!("pg28 field={} norm={} orbits={n}", plane.field.spec(), plane.norm);
        if header != expected {
            return Ok(None);
        }
        let mut orbits = Vec::with_capacity(n);
        for index in 0..n {
            let row = lines.next().ok_or("truncated orbit list")?;
            let pts: Vec<Residue> =
                row.split_whitespace().map(str::parse).collect::<Result<_, _>>().map_err(|e| format!("{row:?}: {e}"))?;
            let representative: [Residue; 7] = pts.try_into().map_err(|_| format!("{row:?}: need seven points"))?;
            orbits.push(FanoOrbit { index, representative });
        }
        if lines.next() != Some("line 0") {
            return Err("missing imprint block".into());
        }
        let mut imprints = Vec::with_capacity(n);
        for index in 0..n {
            let row = lines.next().ok_or("truncated imprint block")?;
            let (id, rest) = row.split_once(':').ok_or_else(|| format!("{row:?}: missing ':'"))?;
            if id.trim().parse::<usize>().ok() != Some(index) {
                return Err(format!("{row:?}: expected orbit {index}"));
            }
            let mut imprint = Vec::new();
            for t in rest.split_whitespace() {
                let v: Vec<Residue> =
                    t.split(',').map(str::parse).collect::<Result<_, _>>().map_err(|e| format!("{t:?}: {e}"))?;
                imprint.push(<Triple>::try_from(v).map_err(|_| format!("{t:?}: need three points"))?);
            }
            imprints.push(ImprintRecord { orbit: index, line: 0, imprint });
        }
        Ok(Some(Self { field: plane.field.spec().clone(), norm: plane.norm, orbits, imprints }))
    }
}

pub fn cache_dir() -> Option<PathBuf> {
    std::env::var_os(CACHE_ENV).map(PathBuf::from)
}

/// Loads the orbit table from `dir` if a matching cache exists, otherwise computes and writes it.
pub fn fano_orbits(plane: &CyclicPlane, dir: Option<&Path>) -> Result<OrbitTable, Pg28Error> {
    let Some(dir) = dir else { return Ok(OrbitTable::compute(plane)) };
    let path = dir.join(CACHE_FILE);
    if path.exists() {
        let text = std::fs::read_to_string(&path)?;
        match OrbitTable::parse(&text, plane) {
            Ok(Some(table)) => return Ok(table),
            Ok(None) => log::info!("{} was built for another labeling, rebuilding", path.display()),
            Err(reason) => return Err(Pg28Error::Cache { path, reason }),
        }
    }
    let table = OrbitTable::compute(plane);
    std::fs::create_dir_all(dir)?;
    std::fs::write(&path, table.to_text())?;
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate {
    pub orbit: usize,
    pub mask: u128,
}

/// Candidates with full imprints on line 0 and the seven sublines through {1, 2}.
#[derive(Debug, Clone)]
pub struct SearchInput {
    pub candidates: Vec<Candidate>,
    pub anchors: [usize; 7],
    pub sublines: usize,
}

impl SearchInput {
    pub fn from_table(plane: &CyclicPlane, table: &OrbitTable) -> Self {
        let subs = sublines(plane, 0);
        let candidates = table
            .imprints
            .iter()
            .filter(|r| r.imprint.len() == 7)
            .map(|r| Candidate { orbit: r.orbit, mask: r.mask(&subs) })
            .collect();
        let anchors: Vec<usize> = (0..subs.len()).filter(|&i| subs[i][0] == 1 && subs[i][1] == 2).collect();
        Self { candidates, anchors: anchors.try_into().expect("seven sublines through 1 and 2"), sublines: subs.len() }
    }

    /// L_i: positions of candidates whose imprint holds anchor i.
    pub fn anchor_lists(&self) -> Vec<Vec<usize>> {
        self.anchors
            .iter()
            .map(|&s| (0..self.candidates.len()).filter(|&j| self.candidates[j].mask >> s & 1 == 1).collect())
            .collect()
    }
}

/// Orbit ids given to planted candidates start here.
pub const PLANTED_BASE: usize = 10_000;

impl SearchInput {
    /// Adds twelve artificial candidates whose imprints partition the sublines, spread
    /// through the list; two anchors are moved so that one planted imprint holds several.
    pub fn with_planted_family(&self) -> (SearchInput, Vec<usize>) {
        let mut order: Vec<usize> = (0..self.sublines).collect();
        order.swap(self.anchors[1], 3);
        order.swap(self.anchors[4], 50);
        let mut out = self.clone();
        let mut ids = Vec::new();
        for (i, chunk) in order.chunks(7).enumerate() {
            let mask = chunk.iter().fold(0u128, |m, &s| m | 1 << s);
            let at = (i * 97) % out.candidates.len().max(1);
            out.candidates.insert(at, Candidate { orbit: PLANTED_BASE + i, mask });
            ids.push(PLANTED_BASE + i);
        }
        (out, ids)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchAudit {
    /// Partial families produced by the first phase.
    pub generated: u64,
    /// Partial families handed to the depth-first phase.
    pub processed: u64,
    /// Partial families discarded because too few candidates stayed disjoint.
    pub pruned: u64,
    /// First-phase partial families by size.
    pub by_size: Vec<u64>,
    pub nodes: u64,
}

impl SearchAudit {
    fn merge(&mut self, other: &SearchAudit) {
        self.generated += other.generated;
        self.processed += other.processed;
        self.pruned += other.pruned;
        self.nodes += other.nodes;
        if self.by_size.len() < other.by_size.len() {
            self.by_size.resize(other.by_size.len(), 0);
        }
        for (a, b) in self.by_size.iter_mut().zip(&other.by_size) {
            *a += b;
        }
    }

    pub fn balanced(&self) -> bool {
        self.generated == self.processed + self.pruned && self.by_size.iter().sum::<u64>() == self.generated
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchReport {
    /// Orbit indices of the first family found, in choice order.
    pub solution: Option<Vec<usize>>,
    pub audit: SearchAudit,
    pub wall_ms: u64,
}

struct Worker<'a> {
    input: &'a SearchInput,
    branch: usize,
    /// Least branch that has found a family; later branches stop.
    found: &'a AtomicUsize,
    lists: Vec<Vec<usize>>,
    audit: SearchAudit,
    solution: Option<Vec<usize>>,
    partials: Option<Vec<Vec<usize>>>,
}

impl Worker<'_> {
    fn cancelled(&self) -> bool {
        self.found.load(Ordering::Relaxed) < self.branch
    }

    fn phase_a(&mut self, chosen: &mut Vec<usize>, union: u128, open: &mut Vec<usize>) {
        if self.solution.is_some() || self.cancelled() {
            return;
        }
        let mut best: Option<(usize, Vec<usize>)> = None;
        if chosen.len() < 7 {
            for (slot, &i) in open.iter().enumerate() {
                let filtered: Vec<usize> =
                    self.lists[i].iter().copied().filter(|&j| self.input.candidates[j].mask & union == 0).collect();
                if best.as_ref().is_none_or(|(_, b)| filtered.len() > b.len()) {
                    best = Some((slot, filtered));
                }
            }
        }
        match best {
            Some((slot, list)) if !list.is_empty() => {
                let i = open.remove(slot);
                for j in list {
                    chosen.push(j);
                    self.phase_a(chosen, union | self.input.candidates[j].mask, open);
                    chosen.pop();
                    if self.solution.is_some() || self.cancelled() {
                        break;
                    }
                }
                open.insert(slot, i);
            }
            _ => self.phase_b(chosen, union),
        }
    }

    fn phase_b(&mut self, partial: &[usize], union: u128) {
        self.audit.generated += 1;
        let n = partial.len();
        if self.audit.by_size.len() <= n {
            self.audit.by_size.resize(n + 1, 0);
        }
        self.audit.by_size[n] += 1;
        if let Some(p) = self.partials.as_mut() {
            p.push(partial.to_vec());
        }
        let cands = &self.input.candidates;
        let needed = ORBITS_IN_COVER - n;
        let start: Vec<usize> = (0..cands.len()).filter(|&j| cands[j].mask & union == 0).collect();
        if start.len() < needed {
            self.audit.pruned += 1;
            return;
        }
        self.audit.processed += 1;
        if needed == 0 {
            self.finish(partial.iter().map(|&j| cands[j].orbit).collect());
            return;
        }
        struct Frame {
            list: Vec<usize>,
            pos: usize,
        }
        let mut stack = vec![Frame { list: start, pos: 0 }];
        let mut picked: Vec<usize> = Vec::with_capacity(needed);
        while let Some(top) = stack.last_mut() {
            if self.cancelled() {
                return;
            }
            if top.pos == top.list.len() {
                stack.pop();
                picked.pop();
                continue;
            }
            let j = top.list[top.pos];
            top.pos += 1;
            let still = needed - picked.len() - 1;
            if still == 0 {
                picked.push(j);
                let family = partial.iter().chain(&picked).map(|&j| cands[j].orbit).collect();
                self.finish(family);
                return;
            }
            let m = cands[j].mask;
            let next: Vec<usize> = top.list[top.pos..].iter().copied().filter(|&i| cands[i].mask & m == 0).collect();
            if next.len() >= still {
                self.audit.nodes += 1;
                picked.push(j);
                stack.push(Frame { list: next, pos: 0 });
            }
        }
    }

    fn finish(&mut self, family: Vec<usize>) {
        self.found.fetch_min(self.branch, Ordering::Relaxed);
        self.solution = Some(family);
    }
}

fn run_branch<'a>(
    input: &'a SearchInput,
    branch: usize,
    first: usize,
    found: &'a AtomicUsize,
    keep_partials: bool,
) -> (Worker<'a>, Option<Vec<Vec<usize>>>) {
    let lists = input.anchor_lists();
    let mut w = Worker {
        input,
        branch,
        found,
        lists,
        audit: SearchAudit::default(),
        solution: None,
        partials: keep_partials.then(Vec::new),
    };
    let mut open: Vec<usize> = (1..7).collect();
    w.phase_a(&mut vec![first], input.candidates[first].mask, &mut open);
    let partials = w.partials.take();
    (w, partials)
}

/// Runs both phases with one task per element of L_1.
///
/// Once a branch finds a family, later branches stop; the report covers the
/// branches up to the first successful one, so it does not depend on the worker count.
pub fn search_perfect_cover(input: &SearchInput) -> SearchReport {
    let start = Instant::now();
    let l1 = input.anchor_lists().swap_remove(0);
    let found = AtomicUsize::new(usize::MAX);
    let results: Vec<(SearchAudit, Option<Vec<usize>>)> = l1
        .par_iter()
        .enumerate()
        .map(|(branch, &first)| {
            let (w, _) = run_branch(input, branch, first, &found, false);
            (w.audit, w.solution)
        })
        .collect();
    let mut audit = SearchAudit::default();
    let mut solution = None;
    for (a, s) in results {
        audit.merge(&a);
        if s.is_some() {
            solution = s;
            break;
        }
    }
    SearchReport { solution, audit, wall_ms: start.elapsed().as_millis() as u64 }
}

/// First-phase partial families (candidate positions) rooted at the given L_1 element, in generation order.
pub fn phase_a_families(input: &SearchInput, first: usize) -> Vec<Vec<usize>> {
    run_branch(input, 0, first, &AtomicUsize::new(usize::MAX), true).1.unwrap_or_default()
}

/// Exact cover of the sublines by the full-imprint candidates, solved by dancing links.
pub fn imprint_cover_instance(input: &SearchInput) -> CoverInstance {
    let mut seen = HashMap::new();
    let mut columns = Vec::new();
    let mut ids = Vec::new();
    for c in &input.candidates {
        if seen.insert(c.mask, c.orbit).is_none() {
            columns.push((0..input.sublines).filter(|&s| c.mask >> s & 1 == 1).collect());
            ids.push(c.orbit as u64);
        }
    }
    CoverInstance::new(input.sublines, columns, ids).expect("imprints are nonempty and distinct")
}

pub fn imprint_cover_count(input: &SearchInput) -> CoverOutcome {
    solve(&imprint_cover_instance(input), CoverMode::Count)
}

/// Pairwise disjoint, each of size 7, union of size `total`.
pub fn is_perfect_cover(masks: &[u128], total: usize) -> bool {
    let mut union = 0u128;
    for &m in masks {
        if m.count_ones() != 7 || m & union != 0 {
            return false;
        }
        union |= m;
    }
    union.count_ones() as usize == total && masks.len() * 7 == total
}

/// Whether the orbits' imprints tile the sublines of every line of the plane.
pub fn verify_cover(orbits: &[FanoOrbit], plane: &CyclicPlane) -> bool {
    orbits.len() == ORBITS_IN_COVER
        && (0..POINTS).all(|line| {
            let subs = sublines(plane, line);
            let masks: Vec<u128> = orbits.iter().map(|o| imprint(o, plane, line).mask(&subs)).collect();
            is_perfect_cover(&masks, subs.len())
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane() -> CyclicPlane {
        CyclicPlane::build().unwrap()
    }

    #[test]
    fn span_line_is_a_planar_difference_set() {
        let p = plane();
        let span = CyclicPlane::span_line(&p.field);
        assert_eq!(span, vec![0, 1, 12, 20, 26, 30, 33, 35, 57]);
        assert_eq!(distinct_differences(&span), 72);
        assert_eq!(p.lines[0].to_vec(), shift(&span, 1));
    }

    #[test]
    fn reference_line_is_not_reachable() {
        assert_eq!(distinct_differences(&REFERENCE_LINE), 52);
        match CyclicPlane::build_reference() {
            Err(Pg28Error::LabelingMismatch { distinct, .. }) => assert_eq!(distinct, 52),
            other => panic!("expected a labeling mismatch, got {other:?}"),
        }
    }

    #[test]
    fn pairs_lie_on_one_line() {
        let p = plane();
        for a in 0..POINTS {
            for b in a + 1..POINTS {
                let n = (0..POINTS).filter(|&l| p.line_mask(l) >> a & 1 == 1 && p.line_mask(l) >> b & 1 == 1).count();
                assert_eq!(n, 1);
            }
        }
        assert_eq!(p.line_id(&p.lines[5]), Some(5));
        assert_eq!(p.line_id(&[0, 1, 2]), None);
    }

    #[test]
    fn subline_counts() {
        let p = plane();
        let s = sublines(&p, 0);
        assert_eq!(s.len(), SUBLINES);
        assert_eq!(s.iter().filter(|t| t[0] == 1 && t[1] == 2).count(), 7);
        for &x in &p.lines[0] {
            assert_eq!(s.iter().filter(|t| t.contains(&x)).count(), 28);
        }
    }

    #[test]
    fn cache_round_trip() {
        let p = plane();
        let dir = tempfile::tempdir().unwrap();
        let built = fano_orbits(&p, Some(dir.path())).unwrap();
        let text = std::fs::read_to_string(dir.path().join(CACHE_FILE)).unwrap();
        assert!(text.starts_with(&format!("pg28 field=GF(2^9):x^9+x^4+1 norm=1,1 orbits={}\n", built.orbits.len())));
        assert_eq!(fano_orbits(&p, Some(dir.path())).unwrap(), built);

        std::fs::write(dir.path().join(CACHE_FILE), text.replace("norm=1,1", "norm=0,1")).unwrap();
        assert_eq!(fano_orbits(&p, Some(dir.path())).unwrap(), built);
        std::fs::write(dir.path().join(CACHE_FILE), "pg28 garbage").unwrap();
        assert!(matches!(fano_orbits(&p, Some(dir.path())), Err(Pg28Error::Cache { .. })));
    }

    #[test]
    fn perfect_cover_predicate() {
        let blocks: Vec<u128> = (0..12).map(|i| 0x7fu128 << (7 * i)).collect();
        assert!(is_perfect_cover(&blocks, 84));
        assert!(!is_perfect_cover(&blocks[..11], 84));
        let mut overlap = blocks.clone();
        overlap[3] = (overlap[3] << 1) | 1;
        assert!(!is_perfect_cover(&overlap, 84));
    }
}
