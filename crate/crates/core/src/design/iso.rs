//! Design isomorphism: cheap invariants first, then individualization-refinement.
//!
//! Points and blocks of both designs are colored jointly, so equal colors mean
//! the same refinement history in either design. A point of the first
//! non-singleton cell is individualized in A and tried against every point of
//! the matching cell in B. When all point cells are singletons the colors
//! define a bijection, which is then checked block by block.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{p_rank, Design, DesignError};
use crate::field::prime_factors;

/// Largest block count for which the block-intersection histogram is computed.
const INTERSECTION_BUDGET: usize = 4096;
/// Largest point count for which point profiles are computed.
const PROFILE_BUDGET: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsoOptions {
    /// Search nodes allowed before giving up with `SearchBudgetExceeded`.
    pub node_limit: Option<u64>,
}

impl Default for IsoOptions {
    fn default() -> Self {
        IsoOptions { node_limit: Some(200_000) }
    }
}

/// What decided the answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IsoCertificate {
    Parameters,
    BlockIntersections,
    PRank { p: u32, a: usize, b: usize },
    PointProfiles,
    Search { nodes: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsoOutcome {
    pub isomorphic: bool,
    /// Point map A -> B when isomorphic.
    pub witness: Option<BTreeMap<u32, u32>>,
    pub certificate: IsoCertificate,
}

impl IsoOutcome {
    fn different(certificate: IsoCertificate) -> Self {
        IsoOutcome { isomorphic: false, witness: None, certificate }
    }
}

pub fn designs_isomorphic(a: &Design, b: &Design) -> Result<IsoOutcome, DesignError> {
    designs_isomorphic_with(a, b, IsoOptions::default())
}

pub fn designs_isomorphic_with(a: &Design, b: &Design, opts: IsoOptions) -> Result<IsoOutcome, DesignError> {
    let ia = Incidence::new(a)?;
    let ib = Incidence::new(b)?;
    if (a.v, a.k, a.lambda, a.block_count()) != (b.v, b.k, b.lambda, b.block_count()) {
        return Ok(IsoOutcome::different(IsoCertificate::Parameters));
    }
    if a.block_count() <= INTERSECTION_BUDGET && ia.intersection_histogram() != ib.intersection_histogram() {
        return Ok(IsoOutcome::different(IsoCertificate::BlockIntersections));
    }
    if a.k > 1 && (a.lambda * (a.v - 1)).is_multiple_of(a.k - 1) {
        let r = a.lambda * (a.v - 1) / (a.k - 1);
        for p in prime_factors(r.saturating_sub(a.lambda) as u64) {
            let p = p as u32;
            let (ra, rb) = (p_rank(a, p)?, p_rank(b, p)?);
            if ra != rb {
                return Ok(IsoOutcome::different(IsoCertificate::PRank { p, a: ra, b: rb }));
            }
        }
    }
    let (mut pa, mut pb) = (vec![0u32; a.v], vec![0u32; b.v]);
    if a.v <= PROFILE_BUDGET {
        let (fa, fb) = (ia.point_profiles(), ib.point_profiles());
        let (mut sa, mut sb) = (fa.clone(), fb.clone());
        sa.sort();
        sb.sort();
        if sa != sb {
            return Ok(IsoOutcome::different(IsoCertificate::PointProfiles));
        }
        sa.dedup();
        let rank = |f: &Vec<(u32, u32)>| sa.binary_search(f).unwrap() as u32;
        pa = fa.iter().map(rank).collect();
        pb = fb.iter().map(rank).collect();
    }
    let mut search = Search { a: &ia, b: &ib, nodes: 0, limit: opts.node_limit };
    let start = Coloring { pa, pb, ba: vec![0; ia.blocks.len()], bb: vec![0; ib.blocks.len()] };
    match search.run(start)? {
        Some(map) => {
            let witness = map.iter().enumerate().map(|(i, &j)| (a.points[i], b.points[j])).collect();
            Ok(IsoOutcome { isomorphic: true, witness: Some(witness), certificate: IsoCertificate::Search { nodes: search.nodes } })
        }
        None => Ok(IsoOutcome::different(IsoCertificate::Search { nodes: search.nodes })),
    }
}

struct Incidence {
    v: usize,
    blocks: Vec<Vec<usize>>,
    through: Vec<Vec<usize>>,
}

impl Incidence {
    fn new(d: &Design) -> Result<Self, DesignError> {
        let blocks = d.indexed_blocks()?;
        let mut through = vec![Vec::new(); d.v];
        for (j, b) in blocks.iter().enumerate() {
            for &x in b {
                through[x].push(j);
            }
        }
        Ok(Incidence { v: d.v, blocks, through })
    }

    /// Number of unordered block pairs meeting in exactly i points, for each i.
    fn intersection_histogram(&self) -> Vec<u64> {
        let b = self.blocks.len();
        let mut meet = vec![0u16; b * b];
        for t in &self.through {
            for (i, &x) in t.iter().enumerate() {
                for &y in &t[i + 1..] {
                    meet[x * b + y] += 1;
                }
            }
        }
        let k = self.blocks.first().map_or(0, Vec::len);
        let mut hist = vec![0u64; k + 1];
        for x in 0..b {
            for y in x + 1..b {
                hist[meet[x * b + y] as usize] += 1;
            }
        }
        hist
    }

    /// For each point x and each pair of blocks B1, B2 through x: T counts the
    /// other blocks through x that share a point (besides x) with some block
    /// avoiding x and meeting both B1 and B2. Returns the sorted (T, count) list per point.
    fn point_profiles(&self) -> Vec<Vec<(u32, u32)>> {
        let mut pair_blocks: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (j, b) in self.blocks.iter().enumerate() {
            for (i, &x) in b.iter().enumerate() {
                for &y in &b[i + 1..] {
                    pair_blocks.entry((x, y)).or_default().push(j);
                }
            }
        }
        let mut out = Vec::with_capacity(self.v);
        let mut local_of = vec![Vec::<usize>::new(); self.v];
        let mut marked = vec![false; self.v];
        for x in 0..self.v {
            let through = &self.through[x];
            for v in local_of.iter_mut() {
                v.clear();
            }
            for (li, &j) in through.iter().enumerate() {
                for &m in &self.blocks[j] {
                    if m != x {
                        local_of[m].push(li);
                    }
                }
            }
            let mut hist: BTreeMap<u32, u32> = BTreeMap::new();
            let mut hit = vec![false; through.len()];
            let mut touched = Vec::new();
            for i in 0..through.len() {
                for l in i + 1..through.len() {
                    touched.clear();
                    for &s in &self.blocks[through[i]] {
                        for &t in &self.blocks[through[l]] {
                            if s == x || t == x || s == t {
                                continue;
                            }
                            let key = (s.min(t), s.max(t));
                            for &c in pair_blocks.get(&key).into_iter().flatten() {
                                if self.blocks[c].binary_search(&x).is_ok() {
                                    continue;
                                }
                                for &m in &self.blocks[c] {
                                    if !marked[m] {
                                        marked[m] = true;
                                        touched.push(m);
                                    }
                                }
                            }
                        }
                    }
                    hit.iter_mut().for_each(|h| *h = false);
                    for &m in &touched {
                        marked[m] = false;
                        for &li in &local_of[m] {
                            hit[li] = true;
                        }
                    }
                    let t = hit.iter().enumerate().filter(|&(li, &h)| h && li != i && li != l).count();
                    *hist.entry(t as u32).or_default() += 1;
                }
            }
            out.push(hist.into_iter().collect());
        }
        out
    }
}

#[derive(Clone)]
struct Coloring {
    pa: Vec<u32>,
    pb: Vec<u32>,
    ba: Vec<u32>,
    bb: Vec<u32>,
}

fn histogram(colors: &[u32]) -> Vec<u32> {
    let mut h = vec![0u32; colors.iter().max().map_or(0, |&m| m as usize + 1)];
    for &c in colors {
        h[c as usize] += 1;
    }
    h
}

/// Replaces each signature by its rank among the signatures of both sides.
/// Returns false if the color histograms differ.
fn joint_rank(sa: Vec<Vec<u32>>, sb: Vec<Vec<u32>>, ca: &mut [u32], cb: &mut [u32]) -> bool {
    let mut all: Vec<&Vec<u32>> = sa.iter().chain(sb.iter()).collect();
    all.sort_unstable();
    all.dedup();
    let rank = |s: &Vec<u32>| all.binary_search(&s).unwrap() as u32;
    for (c, s) in ca.iter_mut().zip(&sa) {
        *c = rank(s);
    }
    for (c, s) in cb.iter_mut().zip(&sb) {
        *c = rank(s);
    }
    histogram(ca) == histogram(cb)
}

fn signatures(own: &[u32], members: &[Vec<usize>], other: &[u32]) -> Vec<Vec<u32>> {
    own.iter()
        .zip(members)
        .map(|(&c, m)| {
            let mut s = Vec::with_capacity(m.len() + 1);
            s.extend(m.iter().map(|&i| other[i]));
            s.sort_unstable();
            s.insert(0, c);
            s
        })
        .collect()
}

fn class_count(colors: &[u32]) -> usize {
    colors.iter().collect::<HashSet<_>>().len()
}

struct Search<'a> {
    a: &'a Incidence,
    b: &'a Incidence,
    nodes: u64,
    limit: Option<u64>,
}

impl Search<'_> {
    /// Refines to a stable joint coloring; false if the two sides diverge.
    fn refine(&self, c: &mut Coloring) -> bool {
        let mut classes = usize::MAX;
        loop {
            let sa = signatures(&c.ba, &self.a.blocks, &c.pa);
            let sb = signatures(&c.bb, &self.b.blocks, &c.pb);
            if !joint_rank(sa, sb, &mut c.ba, &mut c.bb) {
                return false;
            }
            let sa = signatures(&c.pa, &self.a.through, &c.ba);
            let sb = signatures(&c.pb, &self.b.through, &c.bb);
            if !joint_rank(sa, sb, &mut c.pa, &mut c.pb) {
                return false;
            }
            let now = class_count(&c.pa) + class_count(&c.ba);
            if now == classes {
                return true;
            }
            classes = now;
        }
    }

    fn run(&mut self, mut c: Coloring) -> Result<Option<Vec<usize>>, DesignError> {
        self.nodes += 1;
        if let Some(limit) = self.limit {
            if self.nodes > limit {
                return Err(DesignError::SearchBudgetExceeded(limit));
            }
        }
        if !self.refine(&mut c) {
            return Ok(None);
        }
        let hist = histogram(&c.pa);
        let Some(cell) = hist.iter().position(|&n| n > 1) else {
            return Ok(self.leaf(&c));
        };
        let cell = cell as u32;
        let x = c.pa.iter().position(|&col| col == cell).unwrap();
        let fresh = hist.len() as u32;
        for y in (0..self.b.v).filter(|&y| c.pb[y] == cell) {
            let mut next = c.clone();
            next.pa[x] = fresh;
            next.pb[y] = fresh;
            if let Some(map) = self.run(next)? {
                return Ok(Some(map));
            }
        }
        Ok(None)
    }

    fn leaf(&self, c: &Coloring) -> Option<Vec<usize>> {
        let mut of_color = vec![0usize; self.b.v];
        for (y, &col) in c.pb.iter().enumerate() {
            of_color[col as usize] = y;
        }
        let map: Vec<usize> = c.pa.iter().map(|&col| of_color[col as usize]).collect();
        let target: HashSet<&Vec<usize>> = self.b.blocks.iter().collect();
        let ok = self.a.blocks.iter().all(|blk| {
            let mut img: Vec<usize> = blk.iter().map(|&x| map[x]).collect();
            img.sort_unstable();
            target.contains(&img)
        });
        ok.then_some(map)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::pg_point_line_design;

    fn shuffled(d: &Design, seed: u64) -> Design {
        let mut labels = d.points.clone();
        let mut s = seed;
        for i in (1..labels.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            labels.swap(i, (s >> 33) as usize % (i + 1));
        }
        let perm: HashMap<u32, u32> = d.points.iter().copied().zip(labels).collect();
        d.relabeled(&perm)
    }

    fn check_witness(a: &Design, b: &Design, w: &BTreeMap<u32, u32>) {
        let perm: HashMap<u32, u32> = w.iter().map(|(&x, &y)| (x, y)).collect();
        let image = a.relabeled(&perm);
        let mut blocks = b.blocks.iter().map(|blk| {
            let mut s = blk.clone();
            s.sort_unstable();
            s
        }).collect::<Vec<_>>();
        blocks.sort();
        assert_eq!(image.blocks, blocks);
    }

    #[test]
    fn relabeled_projective_spaces_are_isomorphic() {
        for (n, p, seed) in [(2u32, 2u32, 1u64), (2, 3, 2), (3, 2, 3), (4, 2, 4)] {
            let a = pg_point_line_design(n, p).unwrap();
            let b = shuffled(&a, seed);
            let out = designs_isomorphic(&a, &b).unwrap();
            assert!(out.isomorphic, "PG({n},{p})");
            check_witness(&a, &b, out.witness.as_ref().unwrap());
        }
    }

    #[test]
    fn parameter_mismatch() {
        let a = pg_point_line_design(2, 2).unwrap();
        let b = pg_point_line_design(2, 3).unwrap();
        let out = designs_isomorphic(&a, &b).unwrap();
        assert_eq!(out.certificate, IsoCertificate::Parameters);
        assert!(!out.isomorphic);
    }

    #[test]
    fn profiles_of_projective_space_are_constant() {
        let d = pg_point_line_design(3, 2).unwrap();
        let prof = Incidence::new(&d).unwrap().point_profiles();
        // the plane through two lines of PG(3,2) has 3 lines through the point
        assert!(prof.iter().all(|p| p == &vec![(1, 21)]));
    }

    #[test]
    fn budget_is_reported() {
        let a = pg_point_line_design(3, 2).unwrap();
        let b = shuffled(&a, 9);
        let err = designs_isomorphic_with(&a, &b, IsoOptions { node_limit: Some(1) }).unwrap_err();
        assert_eq!(err, DesignError::SearchBudgetExceeded(1));
    }

    #[test]
    fn perturbed_design_is_rejected() {
        let a = pg_point_line_design(2, 3).unwrap();
        let mut b = shuffled(&a, 5);
        let outsider = *b.points.iter().find(|p| !b.blocks[0].contains(p)).unwrap();
        b.blocks[0][0] = outsider;
        let out = designs_isomorphic(&a, &b).unwrap();
        assert!(!out.isomorphic);
        assert_eq!(out.certificate, IsoCertificate::BlockIntersections);
    }
}
