//! The design data model and its verification operations.

mod admissible;
mod iso;
mod pg;
mod rank;

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{FieldElement, FieldError, FieldSpec, FieldTable};

pub use admissible::{admissible_field_orders, admissible_primes, least_order_per_prime, PrimePower};
pub use iso::{designs_isomorphic, designs_isomorphic_with, IsoCertificate, IsoOptions, IsoOutcome};
pub use pg::{canonical_projective, is_projective_line, pg_point_line_design, PG_POINT_BUDGET};
pub use rank::{incidence_rank, p_rank};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DesignError {
    #[error("malformed block {index}: {reason}")]
    MalformedBlock { index: usize, reason: String },
    #[error("malformed design: {0}")]
    MalformedDesign(String),
    #[error("parameters (v={v}, k={k}) violate v > k > 2")]
    DegenerateParameters { v: usize, k: usize },
    #[error("parameters (v={v}, k={k}) are inadmissible: {reason}")]
    DesignParametersInadmissible { v: u64, k: u64, reason: String },
    #[error("design has no field embedding")]
    MissingEmbedding,
    #[error("embedding is incomplete: point {0} has no image")]
    IncompleteEmbedding(u32),
    #[error("embedding is not injective: code {code} is the image of points {a} and {b}")]
    NonInjectiveEmbedding { code: u32, a: u32, b: u32 },
    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },
    #[error("size budget exceeded: {0}")]
    SizeBudgetExceeded(String),
    #[error("element {0} is not a canonical projective representative")]
    NonCanonicalRepresentative(u32),
    #[error("isomorphism search exceeded {0} nodes")]
    SearchBudgetExceeded(u64),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// A field embedding of the point set: point label -> element code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Embedding {
    pub field: FieldSpec,
    pub map: BTreeMap<u32, u32>,
}

/// Points, blocks and an optional embedding of the points into a field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Design {
    pub v: usize,
    pub k: usize,
    pub lambda: usize,
    pub points: Vec<u32>,
    pub blocks: Vec<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Embedding>,
}

impl Design {
    /// Builds and structurally validates a design, including v > k > 2.
    pub fn new(points: Vec<u32>, k: usize, lambda: usize, blocks: Vec<Vec<u32>>) -> Result<Self, DesignError> {
        let d = Design { v: points.len(), k, lambda, points, blocks, embedding: None };
        d.validate()?;
        d.check_parameters()?;
        Ok(d)
    }

    pub fn with_embedding(mut self, embedding: Embedding) -> Self {
        self.embedding = Some(embedding);
        self
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn check_parameters(&self) -> Result<(), DesignError> {
        if !(self.v > self.k && self.k > 2) {
            return Err(DesignError::DegenerateParameters { v: self.v, k: self.k });
        }
        Ok(())
    }

    /// Point labels distinct, every block a k-subset of the points.
    pub fn validate(&self) -> Result<(), DesignError> {
        self.indexed_blocks().map(|_| ())
    }

    pub(crate) fn point_index(&self) -> Result<HashMap<u32, usize>, DesignError> {
        if self.points.len() != self.v {
            return Err(DesignError::MalformedDesign(format!(
                "v = {} but {} point labels given",
                self.v,
                self.points.len()
            )));
        }
        let mut idx = HashMap::with_capacity(self.v);
        for (i, &p) in self.points.iter().enumerate() {
            if idx.insert(p, i).is_some() {
                return Err(DesignError::MalformedDesign(format!("point label {p} repeated")));
            }
        }
        Ok(idx)
    }

    /// Blocks rewritten over point indices 0..v, each sorted.
    pub(crate) fn indexed_blocks(&self) -> Result<Vec<Vec<usize>>, DesignError> {
        let idx = self.point_index()?;
        let mut out = Vec::with_capacity(self.blocks.len());
        for (bi, block) in self.blocks.iter().enumerate() {
            if block.len() != self.k {
                return Err(DesignError::MalformedBlock {
                    index: bi,
                    reason: format!("size {} != k = {}", block.len(), self.k),
                });
            }
            let mut ib = Vec::with_capacity(block.len());
            for p in block {
                match idx.get(p) {
                    Some(&i) => ib.push(i),
                    None => {
                        return Err(DesignError::MalformedBlock { index: bi, reason: format!("unknown point {p}") })
                    }
                }
            }
            ib.sort_unstable();
            if ib.windows(2).any(|w| w[0] == w[1]) {
                return Err(DesignError::MalformedBlock { index: bi, reason: "repeated point".into() });
            }
            out.push(ib);
        }
        Ok(out)
    }

    /// Builds the field named by the embedding and checks the embedding is total and injective.
    pub fn embedded_field(&self) -> Result<(FieldTable, Vec<FieldElement>), DesignError> {
        let emb = self.embedding.as_ref().ok_or(DesignError::MissingEmbedding)?;
        let field = FieldTable::build(emb.field.clone())?;
        let mut seen: HashMap<u32, u32> = HashMap::with_capacity(self.v);
        let mut images = Vec::with_capacity(self.v);
        for &p in &self.points {
            let code = *emb.map.get(&p).ok_or(DesignError::IncompleteEmbedding(p))?;
            field.check(FieldElement(code))?;
            if let Some(&other) = seen.get(&code) {
                return Err(DesignError::NonInjectiveEmbedding { code, a: other, b: p });
            }
            seen.insert(code, p);
            images.push(FieldElement(code));
        }
        Ok((field, images))
    }

    /// Field sum of all embedded points.
    pub fn embedded_point_sum(&self) -> Result<FieldElement, DesignError> {
        let (field, images) = self.embedded_field()?;
        Ok(field.sum(images))
    }

    /// The same design with point labels renamed through `perm` (old label -> new label).
    pub fn relabeled(&self, perm: &HashMap<u32, u32>) -> Design {
        let map = |p: &u32| perm.get(p).copied().unwrap_or(*p);
        let mut blocks: Vec<Vec<u32>> = self
            .blocks
            .iter()
            .map(|b| {
                let mut nb: Vec<u32> = b.iter().map(map).collect();
                nb.sort_unstable();
                nb
            })
            .collect();
        blocks.sort();
        let mut points: Vec<u32> = self.points.iter().map(map).collect();
        points.sort_unstable();
        let embedding = self.embedding.as_ref().map(|e| Embedding {
            field: e.field.clone(),
            map: e.map.iter().map(|(p, c)| (map(p), *c)).collect(),
        });
        Design { v: self.v, k: self.k, lambda: self.lambda, points, blocks, embedding }
    }
}

/// r = lambda (v-1)/(k-1), kept as a reduced fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Replication {
    pub numerator: u64,
    pub denominator: u64,
    pub integral: bool,
}

impl Replication {
    pub fn new(v: usize, k: usize, lambda: usize) -> Self {
        let num = (lambda * v.saturating_sub(1)) as u64;
        let den = k.saturating_sub(1).max(1) as u64;
        let g = gcd(num, den).max(1);
        let (numerator, denominator) = (num / g, den / g);
        Replication { numerator, denominator, integral: denominator == 1 }
    }

    pub fn value(&self) -> Option<u64> {
        self.integral.then_some(self.numerator)
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairFailure {
    pub a: u32,
    pub b: u32,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub is_2_design: bool,
    pub lambda_min: usize,
    pub lambda_max: usize,
    pub replication: Replication,
    pub failures: Vec<PairFailure>,
}

/// Checks that every unordered pair of points lies in exactly `lambda` blocks.
pub fn verify_design(d: &Design) -> Result<VerificationReport, DesignError> {
    let blocks = d.indexed_blocks()?;
    let v = d.v;
    let mut counts = vec![0u32; v * v];
    for b in &blocks {
        for (i, &x) in b.iter().enumerate() {
            for &y in &b[i + 1..] {
                counts[x * v + y] += 1;
            }
        }
    }
    let (mut lo, mut hi) = (usize::MAX, 0usize);
    let mut failures = Vec::new();
    for x in 0..v {
        for y in x + 1..v {
            let c = counts[x * v + y] as usize;
            lo = lo.min(c);
            hi = hi.max(c);
            if c != d.lambda {
                failures.push(PairFailure { a: d.points[x], b: d.points[y], count: c });
            }
        }
    }
    if v < 2 {
        lo = 0;
    }
    Ok(VerificationReport {
        is_2_design: failures.is_empty(),
        lambda_min: lo,
        lambda_max: hi,
        replication: Replication::new(d.v, d.k, d.lambda),
        failures,
    })
}

/// Every block sums to zero under the embedding.
pub fn is_additive(d: &Design) -> Result<bool, DesignError> {
    let (field, images) = d.embedded_field()?;
    let blocks = d.indexed_blocks()?;
    Ok(blocks.iter().all(|b| field.sum(b.iter().map(|&i| images[i])).is_zero()))
}

/// Parallel classes as lists of block indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub classes: Vec<Vec<usize>>,
}

/// Classes partition the blocks and each class partitions the points.
pub fn verify_resolution(d: &Design, r: &Resolution) -> Result<bool, DesignError> {
    let blocks = d.indexed_blocks()?;
    for class in &r.classes {
        if let Some(&bad) = class.iter().find(|&&i| i >= blocks.len()) {
            return Err(DesignError::IndexOutOfRange { index: bad, limit: blocks.len() });
        }
    }
    let mut used = vec![false; blocks.len()];
    for class in &r.classes {
        let mut covered = vec![false; d.v];
        for &bi in class {
            if std::mem::replace(&mut used[bi], true) {
                return Ok(false);
            }
            for &p in &blocks[bi] {
                if std::mem::replace(&mut covered[p], true) {
                    return Ok(false);
                }
            }
        }
        if covered.iter().any(|c| !c) {
            return Ok(false);
        }
    }
    Ok(used.iter().all(|&u| u))
}

/// Sorted block list, convenient for set comparisons in tests and searches.
pub fn block_set(d: &Design) -> HashSet<Vec<u32>> {
    d.blocks
        .iter()
        .map(|b| {
            let mut b = b.clone();
            b.sort_unstable();
            b
        })
        .collect()
}
