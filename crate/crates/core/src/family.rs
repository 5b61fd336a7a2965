//! Difference families in R_{q,m} and their development into designs.
//!
//! Base blocks are exponent vectors with respect to the canonical generator
//! g = x^((q-1)/m) of G = R_{q,m}. Developed designs label the point g^e by
//! e, and the extra point of a 1-rotational design by m; the embedding sends
//! e to the code of g^e and the extra point to the field zero.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design::{verify_resolution, Design, DesignError, Embedding, Resolution};
use crate::field::{FieldError, FieldSpec, FieldTable, UnityRoots};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FamilyError {
    #[error("mode {mode} needs |G| = {want} mod {modulus} and |H| = {subgroup}, got |G| = {group_order}, |H| = {forbidden_order}")]
    ModeMismatch { mode: DevelopmentMode, group_order: u32, forbidden_order: u32, modulus: u32, want: u32, subgroup: u32 },
    #[error("not a difference family: {0} group elements covered the wrong number of times")]
    InvalidFamily(usize),
    #[error("unknown family name {0:?}")]
    UnknownFamilyName(String),
    #[error("forbidden subgroup order {h} must divide |G| = {m} and be 1, k or k-1")]
    BadSubgroup { m: u32, h: u32 },
    #[error("base block {index}: {reason}")]
    BadBaseBlock { index: usize, reason: String },
    #[error("translates collide: block {0:?} appears twice")]
    DuplicateBlock(Vec<u32>),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Design(#[from] DesignError),
}

/// Development modes, keyed on |G| mod k(k-1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DevelopmentMode {
    /// |G| = 1 mod k(k-1), H trivial; translates only.
    CyclicV1,
    /// |G| = k mod k(k-1), |H| = k; translates plus the cosets of H.
    CyclicVK,
    /// |G| = k-1 mod k(k-1), |H| = k-1; translates plus each coset of H with the field zero added.
    OneRotational,
}

impl fmt::Display for DevelopmentMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DevelopmentMode::CyclicV1 => "cyclic-v1",
            DevelopmentMode::CyclicVK => "cyclic-vk",
            DevelopmentMode::OneRotational => "one-rotational",
        };
        f.write_str(s)
    }
}

impl DevelopmentMode {
    /// The mode implied by |G| and k, if any.
    pub fn infer(group_order: u32, k: usize) -> Option<Self> {
        let k = k as u32;
        let r = group_order % (k * (k - 1));
        match r {
            1 => Some(DevelopmentMode::CyclicV1),
            _ if r == k => Some(DevelopmentMode::CyclicVK),
            _ if r == k - 1 => Some(DevelopmentMode::OneRotational),
            _ => None,
        }
    }

    fn residue_and_subgroup(self, k: u32) -> (u32, u32) {
        match self {
            DevelopmentMode::CyclicV1 => (1, 1),
            DevelopmentMode::CyclicVK => (k, k),
            DevelopmentMode::OneRotational => (k - 1, k - 1),
        }
    }
}

/// A (G, H, k, lambda) difference family with G = R_{q,m}.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DifferenceFamily {
    pub field: FieldSpec,
    pub group_order: u32,
    pub forbidden_order: u32,
    pub k: usize,
    pub lambda: usize,
    pub base_blocks: Vec<Vec<u32>>,
}

/// Over- or under-covered group element g^exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Defect {
    pub exponent: u32,
    pub expected: usize,
    pub observed: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DfValidation {
    pub valid: bool,
    pub defects: Vec<Defect>,
}

impl DifferenceFamily {
    /// Field and group G, after checking the structural invariants.
    pub fn group(&self) -> Result<UnityRoots, FamilyError> {
        let field = FieldTable::shared(self.field.clone())?;
        let group = UnityRoots::new(&field, self.group_order)?;
        let (m, h, k) = (self.group_order, self.forbidden_order, self.k as u32);
        if h == 0 || m % h != 0 || !(h == 1 || h == k || h + 1 == k) {
            return Err(FamilyError::BadSubgroup { m, h });
        }
        for (index, b) in self.base_blocks.iter().enumerate() {
            let bad = |reason: String| FamilyError::BadBaseBlock { index, reason };
            if b.len() != self.k {
                return Err(bad(format!("size {} != k = {}", b.len(), self.k)));
            }
            if let Some(&e) = b.iter().find(|&&e| e >= m) {
                return Err(bad(format!("exponent {e} out of range for |G| = {m}")));
            }
            if b.iter().collect::<HashSet<_>>().len() != b.len() {
                return Err(bad("repeated element".into()));
            }
        }
        Ok(group)
    }

    /// Every base block multiplied by g^shift.
    pub fn shifted(&self, shift: u32) -> DifferenceFamily {
        let m = self.group_order;
        let base_blocks =
            self.base_blocks.iter().map(|b| b.iter().map(|&e| (e + shift % m) % m).collect()).collect();
        DifferenceFamily { base_blocks, ..self.clone() }
    }
}

/// Exponents of x y^(-1) over ordered pairs of distinct elements within each base block.
pub fn differences(f: &DifferenceFamily) -> Vec<u32> {
    let m = f.group_order;
    let mut out = Vec::with_capacity(f.base_blocks.len() * f.k * f.k.saturating_sub(1));
    for b in &f.base_blocks {
        for (i, &x) in b.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                if i != j {
                    out.push((x + m - y % m) % m);
                }
            }
        }
    }
    out
}

/// Checks that the differences are lambda times G \ H.
pub fn validate_df(f: &DifferenceFamily) -> Result<DfValidation, FamilyError> {
    f.group()?;
    let (m, h) = (f.group_order, f.forbidden_order);
    let mut count = vec![0usize; m as usize];
    for e in differences(f) {
        count[e as usize] += 1;
    }
    let step = m / h;
    let defects: Vec<Defect> = count
        .iter()
        .enumerate()
        .filter_map(|(e, &observed)| {
            let expected = if (e as u32).is_multiple_of(step) { 0 } else { f.lambda };
            (observed != expected).then_some(Defect { exponent: e as u32, expected, observed })
        })
        .collect();
    Ok(DfValidation { valid: defects.is_empty(), defects })
}

/// Develops a validated family; see [`develop_unchecked`] for the block layout.
pub fn develop(f: &DifferenceFamily, mode: DevelopmentMode) -> Result<Design, FamilyError> {
    check_mode(f, mode)?;
    let report = validate_df(f)?;
    if !report.valid {
        return Err(FamilyError::InvalidFamily(report.defects.len()));
    }
    develop_unchecked(f, mode)
}

fn check_mode(f: &DifferenceFamily, mode: DevelopmentMode) -> Result<(), FamilyError> {
    let k = f.k as u32;
    let modulus = k * k.saturating_sub(1);
    let (want, subgroup) = mode.residue_and_subgroup(k);
    if modulus == 0 || f.group_order % modulus != want % modulus || f.forbidden_order != subgroup {
        return Err(FamilyError::ModeMismatch {
            mode,
            group_order: f.group_order,
            forbidden_order: f.forbidden_order,
            modulus,
            want,
            subgroup,
        });
    }
    Ok(())
}

/// Translates B g^h for each base block (family order) and h = 0..m, then the
/// coset blocks of the forbidden subgroup, without checking the differences.
/// Colliding blocks are still rejected.
pub fn develop_unchecked(f: &DifferenceFamily, mode: DevelopmentMode) -> Result<Design, FamilyError> {
    let group = f.group()?;
    let m = f.group_order;
    let mut blocks: Vec<Vec<u32>> = Vec::new();
    for b in &f.base_blocks {
        for h in 0..m {
            let mut t: Vec<u32> = b.iter().map(|&e| (e + h) % m).collect();
            t.sort_unstable();
            blocks.push(t);
        }
    }
    let infinity = m;
    let mut points: Vec<u32> = (0..m).collect();
    if mode != DevelopmentMode::CyclicV1 {
        let h = f.forbidden_order;
        let step = m / h;
        for c in 0..step {
            let mut coset: Vec<u32> = (0..h).map(|j| c + j * step).collect();
            if mode == DevelopmentMode::OneRotational {
                coset.push(infinity);
            }
            blocks.push(coset);
        }
    }
    if mode == DevelopmentMode::OneRotational {
        points.push(infinity);
    }
    let mut seen = HashSet::with_capacity(blocks.len());
    for b in &blocks {
        if !seen.insert(b) {
            return Err(FamilyError::DuplicateBlock(b.clone()));
        }
    }
    let mut map: BTreeMap<u32, u32> = (0..m).map(|e| (e, group.element(e as i64).code())).collect();
    if mode == DevelopmentMode::OneRotational {
        map.insert(infinity, 0);
    }
    let design = Design::new(points, f.k, f.lambda, blocks)?;
    Ok(design.with_embedding(Embedding { field: f.field.clone(), map }))
}

/// A stored family together with the mode it develops in and, when known, a resolution
/// of the developed design (block indices into `develop(&family, mode)`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaperFamily {
    pub name: String,
    pub family: DifferenceFamily,
    pub mode: DevelopmentMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<Resolution>,
}

pub const PAPER_FAMILY_NAMES: [&str; 5] = ["52-4-1", "121-4-1-1", "121-4-1-2", "121-4-1-3", "121-4-1-4"];

const B52: [[u32; 4]; 4] = [[1, 12, 16, 39], [3, 4, 13, 48], [6, 8, 26, 45], [7, 10, 15, 36]];

const A121: [[u32; 4]; 4] = [[0, 1, 5, 69], [0, 1, 21, 55], [0, 1, 52, 93], [0, 1, 65, 78]];
const B121: [[u32; 4]; 4] = [[0, 2, 46, 74], [0, 4, 79, 95], [0, 4, 15, 78], [0, 2, 25, 116]];

pub fn paper_family(name: &str) -> Result<PaperFamily, FamilyError> {
    match name {
        "52-4-1" => family_52(),
        _ => {
            let i = name
                .strip_prefix("121-4-1-")
                .and_then(|s| s.parse::<usize>().ok())
                .filter(|i| (1..=4).contains(i))
                .ok_or_else(|| FamilyError::UnknownFamilyName(name.to_string()))?;
            Ok(family_121(i))
        }
    }
}

fn family_52() -> Result<PaperFamily, FamilyError> {
    let family = DifferenceFamily {
        field: FieldSpec::gf256(),
        group_order: 51,
        forbidden_order: 3,
        k: 4,
        lambda: 1,
        base_blocks: B52.iter().map(|b| b.to_vec()).collect(),
    };
    let mode = DevelopmentMode::OneRotational;
    let design = develop(&family, mode)?;
    let index: std::collections::HashMap<&Vec<u32>, usize> =
        design.blocks.iter().enumerate().map(|(i, b)| (b, i)).collect();
    let lookup = |mut b: Vec<u32>| -> Result<usize, FamilyError> {
        b.sort_unstable();
        index.get(&b).copied().ok_or_else(|| DesignError::MalformedDesign(format!("resolution block {b:?} missing")).into())
    };
    let mut classes = Vec::with_capacity(17);
    for h in 0..17u32 {
        let mut class = Vec::with_capacity(13);
        for i in 0..3u32 {
            for b in &B52 {
                class.push(lookup(b.iter().map(|&e| (e + 17 * i + h) % 51).collect())?);
            }
        }
        class.push(lookup(vec![h, h + 17, h + 34, 51])?);
        classes.push(class);
    }
    let resolution = Resolution { classes };
    if !verify_resolution(&design, &resolution)? {
        return Err(FamilyError::Design(DesignError::MalformedDesign("stored resolution does not verify".into())));
    }
    Ok(PaperFamily { name: "52-4-1".into(), family, mode, resolution: Some(resolution) })
}

/// Base blocks A_i^(3^j), B_i^(3^j) for j = 0..4: the images under the Frobenius map of GF(243).
fn family_121(i: usize) -> PaperFamily {
    let mut base_blocks = Vec::with_capacity(10);
    let mut mult = 1u32;
    for _ in 0..5 {
        for b in [&A121[i - 1], &B121[i - 1]] {
            let mut img: Vec<u32> = b.iter().map(|&e| e * mult % 121).collect();
            img.sort_unstable();
            base_blocks.push(img);
        }
        mult *= 3;
    }
    let family = DifferenceFamily {
        field: FieldSpec::gf243(),
        group_order: 121,
        forbidden_order: 1,
        k: 4,
        lambda: 1,
        base_blocks,
    };
    PaperFamily { name: format!("121-4-1-{i}"), family, mode: DevelopmentMode::CyclicV1, resolution: None }
}
