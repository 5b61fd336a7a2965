//! GF(2)-subspaces of GF(2^v), their Singer orbits and Kramer-Mesner matrices.
//!
//! A subspace is stored as the sorted list of its nonzero member codes. The
//! Singer cycle is multiplication by the primitive element x. Every orbit
//! contains a subspace through 1, and its lexicographically least member list
//! starts with 1, so orbit representatives are found among the subspaces
//! through 1 by minimizing over the normalizations S a^(-1), a in S.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design::{Design, DesignError, Embedding};
use crate::field::{FieldElement, FieldError, FieldSpec, FieldTable};

/// Upper bound on the number of subspaces materialized by [`enumerate_subspaces`].
pub const SUBSPACE_BUDGET: u64 = 4_000_000;
/// Upper bound on the number of subspaces through 1 scanned by [`orbit_representatives`].
pub const THROUGH_ONE_BUDGET: u64 = 8_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SubspaceError {
    #[error("field must have characteristic 2, got {0}")]
    NotBinary(u32),
    #[error("dimension {dim} out of range for v = {v}")]
    DimensionOutOfRange { dim: u32, v: u32 },
    #[error("size budget exceeded: {0}")]
    SizeBudgetExceeded(String),
    #[error("mixed dimensions in subspace list")]
    MixedDimensions,
    #[error("column {0} out of range or not compatible")]
    BadColumn(usize),
    #[error("malformed km dump at line {line}: {reason}")]
    MalformedDump { line: usize, reason: String },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Design(#[from] DesignError),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Subspace {
    pub dim: u32,
    /// The 2^dim - 1 nonzero members, ascending.
    pub members: Vec<u32>,
}

impl Subspace {
    pub fn from_basis(basis: &[u32]) -> Subspace {
        let mut members = Vec::with_capacity((1 << basis.len()) - 1);
        for mask in 1u32..1 << basis.len() {
            let mut s = 0;
            for (i, &b) in basis.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    s ^= b;
                }
            }
            members.push(s);
        }
        members.sort_unstable();
        Subspace { dim: basis.len() as u32, members }
    }

    pub fn key(&self) -> &[u32] {
        &self.members
    }

    /// members together with 0 are closed under addition.
    pub fn is_closed(&self) -> bool {
        self.members.len() == (1usize << self.dim) - 1
            && self.members.windows(2).all(|w| w[0] < w[1])
            && self.members.iter().all(|&a| {
                self.members.iter().all(|&b| a == b || self.members.binary_search(&(a ^ b)).is_ok())
            })
    }

    pub fn contains(&self, code: u32) -> bool {
        self.members.binary_search(&code).is_ok()
    }

    pub fn scaled(&self, field: &FieldTable, a: FieldElement) -> Subspace {
        let mut members: Vec<u32> = self.members.iter().map(|&m| field.mul(FieldElement(m), a).0).collect();
        members.sort_unstable();
        Subspace { dim: self.dim, members }
    }

    /// The 2-dimensional subspaces inside, each as {a, b, a^b} with a < b < a^b.
    pub fn lines(&self) -> impl Iterator<Item = [u32; 3]> + '_ {
        self.members.iter().enumerate().flat_map(move |(i, &a)| {
            self.members[i + 1..].iter().filter(move |&&b| a ^ b > b).map(move |&b| [a, b, a ^ b])
        })
    }

    fn packed(&self, bits: u32) -> u128 {
        self.members.iter().fold(0u128, |acc, &m| acc << bits | m as u128)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubspaceOrbit {
    pub index: usize,
    pub representative: Subspace,
    pub size: u32,
}

fn binary_degree(field: &FieldTable) -> Result<u32, SubspaceError> {
    if field.characteristic() != 2 {
        return Err(SubspaceError::NotBinary(field.characteristic()));
    }
    Ok(field.degree())
}

/// Gaussian binomial [n choose d]_q, saturating.
pub fn gaussian_binomial(n: u32, d: u32, q: u64) -> u128 {
    if d > n {
        return 0;
    }
    let q = q as u128;
    let mut num = 1u128;
    let mut den = 1u128;
    for i in 0..d {
        num = num.saturating_mul(q.saturating_pow(n - i).saturating_sub(1));
        den = den.saturating_mul(q.pow(d - i) - 1);
    }
    num / den
}

/// Calls `f` with the basis of every dim-dimensional subspace of span(bits lo..lo+n),
/// in reduced echelon form with descending pivots.
fn for_each_rref(n: u32, dim: u32, lo: u32, f: &mut impl FnMut(&[u32])) {
    fn pivots(n: u32, dim: u32, start: u32, acc: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if acc.len() == dim as usize {
            out.push(acc.clone());
            return;
        }
        for p in start..n {
            acc.push(p);
            pivots(n, dim, p + 1, acc, out);
            acc.pop();
        }
    }
    let mut sets = Vec::new();
    pivots(n, dim, 0, &mut Vec::new(), &mut sets);
    let mut basis = vec![0u32; dim as usize];
    for piv in sets {
        // row r has leading bit piv[r]; free positions are non-pivot bits below it
        let pivot_mask: u32 = piv.iter().map(|&p| 1u32 << p).sum();
        let free: Vec<Vec<u32>> =
            piv.iter().map(|&p| (0..p).filter(|&b| pivot_mask >> b & 1 == 0).collect()).collect();
        let total_free: u32 = free.iter().map(|f| f.len() as u32).sum();
        for assignment in 0u64..1u64 << total_free {
            let mut bit = 0;
            for (r, &p) in piv.iter().enumerate() {
                let mut row = 1u32 << p;
                for &b in &free[r] {
                    if assignment >> bit & 1 == 1 {
                        row |= 1 << b;
                    }
                    bit += 1;
                }
                basis[r] = row << lo;
            }
            f(&basis);
        }
    }
}

/// Every dim-dimensional GF(2)-subspace of GF(2^v), once each.
pub fn enumerate_subspaces(field: &FieldTable, dim: u32) -> Result<Vec<Subspace>, SubspaceError> {
    let v = binary_degree(field)?;
    if dim == 0 || dim > v {
        return Err(SubspaceError::DimensionOutOfRange { dim, v });
    }
    let count = gaussian_binomial(v, dim, 2);
    if count > SUBSPACE_BUDGET as u128 {
        return Err(SubspaceError::SizeBudgetExceeded(format!("{count} subspaces of dimension {dim}")));
    }
    let mut out = Vec::with_capacity(count as usize);
    for_each_rref(v, dim, 0, &mut |b| out.push(Subspace::from_basis(b)));
    Ok(out)
}

fn check_key_width(v: u32, dim: u32) -> Result<(), SubspaceError> {
    if ((1u64 << dim) - 1) * v as u64 > 128 {
        return Err(SubspaceError::SizeBudgetExceeded(format!("keys of {dim}-subspaces of GF(2^{v})")));
    }
    Ok(())
}

/// Orbits under multiplication by x, found by walking each unvisited subspace around its orbit.
pub fn singer_orbits(subspaces: &[Subspace], field: &FieldTable) -> Result<Vec<SubspaceOrbit>, SubspaceError> {
    let v = binary_degree(field)?;
    let Some(dim) = subspaces.first().map(|s| s.dim) else {
        return Ok(Vec::new());
    };
    if subspaces.iter().any(|s| s.dim != dim) {
        return Err(SubspaceError::MixedDimensions);
    }
    check_key_width(v, dim)?;
    let x = field.primitive();
    let mut visited: HashMap<u128, ()> = HashMap::with_capacity(subspaces.len());
    let mut orbits = Vec::new();
    for s in subspaces {
        if visited.contains_key(&s.packed(v)) {
            continue;
        }
        let mut rep = s.clone();
        let mut cur = s.clone();
        let mut size = 0u32;
        loop {
            visited.insert(cur.packed(v), ());
            size += 1;
            cur = cur.scaled(field, x);
            if cur.members < rep.members {
                rep = cur.clone();
            }
            if cur == *s {
                break;
            }
        }
        orbits.push(SubspaceOrbit { index: 0, representative: rep, size });
    }
    orbits.sort_by(|a, b| a.representative.cmp(&b.representative));
    for (i, o) in orbits.iter_mut().enumerate() {
        o.index = i;
    }
    Ok(orbits)
}

/// The least of the normalizations S a^(-1), a in S.
pub fn canonical_through_one(s: &Subspace, field: &FieldTable) -> Subspace {
    s.members
        .iter()
        .map(|&a| s.scaled(field, field.inv(FieldElement(a)).expect("nonzero member")))
        .min()
        .expect("nonempty subspace")
}

/// Singer orbits of dim-subspaces without enumerating them all: scans only the subspaces through 1.
pub fn orbit_representatives(field: &FieldTable, dim: u32) -> Result<Vec<SubspaceOrbit>, SubspaceError> {
    let v = binary_degree(field)?;
    if dim == 0 || dim > v {
        return Err(SubspaceError::DimensionOutOfRange { dim, v });
    }
    let through_one = gaussian_binomial(v - 1, dim - 1, 2);
    if through_one > THROUGH_ONE_BUDGET as u128 {
        return Err(SubspaceError::SizeBudgetExceeded(format!("{through_one} subspaces through 1")));
    }
    check_key_width(v, dim)?;
    let mut hits: HashMap<u128, (Subspace, u32)> = HashMap::new();
    for_each_rref(v - 1, dim - 1, 1, &mut |b| {
        let mut basis = b.to_vec();
        basis.push(1);
        let canon = canonical_through_one(&Subspace::from_basis(&basis), field);
        hits.entry(canon.packed(v)).or_insert_with(|| (canon, 0)).1 += 1;
    });
    let n = (1u64 << v) - 1;
    let per = (1u64 << dim) - 1;
    let mut orbits: Vec<SubspaceOrbit> = hits
        .into_values()
        .map(|(rep, c)| SubspaceOrbit { index: 0, representative: rep, size: (c as u64 * n / per) as u32 })
        .collect();
    orbits.sort_by(|a, b| a.representative.cmp(&b.representative));
    for (i, o) in orbits.iter_mut().enumerate() {
        o.index = i;
    }
    Ok(orbits)
}

/// Kramer-Mesner matrix for block dimension k against 2-subspaces, under the Singer cycle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KMInstance {
    pub v: u32,
    pub k: u32,
    pub field: FieldSpec,
    pub row_orbits: Vec<SubspaceOrbit>,
    pub col_orbits: Vec<SubspaceOrbit>,
    /// Nonzero entries (i, j, m_ij), sorted by (i, j).
    pub entries: Vec<(usize, usize, u32)>,
    pub compatible_cols: Vec<usize>,
}

/// Builds the (v, k) instance in GF(2^v) defined by the first primitive polynomial.
pub fn km_matrix(v: u32, k: u32) -> Result<KMInstance, SubspaceError> {
    let field = FieldTable::shared(FieldSpec::first_primitive(2, v)?)?;
    km_matrix_in(&field, k)
}

/// m_ij = #{members of orbit j containing the representative of orbit i}, computed as
/// n_ij |O_j| / |O_i| with n_ij the number of 2-subspaces of the column representative in orbit i.
pub fn km_matrix_in(field: &Arc<FieldTable>, k: u32) -> Result<KMInstance, SubspaceError> {
    let v = binary_degree(field)?;
    if k <= 2 || k > v {
        return Err(SubspaceError::DimensionOutOfRange { dim: k, v });
    }
    let rows = orbit_representatives(field, 2)?;
    let cols = orbit_representatives(field, k)?;
    let row_of: HashMap<u128, usize> = rows.iter().map(|o| (o.representative.packed(v), o.index)).collect();
    let mut entries = Vec::new();
    let mut max_in_col = vec![0u32; cols.len()];
    let mut by_row: Vec<BTreeMap<usize, u32>> = vec![BTreeMap::new(); rows.len()];
    for col in &cols {
        let mut n: BTreeMap<usize, u64> = BTreeMap::new();
        for [a, b, c] in col.representative.lines() {
            let line = Subspace { dim: 2, members: vec![a, b, c] };
            let canon = canonical_through_one(&line, field);
            *n.entry(row_of[&canon.packed(v)]).or_default() += 1;
        }
        for (i, nij) in n {
            let num = nij * col.size as u64;
            let den = rows[i].size as u64;
            debug_assert_eq!(num % den, 0);
            let m = (num / den) as u32;
            by_row[i].insert(col.index, m);
            max_in_col[col.index] = max_in_col[col.index].max(m);
        }
    }
    for (i, row) in by_row.into_iter().enumerate() {
        entries.extend(row.into_iter().map(|(j, m)| (i, j, m)));
    }
    let compatible_cols = (0..cols.len()).filter(|&j| max_in_col[j] <= 1).collect();
    Ok(KMInstance { v, k, field: field.spec().clone(), row_orbits: rows, col_orbits: cols, entries, compatible_cols })
}

impl KMInstance {
    pub fn rows(&self) -> usize {
        self.row_orbits.len()
    }

    pub fn cols(&self) -> usize {
        self.col_orbits.len()
    }

    /// Text dump: a header, one "i j m" line per nonzero entry, then the compatible columns.
    pub fn dump(&self) -> String {
        let mut s = format!(
            "km v={} k={} rows={} cols={} field={}\n",
            self.v,
            self.k,
            self.rows(),
            self.cols(),
            self.field
        );
        for (i, j, m) in &self.entries {
            let _ = writeln!(s, "{i} {j} {m}");
        }
        s.push_str("compatible:");
        for j in &self.compatible_cols {
            let _ = write!(s, " {j}");
        }
        s.push('\n');
        s
    }
}

/// The content of a km dump, without the orbit data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KmDump {
    pub v: u32,
    pub k: u32,
    pub rows: usize,
    pub cols: usize,
    pub field: Option<String>,
    pub entries: Vec<(usize, usize, u32)>,
    pub compatible_cols: Vec<usize>,
}

impl From<&KMInstance> for KmDump {
    fn from(inst: &KMInstance) -> Self {
        KmDump {
            v: inst.v,
            k: inst.k,
            rows: inst.rows(),
            cols: inst.cols(),
            field: Some(inst.field.to_string()),
            entries: inst.entries.clone(),
            compatible_cols: inst.compatible_cols.clone(),
        }
    }
}

pub fn parse_km_dump(text: &str) -> Result<KmDump, SubspaceError> {
    let bad = |line: usize, reason: &str| SubspaceError::MalformedDump { line, reason: reason.to_string() };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| bad(1, "empty input"))?;
    let mut fields = header.split_whitespace();
    if fields.next() != Some("km") {
        return Err(bad(1, "header must start with \"km\""));
    }
    let mut kv: HashMap<&str, &str> = HashMap::new();
    for f in fields {
        let (key, val) = f.split_once('=').ok_or_else(|| bad(1, "expected key=value"))?;
        kv.insert(key, val);
    }
    let num = |key: &str| -> Result<usize, SubspaceError> {
        kv.get(key).ok_or_else(|| bad(1, &format!("missing {key}")))?.parse().map_err(|_| bad(1, &format!("bad {key}")))
    };
    let (v, k, rows, cols) = (num("v")? as u32, num("k")? as u32, num("rows")?, num("cols")?);
    let field = kv.get("field").map(|s| s.to_string());
    let mut entries = Vec::new();
    let mut compatible_cols = None;
    for (n, line) in lines {
        let line_no = n + 1;
        if let Some(rest) = line.strip_prefix("compatible:") {
            let cs: Result<Vec<usize>, _> = rest.split_whitespace().map(str::parse).collect();
            let cs = cs.map_err(|_| bad(line_no, "bad column index"))?;
            if cs.iter().any(|&j| j >= cols) {
                return Err(bad(line_no, "column out of range"));
            }
            compatible_cols = Some(cs);
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let [i, j, m] = parts.as_slice() else {
            return Err(bad(line_no, "expected \"i j m\""));
        };
        let parse = |s: &str| s.parse::<usize>().map_err(|_| bad(line_no, "not an integer"));
        let (i, j, m) = (parse(i)?, parse(j)?, parse(m)? as u32);
        if i >= rows || j >= cols {
            return Err(bad(line_no, "index out of range"));
        }
        entries.push((i, j, m));
    }
    if entries.windows(2).any(|w| (w[0].0, w[0].1) >= (w[1].0, w[1].1)) {
        return Err(bad(0, "entries not sorted by (i, j)"));
    }
    let compatible_cols = compatible_cols.ok_or_else(|| bad(0, "missing compatible: line"))?;
    Ok(KmDump { v, k, rows, cols, field, entries, compatible_cols })
}

/// True iff every block with 0 added is a k-dimensional subspace and every
/// 2-subspace of GF(2^v) lies in exactly one block.
pub fn verify_qanalog(d: &Design, field: &FieldTable, k: u32) -> Result<bool, SubspaceError> {
    let v = binary_degree(field)?;
    let n = (1u64 << v) - 1;
    let mut pts = d.points.clone();
    pts.sort_unstable();
    if pts.len() as u64 != n || pts.iter().enumerate().any(|(i, &p)| p as usize != i + 1) {
        return Ok(false);
    }
    let mut seen: HashMap<[u32; 3], u32> = HashMap::new();
    for b in &d.blocks {
        let mut members = b.clone();
        members.sort_unstable();
        let s = Subspace { dim: k, members };
        if !s.is_closed() {
            return Ok(false);
        }
        for line in s.lines() {
            let c = seen.entry(line).or_default();
            *c += 1;
            if *c > 1 {
                return Ok(false);
            }
        }
    }
    Ok(seen.len() as u128 == gaussian_binomial(v, 2, 2))
}

/// Every member of every chosen column orbit, as a design on the nonzero codes.
pub fn assemble_from_solution(inst: &KMInstance, chosen_cols: &[usize]) -> Result<Design, SubspaceError> {
    let field = FieldTable::build(inst.field.clone())?;
    let x = field.primitive();
    let mut blocks = Vec::new();
    for &j in chosen_cols {
        let orbit = inst.col_orbits.get(j).ok_or(SubspaceError::BadColumn(j))?;
        let mut cur = orbit.representative.clone();
        for _ in 0..orbit.size {
            blocks.push(cur.members.clone());
            cur = cur.scaled(&field, x);
        }
    }
    let n = (1u32 << inst.v) - 1;
    let points: Vec<u32> = (1..=n).collect();
    let map = points.iter().map(|&p| (p, p)).collect();
    let design = Design::new(points, (1 << inst.k) - 1, 1, blocks)?;
    Ok(design.with_embedding(Embedding { field: inst.field.clone(), map }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf(v: u32) -> Arc<FieldTable> {
        FieldTable::shared(FieldSpec::first_primitive(2, v).unwrap()).unwrap()
    }

    #[test]
    fn gaussian_binomials() {
        assert_eq!(gaussian_binomial(9, 2, 2), 43435);
        assert_eq!(gaussian_binomial(9, 3, 2), 788035);
        assert_eq!(gaussian_binomial(7, 1, 2), 127);
        assert_eq!(gaussian_binomial(3, 4, 2), 0);
    }

    #[test]
    fn small_enumeration_matches_counts_and_is_closed() {
        let f = gf(6);
        for d in 1..=4 {
            let subs = enumerate_subspaces(&f, d).unwrap();
            assert_eq!(subs.len() as u128, gaussian_binomial(6, d, 2));
            assert!(subs.iter().all(Subspace::is_closed));
            let mut keys: Vec<&[u32]> = subs.iter().map(Subspace::key).collect();
            keys.sort();
            keys.dedup();
            assert_eq!(keys.len(), subs.len());
        }
    }

    #[test]
    fn points_form_one_orbit() {
        let f = gf(7);
        let pts = enumerate_subspaces(&f, 1).unwrap();
        assert_eq!(pts.len(), 127);
        let orbits = singer_orbits(&pts, &f).unwrap();
        assert_eq!(orbits.len(), 1);
        assert_eq!(orbits[0].size, 127);
        assert_eq!(orbits[0].representative.members, vec![1]);
    }

    #[test]
    fn walk_and_through_one_orbits_agree() {
        let f = gf(6);
        for d in 2..=3 {
            let walked = singer_orbits(&enumerate_subspaces(&f, d).unwrap(), &f).unwrap();
            let fast = orbit_representatives(&f, d).unwrap();
            assert_eq!(walked, fast);
        }
    }

    #[test]
    fn lines_of_a_plane() {
        let s = Subspace::from_basis(&[1, 2, 4]);
        assert_eq!(s.lines().count(), 7);
        assert!(s.lines().all(|[a, b, c]| a < b && b < c && a ^ b == c));
    }

    #[test]
    fn dump_round_trip() {
        let inst = km_matrix(6, 3).unwrap();
        let parsed = parse_km_dump(&inst.dump()).unwrap();
        assert_eq!(parsed, KmDump::from(&inst));
        assert!(inst.dump().starts_with("km v=6 k=3 rows="));
        assert!(parse_km_dump("kx v=1").is_err());
        assert!(parse_km_dump("km v=6 k=3 rows=2 cols=2\n0 5 1\ncompatible:\n").is_err());
        assert!(parse_km_dump("km v=6 k=3 rows=2 cols=2\n0 1 1\n").is_err());
    }

    #[test]
    fn errors() {
        let f3 = FieldTable::build(FieldSpec::gf243()).unwrap();
        assert_eq!(enumerate_subspaces(&f3, 2).unwrap_err(), SubspaceError::NotBinary(3));
        let f = gf(6);
        assert!(matches!(enumerate_subspaces(&f, 7), Err(SubspaceError::DimensionOutOfRange { .. })));
        assert!(matches!(km_matrix(6, 2), Err(SubspaceError::DimensionOutOfRange { .. })));
        let big = gf(20);
        assert!(matches!(enumerate_subspaces(&big, 3), Err(SubspaceError::SizeBudgetExceeded(_))));
    }
}
