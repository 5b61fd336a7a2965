use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use steiner_core::design::verify_design;
use steiner_core::subspace::{
    assemble_from_solution, enumerate_subspaces, gaussian_binomial, km_matrix, orbit_representatives,
    singer_orbits, verify_qanalog, KMInstance, Subspace,
};
use steiner_core::{Design, FieldSpec, FieldTable};

fn gf(v: u32) -> Arc<FieldTable> {
    FieldTable::shared(FieldSpec::first_primitive(2, v).unwrap()).unwrap()
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn phi(m: u64) -> u64 {
    (1..=m).filter(|&i| gcd(i, m) == 1).count() as u64
}

/// Burnside count of Singer orbits on d-subspaces of GF(2^v): an element of order m
/// generates GF(2^e), e = ord_m(2), and fixes exactly the GF(2^e)-subspaces.
fn burnside_orbits(v: u32, d: u32) -> u128 {
    let n = (1u64 << v) - 1;
    let mut total = 0u128;
    for m in (1..=n).filter(|m| n.is_multiple_of(*m)) {
        let e = (1..=v).find(|&e| ((1u64 << e) - 1).is_multiple_of(m)).unwrap();
        let fixed = if d.is_multiple_of(e) { gaussian_binomial(v / e, d / e, 1 << e) } else { 0 };
        total += phi(m) as u128 * fixed;
    }
    total / n as u128
}

#[test]
fn burnside_oracle_anchor() {
    assert_eq!(burnside_orbits(9, 3), 1543);
    assert_eq!(burnside_orbits(9, 2), 85);
}

#[test]
fn orbit_counts_match_burnside() {
    for v in 5..=10 {
        let f = gf(v);
        for d in 2..=3 {
            let orbits = orbit_representatives(&f, d).unwrap();
            assert_eq!(orbits.len() as u128, burnside_orbits(v, d), "v={v} d={d}");
            let total: u128 = orbits.iter().map(|o| o.size as u128).sum();
            assert_eq!(total, gaussian_binomial(v, d, 2));
        }
    }
}

#[test]
fn nine_two() {
    let f = gf(9);
    let subs = enumerate_subspaces(&f, 2).unwrap();
    assert_eq!(subs.len(), 43435);
    let orbits = singer_orbits(&subs, &f).unwrap();
    assert_eq!(orbits.len(), 85);
    assert!(orbits.iter().all(|o| o.size == 511));
}

#[test]
fn nine_three() {
    let f = gf(9);
    let subs = enumerate_subspaces(&f, 3).unwrap();
    assert_eq!(subs.len(), 788035);
    assert!(subs.iter().take(5000).all(Subspace::is_closed));
    let orbits = singer_orbits(&subs, &f).unwrap();
    assert_eq!(orbits.len(), 1543);
    let short: Vec<u32> = orbits.iter().map(|o| o.size).filter(|&s| s != 511).collect();
    assert_eq!(short, vec![73]);
    assert_eq!(orbits, orbit_representatives(&f, 3).unwrap());

    let keys: HashSet<&[u32]> = subs.iter().map(Subspace::key).collect();
    let x = f.primitive();
    assert!(subs.iter().step_by(97).all(|s| keys.contains(s.scaled(&f, x).key())));

    let line = enumerate_subspaces(&f, 2).unwrap()[777].clone();
    let through = subs.iter().filter(|s| line.members.iter().all(|&m| s.contains(m))).count();
    assert_eq!(through, 127);
}

#[test]
fn singer_action_is_well_defined_in_gf64() {
    let f = gf(6);
    let x = f.primitive();
    for d in 1..=3 {
        let subs = enumerate_subspaces(&f, d).unwrap();
        let keys: HashSet<&[u32]> = subs.iter().map(Subspace::key).collect();
        assert!(subs.iter().all(|s| keys.contains(s.scaled(&f, x).key())));
    }
}

/// m_ij by walking every member of every column orbit and counting those containing row rep i.
fn member_scan(inst: &KMInstance, f: &FieldTable) -> HashMap<(usize, usize), u32> {
    let row_of: HashMap<&[u32], usize> =
        inst.row_orbits.iter().map(|o| (o.representative.key(), o.index)).collect();
    let x = f.primitive();
    let mut m = HashMap::new();
    for col in &inst.col_orbits {
        let mut cur = col.representative.clone();
        for _ in 0..col.size {
            for line in cur.lines() {
                if let Some(&i) = row_of.get(&line[..]) {
                    *m.entry((i, col.index)).or_insert(0) += 1;
                }
            }
            cur = cur.scaled(f, x);
        }
    }
    m
}

#[test]
fn km_nine_three() {
    let inst = km_matrix(9, 3).unwrap();
    assert_eq!((inst.rows(), inst.cols()), (85, 1543));
    assert_eq!(inst.compatible_cols.len(), 1459);
    assert!(inst.dump().starts_with("km v=9 k=3 rows=85 cols=1543 field=GF(2^9):x^9+x^4+1\n"));

    let f = gf(9);
    let scanned = member_scan(&inst, &f);
    let entries: HashMap<(usize, usize), u32> = inst.entries.iter().map(|&(i, j, m)| ((i, j), m)).collect();
    assert_eq!(entries, scanned);

    let mut row_sum = vec![0u32; inst.rows()];
    for &(i, _, m) in &inst.entries {
        row_sum[i] += m;
    }
    assert!(row_sum.iter().all(|&s| s == 127));

    for &j in &inst.compatible_cols {
        assert!(inst.entries.iter().filter(|e| e.1 == j).all(|e| e.2 <= 1));
    }
}

#[test]
fn km_six_three_matches_walk_oracle() {
    let inst = km_matrix(6, 3).unwrap();
    let f = gf(6);
    let walked = singer_orbits(&enumerate_subspaces(&f, 3).unwrap(), &f).unwrap();
    assert_eq!(walked, inst.col_orbits);
    let scanned = member_scan(&inst, &f);
    let compatible: Vec<usize> =
        (0..inst.cols()).filter(|&j| scanned.iter().all(|(&(_, jj), &m)| jj != j || m <= 1)).collect();
    assert_eq!(compatible, inst.compatible_cols);
}

fn spread_blocks(f: &FieldTable) -> Vec<Vec<u32>> {
    (0..73)
        .map(|t| {
            let mut b: Vec<u32> = (0..7).map(|i| f.exp(t + 73 * i).code()).collect();
            b.sort_unstable();
            b
        })
        .collect()
}

#[test]
fn qanalog_checks() {
    let f = gf(9);
    for b in spread_blocks(&f) {
        assert!(Subspace { dim: 3, members: b }.is_closed());
    }
    let points: Vec<u32> = (1..512).collect();
    let all: Vec<Vec<u32>> = enumerate_subspaces(&f, 3).unwrap().into_iter().map(|s| s.members).collect();
    let d = Design::new(points.clone(), 7, 1, all).unwrap();
    assert!(!verify_qanalog(&d, &f, 3).unwrap());
    let spread = Design::new(points, 7, 1, spread_blocks(&f)).unwrap();
    assert!(!verify_qanalog(&spread, &f, 3).unwrap());
}

/// With k = 2 the blocks are the 2-subspaces themselves, which trivially cover each one once.
#[test]
fn lines_of_pg52_pass_with_k_two() {
    let f = gf(6);
    let lines: Vec<Vec<u32>> = enumerate_subspaces(&f, 2).unwrap().into_iter().map(|s| s.members).collect();
    let d = Design::new((1..64).collect(), 3, 1, lines).unwrap();
    assert!(verify_qanalog(&d, &f, 2).unwrap());
    assert!(verify_design(&d).unwrap().is_2_design);
    let mut broken = d.clone();
    let outsider = (1..64).find(|p| !broken.blocks[0].contains(p)).unwrap();
    broken.blocks[0][2] = outsider;
    broken.blocks[0].sort_unstable();
    assert!(!verify_qanalog(&broken, &f, 2).unwrap());
}

#[test]
fn assembling() {
    let inst = km_matrix(9, 3).unwrap();
    let empty = assemble_from_solution(&inst, &[]).unwrap();
    assert_eq!(empty.block_count(), 0);
    assert!(!verify_design(&empty).unwrap().is_2_design);

    let full = inst.col_orbits.iter().find(|o| o.size == 511).unwrap().index;
    let d = assemble_from_solution(&inst, &[full]).unwrap();
    assert_eq!(d.block_count(), 511);
    assert!(d.blocks.iter().all(|b| b.len() == 7));

    let short = inst.col_orbits.iter().find(|o| o.size == 73).unwrap().index;
    let d = assemble_from_solution(&inst, &[short]).unwrap();
    assert_eq!(d.block_count(), 73);
    let mut hits = vec![0u32; 512];
    for b in &d.blocks {
        for &p in b {
            hits[p as usize] += 1;
        }
    }
    assert!(hits[1..].iter().all(|&h| h == 1));
    let f = gf(9);
    let gf8: HashSet<u32> = (0..7).map(|i| f.exp(73 * i).code()).collect();
    assert!(d.blocks.iter().any(|b| b.iter().copied().collect::<HashSet<_>>() == gf8));
}
