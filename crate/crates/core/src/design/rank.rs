//! Rank of the point-block incidence matrix over GF(p).
//!
//! Rows are points. Over GF(2) rows are packed 64 entries per word; over
//! GF(3) each row is a pair of bit planes (entry = 1, entry = 2) so that a
//! row operation is a handful of word-wide boolean ops. Other primes use
//! dense rows.

use super::{Design, DesignError};
use crate::field::is_prime;

pub fn p_rank(d: &Design, p: u32) -> Result<usize, DesignError> {
    if !is_prime(p as u64) {
        return Err(DesignError::Field(crate::field::FieldError::NonPrimeCharacteristic(p)));
    }
    let blocks = d.indexed_blocks()?;
    Ok(incidence_rank(d.v, &blocks, p))
}

/// Rank over GF(p) of the v x b matrix whose column j is the indicator of `blocks[j]`.
pub fn incidence_rank(v: usize, blocks: &[Vec<usize>], p: u32) -> usize {
    match p {
        2 => rank_gf2(v, blocks),
        3 => rank_gf3(v, blocks),
        _ => rank_dense(v, blocks, p),
    }
}

fn words(b: usize) -> usize {
    b.div_ceil(64)
}

fn rank_gf2(v: usize, blocks: &[Vec<usize>]) -> usize {
    let w = words(blocks.len());
    let mut rows = vec![vec![0u64; w]; v];
    for (j, b) in blocks.iter().enumerate() {
        for &x in b {
            rows[x][j / 64] ^= 1 << (j % 64);
        }
    }
    let mut rank = 0;
    for col in 0..blocks.len() {
        let (wi, bit) = (col / 64, 1u64 << (col % 64));
        let Some(piv) = (rank..v).find(|&r| rows[r][wi] & bit != 0) else {
            continue;
        };
        rows.swap(rank, piv);
        let (top, rest) = rows.split_at_mut(rank + 1);
        let pivot = &top[rank];
        for row in rest.iter_mut() {
            if row[wi] & bit != 0 {
                for (a, b) in row[wi..].iter_mut().zip(&pivot[wi..]) {
                    *a ^= *b;
                }
            }
        }
        rank += 1;
        if rank == v {
            break;
        }
    }
    rank
}

/// A GF(3) vector as two bit planes: `ones` marks entries equal to 1, `twos` entries equal to 2.
#[derive(Clone)]
struct Gf3Row {
    ones: Vec<u64>,
    twos: Vec<u64>,
}

impl Gf3Row {
    fn get(&self, col: usize) -> u8 {
        let (wi, bit) = (col / 64, 1u64 << (col % 64));
        if self.ones[wi] & bit != 0 {
            1
        } else if self.twos[wi] & bit != 0 {
            2
        } else {
            0
        }
    }

    /// self += other (negated when `negate`), from word `from` on.
    fn add_from(&mut self, other: &Gf3Row, negate: bool, from: usize) {
        let (o1, o2) = if negate { (&other.twos, &other.ones) } else { (&other.ones, &other.twos) };
        for i in from..self.ones.len() {
            let (x1, x2, y1, y2) = (self.ones[i], self.twos[i], o1[i], o2[i]);
            let t = (x1 | y2) ^ (x2 | y1);
            self.ones[i] = (x2 | y2) ^ t;
            self.twos[i] = (x1 | y1) ^ t;
        }
    }
}

fn rank_gf3(v: usize, blocks: &[Vec<usize>]) -> usize {
    let w = words(blocks.len());
    let mut rows = vec![Gf3Row { ones: vec![0; w], twos: vec![0; w] }; v];
    for (j, b) in blocks.iter().enumerate() {
        for &x in b {
            rows[x].ones[j / 64] |= 1 << (j % 64);
        }
    }
    let mut rank = 0;
    for col in 0..blocks.len() {
        let Some(piv) = (rank..v).find(|&r| rows[r].get(col) != 0) else {
            continue;
        };
        rows.swap(rank, piv);
        let (top, rest) = rows.split_at_mut(rank + 1);
        let pivot = &top[rank];
        let pv = pivot.get(col);
        for row in rest.iter_mut() {
            let e = row.get(col);
            if e != 0 {
                // row - (e/pv) * pivot; e/pv is 1 when equal, 2 otherwise
                row.add_from(pivot, e == pv, col / 64);
            }
        }
        rank += 1;
        if rank == v {
            break;
        }
    }
    rank
}

fn rank_dense(v: usize, blocks: &[Vec<usize>], p: u32) -> usize {
    let b = blocks.len();
    let p = p as u64;
    let mut rows = vec![vec![0u64; b]; v];
    for (j, blk) in blocks.iter().enumerate() {
        for &x in blk {
            rows[x][j] = (rows[x][j] + 1) % p;
        }
    }
    let inv = |a: u64| -> u64 {
        let (mut base, mut e, mut acc) = (a % p, p - 2, 1u64);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base % p;
            }
            base = base * base % p;
            e >>= 1;
        }
        acc
    };
    let mut rank = 0;
    for col in 0..b {
        let Some(piv) = (rank..v).find(|&r| rows[r][col] != 0) else {
            continue;
        };
        rows.swap(rank, piv);
        let scale = inv(rows[rank][col]);
        for x in rows[rank][col..].iter_mut() {
            *x = *x * scale % p;
        }
        let (top, rest) = rows.split_at_mut(rank + 1);
        let pivot = &top[rank];
        for row in rest.iter_mut() {
            let f = row[col];
            if f != 0 {
                for (a, &c) in row[col..].iter_mut().zip(&pivot[col..]) {
                    *a = (*a + p * p - f * c % p) % p;
                }
            }
        }
        rank += 1;
        if rank == v {
            break;
        }
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Plain Gaussian elimination over Z_p on a dense matrix, no packing.
    fn oracle_rank(v: usize, blocks: &[Vec<usize>], p: i64) -> usize {
        let mut m: Vec<Vec<i64>> = vec![vec![0; blocks.len()]; v];
        for (j, b) in blocks.iter().enumerate() {
            for &x in b {
                m[x][j] += 1;
            }
        }
        let mut r = 0;
        for c in 0..blocks.len() {
            if let Some(piv) = (r..v).find(|&i| m[i][c].rem_euclid(p) != 0) {
                m.swap(r, piv);
                for i in 0..v {
                    if i != r && m[i][c].rem_euclid(p) != 0 {
                        let (a, b) = (m[i][c], m[r][c]);
                        for j in 0..blocks.len() {
                            m[i][j] = (m[i][j] * b - m[r][j] * a).rem_euclid(p);
                        }
                    }
                }
                r += 1;
            }
        }
        r
    }

    fn lcg_blocks(seed: u64, v: usize, b: usize, k: usize) -> Vec<Vec<usize>> {
        let mut s = seed;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 33) as usize
        };
        (0..b)
            .map(|_| {
                let mut blk = Vec::new();
                while blk.len() < k {
                    let x = next() % v;
                    if !blk.contains(&x) {
                        blk.push(x);
                    }
                }
                blk.sort_unstable();
                blk
            })
            .collect()
    }

    #[test]
    fn identity_has_full_rank() {
        let blocks: Vec<Vec<usize>> = (0..70).map(|i| vec![i]).collect();
        for p in [2, 3, 5] {
            assert_eq!(incidence_rank(70, &blocks, p), 70);
        }
    }

    #[test]
    fn packed_ranks_match_dense_oracle() {
        for seed in 0..30u64 {
            let v = 5 + (seed as usize % 17);
            let b = 3 + (seed as usize * 7 % 90);
            let k = 2 + (seed as usize % 3).min(v - 2);
            let blocks = lcg_blocks(seed, v, b, k);
            for p in [2u32, 3, 5, 7] {
                assert_eq!(incidence_rank(v, &blocks, p), oracle_rank(v, &blocks, p as i64), "seed {seed} p {p}");
            }
        }
    }

    #[test]
    fn gf3_plane_addition_table() {
        for x in 0..3u8 {
            for y in 0..3u8 {
                let mk = |e: u8| Gf3Row { ones: vec![(e == 1) as u64], twos: vec![(e == 2) as u64] };
                let mut a = mk(x);
                a.add_from(&mk(y), false, 0);
                assert_eq!(a.get(0), (x + y) % 3);
                let mut a = mk(x);
                a.add_from(&mk(y), true, 0);
                assert_eq!(a.get(0), (x + 3 - y) % 3);
            }
        }
    }
}
