//! Point-line designs of PG(n,p) and the projective-line test inside GF(p^m).

use std::collections::HashSet;

use super::{Design, DesignError};
use crate::field::{is_prime, FieldElement, FieldError, FieldTable};

/// Upper bound on the number of points for [`pg_point_line_design`].
pub const PG_POINT_BUDGET: u64 = 1 << 16;

/// Points are the 1-dimensional subspaces of GF(p)^(n+1), labelled by the
/// base-p code of the representative whose lowest nonzero coordinate is 1.
/// Blocks are the lines, p+1 points each.
pub fn pg_point_line_design(n: u32, p: u32) -> Result<Design, DesignError> {
    if !is_prime(p as u64) {
        return Err(FieldError::NonPrimeCharacteristic(p).into());
    }
    if n < 2 {
        return Err(DesignError::DegenerateParameters { v: 0, k: p as usize + 1 });
    }
    let dim = n + 1;
    let total = (p as u64).checked_pow(dim).filter(|&t| t <= u32::MAX as u64);
    let Some(total) = total else {
        return Err(DesignError::SizeBudgetExceeded(format!("PG({n},{p}) vectors")));
    };
    let v = (total - 1) / (p as u64 - 1);
    if v > PG_POINT_BUDGET {
        return Err(DesignError::SizeBudgetExceeded(format!("PG({n},{p}) has {v} points")));
    }
    let space = VecSpace { p, dim };
    let points: Vec<u32> = (1..total as u32).filter(|&c| space.is_normalized(c)).collect();
    let mut blocks = Vec::new();
    for (i, &a) in points.iter().enumerate() {
        for &b in &points[i + 1..] {
            let mut line: Vec<u32> = (0..p).map(|t| space.normalize(space.axpy(t, b, a))).collect();
            line.push(b);
            line.sort_unstable();
            if line[0] == a && line[1] == b {
                blocks.push(line);
            }
        }
    }
    Design::new(points, p as usize + 1, 1, blocks)
}

/// GF(p)^dim with vectors stored as base-p little-endian codes.
struct VecSpace {
    p: u32,
    dim: u32,
}

impl VecSpace {
    fn digits(&self, mut c: u32) -> impl Iterator<Item = u32> + '_ {
        (0..self.dim).map(move |_| {
            let d = c % self.p;
            c /= self.p;
            d
        })
    }

    fn encode_digits(&self, digits: impl Iterator<Item = u32>) -> u32 {
        let mut code = 0;
        let mut radix = 1;
        for d in digits {
            code += d * radix;
            radix *= self.p;
        }
        code
    }

    /// t*x + y
    fn axpy(&self, t: u32, x: u32, y: u32) -> u32 {
        let p = self.p;
        self.encode_digits(self.digits(x).zip(self.digits(y)).map(|(a, b)| (t * a + b) % p))
    }

    fn scale(&self, t: u32, x: u32) -> u32 {
        let p = self.p;
        self.encode_digits(self.digits(x).map(|a| a * t % p))
    }

    fn is_normalized(&self, c: u32) -> bool {
        self.digits(c).find(|&d| d != 0) == Some(1)
    }

    fn normalize(&self, c: u32) -> u32 {
        match self.digits(c).find(|&d| d != 0) {
            None => 0,
            Some(lead) => {
                let inv = (1..self.p).find(|&t| t * lead % self.p == 1).unwrap();
                self.scale(inv, c)
            }
        }
    }
}

/// The unique GF(p)^*-multiple of `a` that lies in R_{q,(q-1)/(p-1)}.
pub fn canonical_projective(field: &FieldTable, a: FieldElement) -> Option<FieldElement> {
    let p = field.characteristic() as u64;
    if p == 2 {
        return (!a.is_zero()).then_some(a);
    }
    let log = field.log(a)? as u64;
    let m = (field.order() as u64 - 1) / (p - 1);
    // scalars of GF(p)^* are x^(m i); need log + m i = 0 (mod p-1)
    let hits: Vec<u64> = (0..p - 1).filter(|i| (log + m * i).is_multiple_of(p - 1)).collect();
    match hits.as_slice() {
        [i] => Some(field.exp((log + m * i) as i64)),
        _ => None,
    }
}

/// True iff the block is exactly the set of canonical representatives of the
/// projective line through two of its members, viewing GF(p^m) as GF(p)^m.
pub fn is_projective_line(block: &[FieldElement], field: &FieldTable) -> Result<bool, DesignError> {
    let p = field.characteristic();
    for &a in block {
        if canonical_projective(field, a) != Some(a) {
            return Err(DesignError::NonCanonicalRepresentative(a.0));
        }
    }
    if block.len() != p as usize + 1 {
        return Ok(false);
    }
    let (a, b) = (block[0], block[1]);
    let mut line = HashSet::new();
    line.insert(b);
    for t in 0..p {
        let combo = field.add(field.mul(FieldElement(t), b), a);
        match canonical_projective(field, combo) {
            Some(c) => line.insert(c),
            None => return Ok(false),
        };
    }
    let given: HashSet<FieldElement> = block.iter().copied().collect();
    Ok(given == line)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::design::verify_design;
    use crate::field::{FieldSpec, UnityRoots};

    #[test]
    fn fano_and_friends() {
        let d = pg_point_line_design(2, 2).unwrap();
        assert_eq!((d.v, d.k, d.block_count()), (7, 3, 7));
        assert!(verify_design(&d).unwrap().is_2_design);
        for (n, p) in [(2u32, 3u32), (3, 2), (4, 3)] {
            let d = pg_point_line_design(n, p).unwrap();
            let v = ((p as usize).pow(n + 1) - 1) / (p as usize - 1);
            assert_eq!(d.v, v);
            assert_eq!(d.block_count(), v * (v - 1) / (p as usize * (p as usize + 1)));
            assert!(verify_design(&d).unwrap().is_2_design, "PG({n},{p})");
        }
    }

    #[test]
    fn budget_and_degenerate() {
        assert!(matches!(pg_point_line_design(1, 3), Err(DesignError::DegenerateParameters { .. })));
        assert!(matches!(pg_point_line_design(20, 2), Err(DesignError::SizeBudgetExceeded(_))));
        assert!(pg_point_line_design(2, 4).is_err());
    }

    #[test]
    fn constructed_lines_are_lines() {
        let f = FieldTable::shared(FieldSpec::gf243()).unwrap();
        let reps = UnityRoots::new(&f, 121).unwrap();
        let (a, b) = (reps.element(0), reps.element(7));
        let sum = canonical_projective(&f, f.add(a, b)).unwrap();
        let diff = canonical_projective(&f, f.sub(a, b)).unwrap();
        assert!(is_projective_line(&[a, b, sum, diff], &f).unwrap());
        let other = reps.element(8);
        if other != sum && other != diff {
            assert!(!is_projective_line(&[a, b, sum, other], &f).unwrap());
        }
        let non_square = f.exp(1);
        assert!(matches!(
            is_projective_line(&[non_square, a, b, sum], &f),
            Err(DesignError::NonCanonicalRepresentative(_))
        ));
    }

    #[test]
    fn binary_lines_are_xor_closed() {
        let f: Arc<FieldTable> = FieldTable::shared(FieldSpec::gf512()).unwrap();
        let (a, b) = (FieldElement(5), FieldElement(9));
        assert!(is_projective_line(&[a, b, FieldElement(12)], &f).unwrap());
        assert!(!is_projective_line(&[a, b, FieldElement(13)], &f).unwrap());
    }
}
