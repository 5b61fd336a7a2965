//! Which prime powers q can carry an EA(q)-additive (v,k,1)-design.
//!
//! The sum of all points of such a design equals (1-r)x for every point x, so
//! every difference of points has order dividing r-1 = (v-k)/(k-1). The field
//! characteristic therefore divides (v-k)/(k-1).

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::DesignError;
use crate::field::prime_factors;

/// Prime divisors of (v-k)/(k-1).
pub fn admissible_primes(v: u64, k: u64) -> Result<BTreeSet<u64>, DesignError> {
    if !(v > k && k > 2) {
        return Err(DesignError::DesignParametersInadmissible { v, k, reason: "need v > k > 2".into() });
    }
    if !(v - k).is_multiple_of(k - 1) {
        return Err(DesignError::DesignParametersInadmissible {
            v,
            k,
            reason: format!("k-1 = {} does not divide v-k = {}", k - 1, v - k),
        });
    }
    Ok(prime_factors((v - k) / (k - 1)).into_iter().collect())
}

/// base^exponent, ordered by value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimePower {
    pub base: u64,
    pub exponent: u32,
}

impl PrimePower {
    pub fn value(&self) -> Option<u128> {
        (self.base as u128).checked_pow(self.exponent)
    }

    fn magnitude(&self) -> f64 {
        self.exponent as f64 * (self.base as f64).ln()
    }
}

impl Ord for PrimePower {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.value(), other.value()) {
            (Some(a), Some(b)) => a.cmp(&b),
            _ => self
                .magnitude()
                .partial_cmp(&other.magnitude())
                .unwrap_or(Ordering::Equal)
                .then(self.base.cmp(&other.base)),
        }
    }
}

impl PartialOrd for PrimePower {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PrimePower {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^{}", self.base, self.exponent)
    }
}

/// All q = rho^m with rho admissible, 1 <= m <= exponent_bound and q = 1 (mod modulus), ascending.
pub fn admissible_field_orders(
    v: u64,
    k: u64,
    modulus: u64,
    exponent_bound: u32,
) -> Result<Vec<PrimePower>, DesignError> {
    if modulus < 2 {
        return Err(DesignError::DesignParametersInadmissible { v, k, reason: "modulus must be at least 2".into() });
    }
    let primes = admissible_primes(v, k)?;
    let mut out = Vec::new();
    for &rho in &primes {
        let mut residue = 1u128;
        for m in 1..=exponent_bound {
            residue = residue * rho as u128 % modulus as u128;
            if residue == 1 {
                out.push(PrimePower { base: rho, exponent: m });
            }
        }
    }
    out.sort();
    Ok(out)
}

/// For each prime, the smallest admissible exponent only.
pub fn least_order_per_prime(orders: &[PrimePower]) -> Vec<PrimePower> {
    let mut best: Vec<PrimePower> = Vec::new();
    for q in orders {
        match best.iter_mut().find(|b| b.base == q.base) {
            Some(b) if q.exponent < b.exponent => *b = *q,
            Some(_) => {}
            None => best.push(*q),
        }
    }
    best.sort();
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pp(base: u64, exponent: u32) -> PrimePower {
        PrimePower { base, exponent }
    }

    #[test]
    fn primes() {
        assert_eq!(admissible_primes(52, 4).unwrap(), BTreeSet::from([2]));
        assert_eq!(admissible_primes(121, 4).unwrap(), BTreeSet::from([3, 13]));
        assert_eq!(admissible_primes(105, 5).unwrap(), BTreeSet::from([5]));
        assert_eq!(admissible_primes(100, 4).unwrap(), BTreeSet::from([2]));
        assert_eq!(admissible_primes(88, 4).unwrap(), BTreeSet::from([2, 7]));
        assert!(matches!(admissible_primes(53, 4), Err(DesignError::DesignParametersInadmissible { .. })));
        assert!(admissible_primes(4, 4).is_err());
    }

    #[test]
    fn field_orders() {
        assert_eq!(admissible_field_orders(52, 4, 51, 30).unwrap()[0], pp(2, 8));
        assert!(admissible_field_orders(100, 4, 100, 64).unwrap().is_empty());
        assert!(admissible_field_orders(105, 5, 105, 64).unwrap().is_empty());
        assert_eq!(admissible_field_orders(121, 4, 121, 64).unwrap()[0], pp(3, 5));

        let all = admissible_field_orders(88, 4, 87, 30).unwrap();
        assert_eq!(all, vec![pp(7, 7), pp(2, 28), pp(7, 14), pp(7, 21), pp(7, 28)]);
        assert_eq!(least_order_per_prime(&all), vec![pp(7, 7), pp(2, 28)]);
        assert!(admissible_field_orders(88, 4, 1, 30).is_err());
    }

    #[test]
    fn ordering_beyond_u128() {
        assert!(pp(13, 64) > pp(2, 100));
        assert!(pp(2, 200) > pp(13, 30));
    }
}
