//! Dense polynomials over Z_p, little-endian coefficient vectors.
//!
//! Only what the field layer needs: reduction modulo a monic modulus,
//! modular exponentiation, and gcd for the irreducibility test.

pub(crate) fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Distinct prime divisors in ascending order.
pub(crate) fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

pub(crate) fn inv_mod(a: u32, p: u32) -> u32 {
    // p is prime, so a^(p-2) is the inverse.
    let (mut base, mut e, mut acc) = (a as u64 % p as u64, p as u64 - 2, 1u64);
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % p as u64;
        }
        base = base * base % p as u64;
        e >>= 1;
    }
    acc as u32
}

fn trim(a: &mut Vec<u32>) {
    while a.last() == Some(&0) {
        a.pop();
    }
}

/// Arithmetic in Z_p[x] / (modulus) for a monic modulus of degree n.
#[derive(Debug, Clone)]
pub(crate) struct PolyRing {
    pub p: u32,
    pub modulus: Vec<u32>,
}

impl PolyRing {
    pub fn new(p: u32, modulus: Vec<u32>) -> Self {
        Self { p, modulus }
    }

    pub fn degree(&self) -> usize {
        self.modulus.len() - 1
    }

    /// Reduce an arbitrary-length vector into a residue of exactly `degree()` coefficients.
    pub fn reduce(&self, mut a: Vec<u32>) -> Vec<u32> {
        let n = self.degree();
        let p = self.p as u64;
        while a.len() > n {
            let top = a.pop().unwrap() as u64;
            if top == 0 {
                continue;
            }
            let base = a.len() - n;
            for (i, &m) in self.modulus[..n].iter().enumerate() {
                let cur = a[base + i] as u64;
                a[base + i] = ((cur + p * p - top * m as u64 % p) % p) as u32;
            }
        }
        a.resize(n, 0);
        a
    }

    pub fn mul(&self, a: &[u32], b: &[u32]) -> Vec<u32> {
        let p = self.p as u64;
        let mut out = vec![0u64; a.len() + b.len()];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                out[i + j] = (out[i + j] + x as u64 * y as u64) % p;
            }
        }
        self.reduce(out.into_iter().map(|c| c as u32).collect())
    }

    pub fn one(&self) -> Vec<u32> {
        self.reduce(vec![1])
    }

    pub fn x(&self) -> Vec<u32> {
        self.reduce(vec![0, 1])
    }

    pub fn pow(&self, a: &[u32], mut e: u128) -> Vec<u32> {
        let mut acc = self.one();
        let mut base = a.to_vec();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            e >>= 1;
            if e > 0 {
                base = self.mul(&base, &base);
            }
        }
        acc
    }

    /// Rabin's test: x^(p^n) = x and gcd(x^(p^(n/r)) - x, f) = 1 for every prime r | n.
    pub fn modulus_is_irreducible(&self) -> bool {
        let n = self.degree();
        if n == 1 {
            return true;
        }
        if self.modulus[0] == 0 {
            return false;
        }
        let x = self.x();
        // frob[i] = x^(p^i) mod f
        let mut frob = vec![x.clone()];
        for _ in 0..n {
            let last = frob.last().unwrap();
            frob.push(self.pow(last, self.p as u128));
        }
        if frob[n] != x {
            return false;
        }
        for r in prime_factors(n as u64) {
            let h = &frob[n / r as usize];
            let mut diff: Vec<u32> = h
                .iter()
                .zip(x.iter())
                .map(|(&a, &b)| (a + self.p - b) % self.p)
                .collect();
            trim(&mut diff);
            let g = gcd(self.modulus.clone(), diff, self.p);
            if g.len() > 1 {
                return false;
            }
        }
        true
    }
}

fn poly_rem(mut a: Vec<u32>, b: &[u32], p: u32) -> Vec<u32> {
    trim(&mut a);
    let db = b.len() - 1;
    let lead_inv = inv_mod(*b.last().unwrap(), p) as u64;
    while a.len() > db {
        let top = *a.last().unwrap() as u64;
        let f = top * lead_inv % p as u64;
        let shift = a.len() - 1 - db;
        for (i, &c) in b.iter().enumerate() {
            let cur = a[shift + i] as u64;
            a[shift + i] = ((cur + p as u64 * p as u64 - f * c as u64 % p as u64) % p as u64) as u32;
        }
        trim(&mut a);
    }
    a
}

/// Monic-agnostic gcd; an empty or constant result means coprime.
fn gcd(mut a: Vec<u32>, mut b: Vec<u32>, p: u32) -> Vec<u32> {
    trim(&mut a);
    trim(&mut b);
    while !b.is_empty() {
        let r = poly_rem(a, &b, p);
        a = b;
        b = r;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorization() {
        assert_eq!(prime_factors(255), vec![3, 5, 17]);
        assert_eq!(prime_factors(242), vec![2, 11]);
        assert_eq!(prime_factors(1), Vec::<u64>::new());
        assert!(is_prime(73) && !is_prime(511) && !is_prime(1));
    }

    #[test]
    fn irreducibility() {
        // x^2 + 1 over Z_2 = (x+1)^2
        assert!(!PolyRing::new(2, vec![1, 0, 1]).modulus_is_irreducible());
        assert!(PolyRing::new(2, vec![1, 1, 1]).modulus_is_irreducible());
        // x^2 + 1 over Z_3 is irreducible
        assert!(PolyRing::new(3, vec![1, 0, 1]).modulus_is_irreducible());
        // x^4 + x^3 + x^2 + x + 1 over Z_2: irreducible but not primitive
        assert!(PolyRing::new(2, vec![1, 1, 1, 1, 1]).modulus_is_irreducible());
        // (x^2+x+1)^2 = x^4 + x^2 + 1
        assert!(!PolyRing::new(2, vec![1, 0, 1, 0, 1]).modulus_is_irreducible());
    }
}
