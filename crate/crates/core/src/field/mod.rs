//! Finite fields GF(p^n) presented as Z_p[x]/(f) with f primitive.
//!
//! Elements are stored as their base-p little-endian code: the coefficient
//! vector `(c_0, ..., c_{n-1})` of the residue maps to `c_0 + c_1 p + ...`.
//! The encoding is independent of the chosen primitive element, so files that
//! store codes stay meaningful for a fixed [`FieldSpec`].
//!
//! Fields of order at most [`TABLE_BUDGET`] carry full log/antilog tables.
//! Larger fields fall back to polynomial arithmetic with square-and-multiply
//! powers and baby-step giant-step logarithms.

mod poly;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub(crate) use poly::{is_prime, prime_factors};
use poly::PolyRing;

/// Largest field order that gets log/antilog tables.
pub const TABLE_BUDGET: u64 = 1 << 20;

/// Largest field order accepted at all (codes must fit in `u32`).
pub const ORDER_LIMIT: u64 = 1 << 31;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("characteristic {0} is not prime")]
    NonPrimeCharacteristic(u32),
    #[error("malformed polynomial: {0}")]
    MalformedPolynomial(String),
    #[error("polynomial {0} is reducible over Z_{1}, so it is not primitive")]
    Reducible(String, u32),
    #[error("polynomial {poly} is irreducible but x has order {order} < q-1 = {q_minus_1}, so it is not primitive")]
    NotPrimitive { poly: String, order: u64, q_minus_1: u64 },
    #[error("field order {0} exceeds the supported limit")]
    OrderTooLarge(u64),
    #[error("subgroup order {n} does not divide q-1 = {q_minus_1}")]
    OrderDoesNotDivide { n: u64, q_minus_1: u64 },
    #[error("element code {code} is not in a field of order {q}")]
    ForeignElement { code: u32, q: u32 },
    #[error("no primitive polynomial of degree {n} over Z_{p} found")]
    NoPrimitivePolynomial { p: u32, n: u32 },
}

/// Characteristic, degree and a monic primitive modulus (little-endian, constant term first).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldSpec {
    pub p: u32,
    pub n: u32,
    pub poly: Vec<u32>,
}

impl FieldSpec {
    pub fn new(p: u32, n: u32, poly: Vec<u32>) -> Self {
        Self { p, n, poly }
    }

    /// GF(2^8) with x^8 + x^4 + x^3 + x^2 + 1.
    pub fn gf256() -> Self {
        Self::new(2, 8, vec![1, 0, 1, 1, 1, 0, 0, 0, 1])
    }

    /// GF(3^5) with x^5 + 2x + 1.
    pub fn gf243() -> Self {
        Self::new(3, 5, vec![1, 2, 0, 0, 0, 1])
    }

    /// GF(2^9) with x^9 + x^4 + 1, the default for the binary subspace machinery.
    pub fn gf512() -> Self {
        Self::new(2, 9, vec![1, 0, 0, 0, 1, 0, 0, 0, 0, 1])
    }

    pub fn order(&self) -> Option<u64> {
        (self.p as u64).checked_pow(self.n)
    }

    /// The lexicographically first primitive polynomial of degree `n` over Z_p,
    /// scanning the non-leading coefficients as a base-p counter.
    pub fn first_primitive(p: u32, n: u32) -> Result<Self, FieldError> {
        if !is_prime(p as u64) {
            return Err(FieldError::NonPrimeCharacteristic(p));
        }
        let combos = (p as u64).checked_pow(n).ok_or(FieldError::OrderTooLarge(u64::MAX))?;
        for counter in 0..combos {
            let mut poly = Vec::with_capacity(n as usize + 1);
            let mut c = counter;
            for _ in 0..n {
                poly.push((c % p as u64) as u32);
                c /= p as u64;
            }
            poly.push(1);
            let spec = FieldSpec::new(p, n, poly);
            if spec.check_primitive().is_ok() {
                return Ok(spec);
            }
        }
        Err(FieldError::NoPrimitivePolynomial { p, n })
    }

    fn validate_shape(&self) -> Result<u64, FieldError> {
        if !is_prime(self.p as u64) {
            return Err(FieldError::NonPrimeCharacteristic(self.p));
        }
        if self.n == 0 {
            return Err(FieldError::MalformedPolynomial("degree must be at least 1".into()));
        }
        if self.poly.len() != self.n as usize + 1 {
            return Err(FieldError::MalformedPolynomial(format!(
                "expected {} coefficients, got {}",
                self.n + 1,
                self.poly.len()
            )));
        }
        if self.poly[self.n as usize] != 1 {
            return Err(FieldError::MalformedPolynomial("polynomial is not monic".into()));
        }
        if let Some(c) = self.poly.iter().find(|&&c| c >= self.p) {
            return Err(FieldError::MalformedPolynomial(format!("coefficient {c} not reduced mod {}", self.p)));
        }
        let q = self.order().ok_or(FieldError::OrderTooLarge(u64::MAX))?;
        if q > ORDER_LIMIT {
            return Err(FieldError::OrderTooLarge(q));
        }
        Ok(q)
    }

    /// Irreducibility plus x^((q-1)/r) != 1 for every prime r | q-1.
    fn check_primitive(&self) -> Result<u64, FieldError> {
        let q = self.validate_shape()?;
        let ring = PolyRing::new(self.p, self.poly.clone());
        if !ring.modulus_is_irreducible() {
            return Err(FieldError::Reducible(self.poly_string(), self.p));
        }
        let x = ring.x();
        let one = ring.one();
        let mut order = q - 1;
        for r in prime_factors(q - 1) {
            while order % r == 0 && ring.pow(&x, (order / r) as u128) == one {
                order /= r;
            }
        }
        if order != q - 1 {
            return Err(FieldError::NotPrimitive { poly: self.poly_string(), order, q_minus_1: q - 1 });
        }
        Ok(q)
    }

    pub fn poly_string(&self) -> String {
        let mut terms = Vec::new();
        for (i, &c) in self.poly.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            let coeff = if c == 1 && i > 0 { String::new() } else { c.to_string() };
            let term = match i {
                0 => coeff,
                1 => format!("{coeff}x"),
                _ => format!("{coeff}x^{i}"),
            };
            terms.push(term);
        }
        terms.join("+")
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({}^{}):{}", self.p, self.n, self.poly_string())
    }
}

/// A field element by code. Meaningful only together with its [`FieldTable`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FieldElement(pub u32);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);
    pub const ONE: FieldElement = FieldElement(1);

    pub fn code(self) -> u32 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone)]
enum Backend {
    Tables { log: Vec<u32>, antilog: Vec<u32> },
    Poly(PolyRing),
}

/// A concrete GF(p^n). Immutable once built; share it behind an `Arc`.
#[derive(Debug, Clone)]
pub struct FieldTable {
    spec: FieldSpec,
    q: u32,
    /// p^i for i in 0..n
    radix: Vec<u32>,
    x: FieldElement,
    backend: Backend,
}

impl FieldTable {
    /// Checks primitivity and builds tables (or the polynomial fallback above the budget).
    pub fn build(spec: FieldSpec) -> Result<Self, FieldError> {
        let q = spec.check_primitive()?;
        let radix: Vec<u32> = (0..spec.n).map(|i| spec.p.pow(i)).collect();
        let ring = PolyRing::new(spec.p, spec.poly.clone());
        let x = FieldElement(encode(&ring.x(), &radix));
        let backend = if q <= TABLE_BUDGET {
            let mut log = vec![u32::MAX; q as usize];
            let mut antilog = Vec::with_capacity(q as usize - 1);
            let mut cur = vec![0u32; spec.n as usize];
            cur[0] = 1;
            for e in 0..(q - 1) as u32 {
                let code = encode(&cur, &radix);
                antilog.push(code);
                log[code as usize] = e;
                cur = mul_by_x(&cur, &spec.poly, spec.p);
            }
            Backend::Tables { log, antilog }
        } else {
            Backend::Poly(ring)
        };
        Ok(Self { spec, q: q as u32, radix, x, backend })
    }

    /// Convenience for the common `Arc` usage.
    pub fn shared(spec: FieldSpec) -> Result<Arc<Self>, FieldError> {
        Self::build(spec).map(Arc::new)
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    pub fn order(&self) -> u32 {
        self.q
    }

    pub fn characteristic(&self) -> u32 {
        self.spec.p
    }

    pub fn degree(&self) -> u32 {
        self.spec.n
    }

    pub fn has_tables(&self) -> bool {
        matches!(self.backend, Backend::Tables { .. })
    }

    /// The residue class of x, a generator of the multiplicative group.
    pub fn primitive(&self) -> FieldElement {
        self.x
    }

    pub fn contains(&self, a: FieldElement) -> bool {
        a.0 < self.q
    }

    pub fn check(&self, a: FieldElement) -> Result<FieldElement, FieldError> {
        if self.contains(a) {
            Ok(a)
        } else {
            Err(FieldError::ForeignElement { code: a.0, q: self.q })
        }
    }

    pub fn elements(&self) -> impl Iterator<Item = FieldElement> {
        (0..self.q).map(FieldElement)
    }

    pub fn to_coeffs(&self, a: FieldElement) -> Vec<u32> {
        let p = self.spec.p;
        let mut c = a.0;
        (0..self.spec.n)
            .map(|_| {
                let d = c % p;
                c /= p;
                d
            })
            .collect()
    }

    pub fn from_coeffs(&self, coeffs: &[u32]) -> FieldElement {
        FieldElement(encode(coeffs, &self.radix))
    }

    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        let p = self.spec.p;
        if p == 2 {
            return FieldElement(a.0 ^ b.0);
        }
        let (mut x, mut y, mut out) = (a.0, b.0, 0);
        for &r in &self.radix {
            let d = (x % p + y % p) % p;
            out += d * r;
            x /= p;
            y /= p;
        }
        FieldElement(out)
    }

    pub fn neg(&self, a: FieldElement) -> FieldElement {
        let p = self.spec.p;
        if p == 2 {
            return a;
        }
        let (mut x, mut out) = (a.0, 0);
        for &r in &self.radix {
            out += ((p - x % p) % p) * r;
            x /= p;
        }
        FieldElement(out)
    }

    pub fn sub(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if a.0 == 0 || b.0 == 0 {
            return FieldElement::ZERO;
        }
        match &self.backend {
            Backend::Tables { log, antilog } => {
                let e = (log[a.0 as usize] as u64 + log[b.0 as usize] as u64) % (self.q as u64 - 1);
                FieldElement(antilog[e as usize])
            }
            Backend::Poly(ring) => {
                if self.spec.p == 2 {
                    FieldElement(clmul_mod(a.0, b.0, &self.spec.poly))
                } else {
                    let prod = ring.mul(&self.to_coeffs(a), &self.to_coeffs(b));
                    self.from_coeffs(&prod)
                }
            }
        }
    }

    /// a^e; negative exponents invert. `pow(0, e)` is 0 for e > 0 and 1 for e = 0.
    pub fn pow(&self, a: FieldElement, e: i64) -> FieldElement {
        if e == 0 {
            return FieldElement::ONE;
        }
        if a.0 == 0 {
            return FieldElement::ZERO;
        }
        let m = self.q as i64 - 1;
        let e = e.rem_euclid(m) as u64;
        match &self.backend {
            Backend::Tables { log, antilog } => {
                let l = (log[a.0 as usize] as u64 * e) % m as u64;
                FieldElement(antilog[l as usize])
            }
            Backend::Poly(_) => {
                let (mut base, mut acc, mut e) = (a, FieldElement::ONE, e);
                while e > 0 {
                    if e & 1 == 1 {
                        acc = self.mul(acc, base);
                    }
                    base = self.mul(base, base);
                    e >>= 1;
                }
                acc
            }
        }
    }

    pub fn inv(&self, a: FieldElement) -> Option<FieldElement> {
        (a.0 != 0).then(|| self.pow(a, -1))
    }

    /// x^e for the primitive element x.
    pub fn exp(&self, e: i64) -> FieldElement {
        match &self.backend {
            Backend::Tables { antilog, .. } => {
                FieldElement(antilog[e.rem_euclid(self.q as i64 - 1) as usize])
            }
            Backend::Poly(_) => self.pow(self.x, e),
        }
    }

    /// Discrete log to base x, in [0, q-2]. `None` for zero.
    pub fn log(&self, a: FieldElement) -> Option<u32> {
        if a.0 == 0 || a.0 >= self.q {
            return None;
        }
        match &self.backend {
            Backend::Tables { log, .. } => Some(log[a.0 as usize]),
            Backend::Poly(_) => Some(self.bsgs_log(a)),
        }
    }

    fn bsgs_log(&self, a: FieldElement) -> u32 {
        let order = self.q as u64 - 1;
        let m = (order as f64).sqrt().ceil() as u64;
        let mut baby = HashMap::with_capacity(m as usize);
        let mut cur = FieldElement::ONE;
        for j in 0..m {
            baby.entry(cur.0).or_insert(j);
            cur = self.mul(cur, self.x);
        }
        let giant = self.pow(self.x, -(m as i64));
        let mut gamma = a;
        for i in 0..=m {
            if let Some(&j) = baby.get(&gamma.0) {
                return ((i * m + j) % order) as u32;
            }
            gamma = self.mul(gamma, giant);
        }
        unreachable!("x is primitive, so every nonzero element has a log")
    }

    /// Multiplicative order of a nonzero element.
    pub fn multiplicative_order(&self, a: FieldElement) -> Option<u64> {
        if a.0 == 0 {
            return None;
        }
        let mut order = self.q as u64 - 1;
        for r in prime_factors(order) {
            while order.is_multiple_of(r) && self.pow(a, (order / r) as i64) == FieldElement::ONE {
                order /= r;
            }
        }
        Some(order)
    }

    pub fn sum(&self, items: impl IntoIterator<Item = FieldElement>) -> FieldElement {
        items.into_iter().fold(FieldElement::ZERO, |acc, x| self.add(acc, x))
    }

    /// True iff the elements sum to zero. The empty set is zero-sum.
    pub fn is_zero_sum(&self, items: &[FieldElement]) -> Result<bool, FieldError> {
        for &a in items {
            self.check(a)?;
        }
        Ok(self.sum(items.iter().copied()).is_zero())
    }

    /// Zero-sum k-subsets of `items`, in lexicographic order of positions,
    /// stopping after `limit` hits when given.
    pub fn zero_sum_k_subsets(
        &self,
        items: &[FieldElement],
        k: usize,
        limit: Option<usize>,
    ) -> Vec<Vec<FieldElement>> {
        let mut out = Vec::new();
        if k > items.len() {
            return out;
        }
        let mut stack = Vec::with_capacity(k);
        self.zero_sum_rec(items, k, 0, FieldElement::ZERO, &mut stack, &mut out, limit);
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn zero_sum_rec(
        &self,
        items: &[FieldElement],
        k: usize,
        start: usize,
        partial: FieldElement,
        stack: &mut Vec<usize>,
        out: &mut Vec<Vec<FieldElement>>,
        limit: Option<usize>,
    ) -> bool {
        if stack.len() == k {
            if partial.is_zero() {
                out.push(stack.iter().map(|&i| items[i]).collect());
                if limit.is_some_and(|l| out.len() >= l) {
                    return true;
                }
            }
            return false;
        }
        let remaining = k - stack.len();
        for i in start..=items.len() - remaining {
            stack.push(i);
            let done = self.zero_sum_rec(items, k, i + 1, self.add(partial, items[i]), stack, out, limit);
            stack.pop();
            if done {
                return true;
            }
        }
        false
    }
}

fn encode(coeffs: &[u32], radix: &[u32]) -> u32 {
    coeffs.iter().zip(radix).map(|(&c, &r)| c * r).sum()
}

fn mul_by_x(v: &[u32], poly: &[u32], p: u32) -> Vec<u32> {
    let n = v.len();
    let top = v[n - 1];
    let mut out = Vec::with_capacity(n);
    out.push(0);
    out.extend_from_slice(&v[..n - 1]);
    for i in 0..n {
        out[i] = (out[i] + p * p - (top * poly[i]) % p) % p;
    }
    out
}

/// Carry-less product modulo a binary polynomial (p = 2 fallback path).
fn clmul_mod(a: u32, b: u32, poly: &[u32]) -> u32 {
    let n = poly.len() - 1;
    let modulus: u64 = poly.iter().enumerate().map(|(i, &c)| (c as u64) << i).sum();
    let mut acc: u64 = 0;
    let (a, mut b) = (a as u64, b as u64);
    let mut shift = 0;
    while b > 0 {
        if b & 1 == 1 {
            acc ^= a << shift;
        }
        b >>= 1;
        shift += 1;
    }
    for bit in (n..2 * n).rev() {
        if acc >> bit & 1 == 1 {
            acc ^= modulus << (bit - n);
        }
    }
    acc as u32
}

/// The order-n subgroup R_{q,n} of the multiplicative group, listed as
/// generator^0, ..., generator^(n-1) with generator = x^((q-1)/n).
#[derive(Debug, Clone)]
pub struct UnityRoots {
    field: Arc<FieldTable>,
    n: u32,
    generator: FieldElement,
    elements: Vec<FieldElement>,
    index: HashMap<u32, u32>,
}

impl UnityRoots {
    pub fn new(field: &Arc<FieldTable>, n: u32) -> Result<Self, FieldError> {
        let q_minus_1 = field.order() as u64 - 1;
        if n == 0 || !q_minus_1.is_multiple_of(n as u64) {
            return Err(FieldError::OrderDoesNotDivide { n: n as u64, q_minus_1 });
        }
        let generator = field.exp((q_minus_1 / n as u64) as i64);
        let mut elements = Vec::with_capacity(n as usize);
        let mut cur = FieldElement::ONE;
        for _ in 0..n {
            elements.push(cur);
            cur = field.mul(cur, generator);
        }
        let index = elements.iter().enumerate().map(|(i, e)| (e.0, i as u32)).collect();
        Ok(Self { field: Arc::clone(field), n, generator, elements, index })
    }

    pub fn field(&self) -> &Arc<FieldTable> {
        &self.field
    }

    pub fn order(&self) -> u32 {
        self.n
    }

    pub fn generator(&self) -> FieldElement {
        self.generator
    }

    pub fn elements(&self) -> &[FieldElement] {
        &self.elements
    }

    /// generator^e, exponent taken mod n.
    pub fn element(&self, e: i64) -> FieldElement {
        self.elements[e.rem_euclid(self.n as i64) as usize]
    }

    /// The exponent h with generator^h = a, if a lies in the subgroup.
    pub fn exponent_of(&self, a: FieldElement) -> Option<u32> {
        self.index.get(&a.0).copied()
    }

    pub fn contains(&self, a: FieldElement) -> bool {
        self.index.contains_key(&a.0)
    }
}

/// Free-function form of [`UnityRoots::new`].
pub fn roots_of_unity(field: &Arc<FieldTable>, n: u32) -> Result<UnityRoots, FieldError> {
    UnityRoots::new(field, n)
}
