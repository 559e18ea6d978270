//! The associative superalgebra O(m,n;t): the divided power algebra on m
//! even variables truncated at exponents p^{t_i}-1, tensored with the
//! exterior algebra on n odd variables x_{m+1},...,x_{m+n}.
//!
//! Monomials x^(alpha) x^u are enumerated once per parameter set and
//! referenced by index everywhere else.

use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use crate::field::{FieldCtx, Scalar, SparseVec};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SpaceError {
    #[error("need at least one even variable (m >= 1)")]
    NoEvenVariables,
    #[error("need n > 1 odd variables, got {0}")]
    TooFewOddVariables(usize),
    #[error("truncation exponents must all be >= 1")]
    BadTruncation,
    #[error("t must have length m = {m}, got {got}")]
    TruncationLength { m: usize, got: usize },
    #[error("superalgebra dimension {0} exceeds the supported limit")]
    TooLarge(u64),
    #[error("at most 30 odd variables are supported, got {0}")]
    TooManyOddVariables(usize),
}

/// Binomial coefficient mod p via base-p digit products.
/// C(a,b) = prod_k C(a_k, b_k) mod p, and 0 when b > a.
pub fn lucas_binom(a: u64, b: u64, p: u64) -> Scalar {
    if b > a {
        return 0;
    }
    let (mut a, mut b) = (a, b);
    let mut acc = 1u64;
    while b > 0 || a > 0 {
        let (da, db) = (a % p, b % p);
        if db > da {
            return 0;
        }
        // C(da, db) for digits < p
        let mut c = 1u64;
        for k in 0..db {
            c = c * (da - k) % p;
            c = c * mod_inv(k + 1, p) % p;
        }
        acc = acc * c % p;
        a /= p;
        b /= p;
    }
    acc
}

fn mod_inv(a: u64, p: u64) -> u64 {
    // p prime, a != 0 mod p
    let mut result = 1u64;
    let mut base = a % p;
    let mut exp = p - 2;
    while exp > 0 {
        if exp & 1 == 1 {
            result = result * base % p;
        }
        base = base * base % p;
        exp >>= 1;
    }
    result
}

/// Parameters (m, n, t, p) of O(m,n;t).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpaceParams {
    pub m: usize,
    pub n: usize,
    pub t: Vec<u32>,
    pub ctx: FieldCtx,
}

impl SpaceParams {
    pub fn new(m: usize, n: usize, t: Vec<u32>, ctx: FieldCtx) -> Result<Self, SpaceError> {
        if m < 1 {
            return Err(SpaceError::NoEvenVariables);
        }
        if n <= 1 {
            return Err(SpaceError::TooFewOddVariables(n));
        }
        if n > 30 {
            return Err(SpaceError::TooManyOddVariables(n));
        }
        if t.len() != m {
            return Err(SpaceError::TruncationLength { m, got: t.len() });
        }
        if t.iter().any(|&ti| ti == 0) {
            return Err(SpaceError::BadTruncation);
        }
        Ok(SpaceParams { m, n, t, ctx })
    }

    /// pi_i = p^{t_i} - 1, the top exponent of x_i.
    pub fn pi(&self, i: usize) -> u64 {
        self.ctx.p().pow(self.t[i]) - 1
    }

    pub fn vars(&self) -> usize {
        self.m + self.n
    }
}

/// A monomial x^(alpha) x^u. `shuffle` bit k set means the odd variable
/// x_{m+1+k} is present.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial {
    pub alpha: Vec<u32>,
    pub shuffle: u32,
}

impl Monomial {
    pub fn parity(&self) -> u8 {
        (self.shuffle.count_ones() & 1) as u8
    }

    pub fn nat_degree(&self) -> u64 {
        self.alpha.iter().map(|&a| a as u64).sum::<u64>() + self.shuffle.count_ones() as u64
    }

    fn shuffle_indices(&self, m: usize) -> Vec<usize> {
        (0..32)
            .filter(|k| self.shuffle >> k & 1 == 1)
            .map(|k| m + 1 + k)
            .collect()
    }

    /// Canonical sort key: (natural degree, alpha reversed-lex, shuffle lex).
    fn sort_key(&self, m: usize) -> (u64, Vec<u32>, Vec<usize>) {
        let rev: Vec<u32> = self.alpha.iter().rev().copied().collect();
        (self.nat_degree(), rev, self.shuffle_indices(m))
    }
}

/// Z-degrees of the variables. The principal grading assigns 1 to every
/// variable except the distinguished contact variable (x_m for K,
/// x_{2m+1} for KO and SKO), which gets 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grading {
    pub zx: Vec<i64>,
}

impl Grading {
    pub fn standard(vars: usize) -> Self {
        Grading {
            zx: vec![1; vars],
        }
    }

    /// `contact_var` is the 1-based index of the degree-2 variable, if any.
    pub fn with_contact(vars: usize, contact_var: Option<usize>) -> Self {
        let mut zx = vec![1i64; vars];
        if let Some(i) = contact_var {
            zx[i - 1] = 2;
        }
        Grading { zx }
    }

    pub fn var_deg(&self, i: usize) -> i64 {
        self.zx[i - 1]
    }
}

/// Index maps of the variable set: the involution `'` (pairing i <-> i+r on
/// the even part), the involution `~` (i <-> i+m), and the sign sigma.
#[derive(Debug, Clone, Copy)]
pub struct IndexMaps {
    pub m: usize,
    pub n: usize,
    pub r: usize,
}

impl IndexMaps {
    pub fn new(m: usize, n: usize) -> Self {
        IndexMaps { m, n, r: m / 2 }
    }

    /// i' = i + r for i <= r, i - r for r < i <= 2r, identity elsewhere.
    pub fn prime(&self, i: usize) -> usize {
        if i <= self.r {
            i + self.r
        } else if i <= 2 * self.r {
            i - self.r
        } else {
            i
        }
    }

    /// ~i = i + m for i <= m, i - m for m < i <= 2m. Defined for i <= 2m.
    pub fn tilde(&self, i: usize) -> usize {
        debug_assert!(i <= 2 * self.m);
        if i <= self.m {
            i + self.m
        } else {
            i - self.m
        }
    }

    /// sigma(i) = -1 exactly for r < i <= 2r.
    pub fn sigma(&self, i: usize) -> i64 {
        if i > self.r && i <= 2 * self.r {
            -1
        } else {
            1
        }
    }
}

/// Sparse linear combination of monomials, indexed into a `Space` table.
pub type SuperPoly = SparseVec;

/// The enumerated superalgebra O(m,n;t) with its multiplication table data.
#[derive(Debug)]
pub struct Space {
    pub params: SpaceParams,
    pi: Vec<u64>,
    monos: Vec<Monomial>,
    /// mixed-radix rank -> canonical index
    rank_to_id: Vec<u32>,
    strides: Vec<u64>,
}

pub type SpaceRef = Arc<Space>;

impl Space {
    pub fn new(params: SpaceParams) -> Result<SpaceRef, SpaceError> {
        let p = params.ctx.p();
        let mut even_dim: u64 = 1;
        let mut strides = Vec::with_capacity(params.m);
        for i in 0..params.m {
            strides.push(even_dim);
            even_dim = even_dim
                .checked_mul(p.pow(params.t[i]))
                .ok_or(SpaceError::TooLarge(u64::MAX))?;
        }
        let dim = even_dim
            .checked_mul(1u64 << params.n)
            .ok_or(SpaceError::TooLarge(u64::MAX))?;
        if dim > 1 << 24 {
            return Err(SpaceError::TooLarge(dim));
        }
        let pi: Vec<u64> = (0..params.m).map(|i| params.pi(i)).collect();

        let mut monos = Vec::with_capacity(dim as usize);
        let mut alpha = vec![0u32; params.m];
        loop {
            for mask in 0u32..(1u32 << params.n) {
                monos.push(Monomial {
                    alpha: alpha.clone(),
                    shuffle: mask,
                });
            }
            // increment mixed-radix alpha
            let mut i = 0;
            loop {
                if i == params.m {
                    break;
                }
                if (alpha[i] as u64) < pi[i] {
                    alpha[i] += 1;
                    break;
                }
                alpha[i] = 0;
                i += 1;
            }
            if i == params.m {
                break;
            }
        }
        let m = params.m;
        monos.sort_by(|a, b| a.sort_key(m).cmp(&b.sort_key(m)));

        let mut rank_to_id = vec![0u32; dim as usize];
        for (id, mono) in monos.iter().enumerate() {
            let r = Self::rank_of(&strides, even_dim, mono);
            rank_to_id[r as usize] = id as u32;
        }
        Ok(Arc::new(Space {
            params,
            pi,
            monos,
            rank_to_id,
            strides,
        }))
    }

    fn rank_of(strides: &[u64], even_dim: u64, mono: &Monomial) -> u64 {
        let mut r = 0u64;
        for (i, &a) in mono.alpha.iter().enumerate() {
            r += a as u64 * strides[i];
        }
        r + mono.shuffle as u64 * even_dim
    }

    pub fn dim(&self) -> usize {
        self.monos.len()
    }

    pub fn mono(&self, id: u32) -> &Monomial {
        &self.monos[id as usize]
    }

    pub fn id_of(&self, mono: &Monomial) -> u32 {
        let even_dim = self.rank_to_id.len() as u64 >> self.params.n;
        self.rank_to_id[Self::rank_of(&self.strides, even_dim, mono) as usize]
    }

    /// The constant monomial 1.
    pub fn one(&self) -> u32 {
        self.id_of(&Monomial {
            alpha: vec![0; self.params.m],
            shuffle: 0,
        })
    }

    /// x_i as a monomial id (1-based variable index).
    pub fn var(&self, i: usize) -> u32 {
        let m = self.params.m;
        let mono = if i <= m {
            let mut alpha = vec![0u32; m];
            alpha[i - 1] = 1;
            Monomial { alpha, shuffle: 0 }
        } else {
            Monomial {
                alpha: vec![0; m],
                shuffle: 1 << (i - m - 1),
            }
        };
        self.id_of(&mono)
    }

    /// x^(k e_i) for an even variable.
    pub fn even_power(&self, i: usize, k: u64) -> Option<u32> {
        if k > self.pi[i - 1] {
            return None;
        }
        let mut alpha = vec![0u32; self.params.m];
        alpha[i - 1] = k as u32;
        Some(self.id_of(&Monomial {
            alpha,
            shuffle: 0,
        }))
    }

    pub fn parity(&self, id: u32) -> u8 {
        self.monos[id as usize].parity()
    }

    /// Z-degree of a monomial under the given grading.
    pub fn zdeg(&self, grading: &Grading, id: u32) -> i64 {
        let mono = &self.monos[id as usize];
        let mut d = 0i64;
        for (i, &a) in mono.alpha.iter().enumerate() {
            d += a as i64 * grading.zx[i];
        }
        for k in 0..self.params.n {
            if mono.shuffle >> k & 1 == 1 {
                d += grading.zx[self.params.m + k];
            }
        }
        d
    }

    /// Eigenvalue of x_k d/dx_k on a monomial (1-based k).
    pub fn weight_entry(&self, id: u32, k: usize) -> u64 {
        let mono = &self.monos[id as usize];
        if k <= self.params.m {
            mono.alpha[k - 1] as u64 % self.params.ctx.p()
        } else {
            (mono.shuffle >> (k - self.params.m - 1) & 1) as u64
        }
    }

    /// Product of two monomials: coefficient and result, or None when the
    /// product is zero (exterior collision, truncation, or binomial = 0).
    pub fn mono_mul(&self, a: u32, b: u32) -> Option<(Scalar, u32)> {
        let (ma, mb) = (&self.monos[a as usize], &self.monos[b as usize]);
        if ma.shuffle & mb.shuffle != 0 {
            return None;
        }
        let p = self.params.ctx.p();
        let mut coeff = 1u64;
        let mut alpha = Vec::with_capacity(self.params.m);
        for i in 0..self.params.m {
            let s = ma.alpha[i] as u64 + mb.alpha[i] as u64;
            if s > self.pi[i] {
                return None;
            }
            coeff = coeff * lucas_binom(s, ma.alpha[i] as u64, p) % p;
            if coeff == 0 {
                return None;
            }
            alpha.push(s as u32);
        }
        // sign of merging the shuffles: (-1)^{#\{(i,j) : i in a, j in b, i > j\}}
        let mut inversions = 0u32;
        let mut ai = ma.shuffle;
        while ai != 0 {
            let bit = ai.trailing_zeros();
            inversions += (mb.shuffle & ((1u32 << bit) - 1)).count_ones();
            ai &= ai - 1;
        }
        if inversions & 1 == 1 {
            coeff = p - coeff;
        }
        let id = self.id_of(&Monomial {
            alpha,
            shuffle: ma.shuffle | mb.shuffle,
        });
        Some((coeff, id))
    }

    /// Partial derivative of a monomial in direction i (1-based).
    /// For an odd direction the sign follows the left Leibniz rule:
    /// the derivative anticommutes past each earlier odd variable.
    pub fn partial_mono(&self, i: usize, id: u32) -> Option<(Scalar, u32)> {
        let mono = &self.monos[id as usize];
        let m = self.params.m;
        if i <= m {
            if mono.alpha[i - 1] == 0 {
                return None;
            }
            let mut alpha = mono.alpha.clone();
            alpha[i - 1] -= 1;
            Some((
                1,
                self.id_of(&Monomial {
                    alpha,
                    shuffle: mono.shuffle,
                }),
            ))
        } else {
            let bit = i - m - 1;
            if mono.shuffle >> bit & 1 == 0 {
                return None;
            }
            let before = (mono.shuffle & ((1u32 << bit) - 1)).count_ones();
            let coeff = self.params.ctx.sign(before);
            Some((
                coeff,
                self.id_of(&Monomial {
                    alpha: mono.alpha.clone(),
                    shuffle: mono.shuffle & !(1u32 << bit),
                }),
            ))
        }
    }

    // -- linear extensions ---------------------------------------------------

    pub fn poly_mul(&self, f: &SuperPoly, g: &SuperPoly) -> SuperPoly {
        let ctx = self.params.ctx;
        let mut terms = Vec::new();
        for &(a, ca) in f {
            for &(b, cb) in g {
                if let Some((c, id)) = self.mono_mul(a, b) {
                    terms.push((id, ctx.mul(ctx.mul(ca, cb), c)));
                }
            }
        }
        crate::field::collect_terms(&ctx, terms)
    }

    pub fn partial(&self, i: usize, f: &SuperPoly) -> SuperPoly {
        let ctx = self.params.ctx;
        let mut terms = Vec::new();
        for &(a, ca) in f {
            if let Some((c, id)) = self.partial_mono(i, a) {
                terms.push((id, ctx.mul(ca, c)));
            }
        }
        crate::field::collect_terms(&ctx, terms)
    }

    /// Multiply by the single variable x_i on the left.
    pub fn mul_var(&self, i: usize, f: &SuperPoly) -> SuperPoly {
        let xi: SuperPoly = vec![(self.var(i), 1)];
        self.poly_mul(&xi, f)
    }

    pub fn mono_text(&self, id: u32) -> String {
        let mono = &self.monos[id as usize];
        let mut s = String::from("x^(");
        for (i, &a) in mono.alpha.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            let _ = write!(s, "{a}");
        }
        s.push(')');
        for idx in mono.shuffle_indices(self.params.m) {
            let _ = write!(s, "*x[{idx}]");
        }
        s
    }

    pub fn poly_text(&self, f: &SuperPoly) -> String {
        if f.is_empty() {
            return "0".into();
        }
        let mut parts: Vec<(String, Scalar)> = f
            .iter()
            .map(|&(id, c)| (self.mono_text(id), c))
            .collect();
        parts.sort();
        parts
            .iter()
            .map(|(t, c)| format!("{c}*{t}"))
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(m: usize, n: usize, t: &[u32], p: u64) -> SpaceRef {
        let ctx = FieldCtx::new(p).unwrap();
        Space::new(SpaceParams::new(m, n, t.to_vec(), ctx).unwrap()).unwrap()
    }

    // Pascal-triangle oracle for binomials mod p.
    fn binom_oracle(a: usize, b: usize, p: u64) -> u64 {
        let mut row = vec![1u64];
        for _ in 0..a {
            let mut next = vec![1u64; row.len() + 1];
            for j in 1..row.len() {
                next[j] = (row[j - 1] + row[j]) % p;
            }
            if !row.is_empty() {
                let last = next.len() - 1;
                next[last] = 1;
            }
            row = next;
        }
        if b < row.len() {
            row[b]
        } else {
            0
        }
    }

    #[test]
    fn lucas_matches_pascal() {
        for p in [5u64, 7] {
            for a in 0..60usize {
                for b in 0..=a {
                    assert_eq!(
                        lucas_binom(a as u64, b as u64, p),
                        binom_oracle(a, b, p),
                        "C({a},{b}) mod {p}"
                    );
                }
            }
        }
        assert_eq!(lucas_binom(10, 0, 5), 1);
        assert_eq!(lucas_binom(6, 3, 5), 0); // 20 mod 5
        assert_eq!(lucas_binom(3, 7, 5), 0);
    }

    // C(l p^a - b, p^a) = l - 1 mod p for 1 <= b <= p-1, 1 <= l <= p, a >= 1.
    #[test]
    fn lucas_power_identity() {
        let p = 5u64;
        for a in 1..=2u32 {
            for l in 1..=p {
                for b in 1..p {
                    let top = l * p.pow(a) - b;
                    assert_eq!(lucas_binom(top, p.pow(a), p), (l - 1) % p);
                }
            }
        }
    }

    #[test]
    fn dimension_by_enumeration() {
        let s = space(1, 2, &[1], 5);
        assert_eq!(s.dim(), 5 * 4);
        let s = space(2, 2, &[2, 1], 5);
        assert_eq!(s.dim(), 25 * 5 * 4);
    }

    #[test]
    fn divided_power_products() {
        let s = space(1, 2, &[1], 5);
        let x1 = s.var(1);
        // x^(e1) * x^(e1) = 2 x^(2 e1)
        let (c, id) = s.mono_mul(x1, x1).unwrap();
        assert_eq!(c, 2);
        assert_eq!(id, s.even_power(1, 2).unwrap());
        // x^(2e1) * x^(2e1) = C(4,2) x^(4e1) = 6 = 1 mod 5
        let x2e = s.even_power(1, 2).unwrap();
        let (c, id) = s.mono_mul(x2e, x2e).unwrap();
        assert_eq!(c, 1);
        assert_eq!(id, s.even_power(1, 4).unwrap());
        // truncation: x^(pi e1) * x^(e1) = 0
        let top = s.even_power(1, 4).unwrap();
        assert!(s.mono_mul(top, x1).is_none());
    }

    #[test]
    fn exterior_products() {
        let s = space(1, 2, &[1], 5);
        let (x2, x3) = (s.var(2), s.var(3)); // odd variables
        assert!(s.mono_mul(x2, x2).is_none());
        // x3 * x2 = -x2 x3
        let (c, id) = s.mono_mul(x3, x2).unwrap();
        assert_eq!(c, 4);
        let (c2, id2) = s.mono_mul(x2, x3).unwrap();
        assert_eq!(c2, 1);
        assert_eq!(id, id2);
    }

    #[test]
    fn square_of_odd_sum_vanishes() {
        let s = space(1, 2, &[1], 5);
        let f: SuperPoly = vec![(s.var(2), 1), (s.var(3), 1)];
        let sq = s.poly_mul(&f, &f);
        assert!(sq.is_empty());
    }

    #[test]
    fn supercommutativity_exhaustive() {
        let s = space(1, 2, &[1], 5);
        let ctx = s.params.ctx;
        for a in 0..s.dim() as u32 {
            for b in 0..s.dim() as u32 {
                let ab = s.mono_mul(a, b);
                let ba = s.mono_mul(b, a);
                let sign = ctx.sign((s.parity(a) & s.parity(b)) as u32);
                match (ab, ba) {
                    (None, None) => {}
                    (Some((c1, i1)), Some((c2, i2))) => {
                        assert_eq!(i1, i2);
                        assert_eq!(c1, ctx.mul(sign, c2));
                    }
                    _ => panic!("one product vanished, the other did not"),
                }
            }
        }
    }

    #[test]
    fn associativity_random_triples() {
        let s = space(2, 2, &[1, 1], 5);
        let mut state = 12345u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for _ in 0..200 {
            let f: SuperPoly = vec![(next() as u32 % s.dim() as u32, 1 + next() % 4)];
            let g: SuperPoly = vec![(next() as u32 % s.dim() as u32, 1 + next() % 4)];
            let h: SuperPoly = vec![(next() as u32 % s.dim() as u32, 1 + next() % 4)];
            let lhs = s.poly_mul(&s.poly_mul(&f, &g), &h);
            let rhs = s.poly_mul(&f, &s.poly_mul(&g, &h));
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn partial_derivatives() {
        let s = space(1, 2, &[1], 5);
        // d1 x^(3e1) = x^(2e1)
        let x3 = s.even_power(1, 3).unwrap();
        let d = s.partial(1, &vec![(x3, 1)]);
        assert_eq!(d, vec![(s.even_power(1, 2).unwrap(), 1)]);
        // m+1 = 2, m+2 = 3: d2 (x2 x3) = x3, d3 (x2 x3) = -x2
        let (_, x23) = s.mono_mul(s.var(2), s.var(3)).unwrap();
        assert_eq!(s.partial(2, &vec![(x23, 1)]), vec![(s.var(3), 1)]);
        assert_eq!(s.partial(3, &vec![(x23, 1)]), vec![(s.var(2), 4)]);
    }

    #[test]
    fn partials_supercommute() {
        let s = space(2, 3, &[1, 1], 5);
        let ctx = s.params.ctx;
        let vars = s.params.vars();
        for i in 1..=vars {
            for j in 1..=vars {
                let pi = if i <= 2 { 0u32 } else { 1 };
                let pj = if j <= 2 { 0u32 } else { 1 };
                for id in 0..s.dim() as u32 {
                    let f: SuperPoly = vec![(id, 1)];
                    let ij = s.partial(i, &s.partial(j, &f));
                    let mut ji = s.partial(j, &s.partial(i, &f));
                    crate::field::scale(&ctx, &mut ji, ctx.sign(pi * pj));
                    assert_eq!(ij, ji, "i={i} j={j} id={id}");
                }
            }
        }
    }

    #[test]
    fn partial_is_a_superderivation() {
        // D(ab) = D(a) b + (-1)^{|D||a|} a D(b) on all basis pairs
        let s = space(1, 3, &[1], 5);
        let ctx = s.params.ctx;
        for i in 1..=s.params.vars() {
            let pd = if i <= 1 { 0 } else { 1u32 };
            for a in 0..s.dim() as u32 {
                for b in 0..s.dim() as u32 {
                    let (fa, fb): (SuperPoly, SuperPoly) = (vec![(a, 1)], vec![(b, 1)]);
                    let prod = s.poly_mul(&fa, &fb);
                    let lhs = s.partial(i, &prod);
                    let mut rhs = s.poly_mul(&s.partial(i, &fa), &fb);
                    let mut second = s.poly_mul(&fa, &s.partial(i, &fb));
                    crate::field::scale(&ctx, &mut second, ctx.sign(pd * s.parity(a) as u32));
                    for t in second {
                        crate::field::axpy(&ctx, &mut rhs, 1, &[t]);
                    }
                    assert_eq!(lhs, rhs);
                }
            }
        }
    }

    #[test]
    fn zdeg_per_family_grading() {
        let s = space(1, 2, &[1], 5);
        let w = Grading::standard(3);
        assert_eq!(s.zdeg(&w, s.var(1)), 1);
        // K grading with m odd: x_m has degree 2
        let k = Grading::with_contact(3, Some(1));
        assert_eq!(s.zdeg(&k, s.even_power(1, 2).unwrap()), 4);
        // KO grading on O(m, m+1): x_{2m+1} has degree 2
        let s2 = space(3, 4, &[1, 1, 1], 5);
        let ko = Grading::with_contact(7, Some(7));
        assert_eq!(s2.zdeg(&ko, s2.var(7)), 2);
    }

    #[test]
    fn index_maps() {
        let maps = IndexMaps::new(4, 4); // m = 2r = 4
        assert_eq!(maps.prime(1), 3);
        assert_eq!(maps.prime(3), 1);
        assert_eq!(maps.prime(5), 5);
        assert_eq!(maps.sigma(3), -1);
        assert_eq!(maps.sigma(1), 1);
        assert_eq!(maps.sigma(5), 1);
        for i in 1..=8 {
            assert_eq!(maps.prime(maps.prime(i)), i);
            assert_eq!(maps.tilde(maps.tilde(i)), i);
        }
        // sigma(i) sigma(i') = -1 on the paired even part
        for i in 1..=4 {
            assert_eq!(maps.sigma(i) * maps.sigma(maps.prime(i)), -1);
        }
        let odd = IndexMaps::new(3, 2); // m = 2r+1 = 3
        assert_eq!(odd.prime(1), 2);
        assert_eq!(odd.prime(2), 1);
        assert_eq!(odd.prime(3), 3);
    }

    #[test]
    fn mono_text_form() {
        let s = space(2, 2, &[1, 1], 5);
        let (_, x34) = s.mono_mul(s.var(3), s.var(4)).unwrap();
        let (_, id) = s.mono_mul(s.even_power(1, 2).unwrap(), x34).unwrap();
        assert_eq!(s.mono_text(id), "x^(2,0)*x[3]*x[4]");
    }
}
