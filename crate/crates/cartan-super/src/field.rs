//! Exact arithmetic in GF(p) for prime p > 3, plus the sparse linear
//! algebra kernel (echelon forms, nullspace, rank, span membership) that
//! every other module is built on.
//!
//! All bases produced here are in reduced row echelon form with a fixed
//! pivot rule (leftmost nonzero column, smallest row index), so identical
//! inputs give bit-identical outputs.

use std::collections::HashMap;

use thiserror::Error;

/// Canonical residue in `[0, p)`.
pub type Scalar = u64;

/// Sparse vector: strictly increasing column indices, no zero entries.
pub type SparseVec = Vec<(u32, Scalar)>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FieldError {
    #[error("modulus {0} is not prime")]
    NotPrime(u64),
    #[error("modulus {0} is not > 3")]
    TooSmall(u64),
    #[error("modulus {0} exceeds 2^31")]
    TooLarge(u64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// The ground field GF(p), p prime and > 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldCtx {
    p: u64,
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

impl FieldCtx {
    pub fn new(p: u64) -> Result<Self, FieldError> {
        if p <= 3 {
            return Err(FieldError::TooSmall(p));
        }
        if p > (1 << 31) {
            return Err(FieldError::TooLarge(p));
        }
        if !is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        Ok(FieldCtx { p })
    }

    #[inline(always)]
    pub fn p(&self) -> u64 {
        self.p
    }

    #[inline(always)]
    pub fn add(&self, a: Scalar, b: Scalar) -> Scalar {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline(always)]
    pub fn sub(&self, a: Scalar, b: Scalar) -> Scalar {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    #[inline(always)]
    pub fn neg(&self, a: Scalar) -> Scalar {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    #[inline(always)]
    pub fn mul(&self, a: Scalar, b: Scalar) -> Scalar {
        (a * b) % self.p
    }

    pub fn pow(&self, mut base: Scalar, mut exp: u64) -> Scalar {
        let mut acc = 1u64;
        base %= self.p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    pub fn inv(&self, a: Scalar) -> Scalar {
        debug_assert!(a % self.p != 0, "inverse of zero");
        self.pow(a, self.p - 2)
    }

    /// Canonical residue of a signed integer.
    #[inline]
    pub fn from_i64(&self, v: i64) -> Scalar {
        let p = self.p as i64;
        (((v % p) + p) % p) as u64
    }

    /// `-1` if `sign` is odd, `+1` otherwise.
    #[inline]
    pub fn sign(&self, sign: u32) -> Scalar {
        if sign & 1 == 1 {
            self.p - 1
        } else {
            1
        }
    }
}

// ---------------------------------------------------------------------------
// Sparse vector helpers
// ---------------------------------------------------------------------------

/// `dst += c * src`, keeping `dst` sorted and zero-free.
pub fn axpy(ctx: &FieldCtx, dst: &mut SparseVec, c: Scalar, src: &[(u32, Scalar)]) {
    if c == 0 || src.is_empty() {
        return;
    }
    let mut out = Vec::with_capacity(dst.len() + src.len());
    let (mut i, mut j) = (0usize, 0usize);
    while i < dst.len() || j < src.len() {
        if j >= src.len() || (i < dst.len() && dst[i].0 < src[j].0) {
            out.push(dst[i]);
            i += 1;
        } else if i >= dst.len() || src[j].0 < dst[i].0 {
            let v = ctx.mul(c, src[j].1);
            if v != 0 {
                out.push((src[j].0, v));
            }
            j += 1;
        } else {
            let v = ctx.add(dst[i].1, ctx.mul(c, src[j].1));
            if v != 0 {
                out.push((dst[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
    *dst = out;
}

pub fn scale(ctx: &FieldCtx, v: &mut SparseVec, c: Scalar) {
    if c == 0 {
        v.clear();
        return;
    }
    for (_, x) in v.iter_mut() {
        *x = ctx.mul(*x, c);
    }
}

/// Collapse an unsorted list of (index, value) terms into a canonical sparse vector.
pub fn collect_terms(ctx: &FieldCtx, mut terms: Vec<(u32, Scalar)>) -> SparseVec {
    terms.sort_unstable_by_key(|t| t.0);
    let mut out: SparseVec = Vec::with_capacity(terms.len());
    for (idx, val) in terms {
        if let Some(last) = out.last_mut() {
            if last.0 == idx {
                last.1 = ctx.add(last.1, val);
                if last.1 == 0 {
                    out.pop();
                }
                continue;
            }
        }
        if val % ctx.p() != 0 {
            out.push((idx, val % ctx.p()));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Incremental echelon span tracker
// ---------------------------------------------------------------------------

/// A subspace maintained in reduced row echelon form. Vectors can be
/// inserted one at a time; the rows stay fully reduced so membership tests
/// and coordinates are a single sweep.
///
/// With `tracking` enabled, each row also carries its expression over the
/// sequence of inserted generators (used to transport realization data).
#[derive(Debug, Clone)]
pub struct Echelon {
    ctx: FieldCtx,
    rows: Vec<SparseVec>,
    pivots: HashMap<u32, usize>,
    track: bool,
    combos: Vec<SparseVec>,
    inserted: u32,
}

impl Echelon {
    pub fn new(ctx: FieldCtx) -> Self {
        Echelon {
            ctx,
            rows: Vec::new(),
            pivots: HashMap::new(),
            track: false,
            combos: Vec::new(),
            inserted: 0,
        }
    }

    pub fn with_tracking(ctx: FieldCtx) -> Self {
        let mut e = Echelon::new(ctx);
        e.track = true;
        e
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// Reduce `v` against the rows. Returns the residual and, when tracking,
    /// the combination of generators consumed by the reduction.
    fn reduce_internal(&self, v: &[(u32, Scalar)]) -> (SparseVec, SparseVec) {
        let mut res: SparseVec = v
            .iter()
            .filter(|&&(_, c)| c % self.ctx.p != 0)
            .map(|&(i, c)| (i, c % self.ctx.p))
            .collect();
        if !res.windows(2).all(|w| w[0].0 < w[1].0) {
            res.sort_unstable_by_key(|t| t.0);
        }
        let mut combo: SparseVec = Vec::new();
        let mut i = 0;
        while i < res.len() {
            let (col, val) = res[i];
            if let Some(&r) = self.pivots.get(&col) {
                let c = self.ctx.neg(val);
                axpy(&self.ctx, &mut res, c, &self.rows[r]);
                if self.track {
                    axpy(&self.ctx, &mut combo, c, &self.combos[r]);
                }
                // the pivot entry vanished; rescan from the same position
            } else {
                i += 1;
            }
        }
        (res, combo)
    }

    /// Residual of `v` modulo the current span.
    pub fn reduce(&self, v: &[(u32, Scalar)]) -> SparseVec {
        self.reduce_internal(v).0
    }

    pub fn contains(&self, v: &[(u32, Scalar)]) -> bool {
        self.reduce_internal(v).0.is_empty()
    }

    /// Insert a vector; returns true if it enlarged the span.
    pub fn insert(&mut self, v: &[(u32, Scalar)]) -> bool {
        let (mut res, mut combo) = self.reduce_internal(v);
        let gen_idx = self.inserted;
        self.inserted += 1;
        if res.is_empty() {
            return false;
        }
        let lead = res[0];
        let inv = self.ctx.inv(lead.1);
        scale(&self.ctx, &mut res, inv);
        if self.track {
            scale(&self.ctx, &mut combo, inv);
            // combo currently holds -(what was subtracted)/lead; row = (gen - used)/lead
            let mut c: SparseVec = vec![(gen_idx, inv)];
            axpy(&self.ctx, &mut c, 1, &combo);
            combo = c;
        }
        let pivot_col = res[0].0;
        // back-substitute to keep RREF
        let affected: Vec<usize> = (0..self.rows.len())
            .filter(|&r| self.rows[r].iter().any(|&(c, _)| c == pivot_col))
            .collect();
        for r in affected {
            let coeff = self.rows[r]
                .iter()
                .find(|&&(c, _)| c == pivot_col)
                .map(|&(_, v)| v)
                .unwrap();
            let c = self.ctx.neg(coeff);
            let row = res.clone();
            axpy(&self.ctx, &mut self.rows[r], c, &row);
            if self.track {
                let cb = combo.clone();
                axpy(&self.ctx, &mut self.combos[r], c, &cb);
            }
        }
        self.pivots.insert(pivot_col, self.rows.len());
        self.rows.push(res);
        if self.track {
            self.combos.push(combo);
        }
        true
    }

    /// Expression of `v` over the inserted generators, if `v` lies in the
    /// span. Requires tracking.
    pub fn express(&self, v: &[(u32, Scalar)]) -> Option<SparseVec> {
        debug_assert!(self.track);
        let (res, combo) = self.reduce_internal(v);
        if !res.is_empty() {
            return None;
        }
        // the reduction consumed -v worth of rows
        Some(
            combo
                .into_iter()
                .map(|(g, c)| (g, self.ctx.neg(c)))
                .collect(),
        )
    }

    /// Coordinates of `v` over the echelon rows (in stored order), if `v`
    /// lies in the span.
    pub fn coords(&self, v: &[(u32, Scalar)]) -> Option<SparseVec> {
        let mut res: SparseVec = v.to_vec();
        let mut coords: SparseVec = Vec::new();
        let mut i = 0;
        while i < res.len() {
            let (col, val) = res[i];
            if let Some(&r) = self.pivots.get(&col) {
                coords.push((r as u32, val));
                let c = self.ctx.neg(val);
                axpy(&self.ctx, &mut res, c, &self.rows[r]);
            } else {
                i += 1;
            }
        }
        if res.is_empty() {
            coords.sort_unstable_by_key(|t| t.0);
            Some(coords)
        } else {
            None
        }
    }

    /// Rows in canonical order (sorted by pivot column).
    pub fn canonical_rows(&self) -> Vec<SparseVec> {
        let mut order: Vec<usize> = (0..self.rows.len()).collect();
        order.sort_unstable_by_key(|&r| self.rows[r][0].0);
        order.iter().map(|&r| self.rows[r].clone()).collect()
    }

    /// Rows plus their generator combinations, canonical order. Requires tracking.
    pub fn canonical_rows_with_combos(&self) -> Vec<(SparseVec, SparseVec)> {
        assert!(self.track);
        let mut order: Vec<usize> = (0..self.rows.len()).collect();
        order.sort_unstable_by_key(|&r| self.rows[r][0].0);
        order
            .iter()
            .map(|&r| (self.rows[r].clone(), self.combos[r].clone()))
            .collect()
    }

    pub fn rows_unordered(&self) -> &[SparseVec] {
        &self.rows
    }

    pub fn pivot_cols(&self) -> Vec<u32> {
        let mut cols: Vec<u32> = self.pivots.keys().copied().collect();
        cols.sort_unstable();
        cols
    }
}

// ---------------------------------------------------------------------------
// Matrices over GF(p)
// ---------------------------------------------------------------------------

/// Sparse matrix over GF(p). Rows switch to a dense representation during
/// elimination once fill-in passes 25% of the width.
#[derive(Debug, Clone)]
pub struct MatrixFp {
    pub nrows: usize,
    pub ncols: usize,
    rows: Vec<SparseVec>,
}

#[derive(Debug, Clone)]
enum Row {
    Sparse(SparseVec),
    Dense(Vec<Scalar>),
}

impl Row {
    fn leading(&self, from: usize) -> Option<(usize, Scalar)> {
        match self {
            Row::Sparse(v) => v
                .iter()
                .find(|&&(c, _)| c as usize >= from)
                .map(|&(c, v)| (c as usize, v)),
            Row::Dense(v) => v[from..]
                .iter()
                .position(|&x| x != 0)
                .map(|off| (from + off, v[from + off])),
        }
    }

    fn get(&self, col: usize) -> Scalar {
        match self {
            Row::Sparse(v) => v
                .binary_search_by_key(&(col as u32), |t| t.0)
                .map(|i| v[i].1)
                .unwrap_or(0),
            Row::Dense(v) => v[col],
        }
    }

    fn densify(&mut self, ncols: usize) {
        if let Row::Sparse(v) = self {
            let mut d = vec![0u64; ncols];
            for &(c, x) in v.iter() {
                d[c as usize] = x;
            }
            *self = Row::Dense(d);
        }
    }

    fn axpy(&mut self, ctx: &FieldCtx, c: Scalar, other: &Row, ncols: usize) {
        match other {
            Row::Dense(src) => {
                self.densify(ncols);
                if let Row::Dense(dst) = self {
                    for (d, &s) in dst.iter_mut().zip(src.iter()) {
                        if s != 0 {
                            *d = ctx.add(*d, ctx.mul(c, s));
                        }
                    }
                }
            }
            Row::Sparse(src) => match self {
                Row::Sparse(dst) => {
                    axpy(ctx, dst, c, src);
                    if dst.len() * 4 > ncols {
                        self.densify(ncols);
                    }
                }
                Row::Dense(dst) => {
                    for &(col, s) in src.iter() {
                        let d = &mut dst[col as usize];
                        *d = ctx.add(*d, ctx.mul(c, s));
                    }
                }
            },
        }
    }

    fn scale(&mut self, ctx: &FieldCtx, c: Scalar) {
        match self {
            Row::Sparse(v) => scale(ctx, v, c),
            Row::Dense(v) => {
                for x in v.iter_mut() {
                    if *x != 0 {
                        *x = ctx.mul(*x, c);
                    }
                }
            }
        }
    }
}

impl MatrixFp {
    pub fn zero(nrows: usize, ncols: usize) -> Self {
        MatrixFp {
            nrows,
            ncols,
            rows: vec![Vec::new(); nrows],
        }
    }

    pub fn from_rows(ncols: usize, rows: Vec<SparseVec>) -> Self {
        MatrixFp {
            nrows: rows.len(),
            ncols,
            rows,
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: Scalar) {
        let row = &mut self.rows[i];
        match row.binary_search_by_key(&(j as u32), |t| t.0) {
            Ok(k) => {
                if v == 0 {
                    row.remove(k);
                } else {
                    row[k].1 = v;
                }
            }
            Err(k) => {
                if v != 0 {
                    row.insert(k, (j as u32, v));
                }
            }
        }
    }

    pub fn row(&self, i: usize) -> &SparseVec {
        &self.rows[i]
    }

    /// Matrix-vector product `A v` with `v` dense.
    pub fn apply(&self, ctx: &FieldCtx, v: &[Scalar]) -> Vec<Scalar> {
        assert_eq!(v.len(), self.ncols);
        self.rows
            .iter()
            .map(|row| {
                let mut acc = 0u64;
                for &(c, x) in row {
                    acc = ctx.add(acc, ctx.mul(x, v[c as usize]));
                }
                acc
            })
            .collect()
    }

    /// Reduced row echelon form. Returns (pivot columns ascending, rref rows
    /// aligned with the pivots).
    fn rref(&self, ctx: &FieldCtx) -> (Vec<usize>, Vec<Row>) {
        let mut work: Vec<Row> = self.rows.iter().cloned().map(Row::Sparse).collect();
        let mut pivots: Vec<usize> = Vec::new();
        let mut pivot_rows: Vec<Row> = Vec::new();
        let mut col = 0usize;
        // rows not yet chosen as pivots keep their original relative order,
        // so the pivot rule is leftmost column, then smallest row index
        while col < self.ncols && pivot_rows.len() < self.nrows {
            let mut chosen: Option<usize> = None;
            for (r, row) in work.iter().enumerate() {
                if let Some((c, _)) = row.leading(col) {
                    if c == col {
                        chosen = Some(r);
                        break;
                    }
                }
            }
            let Some(r) = chosen else {
                col += 1;
                continue;
            };
            let mut prow = work.remove(r);
            let lead = prow.get(col);
            prow.scale(ctx, ctx.inv(lead));
            for row in work.iter_mut() {
                let c = row.get(col);
                if c != 0 {
                    row.axpy(ctx, ctx.neg(c), &prow, self.ncols);
                }
            }
            for row in pivot_rows.iter_mut() {
                let c = row.get(col);
                if c != 0 {
                    row.axpy(ctx, ctx.neg(c), &prow, self.ncols);
                }
            }
            pivots.push(col);
            pivot_rows.push(prow);
            col += 1;
        }
        (pivots, pivot_rows)
    }

    pub fn rank(&self, ctx: &FieldCtx) -> usize {
        self.rref(ctx).0.len()
    }

    /// Canonical basis of `{v : A v = 0}`, one vector per free column, in
    /// ascending free-column order. Each vector is dense.
    pub fn nullspace(&self, ctx: &FieldCtx) -> Vec<Vec<Scalar>> {
        let (pivots, rows) = self.rref(ctx);
        let mut is_pivot = vec![false; self.ncols];
        for &c in &pivots {
            is_pivot[c] = true;
        }
        let mut basis = Vec::new();
        for free in 0..self.ncols {
            if is_pivot[free] {
                continue;
            }
            let mut v = vec![0u64; self.ncols];
            v[free] = 1;
            for (k, &pc) in pivots.iter().enumerate() {
                let coef = rows[k].get(free);
                if coef != 0 {
                    v[pc] = ctx.neg(coef);
                }
            }
            basis.push(v);
        }
        basis
    }
}

/// Coordinates of `v` in the span of `basis`, or `None` if absent.
pub fn in_span(
    ctx: &FieldCtx,
    basis: &[Vec<Scalar>],
    v: &[Scalar],
) -> Result<Option<Vec<Scalar>>, FieldError> {
    for b in basis {
        if b.len() != v.len() {
            return Err(FieldError::DimensionMismatch {
                expected: v.len(),
                got: b.len(),
            });
        }
    }
    let mut ech = Echelon::with_tracking(*ctx);
    for b in basis {
        let sv: SparseVec = b
            .iter()
            .enumerate()
            .filter(|(_, &x)| x != 0)
            .map(|(i, &x)| (i as u32, x))
            .collect();
        ech.insert(&sv);
    }
    let sv: SparseVec = v
        .iter()
        .enumerate()
        .filter(|(_, &x)| x != 0)
        .map(|(i, &x)| (i as u32, x))
        .collect();
    let (res, combo) = ech.reduce_internal(&sv);
    if !res.is_empty() {
        return Ok(None);
    }
    // reduce_internal returns the negated combination consumed
    let mut coords = vec![0u64; basis.len()];
    for (g, c) in combo {
        coords[g as usize] = ctx.neg(c);
    }
    Ok(Some(coords))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f5() -> FieldCtx {
        FieldCtx::new(5).unwrap()
    }

    #[test]
    fn rejects_bad_moduli() {
        assert_eq!(FieldCtx::new(3).unwrap_err(), FieldError::TooSmall(3));
        assert_eq!(FieldCtx::new(9).unwrap_err(), FieldError::NotPrime(9));
        assert!(FieldCtx::new(7).is_ok());
    }

    #[test]
    fn scalar_arithmetic() {
        let f = f5();
        assert_eq!(f.add(3, 4), 2);
        assert_eq!(f.sub(1, 3), 3);
        assert_eq!(f.mul(3, 4), 2);
        assert_eq!(f.inv(2), 3);
        assert_eq!(f.from_i64(-7), 3);
        for a in 1..5 {
            assert_eq!(f.mul(a, f.inv(a)), 1);
        }
    }

    #[test]
    fn nullspace_zero_and_identity() {
        let f = f5();
        let a = MatrixFp::zero(2, 2);
        assert_eq!(a.nullspace(&f), vec![vec![1, 0], vec![0, 1]]);
        let mut id = MatrixFp::zero(3, 3);
        for i in 0..3 {
            id.set(i, i, 1);
        }
        assert!(id.nullspace(&f).is_empty());
        assert_eq!(id.rank(&f), 3);
    }

    // Brute-force oracle: enumerate all of GF(5)^2 and keep the kernel.
    #[test]
    fn nullspace_matches_bruteforce() {
        let f = f5();
        let mut a = MatrixFp::zero(2, 2);
        a.set(0, 0, 1);
        a.set(0, 1, 2);
        a.set(1, 0, 2);
        a.set(1, 1, 4);
        let mut kernel = Vec::new();
        for x in 0..5u64 {
            for y in 0..5u64 {
                if a.apply(&f, &[x, y]).iter().all(|&v| v == 0) {
                    kernel.push(vec![x, y]);
                }
            }
        }
        assert_eq!(kernel.len(), 5); // one-dimensional over GF(5)
        let basis = a.nullspace(&f);
        assert_eq!(basis, vec![vec![3, 1]]);
        assert_eq!(a.rank(&f), 1);
        for v in &kernel {
            if v.iter().any(|&x| x != 0) {
                assert!(in_span(&f, &basis, v).unwrap().is_some());
            }
        }
    }

    #[test]
    fn rank_plus_nullity() {
        let f = f5();
        // seeded pseudo-random matrices
        let mut state = 0x9E3779B97F4A7C15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for _ in 0..50 {
            let nrows = (next() % 6 + 1) as usize;
            let ncols = (next() % 6 + 1) as usize;
            let mut a = MatrixFp::zero(nrows, ncols);
            for i in 0..nrows {
                for j in 0..ncols {
                    a.set(i, j, next() % 5);
                }
            }
            let rank = a.rank(&f);
            let null = a.nullspace(&f);
            assert_eq!(rank + null.len(), ncols);
            for v in &null {
                assert!(a.apply(&f, v).iter().all(|&x| x == 0));
            }
        }
    }

    #[test]
    fn in_span_examples() {
        let f = f5();
        assert_eq!(
            in_span(&f, &[vec![1, 0]], &[3, 0]).unwrap(),
            Some(vec![3])
        );
        assert_eq!(in_span(&f, &[vec![1, 0]], &[0, 1]).unwrap(), None);
        // 2*(1,2) + 1*(0,1) = (2,0) over GF(5)
        assert_eq!(
            in_span(&f, &[vec![1, 2], vec![0, 1]], &[2, 0]).unwrap(),
            Some(vec![2, 1])
        );
        assert!(in_span(&f, &[vec![1, 0, 0]], &[1, 0]).is_err());
    }

    #[test]
    fn echelon_tracks_combinations() {
        let f = f5();
        let mut e = Echelon::with_tracking(f);
        assert!(e.insert(&[(0, 1), (1, 2)]));
        assert!(e.insert(&[(1, 1), (2, 3)]));
        // 2*(first) + (second) = (0,2),(1,0),(2,3): already in the span
        assert!(!e.insert(&[(0, 2), (2, 3)]));
        assert_eq!(e.dim(), 2);
        for (row, combo) in e.canonical_rows_with_combos() {
            // re-expand the combo over the generators and compare
            let gens: [SparseVec; 2] = [vec![(0, 1), (1, 2)], vec![(1, 1), (2, 3)]];
            let mut acc: SparseVec = Vec::new();
            for (g, c) in combo {
                axpy(&f, &mut acc, c, &gens[g as usize]);
            }
            assert_eq!(acc, row);
        }
    }

    #[test]
    fn echelon_deterministic_rref() {
        let f = f5();
        let vecs: [SparseVec; 3] = [
            vec![(0, 2), (2, 1)],
            vec![(0, 1), (1, 1)],
            vec![(1, 3), (2, 4)],
        ];
        // insertion order must not matter for the canonical rows
        let mut orders = vec![[0, 1, 2], [2, 1, 0], [1, 2, 0]];
        let mut all_rows = Vec::new();
        for order in orders.drain(..) {
            let mut e = Echelon::new(f);
            for i in order {
                e.insert(&vecs[i]);
            }
            all_rows.push(e.canonical_rows());
        }
        assert_eq!(all_rows[0], all_rows[1]);
        assert_eq!(all_rows[0], all_rows[2]);
    }
}
