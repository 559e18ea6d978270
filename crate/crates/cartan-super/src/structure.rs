//! Structural analysis of constructed handles: center, simplicity, height
//! and depth, normalizers inside the ambient W, and Jacobi verification.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::families::{add_keys, AlgebraHandle, BlockKey, SpanAccumulator};
use crate::field::{Echelon, MatrixFp, Scalar, SparseVec};
use crate::vectorfields::VectorField;

/// Basis of the center: every x with [x, g] = 0 for all generators g
/// (which suffices, since brackets with generators span brackets with
/// everything).
pub fn center(h: &AlgebraHandle) -> Vec<SparseVec> {
    let ctx = h.ctx();
    let gens = h.generators();
    let mut out = Vec::new();
    for (b, block) in h.blocks.iter().enumerate() {
        let cols = block.len;
        let mut rows: BTreeMap<(usize, u32), SparseVec> = BTreeMap::new();
        for local in 0..cols {
            let i = block.start + local;
            for (gk, &g) in gens.iter().enumerate() {
                if let Some(coords) = h.bracket_coords(i, g) {
                    for (k, c) in coords {
                        rows.entry((gk, k)).or_default().push((local as u32, c));
                    }
                }
            }
        }
        let rows: Vec<SparseVec> = rows
            .into_values()
            .map(|mut r| {
                r.sort_unstable_by_key(|t| t.0);
                r
            })
            .collect();
        let mat = MatrixFp::from_rows(cols, rows);
        for v in mat.nullspace(&ctx) {
            let coords: SparseVec = v
                .iter()
                .enumerate()
                .filter(|(_, &c)| c != 0)
                .map(|(l, &c)| ((block.start + l) as u32, c))
                .collect();
            let _ = b;
            out.push(coords);
        }
    }
    out
}

pub fn center_dim(h: &AlgebraHandle) -> usize {
    center(h).len()
}

/// Height and depth of the principal grading (max degree, -min degree).
pub fn height_depth(h: &AlgebraHandle) -> (i64, i64) {
    h.height_depth()
}

/// Ideal closure of a seed element (basis coordinates), using the cached
/// generator set: an ideal closed under brackets with generators is closed
/// under brackets with everything.
pub fn ideal_closure<'a>(h: &'a AlgebraHandle, seed: &[(u32, Scalar)]) -> SpanAccumulator<'a> {
    let mut acc = SpanAccumulator::new(h);
    acc.insert_coords(seed);
    saturate_ideal(h, &mut acc);
    acc
}

fn saturate_ideal(h: &AlgebraHandle, acc: &mut SpanAccumulator<'_>) {
    let gens: Vec<usize> = h.generators().to_vec();
    let mut queue: Vec<SparseVec> = acc.rows();
    while let Some(v) = queue.pop() {
        if v.is_empty() {
            continue;
        }
        let vkey = h.blocks[h.block_of(v[0].0 as usize)].key();
        for &g in &gens {
            let gkey = h.blocks[h.block_of(g)].key();
            let tkey = add_keys(&h.ctx(), &vkey, &gkey);
            if let Some(t) = h.find_block(&tkey) {
                if acc.block_full(t) {
                    continue;
                }
            } else {
                continue;
            }
            let vx = h.combine_c(&v);
            let br = h.bracket_c(h.basis_c(g), &vx);
            if br.is_empty() {
                continue;
            }
            let coords = h
                .express_c(&br)
                .expect("ideal closure bracket escaped the algebra");
            if acc.insert_coords(&coords) {
                queue.push(coords);
            }
        }
    }
}

/// Simplicity test.
///
/// A proper nonzero ideal is stable under the canonical torus, so it is
/// weight-graded, and the negative part acts nilpotently on it, so it meets
/// Fix = C_L(L^-) in a nonzero weight vector. It therefore suffices to
/// check that the algebra is perfect and centerless and that every
/// projective direction of every weight block of Fix generates the whole
/// algebra as an ideal.
pub fn is_simple(h: &AlgebraHandle) -> bool {
    if h.dim() < 2 {
        return false;
    }
    let derived = match crate::families::derived(h) {
        Ok(d) => d,
        Err(_) => return false,
    };
    if derived.dim() != h.dim() {
        return false;
    }
    if center_dim(h) != 0 {
        return false;
    }
    let fix = fix_of_negative_part(h);
    let ctx = h.ctx();
    // previous successful closures; any ideal reaching one of these is full
    let mut witnesses: Vec<SparseVec> = Vec::new();
    for (_, block_rows) in fix {
        let dims = block_rows.len();
        if dims == 0 {
            continue;
        }
        // enumerate projective directions over GF(p): (p^dims - 1)/(p - 1)
        let p = ctx.p();
        assert!(dims <= 8, "Fix block too large to enumerate ({dims} dims)");
        let mut counters = vec![0u64; dims];
        loop {
            // next projective representative: first nonzero coordinate = 1
            let lead = counters.iter().position(|&c| c != 0);
            if let Some(lead) = lead {
                if counters[lead] == 1 {
                    let mut vec_coords = SparseVec::new();
                    for (k, &c) in counters.iter().enumerate() {
                        if c != 0 {
                            crate::field::axpy(&ctx, &mut vec_coords, c, &block_rows[k]);
                        }
                    }
                    let full = ideal_reaches_all(h, &vec_coords, &witnesses);
                    if !full {
                        return false;
                    }
                    witnesses.push(vec_coords);
                }
            }
            // increment the counter vector
            let mut i = 0;
            loop {
                if i == dims {
                    break;
                }
                counters[i] += 1;
                if counters[i] < p {
                    break;
                }
                counters[i] = 0;
                i += 1;
            }
            if i == dims {
                break;
            }
        }
    }
    true
}

fn ideal_reaches_all(
    h: &AlgebraHandle,
    seed: &[(u32, Scalar)],
    witnesses: &[SparseVec],
) -> bool {
    let mut acc = SpanAccumulator::new(h);
    acc.insert_coords(seed);
    // closure with early success when a known-full witness is absorbed
    let gens: Vec<usize> = h.generators().to_vec();
    let mut queue: Vec<SparseVec> = acc.rows();
    while let Some(v) = queue.pop() {
        if acc.dim() == h.dim() {
            return true;
        }
        if witnesses.iter().any(|w| acc.contains_coords(w)) {
            return true;
        }
        if v.is_empty() {
            continue;
        }
        let vkey = h.blocks[h.block_of(v[0].0 as usize)].key();
        for &g in &gens {
            let gkey = h.blocks[h.block_of(g)].key();
            let tkey = add_keys(&h.ctx(), &vkey, &gkey);
            if let Some(t) = h.find_block(&tkey) {
                if acc.block_full(t) {
                    continue;
                }
            } else {
                continue;
            }
            let vx = h.combine_c(&v);
            let br = h.bracket_c(h.basis_c(g), &vx);
            if br.is_empty() {
                continue;
            }
            let coords = h
                .express_c(&br)
                .expect("ideal closure bracket escaped the algebra");
            if acc.insert_coords(&coords) {
                queue.push(coords);
            }
        }
    }
    acc.dim() == h.dim()
}

/// Reference implementation for cross-checks on small handles: the ideal
/// closure of every single basis vector must be everything.
pub fn is_simple_by_basis_closure(h: &AlgebraHandle) -> bool {
    if h.dim() < 2 {
        return false;
    }
    match crate::families::derived(h) {
        Ok(d) if d.dim() == h.dim() => {}
        _ => return false,
    }
    for i in 0..h.dim() {
        let acc = ideal_closure(h, &[(i as u32, 1)]);
        if acc.dim() != h.dim() {
            return false;
        }
    }
    true
}

/// Fix = C_L(L^-) grouped by block, as basis-coordinate rows.
fn fix_of_negative_part(h: &AlgebraHandle) -> Vec<(usize, Vec<SparseVec>)> {
    let ctx = h.ctx();
    let neg: Vec<usize> = (0..h.dim()).filter(|&i| h.zdeg_of(i) < 0).collect();
    let mut out = Vec::new();
    for (b, block) in h.blocks.iter().enumerate() {
        let cols = block.len;
        if cols == 0 {
            continue;
        }
        let mut rows: BTreeMap<(usize, u32), SparseVec> = BTreeMap::new();
        for local in 0..cols {
            let i = block.start + local;
            for (nk, &g) in neg.iter().enumerate() {
                if let Some(coords) = h.bracket_coords(i, g) {
                    for (k, c) in coords {
                        rows.entry((nk, k)).or_default().push((local as u32, c));
                    }
                }
            }
        }
        let rows: Vec<SparseVec> = rows
            .into_values()
            .map(|mut r| {
                r.sort_unstable_by_key(|t| t.0);
                r
            })
            .collect();
        let mat = MatrixFp::from_rows(cols, rows);
        let basis: Vec<SparseVec> = mat
            .nullspace(&ctx)
            .into_iter()
            .map(|v| {
                v.iter()
                    .enumerate()
                    .filter(|(_, &c)| c != 0)
                    .map(|(l, &c)| ((block.start + l) as u32, c))
                    .collect()
            })
            .collect();
        if !basis.is_empty() {
            out.push((b, basis));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Normalizer
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub struct Normalizer {
    pub dim: usize,
    /// W-side vectors, grouped per handle-key blocks, echelonized
    pub basis: Vec<VectorField>,
}

impl Normalizer {
    pub fn contains(&self, ctx: &crate::field::FieldCtx, v: &VectorField) -> bool {
        let mut ech = Echelon::new(*ctx);
        for b in &self.basis {
            ech.insert(b);
        }
        ech.contains(v)
    }
}

/// Nor_W(L) = { D in W : [D, L] subset of L }, computed blockwise against
/// the generators of L.
pub fn normalizer(h: &AlgebraHandle) -> Normalizer {
    let ctx = h.ctx();
    let wmod = &h.wmod;
    let gens = h.generators();
    // group ambient W monomials by handle key
    let mut groups: BTreeMap<BlockKey, Vec<u32>> = BTreeMap::new();
    for widx in 0..wmod.dim() as u32 {
        groups.entry(h.key_of_wmono(widx)).or_default().push(widx);
    }
    let mut basis = Vec::new();
    let mut dim = 0usize;
    for (gkey, monos) in groups {
        let cols = monos.len();
        // residual constraint rows: [w, g] must reduce to zero against L
        let mut rows: BTreeMap<(usize, u32), SparseVec> = BTreeMap::new();
        for (col, &widx) in monos.iter().enumerate() {
            for (gk, &g) in gens.iter().enumerate() {
                let br = wmod.bracket(&vec![(widx, 1)], h.basis_w(g));
                // split by target key and reduce against the block echelon
                let mut parts: BTreeMap<BlockKey, VectorField> = BTreeMap::new();
                for &(w2, c) in &br {
                    parts.entry(h.key_of_wmono(w2)).or_default().push((w2, c));
                }
                for (tkey, part) in parts {
                    let residual = match h.find_block(&tkey) {
                        Some(tb) => h.reduce_w_in_block(tb, &part),
                        None => part,
                    };
                    for (coord, c) in residual {
                        rows.entry((gk, coord)).or_default().push((col as u32, c));
                    }
                }
            }
        }
        let rows: Vec<SparseVec> = rows
            .into_values()
            .map(|mut r| {
                r.sort_unstable_by_key(|t| t.0);
                r
            })
            .collect();
        let mat = MatrixFp::from_rows(cols, rows);
        for v in mat.nullspace(&ctx) {
            let field: VectorField = v
                .iter()
                .enumerate()
                .filter(|(_, &c)| c != 0)
                .map(|(l, &c)| (monos[l], c))
                .collect();
            basis.push(field);
            dim += 1;
        }
        let _ = gkey;
    }
    Normalizer { dim, basis }
}

/// Whether two collections of W-side vectors span the same subspace.
pub fn same_span(ctx: &crate::field::FieldCtx, a: &[VectorField], b: &[VectorField]) -> bool {
    let mut ech = Echelon::new(*ctx);
    for v in a {
        ech.insert(v);
    }
    let da = ech.dim();
    for v in b {
        if ech.insert(v) {
            return false;
        }
    }
    let mut ech_b = Echelon::new(*ctx);
    for v in b {
        ech_b.insert(v);
    }
    da == ech_b.dim()
}

// ---------------------------------------------------------------------------
// Jacobi verification
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct JacobiReport {
    pub dim: usize,
    pub exhaustive: bool,
    pub triples_checked: u64,
    pub closure_failures: usize,
    pub violations: Vec<(usize, usize, usize)>,
}

impl JacobiReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.closure_failures == 0
    }
}

/// Verify closure and the graded Jacobi identity
/// [x,[y,z]] = [[x,y],z] + (-1)^{|x||y|} [y,[x,z]]
/// over basis triples: exhaustively when dim <= limit, otherwise on
/// seeded random triples.
pub fn check_jacobi(h: &AlgebraHandle, exhaustive_limit: usize, samples: u64, seed: u64) -> JacobiReport {
    let dim = h.dim();
    let exhaustive = dim <= exhaustive_limit;
    let mut violations = Vec::new();
    let mut closure_failures = 0usize;
    let mut triples = 0u64;
    let check = |x: usize, y: usize, z: usize| -> Option<(usize, usize, usize)> {
        let ctx = h.ctx();
        let bx = h.basis_c(x);
        let by = h.basis_c(y);
        let bz = h.basis_c(z);
        let yz = h.bracket_c(by, bz);
        let lhs = h.bracket_c(bx, &yz);
        let xy = h.bracket_c(bx, by);
        let mut rhs = h.bracket_c(&xy, bz);
        let xz = h.bracket_c(bx, bz);
        let mut t2 = h.bracket_c(by, &xz);
        crate::field::scale(
            &ctx,
            &mut t2,
            ctx.sign((h.parity_of(x) & h.parity_of(y)) as u32),
        );
        crate::field::axpy(&ctx, &mut rhs, 1, &t2);
        if lhs != rhs {
            Some((x, y, z))
        } else {
            None
        }
    };
    if exhaustive {
        for x in 0..dim {
            // closure of all pairs involving x
            for y in x..dim {
                let br = h.bracket_c(h.basis_c(x), h.basis_c(y));
                if !br.is_empty() && h.express_c(&br).is_none() {
                    closure_failures += 1;
                }
            }
            for y in x..dim {
                for z in y..dim {
                    triples += 1;
                    if let Some(v) = check(x, y, z) {
                        violations.push(v);
                        if violations.len() >= 5 {
                            return JacobiReport {
                                dim,
                                exhaustive,
                                triples_checked: triples,
                                closure_failures,
                                violations,
                            };
                        }
                    }
                }
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let x = rng.gen_range(0..dim);
            let y = rng.gen_range(0..dim);
            let z = rng.gen_range(0..dim);
            // closure on the sampled pairs
            for (a, b) in [(x, y), (y, z), (x, z)] {
                let br = h.bracket_c(h.basis_c(a), h.basis_c(b));
                if !br.is_empty() && h.express_c(&br).is_none() {
                    closure_failures += 1;
                }
            }
            triples += 1;
            if let Some(v) = check(x, y, z) {
                violations.push(v);
                if violations.len() >= 5 {
                    break;
                }
            }
        }
    }
    JacobiReport {
        dim,
        exhaustive,
        triples_checked: triples,
        closure_failures,
        violations,
    }
}

/// Raw Jacobi check over explicit W-side vectors (used as a negative
/// control with deliberately corrupted inputs).
pub fn check_jacobi_raw(
    wmod: &crate::vectorfields::WModule,
    vectors: &[VectorField],
    span_check: bool,
) -> JacobiReport {
    let ctx = wmod.ctx();
    let mut ech = Echelon::new(ctx);
    for v in vectors {
        ech.insert(v);
    }
    let mut violations = Vec::new();
    let mut closure_failures = 0usize;
    let mut triples = 0u64;
    let parity = |v: &VectorField| wmod.wparity(v[0].0);
    for x in 0..vectors.len() {
        for y in x..vectors.len() {
            if span_check {
                let br = wmod.bracket(&vectors[x], &vectors[y]);
                if !br.is_empty() && !ech.contains(&br) {
                    closure_failures += 1;
                }
            }
            for z in y..vectors.len() {
                triples += 1;
                let yz = wmod.bracket(&vectors[y], &vectors[z]);
                let lhs = wmod.bracket(&vectors[x], &yz);
                let xy = wmod.bracket(&vectors[x], &vectors[y]);
                let mut rhs = wmod.bracket(&xy, &vectors[z]);
                let xz = wmod.bracket(&vectors[x], &vectors[z]);
                let mut t2 = wmod.bracket(&vectors[y], &xz);
                crate::field::scale(
                    &ctx,
                    &mut t2,
                    ctx.sign((parity(&vectors[x]) & parity(&vectors[y])) as u32),
                );
                crate::field::axpy(&ctx, &mut rhs, 1, &t2);
                if lhs != rhs {
                    violations.push((x, y, z));
                    if violations.len() >= 5 {
                        return JacobiReport {
                            dim: vectors.len(),
                            exhaustive: true,
                            triples_checked: triples,
                            closure_failures,
                            violations,
                        };
                    }
                }
            }
        }
    }
    JacobiReport {
        dim: vectors.len(),
        exhaustive: true,
        triples_checked: triples,
        closure_failures,
        violations,
    }
}

#[derive(Debug, Serialize)]
pub struct StructureReport {
    pub dim: usize,
    pub depth: i64,
    pub height: i64,
    pub center_dim: usize,
    pub simple: bool,
    pub normalizer_dim: usize,
}

pub fn structure_report(h: &AlgebraHandle) -> StructureReport {
    let (depth, height) = h.height_depth();
    StructureReport {
        dim: h.dim(),
        depth,
        height,
        center_dim: center_dim(h),
        simple: is_simple(h),
        normalizer_dim: normalizer(h).dim,
    }
}
