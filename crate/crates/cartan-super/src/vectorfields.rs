//! W(m,n;t), the superderivation algebra of O(m,n;t), together with the
//! operators that cut out the Cartan-type families: divergence, D_ij, D_H,
//! D_K, T_H, D_KO, div_lambda, the degree fields, the realized brackets on
//! O, and the degree-raising insertions Phi_i.

use std::fmt::Write as _;

use crate::field::{collect_terms, FieldCtx, Scalar, SparseVec};
use crate::superspace::{Grading, IndexMaps, SpaceRef, SuperPoly};

/// Element of W(m,n;t): a sparse combination of basis fields
/// x^(alpha) x^u d/dx_k, indexed by `mono_id * vars + (k-1)`.
pub type VectorField = SparseVec;

/// O(m,n;t) together with a fixed principal grading; the home of all
/// vector field computations.
#[derive(Debug, Clone)]
pub struct WModule {
    pub space: SpaceRef,
    pub grading: Grading,
    pub maps: IndexMaps,
}

/// Families whose realized bracket lives on O (or on O modulo constants).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RealBracket {
    H,
    K,
    HO,
    KO,
}

impl WModule {
    pub fn new(space: SpaceRef, grading: Grading) -> Self {
        let maps = IndexMaps::new(space.params.m, space.params.n);
        WModule {
            space,
            grading,
            maps,
        }
    }

    #[inline]
    pub fn ctx(&self) -> FieldCtx {
        self.space.params.ctx
    }

    #[inline]
    pub fn vars(&self) -> usize {
        self.space.params.vars()
    }

    pub fn dim(&self) -> usize {
        self.space.dim() * self.vars()
    }

    #[inline]
    pub fn windex(&self, mono: u32, dir: usize) -> u32 {
        mono * self.vars() as u32 + (dir as u32 - 1)
    }

    #[inline]
    pub fn wmono(&self, idx: u32) -> (u32, usize) {
        let v = self.vars() as u32;
        (idx / v, (idx % v) as usize + 1)
    }

    /// Parity of a direction d/dx_i.
    #[inline]
    pub fn dir_parity(&self, dir: usize) -> u8 {
        if dir > self.space.params.m {
            1
        } else {
            0
        }
    }

    pub fn wparity(&self, idx: u32) -> u8 {
        let (mono, dir) = self.wmono(idx);
        self.space.parity(mono) ^ self.dir_parity(dir)
    }

    pub fn wzdeg(&self, idx: u32) -> i64 {
        let (mono, dir) = self.wmono(idx);
        self.space.zdeg(&self.grading, mono) - self.grading.var_deg(dir)
    }

    /// d/dx_i as a vector field.
    pub fn partial_field(&self, i: usize) -> VectorField {
        vec![(self.windex(self.space.one(), i), 1)]
    }

    /// f * d/dx_i for a polynomial coefficient.
    pub fn field_from(&self, f: &SuperPoly, dir: usize) -> VectorField {
        f.iter().map(|&(m, c)| (self.windex(m, dir), c)).collect()
    }

    /// The full degree field: sum of x_i d/dx_i over every variable.
    pub fn degree_full(&self) -> VectorField {
        let terms: Vec<(u32, Scalar)> = (1..=self.vars())
            .map(|i| (self.windex(self.space.var(i), i), 1))
            .collect();
        collect_terms(&self.ctx(), terms)
    }

    /// The truncated degree field over the first 2m variables only.
    pub fn degree_2m(&self) -> VectorField {
        let m = self.space.params.m;
        let terms: Vec<(u32, Scalar)> = (1..=2 * m)
            .map(|i| (self.windex(self.space.var(i), i), 1))
            .collect();
        collect_terms(&self.ctx(), terms)
    }

    /// Apply a vector field to a superpolynomial.
    pub fn apply(&self, vf: &VectorField, f: &SuperPoly) -> SuperPoly {
        let ctx = self.ctx();
        let mut terms = Vec::new();
        for &(w, cw) in vf {
            let (fm, dir) = self.wmono(w);
            for &(g, cg) in f {
                if let Some((cd, dg)) = self.space.partial_mono(dir, g) {
                    if let Some((cm, prod)) = self.space.mono_mul(fm, dg) {
                        terms.push((prod, ctx.mul(ctx.mul(cw, cg), ctx.mul(cd, cm))));
                    }
                }
            }
        }
        collect_terms(&ctx, terms)
    }

    /// Superbracket of two vector fields by the closed first-order formula
    /// [f d_i, g d_j] = f d_i(g) d_j - (-1)^{|f d_i||g d_j|} g d_j(f) d_i.
    pub fn bracket(&self, a: &VectorField, b: &VectorField) -> VectorField {
        let ctx = self.ctx();
        let mut terms = Vec::new();
        for &(wa, ca) in a {
            let (fm, i) = self.wmono(wa);
            let pa = (self.space.parity(fm) ^ self.dir_parity(i)) as u32;
            for &(wb, cb) in b {
                let (gm, j) = self.wmono(wb);
                let pb = (self.space.parity(gm) ^ self.dir_parity(j)) as u32;
                let c = ctx.mul(ca, cb);
                if let Some((cd, dg)) = self.space.partial_mono(i, gm) {
                    if let Some((cm, prod)) = self.space.mono_mul(fm, dg) {
                        terms.push((self.windex(prod, j), ctx.mul(c, ctx.mul(cd, cm))));
                    }
                }
                if let Some((cd, df)) = self.space.partial_mono(j, fm) {
                    if let Some((cm, prod)) = self.space.mono_mul(gm, df) {
                        let sign = ctx.sign(pa * pb + 1);
                        terms.push((
                            self.windex(prod, i),
                            ctx.mul(c, ctx.mul(sign, ctx.mul(cd, cm))),
                        ));
                    }
                }
            }
        }
        collect_terms(&ctx, terms)
    }

    /// div(f d_k) = (-1)^{|d_k||f|} d_k(f), extended linearly.
    pub fn divergence(&self, vf: &VectorField) -> SuperPoly {
        let ctx = self.ctx();
        let mut terms = Vec::new();
        for &(w, c) in vf {
            let (fm, dir) = self.wmono(w);
            if let Some((cd, df)) = self.space.partial_mono(dir, fm) {
                let sign = ctx.sign((self.dir_parity(dir) & self.space.parity(fm)) as u32);
                terms.push((df, ctx.mul(c, ctx.mul(sign, cd))));
            }
        }
        collect_terms(&ctx, terms)
    }

    /// D_ij(a) = (-1)^{|d_i||d_j|} d_i(a) d_j - (-1)^{(|d_i|+|d_j|)|a|} d_j(a) d_i.
    pub fn op_dij(&self, i: usize, j: usize, a: &SuperPoly) -> VectorField {
        let ctx = self.ctx();
        let (pi, pj) = (self.dir_parity(i) as u32, self.dir_parity(j) as u32);
        let mut terms = Vec::new();
        for &(am, ca) in a {
            let pa = self.space.parity(am) as u32;
            if let Some((cd, da)) = self.space.partial_mono(i, am) {
                let sign = ctx.sign(pi * pj);
                terms.push((self.windex(da, j), ctx.mul(ca, ctx.mul(sign, cd))));
            }
            if let Some((cd, da)) = self.space.partial_mono(j, am) {
                let sign = ctx.sign((pi + pj) * pa + 1);
                terms.push((self.windex(da, i), ctx.mul(ca, ctx.mul(sign, cd))));
            }
        }
        collect_terms(&ctx, terms)
    }

    /// D_H(a) = sum_i sigma(i) (-1)^{|d_i||a|} d_i(a) d_{i'}, for even m.
    pub fn op_dh(&self, a: &SuperPoly) -> VectorField {
        debug_assert!(self.space.params.m % 2 == 0);
        let ctx = self.ctx();
        let mut terms = Vec::new();
        for &(am, ca) in a {
            let pa = self.space.parity(am) as u32;
            for i in 1..=self.vars() {
                if let Some((cd, da)) = self.space.partial_mono(i, am) {
                    let mut c = ctx.mul(ca, cd);
                    if self.maps.sigma(i) < 0 {
                        c = ctx.neg(c);
                    }
                    c = ctx.mul(c, ctx.sign(self.dir_parity(i) as u32 * pa));
                    terms.push((self.windex(da, self.maps.prime(i)), c));
                }
            }
        }
        collect_terms(&ctx, terms)
    }

    /// D_K(a) = sum_{i != m} (-1)^{|d_i||a|} (x_i d_m(a) + sigma(i') d_{i'}(a)) d_i
    ///        + (2a - sum_{i != m} x_i d_i(a)) d_m, for odd m.
    pub fn op_dk(&self, a: &SuperPoly) -> VectorField {
        debug_assert!(self.space.params.m % 2 == 1);
        let ctx = self.ctx();
        let m = self.space.params.m;
        let mut terms = Vec::new();
        for &(am, ca) in a {
            let pa = self.space.parity(am) as u32;
            let mut dm_coeff: SuperPoly = vec![(am, ctx.mul(2, ca))];
            for i in (1..=self.vars()).filter(|&i| i != m) {
                let sign = ctx.sign(self.dir_parity(i) as u32 * pa);
                // x_i d_m(a) d_i
                if let Some((cd, da)) = self.space.partial_mono(m, am) {
                    if let Some((cm, prod)) = self.space.mono_mul(self.space.var(i), da) {
                        terms.push((
                            self.windex(prod, i),
                            ctx.mul(ca, ctx.mul(sign, ctx.mul(cd, cm))),
                        ));
                    }
                }
                // sigma(i') d_{i'}(a) d_i
                let ip = self.maps.prime(i);
                if let Some((cd, da)) = self.space.partial_mono(ip, am) {
                    let c = ctx.mul(
                        ca,
                        ctx.mul(sign, ctx.mul(sign_for(&ctx, self.maps.sigma(ip)), cd)),
                    );
                    terms.push((self.windex(da, i), c));
                }
                // -x_i d_i(a) feeds the d_m coefficient
                if let Some((cd, da)) = self.space.partial_mono(i, am) {
                    if let Some((cm, prod)) = self.space.mono_mul(self.space.var(i), da) {
                        dm_coeff.push((prod, ctx.neg(ctx.mul(ca, ctx.mul(cd, cm)))));
                    }
                }
            }
            let dm_coeff = collect_terms(&ctx, dm_coeff);
            for (mono, c) in dm_coeff {
                terms.push((self.windex(mono, m), c));
            }
        }
        collect_terms(&ctx, terms)
    }

    /// T_H(a) = sum_{i=1..2m} (-1)^{|d_i||a|} d_i(a) d_{~i}.
    pub fn op_th(&self, a: &SuperPoly) -> VectorField {
        let ctx = self.ctx();
        let m = self.space.params.m;
        let mut terms = Vec::new();
        for &(am, ca) in a {
            let pa = self.space.parity(am) as u32;
            for i in 1..=2 * m {
                if let Some((cd, da)) = self.space.partial_mono(i, am) {
                    let c = ctx.mul(ca, ctx.mul(ctx.sign(self.dir_parity(i) as u32 * pa), cd));
                    terms.push((self.windex(da, self.maps.tilde(i)), c));
                }
            }
        }
        collect_terms(&ctx, terms)
    }

    /// D_KO(a) = T_H(a) + (-1)^{|a|} d_{2m+1}(a) Deg_{2m} + (Deg_{2m}(a) - 2a) d_{2m+1},
    /// on O(m, m+1; t).
    pub fn op_dko(&self, a: &SuperPoly) -> VectorField {
        let ctx = self.ctx();
        let m = self.space.params.m;
        debug_assert_eq!(self.space.params.n, m + 1);
        let top = 2 * m + 1;
        let mut out = self.op_th(a);
        let deg = self.degree_2m();
        for &(am, ca) in a {
            let pa = self.space.parity(am) as u32;
            if let Some((cd, da)) = self.space.partial_mono(top, am) {
                // (-1)^{|a|} d_top(a) * Deg_{2m}
                let c = ctx.mul(ca, ctx.mul(ctx.sign(pa), cd));
                let mut terms = Vec::new();
                for &(w, cw) in &deg {
                    let (dm, dir) = self.wmono(w);
                    if let Some((cm, prod)) = self.space.mono_mul(da, dm) {
                        terms.push((self.windex(prod, dir), ctx.mul(c, ctx.mul(cw, cm))));
                    }
                }
                let terms = collect_terms(&ctx, terms);
                out = add_fields(&ctx, &out, &terms);
            }
            // (Deg_{2m}(a) - 2a) d_top
            let dega = self.apply(&deg, &vec![(am, ca)]);
            let mut coeff = dega;
            crate::field::axpy(&ctx, &mut coeff, ctx.neg(2 % ctx.p()), &[(am, ca)]);
            let tail: VectorField = coeff
                .iter()
                .map(|&(mono, c)| (self.windex(mono, top), c))
                .collect();
            out = add_fields(&ctx, &out, &tail);
        }
        out
    }

    /// div_lambda(a) = (-1)^{|a|} 2 ( sum_{i<=m} d_i d_{~i}(a)
    ///                + (Deg_{2m} - m lambda) d_{2m+1}(a) ), on O(m, m+1; t).
    pub fn div_lambda(&self, a: &SuperPoly, lambda: Scalar) -> SuperPoly {
        let ctx = self.ctx();
        let m = self.space.params.m;
        debug_assert_eq!(self.space.params.n, m + 1);
        let top = 2 * m + 1;
        let deg = self.degree_2m();
        let mut out: SuperPoly = Vec::new();
        for &(am, ca) in a {
            let pa = self.space.parity(am) as u32;
            let outer = ctx.mul(ctx.sign(pa), 2 % ctx.p());
            let mono: SuperPoly = vec![(am, ca)];
            let mut acc: SuperPoly = Vec::new();
            for i in 1..=m {
                let d = self.space.partial(i, &self.space.partial(self.maps.tilde(i), &mono));
                crate::field::axpy(&ctx, &mut acc, 1, &d);
            }
            let dtop = self.space.partial(top, &mono);
            let degpart = self.apply(&deg, &dtop);
            crate::field::axpy(&ctx, &mut acc, 1, &degpart);
            let ml = ctx.mul(ctx.from_i64(m as i64), lambda % ctx.p());
            crate::field::axpy(&ctx, &mut acc, ctx.neg(ml), &dtop);
            crate::field::axpy(&ctx, &mut out, outer, &acc);
        }
        out
    }

    /// The realized bracket on O carried by each family:
    ///   [a,b]_H  = D_H(a)(b)
    ///   [a,b]_K  = D_K(a)(b) - 2 d_m(a) b
    ///   [a,b]_HO = T_H(a)(b)
    ///   [a,b]_KO = D_KO(a)(b) - (-1)^{|a|} 2 d_{2m+1}(a) b
    pub fn bracket_o(&self, which: RealBracket, a: &SuperPoly, b: &SuperPoly) -> SuperPoly {
        let ctx = self.ctx();
        let m = self.space.params.m;
        match which {
            RealBracket::H => self.apply(&self.op_dh(a), b),
            RealBracket::HO => self.apply(&self.op_th(a), b),
            RealBracket::K => {
                let mut out = self.apply(&self.op_dk(a), b);
                let da = self.space.partial(m, a);
                let corr = self.space.poly_mul(&da, b);
                crate::field::axpy(&ctx, &mut out, ctx.neg(2 % ctx.p()), &corr);
                out
            }
            RealBracket::KO => {
                let mut out = self.apply(&self.op_dko(a), b);
                let top = 2 * m + 1;
                // the correction carries (-1)^{|a|} per homogeneous part of a
                for &(am, ca) in a {
                    let pa = self.space.parity(am) as u32;
                    if let Some((cd, da)) = self.space.partial_mono(top, am) {
                        let part = self.space.poly_mul(&vec![(da, ctx.mul(ca, cd))], b);
                        let c = ctx.neg(ctx.mul(ctx.sign(pa), 2 % ctx.p()));
                        crate::field::axpy(&ctx, &mut out, c, &part);
                    }
                }
                out
            }
        }
    }

    /// Realization operator for each family, applied to a function.
    pub fn realize(&self, which: RealBracket, a: &SuperPoly) -> VectorField {
        match which {
            RealBracket::H => self.op_dh(a),
            RealBracket::K => self.op_dk(a),
            RealBracket::HO => self.op_th(a),
            RealBracket::KO => self.op_dko(a),
        }
    }

    /// Parity shift of the realization: T_H and D_KO are odd operators.
    pub fn realization_parity(which: RealBracket) -> u8 {
        match which {
            RealBracket::H | RealBracket::K => 0,
            RealBracket::HO | RealBracket::KO => 1,
        }
    }

    /// Whether the realized bracket lives on O modulo constants.
    pub fn realization_mod_constants(which: RealBracket) -> bool {
        matches!(which, RealBracket::H | RealBracket::HO)
    }

    /// Phi_i: insert one factor of x_i into the coefficient, truncating to
    /// zero outside A(m;t).
    pub fn phi_insert(&self, i: usize, vf: &VectorField) -> VectorField {
        let ctx = self.ctx();
        let m = self.space.params.m;
        let mut terms = Vec::new();
        for &(w, c) in vf {
            let (fm, dir) = self.wmono(w);
            if i <= m {
                let mono = self.space.mono(fm);
                let mut alpha = mono.alpha.clone();
                alpha[i - 1] += 1;
                if alpha[i - 1] as u64 > self.space.params.pi(i - 1) {
                    continue;
                }
                let id = self.space.id_of(&crate::superspace::Monomial {
                    alpha,
                    shuffle: mono.shuffle,
                });
                terms.push((self.windex(id, dir), c));
            } else if let Some((cm, prod)) = self.space.mono_mul(self.space.var(i), fm) {
                terms.push((self.windex(prod, dir), ctx.mul(c, cm)));
            }
        }
        collect_terms(&ctx, terms)
    }

    /// D is i-integral when [d_i, Phi_i(D)] = D.
    pub fn is_integral(&self, i: usize, vf: &VectorField) -> bool {
        let inserted = self.phi_insert(i, vf);
        let recovered = self.bracket(&self.partial_field(i), &inserted);
        &recovered == vf
    }

    /// The derivation of W given by commuting with d_i^{p^j}:
    /// f d_k -> (d_i^{p^j} f) d_k.
    pub fn ad_partial_power(&self, i: usize, j: u32, vf: &VectorField) -> VectorField {
        let step = self.ctx().p().pow(j);
        let mut terms = Vec::new();
        for &(w, c) in vf {
            let (fm, dir) = self.wmono(w);
            let mono = self.space.mono(fm);
            if (mono.alpha[i - 1] as u64) < step {
                continue;
            }
            let mut alpha = mono.alpha.clone();
            alpha[i - 1] -= step as u32;
            let id = self.space.id_of(&crate::superspace::Monomial {
                alpha,
                shuffle: mono.shuffle,
            });
            terms.push((self.windex(id, dir), c));
        }
        collect_terms(&self.ctx(), terms)
    }

    pub fn field_text(&self, vf: &VectorField) -> String {
        if vf.is_empty() {
            return "0".into();
        }
        let mut parts: Vec<(String, usize, Scalar)> = vf
            .iter()
            .map(|&(w, c)| {
                let (mono, dir) = self.wmono(w);
                (self.space.mono_text(mono), dir, c)
            })
            .collect();
        parts.sort();
        let mut out = String::new();
        for (k, (mono, dir, c)) in parts.iter().enumerate() {
            if k > 0 {
                out.push_str(" + ");
            }
            let _ = write!(out, "{c}*{mono}*d/dx[{dir}]");
        }
        out
    }
}

fn sign_for(ctx: &FieldCtx, s: i64) -> Scalar {
    if s < 0 {
        ctx.neg(1)
    } else {
        1
    }
}

pub fn add_fields(ctx: &FieldCtx, a: &VectorField, b: &VectorField) -> VectorField {
    let mut out = a.clone();
    crate::field::axpy(ctx, &mut out, 1, b);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldCtx;
    use crate::superspace::{Space, SpaceParams};

    fn wmod(m: usize, n: usize, t: &[u32], p: u64, contact: Option<usize>) -> WModule {
        let ctx = FieldCtx::new(p).unwrap();
        let space = Space::new(SpaceParams::new(m, n, t.to_vec(), ctx).unwrap()).unwrap();
        let grading = Grading::with_contact(m + n, contact);
        WModule::new(space, grading)
    }

    #[test]
    fn apply_basics() {
        let w = wmod(1, 2, &[1], 5, None);
        let d1 = w.partial_field(1);
        let x1: SuperPoly = vec![(w.space.var(1), 1)];
        assert_eq!(w.apply(&d1, &x1), vec![(w.space.one(), 1)]);
        // (x1 d2)(x2) = x1
        let f = w.field_from(&x1, 2);
        let x2: SuperPoly = vec![(w.space.var(2), 1)];
        assert_eq!(w.apply(&f, &x2), x1);
        // (x^(2e1) d1)(x^(2e1)) = x^(2e1) x^(e1) = 3 x^(3e1)
        let x2e: SuperPoly = vec![(w.space.even_power(1, 2).unwrap(), 1)];
        let g = w.field_from(&x2e, 1);
        assert_eq!(
            w.apply(&g, &x2e),
            vec![(w.space.even_power(1, 3).unwrap(), 3)]
        );
    }

    #[test]
    fn bracket_examples() {
        let w = wmod(1, 2, &[1], 5, None);
        let d1 = w.partial_field(1);
        let x1d1 = w.field_from(&vec![(w.space.var(1), 1)], 1);
        assert_eq!(w.bracket(&d1, &x1d1), d1);
        // odd case: [d2, x2 d2] = d2
        let d2 = w.partial_field(2);
        let x2d2 = w.field_from(&vec![(w.space.var(2), 1)], 2);
        assert_eq!(w.bracket(&d2, &x2d2), d2);
        // odd-odd self bracket with vanishing cross terms
        let x1d2 = w.field_from(&vec![(w.space.var(1), 1)], 2);
        assert!(w.bracket(&x1d2, &x1d2).is_empty());
    }

    #[test]
    fn bracket_matches_operator_commutator() {
        // apply([D,E], f) = apply(D, apply(E, f)) - (-1)^{|D||E|} apply(E, apply(D, f))
        // exhaustively on basis fields of W(1,2;(1)).
        let w = wmod(1, 2, &[1], 5, None);
        let ctx = w.ctx();
        let dim = w.dim() as u32;
        for a in 0..dim {
            for b in 0..dim {
                let (fa, fb): (VectorField, VectorField) = (vec![(a, 1)], vec![(b, 1)]);
                let br = w.bracket(&fa, &fb);
                let sign = ctx.sign((w.wparity(a) & w.wparity(b)) as u32);
                for mono in 0..w.space.dim() as u32 {
                    let f: SuperPoly = vec![(mono, 1)];
                    let lhs = w.apply(&br, &f);
                    let mut rhs = w.apply(&fa, &w.apply(&fb, &f));
                    let mut second = w.apply(&fb, &w.apply(&fa, &f));
                    crate::field::scale(&ctx, &mut second, ctx.neg(sign));
                    crate::field::axpy(&ctx, &mut rhs, 1, &second);
                    assert_eq!(lhs, rhs, "a={a} b={b} mono={mono}");
                }
            }
        }
    }

    #[test]
    fn divergence_examples() {
        let w = wmod(1, 2, &[1], 5, None);
        // div(x1 d1) = 1
        let x1d1 = w.field_from(&vec![(w.space.var(1), 1)], 1);
        assert_eq!(w.divergence(&x1d1), vec![(w.space.one(), 1)]);
        // div(x2 d2) = -1 (odd coefficient, odd direction)
        let x2d2 = w.field_from(&vec![(w.space.var(2), 1)], 2);
        assert_eq!(w.divergence(&x2d2), vec![(w.space.one(), 4)]);
    }

    #[test]
    fn dij_images_are_divergence_free() {
        let w = wmod(2, 2, &[1, 1], 5, None);
        let mut state = 99u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for _ in 0..20 {
            let a: SuperPoly = vec![(next() as u32 % w.space.dim() as u32, 1 + next() % 4)];
            for i in 1..=4 {
                for j in 1..=4 {
                    let d = w.op_dij(i, j, &a);
                    assert!(w.divergence(&d).is_empty(), "i={i} j={j}");
                }
            }
        }
    }

    #[test]
    fn dij_simple_values() {
        let w = wmod(2, 2, &[1, 1], 5, None);
        // D_12(x1) = d_1(x1) d_2 = d_2
        let x1: SuperPoly = vec![(w.space.var(1), 1)];
        assert_eq!(w.op_dij(1, 2, &x1), w.partial_field(2));
        // D_ii(a) = 0 for an even direction
        let a: SuperPoly = vec![(w.space.even_power(1, 2).unwrap(), 1)];
        assert!(w.op_dij(1, 1, &a).is_empty());
    }

    #[test]
    fn dh_single_term() {
        // m = 2, r = 1: D_H(x1) = sigma(1) d_1(x1) d_{1'} = d_2
        let w = wmod(2, 2, &[1, 1], 5, None);
        let x1: SuperPoly = vec![(w.space.var(1), 1)];
        assert_eq!(w.op_dh(&x1), w.partial_field(2));
        assert!(w.op_dh(&vec![(w.space.one(), 1)]).is_empty());
    }

    #[test]
    fn dh_is_a_bracket_homomorphism() {
        // [D_H(a), D_H(b)] = D_H([a,b]_H) on random pairs
        let w = wmod(2, 2, &[1, 1], 5, None);
        let mut state = 7u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for _ in 0..40 {
            let a: SuperPoly = vec![(next() as u32 % w.space.dim() as u32, 1 + next() % 4)];
            let b: SuperPoly = vec![(next() as u32 % w.space.dim() as u32, 1 + next() % 4)];
            let lhs = w.bracket(&w.op_dh(&a), &w.op_dh(&b));
            let rhs = w.op_dh(&w.bracket_o(RealBracket::H, &a, &b));
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn dk_basics() {
        let w = wmod(1, 2, &[1], 5, Some(1));
        // D_K(1) = 2 d_m
        let one: SuperPoly = vec![(w.space.one(), 1)];
        let mut expected = w.partial_field(1);
        crate::field::scale(&w.ctx(), &mut expected, 2);
        assert_eq!(w.op_dk(&one), expected);
        // zdeg(D_K(x_m)) = 0 under the contact grading
        let xm: SuperPoly = vec![(w.space.var(1), 1)];
        for &(idx, _) in &w.op_dk(&xm) {
            assert_eq!(w.wzdeg(idx), 0);
        }
    }

    #[test]
    fn dk_is_a_bracket_homomorphism() {
        for (m, n) in [(1usize, 2usize), (3, 2)] {
            let w = wmod(m, n, &vec![1; m], 5, Some(m));
            let mut state = 1234u64;
            let mut next = move || {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                state
            };
            for _ in 0..30 {
                let a: SuperPoly = vec![(next() as u32 % w.space.dim() as u32, 1 + next() % 4)];
                let b: SuperPoly = vec![(next() as u32 % w.space.dim() as u32, 1 + next() % 4)];
                let lhs = w.bracket(&w.op_dk(&a), &w.op_dk(&b));
                let rhs = w.op_dk(&w.bracket_o(RealBracket::K, &a, &b));
                assert_eq!(lhs, rhs, "m={m} n={n}");
            }
        }
    }

    #[test]
    fn th_basics() {
        let w = wmod(3, 3, &[1, 1, 1], 5, None);
        let one: SuperPoly = vec![(w.space.one(), 1)];
        assert!(w.op_th(&one).is_empty());
        // T_H(x1) = d_{~1} = d_4
        let x1: SuperPoly = vec![(w.space.var(1), 1)];
        assert_eq!(w.op_th(&x1), w.partial_field(4));
        // T_H is odd: parity(T_H(a)) = |a| + 1
        for mono in 0..w.space.dim() as u32 {
            let img = w.op_th(&vec![(mono, 1)]);
            for &(idx, _) in &img {
                assert_eq!(w.wparity(idx), w.space.parity(mono) ^ 1);
            }
        }
    }

    #[test]
    fn th_is_a_bracket_homomorphism() {
        let w = wmod(3, 3, &[1, 1, 1], 5, None);
        let mut state = 31u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for _ in 0..30 {
            let a: SuperPoly = vec![(next() as u32 % w.space.dim() as u32, 1 + next() % 4)];
            let b: SuperPoly = vec![(next() as u32 % w.space.dim() as u32, 1 + next() % 4)];
            let lhs = w.bracket(&w.op_th(&a), &w.op_th(&b));
            let rhs = w.op_th(&w.bracket_o(RealBracket::HO, &a, &b));
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn dko_basics() {
        let w = wmod(3, 4, &[1, 1, 1], 5, Some(7));
        let ctx = w.ctx();
        // D_KO(1) = -2 d_{2m+1}
        let one: SuperPoly = vec![(w.space.one(), 1)];
        let mut expected = w.partial_field(7);
        crate::field::scale(&ctx, &mut expected, ctx.neg(2));
        assert_eq!(w.op_dko(&one), expected);
        // zdeg(D_KO(x_{2m+1})) = 0 under the KO grading
        let xtop: SuperPoly = vec![(w.space.var(7), 1)];
        for &(idx, _) in &w.op_dko(&xtop) {
            assert_eq!(w.wzdeg(idx), 0);
        }
    }

    #[test]
    fn dko_is_a_bracket_homomorphism() {
        let w = wmod(3, 4, &[1, 1, 1], 5, Some(7));
        let mut state = 77u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for _ in 0..30 {
            let a: SuperPoly = vec![(next() as u32 % w.space.dim() as u32, 1 + next() % 4)];
            let b: SuperPoly = vec![(next() as u32 % w.space.dim() as u32, 1 + next() % 4)];
            let lhs = w.bracket(&w.op_dko(&a), &w.op_dko(&b));
            let rhs = w.op_dko(&w.bracket_o(RealBracket::KO, &a, &b));
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn div_lambda_values() {
        let w = wmod(4, 5, &[1, 1, 1, 1], 5, Some(9));
        let ctx = w.ctx();
        let one: SuperPoly = vec![(w.space.one(), 1)];
        assert!(w.div_lambda(&one, 1).is_empty());
        // div_lambda(x_{2m+1}) = 2 m lambda
        let xtop: SuperPoly = vec![(w.space.var(9), 1)];
        let lam = 1u64;
        let got = w.div_lambda(&xtop, lam);
        let expect = ctx.mul(2, ctx.mul(4, lam));
        assert_eq!(got, vec![(w.space.one(), expect)]);
        // div_lambda(x_1 x_{~1}) = -2
        let (c, x11) = w.space.mono_mul(w.space.var(1), w.space.var(5)).unwrap();
        assert_eq!(c, 1);
        let f: SuperPoly = vec![(x11, 1)];
        assert_eq!(w.div_lambda(&f, lam), vec![(w.space.one(), ctx.neg(2))]);
    }

    #[test]
    fn bracket_o_k_examples() {
        let w = wmod(1, 2, &[1], 5, Some(1));
        let ctx = w.ctx();
        // [1, b]_K = 2 d_m(b)
        let one: SuperPoly = vec![(w.space.one(), 1)];
        for mono in 0..w.space.dim() as u32 {
            let b: SuperPoly = vec![(mono, 1)];
            let mut expect = w.space.partial(1, &b);
            crate::field::scale(&ctx, &mut expect, 2);
            assert_eq!(w.bracket_o(RealBracket::K, &one, &b), expect);
        }
    }

    #[test]
    fn bracket_o_antisymmetry_and_jacobi() {
        // element parity in the realized algebra is |a| + parity of the operator
        let ctx = FieldCtx::new(5).unwrap();
        let cases: Vec<(WModule, RealBracket)> = vec![
            (wmod(2, 2, &[1, 1], 5, None), RealBracket::H),
            (wmod(1, 2, &[1], 5, Some(1)), RealBracket::K),
            (wmod(3, 3, &[1, 1, 1], 5, None), RealBracket::HO),
            (wmod(3, 4, &[1, 1, 1], 5, Some(7)), RealBracket::KO),
        ];
        for (w, fam) in cases {
            let shift = WModule::realization_parity(fam) as u32;
            let mut state = 5150u64;
            let mut next = move || {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                state
            };
            for _ in 0..25 {
                let am = next() as u32 % w.space.dim() as u32;
                let bm = next() as u32 % w.space.dim() as u32;
                let cm = next() as u32 % w.space.dim() as u32;
                let (a, b, c): (SuperPoly, SuperPoly, SuperPoly) =
                    (vec![(am, 1)], vec![(bm, 1)], vec![(cm, 1)]);
                let pa = (w.space.parity(am) as u32 + shift) & 1;
                let pb = (w.space.parity(bm) as u32 + shift) & 1;
                // super-antisymmetry
                let mut ba = w.bracket_o(fam, &b, &a);
                crate::field::scale(&ctx, &mut ba, ctx.sign(pa * pb));
                let mut sum = w.bracket_o(fam, &a, &b);
                crate::field::axpy(&ctx, &mut sum, 1, &ba);
                assert!(sum.is_empty(), "antisymmetry {fam:?} {am} {bm}");
                // super-Jacobi: [a,[b,c]] = [[a,b],c] + (-1)^{|a||b|}[b,[a,c]]
                let lhs = w.bracket_o(fam, &a, &w.bracket_o(fam, &b, &c));
                let mut rhs = w.bracket_o(fam, &w.bracket_o(fam, &a, &b), &c);
                let mut t2 = w.bracket_o(fam, &b, &w.bracket_o(fam, &a, &c));
                crate::field::scale(&ctx, &mut t2, ctx.sign(pa * pb));
                crate::field::axpy(&ctx, &mut rhs, 1, &t2);
                assert_eq!(lhs, rhs, "jacobi {fam:?} {am} {bm} {cm}");
            }
        }
    }

    #[test]
    fn integral_predicate() {
        let w = wmod(1, 2, &[1], 5, None);
        // Phi_1(d_2) = x_1 d_2 and d_1 recovers it
        assert!(w.is_integral(1, &w.partial_field(2)));
        // top divided power truncates to zero
        let top = w.field_from(&vec![(w.space.even_power(1, 4).unwrap(), 1)], 2);
        assert!(!w.is_integral(1, &top));
        // exterior square kills the insertion
        let f = w.field_from(&vec![(w.space.var(2), 1)], 1);
        assert!(!w.is_integral(2, &f));
    }

    #[test]
    fn restrictedness_of_partials() {
        // (ad d_i)^{p^{t_i}} = 0 on W, and d_i^{p^j} for j < t_i acts nontrivially
        let w = wmod(2, 2, &[2, 1], 5, None);
        for idx in 0..w.dim() as u32 {
            let f: VectorField = vec![(idx, 1)];
            // one application of ad_partial_power with j = t_i is the p^{t_i}-th
            // power of ad d_i on coefficients
            assert!(w.ad_partial_power(1, 2, &f).is_empty());
            assert!(w.ad_partial_power(2, 1, &f).is_empty());
        }
        let top = w.field_from(&vec![(w.space.even_power(1, 24).unwrap(), 1)], 2);
        assert!(!w.ad_partial_power(1, 1, &top).is_empty());
    }

    #[test]
    fn field_text_form() {
        let w = wmod(1, 2, &[1], 5, None);
        let f = add_fields(
            &w.ctx(),
            &w.field_from(&vec![(w.space.var(1), 2)], 2),
            &w.partial_field(1),
        );
        assert_eq!(f.len(), 2);
        let text = w.field_text(&f);
        assert!(text.contains("2*x^(1)*d/dx[2]"));
        assert!(text.contains("1*x^(0)*d/dx[1]"));
    }
}
