//! Construction of the eight Cartan-type families W, S, H, K, HO, SHO, KO,
//! SKO (and their bar and derived variants) as explicit subalgebras of
//! W(m,n;t), with deterministic echelon bases organized into
//! (Z-degree, parity, torus weight) blocks.
//!
//! Families realized from O (H, K, HO, KO, SKO and their derived algebras)
//! also carry their preimage functions, and all internal computation for
//! them runs on the O side where brackets are much sparser.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::field::{collect_terms, Echelon, FieldCtx, MatrixFp, Scalar, SparseVec};
use crate::superspace::{Grading, Space, SpaceParams, SuperPoly};
use crate::vectorfields::{RealBracket, VectorField, WModule};

#[derive(Debug, Error)]
pub enum BuildError {
    #[error(transparent)]
    Field(#[from] crate::field::FieldError),
    #[error(transparent)]
    Space(#[from] crate::superspace::SpaceError),
    #[error("{0}")]
    Constraint(String),
    #[error("torus action is not diagonal on the constructed basis: {0}")]
    NonDiagonal(String),
    #[error("construction self-check failed: {0}")]
    SelfCheck(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, PartialOrd, Ord)]
pub enum Family {
    W,
    S,
    H,
    K,
    HO,
    SHO,
    KO,
    SKO,
}

impl Family {
    pub fn parse(s: &str) -> Option<Family> {
        match s {
            "W" => Some(Family::W),
            "S" => Some(Family::S),
            "H" => Some(Family::H),
            "K" => Some(Family::K),
            "HO" => Some(Family::HO),
            "SHO" => Some(Family::SHO),
            "KO" => Some(Family::KO),
            "SKO" => Some(Family::SKO),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::W => "W",
            Family::S => "S",
            Family::H => "H",
            Family::K => "K",
            Family::HO => "HO",
            Family::SHO => "SHO",
            Family::KO => "KO",
            Family::SKO => "SKO",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, PartialOrd, Ord)]
pub enum Variant {
    Plain,
    Bar,
    Derived1,
    Derived2,
}

impl Variant {
    pub fn parse(s: &str) -> Option<Variant> {
        match s {
            "plain" => Some(Variant::Plain),
            "bar" => Some(Variant::Bar),
            "derived1" => Some(Variant::Derived1),
            "derived2" => Some(Variant::Derived2),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Variant::Plain => "plain",
            Variant::Bar => "bar",
            Variant::Derived1 => "derived1",
            Variant::Derived2 => "derived2",
        }
    }
}

/// A family selection with parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AlgebraSpec {
    pub family: Family,
    pub variant: Variant,
    pub m: usize,
    pub n: usize,
    pub p: u64,
    pub t: Vec<u32>,
    pub lambda: Option<u64>,
}

impl AlgebraSpec {
    pub fn new(
        family: Family,
        variant: Variant,
        m: usize,
        n: Option<usize>,
        p: u64,
        t: Vec<u32>,
        lambda: Option<u64>,
    ) -> Result<Self, BuildError> {
        let n = match family {
            Family::HO | Family::SHO => {
                let expect = m;
                match n {
                    Some(v) if v != expect => {
                        return Err(BuildError::Constraint(format!(
                            "{} requires n = m, got n = {v}",
                            family.name()
                        )))
                    }
                    _ => expect,
                }
            }
            Family::KO | Family::SKO => {
                let expect = m + 1;
                match n {
                    Some(v) if v != expect => {
                        return Err(BuildError::Constraint(format!(
                            "{} requires n = m + 1, got n = {v}",
                            family.name()
                        )))
                    }
                    _ => expect,
                }
            }
            _ => n.ok_or_else(|| {
                BuildError::Constraint(format!("{} requires --n", family.name()))
            })?,
        };
        let spec = AlgebraSpec {
            family,
            variant,
            m,
            n,
            p,
            t,
            lambda,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), BuildError> {
        FieldCtx::new(self.p)?;
        SpaceParams::new(self.m, self.n, self.t.clone(), FieldCtx::new(self.p)?)?;
        let c = |msg: String| Err(BuildError::Constraint(msg));
        match self.family {
            Family::H => {
                if self.m % 2 != 0 || self.m == 0 {
                    return c(format!("H requires even m, got m = {}", self.m));
                }
            }
            Family::K => {
                if self.m % 2 != 1 {
                    return c(format!("K requires odd m, got m = {}", self.m));
                }
            }
            Family::HO | Family::SHO => {
                if self.m <= 2 {
                    return c(format!("{} requires m > 2", self.family.name()));
                }
                if self.n != self.m {
                    return c(format!("{} requires n = m", self.family.name()));
                }
            }
            Family::KO | Family::SKO => {
                if self.m <= 2 {
                    return c(format!("{} requires m > 2", self.family.name()));
                }
                if self.n != self.m + 1 {
                    return c(format!("{} requires n = m + 1", self.family.name()));
                }
            }
            _ => {}
        }
        if self.family == Family::SKO && self.lambda.is_none() {
            return c("SKO requires --lambda".into());
        }
        if self.variant == Variant::Bar
            && !matches!(
                self.family,
                Family::S | Family::H | Family::HO | Family::SHO
            )
        {
            return c(format!(
                "the bar variant is defined only for S, H, HO, SHO, not {}",
                self.family.name()
            ));
        }
        Ok(())
    }

    /// 1-based index of the degree-2 contact variable, if the family has one.
    pub fn contact_var(&self) -> Option<usize> {
        match self.family {
            Family::K => Some(self.m),
            Family::KO | Family::SKO => Some(2 * self.m + 1),
            _ => None,
        }
    }

    pub fn grading(&self) -> Grading {
        Grading::with_contact(self.m + self.n, self.contact_var())
    }

    /// eta = sum of the truncation exponents.
    pub fn eta(&self) -> u64 {
        self.t.iter().map(|&x| x as u64).sum()
    }

    /// xi(t) = sum p^{t_i} - m + n.
    pub fn xi(&self) -> i64 {
        let s: i64 = self.t.iter().map(|&ti| self.p.pow(ti) as i64).sum();
        s - self.m as i64 + self.n as i64
    }

    pub fn display(&self) -> String {
        let t = self
            .t
            .iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(",");
        let lam = self
            .lambda
            .map(|l| format!(",lambda={l}"))
            .unwrap_or_default();
        let var: String = match self.variant {
            Variant::Plain => "".into(),
            Variant::Bar => "~bar".into(),
            Variant::Derived1 => "^(1)".into(),
            Variant::Derived2 => "^(2)".into(),
        };
        format!(
            "{}({},{};({}){}){}",
            self.family.name(),
            self.m,
            self.n,
            t,
            lam,
            var
        )
    }
}

/// Coordinate side used for internal computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Elements stored on W-monomial coordinates.
    W,
    /// Elements stored as their O-side preimage functions.
    O {
        bracket: RealBracket,
        mod_constants: bool,
    },
}

/// One (Z-degree, parity, weight) block of the basis.
#[derive(Debug, Clone)]
pub struct Block {
    pub zdeg: i64,
    pub parity: u8,
    pub weight: Vec<Scalar>,
    pub start: usize,
    pub len: usize,
}

pub type BlockKey = (i64, u8, Vec<Scalar>);

impl Block {
    pub fn key(&self) -> BlockKey {
        (self.zdeg, self.parity, self.weight.clone())
    }
}

/// A torus generator t = sum c_k x_k d/dx_k.
#[derive(Debug, Clone)]
pub struct TorusGen {
    pub coeffs: Vec<Scalar>,
    /// additive eigenvalue shift on O-side coordinates (contact correction)
    pub o_shift: Scalar,
}

/// A constructed family with ordered basis, block structure and torus data.
pub struct AlgebraHandle {
    pub spec: AlgebraSpec,
    pub wmod: Arc<WModule>,
    pub side: Side,
    /// computational coordinates (O-monomials when realized, W otherwise)
    basis_c: Vec<SparseVec>,
    basis_w: Vec<VectorField>,
    pub blocks: Vec<Block>,
    block_index: HashMap<BlockKey, usize>,
    block_of: Vec<u32>,
    ech_c: Vec<Echelon>,
    ech_w: Vec<Echelon>,
    pub torus: Vec<TorusGen>,
    pub warnings: Vec<String>,
    gens: std::sync::OnceLock<Vec<usize>>,
}

impl std::fmt::Debug for AlgebraHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "AlgebraHandle({}, dim {})",
            self.spec.display(),
            self.dim()
        )
    }
}

struct RawVec {
    w: VectorField,
    c: SparseVec,
}

impl AlgebraHandle {
    pub fn dim(&self) -> usize {
        self.basis_c.len()
    }

    pub fn ctx(&self) -> FieldCtx {
        self.wmod.ctx()
    }

    pub fn basis_c(&self, i: usize) -> &SparseVec {
        &self.basis_c[i]
    }

    pub fn basis_w(&self, i: usize) -> &VectorField {
        &self.basis_w[i]
    }

    pub fn block_of(&self, i: usize) -> usize {
        self.block_of[i] as usize
    }

    pub fn block(&self, b: usize) -> &Block {
        &self.blocks[b]
    }

    pub fn find_block(&self, key: &BlockKey) -> Option<usize> {
        self.block_index.get(key).copied()
    }

    pub fn torus_rank(&self) -> usize {
        self.torus.len()
    }

    pub fn zdeg_of(&self, i: usize) -> i64 {
        self.blocks[self.block_of(i)].zdeg
    }

    pub fn parity_of(&self, i: usize) -> u8 {
        self.blocks[self.block_of(i)].parity
    }

    pub fn weight_of(&self, i: usize) -> &[Scalar] {
        &self.blocks[self.block_of(i)].weight
    }

    pub fn is_theta_weight(&self, b: usize) -> bool {
        self.blocks[b].weight.iter().all(|&w| w == 0)
    }

    /// (zdeg, parity, weight) of an ambient W-monomial under this handle's
    /// grading and torus.
    pub fn key_of_wmono(&self, widx: u32) -> BlockKey {
        let ctx = self.ctx();
        let (mono, dir) = self.wmod.wmono(widx);
        let zdeg = self.wmod.wzdeg(widx);
        let parity = self.wmod.wparity(widx);
        let weight = self
            .torus
            .iter()
            .map(|t| {
                let mut acc = 0u64;
                for k in 1..=self.wmod.vars() {
                    if t.coeffs[k - 1] != 0 {
                        acc = ctx.add(
                            acc,
                            ctx.mul(t.coeffs[k - 1], self.wmod.space.weight_entry(mono, k)),
                        );
                    }
                }
                ctx.sub(acc, t.coeffs[dir - 1])
            })
            .collect();
        (zdeg, parity, weight)
    }

    /// Element-level key of an O-side coordinate monomial.
    pub fn key_of_cmono(&self, mono: u32) -> BlockKey {
        let Side::O { bracket, .. } = self.side else {
            panic!("key_of_cmono on a W-side handle")
        };
        let ctx = self.ctx();
        let zdeg = self.wmod.space.zdeg(&self.wmod.grading, mono) - 2;
        let parity = self.wmod.space.parity(mono) ^ WModule::realization_parity(bracket);
        let weight = self
            .torus
            .iter()
            .map(|t| {
                let mut acc = t.o_shift;
                for k in 1..=self.wmod.vars() {
                    if t.coeffs[k - 1] != 0 {
                        acc = ctx.add(
                            acc,
                            ctx.mul(t.coeffs[k - 1], self.wmod.space.weight_entry(mono, k)),
                        );
                    }
                }
                acc
            })
            .collect();
        (zdeg, parity, weight)
    }

    fn key_of_cvec(&self, v: &SparseVec) -> Option<BlockKey> {
        let first = v.first()?.0;
        Some(match self.side {
            Side::W => self.key_of_wmono(first),
            Side::O { .. } => self.key_of_cmono(first),
        })
    }

    /// Bracket of two elements in computational coordinates.
    pub fn bracket_c(&self, x: &SparseVec, y: &SparseVec) -> SparseVec {
        match self.side {
            Side::W => self.wmod.bracket(x, y),
            Side::O {
                bracket,
                mod_constants,
            } => {
                let mut out = self.wmod.bracket_o(bracket, x, y);
                if mod_constants {
                    strip_constant(&self.wmod, &mut out);
                }
                out
            }
        }
    }

    /// Bracket of two basis elements, expressed over the basis.
    /// Returns None if the result fails to lie in the span (a closure bug).
    pub fn bracket_coords(&self, i: usize, j: usize) -> Option<SparseVec> {
        let br = self.bracket_c(&self.basis_c[i], &self.basis_c[j]);
        self.express_c(&br)
    }

    /// Express a homogeneous computational vector over the basis.
    pub fn express_c(&self, v: &SparseVec) -> Option<SparseVec> {
        if v.is_empty() {
            return Some(Vec::new());
        }
        let key = self.key_of_cvec(v)?;
        let b = self.find_block(&key)?;
        let combo = express_in(&self.ech_c[b], v)?;
        let start = self.blocks[b].start as u32;
        Some(combo.into_iter().map(|(i, c)| (i + start, c)).collect())
    }

    /// Express a W-side vector (not necessarily block-homogeneous) over the
    /// basis; None if any component falls outside the algebra.
    pub fn express_w(&self, v: &VectorField) -> Option<SparseVec> {
        let ctx = self.ctx();
        // split by block key
        let mut parts: BTreeMap<BlockKey, VectorField> = BTreeMap::new();
        for &(w, c) in v {
            parts.entry(self.key_of_wmono(w)).or_default().push((w, c));
        }
        let mut out: Vec<(u32, Scalar)> = Vec::new();
        for (key, part) in parts {
            let b = self.find_block(&key)?;
            let combo = express_in(&self.ech_w[b], &part)?;
            let start = self.blocks[b].start as u32;
            out.extend(combo.into_iter().map(|(i, c)| (i + start, c)));
        }
        Some(collect_terms(&ctx, out))
    }

    pub fn contains_w(&self, v: &VectorField) -> bool {
        self.express_w(v).is_some()
    }

    /// Residual of a key-homogeneous W-side vector against one block.
    pub fn reduce_w_in_block(&self, b: usize, v: &VectorField) -> VectorField {
        self.ech_w[b].reduce(v)
    }

    /// Reconstruct the element for basis coordinates.
    pub fn combine_c(&self, coords: &[(u32, Scalar)]) -> SparseVec {
        let ctx = self.ctx();
        let mut out = SparseVec::new();
        for &(i, c) in coords {
            crate::field::axpy(&ctx, &mut out, c, &self.basis_c[i as usize]);
        }
        out
    }

    pub fn combine_w(&self, coords: &[(u32, Scalar)]) -> VectorField {
        let ctx = self.ctx();
        let mut out = VectorField::new();
        for &(i, c) in coords {
            crate::field::axpy(&ctx, &mut out, c, &self.basis_w[i as usize]);
        }
        out
    }

    /// Indices of a deterministic generating set (greedy closure, smallest
    /// |zdeg| first). Cached.
    pub fn generators(&self) -> &[usize] {
        self.gens.get_or_init(|| self.compute_generators())
    }

    fn compute_generators(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by_key(|&i| {
            let b = &self.blocks[self.block_of(i)];
            (b.zdeg.abs(), b.zdeg, i as i64)
        });
        let mut acc = SpanAccumulator::new(self);
        let mut gens = Vec::new();
        for i in order {
            if acc.contains(i) {
                continue;
            }
            gens.push(i);
            acc.insert_basis(i);
            acc.saturate_subalgebra();
            if acc.dim() == self.dim() {
                break;
            }
        }
        debug_assert_eq!(acc.dim(), self.dim());
        gens.sort_unstable();
        gens
    }

    /// Height and depth of the grading: blocks with nonzero dimension span
    /// degrees [-depth, height].
    pub fn height_depth(&self) -> (i64, i64) {
        let min = self.blocks.iter().map(|b| b.zdeg).min().unwrap_or(0);
        let max = self.blocks.iter().map(|b| b.zdeg).max().unwrap_or(0);
        (-min, max)
    }

    pub fn dims_by_degree(&self) -> BTreeMap<i64, usize> {
        let mut map = BTreeMap::new();
        for b in &self.blocks {
            *map.entry(b.zdeg).or_insert(0) += b.len;
        }
        map
    }

    pub fn parity_counts(&self) -> (usize, usize) {
        let mut even = 0;
        let mut odd = 0;
        for b in &self.blocks {
            if b.parity == 0 {
                even += b.len;
            } else {
                odd += b.len;
            }
        }
        (even, odd)
    }

    pub fn basis_texts(&self) -> Vec<String> {
        self.basis_w
            .iter()
            .map(|v| self.wmod.field_text(v))
            .collect()
    }
}

/// Strip the coefficient of the constant monomial (the quotient O/F1).
pub fn strip_constant(wmod: &WModule, f: &mut SuperPoly) {
    let one = wmod.space.one();
    if let Ok(pos) = f.binary_search_by_key(&one, |t| t.0) {
        f.remove(pos);
    }
}

/// Express `v` over the generators inserted into a tracked echelon.
fn express_in(ech: &Echelon, v: &[(u32, Scalar)]) -> Option<SparseVec> {
    ech.express(v)
}

// ---------------------------------------------------------------------------
// Span accumulation bounded by an existing handle
// ---------------------------------------------------------------------------

/// Tracks a growing subspace of a handle, block by block, with early exit
/// once a block is saturated. Rows are stored as basis coordinates.
pub struct SpanAccumulator<'a> {
    h: &'a AlgebraHandle,
    /// per block of h: echelon over global basis coordinates
    spans: Vec<Echelon>,
    dims: Vec<usize>,
    total: usize,
}

impl<'a> SpanAccumulator<'a> {
    pub fn new(h: &'a AlgebraHandle) -> Self {
        let spans = (0..h.blocks.len()).map(|_| Echelon::new(h.ctx())).collect();
        SpanAccumulator {
            h,
            spans,
            dims: vec![0; h.blocks.len()],
            total: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.total
    }

    pub fn block_dim(&self, b: usize) -> usize {
        self.dims[b]
    }

    pub fn block_full(&self, b: usize) -> bool {
        self.dims[b] == self.h.blocks[b].len
    }

    pub fn contains(&self, basis_idx: usize) -> bool {
        let b = self.h.block_of(basis_idx);
        self.block_full(b)
            || self.spans[b].contains(&[(basis_idx as u32, 1)])
    }

    pub fn contains_coords(&self, coords: &[(u32, Scalar)]) -> bool {
        if coords.is_empty() {
            return true;
        }
        let b = self.h.block_of(coords[0].0 as usize);
        debug_assert!(coords
            .iter()
            .all(|&(i, _)| self.h.block_of(i as usize) == b));
        self.block_full(b) || self.spans[b].contains(coords)
    }

    /// Insert basis-coordinate rows (must be homogeneous in one block).
    pub fn insert_coords(&mut self, coords: &[(u32, Scalar)]) -> bool {
        if coords.is_empty() {
            return false;
        }
        let b = self.h.block_of(coords[0].0 as usize);
        if self.block_full(b) {
            return false;
        }
        if self.spans[b].insert(coords) {
            self.dims[b] += 1;
            self.total += 1;
            true
        } else {
            false
        }
    }

    pub fn insert_basis(&mut self, i: usize) -> bool {
        self.insert_coords(&[(i as u32, 1)])
    }

    /// Fill every block whose torus weight is nonzero (those lie in any
    /// subspace containing [T, L]).
    pub fn fill_nonzero_weight_blocks(&mut self) {
        if self.h.torus.is_empty() {
            return;
        }
        for (_b, block) in self.h.blocks.iter().enumerate() {
            if block.weight.iter().any(|&w| w != 0) {
                for i in block.start..block.start + block.len {
                    self.insert_basis(i);
                }
            }
        }
    }

    /// Close under brackets (subalgebra closure). Worklist over newly
    /// inserted rows; block pairs whose target is already full are skipped.
    pub fn saturate_subalgebra(&mut self) {
        let mut queue: Vec<SparseVec> = Vec::new();
        for b in 0..self.spans.len() {
            for row in self.spans[b].rows_unordered() {
                queue.push(row.clone());
            }
        }
        while let Some(v) = queue.pop() {
            if v.is_empty() {
                continue;
            }
            let vb = self.h.block_of(v[0].0 as usize);
            let vkey = self.h.blocks[vb].key();
            let snapshot: Vec<usize> = (0..self.spans.len())
                .filter(|&b| self.dims[b] > 0)
                .collect();
            for cb in snapshot {
                let ckey = self.h.blocks[cb].key();
                let tkey = add_keys(&self.h.ctx(), &vkey, &ckey);
                let target = self.h.find_block(&tkey);
                if let Some(t) = target {
                    if self.block_full(t) {
                        continue;
                    }
                } else {
                    continue; // bracket must vanish; nothing to collect
                }
                let partner_rows: Vec<SparseVec> =
                    self.spans[cb].rows_unordered().to_vec();
                for u in partner_rows {
                    let res = self.bracket_rows(&v, &u);
                    if let Some(r) = res {
                        if self.insert_coords(&r) {
                            queue.push(r);
                        }
                    }
                    if let Some(t) = self.h.find_block(&tkey) {
                        if self.block_full(t) {
                            break;
                        }
                    }
                }
            }
        }
    }

    fn bracket_rows(&self, x: &[(u32, Scalar)], y: &[(u32, Scalar)]) -> Option<SparseVec> {
        let vx = self.h.combine_c(x);
        let vy = self.h.combine_c(y);
        let br = self.h.bracket_c(&vx, &vy);
        self.h.express_c(&br)
    }

    /// All rows as basis coordinates.
    pub fn rows(&self) -> Vec<SparseVec> {
        let mut out = Vec::new();
        for e in &self.spans {
            for r in e.canonical_rows() {
                out.push(r);
            }
        }
        out
    }
}

pub fn add_keys(ctx: &FieldCtx, a: &BlockKey, b: &BlockKey) -> BlockKey {
    let weight = a
        .2
        .iter()
        .zip(b.2.iter())
        .map(|(&x, &y)| ctx.add(x, y))
        .collect();
    (a.0 + b.0, a.1 ^ b.1, weight)
}

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

pub fn build(spec: &AlgebraSpec) -> Result<AlgebraHandle, BuildError> {
    spec.validate()?;
    let ctx = FieldCtx::new(spec.p)?;
    let params = SpaceParams::new(spec.m, spec.n, spec.t.clone(), ctx)?;
    let space = Space::new(params)?;
    let wmod = Arc::new(WModule::new(space, spec.grading()));

    let mut warnings = Vec::new();
    if spec.family == Family::SKO && spec.m == 3 {
        warnings.push("m=3 is outside the stated m>3 range for SKO; results reported".into());
    }

    let base_variant = if spec.variant == Variant::Bar {
        Variant::Bar
    } else {
        Variant::Plain
    };
    let base_spec = AlgebraSpec {
        variant: base_variant,
        ..spec.clone()
    };
    let raw = match (spec.family, base_variant) {
        (Family::W, _) => raw_w(&wmod),
        (Family::S, Variant::Plain) => raw_s(&wmod, false),
        (Family::S, Variant::Bar) => raw_s(&wmod, true),
        (Family::H, Variant::Plain) => raw_image(&wmod, RealBracket::H),
        (Family::H, Variant::Bar) => raw_h_bar(&wmod),
        (Family::K, _) => raw_image(&wmod, RealBracket::K),
        (Family::HO, Variant::Plain) => raw_image(&wmod, RealBracket::HO),
        (Family::HO, Variant::Bar) => raw_ho_bar(&wmod),
        (Family::SHO, Variant::Plain) => raw_sho(&wmod)?,
        (Family::SHO, Variant::Bar) => raw_sho_bar(&wmod)?,
        (Family::KO, _) => raw_image(&wmod, RealBracket::KO),
        (Family::SKO, _) => {
            let lam = spec.lambda.unwrap() % ctx.p();
            raw_sko(&wmod, lam)
        }
        _ => unreachable!(),
    };
    let mut handle = canonicalize(base_spec, wmod, raw, warnings)?;

    match spec.variant {
        Variant::Plain | Variant::Bar => Ok(handle),
        Variant::Derived1 => {
            let mut d = derived(&handle)?;
            d.spec = spec.clone();
            Ok(d)
        }
        Variant::Derived2 => {
            handle = derived(&handle)?;
            let mut d = derived(&handle)?;
            d.spec = spec.clone();
            Ok(d)
        }
    }
}

struct RawAlgebra {
    side: Side,
    vectors: Vec<RawVec>,
}

fn raw_w(wmod: &Arc<WModule>) -> RawAlgebra {
    let vectors = (0..wmod.dim() as u32)
        .map(|idx| RawVec {
            w: vec![(idx, 1)],
            c: vec![(idx, 1)],
        })
        .collect();
    RawAlgebra {
        side: Side::W,
        vectors,
    }
}

/// Kernel families inside W: group ambient monomials by (zdeg, parity) and
/// solve the linear conditions per group.
fn kernel_family(
    wmod: &Arc<WModule>,
    condition: impl Fn(&[u32]) -> Vec<SparseVec>,
) -> RawAlgebra {
    let ctx = wmod.ctx();
    let mut groups: BTreeMap<(i64, u8), Vec<u32>> = BTreeMap::new();
    for idx in 0..wmod.dim() as u32 {
        groups
            .entry((wmod.wzdeg(idx), wmod.wparity(idx)))
            .or_default()
            .push(idx);
    }
    let mut vectors = Vec::new();
    for (_, monos) in groups {
        let rows = condition(&monos);
        let mat = MatrixFp::from_rows(monos.len(), rows);
        for null in mat.nullspace(&ctx) {
            let v: VectorField = null
                .iter()
                .enumerate()
                .filter(|(_, &c)| c != 0)
                .map(|(i, &c)| (monos[i], c))
                .collect();
            vectors.push(RawVec {
                c: v.clone(),
                w: v,
            });
        }
    }
    RawAlgebra {
        side: Side::W,
        vectors,
    }
}

/// Constraint rows for `div(D) = 0` (or `div(D) in F` for the bar variant)
/// over the group of W-monomials `monos`.
fn raw_s(wmod: &Arc<WModule>, bar: bool) -> RawAlgebra {
    let ctx = wmod.ctx();
    let one = wmod.space.one();
    kernel_family(wmod, |monos| {
        let mut rows: HashMap<u32, SparseVec> = HashMap::new();
        for (col, &widx) in monos.iter().enumerate() {
            let d = wmod.divergence(&vec![(widx, 1)]);
            for (mono, c) in d {
                if bar && mono == one {
                    continue;
                }
                rows.entry(mono).or_default().push((col as u32, c));
            }
        }
        let mut keys: Vec<u32> = rows.keys().copied().collect();
        keys.sort_unstable();
        keys.into_iter()
            .map(|k| {
                let mut r = rows.remove(&k).unwrap();
                r.sort_unstable_by_key(|t| t.0);
                collect_terms(&ctx, r)
            })
            .collect()
    })
}

/// The bar-Hamiltonian condition
/// d_i(a_{j'}) = (-1)^{|d_i||d_j| + (|d_i|+|d_j|) alpha} sigma(i) sigma(j) d_j(a_{i'})
/// for all i, j, where alpha is the parity of the element.
fn raw_h_bar(wmod: &Arc<WModule>) -> RawAlgebra {
    let maps = wmod.maps;
    bar_condition_family(wmod, move |i, j, alpha| {
        let par = (maps_dir_parity(wmod, i) * maps_dir_parity(wmod, j)
            + (maps_dir_parity(wmod, i) + maps_dir_parity(wmod, j)) * alpha as u32)
            & 1;
        let mut sign = 1i64;
        if par == 1 {
            sign = -sign;
        }
        sign * maps.sigma(i) * maps.sigma(j)
    }, |i| wmod.maps.prime(i))
}

/// The bar odd-Hamiltonian condition
/// d_i(a_{~j}) = (-1)^{|d_i||d_j| + (|d_i|+|d_j|)(alpha+1)} d_j(a_{~i}).
fn raw_ho_bar(wmod: &Arc<WModule>) -> RawAlgebra {
    bar_condition_family(wmod, move |i, j, alpha| {
        let par = (maps_dir_parity(wmod, i) * maps_dir_parity(wmod, j)
            + (maps_dir_parity(wmod, i) + maps_dir_parity(wmod, j)) * (alpha as u32 + 1))
            & 1;
        if par == 1 {
            -1
        } else {
            1
        }
    }, |i| wmod.maps.tilde(i))
}

fn maps_dir_parity(wmod: &WModule, i: usize) -> u32 {
    wmod.dir_parity(i) as u32
}

/// Shared machinery for the H-bar / HO-bar symmetry conditions. `sign_of`
/// gives the scalar in front of the right-hand side; `pair` maps the
/// direction index (prime or tilde).
fn bar_condition_family(
    wmod: &Arc<WModule>,
    sign_of: impl Fn(usize, usize, u8) -> i64,
    pair: impl Fn(usize) -> usize,
) -> RawAlgebra {
    let ctx = wmod.ctx();
    let vars = wmod.vars();
    kernel_family(wmod, |monos| {
        if monos.is_empty() {
            return Vec::new();
        }
        let alpha = wmod.wparity(monos[0]);
        // constraint rows indexed by (i, j, target mono)
        let mut rows: HashMap<(usize, usize, u32), SparseVec> = HashMap::new();
        for (col, &widx) in monos.iter().enumerate() {
            let (mono, dir) = wmod.wmono(widx);
            for i in 1..=vars {
                for j in 1..=vars {
                    if i > j {
                        continue; // (i,j) and (j,i) give equivalent rows
                    }
                    // lhs: d_i(a_{j'}), so dir must equal pair(j)
                    if dir == pair(j) {
                        if let Some((c, target)) = wmod.space.partial_mono(i, mono) {
                            rows.entry((i, j, target))
                                .or_default()
                                .push((col as u32, c));
                        }
                    }
                    // rhs: -sign * d_j(a_{i'})
                    if dir == pair(i) {
                        if let Some((c, target)) = wmod.space.partial_mono(j, mono) {
                            let s = sign_of(i, j, alpha);
                            let coef = if s < 0 { c } else { ctx.neg(c) };
                            rows.entry((i, j, target))
                                .or_default()
                                .push((col as u32, coef));
                        }
                    }
                }
            }
        }
        let mut keys: Vec<(usize, usize, u32)> = rows.keys().copied().collect();
        keys.sort_unstable();
        keys.into_iter()
            .map(|k| {
                let mut r = rows.remove(&k).unwrap();
                r.sort_unstable_by_key(|t| t.0);
                collect_terms(&ctx, r)
            })
            .collect()
    })
}

/// Image families: the span of realize(a) over all monomials a, carried on
/// the O side.
fn raw_image(wmod: &Arc<WModule>, which: RealBracket) -> RawAlgebra {
    let mod_constants = WModule::realization_mod_constants(which);
    let one = wmod.space.one();
    let mut vectors = Vec::new();
    for mono in 0..wmod.space.dim() as u32 {
        if mod_constants && mono == one {
            continue;
        }
        let c: SuperPoly = vec![(mono, 1)];
        let w = wmod.realize(which, &c);
        if w.is_empty() {
            continue;
        }
        vectors.push(RawVec { w, c });
    }
    RawAlgebra {
        side: Side::O {
            bracket: which,
            mod_constants,
        },
        vectors,
    }
}

/// SHO = S(m,m;t) cap HO(m;t): functions a with T_H(a) divergence free.
fn raw_sho(wmod: &Arc<WModule>) -> Result<RawAlgebra, BuildError> {
    let ctx = wmod.ctx();
    let one = wmod.space.one();
    // div(T_H(a)) = 0 is a linear condition on a; solve per (zdeg, parity)
    // group of O-monomials.
    let mut groups: BTreeMap<(i64, u8), Vec<u32>> = BTreeMap::new();
    for mono in 0..wmod.space.dim() as u32 {
        if mono == one {
            continue;
        }
        let key = (
            wmod.space.zdeg(&wmod.grading, mono),
            wmod.space.parity(mono),
        );
        groups.entry(key).or_default().push(mono);
    }
    let mut vectors = Vec::new();
    for (_, monos) in groups {
        let mut rows: HashMap<u32, SparseVec> = HashMap::new();
        for (col, &mono) in monos.iter().enumerate() {
            let th = wmod.op_th(&vec![(mono, 1)]);
            let d = wmod.divergence(&th);
            for (target, c) in d {
                rows.entry(target).or_default().push((col as u32, c));
            }
        }
        let mut keys: Vec<u32> = rows.keys().copied().collect();
        keys.sort_unstable();
        let rows: Vec<SparseVec> = keys
            .into_iter()
            .map(|k| {
                let mut r = rows.remove(&k).unwrap();
                r.sort_unstable_by_key(|t| t.0);
                collect_terms(&ctx, r)
            })
            .collect();
        let mat = MatrixFp::from_rows(monos.len(), rows);
        for null in mat.nullspace(&ctx) {
            let c: SuperPoly = null
                .iter()
                .enumerate()
                .filter(|(_, &x)| x != 0)
                .map(|(i, &x)| (monos[i], x))
                .collect();
            let w = wmod.op_th(&c);
            if w.is_empty() {
                continue;
            }
            vectors.push(RawVec { w, c });
        }
    }
    Ok(RawAlgebra {
        side: Side::O {
            bracket: RealBracket::HO,
            mod_constants: true,
        },
        vectors,
    })
}

/// SHO-bar = S-bar cap HO-bar, solved as stacked conditions on W coordinates.
fn raw_sho_bar(wmod: &Arc<WModule>) -> Result<RawAlgebra, BuildError> {
    let s_bar = raw_s(wmod, true);
    let ho_bar = raw_ho_bar(wmod);
    // group both by (zdeg, parity) and intersect spans over W coordinates
    let ctx = wmod.ctx();
    let group_of = |v: &RawVec| -> (i64, u8) {
        let w0 = v.w[0].0;
        (wmod.wzdeg(w0), wmod.wparity(w0))
    };
    let mut ga: BTreeMap<(i64, u8), Vec<VectorField>> = BTreeMap::new();
    for v in &s_bar.vectors {
        ga.entry(group_of(v)).or_default().push(v.w.clone());
    }
    let mut gb: BTreeMap<(i64, u8), Vec<VectorField>> = BTreeMap::new();
    for v in &ho_bar.vectors {
        gb.entry(group_of(v)).or_default().push(v.w.clone());
    }
    let mut vectors = Vec::new();
    for (key, va) in ga {
        let Some(vb) = gb.get(&key) else { continue };
        for inter in intersect_spans(&ctx, &va, vb) {
            vectors.push(RawVec {
                c: inter.clone(),
                w: inter,
            });
        }
    }
    Ok(RawAlgebra {
        side: Side::W,
        vectors,
    })
}

/// SKO: the image under D_KO of the kernel of div_lambda.
fn raw_sko(wmod: &Arc<WModule>, lambda: Scalar) -> RawAlgebra {
    let ctx = wmod.ctx();
    let mut groups: BTreeMap<(i64, u8), Vec<u32>> = BTreeMap::new();
    for mono in 0..wmod.space.dim() as u32 {
        let key = (
            wmod.space.zdeg(&wmod.grading, mono),
            wmod.space.parity(mono),
        );
        groups.entry(key).or_default().push(mono);
    }
    let mut vectors = Vec::new();
    for (_, monos) in groups {
        let mut rows: HashMap<u32, SparseVec> = HashMap::new();
        for (col, &mono) in monos.iter().enumerate() {
            let d = wmod.div_lambda(&vec![(mono, 1)], lambda);
            for (target, c) in d {
                rows.entry(target).or_default().push((col as u32, c));
            }
        }
        let mut keys: Vec<u32> = rows.keys().copied().collect();
        keys.sort_unstable();
        let rows: Vec<SparseVec> = keys
            .into_iter()
            .map(|k| {
                let mut r = rows.remove(&k).unwrap();
                r.sort_unstable_by_key(|t| t.0);
                collect_terms(&ctx, r)
            })
            .collect();
        let mat = MatrixFp::from_rows(monos.len(), rows);
        for null in mat.nullspace(&ctx) {
            let c: SuperPoly = null
                .iter()
                .enumerate()
                .filter(|(_, &x)| x != 0)
                .map(|(i, &x)| (monos[i], x))
                .collect();
            let w = wmod.op_dko(&c);
            if w.is_empty() {
                continue;
            }
            vectors.push(RawVec { w, c });
        }
    }
    RawAlgebra {
        side: Side::O {
            bracket: RealBracket::KO,
            mod_constants: false,
        },
        vectors,
    }
}

/// Intersection of two spans of sparse vectors over the same coordinates.
pub fn intersect_spans(
    ctx: &FieldCtx,
    a: &[SparseVec],
    b: &[SparseVec],
) -> Vec<SparseVec> {
    // v in span(a) cap span(b): solve [A^T | -B^T] kernel over coefficients
    let cols = a.len() + b.len();
    let mut rows: HashMap<u32, SparseVec> = HashMap::new();
    for (k, v) in a.iter().enumerate() {
        for &(coord, c) in v {
            rows.entry(coord).or_default().push((k as u32, c));
        }
    }
    for (k, v) in b.iter().enumerate() {
        for &(coord, c) in v {
            rows.entry(coord)
                .or_default()
                .push(((a.len() + k) as u32, ctx.neg(c)));
        }
    }
    let mut keys: Vec<u32> = rows.keys().copied().collect();
    keys.sort_unstable();
    let rows: Vec<SparseVec> = keys
        .into_iter()
        .map(|k| {
            let mut r = rows.remove(&k).unwrap();
            r.sort_unstable_by_key(|t| t.0);
            r
        })
        .collect();
    let mat = MatrixFp::from_rows(cols, rows);
    let mut out = Vec::new();
    for null in mat.nullspace(ctx) {
        let mut v = SparseVec::new();
        for (k, &c) in null.iter().take(a.len()).enumerate() {
            if c != 0 {
                crate::field::axpy(ctx, &mut v, c, &a[k]);
            }
        }
        if !v.is_empty() {
            out.push(v);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Canonicalization: echelon bases, torus, weights, blocks
// ---------------------------------------------------------------------------

fn canonicalize(
    spec: AlgebraSpec,
    wmod: Arc<WModule>,
    raw: RawAlgebra,
    warnings: Vec<String>,
) -> Result<AlgebraHandle, BuildError> {
    let ctx = wmod.ctx();
    // 1. group by (zdeg, parity) and echelonize over W coordinates,
    //    transporting the O-side data through the elimination
    let mut groups: BTreeMap<(i64, u8), Vec<RawVec>> = BTreeMap::new();
    for v in raw.vectors {
        if v.w.is_empty() {
            continue;
        }
        let w0 = v.w[0].0;
        let key = (wmod.wzdeg(w0), wmod.wparity(w0));
        debug_assert!(v
            .w
            .iter()
            .all(|&(x, _)| (wmod.wzdeg(x), wmod.wparity(x)) == key));
        groups.entry(key).or_default().push(v);
    }
    let mut reduced: BTreeMap<(i64, u8), Vec<RawVec>> = BTreeMap::new();
    for (key, vecs) in groups {
        let mut ech = Echelon::with_tracking(ctx);
        for v in &vecs {
            ech.insert(&v.w);
        }
        let mut rows = Vec::new();
        for (w_row, combo) in ech.canonical_rows_with_combos() {
            let mut c_row = SparseVec::new();
            match raw.side {
                Side::W => c_row = w_row.clone(),
                Side::O { .. } => {
                    for &(g, coef) in &combo {
                        crate::field::axpy(&ctx, &mut c_row, coef, &vecs[g as usize].c);
                    }
                }
            }
            rows.push(RawVec { w: w_row, c: c_row });
        }
        reduced.insert(key, rows);
    }

    // 2. canonical torus: T cap L from the (0, even) group
    let torus_coeffs = {
        let vars = wmod.vars();
        let tvecs: Vec<VectorField> = (1..=vars)
            .map(|i| vec![(wmod.windex(wmod.space.var(i), i), 1)])
            .collect();
        let span: Vec<VectorField> = reduced
            .get(&(0, 0))
            .map(|rows| rows.iter().map(|r| r.w.clone()).collect())
            .unwrap_or_default();
        let inter = intersect_spans(&ctx, &tvecs, &span);
        // rewrite each torus field as coefficients over x_i d_i
        let mut out: Vec<Vec<Scalar>> = Vec::new();
        for field in inter {
            let mut coeffs = vec![0u64; vars];
            for &(w, c) in &field {
                let (mono, dir) = wmod.wmono(w);
                debug_assert_eq!(mono, wmod.space.var(dir));
                coeffs[dir - 1] = c;
            }
            out.push(coeffs);
        }
        out.sort();
        out
    };

    // 3. O-side eigenvalue shifts per torus generator, with a diagonality
    //    check of the realized action on every coordinate monomial
    let side = raw.side;
    let torus: Vec<TorusGen> = match side {
        Side::W => torus_coeffs
            .into_iter()
            .map(|coeffs| TorusGen { coeffs, o_shift: 0 })
            .collect(),
        Side::O {
            bracket,
            mod_constants,
        } => {
            let mut gens = Vec::new();
            for coeffs in torus_coeffs {
                let field: VectorField = coeffs
                    .iter()
                    .enumerate()
                    .filter(|(_, &c)| c != 0)
                    .map(|(k, &c)| (wmod.windex(wmod.space.var(k + 1), k + 1), c))
                    .collect();
                // find the preimage of the torus field among the rows
                let pre = find_preimage(&reduced, &field, &ctx)
                    .ok_or_else(|| BuildError::SelfCheck("torus generator has no preimage".into()))?;
                // measure the eigenvalue shift on one monomial and verify
                // diagonality everywhere
                let mut o_shift: Option<Scalar> = None;
                for mono in 0..wmod.space.dim() as u32 {
                    if mod_constants && mono == wmod.space.one() {
                        continue;
                    }
                    let mut br = wmod.bracket_o(bracket, &pre, &vec![(mono, 1)]);
                    if mod_constants {
                        strip_constant(&wmod, &mut br);
                    }
                    let naive: Scalar = {
                        let mut acc = 0u64;
                        for k in 1..=wmod.vars() {
                            if coeffs[k - 1] != 0 {
                                acc = ctx.add(
                                    acc,
                                    ctx.mul(coeffs[k - 1], wmod.space.weight_entry(mono, k)),
                                );
                            }
                        }
                        acc
                    };
                    let eigen = match br.len() {
                        0 => 0,
                        1 if br[0].0 == mono => br[0].1,
                        _ => {
                            return Err(BuildError::NonDiagonal(format!(
                                "torus bracket not diagonal at monomial {mono}"
                            )))
                        }
                    };
                    let shift = ctx.sub(eigen, naive);
                    match o_shift {
                        None => o_shift = Some(shift),
                        Some(s) if s != shift => {
                            return Err(BuildError::NonDiagonal(format!(
                                "inconsistent eigenvalue shift at monomial {mono}"
                            )))
                        }
                        _ => {}
                    }
                }
                gens.push(TorusGen {
                    coeffs,
                    o_shift: o_shift.unwrap_or(0),
                });
            }
            gens
        }
    };

    // 4. split rows into weight blocks; rows of a decomposable span are
    //    automatically weight-pure, which we verify
    let mut block_map: BTreeMap<BlockKey, Vec<RawVec>> = BTreeMap::new();
    for ((zdeg, parity), rows) in reduced {
        for row in rows {
            let weight = wmono_weight(&wmod, &ctx, &torus, row.w[0].0);
            for &(widx, _) in row.w.iter().skip(1) {
                let w2 = wmono_weight(&wmod, &ctx, &torus, widx);
                if w2 != weight {
                    return Err(BuildError::NonDiagonal(format!(
                        "mixed-weight basis row in degree {zdeg} parity {parity}"
                    )));
                }
            }
            block_map
                .entry((zdeg, parity, weight))
                .or_default()
                .push(row);
        }
    }

    // 5. assemble blocks in key order, rows sorted by leading W pivot
    let mut blocks = Vec::new();
    let mut block_index = HashMap::new();
    let mut basis_c = Vec::new();
    let mut basis_w = Vec::new();
    let mut block_of = Vec::new();
    let mut ech_c = Vec::new();
    let mut ech_w = Vec::new();
    for (key, mut rows) in block_map {
        rows.sort_by_key(|r| r.w[0].0);
        let start = basis_w.len();
        let len = rows.len();
        let bidx = blocks.len();
        let mut ec = Echelon::with_tracking(ctx);
        let mut ew = Echelon::with_tracking(ctx);
        for row in rows {
            if !ec.insert(&row.c) || !ew.insert(&row.w) {
                return Err(BuildError::SelfCheck(
                    "dependent rows slipped through canonicalization".into(),
                ));
            }
            block_of.push(bidx as u32);
            basis_c.push(row.c);
            basis_w.push(row.w);
        }
        blocks.push(Block {
            zdeg: key.0,
            parity: key.1,
            weight: key.2.clone(),
            start,
            len,
        });
        block_index.insert(key, bidx);
        ech_c.push(ec);
        ech_w.push(ew);
    }

    Ok(AlgebraHandle {
        spec,
        wmod,
        side,
        basis_c,
        basis_w,
        blocks,
        block_index,
        block_of,
        ech_c,
        ech_w,
        torus,
        warnings,
        gens: std::sync::OnceLock::new(),
    })
}

fn wmono_weight(
    wmod: &WModule,
    ctx: &FieldCtx,
    torus: &[TorusGen],
    widx: u32,
) -> Vec<Scalar> {
    let (mono, dir) = wmod.wmono(widx);
    torus
        .iter()
        .map(|t| {
            let mut acc = 0u64;
            for k in 1..=wmod.vars() {
                if t.coeffs[k - 1] != 0 {
                    acc = ctx.add(acc, ctx.mul(t.coeffs[k - 1], wmod.space.weight_entry(mono, k)));
                }
            }
            ctx.sub(acc, t.coeffs[dir - 1])
        })
        .collect()
}

fn find_preimage(
    reduced: &BTreeMap<(i64, u8), Vec<RawVec>>,
    field: &VectorField,
    ctx: &FieldCtx,
) -> Option<SuperPoly> {
    let rows = reduced.get(&(0, 0))?;
    let mut ech = Echelon::with_tracking(*ctx);
    for r in rows {
        ech.insert(&r.w);
    }
    let combo = ech.express(field)?;
    let mut pre = SuperPoly::new();
    for (g, c) in combo {
        crate::field::axpy(ctx, &mut pre, c, &rows[g as usize].c);
    }
    Some(pre)
}

/// The derived algebra [L, L], canonicalized like any other handle.
pub fn derived(h: &AlgebraHandle) -> Result<AlgebraHandle, BuildError> {
    let ctx = h.ctx();
    let mut acc = SpanAccumulator::new(h);
    // every nonzero-weight block lies in [T, L] already
    acc.fill_nonzero_weight_blocks();
    // remaining contributions: block pairs whose weights cancel (when the
    // torus is trivial this is every pair)
    let nblocks = h.blocks.len();
    // index blocks by weight for partner lookup
    let mut by_weight: BTreeMap<Vec<Scalar>, Vec<usize>> = BTreeMap::new();
    for (b, block) in h.blocks.iter().enumerate() {
        by_weight.entry(block.weight.clone()).or_default().push(b);
    }
    for a in 0..nblocks {
        let wa = &h.blocks[a].weight;
        let neg: Vec<Scalar> = wa.iter().map(|&x| ctx.neg(x)).collect();
        let Some(partners) = by_weight.get(&neg) else {
            continue;
        };
        for &b in partners {
            if b < a {
                continue;
            }
            let tkey = add_keys(
                &ctx,
                &h.blocks[a].key(),
                &h.blocks[b].key(),
            );
            if let Some(t) = h.find_block(&tkey) {
                if acc.block_full(t) {
                    continue;
                }
            } else {
                continue;
            }
            let (sa, la) = (h.blocks[a].start, h.blocks[a].len);
            let (sb, lb) = (h.blocks[b].start, h.blocks[b].len);
            'pairs: for i in sa..sa + la {
                for j in sb..sb + lb {
                    if a == b && j < i {
                        continue;
                    }
                    if a == b && i == j && h.blocks[a].parity == 0 {
                        continue; // [x,x] = 0 for even x
                    }
                    let br = h.bracket_c(&h.basis_c[i], &h.basis_c[j]);
                    if br.is_empty() {
                        continue;
                    }
                    let coords = h.express_c(&br).ok_or_else(|| {
                        BuildError::SelfCheck("bracket escaped the algebra".into())
                    })?;
                    acc.insert_coords(&coords);
                    if let Some(t) = h.find_block(&tkey) {
                        if acc.block_full(t) {
                            break 'pairs;
                        }
                    }
                }
            }
        }
    }

    // rebuild a handle from the accumulated rows
    let vectors: Vec<RawVec> = acc
        .rows()
        .iter()
        .map(|coords| RawVec {
            w: h.combine_w(coords),
            c: h.combine_c(coords),
        })
        .collect();
    let spec = AlgebraSpec {
        variant: match h.spec.variant {
            Variant::Plain | Variant::Bar => Variant::Derived1,
            _ => Variant::Derived2,
        },
        ..h.spec.clone()
    };
    canonicalize(spec, h.wmod.clone(), RawAlgebra { side: h.side, vectors }, h.warnings.clone())
}

/// Build a handle from explicit W-side vectors (test fixtures, subspaces).
pub fn subalgebra_from_w(
    wmod: Arc<WModule>,
    spec: AlgebraSpec,
    vectors: Vec<VectorField>,
) -> Result<AlgebraHandle, BuildError> {
    let raw = RawAlgebra {
        side: Side::W,
        vectors: vectors
            .into_iter()
            .map(|w| RawVec { c: w.clone(), w })
            .collect(),
    };
    canonicalize(spec, wmod, raw, Vec::new())
}

// ---------------------------------------------------------------------------
// JSON dump
// ---------------------------------------------------------------------------

#[derive(Serialize)]
pub struct HandleJson {
    pub spec: AlgebraSpec,
    pub dim: usize,
    pub zdeg_range: (i64, i64),
    pub dims_by_degree: BTreeMap<i64, usize>,
    pub parity_counts: (usize, usize),
    pub torus_dim: usize,
    pub warnings: Vec<String>,
    pub basis: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub structure_constants: Option<Vec<(u32, u32, u32, Scalar)>>,
}

impl AlgebraHandle {
    pub fn to_json(&self, with_constants: bool) -> HandleJson {
        let (depth, height) = self.height_depth();
        let constants = if with_constants {
            let mut out = Vec::new();
            for i in 0..self.dim() {
                for j in i..self.dim() {
                    if i == j && self.parity_of(i) == 0 {
                        continue;
                    }
                    if let Some(coords) = self.bracket_coords(i, j) {
                        for (k, c) in coords {
                            out.push((i as u32, j as u32, k, c));
                        }
                    }
                }
            }
            Some(out)
        } else {
            None
        };
        HandleJson {
            spec: self.spec.clone(),
            dim: self.dim(),
            zdeg_range: (-depth, height),
            dims_by_degree: self.dims_by_degree(),
            parity_counts: self.parity_counts(),
            torus_dim: self.torus_rank(),
            warnings: self.warnings.clone(),
            basis: self.basis_texts(),
            structure_constants: constants,
        }
    }
}
