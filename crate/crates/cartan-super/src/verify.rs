//! The acceptance suite: reproduces the classification data (heights,
//! normalizers, outer superderivation dimensions, exceptional derivations)
//! on a fixed verification grid and reports one pass/fail line per check.
//!
//! Checks marked `reported` are computed and printed but not asserted
//! (the m = 3 SKO rows, whose parameters sit outside the stated range of
//! the SKO construction).

use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::dersolve::{
    candidate_ad_ppower, candidate_phi, candidate_theta, check_candidate, der_full_both,
    expected_height, expected_outer_dim, DerMode, DerReport, DerSolver,
};
use crate::families::{build, AlgebraHandle, AlgebraSpec, Family, Variant};
use crate::structure::{check_jacobi, is_simple, normalizer, same_span, Normalizer};

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub group: String,
    pub name: String,
    /// None: informational line (reported, not asserted)
    pub passed: Option<bool>,
    pub detail: String,
    pub millis: u128,
}

impl CheckResult {
    pub fn line(&self) -> String {
        let tag = match self.passed {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "INFO",
        };
        format!(
            "[{tag}] {:<22} {:<38} {} ({} ms)",
            self.group, self.name, self.detail, self.millis
        )
    }
}

/// One row of the verification grid.
#[derive(Debug, Clone, Serialize)]
pub struct GridRow {
    pub family: Family,
    pub m: usize,
    pub n: usize,
    pub p: u64,
    pub t: Vec<u32>,
    pub lambda: Option<u64>,
    pub variant: Variant,
    /// asserted rows fail the suite on mismatch; reported rows only print
    pub asserted: bool,
}

impl GridRow {
    pub fn spec(&self) -> AlgebraSpec {
        AlgebraSpec {
            family: self.family,
            variant: self.variant,
            m: self.m,
            n: self.n,
            p: self.p,
            t: self.t.clone(),
            lambda: self.lambda,
        }
    }

    pub fn with_variant(&self, variant: Variant) -> AlgebraSpec {
        AlgebraSpec {
            variant,
            ..self.spec()
        }
    }

    pub fn label(&self) -> String {
        self.spec().display()
    }
}

fn row(family: Family, m: usize, n: usize, t: &[u32], lambda: Option<u64>, asserted: bool) -> GridRow {
    GridRow {
        family,
        m,
        n,
        p: 5,
        t: t.to_vec(),
        lambda,
        variant: Variant::Plain,
        asserted,
    }
}

/// The default verification grid.
pub fn default_grid(skip_slow: bool) -> Vec<GridRow> {
    let mut rows = vec![
        row(Family::W, 1, 2, &[1], None, true),
        row(Family::W, 2, 2, &[1, 1], None, true),
        row(Family::W, 2, 2, &[2, 1], None, true),
        row(Family::S, 2, 2, &[1, 1], None, true),
        row(Family::S, 2, 2, &[2, 1], None, true),
        row(Family::H, 2, 2, &[1, 1], None, true),
        row(Family::K, 1, 2, &[1], None, true),
        row(Family::K, 1, 4, &[1], None, true),
        row(Family::K, 3, 2, &[1, 1, 1], None, true),
        row(Family::HO, 3, 3, &[1, 1, 1], None, true),
        row(Family::SHO, 3, 3, &[1, 1, 1], None, true),
        row(Family::KO, 3, 4, &[1, 1, 1], None, true),
        // m = 3 sits outside the stated SKO parameter range: reported only
        row(Family::SKO, 3, 4, &[1, 1, 1], Some(0), false),
        row(Family::SKO, 3, 4, &[1, 1, 1], Some(1), false),
    ];
    if !skip_slow {
        rows.push(row(Family::SKO, 4, 5, &[1, 1, 1, 1], Some(1), true));
    }
    rows
}

/// Parse a line-oriented grid file: one `key=value` record per line,
/// e.g. `family=SHO m=3 p=5 t=1,1,1 variant=derived2 assert=report`.
pub fn parse_grid(text: &str) -> Result<Vec<GridRow>, String> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut family = None;
        let mut m = None;
        let mut n = None;
        let mut p = 5u64;
        let mut t: Option<Vec<u32>> = None;
        let mut lambda = None;
        let mut variant = Variant::Plain;
        let mut asserted = true;
        for tok in line.split_whitespace() {
            let (key, value) = tok
                .split_once('=')
                .ok_or_else(|| format!("line {}: bad token '{tok}'", lineno + 1))?;
            match key {
                "family" => {
                    family = Some(
                        Family::parse(value)
                            .ok_or_else(|| format!("line {}: unknown family '{value}'", lineno + 1))?,
                    )
                }
                "m" => m = Some(value.parse::<usize>().map_err(|e| e.to_string())?),
                "n" => n = Some(value.parse::<usize>().map_err(|e| e.to_string())?),
                "p" => p = value.parse::<u64>().map_err(|e| e.to_string())?,
                "t" => {
                    t = Some(
                        value
                            .split(',')
                            .map(|x| x.parse::<u32>().map_err(|e| e.to_string()))
                            .collect::<Result<Vec<_>, _>>()?,
                    )
                }
                "lambda" => lambda = Some(value.parse::<u64>().map_err(|e| e.to_string())?),
                "variant" => {
                    variant = Variant::parse(value)
                        .ok_or_else(|| format!("line {}: unknown variant '{value}'", lineno + 1))?
                }
                "assert" => asserted = value != "report",
                other => return Err(format!("line {}: unknown key '{other}'", lineno + 1)),
            }
        }
        let family = family.ok_or_else(|| format!("line {}: missing family", lineno + 1))?;
        let m = m.ok_or_else(|| format!("line {}: missing m", lineno + 1))?;
        let t = t.ok_or_else(|| format!("line {}: missing t", lineno + 1))?;
        let n = match (family, n) {
            (Family::HO | Family::SHO, _) => m,
            (Family::KO | Family::SKO, _) => m + 1,
            (_, Some(n)) => n,
            (_, None) => return Err(format!("line {}: missing n", lineno + 1)),
        };
        // validate by constructing the spec
        AlgebraSpec::new(family, variant, m, Some(n), p, t.clone(), lambda)
            .map_err(|e| format!("line {}: {e}", lineno + 1))?;
        rows.push(GridRow {
            family,
            m,
            n,
            p,
            t,
            lambda,
            variant,
            asserted,
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Cached workspace
// ---------------------------------------------------------------------------

pub struct Suite {
    pub rows: Vec<GridRow>,
    handles: HashMap<String, Arc<AlgebraHandle>>,
    reports: HashMap<String, Arc<DerReport>>,
    normalizers: HashMap<String, Arc<Normalizer>>,
    pub results: Vec<CheckResult>,
}

impl Suite {
    pub fn new(rows: Vec<GridRow>) -> Self {
        Suite {
            rows,
            handles: HashMap::new(),
            reports: HashMap::new(),
            normalizers: HashMap::new(),
            results: Vec::new(),
        }
    }

    pub fn with_default_grid() -> Self {
        let skip_slow = std::env::var("CARTAN_SKIP_SLOW").is_ok();
        Suite::new(default_grid(skip_slow))
    }

    pub fn handle(&mut self, spec: &AlgebraSpec) -> Arc<AlgebraHandle> {
        let key = spec.display();
        if let Some(h) = self.handles.get(&key) {
            return h.clone();
        }
        let h = Arc::new(build(spec).expect("grid spec failed to build"));
        self.handles.insert(key, h.clone());
        h
    }

    pub fn der_report(&mut self, spec: &AlgebraSpec) -> Arc<DerReport> {
        let key = spec.display();
        if let Some(r) = self.reports.get(&key) {
            return r.clone();
        }
        let h = self.handle(spec);
        let mut solver = DerSolver::new(&h).expect("derivation solver setup failed");
        let r = Arc::new(
            solver
                .der_full(DerMode::WeightReduced)
                .expect("derivation solve failed"),
        );
        self.reports.insert(key, r.clone());
        r
    }

    pub fn normalizer_of(&mut self, spec: &AlgebraSpec) -> Arc<Normalizer> {
        let key = spec.display();
        if let Some(n) = self.normalizers.get(&key) {
            return n.clone();
        }
        let h = self.handle(spec);
        let n = Arc::new(normalizer(&h));
        self.normalizers.insert(key, n.clone());
        n
    }

    fn push(
        &mut self,
        group: &str,
        name: String,
        passed: Option<bool>,
        detail: String,
        start: Instant,
    ) {
        let result = CheckResult {
            group: group.into(),
            name,
            passed,
            detail,
            millis: start.elapsed().as_millis(),
        };
        self.results.push(result);
    }

    // -- criterion 1 --------------------------------------------------------

    pub fn group_construction(&mut self) {
        let rows = self.rows.clone();
        for r in rows {
            let start = Instant::now();
            let h = self.handle(&r.spec());
            let report = check_jacobi(&h, 200, 1000, 0xCA27A);
            let ok = report.passed();
            let detail = format!(
                "dim {} {} triples {}",
                h.dim(),
                if report.exhaustive {
                    "exhaustive"
                } else {
                    "sampled"
                },
                report.triples_checked
            );
            self.push("construction", r.label(), Some(ok), detail, start);
        }
    }

    // -- criterion 2 --------------------------------------------------------

    pub fn group_heights(&mut self) {
        let rows = self.rows.clone();
        for r in rows {
            let start = Instant::now();
            let spec2 = r.with_variant(Variant::Derived2);
            let h2 = self.handle(&spec2);
            let (_, height) = h2.height_depth();
            let expected = expected_height(&r.spec());
            let ok = Some(height) == expected;
            let detail = format!("height(X^(2)) = {height}, expected {expected:?}");
            self.push(
                "heights",
                r.label(),
                if r.asserted { Some(ok) } else { None },
                detail,
                start,
            );
        }
    }

    // -- criterion 3 --------------------------------------------------------

    fn der_variants_for(family: Family) -> Vec<Variant> {
        match family {
            Family::W | Family::HO | Family::KO => vec![Variant::Plain],
            Family::S | Family::H | Family::K => vec![Variant::Plain, Variant::Derived1],
            Family::SHO | Family::SKO => {
                vec![Variant::Plain, Variant::Derived1, Variant::Derived2]
            }
        }
    }

    pub fn group_outer_dims(&mut self) {
        let rows = self.rows.clone();
        for r in rows {
            for variant in Self::der_variants_for(r.family) {
                let spec = r.with_variant(variant);
                let Some(expected) = expected_outer_dim(&spec) else {
                    continue;
                };
                let start = Instant::now();
                let report = self.der_report(&spec);
                let ok = report.outer as u64 == expected;
                let detail = format!(
                    "outer = {}, expected {} (total {}, inner {})",
                    report.outer, expected, report.total, report.inner
                );
                self.push(
                    "outer-dims",
                    spec.display(),
                    if r.asserted { Some(ok) } else { None },
                    detail,
                    start,
                );
            }
        }
    }

    // -- criterion 4 --------------------------------------------------------

    pub fn group_exceptional(&mut self) {
        let start = Instant::now();
        let ho_spec = AlgebraSpec::new(Family::HO, Variant::Plain, 3, None, 5, vec![1; 3], None)
            .expect("HO spec");
        let ho = self.handle(&ho_spec);
        match candidate_phi(&ho) {
            Some(phi) => {
                let rep = check_candidate(&ho, &phi).expect("phi candidate check");
                self.push(
                    "exceptional",
                    "Phi on HO(3;(1,1,1))".into(),
                    Some(rep.is_derivation && !rep.is_inner),
                    format!(
                        "derivation = {}, inner = {}",
                        rep.is_derivation, rep.is_inner
                    ),
                    start,
                );
            }
            None => self.push(
                "exceptional",
                "Phi on HO(3;(1,1,1))".into(),
                Some(false),
                "Phi image left the algebra".into(),
                start,
            ),
        }
        let start = Instant::now();
        let sho2_spec =
            AlgebraSpec::new(Family::SHO, Variant::Derived2, 3, None, 5, vec![1; 3], None)
                .expect("SHO spec");
        let sho2 = self.handle(&sho2_spec);
        match candidate_theta(&sho2) {
            Some(theta) => {
                let rep = check_candidate(&sho2, &theta).expect("theta candidate check");
                self.push(
                    "exceptional",
                    "Theta on SHO(3;(1,1,1))^(2)".into(),
                    Some(rep.is_derivation && !rep.is_inner),
                    format!(
                        "derivation = {}, inner = {}, zshift {}, parity {}",
                        rep.is_derivation, rep.is_inner, theta.zshift, theta.parity
                    ),
                    start,
                );
            }
            None => self.push(
                "exceptional",
                "Theta on SHO(3;(1,1,1))^(2)".into(),
                Some(false),
                "Theta image left the algebra".into(),
                start,
            ),
        }
        // removing Theta's class drops the outer dimension by exactly 1
        let start = Instant::now();
        let report = self.der_report(&sho2_spec);
        let base = sho2_spec.eta() + (1 << 3) + 3;
        let ok = report.outer as u64 == base + 1;
        self.push(
            "exceptional",
            "Theta accounts for delta_{m=3}".into(),
            Some(ok),
            format!("outer = {} = {} + 1", report.outer, base),
            start,
        );
    }

    // -- criterion 5 --------------------------------------------------------

    fn expected_normalizer_dim(&mut self, r: &GridRow) -> usize {
        match r.family {
            Family::W => self.handle(&r.spec()).dim(),
            Family::S => self.handle(&r.with_variant(Variant::Bar)).dim(),
            Family::H | Family::HO | Family::SHO => {
                self.handle(&r.with_variant(Variant::Bar)).dim() + 1
            }
            Family::K | Family::KO => self.handle(&r.spec()).dim(),
            Family::SKO => self.handle(&r.spec()).dim() + 1,
        }
    }

    pub fn group_normalizers(&mut self) {
        let rows = self.rows.clone();
        for r in rows {
            if r.family == Family::W {
                continue;
            }
            let start = Instant::now();
            let expected = self.expected_normalizer_dim(&r);
            let nor = self.normalizer_of(&r.spec());
            let mut ok = nor.dim == expected;
            let mut detail = format!("dim Nor = {}, expected {}", nor.dim, expected);
            // the specific complement element for SKO: D_KO(x_1 x_{~1})
            if r.family == Family::SKO && ok {
                let h = self.handle(&r.spec());
                let w = &h.wmod;
                let (c, x11) = w
                    .space
                    .mono_mul(w.space.var(1), w.space.var(1 + r.m))
                    .expect("x1 x~1");
                let extra = w.op_dko(&vec![(x11, c)]);
                let in_nor = nor.contains(&h.ctx(), &extra);
                let in_l = h.contains_w(&extra);
                ok = in_nor && !in_l;
                detail.push_str(&format!(", x1x~1 class in Nor\\L = {}", in_nor && !in_l));
            }
            self.push(
                "normalizers",
                r.label(),
                if r.asserted { Some(ok) } else { None },
                detail,
                start,
            );
        }
        // Nor(X) = Nor(X^(1)) for X in {S, H, K}
        for (family, m, n, t) in [
            (Family::S, 2, 2, vec![1u32, 1]),
            (Family::H, 2, 2, vec![1, 1]),
            (Family::K, 1, 4, vec![1]),
        ] {
            let start = Instant::now();
            let plain = AlgebraSpec::new(family, Variant::Plain, m, Some(n), 5, t.clone(), None)
                .expect("spec");
            let d1 = AlgebraSpec::new(family, Variant::Derived1, m, Some(n), 5, t.clone(), None)
                .expect("spec");
            let n0 = self.normalizer_of(&plain);
            let n1 = self.normalizer_of(&d1);
            let h = self.handle(&plain);
            let ok = same_span(&h.ctx(), &n0.basis, &n1.basis);
            self.push(
                "normalizers",
                format!("Nor({0}) = Nor({0}^(1))", plain.display()),
                Some(ok),
                format!("dims {} vs {}", n0.dim, n1.dim),
                start,
            );
        }
    }

    // -- criterion 6 --------------------------------------------------------

    pub fn group_decompositions(&mut self) {
        let rows = self.rows.clone();
        for r in &rows {
            match r.family {
                Family::S => {
                    let start = Instant::now();
                    let sbar = self.handle(&r.with_variant(Variant::Bar)).dim();
                    let s1 = self.handle(&r.with_variant(Variant::Derived1)).dim();
                    let ok = sbar - s1 == r.m + 1;
                    self.push(
                        "decompositions",
                        format!("dim Sbar - dim S^(1), {}", r.label()),
                        Some(ok),
                        format!("{} - {} = {}, expected {}", sbar, s1, sbar - s1, r.m + 1),
                        start,
                    );
                }
                Family::K => {
                    let start = Instant::now();
                    let k = self.handle(&r.spec()).dim();
                    let k1 = self.handle(&r.with_variant(Variant::Derived1)).dim();
                    let delta = crate::dersolve::delta_mod(r.n as i64 - r.m as i64, 3, r.p);
                    let ok = (k - k1) as u64 == delta;
                    self.push(
                        "decompositions",
                        format!("dim K - dim K^(1), {}", r.label()),
                        Some(ok),
                        format!("{} - {} = {}, expected {}", k, k1, k - k1, delta),
                        start,
                    );
                }
                Family::H => {
                    let start = Instant::now();
                    let hbar = self.handle(&r.with_variant(Variant::Bar)).dim();
                    let h1 = self.handle(&r.with_variant(Variant::Derived1)).dim();
                    let ok = hbar - h1 == r.m + 1;
                    self.push(
                        "decompositions",
                        format!("dim Hbar - dim H^(1), {}", r.label()),
                        Some(ok),
                        format!("{} - {} = {}, expected {}", hbar, h1, hbar - h1, r.m + 1),
                        start,
                    );
                }
                _ => {}
            }
        }
    }

    // -- criterion 7 --------------------------------------------------------

    pub fn group_simplicity(&mut self) {
        let rows = self.rows.clone();
        for r in rows {
            // expected simplicity of the listed variants on this row
            let mut cases: Vec<(Variant, bool)> = Vec::new();
            match r.family {
                Family::W => cases.push((Variant::Plain, true)),
                Family::S => {
                    cases.push((Variant::Plain, false));
                    cases.push((Variant::Bar, false));
                    cases.push((Variant::Derived1, true));
                }
                Family::H => {
                    // H properly contains H^(1) at finite t
                    cases.push((Variant::Plain, false));
                    cases.push((Variant::Bar, false));
                    cases.push((Variant::Derived1, true));
                }
                Family::K => {
                    let delta = crate::dersolve::delta_mod(r.n as i64 - r.m as i64, 3, r.p);
                    cases.push((Variant::Plain, delta == 0));
                    cases.push((Variant::Derived1, true));
                }
                Family::HO => {
                    cases.push((Variant::Plain, true));
                    cases.push((Variant::Bar, false));
                }
                Family::SHO => {
                    cases.push((Variant::Plain, false));
                    cases.push((Variant::Bar, false));
                    cases.push((Variant::Derived1, false));
                    cases.push((Variant::Derived2, true));
                }
                Family::KO => cases.push((Variant::Plain, true)),
                Family::SKO => {
                    cases.push((Variant::Plain, false));
                    cases.push((Variant::Derived2, true));
                }
            }
            for (variant, expected) in cases {
                let start = Instant::now();
                let spec = r.with_variant(variant);
                let h = self.handle(&spec);
                let got = is_simple(&h);
                let ok = got == expected;
                self.push(
                    "simplicity",
                    spec.display(),
                    if r.asserted { Some(ok) } else { None },
                    format!("simple = {got}, expected {expected}"),
                    start,
                );
            }
        }
    }

    // -- criterion 8 --------------------------------------------------------

    pub fn group_solver_consistency(&mut self) {
        // full vs weight_reduced agreement
        for (family, m, n, t) in [
            (Family::W, 1usize, 2usize, vec![1u32]),
            (Family::H, 2, 2, vec![1, 1]),
            (Family::K, 1, 2, vec![1]),
        ] {
            let start = Instant::now();
            let spec =
                AlgebraSpec::new(family, Variant::Plain, m, Some(n), 5, t, None).expect("spec");
            let h = self.handle(&spec);
            let ok = der_full_both(&h).is_ok();
            self.push(
                "solver-consistency",
                format!("mode agreement, {}", spec.display()),
                Some(ok),
                "full and weight-reduced block dimensions".into(),
                start,
            );
        }
        // Leibniz re-verification of returned derivations on random pairs
        let rows = self.rows.clone();
        for r in &rows {
            if !r.asserted {
                continue;
            }
            for variant in Self::der_variants_for(r.family) {
                let spec = r.with_variant(variant);
                if expected_outer_dim(&spec).is_none() {
                    continue;
                }
                let start = Instant::now();
                let report = self.der_report(&spec);
                let h = self.handle(&spec);
                let mut ok = true;
                for rep in &report.outer_reps {
                    if !rep.verify_random_pairs(&h, 300, 0xBEEF) {
                        ok = false;
                    }
                }
                let mut checked = report.outer_reps.len();
                for sols in report.theta_solutions.values() {
                    for s in sols.iter().take(2) {
                        if !s.verify_random_pairs(&h, 60, 0xF00D) {
                            ok = false;
                        }
                        checked += 1;
                    }
                }
                self.push(
                    "solver-consistency",
                    format!("Leibniz re-verify, {}", spec.display()),
                    Some(ok),
                    format!("{checked} derivations re-checked on random pairs"),
                    start,
                );
            }
        }
        // dim Der(L) = dim Nor(L) + delta_{X=HO} + delta_{L=SHO^(2), m=3} + (eta - m)
        for r in &rows {
            for variant in Self::der_variants_for(r.family) {
                let spec = r.with_variant(variant);
                if expected_outer_dim(&spec).is_none() {
                    continue;
                }
                let start = Instant::now();
                let report = self.der_report(&spec);
                let nor = self.normalizer_of(&spec);
                let delta_phi = u64::from(r.family == Family::HO);
                let delta_theta =
                    u64::from(r.family == Family::SHO && variant == Variant::Derived2 && r.m == 3);
                let eta_m = spec.eta() - r.m as u64;
                let expected = nor.dim as u64 + delta_phi + delta_theta + eta_m;
                let ok = report.total as u64 == expected;
                self.push(
                    "solver-consistency",
                    format!("dim Der = dim Nor + deltas, {}", spec.display()),
                    if r.asserted { Some(ok) } else { None },
                    format!(
                        "total {} vs {} + {} + {} + {}",
                        report.total, nor.dim, delta_phi, delta_theta, eta_m
                    ),
                    start,
                );
            }
        }
        // negative-degree derivation count of X(1)^(2):
        // dim Der^- = dim X^- + delta_{X=HO} + delta_{X=SHO} delta_{m=3}
        for (family, m, n) in [
            (Family::W, 1usize, 2usize),
            (Family::HO, 3, 3),
            (Family::SHO, 3, 3),
        ] {
            let start = Instant::now();
            let spec = AlgebraSpec::new(
                family,
                Variant::Derived2,
                m,
                Some(n),
                5,
                vec![1; m],
                None,
            )
            .expect("spec");
            let report = self.der_report(&spec);
            let h = self.handle(&spec);
            let neg_der: usize = report
                .dims_by_block
                .iter()
                .filter(|b| b.zshift < 0)
                .map(|b| b.dim)
                .sum();
            let neg_l = (0..h.dim()).filter(|&i| h.zdeg_of(i) < 0).count();
            let delta = usize::from(family == Family::HO)
                + usize::from(family == Family::SHO && m == 3);
            let ok = neg_der == neg_l + delta;
            self.push(
                "solver-consistency",
                format!("Der^- of {}", spec.display()),
                Some(ok),
                format!("{neg_der} vs {neg_l} + {delta}"),
                start,
            );
        }
    }

    // -- criterion 9 --------------------------------------------------------

    pub fn group_restrictedness(&mut self) {
        let rows = self.rows.clone();
        for r in &rows {
            if r.family != Family::W {
                continue;
            }
            let start = Instant::now();
            let h = self.handle(&r.spec());
            let mut ok = true;
            for i in 1..=r.m {
                for b in 0..h.dim() {
                    if !h
                        .wmod
                        .ad_partial_power(i, r.t[i - 1], h.basis_w(b))
                        .is_empty()
                    {
                        ok = false;
                    }
                }
            }
            self.push(
                "restrictedness",
                format!("(ad d_i)^(p^t_i) = 0 on {}", r.label()),
                Some(ok),
                "checked on every basis vector".into(),
                start,
            );
        }
        // the p-power maps are outer and independent mod inner on W(2,2;(2,1))
        let start = Instant::now();
        let spec = AlgebraSpec::new(Family::W, Variant::Plain, 2, Some(2), 5, vec![2, 1], None)
            .expect("spec");
        let h = self.handle(&spec);
        let mut count = 0u64;
        let mut all_outer = true;
        for i in 1..=2usize {
            for j in 1..spec.t[i - 1] {
                let cand = candidate_ad_ppower(&h, i, j).expect("p-power candidate");
                if cand.is_zero() {
                    all_outer = false;
                    continue;
                }
                let rep = check_candidate(&h, &cand).expect("candidate check");
                if !(rep.is_derivation && !rep.is_inner) {
                    all_outer = false;
                }
                count += 1;
            }
        }
        let eta_m = spec.eta() - 2;
        let ok = all_outer && count == eta_m;
        self.push(
            "restrictedness",
            "ad d_i^(p^j) outer, independent".into(),
            Some(ok),
            format!("{count} maps, eta - m = {eta_m}"),
            start,
        );
    }

    // -- criterion 10 -------------------------------------------------------

    pub fn group_outer_character(&mut self) {
        let rows = self.rows.clone();
        for r in &rows {
            let abelian_required = matches!(
                r.family,
                Family::W | Family::S | Family::H | Family::K | Family::KO
            );
            if abelian_required {
                let start = Instant::now();
                let report = self.der_report(&r.spec());
                let ok = report.abelian;
                let detail = format!(
                    "abelian = {}, outer dim {}{}",
                    report.abelian,
                    report.outer,
                    if report.abelian {
                        String::new()
                    } else {
                        format!(", brackets {:?}", report.outer_brackets)
                    }
                );
                self.push(
                    "outer-character",
                    format!("Der_out({}) abelian", r.label()),
                    if r.asserted { Some(ok) } else { None },
                    detail,
                    start,
                );
            }
            // Der_out(K^(1)) is abelian by the classification
            if r.family == Family::K {
                let start = Instant::now();
                let spec = r.with_variant(Variant::Derived1);
                let report = self.der_report(&spec);
                self.push(
                    "outer-character",
                    format!("Der_out({}) abelian", spec.display()),
                    if r.asserted { Some(report.abelian) } else { None },
                    format!("abelian = {}", report.abelian),
                    start,
                );
            }
            // nonabelian is permitted and reported for SHO / SKO variants
            if matches!(r.family, Family::SHO | Family::SKO) {
                for variant in [Variant::Derived1, Variant::Derived2] {
                    let spec = r.with_variant(variant);
                    if expected_outer_dim(&spec).is_none() {
                        continue;
                    }
                    let start = Instant::now();
                    let report = self.der_report(&spec);
                    // report the derived subalgebra dimension of the outer algebra
                    let derived_dim = outer_derived_dim(&report);
                    self.push(
                        "outer-character",
                        format!("Der_out({}) structure", spec.display()),
                        None,
                        format!(
                            "abelian = {}, outer dim {}, [outer,outer] rank {}",
                            report.abelian, report.outer, derived_dim
                        ),
                        start,
                    );
                }
            }
        }
    }

    pub fn run(&mut self, only: Option<&str>) -> &[CheckResult] {
        let groups: Vec<(&str, fn(&mut Suite))> = vec![
            ("construction", Suite::group_construction),
            ("heights", Suite::group_heights),
            ("outer-dims", Suite::group_outer_dims),
            ("exceptional", Suite::group_exceptional),
            ("normalizers", Suite::group_normalizers),
            ("decompositions", Suite::group_decompositions),
            ("simplicity", Suite::group_simplicity),
            ("solver-consistency", Suite::group_solver_consistency),
            ("restrictedness", Suite::group_restrictedness),
            ("outer-character", Suite::group_outer_character),
        ];
        for (name, f) in groups {
            if let Some(filter) = only {
                if name != filter {
                    continue;
                }
            }
            f(self);
        }
        &self.results
    }

    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.passed != Some(false))
    }
}

/// Rank of the span of the outer bracket values in outer coordinates: the
/// dimension of [G, G] for the outer algebra G.
fn outer_derived_dim(report: &DerReport) -> usize {
    use crate::field::Echelon;
    let f = crate::field::FieldCtx::new(report.spec.p).expect("field");
    let mut ech = Echelon::new(f);
    for (_, _, coords) in &report.outer_brackets {
        let row: Vec<(u32, u64)> = coords.iter().map(|&(r, c)| (r as u32, c)).collect();
        let mut row = row;
        row.sort_unstable_by_key(|t| t.0);
        ech.insert(&row);
    }
    ech.dim()
}

/// Line-by-line text output plus a machine-readable JSON summary.
pub fn render_results(results: &[CheckResult]) -> String {
    let mut out = String::new();
    for r in results {
        out.push_str(&r.line());
        out.push('\n');
    }
    let passed = results.iter().filter(|r| r.passed == Some(true)).count();
    let failed = results.iter().filter(|r| r.passed == Some(false)).count();
    let info = results.iter().filter(|r| r.passed.is_none()).count();
    out.push_str(&format!(
        "{} checks: {} passed, {} failed, {} reported\n",
        results.len(),
        passed,
        failed,
        info
    ));
    out
}

/// A fixed-order CSV table for the heights / outer-dims / normalizers
/// commands: family,variant,m,n,p,t,lambda,computed,expected,match.
pub fn csv_line(
    spec: &AlgebraSpec,
    computed: impl std::fmt::Display,
    expected: impl std::fmt::Display,
    matched: Option<bool>,
) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{}\n",
        spec.family.name(),
        spec.variant.name(),
        spec.m,
        spec.n,
        spec.p,
        spec.t
            .iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(";"),
        spec.lambda.map(|l| l.to_string()).unwrap_or_default(),
        computed,
        expected,
        matched.map(|b| b.to_string()).unwrap_or_else(|| "reported".into()),
    )
}

pub const CSV_HEADER: &str = "family,variant,m,n,p,t,lambda,computed,expected,match\n";
