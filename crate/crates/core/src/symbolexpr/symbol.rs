use num_complex::Complex64;

use super::{Bound, Expr};
use crate::error::{validation, Result};
use crate::indexcore::{decompose, Partition, ShiftMode, ShiftVector};

/// Declarative symbol. Block indices are 0-based; block-local shifts have
/// length `k_j`, the phase monomial shift has length `n`.
#[derive(Clone, Debug, PartialEq)]
pub enum SymbolSpec {
    /// `a(r_1, …, r_ℓ)` with `r_j = |z_(j)|`.
    QuasiRadial { a: Expr },
    /// `b_j(s_(j)) t_(j)^{p_(j)}`
    MultiSphere { block: usize, b: Expr, p: Vec<i64> },
    /// `b_j(σ_(j)) t_(j)^{p_j}` with σ the global direction.
    SingleSphere { block: usize, b: Expr, p: Vec<i64> },
    /// `b_j(r, s_(j)) t_(j)^{p_(j)}`
    Extended { block: usize, b: Expr, p: Vec<i64> },
    /// `t^p` with `|p| = 0`.
    Phase { p: Vec<i64> },
    Product(Vec<SymbolSpec>),
}

impl SymbolSpec {
    pub fn unit() -> Self {
        SymbolSpec::QuasiRadial { a: Expr::one() }
    }

    /// Non-product leaves in order.
    pub fn leaves(&self) -> Vec<&SymbolSpec> {
        let mut out = Vec::new();
        fn walk<'a>(s: &'a SymbolSpec, out: &mut Vec<&'a SymbolSpec>) {
            match s {
                SymbolSpec::Product(fs) => fs.iter().for_each(|f| walk(f, out)),
                leaf => out.push(leaf),
            }
        }
        walk(self, &mut out);
        out
    }

    pub fn block(&self) -> Option<usize> {
        match self {
            SymbolSpec::MultiSphere { block, .. }
            | SymbolSpec::SingleSphere { block, .. }
            | SymbolSpec::Extended { block, .. } => Some(*block),
            _ => None,
        }
    }

    pub fn expr(&self) -> Option<&Expr> {
        match self {
            SymbolSpec::QuasiRadial { a } => Some(a),
            SymbolSpec::MultiSphere { b, .. }
            | SymbolSpec::SingleSphere { b, .. }
            | SymbolSpec::Extended { b, .. } => Some(b),
            _ => None,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            SymbolSpec::QuasiRadial { .. } => "quasi-radial",
            SymbolSpec::MultiSphere { .. } => "multi-sphere",
            SymbolSpec::SingleSphere { .. } => "single-sphere",
            SymbolSpec::Extended { .. } => "extended",
            SymbolSpec::Phase { .. } => "phase",
            SymbolSpec::Product(_) => "product",
        }
    }

    /// Variable names a leaf may reference, in slot order.
    pub fn local_names(&self, k: &Partition) -> Vec<String> {
        let radii = || (1..=k.len()).map(|i| format!("r{i}"));
        match self {
            SymbolSpec::QuasiRadial { .. } => radii().collect(),
            SymbolSpec::MultiSphere { block, .. } => (1..=k.part(*block)).map(|l| format!("s{l}")).collect(),
            SymbolSpec::SingleSphere { block, .. } => (1..=k.part(*block)).map(|l| format!("sig{l}")).collect(),
            SymbolSpec::Extended { block, .. } => {
                radii().chain((1..=k.part(*block)).map(|l| format!("s{l}"))).collect()
            }
            SymbolSpec::Phase { .. } | SymbolSpec::Product(_) => Vec::new(),
        }
    }

    /// Checks block indices, shift lengths and sums, variable names and the
    /// one-angular-factor-per-block rule.
    pub fn validate(&self, k: &Partition) -> Result<()> {
        let leaves = self.leaves();
        let mut radial = 0;
        let mut per_block = vec![0usize; k.len()];
        for leaf in &leaves {
            match leaf {
                SymbolSpec::QuasiRadial { .. } => radial += 1,
                SymbolSpec::Phase { p } => {
                    ShiftVector::new(p.clone(), ShiftMode::TotalZero, k)?;
                }
                SymbolSpec::MultiSphere { block, p, .. }
                | SymbolSpec::SingleSphere { block, p, .. }
                | SymbolSpec::Extended { block, p, .. } => {
                    if *block >= k.len() {
                        return Err(validation(format!(
                            "{} factor refers to block {} but the partition has {} blocks",
                            leaf.kind_name(),
                            block + 1,
                            k.len()
                        )));
                    }
                    if p.len() != k.part(*block) {
                        return Err(validation(format!(
                            "{} factor on block {} has a shift of length {}, expected k_j = {}",
                            leaf.kind_name(),
                            block + 1,
                            p.len(),
                            k.part(*block)
                        )));
                    }
                    let s: i64 = p.iter().sum();
                    if s != 0 {
                        return Err(validation(format!(
                            "{} factor on block {} violates |p_(j)| = 0 (sum is {s})",
                            leaf.kind_name(),
                            block + 1
                        )));
                    }
                    per_block[*block] += 1;
                }
                SymbolSpec::Product(_) => unreachable!(),
            }
            if let Some(e) = leaf.expr() {
                let allowed = leaf.local_names(k);
                if let Some(bad) = e.variables().into_iter().find(|v| !allowed.iter().any(|a| a == v)) {
                    return Err(validation(format!(
                        "{} factor uses variable `{bad}`; allowed: {}",
                        leaf.kind_name(),
                        allowed.join(", ")
                    )));
                }
            }
        }
        if radial > 1 {
            return Err(validation("a product may contain at most one quasi-radial factor"));
        }
        if let Some(j) = per_block.iter().position(|&c| c > 1) {
            return Err(validation(format!("a product may contain at most one angular factor on block {}", j + 1)));
        }
        Ok(())
    }

    /// Accumulated shift `p ∈ ℤⁿ`.
    pub fn shift(&self, k: &Partition) -> Vec<i64> {
        let mut p = vec![0i64; k.n()];
        for leaf in self.leaves() {
            match leaf {
                SymbolSpec::Phase { p: q } => p.iter_mut().zip(q).for_each(|(a, b)| *a += b),
                SymbolSpec::MultiSphere { block, p: q, .. }
                | SymbolSpec::SingleSphere { block, p: q, .. }
                | SymbolSpec::Extended { block, p: q, .. } => {
                    for (u, b) in k.block(*block).zip(q) {
                        p[u] += b;
                    }
                }
                _ => {}
            }
        }
        p
    }

    pub fn shift_vector(&self, k: &Partition) -> Result<ShiftVector> {
        ShiftVector::classify(self.shift(k), k)
    }

    /// Complex conjugate: all expressions are real, so only the shifts flip.
    pub fn conj(&self) -> SymbolSpec {
        let neg = |p: &Vec<i64>| p.iter().map(|x| -x).collect();
        match self {
            SymbolSpec::QuasiRadial { a } => SymbolSpec::QuasiRadial { a: a.clone() },
            SymbolSpec::MultiSphere { block, b, p } => SymbolSpec::MultiSphere { block: *block, b: b.clone(), p: neg(p) },
            SymbolSpec::SingleSphere { block, b, p } => {
                SymbolSpec::SingleSphere { block: *block, b: b.clone(), p: neg(p) }
            }
            SymbolSpec::Extended { block, b, p } => SymbolSpec::Extended { block: *block, b: b.clone(), p: neg(p) },
            SymbolSpec::Phase { p } => SymbolSpec::Phase { p: neg(p) },
            SymbolSpec::Product(fs) => SymbolSpec::Product(fs.iter().map(SymbolSpec::conj).collect()),
        }
    }

    pub fn may_be_unbounded(&self) -> bool {
        self.leaves().iter().filter_map(|l| l.expr()).any(Expr::may_be_unbounded)
    }

    pub fn compile(&self, k: &Partition) -> Result<CompiledSymbol> {
        self.validate(k)?;
        let (ell, n) = (k.len(), k.n());
        let mut factors = Vec::new();
        for leaf in self.leaves() {
            let Some(e) = leaf.expr() else { continue };
            if e.is_constant_one() {
                continue;
            }
            let names = leaf.local_names(k);
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            let bound = e.bind(&refs)?;
            let map: Vec<usize> = match leaf {
                SymbolSpec::QuasiRadial { .. } => (0..ell).collect(),
                SymbolSpec::MultiSphere { block, .. } => k.block(*block).map(|u| ell + u).collect(),
                SymbolSpec::SingleSphere { block, .. } => k.block(*block).map(|u| ell + n + u).collect(),
                SymbolSpec::Extended { block, .. } => (0..ell).chain(k.block(*block).map(|u| ell + u)).collect(),
                _ => unreachable!(),
            };
            factors.push(bound.remap(&map));
        }
        let shift = self.shift(k).into_iter().map(|p| p as i32).collect();
        Ok(CompiledSymbol { k: k.clone(), factors, shift })
    }
}

/// Symbol ready for repeated pointwise evaluation.
///
/// Factors read a shared point vector `[r_1..r_ℓ | s (block-concatenated) | σ]`.
#[derive(Clone, Debug)]
pub struct CompiledSymbol {
    k: Partition,
    factors: Vec<Bound>,
    shift: Vec<i32>,
}

impl CompiledSymbol {
    pub fn partition(&self) -> &Partition {
        &self.k
    }

    pub fn eval(&self, z: &[Complex64]) -> Result<Complex64> {
        let d = decompose(z, &self.k);
        let mut point = Vec::new();
        self.fill_point(&d.sigma, &d.r, &d.s.concat(), &mut point);
        self.finish(&point, &d.t)
    }

    /// Evaluates from moduli `ρ_u = |z_u|` and unit phases `t_u`.
    pub fn eval_polar(&self, rho: &[f64], t: &[Complex64], point: &mut Vec<f64>) -> Result<Complex64> {
        let k = &self.k;
        let (ell, n) = (k.len(), k.n());
        point.clear();
        point.resize(ell + 2 * n, 0.0);
        let mut total = 0.0_f64;
        for j in 0..ell {
            let block = &rho[k.block(j)];
            let rj = block.iter().fold(0.0_f64, |acc, &x| acc.hypot(x));
            total = total.hypot(rj);
            point[j] = rj;
            for (l, &x) in block.iter().enumerate() {
                point[ell + k.offsets()[j] + l] =
                    if rj > 0.0 { x / rj } else { 1.0 / (k.part(j) as f64).sqrt() };
            }
        }
        for u in 0..n {
            point[ell + n + u] = if total > 0.0 { rho[u] / total } else { 1.0 / (n as f64).sqrt() };
        }
        self.finish(point, t)
    }

    fn fill_point(&self, sigma: &[f64], r: &[f64], s: &[f64], point: &mut Vec<f64>) {
        point.clear();
        point.extend_from_slice(r);
        point.extend_from_slice(s);
        point.extend_from_slice(sigma);
    }

    fn finish(&self, point: &[f64], t: &[Complex64]) -> Result<Complex64> {
        let mut re = 1.0;
        for f in &self.factors {
            re *= f.eval(point)?;
        }
        let mut phase = Complex64::new(1.0, 0.0);
        for (&p, &tu) in self.shift.iter().zip(t) {
            if p != 0 {
                phase *= tu.powi(p);
            }
        }
        Ok(phase * re)
    }
}

/// Pointwise value `a(r) Π b_j(·) t^p` at `z`.
pub fn evaluate_symbol(psi: &SymbolSpec, z: &[Complex64], k: &Partition) -> Result<Complex64> {
    psi.compile(k)?.eval(z)
}
