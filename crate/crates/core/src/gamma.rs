//! Coefficients `γ(α)` in `T_ψ z^α = γ(α) z^{α+p}` for every covered symbol class.
//!
//! All formulas are reduced to the kernels in [`crate::quad`]. Integration
//! variables inside the theorems are squared quantities (`r_j²`, `s_{j,l}²`,
//! `σ_u²`); the expressions are always evaluated at their square roots.

use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, validation, Error, Result};
use crate::indexcore::{enumerate_basis, MultiIndex, Partition, ShiftVector, Space};
use crate::quad::{self, mc, radial_integrate_projective, simplex_integrate, Method, QuadratureSpec};
use crate::special::gamma_ratio;
use crate::symbolexpr::{Bound, Expr, SymbolSpec};

/// Which closed form produced a table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Theorem {
    QuasiRadial,
    MultiSphere,
    SingleSphere,
    Extended,
    ExtendedBall,
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Theorem::QuasiRadial => "quasi-radial",
            Theorem::MultiSphere => "multi-sphere",
            Theorem::SingleSphere => "single-sphere",
            Theorem::Extended => "extended",
            Theorem::ExtendedBall => "extended-ball",
        })
    }
}

/// `γ` over a basis, in basis order. `None` marks a hard zero (`α + p` outside the basis).
#[derive(Clone, Debug)]
pub struct GammaTable {
    pub n: usize,
    pub k: Partition,
    pub space: Space,
    pub shift: ShiftVector,
    pub theorem: Theorem,
    pub entries: Vec<(MultiIndex, Option<Complex64>)>,
}

impl GammaTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, alpha: &MultiIndex) -> Option<Complex64> {
        self.entries.iter().find(|(a, _)| a == alpha).and_then(|(_, v)| *v)
    }

    pub fn values(&self) -> impl Iterator<Item = Option<Complex64>> + '_ {
        self.entries.iter().map(|(_, v)| *v)
    }
}

/// Gamma arguments of `Π (α_l + p_l)!`.
fn shifted_fact_args(alpha: &[u32], p: &[i64]) -> Vec<f64> {
    alpha.iter().zip(p).map(|(&a, &q)| f64::from(a) + q as f64 + 1.0).collect()
}

fn shifted_ok(alpha: &[u32], p: &[i64]) -> bool {
    alpha.iter().zip(p).all(|(&a, &q)| i64::from(a) + q >= 0)
}

fn check_degree(alpha: &MultiIndex, m: u32) -> Result<()> {
    if alpha.degree() > m {
        return Err(domain(format!("|α| = {} exceeds weight m = {m}", alpha.degree())));
    }
    Ok(())
}

fn bind_leaf(leaf: &SymbolSpec, k: &Partition) -> Result<Bound> {
    let names = leaf.local_names(k);
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    Ok(leaf.expr().expect("leaf with expression").bind(&refs)?)
}

/// Angular part of one block.
#[derive(Clone, Debug)]
enum BlockTerm {
    /// `b ≡ 1`
    None,
    /// `b(s_(j))`
    Sphere(Bound),
    /// `b(r, s_(j))`, slots `[r_1..r_ℓ, s_1..s_{k_j}]`
    Coupled(Bound),
    /// `b(σ_(j))` rewritten as `σ_(j) = r_j s_(j) / |r|`
    Single(Bound),
}

impl BlockTerm {
    fn depends_on_radii(&self) -> bool {
        matches!(self, BlockTerm::Coupled(_) | BlockTerm::Single(_))
    }
}

/// Product symbol split into a radial part, one term per block and the total shift.
#[derive(Clone, Debug)]
struct Prepared {
    k: Partition,
    radial: Option<Bound>,
    blocks: Vec<BlockTerm>,
    p: Vec<i64>,
}

impl Prepared {
    fn new(psi: &SymbolSpec, k: &Partition) -> Result<Self> {
        psi.validate(k)?;
        let mut radial = None;
        let mut blocks = vec![BlockTerm::None; k.len()];
        for leaf in psi.leaves() {
            match leaf {
                SymbolSpec::QuasiRadial { .. } => radial = Some(bind_leaf(leaf, k)?),
                SymbolSpec::MultiSphere { block, .. } => blocks[*block] = BlockTerm::Sphere(bind_leaf(leaf, k)?),
                SymbolSpec::Extended { block, .. } => blocks[*block] = BlockTerm::Coupled(bind_leaf(leaf, k)?),
                SymbolSpec::SingleSphere { block, .. } => blocks[*block] = BlockTerm::Single(bind_leaf(leaf, k)?),
                SymbolSpec::Phase { .. } => {}
                SymbolSpec::Product(_) => unreachable!(),
            }
        }
        Ok(Self { k: k.clone(), radial, blocks, p: psi.shift(k) })
    }

    fn any_coupled(&self) -> bool {
        self.blocks.iter().any(BlockTerm::depends_on_radii)
    }
}

/// `∫_{Δ_{k_j−1}} b(√·) Π_{l<k_j} S_l^{α_l+p_l/2} (1 − ΣS)^{α_{k_j}+p_{k_j}/2} dS`,
/// with `radii = (r_1, …, r_ℓ)` for radius-dependent terms.
fn block_integral(
    term: &BlockTerm,
    alpha: &[u32],
    p: &[i64],
    radii: &[f64],
    spec: &QuadratureSpec,
) -> Result<f64> {
    let kj = alpha.len();
    let ex: Vec<f64> = alpha.iter().zip(p).map(|(&a, &q)| f64::from(a) + q as f64 / 2.0).collect();
    let (a, a0) = (&ex[..kj - 1], ex[kj - 1]);
    let directions = |s: &[f64]| -> Vec<f64> {
        let mut out: Vec<f64> = s.iter().map(|x| x.sqrt()).collect();
        out.push((1.0 - s.iter().sum::<f64>()).max(0.0).sqrt());
        out
    };
    match term {
        BlockTerm::None => Ok(crate::special::dirichlet(a, a0)),
        BlockTerm::Sphere(b) => simplex_integrate(|s| Ok(b.eval(&directions(s))?), a, a0, spec),
        BlockTerm::Coupled(b) => simplex_integrate(
            |s| {
                let mut slots = radii.to_vec();
                slots.extend(directions(s));
                Ok(b.eval(&slots)?)
            },
            a,
            a0,
            spec,
        ),
        BlockTerm::Single(_) => unreachable!("single-sphere terms need the block index"),
    }
}

fn single_block_integral(
    b: &Bound,
    j: usize,
    alpha: &[u32],
    p: &[i64],
    radii: &[f64],
    spec: &QuadratureSpec,
) -> Result<f64> {
    let norm = radii.iter().fold(0.0_f64, |acc, &x| acc.hypot(x));
    let scale = if norm > 0.0 { radii[j] / norm } else { 1.0 / (radii.len() as f64).sqrt() };
    let kj = alpha.len();
    let ex: Vec<f64> = alpha.iter().zip(p).map(|(&a, &q)| f64::from(a) + q as f64 / 2.0).collect();
    simplex_integrate(
        |s| {
            let mut sig: Vec<f64> = s.iter().map(|x| scale * x.sqrt()).collect();
            sig.push(scale * (1.0 - s.iter().sum::<f64>()).max(0.0).sqrt());
            Ok(b.eval(&sig)?)
        },
        &ex[..kj - 1],
        ex[kj - 1],
        spec,
    )
}

fn block_value(
    prep: &Prepared,
    j: usize,
    alpha: &MultiIndex,
    radii: &[f64],
    spec: &QuadratureSpec,
) -> Result<f64> {
    let range = prep.k.block(j);
    let (aj, pj) = (&alpha.entries()[range.clone()], &prep.p[range]);
    match &prep.blocks[j] {
        BlockTerm::Single(b) => single_block_integral(b, j, aj, pj, radii, spec),
        term => block_integral(term, aj, pj, radii, spec),
    }
}

/// Quasi-radial theorem: `T_a z^α = γ(α) z^α`.
pub fn gamma_quasi_radial(a: &Expr, k: &Partition, m: u32, alpha: &MultiIndex, spec: &QuadratureSpec) -> Result<f64> {
    check_degree(alpha, m)?;
    let leaf = SymbolSpec::QuasiRadial { a: a.clone() };
    leaf.validate(k)?;
    let bound = bind_leaf(&leaf, k)?;
    radial_factor(Some(&bound), k, m, alpha, &vec![0; k.n()], spec)
}

/// `(n+m)!/((m−|α|)! Π Γ(e_j+1)) ∫ a(√r) Π r^{e_j} (1+Σr)^{−(n+m+1)} dr`, with
/// `e_j = |α_(j)| + |p_(j)|/2 + k_j − 1`. Exactly 1 when `a` is absent.
fn radial_factor(
    a: Option<&Bound>,
    k: &Partition,
    m: u32,
    alpha: &MultiIndex,
    p: &[i64],
    spec: &QuadratureSpec,
) -> Result<f64> {
    let Some(a) = a else { return Ok(1.0) };
    let n = k.n();
    let e: Vec<f64> = (0..k.len())
        .map(|j| {
            let r = k.block(j);
            let da: u32 = alpha.entries()[r.clone()].iter().sum();
            let dp: i64 = p[r].iter().sum();
            f64::from(da) + dp as f64 / 2.0 + (k.part(j) - 1) as f64
        })
        .collect();
    let mut den: Vec<f64> = e.iter().map(|&x| x + 1.0).collect();
    den.push(f64::from(m - alpha.degree()) + 1.0);
    let pre = gamma_ratio(&[(n as u32 + m + 1) as f64], &den);
    let integral = radial_integrate_projective(|rho| Ok(a.eval(rho)?), &e, f64::from(n as u32 + m + 1), spec)?;
    Ok(pre * integral)
}

/// Per-block factor `Γ(e_j+1)/Π(α+p)! · ∫_{Δ_{k_j−1}} …` of the multi-sphere theorem.
fn multisphere_block(prep: &Prepared, j: usize, alpha: &MultiIndex, spec: &QuadratureSpec) -> Result<f64> {
    let range = prep.k.block(j);
    let (aj, pj) = (&alpha.entries()[range.clone()], &prep.p[range]);
    if let BlockTerm::None = prep.blocks[j] {
        // closed form Π Γ(α_l + p_l/2 + 1) / Γ(α_l + p_l + 1)
        let v: f64 = aj
            .iter()
            .zip(pj)
            .map(|(&a, &q)| {
                let a = f64::from(a);
                let q = q as f64;
                gamma_ratio(&[a + q / 2.0 + 1.0], &[a + q + 1.0])
            })
            .product();
        return Ok(v);
    }
    let e: f64 = aj.iter().map(|&a| f64::from(a)).sum::<f64>()
        + pj.iter().sum::<i64>() as f64 / 2.0
        + (aj.len() - 1) as f64;
    let pre = gamma_ratio(&[e + 1.0], &shifted_fact_args(aj, pj));
    Ok(pre * block_value(prep, j, alpha, &[], spec)?)
}

fn multisphere_prepared(prep: &Prepared, m: u32, alpha: &MultiIndex, spec: &QuadratureSpec) -> Result<Option<f64>> {
    check_degree(alpha, m)?;
    if !shifted_ok(alpha.entries(), &prep.p) {
        return Ok(None);
    }
    let mut v = radial_factor(prep.radial.as_ref(), &prep.k, m, alpha, &prep.p, spec)?;
    for j in 0..prep.k.len() {
        v *= multisphere_block(prep, j, alpha, spec)?;
    }
    Ok(Some(v))
}

fn require_multisphere(psi: &SymbolSpec) -> Result<()> {
    for leaf in psi.leaves() {
        if !matches!(leaf, SymbolSpec::QuasiRadial { .. } | SymbolSpec::MultiSphere { .. } | SymbolSpec::Phase { .. }) {
            return Err(validation(format!(
                "the multi-sphere theorem does not cover {} factors",
                leaf.kind_name()
            )));
        }
    }
    Ok(())
}

/// Multi-sphere theorem for `a Π b_j(s_(j)) t^p`. `Ok(None)` is a hard zero.
pub fn gamma_multisphere(
    psi: &SymbolSpec,
    k: &Partition,
    m: u32,
    alpha: &MultiIndex,
    spec: &QuadratureSpec,
) -> Result<Option<f64>> {
    require_multisphere(psi)?;
    let prep = Prepared::new(psi, k)?;
    multisphere_prepared(&prep, m, alpha, spec)
}

/// The weight-free factor `γ_{b_j,k,p_(j)}(α)`; `p_j` is block-local.
pub fn gamma_multisphere_factor(
    b: &Expr,
    k: &Partition,
    j: usize,
    p_j: &[i64],
    alpha: &MultiIndex,
    spec: &QuadratureSpec,
) -> Result<Option<f64>> {
    let leaf = SymbolSpec::MultiSphere { block: j, b: b.clone(), p: p_j.to_vec() };
    let prep = Prepared::new(&leaf, k)?;
    if !shifted_ok(alpha.entries(), &prep.p) {
        return Ok(None);
    }
    multisphere_block(&prep, j, alpha, spec).map(Some)
}

/// Single-sphere theorem for `b_j(σ_(j)) t_(j)^{p_j}`, valid for `k_j < n`.
pub fn gamma_single_sphere(
    b: &Expr,
    k: &Partition,
    j: usize,
    p_j: &[i64],
    alpha: &MultiIndex,
    spec: &QuadratureSpec,
) -> Result<Option<f64>> {
    let leaf = SymbolSpec::SingleSphere { block: j, b: b.clone(), p: p_j.to_vec() };
    leaf.validate(k)?;
    let n = k.n();
    let kj = k.part(j);
    if kj == n {
        return Err(Error::Unsupported(
            "single-sphere factor with k_j = n; use the multi-sphere form with k = (n)".into(),
        ));
    }
    let range = k.block(j);
    let aj = &alpha.entries()[range];
    if !shifted_ok(aj, p_j) {
        return Ok(None);
    }
    let bound = bind_leaf(&leaf, k)?;
    let deg = alpha.degree();
    let deg_j: u32 = aj.iter().sum();
    let c = f64::from(deg - deg_j) + (n - kj - 1) as f64;
    let ex: Vec<f64> = aj.iter().zip(p_j).map(|(&a, &q)| f64::from(a) + q as f64 / 2.0).collect();
    let mut den = shifted_fact_args(aj, p_j);
    den.push(c + 1.0);
    let pre = gamma_ratio(&[f64::from(deg) + n as f64], &den);
    let integral = simplex_integrate(
        |s| {
            let sig: Vec<f64> = s.iter().map(|x| x.sqrt()).collect();
            Ok(bound.eval(&sig)?)
        },
        &ex,
        c,
        spec,
    )?;
    Ok(Some(pre * integral))
}

/// Radial-node integrand `a(r) Π_j I_j(r)` of the extended theorems.
fn coupled_integrand(prep: &Prepared, alpha: &MultiIndex, fixed: &[Option<f64>], radii: &[f64], spec: &QuadratureSpec) -> Result<f64> {
    let mut v = match &prep.radial {
        Some(a) => a.eval(radii)?,
        None => 1.0,
    };
    for (j, f) in fixed.iter().enumerate() {
        v *= match *f {
            Some(c) => c,
            None => block_value(prep, j, alpha, radii, spec)?,
        };
    }
    Ok(v)
}

/// Exponents `e_j = |α_(j)| + |p_(j)|/2 + k_j − 1`.
fn radial_exponents(k: &Partition, alpha: &MultiIndex, p: &[i64]) -> Vec<f64> {
    (0..k.len())
        .map(|j| {
            let r = k.block(j);
            let da: u32 = alpha.entries()[r.clone()].iter().sum();
            let dp: i64 = p[r].iter().sum();
            f64::from(da) + dp as f64 / 2.0 + (k.part(j) - 1) as f64
        })
        .collect()
}

/// Outer integral over `u ∈ Δ_ℓ` with weight `Π u^{e} u0^{a0}`; `to_radii`
/// maps `u` to `(r_1, …, r_ℓ)`.
fn coupled_integral(
    prep: &Prepared,
    alpha: &MultiIndex,
    e: &[f64],
    a0: f64,
    to_radii: impl Fn(&[f64]) -> Vec<f64> + Sync,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let dim = prep.k.len() + prep.k.parts().iter().map(|k| k - 1).sum::<usize>();
    if spec.method == Method::GaussJacobiTensor && dim > quad::MAX_GAUSS_DIM {
        return Err(Error::Unsupported(format!(
            "coupled cubature dimension {dim} exceeds {}; use monte-carlo",
            quad::MAX_GAUSS_DIM
        )));
    }
    if spec.method == Method::MonteCarlo {
        return coupled_integral_mc(prep, alpha, e, a0, to_radii, spec);
    }
    // radius-free blocks are constants of the outer integral
    let fixed: Vec<Option<f64>> = (0..prep.k.len())
        .map(|j| {
            if prep.blocks[j].depends_on_radii() {
                Ok(None)
            } else {
                block_value(prep, j, alpha, &[], spec).map(Some)
            }
        })
        .collect::<Result<_>>()?;
    if prep.radial.is_none() && !prep.any_coupled() {
        let outer = crate::special::dirichlet(e, a0);
        return Ok(outer * fixed.iter().map(|c| c.unwrap_or(1.0)).product::<f64>());
    }
    simplex_integrate(|u| coupled_integrand(prep, alpha, &fixed, &to_radii(u), spec), e, a0, spec)
}

/// Joint sampling of the outer simplex and every block simplex.
fn coupled_integral_mc(
    prep: &Prepared,
    alpha: &MultiIndex,
    e: &[f64],
    a0: f64,
    to_radii: impl Fn(&[f64]) -> Vec<f64> + Sync,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let k = &prep.k;
    let mut parts = vec![(e.to_vec(), a0)];
    for j in 0..k.len() {
        let range = k.block(j);
        let ex: Vec<f64> = alpha.entries()[range.clone()]
            .iter()
            .zip(&prep.p[range])
            .map(|(&a, &q)| f64::from(a) + q as f64 / 2.0)
            .collect();
        let kj = ex.len();
        parts.push((ex[..kj - 1].to_vec(), ex[kj - 1]));
    }
    let dom = mc::Domain::SimplexProduct { parts };
    let ell = k.len();
    let est = mc::mc_integrate_real(
        &|x: &[f64]| {
            let radii = to_radii(&x[..ell]);
            let mut v = match &prep.radial {
                Some(a) => a.eval(&radii)?,
                None => 1.0,
            };
            let mut off = ell;
            for j in 0..ell {
                let kj = k.part(j);
                let s = &x[off..off + kj - 1];
                off += kj - 1;
                let mut dirs: Vec<f64> = s.iter().map(|t| t.sqrt()).collect();
                dirs.push((1.0 - s.iter().sum::<f64>()).max(0.0).sqrt());
                v *= match &prep.blocks[j] {
                    BlockTerm::None => 1.0,
                    BlockTerm::Sphere(b) => b.eval(&dirs)?,
                    BlockTerm::Coupled(b) => {
                        let mut slots = radii.clone();
                        slots.extend(dirs);
                        b.eval(&slots)?
                    }
                    BlockTerm::Single(b) => {
                        let norm = radii.iter().fold(0.0_f64, |acc, &r| acc.hypot(r));
                        let scale = if norm > 0.0 { radii[j] / norm } else { 1.0 / (ell as f64).sqrt() };
                        let sig: Vec<f64> = dirs.iter().map(|d| d * scale).collect();
                        b.eval(&sig)?
                    }
                };
            }
            Ok(v)
        },
        &dom,
        spec.order,
        spec.seed,
    )?;
    Ok(est.value)
}

fn extended_prepared(prep: &Prepared, m: u32, alpha: &MultiIndex, spec: &QuadratureSpec) -> Result<Option<f64>> {
    check_degree(alpha, m)?;
    if !shifted_ok(alpha.entries(), &prep.p) {
        return Ok(None);
    }
    let k = &prep.k;
    let n = k.n();
    let e = radial_exponents(k, alpha, &prep.p);
    let big_n = (n as u32 + m + 1) as f64;
    let a0 = big_n - k.len() as f64 - 1.0 - e.iter().sum::<f64>();
    let mut den = shifted_fact_args(alpha.entries(), &prep.p);
    den.push(f64::from(m - alpha.degree()) + 1.0);
    let pre = gamma_ratio(&[big_n], &den);
    let integral = coupled_integral(
        prep,
        alpha,
        &e,
        a0,
        |u| {
            let u0 = 1.0 - u.iter().sum::<f64>();
            u.iter().map(|&x| (x / u0).sqrt()).collect()
        },
        spec,
    )?;
    Ok(Some(pre * integral))
}

fn require_extended(psi: &SymbolSpec) -> Result<()> {
    let leaves = psi.leaves();
    let single = leaves.iter().any(|l| matches!(l, SymbolSpec::SingleSphere { .. }));
    let extended = leaves.iter().any(|l| matches!(l, SymbolSpec::Extended { .. }));
    if single && extended {
        return Err(validation(
            "single-sphere and extended factors cannot be combined in one product; no theorem covers the mix",
        ));
    }
    Ok(())
}

/// Extended theorem on `ℙⁿ(ℂ)` for `a Π b_j(r, s_(j)) t^p`.
///
/// Single-sphere factors in a product are rewritten through
/// `σ_(j) = r_j s_(j) / |r|`.
pub fn gamma_extended_projective(
    psi: &SymbolSpec,
    k: &Partition,
    m: u32,
    alpha: &MultiIndex,
    spec: &QuadratureSpec,
) -> Result<Option<f64>> {
    require_extended(psi)?;
    let prep = Prepared::new(psi, k)?;
    extended_prepared(&prep, m, alpha, spec)
}

fn ball_prepared(prep: &Prepared, lambda: f64, alpha: &MultiIndex, spec: &QuadratureSpec) -> Result<Option<f64>> {
    if lambda.is_nan() || lambda <= -1.0 {
        return Err(domain(format!("ball weight λ = {lambda} must exceed -1")));
    }
    if !shifted_ok(alpha.entries(), &prep.p) {
        return Ok(None);
    }
    let k = &prep.k;
    let n = k.n() as f64;
    let e = radial_exponents(k, alpha, &prep.p);
    let mut den = shifted_fact_args(alpha.entries(), &prep.p);
    den.push(lambda + 1.0);
    let pre = gamma_ratio(&[n + f64::from(alpha.degree()) + lambda + 1.0], &den);
    let integral = coupled_integral(prep, alpha, &e, lambda, |u| u.iter().map(|x| x.sqrt()).collect(), spec)?;
    Ok(Some(pre * integral))
}

/// Extended theorem on the weighted ball space `A²_λ(𝔹ⁿ)`.
pub fn gamma_extended_ball(
    psi: &SymbolSpec,
    k: &Partition,
    lambda: f64,
    alpha: &MultiIndex,
    spec: &QuadratureSpec,
) -> Result<Option<f64>> {
    require_extended(psi)?;
    let prep = Prepared::new(psi, k)?;
    ball_prepared(&prep, lambda, alpha, spec)
}

/// Chooses the theorem that covers `psi` on `space`.
pub fn route(psi: &SymbolSpec, space: &Space) -> Result<Theorem> {
    require_extended(psi)?;
    if let Space::Ball { .. } = space {
        return Ok(Theorem::ExtendedBall);
    }
    let leaves = psi.leaves();
    let count = |f: fn(&SymbolSpec) -> bool| leaves.iter().filter(|l| f(l)).count();
    let single = count(|l| matches!(l, SymbolSpec::SingleSphere { .. }));
    let extended = count(|l| matches!(l, SymbolSpec::Extended { .. }));
    let multi = count(|l| matches!(l, SymbolSpec::MultiSphere { .. }));
    let phase = count(|l| matches!(l, SymbolSpec::Phase { .. }));
    if extended > 0 {
        return Ok(Theorem::Extended);
    }
    if single > 0 {
        return Ok(if single == 1 && leaves.len() == 1 { Theorem::SingleSphere } else { Theorem::Extended });
    }
    Ok(if multi == 0 && phase == 0 { Theorem::QuasiRadial } else { Theorem::MultiSphere })
}

/// γ for every basis element of `space`, in basis order.
pub fn build_gamma_table(psi: &SymbolSpec, space: &Space, k: &Partition, spec: &QuadratureSpec) -> Result<GammaTable> {
    spec.validate()?;
    let theorem = route(psi, space)?;
    let prep = Prepared::new(psi, k)?;
    let shift = ShiftVector::classify(prep.p.clone(), k)?;
    let basis = enumerate_basis(k.n(), space.degree_cap());
    let single = match (theorem, psi.leaves()[0]) {
        (Theorem::SingleSphere, SymbolSpec::SingleSphere { block, b, p }) => Some((*block, b.clone(), p.clone())),
        _ => None,
    };
    let eval = |alpha: &MultiIndex| -> Result<Option<f64>> {
        match (theorem, space) {
            (Theorem::QuasiRadial | Theorem::MultiSphere, Space::Projective { m }) => {
                multisphere_prepared(&prep, *m, alpha, spec)
            }
            (Theorem::SingleSphere, Space::Projective { m }) => {
                check_degree(alpha, *m)?;
                let (j, b, p) = single.as_ref().expect("single-sphere leaf");
                if k.part(*j) == k.n() {
                    // σ = s when the block is everything
                    multisphere_prepared(&Prepared::new(&SymbolSpec::MultiSphere {
                        block: *j,
                        b: rename_sig(b),
                        p: p.clone(),
                    }, k)?, *m, alpha, spec)
                } else {
                    gamma_single_sphere(b, k, *j, p, alpha, spec)
                }
            }
            (Theorem::Extended, Space::Projective { m }) => extended_prepared(&prep, *m, alpha, spec),
            (Theorem::ExtendedBall, Space::Ball { lambda, .. }) => ball_prepared(&prep, *lambda, alpha, spec),
            _ => unreachable!("route returned a theorem for the other space"),
        }
    };
    let values: Vec<Result<Option<f64>>> = basis.par_iter().map(eval).collect();
    let mut entries = Vec::with_capacity(basis.len());
    for (alpha, v) in basis.into_iter().zip(values) {
        let v = v?.map(|x| Complex64::new(x, 0.0));
        if let Some(x) = v {
            if !x.re.is_finite() {
                return Err(Error::Numerical(format!("γ{alpha} is not finite")));
            }
        }
        entries.push((alpha, v));
    }
    Ok(GammaTable { n: k.n(), k: k.clone(), space: *space, shift, theorem, entries })
}

/// `sig1..` → `s1..` for the `k = (n)` case where both coordinate sets agree.
fn rename_sig(b: &Expr) -> Expr {
    match b {
        Expr::Var(v) => Expr::Var(v.strip_prefix("sig").map(|i| format!("s{i}")).unwrap_or_else(|| v.clone())),
        Expr::Num(x) => Expr::Num(*x),
        Expr::Neg(e) => Expr::Neg(Box::new(rename_sig(e))),
        Expr::Bin(op, x, y) => Expr::Bin(*op, Box::new(rename_sig(x)), Box::new(rename_sig(y))),
        Expr::Call(f, e) => Expr::Call(*f, Box::new(rename_sig(e))),
    }
}
