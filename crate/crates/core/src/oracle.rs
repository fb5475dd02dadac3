//! Direct integration of `⟨ψ z^α, z^β⟩`, independent of the γ formulas.
//!
//! The symbol is evaluated pointwise, phases included. Two backends: a
//! tensor polar grid for `n ≤ 2` and Monte Carlo sampling of the measure.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, validation, Error, Result};
use crate::indexcore::{MultiIndex, Partition, Space};
use crate::quad::mc::{mc_accumulate, Domain};
use crate::special::gamma_ratio;
use crate::symbolexpr::{CompiledSymbol, SymbolSpec};

pub const DEFAULT_Q_R: usize = 64;
pub const DEFAULT_Q_THETA: usize = 64;
pub const MAX_GRID_N: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum OracleMethod {
    /// Gauss–Legendre in the radial/direction variables, `q_theta` uniform nodes per phase.
    PolarGrid { q_r: usize, q_theta: usize },
    MonteCarlo { samples: usize, seed: u64 },
}

impl Default for OracleMethod {
    fn default() -> Self {
        OracleMethod::PolarGrid { q_r: DEFAULT_Q_R, q_theta: DEFAULT_Q_THETA }
    }
}

impl OracleMethod {
    pub fn name(&self) -> &'static str {
        match self {
            OracleMethod::PolarGrid { .. } => "polar-grid",
            OracleMethod::MonteCarlo { .. } => "monte-carlo",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OracleResult {
    pub value: Complex64,
    /// 0 for the grid.
    pub stderr: f64,
    pub method: &'static str,
    pub points: usize,
}

/// Gauss–Legendre on `[0, 1]` by Newton iteration from Chebyshev guesses.
pub fn gauss_legendre(q: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    let qf = q as f64;
    for i in 0..q.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (qf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=q {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = qf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // x descends from near 1; store ascending on [0, 1]
        nodes[q - 1 - i] = 0.5 * (1.0 + x);
        nodes[i] = 0.5 * (1.0 - x);
        weights[q - 1 - i] = 0.5 * w;
        weights[i] = 0.5 * w;
    }
    (nodes, weights)
}

/// Nodes of `∫₀¹ g(y) dy` after `y = sin²(πη/2)`, which smooths `√y` and `√(1−y)` endpoints.
fn smoothed_rule(q: usize) -> Vec<(f64, f64)> {
    let (eta, w) = gauss_legendre(q);
    eta.iter()
        .zip(&w)
        .map(|(&e, &w)| {
            let s = (0.5 * PI * e).sin();
            (s * s, w * 0.5 * PI * (PI * e).sin())
        })
        .collect()
}

/// `(y_1..y_n, weight)` covering `Δ_n` in polar form around `y = 0`:
/// `y = ρ·(w, 1 − w)` for `n = 2`, `y = ρ` for `n = 1`.
fn simplex_nodes(n: usize, q: usize) -> Vec<(Vec<f64>, f64)> {
    let rule = smoothed_rule(q);
    match n {
        1 => rule.iter().map(|&(rho, w)| (vec![rho], w)).collect(),
        2 => {
            let mut out = Vec::with_capacity(q * q);
            for &(rho, wr) in &rule {
                for &(d, wd) in &rule {
                    out.push((vec![rho * d, rho * (1.0 - d)], wr * wd * rho));
                }
            }
            out
        }
        _ => unreachable!("grid oracle is capped at n = {MAX_GRID_N}"),
    }
}

/// Density of the measure on `Δ_n` and the moduli `|z_u|` at a simplex point.
#[derive(Clone, Copy)]
enum Measure {
    Projective { m: u32 },
    Ball { lambda: f64 },
}

impl Measure {
    fn of(space: &Space) -> Self {
        match *space {
            Space::Projective { m } => Measure::Projective { m },
            Space::Ball { lambda, .. } => Measure::Ball { lambda },
        }
    }

    fn constant(&self, n: usize) -> f64 {
        match *self {
            Measure::Projective { m } => gamma_ratio(&[(n as u32 + m + 1) as f64], &[f64::from(m) + 1.0]),
            Measure::Ball { lambda } => gamma_ratio(&[n as f64 + lambda + 1.0], &[lambda + 1.0]),
        }
    }

    fn density(&self, y0: f64) -> f64 {
        match *self {
            Measure::Projective { m } => y0.powi(m as i32),
            Measure::Ball { lambda } => y0.powf(lambda),
        }
    }

    fn moduli(&self, y: &[f64], y0: f64, out: &mut [f64]) {
        for (o, &yu) in out.iter_mut().zip(y) {
            *o = match self {
                Measure::Projective { .. } => (yu / y0).sqrt(),
                Measure::Ball { .. } => yu.sqrt(),
            };
        }
    }

    fn domain(&self, n: usize) -> Domain {
        match *self {
            Measure::Projective { .. } => Domain::ProjectiveUniform { n },
            Measure::Ball { lambda } => Domain::Ball { n, lambda },
        }
    }

    /// Density of the measure against `domain(n)` at the moduli `x`.
    /// Sampling `ν_m` itself gives `z^α z̄^β` infinite variance once `|α| + |β| ≥ m + 1`.
    fn mc_weight(&self, n: usize, x: &[f64]) -> f64 {
        match *self {
            Measure::Projective { .. } => {
                let y0 = 1.0 / (1.0 + x.iter().map(|v| v * v).sum::<f64>());
                self.constant(n) / gamma_ratio(&[n as f64 + 1.0], &[]) * self.density(y0)
            }
            Measure::Ball { .. } => 1.0,
        }
    }
}

fn check_pairs(pairs: &[(MultiIndex, MultiIndex)], n: usize, space: &Space) -> Result<()> {
    let cap = space.degree_cap();
    if let Space::Ball { lambda, .. } = space {
        if lambda.is_nan() || *lambda <= -1.0 {
            return Err(domain(format!("ball weight λ = {lambda} must exceed -1")));
        }
    }
    for (a, b) in pairs {
        if a.len() != n || b.len() != n {
            return Err(validation(format!("multi-index length must be n = {n}: {a}, {b}")));
        }
        if a.degree() > cap || b.degree() > cap {
            return Err(validation(format!("degrees of {a}, {b} exceed {cap}")));
        }
    }
    Ok(())
}

fn monomial_exponents(pairs: &[(MultiIndex, MultiIndex)]) -> Vec<(Vec<i32>, Vec<i32>)> {
    pairs
        .iter()
        .map(|(a, b)| {
            let sum = a.entries().iter().zip(b.entries()).map(|(&x, &y)| (x + y) as i32).collect();
            let diff = a.entries().iter().zip(b.entries()).map(|(&x, &y)| x as i32 - y as i32).collect();
            (sum, diff)
        })
        .collect()
}

/// `⟨ψ z^α, z^β⟩` for every pair, sharing symbol evaluations.
pub fn inner_products(
    psi: &SymbolSpec,
    k: &Partition,
    space: &Space,
    pairs: &[(MultiIndex, MultiIndex)],
    method: &OracleMethod,
) -> Result<Vec<OracleResult>> {
    let n = k.n();
    check_pairs(pairs, n, space)?;
    let sym = psi.compile(k)?;
    let measure = Measure::of(space);
    let ex = monomial_exponents(pairs);
    match *method {
        OracleMethod::PolarGrid { q_r, q_theta } => {
            if n > MAX_GRID_N {
                return Err(Error::Unsupported(format!(
                    "the polar-grid oracle is capped at n = {MAX_GRID_N}; use monte-carlo for n = {n}"
                )));
            }
            if q_r == 0 || q_theta == 0 {
                return Err(validation("oracle grid orders must be positive"));
            }
            grid(&sym, n, measure, &ex, q_r, q_theta)
        }
        OracleMethod::MonteCarlo { samples, seed } => {
            let est = mc_accumulate(&measure.domain(n), samples, seed, ex.len(), |s, out| {
                let mut point = Vec::with_capacity(k.len() + 2 * n);
                let v = sym.eval_polar(s.x, s.t, &mut point)? * measure.mc_weight(n, s.x);
                for (o, (sum, diff)) in out.iter_mut().zip(&ex) {
                    let mut term = v;
                    for u in 0..n {
                        term *= s.x[u].powi(sum[u]) * s.t[u].powi(diff[u]);
                    }
                    *o = term;
                }
                Ok(())
            })?;
            Ok(est
                .into_iter()
                .map(|e| OracleResult { value: e.value, stderr: e.stderr, method: "monte-carlo", points: samples })
                .collect())
        }
    }
}

fn grid(
    sym: &CompiledSymbol,
    n: usize,
    measure: Measure,
    ex: &[(Vec<i32>, Vec<i32>)],
    q_r: usize,
    q_theta: usize,
) -> Result<Vec<OracleResult>> {
    let radial = simplex_nodes(n, q_r);
    let phases: Vec<Complex64> = (0..q_theta).map(|j| Complex64::from_polar(1.0, TAU * j as f64 / q_theta as f64)).collect();
    let torus: Vec<Vec<Complex64>> = match n {
        1 => phases.iter().map(|&t| vec![t]).collect(),
        _ => phases.iter().flat_map(|&t1| phases.iter().map(move |&t2| vec![t1, t2])).collect(),
    };
    let tw = 1.0 / torus.len() as f64;
    // t^{α−β} per pair and torus node
    let phase_tab: Vec<Vec<Complex64>> = ex
        .iter()
        .map(|(_, diff)| {
            torus.iter().map(|t| t.iter().zip(diff).fold(Complex64::new(1.0, 0.0), |acc, (tu, &d)| acc * tu.powi(d))).collect()
        })
        .collect();
    let c = measure.constant(n);
    let partial: Vec<Result<Vec<Complex64>>> = radial
        .par_iter()
        .map(|(y, w)| {
            let y0 = 1.0 - y.iter().sum::<f64>();
            let mut rho = vec![0.0; n];
            measure.moduli(y, y0, &mut rho);
            let base = w * measure.density(y0) * c * tw;
            let rad: Vec<f64> = ex.iter().map(|(sum, _)| base * rho.iter().zip(sum).map(|(r, &s)| r.powi(s)).product::<f64>()).collect();
            let mut acc = vec![Complex64::default(); ex.len()];
            let mut point = Vec::new();
            for (ti, t) in torus.iter().enumerate() {
                let v = sym.eval_polar(&rho, t, &mut point)?;
                for (i, a) in acc.iter_mut().enumerate() {
                    *a += v * phase_tab[i][ti] * rad[i];
                }
            }
            Ok(acc)
        })
        .collect();
    let mut total = vec![Complex64::default(); ex.len()];
    for p in partial {
        for (t, v) in total.iter_mut().zip(p?) {
            *t += v;
        }
    }
    let points = radial.len() * torus.len();
    Ok(total.into_iter().map(|value| OracleResult { value, stderr: 0.0, method: "polar-grid", points }).collect())
}

pub fn inner_product_projective(
    psi: &SymbolSpec,
    k: &Partition,
    alpha: &MultiIndex,
    beta: &MultiIndex,
    m: u32,
    method: &OracleMethod,
) -> Result<OracleResult> {
    let pairs = [(alpha.clone(), beta.clone())];
    Ok(inner_products(psi, k, &Space::Projective { m }, &pairs, method)?[0])
}

pub fn inner_product_ball(
    psi: &SymbolSpec,
    k: &Partition,
    alpha: &MultiIndex,
    beta: &MultiIndex,
    lambda: f64,
    method: &OracleMethod,
) -> Result<OracleResult> {
    let cap = alpha.degree().max(beta.degree());
    let pairs = [(alpha.clone(), beta.clone())];
    Ok(inner_products(psi, k, &Space::Ball { lambda, cap }, &pairs, method)?[0])
}

/// `⟨ψ z^α, z^{α+p}⟩ / ‖z^{α+p}‖²` for each α; `None` where `α + p` leaves the basis.
pub fn gamma_from_oracle(
    psi: &SymbolSpec,
    k: &Partition,
    space: &Space,
    alphas: &[MultiIndex],
    method: &OracleMethod,
) -> Result<Vec<Option<OracleResult>>> {
    let p = psi.shift(k);
    let cap = space.degree_cap();
    let mut pairs = Vec::new();
    let mut slot = Vec::with_capacity(alphas.len());
    for a in alphas {
        match a.shifted(&p).filter(|b| b.degree() <= cap) {
            Some(b) => {
                slot.push(Some(pairs.len()));
                pairs.push((a.clone(), b));
            }
            None => slot.push(None),
        }
    }
    let raw = if pairs.is_empty() { Vec::new() } else { inner_products(psi, k, space, &pairs, method)? };
    slot.into_iter()
        .map(|s| {
            s.map(|i| {
                let norm = space.norm_sq(&pairs[i].1)?;
                let r = raw[i];
                Ok(OracleResult { value: r.value / norm, stderr: r.stderr / norm, ..r })
            })
            .transpose()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indexcore::{enumerate_basis, monomial_norm_sq_ball, monomial_norm_sq_projective_f64};
    use crate::symbolexpr::parse;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    fn small_grid() -> OracleMethod {
        OracleMethod::PolarGrid { q_r: 24, q_theta: 16 }
    }

    #[test]
    fn legendre_rule() {
        let (x, w) = gauss_legendre(5);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        for k in 0..10 {
            let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum();
            assert!((got - 1.0 / (k as f64 + 1.0)).abs() < 1e-15);
        }
        assert!((x[2] - 0.5).abs() < 1e-16);
    }

    #[test]
    fn unit_norms_projective() {
        let k = Partition::single(2).unwrap();
        let basis = enumerate_basis(2, 3);
        let space = Space::Projective { m: 3 };
        let pairs: Vec<_> = basis.iter().flat_map(|a| basis.iter().map(move |b| (a.clone(), b.clone()))).collect();
        let r = inner_products(&SymbolSpec::unit(), &k, &space, &pairs, &small_grid()).unwrap();
        for ((a, b), v) in pairs.iter().zip(&r) {
            if a == b {
                let want = monomial_norm_sq_projective_f64(a, 3).unwrap();
                assert!((v.value.re - want).abs() < 1e-10, "{a}: {} vs {want}", v.value);
            } else {
                assert!(v.value.norm() < 1e-12, "{a} {b}: {}", v.value);
            }
        }
    }

    #[test]
    fn unit_norms_ball() {
        let k = Partition::new(vec![1, 1]).unwrap();
        for lambda in [0.0, 1.0, 2.5] {
            for a in enumerate_basis(2, 2) {
                let v = inner_product_ball(&SymbolSpec::unit(), &k, &a, &a, lambda, &small_grid()).unwrap();
                let want = monomial_norm_sq_ball(&a, lambda, 2).unwrap();
                assert!((v.value.re - want).abs() < 1e-10, "{a} λ={lambda}");
            }
        }
        let v = inner_product_ball(&SymbolSpec::unit(), &k, &mi(&[1, 0]), &mi(&[0, 1]), 0.0, &small_grid()).unwrap();
        assert!(v.value.norm() < 1e-12);
    }

    #[test]
    fn phase_example() {
        let k = Partition::single(2).unwrap();
        let psi = SymbolSpec::Phase { p: vec![1, -1] };
        let v = inner_product_projective(&psi, &k, &mi(&[1, 1]), &mi(&[2, 0]), 2, &small_grid()).unwrap();
        assert!((v.value.re - 3.0 * PI / 16.0).abs() < 1e-10, "{}", v.value);
        let off = inner_product_projective(&psi, &k, &mi(&[1, 1]), &mi(&[1, 1]), 2, &small_grid()).unwrap();
        assert!(off.value.norm() < 1e-12);
        let mc = OracleMethod::MonteCarlo { samples: 200_000, seed: 11 };
        let v = inner_product_projective(&psi, &k, &mi(&[1, 1]), &mi(&[2, 0]), 2, &mc).unwrap();
        assert!(v.stderr > 0.0);
        assert!((v.value.re - 3.0 * PI / 16.0).abs() < 4.0 * v.stderr);
        let ball = inner_product_ball(&psi, &k, &mi(&[1, 1]), &mi(&[2, 0]), 0.0, &small_grid()).unwrap();
        let want = 3.0 * PI / 16.0 * monomial_norm_sq_ball(&mi(&[2, 0]), 0.0, 2).unwrap();
        assert!((ball.value.re - want).abs() < 1e-10);
    }

    #[test]
    fn gamma_from_oracle_examples() {
        let k = Partition::single(2).unwrap();
        let space = Space::Projective { m: 3 };
        let basis = enumerate_basis(2, 3);
        let g = gamma_from_oracle(&SymbolSpec::unit(), &k, &space, &basis, &small_grid()).unwrap();
        assert!(g.iter().all(|v| (v.unwrap().value.re - 1.0).abs() < 1e-10));
        let a = SymbolSpec::QuasiRadial { a: parse("r1^2/(1+r1^2)").unwrap() };
        let g = gamma_from_oracle(&a, &k, &space, &basis, &small_grid()).unwrap();
        for (alpha, v) in basis.iter().zip(&g) {
            let want = f64::from(2 + alpha.degree()) / 6.0;
            assert!((v.unwrap().value.re - want).abs() < 1e-10);
        }
        let phase = SymbolSpec::Phase { p: vec![2, -2] };
        let g = gamma_from_oracle(&phase, &k, &space, &basis, &small_grid()).unwrap();
        assert_eq!(g.iter().filter(|v| v.is_some()).count(), 3);
    }

    #[test]
    fn grid_capped() {
        let k = Partition::single(3).unwrap();
        let a = mi(&[0, 0, 0]);
        let err = inner_product_projective(&SymbolSpec::unit(), &k, &a, &a, 1, &OracleMethod::default());
        assert!(matches!(err, Err(Error::Unsupported(_))));
    }
}
