//! Tensor Gauss–Jacobi cubature on simplices via the Duffy map, the radial
//! transform `ℝ₊^ℓ → Δ_ℓ`, and a seeded Monte Carlo backend.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

mod jacobi;
pub mod mc;

pub use jacobi::{gauss_jacobi, Rule};

/// Default points per axis for the deterministic path.
pub const DEFAULT_ORDER: usize = 40;
/// Default sample count for the Monte Carlo path.
pub const DEFAULT_SAMPLES: usize = 1_000_000;
/// Largest total cubature dimension the deterministic path accepts.
pub const MAX_GAUSS_DIM: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    GaussJacobiTensor,
    MonteCarlo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub method: Method,
    /// Points per axis (gauss) or sample count (monte carlo).
    pub order: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self::gauss(DEFAULT_ORDER)
    }
}

impl QuadratureSpec {
    pub fn gauss(order: usize) -> Self {
        Self { method: Method::GaussJacobiTensor, order, seed: 0 }
    }

    pub fn monte_carlo(samples: usize, seed: u64) -> Self {
        Self { method: Method::MonteCarlo, order: samples, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.order == 0 {
            return Err(crate::error::validation("quadrature order must be at least 1"));
        }
        Ok(())
    }
}

fn check_exponents(a: &[f64], a0: f64) -> Result<()> {
    if let Some(bad) = a.iter().chain(std::iter::once(&a0)).find(|&&x| x <= -1.0 || !x.is_finite()) {
        return Err(domain(format!("simplex exponent {bad} must exceed -1")));
    }
    Ok(())
}

/// `∫_{Δ_d} f(x) Π x_l^{a_l} (1 − Σx)^{a0} dx`.
///
/// Deterministic path: collapsed coordinates at the origin vertex,
/// `x = t_0 (y, 1 − Σy)` with `y ∈ Δ_{d−1}` treated the same way, so that
/// `x_d = t_0(1 − t_1)`, `x_{d−1} = t_0 t_1 (1 − t_2)`, …, `x_1 = t_0 ⋯ t_{d−1}`.
/// Each axis carries a Gauss–Jacobi rule. Functions that are homogeneous of
/// degree zero near the origin stay smooth in these coordinates. The Monte
/// Carlo path importance-samples `Dirichlet(a + 1, a0 + 1)`.
pub fn simplex_integrate<F>(f: F, a: &[f64], a0: f64, spec: &QuadratureSpec) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    check_exponents(a, a0)?;
    let d = a.len();
    match spec.method {
        Method::MonteCarlo => {
            let dom = mc::Domain::Simplex { a: a.to_vec(), a0 };
            Ok(mc::mc_integrate_real(&f, &dom, spec.order, spec.seed)?.value)
        }
        Method::GaussJacobiTensor => {
            if d > MAX_GAUSS_DIM {
                return Err(crate::Error::Unsupported(format!(
                    "deterministic cubature dimension {d} exceeds {MAX_GAUSS_DIM}; use monte-carlo"
                )));
            }
            if d == 0 {
                return f(&[]);
            }
            let rules: Vec<_> = (0..d)
                .map(|i| {
                    let dim = d - i;
                    let alpha = a[..dim].iter().sum::<f64>() + (dim - 1) as f64;
                    let beta = if i == 0 { a0 } else { a[dim] };
                    gauss_jacobi(spec.order, alpha, beta)
                })
                .collect();
            let mut x = vec![0.0; d];
            tensor_sum(&f, &rules, 0, 1.0, &mut x)
        }
    }
}

fn tensor_sum<F>(f: &F, rules: &[std::sync::Arc<Rule>], level: usize, scale: f64, x: &mut [f64]) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let d = rules.len();
    let rule = &rules[level];
    let mut acc = 0.0;
    for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
        if level > 0 {
            x[d - level] = scale * (1.0 - t);
        }
        let inner = scale * t;
        let v = if level + 1 == d {
            x[0] = inner;
            f(x)?
        } else {
            tensor_sum(f, rules, level + 1, inner, x)?
        };
        acc += w * v;
    }
    Ok(acc)
}

/// `∫_{ℝ₊^ℓ} g(√r) Π r_j^{e_j} (1 + Σr)^{−N} dr`.
///
/// `g` receives the square roots `(√r_1, …, √r_ℓ)`. The substitution
/// `r = u/(1 − Σu)` turns the integral into a simplex integral with
/// exponents `e` and `N − ℓ − 1 − Σe`.
pub fn radial_integrate_projective<G>(g: G, e: &[f64], big_n: f64, spec: &QuadratureSpec) -> Result<f64>
where
    G: Fn(&[f64]) -> Result<f64> + Sync,
{
    let ell = e.len();
    let a0 = big_n - ell as f64 - 1.0 - e.iter().sum::<f64>();
    if a0.is_nan() || a0 <= -1.0 {
        return Err(domain(format!(
            "radial integral diverges: need N > ℓ + Σe, got N = {big_n}, ℓ + Σe = {}",
            ell as f64 + e.iter().sum::<f64>()
        )));
    }
    simplex_integrate(
        |u: &[f64]| {
            let u0 = 1.0 - u.iter().sum::<f64>();
            let rho: Vec<f64> = u.iter().map(|&x| (x / u0).sqrt()).collect();
            g(&rho)
        },
        e,
        a0,
        spec,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::{dirichlet, gamma};
    use std::f64::consts::PI;

    fn one(_: &[f64]) -> Result<f64> {
        Ok(1.0)
    }

    #[test]
    fn spec_examples() {
        let g = QuadratureSpec::gauss(20);
        assert!((simplex_integrate(one, &[1.0, 1.0], 1.0, &g).unwrap() - 1.0 / 120.0).abs() < 1e-17);
        assert!((simplex_integrate(one, &[1.5], 0.5, &g).unwrap() - PI / 16.0).abs() < 1e-15 * PI);
        assert!((simplex_integrate(|x| Ok(x[0]), &[0.0], 0.0, &g).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn dirichlet_identity_grid() {
        let vals = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5];
        let spec = QuadratureSpec::gauss(20);
        let mut count = 0;
        for d in 1..=3usize {
            let total = vals.len().pow(d as u32);
            for code in 0..total {
                let mut c = code;
                let a: Vec<f64> = (0..d)
                    .map(|_| {
                        let v = vals[c % vals.len()];
                        c /= vals.len();
                        v
                    })
                    .collect();
                for &a0 in &vals {
                    let got = simplex_integrate(one, &a, a0, &spec).unwrap();
                    let exact = dirichlet(&a, a0);
                    assert!((got - exact).abs() <= 1e-12 * exact, "a={a:?} a0={a0}");
                    count += 1;
                }
            }
        }
        assert!(count > 1000);
    }

    #[test]
    fn polynomial_exactness() {
        // degree ≤ 2q − 1 in each Duffy variable
        let q = 6;
        let spec = QuadratureSpec::gauss(q);
        let f = |x: &[f64]| Ok(x[0].powi(3) * x[1].powi(2) + x[0] * x[1] - 0.5 * x[1].powi(4));
        let got = simplex_integrate(f, &[0.5, 1.0], 0.0, &spec).unwrap();
        let exact = dirichlet(&[3.5, 3.0], 0.0) + dirichlet(&[1.5, 2.0], 0.0) - 0.5 * dirichlet(&[0.5, 5.0], 0.0);
        assert!((got - exact).abs() <= 1e-13 * exact.abs());
    }

    #[test]
    fn radial_examples() {
        let spec = QuadratureSpec::gauss(40);
        for n in 1..=3u32 {
            for m in 0..=4u32 {
                for d in 0..=m {
                    let e = [(n - 1 + d) as f64];
                    let big_n = (n + m + 1) as f64;
                    let got = radial_integrate_projective(one, &e, big_n, &spec).unwrap();
                    let exact = gamma(e[0] + 1.0) * gamma((m - d + 1) as f64) / gamma(big_n);
                    assert!((got - exact).abs() <= 1e-12 * exact);
                    let got = radial_integrate_projective(|r| Ok(r[0] * r[0] / (1.0 + r[0] * r[0])), &e, big_n, &spec)
                        .unwrap();
                    let exact = gamma((n + d + 1) as f64) * gamma((m - d + 1) as f64) / gamma(big_n + 1.0);
                    assert!((got - exact).abs() <= 1e-12 * exact);
                }
            }
        }
        let got = radial_integrate_projective(one, &[0.0, 0.0], 4.0, &spec).unwrap();
        assert!((got - 1.0 / 6.0).abs() < 1e-15);
        assert!(radial_integrate_projective(one, &[2.0], 3.0, &spec).is_err());
    }

    #[test]
    fn invalid_exponents() {
        let spec = QuadratureSpec::gauss(4);
        assert!(simplex_integrate(one, &[-1.0], 0.0, &spec).is_err());
        assert!(simplex_integrate(one, &[0.0], f64::NAN, &spec).is_err());
    }

    #[test]
    fn monte_carlo_path_matches() {
        let f = |x: &[f64]| Ok((x[0] - x[1]).cos());
        let exact = simplex_integrate(f, &[0.5, 1.0], 1.5, &QuadratureSpec::gauss(30)).unwrap();
        let mc = simplex_integrate(f, &[0.5, 1.0], 1.5, &QuadratureSpec::monte_carlo(200_000, 7)).unwrap();
        assert!((mc - exact).abs() < 1e-3 * exact);
    }
}
