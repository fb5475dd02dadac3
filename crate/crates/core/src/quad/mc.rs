//! Seeded Monte Carlo integration.
//!
//! Samples are drawn in fixed-size chunks; chunk `c` uses a ChaCha8 stream
//! seeded by `(seed, c)`. Chunk statistics are merged in chunk order, so the
//! estimate does not depend on how many threads ran the chunks.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use rayon::prelude::*;
use std::f64::consts::TAU;

use crate::error::{domain, Result};
use crate::special::{dirichlet, gamma_ratio};

pub const CHUNK: usize = 1 << 14;

/// Integration domain together with the sampling measure.
#[derive(Clone, Debug, PartialEq)]
pub enum Domain {
    /// `Δ_d` with weight `Π x^{a} (1 − Σx)^{a0}`; `f` receives `x`.
    Simplex { a: Vec<f64>, a0: f64 },
    /// Product of weighted simplices; `f` receives the concatenated points.
    SimplexProduct { parts: Vec<(Vec<f64>, f64)> },
    /// `ℝ₊^ℓ` with weight `Π r^{e} (1 + Σr)^{−N}`; `f` receives `√r`.
    Orthant { e: Vec<f64>, big_n: f64 },
    /// Unit polydisk in `ℂⁿ` with normalized Lebesgue measure; `f` receives `z`.
    Polydisk { n: usize },
    /// `ℂⁿ` with the probability measure `ν_m`; `f` receives `z`.
    Projective { n: usize, m: u32 },
    /// `ℂⁿ` with the image of the uniform probability on the homogeneous
    /// simplex `(|w_0|², …, |w_n|²)/|w|²`; densities in `z` are the caller's.
    ProjectiveUniform { n: usize },
    /// Unit ball with `c_λ (1 − |z|²)^λ dV`; `f` receives `z`.
    Ball { n: usize, lambda: f64 },
}

/// One sample point: real coordinates for the real domains, `z` with its
/// moduli and phases for the complex ones.
#[derive(Debug)]
pub struct Sample<'a> {
    pub x: &'a [f64],
    pub z: &'a [Complex64],
    pub t: &'a [Complex64],
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub value: Complex64,
    pub stderr: f64,
    pub samples: usize,
}

#[derive(Clone, Copy, Debug, Default)]
struct Moments {
    n: f64,
    mean: Complex64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, v: Complex64) {
        self.n += 1.0;
        let delta = v - self.mean;
        self.mean += delta / self.n;
        self.m2 += (delta.conj() * (v - self.mean)).re;
    }

    fn merge(self, o: Moments) -> Moments {
        if self.n == 0.0 {
            return o;
        }
        let n = self.n + o.n;
        let delta = o.mean - self.mean;
        Moments {
            n,
            mean: self.mean + delta * (o.n / n),
            m2: self.m2 + o.m2 + delta.norm_sqr() * self.n * o.n / n,
        }
    }
}

struct Sampler {
    /// Real dimension of the point handed to `f`.
    dim: usize,
    /// One Dirichlet group per simplex factor; `None` marks shape 1 (exponential).
    groups: Vec<Vec<Option<Gamma<f64>>>>,
    scale: f64,
}

fn shapes_of(a: &[f64], a0: f64) -> Vec<f64> {
    a.iter().map(|x| x + 1.0).chain(std::iter::once(a0 + 1.0)).collect()
}

impl Sampler {
    fn new(dom: &Domain) -> Result<Self> {
        let (groups, scale, dim): (Vec<Vec<f64>>, f64, usize) = match dom {
            Domain::Simplex { a, a0 } => (vec![shapes_of(a, *a0)], dirichlet(a, *a0), a.len()),
            Domain::SimplexProduct { parts } => (
                parts.iter().map(|(a, a0)| shapes_of(a, *a0)).collect(),
                parts.iter().map(|(a, a0)| dirichlet(a, *a0)).product(),
                parts.iter().map(|(a, _)| a.len()).sum(),
            ),
            Domain::Orthant { e, big_n } => {
                let a0 = big_n - e.len() as f64 - 1.0 - e.iter().sum::<f64>();
                (vec![shapes_of(e, a0)], dirichlet(e, a0), e.len())
            }
            Domain::Polydisk { n } => (Vec::new(), 1.0, *n),
            Domain::Projective { n, m } => (vec![shapes_of(&vec![0.0; *n], f64::from(*m))], 1.0, *n),
            Domain::ProjectiveUniform { n } => (vec![shapes_of(&vec![0.0; *n], 0.0)], 1.0, *n),
            Domain::Ball { n, lambda } => (vec![shapes_of(&vec![0.0; *n], *lambda)], 1.0, *n),
        };
        let mut out = Vec::with_capacity(groups.len());
        for shapes in groups {
            let mut g = Vec::with_capacity(shapes.len());
            for s in shapes {
                if s <= 0.0 || !s.is_finite() {
                    return Err(domain(format!("sampling shape {s} must be positive (exponent > -1)")));
                }
                g.push(if s == 1.0 {
                    None
                } else {
                    Some(Gamma::new(s, 1.0).map_err(|e| domain(format!("gamma sampler: {e}")))?)
                });
            }
            out.push(g);
        }
        Ok(Self { dim, groups: out, scale })
    }

    /// Fills `out` with one Dirichlet draw for each group, each normalized and
    /// laid out as `(x_1, …, x_d, x_0)`.
    fn draw(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        let mut off = 0;
        for g in &self.groups {
            let block = &mut out[off..off + g.len()];
            let mut sum = 0.0;
            for (o, d) in block.iter_mut().zip(g) {
                *o = match d {
                    Some(d) => d.sample(rng),
                    None => Exp1.sample(rng),
                };
                sum += *o;
            }
            block.iter_mut().for_each(|o| *o /= sum);
            off += g.len();
        }
    }

    fn draw_len(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }
}

/// Accumulates `outputs` integrands at once over shared samples.
///
/// `f` writes one value per output into its slice argument.
pub fn mc_accumulate<F>(dom: &Domain, samples: usize, seed: u64, outputs: usize, f: F) -> Result<Vec<McEstimate>>
where
    F: Fn(&Sample<'_>, &mut [Complex64]) -> Result<()> + Sync,
{
    if samples == 0 {
        return Err(domain("sample count must be positive"));
    }
    let sampler = Sampler::new(dom)?;
    let chunks = samples.div_ceil(CHUNK);
    let per_chunk: Vec<Result<Vec<Moments>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let count = CHUNK.min(samples - c * CHUNK);
            run_chunk(dom, &sampler, seed, c as u64, count, outputs, &f)
        })
        .collect();
    let mut total = vec![Moments::default(); outputs];
    for chunk in per_chunk {
        for (t, m) in total.iter_mut().zip(chunk?) {
            *t = t.merge(m);
        }
    }
    Ok(total
        .into_iter()
        .map(|m| {
            let var = if m.n > 1.0 { m.m2 / (m.n - 1.0) } else { 0.0 };
            McEstimate {
                value: m.mean * sampler.scale,
                stderr: sampler.scale * (var / m.n).sqrt(),
                samples,
            }
        })
        .collect())
}

fn run_chunk<F>(
    domain: &Domain,
    sampler: &Sampler,
    seed: u64,
    chunk: u64,
    count: usize,
    outputs: usize,
    f: &F,
) -> Result<Vec<Moments>>
where
    F: Fn(&Sample<'_>, &mut [Complex64]) -> Result<()>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    let dim = sampler.dim;
    let mut y = vec![0.0; sampler.draw_len()];
    let mut x = vec![0.0; dim];
    let mut z = vec![Complex64::new(0.0, 0.0); dim];
    let mut t = vec![Complex64::new(1.0, 0.0); dim];
    let mut vals = vec![Complex64::new(0.0, 0.0); outputs];
    let mut moments = vec![Moments::default(); outputs];
    let complex = matches!(
        domain,
        Domain::Polydisk { .. } | Domain::Projective { .. } | Domain::ProjectiveUniform { .. } | Domain::Ball { .. }
    );
    for _ in 0..count {
        match domain {
            Domain::Simplex { .. } => {
                sampler.draw(&mut rng, &mut y);
                x.copy_from_slice(&y[..dim]);
            }
            Domain::SimplexProduct { parts } => {
                sampler.draw(&mut rng, &mut y);
                let (mut xo, mut yo) = (0, 0);
                for (a, _) in parts {
                    x[xo..xo + a.len()].copy_from_slice(&y[yo..yo + a.len()]);
                    xo += a.len();
                    yo += a.len() + 1;
                }
            }
            Domain::Orthant { .. } => {
                sampler.draw(&mut rng, &mut y);
                let u0 = y[dim];
                for (xi, &yi) in x.iter_mut().zip(&y[..dim]) {
                    *xi = (yi / u0).sqrt();
                }
            }
            Domain::Polydisk { .. } => {
                for xi in x.iter_mut() {
                    *xi = rng.random::<f64>().sqrt();
                }
            }
            Domain::Projective { .. } | Domain::ProjectiveUniform { .. } => {
                sampler.draw(&mut rng, &mut y);
                let y0 = y[dim];
                for (xi, &yi) in x.iter_mut().zip(&y[..dim]) {
                    *xi = (yi / y0).sqrt();
                }
            }
            Domain::Ball { .. } => {
                sampler.draw(&mut rng, &mut y);
                for (xi, &yi) in x.iter_mut().zip(&y[..dim]) {
                    *xi = yi.sqrt();
                }
            }
        }
        if complex {
            for u in 0..dim {
                t[u] = Complex64::from_polar(1.0, TAU * rng.random::<f64>());
                z[u] = t[u] * x[u];
            }
        }
        let s = Sample { x: &x, z: &z, t: &t };
        f(&s, &mut vals)?;
        for (m, &v) in moments.iter_mut().zip(&vals) {
            m.push(v);
        }
    }
    Ok(moments)
}

pub fn mc_integrate<F>(f: F, domain: &Domain, samples: usize, seed: u64) -> Result<McEstimate>
where
    F: Fn(&Sample<'_>) -> Result<Complex64> + Sync,
{
    let out = mc_accumulate(domain, samples, seed, 1, |s, v| {
        v[0] = f(s)?;
        Ok(())
    })?;
    Ok(out[0])
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RealEstimate {
    pub value: f64,
    pub stderr: f64,
}

/// Real-valued integrand on a real domain.
pub fn mc_integrate_real<F>(f: &F, domain: &Domain, samples: usize, seed: u64) -> Result<RealEstimate>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let e = mc_integrate(|s| Ok(Complex64::new(f(s.x)?, 0.0)), domain, samples, seed)?;
    Ok(RealEstimate { value: e.value.re, stderr: e.stderr })
}

/// Normalizing constant `Γ(n+λ+1)/(πⁿ Γ(λ+1))` of the ball measure.
pub fn ball_constant(n: usize, lambda: f64) -> f64 {
    gamma_ratio(&[n as f64 + lambda + 1.0], &[lambda + 1.0]) / std::f64::consts::PI.powi(n as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indexcore::{monomial_norm_sq_ball, monomial_norm_sq_projective_f64, MultiIndex};

    fn one(_: &Sample<'_>) -> Result<Complex64> {
        Ok(Complex64::new(1.0, 0.0))
    }

    #[test]
    fn spec_examples() {
        let e = mc_integrate(one, &Domain::Simplex { a: vec![0.0, 0.0], a0: 0.0 }, 10_000, 1).unwrap();
        assert!((e.value.re - 0.5).abs() < 1e-14 && e.stderr < 1e-14);
        let e = mc_integrate(one, &Domain::Projective { n: 3, m: 2 }, 10_000, 1).unwrap();
        assert!((e.value.re - 1.0).abs() < 1e-14 && e.stderr < 1e-14);
        let e = mc_integrate(
            |s| Ok(Complex64::new(s.x[0] * s.x[0], 0.0)),
            &Domain::Simplex { a: vec![0.0], a0: 0.0 },
            100_000,
            3,
        )
        .unwrap();
        assert!((e.value.re - 1.0 / 3.0).abs() < 4.0 * e.stderr);
    }

    #[test]
    fn deterministic_and_thread_independent() {
        let dom = Domain::Ball { n: 2, lambda: 1.0 };
        let f = |s: &Sample<'_>| Ok(s.z[0] * s.z[1].conj() + s.x[0]);
        let a = mc_integrate(f, &dom, 50_000, 11).unwrap();
        let b = mc_integrate(f, &dom, 50_000, 11).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let c = pool.install(|| mc_integrate(f, &dom, 50_000, 11).unwrap());
        assert_eq!(a, b);
        assert_eq!(a.value.re.to_bits(), c.value.re.to_bits());
        assert_eq!(a.value.im.to_bits(), c.value.im.to_bits());
    }

    #[test]
    fn projective_moments_match_norms() {
        // E|z^α|² under ν_m equals ‖z^α‖²_m
        let (n, m) = (2usize, 3u32);
        let alphas = [vec![1, 0], vec![1, 1], vec![0, 2], vec![2, 1]];
        let est = mc_accumulate(&Domain::Projective { n, m }, 400_000, 5, alphas.len(), |s, out| {
            for (o, a) in out.iter_mut().zip(&alphas) {
                let v: f64 = s.x.iter().zip(a).map(|(x, &p)| x.powi(2 * p)).product();
                *o = Complex64::new(v, 0.0);
            }
            Ok(())
        })
        .unwrap();
        for (e, a) in est.iter().zip(&alphas) {
            let exact = monomial_norm_sq_projective_f64(&MultiIndex::new(a.iter().map(|&x| x as u32).collect()), m)
                .unwrap();
            assert!((e.value.re - exact).abs() < 4.0 * e.stderr, "{a:?}: {} vs {exact}", e.value.re);
        }
    }

    #[test]
    fn ball_moments_match_norms() {
        let est = mc_integrate(
            |s| Ok(Complex64::new(s.x[0].powi(2), 0.0)),
            &Domain::Ball { n: 2, lambda: 1.0 },
            200_000,
            9,
        )
        .unwrap();
        let exact = monomial_norm_sq_ball(&MultiIndex::new(vec![1, 0]), 1.0, 2).unwrap();
        assert!((est.value.re - exact).abs() < 4.0 * est.stderr);
        assert!((ball_constant(1, 0.0) - 1.0 / std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn orthant_matches_beta() {
        let est = mc_integrate_real(
            &|_: &[f64]| Ok(1.0),
            &Domain::Orthant { e: vec![1.0], big_n: 4.0 },
            1000,
            1,
        )
        .unwrap();
        // B(2, 2) = 1/6
        assert!((est.value - 1.0 / 6.0).abs() < 1e-15);
        let poly = mc_integrate(|s| Ok(Complex64::new(s.x[0].powi(2), 0.0)), &Domain::Polydisk { n: 1 }, 100_000, 2).unwrap();
        assert!((poly.value.re - 0.5).abs() < 4.0 * poly.stderr);
    }
}
