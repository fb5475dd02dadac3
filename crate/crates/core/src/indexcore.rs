//! Multi-indices, partitions and basis enumeration.
//!
//! The monomial basis of the projective Bergman space of weight `m` is the set
//! `J_n(m) = { α ∈ ℕⁿ : |α| ≤ m }`. Every matrix and table in this crate is
//! indexed in **graded lexicographic** order: first by total degree, then
//! lexicographically (ascending) within a degree. For `n = 2, m = 2` that is
//! `(0,0), (0,1), (1,0), (0,2), (1,1), (2,0)`.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::ops::Range;

use num_bigint::BigUint;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{domain, validation, Result};
use crate::special::gamma;

/// Block structure `k = (k_1, …, k_ℓ)` of the coordinates of `ℂⁿ`.
///
/// The 0-th homogeneous coordinate is implicit (always a block of size one).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Partition {
    parts: Vec<usize>,
    offsets: Vec<usize>,
    n: usize,
}

impl Partition {
    pub fn new(parts: Vec<usize>) -> Result<Self> {
        if parts.is_empty() {
            return Err(validation("partition must have at least one block"));
        }
        if parts.contains(&0) {
            return Err(validation(format!("partition {parts:?} has an empty block")));
        }
        let mut offsets = Vec::with_capacity(parts.len());
        let mut acc = 0;
        for &k in &parts {
            offsets.push(acc);
            acc += k;
        }
        Ok(Self { parts, offsets, n: acc })
    }

    /// The trivial partition `(n)`.
    pub fn single(n: usize) -> Result<Self> {
        Self::new(vec![n])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of blocks ℓ.
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn part(&self, j: usize) -> usize {
        self.parts[j]
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// Coordinate range `χ_j` of block `j` (0-based block index).
    pub fn block(&self, j: usize) -> Range<usize> {
        self.offsets[j]..self.offsets[j] + self.parts[j]
    }

    pub fn block_of(&self, u: usize) -> usize {
        self.offsets.partition_point(|&o| o <= u) - 1
    }

    /// `|α_(j)|` for each block.
    pub fn block_degrees(&self, alpha: &MultiIndex) -> Vec<u32> {
        (0..self.len())
            .map(|j| alpha.entries[self.block(j)].iter().sum())
            .collect()
    }
}

impl TryFrom<Vec<usize>> for Partition {
    type Error = crate::Error;

    fn try_from(parts: Vec<usize>) -> Result<Self> {
        Partition::new(parts)
    }
}

impl From<Partition> for Vec<usize> {
    fn from(p: Partition) -> Self {
        p.parts
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, k) in self.parts.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}")?;
        }
        write!(f, ")")
    }
}

/// Exponent tuple α of the monomial `z^α`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    entries: Vec<u32>,
    degree: u32,
}

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        let degree = entries.iter().sum();
        Self { entries, degree }
    }

    pub fn zero(n: usize) -> Self {
        Self::new(vec![0; n])
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// |α|
    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// `α + p`, or `None` when some entry would become negative.
    pub fn shifted(&self, p: &[i64]) -> Option<MultiIndex> {
        debug_assert_eq!(p.len(), self.entries.len());
        let mut out = Vec::with_capacity(self.entries.len());
        for (&a, &d) in self.entries.iter().zip(p) {
            let v = i64::from(a) + d;
            if v < 0 {
                return None;
            }
            out.push(v as u32);
        }
        Some(MultiIndex::new(out))
    }

    /// α! as an exact integer.
    pub fn factorial(&self) -> BigUint {
        self.entries.iter().map(|&a| factorial(a)).product()
    }

    /// α! in floating point.
    pub fn factorial_f64(&self) -> f64 {
        self.entries.iter().map(|&a| gamma(f64::from(a) + 1.0)).product()
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree
            .cmp(&other.degree)
            .then_with(|| self.entries.cmp(&other.entries))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

pub fn factorial(k: u32) -> BigUint {
    (1..=k).map(BigUint::from).product()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShiftMode {
    /// `Σ_u p_u = 0`
    TotalZero,
    /// `Σ_{u∈χ_j} p_u = 0` for every block.
    BlockwiseZero,
}

/// Integer shift `p` of a pseudo-homogeneous symbol `… t^p`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ShiftVector {
    entries: Vec<i64>,
    mode: ShiftMode,
}

impl ShiftVector {
    pub fn new(entries: Vec<i64>, mode: ShiftMode, k: &Partition) -> Result<Self> {
        if entries.len() != k.n() {
            return Err(validation(format!(
                "shift vector has {} entries, expected n = {}",
                entries.len(),
                k.n()
            )));
        }
        let total: i64 = entries.iter().sum();
        if total != 0 {
            return Err(validation(format!("shift {entries:?} violates |p| = 0 (sum is {total})")));
        }
        if mode == ShiftMode::BlockwiseZero {
            for j in 0..k.len() {
                let s: i64 = entries[k.block(j)].iter().sum();
                if s != 0 {
                    return Err(validation(format!(
                        "shift {entries:?} violates |p_(j)| = 0 on block {} (sum is {s})",
                        j + 1
                    )));
                }
            }
        }
        Ok(Self { entries, mode })
    }

    pub fn zero(n: usize) -> Self {
        Self { entries: vec![0; n], mode: ShiftMode::BlockwiseZero }
    }

    /// Strongest mode the entries satisfy under `k`.
    pub fn classify(entries: Vec<i64>, k: &Partition) -> Result<Self> {
        Self::new(entries.clone(), ShiftMode::BlockwiseZero, k)
            .or_else(|_| Self::new(entries, ShiftMode::TotalZero, k))
    }

    pub fn entries(&self) -> &[i64] {
        &self.entries
    }

    pub fn mode(&self) -> ShiftMode {
        self.mode
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&p| p == 0)
    }

    /// `|p_(j)|` for each block.
    pub fn block_sums(&self, k: &Partition) -> Vec<i64> {
        (0..k.len()).map(|j| self.entries[k.block(j)].iter().sum()).collect()
    }

    pub fn negated(&self) -> Self {
        Self { entries: self.entries.iter().map(|p| -p).collect(), mode: self.mode }
    }
}

impl fmt::Display for ShiftVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

/// Block-polar coordinates of a point `z ∈ ℂⁿ`:
/// `z_{j,l} = r_j s_{j,l} t_{j,l}` and `z = |z| σ t`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolarDecomposition {
    pub r: Vec<f64>,
    pub s: Vec<Vec<f64>>,
    pub t: Vec<Complex64>,
    pub sigma: Vec<f64>,
}

impl PolarDecomposition {
    pub fn reconstruct(&self) -> Vec<Complex64> {
        self.s
            .iter()
            .zip(&self.r)
            .flat_map(|(s, &r)| s.iter().map(move |&sl| r * sl))
            .zip(&self.t)
            .map(|(mag, &t)| t * mag)
            .collect()
    }
}

/// Splits `z` into block radii, block directions, phases and global direction.
///
/// Zero coordinates get phase 1; zero blocks get the uniform direction
/// `1/√k_j` (and a zero vector gets `σ = 1/√n`).
pub fn decompose(z: &[Complex64], k: &Partition) -> PolarDecomposition {
    assert_eq!(z.len(), k.n(), "point dimension does not match partition");
    let rho: Vec<f64> = z.iter().map(|c| c.norm()).collect();
    let t = z
        .iter()
        .zip(&rho)
        .map(|(&c, &m)| if m == 0.0 { Complex64::new(1.0, 0.0) } else { c / m })
        .collect();

    let mut r = Vec::with_capacity(k.len());
    let mut s = Vec::with_capacity(k.len());
    for j in 0..k.len() {
        let block = &rho[k.block(j)];
        let rj = norm2(block);
        r.push(rj);
        if rj > 0.0 {
            s.push(block.iter().map(|&x| x / rj).collect());
        } else {
            let u = 1.0 / (k.part(j) as f64).sqrt();
            s.push(vec![u; k.part(j)]);
        }
    }

    let total = norm2(&rho);
    let sigma = if total > 0.0 {
        rho.iter().map(|&x| x / total).collect()
    } else {
        vec![1.0 / (k.n() as f64).sqrt(); k.n()]
    };
    PolarDecomposition { r, s, t, sigma }
}

fn norm2(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0_f64, |acc, &x| acc.hypot(x))
}

/// All α with `|α| ≤ m`, in graded lexicographic order. Length `binomial(n+m, n)`.
pub fn enumerate_basis(n: usize, m: u32) -> Vec<MultiIndex> {
    assert!(n >= 1, "dimension must be positive");
    let mut out = Vec::new();
    let mut buf = vec![0u32; n];
    for d in 0..=m {
        compositions(d, 0, &mut buf, &mut out);
    }
    out
}

fn compositions(rest: u32, pos: usize, buf: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    if pos + 1 == buf.len() {
        buf[pos] = rest;
        out.push(MultiIndex::new(buf.clone()));
        return;
    }
    for a in 0..=rest {
        buf[pos] = a;
        compositions(rest - a, pos + 1, buf, out);
    }
}

/// `‖z^α‖²` in the projective space of weight `m`: `α!(m−|α|)!/m!`.
pub fn monomial_norm_sq_projective(alpha: &MultiIndex, m: u32) -> Result<BigRational> {
    if alpha.degree() > m {
        return Err(domain(format!("|α| = {} exceeds weight m = {m}", alpha.degree())));
    }
    let num = alpha.factorial() * factorial(m - alpha.degree());
    Ok(BigRational::new(num.into(), factorial(m).into()))
}

pub fn monomial_norm_sq_projective_f64(alpha: &MultiIndex, m: u32) -> Result<f64> {
    use num_traits::ToPrimitive;
    monomial_norm_sq_projective(alpha, m)?
        .to_f64()
        .ok_or_else(|| domain("norm not representable as f64"))
}

/// `‖z^α‖²` in the weighted ball space `A²_λ(𝔹ⁿ)` with probability-normalized measure:
/// `α! Γ(n+λ+1) / Γ(n+|α|+λ+1)`.
pub fn monomial_norm_sq_ball(alpha: &MultiIndex, lambda: f64, n: usize) -> Result<f64> {
    if lambda.is_nan() || lambda <= -1.0 {
        return Err(domain(format!("ball weight λ = {lambda} must exceed -1")));
    }
    let nf = n as f64;
    let d = f64::from(alpha.degree());
    Ok(alpha.factorial_f64() * crate::special::gamma_ratio(&[nf + lambda + 1.0], &[nf + d + lambda + 1.0]))
}

/// The weight parameter of a Bergman space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Space {
    Projective { m: u32 },
    Ball { lambda: f64, cap: u32 },
}

impl Space {
    /// Largest total degree in the basis.
    pub fn degree_cap(&self) -> u32 {
        match *self {
            Space::Projective { m } => m,
            Space::Ball { cap, .. } => cap,
        }
    }

    pub fn norm_sq(&self, alpha: &MultiIndex) -> Result<f64> {
        match *self {
            Space::Projective { m } => monomial_norm_sq_projective_f64(alpha, m),
            Space::Ball { lambda, .. } => monomial_norm_sq_ball(alpha, lambda, alpha.len()),
        }
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Space::Projective { m } => write!(f, "m={m}"),
            Space::Ball { lambda, cap } => write!(f, "lambda={lambda} cap={cap}"),
        }
    }
}

/// Frozen basis of a space: ordered multi-indices, their positions and norms.
#[derive(Clone, Debug)]
pub struct Basis {
    n: usize,
    space: Space,
    indices: Vec<MultiIndex>,
    position: HashMap<MultiIndex, usize>,
    norms_sq: Vec<f64>,
}

impl Basis {
    pub fn new(n: usize, space: Space) -> Result<Self> {
        if n == 0 {
            return Err(validation("dimension n must be positive"));
        }
        if let Space::Ball { lambda, .. } = space {
            if lambda.is_nan() || lambda <= -1.0 {
                return Err(domain(format!("ball weight λ = {lambda} must exceed -1")));
            }
        }
        let indices = enumerate_basis(n, space.degree_cap());
        let position = indices.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();
        let norms_sq = indices.iter().map(|a| space.norm_sq(a)).collect::<Result<_>>()?;
        Ok(Self { n, space, indices, position, norms_sq })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn position(&self, alpha: &MultiIndex) -> Option<usize> {
        self.position.get(alpha).copied()
    }

    pub fn norm_sq(&self, i: usize) -> f64 {
        self.norms_sq[i]
    }

    pub fn is_compatible(&self, other: &Basis) -> bool {
        self.n == other.n && self.space == other.space
    }
}

/// `binomial(n+m, n)` as an exact integer.
pub fn basis_size(n: usize, m: u32) -> BigUint {
    let mut acc = BigUint::one();
    for i in 1..=n as u32 {
        acc = acc * BigUint::from(m + i) / BigUint::from(i);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    #[test]
    fn basis_small_cases() {
        let b = enumerate_basis(1, 2);
        assert_eq!(b, vec![mi(&[0]), mi(&[1]), mi(&[2])]);

        let b = enumerate_basis(2, 2);
        assert_eq!(
            b,
            vec![mi(&[0, 0]), mi(&[0, 1]), mi(&[1, 0]), mi(&[0, 2]), mi(&[1, 1]), mi(&[2, 0])]
        );
        assert_eq!(enumerate_basis(3, 5).len(), 56);
    }

    #[test]
    fn basis_sizes_match_binomial_and_order_is_strict() {
        for n in 1..=4 {
            for m in 0..=6 {
                let b = enumerate_basis(n, m);
                assert_eq!(b.len(), basis_size(n, m).to_usize().unwrap());
                assert!(b.windows(2).all(|w| w[0] < w[1]), "n={n} m={m} not strictly increasing");
            }
        }
    }

    #[test]
    fn projective_norms() {
        let one = BigRational::one();
        assert_eq!(monomial_norm_sq_projective(&mi(&[0, 0, 0]), 4).unwrap(), one);
        let half = BigRational::new(1.into(), 2.into());
        assert_eq!(monomial_norm_sq_projective(&mi(&[1]), 2).unwrap(), half);
        assert_eq!(monomial_norm_sq_projective(&mi(&[1, 1]), 2).unwrap(), half);
        assert!(monomial_norm_sq_projective(&mi(&[2, 1]), 2).is_err());
    }

    #[test]
    fn orthonormal_basis_has_unit_norms() {
        for n in 1..=3 {
            for m in 0..=5u32 {
                let basis = enumerate_basis(n, m);
                let total: BigRational = basis
                    .iter()
                    .map(|a| {
                        let coef = BigRational::new(
                            factorial(m).into(),
                            (a.factorial() * factorial(m - a.degree())).into(),
                        );
                        coef * monomial_norm_sq_projective(a, m).unwrap()
                    })
                    .sum();
                assert_eq!(total, BigRational::from_integer(basis.len().into()));
            }
        }
    }

    #[test]
    fn ball_norms() {
        assert_eq!(monomial_norm_sq_ball(&mi(&[0, 0]), 0.5, 2).unwrap(), 1.0);
        assert!((monomial_norm_sq_ball(&mi(&[1]), 0.0, 1).unwrap() - 0.5).abs() < 1e-15);
        assert!((monomial_norm_sq_ball(&mi(&[1, 0]), 1.0, 2).unwrap() - 0.25).abs() < 1e-15);
        assert!(monomial_norm_sq_ball(&mi(&[1]), -1.0, 1).is_err());
    }

    /// Disk oracle: `∫ |z|^{2a} dA/π` by midpoint rule in the radius.
    #[test]
    fn ball_norm_matches_radial_quadrature() {
        let steps = 200_000;
        let h = 1.0 / steps as f64;
        let integral: f64 = (0..steps)
            .map(|i| {
                let r = (i as f64 + 0.5) * h;
                2.0 * r * r * r * h
            })
            .sum();
        assert!((integral - monomial_norm_sq_ball(&mi(&[1]), 0.0, 1).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn partition_blocks() {
        let k = Partition::new(vec![2, 1, 3]).unwrap();
        assert_eq!(k.n(), 6);
        assert_eq!(k.block(2), 3..6);
        assert_eq!(k.block_of(0), 0);
        assert_eq!(k.block_of(2), 1);
        assert_eq!(k.block_of(5), 2);
        assert_eq!(k.block_degrees(&mi(&[1, 2, 0, 1, 1, 1])), vec![3, 0, 3]);
        assert!(Partition::new(vec![]).is_err());
        assert!(Partition::new(vec![2, 0]).is_err());
    }

    #[test]
    fn shift_modes() {
        let k = Partition::new(vec![2, 1]).unwrap();
        assert!(ShiftVector::new(vec![1, -1, 0], ShiftMode::BlockwiseZero, &k).is_ok());
        assert!(ShiftVector::new(vec![1, 0, -1], ShiftMode::BlockwiseZero, &k).is_err());
        assert!(ShiftVector::new(vec![1, 0, -1], ShiftMode::TotalZero, &k).is_ok());
        assert!(ShiftVector::new(vec![1, 0, 0], ShiftMode::TotalZero, &k).is_err());
        assert_eq!(ShiftVector::classify(vec![1, 0, -1], &k).unwrap().mode(), ShiftMode::TotalZero);
    }

    #[test]
    fn decompose_examples() {
        let c = Complex64::new;
        let k2 = Partition::single(2).unwrap();
        let d = decompose(&[c(1.0, 0.0), c(0.0, 0.0)], &k2);
        assert_eq!(d.r, vec![1.0]);
        assert_eq!(d.s, vec![vec![1.0, 0.0]]);
        assert_eq!(d.t, vec![c(1.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(d.sigma, vec![1.0, 0.0]);

        let k11 = Partition::new(vec![1, 1]).unwrap();
        let d = decompose(&[c(1.0, 0.0), c(1.0, 0.0)], &k11);
        assert_eq!(d.r, vec![1.0, 1.0]);
        assert_eq!(d.s, vec![vec![1.0], vec![1.0]]);
        let h = 0.5f64.sqrt();
        assert!(d.sigma.iter().all(|&x| (x - h).abs() < 1e-15));

        let d = decompose(&[c(0.0, 3.0), c(4.0, 0.0)], &k2);
        assert_eq!(d.r, vec![5.0]);
        assert_eq!(d.s, vec![vec![0.6, 0.8]]);
        assert_eq!(d.t, vec![c(0.0, 1.0), c(1.0, 0.0)]);
        assert_eq!(d.sigma, vec![0.6, 0.8]);
    }

    #[test]
    fn zero_block_gets_uniform_direction() {
        let c = Complex64::new;
        let k = Partition::new(vec![1, 2]).unwrap();
        let d = decompose(&[c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)], &k);
        assert_eq!(d.r, vec![2.0, 0.0]);
        let u = 0.5f64.sqrt();
        assert!(d.s[1].iter().all(|&x| (x - u).abs() < 1e-15));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn decompose_reconstructs(
                parts in proptest::collection::vec(1usize..=3, 1..=3),
                seed in proptest::collection::vec((0.05f64..3.0, -3.2f64..3.2), 9),
            ) {
                let k = Partition::new(parts).unwrap();
                let z: Vec<Complex64> = seed[..k.n()].iter().map(|&(m, a)| Complex64::from_polar(m, a)).collect();
                let d = decompose(&z, &k);
                for (a, b) in d.reconstruct().iter().zip(&z) {
                    prop_assert!((a - b).norm() <= 1e-14 * b.norm().max(1.0));
                }
                for s in &d.s {
                    let sum: f64 = s.iter().map(|x| x * x).sum();
                    prop_assert!((sum - 1.0).abs() < 1e-14);
                }
                let ss: f64 = d.sigma.iter().map(|x| x * x).sum();
                prop_assert!((ss - 1.0).abs() < 1e-14);
                prop_assert!(d.t.iter().all(|t| (t.norm() - 1.0).abs() < 1e-15));
            }
        }
    }
}
