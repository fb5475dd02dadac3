//! Moment maps of `ℙⁿ(ℂ)`, the Delzant simplex, and orbit-sampling checks of
//! the symbol-class invariances.
//!
//! Points are homogeneous coordinates `w = (w_0, …, w_n)`; symbols are
//! evaluated at the affine point `z = (w_1, …, w_n)/w_0`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, validation, Error, Result};
use crate::indexcore::Partition;
use crate::symbolexpr::{CompiledSymbol, SymbolSpec};

/// Coordinates below this modulus are resampled.
pub const MIN_MODULUS: f64 = 1e-8;
pub const MOMENT_TOL: f64 = 1e-14;

/// `ℓ + 1` (or `n + 1`) nonnegative reals summing to `1/2`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentValue {
    pub coords: Vec<f64>,
}

/// A point of `Δ_d`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PolytopePoint {
    pub coords: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TorusAction {
    FullTorus,
    PartitionTorus,
}

fn norm_sq(w: &[Complex64]) -> f64 {
    w.iter().map(Complex64::norm_sqr).sum()
}

/// `(|w_0|², …, |w_n|²) / (2|w|²)`.
pub fn moment_map_full(w: &[Complex64]) -> Result<MomentValue> {
    let total = norm_sq(w);
    if total == 0.0 {
        return Err(domain("moment map undefined at w = 0"));
    }
    Ok(MomentValue { coords: w.iter().map(|x| x.norm_sqr() / (2.0 * total)).collect() })
}

/// `(|w_0|², |w_(1)|², …, |w_(ℓ)|²) / (2|w|²)`.
pub fn moment_map_partition(w: &[Complex64], k: &Partition) -> Result<MomentValue> {
    check_len(w, k)?;
    let total = norm_sq(w);
    if total == 0.0 {
        return Err(domain("moment map undefined at w = 0"));
    }
    let mut coords = vec![w[0].norm_sqr() / (2.0 * total)];
    for j in 0..k.len() {
        let r = k.block(j);
        coords.push(norm_sq(&w[r.start + 1..r.end + 1]) / (2.0 * total));
    }
    Ok(MomentValue { coords })
}

/// Drops the 0-th coordinate and rescales by 2.
pub fn to_delzant(mu: &MomentValue) -> Result<PolytopePoint> {
    let sum: f64 = mu.coords.iter().sum();
    if (sum - 0.5).abs() > MOMENT_TOL || mu.coords.iter().any(|&c| c < -MOMENT_TOL) {
        return Err(Error::Numerical(format!("moment value {:?} is off the level set 1/2", mu.coords)));
    }
    let coords: Vec<f64> = mu.coords[1..].iter().map(|&c| 2.0 * c).collect();
    if coords.iter().sum::<f64>() > 1.0 + MOMENT_TOL {
        return Err(Error::Numerical(format!("{coords:?} lies outside the simplex")));
    }
    Ok(PolytopePoint { coords })
}

fn check_len(w: &[Complex64], k: &Partition) -> Result<()> {
    if w.len() != k.n() + 1 {
        return Err(validation(format!("expected {} homogeneous coordinates, got {}", k.n() + 1, w.len())));
    }
    Ok(())
}

fn affine(w: &[Complex64]) -> Vec<Complex64> {
    w[1..].iter().map(|x| x / w[0]).collect()
}

fn gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Standard complex Gaussian point with every coordinate of modulus ≥ [`MIN_MODULUS`].
pub fn sample_point(rng: &mut ChaCha8Rng, len: usize) -> Vec<Complex64> {
    (0..len)
        .map(|_| loop {
            let x = gaussian(rng);
            if x.norm() >= MIN_MODULUS {
                break x;
            }
        })
        .collect()
}

fn unit(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::from_polar(1.0, std::f64::consts::TAU * rng.random::<f64>())
}

/// Haar-distributed `d × d` unitary from the QR factorization of a complex Gaussian matrix.
pub fn random_unitary(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(d, d, |_, _| gaussian(rng));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        let rjj = r[(j, j)];
        if rjj.norm() > 0.0 {
            let ph = rjj / rjj.norm();
            for i in 0..d {
                q[(i, j)] *= ph;
            }
        }
    }
    q
}

/// Blocks of the homogeneous coordinates: `{0}` followed by the shifted partition blocks.
fn homogeneous_blocks(k: &Partition) -> Vec<std::ops::Range<usize>> {
    std::iter::once(0..1).chain((0..k.len()).map(|j| {
        let r = k.block(j);
        r.start + 1..r.end + 1
    }))
    .collect()
}

/// `t·w` for a random element of the chosen torus.
pub fn torus_act(rng: &mut ChaCha8Rng, w: &[Complex64], k: &Partition, action: TorusAction) -> Vec<Complex64> {
    match action {
        TorusAction::FullTorus => w.iter().map(|&x| x * unit(rng)).collect(),
        TorusAction::PartitionTorus => {
            let mut out = w.to_vec();
            for r in homogeneous_blocks(k) {
                let t = unit(rng);
                out[r].iter_mut().for_each(|x| *x *= t);
            }
            out
        }
    }
}

/// Applies an independent random unitary to each homogeneous block.
pub fn block_unitary_act(rng: &mut ChaCha8Rng, w: &[Complex64], k: &Partition) -> Vec<Complex64> {
    let mut out = w.to_vec();
    for r in homogeneous_blocks(k) {
        let u = random_unitary(rng, r.len());
        let v = nalgebra::DVector::from_column_slice(&w[r.clone()]);
        let uv = u * v;
        out[r].copy_from_slice(uv.as_slice());
    }
    out
}

fn eval_at(sym: &CompiledSymbol, w: &[Complex64]) -> Result<Complex64> {
    sym.eval(&affine(w))
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(trial as u64))
}

fn max_over_trials<F>(trials: usize, f: F) -> Result<f64>
where
    F: Fn(usize) -> Result<f64> + Sync,
{
    if trials == 0 {
        return Err(validation("trial count must be at least 1"));
    }
    let devs: Vec<Result<f64>> = (0..trials).into_par_iter().map(&f).collect();
    devs.into_iter().try_fold(0.0_f64, |acc, d| Ok(acc.max(d?)))
}

/// `max |ψ(t·w) − ψ(w)|` over sampled points and torus elements.
pub fn invariance_check(psi: &SymbolSpec, k: &Partition, action: TorusAction, trials: usize, seed: u64) -> Result<f64> {
    let sym = psi.compile(k)?;
    max_over_trials(trials, |i| {
        let mut rng = trial_rng(seed, i);
        let w = sample_point(&mut rng, k.n() + 1);
        let tw = torus_act(&mut rng, &w, k, action);
        Ok((eval_at(&sym, &tw)? - eval_at(&sym, &w)?).norm())
    })
}

/// `max |a(w) − a(w′)|` with `w′ = U·t·w`, `U` block-diagonal unitary and
/// `t` in the partition torus. Both preserve `μ_ℓ`.
pub fn factorization_check(a: &SymbolSpec, k: &Partition, pairs: usize, seed: u64) -> Result<f64> {
    let sym = a.compile(k)?;
    max_over_trials(pairs, |i| {
        let mut rng = trial_rng(seed, i);
        let w = sample_point(&mut rng, k.n() + 1);
        let tw = torus_act(&mut rng, &w, k, TorusAction::PartitionTorus);
        let uw = block_unitary_act(&mut rng, &tw, k);
        Ok((eval_at(&sym, &uw)? - eval_at(&sym, &w)?).norm())
    })
}

/// `|ψ(w′) − ψ(w)|` at a fixed pair of points.
pub fn pair_deviation(psi: &SymbolSpec, k: &Partition, w: &[Complex64], w2: &[Complex64]) -> Result<f64> {
    check_len(w, k)?;
    check_len(w2, k)?;
    let sym = psi.compile(k)?;
    Ok((eval_at(&sym, w2)? - eval_at(&sym, w)?).norm())
}

/// Worst violation of the moment-map invariants over sampled points: level
/// set, Delzant membership, and constancy of `μ_ℓ` on torus and block-unitary orbits.
pub fn moment_map_audit(k: &Partition, trials: usize, seed: u64) -> Result<f64> {
    max_over_trials(trials, |i| {
        let mut rng = trial_rng(seed, i);
        let w = sample_point(&mut rng, k.n() + 1);
        let full = moment_map_full(&w)?;
        let p = to_delzant(&full)?;
        let mut dev = (full.coords.iter().sum::<f64>() - 0.5).abs();
        dev = dev.max(p.coords.iter().map(|&c| (-c).max(0.0)).fold(0.0, f64::max));
        let mu = moment_map_partition(&w, k)?;
        let tw = torus_act(&mut rng, &w, k, TorusAction::PartitionTorus);
        let uw = block_unitary_act(&mut rng, &w, k);
        for other in [&tw, &uw] {
            let mv = moment_map_partition(other, k)?;
            for (a, b) in mu.coords.iter().zip(&mv.coords) {
                dev = dev.max((a - b).abs());
            }
        }
        Ok(dev)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolexpr::parse;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn moment_examples() {
        let mu = moment_map_full(&[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(mu.coords, vec![0.5, 0.0, 0.0]);
        assert_eq!(to_delzant(&mu).unwrap().coords, vec![0.0, 0.0]);
        let mu = moment_map_full(&[c(1.0, 0.0); 4]).unwrap();
        assert!(mu.coords.iter().all(|&x| (x - 0.125).abs() < 1e-16));
        assert!(to_delzant(&mu).unwrap().coords.iter().all(|&x| (x - 0.25).abs() < 1e-16));
        let w = [c(1.0, 2.0), c(-0.5, 0.1), c(3.0, 0.0)];
        let w5: Vec<_> = w.iter().map(|x| x * c(0.0, 5.0)).collect();
        let (a, b) = (moment_map_full(&w).unwrap(), moment_map_full(&w5).unwrap());
        assert!(a.coords.iter().zip(&b.coords).all(|(x, y)| (x - y).abs() < 1e-16));
        assert!(moment_map_full(&[c(0.0, 0.0)]).is_err());
        let vertex = MomentValue { coords: vec![0.0, 0.5, 0.0] };
        assert_eq!(to_delzant(&vertex).unwrap().coords, vec![1.0, 0.0]);
        assert!(to_delzant(&MomentValue { coords: vec![0.3, 0.3] }).is_err());
    }

    #[test]
    fn partition_moment() {
        let k = Partition::single(2).unwrap();
        let mu = moment_map_partition(&[c(1.0, 0.0), c(0.0, 3.0), c(4.0, 0.0)], &k).unwrap();
        assert!((mu.coords[0] - 1.0 / 52.0).abs() < 1e-16);
        assert!((mu.coords[1] - 25.0 / 52.0).abs() < 1e-16);
        let k = Partition::new(vec![2, 1]).unwrap();
        assert!(moment_map_audit(&k, 200, 5).unwrap() < 1e-13);
    }

    #[test]
    fn unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_unitary(&mut rng, 3);
        let id = u.adjoint() * &u;
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((id[(i, j)] - want).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn class_invariances() {
        let k = Partition::new(vec![2, 1]).unwrap();
        let ms = SymbolSpec::MultiSphere { block: 0, b: parse("s1^2*s2").unwrap(), p: vec![0, 0] };
        assert!(invariance_check(&ms, &k, TorusAction::FullTorus, 300, 1).unwrap() <= 1e-12);
        let ph = SymbolSpec::Phase { p: vec![1, -1, 0] };
        assert!(invariance_check(&ph, &k, TorusAction::PartitionTorus, 300, 2).unwrap() <= 1e-12);
        assert!(invariance_check(&ph, &k, TorusAction::FullTorus, 300, 2).unwrap() > 0.1);
        let a = SymbolSpec::QuasiRadial { a: parse("r1^2/(r1^2+r2^2)").unwrap() };
        assert!(factorization_check(&a, &k, 300, 4).unwrap() <= 1e-12);
    }

    #[test]
    fn frozen_witnesses() {
        let k = Partition::single(2).unwrap();
        let ph = SymbolSpec::Phase { p: vec![1, -1] };
        let w = [c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)];
        let tw = [c(1.0, 0.0), c(0.0, 1.0), c(1.0, 0.0)];
        assert!((pair_deviation(&ph, &k, &w, &tw).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let fake = SymbolSpec::MultiSphere { block: 0, b: parse("s1^2").unwrap(), p: vec![0, 0] };
        let w = [c(1.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)];
        let swapped = [c(1.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)];
        assert!((pair_deviation(&fake, &k, &w, &swapped).unwrap() - 0.6).abs() < 1e-15);
        assert!(pair_deviation(&fake, &k, &w, &w).unwrap() == 0.0);
    }
}
