//! Gauss–Jacobi rules on `[0, 1]` for the weight `ξ^a (1 − ξ)^b`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::special::gamma_ratio;

#[derive(Clone, Debug)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Golub–Welsch on the monic Jacobi recurrence with `(α, β) = (b, a)` on
/// `[−1, 1]`, followed by Newton polishing of the nodes and the map
/// `ξ = (1 + x)/2`.
fn build(q: usize, a: f64, b: f64) -> Rule {
    let (al, be) = (b, a);
    let ab = al + be;
    let mut t = DMatrix::<f64>::zeros(q, q);
    for k in 0..q {
        let kf = k as f64;
        let diag = if k == 0 {
            (be - al) / (ab + 2.0)
        } else {
            let s = 2.0 * kf + ab;
            (be * be - al * al) / (s * (s + 2.0))
        };
        t[(k, k)] = diag;
        if k + 1 < q {
            let k1 = kf + 1.0;
            let s = 2.0 * k1 + ab;
            let num = 4.0 * k1 * (k1 + al) * (k1 + be) * (k1 + ab);
            let den = s * s * (s + 1.0) * (s - 1.0);
            let off = (num / den).sqrt();
            t[(k, k + 1)] = off;
            t[(k + 1, k)] = off;
        }
    }
    let eig = SymmetricEigen::new(t);
    let mut x: Vec<f64> = (0..q).map(|i| polish(q, al, be, eig.eigenvalues[i])).collect();
    x.sort_by(f64::total_cmp);
    // w_i ∝ 1 / ((1 − x_i²) P'_q(x_i)²), scaled to the total mass
    let raw: Vec<f64> = x
        .iter()
        .map(|&xi| {
            let (_, dp) = jacobi_p(q, al, be, xi);
            1.0 / ((1.0 - xi) * (1.0 + xi) * dp * dp)
        })
        .collect();
    let mu = gamma_ratio(&[al + 1.0, be + 1.0], &[ab + 2.0]);
    let norm: f64 = raw.iter().sum();
    Rule {
        nodes: x.iter().map(|&xi| 0.5 * (1.0 + xi)).collect(),
        weights: raw.iter().map(|&w| mu * w / norm).collect(),
    }
}

/// Value and derivative of the degree-`q` Jacobi polynomial (any normalization).
fn jacobi_p(q: usize, al: f64, be: f64, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = 0.5 * (al - be + (al + be + 2.0) * x);
    if q == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=q {
        let kf = k as f64;
        let s = 2.0 * kf + al + be;
        let a1 = 2.0 * kf * (kf + al + be) * (s - 2.0);
        let a2 = (s - 1.0) * (al * al - be * be);
        let a3 = (s - 2.0) * (s - 1.0) * s;
        let a4 = 2.0 * (kf + al - 1.0) * (kf + be - 1.0) * s;
        let p2 = ((a2 + a3 * x) * p1 - a4 * p0) / a1;
        p0 = p1;
        p1 = p2;
    }
    let qf = q as f64;
    let s = 2.0 * qf + al + be;
    // (2q+α+β)(1−x²) P'_q = q[(α−β) − (2q+α+β)x] P_q + 2(q+α)(q+β) P_{q−1}
    let dp = (qf * ((al - be) - s * x) * p1 + 2.0 * (qf + al) * (qf + be) * p0) / (s * (1.0 - x * x));
    (p1, dp)
}

fn polish(q: usize, al: f64, be: f64, x0: f64) -> f64 {
    let mut x = x0;
    for _ in 0..3 {
        let (p, dp) = jacobi_p(q, al, be, x);
        if dp == 0.0 || !dp.is_finite() {
            break;
        }
        let step = p / dp;
        let next = x - step;
        if !(next > -1.0 && next < 1.0) || step.abs() > 1e-6 {
            break;
        }
        x = next;
        if step.abs() < 1e-16 {
            break;
        }
    }
    x
}

type Key = (usize, u64, u64);

/// Cached `q`-point rule for `∫₀¹ f(ξ) ξ^a (1 − ξ)^b dξ`.
pub fn gauss_jacobi(q: usize, a: f64, b: f64) -> Arc<Rule> {
    static CACHE: OnceLock<Mutex<HashMap<Key, Arc<Rule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (q, a.to_bits(), b.to_bits());
    if let Some(r) = cache.lock().expect("quadrature cache poisoned").get(&key) {
        return Arc::clone(r);
    }
    let rule = Arc::new(build(q, a, b));
    cache
        .lock()
        .expect("quadrature cache poisoned")
        .entry(key)
        .or_insert(rule)
        .clone()
}
