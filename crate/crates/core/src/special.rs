//! Gamma-function helpers.

/// `Γ(x)`
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `Π Γ(num_i) / Π Γ(den_i)`.
///
/// Multiplies the gamma values directly when they are representable, which
/// keeps the result within a few ulps; otherwise sums logarithms.
pub fn gamma_ratio(num: &[f64], den: &[f64]) -> f64 {
    if num.iter().chain(den).all(|&x| x > 0.0 && x < 170.0) {
        let mut acc = 1.0;
        for i in 0..num.len().max(den.len()) {
            if let Some(&x) = num.get(i) {
                acc *= gamma(x);
            }
            if let Some(&x) = den.get(i) {
                acc /= gamma(x);
            }
        }
        if acc.is_finite() && acc != 0.0 {
            return acc;
        }
    }
    let ln: f64 = num.iter().map(|&x| ln_gamma(x)).sum::<f64>() - den.iter().map(|&x| ln_gamma(x)).sum::<f64>();
    ln.exp()
}

/// `Π Γ(a_l + 1) · Γ(a0 + 1) / Γ(d + 1 + Σa_l + a0)`: the Dirichlet integral
/// `∫_{Δ_d} Π x_l^{a_l} (1 − Σx)^{a0} dx`.
pub fn dirichlet(a: &[f64], a0: f64) -> f64 {
    let d = a.len() as f64;
    let sum: f64 = a.iter().sum::<f64>() + a0;
    let num: Vec<f64> = a.iter().chain(std::iter::once(&a0)).map(|&x| x + 1.0).collect();
    gamma_ratio(&num, &[d + 1.0 + sum])
}

/// `B(x, y)`
pub fn beta(x: f64, y: f64) -> f64 {
    gamma_ratio(&[x, y], &[x + y])
}
