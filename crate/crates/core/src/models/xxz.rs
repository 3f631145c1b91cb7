//! Bare string data of the easy-axis XXZ chain, parametrised by
//! `θ = arccosh Δ`.
//!
//! All functions here describe the branch `J = −1`, `Δ > 1`. Other signs are
//! reached through [`crate::models::Model`].

use std::f64::consts::PI;

use crate::error::{Error, Result};

fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "theta must be positive and finite (easy-axis regime), got {theta}"
        )))
    }
}

/// `p_n(λ) = 2 arctan(coth(nθ/2) tan λ)` on its continuous branch, so that
/// `p_n(λ + π) = p_n(λ) + 2π`.
pub(crate) fn p(n: usize, theta: f64, lambda: f64) -> f64 {
    let c = 1.0 / (0.5 * n as f64 * theta).tanh();
    let k = (lambda / PI).round();
    let y = lambda - k * PI;
    let (s, co) = y.sin_cos();
    2.0 * (c * s).atan2(co) + 2.0 * PI * k
}

/// `∂_λ p_n = 2 sinh(nθ) / (cosh(nθ) − cos 2λ)`.
pub(crate) fn dp(n: usize, theta: f64, lambda: f64) -> f64 {
    let nt = n as f64 * theta;
    2.0 * nt.sinh() / (nt.cosh() - (2.0 * lambda).cos())
}

/// `∂_θ p_n = −n sin 2λ / (cosh(nθ) − cos 2λ)`.
pub(crate) fn dtheta_p(n: usize, theta: f64, lambda: f64) -> f64 {
    let nt = n as f64 * theta;
    -(n as f64) * (2.0 * lambda).sin() / (nt.cosh() - (2.0 * lambda).cos())
}

/// `-(n/2) ln(cosh(nθ) − cos 2λ)`, an antiderivative of `∂_θ p_n` in `λ`.
pub(crate) fn dtheta_p_antiderivative(n: usize, theta: f64, lambda: f64) -> f64 {
    let nt = n as f64 * theta;
    -0.5 * n as f64 * (nt.cosh() - (2.0 * lambda).cos()).ln()
}

/// Sum over the string-pair index set of the scattering phase:
/// `(1−δ_jk) g(|j−k|) + g(j+k) + 2 Σ_{l=1}^{min(j,k)−1} g(|j−k|+2l)`.
pub(crate) fn pair_sum(j: usize, k: usize, g: impl Fn(usize) -> f64) -> f64 {
    let d = j.abs_diff(k);
    let mut s = g(j + k);
    if d != 0 {
        s += g(d);
    }
    for l in 1..j.min(k) {
        s += 2.0 * g(d + 2 * l);
    }
    s
}

/// Momentum of a `j`-string.
pub fn xxz_string_momentum(lambda: f64, j: usize, theta: f64) -> Result<f64> {
    check_theta(theta)?;
    check_length(j)?;
    Ok(p(j, theta, lambda))
}

/// Energy of a `j`-string, `e_j = −½ sinh θ ∂_λ p_j`.
pub fn xxz_string_energy(lambda: f64, j: usize, theta: f64) -> Result<f64> {
    check_theta(theta)?;
    check_length(j)?;
    Ok(energy(j, theta, lambda))
}

/// Scattering phase `Θ_{j,k}`, including the `1/2π` normalisation.
pub fn xxz_scattering_phase(lambda: f64, j: usize, k: usize, theta: f64) -> Result<f64> {
    check_theta(theta)?;
    check_length(j)?;
    check_length(k)?;
    Ok(pair_sum(j, k, |n| p(n, theta, lambda)) / (2.0 * PI))
}

/// Kernel `φ_{j,k} = ∂_λ Θ_{j,k}`.
pub fn xxz_kernel(lambda: f64, j: usize, k: usize, theta: f64) -> Result<f64> {
    check_theta(theta)?;
    check_length(j)?;
    check_length(k)?;
    Ok(pair_sum(j, k, |n| dp(n, theta, lambda)) / (2.0 * PI))
}

/// `∂_Δ Θ_{j,k}` at fixed `λ`, for `Δ = cosh θ`.
pub fn xxz_dchi_phase(lambda: f64, j: usize, k: usize, theta: f64) -> Result<f64> {
    check_theta(theta)?;
    check_length(j)?;
    check_length(k)?;
    Ok(pair_sum(j, k, |n| dtheta_p(n, theta, lambda)) / (2.0 * PI * theta.sinh()))
}

fn check_length(j: usize) -> Result<()> {
    if j == 0 {
        Err(Error::invalid("string length must be at least 1"))
    } else {
        Ok(())
    }
}

pub(crate) fn energy(j: usize, theta: f64, lambda: f64) -> f64 {
    -0.5 * theta.sinh() * dp(j, theta, lambda)
}

/// `∂_θ e_j`.
pub(crate) fn dtheta_energy(j: usize, theta: f64, lambda: f64) -> f64 {
    let jt = j as f64 * theta;
    let c2 = (2.0 * lambda).cos();
    let d = jt.cosh() - c2;
    -theta.cosh() * jt.sinh() / d - j as f64 * theta.sinh() * (1.0 - jt.cosh() * c2) / (d * d)
}

/// `∂_λ e_j`.
pub(crate) fn dlambda_energy(j: usize, theta: f64, lambda: f64) -> f64 {
    let jt = j as f64 * theta;
    let d = jt.cosh() - (2.0 * lambda).cos();
    2.0 * theta.sinh() * jt.sinh() * (2.0 * lambda).sin() / (d * d)
}
