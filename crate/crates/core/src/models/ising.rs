//! Transverse-field Ising chain as a free-fermion model.

/// Single-particle dispersion `e(λ, h) = 2 sqrt((cos λ − h)² + sin² λ)`.
pub fn ising_dispersion(lambda: f64, h: f64) -> f64 {
    let (s, c) = lambda.sin_cos();
    2.0 * ((c - h) * (c - h) + s * s).sqrt()
}

/// `∂_h e`. Set to zero at the gap-closing point where `e` vanishes.
pub fn ising_dfield_dispersion(lambda: f64, h: f64) -> f64 {
    let e = ising_dispersion(lambda, h);
    if e == 0.0 {
        0.0
    } else {
        4.0 * (h - lambda.cos()) / e
    }
}

/// `∂_λ e`. Set to zero where `e` vanishes.
pub fn ising_dlambda_dispersion(lambda: f64, h: f64) -> f64 {
    let e = ising_dispersion(lambda, h);
    if e == 0.0 {
        0.0
    } else {
        4.0 * h * lambda.sin() / e
    }
}
