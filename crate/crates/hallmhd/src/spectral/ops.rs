//! Fourier-multiplier calculus: derivatives, Leray projection, dealiasing,
//! and the exact heat multiplier. All operations act mode-by-mode and
//! preserve Hermitian symmetry exactly (multipliers at `-m` are the
//! conjugates of those at `m`).

use rustfft::num_complex::Complex;

use super::field::{ScalarField, VectorField};

type C64 = Complex<f64>;

#[inline]
fn mul_i(z: C64) -> C64 {
    C64::new(-z.im, z.re)
}

/// Spectral partial derivative along one axis: multiplier `i xi_axis`.
pub fn partial(f: &ScalarField, axis: usize) -> ScalarField {
    let grid = f.grid().clone();
    let n = grid.n();
    let mut out = f.clone();
    let data = out.coeffs_mut();
    for i in 0..n {
        for j in 0..n {
            let base = grid.idx(i, j, 0);
            for k in 0..n {
                let xi = match axis {
                    0 => grid.wavenumber(i),
                    1 => grid.wavenumber(j),
                    _ => grid.wavenumber(k),
                };
                data[base + k] = mul_i(data[base + k]) * xi;
            }
        }
    }
    out
}

/// Gradient of a scalar field.
pub fn gradient(f: &ScalarField) -> VectorField {
    let grid = f.grid().clone();
    let n = grid.n();
    let mut out = VectorField::zeros(grid.clone());
    for i in 0..n {
        let xi0 = grid.wavenumber(i);
        for j in 0..n {
            let xi1 = grid.wavenumber(j);
            let base = grid.idx(i, j, 0);
            for k in 0..n {
                let xi2 = grid.wavenumber(k);
                let v = mul_i(f.coeffs()[base + k]);
                out.comp_mut(0)[base + k] = v * xi0;
                out.comp_mut(1)[base + k] = v * xi1;
                out.comp_mut(2)[base + k] = v * xi2;
            }
        }
    }
    out
}

/// Curl of a vector field: `(i xi) x v`.
pub fn curl(v: &VectorField) -> VectorField {
    let grid = v.grid().clone();
    let n = grid.n();
    let mut out = VectorField::zeros(grid.clone());
    for i in 0..n {
        let xi0 = grid.wavenumber(i);
        for j in 0..n {
            let xi1 = grid.wavenumber(j);
            let base = grid.idx(i, j, 0);
            for k in 0..n {
                let idx = base + k;
                let xi2 = grid.wavenumber(k);
                let [a, b, c] = [v.comp(0)[idx], v.comp(1)[idx], v.comp(2)[idx]];
                out.comp_mut(0)[idx] = mul_i(c * xi1 - b * xi2);
                out.comp_mut(1)[idx] = mul_i(a * xi2 - c * xi0);
                out.comp_mut(2)[idx] = mul_i(b * xi0 - a * xi1);
            }
        }
    }
    out
}

/// Divergence of a vector field: `i xi . v`.
pub fn divergence(v: &VectorField) -> ScalarField {
    let grid = v.grid().clone();
    let n = grid.n();
    let mut out = ScalarField::zeros(grid.clone());
    for i in 0..n {
        let xi0 = grid.wavenumber(i);
        for j in 0..n {
            let xi1 = grid.wavenumber(j);
            let base = grid.idx(i, j, 0);
            for k in 0..n {
                let idx = base + k;
                let xi2 = grid.wavenumber(k);
                let s = v.comp(0)[idx] * xi0 + v.comp(1)[idx] * xi1 + v.comp(2)[idx] * xi2;
                out.coeffs_mut()[idx] = mul_i(s);
            }
        }
    }
    out
}

/// Zero-order square root of the (negative) Laplacian: multiplier `|xi|`.
pub fn sqrt_neg_laplacian(v: &VectorField) -> VectorField {
    let grid = v.grid().clone();
    let n = grid.n();
    let mut out = v.clone();
    for i in 0..n {
        let x0 = grid.wavenumber(i);
        for j in 0..n {
            let x1 = grid.wavenumber(j);
            let base = grid.idx(i, j, 0);
            for k in 0..n {
                let x2 = grid.wavenumber(k);
                let mag = (x0 * x0 + x1 * x1 + x2 * x2).sqrt();
                let idx = base + k;
                for c in 0..3 {
                    out.comp_mut(c)[idx] *= mag;
                }
            }
        }
    }
    out
}

/// Leray projection onto divergence-free fields:
/// `v - xi (xi . v) / |xi|^2` mode-by-mode; the mean mode is untouched.
pub fn leray_project(v: &VectorField) -> VectorField {
    let mut out = v.clone();
    leray_project_in_place(&mut out);
    out
}

pub fn leray_project_in_place(v: &mut VectorField) {
    let grid = v.grid().clone();
    let n = grid.n();
    let comps = v.comps_mut();
    for i in 0..n {
        let x0 = grid.wavenumber(i);
        for j in 0..n {
            let x1 = grid.wavenumber(j);
            let base = grid.idx(i, j, 0);
            for k in 0..n {
                let x2 = grid.wavenumber(k);
                let q = x0 * x0 + x1 * x1 + x2 * x2;
                if q == 0.0 {
                    continue;
                }
                let idx = base + k;
                let dot = comps[0][idx] * x0 + comps[1][idx] * x1 + comps[2][idx] * x2;
                let s = dot / q;
                comps[0][idx] -= s * x0;
                comps[1][idx] -= s * x1;
                comps[2][idx] -= s * x2;
            }
        }
    }
}

/// Strict 2/3-rule truncation: zero every coefficient with any axis mode
/// `|m| >= n/3`.
pub fn dealias(v: &mut VectorField) {
    let grid = v.grid().clone();
    let n = grid.n();
    let comps = v.comps_mut();
    for i in 0..n {
        let ki = grid.keep_axis(i);
        for j in 0..n {
            let kij = ki && grid.keep_axis(j);
            let base = grid.idx(i, j, 0);
            for k in 0..n {
                if !(kij && grid.keep_axis(k)) {
                    let idx = base + k;
                    comps[0][idx] = C64::default();
                    comps[1][idx] = C64::default();
                    comps[2][idx] = C64::default();
                }
            }
        }
    }
}

pub fn dealias_scalar(f: &mut ScalarField) {
    let grid = f.grid().clone();
    let n = grid.n();
    let data = f.coeffs_mut();
    for i in 0..n {
        let ki = grid.keep_axis(i);
        for j in 0..n {
            let kij = ki && grid.keep_axis(j);
            let base = grid.idx(i, j, 0);
            for k in 0..n {
                if !(kij && grid.keep_axis(k)) {
                    data[base + k] = C64::default();
                }
            }
        }
    }
}

/// Exact heat multiplier `exp(-tau |xi|^2)`; `tau = kappa * t`.
pub fn apply_heat(v: &mut VectorField, tau: f64) {
    let grid = v.grid().clone();
    let n = grid.n();
    let comps = v.comps_mut();
    for i in 0..n {
        let x0 = grid.wavenumber(i);
        for j in 0..n {
            let x1 = grid.wavenumber(j);
            let base = grid.idx(i, j, 0);
            for k in 0..n {
                let x2 = grid.wavenumber(k);
                let q = x0 * x0 + x1 * x1 + x2 * x2;
                let m = (-tau * q).exp();
                let idx = base + k;
                comps[0][idx] *= m;
                comps[1][idx] *= m;
                comps[2][idx] *= m;
            }
        }
    }
}

/// Derivative for a full multi-index: multiplier `(i xi)^alpha`.
pub fn multi_derivative(v: &VectorField, alpha: [u8; 3]) -> VectorField {
    let grid = v.grid().clone();
    let n = grid.n();
    let order: u8 = alpha[0] + alpha[1] + alpha[2];
    let mut out = v.clone();
    let comps = out.comps_mut();
    for i in 0..n {
        let x0 = grid.wavenumber(i);
        for j in 0..n {
            let x1 = grid.wavenumber(j);
            let base = grid.idx(i, j, 0);
            for k in 0..n {
                let x2 = grid.wavenumber(k);
                let mag = x0.powi(alpha[0] as i32)
                    * x1.powi(alpha[1] as i32)
                    * x2.powi(alpha[2] as i32);
                let idx = base + k;
                for c in 0..3 {
                    let z = comps[c][idx] * mag;
                    comps[c][idx] = match order % 4 {
                        0 => z,
                        1 => mul_i(z),
                        2 => -z,
                        _ => -mul_i(z),
                    };
                }
            }
        }
    }
    out
}
