//! Nonlinear products by the pseudo-spectral rule: transform to the grid,
//! multiply pointwise, transform back, truncate by the 2/3 mask. For
//! inputs whose spectra sit inside the mask, every aliased product mode
//! lands outside it, so the truncated result is exact.

use rustfft::num_complex::Complex;

use crate::error::Result;
use crate::spectral::ops::{curl, dealias};
use crate::spectral::{
    forward_into, forward_packed, inverse_into, inverse_packed, Grid, VectorField,
};

type C64 = Complex<f64>;

fn real_buffers(len: usize) -> [Vec<f64>; 3] {
    [vec![0.0; len], vec![0.0; len], vec![0.0; len]]
}

/// Real samples of all three components, two per complex transform.
fn realize(grid: &Grid, v: &VectorField, out: &mut [Vec<f64>; 3], work: &mut [C64]) {
    let [r0, r1, r2] = out;
    inverse_packed(grid, v.comp(0), v.comp(1), r0, r1, work);
    inverse_into(grid, v.comp(2), r2, work);
}

/// Forward transforms of three real components into a vector field.
fn spectralize(grid: &Grid, samples: &[Vec<f64>; 3], out: &mut VectorField, work: &mut [C64]) {
    let [c0, c1, c2] = out.comps_mut();
    forward_packed(grid, &samples[0], &samples[1], c0, c1, work);
    forward_into(grid, &samples[2], c2, work);
}

/// Spectral partial derivative into a caller buffer: `dst = i xi_axis src`.
fn derivative_coeffs(grid: &Grid, src: &[C64], axis: usize, dst: &mut [C64]) {
    let n = grid.n();
    for i in 0..n {
        for j in 0..n {
            let base = grid.idx(i, j, 0);
            let xi_ij = match axis {
                0 => grid.wavenumber(i),
                1 => grid.wavenumber(j),
                _ => 0.0,
            };
            for k in 0..n {
                let xi = if axis == 2 { grid.wavenumber(k) } else { xi_ij };
                let z = src[base + k] * xi;
                dst[base + k] = C64::new(-z.im, z.re);
            }
        }
    }
}

/// Advective derivative `(a . grad) v`: all nine gradient components are
/// sampled on the grid, contracted against the samples of `a`, and the
/// result transformed back and truncated.
pub fn advect(a: &VectorField, v: &VectorField) -> Result<VectorField> {
    let grid = a.grid().clone();
    grid.same_grid(v.grid())?;
    let len = grid.len();
    let mut work = vec![C64::default(); len];
    let mut a_real = real_buffers(len);
    realize(&grid, a, &mut a_real, &mut work);

    let mut spec = [vec![C64::default(); len], vec![C64::default(); len]];
    let mut deriv = real_buffers(len);
    let mut acc = real_buffers(len);
    for axis in 0..3 {
        derivative_coeffs(&grid, v.comp(0), axis, &mut spec[0]);
        derivative_coeffs(&grid, v.comp(1), axis, &mut spec[1]);
        {
            let [d0, d1, _] = &mut deriv;
            inverse_packed(&grid, &spec[0], &spec[1], d0, d1, &mut work);
        }
        derivative_coeffs(&grid, v.comp(2), axis, &mut spec[0]);
        {
            let [_, _, d2] = &mut deriv;
            inverse_into(&grid, &spec[0], d2, &mut work);
        }
        let transport = &a_real[axis];
        for c in 0..3 {
            for ((o, s), d) in acc[c].iter_mut().zip(transport.iter()).zip(deriv[c].iter()) {
                *o += s * d;
            }
        }
    }
    let mut out = VectorField::zeros(grid.clone());
    spectralize(&grid, &acc, &mut out, &mut work);
    dealias(&mut out);
    Ok(out)
}

/// Pointwise cross product `a x b`, transformed back and truncated. When
/// `a` and `b` hold identical coefficients the sampled factors coincide
/// termwise, so the result is exactly zero.
pub fn cross(a: &VectorField, b: &VectorField) -> Result<VectorField> {
    let grid = a.grid().clone();
    grid.same_grid(b.grid())?;
    let len = grid.len();
    let mut work = vec![C64::default(); len];
    let mut ra = real_buffers(len);
    let mut rb = real_buffers(len);
    realize(&grid, a, &mut ra, &mut work);
    realize(&grid, b, &mut rb, &mut work);
    let mut prod = real_buffers(len);
    for idx in 0..len {
        let x = [ra[0][idx], ra[1][idx], ra[2][idx]];
        let y = [rb[0][idx], rb[1][idx], rb[2][idx]];
        prod[0][idx] = x[1] * y[2] - x[2] * y[1];
        prod[1][idx] = x[2] * y[0] - x[0] * y[2];
        prod[2][idx] = x[0] * y[1] - x[1] * y[0];
    }
    let mut out = VectorField::zeros(grid.clone());
    spectralize(&grid, &prod, &mut out, &mut work);
    dealias(&mut out);
    Ok(out)
}

/// `curl((curl b) x b)`, the Hall nonlinearity without its coefficient.
/// The inner product is truncated before the outer curl; the output is
/// divergence-free because the curl symbol is.
pub fn hall_term(b: &VectorField) -> Result<VectorField> {
    let j = curl(b);
    let jxb = cross(&j, b)?;
    Ok(curl(&jxb))
}

/// Pointwise product of real scalar samples with a vector field. The
/// caller picks truncation: cutoff products feeding quadratures are
/// wanted untruncated, products feeding evolution are not.
pub fn scalar_vector_product(scalar: &[f64], v: &VectorField, truncate: bool) -> VectorField {
    let grid = v.grid().clone();
    assert_eq!(scalar.len(), grid.len());
    let len = grid.len();
    let mut work = vec![C64::default(); len];
    let mut rv = real_buffers(len);
    realize(&grid, v, &mut rv, &mut work);
    for comp in rv.iter_mut() {
        for (s, &w) in comp.iter_mut().zip(scalar.iter()) {
            *s *= w;
        }
    }
    let mut out = VectorField::zeros(grid.clone());
    spectralize(&grid, &rv, &mut out, &mut work);
    if truncate {
        dealias(&mut out);
    }
    out
}
