//! Sobolev, sup-norm, and spectral-L1 diagnostics.
//!
//! All reductions run in a fixed sequential mode order so repeated
//! evaluations are bitwise reproducible.

use rustfft::num_complex::Complex;

use crate::error::{Error, Result};
use crate::spectral::{inverse_into, inverse_packed, Grid, ScalarField, VectorField};

type C64 = Complex<f64>;

/// All multi-indices with `|alpha| <= max_order`, ordered by total order,
/// then lexicographically. The ordering is part of the determinism
/// contract for every consumer.
pub fn multi_indices(max_order: usize) -> Vec<[u8; 3]> {
    let mut out = Vec::new();
    for k in 0..=max_order {
        for a0 in (0..=k).rev() {
            for a1 in (0..=k - a0).rev() {
                let a2 = k - a0 - a1;
                out.push([a0 as u8, a1 as u8, a2 as u8]);
            }
        }
    }
    out
}

/// `k! / (a0! a1! a2!)` for `|alpha| = k`; fits comfortably in f64 for k <= 5.
pub fn multinomial(alpha: [u8; 3]) -> f64 {
    fn fact(n: u8) -> f64 {
        (1..=n as u64).product::<u64>() as f64
    }
    let k = alpha[0] + alpha[1] + alpha[2];
    fact(k) / (fact(alpha[0]) * fact(alpha[1]) * fact(alpha[2]))
}

/// `sum_{|alpha| <= m} xi^{2 alpha}`, each multi-index counted once.
/// Evaluated as nested geometric partial sums.
pub fn sobolev_weight(xi2: [f64; 3], m: usize) -> f64 {
    let [a, b, c] = xi2;
    // psc[t] = sum_{l <= t} c^l
    let mut psc = [0.0f64; 6];
    let mut cp = 1.0;
    let mut acc = 0.0;
    for slot in psc.iter_mut().take(m + 1) {
        acc += cp;
        *slot = acc;
        cp *= c;
    }
    let mut total = 0.0;
    let mut ap = 1.0;
    for i in 0..=m {
        let mut inner = 0.0;
        let mut bp = 1.0;
        for j in 0..=m - i {
            inner += bp * psc[m - i - j];
            bp *= b;
        }
        total += ap * inner;
        ap *= a;
    }
    total
}

fn weighted_spectral_sum<F>(grid: &Grid, mut weight: F, comps: &[&[C64]]) -> f64
where
    F: FnMut([f64; 3]) -> f64,
{
    let n = grid.n();
    let mut total = 0.0f64;
    for i in 0..n {
        let x0 = grid.wavenumber(i);
        for j in 0..n {
            let x1 = grid.wavenumber(j);
            let base = grid.idx(i, j, 0);
            for k in 0..n {
                let x2 = grid.wavenumber(k);
                let w = weight([x0 * x0, x1 * x1, x2 * x2]);
                let idx = base + k;
                let mut sq = 0.0;
                for comp in comps {
                    sq += comp[idx].norm_sqr();
                }
                total += w * sq;
            }
        }
    }
    total
}

/// `( sum_{|alpha| <= m} ||d^alpha v||_{L^2}^2 )^{1/2}` via Parseval.
pub fn sobolev_norm(v: &VectorField, m: usize) -> f64 {
    assert!(m <= 5, "Sobolev order out of the supported range 0..=5");
    let grid = v.grid();
    let comps: [&[C64]; 3] = [v.comp(0), v.comp(1), v.comp(2)];
    let sum = weighted_spectral_sum(grid, |xi2| sobolev_weight(xi2, m), &comps);
    (grid.period().powi(3) * sum).sqrt()
}

pub fn sobolev_norm_scalar(f: &ScalarField, m: usize) -> f64 {
    assert!(m <= 5, "Sobolev order out of the supported range 0..=5");
    let grid = f.grid();
    let sum = weighted_spectral_sum(grid, |xi2| sobolev_weight(xi2, m), &[f.coeffs()]);
    (grid.period().powi(3) * sum).sqrt()
}

pub fn l2_norm(v: &VectorField) -> f64 {
    sobolev_norm(v, 0)
}

/// `||grad v||_{H^m}^2 = P^3 sum |xi|^2 W_m(xi) |c|^2` (squared on purpose:
/// this is the dissipation-rate quantity).
pub fn grad_sobolev_sq(v: &VectorField, m: usize) -> f64 {
    assert!(m <= 5, "Sobolev order out of the supported range 0..=5");
    let grid = v.grid();
    let comps: [&[C64]; 3] = [v.comp(0), v.comp(1), v.comp(2)];
    let sum = weighted_spectral_sum(
        grid,
        |xi2| (xi2[0] + xi2[1] + xi2[2]) * sobolev_weight(xi2, m),
        &comps,
    );
    grid.period().powi(3) * sum
}

/// `int a . b dx` for real fields, evaluated spectrally.
pub fn inner_l2(a: &VectorField, b: &VectorField) -> Result<f64> {
    a.grid().same_grid(b.grid())?;
    let mut total = 0.0f64;
    for c in 0..3 {
        let (ac, bc) = (a.comp(c), b.comp(c));
        for idx in 0..ac.len() {
            total += ac[idx].re * bc[idx].re + ac[idx].im * bc[idx].im;
        }
    }
    Ok(a.grid().period().powi(3) * total)
}

/// Discrete surrogate of `int |v^(xi)| d xi`: the modewise Euclidean
/// amplitude in transform units (`P^3 c_m`) times the spectral cell
/// volume `(2 pi / P)^3`, which collapses to `(2 pi)^3 sum |c_m|`.
pub fn l1_fourier_norm(v: &VectorField) -> f64 {
    let mut total = 0.0f64;
    let len = v.grid().len();
    for idx in 0..len {
        let sq = v.comp(0)[idx].norm_sqr() + v.comp(1)[idx].norm_sqr() + v.comp(2)[idx].norm_sqr();
        total += sq.sqrt();
    }
    (2.0 * std::f64::consts::PI).powi(3) * total
}

/// Streams the real-space samples of every `d^alpha v` for the given
/// multi-index list, reusing scratch buffers. `visit` receives the index
/// into `alphas` and the three component sample grids.
pub(crate) fn for_each_alpha_real<F>(v: &VectorField, alphas: &[[u8; 3]], mut visit: F)
where
    F: FnMut(usize, &[Vec<f64>; 3]),
{
    let grid = v.grid().clone();
    let n = grid.n();
    let len = grid.len();
    let mut spec: [Vec<C64>; 3] = std::array::from_fn(|_| vec![C64::default(); len]);
    let mut real: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0f64; len]);
    let mut work = vec![C64::default(); len];

    for (ai, &alpha) in alphas.iter().enumerate() {
        let order = alpha[0] + alpha[1] + alpha[2];
        for c in 0..3 {
            let src = v.comp(c);
            let dst = &mut spec[c];
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
                        let z = src[base + k] * mag;
                        dst[base + k] = match order % 4 {
                            0 => z,
                            1 => C64::new(-z.im, z.re),
                            2 => -z,
                            _ => C64::new(z.im, -z.re),
                        };
                    }
                }
            }
        }
        {
            let (r0, rest) = real.split_at_mut(1);
            inverse_packed(&grid, &spec[0], &spec[1], &mut r0[0], &mut rest[0], &mut work);
        }
        inverse_into(&grid, &spec[2], &mut real[2], &mut work);
        visit(ai, &real);
    }
}

/// `max` over lattice samples and `|alpha| <= k` of the pointwise
/// Euclidean magnitude `|d^alpha v|`. A grid max is a lower bound of the
/// true sup; adequate once the grid oversamples the band by 4x or more.
pub fn w_inf_norm(v: &VectorField, k: usize) -> f64 {
    assert!(k <= 5, "sup-norm order out of the supported range 0..=5");
    let alphas = multi_indices(k);
    let mut best = 0.0f64;
    for_each_alpha_real(v, &alphas, |_, real| {
        let mut local = 0.0f64;
        for idx in 0..real[0].len() {
            let sq = real[0][idx] * real[0][idx]
                + real[1][idx] * real[1][idx]
                + real[2][idx] * real[2][idx];
            local = local.max(sq);
        }
        best = best.max(local);
    });
    best.sqrt()
}

/// Pointwise squared magnitude of the order-`k` gradient tensor,
/// `sum_{|alpha| = k} multinomial(alpha) |d^alpha v|^2`, on the lattice.
fn gradient_tensor_sq(v: &VectorField, k: usize) -> Vec<f64> {
    assert!(k <= 5, "gradient order out of the supported range 0..=5");
    let alphas: Vec<[u8; 3]> = multi_indices(k)
        .into_iter()
        .filter(|a| (a[0] + a[1] + a[2]) as usize == k)
        .collect();
    let mut sq = vec![0.0f64; v.grid().len()];
    for_each_alpha_real(v, &alphas, |ai, real| {
        let w = multinomial(alphas[ai]);
        for (acc, ((a, b), c)) in sq
            .iter_mut()
            .zip(real[0].iter().zip(real[1].iter()).zip(real[2].iter()))
        {
            *acc += w * (a * a + b * b + c * c);
        }
    });
    sq
}

/// Grid sup of the order-`k` gradient tensor magnitude `|grad^k v|`.
pub fn gradient_order_sup(v: &VectorField, k: usize) -> f64 {
    gradient_tensor_sq(v, k)
        .into_iter()
        .fold(0.0f64, f64::max)
        .sqrt()
}

/// Distance-weighted gradient sup `max_x (1 + |x|) |grad^k v|(x)` in
/// box-centered coordinates, the lattice surrogate of a `1/(1+|x|)`
/// pointwise decay bound.
pub fn decay_weighted_sup(v: &VectorField, k: usize) -> f64 {
    let grid = v.grid().clone();
    let sq = gradient_tensor_sq(v, k);
    let n = grid.n();
    let mut best = 0.0f64;
    for i in 0..n {
        let x = grid.coord(i);
        for j in 0..n {
            let y = grid.coord(j);
            let base = grid.idx(i, j, 0);
            for kk in 0..n {
                let z = grid.coord(kk);
                let r = (x * x + y * y + z * z).sqrt();
                let val = (1.0 + r) * (1.0 + r) * sq[base + kk];
                if val > best {
                    best = val;
                }
            }
        }
    }
    best.sqrt()
}

/// Quadrature of `sum_{|alpha| <= m} |d^alpha v|^2` over lattice points
/// with `|x| <= r` in box-centered coordinates, square-rooted.
///
/// `r` may reach the box half-diagonal `sqrt(3) P / 2`, at which point the
/// ball covers every lattice point and the value coincides with the global
/// norm; beyond `P/2` the ball wraps around the torus and the "ball" is
/// the whole box minus its far corners.
pub fn localized_sobolev_norm(v: &VectorField, m: usize, r: f64) -> Result<f64> {
    let grid = v.grid().clone();
    let half_diag = 3.0f64.sqrt() * grid.period() / 2.0;
    if !(r > 0.0 && r <= half_diag) {
        return Err(Error::InvalidParameter {
            name: "r",
            value: r,
            constraint: "0 < r <= box half-diagonal sqrt(3) P / 2",
        });
    }
    assert!(m <= 5, "Sobolev order out of the supported range 0..=5");
    let n = grid.n();
    let mut inside = vec![false; grid.len()];
    // Closed ball with a one-ulp-scale slack so lattice points exactly on
    // the sphere (the box corner at the half-diagonal) stay included.
    let r2 = r * r * (1.0 + 1e-12);
    for i in 0..n {
        let x = grid.coord(i);
        for j in 0..n {
            let y = grid.coord(j);
            let base = grid.idx(i, j, 0);
            for k in 0..n {
                let z = grid.coord(k);
                inside[base + k] = x * x + y * y + z * z <= r2;
            }
        }
    }
    let alphas = multi_indices(m);
    let mut total = 0.0f64;
    for_each_alpha_real(v, &alphas, |_, real| {
        let mut local = 0.0f64;
        for idx in 0..real[0].len() {
            if inside[idx] {
                local += real[0][idx] * real[0][idx]
                    + real[1][idx] * real[1][idx]
                    + real[2][idx] * real[2][idx];
            }
        }
        total += local;
    });
    let h3 = grid.cell_volume();
    Ok((h3 * total).sqrt())
}

#[derive(Debug, Clone)]
pub struct NormReport {
    /// `||v||_{H^m}` for m = 0..=5.
    pub h: [f64; 6],
    /// `max_{|alpha| <= k} ||d^alpha v||_inf` for k = 0..=5.
    pub w_inf: [f64; 6],
    pub l1_fourier: f64,
    /// `(r, ||v||_{H^3(|x| <= r)})` when a radius was requested.
    pub localized_h3: Option<(f64, f64)>,
}

pub fn norm_report(v: &VectorField, localized_radius: Option<f64>) -> Result<NormReport> {
    let mut h = [0.0; 6];
    for (m, slot) in h.iter_mut().enumerate() {
        *slot = sobolev_norm(v, m);
    }
    let mut w = [0.0; 6];
    for (k, slot) in w.iter_mut().enumerate() {
        *slot = w_inf_norm(v, k);
    }
    let localized_h3 = match localized_radius {
        Some(r) => Some((r, localized_sobolev_norm(v, 3, r)?)),
        None => None,
    };
    Ok(NormReport {
        h,
        w_inf: w,
        l1_fourier: l1_fourier_norm(v),
        localized_h3,
    })
}
