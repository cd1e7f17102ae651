use std::sync::Arc;

use rustfft::num_complex::Complex;

use super::grid::Grid;
use crate::error::Result;

type C64 = Complex<f64>;

/// Scalar field stored as Fourier coefficients on the full lattice.
#[derive(Clone)]
pub struct ScalarField {
    grid: Arc<Grid>,
    data: Vec<C64>,
}

/// Three-component vector field, one coefficient lattice per component.
#[derive(Clone)]
pub struct VectorField {
    grid: Arc<Grid>,
    comps: [Vec<C64>; 3],
}

impl std::fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarField")
            .field("n", &self.grid.n())
            .field("period", &self.grid.period())
            .finish_non_exhaustive()
    }
}

impl std::fmt::Debug for VectorField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VectorField")
            .field("n", &self.grid.n())
            .field("period", &self.grid.period())
            .finish_non_exhaustive()
    }
}

impl ScalarField {
    pub fn zeros(grid: Arc<Grid>) -> Self {
        let len = grid.len();
        ScalarField {
            grid,
            data: vec![C64::default(); len],
        }
    }

    /// Forward transform of real samples (row-major, `k` fastest);
    /// includes the `1/n^3` normalization so coefficients are the series
    /// coefficients `c_m`.
    pub fn from_real(grid: Arc<Grid>, samples: &[f64]) -> Self {
        assert_eq!(samples.len(), grid.len());
        let mut data: Vec<C64> = samples.iter().map(|&v| C64::new(v, 0.0)).collect();
        grid.fft3(&mut data, true);
        let scale = 1.0 / grid.len() as f64;
        for c in &mut data {
            *c *= scale;
        }
        ScalarField { grid, data }
    }

    /// Inverse transform; imaginary residue of the samples is discarded.
    pub fn to_real(&self) -> Vec<f64> {
        let mut work = self.data.clone();
        self.grid.fft3(&mut work, false);
        work.iter().map(|c| c.re).collect()
    }

    #[inline]
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    #[inline]
    pub fn coeffs(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn coeffs_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn scale(&mut self, s: f64) {
        for c in &mut self.data {
            *c *= s;
        }
    }

    /// Worst Hermitian-symmetry defect `|c(-m) - conj c(m)|`, absolute.
    pub fn hermitian_error(&self) -> f64 {
        hermitian_error(&self.grid, &self.data)
    }

    /// Project onto exact Hermitian symmetry by pair averaging.
    pub fn hermitianize(&mut self) {
        hermitianize(&self.grid, &mut self.data);
    }
}

impl VectorField {
    pub fn zeros(grid: Arc<Grid>) -> Self {
        let len = grid.len();
        VectorField {
            grid,
            comps: [
                vec![C64::default(); len],
                vec![C64::default(); len],
                vec![C64::default(); len],
            ],
        }
    }

    pub fn from_real(grid: Arc<Grid>, samples: [&[f64]; 3]) -> Self {
        let comps = samples.map(|s| {
            assert_eq!(s.len(), grid.len());
            let mut data: Vec<C64> = s.iter().map(|&v| C64::new(v, 0.0)).collect();
            grid.fft3(&mut data, true);
            let scale = 1.0 / grid.len() as f64;
            for c in &mut data {
                *c *= scale;
            }
            data
        });
        VectorField { grid, comps }
    }

    pub fn to_real(&self) -> [Vec<f64>; 3] {
        [0, 1, 2].map(|c| {
            let mut work = self.comps[c].clone();
            self.grid.fft3(&mut work, false);
            work.iter().map(|z| z.re).collect()
        })
    }

    #[inline]
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    #[inline]
    pub fn comp(&self, c: usize) -> &[C64] {
        &self.comps[c]
    }

    #[inline]
    pub fn comp_mut(&mut self, c: usize) -> &mut [C64] {
        &mut self.comps[c]
    }

    #[inline]
    pub fn comps(&self) -> &[Vec<C64>; 3] {
        &self.comps
    }

    #[inline]
    pub fn comps_mut(&mut self) -> &mut [Vec<C64>; 3] {
        &mut self.comps
    }

    /// Coefficient vector at lattice index, as a 3-array.
    #[inline]
    pub fn at(&self, idx: usize) -> [C64; 3] {
        [self.comps[0][idx], self.comps[1][idx], self.comps[2][idx]]
    }

    pub fn scale(&mut self, s: f64) {
        for comp in &mut self.comps {
            for c in comp.iter_mut() {
                *c *= s;
            }
        }
    }

    pub fn add_scaled(&mut self, other: &VectorField, s: f64) -> Result<()> {
        self.grid.same_grid(&other.grid)?;
        for c in 0..3 {
            for (a, b) in self.comps[c].iter_mut().zip(other.comps[c].iter()) {
                *a += b * s;
            }
        }
        Ok(())
    }

    /// `self - other`, consuming neither.
    pub fn diff(&self, other: &VectorField) -> Result<VectorField> {
        self.grid.same_grid(&other.grid)?;
        let mut out = self.clone();
        for c in 0..3 {
            for (a, b) in out.comps[c].iter_mut().zip(other.comps[c].iter()) {
                *a -= b;
            }
        }
        Ok(out)
    }

    /// Set the coefficient at signed mode `m` and the conjugate value at
    /// `-m`, keeping the field real.
    pub fn set_mode_pair(&mut self, m: [i64; 3], value: [C64; 3]) {
        let n = self.grid.n() as i64;
        let wrap = |v: i64| (((v % n) + n) % n) as usize;
        let idx = self
            .grid
            .idx(wrap(m[0]), wrap(m[1]), wrap(m[2]));
        let nidx = self
            .grid
            .idx(wrap(-m[0]), wrap(-m[1]), wrap(-m[2]));
        for c in 0..3 {
            self.comps[c][idx] = value[c];
            if nidx != idx {
                self.comps[c][nidx] = value[c].conj();
            }
        }
    }

    pub fn hermitian_error(&self) -> f64 {
        self.comps
            .iter()
            .map(|d| hermitian_error(&self.grid, d))
            .fold(0.0, f64::max)
    }

    pub fn hermitianize(&mut self) {
        for d in &mut self.comps {
            hermitianize(&self.grid, d);
        }
    }

    /// Largest coefficient magnitude (all components).
    pub fn max_coeff(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|d| d.iter())
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    /// True if every coefficient is finite.
    pub fn all_finite(&self) -> bool {
        self.comps
            .iter()
            .all(|d| d.iter().all(|c| c.re.is_finite() && c.im.is_finite()))
    }
}

fn hermitian_error(grid: &Grid, data: &[C64]) -> f64 {
    let n = grid.n();
    let mut worst = 0f64;
    for i in 0..n {
        let ni = grid.neg(i);
        for j in 0..n {
            let nj = grid.neg(j);
            for k in 0..n {
                let nk = grid.neg(k);
                let a = data[grid.idx(i, j, k)];
                let b = data[grid.idx(ni, nj, nk)];
                worst = worst.max((b - a.conj()).norm());
            }
        }
    }
    worst
}

fn hermitianize(grid: &Grid, data: &mut [C64]) {
    let n = grid.n();
    for i in 0..n {
        let ni = grid.neg(i);
        for j in 0..n {
            let nj = grid.neg(j);
            for k in 0..n {
                let nk = grid.neg(k);
                let idx = grid.idx(i, j, k);
                let nidx = grid.idx(ni, nj, nk);
                if idx < nidx {
                    let avg = (data[idx] + data[nidx].conj()) * 0.5;
                    data[idx] = avg;
                    data[nidx] = avg.conj();
                } else if idx == nidx {
                    data[idx] = C64::new(data[idx].re, 0.0);
                }
            }
        }
    }
}

/// Inverse-transform two Hermitian fields in one complex FFT: the packed
/// spectrum `a + i b` inverts to `A + i B` pointwise, where `A`, `B` are
/// the two real fields.
pub(crate) fn inverse_packed(
    grid: &Grid,
    a: &[C64],
    b: &[C64],
    out_a: &mut [f64],
    out_b: &mut [f64],
    work: &mut [C64],
) {
    let len = grid.len();
    debug_assert!(a.len() == len && b.len() == len);
    debug_assert!(out_a.len() == len && out_b.len() == len);
    debug_assert!(work.len() == len);
    for idx in 0..len {
        let z = b[idx];
        work[idx] = C64::new(a[idx].re - z.im, a[idx].im + z.re);
    }
    grid.fft3(work, false);
    for idx in 0..len {
        out_a[idx] = work[idx].re;
        out_b[idx] = work[idx].im;
    }
}

/// Single-field inverse to real samples using caller scratch.
pub(crate) fn inverse_into(grid: &Grid, a: &[C64], out: &mut [f64], work: &mut [C64]) {
    let len = grid.len();
    debug_assert!(a.len() == len && out.len() == len && work.len() == len);
    work.copy_from_slice(a);
    grid.fft3(work, false);
    for idx in 0..len {
        out[idx] = work[idx].re;
    }
}

/// Forward-transform two real fields in one complex FFT and split the
/// packed spectrum by Hermitian symmetry. The split writes exact
/// conjugate pairs, so both outputs are Hermitian by construction.
pub(crate) fn forward_packed(
    grid: &Grid,
    in_a: &[f64],
    in_b: &[f64],
    out_a: &mut [C64],
    out_b: &mut [C64],
    work: &mut [C64],
) {
    let len = grid.len();
    debug_assert!(in_a.len() == len && in_b.len() == len);
    debug_assert!(out_a.len() == len && out_b.len() == len);
    debug_assert!(work.len() == len);
    for idx in 0..len {
        work[idx] = C64::new(in_a[idx], in_b[idx]);
    }
    grid.fft3(work, true);
    let scale = 1.0 / len as f64;
    let n = grid.n();
    for i in 0..n {
        let ni = grid.neg(i);
        for j in 0..n {
            let nj = grid.neg(j);
            for k in 0..n {
                let nk = grid.neg(k);
                let idx = grid.idx(i, j, k);
                let nidx = grid.idx(ni, nj, nk);
                if idx < nidx {
                    let w = work[idx] * scale;
                    let wn = work[nidx] * scale;
                    let a = (w + wn.conj()) * 0.5;
                    let b = C64::new(w.im + wn.im, wn.re - w.re) * 0.5;
                    out_a[idx] = a;
                    out_a[nidx] = a.conj();
                    out_b[idx] = b;
                    out_b[nidx] = b.conj();
                } else if idx == nidx {
                    let w = work[idx] * scale;
                    out_a[idx] = C64::new(w.re, 0.0);
                    out_b[idx] = C64::new(w.im, 0.0);
                }
            }
        }
    }
}

/// `inverse_packed` through the mask-pruned transform. Both spectra must
/// be zero outside the dealias mask.
pub(crate) fn inverse_packed_masked(
    grid: &Grid,
    a: &[C64],
    b: &[C64],
    out_a: &mut [f64],
    out_b: &mut [f64],
    work: &mut [C64],
) {
    let len = grid.len();
    debug_assert!(a.len() == len && b.len() == len);
    debug_assert!(out_a.len() == len && out_b.len() == len);
    debug_assert!(work.len() == len);
    for idx in 0..len {
        let z = b[idx];
        work[idx] = C64::new(a[idx].re - z.im, a[idx].im + z.re);
    }
    grid.fft3_pruned(work, false);
    for idx in 0..len {
        out_a[idx] = work[idx].re;
        out_b[idx] = work[idx].im;
    }
}

/// `forward_packed` through the mask-pruned transform: the outputs are
/// the dealias projections of the two spectra, Hermitian by construction,
/// with every bin outside the mask zeroed.
pub(crate) fn forward_packed_masked(
    grid: &Grid,
    in_a: &[f64],
    in_b: &[f64],
    out_a: &mut [C64],
    out_b: &mut [C64],
    work: &mut [C64],
) {
    let len = grid.len();
    debug_assert!(in_a.len() == len && in_b.len() == len);
    debug_assert!(out_a.len() == len && out_b.len() == len);
    debug_assert!(work.len() == len);
    for idx in 0..len {
        work[idx] = C64::new(in_a[idx], in_b[idx]);
    }
    grid.fft3_pruned(work, true);
    super::fft::zero_masked_bins(grid, out_a);
    super::fft::zero_masked_bins(grid, out_b);
    let scale = 1.0 / len as f64;
    let n = grid.n();
    for i in 0..n {
        if !grid.keep_axis(i) {
            continue;
        }
        let ni = grid.neg(i);
        for j in 0..n {
            if !grid.keep_axis(j) {
                continue;
            }
            let nj = grid.neg(j);
            for k in 0..n {
                if !grid.keep_axis(k) {
                    continue;
                }
                let nk = grid.neg(k);
                let idx = grid.idx(i, j, k);
                let nidx = grid.idx(ni, nj, nk);
                if idx < nidx {
                    let w = work[idx] * scale;
                    let wn = work[nidx] * scale;
                    let a = (w + wn.conj()) * 0.5;
                    let b = C64::new(w.im + wn.im, wn.re - w.re) * 0.5;
                    out_a[idx] = a;
                    out_a[nidx] = a.conj();
                    out_b[idx] = b;
                    out_b[nidx] = b.conj();
                } else if idx == nidx {
                    let w = work[idx] * scale;
                    out_a[idx] = C64::new(w.re, 0.0);
                    out_b[idx] = C64::new(w.im, 0.0);
                }
            }
        }
    }
}

/// Single-field forward transform from real samples using caller scratch.
pub(crate) fn forward_into(grid: &Grid, samples: &[f64], out: &mut [C64], work: &mut [C64]) {
    let len = grid.len();
    debug_assert!(samples.len() == len && out.len() == len && work.len() == len);
    for idx in 0..len {
        work[idx] = C64::new(samples[idx], 0.0);
    }
    grid.fft3(work, true);
    let scale = 1.0 / len as f64;
    for idx in 0..len {
        out[idx] = work[idx] * scale;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid16() -> Arc<Grid> {
        Grid::new(16, 2.0 * std::f64::consts::PI).unwrap()
    }

    fn random_real(len: usize, seed: u64) -> Vec<f64> {
        let mut s = seed | 1;
        (0..len)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            })
            .collect()
    }

    #[test]
    fn real_round_trip() {
        let grid = grid16();
        let samples = random_real(grid.len(), 7);
        let f = ScalarField::from_real(grid.clone(), &samples);
        let back = f.to_real();
        let worst = samples
            .iter()
            .zip(back.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-12, "round trip error {worst}");
    }

    #[test]
    fn real_input_is_hermitian() {
        let grid = grid16();
        let samples = random_real(grid.len(), 11);
        let f = ScalarField::from_real(grid.clone(), &samples);
        assert!(f.hermitian_error() < 1e-13);
    }

    #[test]
    fn constant_field_transforms_to_mean_mode() {
        let grid = grid16();
        let ones = vec![1.0; grid.len()];
        let f = ScalarField::from_real(grid.clone(), &ones);
        assert!((f.coeffs()[0] - C64::new(1.0, 0.0)).norm() < 1e-13);
        let rest: f64 = f.coeffs()[1..].iter().map(|c| c.norm()).sum();
        assert!(rest < 1e-10);
    }

    #[test]
    fn sine_transforms_to_conjugate_pair() {
        // sin(2 pi x / P) on component y: coefficients -i/2 at m=(1,0,0)
        // and +i/2 at m=(-1,0,0).
        let grid = grid16();
        let n = grid.n();
        let mut comps = [vec![0.0; grid.len()], vec![0.0; grid.len()], vec![0.0; grid.len()]];
        for i in 0..n {
            let x = i as f64 * grid.spacing();
            let v = (2.0 * std::f64::consts::PI * x / grid.period()).sin();
            for j in 0..n {
                for k in 0..n {
                    comps[1][grid.idx(i, j, k)] = v;
                }
            }
        }
        let f = VectorField::from_real(
            grid.clone(),
            [&comps[0][..], &comps[1][..], &comps[2][..]],
        );
        let plus = f.comp(1)[grid.idx(1, 0, 0)];
        let minus = f.comp(1)[grid.idx(n - 1, 0, 0)];
        assert!((plus - C64::new(0.0, -0.5)).norm() < 1e-13);
        assert!((minus - C64::new(0.0, 0.5)).norm() < 1e-13);
        // Everything else vanishes.
        let mut rest = 0f64;
        for c in 0..3 {
            for (idx, z) in f.comp(c).iter().enumerate() {
                if c == 1 && (idx == grid.idx(1, 0, 0) || idx == grid.idx(n - 1, 0, 0)) {
                    continue;
                }
                rest = rest.max(z.norm());
            }
        }
        assert!(rest < 1e-12);
    }

    #[test]
    fn packed_transforms_match_plain() {
        let grid = grid16();
        let len = grid.len();
        let a = random_real(len, 3);
        let b = random_real(len, 5);
        let fa = ScalarField::from_real(grid.clone(), &a);
        let fb = ScalarField::from_real(grid.clone(), &b);

        let mut out_a = vec![C64::default(); len];
        let mut out_b = vec![C64::default(); len];
        let mut work = vec![C64::default(); len];
        forward_packed(&grid, &a, &b, &mut out_a, &mut out_b, &mut work);
        let worst_a = out_a
            .iter()
            .zip(fa.coeffs())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        let worst_b = out_b
            .iter()
            .zip(fb.coeffs())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        assert!(worst_a < 1e-13 && worst_b < 1e-13);

        let mut ra = vec![0.0; len];
        let mut rb = vec![0.0; len];
        inverse_packed(&grid, fa.coeffs(), fb.coeffs(), &mut ra, &mut rb, &mut work);
        let wa = ra.iter().zip(a.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let wb = rb.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(wa < 1e-12 && wb < 1e-12);
    }

    #[test]
    fn hermitianize_repairs_drift() {
        let grid = grid16();
        let samples = random_real(grid.len(), 13);
        let mut f = ScalarField::from_real(grid.clone(), &samples);
        f.coeffs_mut()[grid.idx(1, 2, 3)] += C64::new(1e-3, 2e-3);
        assert!(f.hermitian_error() > 1e-4);
        f.hermitianize();
        assert!(f.hermitian_error() < 1e-16);
    }

    /// Hermitian spectrum with support exactly on the dealias mask.
    fn masked_spectrum(grid: &Arc<Grid>, seed: u64) -> Vec<C64> {
        let real = random_real(grid.len(), seed);
        let f = ScalarField::from_real(grid.clone(), &real);
        let mut coeffs = f.coeffs().to_vec();
        for i in 0..grid.n() {
            for j in 0..grid.n() {
                for k in 0..grid.n() {
                    if !grid.keep(i, j, k) {
                        coeffs[grid.idx(i, j, k)] = C64::default();
                    }
                }
            }
        }
        coeffs
    }

    #[test]
    fn masked_inverse_matches_plain_on_masked_spectra() {
        let grid = grid16();
        let len = grid.len();
        let a = masked_spectrum(&grid, 17);
        let b = masked_spectrum(&grid, 19);
        let mut work = vec![C64::default(); len];
        let (mut ra, mut rb) = (vec![0.0; len], vec![0.0; len]);
        inverse_packed(&grid, &a, &b, &mut ra, &mut rb, &mut work);
        let (mut ma, mut mb) = (vec![0.0; len], vec![0.0; len]);
        inverse_packed_masked(&grid, &a, &b, &mut ma, &mut mb, &mut work);
        let wa = ra.iter().zip(&ma).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let wb = rb.iter().zip(&mb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert_eq!(wa.max(wb), 0.0, "masked inverse deviates: {wa} {wb}");
    }

    #[test]
    fn masked_forward_is_the_dealiased_plain_forward() {
        let grid = grid16();
        let len = grid.len();
        let a = random_real(len, 23);
        let b = random_real(len, 29);
        let mut work = vec![C64::default(); len];
        let (mut pa, mut pb) = (vec![C64::default(); len], vec![C64::default(); len]);
        forward_packed(&grid, &a, &b, &mut pa, &mut pb, &mut work);
        // Garbage in the output buffers must not survive the call.
        let mut ma = vec![C64::new(7.0, -7.0); len];
        let mut mb = vec![C64::new(-3.0, 3.0); len];
        forward_packed_masked(&grid, &a, &b, &mut ma, &mut mb, &mut work);
        let mut worst = 0f64;
        for i in 0..grid.n() {
            for j in 0..grid.n() {
                for k in 0..grid.n() {
                    let idx = grid.idx(i, j, k);
                    if grid.keep(i, j, k) {
                        worst = worst.max((pa[idx] - ma[idx]).norm());
                        worst = worst.max((pb[idx] - mb[idx]).norm());
                    } else {
                        assert_eq!(ma[idx], C64::default());
                        assert_eq!(mb[idx], C64::default());
                    }
                }
            }
        }
        assert!(worst < 1e-13, "masked forward deviates: {worst}");
        // Exact Hermitian symmetry from the split.
        for i in 0..grid.n() {
            for j in 0..grid.n() {
                for k in 0..grid.n() {
                    let idx = grid.idx(i, j, k);
                    let nidx = grid.idx(grid.neg(i), grid.neg(j), grid.neg(k));
                    assert_eq!(ma[idx], ma[nidx].conj());
                    assert_eq!(mb[idx], mb[nidx].conj());
                }
            }
        }
    }
}
