use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Periodic lattice `[0, P)^3` sampled at `n` points per axis, plus the
/// spectral bookkeeping shared by every field on it: signed mode numbers,
/// angular wavenumbers `xi = 2 pi m / P`, the 2/3-rule dealias mask, and
/// cached FFT plans.
///
/// Grids are immutable and shared behind `Arc`; two fields interoperate
/// exactly when they hold the same `Arc<Grid>` (checked by `n` + `period`).
pub struct Grid {
    n: usize,
    period: f64,
    /// Signed mode number per axis index: `0, 1, .., n/2-1, -n/2, .., -1`.
    modes: Vec<i64>,
    /// `2 pi m / P` per axis index.
    wavenumbers: Vec<f64>,
    /// Per-axis dealias keep flag: `3 |m| < n` (strict 2/3 rule).
    keep: Vec<bool>,
    /// Largest kept `|m|` per axis.
    m_keep: i64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.n)
            .field("period", &self.period)
            .finish()
    }
}

impl Grid {
    pub fn new(n: usize, period: f64) -> Result<Arc<Grid>> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::BadGridSize(n));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::BadPeriod(period));
        }
        let mut modes = Vec::with_capacity(n);
        let mut wavenumbers = Vec::with_capacity(n);
        let mut keep = Vec::with_capacity(n);
        for i in 0..n {
            let m = if i < n / 2 { i as i64 } else { i as i64 - n as i64 };
            modes.push(m);
            wavenumbers.push(2.0 * std::f64::consts::PI * m as f64 / period);
            keep.push(3 * m.unsigned_abs() < n as u64);
        }
        let m_keep = modes
            .iter()
            .filter(|&&m| 3 * m.unsigned_abs() < n as u64)
            .map(|m| m.abs())
            .max()
            .unwrap_or(0);
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        Ok(Arc::new(Grid {
            n,
            period,
            modes,
            wavenumbers,
            keep,
            m_keep,
            fwd,
            inv,
        }))
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn period(&self) -> f64 {
        self.period
    }

    /// Total lattice size `n^3`.
    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid spacing `h = P / n`.
    #[inline]
    pub fn spacing(&self) -> f64 {
        self.period / self.n as f64
    }

    /// Quadrature weight `h^3` of one lattice cell (plain box measure,
    /// no `1/P^3` normalization).
    #[inline]
    pub fn cell_volume(&self) -> f64 {
        let h = self.spacing();
        h * h * h
    }

    /// Spectral cell volume `(2 pi / P)^3`.
    #[inline]
    pub fn spectral_cell_volume(&self) -> f64 {
        let d = 2.0 * std::f64::consts::PI / self.period;
        d * d * d
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    /// Signed mode number along one axis.
    #[inline]
    pub fn mode(&self, i: usize) -> i64 {
        self.modes[i]
    }

    /// Angular wavenumber along one axis.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> f64 {
        self.wavenumbers[i]
    }

    #[inline]
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Per-axis dealias keep flag (strict `|m| < n/3`).
    #[inline]
    pub fn keep_axis(&self, i: usize) -> bool {
        self.keep[i]
    }

    /// Full 2/3-rule mask: true iff the mode is retained on every axis.
    #[inline]
    pub fn keep(&self, i: usize, j: usize, k: usize) -> bool {
        self.keep[i] && self.keep[j] && self.keep[k]
    }

    /// Largest retained `|m|` per axis.
    #[inline]
    pub fn m_keep(&self) -> i64 {
        self.m_keep
    }

    /// Largest `|xi|` over the retained mask (corner mode).
    pub fn xi_max(&self) -> f64 {
        let per_axis = 2.0 * std::f64::consts::PI * self.m_keep as f64 / self.period;
        per_axis * 3f64.sqrt()
    }

    /// Wavenumber vector of lattice index `(i, j, k)`.
    #[inline]
    pub fn xi(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [self.wavenumbers[i], self.wavenumbers[j], self.wavenumbers[k]]
    }

    /// Index of the Hermitian partner `-m` along one axis.
    #[inline]
    pub fn neg(&self, i: usize) -> usize {
        if i == 0 {
            0
        } else {
            self.n - i
        }
    }

    /// Box-centered sample coordinate along one axis, in `(-P/2, P/2]`.
    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        let x = i as f64 * self.spacing();
        if 2 * i <= self.n {
            x
        } else {
            x - self.period
        }
    }

    pub fn same_grid(&self, other: &Grid) -> Result<()> {
        if self.n == other.n && self.period == other.period {
            Ok(())
        } else {
            Err(Error::GridMismatch(self.n, other.n))
        }
    }

    pub(crate) fn fft_plans(&self) -> (&Arc<dyn Fft<f64>>, &Arc<dyn Fft<f64>>) {
        (&self.fwd, &self.inv)
    }

    /// In-place unnormalized 3-D FFT pass structure; see `fft.rs`.
    pub(crate) fn fft3(&self, data: &mut [Complex<f64>], forward: bool) {
        super::fft::fft3(self, data, forward);
    }

    /// Mask-pruned transform; see `fft::fft3_pruned` for the contract.
    pub(crate) fn fft3_pruned(&self, data: &mut [Complex<f64>], forward: bool) {
        super::fft::fft3_pruned(self, data, forward);
    }
}
