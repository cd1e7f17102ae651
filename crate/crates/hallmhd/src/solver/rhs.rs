//! Fused right-hand side of the coupled system: the projected nonlinear
//! terms only, since the stepper handles diffusion exactly through the
//! integrating factor.
//!
//! One evaluation realizes both fields and all nine velocity/magnetic
//! gradients through packed mask-pruned transforms (12 inverse c2c),
//! assembles the advective combinations and the Hall input pointwise,
//! and returns to spectral space with 5 packed forwards. Everything is
//! band-limited by the 2/3 mask, so pointwise products are alias-exact
//! and the masked forward doubles as the dealias step.

use std::sync::Arc;

use rustfft::num_complex::Complex;

use crate::data::ModelParams;
use crate::error::{Error, Result};
use crate::spectral::{
    forward_packed_masked, inverse_packed_masked, Grid, VectorField,
};

type C64 = Complex<f64>;

/// `(e, a, c, sign)` entries of the Levi-Civita symbol: the `e`-th curl
/// component picks up `sign * d_a v_c`.
const EPS: [(usize, usize, usize, f64); 6] = [
    (0, 1, 2, 1.0),
    (0, 2, 1, -1.0),
    (1, 2, 0, 1.0),
    (1, 0, 2, -1.0),
    (2, 0, 1, 1.0),
    (2, 1, 0, -1.0),
];

/// Pointwise extrema gathered while the fields are realized; the stepper
/// feeds them to the CFL formula and the finiteness guard.
#[derive(Debug, Clone, Copy)]
pub struct RhsStats {
    /// sup over the grid of |u|.
    pub sup_u: f64,
    /// sup over the grid of |b|.
    pub sup_b: f64,
    /// False as soon as any realized sample is NaN or infinite.
    pub finite: bool,
}

fn alloc_reals(len: usize) -> [Vec<f64>; 3] {
    [vec![0.0; len], vec![0.0; len], vec![0.0; len]]
}

/// Scratch buffers for one grid, reused across evaluations.
pub(crate) struct RhsWorkspace {
    grid: Arc<Grid>,
    work: Vec<C64>,
    spec_a: Vec<C64>,
    spec_b: Vec<C64>,
    ru: [Vec<f64>; 3],
    rb: [Vec<f64>; 3],
    gu: [Vec<f64>; 3],
    gb: [Vec<f64>; 3],
    au: [Vec<f64>; 3],
    ab: [Vec<f64>; 3],
    jj: [Vec<f64>; 3],
    jxb: [Vec<f64>; 3],
    zero_real: Vec<f64>,
    junk: Vec<C64>,
    junk2: Vec<C64>,
}

impl RhsWorkspace {
    pub(crate) fn new(grid: Arc<Grid>) -> Self {
        let len = grid.len();
        RhsWorkspace {
            work: vec![C64::default(); len],
            spec_a: vec![C64::default(); len],
            spec_b: vec![C64::default(); len],
            ru: alloc_reals(len),
            rb: alloc_reals(len),
            gu: alloc_reals(len),
            gb: alloc_reals(len),
            au: alloc_reals(len),
            ab: alloc_reals(len),
            jj: alloc_reals(len),
            jxb: alloc_reals(len),
            zero_real: vec![0.0; len],
            junk: vec![C64::default(); len],
            junk2: vec![C64::default(); len],
            grid,
        }
    }

    /// Realize both fields into `ru`, `rb` and return their sup norms.
    pub(crate) fn realize_fields(&mut self, u: &VectorField, b: &VectorField) -> RhsStats {
        let g = &self.grid;
        let (r0, rest) = self.ru.split_at_mut(1);
        let (r1, r2) = rest.split_at_mut(1);
        inverse_packed_masked(g, u.comp(0), u.comp(1), &mut r0[0], &mut r1[0], &mut self.work);
        let (b0, brest) = self.rb.split_at_mut(1);
        let (b1, b2) = brest.split_at_mut(1);
        inverse_packed_masked(g, u.comp(2), b.comp(0), &mut r2[0], &mut b0[0], &mut self.work);
        inverse_packed_masked(g, b.comp(1), b.comp(2), &mut b1[0], &mut b2[0], &mut self.work);
        sup_stats(&self.ru, &self.rb)
    }

    /// Fill `out_u`, `out_b` with the spectra of `d_axis u_c`, `d_axis b_c`
    /// for every kept bin; dead bins stay zero from allocation.
    fn gradient_spectra(&mut self, u: &VectorField, b: &VectorField, axis: usize, c: usize) {
        let grid = self.grid.clone();
        let n = grid.n();
        let uc = u.comp(c);
        let bc = b.comp(c);
        let (sa, sb) = (&mut self.spec_a, &mut self.spec_b);
        for i in 0..n {
            if !grid.keep_axis(i) {
                continue;
            }
            for j in 0..n {
                if !grid.keep_axis(j) {
                    continue;
                }
                let base = (i * n + j) * n;
                for k in 0..n {
                    if !grid.keep_axis(k) {
                        continue;
                    }
                    let idx = base + k;
                    let xa = match axis {
                        0 => grid.wavenumber(i),
                        1 => grid.wavenumber(j),
                        _ => grid.wavenumber(k),
                    };
                    let zu = uc[idx];
                    let zb = bc[idx];
                    sa[idx] = C64::new(-xa * zu.im, xa * zu.re);
                    sb[idx] = C64::new(-xa * zb.im, xa * zb.re);
                }
            }
        }
    }

    /// Projected nonlinear terms of both equations into `du`, `db`.
    ///
    /// `include_hall` exists so the structural Hall-off path (taken
    /// whenever eta is zero) can be compared against the multiplied-out
    /// eta = 0 evaluation in tests.
    pub(crate) fn compute(
        &mut self,
        u: &VectorField,
        b: &VectorField,
        eta: f64,
        include_hall: bool,
        du: &mut VectorField,
        db: &mut VectorField,
    ) -> RhsStats {
        let stats = self.realize_fields(u, b);
        let len = self.grid.len();

        for c in 0..3 {
            self.au[c].fill(0.0);
            self.ab[c].fill(0.0);
            if include_hall {
                self.jj[c].fill(0.0);
            }
        }

        // Sweep one derivative axis at a time so only one gradient triple
        // per field is alive at once.
        for a in 0..3 {
            for c in 0..3 {
                self.gradient_spectra(u, b, a, c);
                let (_, gus) = self.gu.split_at_mut(c);
                let (_, gbs) = self.gb.split_at_mut(c);
                inverse_packed_masked(
                    &self.grid,
                    &self.spec_a,
                    &self.spec_b,
                    &mut gus[0],
                    &mut gbs[0],
                    &mut self.work,
                );
            }
            let ua = &self.ru[a];
            let ba = &self.rb[a];
            for c in 0..3 {
                let guc = &self.gu[c];
                let gbc = &self.gb[c];
                let auc = &mut self.au[c];
                let abc = &mut self.ab[c];
                for idx in 0..len {
                    let s = ua[idx];
                    let t = ba[idx];
                    auc[idx] += t * gbc[idx] - s * guc[idx];
                    abc[idx] += t * guc[idx] - s * gbc[idx];
                }
            }
            if include_hall {
                for &(e, aa, c, sign) in &EPS {
                    if aa != a {
                        continue;
                    }
                    let src = &self.gb[c];
                    let dst = &mut self.jj[e];
                    if sign > 0.0 {
                        for idx in 0..len {
                            dst[idx] += src[idx];
                        }
                    } else {
                        for idx in 0..len {
                            dst[idx] -= src[idx];
                        }
                    }
                }
            }
        }

        if include_hall {
            let (jj, rb, jxb) = (&self.jj, &self.rb, &mut self.jxb);
            for idx in 0..len {
                let j = [jj[0][idx], jj[1][idx], jj[2][idx]];
                let v = [rb[0][idx], rb[1][idx], rb[2][idx]];
                jxb[0][idx] = j[1] * v[2] - j[2] * v[1];
                jxb[1][idx] = j[2] * v[0] - j[0] * v[2];
                jxb[2][idx] = j[0] * v[1] - j[1] * v[0];
            }
        }

        // Forward transforms: the masked split dealiases on the way back.
        // The au/ab pairing is the same whether or not the Hall block
        // runs, so the eta = 0 structural skip is bit-identical to the
        // multiplied-out evaluation.
        let g = self.grid.clone();
        {
            let [d0, d1, d2] = du.comps_mut();
            let [e0, e1, e2] = db.comps_mut();
            forward_packed_masked(&g, &self.au[0], &self.au[1], d0, d1, &mut self.work);
            forward_packed_masked(&g, &self.au[2], &self.ab[0], d2, e0, &mut self.work);
            forward_packed_masked(&g, &self.ab[1], &self.ab[2], e1, e2, &mut self.work);
        }
        if include_hall {
            forward_packed_masked(
                &g, &self.jxb[0], &self.jxb[1], &mut self.spec_a, &mut self.spec_b,
                &mut self.work,
            );
            forward_packed_masked(
                &g, &self.jxb[2], &self.zero_real, &mut self.junk, &mut self.junk2,
                &mut self.work,
            );
        }

        self.assemble_spectral(eta, include_hall, du, db);
        stats
    }

    /// Leray-project `du`, subtract the Hall curl from `db`, and pin the
    /// mean modes: the nonlinear terms are exactly mean-free in the
    /// continuum (divergence/curl structure plus exact quadrature of
    /// band-limited products), so the zero is enforced rather than left
    /// to roundoff.
    fn assemble_spectral(
        &mut self,
        eta: f64,
        include_hall: bool,
        du: &mut VectorField,
        db: &mut VectorField,
    ) {
        let grid = self.grid.clone();
        let n = grid.n();
        for i in 0..n {
            if !grid.keep_axis(i) {
                continue;
            }
            for j in 0..n {
                if !grid.keep_axis(j) {
                    continue;
                }
                let base = (i * n + j) * n;
                for k in 0..n {
                    if !grid.keep_axis(k) {
                        continue;
                    }
                    let idx = base + k;
                    let xi = grid.xi(i, j, k);
                    let xi2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
                    if xi2 == 0.0 {
                        for c in 0..3 {
                            du.comp_mut(c)[idx] = C64::default();
                            db.comp_mut(c)[idx] = C64::default();
                        }
                        continue;
                    }
                    let v = [du.comp(0)[idx], du.comp(1)[idx], du.comp(2)[idx]];
                    let dot = (v[0] * xi[0] + v[1] * xi[1] + v[2] * xi[2]) / xi2;
                    for c in 0..3 {
                        du.comp_mut(c)[idx] = v[c] - dot * xi[c];
                    }
                    if include_hall {
                        let s = [self.spec_a[idx], self.spec_b[idx], self.junk[idx]];
                        // (curl A)_e = i eps_{eac} xi_a A_c; i*(x+iy) = (-y, x).
                        let curl = [
                            xi[1] * s[2] - xi[2] * s[1],
                            xi[2] * s[0] - xi[0] * s[2],
                            xi[0] * s[1] - xi[1] * s[0],
                        ];
                        for c in 0..3 {
                            let w = curl[c];
                            db.comp_mut(c)[idx] -= eta * C64::new(-w.im, w.re);
                        }
                    }
                }
            }
        }
    }

}

fn sup_stats(ru: &[Vec<f64>; 3], rb: &[Vec<f64>; 3]) -> RhsStats {
    let len = ru[0].len();
    let mut su = 0.0f64;
    let mut sb = 0.0f64;
    let mut total = 0.0f64;
    for idx in 0..len {
        let u2 = ru[0][idx] * ru[0][idx] + ru[1][idx] * ru[1][idx] + ru[2][idx] * ru[2][idx];
        let b2 = rb[0][idx] * rb[0][idx] + rb[1][idx] * rb[1][idx] + rb[2][idx] * rb[2][idx];
        if u2 > su {
            su = u2;
        }
        if b2 > sb {
            sb = b2;
        }
        total += u2 + b2;
    }
    RhsStats {
        sup_u: su.sqrt(),
        sup_b: sb.sqrt(),
        finite: total.is_finite(),
    }
}

/// Projected nonlinear terms of both equations for divergence-free,
/// dealiased inputs: the velocity side is the Leray projection of the
/// advective combination, the magnetic side is transport plus the Hall
/// curl, divergence-free by structure.
pub fn rhs(
    u: &VectorField,
    b: &VectorField,
    params: &ModelParams,
) -> Result<(VectorField, VectorField)> {
    u.grid().same_grid(b.grid())?;
    params.validate()?;
    let mut ws = RhsWorkspace::new(u.grid().clone());
    let mut du = VectorField::zeros(u.grid().clone());
    let mut db = VectorField::zeros(u.grid().clone());
    let stats = ws.compute(u, b, params.eta, params.eta != 0.0, &mut du, &mut db);
    if !stats.finite {
        return Err(Error::NonFinite { t: f64::NAN, step: 0 });
    }
    Ok((du, db))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{advect, cross, hall_term, inner_l2, l2_norm, sobolev_norm_scalar};
    use crate::spectral::ops::{curl, divergence, leray_project, sqrt_neg_laplacian};

    fn random_divfree(grid: &Arc<Grid>, seed: u64, band: i64) -> VectorField {
        let mut f = VectorField::zeros(grid.clone());
        let mut s = seed | 1;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for mi in -band..=band {
            for mj in -band..=band {
                for mk in 0..=band {
                    if (mi, mj, mk) <= (0, 0, 0) {
                        continue;
                    }
                    f.set_mode_pair(
                        [mi, mj, mk],
                        [
                            C64::new(next(), next()),
                            C64::new(next(), next()),
                            C64::new(next(), next()),
                        ],
                    );
                }
            }
        }
        let mut f = leray_project(&f);
        f.scale(0.1);
        f
    }

    fn rel_div(v: &VectorField) -> f64 {
        let d = divergence(v);
        let num = sobolev_norm_scalar(&d, 0);
        let den = l2_norm(v).max(1e-300);
        num / den
    }

    #[test]
    fn zero_fields_give_zero_tendencies() {
        let grid = Grid::new(16, 8.0).unwrap();
        let u = VectorField::zeros(grid.clone());
        let b = VectorField::zeros(grid.clone());
        let (du, db) = rhs(&u, &b, &ModelParams::default()).unwrap();
        assert_eq!(du.max_coeff(), 0.0);
        assert_eq!(db.max_coeff(), 0.0);
    }

    #[test]
    fn fused_evaluation_matches_the_composed_products() {
        let grid = Grid::new(16, 8.0).unwrap();
        let u = random_divfree(&grid, 3, 3);
        let b = random_divfree(&grid, 7, 3);
        let params = ModelParams { eta: 0.7, ..ModelParams::default() };
        let (du, db) = rhs(&u, &b, &params).unwrap();

        let mut du_ref = advect(&b, &b).unwrap();
        du_ref.add_scaled(&advect(&u, &u).unwrap(), -1.0).unwrap();
        let mut du_ref = leray_project(&du_ref);
        // The fused path pins the mean mode; the composed one only
        // carries roundoff there.
        for c in 0..3 {
            du_ref.comp_mut(c)[0] = C64::default();
        }
        let mut db_ref = advect(&b, &u).unwrap();
        db_ref.add_scaled(&advect(&u, &b).unwrap(), -1.0).unwrap();
        db_ref
            .add_scaled(&hall_term(&b).unwrap(), -params.eta)
            .unwrap();
        for c in 0..3 {
            db_ref.comp_mut(c)[0] = C64::default();
        }

        let scale = l2_norm(&du_ref) + l2_norm(&db_ref);
        let err = l2_norm(&du.diff(&du_ref).unwrap()) + l2_norm(&db.diff(&db_ref).unwrap());
        assert!(err < 1e-12 * scale, "fused rhs deviates: {err:e} vs scale {scale:e}");
    }

    #[test]
    fn transport_form_agrees_with_the_curl_of_the_cross_product() {
        // For solenoidal fields, b.grad u - u.grad b = curl(u x b); the
        // evaluation uses the transport form, the oracle the curl form.
        let grid = Grid::new(16, 8.0).unwrap();
        let u = random_divfree(&grid, 31, 3);
        let b = random_divfree(&grid, 37, 3);
        let params = ModelParams { eta: 0.0, ..ModelParams::default() };
        let (_, db) = rhs(&u, &b, &params).unwrap();
        let mut oracle = curl(&cross(&u, &b).unwrap());
        for c in 0..3 {
            oracle.comp_mut(c)[0] = C64::default();
        }
        let err = l2_norm(&db.diff(&oracle).unwrap());
        let scale = l2_norm(&oracle);
        assert!(err < 1e-10 * scale, "forms disagree: {err:e} vs scale {scale:e}");
    }

    #[test]
    fn tendencies_are_divergence_free_and_hermitian() {
        let grid = Grid::new(16, 8.0).unwrap();
        let u = random_divfree(&grid, 11, 3);
        let b = random_divfree(&grid, 13, 3);
        let params = ModelParams { eta: 1.3, ..ModelParams::default() };
        let (du, db) = rhs(&u, &b, &params).unwrap();
        assert!(rel_div(&du) < 1e-13, "du divergence {}", rel_div(&du));
        assert!(rel_div(&db) < 1e-11, "db divergence {}", rel_div(&db));
        assert!(du.hermitian_error() < 1e-15);
        assert!(db.hermitian_error() < 1e-15);
    }

    #[test]
    fn beltrami_velocity_alone_is_steady_euler() {
        // For curl u = |xi| u on one shell the advective term is a pure
        // gradient, so the projection removes it entirely.
        let grid = Grid::new(16, 2.0 * std::f64::consts::PI).unwrap();
        let mut u = VectorField::zeros(grid.clone());
        let h = crate::data::helical_basis([1.0, 0.0, 0.0]);
        u.set_mode_pair([1, 0, 0], [h[0] * 0.5, h[1] * 0.5, h[2] * 0.5]);
        assert!(
            sqrt_neg_laplacian(&u).diff(&curl(&u)).unwrap().max_coeff() < 1e-12,
            "test field is not Beltrami"
        );
        let b = VectorField::zeros(grid.clone());
        let (du, db) = rhs(&u, &b, &ModelParams::default()).unwrap();
        assert!(du.max_coeff() < 1e-15, "Beltrami tendency {}", du.max_coeff());
        // db is zero up to transform roundoff: its arrays ride packed
        // transforms next to nonzero u-side arrays.
        assert!(db.max_coeff() < 1e-15, "induction tendency {}", db.max_coeff());
    }

    #[test]
    fn hall_branch_with_zero_eta_matches_the_structural_skip() {
        let grid = Grid::new(16, 8.0).unwrap();
        let u = random_divfree(&grid, 17, 3);
        let b = random_divfree(&grid, 19, 3);
        let mut ws = RhsWorkspace::new(grid.clone());
        let mut du_a = VectorField::zeros(grid.clone());
        let mut db_a = VectorField::zeros(grid.clone());
        ws.compute(&u, &b, 0.0, true, &mut du_a, &mut db_a);
        let mut du_b = VectorField::zeros(grid.clone());
        let mut db_b = VectorField::zeros(grid.clone());
        ws.compute(&u, &b, 0.0, false, &mut du_b, &mut db_b);
        for c in 0..3 {
            for (x, y) in du_a.comp(c).iter().zip(du_b.comp(c)) {
                assert!(x.re == y.re && x.im == y.im, "hall-off paths differ");
            }
            for (x, y) in db_a.comp(c).iter().zip(db_b.comp(c)) {
                assert!(x.re == y.re && x.im == y.im, "hall-off paths differ");
            }
        }
    }

    #[test]
    fn nonlinear_terms_do_no_net_work() {
        // <u, du> + <b, db> = 0: advection redistributes energy and the
        // Hall term is orthogonal to the current pointwise.
        let grid = Grid::new(16, 8.0).unwrap();
        let u = random_divfree(&grid, 23, 3);
        let b = random_divfree(&grid, 29, 3);
        let params = ModelParams { eta: 2.0, ..ModelParams::default() };
        let (du, db) = rhs(&u, &b, &params).unwrap();
        let work = inner_l2(&u, &du).unwrap() + inner_l2(&b, &db).unwrap();
        let scale = l2_norm(&u) * l2_norm(&du) + l2_norm(&b) * l2_norm(&db);
        assert!(
            work.abs() < 1e-12 * scale.max(1e-300),
            "net nonlinear work {work:e} vs scale {scale:e}"
        );
    }

    #[test]
    fn sup_stats_flag_non_finite_fields() {
        let grid = Grid::new(16, 8.0).unwrap();
        let mut u = random_divfree(&grid, 31, 3);
        u.comp_mut(0)[5] = C64::new(f64::NAN, 0.0);
        let mut ws = RhsWorkspace::new(grid.clone());
        let stats = ws.realize_fields(&u, &VectorField::zeros(grid.clone()));
        assert!(!stats.finite);
    }
}
