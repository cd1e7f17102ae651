//! Exact cancellation identities of the perturbation energy budget.
//!
//! With `D^a` a mixed partial derivative, `U`, `B` the perturbations
//! around the localized reference pair, and `u`, `b` the divergence-free
//! state, the following integrals over the periodic box vanish
//! identically:
//!
//! * transport: `int u . grad(D^a B) . D^a B dx = 0` for any `B`, since
//!   the integrand is half of `u . grad |D^a B|^2`;
//! * exchange: `int b . grad(D^a U) . D^a B dx
//!   + int b . grad(D^a B) . D^a U dx = 0`, the same mechanism applied
//!   to the product `D^a U . D^a B`;
//! * cross orthogonality: `int w . (w x g_tilde) dx = 0` with
//!   `w = D^a curl B`, a pointwise triple product with a repeated factor;
//! * curl divergence: `int |D^a B|^2 div(curl g_tilde) dx = 0`, the term
//!   a curl expansion of the reference coupling hinges on;
//! * Hall neutrality: `int curl((curl b) x b) . b dx = 0`, pointwise
//!   orthogonality after one integration by parts.
//!
//! Every field in sight is band-limited to the dealias mask, products of
//! two such fields stay within twice the mask band, and triple products
//! within three times the band, below the grid's exact-quadrature limit.
//! The grid sums below therefore equal the true integrals of the true
//! products, so each residual is pure floating-point roundoff when the
//! discrete solenoidality it relies on holds, and order one when it does
//! not. Note the localized reference fields themselves are not
//! divergence free (the cutoff product leaves a gradient part), so the
//! checks lean only on `div u = div b = 0` and `div curl = 0`.
//!
//! Each check reports `|sum| / scale` where the scale aggregates the
//! absolute values of the constituent monomials of the integrand, the
//! natural yardstick for the cancellation being claimed.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::algebra::{advect, hall_term, inner_l2, l2_norm};
use crate::error::{Error, Result};
use crate::reference::ReferenceState;
use crate::solver::SolverState;
use crate::spectral::ops::{curl, divergence, gradient, leray_project, multi_derivative};
use crate::spectral::{inverse_packed_masked, Grid, ScalarField, VectorField};

type C64 = Complex<f64>;

/// Relative residuals of the five cancellation checks, each `|sum|/scale`
/// with the scale built from the absolute integrand (zero when the scale
/// itself vanishes). Values near machine precision certify the discrete
/// identity; values near one flag a broken assumption.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CancellationResiduals {
    /// `int u . grad(D^a B) . D^a B dx`, zero for divergence-free `u`.
    pub transport: f64,
    /// Sum of the two stretching integrals, zero for divergence-free `b`.
    pub exchange: f64,
    /// `int w . (w x g_tilde) dx`, zero pointwise.
    pub cross_orthogonality: f64,
    /// `int |D^a B|^2 div(curl g_tilde) dx`, zero since div curl = 0,
    /// scaled against the companion stretching integrand.
    pub curl_divergence: f64,
    /// `int hall(b) . b dx / (||hall(b)|| ||b||)`, zero by the curl
    /// pairing.
    pub hall_energy: f64,
}

impl CancellationResiduals {
    /// Largest of the five residuals.
    pub fn max(&self) -> f64 {
        self.transport
            .max(self.exchange)
            .max(self.cross_orthogonality)
            .max(self.curl_divergence)
            .max(self.hall_energy)
    }
}

/// Two-path check of the pressure determined by the flow: the gradient
/// part removed by the Leray projection of `u.grad u - b.grad b` against
/// the gradient of the Poisson solve of its divergence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PressureCheck {
    /// `||grad p||_{L2}` from the Poisson path.
    pub gradient_norm: f64,
    /// Relative L2 difference between the two paths.
    pub mismatch: f64,
}

/// Reusable buffers for the identity suite: realized copies of the fields
/// entering the integrands plus spectral scratch for the packed
/// transforms. Allocate once per grid and reuse across samples.
pub struct IdentityWorkspace {
    grid: Arc<Grid>,
    /// Realized velocity and magnetic state.
    ru: [Vec<f64>; 3],
    rb: [Vec<f64>; 3],
    /// Realized localized reference field.
    rg: [Vec<f64>; 3],
    /// Realized `d_i (curl g_tilde)_j` at index `3 i + j`, and the
    /// realized divergence of that curl (pure roundoff by construction).
    da: [Vec<f64>; 9],
    rdiva: Vec<f64>,
    /// Realized `D^a U`, `D^a B`, `D^a curl B`.
    rdu: [Vec<f64>; 3],
    rdb: [Vec<f64>; 3],
    rw: [Vec<f64>; 3],
    /// Axis-sweep buffers.
    s0: [Vec<f64>; 3],
    s1: [Vec<f64>; 3],
    jr: Vec<f64>,
    spec_a: Vec<C64>,
    spec_b: Vec<C64>,
    work: Vec<C64>,
}

impl IdentityWorkspace {
    pub fn new(grid: Arc<Grid>) -> Self {
        let len = grid.len();
        Self {
            grid,
            ru: std::array::from_fn(|_| vec![0.0f64; len]),
            rb: std::array::from_fn(|_| vec![0.0f64; len]),
            rg: std::array::from_fn(|_| vec![0.0f64; len]),
            da: std::array::from_fn(|_| vec![0.0f64; len]),
            rdiva: vec![0.0; len],
            rdu: std::array::from_fn(|_| vec![0.0f64; len]),
            rdb: std::array::from_fn(|_| vec![0.0f64; len]),
            rw: std::array::from_fn(|_| vec![0.0f64; len]),
            s0: std::array::from_fn(|_| vec![0.0f64; len]),
            s1: std::array::from_fn(|_| vec![0.0f64; len]),
            jr: vec![0.0; len],
            spec_a: vec![C64::default(); len],
            spec_b: vec![C64::default(); len],
            work: vec![C64::default(); len],
        }
    }

    /// Run every check at each derivative index and keep the worst
    /// residual per check. The reference must be evaluated at exactly the
    /// state's time.
    pub fn residuals(
        &mut self,
        state: &SolverState,
        reference: &ReferenceState,
        alphas: &[[u8; 3]],
    ) -> Result<CancellationResiduals> {
        if state.t != reference.t {
            return Err(Error::TimeMismatch(format!(
                "state at t = {} but reference at t = {}",
                state.t, reference.t
            )));
        }
        self.grid.same_grid(state.u.grid())?;
        self.grid.same_grid(reference.g_tilde.grid())?;
        let u_pert = state.u.diff(&reference.f_tilde)?;
        let b_pert = state.b.diff(&reference.g_tilde)?;
        let a_spec = curl(&reference.g_tilde);
        let div_a = divergence(&a_spec);

        {
            let g = &self.grid;
            realize_six(g, &state.u, &state.b, &mut self.ru, &mut self.rb, &mut self.work);
            realize_three(g, &reference.g_tilde, &mut self.rg, &mut self.jr, &mut self.work);
            // The nine first derivatives of a = curl g_tilde, packed in
            // pairs, with the divergence of a riding the last slot.
            for pair in 0..4 {
                let (ia, ja) = ((2 * pair) / 3, (2 * pair) % 3);
                let (ib, jb) = ((2 * pair + 1) / 3, (2 * pair + 1) % 3);
                fill_axis_derivative(g, a_spec.comp(ja), ia, &mut self.spec_a);
                fill_axis_derivative(g, a_spec.comp(jb), ib, &mut self.spec_b);
                let (head, tail) = self.da.split_at_mut(2 * pair + 1);
                inverse_packed_masked(
                    g, &self.spec_a, &self.spec_b,
                    &mut head[2 * pair], &mut tail[0], &mut self.work,
                );
            }
            fill_axis_derivative(g, a_spec.comp(2), 2, &mut self.spec_a);
            inverse_packed_masked(
                g, &self.spec_a, div_a.coeffs(),
                &mut self.da[8], &mut self.rdiva, &mut self.work,
            );
        }

        let mut out = CancellationResiduals {
            transport: 0.0,
            exchange: 0.0,
            cross_orthogonality: 0.0,
            curl_divergence: 0.0,
            hall_energy: hall_energy_residual(&state.b)?,
        };
        for &alpha in alphas {
            let one = self.residuals_at(&u_pert, &b_pert, alpha);
            out.transport = out.transport.max(one.transport);
            out.exchange = out.exchange.max(one.exchange);
            out.cross_orthogonality = out.cross_orthogonality.max(one.cross_orthogonality);
            out.curl_divergence = out.curl_divergence.max(one.curl_divergence);
        }
        Ok(out)
    }

    /// The four derivative-dependent checks at a single index. Assumes
    /// the sample-fixed buffers already hold the realized fields.
    fn residuals_at(
        &mut self,
        u_pert: &VectorField,
        b_pert: &VectorField,
        alpha: [u8; 3],
    ) -> CancellationResiduals {
        let du_s = multi_derivative(u_pert, alpha);
        let db_s = multi_derivative(b_pert, alpha);
        let w_s = curl(&db_s);
        let len = self.grid.len();
        {
            let g = &self.grid;
            realize_six(g, &du_s, &db_s, &mut self.rdu, &mut self.rdb, &mut self.work);
            realize_three(g, &w_s, &mut self.rw, &mut self.jr, &mut self.work);
        }

        // Pointwise triple product with a repeated factor, and the
        // weighted divergence of the reference curl.
        let mut c_sum = 0.0;
        let mut c_scale = 0.0;
        let mut d_sum = 0.0;
        let mut d_scale = 0.0;
        for idx in 0..len {
            let w = [self.rw[0][idx], self.rw[1][idx], self.rw[2][idx]];
            let g = [self.rg[0][idx], self.rg[1][idx], self.rg[2][idx]];
            c_sum += w[0] * (w[1] * g[2] - w[2] * g[1])
                + w[1] * (w[2] * g[0] - w[0] * g[2])
                + w[2] * (w[0] * g[1] - w[1] * g[0]);
            c_scale += (w[0] * w[1] * g[2]).abs()
                + (w[0] * w[2] * g[1]).abs()
                + (w[1] * w[2] * g[0]).abs()
                + (w[1] * w[0] * g[2]).abs()
                + (w[2] * w[1] * g[0]).abs()
                + (w[2] * w[0] * g[1]).abs();
            let c = [self.rdb[0][idx], self.rdb[1][idx], self.rdb[2][idx]];
            d_sum += (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]) * self.rdiva[idx];
            for (i, ci) in c.iter().enumerate() {
                for (j, cj) in c.iter().enumerate() {
                    d_scale += (ci * cj * self.da[3 * i + j][idx]).abs();
                }
            }
        }

        // Transport and exchange share one sweep over the gradient axes.
        let mut t_sum = 0.0;
        let mut t_scale = 0.0;
        let mut x_sum = 0.0;
        let mut x_scale = 0.0;
        for axis in 0..3 {
            {
                let g = &self.grid;
                let [d0, d1, d2] = &mut self.s0;
                let [e0, e1, e2] = &mut self.s1;
                fill_axis_derivative(g, du_s.comp(0), axis, &mut self.spec_a);
                fill_axis_derivative(g, du_s.comp(1), axis, &mut self.spec_b);
                inverse_packed_masked(g, &self.spec_a, &self.spec_b, d0, d1, &mut self.work);
                fill_axis_derivative(g, du_s.comp(2), axis, &mut self.spec_a);
                fill_axis_derivative(g, db_s.comp(0), axis, &mut self.spec_b);
                inverse_packed_masked(g, &self.spec_a, &self.spec_b, d2, e0, &mut self.work);
                fill_axis_derivative(g, db_s.comp(1), axis, &mut self.spec_a);
                fill_axis_derivative(g, db_s.comp(2), axis, &mut self.spec_b);
                inverse_packed_masked(g, &self.spec_a, &self.spec_b, e1, e2, &mut self.work);
            }
            for idx in 0..len {
                let ua = self.ru[axis][idx];
                let ba = self.rb[axis][idx];
                for c in 0..3 {
                    let gu = self.s0[c][idx];
                    let gb = self.s1[c][idx];
                    let duc = self.rdu[c][idx];
                    let dbc = self.rdb[c][idx];
                    let t = ua * gb * dbc;
                    t_sum += t;
                    t_scale += t.abs();
                    let x1 = ba * gu * dbc;
                    let x2 = ba * gb * duc;
                    x_sum += x1 + x2;
                    x_scale += x1.abs() + x2.abs();
                }
            }
        }

        CancellationResiduals {
            transport: ratio(t_sum, t_scale),
            exchange: ratio(x_sum, x_scale),
            cross_orthogonality: ratio(c_sum, c_scale),
            curl_divergence: ratio(d_sum, d_scale),
            hall_energy: 0.0,
        }
    }
}

/// One-shot form of the identity suite at a single derivative index.
pub fn cancellation_checks(
    state: &SolverState,
    reference: &ReferenceState,
    alpha: [u8; 3],
) -> Result<CancellationResiduals> {
    IdentityWorkspace::new(state.grid().clone()).residuals(state, reference, &[alpha])
}

/// `|int hall(b) . b| / (||hall(b)|| ||b||)`: the Hall term moves no
/// magnetic energy.
pub fn hall_energy_residual(b: &VectorField) -> Result<f64> {
    let h = hall_term(b)?;
    let denom = l2_norm(&h) * l2_norm(b);
    Ok(ratio(inner_l2(&h, b)?, denom))
}

/// Compare the gradient part removed by the Leray projection of
/// `u.grad u - b.grad b` with the gradient of the pressure solved from
/// its divergence.
pub fn pressure_consistency(u: &VectorField, b: &VectorField) -> Result<PressureCheck> {
    let w = advect(u, u)?.diff(&advect(b, b)?)?;
    let grad_part = w.diff(&leray_project(&w))?;
    let d = divergence(&w);
    let grid = d.grid().clone();
    let n = grid.n();
    let mut p = ScalarField::zeros(grid.clone());
    for i in 0..n {
        if !grid.keep_axis(i) {
            continue;
        }
        for j in 0..n {
            if !grid.keep_axis(j) {
                continue;
            }
            for k in 0..n {
                if !grid.keep_axis(k) {
                    continue;
                }
                let idx = grid.idx(i, j, k);
                let xi = grid.xi(i, j, k);
                let xi2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
                if xi2 > 0.0 {
                    p.coeffs_mut()[idx] = -d.coeffs()[idx] / xi2;
                }
            }
        }
    }
    let gp = gradient(&p);
    let gradient_norm = l2_norm(&gp);
    let mismatch = ratio(l2_norm(&grad_part.diff(&gp)?), gradient_norm);
    Ok(PressureCheck { gradient_norm, mismatch })
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num.abs() / den
    } else {
        0.0
    }
}

/// Realize two spectral fields into six real arrays with three packed
/// inverse transforms.
fn realize_six(
    grid: &Grid,
    va: &VectorField,
    vb: &VectorField,
    out_a: &mut [Vec<f64>; 3],
    out_b: &mut [Vec<f64>; 3],
    work: &mut Vec<C64>,
) {
    let [a0, a1, a2] = out_a;
    let [b0, b1, b2] = out_b;
    inverse_packed_masked(grid, va.comp(0), va.comp(1), a0, a1, work);
    inverse_packed_masked(grid, va.comp(2), vb.comp(0), a2, b0, work);
    inverse_packed_masked(grid, vb.comp(1), vb.comp(2), b1, b2, work);
}

/// Realize one spectral field into three real arrays; the fourth packed
/// slot is discarded.
fn realize_three(
    grid: &Grid,
    v: &VectorField,
    out: &mut [Vec<f64>; 3],
    junk_real: &mut Vec<f64>,
    work: &mut Vec<C64>,
) {
    let [o0, o1, o2] = out;
    inverse_packed_masked(grid, v.comp(0), v.comp(1), o0, o1, work);
    inverse_packed_masked(grid, v.comp(2), v.comp(2), o2, junk_real, work);
}

/// Write the spectrum of `d_axis` of one spectral component into `spec`
/// over the kept bins. Dead bins stay zero: the scratch spectra are never
/// written outside the mask.
fn fill_axis_derivative(grid: &Grid, c: &[C64], axis: usize, spec: &mut [C64]) {
    let n = grid.n();
    for i in 0..n {
        if !grid.keep_axis(i) {
            continue;
        }
        for j in 0..n {
            if !grid.keep_axis(j) {
                continue;
            }
            for k in 0..n {
                if !grid.keep_axis(k) {
                    continue;
                }
                let idx = grid.idx(i, j, k);
                let xi = grid.wavenumber([i, j, k][axis]);
                let z = c[idx];
                spec[idx] = C64::new(-xi * z.im, xi * z.re);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::multi_indices;
    use crate::data::{random_h3_field, ModelParams};
    use crate::monitor::test_support::reference_flow;
    use crate::solver::SolverState;

    /// State with divergence-free `u`, `b` near the reference pair, as
    /// the solver would produce: project the localized fields and add a
    /// divergence-free perturbation.
    fn production_like_state(reference: &ReferenceState, amp: f64, seed: u64) -> SolverState {
        let grid = reference.f_tilde.grid().clone();
        let mut u = leray_project(&reference.f_tilde);
        let mut b = leray_project(&reference.g_tilde);
        u.add_scaled(&random_h3_field(&grid, 5, amp, seed).unwrap(), 1.0).unwrap();
        b.add_scaled(&random_h3_field(&grid, 5, amp, seed + 1).unwrap(), 1.0).unwrap();
        let mut state = SolverState::new(u, b).unwrap();
        state.t = reference.t;
        state
    }

    #[test]
    fn residuals_vanish_for_a_zero_perturbation() {
        let params = ModelParams { m0: 2.0, ..ModelParams::default() };
        let flow = reference_flow(32, params);
        let reference = flow.state_at(0.3).unwrap();
        let mut state =
            SolverState::new(reference.f_tilde.clone(), reference.g_tilde.clone()).unwrap();
        state.t = 0.3;
        let res = cancellation_checks(&state, &reference, [1, 0, 0]).unwrap();
        assert_eq!(res.transport, 0.0);
        assert_eq!(res.exchange, 0.0);
        assert_eq!(res.cross_orthogonality, 0.0);
        assert_eq!(res.curl_divergence, 0.0);
        assert!(res.hall_energy < 1e-12, "hall residual {}", res.hall_energy);
    }

    #[test]
    fn identities_hold_at_every_index_up_to_third_order() {
        // The perturbations U, B are far from divergence free (the
        // localized reference is not), so the residuals certify that the
        // checks lean only on div u = div b = 0 and div curl = 0.
        let params = ModelParams { m0: 2.0, ..ModelParams::default() };
        let flow = reference_flow(32, params);
        let reference = flow.state_at(0.2).unwrap();
        let state = production_like_state(&reference, 0.4, 11);
        let alphas = multi_indices(3);
        let mut ws = IdentityWorkspace::new(state.grid().clone());
        let res = ws.residuals(&state, &reference, &alphas).unwrap();
        assert!(res.max() < 1e-10, "worst residual {:?}", res);
        let one = ws.residuals(&state, &reference, &[[2, 1, 0]]).unwrap();
        assert!(one.max() < 1e-10, "worst residual {:?}", one);
    }

    #[test]
    fn broken_solenoidality_is_flagged() {
        let params = ModelParams { m0: 2.0, ..ModelParams::default() };
        let flow = reference_flow(32, params);
        let reference = flow.state_at(0.2).unwrap();
        // Raw localized fields as the state: both carry the cutoff
        // gradient, so neither u nor b is divergence free.
        let mut state = SolverState::new(
            reference.f_tilde.clone(),
            reference.g_tilde.clone(),
        )
        .unwrap();
        state.t = reference.t;
        let grid = state.grid().clone();
        state
            .u
            .add_scaled(&random_h3_field(&grid, 5, 0.4, 23).unwrap(), 1.0)
            .unwrap();
        state
            .b
            .add_scaled(&random_h3_field(&grid, 5, 0.4, 24).unwrap(), 1.0)
            .unwrap();
        let res = cancellation_checks(&state, &reference, [0, 0, 0]).unwrap();
        assert!(res.transport > 1e-6, "transport {}", res.transport);
        assert!(res.exchange > 1e-6, "exchange {}", res.exchange);
    }

    #[test]
    fn hall_neutrality_holds_on_random_fields() {
        let grid = crate::spectral::Grid::new(32, 16.0).unwrap();
        for seed in 0..5u64 {
            let b = random_h3_field(&grid, 6, 2.0, 31 + seed).unwrap();
            let r = hall_energy_residual(&b).unwrap();
            assert!(r < 1e-10, "seed {seed}: residual {r}");
        }
    }

    #[test]
    fn pressure_paths_agree() {
        let grid = crate::spectral::Grid::new(32, 16.0).unwrap();
        let u = random_h3_field(&grid, 5, 1.5, 41).unwrap();
        let b = random_h3_field(&grid, 5, 1.0, 42).unwrap();
        let check = pressure_consistency(&u, &b).unwrap();
        assert!(check.gradient_norm > 1e-8, "degenerate pressure gradient");
        assert!(check.mismatch < 1e-12, "mismatch {}", check.mismatch);
    }

    #[test]
    fn mismatched_times_are_rejected() {
        let params = ModelParams { m0: 2.0, ..ModelParams::default() };
        let flow = reference_flow(32, params);
        let reference = flow.state_at(0.2).unwrap();
        let state =
            SolverState::new(reference.f_tilde.clone(), reference.g_tilde.clone()).unwrap();
        match cancellation_checks(&state, &reference, [0, 0, 0]) {
            Err(Error::TimeMismatch(_)) => {}
            other => panic!("expected a time mismatch, got {other:?}"),
        }
    }
}
