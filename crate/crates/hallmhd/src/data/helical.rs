//! Helical eigenvectors of the curl symbol.

use rustfft::num_complex::Complex;

type C64 = Complex<f64>;

/// Unit eigenvector of the curl symbol at wavevector `xi`:
/// `i xi x h = |xi| h`, `xi . h = 0`, `|h| = 1`, and `h(-xi) = conj h(xi)`.
///
/// Basis convention: take the coordinate axis least aligned with `xi`
/// (lowest index on ties), Gram-Schmidt it against `xi` into `e1`, set
/// `e2 = xi_hat x e1`, and return `h = (e1 + i e2)/sqrt(2)`. The choice
/// is deterministic, and flipping `xi` keeps `e1` while negating `e2`,
/// which is what makes the conjugation rule exact.
pub fn helical_basis(xi: [f64; 3]) -> [C64; 3] {
    let q = (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).sqrt();
    assert!(
        q > 0.0 && q.is_finite(),
        "curl symbol has no helical pair at xi = 0"
    );
    let hat = [xi[0] / q, xi[1] / q, xi[2] / q];
    let mut axis = 0;
    for a in 1..3 {
        if hat[a].abs() < hat[axis].abs() {
            axis = a;
        }
    }
    let mut e1 = [0.0f64; 3];
    e1[axis] = 1.0;
    let d = hat[axis];
    for c in 0..3 {
        e1[c] -= d * hat[c];
    }
    let norm = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
    for c in &mut e1 {
        *c /= norm;
    }
    let e2 = [
        hat[1] * e1[2] - hat[2] * e1[1],
        hat[2] * e1[0] - hat[0] * e1[2],
        hat[0] * e1[1] - hat[1] * e1[0],
    ];
    let s = 0.5f64.sqrt();
    [
        C64::new(e1[0] * s, e2[0] * s),
        C64::new(e1[1] * s, e2[1] * s),
        C64::new(e1[2] * s, e2[2] * s),
    ]
}
