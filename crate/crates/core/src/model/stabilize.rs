//! Microphone filter constraints: fixed zeros at DC and Nyquist, and pole
//! reflection so that `G⁻¹` stays stable.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

/// Root modulus accepted as stable.
pub const STABILITY_TOLERANCE: f64 = 1e-9;

/// Fixed factor `[1, 0, -1]` placing zeros at `z = 1` and `z = -1`.
pub const COHERENCE_KERNEL: [f64; 3] = [1.0, 0.0, -1.0];

/// Roots of `Σ_k c[k] z^{-k}` (equivalently of `Σ_k c[k] z^{n-k}`), from
/// the eigenvalues of the companion matrix.
pub fn filter_roots(c: &[f64]) -> Result<Vec<Complex64>> {
    if c.is_empty() || c[0] == 0.0 {
        return Err(invalid("filter roots need a nonzero leading coefficient"));
    }
    if c.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("non-finite filter coefficients {c:?}")));
    }
    let n = c.len() - 1;
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut companion = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        companion[(0, j)] = -c[j + 1] / c[0];
    }
    for i in 1..n {
        companion[(i, i - 1)] = 1.0;
    }
    let schur = Schur::try_new(companion, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Numeric(format!("companion eigenvalues did not converge for filter {c:?}")))?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

pub fn max_root_modulus(c: &[f64]) -> Result<f64> {
    Ok(filter_roots(c)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Monic real polynomial (highest power first) with the given roots, built
/// by multiplying linear factors in order of ascending modulus.
pub fn poly_from_roots(roots: &[Complex64]) -> Result<Vec<f64>> {
    let mut sorted = roots.to_vec();
    sorted.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    let mut coeffs = vec![Complex64::new(1.0, 0.0)];
    for r in &sorted {
        let mut next = coeffs.clone();
        next.push(Complex64::new(0.0, 0.0));
        for i in 1..next.len() {
            next[i] -= r * coeffs[i - 1];
        }
        coeffs = next;
    }
    let scale = coeffs.iter().map(|c| c.re.abs()).fold(1.0, f64::max);
    let residue = coeffs.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    if residue > 1e-8 * scale {
        return Err(Error::Numeric(format!(
            "imaginary residue {residue:e} after reconstructing from roots {sorted:?}"
        )));
    }
    Ok(coeffs.iter().map(|c| c.re).collect())
}

/// Reflect every root outside the unit circle to `1 / conj(z)`.
///
/// The leading coefficient stays 1 and the overall gain change is not
/// compensated. Filters that are already stable are returned untouched.
pub fn stabilize_filter(g: &[f64]) -> Result<Vec<f64>> {
    if g.is_empty() || g[0] != 1.0 {
        return Err(invalid(format!("stabilize_filter needs g[0] == 1, got {g:?}")));
    }
    let roots = filter_roots(g)?;
    if roots.iter().all(|z| z.norm() <= 1.0 + STABILITY_TOLERANCE) {
        return Ok(g.to_vec());
    }
    let reflected: Vec<Complex64> = roots
        .iter()
        .map(|&z| if z.norm() > 1.0 + STABILITY_TOLERANCE { 1.0 / z.conj() } else { z })
        .collect();
    let out = poly_from_roots(&reflected)?;
    debug_assert_eq!(out.len(), g.len());
    Ok(out)
}

/// `g ∗ [1, 0, -1]`: the kernel of `G = G₁ G₀` used in every operator
/// application. The trainable parameter stays `g`.
pub fn g_effective(g: &[f64]) -> Vec<f64> {
    crate::signal::direct_convolve(g, &COHERENCE_KERNEL)
}
