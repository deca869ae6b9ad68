use crate::error::{check_len, Error, Result};
use crate::linalg::CsrMatrix;

/// Discrete L² norm `sqrt(vᵀ M v)`.
pub fn l2_norm(coeffs: &[f64], mass: &CsrMatrix) -> Result<f64> {
    check_len(mass.rows(), coeffs.len())?;
    Ok(mass.quadratic_form(coeffs).max(0.0).sqrt())
}

/// `‖v - w‖ / ‖w‖` in the mass-matrix norm.
pub fn l2_rel_error(coeffs: &[f64], reference: &[f64], mass: &CsrMatrix) -> Result<f64> {
    check_len(reference.len(), coeffs.len())?;
    let den = l2_norm(reference, mass)?;
    if den == 0.0 {
        return Err(Error::DivideByZero("reference has zero L2 norm"));
    }
    let diff: Vec<f64> = coeffs.iter().zip(reference).map(|(a, b)| a - b).collect();
    Ok(l2_norm(&diff, mass)? / den)
}
