use crate::error::{Error, Result};

// Shift point for the recurrence. The first omitted series term, B14/x^15,
// is below 1e-16 from here on.
const ASYMPTOTIC_FROM: f64 = 12.0;

/// Trigamma function ψ₁(x), the second derivative of ln Γ(x), for x > 0.
///
/// Uses ψ₁(x) = ψ₁(x+1) + 1/x² until the argument reaches 12, then the
/// Bernoulli-number asymptotic expansion through the x⁻¹³ term.
pub fn trigamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("trigamma requires x > 0, got {x}")));
    }
    let mut shifted = x;
    let mut head = 0.0;
    while shifted < ASYMPTOTIC_FROM {
        head += 1.0 / (shifted * shifted);
        shifted += 1.0;
    }
    Ok(asymptotic(shifted) + head)
}

fn asymptotic(x: f64) -> f64 {
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // B2/x^3, B4/x^5, ... B12/x^13 in Horner form over 1/x^2.
    let tail = inv2
        * (1.0 / 6.0
            + inv2
                * (-1.0 / 30.0
                    + inv2
                        * (1.0 / 42.0
                            + inv2 * (-1.0 / 30.0 + inv2 * (5.0 / 66.0 - inv2 * 691.0 / 2730.0)))));
    inv + 0.5 * inv2 + inv * tail
}
