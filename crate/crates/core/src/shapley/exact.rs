use super::{check_inputs, coalition_value, mask_of, Background, ShapleyValues, ENUMERATION_CAP};
use crate::error::{Error, Result};
use crate::types::BlackBox;

/// Brute-force Shapley values from all `2^d` coalition values:
/// `phi_i = sum_{Q not containing i} |Q|! (d - |Q| - 1)! / d! * (v(Q + i) - v(Q))`.
pub fn exact_shapley(model: &dyn BlackBox, z_e: &[f64], background: &Background) -> Result<ShapleyValues> {
    check_inputs(model, z_e, background)?;
    let d = z_e.len();
    if d > ENUMERATION_CAP {
        return Err(Error::EnumerationCap {
            d,
            cap: ENUMERATION_CAP,
        });
    }
    let values: Vec<f64> = (0..1u64 << d)
        .map(|bits| coalition_value(model, z_e, &mask_of(bits, d), background))
        .collect();

    let factorial: Vec<f64> = (0..=d)
        .scan(1.0, |acc, i| {
            if i > 0 {
                *acc *= i as f64;
            }
            Some(*acc)
        })
        .collect();
    let weight = |q: usize| factorial[q] * factorial[d - q - 1] / factorial[d];

    let phi = (0..d)
        .map(|i| {
            let bit = 1u64 << i;
            (0..1u64 << d)
                .filter(|q| q & bit == 0)
                .map(|q| weight(q.count_ones() as usize) * (values[(q | bit) as usize] - values[q as usize]))
                .sum()
        })
        .collect();
    Ok(ShapleyValues {
        phi,
        base_value: values[0],
    })
}
