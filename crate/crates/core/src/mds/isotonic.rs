/// A pooled run `start..end` of the monotone fit, sharing one value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Block {
    pub start: usize,
    pub end: usize,
    pub value: f64,
    pub weight: f64,
}

/// Pool-adjacent-violators: the non-decreasing sequence minimizing the
/// weighted squared error to `values`, as a list of pooled blocks.
///
/// # Panics
///
/// If the lengths differ or a weight is not strictly positive.
pub fn isotonic_blocks(values: &[f64], weights: &[f64]) -> Vec<Block> {
    assert_eq!(values.len(), weights.len(), "values and weights differ in length");
    assert!(weights.iter().all(|&w| w > 0.0), "weights must be positive");
    let mut blocks: Vec<Block> = Vec::with_capacity(values.len());
    for (i, (&v, &w)) in values.iter().zip(weights).enumerate() {
        blocks.push(Block { start: i, end: i + 1, value: v, weight: w });
        while blocks.len() > 1 {
            let last = blocks[blocks.len() - 1];
            let prev = blocks[blocks.len() - 2];
            if prev.value <= last.value {
                break;
            }
            let weight = prev.weight + last.weight;
            let merged = Block {
                start: prev.start,
                end: last.end,
                value: (prev.value * prev.weight + last.value * last.weight) / weight,
                weight,
            };
            blocks.pop();
            *blocks.last_mut().unwrap() = merged;
        }
    }
    blocks
}

pub fn isotonic_fit(values: &[f64], weights: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    for b in isotonic_blocks(values, weights) {
        out[b.start..b.end].fill(b.value);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feasible_input_is_unchanged() {
        let v = [0.5, 1.0, 1.0, 3.0];
        assert_eq!(isotonic_fit(&v, &[1.0; 4]), v);
    }

    #[test]
    fn two_point_violation_pools() {
        assert_eq!(isotonic_fit(&[3.0, 1.0], &[1.0, 1.0]), vec![2.0, 2.0]);
    }

    #[test]
    fn interior_violation() {
        assert_eq!(isotonic_fit(&[1.0, 3.0, 2.0, 4.0], &[1.0; 4]), vec![1.0, 2.5, 2.5, 4.0]);
    }

    #[test]
    fn weights_shift_the_pooled_value() {
        let f = isotonic_fit(&[3.0, 1.0], &[3.0, 1.0]);
        assert_eq!(f, vec![2.5, 2.5]);
    }

    #[test]
    #[should_panic]
    fn zero_weight_panics() {
        isotonic_fit(&[1.0], &[0.0]);
    }
}
