use std::collections::BTreeMap;

use crate::coupling::{common_denominator, CouplingTable};
use crate::error::Result;
use crate::measure::FiniteMeasure;

/// Coupling of `p` and `q` with `P(X = Y) = 1 - d_TV(p, q)`: the diagonal
/// carries `min(p, q)` and, off the diagonal, `X` and `Y` are independent
/// with laws proportional to `p - min(p, q)` and `q - min(p, q)`.
pub fn maximal_coupling<K: Ord + Clone>(p: &FiniteMeasure<K>, q: &FiniteMeasure<K>) -> Result<CouplingTable<K, K>> {
    let (denom, nums) = common_denominator(&[p, q])?;
    let (left, right) = (&nums[0], &nums[1]);
    let mut cells = BTreeMap::new();
    let mut left_residual = BTreeMap::new();
    let mut right_residual = BTreeMap::new();
    for (k, &a) in left {
        let b = right.get(k).copied().unwrap_or(0);
        let m = a.min(b);
        if m > 0 {
            cells.insert((k.clone(), k.clone()), m);
        }
        if a > m {
            left_residual.insert(k.clone(), a - m);
        }
    }
    for (k, &b) in right {
        let a = left.get(k).copied().unwrap_or(0);
        if b > a {
            right_residual.insert(k.clone(), b - a);
        }
    }
    CouplingTable::new(denom, left.clone(), right.clone(), cells, left_residual, right_residual)
}
