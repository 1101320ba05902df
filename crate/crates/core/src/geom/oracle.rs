use super::GeomError;
use crate::math;

/// Exact δ₁ of a finite union of disjoint open intervals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Delta1Oracle {
    pub delta1: f64,
    /// Centre of an optimal window (smallest among optimal breakpoints).
    pub center: f64,
    pub measure: f64,
    pub radius: f64,
}

fn overlap(iv: &[(f64, f64)], lo: f64, hi: f64) -> f64 {
    iv.iter().map(|&(a, b)| (b.min(hi) - a.max(lo)).max(0.0)).sum()
}

/// Maximises `λ(E ∩ (c − R_E, c + R_E))` over `c`. The overlap is piecewise
/// linear in `c` with kinks where a window end meets an interval end, so
/// evaluating every `a_i ± R_E`, `b_i ± R_E` is exact.
pub fn delta1_oracle_1d(intervals: &[(f64, f64)]) -> Result<Delta1Oracle, GeomError> {
    if intervals.is_empty() {
        return Err(GeomError::InvalidIntervals);
    }
    let mut prev = f64::NEG_INFINITY;
    for &(a, b) in intervals {
        if !(a.is_finite() && b.is_finite() && a < b && a >= prev) {
            return Err(GeomError::InvalidIntervals);
        }
        prev = b;
    }
    let measure = math::compensated_sum(&intervals.iter().map(|(a, b)| b - a).collect::<alloc::vec::Vec<_>>());
    let r = measure / 2.0;
    let mut best = (f64::NEG_INFINITY, f64::INFINITY);
    for &(a, b) in intervals {
        for c in [a - r, a + r, b - r, b + r] {
            let v = overlap(intervals, c - r, c + r);
            if v > best.0 + 1e-15 * measure || ((v - best.0).abs() <= 1e-15 * measure && c < best.1) {
                best = (v, c);
            }
        }
    }
    Ok(Delta1Oracle { delta1: (1.0 - best.0 / measure).max(0.0), center: best.1, measure, radius: r })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_interval() {
        let o = delta1_oracle_1d(&[(2.0, 5.0)]).unwrap();
        assert_eq!(o.delta1, 0.0);
        assert_eq!(o.center, 3.5);
    }

    #[test]
    fn two_far_intervals() {
        let o = delta1_oracle_1d(&[(0.0, 2.0), (10.0, 12.0)]).unwrap();
        assert_eq!(o.delta1, 0.5);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(delta1_oracle_1d(&[(0.0, 2.0), (1.0, 3.0)]), Err(GeomError::InvalidIntervals));
        assert_eq!(delta1_oracle_1d(&[(3.0, 4.0), (0.0, 1.0)]), Err(GeomError::InvalidIntervals));
        assert_eq!(delta1_oracle_1d(&[(1.0, 1.0)]), Err(GeomError::InvalidIntervals));
        assert_eq!(delta1_oracle_1d(&[]), Err(GeomError::InvalidIntervals));
    }

    #[test]
    fn periodic_comb() {
        // 13 intervals of length 0.75/2.16 on a 1/2.16 lattice.
        let z = 2.16;
        let iv: alloc::vec::Vec<(f64, f64)> =
            (-6..=6).map(|x| (x as f64 / z - 0.375 / z, x as f64 / z + 0.375 / z)).collect();
        let o = delta1_oracle_1d(&iv).unwrap();
        assert!((o.measure - 13.0 * 0.75 / z).abs() < 1e-12);
        assert!((o.delta1 - 3.0 / 13.0).abs() < 1e-12);
    }
}
