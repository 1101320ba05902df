use alloc::vec;
use alloc::vec::Vec;

use crate::point::MAX_DIM;

/// Lower envelope of parabolas rooted at the finite entries of `f`.
fn dt1(f: &[f64], out: &mut [f64], v: &mut Vec<usize>, z: &mut Vec<f64>) {
    v.clear();
    z.clear();
    for (q, &fq) in f.iter().enumerate() {
        if !fq.is_finite() {
            continue;
        }
        let qf = q as f64;
        loop {
            let Some(&p) = v.last() else {
                v.push(q);
                z.push(f64::NEG_INFINITY);
                break;
            };
            let pf = p as f64;
            let s = ((fq + qf * qf) - (f[p] + pf * pf)) / (2.0 * (qf - pf));
            if s <= *z.last().expect("z tracks v") {
                v.pop();
                z.pop();
                continue;
            }
            v.push(q);
            z.push(s);
            break;
        }
    }
    if v.is_empty() {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        return;
    }
    let mut k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        let qf = q as f64;
        while k + 1 < v.len() && z[k + 1] < qf {
            k += 1;
        }
        let d = qf - v[k] as f64;
        *o = d * d + f[v[k]];
    }
}

/// Exact squared Euclidean distance, in cell units, from every cell centre
/// to the nearest feature cell centre. Cells are laid out with axis 0
/// fastest; `n` holds the extent per axis (1 for unused axes). Returns
/// `+∞` everywhere when there is no feature cell.
pub fn squared_distance_transform(n: [usize; MAX_DIM], feature: &[bool]) -> Vec<f64> {
    let len = n[0] * n[1] * n[2];
    assert_eq!(feature.len(), len, "feature mask does not match the grid");
    let mut d: Vec<f64> = feature.iter().map(|&b| if b { 0.0 } else { f64::INFINITY }).collect();
    let longest = n.iter().copied().max().unwrap_or(1);
    let mut line = vec![0.0; longest];
    let mut out = vec![0.0; longest];
    let mut v = Vec::with_capacity(longest);
    let mut z = Vec::with_capacity(longest);
    let stride = [1, n[0], n[0] * n[1]];
    for axis in 0..MAX_DIM {
        let m = n[axis];
        if m == 1 {
            continue;
        }
        let s = stride[axis];
        for start in 0..len {
            // Visit each line once, from the cell whose `axis` coordinate is 0.
            if (start / s) % m != 0 {
                continue;
            }
            for i in 0..m {
                line[i] = d[start + i * s];
            }
            dt1(&line[..m], &mut out[..m], &mut v, &mut z);
            for i in 0..m {
                d[start + i * s] = out[i];
            }
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(n: [usize; 3], feature: &[bool]) -> Vec<f64> {
        let mut out = vec![f64::INFINITY; feature.len()];
        for a in 0..feature.len() {
            let pa = [a % n[0], (a / n[0]) % n[1], a / (n[0] * n[1])];
            for b in 0..feature.len() {
                if !feature[b] {
                    continue;
                }
                let pb = [b % n[0], (b / n[0]) % n[1], b / (n[0] * n[1])];
                let d: f64 = (0..3).map(|k| (pa[k] as f64 - pb[k] as f64).powi(2)).sum();
                out[a] = out[a].min(d);
            }
        }
        out
    }

    #[test]
    fn matches_brute_force() {
        let mut seed = 12345u64;
        for n in [[17, 1, 1], [9, 7, 1], [5, 6, 4]] {
            let len = n[0] * n[1] * n[2];
            let f: Vec<bool> = (0..len)
                .map(|_| {
                    seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    (seed >> 60) == 0
                })
                .collect();
            assert_eq!(squared_distance_transform(n, &f), brute(n, &f));
        }
    }

    #[test]
    fn no_features_is_infinite() {
        let d = squared_distance_transform([4, 3, 1], &[false; 12]);
        assert!(d.iter().all(|x| x.is_infinite()));
    }
}
