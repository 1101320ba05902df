//! Seeded random sets for index experiments.

use fragrd_core::{Point, SetExpr};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Disjoint union of 1 to 5 intervals in `[−5, 5]`, each at least 0.1
/// long and at least 0.05 apart.
pub fn random_intervals(rng: &mut impl Rng) -> Vec<(f64, f64)> {
    loop {
        let k = rng.gen_range(1..=5);
        let mut pts: Vec<f64> = (0..2 * k).map(|_| rng.gen_range(-5.0..5.0)).collect();
        pts.sort_by(f64::total_cmp);
        let ok = pts.chunks(2).all(|c| c[1] - c[0] >= 0.1) && pts.windows(2).skip(1).step_by(2).all(|w| w[1] - w[0] >= 0.05);
        if ok {
            return pts.chunks(2).map(|c| (c[0], c[1])).collect();
        }
    }
}

/// Union of 1 to 4 balls and boxes in `[−3, 3]²`, sometimes with a hole.
pub fn random_planar(rng: &mut impl Rng) -> SetExpr {
    let k = rng.gen_range(1..=4);
    let mut parts = Vec::with_capacity(k);
    for _ in 0..k {
        let c = Point::xy(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let e = if rng.gen_bool(0.5) {
            SetExpr::ball(2, c, rng.gen_range(0.3..1.5))
        } else {
            let w = rng.gen_range(0.4..2.5);
            let hgt = rng.gen_range(0.4..2.5);
            SetExpr::cuboid(2, c - Point::xy(w / 2.0, hgt / 2.0), c + Point::xy(w / 2.0, hgt / 2.0))
        };
        parts.push(e.expect("valid primitive"));
    }
    let set = SetExpr::union(parts).expect("nonempty union");
    if rng.gen_bool(0.2) {
        let b = set.bbox();
        let c = Point::xy(rng.gen_range(b.min.0[0]..b.max.0[0]), rng.gen_range(b.min.0[1]..b.max.0[1]));
        let hole = SetExpr::ball(2, c, rng.gen_range(0.1..0.4)).expect("valid hole");
        let cut = SetExpr::diff(set.clone(), hole).expect("valid difference");
        if cut.exact_measure().map_or(true, |m| m > 0.05) {
            return cut;
        }
    }
    set
}

/// `count` sets of dimension `dim`; the sequence depends only on the seed.
pub fn corpus(seed: u64, dim: usize, count: usize) -> Vec<SetExpr> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (dim as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    (0..count)
        .map(|_| match dim {
            1 => SetExpr::intervals(&random_intervals(&mut rng)).expect("valid intervals"),
            _ => random_planar(&mut rng),
        })
        .collect()
}
