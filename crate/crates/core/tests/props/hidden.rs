//! Hidden-target problems over the agent space: fitness falls off with the
//! Hamming distance to a secret optimum.

use pwlab::optim::Optimizer;
use pwlab::{SearchPoint, SearchSpace};
use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};

pub fn normalized_hamming(p: &SearchPoint, target: &SearchPoint) -> f64 {
    p.hamming(target) as f64 / p.dims() as f64
}

/// Noiseless: `1 - normalizedHamming`, maximal only at the target.
pub fn noiseless(target: &SearchPoint) -> impl FnMut(&SearchPoint) -> f64 + '_ {
    move |p| 1.0 - normalized_hamming(p, target)
}

/// +1 with probability `0.5 + 0.4 * (1 - normalizedHamming)`, else -1.
pub fn noisy(target: &SearchPoint, seed: u64) -> impl FnMut(&SearchPoint) -> f64 + '_ {
    let mut rng = SmallRng::seed_from_u64(seed);
    move |p| {
        let win = 0.5 + 0.4 * (1.0 - normalized_hamming(p, target));
        if rng.gen::<f64>() < win {
            1.0
        } else {
            -1.0
        }
    }
}

/// Brute force over the space; the true optimum of either problem.
pub fn brute_force_optimum(
    space: &SearchSpace,
    f: &mut dyn FnMut(&SearchPoint) -> f64,
) -> SearchPoint {
    let mut best: Option<(f64, SearchPoint)> = None;
    for p in space.enumerate() {
        let v = f(&p);
        if best.as_ref().is_none_or(|(b, _)| v > *b) {
            best = Some((v, p));
        }
    }
    best.unwrap().1
}

/// Runs `opt` on `runs` seeded targets and counts exact recoveries.
pub fn hits(opt: &dyn Optimizer, runs: u64, budget: usize, noise: bool) -> usize {
    let space = SearchSpace::agent();
    (0..runs)
        .filter(|&r| {
            let mut rng = SmallRng::seed_from_u64(0x5eed ^ r);
            let target = space.random_point(&mut rng);
            let optimum = brute_force_optimum(&space, &mut noiseless(&target));
            assert_eq!(optimum, target);
            let rec = if noise {
                opt.run(
                    &mut noisy(&target, r.wrapping_mul(31) + 7),
                    &space,
                    budget,
                    r,
                )
                .unwrap()
                .recommendation
            } else {
                opt.run(&mut noiseless(&target), &space, budget, r)
                    .unwrap()
                    .recommendation
            };
            rec == optimum
        })
        .count()
}
