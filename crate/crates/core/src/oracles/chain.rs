//! Continuous-time Markov chain paths from exponential holding times.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::model::RegimeModel;

/// Piecewise-constant regime path on `[t0, horizon]` as `(regime, entry_time)`
/// pairs; the first entry is `(start, t0)`.
pub fn simulate_chain<R: Rng + ?Sized>(
    model: &RegimeModel,
    start: usize,
    t0: f64,
    horizon: f64,
    rng: &mut R,
) -> Vec<(usize, f64)> {
    let mut path = vec![(start, t0)];
    let mut state = start;
    let mut t = t0;
    loop {
        let rate = model.exit_rate(state);
        if rate <= 0.0 {
            break;
        }
        let hold: f64 = Exp1.sample(rng);
        t += hold / rate;
        if t >= horizon {
            break;
        }
        state = next_state(model, state, rate, rng);
        path.push((state, t));
    }
    path
}

fn next_state<R: Rng + ?Sized>(model: &RegimeModel, from: usize, rate: f64, rng: &mut R) -> usize {
    let row = &model.generator()[from];
    if row.len() == 2 {
        return 1 - from;
    }
    let u: f64 = rng.random::<f64>() * rate;
    let mut acc = 0.0;
    let mut last = from;
    for (j, &a) in row.iter().enumerate() {
        if j == from || a <= 0.0 {
            continue;
        }
        acc += a;
        last = j;
        if u < acc {
            return j;
        }
    }
    last
}

/// Draws a regime index from a probability vector.
pub fn sample_regime<R: Rng + ?Sized>(dist: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in dist.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    dist.len() - 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_generator_never_switches() {
        let m = RegimeModel::new(vec![0.05, 0.03], vec![0.2, 0.3], vec![vec![0.0; 2]; 2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(simulate_chain(&m, 1, 0.0, 10.0, &mut rng), vec![(1, 0.0)]);
    }

    #[test]
    fn exit_rate_matches_generator() {
        let m = RegimeModel::two_state([0.05, 0.03], [0.2, 0.3], 5.0, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (mut exits, mut occupied) = (0usize, 0.0);
        for _ in 0..20_000 {
            let p = simulate_chain(&m, 0, 0.0, 10.0, &mut rng);
            for (k, &(s, t)) in p.iter().enumerate() {
                let end = p.get(k + 1).map_or(10.0, |x| x.1);
                if s == 0 {
                    occupied += end - t;
                    if k + 1 < p.len() {
                        exits += 1;
                    }
                }
            }
        }
        let rate = exits as f64 / occupied;
        // Poisson count: sd of the rate is about sqrt(exits) / occupied
        let sd = (exits as f64).sqrt() / occupied;
        assert!((rate - 5.0).abs() < 3.0 * sd, "rate {rate} sd {sd}");
    }

    #[test]
    fn occupation_tends_to_stationary_law() {
        let m = RegimeModel::two_state([0.05, 0.03], [0.2, 0.3], 3.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let horizon = 2000.0;
        let p = simulate_chain(&m, 0, 0.0, horizon, &mut rng);
        let mut occ = 0.0;
        for (k, &(s, t)) in p.iter().enumerate() {
            let end = p.get(k + 1).map_or(horizon, |x| x.1);
            if s == 0 {
                occ += end - t;
            }
        }
        assert!((occ / horizon - 0.25).abs() < 0.02, "{}", occ / horizon);
    }
}
