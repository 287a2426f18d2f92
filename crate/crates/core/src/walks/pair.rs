//! Two walkers in free space driven by a lazily sampled Poisson field.
//!
//! Only obstacles inside the union of the two current unit balls matter, so
//! the field is drawn there alone: proposals arrive at rate `2 λ V`, land
//! uniformly in one of the two balls, and are thinned to rate `λ` on the
//! overlap. A point in both balls moves both walkers onto it.

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

use crate::point_process::unit_ball_volume;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairOutcome {
    /// Time of coalescence, measured from the start.
    pub met: Option<f64>,
    pub events: u64,
}

/// Uniform point in the `k`-dimensional unit ball.
pub fn sample_in_unit_ball<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    let mut v: Vec<f64> = (0..k).map(|_| StandardNormal.sample(rng)).collect();
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let radius = rng.random::<f64>().powf(1.0 / k as f64);
    for a in &mut v {
        *a *= radius / norm;
    }
    v
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

/// Runs the pair from `x` and `y` until they coalesce or `horizon` elapses.
pub fn simulate_pair<R: Rng + ?Sized>(rate: f64, x: &[f64], y: &[f64], horizon: f64, rng: &mut R) -> PairOutcome {
    let k = x.len();
    let mut pos = [x.to_vec(), y.to_vec()];
    let wait = Exp::new(2.0 * rate * unit_ball_volume(k)).expect("positive rate");
    let mut t = 0.0;
    let mut events = 0;
    loop {
        t += wait.sample(rng);
        if t > horizon {
            return PairOutcome { met: None, events };
        }
        let which = rng.random_range(0..2usize);
        let offset = sample_in_unit_ball(k, rng);
        let p: Vec<f64> = pos[which].iter().zip(&offset).map(|(c, o)| c + o).collect();
        let other = 1 - which;
        let in_both = dist2(&p, &pos[other]) <= 1.0;
        if in_both && rng.random::<bool>() {
            continue;
        }
        events += 1;
        if in_both {
            return PairOutcome { met: Some(t), events };
        }
        pos[which] = p;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point_process::rng_from_seed;

    #[test]
    fn ball_samples_stay_inside() {
        let mut rng = rng_from_seed(5);
        for k in 1..5 {
            let mut mean = 0.0;
            for _ in 0..4000 {
                let v = sample_in_unit_ball(k, &mut rng);
                let r2: f64 = v.iter().map(|a| a * a).sum();
                assert!(r2 <= 1.0);
                mean += r2.sqrt();
            }
            // E|U| = k / (k + 1)
            let expected = k as f64 / (k as f64 + 1.0);
            assert!((mean / 4000.0 - expected).abs() < 0.02);
        }
    }

    #[test]
    fn overlapping_walkers_meet_quickly_in_one_dimension() {
        let mut rng = rng_from_seed(9);
        let met = (0..200)
            .filter(|_| simulate_pair(1.0, &[0.0], &[1.5], 5000.0, &mut rng).met.is_some())
            .count();
        assert!(met > 190);
    }

    #[test]
    fn far_walkers_rarely_meet_early() {
        let mut rng = rng_from_seed(10);
        for _ in 0..50 {
            let out = simulate_pair(1.0, &[0.0, 0.0], &[30.0, 0.0], 5.0, &mut rng);
            assert!(out.met.is_none());
        }
    }
}
