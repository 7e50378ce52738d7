use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use rand_distr::{Beta, Distribution};

/// Bayesian learning automaton over two Bernoulli arms, plus the reward cache.
///
/// Each round both arms draw `eps_l ~ Beta(alpha_l, beta_l)`; the arm with the
/// larger draw plays `z ~ Bernoulli(eps_l)` and its posterior absorbs `z`.
/// `z = 1` means a greedy coordinate pick (largest cached reward), `z = 0` a
/// uniformly random one.
#[derive(Debug, Clone, PartialEq)]
pub struct BlaState {
    pub alpha1: f64,
    pub beta1: f64,
    pub alpha2: f64,
    pub beta2: f64,
    /// Cached per-coordinate rewards.
    pub psi: Vec<f64>,
}

/// What one automaton round decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Selection {
    pub coordinate: usize,
    /// Arm played, 1 or 2.
    pub arm: u8,
    pub greedy: bool,
}

impl BlaState {
    /// Uniform priors and an all-zero reward cache.
    pub fn new(n: usize) -> Self {
        Self {
            alpha1: 1.0,
            beta1: 1.0,
            alpha2: 1.0,
            beta2: 1.0,
            psi: vec![0.0; n],
        }
    }

    pub fn select<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Selection {
        let eps1 = sample_beta(rng, self.alpha1, self.beta1);
        let eps2 = sample_beta(rng, self.alpha2, self.beta2);
        let (arm, eps) = if eps2 > eps1 { (2, eps2) } else { (1, eps1) };
        let greedy = rng.random_bool(eps.clamp(0.0, 1.0));
        let z = greedy as u8 as f64;
        let (alpha, beta) = match arm {
            1 => (&mut self.alpha1, &mut self.beta1),
            _ => (&mut self.alpha2, &mut self.beta2),
        };
        *alpha += z;
        *beta += 1.0 - z;
        let coordinate = self.choose_coordinate(greedy, rng);
        Selection {
            coordinate,
            arm,
            greedy,
        }
    }

    /// Greedy: lowest index of the largest cached reward. Otherwise uniform.
    pub fn choose_coordinate<R: Rng + ?Sized>(&self, greedy: bool, rng: &mut R) -> usize {
        if greedy {
            argmax(&self.psi)
        } else {
            rng.random_range(0..self.psi.len())
        }
    }

    /// Total pseudo-count added since the priors.
    pub fn observations(&self) -> f64 {
        self.alpha1 + self.beta1 + self.alpha2 + self.beta2 - 4.0
    }
}

fn sample_beta<R: Rng + ?Sized>(rng: &mut R, alpha: f64, beta: f64) -> f64 {
    // parameters stay >= 1, so construction cannot fail
    Beta::new(alpha, beta).map(|b| b.sample(rng)).unwrap_or(0.5)
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SimRng;
    use rand::SeedableRng;

    #[test]
    fn fresh_automaton_picks_each_arm_half_the_time() {
        let mut rng = SimRng::seed_from_u64(1);
        let trials = 10_000;
        let arm1 = (0..trials)
            .filter(|_| BlaState::new(4).select(&mut rng).arm == 1)
            .count();
        let frac = arm1 as f64 / trials as f64;
        assert!((frac - 0.5).abs() < 0.05, "{frac}");
    }

    #[test]
    fn greedy_branch_takes_the_argmax() {
        let mut bla = BlaState::new(5);
        bla.psi = vec![0.0, 5.0, 1.0, 5.0, -2.0];
        let mut rng = SimRng::seed_from_u64(2);
        assert_eq!(bla.choose_coordinate(true, &mut rng), 1);
    }

    #[test]
    fn random_branch_is_uniform() {
        let bla = BlaState::new(16);
        let mut rng = SimRng::seed_from_u64(3);
        let calls = 10_000;
        let mut counts = [0usize; 16];
        for _ in 0..calls {
            counts[bla.choose_coordinate(false, &mut rng)] += 1;
        }
        let expected = calls as f64 / 16.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // 15 degrees of freedom, 0.999 quantile is about 37.7
        assert!(chi2 < 37.7, "chi2 = {chi2}");
        for &c in &counts {
            assert!((c as f64 / calls as f64 - 1.0 / 16.0).abs() < 0.03);
        }
    }

    #[test]
    fn posterior_moves_by_one_per_round() {
        let mut bla = BlaState::new(3);
        let mut rng = SimRng::seed_from_u64(4);
        for round in 1..=200 {
            let before = (bla.alpha1, bla.beta1, bla.alpha2, bla.beta2);
            let sel = bla.select(&mut rng);
            assert_eq!(bla.observations(), round as f64);
            let (da, db) = match sel.arm {
                1 => (bla.alpha1 - before.0, bla.beta1 - before.1),
                _ => (bla.alpha2 - before.2, bla.beta2 - before.3),
            };
            assert_eq!((da, db), if sel.greedy { (1.0, 0.0) } else { (0.0, 1.0) });
            assert!(bla.alpha1 >= 1.0 && bla.beta1 >= 1.0 && bla.alpha2 >= 1.0 && bla.beta2 >= 1.0);
        }
    }
}
