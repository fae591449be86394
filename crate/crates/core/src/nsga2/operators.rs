//! Variation and selection operators over integer green-time genomes.

use rand::Rng;

use super::sort::crowded_cmp;
use super::{Genome, Individual};

/// Green-time bounds every gene must respect.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeneBounds {
    pub min: u32,
    pub max: u32,
}

impl GeneBounds {
    pub fn new(min: u32, max: u32) -> Self {
        debug_assert!(min <= max);
        Self { min, max }
    }

    pub fn clamp(self, gene: u32) -> u32 {
        gene.clamp(self.min, self.max)
    }

    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> u32 {
        rng.random_range(self.min..=self.max)
    }
}

/// Crowded-comparison tournament over `k` uniformly drawn contestants
/// (with replacement). Returns the winner's index.
///
/// Lowest rank wins, then largest crowding, then lowest index.
pub fn tournament_select<R: Rng + ?Sized>(pop: &[Individual], k: usize, rng: &mut R) -> usize {
    assert!(!pop.is_empty(), "tournament over an empty population");
    let mut best = rng.random_range(0..pop.len());
    for _ in 1..k.max(1) {
        let challenger = rng.random_range(0..pop.len());
        let order = crowded_cmp(&pop[challenger], &pop[best]).then(challenger.cmp(&best));
        if order.is_lt() {
            best = challenger;
        }
    }
    best
}

/// Uniform crossover. With probability `prob` the pair is recombined, and
/// then each position is swapped between the children with probability 1/2.
pub fn crossover<R: Rng + ?Sized>(
    a: &Genome,
    b: &Genome,
    prob: f64,
    rng: &mut R,
) -> (Genome, Genome) {
    assert_eq!(a.len(), b.len(), "crossover parents differ in length");
    let mut c1 = a.clone();
    let mut c2 = b.clone();
    if rng.random_bool(prob) {
        for i in 0..a.len() {
            if rng.random_bool(0.5) {
                std::mem::swap(&mut c1.0[i], &mut c2.0[i]);
            }
        }
    }
    (c1, c2)
}

/// Per-gene uniform re-draw within `bounds` with probability `prob`,
/// followed by clamping every gene into bounds.
pub fn mutate<R: Rng + ?Sized>(genome: &Genome, prob: f64, bounds: GeneBounds, rng: &mut R) -> Genome {
    let genes = genome
        .0
        .iter()
        .map(|&g| {
            if rng.random_bool(prob) {
                bounds.sample(rng)
            } else {
                bounds.clamp(g)
            }
        })
        .collect();
    Genome(genes)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::model::ObjectiveVector;

    fn ind(rank: usize, crowding: f64) -> Individual {
        Individual {
            genome: Genome(vec![10, 10]),
            objectives: ObjectiveVector::new(0, 0),
            rank,
            crowding,
            feasible: true,
        }
    }

    #[test]
    fn lower_rank_wins() {
        let pop = vec![ind(1, f64::INFINITY), ind(0, 0.1)];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // 64 draws from two individuals: both appear except with p = 2^-63
        for _ in 0..200 {
            let w = tournament_select(&pop, 64, &mut rng);
            assert_eq!(w, 1);
        }
    }

    #[test]
    fn equal_rank_prefers_infinite_crowding() {
        let pop = vec![ind(0, 0.5), ind(0, f64::INFINITY)];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            assert_eq!(tournament_select(&pop, 64, &mut rng), 1);
        }
    }

    #[test]
    fn full_ties_go_to_lower_index() {
        let pop = vec![ind(0, 1.0); 3];
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            assert_eq!(tournament_select(&pop, 64, &mut rng), 0);
        }
    }

    #[test]
    fn tournament_is_deterministic_under_seed() {
        let pop: Vec<Individual> = (0..10).map(|i| ind(i % 3, i as f64)).collect();
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..20)
                .map(|_| tournament_select(&pop, 2, &mut rng))
                .collect::<Vec<_>>()
        };
        assert_eq!(run(42), run(42));
    }

    #[test]
    fn crossover_exchanges_positions() {
        let a = Genome(vec![10, 20]);
        let b = Genome(vec![30, 40]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let (c1, c2) = crossover(&a, &b, 1.0, &mut rng);
            for i in 0..2 {
                let mut got = [c1.0[i], c2.0[i]];
                let mut want = [a.0[i], b.0[i]];
                got.sort();
                want.sort();
                assert_eq!(got, want);
            }
        }
    }

    #[test]
    fn crossover_identity_cases() {
        let a = Genome(vec![10, 20, 30]);
        let b = Genome(vec![40, 50, 60]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert_eq!(crossover(&a, &b, 0.0, &mut rng), (a.clone(), b.clone()));
        assert_eq!(crossover(&a, &a, 1.0, &mut rng), (a.clone(), a.clone()));
    }

    #[test]
    fn mutation_edge_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = Genome(vec![12, 30, 45]);
        assert_eq!(mutate(&g, 0.0, GeneBounds::new(10, 60), &mut rng), g);
        let fixed = Genome(vec![10, 10, 10]);
        assert_eq!(mutate(&fixed, 1.0, GeneBounds::new(10, 10), &mut rng), fixed);
    }

    #[test]
    fn full_mutation_is_uniform_over_range() {
        // chi-square goodness of fit over 10k single-gene re-draws
        let bounds = GeneBounds::new(10, 19);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut counts = [0u32; 10];
        let draws = 10_000;
        for _ in 0..draws {
            let g = mutate(&Genome(vec![15]), 1.0, bounds, &mut rng);
            assert!((10..=19).contains(&g.0[0]));
            counts[(g.0[0] - 10) as usize] += 1;
        }
        let expected = draws as f64 / 10.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // 99.9th percentile of chi-square with 9 degrees of freedom
        assert!(chi2 < 27.88, "chi2 = {chi2}, counts = {counts:?}");
    }

    #[test]
    fn mutation_rate_matches_expectation() {
        let bounds = GeneBounds::new(0, 1_000_000);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g = Genome(vec![500_000; 5]);
        let trials = 4_000;
        let changed: usize = (0..trials)
            .map(|_| {
                let m = mutate(&g, 0.2, bounds, &mut rng);
                m.0.iter().zip(&g.0).filter(|(a, b)| a != b).count()
            })
            .sum();
        let mean = changed as f64 / trials as f64;
        assert!((mean - 1.0).abs() < 0.06, "mean mutated genes {mean}");
    }
}
