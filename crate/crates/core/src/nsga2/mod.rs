//! Constrained NSGA-II over green-time genomes.
//!
//! A genome holds one green duration per link, in link order. Variation
//! operators clamp every gene into `[min_green_s, max_green_s]`, so every
//! individual is feasible and every genome maps to a valid [`SignalPlan`].
//!
//! Besides the working population, [`run`] keeps an unbounded archive of all
//! non-dominated objective vectors seen so far (one genome per vector). The
//! archive is what gets returned, so the result never loses a Pareto point
//! that crowding truncation dropped from the population.

mod operators;
mod select;
mod sort;

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{IntersectionConfig, ObjectiveVector, QueueState, SignalPlan};
use crate::objectives::{evaluate_with, ObjectiveOptions};

pub use operators::{crossover, mutate, tournament_select, GeneBounds};
pub use select::{select_index, select_operating_point, SelectionPolicy};
pub use sort::{
    assign_crowding, crowded_cmp, crowding_distance, dominates, fast_non_dominated_sort,
    non_dominated_fronts,
};

/// Green seconds per link, in link order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Genome(pub Vec<u32>);

impl Genome {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_plan(&self, inter_green_s: u32) -> SignalPlan {
        SignalPlan::in_link_order(&self.0, inter_green_s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub genome: Genome,
    pub objectives: ObjectiveVector,
    pub rank: usize,
    /// Non-negative, `+inf` for front boundary points.
    pub crowding: f64,
    pub feasible: bool,
}

impl Individual {
    fn unranked(genome: Genome, objectives: ObjectiveVector) -> Self {
        Self {
            genome,
            objectives,
            rank: 0,
            crowding: 0.0,
            feasible: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerParams {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_prob: f64,
    /// Per-gene re-draw probability; `None` means `1 / num_links`.
    pub mutation_prob: Option<f64>,
    pub tournament_size: usize,
    pub rng_seed: u64,
    pub objectives: ObjectiveOptions,
}

impl Default for OptimizerParams {
    fn default() -> Self {
        Self {
            population_size: 60,
            generations: 100,
            crossover_prob: 0.9,
            mutation_prob: None,
            tournament_size: 2,
            rng_seed: 0,
            objectives: ObjectiveOptions::default(),
        }
    }
}

impl OptimizerParams {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidParams(msg));
        if self.population_size < 4 || !self.population_size.is_multiple_of(2) {
            return fail(format!(
                "population_size must be an even integer >= 4, got {}",
                self.population_size
            ));
        }
        if self.generations < 1 {
            return fail("generations must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.crossover_prob) {
            return fail(format!("crossover_prob {} outside [0, 1]", self.crossover_prob));
        }
        if let Some(p) = self.mutation_prob {
            if !(0.0..=1.0).contains(&p) {
                return fail(format!("mutation_prob {p} outside [0, 1]"));
            }
        }
        if self.tournament_size < 2 {
            return fail(format!(
                "tournament_size must be >= 2, got {}",
                self.tournament_size
            ));
        }
        Ok(())
    }

    pub fn effective_mutation_prob(&self, num_links: usize) -> f64 {
        self.mutation_prob
            .unwrap_or(1.0 / num_links.max(1) as f64)
    }
}

/// Mutually non-dominated members, sorted by `(f1, f2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoFront {
    pub members: Vec<Individual>,
    pub inter_green_s: u32,
}

impl ParetoFront {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn plan_for(&self, index: usize) -> SignalPlan {
        self.members[index].genome.to_plan(self.inter_green_s)
    }

    pub fn objectives(&self) -> Vec<ObjectiveVector> {
        self.members.iter().map(|m| m.objectives).collect()
    }

    pub fn export(&self) -> FrontExport {
        FrontExport {
            inter_green_s: self.inter_green_s,
            members: self
                .members
                .iter()
                .map(|m| FrontMember {
                    genome: m.genome.clone(),
                    f1: m.objectives.f1,
                    f2: m.objectives.f2,
                })
                .collect(),
        }
    }
}

/// JSON export of a front: genome and objectives per member.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrontExport {
    pub inter_green_s: u32,
    pub members: Vec<FrontMember>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrontMember {
    pub genome: Genome,
    pub f1: u64,
    pub f2: u64,
}

/// Non-dominated archive keyed by objective vector.
#[derive(Debug, Default, Clone)]
pub struct ParetoArchive {
    entries: BTreeMap<ObjectiveVector, Genome>,
}

impl ParetoArchive {
    /// Returns whether the archive changed.
    pub fn insert(&mut self, objectives: ObjectiveVector, genome: &Genome) -> bool {
        if let Some(existing) = self.entries.get_mut(&objectives) {
            if genome < existing {
                *existing = genome.clone();
                return true;
            }
            return false;
        }
        if self.entries.keys().any(|a| dominates(a, &objectives)) {
            return false;
        }
        self.entries.retain(|a, _| !dominates(&objectives, a));
        self.entries.insert(objectives, genome.clone());
        true
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn objectives(&self) -> Vec<ObjectiveVector> {
        self.entries.keys().copied().collect()
    }

    fn into_front(self, inter_green_s: u32) -> ParetoFront {
        let objectives: Vec<ObjectiveVector> = self.entries.keys().copied().collect();
        let crowding = crowding_distance(&objectives);
        let members = self
            .entries
            .into_iter()
            .zip(crowding)
            .map(|((objectives, genome), crowding)| Individual {
                genome,
                objectives,
                rank: 0,
                crowding,
                feasible: true,
            })
            .collect();
        ParetoFront {
            members,
            inter_green_s,
        }
    }
}

/// Area dominated by `points` and bounded by `reference` (both objectives minimized).
///
/// Points not strictly better than the reference in both objectives add nothing.
pub fn hypervolume(points: &[ObjectiveVector], reference: ObjectiveVector) -> u128 {
    let mut inside: Vec<ObjectiveVector> = points
        .iter()
        .copied()
        .filter(|p| p.f1 < reference.f1 && p.f2 < reference.f2)
        .collect();
    inside.sort();
    let mut area = 0u128;
    let mut ceiling = reference.f2;
    for p in inside {
        if p.f2 < ceiling {
            area += (reference.f1 - p.f1) as u128 * (ceiling - p.f2) as u128;
            ceiling = p.f2;
        }
    }
    area
}

/// Full result of an optimizer run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub front: ParetoFront,
    /// Archive hypervolume after initialization and after each generation.
    pub hypervolume: Vec<u128>,
    pub reference: ObjectiveVector,
    pub evaluations: usize,
    pub final_population: Vec<Individual>,
}

struct Problem<'a> {
    queue: &'a QueueState,
    cfg: &'a IntersectionConfig,
    opts: ObjectiveOptions,
}

impl Problem<'_> {
    fn evaluate(&self, genome: Genome) -> Individual {
        let plan = genome.to_plan(self.cfg.inter_green_s);
        let objectives = evaluate_with(&plan, self.queue, self.cfg, self.opts)
            .expect("queue dimensions checked before the run");
        Individual::unranked(genome, objectives)
    }
}

/// Runs NSGA-II and returns the archive front.
pub fn run(
    queue: &QueueState,
    cfg: &IntersectionConfig,
    params: &OptimizerParams,
) -> Result<ParetoFront> {
    run_with_history(queue, cfg, params).map(|outcome| outcome.front)
}

pub fn run_with_history(
    queue: &QueueState,
    cfg: &IntersectionConfig,
    params: &OptimizerParams,
) -> Result<RunOutcome> {
    params.validate()?;
    cfg.validate()?;
    queue.check_dims(cfg.num_links)?;

    let n = params.population_size;
    let links = cfg.num_links;
    let bounds = GeneBounds::new(cfg.min_green_s, cfg.max_green_s);
    let mutation_prob = params.effective_mutation_prob(links);
    let problem = Problem {
        queue,
        cfg,
        opts: params.objectives,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);

    let corner_max = problem.evaluate(Genome(vec![bounds.max; links]));
    let reference = ObjectiveVector::new(
        queue.total_vehicles() + 1,
        corner_max.objectives.f2 + 1,
    );

    // Both corners of the box seed the population: all-min is the f2 optimum.
    let mut pop = Vec::with_capacity(n);
    pop.push(problem.evaluate(Genome(vec![bounds.min; links])));
    pop.push(corner_max);
    while pop.len() < n {
        let genome = Genome((0..links).map(|_| bounds.sample(&mut rng)).collect());
        pop.push(problem.evaluate(genome));
    }
    let mut evaluations = n;

    let mut archive = ParetoArchive::default();
    for front in fast_non_dominated_sort(&mut pop) {
        assign_crowding(&mut pop, &front);
    }
    for ind in pop.iter().filter(|ind| ind.rank == 0) {
        archive.insert(ind.objectives, &ind.genome);
    }
    let mut history = vec![hypervolume(&archive.objectives(), reference)];

    for _ in 0..params.generations {
        let mut offspring = Vec::with_capacity(n);
        while offspring.len() < n {
            let a = tournament_select(&pop, params.tournament_size, &mut rng);
            let b = tournament_select(&pop, params.tournament_size, &mut rng);
            let (c1, c2) = crossover(
                &pop[a].genome,
                &pop[b].genome,
                params.crossover_prob,
                &mut rng,
            );
            offspring.push(mutate(&c1, mutation_prob, bounds, &mut rng));
            if offspring.len() < n {
                offspring.push(mutate(&c2, mutation_prob, bounds, &mut rng));
            }
        }
        evaluations += offspring.len();

        let mut combined = pop;
        combined.extend(offspring.into_iter().map(|g| problem.evaluate(g)));
        let fronts = fast_non_dominated_sort(&mut combined);
        for &i in &fronts[0] {
            archive.insert(combined[i].objectives, &combined[i].genome);
        }

        let mut survivors: Vec<usize> = Vec::with_capacity(n);
        for front in &fronts {
            assign_crowding(&mut combined, front);
            if survivors.len() + front.len() <= n {
                survivors.extend(front);
                continue;
            }
            let mut last = front.clone();
            last.sort_by(|&a, &b| crowded_cmp(&combined[a], &combined[b]).then(a.cmp(&b)));
            survivors.extend(last.into_iter().take(n - survivors.len()));
            break;
        }
        survivors.sort_unstable();
        let mut slots: Vec<Option<Individual>> = combined.into_iter().map(Some).collect();
        pop = survivors
            .into_iter()
            .map(|i| slots[i].take().expect("survivor selected once"))
            .collect();

        history.push(hypervolume(&archive.objectives(), reference));
    }

    Ok(RunOutcome {
        front: archive.into_front(cfg.inter_green_s),
        hypervolume: history,
        reference,
        evaluations,
        final_population: pop,
    })
}
