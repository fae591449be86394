use std::collections::BTreeSet;

use adaptsig_core::model::{validate_plan, IntersectionConfig, ObjectiveVector, QueueState, SaturationFlow};
use adaptsig_core::nsga2::{self, hypervolume, select_index, OptimizerParams, SelectionPolicy};
use adaptsig_core::objectives::evaluate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn config(links: usize, min: u32, max: u32) -> IntersectionConfig {
    let mut cfg = IntersectionConfig::with_links(links);
    cfg.min_green_s = min;
    cfg.max_green_s = max;
    cfg.sat_flow_motorized = SaturationFlow::try_from(0.6).unwrap();
    cfg.sat_flow_non_motorized = SaturationFlow::try_from(0.25).unwrap();
    cfg
}

/// Every genome in the box, evaluated, filtered by pairwise domination.
fn enumerated_front(queue: &QueueState, cfg: &IntersectionConfig) -> BTreeSet<ObjectiveVector> {
    let values: Vec<u32> = (cfg.min_green_s..=cfg.max_green_s).collect();
    let mut genomes: Vec<Vec<u32>> = vec![vec![]];
    for _ in 0..cfg.num_links {
        genomes = genomes
            .into_iter()
            .flat_map(|g| {
                values.iter().map(move |&v| {
                    let mut g = g.clone();
                    g.push(v);
                    g
                })
            })
            .collect();
    }
    let points: Vec<ObjectiveVector> = genomes
        .iter()
        .map(|g| {
            let plan = adaptsig_core::SignalPlan::in_link_order(g, cfg.inter_green_s);
            evaluate(&plan, queue, cfg).unwrap()
        })
        .collect();
    points
        .iter()
        .filter(|p| {
            !points
                .iter()
                .any(|q| q.f1 <= p.f1 && q.f2 <= p.f2 && (q.f1 < p.f1 || q.f2 < p.f2))
        })
        .copied()
        .collect()
}

#[test]
fn small_instances_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for links in [2, 3] {
        for seed in 0..3 {
            let cfg = config(links, 10, 15);
            let queue = QueueState::new(
                (0..links).map(|_| rng.random_range(0..12)).collect(),
                (0..links).map(|_| rng.random_range(0..6)).collect(),
            )
            .unwrap();
            let params = OptimizerParams {
                rng_seed: seed,
                ..Default::default()
            };
            let front = nsga2::run(&queue, &cfg, &params).unwrap();
            let found: BTreeSet<_> = front.objectives().into_iter().collect();
            assert_eq!(found, enumerated_front(&queue, &cfg), "links={links} seed={seed}");
        }
    }
}

#[test]
fn hypervolume_history_never_decreases() {
    let cfg = config(5, 10, 60);
    let queue = QueueState::new(vec![40, 5, 12, 30, 8], vec![10, 2, 4, 9, 1]).unwrap();
    for seed in 0..4 {
        let params = OptimizerParams {
            rng_seed: seed,
            generations: 40,
            ..Default::default()
        };
        let out = nsga2::run_with_history(&queue, &cfg, &params).unwrap();
        assert_eq!(out.hypervolume.len(), 41);
        assert!(out.hypervolume.windows(2).all(|w| w[0] <= w[1]), "{:?}", out.hypervolume);
        assert_eq!(
            *out.hypervolume.last().unwrap(),
            hypervolume(&out.front.objectives(), out.reference)
        );
        for i in 0..out.front.len() {
            assert!(validate_plan(&out.front.plan_for(i), &cfg).is_ok());
        }
    }
}

/// Counts unit cells of the dominated region one by one.
fn hypervolume_by_cells(points: &[ObjectiveVector], reference: ObjectiveVector) -> u128 {
    let mut cells = 0;
    for x in 0..reference.f1 {
        for y in 0..reference.f2 {
            if points.iter().any(|p| p.f1 <= x && p.f2 <= y) {
                cells += 1;
            }
        }
    }
    cells
}

#[test]
fn hypervolume_matches_cell_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..50 {
        let n = rng.random_range(1..8);
        let points: Vec<ObjectiveVector> = (0..n)
            .map(|_| ObjectiveVector::new(rng.random_range(0..30), rng.random_range(0..30)))
            .collect();
        let reference = ObjectiveVector::new(30, 30);
        assert_eq!(hypervolume(&points, reference), hypervolume_by_cells(&points, reference));
    }
}

#[test]
fn single_objective_policies_pick_the_extremes() {
    let cfg = config(4, 10, 60);
    let queue = QueueState::new(vec![25, 3, 14, 40], vec![5, 0, 2, 8]).unwrap();
    let front = nsga2::run(&queue, &cfg, &OptimizerParams::default()).unwrap();
    let objs = front.objectives();
    let min_f1 = select_index(&front.members, SelectionPolicy::MinF1).unwrap();
    let min_f2 = select_index(&front.members, SelectionPolicy::MinF2).unwrap();
    assert_eq!(objs[min_f1].f1, objs.iter().map(|o| o.f1).min().unwrap());
    assert_eq!(objs[min_f2].f2, objs.iter().map(|o| o.f2).min().unwrap());
    // the all-minimum plan is always on the front
    assert_eq!(front.plan_for(min_f2).greens_by_link(), vec![10; 4]);
}

#[test]
fn export_round_trips_through_json() {
    let cfg = config(3, 10, 30);
    let queue = QueueState::new(vec![9, 4, 13], vec![2, 2, 2]).unwrap();
    let front = nsga2::run(&queue, &cfg, &OptimizerParams::default()).unwrap();
    let export = front.export();
    let text = serde_json::to_string(&export).unwrap();
    let back: nsga2::FrontExport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, export);
    assert_eq!(back.members.len(), front.len());
}
