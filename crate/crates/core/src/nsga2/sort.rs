//! Pareto dominance, fast non-dominated sorting and crowding distance.

use std::cmp::Ordering;

use crate::model::ObjectiveVector;

use super::Individual;

/// `a` is no worse than `b` in both objectives and strictly better in one.
pub fn dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> bool {
    a.f1 <= b.f1 && a.f2 <= b.f2 && (a.f1 < b.f1 || a.f2 < b.f2)
}

/// Partitions `objectives` into successive non-dominated fronts (lists of indices).
///
/// Each front is sorted by index.
pub fn non_dominated_fronts(objectives: &[ObjectiveVector]) -> Vec<Vec<usize>> {
    let n = objectives.len();
    let mut dominated_by_me: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut domination_count = vec![0usize; n];
    let mut current = Vec::new();

    for p in 0..n {
        for q in (p + 1)..n {
            if dominates(&objectives[p], &objectives[q]) {
                dominated_by_me[p].push(q);
                domination_count[q] += 1;
            } else if dominates(&objectives[q], &objectives[p]) {
                dominated_by_me[q].push(p);
                domination_count[p] += 1;
            }
        }
    }
    for (p, &count) in domination_count.iter().enumerate() {
        if count == 0 {
            current.push(p);
        }
    }

    let mut fronts = Vec::new();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &p in &current {
            for &q in &dominated_by_me[p] {
                domination_count[q] -= 1;
                if domination_count[q] == 0 {
                    next.push(q);
                }
            }
        }
        next.sort_unstable();
        fronts.push(std::mem::replace(&mut current, next));
    }
    fronts
}

/// Sorts a population into fronts and writes each individual's rank.
pub fn fast_non_dominated_sort(pop: &mut [Individual]) -> Vec<Vec<usize>> {
    let objectives: Vec<ObjectiveVector> = pop.iter().map(|ind| ind.objectives).collect();
    let fronts = non_dominated_fronts(&objectives);
    for (rank, front) in fronts.iter().enumerate() {
        for &i in front {
            pop[i].rank = rank;
        }
    }
    fronts
}

/// Crowding distance of every point of one front, in input order.
///
/// Boundary points of each objective get `+inf`; interior points accumulate
/// the normalized gap between their two neighbours. An objective with zero
/// range contributes nothing.
pub fn crowding_distance(front: &[ObjectiveVector]) -> Vec<f64> {
    let n = front.len();
    let mut distance = vec![0.0; n];
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }

    let getters: [fn(&ObjectiveVector) -> u64; 2] = [|o| o.f1, |o| o.f2];
    let mut order: Vec<usize> = (0..n).collect();
    for get in getters {
        // stable on index so duplicates are handled deterministically
        order.sort_by(|&a, &b| get(&front[a]).cmp(&get(&front[b])).then(a.cmp(&b)));
        let lo = get(&front[order[0]]);
        let hi = get(&front[order[n - 1]]);
        distance[order[0]] = f64::INFINITY;
        distance[order[n - 1]] = f64::INFINITY;
        if hi == lo {
            continue;
        }
        let range = (hi - lo) as f64;
        for w in 1..n - 1 {
            let gap = get(&front[order[w + 1]]) - get(&front[order[w - 1]]);
            distance[order[w]] += gap as f64 / range;
        }
    }
    distance
}

/// Writes crowding distances for the members of `front` (indices into `pop`).
pub fn assign_crowding(pop: &mut [Individual], front: &[usize]) {
    let objectives: Vec<ObjectiveVector> = front.iter().map(|&i| pop[i].objectives).collect();
    for (&i, d) in front.iter().zip(crowding_distance(&objectives)) {
        pop[i].crowding = d;
    }
}

/// Crowded-comparison order: lower rank first, then larger crowding.
pub fn crowded_cmp(a: &Individual, b: &Individual) -> Ordering {
    a.rank
        .cmp(&b.rank)
        .then_with(|| b.crowding.total_cmp(&a.crowding))
}
