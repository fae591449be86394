use std::time::Instant;

use adaptsig_core::simulator::Scenario;

fn main() {
    let path = std::env::args().nth(1).expect("usage: compare_scenario <scenario.json>");
    let loaded = Scenario::load(&path).expect("scenario");
    let t0 = Instant::now();
    let report = loaded.compare(&loaded.scenario.seeds).expect("comparison");
    for c in &report.controllers {
        println!(
            "{:<14} avg {:>8.3} max {:>7.1} delta {:?} not_worse {}/{}",
            c.name,
            c.mean_overall_avg,
            c.mean_overall_max,
            c.overall_avg_delta_pct,
            c.seeds_not_worse,
            report.seeds.len()
        );
    }
    println!("elapsed {:.2?}", t0.elapsed());
}
