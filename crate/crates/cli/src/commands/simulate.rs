use std::fmt::Write as _;

use adaptsig_core::io;
use adaptsig_core::model::IntersectionSource;
use adaptsig_core::simulator::{EmergencyOutcome, LoadedScenario, Scenario, SimMetrics};
use serde::Serialize;

use crate::exit::{CliError, CliResult, Context};
use crate::manifest::RunManifest;
use crate::SimulateArgs;

use super::{prepare_out_dir, write_text};

#[derive(Serialize)]
struct ControllerRun<'a> {
    name: &'a str,
    metrics: SimMetrics,
    emergencies: Vec<EmergencyOutcome>,
}

#[derive(Serialize)]
struct MetricsFile<'a> {
    seed: u64,
    horizon_s: u64,
    controllers: Vec<ControllerRun<'a>>,
}

fn report(loaded: &LoadedScenario, file: &MetricsFile) -> String {
    let names = &loaded.cfg.link_names;
    let width = names.iter().map(String::len).max().unwrap_or(4).max(4);
    let mut out = String::new();
    let _ = writeln!(out, "seed {} horizon {} s", file.seed, file.horizon_s);
    for c in &file.controllers {
        let m = &c.metrics;
        let _ = writeln!(out, "\ncontroller {} ({} cycles)", c.name, m.cycles);
        let _ = writeln!(out, "{:<width$} {:>11} {:>11}", "link", "max_waiting", "avg_waiting");
        for (i, name) in names.iter().enumerate() {
            let _ = writeln!(
                out,
                "{:<width$} {:>11} {:>11.3}",
                name, m.max_waiting_per_link[i], m.avg_waiting_per_link[i]
            );
        }
        let _ = writeln!(out, "{:<width$} {:>11} {:>11.3}", "overall", m.overall_max, m.overall_avg);
        let _ = writeln!(out, "throughput {} of {} vehicles", m.throughput_total, m.arrivals_total + m.initial_queue_total);
    }
    out
}

/// File-name-safe version of a controller name.
fn slug(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

pub fn run(args: &SimulateArgs) -> CliResult<()> {
    let mut manifest = RunManifest::start("simulate");
    let loaded = Scenario::load(&args.scenario).input("loading scenario")?;
    let s = &loaded.scenario;
    let seed = args.seed.unwrap_or(s.seeds[0]);

    prepare_out_dir(&args.out)?;
    let mut artifacts = Vec::new();
    let mut controllers = Vec::new();
    for (i, spec) in s.controllers.iter().enumerate() {
        let run = loaded.run(i, seed).runtime(&format!("simulating {}", spec.name))?;
        let csv = format!("timeseries_{}.csv", slug(&spec.name));
        write_text(&args.out.join(&csv), &run.trace.to_csv())?;
        artifacts.push(csv);
        controllers.push(ControllerRun {
            name: &spec.name,
            metrics: run.metrics,
            emergencies: run.emergencies,
        });
    }
    let metrics = MetricsFile {
        seed,
        horizon_s: s.horizon_s,
        controllers,
    };
    io::write_json(args.out.join("metrics.json"), &metrics).runtime("writing metrics")?;
    let text = report(&loaded, &metrics);
    write_text(&args.out.join("report.txt"), &text)?;
    print!("{text}");
    artifacts.extend(["metrics.json".to_string(), "report.txt".to_string()]);

    let mut seeds = vec![seed];
    if args.compare {
        let comparison = loaded.compare(&s.seeds).runtime("comparing controllers")?;
        io::write_json(args.out.join("comparison.json"), &comparison).runtime("writing comparison")?;
        artifacts.push("comparison.json".into());
        println!("\ncomparison over {} seeds against {}", s.seeds.len(), comparison.baseline);
        for c in &comparison.controllers {
            let delta = c
                .overall_avg_delta_pct
                .map_or("n/a".to_string(), |d| format!("{d:+.1}%"));
            println!(
                "  {:<16} mean avg waiting {:>8.3}  delta {:>8}  not worse on {}/{} seeds",
                c.name,
                c.mean_overall_avg,
                delta,
                c.seeds_not_worse,
                s.seeds.len()
            );
        }
        seeds = s.seeds.clone();
    }

    let mut resolved = s.clone();
    resolved.intersection = IntersectionSource::Inline(loaded.cfg.clone());
    manifest.config = serde_json::to_value(&resolved).map_err(CliError::runtime)?;
    manifest.seeds = seeds;
    manifest.artifacts = artifacts;
    manifest.finish(&args.out)
}
