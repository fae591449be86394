use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::OnceLock;

use adaptsig_core::io;
use adaptsig_core::model::IntersectionSource;
use adaptsig_core::pipeline::{
    CycleOutcome, Pipeline, PipelineReport, PipelineSpec, SkipReason, SourceSpec, StopSignal,
};
use anyhow::{anyhow, Context as _};
use serde::Serialize;

use crate::exit::{CliError, CliResult, Context};
use crate::manifest::RunManifest;
use crate::PipelineArgs;

use super::{base_dir, prepare_out_dir, write_text};

/// Spec with the intersection inlined and replay paths made absolute.
fn resolve_spec(mut spec: PipelineSpec, base: &Path) -> CliResult<PipelineSpec> {
    let cfg = spec.intersection.load(base).input("loading intersection")?;
    spec.intersection = IntersectionSource::Inline(cfg);
    for cam in &mut spec.cameras {
        if let SourceSpec::Replay { path, .. } = &mut cam.source {
            let full = io::resolve(base, path);
            *path = full.canonicalize().unwrap_or(full);
        }
    }
    Ok(spec)
}

struct JsonLines {
    out: BufWriter<File>,
    path: String,
}

impl JsonLines {
    fn create(dir: &Path, name: &str) -> CliResult<Self> {
        let path = dir.join(name);
        let file = File::create(&path)
            .with_context(|| format!("creating {}", path.display()))
            .map_err(CliError::runtime)?;
        Ok(Self {
            out: BufWriter::new(file),
            path: path.display().to_string(),
        })
    }

    /// Flushed per line so an interrupted run keeps every finished cycle.
    fn push<T: Serialize>(&mut self, value: &T) -> CliResult<()> {
        serde_json::to_writer(&mut self.out, value)
            .map_err(|e| anyhow!(e))
            .and_then(|()| {
                self.out.write_all(b"\n")?;
                self.out.flush()?;
                Ok(())
            })
            .with_context(|| format!("writing {}", self.path))
            .map_err(CliError::runtime)
    }
}

#[derive(Serialize)]
struct RunSummary {
    plans_emitted: u64,
    skipped_no_detections: u64,
    detector_errors: u64,
    camera_states: Vec<String>,
    buffered_high_water: usize,
}

enum Ending {
    Done,
    Interrupted,
    SourcesDown,
}

pub fn run(args: &PipelineArgs, stop_slot: &OnceLock<StopSignal>) -> CliResult<()> {
    let mut manifest = RunManifest::start("pipeline");
    let spec = PipelineSpec::load(&args.config).input("reading pipeline config")?;
    let mut spec = resolve_spec(spec, base_dir(&args.config))?;
    if let Some(seed) = args.seed {
        spec.settings.optimizer.rng_seed = seed;
    }
    prepare_out_dir(&args.out)?;
    let mut plans = JsonLines::create(&args.out, "plans.jsonl")?;
    let mut latency = JsonLines::create(&args.out, "latency.jsonl")?;

    let mut pipeline = Pipeline::start(&spec, Path::new(".")).input("starting pipeline")?;
    let _ = stop_slot.set(pipeline.stop_signal());

    let mut emitted = 0u64;
    let mut skipped = 0u64;
    let ending = loop {
        if args.cycles.is_some_and(|n| emitted >= n) {
            break Ending::Done;
        }
        let outcome = match pipeline.run_cycle() {
            Ok(o) => o,
            Err(e) => {
                pipeline.shutdown();
                return Err(CliError::runtime(anyhow!(e).context("running cycle")));
            }
        };
        match outcome {
            CycleOutcome::Plan { plan, latency: l, .. } => {
                plans.push(&plan)?;
                latency.push(&l)?;
                emitted += 1;
                println!(
                    "cycle {}: greens {:?} f1={} f2={} latency {:.0} ms",
                    plan.cycle,
                    plan.plan.greens_by_link(),
                    plan.objectives.f1,
                    plan.objectives.f2,
                    l.t_latency_ms
                );
            }
            CycleOutcome::Skipped {
                reason: SkipReason::NoDetections,
                ..
            } => skipped += 1,
            CycleOutcome::Skipped {
                reason: SkipReason::SourcesDown,
                ..
            } => break Ending::SourcesDown,
            CycleOutcome::Stopped => break Ending::Interrupted,
        }
    };

    let report: PipelineReport = pipeline.shutdown();
    let mut artifacts = vec!["plans.jsonl".to_string(), "latency.jsonl".to_string()];
    if args.report {
        write_text(&args.out.join("latency_report.txt"), &report.ledger.render_table())?;
        io::write_json(args.out.join("latency_summary.json"), &report.ledger.summary())
            .runtime("writing latency summary")?;
        artifacts.extend(["latency_report.txt".into(), "latency_summary.json".into()]);
        print!("{}", report.ledger.render_table());
    }
    let summary = RunSummary {
        plans_emitted: emitted,
        skipped_no_detections: skipped,
        detector_errors: report.detector_errors,
        camera_states: report
            .camera_states
            .iter()
            .map(|s| format!("{s:?}").to_lowercase())
            .collect(),
        buffered_high_water: report.buffered_high_water,
    };
    manifest.config = serde_json::json!({
        "pipeline": spec,
        "cycles": args.cycles,
        "run": summary,
    });
    manifest.seeds = vec![spec.settings.optimizer.rng_seed];
    manifest.artifacts = artifacts;
    manifest.finish(&args.out)?;

    match ending {
        Ending::Done => Ok(()),
        Ending::Interrupted => {
            eprintln!("interrupted after {emitted} plans");
            Err(CliError::interrupted())
        }
        Ending::SourcesDown if emitted == 0 => Err(CliError::runtime(anyhow!(
            "all sources ended or failed before any plan was emitted"
        ))),
        Ending::SourcesDown => {
            if let Some(n) = args.cycles {
                log::warn!("sources ended after {emitted} of {n} plans");
            }
            Ok(())
        }
    }
}
