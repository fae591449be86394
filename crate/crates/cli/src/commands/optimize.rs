use std::path::Path;

use adaptsig_core::io;
use adaptsig_core::model::{validate_plan, IntersectionConfig, IntersectionSource, QueueState};
use adaptsig_core::nsga2::{self, select_index, OptimizerParams, SelectionPolicy};
use anyhow::anyhow;
use serde::Serialize;
use serde_json::Value;

use crate::exit::{CliError, CliResult, Context};
use crate::manifest::RunManifest;
use crate::OptimizeArgs;

use super::{base_dir, prepare_out_dir};

/// A bare intersection config, or an object with an `intersection` key
/// (inline or path). Either form may carry `optimizer` and `policy`.
struct OptimizeConfig {
    cfg: IntersectionConfig,
    params: OptimizerParams,
    policy: SelectionPolicy,
}

fn field<T: serde::de::DeserializeOwned>(doc: &Value, key: &str) -> CliResult<Option<T>> {
    doc.get(key)
        .map(|v| serde_json::from_value(v.clone()))
        .transpose()
        .map_err(|e| CliError::validation(anyhow!("invalid `{key}`: {e}")))
}

fn load_config(path: &Path) -> CliResult<OptimizeConfig> {
    let doc: Value = io::read_json(path).input("reading config")?;
    let cfg = match field::<IntersectionSource>(&doc, "intersection")? {
        Some(source) => source.load(base_dir(path)).input("loading intersection")?,
        None => {
            let mut bare = doc.clone();
            if let Some(map) = bare.as_object_mut() {
                map.remove("optimizer");
                map.remove("policy");
            }
            let cfg: IntersectionConfig = serde_json::from_value(bare)
                .map_err(|e| CliError::validation(anyhow!("invalid intersection config: {e}")))?;
            cfg.validated().input("validating intersection config")?
        }
    };
    Ok(OptimizeConfig {
        cfg,
        params: field(&doc, "optimizer")?.unwrap_or_default(),
        policy: field(&doc, "policy")?.unwrap_or_default(),
    })
}

#[derive(Serialize)]
struct ResolvedInputs<'a> {
    intersection: &'a IntersectionConfig,
    queue: &'a QueueState,
    optimizer: &'a OptimizerParams,
    policy: SelectionPolicy,
}

pub fn run(args: &OptimizeArgs) -> CliResult<()> {
    let mut manifest = RunManifest::start("optimize");
    let OptimizeConfig {
        cfg,
        mut params,
        mut policy,
    } = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        params.rng_seed = seed;
    }
    if let Some(p) = args.policy {
        policy = p;
    }
    params.validate().input("checking optimizer parameters")?;
    let queue: QueueState = io::read_json(&args.queue).input("reading queue")?;
    queue
        .check_dims(cfg.num_links)
        .input("checking queue against intersection")?;

    let front = nsga2::run(&queue, &cfg, &params).runtime("optimizing")?;
    let chosen = select_index(&front.members, policy).runtime("selecting operating point")?;
    let plan = front.plan_for(chosen);
    validate_plan(&plan, &cfg)
        .map_err(|v| CliError::runtime(anyhow!("selected plan is invalid: {v:?}")))?;
    let objectives = front.members[chosen].objectives;

    prepare_out_dir(&args.out)?;
    io::write_json(args.out.join("front.json"), &front.export()).runtime("writing front")?;
    io::write_json(args.out.join("plan.json"), &plan).runtime("writing plan")?;
    manifest.config = serde_json::to_value(ResolvedInputs {
        intersection: &cfg,
        queue: &queue,
        optimizer: &params,
        policy,
    })
    .map_err(CliError::runtime)?;
    manifest.seeds = vec![params.rng_seed];
    manifest.artifacts = vec!["front.json".into(), "plan.json".into()];
    manifest.finish(&args.out)?;

    println!(
        "front: {} plans; selected ({policy}) f1={} f2={} greens={:?}",
        front.len(),
        objectives.f1,
        objectives.f2,
        plan.greens_by_link()
    );
    Ok(())
}
