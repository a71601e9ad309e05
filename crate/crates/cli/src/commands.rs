use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use focusdd::analyze::{ess, snr_distribution, EssParams};
use focusdd::compose::{
    distill_dataset, load_class, score_class, worker_pool, DistillConfig, KeyOrder,
};
use focusdd::io::{self, DatasetManifest};
use focusdd::label::{dft_sample, relabel_distilled, RegionMode};
use focusdd::select::{AreaMode, SelectorConfig};
use focusdd::vit::{AttentionModel, LuminanceSaliency, ModelConfig, ModelWeights, Vit};
use focusdd::{verify, ImageTensor};

use crate::args::*;
use crate::Invalid;

const DEFAULT_SALIENCY_INPUT: usize = 32;
const DEFAULT_SALIENCY_PATCH: usize = 4;

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Distill(a) => distill(a),
        Command::Score(a) => score(a),
        Command::Relabel(a) => relabel(a),
        Command::DftSample(a) => dft(a),
        Command::Analyze(AnalyzeCommand::Snr(a)) => snr(a),
        Command::Analyze(AnalyzeCommand::Ess(a)) => ess_cmd(a),
        Command::Verify(a) => verify_cmd(a),
        Command::GenWeights(a) => gen_weights(a),
    }
}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Invalid(msg.into()).into()
}

/// Writes to a file, or standard output for `-`.
fn emit(out: &str, text: &str) -> Result<()> {
    if out == "-" {
        std::io::stdout().write_all(text.as_bytes())?;
    } else {
        fs::write(out, text).with_context(|| format!("writing {out}"))?;
    }
    Ok(())
}

fn load_manifest(data: &DataArgs) -> Result<DatasetManifest> {
    match (&data.data, &data.manifest) {
        (Some(root), None) => io::scan(root).context("scanning dataset"),
        (None, Some(m)) => DatasetManifest::load_jsonl(m).context("reading manifest"),
        _ => Err(invalid("exactly one of --data or --manifest is required")),
    }
}

fn load_model(m: &ModelArgs, num_classes: usize) -> Result<Box<dyn AttentionModel>> {
    if m.saliency {
        let side = m.saliency_input.unwrap_or(DEFAULT_SALIENCY_INPUT);
        let patch = m.saliency_patch.unwrap_or(DEFAULT_SALIENCY_PATCH);
        if patch == 0 || side == 0 || !side.is_multiple_of(patch) {
            return Err(invalid(format!(
                "saliency input {side} not divisible by patch {patch}"
            )));
        }
        return Ok(Box::new(LuminanceSaliency {
            input_hw: (side, side),
            patch_size: patch,
            channels: 3,
            num_classes: num_classes.max(1),
        }));
    }
    let Some(path) = &m.weights else {
        return Err(invalid("one of --weights or --saliency is required"));
    };
    let weights = io::load_weights(path).context("loading weights")?;
    let mut vit = Vit::new(weights)?;
    if let Some(b) = m.attention_block {
        vit = vit
            .with_attention_block(b)
            .map_err(|e| invalid(e.to_string()))?;
    }
    Ok(Box::new(vit))
}

fn selector(a: &SelectArgs, file: &FileConfig) -> SelectorConfig {
    let d = SelectorConfig::default();
    SelectorConfig {
        alpha: a.alpha.or(file.alpha).unwrap_or(d.alpha),
        eta: a.eta.or(file.eta).unwrap_or(d.eta),
        area_mode: match a.area_mode.or(file.area_mode) {
            Some(AreaModeArg::Mean) => AreaMode::Mean,
            _ => AreaMode::Sum,
        },
    }
}

fn read_file_config(path: &Option<PathBuf>) -> Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn distill(a: DistillArgs) -> Result<()> {
    let file = read_file_config(&a.config)?;
    let data = DataArgs {
        data: a.data.data.clone().or(file.data.clone()),
        manifest: a.data.manifest.clone().or(file.manifest.clone()),
    };
    let model_args = ModelArgs {
        weights: a.model.weights.clone().or(file.weights.clone()),
        saliency: a.model.saliency || file.saliency.unwrap_or(false),
        saliency_input: a.model.saliency_input.or(file.saliency_input),
        saliency_patch: a.model.saliency_patch.or(file.saliency_patch),
        attention_block: a.model.attention_block.or(file.attention_block),
    };
    let sel = selector(&a.select, &file);
    let ipc = a.ipc.or(file.ipc).unwrap_or(1);
    let mut cfg = DistillConfig::new(ipc);
    cfg.key_images = a.key_images.or(file.key_images).unwrap_or(cfg.key_images);
    cfg.background_images = a
        .background_images
        .or(file.background_images)
        .unwrap_or(cfg.background_images);
    if let Some(side) = a.out_size.or(file.out_size) {
        cfg.out_hw = (side, side);
    }
    cfg.seed = a.seed.or(file.seed).unwrap_or(0);
    cfg.alpha = sel.alpha;
    cfg.eta = sel.eta;
    cfg.area_mode = sel.area_mode;
    cfg.key_order = match a.key_order.or(file.key_order) {
        Some(KeyOrderArg::Shuffled) => KeyOrder::Shuffled,
        _ => KeyOrder::Sequential,
    };
    let workers = a.workers.or(file.workers).unwrap_or(0);
    let out = a
        .out
        .clone()
        .or(file.out.clone())
        .ok_or_else(|| invalid("--out is required"))?;
    cfg.validate().map_err(|e| invalid(e.to_string()))?;
    if data.data.is_some() && data.manifest.is_some() {
        return Err(invalid("--data and --manifest conflict"));
    }
    if model_args.saliency && model_args.weights.is_some() {
        return Err(invalid("--weights and --saliency conflict"));
    }

    let manifest = load_manifest(&data)?;
    let model = load_model(&model_args, manifest.classes.len())?;
    let summary = distill_dataset(&manifest, model.as_ref(), &cfg, &out, workers)?;
    let composites: usize = summary.classes.iter().map(|c| c.composites.len()).sum();
    log::info!(
        "wrote {composites} composites for {} classes to {}",
        summary.classes.len(),
        out.display()
    );
    Ok(())
}

fn score(a: ScoreArgs) -> Result<()> {
    let sel = selector(&a.select, &FileConfig::default());
    sel.validate().map_err(|e| invalid(e.to_string()))?;
    let manifest = load_manifest(&a.data)?;
    let model = load_model(&a.model, manifest.classes.len())?;
    let pool = worker_pool(a.workers.unwrap_or(0))?;
    let mut text = String::new();
    for c in &manifest.classes {
        let ranked = pool.install(|| -> focusdd::Result<_> {
            let images = load_class(&manifest, c.class_id)?;
            score_class(model.as_ref(), &images, &sel)
        });
        let ranked = ranked.with_context(|| format!("class {}", c.class_name))?;
        for s in ranked {
            text.push_str(&serde_json::to_string(&s)?);
            text.push('\n');
        }
    }
    emit(&a.out, &text)
}

fn relabel(a: RelabelArgs) -> Result<()> {
    let mode = match a.regions {
        RegionModeArg::Cells => RegionMode::Cells,
        RegionModeArg::Random => {
            if !(a.scale_min > 0.0 && a.scale_min <= a.scale_max && a.scale_max <= 1.0) {
                return Err(invalid("crop scales must satisfy 0 < min <= max <= 1"));
            }
            RegionMode::RandomCrops {
                count: a.crops,
                scale: (a.scale_min, a.scale_max),
                seed: a.seed,
            }
        }
    };
    let model = load_model(&a.model, 1)?;
    let pool = worker_pool(a.workers.unwrap_or(0))?;
    let records = pool.install(|| relabel_distilled(model.as_ref(), &a.dir, mode))?;
    log::info!("labeled {} composites", records.len());
    Ok(())
}

fn dft(a: DftArgs) -> Result<()> {
    if a.ipc == 0 {
        return Err(invalid("--ipc must be at least 1"));
    }
    let manifest = load_manifest(&a.data)?;
    if a.out == "-" {
        for epoch in 0..a.epochs {
            emit(
                "-",
                &dft_sample(&manifest, a.ipc, a.seed, epoch).to_jsonl()?,
            )?;
        }
        return Ok(());
    }
    let dir = Path::new(&a.out).join("dft");
    fs::create_dir_all(&dir)?;
    for epoch in 0..a.epochs {
        let m = dft_sample(&manifest, a.ipc, a.seed, epoch);
        fs::write(dir.join(format!("epoch_{epoch}.jsonl")), m.to_jsonl()?)?;
    }
    Ok(())
}

fn snr(a: SnrArgs) -> Result<()> {
    let mut named: Vec<(String, ImageTensor)> = Vec::new();
    if a.data.data.is_some() || a.data.manifest.is_some() {
        for r in load_manifest(&a.data)?.records {
            let img = io::read_image(&r.path)?;
            named.push((r.path.display().to_string(), img));
        }
    }
    for p in &a.images {
        named.push((p.display().to_string(), io::read_image(p)?));
    }
    if named.is_empty() {
        return Err(invalid("no images given"));
    }
    let report = snr_distribution(named.iter().map(|(n, i)| (n.as_str(), i)))?;
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    emit(&a.out, &text)
}

fn ess_cmd(a: EssArgs) -> Result<()> {
    let p = EssParams {
        d_prime: a.dprime,
        m: a.m,
        n: a.n,
        gamma: a.gamma,
        beta: a.beta,
    };
    p.validate().map_err(|e| invalid(e.to_string()))?;
    println!("{}", ess(&p));
    Ok(())
}

fn verify_cmd(a: VerifyArgs) -> Result<()> {
    let results = verify::run_all(a.seed);
    let mut failed = 0;
    for r in &results {
        let status = if r.passed() { "PASS" } else { "FAIL" };
        println!(
            "{status} {} ({} cases, {} failures)",
            r.name, r.cases, r.failures
        );
        if let Some(f) = &r.first_failure {
            eprintln!("  first failure: {f}");
        }
        failed += usize::from(!r.passed());
    }
    if failed > 0 {
        bail!("{failed} verification suite(s) failed");
    }
    Ok(())
}

fn gen_weights(a: GenWeightsArgs) -> Result<()> {
    let cfg = ModelConfig {
        depth: a.depth,
        heads: a.heads,
        embed_dim: a.embed_dim,
        patch_size: a.patch_size,
        num_classes: a.classes,
        input_hw: (a.input_size, a.input_size),
        channels: a.channels,
    };
    cfg.validate().map_err(|e| invalid(e.to_string()))?;
    let w = ModelWeights::synthetic(cfg, a.seed)?;
    io::save_weights(&w, &a.out)?;
    Ok(())
}
