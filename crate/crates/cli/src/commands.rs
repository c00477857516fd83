//! Pipeline stages. Each stage reads its inputs through [`Ctx::input`], which
//! checks them against their manifests, and declares every file it writes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use advscape_core::attacks::{self, AttackConfig, AttackKind};
use advscape_core::data::{idx, lads, synth, LabeledDataset, Provenance, SynthConfig};
use advscape_core::desk;
use advscape_core::landscape::{self, linspace, DirectionPair};
use advscape_core::metrics::{evaluate, mean_ssim_distance, SsimConfig};
use advscape_core::nn::{latl, ModelSpec, Network};
use advscape_core::training::{self, EpochLog, TrainConfig};

use crate::config::{Config, Schema, Type};
use crate::error::{config_err, io_err, CliError, Result};
use crate::manifest::{sha256_file, sidecar, verify_input, Artifact, RunManifest};
use crate::plot::{self, Format, PlotOptions, Style};

pub struct Command {
    pub name: &'static str,
    pub about: &'static str,
    pub schema: fn() -> Schema,
    exec: fn(&mut Config, &mut Ctx) -> Result<()>,
}

pub const COMMANDS: &[Command] = &[
    Command {
        name: "dataset",
        about: "Synthesize a dataset or import an IDX pair into a LADS file",
        schema: dataset_schema,
        exec: dataset,
    },
    Command {
        name: "train",
        about: "Train a clean base model",
        schema: train_schema,
        exec: train,
    },
    Command {
        name: "attack",
        about: "Write adversarial counterparts of a dataset",
        schema: attack_cmd_schema,
        exec: attack,
    },
    Command {
        name: "augment",
        about: "Write the 1:1 union of a clean dataset and its adversarial counterparts",
        schema: attack_cmd_schema,
        exec: augment,
    },
    Command {
        name: "finetune",
        about: "Continue training a model on an augmented dataset",
        schema: finetune_schema,
        exec: finetune,
    },
    Command {
        name: "eval",
        about: "Top-1 accuracy on clean and attacked data, with mean 1-SSIM per attack",
        schema: eval_schema,
        exec: eval,
    },
    Command {
        name: "ssim",
        about: "Mean 1-SSIM between a clean dataset and a paired adversarial one",
        schema: ssim_schema,
        exec: ssim,
    },
    Command {
        name: "scan",
        about: "Evaluate the loss on a filter-normalized 2D grid around a model",
        schema: scan_schema,
        exec: scan,
    },
    Command {
        name: "plot",
        about: "Render a grid CSV as a contour or surface image (PPM or SVG)",
        schema: plot_schema,
        exec: plot_cmd,
    },
];

pub fn find(name: &str) -> Option<&'static Command> {
    COMMANDS.iter().find(|c| c.name == name)
}

/// Inputs and outputs touched by one run.
#[derive(Default)]
pub struct Ctx {
    inputs: Vec<Artifact>,
    outputs: Vec<(String, PathBuf)>,
    pub quiet: bool,
}

impl Ctx {
    pub fn new(quiet: bool) -> Self {
        Ctx {
            quiet,
            ..Ctx::default()
        }
    }

    fn input(&mut self, cfg: &Config, key: &str) -> Result<PathBuf> {
        let path = cfg.path(key)?;
        let sha256 = verify_input(&path)?;
        self.inputs.push(Artifact {
            key: key.to_string(),
            path: path.clone(),
            sha256,
        });
        Ok(path)
    }

    fn output(&mut self, key: &str, path: PathBuf) -> Result<PathBuf> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
        self.outputs.push((key.to_string(), path.clone()));
        Ok(path)
    }

    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }
}

/// Run a stage and return its manifest; `write_manifest` controls whether
/// the manifest is stored next to the primary output.
pub fn run_stage(cmd: &Command, mut cfg: Config, ctx: &mut Ctx, write_manifest: bool) -> Result<RunManifest> {
    let start = Instant::now();
    (cmd.exec)(&mut cfg, ctx)?;
    let wall_secs = start.elapsed().as_secs_f64();
    for a in &ctx.inputs {
        if sha256_file(&a.path)? != a.sha256 {
            return Err(CliError::Integrity(format!("input {} changed during the run", a.path.display())));
        }
    }
    let outputs = ctx
        .outputs
        .iter()
        .map(|(key, path)| {
            Ok(Artifact {
                key: key.clone(),
                path: path.clone(),
                sha256: sha256_file(path)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        subcommand: cmd.name.to_string(),
        config: cfg.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        seeds: cfg.seeds().into_iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        inputs: ctx.inputs.clone(),
        outputs,
        wall_secs,
    };
    if write_manifest {
        let primary = manifest
            .outputs
            .first()
            .ok_or_else(|| config_err!("{} produced no output", cmd.name))?;
        manifest.write(&sidecar(&primary.path))?;
    }
    Ok(manifest)
}

/// Re-run the stage recorded in `manifest` and check that every output is
/// reproduced byte for byte.
pub fn replay(path: &Path, quiet: bool) -> Result<RunManifest> {
    let recorded = RunManifest::read(path)?;
    let cmd = find(&recorded.subcommand)
        .ok_or_else(|| config_err!("manifest names unknown subcommand `{}`", recorded.subcommand))?;
    for a in &recorded.inputs {
        let now = sha256_file(&a.path)?;
        if now != a.sha256 {
            return Err(CliError::Integrity(format!(
                "input {} has sha256 {now}, manifest records {}",
                a.path.display(),
                a.sha256
            )));
        }
    }
    let cfg = (cmd.schema)().resolve(std::slice::from_ref(&recorded.config))?;
    let mut ctx = Ctx {
        quiet,
        ..Ctx::default()
    };
    let fresh = run_stage(cmd, cfg, &mut ctx, false)?;
    for (old, new) in recorded.outputs.iter().zip(&fresh.outputs) {
        if old.path != new.path || old.sha256 != new.sha256 {
            return Err(CliError::Integrity(format!(
                "replay of {} differs: {} now has sha256 {}, manifest records {}",
                recorded.subcommand,
                new.path.display(),
                new.sha256,
                old.sha256
            )));
        }
    }
    if recorded.outputs.len() != fresh.outputs.len() {
        return Err(CliError::Integrity("replay produced a different set of outputs".into()));
    }
    Ok(fresh)
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).map_err(io_err(path))
}

fn load_data(ctx: &mut Ctx, cfg: &Config, key: &str) -> Result<LabeledDataset> {
    Ok(lads::load(ctx.input(cfg, key)?)?)
}

/// Load `model` for inputs shaped like `data`. An unset `arch` is taken from
/// the model's manifest, falling back to the desk CNN.
fn load_model(ctx: &mut Ctx, cfg: &mut Config, data: &LabeledDataset) -> Result<Network> {
    let path = ctx.input(cfg, "model")?;
    let params = latl::load(&path)?;
    let arch = if cfg.is_set("arch") {
        cfg.get("arch")?.to_string()
    } else {
        let side = sidecar(&path);
        let recorded = side
            .is_file()
            .then(|| RunManifest::read(&side))
            .transpose()?
            .and_then(|m| m.config.into_iter().find(|(k, _)| k == "arch").map(|(_, v)| v));
        match recorded {
            Some(a) => a,
            None => ModelSpec::desk_cnn(data.extent(), data.num_classes())?.arch(),
        }
    };
    let spec = ModelSpec::parse(data.extent(), &arch)?;
    cfg.set("arch", spec.arch())?;
    Ok(Network::new(spec, params)?)
}

fn io_keys(schema: Schema, inputs: &[(&'static str, &'static str)], out_doc: &'static str) -> Schema {
    inputs
        .iter()
        .fold(schema, |s, (k, doc)| s.key(k, Type::Path, "", doc))
        .key("out", Type::Path, "", out_doc)
}

// ---- dataset ---------------------------------------------------------------

fn dataset_schema() -> Schema {
    let d = SynthConfig::default();
    io_keys(Schema::new(), &[], "output LADS file")
        .key("source", Type::Text, "synth", "synth | idx")
        .key("n", Type::Int, d.n, "synth: sample count")
        .key("seed", Type::Seed, d.seed, "synth: generator seed")
        .key("classes", Type::Int, d.classes, "synth: class count")
        .key("size", Type::Int, d.size, "synth: image height and width")
        .key("channels", Type::Int, d.channels, "synth: channel count")
        .key("background", Type::Float, d.background, "synth: background intensity")
        .key("shape_amplitude", Type::Float, d.shape_amplitude, "synth: class patch contrast")
        .key("shape_reliability", Type::Float, d.shape_reliability, "synth: chance the patch matches the label")
        .key("texture_amplitude", Type::Float, d.texture_amplitude, "synth: class grating amplitude")
        .key("texture_period", Type::Float, d.texture_period, "synth: grating period in pixels")
        .key("phase_step", Type::Float, d.phase_step, "synth: grating phase offset between classes")
        .key("square", Type::Bool, d.square, "synth: square-wave grating")
        .key("texture_jitter", Type::Float, d.texture_jitter, "synth: relative per-sample amplitude jitter")
        .key("noise", Type::Float, d.noise, "synth: pixel noise amplitude")
        .key("images", Type::Path, "", "idx: image file")
        .key("labels", Type::Path, "", "idx: label file")
        .key("limit", Type::Int, 0, "idx: keep at most this many samples (0 = all)")
}

fn dataset(cfg: &mut Config, ctx: &mut Ctx) -> Result<()> {
    let data = match cfg.get("source")? {
        "synth" => synth::generate(&SynthConfig {
            n: cfg.usize("n")?,
            classes: cfg.usize("classes")?,
            size: cfg.usize("size")?,
            channels: cfg.usize("channels")?,
            seed: cfg.u64("seed")?,
            background: cfg.f64("background")?,
            shape_amplitude: cfg.f64("shape_amplitude")?,
            shape_reliability: cfg.f64("shape_reliability")?,
            texture_amplitude: cfg.f64("texture_amplitude")?,
            texture_period: cfg.f64("texture_period")?,
            phase_step: cfg.f64("phase_step")?,
            square: cfg.bool("square")?,
            texture_jitter: cfg.f64("texture_jitter")?,
            noise: cfg.f64("noise")?,
        })?,
        "idx" => {
            let images = ctx.input(cfg, "images")?;
            let labels = ctx.input(cfg, "labels")?;
            let limit = Some(cfg.usize("limit")?).filter(|&l| l > 0);
            idx::load(images, labels, limit)?
        }
        other => return Err(config_err!("key `source` must be synth or idx, got {other:?}")),
    };
    let out = ctx.output("out", cfg.path("out")?)?;
    lads::save(&data, &out)?;
    let [c, h, w] = data.extent();
    ctx.say(format!(
        "wrote {} samples of {c}x{h}x{w} ({} classes) to {}",
        data.len(),
        data.num_classes(),
        out.display()
    ));
    Ok(())
}

// ---- train / finetune ------------------------------------------------------

fn train_keys(schema: Schema, d: TrainConfig) -> Schema {
    schema
        .key("arch", Type::Text, "", "layer list; unset = desk CNN or the model's recorded arch")
        .key("seed", Type::Seed, d.seed, "initialization and shuffling seed")
        .key("epochs", Type::Int, d.epochs, "epoch budget")
        .key("batch_size", Type::Int, d.batch_size, "minibatch size")
        .key("lr", Type::Float, d.lr, "learning rate")
        .key("momentum", Type::Float, d.momentum, "heavy-ball momentum")
        .key("weight_decay", Type::Float, d.weight_decay, "L2 penalty on conv/dense weights")
        .key("lr_decay", Type::Float, d.lr_decay, "per-epoch learning-rate factor")
        .key("patience", Type::Int, d.patience.unwrap_or(0), "early-stopping patience in epochs (0 = off)")
        .key("min_delta", Type::Float, d.min_delta, "minimum loss improvement for early stopping")
        .key("std_floor", Type::Float, d.std_floor, "lower bound on fitted pixel std")
        .key("log", Type::Path, "", "training log; unset = <out>.log")
}

fn train_config(cfg: &Config) -> Result<TrainConfig> {
    Ok(TrainConfig {
        seed: cfg.u64("seed")?,
        epochs: cfg.usize("epochs")?,
        batch_size: cfg.usize("batch_size")?,
        lr: cfg.f64("lr")?,
        momentum: cfg.f64("momentum")?,
        weight_decay: cfg.f64("weight_decay")?,
        lr_decay: cfg.f64("lr_decay")?,
        patience: Some(cfg.usize("patience")?).filter(|&p| p > 0),
        min_delta: cfg.f64("min_delta")?,
        std_floor: cfg.f64("std_floor")?,
    })
}

/// The training log without wall-clock times, so reruns are byte-identical.
fn log_text(log: &[EpochLog]) -> String {
    let mut out = String::from("epoch split loss accuracy\n");
    for e in log {
        let _ = writeln!(out, "{} {} {:.16e} {:.6}", e.epoch, e.split.name(), e.loss, e.accuracy);
    }
    out
}

fn write_training(cfg: &mut Config, ctx: &mut Ctx, outcome: &training::TrainOutcome) -> Result<()> {
    let out = ctx.output("out", cfg.path("out")?)?;
    latl::save(&outcome.params, &out)?;
    if !cfg.is_set("log") {
        let mut p = out.clone().into_os_string();
        p.push(".log");
        cfg.set("log", PathBuf::from(p).display())?;
    }
    let log = ctx.output("log", cfg.path("log")?)?;
    write(&log, log_text(&outcome.log))?;
    if let Some(last) = outcome.log.last() {
        ctx.say(format!(
            "{} epochs, final {} loss {:.6} accuracy {:.4}; weights in {}",
            outcome.epochs_run,
            last.split.name(),
            last.loss,
            last.accuracy,
            out.display()
        ));
    }
    Ok(())
}

fn train_schema() -> Schema {
    train_keys(
        io_keys(Schema::new(), &[("data", "clean LADS training set")], "output LATL weights"),
        desk::base_training(0),
    )
}

fn train(cfg: &mut Config, ctx: &mut Ctx) -> Result<()> {
    let data = load_data(ctx, cfg, "data")?;
    let spec = if cfg.is_set("arch") {
        ModelSpec::parse(data.extent(), cfg.get("arch")?)?
    } else {
        ModelSpec::desk_cnn(data.extent(), data.num_classes())?
    };
    cfg.set("arch", spec.arch())?;
    let outcome = training::train_base(&spec, &data, &train_config(cfg)?)?;
    write_training(cfg, ctx, &outcome)
}

fn finetune_schema() -> Schema {
    train_keys(
        io_keys(
            Schema::new(),
            &[("model", "base LATL weights"), ("data", "augmented LADS set")],
            "output LATL weights",
        ),
        desk::finetuning(0),
    )
}

fn finetune(cfg: &mut Config, ctx: &mut Ctx) -> Result<()> {
    let data = load_data(ctx, cfg, "data")?;
    let net = load_model(ctx, cfg, &data)?;
    let half = data.len() / 2;
    if data.len() % 2 != 0 || data.labels()[..half] != data.labels()[half..] {
        return Err(config_err!("key `data` must name a 1:1 augmented dataset"));
    }
    let union = data.with_provenance(Provenance::Union {
        clean: half,
        attack: union_attack(&cfg.path("data")?)?,
    })?;
    let outcome = training::finetune(net.spec(), net.params(), &union, &train_config(cfg)?)?;
    write_training(cfg, ctx, &outcome)
}

/// LADS files carry no provenance; recover the attack from the augment
/// manifest, or fall back to FGSM defaults when there is none.
fn union_attack(data: &Path) -> Result<AttackConfig> {
    let side = sidecar(data);
    if !side.is_file() {
        return Ok(AttackConfig::fgsm());
    }
    let m = RunManifest::read(&side)?;
    let pairs = m
        .config
        .iter()
        .filter(|(k, _)| ATTACK_PARAMS.iter().any(|(p, _, _)| p == k) || k == "kind")
        .map(|(k, v)| (k.as_str(), v.as_str()));
    match AttackConfig::from_pairs(pairs) {
        Ok(a) => Ok(a),
        Err(_) => Ok(AttackConfig::fgsm()),
    }
}

// ---- attacks ---------------------------------------------------------------

const ATTACK_PARAMS: [(&str, Type, &str); 9] = [
    ("epsilon", Type::Float, "radius (pixel intensity for fgsm/pgd, pixels of flow for stadv)"),
    ("alpha", Type::Float, "pgd step size"),
    ("iters", Type::Int, "pgd/stadv iterations"),
    ("random_start", Type::Bool, "pgd uniform random start"),
    ("tau", Type::Float, "stadv flow smoothness weight"),
    ("flow_lr", Type::Float, "stadv flow step"),
    ("clip_min", Type::Float, "lower pixel bound"),
    ("clip_max", Type::Float, "upper pixel bound"),
    ("seed", Type::Seed, "attack seed"),
];

fn attack_keys(mut schema: Schema, prefix: &str) -> Schema {
    for (name, ty, doc) in ATTACK_PARAMS {
        let key: &'static str = Box::leak(format!("{prefix}{name}").into_boxed_str());
        schema = schema.key(key, ty, "", doc);
    }
    schema
}

/// Desk defaults for `kind`, overridden by any set `<prefix><param>` keys.
/// The resolved values are written back into the config.
fn attack_config(cfg: &mut Config, prefix: &str, kind: AttackKind) -> Result<AttackConfig> {
    let seed_key = format!("{prefix}seed");
    let seed = if cfg.is_set(&seed_key) { cfg.u64(&seed_key)? } else { 0 };
    let mut pairs: Vec<(String, String)> = desk::attack(kind, seed).to_pairs();
    for (name, _, _) in ATTACK_PARAMS {
        let key = format!("{prefix}{name}");
        if cfg.is_set(&key) {
            let v = cfg.get(&key)?.to_string();
            if let Some(p) = pairs.iter_mut().find(|(k, _)| k == name) {
                p.1 = v;
            }
        }
    }
    let a = AttackConfig::from_pairs(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())))?;
    a.validate()?;
    for (k, v) in a.to_pairs() {
        if k != "kind" {
            cfg.set(&format!("{prefix}{k}"), v)?;
        }
    }
    Ok(a)
}

fn attack_cmd_schema() -> Schema {
    let s = io_keys(
        Schema::new(),
        &[("model", "LATL weights to attack"), ("data", "clean LADS set")],
        "output LADS file",
    )
    .key("arch", Type::Text, "", "layer list; unset = the model's recorded arch or the desk CNN")
    .key("kind", Type::Text, "fgsm", "fgsm | pgd | stadv");
    attack_keys(s, "")
}

fn attack_setup(cfg: &mut Config, ctx: &mut Ctx) -> Result<(Network, LabeledDataset, AttackConfig)> {
    let data = load_data(ctx, cfg, "data")?;
    let net = load_model(ctx, cfg, &data)?;
    let kind: AttackKind = cfg.get("kind")?.parse().map_err(|_| config_err!("key `kind` must be fgsm, pgd or stadv"))?;
    let a = attack_config(cfg, "", kind)?;
    Ok((net, data, a))
}

fn attack(cfg: &mut Config, ctx: &mut Ctx) -> Result<()> {
    let (net, data, a) = attack_setup(cfg, ctx)?;
    let adv = attacks::attack(&net, data.images(), data.labels(), &a)?;
    let adv = LabeledDataset::new(adv, data.labels().to_vec(), Provenance::Attack(a.clone()))?;
    let out = ctx.output("out", cfg.path("out")?)?;
    lads::save(&adv, &out)?;
    ctx.say(format!("wrote {} {} samples to {}", adv.len(), a.kind, out.display()));
    Ok(())
}

fn augment(cfg: &mut Config, ctx: &mut Ctx) -> Result<()> {
    let (net, data, a) = attack_setup(cfg, ctx)?;
    let union = training::augment(&net, &data, &a)?;
    let out = ctx.output("out", cfg.path("out")?)?;
    lads::save(&union, &out)?;
    ctx.say(format!(
        "wrote {} clean + {} {} samples to {}",
        data.len(),
        data.len(),
        a.kind,
        out.display()
    ));
    Ok(())
}

// ---- eval / ssim -----------------------------------------------------------

fn ssim_keys(schema: Schema) -> Schema {
    let d = SsimConfig::default();
    schema
        .key("window", Type::Int, d.window, "SSIM window side")
        .key("k1", Type::Float, d.k1, "SSIM luminance constant factor")
        .key("k2", Type::Float, d.k2, "SSIM contrast constant factor")
        .key("dynamic_range", Type::Float, d.dynamic_range, "pixel dynamic range")
}

fn ssim_config(cfg: &Config) -> Result<SsimConfig> {
    Ok(SsimConfig {
        window: cfg.usize("window")?,
        k1: cfg.f64("k1")?,
        k2: cfg.f64("k2")?,
        dynamic_range: cfg.f64("dynamic_range")?,
    })
}

fn eval_schema() -> Schema {
    let mut s = io_keys(
        Schema::new(),
        &[("model", "LATL weights"), ("data", "clean LADS test set")],
        "output report (key = value text)",
    )
    .key("arch", Type::Text, "", "layer list; unset = the model's recorded arch or the desk CNN")
    .key("name", Type::Text, "", "model name in the report; unset = model file stem")
    .key("attacks", Type::Text, "fgsm,pgd,stadv", "comma-separated attack kinds, or none");
    s = ssim_keys(s);
    for kind in AttackKind::ALL {
        s = attack_keys(s, Box::leak(format!("{}.", kind.name()).into_boxed_str()));
    }
    s
}

fn eval(cfg: &mut Config, ctx: &mut Ctx) -> Result<()> {
    let data = load_data(ctx, cfg, "data")?;
    let net = load_model(ctx, cfg, &data)?;
    let list = cfg.get("attacks")?.to_string();
    let mut cfgs = Vec::new();
    if list != "none" {
        for name in list.split(',').map(str::trim) {
            let kind: AttackKind = name
                .parse()
                .map_err(|_| config_err!("key `attacks` lists unknown attack {name:?}"))?;
            cfgs.push(attack_config(cfg, &format!("{name}."), kind)?);
        }
    }
    let mut report = evaluate(&net, &data, &cfgs, &ssim_config(cfg)?)?;
    if !cfg.is_set("name") {
        let stem = cfg.path("model")?.file_stem().map(|s| s.to_string_lossy().into_owned());
        cfg.set("name", stem.unwrap_or_else(|| "model".into()))?;
    }
    report.model = cfg.get("name")?.to_string();
    let out = ctx.output("out", cfg.path("out")?)?;
    write(&out, report.to_key_values())?;
    ctx.say(report.to_table().trim_end());
    ctx.say(format!("clean loss {:.6}", report.ground_loss));
    Ok(())
}

fn ssim_schema() -> Schema {
    ssim_keys(io_keys(
        Schema::new(),
        &[("clean", "clean LADS set"), ("adv", "adversarial LADS set, same order")],
        "output text",
    ))
}

fn ssim(cfg: &mut Config, ctx: &mut Ctx) -> Result<()> {
    let clean = load_data(ctx, cfg, "clean")?;
    let adv = load_data(ctx, cfg, "adv")?;
    let d = mean_ssim_distance(&clean, &adv, &ssim_config(cfg)?)?;
    let out = ctx.output("out", cfg.path("out")?)?;
    write(&out, format!("samples = {}\nmean_ssim_distance = {d:?}\n", clean.len()))?;
    ctx.say(format!("mean 1-SSIM over {} samples: {d:.6}", clean.len()));
    Ok(())
}

// ---- scan / plot -----------------------------------------------------------

fn scan_schema() -> Schema {
    io_keys(
        Schema::new(),
        &[("model", "LATL weights at the grid center"), ("data", "LADS evaluation set")],
        "output grid CSV",
    )
    .key("arch", Type::Text, "", "layer list; unset = the model's recorded arch or the desk CNN")
    .key("eval_size", Type::Int, 512, "use the first N samples (0 = all)")
    .key("alpha_min", Type::Float, -1.0, "first alpha")
    .key("alpha_max", Type::Float, 1.0, "last alpha")
    .key("alpha_steps", Type::Int, 51, "alpha count")
    .key("beta_min", Type::Float, -1.0, "first beta")
    .key("beta_max", Type::Float, 1.0, "last beta")
    .key("beta_steps", Type::Int, 51, "beta count")
    .key("delta_seed", Type::Seed, 1, "seed of the first direction")
    .key("eta_seed", Type::Seed, 2, "seed of the second direction")
    .key("normalize", Type::Bool, true, "filter-normalize the directions")
    .key("meta", Type::Path, "", "grid metadata; unset = <out>.meta")
}

fn short_id(path: &Path) -> Result<String> {
    Ok(sha256_file(path)?[..16].to_string())
}

fn scan(cfg: &mut Config, ctx: &mut Ctx) -> Result<()> {
    let data = load_data(ctx, cfg, "data")?;
    let net = load_model(ctx, cfg, &data)?;
    let data = match cfg.usize("eval_size")? {
        0 => data,
        n => data.head(n)?,
    };
    let alphas = linspace(cfg.f64("alpha_min")?, cfg.f64("alpha_max")?, cfg.usize("alpha_steps")?);
    let betas = linspace(cfg.f64("beta_min")?, cfg.f64("beta_max")?, cfg.usize("beta_steps")?);
    let (ds, es) = (cfg.u64("delta_seed")?, cfg.u64("eta_seed")?);
    let dirs = if cfg.bool("normalize")? {
        DirectionPair::normalized(net.params(), ds, es)?
    } else {
        DirectionPair::raw(net.params(), ds, es)
    };
    let mut grid = landscape::scan(net.spec(), net.params(), &dirs, &data, &alphas, &betas)?;
    grid.metadata.model_id = short_id(&cfg.path("model")?)?;
    grid.metadata.eval_set_id = format!("{}:{}", short_id(&cfg.path("data")?)?, data.len());
    let out = ctx.output("out", cfg.path("out")?)?;
    write(&out, grid.to_csv())?;
    if !cfg.is_set("meta") {
        let mut p = out.clone().into_os_string();
        p.push(".meta");
        cfg.set("meta", PathBuf::from(p).display())?;
    }
    let meta = ctx.output("meta", cfg.path("meta")?)?;
    write(&meta, grid.manifest())?;
    let (lo, hi) = grid.finite_range().unwrap_or((f64::NAN, f64::NAN));
    ctx.say(format!(
        "{}x{} grid on {} samples: center loss {:.6}, finite range [{lo:.6}, {hi:.6}]; wrote {}",
        alphas.len(),
        betas.len(),
        data.len(),
        grid.center_loss,
        out.display()
    ));
    Ok(())
}

fn plot_schema() -> Schema {
    let d = PlotOptions::default();
    io_keys(Schema::new(), &[("grid", "grid CSV")], "output image (.ppm or .svg)")
        .key("style", Type::Text, "contour", "contour | surface")
        .key("width", Type::Int, d.width, "image width in pixels")
        .key("height", Type::Int, d.height, "image height in pixels")
        .key("levels", Type::Int, d.levels, "number of color bands")
}

fn plot_cmd(cfg: &mut Config, ctx: &mut Ctx) -> Result<()> {
    let out = cfg.path("out")?;
    let format = match out.extension().and_then(|e| e.to_str()) {
        Some("ppm") => Format::Ppm,
        Some("svg") => Format::Svg,
        _ => return Err(config_err!("key `out` must end in .ppm or .svg")),
    };
    let style = match cfg.get("style")? {
        "contour" => Style::Contour,
        "surface" => Style::Surface,
        other => return Err(config_err!("key `style` must be contour or surface, got {other:?}")),
    };
    let opts = PlotOptions {
        style,
        format,
        width: cfg.usize("width")?,
        height: cfg.usize("height")?,
        levels: cfg.usize("levels")?,
    };
    let path = ctx.input(cfg, "grid")?;
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let grid = landscape::SurfaceGrid::from_csv(&text)?;
    let bytes = plot::render(&grid, &opts)?;
    let out = ctx.output("out", out)?;
    write(&out, bytes)?;
    ctx.say(format!("wrote {}", out.display()));
    Ok(())
}
