use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use interpqe::corpus::{load_corpus, AnnotationKind, Corpus, FillerLexicon, LangPair};
use interpqe::eval::{
    derive_seed, generate_synthetic, make_folds, run_experiment, Dataset, DegradationProfile, ExperimentConfig,
    ExperimentReport,
};
use interpqe::features::{
    prepare, train_resources, FeatureExtractor, FeatureManifest, FeatureTable, PreparedRecord, Resources, SeedList,
    Standardizer,
};
use interpqe::learner::{default_grid, fit, grid_search, SvrHyperparams, TrainedModel};
use interpqe::meteor::{score_corpus, Matcher, MeteorConfig};
use interpqe::text::Lang;

use crate::config::{require_exists, RunConfig};
use crate::{Cli, Command, CommonArgs, ExperimentArgs, MeteorArgs, SvrArgs};

const DEFAULT_SEED: u64 = 20_240_601;
const MODEL_FILE: &str = "model.json";

/// Flags merged over the config file.
struct Ctx {
    cfg: RunConfig,
    common: CommonArgs,
}

impl Ctx {
    fn seed(&self) -> u64 {
        self.common.seed.or(self.cfg.seed).unwrap_or(DEFAULT_SEED)
    }

    fn out(&self) -> Option<PathBuf> {
        self.common.out.clone().or_else(|| self.cfg.out.clone())
    }

    fn out_dir(&self, command: &str) -> Result<PathBuf> {
        let dir = self.out().ok_or_else(|| anyhow!("`{command}` needs --out DIR"))?;
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(dir)
    }

    fn corpora(&self) -> Result<Vec<PathBuf>> {
        let paths = if self.common.corpus.is_empty() {
            self.cfg.corpus.clone()
        } else {
            self.common.corpus.clone()
        };
        if paths.is_empty() {
            bail!("no corpus given (use --corpus FILE)");
        }
        for p in &paths {
            require_exists(p, "corpus")?;
        }
        Ok(paths)
    }

    fn single_corpus(&self, command: &str) -> Result<(PathBuf, Corpus)> {
        let paths = self.corpora()?;
        if paths.len() != 1 {
            bail!("`{command}` takes exactly one corpus, got {}", paths.len());
        }
        let corpus = load_corpus(&paths[0])?;
        Ok((paths[0].clone(), corpus))
    }

    fn manifests(&self, default: &[&str]) -> Result<Vec<FeatureManifest>> {
        let names: Vec<String> = match (&self.common.manifests, &self.cfg.manifests) {
            (Some(m), _) | (None, Some(m)) => m.clone(),
            (None, None) => default.iter().map(|s| s.to_string()).collect(),
        };
        names
            .iter()
            .map(|n| FeatureManifest::named(n.trim()).map_err(Into::into))
            .collect()
    }

    fn single_manifest(&self) -> Result<FeatureManifest> {
        let mut m = self.manifests(&["proposed"])?;
        if m.len() != 1 {
            bail!("this command takes exactly one manifest, got {}", m.len());
        }
        Ok(m.remove(0))
    }

    fn fillers(&self, lang: Lang) -> Result<FillerLexicon> {
        match self.common.fillers.as_ref().or(self.cfg.fillers.as_ref()) {
            Some(dir) => {
                require_exists(dir, "filler directory")?;
                Ok(FillerLexicon::load(dir, lang)?)
            }
            None => Ok(FillerLexicon::builtin(lang)),
        }
    }

    fn seed_list(&self, lang: Lang) -> Result<SeedList> {
        match self.common.seed_lists.as_ref().or(self.cfg.seed_lists.as_ref()) {
            Some(dir) => {
                require_exists(dir, "seed-list directory")?;
                Ok(SeedList::load(dir, lang)?)
            }
            None => Ok(SeedList::builtin(lang)),
        }
    }

    fn meteor(&self, args: &MeteorArgs, lang: Lang) -> Result<MeteorConfig> {
        let d = MeteorConfig::for_lang(lang);
        let matchers = match args.matchers.as_ref().or(self.cfg.meteor_matchers.as_ref()) {
            None => d.matchers.clone(),
            Some(names) => names
                .iter()
                .map(|n| match n.trim() {
                    "exact" => Ok(Matcher::Exact),
                    "stem" => Ok(Matcher::Stem),
                    other => Err(anyhow!("unknown matcher `{other}` (exact, stem)")),
                })
                .collect::<Result<_>>()?,
        };
        let cfg = MeteorConfig {
            alpha: args.alpha.or(self.cfg.meteor_alpha).unwrap_or(d.alpha),
            beta: args.beta.or(self.cfg.meteor_beta).unwrap_or(d.beta),
            gamma_pen: args.gamma_pen.or(self.cfg.meteor_gamma_pen).unwrap_or(d.gamma_pen),
            matchers,
            lang,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Fixed hyperparameters when all three are set, `None` for grid search.
    fn hyperparams(&self, args: &SvrArgs) -> Result<Option<SvrHyperparams>> {
        let c = args.c.or(self.cfg.c);
        let e = args.epsilon.or(self.cfg.epsilon);
        let g = args.kernel_gamma.or(self.cfg.kernel_gamma);
        match (c, e, g) {
            (None, None, None) => Ok(None),
            (Some(c), Some(epsilon), Some(kernel_gamma)) => {
                let hp = SvrHyperparams { c, epsilon, kernel_gamma };
                hp.validate()?;
                Ok(Some(hp))
            }
            _ => bail!("set all of C, epsilon and kernel-gamma, or none of them for grid search"),
        }
    }

    fn dataset(&self, path: &Path) -> Result<Dataset> {
        let corpus = load_corpus(path)?;
        let lang = target_lang(&corpus)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        Ok(Dataset {
            name,
            fillers: self.fillers(lang)?,
            seeds: self.seed_list(lang)?,
            corpus,
        })
    }
}

fn target_lang(corpus: &Corpus) -> Result<Lang> {
    corpus
        .lang_pair()
        .target_lang()
        .with_context(|| format!("language pair {} is not supported", corpus.lang_pair()))
}

/// Writes to `path`, or to stdout when no path is configured.
fn emit(path: Option<PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            fs::write(&p, text).with_context(|| format!("writing {}", p.display()))
        }
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let ctx = Ctx { cfg, common: cli.common };
    if let Some(jobs) = ctx.common.jobs.or(ctx.cfg.jobs) {
        if jobs == 0 {
            bail!("--jobs must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global()?;
    }
    match &cli.command {
        Command::Ingest => ingest(&ctx),
        Command::Score { meteor } => score(&ctx, meteor),
        Command::Extract { resources, meteor } => extract(&ctx, resources.as_deref(), meteor),
        Command::Train { svr, meteor } => train(&ctx, svr, meteor),
        Command::Predict { model, clamp } => predict(&ctx, model.as_deref(), *clamp),
        Command::Evaluate(args) => experiment(&ctx, args, Mode::Evaluate),
        Command::Ablate(args) => experiment(&ctx, args, Mode::Ablate),
        Command::Experiment(args) => experiment(&ctx, args, Mode::Full),
        Command::Synth { pairs, n, profile } => synth(&ctx, pairs.as_ref(), *n, profile.as_deref()),
    }
}

fn ingest(ctx: &Ctx) -> Result<()> {
    for path in ctx.corpora()? {
        let corpus = load_corpus(&path)?;
        let lang = target_lang(&corpus)?;
        let fillers = ctx.fillers(lang)?;
        let mut counts = [0usize; 3];
        for r in corpus.records() {
            let p = prepare(r, &fillers)?;
            counts[0] += p.interp.count(AnnotationKind::Pause);
            counts[1] += p.interp.count(AnnotationKind::Filler);
            counts[2] += p.interp.count(AnnotationKind::Incomplete);
        }
        println!(
            "{}: {} records, {}; interpreter annotations: {} pauses, {} fillers, {} incomplete words",
            path.display(),
            corpus.len(),
            corpus.lang_pair(),
            counts[0],
            counts[1],
            counts[2]
        );
    }
    Ok(())
}

fn labels(corpus: &Corpus, meteor: &MeteorConfig) -> Result<Vec<f64>> {
    let scores = score_corpus(corpus, meteor);
    let failures: Vec<String> = scores.failures().map(|(id, e)| format!("  record `{id}`: {e}")).collect();
    if !failures.is_empty() {
        bail!("cannot score {} record(s):\n{}", failures.len(), failures.join("\n"));
    }
    Ok(scores.scores.into_iter().map(|(_, s)| s.expect("checked").score).collect())
}

fn score(ctx: &Ctx, args: &MeteorArgs) -> Result<()> {
    let (_, corpus) = ctx.single_corpus("score")?;
    let meteor = ctx.meteor(args, target_lang(&corpus)?)?;
    let scores = score_corpus(&corpus, &meteor);
    let failures: Vec<String> = scores.failures().map(|(id, e)| format!("  record `{id}`: {e}")).collect();
    if !failures.is_empty() {
        bail!("cannot score {} record(s):\n{}", failures.len(), failures.join("\n"));
    }
    if let Some(mean) = scores.mean() {
        log::info!("mean METEOR {mean:.4} over {} records", corpus.len());
    }
    emit(ctx.out(), &scores.to_tsv())
}

struct Extracted {
    extractor: FeatureExtractor,
    rows: Vec<Vec<f64>>,
}

/// Full feature rows for every record, with resources trained on `train`
/// (all records when `None`) or loaded from disk.
fn extract_rows(ctx: &Ctx, corpus: &Corpus, resources: Option<&Path>, manifest: &FeatureManifest) -> Result<Extracted> {
    let lang = target_lang(corpus)?;
    let fillers = ctx.fillers(lang)?;
    let prepared: Vec<PreparedRecord> = corpus.records().iter().map(|r| prepare(r, &fillers)).collect::<Result<_, _>>()?;
    let resources = match resources {
        Some(dir) => {
            require_exists(dir, "resource directory")?;
            Resources::load(dir)?
        }
        None => {
            let refs: Vec<&PreparedRecord> = prepared.iter().collect();
            train_resources(&refs)?
        }
    };
    let extractor = FeatureExtractor::new(corpus.lang_pair().clone(), resources, fillers, ctx.seed_list(lang)?)?;
    let rows = prepared
        .iter()
        .map(|p| extractor.full(p).map(|full| manifest.project(&full)))
        .collect::<Result<_, _>>()?;
    Ok(Extracted { extractor, rows })
}

fn extract(ctx: &Ctx, resources: Option<&Path>, args: &MeteorArgs) -> Result<()> {
    let (_, corpus) = ctx.single_corpus("extract")?;
    let manifest = ctx.single_manifest()?;
    let meteor = ctx.meteor(args, target_lang(&corpus)?)?;
    let y = labels(&corpus, &meteor)?;
    let ex = extract_rows(ctx, &corpus, resources, &manifest)?;
    let table = FeatureTable {
        features: manifest.features.clone(),
        ids: corpus.records().iter().map(|r| r.id.clone()).collect(),
        rows: ex.rows,
        labels: Some(y),
    };
    emit(ctx.out(), &table.to_tsv())
}

fn train(ctx: &Ctx, svr: &SvrArgs, args: &MeteorArgs) -> Result<()> {
    let (_, corpus) = ctx.single_corpus("train")?;
    let manifest = ctx.single_manifest()?;
    let meteor = ctx.meteor(args, target_lang(&corpus)?)?;
    let hp_fixed = ctx.hyperparams(svr)?;
    let dir = ctx.out_dir("train")?;
    let y = labels(&corpus, &meteor)?;
    let ex = extract_rows(ctx, &corpus, None, &manifest)?;

    let hp = match hp_fixed {
        Some(hp) => hp,
        None => {
            // Hold out one tenth of the records to pick hyperparameters.
            let plan = make_folds(corpus.len(), 10, derive_seed(ctx.seed(), "train/dev"))?;
            let fold = &plan.folds[0];
            let mut train_idx: Vec<usize> = fold.train.iter().chain(&fold.dev).copied().collect();
            train_idx.sort_unstable();
            let pick_rows = |idx: &[usize]| -> Vec<Vec<f64>> { idx.iter().map(|&i| ex.rows[i].clone()).collect() };
            let pick_y = |idx: &[usize]| -> Vec<f64> { idx.iter().map(|&i| y[i]).collect() };
            let train_raw = pick_rows(&train_idx);
            let standardizer = Standardizer::fit(&train_raw)?;
            let std_rows = |raw: Vec<Vec<f64>>| -> Vec<Vec<f64>> { raw.iter().map(|r| standardizer.transform(r)).collect() };
            let outcome = grid_search(
                &std_rows(train_raw),
                &pick_y(&train_idx),
                &std_rows(pick_rows(&fold.test)),
                &pick_y(&fold.test),
                &default_grid(manifest.len()),
            )?;
            log::info!(
                "selected C={} epsilon={} kernel_gamma={} (dev r {:.4})",
                outcome.best.c,
                outcome.best.epsilon,
                outcome.best.kernel_gamma,
                outcome.dev_r[outcome.best_index].unwrap_or(f64::NAN)
            );
            outcome.best
        }
    };
    let model = fit(manifest, &ex.rows, &y, &hp)?;
    ex.extractor.resources.save(&dir)?;
    write_file(&dir, MODEL_FILE, &model.to_json())?;
    println!(
        "trained `{}` on {} records (C={}, epsilon={}, kernel_gamma={}, {} support vectors) -> {}",
        model.manifest.name,
        corpus.len(),
        hp.c,
        hp.epsilon,
        hp.kernel_gamma,
        model.support.len(),
        dir.display()
    );
    Ok(())
}

fn predict(ctx: &Ctx, model: Option<&Path>, clamp: bool) -> Result<()> {
    let path = model
        .map(Path::to_path_buf)
        .or_else(|| ctx.cfg.model.clone())
        .ok_or_else(|| anyhow!("`predict` needs --model FILE"))?;
    let path = if path.is_dir() { path.join(MODEL_FILE) } else { path };
    require_exists(&path, "model")?;
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let model = TrainedModel::from_json(&text)?;
    if ctx.common.manifests.is_some() || ctx.cfg.manifests.is_some() {
        let requested = ctx.single_manifest()?;
        if requested.features != model.manifest.features {
            bail!(
                "manifest `{}` does not match the model's manifest `{}`",
                requested.name,
                model.manifest.name
            );
        }
    }
    let clamp = clamp || ctx.cfg.clamp.unwrap_or(false);
    let (_, corpus) = ctx.single_corpus("predict")?;
    let resource_dir = path.parent().unwrap_or(Path::new("."));
    let ex = extract_rows(ctx, &corpus, Some(resource_dir), &model.manifest)?;
    let manifest = Arc::new(model.manifest.clone());
    let mut out = String::from("utterance_id\tprediction\n");
    for (record, row) in corpus.records().iter().zip(ex.rows) {
        let v = interpqe::features::FeatureVector::new(Arc::clone(&manifest), record.id.clone(), row)?;
        let p = model.predict(&v, clamp)?;
        out.push_str(&format!("{}\t{}\n", record.id, p));
    }
    emit(ctx.out(), &out)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Evaluate,
    Ablate,
    Full,
}

fn experiment(ctx: &Ctx, args: &ExperimentArgs, mode: Mode) -> Result<()> {
    let paths = ctx.corpora()?;
    let datasets: Vec<Dataset> = paths.iter().map(|p| ctx.dataset(p)).collect::<Result<_>>()?;
    let manifests = match mode {
        Mode::Ablate => Vec::new(),
        _ => ctx.manifests(&["baseline", "trimmed", "proposed"])?,
    };
    let ablation = match mode {
        Mode::Evaluate => false,
        Mode::Ablate => true,
        Mode::Full => !args.no_ablation && ctx.cfg.ablation.unwrap_or(true),
    };
    let defaults = ExperimentConfig::default();
    let config = ExperimentConfig {
        k: args.k.or(ctx.cfg.k).unwrap_or(defaults.k),
        seed: ctx.seed(),
        grid: ctx.hyperparams(&args.svr)?.map(|hp| vec![hp]),
        bootstrap_resamples: args.resamples.or(ctx.cfg.bootstrap_resamples).unwrap_or(defaults.bootstrap_resamples),
        // The language is replaced per dataset.
        meteor: ctx.meteor(&args.meteor, Lang::En)?,
        manifests,
        ablation,
    };
    let out = ctx.out();
    if let Some(dir) = &out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let report = run_experiment(&datasets, &config)?;
    let text = match mode {
        Mode::Ablate => report.ablation_table().unwrap_or_default(),
        _ => report.to_text(),
    };
    print!("{text}");
    if let Some(dir) = out {
        write_report(&dir, &report, mode)?;
    }
    Ok(())
}

fn write_report(dir: &Path, report: &ExperimentReport, mode: Mode) -> Result<()> {
    write_file(dir, "report.json", &report.to_json())?;
    write_file(dir, "report.txt", &report.to_text())?;
    if mode != Mode::Ablate {
        write_file(dir, "results.txt", &report.results_table())?;
    }
    if let Some(t) = report.ablation_table() {
        write_file(dir, "ablation.txt", &t)?;
    }
    Ok(())
}

fn synth(ctx: &Ctx, pairs: Option<&Vec<String>>, n: Option<usize>, profile: Option<&str>) -> Result<()> {
    let pairs: Vec<String> = pairs
        .or(ctx.cfg.pairs.as_ref())
        .cloned()
        .unwrap_or_else(|| vec!["en-ja".into(), "en-fr".into(), "en-it".into()]);
    let n = n.or(ctx.cfg.n).unwrap_or(600);
    let profile_name = profile.or(ctx.cfg.profile.as_deref()).unwrap_or("mixed");
    let profile: DegradationProfile = profile_name.parse()?;
    let dir = ctx.out_dir("synth")?;
    for p in &pairs {
        let pair: LangPair = p.parse()?;
        let seed = derive_seed(ctx.seed(), &format!("synth/{pair}/{profile_name}"));
        let corpus = generate_synthetic(n, &pair, profile, seed)?;
        let path = dir.join(format!("{pair}.jsonl"));
        corpus.write(&path)?;
        println!("{}: {} records ({profile_name})", path.display(), corpus.len());
    }
    Ok(())
}
