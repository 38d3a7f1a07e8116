use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use log::{info, warn};
use sacreddetect_core::analytics::{analyze as compute, render_reports, tabulate, Analysis};
use sacreddetect_core::harvest::{
    build_cdx_query, build_cdx_query_at, derive_worklist, fetch_live, parse_cdx_response, DocumentStore, FetchPolicy,
    Fetcher, Group, RawDocument, WorkItem,
};
use sacreddetect_core::hash::sha256_hex;
use sacreddetect_core::judge::{
    build_batch_file, classify as judge, BatchProvider, HttpBatchProvider, PromptTemplate, ProviderKind, StubProvider,
    TemplateId, Verdict,
};
use sacreddetect_core::lexicon::{classify_corpus, compile_matcher, load_lexicon, Lexicon, MatchResult};
use sacreddetect_core::text::{
    build_sentence_corpus, clean_document, filter_corpus, Cleaned, CorpusSummary, ExtractConfig, SentenceRecord,
    SPLITTER_VERSION,
};
use sacreddetect_core::Label;
use serde_json::{json, Value};

use crate::config::{model_dir_name, ModelConfig, PipelineConfig};
use crate::io::{clear_files, read_jsonl, write_json, write_jsonl};
use crate::manifest::{self, RunManifest, TOOL_VERSION};
use crate::{AnalyzeArgs, BatchBuildArgs, ClassifyArgs, ExtractArgs, Failure, HarvestArgs, MatchArgs};

pub struct Ctx {
    pub cfg: PipelineConfig,
    pub stub: bool,
}

impl Ctx {
    pub fn new(cfg: PipelineConfig, stub: bool) -> Self {
        Self { cfg, stub }
    }

    fn root(&self) -> &Path {
        &self.cfg.output_root
    }

    fn raw_dir(&self) -> PathBuf {
        self.root().join("raw")
    }

    fn corpus_dir(&self) -> PathBuf {
        self.root().join("corpus")
    }

    fn tree_dir(&self) -> PathBuf {
        self.root().join("labels").join("tree")
    }

    fn labels_dir(&self, model: &str) -> PathBuf {
        self.root().join("labels").join(model_dir_name(model))
    }

    fn batch_dir(&self, model: &str) -> PathBuf {
        self.root().join("batches").join(model_dir_name(model))
    }

    fn analysis_dir(&self) -> PathBuf {
        self.root().join("analysis")
    }

    fn reports_dir(&self) -> PathBuf {
        self.root().join("reports")
    }

    fn models(&self, filter: &[String]) -> Result<Vec<ModelConfig>, Failure> {
        for f in filter {
            if !self.cfg.models.iter().any(|m| &m.model_id == f) {
                return Err(Failure::Config(format!("model `{f}` is not in the config")));
            }
        }
        let chosen: Vec<ModelConfig> =
            self.cfg.models.iter().filter(|m| filter.is_empty() || filter.contains(&m.model_id)).cloned().collect();
        if chosen.is_empty() {
            return Err(Failure::Config("no models configured".into()));
        }
        Ok(chosen)
    }

    fn template(&self, arg: &Option<String>) -> Result<TemplateId, Failure> {
        match arg {
            Some(t) => t.parse().map_err(|e: sacreddetect_core::judge::JudgeError| Failure::Config(e.to_string())),
            None => Ok(self.cfg.template),
        }
    }
}

fn other(e: impl std::fmt::Display) -> Failure {
    Failure::Other(e.to_string())
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// A stage about to write `dir`.
struct StageRun {
    stage: String,
    dir: PathBuf,
    fingerprint: String,
    inputs: BTreeMap<String, String>,
    params: BTreeMap<String, Value>,
    started_at: String,
}

/// Returns `None` when `dir` already holds this exact result.
fn begin(
    stage: &str,
    dir: &Path,
    inputs: BTreeMap<String, String>,
    params: BTreeMap<String, Value>,
) -> Result<Option<StageRun>, Failure> {
    let fingerprint = manifest::fingerprint(stage, &inputs, &params);
    if manifest::is_current(dir, &fingerprint) {
        info!("{stage}: {} is up to date", dir.display());
        return Ok(None);
    }
    fs::create_dir_all(dir)?;
    manifest::remove(dir)?;
    Ok(Some(StageRun { stage: stage.into(), dir: dir.to_path_buf(), fingerprint, inputs, params, started_at: now() }))
}

fn finish(run: StageRun, outputs: &[PathBuf]) -> Result<(), Failure> {
    let m = RunManifest {
        stage: run.stage.clone(),
        tool_version: TOOL_VERSION.into(),
        fingerprint: run.fingerprint,
        inputs: run.inputs,
        params: run.params,
        outputs: manifest::hash_outputs(&run.dir, outputs)?,
        started_at: run.started_at,
        finished_at: now(),
    };
    manifest::write(&run.dir, &m)?;
    info!("{}: wrote {} file(s) to {}", run.stage, outputs.len(), run.dir.display());
    Ok(())
}

/// Content hash of a finished upstream stage, or a prerequisite error
/// naming the command that produces it.
fn require(dir: &Path, command: &str) -> Result<String, Failure> {
    let Some(m) = manifest::load(dir) else {
        return Err(Failure::Prereq(format!(
            "{} has no completed output; run `sacreddetect {command}` first",
            dir.display()
        )));
    };
    let paths: Vec<PathBuf> = m.outputs.keys().map(|p| dir.join(p)).collect();
    let now = manifest::hash_outputs(dir, &paths).map_err(|_| {
        Failure::Prereq(format!("outputs in {} are missing; re-run `sacreddetect {command}`", dir.display()))
    })?;
    if now != m.outputs {
        return Err(Failure::Prereq(format!(
            "outputs in {} changed since they were written; re-run `sacreddetect {command}`",
            dir.display()
        )));
    }
    Ok(manifest::hash_listing(&now))
}

fn params(pairs: &[(&str, Value)]) -> BTreeMap<String, Value> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

pub fn validate(cfg: &PipelineConfig) -> Result<(), Failure> {
    let lex = cfg.load_lexicon().map_err(|e| Failure::Config(e.to_string()))?;
    let secular = cfg.sources.iter().filter(|s| s.group == Group::Secular).count();
    println!(
        "config ok: {} sources ({} secular, {} religious), years {}",
        cfg.sources.len(),
        secular,
        cfg.sources.len() - secular,
        year_span(cfg)
    );
    println!(
        "lexicon: {} roots, {} variants, {} exclusions",
        lex.roots.len(),
        lex.variant_paths().len(),
        lex.exclusions.len()
    );
    let models: Vec<String> = cfg.models.iter().map(|m| format!("{} ({})", m.model_id, m.provider)).collect();
    println!("models: {}", if models.is_empty() { "none (tree only)".into() } else { models.join(", ") });
    println!("template: {}", cfg.template);
    println!("output root: {}", cfg.output_root.display());
    Ok(())
}

fn year_span(cfg: &PipelineConfig) -> String {
    let from = cfg.sources.iter().map(|s| s.from_year).min().unwrap_or_default();
    let to = cfg.sources.iter().map(|s| s.to_year).max().unwrap_or_default();
    format!("{from}-{to}")
}

// ---------------------------------------------------------------- harvest

pub fn harvest(ctx: &Ctx, args: &HarvestArgs) -> Result<(), Failure> {
    let mut policy = ctx.cfg.fetch.clone();
    if let Some(r) = args.rate {
        if r.is_nan() || r <= 0.0 {
            return Err(Failure::Config("--rate must be positive".into()));
        }
        policy.rate = r;
    }
    if let Some(r) = args.retries {
        policy.retries = r;
    }
    if let Some(t) = args.timeout {
        policy.timeout = Duration::from_secs(t.max(1));
    }
    let dir = ctx.raw_dir();
    let p = params(&[
        ("sources", serde_json::to_value(&ctx.cfg.sources).map_err(other)?),
        ("rate", json!(policy.rate)),
        ("retries", json!(policy.retries)),
        ("timeout_secs", json!(policy.timeout.as_secs())),
        ("respect_robots", json!(policy.respect_robots)),
        ("user_agent", json!(policy.user_agent)),
        ("cdx_endpoint", json!(args.cdx_endpoint)),
    ]);
    let fingerprint = manifest::fingerprint("harvest", &BTreeMap::new(), &p);
    if manifest::is_current(&dir, &fingerprint) {
        info!("harvest: {} is up to date", dir.display());
        return Ok(());
    }
    let has_docs = dir.is_dir()
        && fs::read_dir(&dir)?.flatten().any(|e| e.path().extension().is_some_and(|x| x == "jsonl"));
    if has_docs && !args.resume {
        return Err(Failure::Prereq(format!(
            "{} already holds documents; pass --resume to continue that harvest or choose another --output-root",
            dir.display()
        )));
    }
    let Some(run) = begin("harvest", &dir, BTreeMap::new(), p)? else { return Ok(()) };
    let cdx_dir = dir.join("cdx");
    fs::create_dir_all(&cdx_dir)?;

    let cdx_policy = FetchPolicy { respect_robots: false, timeout: policy.timeout.max(Duration::from_secs(120)), ..policy.clone() };
    let mut worklists: Vec<(String, Vec<WorkItem>)> = Vec::new();
    let mut report = serde_json::Map::new();
    let mut failed = Vec::new();
    for spec in &ctx.cfg.sources {
        let cached = cdx_dir.join(format!("{}.json", spec.ngo_id));
        let body = if args.resume && cached.is_file() {
            fs::read_to_string(&cached)?
        } else {
            let query = match &args.cdx_endpoint {
                Some(e) => build_cdx_query_at(e, spec),
                None => build_cdx_query(spec),
            };
            info!("{}: querying {query}", spec.ngo_id);
            let doc = fetch_live(&query, &cdx_policy);
            if doc.status != 200 {
                warn!("{}: CDX query failed (status {}, {})", spec.ngo_id, doc.status, doc.note.unwrap_or_default());
                failed.push(spec.ngo_id.clone());
                continue;
            }
            let body = String::from_utf8_lossy(&doc.body).into_owned();
            fs::write(&cached, &body)?;
            body
        };
        let parsed = match parse_cdx_response(&body) {
            Ok(p) => p,
            Err(e) => {
                warn!("{}: {e}", spec.ngo_id);
                failed.push(spec.ngo_id.clone());
                continue;
            }
        };
        let wl = derive_worklist(&parsed.records);
        report.insert(
            spec.ngo_id.clone(),
            json!({
                "cdx_records": parsed.records.len(),
                "cdx_skipped": parsed.skipped(),
                "worklist": wl.items.len(),
                "dropped_unparseable": wl.dropped_unparseable,
            }),
        );
        worklists.push((spec.ngo_id.clone(), wl.items));
    }

    let mut store = DocumentStore::open(&dir).map_err(other)?;
    let fetcher = Fetcher::new(policy).map_err(other)?;
    let jobs: Vec<(&str, &[WorkItem])> = worklists.iter().map(|(n, w)| (n.as_str(), w.as_slice())).collect();
    let outcomes = fetcher.harvest_all(&jobs, &mut store).map_err(other)?;
    store.write_index().map_err(other)?;
    for (ngo, outcome) in outcomes {
        if let Some(Value::Object(entry)) = report.get_mut(&ngo) {
            entry.insert("fetch".into(), serde_json::to_value(outcome).map_err(other)?);
        }
    }
    write_json(&dir.join("harvest_report.json"), &report)?;

    if !failed.is_empty() {
        return Err(Failure::Other(format!(
            "CDX query failed for {}; re-run `sacreddetect harvest --resume`",
            failed.join(", ")
        )));
    }
    let outputs: Vec<PathBuf> = manifest::hash_files(&dir)?.keys().map(|k| dir.join(k)).collect();
    finish(run, &outputs)
}

// ---------------------------------------------------------------- extract

pub fn extract(ctx: &Ctx, args: &ExtractArgs) -> Result<(), Failure> {
    let raw_dir = args.raw.clone().unwrap_or_else(|| ctx.raw_dir());
    let raw_hash = if args.raw.is_some() || args.skip_harvest {
        if !raw_dir.is_dir() {
            return Err(Failure::Prereq(format!("raw store {} does not exist", raw_dir.display())));
        }
        manifest::hash_dir(&raw_dir)?
    } else {
        require(&raw_dir, "harvest")?
    };
    let cfg = ExtractConfig::default();
    let ngos: Vec<&str> = ctx.cfg.sources.iter().map(|s| s.ngo_id.as_str()).collect();
    let p = params(&[
        ("splitter_version", json!(SPLITTER_VERSION)),
        ("min_block_words", json!(cfg.min_words)),
        ("min_block_density", json!(cfg.min_density)),
        ("language_rule", json!("keep lang=en or confidence<=0.5")),
        ("ngos", json!(ngos)),
    ]);
    let dir = ctx.corpus_dir();
    let inputs = BTreeMap::from([("raw".to_string(), raw_hash)]);
    let Some(run) = begin("extract", &dir, inputs, p)? else { return Ok(()) };
    clear_files(&dir, &["jsonl", "csv", "json"])?;

    let store = DocumentStore::open(&raw_dir).map_err(other)?;
    let loaded: Vec<(String, Vec<RawDocument>)> = ctx
        .cfg
        .sources
        .iter()
        .map(|s| store.load(&s.ngo_id).map(|d| (s.ngo_id.clone(), d)).map_err(other))
        .collect::<Result<_, _>>()?;

    let per_ngo: Vec<(String, Vec<SentenceRecord>, CorpusSummary, Value)> = std::thread::scope(|scope| {
        let handles: Vec<_> = loaded
            .iter()
            .map(|(ngo, raws)| {
                scope.spawn(move || {
                    let mut docs = Vec::new();
                    let mut skipped: BTreeMap<String, usize> = BTreeMap::new();
                    let mut replacement_chars = 0;
                    for raw in raws {
                        match clean_document(raw) {
                            Cleaned::Doc { doc, replacement_chars: r } => {
                                replacement_chars += r;
                                docs.push(doc);
                            }
                            Cleaned::Skipped(reason) => {
                                let key = serde_json::to_value(reason).ok().and_then(|v| v.as_str().map(String::from));
                                *skipped.entry(key.unwrap_or_default()).or_default() += 1;
                            }
                        }
                    }
                    let (kept, filter) = filter_corpus(docs);
                    let records = build_sentence_corpus(&kept);
                    let mut summary = CorpusSummary::from_corpus(&kept, &records);
                    summary.per_ngo.entry(ngo.clone()).or_default();
                    let stats = json!({
                        "raw_documents": raws.len(),
                        "skipped": skipped,
                        "dropped_non_english": filter.dropped.get(ngo).copied().unwrap_or(0),
                        "documents": kept.len(),
                        "sentences": records.len(),
                        "replacement_chars": replacement_chars,
                    });
                    (ngo.clone(), records, summary, stats)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("extract worker panicked")).collect()
    });

    let mut outputs = Vec::new();
    let mut summary = CorpusSummary::default();
    let mut report = serde_json::Map::new();
    for (ngo, records, s, stats) in per_ngo {
        let path = dir.join(format!("{ngo}.jsonl"));
        write_jsonl(&path, &records)?;
        outputs.push(path);
        summary = summary.merge(s);
        report.insert(ngo, stats);
    }
    let csv = dir.join("summary.csv");
    fs::write(&csv, summary.to_csv(|n| ctx.cfg.group_of(n)))?;
    let rep = dir.join("extract_report.json");
    write_json(&rep, &report)?;
    outputs.extend([csv, rep]);
    finish(run, &outputs)
}

fn load_corpus(dir: &Path, ngo: &str) -> Result<Vec<SentenceRecord>, Failure> {
    read_jsonl(&dir.join(format!("{ngo}.jsonl"))).map_err(Failure::Other)
}

// ---------------------------------------------------------------- match

fn lexicon_fingerprint(lex: &Lexicon) -> String {
    sha256_hex(lex.to_json().as_bytes())
}

pub fn match_stage(ctx: &Ctx, args: &MatchArgs) -> Result<(), Failure> {
    let corpus_dir = args.corpus.clone().unwrap_or_else(|| ctx.corpus_dir());
    let corpus_hash = if args.corpus.is_some() && manifest::load(&corpus_dir).is_none() {
        manifest::hash_dir(&corpus_dir)?
    } else {
        require(&corpus_dir, "extract")?
    };
    let lexicon = match &args.lexicon {
        Some(p) => load_lexicon(p).map(|(l, _)| l).map_err(|e| Failure::Config(format!("lexicon: {e}")))?,
        None => ctx.cfg.load_lexicon().map_err(|e| Failure::Config(e.to_string()))?,
    };
    let matcher = compile_matcher(&lexicon);
    let p = params(&[
        ("lexicon_sha256", json!(lexicon_fingerprint(&lexicon))),
        ("patterns", json!(matcher.pattern_count())),
        ("exclusions", json!(matcher.exclusion_count())),
        ("matching", json!("case-insensitive, word-bounded, exclusion spans suppress")),
    ]);
    let dir = args.out.clone().unwrap_or_else(|| ctx.tree_dir());
    let inputs = BTreeMap::from([("corpus".to_string(), corpus_hash)]);
    let Some(run) = begin("match", &dir, inputs, p)? else { return Ok(()) };
    clear_files(&dir, &["jsonl", "csv", "json"])?;

    let mut outputs = Vec::new();
    let mut csv = String::from("ngo_id,group,n_sentences,n_yes,pct_yes\n");
    for s in &ctx.cfg.sources {
        let corpus = load_corpus(&corpus_dir, &s.ngo_id)?;
        let results = classify_corpus(&matcher, &corpus);
        let yes = results.iter().filter(|r| r.label == Label::Yes).count();
        let pct = if corpus.is_empty() { 0.0 } else { 100.0 * yes as f64 / corpus.len() as f64 };
        csv.push_str(&format!("{},{},{},{yes},{pct:.1}\n", s.ngo_id, s.group.as_str(), corpus.len()));
        let path = dir.join(format!("{}.jsonl", s.ngo_id));
        write_jsonl(&path, &results)?;
        outputs.push(path);
    }
    let summary = dir.join("summary.csv");
    fs::write(&summary, csv)?;
    let lex = dir.join("lexicon.json");
    fs::write(&lex, lexicon.to_json())?;
    outputs.extend([summary, lex]);
    finish(run, &outputs)
}

// ---------------------------------------------------------------- batches

fn provider_kind(ctx: &Ctx, model: &ModelConfig, arg: &Option<String>) -> Result<ProviderKind, Failure> {
    if ctx.stub {
        return Ok(ProviderKind::Stub);
    }
    match arg {
        Some(p) => p.parse().map_err(Failure::Config),
        None => Ok(model.provider),
    }
}

fn decoding_note() -> Value {
    json!("provider defaults; no temperature or sampling parameters are sent")
}

fn build_batches(ctx: &Ctx, model: &ModelConfig, kind: ProviderKind, template: TemplateId) -> Result<String, Failure> {
    let corpus_hash = require(&ctx.corpus_dir(), "extract")?;
    let prompt = PromptTemplate::get(template);
    let p = params(&[
        ("model_id", json!(model.model_id)),
        ("format", json!(kind.format().as_str())),
        ("template", json!(template.as_str())),
        ("prompt_sha256", json!(prompt.sha256())),
        ("decoding", decoding_note()),
    ]);
    let dir = ctx.batch_dir(&model.model_id);
    let inputs = BTreeMap::from([("corpus".to_string(), corpus_hash)]);
    if let Some(run) = begin("batch-build", &dir, inputs, p)? {
        let mut outputs = Vec::new();
        let mut skipped = BTreeMap::new();
        for s in &ctx.cfg.sources {
            let corpus = load_corpus(&ctx.corpus_dir(), &s.ngo_id)?;
            let batch = build_batch_file(&corpus, prompt.system_text, &model.model_id);
            skipped.insert(s.ngo_id.clone(), batch.skipped_empty);
            let path = dir.join(format!("{}.jsonl", s.ngo_id));
            fs::write(&path, batch.to_jsonl(kind.format()))?;
            outputs.push(path);
        }
        let rep = dir.join("batch_report.json");
        write_json(&rep, &json!({ "skipped_empty": skipped }))?;
        outputs.push(rep);
        finish(run, &outputs)?;
    }
    require(&dir, "batch-build")
}

pub fn batch_build(ctx: &Ctx, args: &BatchBuildArgs) -> Result<(), Failure> {
    let template = ctx.template(&args.template)?;
    for model in ctx.models(&args.model)? {
        let kind = provider_kind(ctx, &model, &None)?;
        build_batches(ctx, &model, kind, template)?;
    }
    Ok(())
}

// ---------------------------------------------------------------- classify

pub fn classify(ctx: &Ctx, args: &ClassifyArgs) -> Result<(), Failure> {
    let template = ctx.template(&args.template)?;
    let corpus_hash = require(&ctx.corpus_dir(), "extract")?;
    let prompt = PromptTemplate::get(template);
    for model in ctx.models(&args.model)? {
        let kind = provider_kind(ctx, &model, &args.provider)?;
        let batch_hash = build_batches(ctx, &model, kind, template)?;
        let p = params(&[
            ("model_id", json!(model.model_id)),
            ("provider", json!(kind.as_str())),
            ("template", json!(template.as_str())),
            ("prompt_sha256", json!(prompt.sha256())),
            ("strict_json", json!(args.strict_json)),
            ("decoding", decoding_note()),
        ]);
        let dir = ctx.labels_dir(&model.model_id);
        let inputs =
            BTreeMap::from([("corpus".to_string(), corpus_hash.clone()), ("batches".to_string(), batch_hash)]);
        let Some(run) = begin("classify", &dir, inputs, p)? else { continue };

        let provider: Box<dyn BatchProvider> = match kind {
            ProviderKind::Stub => Box::new(StubProvider),
            _ => {
                let mut h = HttpBatchProvider::from_env(kind, args.base_url.as_deref().or(model.base_url.as_deref()))
                    .map_err(|e| Failure::Provider(e.to_string()))?;
                h.poll_interval = Duration::from_secs(args.poll_secs);
                h.max_wait = Duration::from_secs(args.max_wait_hours * 3600);
                h.state_dir = Some(ctx.batch_dir(&model.model_id).join("jobs"));
                Box::new(h)
            }
        };
        let provider = provider.as_ref();

        let batch_dir = ctx.batch_dir(&model.model_id);
        let results: Vec<(String, Result<Option<Value>, String>)> = std::thread::scope(|scope| {
            let handles: Vec<_> = ctx
                .cfg
                .sources
                .iter()
                .map(|s| {
                    let (dir, batch_dir, model) = (&dir, &batch_dir, &model);
                    scope.spawn(move || {
                        let r = classify_ngo(ctx, provider, model, prompt.system_text, &s.ngo_id, dir, batch_dir, args);
                        (s.ngo_id.clone(), r)
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("classify worker panicked")).collect()
        });

        let mut failures = Vec::new();
        let mut summary = String::from("ngo_id,n_sentences,n_yes,n_no,n_malformed,n_missing\n");
        for (ngo, r) in &results {
            match r {
                Ok(Some(stats)) => summary.push_str(&format!(
                    "{ngo},{},{},{},{},{}\n",
                    stats["n"], stats["yes"], stats["no"], stats["malformed"], stats["missing"]
                )),
                Ok(None) => {}
                Err(e) => failures.push(format!("{ngo}: {e}")),
            }
        }
        if !failures.is_empty() {
            return Err(Failure::Provider(format!(
                "{}: {}; completed NGOs are kept, re-run `sacreddetect classify --resume`",
                model.model_id,
                failures.join("; ")
            )));
        }
        // Rebuild the summary from the label files so resumed NGOs count too.
        let mut summary_rows = String::from("ngo_id,n_sentences,n_yes,n_no,n_malformed,n_missing\n");
        let mut outputs = Vec::new();
        for s in &ctx.cfg.sources {
            let path = dir.join(format!("{}.jsonl", s.ngo_id));
            let verdicts: Vec<Verdict> = read_jsonl(&path).map_err(Failure::Other)?;
            let count = |l: Label| verdicts.iter().filter(|v| v.label == l).count();
            let missing = verdicts.iter().filter(|v| v.raw_text == sacreddetect_core::judge::MISSING).count();
            summary_rows.push_str(&format!(
                "{},{},{},{},{},{missing}\n",
                s.ngo_id,
                verdicts.len(),
                count(Label::Yes),
                count(Label::No),
                count(Label::Malformed)
            ));
            outputs.push(path);
        }
        drop(summary);
        let sp = dir.join("summary.csv");
        fs::write(&sp, summary_rows)?;
        outputs.push(sp);
        finish(run, &outputs)?;
    }
    Ok(())
}

/// Classifies one NGO; `Ok(None)` when resumed from an existing file.
#[allow(clippy::too_many_arguments)]
fn classify_ngo(
    ctx: &Ctx,
    provider: &dyn BatchProvider,
    model: &ModelConfig,
    system_text: &str,
    ngo: &str,
    dir: &Path,
    batch_dir: &Path,
    args: &ClassifyArgs,
) -> Result<Option<Value>, String> {
    let corpus = load_corpus(&ctx.corpus_dir(), ngo).map_err(|e| e.to_string())?;
    let label_path = dir.join(format!("{ngo}.jsonl"));
    if args.resume {
        if let Ok(existing) = read_jsonl::<Verdict>(&label_path) {
            let ids: std::collections::HashSet<&str> = existing.iter().map(|v| v.sentence_id.as_str()).collect();
            if existing.len() == corpus.len() && corpus.iter().all(|r| ids.contains(r.sentence_id.as_str())) {
                info!("{}/{ngo}: kept {} existing verdicts", model.model_id, existing.len());
                return Ok(None);
            }
        }
    }
    let job = format!("{}/{ngo}", model.model_id);
    let out = judge(&corpus, system_text, &model.model_id, provider, &job, args.strict_json).map_err(|e| e.to_string())?;
    let results_path = batch_dir.join(format!("{ngo}.results.jsonl"));
    let mut text = out.results.raw_lines.join("\n");
    if !text.is_empty() {
        text.push('\n');
    }
    fs::write(&results_path, text).map_err(|e| e.to_string())?;
    write_jsonl(&label_path, &out.verdicts).map_err(|e| e.to_string())?;
    let count = |l: Label| out.verdicts.iter().filter(|v| v.label == l).count();
    info!(
        "{}/{ngo}: {} verdicts, {} malformed ({} missing)",
        model.model_id,
        out.verdicts.len(),
        out.malformed,
        out.missing
    );
    Ok(Some(json!({
        "n": out.verdicts.len(),
        "yes": count(Label::Yes),
        "no": count(Label::No),
        "malformed": out.malformed,
        "missing": out.missing,
    })))
}

// ---------------------------------------------------------------- analyze

pub fn analyze(ctx: &Ctx, args: &AnalyzeArgs) -> Result<(), Failure> {
    let mut inputs = BTreeMap::new();
    inputs.insert("corpus".to_string(), require(&ctx.corpus_dir(), "extract")?);
    inputs.insert("labels/tree".to_string(), require(&ctx.tree_dir(), "match")?);
    let models: Vec<ModelConfig> = if args.tree_only {
        Vec::new()
    } else {
        if ctx.cfg.models.is_empty() {
            return Err(Failure::Config("no models configured; pass --tree-only".into()));
        }
        for m in &ctx.cfg.models {
            let dir = ctx.labels_dir(&m.model_id);
            if manifest::load(&dir).is_none() {
                return Err(Failure::Prereq(format!(
                    "no labels for {}; run `sacreddetect classify` first or pass --tree-only",
                    m.model_id
                )));
            }
            inputs.insert(format!("labels/{}", model_dir_name(&m.model_id)), require(&dir, "classify")?);
        }
        ctx.cfg.models.clone()
    };
    let terms = if args.terms.is_empty() { ctx.cfg.terms.clone() } else { args.terms.clone() };
    let p = params(&[
        ("tree_only", json!(args.tree_only)),
        ("models", json!(models.iter().map(|m| &m.model_id).collect::<Vec<_>>())),
        ("terms", json!(terms)),
        ("samples", json!(args.samples)),
        ("sources", json!(ctx.cfg.ngo_groups())),
        ("agreement_rule", json!("malformed counts as disagreement in every pair; overall needs all labels valid and equal")),
    ]);
    let dir = ctx.analysis_dir();
    let Some(run) = begin("analyze", &dir, inputs.clone(), p)? else { return Ok(()) };
    clear_files(&dir, &["jsonl", "json"])?;

    let mut corpus = Vec::new();
    let mut tree: Vec<MatchResult> = Vec::new();
    let mut verdicts: Vec<(String, Vec<Verdict>)> = models.iter().map(|m| (m.model_id.clone(), Vec::new())).collect();
    for s in &ctx.cfg.sources {
        corpus.extend(load_corpus(&ctx.corpus_dir(), &s.ngo_id)?);
        tree.extend(read_jsonl::<MatchResult>(&ctx.tree_dir().join(format!("{}.jsonl", s.ngo_id))).map_err(Failure::Other)?);
        for (m, (_, vs)) in models.iter().zip(verdicts.iter_mut()) {
            let path = ctx.labels_dir(&m.model_id).join(format!("{}.jsonl", s.ngo_id));
            vs.extend(read_jsonl::<Verdict>(&path).map_err(Failure::Other)?);
        }
    }
    let matrix = tabulate(&corpus, &ctx.cfg.ngo_groups(), &tree, &verdicts)
        .map_err(|e| Failure::Prereq(format!("{e}; re-run the stage that produced it")))?;
    let mut analysis = compute(&matrix, &terms, args.samples);
    analysis.provenance = inputs;

    let stats = dir.join("stats.json");
    write_json(&stats, &analysis)?;
    let rows = dir.join("matrix.jsonl");
    write_jsonl(&rows, &matrix.rows)?;
    finish(run, &[stats, rows])
}

// ---------------------------------------------------------------- report

pub fn report(ctx: &Ctx) -> Result<(), Failure> {
    let analysis_hash = require(&ctx.analysis_dir(), "analyze")?;
    let dir = ctx.reports_dir();
    let inputs = BTreeMap::from([("analysis".to_string(), analysis_hash)]);
    let p = params(&[("percent_decimals", json!(1)), ("ratio_decimals", json!(2))]);
    let Some(run) = begin("report", &dir, inputs, p)? else { return Ok(()) };
    clear_files(&dir, &["md", "csv", "json"])?;
    clear_files(&dir.join("terms"), &["md"])?;
    let text = fs::read_to_string(ctx.analysis_dir().join("stats.json"))?;
    let analysis: Analysis = serde_json::from_str(&text).map_err(other)?;
    let written = render_reports(&analysis, &dir)?;
    finish(run, &written)
}
