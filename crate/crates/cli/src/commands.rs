//! Subcommand implementations. Each takes the layered [`AppConfig`] plus its
//! parsed flags and returns an error for the caller to print.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use bestanswer::dataset::{self, FeatureCase};
use bestanswer::discretise::learn_directions;
use bestanswer::eval::{case_report_csv, evaluate_cases, CaseReport};
use bestanswer::features::Feature;
use bestanswer::ingest::{
    self, build_corpus, corpus_stats, parse_posts, parse_users, BuildOptions, CorpusMeta,
    CorpusStats, MarkupOptions, SiteCorpus, CORPUS_FORMAT_VERSION,
};
use bestanswer::model::{train, TrainedModel};
use bestanswer::predict::{handle_predict, verify_background, PredictRequest};
use bestanswer::report::{export_drift_csv, monthly_drift, site_summary, SiteSummary};
use bestanswer::textfeat::BackgroundModel;

use crate::config::AppConfig;
use crate::server::{LoadedModel, ServiceState};
use crate::{
    DriftArgs, EvaluateArgs, FeaturesArgs, IngestArgs, PredictArgs, ServeArgs, StatsArgs,
    TrainArgs,
};

fn load_corpus(path: &Path) -> Result<(SiteCorpus, CorpusMeta)> {
    let file =
        File::open(path).with_context(|| format!("opening corpus {}", path.display()))?;
    Ok(ingest::read_corpus(BufReader::new(file))?)
}

/// Feature cases that rank anything need a direction profile learned from
/// the labeled corpus.
fn corpus_artifacts(
    corpus: &SiteCorpus,
    alpha: f64,
) -> Result<(
    BackgroundModel<f64>,
    bestanswer::DirectionProfile,
)> {
    let tc = dataset::TokenizedCorpus::new(corpus);
    let bg = BackgroundModel::build(tc.tokens.iter().flatten(), alpha);
    let table = dataset::raw_features(&tc, &bg, None);
    let rankable: Vec<Feature> = Feature::ALL
        .into_iter()
        .filter(|f| f.is_rankable())
        .collect();
    let profile = learn_directions(&rankable, &table.labeled_rows(&rankable))?;
    Ok((bg, profile))
}

fn require_case_inputs(case: FeatureCase, meta: &CorpusMeta) -> Result<()> {
    if case.needs_reputation() && !meta.has_reputations {
        bail!(
            "{case} uses owner reputation, but corpus {:?} was built without Users.xml; \
             re-run `ingest` with --users",
            meta.site_name
        );
    }
    Ok(())
}

fn parse_case(index: u8) -> Result<FeatureCase> {
    FeatureCase::from_index(index)
        .with_context(|| format!("case must be between 1 and 6, got {index}"))
}

pub fn cmd_ingest(config: &AppConfig, args: &IngestArgs) -> Result<()> {
    let started = Instant::now();
    let options = BuildOptions {
        min_answers: args.min_answers.unwrap_or(config.min_answers),
        resolved_only: !args.include_unresolved && config.resolved_only,
        markup: MarkupOptions {
            keep_code: args.keep_code || config.keep_code,
        },
    };
    let users_path = args.users.clone().or_else(|| config.users_xml.clone());
    let users = match &users_path {
        Some(path) => {
            let file = File::open(path)
                .with_context(|| format!("opening users file {}", path.display()))?;
            parse_users(BufReader::new(file))?
        }
        None => HashMap::new(),
    };
    let posts_path = args
        .posts
        .clone()
        .or_else(|| config.posts_xml.clone())
        .context("no Posts.xml given: pass --posts or set posts_xml in the config")?;
    let posts = File::open(&posts_path)
        .with_context(|| format!("opening posts file {}", posts_path.display()))?;
    let outcome = build_corpus(
        parse_posts(BufReader::new(posts)),
        &users,
        &args.site,
        &options,
    )?;

    let meta = CorpusMeta {
        format_version: CORPUS_FORMAT_VERSION,
        site_name: args.site.clone(),
        has_reputations: users_path.is_some(),
        options,
        counts: outcome.counts.clone(),
    };
    let out = File::create(&args.out)
        .with_context(|| format!("creating corpus {}", args.out.display()))?;
    ingest::write_corpus(BufWriter::new(out), &outcome.corpus, &meta)?;
    eprintln!(
        "ingested {} threads / {} answers (of {} questions, {} answers seen; resolved {:.1}%) in {:?}",
        outcome.corpus.threads.len(),
        outcome.corpus.total_answers(),
        outcome.counts.questions_seen,
        outcome.counts.answers_seen,
        100.0 * outcome.counts.resolved_fraction(),
        started.elapsed()
    );
    println!("{}", args.out.display());
    Ok(())
}

#[derive(Serialize)]
struct SiteReport {
    stats: CorpusStats,
    feature_means: Option<SiteSummary<f64>>,
}

pub fn cmd_stats(config: &AppConfig, args: &StatsArgs) -> Result<()> {
    let mut sites = Vec::new();
    for path in &args.corpus {
        let (corpus, meta) = load_corpus(path)?;
        let stats = corpus_stats(&corpus, Some(&meta.counts));
        let feature_means = site_summary(std::slice::from_ref(&corpus), config.alpha)
            .into_iter()
            .next();
        sites.push(SiteReport {
            stats,
            feature_means,
        });
    }
    println!("{}", serde_json::to_string_pretty(&sites)?);
    Ok(())
}

pub fn cmd_features(config: &AppConfig, args: &FeaturesArgs) -> Result<()> {
    let case = parse_case(args.case.unwrap_or(config.case))?;
    let (corpus, meta) = load_corpus(&args.corpus)?;
    require_case_inputs(case, &meta)?;
    let (bg, profile) = corpus_artifacts(&corpus, config.alpha)?;
    let ds = dataset::assemble(&corpus, case, &bg, Some(&profile))?;
    let out = File::create(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    dataset::write_dataset_csv(BufWriter::new(out), &ds)?;
    eprintln!("wrote {} rows for {case}", ds.rows.len());
    println!("{}", args.out.display());
    Ok(())
}

pub fn cmd_train(config: &AppConfig, args: &TrainArgs) -> Result<()> {
    let case = parse_case(args.case.unwrap_or(config.case))?;
    let (corpus, meta) = load_corpus(&args.corpus)?;
    require_case_inputs(case, &meta)?;

    let mut classifier = config.classifier_config()?;
    if let Some(kind) = &args.classifier {
        classifier.kind = match kind.as_str() {
            "tree" => bestanswer::model::ClassifierKind::DecisionTree,
            "logistic" => bestanswer::model::ClassifierKind::Logistic,
            other => bail!("unknown classifier {other:?}"),
        };
    }
    if let Some(seed) = args.seed {
        classifier.seed = seed;
    }

    let (bg, profile) = corpus_artifacts(&corpus, config.alpha)?;
    let ds = dataset::assemble(&corpus, case, &bg, Some(&profile))?;
    let model = train(
        &ds,
        &classifier,
        &profile,
        &bg.digest(),
        meta.options.markup.keep_code,
    )?;

    std::fs::write(&args.out, model.save())
        .with_context(|| format!("writing model {}", args.out.display()))?;
    let bg_path = args
        .bg_out
        .clone()
        .unwrap_or_else(|| args.out.with_extension("background.json"));
    std::fs::write(&bg_path, serde_json::to_vec(&bg)?)
        .with_context(|| format!("writing background model {}", bg_path.display()))?;
    eprintln!(
        "trained {case} on {} rows; model digest {}",
        ds.rows.len(),
        model.digest()
    );
    println!("{}", args.out.display());
    println!("{}", bg_path.display());
    Ok(())
}

pub fn cmd_evaluate(config: &AppConfig, args: &EvaluateArgs) -> Result<()> {
    let cases: Vec<FeatureCase> = if args.all_cases {
        FeatureCase::ALL.to_vec()
    } else {
        vec![parse_case(args.case.unwrap_or(config.case))?]
    };
    let (corpus, meta) = load_corpus(&args.corpus)?;
    for &case in &cases {
        require_case_inputs(case, &meta)?;
    }
    let classifier = config.classifier_config()?;
    let k = args.k.unwrap_or(config.k);
    let seed = args.seed.unwrap_or(config.seed);

    let started = Instant::now();
    let reports: Vec<CaseReport<f64>> =
        evaluate_cases(&corpus, &cases, k, &classifier, seed, config.alpha)?;
    eprintln!("evaluated {} case(s) in {:?}", cases.len(), started.elapsed());

    let out_dir = args
        .out_dir
        .clone()
        .unwrap_or_else(|| config.workdir.join("reports"));
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    for report in &reports {
        let base = out_dir.join(format!("report_case{}", report.case.index()));
        std::fs::write(base.with_extension("json"), serde_json::to_vec_pretty(report)?)?;
        std::fs::write(base.with_extension("csv"), case_report_csv(report))?;
        println!(
            "case {}: precision {:.4} recall {:.4} f {:.4} auc {:.4}",
            report.case.index(),
            report.mean.precision,
            report.mean.recall,
            report.mean.f_measure,
            report.mean.auc
        );
    }
    Ok(())
}

pub fn cmd_drift(config: &AppConfig, args: &DriftArgs) -> Result<()> {
    let (corpus, _) = load_corpus(&args.corpus)?;
    let tc = dataset::TokenizedCorpus::new(&corpus);
    let bg: BackgroundModel<f64> = BackgroundModel::build(tc.tokens.iter().flatten(), config.alpha);
    let points = monthly_drift(&corpus, &bg);
    let out_path = args.out.clone().unwrap_or_else(|| {
        let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ");
        config
            .workdir
            .join(format!("drift_{}_{stamp}.csv", corpus.site_name))
    });
    let out = File::create(&out_path)
        .with_context(|| format!("creating {}", out_path.display()))?;
    export_drift_csv(BufWriter::new(out), &points, args.std)?;
    eprintln!("wrote {} monthly points", points.len());
    println!("{}", out_path.display());
    Ok(())
}

fn load_model_pair(model_path: &Path, bg_path: &Path) -> Result<LoadedModel> {
    let bytes = std::fs::read(model_path)
        .with_context(|| format!("reading model {}", model_path.display()))?;
    let model = TrainedModel::load(&bytes)?;
    let bg_bytes = std::fs::read(bg_path)
        .with_context(|| format!("reading background model {}", bg_path.display()))?;
    let background: BackgroundModel<f64> =
        serde_json::from_slice(&bg_bytes).context("parsing background model")?;
    verify_background(&model, &background)?;
    let digest = model.digest();
    Ok(LoadedModel {
        model,
        background,
        digest,
    })
}

pub fn cmd_predict(config: &AppConfig, args: &PredictArgs) -> Result<()> {
    let loaded = load_model_pair(&args.model, &args.bg)?;
    let text = std::fs::read_to_string(&args.request)
        .with_context(|| format!("reading request {}", args.request.display()))?;
    let request: PredictRequest = serde_json::from_str(&text).context("parsing request")?;
    let response = handle_predict(
        &request,
        &loaded.model,
        &loaded.background,
        config.body_limit,
    )?;
    let body = serde_json::to_string_pretty(&response)?;
    match &args.out {
        Some(path) => {
            let mut out =
                File::create(path).with_context(|| format!("creating {}", path.display()))?;
            writeln!(out, "{body}")?;
            println!("{}", path.display());
        }
        None => println!("{body}"),
    }
    Ok(())
}

pub fn cmd_serve(config: &AppConfig, args: &ServeArgs) -> Result<()> {
    let loaded = match (&args.model, &args.bg) {
        (Some(model), Some(bg)) => Some(load_model_pair(model, bg)?),
        (None, None) => {
            eprintln!("starting without a model; /health reports degraded");
            None
        }
        _ => bail!("--model and --bg must be given together"),
    };
    let state = Arc::new(ServiceState {
        loaded,
        started: Instant::now(),
        body_limit: config.body_limit,
    });
    let addr = args.addr.clone().unwrap_or_else(|| config.addr.clone());
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?;
    runtime.block_on(crate::server::serve(&addr, state))
}
