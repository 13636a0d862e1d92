//! Stage orchestration behind the CLI subcommands.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bias::{compute_user_bias, BiasOptions, BiasScore};
use crate::config::{AnalysisConfig, BackendKind};
use crate::gravity::{
    ideological_distance, pull_force, simulate_exit_order, subgroup_centroid, subgroup_mass, user_embedding,
    CachedEmbedder, Embedder, MockEmbedder, RemoteEmbedder, SubgroupModel,
};
use crate::ingest::{
    build_threads, compute_actual_exit_order, extract_all_histories, parse_comments, Comment, ThreadIndex,
};
use crate::metrics::{
    agreement_band, evaluate_subreddit, normalized_mae, quadratic_weighted_kappa, CalibrationSample, Evaluation,
};
use crate::report::{self, BiasRecord, CalibrationReport, Diagnostic, ForceRow};
use crate::scoring::{
    api_key_from_env, MockScorer, RemoteChatBackend, RetryPolicy, ScoreCache, ScoreKind, Scorer, ScoringBackend,
};
use crate::{Error, Result};

/// Parsed and indexed input.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub comments: Vec<Comment>,
    pub index: ThreadIndex,
    pub subreddits: Vec<String>,
    pub malformed: Vec<(PathBuf, usize)>,
    pub dropped: usize,
    pub duplicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubredditSummary {
    pub subreddit: String,
    pub comments: usize,
    pub users: usize,
    pub threads: usize,
    pub orphans: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub comments: usize,
    pub malformed: usize,
    pub dropped: usize,
    pub duplicates: usize,
    pub users: usize,
    pub threads: usize,
    pub orphans: usize,
    pub subreddits: Vec<SubredditSummary>,
}

#[derive(Debug, Clone, Default)]
pub struct BiasStage {
    pub records: Vec<BiasRecord>,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone, Default)]
pub struct ForceStage {
    pub rows: Vec<ForceRow>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Counters reported after `run`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub subreddits: usize,
    pub users: usize,
    pub forces: usize,
    pub scoring_failures: usize,
    pub scoring_calls: usize,
    pub embedding_calls: usize,
}

pub struct Pipeline {
    config: AnalysisConfig,
    scorer: Scorer,
    embedder: Arc<dyn Embedder>,
    pool: rayon::ThreadPool,
}

impl Pipeline {
    /// Builds the configured backends. A remote backend without
    /// `GRAVWELL_API_KEY` fails here rather than on the first call.
    pub fn from_config(config: AnalysisConfig) -> Result<Self> {
        config.validate()?;
        let scoring: Arc<dyn ScoringBackend> = match config.scorer.backend {
            BackendKind::Mock => Arc::new(MockScorer::default()),
            BackendKind::Remote => {
                let settings = config.scorer.remote.as_ref().expect("validated");
                Arc::new(RemoteChatBackend::new(
                    settings,
                    api_key_from_env()?,
                    config.scorer.temperature,
                )?)
            }
        };
        let embedder: Arc<dyn Embedder> = match config.embedder.backend {
            BackendKind::Mock => Arc::new(MockEmbedder::default()),
            BackendKind::Remote => {
                let settings = config.embedder.remote.as_ref().expect("validated");
                Arc::new(RemoteEmbedder::new(settings, api_key_from_env()?)?)
            }
        };
        Self::with_backends(config, scoring, embedder)
    }

    /// Uses the given backends, wrapped in the configured caches.
    pub fn with_backends(
        config: AnalysisConfig,
        scoring: Arc<dyn ScoringBackend>,
        embedder: Arc<dyn Embedder>,
    ) -> Result<Self> {
        config.validate()?;
        let cache = match &config.score_cache {
            Some(p) => ScoreCache::open(p)?,
            None => ScoreCache::in_memory(),
        };
        let policy = RetryPolicy {
            max_retries: config.scorer.max_retries,
            base_delay: Duration::from_millis(config.scorer.retry_base_ms),
            ..RetryPolicy::default()
        };
        let embedder: Arc<dyn Embedder> = match &config.embedding_cache {
            Some(p) => Arc::new(CachedEmbedder::open(embedder, p)?),
            None => Arc::new(CachedEmbedder::in_memory(embedder)),
        };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.scorer.max_in_flight)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        Ok(Pipeline {
            scorer: Scorer::new(scoring, Arc::new(cache), policy),
            embedder,
            pool,
            config,
        })
    }

    pub fn config(&self) -> &AnalysisConfig {
        &self.config
    }

    pub fn scorer(&self) -> &Scorer {
        &self.scorer
    }

    pub fn load_corpus(&self) -> Result<Corpus> {
        if self.config.inputs.is_empty() {
            return Err(Error::Config("no input files given".into()));
        }
        let mut comments = Vec::new();
        let mut seen = HashSet::new();
        let mut malformed = Vec::new();
        let (mut dropped, mut duplicates) = (0, 0);
        for path in &self.config.inputs {
            let file = File::open(path).map_err(|e| Error::file(path, e))?;
            let parsed = parse_comments(BufReader::new(file))?;
            info!(
                "{}: {} comments, {} malformed lines",
                path.display(),
                parsed.comments.len(),
                parsed.malformed
            );
            malformed.push((path.clone(), parsed.malformed));
            dropped += parsed.dropped;
            duplicates += parsed.duplicates;
            for c in parsed.comments {
                if seen.insert(c.id.clone()) {
                    comments.push(c);
                } else {
                    duplicates += 1;
                }
            }
        }
        let index = build_threads(&comments)?;
        let subreddits = if self.config.subreddits.is_empty() {
            comments
                .iter()
                .map(|c| c.subreddit.clone())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect()
        } else {
            self.config.subreddits.clone()
        };
        Ok(Corpus {
            comments,
            index,
            subreddits,
            malformed,
            dropped,
            duplicates,
        })
    }

    pub fn summarize(&self, corpus: &Corpus) -> CorpusSummary {
        let subreddits = corpus
            .subreddits
            .iter()
            .map(|s| {
                let in_sub: Vec<&Comment> = corpus.comments.iter().filter(|c| &c.subreddit == s).collect();
                SubredditSummary {
                    subreddit: s.clone(),
                    comments: in_sub.len(),
                    users: in_sub.iter().map(|c| c.author.as_str()).collect::<BTreeSet<_>>().len(),
                    threads: in_sub
                        .iter()
                        .map(|c| c.thread_id.as_str())
                        .collect::<BTreeSet<_>>()
                        .len(),
                    orphans: in_sub.iter().filter(|c| corpus.index.is_orphan(&c.id)).count(),
                }
            })
            .collect();
        CorpusSummary {
            comments: corpus.comments.len(),
            malformed: corpus.malformed.iter().map(|(_, n)| n).sum(),
            dropped: corpus.dropped,
            duplicates: corpus.duplicates,
            users: corpus
                .comments
                .iter()
                .map(|c| c.author.as_str())
                .collect::<BTreeSet<_>>()
                .len(),
            threads: corpus.index.thread_count(),
            orphans: corpus.index.orphans().count(),
            subreddits,
        }
    }

    fn bias_for(
        &self,
        corpus: &Corpus,
        subreddit: &str,
    ) -> Result<Vec<(BiasScore, Vec<Diagnostic>, crate::ingest::UserHistory)>> {
        let histories: Vec<_> = extract_all_histories(subreddit, &corpus.index, self.config.max_ancestors)
            .into_values()
            .collect();
        let options = BiasOptions {
            pair_cap: self.config.pair_cap,
            seed: self.config.seed,
        };
        self.pool.install(|| {
            histories
                .par_iter()
                .map(|h| {
                    let out = compute_user_bias(h, &self.scorer, &options)?;
                    let diags = out
                        .failures
                        .into_iter()
                        .map(|f| Diagnostic::ScoringFailure {
                            subreddit: subreddit.to_string(),
                            user: h.user.clone(),
                            kind: f.kind,
                            entries: f.entries,
                            message: f.message,
                        })
                        .collect();
                    Ok((out.score, diags, out.history))
                })
                .collect()
        })
    }

    /// Bias records for every author of every selected subreddit.
    pub fn bias_stage(
        &self,
        corpus: &Corpus,
    ) -> Result<(BiasStage, BTreeMap<String, Vec<crate::ingest::UserHistory>>)> {
        let mut stage = BiasStage::default();
        let mut histories = BTreeMap::new();
        for sub in &corpus.subreddits {
            let mut hs = Vec::new();
            for (score, diags, history) in self.bias_for(corpus, sub)? {
                stage.records.push(BiasRecord {
                    failures: diags.len(),
                    user: score.user,
                    subreddit: score.subreddit,
                    n: score.n,
                    pair_count: score.pair_count,
                    m_unweighted: score.m_unweighted,
                    m_a: score.m_a,
                });
                stage.diagnostics.extend(diags);
                hs.push(history);
            }
            histories.insert(sub.clone(), hs);
        }
        Ok((stage, histories))
    }

    pub fn subgroup_model(&self, corpus: &Corpus, subreddit: &str) -> Result<SubgroupModel> {
        let in_sub: Vec<Comment> = corpus
            .comments
            .iter()
            .filter(|c| c.subreddit == subreddit)
            .cloned()
            .collect();
        let mass = subgroup_mass(&in_sub, subreddit)?;
        let centroid = subgroup_centroid(&in_sub, self.config.top_k, self.embedder.as_ref())?;
        let (tm, tsm) = self.config.modifiers_for(subreddit);
        SubgroupModel::new(subreddit, mass, centroid, tm, tsm, self.config.top_k)
    }

    /// Pull forces and predicted exit ranks, given bias records and the
    /// matching histories.
    pub fn force_stage(
        &self,
        corpus: &Corpus,
        bias: &BiasStage,
        histories: &BTreeMap<String, Vec<crate::ingest::UserHistory>>,
    ) -> Result<ForceStage> {
        let m_a: BTreeMap<(&str, &str), f64> = bias
            .records
            .iter()
            .map(|r| ((r.subreddit.as_str(), r.user.as_str()), r.m_a))
            .collect();
        let mut stage = ForceStage::default();
        for sub in &corpus.subreddits {
            let model = match self.subgroup_model(corpus, sub) {
                Ok(m) => m,
                Err(Error::Analysis(reason)) => {
                    stage.diagnostics.push(Diagnostic::SubredditSkipped {
                        subreddit: sub.clone(),
                        reason,
                    });
                    continue;
                }
                Err(e) => return Err(e),
            };
            let users = histories.get(sub).map(Vec::as_slice).unwrap_or(&[]);
            let results: Vec<Result<(String, f64, f64)>> = self.pool.install(|| {
                users
                    .par_iter()
                    .map(|h| {
                        let u = user_embedding(h, self.embedder.as_ref())?;
                        let d = ideological_distance(&u, &model.centroid)?;
                        let m = m_a.get(&(sub.as_str(), h.user.as_str())).copied().unwrap_or(1.0);
                        Ok((h.user.clone(), m, d))
                    })
                    .collect()
            });
            let mut forces = Vec::new();
            for (h, r) in users.iter().zip(results) {
                match r {
                    Ok((user, m, d)) => forces.push(pull_force(&model, &user, m, d)?),
                    Err(Error::Analysis(reason)) => stage.diagnostics.push(Diagnostic::UserSkipped {
                        subreddit: sub.clone(),
                        user: h.user.clone(),
                        reason,
                    }),
                    Err(e) => return Err(e),
                }
            }
            let ranks = simulate_exit_order(&forces, self.config.exit_direction);
            stage.rows.extend(forces.into_iter().map(|f| ForceRow {
                predicted_rank: ranks[&f.user],
                user: f.user,
                subreddit: f.subreddit,
                m_a: f.m_user,
                d: f.d,
                f_w: f.f_w,
            }));
        }
        Ok(stage)
    }

    /// Compares predicted ranks from `rows` with observed exit order.
    pub fn evaluation_stage(&self, corpus: &Corpus, rows: &[ForceRow]) -> (Vec<Evaluation>, Vec<Diagnostic>) {
        let mut evals = Vec::new();
        let mut diags = Vec::new();
        for sub in &corpus.subreddits {
            let predicted: BTreeMap<String, f64> = rows
                .iter()
                .filter(|r| &r.subreddit == sub)
                .map(|r| (r.user.clone(), r.predicted_rank))
                .collect();
            let actual: BTreeMap<String, f64> = compute_actual_exit_order(&corpus.comments, sub)
                .into_iter()
                .map(|r| (r.user, r.actual_rank))
                .collect();
            let e = evaluate_subreddit(sub, &predicted, &actual);
            if e.is_insufficient() {
                diags.push(Diagnostic::InsufficientData {
                    subreddit: sub.clone(),
                    n_common: e.n_common,
                });
            }
            evals.push(e);
        }
        (evals, diags)
    }

    fn corpus_diagnostics(corpus: &Corpus) -> Vec<Diagnostic> {
        corpus
            .malformed
            .iter()
            .filter(|(_, n)| *n > 0)
            .map(|(p, n)| Diagnostic::MalformedLines {
                input: p.display().to_string(),
                count: *n,
            })
            .collect()
    }

    pub fn cmd_ingest(&self, out: &Path) -> Result<CorpusSummary> {
        let corpus = self.load_corpus()?;
        let summary = self.summarize(&corpus);
        report::write_json(&out.join(report::CORPUS_SUMMARY_FILE), &summary)?;
        Ok(summary)
    }

    pub fn cmd_bias(&self, out: &Path) -> Result<BiasStage> {
        let corpus = self.load_corpus()?;
        let (mut stage, _) = self.bias_stage(&corpus)?;
        report::write_bias_report(&out.join(report::BIAS_FILE), &stage.records)?;
        let mut diags = Self::corpus_diagnostics(&corpus);
        diags.append(&mut stage.diagnostics);
        report::write_jsonl(&out.join(report::DIAGNOSTICS_FILE), &diags)?;
        stage.diagnostics = diags;
        Ok(stage)
    }

    pub fn cmd_simulate(&self, out: &Path) -> Result<ForceStage> {
        let corpus = self.load_corpus()?;
        let (bias, histories) = self.bias_stage(&corpus)?;
        let mut forces = self.force_stage(&corpus, &bias, &histories)?;
        report::write_bias_report(&out.join(report::BIAS_FILE), &bias.records)?;
        report::write_force_table(&out.join(report::FORCES_FILE), &forces.rows)?;
        let mut diags = Self::corpus_diagnostics(&corpus);
        diags.extend(bias.diagnostics);
        diags.append(&mut forces.diagnostics);
        report::write_jsonl(&out.join(report::DIAGNOSTICS_FILE), &diags)?;
        forces.diagnostics = diags;
        Ok(forces)
    }

    /// Evaluates an existing force table if given, otherwise computes one.
    pub fn cmd_evaluate(&self, out: &Path, forces: Option<&Path>) -> Result<Vec<Evaluation>> {
        let corpus = self.load_corpus()?;
        let rows = match forces {
            Some(p) => report::read_force_table(p)?,
            None => {
                let (bias, histories) = self.bias_stage(&corpus)?;
                self.force_stage(&corpus, &bias, &histories)?.rows
            }
        };
        let (evals, _) = self.evaluation_stage(&corpus, &rows);
        report::write_evaluation(&out.join(report::EVALUATION_FILE), &evals)?;
        Ok(evals)
    }

    /// Full pipeline: bias report, force table, evaluation and diagnostics.
    pub fn cmd_run(&self, out: &Path) -> Result<RunSummary> {
        let scoring_before = self.scorer.backend().calls();
        let embedding_before = self.embedder.calls();
        let corpus = self.load_corpus()?;
        let (bias, histories) = self.bias_stage(&corpus)?;
        let forces = self.force_stage(&corpus, &bias, &histories)?;
        let (evals, eval_diags) = self.evaluation_stage(&corpus, &forces.rows);

        report::write_bias_report(&out.join(report::BIAS_FILE), &bias.records)?;
        report::write_force_table(&out.join(report::FORCES_FILE), &forces.rows)?;
        report::write_evaluation(&out.join(report::EVALUATION_FILE), &evals)?;
        let mut diags = Self::corpus_diagnostics(&corpus);
        diags.extend(bias.diagnostics.iter().cloned());
        diags.extend(forces.diagnostics.iter().cloned());
        diags.extend(eval_diags);
        report::write_jsonl(&out.join(report::DIAGNOSTICS_FILE), &diags)?;

        Ok(RunSummary {
            subreddits: corpus.subreddits.len(),
            users: bias.records.len(),
            forces: forces.rows.len(),
            scoring_failures: bias.diagnostics.len(),
            scoring_calls: self.scorer.backend().calls() - scoring_before,
            embedding_calls: self.embedder.calls() - embedding_before,
        })
    }
}

/// QWK and NMAE per kind from a JSON Lines file of labelled samples.
pub fn cmd_calibrate(labels: &Path, out: &Path) -> Result<Vec<CalibrationReport>> {
    let samples: Vec<CalibrationSample> = report::read_jsonl(labels)?;
    if samples.is_empty() {
        return Err(Error::Analysis(format!("{}: no calibration samples", labels.display())));
    }
    let mut reports = Vec::new();
    for kind in [ScoreKind::Support, ScoreKind::Alignment] {
        let of_kind: Vec<CalibrationSample> = samples.iter().filter(|s| s.kind == kind).copied().collect();
        if of_kind.is_empty() {
            continue;
        }
        let qwk = quadratic_weighted_kappa(&of_kind)?;
        reports.push(CalibrationReport {
            kind,
            n: of_kind.len(),
            qwk,
            nmae: normalized_mae(&of_kind)?,
            agreement: agreement_band(qwk).to_string(),
        });
    }
    report::write_json(&out.join(report::CALIBRATION_FILE), &reports)?;
    Ok(reports)
}
