//! The `link`, `complete` and `evaluate` commands as library functions
//! returning serialisable reports.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use itertools::Itertools;
use rayon::prelude::*;
use rowcomp_core::clients::{
    HashingSentenceEncoder, MockGenerator, MockSearch, SearchEngine, Services, TextGenerator,
};
use rowcomp_core::embed::{EmbeddingIndex, HashedNgramEmbedder, LabelEmbedder, Metric};
use rowcomp_core::gapfill::{GapFill, GapFillConfig, GapFiller, Provenance};
use rowcomp_core::interpret::{link_cell, link_table, LinkConfig, LinkedTable, Table};
use rowcomp_core::kb::{EntityId, KnowledgeBase};
use rowcomp_core::metrics::{average_precision, fill_precision_recall_at_k, mean, population_stddev};
use rowcomp_core::suggest::{suggest_subjects, SourceRecall, SuggestConfig, SuggestModels};
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::formats::{load_embeddings, load_kb, load_mock_clients, load_table, load_truth, load_word_vectors};
use crate::http::{HttpGenerator, HttpSearch};

/// Models and clients loaded once per invocation.
pub struct Resources {
    pub kb: KnowledgeBase,
    pub idx: EmbeddingIndex,
    pub labels: Box<dyn LabelEmbedder>,
    pub generator: Box<dyn TextGenerator>,
    pub search: Box<dyn SearchEngine>,
    pub encoder: HashingSentenceEncoder,
}

impl Resources {
    /// Loads the KB, embeddings and label vectors named by `cfg`. Clients
    /// are only built when `with_clients` is set; otherwise empty mocks
    /// stand in.
    pub fn load(cfg: &PipelineConfig, with_clients: bool) -> Result<Self> {
        let kb_path = cfg.kb.as_ref().ok_or_else(|| anyhow!("no knowledge base given (--kb)"))?;
        let kb = load_kb(kb_path)?;
        let idx = match &cfg.embeddings {
            Some(p) => load_embeddings(p)?,
            None => EmbeddingIndex::empty(1, Metric::Cosine),
        };
        let labels: Box<dyn LabelEmbedder> = match &cfg.label_vectors {
            Some(p) => Box::new(load_word_vectors(p)?),
            None => Box::new(HashedNgramEmbedder::default()),
        };
        let (generator, search): (Box<dyn TextGenerator>, Box<dyn SearchEngine>) = if !with_clients {
            (Box::new(MockGenerator::default()), Box::new(MockSearch::default()))
        } else if let Some(path) = cfg.clients.strip_prefix("mock:") {
            let (g, s) = load_mock_clients(Path::new(path))?;
            (Box::new(g), Box::new(s))
        } else {
            (Box::new(HttpGenerator::from_env()?), Box::new(HttpSearch::from_env()?))
        };
        Ok(Self {
            kb,
            idx,
            labels,
            generator,
            search,
            encoder: HashingSentenceEncoder::default(),
        })
    }

    fn index(&self) -> Option<&EmbeddingIndex> {
        (!self.idx.is_empty()).then_some(&self.idx)
    }

    fn services(&self) -> Services<'_> {
        Services {
            generator: &*self.generator,
            search: &*self.search,
            encoder: &self.encoder,
        }
    }

    fn models(&self) -> SuggestModels<'_> {
        SuggestModels {
            kb: &self.kb,
            idx: &self.idx,
            labels: &*self.labels,
            generator: &*self.generator,
        }
    }
}

/// Per-stage wall-clock times, written to stderr when enabled.
pub struct Timer {
    enabled: bool,
    last: Instant,
}

impl Timer {
    pub fn new(enabled: bool) -> Self {
        Self { enabled, last: Instant::now() }
    }

    pub fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        if self.enabled {
            eprintln!("{stage}: {:.3} s", (now - self.last).as_secs_f64());
        }
        self.last = now;
    }
}

/// Parsed stage configurations.
pub struct Stages {
    pub link: LinkConfig,
    pub suggest: SuggestConfig,
    pub gapfill: GapFillConfig,
}

impl Stages {
    pub fn from_config(cfg: &PipelineConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            link: cfg.link_config()?,
            suggest: cfg.suggest_config()?,
            gapfill: cfg.gapfill_config()?,
        })
    }
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MainCell {
    pub row: usize,
    pub cell: String,
    pub entity: Option<String>,
    pub label: Option<String>,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ColumnLink {
    pub column: usize,
    pub property: Option<String>,
    pub label: Option<String>,
    pub failure: Option<String>,
    pub reason: Option<String>,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LinkReport {
    pub rows: usize,
    pub columns: usize,
    pub main_column: Vec<MainCell>,
    pub column_links: Vec<ColumnLink>,
}

impl LinkReport {
    pub fn new(kb: &KnowledgeBase, linked: &LinkedTable) -> Self {
        let main_column = linked
            .main_column
            .iter()
            .enumerate()
            .map(|(row, e)| MainCell {
                row,
                cell: linked.table.cell(row, 0).to_string(),
                entity: e.as_ref().map(|e| e.as_str().to_string()),
                label: e.as_ref().map(|e| kb.label(e).to_string()),
            })
            .collect();
        let column_links = (1..linked.n_cols())
            .map(|column| {
                let p = linked.property(column);
                let failure = linked.link_failures.get(&column);
                ColumnLink {
                    column,
                    property: p.map(|p| p.as_str().to_string()),
                    label: p.map(|p| kb.property_label(p).to_string()),
                    failure: failure.map(|f| f.kind().to_string()),
                    reason: failure.map(|f| f.to_string()),
                }
            })
            .collect();
        Self {
            rows: linked.n_rows(),
            columns: linked.n_cols(),
            main_column,
            column_links,
        }
    }
}

pub fn cmd_link(res: &Resources, stages: &Stages, table: &Table) -> LinkReport {
    let linked = link_table(&res.kb, res.index(), table, &stages.link);
    LinkReport::new(&res.kb, &linked)
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SuggestionOut {
    pub rank: usize,
    pub entity: String,
    pub label: String,
    pub score: f64,
    pub source: String,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FillOut {
    pub value: String,
    pub provenance_kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub triple_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snippet: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub similarity: Option<f64>,
    pub numeric_warning: bool,
}

impl From<&GapFill> for FillOut {
    fn from(f: &GapFill) -> Self {
        let mut out = FillOut {
            value: f.value.clone(),
            provenance_kind: f.provenance.kind().to_string(),
            triple_id: None,
            url: None,
            snippet: None,
            similarity: None,
            numeric_warning: f.numeric_warning,
        };
        match &f.provenance {
            Provenance::KbTriple(t) => out.triple_id = Some(format!("{}|{}", t.subject, t.property)),
            Provenance::WebSnippet { snippet, similarity } => {
                out.url = Some(snippet.url.clone());
                out.snippet = Some(snippet.description.clone());
                out.similarity = Some(*similarity);
            }
        }
        out
    }
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CellOut {
    pub column: usize,
    pub fills: Vec<FillOut>,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RowOut {
    pub row: usize,
    pub entity: String,
    pub label: String,
    pub cells: Vec<CellOut>,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CompletionReport {
    pub seed_rows: usize,
    pub link: LinkReport,
    pub suggestions: Vec<SuggestionOut>,
    pub rows: Vec<RowOut>,
}

/// Links the top `seed_rows` rows, suggests up to `suggestions` new
/// subjects and gap-fills a row for each.
pub fn cmd_complete(
    res: &Resources,
    stages: &Stages,
    table: &Table,
    seed_rows: usize,
    suggestions: usize,
    timer: &mut Timer,
) -> Result<CompletionReport> {
    let rows: Vec<usize> = (0..seed_rows.min(table.n_rows())).collect();
    let seeds = table.select_rows(&rows).context("selecting seed rows")?;
    let linked = link_table(&res.kb, res.index(), &seeds, &stages.link);
    timer.lap("link");
    let ranked = if suggestions == 0 {
        Vec::new()
    } else {
        let mut s = suggest_subjects(res.models(), &linked, &stages.suggest).context("suggest stage")?;
        s.ranked.truncate(suggestions);
        s.ranked
    };
    timer.lap("suggest");
    let filler = GapFiller::new(&res.kb, &linked, res.services(), &stages.gapfill);
    let mut out_rows = Vec::with_capacity(ranked.len());
    for (rank, s) in ranked.iter().enumerate() {
        let cells = filler
            .complete_row(&s.entity)
            .with_context(|| format!("gap-fill stage for {}", s.entity))?;
        out_rows.push(RowOut {
            row: rows.len() + rank,
            entity: s.entity.as_str().to_string(),
            label: res.kb.label(&s.entity).to_string(),
            cells: cells
                .iter()
                .map(|(column, fills)| CellOut {
                    column: *column,
                    fills: fills.iter().map(FillOut::from).collect(),
                })
                .collect(),
        });
    }
    timer.lap("gap-fill");
    Ok(CompletionReport {
        seed_rows: rows.len(),
        link: LinkReport::new(&res.kb, &linked),
        suggestions: ranked
            .iter()
            .enumerate()
            .map(|(i, s)| SuggestionOut {
                rank: i + 1,
                entity: s.entity.as_str().to_string(),
                label: res.kb.label(&s.entity).to_string(),
                score: s.score,
                source: s.source.name().to_string(),
            })
            .collect(),
        rows: out_rows,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct RecallOut {
    pub embedding: f64,
    pub lm: f64,
    pub combined: f64,
}

impl From<SourceRecall> for RecallOut {
    fn from(r: SourceRecall) -> Self {
        Self {
            embedding: r.embedding,
            lm: r.lm,
            combined: r.combined,
        }
    }
}

/// Metrics of one seed selection of one table.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MetricSet {
    pub recall_at_50: RecallOut,
    pub recall_at_1000: RecallOut,
    pub average_precision: f64,
    pub fill_precision_at_1: f64,
    pub fill_recall_at_1: f64,
    pub fill_precision_at_3: f64,
}

const METRIC_COUNT: usize = 10;

impl MetricSet {
    fn to_array(self) -> [f64; METRIC_COUNT] {
        let (a, b) = (self.recall_at_50, self.recall_at_1000);
        [
            a.embedding,
            a.lm,
            a.combined,
            b.embedding,
            b.lm,
            b.combined,
            self.average_precision,
            self.fill_precision_at_1,
            self.fill_recall_at_1,
            self.fill_precision_at_3,
        ]
    }

    fn from_array(v: [f64; METRIC_COUNT]) -> Self {
        Self {
            recall_at_50: RecallOut { embedding: v[0], lm: v[1], combined: v[2] },
            recall_at_1000: RecallOut { embedding: v[3], lm: v[4], combined: v[5] },
            average_precision: v[6],
            fill_precision_at_1: v[7],
            fill_recall_at_1: v[8],
            fill_precision_at_3: v[9],
        }
    }

    fn aggregate(sets: &[MetricSet], f: impl Fn(&[f64]) -> f64) -> Self {
        let arrays: Vec<_> = sets.iter().map(|s| s.to_array()).collect();
        let mut out = [0.0; METRIC_COUNT];
        for (i, slot) in out.iter_mut().enumerate() {
            let column: Vec<f64> = arrays.iter().map(|a| a[i]).collect();
            *slot = f(&column);
        }
        Self::from_array(out)
    }

    pub fn mean(sets: &[MetricSet]) -> Self {
        Self::aggregate(sets, |xs| mean(xs.iter().copied()))
    }

    pub fn stddev(sets: &[MetricSet]) -> Self {
        Self::aggregate(sets, population_stddev)
    }
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TableReport {
    pub name: String,
    pub seed_rows: usize,
    pub runs: usize,
    pub truth_subjects: usize,
    pub metrics: MetricSet,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stddev: Option<MetricSet>,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Skipped {
    pub name: String,
    pub reason: String,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EvaluationReport {
    pub table_count: usize,
    pub tables: Vec<TableReport>,
    pub skipped: Vec<Skipped>,
    /// Mean over tables; its average precision is the MAP.
    pub macro_average: Option<MetricSet>,
}

/// Scores one seed selection: suggestions against the held-out subjects
/// and cell fills of the held-out rows against their cells.
pub fn evaluate_run(
    res: &Resources,
    stages: &Stages,
    table: &Table,
    seed_rows: &[usize],
    truth: &rowcomp_core::metrics::GroundTruth,
) -> Result<(MetricSet, usize)> {
    let seeds = table.select_rows(seed_rows).context("selecting seed rows")?;
    let linked = link_table(&res.kb, res.index(), &seeds, &stages.link);
    let seed_set: BTreeSet<EntityId> = linked.seeds().into_iter().collect();
    let held_out: Vec<usize> = (0..table.n_rows()).filter(|r| !seed_rows.contains(r)).collect();
    let subjects: BTreeMap<usize, EntityId> = held_out
        .iter()
        .filter_map(|&r| link_cell(&res.kb, table.cell(r, 0), stages.link.fuzzy_threshold).map(|e| (r, e)))
        .collect();

    let truth_subjects: BTreeSet<EntityId> = subjects
        .values()
        .chain(&truth.additional_subjects)
        .filter(|e| !seed_set.contains(*e))
        .cloned()
        .collect();
    let suggestions = suggest_subjects(res.models(), &linked, &stages.suggest).context("suggest stage")?;
    let ranked: Vec<EntityId> = suggestions.ranked.iter().map(|s| s.entity.clone()).collect();

    let mut truth_fills: BTreeMap<(usize, usize), String> = BTreeMap::new();
    for &r in &held_out {
        for c in 1..table.n_cols() {
            let cell = table.cell(r, c);
            if !cell.is_empty() {
                truth_fills.insert((r, c), cell.to_string());
            }
        }
    }
    for (cell, v) in &truth.fills {
        if held_out.contains(&cell.0) {
            truth_fills.insert(*cell, v.clone());
        }
    }
    let filler = GapFiller::new(&res.kb, &linked, res.services(), &stages.gapfill);
    let mut fills: BTreeMap<(usize, usize), Vec<String>> = BTreeMap::new();
    for (&r, subject) in &subjects {
        for c in 1..table.n_cols() {
            let values = filler.fill_cell(subject, c).context("gap-fill stage")?;
            fills.insert((r, c), values.into_iter().map(|f| f.value).collect());
        }
    }
    let at1 = fill_precision_recall_at_k(&fills, &truth_fills, 1);
    let at3 = fill_precision_recall_at_k(&fills, &truth_fills, 3);
    let metrics = MetricSet {
        recall_at_50: suggestions.pool.recall_at(&truth_subjects, 50).into(),
        recall_at_1000: suggestions.pool.recall_at(&truth_subjects, 1000).into(),
        average_precision: average_precision(&ranked, &truth_subjects),
        fill_precision_at_1: at1.precision,
        fill_recall_at_1: at1.recall,
        fill_precision_at_3: at3.precision,
    };
    Ok((metrics, truth_subjects.len()))
}

/// Rows drawn from when `--stability` enumerates seed combinations.
pub const STABILITY_POOL: usize = 5;

/// Seed selections for one table: the top `k` rows, or with `stability`
/// every `k`-subset of the top five rows.
pub fn seed_selections(n_rows: usize, k: usize, stability: bool) -> Result<Vec<Vec<usize>>> {
    if stability {
        let pool = n_rows.min(STABILITY_POOL);
        if k > pool {
            bail!("{k} seed rows requested but only {pool} rows available");
        }
        Ok((0..pool).combinations(k).collect())
    } else {
        if k > n_rows {
            bail!("{k} seed rows requested but the table has {n_rows}");
        }
        Ok(vec![(0..k).collect()])
    }
}

fn evaluate_table(res: &Resources, stages: &Stages, dir: &Path, seed_rows: usize, stability: bool) -> Result<TableReport> {
    let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let table = load_table(&dir.join("table.csv"))?;
    let truth = load_truth(&dir.join("truth.json"))?;
    let k = truth.seeds.unwrap_or(seed_rows);
    let runs = seed_selections(table.n_rows(), k, stability)?;
    let mut sets = Vec::with_capacity(runs.len());
    let mut truth_subjects = 0;
    for rows in &runs {
        let (m, n) = evaluate_run(res, stages, &table, rows, &truth.truth)?;
        sets.push(m);
        truth_subjects = truth_subjects.max(n);
    }
    Ok(TableReport {
        name,
        seed_rows: k,
        runs: runs.len(),
        truth_subjects,
        metrics: MetricSet::mean(&sets),
        stddev: stability.then(|| MetricSet::stddev(&sets)),
    })
}

/// Benchmark table directories under `root`, sorted by name.
pub fn benchmark_tables(root: &Path) -> Result<Vec<PathBuf>> {
    let mut dirs = Vec::new();
    for entry in std::fs::read_dir(root).with_context(|| format!("reading {}", root.display()))? {
        let path = entry?.path();
        if path.is_dir() {
            dirs.push(path);
        }
    }
    dirs.sort();
    Ok(dirs)
}

/// Evaluates every table directory under `root` in parallel. Tables
/// without a truth file, or failing to load, are skipped and listed.
pub fn cmd_evaluate(res: &Resources, stages: &Stages, root: &Path, seed_rows: usize, stability: bool) -> Result<EvaluationReport> {
    let dirs = benchmark_tables(root)?;
    let outcomes: Vec<(String, Result<TableReport>)> = dirs
        .par_iter()
        .map(|dir| {
            let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            let outcome = if !dir.join("truth.json").is_file() {
                Err(anyhow!("missing truth.json"))
            } else {
                evaluate_table(res, stages, dir, seed_rows, stability)
            };
            (name, outcome)
        })
        .collect();
    let mut tables = Vec::new();
    let mut skipped = Vec::new();
    for (name, outcome) in outcomes {
        match outcome {
            Ok(t) => tables.push(t),
            Err(e) => {
                log::warn!("skipping table {name}: {e:#}");
                skipped.push(Skipped { name, reason: format!("{e:#}") });
            }
        }
    }
    let per_table: Vec<MetricSet> = tables.iter().map(|t| t.metrics).collect();
    Ok(EvaluationReport {
        table_count: tables.len(),
        macro_average: (!per_table.is_empty()).then(|| MetricSet::mean(&per_table)),
        tables,
        skipped,
    })
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}
