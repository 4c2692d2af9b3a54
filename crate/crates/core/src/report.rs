//! Report rendering: aligned-column text tables plus machine-readable JSON.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::eval::{RegressionResult, RewardAccuracyReport, WinRateReport};
use crate::pairs::StatsReport;

/// Reward-accuracy report tagged with the model it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledAccuracy {
    pub label: String,
    pub context_mode: String,
    pub report: RewardAccuracyReport,
}

/// Win-rate report tagged with the two models compared. The win rate is the
/// percentage of comparisons `model_2` won.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledWinrate {
    pub model_1: String,
    pub model_2: String,
    pub report: WinRateReport,
}

fn render_table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            if cell.len() > widths[i] {
                widths[i] = cell.len();
            }
        }
    }
    let fmt_row = |cells: &[String]| -> String {
        cells
            .iter()
            .enumerate()
            .map(|(i, c)| {
                if i == 0 {
                    format!("{:<width$}", c, width = widths[i])
                } else {
                    format!("{:>width$}", c, width = widths[i])
                }
            })
            .collect::<Vec<_>>()
            .join("  ")
    };
    let mut out = String::new();
    out.push_str(&fmt_row(header));
    out.push('\n');
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    out.push('\n');
    for row in rows {
        out.push_str(&fmt_row(row));
        out.push('\n');
    }
    out
}

/// Dataset statistics in the per-domain table layout: one row per
/// subreddit, a totals row at the bottom.
pub fn render_stats_table(stats: &StatsReport) -> String {
    let header = vec![
        "Domain".to_string(),
        "Train Examples".to_string(),
        "Test Examples (Reward)".to_string(),
        "Test Examples (Prompts)".to_string(),
    ];
    let mut rows: Vec<Vec<String>> = stats
        .rows
        .iter()
        .map(|r| {
            vec![
                r.name.clone(),
                r.train_pairs.to_string(),
                r.eval_reward_pairs.to_string(),
                r.eval_prompts.to_string(),
            ]
        })
        .collect();
    rows.push(vec![
        "Total".into(),
        stats.total.train_pairs.to_string(),
        stats.total.eval_reward_pairs.to_string(),
        stats.total.eval_prompts.to_string(),
    ]);
    render_table(&header, &rows)
}

/// Reward accuracies: one row per model (context / no-context), one column
/// per subreddit plus the pooled figure.
pub fn render_reward_table(entries: &[LabeledAccuracy]) -> String {
    let mut subreddits: Vec<String> = Vec::new();
    for e in entries {
        for sub in e.report.per_subreddit.keys() {
            if !subreddits.contains(sub) {
                subreddits.push(sub.clone());
            }
        }
    }
    subreddits.sort();
    let mut header = vec!["Model".to_string()];
    header.extend(subreddits.iter().cloned());
    header.push("Overall".into());
    let rows: Vec<Vec<String>> = entries
        .iter()
        .map(|e| {
            let mut row = vec![e.label.clone()];
            for sub in &subreddits {
                row.push(
                    e.report
                        .subreddit_accuracy_pct(sub)
                        .map(|v| format!("{v:.2}"))
                        .unwrap_or_else(|| "-".into()),
                );
            }
            row.push(format!("{:.2}", e.report.accuracy_pct));
            row
        })
        .collect();
    render_table(&header, &rows)
}

/// Pairwise win-rate matrix: cell = percentage of comparisons the column
/// model won against the row model.
pub fn render_winrate_matrix(entries: &[LabeledWinrate]) -> String {
    let mut rows_set: Vec<String> = Vec::new();
    let mut cols_set: Vec<String> = Vec::new();
    let mut cells: BTreeMap<(String, String), f64> = BTreeMap::new();
    for e in entries {
        if !rows_set.contains(&e.model_1) {
            rows_set.push(e.model_1.clone());
        }
        if !cols_set.contains(&e.model_2) {
            cols_set.push(e.model_2.clone());
        }
        cells.insert((e.model_1.clone(), e.model_2.clone()), e.report.win_rate);
    }
    let mut header = vec![String::new()];
    header.extend(cols_set.iter().cloned());
    let rows: Vec<Vec<String>> = rows_set
        .iter()
        .map(|r| {
            let mut row = vec![r.clone()];
            for c in &cols_set {
                row.push(
                    cells
                        .get(&(r.clone(), c.clone()))
                        .map(|v| format!("{v:.2}"))
                        .unwrap_or_else(|| String::new()),
                );
            }
            row
        })
        .collect();
    render_table(&header, &rows)
}

/// Per-subreddit win rates for one comparison.
pub fn render_winrate_breakdown(entry: &LabeledWinrate) -> String {
    let header = vec![
        "Subreddit".to_string(),
        "n".to_string(),
        format!("Win-rate of {}", entry.model_2),
    ];
    let mut rows: Vec<Vec<String>> = entry
        .report
        .per_subreddit
        .iter()
        .map(|(sub, w)| {
            vec![
                sub.clone(),
                w.n.to_string(),
                format!("{:.2}", 100.0 * w.wins_model_2 as f64 / w.n.max(1) as f64),
            ]
        })
        .collect();
    rows.push(vec![
        "Overall".into(),
        entry.report.n_valid.to_string(),
        format!("{:.2}", entry.report.win_rate),
    ]);
    render_table(&header, &rows)
}

pub fn render_regression(fit: &RegressionResult) -> String {
    format!(
        "predictability regression: coefficient {:.4} (se {:.4}, z {:.2}, p {:.4}), n = {}, converged = {}\n",
        fit.coefficient, fit.std_error, fit.z_stat, fit.p_value, fit.n, fit.converged
    )
}

/// Assembled report over a run directory.
#[derive(Debug, Default, Serialize)]
pub struct RunReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stats: Option<StatsReport>,
    pub reward_evals: Vec<LabeledAccuracy>,
    pub winrates: Vec<LabeledWinrate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predictability: Option<RegressionResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<crate::eval::KappaResult>,
}

/// Loads every recognized artifact in a run directory. File conventions:
/// `stats.json`, `reward_eval*.json`, `winrate*.json`, `predictability.json`,
/// `kappa.json`.
pub fn collect_run_dir(dir: &Path) -> Result<RunReport, crate::jsonl::JsonlError> {
    let mut report = RunReport::default();
    let mut names: Vec<std::path::PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| crate::jsonl::JsonlError::Io { path: dir.display().to_string(), source: e })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    names.sort();
    for path in names {
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else { continue };
        if name == "stats.json" {
            report.stats = Some(crate::jsonl::read_json(&path)?);
        } else if name.starts_with("reward_eval") && name.ends_with(".json") {
            report.reward_evals.push(crate::jsonl::read_json(&path)?);
        } else if name.starts_with("winrate") && name.ends_with(".json") {
            report.winrates.push(crate::jsonl::read_json(&path)?);
        } else if name == "predictability.json" {
            report.predictability = Some(crate::jsonl::read_json(&path)?);
        } else if name == "kappa.json" {
            report.kappa = Some(crate::jsonl::read_json(&path)?);
        }
    }
    Ok(report)
}

/// True when the report holds nothing renderable.
pub fn is_empty_report(report: &RunReport) -> bool {
    report.stats.is_none()
        && report.reward_evals.is_empty()
        && report.winrates.is_empty()
        && report.predictability.is_none()
        && report.kappa.is_none()
}

pub fn render_run_report(report: &RunReport) -> String {
    let mut out = String::new();
    if let Some(stats) = &report.stats {
        out.push_str("## Dataset statistics\n\n");
        out.push_str(&render_stats_table(stats));
        out.push('\n');
    }
    if !report.reward_evals.is_empty() {
        out.push_str("## Reward preference accuracy\n\n");
        out.push_str(&render_reward_table(&report.reward_evals));
        out.push('\n');
    }
    if !report.winrates.is_empty() {
        out.push_str("## Win rates\n\n");
        out.push_str(&render_winrate_matrix(&report.winrates));
        out.push('\n');
        for entry in &report.winrates {
            out.push_str(&format!("### {} vs {}\n\n", entry.model_2, entry.model_1));
            out.push_str(&render_winrate_breakdown(entry));
            out.push('\n');
        }
    }
    if let Some(fit) = &report.predictability {
        out.push_str("## Predictability\n\n");
        out.push_str(&render_regression(fit));
        out.push('\n');
    }
    if let Some(kappa) = &report.kappa {
        out.push_str("## Annotator agreement\n\n");
        out.push_str(&format!(
            "Fleiss kappa: {:.4} over {} items x {} raters\n",
            kappa.kappa, kappa.n_items, kappa.n_raters
        ));
    }
    out
}
