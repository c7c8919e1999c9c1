//! Per-model leaderboards with competition ranks.
//!
//! Values are compared at display precision (two decimals for the overall
//! column, three for skills), so models that print the same value share a
//! rank and the following rank is skipped.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::model::{ElementCategory, ElementKey, FieldError, JsonlRecord};

pub const OVERALL_DECIMALS: u32 = 2;
pub const SKILL_DECIMALS: u32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("no model records")]
    Empty,
    #[error("non-finite {field} for model `{model}`")]
    NonFinite { model: String, field: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed csv: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One scored pair attributed to a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub model_name: String,
    pub pair_id: String,
    pub overall_score: f64,
    #[serde(default)]
    pub element_scores: BTreeMap<ElementKey, f64>,
    #[serde(default)]
    pub discarded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelAggregate {
    pub model_name: String,
    pub overall: f64,
    /// Mean element score per category, over pairs that have the category.
    pub per_skill: BTreeMap<ElementCategory, f64>,
    pub n_pairs: usize,
}

/// Per-model means over non-discarded records, sorted by model name.
pub fn aggregate_models(records: &[ScoreRecord]) -> Vec<ModelAggregate> {
    #[derive(Default)]
    struct Acc {
        overall: f64,
        n: usize,
        skills: BTreeMap<ElementCategory, (f64, usize)>,
    }
    let mut by_model: BTreeMap<&str, Acc> = BTreeMap::new();
    for r in records.iter().filter(|r| !r.discarded) {
        let acc = by_model.entry(&r.model_name).or_default();
        acc.overall += r.overall_score;
        acc.n += 1;
        for (key, &s) in &r.element_scores {
            let slot = acc.skills.entry(key.category).or_default();
            slot.0 += s;
            slot.1 += 1;
        }
    }
    by_model
        .into_iter()
        .map(|(name, acc)| ModelAggregate {
            model_name: name.to_string(),
            overall: acc.overall / acc.n as f64,
            per_skill: acc
                .skills
                .into_iter()
                .map(|(c, (s, n))| (c, s / n as f64))
                .collect(),
            n_pairs: acc.n,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankedCell {
    pub value: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedRow {
    pub model_name: String,
    pub n_pairs: usize,
    pub overall: RankedCell,
    /// Aligned with [`RankedTable::skills`]; `None` when the model has no
    /// element of that category.
    pub skills: Vec<Option<RankedCell>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedTable {
    pub skills: Vec<ElementCategory>,
    pub rows: Vec<RankedRow>,
}

fn display_key(value: f64, decimals: u32) -> i64 {
    (value * 10f64.powi(decimals as i32)).round() as i64
}

/// Competition ranks, highest first; `None` entries are skipped.
fn competition_ranks(values: &[Option<f64>], decimals: u32) -> Vec<Option<usize>> {
    let keys: Vec<Option<i64>> = values
        .iter()
        .map(|v| v.map(|v| display_key(v, decimals)))
        .collect();
    keys.iter()
        .map(|k| k.map(|k| 1 + keys.iter().flatten().filter(|&&other| other > k).count()))
        .collect()
}

pub fn rank_models(aggregates: &[ModelAggregate]) -> Result<RankedTable, ReportError> {
    if aggregates.is_empty() {
        return Err(ReportError::Empty);
    }
    for a in aggregates {
        if !a.overall.is_finite() {
            return Err(ReportError::NonFinite {
                model: a.model_name.clone(),
                field: "overall".into(),
            });
        }
        if let Some((c, _)) = a.per_skill.iter().find(|(_, v)| !v.is_finite()) {
            return Err(ReportError::NonFinite {
                model: a.model_name.clone(),
                field: c.to_string(),
            });
        }
    }
    let present: BTreeSet<ElementCategory> = aggregates
        .iter()
        .flat_map(|a| a.per_skill.keys().copied())
        .collect();
    let skills: Vec<ElementCategory> = ElementCategory::ALL
        .into_iter()
        .filter(|c| present.contains(c))
        .collect();

    let overall: Vec<Option<f64>> = aggregates.iter().map(|a| Some(a.overall)).collect();
    let overall_ranks = competition_ranks(&overall, OVERALL_DECIMALS);
    let skill_ranks: Vec<Vec<Option<usize>>> = skills
        .iter()
        .map(|c| {
            let col: Vec<Option<f64>> = aggregates
                .iter()
                .map(|a| a.per_skill.get(c).copied())
                .collect();
            competition_ranks(&col, SKILL_DECIMALS)
        })
        .collect();

    let mut rows: Vec<RankedRow> = aggregates
        .iter()
        .enumerate()
        .map(|(i, a)| RankedRow {
            model_name: a.model_name.clone(),
            n_pairs: a.n_pairs,
            overall: RankedCell {
                value: a.overall,
                rank: overall_ranks[i].expect("every model has an overall score"),
            },
            skills: skills
                .iter()
                .zip(&skill_ranks)
                .map(|(c, ranks)| {
                    a.per_skill.get(c).map(|&value| RankedCell {
                        value,
                        rank: ranks[i].expect("present value is ranked"),
                    })
                })
                .collect(),
        })
        .collect();
    rows.sort_by(|a, b| {
        a.overall
            .rank
            .cmp(&b.overall.rank)
            .then(b.overall.value.total_cmp(&a.overall.value))
            .then_with(|| a.model_name.cmp(&b.model_name))
    });
    Ok(RankedTable { skills, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Markdown,
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "md" | "markdown" => Ok(ReportFormat::Markdown),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown report format `{other}`")),
        }
    }
}

impl RankedTable {
    pub fn to_markdown(&self) -> String {
        let mut out = String::from("| Model | Overall |");
        for c in &self.skills {
            let _ = write!(out, " {c} |");
        }
        out.push_str("\n|---|---|");
        for _ in &self.skills {
            out.push_str("---|");
        }
        out.push('\n');
        for row in &self.rows {
            let _ = write!(
                out,
                "| {} | {:.*} ({}) |",
                row.model_name, OVERALL_DECIMALS as usize, row.overall.value, row.overall.rank
            );
            for cell in &row.skills {
                match cell {
                    Some(c) => {
                        let _ = write!(
                            out,
                            " {:.*} ({}) |",
                            SKILL_DECIMALS as usize, c.value, c.rank
                        );
                    }
                    None => out.push_str(" - |"),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> Result<String, ReportError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![
            "model".to_string(),
            "n_pairs".into(),
            "overall".into(),
            "overall_rank".into(),
        ];
        for c in &self.skills {
            header.push(c.to_string());
            header.push(format!("{c}_rank"));
        }
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![
                row.model_name.clone(),
                row.n_pairs.to_string(),
                row.overall.value.to_string(),
                row.overall.rank.to_string(),
            ];
            for cell in &row.skills {
                match cell {
                    Some(c) => {
                        rec.push(c.value.to_string());
                        rec.push(c.rank.to_string());
                    }
                    None => {
                        rec.push(String::new());
                        rec.push(String::new());
                    }
                }
            }
            w.write_record(&rec)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| ReportError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn from_csv(text: &str) -> Result<Self, ReportError> {
        let bad = |m: String| ReportError::Malformed(m);
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header = r.headers()?.clone();
        if header.len() < 4 || header.len() % 2 != 0 {
            return Err(bad(format!("{} header columns", header.len())));
        }
        let mut skills = Vec::new();
        for i in (4..header.len()).step_by(2) {
            let c: ElementCategory = header[i].parse().map_err(|e| bad(format!("{e}")))?;
            skills.push(c);
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| bad(format!("bad number `{s}`")))
        };
        let int = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| bad(format!("bad integer `{s}`")))
        };
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let mut cells = Vec::new();
            for i in (4..rec.len()).step_by(2) {
                cells.push(if rec[i].is_empty() {
                    None
                } else {
                    Some(RankedCell {
                        value: num(&rec[i])?,
                        rank: int(&rec[i + 1])?,
                    })
                });
            }
            rows.push(RankedRow {
                model_name: rec[0].to_string(),
                n_pairs: int(&rec[1])?,
                overall: RankedCell {
                    value: num(&rec[2])?,
                    rank: int(&rec[3])?,
                },
                skills: cells,
            });
        }
        Ok(RankedTable { skills, rows })
    }

    pub fn render(&self, format: ReportFormat) -> Result<String, ReportError> {
        Ok(match format {
            ReportFormat::Markdown => self.to_markdown(),
            ReportFormat::Csv => self.to_csv()?,
            ReportFormat::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("table serializes");
                s.push('\n');
                s
            }
        })
    }

    /// Rank of `model` in the overall column.
    pub fn overall_rank(&self, model: &str) -> Option<usize> {
        self.rows
            .iter()
            .find(|r| r.model_name == model)
            .map(|r| r.overall.rank)
    }
}

pub fn emit_report(
    table: &RankedTable,
    format: ReportFormat,
    mut sink: impl std::io::Write,
) -> Result<(), ReportError> {
    sink.write_all(table.render(format)?.as_bytes())?;
    Ok(())
}

impl JsonlRecord for ScoreRecord {
    fn sanitize(&mut self) -> Result<(), FieldError> {
        if !self.overall_score.is_finite() {
            return Err(FieldError::new("overall_score", "not a finite number"));
        }
        match self.element_scores.iter().find(|(_, s)| !s.is_finite()) {
            Some((k, _)) => Err(FieldError::new(
                format!("element_scores.{k}"),
                "not a finite number",
            )),
            None => Ok(()),
        }
    }
}
