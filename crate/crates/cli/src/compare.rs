//! Statistical comparison report over a complete kNN results grid.

use std::fmt::Write as _;
use std::path::Path;

use lpdim_core::stats::{
    frequency_report, friedman_test, group_by_dataset, nemenyi_cd, wilcoxon_signed_rank,
    FrequencyReport, DEFAULT_ALPHA,
};
use lpdim_core::{AlphaPolicy, LpExponent, Measure, PreprocessMode, QualityRecord};
use serde::Serialize;

use crate::error::CliError;
use crate::knn_eval::read_records;
use crate::output::{json_bytes, sibling, write_atomic};

/// Exponents compared pairwise with the Wilcoxon test.
pub const WILCOXON_PS: [f64; 3] = [0.5, 1.0, 2.0];

#[derive(Debug, Serialize)]
pub struct FrequencyCell {
    pub measure: Measure,
    pub preprocessing: PreprocessMode,
    pub report: FrequencyReport,
}

#[derive(Debug, Serialize)]
pub struct RankEntry {
    pub p: LpExponent,
    pub mean_rank: f64,
}

#[derive(Debug, Serialize)]
pub struct FriedmanCell {
    pub preprocessing: PreprocessMode,
    pub measure: Measure,
    pub statistic: f64,
    pub p_value: f64,
    pub significant: bool,
    pub mean_ranks: Vec<RankEntry>,
    pub best_p: LpExponent,
    pub best_rank: f64,
    /// Exponents whose mean rank is within the critical distance of the best.
    pub insignificant_from_best: Vec<LpExponent>,
}

#[derive(Debug, Serialize)]
pub struct PairTest<T> {
    pub a: T,
    pub b: T,
    pub statistic: f64,
    pub p_value: f64,
}

#[derive(Debug, Serialize)]
pub struct ExponentPairRow {
    pub preprocessing: PreprocessMode,
    pub measure: Measure,
    pub pairs: Vec<PairTest<LpExponent>>,
}

#[derive(Debug, Serialize)]
pub struct PreprocessingPairRow {
    pub measure: Measure,
    pub p: LpExponent,
    pub pairs: Vec<PairTest<PreprocessMode>>,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub k: usize,
    pub ps: Vec<LpExponent>,
    pub databases: Vec<String>,
    pub alpha_policy: AlphaPolicy,
    pub test_alpha: f64,
    pub nemenyi_cd: f64,
    pub frequency: Vec<FrequencyCell>,
    pub friedman: Vec<FriedmanCell>,
    pub wilcoxon_exponents: Vec<ExponentPairRow>,
    pub wilcoxon_preprocessing: Vec<PreprocessingPairRow>,
}

fn incomplete(msg: String) -> CliError {
    CliError::Usage(format!("incomplete results grid: {msg}"))
}

/// Per-database values of `measure` for each exponent, one row per
/// database in `names` order.
fn matrix(
    records: &[QualityRecord],
    mode: PreprocessMode,
    ps: &[LpExponent],
    measure: Measure,
    names: &[String],
) -> Result<Vec<Vec<f64>>, CliError> {
    let subset: Vec<QualityRecord> = records
        .iter()
        .filter(|r| r.preprocessing == mode)
        .cloned()
        .collect();
    let groups = group_by_dataset(&subset, ps)?;
    let found: Vec<&str> = groups.iter().map(|(n, _)| n.as_str()).collect();
    if found != names.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(incomplete(format!(
            "{mode} preprocessing covers {found:?}, expected {names:?}"
        )));
    }
    Ok(groups
        .iter()
        .map(|(_, recs)| recs.iter().map(|r| measure.value(r)).collect())
        .collect())
}

fn column(m: &[Vec<f64>], j: usize) -> Vec<f64> {
    m.iter().map(|row| row[j]).collect()
}

pub fn build_report(
    records: &[QualityRecord],
    ps: &[LpExponent],
    k: usize,
) -> Result<Report, CliError> {
    let mut names: Vec<String> = Vec::new();
    for r in records.iter().filter(|r| ps.contains(&r.p)) {
        if !names.contains(&r.dataset) {
            names.push(r.dataset.clone());
        }
    }
    if names.len() < 2 {
        return Err(incomplete(format!(
            "need at least 2 datasets, found {}",
            names.len()
        )));
    }
    let wil_idx: Vec<usize> = WILCOXON_PS
        .iter()
        .map(|&v| {
            ps.iter()
                .position(|p| p.value() == v)
                .ok_or_else(|| incomplete(format!("exponent {v} is not in the grid")))
        })
        .collect::<Result<_, _>>()?;
    let policy = AlphaPolicy::default();
    let cd = nemenyi_cd(ps.len(), names.len(), DEFAULT_ALPHA)?;

    let mut frequency = Vec::new();
    for measure in Measure::ALL {
        for mode in PreprocessMode::ALL {
            let subset: Vec<QualityRecord> = records
                .iter()
                .filter(|r| r.preprocessing == mode)
                .cloned()
                .collect();
            frequency.push(FrequencyCell {
                measure,
                preprocessing: mode,
                report: frequency_report(&subset, ps, measure, k, &policy)?,
            });
        }
    }

    let mut friedman = Vec::new();
    let mut wilcoxon_exponents = Vec::new();
    for mode in PreprocessMode::ALL {
        for measure in Measure::ALL {
            let q = matrix(records, mode, ps, measure, &names)?;
            let (t, ranks) = friedman_test(&q, DEFAULT_ALPHA)?;
            let mut best = 0;
            for (i, &r) in ranks.mean_ranks.iter().enumerate() {
                if r > ranks.mean_ranks[best] {
                    best = i;
                }
            }
            let best_rank = ranks.mean_ranks[best];
            friedman.push(FriedmanCell {
                preprocessing: mode,
                measure,
                statistic: t.statistic,
                p_value: t.p_value,
                significant: t.significant,
                mean_ranks: ps
                    .iter()
                    .zip(&ranks.mean_ranks)
                    .map(|(&p, &mean_rank)| RankEntry { p, mean_rank })
                    .collect(),
                best_p: ps[best],
                best_rank,
                insignificant_from_best: ps
                    .iter()
                    .zip(&ranks.mean_ranks)
                    .filter(|(_, &r)| (best_rank - r).abs() <= cd)
                    .map(|(&p, _)| p)
                    .collect(),
            });

            let mut pairs = Vec::new();
            for (a, b) in [(0, 1), (0, 2), (1, 2)] {
                let t = wilcoxon_signed_rank(&column(&q, wil_idx[a]), &column(&q, wil_idx[b]))?;
                pairs.push(PairTest {
                    a: ps[wil_idx[a]],
                    b: ps[wil_idx[b]],
                    statistic: t.statistic,
                    p_value: t.p_value,
                });
            }
            wilcoxon_exponents.push(ExponentPairRow {
                preprocessing: mode,
                measure,
                pairs,
            });
        }
    }

    let mut wilcoxon_preprocessing = Vec::new();
    for measure in Measure::ALL {
        let by_mode: Vec<Vec<Vec<f64>>> = PreprocessMode::ALL
            .iter()
            .map(|&mode| matrix(records, mode, ps, measure, &names))
            .collect::<Result<_, _>>()?;
        for &pi in &wil_idx {
            let mut pairs = Vec::new();
            for (a, b) in [(0, 1), (0, 2), (1, 2)] {
                let t = wilcoxon_signed_rank(&column(&by_mode[a], pi), &column(&by_mode[b], pi))?;
                pairs.push(PairTest {
                    a: PreprocessMode::ALL[a],
                    b: PreprocessMode::ALL[b],
                    statistic: t.statistic,
                    p_value: t.p_value,
                });
            }
            wilcoxon_preprocessing.push(PreprocessingPairRow {
                measure,
                p: ps[pi],
                pairs,
            });
        }
    }

    Ok(Report {
        k,
        ps: ps.to_vec(),
        databases: names,
        alpha_policy: policy,
        test_alpha: DEFAULT_ALPHA,
        nemenyi_cd: cd,
        frequency,
        friedman,
        wilcoxon_exponents,
        wilcoxon_preprocessing,
    })
}

fn mode_title(mode: PreprocessMode) -> &'static str {
    match mode {
        PreprocessMode::Empty => "Empty preprocessing",
        PreprocessMode::Standardise => "Standardisation",
        PreprocessMode::Minmax => "Min-max normalization",
    }
}

fn pval(p: f64) -> String {
    if p < 1e-4 {
        "<0.0001".into()
    } else {
        format!("{p:.4}")
    }
}

fn header(out: &mut String, first: &[&str], ps: &[LpExponent]) {
    let cols: Vec<String> = first
        .iter()
        .map(|s| s.to_string())
        .chain(ps.iter().map(|p| p.to_string()))
        .collect();
    let _ = writeln!(out, "| {} |", cols.join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(cols.len()));
}

pub fn render_markdown(r: &Report) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# kNN comparison across lp exponents\n");
    let _ = writeln!(
        s,
        "{} databases, k = {}, Friedman/Wilcoxon alpha = {}, Nemenyi CD = {:.4}.\n",
        r.databases.len(),
        r.k,
        r.test_alpha,
        r.nemenyi_cd
    );

    let _ = writeln!(s, "## Best and worst frequencies\n");
    for cell in &r.frequency {
        let _ = writeln!(
            s,
            "### {} / {}\n",
            cell.measure.label(),
            mode_title(cell.preprocessing)
        );
        header(&mut s, &["Indicator"], &r.ps);
        let row = |label: &str, f: &dyn Fn(&lpdim_core::stats::FrequencyRow) -> Option<usize>| {
            let vals: Vec<String> = cell
                .report
                .rows
                .iter()
                .map(|x| f(x).map_or("-".into(), |v| v.to_string()))
                .collect();
            format!("| {label} | {} |\n", vals.join(" | "))
        };
        s += &row("The best", &|x| Some(x.best));
        s += &row("The worst", &|x| Some(x.worst));
        if cell.measure != Measure::SeSp {
            s += &row("Insignificantly different from the best", &|x| {
                x.insignificant_from_best
            });
            s += &row("Insignificantly different from the worst", &|x| {
                x.insignificant_from_worst
            });
        }
        s.push('\n');
    }

    let _ = writeln!(s, "## Friedman test and Nemenyi post hoc test\n");
    header(
        &mut s,
        &[
            "Preprocessing",
            "Measure",
            "Friedman p-value",
            "Best p",
            "R_i",
        ],
        &r.ps,
    );
    for c in &r.friedman {
        let marks: Vec<&str> =
            r.ps.iter()
                .map(|p| {
                    if c.insignificant_from_best.contains(p) {
                        "X"
                    } else {
                        ""
                    }
                })
                .collect();
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {:.4} | {} |",
            mode_title(c.preprocessing),
            c.measure.label(),
            pval(c.p_value),
            c.best_p,
            c.best_rank,
            marks.join(" | ")
        );
    }

    let _ = writeln!(s, "\n## Wilcoxon signed rank test: exponent pairs\n");
    let _ = writeln!(s, "| Preprocessing | Measure | 0.5 & 1 | 0.5 & 2 | 1 & 2 |");
    let _ = writeln!(s, "|---|---|---|---|---|");
    for row in &r.wilcoxon_exponents {
        let ps: Vec<String> = row.pairs.iter().map(|t| pval(t.p_value)).collect();
        let _ = writeln!(
            s,
            "| {} | {} | {} |",
            mode_title(row.preprocessing),
            row.measure.label(),
            ps.join(" | ")
        );
    }

    let _ = writeln!(s, "\n## Wilcoxon signed rank test: preprocessing pairs\n");
    let _ = writeln!(s, "| Measure | p | E & S | E & M | S & M |");
    let _ = writeln!(s, "|---|---|---|---|---|");
    for row in &r.wilcoxon_preprocessing {
        let ps: Vec<String> = row.pairs.iter().map(|t| pval(t.p_value)).collect();
        let _ = writeln!(
            s,
            "| {} | {} | {} |",
            row.measure.label(),
            row.p,
            ps.join(" | ")
        );
    }
    s
}

pub fn run(input: &Path, out: &Path, k: usize, ps: &[LpExponent]) -> Result<(), CliError> {
    let records = read_records(input)?;
    let report = build_report(&records, ps, k)?;
    write_atomic(out, render_markdown(&report).as_bytes())?;
    write_atomic(&sibling(out, "json"), &json_bytes(&report)?)
}
