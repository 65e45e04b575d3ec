//! Trial aggregation, operator ranking, and rank agreement.
//!
//! Capability ordering is data-driven and safety-first: operators sort
//! lexicographically by (collisions ascending, missed goals ascending,
//! total time ascending). Trust ordering is descending mean short-term
//! trust over teleop-gated samples. Agreement between the two is Kendall
//! tau-b with tie correction; ties in either ranking share their mean
//! rank.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::fusion::{TrialEstimate, TrustSample};
use crate::memory::{sanitize_file_stem, MemoryError, ProfileStore};

#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error("duplicate operator id `{0}`")]
    DuplicateOperator(String),
    #[error("rankings cover different operators; only in first: {only_first:?}, only in second: {only_second:?}")]
    MismatchedSets {
        only_first: Vec<String>,
        only_second: Vec<String>,
    },
    #[error("no trials: no *.trial files found in {0}")]
    NoTrials(PathBuf),
    #[error("no trial produced teleop-gated samples; nothing to rank")]
    NothingToRank,
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Memory(#[from] MemoryError),
}

/// Per-operator capability metrics, summed over the operator's trials.
#[derive(Debug, Clone, PartialEq)]
pub struct CapabilityRecord {
    pub operator_id: String,
    pub total_time_s: f64,
    pub collisions: u32,
    pub goals_inspected: u32,
    pub goals_total: u32,
}

impl CapabilityRecord {
    pub fn missed_goals(&self) -> u32 {
        self.goals_total.saturating_sub(self.goals_inspected)
    }
}

/// One row of the final report, in trust order.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedOperator {
    pub operator_id: String,
    pub mean_trust: f64,
    pub trust_rank: f64,
    pub capability_rank: f64,
    pub collisions: u32,
    pub missed_goals: u32,
    pub total_time_s: f64,
    pub archetype: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingReport {
    /// Rows ordered by descending mean trust.
    pub rows: Vec<RankedOperator>,
    /// Kendall tau-b between the trust and capability rankings; absent
    /// when undefined (fewer than two operators or a fully tied ranking).
    pub agreement: Option<f64>,
}

/// Assign 1-based ranks over an already-sorted slice; runs of key-equal
/// neighbors share their mean rank.
fn mean_ranks<T>(sorted: &[T], tied: impl Fn(&T, &T) -> bool) -> Vec<f64> {
    let mut ranks = vec![0.0; sorted.len()];
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && tied(&sorted[j], &sorted[j + 1]) {
            j += 1;
        }
        let shared = ((i + 1) + (j + 1)) as f64 / 2.0;
        for rank in ranks.iter_mut().take(j + 1).skip(i) {
            *rank = shared;
        }
        i = j + 1;
    }
    ranks
}

/// Rank operators by capability: collisions, then missed goals, then time.
///
/// Returns (operator_id, rank) ordered best-first. Ties on the full key
/// share their mean rank.
pub fn capability_rank(
    records: &[CapabilityRecord],
) -> Result<Vec<(String, f64)>, EvaluationError> {
    let mut seen = std::collections::HashSet::new();
    for r in records {
        if !seen.insert(r.operator_id.as_str()) {
            return Err(EvaluationError::DuplicateOperator(r.operator_id.clone()));
        }
    }
    let mut sorted: Vec<&CapabilityRecord> = records.iter().collect();
    sorted.sort_by(|a, b| {
        a.collisions
            .cmp(&b.collisions)
            .then(a.missed_goals().cmp(&b.missed_goals()))
            .then(a.total_time_s.total_cmp(&b.total_time_s))
            .then(a.operator_id.cmp(&b.operator_id))
    });
    let ranks = mean_ranks(&sorted, |a, b| {
        a.collisions == b.collisions
            && a.missed_goals() == b.missed_goals()
            && a.total_time_s == b.total_time_s
    });
    Ok(sorted
        .into_iter()
        .zip(ranks)
        .map(|(r, rank)| (r.operator_id.clone(), rank))
        .collect())
}

/// Rank operators by descending mean trust; exact ties share their mean
/// rank and order deterministically by operator id.
pub fn trust_rank(means: &[(String, f64)]) -> Vec<(String, f64)> {
    let mut sorted: Vec<&(String, f64)> = means.iter().collect();
    sorted.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let ranks = mean_ranks(&sorted, |a, b| a.1 == b.1);
    sorted
        .into_iter()
        .zip(ranks)
        .map(|(m, rank)| (m.0.clone(), rank))
        .collect()
}

/// Kendall tau-b over paired rank values. `None` when undefined (n < 2 or
/// either variable fully tied).
pub fn kendall_tau_b(pairs: &[(f64, f64)]) -> Option<f64> {
    let n = pairs.len();
    if n < 2 {
        return None;
    }
    let mut concordant = 0i64;
    let mut discordant = 0i64;
    let mut ties_x = 0i64;
    let mut ties_y = 0i64;
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = pairs[i].0 - pairs[j].0;
            let dy = pairs[i].1 - pairs[j].1;
            if dx == 0.0 {
                ties_x += 1;
            }
            if dy == 0.0 {
                ties_y += 1;
            }
            if dx != 0.0 && dy != 0.0 {
                if (dx > 0.0) == (dy > 0.0) {
                    concordant += 1;
                } else {
                    discordant += 1;
                }
            }
        }
    }
    let total_pairs = (n * (n - 1) / 2) as i64;
    let denom = ((total_pairs - ties_x) as f64 * (total_pairs - ties_y) as f64).sqrt();
    if denom == 0.0 {
        return None;
    }
    Some((concordant - discordant) as f64 / denom)
}

/// Agreement between two rankings of the same operator set.
pub fn rank_agreement(
    first: &[(String, f64)],
    second: &[(String, f64)],
) -> Result<Option<f64>, EvaluationError> {
    let map_second: BTreeMap<&str, f64> =
        second.iter().map(|(id, rank)| (id.as_str(), *rank)).collect();
    let mut only_first: Vec<String> = first
        .iter()
        .filter(|(id, _)| !map_second.contains_key(id.as_str()))
        .map(|(id, _)| id.clone())
        .collect();
    let set_first: BTreeMap<&str, ()> = first.iter().map(|(id, _)| (id.as_str(), ())).collect();
    let mut only_second: Vec<String> = second
        .iter()
        .filter(|(id, _)| !set_first.contains_key(id.as_str()))
        .map(|(id, _)| id.clone())
        .collect();
    if !only_first.is_empty() || !only_second.is_empty() {
        only_first.sort();
        only_second.sort();
        return Err(EvaluationError::MismatchedSets {
            only_first,
            only_second,
        });
    }
    let pairs: Vec<(f64, f64)> = first
        .iter()
        .map(|(id, rank)| (*rank, map_second[id.as_str()]))
        .collect();
    Ok(kendall_tau_b(&pairs))
}

/// Write a trust-trace CSV (header plus one row per emitted sample).
pub fn write_trace_csv(path: &Path, samples: &[TrustSample]) -> io::Result<()> {
    fs::write(path, trace_csv_string(samples))
}

pub fn trace_csv_string(samples: &[TrustSample]) -> String {
    let mut out = String::from(TrustSample::CSV_HEADER);
    out.push('\n');
    for s in samples {
        out.push_str(&s.csv_row());
        out.push('\n');
    }
    out
}

/// Write a polyline plot of short-term trust against time.
pub fn write_trace_svg(path: &Path, samples: &[TrustSample]) -> io::Result<()> {
    fs::write(path, trace_svg_string(samples))
}

pub fn trace_svg_string(samples: &[TrustSample]) -> String {
    const W: f64 = 800.0;
    const H: f64 = 300.0;
    const LEFT: f64 = 50.0;
    const RIGHT: f64 = 10.0;
    const TOP: f64 = 10.0;
    const BOTTOM: f64 = 35.0;
    let t_max = samples.last().map(|s| s.t).unwrap_or(0.0).max(1e-9);
    let px = |t: f64| LEFT + (W - LEFT - RIGHT) * (t / t_max);
    let py = |v: f64| TOP + (H - TOP - BOTTOM) * (1.0 - v);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        LEFT,
        py(0.0),
        W - RIGHT,
        py(0.0)
    ));
    svg.push_str(&format!(
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        LEFT,
        py(0.0),
        LEFT,
        py(1.0)
    ));
    for v in [0.0, 0.5, 1.0] {
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"end\">{v}</text>\n",
            LEFT - 6.0,
            py(v) + 4.0
        ));
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#cccccc\" stroke-dasharray=\"3,3\"/>\n",
            LEFT,
            py(v),
            W - RIGHT,
            py(v)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\">t (s)</text>\n",
        (LEFT + W - RIGHT) / 2.0,
        H - 8.0
    ));
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\">{t_max}</text>\n",
        W - RIGHT - 30.0,
        py(0.0) + 16.0
    ));
    if !samples.is_empty() {
        let points: Vec<String> = samples
            .iter()
            .map(|s| format!("{:.2},{:.2}", px(s.t), py(s.short_term_trust)))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            points.join(" ")
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Outcome of a directory report: the ranking plus any skipped inputs.
#[derive(Debug)]
pub struct ReportOutcome {
    pub report: RankingReport,
    /// Trials that could not be processed, with the reason; a nonempty
    /// list means partial success.
    pub skipped: Vec<(PathBuf, String)>,
}

struct OperatorAggregate {
    trust_sum: f64,
    gated_trials: u32,
    capability: CapabilityRecord,
    archetype: Option<String>,
}

/// Estimate every `*.trial` file under `trials_dir`, write per-trial trace
/// CSV/SVG artifacts and `ranking.csv` under `out_dir`, and fold each run
/// into the operator profiles.
///
/// Unreadable trials are skipped and listed in the outcome. Deterministic:
/// trials are processed in file-name order and all outputs are
/// byte-reproducible.
pub fn report(
    trials_dir: &Path,
    out_dir: &Path,
    profiles: &ProfileStore,
) -> Result<ReportOutcome, EvaluationError> {
    report_with(trials_dir, out_dir, profiles, None)
}

/// [`report`] with an optional JSON parameter override merged onto each
/// trial's stored parameters.
pub fn report_with(
    trials_dir: &Path,
    out_dir: &Path,
    profiles: &ProfileStore,
    params_override: Option<&str>,
) -> Result<ReportOutcome, EvaluationError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(trials_dir)
        .map_err(|source| EvaluationError::Io {
            path: trials_dir.to_path_buf(),
            source,
        })?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("trial"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(EvaluationError::NoTrials(trials_dir.to_path_buf()));
    }
    fs::create_dir_all(out_dir).map_err(|source| EvaluationError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;

    let mut skipped: Vec<(PathBuf, String)> = Vec::new();
    let mut estimates: Vec<TrialEstimate> = Vec::new();
    for path in &paths {
        match crate::fusion::estimate_trial_file_with(path, params_override) {
            Ok(estimate) => estimates.push(estimate),
            Err(e) => skipped.push((path.clone(), e.to_string())),
        }
    }

    let mut profiles_by_id: BTreeMap<String, crate::memory::OperatorProfile> = BTreeMap::new();
    let mut aggregates: BTreeMap<String, OperatorAggregate> = BTreeMap::new();
    for estimate in &estimates {
        let operator_id = &estimate.meta.operator_id;
        let trial_id = &estimate.meta.trial_id;
        let stem = format!(
            "trace_{}_{}",
            sanitize_file_stem(operator_id),
            sanitize_file_stem(trial_id)
        );
        let csv_path = out_dir.join(format!("{stem}.csv"));
        write_trace_csv(&csv_path, &estimate.samples).map_err(|source| EvaluationError::Io {
            path: csv_path.clone(),
            source,
        })?;
        let svg_path = out_dir.join(format!("{stem}.svg"));
        write_trace_svg(&svg_path, &estimate.samples).map_err(|source| EvaluationError::Io {
            path: svg_path.clone(),
            source,
        })?;

        if !profiles_by_id.contains_key(operator_id) {
            profiles_by_id.insert(operator_id.clone(), profiles.load(operator_id)?);
        }
        let profile = profiles_by_id.get_mut(operator_id).expect("just inserted");
        profile.finalize_run(crate::memory::RunSummary {
            trial_id: trial_id.clone(),
            mean_short_term_trust: estimate.mean_short_term_trust,
            collisions: estimate.collisions,
            goals_inspected: estimate.goals_inspected,
            net_incident_sum: estimate.net_incident_sum,
        });

        let agg = aggregates
            .entry(operator_id.clone())
            .or_insert_with(|| OperatorAggregate {
                trust_sum: 0.0,
                gated_trials: 0,
                capability: CapabilityRecord {
                    operator_id: operator_id.clone(),
                    total_time_s: 0.0,
                    collisions: 0,
                    goals_inspected: 0,
                    goals_total: 0,
                },
                archetype: estimate.meta.archetype.clone(),
            });
        if let Some(mean) = estimate.mean_short_term_trust {
            agg.trust_sum += mean;
            agg.gated_trials += 1;
        }
        agg.capability.total_time_s += estimate.total_time_s;
        agg.capability.collisions += estimate.collisions;
        agg.capability.goals_inspected += estimate.goals_inspected;
        agg.capability.goals_total += estimate.goals_total;
    }

    for profile in profiles_by_id.values() {
        profiles.save(profile)?;
    }

    // Operators whose trials never produced a gated sample cannot be
    // ranked by trust; list them as skipped rather than invent a value.
    let mut means: Vec<(String, f64)> = Vec::new();
    let mut capabilities: Vec<CapabilityRecord> = Vec::new();
    for (operator_id, agg) in &aggregates {
        if agg.gated_trials == 0 {
            skipped.push((
                PathBuf::from(operator_id),
                "no teleop-active samples in any trial".into(),
            ));
            continue;
        }
        means.push((
            operator_id.clone(),
            agg.trust_sum / agg.gated_trials as f64,
        ));
        capabilities.push(agg.capability.clone());
    }
    if means.is_empty() {
        return Err(EvaluationError::NothingToRank);
    }

    let trust_ranking = trust_rank(&means);
    let capability_ranking = capability_rank(&capabilities)?;
    let agreement = rank_agreement(&trust_ranking, &capability_ranking)?;

    let capability_rank_by_id: BTreeMap<&str, f64> = capability_ranking
        .iter()
        .map(|(id, rank)| (id.as_str(), *rank))
        .collect();
    let mean_by_id: BTreeMap<&str, f64> =
        means.iter().map(|(id, mean)| (id.as_str(), *mean)).collect();

    let mut rows = Vec::with_capacity(trust_ranking.len());
    for (operator_id, trust_rank_value) in &trust_ranking {
        let agg = &aggregates[operator_id];
        rows.push(RankedOperator {
            operator_id: operator_id.clone(),
            mean_trust: mean_by_id[operator_id.as_str()],
            trust_rank: *trust_rank_value,
            capability_rank: capability_rank_by_id[operator_id.as_str()],
            collisions: agg.capability.collisions,
            missed_goals: agg.capability.missed_goals(),
            total_time_s: agg.capability.total_time_s,
            archetype: agg.archetype.clone(),
        });
    }
    let report = RankingReport { rows, agreement };

    let ranking_path = out_dir.join("ranking.csv");
    fs::write(&ranking_path, ranking_csv_string(&report)).map_err(|source| {
        EvaluationError::Io {
            path: ranking_path.clone(),
            source,
        }
    })?;

    Ok(ReportOutcome { report, skipped })
}

pub fn ranking_csv_string(report: &RankingReport) -> String {
    let mut out = String::from(
        "operator_id,mean_trust,trust_rank,collisions,missed_goals,total_time_s,capability_rank,archetype\n",
    );
    for row in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            row.operator_id,
            row.mean_trust,
            row.trust_rank,
            row.collisions,
            row.missed_goals,
            row.total_time_s,
            row.capability_rank,
            row.archetype.as_deref().unwrap_or("")
        ));
    }
    out
}
