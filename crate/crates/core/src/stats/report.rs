//! Factor scoring and the per-factor pre/post comparison report.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::descriptive::{mean, sd_unbiased};
use super::{
    effect_size_dd, paired_t_test, shapiro_wilk, wilcoxon_signed_rank, EffectSize, InstrumentDefinition, Pair,
    PairedSample, StatsError, WilcoxonMethod,
};
use crate::ingestion::{Phase, SurveyResponseSet};
use crate::Scalar;

pub const DEFAULT_ALPHA_NORMALITY: f64 = 0.05;

/// Per-respondent, per-phase factor means.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorScores<T> {
    pub scores: BTreeMap<(String, Phase, String), T>,
    /// Respondents lacking one phase, excluded from pairing.
    pub excluded: Vec<String>,
    factor_order: Vec<String>,
}

impl<T: Scalar> FactorScores<T> {
    pub fn get(&self, respondent: &str, phase: Phase, factor: &str) -> Option<T> {
        self.scores.get(&(respondent.to_string(), phase, factor.to_string())).copied()
    }

    /// Pre (`x_a`) and post (`x_b`) scores of every respondent with both phases.
    pub fn paired_sample(&self, factor: &str) -> PairedSample<T> {
        let excluded: BTreeSet<&str> = self.excluded.iter().map(String::as_str).collect();
        let respondents: BTreeSet<&str> = self
            .scores
            .keys()
            .filter(|(r, _, f)| f == factor && !excluded.contains(r.as_str()))
            .map(|(r, _, _)| r.as_str())
            .collect();
        let pairs = respondents
            .into_iter()
            .filter_map(|r| {
                Some(Pair {
                    respondent_id: r.to_string(),
                    x_a: self.get(r, Phase::Pre, factor)?,
                    x_b: self.get(r, Phase::Post, factor)?,
                })
            })
            .collect();
        PairedSample::new(factor, pairs).expect("respondents are unique and scores finite")
    }

    pub fn factors(&self) -> &[String] {
        &self.factor_order
    }
}

/// Averages each factor's item values per respondent and phase.
pub fn factor_scores<T: Scalar>(
    responses: &[SurveyResponseSet],
    instrument: &InstrumentDefinition,
) -> Result<FactorScores<T>, StatsError> {
    let mut seen = BTreeSet::new();
    let mut phases: BTreeMap<&str, BTreeSet<Phase>> = BTreeMap::new();
    let mut scores = BTreeMap::new();
    for set in responses {
        if !seen.insert((set.respondent_id.as_str(), set.phase)) {
            return Err(StatsError::DuplicatePhase {
                respondent: set.respondent_id.clone(),
                phase: set.phase.to_string(),
            });
        }
        phases.entry(&set.respondent_id).or_default().insert(set.phase);
        for factor in &instrument.factors {
            let mut values = Vec::with_capacity(factor.items.len());
            for item in &factor.items {
                let v = set.answer(item).ok_or_else(|| StatsError::MissingItem {
                    respondent: set.respondent_id.clone(),
                    item: item.clone(),
                })?;
                values.push(T::from_u8(v).expect("small integer"));
            }
            scores.insert((set.respondent_id.clone(), set.phase, factor.name.clone()), mean(&values));
        }
    }
    let excluded: Vec<String> = phases.into_iter().filter(|(_, p)| p.len() < 2).map(|(r, _)| r.to_string()).collect();
    if !excluded.is_empty() {
        tracing::info!(count = excluded.len(), respondents = ?excluded, "excluding unpaired respondents");
    }
    Ok(FactorScores { scores, excluded, factor_order: instrument.factors.iter().map(|f| f.name.clone()).collect() })
}

/// Significance marker of a two-tailed p-value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stars {
    #[serde(rename = "")]
    None,
    #[serde(rename = "*")]
    One,
    #[serde(rename = "**")]
    Two,
    #[serde(rename = "***")]
    Three,
}

impl Stars {
    pub fn from_p<T: Scalar>(p: T) -> Self {
        if p < T::lit(0.001) {
            Stars::Three
        } else if p < T::lit(0.01) {
            Stars::Two
        } else if p < T::lit(0.05) {
            Stars::One
        } else {
            Stars::None
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stars::None => "",
            Stars::One => "*",
            Stars::Two => "**",
            Stars::Three => "***",
        }
    }
}

/// Result of comparing one factor before and after.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TestReport<T> {
    pub factor_name: String,
    pub n: usize,
    pub mean_pre: Option<T>,
    pub sd_pre: Option<T>,
    pub mean_post: Option<T>,
    pub sd_post: Option<T>,
    pub shapiro_w: Option<T>,
    pub shapiro_p: Option<T>,
    /// Whether the differences passed the normality screen; `None` if it could not run.
    pub normal: Option<bool>,
    pub t_stat: Option<T>,
    pub t_p: Option<T>,
    pub df: Option<usize>,
    pub wilcoxon_stat: Option<T>,
    pub wilcoxon_p: Option<T>,
    pub wilcoxon_method: Option<WilcoxonMethod>,
    pub effect: Option<EffectSize<T>>,
    pub stars: Stars,
    pub zero_variance: bool,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Comparison<T> {
    pub instrument_id: String,
    pub alpha_normality: T,
    /// Standard deviations are sample (n - 1) estimates.
    pub sd_convention: String,
    pub excluded: Vec<String>,
    pub reports: Vec<TestReport<T>>,
}

fn compare_factor<T: Scalar>(sample: &PairedSample<T>, alpha: T) -> TestReport<T> {
    let n = sample.len();
    let a = sample.a_values();
    let b = sample.b_values();
    let describe = |xs: &[T]| -> (Option<T>, Option<T>) {
        match xs.len() {
            0 => (None, None),
            1 => (Some(mean(xs)), None),
            _ => (Some(mean(xs)), Some(sd_unbiased(xs))),
        }
    };
    let (mean_pre, sd_pre) = describe(&a);
    let (mean_post, sd_post) = describe(&b);
    let mut report = TestReport {
        factor_name: sample.factor_name.clone(),
        n,
        mean_pre,
        sd_pre,
        mean_post,
        sd_post,
        shapiro_w: None,
        shapiro_p: None,
        normal: None,
        t_stat: None,
        t_p: None,
        df: None,
        wilcoxon_stat: None,
        wilcoxon_p: None,
        wilcoxon_method: None,
        effect: None,
        stars: Stars::None,
        zero_variance: false,
        errors: Vec::new(),
    };
    let note = |report: &mut TestReport<T>, stage: &str, e: StatsError| {
        if matches!(e, StatsError::ZeroVariance | StatsError::AllDifferencesZero) {
            report.zero_variance = true;
        }
        report.errors.push(format!("{stage}: {e}"));
    };
    if n < 3 {
        note(&mut report, "pairing", StatsError::TooFewObservations { needed: 3, got: n });
        return report;
    }

    match shapiro_wilk(&sample.differences()) {
        Ok(sw) => {
            report.shapiro_w = Some(sw.w);
            report.shapiro_p = Some(sw.p_value);
            report.normal = Some(sw.p_value >= alpha);
        }
        Err(e) => note(&mut report, "shapiro_wilk", e),
    }
    match paired_t_test(sample) {
        Ok(t) => {
            report.t_stat = Some(t.t);
            report.t_p = Some(t.p_value);
            report.df = Some(t.df);
            report.stars = Stars::from_p(t.p_value);
        }
        Err(e) => note(&mut report, "paired_t", e),
    }
    if report.normal != Some(true) {
        match wilcoxon_signed_rank(sample) {
            Ok(w) => {
                report.wilcoxon_stat = Some(w.statistic);
                report.wilcoxon_p = Some(w.p_value);
                report.wilcoxon_method = Some(w.method);
            }
            Err(e) => note(&mut report, "wilcoxon", e),
        }
    }
    match effect_size_dd(sample) {
        Ok(e) => report.effect = Some(e),
        Err(e) => note(&mut report, "effect_size", e),
    }
    report
}

/// Runs the full per-factor procedure: descriptives, Shapiro-Wilk on the
/// differences, paired t-test, Wilcoxon when normality is rejected (or could
/// not be assessed), then the paired effect size.
///
/// Factor-level failures are recorded on that factor's report; the other
/// factors still run. Reports follow the instrument's factor order.
pub fn run_comparison<T: Scalar>(
    pre: &[SurveyResponseSet],
    post: &[SurveyResponseSet],
    instrument: &InstrumentDefinition,
    alpha_normality: T,
) -> Result<Comparison<T>, StatsError> {
    instrument.validate()?;
    for (sets, expected) in [(pre, Phase::Pre), (post, Phase::Post)] {
        if let Some(bad) = sets.iter().find(|s| s.phase != expected) {
            return Err(StatsError::PhaseMismatch {
                respondent: bad.respondent_id.clone(),
                expected: expected.to_string(),
                found: bad.phase.to_string(),
            });
        }
    }
    let all: Vec<SurveyResponseSet> = pre.iter().chain(post).cloned().collect();
    let scores = factor_scores::<T>(&all, instrument)?;
    let reports =
        instrument.factors.iter().map(|f| compare_factor(&scores.paired_sample(&f.name), alpha_normality)).collect();
    Ok(Comparison {
        instrument_id: instrument.instrument_id.clone(),
        alpha_normality,
        sd_convention: "sample (n-1)".into(),
        excluded: scores.excluded,
        reports,
    })
}

fn display_name(factor: &str) -> String {
    let spaced = factor.replace('_', " ");
    let mut chars = spaced.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => spaced,
    }
}

/// Markdown table: factor, mean (SD) per phase, t with stars, |d_D|.
pub fn render_markdown<T: Scalar>(reports: &[TestReport<T>], pre_label: &str, post_label: &str) -> String {
    let fmt = |v: Option<T>, digits: usize| match v.and_then(|x| x.to_f64()) {
        Some(x) => format!("{x:.digits$}"),
        None => "n/a".to_string(),
    };
    let mut out = String::new();
    let _ = writeln!(out, "| Factor | {pre_label} mean (SD) | {post_label} mean (SD) | t | \\|d_D\\| |");
    out.push_str("|---|---|---|---|---|\n");
    for r in reports {
        let t = match r.t_stat {
            Some(_) => format!("{}{}", fmt(r.t_stat, 1), r.stars.as_str()),
            None => "n/a".into(),
        };
        let _ = writeln!(
            out,
            "| {} | {} ({}) | {} ({}) | {} | {} |",
            display_name(&r.factor_name),
            fmt(r.mean_pre, 1),
            fmt(r.sd_pre, 2),
            fmt(r.mean_post, 1),
            fmt(r.sd_post, 2),
            t,
            fmt(r.effect.map(|e| e.d_abs), 2),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(r: &str, phase: Phase, values: &[u8]) -> SurveyResponseSet {
        SurveyResponseSet {
            respondent_id: r.into(),
            phase,
            instrument_id: "TPB".into(),
            answers: values.iter().enumerate().map(|(i, &v)| (format!("i{:02}", i + 1), v)).collect(),
        }
    }

    #[test]
    fn factor_means() {
        let tpb = InstrumentDefinition::tpb();
        let mut vals = [7u8; 16];
        vals[..4].copy_from_slice(&[4, 5, 6, 7]);
        let s = factor_scores::<f64>(&[set("a", Phase::Pre, &vals)], &tpb).unwrap();
        assert_eq!(s.get("a", Phase::Pre, "intention"), Some(5.5));
        assert_eq!(s.get("a", Phase::Pre, "attitude"), Some(7.0));
        assert_eq!(s.excluded, vec!["a".to_string()]);
    }

    #[test]
    fn duplicate_phase_rows() {
        let tpb = InstrumentDefinition::tpb();
        let err =
            factor_scores::<f64>(&[set("a", Phase::Pre, &[4; 16]), set("a", Phase::Pre, &[5; 16])], &tpb).unwrap_err();
        assert!(matches!(err, StatsError::DuplicatePhase { .. }));
    }

    #[test]
    fn star_thresholds_are_right_open() {
        assert_eq!(Stars::from_p(0.05_f64), Stars::None);
        assert_eq!(Stars::from_p(0.049_f64), Stars::One);
        assert_eq!(Stars::from_p(0.01_f64), Stars::One);
        assert_eq!(Stars::from_p(0.0099_f64), Stars::Two);
        assert_eq!(Stars::from_p(0.001_f64), Stars::Two);
        assert_eq!(Stars::from_p(0.000_99_f64), Stars::Three);
    }

    #[test]
    fn identical_phases_give_degenerate_report() {
        let tpb = InstrumentDefinition::tpb();
        let pre: Vec<_> = (0..5).map(|i| set(&format!("r{i}"), Phase::Pre, &[(i % 7 + 1) as u8; 16])).collect();
        let post: Vec<_> = (0..5).map(|i| set(&format!("r{i}"), Phase::Post, &[(i % 7 + 1) as u8; 16])).collect();
        let cmp = run_comparison::<f64>(&pre, &post, &tpb, 0.05).unwrap();
        assert_eq!(cmp.reports.len(), 4);
        for r in &cmp.reports {
            assert!(r.zero_variance);
            assert!(r.t_stat.is_none());
            assert!(r.effect.is_none());
            assert_eq!(r.stars, Stars::None);
        }
    }

    #[test]
    fn phase_mismatch_is_reported() {
        let tpb = InstrumentDefinition::tpb();
        let err = run_comparison::<f64>(&[set("a", Phase::Post, &[4; 16])], &[], &tpb, 0.05).unwrap_err();
        assert!(matches!(err, StatsError::PhaseMismatch { .. }));
    }

    #[test]
    fn markdown_layout() {
        let sample =
            PairedSample::from_slices("behavioral_control", &[1.0_f64, 2.0, 3.0, 2.0], &[2.0, 4.0, 5.0, 3.5]).unwrap();
        let md = render_markdown(&[compare_factor(&sample, 0.05)], "pre", "post");
        let lines: Vec<&str> = md.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[2].starts_with("| Behavioral control | 2.0 (0.82) | 3.6 (1.25) | -"));
    }
}
