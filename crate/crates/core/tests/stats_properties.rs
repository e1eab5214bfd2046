use palm_core::ingestion::{Phase, SurveyResponseSet};
use palm_core::stats::{
    effect_size_dd, paired_t_test, run_comparison, sd_unbiased, wilcoxon_signed_rank, InstrumentDefinition,
    PairedSample, Stars, WilcoxonMethod,
};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn paired() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (5usize..60).prop_flat_map(|n| {
        (prop::collection::vec(1.0f64..7.0, n), prop::collection::vec(-2.0f64..2.0, n)).prop_map(|(a, noise)| {
            let b = a.iter().zip(&noise).map(|(x, e)| x + e).collect();
            (a, b)
        })
    })
}

proptest! {
    #[test]
    fn t_equals_sqrt_n_times_d((a, b) in paired()) {
        let s = PairedSample::from_slices("f", &a, &b).unwrap();
        let t = paired_t_test(&s).unwrap();
        let e = effect_size_dd(&s).unwrap();
        let n = a.len() as f64;
        prop_assert!((t.t - n.sqrt() * e.d).abs() <= 1e-9);
    }

    #[test]
    fn pooled_sd_is_sd_of_differences((a, b) in paired()) {
        let s = PairedSample::from_slices("f", &a, &b).unwrap();
        let e = effect_size_dd(&s).unwrap();
        let sd = sd_unbiased(&s.differences());
        prop_assert!((e.s_d - sd).abs() <= 1e-12 * sd.max(1.0));
        let n = a.len() as f64;
        let reassembled = n / (n - 1.0) * (e.s_a_sq + e.s_b_sq - 2.0 * e.s_ab);
        prop_assert!((e.s_d * e.s_d - reassembled).abs() <= 1e-12 * reassembled.max(1.0));
    }

    #[test]
    fn translation_leaves_tests_unchanged((a, b) in paired(), shift in -50.0f64..50.0) {
        let s = PairedSample::from_slices("f", &a, &b).unwrap();
        let a2: Vec<f64> = a.iter().map(|x| x + shift).collect();
        let b2: Vec<f64> = b.iter().map(|x| x + shift).collect();
        let s2 = PairedSample::from_slices("f", &a2, &b2).unwrap();
        let (t1, t2) = (paired_t_test(&s).unwrap(), paired_t_test(&s2).unwrap());
        let (e1, e2) = (effect_size_dd(&s).unwrap(), effect_size_dd(&s2).unwrap());
        prop_assert!((t1.t - t2.t).abs() <= 1e-9 * t1.t.abs().max(1.0));
        prop_assert!((t1.p_value - t2.p_value).abs() <= 1e-9);
        prop_assert!((e1.d - e2.d).abs() <= 1e-9);
    }

    #[test]
    fn swapping_phases_negates((a, b) in paired()) {
        let s = PairedSample::from_slices("f", &a, &b).unwrap();
        let sw = s.swapped();
        let (t1, t2) = (paired_t_test(&s).unwrap(), paired_t_test(&sw).unwrap());
        prop_assert_eq!(t1.t, -t2.t);
        prop_assert_eq!(t1.mean_diff, -t2.mean_diff);
        prop_assert_eq!(t1.p_value, t2.p_value);
        let (e1, e2) = (effect_size_dd(&s).unwrap(), effect_size_dd(&sw).unwrap());
        prop_assert!((e1.d_abs - e2.d_abs).abs() <= 1e-12);
        let (w1, w2) = (wilcoxon_signed_rank(&s).unwrap(), wilcoxon_signed_rank(&sw).unwrap());
        prop_assert_eq!(w1.p_value, w2.p_value);
    }

    #[test]
    fn p_values_are_probabilities((a, b) in paired()) {
        let s = PairedSample::from_slices("f", &a, &b).unwrap();
        let t = paired_t_test(&s).unwrap();
        let w = wilcoxon_signed_rank(&s).unwrap();
        prop_assert!((0.0..=1.0).contains(&t.p_value));
        prop_assert!((0.0..=1.0).contains(&w.p_value));
    }
}

/// Two-tailed p by listing every sign assignment of ranks 1..n.
fn brute_force_p(diffs: &[f64]) -> f64 {
    let n = diffs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diffs[i].abs().partial_cmp(&diffs[j].abs()).unwrap());
    let mut rank = vec![0u32; n];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r as u32 + 1;
    }
    let observed: u32 = (0..n).filter(|&i| diffs[i] > 0.0).map(|i| rank[i]).sum();
    let (mut le, mut ge) = (0u64, 0u64);
    for mask in 0u32..(1 << n) {
        let w: u32 = (0..n).filter(|&k| mask & (1 << k) != 0).map(|k| k as u32 + 1).sum();
        if w <= observed {
            le += 1;
        }
        if w >= observed {
            ge += 1;
        }
    }
    let total = (1u64 << n) as f64;
    (2.0 * le.min(ge) as f64 / total).min(1.0)
}

#[test]
fn exact_wilcoxon_equals_enumeration() {
    let mut rng = StdRng::seed_from_u64(7);
    for n in 3..=12 {
        for _ in 0..20 {
            let diffs: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.5)).collect();
            let zeros = vec![0.0; n];
            let s = PairedSample::from_slices("f", &diffs, &zeros).unwrap();
            let r = wilcoxon_signed_rank(&s).unwrap();
            assert_eq!(r.method, WilcoxonMethod::Exact);
            assert_eq!(r.p_value, brute_force_p(&diffs), "n={n} diffs={diffs:?}");
        }
    }
}

#[test]
fn wilcoxon_small_cases() {
    let s = PairedSample::from_slices("f", &[1.0, 2.0, 3.0], &[0.0, 0.0, 0.0]).unwrap();
    let r = wilcoxon_signed_rank(&s).unwrap();
    assert_eq!((r.statistic, r.p_value), (0.0, 0.25));
    assert_eq!(brute_force_p(&[1.0, 2.0, 3.0]), 0.25);
}

fn response(r: &str, phase: Phase, answers: &[u8]) -> SurveyResponseSet {
    SurveyResponseSet {
        respondent_id: r.into(),
        phase,
        instrument_id: "TPB".into(),
        answers: answers.iter().enumerate().map(|(i, &v)| (format!("i{:02}", i + 1), v)).collect(),
    }
}

/// 29 respondents whose behavioral-control items rise by about one scale
/// point with unit-ish spread; the other factors get small noisy shifts.
fn tpb_fixture(seed: u64) -> (Vec<SurveyResponseSet>, Vec<SurveyResponseSet>) {
    let mut rng = StdRng::seed_from_u64(seed);
    let clamp = |v: f64| v.round().clamp(1.0, 7.0) as u8;
    let mut pre = Vec::new();
    let mut post = Vec::new();
    for i in 0..29 {
        let id = format!("p{i:02}");
        let base: Vec<f64> = (0..16).map(|_| rng.gen_range(3.0..5.5)).collect();
        let pre_answers: Vec<u8> = base.iter().map(|&v| clamp(v)).collect();
        let lift: f64 = rng.gen_range(-0.5..2.3);
        let post_answers: Vec<u8> = base
            .iter()
            .enumerate()
            .map(|(k, &v)| if k >= 13 { clamp(v + lift) } else { clamp(v + rng.gen_range(-1.0..1.3)) })
            .collect();
        pre.push(response(&id, Phase::Pre, &pre_answers));
        post.push(response(&id, Phase::Post, &post_answers));
    }
    (pre, post)
}

#[test]
fn engineered_tpb_fixture_flags_large_effect() {
    let tpb = InstrumentDefinition::tpb();
    let (pre, post) = tpb_fixture(42);
    let cmp = run_comparison::<f64>(&pre, &post, &tpb, 0.05).unwrap();
    let names: Vec<&str> = cmp.reports.iter().map(|r| r.factor_name.as_str()).collect();
    assert_eq!(names, ["intention", "attitude", "subjective_norm", "behavioral_control"]);
    let bc = &cmp.reports[3];
    let effect = bc.effect.unwrap();
    assert_eq!(bc.n, 29);
    assert!(effect.is_large(), "|d| = {}", effect.d_abs);
    assert!(effect.d_abs > 0.9 && effect.d_abs < 1.6, "|d| = {}", effect.d_abs);
    assert_eq!(bc.stars, Stars::Three);
    assert!(bc.t_stat.unwrap() < 0.0);
    // the report's t and effect obey the same identity as the raw routines
    assert!((bc.t_stat.unwrap() - 29f64.sqrt() * effect.d).abs() < 1e-9);
    for r in &cmp.reports {
        assert_eq!(r.wilcoxon_p.is_some(), r.normal != Some(true));
    }
}

#[test]
fn unpaired_respondents_are_excluded() {
    let tpb = InstrumentDefinition::tpb();
    let (mut pre, post) = tpb_fixture(3);
    pre.push(response("late", Phase::Pre, &[4; 16]));
    let cmp = run_comparison::<f64>(&pre, &post, &tpb, 0.05).unwrap();
    assert_eq!(cmp.excluded, vec!["late".to_string()]);
    assert!(cmp.reports.iter().all(|r| r.n == 29));
}

#[test]
fn single_precision_pipeline_agrees() {
    let tpb = InstrumentDefinition::tpb();
    let (pre, post) = tpb_fixture(42);
    let wide = run_comparison::<f64>(&pre, &post, &tpb, 0.05).unwrap();
    let narrow = run_comparison::<f32>(&pre, &post, &tpb, 0.05).unwrap();
    for (w, n) in wide.reports.iter().zip(&narrow.reports) {
        let (tw, tn) = (w.t_stat.unwrap(), n.t_stat.unwrap() as f64);
        assert!((tw - tn).abs() < 1e-3 * tw.abs().max(1.0));
    }
}
