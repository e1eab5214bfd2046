#![allow(dead_code)]

use std::path::Path;
use std::sync::Arc;

use palm_core::ingestion::{
    serialize_engagement_csv, serialize_grade_scale, serialize_grades_csv, serialize_layout, serialize_survey_csv,
    Phase, SurveyResponseSet,
};
use palm_core::stats::InstrumentDefinition;
use palm_core::synth::{generate, SynthData, SynthSpec};
use palm_server::{app_state, AppState, ServiceConfig};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use tokio::net::TcpListener;
use tokio::sync::oneshot;

pub struct TestServer {
    pub base: String,
    pub state: Arc<AppState>,
    pub dir: tempfile::TempDir,
    stop: Option<oneshot::Sender<()>>,
}

impl TestServer {
    pub async fn start(token: Option<&str>) -> Self {
        Self::start_with(|c| c.admin_token = token.map(String::from)).await
    }

    pub async fn start_with(adjust: impl FnOnce(&mut ServiceConfig)) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let mut config = ServiceConfig { store_path: dir.path().join("store"), ..ServiceConfig::default() };
        adjust(&mut config);
        let state = Arc::new(app_state(&config).unwrap());
        let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
        let base = format!("http://{}", listener.local_addr().unwrap());
        let (tx, rx) = oneshot::channel::<()>();
        let served = Arc::clone(&state);
        let cors = config.cors_allowed_origins.clone();
        tokio::spawn(async move {
            palm_server::serve(listener, served, &cors, async {
                let _ = rx.await;
            })
            .await
            .unwrap();
        });
        Self { base, state, dir, stop: Some(tx) }
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }
}

impl Drop for TestServer {
    fn drop(&mut self) {
        if let Some(tx) = self.stop.take() {
            let _ = tx.send(());
        }
    }
}

/// The four canonical input files of a synthetic data set.
pub struct InputTexts {
    pub layout: String,
    pub engagement: String,
    pub grades: String,
    pub grade_scale: String,
}

pub fn texts(data: &SynthData<f64>) -> InputTexts {
    InputTexts {
        layout: serialize_layout(&data.layout),
        engagement: serialize_engagement_csv(&data.engagement),
        grades: serialize_grades_csv(&data.grades),
        grade_scale: serialize_grade_scale(&data.scale),
    }
}

pub fn synthetic(courses: usize, students: usize, per_student: usize, seed: u64) -> SynthData<f64> {
    generate(SynthSpec { courses, students, courses_per_student: per_student, seed })
}

pub fn write_inputs(dir: &Path, t: &InputTexts) {
    std::fs::create_dir_all(dir).unwrap();
    std::fs::write(dir.join("layout.json"), &t.layout).unwrap();
    std::fs::write(dir.join("engagement.csv"), &t.engagement).unwrap();
    std::fs::write(dir.join("grades.csv"), &t.grades).unwrap();
    std::fs::write(dir.join("grade_scale.json"), &t.grade_scale).unwrap();
}

pub fn form(t: &InputTexts) -> reqwest::multipart::Form {
    reqwest::multipart::Form::new()
        .text("layout", t.layout.clone())
        .text("engagement", t.engagement.clone())
        .text("grades", t.grades.clone())
        .text("grade_scale", t.grade_scale.clone())
}

/// Pre and post survey CSVs for `n` respondents. Items of the last factor
/// rise by `lift` on average; everything else gets symmetric noise.
pub fn survey_csvs(instrument: &InstrumentDefinition, n: usize, lift: f64, seed: u64) -> (String, String) {
    let mut rng = StdRng::seed_from_u64(seed);
    let clamp = |v: f64| v.round().clamp(1.0, 7.0) as u8;
    let items: Vec<String> = instrument.item_ids().map(String::from).collect();
    let last = instrument.factors.last().unwrap();
    let mut pre = Vec::new();
    let mut post = Vec::new();
    for i in 0..n {
        let id = format!("r{i:02}");
        let gain: f64 = rng.gen_range(lift - 1.4..lift + 1.4);
        let mut a = Vec::new();
        let mut b = Vec::new();
        for item in &items {
            let base: f64 = rng.gen_range(2.5..5.5);
            a.push((item.clone(), clamp(base)));
            let after = if last.items.contains(item) { base + gain } else { base + rng.gen_range(-1.0..1.0) };
            b.push((item.clone(), clamp(after)));
        }
        let set = |phase, answers| SurveyResponseSet {
            respondent_id: id.clone(),
            phase,
            instrument_id: instrument.instrument_id.clone(),
            answers,
        };
        pre.push(set(Phase::Pre, a));
        post.push(set(Phase::Post, b));
    }
    (serialize_survey_csv(&pre, instrument), serialize_survey_csv(&post, instrument))
}
