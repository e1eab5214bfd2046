mod common;

use std::collections::BTreeSet;

use common::{form, survey_csvs, synthetic, texts, TestServer};
use palm_core::engagement::{hover_payload, DisplaySettings};
use palm_core::ingestion::parse_survey_csv;
use palm_core::stats::{run_comparison, InstrumentDefinition};
use reqwest::StatusCode;
use serde_json::{json, Value};

async fn get(s: &TestServer, path: &str) -> (StatusCode, Value) {
    let r = reqwest::get(s.url(path)).await.unwrap();
    let status = r.status();
    (status, r.json().await.unwrap())
}

async fn ingest(s: &TestServer, token: Option<&str>, form: reqwest::multipart::Form) -> (StatusCode, Value) {
    let mut req = reqwest::Client::new().post(s.url("/api/v1/ingest")).multipart(form);
    if let Some(t) = token {
        req = req.header("x-admin-token", t);
    }
    let r = req.send().await.unwrap();
    let status = r.status();
    (status, r.json().await.unwrap())
}

fn current_pointer(s: &TestServer) -> Option<String> {
    std::fs::read_to_string(s.dir.path().join("store/CURRENT")).ok().map(|t| t.trim().to_string())
}

#[tokio::test]
async fn reads_before_any_snapshot_are_unavailable() {
    let s = TestServer::start(Some("tok")).await;
    for path in ["/api/v1/map", "/api/v1/courses/C001", "/api/v1/snapshot"] {
        let (status, body) = get(&s, path).await;
        assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE, "{path}");
        assert!(body.get("snapshot_id").is_some());
    }
}

#[tokio::test]
async fn ingest_needs_the_admin_token() {
    let data = synthetic(10, 5, 4, 1);
    let t = texts(&data);
    let s = TestServer::start(Some("tok")).await;
    assert_eq!(ingest(&s, None, form(&t)).await.0, StatusCode::UNAUTHORIZED);
    assert_eq!(ingest(&s, Some("wrong"), form(&t)).await.0, StatusCode::UNAUTHORIZED);
    assert_eq!(current_pointer(&s), None);

    let open = TestServer::start(None).await;
    assert_eq!(ingest(&open, Some(""), form(&t)).await.0, StatusCode::UNAUTHORIZED);
}

#[tokio::test]
async fn ingest_publishes_and_bad_input_changes_nothing() {
    let data = synthetic(20, 10, 6, 2);
    let t = texts(&data);
    let s = TestServer::start(Some("tok")).await;

    let (status, body) = ingest(&s, Some("tok"), form(&t)).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    let id = body["snapshot_id"].as_str().unwrap().to_string();
    assert_eq!(body["counts"]["courses"], 20);
    assert_eq!(body["counts"]["engagement_accepted"], 60);
    assert_eq!(current_pointer(&s).as_deref(), Some(id.as_str()));
    assert_eq!(get(&s, "/api/v1/map").await.1["snapshot_id"], id);

    // a broken engagement file
    let mut broken = texts(&data);
    broken.engagement.push_str("s999,C001,1.7,,,2024\n");
    let (status, body) = ingest(&s, Some("tok"), form(&broken)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"]["detail"]["file"], "engagement.csv");
    assert_eq!(body["error"]["detail"]["kind"]["error"], "out_of_range");
    assert_eq!(body["snapshot_id"], id);
    assert_eq!(current_pointer(&s).as_deref(), Some(id.as_str()));

    let mut ragged = texts(&data);
    ragged.grades.push_str("s001,C001\n");
    assert_eq!(ingest(&s, Some("tok"), form(&ragged)).await.0, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(current_pointer(&s).as_deref(), Some(id.as_str()));

    // unknown courses are skipped and reported, not fatal
    let mut extra = texts(&data);
    extra.engagement.push_str("s999,GHOST,0.5,0.5,0.5,2024\n");
    let (status, body) = ingest(&s, Some("tok"), form(&extra)).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(body["rejects"]["engagement"][0]["reason"], "unknown_course");
    assert_eq!(body["snapshot_id"], id, "rejected rows must not change the snapshot");

    let missing = reqwest::multipart::Form::new().text("engagement", t.engagement.clone());
    assert_eq!(ingest(&s, Some("tok"), missing).await.0, StatusCode::BAD_REQUEST);
}

async fn loaded(courses: usize, students: usize, per: usize) -> (TestServer, palm_core::synth::SynthData<f64>) {
    let data = synthetic(courses, students, per, 4);
    let s = TestServer::start(Some("tok")).await;
    let (status, _) = ingest(&s, Some("tok"), form(&texts(&data))).await;
    assert_eq!(status, StatusCode::CREATED);
    (s, data)
}

fn keys(v: &Value) -> BTreeSet<String> {
    v.as_object().unwrap().iter().filter(|(_, x)| !x.is_null()).map(|(k, _)| k.clone()).collect()
}

#[tokio::test]
async fn map_query_parameters() {
    let (s, data) = loaded(30, 20, 8).await;
    let me = &data.engagement[0].student_id;

    let (status, full) = get(&s, &format!("/api/v1/map?student={me}")).await;
    assert_eq!(status, StatusCode::OK);
    for layer in ["relevance", "individual", "cohort", "grades", "blocks"] {
        assert!(keys(&full).contains(layer), "{layer}");
    }
    assert_eq!(full["blocks"].as_array().unwrap().len(), 30);

    let (_, only) = get(&s, "/api/v1/map?layers=relevance").await;
    let k = keys(&only);
    assert!(k.contains("relevance") && !k.contains("individual") && !k.contains("cohort") && !k.contains("grades"));
    assert_eq!(only["relevance"], full["relevance"]);

    let (_, base) = get(&s, "/api/v1/map?layers=").await;
    assert!(["relevance", "individual", "cohort", "grades"].iter().all(|l| !keys(&base).contains(*l)));

    let (status, stranger) = get(&s, "/api/v1/map?student=nobody").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(stranger["individual"], json!([]));
    assert_eq!(stranger["grades"], json!([]));

    let (_, pts) = get(&s, &format!("/api/v1/map?student={me}&grade_mode=grade_point&layers=grades")).await;
    assert_eq!(pts["grades"][0]["grade"]["mode"], "grade_point");
    let (_, none) = get(&s, &format!("/api/v1/map?student={me}&grade_mode=none")).await;
    assert_eq!(none["grades"], json!([]));

    for bad in ["layers=bogus", "metrics=sleep", "grade_mode=stars", "metrics=", "colour=red"] {
        let (status, body) = get(&s, &format!("/api/v1/map?{bad}")).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{bad}");
        assert!(body["snapshot_id"].is_string());
    }
}

#[tokio::test]
async fn course_card_matches_core_output() {
    let (s, data) = loaded(30, 30, 10).await;
    let r = &data.engagement[3];
    let (status, card) = get(&s, &format!("/api/v1/courses/{}?student={}", r.course_id, r.student_id)).await;
    assert_eq!(status, StatusCode::OK);

    let snap = s.state.store.current().unwrap();
    let expected =
        hover_payload(&snap.hover_sources(), &r.course_id, Some(&r.student_id), &DisplaySettings::default()).unwrap();
    assert_eq!(card, serde_json::to_value(&expected).unwrap());
    assert_eq!(card["snapshot_id"], snap.snapshot_id);

    assert_eq!(get(&s, "/api/v1/courses/NOPE").await.0, StatusCode::NOT_FOUND);

    let untaken = data
        .layout
        .courses
        .iter()
        .find(|c| !data.engagement.iter().any(|e| e.course_id == c.course_id))
        .map(|c| c.course_id.clone());
    if let Some(id) = untaken {
        let (status, card) = get(&s, &format!("/api/v1/courses/{id}?student={}", r.student_id)).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(card["individual"]["value"], Value::Null);
        assert_eq!(card["cohort"], Value::Null);
        assert_eq!(card["grade"], Value::Null);
    }
}

#[tokio::test]
async fn snapshot_metadata() {
    let (s, data) = loaded(12, 6, 4).await;
    let (status, info) = get(&s, "/api/v1/snapshot").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(info["courses"], 12);
    assert_eq!(info["engagement_records"], data.engagement.len());
    assert_eq!(info["config"]["min_cohort_n"], 3);
}

async fn analyze(s: &TestServer, body: Value) -> (StatusCode, Value) {
    let r = reqwest::Client::new().post(s.url("/api/v1/analyze/survey")).json(&body).send().await.unwrap();
    let status = r.status();
    (status, r.json().await.unwrap())
}

#[tokio::test]
async fn survey_analysis() {
    let s = TestServer::start(None).await;
    let tpb = InstrumentDefinition::tpb();
    let (pre, post) = survey_csvs(&tpb, 29, 1.0, 7);
    let (status, body) = analyze(&s, json!({"instrument": "tpb", "pre": pre, "post": post})).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let names: Vec<&str> =
        body["reports"].as_array().unwrap().iter().map(|r| r["factor_name"].as_str().unwrap()).collect();
    assert_eq!(names, ["intention", "attitude", "subjective_norm", "behavioral_control"]);
    assert!(body.get("snapshot_id").is_some());
    assert_eq!(body["markdown"].as_str().unwrap().lines().count(), 6);

    // same numbers as the stats module
    let p = parse_survey_csv(pre.as_bytes(), &tpb).unwrap();
    let q = parse_survey_csv(post.as_bytes(), &tpb).unwrap();
    let direct = run_comparison::<f64>(&p.sets, &q.sets, &tpb, 0.05).unwrap();
    for (api, core) in body["reports"].as_array().unwrap().iter().zip(&direct.reports) {
        assert_eq!(api["t_stat"].as_f64(), core.t_stat);
        assert_eq!(api["t_p"].as_f64(), core.t_p);
    }

    let lads = InstrumentDefinition::lads();
    let (pre, post) = survey_csvs(&lads, 29, 1.5, 8);
    let (status, body) =
        analyze(&s, json!({"instrument": "lads", "pre": pre, "post": post, "alpha_normality": 0.1})).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["reports"].as_array().unwrap().len(), 5);
    assert_eq!(body["alpha_normality"], 0.1);

    let custom = serde_json::to_value(&tpb).unwrap();
    let (pre, post) = survey_csvs(&tpb, 10, 1.0, 9);
    assert_eq!(analyze(&s, json!({"instrument": custom, "pre": pre, "post": post})).await.0, StatusCode::OK);

    assert_eq!(analyze(&s, json!({"instrument": "mbti", "pre": "", "post": ""})).await.0, StatusCode::BAD_REQUEST);
    let (status, body) = analyze(&s, json!({"instrument": "tpb", "pre": "respondent_id,phase\n", "post": post})).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"]["detail"]["kind"]["error"], "header_mismatch");
}

#[tokio::test]
async fn readers_never_see_a_mixture_during_ingest() {
    let (s, _) = loaded(40, 20, 10).await;
    let first = s.state.store.current().unwrap().snapshot_id.clone();
    let other = texts(&synthetic(41, 20, 10, 99));
    let second_form = form(&other);
    let base = s.base.clone();
    let reader = tokio::spawn(async move {
        let client = reqwest::Client::new();
        let mut seen = BTreeSet::new();
        for _ in 0..60 {
            let v: Value = client.get(format!("{base}/api/v1/map?layers=")).send().await.unwrap().json().await.unwrap();
            let n = v["blocks"].as_array().unwrap().len();
            seen.insert((v["snapshot_id"].as_str().unwrap().to_string(), n));
        }
        seen
    });
    let (status, body) = ingest(&s, Some("tok"), second_form).await;
    assert_eq!(status, StatusCode::CREATED);
    let second = body["snapshot_id"].as_str().unwrap().to_string();
    for (id, blocks) in reader.await.unwrap() {
        // each response is wholly one snapshot or the other
        assert!((id == first && blocks == 40) || (id == second && blocks == 41), "{id} with {blocks} blocks");
    }
}

#[tokio::test]
async fn cors_origins_are_honoured() {
    let s = TestServer::start_with(|c| c.cors_allowed_origins = vec!["http://localhost:5173".into()]).await;
    let r = reqwest::Client::new()
        .get(s.url("/api/v1/map"))
        .header("origin", "http://localhost:5173")
        .send()
        .await
        .unwrap();
    assert_eq!(r.headers().get("access-control-allow-origin").unwrap(), "http://localhost:5173");
}
