use std::collections::BTreeSet;
use std::path::Path;

use anaphora_core::metrics::{read_judgments, Choice, Role};
use anaphora_core::miner::{HighlightSpan, PairLabel, RankingPair};
use anaphora_service::{router, shared, AppState, Campaign, CampaignConfig, Store};
use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

const FORMS: [(&str, &str); 3] = [("he", "it"), ("i", "we"), ("they", "it")];

fn pair(i: usize) -> RankingPair {
    let (r, s) = FORMS[i % FORMS.len()];
    let cap = |w: &str| if w == "i" { "I".to_string() } else { w[..1].to_uppercase() + &w[1..] };
    let reference = format!("{} went home on day {i} .", cap(r));
    let sys = format!("{} went home on day {i} .", cap(s));
    RankingPair {
        id: format!("d0s{i}m0"),
        lang_pair: "de-en".into(),
        ref_context: vec![format!("Context {i} a ."), format!("Context {i} b .")],
        reference,
        sys_context: vec![],
        sys,
        ref_pronouns: vec![0],
        sys_pronouns: vec![0],
        mismatch_forms: vec![(r.into(), s.into())],
        source_text: Some(format!("Er ging am Tag {i} nach Hause .")),
        label: PairLabel::RefBetter,
        highlight_spans: vec![HighlightSpan { reference: (0, cap(r).len()), sys: (0, cap(s).len()) }],
    }
}

fn campaign(n: usize, show_source: bool) -> Campaign {
    let cfg = CampaignConfig {
        seed: 17,
        show_source,
        annotators: vec!["ann1".into(), "ann2".into(), "ann3".into()],
        ..CampaignConfig::default()
    };
    Campaign::create("study", (0..n).map(pair).collect(), cfg).unwrap()
}

fn app(dir: &Path, c: Option<Campaign>) -> AppState {
    let mut store = Store::open(dir).unwrap();
    if let Some(c) = c {
        store.add_campaign(c).unwrap();
    }
    shared(store)
}

async fn call(state: &AppState, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = router(state.clone()).oneshot(req).await.unwrap();
    let status = resp.status();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn json_call(state: &AppState, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (s, b) = call(state, method, uri, body).await;
    (s, serde_json::from_slice(&b).unwrap_or(Value::Null))
}

async fn next(state: &AppState, who: &str) -> Value {
    let (s, v) = json_call(state, "GET", &format!("/campaigns/study/next?annotator={who}"), None).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    v
}

async fn submit(state: &AppState, who: &str, item: &str, choice: &str) -> (StatusCode, Value) {
    let body = json!({ "annotator": who, "item_id": item, "choice": choice });
    json_call(state, "POST", "/campaigns/study/judgments", Some(body)).await
}

fn keys(v: &Value, out: &mut BTreeSet<String>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                out.insert(k.clone());
                keys(x, out);
            }
        }
        Value::Array(a) => a.iter().for_each(|x| keys(x, out)),
        _ => {}
    }
}

#[tokio::test]
async fn tasks_are_blinded() {
    let dir = tempfile::tempdir().unwrap();
    let state = app(dir.path(), Some(campaign(30, false)));
    let mut ref_first = 0;
    for _ in 0..30 {
        let v = next(&state, "ann1").await;
        let task = &v["task"];
        let mut names = BTreeSet::new();
        keys(task, &mut names);
        let allowed = [
            "item_id", "context", "candidate_a", "candidate_b", "text", "highlight", "start", "end", "bold_sentence",
            "position", "total",
        ];
        assert!(names.iter().all(|k| allowed.contains(&k.as_str())), "unexpected fields {names:?}");
        let raw = task.to_string().to_lowercase();
        for word in ["reference", "noisy", "\"ref\"", "\"sys\"", "label", "role", "source"] {
            assert!(!raw.contains(word), "`{word}` in {raw}");
        }
        let id = task["item_id"].as_str().unwrap().to_string();
        let i: usize = id[3..id.len() - 2].parse().unwrap();
        let p = pair(i);
        let a = task["candidate_a"]["text"].as_str().unwrap();
        let b = task["candidate_b"]["text"].as_str().unwrap();
        assert_eq!(BTreeSet::from([a, b]), BTreeSet::from([p.reference.as_str(), p.sys.as_str()]));
        if a == p.reference {
            ref_first += 1;
        }
        for side in ["candidate_a", "candidate_b"] {
            let h = &task[side]["highlight"];
            assert_eq!(h["start"], 0);
            assert!(h["end"].as_u64().unwrap() >= 1);
        }
        assert_eq!(task["context"].as_array().unwrap().len(), 2);
        assert_eq!(task["bold_sentence"], 2);
        submit(&state, "ann1", &id, "A").await;
    }
    assert!(ref_first > 5 && ref_first < 25, "A/B assignment looks constant: {ref_first}/30");
    assert_eq!(next(&state, "ann1").await["done"], true);
}

#[tokio::test]
async fn source_shown_only_when_configured() {
    let dir = tempfile::tempdir().unwrap();
    let state = app(dir.path(), Some(campaign(3, true)));
    let v = next(&state, "ann2").await;
    assert!(v["task"]["source"].as_str().unwrap().starts_with("Er ging"));
}

#[tokio::test]
async fn every_annotator_sees_every_item_once() {
    let dir = tempfile::tempdir().unwrap();
    let state = app(dir.path(), Some(campaign(25, false)));
    let mut orders = vec![];
    for who in ["ann1", "ann2", "ann3"] {
        let mut order = vec![];
        loop {
            let v = next(&state, who).await;
            if v["done"] == true {
                assert_eq!(v["judged"], 25);
                break;
            }
            assert_eq!(v["task"]["position"], order.len());
            let id = v["task"]["item_id"].as_str().unwrap().to_string();
            let (s, _) = submit(&state, who, &id, "tie").await;
            assert_eq!(s, StatusCode::OK);
            order.push(id);
        }
        let distinct: BTreeSet<&String> = order.iter().collect();
        assert_eq!((order.len(), distinct.len()), (25, 25));
        orders.push(order);
    }
    assert_ne!(orders[0], orders[1]);
}

#[tokio::test]
async fn status_codes() {
    let dir = tempfile::tempdir().unwrap();
    let state = app(dir.path(), Some(campaign(4, false)));
    let item = pair(0).id;
    assert_eq!(submit(&state, "ann1", &item, "A").await.0, StatusCode::OK);
    assert_eq!(submit(&state, "ann1", &item, "C").await.0, StatusCode::BAD_REQUEST);
    assert_eq!(submit(&state, "ann1", &item, "a").await.0, StatusCode::BAD_REQUEST);
    assert_eq!(submit(&state, "nobody", &item, "A").await.0, StatusCode::NOT_FOUND);
    assert_eq!(submit(&state, "ann1", "missing", "A").await.0, StatusCode::NOT_FOUND);
    let (s, v) = submit(&state, "ann1", &item, "B").await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!((v["previous"].as_str(), v["choice"].as_str()), (Some("A"), Some("B")));

    let (s, _) = json_call(&state, "POST", "/campaigns/study/judgments", Some(json!({ "annotator": "ann1" }))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(call(&state, "GET", "/campaigns/nope/next?annotator=ann1", None).await.0, StatusCode::NOT_FOUND);
    assert_eq!(call(&state, "GET", "/campaigns/study/next?annotator=zed", None).await.0, StatusCode::NOT_FOUND);
    assert_eq!(call(&state, "GET", "/campaigns/study/next", None).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(call(&state, "GET", "/campaigns/nope/report", None).await.0, StatusCode::NOT_FOUND);
    assert_eq!(call(&state, "GET", "/campaigns/nope/export", None).await.0, StatusCode::NOT_FOUND);
    // one annotator only
    assert_eq!(call(&state, "GET", "/campaigns/study/report", None).await.0, StatusCode::BAD_REQUEST);

    // the invalid submissions left no trace; the revision is kept with last write winning
    let (s, body) = call(&state, "GET", "/campaigns/study/export", None).await;
    assert_eq!(s, StatusCode::OK);
    let lines: Vec<&str> = std::str::from_utf8(&body).unwrap().lines().collect();
    assert_eq!(lines.len(), 1);
    assert!(lines[0].contains("\"choice\":\"B\""));
    let journal = std::fs::read_to_string(dir.path().join("study.journal.jsonl")).unwrap();
    assert_eq!(journal.lines().count(), 2);
    assert!(journal.lines().nth(1).unwrap().contains("\"kind\":\"revision\""));
}

#[tokio::test]
async fn judgments_survive_restart() {
    let dir = tempfile::tempdir().unwrap();
    let state = app(dir.path(), Some(campaign(6, false)));
    let mut done = vec![];
    for _ in 0..4 {
        let id = next(&state, "ann2").await["task"]["item_id"].as_str().unwrap().to_string();
        submit(&state, "ann2", &id, "B").await;
        done.push(id);
    }
    let before = call(&state, "GET", "/campaigns/study/export", None).await.1;
    drop(state);

    let state = app(dir.path(), None);
    let after = call(&state, "GET", "/campaigns/study/export", None).await.1;
    assert_eq!(before, after);
    let v = next(&state, "ann2").await;
    assert_eq!(v["judged"], 4);
    assert!(!done.contains(&v["task"]["item_id"].as_str().unwrap().to_string()));
    assert_eq!(v["task"]["position"], 4);
}

#[tokio::test]
async fn report_matches_agreement_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    let camp = campaign(10, false);
    let state = app(dir.path(), Some(camp.clone()));
    // full agreement on the reference
    for p in &camp.pairs {
        for who in ["ann1", "ann2"] {
            let choice = if camp.displayed_order(who, &p.id).0 == Role::Reference { "A" } else { "B" };
            assert_eq!(submit(&state, who, &p.id, choice).await.0, StatusCode::OK);
        }
    }
    let (s, v) = json_call(&state, "GET", "/campaigns/study/report", None).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["report"]["ac1_incl_ties"], 1.0);
    assert_eq!(v["report"]["avg_pct_ref"], 1.0);
    assert_eq!(v["by_pronoun_pair"].as_array().unwrap().len(), 3);

    // ann2 flips one item: nine of ten agree
    let last = &camp.pairs[9].id;
    let flip = if camp.displayed_order("ann2", last).0 == Role::Reference { "B" } else { "A" };
    assert_eq!(submit(&state, "ann2", last, flip).await.0, StatusCode::CONFLICT);
    let (_, v) = json_call(&state, "GET", "/campaigns/study/report", None).await;
    let hand = (0.9 - 0.095) / (1.0 - 0.095);
    assert!((v["report"]["ac1_excl_ties"].as_f64().unwrap() - hand).abs() < 1e-12);
    assert!((hand - 0.8895).abs() < 1e-4);

    let (_, body) = call(&state, "GET", "/campaigns/study/export", None).await;
    let path = dir.path().join("export.jsonl");
    std::fs::write(&path, body).unwrap();
    let records = read_judgments(&path).unwrap();
    assert_eq!(records.len(), 20);
    assert!(records.iter().all(|r| r.displayed_order.is_some() && r.choice != Choice::Tie));
}

#[tokio::test]
async fn concurrent_submissions_all_land() {
    let dir = tempfile::tempdir().unwrap();
    let camp = campaign(40, false);
    let state = app(dir.path(), Some(camp.clone()));
    let mut handles = vec![];
    for who in ["ann1", "ann2", "ann3"] {
        for p in camp.pairs.clone() {
            let state = state.clone();
            handles.push(tokio::spawn(async move { submit(&state, who, &p.id, "A").await.0 }));
        }
    }
    for h in handles {
        assert_eq!(h.await.unwrap(), StatusCode::OK);
    }
    drop(state);
    let store = Store::open(dir.path()).unwrap();
    assert_eq!(store.judgments("study").unwrap().len(), 120);
}
