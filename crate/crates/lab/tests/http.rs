mod common;

use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{header, Request, StatusCode};
use common::*;
use ise_lab::http::{router, ErrorBody};
use ise_lab::{ManualClock, SessionCreated, StepAck, StepDescriptor, StepKind};
use serde_json::json;
use tower::ServiceExt;

async fn call(
    app: &axum::Router,
    req: Request<Body>,
) -> (StatusCode, axum::http::HeaderMap, Vec<u8>) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let headers = resp.headers().clone();
    let body = to_bytes(resp.into_body(), usize::MAX)
        .await
        .unwrap()
        .to_vec();
    (status, headers, body)
}

fn post(uri: &str, body: serde_json::Value) -> Request<Body> {
    Request::post(uri)
        .header(header::CONTENT_TYPE, "application/json")
        .body(Body::from(body.to_string()))
        .unwrap()
}

fn get(uri: &str) -> Request<Body> {
    Request::get(uri).body(Body::empty()).unwrap()
}

#[tokio::test(flavor = "multi_thread")]
async fn full_session_over_http() {
    let dir = tempfile::tempdir().unwrap();
    let clock = Arc::new(ManualClock::new(5_000));
    let svc = Arc::new(open_service(dir.path(), &clock));
    let app = router(svc);

    let (status, _, body) = call(
        &app,
        post(
            "/sessions",
            json!({"participant_id": "H1", "age": 31, "consent": true, "seed": 3}),
        ),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED);
    let created: SessionCreated = serde_json::from_slice(&body).unwrap();
    let id = created.session_id.clone();
    assert_eq!(created.next.step_id, 0);

    let (status, _, body) = call(
        &app,
        post(
            "/sessions",
            json!({"participant_id": "H1", "consent": true, "seed": 3}),
        ),
    )
    .await;
    assert_eq!(status, StatusCode::CONFLICT);
    let err: ErrorBody = serde_json::from_slice(&body).unwrap();
    assert_eq!(err.error, "duplicate_session");

    let (status, _, body) = call(&app, get(&format!("/sessions/{id}/export"))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(
        serde_json::from_slice::<ErrorBody>(&body).unwrap().error,
        "not_finished"
    );

    let mut who = ScriptedParticipant::new(3);
    let mut checked_audio = false;
    loop {
        let (status, _, body) = call(&app, get(&format!("/sessions/{id}/next"))).await;
        if status == StatusCode::CONFLICT {
            break;
        }
        assert_eq!(status, StatusCode::OK);
        let step: StepDescriptor = serde_json::from_slice(&body).unwrap();
        if let StepKind::RecallTrial { stimulus, .. } = &step.step {
            if !checked_audio {
                checked_audio = true;
                let req = Request::get(&stimulus.url)
                    .header(header::RANGE, "bytes=0-43")
                    .body(Body::empty())
                    .unwrap();
                let (status, headers, bytes) = call(&app, req).await;
                assert_eq!(status, StatusCode::PARTIAL_CONTENT);
                assert_eq!(bytes.len(), 44);
                assert_eq!(&bytes[..4], b"RIFF");
                let total = fixture_library().get(&stimulus.condition).unwrap().wav_len;
                assert_eq!(
                    headers[header::CONTENT_RANGE].to_str().unwrap(),
                    format!("bytes 0-43/{total}")
                );
                assert_eq!(headers["x-content-sha256"].len(), 64);
                let (status, _, full) = call(&app, get(&stimulus.url)).await;
                assert_eq!(status, StatusCode::OK);
                assert_eq!(full.len() as u64, total);

                let other = if stimulus.condition == "silence" {
                    "sti_0.9"
                } else {
                    "silence"
                };
                let (status, _, body) =
                    call(&app, get(&format!("/sessions/{id}/stimuli/{other}"))).await;
                assert_eq!(status, StatusCode::FORBIDDEN);
                assert_eq!(
                    serde_json::from_slice::<ErrorBody>(&body).unwrap().error,
                    "wrong_condition"
                );

                let req = Request::get(&stimulus.url)
                    .header(header::RANGE, "bytes=5-2")
                    .body(Body::empty())
                    .unwrap();
                assert_eq!(call(&app, req).await.0, StatusCode::RANGE_NOT_SATISFIABLE);
            }
        }
        let payload = serde_json::to_value(who.answer(&step)).unwrap();
        let uri = format!("/sessions/{id}/steps/{}", step.step_id);
        let (status, _, body) = call(&app, post(&uri, payload.clone())).await;
        assert_eq!(status, StatusCode::OK, "{}", String::from_utf8_lossy(&body));
        let ack: StepAck = serde_json::from_slice(&body).unwrap();
        assert_eq!(ack.step_id, step.step_id);
        // Redelivery is idempotent.
        let (status, _, again) = call(&app, post(&uri, payload.clone())).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(again, body);
        // Skipping ahead is refused.
        let ahead = format!("/sessions/{id}/steps/{}", step.step_id + 5);
        let (status, _, body) = call(&app, post(&ahead, payload)).await;
        if ack.next_step_id != step.step_id + 5 {
            assert!(status == StatusCode::CONFLICT, "{status}");
            let err: ErrorBody = serde_json::from_slice(&body).unwrap();
            assert!(
                err.error == "out_of_order" || err.error == "session_closed",
                "{}",
                err.error
            );
        }
    }
    assert!(checked_audio);

    let (status, _, body) = call(&app, get(&format!("/sessions/{id}/export"))).await;
    assert_eq!(status, StatusCode::OK);
    let bundle: serde_json::Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(bundle["status"], "complete");
    assert_eq!(bundle["conditions"].as_array().unwrap().len(), 5);
}

#[tokio::test]
async fn error_bodies_and_status_codes() {
    let dir = tempfile::tempdir().unwrap();
    let clock = Arc::new(ManualClock::new(0));
    let app = router(Arc::new(open_service(dir.path(), &clock)));

    let (status, _, body) = call(&app, get("/sessions/nope/next")).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let err: ErrorBody = serde_json::from_slice(&body).unwrap();
    assert_eq!(
        (err.schema_version, err.error.as_str()),
        (1, "unknown_session")
    );

    let (status, _, body) = call(&app, post("/sessions", json!({"participant_id": "X"}))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(
        serde_json::from_slice::<ErrorBody>(&body).unwrap().error,
        "malformed"
    );

    let (status, _, body) = call(
        &app,
        post(
            "/sessions",
            json!({"participant_id": "X", "consent": false, "seed": 1}),
        ),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(
        serde_json::from_slice::<ErrorBody>(&body).unwrap().error,
        "consent_required"
    );

    let (_, _, body) = call(
        &app,
        post(
            "/sessions",
            json!({"participant_id": "X", "consent": true, "seed": 1}),
        ),
    )
    .await;
    let id = serde_json::from_slice::<SessionCreated>(&body)
        .unwrap()
        .session_id;

    let (status, _, body) = call(
        &app,
        post(
            &format!("/sessions/{id}/steps/0"),
            json!({"kind": "stroop-trial", "response": "rouge", "rt_ms": 500}),
        ),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(
        serde_json::from_slice::<ErrorBody>(&body).unwrap().error,
        "malformed"
    );

    let (status, _, body) = call(
        &app,
        post(
            &format!("/sessions/{id}/steps/3"),
            json!({"kind": "span-trial", "recalled": []}),
        ),
    )
    .await;
    assert_eq!(status, StatusCode::CONFLICT);
    let err: ErrorBody = serde_json::from_slice(&body).unwrap();
    assert_eq!(err.error, "out_of_order");
    assert!(err.message.contains("expected 0, got 3"));

    let (status, _, body) = call(
        &app,
        post(&format!("/sessions/{id}/abort"), json!({"reason": "test"})),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let v: serde_json::Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(v["status"], "aborted");
    let (status, _, body) = call(&app, get(&format!("/sessions/{id}/export"))).await;
    assert_eq!(status, StatusCode::OK);
    let v: serde_json::Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(v["partial"], true);
}
