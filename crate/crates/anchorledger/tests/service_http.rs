//! HTTP transport checks: header handling, query decoding and status
//! mapping through a real axum listener bound to an ephemeral port.

use std::sync::{Arc, RwLock};

use serde_json::{json, Value};

use anchorledger::service::{AppState, Node, ServiceConfig};

const KEY_HEX: &str = "202122232425262728292a2b2c2d2e2f303132333435363738393a3b3c3d3e3f";
const T0: i64 = 1_700_000_000;

fn spawn_service() -> (String, tempfile::TempDir, tokio::runtime::Runtime) {
    let dir = tempfile::tempdir().unwrap();
    let config = ServiceConfig {
        listen_addr: "127.0.0.1:0".into(),
        token_key_hex: Some(KEY_HEX.into()),
        token_ttl_seconds: 3600,
        bootstrap_controller: "admin-1".into(),
        validators: (0..3)
            .map(|i| anchorledger::consensus::ValidatorSpec {
                validator_id: format!("v{i}"),
                behavior: anchorledger::consensus::BehaviorKind::Honest,
                seed: None,
            })
            .collect(),
        chain_file: dir.path().join("ledger.chain"),
        store_dir: dir.path().join("store"),
        server_id: "node-http".into(),
    };
    let node = Node::start(&config, None, T0).unwrap();
    let state = Arc::new(AppState {
        node: RwLock::new(node),
        clock: Box::new(|| T0 + 5),
    });
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_all()
        .build()
        .unwrap();
    let listener =
        runtime.block_on(async { tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap() });
    let addr = listener.local_addr().unwrap();
    runtime.spawn(anchorledger::service::serve(state, listener));
    (format!("http://{addr}"), dir, runtime)
}

#[test]
fn transport_end_to_end() {
    let (url, _dir, _runtime) = spawn_service();
    let client = reqwest::blocking::Client::new();

    // Register + login over the wire.
    let resp = client
        .post(format!("{url}/auth/register"))
        .json(&json!({ "userId": "admin-1", "secret": "pw" }))
        .send()
        .unwrap();
    assert_eq!(resp.status().as_u16(), 200);
    let resp = client
        .post(format!("{url}/auth/login"))
        .json(&json!({ "userId": "admin-1", "secret": "pw" }))
        .send()
        .unwrap();
    assert_eq!(resp.status().as_u16(), 200);
    let token = resp.json::<Value>().unwrap()["token"]
        .as_str()
        .unwrap()
        .to_string();

    // Bearer header is required and honored.
    let unauthorized = client
        .post(format!("{url}/admin/policy"))
        .json(&json!({ "functionalityName": "HR Data Access" }))
        .send()
        .unwrap();
    assert_eq!(unauthorized.status().as_u16(), 401);
    let created = client
        .post(format!("{url}/admin/policy"))
        .bearer_auth(&token)
        .json(&json!({ "functionalityName": "HR Data Access" }))
        .send()
        .unwrap();
    assert_eq!(created.status().as_u16(), 200);

    // Percent-encoded query parameters decode server-side.
    let check = client
        .get(format!(
            "{url}/admin/check?userId=admin-1&functionality=HR%20Data%20Access"
        ))
        .bearer_auth(&token)
        .send()
        .unwrap();
    assert_eq!(check.status().as_u16(), 200);
    assert_eq!(
        check.json::<Value>().unwrap()["hasPermission"],
        json!(false)
    );

    // Unknown routes come back as JSON 404s.
    let missing = client.get(format!("{url}/definitely/not")).send().unwrap();
    assert_eq!(missing.status().as_u16(), 404);
    assert!(missing.json::<Value>().unwrap()["error"].is_string());

    // Malformed JSON body is a 400.
    let bad = client
        .post(format!("{url}/auth/login"))
        .header("content-type", "application/json")
        .body("{oops")
        .send()
        .unwrap();
    assert_eq!(bad.status().as_u16(), 400);

    // Chain summaries are public and already hold this session's blocks.
    let chain = client.get(format!("{url}/chain")).send().unwrap();
    let rows = chain.json::<Value>().unwrap();
    let rows = rows.as_array().unwrap().clone();
    assert!(rows.len() >= 4, "genesis, bootstrap, audits, policy block");
    assert!(rows
        .iter()
        .any(|row| row["payloadKind"] == json!("CreatePolicy")));
}
