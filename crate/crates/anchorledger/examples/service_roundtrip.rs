//! Run the HTTP service on an ephemeral port and drive the whole flow
//! over the wire: register, login, onboard, policy, grant, upload,
//! download, verify.
//!
//! ```bash
//! cargo run --example service_roundtrip
//! ```

use std::sync::{Arc, RwLock};

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use serde_json::{json, Value};

use anchorledger::consensus::{BehaviorKind, ValidatorSpec};
use anchorledger::service::{system_clock, AppState, Node, ServiceConfig};

fn main() -> anyhow::Result<()> {
    let dir = tempfile::tempdir()?;
    let config = ServiceConfig {
        listen_addr: "127.0.0.1:0".into(),
        token_key_hex: Some("ab".repeat(32)),
        token_ttl_seconds: 3600,
        bootstrap_controller: "admin-1".into(),
        validators: (0..5)
            .map(|i| ValidatorSpec {
                validator_id: format!("v{i}"),
                behavior: BehaviorKind::Honest,
                seed: None,
            })
            .collect(),
        chain_file: dir.path().join("ledger.chain"),
        store_dir: dir.path().join("store"),
        server_id: "example-node".into(),
    };

    let node = Node::start(&config, None, system_clock())?;
    let state = Arc::new(AppState {
        node: RwLock::new(node),
        clock: Box::new(system_clock),
    });
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_all()
        .build()?;
    let listener = runtime.block_on(tokio::net::TcpListener::bind("127.0.0.1:0"))?;
    let url = format!("http://{}", listener.local_addr()?);
    runtime.spawn(anchorledger::service::serve(state, listener));
    println!("service on {url}");

    let http = reqwest::blocking::Client::new();
    let post = |path: &str, token: Option<&str>, body: Value| -> anyhow::Result<Value> {
        let mut req = http.post(format!("{url}{path}")).json(&body);
        if let Some(token) = token {
            req = req.bearer_auth(token);
        }
        let resp = req.send()?;
        let status = resp.status();
        let body: Value = resp.json()?;
        println!("POST {path} -> {status} {body}");
        Ok(body)
    };

    post(
        "/auth/register",
        None,
        json!({ "userId": "admin-1", "secret": "pw" }),
    )?;
    let token = post(
        "/auth/login",
        None,
        json!({ "userId": "admin-1", "secret": "pw" }),
    )?["token"]
        .as_str()
        .unwrap()
        .to_string();
    post(
        "/admin/onboard",
        Some(&token),
        json!({ "userId": "123", "authorityRole": "User", "orgRole": "HR" }),
    )?;
    post(
        "/admin/policy",
        Some(&token),
        json!({ "functionalityName": "HR Data Access" }),
    )?;
    post(
        "/admin/permission",
        Some(&token),
        json!({ "userId": "123", "functionalityName": "HR Data Access", "grant": true }),
    )?;

    // The user uploads a document and reads it back.
    post(
        "/auth/register",
        None,
        json!({ "userId": "123", "secret": "pw2" }),
    )?;
    let user_token = post(
        "/auth/login",
        None,
        json!({ "userId": "123", "secret": "pw2" }),
    )?["token"]
        .as_str()
        .unwrap()
        .to_string();
    let receipt = post(
        "/data",
        Some(&user_token),
        json!({
            "functionalityName": "HR Data Access",
            "contentBase64": BASE64.encode(b"important rows"),
            "ttlSeconds": 86_400,
        }),
    )?;
    let hash = receipt["fileContentHash"].as_str().unwrap();

    let fetched: Value = http
        .get(format!(
            "{url}/data/{hash}?functionality=HR%20Data%20Access"
        ))
        .bearer_auth(&user_token)
        .send()?
        .json()?;
    let bytes = BASE64.decode(fetched["contentBase64"].as_str().unwrap())?;
    println!(
        "GET /data/{{hash}} -> {} bytes: {:?}",
        bytes.len(),
        String::from_utf8_lossy(&bytes)
    );

    let report: Value = http.get(format!("{url}/verify/{hash}")).send()?.json()?;
    println!("GET /verify/{{hash}} -> {report}");

    let validation: Value = http.get(format!("{url}/chain/validate")).send()?.json()?;
    println!("GET /chain/validate -> {validation}");
    Ok(())
}
