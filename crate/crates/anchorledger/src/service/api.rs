//! Endpoint dispatch: one function from (method, path, headers, body) to
//! (status, JSON body), independent of any HTTP transport so the full API
//! is testable in-process.

use std::collections::BTreeMap;
use std::sync::RwLock;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::auth::{AuthError, SessionToken};
use crate::ledger::ContentHash;
use crate::policy::{
    AuditFilter, AuthorityRole, ControlAction, ControlError, ControlOutcome, PermissionUpdate,
    PolicyStatus,
};
use crate::trust::OffChainStore;

use super::{GetOutcome, Node, PutOutcome};

/// A node behind the single-writer lock the dispatcher enforces.
pub type SharedNode<S> = RwLock<Node<S>>;

/// Transport-independent request form.
#[derive(Debug, Clone)]
pub struct ApiRequest {
    pub method: String,
    pub path: String,
    pub query: BTreeMap<String, String>,
    /// Bearer token from the Authorization header, if any.
    pub bearer: Option<String>,
    pub body: Vec<u8>,
}

impl ApiRequest {
    pub fn get(path: impl Into<String>) -> ApiRequest {
        ApiRequest {
            method: "GET".into(),
            path: path.into(),
            query: BTreeMap::new(),
            bearer: None,
            body: Vec::new(),
        }
    }

    pub fn post(path: impl Into<String>, body: &Value) -> ApiRequest {
        ApiRequest {
            method: "POST".into(),
            path: path.into(),
            query: BTreeMap::new(),
            bearer: None,
            body: serde_json::to_vec(body).expect("body serializes"),
        }
    }

    pub fn with_bearer(mut self, token: impl Into<String>) -> ApiRequest {
        self.bearer = Some(token.into());
        self
    }

    pub fn with_query(mut self, key: impl Into<String>, value: impl Into<String>) -> ApiRequest {
        self.query.insert(key.into(), value.into());
        self
    }
}

/// Transport-independent response form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiResponse {
    pub status: u16,
    pub body: Value,
}

impl ApiResponse {
    fn ok(body: Value) -> ApiResponse {
        ApiResponse { status: 200, body }
    }

    fn error(status: u16, message: impl Into<String>) -> ApiResponse {
        ApiResponse {
            status,
            body: json!({ "error": message.into() }),
        }
    }
}

fn parse_body<'de, T: Deserialize<'de>>(req: &'de ApiRequest) -> Result<T, ApiResponse> {
    serde_json::from_slice(&req.body)
        .map_err(|e| ApiResponse::error(400, format!("malformed body: {e}")))
}

fn parse_hash(raw: &str) -> Result<ContentHash, ApiResponse> {
    ContentHash::from_hex(raw)
        .map_err(|e| ApiResponse::error(400, format!("bad content hash: {e}")))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct CredentialsBody {
    user_id: String,
    secret: String,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct OnboardBody {
    user_id: String,
    authority_role: AuthorityRole,
    org_role: String,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct RoleBody {
    user_id: String,
    org_role: String,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct PolicyBody {
    functionality_name: String,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct PolicyStatusBody {
    functionality_name: String,
    status: PolicyStatus,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct PermissionBody {
    user_id: String,
    functionality_name: String,
    grant: bool,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct PutDataBody {
    functionality_name: String,
    content_base64: String,
    ttl_seconds: i64,
}

/// Route one request. Mutating endpoints take the write lock and commit
/// through consensus before responding; read-only endpoints share the
/// read lock.
pub fn dispatch<S: OffChainStore>(node: &SharedNode<S>, req: &ApiRequest, now: i64) -> ApiResponse {
    let path = req.path.clone();
    let segments: Vec<&str> = path.split('/').filter(|s| !s.is_empty()).collect();
    match (req.method.as_str(), segments.as_slice()) {
        ("POST", ["auth", "register"]) => with_write(node, |node| {
            let body: CredentialsBody = parse_body(req)?;
            match node.register(&body.user_id, body.secret.as_bytes()) {
                Ok(()) => Ok(ApiResponse::ok(json!({ "registered": true }))),
                Err(AuthError::UnknownUser(u)) => {
                    Ok(ApiResponse::error(404, format!("unknown user: {u}")))
                }
                Err(AuthError::AlreadyRegistered(u)) => Ok(ApiResponse::error(
                    409,
                    format!("credential already registered for user: {u}"),
                )),
                Err(e) => Ok(ApiResponse::error(500, e.to_string())),
            }
        }),
        ("POST", ["auth", "login"]) => with_write(node, |node| {
            let body: CredentialsBody = parse_body(req)?;
            match node.authenticate(&body.user_id, body.secret.as_bytes(), now) {
                Ok(token) => Ok(ApiResponse::ok(json!({ "token": token }))),
                Err(rejection) => Ok(ApiResponse::error(401, rejection.to_string())),
            }
        }),
        ("POST", ["admin", "onboard"]) => with_actor(node, req, now, |node, actor| {
            let body: OnboardBody = parse_body(req)?;
            let action = ControlAction::Onboarding {
                user_id: body.user_id,
                authority_role: body.authority_role,
                org_role: body.org_role,
            };
            Ok(control_response(node.control(&actor, &action, now)))
        }),
        ("POST", ["admin", "role"]) => with_actor(node, req, now, |node, actor| {
            let body: RoleBody = parse_body(req)?;
            let action = ControlAction::AssignRole {
                user_id: body.user_id,
                org_role: body.org_role,
            };
            Ok(control_response(node.control(&actor, &action, now)))
        }),
        ("POST", ["admin", "policy"]) => with_actor(node, req, now, |node, actor| {
            let body: PolicyBody = parse_body(req)?;
            let action = ControlAction::CreatePolicy {
                functionality_name: body.functionality_name,
            };
            Ok(control_response(node.control(&actor, &action, now)))
        }),
        ("POST", ["admin", "policy", "status"]) => with_actor(node, req, now, |node, actor| {
            let body: PolicyStatusBody = parse_body(req)?;
            let action = ControlAction::UpdatePermission(PermissionUpdate::SetStatus {
                functionality_name: body.functionality_name,
                status: body.status,
            });
            Ok(control_response(node.control(&actor, &action, now)))
        }),
        ("POST", ["admin", "permission"]) => with_actor(node, req, now, |node, actor| {
            let body: PermissionBody = parse_body(req)?;
            let update = if body.grant {
                PermissionUpdate::Grant {
                    user_id: body.user_id,
                    functionality_name: body.functionality_name,
                }
            } else {
                PermissionUpdate::Revoke {
                    user_id: body.user_id,
                    functionality_name: body.functionality_name,
                }
            };
            let action = ControlAction::UpdatePermission(update);
            Ok(control_response(node.control(&actor, &action, now)))
        }),
        ("GET", ["admin", "check"]) => with_actor(node, req, now, |node, actor| {
            let user_id = require_query(req, "userId")?;
            let functionality_name = require_query(req, "functionality")?;
            let action = ControlAction::CheckControl {
                user_id,
                functionality_name,
            };
            let outcome = node.control(&actor, &action, now);
            if !outcome.valid_action {
                return Ok(denied_response());
            }
            Ok(ApiResponse::ok(
                json!({ "hasPermission": outcome.has_permission }),
            ))
        }),
        ("GET", ["admin", "audit"]) => with_actor(node, req, now, |node, actor| {
            let filter = AuditFilter {
                user_id: req.query.get("userId").cloned(),
                from: parse_optional_int(req, "from")?,
                to: parse_optional_int(req, "to")?,
                valid_action: None,
            };
            let action = ControlAction::AuditTrail { filter };
            let outcome = node.control(&actor, &action, now);
            if !outcome.valid_action {
                return Ok(denied_response());
            }
            let records = outcome.audit_records.unwrap_or_default();
            Ok(ApiResponse::ok(
                serde_json::to_value(records).expect("records serialize"),
            ))
        }),
        ("POST", ["data"]) => with_actor(node, req, now, |node, actor| {
            let body: PutDataBody = parse_body(req)?;
            let content = BASE64
                .decode(&body.content_base64)
                .map_err(|e| ApiResponse::error(400, format!("bad contentBase64: {e}")))?;
            match node.put_data(
                &actor,
                &body.functionality_name,
                &content,
                body.ttl_seconds,
                now,
            ) {
                PutOutcome::Anchored(receipt) => Ok(ApiResponse::ok(json!({
                    "fileContentHash": receipt.file_content_hash,
                    "certificateId": receipt.certificate_id,
                    "blockIndex": receipt.block_index,
                }))),
                PutOutcome::PermissionDenied => Ok(denied_response()),
                PutOutcome::Unanchored {
                    file_content_hash,
                    approvals,
                    rejections,
                } => Ok(ApiResponse {
                    status: 409,
                    body: json!({
                        "error": "consensus rejected the anchor",
                        "fileContentHash": file_content_hash,
                        "approvals": approvals,
                        "rejections": rejections,
                    }),
                }),
                PutOutcome::BadRequest(message) => Ok(ApiResponse::error(400, message)),
            }
        }),
        ("GET", ["data", raw_hash]) => {
            let raw_hash = raw_hash.to_string();
            with_actor(node, req, now, move |node, actor| {
                let hash = parse_hash(&raw_hash)?;
                let functionality_name = require_query(req, "functionality")?;
                match node.get_data(&actor, &hash, &functionality_name, now) {
                    GetOutcome::Ok {
                        content,
                        certificate,
                    } => Ok(ApiResponse::ok(json!({
                        "contentBase64": BASE64.encode(&content),
                        "certificate": certificate,
                    }))),
                    GetOutcome::PermissionDenied => Ok(denied_response()),
                    GetOutcome::Untrusted(report) => {
                        let missing = !report.anchor_found
                            && report.reasons.iter().any(|r| r == "stored file missing");
                        if missing {
                            Ok(ApiResponse::error(404, "unknown content hash"))
                        } else {
                            Ok(ApiResponse {
                                status: 422,
                                body: json!({
                                    "error": "data failed integrity verification",
                                    "report": report,
                                }),
                            })
                        }
                    }
                }
            })
        }
        ("GET", ["verify", raw_hash]) => match parse_hash(raw_hash) {
            Err(resp) => resp,
            Ok(hash) => {
                let node = node.read().expect("node lock");
                let report = node.verify_content(&hash, now);
                ApiResponse::ok(serde_json::to_value(report).expect("report serializes"))
            }
        },
        ("GET", ["chain"]) => {
            let node = node.read().expect("node lock");
            ApiResponse::ok(serde_json::to_value(node.chain_summaries()).expect("serializes"))
        }
        ("GET", ["chain", "validate"]) => {
            let node = node.read().expect("node lock");
            ApiResponse::ok(serde_json::to_value(node.validate_chain()).expect("serializes"))
        }
        ("GET", ["policies"]) => {
            let node = node.read().expect("node lock");
            match authenticate(&node, req, now) {
                Err(resp) => resp,
                Ok(_) => {
                    let policies: Vec<Value> = node
                        .state()
                        .policies
                        .iter()
                        .map(|(name, record)| {
                            json!({
                                "functionalityName": name,
                                "status": record.status,
                                "permitted": record.permitted,
                            })
                        })
                        .collect();
                    ApiResponse::ok(json!({ "policies": policies }))
                }
            }
        }
        _ => ApiResponse::error(
            404,
            format!("no such endpoint: {} {}", req.method, req.path),
        ),
    }
}

fn require_query(req: &ApiRequest, key: &str) -> Result<String, ApiResponse> {
    req.query
        .get(key)
        .cloned()
        .ok_or_else(|| ApiResponse::error(400, format!("missing query parameter: {key}")))
}

fn parse_optional_int(req: &ApiRequest, key: &str) -> Result<Option<i64>, ApiResponse> {
    match req.query.get(key) {
        None => Ok(None),
        Some(raw) => raw.parse::<i64>().map(Some).map_err(|_| {
            ApiResponse::error(400, format!("query parameter {key} must be an integer"))
        }),
    }
}

/// Validate the bearer token against the node's key and clock.
fn authenticate<S: OffChainStore>(
    node: &Node<S>,
    req: &ApiRequest,
    now: i64,
) -> Result<SessionToken, ApiResponse> {
    let bearer = req
        .bearer
        .as_deref()
        .ok_or_else(|| ApiResponse::error(401, "missing bearer token"))?;
    node.validate(bearer, now)
        .map_err(|_| ApiResponse::error(401, "invalid or expired token"))
}

fn with_write<S: OffChainStore>(
    node: &SharedNode<S>,
    f: impl FnOnce(&mut Node<S>) -> Result<ApiResponse, ApiResponse>,
) -> ApiResponse {
    let mut guard = node.write().expect("node lock");
    let response = match f(&mut guard) {
        Ok(resp) | Err(resp) => resp,
    };
    if let Err(e) = guard.flush() {
        return ApiResponse::error(500, format!("chain persistence failed: {e}"));
    }
    response
}

fn with_actor<S: OffChainStore>(
    node: &SharedNode<S>,
    req: &ApiRequest,
    now: i64,
    f: impl FnOnce(&mut Node<S>, SessionToken) -> Result<ApiResponse, ApiResponse>,
) -> ApiResponse {
    with_write(node, |node| {
        let actor = authenticate(node, req, now)?;
        f(node, actor)
    })
}

fn denied_response() -> ApiResponse {
    ApiResponse {
        status: 403,
        body: json!({
            "error": "permission denied",
            "validAction": false,
        }),
    }
}

/// Map a control outcome onto the admin endpoint response contract.
fn control_response(outcome: ControlOutcome) -> ApiResponse {
    if !outcome.valid_action {
        return denied_response();
    }
    match &outcome.error {
        Some(ControlError::UnknownUser(u)) => ApiResponse::error(404, format!("unknown user: {u}")),
        Some(ControlError::UnknownFunctionality(f)) => {
            ApiResponse::error(404, format!("unknown functionality: {f}"))
        }
        Some(ControlError::ConsensusRejected {
            approvals,
            rejections,
        }) => ApiResponse {
            status: 409,
            body: json!({
                "error": "consensus rejected the transaction",
                "approvals": approvals,
                "rejections": rejections,
            }),
        },
        Some(other) => ApiResponse::error(500, other.to_string()),
        None => {
            let mut body = json!({ "validAction": true });
            if let Some(index) = outcome.state_block {
                body["blockIndex"] = json!(index);
            }
            if let Some(index) = outcome.audit_block {
                body["auditBlockIndex"] = json!(index);
            }
            ApiResponse::ok(body)
        }
    }
}
