//! Operator command line: online subcommands for every service endpoint,
//! plus offline chain and store auditing that needs no running service.
//!
//! Exit codes: 0 success, 1 denied/untrusted, 2 usage error, 3 service or
//! IO error.

mod client;
mod offline;
mod render;

use std::io::Write;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use thiserror::Error;

use crate::service::{router, system_clock, AppState, Node, ServiceConfig, TOKEN_KEY_ENV};

use client::Api;
use render::print_table;

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("transport: {0}")]
    Transport(reqwest::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("startup: {0}")]
    Startup(#[from] crate::service::StartupError),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 3,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "anchorledger",
    version,
    about = "Ledger-anchored access control and data integrity for off-chain storage"
)]
struct Cli {
    /// Service base URL.
    #[arg(
        long,
        global = true,
        env = "ANCHORLEDGER_SERVER",
        default_value = "http://127.0.0.1:8646"
    )]
    server: String,
    /// Session token for authenticated subcommands.
    #[arg(
        long,
        global = true,
        env = "ANCHORLEDGER_TOKEN",
        hide_env_values = true
    )]
    token: Option<String>,
    /// Print the raw JSON response body instead of human output.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum RoleArg {
    Controller,
    User,
}

impl RoleArg {
    fn as_str(self) -> &'static str {
        match self {
            RoleArg::Controller => "Controller",
            RoleArg::User => "User",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum StatusArg {
    Activated,
    Deactivated,
}

impl StatusArg {
    fn as_str(self) -> &'static str {
        match self {
            StatusArg::Activated => "Activated",
            StatusArg::Deactivated => "Deactivated",
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Log in and print a session token.
    Login {
        #[arg(long)]
        user: String,
        #[arg(long)]
        secret: String,
    },
    /// Register a credential for an onboarded user.
    Register {
        #[arg(long)]
        user: String,
        #[arg(long)]
        secret: String,
    },
    /// Onboard a user (controller token required).
    Onboard {
        #[arg(long)]
        user: String,
        #[arg(long, value_enum)]
        authority_role: RoleArg,
        #[arg(long)]
        org_role: String,
    },
    /// Assign a user's organizational role (controller token required).
    Role {
        #[arg(long)]
        user: String,
        #[arg(long)]
        org_role: String,
    },
    /// Manage access policies.
    #[command(subcommand, visible_alias = "policies")]
    Policy(PolicyCmd),
    /// Grant a user permission for a functionality.
    Grant {
        #[arg(long)]
        user: String,
        #[arg(long)]
        functionality: String,
    },
    /// Revoke a user's permission for a functionality.
    Revoke {
        #[arg(long)]
        user: String,
        #[arg(long)]
        functionality: String,
    },
    /// Check whether a user may execute a functionality.
    Check {
        #[arg(long)]
        user: String,
        #[arg(long)]
        functionality: String,
    },
    /// List on-chain audit records.
    Audit {
        #[arg(long)]
        user: Option<String>,
        #[arg(long)]
        from: Option<i64>,
        #[arg(long)]
        to: Option<i64>,
    },
    /// Upload a file, certify it, and anchor it on-chain.
    Put {
        #[arg(long)]
        functionality: String,
        /// Path of the file to upload.
        #[arg(long)]
        file: PathBuf,
        /// Certificate lifetime in seconds.
        #[arg(long, default_value_t = 86_400)]
        ttl: i64,
    },
    /// Fetch anchored content by its hash.
    Get {
        hash: String,
        #[arg(long)]
        functionality: String,
        /// Write content here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify on-chain integrity of a content hash (no token needed).
    Verify { hash: String },
    /// Inspect or check the block chain.
    #[command(subcommand)]
    Chain(ChainCmd),
    /// Offline checks over a store directory.
    #[command(subcommand)]
    Store(StoreCmd),
    /// Run the HTTP service.
    Serve {
        /// Path of the JSON config file.
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Subcommand)]
enum PolicyCmd {
    /// Create a policy for a system functionality.
    Create { functionality: String },
    /// Activate or deactivate a policy.
    Status {
        functionality: String,
        #[arg(value_enum)]
        status: StatusArg,
    },
    /// Print the access policies table.
    List,
}

#[derive(Subcommand)]
enum ChainCmd {
    /// List blocks from the running service.
    List,
    /// Validate a chain file offline.
    Verify { file: PathBuf },
}

#[derive(Subcommand)]
enum StoreCmd {
    /// Verify every anchor of a chain file against a store directory.
    Verify { dir: PathBuf, chain_file: PathBuf },
}

/// Parse arguments and run. Returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("anchorledger: {err}");
            err.exit_code()
        }
    }
}

fn exit_for(status: u16) -> i32 {
    match status {
        200..=299 => 0,
        400 => 2,
        401 | 403 | 404 | 409 | 422 => 1,
        _ => 3,
    }
}

struct Output {
    json: bool,
}

impl Output {
    /// Print the response and derive the exit code from the status.
    fn finish(&self, status: u16, body: &Value, human: impl FnOnce(&Value)) -> i32 {
        if self.json {
            println!("{body}");
        } else if (200..300).contains(&status) {
            human(body);
        } else {
            let message = body["error"].as_str().unwrap_or("request failed");
            eprintln!("error ({status}): {message}");
        }
        exit_for(status)
    }
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    let output = Output { json: cli.json };
    // Offline and local subcommands need no client.
    match &cli.command {
        Command::Chain(ChainCmd::Verify { file }) => {
            return offline::chain_verify(file, cli.json);
        }
        Command::Store(StoreCmd::Verify { dir, chain_file }) => {
            return offline::store_verify(dir, chain_file, cli.json);
        }
        Command::Serve { config } => {
            return serve(config);
        }
        _ => {}
    }

    let api = Api::new(cli.server.clone(), cli.token.clone())?;
    let code = match cli.command {
        Command::Login { user, secret } => {
            let (status, body) = api.post(
                "/auth/login",
                &json!({ "userId": user, "secret": secret }),
                false,
            )?;
            output.finish(status, &body, |body| {
                println!("{}", body["token"].as_str().unwrap_or_default());
            })
        }
        Command::Register { user, secret } => {
            let (status, body) = api.post(
                "/auth/register",
                &json!({ "userId": user, "secret": secret }),
                false,
            )?;
            output.finish(status, &body, |_| println!("registered {user}"))
        }
        Command::Onboard {
            user,
            authority_role,
            org_role,
        } => {
            let (status, body) = api.post(
                "/admin/onboard",
                &json!({
                    "userId": user,
                    "authorityRole": authority_role.as_str(),
                    "orgRole": org_role,
                }),
                true,
            )?;
            output.finish(status, &body, |body| {
                println!("onboarded {user} at block {}", body["blockIndex"]);
            })
        }
        Command::Role { user, org_role } => {
            let (status, body) = api.post(
                "/admin/role",
                &json!({ "userId": user, "orgRole": org_role }),
                true,
            )?;
            output.finish(status, &body, |body| {
                println!("assigned role at block {}", body["blockIndex"]);
            })
        }
        Command::Policy(PolicyCmd::Create { functionality }) => {
            let (status, body) = api.post(
                "/admin/policy",
                &json!({ "functionalityName": functionality }),
                true,
            )?;
            output.finish(status, &body, |body| {
                println!("created policy at block {}", body["blockIndex"]);
            })
        }
        Command::Policy(PolicyCmd::Status {
            functionality,
            status: new_status,
        }) => {
            let (status, body) = api.post(
                "/admin/policy/status",
                &json!({ "functionalityName": functionality, "status": new_status.as_str() }),
                true,
            )?;
            output.finish(status, &body, |body| {
                println!("set status at block {}", body["blockIndex"]);
            })
        }
        Command::Policy(PolicyCmd::List) => {
            let (status, body) = api.get("/policies", &[], true)?;
            output.finish(status, &body, print_policy_table)
        }
        Command::Grant {
            user,
            functionality,
        } => {
            let (status, body) = api.post(
                "/admin/permission",
                &json!({ "userId": user, "functionalityName": functionality, "grant": true }),
                true,
            )?;
            output.finish(status, &body, |body| {
                println!("granted at block {}", body["blockIndex"]);
            })
        }
        Command::Revoke {
            user,
            functionality,
        } => {
            let (status, body) = api.post(
                "/admin/permission",
                &json!({ "userId": user, "functionalityName": functionality, "grant": false }),
                true,
            )?;
            output.finish(status, &body, |body| {
                println!("revoked at block {}", body["blockIndex"]);
            })
        }
        Command::Check {
            user,
            functionality,
        } => {
            let (status, body) = api.get(
                "/admin/check",
                &[("userId", user), ("functionality", functionality)],
                true,
            )?;
            output.finish(status, &body, |body| {
                println!(
                    "{}",
                    if body["hasPermission"].as_bool().unwrap_or(false) {
                        "true"
                    } else {
                        "false"
                    }
                );
            })
        }
        Command::Audit { user, from, to } => {
            let mut query: Vec<(&str, String)> = Vec::new();
            if let Some(user) = user {
                query.push(("userId", user));
            }
            if let Some(from) = from {
                query.push(("from", from.to_string()));
            }
            if let Some(to) = to {
                query.push(("to", to.to_string()));
            }
            let (status, body) = api.get("/admin/audit", &query, true)?;
            output.finish(status, &body, print_audit_table)
        }
        Command::Put {
            functionality,
            file,
            ttl,
        } => {
            let content = std::fs::read(&file)?;
            let (status, body) = api.post(
                "/data",
                &json!({
                    "functionalityName": functionality,
                    "contentBase64": BASE64.encode(&content),
                    "ttlSeconds": ttl,
                }),
                true,
            )?;
            output.finish(status, &body, |body| {
                println!(
                    "anchored {} at block {} (certificate {})",
                    body["fileContentHash"].as_str().unwrap_or_default(),
                    body["blockIndex"],
                    body["certificateId"].as_str().unwrap_or_default(),
                );
            })
        }
        Command::Get {
            hash,
            functionality,
            out,
        } => {
            let (status, body) = api.get(
                &format!("/data/{hash}"),
                &[("functionality", functionality)],
                true,
            )?;
            if (200..300).contains(&status) && !cli.json {
                let content = BASE64
                    .decode(body["contentBase64"].as_str().unwrap_or_default())
                    .map_err(|e| CliError::Usage(format!("service returned bad base64: {e}")))?;
                match out {
                    Some(path) => std::fs::write(path, content)?,
                    None => std::io::stdout().write_all(&content)?,
                }
                exit_for(status)
            } else {
                output.finish(status, &body, |_| {})
            }
        }
        Command::Verify { hash } => {
            let (status, body) = api.get(&format!("/verify/{hash}"), &[], false)?;
            let trusted = body["verdict"] == json!("Trusted");
            let code = output.finish(status, &body, |body| {
                if trusted {
                    println!("TRUSTED");
                } else {
                    let reasons: Vec<String> = body["reasons"]
                        .as_array()
                        .map(|r| {
                            r.iter()
                                .filter_map(|v| v.as_str().map(String::from))
                                .collect()
                        })
                        .unwrap_or_default();
                    println!("UNTRUSTED: {}", reasons.join(", "));
                }
            });
            if code == 0 && !trusted {
                1
            } else {
                code
            }
        }
        Command::Chain(ChainCmd::List) => {
            let (status, body) = api.get("/chain", &[], false)?;
            output.finish(status, &body, print_chain_table)
        }
        // Handled before the client was built.
        Command::Chain(ChainCmd::Verify { .. }) | Command::Store(_) | Command::Serve { .. } => {
            unreachable!("offline commands dispatch earlier")
        }
    };
    Ok(code)
}

fn print_policy_table(body: &Value) {
    let empty = Vec::new();
    let policies = body["policies"].as_array().unwrap_or(&empty);
    let rows: Vec<Vec<String>> = policies
        .iter()
        .map(|p| {
            let activated = p["status"] == json!("Activated");
            vec![
                p["functionalityName"]
                    .as_str()
                    .unwrap_or_default()
                    .to_string(),
                if activated {
                    "ACTIVATED"
                } else {
                    "DEACTIVATED"
                }
                .to_string(),
                if activated {
                    "EXECUTE"
                } else {
                    "ACCESS DENIED"
                }
                .to_string(),
            ]
        })
        .collect();
    print_table(
        &[
            "ACCESS POLICY NAME FOR SYSTEM FUNCTIONALITY",
            "STATUS",
            "ACTION",
        ],
        &rows,
    );
}

fn print_audit_table(body: &Value) {
    let empty = Vec::new();
    let records = body.as_array().unwrap_or(&empty);
    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            vec![
                r["timestamp"].to_string(),
                r["userId"].as_str().unwrap_or_default().to_string(),
                r["action"].as_str().unwrap_or_default().to_string(),
                r["validAction"].to_string(),
                r["severity"].as_str().unwrap_or_default().to_string(),
            ]
        })
        .collect();
    print_table(&["TIMESTAMP", "USER", "ACTION", "VALID", "SEVERITY"], &rows);
}

fn print_chain_table(body: &Value) {
    let empty = Vec::new();
    let blocks = body.as_array().unwrap_or(&empty);
    let rows: Vec<Vec<String>> = blocks
        .iter()
        .map(|b| {
            vec![
                b["index"].to_string(),
                b["timestamp"].to_string(),
                b["payloadKind"].as_str().unwrap_or_default().to_string(),
                b["blockHash"].as_str().unwrap_or_default().to_string(),
            ]
        })
        .collect();
    print_table(&["BLOCK", "TIMESTAMP", "PAYLOAD", "HASH"], &rows);
}

/// Start the HTTP service from a config file and run until interrupted.
fn serve(config_path: &std::path::Path) -> Result<i32, CliError> {
    // Surface audit alerts on stderr; RUST_LOG overrides.
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let config = ServiceConfig::load(config_path)?;
    let env_key = std::env::var(TOKEN_KEY_ENV).ok();
    let node = Node::start(&config, env_key.as_deref(), system_clock())?;
    let state = Arc::new(AppState {
        node: RwLock::new(node),
        clock: Box::new(system_clock),
    });
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&config.listen_addr).await?;
        let addr = listener.local_addr()?;
        println!("listening on http://{addr}");
        std::io::stdout().flush()?;
        axum::serve(listener, router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
    })?;
    Ok(0)
}
