//! Blocking HTTP client for the online subcommands.

use std::time::Duration;

use serde_json::Value;

use super::CliError;

pub struct Api {
    server: String,
    token: Option<String>,
    client: reqwest::blocking::Client,
}

impl Api {
    pub fn new(server: String, token: Option<String>) -> Result<Api, CliError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(60))
            .build()
            .map_err(CliError::Transport)?;
        Ok(Api {
            server: server.trim_end_matches('/').to_string(),
            token,
            client,
        })
    }

    fn bearer(&self) -> Result<&str, CliError> {
        self.token.as_deref().ok_or_else(|| {
            CliError::Usage(
                "a session token is required: pass --token or set ANCHORLEDGER_TOKEN".into(),
            )
        })
    }

    pub fn post(
        &self,
        path: &str,
        body: &Value,
        with_token: bool,
    ) -> Result<(u16, Value), CliError> {
        let mut request = self
            .client
            .post(format!("{}{}", self.server, path))
            .json(body);
        if with_token {
            request = request.bearer_auth(self.bearer()?);
        }
        read_response(request.send().map_err(CliError::Transport)?)
    }

    pub fn get(
        &self,
        path: &str,
        query: &[(&str, String)],
        with_token: bool,
    ) -> Result<(u16, Value), CliError> {
        let mut request = self
            .client
            .get(format!("{}{}", self.server, path))
            .query(query);
        if with_token {
            request = request.bearer_auth(self.bearer()?);
        }
        read_response(request.send().map_err(CliError::Transport)?)
    }
}

fn read_response(response: reqwest::blocking::Response) -> Result<(u16, Value), CliError> {
    let status = response.status().as_u16();
    let body = response.json::<Value>().map_err(CliError::Transport)?;
    Ok((status, body))
}
