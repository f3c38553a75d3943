//! Oracle over HTTP: `POST <base>/predict` with the wire-protocol JSON body.

use super::wire::{Request, Response};
use super::{OracleError, Prediction, Predictor, Query, Transport, DEFAULT_TIMEOUT};
use std::time::Duration;
use ureq::Agent;

pub struct HttpOracle {
    endpoint: String,
    agent: Agent,
    timeout: Duration,
    next_id: u64,
}

impl HttpOracle {
    /// `url` is either the full `/predict` endpoint or its base.
    pub fn new(url: &str) -> Self {
        Self::with_timeout(url, DEFAULT_TIMEOUT)
    }

    pub fn with_timeout(url: &str, timeout: Duration) -> Self {
        let trimmed = url.trim_end_matches('/');
        let endpoint = if trimmed.ends_with("/predict") {
            trimmed.to_string()
        } else {
            format!("{trimmed}/predict")
        };
        let agent: Agent = Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            endpoint,
            agent,
            timeout,
            next_id: 0,
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }
}

impl Predictor for HttpOracle {
    fn predict(&mut self, query: Query<'_>) -> Result<Prediction, OracleError> {
        self.next_id += 1;
        let request = Request {
            id: self.next_id,
            text: query.text.to_string(),
            units: query.units.iter().map(|u| u.text.clone()).collect(),
        };
        let timeout = self.timeout;
        let response = self
            .agent
            .post(&self.endpoint)
            .header("Content-Type", "application/json")
            .send(request.to_line())
            .map_err(|e| match e {
                ureq::Error::Timeout(_) => OracleError::Timeout(timeout),
                other => OracleError::Transport(other.to_string()),
            })?;
        let status = response.status();
        let body = response
            .into_body()
            .read_to_string()
            .map_err(|e| OracleError::Transport(format!("reading response body: {e}")))?;
        if status != 200 {
            return Err(OracleError::Transport(format!("HTTP {status}: {body}")));
        }
        Response::parse(&body)?.into_prediction(request.id)
    }

    fn transport(&self) -> Transport {
        Transport::Http
    }
}
