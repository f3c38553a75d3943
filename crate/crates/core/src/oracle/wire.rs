//! JSON-lines wire protocol shared by the subprocess and HTTP transports.
//!
//! ```text
//! request:  {"id":1,"text":"a b","units":["a","b"]}
//! response: {"id":1,"label":"x","score":1.0,"valid":true,"attention":[0.5,0.5]}
//! ```
//!
//! `valid` and `attention` are optional in responses.

use super::{OracleError, Prediction};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: u64,
    pub text: String,
    pub units: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub id: u64,
    pub label: String,
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valid: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attention: Option<Vec<f64>>,
}

impl Request {
    /// Single-line encoding, without the trailing newline.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("request serialization is infallible")
    }
}

impl Response {
    pub fn parse(line: &str) -> Result<Self, OracleError> {
        serde_json::from_str(line.trim_end_matches(['\r', '\n']))
            .map_err(|e| OracleError::Malformed(format!("{e}: {line:?}")))
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("response serialization is infallible")
    }

    /// Converts to a prediction after checking the id.
    pub fn into_prediction(self, expected_id: u64) -> Result<Prediction, OracleError> {
        if self.id != expected_id {
            return Err(OracleError::IdMismatch {
                expected: expected_id,
                got: self.id,
            });
        }
        Ok(Prediction {
            label: self.label,
            score: self.score,
            attention: self.attention,
            valid: self.valid,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_bytes_are_exact() {
        let req = Request {
            id: 7,
            text: "s.f(\"q\");".into(),
            units: vec!["s".into(), ".".into(), "f".into()],
        };
        assert_eq!(req.to_line(), r#"{"id":7,"text":"s.f(\"q\");","units":["s",".","f"]}"#);
    }

    #[test]
    fn response_optional_fields() {
        let r = Response::parse(r#"{"id":1,"label":"present:a","score":1.0}"#).unwrap();
        assert_eq!(r.valid, None);
        assert_eq!(r.attention, None);
        assert_eq!(r.to_line(), r#"{"id":1,"label":"present:a","score":1.0}"#);

        let full = r#"{"id":2,"label":"x","score":0.25,"valid":false,"attention":[0.5,0.0]}"#;
        assert_eq!(Response::parse(full).unwrap().to_line(), full);
    }

    #[test]
    fn id_mismatch_is_an_error() {
        let r = Response::parse(r#"{"id":3,"label":"x","score":0.0}"#).unwrap();
        assert!(matches!(
            r.into_prediction(4),
            Err(OracleError::IdMismatch { expected: 4, got: 3 })
        ));
    }

    #[test]
    fn malformed_lines_are_rejected() {
        assert!(matches!(Response::parse("{"), Err(OracleError::Malformed(_))));
        assert!(matches!(
            Response::parse(r#"{"id":1,"score":1.0}"#),
            Err(OracleError::Malformed(_))
        ));
    }
}
