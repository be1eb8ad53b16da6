//! Deterministic in-process backend driven by a fixture.

use std::collections::BTreeMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::{BackendError, Completion, CompletionBackend};
use crate::prompting::AnnotationRequest;
use crate::util::{read_jsonl, JsonlError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailurePlan {
    /// Every attempt fails.
    Permanent,
    /// The first `n` attempts fail.
    Transient(u32),
}

/// What to answer for a record id the fixture does not mention.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MockFallback {
    /// Transient failure on every attempt.
    Fail,
    /// Reply with the user message.
    Echo,
    /// Reply with a fixed body.
    Fixed(String),
}

/// One line of a mock fixture file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockFixtureRow {
    pub record_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body_text: Option<String>,
    /// Number of leading attempts that fail.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub fail_attempts: u32,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub permanent_failure: bool,
}

fn is_zero(n: &u32) -> bool {
    *n == 0
}

#[derive(Debug, Clone)]
pub struct MockBackend {
    bodies: BTreeMap<String, String>,
    failures: BTreeMap<String, FailurePlan>,
    fallback: MockFallback,
}

impl MockBackend {
    pub fn new(fallback: MockFallback) -> Self {
        MockBackend {
            bodies: BTreeMap::new(),
            failures: BTreeMap::new(),
            fallback,
        }
    }

    pub fn with_body(mut self, record_id: &str, body: &str) -> Self {
        self.bodies.insert(record_id.to_string(), body.to_string());
        self
    }

    pub fn with_failure(mut self, record_id: &str, plan: FailurePlan) -> Self {
        self.failures.insert(record_id.to_string(), plan);
        self
    }

    pub fn from_rows(rows: Vec<MockFixtureRow>, fallback: MockFallback) -> Self {
        let mut m = MockBackend::new(fallback);
        for row in rows {
            if let Some(body) = row.body_text {
                m.bodies.insert(row.record_id.clone(), body);
            }
            if row.permanent_failure {
                m.failures.insert(row.record_id, FailurePlan::Permanent);
            } else if row.fail_attempts > 0 {
                m.failures.insert(row.record_id, FailurePlan::Transient(row.fail_attempts));
            }
        }
        m
    }

    pub fn from_jsonl<R: BufRead>(r: R, fallback: MockFallback) -> Result<Self, JsonlError> {
        Ok(MockBackend::from_rows(read_jsonl(r)?, fallback))
    }
}

impl CompletionBackend for MockBackend {
    fn complete(&self, request: &AnnotationRequest, attempt: u32) -> Result<Completion, BackendError> {
        match self.failures.get(&request.record_id) {
            Some(FailurePlan::Permanent) => {
                return Err(BackendError::Transient("scripted permanent failure".into()))
            }
            Some(FailurePlan::Transient(n)) if attempt <= *n => {
                return Err(BackendError::Transient(format!("scripted failure {attempt}/{n}")))
            }
            _ => {}
        }
        let content = match self.bodies.get(&request.record_id) {
            Some(b) => b.clone(),
            None => match &self.fallback {
                MockFallback::Fail => {
                    return Err(BackendError::Transient("no fixture for record".into()))
                }
                MockFallback::Echo => request.user().to_string(),
                MockFallback::Fixed(b) => b.clone(),
            },
        };
        Ok(Completion {
            content,
            usage: None,
        })
    }
}
