//! Agents that live outside the process.
//!
//! One request goes out per turn: a single JSON object carrying the rendered
//! prompt and the machine-readable legal action sets. Over stdio it is one
//! line on the child's stdin and the reply is one line on its stdout; over
//! HTTP the same bodies are POSTed. Replies are matched on `game_id` and
//! `turn`, so a late answer to an earlier request is skipped rather than
//! applied to the wrong turn.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::RulebookIndex;
use super::{describe_state, parse_action_document, retrieve_rules, rulebook, Agent, Observation};
use crate::engine::{Action, Faction, TurnPlan};

pub const PROTOCOL_VERSION: u32 = 1;
/// Bumped whenever preamble, section order or format examples change.
pub const PROMPT_VERSION: &str = "civmini-prompt-v1";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);
/// Rulebook passages included in each prompt.
pub const RETRIEVED_RULES: usize = 4;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    /// Shell command speaking line-delimited JSON on stdin/stdout.
    Command(String),
    /// URL accepting the request as a JSON POST body.
    Http(String),
}

impl Endpoint {
    pub fn parse(s: &str) -> Self {
        let s = s.trim();
        if s.starts_with("http://") || s.starts_with("https://") {
            Endpoint::Http(s.to_string())
        } else {
            Endpoint::Command(s.to_string())
        }
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Command(c) => f.write_str(c),
            Endpoint::Http(u) => f.write_str(u),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentRequest {
    pub protocol_version: u32,
    pub game_id: String,
    pub faction: Faction,
    pub prompt: String,
    /// Entity name to its legal actions, in resolution order.
    pub legal_actions: BTreeMap<String, Vec<Action>>,
    pub turn: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentResponse {
    pub game_id: String,
    pub turn: u32,
    #[serde(default)]
    pub actions: serde_json::Map<String, Value>,
}

fn role_preamble(faction: Faction) -> String {
    let (you, foe) = (faction, faction.opponent());
    format!(
        "You are the commander of the {you} in CivMini, a two-player turn-based strategy game \
         against the {foe}. Each turn you give one order to every unit you control and to your \
         city. Play to win."
    )
}

fn format_examples(faction: Faction) -> &'static str {
    match faction {
        Faction::Empire => {
            "Reply with a single JSON object mapping entity names to actions, for example:\n\
             {\"empire_farmer_0\": {\"action_type\": \"GATHER\"}, \
             \"empire_soldier_0\": {\"action_type\": \"MOVE\", \"to\": {\"x\": 2, \"y\": 1}}, \
             \"empire_city\": {\"action_type\": \"PRODUCE_UNIT\", \"produce_unit_type\": \"soldier\", \"to\": {\"x\": 1, \"y\": 2}}}\n\
             Valid action_type values: GATHER, MOVE, BATTLE, PRODUCE_RESOURCE, PRODUCE_UNIT, PASS. \
             BATTLE takes a \"target\" position. Any entity you omit will PASS."
        }
        Faction::Nomads => {
            "Reply with a single JSON object mapping entity names to actions, for example:\n\
             {\"nomads_cavalry_0\": {\"action_type\": \"BATTLE\", \"target\": {\"x\": 4, \"y\": 4}}, \
             \"nomads_cavalry_1\": {\"action_type\": \"MOVE\", \"to\": {\"x\": 3, \"y\": 4}}, \
             \"nomads_city\": {\"action_type\": \"PRODUCE_UNIT\", \"produce_unit_type\": \"cavalry\", \"to\": {\"x\": 5, \"y\": 4}}}\n\
             Valid action_type values: MOVE, BATTLE, PRODUCE_UNIT, PASS. \
             BATTLE takes a \"target\" position. Any entity you omit will PASS."
        }
    }
}

/// Prompt text: role preamble, retrieved rules, state description, then
/// format examples.
pub fn build_prompt(obs: &Observation, index: &RulebookIndex) -> String {
    let state = describe_state(&obs.state, obs.faction, &obs.state.config);
    let rules = retrieve_rules(&state, index, RETRIEVED_RULES);
    let mut out = role_preamble(obs.faction);
    out.push_str("\n\n## Relevant rules\n");
    for r in rules {
        out.push_str("- ");
        out.push_str(r);
        out.push('\n');
    }
    out.push('\n');
    out.push_str(&state);
    out.push_str("\n## Response format\n");
    out.push_str(format_examples(obs.faction));
    out.push('\n');
    out
}

pub fn build_request(obs: &Observation, game_id: &str, index: &RulebookIndex) -> AgentRequest {
    AgentRequest {
        protocol_version: PROTOCOL_VERSION,
        game_id: game_id.to_string(),
        faction: obs.faction,
        prompt: build_prompt(obs, index),
        legal_actions: obs.legal.iter().map(|(&e, l)| (obs.name_of(e), l.clone())).collect(),
        turn: obs.state.turn,
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TransportError {
    #[error("no reply within {0:?}")]
    Timeout(Duration),
    #[error("agent process closed its output")]
    Closed,
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("http: {0}")]
    Http(String),
}

/// A long-lived child process. Lines from its stdout arrive through a reader
/// thread so waits can time out.
struct StdioChannel {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
}

impl StdioChannel {
    fn spawn(command: &str) -> std::io::Result<Self> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(StdioChannel { child, stdin, lines })
    }

    fn exchange(&mut self, req: &AgentRequest, timeout: Duration) -> Result<String, TransportError> {
        let mut line = serde_json::to_string(req).expect("request serializes");
        line.push('\n');
        self.stdin.write_all(line.as_bytes())?;
        self.stdin.flush()?;
        let deadline = Instant::now() + timeout;
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            match self.lines.recv_timeout(left) {
                Ok(reply) => {
                    if is_stale(&reply, req) {
                        log::debug!("skipping stale reply for {}", req.game_id);
                        continue;
                    }
                    return Ok(reply);
                }
                Err(RecvTimeoutError::Timeout) => return Err(TransportError::Timeout(timeout)),
                Err(RecvTimeoutError::Disconnected) => return Err(TransportError::Closed),
            }
        }
    }
}

impl Drop for StdioChannel {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// A reply that names a different game or turn than the pending request.
fn is_stale(reply: &str, req: &AgentRequest) -> bool {
    let Ok(Value::Object(m)) = serde_json::from_str::<Value>(reply) else {
        return false;
    };
    let game = m.get("game_id").and_then(Value::as_str);
    let turn = m.get("turn").and_then(Value::as_u64);
    game.is_some_and(|g| g != req.game_id) || turn.is_some_and(|t| t != u64::from(req.turn))
}

fn http_exchange(agent: &ureq::Agent, url: &str, req: &AgentRequest) -> Result<String, TransportError> {
    let mut resp = agent.post(url).send_json(req).map_err(|e| match e {
        ureq::Error::Timeout(_) => TransportError::Http("timed out".into()),
        other => TransportError::Http(other.to_string()),
    })?;
    resp.body_mut().read_to_string().map_err(|e| TransportError::Http(e.to_string()))
}

/// The action document inside a reply: its `actions` member when present,
/// otherwise the reply as is.
fn actions_text(reply: &str) -> String {
    match serde_json::from_str::<Value>(reply) {
        Ok(Value::Object(mut m)) => match m.remove("actions") {
            Some(actions @ Value::Object(_)) => actions.to_string(),
            _ => reply.to_string(),
        },
        _ => reply.to_string(),
    }
}

pub struct ExternalAgent {
    endpoint: Endpoint,
    faction: Faction,
    game_id: String,
    timeout: Duration,
    index: Option<RulebookIndex>,
    stdio: Option<StdioChannel>,
    http: Option<ureq::Agent>,
    fallbacks: u32,
    failures: u32,
}

impl ExternalAgent {
    pub fn new(endpoint: Endpoint, faction: Faction, game_id: String) -> Self {
        Self::with_timeout(endpoint, faction, game_id, DEFAULT_TIMEOUT)
    }

    pub fn with_timeout(endpoint: Endpoint, faction: Faction, game_id: String, timeout: Duration) -> Self {
        ExternalAgent {
            endpoint,
            faction,
            game_id,
            timeout,
            index: None,
            stdio: None,
            http: None,
            fallbacks: 0,
            failures: 0,
        }
    }

    pub fn faction(&self) -> Faction {
        self.faction
    }

    /// Turns that fell back to all-PASS because the transport failed.
    pub fn failures(&self) -> u32 {
        self.failures
    }

    fn exchange(&mut self, req: &AgentRequest) -> Result<String, TransportError> {
        match &self.endpoint {
            Endpoint::Command(cmd) => {
                if self.stdio.is_none() {
                    self.stdio = Some(StdioChannel::spawn(cmd)?);
                }
                let channel = self.stdio.as_mut().expect("spawned above");
                let result = channel.exchange(req, self.timeout);
                if matches!(result, Err(TransportError::Closed | TransportError::Io(_))) {
                    self.stdio = None;
                }
                result
            }
            Endpoint::Http(url) => {
                let timeout = self.timeout;
                let agent = self.http.get_or_insert_with(|| {
                    ureq::Agent::config_builder()
                        .timeout_global(Some(timeout))
                        .http_status_as_error(true)
                        .build()
                        .into()
                });
                http_exchange(agent, url, req)
            }
        }
    }
}

impl Agent for ExternalAgent {
    fn plan(&mut self, obs: &Observation) -> TurnPlan {
        let index = self.index.get_or_insert_with(|| RulebookIndex::new(rulebook(&obs.state.config)));
        let req = build_request(obs, &self.game_id, index);
        match self.exchange(&req) {
            Ok(reply) => {
                let parsed = parse_action_document(&actions_text(&reply), obs);
                self.fallbacks += parsed.tally.substitutions();
                parsed.plan
            }
            Err(e) => {
                log::warn!(
                    "external agent {} ({}) turn {}: {e}; all entities pass",
                    self.endpoint,
                    self.faction.as_str(),
                    obs.state.turn
                );
                self.failures += 1;
                self.fallbacks += obs.legal.len() as u32;
                obs.all_pass()
            }
        }
    }

    fn fallbacks(&self) -> u32 {
        self.fallbacks
    }
}

/// One-shot call: a fresh connection for a single observation.
pub fn external_agent_plan(obs: &Observation, endpoint: &Endpoint, timeout: Duration) -> TurnPlan {
    let mut agent = ExternalAgent::with_timeout(endpoint.clone(), obs.faction, "standalone".into(), timeout);
    agent.plan(obs)
}
