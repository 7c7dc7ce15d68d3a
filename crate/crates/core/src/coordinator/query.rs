use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use super::Coordinator;
use crate::NodeAddr;

/// Read-only requests, tagged by `"query"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "query", rename_all = "snake_case", deny_unknown_fields)]
pub enum Query {
    Devices,
    /// Readings of one device with `from_s <= t_rx <= to_s`.
    Readings {
        device: NodeAddr,
        #[serde(default)]
        from_s: Option<u32>,
        #[serde(default)]
        to_s: Option<u32>,
    },
    /// Alarm events with `at_s >= since_s`.
    Alarms {
        #[serde(default)]
        since_s: Option<f64>,
    },
    Stats,
    Lcd,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("unknown device {0}")]
    UnknownDevice(NodeAddr),
    #[error("malformed query: {0}")]
    MalformedQuery(String),
}

impl QueryError {
    pub fn kind(&self) -> &'static str {
        match self {
            QueryError::UnknownDevice(_) => "UnknownDevice",
            QueryError::MalformedQuery(_) => "MalformedQuery",
        }
    }
}

pub fn parse_query(text: &str) -> Result<Query, QueryError> {
    let malformed = |e: serde_json::Error| QueryError::MalformedQuery(e.to_string());
    let raw: Value = serde_json::from_str(text).map_err(malformed)?;
    let q: Query = serde_json::from_value(raw.clone()).map_err(malformed)?;
    // serde does not reject extra keys next to a unit variant's tag.
    let known = serde_json::to_value(&q).expect("query serializes");
    if let (Some(got), Some(known)) = (raw.as_object(), known.as_object()) {
        if let Some(extra) = got.keys().find(|k| !known.contains_key(*k)) {
            return Err(QueryError::MalformedQuery(format!(
                "unknown field `{extra}`"
            )));
        }
    }
    Ok(q)
}

impl Coordinator {
    pub fn query(&self, q: &Query) -> Result<Value, QueryError> {
        match q {
            Query::Devices => Ok(Value::Array(
                self.snapshot()
                    .into_iter()
                    .map(|s| {
                        json!({
                            "addr": s.addr,
                            "liveness": s.liveness,
                            "readings": s.readings,
                            "active_alarms": s.active_alarms,
                            "last_reading": s.last_reading,
                        })
                    })
                    .collect(),
            )),
            Query::Readings {
                device,
                from_s,
                to_s,
            } => {
                if !self.is_configured(*device) {
                    return Err(QueryError::UnknownDevice(*device));
                }
                let from = from_s.unwrap_or(0);
                let to = to_s.unwrap_or(u32::MAX);
                if from > to {
                    return Err(QueryError::MalformedQuery(format!(
                        "from_s {from} > to_s {to}"
                    )));
                }
                let rows: Vec<_> = self
                    .readings()
                    .iter()
                    .filter(|r| r.device_addr == *device && (from..=to).contains(&r.received_at_s))
                    .collect();
                Ok(serde_json::to_value(rows).expect("readings serialize"))
            }
            Query::Alarms { since_s } => {
                if since_s.is_some_and(|s| !s.is_finite()) {
                    return Err(QueryError::MalformedQuery("since_s must be finite".into()));
                }
                let since = since_s.unwrap_or(f64::NEG_INFINITY);
                let rows: Vec<_> = self.alarms().iter().filter(|a| a.at_s >= since).collect();
                Ok(serde_json::to_value(rows).expect("alarms serialize"))
            }
            Query::Stats => Ok(serde_json::to_value(self.stats()).expect("stats serialize")),
            Query::Lcd => Ok(serde_json::to_value(self.lcd()).expect("lcd serializes")),
        }
    }
}
