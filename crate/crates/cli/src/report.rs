use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;
use std::time::Duration;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Provenance of one invocation.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub command: String,
    pub params: Value,
    pub version: String,
    pub wall_time_secs: f64,
    /// sha256 of the canonical JSON result.
    pub digest: String,
}

/// Compact JSON with sorted object keys.
pub fn canonical_json(v: &Value) -> String {
    // serde_json's default map is ordered, so to_string is already canonical
    serde_json::to_string(v).expect("values always serialize")
}

pub fn digest(v: &Value) -> String {
    let hash = Sha256::digest(canonical_json(v).as_bytes());
    hash.iter().map(|b| format!("{b:02x}")).collect()
}

impl RunRecord {
    pub fn new(command: &str, params: Value, result: &Value, wall: Duration) -> Self {
        RunRecord {
            command: command.to_string(),
            params,
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_secs: wall.as_secs_f64(),
            digest: digest(result),
        }
    }

    /// Appends the record as one JSON line.
    pub fn append_to(&self, path: &Path) -> std::io::Result<()> {
        let mut f = OpenOptions::new().create(true).append(true).open(path)?;
        let mut line = serde_json::to_string(self).map_err(std::io::Error::other)?;
        line.push('\n');
        f.write_all(line.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn digest_ignores_key_order() {
        let a: Value = serde_json::from_str(r#"{"b":1,"a":[1,2]}"#).unwrap();
        let b = json!({"a": [1, 2], "b": 1});
        assert_eq!(digest(&a), digest(&b));
        assert_eq!(canonical_json(&a), r#"{"a":[1,2],"b":1}"#);
    }

    #[test]
    fn digest_is_sha256_hex() {
        // sha256 of the two bytes "{}"
        assert_eq!(
            digest(&json!({})),
            "44136fa355b3678a1146ad16f7e8649e94fb4fc21fe77e8310c060f61caaff8a"
        );
    }
}
