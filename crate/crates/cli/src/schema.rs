//! Structural validation of the JSON reports against the shipped schema
//! files. Supports the subset the schemas use: `type`, `properties`,
//! `required`, `items`, `enum`, and boolean `additionalProperties`.

use serde_json::Value;

const SCHEMAS: &[(&str, &str)] = &[
    ("run", include_str!("../schemas/run.schema.json")),
    ("tightness", include_str!("../schemas/tightness.schema.json")),
    ("stability", include_str!("../schemas/stability.schema.json")),
    ("sandwich", include_str!("../schemas/sandwich.schema.json")),
    ("classify", include_str!("../schemas/classify.schema.json")),
    ("sweep", include_str!("../schemas/sweep.schema.json")),
];

/// Validate `value` against the named schema; `Err` carries the first
/// violation found.
pub fn validate(name: &str, value: &Value) -> Result<(), String> {
    let raw = SCHEMAS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, s)| *s)
        .ok_or_else(|| format!("unknown schema {name}"))?;
    let schema: Value = serde_json::from_str(raw).map_err(|e| format!("schema {name}: {e}"))?;
    check(&schema, value, name)
}

fn check(schema: &Value, value: &Value, path: &str) -> Result<(), String> {
    if let Some(expected) = schema.get("type").and_then(Value::as_str) {
        let ok = match expected {
            "object" => value.is_object(),
            "array" => value.is_array(),
            "string" => value.is_string(),
            "boolean" => value.is_boolean(),
            "integer" => value.is_i64() || value.is_u64(),
            "number" => value.is_number(),
            "null" => value.is_null(),
            other => return Err(format!("{path}: unsupported schema type {other}")),
        };
        if !ok {
            return Err(format!("{path}: expected {expected}, got {value}"));
        }
    }
    if let Some(allowed) = schema.get("enum").and_then(Value::as_array) {
        if !allowed.contains(value) {
            return Err(format!("{path}: {value} not in enum"));
        }
    }
    if let Some(object) = value.as_object() {
        if let Some(required) = schema.get("required").and_then(Value::as_array) {
            for key in required.iter().filter_map(Value::as_str) {
                if !object.contains_key(key) {
                    return Err(format!("{path}: missing required field {key}"));
                }
            }
        }
        let properties = schema.get("properties").and_then(Value::as_object);
        if let Some(props) = properties {
            for (key, item) in object {
                match props.get(key) {
                    Some(subschema) => check(subschema, item, &format!("{path}.{key}"))?,
                    None => {
                        if schema.get("additionalProperties") == Some(&Value::Bool(false)) {
                            return Err(format!("{path}: unexpected field {key}"));
                        }
                    }
                }
            }
        }
    }
    if let Some(items) = value.as_array() {
        if let Some(item_schema) = schema.get("items") {
            for (i, item) in items.iter().enumerate() {
                check(item_schema, item, &format!("{path}[{i}]"))?;
            }
        }
    }
    Ok(())
}
