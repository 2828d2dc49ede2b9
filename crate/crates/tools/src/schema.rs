//! Minimal typed schemas for tool inputs and outputs.
//!
//! Deliberately small: an object with named fields, each typed and
//! optionally required. Enough to ground argument construction and catch
//! malformed calls without dragging in a full JSON Schema engine.

use serde::{Deserialize, Serialize};
use skein_core::Value;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemaKind {
    String,
    Number,
    Boolean,
    Object,
    Array,
    /// Accepts any value, including structured upstream outputs.
    Any,
}

impl SchemaKind {
    fn accepts(&self, value: &Value) -> bool {
        match self {
            SchemaKind::String => value.is_string(),
            SchemaKind::Number => value.is_number(),
            SchemaKind::Boolean => value.is_boolean(),
            SchemaKind::Object => value.is_object(),
            SchemaKind::Array => value.is_array(),
            SchemaKind::Any => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub kind: SchemaKind,
    #[serde(default)]
    pub required: bool,
}

/// Schema of a JSON object payload.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolSchema {
    #[serde(default)]
    pub fields: BTreeMap<String, FieldSpec>,
}

impl ToolSchema {
    /// Builder: `ToolSchema::object([("city", SchemaKind::String, true)])`.
    pub fn object<const N: usize>(fields: [(&str, SchemaKind, bool); N]) -> Self {
        Self {
            fields: fields
                .into_iter()
                .map(|(name, kind, required)| {
                    (name.to_string(), FieldSpec { kind, required })
                })
                .collect(),
        }
    }

    /// Schema that accepts any object.
    pub fn any() -> Self {
        Self::default()
    }

    /// Validates a payload, listing the first problem found.
    pub fn check(&self, value: &Value) -> Result<(), String> {
        let Some(map) = value.as_object() else {
            return Err(format!("expected an object, got {}", type_name(value)));
        };
        for (name, spec) in &self.fields {
            match map.get(name) {
                None if spec.required => return Err(format!("missing required field {name:?}")),
                None => {}
                Some(v) if !spec.kind.accepts(v) => {
                    return Err(format!(
                        "field {name:?} expected {:?}, got {}",
                        spec.kind,
                        type_name(v)
                    ))
                }
                Some(_) => {}
            }
        }
        Ok(())
    }
}

fn type_name(value: &Value) -> &'static str {
    match value {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn required_field_enforced() {
        let schema = ToolSchema::object([("city", SchemaKind::String, true)]);
        assert!(schema.check(&json!({"city": "Beijing"})).is_ok());
        assert!(schema.check(&json!({})).is_err());
        assert!(schema.check(&json!({"city": 7})).is_err());
    }

    #[test]
    fn optional_fields_may_be_absent() {
        let schema = ToolSchema::object([
            ("a", SchemaKind::Any, true),
            ("note", SchemaKind::String, false),
        ]);
        assert!(schema.check(&json!({"a": {"nested": true}})).is_ok());
    }

    #[test]
    fn non_object_payload_rejected() {
        assert!(ToolSchema::any().check(&json!("just a string")).is_err());
    }
}
