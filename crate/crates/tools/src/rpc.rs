//! JSON-RPC 2.0 client for remote tool endpoints.
//!
//! The wire protocol is HTTP + JSON-RPC 2.0 with method `tools/call` and
//! params `{"name": <tool id>, "arguments": <args>}`.

use crate::ToolError;
use serde::{Deserialize, Serialize};
use skein_core::{ToolId, Value};
use std::time::Duration;

pub const METHOD_TOOLS_CALL: &str = "tools/call";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RpcRequest {
    pub jsonrpc: String,
    pub id: u64,
    pub method: String,
    pub params: RpcParams,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RpcParams {
    pub name: String,
    pub arguments: Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RpcError {
    pub code: i64,
    pub message: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RpcResponse {
    pub jsonrpc: String,
    pub id: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<RpcError>,
}

impl RpcRequest {
    pub fn tools_call(tool: &ToolId, arguments: Value) -> Self {
        Self {
            jsonrpc: "2.0".into(),
            id: 1,
            method: METHOD_TOOLS_CALL.into(),
            params: RpcParams {
                name: tool.to_string(),
                arguments,
            },
        }
    }
}

/// Calls a remote tool, mapping transport timeouts to `ToolUnresponsive`
/// and protocol errors to `RemoteFault`.
pub fn call_remote(
    url: &str,
    tool: &ToolId,
    arguments: &Value,
    timeout_ms: u64,
) -> Result<Value, ToolError> {
    let client = reqwest::blocking::Client::builder()
        .timeout(Duration::from_millis(timeout_ms))
        .build()
        .map_err(|e| ToolError::RemoteFault {
            tool: tool.clone(),
            message: e.to_string(),
        })?;
    let request = RpcRequest::tools_call(tool, arguments.clone());
    let response = client.post(url).json(&request).send().map_err(|e| {
        if e.is_timeout() {
            ToolError::ToolUnresponsive {
                tool: tool.clone(),
                timeout_ms,
            }
        } else {
            ToolError::RemoteFault {
                tool: tool.clone(),
                message: e.to_string(),
            }
        }
    })?;
    let parsed: RpcResponse = response.json().map_err(|e| ToolError::RemoteFault {
        tool: tool.clone(),
        message: format!("malformed JSON-RPC reply: {e}"),
    })?;
    if let Some(err) = parsed.error {
        return Err(ToolError::RemoteFault {
            tool: tool.clone(),
            message: format!("{} (code {})", err.message, err.code),
        });
    }
    parsed.result.ok_or_else(|| ToolError::RemoteFault {
        tool: tool.clone(),
        message: "JSON-RPC reply had neither result nor error".into(),
    })
}
