//! Prompt templates, addressed by tag. Built-in templates ship with the
//! crate; a config directory can override any of them file-by-file.

use std::collections::BTreeMap;
use std::path::Path;

const BUILTIN: &[(&str, &str)] = &[
    ("triage", include_str!("../prompts/triage.txt")),
    ("plan-cot", include_str!("../prompts/plan-cot.txt")),
    ("plan-sketch", include_str!("../prompts/plan-sketch.txt")),
    ("replan-sketch", include_str!("../prompts/replan-sketch.txt")),
    ("augment-sketch", include_str!("../prompts/augment-sketch.txt")),
    ("assess", include_str!("../prompts/assess.txt")),
    ("tool-args", include_str!("../prompts/tool-args.txt")),
];

#[derive(Debug, Clone)]
pub struct PromptStore {
    templates: BTreeMap<String, String>,
}

impl PromptStore {
    pub fn builtin() -> Self {
        Self {
            templates: BUILTIN
                .iter()
                .map(|(tag, text)| (tag.to_string(), text.to_string()))
                .collect(),
        }
    }

    /// Builtin templates with any `<tag>.txt` files in `dir` layered over
    /// them.
    pub fn with_overrides(dir: &Path) -> std::io::Result<Self> {
        let mut store = Self::builtin();
        if dir.is_dir() {
            for entry in std::fs::read_dir(dir)? {
                let entry = entry?;
                let path = entry.path();
                if path.extension().and_then(|e| e.to_str()) == Some("txt") {
                    if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                        store
                            .templates
                            .insert(stem.to_string(), std::fs::read_to_string(&path)?);
                    }
                }
            }
        }
        Ok(store)
    }

    /// Renders a template, substituting each `{name}` placeholder from
    /// `vars`. Braces that are not listed placeholders (JSON examples in
    /// the template text) pass through untouched.
    pub fn render(&self, tag: &str, vars: &[(&str, &str)]) -> String {
        let mut text = self
            .templates
            .get(tag)
            .unwrap_or_else(|| panic!("unknown prompt template {tag:?}"))
            .clone();
        for (name, value) in vars {
            text = text.replace(&format!("{{{name}}}"), value);
        }
        text
    }
}
