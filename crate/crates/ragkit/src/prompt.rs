//! Final prompt assembly: system prompt, retrieved context, and user turn
//! serialized into the ChatML delimiter format.
//!
//! [`render_chatml`] is a byte-exact contract checked against golden files:
//! the system turn holds the system prompt followed by the optional context
//! block, the user turn holds the user prompt verbatim, and the output ends
//! with an opened assistant turn ready for generation. [`parse_chatml`]
//! recovers the fields from rendered output for round-trip checks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ground::format_context;

/// Everything needed to render one model input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    /// System prompt; must be non-empty.
    pub system: String,
    /// Retrieved context chunks in presentation order; may be empty.
    #[serde(default)]
    pub context_chunks: Vec<String>,
    /// User prompt, kept verbatim so it can be reused as a retrieval query.
    pub user: String,
    /// Prefix each context chunk with its citation token (`[[i]] `).
    #[serde(default)]
    pub with_citations: bool,
}

impl PromptBundle {
    /// Checks the bundle invariants (non-empty system prompt).
    pub fn validate(&self) -> Result<()> {
        if self.system.is_empty() {
            return Err(Error::InvalidInput("bundle system prompt must be non-empty".into()));
        }
        Ok(())
    }
}

/// Serializes a bundle into the ChatML prompt format.
///
/// The output is exactly
/// `<|im_start|>system\n{system}\n{context}<|im_end|>\n<|im_start|>user\n{user}<|im_end|>\n<|im_start|>assistant\n`
/// where the context block comes from
/// [`format_context`](crate::ground::format_context) and is omitted entirely
/// when there are no context chunks; the newline after the system prompt is
/// always present.
pub fn render_chatml(bundle: &PromptBundle) -> String {
    let mut out = String::new();
    out.push_str("<|im_start|>system\n");
    out.push_str(&bundle.system);
    out.push('\n');
    if !bundle.context_chunks.is_empty() {
        out.push_str(&format_context(&bundle.context_chunks, bundle.with_citations));
    }
    out.push_str("<|im_end|>\n<|im_start|>user\n");
    out.push_str(&bundle.user);
    out.push_str("<|im_end|>\n<|im_start|>assistant\n");
    out
}

/// Fields recovered from a rendered ChatML prompt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedChatml {
    /// System prompt text (context block removed when it was citation-marked).
    pub system: String,
    /// Context chunk texts, with citation tokens stripped.
    pub context_chunks: Vec<String>,
    /// User prompt text.
    pub user: String,
}

/// Parses a rendered ChatML prompt back into its fields.
///
/// Citation-marked context lines (`[[i]] ...`) are split out of the system
/// turn and their markers stripped; a context block rendered without
/// citations is indistinguishable from a multi-line system prompt and is
/// returned as part of `system`.
pub fn parse_chatml(rendered: &str) -> Result<ParsedChatml> {
    let body = rendered
        .strip_prefix("<|im_start|>system\n")
        .ok_or_else(|| Error::InvalidInput("missing system turn header".into()))?;
    let (system_turn, rest) = body
        .split_once("<|im_end|>\n<|im_start|>user\n")
        .ok_or_else(|| Error::InvalidInput("missing user turn header".into()))?;
    let (user, tail) = rest
        .split_once("<|im_end|>\n<|im_start|>assistant\n")
        .ok_or_else(|| Error::InvalidInput("missing assistant turn header".into()))?;
    if !tail.is_empty() {
        return Err(Error::InvalidInput("unexpected content after assistant header".into()));
    }
    let mut system_lines: Vec<&str> = Vec::new();
    let mut context_chunks: Vec<String> = Vec::new();
    for line in system_turn.split('\n') {
        let expected_marker = format!("[[{}]] ", context_chunks.len());
        if let Some(text) = line.strip_prefix(&expected_marker) {
            context_chunks.push(text.to_string());
        } else if context_chunks.is_empty() {
            system_lines.push(line);
        } else {
            return Err(Error::InvalidInput(
                "malformed context block after citation markers".into(),
            ));
        }
    }
    if context_chunks.is_empty() {
        // Without a context block the turn is `{system}\n`, so the final
        // split fragment must be the empty remainder of that newline.
        match system_lines.pop() {
            Some("") => {}
            _ => {
                return Err(Error::InvalidInput("system turn must end with a newline".into()));
            }
        }
    }
    Ok(ParsedChatml {
        system: system_lines.join("\n"),
        context_chunks,
        user: user.to_string(),
    })
}
