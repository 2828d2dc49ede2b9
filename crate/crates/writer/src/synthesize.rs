//! Answer synthesis: one chat call whose reply is parsed into statements
//! with bracketed citations.

use crate::{CitationedAnswer, Statement, WriterError};
use skein_core::{Document, Query, Value, VertexId};
use skein_gateway::{ChatRequest, Gateway, Message};

/// Builds the writer prompt: the query, numbered evidence documents, and
/// the structured sub-task outputs.
fn writer_prompt(
    query: &Query,
    subtask_outputs: &[(VertexId, Value)],
    documents: &[Document],
) -> String {
    let mut prompt = String::new();
    prompt.push_str(&format!("Question: {}\n", query.text));
    if !documents.is_empty() {
        prompt.push_str("Documents:\n");
        for (i, d) in documents.iter().enumerate() {
            prompt.push_str(&format!("[{}] {}\n{}\n", i + 1, d.title, d.content));
        }
    }
    if !subtask_outputs.is_empty() {
        prompt.push_str("Sub-task results:\n");
        for (id, value) in subtask_outputs {
            prompt.push_str(&format!("{id}: {value}\n"));
        }
    }
    prompt.push_str(
        "Write an accurate, concise answer. Cite supporting documents with bracketed numbers like [1][2] at the end of each sentence; cite at least one document and at most three per sentence, using a minimal sufficient subset.",
    );
    prompt
}

/// Parses a writer reply into statements. Each non-empty line becomes one
/// statement; bracketed numbers anywhere in the line are its citations and
/// are stripped from the claim text. Citations must reference provided
/// documents, and when documents exist every statement must cite at least
/// one.
pub fn parse_statements(
    reply: &str,
    document_count: usize,
) -> Result<Vec<Statement>, WriterError> {
    let mut statements = Vec::new();
    for line in reply.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut claim = String::new();
        let mut citations = Vec::new();
        let mut chars = line.chars().peekable();
        while let Some(c) = chars.next() {
            if c == '[' {
                let mut number = String::new();
                let mut closed = false;
                for inner in chars.by_ref() {
                    if inner == ']' {
                        closed = true;
                        break;
                    }
                    number.push(inner);
                }
                match (closed, number.parse::<usize>()) {
                    (true, Ok(idx)) => {
                        if idx == 0 || idx > document_count {
                            return Err(WriterError::CitationOutOfRange {
                                index: idx,
                                count: document_count,
                            });
                        }
                        if !citations.contains(&idx) {
                            citations.push(idx);
                        }
                    }
                    // Not a citation marker; keep the text verbatim.
                    _ => {
                        claim.push('[');
                        claim.push_str(&number);
                        if closed {
                            claim.push(']');
                        }
                    }
                }
            } else {
                claim.push(c);
            }
        }
        let claim = claim.trim().to_string();
        if claim.is_empty() {
            continue;
        }
        if document_count > 0 && citations.is_empty() {
            return Err(WriterError::MissingCitations(document_count));
        }
        citations.sort_unstable();
        statements.push(Statement { claim, citations });
    }
    if statements.is_empty() {
        return Err(WriterError::ParseError(format!(
            "no statements in reply {reply:?}"
        )));
    }
    Ok(statements)
}

/// Synthesizes the final answer. Parse failures are retried once with the
/// error appended to the prompt.
pub fn synthesize(
    query: &Query,
    subtask_outputs: &[(VertexId, Value)],
    documents: &[Document],
    gateway: &Gateway,
) -> Result<CitationedAnswer, WriterError> {
    let prompt = writer_prompt(query, subtask_outputs, documents);
    let reply = gateway.chat(&ChatRequest::new("write", vec![Message::user(&prompt)]))?;
    match parse_statements(&reply.text, documents.len()) {
        Ok(statements) => Ok(CitationedAnswer {
            statements,
            degraded: false,
        }),
        Err(parse_error) => {
            let repair = format!(
                "{prompt}\n\nThe previous reply could not be parsed ({parse_error}). Reply again with one sentence per line and bracketed citations."
            );
            let retry = gateway.chat(&ChatRequest::new("write", vec![Message::user(&repair)]))?;
            let statements = parse_statements(&retry.text, documents.len())?;
            Ok(CitationedAnswer {
                statements,
                degraded: false,
            })
        }
    }
}

/// Renders an answer with its citations back into bracketed text form.
pub fn render_answer(answer: &CitationedAnswer) -> String {
    answer
        .statements
        .iter()
        .map(|s| {
            let marks: String = s.citations.iter().map(|c| format!("[{c}]")).collect();
            if marks.is_empty() {
                s.claim.clone()
            } else {
                format!("{} {marks}", s.claim)
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}
