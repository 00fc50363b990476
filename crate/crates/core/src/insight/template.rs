//! Versioned prompt templates with `{placeholder}` binding.
//!
//! A template file has `key: value` header lines (`template_id`, `version`,
//! `role`) followed by a `--- system` section and a `--- user` section.
//! Placeholders are `{name}` with a lowercase name; no other braces are
//! allowed. Each placeholder of the template's role must appear exactly once
//! across the two sections.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub const SUMMARY_TEMPLATE_V1: &str = include_str!("../../templates/summary.v1.txt");
pub const QUERY_TEMPLATE_V1: &str = include_str!("../../templates/query.v1.txt");

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TemplateError {
    #[error("template parse error: {0}")]
    Parse(String),
    #[error("placeholder {{{name}}} appears {count} times; expected exactly once")]
    PlaceholderCount { name: String, count: usize },
    #[error("unknown placeholder {{{0}}}")]
    UnknownPlaceholder(String),
    #[error("no binding for placeholder {{{0}}}")]
    MissingBinding(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateRole {
    Summary,
    Query,
}

impl TemplateRole {
    pub fn placeholders(self) -> &'static [&'static str] {
        match self {
            Self::Summary => &["language", "context"],
            Self::Query => &["language", "context", "question"],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Piece {
    Text(String),
    Slot(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptTemplate {
    pub template_id: String,
    pub version: u32,
    pub role: TemplateRole,
    system: Vec<Piece>,
    user: Vec<Piece>,
}

fn split_pieces(text: &str) -> Result<Vec<Piece>, TemplateError> {
    let mut pieces = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find(['{', '}']) {
        if rest.as_bytes()[open] == b'}' {
            return Err(TemplateError::Parse("unmatched '}'".into()));
        }
        let close = rest[open..]
            .find('}')
            .map(|i| open + i)
            .ok_or_else(|| TemplateError::Parse("unclosed '{'".into()))?;
        let name = &rest[open + 1..close];
        if name.is_empty() || !name.bytes().all(|b| b.is_ascii_lowercase() || b == b'_') {
            return Err(TemplateError::Parse(format!("invalid placeholder name {name:?}")));
        }
        if open > 0 {
            pieces.push(Piece::Text(rest[..open].to_owned()));
        }
        pieces.push(Piece::Slot(name.to_owned()));
        rest = &rest[close + 1..];
    }
    if !rest.is_empty() {
        pieces.push(Piece::Text(rest.to_owned()));
    }
    Ok(pieces)
}

impl PromptTemplate {
    pub fn parse(source: &str) -> Result<Self, TemplateError> {
        let (head, body) = source
            .split_once("--- system\n")
            .ok_or_else(|| TemplateError::Parse("missing `--- system` section".into()))?;
        let (system, user) = body
            .split_once("--- user\n")
            .ok_or_else(|| TemplateError::Parse("missing `--- user` section".into()))?;

        let mut header = HashMap::new();
        for line in head.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line
                .split_once(':')
                .ok_or_else(|| TemplateError::Parse(format!("bad header line {line:?}")))?;
            header.insert(k.trim(), v.trim());
        }
        let field = |k: &str| {
            header
                .get(k)
                .copied()
                .ok_or_else(|| TemplateError::Parse(format!("missing header `{k}`")))
        };
        let role = match field("role")? {
            "summary" => TemplateRole::Summary,
            "query" => TemplateRole::Query,
            other => return Err(TemplateError::Parse(format!("unknown role {other:?}"))),
        };
        let version = field("version")?
            .parse()
            .map_err(|_| TemplateError::Parse("version must be an integer".into()))?;

        let template = Self {
            template_id: field("template_id")?.to_owned(),
            version,
            role,
            system: split_pieces(system.strip_suffix('\n').unwrap_or(system))?,
            user: split_pieces(user.strip_suffix('\n').unwrap_or(user))?,
        };
        template.check_placeholders()?;
        Ok(template)
    }

    fn slots(&self) -> impl Iterator<Item = &str> {
        self.system.iter().chain(&self.user).filter_map(|p| match p {
            Piece::Slot(name) => Some(name.as_str()),
            Piece::Text(_) => None,
        })
    }

    fn check_placeholders(&self) -> Result<(), TemplateError> {
        let allowed = self.role.placeholders();
        if let Some(unknown) = self.slots().find(|s| !allowed.contains(s)) {
            return Err(TemplateError::UnknownPlaceholder(unknown.to_owned()));
        }
        for name in allowed {
            let count = self.slots().filter(|s| s == name).count();
            if count != 1 {
                return Err(TemplateError::PlaceholderCount {
                    name: (*name).to_owned(),
                    count,
                });
            }
        }
        Ok(())
    }

    pub fn summary_v1() -> Self {
        Self::parse(SUMMARY_TEMPLATE_V1).expect("shipped summary template is valid")
    }

    pub fn query_v1() -> Self {
        Self::parse(QUERY_TEMPLATE_V1).expect("shipped query template is valid")
    }
}

/// Renders `(system_text, user_text)`.
///
/// Every placeholder needs a binding, and every binding must name a
/// placeholder of the template. Bound values are inserted verbatim and never
/// re-scanned.
pub fn render_prompt(template: &PromptTemplate, bindings: &[(&str, &str)]) -> Result<(String, String), TemplateError> {
    for (name, _) in bindings {
        if !template.role.placeholders().contains(name) {
            return Err(TemplateError::UnknownPlaceholder((*name).to_owned()));
        }
    }
    let lookup = |name: &str| {
        bindings
            .iter()
            .find(|(k, _)| *k == name)
            .map(|(_, v)| *v)
            .ok_or_else(|| TemplateError::MissingBinding(name.to_owned()))
    };
    let render = |pieces: &[Piece]| -> Result<String, TemplateError> {
        let mut out = String::new();
        for piece in pieces {
            match piece {
                Piece::Text(t) => out.push_str(t),
                Piece::Slot(name) => out.push_str(lookup(name)?),
            }
        }
        Ok(out)
    };
    Ok((render(&template.system)?, render(&template.user)?))
}
