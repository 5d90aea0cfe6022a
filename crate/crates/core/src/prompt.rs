//! Prompt templates: one-shot demonstrations for generation tasks and
//! two-step zero-shot chain-of-thought for the comparison judgement.
//!
//! Template files carry a small front matter (`name`, `version`, `slots`)
//! followed by `@@system`, optional `@@demo-user`/`@@demo-assistant`, and
//! `@@user` blocks. `{{slot}}` placeholders are filled at render time. Every
//! rendered request starts its final user message with a task marker line.

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use crate::llm::{ChatMessage, Role, TaskTag};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("missing slot `{0}`")]
    MissingSlot(String),
    #[error("template {name}: {reason}")]
    InvalidTemplate { name: String, reason: String },
    #[error("no SAME/DIFFERENT verdict in reply")]
    UnparseableVerdict,
    #[error("reading templates: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub name: TaskTag,
    pub version: u32,
    pub slots: Vec<String>,
    pub system_text: String,
    pub user_skeleton: String,
    /// One-shot demonstration: (user, assistant).
    pub demo: Option<(String, String)>,
}

/// `[[task:<tag>]]`, the first line of every rendered final user message.
pub fn marker(tag: TaskTag) -> String {
    format!("[[task:{}]]", tag.as_str())
}

pub fn placeholders(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(start) = rest.find("{{") {
        let after = &rest[start + 2..];
        match after.find("}}") {
            Some(end) => {
                out.push(after[..end].trim().to_string());
                rest = &after[end + 2..];
            }
            None => break,
        }
    }
    out
}

impl PromptTemplate {
    pub fn parse(text: &str) -> Result<Self, PromptError> {
        let invalid = |name: &str, reason: &str| PromptError::InvalidTemplate {
            name: name.to_string(),
            reason: reason.to_string(),
        };
        let text = text.replace("\r\n", "\n");
        let body = text
            .strip_prefix("---\n")
            .ok_or_else(|| invalid("?", "missing front matter"))?;
        let (header, blocks) = body
            .split_once("\n---\n")
            .ok_or_else(|| invalid("?", "unterminated front matter"))?;
        let mut fields = BTreeMap::new();
        for line in header.lines() {
            if let Some((k, v)) = line.split_once(':') {
                fields.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        let name = fields.get("name").cloned().unwrap_or_default();
        let tag = TaskTag::parse(&name).ok_or_else(|| invalid(&name, "unknown template name"))?;
        let version = fields
            .get("version")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| invalid(&name, "missing or bad version"))?;
        let slots: Vec<String> = fields
            .get("slots")
            .map(|s| {
                s.split(',')
                    .map(|x| x.trim().to_string())
                    .filter(|x| !x.is_empty())
                    .collect()
            })
            .unwrap_or_default();

        let mut sections: BTreeMap<String, String> = BTreeMap::new();
        let mut current: Option<String> = None;
        for line in blocks.lines() {
            if let Some(block) = line.strip_prefix("@@") {
                current = Some(block.trim().to_string());
                sections.entry(block.trim().to_string()).or_default();
                continue;
            }
            let Some(key) = &current else {
                if line.trim().is_empty() {
                    continue;
                }
                return Err(invalid(&name, "text before the first @@ block"));
            };
            let section = sections.get_mut(key).expect("block inserted");
            section.push_str(line);
            section.push('\n');
        }
        let take = |sections: &mut BTreeMap<String, String>, key: &str| {
            sections.remove(key).map(|s| s.trim_end_matches('\n').to_string())
        };
        let system_text = take(&mut sections, "system").ok_or_else(|| invalid(&name, "no @@system block"))?;
        let user_skeleton = take(&mut sections, "user").ok_or_else(|| invalid(&name, "no @@user block"))?;
        let demo = match (take(&mut sections, "demo-user"), take(&mut sections, "demo-assistant")) {
            (Some(u), Some(a)) => Some((u, a)),
            (None, None) => None,
            _ => return Err(invalid(&name, "demo needs both user and assistant blocks")),
        };
        if let Some(extra) = sections.keys().next() {
            return Err(invalid(&name, &format!("unknown block @@{extra}")));
        }
        for slot in placeholders(&user_skeleton) {
            if !slots.contains(&slot) {
                return Err(invalid(&name, &format!("slot `{slot}` is not declared")));
            }
        }
        Ok(PromptTemplate {
            name: tag,
            version,
            slots,
            system_text,
            user_skeleton,
            demo,
        })
    }

    pub fn render(&self, slots: &BTreeMap<String, String>) -> Result<Vec<ChatMessage>, PromptError> {
        let mut user = self.user_skeleton.clone();
        for slot in &self.slots {
            let value = slots
                .get(slot)
                .ok_or_else(|| PromptError::MissingSlot(slot.clone()))?;
            user = user.replace(&format!("{{{{{slot}}}}}"), value);
        }
        let mut messages = vec![ChatMessage::new(Role::System, &self.system_text)];
        if let Some((demo_user, demo_assistant)) = &self.demo {
            messages.push(ChatMessage::new(Role::User, demo_user));
            messages.push(ChatMessage::new(Role::Assistant, demo_assistant));
        }
        messages.push(ChatMessage::new(
            Role::User,
            format!("{}\n{}", marker(self.name), user.trim_end()),
        ));
        Ok(messages)
    }
}

/// The five templates of the pipeline.
#[derive(Debug, Clone)]
pub struct PromptSet {
    templates: BTreeMap<TaskTag, PromptTemplate>,
}

const BUILTIN: &[(&str, &str)] = &[
    ("translate", include_str!("../prompts/translate.prompt")),
    ("back-translate", include_str!("../prompts/back-translate.prompt")),
    ("compare-step1", include_str!("../prompts/compare-step1.prompt")),
    ("compare-step2", include_str!("../prompts/compare-step2.prompt")),
    ("repair", include_str!("../prompts/repair.prompt")),
];

impl PromptSet {
    pub fn builtin() -> Self {
        Self::from_texts(BUILTIN.iter().map(|(_, t)| t.to_string()))
            .expect("builtin templates are valid")
    }

    fn from_texts(texts: impl IntoIterator<Item = String>) -> Result<Self, PromptError> {
        let mut templates = BTreeMap::new();
        for text in texts {
            let t = PromptTemplate::parse(&text)?;
            templates.insert(t.name, t);
        }
        for tag in TaskTag::ALL {
            if !templates.contains_key(&tag) {
                return Err(PromptError::InvalidTemplate {
                    name: tag.as_str().to_string(),
                    reason: "template missing from set".into(),
                });
            }
        }
        Ok(PromptSet { templates })
    }

    /// Loads `<name>.prompt` for every task from `dir`.
    pub fn load_dir(dir: &Path) -> Result<Self, PromptError> {
        let mut texts = Vec::new();
        for (name, _) in BUILTIN {
            let path = dir.join(format!("{name}.prompt"));
            texts.push(
                std::fs::read_to_string(&path)
                    .map_err(|e| PromptError::Io(format!("{}: {e}", path.display())))?,
            );
        }
        Self::from_texts(texts)
    }

    pub fn get(&self, tag: TaskTag) -> &PromptTemplate {
        &self.templates[&tag]
    }

    pub fn render(
        &self,
        tag: TaskTag,
        slots: &BTreeMap<String, String>,
    ) -> Result<Vec<ChatMessage>, PromptError> {
        self.get(tag).render(slots)
    }

    /// Version string of the whole set, e.g. `translate@1,...`.
    pub fn versions(&self) -> String {
        self.templates
            .values()
            .map(|t| format!("{}@{}", t.name.as_str(), t.version))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Lines between `<name>` and `</name>` in `content`, blank lines dropped.
pub fn extract_section(content: &str, name: &str) -> Option<Vec<String>> {
    let open = format!("<{name}>");
    let close = format!("</{name}>");
    let start = content.find(&open)? + open.len();
    let end = start + content[start..].find(&close)?;
    Some(
        content[start..end]
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Same,
    Different,
}

/// The last standalone SAME or DIFFERENT token, case-insensitively.
pub fn extract_verdict(reply: &str) -> Result<Verdict, PromptError> {
    reply
        .split(|c: char| !c.is_ascii_alphanumeric())
        .rev()
        .find_map(|w| {
            if w.eq_ignore_ascii_case("same") {
                Some(Verdict::Same)
            } else if w.eq_ignore_ascii_case("different") {
                Some(Verdict::Different)
            } else {
                None
            }
        })
        .ok_or(PromptError::UnparseableVerdict)
}
