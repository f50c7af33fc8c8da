//! `{{slot}}` interpolation for the prompt assets.

use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("template slot {{{{{0}}}}} has no value")]
    MissingSlot(String),
    #[error("unterminated slot starting at byte {0}")]
    Unterminated(usize),
}

/// Replaces each `{{name}}` with its value. A slot without a value is an
/// error; values are inserted verbatim and never re-scanned.
pub fn render(template: &str, slots: &BTreeMap<&str, String>) -> Result<String, TemplateError> {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    let mut offset = 0;
    while let Some(start) = rest.find("{{") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        let end = after.find("}}").ok_or(TemplateError::Unterminated(offset + start))?;
        let name = after[..end].trim();
        let value = slots.get(name).ok_or_else(|| TemplateError::MissingSlot(name.to_string()))?;
        out.push_str(value);
        let consumed = start + 2 + end + 2;
        offset += consumed;
        rest = &rest[consumed..];
    }
    out.push_str(rest);
    Ok(out)
}

/// Slot names referenced by a template, in order of first appearance.
pub fn slots(template: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let mut rest = template;
    while let Some(start) = rest.find("{{") {
        let after = &rest[start + 2..];
        let Some(end) = after.find("}}") else { break };
        let name = after[..end].trim().to_string();
        if !out.contains(&name) {
            out.push(name);
        }
        rest = &after[end + 2..];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fills_slots() {
        let slots = BTreeMap::from([("q", "why {{x}}".to_string())]);
        assert_eq!(render("Q: {{q}}!", &slots).unwrap(), "Q: why {{x}}!");
        assert_eq!(render("{{ q }}", &slots).unwrap(), "why {{x}}");
    }

    #[test]
    fn errors() {
        let slots = BTreeMap::new();
        assert_eq!(render("a {{b}}", &slots), Err(TemplateError::MissingSlot("b".into())));
        assert_eq!(render("a {{b", &slots), Err(TemplateError::Unterminated(2)));
        assert_eq!(render("plain", &slots).unwrap(), "plain");
    }

    #[test]
    fn lists_slots() {
        assert_eq!(slots("{{a}} {{b}} {{a}}"), ["a", "b"]);
    }
}
