use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{EmailError, EmailTemplate};
use crate::filters::is_valid_filter_name;

pub const DEFAULT_TEMPLATE: &str = "default";

const DEFAULT_SUBJECT: &str = "{{course_title}}: checking in with {{team_name}}";

const DEFAULT_BODY: &str = "Hi {{student_names}},

I have been looking at recent activity for {{team_name}} and wanted to check in on how the project is going.

If anything is getting in the way, reply to this email or come to office hours.

Best regards";

/// The wording shipped as `default`. A course may overwrite it.
pub fn builtin_default() -> EmailTemplate {
    EmailTemplate::new(DEFAULT_TEMPLATE, DEFAULT_SUBJECT, DEFAULT_BODY).expect("built-in template is valid")
}

/// Templates of one course. `default` always resolves: to the saved
/// override if there is one, otherwise to [`builtin_default`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<EmailTemplate>", into = "Vec<EmailTemplate>")]
pub struct TemplateStore {
    saved: BTreeMap<String, EmailTemplate>,
}

impl From<Vec<EmailTemplate>> for TemplateStore {
    fn from(list: Vec<EmailTemplate>) -> Self {
        Self {
            saved: list.into_iter().map(|t| (t.name().to_string(), t)).collect(),
        }
    }
}

impl From<TemplateStore> for Vec<EmailTemplate> {
    fn from(store: TemplateStore) -> Self {
        store.saved.into_values().collect()
    }
}

impl TemplateStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Saves `template` under `name` (the template's own name is replaced).
    /// `default` may be overwritten but never created anew, since it exists
    /// from the start.
    pub fn save(&mut self, name: &str, template: EmailTemplate, overwrite: bool) -> Result<&EmailTemplate, EmailError> {
        if !is_valid_filter_name(name) {
            return Err(EmailError::InvalidName(name.to_string()));
        }
        let exists = name == DEFAULT_TEMPLATE || self.saved.contains_key(name);
        if exists && !overwrite {
            return Err(EmailError::NameExists(name.to_string()));
        }
        self.saved.insert(name.to_string(), template.with_name(name));
        Ok(&self.saved[name])
    }

    pub fn get(&self, name: &str) -> Result<EmailTemplate, EmailError> {
        match self.saved.get(name) {
            Some(t) => Ok(t.clone()),
            None if name == DEFAULT_TEMPLATE => Ok(builtin_default()),
            None => Err(EmailError::NotFound(name.to_string())),
        }
    }

    /// All templates ordered by name, `default` included.
    pub fn list(&self) -> Vec<EmailTemplate> {
        let mut out: Vec<EmailTemplate> = self.saved.values().cloned().collect();
        if !self.saved.contains_key(DEFAULT_TEMPLATE) {
            out.push(builtin_default());
            out.sort_by(|a, b| a.name().cmp(b.name()));
        }
        out
    }

    pub fn names(&self) -> Vec<String> {
        self.list().into_iter().map(|t| t.name().to_string()).collect()
    }

    pub fn delete(&mut self, name: &str) -> Result<EmailTemplate, EmailError> {
        if name == DEFAULT_TEMPLATE {
            return Err(EmailError::Forbidden(name.to_string()));
        }
        self.saved
            .remove(name)
            .ok_or_else(|| EmailError::NotFound(name.to_string()))
    }
}
