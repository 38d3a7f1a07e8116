use std::fmt;
use std::str::FromStr;

use super::JudgeError;

const GENERAL: &str = include_str!("../../prompts/general.txt");
const REVISED: &str = include_str!("../../prompts/revised.txt");

pub const GENERAL_SHA256: &str = "260cf31a46f6d050a6834cf4a4e11bdfb94bef607c39a9c50929d8e5da403dc5";
pub const REVISED_SHA256: &str = "d2a7bf9a150bf42199e5aa71b4062297bbb25a4b04cdcda91b6a511ac15c13bd";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TemplateId {
    General,
    Revised,
}

impl TemplateId {
    pub const ALL: [TemplateId; 2] = [TemplateId::General, TemplateId::Revised];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateId::General => "general",
            TemplateId::Revised => "revised",
        }
    }

    pub fn expected_sha256(self) -> &'static str {
        match self {
            TemplateId::General => GENERAL_SHA256,
            TemplateId::Revised => REVISED_SHA256,
        }
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemplateId {
    type Err = JudgeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "general" => Ok(TemplateId::General),
            "revised" => Ok(TemplateId::Revised),
            other => Err(JudgeError::UnknownTemplate(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PromptTemplate {
    pub id: TemplateId,
    pub system_text: &'static str,
}

impl PromptTemplate {
    pub fn get(id: TemplateId) -> Self {
        let system_text = match id {
            TemplateId::General => GENERAL,
            TemplateId::Revised => REVISED,
        };
        Self { id, system_text }
    }

    pub fn sha256(&self) -> String {
        crate::hash::sha256_hex(self.system_text.as_bytes())
    }
}

/// System text for a template id ("general" or "revised").
pub fn render_prompt(id: &str) -> Result<&'static str, JudgeError> {
    Ok(PromptTemplate::get(id.parse()?).system_text)
}
