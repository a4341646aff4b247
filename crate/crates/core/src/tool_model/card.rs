//! Tool cards: identity, typed I/O schema, domain tags and worked examples.
//!
//! The JSON form mirrors the metadata table used for published tool cards:
//!
//! ```json
//! {
//!   "tool_name": "Medical_Object_Detection",
//!   "description": "...",
//!   "input": {"image": "image-ref", "prompt": {"type": "text", "required": false}},
//!   "output": {"detections": {"structured": {"name": "text"}}},
//!   "domain_tags": ["medical"],
//!   "example": {"input": {...}, "output": {...}}
//! }
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use super::schema::{OrderedEntries, SchemaType};
use super::ToolModelError;

#[derive(Debug, Clone, PartialEq)]
pub struct InputField {
    pub name: String,
    pub ty: SchemaType,
    pub required: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputField {
    pub name: String,
    pub ty: SchemaType,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CardExample {
    #[serde(default)]
    pub input: BTreeMap<String, Value>,
    #[serde(default)]
    pub output: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToolCard {
    pub name: String,
    pub description: String,
    pub inputs: Vec<InputField>,
    pub outputs: Vec<OutputField>,
    pub domain_tags: Vec<String>,
    pub examples: Vec<CardExample>,
}

impl ToolCard {
    pub fn new(name: impl Into<String>, description: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            description: description.into(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            domain_tags: Vec::new(),
            examples: Vec::new(),
        }
    }

    pub fn input(mut self, name: impl Into<String>, ty: SchemaType) -> Self {
        self.inputs.push(InputField {
            name: name.into(),
            ty,
            required: true,
        });
        self
    }

    pub fn optional_input(mut self, name: impl Into<String>, ty: SchemaType) -> Self {
        self.inputs.push(InputField {
            name: name.into(),
            ty,
            required: false,
        });
        self
    }

    pub fn output(mut self, name: impl Into<String>, ty: SchemaType) -> Self {
        self.outputs.push(OutputField {
            name: name.into(),
            ty,
        });
        self
    }

    pub fn tag(mut self, tag: impl Into<String>) -> Self {
        self.domain_tags.push(tag.into());
        self
    }

    pub fn example(mut self, example: CardExample) -> Self {
        self.examples.push(example);
        self
    }

    pub fn required_inputs(&self) -> impl Iterator<Item = &InputField> {
        self.inputs.iter().filter(|f| f.required)
    }

    pub fn from_json_str(raw: &str) -> Result<Self, ToolModelError> {
        serde_json::from_str(raw).map_err(|e| ToolModelError::CardFormat(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ToolModelError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| ToolModelError::CardFormat(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&raw)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("tool card serializes")
    }
}

/// Checks every card invariant. An empty report means the card is valid.
pub fn validate_card(card: &ToolCard) -> Vec<String> {
    let mut report = Vec::new();
    if card.name.trim().is_empty() {
        report.push("name empty".to_string());
    }
    let mut seen = std::collections::BTreeSet::new();
    for f in &card.inputs {
        if f.name.is_empty() {
            report.push("input: empty field name".to_string());
        }
        if !seen.insert(f.name.as_str()) {
            report.push(format!("input.{}: duplicate field name", f.name));
        }
        report.extend(f.ty.violations(&format!("input.{}", f.name)));
    }
    let mut seen = std::collections::BTreeSet::new();
    for f in &card.outputs {
        if f.name.is_empty() {
            report.push("output: empty field name".to_string());
        }
        if !seen.insert(f.name.as_str()) {
            report.push(format!("output.{}: duplicate field name", f.name));
        }
        report.extend(f.ty.violations(&format!("output.{}", f.name)));
    }
    for (i, ex) in card.examples.iter().enumerate() {
        for f in card.required_inputs() {
            if !ex.input.contains_key(&f.name) {
                report.push(format!(
                    "example[{i}].input.{}: required field missing",
                    f.name
                ));
            }
        }
    }
    report
}

// ---------------------------------------------------------------------------
// JSON form
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum InputDescriptor {
    Bare(SchemaType),
    Full {
        #[serde(rename = "type")]
        ty: SchemaType,
        #[serde(default = "default_true")]
        required: bool,
    },
}

fn default_true() -> bool {
    true
}

#[derive(Deserialize)]
struct CardWire {
    tool_name: String,
    #[serde(default)]
    description: String,
    #[serde(default = "empty_entries")]
    input: OrderedEntries<InputDescriptor>,
    #[serde(default = "empty_entries")]
    output: OrderedEntries<SchemaType>,
    #[serde(default)]
    domain_tags: Vec<String>,
    #[serde(default)]
    example: Option<CardExample>,
    #[serde(default)]
    examples: Vec<CardExample>,
}

fn empty_entries<V>() -> OrderedEntries<V> {
    OrderedEntries(Vec::new())
}

impl<'de> Deserialize<'de> for ToolCard {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let wire = CardWire::deserialize(deserializer)?;
        let inputs = wire
            .input
            .0
            .into_iter()
            .map(|(name, d)| match d {
                InputDescriptor::Bare(ty) => InputField {
                    name,
                    ty,
                    required: true,
                },
                InputDescriptor::Full { ty, required } => InputField { name, ty, required },
            })
            .collect();
        let outputs = wire
            .output
            .0
            .into_iter()
            .map(|(name, ty)| OutputField { name, ty })
            .collect();
        let mut examples: Vec<CardExample> = wire.example.into_iter().collect();
        examples.extend(wire.examples);
        Ok(ToolCard {
            name: wire.tool_name,
            description: wire.description,
            inputs,
            outputs,
            domain_tags: wire.domain_tags,
            examples,
        })
    }
}

struct InputMap<'a>(&'a [InputField]);

impl Serialize for InputMap<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for f in self.0 {
            if f.required {
                map.serialize_entry(&f.name, &f.ty)?;
            } else {
                map.serialize_entry(
                    &f.name,
                    &InputDescriptor::Full {
                        ty: f.ty.clone(),
                        required: false,
                    },
                )?;
            }
        }
        map.end()
    }
}

struct OutputMap<'a>(&'a [OutputField]);

impl Serialize for OutputMap<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for f in self.0 {
            map.serialize_entry(&f.name, &f.ty)?;
        }
        map.end()
    }
}

impl Serialize for ToolCard {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = serializer.serialize_map(None)?;
        map.serialize_entry("tool_name", &self.name)?;
        map.serialize_entry("description", &self.description)?;
        map.serialize_entry("input", &InputMap(&self.inputs))?;
        map.serialize_entry("output", &OutputMap(&self.outputs))?;
        if !self.domain_tags.is_empty() {
            map.serialize_entry("domain_tags", &self.domain_tags)?;
        }
        match self.examples.as_slice() {
            [] => {}
            [one] => map.serialize_entry("example", one)?,
            many => map.serialize_entry("examples", many)?,
        }
        map.end()
    }
}
