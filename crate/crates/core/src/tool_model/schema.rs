//! Typed I/O schemas for tool cards.
//!
//! On disk a type descriptor is either a bare name (`"text"`, `"number"`,
//! `"boolean"`, `"image-ref"`, `"audio-ref"`) or an object
//! `{"structured": {"field": <descriptor>, ...}}`. Field order inside a
//! structured object is preserved.

use std::fmt;

use serde::de::{self, MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemaType {
    Text,
    Number,
    Boolean,
    ImageRef,
    AudioRef,
    Structured(Vec<NamedField>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NamedField {
    pub name: String,
    pub ty: SchemaType,
}

impl NamedField {
    pub fn new(name: impl Into<String>, ty: SchemaType) -> Self {
        Self {
            name: name.into(),
            ty,
        }
    }
}

impl SchemaType {
    pub fn structured<I, S>(fields: I) -> Self
    where
        I: IntoIterator<Item = (S, SchemaType)>,
        S: Into<String>,
    {
        SchemaType::Structured(
            fields
                .into_iter()
                .map(|(n, t)| NamedField::new(n, t))
                .collect(),
        )
    }

    /// Descriptor name of the scalar kinds.
    pub fn kind_name(&self) -> &'static str {
        match self {
            SchemaType::Text => "text",
            SchemaType::Number => "number",
            SchemaType::Boolean => "boolean",
            SchemaType::ImageRef => "image-ref",
            SchemaType::AudioRef => "audio-ref",
            SchemaType::Structured(_) => "structured",
        }
    }

    fn from_kind_name(name: &str) -> Option<Self> {
        Some(match name {
            "text" | "str" | "string" => SchemaType::Text,
            "number" | "int" | "float" => SchemaType::Number,
            "boolean" | "bool" => SchemaType::Boolean,
            "image-ref" => SchemaType::ImageRef,
            "audio-ref" => SchemaType::AudioRef,
            _ => return None,
        })
    }

    /// Structural violations: empty structured kinds and duplicate field
    /// names, reported with a dotted path prefix.
    pub fn violations(&self, path: &str) -> Vec<String> {
        let mut out = Vec::new();
        if let SchemaType::Structured(fields) = self {
            if fields.is_empty() {
                out.push(format!("{path}: structured type has no fields"));
            }
            let mut seen = std::collections::BTreeSet::new();
            for f in fields {
                if !seen.insert(f.name.as_str()) {
                    out.push(format!("{path}.{}: duplicate field name", f.name));
                }
                out.extend(f.ty.violations(&format!("{path}.{}", f.name)));
            }
        }
        out
    }
}

impl fmt::Display for SchemaType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemaType::Structured(fields) => {
                write!(f, "structured{{")?;
                for (i, field) in fields.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{}: {}", field.name, field.ty)?;
                }
                write!(f, "}}")
            }
            other => f.write_str(other.kind_name()),
        }
    }
}

impl Serialize for SchemaType {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            SchemaType::Structured(fields) => {
                let mut outer = serializer.serialize_map(Some(1))?;
                outer.serialize_entry("structured", &FieldList(fields))?;
                outer.end()
            }
            other => serializer.serialize_str(other.kind_name()),
        }
    }
}

/// Ordered `name -> type` map used on the wire for structured kinds.
pub(crate) struct FieldList<'a>(pub(crate) &'a [NamedField]);

impl Serialize for FieldList<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for f in self.0 {
            map.serialize_entry(&f.name, &f.ty)?;
        }
        map.end()
    }
}

/// Deserializes a JSON object into its entries in document order.
pub(crate) struct OrderedEntries<V>(pub(crate) Vec<(String, V)>);

impl<'de, V: Deserialize<'de>> Deserialize<'de> for OrderedEntries<V> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct EntriesVisitor<V>(std::marker::PhantomData<V>);

        impl<'de, V: Deserialize<'de>> Visitor<'de> for EntriesVisitor<V> {
            type Value = OrderedEntries<V>;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a JSON object")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<Self::Value, A::Error> {
                let mut entries = Vec::new();
                while let Some((k, v)) = access.next_entry::<String, V>()? {
                    entries.push((k, v));
                }
                Ok(OrderedEntries(entries))
            }
        }

        deserializer.deserialize_map(EntriesVisitor(std::marker::PhantomData))
    }
}

impl<'de> Deserialize<'de> for SchemaType {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct TypeVisitor;

        impl<'de> Visitor<'de> for TypeVisitor {
            type Value = SchemaType;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a type name or {\"structured\": {...}}")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<SchemaType, E> {
                SchemaType::from_kind_name(v)
                    .ok_or_else(|| E::custom(format!("unknown type descriptor `{v}`")))
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<SchemaType, A::Error> {
                let key: String = access
                    .next_key()?
                    .ok_or_else(|| de::Error::custom("empty type descriptor object"))?;
                if key != "structured" {
                    return Err(de::Error::custom(format!(
                        "unknown type descriptor key `{key}`"
                    )));
                }
                let OrderedEntries(entries) = access.next_value::<OrderedEntries<SchemaType>>()?;
                if access.next_key::<String>()?.is_some() {
                    return Err(de::Error::custom("trailing keys in type descriptor"));
                }
                Ok(SchemaType::Structured(
                    entries
                        .into_iter()
                        .map(|(name, ty)| NamedField { name, ty })
                        .collect(),
                ))
            }
        }

        deserializer.deserialize_any(TypeVisitor)
    }
}
