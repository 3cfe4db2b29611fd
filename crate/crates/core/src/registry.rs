// SPDX-License-Identifier: Apache-2.0

//! The node library: an immutable set of [`NodeSpec`]s loaded from a
//! versioned JSON file.
//!
//! The canonical library ships with the crate (`data/registry.json`) and is
//! available through [`Registry::canonical`]. Any other file with the same
//! schema can be loaded with [`load_registry`].

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const CANONICAL_REGISTRY: &str = include_str!("../data/registry.json");

/// Node category. Input nodes have no input sockets, output nodes no output
/// sockets, processors have both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Input,
    Output,
    Processor,
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Category::Input => "input",
            Category::Output => "output",
            Category::Processor => "processor",
        })
    }
}

/// Data carried along an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataType {
    Image,
    Text,
    Masks,
    Landmarks,
    Tensor,
    Url,
    StringList,
}

impl DataType {
    /// Vision-side types (image and the intermediate features derived from it).
    pub fn is_visual(self) -> bool {
        matches!(
            self,
            DataType::Image | DataType::Masks | DataType::Landmarks | DataType::Tensor
        )
    }

    pub fn is_textual(self) -> bool {
        matches!(self, DataType::Text | DataType::Url | DataType::StringList)
    }
}

impl fmt::Display for DataType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DataType::Image => "image",
            DataType::Text => "text",
            DataType::Masks => "masks",
            DataType::Landmarks => "landmarks",
            DataType::Tensor => "tensor",
            DataType::Url => "url",
            DataType::StringList => "string_list",
        })
    }
}

/// A typed socket on a node. `data_types` is the allow-list of accepted (for
/// inputs) or produced (for outputs) data types.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SocketSpec {
    #[serde(rename = "id")]
    pub socket_id: String,
    #[serde(rename = "dataTypes")]
    pub data_types: Vec<DataType>,
}

impl SocketSpec {
    pub fn accepts_any_of(&self, other: &SocketSpec) -> bool {
        self.data_types.iter().any(|t| other.data_types.contains(t))
    }
}

/// Scalar node parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Bool(b) => write!(f, "{b}"),
            ParamValue::Int(i) => write!(f, "{i}"),
            ParamValue::Float(x) => write!(f, "{x}"),
            ParamValue::Text(s) => write!(f, "{s:?}"),
        }
    }
}

impl From<&str> for ParamValue {
    fn from(s: &str) -> Self {
        ParamValue::Text(s.to_string())
    }
}

/// Static definition of one primitive node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NodeSpec {
    pub node_spec_id: String,
    pub category: Category,
    /// One-line description used by the node selector.
    pub short_description: String,
    /// Detailed description used by the code writer.
    pub description: String,
    pub input_specs: Vec<SocketSpec>,
    pub output_specs: Vec<SocketSpec>,
    pub recommended_nodes: Vec<String>,
    pub default_params: BTreeMap<String, ParamValue>,
    pub examples: Vec<String>,
    /// Free-form note on which parts of the spec were authored by convention.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
}

impl NodeSpec {
    pub fn input(&self, socket_id: &str) -> Option<&SocketSpec> {
        self.input_specs.iter().find(|s| s.socket_id == socket_id)
    }

    pub fn output(&self, socket_id: &str) -> Option<&SocketSpec> {
        self.output_specs.iter().find(|s| s.socket_id == socket_id)
    }

    /// The socket a bare variable reference resolves to.
    pub fn default_output(&self) -> Option<&SocketSpec> {
        self.output_specs.first()
    }

    fn sockets(&self) -> impl Iterator<Item = &SocketSpec> {
        self.input_specs.iter().chain(self.output_specs.iter())
    }

    pub fn touches_visual(&self) -> bool {
        self.sockets()
            .any(|s| s.data_types.iter().any(|t| t.is_visual()))
    }

    pub fn touches_textual(&self) -> bool {
        self.sockets()
            .any(|s| s.data_types.iter().any(|t| t.is_textual()))
    }
}

/// Copy of the spec's default parameters; empty when none are defined.
pub fn default_parameters(spec: &NodeSpec) -> BTreeMap<String, ParamValue> {
    spec.default_params.clone()
}

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("cannot read registry file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed registry JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid node spec `{spec}` ({field}): {message}")]
    Validation {
        spec: String,
        field: &'static str,
        message: String,
    },
}

impl RegistryError {
    fn invalid(spec: &str, field: &'static str, message: impl Into<String>) -> Self {
        RegistryError::Validation {
            spec: spec.to_string(),
            field,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CategoryCounts {
    pub input: usize,
    pub output: usize,
    pub processor: usize,
}

impl CategoryCounts {
    pub fn total(&self) -> usize {
        self.input + self.output + self.processor
    }
}

#[derive(Serialize, Deserialize)]
struct RegistryFile {
    version: u32,
    nodes: Vec<NodeSpec>,
}

/// Validated, immutable node library. Iteration follows file order.
#[derive(Debug, Clone, PartialEq)]
pub struct Registry {
    version: u32,
    specs: Vec<NodeSpec>,
    index: HashMap<String, usize>,
}

impl Registry {
    /// The library shipped with the crate.
    pub fn canonical() -> Registry {
        Registry::from_json(CANONICAL_REGISTRY).expect("bundled registry is valid")
    }

    pub fn from_json(text: &str) -> Result<Registry, RegistryError> {
        let file: RegistryFile = serde_json::from_str(text)?;
        Registry::from_specs(file.version, file.nodes)
    }

    pub fn from_specs(version: u32, specs: Vec<NodeSpec>) -> Result<Registry, RegistryError> {
        let mut index = HashMap::with_capacity(specs.len());
        for (i, spec) in specs.iter().enumerate() {
            if index.insert(spec.node_spec_id.clone(), i).is_some() {
                return Err(RegistryError::invalid(
                    &spec.node_spec_id,
                    "nodeSpecId",
                    "duplicate node spec id",
                ));
            }
        }
        for spec in &specs {
            check_spec(spec, &index)?;
        }
        Ok(Registry {
            version,
            specs,
            index,
        })
    }

    pub fn to_json(&self) -> String {
        let file = RegistryFile {
            version: self.version,
            nodes: self.specs.clone(),
        };
        serde_json::to_string_pretty(&file).expect("registry serializes")
    }

    pub fn version(&self) -> u32 {
        self.version
    }

    /// Exact, case-sensitive lookup.
    pub fn get_spec(&self, id: &str) -> Option<&NodeSpec> {
        self.index.get(id).map(|&i| &self.specs[i])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn specs(&self) -> impl Iterator<Item = &NodeSpec> {
        self.specs.iter()
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn counts(&self) -> CategoryCounts {
        let mut counts = CategoryCounts::default();
        for spec in &self.specs {
            match spec.category {
                Category::Input => counts.input += 1,
                Category::Output => counts.output += 1,
                Category::Processor => counts.processor += 1,
            }
        }
        counts
    }
}

/// Reads and validates a registry file.
pub fn load_registry(path: impl AsRef<Path>) -> Result<Registry, RegistryError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| RegistryError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Registry::from_json(&text)
}

fn is_snake_case(id: &str) -> bool {
    let mut chars = id.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && id
            .chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
        && !id.ends_with('_')
        && !id.contains("__")
}

fn check_sockets(spec: &NodeSpec, sockets: &[SocketSpec], field: &'static str) -> Result<(), RegistryError> {
    let mut seen = BTreeSet::new();
    for socket in sockets {
        if socket.socket_id.is_empty() {
            return Err(RegistryError::invalid(&spec.node_spec_id, field, "empty socket id"));
        }
        if !seen.insert(socket.socket_id.as_str()) {
            return Err(RegistryError::invalid(
                &spec.node_spec_id,
                field,
                format!("duplicate socket id `{}`", socket.socket_id),
            ));
        }
        if socket.data_types.is_empty() {
            return Err(RegistryError::invalid(
                &spec.node_spec_id,
                field,
                format!("socket `{}` has an empty data type allow-list", socket.socket_id),
            ));
        }
    }
    Ok(())
}

fn check_spec(spec: &NodeSpec, index: &HashMap<String, usize>) -> Result<(), RegistryError> {
    let id = spec.node_spec_id.as_str();
    if !is_snake_case(id) {
        return Err(RegistryError::invalid(id, "nodeSpecId", "must be lowercase snake_case"));
    }
    check_sockets(spec, &spec.input_specs, "inputSpecs")?;
    check_sockets(spec, &spec.output_specs, "outputSpecs")?;
    match spec.category {
        Category::Input if !spec.input_specs.is_empty() => {
            return Err(RegistryError::invalid(id, "inputSpecs", "input nodes take no inputs"));
        }
        Category::Output if !spec.output_specs.is_empty() => {
            return Err(RegistryError::invalid(id, "outputSpecs", "output nodes have no outputs"));
        }
        Category::Processor if spec.input_specs.is_empty() || spec.output_specs.is_empty() => {
            return Err(RegistryError::invalid(
                id,
                "category",
                "processor nodes need both inputs and outputs",
            ));
        }
        _ => {}
    }
    for rec in &spec.recommended_nodes {
        if rec == id || !index.contains_key(rec) {
            return Err(RegistryError::invalid(
                id,
                "recommendedNodes",
                format!("recommendation `{rec}` does not name another node"),
            ));
        }
    }
    for key in spec.default_params.keys() {
        if spec.input(key).is_some() {
            return Err(RegistryError::invalid(
                id,
                "defaultParams",
                format!("parameter `{key}` collides with an input socket"),
            ));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(id: &str, category: Category) -> NodeSpec {
        let sock = |name: &str| SocketSpec {
            socket_id: name.to_string(),
            data_types: vec![DataType::Text],
        };
        NodeSpec {
            node_spec_id: id.to_string(),
            category,
            short_description: String::new(),
            description: String::new(),
            input_specs: if category == Category::Input { vec![] } else { vec![sock("in")] },
            output_specs: if category == Category::Output { vec![] } else { vec![sock("out")] },
            recommended_nodes: vec![],
            default_params: BTreeMap::new(),
            examples: vec![],
            provenance: None,
        }
    }

    #[test]
    fn canonical_registry_has_27_nodes() {
        let reg = Registry::canonical();
        assert_eq!(reg.len(), 27);
        assert_eq!(
            reg.counts(),
            CategoryCounts {
                input: 3,
                output: 4,
                processor: 20
            }
        );
    }

    #[test]
    fn duplicate_id_is_rejected() {
        let err = Registry::from_specs(1, vec![spec("pali", Category::Processor), spec("pali", Category::Processor)])
            .unwrap_err();
        assert!(err.to_string().contains("pali"), "{err}");
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn lookups_are_exact() {
        let reg = Registry::canonical();
        assert_eq!(
            reg.get_spec("pali").unwrap().description.split('.').next(),
            Some("Answer questions about an image")
        );
        assert!(reg.get_spec("PALI").is_none());
        assert!(reg.get_spec("tflite_model_runner").is_none());
    }

    #[test]
    fn recommendation_resolves() {
        let reg = Registry::canonical();
        assert_eq!(
            reg.get_spec("body_segmentation").unwrap().recommended_nodes,
            vec!["mask_visualizer".to_string()]
        );
    }

    #[test]
    fn dangling_recommendation_is_rejected() {
        let mut s = spec("face_landmark", Category::Processor);
        s.recommended_nodes.push("landmark_visualizer".into());
        let err = Registry::from_specs(1, vec![s]).unwrap_err();
        assert!(matches!(err, RegistryError::Validation { field: "recommendedNodes", .. }));
    }

    #[test]
    fn category_socket_rules() {
        let mut s = spec("camera", Category::Input);
        s.input_specs.push(SocketSpec {
            socket_id: "x".into(),
            data_types: vec![DataType::Image],
        });
        assert!(Registry::from_specs(1, vec![s]).is_err());

        let mut s = spec("viewer", Category::Output);
        s.output_specs.push(SocketSpec {
            socket_id: "x".into(),
            data_types: vec![DataType::Image],
        });
        assert!(Registry::from_specs(1, vec![s]).is_err());

        let mut s = spec("proc", Category::Processor);
        s.output_specs.clear();
        assert!(Registry::from_specs(1, vec![s]).is_err());
    }

    #[test]
    fn param_socket_collision_is_rejected() {
        let mut s = spec("proc", Category::Processor);
        s.default_params.insert("in".into(), ParamValue::Int(1));
        let err = Registry::from_specs(1, vec![s]).unwrap_err();
        assert!(matches!(err, RegistryError::Validation { field: "defaultParams", .. }));
    }

    #[test]
    fn empty_allow_list_and_bad_ids() {
        let mut s = spec("proc", Category::Processor);
        s.input_specs[0].data_types.clear();
        assert!(Registry::from_specs(1, vec![s]).is_err());
        assert!(Registry::from_specs(1, vec![spec("Proc", Category::Processor)]).is_err());
        assert!(Registry::from_specs(1, vec![spec("proc_", Category::Processor)]).is_err());
    }

    #[test]
    fn unknown_data_type_fails_to_parse() {
        let text = CANONICAL_REGISTRY.replacen("\"string_list\"", "\"features\"", 1);
        assert!(matches!(Registry::from_json(&text), Err(RegistryError::Parse(_))));
    }

    #[test]
    fn missing_version_fails_to_parse() {
        let text = r#"{"nodes": []}"#;
        assert!(matches!(Registry::from_json(text), Err(RegistryError::Parse(_))));
    }

    #[test]
    fn default_parameters_match_published_values() {
        let reg = Registry::canonical();
        let palm = default_parameters(reg.get_spec("palm_textgen").unwrap());
        assert_eq!(palm.get("temperature"), Some(&ParamValue::Float(0.5)));
        assert_eq!(palm.get("maxOutputTokens"), Some(&ParamValue::Int(256)));
        assert_eq!(palm.len(), 2);
        assert!(default_parameters(reg.get_spec("input_image").unwrap()).is_empty());
        let sticker = default_parameters(reg.get_spec("virtual_sticker").unwrap());
        assert_eq!(sticker.get("anchor"), Some(&ParamValue::from("Face top")));
    }

    #[test]
    fn round_trip_and_determinism() {
        let a = Registry::canonical();
        let b = Registry::from_json(&a.to_json()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_json(), b.to_json());
    }
}
