use crate::{NnError, Tensor};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

const FORMAT_VERSION: u32 = 1;

/// Named parameter collection with canonical (sorted-by-name) iteration
/// order, so optimizer sweeps and serialization are deterministic.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    tensors: BTreeMap<String, Tensor>,
}

impl ParamStore {
    pub fn new() -> ParamStore {
        ParamStore::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor) {
        self.tensors.insert(name.into(), tensor);
    }

    pub fn get(&self, name: &str) -> Result<&Tensor, NnError> {
        self.tensors.get(name).ok_or_else(|| NnError::UnknownParam(name.to_string()))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor, NnError> {
        self.tensors.get_mut(name).ok_or_else(|| NnError::UnknownParam(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.tensors.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn n_values(&self) -> usize {
        self.tensors.values().map(Tensor::len).sum()
    }

    /// Names in canonical order.
    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tensors.keys().map(String::as_str)
    }

    /// (name, tensor) pairs in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.tensors.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor)> {
        self.tensors.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    /// Serialize to the versioned JSON parameter format.
    pub fn to_json(&self) -> String {
        let file = StoreFile {
            version: FORMAT_VERSION,
            tensors: self
                .tensors
                .iter()
                .map(|(name, t)| {
                    (name.clone(), TensorFile { shape: t.shape().to_vec(), values: t.data().to_vec() })
                })
                .collect(),
        };
        serde_json::to_string(&file).expect("parameter maps serialize")
    }

    /// Parse the versioned JSON parameter format, validating shapes and
    /// finiteness.
    pub fn from_json(text: &str) -> Result<ParamStore, NnError> {
        let file: StoreFile =
            serde_json::from_str(text).map_err(|e| NnError::BadFile(e.to_string()))?;
        if file.version != FORMAT_VERSION {
            return Err(NnError::BadFile(format!(
                "unsupported parameter format version {} (expected {FORMAT_VERSION})",
                file.version
            )));
        }
        let mut store = ParamStore::new();
        for (name, tf) in file.tensors {
            let tensor = Tensor::new(tf.shape, tf.values)
                .map_err(|e| NnError::BadFile(format!("tensor '{name}': {e}")))?;
            store.insert(name, tensor);
        }
        Ok(store)
    }
}

#[derive(Serialize, Deserialize)]
struct StoreFile {
    version: u32,
    tensors: BTreeMap<String, TensorFile>,
}

#[derive(Serialize, Deserialize)]
struct TensorFile {
    shape: Vec<usize>,
    values: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iteration_is_sorted_by_name() {
        let mut store = ParamStore::new();
        store.insert("w2", Tensor::scalar(2.0));
        store.insert("a1", Tensor::scalar(1.0));
        store.insert("m3", Tensor::scalar(3.0));
        let names: Vec<&str> = store.names().collect();
        assert_eq!(names, vec!["a1", "m3", "w2"]);
    }

    #[test]
    fn json_roundtrip() {
        let mut store = ParamStore::new();
        store.insert("w", Tensor::matrix(2, 2, vec![1.0, -0.5, 0.25, 4.0]).unwrap());
        store.insert("b", Tensor::row(vec![0.0, 0.125]));
        let json = store.to_json();
        assert!(json.contains("\"version\":1"));
        let back = ParamStore::from_json(&json).unwrap();
        assert_eq!(back, store);
    }

    #[test]
    fn load_rejects_bad_shape_and_version() {
        let bad_shape = r#"{"version":1,"tensors":{"w":{"shape":[2,2],"values":[1.0]}}}"#;
        assert!(ParamStore::from_json(bad_shape).is_err());
        let bad_version = r#"{"version":7,"tensors":{}}"#;
        assert!(ParamStore::from_json(bad_version).is_err());
    }
}
