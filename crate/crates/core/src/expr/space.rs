use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SpaceError {
    #[error("coordinate space must have at least one name")]
    Empty,
    #[error("duplicate coordinate name `{0}`")]
    Duplicate(String),
    #[error("`{0}` is not a valid identifier")]
    InvalidName(String),
    #[error("`{0}` is reserved")]
    Reserved(String),
    #[error("environment has {got} values but the space has {expected} coordinates")]
    EnvLength { expected: usize, got: usize },
}

const RESERVED: [&str; 5] = ["sin", "cos", "exp", "ln", "pi"];

pub(crate) fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Ordered list of distinct coordinate names. Cheap to clone.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarSpace {
    names: Arc<[String]>,
}

impl VarSpace {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<VarSpace, SpaceError> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(SpaceError::Empty);
        }
        for (i, n) in names.iter().enumerate() {
            if !is_ident(n) {
                return Err(SpaceError::InvalidName(n.clone()));
            }
            if RESERVED.contains(&n.as_str()) {
                return Err(SpaceError::Reserved(n.clone()));
            }
            if names[..i].contains(n) {
                return Err(SpaceError::Duplicate(n.clone()));
            }
        }
        Ok(VarSpace { names: names.into() })
    }

    /// `prefix1 .. prefixN`.
    pub fn indexed(prefix: &str, n: usize) -> VarSpace {
        VarSpace::new((1..=n).map(|i| format!("{prefix}{i}"))).expect("indexed names are valid")
    }

    /// Concatenation; fails on name clashes.
    pub fn concat(&self, other: &VarSpace) -> Result<VarSpace, SpaceError> {
        VarSpace::new(self.names.iter().chain(other.names.iter()).cloned())
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, i: usize) -> Option<&str> {
        self.names.get(i).map(String::as_str)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// One value per coordinate of a space.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalEnv {
    values: Vec<f64>,
}

impl EvalEnv {
    pub fn new(space: &VarSpace, values: Vec<f64>) -> Result<EvalEnv, SpaceError> {
        if values.len() != space.len() {
            return Err(SpaceError::EnvLength { expected: space.len(), got: values.len() });
        }
        Ok(EvalEnv { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl std::ops::Deref for EvalEnv {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.values
    }
}
