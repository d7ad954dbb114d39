use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Atom, BernoulliFamily, NormalMeanFamily, StageFamily, TableFamily};
use crate::error::{Error, Result};

/// Declarative description of one stage family, as it appears in config files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilySpec {
    pub family: String,
    pub theta0: f64,
    /// Quadrature node count for continuous families.
    #[serde(default = "default_quad_nodes")]
    pub quad_nodes: usize,
    /// Atom table for the `table` family.
    #[serde(default)]
    pub atoms: Vec<AtomSpec>,
}

fn default_quad_nodes() -> usize {
    64
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AtomSpec {
    pub x: f64,
    pub p: f64,
    #[serde(default)]
    pub q: f64,
}

type Builder = fn(&FamilySpec) -> Result<Arc<dyn StageFamily>>;

/// Name-to-builder registry of stage distribution families.  Models are
/// assembled at runtime from `FamilySpec`s, so new families plug in without
/// touching the callers.
pub struct FamilyRegistry {
    builders: BTreeMap<String, Builder>,
}

impl FamilyRegistry {
    /// Registry preloaded with the built-in families.
    pub fn builtin() -> Self {
        let mut reg = Self { builders: BTreeMap::new() };
        reg.register("normal", |spec| {
            Ok(Arc::new(NormalMeanFamily::new(spec.theta0, spec.quad_nodes)))
        });
        reg.register("bernoulli", |spec| {
            Ok(Arc::new(BernoulliFamily::new(spec.theta0)?))
        });
        reg.register("table", |spec| {
            let atoms: Vec<Atom> = spec
                .atoms
                .iter()
                .map(|a| Atom { x: a.x, p: a.p, q: a.q })
                .collect();
            Ok(Arc::new(TableFamily::new(spec.theta0, atoms)?))
        });
        reg.register("degenerate", |spec| {
            let atoms = spec.atoms.iter().map(|a| (a.x, a.p)).collect();
            Ok(Arc::new(TableFamily::degenerate(spec.theta0, atoms)?))
        });
        reg
    }

    pub fn register(&mut self, name: &str, builder: Builder) {
        self.builders.insert(name.to_string(), builder);
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.builders.keys().map(String::as_str)
    }

    pub fn build(&self, spec: &FamilySpec) -> Result<Arc<dyn StageFamily>> {
        let builder = self.builders.get(&spec.family).ok_or_else(|| {
            let known: Vec<&str> = self.names().collect();
            Error::Model(format!(
                "unknown family {:?}; registered: {}",
                spec.family,
                known.join(", ")
            ))
        })?;
        builder(spec)
    }
}
