//! Room layouts: receptacle catalogs, object class catalogs and the two
//! disjoint pools (in-distribution and out-of-distribution) that contexts are
//! sampled from.
//!
//! Layouts are read from TOML. The built-in catalog is compiled into the
//! crate; [`LayoutCatalog::load`] reads a replacement from disk. Format:
//!
//! ```toml
//! version = 1
//!
//! [[layout]]
//! id = "bedroom-a"
//! pool = "id"            # or "ood"
//! receptacles = [
//!   { class = "drawer", count = 4, openable = true },
//!   { class = "sidetable", count = 2 },
//! ]
//! objects = [
//!   { class = "mug", min = 1, max = 3, locations = ["sidetable", "drawer"],
//!     destinations = ["sidetable"], kinds = ["pick", "pick2"] },
//! ]
//! ```

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mdp::TaskKind;

const BUILTIN: &str = include_str!("../../assets/layouts/default.toml");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayoutPool {
    Id,
    Ood,
}

impl std::str::FromStr for LayoutPool {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "id" => Ok(LayoutPool::Id),
            "ood" => Ok(LayoutPool::Ood),
            other => Err(format!("unknown layout pool `{other}` (expected id or ood)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReceptacleGroup {
    pub class: String,
    pub count: u32,
    #[serde(default)]
    pub openable: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectGroup {
    pub class: String,
    pub min: u32,
    pub max: u32,
    /// Receptacle classes an instance may start in.
    pub locations: Vec<String>,
    /// Receptacle classes a task may ask the object to be put in.
    #[serde(default)]
    pub destinations: Vec<String>,
    /// Task kinds this class can be the subject of.
    #[serde(default)]
    pub kinds: Vec<TaskKind>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HouseholdLayout {
    pub id: String,
    pub pool: LayoutPool,
    pub receptacles: Vec<ReceptacleGroup>,
    pub objects: Vec<ObjectGroup>,
}

impl HouseholdLayout {
    pub fn receptacle_count(&self) -> u32 {
        self.receptacles.iter().map(|r| r.count).sum()
    }

    pub fn has_class(&self, class: &str) -> bool {
        self.receptacles.iter().any(|r| r.class == class)
    }

    /// Checks that every declared task kind is satisfiable in this room.
    pub fn validate(&self) -> Result<(), LayoutError> {
        let bad = |msg: String| Err(LayoutError::Invalid(format!("{}: {msg}", self.id)));
        let mut seen = BTreeSet::new();
        for r in &self.receptacles {
            if r.count == 0 {
                return bad(format!("receptacle class `{}` has count 0", r.class));
            }
            if !seen.insert(r.class.as_str()) {
                return bad(format!("receptacle class `{}` listed twice", r.class));
            }
        }
        let mut classes = BTreeSet::new();
        for o in &self.objects {
            if !classes.insert(o.class.as_str()) {
                return bad(format!("object class `{}` listed twice", o.class));
            }
            if o.min == 0 || o.min > o.max {
                return bad(format!("object class `{}` needs 1 <= min <= max", o.class));
            }
            if o.locations.is_empty() {
                return bad(format!("object class `{}` has no locations", o.class));
            }
            for l in o.locations.iter().chain(&o.destinations) {
                if !self.has_class(l) {
                    return bad(format!("object class `{}` refers to missing receptacle `{l}`", o.class));
                }
            }
            for k in &o.kinds {
                if !k.is_household() {
                    return bad(format!("object class `{}` lists non-household kind {k:?}", o.class));
                }
                if let Some(app) = k.appliance() {
                    if !self.has_class(app) {
                        return bad(format!("kind {k:?} for `{}` needs a {app}", o.class));
                    }
                }
                if *k != TaskKind::Examine && o.destinations.is_empty() {
                    return bad(format!("kind {k:?} for `{}` needs destinations", o.class));
                }
                if *k == TaskKind::Pick2 && o.max < 2 {
                    return bad(format!("pick2 for `{}` needs max >= 2", o.class));
                }
                // Placement excludes the destination class for task objects,
                // so some other location must remain.
                if *k != TaskKind::Examine
                    && o.destinations.iter().all(|d| o.locations.iter().all(|l| l == d))
                {
                    return bad(format!("`{}` has no location outside its destinations", o.class));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutCatalog {
    pub version: u32,
    #[serde(rename = "layout")]
    pub layouts: Vec<HouseholdLayout>,
}

#[derive(Debug, Error)]
pub enum LayoutError {
    #[error("cannot read layout file: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse layout file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid layout {0}")]
    Invalid(String),
    #[error("unsupported layout file version {0}")]
    Version(u32),
}

impl LayoutCatalog {
    pub fn from_toml_str(text: &str) -> Result<Self, LayoutError> {
        let cat: LayoutCatalog = toml::from_str(text)?;
        if cat.version != 1 {
            return Err(LayoutError::Version(cat.version));
        }
        let mut ids = BTreeSet::new();
        for l in &cat.layouts {
            l.validate()?;
            if !ids.insert(l.id.as_str()) {
                return Err(LayoutError::Invalid(format!("{}: duplicate layout id", l.id)));
            }
        }
        Ok(cat)
    }

    pub fn load(path: &Path) -> Result<Self, LayoutError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// The catalog compiled into the crate.
    pub fn builtin() -> &'static LayoutCatalog {
        static CAT: OnceLock<LayoutCatalog> = OnceLock::new();
        CAT.get_or_init(|| LayoutCatalog::from_toml_str(BUILTIN).expect("built-in layouts are valid"))
    }

    pub fn pool(&self, pool: LayoutPool) -> Vec<&HouseholdLayout> {
        self.layouts.iter().filter(|l| l.pool == pool).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_pools_are_nonempty_and_disjoint() {
        let cat = LayoutCatalog::builtin();
        let id = cat.pool(LayoutPool::Id);
        let ood = cat.pool(LayoutPool::Ood);
        assert!(!id.is_empty() && !ood.is_empty());
        for a in &id {
            for b in &ood {
                assert_ne!(a.receptacles, b.receptacles, "{} vs {}", a.id, b.id);
            }
        }
    }

    #[test]
    fn rejects_unsatisfiable_kind() {
        let text = r#"
            version = 1
            [[layout]]
            id = "x"
            pool = "id"
            receptacles = [{ class = "table", count = 1 }, { class = "shelf", count = 1 }]
            objects = [{ class = "mug", min = 1, max = 1, locations = ["table"], destinations = ["shelf"], kinds = ["heat"] }]
        "#;
        let r = LayoutCatalog::from_toml_str(text);
        assert!(matches!(r, Err(LayoutError::Invalid(_))), "{r:?}");
    }
}
