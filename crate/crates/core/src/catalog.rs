//! Group catalog: one JSON document per group, loaded by id.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::malcev::GroupSpec;
use crate::poly::{Poly, TermDoc};
use crate::selfcheck;

pub const GROUP_SCHEMA: &str = "commgrowth.group/1";

/// File form of a [`GroupSpec`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroupDoc {
    pub schema: String,
    pub id: String,
    #[serde(default)]
    pub description: String,
    pub dim: usize,
    pub class: usize,
    pub mu: Vec<Vec<TermDoc>>,
    pub lam: Vec<Vec<TermDoc>>,
    pub kap: Vec<Vec<TermDoc>>,
    pub embed: Vec<Vec<Vec<TermDoc>>>,
}

impl GroupDoc {
    pub fn from_spec(g: &GroupSpec) -> Self {
        let pn = g.pair_names();
        let ln = g.power_names();
        let cn = g.coord_names();
        GroupDoc {
            schema: GROUP_SCHEMA.into(),
            id: g.id.clone(),
            description: g.description.clone(),
            dim: g.dim,
            class: g.class,
            mu: g.mu.iter().map(|p| p.to_doc(&pn)).collect(),
            lam: g.lam.iter().map(|p| p.to_doc(&ln)).collect(),
            kap: g.kap.iter().map(|p| p.to_doc(&pn)).collect(),
            embed: g.embed.iter().map(|r| r.iter().map(|p| p.to_doc(&cn)).collect()).collect(),
        }
    }

    pub fn to_spec(&self) -> Result<GroupSpec> {
        if self.schema != GROUP_SCHEMA {
            return Err(Error::Catalog(format!(
                "group {:?}: unsupported schema {:?} (expected {GROUP_SCHEMA})",
                self.id, self.schema
            )));
        }
        let d = self.dim;
        let pn = crate::poly::var_names(&[("a", d), ("b", d)]);
        let ln = crate::poly::var_names(&[("a", d), ("k", 0)]);
        let cn = crate::poly::var_names(&[("a", d)]);
        let polys = |v: &[Vec<TermDoc>], names: &[String]| -> Result<Vec<Poly>> {
            v.iter().map(|t| Poly::from_doc(t, names)).collect()
        };
        let embed = self
            .embed
            .iter()
            .map(|r| polys(r, &cn))
            .collect::<Result<Vec<_>>>()?;
        GroupSpec::new(
            self.id.clone(),
            self.description.clone(),
            d,
            self.class,
            polys(&self.mu, &pn)?,
            polys(&self.lam, &ln)?,
            polys(&self.kap, &pn)?,
            embed,
        )
    }
}

const BUILTIN: &[&str] = &[
    include_str!("../catalog/Z1.json"),
    include_str!("../catalog/Z2.json"),
    include_str!("../catalog/Z3.json"),
    include_str!("../catalog/heis3.json"),
    include_str!("../catalog/u4.json"),
];

/// Samples used when validating groups at load time.
const LOAD_CHECK_SAMPLES: usize = 12;
const LOAD_CHECK_SEED: u64 = 0x5eed;

#[derive(Clone, Debug, Default)]
pub struct Catalog {
    groups: BTreeMap<String, Arc<GroupSpec>>,
}

impl Catalog {
    /// The shipped catalog (Z1, Z2, Z3, heis3, u4), validated once.
    pub fn builtin() -> &'static Catalog {
        static CAT: OnceLock<Catalog> = OnceLock::new();
        CAT.get_or_init(|| {
            let mut cat = Catalog::default();
            for src in BUILTIN {
                cat.insert_json(src).expect("shipped catalog entry is valid");
            }
            cat
        })
    }

    pub fn load_dir(dir: &Path) -> Result<Catalog> {
        let mut cat = Catalog::default();
        let entries = std::fs::read_dir(dir)
            .map_err(|e| Error::Catalog(format!("cannot read {}: {e}", dir.display())))?;
        let mut paths: Vec<_> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        for p in paths {
            let src = std::fs::read_to_string(&p)
                .map_err(|e| Error::Catalog(format!("cannot read {}: {e}", p.display())))?;
            cat.insert_json(&src)?;
        }
        if cat.groups.is_empty() {
            return Err(Error::Catalog(format!("no group documents in {}", dir.display())));
        }
        Ok(cat)
    }

    pub fn insert_json(&mut self, src: &str) -> Result<Arc<GroupSpec>> {
        let doc: GroupDoc = serde_json::from_str(src).map_err(|e| Error::Catalog(e.to_string()))?;
        let spec = doc.to_spec()?;
        selfcheck::selfcheck(&spec, LOAD_CHECK_SAMPLES, LOAD_CHECK_SEED)?;
        let spec = Arc::new(spec);
        self.groups.insert(spec.id.clone(), spec.clone());
        Ok(spec)
    }

    pub fn get(&self, id: &str) -> Result<Arc<GroupSpec>> {
        self.groups
            .get(id)
            .cloned()
            .ok_or_else(|| Error::Catalog(format!("unknown group {id:?}")))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<GroupSpec>> {
        self.groups.values()
    }

    pub fn ids(&self) -> Vec<String> {
        self.groups.keys().cloned().collect()
    }
}
