//! The universe of known classes and functions.
//!
//! A [`Catalog`] is built once from the extractor's catalog and aliases
//! documents and is immutable afterwards. Every class is stored under its
//! canonical name; re-exports are folded in through the [`AliasMap`].

mod category;
pub mod schema;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::Path;

use log::warn;
use serde::de::DeserializeOwned;
use serde::Serialize;

pub use category::{TypeCategory, Vocabulary};
use schema::{AliasRecord, AliasesFile, CatalogFile, ClassRecord, FunctionRecord, LooseAliases, LooseCatalog};

use crate::error::{Error, Result};
use crate::io;
use crate::names::QualifiedName;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClassEntry {
    pub name: QualifiedName,
    /// Every method name the class defines.
    pub methods: BTreeSet<String>,
    pub bases: BTreeSet<QualifiedName>,
}

impl ClassEntry {
    pub fn library(&self) -> &str {
        self.name.library()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct FunctionEntry {
    pub docstring: String,
    pub owner: Option<QualifiedName>,
}

/// Alias → canonical name, closed under chaining, plus the names that failed
/// to load at extraction time.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AliasMap {
    entries: BTreeMap<QualifiedName, QualifiedName>,
    invalid: BTreeSet<QualifiedName>,
}

impl AliasMap {
    /// Builds the closure of `pairs`. Chains resolve to their end; members of
    /// a cycle all resolve to the cycle's smallest name. Names that are the
    /// target or source of an alias are never invalid.
    pub fn new(pairs: BTreeMap<QualifiedName, QualifiedName>, invalid: BTreeSet<QualifiedName>) -> Self {
        let mut entries = BTreeMap::new();
        for start in pairs.keys() {
            let mut seen = vec![start.clone()];
            let mut cur = start;
            let end = loop {
                match pairs.get(cur) {
                    Some(next) if next == cur => break cur.clone(),
                    Some(next) => {
                        if let Some(pos) = seen.iter().position(|s| s == next) {
                            break seen[pos..].iter().min().cloned().unwrap_or_else(|| next.clone());
                        }
                        seen.push(next.clone());
                        cur = next;
                    }
                    None => break cur.clone(),
                }
            };
            entries.insert(start.clone(), end);
        }
        let mut invalid = invalid;
        for (alias, canonical) in &entries {
            for name in [alias, canonical] {
                if invalid.remove(name) {
                    warn!("{name} is both aliased and listed invalid; treating it as valid");
                }
            }
        }
        AliasMap { entries, invalid }
    }

    pub fn resolve(&self, name: &QualifiedName) -> Option<&QualifiedName> {
        self.entries.get(name)
    }

    pub fn is_invalid(&self, name: &QualifiedName) -> bool {
        self.invalid.contains(name)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&QualifiedName, &QualifiedName)> {
        self.entries.iter()
    }

    pub fn invalid(&self) -> impl Iterator<Item = &QualifiedName> {
        self.invalid.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Counters describing what loading had to merge, drop or tolerate.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LoadReport {
    pub class_records: usize,
    pub merged_class_records: usize,
    pub invalid_classes_dropped: usize,
    pub dangling_bases: usize,
    pub function_records: usize,
    pub invalid_functions_dropped: usize,
}

#[derive(Clone, Debug, Default)]
pub struct Catalog {
    classes: BTreeMap<QualifiedName, ClassEntry>,
    method_index: BTreeMap<String, BTreeSet<QualifiedName>>,
    functions: BTreeMap<QualifiedName, FunctionEntry>,
    aliases: AliasMap,
    declared_modules: BTreeSet<QualifiedName>,
    module_prefixes: BTreeSet<QualifiedName>,
    vocabulary: Vocabulary,
    report: LoadReport,
}

fn loose_record<T: DeserializeOwned>(path: &Path, label: &str, value: serde_json::Value) -> Result<T> {
    serde_json::from_value(value).map_err(|e| Error::schema(path, label, e))
}

fn qname(path: &Path, label: &str, text: &str) -> Result<QualifiedName> {
    QualifiedName::parse(text).map_err(|e| Error::schema(path, label, e))
}

impl Catalog {
    pub fn builder() -> CatalogBuilder {
        CatalogBuilder::default()
    }

    /// Reads and validates the two interchange documents.
    pub fn load(catalog_path: &Path, aliases_path: Option<&Path>) -> Result<Catalog> {
        let loose: LooseCatalog = io::read_json(catalog_path)?;
        let file = CatalogFile {
            modules: loose
                .modules
                .into_iter()
                .enumerate()
                .map(|(i, v)| loose_record(catalog_path, &format!("modules[{i}]"), v))
                .collect::<Result<_>>()?,
            classes: loose
                .classes
                .into_iter()
                .enumerate()
                .map(|(i, v)| loose_record(catalog_path, &format!("classes[{i}]"), v))
                .collect::<Result<_>>()?,
            functions: loose
                .functions
                .into_iter()
                .enumerate()
                .map(|(i, v)| loose_record(catalog_path, &format!("functions[{i}]"), v))
                .collect::<Result<_>>()?,
        };
        let aliases = match aliases_path {
            Some(path) => {
                let loose: LooseAliases = io::read_json(path)?;
                AliasesFile {
                    aliases: loose
                        .aliases
                        .into_iter()
                        .enumerate()
                        .map(|(i, v)| loose_record(path, &format!("aliases[{i}]"), v))
                        .collect::<Result<_>>()?,
                    invalid: loose
                        .invalid
                        .into_iter()
                        .enumerate()
                        .map(|(i, v)| loose_record(path, &format!("invalid[{i}]"), v))
                        .collect::<Result<_>>()?,
                }
            }
            None => AliasesFile::default(),
        };
        Catalog::from_documents(
            &file,
            catalog_path,
            &aliases,
            aliases_path.unwrap_or(Path::new("<no aliases>")),
        )
    }

    pub fn from_documents(
        file: &CatalogFile,
        catalog_path: &Path,
        aliases_file: &AliasesFile,
        aliases_path: &Path,
    ) -> Result<Catalog> {
        let mut pairs = BTreeMap::new();
        for (i, rec) in aliases_file.aliases.iter().enumerate() {
            let label = format!("aliases[{i}]");
            let alias = qname(aliases_path, &label, &rec.alias)?;
            let canonical = qname(aliases_path, &label, &rec.canonical)?;
            if let Some(prev) = pairs.insert(alias.clone(), canonical.clone()) {
                if prev != canonical {
                    return Err(Error::schema(
                        aliases_path,
                        label,
                        format!("{alias} aliases both {prev} and {canonical}"),
                    ));
                }
            }
        }
        let invalid = aliases_file
            .invalid
            .iter()
            .enumerate()
            .map(|(i, n)| qname(aliases_path, &format!("invalid[{i}]"), n))
            .collect::<Result<BTreeSet<_>>>()?;
        let aliases = AliasMap::new(pairs, invalid);

        let mut report = LoadReport::default();
        let mut classes: BTreeMap<QualifiedName, ClassEntry> = BTreeMap::new();
        let mut raw_bases: Vec<(QualifiedName, QualifiedName)> = Vec::new();
        let mut raw_names = Vec::new();
        for (i, rec) in file.classes.iter().enumerate() {
            let label = format!("classes[{i}]");
            report.class_records += 1;
            let name = qname(catalog_path, &label, &rec.name)?;
            let bases = rec
                .bases
                .iter()
                .map(|b| qname(catalog_path, &label, b))
                .collect::<Result<Vec<_>>>()?;
            if aliases.is_invalid(&name) {
                report.invalid_classes_dropped += 1;
                continue;
            }
            let canonical = aliases.resolve(&name).cloned().unwrap_or_else(|| name.clone());
            raw_names.push(name);
            if classes.contains_key(&canonical) {
                report.merged_class_records += 1;
            }
            let entry = classes.entry(canonical.clone()).or_insert_with(|| ClassEntry {
                name: canonical.clone(),
                methods: BTreeSet::new(),
                bases: BTreeSet::new(),
            });
            entry.methods.extend(rec.methods.iter().cloned());
            raw_bases.extend(bases.into_iter().map(|b| (canonical.clone(), b)));
        }
        for (class, base) in raw_bases {
            let base = aliases.resolve(&base).cloned().unwrap_or(base);
            if base == class {
                continue;
            }
            if !classes.contains_key(&base) {
                report.dangling_bases += 1;
            }
            if let Some(entry) = classes.get_mut(&class) {
                entry.bases.insert(base);
            }
        }

        let mut functions: BTreeMap<QualifiedName, FunctionEntry> = BTreeMap::new();
        for (i, rec) in file.functions.iter().enumerate() {
            let label = format!("functions[{i}]");
            report.function_records += 1;
            let name = qname(catalog_path, &label, &rec.name)?;
            let owner = rec
                .class
                .as_deref()
                .map(|c| qname(catalog_path, &label, c))
                .transpose()?
                .map(|c| aliases.resolve(&c).cloned().unwrap_or(c));
            if aliases.is_invalid(&name) {
                report.invalid_functions_dropped += 1;
                continue;
            }
            let canonical = aliases.resolve(&name).cloned().unwrap_or_else(|| name.clone());
            raw_names.push(name);
            let entry = functions.entry(canonical).or_default();
            if entry.docstring.is_empty() {
                entry.docstring = rec.docstring.clone();
            }
            if entry.owner.is_none() {
                entry.owner = owner;
            }
        }

        let declared_modules = file
            .modules
            .iter()
            .enumerate()
            .map(|(i, m)| qname(catalog_path, &format!("modules[{i}]"), m))
            .collect::<Result<BTreeSet<_>>>()?;
        let mut module_prefixes = BTreeSet::new();
        for name in raw_names.iter().chain(classes.keys()).chain(functions.keys()) {
            module_prefixes.extend(name.prefixes().filter(|p| !classes.contains_key(p)));
        }

        let mut catalog = Catalog {
            classes,
            method_index: BTreeMap::new(),
            functions,
            aliases,
            declared_modules,
            module_prefixes,
            vocabulary: Vocabulary::default(),
            report,
        };
        catalog.rebuild_method_index();
        Ok(catalog)
    }

    fn rebuild_method_index(&mut self) {
        self.method_index.clear();
        for (name, entry) in &self.classes {
            for m in &entry.methods {
                self.method_index.entry(m.clone()).or_default().insert(name.clone());
            }
        }
    }

    pub fn with_vocabulary(mut self, vocabulary: Vocabulary) -> Self {
        self.vocabulary = vocabulary;
        self
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn report(&self) -> &LoadReport {
        &self.report
    }

    pub fn classes(&self) -> impl Iterator<Item = &ClassEntry> {
        self.classes.values()
    }

    pub fn class(&self, name: &QualifiedName) -> Option<&ClassEntry> {
        self.classes.get(name)
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn functions(&self) -> impl Iterator<Item = (&QualifiedName, &FunctionEntry)> {
        self.functions.iter()
    }

    pub fn function(&self, name: &QualifiedName) -> Option<&FunctionEntry> {
        self.functions.get(name)
    }

    pub fn aliases(&self) -> &AliasMap {
        &self.aliases
    }

    /// Classes defining `method`.
    pub fn classes_with_method(&self, method: &str) -> Option<&BTreeSet<QualifiedName>> {
        self.method_index.get(method)
    }

    pub fn method_index(&self) -> &BTreeMap<String, BTreeSet<QualifiedName>> {
        &self.method_index
    }

    /// Alias names whose canonical form is a catalog class, with that class.
    pub fn class_aliases(&self) -> impl Iterator<Item = (&QualifiedName, &QualifiedName)> {
        self.aliases
            .entries()
            .filter(|(alias, canonical)| alias != canonical && self.classes.contains_key(*canonical))
    }

    /// Canonical form of `name`, or `None` when it cannot be resolved.
    ///
    /// Vocabulary names resolve to their bare spelling; aliases to their
    /// target; known classes and functions to themselves. Names listed
    /// invalid and names that resolve to nothing known are `None`.
    pub fn normalize(&self, name: &QualifiedName) -> Option<QualifiedName> {
        if let Some(word) = self.vocabulary.canonical_word(name.as_str()) {
            return QualifiedName::parse(&word).ok();
        }
        if self.aliases.is_invalid(name) {
            return None;
        }
        if let Some(canonical) = self.aliases.resolve(name) {
            return Some(canonical.clone());
        }
        if self.classes.contains_key(name) || self.functions.contains_key(name) {
            return Some(name.clone());
        }
        None
    }

    pub fn normalize_str(&self, name: &str) -> Option<QualifiedName> {
        QualifiedName::parse(name).ok().and_then(|q| self.normalize(&q))
    }

    /// Canonical form when resolvable, otherwise the name unchanged.
    pub fn normalize_or_keep(&self, name: &QualifiedName) -> QualifiedName {
        self.normalize(name).unwrap_or_else(|| name.clone())
    }

    /// Whether `name` denotes a module: either declared by the extractor, or
    /// a dotted prefix of a known name that is not itself a class.
    pub fn is_module(&self, name: &QualifiedName) -> bool {
        self.declared_modules.contains(name) || self.module_prefixes.contains(name)
    }

    pub fn classify(&self, name: &str) -> TypeCategory {
        let bare = self.vocabulary.canonical_word(name);
        if let Some(category) = bare.as_deref().and_then(|w| self.vocabulary.category_of(w)) {
            return category;
        }
        let Ok(qualified) = QualifiedName::parse(name) else {
            return TypeCategory::Unknown;
        };
        if let Some(canonical) = self.normalize(&qualified) {
            if self.classes.contains_key(&canonical) {
                return TypeCategory::UserClass;
            }
        }
        if self.is_module(&qualified) {
            return TypeCategory::Module;
        }
        TypeCategory::Unknown
    }

    /// Reflexive-transitive closure of the bases relation. Unknown `sub`
    /// yields false; bases missing from the catalog are leaves.
    pub fn is_subtype(&self, sub: &QualifiedName, sup: &QualifiedName) -> bool {
        if !self.classes.contains_key(sub) {
            return false;
        }
        sub == sup || self.supertypes(sub).contains(sup)
    }

    /// Every strict ancestor of `name`.
    pub fn supertypes(&self, name: &QualifiedName) -> BTreeSet<QualifiedName> {
        let mut seen = BTreeSet::new();
        let mut queue: VecDeque<&QualifiedName> = VecDeque::new();
        queue.push_back(name);
        while let Some(cur) = queue.pop_front() {
            let Some(entry) = self.classes.get(cur) else { continue };
            for base in &entry.bases {
                if base != name && seen.insert(base.clone()) {
                    queue.push_back(base);
                }
            }
        }
        seen
    }

    /// Round-trips the catalog back into interchange documents. Loading the
    /// result yields an equal catalog.
    pub fn to_documents(&self) -> (CatalogFile, AliasesFile) {
        let catalog = CatalogFile {
            modules: self.declared_modules.iter().map(|m| m.to_string()).collect(),
            classes: self
                .classes
                .values()
                .map(|c| ClassRecord {
                    name: c.name.to_string(),
                    methods: c.methods.iter().cloned().collect(),
                    bases: c.bases.iter().map(|b| b.to_string()).collect(),
                })
                .collect(),
            functions: self
                .functions
                .iter()
                .map(|(name, f)| FunctionRecord {
                    name: name.to_string(),
                    docstring: f.docstring.clone(),
                    class: f.owner.as_ref().map(|o| o.to_string()),
                })
                .collect(),
        };
        let aliases = AliasesFile {
            aliases: self
                .aliases
                .entries()
                .map(|(a, c)| AliasRecord {
                    alias: a.to_string(),
                    canonical: c.to_string(),
                })
                .collect(),
            invalid: self.aliases.invalid().map(|n| n.to_string()).collect(),
        };
        (catalog, aliases)
    }
}

/// In-memory construction of catalog documents, mostly for fixtures.
#[derive(Clone, Debug, Default)]
pub struct CatalogBuilder {
    catalog: CatalogFile,
    aliases: AliasesFile,
}

impl CatalogBuilder {
    pub fn class(mut self, name: &str, methods: &[&str], bases: &[&str]) -> Self {
        self.catalog.classes.push(ClassRecord {
            name: name.to_owned(),
            methods: methods.iter().map(|m| m.to_string()).collect(),
            bases: bases.iter().map(|b| b.to_string()).collect(),
        });
        self
    }

    pub fn function(mut self, name: &str, docstring: &str) -> Self {
        self.catalog.functions.push(FunctionRecord {
            name: name.to_owned(),
            docstring: docstring.to_owned(),
            class: None,
        });
        self
    }

    pub fn module(mut self, name: &str) -> Self {
        self.catalog.modules.push(name.to_owned());
        self
    }

    pub fn alias(mut self, alias: &str, canonical: &str) -> Self {
        self.aliases.aliases.push(AliasRecord {
            alias: alias.to_owned(),
            canonical: canonical.to_owned(),
        });
        self
    }

    pub fn invalid(mut self, name: &str) -> Self {
        self.aliases.invalid.push(name.to_owned());
        self
    }

    pub fn documents(&self) -> (&CatalogFile, &AliasesFile) {
        (&self.catalog, &self.aliases)
    }

    pub fn build(&self) -> Result<Catalog> {
        Catalog::from_documents(&self.catalog, Path::new("<catalog>"), &self.aliases, Path::new("<aliases>"))
    }
}
