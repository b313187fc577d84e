use std::collections::{BTreeMap, BTreeSet};

use crate::report::{Diagnostic, Loc, ValidationReport};
use crate::Sym;

use super::types::{TypeDomain, ValueDomain};
use super::value::{Tuple, Value};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Attribute {
    pub name: Sym,
    pub ty: Sym,
    pub loc: Loc,
}

/// Foreign key from attribute `attr` of the owning relation to the key of `target`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForeignKey {
    pub attr: usize,
    pub target: Sym,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationSchema {
    pub name: Sym,
    pub attrs: Vec<Attribute>,
    /// Index of the primary-key attribute. Well-formed schemas use 0.
    pub key: usize,
    pub fks: Vec<ForeignKey>,
    pub loc: Loc,
}

impl RelationSchema {
    pub fn new(name: &str, attrs: &[(&str, &str)]) -> RelationSchema {
        RelationSchema {
            name: Sym::new(name),
            attrs: attrs
                .iter()
                .map(|(n, t)| Attribute { name: Sym::new(n), ty: Sym::new(t), loc: Loc::NONE })
                .collect(),
            key: 0,
            fks: Vec::new(),
            loc: Loc::NONE,
        }
    }

    pub fn with_fk(mut self, attr: usize, target: &str) -> RelationSchema {
        self.fks.push(ForeignKey { attr, target: Sym::new(target), loc: Loc::NONE });
        self
    }

    pub fn arity(&self) -> usize {
        self.attrs.len()
    }

    pub fn key_type(&self) -> Option<Sym> {
        self.attrs.get(self.key).map(|a| a.ty)
    }

    pub fn attr_types(&self) -> impl Iterator<Item = Sym> + '_ {
        self.attrs.iter().map(|a| a.ty)
    }
}

/// Data types plus relation schemas: the static part of a net's catalog.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CatalogSchema {
    pub types: TypeDomain,
    pub relations: Vec<RelationSchema>,
}

impl CatalogSchema {
    pub fn new(types: TypeDomain, relations: Vec<RelationSchema>) -> CatalogSchema {
        CatalogSchema { types, relations }
    }

    pub fn relation(&self, name: Sym) -> Option<&RelationSchema> {
        self.relations.iter().find(|r| r.name == name)
    }
}

/// A finite set of facts per relation.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CatalogInstance {
    facts: BTreeMap<Sym, BTreeSet<Tuple>>,
}

static NO_FACTS: BTreeSet<Tuple> = BTreeSet::new();

impl CatalogInstance {
    pub fn new() -> CatalogInstance {
        CatalogInstance::default()
    }

    pub fn insert(&mut self, relation: Sym, tuple: Tuple) -> bool {
        self.facts.entry(relation).or_default().insert(tuple)
    }

    pub fn with_fact(mut self, relation: &str, tuple: Tuple) -> CatalogInstance {
        self.insert(Sym::new(relation), tuple);
        self
    }

    pub fn facts(&self, relation: Sym) -> &BTreeSet<Tuple> {
        self.facts.get(&relation).unwrap_or(&NO_FACTS)
    }

    pub fn contains(&self, relation: Sym, tuple: &[Value]) -> bool {
        self.facts.get(&relation).is_some_and(|f| f.contains(tuple))
    }

    /// Relations with at least one fact, in name order.
    pub fn relations(&self) -> impl Iterator<Item = (Sym, &BTreeSet<Tuple>)> {
        self.facts.iter().filter(|(_, f)| !f.is_empty()).map(|(r, f)| (*r, f))
    }

    pub fn fact_count(&self) -> usize {
        self.facts.values().map(|f| f.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.fact_count() == 0
    }

    /// `Val(Cat)`: every value occurring in some fact.
    pub fn values(&self) -> BTreeSet<Value> {
        self.facts.values().flatten().flatten().copied().collect()
    }

    pub fn active_domain(&self) -> ActiveDomain {
        let mut by_type: BTreeMap<Sym, BTreeSet<Value>> = BTreeMap::new();
        for v in self.facts.values().flatten().flatten() {
            by_type.entry(v.ty).or_default().insert(*v);
        }
        ActiveDomain { by_type }
    }
}

/// `Val(Cat)` split by data type.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ActiveDomain {
    by_type: BTreeMap<Sym, BTreeSet<Value>>,
}

static NO_VALUES: BTreeSet<Value> = BTreeSet::new();

impl ActiveDomain {
    pub fn of(&self, ty: Sym) -> &BTreeSet<Value> {
        self.by_type.get(&ty).unwrap_or(&NO_VALUES)
    }

    pub fn contains(&self, v: &Value) -> bool {
        self.of(v.ty).contains(v)
    }

    pub fn all(&self) -> impl Iterator<Item = &Value> {
        self.by_type.values().flatten()
    }

    pub fn types(&self) -> impl Iterator<Item = Sym> + '_ {
        self.by_type.keys().copied()
    }
}

pub fn validate_schema(schema: &CatalogSchema) -> ValidationReport {
    let mut report = ValidationReport::new();
    let mut seen_types = BTreeSet::new();
    for t in &schema.types.types {
        if !seen_types.insert(t.name) {
            report.push(
                Diagnostic::error("duplicate-type", format!("type `{}` declared twice", t.name))
                    .at(&t.loc),
            );
        }
        if let ValueDomain::Finite(names) = &t.domain {
            let distinct: BTreeSet<_> = names.iter().collect();
            if distinct.len() != names.len() {
                report.push(
                    Diagnostic::error(
                        "duplicate-constant",
                        format!("enumeration of type `{}` lists a constant twice", t.name),
                    )
                    .at(&t.loc),
                );
            }
        }
    }

    let mut seen_rel = BTreeSet::new();
    let mut key_owner: BTreeMap<Sym, Sym> = BTreeMap::new();
    for r in &schema.relations {
        if !seen_rel.insert(r.name) {
            report.push(
                Diagnostic::error("duplicate-relation", format!("relation `{}` declared twice", r.name))
                    .at(&r.loc),
            );
        }
        if r.attrs.is_empty() {
            report.push(
                Diagnostic::error("empty-relation", format!("relation `{}` has no attributes", r.name))
                    .at(&r.loc),
            );
            continue;
        }
        let mut names = BTreeSet::new();
        for a in &r.attrs {
            if !names.insert(a.name) {
                report.push(
                    Diagnostic::error(
                        "duplicate-attribute",
                        format!("relation `{}` repeats attribute `{}`", r.name, a.name),
                    )
                    .at(&a.loc),
                );
            }
            if !schema.types.contains(a.ty) {
                report.push(
                    Diagnostic::error(
                        "unknown-type",
                        format!("attribute `{}.{}` has unknown type `{}`", r.name, a.name, a.ty),
                    )
                    .at(&a.loc),
                );
            }
        }
        if r.key != 0 {
            report.push(
                Diagnostic::error(
                    "non-first-pk",
                    format!("primary key of `{}` must be its first attribute", r.name),
                )
                .at(&r.loc),
            );
        }
        if let Some(kt) = r.key_type() {
            match key_owner.get(&kt) {
                Some(other) if *other != r.name => report.push(
                    Diagnostic::error(
                        "pk-type-clash",
                        format!(
                            "relations `{}` and `{}` both use type `{}` as primary key type",
                            other, r.name, kt
                        ),
                    )
                    .at(&r.loc),
                ),
                Some(_) => {}
                None => {
                    key_owner.insert(kt, r.name);
                }
            }
        }
    }

    for r in &schema.relations {
        for fk in &r.fks {
            if fk.attr == r.key {
                report.push(
                    Diagnostic::error(
                        "fk-on-key",
                        format!("foreign key on the primary key of `{}`", r.name),
                    )
                    .at(&fk.loc),
                );
            }
            let Some(attr) = r.attrs.get(fk.attr) else {
                report.push(
                    Diagnostic::error(
                        "fk-attribute",
                        format!("foreign key of `{}` refers to attribute #{}", r.name, fk.attr),
                    )
                    .at(&fk.loc),
                );
                continue;
            };
            match schema.relation(fk.target) {
                None => report.push(
                    Diagnostic::error(
                        "dangling-fk-target",
                        format!("foreign key `{}.{}` targets unknown relation `{}`", r.name, attr.name, fk.target),
                    )
                    .at(&fk.loc),
                ),
                Some(target) => {
                    if target.key_type() != Some(attr.ty) {
                        report.push(
                            Diagnostic::error(
                                "fk-type-mismatch",
                                format!(
                                    "foreign key `{}.{}` has type `{}` but the key of `{}` has type `{}`",
                                    r.name,
                                    attr.name,
                                    attr.ty,
                                    target.name,
                                    target.key_type().map(|s| s.as_str()).unwrap_or("?")
                                ),
                            )
                            .at(&fk.loc),
                        );
                    }
                }
            }
        }
    }
    report
}

/// Checks arity, typing, key uniqueness and referential integrity of every fact.
pub fn validate_instance(schema: &CatalogSchema, cat: &CatalogInstance) -> ValidationReport {
    let mut report = ValidationReport::new();
    for (rel, facts) in &cat.facts {
        let Some(rs) = schema.relation(*rel) else {
            if !facts.is_empty() {
                report.push(Diagnostic::error("unknown-relation", format!("facts for unknown relation `{rel}`")));
            }
            continue;
        };
        let mut keys: BTreeMap<Value, usize> = BTreeMap::new();
        for f in facts {
            if f.len() != rs.arity() {
                report.push(Diagnostic::error(
                    "arity-mismatch",
                    format!("fact {} has {} values, `{}` expects {}", show_fact(*rel, f), f.len(), rel, rs.arity()),
                ));
                continue;
            }
            for (v, a) in f.iter().zip(&rs.attrs) {
                if v.ty != a.ty {
                    report.push(Diagnostic::error(
                        "type-mismatch",
                        format!("fact {}: value `{}` has type `{}`, attribute `{}` expects `{}`", show_fact(*rel, f), v, v.ty, a.name, a.ty),
                    ));
                } else if !schema.types.admits(v) {
                    report.push(Diagnostic::error(
                        "value-out-of-domain",
                        format!("fact {}: `{}` is not a value of type `{}`", show_fact(*rel, f), v, a.ty),
                    ));
                }
            }
            *keys.entry(f[rs.key.min(f.len() - 1)]).or_default() += 1;
        }
        for (k, n) in keys {
            if n > 1 {
                report.push(Diagnostic::error(
                    "duplicate-pk",
                    format!("key `{k}` occurs in {n} facts of `{rel}`"),
                ));
            }
        }
    }
    for rs in &schema.relations {
        for fk in &rs.fks {
            let Some(target) = schema.relation(fk.target) else { continue };
            let target_keys: BTreeSet<Value> = cat
                .facts(target.name)
                .iter()
                .filter_map(|t| t.get(target.key).copied())
                .collect();
            for f in cat.facts(rs.name) {
                if let Some(v) = f.get(fk.attr) {
                    if !target_keys.contains(v) {
                        report.push(Diagnostic::error(
                            "dangling-fk",
                            format!("fact {}: `{}` is not a key of `{}`", show_fact(rs.name, f), v, target.name),
                        ));
                    }
                }
            }
        }
    }
    report
}

pub(crate) fn show_fact(rel: Sym, t: &[Value]) -> String {
    let args: Vec<String> = t.iter().map(|v| v.to_string()).collect();
    format!("{}({})", rel, args.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_schema() -> CatalogSchema {
        CatalogSchema::new(
            TypeDomain::new().with_unbounded(&["ProdType", "CId", "TruckType"]),
            vec![
                RelationSchema::new("ProdCat", &[("p", "ProdType")]),
                RelationSchema::new("Comp", &[("c", "CId"), ("p", "ProdType"), ("t", "TruckType")]),
            ],
        )
    }

    #[test]
    fn example_schema_is_well_formed() {
        assert!(validate_schema(&example_schema()).is_empty());
    }

    #[test]
    fn pk_type_clash() {
        let mut s = example_schema();
        s.relations.push(RelationSchema::new("Other", &[("c", "CId")]));
        let r = validate_schema(&s);
        assert_eq!(r.with_code("pk-type-clash").len(), 1);
    }

    #[test]
    fn fk_type_mismatch() {
        let mut s = example_schema();
        s.types.add("Other", ValueDomain::Unbounded);
        s.relations[0].attrs[0].ty = Sym::new("Other");
        s.relations[1] = s.relations[1].clone().with_fk(1, "ProdCat");
        let r = validate_schema(&s);
        assert_eq!(r.with_code("fk-type-mismatch").len(), 1);
    }

    #[test]
    fn non_first_key_and_dangling_target() {
        let mut s = example_schema();
        s.relations[1].key = 1;
        s.relations[1].fks.push(ForeignKey { attr: 2, target: Sym::new("Nope"), loc: Loc::NONE });
        let r = validate_schema(&s);
        assert_eq!(r.with_code("non-first-pk").len(), 1);
        assert_eq!(r.with_code("dangling-fk-target").len(), 1);
    }

    #[test]
    fn instance_checks() {
        let mut s = example_schema();
        s.relations[1] = s.relations[1].clone().with_fk(1, "ProdCat");
        let ok = CatalogInstance::new()
            .with_fact("ProdCat", vec![Value::named("ProdType", "veg")])
            .with_fact("ProdCat", vec![Value::named("ProdType", "veg")])
            .with_fact("ProdCat", vec![Value::named("ProdType", "fur")]);
        assert!(validate_instance(&s, &ok).is_empty());
        let bad = ok.clone().with_fact(
            "Comp",
            vec![Value::named("CId", "c1"), Value::named("ProdType", "meat"), Value::named("TruckType", "fridge")],
        );
        let r = validate_instance(&s, &bad);
        assert_eq!(r.with_code("dangling-fk").len(), 1);
    }

    #[test]
    fn active_domain_by_type() {
        let cat = CatalogInstance::new().with_fact(
            "Comp",
            vec![Value::named("CId", "c1"), Value::named("ProdType", "veg"), Value::named("TruckType", "fridge")],
        );
        let ad = cat.active_domain();
        assert_eq!(ad.of(Sym::new("CId")).len(), 1);
        assert_eq!(ad.of(Sym::new("ProdType")).iter().next(), Some(&Value::named("ProdType", "veg")));
        assert!(CatalogInstance::new().active_domain().all().next().is_none());
    }
}
