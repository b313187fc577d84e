//! The textual project format.
//!
//! A project is a sequence of items spread over one or more files (see
//! `docs/dsl.md`). [`parse_project`] loads, parses and resolves them;
//! [`print_project`] renders a project back to text that parses to an equal
//! project.

mod lexer;
mod printer;
mod resolve;
mod syntax;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::explore::Property;
use crate::model::{validate_instance, CatalogInstance};
use crate::net::{validate_net, Marking, Net};
use crate::report::{Diagnostic, Loc, SourceSpan, ValidationReport};

pub use printer::{print_project, quote_name};

/// A resolved project: net (with its schema), catalog, initial marking and properties.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Project {
    pub net: Net,
    pub catalog: CatalogInstance,
    pub marking: Marking,
    pub properties: Vec<Property>,
}

impl Project {
    pub fn property(&self, name: &str) -> Option<&Property> {
        self.properties.iter().find(|p| p.name.as_str() == name)
    }

    /// Runs every validator: schema and net structure, catalog instance,
    /// initial marking and properties.
    pub fn validate(&self) -> ValidationReport {
        let mut report = validate_net(&self.net);
        if report.has_errors() {
            return report;
        }
        report.extend(validate_instance(&self.net.schema, &self.catalog));
        for (pid, tokens) in self.marking.iter() {
            let place = self.net.place(pid);
            for tuple in tokens.support() {
                for v in tuple {
                    if !self.net.schema.types.admits(v) {
                        report.push(
                            Diagnostic::error(
                                "value-out-of-domain",
                                format!("value `{v}` in the marking of `{}` is not in the domain of `{}`", place.name, v.ty),
                            )
                            .at(&place.loc),
                        );
                    }
                }
            }
        }
        for p in &self.properties {
            for d in p.typecheck(&self.net) {
                report.push(d);
            }
        }
        report
    }
}

fn io_error(path: &Path, e: std::io::Error, at: Option<&SourceSpan>) -> ValidationReport {
    let mut r = ValidationReport::new();
    let d = Diagnostic::error("io", format!("cannot read `{}`: {e}", path.display()));
    r.push(match at {
        Some(s) => d.at(&Loc::from(s.clone())),
        None => d,
    });
    r
}

fn load(path: &Path, at: Option<&SourceSpan>, seen: &mut BTreeSet<PathBuf>, items: &mut Vec<syntax::Item>) -> Result<(), ValidationReport> {
    let key = path.canonicalize().unwrap_or_else(|_| path.to_path_buf());
    if !seen.insert(key) {
        return Ok(());
    }
    let src = std::fs::read_to_string(path).map_err(|e| io_error(path, e, at))?;
    let file: Arc<str> = path.display().to_string().into();
    parse_items(&file, &src, path.parent(), seen, items)
}

fn parse_items(
    file: &Arc<str>,
    src: &str,
    dir: Option<&Path>,
    seen: &mut BTreeSet<PathBuf>,
    items: &mut Vec<syntax::Item>,
) -> Result<(), ValidationReport> {
    let one = |d: Diagnostic| {
        let mut r = ValidationReport::new();
        r.push(d);
        r
    };
    let toks = lexer::lex(file, src).map_err(one)?;
    let parsed = syntax::Parser::new(toks).file().map_err(one)?;
    for item in parsed {
        if let syntax::Item::Include(p) = &item {
            let target = dir.map(|d| d.join(&p.text)).unwrap_or_else(|| PathBuf::from(&p.text));
            load(&target, Some(&p.span), seen, items)?;
        } else {
            items.push(item);
        }
    }
    Ok(())
}

/// Loads the given files (and their includes, relative to the including file)
/// in order and resolves them as one project.
pub fn parse_project<P: AsRef<Path>>(paths: &[P]) -> Result<Project, ValidationReport> {
    let mut seen = BTreeSet::new();
    let mut items = Vec::new();
    for p in paths {
        load(p.as_ref(), None, &mut seen, &mut items)?;
    }
    resolve::Resolver::resolve(&items)
}

/// Parses a project from a string. Includes resolve relative to the current directory.
pub fn parse_str(file: &str, src: &str) -> Result<Project, ValidationReport> {
    let mut items = Vec::new();
    parse_items(&Arc::from(file), src, None, &mut BTreeSet::new(), &mut items)?;
    resolve::Resolver::resolve(&items)
}
