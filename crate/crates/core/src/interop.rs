//! FeatureIDE-style XML exchange and Graphviz DOT rendering.
//!
//! Supported subset:
//!
//! ```xml
//! <featureModel>
//!   <struct>
//!     <and name="Time" abstract="true" mandatory="true">
//!       <alt name="Time_Function_T1001" abstract="true" mandatory="true">
//!         <description>TIME-6</description>
//!         <feature name="server"/>
//!         <feature name="client"/>
//!       </alt>
//!     </and>
//!   </struct>
//!   <constraints>
//!     <rule>
//!       <description>TIME-10</description>
//!       <imp><var>client</var><var>virtual_met</var></imp>
//!     </rule>
//!   </constraints>
//! </featureModel>
//! ```
//!
//! Absent `abstract`/`mandatory` attributes read as false. A feature's
//! `description` holds the id of the worksheet entry that introduced it; a
//! rule's `description` holds the constraint id (rules without one are
//! numbered `C1`, `C2`, ...). Other top-level elements, such as IDE layout
//! or calculation settings, are skipped with a warning.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use quick_xml::escape::escape;
use quick_xml::events::Event;
use quick_xml::Reader;

use crate::analysis::{AnalysisReport, AnomalyKind};
use crate::error::InteropError;
use crate::logic::Formula;
use crate::model::{CrossConstraint, Feature, FeatureModel, GroupKind};

fn write_formula(out: &mut String, f: &Formula, depth: usize) {
    let pad = "\t".repeat(depth);
    let nest = |out: &mut String, tag: &str, children: &[&Formula]| {
        if children.is_empty() {
            let _ = writeln!(out, "{pad}<{tag}/>");
            return;
        }
        let _ = writeln!(out, "{pad}<{tag}>");
        for c in children {
            write_formula(out, c, depth + 1);
        }
        let _ = writeln!(out, "{pad}</{tag}>");
    };
    match f {
        Formula::Var(name) => {
            let _ = writeln!(out, "{pad}<var>{}</var>", escape(name.as_str()));
        }
        Formula::True => nest(out, "conj", &[]),
        Formula::False => nest(out, "disj", &[]),
        Formula::Not(c) => nest(out, "not", &[c]),
        Formula::And(cs) => nest(out, "conj", &cs.iter().collect::<Vec<_>>()),
        Formula::Or(cs) => nest(out, "disj", &cs.iter().collect::<Vec<_>>()),
        Formula::Implies(a, b) => nest(out, "imp", &[a, b]),
        Formula::Iff(a, b) => nest(out, "eqv", &[a, b]),
    }
}

fn write_feature(out: &mut String, f: &Feature, depth: usize) {
    let pad = "\t".repeat(depth);
    let tag = match (f.is_leaf(), f.group) {
        (true, _) => "feature",
        (false, GroupKind::And) => "and",
        (false, GroupKind::Or) => "or",
        (false, GroupKind::Alternative) => "alt",
    };
    let mut attrs = String::new();
    if f.is_abstract {
        attrs.push_str(" abstract=\"true\"");
    }
    if f.mandatory {
        attrs.push_str(" mandatory=\"true\"");
    }
    let _ = write!(attrs, " name=\"{}\"", escape(f.name.as_str()));
    if f.is_leaf() && f.origin.is_none() {
        let _ = writeln!(out, "{pad}<{tag}{attrs}/>");
        return;
    }
    let _ = writeln!(out, "{pad}<{tag}{attrs}>");
    if let Some(origin) = &f.origin {
        let _ = writeln!(out, "{pad}\t<description>{}</description>", escape(origin.as_str()));
    }
    for c in &f.children {
        write_feature(out, c, depth + 1);
    }
    let _ = writeln!(out, "{pad}</{tag}>");
}

pub fn export_xml(m: &FeatureModel) -> String {
    let mut out =
        String::from("<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n<featureModel>\n\t<struct>\n");
    write_feature(&mut out, &m.root, 2);
    out.push_str("\t</struct>\n");
    if m.constraints.is_empty() {
        out.push_str("\t<constraints/>\n");
    } else {
        out.push_str("\t<constraints>\n");
        for c in &m.constraints {
            out.push_str("\t\t<rule>\n");
            let _ = writeln!(out, "\t\t\t<description>{}</description>", escape(c.id.as_str()));
            write_formula(&mut out, &c.formula, 3);
            out.push_str("\t\t</rule>\n");
        }
        out.push_str("\t</constraints>\n");
    }
    out.push_str("</featureModel>\n");
    out
}

#[derive(Debug, Default)]
struct Element {
    name: String,
    attrs: BTreeMap<String, String>,
    children: Vec<Element>,
    text: String,
}

fn parse_dom(doc: &str) -> Result<Element, InteropError> {
    let mut reader = Reader::from_str(doc);
    reader.config_mut().trim_text(true);
    let xml_err = |reader: &Reader<&[u8]>, e: quick_xml::Error| {
        InteropError::Xml(format!("{e} (at byte {})", reader.error_position()))
    };
    let open = |e: &quick_xml::events::BytesStart| -> Result<Element, InteropError> {
        let mut el = Element {
            name: String::from_utf8_lossy(e.name().as_ref()).into_owned(),
            ..Element::default()
        };
        for a in e.attributes() {
            let a = a.map_err(|e| InteropError::Xml(e.to_string()))?;
            let value = a.unescape_value().map_err(|e| InteropError::Xml(e.to_string()))?;
            el.attrs
                .insert(String::from_utf8_lossy(a.key.as_ref()).into_owned(), value.into_owned());
        }
        Ok(el)
    };
    let mut stack: Vec<Element> = Vec::new();
    let mut root = None;
    loop {
        let event = reader.read_event().map_err(|e| xml_err(&reader, e))?;
        let finished = match event {
            Event::Start(e) => {
                stack.push(open(&e)?);
                None
            }
            Event::Empty(e) => Some(open(&e)?),
            Event::End(_) => stack.pop(),
            Event::Text(t) => {
                let text = t.unescape().map_err(|e| InteropError::Xml(e.to_string()))?;
                match stack.last_mut() {
                    Some(top) => top.text.push_str(&text),
                    None => {
                        return Err(InteropError::Xml(format!(
                            "text outside the document element: {text:?}"
                        )))
                    }
                }
                None
            }
            Event::CData(t) => {
                if let Some(top) = stack.last_mut() {
                    top.text.push_str(&String::from_utf8_lossy(&t));
                }
                None
            }
            Event::Eof => break,
            Event::Decl(_) | Event::PI(_) | Event::Comment(_) | Event::DocType(_) => None,
        };
        if let Some(el) = finished {
            match stack.last_mut() {
                Some(parent) => parent.children.push(el),
                None if root.is_none() => root = Some(el),
                None => return Err(InteropError::Xml("more than one document element".into())),
            }
        }
    }
    if let Some(open) = stack.last() {
        return Err(InteropError::Xml(format!("unclosed element <{}>", open.name)));
    }
    root.ok_or_else(|| InteropError::Xml("empty document".into()))
}

fn flag(el: &Element, attr: &str) -> Result<bool, InteropError> {
    match el.attrs.get(attr).map(String::as_str) {
        None | Some("false") => Ok(false),
        Some("true") => Ok(true),
        Some(other) => Err(InteropError::Xml(format!(
            "attribute {attr}=\"{other}\" on <{}> must be true or false",
            el.name
        ))),
    }
}

fn read_feature(el: &Element) -> Result<Feature, InteropError> {
    let group = match el.name.as_str() {
        "feature" | "and" => GroupKind::And,
        "or" => GroupKind::Or,
        "alt" => GroupKind::Alternative,
        other => return Err(InteropError::UnknownElement(other.to_string())),
    };
    let name = el
        .attrs
        .get("name")
        .ok_or_else(|| InteropError::Nesting(format!("<{}> without a name attribute", el.name)))?;
    let mut f = Feature::new(name, flag(el, "abstract")?).mandatory(flag(el, "mandatory")?);
    let mut children = Vec::new();
    for c in &el.children {
        match c.name.as_str() {
            "description" => {
                let text = c.text.trim();
                if !text.is_empty() {
                    f.origin = Some(text.to_string());
                }
            }
            _ if el.name == "feature" => {
                return Err(InteropError::Nesting(format!(
                    "leaf <feature name=\"{name}\"> contains <{}>",
                    c.name
                )))
            }
            _ => children.push(read_feature(c)?),
        }
    }
    if el.name != "feature" && children.is_empty() {
        return Err(InteropError::Nesting(format!(
            "<{} name=\"{name}\"> has no child features",
            el.name
        )));
    }
    Ok(f.with_group(group, children))
}

fn read_formula(el: &Element) -> Result<Formula, InteropError> {
    let args = || el.children.iter().map(read_formula).collect::<Result<Vec<_>, _>>();
    let arity = |n: usize| {
        if el.children.len() == n {
            Ok(())
        } else {
            Err(InteropError::Constraint(format!(
                "<{}> takes {n} operand(s), found {}",
                el.name,
                el.children.len()
            )))
        }
    };
    Ok(match el.name.as_str() {
        "var" => {
            arity(0)?;
            let name = el.text.trim();
            if name.is_empty() {
                return Err(InteropError::Constraint("empty <var>".into()));
            }
            Formula::var(name)
        }
        "not" => {
            arity(1)?;
            Formula::not(args()?.remove(0))
        }
        "conj" => Formula::and(args()?),
        "disj" => Formula::or(args()?),
        "imp" | "eqv" => {
            arity(2)?;
            let mut a = args()?;
            let rhs = a.pop().unwrap();
            let lhs = a.pop().unwrap();
            if el.name == "imp" {
                Formula::implies(lhs, rhs)
            } else {
                Formula::iff(lhs, rhs)
            }
        }
        other => return Err(InteropError::UnknownElement(other.to_string())),
    })
}

/// A model read from XML, plus warnings about skipped metadata.
#[derive(Debug, Clone)]
pub struct Imported {
    pub model: FeatureModel,
    pub warnings: Vec<String>,
}

pub fn import_xml(doc: &str) -> Result<FeatureModel, InteropError> {
    import_xml_with_warnings(doc).map(|i| i.model)
}

pub fn import_xml_with_warnings(doc: &str) -> Result<Imported, InteropError> {
    let top = parse_dom(doc)?;
    if top.name != "featureModel" {
        return Err(InteropError::UnknownElement(top.name));
    }
    let mut warnings = Vec::new();
    let mut root = None;
    let mut constraints = Vec::new();
    for section in &top.children {
        match section.name.as_str() {
            "struct" => {
                if root.is_some() || section.children.len() != 1 {
                    return Err(InteropError::Nesting(
                        "<struct> must occur once with exactly one root feature".into(),
                    ));
                }
                root = Some(read_feature(&section.children[0])?);
            }
            "constraints" => {
                for rule in &section.children {
                    if rule.name != "rule" {
                        return Err(InteropError::UnknownElement(rule.name.clone()));
                    }
                    let mut id = None;
                    let mut body = Vec::new();
                    for c in &rule.children {
                        match c.name.as_str() {
                            "description" => id = Some(c.text.trim().to_string()).filter(|s| !s.is_empty()),
                            _ => body.push(read_formula(c)?),
                        }
                    }
                    if body.len() != 1 {
                        return Err(InteropError::Constraint(format!(
                            "<rule> must contain exactly one formula, found {}",
                            body.len()
                        )));
                    }
                    let id = id.unwrap_or_else(|| format!("C{}", constraints.len() + 1));
                    constraints.push(CrossConstraint::new(id, body.remove(0)));
                }
            }
            other => warnings.push(format!("ignored <{other}> element")),
        }
    }
    let root = root.ok_or_else(|| InteropError::Nesting("missing <struct>".into()))?;
    let model = FeatureModel::new(root, constraints)?;
    Ok(Imported { model, warnings })
}

fn dot_id(name: &str) -> String {
    format!("\"{}\"", name.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Graphviz rendering: abstract features dashed, edges labelled by group
/// kind (`mandatory`/`optional` for and-groups), dead features red and
/// false-optional features orange when a report is given.
pub fn export_dot(m: &FeatureModel, report: Option<&AnalysisReport>) -> String {
    let mut dead = BTreeSet::new();
    let mut false_optional = BTreeSet::new();
    if let Some(r) = report {
        for a in &r.anomalies {
            match &a.kind {
                AnomalyKind::DeadFeature { feature } => {
                    dead.insert(feature.as_str());
                }
                AnomalyKind::FalseOptional { feature, .. } => {
                    false_optional.insert(feature.as_str());
                }
                _ => {}
            }
        }
    }
    let mut out = format!("digraph {} {{\n\tnode [shape=box];\n", dot_id(&m.root.name));
    for (f, _) in m.features() {
        let mut attrs = vec![];
        if f.is_abstract {
            attrs.push("style=dashed".to_string());
        }
        if dead.contains(f.name.as_str()) {
            attrs.push("color=red, fontcolor=red, xlabel=\"dead\"".into());
        } else if false_optional.contains(f.name.as_str()) {
            attrs.push("color=orange, fontcolor=orange, xlabel=\"false-optional\"".into());
        }
        if attrs.is_empty() {
            let _ = writeln!(out, "\t{};", dot_id(&f.name));
        } else {
            let _ = writeln!(out, "\t{} [{}];", dot_id(&f.name), attrs.join(", "));
        }
    }
    for (f, parent) in m.features() {
        let Some(p) = parent else { continue };
        let label = match p.group {
            GroupKind::And if f.mandatory => "mandatory",
            GroupKind::And => "optional",
            GroupKind::Or => "or",
            GroupKind::Alternative => "alt",
        };
        let _ = writeln!(out, "\t{} -> {} [label=\"{label}\"];", dot_id(&p.name), dot_id(&f.name));
    }
    out.push_str("}\n");
    out
}
