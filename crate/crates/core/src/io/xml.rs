//! XML model document, format version 1.
//!
//! ```text
//! <prm version="1" kmax="3">
//!   <schema>
//!     <class name="clazz2" pk="clazz2id">
//!       <attribute name="att0" states="v0,v1"/>
//!       <referenceSlot name="clazz1fkatt12" target="clazz1"/>
//!     </class>
//!   </schema>
//!   <dependencies>
//!     <dependency id="d0" child="clazz2.att3" parent="clazz3.att0"
//!                 chain="~clazz2fkatt23" aggregator="MODE"/>
//!   </dependencies>
//!   <cpds>
//!     <cpd child="clazz2.att3" parents="d0">
//!       <row>0.25 0.75</row>
//!     </cpd>
//!   </cpds>
//! </prm>
//! ```
//!
//! A chain is the slash-joined list of slot names walked from the child's
//! class, an inverse slot carrying a `~` prefix; the empty chain is `""`.
//! `aggregator` is present exactly when the chain crosses an inverse slot.
//! CPD rows follow the mixed-radix order of the listed parents, first parent
//! most significant. Probabilities use the shortest decimal that reads back
//! to the same `f64`.

use std::collections::HashMap;
use std::fmt::Write as _;

use roxmltree::{Document, Node};
use thiserror::Error;

use crate::chain::SlotChain;
use crate::cpd::{check_row, Cpd, Prm};
use crate::deps::{Aggregator, AttributeNode, Dependency, DependencyStructure};
use crate::schema::{AttributeDef, ClassDef, ReferenceSlot, RelationalSchema};

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("line {line}: malformed XML: {message}")]
    Malformed { line: u32, message: String },

    #[error("line {line}: unknown tag <{tag}>")]
    UnknownTag { line: u32, tag: String },

    #[error("line {line}: dangling reference to {reference}")]
    Dangling { line: u32, reference: String },

    #[error("line {line}: CPD of {attribute} is not normalized: {detail}")]
    NotNormalized { line: u32, attribute: String, detail: String },

    #[error("line {line}: {message}")]
    Invalid { line: u32, message: String },
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(ch),
        }
    }
    out
}

pub fn serialize_prm(prm: &Prm) -> String {
    let schema = &prm.schema;
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(out, "<prm version=\"{FORMAT_VERSION}\" kmax=\"{}\">", prm.k_max);

    out.push_str("  <schema>\n");
    for class in &schema.classes {
        let _ = writeln!(
            out,
            "    <class name=\"{}\" pk=\"{}\">",
            escape(&class.name),
            escape(&class.primary_key)
        );
        for a in &class.attributes {
            let _ = writeln!(
                out,
                "      <attribute name=\"{}\" states=\"{}\"/>",
                escape(&a.name),
                escape(&a.states.join(","))
            );
        }
        for id in &class.reference_slots {
            let slot = schema.slot(*id);
            let _ = writeln!(
                out,
                "      <referenceSlot name=\"{}\" target=\"{}\"/>",
                escape(&slot.name),
                escape(&schema.classes[slot.target].name)
            );
        }
        out.push_str("    </class>\n");
    }
    out.push_str("  </schema>\n");

    out.push_str("  <dependencies>\n");
    for (i, d) in prm.structure.dependencies.iter().enumerate() {
        let _ = write!(
            out,
            "    <dependency id=\"d{i}\" child=\"{}\" parent=\"{}\" chain=\"{}\"",
            escape(&d.child.qualified(schema)),
            escape(&d.parent.qualified(schema)),
            escape(&d.slot_chain.path(schema))
        );
        if let Some(a) = d.aggregator {
            let _ = write!(out, " aggregator=\"{a}\"");
        }
        out.push_str("/>\n");
    }
    out.push_str("  </dependencies>\n");

    out.push_str("  <cpds>\n");
    for cpd in &prm.cpds {
        let parents = cpd.parents.iter().map(|i| format!("d{i}")).collect::<Vec<_>>().join(" ");
        let _ = writeln!(
            out,
            "    <cpd child=\"{}\" parents=\"{parents}\">",
            escape(&cpd.child.qualified(schema))
        );
        for row in &cpd.rows {
            let text = row.iter().map(|p| format!("{p}")).collect::<Vec<_>>().join(" ");
            let _ = writeln!(out, "      <row>{text}</row>");
        }
        out.push_str("    </cpd>\n");
    }
    out.push_str("  </cpds>\n");
    out.push_str("</prm>\n");
    out
}

struct Ctx<'a> {
    doc: &'a Document<'a>,
}

impl Ctx<'_> {
    fn line(&self, node: Node) -> u32 {
        self.doc.text_pos_at(node.range().start).row
    }

    fn invalid(&self, node: Node, message: impl Into<String>) -> ParseError {
        ParseError::Invalid {
            line: self.line(node),
            message: message.into(),
        }
    }

    fn dangling(&self, node: Node, reference: impl Into<String>) -> ParseError {
        ParseError::Dangling {
            line: self.line(node),
            reference: reference.into(),
        }
    }

    fn attr<'n>(&self, node: Node<'n, 'n>, name: &str) -> Result<&'n str, ParseError> {
        node.attribute(name)
            .ok_or_else(|| self.invalid(node, format!("<{}> lacks attribute {name}", node.tag_name().name())))
    }

    fn elements<'n>(&self, node: Node<'n, 'n>, allowed: &[&str]) -> Result<Vec<Node<'n, 'n>>, ParseError> {
        let mut out = Vec::new();
        for child in node.children() {
            if child.is_text() {
                if !child.text().unwrap_or("").trim().is_empty() {
                    return Err(self.invalid(child, "unexpected text"));
                }
                continue;
            }
            if !child.is_element() {
                continue;
            }
            let tag = child.tag_name().name();
            if !allowed.contains(&tag) {
                return Err(ParseError::UnknownTag {
                    line: self.line(child),
                    tag: tag.to_string(),
                });
            }
            out.push(child);
        }
        Ok(out)
    }
}

/// Resolves `class.attribute` against the schema.
fn attribute_ref(schema: &RelationalSchema, text: &str) -> Option<AttributeNode> {
    let (class, attr) = text.split_once('.')?;
    let c = schema.class_index(class)?;
    let a = schema.classes[c].attributes.iter().position(|x| x.name == attr)?;
    Some(AttributeNode::new(c, a))
}

pub fn parse_prm(text: &str) -> Result<Prm, ParseError> {
    let doc = Document::parse(text).map_err(|e| ParseError::Malformed {
        line: e.pos().row,
        message: e.to_string(),
    })?;
    let cx = Ctx { doc: &doc };
    let root = doc.root_element();
    if root.tag_name().name() != "prm" {
        return Err(ParseError::UnknownTag {
            line: cx.line(root),
            tag: root.tag_name().name().to_string(),
        });
    }
    let version = cx.attr(root, "version")?;
    if version != FORMAT_VERSION {
        return Err(cx.invalid(root, format!("unsupported format version {version}")));
    }
    let k_max: usize = cx
        .attr(root, "kmax")?
        .parse()
        .map_err(|_| cx.invalid(root, "kmax is not a non-negative integer"))?;

    let sections = cx.elements(root, &["schema", "dependencies", "cpds"])?;
    let section = |name: &str| -> Result<Node, ParseError> {
        let mut found = sections.iter().filter(|n| n.tag_name().name() == name);
        let first = found.next().ok_or_else(|| cx.invalid(root, format!("missing <{name}>")))?;
        if let Some(dup) = found.next() {
            return Err(cx.invalid(*dup, format!("duplicate <{name}>")));
        }
        Ok(*first)
    };

    let schema = parse_schema(&cx, section("schema")?)?;
    let (structure, ids) = parse_dependencies(&cx, &schema, section("dependencies")?, k_max)?;
    let cpds = parse_cpds(&cx, &schema, &structure, &ids, section("cpds")?)?;

    let prm = Prm {
        schema,
        structure,
        cpds,
        k_max,
    };
    prm.check().map_err(|e| ParseError::Invalid {
        line: cx.line(root),
        message: e.to_string(),
    })?;
    Ok(prm)
}

fn parse_schema(cx: &Ctx, node: Node) -> Result<RelationalSchema, ParseError> {
    let mut classes = Vec::new();
    let mut pending_slots = Vec::new();
    for class_node in cx.elements(node, &["class"])? {
        let index = classes.len();
        let name = cx.attr(class_node, "name")?.to_string();
        let primary_key = cx.attr(class_node, "pk")?.to_string();
        let mut attributes = Vec::new();
        for child in cx.elements(class_node, &["attribute", "referenceSlot"])? {
            match child.tag_name().name() {
                "attribute" => {
                    let states: Vec<String> = cx
                        .attr(child, "states")?
                        .split(',')
                        .filter(|s| !s.is_empty())
                        .map(str::to_string)
                        .collect();
                    if states.len() < 2 {
                        return Err(cx.invalid(child, "attribute needs at least two states"));
                    }
                    attributes.push(AttributeDef {
                        name: cx.attr(child, "name")?.to_string(),
                        states,
                    });
                }
                _ => pending_slots.push((child, index)),
            }
        }
        if attributes.is_empty() {
            return Err(cx.invalid(class_node, format!("class {name} has no attribute")));
        }
        classes.push(ClassDef {
            name,
            primary_key,
            attributes,
            reference_slots: Vec::new(),
        });
    }
    if classes.is_empty() {
        return Err(cx.invalid(node, "schema has no class"));
    }

    let mut slots = Vec::new();
    let mut names: HashMap<String, ()> = HashMap::new();
    for (slot_node, owner) in pending_slots {
        let name = cx.attr(slot_node, "name")?.to_string();
        let target_name = cx.attr(slot_node, "target")?;
        let target = classes
            .iter()
            .position(|c| c.name == target_name)
            .ok_or_else(|| cx.dangling(slot_node, format!("class {target_name}")))?;
        if names.insert(name.clone(), ()).is_some() {
            return Err(cx.invalid(slot_node, format!("duplicate slot name {name}")));
        }
        slots.push(ReferenceSlot { name, owner, target });
    }
    let schema = RelationalSchema::new(classes, slots).map_err(|e| cx.invalid(node, e.to_string()))?;
    let report = crate::schema::validate_schema(&schema);
    if !report.is_empty() {
        return Err(cx.invalid(node, report.to_string()));
    }
    Ok(schema)
}

fn parse_dependencies(
    cx: &Ctx,
    schema: &RelationalSchema,
    node: Node,
    k_max: usize,
) -> Result<(DependencyStructure, HashMap<String, usize>), ParseError> {
    let mut dependencies = Vec::new();
    let mut ids = HashMap::new();
    for dep_node in cx.elements(node, &["dependency"])? {
        let id = cx.attr(dep_node, "id")?.to_string();
        let child_text = cx.attr(dep_node, "child")?;
        let parent_text = cx.attr(dep_node, "parent")?;
        let child = attribute_ref(schema, child_text).ok_or_else(|| cx.dangling(dep_node, child_text))?;
        let parent = attribute_ref(schema, parent_text).ok_or_else(|| cx.dangling(dep_node, parent_text))?;
        let path = cx.attr(dep_node, "chain")?;
        for seg in path.split('/').filter(|s| !s.is_empty()) {
            let name = seg.strip_prefix('~').unwrap_or(seg);
            if schema.slot_by_name(name).is_none() {
                return Err(cx.dangling(dep_node, format!("slot {name}")));
            }
        }
        let chain = SlotChain::parse_path(schema, child.class, path).map_err(|e| cx.invalid(dep_node, e.to_string()))?;
        if chain.end_class(schema) != Some(parent.class) {
            return Err(cx.invalid(dep_node, format!("chain {path} does not reach {parent_text}")));
        }
        if chain.len() > k_max {
            return Err(cx.invalid(dep_node, format!("chain {path} is longer than kmax {k_max}")));
        }
        let aggregator = match dep_node.attribute("aggregator") {
            Some(a) => Some(a.parse::<Aggregator>().map_err(|e| cx.invalid(dep_node, e.to_string()))?),
            None => None,
        };
        if aggregator.is_some() != chain.is_multi_valued() {
            return Err(cx.invalid(dep_node, "aggregator must be given exactly for multi-valued chains"));
        }
        if ids.insert(id.clone(), dependencies.len()).is_some() {
            return Err(cx.invalid(dep_node, format!("duplicate dependency id {id}")));
        }
        dependencies.push(Dependency {
            child,
            parent,
            slot_chain: chain,
            aggregator,
        });
    }
    let structure = DependencyStructure { dependencies, k_max };
    if !structure.is_acyclic(schema) {
        return Err(cx.invalid(node, "dependency graph has a cycle"));
    }
    Ok((structure, ids))
}

fn parse_cpds(
    cx: &Ctx,
    schema: &RelationalSchema,
    structure: &DependencyStructure,
    ids: &HashMap<String, usize>,
    node: Node,
) -> Result<Vec<Cpd>, ParseError> {
    let offsets = crate::deps::attribute_offsets(schema);
    let mut cpds: Vec<Option<Cpd>> = vec![None; schema.attribute_count()];
    for cpd_node in cx.elements(node, &["cpd"])? {
        let child_text = cx.attr(cpd_node, "child")?;
        let child = attribute_ref(schema, child_text).ok_or_else(|| cx.dangling(cpd_node, child_text))?;
        let mut parents = Vec::new();
        for id in cx.attr(cpd_node, "parents")?.split_whitespace() {
            let &i = ids.get(id).ok_or_else(|| cx.dangling(cpd_node, format!("dependency {id}")))?;
            parents.push(i);
        }
        let expected: Vec<usize> = structure.parents_of(child).map(|(i, _)| i).collect();
        if parents != expected {
            return Err(cx.invalid(cpd_node, format!("parents of {child_text} do not match its dependencies")));
        }
        let parent_cards: Vec<usize> = parents
            .iter()
            .map(|&i| {
                let p = structure.dependencies[i].parent;
                schema.attribute(p.class, p.attribute).cardinality()
            })
            .collect();
        let width = schema.attribute(child.class, child.attribute).cardinality();
        let mut rows = Vec::new();
        for row_node in cx.elements(cpd_node, &["row"])? {
            let text = row_node.text().unwrap_or("");
            let row: Vec<f64> = text
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| cx.invalid(row_node, format!("bad probability in row of {child_text}")))?;
            if row.len() != width {
                return Err(cx.invalid(row_node, format!("row of {child_text} has {} entries, expected {width}", row.len())));
            }
            check_row(&row).map_err(|detail| ParseError::NotNormalized {
                line: cx.line(row_node),
                attribute: child_text.to_string(),
                detail,
            })?;
            rows.push(row);
        }
        let expected_rows: usize = parent_cards.iter().product();
        if rows.len() != expected_rows {
            return Err(cx.invalid(
                cpd_node,
                format!("{child_text} has {} rows, expected {expected_rows}", rows.len()),
            ));
        }
        let slot = &mut cpds[offsets[child.class] + child.attribute];
        if slot.is_some() {
            return Err(cx.invalid(cpd_node, format!("duplicate CPD for {child_text}")));
        }
        *slot = Some(Cpd {
            child,
            parents,
            parent_cards,
            rows,
        });
    }
    cpds.into_iter()
        .enumerate()
        .map(|(i, c)| {
            c.ok_or_else(|| {
                let class = offsets.partition_point(|&o| o <= i) - 1;
                let node = AttributeNode::new(class, i - offsets[class]);
                cx.invalid(node_line_anchor(cx), format!("missing CPD for {}", node.qualified(schema)))
            })
        })
        .collect()
}

fn node_line_anchor<'a>(cx: &Ctx<'a>) -> Node<'a, 'a> {
    cx.doc.root_element()
}
