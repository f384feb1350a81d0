//! Converter from GXL graph files with a CXL class index (the layout of
//! the IAM graph database) to the dataset format.
//!
//! Attribute names are collected in order of first appearance. An
//! attribute whose values include text, or which is named in
//! [`ConvertOptions::categorical`], becomes categorical with its distinct
//! values sorted; every other attribute is real. The written header lists
//! no applied transforms, so loading performs the one-hot and
//! presence-flag encodings.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use serde_json::Value;

use super::dataset::{write_raw, AttributeKind, AttributeSpec, DatasetHeader, GraphRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum GxlValue {
    Number(f64),
    Text(String),
}

impl GxlValue {
    fn as_text(&self) -> String {
        match self {
            GxlValue::Number(v) => format!("{v}"),
            GxlValue::Text(s) => s.clone(),
        }
    }
}

type Attrs = Vec<(String, GxlValue)>;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GxlGraph {
    pub id: String,
    pub nodes: Vec<Attrs>,
    pub edges: Vec<(usize, usize, Attrs)>,
}

#[derive(Debug, Clone, Default)]
pub struct ConvertOptions {
    /// Attributes to treat as categorical even when numeric.
    pub categorical: Vec<String>,
}

fn xml_err(e: impl std::fmt::Display) -> Error {
    Error::Parse {
        line: 0,
        message: format!("xml: {e}"),
    }
}

fn attr(e: &BytesStart<'_>, name: &str) -> Result<Option<String>> {
    for a in e.attributes() {
        let a = a.map_err(xml_err)?;
        if a.key.as_ref() == name.as_bytes() {
            return Ok(Some(a.unescape_value().map_err(xml_err)?.into_owned()));
        }
    }
    Ok(None)
}

fn required(e: &BytesStart<'_>, name: &str) -> Result<String> {
    attr(e, name)?.ok_or_else(|| {
        xml_err(format!(
            "<{}> lacks attribute `{name}`",
            String::from_utf8_lossy(e.name().as_ref())
        ))
    })
}

enum Owner {
    None,
    Node,
    Edge,
}

/// Parses every `<graph>` element of a GXL document.
pub fn parse_gxl(xml: &str) -> Result<Vec<GxlGraph>> {
    let mut reader = Reader::from_str(xml);
    reader.config_mut().trim_text(true);
    let mut graphs = Vec::new();
    let mut graph: Option<GxlGraph> = None;
    let mut node_ids: HashMap<String, usize> = HashMap::new();
    let mut pending_edges: Vec<(String, String, Attrs)> = Vec::new();
    let mut owner = Owner::None;
    let mut attr_name: Option<String> = None;
    let mut value_tag: Option<String> = None;

    loop {
        let event = reader.read_event().map_err(xml_err)?;
        match event {
            Event::Eof => break,
            Event::Start(ref e) | Event::Empty(ref e) => {
                let empty = matches!(event, Event::Empty(_));
                let tag = String::from_utf8_lossy(e.name().as_ref()).into_owned();
                match tag.as_str() {
                    "graph" => {
                        graph = Some(GxlGraph {
                            id: attr(e, "id")?.unwrap_or_default(),
                            ..GxlGraph::default()
                        });
                        node_ids.clear();
                        pending_edges.clear();
                    }
                    "node" => {
                        let g = graph
                            .as_mut()
                            .ok_or_else(|| xml_err("<node> outside <graph>"))?;
                        let id = required(e, "id")?;
                        if node_ids.insert(id.clone(), g.nodes.len()).is_some() {
                            return Err(xml_err(format!("duplicate node id `{id}`")));
                        }
                        g.nodes.push(Vec::new());
                        owner = if empty { Owner::None } else { Owner::Node };
                    }
                    "edge" => {
                        pending_edges.push((required(e, "from")?, required(e, "to")?, Vec::new()));
                        owner = if empty { Owner::None } else { Owner::Edge };
                    }
                    "attr" => attr_name = Some(required(e, "name")?),
                    "float" | "int" | "double" | "string" | "bool" if attr_name.is_some() => {
                        value_tag = Some(tag)
                    }
                    _ => {}
                }
            }
            Event::Text(t) => {
                let (Some(name), Some(tag)) = (&attr_name, &value_tag) else {
                    continue;
                };
                let text = t.unescape().map_err(xml_err)?.trim().to_owned();
                let value = match tag.as_str() {
                    "float" | "double" | "int" => GxlValue::Number(
                        text.parse()
                            .map_err(|_| xml_err(format!("`{text}` is not a number")))?,
                    ),
                    _ => GxlValue::Text(text),
                };
                let g = graph
                    .as_mut()
                    .ok_or_else(|| xml_err("<attr> outside <graph>"))?;
                let slot = match owner {
                    Owner::Node => g.nodes.last_mut(),
                    Owner::Edge => pending_edges.last_mut().map(|e| &mut e.2),
                    Owner::None => None,
                };
                if let Some(slot) = slot {
                    slot.push((name.clone(), value));
                }
            }
            Event::End(e) => match e.name().as_ref() {
                b"node" | b"edge" => owner = Owner::None,
                b"attr" => attr_name = None,
                b"float" | b"int" | b"double" | b"string" | b"bool" => value_tag = None,
                b"graph" => {
                    let mut g = graph.take().ok_or_else(|| xml_err("unbalanced </graph>"))?;
                    let mut seen = HashSet::new();
                    for (from, to, attrs) in pending_edges.drain(..) {
                        let index = |id: &str| {
                            node_ids.get(id).copied().ok_or_else(|| {
                                xml_err(format!("edge endpoint `{id}` is not a node"))
                            })
                        };
                        let (i, j) = (index(&from)?, index(&to)?);
                        if seen.insert((i.min(j), i.max(j))) {
                            g.edges.push((i, j, attrs));
                        }
                    }
                    graphs.push(g);
                }
                _ => {}
            },
            _ => {}
        }
    }
    Ok(graphs)
}

/// `(file, class)` pairs from every `<print file=.. class=..>` element.
pub fn parse_cxl(xml: &str) -> Result<Vec<(String, String)>> {
    let mut reader = Reader::from_str(xml);
    let mut out = Vec::new();
    loop {
        match reader.read_event().map_err(xml_err)? {
            Event::Eof => break,
            Event::Start(e) | Event::Empty(e) if e.name().as_ref() == b"print" => {
                out.push((required(&e, "file")?, required(&e, "class")?));
            }
            _ => {}
        }
    }
    Ok(out)
}

fn schema(
    names: &[String],
    values: impl Iterator<Item = Attrs>,
    opts: &ConvertOptions,
) -> Vec<AttributeSpec> {
    let mut text: HashMap<&str, BTreeSet<String>> = HashMap::new();
    let mut numeric_only: HashMap<&str, bool> = HashMap::new();
    for attrs in values {
        for (n, v) in attrs {
            let Some(name) = names.iter().find(|x| **x == n) else {
                continue;
            };
            text.entry(name).or_default().insert(v.as_text());
            let e = numeric_only.entry(name).or_insert(true);
            *e &= matches!(v, GxlValue::Number(_));
        }
    }
    names
        .iter()
        .map(|n| {
            let numeric = numeric_only.get(n.as_str()).copied().unwrap_or(true);
            if numeric && !opts.categorical.contains(n) {
                AttributeSpec::real(n.clone())
            } else {
                AttributeSpec {
                    name: n.clone(),
                    kind: AttributeKind::Categorical {
                        categories: text
                            .remove(n.as_str())
                            .unwrap_or_default()
                            .into_iter()
                            .collect(),
                    },
                }
            }
        })
        .collect()
}

fn first_seen<'a>(all: impl Iterator<Item = &'a Attrs>) -> Vec<String> {
    let mut names: Vec<String> = Vec::new();
    for attrs in all {
        for (n, _) in attrs {
            if !names.contains(n) {
                names.push(n.clone());
            }
        }
    }
    names
}

fn record_values(attrs: &Attrs, specs: &[AttributeSpec], what: &str) -> Result<Vec<Value>> {
    specs
        .iter()
        .map(|s| {
            let v = attrs
                .iter()
                .find(|(n, _)| *n == s.name)
                .map(|(_, v)| v)
                .ok_or_else(|| Error::Schema(format!("{what} lacks attribute `{}`", s.name)))?;
            Ok(match (&s.kind, v) {
                (AttributeKind::Real, GxlValue::Number(x)) => Value::from(*x),
                (_, v) => Value::from(v.as_text()),
            })
        })
        .collect()
}

/// Header and raw records for labelled GXL graphs.
pub fn to_dataset(
    graphs: &[(GxlGraph, Option<String>)],
    opts: &ConvertOptions,
) -> Result<(DatasetHeader, Vec<GraphRecord>)> {
    if graphs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let node_names = first_seen(graphs.iter().flat_map(|(g, _)| &g.nodes));
    let edge_names = first_seen(
        graphs
            .iter()
            .flat_map(|(g, _)| g.edges.iter().map(|e| &e.2)),
    );
    let node_specs = schema(
        &node_names,
        graphs.iter().flat_map(|(g, _)| g.nodes.clone()),
        opts,
    );
    let edge_specs = schema(
        &edge_names,
        graphs
            .iter()
            .flat_map(|(g, _)| g.edges.iter().map(|e| e.2.clone())),
        opts,
    );
    let records = graphs
        .iter()
        .map(|(g, label)| {
            Ok(GraphRecord {
                id: g.id.clone(),
                label: label.clone(),
                nodes: g
                    .nodes
                    .iter()
                    .enumerate()
                    .map(|(i, a)| {
                        record_values(a, &node_specs, &format!("graph `{}` node {i}", g.id))
                    })
                    .collect::<Result<_>>()?,
                edges: g
                    .edges
                    .iter()
                    .map(|(i, j, a)| {
                        let what = format!("graph `{}` edge ({i}, {j})", g.id);
                        Ok((*i, *j, record_values(a, &edge_specs, &what)?))
                    })
                    .collect::<Result<_>>()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((
        DatasetHeader::new(node_specs, edge_specs, Vec::new()),
        records,
    ))
}

/// Converts the graphs listed in a CXL index, resolving file names
/// against `gxl_dir`. Returns the number of graphs written.
pub fn convert_collection(
    cxl: impl AsRef<Path>,
    gxl_dir: impl AsRef<Path>,
    opts: &ConvertOptions,
    out: impl Write,
) -> Result<usize> {
    let index = parse_cxl(&fs::read_to_string(cxl)?)?;
    let mut graphs = Vec::with_capacity(index.len());
    for (file, class) in index {
        for mut g in parse_gxl(&fs::read_to_string(gxl_dir.as_ref().join(&file))?)? {
            if g.id.is_empty() {
                g.id = file.trim_end_matches(".gxl").to_owned();
            }
            graphs.push((g, Some(class.clone())));
        }
    }
    let (header, records) = to_dataset(&graphs, opts)?;
    write_raw(out, &header, &records)?;
    Ok(records.len())
}
