//! Line-delimited JSON datasets.
//!
//! Line 1 is a [`DatasetHeader`]; every further non-blank line is one
//! graph record:
//!
//! ```text
//! {"format":"graphkm-dataset","version":1,"node_attributes":[{"name":"x","kind":"real"}],"edge_attributes":[],"transforms":[],"transform_checksum":"..."}
//! {"id":"a","label":"A","nodes":[[0.5],[1.0]],"edges":[[0,1,[]]]}
//! ```
//!
//! Values of categorical attributes are strings. The header lists the
//! encoding transforms already applied to the stored values together with
//! a checksum of that chain; loading applies only the requested transforms
//! that are not yet listed, so no transform runs twice.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::graph::{AttributeSpace, AttributedGraph, GraphBuilder};

pub const FORMAT: &str = "graphkm-dataset";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    /// Categorical attributes become 0/1 indicator blocks.
    OneHot,
    /// Every edge attribute gets a leading constant `1.0`.
    EdgePresenceFlag,
}

impl Transform {
    pub fn name(self) -> &'static str {
        match self {
            Transform::OneHot => "one-hot",
            Transform::EdgePresenceFlag => "edge-presence-flag",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "one-hot" => Ok(Transform::OneHot),
            "edge-presence-flag" => Ok(Transform::EdgePresenceFlag),
            other => Err(Error::Config(format!("unknown transform `{other}`"))),
        }
    }

    /// Both transforms, in canonical order.
    pub fn all() -> Vec<Transform> {
        vec![Transform::OneHot, Transform::EdgePresenceFlag]
    }
}

/// Checksum of an applied transform chain.
pub fn transform_checksum(chain: &[Transform]) -> String {
    let names: Vec<&str> = chain.iter().map(|t| t.name()).collect();
    super::sha256_hex(names.join("|").as_bytes())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AttributeKind {
    Real,
    Categorical { categories: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: AttributeKind,
}

impl AttributeSpec {
    pub fn real(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: AttributeKind::Real,
        }
    }

    fn width(&self) -> usize {
        match &self.kind {
            AttributeKind::Real => 1,
            AttributeKind::Categorical { categories } => categories.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub format: String,
    pub version: u32,
    pub node_attributes: Vec<AttributeSpec>,
    pub edge_attributes: Vec<AttributeSpec>,
    pub transforms: Vec<Transform>,
    pub transform_checksum: String,
}

impl DatasetHeader {
    pub fn new(
        node_attributes: Vec<AttributeSpec>,
        edge_attributes: Vec<AttributeSpec>,
        transforms: Vec<Transform>,
    ) -> Self {
        Self {
            format: FORMAT.into(),
            version: VERSION,
            node_attributes,
            edge_attributes,
            transform_checksum: transform_checksum(&transforms),
            transforms,
        }
    }

    /// Header for graphs whose attributes are already fully encoded.
    pub fn encoded(space: AttributeSpace) -> Self {
        let node = (0..space.node_dim)
            .map(|i| AttributeSpec::real(format!("v{i}")))
            .collect();
        let edge = (0..space.edge_dim)
            .map(|i| AttributeSpec::real(format!("e{i}")))
            .collect();
        Self::new(node, edge, Transform::all())
    }

    fn check(&self) -> Result<()> {
        if self.format != FORMAT {
            return Err(Error::Schema(format!("unknown format `{}`", self.format)));
        }
        if self.version != VERSION {
            return Err(Error::Schema(format!(
                "unsupported version {}",
                self.version
            )));
        }
        if self.transform_checksum != transform_checksum(&self.transforms) {
            return Err(Error::Schema(
                "transform checksum does not match the transform list".into(),
            ));
        }
        let mut seen = HashSet::new();
        if let Some(t) = self.transforms.iter().find(|t| !seen.insert(**t)) {
            return Err(Error::Schema(format!(
                "transform `{}` listed twice",
                t.name()
            )));
        }
        Ok(())
    }
}

/// Record as stored on one line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub nodes: Vec<Vec<Value>>,
    #[serde(default)]
    pub edges: Vec<(usize, usize, Vec<Value>)>,
}

impl GraphRecord {
    pub fn from_graph(g: &AttributedGraph) -> Self {
        let num = |v: &[f64]| v.iter().map(|&x| Value::from(x)).collect();
        Self {
            id: g.id().to_owned(),
            label: g.label().map(str::to_owned),
            nodes: (0..g.order()).map(|i| num(g.node_attr(i))).collect(),
            edges: g.edges().map(|(i, j, a)| (i, j, num(a))).collect(),
        }
    }
}

impl GraphRecord {
    /// Builds the graph from fully encoded numeric values.
    pub fn to_graph(&self, space: AttributeSpace) -> Result<AttributedGraph> {
        let num = |v: &[Value]| -> Result<Vec<f64>> {
            v.iter()
                .map(|x| {
                    x.as_f64().ok_or_else(|| {
                        Error::Schema(format!(
                            "graph `{}`: `{x}` is not an encoded value",
                            self.id
                        ))
                    })
                })
                .collect()
        };
        let mut b = GraphBuilder::new(space).id(self.id.clone());
        if let Some(l) = &self.label {
            b = b.label(l.clone());
        }
        for n in &self.nodes {
            b.add_node(num(n)?);
        }
        for (i, j, a) in &self.edges {
            b.add_edge(*i, *j, num(a)?);
        }
        b.build()
    }
}

/// Table-1 style summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub graphs: usize,
    pub classes: usize,
    pub avg_nodes: f64,
    pub max_nodes: usize,
    pub avg_edges: f64,
    pub max_edges: usize,
}

impl DatasetStats {
    pub fn of(graphs: &[AttributedGraph]) -> Self {
        let n = graphs.len().max(1) as f64;
        let classes: BTreeSet<&str> = graphs.iter().filter_map(|g| g.label()).collect();
        Self {
            graphs: graphs.len(),
            classes: classes.len(),
            avg_nodes: graphs.iter().map(|g| g.order()).sum::<usize>() as f64 / n,
            max_nodes: graphs.iter().map(|g| g.order()).max().unwrap_or(0),
            avg_edges: graphs.iter().map(|g| g.edge_count()).sum::<usize>() as f64 / n,
            max_edges: graphs.iter().map(|g| g.edge_count()).max().unwrap_or(0),
        }
    }
}

impl fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "graphs {}  classes {}  avg nodes {:.1}  max nodes {}  avg edges {:.1}  max edges {}",
            self.graphs,
            self.classes,
            self.avg_nodes,
            self.max_nodes,
            self.avg_edges,
            self.max_edges
        )
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    /// Header as read from the file.
    pub header: DatasetHeader,
    pub space: AttributeSpace,
    pub graphs: Vec<AttributedGraph>,
    /// Lowercase hex SHA-256 of the file bytes.
    pub checksum: String,
}

impl Dataset {
    pub fn stats(&self) -> DatasetStats {
        DatasetStats::of(&self.graphs)
    }

    pub fn max_order(&self) -> usize {
        self.graphs
            .iter()
            .map(AttributedGraph::order)
            .max()
            .unwrap_or(0)
    }

    pub fn find(&self, id: &str) -> Result<&AttributedGraph> {
        self.graphs
            .iter()
            .find(|g| g.id() == id)
            .ok_or_else(|| Error::UnknownId(id.to_owned()))
    }
}

struct Encoder<'a> {
    specs: &'a [AttributeSpec],
    one_hot: bool,
    flag: bool,
}

impl Encoder<'_> {
    fn width(&self) -> usize {
        let base: usize = if self.one_hot {
            self.specs.iter().map(AttributeSpec::width).sum()
        } else {
            self.specs.len()
        };
        base + usize::from(self.flag)
    }

    fn encode(&self, values: &[Value], what: &str) -> std::result::Result<Vec<f64>, String> {
        if values.len() != self.specs.len() {
            return Err(format!(
                "{what} has {} values but the header declares {}",
                values.len(),
                self.specs.len()
            ));
        }
        let mut out = Vec::with_capacity(self.width());
        if self.flag {
            out.push(1.0);
        }
        for (v, spec) in values.iter().zip(self.specs) {
            match &spec.kind {
                AttributeKind::Real => out.push(v.as_f64().ok_or_else(|| {
                    format!("{what}: `{}` expects a number, found {v}", spec.name)
                })?),
                AttributeKind::Categorical { categories } => {
                    let s = v.as_str().ok_or_else(|| {
                        format!("{what}: `{}` expects a category, found {v}", spec.name)
                    })?;
                    let hit = categories.iter().position(|c| c == s).ok_or_else(|| {
                        format!("{what}: unknown category `{s}` for `{}`", spec.name)
                    })?;
                    out.extend((0..categories.len()).map(|c| if c == hit { 1.0 } else { 0.0 }));
                }
            }
        }
        Ok(out)
    }
}

/// Parses a dataset, applying each of `transforms` not already listed in
/// the header.
pub fn parse_dataset(reader: impl Read, transforms: &[Transform]) -> Result<Dataset> {
    let mut bytes = Vec::new();
    BufReader::new(reader).read_to_end(&mut bytes)?;
    let checksum = super::sha256_hex(&bytes);
    let mut lines = bytes.lines().enumerate();

    let header: DatasetHeader = loop {
        match lines.next() {
            None => {
                return Err(Error::Parse {
                    line: 1,
                    message: "missing header".into(),
                })
            }
            Some((_, l)) if l.as_ref().is_ok_and(|l| l.trim().is_empty()) => continue,
            Some((i, l)) => {
                let l = l?;
                break serde_json::from_str(&l).map_err(|e| Error::Parse {
                    line: i + 1,
                    message: format!("header: {e}"),
                })?;
            }
        }
    };
    header.check()?;

    let applied = |t: Transform| header.transforms.contains(&t);
    let wanted = |t: Transform| transforms.contains(&t) && !applied(t);
    let one_hot = wanted(Transform::OneHot);
    let categorical = header
        .node_attributes
        .iter()
        .chain(&header.edge_attributes)
        .any(|s| matches!(s.kind, AttributeKind::Categorical { .. }));
    if categorical && !one_hot {
        return Err(Error::Schema(
            "categorical attributes need the one-hot transform".into(),
        ));
    }
    let nodes = Encoder {
        specs: &header.node_attributes,
        one_hot,
        flag: false,
    };
    let edges = Encoder {
        specs: &header.edge_attributes,
        one_hot,
        flag: wanted(Transform::EdgePresenceFlag),
    };
    let space = AttributeSpace::new(nodes.width(), edges.width());
    if space.node_dim + space.edge_dim == 0 {
        return Err(Error::Schema("no node or edge attributes declared".into()));
    }

    let mut graphs = Vec::new();
    let mut ids = HashSet::new();
    for (i, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let n = i + 1;
        let parse = |message: String| Error::Parse { line: n, message };
        let record: GraphRecord = serde_json::from_str(&line).map_err(|e| parse(e.to_string()))?;
        if !ids.insert(record.id.clone()) {
            return Err(parse(format!("duplicate graph id `{}`", record.id)));
        }
        let mut b = GraphBuilder::new(space).id(record.id.clone());
        if let Some(l) = record.label {
            b = b.label(l);
        }
        for (v, attr) in record.nodes.iter().enumerate() {
            b.add_node(
                nodes
                    .encode(attr, &format!("node {v}"))
                    .map_err(|m| schema_or_parse(n, m))?,
            );
        }
        for (a, bb, attr) in &record.edges {
            let enc = edges
                .encode(attr, &format!("edge ({a}, {bb})"))
                .map_err(|m| schema_or_parse(n, m))?;
            b.add_edge(*a, *bb, enc);
        }
        graphs.push(b.build().map_err(|e| parse(e.to_string()))?);
    }
    if graphs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(Dataset {
        header,
        space,
        graphs,
        checksum,
    })
}

/// Wrong vector lengths are schema errors; wrong value types are parse
/// errors.
fn schema_or_parse(line: usize, message: String) -> Error {
    if message.contains("the header declares") {
        Error::Schema(format!("line {line}: {message}"))
    } else {
        Error::Parse { line, message }
    }
}

pub fn load_dataset(path: impl AsRef<Path>, transforms: &[Transform]) -> Result<Dataset> {
    parse_dataset(fs::File::open(path)?, transforms)
}

/// Writes encoded graphs; the header marks every transform as applied.
pub fn write_dataset(mut w: impl Write, graphs: &[AttributedGraph]) -> Result<()> {
    let first = graphs.first().ok_or(Error::EmptyDataset)?;
    let space = first.space();
    if let Some(g) = graphs.iter().find(|g| g.space() != space) {
        return Err(Error::Schema(format!(
            "graph `{}` has a different attribute space",
            g.id()
        )));
    }
    serde_json::to_writer(&mut w, &DatasetHeader::encoded(space))?;
    writeln!(w)?;
    for g in graphs {
        serde_json::to_writer(&mut w, &GraphRecord::from_graph(g))?;
        writeln!(w)?;
    }
    Ok(())
}

pub fn save_dataset(path: impl AsRef<Path>, graphs: &[AttributedGraph]) -> Result<()> {
    let mut buf = Vec::new();
    write_dataset(&mut buf, graphs)?;
    fs::write(path, buf)?;
    Ok(())
}

/// Writes a header and raw records as given.
pub fn write_raw(mut w: impl Write, header: &DatasetHeader, records: &[GraphRecord]) -> Result<()> {
    serde_json::to_writer(&mut w, header)?;
    writeln!(w)?;
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        writeln!(w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header_line(node: &str, edge: &str, transforms: &[Transform]) -> String {
        let h = DatasetHeader::new(
            serde_json::from_str(node).unwrap(),
            serde_json::from_str(edge).unwrap(),
            transforms.to_vec(),
        );
        serde_json::to_string(&h).unwrap()
    }

    #[test]
    fn hand_written_file() {
        let text = format!(
            "{}\n{}\n{}\n",
            header_line(
                r#"[{"name":"x","kind":"real"}]"#,
                r#"[{"name":"w","kind":"real"}]"#,
                &[]
            ),
            r#"{"id":"a","label":"A","nodes":[[1.0],[2.0]],"edges":[[0,1,[0.0]]]}"#,
            r#"{"id":"b","nodes":[[3.5]]}"#,
        );
        let d = parse_dataset(text.as_bytes(), &Transform::all()).unwrap();
        let s = AttributeSpace::new(1, 2);
        let a = GraphBuilder::new(s)
            .id("a")
            .label("A")
            .node([1.0])
            .node([2.0])
            .edge(0, 1, [1.0, 0.0])
            .build()
            .unwrap();
        let b = GraphBuilder::new(s).id("b").node([3.5]).build().unwrap();
        assert_eq!(d.graphs, vec![a, b]);
        assert_eq!(d.space, s);
        assert_eq!(d.stats().classes, 1);
    }

    #[test]
    fn one_hot_categories() {
        let text = format!(
            "{}\n{}\n",
            header_line(
                r#"[{"name":"atom","kind":"categorical","categories":["C","N","O"]}]"#,
                "[]",
                &[]
            ),
            r#"{"id":"m","nodes":[["N"],["O"]],"edges":[[0,1,[]]]}"#,
        );
        let d = parse_dataset(text.as_bytes(), &Transform::all()).unwrap();
        let g = &d.graphs[0];
        assert_eq!(g.node_attr(0), &[0.0, 1.0, 0.0]);
        assert_eq!(g.node_attr(1), &[0.0, 0.0, 1.0]);
        assert_eq!(g.edge_attr(0, 1).unwrap(), &[1.0]);

        let err = parse_dataset(text.as_bytes(), &[Transform::EdgePresenceFlag]).unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
    }

    #[test]
    fn applied_transforms_are_not_repeated() {
        let g = GraphBuilder::new(AttributeSpace::new(1, 1))
            .id("g")
            .node([1.0])
            .node([0.0])
            .edge(0, 1, [1.0])
            .build()
            .unwrap();
        let mut buf = Vec::new();
        write_dataset(&mut buf, std::slice::from_ref(&g)).unwrap();
        let d = parse_dataset(buf.as_slice(), &Transform::all()).unwrap();
        assert_eq!(d.graphs, vec![g]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let h = header_line(r#"[{"name":"x","kind":"real"}]"#, "[]", &[]);
        let bad_json = format!("{h}\n{}\nnot json\n", r#"{"id":"a","nodes":[[1]]}"#);
        assert!(matches!(
            parse_dataset(bad_json.as_bytes(), &Transform::all()),
            Err(Error::Parse { line: 3, .. })
        ));
        let bad_dim = format!("{h}\n{}\n", r#"{"id":"a","nodes":[[1,2]]}"#);
        assert!(matches!(
            parse_dataset(bad_dim.as_bytes(), &Transform::all()),
            Err(Error::Schema(_))
        ));
        let bad_edge = format!(
            "{h}\n{}\n",
            r#"{"id":"a","nodes":[[1]],"edges":[[0,4,[]]]}"#
        );
        assert!(matches!(
            parse_dataset(bad_edge.as_bytes(), &Transform::all()),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_dataset(format!("{h}\n").as_bytes(), &Transform::all()),
            Err(Error::EmptyDataset)
        ));
        let tampered = h.replace("\"transforms\":[]", "\"transforms\":[\"one-hot\"]");
        assert!(matches!(
            parse_dataset(format!("{tampered}\n").as_bytes(), &Transform::all()),
            Err(Error::Schema(_))
        ));
    }
}
