//! Deterministic subgraph exports: edge-list CSV, a JSON graph document,
//! and GraphML. Node order is id order, edge order is (source, target,
//! kind), series keys are numeric page-id order, so exporting the same
//! subgraph twice yields identical bytes.

use std::borrow::Cow;
use std::io::{self, BufRead, Write};

use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use super::{Provenance, Subgraph};
use crate::types::{Edge, EdgeKind, PageId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    EdgeListCsv,
    JsonGraph,
    GraphMl,
}

impl ExportFormat {
    pub fn from_name(name: &str) -> Option<ExportFormat> {
        match name {
            "csv" | "edge-list" => Some(ExportFormat::EdgeListCsv),
            "json" => Some(ExportFormat::JsonGraph),
            "graphml" => Some(ExportFormat::GraphMl),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ExportFormat::EdgeListCsv => "csv",
            ExportFormat::JsonGraph => "json",
            ExportFormat::GraphMl => "graphml",
        }
    }
}

#[derive(Debug, Error)]
pub enum ExportError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("edge list line {line}: {reason}")]
    BadRow { line: usize, reason: String },
}

/// Writes `sub` to `w` in the requested format.
pub fn export(sub: &Subgraph, format: ExportFormat, w: &mut impl Write) -> Result<(), ExportError> {
    match format {
        ExportFormat::EdgeListCsv => write_edge_list_csv(sub, w).map_err(ExportError::Io),
        ExportFormat::JsonGraph => write_json_graph(sub, w),
        ExportFormat::GraphMl => write_graphml(sub, w).map_err(ExportError::Io),
    }
}

const EDGE_LIST_HEADER: &str = "source_id,target_id,kind";

fn write_edge_list_csv(sub: &Subgraph, w: &mut impl Write) -> io::Result<()> {
    writeln!(w, "{EDGE_LIST_HEADER}")?;
    for edge in &sub.edges {
        writeln!(w, "{},{},{}", edge.source, edge.target, edge.kind)?;
    }
    Ok(())
}

/// Reads an edge list produced by the CSV export back into edges.
pub fn parse_edge_list_csv(r: impl BufRead) -> Result<Vec<Edge>, ExportError> {
    let mut edges = Vec::new();
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        let row = line.trim_end_matches('\r');
        if idx == 0 {
            if row != EDGE_LIST_HEADER {
                return Err(ExportError::BadRow {
                    line: 1,
                    reason: format!("expected header `{EDGE_LIST_HEADER}`, got `{row}`"),
                });
            }
            continue;
        }
        if row.is_empty() {
            continue;
        }
        let bad = |reason: &str| ExportError::BadRow {
            line: idx + 1,
            reason: reason.to_string(),
        };
        let mut fields = row.split(',');
        let source = fields
            .next()
            .and_then(|f| f.parse::<u64>().ok())
            .ok_or_else(|| bad("source_id is not an integer"))?;
        let target = fields
            .next()
            .and_then(|f| f.parse::<u64>().ok())
            .ok_or_else(|| bad("target_id is not an integer"))?;
        let kind = fields
            .next()
            .and_then(EdgeKind::from_str_opt)
            .ok_or_else(|| bad("kind is not links_to or belongs_to"))?;
        if fields.next().is_some() {
            return Err(bad("too many fields"));
        }
        edges.push(Edge::new(PageId(source), PageId(target), kind));
    }
    Ok(edges)
}

#[derive(Serialize)]
struct JsonNode<'a> {
    id: u64,
    title: Cow<'a, str>,
    kind: &'static str,
}

#[derive(Serialize)]
struct JsonGraph<'a> {
    nodes: Vec<JsonNode<'a>>,
    edges: Vec<(u64, u64, &'static str)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    series: Option<serde_json::Map<String, serde_json::Value>>,
    provenance: &'a Provenance,
}

fn write_json_graph(sub: &Subgraph, w: &mut impl Write) -> Result<(), ExportError> {
    let nodes = sub
        .nodes
        .iter()
        .map(|n| JsonNode {
            id: n.id.0,
            title: n.title.to_display(),
            kind: n.kind.as_str(),
        })
        .collect();
    let edges = sub
        .edges
        .iter()
        .map(|e| (e.source.0, e.target.0, e.kind.as_str()))
        .collect();
    // BTreeMap iteration gives numeric key order; the Map keeps it
    let series = sub.series.as_ref().map(|series| {
        series
            .iter()
            .map(|(page, points)| {
                let values: Vec<_> = points
                    .iter()
                    .map(|(hour, count)| json!([hour.timestamp(), count]))
                    .collect();
                (page.to_string(), serde_json::Value::Array(values))
            })
            .collect()
    });
    let doc = JsonGraph { nodes, edges, series, provenance: &sub.provenance };
    serde_json::to_writer_pretty(&mut *w, &doc)?;
    writeln!(w)?;
    Ok(())
}

fn xml_escape(text: &str) -> Cow<'_, str> {
    if !text.contains(['&', '<', '>', '"', '\'']) {
        return Cow::Borrowed(text);
    }
    let mut out = String::with_capacity(text.len() + 8);
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    Cow::Owned(out)
}

fn write_graphml(sub: &Subgraph, w: &mut impl Write) -> io::Result<()> {
    writeln!(w, r#"<?xml version="1.0" encoding="UTF-8"?>"#)?;
    writeln!(
        w,
        r#"<graphml xmlns="http://graphml.graphdrawing.org/xmlns">"#
    )?;
    writeln!(
        w,
        r#"  <key id="v_title" for="node" attr.name="title" attr.type="string"/>"#
    )?;
    writeln!(
        w,
        r#"  <key id="v_kind" for="node" attr.name="kind" attr.type="string"/>"#
    )?;
    writeln!(
        w,
        r#"  <key id="e_kind" for="edge" attr.name="kind" attr.type="string"/>"#
    )?;
    writeln!(w, r#"  <graph id="G" edgedefault="directed">"#)?;
    for node in &sub.nodes {
        writeln!(
            w,
            r#"    <node id="n{}"><data key="v_title">{}</data><data key="v_kind">{}</data></node>"#,
            node.id,
            xml_escape(&node.title.to_display()),
            node.kind
        )?;
    }
    for edge in &sub.edges {
        writeln!(
            w,
            r#"    <edge source="n{}" target="n{}"><data key="e_kind">{}</data></edge>"#,
            edge.source, edge.target, edge.kind
        )?;
    }
    writeln!(w, "  </graph>")?;
    writeln!(w, "</graphml>")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use crate::query::{DepthSpec, QueryEngine};
    use crate::types::Node;
    use chrono::{TimeZone, Utc};
    use std::collections::BTreeMap;

    fn sample() -> Subgraph {
        let nodes = vec![
            Node::article(1, "Alpha"),
            Node::article(2, "Beta <&> \"quoted\""),
            Node::category(10, "Things"),
        ];
        let edges = vec![
            Edge::links_to(1, 2),
            Edge::belongs_to(1, 10),
            Edge::belongs_to(2, 10),
        ];
        let graph = build_graph(nodes, &edges, "t").unwrap();
        QueryEngine::new(&graph)
            .category_closure(PageId(10), DepthSpec::Bounded(0))
            .unwrap()
    }

    fn render(sub: &Subgraph, format: ExportFormat) -> Vec<u8> {
        let mut buf = Vec::new();
        export(sub, format, &mut buf).unwrap();
        buf
    }

    #[test]
    fn csv_round_trips() {
        let sub = sample();
        let bytes = render(&sub, ExportFormat::EdgeListCsv);
        let parsed = parse_edge_list_csv(&bytes[..]).unwrap();
        assert_eq!(parsed, sub.edges);
    }

    #[test]
    fn csv_rejects_bad_rows() {
        let err = parse_edge_list_csv(&b"source_id,target_id,kind\n1,x,links_to\n"[..])
            .unwrap_err();
        assert!(matches!(err, ExportError::BadRow { line: 2, .. }));
        let err = parse_edge_list_csv(&b"wrong,header\n"[..]).unwrap_err();
        assert!(matches!(err, ExportError::BadRow { line: 1, .. }));
    }

    #[test]
    fn exports_are_deterministic() {
        let sub = sample();
        for format in [
            ExportFormat::EdgeListCsv,
            ExportFormat::JsonGraph,
            ExportFormat::GraphMl,
        ] {
            assert_eq!(render(&sub, format), render(&sub, format), "{format:?}");
        }
    }

    #[test]
    fn json_embeds_series_in_numeric_key_order() {
        let mut sub = sample();
        let hour = Utc.with_ymd_and_hms(2018, 8, 1, 6, 0, 0).unwrap();
        let mut series = BTreeMap::new();
        series.insert(PageId(2), vec![(hour, 7u32)]);
        series.insert(PageId(10), vec![]);
        sub.series = Some(series);
        let text = String::from_utf8(render(&sub, ExportFormat::JsonGraph)).unwrap();
        let two = text.find("\"2\"").unwrap();
        let ten = text.find("\"10\"").unwrap();
        assert!(two < ten, "series keys must be in numeric order");
        assert!(text.contains(&hour.timestamp().to_string()));
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["series"]["2"][0][1], 7);
        assert_eq!(value["provenance"]["snapshot"]["label"], "t");
    }

    #[test]
    fn json_omits_series_when_absent() {
        let sub = sample();
        let value: serde_json::Value =
            serde_json::from_slice(&render(&sub, ExportFormat::JsonGraph)).unwrap();
        assert!(value.get("series").is_none());
        assert_eq!(value["nodes"].as_array().unwrap().len(), 3);
        assert_eq!(value["edges"][0][2], "links_to");
    }

    #[test]
    fn graphml_escapes_titles() {
        let sub = sample();
        let text = String::from_utf8(render(&sub, ExportFormat::GraphMl)).unwrap();
        assert!(text.contains("Beta &lt;&amp;&gt; &quot;quoted&quot;"));
        assert!(text.contains(r#"<edge source="n1" target="n2"><data key="e_kind">links_to</data></edge>"#));
        assert!(!text.contains('\u{0}'));
    }

    #[test]
    fn empty_subgraph_exports_cleanly() {
        let graph = build_graph(
            vec![Node::category(10, "Empty")],
            &[],
            "e",
        )
        .unwrap();
        let sub = QueryEngine::new(&graph)
            .category_closure(PageId(10), DepthSpec::Bounded(0))
            .unwrap();
        let csv = render(&sub, ExportFormat::EdgeListCsv);
        assert_eq!(csv, b"source_id,target_id,kind\n");
        assert!(parse_edge_list_csv(&csv[..]).unwrap().is_empty());
        let value: serde_json::Value =
            serde_json::from_slice(&render(&sub, ExportFormat::JsonGraph)).unwrap();
        assert_eq!(value["edges"].as_array().unwrap().len(), 0);
        let xml = String::from_utf8(render(&sub, ExportFormat::GraphMl)).unwrap();
        assert!(xml.contains("<graphml"));
        assert!(xml.contains("</graphml>"));
    }

    #[test]
    fn format_names_round_trip() {
        for format in [
            ExportFormat::EdgeListCsv,
            ExportFormat::JsonGraph,
            ExportFormat::GraphMl,
        ] {
            assert_eq!(ExportFormat::from_name(format.as_str()), Some(format));
        }
        assert_eq!(ExportFormat::from_name("yaml"), None);
    }
}
