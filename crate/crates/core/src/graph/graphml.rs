//! GraphML encoding.
//!
//! Attribute and context maps are flattened into a single `data` element
//! holding one `key=value;value` line per key. Inside keys and values the
//! characters `\`, `;`, `=` and control characters are backslash escaped
//! (`\\`, `\;`, `\=`, `\u{XXXX}`), so flattening is reversible. Node and
//! edge ids in XML attributes use the same escaping for `\` and control
//! characters. Provenance lists are stored as JSON text.

use std::collections::BTreeMap;
use std::io::{self, Write};

use quick_xml::escape::escape;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use quick_xml::XmlVersion;

use super::{ContextMap, Edge, EdgeId, GraphError, KnowledgeGraph, Node, Provenance};
use crate::scalar::Scalar;

const NAMESPACE: &str = "http://graphml.graphdrawing.org/xmlns";

const KEYS: [(&str, &str, &str); 6] = [
    ("attributes", "node", "string"),
    ("predicate", "edge", "string"),
    ("context", "edge", "string"),
    ("confidence", "edge", "double"),
    ("inferred", "edge", "boolean"),
    ("provenance", "edge", "string"),
];

fn escape_field(raw: &str, specials: &[char]) -> String {
    let mut out = String::with_capacity(raw.len());
    for c in raw.chars() {
        if c == '\\' || specials.contains(&c) {
            out.push('\\');
            out.push(c);
        } else if c.is_control() {
            out.push_str(&format!("\\u{{{:04x}}}", c as u32));
        } else {
            out.push(c);
        }
    }
    out
}

fn unescape_field(raw: &str) -> Result<String, String> {
    let mut out = String::with_capacity(raw.len());
    let mut chars = raw.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('u') => {
                if chars.next() != Some('{') {
                    return Err(format!("bad unicode escape in `{raw}`"));
                }
                let hex: String = chars.by_ref().take_while(|&c| c != '}').collect();
                let ch = u32::from_str_radix(&hex, 16)
                    .ok()
                    .and_then(char::from_u32)
                    .ok_or_else(|| format!("bad unicode escape in `{raw}`"))?;
                out.push(ch);
            }
            Some(other) => out.push(other),
            None => return Err(format!("dangling escape in `{raw}`")),
        }
    }
    Ok(out)
}

/// Splits on `sep` where it is not preceded by an escaping backslash.
fn split_unescaped(raw: &str, sep: char) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut start = 0;
    let mut escaped = false;
    for (i, c) in raw.char_indices() {
        if escaped {
            escaped = false;
        } else if c == '\\' {
            escaped = true;
        } else if c == sep {
            parts.push(&raw[start..i]);
            start = i + c.len_utf8();
        }
    }
    parts.push(&raw[start..]);
    parts
}

fn flatten(map: &ContextMap) -> String {
    let specials = [';', '='];
    map.iter()
        .map(|(key, values)| {
            let values: Vec<String> = values.iter().map(|v| escape_field(v, &specials)).collect();
            format!("{}={}", escape_field(key, &specials), values.join(";"))
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn unflatten(text: &str) -> Result<ContextMap, String> {
    let mut entries: BTreeMap<String, std::collections::BTreeSet<String>> = BTreeMap::new();
    for line in text.split('\n').filter(|l| !l.is_empty()) {
        let (key, values) = match split_unescaped(line, '=').as_slice() {
            [key, values] => (unescape_field(key)?, *values),
            _ => return Err(format!("expected `key=value;value`, found `{line}`")),
        };
        let set = entries.entry(key).or_default();
        for value in split_unescaped(values, ';') {
            set.insert(unescape_field(value)?);
        }
    }
    ContextMap::try_from(entries).map_err(|e| e.to_string())
}

fn escape_id(raw: &str) -> String {
    escape(escape_field(raw, &[])).into_owned()
}

pub(super) fn write<S: Scalar, W: Write>(g: &KnowledgeGraph<S>, mut w: W) -> io::Result<()> {
    writeln!(w, r#"<?xml version="1.0" encoding="UTF-8"?>"#)?;
    writeln!(w, r#"<graphml xmlns="{NAMESPACE}">"#)?;
    for (id, domain, ty) in KEYS {
        writeln!(
            w,
            r#"  <key id="{id}" for="{domain}" attr.name="{id}" attr.type="{ty}"/>"#
        )?;
    }
    writeln!(w, r#"  <graph id="G" edgedefault="directed">"#)?;
    for node in g.nodes() {
        if node.attributes.is_empty() {
            writeln!(w, r#"    <node id="{}"/>"#, escape_id(&node.id))?;
        } else {
            writeln!(w, r#"    <node id="{}">"#, escape_id(&node.id))?;
            write_data(&mut w, "attributes", &flatten(&node.attributes))?;
            writeln!(w, "    </node>")?;
        }
    }
    for edge in g.edges() {
        writeln!(
            w,
            r#"    <edge id="{}" source="{}" target="{}">"#,
            escape_id(edge.id.as_str()),
            escape_id(&edge.source),
            escape_id(&edge.target)
        )?;
        write_data(&mut w, "predicate", &escape_field(&edge.predicate, &[]))?;
        if !edge.context.is_empty() {
            write_data(&mut w, "context", &flatten(&edge.context))?;
        }
        write_data(&mut w, "confidence", &edge.confidence.to_string())?;
        write_data(&mut w, "inferred", if edge.inferred { "true" } else { "false" })?;
        if !edge.provenance.is_empty() {
            let json = serde_json::to_string(&edge.provenance).map_err(io::Error::from)?;
            write_data(&mut w, "provenance", &escape_field(&json, &[]))?;
        }
        writeln!(w, "    </edge>")?;
    }
    writeln!(w, "  </graph>")?;
    writeln!(w, "</graphml>")
}

fn write_data<W: Write>(w: &mut W, key: &str, text: &str) -> io::Result<()> {
    writeln!(w, r#"      <data key="{key}">{}</data>"#, escape(text))
}

#[derive(Default)]
struct PendingEdge {
    id: String,
    source: String,
    target: String,
    data: BTreeMap<String, String>,
}

enum Owner {
    None,
    Node(String, BTreeMap<String, String>),
    Edge(PendingEdge),
}

pub(super) fn read<S: Scalar>(bytes: &[u8]) -> Result<KnowledgeGraph<S>, GraphError> {
    let text = std::str::from_utf8(bytes).map_err(|e| GraphError::Parse {
        offset: e.valid_up_to(),
        reason: "input is not valid UTF-8".into(),
    })?;
    let mut reader = Reader::from_str(text);
    reader.config_mut().trim_text(false);

    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let mut owner = Owner::None;
    let mut data_key: Option<String> = None;
    let mut data_text = String::new();

    loop {
        let at = reader.buffer_position() as usize;
        let parse_err = |reason: String| GraphError::Parse { offset: at, reason };
        let event = reader.read_event().map_err(|e| GraphError::Parse {
            offset: reader.error_position() as usize,
            reason: e.to_string(),
        })?;
        match event {
            Event::Start(ref e) | Event::Empty(ref e) => {
                let empty = matches!(event, Event::Empty(_));
                match e.local_name().as_ref() {
                    "node" => {
                        let id = required_attr(e, "id").map_err(parse_err)?;
                        if empty {
                            nodes.push(Node::new(id));
                        } else {
                            owner = Owner::Node(id, BTreeMap::new());
                        }
                    }
                    "edge" => {
                        let pending = PendingEdge {
                            id: required_attr(e, "id").map_err(parse_err)?,
                            source: required_attr(e, "source").map_err(parse_err)?,
                            target: required_attr(e, "target").map_err(parse_err)?,
                            data: BTreeMap::new(),
                        };
                        if empty {
                            edges.push(finish_edge(pending).map_err(parse_err)?);
                        } else {
                            owner = Owner::Edge(pending);
                        }
                    }
                    "data" if !empty => {
                        data_key = Some(required_attr(e, "key").map_err(parse_err)?);
                        data_text.clear();
                    }
                    _ => {}
                }
            }
            Event::Text(t) if data_key.is_some() => data_text.push_str(&t.xml10_content()),
            Event::CData(t) if data_key.is_some() => {
                data_text.push_str(&t.into_inner())
            }
            Event::GeneralRef(r) if data_key.is_some() => {
                let resolved = match r.resolve_char_ref() {
                    Ok(Some(c)) => c,
                    Ok(None) => match &*r.xml10_content() {
                        "amp" => '&',
                        "lt" => '<',
                        "gt" => '>',
                        "quot" => '"',
                        "apos" => '\'',
                        other => return Err(parse_err(format!("unknown entity `&{other};`"))),
                    },
                    Err(e) => return Err(parse_err(e.to_string())),
                };
                data_text.push(resolved);
            }
            Event::End(ref e) => match e.local_name().as_ref() {
                "data" => {
                    if let Some(key) = data_key.take() {
                        let value = std::mem::take(&mut data_text);
                        match &mut owner {
                            Owner::Node(_, data) => {
                                data.insert(key, value);
                            }
                            Owner::Edge(pending) => {
                                pending.data.insert(key, value);
                            }
                            Owner::None => {}
                        }
                    }
                }
                "node" => {
                    if let Owner::Node(id, data) = std::mem::replace(&mut owner, Owner::None) {
                        let mut node = Node::new(id);
                        if let Some(text) = data.get("attributes") {
                            node.attributes = unflatten(text).map_err(parse_err)?;
                        }
                        nodes.push(node);
                    }
                }
                "edge" => {
                    if let Owner::Edge(pending) = std::mem::replace(&mut owner, Owner::None) {
                        edges.push(finish_edge(pending).map_err(parse_err)?);
                    }
                }
                _ => {}
            },
            Event::Eof => break,
            _ => {}
        }
    }
    Ok(KnowledgeGraph::from_parts(nodes, edges)?)
}

fn required_attr(e: &BytesStart<'_>, name: &str) -> Result<String, String> {
    let attr = e
        .try_get_attribute(name)
        .map_err(|err| err.to_string())?
        .ok_or_else(|| format!("missing `{name}` attribute"))?;
    let value = attr
        .normalized_value(XmlVersion::Implicit1_0)
        .map_err(|err| err.to_string())?;
    unescape_field(&value)
}

fn finish_edge<S: Scalar>(pending: PendingEdge) -> Result<Edge<S>, String> {
    let field = |key: &str| {
        pending
            .data
            .get(key)
            .ok_or_else(|| format!("edge {} has no `{key}` data", pending.id))
    };
    let predicate = unescape_field(field("predicate")?)?;
    let confidence = field("confidence")?
        .parse::<S>()
        .map_err(|_| format!("edge {} has a non-numeric confidence", pending.id))?;
    let inferred = match pending.data.get("inferred").map(String::as_str) {
        None | Some("false") => false,
        Some("true") => true,
        Some(other) => return Err(format!("invalid boolean `{other}`")),
    };
    let context = match pending.data.get("context") {
        Some(text) => unflatten(text)?,
        None => ContextMap::new(),
    };
    let provenance: Vec<Provenance> = match pending.data.get("provenance") {
        Some(text) => serde_json::from_str(&unescape_field(text)?).map_err(|e| e.to_string())?,
        None => Vec::new(),
    };
    Ok(Edge {
        id: EdgeId::from(pending.id.as_str()),
        source: pending.source,
        target: pending.target,
        predicate,
        context,
        confidence,
        inferred,
        provenance,
    })
}
