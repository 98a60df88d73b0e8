//! Minimal XES support: `log` / `trace` / `event` with typed attribute
//! elements. Extensions, globals, classifiers, and nested or list
//! attributes are skipped.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use chrono::{DateTime, SecondsFormat, Utc};
use quick_xml::events::{BytesDecl, BytesEnd, BytesStart, Event as XmlEvent};
use quick_xml::{Reader, Writer};

use super::{to_millis, Attributes, Case, Event, EventLog, Scalar};
use crate::error::{Error, Result};

const NAME_KEY: &str = "concept:name";
const TIME_KEY: &str = "time:timestamp";
const RESOURCE_KEY: &str = "org:resource";

pub fn parse_xes(path: impl AsRef<Path>) -> Result<EventLog> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_xes_reader(BufReader::new(file))
}

enum Frame {
    Log,
    Trace,
    Event,
    Skip,
}

#[derive(Default)]
struct TraceBuilder {
    attributes: Attributes,
    events: Vec<Attributes>,
}

fn xml_err(e: impl std::fmt::Display) -> Error {
    Error::Xml(e.to_string())
}

fn read_attribute(e: &BytesStart<'_>, trace_index: usize) -> Result<Option<(String, Scalar)>> {
    let kind = e.name().as_ref().to_vec();
    let kind = std::str::from_utf8(&kind).map_err(xml_err)?;
    if !matches!(kind, "string" | "date" | "int" | "float" | "boolean" | "id") {
        return Ok(None);
    }
    let mut key = None;
    let mut value = None;
    for attr in e.attributes() {
        let attr = attr.map_err(xml_err)?;
        let text = attr.unescape_value().map_err(xml_err)?.into_owned();
        match attr.key.as_ref() {
            b"key" => key = Some(text),
            b"value" => value = Some(text),
            _ => {}
        }
    }
    let (Some(key), Some(value)) = (key, value) else {
        return Err(Error::Xml(format!(
            "trace {trace_index}: <{kind}> element needs key and value"
        )));
    };
    let bad = |what: &str| Error::Xml(format!("trace {trace_index}: attribute {key:?}: invalid {what} {value:?}"));
    let scalar = match kind {
        "date" => Scalar::Timestamp(to_millis(
            DateTime::parse_from_rfc3339(value.trim())
                .map_err(|_| bad("date"))?
                .with_timezone(&Utc),
        )),
        "int" => Scalar::Int(value.trim().parse().map_err(|_| bad("int"))?),
        "float" => Scalar::Float(value.trim().parse().map_err(|_| bad("float"))?),
        "boolean" => Scalar::Bool(value.trim().parse().map_err(|_| bad("boolean"))?),
        _ => Scalar::String(value.clone()),
    };
    Ok(Some((key, scalar)))
}

pub fn parse_xes_reader<R: BufRead>(reader: R) -> Result<EventLog> {
    let mut reader = Reader::from_reader(reader);
    reader.config_mut().trim_text(true);
    let mut buf = Vec::new();
    let mut stack: Vec<Frame> = Vec::new();
    let mut traces: Vec<TraceBuilder> = Vec::new();
    let mut current: Option<TraceBuilder> = None;
    let mut event: Option<Attributes> = None;

    loop {
        let xml = reader.read_event_into(&mut buf).map_err(xml_err)?;
        let (start, is_empty) = match &xml {
            XmlEvent::Start(e) => (Some(e.clone().into_owned()), false),
            XmlEvent::Empty(e) => (Some(e.clone().into_owned()), true),
            XmlEvent::End(_) => {
                match stack.pop() {
                    Some(Frame::Event) => {
                        let attrs = event.take().expect("event frame");
                        current.as_mut().expect("trace frame").events.push(attrs);
                    }
                    Some(Frame::Trace) => traces.push(current.take().expect("trace frame")),
                    Some(_) => {}
                    None => return Err(Error::Xml("unbalanced end tag".into())),
                }
                (None, false)
            }
            XmlEvent::Eof => break,
            _ => (None, false),
        };
        buf.clear();
        let Some(e) = start else { continue };

        let name = e.name().as_ref().to_vec();
        let frame = match (stack.last(), name.as_slice()) {
            (None, b"log") => Frame::Log,
            (None, _) => return Err(Error::Xml("root element must be <log>".into())),
            (Some(Frame::Log), b"trace") => {
                current = Some(TraceBuilder::default());
                Frame::Trace
            }
            (Some(Frame::Trace), b"event") => {
                event = Some(Attributes::new());
                Frame::Event
            }
            (Some(Frame::Trace), _) => {
                if let Some((k, v)) = read_attribute(&e, traces.len())? {
                    current.as_mut().unwrap().attributes.insert(k, v);
                }
                Frame::Skip
            }
            (Some(Frame::Event), _) => {
                if let Some((k, v)) = read_attribute(&e, traces.len())? {
                    event.as_mut().unwrap().insert(k, v);
                }
                Frame::Skip
            }
            _ => Frame::Skip,
        };
        if is_empty {
            // self-closing <trace/> or <event/> still has to be finalized
            match frame {
                Frame::Trace => traces.push(current.take().unwrap()),
                Frame::Event => {
                    let attrs = event.take().unwrap();
                    current.as_mut().unwrap().events.push(attrs);
                }
                _ => {}
            }
        } else {
            stack.push(frame);
        }
    }
    if !stack.is_empty() {
        return Err(Error::Xml("unexpected end of document".into()));
    }

    let mut cases = Vec::with_capacity(traces.len());
    for (case_index, mut trace) in traces.into_iter().enumerate() {
        let missing = |key: &str| Error::MissingKey {
            case_index,
            key: key.to_owned(),
        };
        let case_id = match trace.attributes.remove(NAME_KEY) {
            Some(v) => v.to_string(),
            None => return Err(missing(NAME_KEY)),
        };
        if trace.events.is_empty() {
            log::warn!("trace {case_index} ({case_id:?}) has no events, skipped");
            continue;
        }
        let mut events = Vec::with_capacity(trace.events.len());
        for mut attrs in trace.events {
            let activity = attrs.remove(NAME_KEY).ok_or_else(|| missing(NAME_KEY))?;
            let timestamp = match attrs.remove(TIME_KEY) {
                Some(Scalar::Timestamp(ts)) => ts,
                Some(other) => {
                    return Err(Error::Xml(format!(
                        "trace {case_index}: {TIME_KEY} must be a date, found {other}"
                    )))
                }
                None => return Err(missing(TIME_KEY)),
            };
            let mut ev = Event::new(case_id.clone(), activity.to_string(), timestamp);
            ev.resource = attrs.remove(RESOURCE_KEY).map(|r| r.to_string());
            ev.attributes = attrs;
            events.push(ev);
        }
        cases.push(Case::new(case_id, events, trace.attributes)?);
    }
    if cases.is_empty() {
        return Err(Error::EmptyLog);
    }
    EventLog::new(cases)
}

fn attribute_element(key: &str, value: &Scalar) -> BytesStart<'static> {
    let (tag, text) = match value {
        Scalar::String(s) => ("string", s.clone()),
        Scalar::Int(i) => ("int", i.to_string()),
        Scalar::Float(x) => ("float", x.to_string()),
        Scalar::Bool(b) => ("boolean", b.to_string()),
        Scalar::Timestamp(ts) => ("date", ts.to_rfc3339_opts(SecondsFormat::Millis, true)),
    };
    let mut el = BytesStart::new(tag);
    el.push_attribute(("key", key));
    el.push_attribute(("value", text.as_str()));
    el
}

pub fn write_xes<W: Write>(log: &EventLog, writer: W) -> Result<()> {
    let mut w = Writer::new_with_indent(writer, b' ', 2);
    let io = |e: std::io::Error| Error::Xml(e.to_string());
    w.write_event(XmlEvent::Decl(BytesDecl::new("1.0", Some("UTF-8"), None)))
        .map_err(io)?;
    let mut root = BytesStart::new("log");
    root.push_attribute(("xes.version", "1.0"));
    w.write_event(XmlEvent::Start(root)).map_err(io)?;
    for case in log.cases() {
        w.write_event(XmlEvent::Start(BytesStart::new("trace")))
            .map_err(io)?;
        w.write_event(XmlEvent::Empty(attribute_element(
            NAME_KEY,
            &Scalar::String(case.case_id().to_owned()),
        )))
        .map_err(io)?;
        for (k, v) in case.case_attributes() {
            w.write_event(XmlEvent::Empty(attribute_element(k, v)))
                .map_err(io)?;
        }
        for e in case.events() {
            w.write_event(XmlEvent::Start(BytesStart::new("event")))
                .map_err(io)?;
            let mut core = vec![
                (NAME_KEY, Scalar::String(e.activity.clone())),
                (TIME_KEY, Scalar::Timestamp(e.timestamp)),
            ];
            if let Some(r) = &e.resource {
                core.push((RESOURCE_KEY, Scalar::String(r.clone())));
            }
            for (k, v) in core.iter().map(|(k, v)| (*k, v)).chain(e.attributes.iter().map(|(k, v)| (k.as_str(), v))) {
                w.write_event(XmlEvent::Empty(attribute_element(k, v)))
                    .map_err(io)?;
            }
            w.write_event(XmlEvent::End(BytesEnd::new("event")))
                .map_err(io)?;
        }
        w.write_event(XmlEvent::End(BytesEnd::new("trace")))
            .map_err(io)?;
    }
    w.write_event(XmlEvent::End(BytesEnd::new("log"))).map_err(io)?;
    Ok(())
}
