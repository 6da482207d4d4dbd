//! Readers and writers for the document, citation, and PPP files.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde_json::{Map, Value};

use super::{
    cpc_from_letters, cpc_to_letters, CitationLink, CitationLocation, CorpusError, DocKind,
    Document, PppRecord, Result,
};

const DOCUMENT_COLUMNS: [&str; 11] = [
    "id",
    "kind",
    "title",
    "abstract",
    "lang",
    "pub_date",
    "filing_year",
    "authority",
    "family_id",
    "application_id",
    "cpc_sections",
];
const CITATION_COLUMNS: [&str; 5] = [
    "patent_id",
    "paper_id",
    "confidence",
    "location",
    "self_citation",
];
const PPP_COLUMNS: [&str; 3] = ["patent_id", "paper_id", "confidence_level"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DocumentFormat {
    Jsonl,
    Tsv,
}

impl FromStr for DocumentFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "jsonl" => Ok(DocumentFormat::Jsonl),
            "tsv" => Ok(DocumentFormat::Tsv),
            other => Err(format!("unknown document format `{other}`")),
        }
    }
}

impl DocumentFormat {
    /// Guesses the format from the file extension, defaulting to JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tsv") => DocumentFormat::Tsv,
            _ => DocumentFormat::Jsonl,
        }
    }
}

fn malformed(line: usize, field: &str, reason: impl Into<String>) -> CorpusError {
    CorpusError::Malformed {
        line,
        field: field.to_string(),
        reason: reason.into(),
    }
}

/// Reads documents from `path`, rejecting malformed records and duplicate ids.
pub fn ingest_documents(path: &Path, format: DocumentFormat) -> Result<Vec<Document>> {
    let file = File::open(path)?;
    match format {
        DocumentFormat::Jsonl => read_documents_jsonl(BufReader::new(file)),
        DocumentFormat::Tsv => read_documents_tsv(file),
    }
}

fn check_unique(docs: &[Document]) -> Result<()> {
    let mut seen = HashSet::with_capacity(docs.len());
    for doc in docs {
        if !seen.insert(doc.id.as_str()) {
            return Err(CorpusError::DuplicateId(doc.id.clone()));
        }
    }
    Ok(())
}

pub fn read_documents_jsonl<R: BufRead>(reader: R) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line)
            .map_err(|e| malformed(lineno, "<record>", e.to_string()))?;
        let Value::Object(obj) = value else {
            return Err(malformed(lineno, "<record>", "expected a JSON object"));
        };
        docs.push(document_from_json(&obj, lineno)?);
    }
    check_unique(&docs)?;
    Ok(docs)
}

fn json_str<'a>(obj: &'a Map<String, Value>, key: &str, line: usize) -> Result<Option<&'a str>> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s)),
        Some(_) => Err(malformed(line, key, "expected a string")),
    }
}

fn required_str<'a>(obj: &'a Map<String, Value>, key: &str, line: usize) -> Result<&'a str> {
    json_str(obj, key, line)?.ok_or_else(|| malformed(line, key, "missing"))
}

fn document_from_json(obj: &Map<String, Value>, line: usize) -> Result<Document> {
    let id = required_str(obj, "id", line)?.to_string();
    let kind = DocKind::from_str(required_str(obj, "kind", line)?)
        .map_err(|e| malformed(line, "kind", e))?;
    let title = json_str(obj, "title", line)?
        .unwrap_or_default()
        .to_string();

    let abstract_text = match (obj.get("abstract"), obj.get("abstract_inverted_index")) {
        (Some(Value::String(s)), _) => s.clone(),
        (Some(Value::Null) | None, Some(Value::Null) | None) => String::new(),
        (Some(Value::Null) | None, Some(inv)) => {
            let map: BTreeMap<String, Vec<u32>> = serde_json::from_value(inv.clone())
                .map_err(|e| malformed(line, "abstract_inverted_index", e.to_string()))?;
            reconstruct_abstract(&map)
                .map_err(|e| malformed(line, "abstract_inverted_index", e.to_string()))?
        }
        (Some(_), _) => return Err(malformed(line, "abstract", "expected a string")),
    };

    let pub_date = parse_date(required_str(obj, "pub_date", line)?)
        .map_err(|e| malformed(line, "pub_date", e))?;
    let filing_year = match obj.get("filing_year") {
        None | Some(Value::Null) => None,
        Some(Value::Number(n)) => Some(
            n.as_i64()
                .and_then(|y| i32::try_from(y).ok())
                .ok_or_else(|| malformed(line, "filing_year", "expected an integer year"))?,
        ),
        Some(_) => return Err(malformed(line, "filing_year", "expected an integer year")),
    };
    let cpc_sections = match obj.get("cpc_sections") {
        None | Some(Value::Null) => Default::default(),
        Some(Value::Array(items)) => {
            let mut letters = String::new();
            for item in items {
                match item.as_str() {
                    Some(s) if s.chars().count() == 1 => letters.push_str(s),
                    _ => {
                        return Err(malformed(
                            line,
                            "cpc_sections",
                            "expected single-letter strings",
                        ))
                    }
                }
            }
            cpc_from_letters(&letters).map_err(|e| malformed(line, "cpc_sections", e))?
        }
        Some(_) => return Err(malformed(line, "cpc_sections", "expected an array")),
    };

    let doc = Document {
        id,
        kind,
        title,
        abstract_text,
        lang: json_str(obj, "lang", line)?.map(str::to_string),
        pub_date,
        filing_year,
        authority: json_str(obj, "authority", line)?.map(str::to_string),
        family_id: json_str(obj, "family_id", line)?.map(str::to_string),
        application_id: json_str(obj, "application_id", line)?.map(str::to_string),
        cpc_sections,
    };
    doc.validate()
        .map_err(|(field, reason)| malformed(line, field, reason))?;
    Ok(doc)
}

fn parse_date(s: &str) -> std::result::Result<NaiveDate, String> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map_err(|e| format!("`{s}` is not a YYYY-MM-DD date: {e}"))
}

fn tsv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .has_headers(true)
        .flexible(false)
        .from_reader(reader)
}

fn tsv_writer<W: Write>(writer: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .delimiter(b'\t')
        .from_writer(writer)
}

/// Validates the header and returns the column position of every expected name.
fn header_positions<R: Read>(
    rdr: &mut csv::Reader<R>,
    expected: &[&'static str],
) -> Result<Vec<usize>> {
    let found: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    expected
        .iter()
        .map(|name| found.iter().position(|h| h == name))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| CorpusError::Header {
            expected: expected.to_vec(),
            found,
        })
}

fn record_line(rec: &csv::StringRecord) -> usize {
    rec.position().map_or(0, |p| p.line() as usize)
}

fn opt_field(s: &str) -> Option<String> {
    if s.is_empty() {
        None
    } else {
        Some(s.to_string())
    }
}

pub fn read_documents_tsv<R: Read>(reader: R) -> Result<Vec<Document>> {
    let mut rdr = tsv_reader(reader);
    let cols = header_positions(&mut rdr, &DOCUMENT_COLUMNS)?;
    let mut docs = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = record_line(&rec);
        let get = |i: usize| rec.get(cols[i]).unwrap_or("");
        let id = get(0).to_string();
        if id.is_empty() {
            return Err(malformed(line, "id", "missing"));
        }
        let kind = DocKind::from_str(get(1)).map_err(|e| malformed(line, "kind", e))?;
        if get(5).is_empty() {
            return Err(malformed(line, "pub_date", "missing"));
        }
        let pub_date = parse_date(get(5)).map_err(|e| malformed(line, "pub_date", e))?;
        let filing_year = match get(6) {
            "" => None,
            s => Some(
                s.parse::<i32>()
                    .map_err(|e| malformed(line, "filing_year", e.to_string()))?,
            ),
        };
        let doc = Document {
            id,
            kind,
            title: get(2).to_string(),
            abstract_text: get(3).to_string(),
            lang: opt_field(get(4)),
            pub_date,
            filing_year,
            authority: opt_field(get(7)),
            family_id: opt_field(get(8)),
            application_id: opt_field(get(9)),
            cpc_sections: cpc_from_letters(get(10))
                .map_err(|e| malformed(line, "cpc_sections", e))?,
        };
        doc.validate()
            .map_err(|(field, reason)| malformed(line, field, reason))?;
        docs.push(doc);
    }
    check_unique(&docs)?;
    Ok(docs)
}

/// Writes documents in the given format; the inverse of [`ingest_documents`].
pub fn write_documents<W: Write>(
    writer: W,
    docs: &[Document],
    format: DocumentFormat,
) -> Result<()> {
    match format {
        DocumentFormat::Jsonl => {
            let mut w = BufWriter::new(writer);
            for doc in docs {
                serde_json::to_writer(&mut w, doc)?;
                w.write_all(b"\n")?;
            }
            w.flush()?;
        }
        DocumentFormat::Tsv => {
            let mut w = tsv_writer(writer);
            w.write_record(DOCUMENT_COLUMNS)?;
            for d in docs {
                let date = d.pub_date.format("%Y-%m-%d").to_string();
                let filing = d.filing_year.map(|y| y.to_string()).unwrap_or_default();
                let cpc = cpc_to_letters(&d.cpc_sections);
                w.write_record([
                    d.id.as_str(),
                    d.kind.as_str(),
                    &d.title,
                    &d.abstract_text,
                    d.lang.as_deref().unwrap_or(""),
                    &date,
                    &filing,
                    d.authority.as_deref().unwrap_or(""),
                    d.family_id.as_deref().unwrap_or(""),
                    d.application_id.as_deref().unwrap_or(""),
                    &cpc,
                ])?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

/// Rebuilds abstract text from an OpenAlex-style inverted index.
///
/// Tokens are placed by position and joined with single spaces; gaps in the
/// numbering collapse.
pub fn reconstruct_abstract(inverted: &BTreeMap<String, Vec<u32>>) -> Result<String> {
    let mut placed: Vec<(u32, &str)> = inverted
        .iter()
        .flat_map(|(tok, positions)| positions.iter().map(move |&p| (p, tok.as_str())))
        .collect();
    placed.sort_unstable();
    if let Some(w) = placed.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(CorpusError::DuplicatePosition(w[0].0));
    }
    Ok(placed.iter().map(|(_, t)| *t).collect::<Vec<_>>().join(" "))
}

pub fn read_citations<R: Read>(reader: R) -> Result<Vec<CitationLink>> {
    let mut rdr = tsv_reader(reader);
    let cols = header_positions(&mut rdr, &CITATION_COLUMNS)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = record_line(&rec);
        let get = |i: usize| rec.get(cols[i]).unwrap_or("");
        let patent_id = get(0).to_string();
        let paper_id = get(1).to_string();
        if patent_id.is_empty() {
            return Err(malformed(line, "patent_id", "missing"));
        }
        if paper_id.is_empty() {
            return Err(malformed(line, "paper_id", "missing"));
        }
        if patent_id == paper_id {
            return Err(malformed(line, "paper_id", "a document cannot cite itself"));
        }
        let confidence: u8 = get(2)
            .parse()
            .ok()
            .filter(|c| (1..=10).contains(c))
            .ok_or_else(|| {
                malformed(
                    line,
                    "confidence",
                    format!("`{}` is not an integer in [1,10]", get(2)),
                )
            })?;
        let location =
            CitationLocation::from_str(get(3)).map_err(|e| malformed(line, "location", e))?;
        let self_citation = match get(4) {
            "0" => false,
            "1" => true,
            other => {
                return Err(malformed(
                    line,
                    "self_citation",
                    format!("`{other}` is not 0 or 1"),
                ))
            }
        };
        out.push(CitationLink {
            patent_id,
            paper_id,
            confidence,
            location,
            self_citation,
        });
    }
    Ok(out)
}

pub fn write_citations<W: Write>(writer: W, links: &[CitationLink]) -> Result<()> {
    let mut w = tsv_writer(writer);
    w.write_record(CITATION_COLUMNS)?;
    for c in links {
        let conf = c.confidence.to_string();
        let sc = if c.self_citation { "1" } else { "0" };
        w.write_record([
            c.patent_id.as_str(),
            &c.paper_id,
            &conf,
            c.location.as_str(),
            sc,
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_ppps<R: Read>(reader: R) -> Result<Vec<PppRecord>> {
    let mut rdr = tsv_reader(reader);
    let cols = header_positions(&mut rdr, &PPP_COLUMNS)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = record_line(&rec);
        let get = |i: usize| rec.get(cols[i]).unwrap_or("");
        if get(0).is_empty() {
            return Err(malformed(line, "patent_id", "missing"));
        }
        if get(1).is_empty() {
            return Err(malformed(line, "paper_id", "missing"));
        }
        let confidence_level: u8 = get(2)
            .parse()
            .ok()
            .filter(|c| (1..=4).contains(c))
            .ok_or_else(|| {
                malformed(
                    line,
                    "confidence_level",
                    format!("`{}` is not in 1..=4", get(2)),
                )
            })?;
        out.push(PppRecord {
            patent_id: get(0).to_string(),
            paper_id: get(1).to_string(),
            confidence_level,
        });
    }
    Ok(out)
}

pub fn write_ppps<W: Write>(writer: W, ppps: &[PppRecord]) -> Result<()> {
    let mut w = tsv_writer(writer);
    w.write_record(PPP_COLUMNS)?;
    for p in ppps {
        let level = p.confidence_level.to_string();
        w.write_record([p.patent_id.as_str(), &p.paper_id, &level])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::CpcSection;
    use proptest::prelude::*;

    fn jsonl(s: &str) -> Result<Vec<Document>> {
        read_documents_jsonl(s.as_bytes())
    }

    const THREE_PATENTS: &str = r#"{"id":"EP1","kind":"patent","title":"Widget","abstract":"A widget.","lang":"en","pub_date":"2010-03-04","filing_year":2008,"authority":"EP","family_id":"F1","application_id":"100","cpc_sections":["A","G"]}
{"id":"US2","kind":"patent","title":"Gadget","abstract":"A gadget.","lang":null,"pub_date":"2011-12-31","filing_year":2009,"authority":"US","family_id":"F1","application_id":"200","cpc_sections":[]}
{"id":"JP3","kind":"patent","title":"Gizmo","abstract":"","pub_date":"2012-01-01","authority":"JP","family_id":"F2","application_id":"A-7"}
"#;

    #[test]
    fn empty_input_yields_nothing() {
        assert!(jsonl("").unwrap().is_empty());
        let tsv = DOCUMENT_COLUMNS.join("\t") + "\n";
        assert!(read_documents_tsv(tsv.as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn three_patents_field_by_field() {
        let docs = jsonl(THREE_PATENTS).unwrap();
        assert_eq!(docs.len(), 3);
        assert!(docs.iter().all(|d| d.kind == DocKind::Patent));
        let d = &docs[0];
        assert_eq!(d.id, "EP1");
        assert_eq!(d.title, "Widget");
        assert_eq!(d.abstract_text, "A widget.");
        assert_eq!(d.lang.as_deref(), Some("en"));
        assert_eq!(d.pub_date, NaiveDate::from_ymd_opt(2010, 3, 4).unwrap());
        assert_eq!(d.filing_year, Some(2008));
        assert_eq!(d.authority.as_deref(), Some("EP"));
        assert_eq!(d.family_id.as_deref(), Some("F1"));
        assert_eq!(d.application_id.as_deref(), Some("100"));
        assert_eq!(
            d.cpc_sections.iter().copied().collect::<Vec<_>>(),
            vec![CpcSection::A, CpcSection::G]
        );
        assert_eq!(docs[1].lang, None);
        assert_eq!(
            docs[1].pub_date,
            NaiveDate::from_ymd_opt(2011, 12, 31).unwrap()
        );
        assert_eq!(docs[2].filing_year, None);
        assert!(docs[2].cpc_sections.is_empty());
        assert_eq!(docs[2].application_id.as_deref(), Some("A-7"));
    }

    #[test]
    fn missing_pub_date_reports_line() {
        let input =
            "{\"id\":\"a\",\"kind\":\"paper\",\"title\":\"t\",\"pub_date\":\"2000-01-01\"}\n\
                     {\"id\":\"b\",\"kind\":\"paper\",\"title\":\"t\"}\n";
        match jsonl(input) {
            Err(CorpusError::Malformed { line, field, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(field, "pub_date");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_date_is_rejected() {
        let input =
            "{\"id\":\"a\",\"kind\":\"paper\",\"title\":\"t\",\"pub_date\":\"2001-02-30\"}\n";
        assert!(
            matches!(jsonl(input), Err(CorpusError::Malformed { field, .. }) if field == "pub_date")
        );
    }

    #[test]
    fn duplicate_id_is_named() {
        let line =
            "{\"id\":\"dup\",\"kind\":\"paper\",\"title\":\"t\",\"pub_date\":\"2000-01-01\"}\n";
        let input = format!("{line}{line}");
        assert!(matches!(jsonl(&input), Err(CorpusError::DuplicateId(id)) if id == "dup"));
    }

    #[test]
    fn paper_with_authority_is_malformed() {
        let input = "{\"id\":\"a\",\"kind\":\"paper\",\"title\":\"t\",\"pub_date\":\"2000-01-01\",\"authority\":\"EP\"}\n";
        assert!(
            matches!(jsonl(input), Err(CorpusError::Malformed { line: 1, field, .. }) if field == "authority")
        );
    }

    #[test]
    fn inverted_abstract_is_reconstructed_on_load() {
        let input = r#"{"id":"W1","kind":"paper","title":"t","pub_date":"2000-01-01","abstract_inverted_index":{"Hello":[0],"world":[1]}}"#;
        assert_eq!(jsonl(input).unwrap()[0].abstract_text, "Hello world");
        let bad = r#"{"id":"W1","kind":"paper","title":"t","pub_date":"2000-01-01","abstract_inverted_index":{"x":[0],"y":[0]}}"#;
        assert!(
            matches!(jsonl(bad), Err(CorpusError::Malformed { field, .. }) if field == "abstract_inverted_index")
        );
    }

    #[test]
    fn reconstruct_examples() {
        let map = |pairs: &[(&str, &[u32])]| {
            pairs
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_vec()))
                .collect::<BTreeMap<_, _>>()
        };
        assert_eq!(
            reconstruct_abstract(&map(&[("Hello", &[0]), ("world", &[1])])).unwrap(),
            "Hello world"
        );
        assert_eq!(
            reconstruct_abstract(&map(&[("a", &[0, 2]), ("b", &[1])])).unwrap(),
            "a b a"
        );
        assert_eq!(
            reconstruct_abstract(&map(&[("a", &[3]), ("b", &[10])])).unwrap(),
            "a b"
        );
        assert!(matches!(
            reconstruct_abstract(&map(&[("x", &[0]), ("y", &[0])])),
            Err(CorpusError::DuplicatePosition(0))
        ));
    }

    #[test]
    fn citation_tsv() {
        let input = "patent_id\tpaper_id\tconfidence\tlocation\tself_citation\n\
                     EP1\tW1\t10\tfront_and_body\t1\n\
                     EP1\tW2\t3\tbody\t0\n";
        let links = read_citations(input.as_bytes()).unwrap();
        assert_eq!(links.len(), 2);
        assert_eq!(links[0].location, CitationLocation::FrontAndBody);
        assert!(links[0].self_citation);
        assert_eq!(links[1].confidence, 3);

        let mut buf = Vec::new();
        write_citations(&mut buf, &links).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), input);
    }

    #[test]
    fn citation_errors() {
        let head = "patent_id\tpaper_id\tconfidence\tlocation\tself_citation\n";
        let bad_conf = format!("{head}EP1\tW1\t11\tfront\t0\n");
        assert!(
            matches!(read_citations(bad_conf.as_bytes()), Err(CorpusError::Malformed { line: 2, field, .. }) if field == "confidence")
        );
        let self_ref = format!("{head}X\tX\t5\tfront\t0\n");
        assert!(read_citations(self_ref.as_bytes()).is_err());
        let no_header = "EP1\tW1\t10\tfront\t0\n";
        assert!(matches!(
            read_citations(no_header.as_bytes()),
            Err(CorpusError::Header { .. })
        ));
    }

    #[test]
    fn ppp_tsv() {
        let input = "patent_id\tpaper_id\tconfidence_level\nUS1\tW9\t4\n";
        let ppps = read_ppps(input.as_bytes()).unwrap();
        assert_eq!(ppps[0].confidence_level, 4);
        let bad = "patent_id\tpaper_id\tconfidence_level\nUS1\tW9\t5\n";
        assert!(read_ppps(bad.as_bytes()).is_err());
    }

    fn arb_text() -> impl Strategy<Value = String> {
        prop::string::string_regex("[A-Za-z0-9 ,.\"\t\n-]{0,40}").unwrap()
    }

    fn arb_document() -> impl Strategy<Value = Document> {
        (
            "[a-z]{1,6}[0-9]{1,4}",
            any::<bool>(),
            arb_text(),
            arb_text(),
            prop::option::of("[a-z]{2}"),
            (1900i32..2030, 1u32..13, 1u32..29),
            prop::option::of(1900i32..2030),
            prop::option::of("[A-Z]{2}"),
            prop::option::of("F[0-9]{1,5}"),
            prop::option::of("[0-9A-Z]{1,8}"),
            prop::collection::btree_set(prop::sample::select(CpcSection::ALL.to_vec()), 0..4),
        )
            .prop_map(
                |(id, is_patent, title, abs, lang, (y, m, d), fy, auth, fam, app, cpc)| {
                    let patent = is_patent;
                    Document {
                        id,
                        kind: if patent {
                            DocKind::Patent
                        } else {
                            DocKind::Paper
                        },
                        title,
                        abstract_text: abs,
                        lang,
                        pub_date: NaiveDate::from_ymd_opt(y, m, d).unwrap(),
                        filing_year: fy.filter(|_| patent),
                        authority: auth.filter(|_| patent),
                        family_id: fam.filter(|_| patent),
                        application_id: app,
                        cpc_sections: if patent { cpc } else { Default::default() },
                    }
                },
            )
    }

    proptest! {
        #[test]
        fn documents_round_trip(docs in prop::collection::vec(arb_document(), 0..8)) {
            let mut seen = HashSet::new();
            let docs: Vec<Document> = docs.into_iter().filter(|d| seen.insert(d.id.clone())).collect();
            for format in [DocumentFormat::Jsonl, DocumentFormat::Tsv] {
                let mut buf = Vec::new();
                write_documents(&mut buf, &docs, format).unwrap();
                let back = match format {
                    DocumentFormat::Jsonl => read_documents_jsonl(&buf[..]).unwrap(),
                    DocumentFormat::Tsv => read_documents_tsv(&buf[..]).unwrap(),
                };
                prop_assert_eq!(&back, &docs);
            }
        }

        #[test]
        fn reconstruct_then_reinvert(tokens in prop::collection::vec("[a-z]{1,3}", 1..30)) {
            let mut inverted: BTreeMap<String, Vec<u32>> = BTreeMap::new();
            for (i, t) in tokens.iter().enumerate() {
                inverted.entry(t.clone()).or_default().push(i as u32);
            }
            let text = reconstruct_abstract(&inverted).unwrap();
            let mut again: BTreeMap<String, Vec<u32>> = BTreeMap::new();
            for (i, t) in text.split(' ').enumerate() {
                again.entry(t.to_string()).or_default().push(i as u32);
            }
            prop_assert_eq!(again, inverted);
        }
    }
}
