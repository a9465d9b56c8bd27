//! File formats: question JSONL, training corpora, curve CSV, metrics JSON, pricing JSON.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use log::warn;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::{LatencyReport, MetricsReport};
use crate::model::{CurvePoint, CurveTau, Dataset, PricingSchedule, QuestionRaw, QuestionRecord};

pub const CURVE_HEADER: &str = "tau,cost,performance,n_routed";
pub const LATENCY_HEADER: &str = "tau,agl,arol,n_accepted,n_rejected";

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Load and validate a question file. Errors carry the 1-based line number.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    parse_dataset(open(path)?).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

/// Stream-parse question JSONL. Blank lines are skipped; unknown fields are logged and ignored.
pub fn parse_dataset(reader: impl BufRead) -> Result<Dataset> {
    let mut questions = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io("<input>", e).at_line(lineno))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: QuestionRaw =
            serde_json::from_str(&line).map_err(|e| Error::Json(e).at_line(lineno))?;
        for field in raw.unknown_fields() {
            warn!("line {lineno}: ignoring unknown field `{field}` in question `{}`", raw.id);
        }
        let q = QuestionRecord::try_from(raw).map_err(|e| e.at_line(lineno))?;
        if !seen.insert(q.id().to_owned()) {
            return Err(Error::DuplicateId(q.id().to_owned()).at_line(lineno));
        }
        questions.push(q);
    }
    Dataset::new(questions)
}

/// Write any serializable records, one JSON object per line.
pub fn write_jsonl<T: Serialize>(path: impl AsRef<Path>, items: &[T]) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    write_jsonl_to(&mut w, items).and_then(|_| w.flush().map_err(|e| Error::io(path, e)))
}

pub fn write_jsonl_to<T: Serialize>(w: &mut impl Write, items: &[T]) -> Result<()> {
    for item in items {
        serde_json::to_writer(&mut *w, item)?;
        w.write_all(b"\n").map_err(|e| Error::io("<output>", e))?;
    }
    Ok(())
}

/// Read JSONL records of any deserializable type, reporting line numbers.
pub fn read_jsonl<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Json(e).at_line(i + 1))?);
    }
    Ok(out)
}

pub fn write_dataset(path: impl AsRef<Path>, questions: &[QuestionRecord]) -> Result<()> {
    write_jsonl(path, questions)
}

fn csv_text(header: &str, rows: impl IntoIterator<Item = [String; 5]>, width: usize) -> Result<String> {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Format(e.to_string());
    w.write_record(header.split(',')).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row[..width]).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

/// Render a curve as CSV: `slm_only` first, thresholds ascending, `llm_only` last.
pub fn render_curve(points: &[CurvePoint]) -> Result<String> {
    if points.is_empty() {
        return Err(Error::Empty("curve"));
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.tau.sort_key_cmp(&b.tau));
    let rows = sorted.iter().map(|p| {
        [
            p.tau.label(),
            format!("{:.6}", p.cost),
            format!("{:.6}", p.performance),
            p.n_routed.to_string(),
            String::new(),
        ]
    });
    csv_text(CURVE_HEADER, rows, 4)
}

pub fn write_curve(points: &[CurvePoint], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = render_curve(points)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn parse_curve(text: &str) -> Result<Vec<CurvePoint>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::Format(e.to_string()))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != CURVE_HEADER {
        return Err(Error::Format(format!("curve must start with `{CURVE_HEADER}`")));
    }
    reader
        .records()
        .enumerate()
        .map(|(i, rec)| {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::Format(e.to_string()).at_line(line))?;
            let bad = || Error::Format(format!("bad curve row `{}`", rec.iter().collect::<Vec<_>>().join(","))).at_line(line);
            let [tau, cost, perf, routed] = [0, 1, 2, 3].map(|j| rec.get(j).unwrap_or_default());
            Ok(CurvePoint {
                tau: CurveTau::parse(tau).map_err(|_| bad())?,
                cost: cost.parse().map_err(|_| bad())?,
                performance: perf.parse().map_err(|_| bad())?,
                n_routed: routed.parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

pub fn read_curve(path: impl AsRef<Path>) -> Result<Vec<CurvePoint>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_curve(&text)
}

pub fn render_latency(rows: &[(f64, LatencyReport)]) -> Result<String> {
    let rows = rows.iter().map(|(tau, r)| {
        [
            format!("{tau:?}"),
            format!("{:.6}", r.agl),
            format!("{:.6}", r.arol),
            r.n_accepted.to_string(),
            r.n_rejected.to_string(),
        ]
    });
    csv_text(LATENCY_HEADER, rows, 5)
}

pub fn write_latency(rows: &[(f64, LatencyReport)], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, render_latency(rows)?).map_err(|e| Error::io(path, e))
}

pub fn write_metrics(report: &MetricsReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string(report)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_pricing(path: impl AsRef<Path>) -> Result<PricingSchedule> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const VALID: &str = r#"{"id":"q1","input_tokens":10,"pre_score":0.4,"slm_samples":[{"answer":"A","correct":true,"tokens":5,"confidence_level":null,"refusal":false}],"llm":{"correct":true,"tokens":100}}
{"id":"q2","input_tokens":10,"pre_score":null,"slm_samples":[{"answer":null,"correct":false,"tokens":5,"confidence_level":0.3,"refusal":true}],"llm":{"correct":false,"tokens":300}}

{"id":"q3","input_tokens":12,"pre_score":1.0,"slm_samples":[],"llm":null,"source":"mmlu"}
"#;

    #[test]
    fn parses_valid_lines() {
        let ds = parse_dataset(VALID.as_bytes()).unwrap();
        assert_eq!(ds.profile().n_questions, 3);
        assert_eq!(ds.profile().avg_llm_tokens, Some(200.0));
        assert_eq!(ds.get("q1").unwrap().slm_samples()[0].answer(), Some("a"));
    }

    #[test]
    fn reports_line_of_invariant_violation() {
        let bad = r#"{"id":"q1","input_tokens":10,"pre_score":null,"slm_samples":[],"llm":null}
{"id":"q2","input_tokens":10,"pre_score":null,"slm_samples":[{"answer":"B","correct":false,"tokens":5,"confidence_level":null,"refusal":true}],"llm":null}
"#;
        let msg = parse_dataset(bad.as_bytes()).unwrap_err().to_string();
        assert!(msg.starts_with("line 2:"), "{msg}");
        assert!(msg.contains("q2") && msg.contains("slm_samples[0].answer"), "{msg}");
    }

    #[test]
    fn reports_malformed_json_and_duplicates() {
        let msg = parse_dataset("{\"id\":".as_bytes()).unwrap_err().to_string();
        assert!(msg.starts_with("line 1: malformed JSON"), "{msg}");
        let line = r#"{"id":"x","input_tokens":1,"pre_score":null,"slm_samples":[],"llm":null}"#;
        let dup = format!("{line}\n{line}\n");
        let msg = parse_dataset(dup.as_bytes()).unwrap_err().to_string();
        assert!(msg.contains("line 2") && msg.contains("`x`"), "{msg}");
    }

    #[test]
    fn off_grid_confidence_rejected() {
        let line = r#"{"id":"x","input_tokens":1,"pre_score":null,"slm_samples":[{"answer":"a","correct":true,"tokens":5,"confidence_level":0.55,"refusal":false}],"llm":null}"#;
        let msg = parse_dataset(line.as_bytes()).unwrap_err().to_string();
        assert!(msg.contains("0.55"), "{msg}");
    }

    #[test]
    fn curve_csv_format() {
        let p = CurvePoint {
            tau: CurveTau::Threshold(0.5),
            cost: 0.3,
            performance: 0.9,
            n_routed: 4,
        };
        assert_eq!(render_curve(&[p]).unwrap(), format!("{CURVE_HEADER}\n0.5,0.300000,0.900000,4\n"));
        assert!(render_curve(&[]).is_err());
        let ends = [
            CurvePoint { tau: CurveTau::LlmOnly, cost: 1.0, performance: 1.0, n_routed: 9 },
            p,
            CurvePoint { tau: CurveTau::SlmOnly, cost: 0.1, performance: 0.5, n_routed: 0 },
        ];
        let text = render_curve(&ends).unwrap();
        let taus: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
        assert_eq!(taus, ["slm_only", "0.5", "llm_only"]);
        let back = parse_curve(&text).unwrap();
        assert_eq!(back[1].tau, CurveTau::Threshold(0.5));
        assert_eq!(back[2].n_routed, 9);
    }

    #[test]
    fn unwritable_curve_path() {
        let p = CurvePoint { tau: CurveTau::SlmOnly, cost: 0.0, performance: 0.0, n_routed: 0 };
        assert!(matches!(write_curve(&[p], "/nonexistent-dir/x.csv"), Err(Error::Io { .. })));
    }
}
