use std::fmt::Write as _;

use serde_json::{json, Map, Value};

/// Where a column's values come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Formula,
    Enumeration,
    MonteCarlo,
}

impl Provenance {
    fn tag(self) -> &'static str {
        match self {
            Provenance::Formula => "formula",
            Provenance::Enumeration => "enumeration",
            Provenance::MonteCarlo => "monte-carlo",
        }
    }
}

/// A titled table. Columns without a provenance tag hold parameters or verdicts.
#[derive(Debug, Clone)]
pub struct Section {
    pub title: String,
    pub columns: Vec<(String, Option<Provenance>)>,
    pub rows: Vec<Vec<String>>,
}

impl Section {
    pub fn new(title: impl Into<String>, columns: &[(&str, Option<Provenance>)]) -> Self {
        Section {
            title: title.into(),
            columns: columns.iter().map(|(c, p)| (c.to_string(), *p)).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn provenance_line(&self) -> Option<String> {
        let tags: Vec<String> =
            self.columns.iter().filter_map(|(c, p)| p.map(|p| format!("{c}:{}", p.tag()))).collect();
        (!tags.is_empty()).then(|| tags.join(","))
    }

    fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let obj: Map<String, Value> =
                    self.columns.iter().zip(r).map(|((c, _), v)| (c.clone(), Value::String(v.clone()))).collect();
                Value::Object(obj)
            })
            .collect();
        let provenance: Map<String, Value> =
            self.columns.iter().filter_map(|(c, p)| p.map(|p| (c.clone(), Value::String(p.tag().into())))).collect();
        json!({ "title": self.title, "provenance": provenance, "rows": rows })
    }
}

/// A full command report: resolved configuration, tables and attached JSON blocks.
#[derive(Debug, Clone)]
pub struct Report {
    pub command: String,
    pub config: Value,
    pub seed: Option<u64>,
    pub sections: Vec<Section>,
    pub blocks: Vec<(String, Value)>,
}

impl Report {
    pub fn new(command: &str, config: Value, seed: Option<u64>) -> Self {
        Report { command: command.into(), config, seed, sections: Vec::new(), blocks: Vec::new() }
    }

    pub fn section(&mut self, s: Section) {
        self.sections.push(s);
    }

    pub fn block(&mut self, name: &str, v: Value) {
        self.blocks.push((name.into(), v));
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# tool=permdiv version={}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(out, "# command={}", self.command);
        let _ = writeln!(out, "# config={}", self.config);
        let _ = writeln!(out, "# seed={}", self.seed.map_or("none".into(), |s| s.to_string()));
        for s in &self.sections {
            out.push('\n');
            let _ = writeln!(out, "# {}", s.title);
            if let Some(p) = s.provenance_line() {
                let _ = writeln!(out, "# provenance={p}");
            }
            let header: Vec<&str> = s.columns.iter().map(|(c, _)| c.as_str()).collect();
            let _ = writeln!(out, "{}", header.join("\t"));
            for r in &s.rows {
                let _ = writeln!(out, "{}", r.join("\t"));
            }
        }
        for (name, v) in &self.blocks {
            out.push('\n');
            let _ = writeln!(out, "# {name}={v}");
        }
        out
    }

    pub fn to_json(&self) -> String {
        let blocks: Map<String, Value> = self.blocks.iter().cloned().collect();
        let v = json!({
            "tool": "permdiv",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "sections": self.sections.iter().map(Section::to_json).collect::<Vec<_>>(),
            "blocks": blocks,
        });
        let mut s = serde_json::to_string_pretty(&v).expect("serializable report");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut r = Report::new("count", json!({"n": "4"}), None);
        let mut s = Section::new("quantity=d", &[("n", None), ("value", Some(Provenance::Formula))]);
        s.push(vec!["4".into(), "9".into()]);
        r.section(s);
        r
    }

    #[test]
    fn tsv_layout() {
        let t = sample().to_tsv();
        let lines: Vec<&str> = t.lines().collect();
        assert!(lines[0].starts_with("# tool=permdiv version="));
        assert_eq!(lines[1], "# command=count");
        assert_eq!(lines[2], r#"# config={"n":"4"}"#);
        assert_eq!(lines[3], "# seed=none");
        assert_eq!(&lines[5..], ["# quantity=d", "# provenance=value:formula", "n\tvalue", "4\t9"]);
    }

    #[test]
    fn json_rows_are_keyed_by_column() {
        let v: Value = serde_json::from_str(&sample().to_json()).unwrap();
        assert_eq!(v["sections"][0]["rows"][0]["value"], "9");
        assert_eq!(v["sections"][0]["provenance"]["value"], "formula");
    }
}
