use twistlab::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ResultTable {
    pub name: String,
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Shortest round-trip decimal; identical values print identically.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:?}")
    }
}

impl ResultTable {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        ResultTable { name: name.into(), meta: Vec::new(), columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn meta(&mut self, k: &str, v: impl ToString) {
        self.meta.push((k.to_string(), v.to_string()));
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::Structural(format!("{}: row has {} cells, table has {} columns", self.name, row.len(), self.columns.len())));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            out.push_str(&format!("# {k}: {}\n", v.replace('\n', "; ")));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.iter().map(|&x| fmt_num(x)).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }

    /// Whitespace-separated columns with a commented header, for gnuplot.
    pub fn to_plot_data(&self) -> String {
        let mut out = format!("# {}\n", self.columns.join(" "));
        for r in &self.rows {
            out.push_str(&r.iter().map(|&x| fmt_num(x)).collect::<Vec<_>>().join(" "));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<serde_json::Map<String, serde_json::Value>> = self
            .rows
            .iter()
            .map(|r| {
                self.columns
                    .iter()
                    .zip(r)
                    .map(|(c, &x)| {
                        let v = serde_json::Number::from_f64(x).map(serde_json::Value::Number).unwrap_or_else(|| serde_json::Value::String(fmt_num(x)));
                        (c.clone(), v)
                    })
                    .collect()
            })
            .collect();
        let meta: serde_json::Map<String, serde_json::Value> =
            self.meta.iter().map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone()))).collect();
        let obj = serde_json::json!({ "name": self.name, "meta": meta, "columns": self.columns, "rows": rows });
        serde_json::to_string_pretty(&obj).expect("table serializes")
    }
}

/// Version plus an FNV-1a digest of the configuration echo.
pub fn provenance(config_text: &str) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in config_text.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    format!("twistlab {} cfg-{h:016x}", env!("CARGO_PKG_VERSION"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arity_is_enforced() {
        let mut t = ResultTable::new("t", &["a", "b"]);
        t.push(vec![1.0, 2.5]).unwrap();
        assert_eq!(t.push(vec![1.0]).unwrap_err().code(), "E_STRUCTURAL");
        assert_eq!(t.to_csv(), "a,b\n1.0,2.5\n");
        assert!(t.to_json().contains("\"a\": 1.0"));
        t.push(vec![f64::NAN, 0.1]).unwrap();
        assert!(t.to_csv().ends_with("nan,0.1\n"));
    }
}
