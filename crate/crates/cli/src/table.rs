//! Fixed-column reports printed as aligned text or CSV.

use crate::OutputFormat;

pub struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<I, S>(headers: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Table {
            headers: headers.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: OutputFormat) -> String {
        let lines = std::iter::once(&self.headers).chain(&self.rows);
        match format {
            OutputFormat::Csv => lines.map(|r| r.join(",") + "\n").collect(),
            OutputFormat::Text => {
                let widths: Vec<usize> = (0..self.headers.len())
                    .map(|c| lines.clone().map(|r| r[c].len()).max().unwrap_or(0))
                    .collect();
                lines
                    .map(|r| {
                        let cells: Vec<String> =
                            r.iter().zip(&widths).map(|(v, &w)| format!("{v:<w$}")).collect();
                        cells.join("  ").trim_end().to_string() + "\n"
                    })
                    .collect()
            }
        }
    }
}

pub fn num(v: f64) -> String {
    format!("{v:.6}")
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_else(|| "n/a".into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_and_csv() {
        let mut t = Table::new(["a", "long-name"]);
        t.push(vec!["12345".into(), "x".into()]);
        assert_eq!(t.render(OutputFormat::Csv), "a,long-name\n12345,x\n");
        assert_eq!(t.render(OutputFormat::Text), "a      long-name\n12345  x\n");
    }
}
