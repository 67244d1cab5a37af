//! String tables written as CSV.

use std::collections::HashMap;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// File stem of the CSV.
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Means of `values` grouped by `keys`, in order of first appearance.
    /// Blank cells (infeasible points) are skipped; `realizations` counts the
    /// rows that contributed.
    pub fn summarize(&self, keys: &[&str], values: &[&str], seed: u64) -> Table {
        let key_idx: Vec<usize> = keys.iter().map(|k| self.col(k)).collect();
        let val_idx: Vec<usize> = values.iter().map(|v| self.col(v)).collect();
        let mut header = vec!["seed".to_string()];
        header.extend(keys.iter().map(|k| k.to_string()));
        header.push("realizations".into());
        header.extend(values.iter().map(|v| format!("mean_{v}")));

        let mut order: Vec<Vec<String>> = Vec::new();
        let mut groups: HashMap<Vec<String>, (usize, Vec<(f64, usize)>)> = HashMap::new();
        for row in &self.rows {
            let key: Vec<String> = key_idx.iter().map(|&i| row[i].clone()).collect();
            let entry = groups.entry(key.clone()).or_insert_with(|| {
                order.push(key);
                (0, vec![(0.0, 0); val_idx.len()])
            });
            let parsed: Vec<Option<f64>> = val_idx.iter().map(|&i| row[i].parse().ok()).collect();
            if parsed.iter().any(Option::is_some) {
                entry.0 += 1;
            }
            for (acc, v) in entry.1.iter_mut().zip(parsed) {
                if let Some(v) = v {
                    acc.0 += v;
                    acc.1 += 1;
                }
            }
        }

        let rows = order
            .into_iter()
            .map(|key| {
                let (count, sums) = &groups[&key];
                let mut row = vec![seed.to_string()];
                row.extend(key);
                row.push(count.to_string());
                row.extend(sums.iter().map(|&(s, n)| {
                    if n == 0 {
                        String::new()
                    } else {
                        crate::experiments::num(s / n as f64)
                    }
                }));
                row
            })
            .collect();
        Table {
            name: format!("{}_summary", self.name),
            header,
            rows,
        }
    }

    fn col(&self, name: &str) -> usize {
        self.column(name)
            .unwrap_or_else(|| panic!("table {} has no column {name}", self.name))
    }

    pub fn write_csv(&self, dir: &Path) -> csv::Result<()> {
        let mut w = csv::Writer::from_path(dir.join(format!("{}.csv", self.name)))?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }
}
