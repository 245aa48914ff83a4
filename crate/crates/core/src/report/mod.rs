//! Figure and table emission.
//!
//! Every figure is written twice: as a static SVG and as a comma-separated
//! data file holding the same numbers. Numbers are rendered with six
//! significant digits so repeated runs produce identical bytes.

pub mod figures;
pub mod svg;

use std::collections::BTreeMap;
use std::io;
use std::path::{Path, PathBuf};

/// Formats `x` with six significant digits, `%g` style.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        format!("{}e{exp}", trim_zeros(mantissa))
    } else {
        let decimals = (5 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// An SVG plus the data it was drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct Figure {
    /// File stem, e.g. `fig1_prices`.
    pub stem: String,
    pub svg: String,
    pub csv: String,
}

/// In-memory output directory, keyed by relative path.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OutputTree {
    files: BTreeMap<String, String>,
}

impl OutputTree {
    pub fn add(&mut self, path: impl Into<String>, contents: impl Into<String>) {
        self.files.insert(path.into(), contents.into());
    }

    pub fn add_figure(&mut self, fig: Figure) {
        self.add(format!("{}.svg", fig.stem), fig.svg);
        self.add(format!("{}.csv", fig.stem), fig.csv);
    }

    pub fn get(&self, path: &str) -> Option<&str> {
        self.files.get(path).map(String::as_str)
    }

    pub fn paths(&self) -> impl Iterator<Item = &str> {
        self.files.keys().map(String::as_str)
    }

    /// Writes every file under `dir`, then `manifest.txt` listing them.
    /// Returns the manifest entries.
    pub fn write(&self, dir: &Path) -> io::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut manifest = String::new();
        let mut written = Vec::with_capacity(self.files.len());
        for (rel, contents) in &self.files {
            let path = dir.join(rel);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(&path, contents)?;
            manifest.push_str(rel);
            manifest.push('\n');
            written.push(path);
        }
        std::fs::write(dir.join("manifest.txt"), manifest)?;
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(num(0.0), "0");
        assert_eq!(num(-0.0), "0");
        assert_eq!(num(1.0), "1");
        assert_eq!(num(15.82), "15.82");
        assert_eq!(num(-4.428487), "-4.42849");
        assert_eq!(num(123456.7), "123457");
        assert_eq!(num(999999.7), "1e6");
        assert_eq!(num(239655616.0), "2.39656e8");
        assert_eq!(num(0.0001234567), "0.000123457");
        assert_eq!(num(0.00001234567), "1.23457e-5");
        assert_eq!(num(95.23), "95.23");
        assert_eq!(num(1.0 / 3.0), "0.333333");
    }

    #[test]
    fn output_tree_writes_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let mut tree = OutputTree::default();
        tree.add("b.txt", "b");
        tree.add("models/a.model", "a");
        let written = tree.write(dir.path()).unwrap();
        assert_eq!(written.len(), 2);
        let manifest = std::fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
        assert_eq!(manifest, "b.txt\nmodels/a.model\n");
        assert_eq!(std::fs::read_to_string(dir.path().join("models/a.model")).unwrap(), "a");
    }
}
