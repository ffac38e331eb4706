use crate::error::Result;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// SHA-256 over the parsed command and the bytes of every input file.
pub fn config_hash(command: &str, inputs: &[&Path]) -> Result<String> {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    for p in inputs {
        h.update([0u8]);
        h.update(std::fs::read(p)?);
    }
    Ok(h.finalize().iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    }))
}

/// CSV table with a config-hash comment line and a header row.
pub struct Table {
    header: Vec<String>,
    rows: Vec<String>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, cells: &[Cell]) {
        let line: Vec<String> = cells.iter().map(Cell::render).collect();
        self.rows.push(line.join(","));
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn render(&self, hash: &str) -> String {
        let mut s = format!("# config_hash={hash}\n{}\n", self.header.join(","));
        for r in &self.rows {
            s.push_str(r);
            s.push('\n');
        }
        s
    }

    pub fn write(&self, dir: &Path, name: &str, hash: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(name);
        std::fs::write(&path, self.render(hash))?;
        Ok(path)
    }
}

pub enum Cell {
    F(f64),
    U(usize),
    S(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(x) => format!("{x:e}"),
            Cell::U(n) => n.to_string(),
            Cell::S(s) => {
                if s.contains([',', '"', '\n']) {
                    format!("\"{}\"", s.replace('"', "\"\""))
                } else {
                    s.clone()
                }
            }
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::U(n)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::S(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::S(s)
    }
}

macro_rules! row {
    ($($x:expr),* $(,)?) => { &[$($crate::cli::output::Cell::from($x)),*] };
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_has_hash_and_header() {
        let mut t = Table::new(&["a", "b"]);
        t.push(row![1.5, "x,y"]);
        let s = t.render("abc");
        assert_eq!(s, "# config_hash=abc\na,b\n1.5e0,\"x,y\"\n");
    }
}
