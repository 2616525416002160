//! `acmesh v1` text format.
//!
//! ```text
//! acmesh v1
//! nodes <N>
//! <x> <y>            (N lines)
//! tris <M>
//! <i> <j> <k>        (M lines, 0-based)
//! loop <name> <count>
//! <index>            (count lines)
//! ```
//!
//! Coordinates are written with the shortest representation that round-trips.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{Mesh2D, Point2};
use crate::error::{Error, Result};

const HEADER: &str = "acmesh v1";

pub fn write_mesh(mesh: &Mesh2D) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{HEADER}");
    let _ = writeln!(out, "nodes {}", mesh.nodes.len());
    for p in &mesh.nodes {
        let _ = writeln!(out, "{} {}", p.x, p.y);
    }
    let _ = writeln!(out, "tris {}", mesh.elements.len());
    for t in &mesh.elements {
        let _ = writeln!(out, "{} {} {}", t[0], t[1], t[2]);
    }
    for (name, idx) in &mesh.loops {
        let _ = writeln!(out, "loop {name} {}", idx.len());
        for i in idx {
            let _ = writeln!(out, "{i}");
        }
    }
    out
}

pub fn save_mesh(mesh: &Mesh2D, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, write_mesh(mesh))?;
    Ok(())
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh2D> {
    parse_mesh(&std::fs::read_to_string(path)?)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self, expecting: &str) -> Result<(usize, &'a str)> {
        for (i, raw) in self.inner.by_ref() {
            self.last = i + 1;
            let line = raw.trim();
            if !line.is_empty() {
                return Ok((i + 1, line));
            }
        }
        Err(Error::Parse {
            line: self.last + 1,
            message: format!("unexpected end of file, expected {expecting}"),
        })
    }

    fn peek_more(&mut self) -> Option<(usize, &'a str)> {
        for (i, raw) in self.inner.by_ref() {
            self.last = i + 1;
            let line = raw.trim();
            if !line.is_empty() {
                return Some((i + 1, line));
            }
        }
        None
    }
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    tok.and_then(|t| t.parse().ok()).ok_or_else(|| Error::Parse {
        line,
        message: format!("expected {what}"),
    })
}

fn section_count(line: usize, text: &str, keyword: &str) -> Result<usize> {
    let mut toks = text.split_whitespace();
    if toks.next() != Some(keyword) {
        return Err(Error::Parse { line, message: format!("expected '{keyword} <count>'") });
    }
    let n = parse_num(toks.next(), line, "count")?;
    if toks.next().is_some() {
        return Err(Error::Parse { line, message: "trailing tokens".into() });
    }
    Ok(n)
}

pub fn parse_mesh(text: &str) -> Result<Mesh2D> {
    let mut lines = Lines { inner: text.lines().enumerate(), last: 0 };
    let (no, header) = lines.next_line("header")?;
    if header != HEADER {
        return Err(Error::Parse { line: no, message: format!("unknown header '{header}'") });
    }

    let (no, l) = lines.next_line("nodes section")?;
    let n_nodes = section_count(no, l, "nodes")?;
    let mut nodes = Vec::with_capacity(n_nodes);
    for _ in 0..n_nodes {
        let (no, l) = lines.next_line("node coordinates")?;
        let mut toks = l.split_whitespace();
        let x = parse_num(toks.next(), no, "x coordinate")?;
        let y = parse_num(toks.next(), no, "y coordinate")?;
        if toks.next().is_some() {
            return Err(Error::Parse { line: no, message: "trailing tokens".into() });
        }
        nodes.push(Point2::new(x, y));
    }

    let (no, l) = lines.next_line("tris section")?;
    let n_tris = section_count(no, l, "tris")?;
    let mut elements = Vec::with_capacity(n_tris);
    for _ in 0..n_tris {
        let (no, l) = lines.next_line("triangle indices")?;
        let mut toks = l.split_whitespace();
        let mut tri = [0usize; 3];
        for v in &mut tri {
            *v = parse_num(toks.next(), no, "node index")?;
        }
        if toks.next().is_some() {
            return Err(Error::Parse { line: no, message: "trailing tokens".into() });
        }
        elements.push(tri);
    }

    let mut loops = BTreeMap::new();
    while let Some((no, l)) = lines.peek_more() {
        let mut toks = l.split_whitespace();
        if toks.next() != Some("loop") {
            return Err(Error::Parse { line: no, message: format!("unexpected line '{l}'") });
        }
        let name = toks
            .next()
            .ok_or_else(|| Error::Parse { line: no, message: "loop without a name".into() })?
            .to_string();
        let count: usize = parse_num(toks.next(), no, "loop node count")?;
        let mut idx = Vec::with_capacity(count);
        for _ in 0..count {
            let (no, l) = lines.next_line("loop node index")?;
            idx.push(parse_num(Some(l), no, "node index")?);
        }
        if loops.insert(name.clone(), idx).is_some() {
            return Err(Error::Parse { line: no, message: format!("duplicate loop '{name}'") });
        }
    }

    Mesh2D::new(nodes, elements, loops)
}
