//! Plain-text data formats.
//!
//! * Potts lattice: whitespace-separated integer grid, one lattice row per line.
//! * Graph: edge list, one `i j` pair (0-based) per line. Lines starting with
//!   `#` are comments; a `# nodes: N` comment fixes the node count so that
//!   isolated trailing nodes survive a round trip.
//! * Item responses: headerless CSV of 0/1 values, one respondent per row.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{ItemResponseMatrix, PottsLattice, UndirectedGraph};
use crate::error::{Error, Result};

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Parse a lattice grid. When `colors` is `None` the number of colors is the
/// largest value present.
pub fn parse_lattice(text: &str, colors: Option<u8>, path: &Path) -> Result<PottsLattice> {
    let mut cells = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row: Vec<u8> = line
            .split_whitespace()
            .map(|t| {
                t.parse::<u8>()
                    .map_err(|_| Error::parse(path, lineno + 1, format!("invalid color {t:?}")))
            })
            .collect::<Result<_>>()?;
        match cols {
            None => cols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(Error::parse(
                    path,
                    lineno + 1,
                    format!("row has {} cells, expected {c}", row.len()),
                ))
            }
            _ => {}
        }
        cells.extend(row);
        rows += 1;
    }
    let cols = cols.ok_or_else(|| Error::parse(path, 1, "empty lattice"))?;
    let k = colors.unwrap_or_else(|| cells.iter().copied().max().unwrap_or(1));
    PottsLattice::new(rows, cols, k, cells).map_err(|e| Error::parse(path, 0, e.to_string()))
}

pub fn read_lattice(path: &Path, colors: Option<u8>) -> Result<PottsLattice> {
    parse_lattice(&read(path)?, colors, path)
}

pub fn format_lattice(lattice: &PottsLattice) -> String {
    let mut out = String::with_capacity(lattice.cells().len() * 2);
    for r in 0..lattice.rows() {
        let row: Vec<String> = (0..lattice.cols())
            .map(|c| lattice.get(r, c).to_string())
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn write_lattice(path: &Path, lattice: &PottsLattice) -> Result<()> {
    write(path, &format_lattice(lattice))
}

pub fn parse_edge_list(text: &str, path: &Path) -> Result<UndirectedGraph> {
    let mut declared = None;
    let mut edges = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(n) = comment.trim().strip_prefix("nodes:") {
                let n = n.trim().parse::<usize>().map_err(|_| {
                    Error::parse(path, lineno + 1, format!("invalid node count {:?}", n.trim()))
                })?;
                declared = Some(n);
            }
            continue;
        }
        let mut it = line.split_whitespace();
        let mut next = || -> Result<usize> {
            let t = it
                .next()
                .ok_or_else(|| Error::parse(path, lineno + 1, "expected two node ids"))?;
            t.parse::<usize>()
                .map_err(|_| Error::parse(path, lineno + 1, format!("invalid node id {t:?}")))
        };
        let (i, j) = (next()?, next()?);
        if it.next().is_some() {
            return Err(Error::parse(path, lineno + 1, "expected exactly two node ids"));
        }
        if i == j {
            return Err(Error::parse(path, lineno + 1, format!("self-loop at node {i}")));
        }
        edges.push((i, j));
    }
    let max_id = edges.iter().map(|&(i, j)| i.max(j) + 1).max().unwrap_or(0);
    let n = match declared {
        Some(n) if n < max_id => {
            return Err(Error::parse(
                path,
                0,
                format!("declared {n} nodes but edges reference node {}", max_id - 1),
            ))
        }
        Some(n) => n,
        None => max_id,
    };
    UndirectedGraph::from_edges(n, &edges).map_err(|e| Error::parse(path, 0, e.to_string()))
}

pub fn read_edge_list(path: &Path) -> Result<UndirectedGraph> {
    parse_edge_list(&read(path)?, path)
}

pub fn format_edge_list(graph: &UndirectedGraph) -> String {
    let mut out = format!("# nodes: {}\n", graph.nodes());
    for (i, j) in graph.edges() {
        let _ = writeln!(out, "{i} {j}");
    }
    out
}

pub fn write_edge_list(path: &Path, graph: &UndirectedGraph) -> Result<()> {
    write(path, &format_edge_list(graph))
}

pub fn parse_responses(text: &str, path: &Path) -> Result<ItemResponseMatrix> {
    let mut entries = Vec::new();
    let mut p = None;
    let mut n = 0;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<u8> = line
            .split(',')
            .map(|t| match t.trim() {
                "0" => Ok(0),
                "1" => Ok(1),
                other => Err(Error::parse(
                    path,
                    lineno + 1,
                    format!("expected 0 or 1, found {other:?}"),
                )),
            })
            .collect::<Result<_>>()?;
        match p {
            None => p = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(Error::parse(
                    path,
                    lineno + 1,
                    format!("row has {} columns, expected {c}", row.len()),
                ))
            }
            _ => {}
        }
        entries.extend(row);
        n += 1;
    }
    let p = p.ok_or_else(|| Error::parse(path, 1, "empty response matrix"))?;
    ItemResponseMatrix::new(n, p, entries).map_err(|e| Error::parse(path, 0, e.to_string()))
}

pub fn read_responses(path: &Path) -> Result<ItemResponseMatrix> {
    parse_responses(&read(path)?, path)
}

pub fn format_responses(x: &ItemResponseMatrix) -> String {
    let mut out = String::new();
    for i in 0..x.respondents() {
        let row: Vec<&str> = x.row(i).iter().map(|&v| if v == 1 { "1" } else { "0" }).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_responses(path: &Path, x: &ItemResponseMatrix) -> Result<()> {
    write(path, &format_responses(x))
}
