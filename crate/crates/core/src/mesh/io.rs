//! METIS graph files, whitespace coordinate files and partition files.

use std::io::{BufRead, BufReader, Read, Write};

use super::{GeometricGraph, Partition};
use crate::geometry::Point;
use crate::{Error, Result};

const GRAPH_SOURCE: &str = "graph";
const COORD_SOURCE: &str = "coords";

/// Which optional fields each METIS vertex line carries.
#[derive(Debug, Clone, Copy, Default)]
struct MetisFormat {
    vertex_sizes: bool,
    vertex_weights: bool,
    edge_weights: bool,
}

impl MetisFormat {
    fn parse(code: &str, line: usize) -> Result<Self> {
        if code.len() > 3 || !code.chars().all(|c| c == '0' || c == '1') {
            return Err(Error::parse(
                GRAPH_SOURCE,
                line,
                format!("invalid fmt code {code:?}"),
            ));
        }
        let padded = format!("{code:0>3}");
        let bits: Vec<bool> = padded.chars().map(|c| c == '1').collect();
        Ok(MetisFormat {
            vertex_sizes: bits[0],
            vertex_weights: bits[1],
            edge_weights: bits[2],
        })
    }
}

fn parse_num<T: std::str::FromStr>(tok: &str, source: &str, line: usize) -> Result<T> {
    tok.parse()
        .map_err(|_| Error::parse(source, line, format!("non-numeric token {tok:?}")))
}

/// Non-comment lines of a METIS file with their 1-based line numbers.
fn content_lines(text: impl Read) -> Result<Vec<(usize, String)>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(text).lines().enumerate() {
        let line = line?;
        if line.trim_start().starts_with('%') {
            continue;
        }
        out.push((i + 1, line));
    }
    Ok(out)
}

/// Reads a METIS graph (1-based ids) and its coordinate file (one vertex per
/// line, 2 or 3 whitespace-separated reals).
pub fn load_metis_graph(graph_text: impl Read, coord_text: impl Read) -> Result<GeometricGraph> {
    let lines = content_lines(graph_text)?;
    let mut iter = lines.iter().skip_while(|(_, l)| l.trim().is_empty());
    let Some((header_line, header)) = iter.next() else {
        return Err(Error::parse(GRAPH_SOURCE, 1, "missing header"));
    };
    let header_line = *header_line;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if !(2..=4).contains(&fields.len()) {
        return Err(Error::parse(
            GRAPH_SOURCE,
            header_line,
            "header must be \"n m [fmt [ncon]]\"",
        ));
    }
    let n: usize = parse_num(fields[0], GRAPH_SOURCE, header_line)?;
    let m: usize = parse_num(fields[1], GRAPH_SOURCE, header_line)?;
    let fmt = match fields.get(2) {
        Some(code) => MetisFormat::parse(code, header_line)?,
        None => MetisFormat::default(),
    };
    let ncon: usize = match fields.get(3) {
        Some(tok) => parse_num(tok, GRAPH_SOURCE, header_line)?,
        None => 1,
    };
    if ncon != 1 {
        return Err(Error::parse(
            GRAPH_SOURCE,
            header_line,
            format!("only one vertex weight per vertex is supported, got ncon = {ncon}"),
        ));
    }

    let body: Vec<&(usize, String)> = iter.collect();
    if body.len() < n {
        let line = body.last().map_or(header_line, |b| b.0);
        return Err(Error::parse(
            GRAPH_SOURCE,
            line,
            format!(
                "header announces {n} vertices but only {} lines follow",
                body.len()
            ),
        ));
    }
    // Blank lines past the last vertex are tolerated.
    if let Some((line, _)) = body[n..].iter().find(|(_, l)| !l.trim().is_empty()) {
        return Err(Error::parse(
            GRAPH_SOURCE,
            *line,
            format!("more than {n} vertex lines"),
        ));
    }

    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0);
    let mut neighbors = Vec::new();
    let mut edge_weights = fmt.edge_weights.then(Vec::new);
    let mut vertex_weights = fmt.vertex_weights.then(|| Vec::with_capacity(n));
    let mut line_of = Vec::with_capacity(n);

    for (line_no, text) in body.iter().take(n) {
        let line_no = *line_no;
        line_of.push(line_no);
        let mut toks = text.split_whitespace();
        if fmt.vertex_sizes {
            let tok = toks
                .next()
                .ok_or_else(|| Error::parse(GRAPH_SOURCE, line_no, "missing vertex size"))?;
            let _: f64 = parse_num(tok, GRAPH_SOURCE, line_no)?;
        }
        if let Some(vw) = vertex_weights.as_mut() {
            let tok = toks
                .next()
                .ok_or_else(|| Error::parse(GRAPH_SOURCE, line_no, "missing vertex weight"))?;
            let w: f64 = parse_num(tok, GRAPH_SOURCE, line_no)?;
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::parse(
                    GRAPH_SOURCE,
                    line_no,
                    "vertex weight must be positive",
                ));
            }
            vw.push(w);
        }
        while let Some(tok) = toks.next() {
            let id: usize = parse_num(tok, GRAPH_SOURCE, line_no)?;
            if id == 0 || id > n {
                return Err(Error::parse(
                    GRAPH_SOURCE,
                    line_no,
                    format!("neighbor id {id} outside 1..={n}"),
                ));
            }
            let u = offsets.len() - 1;
            if id - 1 == u {
                return Err(Error::parse(GRAPH_SOURCE, line_no, "self-loop"));
            }
            neighbors.push(id - 1);
            if let Some(ew) = edge_weights.as_mut() {
                let tok = toks.next().ok_or_else(|| {
                    Error::parse(
                        GRAPH_SOURCE,
                        line_no,
                        format!("missing weight for edge to {id}"),
                    )
                })?;
                let w: f64 = parse_num(tok, GRAPH_SOURCE, line_no)?;
                if !(w > 0.0 && w.is_finite()) {
                    return Err(Error::parse(
                        GRAPH_SOURCE,
                        line_no,
                        "edge weight must be positive",
                    ));
                }
                ew.push(w);
            }
        }
        offsets.push(neighbors.len());
    }

    // Symmetry, with line numbers for the offending entry.
    for u in 0..n {
        for slot in offsets[u]..offsets[u + 1] {
            let v = neighbors[slot];
            let back = neighbors[offsets[v]..offsets[v + 1]]
                .iter()
                .position(|&x| x == u);
            match back {
                None => {
                    return Err(Error::parse(
                        GRAPH_SOURCE,
                        line_of[u],
                        format!("edge {}->{} has no reverse edge", u + 1, v + 1),
                    ))
                }
                Some(b) => {
                    if let Some(ew) = &edge_weights {
                        if ew[slot] != ew[offsets[v] + b] {
                            return Err(Error::parse(
                                GRAPH_SOURCE,
                                line_of[u],
                                format!("edge {}-{} has asymmetric weight", u + 1, v + 1),
                            ));
                        }
                    }
                }
            }
        }
    }
    if neighbors.len() != 2 * m {
        return Err(Error::parse(
            GRAPH_SOURCE,
            header_line,
            format!(
                "header announces {m} edges but adjacency holds {}",
                neighbors.len() / 2
            ),
        ));
    }

    let coords = read_coordinates(coord_text, n)?;
    GeometricGraph::new(offsets, neighbors, edge_weights, coords, vertex_weights)
}

fn read_coordinates(text: impl Read, n: usize) -> Result<Vec<Point>> {
    let mut coords = Vec::with_capacity(n);
    let mut dim = None;
    for (i, line) in BufReader::new(text).lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        if coords.len() == n {
            return Err(Error::parse(
                COORD_SOURCE,
                line_no,
                format!("more than {n} coordinate lines"),
            ));
        }
        let values = line
            .split_whitespace()
            .map(|t| parse_num::<f64>(t, COORD_SOURCE, line_no))
            .collect::<Result<Vec<_>>>()?;
        let d = *dim.get_or_insert(values.len());
        if values.len() != d {
            return Err(Error::parse(
                COORD_SOURCE,
                line_no,
                format!("expected {d} coordinates, found {}", values.len()),
            ));
        }
        let p =
            Point::new(&values).map_err(|e| Error::parse(COORD_SOURCE, line_no, e.to_string()))?;
        coords.push(p);
    }
    if coords.len() != n {
        return Err(Error::parse(
            COORD_SOURCE,
            coords.len() + 1,
            format!("expected {n} coordinate lines, found {}", coords.len()),
        ));
    }
    Ok(coords)
}

/// Writes `graph` in METIS format. The fmt code is emitted only when vertex or
/// edge weights are present.
pub fn write_metis_graph(graph: &GeometricGraph, mut sink: impl Write) -> Result<()> {
    let weighted_vertices = !graph.has_unit_vertex_weights();
    let weighted_edges = graph.edge_weights().is_some();
    write!(sink, "{} {}", graph.num_vertices(), graph.num_edges())?;
    if weighted_vertices || weighted_edges {
        write!(
            sink,
            " 0{}{}",
            u8::from(weighted_vertices),
            u8::from(weighted_edges)
        )?;
    }
    writeln!(sink)?;
    let mut line = String::new();
    for v in 0..graph.num_vertices() {
        line.clear();
        let mut fields: Vec<String> = Vec::new();
        if weighted_vertices {
            fields.push(graph.vertex_weights()[v].to_string());
        }
        for (u, w) in graph.weighted_neighbors(v) {
            fields.push((u + 1).to_string());
            if weighted_edges {
                fields.push(w.to_string());
            }
        }
        line.push_str(&fields.join(" "));
        writeln!(sink, "{line}")?;
    }
    sink.flush()?;
    Ok(())
}

/// One line per vertex, coordinates in shortest round-trip decimal form.
pub fn write_coordinates(graph: &GeometricGraph, mut sink: impl Write) -> Result<()> {
    for p in graph.coords() {
        let fields: Vec<String> = p.coords().iter().map(f64::to_string).collect();
        writeln!(sink, "{}", fields.join(" "))?;
    }
    sink.flush()?;
    Ok(())
}

/// One decimal block id per line, vertex order.
pub fn write_partition(part: &Partition, mut sink: impl Write) -> Result<()> {
    for &b in part.assignment() {
        writeln!(sink, "{b}")?;
    }
    sink.flush()?;
    Ok(())
}

/// Reads a partition file. Without `k` the block count is `max id + 1`.
pub fn read_partition(text: impl Read, k: Option<usize>) -> Result<Partition> {
    let mut assignment = Vec::new();
    for (i, line) in BufReader::new(text).lines().enumerate() {
        let line = line?;
        let tok = line.trim();
        if tok.is_empty() {
            continue;
        }
        assignment.push(parse_num::<usize>(tok, "partition", i + 1)?);
    }
    match k {
        Some(k) => Partition::new(assignment, k),
        None => Partition::from_assignment(assignment),
    }
}
