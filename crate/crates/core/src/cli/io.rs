//! Readers and writers for every on-disk format. Writers go through a
//! temporary file in the target directory and an atomic rename.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{Labeling, Network, VectorDataset};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(path))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| io_err(path)(e.error))?;
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(io_err(path))
}

/// Non-blank lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

pub fn format_vectors(data: &VectorDataset) -> String {
    let mut out = String::new();
    for row in data.rows() {
        for (d, v) in row.iter().enumerate() {
            if d > 0 {
                out.push(',');
            }
            write!(out, "{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn parse_vectors(text: &str, path: &Path) -> Result<VectorDataset> {
    let mut values = Vec::new();
    let mut q = None;
    let mut n = 0;
    for (line, l) in content_lines(text) {
        let row: Vec<f64> = l
            .split(',')
            .map(|f| {
                let f = f.trim();
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(path, line, format!("not a finite number: {f:?}")))
            })
            .collect::<Result<_>>()?;
        match q {
            None => q = Some(row.len()),
            Some(q) if q != row.len() => {
                return Err(parse_err(path, line, format!("expected {q} fields, found {}", row.len())));
            }
            _ => {}
        }
        values.extend(row);
        n += 1;
    }
    let q = q.ok_or_else(|| parse_err(path, 1, "no data rows"))?;
    VectorDataset::new(n, q, values)
}

pub fn read_vectors(path: &Path) -> Result<VectorDataset> {
    parse_vectors(&read_text(path)?, path)
}

pub fn write_vectors(path: &Path, data: &VectorDataset) -> Result<()> {
    atomic_write(path, format_vectors(data).as_bytes())
}

pub fn format_edges(net: &Network) -> String {
    let mut out = format!("n {}\n", net.n());
    for (i, j) in net.edges() {
        writeln!(out, "{} {}", i + 1, j + 1).unwrap();
    }
    out
}

pub fn parse_edges(text: &str, path: &Path) -> Result<Network> {
    let mut lines = content_lines(text);
    let (line, header) = lines.next().ok_or_else(|| parse_err(path, 1, "missing `n <N>` header"))?;
    let n = match header.split_whitespace().collect::<Vec<_>>().as_slice() {
        ["n", count] => count
            .parse::<usize>()
            .map_err(|_| parse_err(path, line, format!("bad node count {count:?}")))?,
        _ => return Err(parse_err(path, line, "expected `n <N>` header")),
    };
    let mut net = Network::empty(n);
    for (line, l) in lines {
        let fields: Vec<&str> = l.split_whitespace().collect();
        let [u, v] = fields.as_slice() else {
            return Err(parse_err(path, line, "expected two node indices"));
        };
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| parse_err(path, line, format!("bad node index {s:?}")))
        };
        let (u, v) = (parse(u)?, parse(v)?);
        if u == v {
            return Err(parse_err(path, line, format!("self-loop on node {u}")));
        }
        if u == 0 || v == 0 || u > n || v > n {
            return Err(parse_err(path, line, format!("node index out of range 1..={n}")));
        }
        if u > v {
            return Err(parse_err(path, line, format!("pair {u} {v} must be written with u < v")));
        }
        if net.has_edge(u - 1, v - 1) {
            return Err(parse_err(path, line, format!("duplicate pair {u} {v}")));
        }
        net.set_edge(u - 1, v - 1);
    }
    Ok(net)
}

pub fn read_edges(path: &Path) -> Result<Network> {
    parse_edges(&read_text(path)?, path)
}

pub fn write_edges(path: &Path, net: &Network) -> Result<()> {
    atomic_write(path, format_edges(net).as_bytes())
}

pub fn format_labels(labeling: &Labeling) -> String {
    labeling.labels().iter().map(|l| format!("{}\n", l + 1)).collect()
}

pub fn parse_labels(text: &str, path: &Path) -> Result<Labeling> {
    let labels = content_lines(text)
        .map(|(line, l)| match l.parse::<usize>() {
            Ok(v) if v >= 1 => Ok(v - 1),
            _ => Err(parse_err(path, line, format!("expected a label >= 1, found {l:?}"))),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Labeling::from_labels(labels))
}

pub fn read_labels(path: &Path) -> Result<Labeling> {
    parse_labels(&read_text(path)?, path)
}

pub fn write_labels(path: &Path, labeling: &Labeling) -> Result<()> {
    atomic_write(path, format_labels(labeling).as_bytes())
}

/// One labeling per line, 1-based, comma-separated.
pub fn format_samples(samples: &[Labeling]) -> String {
    let mut out = String::new();
    for s in samples {
        let line: Vec<String> = s.labels().iter().map(|l| (l + 1).to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_samples(text: &str, path: &Path) -> Result<Vec<Labeling>> {
    let mut n = None;
    content_lines(text)
        .map(|(line, l)| {
            let labels = l
                .split(',')
                .map(|f| match f.trim().parse::<usize>() {
                    Ok(v) if v >= 1 => Ok(v - 1),
                    _ => Err(parse_err(path, line, format!("expected a label >= 1, found {f:?}"))),
                })
                .collect::<Result<Vec<_>>>()?;
            if *n.get_or_insert(labels.len()) != labels.len() {
                return Err(parse_err(path, line, "labelings differ in length"));
            }
            Ok(Labeling::from_labels(labels))
        })
        .collect()
}

pub fn format_matrix(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{}", m[(i, j)]).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Reads a square co-clustering matrix with entries in `[0, 1]`.
pub fn parse_coclustering(text: &str, path: &Path) -> Result<DMatrix<f64>> {
    let data = parse_vectors(text, path)?;
    if data.n() != data.q() {
        return Err(parse_err(path, 1, format!("matrix is {}x{}, not square", data.n(), data.q())));
    }
    for (i, row) in data.rows().enumerate() {
        if let Some(v) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(parse_err(path, i + 1, format!("entry {v} outside [0, 1]")));
        }
    }
    let n = data.n();
    Ok(DMatrix::from_fn(n, n, |i, j| data.row(i)[j]))
}

pub fn read_coclustering(path: &Path) -> Result<DMatrix<f64>> {
    parse_coclustering(&read_text(path)?, path)
}

/// Object order with objects grouped by label, ties by index.
pub fn map_order(labeling: &Labeling) -> Vec<usize> {
    let mut order: Vec<usize> = (0..labeling.len()).collect();
    order.sort_by_key(|&i| (labeling.get(i), i));
    order
}

/// Binary 8-bit graymap of `m[order[i], order[j]]`, pixel `round(255·v)`.
pub fn encode_pgm(m: &DMatrix<f64>, order: &[usize]) -> Vec<u8> {
    let n = order.len();
    let mut out = format!("P5\n{n} {n}\n255\n").into_bytes();
    for &i in order {
        for &j in order {
            out.push((255.0 * m[(i, j)].clamp(0.0, 1.0)).round() as u8);
        }
    }
    out
}

/// Parses a binary graymap written by [`encode_pgm`] into rows of pixels.
pub fn decode_pgm(bytes: &[u8], path: &Path) -> Result<DMatrix<u8>> {
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(parse_err(path, 1, "truncated header"));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1;
    let num = |s: &str| s.parse::<usize>().map_err(|_| parse_err(path, 1, format!("bad header field {s:?}")));
    if fields[0] != "P5" || num(&fields[3])? != 255 {
        return Err(parse_err(path, 1, "not an 8-bit binary graymap"));
    }
    let (w, h) = (num(&fields[1])?, num(&fields[2])?);
    let pixels = bytes.get(pos..pos + w * h).ok_or_else(|| parse_err(path, 1, "truncated pixel data"))?;
    Ok(DMatrix::from_row_slice(h, w, pixels))
}
