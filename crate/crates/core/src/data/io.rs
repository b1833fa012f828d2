//! Reading and writing multiplexes as edge lists or adjacency CSV files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{infer_family, Multiplex, Network};
use crate::distributions::EdgeFamily;
use crate::error::{validation, Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const EDGE_LIST_FILE: &str = "edges.csv";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputFormat {
    /// `layer,i,j,w` rows with 1-based layer and node indices.
    EdgeList,
    /// One comma-separated integer matrix per layer, or one stacked file with
    /// blank lines between layers.
    AdjacencyCsv,
}

/// Sidecar describing a stored multiplex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub n_nodes: usize,
    pub n_layers: usize,
    pub directed: bool,
    /// Inferred from the weights when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<EdgeFamily>,
    pub labels: Vec<String>,
    pub format: InputFormat,
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn parse_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), message: message.into() }
}

fn parse_weight(path: &Path, field: &str) -> Result<u32> {
    let field = field.trim();
    if let Ok(w) = field.parse::<u32>() {
        return Ok(w);
    }
    match field.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.fract() == 0.0 && x <= u32::MAX as f64 => Ok(x as u32),
        Ok(x) if x < 0.0 => Err(parse_err(path, format!("negative weight {field}"))),
        _ => Err(parse_err(path, format!("weight {field:?} is not a non-negative integer"))),
    }
}

fn parse_index(path: &Path, field: &str, what: &str) -> Result<usize> {
    match field.trim().parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v),
        _ => Err(parse_err(path, format!("{what} {field:?} is not a 1-based index"))),
    }
}

/// Loads a multiplex from a directory (with an optional `manifest.json`) or a single file.
///
/// A directory holds `edges.csv` for edge lists, or `<label>.csv` per layer for
/// adjacency matrices. A single adjacency file is read as a stacked matrix file.
/// Without a manifest, N and M of an edge list are taken from the largest indices
/// seen, and the family is inferred from the weights.
pub fn load_multiplex(path: &Path, format: InputFormat, directed: bool) -> Result<Multiplex> {
    let (dir, file) = if path.is_dir() {
        (path.to_path_buf(), None)
    } else if path.is_file() {
        (path.parent().map(Path::to_path_buf).unwrap_or_default(), Some(path.to_path_buf()))
    } else {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("{} does not exist", path.display()),
        )));
    };
    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest = if manifest_path.is_file() { Some(read_manifest(&manifest_path)?) } else { None };
    if let Some(m) = &manifest {
        if m.directed != directed {
            return Err(validation(format!(
                "manifest says directed={} but directed={directed} was requested",
                m.directed
            )));
        }
    }

    let (layers, labels) = match format {
        InputFormat::EdgeList => {
            let file = file.unwrap_or_else(|| dir.join(EDGE_LIST_FILE));
            read_edge_list(&file, manifest.as_ref(), directed)?
        }
        InputFormat::AdjacencyCsv => match file {
            Some(f) => {
                let mats = read_stacked_adjacency(&f)?;
                let labels = match &manifest {
                    Some(m) if m.labels.len() == mats.len() => m.labels.clone(),
                    _ => (1..=mats.len()).map(|m| format!("layer_{m}")).collect(),
                };
                (mats, labels)
            }
            None => {
                let files: Vec<(PathBuf, String)> = match &manifest {
                    Some(m) => m.labels.iter().map(|l| (dir.join(format!("{l}.csv")), l.clone())).collect(),
                    None => {
                        let mut v: Vec<(PathBuf, String)> = fs::read_dir(&dir)?
                            .filter_map(|e| e.ok().map(|e| e.path()))
                            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
                            .map(|p| {
                                let stem = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
                                (p, stem)
                            })
                            .collect();
                        v.sort_by(|a, b| a.1.cmp(&b.1));
                        v
                    }
                };
                if files.is_empty() {
                    return Err(validation(format!("no layer files in {}", dir.display())));
                }
                let mut mats = Vec::with_capacity(files.len());
                let mut labels = Vec::with_capacity(files.len());
                for (p, l) in files {
                    let text = fs::read_to_string(&p)?;
                    let mut block = parse_matrix_block(&p, text.lines())?;
                    mats.append(&mut block);
                    labels.push(l);
                }
                if mats.len() != labels.len() {
                    return Err(validation("a per-layer adjacency file holds more than one matrix"));
                }
                (mats, labels)
            }
        },
    };

    let family = match manifest.as_ref().and_then(|m| m.family) {
        Some(f) => f,
        None => infer_family(layers.iter().flat_map(|(_, w)| w.iter().copied())),
    };
    let n = layers[0].0;
    let mut networks = Vec::with_capacity(layers.len());
    for (size, w) in layers {
        if size != n {
            return Err(validation(format!("layers have different sizes ({n} and {size})")));
        }
        networks.push(Network::new(n, w, directed, family)?);
    }
    if let Some(m) = &manifest {
        if m.n_nodes != n || m.n_layers != networks.len() {
            return Err(validation(format!(
                "manifest declares N={}, M={} but data has N={n}, M={}",
                m.n_nodes,
                m.n_layers,
                networks.len()
            )));
        }
    }
    Multiplex::new(networks, labels)
}

type Layers = (Vec<(usize, Vec<u32>)>, Vec<String>);

fn read_edge_list(path: &Path, manifest: Option<&Manifest>, directed: bool) -> Result<Layers> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers = reader.headers()?.clone();
    let want = ["layer", "i", "j", "w"];
    if headers.len() != 4 || headers.iter().zip(want).any(|(h, w)| h != w) {
        return Err(parse_err(path, "edge list header must be `layer,i,j,w`"));
    }
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let layer_field = &rec[0];
        let layer = match (layer_field.parse::<usize>(), manifest) {
            (Ok(l), _) if l >= 1 => l,
            (_, Some(m)) => match m.labels.iter().position(|l| l == layer_field) {
                Some(p) => p + 1,
                None => return Err(parse_err(path, format!("unknown layer {layer_field:?}"))),
            },
            _ => return Err(parse_err(path, format!("layer {layer_field:?} is not a 1-based index"))),
        };
        let i = parse_index(path, &rec[1], "node")?;
        let j = parse_index(path, &rec[2], "node")?;
        let w = parse_weight(path, &rec[3])?;
        if i == j {
            return Err(validation(format!("self-loop at node {i} in layer {layer}")));
        }
        rows.push((layer, i, j, w));
    }
    let n = match manifest {
        Some(m) => m.n_nodes,
        None => rows.iter().map(|r| r.1.max(r.2)).max().unwrap_or(0),
    };
    let n_layers = match manifest {
        Some(m) => m.n_layers,
        None => rows.iter().map(|r| r.0).max().unwrap_or(0),
    };
    if n == 0 || n_layers == 0 {
        return Err(validation("edge list without a manifest must contain at least one row"));
    }
    let mut mats = vec![vec![0u32; n * n]; n_layers];
    let mut seen = vec![vec![false; n * n]; n_layers];
    for (layer, i, j, w) in rows {
        if layer > n_layers || i > n || j > n {
            return Err(validation(format!("row ({layer},{i},{j}) exceeds N={n}, M={n_layers}")));
        }
        let (i, j) = (i - 1, j - 1);
        let mat = &mut mats[layer - 1];
        let seen = &mut seen[layer - 1];
        let cells: &[(usize, usize)] = if directed { &[(i, j)] } else { &[(i, j), (j, i)] };
        for &(a, b) in cells {
            let idx = a * n + b;
            if seen[idx] && mat[idx] != w {
                return Err(validation(format!(
                    "conflicting weights for dyad ({},{}) in layer {layer}",
                    a + 1,
                    b + 1
                )));
            }
            seen[idx] = true;
            mat[idx] = w;
        }
    }
    let labels = match manifest {
        Some(m) => m.labels.clone(),
        None => (1..=n_layers).map(|m| format!("layer_{m}")).collect(),
    };
    Ok((mats.into_iter().map(|w| (n, w)).collect(), labels))
}

fn read_stacked_adjacency(path: &Path) -> Result<Vec<(usize, Vec<u32>)>> {
    let text = fs::read_to_string(path)?;
    parse_matrix_block(path, text.lines())
}

/// Parses one or more square integer matrices separated by blank or `#` lines.
fn parse_matrix_block<'a>(path: &Path, lines: impl Iterator<Item = &'a str>) -> Result<Vec<(usize, Vec<u32>)>> {
    let mut out = Vec::new();
    let mut rows: Vec<Vec<u32>> = Vec::new();
    let flush = |rows: &mut Vec<Vec<u32>>, out: &mut Vec<(usize, Vec<u32>)>| -> Result<()> {
        if rows.is_empty() {
            return Ok(());
        }
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(parse_err(path, format!("matrix with {n} rows is not square")));
        }
        out.push((n, rows.drain(..).flatten().collect()));
        Ok(())
    };
    for line in lines {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            flush(&mut rows, &mut out)?;
            continue;
        }
        let row = t.split(',').map(|f| parse_weight(path, f)).collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    flush(&mut rows, &mut out)?;
    if out.is_empty() {
        return Err(parse_err(path, "no adjacency matrix found"));
    }
    Ok(out)
}

/// Writes the multiplex and its manifest into `dir`, creating it if needed.
pub fn save_multiplex(dir: &Path, mx: &Multiplex, format: InputFormat) -> Result<()> {
    fs::create_dir_all(dir)?;
    let n = mx.n_nodes();
    let manifest = Manifest {
        n_nodes: n,
        n_layers: mx.n_layers(),
        directed: mx.is_directed(),
        family: Some(mx.family()),
        labels: mx.labels().to_vec(),
        format,
    };
    match format {
        InputFormat::EdgeList => {
            let mut w = csv::Writer::from_path(dir.join(EDGE_LIST_FILE))?;
            w.write_record(["layer", "i", "j", "w"])?;
            for (m, net) in mx.networks().iter().enumerate() {
                for (i, j) in net.dyads() {
                    let y = net.get(i, j);
                    if y > 0 {
                        w.write_record(&[(m + 1).to_string(), (i + 1).to_string(), (j + 1).to_string(), y.to_string()])?;
                    }
                }
            }
            w.flush()?;
        }
        InputFormat::AdjacencyCsv => {
            for (net, label) in mx.networks().iter().zip(mx.labels()) {
                if label.is_empty() || label.contains(['/', '\\']) || label == MANIFEST_FILE {
                    return Err(validation(format!("label {label:?} cannot be used as a file name")));
                }
                let mut text = String::with_capacity(n * n * 2);
                for i in 0..n {
                    let row: Vec<String> = (0..n).map(|j| net.get(i, j).to_string()).collect();
                    text.push_str(&row.join(","));
                    text.push('\n');
                }
                fs::write(dir.join(format!("{label}.csv")), text)?;
            }
        }
    }
    fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}
