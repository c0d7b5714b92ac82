//! Instance files: a JSON descriptor pointing at a CSV edge list `i,j,cost`.
//!
//! ```json
//! { "node_count": 4, "depot": 1, "index_base": 1, "edges": "four.csv" }
//! ```
//!
//! `edges` is resolved relative to the descriptor. Every unordered pair of
//! distinct nodes must appear once (a repeated pair must repeat the same
//! cost). Internally the depot becomes node 0 and the other nodes keep their
//! relative order.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{TspError, TspInstance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceDescriptor {
    pub node_count: usize,
    #[serde(default)]
    pub depot: usize,
    /// Label of the first node in the edge list (0 or 1).
    #[serde(default)]
    pub index_base: usize,
    pub edges: PathBuf,
}

/// An instance plus the mapping from internal nodes back to file labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelledInstance {
    pub instance: TspInstance,
    pub labels: Vec<usize>,
}

impl LabelledInstance {
    /// File labels of a closed tour, depot first and last.
    pub fn label_route(&self, tour: &super::Tour) -> Vec<usize> {
        let mut route: Vec<usize> = tour.route().iter().map(|&v| self.labels[v]).collect();
        route.push(self.labels[0]);
        route
    }
}

#[derive(Debug, Deserialize)]
struct EdgeRow {
    i: usize,
    j: usize,
    cost: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum InstanceFileError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {source}")]
    Invalid {
        path: PathBuf,
        #[source]
        source: TspError,
    },
    #[error("depot {depot} is not a node label (base {base}, {node_count} nodes)")]
    BadDepot {
        depot: usize,
        base: usize,
        node_count: usize,
    },
}

impl InstanceFileError {
    pub fn is_io(&self) -> bool {
        matches!(self, InstanceFileError::Io { .. })
    }
}

/// Parses an edge list whose labels run from `base` to `base + node_count - 1`
/// and relabels so that `depot` becomes node 0.
pub fn read_edge_list<R: Read>(
    reader: R,
    node_count: usize,
    depot: usize,
    base: usize,
) -> Result<Result<LabelledInstance, TspError>, csv::Error> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut rows = Vec::new();
    for row in rdr.deserialize::<EdgeRow>() {
        rows.push(row?);
    }
    Ok(assemble(&rows, node_count, depot, base))
}

fn assemble(
    rows: &[EdgeRow],
    node_count: usize,
    depot: usize,
    base: usize,
) -> Result<LabelledInstance, TspError> {
    if node_count < 2 {
        return Err(TspError::EmptyInstance);
    }
    let depot_idx = depot - base;
    // internal order: depot, then the remaining file indices ascending
    let labels_idx: Vec<usize> = std::iter::once(depot_idx)
        .chain((0..node_count).filter(|&v| v != depot_idx))
        .collect();
    let mut internal = vec![0; node_count];
    for (k, &v) in labels_idx.iter().enumerate() {
        internal[v] = k;
    }

    let mut m = vec![vec![f64::NAN; node_count]; node_count];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for r in rows {
        let (i, j) = (r.i.wrapping_sub(base), r.j.wrapping_sub(base));
        if i >= node_count || j >= node_count {
            return Err(TspError::UnknownNode {
                i: r.i,
                j: r.j,
                node_count,
            });
        }
        let (a, b) = (internal[i], internal[j]);
        for (x, y) in [(a, b), (b, a)] {
            let slot = &mut m[x][y];
            if !slot.is_nan() && *slot != r.cost {
                return Err(TspError::NotSymmetric { i: r.i, j: r.j });
            }
            *slot = r.cost;
        }
    }
    for (a, row) in m.iter().enumerate() {
        if let Some(b) = row.iter().position(|c| c.is_nan()) {
            return Err(TspError::MissingEdge {
                i: labels_idx[a] + base,
                j: labels_idx[b] + base,
            });
        }
    }
    let instance = TspInstance::from_matrix(&m)?;
    Ok(LabelledInstance {
        instance,
        labels: labels_idx.iter().map(|v| v + base).collect(),
    })
}

pub fn load_instance(descriptor_path: &Path) -> Result<LabelledInstance, InstanceFileError> {
    let text = std::fs::read_to_string(descriptor_path).map_err(|source| InstanceFileError::Io {
        path: descriptor_path.to_path_buf(),
        source,
    })?;
    let desc: InstanceDescriptor =
        serde_json::from_str(&text).map_err(|source| InstanceFileError::Json {
            path: descriptor_path.to_path_buf(),
            source,
        })?;
    if desc.depot < desc.index_base || desc.depot >= desc.index_base + desc.node_count {
        return Err(InstanceFileError::BadDepot {
            depot: desc.depot,
            base: desc.index_base,
            node_count: desc.node_count,
        });
    }
    let edges_path = descriptor_path
        .parent()
        .map(|dir| dir.join(&desc.edges))
        .unwrap_or_else(|| desc.edges.clone());
    let file = std::fs::File::open(&edges_path).map_err(|source| InstanceFileError::Io {
        path: edges_path.clone(),
        source,
    })?;
    read_edge_list(file, desc.node_count, desc.depot, desc.index_base)
        .map_err(|source| InstanceFileError::Csv {
            path: edges_path.clone(),
            source,
        })?
        .map_err(|source| InstanceFileError::Invalid {
            path: edges_path,
            source,
        })
}

/// Writes the upper triangle of the cost matrix as `i,j,cost` (0-based,
/// depot = 0).
pub fn write_edge_list<W: Write>(out: W, instance: &TspInstance) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["i", "j", "cost"])?;
    let n = instance.node_count();
    for i in 0..n {
        for j in i + 1..n {
            w.write_record([i.to_string(), j.to_string(), format!("{}", instance.cost(i, j))])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::{solve_exact, tour_cost};
    use super::*;

    const FOUR: &str = "i,j,cost\n1,2,11\n1,3,7\n1,4,42\n2,3,35\n2,4,19\n3,4,12\n";

    #[test]
    fn one_based_edge_list() {
        let li = read_edge_list(FOUR.as_bytes(), 4, 1, 1).unwrap().unwrap();
        let t = solve_exact(&li.instance).unwrap();
        assert_eq!(tour_cost(&li.instance, &t).unwrap(), 49.0);
        let route = li.label_route(&t);
        assert!(route == vec![1, 3, 4, 2, 1] || route == vec![1, 2, 4, 3, 1]);
    }

    #[test]
    fn depot_relabelling() {
        let li = read_edge_list(FOUR.as_bytes(), 4, 3, 1).unwrap().unwrap();
        assert_eq!(li.labels, vec![3, 1, 2, 4]);
        assert_eq!(li.instance.cost(0, 1), 7.0);
        assert_eq!(li.instance.cost(0, 3), 12.0);
    }

    #[test]
    fn incomplete_and_conflicting_lists() {
        let missing = "i,j,cost\n0,1,1\n0,2,1\n";
        assert!(matches!(
            read_edge_list(missing.as_bytes(), 3, 0, 0).unwrap(),
            Err(TspError::MissingEdge { .. })
        ));
        let conflict = "i,j,cost\n0,1,1\n1,0,2\n0,2,1\n1,2,1\n";
        assert!(matches!(
            read_edge_list(conflict.as_bytes(), 3, 0, 0).unwrap(),
            Err(TspError::NotSymmetric { .. })
        ));
        let unknown = "i,j,cost\n0,5,1\n";
        assert!(matches!(
            read_edge_list(unknown.as_bytes(), 3, 0, 0).unwrap(),
            Err(TspError::UnknownNode { .. })
        ));
        assert!(read_edge_list("i,j,cost\n0,x,1\n".as_bytes(), 3, 0, 0).is_err());
    }

    #[test]
    fn write_then_read() {
        let inst = super::super::fixtures::random_blended(6, 2);
        let mut buf = Vec::new();
        write_edge_list(&mut buf, &inst).unwrap();
        let back = read_edge_list(buf.as_slice(), 7, 0, 0).unwrap().unwrap();
        assert_eq!(back.instance, inst);
    }

    #[test]
    fn descriptor_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("four.csv"), FOUR).unwrap();
        let desc = dir.path().join("four.json");
        std::fs::write(&desc, r#"{"node_count":4,"depot":1,"index_base":1,"edges":"four.csv"}"#).unwrap();
        let li = load_instance(&desc).unwrap();
        assert_eq!(li.instance.node_count(), 4);
        assert!(load_instance(&dir.path().join("nope.json")).unwrap_err().is_io());
        std::fs::write(&desc, r#"{"node_count":4,"depot":9,"index_base":1,"edges":"four.csv"}"#).unwrap();
        assert!(matches!(load_instance(&desc), Err(InstanceFileError::BadDepot { .. })));
    }
}
