//! JSON formats for spaces and weighted trees.
//!
//! Space file:
//!
//! ```json
//! {"q": 1.0, "points": ["0", "x", "y"], "base": "0",
//!  "dist": [[0, 1, 1], [1, 0, 1], [1, 1, 0]]}
//! ```
//!
//! Weighted tree file:
//!
//! ```json
//! {"q": 0.5, "vertices": ["0", "z", "x", "y"], "root": "0",
//!  "edges": [{"u": "0", "v": "z", "w": 5.83}, {"u": "z", "v": "x", "w": 1},
//!            {"u": "z", "v": "y", "w": 1}]}
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::PMetricSpace;
use crate::tree_metric::WeightedRootedTree;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceFile {
    pub q: f64,
    pub points: Vec<String>,
    pub base: String,
    pub dist: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeEntry {
    pub u: String,
    pub v: String,
    pub w: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeFile {
    pub q: f64,
    pub vertices: Vec<String>,
    pub root: String,
    pub edges: Vec<EdgeEntry>,
}

fn position(labels: &[String], label: &str, what: &str) -> Result<usize> {
    labels
        .iter()
        .position(|l| l == label)
        .ok_or_else(|| Error::input(format!("{what} {label:?} is not a listed point")))
}

impl SpaceFile {
    pub fn into_space(self) -> Result<PMetricSpace> {
        let base = position(&self.points, &self.base, "base")?;
        PMetricSpace::new(self.points, base, self.q, self.dist)
    }

    pub fn from_space(space: &PMetricSpace) -> Self {
        SpaceFile {
            q: space.q(),
            points: space.labels().to_vec(),
            base: space.label(space.base()).to_string(),
            dist: space.matrix(),
        }
    }
}

impl TreeFile {
    /// The tree and the exponent `q` of its path metric.
    pub fn into_tree(self) -> Result<(WeightedRootedTree, f64)> {
        let root = position(&self.vertices, &self.root, "root")?;
        let edges = self
            .edges
            .iter()
            .map(|e| {
                Ok((
                    position(&self.vertices, &e.u, "edge end")?,
                    position(&self.vertices, &e.v, "edge end")?,
                    e.w,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((WeightedRootedTree::from_edges(self.vertices, root, &edges)?, self.q))
    }

    pub fn from_tree(tree: &WeightedRootedTree, q: f64) -> Self {
        let l = tree.labels();
        TreeFile {
            q,
            vertices: l.to_vec(),
            root: l[tree.root()].clone(),
            edges: tree
                .edges()
                .into_iter()
                .map(|(u, v, w)| EdgeEntry { u: l[u].clone(), v: l[v].clone(), w })
                .collect(),
        }
    }
}

pub fn parse_space(json: &str) -> Result<PMetricSpace> {
    serde_json::from_str::<SpaceFile>(json)?.into_space()
}

pub fn parse_tree(json: &str) -> Result<(WeightedRootedTree, f64)> {
    serde_json::from_str::<TreeFile>(json)?.into_tree()
}

pub fn read_space(path: &Path) -> Result<PMetricSpace> {
    parse_space(&std::fs::read_to_string(path)?)
}

pub fn read_tree(path: &Path) -> Result<(WeightedRootedTree, f64)> {
    parse_tree(&std::fs::read_to_string(path)?)
}

pub fn space_to_json(space: &PMetricSpace) -> Result<String> {
    Ok(serde_json::to_string_pretty(&SpaceFile::from_space(space))?)
}

pub fn tree_to_json(tree: &WeightedRootedTree, q: f64) -> Result<String> {
    Ok(serde_json::to_string_pretty(&TreeFile::from_tree(tree, q))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn space_round_trip() {
        let s = parse_space(r#"{"q": 1, "points": ["0","x","y"], "base": "x", "dist": [[0,1,1],[1,0,1],[1,1,0]]}"#)
            .unwrap();
        assert_eq!(s.base(), 1);
        assert_eq!(parse_space(&space_to_json(&s).unwrap()).unwrap(), s);
    }

    #[test]
    fn tree_round_trip() {
        let json = r#"{"q": 0.5, "vertices": ["0","x","y"], "root": "0",
            "edges": [{"u":"0","v":"x","w":1},{"u":"x","v":"y","w":2}]}"#;
        let (t, q) = parse_tree(json).unwrap();
        assert_eq!(q, 0.5);
        assert_eq!(t.parent(2), Some(1));
        let (t2, _) = parse_tree(&tree_to_json(&t, q).unwrap()).unwrap();
        assert_eq!(t2, t);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(matches!(parse_space("{"), Err(Error::Json(_))));
        let bad = r#"{"q": 1, "points": ["0","x"], "base": "w", "dist": [[0,1],[1,0]]}"#;
        assert!(matches!(parse_space(bad), Err(Error::Input(_))));
        let invalid = r#"{"q": 0.5, "points": ["0","x","y"], "base": "0", "dist": [[0,1,5],[1,0,1],[5,1,0]]}"#;
        assert!(matches!(parse_space(invalid), Err(Error::InvalidMetric { .. })));
    }
}
