//! JSON form of constructive sets.

use crate::error::{CliError, Result};
use fragrd_core::geom::Node;
use fragrd_core::{Point, SetExpr};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum NodeDoc {
    Ball { center: Vec<f64>, radius: f64 },
    Box { min: Vec<f64>, max: Vec<f64> },
    Union { parts: Vec<NodeDoc> },
    Intersect { parts: Vec<NodeDoc> },
    Diff { a: Box<NodeDoc>, b: Box<NodeDoc> },
}

/// `{"dim": N, "node": {...}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetDoc {
    pub dim: usize,
    pub node: NodeDoc,
}

fn point(dim: usize, c: &[f64], what: &str) -> Result<Point> {
    if c.len() != dim {
        return Err(CliError::config(format!("{what} has {} coordinates, expected {dim}", c.len())));
    }
    if c.iter().any(|v| !v.is_finite()) {
        return Err(CliError::config(format!("{what} has a non-finite coordinate")));
    }
    Ok(Point::new(c))
}

fn coords(dim: usize, p: &Point) -> Vec<f64> {
    p.0[..dim].to_vec()
}

impl NodeDoc {
    fn to_node(&self, dim: usize) -> Result<Node> {
        Ok(match self {
            NodeDoc::Ball { center, radius } => Node::Ball { center: point(dim, center, "ball center")?, radius: *radius },
            NodeDoc::Box { min, max } => Node::Box { min: point(dim, min, "box min")?, max: point(dim, max, "box max")? },
            NodeDoc::Union { parts } => Node::Union(parts.iter().map(|p| p.to_node(dim)).collect::<Result<_>>()?),
            NodeDoc::Intersect { parts } => Node::Intersect(parts.iter().map(|p| p.to_node(dim)).collect::<Result<_>>()?),
            NodeDoc::Diff { a, b } => Node::Diff(Box::new(a.to_node(dim)?), Box::new(b.to_node(dim)?)),
        })
    }

    fn from_node(dim: usize, n: &Node) -> NodeDoc {
        match n {
            Node::Ball { center, radius } => NodeDoc::Ball { center: coords(dim, center), radius: *radius },
            Node::Box { min, max } => NodeDoc::Box { min: coords(dim, min), max: coords(dim, max) },
            Node::Union(p) => NodeDoc::Union { parts: p.iter().map(|c| NodeDoc::from_node(dim, c)).collect() },
            Node::Intersect(p) => NodeDoc::Intersect { parts: p.iter().map(|c| NodeDoc::from_node(dim, c)).collect() },
            Node::Diff(a, b) => NodeDoc::Diff { a: Box::new(NodeDoc::from_node(dim, a)), b: Box::new(NodeDoc::from_node(dim, b)) },
        }
    }
}

impl SetDoc {
    pub fn to_expr(&self) -> Result<SetExpr> {
        Ok(SetExpr::new(self.dim, self.node.to_node(self.dim)?)?)
    }

    pub fn from_expr(e: &SetExpr) -> SetDoc {
        SetDoc { dim: e.dim(), node: NodeDoc::from_node(e.dim(), e.node()) }
    }
}
