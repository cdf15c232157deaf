//! Subdivision history: which cone was split, by what, into which children.

use num_bigint::BigInt;

use crate::cone::SimplicialCone;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Origin {
    Root,
    /// Stellar subdivision of the parent by this (primitive) vector.
    Stellar(Vec<BigInt>),
    /// Image of a unimodular piece under the prime transfer for `p`.
    Transfer(BigInt),
}

#[derive(Clone, Debug)]
pub struct ProvenanceNode {
    pub cone: SimplicialCone,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub origin: Origin,
    /// Number of subdivision steps between the root and this cone.
    pub depth: usize,
}

/// Append-only arena; node 0 is the root.
#[derive(Clone, Debug)]
pub struct ProvenanceTree {
    nodes: Vec<ProvenanceNode>,
}

impl ProvenanceTree {
    pub fn new(root: SimplicialCone) -> Self {
        Self {
            nodes: vec![ProvenanceNode {
                cone: root,
                parent: None,
                children: Vec::new(),
                origin: Origin::Root,
                depth: 0,
            }],
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: usize) -> &ProvenanceNode {
        &self.nodes[id]
    }

    pub fn cone(&self, id: usize) -> &SimplicialCone {
        &self.nodes[id].cone
    }

    pub fn nodes(&self) -> &[ProvenanceNode] {
        &self.nodes
    }

    pub fn add_child(&mut self, parent: usize, cone: SimplicialCone, origin: Origin) -> usize {
        let id = self.nodes.len();
        let depth = self.nodes[parent].depth + 1;
        self.nodes.push(ProvenanceNode {
            cone,
            parent: Some(parent),
            children: Vec::new(),
            origin,
            depth,
        });
        self.nodes[parent].children.push(id);
        id
    }

    /// Copies `sub` below node `at`, identifying `sub`'s root with `at`.
    /// Returns the new id of every node of `sub`.
    pub fn graft(&mut self, at: usize, sub: &ProvenanceTree) -> Vec<usize> {
        let mut ids = vec![at; sub.len()];
        for (old, node) in sub.nodes.iter().enumerate().skip(1) {
            let parent = ids[node.parent.expect("non-root node has a parent")];
            ids[old] = self.add_child(parent, node.cone.clone(), node.origin.clone());
        }
        ids
    }

    /// Every (parent, child) pair.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter_map(|(id, n)| n.parent.map(|p| (p, id)))
    }

    pub fn leaves(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&id| self.nodes[id].children.is_empty())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graft_keeps_structure() {
        let c = SimplicialCone::from_rows(vec![vec![2, 1], vec![1, 2]]).unwrap();
        let x: Vec<BigInt> = vec![1.into(), 1.into()];
        let mut sub = ProvenanceTree::new(c.clone());
        for kid in c.stellar_subdivide(&x).unwrap() {
            sub.add_child(0, kid, Origin::Stellar(x.clone()));
        }
        let mut tree = ProvenanceTree::new(SimplicialCone::new(&crate::IntMatrix::identity(2)).unwrap());
        let leaf = tree.add_child(0, c, Origin::Root);
        let ids = tree.graft(leaf, &sub);
        assert_eq!(ids[0], leaf);
        assert_eq!(tree.len(), 4);
        assert_eq!(tree.node(ids[1]).depth, 2);
        assert_eq!(tree.leaves().collect::<Vec<_>>(), vec![ids[1], ids[2]]);
        assert_eq!(tree.edges().count(), 3);
    }
}
