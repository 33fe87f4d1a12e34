//! Taxonomy data model.
//!
//! A [`Tree`] is immutable once built. Nodes are addressed by [`NodeId`], a
//! dense index assigned in breadth-first order with children visited in the
//! order they appear in the source document. The root is `NodeId(0)` and the
//! non-root nodes `1..=q` are exactly the layer-by-layer, left-to-right node
//! ordering used for path indicator vectors and embedding matrices.
//!
//! The text format has one line per internal node:
//!
//! ```text
//! # comment
//! animal: elephant dog
//! elephant: african asian
//! ```
//!
//! The parent on the first line is the root. Leaves only ever appear as
//! children.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use sha2::{Digest, Sha256};

use crate::error::TreeError;

/// Index of a node inside one [`Tree`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

impl NodeId {
    pub const ROOT: NodeId = NodeId(0);

    /// Position in the breadth-first node ordering (root = 0).
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Root-to-leaf sequence of nodes. The root is always the first element.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Path(Vec<NodeId>);

impl Path {
    pub fn nodes(&self) -> &[NodeId] {
        &self.0
    }

    /// Number of nodes including the root, i.e. the layer of the leaf.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn leaf(&self) -> NodeId {
        *self.0.last().expect("paths are never empty")
    }

    /// Node at `layer` (1-based, layer 1 is the root).
    pub fn at_layer(&self, layer: usize) -> Option<NodeId> {
        layer.checked_sub(1).and_then(|i| self.0.get(i).copied())
    }

    /// Non-root nodes of the path.
    pub fn below_root(&self) -> &[NodeId] {
        &self.0[1..]
    }
}

#[derive(Clone, Debug)]
pub struct Tree {
    names: Vec<String>,
    parent: Vec<Option<NodeId>>,
    children: Vec<Vec<NodeId>>,
    layer: Vec<usize>,
    leaves: Vec<NodeId>,
    lookup: HashMap<String, NodeId>,
    depth: usize,
}

static ROOT_ONLY: [NodeId; 1] = [NodeId::ROOT];

struct Declaration {
    line: usize,
    parent: String,
    children: Vec<String>,
}

impl Tree {
    /// Parses and validates a taxonomy document.
    pub fn parse(text: &str) -> Result<Tree, TreeError> {
        let mut decls = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (parent, rest) = content.split_once(':').ok_or_else(|| TreeError::Syntax {
                line,
                reason: "expected `parent: child child ...`".into(),
            })?;
            let parent = parent.trim();
            if parent.is_empty() || parent.split_whitespace().count() != 1 {
                return Err(TreeError::Syntax {
                    line,
                    reason: "the parent must be a single non-empty id".into(),
                });
            }
            let children: Vec<String> = rest.split_whitespace().map(str::to_owned).collect();
            match children.len() {
                0 => {
                    return Err(TreeError::Syntax {
                        line,
                        reason: format!("`{parent}` lists no children"),
                    })
                }
                1 => {
                    return Err(TreeError::SingleChild {
                        line,
                        id: parent.to_owned(),
                    })
                }
                _ => {}
            }
            decls.push(Declaration {
                line,
                parent: parent.to_owned(),
                children,
            });
        }
        Self::from_declarations(decls)
    }

    /// Builds a tree from `(node, parent)` pairs; exactly one node has no
    /// parent. Children keep the order in which they are listed.
    pub fn from_parents<S: AsRef<str>>(edges: &[(S, Option<S>)]) -> Result<Tree, TreeError> {
        let mut root = None;
        let mut known: HashMap<&str, usize> = HashMap::new();
        for (i, (node, _)) in edges.iter().enumerate() {
            if known.insert(node.as_ref(), i + 1).is_some() {
                return Err(TreeError::DuplicateId {
                    line: i + 1,
                    id: node.as_ref().to_owned(),
                });
            }
        }
        let mut grouped: Vec<Declaration> = Vec::new();
        let mut slot: HashMap<&str, usize> = HashMap::new();
        for (i, (node, parent)) in edges.iter().enumerate() {
            let node = node.as_ref();
            match parent {
                None => {
                    if root.is_some() {
                        return Err(TreeError::MultipleRoots {
                            line: i + 1,
                            id: node.to_owned(),
                        });
                    }
                    root = Some(node);
                }
                Some(p) => {
                    let p = p.as_ref();
                    let Some(&pline) = known.get(p) else {
                        return Err(TreeError::UnknownParent {
                            child: node.to_owned(),
                            parent: p.to_owned(),
                        });
                    };
                    let at = *slot.entry(p).or_insert_with(|| {
                        grouped.push(Declaration {
                            line: pline,
                            parent: p.to_owned(),
                            children: Vec::new(),
                        });
                        grouped.len() - 1
                    });
                    grouped[at].children.push(node.to_owned());
                }
            }
        }
        let root = root.ok_or(TreeError::Empty)?;
        for d in &grouped {
            if d.children.len() == 1 {
                return Err(TreeError::SingleChild {
                    line: d.line,
                    id: d.parent.clone(),
                });
            }
        }
        // The root's declaration must come first.
        if let Some(pos) = grouped.iter().position(|d| d.parent == root) {
            let d = grouped.remove(pos);
            grouped.insert(0, d);
        } else {
            // A lone root is a single-node tree; it has no classes to separate.
            return Err(TreeError::Empty);
        }
        Self::from_declarations(grouped)
    }

    fn from_declarations(decls: Vec<Declaration>) -> Result<Tree, TreeError> {
        let first = decls.first().ok_or(TreeError::Empty)?;
        let root = first.parent.clone();

        let mut parent_of: HashMap<&str, &str> = HashMap::new();
        let mut children_of: HashMap<&str, &Declaration> = HashMap::new();
        for d in &decls {
            if children_of.insert(&d.parent, d).is_some() {
                return Err(TreeError::DuplicateId {
                    line: d.line,
                    id: d.parent.clone(),
                });
            }
            for c in &d.children {
                if *c == root || *c == d.parent {
                    return Err(TreeError::Cycle {
                        line: d.line,
                        id: c.clone(),
                    });
                }
                if parent_of.contains_key(c.as_str()) {
                    // A second parent: a cycle if `c` is already above `d.parent`.
                    let mut cur = d.parent.as_str();
                    let mut steps = 0;
                    while let Some(&up) = parent_of.get(cur) {
                        if up == c || steps > parent_of.len() {
                            return Err(TreeError::Cycle {
                                line: d.line,
                                id: c.clone(),
                            });
                        }
                        cur = up;
                        steps += 1;
                    }
                    return Err(TreeError::DuplicateId {
                        line: d.line,
                        id: c.clone(),
                    });
                }
                parent_of.insert(c, &d.parent);
            }
        }
        for d in &decls[1..] {
            if !parent_of.contains_key(d.parent.as_str()) {
                return Err(TreeError::MultipleRoots {
                    line: d.line,
                    id: d.parent.clone(),
                });
            }
        }

        let mut names = vec![root.clone()];
        let mut parent = vec![None];
        let mut layer = vec![1usize];
        let mut children: Vec<Vec<NodeId>> = vec![Vec::new()];
        let mut queue = VecDeque::from([NodeId::ROOT]);
        while let Some(node) = queue.pop_front() {
            let Some(decl) = children_of.get(names[node.0].as_str()) else {
                continue;
            };
            for c in &decl.children {
                let id = NodeId(names.len());
                names.push(c.clone());
                parent.push(Some(node));
                layer.push(layer[node.0] + 1);
                children.push(Vec::new());
                children[node.0].push(id);
                queue.push_back(id);
            }
        }
        let total = 1 + parent_of.len();
        if names.len() != total {
            // Every node has one parent, so unreachable nodes sit on a cycle.
            let reached: std::collections::HashSet<&str> =
                names.iter().map(String::as_str).collect();
            let d = decls
                .iter()
                .find(|d| !reached.contains(d.parent.as_str()))
                .expect("an unreachable declaration exists");
            return Err(TreeError::Cycle {
                line: d.line,
                id: d.parent.clone(),
            });
        }

        let lookup = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), NodeId(i)))
            .collect();
        let leaves = (0..names.len())
            .filter(|&i| children[i].is_empty())
            .map(NodeId)
            .collect();
        let depth = *layer.iter().max().expect("root exists");
        Ok(Tree {
            names,
            parent,
            children,
            layer,
            leaves,
            lookup,
            depth,
        })
    }

    pub fn root(&self) -> NodeId {
        NodeId::ROOT
    }

    /// Total number of nodes including the root.
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of non-root nodes.
    pub fn q(&self) -> usize {
        self.names.len() - 1
    }

    /// Number of layers, `k`.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn n_leaf(&self) -> usize {
        self.leaves.len()
    }

    /// Leaves in node order.
    pub fn leaves(&self) -> &[NodeId] {
        &self.leaves
    }

    /// Non-root nodes sorted by layer, then left to right.
    pub fn node_order(&self) -> impl ExactSizeIterator<Item = NodeId> + Clone {
        (1..self.names.len()).map(NodeId)
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = NodeId> + Clone {
        (0..self.names.len()).map(NodeId)
    }

    pub fn id(&self, node: NodeId) -> &str {
        &self.names[node.0]
    }

    pub fn node(&self, id: &str) -> Result<NodeId, TreeError> {
        self.lookup
            .get(id)
            .copied()
            .ok_or_else(|| TreeError::UnknownNode(id.to_owned()))
    }

    pub fn parent(&self, node: NodeId) -> Option<NodeId> {
        self.parent[node.0]
    }

    pub fn children(&self, node: NodeId) -> &[NodeId] {
        &self.children[node.0]
    }

    /// Children of this node's parent, the node included.
    pub fn siblings(&self, node: NodeId) -> &[NodeId] {
        match self.parent(node) {
            Some(p) => self.children(p),
            None => &ROOT_ONLY,
        }
    }

    pub fn layer(&self, node: NodeId) -> usize {
        self.layer[node.0]
    }

    pub fn is_leaf(&self, node: NodeId) -> bool {
        self.children[node.0].is_empty()
    }

    /// Nodes at `layer` in left-to-right order.
    pub fn layer_nodes(&self, layer: usize) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes().filter(move |&n| self.layer(n) == layer)
    }

    /// The ancestor of `node` at `layer`; a node is its own ancestor at its
    /// own layer.
    pub fn ancestor_at(&self, node: NodeId, layer: usize) -> Option<NodeId> {
        if layer == 0 || layer > self.layer(node) {
            return None;
        }
        let mut cur = node;
        while self.layer(cur) > layer {
            cur = self.parent(cur)?;
        }
        Some(cur)
    }

    /// Latest common ancestor of `a` and `b`.
    pub fn lca(&self, a: NodeId, b: NodeId) -> NodeId {
        let (mut a, mut b) = (a, b);
        while self.layer(a) > self.layer(b) {
            a = self.parent[a.0].expect("non-root has a parent");
        }
        while self.layer(b) > self.layer(a) {
            b = self.parent[b.0].expect("non-root has a parent");
        }
        while a != b {
            a = self.parent[a.0].expect("non-root has a parent");
            b = self.parent[b.0].expect("non-root has a parent");
        }
        a
    }

    /// Layer of the latest common ancestor.
    pub fn llca(&self, a: NodeId, b: NodeId) -> usize {
        self.layer(self.lca(a, b))
    }

    /// Same as [`Tree::llca`] but addressed by string ids.
    pub fn llca_by_id(&self, a: &str, b: &str) -> Result<usize, TreeError> {
        Ok(self.llca(self.node(a)?, self.node(b)?))
    }

    pub fn is_ancestor_or_self(&self, ancestor: NodeId, node: NodeId) -> bool {
        self.ancestor_at(node, self.layer(ancestor)) == Some(ancestor)
    }

    /// Root-to-`node` sequence, for any node.
    pub fn path_to(&self, node: NodeId) -> Vec<NodeId> {
        let mut nodes = vec![node];
        let mut cur = node;
        while let Some(p) = self.parent(cur) {
            nodes.push(p);
            cur = p;
        }
        nodes.reverse();
        nodes
    }

    pub fn path_of_leaf(&self, leaf: NodeId) -> Result<Path, TreeError> {
        if !self.is_leaf(leaf) {
            return Err(TreeError::NotALeaf(self.id(leaf).to_owned()));
        }
        Ok(Path(self.path_to(leaf)))
    }

    pub fn path_of_leaf_id(&self, leaf: &str) -> Result<Path, TreeError> {
        self.path_of_leaf(self.node(leaf)?)
    }

    /// Checks that `nodes` is a root-to-leaf chain and wraps it.
    pub fn path_from_nodes(&self, nodes: Vec<NodeId>) -> Result<Path, TreeError> {
        match nodes.first() {
            Some(&n) if n == NodeId::ROOT => {}
            _ => return Err(TreeError::InvalidPath("a path starts at the root".into())),
        }
        for w in nodes.windows(2) {
            if self.parent(w[1]) != Some(w[0]) {
                return Err(TreeError::InvalidPath(format!(
                    "`{}` is not a child of `{}`",
                    self.id(w[1]),
                    self.id(w[0])
                )));
            }
        }
        let leaf = *nodes.last().expect("checked non-empty");
        if !self.is_leaf(leaf) {
            return Err(TreeError::InvalidPath(format!(
                "path ends at internal node `{}`",
                self.id(leaf)
            )));
        }
        Ok(Path(nodes))
    }

    /// Parses a slash-joined path such as `animal/dog/herding`. A leading
    /// root id is optional.
    pub fn parse_path(&self, text: &str) -> Result<Path, TreeError> {
        let mut nodes = text
            .split('/')
            .map(|s| self.node(s.trim()))
            .collect::<Result<Vec<_>, _>>()?;
        if nodes.first() != Some(&NodeId::ROOT) {
            nodes.insert(0, NodeId::ROOT);
        }
        self.path_from_nodes(nodes)
    }

    /// Slash-joined non-root ids of a path.
    pub fn format_path(&self, path: &Path) -> String {
        path.below_root()
            .iter()
            .map(|&n| self.id(n))
            .collect::<Vec<_>>()
            .join("/")
    }

    /// All root-to-leaf paths, in leaf order.
    pub fn paths(&self) -> Vec<Path> {
        self.leaves.iter().map(|&l| Path(self.path_to(l))).collect()
    }

    /// Size of the subtree rooted at `node`, the node included.
    pub fn subtree_size(&self, node: NodeId) -> usize {
        1 + self.children(node)
            .iter()
            .map(|&c| self.subtree_size(c))
            .sum::<usize>()
    }

    /// Canonical document: internal nodes in node order, one per line.
    pub fn to_document(&self) -> String {
        let mut out = String::new();
        for n in self.nodes().filter(|&n| !self.is_leaf(n)) {
            out.push_str(self.id(n));
            out.push(':');
            for &c in self.children(n) {
                out.push(' ');
                out.push_str(self.id(c));
            }
            out.push('\n');
        }
        out
    }

    /// SHA-256 of the canonical document, hex encoded.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_document().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
