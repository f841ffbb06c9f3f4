//! Scenario trees: loading, validation, and queries.
//!
//! A tree file is a JSON object with the horizon `T`, a list of
//! stage-valued parameters, and a flat node list with explicit parents:
//!
//! ```json
//! {"T":1,
//!  "stage_params":[{"name":"a","stage":1,"value":1.0}],
//!  "nodes":[
//!    {"id":0,"stage":0,"parent":null,"prob":1.0,"params":{"V":5.0}},
//!    {"id":1,"stage":1,"parent":0,"prob":0.5,"params":{"V":4.0}},
//!    {"id":2,"stage":1,"parent":0,"prob":0.5,"params":{"V":8.0}}]}
//! ```
//!
//! Node ids must be dense `0..N-1`. `prob` is the probability conditional
//! on the parent; sibling probabilities must sum to one. The flat list with
//! parent pointers supports arbitrary, non-balanced trees.

use std::collections::BTreeMap;

use serde::Deserialize;

/// Sibling conditional probabilities must sum to 1 within this tolerance.
pub const PROB_TOLERANCE: f64 = 1e-9;

/// One node of a scenario tree.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub id: usize,
    pub stage: u32,
    pub parent: Option<usize>,
    /// Probability conditional on the parent; 1.0 at the root.
    pub cond_prob: f64,
    /// Node-valued parameter realizations.
    pub params: BTreeMap<String, f64>,
}

/// A validated scenario tree. Immutable after loading; queries are
/// read-only and safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioTree {
    nodes: Vec<TreeNode>,
    horizon: u32,
    /// Node ids per stage, ascending.
    stage_index: Vec<Vec<usize>>,
    /// Children per node, ascending.
    children: Vec<Vec<usize>>,
    /// Unconditional probability per node (product along the root path).
    path_prob: Vec<f64>,
    /// Stage-valued parameters: (name, stage) -> value.
    stage_params: BTreeMap<(String, u32), f64>,
}

/// A structural violation, attached to the node where it was observed.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeError {
    pub node: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for TreeError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.node {
            Some(id) => write!(f, "tree error at node {id}: {}", self.message),
            None => write!(f, "tree error: {}", self.message),
        }
    }
}

impl std::error::Error for TreeError {}

/// Why a tree file could not be loaded.
#[derive(Debug)]
pub enum LoadError {
    /// The text is not a well-formed tree file.
    Format(String),
    /// The described tree violates structural invariants.
    Tree(Vec<TreeError>),
}

impl std::fmt::Display for LoadError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LoadError::Format(msg) => write!(f, "tree format error: {msg}"),
            LoadError::Tree(errors) => {
                for (i, e) in errors.iter().enumerate() {
                    if i > 0 {
                        writeln!(f)?;
                    }
                    write!(f, "{e}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for LoadError {}

/// Depth exceeds the stage of the starting node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepthError {
    pub node: usize,
    pub depth: u32,
    pub stage: u32,
}

impl std::fmt::Display for DepthError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "ancestor depth {} exceeds stage {} of node {}",
            self.depth, self.stage, self.node
        )
    }
}

impl std::error::Error for DepthError {}

/// Stage outside `[0, T]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageRangeError {
    pub stage: u32,
    pub horizon: u32,
}

impl std::fmt::Display for StageRangeError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "stage {} outside [0, {}]", self.stage, self.horizon)
    }
}

impl std::error::Error for StageRangeError {}

#[derive(Deserialize)]
struct TreeFile {
    #[serde(rename = "T")]
    horizon: u32,
    #[serde(default)]
    stage_params: Vec<StageParamEntry>,
    nodes: Vec<NodeEntry>,
}

#[derive(Deserialize)]
struct StageParamEntry {
    name: String,
    stage: u32,
    value: f64,
}

#[derive(Deserialize)]
struct NodeEntry {
    id: usize,
    stage: u32,
    parent: Option<usize>,
    prob: f64,
    #[serde(default)]
    params: BTreeMap<String, f64>,
}

/// Parse and validate a tree file.
pub fn load_tree(src: &str) -> Result<ScenarioTree, LoadError> {
    let file: TreeFile =
        serde_json::from_str(src).map_err(|e| LoadError::Format(e.to_string()))?;

    let n = file.nodes.len();
    let mut nodes: Vec<Option<TreeNode>> = vec![None; n];
    for entry in file.nodes {
        if entry.id >= n {
            return Err(LoadError::Tree(vec![TreeError {
                node: Some(entry.id),
                message: format!("node ids must be dense 0..{n}"),
            }]));
        }
        if nodes[entry.id].is_some() {
            return Err(LoadError::Tree(vec![TreeError {
                node: Some(entry.id),
                message: "duplicate node id".into(),
            }]));
        }
        nodes[entry.id] = Some(TreeNode {
            id: entry.id,
            stage: entry.stage,
            parent: entry.parent,
            cond_prob: entry.prob,
            params: entry.params,
        });
    }
    let nodes: Vec<TreeNode> = nodes.into_iter().map(|n| n.expect("dense ids")).collect();

    let stage_params = file
        .stage_params
        .into_iter()
        .map(|e| ((e.name, e.stage), e.value))
        .collect();

    ScenarioTree::from_parts(file.horizon, nodes, stage_params).map_err(LoadError::Tree)
}

impl ScenarioTree {
    /// Assemble and validate a tree from already-structured parts.
    pub fn from_parts(
        horizon: u32,
        nodes: Vec<TreeNode>,
        stage_params: BTreeMap<(String, u32), f64>,
    ) -> Result<Self, Vec<TreeError>> {
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
        for node in &nodes {
            if let Some(p) = node.parent {
                if p < nodes.len() {
                    children[p].push(node.id);
                }
            }
        }
        let mut stage_index: Vec<Vec<usize>> = vec![Vec::new(); horizon as usize + 1];
        for node in &nodes {
            if node.stage <= horizon {
                stage_index[node.stage as usize].push(node.id);
            }
        }

        let mut path_prob = vec![0.0; nodes.len()];
        for node in &nodes {
            // Ids carry no stage order, so walk up per node. Capped at the
            // node count: this runs before cycle rejection in validation.
            let mut p = 1.0;
            let mut cur = node;
            for _ in 0..=nodes.len() {
                p *= cur.cond_prob;
                match cur.parent {
                    Some(parent) if parent < nodes.len() && parent != cur.id => {
                        cur = &nodes[parent]
                    }
                    _ => break,
                }
            }
            path_prob[node.id] = p;
        }

        let tree = ScenarioTree { nodes, horizon, stage_index, children, path_prob, stage_params };
        let errors = validate_tree(&tree);
        if errors.is_empty() {
            Ok(tree)
        } else {
            Err(errors)
        }
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[self.stage_index[0][0]]
    }

    pub fn children(&self, id: usize) -> &[usize] {
        &self.children[id]
    }

    /// Node ids at `stage`, ascending.
    pub fn nodes_at_stage(&self, stage: u32) -> Result<&[usize], StageRangeError> {
        if stage > self.horizon {
            return Err(StageRangeError { stage, horizon: self.horizon });
        }
        Ok(&self.stage_index[stage as usize])
    }

    /// Leaf ids (stage `T`), ascending. Each is one scenario.
    pub fn leaves(&self) -> &[usize] {
        &self.stage_index[self.horizon as usize]
    }

    /// The ancestor `depth` stages up; `depth` 0 is the node itself.
    pub fn ancestor(&self, node: usize, depth: u32) -> Result<usize, DepthError> {
        let stage = self.nodes[node].stage;
        if depth > stage {
            return Err(DepthError { node, depth, stage });
        }
        let mut cur = node;
        for _ in 0..depth {
            cur = self.nodes[cur].parent.expect("non-root by stage check");
        }
        Ok(cur)
    }

    /// Unconditional probability: product of conditional probabilities
    /// along the root path. 1.0 at the root.
    pub fn node_probability(&self, node: usize) -> f64 {
        self.path_prob[node]
    }

    /// Root-to-node path, one node per stage.
    pub fn path(&self, node: usize) -> Vec<usize> {
        let mut path = vec![node];
        let mut cur = node;
        while let Some(p) = self.nodes[cur].parent {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    /// Stage-valued parameter lookup.
    pub fn stage_param(&self, name: &str, stage: u32) -> Option<f64> {
        self.stage_params.get(&(name.to_string(), stage)).copied()
    }

    pub fn stage_params(&self) -> &BTreeMap<(String, u32), f64> {
        &self.stage_params
    }
}

/// Check every structural invariant, returning one error per violation.
pub fn validate_tree(tree: &ScenarioTree) -> Vec<TreeError> {
    let mut errors = Vec::new();
    let nodes = tree.nodes();
    let n = nodes.len();

    let roots: Vec<usize> = nodes.iter().filter(|n| n.parent.is_none()).map(|n| n.id).collect();
    match roots.as_slice() {
        [] => errors.push(TreeError { node: None, message: "no root node".into() }),
        [root] => {
            let r = &nodes[*root];
            if r.stage != 0 {
                errors.push(TreeError {
                    node: Some(*root),
                    message: format!("root must be at stage 0, found stage {}", r.stage),
                });
            }
            if (r.cond_prob - 1.0).abs() > PROB_TOLERANCE {
                errors.push(TreeError {
                    node: Some(*root),
                    message: format!("root probability must be 1, found {}", r.cond_prob),
                });
            }
        }
        many => {
            for id in many {
                errors.push(TreeError { node: Some(*id), message: "multiple root nodes".into() });
            }
        }
    }

    for node in nodes {
        if node.stage > tree.horizon() {
            errors.push(TreeError {
                node: Some(node.id),
                message: format!("stage {} beyond horizon {}", node.stage, tree.horizon()),
            });
            continue;
        }
        if let Some(parent) = node.parent {
            if parent >= n || parent == node.id {
                errors.push(TreeError {
                    node: Some(node.id),
                    message: format!("invalid parent id {parent}"),
                });
                continue;
            }
            if node.stage != nodes[parent].stage + 1 {
                errors.push(TreeError {
                    node: Some(node.id),
                    message: format!(
                        "stage skip: stage {} under parent at stage {}",
                        node.stage, nodes[parent].stage
                    ),
                });
            }
            if !(node.cond_prob > 0.0 && node.cond_prob <= 1.0 + PROB_TOLERANCE) {
                errors.push(TreeError {
                    node: Some(node.id),
                    message: format!("conditional probability {} outside (0, 1]", node.cond_prob),
                });
            }
        }
    }

    // Only meaningful once parent/stage structure is coherent.
    if errors.is_empty() {
        for node in nodes {
            let kids = tree.children(node.id);
            if node.stage < tree.horizon() {
                if kids.is_empty() {
                    errors.push(TreeError {
                        node: Some(node.id),
                        message: "missing children before horizon".into(),
                    });
                    continue;
                }
                let sum: f64 = kids.iter().map(|&k| nodes[k].cond_prob).sum();
                if (sum - 1.0).abs() > PROB_TOLERANCE {
                    errors.push(TreeError {
                        node: Some(node.id),
                        message: format!("children of node {} sum to {}", node.id, sum),
                    });
                }
            } else if !kids.is_empty() {
                errors.push(TreeError {
                    node: Some(node.id),
                    message: "node at the horizon has children".into(),
                });
            }
        }
    }

    errors
}
