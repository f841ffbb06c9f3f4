//! Expansion of a validated model over a scenario tree into a
//! deterministic-equivalent LP.
//!
//! Two expansions are provided. The node-indexed form creates one column
//! per (variable, tree node); decisions at shared history coincide by
//! construction, so non-anticipativity is implicit. The scenario-indexed
//! form gives every scenario (root-to-leaf path) its own full variable
//! history and adds explicit equality rows coupling scenarios wherever
//! their history is shared. Both produce the same optimal value, which is
//! what the cross-check tests exploit.
//!
//! Deterministic objects are instanced per stage instead of per node: a
//! deterministic variable yields a single column per stage shared by all
//! nodes of that stage, in both forms.

use std::collections::{BTreeMap, HashMap};

use crate::dsl::ast::{LinExpr, StageKind};
use crate::lp::{LpLabels, LpProblem, Row};
use crate::tree::ScenarioTree;
use crate::validate::{SymbolKind, ValidatedModel};

/// Where a column or row is instanced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Site {
    /// A tree node (node form, stochastic objects).
    Node(usize),
    /// A stage (deterministic objects, both forms).
    Stage(u32),
    /// A stage within one scenario, identified by its leaf.
    Scenario { leaf: usize, stage: u32 },
}

impl Site {
    /// Deterministic suffix used in LP file names.
    pub fn suffix(&self) -> String {
        match self {
            Site::Node(id) => format!("__n{id}"),
            Site::Stage(s) => format!("__s{s}"),
            Site::Scenario { leaf, stage } => format!("__l{leaf}_t{stage}"),
        }
    }
}

/// Bijection between (variable, site) pairs and LP column indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ColumnMap {
    forward: HashMap<(String, Site), usize>,
    reverse: Vec<(String, Site)>,
}

impl ColumnMap {
    fn push(&mut self, var: &str, site: Site) -> usize {
        let index = self.reverse.len();
        self.forward.insert((var.to_string(), site), index);
        self.reverse.push((var.to_string(), site));
        index
    }

    pub fn len(&self) -> usize {
        self.reverse.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reverse.is_empty()
    }

    pub fn column(&self, var: &str, site: Site) -> Option<usize> {
        self.forward.get(&(var.to_string(), site)).copied()
    }

    /// Column index -> (variable, site).
    pub fn reverse(&self) -> &[(String, Site)] {
        &self.reverse
    }
}

/// Which row of the LP a label describes.
#[derive(Debug, Clone, PartialEq)]
pub struct RowLabel {
    pub name: String,
    pub site: Site,
}

/// A deterministic-equivalent LP with its naming maps.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpandedModel {
    pub lp: LpProblem,
    pub columns: ColumnMap,
    pub row_labels: Vec<RowLabel>,
    /// Number of explicit non-anticipativity rows (0 in node form).
    pub coupling_rows: usize,
}

impl ExpandedModel {
    /// Names for LP text export.
    pub fn labels(&self) -> LpLabels {
        LpLabels {
            columns: self
                .columns
                .reverse()
                .iter()
                .map(|(var, site)| format!("{var}{}", site.suffix()))
                .collect(),
            rows: self
                .row_labels
                .iter()
                .map(|l| format!("{}{}", l.name, l.site.suffix()))
                .collect(),
        }
    }
}

/// Failure while instancing the model on a tree.
#[derive(Debug, Clone, PartialEq)]
pub enum ExpandError {
    /// The model was validated for a different horizon than the tree has.
    HorizonMismatch { model: u32, tree: u32 },
    /// A node-valued parameter is absent on a node where it is needed.
    MissingParam { name: String, node: usize },
    /// A stage-valued parameter is absent at a needed stage.
    MissingStageParam { name: String, stage: u32 },
    /// A recourse reference points to a site where the variable has no
    /// instance (above the root, or outside the variable's stage set).
    Recourse { var: String, depth: u32, detail: String },
    /// A deterministic (stage-wide) row uses a stochastic object at a
    /// stage with several nodes, so the reference has no single value.
    AmbiguousReference { name: String, stage: u32 },
}

impl std::fmt::Display for ExpandError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExpandError::HorizonMismatch { model, tree } => {
                write!(f, "model horizon {model} does not match tree horizon {tree}")
            }
            ExpandError::MissingParam { name, node } => {
                write!(f, "parameter `{name}` missing on node {node}")
            }
            ExpandError::MissingStageParam { name, stage } => {
                write!(f, "stage parameter `{name}` missing at stage {stage}")
            }
            ExpandError::Recourse { var, depth, detail } => {
                write!(f, "recourse `{var}(-{depth})` unresolvable: {detail}")
            }
            ExpandError::AmbiguousReference { name, stage } => {
                write!(
                    f,
                    "stage-wide row references stochastic `{name}` at stage {stage}, which has several nodes"
                )
            }
        }
    }
}

impl std::error::Error for ExpandError {}

/// Expand with one column per (stochastic variable, node); implicit
/// non-anticipativity.
pub fn expand_node_form(
    model: &ValidatedModel,
    tree: &ScenarioTree,
) -> Result<ExpandedModel, ExpandError> {
    check_horizon(model, tree)?;
    let columns = node_form_columns(model, tree);
    let expander = Expander { model, tree, columns, scenario_rep: None };
    expander.assemble(InstanceKind::PerNode)
}

/// Expand with one column per (stochastic variable, scenario, stage) plus
/// explicit non-anticipativity equality rows.
pub fn expand_scenario_form(
    model: &ValidatedModel,
    tree: &ScenarioTree,
) -> Result<ExpandedModel, ExpandError> {
    check_horizon(model, tree)?;

    let mut columns = ColumnMap::default();
    for var in &model.model().vars {
        let ann = model.annotation(&var.name).expect("validated variables are annotated");
        match ann.kind {
            StageKind::Stochastic => {
                for &leaf in tree.leaves() {
                    for stage in ann.stages.iter() {
                        columns.push(&var.name, Site::Scenario { leaf, stage });
                    }
                }
            }
            StageKind::Deterministic => {
                for stage in ann.stages.iter() {
                    columns.push(&var.name, Site::Stage(stage));
                }
            }
        }
    }

    // Scenarios through each node, ascending; the first one acts as the
    // representative for stage-wide references.
    let mut through: Vec<Vec<usize>> = vec![Vec::new(); tree.nodes().len()];
    for &leaf in tree.leaves() {
        for node in tree.path(leaf) {
            through[node].push(leaf);
        }
    }

    let expander = Expander {
        model,
        tree,
        columns,
        scenario_rep: Some(through.iter().map(|t| t.first().copied()).collect()),
    };
    let mut expanded = expander.assemble(InstanceKind::PerScenario)?;

    // Couple scenarios at every shared-history node: consecutive pairwise
    // equalities per stochastic variable alive at that node's stage.
    for node in tree.nodes() {
        let scenarios = &through[node.id];
        if scenarios.len() < 2 {
            continue;
        }
        for var in &model.model().vars {
            let ann = model.annotation(&var.name).expect("validated variables are annotated");
            if ann.kind != StageKind::Stochastic || !ann.stages.contains(node.stage) {
                continue;
            }
            for (pair, window) in scenarios.windows(2).enumerate() {
                let a = expanded
                    .columns
                    .column(&var.name, Site::Scenario { leaf: window[0], stage: node.stage })
                    .expect("scenario columns cover the stage set");
                let b = expanded
                    .columns
                    .column(&var.name, Site::Scenario { leaf: window[1], stage: node.stage })
                    .expect("scenario columns cover the stage set");
                let mut coeffs = BTreeMap::new();
                coeffs.insert(a, 1.0);
                coeffs.insert(b, -1.0);
                expanded.lp.rows.push(Row { coeffs, relop: crate::lp::Relop::Eq, rhs: 0.0 });
                expanded.row_labels.push(RowLabel {
                    name: format!("na_{}_{}", var.name, pair),
                    site: Site::Node(node.id),
                });
                expanded.coupling_rows += 1;
            }
        }
    }

    Ok(expanded)
}

/// Column of `var`'s instance `depth` stages above `node` in the node
/// form. Depth 0 is the node itself.
pub fn resolve_recourse_ref(
    model: &ValidatedModel,
    tree: &ScenarioTree,
    var: &str,
    node: usize,
    depth: u32,
) -> Result<usize, ExpandError> {
    check_horizon(model, tree)?;
    let columns = node_form_columns(model, tree);
    let expander = Expander { model, tree, columns, scenario_rep: None };
    expander.var_column(var, depth, EvalSite::Node(node))
}

fn check_horizon(model: &ValidatedModel, tree: &ScenarioTree) -> Result<(), ExpandError> {
    if model.horizon() != tree.horizon() {
        return Err(ExpandError::HorizonMismatch { model: model.horizon(), tree: tree.horizon() });
    }
    Ok(())
}

fn node_form_columns(model: &ValidatedModel, tree: &ScenarioTree) -> ColumnMap {
    let mut columns = ColumnMap::default();
    for var in &model.model().vars {
        let ann = model.annotation(&var.name).expect("validated variables are annotated");
        match ann.kind {
            StageKind::Stochastic => {
                for node in tree.nodes() {
                    if ann.stages.contains(node.stage) {
                        columns.push(&var.name, Site::Node(node.id));
                    }
                }
            }
            StageKind::Deterministic => {
                for stage in ann.stages.iter() {
                    columns.push(&var.name, Site::Stage(stage));
                }
            }
        }
    }
    columns
}

/// How stochastic constraints and the objective are instanced.
#[derive(Clone, Copy, PartialEq)]
enum InstanceKind {
    PerNode,
    PerScenario,
}

/// Where an expression is being evaluated.
#[derive(Clone, Copy)]
enum EvalSite {
    Node(usize),
    Stage(u32),
    Scenario { leaf: usize, stage: u32, node: usize },
}

impl EvalSite {
    fn stage(&self, tree: &ScenarioTree) -> u32 {
        match *self {
            EvalSite::Node(id) => tree.node(id).stage,
            EvalSite::Stage(s) => s,
            EvalSite::Scenario { stage, .. } => stage,
        }
    }

    fn label_site(&self) -> Site {
        match *self {
            EvalSite::Node(id) => Site::Node(id),
            EvalSite::Stage(s) => Site::Stage(s),
            EvalSite::Scenario { leaf, stage, .. } => Site::Scenario { leaf, stage },
        }
    }
}

struct Expander<'a> {
    model: &'a ValidatedModel,
    tree: &'a ScenarioTree,
    columns: ColumnMap,
    /// Scenario form only: representative leaf through each node, for
    /// stage-wide references into stochastic variables.
    scenario_rep: Option<Vec<Option<usize>>>,
}

impl<'a> Expander<'a> {
    fn assemble(self, kind: InstanceKind) -> Result<ExpandedModel, ExpandError> {
        let meta = self.model.model();
        let n_cols = self.columns.len();

        let mut bounds = vec![(f64::NEG_INFINITY, f64::INFINITY); n_cols];
        for (index, (var, _)) in self.columns.reverse().iter().enumerate() {
            let decl = meta.vars.iter().find(|v| &v.name == var).expect("column from var list");
            bounds[index] = (decl.lb, decl.ub);
        }

        let mut rows = Vec::new();
        let mut row_labels = Vec::new();
        for constraint in &meta.constraints {
            let ann =
                self.model.annotation(&constraint.name).expect("validated constraints are annotated");
            for site in self.instance_sites(ann.kind, &ann.stages, kind) {
                let (lhs_cols, lhs_const) = self.eval_linear(&constraint.lhs, site)?;
                let (rhs_cols, rhs_const) = self.eval_linear(&constraint.rhs, site)?;
                let mut coeffs = lhs_cols;
                for (col, c) in rhs_cols {
                    *coeffs.entry(col).or_insert(0.0) -= c;
                }
                coeffs.retain(|_, c| *c != 0.0);
                rows.push(Row { coeffs, relop: constraint.relop, rhs: rhs_const - lhs_const });
                row_labels.push(RowLabel { name: constraint.name.clone(), site: site.label_site() });
            }
        }

        let mut objective = vec![0.0; n_cols];
        let mut objective_offset = 0.0;
        let obj = meta.objective.as_ref().expect("validated models have an objective");
        let ann = self.model.annotation(&obj.name).expect("validated objective is annotated");
        for site in self.instance_sites(ann.kind, &ann.stages, kind) {
            let weight = match (ann.kind, site) {
                (StageKind::Stochastic, EvalSite::Node(id)) => self.tree.node_probability(id),
                (StageKind::Stochastic, EvalSite::Scenario { leaf, .. }) => {
                    self.tree.node_probability(leaf)
                }
                _ => 1.0,
            };
            let (cols, constant) = self.eval_linear(&obj.expr, site)?;
            for (col, c) in cols {
                objective[col] += weight * c;
            }
            objective_offset += weight * constant;
        }

        let lp = LpProblem { n_cols, objective, objective_offset, rows, bounds };
        Ok(ExpandedModel { lp, columns: self.columns, row_labels, coupling_rows: 0 })
    }

    /// Sites a stochastic or deterministic object is instanced at, in
    /// deterministic order (node id, or leaf then stage).
    fn instance_sites(
        &self,
        obj_kind: StageKind,
        stages: &crate::stage::StageSet,
        kind: InstanceKind,
    ) -> Vec<EvalSite> {
        match obj_kind {
            StageKind::Deterministic => stages.iter().map(EvalSite::Stage).collect(),
            StageKind::Stochastic => match kind {
                InstanceKind::PerNode => self
                    .tree
                    .nodes()
                    .iter()
                    .filter(|n| stages.contains(n.stage))
                    .map(|n| EvalSite::Node(n.id))
                    .collect(),
                InstanceKind::PerScenario => {
                    let mut sites = Vec::new();
                    for &leaf in self.tree.leaves() {
                        let path = self.tree.path(leaf);
                        for stage in stages.iter() {
                            sites.push(EvalSite::Scenario {
                                leaf,
                                stage,
                                node: path[stage as usize],
                            });
                        }
                    }
                    sites
                }
            },
        }
    }

    /// Evaluate an expression at a site into LP column coefficients plus a
    /// constant. Parameters take their realized values; each term carries
    /// at most one variable (validation rejects the rest).
    fn eval_linear(
        &self,
        expr: &LinExpr,
        site: EvalSite,
    ) -> Result<(BTreeMap<usize, f64>, f64), ExpandError> {
        let mut cols: BTreeMap<usize, f64> = BTreeMap::new();
        let mut constant = expr.constant;
        for term in &expr.terms {
            let mut coeff = term.coeff;
            let mut var: Option<(usize, u32)> = None; // (column, depth) of the variable factor
            for factor in &term.factors {
                match self.model.symbol_kind(&factor.name).expect("validated symbol") {
                    SymbolKind::Variable => {
                        let col = self.var_column(&factor.name, factor.recourse_depth, site)?;
                        var = Some((col, factor.recourse_depth));
                    }
                    SymbolKind::StageParam => {
                        let stage = site.stage(self.tree);
                        coeff *= self
                            .tree
                            .stage_param(&factor.name, stage)
                            .ok_or_else(|| ExpandError::MissingStageParam {
                                name: factor.name.clone(),
                                stage,
                            })?;
                    }
                    SymbolKind::NodeParam => {
                        coeff *= self.node_param(&factor.name, site)?;
                    }
                }
            }
            match var {
                Some((col, _)) => *cols.entry(col).or_insert(0.0) += coeff,
                None => constant += coeff,
            }
        }
        Ok((cols, constant))
    }

    fn node_param(&self, name: &str, site: EvalSite) -> Result<f64, ExpandError> {
        let node = match site {
            EvalSite::Node(id) => id,
            EvalSite::Scenario { node, .. } => node,
            EvalSite::Stage(stage) => self.single_node_at(name, stage)?,
        };
        self.tree
            .node(node)
            .params
            .get(name)
            .copied()
            .ok_or_else(|| ExpandError::MissingParam { name: name.to_string(), node })
    }

    fn var_column(&self, var: &str, depth: u32, site: EvalSite) -> Result<usize, ExpandError> {
        let ann = self.model.annotation(var).expect("validated variables are annotated");
        let recourse_err = |detail: String| ExpandError::Recourse {
            var: var.to_string(),
            depth,
            detail,
        };

        let key = match ann.kind {
            StageKind::Deterministic => {
                let stage = site.stage(self.tree);
                let target = stage
                    .checked_sub(depth)
                    .ok_or_else(|| recourse_err(format!("depth exceeds stage {stage}")))?;
                Site::Stage(target)
            }
            StageKind::Stochastic => match site {
                EvalSite::Node(id) => {
                    let ancestor = self.tree.ancestor(id, depth).map_err(|e| {
                        recourse_err(format!("depth exceeds stage {} of node {id}", e.stage))
                    })?;
                    Site::Node(ancestor)
                }
                EvalSite::Scenario { leaf, stage, .. } => {
                    let target = stage
                        .checked_sub(depth)
                        .ok_or_else(|| recourse_err(format!("depth exceeds stage {stage}")))?;
                    Site::Scenario { leaf, stage: target }
                }
                EvalSite::Stage(stage) => {
                    let target = stage
                        .checked_sub(depth)
                        .ok_or_else(|| recourse_err(format!("depth exceeds stage {stage}")))?;
                    let node = self.single_node_at(var, target)?;
                    match &self.scenario_rep {
                        None => Site::Node(node),
                        Some(reps) => {
                            let leaf = reps[node].expect("every node reaches a leaf");
                            Site::Scenario { leaf, stage: target }
                        }
                    }
                }
            },
        };

        self.columns.column(var, key).ok_or_else(|| {
            recourse_err(format!("variable has no instance at {}", key.suffix()))
        })
    }

    /// Stage-wide references into stochastic objects only make sense when
    /// the stage has a single node.
    fn single_node_at(&self, name: &str, stage: u32) -> Result<usize, ExpandError> {
        let nodes = self
            .tree
            .nodes_at_stage(stage)
            .map_err(|_| ExpandError::AmbiguousReference { name: name.to_string(), stage })?;
        if nodes.len() == 1 {
            Ok(nodes[0])
        } else {
            Err(ExpandError::AmbiguousReference { name: name.to_string(), stage })
        }
    }
}
