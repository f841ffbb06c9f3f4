//! Independent brute-force oracles used to cross-check the pipeline.
//!
//! [`dp_purchase_oracle`] solves the canonical purchase-under-uncertainty
//! model by a value recursion instead of an LP, and
//! [`enumerate_vertices`] solves tiny box-bounded LPs by trying every
//! basic point. Both are deliberately written against different
//! representations than the main solver path so the two sides validate
//! each other.

use std::collections::BTreeMap;

use rand::Rng;

use crate::lp::{check_solution, LpProblem, Relop, Row, Status};
use crate::tree::{ScenarioTree, TreeNode};

/// The canonical purchase model: buy a prescribed amount `a` by the final
/// stage at uncertain node prices `V`, minimizing expected cost.
pub const PURCHASE_MODEL: &str = "\
deterministic a: T;
stochastic x, s, objective_function: 0..T;
stochastic non_anticitpativity: 1..T;
stochastic root_stage: 0;
stochastic terminal_stage: T;

param a;
var x >= 0, s >= 0;

minimize objective_function: E(V * x);
subject to non_anticitpativity: s - s(-1) = x;
subject to root_stage: s = 0;
subject to terminal_stage: s = a;
";

/// A purchase-model instance: a tree carrying price `V` on every node and
/// the amount to acquire, taken from the stage parameter `a` at the final
/// stage.
#[derive(Debug, Clone)]
pub struct PurchaseInstance {
    pub tree: ScenarioTree,
    pub amount: f64,
}

/// Input unfit for the purchase oracle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleError {
    pub message: String,
}

impl std::fmt::Display for OracleError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "oracle error: {}", self.message)
    }
}

impl std::error::Error for OracleError {}

/// Optimal expected cost of a purchase instance, by value recursion.
///
/// Costs are linear and inventory only grows, so some optimal policy buys
/// the whole amount at a single stopping time in `1..=T` along each path.
/// The node value is the best price reachable from it:
///
/// - at the final stage, `value(n) = V(n)` (buying is forced);
/// - before that, `value(n) = min(V(n), sum of q_c * value(c))`;
/// - at the root, buying adds cost but no inventory, so
///   `value(root) = sum of q_c * value(c)`.
///
/// The optimum is `a * value(root)`.
pub fn dp_purchase_oracle(inst: &PurchaseInstance) -> Result<f64, OracleError> {
    let tree = &inst.tree;
    let horizon = tree.horizon();
    if horizon < 1 {
        return Err(OracleError { message: "purchase model needs a horizon of at least 1".into() });
    }

    let mut value = vec![0.0f64; tree.nodes().len()];
    for stage in (0..=horizon).rev() {
        for &id in tree.nodes_at_stage(stage).expect("stage within horizon") {
            let node = tree.node(id);
            let continuation: f64 = tree
                .children(id)
                .iter()
                .map(|&c| tree.node(c).cond_prob * value[c])
                .sum();
            value[id] = if stage == horizon {
                price(node)?
            } else if stage == 0 {
                continuation
            } else {
                price(node)?.min(continuation)
            };
        }
    }

    let root = tree.root().id;
    Ok(inst.amount * value[root])
}

fn price(node: &TreeNode) -> Result<f64, OracleError> {
    node.params.get("V").copied().ok_or_else(|| OracleError {
        message: format!("node {} has no price V", node.id),
    })
}

/// Result of exhaustive vertex enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexSearch {
    pub status: Status,
    pub best_objective: Option<f64>,
    pub best_x: Option<Vec<f64>>,
}

/// Problem outside the enumerable class (too many columns, or a box that
/// is not finite).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SizeError {
    pub message: String,
}

impl std::fmt::Display for SizeError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "size error: {}", self.message)
    }
}

impl std::error::Error for SizeError {}

/// Brute-force ground truth for tiny LPs with finite boxes: intersect
/// every choice of `n` candidate hyperplanes (rows as equalities, bound
/// faces), keep the feasible points, and return the best objective. A
/// bounded nonempty polyhedron attains its minimum at such a point, so
/// this finds the optimum whenever one exists.
pub fn enumerate_vertices(p: &LpProblem) -> Result<VertexSearch, SizeError> {
    let n = p.n_cols;
    if n > 10 {
        return Err(SizeError { message: format!("{n} columns, enumeration supports at most 10") });
    }
    if p.bounds.iter().any(|&(lb, ub)| !lb.is_finite() || !ub.is_finite()) {
        return Err(SizeError { message: "all bounds must be finite".into() });
    }

    // Candidate hyperplanes: each row at equality, each bound face.
    let mut candidates: Vec<Hyperplane> = Vec::new();
    for row in &p.rows {
        let mut dense = vec![0.0; n];
        for (&j, &c) in &row.coeffs {
            dense[j] = c;
        }
        candidates.push((dense, row.rhs));
    }
    for (j, &(lb, ub)) in p.bounds.iter().enumerate() {
        let mut face = vec![0.0; n];
        face[j] = 1.0;
        candidates.push((face.clone(), lb));
        candidates.push((face, ub));
    }

    let mut best: Option<(f64, Vec<f64>)> = None;
    if n == 0 {
        let empty: Vec<f64> = Vec::new();
        if check_solution(p, &empty).expect("dimension 0").feasible {
            best = Some((p.objective_offset, empty));
        }
    } else {
        let mut chosen = Vec::with_capacity(n);
        pick(&candidates, n, 0, &mut chosen, &mut |subset| {
            if let Some(x) = solve_square(subset, n) {
                let feasible = check_solution(p, &x).expect("point has n entries").feasible;
                if feasible {
                    let obj = p.objective_at(&x);
                    if best.as_ref().map(|(b, _)| obj < *b).unwrap_or(true) {
                        best = Some((obj, x));
                    }
                }
            }
        });
    }

    Ok(match best {
        Some((obj, x)) => VertexSearch {
            status: Status::Optimal,
            best_objective: Some(obj),
            best_x: Some(x),
        },
        None => VertexSearch { status: Status::Infeasible, best_objective: None, best_x: None },
    })
}

/// Dense normal vector and right-hand side of one candidate equality.
type Hyperplane = (Vec<f64>, f64);

/// Enumerate all k-subsets of candidate indices, invoking the visitor.
fn pick<'a>(
    candidates: &'a [Hyperplane],
    k: usize,
    from: usize,
    chosen: &mut Vec<&'a Hyperplane>,
    visit: &mut dyn FnMut(&[&Hyperplane]),
) {
    if chosen.len() == k {
        visit(chosen);
        return;
    }
    let needed = k - chosen.len();
    for i in from..candidates.len() {
        if candidates.len() - i < needed {
            break;
        }
        chosen.push(&candidates[i]);
        pick(candidates, k, i + 1, chosen, visit);
        chosen.pop();
    }
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve_square(system: &[&Hyperplane], n: usize) -> Option<Vec<f64>> {
    let mut a: Vec<Vec<f64>> = system.iter().map(|(row, _)| row.clone()).collect();
    let mut b: Vec<f64> = system.iter().map(|&&(_, rhs)| rhs).collect();

    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let pivot_row = a[col].clone();
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = a[r][col] / pivot_row[col];
            if factor == 0.0 {
                continue;
            }
            for (c, value) in a[r].iter_mut().enumerate().skip(col) {
                *value -= factor * pivot_row[c];
            }
            b[r] -= factor * b[col];
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Random purchase instance for property tests: horizon in `1..=4`,
/// branching per interior node in `1..=3`, prices uniform in `[1, 10]`,
/// amount 1 or 2. Drive it from a seeded RNG for reproducibility.
pub fn random_purchase_instance<R: Rng>(rng: &mut R) -> PurchaseInstance {
    let horizon: u32 = rng.gen_range(1..=4);
    let amount = if rng.gen_bool(0.5) { 1.0 } else { 2.0 };

    let mut nodes: Vec<TreeNode> = Vec::new();
    let mut frontier: Vec<usize> = Vec::new();
    let push = |nodes: &mut Vec<TreeNode>, stage, parent, cond_prob, price: f64| {
        let id = nodes.len();
        let mut params = BTreeMap::new();
        params.insert("V".to_string(), price);
        nodes.push(TreeNode { id, stage, parent, cond_prob, params });
        id
    };

    let root = push(&mut nodes, 0, None, 1.0, rng.gen_range(1.0..=10.0));
    frontier.push(root);
    for stage in 1..=horizon {
        let mut next = Vec::new();
        for &parent in &frontier {
            let kids = rng.gen_range(1..=3usize);
            let weights: Vec<f64> = (0..kids).map(|_| rng.gen_range(0.2..1.0)).collect();
            let total: f64 = weights.iter().sum();
            for w in weights {
                let prob = if kids == 1 { 1.0 } else { w / total };
                let id =
                    push(&mut nodes, stage, Some(parent), prob, rng.gen_range(1.0..=10.0));
                next.push(id);
            }
        }
        frontier = next;
    }

    let mut stage_params = BTreeMap::new();
    stage_params.insert(("a".to_string(), horizon), amount);
    let tree = ScenarioTree::from_parts(horizon, nodes, stage_params)
        .expect("generated trees are structurally valid");
    PurchaseInstance { tree, amount }
}

/// Random box-bounded LP for solver ground-truth tests: up to `max_cols`
/// columns and `max_rows` rows, coefficients on a coarse grid so that
/// feasibility boundaries stay far from the tolerances.
pub fn random_box_lp<R: Rng>(rng: &mut R, max_cols: usize, max_rows: usize) -> LpProblem {
    let n = rng.gen_range(1..=max_cols);
    let m = rng.gen_range(0..=max_rows);

    let grid = |rng: &mut R| (rng.gen_range(-12i32..=12) as f64) / 4.0;

    let bounds: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            let lb = (rng.gen_range(-8i32..=0) as f64) / 2.0;
            let width = (rng.gen_range(1i32..=8) as f64) / 2.0;
            (lb, lb + width)
        })
        .collect();
    let objective: Vec<f64> = (0..n).map(|_| grid(rng)).collect();

    let rows: Vec<Row> = (0..m)
        .map(|_| {
            let mut coeffs = BTreeMap::new();
            for j in 0..n {
                if rng.gen_bool(0.7) {
                    let c = grid(rng);
                    if c != 0.0 {
                        coeffs.insert(j, c);
                    }
                }
            }
            let relop = match rng.gen_range(0..3) {
                0 => Relop::Le,
                1 => Relop::Ge,
                _ => Relop::Eq,
            };
            Row { coeffs, relop, rhs: grid(rng) }
        })
        .collect();

    LpProblem { n_cols: n, objective, objective_offset: 0.0, rows, bounds }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn instance(tree_src: &str, amount: f64) -> PurchaseInstance {
        PurchaseInstance { tree: crate::tree::load_tree(tree_src).unwrap(), amount }
    }

    const ONE_STAGE: &str = r#"{"T":1,
        "stage_params":[{"name":"a","stage":1,"value":1.0}],
        "nodes":[
          {"id":0,"stage":0,"parent":null,"prob":1.0,"params":{"V":5.0}},
          {"id":1,"stage":1,"parent":0,"prob":0.5,"params":{"V":4.0}},
          {"id":2,"stage":1,"parent":0,"prob":0.5,"params":{"V":8.0}}]}"#;

    /// Two-stage instance: branch A keeps price 5 with children 4/8,
    /// branch B has price 7 with children 2/6.
    pub(crate) const TWO_STAGE: &str = r#"{"T":2,
        "stage_params":[{"name":"a","stage":2,"value":1.0}],
        "nodes":[
          {"id":0,"stage":0,"parent":null,"prob":1.0,"params":{"V":1.0}},
          {"id":1,"stage":1,"parent":0,"prob":0.5,"params":{"V":5.0}},
          {"id":2,"stage":1,"parent":0,"prob":0.5,"params":{"V":7.0}},
          {"id":3,"stage":2,"parent":1,"prob":0.5,"params":{"V":4.0}},
          {"id":4,"stage":2,"parent":1,"prob":0.5,"params":{"V":8.0}},
          {"id":5,"stage":2,"parent":2,"prob":0.5,"params":{"V":2.0}},
          {"id":6,"stage":2,"parent":2,"prob":0.5,"params":{"V":6.0}}]}"#;

    #[test]
    fn terminal_purchase_is_forced_on_one_stage_tree() {
        // Root purchases add cost without inventory, so the value is the
        // expected terminal price: 0.5 * 4 + 0.5 * 8.
        let v = dp_purchase_oracle(&instance(ONE_STAGE, 1.0)).unwrap();
        assert!((v - 6.0).abs() < 1e-12);
    }

    #[test]
    fn two_stage_stopping_values() {
        // Branch A: min(5, 6) = 5; branch B: min(7, 4) = 4; root: 4.5.
        let v = dp_purchase_oracle(&instance(TWO_STAGE, 1.0)).unwrap();
        assert!((v - 4.5).abs() < 1e-12);
        let v2 = dp_purchase_oracle(&instance(TWO_STAGE, 2.0)).unwrap();
        assert!((v2 - 9.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_needs_prices_everywhere_past_the_root() {
        let src = r#"{"T":1,"stage_params":[{"name":"a","stage":1,"value":1.0}],
            "nodes":[
              {"id":0,"stage":0,"parent":null,"prob":1.0,"params":{}},
              {"id":1,"stage":1,"parent":0,"prob":1.0,"params":{}}]}"#;
        let err = dp_purchase_oracle(&instance(src, 1.0)).unwrap_err();
        assert!(err.message.contains("no price"));
    }

    #[test]
    fn oracle_rejects_zero_horizon() {
        let src = r#"{"T":0,"nodes":[
            {"id":0,"stage":0,"parent":null,"prob":1.0,"params":{"V":3.0}}]}"#;
        assert!(dp_purchase_oracle(&instance(src, 1.0)).is_err());
    }

    #[test]
    fn oracle_is_linear_in_amount_and_prices() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let inst = random_purchase_instance(&mut rng);
            let base = dp_purchase_oracle(&inst).unwrap();

            let doubled = PurchaseInstance { tree: inst.tree.clone(), amount: inst.amount * 2.0 };
            assert!((dp_purchase_oracle(&doubled).unwrap() - 2.0 * base).abs() < 1e-9);

            let scaled_nodes: Vec<TreeNode> = inst
                .tree
                .nodes()
                .iter()
                .map(|n| {
                    let mut n = n.clone();
                    let v = n.params["V"];
                    n.params.insert("V".into(), 3.0 * v);
                    n
                })
                .collect();
            let scaled = PurchaseInstance {
                tree: ScenarioTree::from_parts(
                    inst.tree.horizon(),
                    scaled_nodes,
                    inst.tree.stage_params().clone(),
                )
                .unwrap(),
                amount: inst.amount,
            };
            assert!((dp_purchase_oracle(&scaled).unwrap() - 3.0 * base).abs() < 1e-9);
        }
    }

    #[test]
    fn vertex_enumeration_finds_box_corner() {
        let p = LpProblem {
            n_cols: 2,
            objective: vec![-1.0, -1.0],
            objective_offset: 0.0,
            rows: vec![Row {
                coeffs: [(0, 1.0), (1, 1.0)].into_iter().collect(),
                relop: Relop::Le,
                rhs: 1.0,
            }],
            bounds: vec![(0.0, 1.0), (0.0, 1.0)],
        };
        let v = enumerate_vertices(&p).unwrap();
        assert_eq!(v.status, Status::Optimal);
        assert!((v.best_objective.unwrap() + 1.0).abs() < 1e-9);
        let x = v.best_x.unwrap();
        assert!((x[0] + x[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn vertex_enumeration_unique_equality_point() {
        let p = LpProblem {
            n_cols: 2,
            objective: vec![1.0, 0.0],
            objective_offset: 0.0,
            rows: vec![
                Row {
                    coeffs: [(0, 1.0), (1, 1.0)].into_iter().collect(),
                    relop: Relop::Eq,
                    rhs: 3.0,
                },
                Row {
                    coeffs: [(0, 1.0), (1, -1.0)].into_iter().collect(),
                    relop: Relop::Eq,
                    rhs: 1.0,
                },
            ],
            bounds: vec![(0.0, 5.0), (0.0, 5.0)],
        };
        let v = enumerate_vertices(&p).unwrap();
        let x = v.best_x.unwrap();
        assert!((x[0] - 2.0).abs() < 1e-9);
        assert!((x[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn vertex_enumeration_detects_empty_feasible_set() {
        let p = LpProblem {
            n_cols: 1,
            objective: vec![1.0],
            objective_offset: 0.0,
            rows: vec![Row {
                coeffs: [(0, 1.0)].into_iter().collect(),
                relop: Relop::Ge,
                rhs: 10.0,
            }],
            bounds: vec![(0.0, 1.0)],
        };
        assert_eq!(enumerate_vertices(&p).unwrap().status, Status::Infeasible);
    }

    #[test]
    fn vertex_enumeration_size_guard() {
        let p = LpProblem {
            n_cols: 11,
            objective: vec![0.0; 11],
            objective_offset: 0.0,
            rows: vec![],
            bounds: vec![(0.0, 1.0); 11],
        };
        assert!(enumerate_vertices(&p).is_err());
        let p = LpProblem {
            n_cols: 1,
            objective: vec![0.0],
            objective_offset: 0.0,
            rows: vec![],
            bounds: vec![(0.0, f64::INFINITY)],
        };
        assert!(enumerate_vertices(&p).is_err());
    }

    #[test]
    fn generated_instances_are_valid_trees() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..50 {
            let inst = random_purchase_instance(&mut rng);
            assert!(inst.tree.horizon() >= 1 && inst.tree.horizon() <= 4);
            for stage in 0..=inst.tree.horizon() {
                let total: f64 = inst
                    .tree
                    .nodes_at_stage(stage)
                    .unwrap()
                    .iter()
                    .map(|&id| inst.tree.node_probability(id))
                    .sum();
                assert!((total - 1.0).abs() < 1e-9);
            }
        }
    }
}
