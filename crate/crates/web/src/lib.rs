//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each export returns a JSON string. The `*_json` functions hold the logic
//! and run natively too.

use mdtree::counterexample::{build_counterexample, random_weights};
use mdtree::robust::perturbation_trial;
use mdtree::{
    check_necessary_conditions, compute_mmap, parse_newick, reconstruct, write_newick, MMap, Rational,
    ReconstructOptions, Scalar, WeightedTree,
};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn rows<S: Scalar>(map: &MMap<S>) -> Value {
    map.iter()
        .map(|(subset, v)| {
            let names: Vec<&str> = subset.iter().map(|&i| map.labels()[i].as_str()).collect();
            json!({ "subset": names, "value": v.format_literal() })
        })
        .collect()
}

/// Vertex coordinates for drawing: leaves spread evenly on `y`, `x` is the
/// weighted depth from the traversal root.
fn layout<S: Scalar>(tree: &WeightedTree<S>) -> Value {
    let n = tree.vertex_count();
    let root = tree.root();
    let mut x = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut order = Vec::new();
    let mut stack = vec![(root, usize::MAX)];
    let mut parent = vec![usize::MAX; n];
    while let Some((v, p)) = stack.pop() {
        order.push(v);
        parent[v] = p;
        let mut kids: Vec<(usize, usize)> = tree.neighbors(v).iter().copied().filter(|&(w, _)| w != p).collect();
        kids.sort_by_key(|&(w, e)| std::cmp::Reverse((tree.leaves_on_side(e, w)[0], w)));
        for (w, e) in kids {
            x[w] = x[v] + tree.edge(e).weight.to_f64();
            stack.push((w, v));
        }
    }
    let mut next = 0.0;
    for &v in &order {
        if tree.is_leaf(v) {
            y[v] = next;
            next += 1.0;
        }
    }
    for &v in order.iter().rev() {
        if !tree.is_leaf(v) {
            let kids: Vec<usize> = tree.neighbors(v).iter().map(|&(w, _)| w).filter(|&w| w != parent[v]).collect();
            y[v] = kids.iter().map(|&w| y[w]).sum::<f64>() / kids.len() as f64;
        }
    }
    let nodes: Vec<Value> = (0..n)
        .map(|v| {
            let label = tree.leaf_of_vertex(v).map(|l| tree.labels()[l].clone());
            json!({ "x": x[v], "y": y[v], "label": label })
        })
        .collect();
    let edges: Vec<Value> = tree
        .edges()
        .iter()
        .map(|e| json!({ "a": e.a, "b": e.b, "weight": e.weight.format_literal() }))
        .collect();
    json!({ "nodes": nodes, "edges": edges })
}

fn splits_text<S: Scalar>(tree: &WeightedTree<S>) -> Vec<String> {
    tree.topology()
        .into_iter()
        .filter(|s| !s.is_trivial())
        .map(|s| s.to_string())
        .collect()
}

/// m-map of a Newick tree, the tree rebuilt from it, and the quartet check.
pub fn analyze_json(newick: &str, m: usize) -> Result<String, String> {
    let tree = parse_newick::<Rational>(newick).map_err(|e| e.to_string())?;
    let map = compute_mmap(&tree, m).map_err(|e| e.to_string())?;
    let check = check_necessary_conditions(&map, 0.0);
    let rebuilt = match reconstruct(&map, &ReconstructOptions::default()) {
        Ok(r) => json!({
            "newick": write_newick(&r.tree),
            "identical": r.tree.equals(&tree, 0.0),
            "quartet_queries": r.stats.quartet_queries,
            "layout": layout(&r.tree),
        }),
        Err(e) => json!({ "error": e.to_string() }),
    };
    Ok(json!({
        "n": map.n(),
        "m": m,
        "rows": rows(&map),
        "splits": splits_text(&tree),
        "layout": layout(&tree),
        "check_passed": check.passed,
        "reconstruction": rebuilt,
    })
    .to_string())
}

/// The two caterpillars on `2m - 2` leaves and their shared m-map.
pub fn counterexample_json(m: usize, seed: Option<u64>) -> Result<String, String> {
    let weights = seed.map(|s| random_weights::<Rational>(m, s));
    let pair = build_counterexample(m, weights).map_err(|e| e.to_string())?;
    let a = compute_mmap(&pair.t, m).map_err(|e| e.to_string())?;
    let b = compute_mmap(&pair.t_prime, m).map_err(|e| e.to_string())?;
    let pairs_differ = compute_mmap(&pair.t, 2).ok() != compute_mmap(&pair.t_prime, 2).ok();
    Ok(json!({
        "m": m,
        "t": { "newick": write_newick(&pair.t), "layout": layout(&pair.t), "splits": splits_text(&pair.t) },
        "t_prime": { "newick": write_newick(&pair.t_prime), "layout": layout(&pair.t_prime), "splits": splits_text(&pair.t_prime) },
        "maps_equal": a == b,
        "pair_distances_differ": pairs_differ,
        "rows": rows(&a),
    })
    .to_string())
}

/// Topology recovery rate at each noise level.
pub fn perturb_json(newick: &str, m: usize, deltas: &[f64], trials: usize, seed: u64) -> Result<String, String> {
    let tree = parse_newick::<f64>(newick).map_err(|e| e.to_string())?;
    let points = deltas
        .iter()
        .map(|&d| {
            let r = perturbation_trial(&tree, m, d, seed, trials, 1e-12).map_err(|e| e.to_string())?;
            Ok(json!({
                "delta": d,
                "success_rate": r.success_rate,
                "max_weight_error": r.max_weight_error,
            }))
        })
        .collect::<Result<Vec<Value>, String>>()?;
    Ok(json!({ "points": points }).to_string())
}

#[wasm_bindgen]
pub fn analyze(newick: &str, m: usize) -> Result<String, JsValue> {
    analyze_json(newick, m).map_err(|e| JsValue::from_str(&e))
}

/// `seed < 0` selects the prime weights.
#[wasm_bindgen]
pub fn counterexample(m: usize, seed: f64) -> Result<String, JsValue> {
    let seed = (seed >= 0.0).then_some(seed as u64);
    counterexample_json(m, seed).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn perturb(newick: &str, m: usize, deltas: Vec<f64>, trials: usize, seed: u32) -> Result<String, JsValue> {
    perturb_json(newick, m, &deltas, trials, seed as u64).map_err(|e| JsValue::from_str(&e))
}
