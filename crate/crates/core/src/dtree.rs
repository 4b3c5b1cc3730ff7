//! CART decision-tree classifier, from scratch.
//!
//! Greedy binary splits minimizing weighted Gini impurity, with
//! class-frequency sample balancing, count-based stopping thresholds, and a
//! line-oriented text serialization. Training is deterministic: candidate
//! thresholds come from sorted values, ties break toward the lowest feature
//! index and threshold, and samples are canonically ordered first so the
//! result is independent of input order.

use std::collections::HashSet;

use thiserror::Error;

use crate::backend::{OutcomeClass, CLASS_COUNT};

/// One labeled training point.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub x: Vec<f64>,
    pub y: OutcomeClass,
    pub weight: f64,
}

impl TrainingSample {
    pub fn new(x: Vec<f64>, y: OutcomeClass) -> Self {
        TrainingSample { x, y, weight: 1.0 }
    }

    pub fn weighted(x: Vec<f64>, y: OutcomeClass, weight: f64) -> Self {
        TrainingSample { x, y, weight }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClassWeighting {
    #[default]
    Balanced,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainParams {
    /// Minimum raw sample count a node needs to be considered for splitting.
    pub min_samples_split: usize,
    /// Minimum raw sample count each child of a split must keep.
    pub min_samples_leaf: usize,
    pub max_depth: Option<usize>,
    pub class_weighting: ClassWeighting,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            min_samples_split: 4,
            min_samples_leaf: 3,
            max_depth: None,
            class_weighting: ClassWeighting::Balanced,
        }
    }
}

/// Required strict impurity decrease for a split to be worth emitting.
const MIN_IMPURITY_DECREASE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Leaf {
        class_weights: [f64; CLASS_COUNT],
        predicted: OutcomeClass,
    },
    Split {
        feature_index: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTreeModel {
    nodes: Vec<TreeNode>,
    root: usize,
    feature_count: usize,
}

#[derive(Debug, Error, PartialEq)]
pub enum TrainError {
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("sample weight must be positive and finite, found {0}")]
    InvalidWeight(f64),
    #[error("invalid training parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum PredictError {
    #[error("dimension mismatch: model expects {expected}, input has {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelFormatError {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("unknown model format version '{0}'")]
    Version(String),
}

/// Gini impurity of a node with the given per-class weights:
/// `1 - sum_c (w_c / W)^2`, and 0 for an empty node.
pub fn gini_impurity(class_weights: &[f64]) -> f64 {
    let total: f64 = class_weights.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    1.0 - class_weights
        .iter()
        .map(|w| {
            let p = w / total;
            p * p
        })
        .sum::<f64>()
}

/// Reweight samples inversely to their class frequency:
/// `weight = N / (C_present * n_c)`, so the total weight stays N and every
/// class present carries equal total weight.
pub fn balance_weights(samples: &[TrainingSample]) -> Result<Vec<TrainingSample>, TrainError> {
    if samples.is_empty() {
        return Err(TrainError::EmptyTrainingSet);
    }
    let mut class_counts = [0usize; CLASS_COUNT];
    for s in samples {
        class_counts[s.y.index()] += 1;
    }
    let present = class_counts.iter().filter(|&&n| n > 0).count();
    let total = samples.len() as f64;
    Ok(samples
        .iter()
        .map(|s| {
            let n_c = class_counts[s.y.index()] as f64;
            TrainingSample {
                x: s.x.clone(),
                y: s.y,
                weight: total / (present as f64 * n_c),
            }
        })
        .collect())
}

fn predicted_from_weights(class_weights: &[f64; CLASS_COUNT]) -> OutcomeClass {
    // Ties go to the lower class: lower classes are cheaper outcomes.
    let mut best = 0usize;
    for c in 1..CLASS_COUNT {
        if class_weights[c] > class_weights[best] {
            best = c;
        }
    }
    OutcomeClass::new(best as u8).expect("class index in range")
}

struct BestSplit {
    feature_index: usize,
    threshold: f64,
    child_impurity: f64,
}

/// Exhaustive scan over (feature, midpoint threshold) candidates honoring
/// the min_samples_leaf constraint. Candidates are visited in ascending
/// (feature, threshold) order and only strictly better impurity replaces the
/// incumbent, which realizes the documented tie-break.
fn find_best_split(
    samples: &[TrainingSample],
    indices: &[usize],
    feature_count: usize,
    min_samples_leaf: usize,
) -> Option<BestSplit> {
    let total_weights = class_weight_sums(samples, indices);
    let total_weight: f64 = total_weights.iter().sum();
    let n = indices.len();
    let mut best: Option<BestSplit> = None;

    let mut order: Vec<usize> = Vec::with_capacity(n);
    for feature_index in 0..feature_count {
        order.clear();
        order.extend_from_slice(indices);
        order.sort_by(|&a, &b| samples[a].x[feature_index].total_cmp(&samples[b].x[feature_index]));

        let mut left_weights = [0.0f64; CLASS_COUNT];
        let mut left_weight_total = 0.0f64;
        for (i, &idx) in order.iter().enumerate() {
            let s = &samples[idx];
            left_weights[s.y.index()] += s.weight;
            left_weight_total += s.weight;
            if i + 1 >= n {
                break;
            }
            let value = s.x[feature_index];
            let next_value = samples[order[i + 1]].x[feature_index];
            if value == next_value {
                continue;
            }
            let left_count = i + 1;
            let right_count = n - left_count;
            if left_count < min_samples_leaf || right_count < min_samples_leaf {
                continue;
            }
            let threshold = value + (next_value - value) / 2.0;
            // Degenerate midpoints (adjacent floats) would put both values on
            // one side; skip rather than emit an empty or wrong-count child.
            if threshold <= value || threshold >= next_value {
                continue;
            }
            let mut right_weights = [0.0f64; CLASS_COUNT];
            for c in 0..CLASS_COUNT {
                right_weights[c] = total_weights[c] - left_weights[c];
            }
            let right_weight_total = total_weight - left_weight_total;
            let child_impurity = (left_weight_total * gini_impurity(&left_weights)
                + right_weight_total * gini_impurity(&right_weights))
                / total_weight;
            let better = match &best {
                None => true,
                Some(b) => child_impurity < b.child_impurity,
            };
            if better {
                best = Some(BestSplit {
                    feature_index,
                    threshold,
                    child_impurity,
                });
            }
        }
    }
    best
}

fn class_weight_sums(samples: &[TrainingSample], indices: &[usize]) -> [f64; CLASS_COUNT] {
    let mut weights = [0.0f64; CLASS_COUNT];
    for &i in indices {
        weights[samples[i].y.index()] += samples[i].weight;
    }
    weights
}

/// Train a CART classifier.
///
/// Recursive greedy splitting: a node becomes a leaf when it has fewer than
/// `min_samples_split` samples, is pure, sits at `max_depth`, or no legal
/// split strictly decreases Gini impurity.
pub fn train(
    samples: &[TrainingSample],
    params: &TrainParams,
) -> Result<DecisionTreeModel, TrainError> {
    if samples.is_empty() {
        return Err(TrainError::EmptyTrainingSet);
    }
    if params.min_samples_split < 2 {
        return Err(TrainError::InvalidParams(
            "min_samples_split must be >= 2".into(),
        ));
    }
    if params.min_samples_leaf < 1 {
        return Err(TrainError::InvalidParams(
            "min_samples_leaf must be >= 1".into(),
        ));
    }
    let feature_count = samples[0].x.len();
    for s in samples {
        if s.x.len() != feature_count {
            return Err(TrainError::DimensionMismatch {
                expected: feature_count,
                found: s.x.len(),
            });
        }
        if !(s.weight.is_finite() && s.weight > 0.0) {
            return Err(TrainError::InvalidWeight(s.weight));
        }
    }

    let working: Vec<TrainingSample> = match params.class_weighting {
        ClassWeighting::Balanced => balance_weights(samples)?,
        ClassWeighting::Uniform => samples.to_vec(),
    };

    // Canonical sample order makes the whole build independent of input
    // permutation (summation order and all).
    let mut canonical: Vec<usize> = (0..working.len()).collect();
    canonical.sort_by(|&a, &b| {
        let (sa, sb) = (&working[a], &working[b]);
        for (va, vb) in sa.x.iter().zip(&sb.x) {
            match va.total_cmp(vb) {
                std::cmp::Ordering::Equal => continue,
                other => return other,
            }
        }
        sa.y.cmp(&sb.y).then(sa.weight.total_cmp(&sb.weight))
    });

    let mut nodes: Vec<TreeNode> = Vec::new();
    let placeholder = TreeNode::Leaf {
        class_weights: [0.0; CLASS_COUNT],
        predicted: OutcomeClass::new(0).unwrap(),
    };
    nodes.push(placeholder.clone());
    let mut stack: Vec<(Vec<usize>, usize, usize)> = vec![(canonical, 0, 0)];

    while let Some((indices, depth, node_id)) = stack.pop() {
        let class_weights = class_weight_sums(&working, &indices);
        let is_pure = {
            let first = working[indices[0]].y;
            indices.iter().all(|&i| working[i].y == first)
        };
        let depth_capped = params.max_depth.is_some_and(|d| depth >= d);
        let make_leaf = || TreeNode::Leaf {
            class_weights,
            predicted: predicted_from_weights(&class_weights),
        };

        if indices.len() < params.min_samples_split || is_pure || depth_capped {
            nodes[node_id] = make_leaf();
            continue;
        }
        let best = find_best_split(&working, &indices, feature_count, params.min_samples_leaf);
        let Some(split) = best else {
            nodes[node_id] = make_leaf();
            continue;
        };
        let parent_impurity = gini_impurity(&class_weights);
        if parent_impurity - split.child_impurity <= MIN_IMPURITY_DECREASE {
            nodes[node_id] = make_leaf();
            continue;
        }
        let (left, right): (Vec<usize>, Vec<usize>) = indices
            .iter()
            .copied()
            .partition(|&i| working[i].x[split.feature_index] <= split.threshold);
        debug_assert!(!left.is_empty() && !right.is_empty());
        let left_id = nodes.len();
        nodes.push(placeholder.clone());
        let right_id = nodes.len();
        nodes.push(placeholder.clone());
        nodes[node_id] = TreeNode::Split {
            feature_index: split.feature_index,
            threshold: split.threshold,
            left: left_id,
            right: right_id,
        };
        stack.push((left, depth + 1, left_id));
        stack.push((right, depth + 1, right_id));
    }

    Ok(DecisionTreeModel {
        nodes,
        root: 0,
        feature_count,
    })
}

impl DecisionTreeModel {
    pub fn feature_count(&self) -> usize {
        self.feature_count
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    /// Node id path from root to the leaf that classifies `x`.
    pub fn decision_path(&self, x: &[f64]) -> Result<Vec<usize>, PredictError> {
        if x.len() != self.feature_count {
            return Err(PredictError::DimensionMismatch {
                expected: self.feature_count,
                found: x.len(),
            });
        }
        let mut path = vec![self.root];
        let mut node = &self.nodes[self.root];
        while let TreeNode::Split {
            feature_index,
            threshold,
            left,
            right,
        } = node
        {
            let next = if x[*feature_index] <= *threshold {
                *left
            } else {
                *right
            };
            path.push(next);
            node = &self.nodes[next];
        }
        Ok(path)
    }
}

/// Classify a feature vector.
pub fn predict_class(model: &DecisionTreeModel, x: &[f64]) -> Result<OutcomeClass, PredictError> {
    let path = model.decision_path(x)?;
    match &model.nodes[*path.last().unwrap()] {
        TreeNode::Leaf { predicted, .. } => Ok(*predicted),
        TreeNode::Split { .. } => unreachable!("decision paths end at leaves"),
    }
}

/// Serialize a model in the line-oriented text format. `save -> load -> save`
/// is byte-identical; numbers round-trip at full precision.
pub fn save_model(model: &DecisionTreeModel) -> String {
    let mut out = String::new();
    out.push_str("lfdt 1\n");
    out.push_str(&format!("features {}\n", model.feature_count));
    out.push_str(&format!("nodes {}\n", model.nodes.len()));
    for (id, node) in model.nodes.iter().enumerate() {
        match node {
            TreeNode::Leaf {
                class_weights,
                predicted,
            } => {
                out.push_str(&format!("node {id} leaf {predicted}"));
                for w in class_weights {
                    out.push_str(&format!(" {w}"));
                }
                out.push('\n');
            }
            TreeNode::Split {
                feature_index,
                threshold,
                left,
                right,
            } => {
                out.push_str(&format!(
                    "node {id} split {feature_index} {threshold} {left} {right}\n"
                ));
            }
        }
    }
    out.push_str(&format!("root {}\n", model.root));
    out
}

/// Parse the text model format, validating structure: every id appears once,
/// children are in range, and the nodes form a single tree rooted at `root`.
pub fn load_model(text: &str) -> Result<DecisionTreeModel, ModelFormatError> {
    let err = |line: usize, message: String| ModelFormatError::Format { line, message };
    let mut lines = text.lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| err(1, "missing header".into()))?;
    if header != "lfdt 1" {
        if let Some(version) = header.strip_prefix("lfdt ") {
            return Err(ModelFormatError::Version(version.to_string()));
        }
        return Err(err(1, format!("expected 'lfdt 1', found '{header}'")));
    }

    let (_, features_line) = lines
        .next()
        .ok_or_else(|| err(2, "missing features line".into()))?;
    let feature_count: usize = features_line
        .strip_prefix("features ")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| {
            err(
                2,
                format!("expected 'features <n>', found '{features_line}'"),
            )
        })?;

    let (_, nodes_line) = lines
        .next()
        .ok_or_else(|| err(3, "missing nodes line".into()))?;
    let node_count: usize = nodes_line
        .strip_prefix("nodes ")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| err(3, format!("expected 'nodes <n>', found '{nodes_line}'")))?;
    if node_count == 0 {
        return Err(err(3, "model must have at least one node".into()));
    }

    let mut nodes: Vec<Option<TreeNode>> = vec![None; node_count];
    let mut root: Option<usize> = None;
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("root ") {
            if root.is_some() {
                return Err(err(line_no, "duplicate root line".into()));
            }
            let id: usize = rest
                .parse()
                .map_err(|_| err(line_no, format!("invalid root id '{rest}'")))?;
            if id >= node_count {
                return Err(err(line_no, format!("root id {id} out of range")));
            }
            root = Some(id);
            continue;
        }
        let rest = line
            .strip_prefix("node ")
            .ok_or_else(|| err(line_no, format!("unrecognized line '{line}'")))?;
        let fields: Vec<&str> = rest.split_whitespace().collect();
        if fields.len() < 2 {
            return Err(err(line_no, "truncated node line".into()));
        }
        let id: usize = fields[0]
            .parse()
            .map_err(|_| err(line_no, format!("invalid node id '{}'", fields[0])))?;
        if id >= node_count {
            return Err(err(
                line_no,
                format!("node id {id} out of range (nodes {node_count})"),
            ));
        }
        if nodes[id].is_some() {
            return Err(err(line_no, format!("duplicate node id {id}")));
        }
        let node = match fields[1] {
            "leaf" => {
                if fields.len() != 2 + 1 + CLASS_COUNT {
                    return Err(err(
                        line_no,
                        format!("leaf needs predicted class and {CLASS_COUNT} weights"),
                    ));
                }
                let predicted_value: u8 = fields[2]
                    .parse()
                    .map_err(|_| err(line_no, format!("invalid class '{}'", fields[2])))?;
                let predicted = OutcomeClass::new(predicted_value)
                    .ok_or_else(|| err(line_no, format!("class {predicted_value} out of range")))?;
                let mut class_weights = [0.0f64; CLASS_COUNT];
                for (w, field) in class_weights.iter_mut().zip(&fields[3..]) {
                    *w = field
                        .parse()
                        .map_err(|_| err(line_no, format!("invalid weight '{field}'")))?;
                    if !w.is_finite() || *w < 0.0 {
                        return Err(err(line_no, format!("weight '{field}' out of range")));
                    }
                }
                if predicted != predicted_from_weights(&class_weights) {
                    return Err(err(
                        line_no,
                        "leaf prediction inconsistent with class weights".into(),
                    ));
                }
                TreeNode::Leaf {
                    class_weights,
                    predicted,
                }
            }
            "split" => {
                if fields.len() != 6 {
                    return Err(err(
                        line_no,
                        "split needs feature, threshold, children".into(),
                    ));
                }
                let feature_index: usize = fields[2]
                    .parse()
                    .map_err(|_| err(line_no, format!("invalid feature index '{}'", fields[2])))?;
                if feature_index >= feature_count {
                    return Err(err(
                        line_no,
                        format!("feature index {feature_index} out of range"),
                    ));
                }
                let threshold: f64 = fields[3]
                    .parse()
                    .map_err(|_| err(line_no, format!("invalid threshold '{}'", fields[3])))?;
                if !threshold.is_finite() {
                    return Err(err(line_no, "threshold must be finite".into()));
                }
                let left: usize = fields[4]
                    .parse()
                    .map_err(|_| err(line_no, format!("invalid child id '{}'", fields[4])))?;
                let right: usize = fields[5]
                    .parse()
                    .map_err(|_| err(line_no, format!("invalid child id '{}'", fields[5])))?;
                if left >= node_count || right >= node_count {
                    return Err(err(line_no, "child id out of range".into()));
                }
                TreeNode::Split {
                    feature_index,
                    threshold,
                    left,
                    right,
                }
            }
            other => return Err(err(line_no, format!("unknown node kind '{other}'"))),
        };
        nodes[id] = Some(node);
    }

    let total_lines = text.lines().count();
    let missing = nodes.iter().position(|n| n.is_none());
    if let Some(id) = missing {
        return Err(err(
            total_lines,
            format!("node {id} missing (declared nodes {node_count})"),
        ));
    }
    let root = root.ok_or_else(|| err(total_lines, "missing root line".into()))?;
    let nodes: Vec<TreeNode> = nodes.into_iter().map(Option::unwrap).collect();

    // The nodes must form one tree: every node reachable from the root
    // exactly once.
    let mut seen = HashSet::new();
    let mut walk = vec![root];
    while let Some(id) = walk.pop() {
        if !seen.insert(id) {
            return Err(err(total_lines, format!("node {id} reachable twice")));
        }
        if let TreeNode::Split { left, right, .. } = &nodes[id] {
            walk.push(*left);
            walk.push(*right);
        }
    }
    if seen.len() != node_count {
        return Err(err(
            total_lines,
            format!(
                "{} of {node_count} nodes unreachable from root",
                node_count - seen.len()
            ),
        ));
    }

    Ok(DecisionTreeModel {
        nodes,
        root,
        feature_count,
    })
}
