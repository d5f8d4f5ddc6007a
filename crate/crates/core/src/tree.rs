//! CART decision-tree induction with the Gini criterion, rule export, and
//! impurity-reduction diagnostics.
//!
//! Trees here are surrogates: they are fitted on labels predicted by a
//! black-box model, with the depth limit as the complexity budget. Split
//! search is exhaustive over all features and all midpoints between
//! consecutive distinct values; ties are broken toward the lower feature
//! index, then the lower threshold, so fitting is fully deterministic.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::Label;
use crate::dense::DenseMatrix;
use crate::error::{domain, Error, Result};
use crate::sparse::SparseMatrix;

/// Read-only view over either a sparse fine-grained matrix or a dense
/// metafeature matrix, so trees can be fitted on both.
#[derive(Debug, Clone, Copy)]
pub enum FeatureView<'a> {
    Sparse(&'a SparseMatrix),
    Dense(&'a DenseMatrix),
}

impl<'a> FeatureView<'a> {
    pub fn n_rows(&self) -> usize {
        match self {
            FeatureView::Sparse(x) => x.n_rows(),
            FeatureView::Dense(x) => x.n_rows(),
        }
    }

    pub fn n_cols(&self) -> usize {
        match self {
            FeatureView::Sparse(x) => x.n_cols(),
            FeatureView::Dense(x) => x.n_cols(),
        }
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        match self {
            FeatureView::Sparse(x) => x.get(i, j),
            FeatureView::Dense(x) => x.get(i, j),
        }
    }
}

/// Which representation a tree was fitted on. Affects how explanation
/// feature sets are compared across refits, not the fitting itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepresentationKind {
    FineGrained,
    Ddmf,
    DomainMf,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Internal {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        label: Label,
        /// Class counts of the training instances routed here.
        counts: [usize; 2],
        /// Majority tie resolved to class 0.
        tied: bool,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    root: TreeNode,
    max_depth: usize,
    representation_kind: RepresentationKind,
    feature_dimension: usize,
    n_train: usize,
}

/// One path condition: `feature <= threshold` or `feature > threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Condition {
    pub feature: usize,
    pub relation: Relation,
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Gt,
}

/// One leaf exported as a rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub antecedents: Vec<Condition>,
    pub label: Label,
    /// Training instances routed to the leaf.
    pub coverage: usize,
    /// Majority fraction at the leaf.
    pub purity: f64,
}

/// All rules of a tree; mutually exclusive and exhaustive by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleSet {
    pub rules: Vec<Rule>,
    pub feature_names: Vec<String>,
    pub source: DecisionTree,
}

/// Fit parameters. `min_leaf` is the smallest admissible child size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FitOptions {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl FitOptions {
    pub fn with_depth(max_depth: usize) -> Self {
        FitOptions {
            max_depth,
            min_leaf: 1,
        }
    }
}

/// Gini impurity `1 - p0^2 - p1^2` of a two-class count pair.
pub fn gini(counts: [usize; 2]) -> Result<f64> {
    let total = counts[0] + counts[1];
    if total == 0 {
        return Err(domain("gini of an empty node is undefined"));
    }
    let p0 = counts[0] as f64 / total as f64;
    let p1 = counts[1] as f64 / total as f64;
    Ok(1.0 - p0 * p0 - p1 * p1)
}

/// A candidate split with its impurity reduction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    pub reduction: f64,
}

/// Per-feature columns sorted by value, with implicit zeros tracked for
/// sparse inputs.
struct ColumnStore {
    /// Per column: (row, value) pairs sorted by (value, row).
    columns: Vec<Vec<(u32, f64)>>,
}

impl ColumnStore {
    fn build(x: &FeatureView) -> ColumnStore {
        let n = x.n_rows();
        let m = x.n_cols();
        let mut columns: Vec<Vec<(u32, f64)>> = vec![Vec::new(); m];
        match x {
            FeatureView::Sparse(s) => {
                for i in 0..n {
                    let (cols, vals) = s.row(i);
                    for (&c, &v) in cols.iter().zip(vals) {
                        columns[c as usize].push((i as u32, v));
                    }
                }
            }
            FeatureView::Dense(d) => {
                for i in 0..n {
                    for (j, &v) in d.row(i).iter().enumerate() {
                        if v != 0.0 {
                            columns[j].push((i as u32, v));
                        }
                    }
                }
            }
        }
        for col in columns.iter_mut() {
            col.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
        }
        ColumnStore {
            columns,
        }
    }
}

struct Scratch {
    /// Node membership bitmap over all rows.
    member: Vec<u64>,
    /// Buffer of (value, label) pairs of stored member entries.
    buf: Vec<(f64, Label)>,
    /// Side buffer for partitioning (1 = left).
    side: Vec<u8>,
}

impl Scratch {
    fn new(n: usize) -> Scratch {
        Scratch {
            member: vec![0u64; n.div_ceil(64)],
            buf: Vec::new(),
            side: vec![0u8; n],
        }
    }

    #[inline]
    fn set(&mut self, row: u32) {
        self.member[(row / 64) as usize] |= 1u64 << (row % 64);
    }

    #[inline]
    fn clear(&mut self, row: u32) {
        self.member[(row / 64) as usize] &= !(1u64 << (row % 64));
    }

    #[inline]
    fn contains(&self, row: u32) -> bool {
        self.member[(row / 64) as usize] >> (row % 64) & 1 == 1
    }
}

fn midpoint(a: f64, b: f64) -> f64 {
    let mid = (a + b) / 2.0;
    // Guard against rounding onto an endpoint; `<= a` routes identically.
    if mid > a && mid < b {
        mid
    } else {
        a
    }
}

/// Searches the best split for the rows marked in `scratch.member`.
/// `candidates` restricts the feature set when given. Splits leaving a
/// child below `min_leaf` are skipped. Returns `None` when nothing
/// strictly reduces the impurity.
fn search_split(
    store: &ColumnStore,
    labels: &[Label],
    node_counts: [usize; 2],
    candidates: Option<&[usize]>,
    min_leaf: usize,
    scratch: &mut Scratch,
) -> Option<SplitCandidate> {
    let node_total = node_counts[0] + node_counts[1];
    if node_total < 2 {
        return None;
    }
    let parent_gini = gini(node_counts).expect("nonempty node");
    if parent_gini == 0.0 {
        return None;
    }
    let n_node = node_total as f64;
    let mut best: Option<SplitCandidate> = None;

    let all_features: Vec<usize>;
    let feats: &[usize] = match candidates {
        Some(c) => c,
        None => {
            all_features = (0..store.columns.len()).collect();
            &all_features
        }
    };

    for &feature in feats {
        let column = &store.columns[feature];
        // Gather stored member entries (already value-sorted).
        scratch.buf.clear();
        let mut stored_counts = [0usize; 2];
        for &(row, value) in column {
            if scratch.contains(row) {
                let label = labels[row as usize];
                scratch.buf.push((value, label));
                stored_counts[label as usize] += 1;
            }
        }
        let implicit = [
            node_counts[0] - stored_counts[0],
            node_counts[1] - stored_counts[1],
        ];
        let zero_block = implicit[0] + implicit[1];

        // Sweep distinct values in ascending order, inserting the implicit
        // zero block where value 0 sorts.
        let mut left = [0usize; 2];
        let mut prev: Option<f64> = None;
        let mut idx = 0usize;
        let mut zero_pending = zero_block > 0;
        loop {
            let next_is_zero =
                zero_pending && (idx >= scratch.buf.len() || scratch.buf[idx].0 > 0.0);
            let (value, delta) = if next_is_zero {
                zero_pending = false;
                (0.0, implicit)
            } else if idx < scratch.buf.len() {
                let v = scratch.buf[idx].0;
                let mut delta = [0usize; 2];
                while idx < scratch.buf.len() && scratch.buf[idx].0 == v {
                    delta[scratch.buf[idx].1 as usize] += 1;
                    idx += 1;
                }
                (v, delta)
            } else {
                break;
            };

            if let Some(prev_value) = prev {
                let nl = left[0] + left[1];
                let nr = node_total - nl;
                if nl >= min_leaf && nr >= min_leaf {
                    let right = [node_counts[0] - left[0], node_counts[1] - left[1]];
                    let gl = gini(left).expect("left child nonempty");
                    let gr = gini(right).expect("right child nonempty");
                    let reduction = parent_gini
                        - (nl as f64 / n_node) * gl
                        - (nr as f64 / n_node) * gr;
                    if reduction > 0.0 {
                        let threshold = midpoint(prev_value, value);
                        let better = match &best {
                            None => true,
                            Some(b) => {
                                reduction > b.reduction
                                    || (reduction == b.reduction
                                        && (feature, threshold) < (b.feature, b.threshold))
                            }
                        };
                        if better {
                            best = Some(SplitCandidate {
                                feature,
                                threshold,
                                reduction,
                            });
                        }
                    }
                }
            }
            left[0] += delta[0];
            left[1] += delta[1];
            prev = Some(value);
        }
    }
    best
}

/// Best single split over the given candidate features, evaluated on all
/// rows of `x`. Returns `None` when no split strictly reduces impurity.
pub fn best_split(
    x: FeatureView,
    labels: &[Label],
    candidate_features: &[usize],
) -> Result<Option<SplitCandidate>> {
    if labels.len() != x.n_rows() {
        return Err(Error::Dimension {
            what: "label array length",
            expected: x.n_rows(),
            got: labels.len(),
        });
    }
    if let Some(&bad) = candidate_features.iter().find(|&&f| f >= x.n_cols()) {
        return Err(domain(format!("candidate feature {bad} out of range")));
    }
    if x.n_rows() < 2 {
        return Ok(None);
    }
    let store = ColumnStore::build(&x);
    let mut scratch = Scratch::new(x.n_rows());
    let mut counts = [0usize; 2];
    for (i, &l) in labels.iter().enumerate() {
        scratch.set(i as u32);
        counts[l as usize] += 1;
    }
    Ok(search_split(
        &store,
        labels,
        counts,
        Some(candidate_features),
        1,
        &mut scratch,
    ))
}

/// Fits a CART tree on (possibly black-box-predicted) labels by recursive
/// greedy growth. Growth stops at the depth limit, on pure nodes, when a
/// child would fall below `min_leaf`, or when no split reduces impurity.
pub fn fit_cart(
    x: FeatureView,
    y_hat: &[Label],
    options: FitOptions,
    kind: RepresentationKind,
) -> Result<DecisionTree> {
    if x.n_rows() == 0 {
        return Err(domain("cannot fit a tree on empty data"));
    }
    if y_hat.len() != x.n_rows() {
        return Err(Error::Dimension {
            what: "label array length",
            expected: x.n_rows(),
            got: y_hat.len(),
        });
    }
    if y_hat.iter().any(|&l| l > 1) {
        return Err(domain("labels must be binary"));
    }
    if options.max_depth == 0 {
        return Err(domain("max_depth must be at least 1"));
    }
    if options.min_leaf == 0 {
        return Err(domain("min_leaf must be at least 1"));
    }

    let store = ColumnStore::build(&x);
    let mut scratch = Scratch::new(x.n_rows());
    let rows: Vec<u32> = (0..x.n_rows() as u32).collect();
    let root = grow(&store, y_hat, rows, 0, options, &mut scratch);
    Ok(DecisionTree {
        root,
        max_depth: options.max_depth,
        representation_kind: kind,
        feature_dimension: x.n_cols(),
        n_train: x.n_rows(),
    })
}

fn leaf_from_counts(counts: [usize; 2]) -> TreeNode {
    let tied = counts[0] == counts[1];
    let label = if counts[1] > counts[0] { 1 } else { 0 };
    TreeNode::Leaf {
        label,
        counts,
        tied,
    }
}

fn grow(
    store: &ColumnStore,
    labels: &[Label],
    rows: Vec<u32>,
    depth: usize,
    options: FitOptions,
    scratch: &mut Scratch,
) -> TreeNode {
    let mut counts = [0usize; 2];
    for &r in &rows {
        counts[labels[r as usize] as usize] += 1;
    }
    if depth >= options.max_depth
        || counts[0] == 0
        || counts[1] == 0
        || rows.len() < 2 * options.min_leaf
    {
        return leaf_from_counts(counts);
    }

    for &r in &rows {
        scratch.set(r);
    }
    let split = search_split(store, labels, counts, None, options.min_leaf, scratch);
    for &r in &rows {
        scratch.clear(r);
    }

    let Some(split) = split else {
        return leaf_from_counts(counts);
    };

    // Partition rows by the chosen split. Default side covers the implicit
    // zeros of sparse columns; stored entries overwrite it.
    let default_left = 0.0 <= split.threshold;
    for &r in &rows {
        scratch.side[r as usize] = default_left as u8;
        scratch.set(r);
    }
    for &(row, value) in &store.columns[split.feature] {
        if scratch.contains(row) {
            scratch.side[row as usize] = (value <= split.threshold) as u8;
        }
    }
    let mut left_rows = Vec::new();
    let mut right_rows = Vec::new();
    for &r in &rows {
        scratch.clear(r);
        if scratch.side[r as usize] == 1 {
            left_rows.push(r);
        } else {
            right_rows.push(r);
        }
    }
    drop(rows);

    let left = grow(store, labels, left_rows, depth + 1, options, scratch);
    let right = grow(store, labels, right_rows, depth + 1, options, scratch);
    TreeNode::Internal {
        feature: split.feature,
        threshold: split.threshold,
        left: Box::new(left),
        right: Box::new(right),
    }
}

impl DecisionTree {
    pub fn root(&self) -> &TreeNode {
        &self.root
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn representation_kind(&self) -> RepresentationKind {
        self.representation_kind
    }

    pub fn feature_dimension(&self) -> usize {
        self.feature_dimension
    }

    pub fn n_train(&self) -> usize {
        self.n_train
    }

    /// Actual depth (a single leaf has depth 0).
    pub fn depth(&self) -> usize {
        fn walk(node: &TreeNode) -> usize {
            match node {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Internal {
                    left,
                    right,
                    ..
                } => 1 + walk(left).max(walk(right)),
            }
        }
        walk(&self.root)
    }

    pub fn n_leaves(&self) -> usize {
        fn walk(node: &TreeNode) -> usize {
            match node {
                TreeNode::Leaf { .. } => 1,
                TreeNode::Internal {
                    left,
                    right,
                    ..
                } => walk(left) + walk(right),
            }
        }
        walk(&self.root)
    }

    pub fn n_tied_leaves(&self) -> usize {
        fn walk(node: &TreeNode) -> usize {
            match node {
                TreeNode::Leaf { tied, .. } => usize::from(*tied),
                TreeNode::Internal {
                    left,
                    right,
                    ..
                } => walk(left) + walk(right),
            }
        }
        walk(&self.root)
    }

    /// Routes a single instance given a feature lookup.
    pub fn predict_with<F: Fn(usize) -> f64>(&self, lookup: F) -> Label {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { label, .. } => return *label,
                TreeNode::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if lookup(*feature) <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }
}

/// Root-to-leaf routing for every row of `x`.
pub fn predict(tree: &DecisionTree, x: FeatureView) -> Result<Vec<Label>> {
    if x.n_cols() != tree.feature_dimension {
        return Err(Error::Dimension {
            what: "feature dimension",
            expected: tree.feature_dimension,
            got: x.n_cols(),
        });
    }
    Ok((0..x.n_rows())
        .map(|i| tree.predict_with(|f| x.value(i, f)))
        .collect())
}

/// Converts a tree into one rule per leaf. Conditions on the same feature
/// along a path are merged, keeping the tightest bound on each side.
pub fn extract_rules(tree: &DecisionTree, feature_names: &[String]) -> Result<RuleSet> {
    if feature_names.len() != tree.feature_dimension {
        return Err(Error::Dimension {
            what: "feature name count",
            expected: tree.feature_dimension,
            got: feature_names.len(),
        });
    }
    // Per feature: (upper bound from Le conditions, lower bound from Gt).
    type Bounds = BTreeMap<usize, (Option<f64>, Option<f64>)>;

    fn walk(node: &TreeNode, bounds: &mut Bounds, rules: &mut Vec<Rule>) {
        match node {
            TreeNode::Leaf {
                label,
                counts,
                ..
            } => {
                let mut antecedents = Vec::new();
                for (&feature, &(upper, lower)) in bounds.iter() {
                    if let Some(t) = lower {
                        antecedents.push(Condition {
                            feature,
                            relation: Relation::Gt,
                            threshold: t,
                        });
                    }
                    if let Some(t) = upper {
                        antecedents.push(Condition {
                            feature,
                            relation: Relation::Le,
                            threshold: t,
                        });
                    }
                }
                let coverage = counts[0] + counts[1];
                let purity = if coverage > 0 {
                    counts[*label as usize] as f64 / coverage as f64
                } else {
                    0.0
                };
                rules.push(Rule {
                    antecedents,
                    label: *label,
                    coverage,
                    purity,
                });
            }
            TreeNode::Internal {
                feature,
                threshold,
                left,
                right,
            } => {
                let saved = bounds.get(feature).copied();
                {
                    let entry = bounds.entry(*feature).or_insert((None, None));
                    entry.0 = Some(entry.0.map_or(*threshold, |u: f64| u.min(*threshold)));
                }
                walk(left, bounds, rules);
                restore(bounds, *feature, saved);

                let saved = bounds.get(feature).copied();
                {
                    let entry = bounds.entry(*feature).or_insert((None, None));
                    entry.1 = Some(entry.1.map_or(*threshold, |l: f64| l.max(*threshold)));
                }
                walk(right, bounds, rules);
                restore(bounds, *feature, saved);
            }
        }
    }

    fn restore(bounds: &mut Bounds, feature: usize, saved: Option<(Option<f64>, Option<f64>)>) {
        match saved {
            Some(v) => {
                bounds.insert(feature, v);
            }
            None => {
                bounds.remove(&feature);
            }
        }
    }

    let mut rules = Vec::new();
    walk(&tree.root, &mut BTreeMap::new(), &mut rules);
    Ok(RuleSet {
        rules,
        feature_names: feature_names.to_vec(),
        source: tree.clone(),
    })
}

impl Rule {
    /// True when the instance described by `lookup` satisfies every
    /// antecedent.
    pub fn matches<F: Fn(usize) -> f64>(&self, lookup: &F) -> bool {
        self.antecedents.iter().all(|c| match c.relation {
            Relation::Le => lookup(c.feature) <= c.threshold,
            Relation::Gt => lookup(c.feature) > c.threshold,
        })
    }
}

impl RuleSet {
    /// Evaluates the rule list directly (first matching rule wins; the
    /// rules are mutually exclusive, so order does not matter).
    pub fn predict(&self, x: FeatureView) -> Result<Vec<Label>> {
        if x.n_cols() != self.source.feature_dimension {
            return Err(Error::Dimension {
                what: "feature dimension",
                expected: self.source.feature_dimension,
                got: x.n_cols(),
            });
        }
        let mut out = Vec::with_capacity(x.n_rows());
        for i in 0..x.n_rows() {
            let lookup = |f: usize| x.value(i, f);
            let rule = self
                .rules
                .iter()
                .find(|r| r.matches(&lookup))
                .ok_or_else(|| domain(format!("no rule covers instance {i}")))?;
            out.push(rule.label);
        }
        Ok(out)
    }

    pub fn max_antecedents(&self) -> usize {
        self.rules.iter().map(|r| r.antecedents.len()).max().unwrap_or(0)
    }

    /// Renders one rule per line:
    /// `IF f <= t AND ... THEN class=c [coverage=n, purity=p]`.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for rule in &self.rules {
            let mut line = String::from("IF ");
            if rule.antecedents.is_empty() {
                line.push_str("TRUE");
            } else {
                let parts: Vec<String> = rule
                    .antecedents
                    .iter()
                    .map(|c| {
                        let rel = match c.relation {
                            Relation::Le => "<=",
                            Relation::Gt => ">",
                        };
                        format!("{} {} {:.6}", self.feature_names[c.feature], rel, c.threshold)
                    })
                    .collect();
                line.push_str(&parts.join(" AND "));
            }
            line.push_str(&format!(
                " THEN class={} [coverage={}, purity={:.4}]\n",
                rule.label, rule.coverage, rule.purity
            ));
            out.push_str(&line);
        }
        out
    }
}

/// Distinct features used by the internal nodes of a tree.
pub fn feature_set(tree: &DecisionTree) -> BTreeSet<usize> {
    fn walk(node: &TreeNode, set: &mut BTreeSet<usize>) {
        if let TreeNode::Internal {
            feature,
            left,
            right,
            ..
        } = node
        {
            set.insert(*feature);
            walk(left, set);
            walk(right, set);
        }
    }
    let mut set = BTreeSet::new();
    walk(&tree.root, &mut set);
    set
}

/// Each feature's best single-split Gini reduction at the root, sorted
/// descending (ties by ascending feature index), truncated to `top_n`.
/// Features admitting no impurity-reducing split report 0.
pub fn impurity_reduction_ranking(
    x: FeatureView,
    y_hat: &[Label],
    top_n: usize,
) -> Result<Vec<(usize, f64)>> {
    if y_hat.len() != x.n_rows() {
        return Err(Error::Dimension {
            what: "label array length",
            expected: x.n_rows(),
            got: y_hat.len(),
        });
    }
    if x.n_rows() == 0 {
        return Err(domain("empty data"));
    }
    let store = ColumnStore::build(&x);
    let mut scratch = Scratch::new(x.n_rows());
    let mut counts = [0usize; 2];
    for (i, &l) in y_hat.iter().enumerate() {
        scratch.set(i as u32);
        counts[l as usize] += 1;
    }
    let mut ranked: Vec<(usize, f64)> = (0..x.n_cols())
        .map(|feature| {
            let red = search_split(&store, y_hat, counts, Some(&[feature]), 1, &mut scratch)
                .map_or(0.0, |s| s.reduction);
            (feature, red)
        })
        .collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    ranked.truncate(top_n);
    Ok(ranked)
}
