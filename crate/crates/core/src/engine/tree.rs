//! Greedy CART-style classification trees and bagged forests.

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    Gini,
    Entropy,
}

#[derive(Debug, Clone)]
pub struct TreeConfig {
    pub criterion: Criterion,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    /// Features examined per split; `None` examines all of them.
    pub max_features: Option<usize>,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            criterion: Criterion::Gini,
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node<S> {
    Leaf {
        class: usize,
    },
    Split {
        feature: usize,
        threshold: S,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree<S> {
    nodes: Vec<Node<S>>,
}

fn impurity<S: Scalar>(counts: &[S], total: S, criterion: Criterion) -> S {
    if total <= S::zero() {
        return S::zero();
    }
    match criterion {
        Criterion::Gini => {
            S::one()
                - counts
                    .iter()
                    .map(|&c| {
                        let p = c / total;
                        p * p
                    })
                    .sum::<S>()
        }
        Criterion::Entropy => counts
            .iter()
            .filter(|&&c| c > S::zero())
            .map(|&c| {
                let p = c / total;
                -p * p.log2()
            })
            .sum(),
    }
}

/// Index of the largest count; the lowest index wins ties.
pub fn argmax<S: Scalar>(counts: &[S]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

struct Builder<'a, S> {
    x: &'a [Vec<S>],
    y: &'a [usize],
    w: &'a [S],
    n_classes: usize,
    config: &'a TreeConfig,
    rng: Option<&'a mut ChaCha8Rng>,
    nodes: Vec<Node<S>>,
}

struct BestSplit<S> {
    feature: usize,
    threshold: S,
    score: S,
}

impl<S: Scalar> Builder<'_, S> {
    fn class_counts(&self, idx: &[usize]) -> Vec<S> {
        let mut counts = vec![S::zero(); self.n_classes];
        for &i in idx {
            counts[self.y[i]] = counts[self.y[i]] + self.w[i];
        }
        counts
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let d = self.x.first().map_or(0, Vec::len);
        match (self.config.max_features, self.rng.as_deref_mut()) {
            (Some(m), Some(rng)) if m < d => {
                let mut f = sample(rng, d, m).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..d).collect(),
        }
    }

    fn best_split(&mut self, idx: &[usize]) -> Option<BestSplit<S>> {
        let min_leaf = self.config.min_samples_leaf.max(1);
        let mut best: Option<BestSplit<S>> = None;
        let parent = self.class_counts(idx);
        let total: S = parent.iter().copied().sum();
        for feature in self.candidate_features() {
            let mut order = idx.to_vec();
            order.sort_by(|&a, &b| {
                self.x[a][feature]
                    .partial_cmp(&self.x[b][feature])
                    .expect("finite features")
            });
            let mut left = vec![S::zero(); self.n_classes];
            let mut left_w = S::zero();
            for pos in 0..order.len() - 1 {
                let i = order[pos];
                left[self.y[i]] = left[self.y[i]] + self.w[i];
                left_w = left_w + self.w[i];
                let (here, next) = (self.x[i][feature], self.x[order[pos + 1]][feature]);
                if here.partial_cmp(&next) != Some(std::cmp::Ordering::Less)
                    || pos + 1 < min_leaf
                    || order.len() - pos - 1 < min_leaf
                {
                    continue;
                }
                let right: Vec<S> = parent.iter().zip(&left).map(|(&p, &l)| p - l).collect();
                let right_w = total - left_w;
                let score = (left_w * impurity(&left, left_w, self.config.criterion)
                    + right_w * impurity(&right, right_w, self.config.criterion))
                    / total;
                if best.as_ref().is_none_or(|b| score < b.score) {
                    let mid = here + (next - here) / S::lit(2.0);
                    let threshold = if mid < next { mid } else { here };
                    best = Some(BestSplit {
                        feature,
                        threshold,
                        score,
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let counts = self.class_counts(&idx);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            class: argmax(&counts),
        });
        let pure = counts.iter().filter(|&&c| c > S::zero()).count() <= 1;
        let depth_reached = self.config.max_depth.is_some_and(|m| depth >= m);
        if pure || depth_reached || idx.len() < self.config.min_samples_split.max(2) {
            return id;
        }
        // splits are taken whenever a node is impure, even at zero gain
        let Some(split) = self.best_split(&idx) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| self.x[i][split.feature] <= split.threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }
}

impl<S: Scalar> Tree<S> {
    /// Grows a tree on the rows `idx` of `x` (repeats allowed) with per-row
    /// weights `w`. `rng` drives per-split feature subsampling.
    pub fn fit(
        x: &[Vec<S>],
        y: &[usize],
        w: &[S],
        idx: Vec<usize>,
        n_classes: usize,
        config: &TreeConfig,
        rng: Option<&mut ChaCha8Rng>,
    ) -> Tree<S> {
        let mut b = Builder {
            x,
            y,
            w,
            n_classes,
            config,
            rng,
            nodes: Vec::new(),
        };
        b.grow(idx, 0);
        Tree { nodes: b.nodes }
    }

    pub fn predict_row(&self, row: &[S]) -> usize {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { class } => return *class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk<S>(nodes: &[Node<S>], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassWeight {
    Uniform,
    Balanced,
    BalancedSubsample,
}

#[derive(Debug, Clone)]
pub struct ForestConfig {
    pub n_estimators: usize,
    pub bootstrap: bool,
    pub class_weight: ClassWeight,
    pub tree: TreeConfig,
}

/// `n / (k * count_c)` for the classes present in `idx`.
fn balanced_weights<S: Scalar>(y: &[usize], idx: &[usize], n_classes: usize) -> Vec<S> {
    let mut counts = vec![0usize; n_classes];
    for &i in idx {
        counts[y[i]] += 1;
    }
    let present = counts.iter().filter(|&&c| c > 0).count().max(1);
    counts
        .iter()
        .map(|&c| {
            if c == 0 {
                S::zero()
            } else {
                S::of_usize(idx.len()) / (S::of_usize(present) * S::of_usize(c))
            }
        })
        .collect()
}

pub fn fit_forest<S: Scalar>(
    x: &[Vec<S>],
    y: &[usize],
    n_classes: usize,
    config: &ForestConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<Tree<S>> {
    let n = x.len();
    let all: Vec<usize> = (0..n).collect();
    let full_weights = balanced_weights::<S>(y, &all, n_classes);
    (0..config.n_estimators)
        .map(|_| {
            let idx: Vec<usize> = if config.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                all.clone()
            };
            let class_w = match config.class_weight {
                ClassWeight::Uniform => vec![S::one(); n_classes],
                ClassWeight::Balanced => full_weights.clone(),
                ClassWeight::BalancedSubsample => balanced_weights(y, &idx, n_classes),
            };
            let w: Vec<S> = y.iter().map(|&c| class_w[c]).collect();
            Tree::fit(x, y, &w, idx, n_classes, &config.tree, Some(rng))
        })
        .collect()
}

/// Majority vote; the lowest class index wins ties.
pub fn vote<S: Scalar>(trees: &[Tree<S>], row: &[S], n_classes: usize) -> usize {
    let mut votes = vec![0usize; n_classes];
    for t in trees {
        votes[t.predict_row(row)] += 1;
    }
    let mut best = 0;
    for (i, &v) in votes.iter().enumerate() {
        if v > votes[best] {
            best = i;
        }
    }
    best
}
