//! Shallow regression trees over a 1D or 2D bin grid.
//!
//! Leaves are axis-aligned rectangles of bins. Growth is best-first: each
//! step splits the leaf whose best single cut yields the largest gain, until
//! `max_leaves` leaves exist or no cut improves the fit. On 2D grids the
//! first two cuts are chosen jointly, so purely interactive patterns (where
//! no single cut helps on its own) are still found. With first-order
//! gradients and unit hessians the gain is exactly the SSE reduction.

/// Gradient and hessian sums per grid cell; cell `(x, y)` lives at `x * ny + y`.
#[derive(Debug, Clone)]
pub struct Histogram {
    pub nx: usize,
    pub ny: usize,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

impl Histogram {
    pub fn new(nx: usize, ny: usize) -> Self {
        Histogram { nx, ny, grad: vec![0.0; nx * ny], hess: vec![0.0; nx * ny] }
    }

    pub fn clear(&mut self) {
        self.grad.iter_mut().for_each(|g| *g = 0.0);
        self.hess.iter_mut().for_each(|h| *h = 0.0);
    }

    #[inline]
    pub fn add(&mut self, cell: usize, g: f64, h: f64) {
        self.grad[cell] += g;
        self.hess[cell] += h;
    }
}

#[derive(Debug, Clone, Copy)]
struct Rect {
    x0: usize,
    x1: usize,
    y0: usize,
    y1: usize,
}

struct Prefix {
    ny1: usize,
    g: Vec<f64>,
    h: Vec<f64>,
}

impl Prefix {
    fn new(hist: &Histogram) -> Self {
        let (nx1, ny1) = (hist.nx + 1, hist.ny + 1);
        let mut g = vec![0.0; nx1 * ny1];
        let mut h = vec![0.0; nx1 * ny1];
        for x in 0..hist.nx {
            let mut row_g = 0.0;
            let mut row_h = 0.0;
            for y in 0..hist.ny {
                row_g += hist.grad[x * hist.ny + y];
                row_h += hist.hess[x * hist.ny + y];
                g[(x + 1) * ny1 + y + 1] = g[x * ny1 + y + 1] + row_g;
                h[(x + 1) * ny1 + y + 1] = h[x * ny1 + y + 1] + row_h;
            }
        }
        Prefix { ny1, g, h }
    }

    fn at(&self, v: &[f64], x: usize, y: usize) -> f64 {
        v[x * self.ny1 + y]
    }

    fn sum(&self, r: Rect) -> (f64, f64) {
        let s = |v: &[f64]| {
            self.at(v, r.x1, r.y1) - self.at(v, r.x0, r.y1) - self.at(v, r.x1, r.y0) + self.at(v, r.x0, r.y0)
        };
        (s(&self.g), s(&self.h))
    }
}

#[inline]
fn score(g: f64, h: f64) -> f64 {
    g * g / h
}

#[derive(Debug, Clone, Copy)]
struct Split {
    gain: f64,
    left: Rect,
    right: Rect,
}

fn best_split(prefix: &Prefix, r: Rect) -> Option<Split> {
    let (g, h) = prefix.sum(r);
    if !(h > 0.0) {
        return None;
    }
    let parent = score(g, h);
    let mut best: Option<Split> = None;
    let mut consider = |left: Rect, right: Rect| {
        let (gl, hl) = prefix.sum(left);
        let (gr, hr) = prefix.sum(right);
        if !(hl > 0.0 && hr > 0.0) {
            return;
        }
        let gain = score(gl, hl) + score(gr, hr) - parent;
        if gain > 0.0 && best.is_none_or(|b| gain > b.gain) {
            best = Some(Split { gain, left, right });
        }
    };
    for c in r.x0 + 1..r.x1 {
        consider(Rect { x1: c, ..r }, Rect { x0: c, ..r });
    }
    for c in r.y0 + 1..r.y1 {
        consider(Rect { y1: c, ..r }, Rect { y0: c, ..r });
    }
    best
}

/// Best tree with at most three leaves over all (first cut, second cut)
/// combinations.
fn joint_three_leaves(prefix: &Prefix, root: Rect) -> Vec<Rect> {
    let (g, h) = prefix.sum(root);
    if !(h > 0.0) {
        return vec![root];
    }
    let parent = score(g, h);
    let mut best_gain = 0.0;
    let mut best = vec![root];
    let mut consider = |left: Rect, right: Rect| {
        let (gl, hl) = prefix.sum(left);
        let (gr, hr) = prefix.sum(right);
        if !(hl > 0.0 && hr > 0.0) {
            return;
        }
        let first = score(gl, hl) + score(gr, hr) - parent;
        let sl = best_split(prefix, left);
        let sr = best_split(prefix, right);
        let extra_l = sl.map_or(0.0, |s| s.gain);
        let extra_r = sr.map_or(0.0, |s| s.gain);
        let (gain, leaves) = if extra_l <= 0.0 && extra_r <= 0.0 {
            (first, vec![left, right])
        } else if extra_r > extra_l {
            let s = sr.expect("positive gain");
            (first + extra_r, vec![left, s.left, s.right])
        } else {
            let s = sl.expect("positive gain");
            (first + extra_l, vec![s.left, s.right, right])
        };
        if gain > best_gain {
            best_gain = gain;
            best = leaves;
        }
    };
    for c in root.x0 + 1..root.x1 {
        consider(Rect { x1: c, ..root }, Rect { x0: c, ..root });
    }
    for c in root.y0 + 1..root.y1 {
        consider(Rect { y1: c, ..root }, Rect { y0: c, ..root });
    }
    best
}

/// Fits a tree with at most `max_leaves` leaves and returns the leaf value
/// `G/H` for every cell (0 for leaves without hessian mass).
pub fn fit_tree(hist: &Histogram, max_leaves: usize) -> Vec<f64> {
    let prefix = Prefix::new(hist);
    let root = Rect { x0: 0, x1: hist.nx, y0: 0, y1: hist.ny };
    let mut leaves = if hist.nx > 1 && hist.ny > 1 && max_leaves >= 3 {
        joint_three_leaves(&prefix, root)
    } else {
        vec![root]
    };
    let mut splits: Vec<Option<Split>> = leaves.iter().map(|&r| best_split(&prefix, r)).collect();

    while leaves.len() < max_leaves.max(1) {
        let mut pick: Option<(usize, f64)> = None;
        for (i, s) in splits.iter().enumerate() {
            if let Some(s) = s {
                if pick.is_none_or(|(_, g)| s.gain > g) {
                    pick = Some((i, s.gain));
                }
            }
        }
        let Some((i, _)) = pick else { break };
        let s = splits[i].expect("picked leaf has a split");
        leaves[i] = s.left;
        splits[i] = best_split(&prefix, s.left);
        leaves.insert(i + 1, s.right);
        splits.insert(i + 1, best_split(&prefix, s.right));
    }

    let mut values = vec![0.0; hist.nx * hist.ny];
    for leaf in leaves {
        let (g, h) = prefix.sum(leaf);
        let v = if h > 0.0 { g / h } else { 0.0 };
        for x in leaf.x0..leaf.x1 {
            for y in leaf.y0..leaf.y1 {
                values[x * hist.ny + y] = v;
            }
        }
    }
    values
}
