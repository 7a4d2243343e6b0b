//! Gradient/hessian histograms over binned features and split search.

use rayon::prelude::*;

use super::bins::{BinMapper, BinnedMatrix};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BinStats {
    pub grad: f64,
    pub hess: f64,
    pub count: u32,
}

impl BinStats {
    fn add(&mut self, other: &BinStats) {
        self.grad += other.grad;
        self.hess += other.hess;
        self.count += other.count;
    }

    fn sub(&mut self, other: &BinStats) {
        self.grad -= other.grad;
        self.hess -= other.hess;
        self.count -= other.count;
    }
}

/// Every feature gets a fixed stride of 256 bins so a `u8` code indexes its
/// slot without a bounds check.
const STRIDE: usize = 256;

/// Which features get histograms (those with at least two bins).
#[derive(Debug, Clone)]
pub struct HistogramLayout {
    features: Vec<usize>,
    n_bins: Vec<usize>,
}

impl HistogramLayout {
    pub fn new(mapper: &BinMapper) -> Self {
        let features: Vec<usize> = (0..mapper.n_features()).filter(|&f| mapper.n_bins(f) > 1).collect();
        let n_bins = features.iter().map(|&f| mapper.n_bins(f)).collect();
        Self { features, n_bins }
    }

    pub fn features(&self) -> &[usize] {
        &self.features
    }

    fn total_bins(&self) -> usize {
        self.features.len() * STRIDE
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    bins: Vec<BinStats>,
}

fn accumulate(hist: &mut [BinStats; STRIDE], codes: impl Iterator<Item = u8>, gh: &[[f64; 2]]) {
    for (b, &[g, h]) in codes.zip(gh) {
        let s = &mut hist[b as usize];
        s.grad += g;
        s.hess += h;
        s.count += 1;
    }
}

impl Histogram {
    /// Accumulate `rows` (all rows when `None`). Each feature is filled by one
    /// worker in row order, so results do not depend on the thread count.
    pub fn build(
        layout: &HistogramLayout,
        binned: &BinnedMatrix,
        rows: Option<&[u32]>,
        grad: &[f64],
        hess: &[f64],
    ) -> Histogram {
        let mut h = Histogram { bins: Vec::new() };
        h.rebuild(layout, binned, rows, grad, hess);
        h
    }

    /// Same as [`Histogram::build`] but reuses this histogram's storage.
    pub fn rebuild(&mut self, layout: &HistogramLayout, binned: &BinnedMatrix, rows: Option<&[u32]>, grad: &[f64], hess: &[f64]) {
        self.rebuild_and_split(layout, binned, rows, grad, hess, None);
    }

    /// Rebuild, then search each feature for a split while its bins are still
    /// in cache. Returns `None` when `request` is `None`.
    pub fn rebuild_and_split(
        &mut self,
        layout: &HistogramLayout,
        binned: &BinnedMatrix,
        rows: Option<&[u32]>,
        grad: &[f64],
        hess: &[f64],
        request: Option<SplitRequest>,
    ) -> Option<Split> {
        self.bins.resize(layout.total_bins(), BinStats::default());
        let gh: Vec<[f64; 2]> = match rows {
            Some(rows) => rows.iter().map(|&r| [grad[r as usize], hess[r as usize]]).collect(),
            None => grad.iter().zip(hess).map(|(&g, &h)| [g, h]).collect(),
        };
        let parent = request.map(|r| r.parent_score());

        let per_feature: Vec<Option<Split>> = self
            .bins
            .par_chunks_exact_mut(STRIDE)
            .enumerate()
            .map(|(i, hist)| {
                let hist: &mut [BinStats; STRIDE] = hist.try_into().expect("fixed stride");
                hist.fill(BinStats::default());
                let col = binned.column(layout.features[i]);
                match rows {
                    Some(rows) => accumulate(hist, rows.iter().map(|&r| col[r as usize]), &gh),
                    None => accumulate(hist, col.iter().copied(), &gh),
                }
                let r = request?;
                scan_feature(&hist[..layout.n_bins[i]], layout.features[i], r, parent?)
            })
            .collect();
        pick_best(per_feature)
    }

    /// Turn a parent histogram into the histogram of the sibling of `child`.
    pub fn subtract(&mut self, child: &Histogram) {
        for (p, c) in self.bins.iter_mut().zip(&child.bins) {
            p.sub(c);
        }
    }

    /// [`Histogram::subtract`] fused with the split search on the result.
    pub fn subtract_and_split(&mut self, child: &Histogram, layout: &HistogramLayout, request: SplitRequest) -> Option<Split> {
        let parent = request.parent_score();
        let per_feature: Vec<Option<Split>> = self
            .bins
            .par_chunks_exact_mut(STRIDE)
            .zip(child.bins.par_chunks_exact(STRIDE))
            .enumerate()
            .map(|(i, (p, c))| {
                let n = layout.n_bins[i];
                for (p, c) in p[..n].iter_mut().zip(&c[..n]) {
                    p.sub(c);
                }
                scan_feature(&p[..n], layout.features[i], request, parent)
            })
            .collect();
        pick_best(per_feature)
    }

    /// Bins of the `i`-th laid-out feature.
    pub fn feature_bins<'a>(&'a self, layout: &HistogramLayout, i: usize) -> &'a [BinStats] {
        &self.bins[i * STRIDE..i * STRIDE + layout.n_bins[i]]
    }

    /// Sum over one feature's bins; identical for every feature up to rounding.
    pub fn totals(&self, layout: &HistogramLayout, i: usize) -> BinStats {
        let mut t = BinStats::default();
        for b in self.feature_bins(layout, i) {
            t.add(b);
        }
        t
    }
}

/// Recycled histogram storage; avoids faulting in fresh pages for every node.
#[derive(Debug, Default)]
pub struct HistogramPool {
    free: Vec<Histogram>,
}

impl HistogramPool {
    /// Histogram of `rows` plus, when requested, its best split.
    pub fn build(
        &mut self,
        layout: &HistogramLayout,
        binned: &BinnedMatrix,
        rows: Option<&[u32]>,
        grad: &[f64],
        hess: &[f64],
        request: Option<SplitRequest>,
    ) -> (Histogram, Option<Split>) {
        let mut h = self.free.pop().unwrap_or(Histogram { bins: Vec::new() });
        let split = h.rebuild_and_split(layout, binned, rows, grad, hess, request);
        (h, split)
    }

    pub fn recycle(&mut self, h: Histogram) {
        self.free.push(h);
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SplitParams {
    pub l2: f64,
    pub min_samples_leaf: usize,
}

/// A node's gradient totals together with the split constraints.
#[derive(Debug, Clone, Copy)]
pub struct SplitRequest {
    pub total: BinStats,
    pub params: SplitParams,
}

impl SplitRequest {
    fn parent_score(&self) -> f64 {
        score(self.total.grad, self.total.hess, self.params.l2)
    }
}

/// Best split of a node: rows with `bin <= bin` go left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub bin: u8,
    pub gain: f64,
    pub left: BinStats,
    pub right: BinStats,
}

const MIN_DENOMINATOR: f64 = 1e-12;

fn score(grad: f64, hess: f64, l2: f64) -> f64 {
    grad * grad / (hess + l2)
}

/// Best positive-gain split within one feature; ties keep the lower bin.
fn scan_feature(bins: &[BinStats], feature: usize, request: SplitRequest, parent: f64) -> Option<Split> {
    let SplitRequest { total, params } = request;
    let l2 = params.l2;
    let mut left = BinStats::default();
    // Candidates are compared as fractions num/den of the children's summed
    // score, which avoids two divisions per bin.
    let mut best: Option<(f64, f64, usize, BinStats)> = None;
    for (b, stats) in bins[..bins.len() - 1].iter().enumerate() {
        // An empty bin repeats the previous candidate, which wins the tie.
        if stats.count == 0 {
            continue;
        }
        left.add(stats);
        if (left.count as usize) < params.min_samples_leaf {
            continue;
        }
        if ((total.count - left.count) as usize) < params.min_samples_leaf {
            break;
        }
        let (dl, dr) = (left.hess + l2, total.hess - left.hess + l2);
        if dl <= MIN_DENOMINATOR || dr <= MIN_DENOMINATOR {
            continue;
        }
        let right_grad = total.grad - left.grad;
        let num = left.grad * left.grad * dr + right_grad * right_grad * dl;
        let den = dl * dr;
        let better = match best {
            None => num > parent * den,
            Some((bn, bd, ..)) => num * bd > bn * den,
        };
        if better {
            best = Some((num, den, b, left));
        }
    }
    let (_, _, b, left) = best?;
    let right = BinStats {
        grad: total.grad - left.grad,
        hess: total.hess - left.hess,
        count: total.count - left.count,
    };
    let gain = 0.5 * (score(left.grad, left.hess, l2) + score(right.grad, right.hess, l2) - parent);
    (gain > 0.0).then_some(Split {
        feature,
        bin: b as u8,
        gain,
        left,
        right,
    })
}

/// Highest gain across features; ties prefer the lower feature index.
fn pick_best(per_feature: Vec<Option<Split>>) -> Option<Split> {
    per_feature.into_iter().flatten().fold(None, |acc: Option<Split>, s| match acc {
        Some(a) if a.gain >= s.gain => Some(a),
        _ => Some(s),
    })
}

/// Highest-gain split with positive gain. Ties prefer the lower feature index,
/// then the lower bin.
pub fn best_split(hist: &Histogram, layout: &HistogramLayout, total: BinStats, params: SplitParams) -> Option<Split> {
    let request = SplitRequest { total, params };
    let parent = request.parent_score();
    pick_best(
        (0..layout.features.len())
            .into_par_iter()
            .map(|i| scan_feature(hist.feature_bins(layout, i), layout.features[i], request, parent))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boosting::bins::fit_bins;
    use crate::features::FeatureMatrix;

    fn setup() -> (BinMapper, BinnedMatrix, Vec<f64>, Vec<f64>) {
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|i| vec![(i % 7) as f64, (i * 13 % 17) as f64, 1.0])
            .collect();
        let m = FeatureMatrix::from_rows(vec!["a".into(), "b".into(), "c".into()], rows, Vec::new()).unwrap();
        let mapper = fit_bins(&m, 255).unwrap();
        let binned = mapper.bin_matrix(&m);
        let grad = (0..60).map(|i| ((i * 31 % 11) as f64 - 5.0) / 7.0).collect();
        let hess = (0..60).map(|i| 0.1 + (i % 3) as f64 * 0.05).collect();
        (mapper, binned, grad, hess)
    }

    #[test]
    fn constant_features_have_no_histogram() {
        let (mapper, ..) = setup();
        assert_eq!(HistogramLayout::new(&mapper).features(), &[0, 1]);
    }

    #[test]
    fn sibling_histograms_add_to_parent() {
        let (mapper, binned, grad, hess) = setup();
        let layout = HistogramLayout::new(&mapper);
        let parent = Histogram::build(&layout, &binned, None, &grad, &hess);
        let left: Vec<u32> = (0..60).filter(|r| r % 4 == 0).collect();
        let right: Vec<u32> = (0..60).filter(|r| r % 4 != 0).collect();
        let hl = Histogram::build(&layout, &binned, Some(&left), &grad, &hess);
        let hr = Histogram::build(&layout, &binned, Some(&right), &grad, &hess);
        let mut derived = parent.clone();
        derived.subtract(&hl);
        for ((p, (l, r)), d) in parent.bins.iter().zip(hl.bins.iter().zip(&hr.bins)).zip(&derived.bins) {
            assert_eq!(p.count, l.count + r.count);
            assert_eq!(d.count, r.count);
            assert!((p.grad - (l.grad + r.grad)).abs() < 1e-12);
            assert!((p.hess - (l.hess + r.hess)).abs() < 1e-12);
            assert!((d.grad - r.grad).abs() < 1e-12);
        }
    }

    #[test]
    fn split_respects_min_samples_leaf() {
        let (mapper, binned, grad, hess) = setup();
        let layout = HistogramLayout::new(&mapper);
        let h = Histogram::build(&layout, &binned, None, &grad, &hess);
        let total = h.totals(&layout, 0);
        let s = best_split(&h, &layout, total, SplitParams { l2: 0.0, min_samples_leaf: 5 }).unwrap();
        assert!(s.gain > 0.0);
        assert!(s.left.count >= 5 && s.right.count >= 5);
        assert_eq!(s.left.count + s.right.count, 60);
        assert!(best_split(&h, &layout, total, SplitParams { l2: 0.0, min_samples_leaf: 31 }).is_none());
    }
}
