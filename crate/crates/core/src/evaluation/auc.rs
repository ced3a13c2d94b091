use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AucResult {
    pub auc: f64,
    pub n_pos: usize,
    pub n_neg: usize,
}

/// Area under the ROC curve in the Mann-Whitney form: the share of
/// (outlier, inlier) pairs in which the outlier scores higher, with ties
/// counting one half.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<AucResult> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: scores.len(),
            found: labels.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::param("scores", "contain NaN"));
    }
    if let Some(&l) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::InvalidLabel { value: l as f64 });
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // sweep ascending; count negatives strictly below each tie block
    let (mut concordant, mut ties, mut neg_below) = (0u64, 0u64, 0u64);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let mut j = i;
        let (mut pos, mut neg) = (0u64, 0u64);
        while j < order.len() && scores[order[j]] == s {
            if labels[order[j]] == 1 {
                pos += 1;
            } else {
                neg += 1;
            }
            j += 1;
        }
        concordant += pos * neg_below;
        ties += pos * neg;
        neg_below += neg;
        i = j;
    }

    let auc = (concordant as f64 + 0.5 * ties as f64) / (n_pos as f64 * n_neg as f64);
    Ok(AucResult { auc, n_pos, n_neg })
}
