use crate::text::CoarseTag;

/// Tag counts per coarse tag, in [`CoarseTag::ALL`] order.
pub fn tag_counts(tags: &[CoarseTag]) -> [usize; 6] {
    let mut counts = [0; 6];
    for tag in tags {
        counts[CoarseTag::ALL.iter().position(|t| t == tag).unwrap()] += 1;
    }
    counts
}

/// Sum over coarse tags of the absolute difference in tag counts.
pub fn pos_distance(source: &[CoarseTag], hypothesis: &[CoarseTag]) -> usize {
    let (a, b) = (tag_counts(source), tag_counts(hypothesis));
    a.iter().zip(&b).map(|(x, y)| x.abs_diff(*y)).sum()
}
