/// One-dimensional monotone rearrangement: the input values sorted
/// nondecreasingly.
pub fn monotone_rearrange(values: &[f64]) -> Vec<f64> {
    let mut out = values.to_vec();
    out.sort_by(f64::total_cmp);
    out
}
