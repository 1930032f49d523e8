use super::{RetrievalError, TokenEmbeddingMatrix};

#[inline]
fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| f64::from(x) * f64::from(y))
        .sum()
}

/// Late-interaction score: for each query token the best inner product
/// against any passage token, summed over query tokens.
///
/// Not symmetric; the first argument is always the query.
pub fn maxsim_score(
    query: &TokenEmbeddingMatrix,
    passage: &TokenEmbeddingMatrix,
) -> Result<f64, RetrievalError> {
    if query.dim() != passage.dim() {
        return Err(RetrievalError::DimensionMismatch {
            expected: passage.dim(),
            found: query.dim(),
        });
    }
    Ok(query
        .iter_rows()
        .map(|q| {
            passage
                .iter_rows()
                .map(|p| dot(q, p))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .sum())
}
