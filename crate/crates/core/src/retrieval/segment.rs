use super::tokenizer::Tokenizer;
use super::RetrievalError;
use crate::types::{Document, Passage};

/// Cuts a document into consecutive, non-overlapping passages of
/// `passage_tokens` tokens; only the last passage may be shorter.
///
/// Passage text is the slice of the original document from the first token's
/// start to the last token's end, so interior whitespace is kept verbatim.
pub fn segment_document(
    doc: &Document,
    passage_tokens: usize,
    tokenizer: &dyn Tokenizer,
) -> Result<Vec<Passage>, RetrievalError> {
    if passage_tokens == 0 {
        return Err(RetrievalError::InvalidArgument(
            "passage_tokens must be at least 1".into(),
        ));
    }
    let tokens = tokenizer.tokenize(&doc.text);
    Ok(tokens
        .chunks(passage_tokens)
        .enumerate()
        .map(|(i, chunk)| {
            let start = i * passage_tokens;
            let bytes = chunk[0].start..chunk[chunk.len() - 1].end;
            Passage {
                doc_id: doc.doc_id.clone(),
                passage_index: i,
                token_span: (start, start + chunk.len()),
                text: doc.text[bytes].to_string(),
            }
        })
        .collect())
}

/// Segments every document in order.
pub fn segment_corpus(
    docs: &[Document],
    passage_tokens: usize,
    tokenizer: &dyn Tokenizer,
) -> Result<Vec<Passage>, RetrievalError> {
    let mut out = Vec::new();
    for d in docs {
        out.extend(segment_document(d, passage_tokens, tokenizer)?);
    }
    Ok(out)
}
