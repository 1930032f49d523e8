//! Helpers shared by the integration tests: random corpora and brute-force
//! oracles that do not go through the library's scoring code.

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ragresearch::retrieval::{Index, TokenEmbeddingMatrix};
use ragresearch::{Document, Passage, Question};

pub const VOCAB: &[&str] = &[
    "geese",
    "park",
    "bird",
    "flu",
    "droppings",
    "virus",
    "human",
    "risk",
    "poultry",
    "eggs",
    "cooked",
    "safe",
    "wild",
    "water",
    "pond",
    "spread",
    "infection",
    "avian",
    "influenza",
    "h5n1",
    "pigeon",
    "hawk",
    "pest",
    "control",
    "children",
    "hands",
    "wash",
    "outside",
    "napoleon",
    "waterloo",
    "homing",
    "market",
    "epidemic",
    "slump",
    "incubation",
    "period",
    "days",
    "seasonal",
    "rare",
    "cases",
    "public",
    "health",
    "agency",
    "report",
    "tattoo",
    "needle",
    "curve",
    "magnum",
    "skin",
    "elbow",
];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_text(rng: &mut ChaCha8Rng, words: usize) -> String {
    (0..words)
        .map(|_| *VOCAB.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Up to `max` passages over a few documents; roughly one in ten duplicates an
/// earlier passage's text so ties occur.
pub fn random_passages(rng: &mut ChaCha8Rng, max: usize) -> Vec<Passage> {
    let n = rng.gen_range(1..=max);
    let mut out: Vec<Passage> = Vec::with_capacity(n);
    for i in 0..n {
        let doc = format!("doc{:02}", rng.gen_range(0..(n / 3 + 1)));
        let text = if i > 0 && rng.gen_bool(0.1) {
            out[rng.gen_range(0..i)].text.clone()
        } else {
            let len = rng.gen_range(3..40);
            random_text(rng, len)
        };
        out.push(Passage {
            doc_id: doc,
            passage_index: i,
            token_span: (0, text.split_whitespace().count()),
            text,
        });
    }
    out
}

pub fn random_documents(
    rng: &mut ChaCha8Rng,
    n: usize,
    words: std::ops::Range<usize>,
) -> Vec<Document> {
    (0..n)
        .map(|i| {
            let len = rng.gen_range(words.clone());
            Document::new(format!("doc{i:03}"), random_text(rng, len))
        })
        .collect()
}

pub fn random_questions(rng: &mut ChaCha8Rng, n: usize) -> Vec<Question> {
    (0..n)
        .map(|i| {
            let len = rng.gen_range(3..9);
            Question::new(format!("q{i:03}"), random_text(rng, len))
        })
        .collect()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, dim: usize) -> TokenEmbeddingMatrix {
    let raw: Vec<Vec<f64>> = (0..rows)
        .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    TokenEmbeddingMatrix::from_rows_normalized(&raw).unwrap()
}

/// Plain double loop: for each query row, best dot product over passage rows.
pub fn brute_maxsim(query: &TokenEmbeddingMatrix, passage: &TokenEmbeddingMatrix) -> f64 {
    let mut total = 0.0;
    for i in 0..query.rows() {
        let mut best = f64::NEG_INFINITY;
        for j in 0..passage.rows() {
            let mut d = 0.0;
            for t in 0..query.dim() {
                d += f64::from(query.row(i)[t]) * f64::from(passage.row(j)[t]);
            }
            if d > best {
                best = d;
            }
        }
        total += best;
    }
    total
}

/// Scores every passage, sorts by score desc then key asc, keeps `k`.
pub fn brute_top_k(
    index: &Index,
    query: &TokenEmbeddingMatrix,
    k: usize,
) -> Vec<(String, usize, f64)> {
    let mut all: Vec<(String, usize, f64)> = index
        .passage_table()
        .iter()
        .zip(index.embeddings())
        .map(|(key, m)| {
            (
                key.doc_id.clone(),
                key.passage_index,
                brute_maxsim(query, m),
            )
        })
        .collect();
    all.sort_by(|a, b| {
        b.2.partial_cmp(&a.2)
            .unwrap()
            .then_with(|| (&a.0, a.1).cmp(&(&b.0, b.1)))
    });
    all.truncate(k);
    all
}
