use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ragresearch::clients::{HashTextEmbedder, HashTokenEmbedder};
use ragresearch::retrieval::{
    batch_search, build_index, maxsim_score, search, Index, TokenEmbeddingMatrix,
};
use ragresearch::snippets::{chunk_passage, filter_snippets};
use ragresearch::{Passage, Question};

const WORDS: &[&str] = &[
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
    "children",
    "hands",
    "wash",
    "outside",
    "market",
    "epidemic",
    "rare",
    "cases",
];

fn text(rng: &mut ChaCha8Rng, n: usize) -> String {
    (0..n)
        .map(|_| WORDS[rng.gen_range(0..WORDS.len())])
        .collect::<Vec<_>>()
        .join(" ")
}

fn matrix(rng: &mut ChaCha8Rng, rows: usize, dim: usize) -> TokenEmbeddingMatrix {
    let raw: Vec<Vec<f64>> = (0..rows)
        .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    TokenEmbeddingMatrix::from_rows_normalized(&raw).unwrap()
}

fn corpus(n: usize, embedder: &HashTokenEmbedder) -> Index {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let passages = (0..n)
        .map(|i| Passage {
            doc_id: format!("doc{:05}", i / 4),
            passage_index: i % 4,
            token_span: (0, 120),
            text: text(&mut rng, 120),
        })
        .collect();
    build_index(passages, embedder, 450).unwrap().0
}

fn bench_maxsim(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut group = c.benchmark_group("maxsim");
    for (q, p, dim) in [(8, 128, 64), (32, 450, 128)] {
        let query = matrix(&mut rng, q, dim);
        let passage = matrix(&mut rng, p, dim);
        group.bench_function(BenchmarkId::from_parameter(format!("{q}x{p}x{dim}")), |b| {
            b.iter(|| maxsim_score(black_box(&query), black_box(&passage)).unwrap())
        });
    }
    group.finish();
}

fn bench_search(c: &mut Criterion) {
    let embedder = HashTokenEmbedder::new(32, 0);
    let index = corpus(2000, &embedder);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let queries: Vec<String> = (0..16).map(|_| text(&mut rng, 8)).collect();

    let mut group = c.benchmark_group("search_2000_passages");
    group.sample_size(20);
    group.bench_function("single_k3", |b| {
        b.iter(|| search(&index, &queries[0], &embedder, 3).unwrap())
    });
    group.bench_function("sequential_16", |b| {
        b.iter(|| {
            for q in &queries {
                black_box(search(&index, q, &embedder, 3).unwrap());
            }
        })
    });
    group.bench_function("batch_16", |b| {
        b.iter(|| batch_search(&index, &queries, &embedder, 3))
    });
    group.finish();
}

fn bench_snippets(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let passages: Vec<Passage> = (0..9)
        .map(|i| Passage {
            doc_id: format!("d{i}"),
            passage_index: 0,
            token_span: (0, 450),
            text: text(&mut rng, 450),
        })
        .collect();
    let embedder = HashTextEmbedder::new(64, 0);
    let question = Question::new("q", "can geese give me bird flu");
    c.bench_function("chunk_and_filter_9_passages", |b| {
        b.iter(|| {
            let snippets = passages
                .iter()
                .flat_map(|p| chunk_passage(p, 1000, 100).unwrap())
                .collect();
            filter_snippets(&question, snippets, &embedder, 0.35).unwrap()
        })
    });
}

criterion_group!(benches, bench_maxsim, bench_search, bench_snippets);
criterion_main!(benches);
