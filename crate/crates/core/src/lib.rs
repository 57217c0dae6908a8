mod lex;
pub mod embeddings;
pub mod rdf;
pub mod scalar;
pub mod sparql;
pub mod linking;
pub mod subgraphs;
pub mod similarity;
pub mod alignment;
pub mod evaluation;
pub mod pipeline;
pub mod config;
pub mod cli;

pub use alignment::{Alignment, Correspondence, Expression};
pub use embeddings::{EmbeddingStore, EmbeddingVector};
pub use rdf::{KnowledgeGraph, Term};
pub use scalar::Scalar;
pub use similarity::{SettingKind, SimilaritySetting};

pub type Embedding = EmbeddingVector<f64>;
pub type Store = EmbeddingStore<f64>;
pub type Embedding32 = EmbeddingVector<f32>;
pub type Store32 = EmbeddingStore<f32>;
