//! Linguistically driven acoustic embedding selection for VAE-based speech
//! synthesis.
//!
//! For each test sentence the engine picks the training utterance whose
//! linguistic representation (syntactic distance vector, contextual word
//! embedding, or both) is most similar, and reuses that utterance's acoustic
//! embedding. In paragraph mode the choice also penalizes acoustic jumps
//! from the previous sentence's embedding, measured in a 2-D PCA projection.

pub mod cli;
pub mod projector;
pub mod select;
pub mod simil;
pub mod store;
pub mod sweep;
pub mod syndist;
pub mod treebank;

pub use projector::{Projector, ProjectorError, Scale};
pub use select::{
    loss, select_paragraph, select_sentence, select_sentence_top_k, SelectError,
    SelectionConfig, SelectionResult,
};
pub use simil::{
    combined_similarity, cosine, syntactic_similarity, SentenceRepr, Similarity,
    SimilarityError, SimilarityMode,
};
pub use store::{ingest, load_index, save_index, Corpus, CorpusRecord, Index, StoreError};
pub use sweep::{sweep, SweepError, SweepPoint};
pub use syndist::{binarize_right, collapse_unary, distance_vector, DistanceVector};
pub use treebank::{parse_tree, serialize_tree, tokens, ParseTree, TreeError};
