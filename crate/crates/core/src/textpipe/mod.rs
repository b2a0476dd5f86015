//! Corpus ingestion: preprocessing, vocabulary, splits, pretrained vectors,
//! sentiment lexicons, and the synthetic marker corpus.

pub mod corpus;
pub mod embeddings;
pub mod lexicon;
pub mod preprocess;
pub mod synth;
pub mod vocab;

pub use corpus::{read_manifest, read_style_files, read_style_files_with, write_manifest, write_sentences, split_corpus, CorpusSplits, IngestStats, Split, SplitPolicy, StyledCorpus};
pub use embeddings::EmbeddingTable;
pub use lexicon::{filter_sentiment, SentimentLexicon};
pub use preprocess::{is_special, preprocess, split_pretokenized, tokenize, Rejection, MAX_TOKENS, NUM_TOKEN};
pub use synth::{synth_corpus, synth_embedding_table};
pub use vocab::{Vocabulary, EOS_ID, GO_ID, PAD_ID, UNK_ID};
