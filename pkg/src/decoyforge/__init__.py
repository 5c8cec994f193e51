"""decoyforge: audit multiple-choice visual QA datasets for answer-set
shortcuts and regenerate decoys that remove them."""

__version__ = "0.1.0"

from .corpus import (
    Corpus,
    CorpusFormatError,
    FeatureStore,
    TripletRecord,
    ValidationReport,
    filter_yes_no,
    load_corpus,
    split_view,
    validate,
    write_corpus,
)
from .text import (
    EmbeddingTable,
    QuestionIndex,
    SentenceVector,
    cosine,
    embed_avg,
    normalize,
    normalized_text,
    topn_similar_questions,
)
from .wordnet import (
    Synset,
    Taxonomy,
    TaxonomyError,
    load_taxonomy,
    wup_sequence,
    wup_synset,
    wup_word,
)
from .decoygen import (
    CandidateSet,
    DecoyGenConfig,
    GenerationReport,
    assemble,
    fill_fallback,
    gen_iou_decoys,
    gen_qou_decoys,
    is_ambiguous,
    load_candidate_sets,
    remediate_corpus,
    string_filter,
    write_candidate_sets,
)
from .audit import (
    BiasTable,
    answer_prior,
    bias_rule_accuracy,
    build_bias_table,
    frequency_stats,
    top_biased,
)
from .model import (
    DivergenceError,
    JointFeature,
    MlpParams,
    TrainConfig,
    build_features,
    evaluate,
    grad_check,
    init_params,
    load_checkpoint,
    predict,
    save_checkpoint,
    score,
    train,
)
from .synthetic import SyntheticWorld, make_embedding_table, make_planted_corpus
