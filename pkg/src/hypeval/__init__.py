"""hypeval: score ASR transcription hypotheses against human preference.

Lexical error rates (WER/CER), semantic distance over pooled decoder-LLM
token embeddings, pairwise LLM judging, and four-class quality labeling,
all reported as agreement with annotator majority votes.
"""

__version__ = "0.1.0"

from .corpus import (  # noqa: F401
    AgreementSubset,
    Corpus,
    CorpusLoadError,
    EvalItem,
    GoldPreference,
    annotator_agreement,
    gold_preference,
    load_corpus,
    subset,
    write_corpus,
)
from .lexical import EditCounts, NormalizationConfig, cer, edit_distance, tokenize, wer  # noqa: F401
from .llm import (  # noqa: F401
    ChatMessage,
    FileEmbedder,
    LlmClient,
    ModelConfig,
    TokenEmbeddingSequence,
    cache_key,
    load_embedding_file,
)
from .semantic import PoolingStrategy, cosine, pool, semdist  # noqa: F401
from .judge import Verdict, build_judge_prompt, judge_corpus, judge_item, parse_verdict  # noqa: F401
from .classify import QualityLabel, build_classify_prompt, classify_corpus, parse_label  # noqa: F401
from .analysis import (  # noqa: F401
    AgreementRow,
    BoxplotStats,
    Preference,
    agreement_table,
    class_distributions,
    metric_preference,
    pooling_matrix,
    verdict_preferences,
)
