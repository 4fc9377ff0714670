"""Entity-aware prompt refinement and image-generation evaluation toolchain.

The pipeline: build caption+entity datasets backed by Wikipedia abstracts,
augment captions with entity descriptions, summarize the augmentation under
a CLIP-token budget with an LLM, assemble prompts for five method variants,
audit token-limit violations, and score generated images (IS, FID,
CLIPScore) from serialized feature files.
"""

from .audit import AuditReport, audit_prompts, format_audit_table
from .featureio import read_features, write_features
from .metrics import (
    GaussianStats,
    MetricReport,
    aggregate_report,
    clip_score_img_img,
    clip_score_txt_img,
    format_report_table,
    frechet_distance,
    gaussian_stats,
    inception_score,
)
from .promptgen import (
    AssembledPrompt,
    GeneratedImageRef,
    ImageGenClient,
    ImageGenRequest,
    PromptMethod,
    assemble_prompt,
    generate_image,
)
from .refine import (
    AugmentedDescription,
    LlmClient,
    LlmParams,
    SummarizeConfig,
    SummaryMethod,
    SummaryResult,
    build_augmentation,
    extract_summary,
    llm_complete,
    params_for_method,
    render_summary_prompt,
    summarize,
)
from .tokenizer import (
    BudgetStatus,
    TokenBudget,
    Vocabulary,
    check_budget,
    count_tokens,
    default_vocabulary,
    encode,
    load_vocabulary,
)
from .witcub import (
    Dataset,
    DatasetStats,
    EntityEntry,
    WikipediaClient,
    WitCubInstance,
    build_dataset,
    compute_stats,
    fetch_entity_description,
    load_dataset,
    match_entities,
    save_dataset,
)

__version__ = "0.1.0"
