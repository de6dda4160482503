"""Exception taxonomy shared by all pipeline stages.

Every error carries a ``kind`` so the CLI can map failures onto exit codes
(usage=1, data=2, external=3) without inspecting concrete classes.
"""


class CollexError(Exception):
    kind = "data"


class UsageError(CollexError):
    kind = "usage"


class ExternalServiceError(CollexError):
    kind = "external"


# corpus
class CorpusFormatError(CollexError):
    """More than half of the input lines failed to parse: wrong format."""


class CorpusIntegrityError(CollexError):
    """Duplicate tweet id within one corpus."""


# extract
class ExtractionError(ExternalServiceError):
    def __init__(self, message: str, tweet_id: str | None = None):
        super().__init__(message)
        self.tweet_id = tweet_id


class ResponseValidationError(CollexError):
    """Remote extractor returned a span violating mention invariants."""


# normalize
class RuleCycleError(CollexError):
    def __init__(self, phrase: str, passes: int):
        super().__init__(
            f"rewrite rules did not reach a fixpoint after {passes} passes "
            f"for phrase {phrase!r}"
        )
        self.phrase = phrase


class EmptyInputError(CollexError):
    pass


# mapping
class MissingEmbeddingError(CollexError):
    def __init__(self, terms):
        terms = sorted(terms)
        super().__init__(f"no embedding for {len(terms)} term(s): {terms[:10]}")
        self.terms = terms


class DegenerateVectorError(CollexError):
    pass


class InventoryError(CollexError):
    pass


class InsufficientDataError(CollexError):
    pass


class ConfigurationError(UsageError):
    pass


# curation
class AdjudicationIntegrityError(CollexError):
    pass


class IncompleteRoundError(CollexError):
    def __init__(self, message: str, missing=()):
        super().__init__(message)
        self.missing = list(missing)


class AdoptionConflictError(CollexError):
    def __init__(self, lemma: str, existing: str, proposed: str):
        super().__init__(
            f"lemma {lemma!r} already adopted under {existing}, "
            f"cannot re-adopt under {proposed}; re-adjudication required"
        )
        self.lemma = lemma


class UndefinedAccuracyError(CollexError):
    """Every sampled pair was labeled non-symptom: accuracy has no denominator."""


# annotation service
class AuthorizationError(CollexError):
    pass


class PairNotFoundError(CollexError):
    pass


class ValidationError(CollexError):
    pass


class IncompleteAdjudicationError(CollexError):
    def __init__(self, pair_ids):
        pair_ids = sorted(pair_ids)
        super().__init__(f"unresolved disagreements for pairs: {pair_ids}")
        self.pair_ids = pair_ids


# analytics
class IntegrityError(CollexError):
    pass
