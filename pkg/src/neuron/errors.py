"""Exception types shared across the package.

Every error carries a stable ``code`` string; the HTTP service puts it in its
error envelope and the CLI maps it to an exit code.
"""


class NeuronError(Exception):
    """Base class for all errors raised by this package."""

    code = "internal"


# --- plan ingest ---

class EmptyInput(NeuronError):
    code = "empty_input"


class MalformedPlan(NeuronError):
    code = "malformed_plan"


class ConnectionFailure(NeuronError):
    code = "connection_failure"


class QueryError(NeuronError):
    """Server-side SQL error; the server message is passed through."""

    code = "query_error"


# --- operator tree ---

class UnsupportedShape(NeuronError):
    code = "unsupported_shape"


# --- definition index ---

class EmptyCorpus(NeuronError):
    code = "empty_corpus"


class DuplicateDocId(NeuronError):
    code = "duplicate_doc_id"


# --- question processor ---

class EmptyClass(NeuronError):
    code = "empty_class"


class NoStepReference(NeuronError):
    code = "no_step_reference"


class AmbiguousStepReference(NeuronError):
    code = "ambiguous_step_reference"


# --- answer generator ---

class NoDefinitionFound(NeuronError):
    code = "no_definition_found"


class UnknownStep(NeuronError):
    code = "unknown_step"


class NoRuntimeStats(NeuronError):
    code = "no_runtime_stats"


# --- vocalizer ---

class FeatureDisabled(NeuronError):
    code = "feature_disabled"


class TTSUnavailable(NeuronError):
    code = "tts_unavailable"


# --- service ---

class UnknownPlan(NeuronError):
    code = "unknown_plan"


class NoLiveConnection(NeuronError):
    code = "no_live_connection"


class UnknownSession(NeuronError):
    code = "unknown_session"


class BadRequest(NeuronError):
    code = "bad_request"
