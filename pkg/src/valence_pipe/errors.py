"""Exception hierarchy shared across the pipeline."""


class ValencePipeError(Exception):
    """Base class for every error raised by this package.

    ``stage`` names the pipeline stage that failed and is copied into
    missing-reason columns and CLI error records.
    """

    stage = "pipeline"

    def record(self) -> dict:
        return {"error": type(self).__name__, "stage": self.stage, "message": str(self)}


class IngestError(ValencePipeError, ValueError):
    stage = "ingest"


class PreprocessError(ValencePipeError, ValueError):
    stage = "preprocess"


class HrvError(ValencePipeError, ValueError):
    stage = "hrv"


class AffectError(ValencePipeError, ValueError):
    stage = "affect"


class StatsError(ValencePipeError, ValueError):
    stage = "stats"


class ClassifyError(ValencePipeError, ValueError):
    stage = "classify"


class SynthError(ValencePipeError, ValueError):
    stage = "synth"


class ConfigError(ValencePipeError, ValueError):
    stage = "config"
