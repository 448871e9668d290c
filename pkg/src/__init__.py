ARTIFACT_VERSION = '1.0.0'
DEFAULT_SEED = 1729
