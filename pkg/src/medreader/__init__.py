"""medreader: augments medical research papers for lay readers.

Four features ride on one pipeline: linked term definitions, plain-
language section gists, a key question index with answering passages,
and answer gists. A bundle service persists the results and serves them
to the browser reader, which logs usage telemetry back.
"""

__version__ = "0.1.0"
