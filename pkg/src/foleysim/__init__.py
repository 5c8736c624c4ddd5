"""foleysim: desk-scale AR session simulator with automatic sound authoring.

A simulated interactive session produces sound-producing events; each event
is described in text, routed through a pluggable chat-model controller, and
sonified by four concurrent acquisition methods (library recommendation,
online retrieval, text-to-audio generation, and duration-preserving
transfer). A human reviews, selects, and iterates on the candidates through
the HTTP session API or the bundled authoring panel.
"""

__version__ = "0.1.0"
