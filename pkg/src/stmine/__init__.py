"""stmine: batch mining of timestamped, quality-scored speech-translation corpora.

The toolkit turns raw source material (audio features, transcripts,
candidate translations) into filtered parallel corpora: transcript
normalization, CTC forced alignment against ASR log-posteriors, VAD-based
chunking, embedding-based bitext mining, threshold filtering on the
(sigma, tau) quality scores, deterministic test-set sampling, and chrF++
evaluation of external translation output.
"""

__version__ = "0.1.0"
