"""venuerank: rank publication venues for a manuscript.

Neural text classifiers (single/multi-kernel convolutional and gated
recurrent encoders) with an aims-and-scope cosine-similarity branch, built
on a from-scratch differentiable core with verified gradients. Includes
corpus tooling, an evaluation harness for Accuracy@K ablations, a CLI, and
an HTTP recommendation service.
"""

__version__ = "0.1.0"
