"""Case-based explanations for CNN bearing-fault classifiers.

Envelope order spectra feed a small 1D CNN; Grad-CAM activation vectors of
training samples form a health library, and each prediction is explained by
the closest library entries of the predicted class.
"""

__version__ = "0.1.0"
