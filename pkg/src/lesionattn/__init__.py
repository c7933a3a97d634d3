"""Synthetic radiograph testbed for attention-feedback lesion localisation.

Two trainable architectures share one corpus and one evaluation kit:

* ``conaf``: a convolutional network with a classification branch and a
  dense localisation branch trained against Gaussian target masks.
* ``ramaf``: a recurrent glimpse agent whose location policy is trained
  with REINFORCE and a spatial reward on annotated examples.

Weak labels come from a small rule-based report labeller in ``nlplabel``;
images and reports are generated by ``synthgen``.
"""

__version__ = "0.1.0"
