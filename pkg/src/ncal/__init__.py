"""Neural recalibration toolkit for fixed multi-camera infrared rigs.

Submodules
----------
geometry   projection, distortion, rotation representations, Jacobians
scene      rig/object definitions, pose synthesis, perturbation, batching
nn         dense-tensor autodiff, point-based transformer, optimizer, checkpoints
losses     parameter / geodesic / reprojection losses and the compound loss
training   training loop, evaluation, decalibration detection
baseline   Levenberg-Marquardt bundle adjustment and runtime comparisons
dataset    binary dataset files written by the `synth` command
cli        command-line entry point (`ncal`)
"""

__version__ = "0.1.0"
