"""Line-of-sight MIMO links with low-resolution receive quantization.

Submodules:
    constellation  Gray-mapped QPSK / 16QAM symbol mapping and slicing
    channel        LoS channel matrices, geometry, crossover phase
    stats          Gaussian cell probabilities and centroids
    quantizer      phase / amplitude-phase / I-Q quantizer design
    infotheory     quantized-channel mutual information
    detection      ML, ZF-centroid and virtual-quantization detectors
    harness        Monte Carlo experiments, CSV/JSON emission, CLI backing
    kernels        hot-loop backends (compiled + NumPy reference)
"""

__version__ = "0.1.0"
