"""padbench: benchmark toolkit for ID-card presentation-attack-detection
research.

Submodules:

* ``imaging``   -- raster buffers, PNG/JPEG IO, warp/crop/mask primitives
* ``features``  -- binary local features and Hamming matching
* ``geometry``  -- normalized DLT and RANSAC homography estimation
* ``pipeline``  -- frame preprocessing and attack/bona-fide alignment
* ``dataset``   -- manifests, subject-level splits, training compositions
* ``metrics``   -- ISO/IEC 30107-3 error rates, DET curves, EER, probit
* ``fid``       -- Frechet distance between embedding sets (PADEMB1 files)
* ``cli``       -- the ``padbench`` command
"""

__version__ = "0.1.0"
