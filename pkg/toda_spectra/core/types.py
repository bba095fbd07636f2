MYPY = False
if MYPY:
    import numpy as np

    # Eigenvalue indices run over 0..2N-1; gap and band indices `n`, `k`
    # and `j` are 1-based like the band/gap they name.
    Array = np.ndarray
    GapIndex = int
    BandIndex = int
    Side = str  # "below" is μ − i0, "above" is μ + i0
