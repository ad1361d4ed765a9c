from .kmeans import (
    DegenerateClustering,
    KMeansDaviesBouldin,
    Labeling,
    davies_bouldin,
    kmeans_fit,
)
from .nmf import NMFFit, NMFkSilhouette, nmf_fit, nmfk_scores, nmfk_silhouette
from .synthetic import (
    LaplacianPeak,
    SquareWave,
    SquareWaveSpec,
    TableScore,
    laplacian_peak_score,
    square_wave_score,
)

__all__ = [
    "DegenerateClustering", "KMeansDaviesBouldin", "Labeling", "davies_bouldin",
    "kmeans_fit", "NMFFit", "NMFkSilhouette", "nmf_fit", "nmfk_scores",
    "nmfk_silhouette", "LaplacianPeak", "SquareWave", "SquareWaveSpec",
    "TableScore", "laplacian_peak_score", "square_wave_score",
]
